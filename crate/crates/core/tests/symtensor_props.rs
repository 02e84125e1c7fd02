use std::collections::BTreeMap;

use divray::symtensor::{
    component_count, multi_indices, polarization_family, polarize, subset_sum, symmetrize, RawTensor, SymTensor,
};
use proptest::prelude::*;

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Full-index tensor filled from `values`, in general not symmetric.
fn raw(n: usize, m: usize, values: &[f64]) -> RawTensor {
    let mut it = values.iter().cycle();
    RawTensor::from_fn(n, m, |_| *it.next().unwrap())
}

fn permutations(v: &[usize]) -> Vec<Vec<usize>> {
    if v.len() <= 1 {
        return vec![v.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..v.len() {
        let mut rest = v.to_vec();
        let head = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, head);
            out.push(p);
        }
    }
    out
}

fn dims() -> impl Strategy<Value = (usize, usize)> {
    (2usize..=3, 1usize..=4)
}

proptest! {
    #[test]
    fn stored_count_is_binomial((n, m) in dims()) {
        prop_assert_eq!(component_count(n, m), binomial(n + m - 1, m));
        prop_assert_eq!(multi_indices(n, m).len(), binomial(n + m - 1, m));
    }

    #[test]
    fn values_ignore_index_order((n, m) in dims(), values in prop::collection::vec(-1.0f64..1.0, 81)) {
        let f = symmetrize(&raw(n, m, &values));
        for idx in multi_indices(n, m) {
            for p in permutations(&idx) {
                prop_assert_eq!(f.get(&p), f.get(&idx));
            }
        }
    }

    #[test]
    fn symmetrize_is_idempotent((n, m) in dims(), values in prop::collection::vec(-1.0f64..1.0, 81)) {
        let once = symmetrize(&raw(n, m, &values));
        let twice = symmetrize(&once.to_raw());
        for (a, b) in once.components().iter().zip(twice.components()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn contraction_is_homogeneous(
        (n, m) in dims(),
        values in prop::collection::vec(-1.0f64..1.0, 15),
        xi in prop::collection::vec(-1.0f64..1.0, 3),
        lambda in -3.0f64..3.0,
    ) {
        let f = SymTensor::from_components(n, m, values[..component_count(n, m)].to_vec()).unwrap();
        let scaled: Vec<f64> = xi[..n].iter().map(|v| lambda * v).collect();
        let lhs = f.contract_power(&scaled).unwrap();
        let rhs = lambda.powi(m as i32) * f.contract_power(&xi[..n]).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
    }

    #[test]
    fn family_layout(m in 1usize..=6) {
        let family = polarization_family(m).unwrap();
        prop_assert_eq!(family.entries.len(), (1 << m) - 1);
        for term in &family.entries {
            prop_assert!(term.subset.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(term.subset.iter().all(|&j| j < m));
        }
    }

    #[test]
    fn polarization_recovers_symmetric_product(
        (n, m) in dims(),
        values in prop::collection::vec(-1.0f64..1.0, 15),
        xs in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let f = SymTensor::from_components(n, m, values[..component_count(n, m)].to_vec()).unwrap();
        let xis: Vec<&[f64]> = xs.chunks(3).take(m).map(|c| &c[..n]).collect();
        let family = polarization_family(m).unwrap();
        let samples: BTreeMap<Vec<usize>, f64> = family
            .entries
            .iter()
            .map(|t| (t.subset.clone(), f.contract_power(&subset_sum(&xis, &t.subset)).unwrap()))
            .collect();
        let lhs = polarize(&samples, &family).unwrap();
        let product = symmetrize(&RawTensor::outer(&xis).unwrap()).to_raw();
        let rhs: f64 = f.to_raw().data().iter().zip(product.data()).map(|(a, b)| a * b).sum();
        prop_assert!((lhs - rhs).abs() < 1e-10, "{} vs {}", lhs, rhs);
    }
}

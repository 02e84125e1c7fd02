//! Symmetric tensor algebra over `R^n`.
//!
//! A symmetric `m`-tensor is stored once per nondecreasing multi-index
//! `(i_1 <= ... <= i_m)`, in lexicographic order. Full `n^m` index views are
//! materialized only on demand; contractions weight each stored component by
//! its multiplicity so that sums range over every index tuple.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Number of stored components of a symmetric `order`-tensor over `R^dim`,
/// `binomial(dim + order - 1, order)`.
pub fn component_count(dim: usize, order: usize) -> usize {
    if dim == 0 {
        return usize::from(order == 0);
    }
    if order == 0 {
        return 1;
    }
    if order == 1 {
        return dim;
    }
    // acc stays an exact binomial after each division
    let mut acc: u128 = 1;
    for i in 0..order as u128 {
        acc = acc * (dim as u128 + i) / (i + 1);
    }
    acc as usize
}

/// All nondecreasing multi-indices of length `order` over `0..dim`, in
/// lexicographic order.
pub fn multi_indices(dim: usize, order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(component_count(dim, order));
    let mut current = vec![0usize; order];
    if order == 0 {
        out.push(Vec::new());
        return out;
    }
    if dim == 0 {
        return out;
    }
    loop {
        out.push(current.clone());
        // advance to the next nondecreasing tuple
        let mut pos = order;
        while pos > 0 && current[pos - 1] == dim - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        let v = current[pos - 1] + 1;
        for c in current.iter_mut().skip(pos - 1) {
            *c = v;
        }
    }
    out
}

/// Number of distinct rearrangements of a multi-index, `m! / prod(c_i!)`.
pub fn multiplicity(index: &[usize]) -> u64 {
    let mut sorted = index.to_vec();
    sorted.sort_unstable();
    let mut result: u64 = 1;
    let mut run = 0u64;
    for (pos, window) in sorted.iter().enumerate() {
        if pos > 0 && sorted[pos - 1] == *window {
            run += 1;
        } else {
            run = 1;
        }
        // result *= (pos + 1) / run, kept integral by multiplying first
        result = result * (pos as u64 + 1) / run;
    }
    result
}

/// Position of an arbitrary (not necessarily sorted) multi-index among the
/// stored components.
pub fn component_position(dim: usize, index: &[usize]) -> usize {
    let mut stack = [0usize; 16];
    let mut heap;
    let sorted: &mut [usize] = if index.len() <= stack.len() {
        let buf = &mut stack[..index.len()];
        buf.copy_from_slice(index);
        buf
    } else {
        heap = index.to_vec();
        &mut heap
    };
    sorted.sort_unstable();
    // count tuples lexicographically smaller than `sorted`
    let order = sorted.len();
    let mut pos = 0usize;
    let mut lower = 0usize;
    for (slot, &value) in sorted.iter().enumerate() {
        let remaining = order - slot - 1;
        for smaller in lower..value {
            pos += component_count(dim - smaller, remaining);
        }
        lower = value;
    }
    pos
}

fn factorial(m: usize) -> f64 {
    (1..=m).map(|v| v as f64).product()
}

/// A symmetric tensor of order `m` over `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymTensor {
    dim: usize,
    order: usize,
    components: Vec<f64>,
}

impl SymTensor {
    pub fn zeros(dim: usize, order: usize) -> Self {
        Self {
            dim,
            order,
            components: vec![0.0; component_count(dim, order)],
        }
    }

    pub fn from_components(dim: usize, order: usize, components: Vec<f64>) -> Result<Self> {
        let expected = component_count(dim, order);
        if components.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: components.len(),
            });
        }
        Ok(Self { dim, order, components })
    }

    /// Builds a tensor from a function of the sorted multi-index.
    pub fn from_fn(dim: usize, order: usize, mut value: impl FnMut(&[usize]) -> f64) -> Self {
        let components = multi_indices(dim, order).iter().map(|idx| value(idx)).collect();
        Self { dim, order, components }
    }

    pub fn scalar(dim: usize, value: f64) -> Self {
        Self {
            dim,
            order: 0,
            components: vec![value],
        }
    }

    pub fn vector(v: &[f64]) -> Self {
        Self {
            dim: v.len(),
            order: 1,
            components: v.to_vec(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn components_mut(&mut self) -> &mut [f64] {
        &mut self.components
    }

    /// Component for any index tuple (permutations give the same value).
    pub fn get(&self, index: &[usize]) -> f64 {
        self.components[component_position(self.dim, index)]
    }

    pub fn set(&mut self, index: &[usize], value: f64) {
        let pos = component_position(self.dim, index);
        self.components[pos] = value;
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.components.iter_mut().for_each(|c| *c *= factor);
        out
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    /// Full `n^m` row-major view.
    pub fn to_raw(&self) -> RawTensor {
        RawTensor::from_fn(self.dim, self.order, |idx| self.get(idx))
    }

    /// `<f, xi^{(.)m}>`, the contraction with the `m`-th symmetric power.
    pub fn contract_power(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: xi.len(),
            });
        }
        let weights = power_weights(xi, self.order);
        Ok(self.components.iter().zip(&weights).map(|(c, w)| c * w).sum())
    }
}

/// Free-function form of [`SymTensor::contract_power`] that also checks the order.
pub fn contract_power(f: &SymTensor, xi: &[f64], m: usize) -> Result<f64> {
    if f.order != m {
        return Err(Error::OrderMismatch {
            expected: m,
            found: f.order,
        });
    }
    f.contract_power(xi)
}

/// Weights `mult(alpha) * xi^alpha` over the stored multi-indices, so that
/// `<f, xi^m>` is the dot product of the weights with the stored components.
pub fn power_weights(xi: &[f64], order: usize) -> Vec<f64> {
    multi_indices(xi.len(), order)
        .iter()
        .map(|idx| multiplicity(idx) as f64 * idx.iter().map(|&i| xi[i]).product::<f64>())
        .collect()
}

/// A general (not necessarily symmetric) tensor with `n^m` row-major entries.
#[derive(Debug, Clone, PartialEq)]
pub struct RawTensor {
    dim: usize,
    order: usize,
    data: Vec<f64>,
}

impl RawTensor {
    pub fn new(dim: usize, order: usize, data: Vec<f64>) -> Result<Self> {
        let expected = dim.pow(order as u32);
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: data.len(),
            });
        }
        Ok(Self { dim, order, data })
    }

    pub fn from_fn(dim: usize, order: usize, mut value: impl FnMut(&[usize]) -> f64) -> Self {
        let total = dim.pow(order as u32);
        let mut idx = vec![0usize; order];
        let mut data = Vec::with_capacity(total);
        for flat in 0..total {
            let mut rem = flat;
            for slot in (0..order).rev() {
                idx[slot] = rem % dim;
                rem /= dim;
            }
            data.push(value(&idx));
        }
        Self { dim, order, data }
    }

    /// Tensor product of vectors `v_1 (x) ... (x) v_m`.
    pub fn outer(vectors: &[&[f64]]) -> Result<Self> {
        let dim = vectors.first().map_or(0, |v| v.len());
        if let Some(bad) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.len(),
            });
        }
        Ok(Self::from_fn(dim, vectors.len(), |idx| {
            idx.iter().zip(vectors).map(|(&i, v)| v[i]).product()
        }))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        let flat = index.iter().fold(0usize, |acc, &i| acc * self.dim + i);
        self.data[flat]
    }

    fn tensor_product(&self, other: &RawTensor) -> RawTensor {
        RawTensor::from_fn(self.dim, self.order + other.order, |idx| {
            let (a, b) = idx.split_at(self.order);
            self.get(a) * other.get(b)
        })
    }
}

/// Symmetrization `sigma t`: the average of `t` over all permutations of its
/// index slots.
pub fn symmetrize(t: &RawTensor) -> SymTensor {
    let mut out = SymTensor::zeros(t.dim, t.order);
    if t.order == 0 {
        out.components[0] = t.data[0];
        return out;
    }
    let total = t.dim.pow(t.order as u32);
    let mut idx = vec![0usize; t.order];
    for flat in 0..total {
        let mut rem = flat;
        for slot in (0..t.order).rev() {
            idx[slot] = rem % t.dim;
            rem /= t.dim;
        }
        out.components[component_position(t.dim, &idx)] += t.data[flat];
    }
    for (c, idx) in out.components.iter_mut().zip(multi_indices(t.dim, t.order)) {
        *c /= multiplicity(&idx) as f64;
    }
    out
}

/// Symmetric product `u (.) v = sigma(u (x) v)`.
pub fn sym_product(u: &SymTensor, v: &SymTensor) -> Result<SymTensor> {
    if u.dim != v.dim {
        return Err(Error::DimensionMismatch {
            expected: u.dim,
            found: v.dim,
        });
    }
    Ok(symmetrize(&u.to_raw().tensor_product(&v.to_raw())))
}

/// `xi^{(.)m}`, the `m`-th symmetric power of a vector.
pub fn symmetric_power(xi: &[f64], m: usize) -> SymTensor {
    SymTensor::from_fn(xi.len(), m, |idx| idx.iter().map(|&i| xi[i]).product())
}

/// One term `(J, (-1)^{m-k} / m!)` of the polarization decomposition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetTerm {
    /// Strictly increasing 0-based positions `j_1 < ... < j_k` in `0..m`.
    pub subset: Vec<usize>,
    pub coefficient: f64,
}

/// The index sets `J_k^m`, `1 <= k <= m`, with their polarization
/// coefficients. Entries are grouped by increasing `k`, lexicographic within.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetFamily {
    pub order: usize,
    pub entries: Vec<SubsetTerm>,
}

impl SubsetFamily {
    /// Subsets of one size `k`.
    pub fn of_size(&self, k: usize) -> impl Iterator<Item = &SubsetTerm> {
        self.entries.iter().filter(move |e| e.subset.len() == k)
    }
}

fn increasing_subsets(m: usize, k: usize) -> Vec<Vec<usize>> {
    // lexicographic enumeration of k-combinations of 0..m
    let mut out = Vec::new();
    if k == 0 || k > m {
        return out;
    }
    let mut comb: Vec<usize> = (0..k).collect();
    loop {
        out.push(comb.clone());
        let mut pos = k;
        while pos > 0 && comb[pos - 1] == m - k + pos - 1 {
            pos -= 1;
        }
        if pos == 0 {
            break;
        }
        comb[pos - 1] += 1;
        for slot in pos..k {
            comb[slot] = comb[slot - 1] + 1;
        }
    }
    out
}

/// Enumerates `J_k^m` for `k = 1..=m` with coefficients `(-1)^{m-k}/m!`.
pub fn polarization_family(m: usize) -> Result<SubsetFamily> {
    if m == 0 {
        return Err(invalid("m", "polarization needs order m >= 1"));
    }
    let norm = factorial(m);
    let mut entries = Vec::with_capacity((1usize << m) - 1);
    for k in 1..=m {
        let sign = if (m - k).is_multiple_of(2) { 1.0 } else { -1.0 };
        for subset in increasing_subsets(m, k) {
            entries.push(SubsetTerm {
                subset,
                coefficient: sign / norm,
            });
        }
    }
    Ok(SubsetFamily { order: m, entries })
}

/// Combines `<f, Theta_J^{(.)m}>` values, keyed by subset `J`, into
/// `<f, xi_1 (.) ... (.) xi_m>`.
pub fn polarize(values: &BTreeMap<Vec<usize>, f64>, family: &SubsetFamily) -> Result<f64> {
    family.entries.iter().try_fold(0.0, |acc, term| {
        values
            .get(&term.subset)
            .map(|v| acc + term.coefficient * v)
            .ok_or_else(|| Error::MissingSubset(term.subset.clone()))
    })
}

/// Direction sum `Theta_J = sum_{j in J} xi_j`.
pub fn subset_sum(vectors: &[&[f64]], subset: &[usize]) -> Vec<f64> {
    let dim = vectors.first().map_or(0, |v| v.len());
    let mut theta = vec![0.0; dim];
    for &j in subset {
        for (t, v) in theta.iter_mut().zip(vectors[j]) {
            *t += v;
        }
    }
    theta
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn component_counts_match_binomial() {
        assert_eq!(component_count(2, 2), 3);
        assert_eq!(component_count(3, 2), 6);
        assert_eq!(component_count(3, 4), 15);
        assert_eq!(multi_indices(3, 4).len(), 15);
        for (pos, idx) in multi_indices(3, 3).iter().enumerate() {
            assert_eq!(component_position(3, idx), pos);
        }
    }

    #[test]
    fn multiplicities() {
        assert_eq!(multiplicity(&[0, 0]), 1);
        assert_eq!(multiplicity(&[0, 1]), 2);
        assert_eq!(multiplicity(&[0, 0, 1]), 3);
        assert_eq!(multiplicity(&[0, 1, 2]), 6);
        let total: u64 = multi_indices(3, 3).iter().map(|i| multiplicity(i)).sum();
        assert_eq!(total, 27);
    }

    #[test]
    fn symmetrize_two_permutation_average() {
        let t = RawTensor::new(2, 2, vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let s = symmetrize(&t);
        assert_eq!(s.get(&[0, 1]), 0.5);
        assert_eq!(s.get(&[1, 0]), 0.5);
    }

    #[test]
    fn symmetrize_outer_product() {
        let u = [1.0, 2.0, -1.0];
        let v = [0.5, -3.0, 4.0];
        let s = symmetrize(&RawTensor::outer(&[&u, &v]).unwrap());
        for i in 0..3 {
            for j in 0..3 {
                let expected = (u[i] * v[j] + u[j] * v[i]) / 2.0;
                assert!((s.get(&[i, j]) - expected).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn symmetrize_keeps_symmetric_tensors() {
        let f = SymTensor::from_fn(3, 3, |idx| idx.iter().map(|&i| i as f64 + 1.0).sum());
        assert_eq!(symmetrize(&f.to_raw()), f);
    }

    #[test]
    fn sym_product_examples() {
        let e1 = SymTensor::vector(&[1.0, 0.0]);
        let e2 = SymTensor::vector(&[0.0, 1.0]);
        let p = sym_product(&e1, &e2).unwrap();
        assert_eq!(p.get(&[0, 1]), 0.5);
        assert_eq!(p, sym_product(&e2, &e1).unwrap());
        let d = SymTensor::vector(&[1.0, 1.0]);
        let sq = sym_product(&d, &d).unwrap();
        assert_eq!(sq.components(), &[1.0, 1.0, 1.0]);
        assert!(sym_product(&e1, &SymTensor::vector(&[1.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn contract_power_examples() {
        let s = SymTensor::scalar(2, 3.5);
        assert_eq!(contract_power(&s, &[0.3, 0.4], 0).unwrap(), 3.5);
        let e1 = SymTensor::vector(&[1.0, 0.0]);
        let e2 = SymTensor::vector(&[0.0, 1.0]);
        let f = sym_product(&e1, &e2).unwrap();
        assert!((contract_power(&f, &[1.0, 1.0], 2).unwrap() - 1.0).abs() < 1e-15);
        assert!(contract_power(&f, &[1.0, 1.0, 0.0], 2).is_err());
        assert!(contract_power(&f, &[1.0, 1.0], 1).is_err());
    }

    #[test]
    fn polarization_family_examples() {
        let f1 = polarization_family(1).unwrap();
        assert_eq!(f1.entries.len(), 1);
        assert_eq!(f1.entries[0].subset, vec![0]);
        assert_eq!(f1.entries[0].coefficient, 1.0);

        let f2 = polarization_family(2).unwrap();
        let got: Vec<(Vec<usize>, f64)> = f2.entries.iter().map(|e| (e.subset.clone(), e.coefficient)).collect();
        assert_eq!(got, vec![(vec![0], -0.5), (vec![1], -0.5), (vec![0, 1], 0.5)]);

        let f3 = polarization_family(3).unwrap();
        assert_eq!(f3.entries.len(), 7);
        let top = f3.entries.last().unwrap();
        assert_eq!(top.subset, vec![0, 1, 2]);
        assert!((top.coefficient - 1.0 / 6.0).abs() < 1e-16);
        assert_eq!(polarization_family(4).unwrap().entries.len(), 15);
        assert!(polarization_family(0).is_err());
    }

    #[test]
    fn polarize_orthogonal_components() {
        let e1 = [1.0, 0.0];
        let e2 = [0.0, 1.0];
        let f = symmetric_power(&e1, 2);
        let family = polarization_family(2).unwrap();
        let vectors: [&[f64]; 2] = [&e2, &e2];
        let values = family
            .entries
            .iter()
            .map(|t| {
                let theta = subset_sum(&vectors, &t.subset);
                (t.subset.clone(), f.contract_power(&theta).unwrap())
            })
            .collect();
        assert!(polarize(&values, &family).unwrap().abs() < 1e-15);
    }

    #[test]
    fn polarize_reports_missing_subset() {
        let family = polarization_family(2).unwrap();
        let mut values = BTreeMap::new();
        values.insert(vec![0], 1.0);
        assert_eq!(polarize(&values, &family), Err(Error::MissingSubset(vec![1])));
    }
}

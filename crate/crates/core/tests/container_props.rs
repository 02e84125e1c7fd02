use divray::tfld::{Container, Role};
use divray::{Grid, SymTensorField};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn write_read_is_bit_exact(
        m in 0usize..=3,
        nx in 1usize..6,
        ny in 1usize..6,
        seed in prop::collection::vec(prop::num::f64::ANY, 64),
        role in prop::sample::select(vec![Role::Field, Role::Recon]),
    ) {
        let grid = Grid::new(vec![nx, ny], vec![-1.0, 0.5], vec![0.25, 0.125]).unwrap();
        let template = SymTensorField::zeros(grid.clone(), m);
        let mut it = seed.iter().cycle();
        let components: Vec<Vec<f64>> = template.components.iter().map(|c| c.iter().map(|_| *it.next().unwrap()).collect()).collect();
        let field = SymTensorField::new(grid, m, components).unwrap();
        let container = Container::from_field(&field, role, None);
        prop_assert_eq!(container.payload.len(), nx * ny * field.components.len());
        let mut bytes = Vec::new();
        container.write_to(&mut bytes).unwrap();
        let back = Container::read_from(bytes.as_slice()).unwrap();
        prop_assert_eq!(back.role, role);
        prop_assert_eq!(&back.header, &container.header);
        let same = back.payload.iter().zip(&container.payload).all(|(a, b)| a.to_bits() == b.to_bits());
        prop_assert!(same);
        let mut again = Vec::new();
        back.write_to(&mut again).unwrap();
        prop_assert_eq!(again, bytes);
    }
}

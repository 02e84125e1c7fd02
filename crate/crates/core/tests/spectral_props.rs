use divray::{Grid, MultiplierOp, PhantomSpec, SpectralGrid, ZeroModePolicy};
use proptest::prelude::*;

fn desk(size: usize) -> SpectralGrid {
    SpectralGrid::new(Grid::cube(2, size, 16.0).unwrap(), ZeroModePolicy::Zero).unwrap()
}

fn bump_data(g: &SpectralGrid, cx: f64, cy: f64) -> Vec<f64> {
    g.grid
        .points()
        .iter()
        .map(|p| {
            let r2 = (p[0] - cx).powi(2) + (p[1] - cy).powi(2);
            (1.0 + p[0] - 0.5 * p[1]) * (-r2).exp()
        })
        .collect()
}

fn op(kind: u8, param: f64) -> MultiplierOp {
    match kind {
        0 => MultiplierOp::riesz(0),
        1 => MultiplierOp::riesz(1),
        2 => MultiplierOp::power(param),
        3 => MultiplierOp::riesz_potential(param),
        4 => MultiplierOp::bessel(param),
        _ => MultiplierOp::derivative(0),
    }
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn multipliers_commute(a in 0u8..6, b in 0u8..6, p in 0.1f64..1.9, q in 0.1f64..1.9, cx in -2.0f64..2.0) {
        let g = desk(32);
        let u = bump_data(&g, cx, 0.3);
        let (f, h) = (op(a, p), op(b, q));
        let fh = g.apply(&f, &g.apply(&h, &u).unwrap()).unwrap();
        let hf = g.apply(&h, &g.apply(&f, &u).unwrap()).unwrap();
        let scale = fh.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        prop_assert!(max_diff(&fh, &hf) < 1e-12 * scale);
    }

    #[test]
    fn fft_roundtrip(values in prop::collection::vec(-1.0f64..1.0, 256)) {
        let g = desk(16);
        let back = g.ifft(&g.fft(&values));
        prop_assert!(max_diff(&back, &values) < 1e-12);
    }

    #[test]
    fn riesz_is_a_contraction(values in prop::collection::vec(-1.0f64..1.0, 256), t in -2.0f64..2.0, j in 0usize..2) {
        let g = desk(16);
        let r = g.apply(&MultiplierOp::riesz(j), &values).unwrap();
        prop_assert!(g.sobolev_norm_plancherel(&r, t) <= (1.0 + 1e-12) * g.sobolev_norm_plancherel(&values, t));
    }

    #[test]
    fn fractional_laplacian_lowers_smoothness(values in prop::collection::vec(-1.0f64..1.0, 256), t in -2.0f64..2.0, s in 0.05f64..0.95) {
        let g = desk(16);
        let v = g.apply(&MultiplierOp::power(2.0 * s), &values).unwrap();
        prop_assert!(g.sobolev_norm_plancherel(&v, t - 2.0 * s) <= (1.0 + 1e-12) * g.sobolev_norm_plancherel(&values, t));
    }
}

#[test]
fn sampled_gaussian_transform_matches_closed_form() {
    let g = desk(128);
    for spec in [
        PhantomSpec::gaussian(2, 1, vec![0.4, -0.7], 1.0, vec![1.0, -2.0]),
        divray::phantoms::moment_free_2tensor(1.3, vec![-0.2, 0.5]),
    ] {
        let f = spec.sample_on_grid(&g.grid).unwrap();
        let half = g.half_nyquist();
        let transforms: Vec<_> = f.components.iter().map(|c| g.continuum_transform(c)).collect();
        let mut worst: f64 = 0.0;
        let mut peak: f64 = 0.0;
        for k in 0..g.len() {
            let y = g.frequency(k);
            if y.iter().zip(&half).any(|(v, h)| v.abs() > *h) {
                continue;
            }
            let exact = spec.eval_fourier(y).unwrap();
            for (t, e) in transforms.iter().zip(&exact) {
                worst = worst.max((t[k] - e).norm());
                peak = peak.max(e.norm());
            }
        }
        assert!(worst < 1e-6 * peak, "{worst:e} relative to {peak:e}");
    }
}

use divray::verify::{phantom_family, stability_ratio_2tensor, stability_ratio_vector, Ball};
use divray::{Grid, SpectralGrid, SymTensorField, ZeroModePolicy};
use proptest::prelude::*;

fn desk(size: usize) -> SpectralGrid {
    SpectralGrid::new(Grid::cube(2, size, 16.0).unwrap(), ZeroModePolicy::Zero).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn ratios_ignore_amplitude(seed in 0u64..1000, lambda in prop::sample::select(vec![-3.7, 1e-3, 0.5, 42.0]), s in 0.1f64..0.45, t in 0.0f64..1.5, m in 1usize..=2) {
        let g = desk(32);
        for (_, spec) in phantom_family(seed, 2, m, 2) {
            let f = spec.sample_on_grid(&g.grid).unwrap();
            let ratio = |f: &SymTensorField| {
                if m == 1 { stability_ratio_vector(&g, f, s, t) } else { stability_ratio_2tensor(&g, f, s, t) }.unwrap().ratio
            };
            let (a, b) = (ratio(&f), ratio(&f.scaled(lambda)));
            prop_assert!(a.is_finite() && a > 0.0);
            prop_assert!((a - b).abs() <= 1e-12 * a, "{} vs {}", a, b);
        }
    }
}

/// For one lattice mode `Re(F e^{i zeta.x})` all Plancherel norms reduce to
/// amplitudes, so the vector stability ratio has a closed form.
#[test]
fn single_mode_vector_ratio() {
    let g = desk(32);
    let zeta = [
        2.0 * std::f64::consts::PI * 2.0 / 16.0,
        -2.0 * std::f64::consts::PI / 16.0,
    ];
    let f_amp = [0.8, -0.3];
    let points = g.grid.points();
    let comps: Vec<Vec<f64>> = f_amp
        .iter()
        .map(|a| {
            points
                .iter()
                .map(|p| a * (zeta[0] * p[0] + zeta[1] * p[1]).cos())
                .collect()
        })
        .collect();
    let f = SymTensorField::new(g.grid.clone(), 1, comps).unwrap();
    let r = (zeta[0] * zeta[0] + zeta[1] * zeta[1]).sqrt();
    let bracket = (1.0 + r * r).sqrt();
    for s in [0.25, 0.75] {
        for t in [0.0, 1.0] {
            let w = r.powf(-2.0 * s);
            // Riesz symbols are -i zeta_j / |zeta|: A^0 is imaginary, A^1 real.
            let a0 = w * (zeta[0] * f_amp[0] + zeta[1] * f_amp[1]) / r;
            let a1: Vec<f64> = (0..2).map(|i| -w * f_amp[i] + 2.0 * s * zeta[i] / r * a0).collect();
            let expected = bracket.powf(-2.0 * s) * (f_amp[0].abs() + f_amp[1].abs())
                / (a1[0].abs() + a1[1].abs() + 2.0 * s * a0.abs());
            let got = stability_ratio_vector(&g, &f, s, t).unwrap().ratio;
            assert!(
                (got - expected).abs() < 1e-10 * expected,
                "s={s} t={t}: {got} vs {expected}"
            );
        }
    }
}

#[test]
fn ucp_lattice_meets_the_sampling_floor() {
    let ball = Ball {
        center: vec![-4.0, 0.0],
        radius: 1.0,
    };
    let pts = ball.lattice(5);
    assert!(pts.len() >= 25);
    for p in pts {
        assert!(((p[0] + 4.0).powi(2) + p[1] * p[1]).sqrt() < 1.0);
    }
}

//! Closed forms and brute-force references written independently of the
//! library code paths they check.

#![allow(dead_code)]

use num_complex::Complex64;
use statrs::function::erf::erfc;
use statrs::function::gamma::gamma;

pub fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

pub fn gaussian(x: &[f64], c: &[f64], a: f64) -> f64 {
    (-a * dist2(x, c)).exp()
}

/// `int_0^inf t^w exp(-a (t + b)^2) dt` for `w = 0, 1, 2`.
fn shifted_moment(a: f64, b: f64, w: u32) -> f64 {
    let k0 = 0.5 * (std::f64::consts::PI / a).sqrt() * erfc(a.sqrt() * b);
    let e = (-a * b * b).exp() / (2.0 * a);
    match w {
        0 => k0,
        1 => e - b * k0,
        2 => k0 * (b * b + 1.0 / (2.0 * a)) - b * e,
        _ => panic!("closed form only for w <= 2"),
    }
}

/// `int_0^inf t^w exp(-a |x + t xi - c|^2) dt` for a unit `xi`.
pub fn gaussian_ray_moment(x: &[f64], xi: &[f64], c: &[f64], a: f64, w: u32) -> f64 {
    let b: f64 = x.iter().zip(c).zip(xi).map(|((p, q), d)| (p - q) * d).sum();
    let d2 = dist2(x, c) - b * b;
    (-a * d2).exp() * shifted_moment(a, b, w)
}

/// `sum_{i_1..i_m} f(i_1..i_m) v_1^{i_1} ... v_m^{i_m}` over all tuples.
pub fn multilinear(f: &dyn Fn(&[usize]) -> f64, n: usize, vecs: &[Vec<f64>]) -> f64 {
    let m = vecs.len();
    let mut idx = vec![0usize; m];
    let mut total = 0.0;
    loop {
        let w: f64 = idx.iter().zip(vecs).map(|(&i, v)| v[i]).product();
        total += f(&idx) * w;
        let mut p = 0;
        loop {
            if p == m {
                return total;
            }
            idx[p] += 1;
            if idx[p] < n {
                break;
            }
            idx[p] = 0;
            p += 1;
        }
    }
}

fn hermite(k: u32, u: f64) -> f64 {
    match k {
        0 => 1.0,
        1 => 2.0 * u,
        2 => 4.0 * u * u - 2.0,
        3 => 8.0 * u * u * u - 12.0 * u,
        4 => 16.0 * u.powi(4) - 48.0 * u * u + 12.0,
        _ => panic!("hermite order <= 4"),
    }
}

/// `d^alpha exp(-|x - c|^2)`.
pub fn gaussian_derivative(alpha: &[u32], x: &[f64], c: &[f64]) -> f64 {
    let mut v = gaussian(x, c, 1.0);
    for ((&k, xa), ca) in alpha.iter().zip(x).zip(c) {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        v *= sign * hermite(k, xa - ca);
    }
    v
}

/// `Delta^2 exp(-|x - c|^2)` in the plane.
pub fn bilaplacian_gaussian(x: &[f64], c: &[f64]) -> f64 {
    let r2 = dist2(x, c);
    16.0 * (r2 * r2 - 4.0 * r2 + 2.0) * (-r2).exp()
}

pub fn bump(x: &[f64], c: &[f64], r: f64, amp: f64) -> f64 {
    let rho2 = dist2(x, c) / (r * r);
    if rho2 >= 1.0 {
        0.0
    } else {
        amp * (-1.0 / (1.0 - rho2)).exp()
    }
}

/// Planar Riesz potential `I^gamma u(x) = k_gamma int |z|^{gamma-2} u(x - z) dz`
/// by a fine lattice sum with spacing `h` over `|z_a| <= reach`. A Gaussian
/// `phi(z) = exp(-|z|^2)` times `u(x)` is subtracted and added back through
/// `int |z|^{gamma-2} phi = pi Gamma(gamma/2)`; the odd linear Taylor term
/// cancels on the symmetric lattice.
pub fn riesz_potential_lattice(u: &dyn Fn(&[f64]) -> f64, x: &[f64], gamma_: f64, h: f64, reach: f64) -> f64 {
    let k = gamma((2.0 - gamma_) / 2.0) / (2f64.powf(gamma_) * std::f64::consts::PI * gamma(gamma_ / 2.0));
    let steps = (reach / h).round() as i64;
    let ux = u(x);
    let mut sum = 0.0;
    for i in -steps..=steps {
        for j in -steps..=steps {
            if i == 0 && j == 0 {
                continue;
            }
            let z = [i as f64 * h, j as f64 * h];
            let r2 = z[0] * z[0] + z[1] * z[1];
            let v = u(&[x[0] - z[0], x[1] - z[1]]) - ux * (-r2).exp();
            sum += r2.powf((gamma_ - 2.0) / 2.0) * v;
        }
    }
    k * (sum * h * h + ux * std::f64::consts::PI * gamma(gamma_ / 2.0))
}

/// `-i zeta_j / |zeta|`.
pub fn riesz_symbol(zeta: &[f64], j: usize) -> Complex64 {
    let r = zeta.iter().map(|v| v * v).sum::<f64>().sqrt();
    Complex64::new(0.0, -zeta[j] / r)
}

/// Hand-evaluated averages of the vector mode `f = Re(F e^{i zeta.x})`:
/// complex amplitudes of `A^0` and `A^{1,i}`.
pub fn mode_averages_vector(zeta: &[f64], amp: &[Complex64], s: f64) -> (Complex64, Vec<Complex64>) {
    let r = zeta.iter().map(|v| v * v).sum::<f64>().sqrt();
    let w = r.powf(-2.0 * s);
    let rf: Complex64 = (0..2).map(|j| riesz_symbol(zeta, j) * amp[j]).sum();
    let a0 = w * rf;
    let a1 = (0..2)
        .map(|i| -w * amp[i] - 2.0 * s * riesz_symbol(zeta, i) * a0)
        .collect();
    (a0, a1)
}

/// Same for a symmetric 2-tensor mode with amplitudes `[F_11, F_12, F_22]`;
/// returns amplitudes of `A^0`, `A^{1,i}`, `[A^{2,11}, A^{2,12}, A^{2,22}]`.
pub fn mode_averages_2tensor(
    zeta: &[f64],
    amp: &[Complex64; 3],
    s: f64,
) -> (Complex64, Vec<Complex64>, Vec<Complex64>) {
    let fab = |a: usize, b: usize| match (a.min(b), a.max(b)) {
        (0, 0) => amp[0],
        (0, 1) => amp[1],
        _ => amp[2],
    };
    let r = |j| riesz_symbol(zeta, j);
    let w = zeta.iter().map(|v| v * v).sum::<f64>().sqrt().powf(-2.0 * s);
    let mut rrf = Complex64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            rrf += r(a) * r(b) * fab(a, b);
        }
    }
    let a0 = -w * (fab(0, 0) + fab(1, 1) + 2.0 * s * rrf);
    let a1: Vec<Complex64> = (0..2)
        .map(|i| {
            let rf: Complex64 = (0..2).map(|j| r(j) * fab(j, i)).sum();
            -r(i) * a0 + w * (2.0 * rf + r(i) * rrf)
        })
        .collect();
    let a2 = [(0, 0), (0, 1), (1, 1)]
        .iter()
        .map(|&(i1, i2)| {
            let delta = if i1 == i2 { 1.0 } else { 0.0 };
            -2.0 * w * fab(i1, i2) + delta * a0
                - 2.0 * s * r(i1) * r(i2) * a0
                - 2.0 * s * (r(i1) * a1[i2] + r(i2) * a1[i1])
        })
        .collect();
    (a0, a1, a2)
}

/// Samples `Re(amp e^{i zeta.x})` at the given points.
pub fn mode_samples(points: &[Vec<f64>], zeta: &[f64], amp: Complex64) -> Vec<f64> {
    points
        .iter()
        .map(|p| {
            let th: f64 = p.iter().zip(zeta).map(|(a, b)| a * b).sum();
            (amp * Complex64::from_polar(1.0, th)).re
        })
        .collect()
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

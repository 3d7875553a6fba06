//! Closed-form oracles through the public API.

use num_complex::Complex64;
use stablelab_core::kernel_engine::{
    exit_cdf_mu, exit_cdf_quadrature, extend_grid, frequency, stable_density, FftNd,
};
use stablelab_core::littlewood_paley::{carre_du_champ, lp_norm, maximal_function};
use stablelab_core::quad::QuadConfig;
use stablelab_core::special::{erfc, gamma};
use stablelab_core::{GridFunction, StableParams};

fn cauchy(d: usize, s: f64, r: f64) -> f64 {
    let k = (d as f64 + 1.0) / 2.0;
    gamma(k) / std::f64::consts::PI.powf(k) * s / (s * s + r * r).powf(k)
}

#[test]
fn cauchy_family_in_three_dimensions() {
    for d in 1..=3 {
        let p = StableParams::new(d, 1.0).unwrap();
        for &s in &[0.1, 0.7, 3.0, 10.0] {
            for &r in &[0.0, 0.05, 0.5, 2.0, 10.0] {
                let got = stable_density(p, s, r).unwrap();
                assert!((got - cauchy(d, s, r)).abs() < 1e-6, "d={d} s={s} r={r}");
            }
        }
    }
}

#[test]
fn exit_law_matches_erfc() {
    for &t in &[0.3, 1.0, 2.5] {
        for &s in &[0.05, 0.5, 4.0, 40.0] {
            let q = exit_cdf_quadrature(t, s, &QuadConfig::default()).unwrap();
            let want = erfc(t / (2.0 * s.sqrt()));
            assert!((q.value - want).abs() < 1e-8);
            assert!((exit_cdf_mu(t, s) - want).abs() < 1e-14);
        }
    }
}

fn frac_laplacian(vals: &[f64], h: f64, a: f64) -> Vec<f64> {
    let m = vals.len();
    let fft = FftNd::new(&[m]);
    let mut buf: Vec<Complex64> = vals.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    fft.forward(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        *b *= frequency(k, m, h).abs().powf(a);
    }
    fft.inverse(&mut buf);
    buf.into_iter().map(|c| c.re).collect()
}

#[test]
fn carre_du_champ_matches_generator_identity() {
    // 2 Gamma(f) = L(f^2) - 2 f L f with symbol -|xi|^alpha, on an extended bump
    let p = StableParams::new(1, 1.3).unwrap();
    let h = 0.02;
    let n = 2001;
    let f = GridFunction::from_fn(vec![-20.0], h, vec![n], |x| (-x[0] * x[0]).exp()).unwrap();
    let ft = extend_grid(&f, p, 0.3).unwrap();
    let g = carre_du_champ(&ft, p).unwrap();
    let m = 64 * n;
    let mut v1 = vec![0.0; m];
    v1[..n].copy_from_slice(ft.values());
    let v2: Vec<f64> = v1.iter().map(|v| v * v).collect();
    let (a1, a2) = (frac_laplacian(&v1, h, 1.3), frac_laplacian(&v2, h, 1.3));
    for k in (850..1150).step_by(17) {
        let want = 0.5 * (2.0 * ft.values()[k] * a1[k] - a2[k]);
        let got = g.values()[k];
        assert!((got - want).abs() < 1e-3 * want.abs(), "k={k}: {got} vs {want}");
    }
}

#[test]
fn maximal_function_of_a_spike_on_a_tiny_lattice() {
    let mut v = vec![0.0; 9];
    v[4] = 1.0;
    let f = GridFunction::new(vec![0.0], 0.5, vec![9], v).unwrap();
    let m = maximal_function(&f).unwrap();
    assert_eq!(m.values()[4], 1.0);
    assert!((m.values()[5] - 1.0 / 3.0).abs() < 1e-12);
    assert!((m.values()[6] - 1.0 / 5.0).abs() < 1e-12);
    assert!((m.values()[8] - 1.0 / 9.0).abs() < 1e-12);
    // distance 3 is first reached by the radius-4 ball
    assert!((m.values()[7] - 1.0 / 9.0).abs() < 1e-12);
}

#[test]
fn lp_norm_of_two_cells() {
    let g = GridFunction::new(vec![0.0], 0.5, vec![2], vec![1.0, 1.0]).unwrap();
    assert!((lp_norm(&g, 2.0).unwrap() - 1.0).abs() < 1e-15);
}

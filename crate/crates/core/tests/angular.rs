use std::f64::consts::PI;

use sif_core::angular::*;
use sif_core::geometry::{CornerFrame, CornerPolygon};
use sif_core::modes::ModeError;
use sif_core::quadrature::gauss_nodes;
use sif_core::spectral::{lame_exponents, stokes_exponents, Family, MaterialParams};

fn lshape() -> CornerFrame {
    CornerPolygon::lshape().frame()
}

/// A, A', B, B' written out by hand from the mode definitions.
fn abd(index: usize, a: f64, c: f64, w: f64, t: f64) -> [f64; 4] {
    let (p, q) = (1.0 - a, 1.0 + a);
    if index == 1 {
        let k = c * (a * w).cos() + a * w.cos();
        [
            -(c - a) * (p * t).sin() + k * (q * t).sin(),
            -(c - a) * p * (p * t).cos() + k * q * (q * t).cos(),
            -(c + a) * (p * t).cos() + k * (q * t).cos(),
            (c + a) * p * (p * t).sin() - k * q * (q * t).sin(),
        ]
    } else {
        let k = c * (a * w).cos() - a * w.cos();
        [
            -(c - a) * (p * t).cos() + k * (q * t).cos(),
            (c - a) * p * (p * t).sin() - k * q * (q * t).sin(),
            (c + a) * (p * t).sin() - k * (q * t).sin(),
            (c + a) * p * (p * t).cos() - k * q * (q * t).cos(),
        ]
    }
}

/// Composite Simpson on [a, b] with n (even) intervals.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// gamma^eps with the K term taken from the raw (I + J) / eps.
fn oracle_gamma_lame(index: usize, mu: f64, eps: f64, frame: CornerFrame) -> f64 {
    let c = 1.0 + 2.0 * mu * eps;
    let w = frame.omega();
    let l = lame_exponents(w, c).unwrap().exponents[index - 1];
    let f = |th: f64| {
        let t = th - frame.omega_bar();
        let [a, _, b, db] = abd(index, l, c, w, t);
        let [ad, _, bd, dbd] = abd(index, -l, c, w, t);
        let i = 2.0 * l * a * ad;
        let j = (db + a) * ad - a * (dbd + ad);
        2.0 * mu * l * (a * ad + b * bd) + (i + j) / eps
    };
    simpson(f, frame.omega1, frame.omega2, 8192)
}

fn oracle_gamma_stokes(index: usize, frame: CornerFrame) -> f64 {
    let w = frame.omega();
    let k = stokes_exponents(w).unwrap().exponents[index - 1];
    let s = |x: f64| if index == 1 { x.sin() } else { x.cos() };
    let f = |th: f64| {
        let t = th - frame.omega_bar();
        let [a, _, b, _] = abd(index, k, 1.0, w, t);
        let [ad, _, bd, _] = abd(index, -k, 1.0, w, t);
        let xi = 4.0 * k * s((1.0 - k) * t);
        let xid = -4.0 * k * s((1.0 + k) * t);
        2.0 * k * (a * ad + b * bd) - xi * ad + a * xid
    };
    simpson(f, frame.omega1, frame.omega2, 8192)
}

#[test]
fn gauss_rule_examples() {
    let (x, w) = gauss_nodes(1, -1.0, 1.0);
    assert_eq!((x, w), (vec![0.0], vec![2.0]));
    let (x, w) = gauss_nodes(3, 0.0, 2.0);
    let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
    assert!((q - 32.0 / 5.0).abs() < 1e-13);
    let (x, w) = gauss_nodes(16, 0.0, PI);
    let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.sin()).sum();
    assert!((q - 2.0).abs() < 1e-14);
}

#[test]
fn lame_normalizer_matches_oracle() {
    let f = lshape();
    for mu in [1.0, 2.5] {
        for i in 1..=2 {
            let m = MaterialParams::new(mu, 1e-2).unwrap();
            let (p, d) = mode_pair(Family::Lame, f, &m, i).unwrap();
            let g = gamma_lame(&m, &p, &d).unwrap();
            let o = oracle_gamma_lame(i, mu, 1e-2, f);
            assert!((g.gamma - o).abs() < 1e-10 * o.abs(), "i={i}: {} vs {o}", g.gamma);
            assert_eq!(g.terms.len(), 2);
            assert_eq!(g.order, 2 * DEFAULT_ORDER);
            assert!(g.error_estimate < 1e-11 * g.gamma.abs());
        }
    }
}

#[test]
fn stokes_normalizer_matches_oracle() {
    for w in [1.5 * PI, 1.75 * PI] {
        let f = CornerFrame::symmetric(w);
        let s = MaterialParams::new(1.0, 0.0).unwrap();
        for i in 1..=2 {
            let (p, d) = mode_pair(Family::Stokes, f, &s, i).unwrap();
            let g = gamma_stokes(&p, &d).unwrap();
            let o = oracle_gamma_stokes(i, f);
            assert!((g.gamma - o).abs() < 1e-10 * o.abs(), "w={w} i={i}: {} vs {o}", g.gamma);
            assert_eq!(g.terms.len(), 3);
        }
    }
}

#[test]
fn stokes_case_one_has_no_second_normalizer() {
    let f = CornerFrame::symmetric(1.2 * PI);
    let s = MaterialParams::new(1.0, 0.0).unwrap();
    assert!(mode_pair(Family::Stokes, f, &s, 1).is_ok());
    assert!(matches!(
        mode_pair(Family::Stokes, f, &s, 2),
        Err(AngularError::Mode(ModeError::IndexOutOfRange { .. }))
    ));
}

#[test]
fn normalizer_scales_with_mu() {
    let f = lshape();
    for i in 1..=2 {
        let m1 = MaterialParams::new(1.0, 6e-3).unwrap();
        let m3 = MaterialParams::new(3.0, 2e-3).unwrap();
        let (p1, d1) = mode_pair(Family::Lame, f, &m1, i).unwrap();
        let (p3, d3) = mode_pair(Family::Lame, f, &m3, i).unwrap();
        let g1 = gamma_lame(&m1, &p1, &d1).unwrap().gamma;
        let g3 = gamma_lame(&m3, &p3, &d3).unwrap().gamma;
        assert!((g3 - 3.0 * g1).abs() < 1e-11 * g3.abs());
    }
}

#[test]
fn pairing_checks() {
    let f = lshape();
    let m = MaterialParams::new(1.0, 1e-2).unwrap();
    let (p, d) = mode_pair(Family::Lame, f, &m, 1).unwrap();
    let (p2, _) = mode_pair(Family::Lame, f, &m, 2).unwrap();
    assert_eq!(gamma_lame(&m, &d, &p), Err(AngularError::NotAPair));
    assert_eq!(gamma_lame(&m, &p, &p2), Err(AngularError::NotAPair));
    let s = MaterialParams::new(1.0, 0.0).unwrap();
    assert_eq!(gamma_lame(&s, &p, &d), Err(AngularError::NeedPositiveEps));
}

#[test]
fn closed_form_matches_raw_sum() {
    for eps in [1e-1, 1e-2, 1e-3] {
        let m = MaterialParams::new(1.0, eps).unwrap();
        for i in 1..=2 {
            let r = check_ij_identity(i, &m, lshape(), 2001).unwrap();
            assert!(r.max_deviation <= 1e-9 * eps * r.sup_k, "{r:?}");
            assert!(r.sup_k > 0.0 && r.sup_k.is_finite());
        }
    }
}

#[test]
fn closed_form_stays_bounded_as_eps_vanishes() {
    let f = lshape();
    let mut sups = vec![];
    for eps in [1e-2, 1e-4, 1e-6, 1e-8] {
        let m = MaterialParams::new(1.0, eps).unwrap();
        let (p, _) = mode_pair(Family::Lame, f, &m, 1).unwrap();
        let s = (0..=400)
            .map(|k| k_closed(&p, -f.omega() / 2.0 + f.omega() * k as f64 / 400.0).abs())
            .fold(0.0, f64::max);
        sups.push(s);
    }
    assert!(sups.iter().all(|s| s.is_finite() && *s < 2.0 * sups[0]));
}

#[test]
fn normalizer_limit_rate() {
    let grid: Vec<f64> = (0..6).map(|k| 10f64.powf(-2.0 - 0.8 * k as f64)).collect();
    for i in 1..=2 {
        let s = gamma_limit_study(i, 1.4, lshape(), &grid).unwrap();
        assert!(s.rows.windows(2).all(|w| w[1].diff < w[0].diff));
        assert!((0.8..=1.2).contains(&s.final_slope), "{s:?}");
        assert!((0.8..=1.2).contains(&s.fitted_slope), "{s:?}");
    }
}

#[test]
fn limit_study_grid_validation() {
    for g in [vec![1e-3], vec![1e-1, 1e-2, 1e-3], vec![1e-1, 1e-3, 1e-2, 1e-4], vec![1e-1, 1e-2, 1e-3, 0.0]] {
        assert!(matches!(gamma_limit_study(1, 1.0, lshape(), &g), Err(AngularError::BadGrid(_))));
    }
}

#[test]
fn loglog_slope_of_power_law() {
    let x = [1.0, 0.1, 0.01, 0.001];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
    assert!((loglog_slope(&x, &y) - 1.5).abs() < 1e-12);
}

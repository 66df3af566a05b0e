use std::f64::consts::PI;
use std::sync::Arc;

use sif_core::boundary::BoundaryData;
use sif_core::extraction::*;
use sif_core::fem::{FemSpace, MixedField};
use sif_core::field::{zero_vector, VField};
use sif_core::geometry::{build_polygon, CornerPolygon, Point};
use sif_core::harness::{w_poly, ManufacturedCase};
use sif_core::mesh::{generate_lshape_mesh, load_mesh};
use sif_core::spectral::{Family, MaterialParams};

fn lshape_space(h: f64) -> Arc<FemSpace> {
    let p = CornerPolygon::lshape();
    Arc::new(FemSpace::new(generate_lshape_mesh(&p, h, 0.5, 6).unwrap(), p).unwrap())
}

/// L-shape sheared so the corner opening becomes `omega` (< 1.5 pi).
fn sheared_space(omega: f64, h: f64) -> Arc<FemSpace> {
    let k = -(1.5 * PI - omega).tan();
    let map = |p: Point| [p[0], p[1] + k * p[0]];
    let base = CornerPolygon::lshape();
    let mut mesh = generate_lshape_mesh(&base, h, 0.5, 6).unwrap();
    for x in &mut mesh.nodes {
        *x = map(*x);
    }
    let v: Vec<Point> = base.vertices().iter().map(|&p| map(p)).collect();
    let poly = build_polygon(&v, 0).unwrap();
    assert!((poly.omega() - omega).abs() < 1e-12);
    let mesh = load_mesh(&mesh.serialize(), &poly).unwrap();
    Arc::new(FemSpace::new(mesh, poly).unwrap())
}

fn data(f: VField, g: VField, poly: &CornerPolygon) -> ProblemData {
    ProblemData::new(f, None, BoundaryData::trace_of(poly, g))
}

#[test]
fn zero_data_gives_zero_coefficients() {
    let sp = lshape_space(0.2);
    let d = data(zero_vector(), zero_vector(), &sp.polygon);
    let r = extract_sifs_penalized(sp.clone(), MaterialParams::new(1.0, 1e-2).unwrap(), &d).unwrap();
    assert_eq!(r.coefficients(), vec![0.0, 0.0]);
    let r = extract_sifs_stokes(sp, 1.0, &d).unwrap();
    assert_eq!(r.coefficients(), vec![0.0, 0.0]);
}

#[test]
fn extraction_is_linear() {
    let sp = lshape_space(0.2);
    let m = MaterialParams::new(1.3, 1e-3).unwrap();
    let ex = Extractor::new(Family::Lame, sp.clone(), m).unwrap();
    let d1 = data(Arc::new(|p: Point| [1.0 + p[1] * p[1], p[0] * p[1]]), Arc::new(|p: Point| [p[0] * p[1], p[0] * p[0]]), &sp.polygon);
    let d2 = data(Arc::new(|p: Point| [p[0].sin(), (p[1] * 2.0).cos()]), Arc::new(|p: Point| [p[0] * p[0] * p[1], -p[1] * p[1]]), &sp.polygon);
    let (a, b) = (2.5, -0.75);
    let c1 = ex.extract(&d1).unwrap().coefficients();
    let c2 = ex.extract(&d2).unwrap().coefficients();
    let c = ex.extract(&d1.scaled_sum(a, &d2, b)).unwrap().coefficients();
    for k in 0..2 {
        let e = a * c1[k] + b * c2[k];
        assert!((c[k] - e).abs() <= 1e-9 * e.abs().max(1e-12), "{c:?}");
    }
}

#[test]
fn corner_conditions_enforced() {
    let sp = lshape_space(0.25);
    let m = MaterialParams::new(1.0, 1e-2).unwrap();
    let d = data(zero_vector(), Arc::new(|_: Point| [1.0, 0.0]), &sp.polygon);
    assert!(matches!(extract_sifs_penalized(sp.clone(), m, &d), Err(ExtractionError::CornerDataNonzero(_))));
    let mut d = data(zero_vector(), zero_vector(), &sp.polygon);
    d.zeta = Some(Arc::new(|_: Point| 0.5));
    assert!(matches!(extract_sifs_stokes(sp.clone(), 1.0, &d), Err(ExtractionError::ZetaCornerNonzero(_))));
    assert!(matches!(Extractor::new(Family::Lame, sp.clone(), MaterialParams::new(1.0, 0.0).unwrap()), Err(ExtractionError::NeedPositiveEps)));
    assert!(matches!(Extractor::new(Family::Stokes, sp, m), Err(ExtractionError::NeedZeroEps)));
}

#[test]
fn report_parts_are_consistent() {
    let sp = lshape_space(0.2);
    let m = MaterialParams::new(1.0, 1e-2).unwrap();
    let d = data(Arc::new(|p: Point| [1.0 + p[1] * p[1], p[0] * p[1]]), Arc::new(|p: Point| [p[0] * p[1], p[0] * p[0]]), &sp.polygon);
    let r = extract_sifs_penalized(sp, m, &d).unwrap();
    assert_eq!(r.c2_given(r.c1), r.c2);
    assert!((r.c1 - r.big_c1 / r.gamma1).abs() <= 1e-15 * r.c1.abs());
    let t = &r.terms.ci[0];
    let parts = t.volume_mode + t.volume_psi + t.zeta - t.boundary.iter().sum::<f64>();
    assert!(t.boundary.iter().any(|b| *b != 0.0));
    assert!((parts - t.total).abs() <= 1e-12 * t.total.abs().max(1e-12));
    assert!((r.cstar.unwrap() - r.terms.cstar_edges.iter().sum::<f64>()).abs() < 1e-15);
    assert!(r.exponents[0] < r.exponents[1]);
}

#[test]
fn single_mode_below_critical_angle() {
    let sp = sheared_space(1.3 * PI, 0.2);
    let d = data(Arc::new(|p: Point| [1.0 + p[1] * p[1], p[0] * p[1]]), zero_vector(), &sp.polygon);
    let r = extract_sifs_stokes(sp.clone(), 1.0, &d).unwrap();
    assert_eq!(r.coefficients().len(), 1);
    assert!(r.c2.is_none() && r.cstar.is_none() && r.gamma2.is_none());
    let r = extract_sifs_penalized(sp, MaterialParams::new(1.0, 1e-2).unwrap(), &d).unwrap();
    assert_eq!(r.coefficients().len(), 2);
}

#[test]
fn manufactured_recovery_on_coarse_mesh() {
    let sp = lshape_space(0.1);
    let m = MaterialParams::new(1.0, 1e-3).unwrap();
    let case = ManufacturedCase::new(Family::Lame, m, sp.polygon.frame(), [0.7, -0.3]).unwrap();
    let c = extract_sifs_penalized(sp.clone(), m, &case.data(&sp.polygon)).unwrap().coefficients();
    assert!((c[0] - 0.7).abs() < 0.03 * 0.7 && (c[1] + 0.3).abs() < 0.03 * 0.3, "{c:?}");

    let sp = sheared_space(1.3 * PI, 0.1);
    let s = MaterialParams::new(1.0, 0.0).unwrap();
    let case = ManufacturedCase::new(Family::Stokes, s, sp.polygon.frame(), [0.8, 0.0]).unwrap();
    assert_eq!(case.c_true.len(), 1);
    let c = extract_sifs_stokes(sp.clone(), 1.0, &case.data(&sp.polygon)).unwrap().coefficients();
    assert!((c[0] - 0.8).abs() < 0.03 * 0.8, "{c:?}");
}

#[test]
fn regular_part_removes_the_singular_modes() {
    let sp = lshape_space(0.2);
    let m = MaterialParams::new(1.0, 1e-2).unwrap();
    let case = ManufacturedCase::new(Family::Lame, m, sp.polygon.frame(), [0.7, -0.3]).unwrap();
    let ex = Extractor::new(Family::Lame, sp.clone(), m).unwrap();
    let mut rep = ex.extract(&case.data(&sp.polygon)).unwrap();
    rep.c1 = 0.7;
    rep.c2 = Some(-0.3);
    let vel = case.velocity();
    let u = MixedField::interpolate(sp.clone(), m, |x| vel.eval(x), |_| 0.0);
    let reg = regular_part(&u, &rep, &ex.primal).unwrap();
    for (x, v) in sp.nodes.iter().zip(&reg.w.velocity) {
        let e = w_poly(*x);
        assert!((v[0] - e[0]).abs() < 1e-12 && (v[1] - e[1]).abs() < 1e-12);
    }
    let other = lshape_space(0.2);
    let u2 = MixedField::interpolate(other, m, |x| vel.eval(x), |_| 0.0);
    let r2 = regular_part(&u2, &rep, &ex.primal).unwrap();
    assert_eq!(regular_difference(&reg, &r2).unwrap_err(), ExtractionError::MeshMismatch);
    let (dw, ds) = regular_difference(&reg, &reg).unwrap();
    assert_eq!((dw, ds), (0.0, 0.0));
}

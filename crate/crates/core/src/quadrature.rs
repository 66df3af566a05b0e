use crate::geometry::Point;

/// Gauss-Legendre nodes and weights on [a, b], exact for degree 2n-1.
pub fn gauss_nodes(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "Gauss order must be at least 1");
    let (x, w) = gauss_legendre(n);
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|t| m + r * t).collect(), w.iter().map(|v| r * v).collect())
}

/// Reference rule on [-1, 1] via Newton iteration on P_n.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    if n == 1 {
        return (vec![0.0], vec![2.0]);
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

/// Integrates `f` over [a, b] with `panels` equal panels of `n` Gauss points.
pub fn composite<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize, panels: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let m = a + (p as f64 + 0.5) * h;
        for (t, wt) in x.iter().zip(&w) {
            s += wt * f(m + 0.5 * h * t);
        }
    }
    0.5 * h * s
}

/// Integrates `f` over [0, len] with panels shrinking geometrically towards 0:
/// [len q^(k+1), len q^k] for k < levels, plus the last piece [0, len q^levels].
pub fn graded_toward_zero<F: FnMut(f64) -> f64>(mut f: F, len: f64, ratio: f64, levels: usize, n: usize) -> f64 {
    let (x, w) = gauss_legendre(n);
    let mut s = 0.0;
    let mut hi = len;
    for k in 0..=levels {
        let lo = if k == levels { 0.0 } else { hi * ratio };
        let (m, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (t, wt) in x.iter().zip(&w) {
            s += r * wt * f(m + r * t);
        }
        hi = lo;
    }
    s
}

/// Quadrature rule on the reference triangle (0,0),(1,0),(0,1): barycentric
/// points (l0, l1, l2) and weights summing to 1/2.
#[derive(Debug, Clone)]
pub struct TriRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

impl TriRule {
    /// Collapsed Gauss product rule exact for polynomials of total degree `degree`.
    pub fn of_degree(degree: usize) -> Self {
        let n = (degree + 2).div_ceil(2).max(1);
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (u, wu) in x.iter().zip(&w) {
            let u = 0.5 * (u + 1.0);
            for (v, wv) in x.iter().zip(&w) {
                let v = 0.5 * (v + 1.0);
                let (s, t) = (u, v * (1.0 - u));
                points.push([1.0 - s - t, s, t]);
                weights.push(0.25 * wu * wv * (1.0 - u));
            }
        }
        TriRule { points, weights }
    }

    /// Physical points and weights on triangle `p`.
    pub fn map(&self, p: &[Point; 3]) -> impl Iterator<Item = ([f64; 3], Point, f64)> + '_ {
        let area2 = ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1])).abs();
        let p = *p;
        self.points.iter().zip(&self.weights).map(move |(l, w)| {
            let x = [
                l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
                l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
            ];
            (*l, x, w * area2)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangle_rule_exact_for_monomials() {
        // int_T x^a y^b = a! b! / (a+b+2)!
        let fact = |n: usize| (1..=n).map(|k| k as f64).product::<f64>();
        for deg in [1usize, 4, 8, 10] {
            let r = TriRule::of_degree(deg);
            for a in 0..=deg {
                for b in 0..=deg - a {
                    let q: f64 = r.points.iter().zip(&r.weights).map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32)).sum();
                    let exact = fact(a) * fact(b) / fact(a + b + 2);
                    assert!((q - exact).abs() < 1e-15, "deg {deg} x^{a} y^{b}: {q} vs {exact}");
                }
            }
        }
    }

    #[test]
    fn graded_rule_handles_weak_singularity() {
        let q = graded_toward_zero(|s| s.powf(-0.5), 1.0, 0.5, 60, 8);
        assert!((q - 2.0).abs() < 1e-8);
    }
}

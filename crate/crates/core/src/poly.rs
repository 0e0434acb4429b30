//! Univariate polynomial roots (Aberth–Ehrlich with Newton polish) and dense
//! homogeneous polynomials in three variables.

use crate::complex::Cx;
use crate::scalar::Real;

/// Evaluate p(z) with coefficients in ascending order.
pub fn eval_poly<R: Real>(coeffs: &[Cx<R>], z: Cx<R>) -> Cx<R> {
    let mut acc = Cx::zero();
    for &c in coeffs.iter().rev() {
        acc = acc * z + c;
    }
    acc
}

pub fn eval_poly_deriv<R: Real>(coeffs: &[Cx<R>], z: Cx<R>) -> (Cx<R>, Cx<R>) {
    let mut p = Cx::zero();
    let mut dp = Cx::zero();
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// All complex roots of the polynomial with ascending coefficients.
///
/// Leading coefficients below `1e-13 * max|c|` are trimmed (such roots sit at
/// infinity for the caller's purposes). Multiple roots come back as clusters
/// accurate to roughly eps^(1/multiplicity).
pub fn roots<R: Real>(coeffs: &[Cx<R>]) -> Vec<Cx<R>> {
    let maxc = coeffs
        .iter()
        .map(|c| c.abs())
        .fold(R::zero(), |a, b| a.max(b));
    if maxc == R::zero() {
        return Vec::new();
    }
    let trim = maxc * R::from_f64(1e-13);
    let mut cs: Vec<Cx<R>> = coeffs.to_vec();
    while cs.len() > 1 && cs.last().unwrap().abs() <= trim {
        cs.pop();
    }
    // Strip exact-ish zero roots at the origin for stability.
    let mut zero_roots = 0;
    while cs.len() > 1 && cs[0].abs() <= trim {
        cs.remove(0);
        zero_roots += 1;
    }
    let n = cs.len() - 1;
    let mut out = vec![Cx::zero(); zero_roots];
    if n == 0 {
        return out;
    }
    let lead = cs[n].recip();
    let monic: Vec<Cx<R>> = cs.iter().map(|&c| c * lead).collect();
    if n == 1 {
        out.push(-monic[0]);
        return out;
    }
    if n == 2 {
        let (b, c) = (monic[1], monic[0]);
        let disc = (b * b - Cx::from_f64(4.0, 0.0) * c).sqrt();
        let q = if (b + disc).abs() > (b - disc).abs() {
            (b + disc).scale(R::from_f64(-0.5))
        } else {
            (b - disc).scale(R::from_f64(-0.5))
        };
        if q.abs() > R::zero() {
            out.push(q);
            out.push(c / q);
        } else {
            out.push(Cx::zero());
            out.push(Cx::zero());
        }
        return out;
    }

    // Aberth-Ehrlich from staggered circle starts.
    let radius = {
        let mut r = R::zero();
        for k in 0..n {
            let m = monic[k].abs();
            if m > R::zero() {
                // |c_k|^(1/(n-k)) via f64 (start quality only)
                let est = m.to_f64().powf(1.0 / (n - k) as f64);
                r = r.max(R::from_f64(est));
            }
        }
        (r + R::one()).min(R::from_f64(1e6))
    };
    let mut zs: Vec<Cx<R>> = (0..n)
        .map(|k| {
            let th = R::from_f64(2.0 * std::f64::consts::PI * (k as f64 + 0.35) / n as f64 + 0.42);
            Cx::cis(th).scale(radius)
        })
        .collect();
    let tol = R::eps() * R::from_f64(64.0);
    for _iter in 0..300 {
        let mut worst = R::zero();
        for i in 0..n {
            let (p, dp) = eval_poly_deriv(&monic, zs[i]);
            if p.abs() == R::zero() {
                continue;
            }
            let newton = if dp.abs() > R::zero() { p / dp } else { Cx::from_f64(1e-3, 0.0) };
            let mut s = Cx::zero();
            for j in 0..n {
                if j != i {
                    let d = zs[i] - zs[j];
                    if d.abs() > R::zero() {
                        s += d.recip();
                    }
                }
            }
            let denom = Cx::one() - newton * s;
            let step = if denom.abs() > R::from_f64(1e-12) {
                newton / denom
            } else {
                newton
            };
            zs[i] -= step;
            let rel = step.abs() / (zs[i].abs() + R::one());
            worst = worst.max(rel);
        }
        if worst < tol {
            break;
        }
    }
    // Newton polish (helps simple roots; harmless for clusters).
    for z in zs.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval_poly_deriv(&monic, *z);
            if dp.abs() > R::zero() {
                let step = p / dp;
                if step.abs() < R::one() {
                    *z -= step;
                }
            }
        }
    }
    out.extend(zs);
    out
}

/// Number of monomials of degree d in three variables.
pub fn mono_count(d: usize) -> usize {
    (d + 1) * (d + 2) / 2
}

/// Exponent triples of degree d in the documented order: sorted by descending
/// x-exponent, then descending y-exponent. For d = 3 this is
/// x^3, x^2 y, x^2 z, x y^2, x y z, x z^2, y^3, y^2 z, y z^2, z^3.
pub fn monomials(d: usize) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(mono_count(d));
    for i in (0..=d).rev() {
        for j in (0..=d - i).rev() {
            out.push((i, j, d - i - j));
        }
    }
    out
}

fn mono_index(d: usize, e: (usize, usize, usize)) -> usize {
    // index of (i,j,k) within monomials(d)
    let (i, j, _) = e;
    let before_i: usize = (i + 1..=d).map(|a| d - a + 1).sum();
    before_i + (d - i - j)
}

/// Dense homogeneous polynomial in x, y, z.
#[derive(Clone, Debug, PartialEq)]
pub struct HPoly<R> {
    pub degree: usize,
    pub coeffs: Vec<Cx<R>>,
}

impl<R: Real> HPoly<R> {
    pub fn new(degree: usize, coeffs: Vec<Cx<R>>) -> Self {
        assert_eq!(coeffs.len(), mono_count(degree));
        HPoly { degree, coeffs }
    }

    pub fn zero(degree: usize) -> Self {
        HPoly::new(degree, vec![Cx::zero(); mono_count(degree)])
    }

    /// The linear form a x + b y + c z.
    pub fn linear(a: Cx<R>, b: Cx<R>, c: Cx<R>) -> Self {
        HPoly::new(1, vec![a, b, c])
    }

    pub fn eval(&self, p: &[Cx<R>; 3]) -> Cx<R> {
        let mut xp = vec![Cx::one(); self.degree + 1];
        let mut yp = vec![Cx::one(); self.degree + 1];
        let mut zp = vec![Cx::one(); self.degree + 1];
        for k in 1..=self.degree {
            xp[k] = xp[k - 1] * p[0];
            yp[k] = yp[k - 1] * p[1];
            zp[k] = zp[k - 1] * p[2];
        }
        let mut acc = Cx::zero();
        for (c, (i, j, k)) in self.coeffs.iter().zip(monomials(self.degree)) {
            acc += *c * xp[i] * yp[j] * zp[k];
        }
        acc
    }

    pub fn mul(&self, other: &Self) -> Self {
        let d = self.degree + other.degree;
        let mut out = HPoly::zero(d);
        let ma = monomials(self.degree);
        let mb = monomials(other.degree);
        for (ca, ea) in self.coeffs.iter().zip(&ma) {
            if ca.abs_sq() == R::zero() {
                continue;
            }
            for (cb, eb) in other.coeffs.iter().zip(&mb) {
                let e = (ea.0 + eb.0, ea.1 + eb.1, ea.2 + eb.2);
                out.coeffs[mono_index(d, e)] += *ca * *cb;
            }
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Self, s: Cx<R>) {
        assert_eq!(self.degree, other.degree);
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += *b * s;
        }
    }

    /// Partial derivative in variable 0, 1 or 2.
    pub fn partial(&self, var: usize) -> Self {
        if self.degree == 0 {
            return HPoly::zero(0);
        }
        let d = self.degree - 1;
        let mut out = HPoly::zero(d);
        for (c, e) in self.coeffs.iter().zip(monomials(self.degree)) {
            let exp = [e.0, e.1, e.2];
            if exp[var] == 0 {
                continue;
            }
            let mut ne = exp;
            ne[var] -= 1;
            out.coeffs[mono_index(d, (ne[0], ne[1], ne[2]))] +=
                c.scale(R::from_f64(exp[var] as f64));
        }
        out
    }

    /// Substitute x_i -> sum_j m[i][j] x'_j (coordinate change by matrix m).
    pub fn compose_linear(&self, m: &[[Cx<R>; 3]; 3]) -> Self {
        let rows: Vec<HPoly<R>> = (0..3)
            .map(|i| HPoly::linear(m[i][0], m[i][1], m[i][2]))
            .collect();
        let mut out = HPoly::zero(self.degree);
        for (c, e) in self.coeffs.iter().zip(monomials(self.degree)) {
            if c.abs_sq() == R::zero() {
                continue;
            }
            let mut term = HPoly::new(0, vec![*c]);
            for _ in 0..e.0 {
                term = term.mul(&rows[0]);
            }
            for _ in 0..e.1 {
                term = term.mul(&rows[1]);
            }
            for _ in 0..e.2 {
                term = term.mul(&rows[2]);
            }
            if term.degree == self.degree {
                for (a, b) in out.coeffs.iter_mut().zip(&term.coeffs) {
                    *a += *b;
                }
            }
        }
        out
    }

    pub fn max_coeff(&self) -> R {
        self.coeffs
            .iter()
            .map(|c| c.abs())
            .fold(R::zero(), |a, b| a.max(b))
    }

    /// Scale to unit max-norm with deterministic phase.
    pub fn normalized(&self) -> Self {
        let mut v = self.coeffs.clone();
        crate::linalg::canonical_phase(&mut v);
        let m = v.iter().map(|c| c.abs()).fold(R::zero(), |a, b| a.max(b));
        if m > R::zero() {
            let inv = R::one() / m;
            for c in v.iter_mut() {
                *c = c.scale(inv);
            }
        }
        HPoly::new(self.degree, v)
    }

    /// Restriction to the line {s*a + t*b}: binary form coefficients of s^(d-k) t^k.
    pub fn restrict_to_line(&self, a: &[Cx<R>; 3], b: &[Cx<R>; 3]) -> Vec<Cx<R>> {
        // Evaluate at d+1 nodes s=1, t = node_k and solve the Vandermonde,
        // but direct expansion is exact and cheap: substitute x_i = s a_i + t b_i.
        let d = self.degree;
        let mut out = vec![Cx::zero(); d + 1];
        // binom table
        let mut binom = vec![vec![0f64; d + 1]; d + 1];
        for i in 0..=d {
            binom[i][0] = 1.0;
            for j in 1..=i {
                binom[i][j] = binom[i - 1][j - 1] + if j <= i - 1 { binom[i - 1][j] } else { 0.0 };
            }
        }
        for (c, (i, j, k)) in self.coeffs.iter().zip(monomials(d)) {
            if c.abs_sq() == R::zero() {
                continue;
            }
            // (s a0 + t b0)^i (s a1 + t b1)^j (s a2 + t b2)^k
            // expand each factor's binomial and convolve
            let expand = |p: usize, av: Cx<R>, bv: Cx<R>| -> Vec<Cx<R>> {
                let mut v = vec![Cx::zero(); p + 1];
                let mut apow = vec![Cx::one(); p + 1];
                let mut bpow = vec![Cx::one(); p + 1];
                for q in 1..=p {
                    apow[q] = apow[q - 1] * av;
                    bpow[q] = bpow[q - 1] * bv;
                }
                for (q, slot) in v.iter_mut().enumerate() {
                    *slot = apow[p - q] * bpow[q] * Cx::from_f64(binom[p][q], 0.0);
                }
                v
            };
            let fx = expand(i, a[0], b[0]);
            let fy = expand(j, a[1], b[1]);
            let fz = expand(k, a[2], b[2]);
            let mut conv = vec![Cx::zero(); i + j + 1];
            for (p, vx) in fx.iter().enumerate() {
                for (q, vy) in fy.iter().enumerate() {
                    conv[p + q] += *vx * *vy;
                }
            }
            for (p, vc) in conv.iter().enumerate() {
                for (q, vz) in fz.iter().enumerate() {
                    out[p + q] += *c * *vc * *vz;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::C64;

    #[test]
    fn mono_index_consistent() {
        for d in 1..=6 {
            for (idx, e) in monomials(d).into_iter().enumerate() {
                assert_eq!(mono_index(d, e), idx);
            }
        }
    }

    #[test]
    fn documented_cubic_order() {
        let want = [
            (3, 0, 0),
            (2, 1, 0),
            (2, 0, 1),
            (1, 2, 0),
            (1, 1, 1),
            (1, 0, 2),
            (0, 3, 0),
            (0, 2, 1),
            (0, 1, 2),
            (0, 0, 3),
        ];
        assert_eq!(monomials(3), want);
    }

    #[test]
    fn roots_of_cubic() {
        // (z-1)(z-2)(z+3) = z^3 - 7z + 6
        let p: Vec<C64> = [6.0, -7.0, 0.0, 1.0]
            .iter()
            .map(|&c| Cx::from_f64(c, 0.0))
            .collect();
        let mut rs: Vec<f64> = roots(&p).into_iter().map(|z| z.re).collect();
        rs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!((rs[0] + 3.0).abs() < 1e-10);
        assert!((rs[1] - 1.0).abs() < 1e-10);
        assert!((rs[2] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn double_root_clusters() {
        // (z-2)^2 (z-5)
        let p: Vec<C64> = [-20.0, 24.0, -9.0, 1.0]
            .iter()
            .map(|&c| Cx::from_f64(c, 0.0))
            .collect();
        let rs = roots(&p);
        let near2 = rs.iter().filter(|z| (**z - Cx::from_f64(2.0, 0.0)).abs() < 1e-5).count();
        let near5 = rs.iter().filter(|z| (**z - Cx::from_f64(5.0, 0.0)).abs() < 1e-8).count();
        assert_eq!(near2, 2);
        assert_eq!(near5, 1);
    }

    #[test]
    fn compose_linear_matches_eval() {
        let f: HPoly<f64> = HPoly::new(
            3,
            (0..10)
                .map(|k| Cx::from_f64(0.3 * k as f64 - 1.1, 0.17 * k as f64))
                .collect(),
        );
        let m = [
            [Cx::from_f64(0.2, 0.1), Cx::from_f64(-1.0, 0.0), Cx::from_f64(0.5, -0.3)],
            [Cx::from_f64(1.1, 0.0), Cx::from_f64(0.4, 0.2), Cx::from_f64(0.0, 0.7)],
            [Cx::from_f64(-0.6, 0.5), Cx::from_f64(0.9, 0.0), Cx::from_f64(1.3, 0.1)],
        ];
        let g = f.compose_linear(&m);
        let p = [Cx::from_f64(0.7, -0.2), Cx::from_f64(-0.1, 0.9), Cx::from_f64(1.0, 0.0)];
        let mp = [
            m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
            m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
            m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
        ];
        assert!((g.eval(&p) - f.eval(&mp)).abs() < 1e-12);
    }

    #[test]
    fn restrict_to_line_matches_eval() {
        let f: HPoly<f64> = HPoly::new(
            3,
            (0..10)
                .map(|k| Cx::from_f64((k as f64).sin(), (k as f64).cos()))
                .collect(),
        );
        let a = [Cx::from_f64(1.0, 0.2), Cx::from_f64(0.0, -1.0), Cx::from_f64(0.3, 0.0)];
        let b = [Cx::from_f64(-0.5, 0.0), Cx::from_f64(0.8, 0.1), Cx::from_f64(0.0, 1.0)];
        let bin = f.restrict_to_line(&a, &b);
        for &(s, t) in &[(1.0, 0.0), (0.0, 1.0), (0.6, -0.8), (2.0, 3.0)] {
            let sp: C64 = Cx::from_f64(s, 0.0);
            let tp: C64 = Cx::from_f64(t, 0.0);
            let pt = [
                a[0] * sp + b[0] * tp,
                a[1] * sp + b[1] * tp,
                a[2] * sp + b[2] * tp,
            ];
            let direct = f.eval(&pt);
            let mut acc = Cx::zero();
            for (q, c) in bin.iter().enumerate() {
                let mut term = *c;
                for _ in 0..(3 - q) {
                    term *= sp;
                }
                for _ in 0..q {
                    term *= tp;
                }
                acc += term;
            }
            assert!((acc - direct).abs() < 1e-12);
        }
    }
}

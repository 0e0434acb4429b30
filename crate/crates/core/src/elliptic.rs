//! Smooth plane cubics with a chosen flex base point: chord–tangent group
//! law, translation by a stored point, and Picard-class bookkeeping.
//!
//! With a flex as base point the three sections of any line sum to the
//! identity, so hyperplane classes contribute nothing to divisor sums and
//! every sum constraint reduces to a pure multiple of the translation point.

use crate::complex::Cx;
use crate::linalg::{self, CMat};
use crate::plane::{self, PlaneCurve, PlaneDivisor, ProjPoint};
use crate::poly::{self, HPoly};
use crate::scalar::Real;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EllipticError {
    #[error("cubic appears singular (probe residual {0:e})")]
    SingularCubic(f64),
    #[error("point is not on the curve (residual {0:e})")]
    OffCurve(f64),
    #[error("no flex found")]
    NoFlex,
    #[error("degenerate line in chord construction")]
    DegenerateChord,
    #[error("root solve failed: {0}")]
    RootSolve(String),
    #[error(transparent)]
    Plane(#[from] plane::PlaneError),
}

pub type EllResult<T> = Result<T, EllipticError>;

/// A point known to lie on a specific cubic; produced by curve methods.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CurvePoint<R> {
    pub point: ProjPoint<R>,
}

impl<R: Real> CurvePoint<R> {
    pub fn dist(&self, other: &CurvePoint<R>) -> R {
        self.point.dist(&other.point)
    }
    pub fn approx_eq(&self, other: &CurvePoint<R>, tolerance: R) -> bool {
        self.dist(other) <= tolerance
    }
}

/// Picard class of an effective divisor: degree plus the group-law sum of its
/// points (Abel point). Two classes agree iff degrees match and Abel points
/// coincide projectively.
#[derive(Clone, Copy, Debug)]
pub struct PicClass<R> {
    pub degree: i64,
    pub abel: CurvePoint<R>,
}

impl<R: Real> PicClass<R> {
    pub fn approx_eq(&self, other: &PicClass<R>, tolerance: R) -> bool {
        self.degree == other.degree && self.abel.approx_eq(&other.abel, tolerance)
    }
}

#[derive(Clone, Debug)]
pub struct EllipticCurve<R> {
    pub cubic: PlaneCurve<R>,
    /// Flex base point O.
    pub base: CurvePoint<R>,
    /// Translation amount t; tau is translation by t.
    pub translation: CurvePoint<R>,
}

const ON_CURVE_TOL: f64 = 1e-6;

impl<R: Real> EllipticCurve<R> {
    /// Build from a cubic: checks smoothness, picks the deterministic flex as
    /// base point, and initially sets t = O (the commutative limit).
    pub fn from_cubic(cubic: PlaneCurve<R>, seed: u64) -> EllResult<Self> {
        assert_eq!(cubic.degree(), 3);
        let probe = plane::smoothness_probe(&cubic, seed ^ 0x5111);
        if probe < 1e-6 {
            return Err(EllipticError::SingularCubic(probe));
        }
        let base = find_flex(&cubic, seed)?;
        let base = CurvePoint { point: base };
        Ok(EllipticCurve {
            cubic,
            base,
            translation: base,
        })
    }

    pub fn with_translation(mut self, t: CurvePoint<R>) -> Self {
        self.translation = t;
        self
    }

    pub fn on_curve_residual(&self, p: &ProjPoint<R>) -> R {
        self.cubic.evaluate(p).abs()
    }

    /// Validate and Newton-polish a raw point onto the curve.
    pub fn point(&self, raw: ProjPoint<R>) -> EllResult<CurvePoint<R>> {
        let r0 = self.on_curve_residual(&raw);
        if r0 > plane::tol::<R>(ON_CURVE_TOL) {
            return Err(EllipticError::OffCurve(r0.to_f64()));
        }
        Ok(CurvePoint {
            point: project_onto_curve(&self.cubic, raw),
        })
    }

    pub fn third_intersection(
        &self,
        p: &CurvePoint<R>,
        q: &CurvePoint<R>,
    ) -> EllResult<CurvePoint<R>> {
        let r = third_on_cubic(&self.cubic, &p.point, &q.point)?;
        Ok(CurvePoint { point: r })
    }

    pub fn add(&self, p: &CurvePoint<R>, q: &CurvePoint<R>) -> EllResult<CurvePoint<R>> {
        let r = self.third_intersection(p, q)?;
        self.third_intersection(&self.base, &r)
    }

    pub fn neg(&self, p: &CurvePoint<R>) -> EllResult<CurvePoint<R>> {
        self.third_intersection(p, &self.base)
    }

    pub fn sub(&self, p: &CurvePoint<R>, q: &CurvePoint<R>) -> EllResult<CurvePoint<R>> {
        let nq = self.neg(q)?;
        self.add(p, &nq)
    }

    /// n-fold group sum by double-and-add; 0 gives the base point.
    pub fn scalar_mul(&self, n: i64, p: &CurvePoint<R>) -> EllResult<CurvePoint<R>> {
        if n == 0 {
            return Ok(self.base);
        }
        let (mut k, base_pt) = if n < 0 {
            ((-n) as u64, self.neg(p)?)
        } else {
            (n as u64, *p)
        };
        let mut acc: Option<CurvePoint<R>> = None;
        let mut doubling = base_pt;
        loop {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => doubling,
                    Some(a) => self.add(&a, &doubling)?,
                });
            }
            k >>= 1;
            if k == 0 {
                break;
            }
            doubling = self.add(&doubling, &doubling)?;
        }
        Ok(acc.unwrap())
    }

    /// p translated by k steps of tau, i.e. p + k*t.
    pub fn tau_pow(&self, p: &CurvePoint<R>, k: i64) -> EllResult<CurvePoint<R>> {
        if k == 0 {
            return Ok(*p);
        }
        let kt = self.scalar_mul(k, &self.translation)?;
        self.add(p, &kt)
    }

    /// Degree and Abel point of an effective divisor on the curve.
    pub fn pic_sum(&self, points: &[CurvePoint<R>]) -> EllResult<PicClass<R>> {
        let mut abel = self.base;
        for p in points {
            abel = self.add(&abel, p)?;
        }
        Ok(PicClass {
            degree: points.len() as i64,
            abel,
        })
    }

    /// Residual of the sum constraint: the Abel point of the tuple against
    /// 3(chi - d) times the translation point. Zero residual means the tuple
    /// lies in the constrained parameter space at level chi.
    pub fn check_constraint(&self, points: &[CurvePoint<R>], d: i64, chi: i64) -> EllResult<R> {
        let sum = self.pic_sum(points)?;
        let target = self.scalar_mul(3 * (chi - d), &self.translation)?;
        Ok(sum.abel.dist(&target))
    }

    /// Deterministic on-curve point from a seed: intersect with a random line
    /// and take the root with the smallest canonical sort key.
    pub fn random_point(&self, seed: u64) -> EllResult<CurvePoint<R>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xe11);
        for _ in 0..8 {
            let a = random_proj_point::<R>(&mut rng);
            let b = random_proj_point::<R>(&mut rng);
            let bin = self.cubic.form.restrict_to_line(&a.coords, &b.coords);
            let rs = poly::roots(&bin);
            if rs.len() != 3 {
                continue;
            }
            let mut pts: Vec<ProjPoint<R>> = rs
                .into_iter()
                .map(|t| {
                    ProjPoint::new([
                        a.coords[0] + b.coords[0] * t,
                        a.coords[1] + b.coords[1] * t,
                        a.coords[2] + b.coords[2] * t,
                    ])
                })
                .collect();
            pts.sort_by_key(|p| p.sort_key());
            let candidate = project_onto_curve(&self.cubic, pts[0]);
            if self.on_curve_residual(&candidate) < plane::tol::<R>(1e-9) {
                return Ok(CurvePoint { point: candidate });
            }
        }
        Err(EllipticError::RootSolve(
            "no on-curve point after retries".into(),
        ))
    }

    /// Intersection of the curve with another plane curve, as curve points.
    pub fn intersect_with(
        &self,
        other: &PlaneCurve<R>,
        seed: u64,
    ) -> EllResult<Vec<CurvePoint<R>>> {
        let div = plane::intersect(&self.cubic, other, seed)?;
        div.points
            .into_iter()
            .map(|p| self.point(p))
            .collect::<EllResult<Vec<_>>>()
    }

    pub fn divisor(&self, points: &[CurvePoint<R>]) -> PlaneDivisor<R> {
        PlaneDivisor::on_curve(points.iter().map(|p| p.point).collect(), self.cubic.clone())
    }

    pub fn to_c64(&self) -> EllipticCurve<f64> {
        EllipticCurve {
            cubic: PlaneCurve::new(
                3,
                self.cubic.form.coeffs.iter().map(|c| c.to_c64()).collect(),
            ),
            base: CurvePoint {
                point: self.base.point.to_c64(),
            },
            translation: CurvePoint {
                point: self.translation.point.to_c64(),
            },
        }
    }
}

/// Newton projection onto the cubic: gradient-direction correction of the
/// single homogeneous equation, renormalizing each step.
pub fn project_onto_curve<R: Real>(cubic: &PlaneCurve<R>, raw: ProjPoint<R>) -> ProjPoint<R> {
    let grads: Vec<HPoly<R>> = (0..3).map(|v| cubic.form.partial(v)).collect();
    let mut p = raw;
    for _ in 0..6 {
        let f = cubic.form.eval(&p.coords);
        if f.abs() <= R::eps() * R::from_f64(8.0) {
            break;
        }
        let g: Vec<Cx<R>> = grads.iter().map(|gp| gp.eval(&p.coords)).collect();
        let norm2 = g[0].abs_sq() + g[1].abs_sq() + g[2].abs_sq();
        if norm2 == R::zero() {
            break;
        }
        let mut c = p.coords;
        for k in 0..3 {
            c[k] = p.coords[k] - g[k].conj() * f.scale(R::one() / norm2);
        }
        p = ProjPoint::new(c);
    }
    p
}

/// Third intersection of the cubic with the line through p and q (tangent
/// line when p = q). Free-standing so callers can use it on any smooth cubic,
/// not only one with a chosen base point.
pub fn third_on_cubic<R: Real>(
    cubic: &PlaneCurve<R>,
    p: &ProjPoint<R>,
    q: &ProjPoint<R>,
) -> EllResult<ProjPoint<R>> {
    let tangent_case = p.dist(q) <= plane::tol::<R>(1e-9);
    let (a, b) = if tangent_case {
        let dir = tangent_direction(cubic, p)?;
        (*p, dir)
    } else {
        (*p, *q)
    };
    // Cubic restricted to {a + t b}: coefficients of t^0..t^3.
    let bin = cubic.form.restrict_to_line(&a.coords, &b.coords);
    let maxc = bin.iter().map(|c| c.abs()).fold(R::zero(), |x, y| x.max(y));
    if maxc <= plane::tol::<R>(1e-12) {
        return Err(EllipticError::DegenerateChord);
    }
    let tiny = maxc * plane::tol::<R>(1e-9);
    let t_root = if tangent_case {
        // double root at t=0: remaining factor bin2 + bin3 t
        if bin[3].abs() <= tiny {
            // tangent direction point lies on the curve: it is the third point
            return Ok(ProjPoint::new(b.coords));
        }
        -(bin[2] / bin[3])
    } else {
        // roots at t=0 (p) and t=infinity (q): remaining bin1 + bin2 t
        if bin[2].abs() <= tiny {
            // line is tangent at q; the third intersection is q itself
            return Ok(*q);
        }
        -(bin[1] / bin[2])
    };
    // Newton polish, but only where the root is honestly simple: at a flex or
    // tangency the derivative is noise-level and Newton would wander off to a
    // spurious root of the noise cubic.
    let mut t = t_root;
    let (_, df0) = poly::eval_poly_deriv(&bin, t);
    if df0.abs() > maxc * R::from_f64(1e-6) {
        let mut fprev = R::from_f64(f64::MAX);
        for _ in 0..8 {
            let (f, df) = poly::eval_poly_deriv(&bin, t);
            if df.abs() == R::zero() || f.abs() >= fprev {
                break;
            }
            fprev = f.abs();
            let step = f / df;
            if step.abs() > R::from_f64(0.1) * (t.abs() + R::one()) {
                break; // keep the algebraic root if Newton wants to leave the basin
            }
            t -= step;
            if step.abs() <= R::eps() * (t.abs() + R::one()) {
                break;
            }
        }
    }
    let out = ProjPoint::new([
        a.coords[0] + b.coords[0] * t,
        a.coords[1] + b.coords[1] * t,
        a.coords[2] + b.coords[2] * t,
    ]);
    Ok(project_onto_curve(cubic, out))
}

/// A point spanning the tangent line at p together with p (not equal to p).
fn tangent_direction<R: Real>(cubic: &PlaneCurve<R>, p: &ProjPoint<R>) -> EllResult<ProjPoint<R>> {
    let g: Vec<Cx<R>> = (0..3)
        .map(|v| cubic.form.partial(v).eval(&p.coords))
        .collect();
    let mut m = CMat::zeros(1, 3);
    for k in 0..3 {
        m[(0, k)] = g[k];
    }
    let dec = linalg::svd(&m);
    // kernel of the gradient row is the tangent line; pick the direction most
    // orthogonal to p for conditioning
    let k1 = dec.v.col(1);
    let k2 = dec.v.col(2);
    let pn = {
        let n = (p.coords[0].abs_sq() + p.coords[1].abs_sq() + p.coords[2].abs_sq()).sqrt();
        let inv = R::one() / n;
        [
            p.coords[0].scale(inv),
            p.coords[1].scale(inv),
            p.coords[2].scale(inv),
        ]
    };
    let overlap_with_p = |u: &[Cx<R>]| -> R {
        let mut s = Cx::zero();
        for i in 0..3 {
            s += pn[i].conj() * u[i];
        }
        s.abs()
    };
    let mut dir = if overlap_with_p(&k1) <= overlap_with_p(&k2) {
        k1
    } else {
        k2
    };
    // Gram-Schmidt against p for robustness
    let mut ov = Cx::zero();
    for i in 0..3 {
        ov += pn[i].conj() * dir[i];
    }
    for i in 0..3 {
        dir[i] -= pn[i] * ov;
    }
    let n = (dir[0].abs_sq() + dir[1].abs_sq() + dir[2].abs_sq()).sqrt();
    if n <= plane::tol::<R>(1e-12) {
        return Err(EllipticError::DegenerateChord);
    }
    Ok(ProjPoint::new([dir[0], dir[1], dir[2]]))
}

/// Hessian cubic: determinant of the matrix of second partials.
pub fn hessian_cubic<R: Real>(cubic: &PlaneCurve<R>) -> PlaneCurve<R> {
    let mut h: Vec<Vec<HPoly<R>>> = Vec::with_capacity(3);
    for i in 0..3 {
        let fi = cubic.form.partial(i);
        h.push((0..3).map(|j| fi.partial(j)).collect());
    }
    let mut det = HPoly::zero(3);
    let perms: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([0, 2, 1], -1.0),
        ([2, 1, 0], -1.0),
        ([1, 0, 2], -1.0),
    ];
    for (perm, sign) in perms {
        let prod = h[0][perm[0]].mul(&h[1][perm[1]]).mul(&h[2][perm[2]]);
        det.add_scaled(&prod, Cx::from_f64(sign, 0.0));
    }
    PlaneCurve::from_form(det)
}

/// Flex of a smooth cubic: intersection with the Hessian, flex tangency
/// verified, deterministic smallest candidate returned.
pub fn find_flex<R: Real>(cubic: &PlaneCurve<R>, seed: u64) -> EllResult<ProjPoint<R>> {
    let hess = hessian_cubic(cubic);
    let div = plane::intersect(cubic, &hess, seed ^ 0xf1e)?;
    let mut candidates: Vec<ProjPoint<R>> = Vec::new();
    for p in div.points {
        let polished = project_onto_curve(cubic, p);
        if is_flex(cubic, &polished)
            && !candidates
                .iter()
                .any(|q| q.dist(&polished) < plane::tol::<R>(1e-6))
        {
            candidates.push(polished);
        }
    }
    if candidates.is_empty() {
        return Err(EllipticError::NoFlex);
    }
    candidates.sort_by_key(|p| p.sort_key());
    Ok(candidates[0])
}

/// Flex test: the tangent line meets the curve with multiplicity three, i.e.
/// the restricted cubic has (numerically) vanishing t^0, t^1, t^2 terms.
pub fn is_flex<R: Real>(cubic: &PlaneCurve<R>, p: &ProjPoint<R>) -> bool {
    let dir = match tangent_direction(cubic, p) {
        Ok(d) => d,
        Err(_) => return false,
    };
    let bin = cubic.form.restrict_to_line(&p.coords, &dir.coords);
    let maxc = bin.iter().map(|c| c.abs()).fold(R::zero(), |x, y| x.max(y));
    if maxc == R::zero() {
        return false;
    }
    let rel = plane::tol::<R>(2e-5);
    bin[0].abs() <= maxc * rel && bin[1].abs() <= maxc * rel && bin[2].abs() <= maxc * rel
}

pub fn random_proj_point<R: Real>(rng: &mut ChaCha8Rng) -> ProjPoint<R> {
    loop {
        let c: Vec<Cx<R>> = (0..3)
            .map(|_| Cx::from_f64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let m = c.iter().map(|z| z.abs().to_f64()).fold(0.0, f64::max);
        if m > 0.05 {
            return ProjPoint::new([c[0], c[1], c[2]]);
        }
    }
}

/// Sample a smooth random cubic together with flex base point and a generic
/// translation point; the standard test-fixture generator.
pub fn random_curve<R: Real>(seed: u64) -> EllResult<EllipticCurve<R>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let coeffs: Vec<Cx<R>> = (0..10)
            .map(|_| Cx::from_f64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let cubic = PlaneCurve::new(3, coeffs);
        match EllipticCurve::from_cubic(cubic, seed) {
            Ok(curve) => {
                let t = curve.random_point(seed ^ 0x7a11)?;
                return Ok(curve.with_translation(t));
            }
            Err(_) => continue,
        }
    }
    Err(EllipticError::NoFlex)
}

#[cfg(test)]
pub fn weierstrass_curve() -> EllipticCurve<f64> {
    // y^2 z = x^3 + z^3 with O = [0:1:0].
    let mut c = vec![Cx::<f64>::zero(); 10];
    c[0] = Cx::from_f64(-1.0, 0.0);
    c[7] = Cx::from_f64(1.0, 0.0);
    c[9] = Cx::from_f64(-1.0, 0.0);
    EllipticCurve::from_cubic(PlaneCurve::new(3, c), 1).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weierstrass_flex_is_point_at_infinity() {
        let e = weierstrass_curve();
        let o = ProjPoint::from_real(0.0, 1.0, 0.0);
        assert!(e.base.point.dist(&o) < 1e-9);
    }

    #[test]
    fn fermat_flex_has_opposite_coordinates() {
        // x^3 + y^3 + z^3
        let mut c = vec![Cx::<f64>::zero(); 10];
        c[0] = Cx::one();
        c[6] = Cx::one();
        c[9] = Cx::one();
        let cubic = PlaneCurve::new(3, c);
        let flex = find_flex(&cubic, 2).unwrap();
        // one coordinate vanishes, the other two sum to zero
        let mut vals: Vec<Cx<f64>> = flex.coords.to_vec();
        vals.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        assert!(vals[0].abs() < 1e-8, "one coordinate ~ 0");
        assert!((vals[1] + vals[2]).abs() < 1e-8, "other two opposite");
        // and the Hessian intersection really has 9 candidates
        let hess = hessian_cubic(&cubic);
        let div = plane::intersect(&cubic, &hess, 3).unwrap();
        assert_eq!(div.degree(), 9);
    }

    #[test]
    fn chord_examples_on_weierstrass() {
        let e = weierstrass_curve();
        let p = e.point(ProjPoint::from_real(0.0, 1.0, 1.0)).unwrap();
        let q = e.point(ProjPoint::from_real(0.0, -1.0, 1.0)).unwrap();
        let third = e.third_intersection(&p, &q).unwrap();
        assert!(third.point.dist(&ProjPoint::from_real(0.0, 1.0, 0.0)) < 1e-10);
        // tangent at (2,3,1) gives (0,-1,1)
        let r = e.point(ProjPoint::from_real(2.0, 3.0, 1.0)).unwrap();
        let tr = e.third_intersection(&r, &r).unwrap();
        assert!(tr.point.dist(&ProjPoint::from_real(0.0, -1.0, 1.0)) < 1e-10);
        // third(O, O) = O at a flex
        let oo = e.third_intersection(&e.base, &e.base).unwrap();
        assert!(oo.dist(&e.base) < 1e-10);
    }

    #[test]
    fn addition_examples() {
        let e = weierstrass_curve();
        let p = e.point(ProjPoint::from_real(0.0, 1.0, 1.0)).unwrap();
        let q = e.point(ProjPoint::from_real(0.0, -1.0, 1.0)).unwrap();
        let s = e.add(&p, &q).unwrap();
        assert!(s.dist(&e.base) < 1e-10, "inverse points sum to O");
        let r = e.point(ProjPoint::from_real(2.0, 3.0, 1.0)).unwrap();
        let dbl = e.add(&r, &r).unwrap();
        assert!(dbl.point.dist(&ProjPoint::from_real(0.0, 1.0, 1.0)) < 1e-9);
        // identity
        let rp = e.add(&r, &e.base).unwrap();
        assert!(rp.dist(&r) < 1e-10);
    }

    #[test]
    fn group_axioms_on_random_curve() {
        let e = random_curve::<f64>(42).unwrap();
        for k in 0..12u64 {
            let p = e.random_point(1000 + k).unwrap();
            let q = e.random_point(2000 + k).unwrap();
            let r = e.random_point(3000 + k).unwrap();
            let left = e.add(&e.add(&p, &q).unwrap(), &r).unwrap();
            let right = e.add(&p, &e.add(&q, &r).unwrap()).unwrap();
            assert!(
                left.dist(&right) < 1e-8,
                "assoc failed k={k}: {}",
                left.dist(&right)
            );
            let com_l = e.add(&p, &q).unwrap();
            let com_r = e.add(&q, &p).unwrap();
            assert!(com_l.dist(&com_r) < 1e-10);
            let np = e.neg(&p).unwrap();
            assert!(e.add(&p, &np).unwrap().dist(&e.base) < 1e-9);
        }
    }

    #[test]
    fn scalar_mul_and_inverse() {
        let e = random_curve::<f64>(7).unwrap();
        let p = e.random_point(5).unwrap();
        assert!(e.scalar_mul(0, &p).unwrap().dist(&e.base) < 1e-12);
        assert!(e.scalar_mul(1, &p).unwrap().dist(&p) < 1e-12);
        for n in [2i64, 3, 7, 16] {
            let a = e.scalar_mul(n, &p).unwrap();
            let b = e.scalar_mul(-n, &p).unwrap();
            assert!(e.add(&a, &b).unwrap().dist(&e.base) < 1e-8, "n={n}");
        }
    }

    #[test]
    fn tau_pow_is_z_action() {
        let e = random_curve::<f64>(11).unwrap();
        let p = e.random_point(6).unwrap();
        assert!(e.tau_pow(&p, 0).unwrap().dist(&p) < 1e-12);
        let a = e.tau_pow(&e.tau_pow(&p, 2).unwrap(), 3).unwrap();
        let b = e.tau_pow(&p, 5).unwrap();
        assert!(a.dist(&b) < 1e-9);
        // t = O freezes the action
        let frozen = e.clone().with_translation(e.base);
        for k in [-2i64, 1, 4] {
            assert!(frozen.tau_pow(&p, k).unwrap().dist(&p) < 1e-10);
        }
        // tau^3(p) - p = 3t
        let three_t = e.scalar_mul(3, &e.translation).unwrap();
        let moved = e.tau_pow(&p, 3).unwrap();
        let diff = e.sub(&moved, &p).unwrap();
        assert!(diff.dist(&three_t) < 1e-9);
    }

    #[test]
    fn line_sections_sum_to_base() {
        let e = random_curve::<f64>(13).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for k in 0..5 {
            let a = random_proj_point::<f64>(&mut rng);
            let b = random_proj_point::<f64>(&mut rng);
            let line = match plane::interpolate_curve(&[a, b], 1) {
                Ok((l, _)) => l,
                Err(_) => continue,
            };
            let pts = e.intersect_with(&line, 500 + k).unwrap();
            assert_eq!(pts.len(), 3);
            let sum = e.pic_sum(&pts).unwrap();
            assert!(
                sum.abel.dist(&e.base) < 1e-8,
                "line sections must sum to O, got {}",
                sum.abel.dist(&e.base)
            );
        }
    }

    #[test]
    fn nine_cubic_sections_sum_to_base() {
        let e = random_curve::<f64>(17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let other = PlaneCurve::new(
            3,
            (0..10)
                .map(|_| Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                .collect(),
        );
        let pts = e.intersect_with(&other, 91).unwrap();
        assert_eq!(pts.len(), 9);
        let sum = e.pic_sum(&pts).unwrap();
        assert!(sum.abel.dist(&e.base) < 1e-7);
    }

    #[test]
    fn pic_sum_permutation_invariance_and_extension() {
        let e = random_curve::<f64>(19).unwrap();
        let pts: Vec<CurvePoint<f64>> = (0..6).map(|k| e.random_point(70 + k).unwrap()).collect();
        let s1 = e.pic_sum(&pts).unwrap();
        let mut rev = pts.clone();
        rev.reverse();
        let s2 = e.pic_sum(&rev).unwrap();
        assert!(s1.approx_eq(&s2, 1e-9));
        // pic_sum(D + x) = pic_sum(D) + x
        let x = e.random_point(555).unwrap();
        let mut ext = pts.clone();
        ext.push(x);
        let s3 = e.pic_sum(&ext).unwrap();
        let manual = e.add(&s1.abel, &x).unwrap();
        assert!(s3.abel.dist(&manual) < 1e-9);
        assert_eq!(s3.degree, 7);
        // empty divisor
        let s0 = e.pic_sum(&[]).unwrap();
        assert_eq!(s0.degree, 0);
        assert!(s0.abel.dist(&e.base) < 1e-14);
    }

    #[test]
    fn constraint_targets() {
        let e = random_curve::<f64>(23).unwrap();
        // chi = d: target O; build nine points summing to O via correction
        let mut pts: Vec<CurvePoint<f64>> =
            (0..8).map(|k| e.random_point(900 + k).unwrap()).collect();
        let partial = e.pic_sum(&pts).unwrap();
        let last = e.neg(&partial.abel).unwrap();
        pts.push(last);
        let r = e.check_constraint(&pts, 3, 3).unwrap();
        assert!(r < 1e-8, "chi=d target is O, residual {r}");
        // chi = d + 1: target 3t; shift one point by 3t
        let mut pts4 = pts.clone();
        pts4[0] = e.tau_pow(&pts4[0], 3).unwrap();
        let r4 = e.check_constraint(&pts4, 3, 4).unwrap();
        assert!(r4 < 1e-8, "chi=d+1 target is 3t, residual {r4}");
        // chi = 1, d = 3: target -6t
        let mut pts1 = pts.clone();
        pts1[0] = e.tau_pow(&pts1[0], -6).unwrap();
        let r1 = e.check_constraint(&pts1, 3, 1).unwrap();
        assert!(r1 < 1e-8, "chi=1 target is -6t, residual {r1}");
    }

    #[test]
    fn random_point_determinism() {
        let e = random_curve::<f64>(29).unwrap();
        let a = e.random_point(123).unwrap();
        let b = e.random_point(123).unwrap();
        assert_eq!(a.point.coords, b.point.coords);
        let c = e.random_point(124).unwrap();
        assert!(a.dist(&c) > 1e-6, "different seeds give distinct points");
        assert!(e.on_curve_residual(&a.point) < 1e-12);
    }
}

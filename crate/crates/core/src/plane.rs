//! Plane projective geometry over complex floats: points, degree-d curves,
//! interpolation through point sets, curve–curve intersection, and the
//! residual-intersection construction of linear equivalence on a smooth
//! plane curve.

use crate::complex::Cx;
use crate::linalg::{self, CMat};
use crate::poly::{self, HPoly};
use crate::scalar::Real;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlaneError {
    #[error("interpolation kernel is ambiguous (sigma_min={s1:e}, sigma_next={s2:e})")]
    AmbiguousKernel { s1: f64, s2: f64 },
    #[error("interpolation kernel is empty (sigma_min={s1:e})")]
    EmptyKernel { s1: f64 },
    #[error("curves share a common component")]
    CommonComponent,
    #[error("intersection failed to condition after retries")]
    ConditioningFailure,
    #[error("divisor subtraction found no match within tolerance (worst={worst:e})")]
    UnmatchedPoint { worst: f64 },
    #[error("second auxiliary curve is not unique")]
    NonUniqueSecondCurve,
    #[error("line is contained in the curve")]
    DegenerateLine,
    #[error("{0}")]
    Other(String),
}

pub type PlaneResult<T> = Result<T, PlaneError>;

/// Tolerance scaled for the active precision.
pub fn tol<R: Real>(base: f64) -> R {
    R::from_f64(base * R::tol_scale())
}

/// Point of the complex projective plane, kept in canonical normalization:
/// the largest-modulus coordinate is scaled to exactly 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjPoint<R> {
    pub coords: [Cx<R>; 3],
}

impl<R: Real> ProjPoint<R> {
    pub fn new(coords: [Cx<R>; 3]) -> Self {
        let mut p = ProjPoint { coords };
        p.normalize();
        p
    }

    pub fn from_f64(x: (f64, f64), y: (f64, f64), z: (f64, f64)) -> Self {
        ProjPoint::new([
            Cx::from_f64(x.0, x.1),
            Cx::from_f64(y.0, y.1),
            Cx::from_f64(z.0, z.1),
        ])
    }

    pub fn from_real(x: f64, y: f64, z: f64) -> Self {
        Self::from_f64((x, 0.0), (y, 0.0), (z, 0.0))
    }

    fn normalize(&mut self) {
        let mut idx = 0;
        let mut best = R::zero();
        for (i, c) in self.coords.iter().enumerate() {
            let m = c.abs();
            if m > best {
                best = m;
                idx = i;
            }
        }
        assert!(best > R::zero(), "projective point has all-zero coordinates");
        let inv = self.coords[idx].recip();
        for c in self.coords.iter_mut() {
            *c = *c * inv;
        }
        self.coords[idx] = Cx::one(); // kill rounding residue in the pivot slot
    }

    /// Projective distance: both representatives on the unit sphere, minimum
    /// over complex scalings of the max-norm difference.
    pub fn dist(&self, other: &Self) -> R {
        let na = l2_normalize(self.coords);
        let nb = l2_normalize(other.coords);
        // optimal scaling of nb onto na in least squares: lambda = <nb, na>
        let mut lambda = Cx::zero();
        for k in 0..3 {
            lambda += nb[k].conj() * na[k];
        }
        let mut worst = R::zero();
        for k in 0..3 {
            worst = worst.max((na[k] - nb[k] * lambda).abs());
        }
        worst
    }

    pub fn approx_eq(&self, other: &Self, tolerance: R) -> bool {
        self.dist(other) <= tolerance
    }

    /// Deterministic sort key: per coordinate (|im|, |re|, re, im), each
    /// rounded to 1e-9, compared lexicographically. Real points with small
    /// coordinates sort first.
    pub fn sort_key(&self) -> [(i64, i64, i64, i64); 3] {
        let r = |x: R| (x.to_f64() * 1e9).round() as i64;
        let mut key = [(0, 0, 0, 0); 3];
        for (k, c) in self.coords.iter().enumerate() {
            key[k] = (r(c.im.abs()), r(c.re.abs()), r(c.re), r(c.im));
        }
        key
    }

    pub fn to_c64(&self) -> ProjPoint<f64> {
        ProjPoint::new([
            self.coords[0].to_c64(),
            self.coords[1].to_c64(),
            self.coords[2].to_c64(),
        ])
    }
}

fn l2_normalize<R: Real>(c: [Cx<R>; 3]) -> [Cx<R>; 3] {
    let n = (c[0].abs_sq() + c[1].abs_sq() + c[2].abs_sq()).sqrt();
    let inv = R::one() / n;
    [c[0].scale(inv), c[1].scale(inv), c[2].scale(inv)]
}

/// Degree-d plane curve with unit max-norm coefficients in the documented
/// graded-lex monomial order.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneCurve<R> {
    pub form: HPoly<R>,
}

impl<R: Real> PlaneCurve<R> {
    pub fn new(degree: usize, coeffs: Vec<Cx<R>>) -> Self {
        PlaneCurve {
            form: HPoly::new(degree, coeffs).normalized(),
        }
    }

    pub fn from_form(form: HPoly<R>) -> Self {
        PlaneCurve {
            form: form.normalized(),
        }
    }

    pub fn degree(&self) -> usize {
        self.form.degree
    }

    pub fn evaluate(&self, p: &ProjPoint<R>) -> Cx<R> {
        self.form.eval(&p.coords)
    }

    pub fn contains(&self, p: &ProjPoint<R>, tolerance: R) -> bool {
        self.evaluate(p).abs() <= tolerance
    }

    /// Distance between curves as projective coefficient vectors.
    pub fn coeff_dist(&self, other: &Self) -> R {
        assert_eq!(self.degree(), other.degree());
        let mut a = self.form.coeffs.clone();
        let mut b = other.form.coeffs.clone();
        linalg::canonical_phase(&mut a);
        linalg::canonical_phase(&mut b);
        let mut lambda = Cx::zero();
        for k in 0..a.len() {
            lambda += b[k].conj() * a[k];
        }
        let mut worst = R::zero();
        for k in 0..a.len() {
            worst = worst.max((a[k] - b[k] * lambda).abs());
        }
        worst
    }
}

/// Multiset of plane points, optionally tied to a carrying curve.
#[derive(Clone, Debug)]
pub struct PlaneDivisor<R> {
    pub points: Vec<ProjPoint<R>>,
    pub curve: Option<PlaneCurve<R>>,
}

impl<R: Real> PlaneDivisor<R> {
    pub fn new(points: Vec<ProjPoint<R>>) -> Self {
        PlaneDivisor { points, curve: None }
    }

    pub fn on_curve(points: Vec<ProjPoint<R>>, curve: PlaneCurve<R>) -> Self {
        PlaneDivisor {
            points,
            curve: Some(curve),
        }
    }

    pub fn degree(&self) -> usize {
        self.points.len()
    }

    /// Group points within `radius` into (representative, multiplicity).
    pub fn clusters(&self, radius: R) -> Vec<(ProjPoint<R>, usize)> {
        let mut out: Vec<(ProjPoint<R>, usize)> = Vec::new();
        for p in &self.points {
            if let Some(slot) = out.iter_mut().find(|(q, _)| q.dist(p) <= radius) {
                slot.1 += 1;
            } else {
                out.push((*p, 1));
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct InterpDiagnostics {
    /// Two smallest singular values of the evaluation matrix.
    pub sigma_min: f64,
    pub sigma_next: f64,
    pub sigma_max: f64,
}

const KERNEL_MEMBER_REL: f64 = 1e-6;
const KERNEL_GAP_REL: f64 = 1e-7;

fn evaluation_matrix<R: Real>(points: &[ProjPoint<R>], d: usize) -> CMat<R> {
    let n = poly::mono_count(d);
    let mut m = CMat::zeros(points.len(), n);
    let monos = poly::monomials(d);
    for (r, p) in points.iter().enumerate() {
        let mut xp = vec![Cx::one(); d + 1];
        let mut yp = vec![Cx::one(); d + 1];
        let mut zp = vec![Cx::one(); d + 1];
        for k in 1..=d {
            xp[k] = xp[k - 1] * p.coords[0];
            yp[k] = yp[k - 1] * p.coords[1];
            zp[k] = zp[k - 1] * p.coords[2];
        }
        for (c, &(i, j, k)) in monos.iter().enumerate() {
            m[(r, c)] = xp[i] * yp[j] * zp[k];
        }
    }
    m
}

/// Unique degree-d curve through the points: kernel direction of the
/// evaluation matrix, with the two smallest singular values reported.
pub fn interpolate_curve<R: Real>(
    points: &[ProjPoint<R>],
    d: usize,
) -> PlaneResult<(PlaneCurve<R>, InterpDiagnostics)> {
    let n = poly::mono_count(d);
    assert!(points.len() <= n, "too many constraints for degree {d}");
    let m = evaluation_matrix(points, d);
    let dec = linalg::svd(&m);
    let smax = dec.sigma.first().copied().unwrap_or(R::zero());
    // sigma list has n entries (zeros beyond the row count).
    let sig = |k: usize| -> R { dec.sigma.get(k).copied().unwrap_or(R::zero()) };
    let s_min = sig(n - 1);
    let s_next = if n >= 2 { sig(n - 2) } else { R::zero() };
    let diag = InterpDiagnostics {
        sigma_min: s_min.to_f64(),
        sigma_next: s_next.to_f64(),
        sigma_max: smax.to_f64(),
    };
    let member = smax.max(R::one()) * tol::<R>(KERNEL_MEMBER_REL);
    let gap = smax.max(R::one()) * tol::<R>(KERNEL_GAP_REL);
    if s_min > member {
        return Err(PlaneError::EmptyKernel { s1: diag.sigma_min });
    }
    if s_next <= gap {
        return Err(PlaneError::AmbiguousKernel {
            s1: diag.sigma_min,
            s2: diag.sigma_next,
        });
    }
    let v = dec.v.col(n - 1);
    Ok((PlaneCurve::new(d, v), diag))
}

/// All kernel directions (degree-d curves through the points); used when a
/// family is expected.
pub fn interpolate_family<R: Real>(
    points: &[ProjPoint<R>],
    d: usize,
) -> PlaneResult<(Vec<PlaneCurve<R>>, InterpDiagnostics)> {
    let n = poly::mono_count(d);
    let m = evaluation_matrix(points, d);
    let dec = linalg::svd(&m);
    let smax = dec.sigma.first().copied().unwrap_or(R::zero());
    let member = smax.max(R::one()) * tol::<R>(KERNEL_MEMBER_REL);
    let mut fam = Vec::new();
    for j in 0..n {
        let s = dec.sigma.get(j).copied().unwrap_or(R::zero());
        if s <= member || j >= points.len() {
            fam.push(PlaneCurve::new(d, dec.v.col(j)));
        }
    }
    let sig = |k: usize| dec.sigma.get(k).copied().unwrap_or(R::zero()).to_f64();
    let diag = InterpDiagnostics {
        sigma_min: sig(n - 1),
        sigma_next: if n >= 2 { sig(n - 2) } else { 0.0 },
        sigma_max: smax.to_f64(),
    };
    if fam.is_empty() {
        return Err(PlaneError::EmptyKernel { s1: diag.sigma_min });
    }
    Ok((fam, diag))
}

fn random_unitary<R: Real>(rng: &mut ChaCha8Rng) -> [[Cx<R>; 3]; 3] {
    // Gram-Schmidt on a random complex matrix; unitarity keeps conditioning.
    let mut cols: Vec<[Cx<R>; 3]> = Vec::new();
    while cols.len() < 3 {
        let mut v = [Cx::<R>::zero(); 3];
        for slot in v.iter_mut() {
            *slot = Cx::from_f64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
        }
        for c in &cols {
            let mut ip = Cx::zero();
            for k in 0..3 {
                ip += c[k].conj() * v[k];
            }
            for k in 0..3 {
                v[k] -= c[k] * ip;
            }
        }
        let n = (v[0].abs_sq() + v[1].abs_sq() + v[2].abs_sq()).sqrt();
        if n.to_f64() < 1e-3 {
            continue;
        }
        let inv = R::one() / n;
        for slot in v.iter_mut() {
            *slot = slot.scale(inv);
        }
        cols.push(v);
    }
    // store as row-major substitution matrix x_i = sum_j m[i][j] x'_j
    let mut m = [[Cx::zero(); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = cols[j][i];
        }
    }
    m
}

fn apply_matrix<R: Real>(m: &[[Cx<R>; 3]; 3], p: &[Cx<R>; 3]) -> [Cx<R>; 3] {
    let mut out = [Cx::zero(); 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i] += m[i][j] * p[j];
        }
    }
    out
}

/// Coefficients of y^k in f(x, y, 1), each a polynomial in x (ascending).
fn bivariate_coeffs<R: Real>(f: &HPoly<R>) -> Vec<Vec<Cx<R>>> {
    let d = f.degree;
    let mut out = vec![vec![Cx::zero(); d + 1]; d + 1];
    for (c, (i, j, _k)) in f.coeffs.iter().zip(poly::monomials(d)) {
        out[j][i] += *c;
    }
    out
}

/// Sylvester resultant of f, g in y as a univariate polynomial in x, computed
/// by evaluation at scaled roots of unity and inverse DFT.
fn resultant_in_y<R: Real>(f: &HPoly<R>, g: &HPoly<R>) -> Vec<Cx<R>> {
    let d1 = f.degree;
    let d2 = g.degree;
    let fc = bivariate_coeffs(f);
    let gc = bivariate_coeffs(g);
    let deg = d1 * d2;
    let n = deg + 1;
    let rho = R::from_f64(1.17);
    let mut values = Vec::with_capacity(n);
    for s in 0..n {
        let th = R::from_f64(2.0 * std::f64::consts::PI * s as f64 / n as f64);
        let x = Cx::cis(th).scale(rho);
        let a: Vec<Cx<R>> = (0..=d1).map(|k| poly::eval_poly(&fc[k], x)).collect();
        let b: Vec<Cx<R>> = (0..=d2).map(|k| poly::eval_poly(&gc[k], x)).collect();
        let m = d1 + d2;
        let mut syl = CMat::<R>::zeros(m, m);
        for r in 0..d2 {
            for k in 0..=d1 {
                syl[(r, r + k)] = a[d1 - k];
            }
        }
        for r in 0..d1 {
            for k in 0..=d2 {
                syl[(d2 + r, r + k)] = b[d2 - k];
            }
        }
        values.push(syl.det());
    }
    // inverse DFT with radius compensation: c_j = rho^{-j}/n sum_s v_s w^{-js}
    let mut coeffs = Vec::with_capacity(n);
    let mut rho_pow = R::one();
    for j in 0..n {
        let mut acc = Cx::zero();
        for (s, v) in values.iter().enumerate() {
            let th = R::from_f64(-2.0 * std::f64::consts::PI * ((j * s) % n) as f64 / n as f64);
            acc += *v * Cx::cis(th);
        }
        coeffs.push(acc.scale(R::one() / (R::from_f64(n as f64) * rho_pow)));
        rho_pow = rho_pow * rho;
    }
    coeffs
}

#[allow(clippy::too_many_arguments)]
fn newton_2d<R: Real>(
    f: &HPoly<R>,
    g: &HPoly<R>,
    fx: &HPoly<R>,
    fy: &HPoly<R>,
    gx: &HPoly<R>,
    gy: &HPoly<R>,
    start: (Cx<R>, Cx<R>),
) -> Option<(Cx<R>, Cx<R>)> {
    let (mut x, mut y) = start;
    let one = Cx::one();
    for _ in 0..40 {
        let p = [x, y, one];
        let fv = f.eval(&p);
        let gv = g.eval(&p);
        let j11 = fx.eval(&p);
        let j12 = fy.eval(&p);
        let j21 = gx.eval(&p);
        let j22 = gy.eval(&p);
        let det = j11 * j22 - j12 * j21;
        if det.abs() < tol::<R>(1e-13) {
            // singular Jacobian at a multiple point; keep the current iterate
            return Some((x, y));
        }
        let inv = det.recip();
        let dx = (fv * j22 - gv * j12) * inv;
        let dy = (gv * j11 - fv * j21) * inv;
        x -= dx;
        y -= dy;
        if !x.is_finite() || !y.is_finite() {
            return None;
        }
        if dx.abs().max(dy.abs()) < R::eps() * (x.abs().max(y.abs()) + R::one()) {
            break;
        }
    }
    Some((x, y))
}

/// All d1*d2 intersection points of two curves, with multiplicity, as a
/// clustered multiset.
pub fn intersect<R: Real>(
    c1: &PlaneCurve<R>,
    c2: &PlaneCurve<R>,
    seed: u64,
) -> PlaneResult<PlaneDivisor<R>> {
    let d1 = c1.degree();
    let d2 = c2.degree();
    let expect = d1 * d2;
    let mut common_component_votes = 0;
    for attempt in 0..5u64 {
        let mut rng =
            ChaCha8Rng::seed_from_u64(seed ^ 0x9e3779b97f4a7c15u64.wrapping_mul(attempt + 1));
        let m = random_unitary::<R>(&mut rng);
        let f = c1.form.compose_linear(&m).normalized();
        let g = c2.form.compose_linear(&m).normalized();
        // Need honest degree-d behavior in y for the Sylvester matrix.
        let fy_lead = bivariate_coeffs(&f)[d1][0].abs().to_f64();
        let gy_lead = bivariate_coeffs(&g)[d2][0].abs().to_f64();
        if fy_lead < 1e-3 || gy_lead < 1e-3 {
            continue;
        }
        let res = resultant_in_y(&f, &g);
        let maxc = res.iter().map(|c| c.abs().to_f64()).fold(0.0, f64::max);
        if maxc < 1e-9 {
            common_component_votes += 1;
            if common_component_votes >= 2 {
                return Err(PlaneError::CommonComponent);
            }
            continue;
        }
        // Leading coefficient must survive, else intersections escaped to
        // infinity in this frame.
        if res[expect].abs().to_f64() < 1e-7 * maxc {
            continue;
        }
        let xs = poly::roots(&res);
        if xs.len() != expect {
            continue;
        }
        let fx = f.partial(0);
        let fyp = f.partial(1);
        let gx = g.partial(0);
        let gyp = g.partial(1);
        let fc = bivariate_coeffs(&f);
        let mut pts: Vec<ProjPoint<R>> = Vec::with_capacity(expect);
        let mut ok = true;
        for x0 in xs {
            let fy_poly: Vec<Cx<R>> = (0..=d1).map(|k| poly::eval_poly(&fc[k], x0)).collect();
            let ys = poly::roots(&fy_poly);
            if ys.is_empty() {
                ok = false;
                break;
            }
            let mut best = ys[0];
            let mut best_res = R::from_f64(f64::MAX);
            for y0 in ys {
                let r = g.eval(&[x0, y0, Cx::one()]).abs();
                if r < best_res {
                    best_res = r;
                    best = y0;
                }
            }
            match newton_2d(&f, &g, &fx, &fyp, &gx, &gyp, (x0, best)) {
                Some((x1, y1)) => {
                    let q = apply_matrix(&m, &[x1, y1, Cx::one()]);
                    pts.push(ProjPoint::new(q));
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        let worst = pts
            .iter()
            .map(|p| c1.evaluate(p).abs().max(c2.evaluate(p).abs()).to_f64())
            .fold(0.0, f64::max);
        if worst > 1e-6 {
            continue;
        }
        // Cluster into a canonical multiset: representatives repeated.
        let raw = PlaneDivisor::new(pts);
        let clusters = raw.clusters(tol::<R>(1e-6));
        let mut points = Vec::with_capacity(expect);
        for (p, mult) in clusters {
            for _ in 0..mult {
                points.push(p);
            }
        }
        points.sort_by_key(|p| p.sort_key());
        return Ok(PlaneDivisor::new(points));
    }
    if common_component_votes > 0 {
        return Err(PlaneError::CommonComponent);
    }
    Err(PlaneError::ConditioningFailure)
}

/// Multiset difference `big - known`, greedy nearest matching within `tolerance`.
pub fn divisor_subtract<R: Real>(
    big: &PlaneDivisor<R>,
    known: &PlaneDivisor<R>,
    tolerance: R,
) -> PlaneResult<PlaneDivisor<R>> {
    let mut remaining: Vec<ProjPoint<R>> = big.points.clone();
    for k in &known.points {
        let mut best_i = None;
        let mut best_d = R::from_f64(f64::MAX);
        for (i, p) in remaining.iter().enumerate() {
            let d = k.dist(p);
            if d < best_d {
                best_d = d;
                best_i = Some(i);
            }
        }
        match best_i {
            Some(i) if best_d <= tolerance => {
                remaining.swap_remove(i);
            }
            _ => {
                return Err(PlaneError::UnmatchedPoint {
                    worst: best_d.to_f64(),
                });
            }
        }
    }
    Ok(PlaneDivisor {
        points: remaining,
        curve: big.curve.clone(),
    })
}

/// On a smooth degree-d curve C, produce the effective degree-g divisor D'
/// with D + p_in ~ D' + p_out in Pic(C), where `d_plus` = D + p_in has degree
/// g + 1. Residual-intersection construction with auxiliary curves of minimal
/// degree m (use `extra_degree > 0` to cross-check independence at m + 1).
pub fn residual_linear_equiv<R: Real>(
    curve: &PlaneCurve<R>,
    d_plus: &PlaneDivisor<R>,
    p_out: &ProjPoint<R>,
    seed: u64,
    extra_degree: usize,
) -> PlaneResult<PlaneDivisor<R>> {
    let d = curve.degree();
    let g = (d - 1) * (d - 2) / 2;
    assert_eq!(d_plus.degree(), g + 1, "D + p must have degree g + 1");
    let mut m = 1;
    while poly::mono_count(m) < g + 2 {
        m += 1;
    }
    m += extra_degree;
    // Generic auxiliary curve through D + p_in.
    let (family, _diag) = interpolate_family(&d_plus.points, m)?;
    let aux = if family.len() == 1 {
        family[0].clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = HPoly::zero(m);
        for c in &family {
            let w = Cx::from_f64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            acc.add_scaled(&c.form, w);
        }
        PlaneCurve::from_form(acc)
    };
    let full = intersect(curve, &aux, seed ^ 0xabcd)?;
    debug_assert_eq!(full.degree(), d * m);
    let match_tol = tol::<R>(1e-5);
    let residue = divisor_subtract(&full, d_plus, match_tol)?;
    // |residue| = d*m - g - 1; the curve through residue + p_out is unique.
    let mut through = residue.points.clone();
    through.push(*p_out);
    let (aux2, _diag2) = match interpolate_curve(&through, m) {
        Ok(v) => v,
        Err(PlaneError::AmbiguousKernel { .. }) => return Err(PlaneError::NonUniqueSecondCurve),
        Err(e) => return Err(e),
    };
    let full2 = intersect(curve, &aux2, seed ^ 0xdcba)?;
    let d_out = divisor_subtract(&full2, &PlaneDivisor::new(through), match_tol)?;
    if d_out.degree() != g {
        return Err(PlaneError::Other(format!(
            "residual degree {} != genus {}",
            d_out.degree(),
            g
        )));
    }
    Ok(PlaneDivisor {
        points: d_out.points,
        curve: Some(curve.clone()),
    })
}

/// Smallest combined residual of the singular system over candidate singular
/// points; large when the curve is smooth, ~0 when singular.
pub fn smoothness_probe<R: Real>(curve: &PlaneCurve<R>, seed: u64) -> f64 {
    let d = curve.degree();
    if d <= 1 {
        return 1.0;
    }
    let parts: Vec<PlaneCurve<R>> = (0..3)
        .map(|v| PlaneCurve::from_form(curve.form.partial(v)))
        .collect();
    let mut best = f64::MAX;
    let mut any_pair = false;
    for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
        match intersect(&parts[a], &parts[b], seed ^ ((a * 3 + b) as u64)) {
            Ok(div) => {
                any_pair = true;
                for p in &div.points {
                    let r = parts
                        .iter()
                        .map(|q| q.evaluate(p).abs().to_f64())
                        .fold(0.0, f64::max);
                    best = best.min(r);
                }
            }
            Err(PlaneError::CommonComponent) => {
                // The partials share a whole curve of candidate singular points.
                return 0.0;
            }
            Err(_) => {}
        }
    }
    if !any_pair {
        return 0.0;
    }
    best
}

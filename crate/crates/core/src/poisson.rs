//! Residue-formula Poisson pairing on pencils of degree-1 elements: support
//! of the twisted determinant, isotriviality certificates (global constant
//! and local series splittings), contour-quadrature residues along the cubic,
//! and the symplecticity check for the two-step Hecke move.
//!
//! The pairing of an isotrivial deformation L' (with splitting B') against an
//! arbitrary deformation L'' is
//!
//! ```text
//!   sigma * sum over support points x of Res_x Tr(L'' L^{-1} B') omega
//! ```
//!
//! with omega the rational differential (z dx - x dz)/F_y of the cubic and
//! the global sign sigma fixed to -1 (matching the cocycle orientation; the
//! overall scale is conventional since omega is only canonical up to scale).

use crate::complex::Cx;
use crate::elliptic::{CurvePoint, EllipticCurve};
use crate::linalg::{self, CMat};
use crate::plane::{self, PlaneCurve, ProjPoint};
use crate::poly::HPoly;
use crate::scalar::Real;
use crate::sheaf::{BlowupParams, SheafDatum, TwistedMatrix};
use crate::sklyanin::{Algebra, GradedElement};
use thiserror::Error;

pub const PAIRING_SIGN: f64 = -1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoissonError {
    #[error("pencil determinant is identically zero")]
    ZeroDeterminant,
    #[error("support has {0} points, expected {1}")]
    SupportCount(usize, usize),
    #[error("deformation is not isotrivial (relative residual {0:e})")]
    NotIsotrivial(f64),
    #[error("contour quadrature failed to converge (last rel diff {0:e})")]
    NonConvergent(f64),
    #[error("contour tracking failed: {0}")]
    Tracking(String),
    #[error(transparent)]
    Elliptic(#[from] crate::elliptic::EllipticError),
    #[error(transparent)]
    Plane(#[from] plane::PlaneError),
    #[error(transparent)]
    Sklyanin(#[from] crate::sklyanin::SklyaninError),
    #[error(transparent)]
    Sheaf(#[from] crate::sheaf::SheafError),
}

pub type PoissonResult<T> = Result<T, PoissonError>;

/// Matrix deformation with the same shape as the pencil.
#[derive(Clone, Debug)]
pub struct Deformation<R> {
    pub entries: Vec<Vec<GradedElement<R>>>,
}

impl<R: Real> Deformation<R> {
    pub fn zero_like(pencil: &TwistedMatrix<R>, algebra: &Algebra<R>) -> Self {
        let d = pencil.entries.len();
        Deformation {
            entries: vec![vec![algebra.zero(1); d]; d],
        }
    }

    pub fn scale(&self, s: Cx<R>) -> Self {
        Deformation {
            entries: self
                .entries
                .iter()
                .map(|row| row.iter().map(|e| e.scale(s)).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Deformation {
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(ra, rb)| ra.iter().zip(rb).map(|(a, b)| a.add(b)).collect())
                .collect(),
        }
    }

    /// Plain evaluation of all entries at a plane point.
    fn eval_plain(&self, at: &ProjPoint<R>) -> CMat<R> {
        eval_entries_plain(&self.entries, at)
    }
}

fn eval_entries_plain<R: Real>(
    entries: &[Vec<GradedElement<R>>],
    at: &ProjPoint<R>,
) -> CMat<R> {
    let d = entries.len();
    let mut m = CMat::zeros(d, d);
    for i in 0..d {
        for k in 0..d {
            let e = &entries[i][k];
            m[(i, k)] = e.coeffs[0] * at.coords[0]
                + e.coeffs[1] * at.coords[1]
                + e.coeffs[2] * at.coords[2];
        }
    }
    m
}

/// Twisted evaluation of a degree-1 pencil at q: plain entries at tau q.
pub fn pencil_eval<R: Real>(
    curve: &EllipticCurve<R>,
    entries: &[Vec<GradedElement<R>>],
    q: &CurvePoint<R>,
) -> PoissonResult<CMat<R>> {
    let at = curve.tau_pow(q, 1)?.point;
    Ok(eval_entries_plain(entries, &at))
}

/// The plain determinant of the pencil as a plane curve of degree d.
pub fn pencil_det_curve<R: Real>(pencil: &TwistedMatrix<R>) -> PoissonResult<PlaneCurve<R>> {
    let d = pencil.entries.len();
    assert_eq!(d, 3, "support extraction implemented for 3x3 pencils");
    let entry = |i: usize, k: usize| -> HPoly<R> {
        let e = &pencil.entries[i][k];
        HPoly::linear(e.coeffs[0], e.coeffs[1], e.coeffs[2])
    };
    let perms: [([usize; 3], f64); 6] = [
        ([0, 1, 2], 1.0),
        ([1, 2, 0], 1.0),
        ([2, 0, 1], 1.0),
        ([0, 2, 1], -1.0),
        ([2, 1, 0], -1.0),
        ([1, 0, 2], -1.0),
    ];
    let mut det = HPoly::zero(3);
    for (perm, sign) in perms {
        let prod = entry(0, perm[0]).mul(&entry(1, perm[1])).mul(&entry(2, perm[2]));
        det.add_scaled(&prod, Cx::from_f64(sign, 0.0));
    }
    if det.max_coeff().to_f64() < 1e-10 {
        return Err(PoissonError::ZeroDeterminant);
    }
    Ok(PlaneCurve::from_form(det))
}

/// The 3d points of the cubic where the twisted evaluation drops rank: the
/// plain determinant cut with the cubic, pulled back one translation step.
pub fn support<R: Real>(
    curve: &EllipticCurve<R>,
    pencil: &TwistedMatrix<R>,
    seed: u64,
) -> PoissonResult<Vec<CurvePoint<R>>> {
    let det = pencil_det_curve(pencil)?;
    let raw = curve.intersect_with(&det, seed)?;
    let expect = 3 * pencil.entries.len();
    if raw.len() != expect {
        return Err(PoissonError::SupportCount(raw.len(), expect));
    }
    let mut out = Vec::with_capacity(expect);
    for p in raw {
        out.push(curve.tau_pow(&p, -1)?);
    }
    // verified residuals of the twisted determinant
    for q in &out {
        let m = pencil_eval(curve, &pencil.entries, q)?;
        let r = m.det().abs().to_f64();
        if r > 1e-7 {
            return Err(PoissonError::Tracking(format!(
                "support point residual {r:e}"
            )));
        }
    }
    Ok(out)
}

/// Constant-matrix isotriviality certificate: L' = B L - L A solved entrywise
/// in the algebra. Certifies exactly the orbit directions of the constant
/// group action; leaf directions need local splittings instead.
#[derive(Clone, Debug)]
pub struct IsotrivialityCertificate<R> {
    pub a: CMat<R>,
    pub b: CMat<R>,
    pub residual: f64,
    /// Dimension of the slack space {(A, B): B L = L A}; contains the scalar
    /// pair (lambda I, lambda I).
    pub slack_dim: usize,
}

pub fn isotriviality_certificate<R: Real>(
    pencil: &TwistedMatrix<R>,
    deformation: &Deformation<R>,
) -> PoissonResult<IsotrivialityCertificate<R>> {
    let d = pencil.entries.len();
    let n_unknowns = 2 * d * d;
    let n_eqs = 3 * d * d;
    let mut m = CMat::zeros(n_eqs, n_unknowns);
    let mut rhs = vec![Cx::zero(); n_eqs];
    // unknown layout: A (d*d) then B (d*d); A_{kj} multiplies -L_{ik},
    // B_{ik} multiplies L_{kj}
    for i in 0..d {
        for j in 0..d {
            for c in 0..3 {
                let row = (i * d + j) * 3 + c;
                rhs[row] = deformation.entries[i][j].coeffs[c];
                for k in 0..d {
                    // -(L A)_{ij} = -sum_k L_{ik} A_{kj}
                    m[(row, k * d + j)] -= pencil.entries[i][k].coeffs[c];
                    // (B L)_{ij} = sum_k B_{ik} L_{kj}
                    m[(row, d * d + i * d + k)] += pencil.entries[k][j].coeffs[c];
                }
            }
        }
    }
    let sol = linalg::lsq_solve(&m, &rhs, 1e-11);
    let achieved = m.matvec(&sol);
    let mut res = R::zero();
    let mut scale = R::zero();
    for (x, y) in achieved.iter().zip(&rhs) {
        res = res.max((*x - *y).abs());
        scale = scale.max(y.abs());
    }
    let residual = res.to_f64() / scale.to_f64().max(1e-300);
    if residual > 1e-8 {
        return Err(PoissonError::NotIsotrivial(residual));
    }
    let dec = linalg::svd(&m);
    let slack_dim = dec.kernel(1e-9).len();
    let mut a = CMat::zeros(d, d);
    let mut b = CMat::zeros(d, d);
    for k in 0..d {
        for j in 0..d {
            a[(k, j)] = sol[k * d + j];
            b[(k, j)] = sol[d * d + k * d + j];
        }
    }
    Ok(IsotrivialityCertificate {
        a,
        b,
        residual,
        slack_dim,
    })
}

/// A tracked contour around a support point: curve samples, the local
/// parameter values, and the omega/dtheta weights.
struct Contour<R> {
    points: Vec<CurvePoint<R>>,
    s_values: Vec<Cx<R>>,
    omega_dtheta: Vec<Cx<R>>,
    radius: f64,
}

fn track_contour<R: Real>(
    curve: &EllipticCurve<R>,
    x: &CurvePoint<R>,
    radius: f64,
    samples: usize,
) -> PoissonResult<Contour<R>> {
    let coords = x.point.coords;
    // affine chart with the pivot coordinate frozen at 1
    let pivot = {
        let mut idx = 0;
        let mut best = R::zero();
        for (i, c) in coords.iter().enumerate() {
            if c.abs() > best {
                best = c.abs();
                idx = i;
            }
        }
        idx
    };
    let others: Vec<usize> = (0..3).filter(|&i| i != pivot).collect();
    let partials: Vec<HPoly<R>> = (0..3).map(|v| curve.cubic.form.partial(v)).collect();
    let grad: Vec<Cx<R>> = partials.iter().map(|p| p.eval(&coords)).collect();
    // solve-variable: the chart variable with the larger gradient
    let (solve_var, loop_var) = if grad[others[0]].abs() >= grad[others[1]].abs() {
        (others[0], others[1])
    } else {
        (others[1], others[0])
    };
    if grad[solve_var].abs().to_f64() < 1e-8 {
        return Err(PoissonError::Tracking("branch point at the center".into()));
    }
    let w0 = coords[loop_var];
    let mut v_prev = coords[solve_var];
    let mut points = Vec::with_capacity(samples);
    let mut s_values = Vec::with_capacity(samples);
    let mut omega = Vec::with_capacity(samples);
    let r = R::from_f64(radius);
    for k in 0..samples {
        let theta = R::from_f64(2.0 * std::f64::consts::PI * k as f64 / samples as f64);
        let phase = Cx::cis(theta);
        let s = phase.scale(r);
        let w = w0 + s;
        // Newton for the solve variable from the previous sample
        let mut v = v_prev;
        let mut ok = false;
        for _ in 0..40 {
            let mut q = [Cx::zero(); 3];
            q[pivot] = Cx::one();
            q[loop_var] = w;
            q[solve_var] = v;
            let f = curve.cubic.form.eval(&q);
            let df = partials[solve_var].eval(&q);
            if df.abs().to_f64() < 1e-10 {
                break;
            }
            let step = f / df;
            v -= step;
            if step.abs() <= R::eps() * (v.abs() + R::one()) {
                ok = true;
                break;
            }
        }
        if !ok {
            // accept if the residual is already tiny
            let mut q = [Cx::zero(); 3];
            q[pivot] = Cx::one();
            q[loop_var] = w;
            q[solve_var] = v;
            if curve.cubic.form.eval(&q).abs().to_f64() > 1e-10 {
                return Err(PoissonError::Tracking(format!(
                    "newton stalled at sample {k}"
                )));
            }
        }
        // branch-jump guard
        if k > 0 && (v - v_prev).abs().to_f64() > 40.0 * radius {
            return Err(PoissonError::Tracking(format!(
                "branch jump at sample {k}"
            )));
        }
        v_prev = v;
        let mut q = [Cx::zero(); 3];
        q[pivot] = Cx::one();
        q[loop_var] = w;
        q[solve_var] = v;
        // dq/dtheta: loop var moves as i r e^{i theta}; solve var by implicit
        // differentiation; pivot is frozen.
        let dw = Cx::new(R::zero(), R::one()) * s;
        let gv: Vec<Cx<R>> = partials.iter().map(|p| p.eval(&q)).collect();
        let dv = -(gv[loop_var] / gv[solve_var]) * dw;
        let mut dq = [Cx::zero(); 3];
        dq[loop_var] = dw;
        dq[solve_var] = dv;
        // omega/dtheta via the cyclic formulas, choosing the largest partial
        let cand = [
            (q[1] * dq[2] - q[2] * dq[1], gv[0]),
            (q[2] * dq[0] - q[0] * dq[2], gv[1]),
            (q[0] * dq[1] - q[1] * dq[0], gv[2]),
        ];
        let best = cand
            .iter()
            .max_by(|a, b| {
                a.1.abs()
                    .partial_cmp(&b.1.abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap();
        if best.1.abs().to_f64() < 1e-12 {
            return Err(PoissonError::Tracking("vanishing gradient on contour".into()));
        }
        omega.push(best.0 / best.1);
        s_values.push(s);
        points.push(CurvePoint {
            point: ProjPoint::new(q),
        });
    }
    Ok(Contour {
        points,
        s_values,
        omega_dtheta: omega,
        radius,
    })
}

fn contour_residue<R: Real>(contour: &Contour<R>, values: &[Cx<R>]) -> Cx<R> {
    // Res = 1/(2 pi i) * integral = 1/(i N) sum f(q_k) (omega/dtheta)_k
    let n = contour.points.len();
    let mut acc = Cx::zero();
    for (f, w) in values.iter().zip(&contour.omega_dtheta) {
        acc += *f * *w;
    }
    let inv_in = (Cx::new(R::zero(), R::one()).scale(R::from_f64(n as f64))).recip();
    acc * inv_in
}

/// Residue at x of (evaluator) * omega by trapezoid contour quadrature with a
/// radius-halving convergence check and automatic shrinking.
pub fn residue_at<R: Real>(
    curve: &EllipticCurve<R>,
    x: &CurvePoint<R>,
    evaluator: &mut dyn FnMut(&CurvePoint<R>) -> PoissonResult<Cx<R>>,
    radius: f64,
    samples: usize,
) -> PoissonResult<Cx<R>> {
    let mut r = radius;
    let mut last_diff = f64::MAX;
    for _ in 0..4 {
        let coarse = (|| -> PoissonResult<Cx<R>> {
            let c = track_contour(curve, x, r, samples)?;
            let vals: Vec<Cx<R>> = c
                .points
                .iter()
                .map(|q| evaluator(q))
                .collect::<PoissonResult<_>>()?;
            Ok(contour_residue(&c, &vals))
        })();
        let fine = (|| -> PoissonResult<Cx<R>> {
            let c = track_contour(curve, x, r * 0.5, samples)?;
            let vals: Vec<Cx<R>> = c
                .points
                .iter()
                .map(|q| evaluator(q))
                .collect::<PoissonResult<_>>()?;
            Ok(contour_residue(&c, &vals))
        })();
        match (coarse, fine) {
            (Ok(a), Ok(b)) => {
                let scale = a.abs().to_f64().max(b.abs().to_f64()).max(1e-12);
                let diff = (a - b).abs().to_f64() / scale;
                if diff < 1e-6 {
                    return Ok(b);
                }
                last_diff = diff;
                r *= 0.5;
            }
            _ => {
                r *= 0.5;
            }
        }
    }
    Err(PoissonError::NonConvergent(last_diff))
}

/// Local splitting at a support point: polynomial matrices A'(s), B'(s) in
/// the scaled loop parameter s/r with B'(s) L(s) - L(s) A'(s) = L'(s) fitted
/// by collocation on the contour samples; doubles as the isotriviality test
/// for leaf directions. The scaled basis keeps the fit conditioned at any
/// radius, and the collocation residual bounds the residue error directly.
#[derive(Clone, Debug)]
pub struct LocalSplitting<R> {
    /// Coefficients of (s/radius)^j.
    pub b_series: Vec<CMat<R>>,
    pub a_series: Vec<CMat<R>>,
    pub radius: f64,
    pub residual: f64,
}

impl<R: Real> LocalSplitting<R> {
    pub fn b_at(&self, s: Cx<R>) -> CMat<R> {
        let d = self.b_series[0].rows;
        let scaled = s.scale(R::from_f64(1.0 / self.radius));
        let mut acc = CMat::zeros(d, d);
        let mut pow = Cx::one();
        for coeff in &self.b_series {
            for i in 0..d {
                for j in 0..d {
                    acc[(i, j)] += coeff[(i, j)] * pow;
                }
            }
            pow *= scaled;
        }
        acc
    }
}

const SPLIT_ORDER: usize = 6;

/// Fit the splitting equation at the contour samples in the scaled monomial
/// basis phi_j(s) = (s/r)^j, j = 0..SPLIT_ORDER.
fn solve_local_splitting<R: Real>(
    l_samples: &[CMat<R>],
    lp_samples: &[CMat<R>],
    s_values: &[Cx<R>],
    radius: f64,
) -> PoissonResult<LocalSplitting<R>> {
    let d = l_samples[0].rows;
    let n = l_samples.len();
    let blocks = SPLIT_ORDER + 1;
    let unknowns = 2 * blocks * d * d; // A_0..A_p then B_0..B_p
    let eqs = n * d * d;
    let inv_r = R::from_f64(1.0 / radius);
    let mut m = CMat::zeros(eqs, unknowns);
    let mut rhs = vec![Cx::zero(); eqs];
    for (k, ((l, lp), s)) in l_samples.iter().zip(lp_samples).zip(s_values).enumerate() {
        let scaled = s.scale(inv_r);
        let mut pows = Vec::with_capacity(blocks);
        let mut pw = Cx::one();
        for _ in 0..blocks {
            pows.push(pw);
            pw *= scaled;
        }
        for i in 0..d {
            for j in 0..d {
                let row = (k * d + i) * d + j;
                rhs[row] = lp[(i, j)];
                for (o, pw) in pows.iter().enumerate() {
                    for t in 0..d {
                        // (B_o phi_o L)_{ij}
                        m[(row, blocks * d * d + (o * d + i) * d + t)] += l[(t, j)] * *pw;
                        // -(L A_o phi_o)_{ij}
                        m[(row, (o * d + t) * d + j)] -= l[(i, t)] * *pw;
                    }
                }
            }
        }
    }
    let sol = linalg::lsq_solve(&m, &rhs, 1e-11);
    let achieved = m.matvec(&sol);
    let mut res = R::zero();
    let mut scale = R::zero();
    for (x, y) in achieved.iter().zip(&rhs) {
        res = res.max((*x - *y).abs());
        scale = scale.max(y.abs());
    }
    let residual = res.to_f64() / scale.to_f64().max(1e-300);
    if residual > 1e-6 {
        return Err(PoissonError::NotIsotrivial(residual));
    }
    let mut a_series = Vec::with_capacity(blocks);
    let mut b_series = Vec::with_capacity(blocks);
    for o in 0..blocks {
        let mut a = CMat::zeros(d, d);
        let mut b = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                a[(i, j)] = sol[(o * d + i) * d + j];
                b[(i, j)] = sol[blocks * d * d + (o * d + i) * d + j];
            }
        }
        a_series.push(a);
        b_series.push(b);
    }
    Ok(LocalSplitting {
        a_series,
        b_series,
        radius,
        residual,
    })
}

/// How the splitting entering the residue integrand is chosen.
#[derive(Clone, Debug)]
pub enum SplittingChoice<R> {
    /// Use a constant certificate everywhere.
    Global(IsotrivialityCertificate<R>),
    /// Solve an order-4 local splitting at every support point.
    Local,
}

/// The pairing: sigma * sum of residues of Tr(L'' L^{-1} B') omega over the
/// support, with B' from the chosen splitting.
pub fn pairing<R: Real>(
    curve: &EllipticCurve<R>,
    pencil: &TwistedMatrix<R>,
    l_prime: &Deformation<R>,
    choice: &SplittingChoice<R>,
    l_second: &Deformation<R>,
    seed: u64,
) -> PoissonResult<Cx<R>> {
    let supp = support(curve, pencil, seed)?;
    let mut total = Cx::zero();
    for x in &supp {
        total += pairing_residue_at(curve, pencil, l_prime, choice, l_second, x, 1e-2, 32)?;
    }
    Ok(total.scale(R::from_f64(PAIRING_SIGN)))
}

/// One support point's residue contribution (without the global sign).
fn pairing_residue_at<R: Real>(
    curve: &EllipticCurve<R>,
    pencil: &TwistedMatrix<R>,
    l_prime: &Deformation<R>,
    choice: &SplittingChoice<R>,
    l_second: &Deformation<R>,
    x: &CurvePoint<R>,
    radius: f64,
    samples: usize,
) -> PoissonResult<Cx<R>> {
    let mut r = radius;
    let mut last = f64::MAX;
    for _ in 0..4 {
        let coarse = pairing_residue_once(curve, pencil, l_prime, choice, l_second, x, r, samples);
        let fine =
            pairing_residue_once(curve, pencil, l_prime, choice, l_second, x, r * 0.5, samples);
        if let (Ok(a), Ok(b)) = (coarse, fine) {
            let scale = a.abs().to_f64().max(b.abs().to_f64()).max(1e-12);
            let diff = (a - b).abs().to_f64() / scale;
            if diff < 1e-6 {
                return Ok(b);
            }
            last = diff;
        }
        r *= 0.5;
    }
    Err(PoissonError::NonConvergent(last))
}

fn pairing_residue_once<R: Real>(
    curve: &EllipticCurve<R>,
    pencil: &TwistedMatrix<R>,
    l_prime: &Deformation<R>,
    choice: &SplittingChoice<R>,
    l_second: &Deformation<R>,
    x: &CurvePoint<R>,
    radius: f64,
    samples: usize,
) -> PoissonResult<Cx<R>> {
    let contour = track_contour(curve, x, radius, samples)?;
    let d = pencil.entries.len();
    // twisted evaluations along the contour
    let mut l_samples = Vec::with_capacity(samples);
    let mut lp_samples = Vec::with_capacity(samples);
    let mut ls_samples = Vec::with_capacity(samples);
    for q in &contour.points {
        let at = curve.tau_pow(q, 1)?.point;
        l_samples.push(eval_entries_plain(&pencil.entries, &at));
        lp_samples.push(l_prime.eval_plain(&at));
        ls_samples.push(l_second.eval_plain(&at));
    }
    // splitting values along the contour
    let b_values: Vec<CMat<R>> = match choice {
        SplittingChoice::Global(cert) => vec![cert.b.clone(); samples],
        SplittingChoice::Local => {
            let split = solve_local_splitting(
                &l_samples,
                &lp_samples,
                &contour.s_values,
                contour.radius,
            )?;
            contour.s_values.iter().map(|s| split.b_at(*s)).collect()
        }
    };
    let mut values = Vec::with_capacity(samples);
    for k in 0..samples {
        let linv = l_samples[k]
            .inverse()
            .ok_or_else(|| PoissonError::Tracking("singular pencil on contour".into()))?;
        let prod = ls_samples[k].matmul(&linv).matmul(&b_values[k]);
        let mut tr = Cx::zero();
        for i in 0..d {
            tr += prod[(i, i)];
        }
        values.push(tr);
    }
    Ok(contour_residue(&contour, &values))
}

/// Pencil presentation of a sheaf datum: the down-shift matrix at p1, whose
/// support is tau^-3 p1, p2..p9.
pub fn pencil_of_datum<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
) -> PoissonResult<TwistedMatrix<R>> {
    Ok(crate::sheaf::down_shift_matrix(params, datum)?)
}

/// Finite-difference image of a datum tangent as a pencil deformation.
pub fn pencil_deformation_of_tangent<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
    tangent: &[Cx<R>],
    step: f64,
) -> PoissonResult<Deformation<R>> {
    let plus = perturb_datum(params, datum, tangent, step * 0.5);
    let minus = perturb_datum(params, datum, tangent, -step * 0.5);
    let lp = crate::sheaf::down_shift_matrix(params, &plus)?;
    let lm = crate::sheaf::down_shift_matrix(params, &minus)?;
    let inv = Cx::from_f64(1.0 / step, 0.0);
    let d = lp.entries.len();
    let mut entries = vec![vec![params.algebra.zero(1); d]; d];
    for i in 0..d {
        for j in 0..d {
            entries[i][j] = lp.entries[i][j].sub(&lm.entries[i][j]).scale(inv);
        }
    }
    Ok(Deformation { entries })
}

fn perturb_datum<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
    tangent: &[Cx<R>],
    eps: f64,
) -> SheafDatum<R> {
    let d2 = params.algebra.dim(2);
    assert_eq!(tangent.len(), 6 + 2 * d2);
    let s = Cx::from_f64(eps, 0.0);
    let mut out = datum.clone();
    for k in 0..3 {
        out.v1.coeffs[k] += tangent[k] * s;
        out.v2.coeffs[k] += tangent[3 + k] * s;
    }
    for k in 0..d2 {
        out.w1.coeffs[k] += tangent[6 + k] * s;
        out.w2.coeffs[k] += tangent[6 + d2 + k] * s;
    }
    out
}

/// Transport a tangent pair through the Hecke move by finite differences and
/// compare the pairings before and after; symplectomorphisms give zero.
pub struct SymplecticityReport {
    pub pairing_before: (f64, f64),
    pub pairing_after: (f64, f64),
    pub discrepancy: f64,
}

pub fn hecke_symplecticity_test<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
    tangents: (&[Cx<R>], &[Cx<R>]),
    step: f64,
    seed: u64,
) -> PoissonResult<SymplecticityReport> {
    let e = &params.scheme.curve;
    // before
    let pencil = pencil_of_datum(params, datum)?;
    let l1 = pencil_deformation_of_tangent(params, datum, tangents.0, step)?;
    let l2 = pencil_deformation_of_tangent(params, datum, tangents.1, step)?;
    let before = pairing(e, &pencil, &l1, &SplittingChoice::Local, &l2, seed)?;
    // transport through the move
    let (new_params, new_datum, _) = crate::sheaf::hecke_s0(params, datum)?;
    let transported = |t: &[Cx<R>]| -> PoissonResult<(SheafDatum<R>, SheafDatum<R>)> {
        let plus = perturb_datum(params, datum, t, step * 0.5);
        let minus = perturb_datum(params, datum, t, -step * 0.5);
        let (_, dp, _) = crate::sheaf::hecke_s0(params, &plus)?;
        let (_, dm, _) = crate::sheaf::hecke_s0(params, &minus)?;
        Ok((dp, dm))
    };
    let deformation_from_pair =
        |pair: &(SheafDatum<R>, SheafDatum<R>)| -> PoissonResult<Deformation<R>> {
            let lp = crate::sheaf::down_shift_matrix(&new_params, &pair.0)?;
            let lm = crate::sheaf::down_shift_matrix(&new_params, &pair.1)?;
            let inv = Cx::from_f64(1.0 / step, 0.0);
            let d = lp.entries.len();
            let mut entries = vec![vec![new_params.algebra.zero(1); d]; d];
            for i in 0..d {
                for j in 0..d {
                    entries[i][j] = lp.entries[i][j].sub(&lm.entries[i][j]).scale(inv);
                }
            }
            Ok(Deformation { entries })
        };
    let pair1 = transported(tangents.0)?;
    let pair2 = transported(tangents.1)?;
    let t1 = deformation_from_pair(&pair1)?;
    let t2 = deformation_from_pair(&pair2)?;
    let new_pencil = pencil_of_datum(&new_params, &new_datum)?;
    let after = pairing(e, &new_pencil, &t1, &SplittingChoice::Local, &t2, seed ^ 0x77)?;
    let scale = before.abs().to_f64().max(after.abs().to_f64()).max(1e-300);
    let discrepancy = (before - after).abs().to_f64() / scale;
    Ok(SymplecticityReport {
        pairing_before: (before.re.to_f64(), before.im.to_f64()),
        pairing_after: (after.re.to_f64(), after.im.to_f64()),
        discrepancy,
    })
}

/// Leaf tangent pair at a datum (marked points fixed): the two directions
/// beyond the trivial deformations.
pub fn leaf_tangent_pair<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
) -> PoissonResult<(Vec<Cx<R>>, Vec<Cx<R>>)> {
    let report = crate::sheaf::tangent_dimension(params, datum)?;
    if report.leaf_basis.len() < 2 {
        return Err(PoissonError::Tracking(format!(
            "expected 2 leaf directions, found {}",
            report.leaf_basis.len()
        )));
    }
    Ok((report.leaf_basis[0].clone(), report.leaf_basis[1].clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sheaf::{datum_from_plane_point, DatumFromPoint};
    use crate::elliptic::random_proj_point;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn fixture() -> (BlowupParams<f64>, SheafDatum<f64>, TwistedMatrix<f64>) {
        let params = BlowupParams::sample(101).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(301);
        let x = random_proj_point::<f64>(&mut rng);
        let datum = match datum_from_plane_point(&params, &x).unwrap() {
            DatumFromPoint::Generic(d, _) => d,
            other => panic!("{other:?}"),
        };
        let pencil = pencil_of_datum(&params, &datum).unwrap();
        (params, datum, pencil)
    }

    #[test]
    fn support_matches_known_boundary() {
        let (params, _datum, pencil) = fixture();
        let e = &params.scheme.curve;
        let supp = support(e, &pencil, 5).unwrap();
        assert_eq!(supp.len(), 9);
        let mut expected = vec![e.tau_pow(&params.base_points[0], -3).unwrap()];
        expected.extend_from_slice(&params.base_points[1..]);
        for want in &expected {
            let found = supp.iter().any(|q| q.dist(want) < 1e-6);
            assert!(found, "missing support point");
        }
        // identically singular pencil: repeated rows
        let mut bad = pencil.clone();
        bad.entries[1] = bad.entries[0].clone();
        assert!(matches!(
            pencil_det_curve(&bad),
            Err(PoissonError::ZeroDeterminant)
        ));
    }

    #[test]
    fn certificate_recovers_constructed_orbit_direction() {
        let (params, _datum, pencil) = fixture();
        let a = &params.algebra;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rmat = |rng: &mut ChaCha8Rng| {
            let mut m = CMat::<f64>::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] = Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                }
            }
            m
        };
        let a0 = rmat(&mut rng);
        let b0 = rmat(&mut rng);
        // L' = B0 L - L A0
        let mut entries = vec![vec![a.zero(1); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = a.zero(1);
                for k in 0..3 {
                    acc = acc.add(&pencil.entries[k][j].scale(b0[(i, k)]));
                    acc = acc.add(&pencil.entries[i][k].scale(-a0[(k, j)]));
                }
                entries[i][j] = acc;
            }
        }
        let def = Deformation { entries };
        let cert = isotriviality_certificate(&pencil, &def).unwrap();
        assert!(cert.residual < 1e-10, "residual {:e}", cert.residual);
        assert!(cert.slack_dim >= 1, "slack contains the scalar pair");
        // L' = L itself is certified by (A, B) = (0, I)
        let self_def = Deformation {
            entries: pencil.entries.clone(),
        };
        let cert2 = isotriviality_certificate(&pencil, &self_def).unwrap();
        assert!(cert2.residual < 1e-10);
        // a random deformation is not isotrivial
        let mut rand_entries = vec![vec![a.zero(1); 3]; 3];
        for row in rand_entries.iter_mut() {
            for e in row.iter_mut() {
                for c in e.coeffs.iter_mut() {
                    *c = Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                }
            }
        }
        assert!(matches!(
            isotriviality_certificate(&pencil, &Deformation { entries: rand_entries }),
            Err(PoissonError::NotIsotrivial(_))
        ));
    }

    #[test]
    fn residue_oracles() {
        let e = crate::elliptic::random_curve::<f64>(61).unwrap();
        let x = e.random_point(7).unwrap();
        // f with a simple pole of residue exactly 1: F_y-type normalization
        // against the chart coordinate. Build f = c / (w - w0) where w is the
        // pivot-complement coordinate used by the contour and c makes the
        // residue 1 with respect to omega.
        // Choose the chart explicitly: largest coordinate of x is the pivot.
        let coords = x.point.coords;
        let pivot = (0..3)
            .max_by(|&i, &j| {
                coords[i]
                    .abs()
                    .partial_cmp(&coords[j].abs())
                    .unwrap()
            })
            .unwrap();
        let others: Vec<usize> = (0..3).filter(|&i| i != pivot).collect();
        let partials: Vec<_> = (0..3).map(|v| e.cubic.form.partial(v)).collect();
        let grad: Vec<Cx<f64>> = partials.iter().map(|p| p.eval(&coords)).collect();
        let (solve_var, loop_var) = if grad[others[0]].abs() >= grad[others[1]].abs() {
            (others[0], others[1])
        } else {
            (others[1], others[0])
        };
        let w0 = coords[loop_var];
        // omega = dw / F_sol-ish in this chart (cyclic formula); residue of
        // g/(w - w0) * omega at x is g(x) * [omega/dw](x). Choose g = 1/[omega/dw](x).
        // omega/dw: from the cyclic formula with dq = e_loop + dv/dw e_solve.
        let dvdw = -(grad[loop_var] / grad[solve_var]);
        let mut dq = [Cx::<f64>::zero(); 3];
        dq[loop_var] = Cx::one();
        dq[solve_var] = dvdw;
        let cand = [
            (coords[1] * dq[2] - coords[2] * dq[1], grad[0]),
            (coords[2] * dq[0] - coords[0] * dq[2], grad[1]),
            (coords[0] * dq[1] - coords[1] * dq[0], grad[2]),
        ];
        let best = cand
            .iter()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap();
        let omega_dw = best.0 / best.1;
        let gain = omega_dw.recip();
        let mut simple = |q: &CurvePoint<f64>| -> PoissonResult<Cx<f64>> {
            let w = q.point.coords[loop_var] / q.point.coords[pivot];
            Ok(gain * (w - w0).recip())
        };
        let r = residue_at(&e, &x, &mut simple, 1e-2, 32).unwrap();
        assert!(
            (r - Cx::one()).abs() < 1e-8,
            "simple-pole residue {:?}",
            r.to_c64()
        );
        // holomorphic integrand: zero residue
        let mut holo = |q: &CurvePoint<f64>| -> PoissonResult<Cx<f64>> {
            let c = q.point.coords;
            Ok(c[0] * c[1] + c[2])
        };
        let r0 = residue_at(&e, &x, &mut holo, 1e-2, 32).unwrap();
        assert!(r0.abs() < 1e-9, "holomorphic residue {:e}", r0.abs());
        // double pole: residue of g/(w-w0)^2 omega = d/dw [g omega/dw] at w0,
        // checked against a centered finite difference along the curve.
        let g_fun = |q: &CurvePoint<f64>| -> Cx<f64> {
            let c = q.point.coords;
            c[0] * c[0] + c[1] * c[2]
        };
        let mut double = |q: &CurvePoint<f64>| -> PoissonResult<Cx<f64>> {
            let w = q.point.coords[loop_var] / q.point.coords[pivot];
            let d = w - w0;
            Ok(g_fun(q) * (d * d).recip())
        };
        let r2 = residue_at(&e, &x, &mut double, 1e-2, 48).unwrap();
        // oracle: finite difference of h(w) = g(q(w)) * omega/dw along the branch
        let h_at = |w: Cx<f64>| -> Cx<f64> {
            // Newton solve for the branch near x
            let mut v = coords[solve_var];
            for _ in 0..40 {
                let mut q = [Cx::zero(); 3];
                q[pivot] = Cx::one();
                q[loop_var] = w;
                q[solve_var] = v;
                let f = e.cubic.form.eval(&q);
                let df = partials[solve_var].eval(&q);
                v -= f / df;
            }
            let mut q = [Cx::zero(); 3];
            q[pivot] = Cx::one();
            q[loop_var] = w;
            q[solve_var] = v;
            let gv: Vec<Cx<f64>> = partials.iter().map(|p| p.eval(&q)).collect();
            let dvdw_l = -(gv[loop_var] / gv[solve_var]);
            let mut dq = [Cx::<f64>::zero(); 3];
            dq[loop_var] = Cx::one();
            dq[solve_var] = dvdw_l;
            let cand = [
                (q[1] * dq[2] - q[2] * dq[1], gv[0]),
                (q[2] * dq[0] - q[0] * dq[2], gv[1]),
                (q[0] * dq[1] - q[1] * dq[0], gv[2]),
            ];
            let best = cand
                .iter()
                .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
                .unwrap();
            let omega_dw_l = best.0 / best.1;
            let gq = q[0] * q[0] + q[1] * q[2];
            gq * omega_dw_l
        };
        let h = 1e-5;
        let hc = Cx::from_f64(h, 0.0);
        let oracle = (h_at(w0 + hc) - h_at(w0 - hc)).scale(1.0 / (2.0 * h));
        assert!(
            (r2 - oracle).abs() < 1e-5 * (1.0 + oracle.abs()),
            "double-pole residue {:?} vs oracle {:?}",
            r2.to_c64(),
            oracle.to_c64()
        );
    }

    #[test]
    fn pairing_invariances() {
        let (params, datum, pencil) = fixture();
        let e = &params.scheme.curve;
        let (t1, t2) = leaf_tangent_pair(&params, &datum).unwrap();
        let l1 = pencil_deformation_of_tangent(&params, &datum, &t1, 1e-5).unwrap();
        let l2 = pencil_deformation_of_tangent(&params, &datum, &t2, 1e-5).unwrap();
        let p12 = pairing(e, &pencil, &l1, &SplittingChoice::Local, &l2, 9).unwrap();
        let p21 = pairing(e, &pencil, &l2, &SplittingChoice::Local, &l1, 9).unwrap();
        let scale = p12.abs().max(p21.abs()).max(1e-12);
        // skew-symmetry on the leaf pair
        assert!(
            (p12 + p21).abs() / scale < 1e-6,
            "skewness {:e} (scale {scale:e})",
            (p12 + p21).abs()
        );
        assert!(p12.abs() / scale > 0.5, "pairing is nonvacuous");
        // bilinearity in the second slot
        let l2s = Deformation {
            entries: l2
                .entries
                .iter()
                .map(|r| r.iter().map(|e| e.scale(Cx::from_f64(2.5, -1.0))).collect())
                .collect(),
        };
        let p12s = pairing(e, &pencil, &l1, &SplittingChoice::Local, &l2s, 9).unwrap();
        assert!(
            (p12s - p12 * Cx::from_f64(2.5, -1.0)).abs() / scale < 1e-6,
            "bilinearity"
        );
        // certificate slack independence for an orbit direction
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut rmat = |rng: &mut ChaCha8Rng| {
            let mut m = CMat::<f64>::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] = Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                }
            }
            m
        };
        let a0 = rmat(&mut rng);
        let b0 = rmat(&mut rng);
        let mut entries = vec![vec![params.algebra.zero(1); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = params.algebra.zero(1);
                for k in 0..3 {
                    acc = acc.add(&pencil.entries[k][j].scale(b0[(i, k)]));
                    acc = acc.add(&pencil.entries[i][k].scale(-a0[(k, j)]));
                }
                entries[i][j] = acc;
            }
        }
        let orbit = Deformation { entries };
        let cert = isotriviality_certificate(&pencil, &orbit).unwrap();
        let p_orbit = pairing(
            e,
            &pencil,
            &orbit,
            &SplittingChoice::Global(cert.clone()),
            &l2,
            9,
        )
        .unwrap();
        let lambda = Cx::from_f64(0.7, -0.3);
        let mut slacked = cert.clone();
        for i in 0..3 {
            slacked.a[(i, i)] += lambda;
            slacked.b[(i, i)] += lambda;
        }
        let p_slack = pairing(
            e,
            &pencil,
            &orbit,
            &SplittingChoice::Global(slacked),
            &l2,
            9,
        )
        .unwrap();
        let oscale = p_orbit.abs().max(p_slack.abs()).max(1e-8);
        assert!(
            (p_orbit - p_slack).abs() / oscale.max(1e-8) < 1e-7
                || (p_orbit - p_slack).abs() < 1e-8,
            "slack independence {:e}",
            (p_orbit - p_slack).abs()
        );
        // splitting-choice independence: global certificate vs local series
        let p_local = pairing(e, &pencil, &orbit, &SplittingChoice::Local, &l2, 9).unwrap();
        assert!(
            (p_orbit - p_local).abs() < 1e-7 * (1.0 + oscale),
            "splitting choice changed the pairing by {:e}",
            (p_orbit - p_local).abs()
        );
    }

    #[test]
    fn pairing_gl_equivariance() {
        let (params, datum, pencil) = fixture();
        let e = &params.scheme.curve;
        let (t1, t2) = leaf_tangent_pair(&params, &datum).unwrap();
        let l1 = pencil_deformation_of_tangent(&params, &datum, &t1, 1e-5).unwrap();
        let l2 = pencil_deformation_of_tangent(&params, &datum, &t2, 1e-5).unwrap();
        let base = pairing(e, &pencil, &l1, &SplittingChoice::Local, &l2, 21).unwrap();
        // conjugate by constant invertible matrices
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let mut rmat = |rng: &mut ChaCha8Rng| {
            let mut m = CMat::<f64>::zeros(3, 3);
            for i in 0..3 {
                for j in 0..3 {
                    m[(i, j)] = Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
                }
            }
            m
        };
        let g = rmat(&mut rng);
        let h = rmat(&mut rng);
        let conj = |src: &Vec<Vec<GradedElement<f64>>>| -> Vec<Vec<GradedElement<f64>>> {
            let mut out = vec![vec![params.algebra.zero(1); 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    let mut acc = params.algebra.zero(1);
                    for p in 0..3 {
                        for q in 0..3 {
                            acc = acc.add(&src[p][q].scale(g[(i, p)] * h[(q, j)]));
                        }
                    }
                    out[i][j] = acc;
                }
            }
            out
        };
        let pencil_g = TwistedMatrix {
            entries: conj(&pencil.entries),
            col_offsets: pencil.col_offsets.clone(),
        };
        let l1_g = Deformation {
            entries: conj(&l1.entries),
        };
        let l2_g = Deformation {
            entries: conj(&l2.entries),
        };
        let moved = pairing(e, &pencil_g, &l1_g, &SplittingChoice::Local, &l2_g, 21).unwrap();
        let scale = base.abs().max(moved.abs()).max(1e-12);
        assert!(
            (base - moved).abs() / scale < 1e-7,
            "GL x GL invariance {:e} (scale {scale:e})",
            (base - moved).abs()
        );
    }

    #[test]
    fn hecke_move_is_symplectic() {
        let (params, datum, _) = fixture();
        let (t1, t2) = leaf_tangent_pair(&params, &datum).unwrap();
        let report =
            hecke_symplecticity_test(&params, &datum, (&t1, &t2), 1e-5, 33).unwrap();
        assert!(
            report.discrepancy < 1e-3,
            "symplecticity discrepancy {:e} (before {:?}, after {:?})",
            report.discrepancy,
            report.pairing_before,
            report.pairing_after
        );
        // negative control: comparing against a mismatched pencil is loud
        let other = BlowupParams::<f64>::sample(505).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let y = random_proj_point::<f64>(&mut rng);
        let other_datum = match datum_from_plane_point(&other, &y).unwrap() {
            DatumFromPoint::Generic(d, _) => d,
            _ => panic!(),
        };
        let e = &params.scheme.curve;
        let pencil = pencil_of_datum(&params, &datum).unwrap();
        let l1 = pencil_deformation_of_tangent(&params, &datum, &t1, 1e-5).unwrap();
        let l2 = pencil_deformation_of_tangent(&params, &datum, &t2, 1e-5).unwrap();
        let before = pairing(e, &pencil, &l1, &SplittingChoice::Local, &l2, 47).unwrap();
        let other_pencil = pencil_of_datum(&other, &other_datum).unwrap();
        let (u1, u2) = leaf_tangent_pair(&other, &other_datum).unwrap();
        let m1 = pencil_deformation_of_tangent(&other, &other_datum, &u1, 1e-5).unwrap();
        let m2 = pencil_deformation_of_tangent(&other, &other_datum, &u2, 1e-5).unwrap();
        let wrong = pairing(
            &other.scheme.curve,
            &other_pencil,
            &m1,
            &SplittingChoice::Local,
            &m2,
            47,
        )
        .unwrap();
        let scale = before.abs().max(wrong.abs()).max(1e-300);
        let mismatch = (before - wrong).abs() / scale;
        assert!(mismatch > 1e-2, "negative control should be loud: {mismatch:e}");
    }
}

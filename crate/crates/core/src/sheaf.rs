//! The explicit d = 3 moduli chart: presentation data (v1, v2, w1, w2) over a
//! Sklyanin algebra with nine marked points on the cubic, the case analysis
//! of the blowup identification, tangent-space dimensions, and the two-step
//! Hecke move (down at p1, up at p9) on presentations.
//!
//! A datum with relations v_i f + w_i g = 0 determines a section
//! det(p) = v1(tau p) w2(p) - v2(tau p) w1(p) that vanishes exactly on the
//! marked points; all the case analysis here is linear algebra against that
//! vanishing system.

use crate::complex::Cx;
use crate::dynamics::PainleveState;
use crate::elliptic::CurvePoint;
use crate::linalg::{self, CMat};
use crate::plane::{PlaneDivisor, ProjPoint};
use crate::scalar::Real;
use crate::sklyanin::{
    self, Algebra, GradedElement, PointScheme, SklResult, SklyaninError, SklyaninParams,
};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SheafError {
    #[error("unexpected kernel dimensions (system {system}, det-map {detmap})")]
    UnexpectedKernelDim { system: usize, detmap: usize },
    #[error("twisted evaluation rank dropped below 2 at the shift point")]
    RankDrop,
    #[error("new first-column pair is degenerate (the determinant factors)")]
    DegenerateColumn,
    #[error("datum sits on the fiber over p1; use the fiber-case analysis")]
    FiberCase,
    #[error("datum is not on the fiber over p1")]
    NotFiberCase,
    #[error("presentation solve failed: {0}")]
    Presentation(String),
    #[error(transparent)]
    Sklyanin(#[from] SklyaninError),
    #[error(transparent)]
    Elliptic(#[from] crate::elliptic::EllipticError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynError),
}

pub type SheafResult<T> = Result<T, SheafError>;

/// Marked-point data for the chi = 1 chart: algebra, its point scheme, and
/// nine distinct base points summing to -6t.
#[derive(Clone, Debug)]
pub struct BlowupParams<R> {
    pub algebra: Algebra<R>,
    pub scheme: PointScheme<R>,
    pub base_points: Vec<CurvePoint<R>>,
    /// Seeded sample points used for least-norm reductions and det-map ranks.
    pub samples: Vec<CurvePoint<R>>,
}

/// Presentation datum: relations v_i f + w_i g = 0 with v_i in A_1 and
/// w_i in A_2.
#[derive(Clone, Debug)]
pub struct SheafDatum<R> {
    pub v1: GradedElement<R>,
    pub v2: GradedElement<R>,
    pub w1: GradedElement<R>,
    pub w2: GradedElement<R>,
}

/// Matrix of graded entries with per-column twist offsets: entry (i, k)
/// evaluates at tau^{offset_k} q.
#[derive(Clone, Debug)]
pub struct TwistedMatrix<R> {
    pub entries: Vec<Vec<GradedElement<R>>>,
    pub col_offsets: Vec<i64>,
}

impl<R: Real> TwistedMatrix<R> {
    pub fn twisted_eval(
        &self,
        algebra: &Algebra<R>,
        scheme: &PointScheme<R>,
        q: &CurvePoint<R>,
    ) -> SklResult<CMat<R>> {
        let rows = self.entries.len();
        let cols = self.col_offsets.len();
        let mut m = CMat::zeros(rows, cols);
        for (k, &off) in self.col_offsets.iter().enumerate() {
            let at = scheme.curve.tau_pow(q, off)?;
            for i in 0..rows {
                m[(i, k)] = sklyanin::restrict_to_e(algebra, scheme, &self.entries[i][k], &at)?;
            }
        }
        Ok(m)
    }

    pub fn det_at(
        &self,
        algebra: &Algebra<R>,
        scheme: &PointScheme<R>,
        q: &CurvePoint<R>,
    ) -> SklResult<Cx<R>> {
        Ok(self.twisted_eval(algebra, scheme, q)?.det())
    }
}

impl<R: Real> BlowupParams<R> {
    pub fn new(
        algebra: Algebra<R>,
        scheme: PointScheme<R>,
        base_points: Vec<CurvePoint<R>>,
        seed: u64,
    ) -> SheafResult<Self> {
        assert_eq!(base_points.len(), 9);
        let samples = (0..12u64)
            .map(|k| scheme.curve.random_point(seed ^ 0x5a3 ^ (k << 8)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(BlowupParams {
            algebra,
            scheme,
            base_points,
            samples,
        })
    }

    /// Seeded generic instance: near-commutative Sklyanin parameters, eight
    /// random base points, ninth solving the sum constraint.
    pub fn sample(seed: u64) -> SheafResult<Self> {
        let algebra = Algebra::new(SklyaninParams::generic(seed, 0.2))?;
        let scheme = sklyanin::point_scheme(&algebra, seed)?;
        let curve = &scheme.curve;
        let mut pts: Vec<CurvePoint<R>> = (0..8u64)
            .map(|k| curve.random_point(seed.wrapping_mul(129).wrapping_add(k)))
            .collect::<Result<_, _>>()?;
        let target = curve.scalar_mul(-6, &curve.translation)?;
        let partial = curve.pic_sum(&pts)?;
        let last = curve.sub(&target, &partial.abel)?;
        pts.push(last);
        BlowupParams::new(algebra, scheme, pts, seed)
    }

    /// Plane image of a point of the cubic under the marked embedding: the
    /// coordinates of its translate (sections of the twisted bundle vanish at
    /// q exactly when their plain form vanishes at tau q).
    pub fn embed(&self, q: &CurvePoint<R>) -> SheafResult<ProjPoint<R>> {
        Ok(self.scheme.curve.tau_pow(q, 1)?.point)
    }

    /// Evaluation of a degree-1 element as a section at q.
    pub fn eval_section(&self, v: &GradedElement<R>, q: &CurvePoint<R>) -> SheafResult<Cx<R>> {
        let at = self.embed(q)?;
        Ok(v.coeffs[0] * at.coords[0] + v.coeffs[1] * at.coords[1] + v.coeffs[2] * at.coords[2])
    }

    pub fn restrict(&self, u: &GradedElement<R>, q: &CurvePoint<R>) -> SheafResult<Cx<R>> {
        Ok(sklyanin::restrict_to_e(&self.algebra, &self.scheme, u, q)?)
    }
}

/// Genericity report: translation collisions and collinear triples.
#[derive(Clone, Debug, Default)]
pub struct GenericityReport {
    pub violations: Vec<String>,
}

impl GenericityReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Check tau^{3k} p_i != p_j for |k| <= k_max, and that no triple of base
/// points represents one of the nearby twisted hyperplane classes.
pub fn genericity_check<R: Real>(
    params: &BlowupParams<R>,
    k_max: i64,
) -> SheafResult<GenericityReport> {
    let mut report = GenericityReport::default();
    let e = &params.scheme.curve;
    let pts = &params.base_points;
    let tol = R::from_f64(1e-6);
    for i in 0..9 {
        for j in (i + 1)..9 {
            for k in -k_max..=k_max {
                let moved = e.tau_pow(&pts[i], 3 * k)?;
                if moved.dist(&pts[j]) < tol {
                    report
                        .violations
                        .push(format!("tau^{}(p{}) = p{}", 3 * k, i + 1, j + 1));
                }
            }
        }
    }
    // triples against the classes L_{3l+1}: abel = -3(3l+1) t
    for i in 0..9 {
        for j in (i + 1)..9 {
            for k in (j + 1)..9 {
                let sum = e.pic_sum(&[pts[i], pts[j], pts[k]])?;
                for l in -2i64..=2 {
                    let target = e.scalar_mul(-3 * (3 * l + 1), &e.translation)?;
                    if sum.abel.dist(&target) < tol {
                        report.violations.push(format!(
                            "p{}+p{}+p{} represents the twisted hyperplane class (l={l})",
                            i + 1,
                            j + 1,
                            k + 1
                        ));
                    }
                }
            }
        }
    }
    Ok(report)
}

impl<R: Real> SheafDatum<R> {
    /// The plane point annihilated by the span of (v1, v2).
    pub fn plane_point(&self) -> ProjPoint<R> {
        let a = &self.v1.coeffs;
        let b = &self.v2.coeffs;
        ProjPoint::new([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }

    /// det(q) = v1(tau q) w2(q) - v2(tau q) w1(q).
    pub fn det_section(
        &self,
        params: &BlowupParams<R>,
        q: &CurvePoint<R>,
    ) -> SheafResult<Cx<R>> {
        let v1 = params.eval_section(&self.v1, q)?;
        let v2 = params.eval_section(&self.v2, q)?;
        let w1 = params.restrict(&self.w1, q)?;
        let w2 = params.restrict(&self.w2, q)?;
        Ok(v1 * w2 - v2 * w1)
    }

    pub fn verify_base_vanishing(&self, params: &BlowupParams<R>) -> SheafResult<f64> {
        let mut worst: f64 = 0.0;
        let scale = self.scale(params)?;
        for p in &params.base_points {
            worst = worst.max(self.det_section(params, p)?.abs().to_f64());
        }
        Ok(worst / scale.max(1e-300))
    }

    /// Typical magnitude of the det section over the sample set, used to make
    /// residuals relative.
    fn scale(&self, params: &BlowupParams<R>) -> SheafResult<f64> {
        let mut m: f64 = 0.0;
        for q in &params.samples {
            m = m.max(self.det_section(params, q)?.abs().to_f64());
        }
        Ok(m)
    }

    /// Stability: no x in A_1 with v1 x = w1 and v2 x = w2.
    pub fn is_stable(&self, params: &BlowupParams<R>) -> SheafResult<bool> {
        let a = &params.algebra;
        let d2 = a.dim(2);
        let mut m = CMat::zeros(2 * d2, 3);
        for k in 0..3 {
            let xk = a.generator(k);
            let c1 = a.multiply(&self.v1, &xk)?;
            let c2 = a.multiply(&self.v2, &xk)?;
            for r in 0..d2 {
                m[(r, k)] = c1.coeffs[r];
                m[(d2 + r, k)] = c2.coeffs[r];
            }
        }
        let mut rhs = Vec::with_capacity(2 * d2);
        rhs.extend_from_slice(&self.w1.coeffs);
        rhs.extend_from_slice(&self.w2.coeffs);
        let sol = linalg::lsq_solve(&m, &rhs, 1e-10);
        let achieved = m.matvec(&sol);
        let mut res = R::zero();
        let mut norm = R::zero();
        for (x, y) in achieved.iter().zip(&rhs) {
            res = res.max((*x - *y).abs());
            norm = norm.max(y.abs());
        }
        // solvable => the g-generator splits off => unstable
        Ok(res.to_f64() > 1e-6 * norm.to_f64().max(1e-300))
    }
}

/// Dimensions observed while solving the nine vanishing conditions.
#[derive(Clone, Copy, Debug)]
pub struct KernelReport {
    /// Kernel dimension of the nine-point evaluation system on (w1, w2).
    pub system_kernel_dim: usize,
    /// Kernel dimension of the full determinant map (w1, w2) -> section.
    pub detmap_kernel_dim: usize,
    /// Dimension of the trivial subspace (v1 g, v2 g).
    pub trivial_dim: usize,
    /// Case label: 3 (generic: det-map kernel is pure trivial pairs),
    /// 4 (forced zero determinant), 5 (base-point fiber).
    pub headline: usize,
}

#[derive(Clone, Debug)]
pub enum DatumFromPoint<R> {
    /// Unique datum up to equivalence.
    Generic(SheafDatum<R>, KernelReport),
    /// Common section zero off the base locus: determinant forced to zero,
    /// single equivalence class.
    ForcedZero(SheafDatum<R>, KernelReport),
    /// x is the image of a base point: a projective line of data.
    Fiber(FiberFamily<R>, KernelReport),
}

/// One-parameter family of data over the fiber of a base point.
#[derive(Clone, Debug)]
pub struct FiberFamily<R> {
    pub v1: GradedElement<R>,
    pub v2: GradedElement<R>,
    /// Orthonormal basis of the family directions in w-pair space.
    pub basis: [Vec<Cx<R>>; 2],
}

impl<R: Real> FiberFamily<R> {
    pub fn member(&self, theta: [Cx<R>; 2], algebra: &Algebra<R>) -> SheafDatum<R> {
        let d2 = algebra.dim(2);
        let mut w = vec![Cx::zero(); 2 * d2];
        for (i, slot) in w.iter_mut().enumerate() {
            *slot = self.basis[0][i] * theta[0] + self.basis[1][i] * theta[1];
        }
        SheafDatum {
            v1: self.v1.clone(),
            v2: self.v2.clone(),
            w1: GradedElement {
                degree: 2,
                coeffs: w[..d2].to_vec(),
            },
            w2: GradedElement {
                degree: 2,
                coeffs: w[d2..].to_vec(),
            },
        }
    }
}

const KERNEL_REL: f64 = 1e-7;

/// Row of the nine-point system for a w-pair unknown, at the point q.
fn det_row<R: Real>(
    params: &BlowupParams<R>,
    v1: &GradedElement<R>,
    v2: &GradedElement<R>,
    q: &CurvePoint<R>,
) -> SheafResult<Vec<Cx<R>>> {
    let a = &params.algebra;
    let d2 = a.dim(2);
    let ev1 = params.eval_section(v1, q)?;
    let ev2 = params.eval_section(v2, q)?;
    let mut row = vec![Cx::zero(); 2 * d2];
    for k in 0..d2 {
        let mut b = a.zero(2);
        b.coeffs[k] = Cx::one();
        let bv = params.restrict(&b, q)?;
        row[k] = -ev2 * bv; // w1 coefficient
        row[d2 + k] = ev1 * bv; // w2 coefficient
    }
    Ok(row)
}

/// The trivial directions (v1 g, v2 g) for g in A_1, as w-pair vectors.
fn trivial_vectors<R: Real>(
    algebra: &Algebra<R>,
    v1: &GradedElement<R>,
    v2: &GradedElement<R>,
) -> SklResult<Vec<Vec<Cx<R>>>> {
    let d2 = algebra.dim(2);
    let mut out = Vec::with_capacity(3);
    for k in 0..3 {
        let g = algebra.generator(k);
        let t1 = algebra.multiply(v1, &g)?;
        let t2 = algebra.multiply(v2, &g)?;
        let mut v = Vec::with_capacity(2 * d2);
        v.extend_from_slice(&t1.coeffs);
        v.extend_from_slice(&t2.coeffs);
        out.push(v);
    }
    Ok(out)
}

fn orthonormalize<R: Real>(vectors: &[Vec<Cx<R>>]) -> Vec<Vec<Cx<R>>> {
    let mut basis: Vec<Vec<Cx<R>>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for b in &basis {
            let mut ip = Cx::zero();
            for (x, y) in b.iter().zip(w.iter()) {
                ip += x.conj() * *y;
            }
            for (x, y) in w.iter_mut().zip(b.iter()) {
                *x -= *y * ip;
            }
        }
        let mut n = R::zero();
        for x in &w {
            n = n + x.abs_sq();
        }
        let n = n.sqrt();
        if n.to_f64() > 1e-9 {
            let inv = R::one() / n;
            for x in w.iter_mut() {
                *x = x.scale(inv);
            }
            basis.push(w);
        }
    }
    basis
}

fn project_out<R: Real>(v: &[Cx<R>], basis: &[Vec<Cx<R>>]) -> Vec<Cx<R>> {
    let mut w = v.to_vec();
    for b in basis {
        let mut ip = Cx::zero();
        for (x, y) in b.iter().zip(w.iter()) {
            ip += x.conj() * *y;
        }
        for (x, y) in w.iter_mut().zip(b.iter()) {
            *x -= *y * ip;
        }
    }
    w
}

fn vec_norm<R: Real>(v: &[Cx<R>]) -> R {
    let mut n = R::zero();
    for x in v {
        n = n + x.abs_sq();
    }
    n.sqrt()
}

/// Solve the presentation data over a plane point: basis of the hyperplane of
/// sections through x, then the w-pairs compatible with vanishing at the nine
/// base points. The kernel dimensions drive the generic / forced-zero / fiber
/// trichotomy.
pub fn datum_from_plane_point<R: Real>(
    params: &BlowupParams<R>,
    x: &ProjPoint<R>,
) -> SheafResult<DatumFromPoint<R>> {
    let a = &params.algebra;
    let d2 = a.dim(2);
    let (v1, v2) = sklyanin::point_ideal(a, x);
    // nine-point system
    let mut rows = Vec::with_capacity(9);
    for p in &params.base_points {
        rows.push(det_row(params, &v1, &v2, p)?);
    }
    let m = CMat::from_rows(&rows);
    let dec = linalg::svd(&m);
    let kernel = dec.kernel(KERNEL_REL);
    let system_kernel_dim = kernel.len();
    // det-map kernel over the sample set (more samples than the section space)
    let mut drows = Vec::with_capacity(params.samples.len());
    for q in &params.samples {
        drows.push(det_row(params, &v1, &v2, q)?);
    }
    let ddec = linalg::svd(&CMat::from_rows(&drows));
    let detmap_kernel_dim = ddec.kernel(KERNEL_REL).len();
    let trivial = trivial_vectors(a, &v1, &v2)?;
    let trivial_basis = orthonormalize(&trivial);
    let trivial_dim = trivial_basis.len();
    // family directions: kernel content beyond the trivial subspace
    let mut extra: Vec<Vec<Cx<R>>> = Vec::new();
    for k in &kernel {
        let r = project_out(k, &trivial_basis);
        if vec_norm(&r).to_f64() > 1e-5 {
            extra.push(r);
        }
    }
    let extra = orthonormalize(&extra);
    let mk_datum = |wvec: &[Cx<R>]| -> SheafDatum<R> {
        let mut w = wvec.to_vec();
        linalg::canonical_phase(&mut w);
        SheafDatum {
            v1: v1.clone(),
            v2: v2.clone(),
            w1: GradedElement {
                degree: 2,
                coeffs: w[..d2].to_vec(),
            },
            w2: GradedElement {
                degree: 2,
                coeffs: w[d2..].to_vec(),
            },
        }
    };
    match (system_kernel_dim, detmap_kernel_dim, extra.len()) {
        (4, 3, 1) => {
            let report = KernelReport {
                system_kernel_dim,
                detmap_kernel_dim,
                trivial_dim,
                headline: 3,
            };
            Ok(DatumFromPoint::Generic(mk_datum(&extra[0]), report))
        }
        (4, 4, 1) => {
            let report = KernelReport {
                system_kernel_dim,
                detmap_kernel_dim,
                trivial_dim,
                headline: 4,
            };
            Ok(DatumFromPoint::ForcedZero(mk_datum(&extra[0]), report))
        }
        (5, 4, 2) => {
            let report = KernelReport {
                system_kernel_dim,
                detmap_kernel_dim,
                trivial_dim,
                headline: 5,
            };
            Ok(DatumFromPoint::Fiber(
                FiberFamily {
                    v1,
                    v2,
                    basis: [extra[0].clone(), extra[1].clone()],
                },
                report,
            ))
        }
        _ => Err(SheafError::UnexpectedKernelDim {
            system: system_kernel_dim,
            detmap: detmap_kernel_dim,
        }),
    }
}

/// Least-norm representative modulo the trivial directions (under the sample
/// inner product) with canonical phase; data comparing equal as sheaves land
/// on the same representative.
pub fn canonical_datum<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
) -> SheafResult<SheafDatum<R>> {
    let a = &params.algebra;
    let d2 = a.dim(2);
    // canonical v-basis through the plane point
    let x = datum.plane_point();
    let (cv1, cv2) = sklyanin::point_ideal(a, &x);
    // change of frame G with v_i = sum_j G_ij cv_j
    let mut frame = CMat::zeros(3, 2);
    for r in 0..3 {
        frame[(r, 0)] = cv1.coeffs[r];
        frame[(r, 1)] = cv2.coeffs[r];
    }
    let g1 = linalg::lsq_solve(&frame, &datum.v1.coeffs, 1e-12);
    let g2 = linalg::lsq_solve(&frame, &datum.v2.coeffs, 1e-12);
    let g = CMat::from_rows(&[g1, g2]);
    let ginv = g
        .inverse()
        .ok_or_else(|| SheafError::Presentation("dependent v pair".into()))?;
    // new w = G^{-1} w
    let mut w1 = vec![Cx::zero(); d2];
    let mut w2 = vec![Cx::zero(); d2];
    for k in 0..d2 {
        w1[k] = ginv[(0, 0)] * datum.w1.coeffs[k] + ginv[(0, 1)] * datum.w2.coeffs[k];
        w2[k] = ginv[(1, 0)] * datum.w1.coeffs[k] + ginv[(1, 1)] * datum.w2.coeffs[k];
    }
    // least-norm against the trivial directions in the sample inner product
    let trivial = trivial_vectors(a, &cv1, &cv2)?;
    let eval_pair = |w1v: &[Cx<R>], w2v: &[Cx<R>]| -> SheafResult<Vec<Cx<R>>> {
        let mut out = Vec::with_capacity(2 * params.samples.len());
        for q in &params.samples {
            let mut a1 = Cx::zero();
            let mut a2 = Cx::zero();
            for k in 0..d2 {
                let mut b = a.zero(2);
                b.coeffs[k] = Cx::one();
                let bv = params.restrict(&b, q)?;
                a1 += w1v[k] * bv;
                a2 += w2v[k] * bv;
            }
            out.push(a1);
            out.push(a2);
        }
        Ok(out)
    };
    let target = eval_pair(&w1, &w2)?;
    let mut cols = Vec::with_capacity(3);
    for t in &trivial {
        cols.push(eval_pair(&t[..d2], &t[d2..])?);
    }
    let mut m = CMat::zeros(target.len(), 3);
    for (c, col) in cols.iter().enumerate() {
        for (r, val) in col.iter().enumerate() {
            m[(r, c)] = *val;
        }
    }
    let coeffs = linalg::lsq_solve(&m, &target, 1e-10);
    for (c, t) in coeffs.iter().zip(&trivial) {
        for k in 0..d2 {
            w1[k] -= t[k] * *c;
            w2[k] -= t[d2 + k] * *c;
        }
    }
    let mut joint: Vec<Cx<R>> = w1.iter().chain(w2.iter()).copied().collect();
    linalg::canonical_phase(&mut joint);
    Ok(SheafDatum {
        v1: cv1,
        v2: cv2,
        w1: GradedElement {
            degree: 2,
            coeffs: joint[..d2].to_vec(),
        },
        w2: GradedElement {
            degree: 2,
            coeffs: joint[d2..].to_vec(),
        },
    })
}

/// Distance between data as sheaves: plane points plus canonical w-pairs.
pub fn datum_dist<R: Real>(
    params: &BlowupParams<R>,
    a: &SheafDatum<R>,
    b: &SheafDatum<R>,
) -> SheafResult<f64> {
    let xa = a.plane_point();
    let xb = b.plane_point();
    let mut worst = xa.dist(&xb).to_f64();
    let ca = canonical_datum(params, a)?;
    let cb = canonical_datum(params, b)?;
    let va: Vec<Cx<R>> = ca.w1.coeffs.iter().chain(ca.w2.coeffs.iter()).copied().collect();
    let vb: Vec<Cx<R>> = cb.w1.coeffs.iter().chain(cb.w2.coeffs.iter()).copied().collect();
    // projective comparison of the w-pairs
    let mut ip = Cx::zero();
    for (x, y) in vb.iter().zip(va.iter()) {
        ip += x.conj() * *y;
    }
    for (x, y) in va.iter().zip(vb.iter()) {
        worst = worst.max((*x - *y * ip).abs().to_f64());
    }
    Ok(worst)
}

/// Tangent-space bookkeeping at a datum.
#[derive(Clone, Debug)]
pub struct TangentReport<R> {
    pub presentation_dim: usize,
    pub constraint_rank: usize,
    pub trivial_rank: usize,
    pub tangent_dim: usize,
    pub moduli_dim: usize,
    /// Orthonormal tangent directions with the marked points held fixed
    /// (the leaf directions), as 18-vectors (v1', v2', w1', w2').
    pub leaf_basis: Vec<Vec<Cx<R>>>,
}

fn linearized_row<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
    q: &CurvePoint<R>,
) -> SheafResult<Vec<Cx<R>>> {
    let a = &params.algebra;
    let d2 = a.dim(2);
    let at = params.embed(q)?;
    let w1 = params.restrict(&datum.w1, q)?;
    let w2 = params.restrict(&datum.w2, q)?;
    let ev1 = params.eval_section(&datum.v1, q)?;
    let ev2 = params.eval_section(&datum.v2, q)?;
    let mut row = vec![Cx::zero(); 18];
    for k in 0..3 {
        row[k] = at.coords[k] * w2; // v1'
        row[3 + k] = -(at.coords[k] * w1); // v2'
    }
    for k in 0..d2 {
        let mut b = a.zero(2);
        b.coeffs[k] = Cx::one();
        let bv = params.restrict(&b, q)?;
        row[6 + k] = -ev2 * bv; // w1'
        row[6 + d2 + k] = ev1 * bv; // w2'
    }
    Ok(row)
}

/// Trivial deformations: the GL_2 frame action plus the automorphisms of the
/// generator pair (scalings and f -> f + y g); nine generators of rank 8.
fn trivial_deformations<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
) -> SklResult<Vec<Vec<Cx<R>>>> {
    let a = &params.algebra;
    let d2 = a.dim(2);
    let pack = |dv1: &GradedElement<R>,
                dv2: &GradedElement<R>,
                dw1: &GradedElement<R>,
                dw2: &GradedElement<R>|
     -> Vec<Cx<R>> {
        let mut v = Vec::with_capacity(18);
        v.extend_from_slice(&dv1.coeffs);
        v.extend_from_slice(&dv2.coeffs);
        v.extend_from_slice(&dw1.coeffs);
        v.extend_from_slice(&dw2.coeffs);
        v
    };
    let zero1 = a.zero(1);
    let zero2 = a.zero(2);
    let mut out = Vec::with_capacity(9);
    // GL2 frame: delta(v_i) = sum G_ij v_j, delta(w_i) = sum G_ij w_j
    let vs = [&datum.v1, &datum.v2];
    let ws = [&datum.w1, &datum.w2];
    for i in 0..2 {
        for j in 0..2 {
            let dv = [
                if i == 0 { vs[j].clone() } else { zero1.clone() },
                if i == 1 { vs[j].clone() } else { zero1.clone() },
            ];
            let dw = [
                if i == 0 { ws[j].clone() } else { zero2.clone() },
                if i == 1 { ws[j].clone() } else { zero2.clone() },
            ];
            out.push(pack(&dv[0], &dv[1], &dw[0], &dw[1]));
        }
    }
    // f -> lambda f: delta v = v
    out.push(pack(&datum.v1, &datum.v2, &zero2, &zero2));
    // g -> mu g: delta w = w
    out.push(pack(&zero1, &zero1, &datum.w1, &datum.w2));
    // f -> f + y g: delta w_i = v_i y
    for k in 0..3 {
        let y = a.generator(k);
        let d1 = a.multiply(&datum.v1, &y)?;
        let d2e = a.multiply(&datum.v2, &y)?;
        out.push(pack(&zero1, &zero1, &d1, &d2e));
    }
    let _ = d2;
    Ok(out)
}

/// Rank bookkeeping of the linearized vanishing system and the trivial
/// subspace: tangent dimension and moduli-dimension consistency data.
pub fn tangent_dimension<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
) -> SheafResult<TangentReport<R>> {
    let mut rows = Vec::with_capacity(9);
    for p in &params.base_points {
        rows.push(linearized_row(params, datum, p)?);
    }
    let m = CMat::from_rows(&rows);
    let dec = linalg::svd(&m);
    let constraint_rank = dec.rank(KERNEL_REL);
    let kernel = dec.kernel(KERNEL_REL);
    let trivial = trivial_deformations(params, datum)?;
    let trivial_basis = orthonormalize(&trivial);
    let trivial_rank = trivial_basis.len();
    let mut leaf: Vec<Vec<Cx<R>>> = Vec::new();
    for k in &kernel {
        let r = project_out(k, &trivial_basis);
        if vec_norm(&r).to_f64() > 1e-5 {
            leaf.push(r);
        }
    }
    let leaf_basis = orthonormalize(&leaf);
    let tangent_dim = 18usize
        .saturating_sub(trivial_rank)
        .saturating_sub(constraint_rank);
    Ok(TangentReport {
        presentation_dim: 18,
        constraint_rank,
        trivial_rank,
        tangent_dim,
        moduli_dim: 18 - trivial_rank,
        leaf_basis,
    })
}

/// Diagnostics carried out of the two-step Hecke move.
#[derive(Clone, Debug)]
pub struct HeckeDiagnostics {
    /// Worst relative residual of det L at the expected nine support points.
    pub det_divisor_residual: f64,
    /// Base vanishing of the output datum at the new marked points.
    pub new_base_vanishing: f64,
}

/// Down-shift presentation at p1: the 3x3 matrix of degree-1 entries, rows
/// (v_i, r_i1, r_i2) and (0, u1, u2), with uniform column twist offset 1.
pub fn down_shift_matrix<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
) -> SheafResult<TwistedMatrix<R>> {
    let a = &params.algebra;
    let p1 = params.base_points[0];
    // hom to the point module at p1: c1 v_i(tau p1) + c0 w_i(p1) = 0
    let mut hom = CMat::zeros(2, 2);
    for i in 0..2 {
        let (v, w) = if i == 0 {
            (&datum.v1, &datum.w1)
        } else {
            (&datum.v2, &datum.w2)
        };
        hom[(i, 0)] = params.eval_section(v, &p1)?;
        hom[(i, 1)] = params.restrict(w, &p1)?;
    }
    let dec = linalg::svd(&hom);
    let kernel = dec.kernel(1e-5);
    if kernel.is_empty() {
        return Err(SheafError::Presentation(format!(
            "no hom to the point module at p1 (det residual {:e})",
            hom.det().abs().to_f64()
        )));
    }
    let (c1, c0) = (kernel[0][0], kernel[0][1]);
    if c0.abs().to_f64() < 1e-7 * c1.abs().to_f64().max(1e-300) {
        return Err(SheafError::FiberCase);
    }
    // generator change f -> f + y g with y(p1) = -c1/c0
    let pc = p1.point.coords;
    let nrm = pc[0].abs_sq() + pc[1].abs_sq() + pc[2].abs_sq();
    let lhat = [
        pc[0].conj().scale(R::one() / nrm),
        pc[1].conj().scale(R::one() / nrm),
        pc[2].conj().scale(R::one() / nrm),
    ];
    let factor = -(c1 / c0);
    let y = a.linear([lhat[0] * factor, lhat[1] * factor, lhat[2] * factor]);
    let w1p = datum.w1.sub(&a.multiply(&datum.v1, &y)?);
    let w2p = datum.w2.sub(&a.multiply(&datum.v2, &y)?);
    // rewrite w'_i = r_i1 l1 + r_i2 l2 through the point ideal at p1
    let (l1, l2) = sklyanin::point_ideal(a, &p1.point);
    let d2 = a.dim(2);
    let mut m = CMat::zeros(d2, 6);
    for k in 0..3 {
        let xk = a.generator(k);
        let c1m = a.multiply(&xk, &l1)?;
        let c2m = a.multiply(&xk, &l2)?;
        for r in 0..d2 {
            m[(r, k)] = c1m.coeffs[r];
            m[(r, 3 + k)] = c2m.coeffs[r];
        }
    }
    let mut solve_r = |w: &GradedElement<R>| -> SheafResult<(GradedElement<R>, GradedElement<R>)> {
        let sol = linalg::lsq_solve(&m, &w.coeffs, 1e-9);
        let achieved = m.matvec(&sol);
        let mut res = R::zero();
        for (x, y) in achieved.iter().zip(&w.coeffs) {
            res = res.max((*x - *y).abs());
        }
        if res.to_f64() > 1e-6 * w.norm().to_f64().max(1e-300) {
            return Err(SheafError::Presentation(format!(
                "w' not in the point ideal (residual {:e})",
                res.to_f64()
            )));
        }
        Ok((
            a.linear([sol[0], sol[1], sol[2]]),
            a.linear([sol[3], sol[4], sol[5]]),
        ))
    };
    let (r11, r12) = solve_r(&w1p)?;
    let (r21, r22) = solve_r(&w2p)?;
    let syz = sklyanin::syzygy(a, &params.scheme, &p1)?;
    let zero1 = a.zero(1);
    Ok(TwistedMatrix {
        entries: vec![
            vec![datum.v1.clone(), r11, r12],
            vec![datum.v2.clone(), r21, r22],
            vec![zero1, syz.u1, syz.u2],
        ],
        col_offsets: vec![1, 1, 1],
    })
}

/// The two-step Hecke move s0: shift down at p1, shift up at p9. Returns the
/// new marked points (tau^3 p9, p2..p8, tau^-3 p1), the new datum, and
/// residual diagnostics.
pub fn hecke_s0<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
) -> SheafResult<(BlowupParams<R>, SheafDatum<R>, HeckeDiagnostics)> {
    let a = &params.algebra;
    let e = &params.scheme.curve;
    let p1 = params.base_points[0];
    let p9 = params.base_points[8];
    // fiber guard
    let x = datum.plane_point();
    let image_p1 = params.embed(&p1)?;
    if x.dist(&image_p1).to_f64() < 1e-6 {
        return Err(SheafError::FiberCase);
    }
    // Parameter-level exclusions: the finite list of inequalities on the
    // base points under which the move is a morphism. The shift points must
    // not collide, and no pair may close up with p9 to a divisor of the
    // twisted hyperplane class (which lets the determinant factor).
    let p1_down_guard = e.tau_pow(&p1, -3)?;
    let guard_tol = R::from_f64(1e-6);
    if p1_down_guard.dist(&p9) < guard_tol {
        return Err(SheafError::RankDrop);
    }
    let class_target = e.scalar_mul(-3, &e.translation)?;
    for i in 1..8 {
        for j in (i + 1)..8 {
            let sum = e
                .pic_sum(&[params.base_points[i], params.base_points[j], p9])?
                .abel;
            if sum.dist(&class_target) < guard_tol {
                return Err(SheafError::DegenerateColumn);
            }
        }
    }
    for i in 1..8 {
        let sum = e.pic_sum(&[p1_down_guard, params.base_points[i], p9])?.abel;
        if sum.dist(&class_target) < guard_tol {
            return Err(SheafError::DegenerateColumn);
        }
    }
    let lmat = down_shift_matrix(params, datum)?;
    // expected support of the down-shifted sheaf
    let p1_down = e.tau_pow(&p1, -3)?;
    let mut support = vec![p1_down];
    support.extend_from_slice(&params.base_points[1..]);
    let mut det_scale: f64 = 0.0;
    for q in &params.samples {
        det_scale = det_scale.max(lmat.det_at(a, &params.scheme, q)?.abs().to_f64());
    }
    let mut det_divisor_residual: f64 = 0.0;
    for q in &support {
        let v = lmat.det_at(a, &params.scheme, q)?.abs().to_f64();
        det_divisor_residual = det_divisor_residual.max(v / det_scale.max(1e-300));
    }
    // twisted evaluation at p9 must have rank exactly 2
    let n = lmat.twisted_eval(a, &params.scheme, &p9)?;
    let ndec = linalg::svd(&n);
    let s = &ndec.sigma;
    if s[1].to_f64() < 1e-6 * s[0].to_f64() {
        return Err(SheafError::RankDrop);
    }
    if s[2].to_f64() > 1e-5 * s[0].to_f64() {
        return Err(SheafError::Presentation(format!(
            "p9 is not on the support (sigma_3/sigma_1 = {:e})",
            s[2].to_f64() / s[0].to_f64()
        )));
    }
    // left null vector: kernel of the plain transpose
    let mut nt = CMat::zeros(3, 3);
    for i in 0..3 {
        for j in 0..3 {
            nt[(i, j)] = n[(j, i)];
        }
    }
    let ntdec = linalg::svd(&nt);
    let s3 = ntdec.v.col(2);
    // rho_k = sum_i s3_i L_ik
    let mut rho: Vec<GradedElement<R>> = Vec::with_capacity(3);
    for k in 0..3 {
        let mut acc = a.zero(1);
        for i in 0..3 {
            acc = acc.add(&lmat.entries[i][k].scale(s3[i]));
        }
        rho.push(acc);
    }
    // target syzygy pair at the up-shift point
    let p9_up = e.tau_pow(&p9, 3)?;
    let syz_up = sklyanin::syzygy(a, &params.scheme, &p9_up)?;
    // coordinates of rho in the span of (u1', u2')
    let mut span = CMat::zeros(3, 2);
    for r in 0..3 {
        span[(r, 0)] = syz_up.u1.coeffs[r];
        span[(r, 1)] = syz_up.u2.coeffs[r];
    }
    let mut kmat = CMat::zeros(3, 2);
    for (k, r) in rho.iter().enumerate() {
        let sol = linalg::lsq_solve(&span, &r.coeffs, 1e-10);
        let achieved = span.matvec(&sol);
        let mut res = R::zero();
        let mut scale = R::zero();
        for (x2, y2) in achieved.iter().zip(&r.coeffs) {
            res = res.max((*x2 - *y2).abs());
            scale = scale.max(y2.abs());
        }
        if res.to_f64() > 1e-5 * scale.to_f64().max(1e-300) {
            return Err(SheafError::Presentation(format!(
                "row combination escapes the syzygy span (residual {:e})",
                res.to_f64()
            )));
        }
        kmat[(k, 0)] = sol[0];
        kmat[(k, 1)] = sol[1];
    }
    let kdec = linalg::svd(&kmat);
    if kdec.sigma[1].to_f64() < 1e-6 * kdec.sigma[0].to_f64() {
        return Err(SheafError::DegenerateColumn);
    }
    // column transform T: plain-transpose systems K^T t = e_i
    let mut kt = CMat::zeros(2, 3);
    for i in 0..3 {
        for j in 0..2 {
            kt[(j, i)] = kmat[(i, j)];
        }
    }
    let ktdec = linalg::svd(&kt);
    let t_col1 = ktdec.v.col(2); // kernel of K^T
    let e1 = vec![Cx::one(), Cx::zero()];
    let e2 = vec![Cx::zero(), Cx::one()];
    let t_col2 = linalg::lsq_solve(&kt, &e1, 1e-10);
    let t_col3 = linalg::lsq_solve(&kt, &e2, 1e-10);
    // S: rows 1,2 complete the left-null row s3
    let mut s3row = CMat::zeros(1, 3);
    for k in 0..3 {
        s3row[(0, k)] = s3[k];
    }
    let sdec = linalg::svd(&s3row);
    let srow1 = sdec.v.col(1);
    let srow2 = sdec.v.col(2);
    let srows = [srow1, srow2, s3.clone()];
    let tcols = [t_col1, t_col2, t_col3];
    // L' = S L T entrywise over graded elements
    let mut lp: Vec<Vec<GradedElement<R>>> = vec![vec![a.zero(1); 3]; 3];
    for (i, srow) in srows.iter().enumerate() {
        for (k, tcol) in tcols.iter().enumerate() {
            let mut acc = a.zero(1);
            for ii in 0..3 {
                for kk in 0..3 {
                    acc = acc.add(&lmat.entries[ii][kk].scale(srow[ii] * tcol[kk]));
                }
            }
            lp[i][k] = acc;
        }
    }
    // row 3 is (0, u1', u2') by construction; column 1 of the last row ~ 0
    if lp[2][0].norm().to_f64() > 1e-5 {
        return Err(SheafError::Presentation(format!(
            "corner entry failed to vanish ({:e})",
            lp[2][0].norm().to_f64()
        )));
    }
    let v1p = lp[0][0].clone();
    let v2p = lp[1][0].clone();
    // independence of the new v pair
    let mut vm = CMat::zeros(3, 2);
    for r in 0..3 {
        vm[(r, 0)] = v1p.coeffs[r];
        vm[(r, 1)] = v2p.coeffs[r];
    }
    let vdec = linalg::svd(&vm);
    if vdec.sigma[1].to_f64() < 1e-6 * vdec.sigma[0].to_f64() {
        return Err(SheafError::DegenerateColumn);
    }
    // read off the new datum through the point ideal at tau^3 p9
    let (l1p, l2p) = sklyanin::point_ideal(a, &p9_up.point);
    let w1p = a
        .multiply(&lp[0][1], &l1p)?
        .add(&a.multiply(&lp[0][2], &l2p)?);
    let w2p = a
        .multiply(&lp[1][1], &l1p)?
        .add(&a.multiply(&lp[1][2], &l2p)?);
    let mut new_points = vec![p9_up];
    new_points.extend_from_slice(&params.base_points[1..8]);
    new_points.push(p1_down);
    let new_params = BlowupParams {
        algebra: params.algebra.clone(),
        scheme: params.scheme.clone(),
        base_points: new_points,
        samples: params.samples.clone(),
    };
    let raw = SheafDatum {
        v1: v1p,
        v2: v2p,
        w1: w1p,
        w2: w2p,
    };
    let new_datum = canonical_datum(&new_params, &raw)?;
    let new_base_vanishing = new_datum.verify_base_vanishing(&new_params)?;
    Ok((
        new_params,
        new_datum,
        HeckeDiagnostics {
            det_divisor_residual,
            new_base_vanishing,
        },
    ))
}

/// Fiber-case record: the cyclic presentation of the down-shift over the
/// exceptional fiber of p1.
#[derive(Clone, Debug)]
pub struct FiberRecord<R> {
    /// Degree-3 annihilator of the cyclic generator.
    pub annihilator: GradedElement<R>,
    /// Worst restriction residual at the expected nine support points.
    pub divisor_residual: f64,
    /// Residual of writing the central element through the v-ideal.
    pub express_residual: f64,
    pub ambiguity_dim: usize,
}

/// Down-shift at p1 for a datum on the fiber over p1: the kernel is cyclic
/// with a single degree-3 relation u1 w1 + u2 w2.
pub fn fiber_case<R: Real>(
    params: &BlowupParams<R>,
    datum: &SheafDatum<R>,
) -> SheafResult<FiberRecord<R>> {
    let a = &params.algebra;
    let e = &params.scheme.curve;
    let p1 = params.base_points[0];
    let x = datum.plane_point();
    let image_p1 = params.embed(&p1)?;
    if x.dist(&image_p1).to_f64() > 1e-6 {
        return Err(SheafError::NotFiberCase);
    }
    let (u1, u2) = sklyanin::syzygy_of_pair(a, &datum.v1, &datum.v2)?;
    let annihilator = a
        .multiply(&u1, &datum.w1)?
        .add(&a.multiply(&u2, &datum.w2)?);
    // support of the quotient: tau^-3 p1, p2..p9
    let p1_down = e.tau_pow(&p1, -3)?;
    let mut support = vec![p1_down];
    support.extend_from_slice(&params.base_points[1..]);
    let mut scale: f64 = 0.0;
    for q in &params.samples {
        scale = scale.max(params.restrict(&annihilator, q)?.abs().to_f64());
    }
    let mut divisor_residual: f64 = 0.0;
    for q in &support {
        let v = params.restrict(&annihilator, q)?.abs().to_f64();
        divisor_residual = divisor_residual.max(v / scale.max(1e-300));
    }
    // solvability certificate: the central element passes through the v-ideal
    let central = sklyanin::central_element(a)?;
    let through = sklyanin::express_central_through_point(a, &central.element, &datum.v1, &datum.v2)?;
    Ok(FiberRecord {
        annihilator,
        divisor_residual,
        express_residual: through.residual,
        ambiguity_dim: through.ambiguity_dim,
    })
}

/// The dynamics-track state corresponding to (params, x): divisor {x} and
/// parameters tau(p_i) on the chi = d + 1 chart (the two charts differ by
/// one translation step of the embedding).
pub fn dynamics_state_of<R: Real>(
    params: &BlowupParams<R>,
    x: &ProjPoint<R>,
) -> SheafResult<PainleveState<R>> {
    let e = &params.scheme.curve;
    let mut pts = Vec::with_capacity(9);
    for p in &params.base_points {
        pts.push(e.tau_pow(p, 1)?);
    }
    let state = PainleveState::new(
        e.clone(),
        3,
        4,
        PlaneDivisor::new(vec![*x]),
        pts,
    )?;
    Ok(state)
}

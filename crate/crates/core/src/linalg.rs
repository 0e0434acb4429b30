//! Small dense complex linear algebra, generic over the scalar.
//!
//! Everything downstream (curve interpolation, rank counts, kernels,
//! least-squares solves) goes through the one-sided Jacobi SVD here. Matrices
//! in this crate stay below ~100x100, so simplicity and accuracy win over
//! asymptotics.

use crate::complex::Cx;
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct CMat<R> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Cx<R>>,
}

impl<R: Real> CMat<R> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![Cx::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Cx::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Cx<R>>]) -> Self {
        let r = rows.len();
        let c = if r > 0 { rows[0].len() } else { 0 };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        CMat { rows: r, cols: c, data }
    }

    pub fn col(&self, j: usize) -> Vec<Cx<R>> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn conj_transpose(&self) -> Self {
        let mut t = CMat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].conj();
            }
        }
        t
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = CMat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.abs_sq() == R::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[Cx<R>]) -> Vec<Cx<R>> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut s = Cx::zero();
                for j in 0..self.cols {
                    s += self[(i, j)] * v[j];
                }
                s
            })
            .collect()
    }

    pub fn frobenius(&self) -> R {
        let mut s = R::zero();
        for z in &self.data {
            s = s + z.abs_sq();
        }
        s.sqrt()
    }

    /// Determinant by LU with partial pivoting.
    pub fn det(&self) -> Cx<R> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Cx::one();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[(k, k)].abs();
            for i in k + 1..n {
                let m = a[(i, k)].abs();
                if m > best {
                    best = m;
                    piv = i;
                }
            }
            if best == R::zero() {
                return Cx::zero();
            }
            if piv != k {
                for j in 0..n {
                    let t = a[(k, j)];
                    a[(k, j)] = a[(piv, j)];
                    a[(piv, j)] = t;
                }
                det = -det;
            }
            det *= a[(k, k)];
            let inv = a[(k, k)].recip();
            for i in k + 1..n {
                let f = a[(i, k)] * inv;
                if f.abs_sq() == R::zero() {
                    continue;
                }
                for j in k..n {
                    let t = a[(k, j)];
                    a[(i, j)] -= f * t;
                }
            }
        }
        det
    }

    /// Inverse of a small square matrix via Gauss-Jordan with partial pivoting.
    pub fn inverse(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut b = CMat::identity(n);
        for k in 0..n {
            let mut piv = k;
            let mut best = a[(k, k)].abs();
            for i in k + 1..n {
                let m = a[(i, k)].abs();
                if m > best {
                    best = m;
                    piv = i;
                }
            }
            if best == R::zero() {
                return None;
            }
            for j in 0..n {
                a.data.swap(k * n + j, piv * n + j);
                b.data.swap(k * n + j, piv * n + j);
            }
            let inv = a[(k, k)].recip();
            for j in 0..n {
                a[(k, j)] *= inv;
                b[(k, j)] *= inv;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f.abs_sq() == R::zero() {
                    continue;
                }
                for j in 0..n {
                    let ta = a[(k, j)];
                    let tb = b[(k, j)];
                    a[(i, j)] -= f * ta;
                    b[(i, j)] -= f * tb;
                }
            }
        }
        Some(b)
    }
}

impl<R: Real> std::ops::Index<(usize, usize)> for CMat<R> {
    type Output = Cx<R>;
    fn index(&self, (i, j): (usize, usize)) -> &Cx<R> {
        &self.data[i * self.cols + j]
    }
}
impl<R: Real> std::ops::IndexMut<(usize, usize)> for CMat<R> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Cx<R> {
        &mut self.data[i * self.cols + j]
    }
}

#[derive(Clone, Debug)]
pub struct Svd<R> {
    /// Left singular vectors, one column per kept singular value.
    pub u: CMat<R>,
    /// Singular values, descending.
    pub sigma: Vec<R>,
    /// Right singular vectors (full n x n, columns).
    pub v: CMat<R>,
}

impl<R: Real> Svd<R> {
    /// Columns of V whose singular values fall below `rel_tol * sigma_max`.
    pub fn kernel(&self, rel_tol: f64) -> Vec<Vec<Cx<R>>> {
        let smax = self.sigma.first().copied().unwrap_or(R::zero());
        let cut = smax * R::from_f64(rel_tol);
        let n = self.v.rows;
        let mut out = Vec::new();
        for j in 0..n {
            let s = self.sigma.get(j).copied().unwrap_or(R::zero());
            if s <= cut || smax == R::zero() {
                out.push(self.v.col(j));
            }
        }
        out
    }

    pub fn rank(&self, rel_tol: f64) -> usize {
        let smax = self.sigma.first().copied().unwrap_or(R::zero());
        if smax == R::zero() {
            return 0;
        }
        let cut = smax * R::from_f64(rel_tol);
        self.sigma.iter().filter(|&&s| s > cut).count()
    }
}

/// One-sided Jacobi SVD. Stable and simple; quadratic in size, which is fine
/// at the dimensions used here.
pub fn svd<R: Real>(a: &CMat<R>) -> Svd<R> {
    let n = a.cols;
    // Pad with zero rows when wide: column Grams are unchanged and V stays
    // full n x n, which kernel extraction relies on.
    let m = a.rows.max(n);
    let mut w = if a.rows < n {
        let mut p = CMat::zeros(m, n);
        for i in 0..a.rows {
            for j in 0..n {
                p[(i, j)] = a[(i, j)];
            }
        }
        p
    } else {
        a.clone()
    };
    let mut v = CMat::<R>::identity(n);
    let eps2 = R::eps() * R::eps();
    for _sweep in 0..60 {
        let mut off = R::zero();
        for i in 0..n {
            for j in i + 1..n {
                // Hermitian 2x2 Gram block of columns i, j.
                let mut aii = R::zero();
                let mut ajj = R::zero();
                let mut aij = Cx::<R>::zero();
                for r in 0..m {
                    let wi = w[(r, i)];
                    let wj = w[(r, j)];
                    aii = aii + wi.abs_sq();
                    ajj = ajj + wj.abs_sq();
                    aij += wi.conj() * wj;
                }
                let g = aij.abs();
                if g * g <= eps2 * aii * ajj {
                    continue;
                }
                off = off.max(g);
                // Diagonalize [[aii, aij],[conj(aij), ajj]]: phase + real rotation.
                let phase = aij.scale(R::one() / g); // e^{i phi}
                let tau = (ajj - aii) / (R::from_f64(2.0) * g);
                let t = {
                    let s = if tau < R::zero() { -R::one() } else { R::one() };
                    s / (tau.abs() + (R::one() + tau * tau).sqrt())
                };
                let c = R::one() / (R::one() + t * t).sqrt();
                let s = c * t;
                // col_i <- c*col_i - s*conj(phase)*col_j ; col_j <- s*phase*col_i + c*col_j
                let sp = phase.scale(s);
                let spc = phase.conj().scale(s);
                for r in 0..m {
                    let wi = w[(r, i)];
                    let wj = w[(r, j)];
                    w[(r, i)] = wi.scale(c) - spc * wj;
                    w[(r, j)] = sp * wi + wj.scale(c);
                }
                for r in 0..n {
                    let vi = v[(r, i)];
                    let vj = v[(r, j)];
                    v[(r, i)] = vi.scale(c) - spc * vj;
                    v[(r, j)] = sp * vi + vj.scale(c);
                }
            }
        }
        if off == R::zero() {
            break;
        }
        // Convergence: all off-diagonal Gram entries passed the eps test.
        let mut any = false;
        'outer: for i in 0..n {
            for j in i + 1..n {
                let mut aii = R::zero();
                let mut ajj = R::zero();
                let mut aij = Cx::<R>::zero();
                for r in 0..m {
                    aii = aii + w[(r, i)].abs_sq();
                    ajj = ajj + w[(r, j)].abs_sq();
                    aij += w[(r, i)].conj() * w[(r, j)];
                }
                if aij.abs_sq() > eps2 * aii * ajj {
                    any = true;
                    break 'outer;
                }
            }
        }
        if !any {
            break;
        }
    }
    // Extract singular values and sort descending.
    let mut sig: Vec<(R, usize)> = (0..n)
        .map(|j| {
            let mut s = R::zero();
            for r in 0..m {
                s = s + w[(r, j)].abs_sq();
            }
            (s.sqrt(), j)
        })
        .collect();
    sig.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(std::cmp::Ordering::Equal));
    let mut u = CMat::zeros(m, n);
    let mut vs = CMat::zeros(n, n);
    let out_rows = a.rows;
    let mut sigma = Vec::with_capacity(n);
    for (out_j, (s, j)) in sig.iter().enumerate() {
        sigma.push(*s);
        if *s > R::zero() {
            let inv = R::one() / *s;
            for r in 0..m {
                u[(r, out_j)] = w[(r, *j)].scale(inv);
            }
        }
        for r in 0..n {
            vs[(r, out_j)] = v[(r, *j)];
        }
    }
    if out_rows < m {
        let mut ut = CMat::zeros(out_rows, n);
        for i in 0..out_rows {
            for j in 0..n {
                ut[(i, j)] = u[(i, j)];
            }
        }
        u = ut;
    }
    Svd { u, sigma, v: vs }
}

/// Minimum-norm least-squares solve via the SVD, truncating singular values
/// below `rel_cut * sigma_max`.
pub fn lsq_solve<R: Real>(a: &CMat<R>, b: &[Cx<R>], rel_cut: f64) -> Vec<Cx<R>> {
    let dec = svd(a);
    let smax = dec.sigma.first().copied().unwrap_or(R::zero());
    let cut = smax * R::from_f64(rel_cut);
    let mut x = vec![Cx::zero(); a.cols];
    for (k, &s) in dec.sigma.iter().enumerate() {
        if s <= cut || s == R::zero() {
            continue;
        }
        // coefficient = (u_k^H b) / s
        let mut c = Cx::zero();
        for r in 0..a.rows {
            c += dec.u[(r, k)].conj() * b[r];
        }
        c = c.scale(R::one() / s);
        for r in 0..a.cols {
            x[r] += dec.v[(r, k)] * c;
        }
    }
    x
}

/// Deterministic phase normalization: scale so the largest-modulus entry is
/// real positive, then unit norm.
pub fn canonical_phase<R: Real>(v: &mut [Cx<R>]) {
    let mut best = R::zero();
    let mut idx = 0;
    for (i, z) in v.iter().enumerate() {
        let m = z.abs();
        if m > best {
            best = m;
            idx = i;
        }
    }
    if best == R::zero() {
        return;
    }
    let phase = v[idx].scale(R::one() / best); // unit modulus
    let rot = phase.conj();
    let mut norm = R::zero();
    for z in v.iter() {
        norm = norm + z.abs_sq();
    }
    let inv = R::one() / norm.sqrt();
    for z in v.iter_mut() {
        *z = (*z * rot).scale(inv);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::C64;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_mat(rng: &mut ChaCha8Rng, m: usize, n: usize) -> CMat<f64> {
        let mut a = CMat::zeros(m, n);
        for i in 0..m {
            for j in 0..n {
                a[(i, j)] = Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
        }
        a
    }

    #[test]
    fn svd_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(m, n) in &[(5, 3), (3, 5), (8, 8), (12, 4)] {
            let a = random_mat(&mut rng, m, n);
            let dec = svd(&a);
            // A v_k = sigma_k u_k
            for k in 0..n.min(m) {
                let av = a.matvec(&dec.v.col(k));
                for r in 0..m {
                    let diff = (av[r] - dec.u[(r, k)].scale(dec.sigma[k])).abs();
                    assert!(diff < 1e-12, "m={m} n={n} k={k} diff={diff}");
                }
            }
            // descending
            for k in 1..dec.sigma.len() {
                assert!(dec.sigma[k - 1] >= dec.sigma[k] - 1e-14);
            }
        }
    }

    #[test]
    fn svd_kernel_of_rank_deficient() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        // 6x4 matrix of rank 2
        let b = random_mat(&mut rng, 6, 2);
        let c = random_mat(&mut rng, 2, 4);
        let a = b.matmul(&c);
        let dec = svd(&a);
        assert_eq!(dec.rank(1e-10), 2);
        let ker = dec.kernel(1e-10);
        assert_eq!(ker.len(), 2);
        for v in ker {
            let av = a.matvec(&v);
            let r: f64 = av.iter().map(|z| z.abs()).fold(0.0, f64::max);
            assert!(r < 1e-12);
        }
    }

    #[test]
    fn lsq_recovers_exact_solution() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_mat(&mut rng, 9, 5);
        let x0: Vec<C64> = (0..5)
            .map(|_| Cx::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        let b = a.matvec(&x0);
        let x = lsq_solve(&a, &b, 1e-12);
        for k in 0..5 {
            assert!((x[k] - x0[k]).abs() < 1e-11);
        }
    }

    #[test]
    fn det_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let a = random_mat(&mut rng, 6, 6);
        let inv = a.inverse().unwrap();
        let id = a.matmul(&inv);
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((id[(i, j)] - Cx::from_f64(want, 0.0)).abs() < 1e-11);
            }
        }
        let d = a.det() * inv.det();
        assert!((d - Cx::from_f64(1.0, 0.0)).abs() < 1e-10);
    }
}

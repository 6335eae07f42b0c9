//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. Whenever a
//! matrix is flattened into a vector the flattening is row-major, and
//! Kronecker products put the left factor outermost, so
//! `vec(A X B) = kron(A, B^T) vec(X)`.

use nalgebra as na;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = na::DMatrix<C64>;
pub type CVector = na::DVector<C64>;
pub type RMatrix = na::DMatrix<f64>;

/// Default relative tolerance for numerical identities.
pub const DEFAULT_TOL: f64 = 1e-9;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Permutation `K` with `K vec(A) = vec(A^T)` for an `m x n` matrix `A`.
pub fn commutation_matrix(m: usize, n: usize) -> CMatrix {
    let mut k = CMatrix::zeros(m * n, m * n);
    for i in 0..m {
        for j in 0..n {
            k[(j * m + i, i * n + j)] = C64::new(1.0, 0.0);
        }
    }
    k
}

pub fn vec_row_major(m: &CMatrix) -> CVector {
    let (r, c) = m.shape();
    CVector::from_fn(r * c, |k, _| m[(k / c, k % c)])
}

pub fn unvec_row_major(v: &CVector, rows: usize, cols: usize) -> CMatrix {
    assert_eq!(v.len(), rows * cols, "unvec length");
    CMatrix::from_fn(rows, cols, |i, j| v[i * cols + j])
}

/// `a * b` through real products, which use the optimised real kernel.
pub fn matmul(a: &CMatrix, b: &CMatrix) -> CMatrix {
    assert_eq!(a.ncols(), b.nrows(), "inner dimension");
    if a.nrows() * a.ncols() * b.ncols() < 32 * 32 * 32 {
        return a * b;
    }
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

pub fn fro_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Largest singular value.
pub fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    singular_values(m).into_iter().fold(0.0, f64::max)
}

const JACOBI_SWEEPS: usize = 80;

fn col_pair(data: &mut [C64], rows: usize, p: usize, q: usize) -> (&mut [C64], &mut [C64]) {
    let (head, tail) = data.split_at_mut(q * rows);
    (&mut head[p * rows..(p + 1) * rows], &mut tail[..rows])
}

/// `x_p <- c x_p - s e x_q`, `x_q <- s x_p + c e x_q` on columns `p < q`.
fn rotate_columns(m: &mut CMatrix, p: usize, q: usize, cs: f64, sn: f64, phase: C64) {
    let rows = m.nrows();
    let (xp, xq) = col_pair(m.as_mut_slice(), rows, p, q);
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (x, y) = (*a, *b * phase);
        *a = x * cs - y * sn;
        *b = x * sn + y * cs;
    }
}

/// One-sided Jacobi: `(w, v)` with `a v = w`, `v` unitary and the columns
/// of `w` mutually orthogonal. Robust on degenerate and rank-deficient input.
fn jacobi(a: &CMatrix) -> (CMatrix, CMatrix) {
    let (rows, n) = a.shape();
    let mut w = a.clone();
    let mut v = CMatrix::identity(n, n);
    let tol = (rows.max(1) as f64).sqrt() * f64::EPSILON;
    // Columns below this squared norm are numerically zero and left alone.
    let negligible = (f64::EPSILON * fro_norm(a)).powi(2);
    for _ in 0..JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, g) = {
                    let data = w.as_slice();
                    let (cp, cq) = (&data[p * rows..(p + 1) * rows], &data[q * rows..(q + 1) * rows]);
                    let (mut alpha, mut beta, mut g) = (0.0, 0.0, C64::new(0.0, 0.0));
                    for (x, y) in cp.iter().zip(cq) {
                        alpha += x.norm_sqr();
                        beta += y.norm_sqr();
                        g += x.conj() * y;
                    }
                    (alpha, beta, g)
                };
                let gn = g.norm();
                if alpha.min(beta) <= negligible || gn <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gn);
                let t = if zeta >= 0.0 { 1.0 } else { -1.0 } / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let phase = g.conj() / gn;
                let phase = phase / phase.norm();
                rotate_columns(&mut w, p, q, cs, cs * t, phase);
                rotate_columns(&mut v, p, q, cs, cs * t, phase);
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

/// `(σ, v, w)` with `a v = w`, `σ_j = |w_j|`, `v` unitary.
fn svd_parts(a: &CMatrix) -> (Vec<f64>, CMatrix, CMatrix) {
    let (w, v) = jacobi(a);
    let sigma = (0..w.ncols()).map(|j| w.column(j).norm()).collect();
    (sigma, v, w)
}

/// Square factor with the same singular values and right singular vectors.
fn compress_rows(m: &CMatrix) -> CMatrix {
    if m.nrows() > m.ncols() {
        m.clone().qr().r()
    } else {
        m.clone()
    }
}

/// Singular values, in no particular order, padded with zeros to `min(rows, cols)`.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    let work = if m.nrows() < m.ncols() { m.adjoint() } else { m.clone() };
    svd_parts(&compress_rows(&work)).0
}

/// Numerical rank: singular values above `tol * max(1, σ_max)`.
pub fn rank(m: &CMatrix, tol: f64) -> usize {
    if m.is_empty() {
        return 0;
    }
    let sv = singular_values(m);
    let cutoff = tol * sv.iter().cloned().fold(0.0, f64::max).max(1.0);
    sv.iter().filter(|&&s| s > cutoff).count()
}

/// `||diff|| / max(1, scale)` using the Frobenius norm, which bounds the
/// operator norm from above.
pub fn rel_residual(diff: &CMatrix, scale: f64) -> f64 {
    fro_norm(diff) / scale.max(1.0)
}

pub fn hermitian_residual(m: &CMatrix) -> f64 {
    rel_residual(&(m - m.adjoint()), fro_norm(m))
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.is_square() && hermitian_residual(m) <= tol
}

pub fn unitary_residual(u: &CMatrix) -> f64 {
    if !u.is_square() {
        return f64::INFINITY;
    }
    let n = u.nrows();
    fro_norm(&(matmul(&u.adjoint(), u) - CMatrix::identity(n, n)))
}

pub fn is_unitary(u: &CMatrix, tol: f64) -> bool {
    unitary_residual(u) <= tol
}

/// Hermitian eigendecomposition with eigenvalues sorted ascending.
///
/// Jacobi on the positive definite shift `H + sI`, whose right singular
/// vectors are eigenvectors of `H`.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if n == 0 {
        return (vec![], CMatrix::zeros(0, 0));
    }
    let herm = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let shift = fro_norm(&herm) + 1.0;
    let (sigma, v, _) = svd_parts(&(&herm + CMatrix::identity(n, n) * C64::new(shift, 0.0)));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| sigma[a].total_cmp(&sigma[b]));
    let vecs = CMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    // Rayleigh quotients are accurate to the square of the vector error.
    let hv = &herm * &vecs;
    let vals = (0..n).map(|j| vecs.column(j).dotc(&hv.column(j)).re).collect();
    (vals, vecs)
}

/// Positive semidefinite up to `tol` relative to the spectral scale.
pub fn is_positive(m: &CMatrix, tol: f64) -> bool {
    if !is_hermitian(m, tol) {
        return false;
    }
    let (vals, _) = eigh(m);
    let scale = vals.iter().fold(1.0_f64, |a, v| a.max(v.abs()));
    vals.first().map_or(true, |&v| v >= -tol * scale)
}

/// Orthonormal basis of the null space of `m`. Singular values at or below
/// `tol * max(1, sigma_max)` count as zero.
pub fn kernel_basis(m: &CMatrix, tol: f64) -> Vec<CVector> {
    let cols = m.ncols();
    if cols == 0 {
        return vec![];
    }
    let (sigma, v, _) = svd_parts(&compress_rows(m));
    let cutoff = tol * sigma.iter().cloned().fold(0.0, f64::max).max(1.0);
    (0..cols).filter(|&k| sigma[k] <= cutoff).map(|k| v.column(k).into_owned()).collect()
}

/// Incrementally built orthonormal family (classical Gram-Schmidt with one
/// reorthogonalisation pass), stored as the leading columns of a matrix.
#[derive(Debug, Clone)]
pub struct OrthoBasis {
    ambient: usize,
    columns: CMatrix,
    len: usize,
    tol: f64,
}

impl OrthoBasis {
    pub fn new(ambient: usize, tol: f64) -> Self {
        Self { ambient, columns: CMatrix::zeros(ambient, ambient), len: 0, tol }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    fn project_out(&self, v: &mut CVector) {
        if self.len == 0 {
            return;
        }
        let q = self.columns.columns(0, self.len);
        for _ in 0..2 {
            let coef = q.ad_mul(&*v);
            v.gemv(C64::new(-1.0, 0.0), &q, &coef, C64::new(1.0, 0.0));
        }
    }

    /// Adds the component of `v` orthogonal to the current span, if it is
    /// larger than `tol * max(1, |v|)`. Returns whether the span grew.
    pub fn push(&mut self, v: &CVector) -> bool {
        assert_eq!(v.len(), self.ambient, "vector length");
        if self.len == self.ambient {
            return false;
        }
        let scale = v.norm().max(1.0);
        let mut w = v.clone();
        self.project_out(&mut w);
        let n = w.norm();
        if n <= self.tol * scale {
            return false;
        }
        self.columns.set_column(self.len, &(w / C64::new(n, 0.0)));
        self.len += 1;
        true
    }

    /// Pushes many vectors, projecting them in chunks with matrix products.
    /// Returns the newly added orthonormal vectors.
    pub fn push_many(&mut self, vs: &[CVector]) -> Vec<CVector> {
        const CHUNK: usize = 32;
        let mut added = Vec::new();
        for chunk in vs.chunks(CHUNK) {
            if self.len == self.ambient {
                break;
            }
            let mut y = CMatrix::from_columns(chunk);
            let scales: Vec<f64> = chunk.iter().map(|v| v.norm().max(1.0)).collect();
            if self.len > 0 {
                let q = self.columns.columns(0, self.len).into_owned();
                let qh = q.adjoint();
                for _ in 0..2 {
                    y -= matmul(&q, &matmul(&qh, &y));
                }
            }
            let start = self.len;
            for (j, scale) in scales.into_iter().enumerate() {
                if self.len == self.ambient {
                    break;
                }
                let mut w = y.column(j).into_owned();
                for _ in 0..2 {
                    for k in start..self.len {
                        let q = self.columns.column(k);
                        let coef = q.dotc(&w);
                        w.axpy(-coef, &q, C64::new(1.0, 0.0));
                    }
                }
                let n = w.norm();
                if n <= self.tol * scale {
                    continue;
                }
                let unit = w / C64::new(n, 0.0);
                self.columns.set_column(self.len, &unit);
                self.len += 1;
                added.push(unit);
            }
        }
        added
    }

    pub fn into_subspace(self) -> Subspace {
        if self.len == 0 {
            return Subspace::zero(self.ambient);
        }
        Subspace { ambient: self.ambient, basis: self.columns.columns(0, self.len).into_owned() }
    }
}

/// A linear subspace of `C^n` stored by an orthonormal basis.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: CMatrix,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Self { ambient, basis: CMatrix::zeros(ambient, 0) }
    }

    pub fn full(ambient: usize) -> Self {
        Self { ambient, basis: CMatrix::identity(ambient, ambient) }
    }

    /// Span of arbitrary vectors; rank decided with relative tolerance `tol`.
    pub fn span(ambient: usize, vectors: &[CVector], tol: f64) -> Self {
        let mut ob = OrthoBasis::new(ambient, tol);
        ob.push_many(vectors);
        ob.into_subspace()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Orthonormal basis as matrix columns.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    pub fn basis_vectors(&self) -> Vec<CVector> {
        (0..self.dim()).map(|k| self.basis.column(k).into_owned()).collect()
    }

    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    pub fn project(&self, v: &CVector) -> CVector {
        &self.basis * (self.basis.adjoint() * v)
    }

    pub fn contains(&self, v: &CVector, tol: f64) -> bool {
        (v - self.project(v)).norm() <= tol * v.norm().max(1.0)
    }

    /// Indices of the vectors that are not in the subspace.
    pub fn outside(&self, vs: &[CVector], tol: f64) -> Vec<usize> {
        if vs.is_empty() {
            return Vec::new();
        }
        let m = CMatrix::from_columns(vs);
        let r = &m - matmul(&self.basis, &matmul(&self.basis.adjoint(), &m));
        (0..vs.len()).filter(|&k| r.column(k).norm() > tol * vs[k].norm().max(1.0)).collect()
    }

    /// Frobenius distance between the orthogonal projectors.
    pub fn distance(&self, other: &Subspace) -> f64 {
        assert_eq!(self.ambient, other.ambient, "ambient dimension");
        // ||P - Q||² = ||(1 - Q) P||² + ||(1 - P) Q||², free of cancellation.
        let overlap = matmul(&other.basis.adjoint(), &self.basis);
        let a = &self.basis - matmul(&other.basis, &overlap);
        let b = &other.basis - matmul(&self.basis, &overlap.adjoint());
        (a.norm_squared() + b.norm_squared()).sqrt()
    }

    pub fn same_as(&self, other: &Subspace, tol: f64) -> bool {
        self.ambient == other.ambient && self.dim() == other.dim() && self.distance(other) <= tol
    }
}

/// Smallest subspace containing `seeds` and closed under the maps
/// `apply(k, .)` for `k < n_maps`. Breadth-first over newly added vectors.
pub fn span_closure<F>(ambient: usize, seeds: &[CVector], n_maps: usize, apply: F, tol: f64) -> Subspace
where
    F: Fn(usize, &CVector) -> CVector,
{
    let mut ob = OrthoBasis::new(ambient, tol);
    let mut frontier = ob.push_many(seeds);
    while !frontier.is_empty() && ob.len() < ambient {
        let images: Vec<CVector> = frontier.iter().flat_map(|x| (0..n_maps).map(|k| apply(k, x))).collect();
        frontier = ob.push_many(&images);
    }
    ob.into_subspace()
}

/// Unital *-algebra generated by square matrices, as a subspace of the
/// row-major vectorisation of `M_n`.
pub fn algebra_closure(gens: &[CMatrix], tol: f64) -> Result<Subspace> {
    let n = match gens.first() {
        Some(g) => g.nrows(),
        None => return Err(Error::Invalid("algebra_closure needs at least one generator".into())),
    };
    if gens.iter().any(|g| g.nrows() != n || g.ncols() != n) {
        return Err(Error::Dimension("generators must be square of equal size".into()));
    }
    let mut all: Vec<CMatrix> = gens.to_vec();
    all.extend(gens.iter().map(|g| g.adjoint()));
    let seed = vec_row_major(&CMatrix::identity(n, n));
    Ok(span_closure(
        n * n,
        &[seed],
        all.len(),
        |k, x| vec_row_major(&(&all[k] * unvec_row_major(x, n, n))),
        tol,
    ))
}

/// Cyclic shift `S e_k = e_{k+1}` and clock `D = diag(w^k)` with `w` a
/// primitive n-th root of unity. Together they generate `M_n`, and both
/// have finite order, so their adjoints are polynomials in them.
pub fn shift_and_clock(n: usize) -> (CMatrix, CMatrix) {
    let mut s = CMatrix::zeros(n, n);
    let mut d = CMatrix::zeros(n, n);
    for k in 0..n {
        s[((k + 1) % n, k)] = C64::new(1.0, 0.0);
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
        d[(k, k)] = if k == 0 { C64::new(1.0, 0.0) } else { C64::from_polar(1.0, theta) };
    }
    (s, d)
}

pub fn random_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let a = random_matrix(n, n, rng);
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Haar-like random unitary from the QR factorisation of a Ginibre matrix.
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let qr = random_matrix(n, n, rng).qr();
    let q = qr.q();
    let r = qr.r();
    let mut u = q.clone();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            u[(i, j)] = q[(i, j)] * phase;
        }
    }
    u
}

/// Block-diagonal direct sum.
pub fn direct_sum(blocks: &[CMatrix]) -> CMatrix {
    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = CMatrix::zeros(rows, cols);
    let (mut r, mut c) = (0, 0);
    for b in blocks {
        out.view_mut((r, c), b.shape()).copy_from(b);
        r += b.nrows();
        c += b.ncols();
    }
    out
}

/// Moore-Penrose pseudo-inverse via SVD, with relative cutoff `tol`.
pub fn pseudo_inverse(m: &CMatrix, tol: f64) -> CMatrix {
    let (r, cdim) = m.shape();
    if r == 0 || cdim == 0 {
        return CMatrix::zeros(cdim, r);
    }
    if r < cdim {
        return pseudo_inverse(&m.adjoint(), tol).adjoint();
    }
    // m = QR with Q an isometry, so m^+ = R^+ Q^*.
    let qr = m.clone().qr();
    let (q, rr) = (qr.q(), qr.r());
    let (sigma, v, w) = svd_parts(&rr);
    let cutoff = tol * sigma.iter().cloned().fold(0.0, f64::max).max(1.0);
    let mut out = CMatrix::zeros(cdim, cdim);
    for (k, &s) in sigma.iter().enumerate() {
        if s > cutoff {
            out += v.column(k) * w.column(k).adjoint() * C64::new(1.0 / (s * s), 0.0);
        }
    }
    out * q.adjoint()
}

/// Realification `A + iB -> [[A, -B], [B, A]]`.
pub fn realify(m: &CMatrix) -> RMatrix {
    let (r, cdim) = m.shape();
    RMatrix::from_fn(2 * r, 2 * cdim, |i, j| {
        let z = m[(i % r, j % cdim)];
        match (i < r, j < cdim) {
            (true, true) | (false, false) => z.re,
            (true, false) => -z.im,
            (false, true) => z.im,
        }
    })
}

/// Inverse of [`realify`]; fails if the real matrix is not complex-linear.
pub fn complexify(m: &RMatrix, tol: f64) -> Result<CMatrix> {
    let (r2, c2) = m.shape();
    if r2 % 2 != 0 || c2 % 2 != 0 {
        return Err(Error::Dimension("realified matrix must have even dimensions".into()));
    }
    let (r, cdim) = (r2 / 2, c2 / 2);
    let mut defect = 0.0_f64;
    let out = CMatrix::from_fn(r, cdim, |i, j| {
        let a = m[(i, j)];
        let b = m[(i + r, j)];
        defect = defect.max((m[(i + r, j + cdim)] - a).abs()).max((m[(i, j + cdim)] + b).abs());
        C64::new(a, b)
    });
    if defect > tol * m.amax().max(1.0) {
        return Err(Error::Invalid(format!("real matrix is not complex-linear (defect {defect:.3e})")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eigh_resolves_degenerate_spectra() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = random_unitary(11, &mut rng);
        let d = CMatrix::from_fn(11, 11, |i, j| if i != j { c(0., 0.) } else if i < 2 { c(-0.35, 0.) } else { c(0.1, 0.) });
        let h = &u * d * u.adjoint();
        let (vals, vecs) = eigh(&h);
        let lam = CMatrix::from_fn(11, 11, |i, j| if i == j { c(vals[i], 0.) } else { c(0., 0.) });
        assert!(fro_norm(&(&h * &vecs - &vecs * lam)) < 1e-12);
        assert!(unitary_residual(&vecs) < 1e-12);
        assert!((vals[1] + 0.35).abs() < 1e-12 && (vals[2] - 0.1).abs() < 1e-12);
    }

    fn pauli() -> (CMatrix, CMatrix) {
        let x = CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]);
        let z = CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)]);
        (x, z)
    }

    #[test]
    fn kron_vec_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(2, 3, &mut rng);
        let x = random_matrix(3, 4, &mut rng);
        let b = random_matrix(4, 2, &mut rng);
        let lhs = vec_row_major(&(&a * &x * &b));
        let rhs = kron(&a, &b.transpose()) * vec_row_major(&x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn commutation_matrix_transposes() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_matrix(2, 3, &mut rng);
        let k = commutation_matrix(2, 3);
        assert!((k * vec_row_major(&a) - vec_row_major(&a.transpose())).norm() < 1e-14);
    }

    #[test]
    fn kernel_of_rank_one() {
        let m = CMatrix::from_row_slice(1, 3, &[c(1., 0.), c(1., 0.), c(0., 0.)]);
        let k = kernel_basis(&m, DEFAULT_TOL);
        assert_eq!(k.len(), 2);
        for v in &k {
            assert!((&m * v).norm() < 1e-12);
        }
    }

    #[test]
    fn pauli_closure_is_full() {
        let (x, z) = pauli();
        assert_eq!(algebra_closure(&[x, z.clone()], DEFAULT_TOL).unwrap().dim(), 4);
        assert_eq!(algebra_closure(&[z], DEFAULT_TOL).unwrap().dim(), 2);
    }

    #[test]
    fn clock_shift_generate() {
        for n in 1..6 {
            let (s, d) = shift_and_clock(n);
            assert_eq!(algebra_closure(&[s, d], DEFAULT_TOL).unwrap().dim(), n * n);
        }
    }

    #[test]
    fn realify_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = random_matrix(3, 2, &mut rng);
        assert!(fro_norm(&(complexify(&realify(&m), 1e-12).unwrap() - m)) < 1e-15);
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        assert!(is_unitary(&random_unitary(5, &mut rng), 1e-12));
    }

    #[test]
    fn subspace_distance_detects_difference() {
        let e = |k: usize| CVector::from_fn(3, |i, _| if i == k { c(1., 0.) } else { c(0., 0.) });
        let a = Subspace::span(3, &[e(0), e(1)], DEFAULT_TOL);
        let b = Subspace::span(3, &[e(1), e(0) + e(1)], DEFAULT_TOL);
        let d = Subspace::span(3, &[e(0), e(2)], DEFAULT_TOL);
        assert!(a.distance(&b) < 1e-12);
        assert!((a.distance(&d) - 2f64.sqrt()).abs() < 1e-12);
    }
}

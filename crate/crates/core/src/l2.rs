//! Standard form `L²(A)` of a finite-dimensional tracial algebra.
//!
//! Vectors are written in the orthonormal basis `e^{(i)}_{rs} Ω / sqrt(w_i)`,
//! so `aΩ` has coordinates `sqrt(w_i) (a_i)_{rs}` in row-major order and the
//! inner product is the standard one, conjugate-linear in the first slot:
//! `⟨aΩ, bΩ⟩ = tr(a^* b)`.

use crate::error::{Error, Result};
use crate::numkit::{self, c, CMatrix, CVector, RMatrix, DEFAULT_TOL};
use crate::vna::{AlgElement, AlgebraShape, Hom};

#[derive(Debug, Clone)]
pub struct StandardForm {
    shape: AlgebraShape,
    j_real: RMatrix,
}

/// `λ(a) M` for the left regular action, without forming `λ(a)`. Each
/// block of the columns is gathered into one `n x (n * cols)` matrix so the
/// product is a single matrix multiplication.
pub fn left_mul_columns(shape: &AlgebraShape, a: &AlgElement, m: &CMatrix) -> CMatrix {
    assert_eq!(m.nrows(), shape.dim(), "column length must equal the algebra dimension");
    let cols = m.ncols();
    let mut out = CMatrix::zeros(m.nrows(), cols);
    for (i, &n) in shape.blocks().iter().enumerate() {
        let off = shape.vec_offset(i);
        // x[(t, s * cols + col)] = m[(off + t * n + s, col)]
        let x = CMatrix::from_fn(n, n * cols, |t, k| m[(off + t * n + k / cols, k % cols)]);
        let y = numkit::matmul(a.block(i), &x);
        for r in 0..n {
            for k in 0..n * cols {
                out[(off + r * n + k / cols, k % cols)] = y[(r, k)];
            }
        }
    }
    out
}

/// `ρ(b) M` where `ρ(b) ξ = ξ b`.
pub fn right_mul_columns(shape: &AlgebraShape, b: &AlgElement, m: &CMatrix) -> CMatrix {
    assert_eq!(m.nrows(), shape.dim(), "column length must equal the algebra dimension");
    let cols = m.ncols();
    let mut out = CMatrix::zeros(m.nrows(), cols);
    for (i, &n) in shape.blocks().iter().enumerate() {
        let off = shape.vec_offset(i);
        // x[(r * cols + col, t)] = m[(off + r * n + t, col)]
        let x = CMatrix::from_fn(n * cols, n, |k, t| m[(off + (k / cols) * n + t, k % cols)]);
        let y = numkit::matmul(&x, b.block(i));
        for k in 0..n * cols {
            for s in 0..n {
                out[(off + (k / cols) * n + s, k % cols)] = y[(k, s)];
            }
        }
    }
    out
}

impl StandardForm {
    pub fn new(shape: &AlgebraShape) -> Self {
        let d = shape.dim();
        // J(ξ) = ξ^*: coordinates (i, r, s) -> conj of (i, s, r).
        let mut swap = RMatrix::zeros(d, d);
        for (i, &n) in shape.blocks().iter().enumerate() {
            let off = shape.vec_offset(i);
            for r in 0..n {
                for s in 0..n {
                    swap[(off + r * n + s, off + s * n + r)] = 1.0;
                }
            }
        }
        let mut j_real = RMatrix::zeros(2 * d, 2 * d);
        j_real.view_mut((0, 0), (d, d)).copy_from(&swap);
        j_real.view_mut((d, d), (d, d)).copy_from(&(-&swap));
        Self { shape: shape.clone(), j_real }
    }

    pub fn shape(&self) -> &AlgebraShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Coordinates of `aΩ`.
    pub fn vector_of(&self, a: &AlgElement) -> CVector {
        let mut v = a.to_vector();
        for (i, &n) in self.shape.blocks().iter().enumerate() {
            let off = self.shape.vec_offset(i);
            let s = self.shape.weights()[i].sqrt();
            for k in 0..n * n {
                v[off + k] *= s;
            }
        }
        v
    }

    /// Inverse of [`Self::vector_of`].
    pub fn element_of(&self, v: &CVector) -> Result<AlgElement> {
        let mut w = v.clone();
        for (i, &n) in self.shape.blocks().iter().enumerate() {
            let off = self.shape.vec_offset(i);
            let s = self.shape.weights()[i].sqrt();
            for k in 0..n * n {
                w[off + k] /= s;
            }
        }
        AlgElement::from_vector(&self.shape, &w)
    }

    pub fn omega(&self) -> CVector {
        self.vector_of(&AlgElement::identity(&self.shape))
    }

    pub fn inner(&self, xi: &CVector, eta: &CVector) -> numkit::C64 {
        xi.dotc(eta)
    }

    pub fn left(&self, a: &AlgElement) -> CMatrix {
        let blocks: Vec<CMatrix> = self
            .shape
            .blocks()
            .iter()
            .enumerate()
            .map(|(i, &n)| numkit::kron(a.block(i), &CMatrix::identity(n, n)))
            .collect();
        numkit::direct_sum(&blocks)
    }

    /// `ρ(b): ξ -> ξ b`, computed directly.
    pub fn right(&self, b: &AlgElement) -> CMatrix {
        let blocks: Vec<CMatrix> = self
            .shape
            .blocks()
            .iter()
            .enumerate()
            .map(|(i, &n)| numkit::kron(&CMatrix::identity(n, n), &b.block(i).transpose()))
            .collect();
        numkit::direct_sum(&blocks)
    }

    /// The modular conjugation as a real-linear matrix on `(Re ξ, Im ξ)`.
    pub fn j_real(&self) -> &RMatrix {
        &self.j_real
    }

    pub fn apply_j(&self, v: &CVector) -> CVector {
        let d = self.dim();
        let re = RMatrix::from_fn(2 * d, 1, |k, _| if k < d { v[k].re } else { v[k - d].im });
        let out = &self.j_real * re;
        CVector::from_fn(d, |k, _| c(out[(k, 0)], out[(k + d, 0)]))
    }

    /// `J λ(b^*) J`, evaluated through the realification.
    pub fn right_via_j(&self, b: &AlgElement) -> Result<CMatrix> {
        let l = numkit::realify(&self.left(&b.adjoint()));
        numkit::complexify(&(&self.j_real * l * &self.j_real), DEFAULT_TOL)
    }

    /// Whether `ξ = aΩ` with `a ≥ 0`.
    pub fn in_positive_cone(&self, xi: &CVector, tol: f64) -> bool {
        match self.element_of(xi) {
            Ok(a) => a.blocks().iter().all(|b| numkit::is_positive(b, tol)),
            Err(_) => false,
        }
    }
}

/// Matrix of `L²(φ): aΩ -> φ(a)Ω` in the orthonormal bases of both sides.
///
/// This is an isometry exactly when `φ` is trace-preserving; the matrix is
/// returned regardless and [`check_l2_isometry`] measures the defect.
pub fn l2_map(phi: &Hom) -> CMatrix {
    let src = phi.source();
    let tgt = phi.target();
    let mut m = CMatrix::zeros(tgt.dim(), src.dim());
    for (col, (i, r, s)) in src.matrix_units().into_iter().enumerate() {
        let img = phi.apply_matrix_unit(i, r, s);
        let scale = 1.0 / src.weights()[i].sqrt();
        for (j, &n) in tgt.blocks().iter().enumerate() {
            let off = tgt.vec_offset(j);
            let wj = tgt.weights()[j].sqrt() * scale;
            let b = img.block(j);
            for a in 0..n {
                for bcol in 0..n {
                    m[(off + a * n + bcol, col)] = b[(a, bcol)] * wj;
                }
            }
        }
    }
    m
}

/// `|| L²(φ)^* L²(φ) - 1 ||`.
pub fn check_l2_isometry(phi: &Hom) -> f64 {
    let t = l2_map(phi);
    numkit::fro_norm(&(numkit::matmul(&t.adjoint(), &t) - CMatrix::identity(t.ncols(), t.ncols())))
}

/// Verifies that `L²(φ)` is an isometry, i.e. that `φ` preserves the traces.
pub fn l2_isometry(phi: &Hom, tol: f64) -> Result<CMatrix> {
    let res = check_l2_isometry(phi);
    if res > tol {
        return Err(Error::NotTracePreserving { residual: res });
    }
    Ok(l2_map(phi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::fro_norm;

    #[test]
    fn omega_has_unit_norm() {
        for blocks in [vec![2], vec![2, 1], vec![3, 1, 1]] {
            let sf = StandardForm::new(&AlgebraShape::new(blocks).unwrap());
            assert!((sf.omega().norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn matrix_unit_norm_in_m2() {
        let s = AlgebraShape::matrix(2).unwrap();
        let sf = StandardForm::new(&s);
        let v = sf.vector_of(&s.matrix_unit(0, 0, 0));
        assert!((sf.inner(&v, &v).re - 0.5).abs() < 1e-15);
    }

    #[test]
    fn j_is_an_involution() {
        let s = AlgebraShape::new(vec![2, 1]).unwrap();
        let sf = StandardForm::new(&s);
        let j2 = sf.j_real() * sf.j_real();
        assert!((j2 - RMatrix::identity(2 * s.dim(), 2 * s.dim())).amax() < 1e-15);
    }

    #[test]
    fn column_actions_match_dense() {
        let s = AlgebraShape::new(vec![2, 1]).unwrap();
        let sf = StandardForm::new(&s);
        let a = s.matrix_unit(0, 0, 1).add(&s.matrix_unit(1, 0, 0));
        let m = CMatrix::identity(s.dim(), s.dim());
        assert!(fro_norm(&(left_mul_columns(&s, &a, &m) - sf.left(&a))) < 1e-15);
        assert!(fro_norm(&(right_mul_columns(&s, &a, &m) - sf.right(&a))) < 1e-15);
    }
}

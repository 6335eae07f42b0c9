//! Correspondences (Hilbert bimodules) between finite tracial algebras,
//! intertwiner cells, and Connes fusion.
//!
//! The right action of `B` is stored through the transpose identification
//! `B^op ≅ B`: a correspondence carries a homomorphism `π` of `B` and the
//! right action is `ξ · b = π(b^T) ξ`. Both actions are therefore ordinary
//! representations, which keeps restriction and fusion uniform.
//!
//! Fusion `H ⊠_B K` is the quotient of `H ⊗ K` by the null space of the
//! form `⟨ξ⊗η, ξ'⊗η'⟩ = ⟨η, ⟨ξ|ξ'⟩_B η'⟩`, where `⟨ξ|ξ'⟩_B` is the
//! `B`-valued inner product of bounded vectors. In the orthonormal basis of
//! `L²(B)` this Gram matrix is `Σ_m ρ_H(b_m)^* ⊗ λ_K(b_m)` with
//! `b_m = e_rs / sqrt(w_i)`. The normalisation makes the right unitor
//! `ξ ⊗ bΩ -> ξ b` unitary.

use rand::Rng;

use crate::error::{Error, Result};
use crate::l2::{self, left_mul_columns, right_mul_columns};
use crate::numkit::{self, c, fro_norm, kron, CMatrix, Subspace, DEFAULT_TOL};
use crate::vna::{AlgElement, AlgebraShape, Hom};

/// A representation of a finite algebra on `C^dim`.
#[derive(Debug, Clone)]
pub enum Action {
    /// Left multiplication on `L²(A)`.
    StandardLeft(AlgebraShape),
    /// `y -> (ξ -> ξ y^T)` on `L²(A)`; a homomorphism in `y`.
    StandardRight(AlgebraShape),
    /// `x -> inner(φ(x))`.
    Restricted { along: Hom, inner: Box<Action> },
    /// Images of the matrix units of `shape`, in [`AlgebraShape::matrix_units`] order.
    Explicit { shape: AlgebraShape, units: Vec<CMatrix> },
}

impl Action {
    pub fn algebra(&self) -> &AlgebraShape {
        match self {
            Action::StandardLeft(s) | Action::StandardRight(s) => s,
            Action::Restricted { along, .. } => along.source(),
            Action::Explicit { shape, .. } => shape,
        }
    }

    pub fn space_dim(&self) -> usize {
        match self {
            Action::StandardLeft(s) | Action::StandardRight(s) => s.dim(),
            Action::Restricted { inner, .. } => inner.space_dim(),
            Action::Explicit { units, .. } => units.first().map_or(0, |u| u.nrows()),
        }
    }

    /// `action(x) M`.
    pub fn apply_columns(&self, x: &AlgElement, m: &CMatrix) -> CMatrix {
        match self {
            Action::StandardLeft(s) => left_mul_columns(s, x, m),
            Action::StandardRight(s) => right_mul_columns(s, &x.transpose(), m),
            Action::Restricted { along, inner } => inner.apply_columns(&along.apply(x), m),
            Action::Explicit { .. } => self.matrix(x) * m,
        }
    }

    pub fn matrix(&self, x: &AlgElement) -> CMatrix {
        match self {
            Action::Explicit { shape, units } => {
                let d = self.space_dim();
                let mut out = CMatrix::zeros(d, d);
                for (k, (i, r, s)) in shape.matrix_units().into_iter().enumerate() {
                    let z = x.block(i)[(r, s)];
                    if z != c(0.0, 0.0) {
                        out += &units[k] * z;
                    }
                }
                out
            }
            _ => {
                let d = self.space_dim();
                self.apply_columns(x, &CMatrix::identity(d, d))
            }
        }
    }

    /// `M action(x)`, using that the action is a *-representation.
    pub fn right_apply(&self, m: &CMatrix, x: &AlgElement) -> CMatrix {
        self.apply_columns(&x.adjoint(), &m.adjoint()).adjoint()
    }

    pub fn to_explicit(&self) -> Action {
        let shape = self.algebra().clone();
        let units = shape.basis().iter().map(|e| self.matrix(e)).collect();
        Action::Explicit { shape, units }
    }

    /// Largest violation of the *-representation laws on matrix units.
    pub fn representation_defect(&self) -> f64 {
        let shape = self.algebra();
        let d = self.space_dim();
        let units = shape.matrix_units();
        let mats: Vec<CMatrix> = shape.basis().iter().map(|e| self.matrix(e)).collect();
        let mut worst = fro_norm(&(self.matrix(&AlgElement::identity(shape)) - CMatrix::identity(d, d)));
        for (a, &(i, r, s)) in units.iter().enumerate() {
            let adj = units.iter().position(|&u| u == (i, s, r)).expect("adjoint unit");
            worst = worst.max(fro_norm(&(mats[a].adjoint() - &mats[adj])));
            for (b, &(i2, r2, s2)) in units.iter().enumerate() {
                let prod = &mats[a] * &mats[b];
                let expected = if i == i2 && s == r2 {
                    let k = units.iter().position(|&u| u == (i, r, s2)).expect("product unit");
                    mats[k].clone()
                } else {
                    CMatrix::zeros(d, d)
                };
                worst = worst.max(fro_norm(&(prod - expected)));
            }
        }
        worst
    }
}

/// A correspondence `A ⇝ B`: commuting left `A` and right `B` actions.
#[derive(Debug, Clone)]
pub struct Correspondence {
    left: Action,
    right: Action,
}

impl Correspondence {
    /// Validates dimensions, the representation laws (for explicit actions)
    /// and commutation of the two actions on generators.
    pub fn new(left: Action, right: Action, tol: f64) -> Result<Self> {
        if left.space_dim() != right.space_dim() {
            return Err(Error::Dimension(format!(
                "left action on dimension {} but right action on dimension {}",
                left.space_dim(),
                right.space_dim()
            )));
        }
        for act in [&left, &right] {
            if matches!(act, Action::Explicit { .. }) {
                let defect = act.representation_defect();
                if defect > tol {
                    return Err(Error::InvalidRepresentation(format!("representation defect {defect:.3e}")));
                }
            }
        }
        let corr = Self { left, right };
        let comm = corr.commutation_defect();
        if comm > tol {
            return Err(Error::InvalidRepresentation(format!("left and right actions fail to commute by {comm:.3e}")));
        }
        Ok(corr)
    }

    fn commutation_defect(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0_f64;
        for a in self.left_alg().generators() {
            let la = self.left.matrix(&a);
            for b in self.right_alg().generators() {
                let rb = self.right.apply_columns(&b, &CMatrix::identity(d, d));
                worst = worst.max(fro_norm(&(&la * &rb - &rb * &la)));
            }
        }
        worst
    }

    /// `L²(A)` as an `A ⇝ A` correspondence.
    pub fn identity(shape: &AlgebraShape) -> Self {
        Self { left: Action::StandardLeft(shape.clone()), right: Action::StandardRight(shape.clone()) }
    }

    pub fn left_alg(&self) -> &AlgebraShape {
        self.left.algebra()
    }

    pub fn right_alg(&self) -> &AlgebraShape {
        self.right.algebra()
    }

    pub fn dim(&self) -> usize {
        self.left.space_dim()
    }

    pub fn left_action(&self) -> &Action {
        &self.left
    }

    pub fn right_action(&self) -> &Action {
        &self.right
    }

    pub fn left_matrix(&self, a: &AlgElement) -> CMatrix {
        self.left.matrix(a)
    }

    /// Matrix of `ξ -> ξ · b`.
    pub fn right_matrix(&self, b: &AlgElement) -> CMatrix {
        self.right.matrix(&b.transpose())
    }

    /// Pulls the left action back along `φ: A' -> A`.
    pub fn restrict_left(&self, phi: &Hom) -> Result<Self> {
        if !phi.target().approx_eq(self.left_alg(), DEFAULT_TOL) {
            return Err(Error::BoundaryMismatch("hom target is not the left algebra".into()));
        }
        Ok(Self {
            left: Action::Restricted { along: phi.clone(), inner: Box::new(self.left.clone()) },
            right: self.right.clone(),
        })
    }

    /// Pulls the right action back along `φ: B' -> B`. Transposition commutes
    /// with `φ` only up to the conjugator, so the restricted right action is
    /// stored explicitly.
    pub fn restrict_right(&self, phi: &Hom) -> Result<Self> {
        if !phi.target().approx_eq(self.right_alg(), DEFAULT_TOL) {
            return Err(Error::BoundaryMismatch("hom target is not the right algebra".into()));
        }
        let shape = phi.source().clone();
        let units = shape
            .basis()
            .iter()
            .map(|e| self.right_matrix(&phi.apply(&e.transpose())))
            .collect();
        Ok(Self { left: self.left.clone(), right: Action::Explicit { shape, units } })
    }

    pub fn direct_sum(&self, other: &Self) -> Result<Self> {
        if !self.left_alg().approx_eq(other.left_alg(), DEFAULT_TOL)
            || !self.right_alg().approx_eq(other.right_alg(), DEFAULT_TOL)
        {
            return Err(Error::BoundaryMismatch("direct sum needs equal algebras".into()));
        }
        let sum = |x: &Action, y: &Action| {
            let shape = x.algebra().clone();
            let units = shape.basis().iter().map(|e| numkit::direct_sum(&[x.matrix(e), y.matrix(e)])).collect();
            Action::Explicit { shape, units }
        };
        Ok(Self { left: sum(&self.left, &other.left), right: sum(&self.right, &other.right) })
    }

    /// Same algebras and dimension, actions agreeing on generators.
    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        if self.dim() != other.dim()
            || !self.left_alg().approx_eq(other.left_alg(), tol)
            || !self.right_alg().approx_eq(other.right_alg(), tol)
        {
            return false;
        }
        let lg = self.left_alg().generators();
        let rg = self.right_alg().generators();
        lg.iter().all(|g| fro_norm(&(self.left.matrix(g) - other.left.matrix(g))) <= tol)
            && rg.iter().all(|g| fro_norm(&(self.right.matrix(g) - other.right.matrix(g))) <= tol)
    }
}

/// Which algebra elements an identity is checked on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckBasis {
    MatrixUnits,
    /// The *-generating set of [`AlgebraShape::generators`]; equivalent for
    /// identities between *-representations and much cheaper.
    Generators,
}

impl CheckBasis {
    fn elements(self, shape: &AlgebraShape) -> Vec<AlgElement> {
        match self {
            CheckBasis::MatrixUnits => shape.basis(),
            CheckBasis::Generators => shape.generators(),
        }
    }
}

/// Residuals of the two intertwining identities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellResiduals {
    pub left: f64,
    pub right: f64,
}

impl CellResiduals {
    pub fn max(&self) -> f64 {
        self.left.max(self.right)
    }
}

/// `max_a || T λ_src(a) - λ_tgt(φ(a)) T || / max(1, ||T||)`.
pub fn intertwining_residual(t: &CMatrix, src: &Action, tgt: &Action, phi: &Hom, basis: CheckBasis) -> f64 {
    let scale = fro_norm(t).max(1.0);
    basis
        .elements(phi.source())
        .iter()
        .map(|a| fro_norm(&(src.right_apply(t, a) - tgt.apply_columns(&phi.apply(a), t))) / scale)
        .fold(0.0, f64::max)
}

/// Right-action version: `T (ξ·b) = (T ξ)·φ(b)`.
pub fn right_intertwining_residual(t: &CMatrix, src: &Correspondence, tgt: &Correspondence, phi: &Hom, basis: CheckBasis) -> f64 {
    let scale = fro_norm(t).max(1.0);
    basis
        .elements(phi.source())
        .iter()
        .map(|b| {
            let lhs = src.right.right_apply(t, &b.transpose());
            let rhs = tgt.right.apply_columns(&phi.apply(b).transpose(), t);
            fro_norm(&(lhs - rhs)) / scale
        })
        .fold(0.0, f64::max)
}

/// Random correspondence `A ⇝ B`: a direct sum of the irreducibles
/// `C^{n_i} ⊗ C^{m_j}` with multiplicities in `0..=max_mult` (each block
/// used at least once, so both actions are unital), conjugated by a random
/// unitary.
pub fn random_correspondence<R: Rng>(a: &AlgebraShape, b: &AlgebraShape, max_mult: usize, rng: &mut R) -> Result<Correspondence> {
    let (na, nb) = (a.num_blocks(), b.num_blocks());
    let mut mult: Vec<Vec<usize>> = (0..na).map(|_| (0..nb).map(|_| rng.gen_range(0..=max_mult)).collect()).collect();
    for row in mult.iter_mut() {
        if row.iter().all(|&k| k == 0) {
            row[rng.gen_range(0..nb)] = 1;
        }
    }
    for j in 0..nb {
        if mult.iter().all(|row| row[j] == 0) {
            mult[rng.gen_range(0..na)][j] = 1;
        }
    }
    // (i, j, offset, multiplicity) for every irreducible summand.
    let mut parts = Vec::new();
    let mut dim = 0;
    for (i, row) in mult.iter().enumerate() {
        for (j, &k) in row.iter().enumerate() {
            if k > 0 {
                parts.push((i, j, dim, k));
                dim += a.blocks()[i] * b.blocks()[j] * k;
            }
        }
    }
    let w = numkit::random_unitary(dim, rng);
    let place = |pick: &dyn Fn(usize, usize, usize) -> Option<CMatrix>| -> CMatrix {
        let mut out = CMatrix::zeros(dim, dim);
        for &(i, j, off, k) in &parts {
            if let Some(m) = pick(i, j, k) {
                out.view_mut((off, off), (m.nrows(), m.ncols())).copy_from(&m);
            }
        }
        &w * out * w.adjoint()
    };
    let unit = |n: usize, r: usize, s: usize| {
        let mut e = CMatrix::zeros(n, n);
        e[(r, s)] = c(1.0, 0.0);
        e
    };
    let eye = |n: usize| CMatrix::identity(n, n);
    let left_units = a
        .matrix_units()
        .into_iter()
        .map(|(bi, r, s)| {
            place(&|i, j, k| (i == bi).then(|| kron(&kron(&unit(a.blocks()[i], r, s), &eye(b.blocks()[j])), &eye(k))))
        })
        .collect();
    let right_units = b
        .matrix_units()
        .into_iter()
        .map(|(bj, r, s)| {
            place(&|i, j, k| (j == bj).then(|| kron(&kron(&eye(a.blocks()[i]), &unit(b.blocks()[j], r, s)), &eye(k))))
        })
        .collect();
    Correspondence::new(
        Action::Explicit { shape: a.clone(), units: left_units },
        Action::Explicit { shape: b.clone(), units: right_units },
        1e-9,
    )
}

/// A bounded bimodular map between correspondences over boundary homs.
#[derive(Debug, Clone)]
pub struct IntertwinerCell {
    src: Correspondence,
    tgt: Correspondence,
    left: Hom,
    right: Hom,
    op: CMatrix,
}

impl IntertwinerCell {
    /// Builds a cell and verifies both intertwining identities on matrix units.
    pub fn new(src: Correspondence, tgt: Correspondence, left: Hom, right: Hom, op: CMatrix, tol: f64) -> Result<Self> {
        let cell = Self::unchecked(src, tgt, left, right, op)?;
        let res = cell.residuals(CheckBasis::MatrixUnits);
        if res.max() > tol {
            return Err(Error::BoundaryMismatch(format!(
                "not bimodular: left residual {:.3e}, right residual {:.3e}",
                res.left, res.right
            )));
        }
        Ok(cell)
    }

    /// Checks typing only; the caller takes responsibility for bimodularity.
    pub fn unchecked(src: Correspondence, tgt: Correspondence, left: Hom, right: Hom, op: CMatrix) -> Result<Self> {
        if !left.source().approx_eq(src.left_alg(), DEFAULT_TOL) || !left.target().approx_eq(tgt.left_alg(), DEFAULT_TOL) {
            return Err(Error::BoundaryMismatch("left boundary does not match the left algebras".into()));
        }
        if !right.source().approx_eq(src.right_alg(), DEFAULT_TOL) || !right.target().approx_eq(tgt.right_alg(), DEFAULT_TOL)
        {
            return Err(Error::BoundaryMismatch("right boundary does not match the right algebras".into()));
        }
        if op.nrows() != tgt.dim() || op.ncols() != src.dim() {
            return Err(Error::Dimension(format!(
                "operator is {}x{} but correspondences have dimensions {} -> {}",
                op.nrows(),
                op.ncols(),
                src.dim(),
                tgt.dim()
            )));
        }
        Ok(Self { src, tgt, left, right, op })
    }

    pub fn residuals(&self, basis: CheckBasis) -> CellResiduals {
        CellResiduals {
            left: intertwining_residual(&self.op, &self.src.left, &self.tgt.left, &self.left, basis),
            right: right_intertwining_residual(&self.op, &self.src, &self.tgt, &self.right, basis),
        }
    }

    pub fn source(&self) -> &Correspondence {
        &self.src
    }

    pub fn target(&self) -> &Correspondence {
        &self.tgt
    }

    pub fn left_boundary(&self) -> &Hom {
        &self.left
    }

    pub fn right_boundary(&self) -> &Hom {
        &self.right
    }

    pub fn operator(&self) -> &CMatrix {
        &self.op
    }

    pub fn identity(h: &Correspondence) -> Self {
        Self {
            src: h.clone(),
            tgt: h.clone(),
            left: Hom::identity(h.left_alg()),
            right: Hom::identity(h.right_alg()),
            op: CMatrix::identity(h.dim(), h.dim()),
        }
    }

    /// `upper ∘ lower`; requires `lower.target == upper.source`.
    pub fn compose_vertical(upper: &Self, lower: &Self) -> Result<Self> {
        if !lower.tgt.approx_eq(&upper.src, 1e-8) {
            return Err(Error::NotComposable("vertical composition across different correspondences".into()));
        }
        Ok(Self {
            src: lower.src.clone(),
            tgt: upper.tgt.clone(),
            left: upper.left.compose(&lower.left)?,
            right: upper.right.compose(&lower.right)?,
            op: numkit::matmul(&upper.op, &lower.op),
        })
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        numkit::is_unitary(&self.op, tol)
    }

    pub fn distance(&self, other: &Self) -> f64 {
        if self.op.shape() != other.op.shape() {
            return f64::INFINITY;
        }
        fro_norm(&(&self.op - &other.op))
    }
}

/// The unit square `L²(φ): L²(A) -> L²(B)` over `(φ, φ)`.
pub fn unit_cell(phi: &Hom, tol: f64) -> Result<IntertwinerCell> {
    let op = l2::l2_isometry(phi, tol)?;
    IntertwinerCell::new(
        Correspondence::identity(phi.source()),
        Correspondence::identity(phi.target()),
        phi.clone(),
        phi.clone(),
        op,
        tol,
    )
}

/// All bimodular maps `H -> K` over `(φ_L, φ_R)`, as a subspace of
/// row-major vectorised `dim K x dim H` matrices.
pub fn intertwiner_space(h: &Correspondence, k: &Correspondence, phi_l: &Hom, phi_r: &Hom, tol: f64) -> Result<Subspace> {
    IntertwinerCell::unchecked(h.clone(), k.clone(), phi_l.clone(), phi_r.clone(), CMatrix::zeros(k.dim(), h.dim()))?;
    let (dh, dk) = (h.dim(), k.dim());
    let ih = CMatrix::identity(dh, dh);
    let ik = CMatrix::identity(dk, dk);
    let mut blocks: Vec<CMatrix> = Vec::new();
    for a in phi_l.source().generators() {
        blocks.push(kron(&ik, &h.left_matrix(&a).transpose()) - kron(&k.left_matrix(&phi_l.apply(&a)), &ih));
    }
    for b in phi_r.source().generators() {
        blocks.push(kron(&ik, &h.right_matrix(&b).transpose()) - kron(&k.right_matrix(&phi_r.apply(&b)), &ih));
    }
    let n = dh * dk;
    let mut stacked = CMatrix::zeros(n * blocks.len(), n);
    for (q, b) in blocks.iter().enumerate() {
        stacked.view_mut((q * n, 0), (n, n)).copy_from(b);
    }
    Ok(Subspace::span(n, &numkit::kernel_basis(&stacked, tol), tol))
}

/// `H ⊠_B K` with the quotient data used to build maps into and out of it.
#[derive(Debug, Clone)]
pub struct Fusion {
    pub corr: Correspondence,
    /// `Q: H ⊗ K -> H ⊠ K`, with `Q^* Q` the fusion Gram matrix.
    pub quotient: CMatrix,
    /// Right inverse of `Q` supported on the orthogonal complement of its kernel.
    pub section: CMatrix,
}

impl Fusion {
    pub fn dim(&self) -> usize {
        self.corr.dim()
    }

    fn null_projector(&self) -> CMatrix {
        let n = self.quotient.ncols();
        CMatrix::identity(n, n) - &self.section * &self.quotient
    }
}

/// Gram matrix of the fusion form on `H ⊗ K` (row-major pair index).
pub fn fusion_gram(h: &Correspondence, k: &Correspondence) -> Result<CMatrix> {
    if !h.right_alg().approx_eq(k.left_alg(), DEFAULT_TOL) {
        return Err(Error::BoundaryMismatch("fusion needs H's right algebra to equal K's left algebra".into()));
    }
    let b = h.right_alg();
    let n = h.dim() * k.dim();
    let mut g = CMatrix::zeros(n, n);
    for (i, r, s) in b.matrix_units() {
        let w = b.weights()[i];
        let rho_adj = h.right_matrix(&b.matrix_unit(i, s, r));
        let lam = k.left_matrix(&b.matrix_unit(i, r, s));
        g += kron(&rho_adj, &lam) * c(1.0 / w, 0.0);
    }
    Ok(g)
}

pub fn fuse(h: &Correspondence, k: &Correspondence, tol: f64) -> Result<Fusion> {
    let g = fusion_gram(h, k)?;
    let herm = numkit::hermitian_residual(&g);
    if herm > tol {
        return Err(Error::InvalidRepresentation(format!("fusion form is not hermitian ({herm:.3e})")));
    }
    let (vals, vecs) = numkit::eigh(&g);
    let top = vals.iter().cloned().fold(0.0_f64, |a, v| a.max(v.abs()));
    if vals.first().is_some_and(|&v| v < -tol * top.max(1.0)) {
        return Err(Error::InvalidRepresentation("fusion form is not positive".into()));
    }
    let keep: Vec<usize> = (0..vals.len()).filter(|&q| vals[q] > tol * top.max(1.0)).collect();
    let r = keep.len();
    let n = g.nrows();
    let mut quotient = CMatrix::zeros(r, n);
    let mut section = CMatrix::zeros(n, r);
    for (row, &q) in keep.iter().enumerate() {
        let s = vals[q].sqrt();
        for col in 0..n {
            quotient[(row, col)] = vecs[(col, q)].conj() * s;
            section[(col, row)] = vecs[(col, q)] / s;
        }
    }
    let (ih, ik) = (CMatrix::identity(h.dim(), h.dim()), CMatrix::identity(k.dim(), k.dim()));
    let null = CMatrix::identity(n, n) - &section * &quotient;
    let mut worst = 0.0_f64;
    let mut descend = |big: CMatrix| -> CMatrix {
        worst = worst.max(fro_norm(&(&quotient * &big * &null)));
        &quotient * big * &section
    };
    let a_shape = h.left_alg().clone();
    let left_units: Vec<CMatrix> = a_shape.basis().iter().map(|e| descend(kron(&h.left_matrix(e), &ik))).collect();
    let c_shape = k.right_alg().clone();
    let right_units: Vec<CMatrix> = c_shape.basis().iter().map(|e| descend(kron(&ih, &k.right.matrix(e)))).collect();
    if worst > 1e-7 * top.max(1.0) {
        return Err(Error::NotDescending { residual: worst });
    }
    let corr = Correspondence {
        left: Action::Explicit { shape: a_shape, units: left_units },
        right: Action::Explicit { shape: c_shape, units: right_units },
    };
    Ok(Fusion { corr, quotient, section })
}

fn check_unitary(op: &CMatrix, tol: f64) -> Result<()> {
    let res = numkit::unitary_residual(op);
    if res > tol {
        return Err(Error::NotUnitary { residual: res });
    }
    Ok(())
}

/// `r_H: H ⊠_B L²(B) -> H`, `ξ ⊗ bΩ -> ξ b`.
pub fn right_unitor(h: &Correspondence, tol: f64) -> Result<IntertwinerCell> {
    let b = h.right_alg().clone();
    let fusion = fuse(h, &Correspondence::identity(&b), tol)?;
    let (dh, db) = (h.dim(), b.dim());
    let mut raw = CMatrix::zeros(dh, dh * db);
    for (m, (i, r, s)) in b.matrix_units().into_iter().enumerate() {
        let act = h.right_matrix(&b.matrix_unit(i, r, s)) * c(1.0 / b.weights()[i].sqrt(), 0.0);
        for p in 0..dh {
            raw.set_column(p * db + m, &act.column(p));
        }
    }
    let leak = fro_norm(&(&raw * fusion.null_projector()));
    if leak > 1e-7 {
        return Err(Error::NotDescending { residual: leak });
    }
    let op = raw * &fusion.section;
    check_unitary(&op, tol)?;
    IntertwinerCell::unchecked(fusion.corr, h.clone(), Hom::identity(h.left_alg()), Hom::identity(&b), op)
}

/// `l_K: L²(B) ⊠_B K -> K`, `bΩ ⊗ η -> b η`.
pub fn left_unitor(k: &Correspondence, tol: f64) -> Result<IntertwinerCell> {
    let b = k.left_alg().clone();
    let fusion = fuse(&Correspondence::identity(&b), k, tol)?;
    let (dk, db) = (k.dim(), b.dim());
    let mut raw = CMatrix::zeros(dk, db * dk);
    for (m, (i, r, s)) in b.matrix_units().into_iter().enumerate() {
        let act = k.left_matrix(&b.matrix_unit(i, r, s)) * c(1.0 / b.weights()[i].sqrt(), 0.0);
        for q in 0..dk {
            raw.set_column(m * dk + q, &act.column(q));
        }
    }
    let leak = fro_norm(&(&raw * fusion.null_projector()));
    if leak > 1e-7 {
        return Err(Error::NotDescending { residual: leak });
    }
    let op = raw * &fusion.section;
    check_unitary(&op, tol)?;
    IntertwinerCell::unchecked(fusion.corr, k.clone(), Hom::identity(&b), Hom::identity(k.right_alg()), op)
}

/// Map between two quotients of the same tensor space, `Π_to Π_from^+`,
/// after checking that the kernel of `Π_from` is killed by `Π_to`.
fn induced_between(from: &CMatrix, to: &CMatrix) -> Result<CMatrix> {
    let pinv = numkit::pseudo_inverse(from, 1e-10);
    let n = from.ncols();
    let leak = fro_norm(&(to * (CMatrix::identity(n, n) - &pinv * from)));
    if leak > 1e-7 * fro_norm(to).max(1.0) {
        return Err(Error::NotDescending { residual: leak });
    }
    Ok(to * pinv)
}

/// `α: (H ⊠ K) ⊠ L -> H ⊠ (K ⊠ L)`, induced by `ξ⊗η⊗ζ -> ξ⊗η⊗ζ`.
pub fn associator(h: &Correspondence, k: &Correspondence, l: &Correspondence, tol: f64) -> Result<IntertwinerCell> {
    let hk = fuse(h, k, tol)?;
    let hk_l = fuse(&hk.corr, l, tol)?;
    let kl = fuse(k, l, tol)?;
    let h_kl = fuse(h, &kl.corr, tol)?;
    let il = CMatrix::identity(l.dim(), l.dim());
    let ih = CMatrix::identity(h.dim(), h.dim());
    let pi_left = &hk_l.quotient * kron(&hk.quotient, &il);
    let pi_right = &h_kl.quotient * kron(&ih, &kl.quotient);
    let op = induced_between(&pi_left, &pi_right)?;
    check_unitary(&op, tol)?;
    IntertwinerCell::unchecked(hk_l.corr, h_kl.corr, Hom::identity(h.left_alg()), Hom::identity(l.right_alg()), op)
}

/// Horizontal composite `t ⊠ s` of cells; `t.right` must equal `s.left`.
pub fn fuse_cells(t: &IntertwinerCell, s: &IntertwinerCell, tol: f64) -> Result<IntertwinerCell> {
    if t.right.distance(&s.left) > 1e-8 {
        return Err(Error::NotComposable("shared boundary homs differ".into()));
    }
    let src = fuse(&t.src, &s.src, tol)?;
    let tgt = fuse(&t.tgt, &s.tgt, tol)?;
    let big = kron(&t.op, &s.op);
    let leak = fro_norm(&(&tgt.quotient * &big * src.null_projector()));
    if leak > 1e-7 * fro_norm(&big).max(1.0) {
        return Err(Error::NotDescending { residual: leak });
    }
    let op = &tgt.quotient * big * &src.section;
    IntertwinerCell::unchecked(src.corr, tgt.corr, t.left.clone(), s.right.clone(), op)
}

/// `|| α_{H,K,L⊠M} α_{H⊠K,L,M} - (1 ⊠ α_{K,L,M}) α_{H,K⊠L,M} (α_{H,K,L} ⊠ 1) ||`.
pub fn pentagon_residual(
    h: &Correspondence,
    k: &Correspondence,
    l: &Correspondence,
    m: &Correspondence,
    tol: f64,
) -> Result<f64> {
    let hk = fuse(h, k, tol)?.corr;
    let lm = fuse(l, m, tol)?.corr;
    let kl = fuse(k, l, tol)?.corr;
    let lhs = associator(h, k, &lm, tol)?.op * associator(&hk, l, m, tol)?.op;
    let a1 = fuse_cells(&associator(h, k, l, tol)?, &IntertwinerCell::identity(m), tol)?;
    let a2 = associator(h, &kl, m, tol)?;
    let a3 = fuse_cells(&IntertwinerCell::identity(h), &associator(k, l, m, tol)?, tol)?;
    let rhs = a3.op * a2.op * a1.op;
    Ok(fro_norm(&(lhs - rhs)))
}

/// `|| (1 ⊠ l_K) α_{H,L²(B),K} - r_H ⊠ 1 ||`.
pub fn triangle_residual(h: &Correspondence, k: &Correspondence, tol: f64) -> Result<f64> {
    let unit = Correspondence::identity(h.right_alg());
    let alpha = associator(h, &unit, k, tol)?;
    let lhs = fuse_cells(&IntertwinerCell::identity(h), &left_unitor(k, tol)?, tol)?.op * alpha.op;
    let rhs = fuse_cells(&right_unitor(h, tol)?, &IntertwinerCell::identity(k), tol)?.op;
    Ok(fro_norm(&(lhs - rhs)))
}

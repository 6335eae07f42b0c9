//! Finite-dimensional von Neumann algebras `⊕ M_{n_i}` with a faithful
//! tracial state, and normal unital *-homomorphisms between them.
//!
//! A homomorphism `φ: A -> B` is stored in normal form: an integer
//! multiplicity matrix `Λ` (target blocks x source blocks) and a unitary
//! `u ∈ B` such that block `j` of `φ(x)` is `u_j D_j(x) u_j^*`, where
//! `D_j(x)` is the block diagonal matrix holding, for each source block
//! `i` in order, `Λ_ji` consecutive copies of `x_i`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::numkit::{
    self, c, eigh, fro_norm, span_closure, CMatrix, CVector, Subspace, C64, DEFAULT_TOL,
};

/// Block sizes together with trace weights: `tr(x) = Σ w_i Tr(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraShape {
    blocks: Vec<usize>,
    weights: Vec<f64>,
}

impl AlgebraShape {
    /// Shape with the normalised trace `tr(1) = 1`, all weights `1 / Σ n_j`.
    pub fn new(blocks: Vec<usize>) -> Result<Self> {
        let total: usize = blocks.iter().sum();
        let w = 1.0 / total.max(1) as f64;
        Self::with_weights(blocks.clone(), vec![w; blocks.len()])
    }

    pub fn with_weights(blocks: Vec<usize>, weights: Vec<f64>) -> Result<Self> {
        if blocks.is_empty() || blocks.contains(&0) {
            return Err(Error::InvalidShape(format!("block sizes must be positive, got {blocks:?}")));
        }
        if weights.len() != blocks.len() || weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(Error::InvalidShape("trace weights must be positive, one per block".into()));
        }
        Ok(Self { blocks, weights })
    }

    /// `M_n` with normalised trace.
    pub fn matrix(n: usize) -> Result<Self> {
        Self::new(vec![n])
    }

    pub fn blocks(&self) -> &[usize] {
        &self.blocks
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Complex dimension `Σ n_i^2`.
    pub fn dim(&self) -> usize {
        self.blocks.iter().map(|n| n * n).sum()
    }

    /// Size of the block diagonal representation `Σ n_i`.
    pub fn rep_size(&self) -> usize {
        self.blocks.iter().sum()
    }

    /// Offset of block `i` in the concatenated row-major vectorisation.
    pub fn vec_offset(&self, i: usize) -> usize {
        self.blocks[..i].iter().map(|n| n * n).sum()
    }

    pub fn trace_of_unit(&self) -> f64 {
        self.blocks.iter().zip(&self.weights).map(|(&n, &w)| n as f64 * w).sum()
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.blocks == other.blocks
            && self.weights.iter().zip(&other.weights).all(|(a, b)| (a - b).abs() <= tol * a.abs().max(1.0))
    }

    pub fn matrix_unit(&self, i: usize, r: usize, s: usize) -> AlgElement {
        let mut x = AlgElement::zeros(self);
        x.blocks[i][(r, s)] = c(1.0, 0.0);
        x
    }

    /// Matrix units `e^{(i)}_{rs}`, ordered by block, then row, then column.
    pub fn matrix_units(&self) -> Vec<(usize, usize, usize)> {
        let mut out = Vec::with_capacity(self.dim());
        for (i, &n) in self.blocks.iter().enumerate() {
            for r in 0..n {
                for s in 0..n {
                    out.push((i, r, s));
                }
            }
        }
        out
    }

    pub fn basis(&self) -> Vec<AlgElement> {
        self.matrix_units().into_iter().map(|(i, r, s)| self.matrix_unit(i, r, s)).collect()
    }

    /// A *-generating set: cyclic shift and clock in each block, padded by
    /// zero elsewhere. Each has finite order inside its block corner, so
    /// adjoints are polynomials in the generators and an identity between
    /// *-homomorphisms that holds on this set holds everywhere.
    pub fn generators(&self) -> Vec<AlgElement> {
        let mut out = Vec::new();
        for (i, &n) in self.blocks.iter().enumerate() {
            let (s, d) = numkit::shift_and_clock(n);
            let mut a = AlgElement::zeros(self);
            a.blocks[i] = s;
            out.push(a);
            if n > 1 {
                let mut b = AlgElement::zeros(self);
                b.blocks[i] = d;
                out.push(b);
            }
        }
        out
    }

    pub fn tr(&self, x: &AlgElement) -> C64 {
        x.blocks.iter().zip(&self.weights).map(|(b, &w)| b.trace() * w).sum()
    }
}

/// An element of `⊕ M_{n_i}`, stored blockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgElement {
    blocks: Vec<CMatrix>,
}

impl AlgElement {
    pub fn zeros(shape: &AlgebraShape) -> Self {
        Self { blocks: shape.blocks.iter().map(|&n| CMatrix::zeros(n, n)).collect() }
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        Self { blocks: shape.blocks.iter().map(|&n| CMatrix::identity(n, n)).collect() }
    }

    pub fn from_blocks(shape: &AlgebraShape, blocks: Vec<CMatrix>) -> Result<Self> {
        if blocks.len() != shape.num_blocks()
            || blocks.iter().zip(&shape.blocks).any(|(b, &n)| b.nrows() != n || b.ncols() != n)
        {
            return Err(Error::Dimension("element blocks do not match the shape".into()));
        }
        Ok(Self { blocks })
    }

    /// Central projection onto block `i`.
    pub fn block_unit(shape: &AlgebraShape, i: usize) -> Self {
        let mut x = Self::zeros(shape);
        let n = shape.blocks[i];
        x.blocks[i] = CMatrix::identity(n, n);
        x
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &CMatrix {
        &self.blocks[i]
    }

    pub fn block_mut(&mut self, i: usize) -> &mut CMatrix {
        &mut self.blocks[i]
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a * b).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a + b).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect() }
    }

    pub fn scale(&self, z: C64) -> Self {
        Self { blocks: self.blocks.iter().map(|a| a * z).collect() }
    }

    pub fn adjoint(&self) -> Self {
        Self { blocks: self.blocks.iter().map(|a| a.adjoint()).collect() }
    }

    pub fn transpose(&self) -> Self {
        Self { blocks: self.blocks.iter().map(|a| a.transpose()).collect() }
    }

    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| fro_norm(b).powi(2)).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }

    /// Concatenation of the row-major vectorised blocks.
    pub fn to_vector(&self) -> CVector {
        let len: usize = self.blocks.iter().map(|b| b.len()).sum();
        let mut v = CVector::zeros(len);
        let mut off = 0;
        for b in &self.blocks {
            // nalgebra iterates column-major, so the transpose yields row-major order.
            for (k, z) in b.transpose().iter().enumerate() {
                v[off + k] = *z;
            }
            off += b.len();
        }
        v
    }

    pub fn from_vector(shape: &AlgebraShape, v: &CVector) -> Result<Self> {
        if v.len() != shape.dim() {
            return Err(Error::Dimension(format!("vector of length {} for algebra of dim {}", v.len(), shape.dim())));
        }
        let mut off = 0;
        let mut blocks = Vec::with_capacity(shape.num_blocks());
        for &n in &shape.blocks {
            blocks.push(CMatrix::from_fn(n, n, |r, s| v[off + r * n + s]));
            off += n * n;
        }
        Ok(Self { blocks })
    }

    /// Block diagonal matrix of size `Σ n_i`.
    pub fn to_block_diag(&self) -> CMatrix {
        numkit::direct_sum(&self.blocks)
    }

    pub fn from_block_diag(shape: &AlgebraShape, m: &CMatrix) -> Self {
        let mut off = 0;
        let mut blocks = Vec::new();
        for &n in &shape.blocks {
            blocks.push(m.view((off, off), (n, n)).into_owned());
            off += n;
        }
        Self { blocks }
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.blocks.iter().all(|b| numkit::is_unitary(b, tol))
    }
}

/// Sub-blocks of `D_j(x)` for one target block: `(source block, offset)`.
fn layout(lambda_row: &[usize], src_blocks: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut off = 0;
    for (i, &m) in lambda_row.iter().enumerate() {
        for _ in 0..m {
            out.push((i, off));
            off += src_blocks[i];
        }
    }
    out
}

/// Normal unital *-homomorphism in normal form.
#[derive(Debug, Clone)]
pub struct Hom {
    source: AlgebraShape,
    target: AlgebraShape,
    multiplicity: Vec<Vec<usize>>,
    conjugator: AlgElement,
}

impl Hom {
    /// Validates unitality `Λ n_src = n_tgt` and unitarity of the conjugator.
    pub fn new(
        source: AlgebraShape,
        target: AlgebraShape,
        multiplicity: Vec<Vec<usize>>,
        conjugator: AlgElement,
        tol: f64,
    ) -> Result<Self> {
        if multiplicity.len() != target.num_blocks()
            || multiplicity.iter().any(|row| row.len() != source.num_blocks())
        {
            return Err(Error::Dimension("multiplicity matrix must be target blocks x source blocks".into()));
        }
        for (j, row) in multiplicity.iter().enumerate() {
            let size: usize = row.iter().zip(&source.blocks).map(|(m, n)| m * n).sum();
            if size != target.blocks[j] {
                return Err(Error::NotHomomorphism(format!(
                    "not unital: target block {j} has size {} but receives {size}",
                    target.blocks[j]
                )));
            }
        }
        if conjugator.blocks.len() != target.num_blocks()
            || conjugator.blocks.iter().zip(&target.blocks).any(|(b, &n)| b.nrows() != n || b.ncols() != n)
        {
            return Err(Error::Dimension("conjugator must be an element of the target".into()));
        }
        let res = conjugator.blocks.iter().map(numkit::unitary_residual).fold(0.0, f64::max);
        if res > tol {
            return Err(Error::NotUnitary { residual: res });
        }
        Ok(Self { source, target, multiplicity, conjugator })
    }

    pub fn identity(shape: &AlgebraShape) -> Self {
        let k = shape.num_blocks();
        let lambda = (0..k).map(|j| (0..k).map(|i| usize::from(i == j)).collect()).collect();
        Self {
            source: shape.clone(),
            target: shape.clone(),
            multiplicity: lambda,
            conjugator: AlgElement::identity(shape),
        }
    }

    /// Inner automorphism `x -> u x u^*`.
    pub fn inner(shape: &AlgebraShape, u: AlgElement, tol: f64) -> Result<Self> {
        let id = Self::identity(shape);
        Self::new(shape.clone(), shape.clone(), id.multiplicity, u, tol)
    }

    pub fn source(&self) -> &AlgebraShape {
        &self.source
    }

    pub fn target(&self) -> &AlgebraShape {
        &self.target
    }

    pub fn multiplicity(&self) -> &[Vec<usize>] {
        &self.multiplicity
    }

    pub fn conjugator(&self) -> &AlgElement {
        &self.conjugator
    }

    fn embed_block(&self, j: usize, x: &AlgElement) -> CMatrix {
        let n = self.target.blocks[j];
        let mut d = CMatrix::zeros(n, n);
        for (i, off) in layout(&self.multiplicity[j], &self.source.blocks) {
            let m = self.source.blocks[i];
            d.view_mut((off, off), (m, m)).copy_from(&x.blocks[i]);
        }
        d
    }

    pub fn apply(&self, x: &AlgElement) -> AlgElement {
        let blocks = (0..self.target.num_blocks())
            .map(|j| {
                let u = &self.conjugator.blocks[j];
                numkit::matmul(&numkit::matmul(u, &self.embed_block(j, x)), &u.adjoint())
            })
            .collect();
        AlgElement { blocks }
    }

    /// `φ(e^{(i)}_{rs})`, computed as a sum of rank-one terms.
    pub fn apply_matrix_unit(&self, i: usize, r: usize, s: usize) -> AlgElement {
        let blocks = (0..self.target.num_blocks())
            .map(|j| {
                let u = &self.conjugator.blocks[j];
                let n = self.target.blocks[j];
                let mut out = CMatrix::zeros(n, n);
                for (k, off) in layout(&self.multiplicity[j], &self.source.blocks) {
                    if k == i {
                        out += u.column(off + r) * u.column(off + s).adjoint();
                    }
                }
                out
            })
            .collect();
        AlgElement { blocks }
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &Hom) -> Result<Hom> {
        if !inner.target.approx_eq(&self.source, DEFAULT_TOL) {
            return Err(Error::NotComposable("middle algebras differ".into()));
        }
        let (outer, src) = (self, &inner.source);
        let lambda: Vec<Vec<usize>> = (0..outer.target.num_blocks())
            .map(|j| {
                (0..src.num_blocks())
                    .map(|i| (0..inner.target.num_blocks()).map(|k| outer.multiplicity[j][k] * inner.multiplicity[k][i]).sum())
                    .collect()
            })
            .collect();
        let psi_u = outer.apply(&inner.conjugator);
        let mut conj = Vec::with_capacity(outer.target.num_blocks());
        for j in 0..outer.target.num_blocks() {
            let n = outer.target.blocks[j];
            // Sub-block offsets of D_ψ(D_φ(x)) in nested order, labelled by source block.
            let mut nested: Vec<(usize, usize)> = Vec::new();
            for (k, off_k) in layout(&outer.multiplicity[j], &inner.target.blocks) {
                for (i, off_i) in layout(&inner.multiplicity[k], &src.blocks) {
                    nested.push((i, off_k + off_i));
                }
            }
            let composite = layout(&lambda[j], &src.blocks);
            let mut q = CMatrix::zeros(n, n);
            let mut used = vec![false; nested.len()];
            for (i, off_c) in composite {
                let pos = (0..nested.len()).find(|&p| !used[p] && nested[p].0 == i).expect("matching copy");
                used[pos] = true;
                for a in 0..src.blocks[i] {
                    q[(nested[pos].1 + a, off_c + a)] = c(1.0, 0.0);
                }
            }
            conj.push(numkit::matmul(&numkit::matmul(&psi_u.blocks[j], &outer.conjugator.blocks[j]), &q));
        }
        Ok(Hom {
            source: src.clone(),
            target: outer.target.clone(),
            multiplicity: lambda,
            conjugator: AlgElement { blocks: conj },
        })
    }

    /// Injective iff no source block is sent to zero.
    pub fn is_injective(&self) -> bool {
        (0..self.source.num_blocks()).all(|i| self.multiplicity.iter().any(|row| row[i] > 0))
    }

    /// Bijective iff `Λ` is a permutation matrix.
    pub fn is_isomorphism(&self) -> bool {
        self.source.num_blocks() == self.target.num_blocks()
            && self.multiplicity.iter().all(|row| row.iter().sum::<usize>() == 1)
            && (0..self.source.num_blocks()).all(|i| self.multiplicity.iter().map(|row| row[i]).sum::<usize>() == 1)
    }

    /// Largest violation of `w_src,i = Σ_j Λ_ji w_tgt,j`.
    pub fn trace_defect(&self) -> f64 {
        (0..self.source.num_blocks())
            .map(|i| {
                let pushed: f64 = (0..self.target.num_blocks())
                    .map(|j| self.multiplicity[j][i] as f64 * self.target.weights[j])
                    .sum();
                (pushed - self.source.weights[i]).abs() / self.source.weights[i]
            })
            .fold(0.0, f64::max)
    }

    pub fn is_trace_preserving(&self, tol: f64) -> bool {
        self.trace_defect() <= tol
    }

    /// Distance to another hom with the same boundary, evaluated on the
    /// *-generating set of the source.
    pub fn distance(&self, other: &Hom) -> f64 {
        if !self.source.approx_eq(&other.source, DEFAULT_TOL) || !self.target.approx_eq(&other.target, DEFAULT_TOL) {
            return f64::INFINITY;
        }
        let gens = self.source.generators();
        if self.multiplicity != other.multiplicity {
            return gens.iter().map(|g| self.apply(g).dist(&other.apply(g))).fold(0.0, f64::max);
        }
        // Same D, so ||U D(x) U^* - V D(x) V^*|| = ||[V^* U, D(x)]||.
        let rel: Vec<Option<CMatrix>> = self
            .conjugator
            .blocks
            .iter()
            .zip(&other.conjugator.blocks)
            .map(|(u, v)| (u != v).then(|| numkit::matmul(&v.adjoint(), u)))
            .collect();
        gens.iter()
            .map(|g| {
                rel.iter()
                    .enumerate()
                    .filter_map(|(j, w)| w.as_ref().map(|w| (j, w)))
                    .map(|(j, w)| {
                        let d = self.embed_block(j, g);
                        fro_norm(&(numkit::matmul(w, &d) - numkit::matmul(&d, w))).powi(2)
                    })
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Hom, tol: f64) -> bool {
        self.distance(other) <= tol
    }

    /// Recovers `x` from `y = φ(x)`; fails when `y` is not in the image.
    pub fn pull_back(&self, y: &AlgElement) -> Result<AlgElement> {
        let mut x = AlgElement::zeros(&self.source);
        for i in 0..self.source.num_blocks() {
            let j = (0..self.target.num_blocks())
                .find(|&j| self.multiplicity[j][i] > 0)
                .ok_or(Error::NotInImage { residual: f64::INFINITY })?;
            let u = &self.conjugator.blocks[j];
            let z = u.adjoint() * &y.blocks[j] * u;
            let (_, off) = layout(&self.multiplicity[j], &self.source.blocks)
                .into_iter()
                .find(|&(k, _)| k == i)
                .expect("block present");
            let m = self.source.blocks[i];
            x.blocks[i] = z.view((off, off), (m, m)).into_owned();
        }
        let residual = self.apply(&x).dist(y) / y.norm().max(1.0);
        if residual > DEFAULT_TOL {
            return Err(Error::NotInImage { residual });
        }
        Ok(x)
    }

    /// Image as a subspace of the vectorised target.
    pub fn image(&self, tol: f64) -> Subspace {
        let vecs: Vec<CVector> = self.source.basis().iter().map(|e| self.apply(e).to_vector()).collect();
        Subspace::span(self.target.dim(), &vecs, tol)
    }

    /// Normalises an externally supplied linear map into normal form, or
    /// rejects it if it is not a unital *-homomorphism.
    pub fn from_linear_map<F>(source: &AlgebraShape, target: &AlgebraShape, f: F, tol: f64) -> Result<Hom>
    where
        F: Fn(&AlgElement) -> AlgElement,
    {
        let nt = target.num_blocks();
        let ns = source.num_blocks();
        let mut lambda = vec![vec![0usize; ns]; nt];
        for i in 0..ns {
            let p = f(&AlgElement::block_unit(source, i));
            for j in 0..nt {
                let t = p.blocks[j].trace().re / source.blocks[i] as f64;
                let m = t.round();
                if (t - m).abs() > 1e-6 || m < 0.0 {
                    return Err(Error::NotHomomorphism(format!(
                        "image of central projection {i} has non-integral multiplicity {t:.6} in block {j}"
                    )));
                }
                lambda[j][i] = m as usize;
            }
        }
        let mut conj = Vec::with_capacity(nt);
        for j in 0..nt {
            let n = target.blocks[j];
            let mut cols: Vec<CVector> = Vec::with_capacity(n);
            for i in 0..ns {
                let mult = lambda[j][i];
                if mult == 0 {
                    continue;
                }
                let e00 = f(&source.matrix_unit(i, 0, 0));
                let (vals, vecs) = eigh(&e00.blocks[j]);
                let top: Vec<usize> = (0..n).filter(|&k| vals[k] > 0.5).collect();
                if top.len() != mult {
                    return Err(Error::NotHomomorphism(format!(
                        "minimal projection of block {i} has rank {} in target block {j}, expected {mult}",
                        top.len()
                    )));
                }
                let images: Vec<CMatrix> =
                    (0..source.blocks[i]).map(|a| f(&source.matrix_unit(i, a, 0)).blocks[j].clone()).collect();
                for &k in &top {
                    let v = vecs.column(k).into_owned();
                    for img in &images {
                        cols.push(img * &v);
                    }
                }
            }
            if cols.len() != n {
                return Err(Error::NotHomomorphism(format!("target block {j} is not filled by the image")));
            }
            conj.push(CMatrix::from_columns(&cols));
        }
        let hom = Hom::new(source.clone(), target.clone(), lambda, AlgElement { blocks: conj }, 1e-6)
            .map_err(|e| Error::NotHomomorphism(format!("normal form failed: {e}")))?;
        let mut worst = 0.0_f64;
        for e in source.basis() {
            let y = f(&e);
            worst = worst.max(hom.apply(&e).dist(&y) / y.norm().max(1.0));
        }
        if worst > tol {
            return Err(Error::NotHomomorphism(format!("map differs from its normal form by {worst:.3e}")));
        }
        Ok(hom)
    }

    /// Matrix of the map on vectorised elements (`dim B x dim A`).
    pub fn linear_matrix(&self) -> CMatrix {
        let cols: Vec<CVector> = self.source.basis().iter().map(|e| self.apply(e).to_vector()).collect();
        CMatrix::from_columns(&cols)
    }
}

/// Smallest *-subalgebra of `shape` containing every element of
/// `candidates` (and the unit).
///
/// The closure is grown from one random combination of the candidates;
/// candidates that are still missing afterwards are added as generators
/// explicitly, so the result never depends on the random draw.
pub fn generate_from(shape: &AlgebraShape, candidates: &[AlgElement], tol: f64) -> Subspace {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut gens: Vec<AlgElement> = Vec::new();
    if !candidates.is_empty() {
        let mut acc = AlgElement::zeros(shape);
        for x in candidates {
            acc = acc.add(&x.scale(c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))));
        }
        gens.push(acc);
    }
    loop {
        let mut maps: Vec<AlgElement> = gens.clone();
        maps.extend(gens.iter().map(|g| g.adjoint()));
        let seeds = vec![AlgElement::identity(shape).to_vector()];
        let sub = span_closure(
            shape.dim(),
            &seeds,
            maps.len(),
            |k, v| {
                let x = AlgElement::from_vector(shape, v).expect("closure vector length");
                maps[k].mul(&x).to_vector()
            },
            tol,
        );
        let vs: Vec<CVector> = candidates.iter().map(|x| x.to_vector()).collect();
        let missing = sub.outside(&vs, tol);
        if missing.is_empty() {
            return sub;
        }
        gens.extend(missing.into_iter().map(|k| candidates[k].clone()));
    }
}

/// Subalgebra generated by subspaces of `shape` (e.g. images of local algebras).
pub fn generated_subalgebra(shape: &AlgebraShape, parts: &[Subspace], tol: f64) -> Result<Subspace> {
    let mut elems = Vec::new();
    for p in parts {
        if p.ambient_dim() != shape.dim() {
            return Err(Error::Dimension("subspace does not live in the given algebra".into()));
        }
        for v in p.basis_vectors() {
            elems.push(AlgElement::from_vector(shape, &v)?);
        }
    }
    Ok(generate_from(shape, &elems, tol))
}

/// Fixed points of a family of automorphisms of `shape`.
pub fn fixed_point_subalgebra(shape: &AlgebraShape, automorphisms: &[Hom], tol: f64) -> Result<Subspace> {
    let d = shape.dim();
    let mut rows: Vec<CMatrix> = Vec::new();
    for a in automorphisms {
        if !a.source.approx_eq(shape, tol) || !a.target.approx_eq(shape, tol) {
            return Err(Error::Dimension("automorphism of a different algebra".into()));
        }
        rows.push(a.linear_matrix() - CMatrix::identity(d, d));
    }
    if rows.is_empty() {
        return Ok(Subspace::full(d));
    }
    let mut stacked = CMatrix::zeros(d * rows.len(), d);
    for (k, r) in rows.iter().enumerate() {
        stacked.view_mut((k * d, 0), (d, d)).copy_from(r);
    }
    Ok(Subspace::span(d, &numkit::kernel_basis(&stacked, tol), tol))
}

/// Wedderburn decomposition of a *-subalgebra: the abstract shape and the
/// trace-preserving embedding realising the isomorphism onto the input.
#[derive(Debug, Clone)]
pub struct Wedderburn {
    pub shape: AlgebraShape,
    pub embedding: Hom,
    pub multiplicities: Vec<usize>,
}

fn first_pair_leaving(shape: &AlgebraShape, basis: &[AlgElement], sub: &Subspace, tol: f64) -> (usize, usize) {
    for (a, x) in basis.iter().enumerate() {
        for (b, y) in basis.iter().enumerate() {
            if !sub.contains(&x.mul(y).to_vector(), tol) {
                return (a, b);
            }
        }
        if !sub.contains(&x.adjoint().to_vector(), tol) {
            return (a, a);
        }
    }
    let _ = shape;
    (0, 0)
}

/// Clusters sorted eigenvalues; returns index ranges of each cluster.
fn clusters(vals: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for k in 1..=vals.len() {
        if k == vals.len() || vals[k] - vals[k - 1] > gap {
            out.push(start..k);
            start = k;
        }
    }
    out
}

/// Decomposes a unital *-subalgebra `sub` of `ambient` as `⊕ M_{m_k}` with
/// blocks sorted in descending size. The trace weights are inherited from
/// the ambient trace, so the returned embedding is trace-preserving.
pub fn wedderburn(ambient: &AlgebraShape, sub: &Subspace, tol: f64) -> Result<Wedderburn> {
    if sub.ambient_dim() != ambient.dim() {
        return Err(Error::Dimension("subspace does not live in the ambient algebra".into()));
    }
    let basis: Vec<AlgElement> = sub
        .basis_vectors()
        .iter()
        .map(|v| AlgElement::from_vector(ambient, v))
        .collect::<Result<_>>()?;
    if !sub.contains(&AlgElement::identity(ambient).to_vector(), tol) {
        return Err(Error::Invalid("subspace does not contain the unit".into()));
    }
    let generated = generate_from(ambient, &basis, tol);
    if generated.dim() != sub.dim() {
        let (a, b) = first_pair_leaving(ambient, &basis, sub, tol);
        return Err(Error::Invalid(format!(
            "not a *-subalgebra: the product of basis elements {a} and {b} leaves the span"
        )));
    }
    let n_rep = ambient.rep_size();
    let full: Vec<CMatrix> = basis.iter().map(|x| x.to_block_diag()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(0xa11e);
    let random_element = |rng: &mut ChaCha8Rng| -> CMatrix {
        let mut acc = CMatrix::zeros(n_rep, n_rep);
        for b in &full {
            acc += b * c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        }
        (&acc + acc.adjoint()) * c(0.5, 0.0)
    };

    // Centre: elements of the span commuting with two random self-adjoint elements
    // and the whole basis when the span is small.
    let probes: Vec<CMatrix> = if full.len() <= 16 {
        full.clone()
    } else {
        let mut p: Vec<CMatrix> = (0..4).map(|_| random_element(&mut rng)).collect();
        let check = algebra_from_matrices(&p, tol);
        if check < sub.dim() {
            p.extend(full.iter().cloned());
        }
        p
    };
    let nn = n_rep * n_rep;
    let mut system = CMatrix::zeros(nn * probes.len(), full.len());
    for (pi, p) in probes.iter().enumerate() {
        for (l, b) in full.iter().enumerate() {
            let comm = b * p - p * b;
            for (k, z) in numkit::vec_row_major(&comm).iter().enumerate() {
                system[(pi * nn + k, l)] = *z;
            }
        }
    }
    let centre_coeffs = numkit::kernel_basis(&system, tol);
    let centre: Vec<CMatrix> = centre_coeffs
        .iter()
        .map(|cv| full.iter().zip(cv.iter()).fold(CMatrix::zeros(n_rep, n_rep), |acc, (b, z)| acc + b * *z))
        .collect();

    // Minimal central projections from a generic self-adjoint central element.
    let mut projections: Vec<CMatrix> = Vec::new();
    for _attempt in 0..8 {
        let mut h = CMatrix::zeros(n_rep, n_rep);
        for z in &centre {
            h += z * c(rng.gen_range(-1.0..1.0), 0.0);
        }
        h = (&h + h.adjoint()) * c(0.5, 0.0);
        let (vals, vecs) = eigh(&h);
        let scale = vals.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1e-300);
        let groups = clusters(&vals, 1e-6 * scale);
        if groups.len() == centre.len() {
            projections = groups
                .into_iter()
                .map(|g| {
                    let v = vecs.columns(g.start, g.len());
                    &v * v.adjoint()
                })
                .collect();
            break;
        }
    }
    if projections.is_empty() {
        return Err(Error::Invalid("could not separate the centre into minimal projections".into()));
    }

    struct Block {
        size: usize,
        mult: usize,
        columns: Vec<CVector>,
    }
    let mut blocks: Vec<Block> = Vec::new();
    for p in &projections {
        let rank = p.trace().re.round() as usize;
        let compressed: Vec<CVector> = full.iter().map(|b| numkit::vec_row_major(&(b * p))).collect();
        let block_dim = Subspace::span(nn, &compressed, tol).dim();
        let m = (block_dim as f64).sqrt().round() as usize;
        if m * m != block_dim || m == 0 || rank % m != 0 {
            return Err(Error::Invalid(format!("central summand of dimension {block_dim} is not a full matrix block")));
        }
        let mult = rank / m;
        // Range of p, then a generic self-adjoint element compressed to it.
        let (pv, pvecs) = eigh(p);
        let range_idx: Vec<usize> = (0..n_rep).filter(|&k| pv[k] > 0.5).collect();
        let range = CMatrix::from_columns(&range_idx.iter().map(|&k| pvecs.column(k).into_owned()).collect::<Vec<_>>());
        let mut spectral: Vec<CMatrix> = Vec::new();
        for _attempt in 0..8 {
            let a = random_element(&mut rng);
            let small = range.adjoint() * &a * &range;
            let (vals, vecs) = eigh(&small);
            let scale = vals.iter().fold(0.0_f64, |acc, v| acc.max(v.abs())).max(1e-300);
            let groups = clusters(&vals, 1e-6 * scale);
            if groups.len() == m && groups.iter().all(|g| g.len() == mult) {
                spectral = groups.into_iter().map(|g| &range * vecs.columns(g.start, g.len())).collect();
                break;
            }
        }
        if spectral.is_empty() {
            return Err(Error::Invalid("could not find minimal projections in a central summand".into()));
        }
        let f1 = &spectral[0];
        let p1 = f1 * f1.adjoint();
        let mut units: Vec<CMatrix> = vec![p1.clone()];
        for fr in spectral.iter().skip(1) {
            let pr = fr * fr.adjoint();
            let best = full
                .iter()
                .map(|b| &pr * b * &p1)
                .max_by(|x, y| fro_norm(x).total_cmp(&fro_norm(y)))
                .expect("non-empty basis");
            let norm2 = (best.adjoint() * &best).trace().re / mult as f64;
            units.push(best * c(1.0 / norm2.sqrt(), 0.0));
        }
        let mut columns = Vec::with_capacity(rank);
        for cidx in 0..mult {
            let w = f1.column(cidx).into_owned();
            for e in &units {
                columns.push(e * &w);
            }
        }
        blocks.push(Block { size: m, mult, columns });
    }
    blocks.sort_by(|a, b| b.size.cmp(&a.size));

    let w = CMatrix::from_columns(&blocks.iter().flat_map(|b| b.columns.iter().cloned()).collect::<Vec<_>>());
    let sizes: Vec<usize> = blocks.iter().map(|b| b.size).collect();
    let embed_full = |x: &AlgElement| -> AlgElement {
        let parts: Vec<CMatrix> = blocks
            .iter()
            .enumerate()
            .map(|(k, b)| numkit::kron(&CMatrix::identity(b.mult, b.mult), x.block(k)))
            .collect();
        let d = numkit::direct_sum(&parts);
        AlgElement::from_block_diag(ambient, &(&w * d * w.adjoint()))
    };
    let provisional = AlgebraShape::new(sizes.clone())?;
    let weights: Vec<f64> = (0..sizes.len())
        .map(|k| ambient.tr(&embed_full(&provisional.matrix_unit(k, 0, 0))).re)
        .collect();
    let shape = AlgebraShape::with_weights(sizes, weights)?;
    let embedding = Hom::from_linear_map(&shape, ambient, embed_full, 1e-7)?;
    let image = embedding.image(tol);
    let dist = image.distance(sub);
    if image.dim() != sub.dim() || dist > 1e-7 {
        return Err(Error::Invalid(format!("decomposition does not reproduce the subalgebra (distance {dist:.3e})")));
    }
    Ok(Wedderburn { shape, embedding, multiplicities: blocks.iter().map(|b| b.mult).collect() })
}

fn algebra_from_matrices(gens: &[CMatrix], tol: f64) -> usize {
    numkit::algebra_closure(gens, tol).map(|s| s.dim()).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tensor_inclusion(d: usize, k: usize, extra: usize) -> Hom {
        // x -> x ⊗ 1 via the shuffle that moves the identity factor outermost.
        let src = AlgebraShape::matrix(d.pow(k as u32)).unwrap();
        let tgt = AlgebraShape::matrix(d.pow((k + extra) as u32)).unwrap();
        let m = d.pow(extra as u32);
        let n = d.pow(k as u32);
        Hom::from_linear_map(
            &src,
            &tgt,
            |x| AlgElement::from_blocks(&tgt, vec![numkit::kron(x.block(0), &CMatrix::identity(m, m))]).unwrap(),
            1e-10,
        )
        .map(|h| {
            assert_eq!(h.multiplicity()[0][0], m);
            let _ = n;
            h
        })
        .unwrap()
    }

    #[test]
    fn identity_hom_is_identity() {
        let s = AlgebraShape::new(vec![2, 1]).unwrap();
        let id = Hom::identity(&s);
        for e in s.basis() {
            assert!(id.apply(&e).dist(&e) < 1e-15);
        }
        assert!(id.is_trace_preserving(1e-12));
        assert!(id.is_isomorphism());
    }

    #[test]
    fn non_unital_multiplicity_rejected() {
        let a = AlgebraShape::matrix(2).unwrap();
        let b = AlgebraShape::matrix(4).unwrap();
        let err = Hom::new(a, b.clone(), vec![vec![1]], AlgElement::identity(&b), 1e-9).unwrap_err();
        assert!(matches!(err, Error::NotHomomorphism(_)));
    }

    #[test]
    fn diagonal_m2_into_m4_preserves_normalised_trace() {
        let a = AlgebraShape::matrix(2).unwrap();
        let b = AlgebraShape::matrix(4).unwrap();
        let h = Hom::new(a, b.clone(), vec![vec![2]], AlgElement::identity(&b), 1e-9).unwrap();
        assert!(h.is_trace_preserving(1e-12));
        assert!(h.is_injective());
    }

    #[test]
    fn trace_defect_detected_for_unnormalised_target() {
        let a = AlgebraShape::matrix(2).unwrap();
        let b = AlgebraShape::with_weights(vec![4], vec![1.0]).unwrap();
        let h = Hom::new(a, b.clone(), vec![vec![2]], AlgElement::identity(&b), 1e-9).unwrap();
        assert!(!h.is_trace_preserving(1e-9));
    }

    #[test]
    fn composition_matches_pointwise() {
        let h1 = tensor_inclusion(2, 1, 1);
        let h2 = tensor_inclusion(2, 2, 1);
        let comp = h2.compose(&h1).unwrap();
        for e in h1.source().basis() {
            assert!(comp.apply(&e).dist(&h2.apply(&h1.apply(&e))) < 1e-12);
        }
        assert_eq!(comp.multiplicity()[0][0], 4);
    }

    #[test]
    fn linear_map_that_is_not_multiplicative_rejected() {
        let a = AlgebraShape::matrix(2).unwrap();
        let res = Hom::from_linear_map(&a, &a, |x| x.transpose(), 1e-9);
        assert!(res.is_err());
    }

    #[test]
    fn pull_back_inverts_on_image() {
        let h = tensor_inclusion(2, 1, 1);
        let x = AlgebraShape::matrix(2).unwrap().matrix_unit(0, 0, 1);
        assert!(h.pull_back(&h.apply(&x)).unwrap().dist(&x) < 1e-12);
        let outside = h.target().matrix_unit(0, 0, 1);
        assert!(h.pull_back(&outside).is_err());
    }

    #[test]
    fn wedderburn_of_zz_fixed_points() {
        let m4 = AlgebraShape::matrix(4).unwrap();
        let zz = CMatrix::from_diagonal(&CVector::from_vec(vec![c(1., 0.), c(-1., 0.), c(-1., 0.), c(1., 0.)]));
        let ad = Hom::inner(&m4, AlgElement::from_blocks(&m4, vec![zz]).unwrap(), 1e-12).unwrap();
        let fixed = fixed_point_subalgebra(&m4, &[ad], DEFAULT_TOL).unwrap();
        assert_eq!(fixed.dim(), 8);
        let w = wedderburn(&m4, &fixed, DEFAULT_TOL).unwrap();
        assert_eq!(w.shape.blocks(), &[2, 2]);
        assert!(w.embedding.is_trace_preserving(1e-9));
    }

    #[test]
    fn wedderburn_rejects_non_algebra() {
        let m2 = AlgebraShape::matrix(2).unwrap();
        let sub = Subspace::span(
            4,
            &[AlgElement::identity(&m2).to_vector(), m2.matrix_unit(0, 0, 1).to_vector()],
            DEFAULT_TOL,
        );
        let err = wedderburn(&m2, &sub, DEFAULT_TOL).unwrap_err();
        assert!(format!("{err}").contains("basis elements"));
    }
}

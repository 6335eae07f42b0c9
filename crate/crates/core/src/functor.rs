//! AQFT nets as inputs, the double functor they define, and the checks run
//! against it: square typing, comparator coherence, the Haag-Kastler
//! axioms, the union-join property and vertical transformations.

use std::cell::RefCell;
use std::collections::HashMap;

use crate::corr::{self, CheckBasis, Correspondence, IntertwinerCell};
use crate::dbl::SquareAlgebra;
use crate::error::{Error, Result};
use crate::l2::{self, left_mul_columns};
use crate::mink::{EmbeddingArrow, MinkCategory, SpacetimeSquare};
use crate::numkit::{self, fro_norm, CMatrix, Subspace};
use crate::vna::{self, AlgElement, AlgebraShape, Hom};

/// One line of a check report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRecord {
    pub name: String,
    /// The property being checked, in words.
    pub property: String,
    pub passed: bool,
    pub residual: f64,
    /// Number of instances examined.
    pub checked: usize,
    pub witness: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub records: Vec<CheckRecord>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.records.iter().all(|r| r.passed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckRecord> {
        self.records.iter().filter(|r| !r.passed)
    }

    pub fn extend(&mut self, other: Report) {
        self.records.extend(other.records);
    }

    pub fn push(&mut self, r: CheckRecord) {
        self.records.push(r);
    }
}

/// Accumulates the worst residual and the first failing instance of a check.
#[derive(Debug, Clone)]
pub struct Tally {
    name: String,
    property: String,
    tol: f64,
    residual: f64,
    checked: usize,
    failed: bool,
    witness: Option<String>,
}

impl Tally {
    pub fn new(name: &str, property: &str, tol: f64) -> Self {
        Self {
            name: name.into(),
            property: property.into(),
            tol,
            residual: 0.0,
            checked: 0,
            failed: false,
            witness: None,
        }
    }

    /// Records a residual; `witness` is only evaluated on the first failure.
    pub fn observe(&mut self, residual: f64, witness: impl FnOnce() -> String) {
        self.checked += 1;
        if residual > self.residual || residual.is_nan() {
            self.residual = residual;
        }
        if !(residual <= self.tol) && !self.failed {
            self.failed = true;
            self.witness = Some(witness());
        }
    }

    /// Records a boolean outcome.
    pub fn observe_bool(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.observe(if ok { 0.0 } else { f64::INFINITY }, witness);
    }

    pub fn fail(&mut self, witness: String) {
        self.checked += 1;
        self.residual = f64::INFINITY;
        if !self.failed {
            self.failed = true;
            self.witness = Some(witness);
        }
    }

    pub fn finish(self) -> CheckRecord {
        CheckRecord {
            name: self.name,
            property: self.property,
            passed: !self.failed,
            residual: if self.residual.is_finite() { self.residual } else { f64::INFINITY },
            checked: self.checked,
            witness: self.witness,
        }
    }
}

/// A region with a cover by subregions, for additivity checks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cover {
    pub region: usize,
    pub parts: Vec<usize>,
}

/// A net on a discrete spacetime: algebras per region, homs per
/// horizontal arrow (inclusions are the identity-symmetry arrows).
#[derive(Debug, Clone)]
pub struct NetInput {
    pub name: String,
    pub mink: MinkCategory,
    pub algebras: Vec<AlgebraShape>,
    /// Indexed like `mink.h_arrows`.
    pub arrows: Vec<Hom>,
    /// Inclusion ids declared to be Cauchy; expected to map to isomorphisms.
    pub cauchy_class: Vec<usize>,
    pub covers: Vec<Cover>,
    /// Commutators below this bound count as vanishing; zero demands exact cancellation.
    pub locality_tol: f64,
}

impl NetInput {
    pub fn algebra(&self, u: usize) -> &AlgebraShape {
        &self.algebras[u]
    }

    pub fn arrow(&self, a: usize) -> &Hom {
        &self.arrows[a]
    }

    pub fn hom_of(&self, a: &EmbeddingArrow) -> Result<&Hom> {
        let id = self
            .mink
            .h_arrow_id(a)
            .ok_or_else(|| Error::NotComposable(format!("no arrow {}", self.mink.arrow_name(a))))?;
        Ok(&self.arrows[id])
    }

    /// `A(U ⊆ V)` for an inclusion id.
    pub fn inclusion(&self, v: usize) -> &Hom {
        let a = self.mink.inclusion_arrow(v);
        &self.arrows[self.mink.h_arrow_id(&a).expect("inclusions are horizontal arrows")]
    }

    pub fn inclusion_between(&self, small: usize, big: usize) -> Result<&Hom> {
        let v = self.mink.inclusion_id(small, big).ok_or_else(|| {
            Error::Region(format!("{} is not inside {}", self.mink.regions[small].name(), self.mink.regions[big].name()))
        })?;
        Ok(self.inclusion(v))
    }
}

/// Checks shapes, trace preservation, injectivity, identities and
/// composition of every assigned hom.
pub fn validate_net_input(n: &NetInput, tol: f64) -> Report {
    let m = &n.mink;
    let mut typing = Tally::new("net.typing", "each arrow hom goes between the assigned algebras", tol);
    let mut trace = Tally::new("net.trace", "each arrow hom preserves the traces", tol);
    let mut inj = Tally::new("net.injective", "each arrow hom is injective", tol);
    let mut ident = Tally::new("net.identities", "identity arrows map to identity homs", tol);
    let mut comp = Tally::new("net.composition", "composite arrows map to composite homs", tol);
    if n.algebras.len() != m.regions.len() || n.arrows.len() != m.h_arrows.len() {
        typing.fail("assignment does not cover every region and arrow".into());
        let mut r = Report::default();
        r.push(typing.finish());
        return r;
    }
    for (k, a) in m.h_arrows.iter().enumerate() {
        let h = &n.arrows[k];
        let ok = h.source().approx_eq(&n.algebras[a.source], tol) && h.target().approx_eq(&n.algebras[a.target], tol);
        typing.observe_bool(ok, || m.arrow_name(a));
        trace.observe(h.trace_defect(), || m.arrow_name(a));
        inj.observe_bool(h.is_injective(), || m.arrow_name(a));
    }
    if typing.failed {
        let mut r = Report::default();
        r.push(typing.finish());
        return r;
    }
    for u in 0..m.regions.len() {
        let id = n.hom_of(&m.identity_arrow(u)).expect("identity arrow");
        ident.observe(id.distance(&Hom::identity(&n.algebras[u])), || m.regions[u].name());
    }
    let mut from: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, a) in m.h_arrows.iter().enumerate() {
        from.entry(a.source).or_default().push(k);
    }
    for (f, af) in m.h_arrows.iter().enumerate() {
        for &g in from.get(&af.target).map(Vec::as_slice).unwrap_or(&[]) {
            let ag = &m.h_arrows[g];
            let composite = m.compose(ag, af).expect("composable");
            let Ok(lhs) = n.hom_of(&composite) else {
                comp.fail(format!("composite {} is not an arrow", m.arrow_name(&composite)));
                continue;
            };
            match n.arrows[g].compose(&n.arrows[f]) {
                Ok(rhs) => comp.observe(lhs.distance(&rhs), || {
                    format!("{} after {}", m.arrow_name(ag), m.arrow_name(af))
                }),
                Err(e) => comp.fail(format!("{} after {}: {e}", m.arrow_name(ag), m.arrow_name(af))),
            }
        }
    }
    let mut r = Report::default();
    for t in [typing, trace, inj, ident, comp] {
        r.push(t.finish());
    }
    r
}

/// `L²(ψ ∘ φ) = L²(ψ) L²(φ)` on every composable pair of arrow homs and
/// `L²(id) = 1` on every region.
pub fn check_l2_functoriality(n: &NetInput, tol: f64) -> Result<Report> {
    let m = &n.mink;
    let mut ident = Tally::new("l2.identity", "the standard-form map of an identity is the identity", tol);
    let mut comp = Tally::new("l2.composition", "standard-form maps compose like the homs", tol);
    for (u, shape) in n.algebras.iter().enumerate() {
        let d = shape.dim();
        let t = l2::l2_map(&Hom::identity(shape));
        ident.observe((t - CMatrix::identity(d, d)).camax(), || m.regions[u].name());
    }
    let maps: Vec<CMatrix> = n.arrows.iter().map(l2::l2_map).collect();
    let mut from: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, a) in m.h_arrows.iter().enumerate() {
        from.entry(a.source).or_default().push(k);
    }
    for (f, af) in m.h_arrows.iter().enumerate() {
        for &g in from.get(&af.target).map(Vec::as_slice).unwrap_or(&[]) {
            let composite = n.arrows[g].compose(&n.arrows[f])?;
            let res = (l2::l2_map(&composite) - numkit::matmul(&maps[g], &maps[f])).camax();
            comp.observe(res, || format!("{} after {}", m.arrow_name(&m.h_arrows[g]), m.arrow_name(af)));
        }
    }
    let mut r = Report::default();
    r.push(ident.finish());
    r.push(comp.finish());
    Ok(r)
}

/// Image of a square as its boundary homs `(A(h), A(h'), A(i), A(j))`. The
/// cell `L²(A(j))` and both correspondences are functions of this data.
#[derive(Debug, Clone)]
pub struct HomSquare {
    pub top: Hom,
    pub bottom: Hom,
    pub left: Hom,
    pub right: Hom,
}

/// Pasting of [`HomSquare`]s by composing boundary homs.
#[derive(Debug, Clone, Copy, Default)]
pub struct HomSquares;

impl SquareAlgebra for HomSquares {
    type Value = HomSquare;

    fn compose_v(&self, upper: &HomSquare, lower: &HomSquare) -> Result<HomSquare> {
        if lower.bottom.distance(&upper.top) > numkit::DEFAULT_TOL {
            return Err(Error::NotComposable("vertical pasting along different arrows".into()));
        }
        Ok(HomSquare {
            top: lower.top.clone(),
            bottom: upper.bottom.clone(),
            left: upper.left.compose(&lower.left)?,
            right: upper.right.compose(&lower.right)?,
        })
    }

    fn compose_h(&self, right: &HomSquare, left: &HomSquare) -> Result<HomSquare> {
        if left.right.distance(&right.left) > numkit::DEFAULT_TOL {
            return Err(Error::NotComposable("horizontal pasting along different arrows".into()));
        }
        Ok(HomSquare {
            top: right.top.compose(&left.top)?,
            bottom: right.bottom.compose(&left.bottom)?,
            left: left.left.clone(),
            right: right.right.clone(),
        })
    }

    fn distance(&self, a: &HomSquare, b: &HomSquare) -> f64 {
        [(&a.top, &b.top), (&a.bottom, &b.bottom), (&a.left, &b.left), (&a.right, &b.right)]
            .iter()
            .map(|(x, y)| x.distance(y))
            .fold(0.0, f64::max)
    }
}

/// The double functor of a net: regions to algebras, horizontal arrows to
/// restricted standard forms, squares to standard-form operators.
#[derive(Debug)]
pub struct AqftDoubleFunctor<'a> {
    net: &'a NetInput,
    tol: f64,
    unit_cell_cache: RefCell<HashMap<usize, f64>>,
    right_cache: RefCell<HashMap<usize, f64>>,
}

/// Per-square residuals of the two module identities.
#[derive(Debug, Clone, Default)]
pub struct BimodularityReport {
    pub squares: usize,
    pub max_left: f64,
    pub max_right: f64,
    /// Worst violation of the unit-cell step `T λ(x) = λ(A(j)x) T`.
    pub max_unit_step: f64,
    /// Worst violation of `A(j) ∘ A(h) = A(h') ∘ A(i)`.
    pub max_commutation: f64,
    pub left_failures: Vec<String>,
    pub right_failures: Vec<String>,
}

impl BimodularityReport {
    /// Left identity as obtained along the proof route.
    pub fn max_left_derived(&self) -> f64 {
        self.max_unit_step.max(self.max_commutation)
    }

    pub fn to_records(&self, tol: f64) -> Vec<CheckRecord> {
        let rec = |name: &str, property: &str, residual: f64, fails: &[String]| CheckRecord {
            name: name.into(),
            property: property.into(),
            passed: residual <= tol,
            residual,
            checked: self.squares,
            witness: fails.first().cloned(),
        };
        vec![
            rec("squares.right_module", "T(ξ·b) = T(ξ)·A(j)(b) on every square", self.max_right, &self.right_failures),
            rec("squares.left_module", "T(a·ξ) = A(i)(a)·T(ξ) on every square", self.max_left, &self.left_failures),
            rec(
                "squares.left_module_derived",
                "left identity via the unit cell of A(j) and A(j)A(h) = A(h')A(i)",
                self.max_left_derived(),
                &self.left_failures,
            ),
        ]
    }
}

/// Builds the functor after gating every arrow through trace preservation.
pub fn build_functor(net: &NetInput, tol: f64) -> Result<AqftDoubleFunctor<'_>> {
    for h in &net.arrows {
        let d = h.trace_defect();
        if d > tol {
            return Err(Error::NotTracePreserving { residual: d });
        }
    }
    if net.algebras.len() != net.mink.regions.len() || net.arrows.len() != net.mink.h_arrows.len() {
        return Err(Error::Dimension("net does not assign every region and arrow".into()));
    }
    Ok(AqftDoubleFunctor {
        net,
        tol,
        unit_cell_cache: RefCell::new(HashMap::new()),
        right_cache: RefCell::new(HashMap::new()),
    })
}

impl<'a> AqftDoubleFunctor<'a> {
    pub fn net(&self) -> &NetInput {
        self.net
    }

    pub fn obj_map(&self, u: usize) -> &AlgebraShape {
        &self.net.algebras[u]
    }

    pub fn vert_map(&self, v: usize) -> &Hom {
        self.net.inclusion(v)
    }

    /// `L²(A(V))` with the left action restricted along `A(h)`.
    pub fn horiz_map(&self, h: usize) -> Result<Correspondence> {
        let a = self.net.mink.h_arrows[h];
        Correspondence::identity(&self.net.algebras[a.target]).restrict_left(&self.net.arrows[h])
    }

    pub fn hom_square(&self, sq: &SpacetimeSquare) -> HomSquare {
        HomSquare {
            top: self.net.arrows[sq.top].clone(),
            bottom: self.net.arrows[sq.bottom].clone(),
            left: self.vert_map(sq.left).clone(),
            right: self.vert_map(sq.right).clone(),
        }
    }

    /// The cell `L²(A(j)): F(h) -> F(h')` with boundaries `(A(i), A(j))`.
    pub fn square_map(&self, sq: &SpacetimeSquare) -> Result<IntertwinerCell> {
        let j = self.vert_map(sq.right);
        IntertwinerCell::unchecked(
            self.horiz_map(sq.top)?,
            self.horiz_map(sq.bottom)?,
            self.vert_map(sq.left).clone(),
            j.clone(),
            l2::l2_map(j),
        )
    }

    /// `|| L²(φ) λ(x) - λ(φ x) L²(φ) ||` over generators `x`, cached per inclusion.
    fn unit_step(&self, v: usize) -> f64 {
        if let Some(&r) = self.unit_cell_cache.borrow().get(&v) {
            return r;
        }
        let phi = self.vert_map(v);
        let t = l2::l2_map(phi);
        let src = corr::Action::StandardLeft(phi.source().clone());
        let tgt = corr::Action::StandardLeft(phi.target().clone());
        let r = corr::intertwining_residual(&t, &src, &tgt, phi, CheckBasis::Generators);
        self.unit_cell_cache.borrow_mut().insert(v, r);
        r
    }

    fn right_residual(&self, sq: &SpacetimeSquare, cell: &IntertwinerCell) -> f64 {
        if let Some(&r) = self.right_cache.borrow().get(&sq.right) {
            return r;
        }
        let r = corr::right_intertwining_residual(
            cell.operator(),
            cell.source(),
            cell.target(),
            cell.right_boundary(),
            CheckBasis::Generators,
        );
        self.right_cache.borrow_mut().insert(sq.right, r);
        r
    }

    /// Both module identities on every square. The left identity is checked
    /// directly, and separately along the derivation `T(a·ξ) = A(j)(A(h)a) T(ξ)
    /// = A(h')(A(i)a) T(ξ)`.
    pub fn check_bimodularity(&self) -> Result<BimodularityReport> {
        let m = &self.net.mink;
        let mut rep = BimodularityReport::default();
        for sq in &m.squares {
            let cell = self.square_map(sq)?;
            let left = corr::intertwining_residual(
                cell.operator(),
                cell.source().left_action(),
                cell.target().left_action(),
                cell.left_boundary(),
                CheckBasis::Generators,
            );
            let right = self.right_residual(sq, &cell);
            let step = self.unit_step(sq.right);
            let (h, hp) = (&self.net.arrows[sq.top], &self.net.arrows[sq.bottom]);
            let (i, j) = (self.vert_map(sq.left), self.vert_map(sq.right));
            let commute = h
                .source()
                .generators()
                .iter()
                .map(|a| j.apply(&h.apply(a)).dist(&hp.apply(&i.apply(a))))
                .fold(0.0, f64::max);
            rep.squares += 1;
            rep.max_left = rep.max_left.max(left);
            rep.max_right = rep.max_right.max(right);
            rep.max_unit_step = rep.max_unit_step.max(step);
            rep.max_commutation = rep.max_commutation.max(commute);
            if left > self.tol || commute > self.tol {
                rep.left_failures.push(format!("{} (left {left:.3e}, commutation {commute:.3e})", m.square_name(sq)));
            }
            if right > self.tol {
                rep.right_failures.push(format!("{} (right {right:.3e})", m.square_name(sq)));
            }
        }
        Ok(rep)
    }

    /// The unitary `F(h) ⊠ F(k) -> F(k ∘ h)` induced by `bΩ ⊗ η -> A(k)(b) η`.
    pub fn composition_comparator(&self, h: usize, k: usize) -> Result<IntertwinerCell> {
        let m = &self.net.mink;
        let (ah, ak) = (m.h_arrows[h], m.h_arrows[k]);
        let composite = m.compose(&ak, &ah)?;
        let kh = m
            .h_arrow_id(&composite)
            .ok_or_else(|| Error::NotComposable(format!("no arrow {}", m.arrow_name(&composite))))?;
        let fh = self.horiz_map(h)?;
        let fk = self.horiz_map(k)?;
        let unitor = corr::left_unitor(&fk, self.tol)?;
        let fused = corr::fuse(&fh, &fk, self.tol)?;
        let target = self.horiz_map(kh)?;
        let cell = IntertwinerCell::unchecked(
            fused.corr,
            target,
            Hom::identity(&self.net.algebras[ah.source]),
            Hom::identity(&self.net.algebras[ak.target]),
            unitor.operator().clone(),
        )?;
        let res = cell.residuals(CheckBasis::Generators);
        if res.max() > self.tol {
            return Err(Error::BoundaryMismatch(format!(
                "comparator is not bimodular: left {:.3e}, right {:.3e}",
                res.left, res.right
            )));
        }
        if !cell.is_unitary(self.tol) {
            return Err(Error::NotUnitary { residual: numkit::unitary_residual(cell.operator()) });
        }
        Ok(cell)
    }

    /// `|| φ_{l,kh} (φ_{k,h} ⊠ 1) - φ_{lk,h} (1 ⊠ φ_{l,k}) α ||` for a composable triple.
    pub fn coherence_residual(&self, h: usize, k: usize, l: usize) -> Result<f64> {
        let m = &self.net.mink;
        let (ah, ak, al) = (m.h_arrows[h], m.h_arrows[k], m.h_arrows[l]);
        let kh = m.h_arrow_id(&m.compose(&ak, &ah)?).ok_or_else(|| Error::NotComposable("k∘h".into()))?;
        let lk = m.h_arrow_id(&m.compose(&al, &ak)?).ok_or_else(|| Error::NotComposable("l∘k".into()))?;
        let (fh, fk, fl) = (self.horiz_map(h)?, self.horiz_map(k)?, self.horiz_map(l)?);
        let tol = self.tol;
        let lhs_inner = corr::fuse_cells(&self.composition_comparator(h, k)?, &IntertwinerCell::identity(&fl), tol)?;
        let lhs = self.composition_comparator(kh, l)?.operator() * lhs_inner.operator();
        let alpha = corr::associator(&fh, &fk, &fl, tol)?;
        let mid = corr::fuse_cells(&IntertwinerCell::identity(&fh), &self.composition_comparator(k, l)?, tol)?;
        let rhs = self.composition_comparator(h, lk)?.operator() * mid.operator() * alpha.operator();
        if lhs.shape() != rhs.shape() {
            return Err(Error::Dimension("coherence sides have different shapes".into()));
        }
        Ok(fro_norm(&(lhs - rhs)))
    }
}

/// Regions containing both `u` and `v`.
fn common_ambients(m: &MinkCategory, u: usize, v: usize) -> Vec<usize> {
    (0..m.regions.len())
        .filter(|&t| m.regions[u].is_subset(&m.regions[t]) && m.regions[v].is_subset(&m.regions[t]))
        .collect()
}

/// Isotony, locality, covariance, time-slice and additivity.
pub fn check_hk(net: &NetInput, tol: f64) -> Result<Report> {
    let m = &net.mink;
    let mut report = Report::default();

    let mut hk1 = Tally::new("hk1.isotony", "inclusions map to injective unital *-homomorphisms", tol);
    for v in 0..m.v_arrows.len() {
        let h = net.inclusion(v);
        hk1.observe_bool(h.is_injective(), || m.inclusion_name(v));
    }
    report.push(hk1.finish());

    let loc_tol = net.locality_tol;
    let mut hk2 = Tally::new("hk2.locality", "represented algebras of disjoint regions commute in λ_T", loc_tol);
    let mut hk2a = Tally::new("hk2.locality_abstract", "the same commutators vanish in A(T)", loc_tol);
    for u in 0..m.regions.len() {
        for v in u + 1..m.regions.len() {
            for t in common_ambients(m, u, v) {
                if !m.is_causally_disjoint(u, v, t) {
                    continue;
                }
                let shape = &net.algebras[t];
                let sf = l2::StandardForm::new(shape);
                let iu = net.inclusion_between(u, t)?;
                let iv = net.inclusion_between(v, t)?;
                let xs: Vec<AlgElement> = iu.source().generators().iter().map(|g| iu.apply(g)).collect();
                let ys: Vec<AlgElement> = iv.source().generators().iter().map(|g| iv.apply(g)).collect();
                let lam_x: Vec<CMatrix> = xs.iter().map(|x| sf.left(x)).collect();
                for y in &ys {
                    let lam_y = sf.left(y);
                    for (x, lx) in xs.iter().zip(&lam_x) {
                        let represented = left_mul_columns(shape, x, &lam_y) - left_mul_columns(shape, y, lx);
                        let name = || {
                            format!(
                                "{} and {} inside {}",
                                m.regions[u].name(),
                                m.regions[v].name(),
                                m.regions[t].name()
                            )
                        };
                        hk2.observe(represented.camax(), name);
                        hk2a.observe(x.commutator(y).norm(), name);
                    }
                }
            }
        }
    }
    report.push(hk2.finish());
    report.push(hk2a.finish());

    let mut hk3 = Tally::new("hk3.covariance", "symmetry bijections map to *-isomorphisms, functorially", tol);
    let bij: Vec<usize> = (0..m.h_arrows.len()).filter(|&k| m.is_bijective(&m.h_arrows[k])).collect();
    for &k in &bij {
        hk3.observe_bool(net.arrows[k].is_isomorphism(), || m.arrow_name(&m.h_arrows[k]));
    }
    for &f in &bij {
        for &g in &bij {
            let (af, ag) = (m.h_arrows[f], m.h_arrows[g]);
            if af.target != ag.source {
                continue;
            }
            let c = m.compose(&ag, &af)?;
            let lhs = net.hom_of(&c)?;
            let rhs = net.arrows[g].compose(&net.arrows[f])?;
            hk3.observe(lhs.distance(&rhs), || format!("{} after {}", m.arrow_name(&ag), m.arrow_name(&af)));
        }
    }
    report.push(hk3.finish());

    let mut hk4 = Tally::new("hk4.time_slice", "Cauchy inclusions map to isomorphisms (vacuous if none)", tol);
    for &v in &net.cauchy_class {
        hk4.observe_bool(net.inclusion(v).is_isomorphism(), || m.inclusion_name(v));
    }
    report.push(hk4.finish());

    let mut hk5 = Tally::new("hk5.additivity", "each declared cover generates the algebra of its region", tol);
    for cover in &net.covers {
        let res = cover_defect(net, cover, tol)?;
        hk5.observe(res.0, || res.1.clone());
    }
    report.push(hk5.finish());
    Ok(report)
}

/// Distance between the generated algebra of a cover and `A(U)`, with a
/// dimension witness.
pub fn cover_defect(net: &NetInput, cover: &Cover, tol: f64) -> Result<(f64, String)> {
    let m = &net.mink;
    let shape = &net.algebras[cover.region];
    let mut parts = Vec::with_capacity(cover.parts.len());
    for &p in &cover.parts {
        parts.push(net.inclusion_between(p, cover.region)?.image(tol));
    }
    let gen = vna::generated_subalgebra(shape, &parts, tol)?;
    let full = Subspace::full(shape.dim());
    let names: Vec<String> = cover.parts.iter().map(|&p| m.regions[p].name()).collect();
    Ok((
        gen.distance(&full),
        format!(
            "{} covered by [{}]: generated dimension {} of {}",
            m.regions[cover.region].name(),
            names.join(", "),
            gen.dim(),
            shape.dim()
        ),
    ))
}

/// `A(U ∪ V) = A(U) ∨ A(V)` inside `A(T)`, as a projector distance.
pub fn check_union_join(net: &NetInput, u: usize, v: usize, t: usize, tol: f64) -> Result<f64> {
    let m = &net.mink;
    let mut pts: Vec<usize> = m.regions[u].points().to_vec();
    pts.extend_from_slice(m.regions[v].points());
    pts.sort_unstable();
    pts.dedup();
    let w = m.region_id(&pts).ok_or_else(|| {
        Error::Region(format!("{} ∪ {} is not a region", m.regions[u].name(), m.regions[v].name()))
    })?;
    let shape = &net.algebras[t];
    let join = vna::generated_subalgebra(
        shape,
        &[net.inclusion_between(u, t)?.image(tol), net.inclusion_between(v, t)?.image(tol)],
        tol,
    )?;
    Ok(join.distance(&net.inclusion_between(w, t)?.image(tol)))
}

/// [`check_union_join`] for every pair of regions whose union is a region,
/// inside every region containing that union.
pub fn check_union_joins(net: &NetInput, tol: f64) -> Result<Report> {
    let m = &net.mink;
    let mut tally = Tally::new("union_join", "A(U ∪ V) is the algebra generated by A(U) and A(V)", tol);
    for u in 0..m.regions.len() {
        for v in u + 1..m.regions.len() {
            let mut pts: Vec<usize> = m.regions[u].points().iter().chain(m.regions[v].points()).copied().collect();
            pts.sort_unstable();
            pts.dedup();
            let Some(w) = m.region_id(&pts) else { continue };
            for t in 0..m.regions.len() {
                if m.inclusion_id(w, t).is_none() {
                    continue;
                }
                let res = check_union_join(net, u, v, t, tol)?;
                tally.observe(res, || {
                    format!("{} ∪ {} inside {}", m.regions[u].name(), m.regions[v].name(), m.regions[t].name())
                });
            }
        }
    }
    let mut r = Report::default();
    r.push(tally.finish());
    Ok(r)
}

/// Components `η_U: A(U) -> B(U)` of a natural transformation between nets
/// on the same spacetime.
#[derive(Debug, Clone)]
pub struct NaturalTransformationData<'a> {
    pub source: &'a NetInput,
    pub target: &'a NetInput,
    pub components: Vec<Hom>,
}

/// The vertical transformation `F_η`: one cell `L²(η_V): F_A(h) -> F_B(h)`
/// per horizontal arrow.
#[derive(Debug, Clone)]
pub struct VerticalTransformation {
    pub cells: Vec<IntertwinerCell>,
}

fn transformation_cell(d: &NaturalTransformationData<'_>, h: usize) -> Result<IntertwinerCell> {
    let a = d.source.mink.h_arrows[h];
    let fa = Correspondence::identity(&d.source.algebras[a.target]).restrict_left(&d.source.arrows[h])?;
    let fb = Correspondence::identity(&d.target.algebras[a.target]).restrict_left(&d.target.arrows[h])?;
    let eta_v = &d.components[a.target];
    IntertwinerCell::unchecked(fa, fb, d.components[a.source].clone(), eta_v.clone(), l2::l2_map(eta_v))
}

/// Builds `F_η` and checks component trace preservation, naturality, cell
/// typing and square naturality. Naturality failures name the arrow.
pub fn build_vertical_transformation(d: &NaturalTransformationData<'_>, tol: f64) -> Result<(VerticalTransformation, Report)> {
    let m = &d.source.mink;
    if d.components.len() != m.regions.len() || d.target.mink.h_arrows.len() != m.h_arrows.len() {
        return Err(Error::Dimension("components must be given for every region of a shared spacetime".into()));
    }
    let mut trace = Tally::new("transformation.trace", "each component preserves the traces", tol);
    let mut natural = Tally::new("transformation.naturality", "η_V ∘ A(h) = B(h) ∘ η_U for every arrow", tol);
    let mut typing = Tally::new("transformation.cell_typing", "L²(η_V) is bimodular over (η_U, η_V)", tol);
    let mut square = Tally::new(
        "transformation.square_naturality",
        "L²(η_V') L²(A(j)) = L²(B(j)) L²(η_V) for every square",
        tol,
    );
    for (u, eta) in d.components.iter().enumerate() {
        let shapes_ok = eta.source().approx_eq(&d.source.algebras[u], tol) && eta.target().approx_eq(&d.target.algebras[u], tol);
        if !shapes_ok {
            return Err(Error::BoundaryMismatch(format!("component at {} has the wrong shape", m.regions[u].name())));
        }
        trace.observe(eta.trace_defect(), || m.regions[u].name());
    }
    for (k, a) in m.h_arrows.iter().enumerate() {
        let lhs = d.components[a.target].compose(&d.source.arrows[k])?;
        let rhs = d.target.arrows[k].compose(&d.components[a.source])?;
        natural.observe(lhs.distance(&rhs), || m.arrow_name(a));
    }
    let mut cells = Vec::with_capacity(m.h_arrows.len());
    for (k, a) in m.h_arrows.iter().enumerate() {
        let cell = transformation_cell(d, k)?;
        typing.observe(cell.residuals(CheckBasis::Generators).max(), || m.arrow_name(a));
        cells.push(cell);
    }
    // Square naturality only involves the right inclusion j of a square.
    let mut by_right: HashMap<usize, f64> = HashMap::new();
    for sq in &m.squares {
        let r = match by_right.get(&sq.right) {
            Some(&r) => r,
            None => {
                let (small, big) = m.v_arrows[sq.right];
                let lhs = numkit::matmul(&l2::l2_map(&d.components[big]), &l2::l2_map(d.source.inclusion(sq.right)));
                let rhs = numkit::matmul(&l2::l2_map(d.target.inclusion(sq.right)), &l2::l2_map(&d.components[small]));
                let r = fro_norm(&(lhs - rhs));
                by_right.insert(sq.right, r);
                r
            }
        };
        square.observe(r, || m.square_name(sq));
    }
    let mut report = Report::default();
    for t in [trace, natural, typing, square] {
        report.push(t.finish());
    }
    Ok((VerticalTransformation { cells }, report))
}

/// `F_{θ∘η} = F_θ ∘ F_η` cellwise, and `F_id` is the identity.
pub fn check_transformation_laws(
    eta: &NaturalTransformationData<'_>,
    theta: &NaturalTransformationData<'_>,
    tol: f64,
) -> Result<Report> {
    let m = &eta.source.mink;
    let mut ident = Tally::new("transformation.identity_law", "F_id has identity cells", tol);
    let id_data = NaturalTransformationData {
        source: eta.source,
        target: eta.source,
        components: eta.source.algebras.iter().map(Hom::identity).collect(),
    };
    for (k, a) in m.h_arrows.iter().enumerate() {
        let cell = transformation_cell(&id_data, k)?;
        let n = cell.operator().nrows();
        ident.observe(fro_norm(&(cell.operator() - CMatrix::identity(n, n))), || m.arrow_name(a));
    }
    let composed = NaturalTransformationData {
        source: eta.source,
        target: theta.target,
        components: theta
            .components
            .iter()
            .zip(&eta.components)
            .map(|(t, e)| t.compose(e))
            .collect::<Result<_>>()?,
    };
    let mut comp = Tally::new("transformation.composition_law", "F_{θ∘η} = F_θ ∘ F_η cellwise", tol);
    for (k, a) in m.h_arrows.iter().enumerate() {
        let stacked = IntertwinerCell::compose_vertical(&transformation_cell(theta, k)?, &transformation_cell(eta, k)?)?;
        let direct = transformation_cell(&composed, k)?;
        comp.observe(stacked.distance(&direct), || m.arrow_name(a));
    }
    let mut report = Report::default();
    report.push(ident.finish());
    report.push(comp.finish());
    Ok(report)
}

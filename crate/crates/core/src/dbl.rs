//! Double-category kernel: a generic interface, a finite thin double
//! category given by composition tables, the γ-closure of marked
//! generators, and a uniqueness-from-generators checker.
//!
//! Conventions: `compose_v(β, α)` stacks `β` on top of `α` (needs
//! `α.bottom == β.top`); `compose_h(β, α)` puts `α` on the left of `β`
//! (needs `α.right == β.left`).

use std::collections::{HashMap, HashSet, VecDeque};

use crate::corr::{self, Correspondence, IntertwinerCell};
use crate::error::{Error, Result};
use crate::vna::Hom;

/// Boundary of a square: horizontal top and bottom, vertical left and right.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Boundary<V, H> {
    pub top: H,
    pub bottom: H,
    pub left: V,
    pub right: V,
}

pub trait DoubleCategory {
    type V: Clone;
    type H: Clone;
    type Sq: Clone;

    fn left_of(&self, s: &Self::Sq) -> Self::V;
    fn right_of(&self, s: &Self::Sq) -> Self::V;
    fn is_v_identity(&self, v: &Self::V) -> bool;
    fn compose_varrows(&self, g: &Self::V, f: &Self::V) -> Result<Self::V>;
    fn compose_v(&self, upper: &Self::Sq, lower: &Self::Sq) -> Result<Self::Sq>;
    fn compose_h(&self, right: &Self::Sq, left: &Self::Sq) -> Result<Self::Sq>;
    fn unit_square(&self, f: &Self::V) -> Result<Self::Sq>;
    fn identity_square(&self, h: &Self::H) -> Result<Self::Sq>;
    fn square_distance(&self, a: &Self::Sq, b: &Self::Sq) -> f64;
}

/// Both vertical sides are identities.
pub fn is_globular<D: DoubleCategory>(cat: &D, s: &D::Sq) -> bool {
    cat.is_v_identity(&cat.left_of(s)) && cat.is_v_identity(&cat.right_of(s))
}

/// Distance between the two pastings of a 2x2 grid
/// `[[top_left, top_right], [bottom_left, bottom_right]]`.
pub fn interchange_residual<D: DoubleCategory>(
    cat: &D,
    top_left: &D::Sq,
    top_right: &D::Sq,
    bottom_left: &D::Sq,
    bottom_right: &D::Sq,
) -> Result<f64> {
    let rows_first = cat.compose_v(
        &cat.compose_h(top_right, top_left)?,
        &cat.compose_h(bottom_right, bottom_left)?,
    )?;
    let cols_first = cat.compose_h(
        &cat.compose_v(top_right, bottom_right)?,
        &cat.compose_v(top_left, bottom_left)?,
    )?;
    Ok(cat.square_distance(&rows_first, &cols_first))
}

/// `|| ι_{g∘f} - ι_g ∘ ι_f ||`.
pub fn unit_functoriality_residual<D: DoubleCategory>(cat: &D, g: &D::V, f: &D::V) -> Result<f64> {
    let composite = cat.unit_square(&cat.compose_varrows(g, f)?)?;
    let pasted = cat.compose_v(&cat.unit_square(g)?, &cat.unit_square(f)?)?;
    Ok(cat.square_distance(&composite, &pasted))
}

/// Algebras, correspondences and intertwiners with Connes fusion as
/// horizontal composition. Horizontal composition is associative only up
/// to the associator, so equalities of pasted cells hold after transport
/// along the coherence cells of [`crate::corr`].
#[derive(Debug, Clone, Copy)]
pub struct VnaDouble {
    pub tol: f64,
}

impl DoubleCategory for VnaDouble {
    type V = Hom;
    type H = Correspondence;
    type Sq = IntertwinerCell;

    fn left_of(&self, s: &IntertwinerCell) -> Hom {
        s.left_boundary().clone()
    }

    fn right_of(&self, s: &IntertwinerCell) -> Hom {
        s.right_boundary().clone()
    }

    fn is_v_identity(&self, v: &Hom) -> bool {
        v.source().approx_eq(v.target(), self.tol) && v.approx_eq(&Hom::identity(v.source()), self.tol)
    }

    fn compose_varrows(&self, g: &Hom, f: &Hom) -> Result<Hom> {
        g.compose(f)
    }

    fn compose_v(&self, upper: &IntertwinerCell, lower: &IntertwinerCell) -> Result<IntertwinerCell> {
        IntertwinerCell::compose_vertical(upper, lower)
    }

    fn compose_h(&self, right: &IntertwinerCell, left: &IntertwinerCell) -> Result<IntertwinerCell> {
        corr::fuse_cells(left, right, self.tol)
    }

    fn unit_square(&self, f: &Hom) -> Result<IntertwinerCell> {
        corr::unit_cell(f, self.tol)
    }

    fn identity_square(&self, h: &Correspondence) -> Result<IntertwinerCell> {
        Ok(IntertwinerCell::identity(h))
    }

    fn square_distance(&self, a: &IntertwinerCell, b: &IntertwinerCell) -> f64 {
        a.distance(b)
    }
}

pub type SquareId = Boundary<usize, usize>;

/// An arrow between numbered objects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArrowInfo {
    pub source: usize,
    pub target: usize,
    pub name: String,
}

/// A finite thin double category: squares are determined by their
/// boundaries, arrows are numbered, composition is tabulated.
#[derive(Debug, Clone, Default)]
pub struct FiniteThinDouble {
    pub objects: Vec<String>,
    pub v_arrows: Vec<ArrowInfo>,
    pub h_arrows: Vec<ArrowInfo>,
    pub v_identity: Vec<usize>,
    pub h_identity: Vec<usize>,
    /// `(g, f) -> g ∘ f`.
    pub v_compose: HashMap<(usize, usize), usize>,
    pub h_compose: HashMap<(usize, usize), usize>,
    pub squares: HashSet<SquareId>,
}

impl FiniteThinDouble {
    pub fn describe(&self, s: &SquareId) -> String {
        format!(
            "[top {}, bottom {}, left {}, right {}]",
            self.h_arrows[s.top].name, self.h_arrows[s.bottom].name, self.v_arrows[s.left].name, self.v_arrows[s.right].name
        )
    }

    fn v_comp(&self, g: usize, f: usize) -> Result<usize> {
        self.v_compose
            .get(&(g, f))
            .copied()
            .ok_or_else(|| Error::NotComposable(format!("{} after {}", self.v_arrows[g].name, self.v_arrows[f].name)))
    }

    fn h_comp(&self, k: usize, h: usize) -> Result<usize> {
        self.h_compose
            .get(&(k, h))
            .copied()
            .ok_or_else(|| Error::NotComposable(format!("{} after {}", self.h_arrows[k].name, self.h_arrows[h].name)))
    }

    fn require_square(&self, s: SquareId) -> Result<SquareId> {
        if self.squares.contains(&s) {
            Ok(s)
        } else {
            Err(Error::NotComposable(format!("pasted boundary {} is not a square", self.describe(&s))))
        }
    }

    /// Generators marked for γ: every globular square and every unit square.
    pub fn marked_generators(&self) -> Vec<SquareId> {
        let mut out: Vec<SquareId> = self
            .squares
            .iter()
            .filter(|s| self.is_v_identity(&s.left) && self.is_v_identity(&s.right))
            .copied()
            .collect();
        for f in 0..self.v_arrows.len() {
            if let Ok(u) = self.unit_square(&f) {
                if self.squares.contains(&u) && !out.contains(&u) {
                    out.push(u);
                }
            }
        }
        out.sort();
        out
    }

    /// Strict-law violations: unit and associativity laws of both arrow
    /// categories, closure of the square set under pasting, unit squares,
    /// and interchange. `budget` caps the number of instances per law.
    pub fn check_strict_laws(&self, budget: Option<usize>) -> Vec<String> {
        let cap = budget.unwrap_or(usize::MAX);
        let mut out = Vec::new();

        let cat_laws = |arrows: &[ArrowInfo],
                        ids: &[usize],
                        table: &HashMap<(usize, usize), usize>,
                        kind: &str,
                        out: &mut Vec<String>| {
            for (f, a) in arrows.iter().enumerate() {
                let l = table.get(&(ids[a.target], f));
                let r = table.get(&(f, ids[a.source]));
                if l != Some(&f) || r != Some(&f) {
                    out.push(format!("{kind} unit law fails at {}", a.name));
                }
            }
            let mut by_source: HashMap<usize, Vec<usize>> = HashMap::new();
            for (f, a) in arrows.iter().enumerate() {
                by_source.entry(a.source).or_default().push(f);
            }
            let mut count = 0usize;
            'outer: for (f, a) in arrows.iter().enumerate() {
                for &g in by_source.get(&a.target).map(Vec::as_slice).unwrap_or(&[]) {
                    let Some(&gf) = table.get(&(g, f)) else {
                        out.push(format!("{kind} composite of {} and {} missing", arrows[g].name, a.name));
                        continue;
                    };
                    if arrows[gf].source != a.source || arrows[gf].target != arrows[g].target {
                        out.push(format!("{kind} composite of {} and {} has the wrong ends", arrows[g].name, a.name));
                    }
                    for &h in by_source.get(&arrows[g].target).map(Vec::as_slice).unwrap_or(&[]) {
                        count += 1;
                        if count > cap {
                            break 'outer;
                        }
                        let left = table.get(&(h, g)).and_then(|&hg| table.get(&(hg, f)));
                        let right = table.get(&(h, gf));
                        if left.is_none() || left != right {
                            out.push(format!(
                                "{kind} associativity fails at ({}, {}, {})",
                                arrows[h].name, arrows[g].name, a.name
                            ));
                        }
                    }
                }
            }
        };
        cat_laws(&self.v_arrows, &self.v_identity, &self.v_compose, "vertical", &mut out);
        cat_laws(&self.h_arrows, &self.h_identity, &self.h_compose, "horizontal", &mut out);

        let mut by_top: HashMap<usize, Vec<SquareId>> = HashMap::new();
        let mut by_left: HashMap<usize, Vec<SquareId>> = HashMap::new();
        for s in &self.squares {
            by_top.entry(s.top).or_default().push(*s);
            by_left.entry(s.left).or_default().push(*s);
        }
        let mut sorted: Vec<SquareId> = self.squares.iter().copied().collect();
        sorted.sort();
        let mut count = 0usize;
        for a in &sorted {
            for b in by_top.get(&a.bottom).map(Vec::as_slice).unwrap_or(&[]) {
                count += 1;
                if count > cap {
                    break;
                }
                if let Err(e) = self.compose_v(b, a) {
                    out.push(format!("vertical pasting of {} and {}: {e}", self.describe(b), self.describe(a)));
                }
            }
            for b in by_left.get(&a.right).map(Vec::as_slice).unwrap_or(&[]) {
                count += 1;
                if count > cap {
                    break;
                }
                if let Err(e) = self.compose_h(b, a) {
                    out.push(format!("horizontal pasting of {} and {}: {e}", self.describe(a), self.describe(b)));
                }
            }
        }
        for f in 0..self.v_arrows.len() {
            match self.unit_square(&f) {
                Ok(u) if self.squares.contains(&u) => {}
                _ => out.push(format!("unit square of {} is missing", self.v_arrows[f].name)),
            }
        }
        for h in 0..self.h_arrows.len() {
            match self.identity_square(&h) {
                Ok(u) if self.squares.contains(&u) => {}
                _ => out.push(format!("identity square of {} is missing", self.h_arrows[h].name)),
            }
        }
        // Interchange on 2x2 grids anchored at each square.
        let mut count = 0usize;
        'grid: for bl in &sorted {
            for br in by_left.get(&bl.right).map(Vec::as_slice).unwrap_or(&[]) {
                for tl in by_top.get(&bl.bottom).map(Vec::as_slice).unwrap_or(&[]) {
                    for tr in by_top.get(&br.bottom).map(Vec::as_slice).unwrap_or(&[]) {
                        if tr.left != tl.right {
                            continue;
                        }
                        count += 1;
                        if count > cap {
                            break 'grid;
                        }
                        match interchange_residual(self, tl, tr, bl, br) {
                            Ok(d) if d == 0.0 => {}
                            Ok(_) => out.push(format!("interchange fails on grid anchored at {}", self.describe(bl))),
                            Err(e) => out.push(format!("interchange grid at {}: {e}", self.describe(bl))),
                        }
                    }
                }
            }
        }
        out
    }
}

impl DoubleCategory for FiniteThinDouble {
    type V = usize;
    type H = usize;
    type Sq = SquareId;

    fn left_of(&self, s: &SquareId) -> usize {
        s.left
    }

    fn right_of(&self, s: &SquareId) -> usize {
        s.right
    }

    fn is_v_identity(&self, v: &usize) -> bool {
        self.v_identity.get(self.v_arrows[*v].source) == Some(v)
    }

    fn compose_varrows(&self, g: &usize, f: &usize) -> Result<usize> {
        self.v_comp(*g, *f)
    }

    fn compose_v(&self, upper: &SquareId, lower: &SquareId) -> Result<SquareId> {
        if lower.bottom != upper.top {
            return Err(Error::NotComposable("lower bottom differs from upper top".into()));
        }
        self.require_square(Boundary {
            top: lower.top,
            bottom: upper.bottom,
            left: self.v_comp(upper.left, lower.left)?,
            right: self.v_comp(upper.right, lower.right)?,
        })
    }

    fn compose_h(&self, right: &SquareId, left: &SquareId) -> Result<SquareId> {
        if left.right != right.left {
            return Err(Error::NotComposable("left square's right side differs from right square's left side".into()));
        }
        self.require_square(Boundary {
            top: self.h_comp(right.top, left.top)?,
            bottom: self.h_comp(right.bottom, left.bottom)?,
            left: left.left,
            right: right.right,
        })
    }

    fn unit_square(&self, f: &usize) -> Result<SquareId> {
        let a = &self.v_arrows[*f];
        Ok(Boundary { top: self.h_identity[a.source], bottom: self.h_identity[a.target], left: *f, right: *f })
    }

    fn identity_square(&self, h: &usize) -> Result<SquareId> {
        let a = &self.h_arrows[*h];
        Ok(Boundary { top: *h, bottom: *h, left: self.v_identity[a.source], right: self.v_identity[a.target] })
    }

    fn square_distance(&self, a: &SquareId, b: &SquareId) -> f64 {
        if a == b {
            0.0
        } else {
            1.0
        }
    }
}

/// How a closure square was first obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Derivation {
    Generator,
    /// `compose_v(upper, lower)`, as indices into the closure.
    Vertical { upper: usize, lower: usize },
    /// `compose_h(right, left)`, as indices into the closure.
    Horizontal { left: usize, right: usize },
}

/// Result of [`gamma_closure`]: squares in discovery order, each with its
/// generator status and the first pasting that produced it (if any).
#[derive(Debug, Clone, Default)]
pub struct Closure {
    pub squares: Vec<SquareId>,
    pub is_generator: Vec<bool>,
    pub derivation: Vec<Option<Derivation>>,
    pub index: HashMap<SquareId, usize>,
}

impl Closure {
    pub fn len(&self) -> usize {
        self.squares.len()
    }

    pub fn is_empty(&self) -> bool {
        self.squares.is_empty()
    }

    pub fn contains(&self, s: &SquareId) -> bool {
        self.index.contains_key(s)
    }
}

/// Smallest set of squares containing the marked generators and closed
/// under both pastings.
pub fn gamma_closure(cat: &FiniteThinDouble) -> Result<Closure> {
    closure_of(cat, &cat.marked_generators())
}

/// Smallest set of squares containing `generators` and closed under both
/// pastings (breadth-first fixpoint).
pub fn closure_of(cat: &FiniteThinDouble, generators: &[SquareId]) -> Result<Closure> {
    #[derive(Default)]
    struct Sides {
        top: HashMap<usize, Vec<usize>>,
        bottom: HashMap<usize, Vec<usize>>,
        left: HashMap<usize, Vec<usize>>,
        right: HashMap<usize, Vec<usize>>,
    }
    fn get(m: &HashMap<usize, Vec<usize>>, k: usize) -> Vec<usize> {
        m.get(&k).cloned().unwrap_or_default()
    }
    fn insert(cl: &mut Closure, sides: &mut Sides, s: SquareId, gen: bool, der: Option<Derivation>, queue: &mut VecDeque<usize>) {
        if let Some(&k) = cl.index.get(&s) {
            if cl.derivation[k].is_none() {
                cl.derivation[k] = der;
            }
            return;
        }
        let k = cl.squares.len();
        cl.squares.push(s);
        cl.is_generator.push(gen);
        cl.derivation.push(der);
        cl.index.insert(s, k);
        sides.top.entry(s.top).or_default().push(k);
        sides.bottom.entry(s.bottom).or_default().push(k);
        sides.left.entry(s.left).or_default().push(k);
        sides.right.entry(s.right).or_default().push(k);
        queue.push_back(k);
    }

    let mut cl = Closure::default();
    let mut sides = Sides::default();
    let mut queue = VecDeque::new();
    for &g in generators {
        if !cat.squares.contains(&g) {
            return Err(Error::NotComposable(format!("generator {} is not a square", cat.describe(&g))));
        }
        insert(&mut cl, &mut sides, g, true, None, &mut queue);
    }
    while let Some(k) = queue.pop_front() {
        let s = cl.squares[k];
        let mut found: Vec<(SquareId, Derivation)> = Vec::new();
        for t in get(&sides.top, s.bottom) {
            found.push((cat.compose_v(&cl.squares[t], &s)?, Derivation::Vertical { upper: t, lower: k }));
        }
        for t in get(&sides.bottom, s.top) {
            found.push((cat.compose_v(&s, &cl.squares[t])?, Derivation::Vertical { upper: k, lower: t }));
        }
        for t in get(&sides.left, s.right) {
            found.push((cat.compose_h(&cl.squares[t], &s)?, Derivation::Horizontal { left: k, right: t }));
        }
        for t in get(&sides.right, s.left) {
            found.push((cat.compose_h(&s, &cl.squares[t])?, Derivation::Horizontal { left: t, right: k }));
        }
        for (sq, der) in found {
            let parents_differ = match der {
                Derivation::Vertical { upper, lower } => cl.squares[upper] != sq && cl.squares[lower] != sq,
                Derivation::Horizontal { left, right } => cl.squares[left] != sq && cl.squares[right] != sq,
                Derivation::Generator => true,
            };
            insert(&mut cl, &mut sides, sq, false, parents_differ.then_some(der), &mut queue);
        }
    }
    Ok(cl)
}

/// Composition laws of the target of a square assignment.
pub trait SquareAlgebra {
    type Value;
    fn compose_v(&self, upper: &Self::Value, lower: &Self::Value) -> Result<Self::Value>;
    fn compose_h(&self, right: &Self::Value, left: &Self::Value) -> Result<Self::Value>;
    fn distance(&self, a: &Self::Value, b: &Self::Value) -> f64;
}

#[derive(Debug, Clone, Default)]
pub struct UniquenessReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

impl UniquenessReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Compares two square assignments over a γ-closure: they must agree on
/// generators, and each must reproduce its own value on every derived
/// square by pasting the values of the parents. Agreement on the whole
/// closure then follows, and is checked as well.
pub fn check_generator_uniqueness<A, F, G>(
    cat: &FiniteThinDouble,
    closure: &Closure,
    alg: &A,
    f: F,
    g: G,
    tol: f64,
) -> Result<UniquenessReport>
where
    A: SquareAlgebra,
    F: Fn(&SquareId) -> Result<A::Value>,
    G: Fn(&SquareId) -> Result<A::Value>,
{
    let fv: Vec<A::Value> = closure.squares.iter().map(&f).collect::<Result<_>>()?;
    let gv: Vec<A::Value> = closure.squares.iter().map(&g).collect::<Result<_>>()?;
    let mut report = UniquenessReport::default();
    for k in 0..closure.len() {
        let name = cat.describe(&closure.squares[k]);
        report.checked += 1;
        if closure.is_generator[k] && alg.distance(&fv[k], &gv[k]) > tol {
            report.violations.push(format!("assignments disagree on generator {name}"));
        }
        if let Some(der) = closure.derivation[k] {
            for (label, vals) in [("first", &fv), ("second", &gv)] {
                let pasted = match der {
                    Derivation::Vertical { upper, lower } => alg.compose_v(&vals[upper], &vals[lower])?,
                    Derivation::Horizontal { left, right } => alg.compose_h(&vals[right], &vals[left])?,
                    Derivation::Generator => continue,
                };
                if alg.distance(&pasted, &vals[k]) > tol {
                    report.violations.push(format!("{label} assignment contradicts pasting at {name}"));
                }
            }
        }
        if !closure.is_generator[k] && alg.distance(&fv[k], &gv[k]) > tol {
            report.violations.push(format!("assignments differ at {name}"));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// One object, identity arrows only.
    fn point() -> FiniteThinDouble {
        let mut c = FiniteThinDouble {
            objects: vec!["*".into()],
            v_arrows: vec![ArrowInfo { source: 0, target: 0, name: "id".into() }],
            h_arrows: vec![ArrowInfo { source: 0, target: 0, name: "id".into() }],
            v_identity: vec![0],
            h_identity: vec![0],
            ..Default::default()
        };
        c.v_compose.insert((0, 0), 0);
        c.h_compose.insert((0, 0), 0);
        c.squares.insert(Boundary { top: 0, bottom: 0, left: 0, right: 0 });
        c
    }

    #[test]
    fn degenerate_closure_is_single_square() {
        let c = point();
        let cl = gamma_closure(&c).unwrap();
        assert_eq!(cl.len(), 1);
        assert!(c.check_strict_laws(None).is_empty());
    }

    #[test]
    fn corrupted_table_reported() {
        let mut c = point();
        c.v_arrows.push(ArrowInfo { source: 0, target: 0, name: "f".into() });
        c.v_compose.insert((1, 0), 1);
        c.v_compose.insert((0, 1), 0);
        c.v_compose.insert((1, 1), 1);
        let v = c.check_strict_laws(None);
        assert!(v.iter().any(|s| s.contains("unit law")));
    }
}

//! Discrete spacetimes and their thin double categories of regions.
//!
//! Two spacetimes are supported: a circle of `n` sites with rotations, and
//! a `T x X` diamond grid (time not periodic, space optionally periodic)
//! with translations. Horizontal arrows are symmetry embeddings
//! `h = (F, U -> V)` with `F(U) ⊆ V`; vertical arrows are inclusions. A
//! square with top `h: U -> V`, bottom `h': U' -> V'` and inclusions
//! `i: U ⊆ U'`, `j: V ⊆ V'` exists iff `j ∘ h = h' ∘ i` pointwise on `U`.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use crate::dbl::{ArrowInfo, Boundary, FiniteThinDouble};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spacetime {
    Circle { n: usize },
    Grid { t: usize, x: usize, periodic: bool },
}

impl Spacetime {
    pub fn num_points(&self) -> usize {
        match *self {
            Spacetime::Circle { n } => n,
            Spacetime::Grid { t, x, .. } => t * x,
        }
    }

    /// `(t, x)` of a grid point; circle sites are reported as `(0, site)`.
    pub fn coords(&self, p: usize) -> (i64, i64) {
        match *self {
            Spacetime::Circle { .. } => (0, p as i64),
            Spacetime::Grid { x, .. } => ((p / x) as i64, (p % x) as i64),
        }
    }

    pub fn point(&self, t: i64, xc: i64) -> Option<usize> {
        match *self {
            Spacetime::Circle { n } => Some(xc.rem_euclid(n as i64) as usize),
            Spacetime::Grid { t: tt, x, periodic } => {
                let xs = if periodic { xc.rem_euclid(x as i64) } else { xc };
                (t >= 0 && (t as usize) < tt && xs >= 0 && (xs as usize) < x).then(|| t as usize * x + xs as usize)
            }
        }
    }

    /// Spatial distance, periodic where applicable.
    pub fn space_dist(&self, a: i64, b: i64) -> i64 {
        let d = (a - b).abs();
        match *self {
            Spacetime::Grid { x, periodic: true, .. } => d.min(x as i64 - d),
            Spacetime::Circle { n } => d.min(n as i64 - d),
            _ => d,
        }
    }

    /// `p ≤ q` in the causal order (lattice speed of light 1).
    pub fn causally_precedes(&self, p: usize, q: usize) -> bool {
        match self {
            Spacetime::Circle { .. } => p == q,
            Spacetime::Grid { .. } => {
                let (tp, xp) = self.coords(p);
                let (tq, xq) = self.coords(q);
                tq - tp >= self.space_dist(xp, xq)
            }
        }
    }

    /// Strictly spacelike: `|Δt| < dist(Δx)`; lightlike pairs are causal.
    /// On the circle every pair of distinct sites is spacelike.
    pub fn spacelike(&self, p: usize, q: usize) -> bool {
        match self {
            Spacetime::Circle { .. } => p != q,
            Spacetime::Grid { .. } => {
                let (tp, xp) = self.coords(p);
                let (tq, xq) = self.coords(q);
                (tp - tq).abs() < self.space_dist(xp, xq)
            }
        }
    }

    pub fn all_symmetries(&self) -> Vec<Symmetry> {
        match *self {
            Spacetime::Circle { n } => (0..n).map(Symmetry::Rot).collect(),
            Spacetime::Grid { t, x, periodic } => {
                let xs: Vec<i64> = if periodic { (0..x as i64).collect() } else { (-(x as i64) + 1..x as i64).collect() };
                let mut out = Vec::new();
                for dt in -(t as i64) + 1..t as i64 {
                    for &dx in &xs {
                        out.push(Symmetry::Trans(dt, dx));
                    }
                }
                out
            }
        }
    }

    /// Image of a point, `None` if it leaves the grid.
    pub fn act(&self, s: Symmetry, p: usize) -> Option<usize> {
        match (*self, s) {
            (Spacetime::Circle { n }, Symmetry::Rot(k)) => Some((p + k) % n),
            (Spacetime::Grid { .. }, Symmetry::Trans(dt, dx)) => {
                let (t, x) = self.coords(p);
                self.point(t + dt, x + dx)
            }
            _ => None,
        }
    }

    pub fn identity_symmetry(&self) -> Symmetry {
        match self {
            Spacetime::Circle { .. } => Symmetry::Rot(0),
            Spacetime::Grid { .. } => Symmetry::Trans(0, 0),
        }
    }

    /// `second ∘ first`, normalised.
    pub fn compose_symmetries(&self, second: Symmetry, first: Symmetry) -> Symmetry {
        match (*self, second, first) {
            (Spacetime::Circle { n }, Symmetry::Rot(a), Symmetry::Rot(b)) => Symmetry::Rot((a + b) % n),
            (Spacetime::Grid { x, periodic, .. }, Symmetry::Trans(a, b), Symmetry::Trans(c, d)) => {
                let dx = if periodic { (b + d).rem_euclid(x as i64) } else { b + d };
                Symmetry::Trans(a + c, dx)
            }
            _ => first,
        }
    }

    pub fn inverse_symmetry(&self, s: Symmetry) -> Symmetry {
        match (*self, s) {
            (Spacetime::Circle { n }, Symmetry::Rot(k)) => Symmetry::Rot((n - k % n) % n),
            (Spacetime::Grid { x, periodic, .. }, Symmetry::Trans(dt, dx)) => {
                Symmetry::Trans(-dt, if periodic { (-dx).rem_euclid(x as i64) } else { -dx })
            }
            _ => s,
        }
    }

    /// Image of a point set, `None` if any point leaves the grid.
    pub fn image(&self, s: Symmetry, points: &[usize]) -> Option<Vec<usize>> {
        let mut out: Vec<usize> = points.iter().map(|&p| self.act(s, p)).collect::<Option<_>>()?;
        out.sort_unstable();
        Some(out)
    }

    pub fn all_points(&self) -> Vec<usize> {
        (0..self.num_points()).collect()
    }

    /// The causal diamond `J⁺(p) ∩ J⁻(q)`.
    pub fn diamond(&self, p: usize, q: usize) -> Vec<usize> {
        (0..self.num_points())
            .filter(|&r| self.causally_precedes(p, r) && self.causally_precedes(r, q))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symmetry {
    Rot(usize),
    Trans(i64, i64),
}

impl fmt::Display for Symmetry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symmetry::Rot(k) => write!(f, "rot({k})"),
            Symmetry::Trans(dt, dx) => write!(f, "tr({dt},{dx})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RegionKind {
    Arc { start: usize, len: usize },
    Diamond { t0: i64, x0: i64, t1: i64, x1: i64 },
    Box { t0: i64, x0: i64, t1: i64, x1: i64 },
    Ambient,
}

/// A finite set of points together with a descriptive label.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Region {
    pub kind: RegionKind,
    points: Vec<usize>,
}

impl Region {
    pub fn new(kind: RegionKind, mut points: Vec<usize>) -> Self {
        points.sort_unstable();
        points.dedup();
        Self { kind, points }
    }

    pub fn points(&self) -> &[usize] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.points.binary_search(&p).is_ok()
    }

    pub fn is_subset(&self, other: &Region) -> bool {
        self.points.iter().all(|&p| other.contains(p))
    }

    pub fn name(&self) -> String {
        match &self.kind {
            RegionKind::Arc { start, len } => format!("arc({start},{len})"),
            RegionKind::Diamond { t0, x0, t1, x1 } => format!("dia({t0},{x0},{t1},{x1})"),
            RegionKind::Box { t0, x0, t1, x1 } => format!("box({t0},{x0},{t1},{x1})"),
            RegionKind::Ambient => "ambient".into(),
        }
    }

    pub fn arc(n: usize, start: usize, len: usize) -> Self {
        Self::new(RegionKind::Arc { start, len }, (0..len).map(|k| (start + k) % n).collect())
    }

    /// Sites of an arc in arc order (for tensor-factor bookkeeping).
    pub fn ordered_sites(&self, st: &Spacetime) -> Vec<usize> {
        match (&self.kind, st) {
            (RegionKind::Arc { start, len }, Spacetime::Circle { n }) => (0..*len).map(|k| (start + k) % n).collect(),
            _ => self.points.clone(),
        }
    }
}

/// Every arc `arc(start, len)`, `1 ≤ len < n`, followed by the ambient circle.
pub fn circle_regions(n: usize) -> Vec<Region> {
    let mut out = Vec::new();
    for len in 1..n {
        for start in 0..n {
            out.push(Region::arc(n, start, len));
        }
    }
    out.push(Region::new(RegionKind::Ambient, (0..n).collect()));
    out
}

/// Every causal diamond of the grid (deduplicated by point set), followed by the ambient grid.
pub fn grid_diamonds(st: &Spacetime) -> Vec<Region> {
    let mut seen: HashMap<Vec<usize>, ()> = HashMap::new();
    let mut out = Vec::new();
    for p in 0..st.num_points() {
        for q in 0..st.num_points() {
            if !st.causally_precedes(p, q) {
                continue;
            }
            let pts = st.diamond(p, q);
            if seen.insert(pts.clone(), ()).is_none() {
                let (t0, x0) = st.coords(p);
                let (t1, x1) = st.coords(q);
                out.push(Region::new(RegionKind::Diamond { t0, x0, t1, x1 }, pts));
            }
        }
    }
    let all = st.all_points();
    if !seen.contains_key(&all) {
        out.push(Region::new(RegionKind::Ambient, all));
    }
    out
}

/// A horizontal arrow `(F, U -> V)` by region indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EmbeddingArrow {
    pub sym: Symmetry,
    pub source: usize,
    pub target: usize,
}

/// Square by arrow indices: `top`/`bottom` index horizontal arrows,
/// `left`/`right` index inclusions.
pub type SpacetimeSquare = Boundary<usize, usize>;

#[derive(Debug, Clone)]
pub struct MinkCategory {
    pub spacetime: Spacetime,
    pub regions: Vec<Region>,
    pub ambient: usize,
    region_index: HashMap<Vec<usize>, usize>,
    pub h_arrows: Vec<EmbeddingArrow>,
    h_index: HashMap<EmbeddingArrow, usize>,
    /// Inclusions `(small, big)`.
    pub v_arrows: Vec<(usize, usize)>,
    v_index: HashMap<(usize, usize), usize>,
    pub squares: Vec<SpacetimeSquare>,
}

impl MinkCategory {
    pub fn circle(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Region("a circle needs at least two sites".into()));
        }
        let st = Spacetime::Circle { n };
        Self::build(st, circle_regions(n))
    }

    pub fn diamond_grid(t: usize, x: usize, periodic: bool) -> Result<Self> {
        if t == 0 || x == 0 {
            return Err(Error::Region("grid dimensions must be positive".into()));
        }
        let st = Spacetime::Grid { t, x, periodic };
        Self::build(st, grid_diamonds(&st))
    }

    /// Builds the category on an explicit region class, which must contain
    /// the ambient point set and be closed under the symmetries wherever
    /// they are defined.
    pub fn build(spacetime: Spacetime, regions: Vec<Region>) -> Result<Self> {
        let mut region_index = HashMap::new();
        for (k, r) in regions.iter().enumerate() {
            if r.is_empty() {
                return Err(Error::Region(format!("region {} is empty", r.name())));
            }
            if region_index.insert(r.points.clone(), k).is_some() {
                return Err(Error::Region(format!("region {} listed twice", r.name())));
            }
        }
        let ambient = *region_index
            .get(&spacetime.all_points())
            .ok_or_else(|| Error::Region("the region class must contain the ambient region".into()))?;
        let syms = spacetime.all_symmetries();
        let mut h_arrows = Vec::new();
        for (u, ru) in regions.iter().enumerate() {
            for &s in &syms {
                let Some(img) = spacetime.image(s, &ru.points) else { continue };
                let img_region = Region::new(ru.kind.clone(), img.clone());
                if let Spacetime::Circle { .. } = spacetime {
                    if !region_index.contains_key(&img) {
                        return Err(Error::Region(format!("class not closed under {s}: image of {}", ru.name())));
                    }
                }
                for (v, rv) in regions.iter().enumerate() {
                    if img_region.is_subset(rv) {
                        h_arrows.push(EmbeddingArrow { sym: s, source: u, target: v });
                    }
                }
            }
        }
        let h_index = h_arrows.iter().enumerate().map(|(k, a)| (*a, k)).collect();
        let mut v_arrows = Vec::new();
        for (u, ru) in regions.iter().enumerate() {
            for (v, rv) in regions.iter().enumerate() {
                if ru.is_subset(rv) {
                    v_arrows.push((u, v));
                }
            }
        }
        let v_index = v_arrows.iter().enumerate().map(|(k, a)| (*a, k)).collect();
        let mut cat = Self {
            spacetime,
            regions,
            ambient,
            region_index,
            h_arrows,
            h_index,
            v_arrows,
            v_index,
            squares: Vec::new(),
        };
        cat.squares = cat.enumerate_squares();
        Ok(cat)
    }

    fn enumerate_squares(&self) -> Vec<SpacetimeSquare> {
        let mut incl_into: HashMap<usize, Vec<usize>> = HashMap::new();
        for (k, &(_, big)) in self.v_arrows.iter().enumerate() {
            incl_into.entry(big).or_default().push(k);
        }
        let mut h_from: HashMap<usize, Vec<usize>> = HashMap::new();
        for (k, a) in self.h_arrows.iter().enumerate() {
            h_from.entry(a.source).or_default().push(k);
        }
        let mut out = Vec::new();
        for (b, hb) in self.h_arrows.iter().enumerate() {
            for &i in incl_into.get(&hb.source).map(Vec::as_slice).unwrap_or(&[]) {
                let u = self.v_arrows[i].0;
                for &j in incl_into.get(&hb.target).map(Vec::as_slice).unwrap_or(&[]) {
                    let v = self.v_arrows[j].0;
                    for &t in h_from.get(&u).map(Vec::as_slice).unwrap_or(&[]) {
                        if self.h_arrows[t].target != v {
                            continue;
                        }
                        let sq = Boundary { top: t, bottom: b, left: i, right: j };
                        if self.commutation_witness(&sq).is_none() {
                            out.push(sq);
                        }
                    }
                }
            }
        }
        out.sort();
        out
    }

    /// A point of `U` where `j ∘ h` and `h' ∘ i` disagree, if any.
    fn commutation_witness(&self, sq: &SpacetimeSquare) -> Option<usize> {
        let top = self.h_arrows[sq.top];
        let bottom = self.h_arrows[sq.bottom];
        self.regions[top.source]
            .points
            .iter()
            .copied()
            .find(|&p| self.spacetime.act(top.sym, p) != self.spacetime.act(bottom.sym, p))
    }

    pub fn region_id(&self, points: &[usize]) -> Option<usize> {
        let mut p = points.to_vec();
        p.sort_unstable();
        self.region_index.get(&p).copied()
    }

    pub fn region_by_name(&self, name: &str) -> Option<usize> {
        self.regions.iter().position(|r| r.name() == name)
    }

    pub fn h_arrow_id(&self, a: &EmbeddingArrow) -> Option<usize> {
        self.h_index.get(a).copied()
    }

    pub fn inclusion_id(&self, small: usize, big: usize) -> Option<usize> {
        self.v_index.get(&(small, big)).copied()
    }

    pub fn inclusion_arrow(&self, v: usize) -> EmbeddingArrow {
        let (s, t) = self.v_arrows[v];
        EmbeddingArrow { sym: self.spacetime.identity_symmetry(), source: s, target: t }
    }

    pub fn arrow_name(&self, a: &EmbeddingArrow) -> String {
        format!("{}:{}->{}", a.sym, self.regions[a.source].name(), self.regions[a.target].name())
    }

    pub fn inclusion_name(&self, v: usize) -> String {
        let (s, t) = self.v_arrows[v];
        format!("{}<={}", self.regions[s].name(), self.regions[t].name())
    }

    pub fn compose(&self, second: &EmbeddingArrow, first: &EmbeddingArrow) -> Result<EmbeddingArrow> {
        if first.target != second.source {
            return Err(Error::NotComposable(format!(
                "{} then {}",
                self.arrow_name(first),
                self.arrow_name(second)
            )));
        }
        Ok(EmbeddingArrow {
            sym: self.spacetime.compose_symmetries(second.sym, first.sym),
            source: first.source,
            target: second.target,
        })
    }

    pub fn identity_arrow(&self, u: usize) -> EmbeddingArrow {
        EmbeddingArrow { sym: self.spacetime.identity_symmetry(), source: u, target: u }
    }

    /// The underlying map is a bijection `U -> V`.
    pub fn is_bijective(&self, a: &EmbeddingArrow) -> bool {
        self.regions[a.source].len() == self.regions[a.target].len()
    }

    pub fn square_name(&self, sq: &SpacetimeSquare) -> String {
        format!(
            "square[top {}, bottom {}, left {}, right {}]",
            self.arrow_name(&self.h_arrows[sq.top]),
            self.arrow_name(&self.h_arrows[sq.bottom]),
            self.inclusion_name(sq.left),
            self.inclusion_name(sq.right)
        )
    }

    /// Checks typing and pointwise commutation; the error names a witness point.
    pub fn validate_square(&self, sq: &SpacetimeSquare) -> Result<()> {
        let (top, bottom) = (self.h_arrows[sq.top], self.h_arrows[sq.bottom]);
        let (i, j) = (self.v_arrows[sq.left], self.v_arrows[sq.right]);
        if i.0 != top.source || i.1 != bottom.source || j.0 != top.target || j.1 != bottom.target {
            return Err(Error::Region(format!("{}: boundary does not close up", self.square_name(sq))));
        }
        if let Some(p) = self.commutation_witness(sq) {
            let (t, x) = self.spacetime.coords(p);
            return Err(Error::Region(format!("{}: does not commute at point ({t},{x})", self.square_name(sq))));
        }
        Ok(())
    }

    /// `U` and `V` lie in `T` and are pairwise spacelike.
    pub fn is_causally_disjoint(&self, u: usize, v: usize, t: usize) -> bool {
        let (ru, rv, rt) = (&self.regions[u], &self.regions[v], &self.regions[t]);
        ru.is_subset(rt)
            && rv.is_subset(rt)
            && ru.points.iter().all(|&p| rv.points.iter().all(|&q| self.spacetime.spacelike(p, q)))
    }

    /// The thin double category with numbered arrows and tabulated composition.
    pub fn to_thin_double(&self) -> FiniteThinDouble {
        let mut d = FiniteThinDouble {
            objects: self.regions.iter().map(Region::name).collect(),
            v_arrows: (0..self.v_arrows.len())
                .map(|v| ArrowInfo { source: self.v_arrows[v].0, target: self.v_arrows[v].1, name: self.inclusion_name(v) })
                .collect(),
            h_arrows: self
                .h_arrows
                .iter()
                .map(|a| ArrowInfo { source: a.source, target: a.target, name: self.arrow_name(a) })
                .collect(),
            v_identity: (0..self.regions.len()).map(|u| self.v_index[&(u, u)]).collect(),
            h_identity: (0..self.regions.len()).map(|u| self.h_index[&self.identity_arrow(u)]).collect(),
            ..Default::default()
        };
        for (f, &(a, b)) in self.v_arrows.iter().enumerate() {
            for (g, &(b2, c)) in self.v_arrows.iter().enumerate() {
                if b == b2 {
                    d.v_compose.insert((g, f), self.v_index[&(a, c)]);
                }
            }
        }
        let mut from: HashMap<usize, Vec<usize>> = HashMap::new();
        for (k, a) in self.h_arrows.iter().enumerate() {
            from.entry(a.source).or_default().push(k);
        }
        for (f, a) in self.h_arrows.iter().enumerate() {
            for &g in from.get(&a.target).map(Vec::as_slice).unwrap_or(&[]) {
                let comp = self.compose(&self.h_arrows[g], a).expect("composable by construction");
                if let Some(&k) = self.h_index.get(&comp) {
                    d.h_compose.insert((g, f), k);
                }
            }
        }
        d.squares = self.squares.iter().copied().collect();
        d
    }
}

/// Strict-law report for a Mink category (see [`FiniteThinDouble::check_strict_laws`]).
pub fn check_strictness(m: &MinkCategory, budget: Option<usize>) -> Vec<String> {
    m.to_thin_double().check_strict_laws(budget)
}

/// A truncation `τ` from a big region class onto a small one, with the
/// small class included by `ι`. Regions are indices into `regions`.
#[derive(Debug, Clone)]
pub struct TruncationData {
    pub regions: Vec<Region>,
    pub small: Vec<usize>,
    pub big: Vec<usize>,
    pub tau: HashMap<usize, usize>,
    /// Declared Cauchy inclusions `τ(U) ⊆ U`, as `(τ(U), U)`.
    pub cauchy: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Default)]
pub struct AdjunctionReport {
    /// Violations of the standing assumptions (`τ ∘ ι = id`, monotonicity,
    /// Cauchy inclusions), reported separately from the adjunction itself.
    pub precondition_failures: Vec<String>,
    pub pairs_checked: usize,
    /// `(U, V, [τ(U) ⊆ V], [U ⊆ ι(V)])` for the first failing pair.
    pub counterexample: Option<(String, String, bool, bool)>,
}

impl AdjunctionReport {
    pub fn holds(&self) -> bool {
        self.counterexample.is_none()
    }
}

/// Evaluates `τ(U) ⊆ V ⇔ U ⊆ ι(V)` over all big `U` and small `V`.
pub fn check_thin_adjunction(td: &TruncationData) -> AdjunctionReport {
    let mut rep = AdjunctionReport::default();
    let r = &td.regions;
    let small: BTreeSet<usize> = td.small.iter().copied().collect();
    for &v in &td.small {
        if !td.big.contains(&v) {
            rep.precondition_failures.push(format!("{} is small but not big", r[v].name()));
        }
        if td.tau.get(&v) != Some(&v) {
            rep.precondition_failures.push(format!("τ∘ι ≠ id at {}", r[v].name()));
        }
    }
    for &u in &td.big {
        match td.tau.get(&u) {
            Some(t) if small.contains(t) => {}
            _ => rep.precondition_failures.push(format!("τ({}) is not a small region", r[u].name())),
        }
    }
    for &u in &td.big {
        for &u2 in &td.big {
            if r[u].is_subset(&r[u2]) {
                if let (Some(&a), Some(&b)) = (td.tau.get(&u), td.tau.get(&u2)) {
                    if !r[a].is_subset(&r[b]) {
                        rep.precondition_failures
                            .push(format!("τ is not monotone on {} ⊆ {}", r[u].name(), r[u2].name()));
                    }
                }
            }
        }
    }
    for &(a, u) in &td.cauchy {
        if td.tau.get(&u) != Some(&a) || !r[a].is_subset(&r[u]) {
            rep.precondition_failures.push(format!("declared Cauchy arrow {} -> {} is not τ(U) ⊆ U", r[a].name(), r[u].name()));
        }
    }
    for &u in &td.big {
        let Some(&tu) = td.tau.get(&u) else { continue };
        for &v in &td.small {
            rep.pairs_checked += 1;
            let lhs = r[tu].is_subset(&r[v]);
            let rhs = r[u].is_subset(&r[v]);
            if lhs != rhs && rep.counterexample.is_none() {
                rep.counterexample = Some((r[u].name(), r[v].name(), lhs, rhs));
            }
        }
    }
    rep
}

/// Grid points of the box `[t0, t1] x [x0, x1]` (non-periodic grid).
fn box_points(st: &Spacetime, t0: i64, x0: i64, t1: i64, x1: i64) -> Vec<usize> {
    let mut out = Vec::new();
    for t in t0..=t1 {
        for x in x0..=x1 {
            if let Some(p) = st.point(t, x) {
                out.push(p);
            }
        }
    }
    out
}

impl TruncationData {
    /// Causal hull on a non-periodic grid: small regions are diamonds, big
    /// regions add the boxes whose smallest enclosing diamond exists and is
    /// unique, and `τ` sends a region to that diamond. No Cauchy inclusions
    /// are declared, since the hull contains the region rather than the
    /// other way round.
    pub fn diamond_hull(t: usize, x: usize) -> Result<Self> {
        let st = Spacetime::Grid { t, x, periodic: false };
        let mut regions: Vec<Region> = grid_diamonds(&st)
            .into_iter()
            .filter(|r| matches!(r.kind, RegionKind::Diamond { .. }))
            .collect();
        let small: Vec<usize> = (0..regions.len()).collect();
        let mut big = small.clone();
        let mut tau: HashMap<usize, usize> = small.iter().map(|&k| (k, k)).collect();
        for t0 in 0..t as i64 {
            for t1 in t0..t as i64 {
                for x0 in 0..x as i64 {
                    for x1 in x0..x as i64 {
                        if (x0 + x1) % 2 != 0 || x1 == x0 {
                            continue;
                        }
                        let half = (x1 - x0) / 2;
                        let (Some(p), Some(q)) = (st.point(t0 - half, x0 + half), st.point(t1 + half, x0 + half)) else {
                            continue;
                        };
                        let hull = st.diamond(p, q);
                        let Some(h) = regions.iter().position(|r| r.points == hull) else { continue };
                        let pts = box_points(&st, t0, x0, t1, x1);
                        if regions.iter().any(|r| r.points == pts) {
                            continue;
                        }
                        regions.push(Region::new(RegionKind::Box { t0, x0, t1, x1 }, pts));
                        big.push(regions.len() - 1);
                        tau.insert(regions.len() - 1, h);
                    }
                }
            }
        }
        Ok(Self { regions, small, big, tau, cauchy: Vec::new() })
    }

    /// Every diamond truncated to one fixed diamond `dia(t0,x0,t1,x1)`.
    pub fn constant(t: usize, x: usize, fixed: (i64, i64, i64, i64)) -> Result<Self> {
        let st = Spacetime::Grid { t, x, periodic: false };
        let regions: Vec<Region> = grid_diamonds(&st)
            .into_iter()
            .filter(|r| matches!(r.kind, RegionKind::Diamond { .. }))
            .collect();
        let (t0, x0, t1, x1) = fixed;
        let target = match (st.point(t0, x0), st.point(t1, x1)) {
            (Some(p), Some(q)) if st.causally_precedes(p, q) => st.diamond(p, q),
            _ => return Err(Error::Region("fixed diamond is not inside the grid".into())),
        };
        let d0 = regions.iter().position(|r| r.points == target).expect("diamond enumerated");
        let big: Vec<usize> = (0..regions.len()).collect();
        let tau = big.iter().map(|&k| (k, d0)).collect();
        Ok(Self { regions, small: vec![d0], big, tau, cauchy: Vec::new() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_four_has_twelve_arcs_plus_ambient() {
        let m = MinkCategory::circle(4).unwrap();
        assert_eq!(m.regions.len(), 13);
        assert_eq!(m.regions[m.ambient].name(), "ambient");
    }

    #[test]
    fn strict_laws_hold_on_small_spacetimes() {
        for m in [MinkCategory::circle(3).unwrap(), MinkCategory::diamond_grid(3, 3, false).unwrap()] {
            let v = check_strictness(&m, Some(20_000));
            assert!(v.is_empty(), "{v:?}");
        }
    }

    #[test]
    fn every_enumerated_square_validates() {
        let m = MinkCategory::circle(4).unwrap();
        for sq in &m.squares {
            m.validate_square(sq).unwrap();
        }
    }

    #[test]
    fn lightlike_pair_is_not_spacelike() {
        let st = Spacetime::Grid { t: 3, x: 5, periodic: false };
        let p = st.point(0, 0).unwrap();
        assert!(!st.spacelike(p, st.point(1, 1).unwrap()));
        assert!(st.spacelike(p, st.point(1, 2).unwrap()));
    }

    #[test]
    fn rotation_composition_adds() {
        let st = Spacetime::Circle { n: 4 };
        assert_eq!(st.compose_symmetries(Symmetry::Rot(3), Symmetry::Rot(2)), Symmetry::Rot(1));
        assert_eq!(st.inverse_symmetry(Symmetry::Rot(1)), Symmetry::Rot(3));
    }
}

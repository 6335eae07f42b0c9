//! Worked nets: a spin chain on the circle with rotation covariance, its
//! fixed-point subnet under an internal symmetry, and the lattice
//! Klein-Gordon field with its symplectic class spaces and Weyl words.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functor::{
    build_vertical_transformation, check_transformation_laws, cover_defect, Cover, NaturalTransformationData, NetInput,
    Report, Tally,
};
use crate::mink::{grid_diamonds, EmbeddingArrow, MinkCategory, Region, RegionKind, Spacetime, Symmetry};
use crate::numkit::{self, c, CMatrix, C64};
use crate::vna::{self, AlgElement, AlgebraShape, Hom};

pub type RVector = DVector<f64>;
pub type RMatrix = DMatrix<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpinChainConfig {
    pub sites: usize,
    pub local_dim: usize,
}

impl SpinChainConfig {
    pub fn new(sites: usize, local_dim: usize) -> Result<Self> {
        if sites < 3 {
            return Err(Error::Invalid(format!("a spin chain needs at least 3 sites, got {sites}")));
        }
        if local_dim < 2 {
            return Err(Error::Invalid(format!("local dimension must be at least 2, got {local_dim}")));
        }
        Ok(Self { sites, local_dim })
    }
}

/// Permutation unitary taking the factor order `[rest.., image..]` to the
/// site order of the target, where `positions[k]` is the target slot of the
/// `k`-th source factor.
fn placement_unitary(d: usize, target_len: usize, positions: &[usize]) -> CMatrix {
    let rest: Vec<usize> = (0..target_len).filter(|p| !positions.contains(p)).collect();
    let order: Vec<usize> = rest.iter().chain(positions).copied().collect();
    let dim = d.pow(target_len as u32);
    let mut u = CMatrix::zeros(dim, dim);
    let mut digits = vec![0usize; target_len];
    for src in 0..dim {
        let mut r = src;
        for k in (0..target_len).rev() {
            digits[k] = r % d;
            r /= d;
        }
        let mut slots = vec![0usize; target_len];
        for (k, &slot) in order.iter().enumerate() {
            slots[slot] = digits[k];
        }
        let dst = slots.iter().fold(0, |acc, &x| acc * d + x);
        u[(dst, src)] = c(1.0, 0.0);
    }
    u
}

/// `A(F, U -> V)` on the spin chain: each site factor of `U` is moved to
/// the slot of its image in `V`, tensored with the identity elsewhere.
pub fn spin_chain_hom(m: &MinkCategory, d: usize, a: &EmbeddingArrow) -> Result<Hom> {
    let (ru, rv) = (&m.regions[a.source], &m.regions[a.target]);
    let us = ru.ordered_sites(&m.spacetime);
    let vs = rv.ordered_sites(&m.spacetime);
    let mut positions = Vec::with_capacity(us.len());
    for &p in &us {
        let q = m
            .spacetime
            .act(a.sym, p)
            .ok_or_else(|| Error::Region(format!("{} leaves the spacetime", m.arrow_name(a))))?;
        let slot = vs
            .iter()
            .position(|&s| s == q)
            .ok_or_else(|| Error::Region(format!("{}: image not inside the target", m.arrow_name(a))))?;
        positions.push(slot);
    }
    let src = AlgebraShape::matrix(d.pow(us.len() as u32))?;
    let tgt = AlgebraShape::matrix(d.pow(vs.len() as u32))?;
    let mult = d.pow((vs.len() - us.len()) as u32);
    let u = placement_unitary(d, vs.len(), &positions);
    Hom::new(src, tgt.clone(), vec![vec![mult]], AlgElement::from_blocks(&tgt, vec![u])?, numkit::DEFAULT_TOL)
}

/// All covers of a region by two regions that are not nested, whose union
/// is the region; with `overlapping_only`, the two must also intersect.
pub fn two_region_covers(m: &MinkCategory, overlapping_only: bool) -> Vec<Cover> {
    let mut out = Vec::new();
    for a in 0..m.regions.len() {
        for b in a + 1..m.regions.len() {
            let (ra, rb) = (&m.regions[a], &m.regions[b]);
            if ra.is_subset(rb) || rb.is_subset(ra) {
                continue;
            }
            if overlapping_only && !ra.points().iter().any(|&p| rb.contains(p)) {
                continue;
            }
            let mut pts: Vec<usize> = ra.points().iter().chain(rb.points()).copied().collect();
            pts.sort_unstable();
            pts.dedup();
            if let Some(w) = m.region_id(&pts) {
                out.push(Cover { region: w, parts: vec![a, b] });
            }
        }
    }
    out
}

/// Cover of every region with at least two sites by its single sites.
pub fn per_site_covers(m: &MinkCategory) -> Vec<Cover> {
    let mut out = Vec::new();
    for (w, r) in m.regions.iter().enumerate() {
        if r.len() < 2 {
            continue;
        }
        let parts: Option<Vec<usize>> = r.points().iter().map(|&p| m.region_id(&[p])).collect();
        if let Some(parts) = parts {
            out.push(Cover { region: w, parts });
        }
    }
    out
}

pub fn build_spin_chain_net(cfg: SpinChainConfig) -> Result<NetInput> {
    let cfg = SpinChainConfig::new(cfg.sites, cfg.local_dim)?;
    let mink = MinkCategory::circle(cfg.sites)?;
    let d = cfg.local_dim;
    let algebras = mink
        .regions
        .iter()
        .map(|r| AlgebraShape::matrix(d.pow(r.len() as u32)))
        .collect::<Result<Vec<_>>>()?;
    let arrows = mink.h_arrows.iter().map(|a| spin_chain_hom(&mink, d, a)).collect::<Result<Vec<_>>>()?;
    let mut covers = two_region_covers(&mink, false);
    covers.extend(per_site_covers(&mink));
    Ok(NetInput {
        name: format!("spin chain N={} d={d}", cfg.sites),
        mink,
        algebras,
        arrows,
        cauchy_class: Vec::new(),
        covers,
        locality_tol: 0.0,
    })
}

/// A finite group acting on each site by unitaries `v_g`, listed for every
/// group element with the identity first.
#[derive(Debug, Clone)]
pub struct GroupAction {
    pub name: String,
    pub elements: Vec<CMatrix>,
}

impl GroupAction {
    /// `{1, v, ..., v^{order-1}}`, validated as a representation of `Z_order`.
    pub fn cyclic(name: &str, generator: CMatrix, order: usize, tol: f64) -> Result<Self> {
        if order == 0 {
            return Err(Error::Invalid("group order must be positive".into()));
        }
        let d = generator.nrows();
        let mut elements = vec![CMatrix::identity(d, d)];
        for k in 1..order {
            elements.push(&elements[k - 1] * &generator);
        }
        let act = Self { name: name.into(), elements };
        act.validate(tol)?;
        Ok(act)
    }

    pub fn trivial(d: usize) -> Self {
        Self { name: "trivial".into(), elements: vec![CMatrix::identity(d, d)] }
    }

    /// `Z_2` acting by `diag(1, -1, 1, -1, ...)`.
    pub fn z2_sign(d: usize) -> Result<Self> {
        let v = CMatrix::from_diagonal(&numkit::CVector::from_fn(d, |k, _| c(if k % 2 == 0 { 1.0 } else { -1.0 }, 0.0)));
        Self::cyclic("Z2", v, 2, numkit::DEFAULT_TOL)
    }

    pub fn local_dim(&self) -> usize {
        self.elements[0].nrows()
    }

    /// Unitarity and closure under products.
    pub fn validate(&self, tol: f64) -> Result<()> {
        for v in &self.elements {
            let r = numkit::unitary_residual(v);
            if r > tol {
                return Err(Error::NotUnitary { residual: r });
            }
        }
        for a in &self.elements {
            for b in &self.elements {
                let p = a * b;
                if !self.elements.iter().any(|e| numkit::fro_norm(&(e - &p)) <= tol) {
                    return Err(Error::Invalid(format!("{}: products leave the listed elements", self.name)));
                }
            }
        }
        Ok(())
    }

    /// `β_g = Ad(v_g^{⊗ sites})` on `M_{d^sites}`.
    pub fn beta(&self, g: usize, sites: usize) -> Result<Hom> {
        let d = self.local_dim();
        let mut u = CMatrix::identity(1, 1);
        for _ in 0..sites {
            u = numkit::kron(&u, &self.elements[g]);
        }
        let shape = AlgebraShape::matrix(d.pow(sites as u32))?;
        let elem = AlgElement::from_blocks(&shape, vec![u])?;
        Hom::inner(&shape, elem, numkit::DEFAULT_TOL)
    }
}

/// A copy of `net` with `A(h)` replaced by `Ad(u) ∘ A(h)` for a seeded
/// random unitary `u` of the target algebra. The corrupted hom is still a
/// trace-preserving embedding, but no longer compatible with the others.
pub fn inject_conjugation_fault(net: &NetInput, arrow: usize, seed: u64) -> Result<NetInput> {
    let h = net
        .arrows
        .get(arrow)
        .ok_or_else(|| Error::Invalid(format!("no arrow with index {arrow}")))?;
    let tgt = h.target().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let blocks = tgt.blocks().iter().map(|&n| numkit::random_unitary(n, &mut rng)).collect();
    let u = AlgElement::from_blocks(&tgt, blocks)?;
    let mut out = net.clone();
    out.name = format!("{} (fault at {})", net.name, net.mink.arrow_name(&net.mink.h_arrows[arrow]));
    out.arrows[arrow] = Hom::inner(&tgt, u, numkit::DEFAULT_TOL)?.compose(h)?;
    Ok(out)
}

/// Components `β_g` on every region of a spin-chain net, the data of the
/// natural automorphism induced by a global symmetry.
pub fn global_symmetry_components(net: &NetInput, act: &GroupAction, g: usize) -> Result<Vec<Hom>> {
    if g >= act.elements.len() {
        return Err(Error::Invalid(format!("{} has no element {g}", act.name)));
    }
    let d = act.local_dim();
    net.mink
        .regions
        .iter()
        .zip(&net.algebras)
        .map(|(r, shape)| {
            if shape.blocks() != [d.pow(r.len() as u32)] {
                return Err(Error::Dimension(format!("{} is not a spin-chain algebra for local dimension {d}", r.name())));
            }
            act.beta(g, r.len())
        })
        .collect()
}

/// `F_η` for `η = β_g` on a spin-chain net: typing and naturality of the
/// cells, plus the identity and composition laws for `β_g ∘ β_g`.
pub fn symmetry_transformation_suite(net: &NetInput, act: &GroupAction, g: usize, tol: f64) -> Result<Report> {
    let eta = NaturalTransformationData { source: net, target: net, components: global_symmetry_components(net, act, g)? };
    let (_, mut report) = build_vertical_transformation(&eta, tol)?;
    report.extend(check_transformation_laws(&eta, &eta, tol)?);
    Ok(report)
}

/// The subnet of fixed points of a site-wise group action on a spin chain.
/// Each local algebra is decomposed into blocks, and arrows are restricted
/// through the block isomorphisms. Fails with a witness if some `β_g` does
/// not commute with some arrow.
pub fn build_fixed_point_net(base: &NetInput, act: &GroupAction, tol: f64) -> Result<NetInput> {
    act.validate(tol)?;
    let m = &base.mink;
    let d = act.local_dim();
    let mut betas: Vec<Vec<Hom>> = Vec::with_capacity(m.regions.len());
    for (u, r) in m.regions.iter().enumerate() {
        if base.algebras[u].blocks() != [d.pow(r.len() as u32)] {
            return Err(Error::Dimension(format!("{} is not a full tensor product of {d}-level sites", r.name())));
        }
        betas.push((0..act.elements.len()).map(|g| act.beta(g, r.len())).collect::<Result<_>>()?);
    }
    for (k, a) in m.h_arrows.iter().enumerate() {
        for g in 0..act.elements.len() {
            let lhs = base.arrows[k].compose(&betas[a.source][g])?;
            let rhs = betas[a.target][g].compose(&base.arrows[k])?;
            let r = lhs.distance(&rhs);
            if r > tol {
                return Err(Error::Invalid(format!(
                    "group element {g} does not commute with {} (residual {r:.3e})",
                    m.arrow_name(a)
                )));
            }
        }
    }
    let mut decomps = Vec::with_capacity(m.regions.len());
    for (u, shape) in base.algebras.iter().enumerate() {
        let fixed = vna::fixed_point_subalgebra(shape, &betas[u], tol)?;
        decomps.push(vna::wedderburn(shape, &fixed, tol)?);
    }
    let mut arrows = Vec::with_capacity(m.h_arrows.len());
    for (k, a) in m.h_arrows.iter().enumerate() {
        let (wu, wv) = (&decomps[a.source], &decomps[a.target]);
        let h = &base.arrows[k];
        let hom = Hom::from_linear_map(
            &wu.shape,
            &wv.shape,
            |x| {
                let y = h.apply(&wu.embedding.apply(x));
                wv.embedding.pull_back(&y).unwrap_or_else(|_| AlgElement::zeros(&wv.shape))
            },
            tol,
        )
        .map_err(|e| Error::NotHomomorphism(format!("{}: {e}", m.arrow_name(a))))?;
        arrows.push(hom);
    }
    Ok(NetInput {
        name: format!("{} fixed points of {}", act.name, base.name),
        mink: m.clone(),
        algebras: decomps.iter().map(|w| w.shape.clone()).collect(),
        arrows,
        cauchy_class: Vec::new(),
        covers: two_region_covers(m, true),
        locality_tol: tol,
    })
}

/// Additivity over two-region covers (with the overlapping ones reported
/// separately) and per-site covers.
pub fn check_open_cover_additivity(net: &NetInput, tol: f64) -> Result<Report> {
    let m = &net.mink;
    if !matches!(m.spacetime, Spacetime::Circle { .. }) {
        return Err(Error::Region("cover additivity is checked on circle nets".into()));
    }
    let mut report = Report::default();
    let groups = [
        ("additivity.two_region", "two non-nested regions generate their union", two_region_covers(m, false)),
        ("additivity.overlap_step", "two overlapping regions generate their union", two_region_covers(m, true)),
        ("additivity.per_site", "single sites generate each region", per_site_covers(m)),
    ];
    for (name, property, covers) in groups {
        let mut t = Tally::new(name, property, tol);
        for cover in &covers {
            let (r, w) = cover_defect(net, cover, tol)?;
            t.observe(r, || w);
        }
        report.push(t.finish());
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Lattice Klein-Gordon field

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KgLatticeConfig {
    pub time_steps: usize,
    pub sites: usize,
    pub mass: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GreenSign {
    Retarded,
    Advanced,
}

/// The field on a `T x X` grid, time not periodic, space periodic.
#[derive(Debug, Clone)]
pub struct KgLattice {
    pub cfg: KgLatticeConfig,
    pub st: Spacetime,
    /// Column `q` is `E δ_q` for interior-row points, zero otherwise.
    e_matrix: RMatrix,
}

impl KgLattice {
    pub fn new(cfg: KgLatticeConfig) -> Result<Self> {
        if cfg.time_steps < 4 || cfg.sites < 3 {
            return Err(Error::Invalid(format!(
                "the lattice needs T ≥ 4 and X ≥ 3, got {}x{}",
                cfg.time_steps, cfg.sites
            )));
        }
        if !(cfg.mass >= 0.0) || !cfg.mass.is_finite() {
            return Err(Error::Invalid("mass must be finite and non-negative".into()));
        }
        let st = Spacetime::Grid { t: cfg.time_steps, x: cfg.sites, periodic: true };
        let mut lat = Self { cfg, st, e_matrix: RMatrix::zeros(0, 0) };
        let n = lat.num_points();
        let mut e = RMatrix::zeros(n, n);
        for q in lat.interior_points() {
            e.set_column(q, &lat.propagator(&lat.delta(q))?);
        }
        lat.e_matrix = e;
        Ok(lat)
    }

    pub fn num_points(&self) -> usize {
        self.st.num_points()
    }

    pub fn delta(&self, p: usize) -> RVector {
        let mut f = RVector::zeros(self.num_points());
        f[p] = 1.0;
        f
    }

    fn row(&self, p: usize) -> usize {
        p / self.cfg.sites
    }

    fn is_interior_row(&self, p: usize) -> bool {
        let t = self.row(p);
        t >= 1 && t + 1 < self.cfg.time_steps
    }

    /// Points off the first and last time rows, where `P` is defined.
    pub fn interior_points(&self) -> Vec<usize> {
        (0..self.num_points()).filter(|&p| self.is_interior_row(p)).collect()
    }

    /// `[(t+1,x), (t-1,x), (t,x+1), (t,x-1)]`, `None` off the grid.
    pub fn neighbours(&self, p: usize) -> [Option<usize>; 4] {
        let (t, x) = self.st.coords(p);
        [self.st.point(t + 1, x), self.st.point(t - 1, x), self.st.point(t, x + 1), self.st.point(t, x - 1)]
    }

    /// The stencil at `p`, reading `f` only where `inside` holds.
    fn stencil_at(&self, f: &RVector, p: usize, inside: &dyn Fn(usize) -> bool) -> f64 {
        let read = |q: Option<usize>| q.filter(|&q| inside(q)).map_or(0.0, |q| f[q]);
        let [tp, tm, xp, xm] = self.neighbours(p);
        let m2 = self.cfg.mass * self.cfg.mass;
        (read(tp) - 2.0 * f[p] + read(tm)) - (read(xp) - 2.0 * f[p] + read(xm)) + m2 * f[p]
    }

    /// `P = □ + m²`; the first and last time rows are outside its domain and read as zero.
    pub fn apply_p(&self, f: &RVector) -> RVector {
        RVector::from_fn(self.num_points(), |p, _| {
            if self.is_interior_row(p) {
                self.stencil_at(f, p, &|_| true)
            } else {
                0.0
            }
        })
    }

    /// `P_T` on fields over a region, extended by zero.
    pub fn apply_p_in(&self, region: &Region, f: &RVector) -> RVector {
        RVector::from_fn(self.num_points(), |p, _| {
            if region.contains(p) && self.is_interior_row(p) {
                self.stencil_at(f, p, &|q| region.contains(q))
            } else {
                0.0
            }
        })
    }

    /// Solves `P u = f` on the interior rows by explicit time stepping with
    /// zero data on the first two (retarded) or last two (advanced) rows.
    pub fn green(&self, sign: GreenSign, f: &RVector) -> Result<RVector> {
        let (tt, xx) = (self.cfg.time_steps, self.cfg.sites);
        if f.len() != self.num_points() {
            return Err(Error::Dimension("field has the wrong length".into()));
        }
        if (0..xx).any(|x| f[x] != 0.0 || f[(tt - 1) * xx + x] != 0.0) {
            return Err(Error::Region("sources must vanish on the first and last time rows".into()));
        }
        let m2 = self.cfg.mass * self.cfg.mass;
        let mut u = RVector::zeros(self.num_points());
        let idx = |t: usize, x: usize| t * xx + x;
        let step = |u: &mut RVector, t: usize, next: usize, prev: usize| {
            for x in 0..xx {
                let (xp, xm) = ((x + 1) % xx, (x + xx - 1) % xx);
                let lap = u[idx(t, xp)] - 2.0 * u[idx(t, x)] + u[idx(t, xm)];
                u[idx(next, x)] = f[idx(t, x)] - u[idx(prev, x)] + 2.0 * u[idx(t, x)] + lap - m2 * u[idx(t, x)];
            }
        };
        match sign {
            GreenSign::Retarded => {
                for t in 1..tt - 1 {
                    step(&mut u, t, t + 1, t - 1);
                }
            }
            GreenSign::Advanced => {
                for t in (1..tt - 1).rev() {
                    step(&mut u, t, t - 1, t + 1);
                }
            }
        }
        Ok(u)
    }

    /// `E = E⁻ - E⁺` (retarded minus advanced).
    pub fn propagator(&self, f: &RVector) -> Result<RVector> {
        Ok(self.green(GreenSign::Retarded, f)? - self.green(GreenSign::Advanced, f)?)
    }

    /// `⟨δ_a, E δ_b⟩` for interior-row points.
    pub fn e_entry(&self, a: usize, b: usize) -> f64 {
        self.e_matrix[(a, b)]
    }

    /// Points of `region` whose whole stencil lies in `region`.
    pub fn erode(&self, points: &[usize]) -> Vec<usize> {
        let set: std::collections::HashSet<usize> = points.iter().copied().collect();
        points
            .iter()
            .copied()
            .filter(|&p| self.neighbours(p).iter().all(|q| q.is_some_and(|q| set.contains(&q))))
            .collect()
    }

    /// `V(T)`: fields on the eroded interior `S` modulo `P` of fields on the
    /// twice-eroded interior, with its symplectic form.
    pub fn class_space(&self, region: &Region) -> Result<ClassSpace> {
        let support = self.erode(region.points());
        if support.is_empty() {
            return Err(Error::Region(format!("{} has an empty eroded interior", region.name())));
        }
        let inner = self.erode(&support);
        let pos: HashMap<usize, usize> = support.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut image = RMatrix::zeros(support.len(), inner.len());
        let mut leak = 0.0_f64;
        for (col, &u) in inner.iter().enumerate() {
            let pu = self.apply_p(&self.delta(u));
            for (p, &v) in pu.iter().enumerate() {
                match pos.get(&p) {
                    Some(&row) => image[(row, col)] = v,
                    None => leak = leak.max(v.abs()),
                }
            }
        }
        let basis = orthonormal_complement(&image);
        let raw = RMatrix::from_fn(support.len(), support.len(), |a, b| self.e_entry(support[a], support[b]));
        let sigma = basis.transpose() * &raw * &basis;
        Ok(ClassSpace { region: region.clone(), support, inner, image, basis, raw, sigma, image_leak: leak })
    }

    /// Class map `[f] -> [κ_* f]` for a translation taking `src` into `tgt`.
    pub fn pushforward(&self, kappa: Symmetry, src: &ClassSpace, tgt: &ClassSpace) -> Result<RMatrix> {
        let pos: HashMap<usize, usize> = tgt.support.iter().enumerate().map(|(k, &p)| (p, k)).collect();
        let mut moved = RMatrix::zeros(tgt.support.len(), src.support.len());
        for (k, &p) in src.support.iter().enumerate() {
            let q = self
                .st
                .act(kappa, p)
                .ok_or_else(|| Error::Region(format!("{kappa} moves {} off the grid", src.region.name())))?;
            let row = pos.get(&q).ok_or_else(|| {
                Error::Region(format!("{kappa} does not map {} into {}", src.region.name(), tgt.region.name()))
            })?;
            moved[(*row, k)] = 1.0;
        }
        Ok(tgt.basis.transpose() * moved * &src.basis)
    }

    /// The translate of a region, if it stays on the grid.
    pub fn translate(&self, kappa: Symmetry, region: &Region) -> Option<Region> {
        let pts = self.st.image(kappa, region.points())?;
        let kind = match region.kind {
            RegionKind::Diamond { t0, x0, t1, x1 } => {
                let Symmetry::Trans(dt, dx) = kappa else { return None };
                let xs = self.cfg.sites as i64;
                RegionKind::Diamond { t0: t0 + dt, x0: (x0 + dx).rem_euclid(xs), t1: t1 + dt, x1: (x1 + dx).rem_euclid(xs) }
            }
            ref k => k.clone(),
        };
        Some(Region::new(kind, pts))
    }
}

/// Orthonormal basis of the orthogonal complement of the column span.
fn orthonormal_complement(a: &RMatrix) -> RMatrix {
    let n = a.nrows();
    if a.ncols() == 0 {
        return RMatrix::identity(n, n);
    }
    // Jacobi rotations of a real matrix stay real, so the kernel basis is real.
    let at = CMatrix::from_fn(a.ncols(), n, |i, j| c(a[(j, i)], 0.0));
    let ker = numkit::kernel_basis(&at, 1e-10);
    RMatrix::from_fn(n, ker.len(), |r, col| ker[col][r].re)
}

/// `V(T) = F(S) / P F(S₂)` in coordinates.
#[derive(Debug, Clone)]
pub struct ClassSpace {
    pub region: Region,
    /// Eroded interior `S`.
    pub support: Vec<usize>,
    /// Twice-eroded interior `S₂`.
    pub inner: Vec<usize>,
    /// `P` applied to deltas on `S₂`, in `S` coordinates.
    pub image: RMatrix,
    /// Orthonormal complement of `image`; class coordinates are `basisᵀ f`.
    pub basis: RMatrix,
    /// `⟨δ_a, E δ_b⟩` on `S`.
    pub raw: RMatrix,
    pub sigma: RMatrix,
    /// Largest value of `P F(S₂)` outside `S` (zero when the quotient is well-defined).
    pub image_leak: f64,
}

impl ClassSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    /// Class coordinates of a field supported in `S` (given in grid coordinates).
    pub fn class_of(&self, f: &RVector) -> RVector {
        let local = RVector::from_fn(self.support.len(), |k, _| f[self.support[k]]);
        self.basis.transpose() * local
    }

    pub fn sigma_of(&self, v: &RVector, w: &RVector) -> f64 {
        v.dot(&(&self.sigma * w))
    }
}

/// A formal Weyl unitary `phase · W(v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeylWord {
    pub v: RVector,
    pub phase: C64,
}

impl WeylWord {
    pub fn unit(dim: usize) -> Self {
        Self { v: RVector::zeros(dim), phase: c(1.0, 0.0) }
    }

    pub fn new(v: RVector) -> Self {
        Self { v, phase: c(1.0, 0.0) }
    }

    /// `(λ W(v))^* = conj(λ) W(-v)`.
    pub fn adjoint(&self) -> Self {
        Self { v: -&self.v, phase: self.phase.conj() }
    }
}

/// `W(v) W(w) = e^{-iσ(v,w)/2} W(v + w)`.
pub fn weyl_multiply(sigma: &RMatrix, a: &WeylWord, b: &WeylWord) -> Result<WeylWord> {
    if a.v.len() != sigma.nrows() || b.v.len() != sigma.nrows() {
        return Err(Error::Dimension("Weyl words from different class spaces".into()));
    }
    let s = a.v.dot(&(sigma * &b.v));
    Ok(WeylWord { v: &a.v + &b.v, phase: a.phase * b.phase * C64::from_polar(1.0, -s / 2.0) })
}

/// Pushes a class along the inclusion of each cover part and checks that
/// an indicator partition of `f` reassembles `[f]`. A point of `S(T)` not
/// in the eroded interior of any part is returned as the witness.
pub fn kg_partition_check(lat: &KgLattice, total: &ClassSpace, parts: &[ClassSpace]) -> Result<(f64, Option<String>)> {
    let mut owner: HashMap<usize, usize> = HashMap::new();
    for &p in &total.support {
        match parts.iter().position(|c| c.support.contains(&p)) {
            Some(k) => {
                owner.insert(p, k);
            }
            None => {
                let (t, x) = lat.st.coords(p);
                return Ok((f64::INFINITY, Some(format!("point ({t},{x}) of {} is in no cover piece", total.region.name()))));
            }
        }
    }
    let incl: Vec<RMatrix> = parts
        .iter()
        .map(|c| lat.pushforward(lat.st.identity_symmetry(), c, total))
        .collect::<Result<_>>()?;
    let mut worst = 0.0_f64;
    for &p in &total.support {
        let f = lat.delta(p) + lat.delta(total.support[0]) * 0.5;
        let whole = total.class_of(&f);
        let mut sum = RVector::zeros(total.dim());
        for (k, part) in parts.iter().enumerate() {
            let chi_f = RVector::from_fn(f.len(), |q, _| if owner.get(&q) == Some(&k) { f[q] } else { 0.0 });
            if chi_f.iter().all(|&v| v == 0.0) {
                continue;
            }
            sum += &incl[k] * part.class_of(&chi_f);
        }
        worst = worst.max((whole - sum).amax());
    }
    Ok((worst, None))
}

/// The diamonds of the grid whose eroded interior is nonempty, followed by
/// the ambient grid.
pub fn kg_regions(lat: &KgLattice) -> Vec<Region> {
    grid_diamonds(&lat.st).into_iter().filter(|r| !lat.erode(r.points()).is_empty()).collect()
}

/// Proper sub-diamonds of `region` with nonempty class spaces.
fn sub_diamonds(regions: &[Region], region: &Region) -> Vec<usize> {
    regions
        .iter()
        .enumerate()
        .filter(|(_, r)| matches!(r.kind, RegionKind::Diamond { .. }) && r.is_subset(region) && r.len() < region.len())
        .map(|(k, _)| k)
        .collect()
}

fn pairwise_spacelike(st: &Spacetime, a: &[usize], b: &[usize]) -> bool {
    a.iter().all(|&p| b.iter().all(|&q| st.spacelike(p, q)))
}

/// The lattice field checks: properties of `P` and its Green operators, the
/// symplectic class spaces, translations, locality, additivity and the Weyl
/// relations.
pub fn kg_check_suite(cfg: KgLatticeConfig, tol: f64) -> Result<Report> {
    let lattice = KgLattice::new(cfg)?;
    let lat = &lattice;
    let st = lat.st;
    let n = lat.num_points();
    let interior = lat.interior_points();
    let name = |p: usize| {
        let (t, x) = st.coords(p);
        format!("({t},{x})")
    };
    let mut report = Report::default();

    let mut sym = Tally::new("kg.p_symmetric", "⟨Pf, g⟩ = ⟨f, Pg⟩ on interior rows", 0.0);
    let pcols: Vec<RVector> = (0..n).map(|q| lat.apply_p(&lat.delta(q))).collect();
    for &a in &interior {
        for &b in &interior {
            sym.observe((pcols[b][a] - pcols[a][b]).abs(), || format!("{} {}", name(a), name(b)));
        }
    }
    report.push(sym.finish());

    let mut inv = Tally::new("kg.green_inverse", "P E± f = f on the interior rows", tol);
    let mut cone = Tally::new("kg.cone_support", "E⁻δ_q lies in J⁺(q) and E⁺δ_q in J⁻(q), pointwise", 0.0);
    let mut kernel = Tally::new("kg.propagator_kernel", "P E f = 0 and E P u = 0 for interior supports", tol);
    for &q in &interior {
        let dq = lat.delta(q);
        for sign in [GreenSign::Retarded, GreenSign::Advanced] {
            let u = lat.green(sign, &dq)?;
            let pu = lat.apply_p(&u);
            let r = interior.iter().map(|&p| (pu[p] - dq[p]).abs()).fold(0.0, f64::max);
            inv.observe(r, || format!("{sign:?} source at {}", name(q)));
            let outside = (0..n).find(|&p| {
                u[p] != 0.0
                    && match sign {
                        GreenSign::Retarded => !st.causally_precedes(q, p),
                        GreenSign::Advanced => !st.causally_precedes(p, q),
                    }
            });
            cone.observe_bool(outside.is_none(), || {
                format!("{sign:?} source at {} reaches {}", name(q), name(outside.unwrap_or(q)))
            });
        }
        let pe = lat.apply_p(&lat.propagator(&dq)?);
        kernel.observe(interior.iter().map(|&p| pe[p].abs()).fold(0.0, f64::max), || format!("P E δ at {}", name(q)));
        let (t, _) = st.coords(q);
        if t >= 2 && t + 3 <= cfg.time_steps as i64 {
            let ep = lat.propagator(&lat.apply_p(&dq))?;
            kernel.observe(ep.amax(), || format!("E P δ at {}", name(q)));
        }
    }
    report.push(inv.finish());
    report.push(cone.finish());
    report.push(kernel.finish());

    let mut anti = Tally::new("kg.propagator_antisymmetric", "⟨f, E g⟩ = -⟨g, E f⟩", tol);
    for &a in &interior {
        for &b in &interior {
            anti.observe((lat.e_entry(a, b) + lat.e_entry(b, a)).abs(), || format!("{} {}", name(a), name(b)));
        }
    }
    report.push(anti.finish());

    let regions = kg_regions(lat);
    let mut spaces: Vec<ClassSpace> = Vec::with_capacity(regions.len());
    for r in &regions {
        spaces.push(lat.class_space(r)?);
    }
    let index: HashMap<Vec<usize>, usize> = regions.iter().enumerate().map(|(k, r)| (r.points().to_vec(), k)).collect();
    let ambient = index[&st.all_points()];

    let mut ext = Tally::new("kg.ext_commutes_p", "ext(P_T f) = P ext(f) for f on the eroded interior", 0.0);
    let mut quotient = Tally::new("kg.quotient", "P maps fields on S₂ into fields on S", 0.0);
    let mut welldef = Tally::new("kg.sigma_well_defined", "σ(Pu, g) = 0 for u on S₂ and g on S", tol);
    let mut sigma_anti = Tally::new("kg.sigma_antisymmetric", "σ_T is antisymmetric", tol);
    for (cs, r) in spaces.iter().zip(&regions) {
        for &p in &cs.support {
            let f = lat.delta(p);
            let diff = lat.apply_p_in(r, &f) - lat.apply_p(&f);
            ext.observe(diff.amax(), || format!("{} at {}", r.name(), name(p)));
        }
        quotient.observe(cs.image_leak, || r.name());
        let pairing = cs.image.transpose() * &cs.raw;
        welldef.observe(pairing.amax(), || r.name());
        sigma_anti.observe((&cs.sigma + cs.sigma.transpose()).amax(), || r.name());
    }
    report.push(ext.finish());
    report.push(quotient.finish());
    report.push(welldef.finish());
    report.push(sigma_anti.finish());

    let mut kext = Tally::new("kg.kappa_ext", "ext(κ_* f) = κ_*(ext f)", 0.0);
    let mut sympl = Tally::new("kg.symplecticity", "V(h)ᵀ σ_V V(h) = σ_U for translations", tol);
    let mut func = Tally::new("kg.functoriality", "V(h₂ ∘ h₁) = V(h₂) V(h₁)", tol);
    let syms = st.all_symmetries();
    let chain = [Symmetry::Trans(0, 1), Symmetry::Trans(1, 0), Symmetry::Trans(-1, 0), Symmetry::Trans(0, 2)];
    for (k, r) in regions.iter().enumerate() {
        for &kappa in &syms {
            let Some(img) = lat.translate(kappa, r) else { continue };
            let Some(&kt) = index.get(img.points()) else { continue };
            // Pushforward of fields on the region commutes with extension by zero.
            for &p in &spaces[k].support {
                let moved_then_ext = lat.delta(st.act(kappa, p).expect("inside"));
                let ext_then_moved = RVector::from_fn(n, |q, _| {
                    let back = st.act(st.inverse_symmetry(kappa), q);
                    if back == Some(p) && img.contains(q) {
                        1.0
                    } else {
                        0.0
                    }
                });
                kext.observe((moved_then_ext - ext_then_moved).amax(), || format!("{kappa} on {}", r.name()));
            }
            for target in [kt, ambient] {
                let v = lat.pushforward(kappa, &spaces[k], &spaces[target])?;
                let res = (v.transpose() * &spaces[target].sigma * &v - &spaces[k].sigma).amax();
                sympl.observe(res, || format!("{kappa}: {} -> {}", r.name(), regions[target].name()));
            }
        }
        for &k1 in &chain {
            for &k2 in &chain {
                let Some(r1) = lat.translate(k1, r) else { continue };
                let Some(r2) = lat.translate(k2, &r1) else { continue };
                let (Some(&i1), Some(&i2)) = (index.get(r1.points()), index.get(r2.points())) else { continue };
                let v1 = lat.pushforward(k1, &spaces[k], &spaces[i1])?;
                let v2 = lat.pushforward(k2, &spaces[i1], &spaces[i2])?;
                let v21 = lat.pushforward(st.compose_symmetries(k2, k1), &spaces[k], &spaces[i2])?;
                func.observe((v21 - v2 * v1).amax(), || format!("{k2} after {k1} on {}", r.name()));
                let into_amb = lat.pushforward(st.identity_symmetry(), &spaces[i2], &spaces[ambient])?;
                let direct = lat.pushforward(st.compose_symmetries(k2, k1), &spaces[k], &spaces[ambient])?;
                let via = into_amb * lat.pushforward(st.compose_symmetries(k2, k1), &spaces[k], &spaces[i2])?;
                func.observe((direct - via).amax(), || format!("inclusion after {k2}{k1} on {}", r.name()));
            }
        }
    }
    report.push(kext.finish());
    report.push(sympl.finish());
    report.push(func.finish());

    // Locality: σ between fields supported in spacelike-separated diamonds.
    let mut hk2 = Tally::new("kg.hk2_locality", "σ vanishes exactly between spacelike-separated diamonds", 0.0);
    let mut hk2_classes = Tally::new("kg.hk2_locality_classes", "σ vanishes on class spaces of spacelike-separated diamonds", tol);
    let mut weyl_loc = Tally::new("kg.weyl_locality", "Weyl words of spacelike-separated diamonds commute", tol);
    let all_diamonds: Vec<Region> = grid_diamonds(&st)
        .into_iter()
        .filter(|r| matches!(r.kind, RegionKind::Diamond { .. }))
        .collect();
    let amb_space = &spaces[ambient];
    let amb_pos: HashMap<usize, usize> = amb_space.support.iter().enumerate().map(|(k, &p)| (p, k)).collect();
    for (a, ra) in all_diamonds.iter().enumerate() {
        let sa: Vec<usize> = ra.points().iter().copied().filter(|p| amb_pos.contains_key(p)).collect();
        if sa.is_empty() {
            continue;
        }
        for rb in &all_diamonds[a + 1..] {
            if !pairwise_spacelike(&st, ra.points(), rb.points()) {
                continue;
            }
            let sb: Vec<usize> = rb.points().iter().copied().filter(|p| amb_pos.contains_key(p)).collect();
            if sb.is_empty() {
                continue;
            }
            let block = sa.iter().flat_map(|&p| sb.iter().map(move |&q| (p, q)));
            let worst = block.map(|(p, q)| lat.e_entry(p, q).abs()).fold(0.0, f64::max);
            hk2.observe(worst, || format!("{} and {}", ra.name(), rb.name()));
            let fa = sa.iter().fold(RVector::zeros(n), |acc, &p| acc + lat.delta(p));
            let fb = sb.iter().fold(RVector::zeros(n), |acc, &p| acc + lat.delta(p) * 0.5);
            let (va, vb) = (amb_space.class_of(&fa), amb_space.class_of(&fb));
            let wa = WeylWord::new(va);
            let wb = WeylWord::new(vb);
            let ab = weyl_multiply(&amb_space.sigma, &wa, &wb)?;
            let ba = weyl_multiply(&amb_space.sigma, &wb, &wa)?;
            let raw_sigma = sa.iter().flat_map(|&p| sb.iter().map(move |&q| lat.e_entry(p, q) * 0.5)).sum::<f64>();
            weyl_loc.observe(raw_sigma.abs(), || format!("{} and {}", ra.name(), rb.name()));
            weyl_loc.observe((ab.phase - ba.phase).norm(), || {
                format!("{} and {} (class level)", ra.name(), rb.name())
            });
        }
    }
    // Class-level pairs where both diamonds have their own class spaces.
    for (a, sa) in spaces.iter().enumerate() {
        for sb in &spaces[a + 1..] {
            if a == ambient || !pairwise_spacelike(&st, sa.region.points(), sb.region.points()) {
                continue;
            }
            let ia = lat.pushforward(st.identity_symmetry(), sa, amb_space)?;
            let ib = lat.pushforward(st.identity_symmetry(), sb, amb_space)?;
            let block = ia.transpose() * &amb_space.sigma * ib;
            hk2_classes.observe(block.amax(), || format!("{} and {} (classes)", sa.region.name(), sb.region.name()));
        }
    }
    report.push(hk2.finish());
    report.push(hk2_classes.finish());
    report.push(weyl_loc.finish());

    let mut hk5 = Tally::new("kg.hk5_additivity", "an indicator partition over a cover reassembles every class", tol);
    for (k, r) in regions.iter().enumerate() {
        let parts = sub_diamonds(&regions, r);
        let covered = spaces[k].support.iter().all(|p| parts.iter().any(|&q| spaces[q].support.contains(p)));
        if parts.is_empty() || !covered {
            continue;
        }
        let pieces: Vec<ClassSpace> = parts.iter().map(|&q| spaces[q].clone()).collect();
        let (res, witness) = kg_partition_check(lat, &spaces[k], &pieces)?;
        hk5.observe(res, || witness.unwrap_or_else(|| r.name()));
    }
    report.push(hk5.finish());

    report.push(weyl_relations(amb_space, 1e-12)?);
    Ok(report)
}

/// Unit, involution, associativity and the commutator phase on a fixed
/// family of classes.
pub fn weyl_relations(cs: &ClassSpace, tol: f64) -> Result<crate::functor::CheckRecord> {
    let mut t = Tally::new("kg.weyl_ccr", "Weyl words obey the CCR phase rule", tol);
    let k = cs.dim();
    let vecs: Vec<RVector> = (0..k.min(6))
        .map(|a| RVector::from_fn(k, |i, _| ((i * 7 + a * 3) % 5) as f64 - 2.0 + 0.25 * a as f64))
        .collect();
    let s = &cs.sigma;
    let unit = WeylWord::unit(k);
    for v in &vecs {
        let w = WeylWord::new(v.clone());
        let left = weyl_multiply(s, &unit, &w)?;
        t.observe((left.v.clone() - &w.v).amax().max((left.phase - w.phase).norm()), || "unit".into());
        let inv = weyl_multiply(s, &w, &w.adjoint())?;
        t.observe(inv.v.amax().max((inv.phase - c(1.0, 0.0)).norm()), || "involution".into());
        for u in &vecs {
            let wu = WeylWord::new(u.clone());
            let comm = weyl_multiply(s, &weyl_multiply(s, &weyl_multiply(s, &w, &wu)?, &w.adjoint())?, &wu.adjoint())?;
            let expected = C64::from_polar(1.0, -cs.sigma_of(v, u));
            t.observe(comm.v.amax().max((comm.phase - expected).norm()), || "group commutator".into());
            for z in &vecs {
                let wz = WeylWord::new(z.clone());
                let lhs = weyl_multiply(s, &weyl_multiply(s, &w, &wu)?, &wz)?;
                let rhs = weyl_multiply(s, &w, &weyl_multiply(s, &wu, &wz)?)?;
                t.observe((lhs.v - rhs.v).amax().max((lhs.phase - rhs.phase).norm()), || "associativity".into());
            }
        }
    }
    Ok(t.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn placement_of_identity_is_identity() {
        let u = placement_unitary(2, 3, &[0, 1, 2]);
        assert_eq!(u, CMatrix::identity(8, 8));
    }

    #[test]
    fn inclusion_into_longer_arc_has_multiplicity_two() {
        let m = MinkCategory::circle(4).unwrap();
        let a = m.region_by_name("arc(0,2)").unwrap();
        let b = m.region_by_name("arc(0,3)").unwrap();
        let h = spin_chain_hom(&m, 2, &EmbeddingArrow { sym: Symmetry::Rot(0), source: a, target: b }).unwrap();
        assert_eq!(h.multiplicity(), &[vec![2]]);
        assert!(h.is_trace_preserving(1e-15));
    }

    #[test]
    fn delta_stencil_at_zero_mass() {
        let lat = KgLattice::new(KgLatticeConfig { time_steps: 5, sites: 5, mass: 0.0 }).unwrap();
        let p = lat.st.point(2, 2).unwrap();
        let pf = lat.apply_p(&lat.delta(p));
        assert_eq!(pf[p], 0.0);
        assert_eq!(pf[lat.st.point(3, 2).unwrap()], 1.0);
        assert_eq!(pf[lat.st.point(2, 3).unwrap()], -1.0);
    }

    #[test]
    fn green_rejects_boundary_sources() {
        let lat = KgLattice::new(KgLatticeConfig { time_steps: 4, sites: 3, mass: 1.0 }).unwrap();
        assert!(lat.green(GreenSign::Retarded, &lat.delta(0)).is_err());
    }
}

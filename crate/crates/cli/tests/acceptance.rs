//! Acceptance suite: one PASS/FAIL line per criterion, with elapsed time
//! against the runtime budget. Exits nonzero if any criterion fails.

use std::collections::{HashMap, HashSet};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use aqft_cli::report::{ReportDocument, Status};
use aqft_core::corr::{
    fuse, left_unitor, pentagon_residual, random_correspondence, right_unitor, triangle_residual, CheckBasis, Correspondence,
};
use aqft_core::dbl::{check_generator_uniqueness, gamma_closure, SquareId};
use aqft_core::functor::{
    build_functor, build_vertical_transformation, check_hk, check_l2_functoriality, check_union_joins, HomSquare, HomSquares,
    NaturalTransformationData, NetInput, Report,
};
use aqft_core::l2::StandardForm;
use aqft_core::mink::{check_thin_adjunction, MinkCategory, TruncationData};
use aqft_core::nets::{
    build_fixed_point_net, build_spin_chain_net, global_symmetry_components, inject_conjugation_fault, kg_check_suite,
    symmetry_transformation_suite, GroupAction, KgLatticeConfig, SpinChainConfig,
};
use aqft_core::numkit::{self, c, fro_norm, kron, unitary_residual, CMatrix};
use aqft_core::vna::{AlgElement, AlgebraShape, Hom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-9;
const FAULT_ARROW: &str = "rot(0):arc(0,1)->ambient";

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn all_pass(label: &str, report: &Report) -> Result<(), String> {
    match report.failures().next() {
        None => Ok(()),
        Some(r) => Err(format!("{label}: {} failed, residual {:.3e}, {}", r.name, r.residual, r.witness.clone().unwrap_or_default())),
    }
}

fn record_residual(report: &Report, name: &str) -> Result<f64, String> {
    report.get(name).map(|r| r.residual).ok_or_else(|| format!("no record {name}"))
}

fn spin_chain(sites: usize) -> Result<NetInput, String> {
    build_spin_chain_net(SpinChainConfig::new(sites, 2).map_err(err)?).map_err(err)
}

fn shape(blocks: &[usize]) -> AlgebraShape {
    AlgebraShape::new(blocks.to_vec()).expect("valid shape")
}

/// Rank by Gaussian elimination with complete pivoting.
fn rank(m: &CMatrix, tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let cutoff = tol * a.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let mut r = 0;
    while r < rows.min(cols) {
        let (mut pi, mut pj, mut best) = (r, r, 0.0);
        for j in r..cols {
            for i in r..rows {
                if a[(i, j)].norm() > best {
                    (pi, pj, best) = (i, j, a[(i, j)].norm());
                }
            }
        }
        if best <= cutoff {
            break;
        }
        a.swap_rows(r, pi);
        a.swap_columns(r, pj);
        for i in r + 1..rows {
            let f = a[(i, r)] / a[(r, r)];
            for j in r..cols {
                let x = a[(r, j)];
                a[(i, j)] -= f * x;
            }
        }
        r += 1;
    }
    r
}

/// `dim (H ⊗ K) / span{ξb ⊗ η - ξ ⊗ bη}`.
fn balanced_quotient_dim(h: &Correspondence, k: &Correspondence) -> usize {
    let b = h.right_alg();
    let (dh, dk) = (h.dim(), k.dim());
    let (ih, ik) = (CMatrix::identity(dh, dh), CMatrix::identity(dk, dk));
    let units = b.basis();
    let mut rel = CMatrix::zeros(dh * dk, dh * dk * units.len());
    for (m, e) in units.iter().enumerate() {
        let r = kron(&h.right_matrix(e), &ik) - kron(&ih, &k.left_matrix(e));
        rel.view_mut((0, m * dh * dk), (dh * dk, dh * dk)).copy_from(&r);
    }
    dh * dk - rank(&rel, 1e-9)
}

fn c1_modular_conjugation() -> Outcome {
    let shapes: [&[usize]; 9] = [&[1], &[2], &[3], &[2, 1], &[3, 2, 1], &[5, 3, 1], &[4, 4, 4, 2], &[7, 3, 1, 1, 1], &[8]];
    let mut worst: f64 = 0.0;
    let mut units = 0;
    for blocks in shapes {
        let s = shape(blocks);
        let sf = StandardForm::new(&s);
        for b in s.basis() {
            let r = fro_norm(&(sf.right(&b) - sf.right_via_j(&b).map_err(err)?));
            worst = worst.max(r);
            units += 1;
        }
    }
    ensure(worst < 1e-12, || format!("max ‖ρ(b) - Jλ(b*)J‖ = {worst:.3e}"))?;
    Ok(format!("{units} matrix units over {} shapes, max residual {worst:.1e}", shapes.len()))
}

fn c2_l2_functoriality() -> Outcome {
    let net = spin_chain(4)?;
    let report = check_l2_functoriality(&net, 1e-12).map_err(err)?;
    all_pass("l2", &report)?;
    let n: usize = report.records.iter().map(|r| r.checked).sum();
    Ok(format!("identities and {n} instances on the N=4 chain"))
}

fn c3_unitors_and_fusion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let outer = [shape(&[1]), shape(&[2]), shape(&[2, 1])];
    let middle = [shape(&[2]), shape(&[2, 1])];
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let b = &middle[k % 2];
        let a = &outer[rng.gen_range(0..outer.len())];
        let cc = &outer[rng.gen_range(0..outer.len())];
        let h = random_correspondence(a, b, 2, &mut rng).map_err(err)?;
        let kk = random_correspondence(b, cc, 2, &mut rng).map_err(err)?;
        for cell in [right_unitor(&h, TOL).map_err(err)?, left_unitor(&h, TOL).map_err(err)?] {
            let r = unitary_residual(cell.operator()).max(cell.residuals(CheckBasis::MatrixUnits).max());
            worst = worst.max(r);
        }
        let fused = fuse(&h, &kk, TOL).map_err(err)?.dim();
        let oracle = balanced_quotient_dim(&h, &kk);
        ensure(fused == oracle, || format!("instance {k}: fused dimension {fused}, balanced quotient {oracle}"))?;
    }
    ensure(worst < TOL, || format!("unitor residual {worst:.3e}"))?;
    Ok(format!("50 correspondences, unitor residual {worst:.1e}, fusion dimensions match"))
}

fn c4_pentagon_triangle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let shapes = [shape(&[1]), shape(&[2]), shape(&[1, 1])];
    let pick = |rng: &mut ChaCha8Rng| shapes[rng.gen_range(0..shapes.len())].clone();
    let (mut pent, mut tri): (f64, f64) = (0.0, 0.0);
    for _ in 0..20 {
        let algs: Vec<AlgebraShape> = (0..5).map(|_| pick(&mut rng)).collect();
        let cs = (0..4)
            .map(|i| random_correspondence(&algs[i], &algs[i + 1], 1, &mut rng))
            .collect::<aqft_core::Result<Vec<_>>>()
            .map_err(err)?;
        pent = pent.max(pentagon_residual(&cs[0], &cs[1], &cs[2], &cs[3], TOL).map_err(err)?);
        tri = tri.max(triangle_residual(&cs[0], &cs[1], TOL).map_err(err)?);
    }
    ensure(pent < TOL && tri < TOL, || format!("pentagon {pent:.3e}, triangle {tri:.3e}"))?;
    Ok(format!("20 chains, pentagon {pent:.1e}, triangle {tri:.1e}"))
}

fn c5_bimodularity() -> Outcome {
    let net = spin_chain(4)?;
    let fixed = build_fixed_point_net(&net, &GroupAction::z2_sign(2).map_err(err)?, TOL).map_err(err)?;
    let mut counts = Vec::new();
    for n in [&net, &fixed] {
        let b = build_functor(n, TOL).map_err(err)?.check_bimodularity().map_err(err)?;
        ensure(b.squares == n.mink.squares.len(), || format!("{}: {} of {} squares", n.name, b.squares, n.mink.squares.len()))?;
        ensure(b.max_left <= TOL && b.max_left_derived() <= TOL && b.max_right <= TOL, || {
            format!("{}: left {:.3e}, left derived {:.3e}, right {:.3e}", n.name, b.max_left, b.max_left_derived(), b.max_right)
        })?;
        counts.push(b.squares);
    }
    let arrow = net
        .mink
        .h_arrows
        .iter()
        .position(|a| net.mink.arrow_name(a) == FAULT_ARROW)
        .ok_or_else(|| format!("no arrow {FAULT_ARROW}"))?;
    let faulty = inject_conjugation_fault(&net, arrow, 7).map_err(err)?;
    let b = build_functor(&faulty, TOL).map_err(err)?.check_bimodularity().map_err(err)?;
    ensure(!b.left_failures.is_empty() && b.max_left_derived() > TOL, || "fault did not break the left identity".into())?;
    ensure(b.right_failures.is_empty() && b.max_right <= TOL, || format!("fault broke the right identity: {:.3e}", b.max_right))?;
    Ok(format!(
        "{} + {} squares pass; fault at {FAULT_ARROW} fails {} squares on the left only",
        counts[0],
        counts[1],
        b.left_failures.len()
    ))
}

fn c6_haag_kastler() -> Outcome {
    let net = spin_chain(4)?;
    let report = check_hk(&net, TOL).map_err(err)?;
    all_pass("spin chain", &report)?;
    for name in ["hk2.locality", "hk2.locality_abstract"] {
        let r = record_residual(&report, name)?;
        ensure(r == 0.0, || format!("{name} residual {r:e} is not exactly zero"))?;
    }
    let hk4 = report.get("hk4.time_slice").ok_or("no record hk4.time_slice")?;
    ensure(hk4.checked == 0 && net.cauchy_class.is_empty(), || "time slice is not vacuous".into())?;
    let hk5 = report.get("hk5.additivity").ok_or("no record hk5.additivity")?;
    ensure(hk5.checked == net.covers.len(), || format!("{} of {} covers checked", hk5.checked, net.covers.len()))?;
    let fixed = build_fixed_point_net(&net, &GroupAction::z2_sign(2).map_err(err)?, TOL).map_err(err)?;
    let report = check_hk(&fixed, TOL).map_err(err)?;
    all_pass("fixed point", &report)?;
    let loc = record_residual(&report, "hk2.locality")?;
    Ok(format!("both nets pass; chain commutators exactly zero, fixed-point locality {loc:.1e}"))
}

fn c7_union_joins() -> Outcome {
    let net = spin_chain(4)?;
    let report = check_union_joins(&net, TOL).map_err(err)?;
    all_pass("union joins", &report)?;
    let r = &report.records[0];
    Ok(format!("{} unions, residual {:.1e}", r.checked, r.residual))
}

fn c8_generators() -> Outcome {
    let net = build_spin_chain_net(SpinChainConfig::new(6, 2).map_err(err)?).map_err(err)?;
    let m = &net.mink;
    let td = m.to_thin_double();
    let closure = gamma_closure(&td).map_err(err)?;
    let generators: HashSet<SquareId> =
        closure.squares.iter().zip(&closure.is_generator).filter(|(_, g)| **g).map(|(s, _)| *s).collect();
    let marked: HashSet<SquareId> = td.marked_generators().into_iter().collect();
    ensure(generators == marked, || "closure generators differ from the marked generators".into())?;
    ensure(closure.len() < m.squares.len(), || format!("closure {} is not smaller than {}", closure.len(), m.squares.len()))?;

    let functor = build_functor(&net, TOL).map_err(err)?;
    let mut swap_cache: HashMap<usize, Hom> = HashMap::new();
    for sq in &closure.squares {
        for h in [sq.top, sq.bottom, incl(m, sq.left)?, incl(m, sq.right)?] {
            if let std::collections::hash_map::Entry::Vacant(e) = swap_cache.entry(h) {
                e.insert(swap_network_hom(m, 2, h)?);
            }
        }
    }
    let swapped = |sq: &SquareId| -> aqft_core::Result<HomSquare> {
        let get = |h: usize| swap_cache[&h].clone();
        let (l, r) = (incl(m, sq.left).expect("inclusion"), incl(m, sq.right).expect("inclusion"));
        Ok(HomSquare { top: get(sq.top), bottom: get(sq.bottom), left: get(l), right: get(r) })
    };
    let report = check_generator_uniqueness(&td, &closure, &HomSquares, |sq| Ok(functor.hom_square(sq)), swapped, 1e-10)
        .map_err(err)?;
    ensure(report.passed(), || report.violations[0].clone())?;
    Ok(format!(
        "{} generators = closure of {} of {} squares; two assignments agree on {}",
        generators.len(),
        closure.len(),
        m.squares.len(),
        report.checked
    ))
}

fn incl(m: &MinkCategory, v: usize) -> Result<usize, String> {
    m.h_arrow_id(&m.inclusion_arrow(v)).ok_or_else(|| format!("no arrow for {}", m.inclusion_name(v)))
}

/// Basis permutation of the swap of tensor factors `k` and `k + 1` out of
/// `factors`, each of dimension `d`: entry `b` is the image of basis vector `b`.
fn swap_gate(d: usize, factors: usize, k: usize) -> Vec<usize> {
    let inner = d.pow((factors - k - 2) as u32);
    (0..d.pow(factors as u32))
        .map(|b| {
            let (lo, rest) = (b % inner, b / inner);
            let (y, rest) = (rest % d, rest / d);
            let (x, hi) = (rest % d, rest / d);
            ((hi * d + y) * d + x) * inner + lo
        })
        .collect()
}

/// `x -> 1 ⊗ x` followed by adjacent swaps that sort the tensor factors
/// into the target's site order.
fn swap_network_hom(m: &MinkCategory, d: usize, arrow_index: usize) -> Result<Hom, String> {
    let a = m.h_arrows[arrow_index];
    let us = m.regions[a.source].ordered_sites(&m.spacetime);
    let vs = m.regions[a.target].ordered_sites(&m.spacetime);
    let image: Vec<usize> = us
        .iter()
        .map(|&p| {
            let q = m.spacetime.act(a.sym, p).expect("symmetry acts");
            vs.iter().position(|&s| s == q).expect("image inside target")
        })
        .collect();
    let mut slots: Vec<usize> = (0..vs.len()).filter(|s| !image.contains(s)).collect();
    slots.extend(&image);
    let n = vs.len();
    let dim = d.pow(n as u32);
    // w = S_last ... S_first as a basis permutation: b -> perm[b].
    let mut perm: Vec<usize> = (0..dim).collect();
    for pass in 0..n {
        for k in 0..n - 1 - pass {
            if slots[k] > slots[k + 1] {
                slots.swap(k, k + 1);
                let gate = swap_gate(d, n, k);
                perm.iter_mut().for_each(|b| *b = gate[*b]);
            }
        }
    }
    let mut w = CMatrix::zeros(dim, dim);
    for (b, &img) in perm.iter().enumerate() {
        w[(img, b)] = c(1.0, 0.0);
    }
    let src = AlgebraShape::matrix(d.pow(us.len() as u32)).map_err(err)?;
    let tgt = AlgebraShape::matrix(d.pow(n as u32)).map_err(err)?;
    let conj = AlgElement::from_blocks(&tgt, vec![w]).map_err(err)?;
    Hom::new(src, tgt, vec![vec![d.pow((n - us.len()) as u32)]], conj, 1e-12).map_err(err)
}

fn c9_adjunction() -> Outcome {
    let hull = check_thin_adjunction(&TruncationData::diamond_hull(4, 4).map_err(err)?);
    ensure(hull.holds(), || format!("diamond hull: {:?} {:?}", hull.precondition_failures, hull.counterexample))?;
    let constant = check_thin_adjunction(&TruncationData::constant(4, 4, (0, 1, 2, 1)).map_err(err)?);
    let (u, v, lhs, rhs) = constant.counterexample.ok_or("the constant truncation has no counterexample")?;
    Ok(format!("hull holds on {} pairs; constant fails at U = {u}, V = {v} ({lhs} vs {rhs})", hull.pairs_checked))
}

fn c10_symmetry_transformation() -> Outcome {
    let net = spin_chain(4)?;
    let act = GroupAction::z2_sign(2).map_err(err)?;
    let report = symmetry_transformation_suite(&net, &act, 1, TOL).map_err(err)?;
    all_pass("Z2", &report)?;
    for name in [
        "transformation.trace",
        "transformation.naturality",
        "transformation.cell_typing",
        "transformation.square_naturality",
        "transformation.identity_law",
        "transformation.composition_law",
    ] {
        let r = report.get(name).ok_or_else(|| format!("no record {name}"))?;
        ensure(r.checked > 0, || format!("{name} checked nothing"))?;
    }
    let mut components = global_symmetry_components(&net, &act, 1).map_err(err)?;
    let ambient = net.mink.regions.len() - 1;
    let amb = &net.algebras[ambient];
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u = AlgElement::from_blocks(amb, vec![numkit::random_unitary(amb.blocks()[0], &mut rng)]).map_err(err)?;
    components[ambient] = Hom::inner(amb, u, TOL).map_err(err)?;
    let bad = NaturalTransformationData { source: &net, target: &net, components };
    let (_, bad_report) = build_vertical_transformation(&bad, TOL).map_err(err)?;
    let nat = bad_report.get("transformation.naturality").ok_or("no naturality record")?;
    ensure(!nat.passed, || "perturbed components still pass naturality".into())?;
    Ok(format!("{} records pass; perturbed component fails naturality", report.records.len()))
}

fn c11_klein_gordon() -> Outcome {
    let mut parts = Vec::new();
    for mass in [0.0, 1.0] {
        let report = kg_check_suite(KgLatticeConfig { time_steps: 6, sites: 6, mass }, TOL).map_err(err)?;
        all_pass(&format!("m = {mass}"), &report)?;
        for name in ["kg.hk2_locality", "kg.ext_commutes_p", "kg.cone_support", "kg.kappa_ext"] {
            let r = record_residual(&report, name)?;
            ensure(r == 0.0, || format!("m = {mass}: {name} residual {r:e} is not exactly zero"))?;
        }
        let ccr = record_residual(&report, "kg.weyl_ccr")?;
        ensure(ccr < 1e-12, || format!("m = {mass}: Weyl CCR residual {ccr:e}"))?;
        parts.push(format!("m = {mass}: {} records, CCR {ccr:.1e}", report.records.len()));
    }
    Ok(parts.join("; "))
}

fn run_cli(config: &str, out: &Path) -> Result<(Option<i32>, ReportDocument), String> {
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs").join(config);
    let json = out.join(config);
    let status = Command::new(env!("CARGO_BIN_EXE_aqft"))
        .arg("check")
        .arg(&cfg)
        .arg("--out")
        .arg(&json)
        .output()
        .map_err(err)?
        .status;
    let text = std::fs::read_to_string(&json).map_err(|e| format!("{config}: {e}"))?;
    let doc = ReportDocument::from_json(&text).map_err(|e| format!("{config}: {e}"))?;
    Ok((status.code(), doc))
}

fn c12_cli() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let mut total = 0;
    let expected: [(&str, &[&str]); 4] = [
        ("spin_chain_n4.json", &["squares.left_module", "squares.right_module", "hk2.locality", "hk5.additivity"]),
        ("fixed_point_z2_n4.json", &["squares.left_module", "squares.right_module", "hk2.locality", "hk5.additivity"]),
        ("kg_6x6.json", &["kg.ext_commutes_p", "kg.hk2_locality", "kg.weyl_ccr"]),
        ("kg_6x6_massless.json", &["kg.ext_commutes_p", "kg.hk2_locality", "kg.weyl_ccr"]),
    ];
    for (config, names) in expected {
        let (code, doc) = run_cli(config, dir.path())?;
        for name in names {
            ensure(doc.records.iter().any(|r| r.name == *name), || format!("{config}: no record {name}"))?;
        }
        ensure(code == Some(0), || {
            let failed: Vec<&str> = doc.records.iter().filter(|r| r.status == Status::Fail).map(|r| r.name.as_str()).collect();
            format!("{config} exited {code:?}, failing {failed:?}")
        })?;
        total += doc.records.len();
    }
    let (code, doc) = run_cli("fault_injection.json", dir.path())?;
    ensure(code == Some(1) && doc.summary.failed > 0, || format!("fault_injection exited {code:?}"))?;
    Ok(format!("4 configs exit 0 with {total} records; fault_injection exits 1"))
}

struct Criterion {
    id: &'static str,
    title: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let secs = |s| Some(Duration::from_secs(s));
    let criteria = [
        Criterion { id: "C1", title: "right action equals modular conjugation", budget: secs(1), run: c1_modular_conjugation },
        Criterion { id: "C2", title: "standard form is functorial", budget: secs(5), run: c2_l2_functoriality },
        Criterion { id: "C3", title: "unitors and fusion dimensions", budget: secs(30), run: c3_unitors_and_fusion },
        Criterion { id: "C4", title: "pentagon and triangle", budget: secs(60), run: c4_pentagon_triangle },
        Criterion { id: "C5", title: "bimodularity and fault localization", budget: secs(60), run: c5_bimodularity },
        Criterion { id: "C6", title: "Haag-Kastler axioms", budget: secs(120), run: c6_haag_kastler },
        Criterion { id: "C7", title: "union joins", budget: secs(30), run: c7_union_joins },
        Criterion { id: "C8", title: "generator closure and uniqueness", budget: secs(10), run: c8_generators },
        Criterion { id: "C9", title: "truncation adjunction", budget: secs(5), run: c9_adjunction },
        Criterion { id: "C10", title: "symmetry transformation", budget: secs(30), run: c10_symmetry_transformation },
        Criterion { id: "C11", title: "lattice Klein-Gordon suite", budget: secs(60), run: c11_klein_gordon },
        Criterion { id: "C12", title: "CLI reports and exit codes", budget: None, run: c12_cli },
    ];
    let mut failed = 0;
    for cr in &criteria {
        let start = Instant::now();
        let outcome = (cr.run)();
        let elapsed = start.elapsed();
        let outcome = match (outcome, cr.budget) {
            (Ok(_), Some(b)) if elapsed > b => Err(format!("took {:.2}s, budget {}s", elapsed.as_secs_f64(), b.as_secs())),
            (o, _) => o,
        };
        let budget = cr.budget.map_or("no budget".to_string(), |b| format!("budget {}s", b.as_secs()));
        let time = format!("{:.2}s / {budget}", elapsed.as_secs_f64());
        match outcome {
            Ok(detail) => println!("PASS {:<4} {:<42} [{time}] {detail}", cr.id, cr.title),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:<4} {:<42} [{time}] {detail}", cr.id, cr.title);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

//! Builds the configured object and runs the selected suites.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use aqft_core::dbl::{gamma_closure, SquareId};
use aqft_core::functor::{
    build_functor, check_hk, check_l2_functoriality, check_union_joins, validate_net_input, CheckRecord, NetInput, Report,
};
use aqft_core::mink::{check_strictness, grid_diamonds, check_thin_adjunction, MinkCategory, RegionKind, Spacetime, TruncationData};
use aqft_core::nets::{
    build_fixed_point_net, build_spin_chain_net, check_open_cover_additivity, inject_conjugation_fault, kg_check_suite,
    kg_regions, symmetry_transformation_suite, GroupAction, KgLattice, KgLatticeConfig,
};

use crate::config::{GroupConfig, NetConfig, RunConfig, Suite};
use crate::error::{CliError, Result};
use crate::report::{RecordEntry, ReportDocument};

/// What a configuration describes once built.
pub enum Subject {
    Net { net: NetInput, symmetry: Option<GroupAction> },
    Kg(KgLatticeConfig),
    Spacetime(MinkCategory),
}

impl Subject {
    pub fn name(&self) -> String {
        match self {
            Subject::Net { net, .. } => net.name.clone(),
            Subject::Kg(cfg) => format!("Klein-Gordon lattice {}x{} (m = {})", cfg.time_steps, cfg.sites, cfg.mass),
            Subject::Spacetime(m) => format!("spacetime {}", describe_spacetime(&m.spacetime)),
        }
    }
}

fn describe_spacetime(st: &Spacetime) -> String {
    match st {
        Spacetime::Circle { n } => format!("circle N={n}"),
        Spacetime::Grid { t, x, periodic } => {
            format!("grid {t}x{x} ({})", if *periodic { "periodic in space" } else { "open" })
        }
    }
}

/// Builds the net, lattice or spacetime. Failures here are configuration errors.
pub fn build(cfg: &RunConfig) -> Result<Subject> {
    let tol = cfg.tolerance();
    let subject = match &cfg.net {
        NetConfig::SpinChain { local_dim, symmetry, .. } => {
            let chain = cfg.net.chain_config().expect("spin chain")?;
            let net = build_spin_chain_net(chain)?;
            let symmetry = symmetry.clone().unwrap_or(GroupConfig::Z2Sign).action(*local_dim)?;
            Subject::Net { net, symmetry: Some(symmetry) }
        }
        NetConfig::FixedPoint { local_dim, group, .. } => {
            let chain = cfg.net.chain_config().expect("spin chain")?;
            let base = build_spin_chain_net(chain)?;
            let net = build_fixed_point_net(&base, &group.action(*local_dim)?, tol)?;
            Subject::Net { net, symmetry: None }
        }
        NetConfig::KgLattice { .. } => {
            let kg = cfg.net.kg_config().expect("kg lattice");
            KgLattice::new(kg)?;
            Subject::Kg(kg)
        }
        NetConfig::Custom { .. } => Subject::Spacetime(cfg.net.mink()?),
    };
    match (&cfg.fault, subject) {
        (Some(fault), Subject::Net { net, symmetry }) => {
            let m = &net.mink;
            let arrow = (0..m.h_arrows.len())
                .find(|&k| m.arrow_name(&m.h_arrows[k]) == fault.arrow)
                .ok_or_else(|| CliError::Invalid(format!("no arrow named {}", fault.arrow)))?;
            let net = inject_conjugation_fault(&net, arrow, fault.seed)?;
            Ok(Subject::Net { net, symmetry })
        }
        (_, subject) => Ok(subject),
    }
}

fn single(name: &str, property: &str, violations: &[String], checked: usize) -> Report {
    Report {
        records: vec![CheckRecord {
            name: name.into(),
            property: property.into(),
            passed: violations.is_empty(),
            residual: violations.len() as f64,
            checked,
            witness: violations.first().cloned(),
        }],
    }
}

fn mink_report(m: &MinkCategory) -> Report {
    let mut report = single(
        "mink.strict_laws",
        "pasting is strictly associative and unital and satisfies interchange",
        &check_strictness(m, None),
        m.squares.len(),
    );
    let bad: Vec<String> = m.squares.iter().filter_map(|sq| m.validate_square(sq).err().map(|e| e.to_string())).collect();
    report.extend(single("mink.squares_commute", "every listed square commutes pointwise", &bad, m.squares.len()));
    report
}

fn gamma_report(m: &MinkCategory) -> aqft_core::Result<Report> {
    let td = m.to_thin_double();
    let closure = gamma_closure(&td)?;
    let gens: HashSet<SquareId> = closure.squares.iter().zip(&closure.is_generator).filter(|(_, g)| **g).map(|(s, _)| *s).collect();
    let marked: HashSet<SquareId> = td.marked_generators().into_iter().collect();
    let mismatch: Vec<String> = gens.symmetric_difference(&marked).map(|s| td.describe(s)).collect();
    let mut report = single(
        "gamma.generators",
        "the closure is generated by the unit squares and identity-globular squares",
        &mismatch,
        marked.len(),
    );
    let bad: Vec<String> = closure
        .squares
        .iter()
        .filter_map(|s| m.validate_square(s).err().map(|e| e.to_string()))
        .collect();
    report.extend(single("gamma.closure_commutes", "every pasted square commutes pointwise", &bad, closure.len()));
    Ok(report)
}

fn adjunction_report(t: usize, x: usize) -> aqft_core::Result<Report> {
    let td = TruncationData::diamond_hull(t, x)?;
    let rep = check_thin_adjunction(&td);
    let mut violations = rep.precondition_failures.clone();
    if let Some((u, v, lhs, rhs)) = &rep.counterexample {
        violations.push(format!("U = {u}, V = {v}: τ(U) ⊆ V is {lhs}, U ⊆ ι(V) is {rhs}"));
    }
    Ok(single(
        "adjunction.diamond_hull",
        "τ(U) ⊆ V iff U ⊆ ι(V) for the causal-hull truncation",
        &violations,
        rep.pairs_checked,
    ))
}

fn run_suite(subject: &Subject, cfg: &RunConfig, suite: Suite) -> aqft_core::Result<Report> {
    let tol = cfg.tolerance();
    match (subject, suite) {
        (Subject::Net { net, .. }, Suite::Validate) => Ok(validate_net_input(net, tol)),
        (Subject::Net { net, .. }, Suite::L2) => check_l2_functoriality(net, tol),
        (Subject::Net { net, .. }, Suite::Hk) => check_hk(net, tol),
        (Subject::Net { net, .. }, Suite::Bimodularity) => {
            let b = build_functor(net, tol)?.check_bimodularity()?;
            Ok(Report { records: b.to_records(tol) })
        }
        (Subject::Net { net, .. }, Suite::UnionJoin) => check_union_joins(net, tol),
        (Subject::Net { net, .. }, Suite::Additivity) => check_open_cover_additivity(net, tol),
        (Subject::Net { net, symmetry: Some(act) }, Suite::Transformation) => {
            symmetry_transformation_suite(net, act, usize::from(act.elements.len() > 1), tol)
        }
        (Subject::Net { net, .. }, Suite::Mink) => Ok(mink_report(&net.mink)),
        (Subject::Net { net, .. }, Suite::Gamma) => gamma_report(&net.mink),
        (Subject::Kg(kg), Suite::Kg) => kg_check_suite(*kg, tol),
        (Subject::Spacetime(m), Suite::Mink) => Ok(mink_report(m)),
        (Subject::Spacetime(m), Suite::Gamma) => gamma_report(m),
        (Subject::Spacetime(m), Suite::Adjunction) => match m.spacetime {
            Spacetime::Grid { t, x, periodic: false } => adjunction_report(t, x),
            _ => Err(aqft_core::Error::Invalid("the truncation lives on an open grid".into())),
        },
        _ => Err(aqft_core::Error::Invalid(format!("suite {} does not apply here", suite.name()))),
    }
}

/// Runs the selected suites. A suite that errors contributes one failing record.
pub fn check(cfg: &RunConfig) -> Result<ReportDocument> {
    let subject = build(cfg)?;
    let mut records = Vec::new();
    for suite in cfg.selected_suites() {
        match run_suite(&subject, cfg, suite) {
            Ok(r) => records.extend(r.records.into_iter().map(|c| RecordEntry::from_check(suite, c))),
            Err(e) => records.push(RecordEntry::aborted(suite, &e)),
        }
    }
    Ok(ReportDocument::new(cfg.clone(), subject.name(), records))
}

fn region_counts(m: &MinkCategory) -> String {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &m.regions {
        let k = match r.kind {
            RegionKind::Arc { .. } => "arcs",
            RegionKind::Diamond { .. } => "diamonds",
            RegionKind::Box { .. } => "boxes",
            RegionKind::Ambient => "ambient",
        };
        *counts.entry(k).or_default() += 1;
    }
    counts.iter().map(|(k, n)| format!("{n} {k}")).collect::<Vec<_>>().join(" + ")
}

fn spacetime_lines(out: &mut String, m: &MinkCategory) {
    let composable = m.h_arrows.iter().map(|h| m.h_arrows.iter().filter(|k| k.source == h.target).count()).sum::<usize>();
    let _ = writeln!(out, "spacetime: {}", describe_spacetime(&m.spacetime));
    let _ = writeln!(out, "regions: {} ({})", m.regions.len(), region_counts(m));
    let _ = writeln!(out, "horizontal arrows: {}", m.h_arrows.len());
    let _ = writeln!(out, "inclusions: {}", m.v_arrows.len());
    let _ = writeln!(out, "commuting squares: {}", m.squares.len());
    let _ = writeln!(out, "fusion table: {composable} composable arrow pairs");
}

/// Counts of the configured object, one fact per line.
pub fn info(cfg: &RunConfig) -> Result<String> {
    let subject = build(cfg)?;
    let mut out = String::new();
    let _ = writeln!(out, "{} ({})", subject.name(), cfg.net.kind());
    let suites = cfg.selected_suites();
    if suites.is_empty() {
        return Ok(out);
    }
    match &subject {
        Subject::Net { net, .. } => {
            spacetime_lines(&mut out, &net.mink);
            let amb = &net.algebras[net.mink.ambient];
            let _ = writeln!(out, "ambient algebra: blocks {:?}, dimension {}", amb.blocks(), amb.dim());
            let total: usize = net.algebras.iter().map(|a| a.dim()).sum();
            let _ = writeln!(out, "local algebras: total dimension {total}");
            let _ = writeln!(out, "arrows:");
            for a in &net.mink.h_arrows {
                let _ = writeln!(out, "  {}", net.mink.arrow_name(a));
            }
        }
        Subject::Kg(kg) => {
            let lat = KgLattice::new(*kg)?;
            let _ = writeln!(out, "spacetime: {}", describe_spacetime(&lat.st));
            let _ = writeln!(out, "points: {} ({} interior)", lat.num_points(), lat.interior_points().len());
            let _ = writeln!(out, "diamonds: {}", grid_diamonds(&lat.st).len());
            let regions = kg_regions(&lat);
            let _ = writeln!(out, "diamonds in the lemma suite: {}", regions.len());
            let mut dims: BTreeMap<usize, usize> = BTreeMap::new();
            for r in &regions {
                *dims.entry(lat.class_space(r)?.dim()).or_default() += 1;
            }
            let hist: Vec<String> = dims.iter().map(|(d, n)| format!("{n} of dimension {d}")).collect();
            let _ = writeln!(out, "class spaces: {}", hist.join(", "));
        }
        Subject::Spacetime(m) => spacetime_lines(&mut out, m),
    }
    let names: Vec<&str> = suites.iter().map(|s| s.name()).collect();
    let _ = writeln!(out, "suites: {}", names.join(", "));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GammaStats {
    pub generators: usize,
    pub closure: usize,
    pub squares: usize,
}

fn stats_of(m: &MinkCategory) -> Result<GammaStats> {
    let closure = gamma_closure(&m.to_thin_double())?;
    Ok(GammaStats {
        generators: closure.is_generator.iter().filter(|g| **g).count(),
        closure: closure.len(),
        squares: m.squares.len(),
    })
}

pub fn gamma_stats(cfg: &RunConfig) -> Result<GammaStats> {
    stats_of(&cfg.net.mink()?)
}

pub fn gamma(cfg: &RunConfig) -> Result<String> {
    let m = cfg.net.mink()?;
    let s = stats_of(&m)?;
    let mut out = String::new();
    let _ = writeln!(out, "spacetime: {}", describe_spacetime(&m.spacetime));
    let _ = writeln!(out, "generators: {}", s.generators);
    let _ = writeln!(out, "closure: {}", s.closure);
    let _ = writeln!(out, "commuting squares: {}", s.squares);
    let _ = writeln!(out, "closure strictly smaller: {}", if s.closure < s.squares { "yes" } else { "no" });
    Ok(out)
}

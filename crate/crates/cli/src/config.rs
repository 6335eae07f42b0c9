//! Run configuration: a JSON document naming a net, the suites to run and
//! the tolerance. Unknown keys are rejected.

use std::path::{Path, PathBuf};

use aqft_core::mink::MinkCategory;
use aqft_core::nets::{GroupAction, KgLatticeConfig, SpinChainConfig};
use aqft_core::numkit::{c, CMatrix, CVector};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest ambient Hilbert space dimension `d^N` accepted for spin chains.
pub const MAX_CHAIN_DIM: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub net: NetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub suites: Option<Vec<Suite>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// JSON report path; the text report goes next to it with a `.txt` extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fault: Option<FaultConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NetConfig {
    SpinChain {
        sites: usize,
        local_dim: usize,
        /// Global symmetry used by the `transformation` suite.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        symmetry: Option<GroupConfig>,
    },
    FixedPoint {
        sites: usize,
        local_dim: usize,
        group: GroupConfig,
    },
    KgLattice {
        time_steps: usize,
        sites: usize,
        mass: f64,
    },
    /// A bare spacetime without a net, for the structural suites.
    Custom { spacetime: SpacetimeConfig },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GroupConfig {
    Trivial,
    /// `Z_2` acting by `diag(1, -1, 1, ...)` on each site.
    Z2Sign,
    /// `Z_order` acting by `diag(1, ω, ω², ...)`, `ω = exp(2πi / order)`.
    Clock { order: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpacetimeConfig {
    Circle { sites: usize },
    Grid { time_steps: usize, sites: usize, periodic: bool },
}

/// Replaces `A(h)` by `Ad(u) ∘ A(h)` for a seeded random unitary `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FaultConfig {
    /// Arrow name as listed by `aqft info`, e.g. `rot(0):arc(0,1)->ambient`.
    pub arrow: String,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Suite {
    /// Typing, trace preservation, injectivity and functoriality of the net.
    Validate,
    /// Functoriality of the standard form.
    L2,
    /// Isotony, locality, time slice, covariance and additivity.
    Hk,
    /// Both module identities on every commuting square.
    Bimodularity,
    /// Joins of two regions equal the algebra of their union.
    UnionJoin,
    /// Additivity over two-region and per-site covers.
    Additivity,
    /// The vertical transformation induced by the global symmetry.
    Transformation,
    /// The lattice Klein-Gordon lemma suite.
    Kg,
    /// Strict double-category laws of the spacetime.
    Mink,
    /// Closure of the marked generators under pasting.
    Gamma,
    /// Thin adjunction of the causal-hull truncation.
    Adjunction,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Validate => "validate",
            Suite::L2 => "l2",
            Suite::Hk => "hk",
            Suite::Bimodularity => "bimodularity",
            Suite::UnionJoin => "union_join",
            Suite::Additivity => "additivity",
            Suite::Transformation => "transformation",
            Suite::Kg => "kg",
            Suite::Mink => "mink",
            Suite::Gamma => "gamma",
            Suite::Adjunction => "adjunction",
        }
    }
}

impl NetConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            NetConfig::SpinChain { .. } => "spin_chain",
            NetConfig::FixedPoint { .. } => "fixed_point",
            NetConfig::KgLattice { .. } => "kg_lattice",
            NetConfig::Custom { .. } => "custom",
        }
    }

    pub fn default_suites(&self) -> Vec<Suite> {
        match self {
            NetConfig::SpinChain { .. } | NetConfig::FixedPoint { .. } => {
                vec![Suite::Validate, Suite::Hk, Suite::Bimodularity]
            }
            NetConfig::KgLattice { .. } => vec![Suite::Kg],
            NetConfig::Custom { .. } => vec![Suite::Mink, Suite::Gamma],
        }
    }

    pub fn supports(&self, suite: Suite) -> bool {
        use Suite::*;
        match self {
            NetConfig::SpinChain { .. } => !matches!(suite, Kg | Adjunction),
            NetConfig::FixedPoint { .. } => !matches!(suite, Kg | Adjunction | Transformation),
            NetConfig::KgLattice { .. } => suite == Kg,
            NetConfig::Custom { spacetime } => match suite {
                Mink | Gamma => true,
                Adjunction => matches!(spacetime, SpacetimeConfig::Grid { periodic: false, .. }),
                _ => false,
            },
        }
    }

    /// The spacetime double category underlying the configuration.
    pub fn mink(&self) -> Result<MinkCategory> {
        let m = match self {
            NetConfig::SpinChain { sites, .. } | NetConfig::FixedPoint { sites, .. } => MinkCategory::circle(*sites),
            NetConfig::KgLattice { .. } => {
                return Err(CliError::Invalid(
                    "the diamond category of a periodic lattice is not enumerated; use a custom grid spacetime".into(),
                ))
            }
            NetConfig::Custom { spacetime: SpacetimeConfig::Circle { sites } } => MinkCategory::circle(*sites),
            NetConfig::Custom { spacetime: SpacetimeConfig::Grid { time_steps, sites, periodic } } => {
                MinkCategory::diamond_grid(*time_steps, *sites, *periodic)
            }
        };
        m.map_err(|e| CliError::Invalid(e.to_string()))
    }

    pub fn chain_config(&self) -> Option<Result<SpinChainConfig>> {
        match self {
            NetConfig::SpinChain { sites, local_dim, .. } | NetConfig::FixedPoint { sites, local_dim, .. } => Some(
                SpinChainConfig::new(*sites, *local_dim)
                    .map_err(|e| CliError::Invalid(e.to_string()))
                    .and_then(|cfg| {
                        let dim = (cfg.local_dim as u128).checked_pow(cfg.sites as u32).unwrap_or(u128::MAX);
                        if dim > MAX_CHAIN_DIM as u128 {
                            return Err(CliError::Invalid(format!(
                                "local_dim^sites = {dim} exceeds the supported maximum {MAX_CHAIN_DIM}"
                            )));
                        }
                        Ok(cfg)
                    }),
            ),
            _ => None,
        }
    }

    pub fn kg_config(&self) -> Option<KgLatticeConfig> {
        match self {
            NetConfig::KgLattice { time_steps, sites, mass } => {
                Some(KgLatticeConfig { time_steps: *time_steps, sites: *sites, mass: *mass })
            }
            _ => None,
        }
    }
}

impl GroupConfig {
    pub fn action(&self, local_dim: usize) -> Result<GroupAction> {
        let act = match self {
            GroupConfig::Trivial => Ok(GroupAction::trivial(local_dim)),
            GroupConfig::Z2Sign => GroupAction::z2_sign(local_dim),
            GroupConfig::Clock { order } => {
                if *order == 0 {
                    return Err(CliError::Invalid("clock order must be positive".into()));
                }
                let w = 2.0 * std::f64::consts::PI / *order as f64;
                let v = CMatrix::from_diagonal(&CVector::from_fn(local_dim, |k, _| {
                    let a = w * (k % order) as f64;
                    c(a.cos(), a.sin())
                }));
                GroupAction::cyclic(&format!("Z{order}"), v, *order, 1e-12)
            }
        };
        act.map_err(|e| CliError::Invalid(e.to_string()))
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(CliError::Parse)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(path.display().to_string(), e))?;
        Self::from_json(&text)
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(DEFAULT_TOL)
    }

    pub fn selected_suites(&self) -> Vec<Suite> {
        self.suites.clone().unwrap_or_else(|| self.net.default_suites())
    }

    /// Checks the parameter preconditions without building anything large.
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.tolerance {
            if !(t.is_finite() && t > 0.0) {
                return Err(CliError::Invalid(format!("tolerance must be finite and positive, got {t}")));
            }
        }
        if let Some(cfg) = self.net.chain_config() {
            cfg?;
        }
        match &self.net {
            NetConfig::SpinChain { local_dim, symmetry: Some(g), .. } | NetConfig::FixedPoint { local_dim, group: g, .. } => {
                g.action(*local_dim)?;
            }
            NetConfig::KgLattice { time_steps, sites, mass } => {
                if *time_steps < 4 || *sites < 3 {
                    return Err(CliError::Invalid(format!("the lattice needs time_steps ≥ 4 and sites ≥ 3, got {time_steps}x{sites}")));
                }
                if !(mass.is_finite() && *mass >= 0.0) {
                    return Err(CliError::Invalid("mass must be finite and non-negative".into()));
                }
            }
            NetConfig::Custom { spacetime } => match spacetime {
                SpacetimeConfig::Circle { sites } if *sites < 2 => {
                    return Err(CliError::Invalid("a circle needs at least two sites".into()));
                }
                SpacetimeConfig::Grid { time_steps, sites, .. } if *time_steps == 0 || *sites == 0 => {
                    return Err(CliError::Invalid("grid dimensions must be positive".into()));
                }
                _ => {}
            },
            _ => {}
        }
        for s in self.selected_suites() {
            if !self.net.supports(s) {
                return Err(CliError::Invalid(format!("suite {} does not apply to {} configurations", s.name(), self.net.kind())));
            }
        }
        if self.fault.is_some() && !matches!(self.net, NetConfig::SpinChain { .. } | NetConfig::FixedPoint { .. }) {
            return Err(CliError::Invalid("fault injection needs a spin_chain or fixed_point net".into()));
        }
        Ok(())
    }
}

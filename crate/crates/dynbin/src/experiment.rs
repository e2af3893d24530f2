//! Seeded Monte-Carlo experiments: one generator family, one policy, many
//! trials run in parallel and collected in seed order.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Context, Result};
use dynbin_core::algorithms::{AlgorithmSpec, MigOrder};
use dynbin_core::audit::{self, audit_run, Check};
use dynbin_core::generators::{self, UniformSpec};
use dynbin_core::oracles::{opt_total, OptReport};
use dynbin_core::{Instance, Ratio};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::report::{Summary, TrialRow};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AlgName {
    Firstfit,
    Alg1,
    Alg2,
    Sizecost,
    Delay,
}

/// Policy selection as written in configs and on the command line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgConfig {
    pub alg: AlgName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay_c: Option<f64>,
    #[serde(default)]
    pub mig_order: MigOrder,
}

pub const DEFAULT_ALPHA: f64 = 0.25;
pub const DEFAULT_F: f64 = 0.5;
pub const DEFAULT_C: f64 = 100.0;

fn ratio(x: f64, what: &str) -> Result<Ratio> {
    Ratio::from_decimal(x).ok_or_else(|| anyhow!("{} = {} is not a decimal in [0, 1e9]", what, x))
}

impl AlgConfig {
    pub fn new(alg: AlgName) -> Self {
        AlgConfig {
            alg,
            alpha: None,
            f: None,
            delay_c: None,
            mig_order: MigOrder::Id,
        }
    }

    pub fn spec(&self) -> Result<AlgorithmSpec> {
        let alpha = || ratio(self.alpha.unwrap_or(DEFAULT_ALPHA), "alpha");
        let order = self.mig_order;
        let spec = match self.alg {
            AlgName::Firstfit => AlgorithmSpec::FirstFit,
            AlgName::Alg1 => AlgorithmSpec::Alg1 {
                alpha: alpha()?,
                f: ratio(self.f.unwrap_or(DEFAULT_F), "f")?,
                order,
            },
            AlgName::Alg2 => AlgorithmSpec::Alg2 { alpha: alpha()?, order },
            AlgName::Sizecost => AlgorithmSpec::SizeCost { alpha: alpha()?, order },
            AlgName::Delay => AlgorithmSpec::Delay {
                c: self.delay_c.unwrap_or(DEFAULT_C),
            },
        };
        spec.build().map_err(|e| anyhow!("{}", e))?;
        Ok(spec)
    }
}

/// Instance family with its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum FamilySpec {
    Fig2 {
        k: u64,
        mu: f64,
    },
    Tradeoff {
        inv_s: u64,
        k: u64,
        mu: f64,
    },
    Delaylb {
        c: u64,
    },
    Basiclb {
        k: u64,
        mu: f64,
    },
    Uniform {
        n: usize,
        scale: u64,
        size_min: u64,
        size_max: u64,
        dur_min: f64,
        dur_max: f64,
        window: f64,
        quantum: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        max_live: Option<usize>,
    },
}

fn get<T: std::str::FromStr>(kv: &[(String, String)], key: &str, default: T) -> Result<T> {
    match kv.iter().rev().find(|(k, _)| k == key) {
        Some((_, v)) => v.parse().map_err(|_| anyhow!("cannot parse {}={}", key, v)),
        None => Ok(default),
    }
}

impl FamilySpec {
    pub fn name(&self) -> &'static str {
        match self {
            FamilySpec::Fig2 { .. } => "fig2",
            FamilySpec::Tradeoff { .. } => "tradeoff",
            FamilySpec::Delaylb { .. } => "delaylb",
            FamilySpec::Basiclb { .. } => "basiclb",
            FamilySpec::Uniform { .. } => "uniform",
        }
    }

    /// Builds a family from `key=value` pairs separated by commas; missing
    /// keys take defaults.
    pub fn from_params(family: &str, params: &str) -> Result<Self> {
        let mut kv = Vec::new();
        for part in params.split([',', ';']).map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| anyhow!("parameter `{}` is not key=value", part))?;
            kv.push((k.trim().replace('-', "_"), v.trim().to_string()));
        }
        let d = UniformSpec::default();
        let spec = match family {
            "fig2" => FamilySpec::Fig2 {
                k: get(&kv, "k", 4)?,
                mu: get(&kv, "mu", 10.0)?,
            },
            "tradeoff" => FamilySpec::Tradeoff {
                inv_s: get(&kv, "inv_s", 4)?,
                k: get(&kv, "k", 8)?,
                mu: get(&kv, "mu", 16.0)?,
            },
            "delaylb" => FamilySpec::Delaylb { c: get(&kv, "c", 16)? },
            "basiclb" => FamilySpec::Basiclb {
                k: get(&kv, "k", 8)?,
                mu: get(&kv, "mu", 8.0)?,
            },
            "uniform" => FamilySpec::Uniform {
                n: get(&kv, "n", d.n)?,
                scale: get(&kv, "scale", d.scale)?,
                size_min: get(&kv, "size_min", d.size_num.0)?,
                size_max: get(&kv, "size_max", d.size_num.1)?,
                dur_min: get(&kv, "dur_min", d.duration.0)?,
                dur_max: get(&kv, "dur_max", d.duration.1)?,
                window: get(&kv, "window", d.window)?,
                quantum: get(&kv, "quantum", d.quantum)?,
                max_live: match kv.iter().rev().find(|(k, _)| k == "max_live") {
                    Some((_, v)) => Some(v.parse().map_err(|_| anyhow!("cannot parse max_live={}", v))?),
                    None => None,
                },
            },
            other => bail!("unknown family `{}` (fig2|tradeoff|delaylb|basiclb|uniform)", other),
        };
        let known: &[&str] = match family {
            "fig2" | "basiclb" => &["k", "mu"],
            "tradeoff" => &["inv_s", "k", "mu"],
            "delaylb" => &["c"],
            _ => &[
                "n", "scale", "size_min", "size_max", "dur_min", "dur_max", "window", "quantum", "max_live",
            ],
        };
        if let Some((k, _)) = kv.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            bail!("family {} has no parameter `{}`", family, k);
        }
        Ok(spec)
    }

    /// Canonical `key=value;...` rendering used in the CSV.
    pub fn params(&self) -> String {
        let mut s = String::new();
        match self {
            FamilySpec::Fig2 { k, mu } | FamilySpec::Basiclb { k, mu } => write!(s, "k={};mu={}", k, mu),
            FamilySpec::Tradeoff { inv_s, k, mu } => write!(s, "inv_s={};k={};mu={}", inv_s, k, mu),
            FamilySpec::Delaylb { c } => write!(s, "c={}", c),
            FamilySpec::Uniform {
                n,
                scale,
                size_min,
                size_max,
                dur_min,
                dur_max,
                window,
                quantum,
                max_live,
            } => {
                let r = write!(
                    s,
                    "n={};scale={};size={}..{};dur={}..{};window={};quantum={}",
                    n, scale, size_min, size_max, dur_min, dur_max, window, quantum
                );
                match max_live {
                    Some(m) => write!(s, ";max_live={}", m),
                    None => r,
                }
            }
        }
        .expect("writing to a String");
        s
    }

    pub fn uniform_spec(&self) -> Option<UniformSpec> {
        match *self {
            FamilySpec::Uniform {
                n,
                scale,
                size_min,
                size_max,
                dur_min,
                dur_max,
                window,
                quantum,
                max_live,
            } => Some(UniformSpec {
                n,
                scale,
                size_num: (size_min, size_max),
                duration: (dur_min, dur_max),
                window,
                quantum,
                max_live,
            }),
            _ => None,
        }
    }

    pub fn generate(&self, seed: u64) -> Result<Instance> {
        let inst = match *self {
            FamilySpec::Fig2 { k, mu } => generators::gen_fig2(k, mu).map(|(i, _)| i),
            FamilySpec::Tradeoff { inv_s, k, mu } => generators::gen_tradeoff_lb(inv_s, k, mu, seed),
            FamilySpec::Delaylb { c } => generators::gen_delay_lb(c, seed),
            FamilySpec::Basiclb { k, mu } => generators::gen_basic_lb(k, mu, seed),
            FamilySpec::Uniform { .. } => generators::gen_uniform(&self.uniform_spec().expect("uniform"), seed),
        };
        inst.map_err(|e| anyhow!("{}: {}", self.name(), e))
    }
}

/// Which groups of checks count towards a trial passing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Assertions {
    /// Bad-bin count and junk load after every event.
    pub state: bool,
    /// `ALG_t` against `OPT_t` after every event.
    pub per_time: bool,
    /// Migration count and size budgets.
    pub budgets: bool,
    /// Delay schedule and sub-instance decomposition.
    pub delay: bool,
    /// Step integral, departures and ledger agree.
    pub accounting: bool,
}

impl Default for Assertions {
    fn default() -> Self {
        Assertions {
            state: true,
            per_time: true,
            budgets: true,
            delay: true,
            accounting: true,
        }
    }
}

impl Assertions {
    pub fn none() -> Self {
        Assertions {
            state: false,
            per_time: false,
            budgets: false,
            delay: false,
            accounting: false,
        }
    }

    pub fn enabled(&self, check: &str) -> bool {
        match check {
            audit::BAD_BINS | audit::JUNK_LOAD => self.state,
            audit::PER_TIME => self.per_time,
            audit::MIGRATION_TOTAL | audit::MIGRATION_CLASS | audit::MIGRATED_SIZE => self.budgets,
            audit::DELAY_SCHEDULE | audit::DECOMPOSITION | audit::SMALL_PARTS | audit::BIG_PARTS => self.delay,
            _ => self.accounting,
        }
    }
}

/// Everything needed to reproduce a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: AlgConfig,
    pub family: FamilySpec,
    pub trials: u64,
    pub base_seed: u64,
    #[serde(default)]
    pub assertions: Assertions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<std::path::PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub json: Option<std::path::PathBuf>,
}

impl ExperimentConfig {
    pub fn seeds(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.trials).map(move |i| self.base_seed.wrapping_add(i))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub row: Option<TrialRow>,
    pub checks: Vec<Check>,
    pub passed: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub config: ExperimentConfig,
    pub trials: Vec<Trial>,
    pub summary: Summary,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.trials.iter().all(|t| t.passed)
    }

    pub fn rows(&self) -> Vec<TrialRow> {
        self.trials.iter().filter_map(|t| t.row.clone()).collect()
    }
}

pub fn row_for(
    family: &FamilySpec,
    seed: u64,
    spec: &AlgorithmSpec,
    result: &dynbin_core::engine::SimulationResult,
    opt: &OptReport,
) -> TrialRow {
    let opt_lb = opt.lower_bound.max(opt.lower_integral);
    let denom = opt.opt_total.unwrap_or(opt_lb);
    let ratio = if denom > 0.0 {
        Some(result.total_active_time / denom)
    } else {
        None
    };
    let per_time = match spec {
        AlgorithmSpec::Delay { .. } => None,
        _ => audit::max_pertime_ratio(result, opt),
    };
    let counts = result.migration_counts();
    TrialRow {
        family: family.name().to_string(),
        params: family.params(),
        seed,
        alg: spec.name().to_string(),
        alpha: spec.alpha().map(|a| a.to_f64()),
        f: spec.f().map(|f| f.to_f64()),
        c: match spec {
            AlgorithmSpec::Delay { c } => Some(*c),
            _ => None,
        },
        alg_cost: result.total_active_time,
        opt_lb,
        opt_exact: opt.opt_total,
        opt_ub: opt.upper_bound,
        ratio,
        mig_unit: counts.unit,
        mig_size: counts.size_sum,
        max_pertime_ratio: per_time,
        phases: result.phases,
    }
}

/// One seeded trial with the configured assertions.
pub fn run_trial(config: &ExperimentConfig, spec: &AlgorithmSpec, seed: u64) -> Trial {
    let attempt = || -> Result<(TrialRow, Vec<Check>)> {
        let inst = config.family.generate(seed)?;
        let out = audit_run(&inst, spec, None, None, false).map_err(|e| anyhow!("{}", e))?;
        let opt = match out.opt {
            Some(o) => o,
            None => {
                let resolved = inst.with_durations(&out.result.resolved_durations());
                opt_total(&resolved).map_err(|e| anyhow!("{}", e))?
            }
        };
        let row = row_for(&config.family, seed, spec, &out.result, &opt);
        let checks = out
            .checks
            .into_iter()
            .filter(|c| config.assertions.enabled(&c.name))
            .collect();
        Ok((row, checks))
    };
    match attempt() {
        Ok((row, checks)) => Trial {
            seed,
            passed: checks.iter().all(|c| c.passed),
            row: Some(row),
            checks,
            error: None,
        },
        Err(e) => Trial {
            seed,
            row: None,
            checks: Vec::new(),
            passed: false,
            error: Some(format!("{:#}", e)),
        },
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    let spec = config.algorithm.spec().context("invalid algorithm parameters")?;
    config.family.generate(config.base_seed)?;
    let seeds: Vec<u64> = config.seeds().collect();
    let trials: Vec<Trial> = seeds.par_iter().map(|&s| run_trial(config, &spec, s)).collect();
    let rows: Vec<TrialRow> = trials.iter().filter_map(|t| t.row.clone()).collect();
    let summary = Summary::from_rows(&rows, trials.iter().filter(|t| !t.passed).count());
    Ok(Report {
        config: config.clone(),
        trials,
        summary,
    })
}

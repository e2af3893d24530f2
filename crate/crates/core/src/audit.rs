//! Mechanical checks of the guarantees each policy comes with.
//!
//! State checks run after every timestamp through an [`Inspector`]; the rest
//! are computed from a finished [`SimulationResult`]. Every check is exact
//! integer arithmetic where the quantities are sizes or counts.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::algorithms::{decompose_delay_run, size_class, AlgorithmSpec, FirstFit};
use crate::engine::{
    simulate, simulate_with, DurationResolver, Inspector, Label, PackingState, SimError, SimOptions,
    SimulationResult,
};
use crate::instance::Instance;
use crate::oracles::{opt_total, OptReport};
use crate::ratio::Ratio;

/// Outcome of one named check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.into(),
            passed,
            detail,
        }
    }
}

pub const BAD_BINS: &str = "single_bad_bin";
pub const JUNK_LOAD: &str = "junk_load";
pub const PER_TIME: &str = "per_time_bound";
pub const MIGRATION_TOTAL: &str = "migration_budget";
pub const MIGRATION_CLASS: &str = "migration_budget_per_class";
pub const MIGRATED_SIZE: &str = "migrated_size_budget";
pub const DELAY_SCHEDULE: &str = "delay_schedule";
pub const DECOMPOSITION: &str = "decomposition_identity";
pub const SMALL_PARTS: &str = "small_part_ratio";
pub const BIG_PARTS: &str = "big_part_ratio";
pub const ACCOUNTING: &str = "accounting";
pub const TRACE: &str = "trace";

/// Per-timestamp checks on the packing state.
///
/// With `strict` set the first violation aborts the simulation; otherwise
/// violations are counted and the first one of each kind is kept.
#[derive(Debug, Clone, Default)]
pub struct StateAudit {
    pub bad_bins: bool,
    pub junk: bool,
    pub strict: bool,
    events: u64,
    failures: BTreeMap<&'static str, (u64, String)>,
}

impl StateAudit {
    pub fn new(bad_bins: bool, junk: bool) -> Self {
        StateAudit {
            bad_bins,
            junk,
            ..StateAudit::default()
        }
    }

    pub fn strict(mut self) -> Self {
        self.strict = true;
        self
    }

    pub fn violations(&self) -> u64 {
        self.failures.values().map(|f| f.0).sum()
    }

    pub fn checks(&self) -> Vec<Check> {
        let mut out = Vec::new();
        let mut push = |on: bool, name: &'static str| {
            if !on {
                return;
            }
            out.push(match self.failures.get(name) {
                Some((n, first)) => Check::new(name, false, format!("{} violations, first: {}", n, first)),
                None => Check::new(name, true, format!("{} timestamps", self.events)),
            });
        };
        push(self.bad_bins, BAD_BINS);
        push(self.junk, JUNK_LOAD);
        out
    }

    fn fail(&mut self, name: &'static str, detail: String) -> Result<(), String> {
        if self.strict {
            return Err(format!("{}: {}", name, detail));
        }
        let e = self.failures.entry(name).or_insert((0, detail));
        e.0 += 1;
        Ok(())
    }
}

impl Inspector for StateAudit {
    fn inspect(&mut self, time: f64, state: &PackingState) -> Result<(), String> {
        self.events += 1;
        if self.bad_bins {
            let mut bad: BTreeMap<Option<u32>, u32> = BTreeMap::new();
            for b in state.bins() {
                if b.label == Label::Bad {
                    *bad.entry(b.class).or_insert(0) += 1;
                }
            }
            for (class, n) in bad {
                if n > 1 || class == Some(0) {
                    let which = match class {
                        Some(c) => format!("class {}", c),
                        None => "unclassed bins".into(),
                    };
                    self.fail(BAD_BINS, format!("t={}: {} has {} Bad bins", time, which, n))?;
                }
            }
        }
        if self.junk {
            let scale = state.scale();
            let over: Vec<(u64, u64)> = state
                .bins()
                .filter(|b| matches!(b.label, Label::Junk { .. }) && b.load > scale)
                .map(|b| (b.id, b.load))
                .collect();
            for (id, load) in over {
                self.fail(JUNK_LOAD, format!("t={}: junk bin {} at load {}/{}", time, id, load, scale))?;
            }
        }
        Ok(())
    }
}

/// `ALG_t ≤ OPT_t/α + per_phase·phases + constant` on every step.
///
/// Where `OPT_t` could not be solved exactly the check uses the lower bound,
/// which can only make it stricter; a failure there is reported as
/// inconclusive and counted as a failure.
pub fn per_time_bound(result: &SimulationResult, opt: &OptReport, alpha: Ratio, per_phase: u64, constant: u64) -> Check {
    let (num, den) = (alpha.num() as u128, alpha.den() as u128);
    let mut bad = 0u64;
    let mut first = String::new();
    for s in &result.steps {
        if s.open == 0 {
            continue;
        }
        let (value, exact) = opt.value_at(s.start);
        let add = per_phase as u128 * s.phases as u128 + constant as u128;
        if s.open as u128 * num > value as u128 * den + add * num {
            bad += 1;
            if first.is_empty() {
                first = format!(
                    "t={}: ALG_t={} OPT_t{}{} phases={}",
                    s.start,
                    s.open,
                    if exact.is_some() { "=" } else { ">=" },
                    value,
                    s.phases
                );
            }
        }
    }
    if bad == 0 {
        Check::new(PER_TIME, true, format!("{} steps", result.steps.len()))
    } else {
        Check::new(PER_TIME, false, format!("{} steps over the bound, first: {}", bad, first))
    }
}

/// Largest `ALG_t / OPT_t` over the steps, using exact `OPT_t` only.
pub fn max_pertime_ratio(result: &SimulationResult, opt: &OptReport) -> Option<f64> {
    let mut best: Option<f64> = None;
    for s in &result.steps {
        if let (_, Some(o)) = opt.value_at(s.start) {
            if o > 0 {
                let r = s.open as f64 / o as f64;
                best = Some(best.map_or(r, |b: f64| b.max(r)));
            }
        }
    }
    best
}

/// Unit migrations within `4α/(1-2α)` times the item count, overall and for
/// each size class against the number of items of that class.
pub fn migration_budget(result: &SimulationResult, instance: &Instance, alpha: Ratio) -> Vec<Check> {
    let (num, den) = (alpha.num() as u128, alpha.den() as u128);
    let slack = den - 2 * num;
    let within = |count: u64, n: u64| count as u128 * slack <= 4 * num * n as u128;

    let n = instance.len() as u64;
    let total = result.ledger.unit;
    let bound = 4.0 * alpha.to_f64() / (1.0 - 2.0 * alpha.to_f64());
    let mut out = Vec::new();
    out.push(Check::new(
        MIGRATION_TOTAL,
        within(total, n),
        format!("{} migrations, bound {:.3} x {} items", total, bound, n),
    ));

    let mut n_c: BTreeMap<u32, u64> = BTreeMap::new();
    for it in &instance.items {
        *n_c.entry(size_class(it.size)).or_insert(0) += 1;
    }
    let mut failing = Vec::new();
    for (&c, &m) in &result.ledger.per_class {
        let nc = n_c.get(&c).copied().unwrap_or(0);
        if !within(m, nc) {
            failing.push(format!("class {}: {} migrations for {} items", c, m, nc));
        }
    }
    out.push(if failing.is_empty() {
        Check::new(MIGRATION_CLASS, true, format!("{} classes migrated", result.ledger.per_class.len()))
    } else {
        Check::new(MIGRATION_CLASS, false, failing.join("; "))
    });
    out
}

/// Migrated size within `α/(1-2α)` of the total size.
pub fn size_budget(result: &SimulationResult, instance: &Instance, alpha: Ratio) -> Check {
    let (num, den) = (alpha.num() as u128, alpha.den() as u128);
    let total: u128 = instance.items.iter().map(|i| i.size.num as u128).sum();
    let moved = result.ledger.size_num as u128;
    Check::new(
        MIGRATED_SIZE,
        moved * (den - 2 * num) <= num * total,
        format!("moved {}/{} of total {}/{}", moved, instance.scale, total, instance.scale),
    )
}

/// Every item moves at most `⌊d/√C⌋` times and leaves at exactly
/// `a + d + C·moves`.
pub fn delay_schedule(result: &SimulationResult, c: f64) -> Check {
    let sqrt_c = libm::sqrt(c);
    let mut failing = Vec::new();
    for o in &result.items {
        let m = o.migrations();
        if m as f64 * sqrt_c > o.duration {
            failing.push(format!("item {}: {} moves with d={}", o.id, m, o.duration));
        }
        if o.departure != o.arrival + o.duration + m as f64 * c {
            failing.push(format!("item {}: departs {} with {} moves", o.id, o.departure, m));
        }
    }
    if failing.is_empty() {
        Check::new(DELAY_SCHEDULE, true, format!("{} items", result.items.len()))
    } else {
        Check::new(DELAY_SCHEDULE, false, failing.join("; "))
    }
}

fn duration_ratio(inst: &Instance) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for it in &inst.items {
        let d = it.duration?;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    if inst.is_empty() {
        None
    } else {
        Some((lo, hi))
    }
}

/// Re-simulates FirstFit on both part instances of a delay run and compares
/// with its cost; also checks the duration spread of the parts.
pub fn decomposition(result: &SimulationResult, c: f64) -> Result<Vec<Check>, SimError> {
    let (small, big) = decompose_delay_run(result);
    let opts = SimOptions {
        delay_cost: 0.0,
        record_trace: false,
    };
    let fs = simulate(&small, &mut FirstFit, &opts, None)?.total_active_time;
    let fb = simulate(&big, &mut FirstFit, &opts, None)?.total_active_time;
    let alg = result.total_active_time;
    let err = libm::fabs(alg - (fs + fb));
    let tol = 1e-9 * libm::fmax(1.0, libm::fabs(alg));
    let mut out = Vec::new();
    out.push(Check::new(
        DECOMPOSITION,
        err <= tol,
        format!("ALG={} small={} big={} diff={:e}", alg, fs, fb, err),
    ));

    let sqrt_c = libm::sqrt(c);
    let min_d = result.items.iter().map(|o| o.duration).fold(f64::INFINITY, f64::min);
    out.push(match duration_ratio(&small) {
        _ if min_d < 1.0 => Check::new(SMALL_PARTS, true, format!("not applicable: shortest item {}", min_d)),
        Some((lo, hi)) => Check::new(
            SMALL_PARTS,
            hi <= sqrt_c * lo,
            format!("mu={} against sqrt(C)={}", hi / lo, sqrt_c),
        ),
        None => Check::new(SMALL_PARTS, true, "no items".into()),
    });
    out.push(match duration_ratio(&big) {
        Some((lo, hi)) => Check::new(
            BIG_PARTS,
            lo >= c && hi <= c + sqrt_c && hi <= 2.0 * lo,
            format!("durations in [{}, {}], mu={}", lo, hi, hi / lo),
        ),
        None => Check::new(BIG_PARTS, true, "no migrations".into()),
    });
    Ok(out)
}

/// The step function integrates to the reported total, every item left at
/// `a + d + C·moves`, and the ledger agrees with the per-item moves.
pub fn accounting(result: &SimulationResult) -> Check {
    let integral = result.integrate_steps();
    let total = result.total_active_time;
    let mut problems = Vec::new();
    if libm::fabs(integral - total) > 1e-12 * libm::fmax(1.0, libm::fabs(total)) {
        problems.push(format!("step integral {} vs total {}", integral, total));
    }
    let mut moves = 0usize;
    for o in &result.items {
        moves += o.migrations();
        if o.departure != o.arrival + o.duration + o.migrations() as f64 * result.delay_cost {
            problems.push(format!("item {} departs at {}", o.id, o.departure));
        }
        if result.ledger.count_for(o.id) != o.migrations() {
            problems.push(format!("item {}: ledger disagrees", o.id));
        }
    }
    if moves as u64 != result.ledger.unit {
        problems.push(format!("{} moves vs ledger total {}", moves, result.ledger.unit));
    }
    if problems.is_empty() {
        Check::new(ACCOUNTING, true, format!("total {}", total))
    } else {
        Check::new(ACCOUNTING, false, problems.join("; "))
    }
}

/// Replays the recorded trace.
pub fn trace_integrity(result: &SimulationResult) -> Check {
    match result.verify_packing() {
        Ok(()) => Check::new(TRACE, true, format!("{} records", result.trace.len())),
        Err(v) => Check::new(TRACE, false, format!("{}", v)),
    }
}

#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub result: SimulationResult,
    pub checks: Vec<Check>,
    /// Optimum of the instance with resolved durations, when it was needed.
    pub opt: Option<OptReport>,
}

impl AuditOutcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

/// Runs `spec` on `instance` with every check that applies to it.
///
/// `opt` may be passed in when it is already known for this instance;
/// otherwise it is computed after the run if a per-time check needs it.
pub fn audit_run(
    instance: &Instance,
    spec: &AlgorithmSpec,
    opt: Option<&OptReport>,
    resolver: Option<&mut dyn DurationResolver>,
    record_trace: bool,
) -> Result<AuditOutcome, SimError> {
    let mut policy = spec.build().map_err(|e| SimError::Policy(format!("{}", e)))?;
    let opts = SimOptions {
        delay_cost: spec.delay_cost(),
        record_trace,
    };
    let state_checks = matches!(spec, AlgorithmSpec::Alg2 { .. } | AlgorithmSpec::SizeCost { .. });
    let mut audit = StateAudit::new(state_checks, matches!(spec, AlgorithmSpec::Alg2 { .. }));
    let result = simulate_with(instance, policy.as_mut(), &opts, resolver, &mut audit)?;

    let mut checks = audit.checks();
    if record_trace {
        checks.push(trace_integrity(&result));
    }
    checks.push(accounting(&result));

    let resolved = if instance.has_deferred() {
        instance.with_durations(&result.resolved_durations())
    } else {
        instance.clone()
    };
    let mut owned = None;
    let needs_opt = state_checks;
    if needs_opt && opt.is_none() {
        owned = Some(opt_total(&resolved).map_err(|e| SimError::Policy(format!("{}", e)))?);
    }
    let report = opt.or(owned.as_ref());

    match *spec {
        AlgorithmSpec::Alg2 { alpha, .. } => {
            if let Some(r) = report {
                checks.push(per_time_bound(&result, r, alpha, 2, 0));
            }
            checks.extend(migration_budget(&result, &resolved, alpha));
        }
        AlgorithmSpec::SizeCost { alpha, .. } => {
            if let Some(r) = report {
                checks.push(per_time_bound(&result, r, alpha, 0, 1));
            }
            checks.push(size_budget(&result, &resolved, alpha));
        }
        AlgorithmSpec::Delay { c } => {
            checks.push(delay_schedule(&result, c));
            checks.extend(decomposition(&result, c)?);
        }
        AlgorithmSpec::FirstFit | AlgorithmSpec::Alg1 { .. } => {}
    }
    let opt = match (owned, opt) {
        (Some(o), _) => Some(o),
        (None, Some(o)) => Some(o.clone()),
        (None, None) => None,
    };
    Ok(AuditOutcome { result, checks, opt })
}

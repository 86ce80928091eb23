//! Separates the causes of a target from their triggers.
//!
//! The window is split where the target's mean rises most. Causal parents are
//! inferred on both sides; parents on the later side whose own mean rises are
//! trigger candidates. A candidate is confirmed when it significantly moderates
//! the aggregated signal of the remaining parents, and is then paired with the
//! parent whose mean moved the most across the split.

use std::collections::BTreeSet;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::changepoint::{find_split_with, mean_shift, ShiftCriterion, SplitResult, DEFAULT_MIN_SIZE_I2};
use crate::error::{Error, Result};
use crate::hmml::{response_family, CausalBackend, CausalParents, Hmml, Search};
use crate::panel::{
    aggregate_design, build_lag_design, mean_std, remove_variable_block, standardize, Aggregation, CellMeta,
    StandardizedPanel, TimeSeriesPanel, MIN_STD,
};
use crate::stats::{f_test_nested, fit_regression, select_lag_aic, FTestResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LagChoice {
    Fixed(usize),
    /// Pick by VAR AIC over `1..=max`.
    Auto { max: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub lag: LagChoice,
    pub min_size_i2: usize,
    /// Minimum rise of the target's mean across the split.
    pub threshold_y: f64,
    /// Minimum rise of a trigger candidate's mean across the split.
    pub threshold_x: f64,
    pub alpha: f64,
    pub aggregation: Aggregation,
    pub backend: Search,
    pub shift_criterion: ShiftCriterion,
    /// Pair each trigger with every eligible cause instead of only the top one.
    pub all_causes: bool,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            lag: LagChoice::Fixed(2),
            min_size_i2: DEFAULT_MIN_SIZE_I2,
            threshold_y: 0.0,
            threshold_x: 0.0,
            alpha: 0.05,
            aggregation: Aggregation::Unit,
            backend: Search::Exhaustive,
            shift_criterion: ShiftCriterion::Signed,
            all_causes: false,
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        if !(self.threshold_x >= 0.0 && self.threshold_y >= 0.0) {
            return Err(Error::InvalidConfig("thresholds must be nonnegative".into()));
        }
        if self.min_size_i2 == 0 {
            return Err(Error::InvalidConfig("min_size_i2 must be positive".into()));
        }
        match self.lag {
            LagChoice::Fixed(0) | LagChoice::Auto { max: 0 } => Err(Error::InvalidConfig("lag must be positive".into())),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModerationResult {
    pub trigger_candidate: String,
    pub f: FTestResult,
    pub is_moderator: bool,
    pub rss_reduced: f64,
    pub rss_full: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CauseTriggerPair {
    pub cause: String,
    pub trigger: String,
    pub cell_meta: Option<CellMeta>,
    pub moderation: ModerationResult,
    /// `|mean(I1) - mean(I2)|` of the cause on the standardized scale.
    pub cause_mean_shift: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StopReason {
    NoSplit,
    TooFewParents,
    Completed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmOutput {
    pub target: String,
    pub d: usize,
    pub causes: BTreeSet<String>,
    pub triggers: BTreeSet<String>,
    pub pairs: Vec<CauseTriggerPair>,
    pub split: SplitResult,
    /// Parents on the whole window, only when no split was accepted.
    pub parents_full: Option<CausalParents>,
    /// `None` when `I1` is too short to fit.
    pub parents_i1: Option<CausalParents>,
    pub parents_i2: Option<CausalParents>,
    pub moderation_tests: Vec<ModerationResult>,
    pub stop_reason: StopReason,
    pub cell_meta: Option<CellMeta>,
}

/// Parents in `I2` other than the target whose mean rises by more than `threshold_x`.
pub fn candidate_triggers(
    parents_i2: &CausalParents,
    panel: &StandardizedPanel,
    split: &SplitResult,
    target: &str,
    threshold_x: f64,
    criterion: ShiftCriterion,
) -> Result<BTreeSet<String>> {
    let mut out = BTreeSet::new();
    for name in parents_i2.parents().filter(|p| *p != target) {
        let col = panel.column(name)?;
        let rise = match criterion {
            ShiftCriterion::Signed => mean_shift(col, split.i1(), split.i2())?,
            ShiftCriterion::Absolute => {
                let m = |r: Range<usize>| col[r.clone()].iter().sum::<f64>() / r.len() as f64;
                m(split.i2()).abs() - m(split.i1()).abs()
            }
        };
        if rise > threshold_x {
            out.insert(name.to_string());
        }
    }
    Ok(out)
}

/// Tests whether `trigger` moderates the aggregated lagged signal `V` of the
/// other `I2` parents: `y = g0 + g1 V` against `y = g0 + g1 V + g2 V s`, with `s`
/// the trigger at the prediction time.
pub fn moderation_test(
    panel: &StandardizedPanel,
    target: &str,
    parents_i2: &CausalParents,
    trigger: &str,
    config: &AlgorithmConfig,
) -> Result<ModerationResult> {
    if !parents_i2.contains(trigger) {
        return Err(Error::UnknownVariable(trigger.to_string()));
    }
    let interval = parents_i2.range();
    let d = parents_i2.d;
    if interval.len() <= d + 4 {
        return Err(Error::IntervalTooShort { len: interval.len(), lag: d });
    }
    let window = panel.slice(interval)?;
    // B2 in panel column order
    let members: Vec<&String> = window.names().iter().filter(|n| parents_i2.contains(n)).collect();
    let design = build_lag_design(&window, &members, target, d)?;
    let reduced = remove_variable_block(&design, trigger)?;
    let beta: Vec<f64>;
    let coefficients = match config.aggregation {
        Aggregation::Unit => None,
        Aggregation::Coefficient => {
            beta = reduced
                .variable_order
                .iter()
                .flat_map(|v| parents_i2.coefficients[v].iter().copied())
                .collect();
            Some(beta.as_slice())
        }
    };
    let v = aggregate_design(&reduced, config.aggregation, coefficients)?;
    let s_now = &window.column(trigger)?[d..];
    let interaction: Vec<f64> = v.iter().zip(s_now).map(|(a, b)| a * b).collect();
    let y = &design.target_rows;
    let family = response_family(y)?.family;
    let fit_reduced = fit_regression(y, &[&v], family)?;
    let fit_full = fit_regression(y, &[&v, &interaction], family)?;
    let f = f_test_nested(&fit_reduced, &fit_full, config.alpha)?;
    Ok(ModerationResult {
        trigger_candidate: trigger.to_string(),
        is_moderator: f.reject_h0,
        rss_reduced: fit_reduced.rss,
        rss_full: fit_full.rss,
        f,
    })
}

/// Eligible causes for `trigger` ranked by `|mean(I1) - mean(I2)|`, largest first,
/// ties in name order. The target's own history is eligible.
pub fn rank_triggered_causes(
    panel: &StandardizedPanel,
    parents_i2: &CausalParents,
    trigger: &str,
    split: &SplitResult,
) -> Result<Vec<(String, f64)>> {
    let mut ranked = Vec::new();
    for name in parents_i2.parents().filter(|p| *p != trigger) {
        let shift = mean_shift(panel.column(name)?, split.i1(), split.i2())?.abs();
        ranked.push((name.to_string(), shift));
    }
    // parents() is in name order and the sort is stable
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(ranked)
}

/// The parent with the largest mean shift, paired with its shift.
pub fn select_triggered_cause(
    panel: &StandardizedPanel,
    parents_i2: &CausalParents,
    trigger: &str,
    split: &SplitResult,
) -> Result<(String, f64)> {
    rank_triggered_causes(panel, parents_i2, trigger, split)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::NoEligibleCause(trigger.to_string()))
}

/// Runs the whole procedure with the backend named in `config`.
pub fn run(panel: &TimeSeriesPanel, target: &str, config: &AlgorithmConfig) -> Result<AlgorithmOutput> {
    let backend = Hmml {
        search: config.backend.clone(),
    };
    run_with_backend(panel, target, config, &backend)
}

pub fn run_with_backend(
    panel: &TimeSeriesPanel,
    target: &str,
    config: &AlgorithmConfig,
    backend: &dyn CausalBackend,
) -> Result<AlgorithmOutput> {
    config.validate()?;
    let raw_target = panel.column(target)?;
    let cell_meta = panel.cell_meta();

    if mean_std(raw_target).1 <= MIN_STD {
        // a constant target has no mean shift and nothing to explain
        let split = find_split_with(raw_target, config.min_size_i2, config.threshold_y, config.shift_criterion)?;
        return Ok(AlgorithmOutput {
            target: target.to_string(),
            d: match config.lag {
                LagChoice::Fixed(d) => d,
                LagChoice::Auto { .. } => 1,
            },
            causes: BTreeSet::new(),
            triggers: BTreeSet::new(),
            pairs: Vec::new(),
            split,
            parents_full: None,
            parents_i1: None,
            parents_i2: None,
            moderation_tests: Vec::new(),
            stop_reason: StopReason::NoSplit,
            cell_meta,
        });
    }

    let z = standardize(panel)?;
    let d = match config.lag {
        LagChoice::Fixed(d) => d,
        LagChoice::Auto { max } => select_lag_aic(&z, max)?,
    };
    let split = find_split_with(
        z.column(target)?,
        config.min_size_i2,
        config.threshold_y,
        config.shift_criterion,
    )?;
    let mut out = AlgorithmOutput {
        target: target.to_string(),
        d,
        causes: BTreeSet::new(),
        triggers: BTreeSet::new(),
        pairs: Vec::new(),
        split: split.clone(),
        parents_full: None,
        parents_i1: None,
        parents_i2: None,
        moderation_tests: Vec::new(),
        stop_reason: StopReason::NoSplit,
        cell_meta,
    };

    if !split.accepted {
        let full = backend.infer(&z, target, 0..z.len(), d)?;
        out.causes = full.parents().map(String::from).collect();
        out.parents_full = Some(full);
        return Ok(out);
    }

    if split.t1 >= d + 4 {
        out.parents_i1 = Some(backend.infer(&z, target, split.i1(), d)?);
    }
    let b2 = backend.infer(&z, target, split.i2(), d)?;
    if b2.len() < 2 {
        out.causes = b2.parents().map(String::from).collect();
        out.parents_i2 = Some(b2);
        out.stop_reason = StopReason::TooFewParents;
        return Ok(out);
    }

    let candidates = candidate_triggers(&b2, &z, &split, target, config.threshold_x, config.shift_criterion)?;
    let mut selected_causes = BTreeSet::new();
    for trigger in &candidates {
        let moderation = moderation_test(&z, target, &b2, trigger, config)?;
        out.moderation_tests.push(moderation.clone());
        if !moderation.is_moderator {
            continue;
        }
        out.triggers.insert(trigger.clone());
        let ranked = rank_triggered_causes(&z, &b2, trigger, &split)?;
        if ranked.is_empty() {
            return Err(Error::NoEligibleCause(trigger.clone()));
        }
        let take = if config.all_causes { ranked.len() } else { 1 };
        for (cause, shift) in ranked.into_iter().take(take) {
            selected_causes.insert(cause.clone());
            out.pairs.push(CauseTriggerPair {
                cause,
                trigger: trigger.clone(),
                cell_meta,
                moderation: moderation.clone(),
                cause_mean_shift: shift,
            });
        }
    }
    out.causes = b2
        .parents()
        .filter(|p| !out.triggers.contains(*p))
        .map(String::from)
        .chain(selected_causes)
        .collect();
    out.parents_i2 = Some(b2);
    out.stop_reason = StopReason::Completed;
    Ok(out)
}

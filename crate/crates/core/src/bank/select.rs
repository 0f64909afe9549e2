use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::entry::{BankEntry, ChannelSpecs, CreatedAt, KernelBank};
use super::predict::{compute_pte, Anchor, ConditioningWindow, Model, Rollout, Scheme};
use crate::error::{Error, Result};
use crate::geo::Trajectory;
use crate::gp::{fit_hyperparameters, FitConfig};

/// How reuse candidates are screened before ranking by persistency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ReuseEval {
    /// Pass if the first prediction step is within the threshold.
    FirstStep,
    /// Pass if the first second of prediction stays within the threshold.
    #[default]
    Fixed1s,
}

impl std::str::FromStr for ReuseEval {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first_step" => Ok(ReuseEval::FirstStep),
            "fixed_1s" => Ok(ReuseEval::Fixed1s),
            _ => Err(Error::InvalidInput(format!("unknown reuse_eval '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BankConfig {
    pub scheme: Scheme,
    pub hybrid: bool,
    pub pte_threshold_m: f64,
    pub tw: usize,
    pub horizon_cap_s: f64,
    pub reuse_eval: ReuseEval,
    pub fit: FitConfig,
    pub seed: u64,
}

impl Default for BankConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::Indirect,
            hybrid: true,
            pte_threshold_m: 0.5,
            tw: 10,
            horizon_cap_s: 10.0,
            reuse_eval: ReuseEval::default(),
            fit: FitConfig::default(),
            seed: 0,
        }
    }
}

impl BankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.pte_threshold_m > 0.0 && self.pte_threshold_m.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "threshold must be positive, got {}",
                self.pte_threshold_m
            )));
        }
        if self.tw < 3 {
            return Err(Error::InvalidInput(format!("tw must be at least 3, got {}", self.tw)));
        }
        if !(self.horizon_cap_s >= crate::SAMPLE_PERIOD_S) {
            return Err(Error::InvalidInput(format!(
                "horizon cap must be at least one sample, got {}",
                self.horizon_cap_s
            )));
        }
        self.fit.validate()
    }

    pub fn new_bank(&self) -> KernelBank {
        KernelBank::new(self.scheme, self.hybrid, self.pte_threshold_m, self.tw)
    }

    /// Prediction steps inside the horizon cap.
    pub fn max_steps(&self) -> usize {
        (self.horizon_cap_s / crate::SAMPLE_PERIOD_S).round() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SelectionSource {
    BankEntry(usize),
    ConstantVelocity,
    NewlyFitted(usize),
}

impl SelectionSource {
    pub fn entry_id(&self) -> Option<usize> {
        match *self {
            SelectionSource::BankEntry(id) | SelectionSource::NewlyFitted(id) => Some(id),
            SelectionSource::ConstantVelocity => None,
        }
    }
}

impl std::fmt::Display for SelectionSource {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SelectionSource::BankEntry(id) => write!(f, "bank:{id}"),
            SelectionSource::ConstantVelocity => f.write_str("cv"),
            SelectionSource::NewlyFitted(id) => write!(f, "new:{id}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Candidate<'a> {
    Entry(&'a BankEntry),
    ConstantVelocity,
}

impl Candidate<'_> {
    fn model(&self) -> Model {
        match self {
            Candidate::Entry(e) => Model::Gp(e.specs),
            Candidate::ConstantVelocity => Model::ConstantVelocity,
        }
    }

    fn source(&self) -> SelectionSource {
        match self {
            Candidate::Entry(e) => SelectionSource::BankEntry(e.id),
            Candidate::ConstantVelocity => SelectionSource::ConstantVelocity,
        }
    }
}

/// Outcome of running one model forward from `t_0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSelection {
    pub source: SelectionSource,
    pub t_0: f64,
    pub t0_index: usize,
    /// Index of `t_next`: the violating sample, or the last one evaluated.
    pub next_index: usize,
    /// `t_next - t_0`, so at least one sample period.
    pub persistency_s: f64,
    pub violated: bool,
    /// `(t, PTE)` per prediction step; only the last may exceed the threshold.
    pub pte_trace: Vec<(f64, f64)>,
}

/// Condition `model` on the `tw` samples ending at `t0_index` and predict
/// forward one sample at a time until the PTE exceeds `threshold`, the trip
/// ends, or `max_steps` steps have been taken.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_model(
    model: &Model,
    source: SelectionSource,
    traj: &Trajectory,
    scheme: Scheme,
    t0_index: usize,
    tw: usize,
    threshold: f64,
    max_steps: Option<usize>,
) -> Result<ModelSelection> {
    if t0_index + 1 < tw || t0_index + 1 >= traj.len() {
        return Err(Error::InsufficientHistory {
            index: t0_index,
            needed: tw,
        });
    }
    let window = match model {
        Model::Gp(_) => Some(ConditioningWindow::from_trajectory(traj, scheme, t0_index, tw)?),
        Model::ConstantVelocity => None,
    };
    let rollout = Rollout::new(model, scheme, window.as_ref(), Anchor::from_trajectory(traj, t0_index))?;
    Ok(run_rollout(rollout, source, traj, t0_index, threshold, max_steps))
}

/// Step an already conditioned rollout against the trajectory from
/// `t0_index`; see [`evaluate_model`].
pub fn run_rollout(
    mut rollout: Rollout,
    source: SelectionSource,
    traj: &Trajectory,
    t0_index: usize,
    threshold: f64,
    max_steps: Option<usize>,
) -> ModelSelection {
    let last = match max_steps {
        Some(m) => (t0_index + m).min(traj.len() - 1),
        None => traj.len() - 1,
    };
    let mut trace = Vec::new();
    let mut violated = false;
    let mut next_index = t0_index;
    for i in t0_index + 1..=last {
        let (x, y) = rollout.advance(traj.t[i]);
        let pte = compute_pte(x, y, traj.x_enu[i], traj.y_enu[i]);
        trace.push((traj.t[i], pte));
        next_index = i;
        if pte > threshold {
            violated = true;
            break;
        }
    }
    ModelSelection {
        source,
        t_0: traj.t[t0_index],
        t0_index,
        next_index,
        persistency_s: traj.t[next_index] - traj.t[t0_index],
        violated,
        pte_trace: trace,
    }
}

pub fn evaluate_candidate(
    candidate: Candidate<'_>,
    traj: &Trajectory,
    t0_index: usize,
    config: &BankConfig,
    max_steps: Option<usize>,
) -> Result<ModelSelection> {
    evaluate_model(
        &candidate.model(),
        candidate.source(),
        traj,
        config.scheme,
        t0_index,
        config.tw,
        config.pte_threshold_m,
        max_steps,
    )
}

fn passes_screen(sel: &ModelSelection, threshold: f64, mode: ReuseEval) -> bool {
    let steps = match mode {
        ReuseEval::FirstStep => 1,
        ReuseEval::Fixed1s => (1.0 / crate::SAMPLE_PERIOD_S).round() as usize,
    };
    sel.pte_trace.iter().take(steps).all(|(_, pte)| *pte < threshold)
}

/// Highest persistency among candidates that pass the screen. Input order is
/// the tie-break order (constant velocity first, then ascending id), so the
/// first of equal persistency wins.
pub fn pick_best(evaluated: impl IntoIterator<Item = ModelSelection>, config: &BankConfig) -> Option<ModelSelection> {
    let mut best: Option<ModelSelection> = None;
    for sel in evaluated {
        if passes_screen(&sel, config.pte_threshold_m, config.reuse_eval)
            && best.as_ref().is_none_or(|b| sel.persistency_s > b.persistency_s)
        {
            best = Some(sel);
        }
    }
    best
}

/// Seed for fitting bank entry `id`, channel `channel`.
fn fit_seed(base: u64, id: usize, channel: u64) -> u64 {
    base.wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((id as u64) << 1 | channel)
}

/// Fit both channels of `scheme` on the `tw` samples ending at `index`.
pub fn fit_channel_specs(traj: &Trajectory, index: usize, config: &BankConfig, id: usize) -> Result<ChannelSpecs> {
    let window = ConditioningWindow::from_trajectory(traj, config.scheme, index, config.tw)?;
    let (a, b) = window.channels()?;
    let fit = |w, channel| {
        let cfg = FitConfig {
            seed: fit_seed(config.seed, id, channel),
            ..config.fit.clone()
        };
        fit_hyperparameters(w, &cfg)
    };
    Ok(ChannelSpecs::from_pair(config.scheme, fit(&a, 0)?, fit(&b, 1)?))
}

/// Pick the best reusable candidate at `t0_index`, or fit and append a new
/// entry when none passes the screen. Evaluations stop at the horizon cap.
/// Returns the selection and whether the bank grew.
pub fn select_or_create(
    bank: &mut KernelBank,
    traj: &Trajectory,
    t0_index: usize,
    config: &BankConfig,
) -> Result<(ModelSelection, bool)> {
    let cap = Some(config.max_steps());
    let mut candidates: Vec<Candidate<'_>> = Vec::with_capacity(bank.len() + 1);
    if config.hybrid {
        candidates.push(Candidate::ConstantVelocity);
    }
    candidates.extend(bank.entries().iter().map(Candidate::Entry));
    let evaluated: Vec<ModelSelection> = candidates
        .par_iter()
        .map(|c| evaluate_candidate(*c, traj, t0_index, config, cap))
        .collect::<Result<_>>()?;
    let best = pick_best(evaluated, config);
    let (selection, created) = match best {
        Some(sel) => (sel, false),
        None => (fit_new_entry(bank, traj, t0_index, config)?, true),
    };
    record_use(bank, &selection);
    Ok((selection, created))
}

fn record_use(bank: &mut KernelBank, selection: &ModelSelection) {
    if let Some(e) = selection.source.entry_id().and_then(|id| bank.get_mut(id)) {
        e.use_count += 1;
        e.total_persistency_s += selection.persistency_s;
    }
}

fn fit_new_entry(
    bank: &mut KernelBank,
    traj: &Trajectory,
    t0_index: usize,
    config: &BankConfig,
) -> Result<ModelSelection> {
    let id = bank.len();
    let specs = fit_channel_specs(traj, t0_index, config, id)?;
    bank.push(
        specs,
        CreatedAt {
            trip_id: traj.trip_id.clone(),
            t0: traj.t[t0_index],
        },
    )?;
    evaluate_model(
        &Model::Gp(specs),
        SelectionSource::NewlyFitted(id),
        traj,
        config.scheme,
        t0_index,
        config.tw,
        config.pte_threshold_m,
        Some(config.max_steps()),
    )
}

/// Fit a new entry on the `tw` samples ending at `t0_index` and select it
/// without evaluating other candidates.
pub fn create_entry(
    bank: &mut KernelBank,
    traj: &Trajectory,
    t0_index: usize,
    config: &BankConfig,
) -> Result<ModelSelection> {
    let selection = fit_new_entry(bank, traj, t0_index, config)?;
    record_use(bank, &selection);
    Ok(selection)
}

/// Keep using a selection that reached the horizon cap without violating
/// until it violates or the trip ends. The entry's persistency total is
/// credited with the extra time.
pub fn extend_selection(
    bank: &mut KernelBank,
    traj: &Trajectory,
    selection: ModelSelection,
    config: &BankConfig,
) -> Result<ModelSelection> {
    if selection.violated || selection.next_index + 1 >= traj.len() {
        return Ok(selection);
    }
    let model = match selection.source.entry_id() {
        Some(id) => Model::Gp(
            bank.get(id)
                .ok_or_else(|| Error::InvalidInput(format!("no bank entry {id}")))?
                .specs,
        ),
        None => Model::ConstantVelocity,
    };
    let extended = evaluate_model(
        &model,
        selection.source,
        traj,
        config.scheme,
        selection.t0_index,
        config.tw,
        config.pte_threshold_m,
        None,
    )?;
    if let Some(e) = selection.source.entry_id().and_then(|id| bank.get_mut(id)) {
        e.total_persistency_s += extended.persistency_s - selection.persistency_s;
    }
    Ok(extended)
}

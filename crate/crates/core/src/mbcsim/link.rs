use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bank::{
    compute_pte, create_entry, extend_selection, pick_best, run_rollout, select_or_create, Anchor, BankConfig,
    ConditioningWindow, KernelBank, Model, ModelSelection, Rollout, SelectionSource,
};
use crate::error::{Error, Result};
use crate::geo::Trajectory;

use super::packet::{PacketEvent, PacketKind};
use super::receiver::Receiver;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LinkMode {
    /// The transmitter grows its bank exactly as a bank build would. The
    /// receiver holds no bank, so every GP packet carries the kernel pair and
    /// the true conditioning window.
    #[default]
    Growing,
    /// Both ends share a fixed bank; GP packets carry an entry id.
    Frozen,
}

/// When a frozen-mode packet carries the conditioning window. The first
/// packet of a trip always does, since the receiver has no history yet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Only the anchor; the receiver conditions on its own believed history.
    #[default]
    AnchorOnly,
    Always,
}

impl std::str::FromStr for LinkMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "growing" => Ok(LinkMode::Growing),
            "frozen" => Ok(LinkMode::Frozen),
            _ => Err(Error::InvalidInput(format!("unknown link mode '{s}'"))),
        }
    }
}

impl std::str::FromStr for WindowPolicy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anchor_only" => Ok(WindowPolicy::AnchorOnly),
            "always" => Ok(WindowPolicy::Always),
            _ => Err(Error::InvalidInput(format!("unknown window policy '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct LinkConfig {
    pub mode: LinkMode,
    pub window: WindowPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct ChannelMetrics {
    pub packets: usize,
    /// Time from each trip's first packet to its end, summed.
    pub covered_s: f64,
    pub packets_per_s: f64,
    pub mean_inter_packet_s: f64,
    pub payload_bytes_total: usize,
    pub max_receiver_pte_m: f64,
}

impl ChannelMetrics {
    fn from_parts(packets: usize, covered_s: f64, payload_bytes_total: usize, max_receiver_pte_m: f64) -> Self {
        let (rate, mean) = if packets > 0 && covered_s > 0.0 {
            (packets as f64 / covered_s, covered_s / packets as f64)
        } else {
            (0.0, 0.0)
        };
        Self {
            packets,
            covered_s,
            packets_per_s: rate,
            mean_inter_packet_s: mean,
            payload_bytes_total,
            max_receiver_pte_m,
        }
    }

    pub fn combine<'a>(parts: impl IntoIterator<Item = &'a ChannelMetrics>) -> Self {
        let (mut n, mut cov, mut bytes, mut max) = (0, 0.0, 0, 0.0f64);
        for m in parts {
            n += m.packets;
            cov += m.covered_s;
            bytes += m.payload_bytes_total;
            max = max.max(m.max_receiver_pte_m);
        }
        Self::from_parts(n, cov, bytes, max)
    }
}

/// Receiver estimate at one GPS update, with its error against truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub t: f64,
    pub x: f64,
    pub y: f64,
    pub pte_m: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinkRun {
    pub trip_id: String,
    pub packets: Vec<PacketEvent>,
    /// One per sample after the first packet.
    pub estimates: Vec<Estimate>,
    pub metrics: ChannelMetrics,
}

/// Simulate one trip over a perfect channel.
///
/// The transmitter keeps a shadow copy of the receiver. At every sample it
/// compares the receiver's estimate with the true position and sends a new
/// model when the error exceeds the threshold. `bank` grows in growing mode
/// and is left untouched in frozen mode.
pub fn simulate_link(
    traj: &Trajectory,
    bank: &mut KernelBank,
    config: &BankConfig,
    link: &LinkConfig,
) -> Result<LinkRun> {
    config.validate()?;
    if bank.scheme != config.scheme {
        return Err(Error::InvalidInput(format!(
            "bank scheme {} does not match config scheme {}",
            bank.scheme, config.scheme
        )));
    }
    if traj.len() < config.tw + 1 {
        return Err(Error::TooShort {
            trip_id: traj.trip_id.clone(),
            len: traj.len(),
            min: config.tw + 1,
        });
    }
    if link.mode == LinkMode::Frozen && bank.is_empty() && !config.hybrid {
        return Err(Error::InvalidInput(
            "frozen link needs a nonempty bank or hybrid mode".into(),
        ));
    }
    let shared = (link.mode == LinkMode::Frozen).then(|| bank.clone());
    let mut rx = Receiver::new(config.scheme, config.tw, shared);
    let start = config.tw - 1;
    let mut packets = Vec::new();
    let mut estimates = Vec::with_capacity(traj.len() - start);
    let mut max_pte = 0.0f64;

    let first = transmit(bank, &rx, traj, start, 0.0, true, config, link)?;
    rx.on_packet(&first)?;
    packets.push(first);
    for j in start + 1..traj.len() {
        let p = rx.tick(traj.t[j])?;
        let pte = compute_pte(p.x, p.y, traj.x_enu[j], traj.y_enu[j]);
        estimates.push(Estimate {
            t: traj.t[j],
            x: p.x,
            y: p.y,
            pte_m: pte,
        });
        max_pte = max_pte.max(pte);
        if pte > config.pte_threshold_m && j + 1 < traj.len() {
            let pkt = transmit(bank, &rx, traj, j, pte, false, config, link)?;
            rx.on_packet(&pkt)?;
            packets.push(pkt);
        }
    }
    let bytes = packets.iter().map(PacketEvent::payload_bytes).sum();
    let covered = traj.t[traj.len() - 1] - traj.t[start];
    Ok(LinkRun {
        trip_id: traj.trip_id.clone(),
        metrics: ChannelMetrics::from_parts(packets.len(), covered, bytes, max_pte),
        packets,
        estimates,
    })
}

/// Run trips in order, carrying the bank across them.
pub fn simulate_corpus(
    trips: &[Trajectory],
    bank: &mut KernelBank,
    config: &BankConfig,
    link: &LinkConfig,
) -> Result<(Vec<LinkRun>, ChannelMetrics)> {
    if trips.is_empty() {
        return Err(Error::Empty);
    }
    let runs = trips
        .iter()
        .map(|t| simulate_link(t, bank, config, link))
        .collect::<Result<Vec<_>>>()?;
    let metrics = ChannelMetrics::combine(runs.iter().map(|r| &r.metrics));
    Ok((runs, metrics))
}

#[allow(clippy::too_many_arguments)]
fn transmit(
    bank: &mut KernelBank,
    rx: &Receiver,
    traj: &Trajectory,
    index: usize,
    trigger_pte_m: f64,
    first: bool,
    config: &BankConfig,
    link: &LinkConfig,
) -> Result<PacketEvent> {
    let anchor = Anchor::from_trajectory(traj, index);
    let true_window = ConditioningWindow::from_trajectory(traj, config.scheme, index, config.tw)?;
    let (kind, window) = match link.mode {
        LinkMode::Growing => {
            let sel = if bank.is_empty() {
                create_entry(bank, traj, index, config)?
            } else {
                select_or_create(bank, traj, index, config)?.0
            };
            let sel = extend_selection(bank, traj, sel, config)?;
            match sel.source.entry_id() {
                Some(id) => {
                    let specs = bank.get(id).expect("selected entry exists").specs;
                    (PacketKind::NewKernel { id, specs }, Some(true_window))
                }
                None => (PacketKind::CvTag, first.then_some(true_window)),
            }
        }
        LinkMode::Frozen => {
            let ship = first || link.window == WindowPolicy::Always;
            let believed = if ship { None } else { Some(rx.believed_window(&anchor)?) };
            let gp_window = believed.as_ref().unwrap_or(&true_window);
            let sel = select_frozen(bank, traj, index, anchor, gp_window, config)?;
            let kind = match sel.source.entry_id() {
                Some(id) => PacketKind::KernelId { id },
                None => PacketKind::CvTag,
            };
            (kind, ship.then_some(true_window))
        }
    };
    Ok(PacketEvent {
        trip_id: traj.trip_id.clone(),
        t: traj.t[index],
        kind,
        trigger_pte_m,
        anchor,
        window,
    })
}

/// Best candidate of a fixed bank (plus constant velocity in hybrid mode)
/// when conditioned on `window`. Falls back to the longest-lasting candidate
/// when none passes the screen, since a frozen bank cannot grow.
fn select_frozen(
    bank: &KernelBank,
    traj: &Trajectory,
    index: usize,
    anchor: Anchor,
    window: &ConditioningWindow,
    config: &BankConfig,
) -> Result<ModelSelection> {
    let cap = Some(config.max_steps());
    let mut candidates: Vec<(Model, SelectionSource)> = Vec::with_capacity(bank.len() + 1);
    if config.hybrid {
        candidates.push((Model::ConstantVelocity, SelectionSource::ConstantVelocity));
    }
    candidates.extend(
        bank.entries()
            .iter()
            .map(|e| (Model::Gp(e.specs), SelectionSource::BankEntry(e.id))),
    );
    let evaluated: Vec<ModelSelection> = candidates
        .par_iter()
        .map(|(model, source)| {
            let w = matches!(model, Model::Gp(_)).then_some(window);
            let rollout = Rollout::new(model, config.scheme, w, anchor)?;
            Ok(run_rollout(rollout, *source, traj, index, config.pte_threshold_m, cap))
        })
        .collect::<Result<_>>()?;
    if let Some(best) = pick_best(evaluated.iter().cloned(), config) {
        return Ok(best);
    }
    evaluated
        .into_iter()
        .reduce(|best, s| if s.persistency_s > best.persistency_s { s } else { best })
        .ok_or(Error::Empty)
}

use std::collections::VecDeque;

use crate::bank::{Anchor, ConditioningWindow, KernelBank, Model, Prediction, Rollout, Scheme};
use crate::error::{Error, Result};

use super::packet::{PacketEvent, PacketKind};

/// The receiving vehicle's view of a transmitter. Its state depends only on
/// the packets it has been given and the times it is asked about.
#[derive(Debug, Clone)]
pub struct Receiver {
    scheme: Scheme,
    tw: usize,
    bank: Option<KernelBank>,
    rollout: Option<Rollout>,
    /// Believed `(t, first, second)` channel values, newest last.
    history: VecDeque<(f64, f64, f64)>,
}

impl Receiver {
    /// `bank` is the shared bank `KernelId` packets refer to, if any.
    pub fn new(scheme: Scheme, tw: usize, bank: Option<KernelBank>) -> Self {
        Self {
            scheme,
            tw,
            bank,
            rollout: None,
            history: VecDeque::with_capacity(tw + 1),
        }
    }

    fn anchor_channels(&self, anchor: &Anchor) -> (f64, f64) {
        match self.scheme {
            Scheme::Direct => (anchor.x0, anchor.y0),
            Scheme::Indirect => (anchor.v0, anchor.theta0),
        }
    }

    /// The window this receiver would condition on for a packet with this
    /// anchor and no shipped window: its own believed history, offset so that
    /// the newest sample equals the anchor.
    pub fn believed_window(&self, anchor: &Anchor) -> Result<ConditioningWindow> {
        let n = self.history.len();
        let last_matches = self.history.back().is_some_and(|(t, _, _)| *t == anchor.t0);
        if n < self.tw || !last_matches {
            return Err(Error::InvalidInput(format!(
                "receiver has {n} believed samples ending {} for a packet at t = {}; need {} ending there",
                self.history.back().map_or(f64::NAN, |h| h.0),
                anchor.t0,
                self.tw
            )));
        }
        let (a, b) = self.anchor_channels(anchor);
        let mut w = ConditioningWindow {
            times: Vec::with_capacity(self.tw),
            first: Vec::with_capacity(self.tw),
            second: Vec::with_capacity(self.tw),
        };
        for (t, f, s) in self.history.iter().skip(n - self.tw) {
            w.times.push(*t);
            w.first.push(*f);
            w.second.push(*s);
        }
        // shift the believed shape so it ends exactly at the anchor
        let (da, db) = (a - w.first[self.tw - 1], b - w.second[self.tw - 1]);
        for v in &mut w.first {
            *v += da;
        }
        for v in &mut w.second {
            *v += db;
        }
        w.first[self.tw - 1] = a;
        w.second[self.tw - 1] = b;
        Ok(w)
    }

    pub fn on_packet(&mut self, p: &PacketEvent) -> Result<()> {
        let model = match p.kind {
            PacketKind::CvTag => Model::ConstantVelocity,
            PacketKind::NewKernel { specs, .. } => Model::Gp(specs),
            PacketKind::KernelId { id } => {
                let bank = self
                    .bank
                    .as_ref()
                    .ok_or_else(|| Error::InvalidInput("kernel id packet but the receiver holds no bank".into()))?;
                Model::Gp(
                    bank.get(id)
                        .ok_or_else(|| Error::InvalidInput(format!("kernel id {id} not in the receiver's bank")))?
                        .specs,
                )
            }
        };
        let window = match (&model, &p.window) {
            (_, Some(w)) => Some(w.clone()),
            (Model::Gp(_), None) => Some(self.believed_window(&p.anchor)?),
            (Model::ConstantVelocity, None) => None,
        };
        self.rollout = Some(Rollout::new(&model, self.scheme, window.as_ref(), p.anchor)?);

        // belief now ends at the anchor
        let (a, b) = self.anchor_channels(&p.anchor);
        if let Some(w) = &p.window {
            self.history.clear();
            for i in 0..w.len() {
                self.history.push_back((w.times[i], w.first[i], w.second[i]));
            }
        }
        match self.history.back_mut() {
            Some(last) if last.0 == p.anchor.t0 => *last = (p.anchor.t0, a, b),
            _ => self.history.push_back((p.anchor.t0, a, b)),
        }
        self.trim();
        Ok(())
    }

    /// Estimate at `t`, after at least one packet.
    pub fn tick(&mut self, t: f64) -> Result<Prediction> {
        let rollout = self
            .rollout
            .as_mut()
            .ok_or_else(|| Error::InvalidInput("receiver ticked before any packet".into()))?;
        let p = rollout.step(t);
        self.history.push_back((t, p.first, p.second));
        self.trim();
        Ok(p)
    }

    fn trim(&mut self) {
        while self.history.len() > self.tw {
            self.history.pop_front();
        }
    }
}

/// Receiver estimates `(t, x, y)` at `tick_times` from the packets of one
/// trip alone. The first packet must precede the first tick; a packet whose
/// time equals a tick is applied right after that tick.
pub fn replay_receiver(
    packets: &[PacketEvent],
    tick_times: &[f64],
    scheme: Scheme,
    tw: usize,
    bank: Option<KernelBank>,
) -> Result<Vec<(f64, f64, f64)>> {
    let (first, rest) = packets.split_first().ok_or(Error::Empty)?;
    let mut rx = Receiver::new(scheme, tw, bank);
    rx.on_packet(first)?;
    let mut pending = rest.iter().peekable();
    let mut out = Vec::with_capacity(tick_times.len());
    for &t in tick_times {
        let p = rx.tick(t)?;
        out.push((t, p.x, p.y));
        while let Some(pkt) = pending.next_if(|pkt| pkt.t == t) {
            rx.on_packet(pkt)?;
        }
    }
    if pending.peek().is_some() {
        return Err(Error::InvalidInput("packets after the last tick".into()));
    }
    Ok(out)
}

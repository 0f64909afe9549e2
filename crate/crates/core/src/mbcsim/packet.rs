use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::bank::{Anchor, ChannelSpecs, ConditioningWindow};
use crate::error::{Error, Result};

/// Bytes for a kernel id or the constant-velocity tag.
pub const ID_BYTES: usize = 4;
/// Anchor state `(x0, y0, v0, theta0, t_0)` as five 32-bit floats.
pub const ANCHOR_BYTES: usize = 20;
/// Two kernels of five 64-bit hyperparameters each.
pub const SPEC_PAIR_BYTES: usize = 2 * 5 * 8;
/// Per window value (32-bit float).
pub const WINDOW_VALUE_BYTES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PacketKind {
    /// Reference to an entry of a bank the receiver already holds.
    KernelId {
        id: usize,
    },
    /// Full kernel pair, for a receiver that does not hold it.
    NewKernel {
        id: usize,
        specs: ChannelSpecs,
    },
    CvTag,
}

impl PacketKind {
    pub fn label(&self) -> &'static str {
        match self {
            PacketKind::KernelId { .. } => "kernel_id",
            PacketKind::NewKernel { .. } => "new_kernel",
            PacketKind::CvTag => "cv",
        }
    }

    pub fn kernel_id(&self) -> Option<usize> {
        match *self {
            PacketKind::KernelId { id } | PacketKind::NewKernel { id, .. } => Some(id),
            PacketKind::CvTag => None,
        }
    }
}

/// One model update sent over the link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketEvent {
    pub trip_id: String,
    pub t: f64,
    pub kind: PacketKind,
    /// Receiver PTE that triggered the packet; 0 for the first packet of a
    /// trip.
    pub trigger_pte_m: f64,
    pub anchor: Anchor,
    /// Conditioning samples, when shipped.
    pub window: Option<ConditioningWindow>,
}

impl PacketEvent {
    pub fn payload_bytes(&self) -> usize {
        let model = match self.kind {
            PacketKind::KernelId { .. } | PacketKind::CvTag => ID_BYTES,
            PacketKind::NewKernel { .. } => SPEC_PAIR_BYTES,
        };
        let window = self.window.as_ref().map_or(0, |w| 2 * w.len() * WINDOW_VALUE_BYTES);
        model + ANCHOR_BYTES + window
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketRow {
    pub t: f64,
    pub kind: String,
    /// Empty for constant-velocity packets.
    pub kernel_id: Option<usize>,
    pub trigger_pte_m: f64,
    pub x0: f64,
    pub y0: f64,
    pub v0: f64,
    pub theta0: f64,
}

impl From<&PacketEvent> for PacketRow {
    fn from(p: &PacketEvent) -> Self {
        Self {
            t: p.t,
            kind: p.kind.label().to_string(),
            kernel_id: p.kind.kernel_id(),
            trigger_pte_m: p.trigger_pte_m,
            x0: p.anchor.x0,
            y0: p.anchor.y0,
            v0: p.anchor.v0,
            theta0: p.anchor.theta0,
        }
    }
}

/// Summary CSV, one row per packet.
pub fn write_packet_csv<W: Write>(packets: &[PacketEvent], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in packets {
        w.serialize(PacketRow::from(p))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_packet_csv<R: std::io::Read>(input: R) -> Result<Vec<PacketRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Full payloads, one JSON object per line. This is what a receiver
/// reconstruction reads.
pub fn write_packet_jsonl<W: Write>(packets: &[PacketEvent], mut out: W) -> Result<()> {
    for p in packets {
        serde_json::to_writer(&mut out, p)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_packet_jsonl<R: BufRead>(input: R) -> Result<Vec<PacketEvent>> {
    let mut out = Vec::new();
    for line in input.lines() {
        let line = line?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}

//! Model-based communication over a simulated perfect channel.
//!
//! A transmitter replays a trip, keeps an exact copy of what the receiver
//! believes, and sends a packet only when the receiver's position error
//! exceeds the threshold.

mod link;
mod packet;
mod receiver;
mod sweep;

pub use link::{simulate_corpus, simulate_link, ChannelMetrics, Estimate, LinkConfig, LinkMode, LinkRun, WindowPolicy};
pub use packet::{
    read_packet_csv, read_packet_jsonl, write_packet_csv, write_packet_jsonl, PacketEvent, PacketKind, PacketRow,
    ANCHOR_BYTES, ID_BYTES, SPEC_PAIR_BYTES, WINDOW_VALUE_BYTES,
};
pub use receiver::{replay_receiver, Receiver};
pub use sweep::{shuffled, sweep, SweepCell, SweepSpec};

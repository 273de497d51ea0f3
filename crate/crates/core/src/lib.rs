//! Deterministic discrete-event co-simulation of a slotted TDMA MAC with
//! flooding time sync and in-cycle retransmission, closing control loops
//! for differential-drive robots over a packet-erasure radio channel.

pub mod channel;
pub mod control;
pub mod geometry;
pub mod harness;
pub mod mac;
pub mod plant;
pub mod sim;

//! TDMA MAC: cycle construction, flooding time sync and in-cycle
//! retransmission with cooperative relaying.
//!
//! Each cycle is laid out as
//! `sync | FB per loop | compute gap | CMD per loop | R shared retx floods`,
//! so the controller always acts on feedback sampled in the same cycle.

pub mod frame;
pub mod retx;
pub mod schedule;
pub mod sync;

pub use frame::{decode_frame, encode_frame, DecodeError, Frame, MsgType};
pub use retx::{transmit_with_retx, PendingFrame, RetxReport, SlotAttempt, SlotRef};
pub use schedule::{
    build_schedule, cycle_length, Band, CycleSchedule, Direction, HopSequence, LoopSpec,
    ProtocolConstants, ScheduleError, Slot, SlotOwner,
};
pub use sync::{run_sync_beacon, SyncContext, SyncError, SyncParams, SyncReception, SyncReport, SyncState};

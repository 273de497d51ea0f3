//! Bit-exact 16-byte MAC payload.
//!
//! All multi-byte fields are little-endian.
//!
//! | type  | layout |
//! |-------|--------|
//! | SYNC  | `[0]=0 [1]=src [2]=0xFF [3:5]=seq [5:9]=cycle u32 [9]=wave [10:16]=0` |
//! | CMD   | `[0]=1 [1]=src [2]=dst [3:5]=seq [5:7]=left i16 [7:9]=right i16 [9]=flags [10:16]=0` |
//! | FB    | `[0]=2 [1]=src [2]=dst [3:5]=seq [5:9]=left ticks i32 [9:13]=right ticks i32 [13:15]=range mm u16 [15]=0` |
//! | ESTOP | `[0]=3 [1]=src [2]=0xFF [3:5]=seq [5:16]=0` |
//!
//! Wheel setpoints are in mm/s. A range of `0xFFFF` means no reading.

use thiserror::Error;

use crate::sim::NodeId;

pub const FRAME_LEN: usize = 16;
pub const BROADCAST: NodeId = 0xFF;
pub const NO_READING: u16 = 0xFFFF;

/// CMD flag: emergency stop.
pub const FLAG_ESTOP: u8 = 0x01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum MsgType {
    Sync = 0,
    Cmd = 1,
    Fb = 2,
    Estop = 3,
}

impl MsgType {
    pub fn as_str(self) -> &'static str {
        match self {
            MsgType::Sync => "SYNC",
            MsgType::Cmd => "CMD",
            MsgType::Fb => "FB",
            MsgType::Estop => "ESTOP",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Frame {
    Sync {
        src: NodeId,
        seq: u16,
        cycle_index: u32,
        wave: u8,
    },
    Cmd {
        src: NodeId,
        dst: NodeId,
        seq: u16,
        left_mms: i16,
        right_mms: i16,
        flags: u8,
    },
    Fb {
        src: NodeId,
        dst: NodeId,
        seq: u16,
        left_ticks: i32,
        right_ticks: i32,
        range_mm: u16,
    },
    Estop {
        src: NodeId,
        seq: u16,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DecodeError {
    #[error("frame must be {FRAME_LEN} bytes, got {0}")]
    Length(usize),
    #[error("unknown msg_type {0}")]
    UnknownType(u8),
    #[error("reserved byte {0} is nonzero")]
    Reserved(usize),
    #[error("{0:?} frame must be addressed to broadcast, got {1:#04x}")]
    NotBroadcast(MsgType, u8),
}

impl Frame {
    pub fn msg_type(&self) -> MsgType {
        match self {
            Frame::Sync { .. } => MsgType::Sync,
            Frame::Cmd { .. } => MsgType::Cmd,
            Frame::Fb { .. } => MsgType::Fb,
            Frame::Estop { .. } => MsgType::Estop,
        }
    }

    pub fn src(&self) -> NodeId {
        match *self {
            Frame::Sync { src, .. }
            | Frame::Cmd { src, .. }
            | Frame::Fb { src, .. }
            | Frame::Estop { src, .. } => src,
        }
    }

    pub fn dst(&self) -> NodeId {
        match *self {
            Frame::Cmd { dst, .. } | Frame::Fb { dst, .. } => dst,
            Frame::Sync { .. } | Frame::Estop { .. } => BROADCAST,
        }
    }

    pub fn seq(&self) -> u16 {
        match *self {
            Frame::Sync { seq, .. }
            | Frame::Cmd { seq, .. }
            | Frame::Fb { seq, .. }
            | Frame::Estop { seq, .. } => seq,
        }
    }

    pub fn is_estop(&self) -> bool {
        match *self {
            Frame::Estop { .. } => true,
            Frame::Cmd { flags, .. } => flags & FLAG_ESTOP != 0,
            _ => false,
        }
    }

    pub fn encode(&self) -> [u8; FRAME_LEN] {
        let mut b = [0u8; FRAME_LEN];
        b[0] = self.msg_type() as u8;
        b[1] = self.src();
        b[2] = self.dst();
        b[3..5].copy_from_slice(&self.seq().to_le_bytes());
        match *self {
            Frame::Sync {
                cycle_index, wave, ..
            } => {
                b[5..9].copy_from_slice(&cycle_index.to_le_bytes());
                b[9] = wave;
            }
            Frame::Cmd {
                left_mms,
                right_mms,
                flags,
                ..
            } => {
                b[5..7].copy_from_slice(&left_mms.to_le_bytes());
                b[7..9].copy_from_slice(&right_mms.to_le_bytes());
                b[9] = flags;
            }
            Frame::Fb {
                left_ticks,
                right_ticks,
                range_mm,
                ..
            } => {
                b[5..9].copy_from_slice(&left_ticks.to_le_bytes());
                b[9..13].copy_from_slice(&right_ticks.to_le_bytes());
                b[13..15].copy_from_slice(&range_mm.to_le_bytes());
            }
            Frame::Estop { .. } => {}
        }
        b
    }

    pub fn decode(bytes: &[u8]) -> Result<Frame, DecodeError> {
        if bytes.len() != FRAME_LEN {
            return Err(DecodeError::Length(bytes.len()));
        }
        let reserved_from = |start: usize| -> Result<(), DecodeError> {
            match bytes[start..].iter().position(|&x| x != 0) {
                Some(i) => Err(DecodeError::Reserved(start + i)),
                None => Ok(()),
            }
        };
        let src = bytes[1];
        let dst = bytes[2];
        let seq = u16::from_le_bytes([bytes[3], bytes[4]]);
        let i32_at = |i: usize| i32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]);
        let i16_at = |i: usize| i16::from_le_bytes([bytes[i], bytes[i + 1]]);
        match bytes[0] {
            0 => {
                if dst != BROADCAST {
                    return Err(DecodeError::NotBroadcast(MsgType::Sync, dst));
                }
                reserved_from(10)?;
                Ok(Frame::Sync {
                    src,
                    seq,
                    cycle_index: i32_at(5) as u32,
                    wave: bytes[9],
                })
            }
            1 => {
                reserved_from(10)?;
                Ok(Frame::Cmd {
                    src,
                    dst,
                    seq,
                    left_mms: i16_at(5),
                    right_mms: i16_at(7),
                    flags: bytes[9],
                })
            }
            2 => {
                reserved_from(15)?;
                Ok(Frame::Fb {
                    src,
                    dst,
                    seq,
                    left_ticks: i32_at(5),
                    right_ticks: i32_at(9),
                    range_mm: u16::from_le_bytes([bytes[13], bytes[14]]),
                })
            }
            3 => {
                if dst != BROADCAST {
                    return Err(DecodeError::NotBroadcast(MsgType::Estop, dst));
                }
                reserved_from(5)?;
                Ok(Frame::Estop { src, seq })
            }
            t => Err(DecodeError::UnknownType(t)),
        }
    }
}

pub fn encode_frame(frame: &Frame) -> [u8; FRAME_LEN] {
    frame.encode()
}

pub fn decode_frame(bytes: &[u8]) -> Result<Frame, DecodeError> {
    Frame::decode(bytes)
}

//! Append-only event trace, written as CSV with a fixed header.
//!
//! Columns: `time_us,cycle,node,event,peer,msg,seq,channel,detail,f1,f2,f3,f4`.
//! The meaning of `f1..f4` depends on `event`:
//!
//! | event        | f1        | f2        | f3        | f4          |
//! |--------------|-----------|-----------|-----------|-------------|
//! | tx / rx      | slot pos  | sync wave |           |             |
//! | sync         | residual  | missed    | wave      |             |
//! | fb-sample    | ticks L   | ticks R   | range mm  |             |
//! | cmd          | left mm/s | right mm/s| flags     | informed-by |
//! | apply        | left mm/s | right mm/s| flags     |             |
//! | estop        | range mm  | sample us |           |             |
//! | ref          | index     |           |           |             |
//! | follower-ref | x         | y         |           |             |
//! | pose         | x         | y         | theta     |             |
//! | wheels       | cmd L     | cmd R     | actual L  | actual R    |
//! | obstacle     | ax        | ay        | bx        | by          |

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::sim::{NodeId, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceEvent {
    Tx,
    Rx,
    Sync,
    FbSample,
    Cmd,
    Apply,
    Estop,
    Ref,
    Complete,
    FollowerRef,
    Pose,
    Wheels,
    Obstacle,
    End,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub time_us: SimTime,
    pub cycle: u64,
    pub node: NodeId,
    pub event: TraceEvent,
    pub peer: Option<NodeId>,
    pub msg: Option<String>,
    pub seq: Option<u16>,
    pub channel: Option<u16>,
    pub detail: Option<String>,
    pub f1: Option<f64>,
    pub f2: Option<f64>,
    pub f3: Option<f64>,
    pub f4: Option<f64>,
}

impl TraceRow {
    pub fn new(time_us: SimTime, cycle: u64, node: NodeId, event: TraceEvent) -> Self {
        Self {
            time_us,
            cycle,
            node,
            event,
            peer: None,
            msg: None,
            seq: None,
            channel: None,
            detail: None,
            f1: None,
            f2: None,
            f3: None,
            f4: None,
        }
    }

    pub fn peer(mut self, peer: NodeId) -> Self {
        self.peer = Some(peer);
        self
    }

    pub fn msg(mut self, msg: &str) -> Self {
        self.msg = Some(msg.to_owned());
        self
    }

    pub fn seq(mut self, seq: u16) -> Self {
        self.seq = Some(seq);
        self
    }

    pub fn channel(mut self, channel: u16) -> Self {
        self.channel = Some(channel);
        self
    }

    pub fn detail(mut self, detail: &str) -> Self {
        self.detail = Some(detail.to_owned());
        self
    }

    pub fn values(mut self, values: &[f64]) -> Self {
        let mut it = values.iter().copied();
        self.f1 = it.next();
        self.f2 = it.next();
        self.f3 = it.next();
        self.f4 = it.next();
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("trace time goes backwards at row {0}")]
    NonMonotonic(usize),
}

impl Trace {
    pub fn push(&mut self, row: TraceRow) {
        debug_assert!(self.rows.last().is_none_or(|r| r.time_us <= row.time_us));
        self.rows.push(row);
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn of(&self, event: TraceEvent) -> impl Iterator<Item = &TraceRow> {
        self.rows.iter().filter(move |r| r.event == event)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), TraceError> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.rows {
            w.serialize(r)?;
        }
        if self.rows.is_empty() {
            w.write_record([
                "time_us", "cycle", "node", "event", "peer", "msg", "seq", "channel", "detail", "f1",
                "f2", "f3", "f4",
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        buf
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), TraceError> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(f)
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Trace, TraceError> {
        let mut r = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for row in r.deserialize() {
            let row: TraceRow = row?;
            if rows.last().is_some_and(|p: &TraceRow| p.time_us > row.time_us) {
                return Err(TraceError::NonMonotonic(rows.len()));
            }
            rows.push(row);
        }
        Ok(Trace { rows })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Trace, TraceError> {
        Self::read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}

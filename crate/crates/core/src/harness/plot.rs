//! Plot-ready two-or-more column CSV extracted from a trace.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::metrics::{cycle_time_metric, poses};
use super::trace::{Trace, TraceEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlotMetric {
    /// `latency_us,fraction`
    CycleCdf,
    /// `node,time_us,x,y` for every robot pose
    Path,
    /// `time_us,gap_m` between the first two robots
    Gap,
}

impl std::str::FromStr for PlotMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cycle-cdf" => Ok(Self::CycleCdf),
            "path" => Ok(Self::Path),
            "gap" => Ok(Self::Gap),
            other => Err(format!("unknown metric `{other}` (cycle-cdf, path, gap)")),
        }
    }
}

pub fn write_plot_data<W: Write>(trace: &Trace, metric: PlotMetric, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    match metric {
        PlotMetric::CycleCdf => {
            w.write_record(["latency_us", "fraction"])?;
            for (v, f) in cycle_time_metric(trace).cdf {
                w.write_record([v.to_string(), f.to_string()])?;
            }
        }
        PlotMetric::Path => {
            w.write_record(["node", "time_us", "x", "y"])?;
            for r in trace.of(TraceEvent::Pose) {
                if let (Some(x), Some(y)) = (r.f1, r.f2) {
                    w.write_record([
                        r.node.to_string(),
                        r.time_us.to_string(),
                        x.to_string(),
                        y.to_string(),
                    ])?;
                }
            }
        }
        PlotMetric::Gap => {
            w.write_record(["time_us", "gap_m"])?;
            let mut nodes: Vec<u8> = trace.of(TraceEvent::Pose).map(|r| r.node).collect();
            nodes.sort_unstable();
            nodes.dedup();
            if let [a, b, ..] = nodes[..] {
                let pa = poses(trace, a);
                let pb: std::collections::BTreeMap<_, _> = poses(trace, b).into_iter().collect();
                for (t, p) in pa {
                    if let Some(q) = pb.get(&t) {
                        w.write_record([t.to_string(), p.distance(q).to_string()])?;
                    }
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

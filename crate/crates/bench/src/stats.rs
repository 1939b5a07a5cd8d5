//! Latency summaries and CSV output.

use std::io::Write;

use serde::Serialize;
use statrs::statistics::{Data, OrderStatistics};

use crate::scenario::BenchResult;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub p50_ms: f64,
    pub p95_ms: f64,
    pub samples: usize,
}

impl Summary {
    pub fn of(samples_ms: Vec<f64>) -> Summary {
        let samples = samples_ms.len();
        let mut data = Data::new(samples_ms);
        Summary { p50_ms: data.percentile(50), p95_ms: data.percentile(95), samples }
    }
}

pub const CSV_HEADER: [&str; 6] = ["scenario", "x", "lamp_p50_ms", "lamp_p95_ms", "naive_p50_ms", "speedup"];

/// Run metadata written as `#` comment lines above the header.
#[derive(Debug, Clone)]
pub struct CsvMeta {
    pub seed: u64,
    pub preset: String,
    pub workers: usize,
}

pub fn write_csv<W: Write>(out: W, meta: &CsvMeta, results: &[BenchResult]) -> std::io::Result<()> {
    let mut out = out;
    writeln!(out, "# seed={}", meta.seed)?;
    writeln!(out, "# preset={}", meta.preset)?;
    writeln!(out, "# workers={}", meta.workers)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in results {
        w.write_record([
            r.scenario.name().to_owned(),
            r.x.to_string(),
            format!("{:.6}", r.lamp.p50_ms),
            format!("{:.6}", r.lamp.p95_ms),
            format!("{:.6}", r.naive.p50_ms),
            format!("{:.3}", r.speedup),
        ])?;
    }
    w.flush()
}

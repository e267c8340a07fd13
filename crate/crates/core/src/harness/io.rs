//! JSON Lines and CSV output.

use std::io::Write;

use serde::Serialize;

use super::{RunConfig, RunResult, RunTotals, SweepRow};
use crate::error::Result;
use crate::geometry::UnitVector;

#[derive(Serialize)]
struct Summary<'a> {
    summary: SummaryBody<'a>,
}

#[derive(Serialize)]
struct SummaryBody<'a> {
    config: &'a RunConfig,
    c_star: &'a UnitVector,
    periods: usize,
    #[serde(flatten)]
    totals: &'a RunTotals,
}

/// One JSON object per period, then a summary object.
pub fn write_jsonl<W: Write>(out: &mut W, result: &RunResult) -> Result<()> {
    for r in &result.records {
        serde_json::to_writer(&mut *out, r)?;
        writeln!(out)?;
    }
    let summary = Summary {
        summary: SummaryBody {
            config: &result.config,
            c_star: &result.c_star,
            periods: result.records.len(),
            totals: &result.totals,
        },
    };
    serde_json::to_writer(&mut *out, &summary)?;
    writeln!(out)?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(out: &mut W, rows: &[SweepRow]) -> Result<()> {
    writeln!(out, "T,cum_regret,bound_thm,I_T,subspace_updates")?;
    for r in rows {
        let bound = r.bound_thm.map(|b| b.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{}",
            r.horizon, r.cum_regret, bound, r.cone_updates, r.subspace_updates
        )?;
    }
    Ok(())
}

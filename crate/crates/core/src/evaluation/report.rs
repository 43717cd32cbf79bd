use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ClusteringMethod, SweepRow};
use crate::clustering::AffiliationRule;
use crate::error::Result;

/// Mean achieved rate per (method, rule, num_cells) across realizations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: ClusteringMethod,
    pub rule: AffiliationRule,
    pub num_cells: usize,
    pub realizations: usize,
    pub mean_achieved_rate_bps: f64,
    /// Sample standard deviation over sqrt(realizations); zero for a single realization.
    pub stderr_achieved_rate_bps: f64,
    pub mean_sum_objective_bps: f64,
}

pub fn aggregate(rows: &[SweepRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(ClusteringMethod, AffiliationRule, usize), Vec<&SweepRow>> = BTreeMap::new();
    for row in rows {
        groups.entry((row.method, row.rule, row.num_cells)).or_default().push(row);
    }
    groups
        .into_iter()
        .map(|((method, rule, num_cells), group)| {
            let n = group.len() as f64;
            let mean = group.iter().map(|r| r.achieved_rate_bps).sum::<f64>() / n;
            let mean_obj = group.iter().map(|r| r.sum_objective_bps).sum::<f64>() / n;
            let stderr = if group.len() > 1 {
                let var = group.iter().map(|r| (r.achieved_rate_bps - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            AggregateRow {
                method,
                rule,
                num_cells,
                realizations: group.len(),
                mean_achieved_rate_bps: mean,
                stderr_achieved_rate_bps: stderr,
                mean_sum_objective_bps: mean_obj,
            }
        })
        .collect()
}

/// Raw table as CSV:
/// `realization,method,rule,num_cells,sum_objective_bps,achieved_rate_bps`.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    if rows.is_empty() {
        w.write_record([
            "realization",
            "method",
            "rule",
            "num_cells",
            "sum_objective_bps",
            "achieved_rate_bps",
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_aggregate_csv<W: Write>(rows: &[AggregateRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Raw table as one JSON object per line.
pub fn write_jsonl<W: Write>(rows: &[SweepRow], mut out: W) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(realization: usize, m: usize, rate: f64) -> SweepRow {
        SweepRow {
            realization,
            method: ClusteringMethod::KMeans,
            rule: AffiliationRule::BestChannel,
            num_cells: m,
            sum_objective_bps: rate + 1.0,
            achieved_rate_bps: rate,
        }
    }

    #[test]
    fn csv_header_and_format() {
        let mut buf = Vec::new();
        write_csv(&[row(0, 2, 1234.5)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "realization,method,rule,num_cells,sum_objective_bps,achieved_rate_bps"
        );
        assert_eq!(lines.next().unwrap(), "0,kmeans,best_channel,2,1235.5,1234.5");
    }

    #[test]
    fn empty_csv_still_has_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "realization,method,rule,num_cells,sum_objective_bps,achieved_rate_bps\n"
        );
    }

    #[test]
    fn csv_round_trips() {
        let rows = vec![row(0, 1, 0.1 + 0.2), row(1, 1, 1e-300), row(2, 3, 123_456_789.123_456_78)];
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let back: Vec<SweepRow> = csv::Reader::from_reader(buf.as_slice())
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn jsonl_lines() {
        let mut buf = Vec::new();
        write_jsonl(&[row(0, 1, 2.0), row(1, 1, 3.0)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 2);
        let first: SweepRow = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(first, row(0, 1, 2.0));
    }

    #[test]
    fn aggregate_mean_and_stderr() {
        let rows = vec![row(0, 1, 1.0), row(1, 1, 2.0), row(2, 1, 3.0), row(0, 2, 5.0)];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0].num_cells, 1);
        assert_eq!(agg[0].realizations, 3);
        assert_eq!(agg[0].mean_achieved_rate_bps, 2.0);
        assert!((agg[0].stderr_achieved_rate_bps - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(agg[0].mean_sum_objective_bps, 3.0);
        assert_eq!(agg[1].stderr_achieved_rate_bps, 0.0);
    }
}

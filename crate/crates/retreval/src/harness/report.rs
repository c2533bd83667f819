//! Aggregation of judge verdicts into summary tables, score histograms, and
//! the cross-domain combined average.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::judge::JudgeVerdict;
use crate::model::Domain;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Round to 2 decimals, half away from zero. A 1e-9 guard absorbs the binary
/// representation error of decimal inputs so that e.g. (3.93 + 6.38) / 2
/// rounds to 5.16 rather than 5.15.
pub fn round2_half_up(x: f64) -> f64 {
    (x * 100.0 + 0.5 + 1e-9).floor() / 100.0
}

/// Summary statistics for one (method, domain) slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodDomainSummary {
    pub method: String,
    pub domain: Domain,
    /// Scored verdicts feeding the statistics.
    pub count: usize,
    /// Verdicts excluded because the judge output did not parse.
    pub unscored: usize,
    pub average: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Verdicts with overall >= 7.
    pub high_count: usize,
    /// Rounded-score frequency; values sum to `count`.
    pub histogram: BTreeMap<u8, usize>,
    /// Exact-match accuracy over verdicts that carried a reference answer.
    pub exact_match_rate: Option<f64>,
    /// Average of the first 100 verdicts vs the rest, when count > 100.
    pub sequence_comparison: Option<(f64, f64)>,
}

/// One row of the cross-domain table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinedRow {
    pub method: String,
    pub math_avg: Option<f64>,
    pub creative_avg: Option<f64>,
    /// Unweighted mean of the available domain averages, rounded half-up to
    /// 2 decimals.
    pub combined_avg: f64,
}

/// Full report payload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub schema_version: u32,
    pub rows: Vec<MethodDomainSummary>,
    pub combined: Vec<CombinedRow>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn summarize_slice(method: &str, domain: Domain, verdicts: &[&JudgeVerdict]) -> MethodDomainSummary {
    let scored: Vec<&JudgeVerdict> = verdicts.iter().copied().filter(|v| v.scored).collect();
    let unscored = verdicts.len() - scored.len();
    let mut values: Vec<f64> = scored.iter().filter_map(|v| v.overall).collect();
    values.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let count = values.len();
    let average = if count == 0 {
        0.0
    } else {
        values.iter().sum::<f64>() / count as f64
    };
    let mut histogram: BTreeMap<u8, usize> = BTreeMap::new();
    for v in &values {
        *histogram.entry(v.round() as u8).or_insert(0) += 1;
    }
    let with_reference: Vec<bool> = scored
        .iter()
        .filter_map(|v| v.exact_match)
        .collect();
    let exact_match_rate = if with_reference.is_empty() {
        None
    } else {
        Some(with_reference.iter().filter(|m| **m).count() as f64 / with_reference.len() as f64)
    };
    // first-100 vs rest, in verdict order
    let ordered: Vec<f64> = scored.iter().filter_map(|v| v.overall).collect();
    let sequence_comparison = if ordered.len() > 100 {
        let early = ordered[..100].iter().sum::<f64>() / 100.0;
        let late = ordered[100..].iter().sum::<f64>() / (ordered.len() - 100) as f64;
        Some((early, late))
    } else {
        None
    };

    MethodDomainSummary {
        method: method.to_string(),
        domain,
        count,
        unscored,
        average,
        median: median(&values),
        min: values.first().copied().unwrap_or(0.0),
        max: values.last().copied().unwrap_or(0.0),
        high_count: values.iter().filter(|v| **v >= 7.0).count(),
        histogram,
        exact_match_rate,
        sequence_comparison,
    }
}

/// Aggregate verdicts into per-method, per-domain summaries plus the
/// cross-domain combined table.
pub fn summarize(verdicts: &[JudgeVerdict]) -> Result<ReportSummary> {
    if verdicts.is_empty() {
        return Err(Error::invalid_argument("no verdicts to report"));
    }
    let mut slices: BTreeMap<(String, Domain), Vec<&JudgeVerdict>> = BTreeMap::new();
    for verdict in verdicts {
        slices
            .entry((verdict.method.clone(), verdict.domain))
            .or_default()
            .push(verdict);
    }
    let rows: Vec<MethodDomainSummary> = slices
        .iter()
        .map(|((method, domain), slice)| summarize_slice(method, *domain, slice))
        .collect();

    let mut methods: Vec<String> = rows.iter().map(|r| r.method.clone()).collect();
    methods.dedup();
    methods.sort();
    methods.dedup();
    let combined = methods
        .into_iter()
        .map(|method| {
            let avg_for = |domain: Domain| {
                rows.iter()
                    .find(|r| r.method == method && r.domain == domain && r.count > 0)
                    .map(|r| r.average)
            };
            let math_avg = avg_for(Domain::Math);
            let creative_avg = avg_for(Domain::Creative);
            let available: Vec<f64> = [math_avg, creative_avg].iter().flatten().copied().collect();
            let combined_avg = if available.is_empty() {
                0.0
            } else {
                round2_half_up(available.iter().sum::<f64>() / available.len() as f64)
            };
            CombinedRow {
                method,
                math_avg,
                creative_avg,
                combined_avg,
            }
        })
        .collect();

    Ok(ReportSummary {
        schema_version: REPORT_SCHEMA_VERSION,
        rows,
        combined,
    })
}

fn render_text(summary: &ReportSummary) -> String {
    let mut out = String::new();
    out.push_str(&format!("# retreval report v{}\n", summary.schema_version));

    for domain in [Domain::Math, Domain::Creative, Domain::Other] {
        let rows: Vec<&MethodDomainSummary> =
            summary.rows.iter().filter(|r| r.domain == domain).collect();
        if rows.is_empty() {
            continue;
        }
        out.push_str(&format!("\n## {domain} summary\n"));
        out.push_str(&format!(
            "{:<14} {:>8} {:>8} {:>11} {:>10} {:>8} {:>9}\n",
            "method", "average", "median", "range", "high(>=7)", "judged", "unscored"
        ));
        for row in &rows {
            out.push_str(&format!(
                "{:<14} {:>8.2} {:>8.2} {:>11} {:>10} {:>8} {:>9}\n",
                row.method,
                row.average,
                row.median,
                format!("{:.0}-{:.0}", row.min, row.max),
                row.high_count,
                row.count,
                row.unscored,
            ));
        }

        out.push_str(&format!("\n## {domain} score distribution\n"));
        let mut scores: Vec<u8> = rows
            .iter()
            .flat_map(|r| r.histogram.keys().copied())
            .collect();
        scores.sort_unstable();
        scores.dedup();
        out.push_str(&format!("{:<6}", "score"));
        for row in &rows {
            out.push_str(&format!(" {:>12}", row.method));
        }
        out.push('\n');
        for score in scores {
            out.push_str(&format!("{score:<6}"));
            for row in &rows {
                out.push_str(&format!(" {:>12}", row.histogram.get(&score).copied().unwrap_or(0)));
            }
            out.push('\n');
        }

        for row in &rows {
            if let Some(rate) = row.exact_match_rate {
                out.push_str(&format!(
                    "exact-match accuracy {}: {:.1}%\n",
                    row.method,
                    rate * 100.0
                ));
            }
            if let Some((early, late)) = row.sequence_comparison {
                out.push_str(&format!(
                    "first-100 vs rest {}: {:.2} -> {:.2}\n",
                    row.method, early, late
                ));
            }
        }
    }

    out.push_str("\n## combined\n");
    out.push_str(&format!(
        "{:<14} {:>9} {:>13} {:>13}\n",
        "method", "math avg", "creative avg", "combined avg"
    ));
    for row in &summary.combined {
        let fmt = |v: Option<f64>| match v {
            Some(x) => format!("{x:.2}"),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{:<14} {:>9} {:>13} {:>13.2}\n",
            row.method,
            fmt(row.math_avg),
            fmt(row.creative_avg),
            row.combined_avg
        ));
    }
    out
}

/// Write `report.txt`, `summary.csv`, and `histogram.csv` under `out_dir`.
pub fn write_report(summary: &ReportSummary, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir)?;
    std::fs::write(out_dir.join("report.txt"), render_text(summary))?;

    let mut csv = String::from(
        "schema_version,method,domain,judged,unscored,average,median,min,max,high_count\n",
    );
    for row in &summary.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{:.4},{:.4},{:.4},{:.4},{}\n",
            summary.schema_version,
            row.method,
            row.domain,
            row.count,
            row.unscored,
            row.average,
            row.median,
            row.min,
            row.max,
            row.high_count
        ));
    }
    std::fs::write(out_dir.join("summary.csv"), csv)?;

    let mut csv = String::from("schema_version,method,domain,score,count\n");
    for row in &summary.rows {
        for (score, count) in &row.histogram {
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                summary.schema_version, row.method, row.domain, score, count
            ));
        }
    }
    std::fs::write(out_dir.join("histogram.csv"), csv)?;
    Ok(())
}

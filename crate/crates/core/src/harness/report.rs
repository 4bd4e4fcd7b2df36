//! CSV summaries of a set of run records.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::dos::{conditional_means, factor_sensitivity, FactorRecord, Objective, Sensitivity, METRIC_OBJECTIVES};
use crate::error::{Error, Result};
use crate::harness::run::RunRecord;
use crate::metrics::METRIC_NAMES;

/// Experimental factors in grid order.
pub const FACTORS: [&str; 7] = [
    "sample_size",
    "nodes",
    "graph",
    "connectivity",
    "relu_fraction",
    "w_upper",
    "scale",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankingRow {
    pub rank: usize,
    pub model: String,
    /// Mean over successful runs; empty when every run failed.
    pub mean_dos: Option<f64>,
    pub runs: usize,
    pub failures: usize,
    pub failure_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricMeans {
    pub model: String,
    /// Means in `[tpr, fpr, nshd, f1, ncod, nsid, dos]` order.
    pub means: [Option<f64>; 7],
    /// Rank of the model on each column, 1 = best.
    pub ranks: [usize; 7],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankCorrelation {
    pub metric: String,
    /// Spearman correlation between the models' mean DOS and their mean on
    /// this metric, oriented so that 1 means identical rankings.
    pub spearman_vs_dos: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalRow {
    pub model: String,
    pub factor_a: String,
    pub factor_b: String,
    pub level_a: String,
    pub level_b: String,
    pub mean_dos: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivitySummary {
    pub factor: String,
    pub baseline: String,
    pub model: String,
    pub groups: usize,
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub ranking: Vec<RankingRow>,
    pub metric_means: Vec<MetricMeans>,
    pub correlations: Vec<RankCorrelation>,
    pub sensitivities: Vec<Sensitivity>,
    pub conditional: Vec<ConditionalRow>,
}

const COLUMNS: [&str; 7] = ["tpr", "fpr", "nshd", "f1", "ncod", "nsid", "dos"];

fn objective(col: usize) -> Objective {
    if col < 6 {
        METRIC_OBJECTIVES[col]
    } else {
        Objective::Max
    }
}

fn column_value(r: &RunRecord, col: usize) -> Option<f64> {
    let m = r.metrics?;
    Some([m.tpr, m.fpr, m.nshd, m.f1, m.ncod, m.nsid, m.dos][col])
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Ordinal ranks (1 = best). Missing values rank last; ties broken by position,
/// which callers make the model-name order.
fn ordinal_ranks(values: &[Option<f64>], obj: Objective) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| match (values[a], values[b]) {
        (Some(x), Some(y)) => {
            let ord = match obj {
                Objective::Max => y.total_cmp(&x),
                Objective::Min => x.total_cmp(&y),
            };
            ord.then(a.cmp(&b))
        }
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.cmp(&b),
    });
    let mut ranks = vec![0; values.len()];
    for (pos, &i) in idx.iter().enumerate() {
        ranks[i] = pos + 1;
    }
    ranks
}

/// Average ranks with ties sharing the mean position, ascending by value.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let r = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = r;
        }
        start = end;
    }
    ranks
}

/// Spearman's rank correlation. `None` with fewer than two points or a
/// constant input.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (average_ranks(x), average_ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn report(records: &[RunRecord]) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::MissingData("no records to report".into()));
    }
    let mut by_model: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        by_model.entry(r.model.name()).or_default().push(r);
    }
    let models: Vec<&str> = by_model.keys().copied().collect();

    let column_means: Vec<[Option<f64>; 7]> = models
        .iter()
        .map(|m| {
            let rs = &by_model[m];
            std::array::from_fn(|c| mean(&rs.iter().filter_map(|r| column_value(r, c)).collect::<Vec<_>>()))
        })
        .collect();
    let column_ranks: Vec<Vec<usize>> = (0..7)
        .map(|c| ordinal_ranks(&column_means.iter().map(|m| m[c]).collect::<Vec<_>>(), objective(c)))
        .collect();

    let mut ranking: Vec<RankingRow> = models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let runs = by_model[m].len();
            let failures = by_model[m].iter().filter(|r| r.metrics.is_none()).count();
            RankingRow {
                rank: column_ranks[6][i],
                model: m.to_string(),
                mean_dos: column_means[i][6],
                runs,
                failures,
                failure_rate: failures as f64 / runs as f64,
            }
        })
        .collect();
    ranking.sort_by_key(|r| r.rank);

    let metric_means: Vec<MetricMeans> = models
        .iter()
        .enumerate()
        .map(|(i, m)| MetricMeans {
            model: m.to_string(),
            means: column_means[i],
            ranks: std::array::from_fn(|c| column_ranks[c][i]),
        })
        .collect();

    // min-objective metrics are negated so a positive coefficient means agreement
    let correlations = (0..6)
        .map(|c| {
            let sign = if objective(c) == Objective::Min { -1.0 } else { 1.0 };
            let (x, y): (Vec<f64>, Vec<f64>) = column_means.iter().filter_map(|m| Some((m[6]?, sign * m[c]?))).unzip();
            RankCorrelation {
                metric: METRIC_NAMES[c].to_string(),
                spearman_vs_dos: spearman(&x, &y),
            }
        })
        .collect();

    // baselines are the levels of the first cell, i.e. each domain's first level
    let first = records.iter().min_by_key(|r| r.key()).expect("nonempty");
    let mut sensitivities = Vec::new();
    let mut conditional = Vec::new();
    for factor in FACTORS {
        let distinct: std::collections::BTreeSet<String> = records.iter().filter_map(|r| r.level(factor)).collect();
        if distinct.len() < 2 {
            continue;
        }
        let baseline = first.level(factor).expect("known factor");
        sensitivities.push(factor_sensitivity(records, factor, &baseline));
    }
    for (a, fa) in FACTORS.iter().enumerate() {
        for fb in &FACTORS[a + 1..] {
            for m in &models {
                let owned: Vec<RunRecord> = by_model[m].iter().map(|r| (*r).clone()).collect();
                let table = conditional_means(&owned, fa, fb)?;
                for la in &table.levels_a {
                    for lb in &table.levels_b {
                        if let Some((mean_dos, count)) = table.get(la, lb) {
                            conditional.push(ConditionalRow {
                                model: m.to_string(),
                                factor_a: fa.to_string(),
                                factor_b: fb.to_string(),
                                level_a: la.clone(),
                                level_b: lb.clone(),
                                mean_dos,
                                count,
                            });
                        }
                    }
                }
            }
        }
    }
    Ok(Report {
        ranking,
        metric_means,
        correlations,
        sensitivities,
        conditional,
    })
}

impl Report {
    pub fn sensitivity_summary(&self) -> Vec<SensitivitySummary> {
        let mut out = Vec::new();
        for s in &self.sensitivities {
            let mut per_model: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
            for d in &s.sums {
                per_model.entry(&d.model).or_default().push(d.sum);
            }
            for (model, mut sums) in per_model {
                sums.sort_by(f64::total_cmp);
                let skipped = s
                    .skipped
                    .iter()
                    .filter(|k| k.starts_with(&format!("model={model};")))
                    .count();
                out.push(SensitivitySummary {
                    factor: s.factor.clone(),
                    baseline: s.baseline.clone(),
                    model: model.to_string(),
                    groups: sums.len(),
                    mean: mean(&sums).unwrap_or(0.0),
                    median: median(&sums),
                    min: sums[0],
                    max: sums[sums.len() - 1],
                    skipped,
                });
            }
        }
        out
    }

    /// Writes the CSV bundle into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_rows(&dir.join("ranking.csv"), &self.ranking)?;

        let mut w = csv::Writer::from_path(dir.join("metric_means.csv"))?;
        let mut header = vec!["model".to_string()];
        header.extend(COLUMNS.iter().map(|c| c.to_string()));
        header.extend(COLUMNS.iter().map(|c| format!("rank_{c}")));
        w.write_record(&header)?;
        for m in &self.metric_means {
            let mut row = vec![m.model.clone()];
            row.extend(m.means.iter().map(|v| v.map_or(String::new(), |x| x.to_string())));
            row.extend(m.ranks.iter().map(usize::to_string));
            w.write_record(&row)?;
        }
        w.flush()?;

        write_rows(&dir.join("rank_correlations.csv"), &self.correlations)?;
        write_rows(&dir.join("conditional_means.csv"), &self.conditional)?;
        write_rows(&dir.join("sensitivity_summary.csv"), &self.sensitivity_summary())?;
        for s in &self.sensitivities {
            let mut w = csv::Writer::from_path(dir.join(format!("sensitivity_{}.csv", s.factor)))?;
            w.write_record(["model", "group", "delta_sum"])?;
            for d in &s.sums {
                w.write_record([d.model.as_str(), d.group.as_str(), &d.sum.to_string()])?;
            }
            w.flush()?;
        }
        Ok(())
    }
}

fn write_rows<S: Serialize>(path: &Path, rows: &[S]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// One flat row per record, for external analysis.
pub fn write_runs_csv(path: &Path, records: &[RunRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<&str> = vec![
        "cell",
        "replicate",
        "model",
        "sample_size",
        "nodes",
        "graph",
        "connectivity",
        "relu_fraction",
        "w_upper",
        "scale",
        "instance_seed",
        "varsortability",
    ];
    header.extend(COLUMNS);
    header.extend(["shd", "cod", "sid", "wall_clock_ms", "error"]);
    w.write_record(&header)?;
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for r in records {
        let mut row = vec![
            r.cell.to_string(),
            r.replicate.to_string(),
            r.model.to_string(),
            r.sample_size.to_string(),
            r.nodes.to_string(),
            r.graph.to_string(),
            r.connectivity.to_string(),
            r.relu_fraction.to_string(),
            r.w_upper.to_string(),
            r.scale.to_string(),
            r.instance_seed.to_string(),
            opt(r.varsortability),
        ];
        row.extend((0..7).map(|c| opt(column_value(r, c))));
        let m = r.metrics;
        row.push(m.map_or(String::new(), |m| m.shd.to_string()));
        row.push(m.map_or(String::new(), |m| m.cod.to_string()));
        row.push(m.map_or(String::new(), |m| m.sid.to_string()));
        row.push(r.wall_clock_ms.to_string());
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

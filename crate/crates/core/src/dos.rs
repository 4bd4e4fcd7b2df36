//! Distance to the optimal solution (DOS): a TOPSIS-style closeness score over
//! the six normalized metrics, plus aggregation helpers over many runs.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::metrics::{MetricVector, METRIC_NAMES};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Min,
    Max,
}

/// Objectives of `[TPR, FPR, nSHD, F1, nCOD, nSID]`.
pub const METRIC_OBJECTIVES: [Objective; 6] = [
    Objective::Max,
    Objective::Min,
    Objective::Min,
    Objective::Max,
    Objective::Min,
    Objective::Min,
];

/// Ideal and worst anchors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioPair<T> {
    pub s_plus: MetricVector<T>,
    pub s_minus: MetricVector<T>,
}

impl<T: Scalar> ScenarioPair<T> {
    /// Anchors for the standard metric objectives.
    pub fn standard() -> Self {
        scenarios(&METRIC_OBJECTIVES).expect("six objectives")
    }
}

pub fn scenarios<T: Scalar>(objectives: &[Objective]) -> Result<ScenarioPair<T>> {
    let objectives: &[Objective; 6] = objectives
        .try_into()
        .map_err(|_| invalid(format!("expected 6 objectives, got {}", objectives.len())))?;
    let best = objectives.map(|o| match o {
        Objective::Max => T::one(),
        Objective::Min => T::zero(),
    });
    let worst = best.map(|b| T::one() - b);
    Ok(ScenarioPair {
        s_plus: MetricVector::from_array(best),
        s_minus: MetricVector::from_array(worst),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DosScore<T> {
    pub value: T,
    pub dist_plus: T,
    pub dist_minus: T,
}

fn euclidean<T: Scalar>(a: &[T; 6], b: &[T; 6]) -> T {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum::<T>().sqrt()
}

/// `dist⁻ / (dist⁻ + dist⁺)` with unweighted Euclidean distances.
pub fn dos_single<T: Scalar>(m: &MetricVector<T>, sc: &ScenarioPair<T>) -> Result<DosScore<T>> {
    m.validate()?;
    let v = m.to_array();
    let dist_plus = euclidean(&v, &sc.s_plus.to_array());
    let dist_minus = euclidean(&v, &sc.s_minus.to_array());
    let total = dist_plus + dist_minus;
    if total == T::zero() {
        return Err(Error::Undefined("both scenario distances are zero".into()));
    }
    Ok(DosScore {
        value: dist_minus / total,
        dist_plus,
        dist_minus,
    })
}

/// View of a run record needed by the aggregations below.
pub trait FactorRecord {
    fn model(&self) -> &str;
    /// `None` when the fit failed.
    fn dos(&self) -> Option<f64>;
    /// `(factor, level)` pairs identifying the dataset, including the replicate.
    fn levels(&self) -> Vec<(&'static str, String)>;

    fn level(&self, factor: &str) -> Option<String> {
        self.levels().into_iter().find(|(f, _)| *f == factor).map(|(_, l)| l)
    }
}

/// Mean DOS of `model` over its successful records.
pub fn dos_aggregate<R: FactorRecord>(records: &[R], model: &str) -> Result<f64> {
    let values: Vec<f64> = records
        .iter()
        .filter(|r| r.model() == model)
        .filter_map(FactorRecord::dos)
        .collect();
    if values.is_empty() {
        return Err(Error::MissingData(format!("no scored records for model `{model}`")));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Δ-DOS sum of one group of runs that differ only in the target factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSum {
    pub model: String,
    pub group: String,
    pub sum: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Sensitivity {
    pub factor: String,
    pub baseline: String,
    pub sums: Vec<DeltaSum>,
    /// Groups lacking the baseline or another level of the factor.
    pub skipped: Vec<String>,
}

fn group_key<R: FactorRecord>(r: &R, excluding: &str) -> String {
    let mut key = format!("model={}", r.model());
    for (f, l) in r.levels() {
        if f != excluding {
            key.push_str(&format!(";{f}={l}"));
        }
    }
    key
}

/// For every group of records equal in all factors but `factor`, sums
/// `|DOS(level) - DOS(baseline)|` over the non-baseline levels.
pub fn factor_sensitivity<R: FactorRecord>(records: &[R], factor: &str, baseline: &str) -> Sensitivity {
    let mut all_levels: Vec<String> = Vec::new();
    let mut groups: BTreeMap<String, (String, BTreeMap<String, Option<f64>>)> = BTreeMap::new();
    for r in records {
        let Some(level) = r.level(factor) else { continue };
        if !all_levels.contains(&level) {
            all_levels.push(level.clone());
        }
        groups
            .entry(group_key(r, factor))
            .or_insert_with(|| (r.model().to_string(), BTreeMap::new()))
            .1
            .insert(level, r.dos());
    }
    let mut out = Sensitivity {
        factor: factor.to_string(),
        baseline: baseline.to_string(),
        ..Default::default()
    };
    for (key, (model, by_level)) in groups {
        let complete: Option<Vec<f64>> = all_levels.iter().map(|l| by_level.get(l).copied().flatten()).collect();
        let base = by_level.get(baseline).copied().flatten();
        match (complete, base) {
            (Some(_), Some(base)) => {
                let sum = all_levels
                    .iter()
                    .filter(|l| l.as_str() != baseline)
                    .map(|l| (by_level[l].unwrap() - base).abs())
                    .sum();
                out.sums.push(DeltaSum { model, group: key, sum });
            }
            _ => out.skipped.push(key),
        }
    }
    out
}

/// Two-way table of mean DOS. Cells without records are absent from `cells`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConditionalMeans {
    pub factor_a: String,
    pub factor_b: String,
    pub levels_a: Vec<String>,
    pub levels_b: Vec<String>,
    /// `(level_a, level_b) -> (mean DOS, count)`
    pub cells: BTreeMap<(String, String), (f64, usize)>,
}

impl ConditionalMeans {
    pub fn get(&self, a: &str, b: &str) -> Option<(f64, usize)> {
        self.cells.get(&(a.to_string(), b.to_string())).copied()
    }
}

pub fn conditional_means<R: FactorRecord>(records: &[R], factor_a: &str, factor_b: &str) -> Result<ConditionalMeans> {
    let mut out = ConditionalMeans {
        factor_a: factor_a.to_string(),
        factor_b: factor_b.to_string(),
        ..Default::default()
    };
    let mut sums: BTreeMap<(String, String), (f64, usize)> = BTreeMap::new();
    let mut seen_any = false;
    for r in records {
        let (Some(a), Some(b)) = (r.level(factor_a), r.level(factor_b)) else {
            continue;
        };
        seen_any = true;
        if !out.levels_a.contains(&a) {
            out.levels_a.push(a.clone());
        }
        if !out.levels_b.contains(&b) {
            out.levels_b.push(b.clone());
        }
        if let Some(v) = r.dos() {
            let cell = sums.entry((a, b)).or_insert((0.0, 0));
            cell.0 += v;
            cell.1 += 1;
        }
    }
    if !seen_any && !records.is_empty() {
        return Err(invalid(format!(
            "factors `{factor_a}`/`{factor_b}` not present in records"
        )));
    }
    out.cells = sums.into_iter().map(|(k, (s, c))| (k, (s / c as f64, c))).collect();
    Ok(out)
}

/// Metric names in vector order, for table headers.
pub fn metric_names() -> [&'static str; 6] {
    METRIC_NAMES
}

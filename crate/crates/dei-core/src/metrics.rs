//! Diversity and ensemble metrics over resolution matrices.
//!
//! All "@k" metrics consume the first `k` candidates of an explicit
//! [`CandidateOrder`]: Union@k counts instances solved by any of them,
//! Intersect@k by all of them, Average@k the mean per-candidate resolve
//! count, and n@k the instances solved by `n` candidates chosen by a
//! selector policy. The gap between Union@k and Average@k measures how much
//! a perfect reranker could gain; n@k measures how much a concrete one does.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::committee::ScoreRecord;
use crate::corpus::ResolutionMatrix;
use crate::error::MetricsError;
use crate::seed::derived_rng;
use crate::types::{CandidateKey, CandidateOrder};

/// Aggregate scores looked up per (instance, candidate), for the
/// score-based selector.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreLookup {
    aggregates: BTreeMap<(String, CandidateKey), f64>,
}

impl ScoreLookup {
    pub fn from_records(records: &[ScoreRecord]) -> Self {
        let aggregates = records
            .iter()
            .map(|r| ((r.instance_id.clone(), r.candidate.clone()), r.aggregate))
            .collect();
        Self { aggregates }
    }

    pub fn get(&self, instance_id: &str, key: &CandidateKey) -> Option<f64> {
        self.aggregates
            .get(&(instance_id.to_string(), key.clone()))
            .copied()
    }
}

/// Selector policy for n@k.
#[derive(Debug, Clone)]
pub enum Selector {
    /// Always picks a resolving candidate when one exists.
    Oracle,
    /// Picks a non-resolving candidate when one exists.
    Adversarial,
    /// Uniformly samples `n` distinct candidates per instance; reported as
    /// a Monte Carlo mean over `trials`.
    UniformRandom { seed: u64, trials: u32 },
    /// Picks the top-n candidates by aggregate committee score, ties broken
    /// by order position.
    ScoreBased(ScoreLookup),
}

impl Selector {
    pub fn label(&self) -> &'static str {
        match self {
            Selector::Oracle => "oracle",
            Selector::Adversarial => "adversarial",
            Selector::UniformRandom { .. } => "random",
            Selector::ScoreBased(_) => "scores",
        }
    }
}

/// Maps order positions to matrix column indices, checking the order covers
/// the matrix columns exactly.
fn ordered_columns(
    matrix: &ResolutionMatrix,
    order: &CandidateOrder,
) -> Result<Vec<usize>, MetricsError> {
    order.validate().map_err(MetricsError::Validation)?;
    if order.len() != matrix.candidate_count() {
        return Err(MetricsError::Validation(format!(
            "order has {} candidates but the matrix has {}",
            order.len(),
            matrix.candidate_count()
        )));
    }
    order
        .order
        .iter()
        .map(|key| {
            matrix.column_index(key).ok_or_else(|| {
                MetricsError::Validation(format!("order references unknown candidate {key}"))
            })
        })
        .collect()
}

fn check_k(k: usize, columns: usize) -> Result<(), MetricsError> {
    if k == 0 || k > columns {
        return Err(MetricsError::KOutOfRange { k, max: columns });
    }
    Ok(())
}

/// Instances resolved by any of the first `k` candidates.
pub fn union_at_k(
    matrix: &ResolutionMatrix,
    order: &CandidateOrder,
    k: usize,
) -> Result<usize, MetricsError> {
    let cols = ordered_columns(matrix, order)?;
    check_k(k, cols.len())?;
    Ok(matrix
        .resolved
        .iter()
        .filter(|row| cols[..k].iter().any(|&j| row[j]))
        .count())
}

/// Instances resolved by all of the first `k` candidates.
pub fn intersect_at_k(
    matrix: &ResolutionMatrix,
    order: &CandidateOrder,
    k: usize,
) -> Result<usize, MetricsError> {
    let cols = ordered_columns(matrix, order)?;
    check_k(k, cols.len())?;
    Ok(matrix
        .resolved
        .iter()
        .filter(|row| cols[..k].iter().all(|&j| row[j]))
        .count())
}

/// Mean per-candidate resolve count over the first `k` candidates.
pub fn average_at_k(
    matrix: &ResolutionMatrix,
    order: &CandidateOrder,
    k: usize,
) -> Result<f64, MetricsError> {
    let cols = ordered_columns(matrix, order)?;
    check_k(k, cols.len())?;
    let total: usize = cols[..k].iter().map(|&j| matrix.column_count(j)).sum();
    Ok(total as f64 / k as f64)
}

/// Instances resolved by `n` candidates chosen out of the first `k` by the
/// selector. Deterministic selectors return an exact count; the uniform
/// random selector returns a Monte Carlo mean.
pub fn n_at_k(
    matrix: &ResolutionMatrix,
    order: &CandidateOrder,
    k: usize,
    n: usize,
    selector: &Selector,
) -> Result<f64, MetricsError> {
    let cols = ordered_columns(matrix, order)?;
    check_k(k, cols.len())?;
    if n == 0 || n > k {
        return Err(MetricsError::NOutOfRange { n, k });
    }

    match selector {
        Selector::Oracle => Ok(count_with_choice(matrix, &cols[..k], n, |row, positions| {
            sorted_positions_by(positions, |p| (!row[cols[p]], p))
        })),
        Selector::Adversarial => Ok(count_with_choice(matrix, &cols[..k], n, |row, positions| {
            sorted_positions_by(positions, |p| (row[cols[p]], p))
        })),
        Selector::ScoreBased(lookup) => {
            // Resolve lookups up front so missing entries fail loudly.
            let mut scores: Vec<Vec<f64>> = Vec::with_capacity(matrix.instance_count());
            for instance_id in &matrix.instance_ids {
                let row_scores = order.order[..k]
                    .iter()
                    .map(|key| {
                        lookup.get(instance_id, key).ok_or_else(|| {
                            MetricsError::Validation(format!(
                                "score ledger has no record for instance {instance_id} \
                                 candidate {key}"
                            ))
                        })
                    })
                    .collect::<Result<Vec<f64>, _>>()?;
                scores.push(row_scores);
            }
            let mut solved = 0usize;
            for (row_idx, row) in matrix.resolved.iter().enumerate() {
                let row_scores = &scores[row_idx];
                let mut positions: Vec<usize> = (0..k).collect();
                positions.sort_by(|&a, &b| {
                    row_scores[b].total_cmp(&row_scores[a]).then(a.cmp(&b))
                });
                if positions[..n].iter().any(|&p| row[cols[p]]) {
                    solved += 1;
                }
            }
            Ok(solved as f64)
        }
        Selector::UniformRandom { seed, trials } => {
            if *trials == 0 {
                return Err(MetricsError::Validation("trials must be at least 1".into()));
            }
            let mut total = 0u64;
            for trial in 0..*trials {
                let mut rng = derived_rng(*seed, &["random-selector", &trial.to_string()]);
                for row in &matrix.resolved {
                    let picks = sample_distinct(&mut rng, k, n);
                    if picks.iter().any(|&p| row[cols[p]]) {
                        total += 1;
                    }
                }
            }
            Ok(total as f64 / f64::from(*trials))
        }
    }
}

fn sorted_positions_by<K: Ord>(k: usize, key: impl Fn(usize) -> K) -> Vec<usize> {
    let mut positions: Vec<usize> = (0..k).collect();
    positions.sort_by_key(|&p| key(p));
    positions
}

fn count_with_choice(
    matrix: &ResolutionMatrix,
    cols: &[usize],
    n: usize,
    choose: impl Fn(&[bool], usize) -> Vec<usize>,
) -> f64 {
    let mut solved = 0usize;
    for row in &matrix.resolved {
        let chosen = choose(row, cols.len());
        if chosen[..n].iter().any(|&p| row[cols[p]]) {
            solved += 1;
        }
    }
    solved as f64
}

/// Samples `n` distinct values from `0..k` by partial Fisher-Yates.
fn sample_distinct(rng: &mut rand_chacha::ChaCha8Rng, k: usize, n: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..k).collect();
    for i in 0..n {
        let j = rng.random_range(i..k);
        pool.swap(i, j);
    }
    pool.truncate(n);
    pool
}

/// One row of a metric series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub k: usize,
    pub intersect: usize,
    pub average: f64,
    pub n_at_k: f64,
    pub union: usize,
}

/// The four metrics tabulated for k = 1..=K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSeries {
    pub instances: usize,
    pub n: usize,
    pub selector: String,
    pub order_provenance: String,
    pub rows: Vec<MetricRow>,
}

impl MetricSeries {
    fn pct(&self, count: f64) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            100.0 * count / self.instances as f64
        }
    }

    fn n_label(&self) -> String {
        format!("{}@k", self.n)
    }

    /// CSV rendering: raw counts plus percentages rounded to one decimal.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "k,intersect,intersect_pct,average,average_pct,n_at_k,n_at_k_pct,\
             improvement_pct,union,union_pct\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{:.1},{:.3},{:.1},{:.3},{:.1},{:+.1},{},{:.1}\n",
                row.k,
                row.intersect,
                self.pct(row.intersect as f64),
                row.average,
                self.pct(row.average),
                row.n_at_k,
                self.pct(row.n_at_k),
                self.pct(row.n_at_k) - self.pct(row.average),
                row.union,
                self.pct(row.union as f64),
            ));
        }
        out
    }

    /// Aligned text table in percentages, one decimal.
    pub fn to_table(&self) -> String {
        let n_label = self.n_label();
        let mut out = format!(
            "{:>3}  {:>12}  {:>10}  {:>10}  {:>12}  {:>8}\n",
            "k", "Intersect@k", "Average@k", n_label, "Improvement", "Union@k"
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{:>3}  {:>12.1}  {:>10.1}  {:>10.1}  {:>+12.1}  {:>8.1}\n",
                row.k,
                self.pct(row.intersect as f64),
                self.pct(row.average),
                self.pct(row.n_at_k),
                self.pct(row.n_at_k) - self.pct(row.average),
                self.pct(row.union as f64),
            ));
        }
        out
    }
}

/// Computes all four metrics for k = 1..=k_max.
pub fn metric_series(
    matrix: &ResolutionMatrix,
    order: &CandidateOrder,
    selector: &Selector,
    n: usize,
    k_max: usize,
) -> Result<MetricSeries, MetricsError> {
    check_k(k_max, matrix.candidate_count())?;
    let mut rows = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        rows.push(MetricRow {
            k,
            intersect: intersect_at_k(matrix, order, k)?,
            average: average_at_k(matrix, order, k)?,
            n_at_k: n_at_k(matrix, order, k, n.min(k), selector)?,
            union: union_at_k(matrix, order, k)?,
        });
    }
    Ok(MetricSeries {
        instances: matrix.instance_count(),
        n,
        selector: selector.label().to_string(),
        order_provenance: order.provenance.clone(),
        rows,
    })
}

/// Generates a seeded random matrix with per-column resolve probability
/// `rate` and inter-column correlation `overlap` (0 = independent columns,
/// 1 = identical columns). Column means stay `rate` for any overlap.
pub fn generate_synthetic_matrix(
    instances: usize,
    candidates: usize,
    rate: f64,
    overlap: f64,
    seed: u64,
) -> Result<ResolutionMatrix, MetricsError> {
    if !(0.0..=1.0).contains(&rate) {
        return Err(MetricsError::Validation(format!(
            "rate {rate} outside [0, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&overlap) {
        return Err(MetricsError::Validation(format!(
            "overlap {overlap} outside [0, 1]"
        )));
    }
    if candidates == 0 {
        return Err(MetricsError::Validation("candidates must be at least 1".into()));
    }

    let width = instances.to_string().len().max(4);
    let cand_width = candidates.to_string().len().max(2);
    let mut rng = derived_rng(seed, &["synthetic-matrix"]);
    let resolved: Vec<Vec<bool>> = (0..instances)
        .map(|_| {
            let shared = rng.random_bool(rate);
            (0..candidates)
                .map(|_| {
                    if rng.random_bool(overlap) {
                        shared
                    } else {
                        rng.random_bool(rate)
                    }
                })
                .collect()
        })
        .collect();

    Ok(ResolutionMatrix {
        instance_ids: (0..instances)
            .map(|i| format!("inst-{i:0width$}"))
            .collect(),
        candidates: (0..candidates)
            .map(|j| CandidateKey::new(format!("agent-{j:0cand_width$}"), 0))
            .collect(),
        resolved,
    })
}

/// The fixed shuffled ordering of the ten leaderboard agent groups used for
/// multi-agent analyses. User-overridable via an order file.
pub fn builtin_ten_agent_order() -> CandidateOrder {
    let names = [
        "20240612_IBM_Research_Agent101",
        "20240612_MASAI_gpt4o",
        "20240604_CodeR",
        "20240523_aider",
        "20240630_agentless_gpt4o",
        "20240617_moatless_gpt4o",
        "20240725_opendevin_codeact_v1.8_claude35sonnet",
        "20240706_sima_gpt4o",
        "20240621_autocoderover-v20240620",
        "20240509_amazon-q-developer-agent-20240430-dev",
    ];
    CandidateOrder::new(
        names.iter().map(|n| CandidateKey::new(*n, 0)).collect(),
        "fixed shuffled order",
    )
}

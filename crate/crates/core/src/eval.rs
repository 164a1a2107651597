//! Evaluation metrics and the nonparametric statistics used to compare
//! algorithms: mean absolute error, Kendall's tau over ranked recommendation
//! lists, and the Wilcoxon signed-rank test with its normal approximation.

use crate::dataset::{MovieId, UserId};
use crate::error::{Error, Result};
use crate::neighborhood::Characteristics;
use crate::normal::std_normal_cdf;

/// Outcome of one reserved-vote trial.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub test_user_id: UserId,
    pub movie_id: MovieId,
    pub actual: f64,
    pub predicted: f64,
    pub fallback: bool,
    pub neighborhood_size: usize,
    pub reviewers_seen: usize,
    pub n_recommendations: usize,
    pub overlap_count: usize,
    /// Absent when fewer than two overlapping films existed.
    pub tau: Option<f64>,
    pub characteristics: Characteristics,
}

impl PredictionRecord {
    pub fn abs_error(&self) -> f64 {
        (self.actual - self.predicted).abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaeReport {
    pub value: f64,
    pub n_predictions: usize,
    /// How many of those predictions were mean fallbacks.
    pub n_fallback: usize,
}

/// Mean absolute error over all records, fallbacks included.
pub fn mae(records: &[PredictionRecord]) -> Result<MaeReport> {
    if records.is_empty() {
        return Err(Error::InvalidInput("mae over an empty record set".into()));
    }
    let total: f64 = records.iter().map(|r| r.abs_error()).sum();
    Ok(MaeReport {
        value: total / records.len() as f64,
        n_predictions: records.len(),
        n_fallback: records.iter().filter(|r| r.fallback).count(),
    })
}

/// Kendall's tau between the actual and predicted orderings of the same
/// films. Both rankings order by descending vote, breaking ties by ascending
/// movie id; tau = 1 - 4*N_D / (n(n-1)) where N_D counts discordant pairs.
pub fn kendall_tau(pairs: &[(MovieId, f64, f64)]) -> Result<f64> {
    let n = pairs.len();
    if n < 2 {
        return Err(Error::InsufficientOverlaps(n));
    }
    let ranking = |value_of: fn(&(MovieId, f64, f64)) -> f64| {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            value_of(&pairs[b])
                .partial_cmp(&value_of(&pairs[a]))
                .expect("votes are finite")
                .then(pairs[a].0.cmp(&pairs[b].0))
        });
        order
    };
    let by_actual = ranking(|p| p.1);
    let by_predicted = ranking(|p| p.2);

    let mut predicted_rank = vec![0usize; n];
    for (rank, &idx) in by_predicted.iter().enumerate() {
        predicted_rank[idx] = rank;
    }
    // predicted rank of the film holding each actual rank, best first
    let sequence: Vec<usize> = by_actual.iter().map(|&idx| predicted_rank[idx]).collect();
    let mut discordant = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            if sequence[i] > sequence[j] {
                discordant += 1;
            }
        }
    }
    Ok(1.0 - 4.0 * discordant as f64 / (n * (n - 1)) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// Pairs with a non-zero difference; zero differences are dropped.
    pub n_effective: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Two-sided p; absent until filled in (requires n_effective >= 6).
    pub p_two_sided: Option<f64>,
}

/// Signed ranks for paired samples: differences a - b, zeros dropped,
/// |d| ranked ascending with mid-ranks for ties.
pub fn wilcoxon_ranks(paired: &[(f64, f64)]) -> Result<WilcoxonResult> {
    if paired.is_empty() {
        return Err(Error::InvalidInput(
            "wilcoxon over an empty paired sample".into(),
        ));
    }
    let mut diffs: Vec<f64> = paired
        .iter()
        .map(|&(a, b)| a - b)
        .filter(|&d| d != 0.0)
        .collect();
    if diffs.is_empty() {
        return Err(Error::AllDifferencesZero);
    }
    diffs.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).expect("finite differences"));
    let n = diffs.len();
    let mut w_plus = 0.0;
    let mut w_minus = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j < n && diffs[j].abs() == diffs[i].abs() {
            j += 1;
        }
        // positions i+1 ..= j share the mid-rank
        let mid_rank = (i + 1 + j) as f64 / 2.0;
        for &d in &diffs[i..j] {
            if d > 0.0 {
                w_plus += mid_rank;
            } else {
                w_minus += mid_rank;
            }
        }
        i = j;
    }
    Ok(WilcoxonResult {
        n_effective: n,
        w_plus,
        w_minus,
        p_two_sided: None,
    })
}

/// Two-sided p for a signed-rank sum via the normal approximation with
/// continuity correction. Requires n_effective >= 6; smaller samples need
/// exact enumeration, which is out of scope here.
pub fn wilcoxon_p(n_effective: usize, w: f64) -> Result<f64> {
    if n_effective < 6 {
        return Err(Error::InvalidInput(format!(
            "normal approximation needs n >= 6 (got {n_effective}); use exact enumeration"
        )));
    }
    let n = n_effective as f64;
    let mu = n * (n + 1.0) / 4.0;
    let sigma = (n * (n + 1.0) * (2.0 * n + 1.0) / 24.0).sqrt();
    let gap = mu - w;
    let correction = if gap > 0.0 {
        0.5
    } else if gap < 0.0 {
        -0.5
    } else {
        0.0
    };
    let z = (w + correction - mu) / sigma;
    Ok((2.0 * std_normal_cdf(-z.abs())).min(1.0))
}

/// Ranks plus p-value in one call; p stays absent when the sample is too
/// small for the approximation.
pub fn wilcoxon_test(paired: &[(f64, f64)]) -> Result<WilcoxonResult> {
    let mut result = wilcoxon_ranks(paired)?;
    if result.n_effective >= 6 {
        result.p_two_sided = Some(wilcoxon_p(result.n_effective, result.w_plus)?);
    }
    Ok(result)
}

/// Per-run aggregate of the evaluation statistics. Standard deviations are
/// population deviations (zero for a single record).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub n_records: usize,
    pub n_fallback: usize,
    pub mae: f64,
    pub mae_std: f64,
    pub tau_mean: Option<f64>,
    pub tau_std: Option<f64>,
    pub tau_count: usize,
    pub recommendations_mean: f64,
    pub recommendations_std: f64,
    pub overlap_mean: f64,
    pub overlap_std: f64,
    pub reviewers_mean: f64,
    pub reviewers_std: f64,
    pub neighbors_mean: f64,
    pub neighbors_std: f64,
}

pub(crate) fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / values.len() as f64;
    (mean, var.sqrt())
}

pub fn summarize(records: &[PredictionRecord]) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::InvalidInput(
            "summary over an empty record set".into(),
        ));
    }
    let errors: Vec<f64> = records.iter().map(|r| r.abs_error()).collect();
    let taus: Vec<f64> = records.iter().filter_map(|r| r.tau).collect();
    let recs: Vec<f64> = records.iter().map(|r| r.n_recommendations as f64).collect();
    let overlaps: Vec<f64> = records.iter().map(|r| r.overlap_count as f64).collect();
    let reviewers: Vec<f64> = records.iter().map(|r| r.reviewers_seen as f64).collect();
    let neighbors: Vec<f64> = records
        .iter()
        .map(|r| r.neighborhood_size as f64)
        .collect();

    let (mae, mae_std) = mean_std(&errors);
    let (tau_mean, tau_std) = if taus.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&taus);
        (Some(m), Some(s))
    };
    let (recommendations_mean, recommendations_std) = mean_std(&recs);
    let (overlap_mean, overlap_std) = mean_std(&overlaps);
    let (reviewers_mean, reviewers_std) = mean_std(&reviewers);
    let (neighbors_mean, neighbors_std) = mean_std(&neighbors);
    Ok(Summary {
        n_records: records.len(),
        n_fallback: records.iter().filter(|r| r.fallback).count(),
        mae,
        mae_std,
        tau_mean,
        tau_std,
        tau_count: taus.len(),
        recommendations_mean,
        recommendations_std,
        overlap_mean,
        overlap_std,
        reviewers_mean,
        reviewers_std,
        neighbors_mean,
        neighbors_std,
    })
}

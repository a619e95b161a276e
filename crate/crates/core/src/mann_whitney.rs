//! Mann-Whitney U test with an exact small-sample distribution and a
//! tie-corrected normal approximation.

use crate::normal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MannWhitneyError {
    #[error("both samples must be non-empty")]
    EmptySample,
    #[error("exact method requires tie-free data")]
    TiesInExact,
}

/// Test direction. `Greater` means the x sample tends to exceed y.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    TwoSided,
    Less,
    Greater,
}

/// How the p-value is computed. `Auto` picks `Exact` for tie-free samples
/// with `n_x + n_y <= 20`, otherwise the normal approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMethod {
    Auto,
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MannWhitneyResult {
    /// U statistic of the x sample (midranks under ties).
    pub u: f64,
    pub n_x: usize,
    pub n_y: usize,
    pub method: MwMethodUsed,
    pub p_value: f64,
    pub alternative: Alternative,
}

/// Method actually used after `Auto` resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MwMethodUsed {
    Exact,
    NormalApprox,
}

impl MannWhitneyResult {
    /// U statistic of the y sample; `u + u_y() == n_x * n_y`.
    pub fn u_y(&self) -> f64 {
        (self.n_x * self.n_y) as f64 - self.u
    }
}

const EXACT_SIZE_LIMIT: usize = 20;

/// Mann-Whitney U with automatic method selection.
pub fn mann_whitney_u(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
) -> Result<MannWhitneyResult, MannWhitneyError> {
    mann_whitney_u_with(x, y, alternative, MwMethod::Auto)
}

/// Mann-Whitney U with an explicit method. Forcing `Exact` on tied data
/// is an error; `Auto` falls back to the normal approximation instead.
pub fn mann_whitney_u_with(
    x: &[f64],
    y: &[f64],
    alternative: Alternative,
    method: MwMethod,
) -> Result<MannWhitneyResult, MannWhitneyError> {
    if x.is_empty() || y.is_empty() {
        return Err(MannWhitneyError::EmptySample);
    }
    let (u_x, tie_term, has_ties) = u_statistic(x, y);
    let n_x = x.len();
    let n_y = y.len();

    let use_exact = match method {
        MwMethod::Exact => {
            if has_ties {
                return Err(MannWhitneyError::TiesInExact);
            }
            true
        }
        MwMethod::NormalApprox => false,
        MwMethod::Auto => !has_ties && n_x + n_y <= EXACT_SIZE_LIMIT,
    };

    let p_value = if use_exact {
        // Tie-free U statistics are integers.
        exact_p(u_x.round() as u64, n_x, n_y, alternative)
    } else {
        normal_p(u_x, n_x, n_y, tie_term, alternative)
    };

    Ok(MannWhitneyResult {
        u: u_x,
        n_x,
        n_y,
        method: if use_exact {
            MwMethodUsed::Exact
        } else {
            MwMethodUsed::NormalApprox
        },
        p_value,
        alternative,
    })
}

/// Midrank U statistic of x, the tie-correction term Σ(t³ − t), and a tie flag.
fn u_statistic(x: &[f64], y: &[f64]) -> (f64, f64, bool) {
    let mut pooled: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite sample values"));

    let mut rank_sum_x = 0.0;
    let mut tie_term = 0.0;
    let mut has_ties = false;
    let mut i = 0;
    while i < pooled.len() {
        let mut j = i + 1;
        while j < pooled.len() && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        let t = (j - i) as f64;
        if t > 1.0 {
            has_ties = true;
            tie_term += t * t * t - t;
        }
        let midrank = (i + j + 1) as f64 / 2.0; // ranks are 1-based
        for entry in &pooled[i..j] {
            if entry.1 {
                rank_sum_x += midrank;
            }
        }
        i = j;
    }
    let n_x = x.len() as f64;
    let u_x = rank_sum_x - n_x * (n_x + 1.0) / 2.0;
    (u_x, tie_term, has_ties)
}

/// Null distribution of U as counts over 0..=n*m, by the standard recursion
/// f(n, m, u) = f(n-1, m, u-m) + f(n, m-1, u).
fn exact_distribution(n: usize, m: usize) -> Vec<f64> {
    let max_u = n * m;
    // table[k] holds the distribution for (k raters of x) against m_cur of y,
    // built up incrementally over m.
    let mut table = vec![vec![0.0f64; max_u + 1]; n + 1];
    table[0][0] = 1.0;
    for n_cur in 1..=n {
        table[n_cur][0] = 1.0;
    }
    for m_cur in 1..=m {
        for n_cur in 1..=n {
            // Row n_cur - 1 is already at m_cur; this row still holds
            // f(n_cur, m_cur - 1, u), so the add realizes the recursion.
            let (lower, upper) = table.split_at_mut(n_cur);
            let prev = &lower[n_cur - 1];
            let cur = &mut upper[0];
            for u in m_cur..=n_cur * m_cur {
                cur[u] += prev[u - m_cur];
            }
        }
    }
    table.pop().expect("n+1 rows")
}

fn exact_p(u: u64, n_x: usize, n_y: usize, alternative: Alternative) -> f64 {
    let dist = exact_distribution(n_x, n_y);
    let total: f64 = dist.iter().sum();
    let u = u as usize;
    let p_le: f64 = dist[..=u.min(dist.len() - 1)].iter().sum::<f64>() / total;
    let p_ge: f64 = dist[u.min(dist.len() - 1)..].iter().sum::<f64>() / total;
    match alternative {
        Alternative::Less => p_le.min(1.0),
        Alternative::Greater => p_ge.min(1.0),
        Alternative::TwoSided => (2.0 * p_le.min(p_ge)).min(1.0),
    }
}

/// Normal approximation with tie-corrected variance and continuity correction.
fn normal_p(u: f64, n_x: usize, n_y: usize, tie_term: f64, alternative: Alternative) -> f64 {
    let nx = n_x as f64;
    let ny = n_y as f64;
    let n = nx + ny;
    let mean = nx * ny / 2.0;
    let variance = (nx * ny / 12.0) * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    if variance <= 0.0 {
        // Every pooled value identical: no ordering evidence either way.
        return 1.0;
    }
    let sd = variance.sqrt();
    let p_greater = normal::sf((u - 0.5 - mean) / sd);
    let p_less = normal::cdf((u + 0.5 - mean) / sd);
    match alternative {
        Alternative::Greater => p_greater.min(1.0),
        Alternative::Less => p_less.min(1.0),
        Alternative::TwoSided => (2.0 * p_greater.min(p_less)).min(1.0),
    }
}

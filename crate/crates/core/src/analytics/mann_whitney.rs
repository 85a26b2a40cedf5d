//! Two-sided Mann-Whitney U test.

use std::cmp::Ordering;

use serde::Serialize;

use super::AnalyticsError;

/// Largest combined sample size accepted by the exact distribution.
pub const EXACT_MAX_TOTAL: usize = 64;
/// Both samples at or below this size use the exact distribution in auto mode.
pub const EXACT_AUTO_MAX: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum UMethod {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum UMode {
    #[default]
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UTestResult {
    /// U of the first sample.
    pub u_statistic: f64,
    pub p_value: f64,
    pub method: UMethod,
}

/// Midranks of the pooled sample, doubled so ties stay integral.
fn doubled_midranks(pooled: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].partial_cmp(&pooled[j]).unwrap_or(Ordering::Equal));
    let mut ranks = vec![0u64; pooled.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        // Ranks i+1..=j+1 average to (i+j+2)/2.
        let r2 = (i + j + 2) as u64;
        for &k in &order[i..=j] {
            ranks[k] = r2;
        }
        ties.push(j - i + 1);
        i = j + 1;
    }
    (ranks, ties)
}

pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<UTestResult, AnalyticsError> {
    mann_whitney_u_with(a, b, UMode::Auto)
}

pub fn mann_whitney_u_with(
    a: &[f64],
    b: &[f64],
    mode: UMode,
) -> Result<UTestResult, AnalyticsError> {
    if a.is_empty() || b.is_empty() {
        return Err(AnalyticsError::EmptySample);
    }
    if a.iter().chain(b).any(|x| x.is_nan()) {
        return Err(AnalyticsError::InsufficientData(
            "sample contains NaN".into(),
        ));
    }
    let (n1, n2) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = doubled_midranks(&pooled);
    let s_obs: u64 = ranks[..n1].iter().sum();
    let u = s_obs as f64 / 2.0 - (n1 * (n1 + 1)) as f64 / 2.0;

    let exact = match mode {
        UMode::Exact => true,
        UMode::Normal => false,
        UMode::Auto => n1 <= EXACT_AUTO_MAX && n2 <= EXACT_AUTO_MAX,
    };
    if exact {
        if n1 + n2 > EXACT_MAX_TOTAL {
            return Err(AnalyticsError::TooLarge {
                n: n1 + n2,
                max: EXACT_MAX_TOTAL,
            });
        }
        let p = exact_p(&ranks, n1, s_obs);
        return Ok(UTestResult {
            u_statistic: u,
            p_value: p,
            method: UMethod::Exact,
        });
    }

    let (f1, f2, n) = (n1 as f64, n2 as f64, (n1 + n2) as f64);
    let tie_term: f64 =
        ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (n * (n - 1.0)).max(1.0);
    let var = f1 * f2 / 12.0 * ((n + 1.0) - tie_term);
    let dev = (u - f1 * f2 / 2.0).abs();
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((dev - 0.5).max(0.0)) / var.sqrt();
        libm::erfc(z / std::f64::consts::SQRT_2).min(1.0)
    };
    Ok(UTestResult {
        u_statistic: u,
        p_value: p,
        method: UMethod::NormalApprox,
    })
}

/// Exact two-sided p under the permutation null, counting subsets of size
/// `n1` by their doubled rank sum.
fn exact_p(ranks: &[u64], n1: usize, s_obs: u64) -> f64 {
    let max_sum: usize = ranks.iter().sum::<u64>() as usize;
    // ways[k][s]: subsets of size k with doubled rank sum s.
    let mut ways = vec![vec![0f64; max_sum + 1]; n1 + 1];
    ways[0][0] = 1.0;
    for &r in ranks {
        let r = r as usize;
        for k in (1..=n1).rev() {
            let (lo, hi) = ways.split_at_mut(k);
            let (prev, cur) = (&lo[k - 1], &mut hi[0]);
            for s in (r..=max_sum).rev() {
                cur[s] += prev[s - r];
            }
        }
    }
    let n2 = ranks.len() - n1;
    // 2U - n1*n2 = S - n1(n1+1) - n1*n2, all integers.
    let offset = (n1 * (n1 + 1) + n1 * n2) as i64;
    let d_obs = (s_obs as i64 - offset).abs();
    let (mut hit, mut total) = (0.0, 0.0);
    for (s, &w) in ways[n1].iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        total += w;
        if (s as i64 - offset).abs() >= d_obs {
            hit += w;
        }
    }
    (hit / total).min(1.0)
}

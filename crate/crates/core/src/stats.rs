//! Friedman rank test, Conover post-hoc comparisons and rank summaries.
//!
//! Matrices are given as costs (lower is better); callers convert objectives
//! with [`ObjectiveSense::cost`].

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};

use crate::error::{Error, Result};
use crate::missions::ObjectiveSense;

/// Ranks in ascending order, 1 = lowest; ties share the mean rank.
pub fn rank_with_ties(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mean = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = mean;
        }
        i = j + 1;
    }
    ranks
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanTest {
    pub n_blocks: usize,
    pub n_treatments: usize,
    /// Tie-corrected Friedman statistic, chi-square distributed with k-1
    /// degrees of freedom under the null hypothesis.
    pub statistic: f64,
    pub p_value: f64,
    pub rank_sums: Vec<f64>,
    /// Sum of all squared within-block ranks.
    pub sum_sq_ranks: f64,
}

impl FriedmanTest {
    pub fn mean_ranks(&self) -> Vec<f64> {
        self.rank_sums.iter().map(|r| r / self.n_blocks as f64).collect()
    }

    /// Conover's critical difference between two rank sums at level `alpha`.
    pub fn critical_difference(&self, alpha: f64) -> f64 {
        let n = self.n_blocks as f64;
        let k = self.n_treatments as f64;
        let dof = (n - 1.0) * (k - 1.0);
        if dof <= 0.0 {
            return f64::INFINITY;
        }
        let sum_r2: f64 = self.rank_sums.iter().map(|r| r * r).sum();
        let spread = (2.0 * (n * self.sum_sq_ranks - sum_r2) / dof).max(0.0);
        let t = StudentsT::new(0.0, 1.0, dof)
            .expect("positive degrees of freedom")
            .inverse_cdf(1.0 - alpha / 2.0);
        t * spread.sqrt()
    }
}

/// Friedman test on a blocks × treatments cost matrix.
pub fn friedman_test(blocks: &[Vec<f64>]) -> Result<FriedmanTest> {
    let n = blocks.len();
    let k = blocks.first().map_or(0, Vec::len);
    if n == 0 || k < 2 {
        return Err(Error::Precondition(format!(
            "friedman test needs at least one block and two treatments (got {n} x {k})"
        )));
    }
    if blocks.iter().any(|b| b.len() != k) {
        return Err(Error::InvalidInput("ragged score matrix".into()));
    }
    if blocks.iter().flatten().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN score".into()));
    }
    let mut rank_sums = vec![0.0; k];
    let mut sum_sq = 0.0;
    for b in blocks {
        for (j, r) in rank_with_ties(b).into_iter().enumerate() {
            rank_sums[j] += r;
            sum_sq += r * r;
        }
    }
    let nf = n as f64;
    let kf = k as f64;
    let c = nf * kf * (kf + 1.0) * (kf + 1.0) / 4.0;
    let expected = nf * (kf + 1.0) / 2.0;
    let dev: f64 = rank_sums.iter().map(|r| (r - expected).powi(2)).sum();
    let denom = sum_sq - c;
    let (statistic, p_value) = if denom <= 1e-12 * c.max(1.0) {
        (0.0, 1.0)
    } else {
        let t = (kf - 1.0) * dev / denom;
        let chi = ChiSquared::new(kf - 1.0).expect("positive dof");
        (t, 1.0 - chi.cdf(t))
    };
    Ok(FriedmanTest {
        n_blocks: n,
        n_treatments: k,
        statistic,
        p_value,
        rank_sums,
        sum_sq_ranks: sum_sq,
    })
}

/// Transposes a candidates × instances score matrix into instance blocks of
/// costs.
fn cost_blocks(scores: &[Vec<f64>], sense: ObjectiveSense) -> Result<Vec<Vec<f64>>> {
    let n = scores.first().map_or(0, Vec::len);
    if scores.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidInput("ragged score matrix".into()));
    }
    Ok((0..n)
        .map(|i| scores.iter().map(|row| sense.cost(row[i])).collect())
        .collect())
}

/// One racing step: candidates whose rank sum exceeds the best one by more
/// than the post-hoc critical difference are dropped, provided the Friedman
/// test rejects at `alpha`. Returns the surviving candidate indices in
/// ascending order; the rank-best candidate always survives.
pub fn friedman_eliminate(scores: &[Vec<f64>], alpha: f64, sense: ObjectiveSense) -> Result<Vec<usize>> {
    let k = scores.len();
    let n = scores.first().map_or(0, Vec::len);
    if k < 2 || n < 2 {
        return Err(Error::Precondition(format!(
            "elimination needs at least 2 candidates and 2 instances (got {k} x {n})"
        )));
    }
    let test = friedman_test(&cost_blocks(scores, sense)?)?;
    if !(test.p_value < alpha) {
        return Ok((0..k).collect());
    }
    let best = test
        .rank_sums
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let cd = test.critical_difference(alpha);
    Ok((0..k)
        .filter(|&j| test.rank_sums[j] - best <= cd)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodRank {
    pub method: String,
    pub mean_rank: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankSummary {
    pub n_blocks: usize,
    pub alpha: f64,
    pub statistic: f64,
    pub p_value: f64,
    /// Half-width of every confidence interval.
    pub half_width: f64,
    pub methods: Vec<MethodRank>,
    /// Pairs of method indices whose intervals do not overlap.
    pub significant_pairs: Vec<(usize, usize)>,
}

impl RankSummary {
    pub fn get(&self, method: &str) -> Option<&MethodRank> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn disjoint(&self, a: &str, b: &str) -> bool {
        match (self.get(a), self.get(b)) {
            (Some(x), Some(y)) => x.ci_high < y.ci_low || y.ci_high < x.ci_low,
            _ => false,
        }
    }
}

/// Half-width of the mean-rank confidence intervals for `k` methods over `n`
/// blocks.
///
/// Under the null hypothesis a difference of two mean ranks has standard
/// error `sqrt(k(k+1) / 6n)`; each interval gets half the two-sided normal
/// critical difference, so two intervals are disjoint exactly when the
/// pairwise difference is significant at `alpha`.
pub fn rank_ci_half_width(k: usize, n: usize, alpha: f64) -> f64 {
    let z = Normal::standard().inverse_cdf(1.0 - alpha / 2.0);
    let (k, n) = (k as f64, n as f64);
    0.5 * z * (k * (k + 1.0) / (6.0 * n)).sqrt()
}

/// Mean ranks with confidence intervals over a blocks × methods cost matrix.
pub fn rank_summary(blocks: &[Vec<f64>], methods: &[String], alpha: f64) -> Result<RankSummary> {
    if blocks.first().map_or(0, Vec::len) != methods.len() {
        return Err(Error::InvalidInput("method count does not match the score matrix".into()));
    }
    let test = friedman_test(blocks)?;
    let hw = rank_ci_half_width(methods.len(), blocks.len(), alpha);
    let ranks: Vec<MethodRank> = methods
        .iter()
        .zip(test.mean_ranks())
        .map(|(m, r)| MethodRank {
            method: m.clone(),
            mean_rank: r,
            ci_low: r - hw,
            ci_high: r + hw,
        })
        .collect();
    let mut significant = Vec::new();
    for i in 0..ranks.len() {
        for j in i + 1..ranks.len() {
            if ranks[i].ci_high < ranks[j].ci_low || ranks[j].ci_high < ranks[i].ci_low {
                significant.push((i, j));
            }
        }
    }
    Ok(RankSummary {
        n_blocks: blocks.len(),
        alpha,
        statistic: test.statistic,
        p_value: test.p_value,
        half_width: hw,
        methods: ranks,
        significant_pairs: significant,
    })
}

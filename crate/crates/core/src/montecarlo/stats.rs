//! Sample statistics over simulation outputs.
//!
//! Sums use Neumaier compensation so results do not drift with reduction
//! order. Variances and covariances use the `n - 1` denominator.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("statistic of an empty sample")]
    EmptySample,
    #[error("percentile {0} is outside [0, 100]")]
    InvalidPercentile(f64),
    #[error("histogram needs at least one bin")]
    NoBins,
}

/// Compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    compensation: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = NeumaierSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().collect::<NeumaierSum>().value()
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    sum(xs.iter().copied()) / xs.len() as f64
}

pub fn covariance(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let (mx, my) = (mean(xs), mean(ys));
    sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my))) / (n - 1) as f64
}

pub fn variance(xs: &[f64]) -> f64 {
    covariance(xs, xs).max(0.0)
}

pub fn std_dev(xs: &[f64]) -> f64 {
    variance(xs).sqrt()
}

/// Pearson correlation; 0 when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let (vx, vy) = (variance(xs), variance(ys));
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    (covariance(xs, ys) / (vx * vy).sqrt()).clamp(-1.0, 1.0)
}

/// Ranks starting at 1, ties receiving their average rank.
pub fn average_ranks(xs: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..xs.len()).collect();
    order.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut ranks = vec![0.0; xs.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && xs[order[j + 1]] == xs[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    pearson(&average_ranks(xs), &average_ranks(ys))
}

pub fn sorted(xs: &[f64]) -> Vec<f64> {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Linear-interpolation quantile: rank `p / 100 * (n - 1)` between
/// adjacent order statistics.
pub fn empirical_percentile(samples: &[f64], p: f64) -> Result<f64, StatsError> {
    percentile_of_sorted(&sorted(samples), p)
}

/// As [`empirical_percentile`] on data already sorted ascending.
pub fn percentile_of_sorted(sorted: &[f64], p: f64) -> Result<f64, StatsError> {
    if sorted.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if !(0.0..=100.0).contains(&p) {
        return Err(StatsError::InvalidPercentile(p));
    }
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        return Ok(sorted[lo]);
    }
    let w = rank - lo as f64;
    Ok(sorted[lo] + w * (sorted[hi] - sorted[lo]))
}

/// Mid-rank position of `x` in the sample, as a percentage:
/// `100 * (#below + #equal / 2) / n`.
pub fn percentile_rank(samples: &[f64], x: f64) -> Result<f64, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let below = samples.iter().filter(|&&s| s < x).count();
    let equal = samples.iter().filter(|&&s| s == x).count();
    Ok(100.0 * (below as f64 + 0.5 * equal as f64) / samples.len() as f64)
}

/// Equal-width histogram over `[min, max]` with its cumulative curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    /// `bins + 1` edges.
    pub edges: Vec<f64>,
    /// Probability mass per bin; sums to 1.
    pub pdf: Vec<f64>,
    /// Cumulative mass at each bin's right edge; last entry is exactly 1.
    pub cdf: Vec<f64>,
}

impl Histogram {
    pub fn bins(&self) -> usize {
        self.pdf.len()
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }
}

pub fn histogram_and_cdf(samples: &[f64], bins: usize) -> Result<Histogram, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySample);
    }
    if bins == 0 {
        return Err(StatsError::NoBins);
    }
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| {
            (a.min(x), b.max(x))
        });
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in samples {
        let k = if width > 0.0 {
            (((x - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[k] += 1;
    }
    let n = samples.len() as f64;
    let pdf: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    let mut running = 0usize;
    let mut cdf: Vec<f64> = counts
        .iter()
        .map(|&c| {
            running += c;
            running as f64 / n
        })
        .collect();
    *cdf.last_mut().unwrap() = 1.0;
    let edges = (0..=bins)
        .map(|k| if k == bins { hi } else { lo + width * k as f64 })
        .collect();
    Ok(Histogram { edges, pdf, cdf })
}

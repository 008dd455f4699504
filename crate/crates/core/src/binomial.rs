//! Binomial weight vectors evaluated in log space.
//!
//! Log-weights are accumulated from the mode outward with the ratio
//! recurrence and normalized at the end, so the vector sums to one to
//! rounding for any `m` (tested up to 10^6).

/// `probs[i]` is `P(X = start + i)` for `X ~ Binomial(m, p)`.
#[derive(Clone, Debug, PartialEq)]
pub struct BinomialWeights {
    pub start: usize,
    pub probs: Vec<f64>,
}

impl BinomialWeights {
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(move |(i, &w)| (self.start + i, w))
    }

    /// `P(X = j)`, zero outside the stored window.
    pub fn prob(&self, j: usize) -> f64 {
        j.checked_sub(self.start)
            .and_then(|i| self.probs.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Full weight vector over `0..=m`.
pub fn binomial_weights(m: usize, p: f64) -> BinomialWeights {
    weights_in_window(m, p, None)
}

/// Weight vector restricted to `mean ± (sigmas * sd + 30)`.
pub fn binomial_weights_truncated(m: usize, p: f64, sigmas: f64) -> BinomialWeights {
    weights_in_window(m, p, Some(sigmas))
}

fn weights_in_window(m: usize, p: f64, sigmas: Option<f64>) -> BinomialWeights {
    assert!((0.0..=1.0).contains(&p), "binomial probability {p} outside [0, 1]");
    if p == 0.0 {
        return BinomialWeights { start: 0, probs: vec![1.0] };
    }
    if p == 1.0 {
        return BinomialWeights { start: m, probs: vec![1.0] };
    }
    let q = 1.0 - p;
    let mode = (((m + 1) as f64) * p).floor().min(m as f64) as usize;
    let (lo, hi) = match sigmas {
        None => (0, m),
        Some(s) => {
            let mean = m as f64 * p;
            let half = s * (m as f64 * p * q).sqrt() + 30.0;
            let lo = (mean - half).floor().max(0.0) as usize;
            let hi = ((mean + half).ceil() as usize).min(m);
            (lo.min(mode), hi.max(mode))
        }
    };
    let odds = (p / q).ln();
    let len = hi - lo + 1;
    let mut logw = vec![0.0f64; len];
    // Ratio recurrence: w(j+1)/w(j) = (m-j)/(j+1) * p/q.
    for j in mode..hi {
        let i = j - lo;
        logw[i + 1] = logw[i] + (((m - j) as f64) / ((j + 1) as f64)).ln() + odds;
    }
    for j in (lo + 1..=mode).rev() {
        let i = j - lo;
        logw[i - 1] = logw[i] - (((m - j + 1) as f64) / (j as f64)).ln() - odds;
    }
    let mut probs: Vec<f64> = logw.iter().map(|&l| l.exp()).collect();
    let total: f64 = probs.iter().sum();
    for w in &mut probs {
        *w /= total;
    }
    BinomialWeights { start: lo, probs }
}

//! Small statistics helpers.

/// Normal-approximation 95% half-width of a binomial proportion.
pub fn binomial_ci95(p: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    1.96 * (p * (1.0 - p) / n as f64).sqrt()
}

/// One stratum of a stratified proportion estimate.
#[derive(Clone, Copy, Debug)]
pub struct Stratum {
    /// Size of the stratum's population.
    pub weight: f64,
    pub successes: usize,
    pub sampled: usize,
    /// The sample is the whole stratum, so it contributes no variance.
    pub census: bool,
}

/// Stratified estimate of the overall proportion and its 95% half-width.
pub fn stratified(strata: &[Stratum]) -> (f64, f64) {
    let total: f64 = strata.iter().filter(|s| s.sampled > 0).map(|s| s.weight).sum();
    if total <= 0.0 {
        return (0.0, 0.0);
    }
    let mut p = 0.0;
    let mut var = 0.0;
    for s in strata.iter().filter(|s| s.sampled > 0) {
        let w = s.weight / total;
        let pk = s.successes as f64 / s.sampled as f64;
        p += w * pk;
        if !s.census {
            var += w * w * pk * (1.0 - pk) / s.sampled as f64;
        }
    }
    (p, 1.96 * var.sqrt())
}

/// Pearson correlation; `None` when either series has zero variance or the
/// lengths differ.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

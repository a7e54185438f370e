use rand::Rng;
use rand_distr::{Distribution, Exp, LogNormal};
use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use super::time::Micros;
use super::SimError;

/// Standard normal quantile at 0.99.
const Z_99: f64 = 2.326_347_874_040_841;

/// Parameterized service-time (or delay) distribution. All parameters are in
/// milliseconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistSpec {
    Deterministic { value_ms: f64 },
    Exponential { mean_ms: f64 },
    /// Lognormal fitted so that its median and 99th percentile hit the given
    /// values.
    Lognormal { p50_ms: f64, p99_ms: f64 },
    /// Empirical table; sampled by inverse-CDF interpolation over the sorted
    /// values.
    Empirical { values_ms: Vec<f64> },
}

impl DistSpec {
    pub fn deterministic_ms(value_ms: f64) -> Self {
        DistSpec::Deterministic { value_ms }
    }

    pub fn exponential_ms(mean_ms: f64) -> Self {
        DistSpec::Exponential { mean_ms }
    }

    pub fn lognormal_ms(p50_ms: f64, p99_ms: f64) -> Self {
        DistSpec::Lognormal { p50_ms, p99_ms }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |what: &str| Err(SimError::InvalidDistribution(format!("{what}: {self:?}")));
        match self {
            DistSpec::Deterministic { value_ms } => {
                if !(value_ms.is_finite() && *value_ms >= 0.0) {
                    return bad("value must be finite and nonnegative");
                }
            }
            DistSpec::Exponential { mean_ms } => {
                if !(mean_ms.is_finite() && *mean_ms > 0.0) {
                    return bad("mean must be positive");
                }
            }
            DistSpec::Lognormal { p50_ms, p99_ms } => {
                if !(p50_ms.is_finite() && *p50_ms > 0.0 && p99_ms.is_finite()) {
                    return bad("p50 must be positive");
                }
                if p99_ms < p50_ms {
                    return bad("p99 must be at least p50");
                }
            }
            DistSpec::Empirical { values_ms } => {
                if values_ms.is_empty() || values_ms.iter().any(|v| !v.is_finite() || *v < 0.0) {
                    return bad("table must be nonempty with nonnegative entries");
                }
            }
        }
        Ok(())
    }

    /// Mean in milliseconds (analytic where available).
    pub fn mean_ms(&self) -> f64 {
        match self {
            DistSpec::Deterministic { value_ms } => *value_ms,
            DistSpec::Exponential { mean_ms } => *mean_ms,
            DistSpec::Lognormal { p50_ms, p99_ms } => {
                let (mu, sigma) = lognormal_params(*p50_ms, *p99_ms);
                (mu + sigma * sigma / 2.0).exp()
            }
            DistSpec::Empirical { values_ms } => values_ms.iter().sum::<f64>() / values_ms.len() as f64,
        }
    }

    /// Returns a copy with every time parameter multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> DistSpec {
        match self {
            DistSpec::Deterministic { value_ms } => DistSpec::Deterministic { value_ms: value_ms * factor },
            DistSpec::Exponential { mean_ms } => DistSpec::Exponential { mean_ms: mean_ms * factor },
            DistSpec::Lognormal { p50_ms, p99_ms } => DistSpec::Lognormal {
                p50_ms: p50_ms * factor,
                p99_ms: p99_ms * factor,
            },
            DistSpec::Empirical { values_ms } => DistSpec::Empirical {
                values_ms: values_ms.iter().map(|v| v * factor).collect(),
            },
        }
    }

    /// Draws one value in milliseconds.
    pub fn sample_ms(&self, stream: &mut RngStream) -> Result<f64, SimError> {
        self.validate()?;
        let rng = stream.rng();
        let v = match self {
            DistSpec::Deterministic { value_ms } => *value_ms,
            DistSpec::Exponential { mean_ms } => {
                let exp = Exp::new(1.0 / mean_ms).map_err(|e| SimError::InvalidDistribution(e.to_string()))?;
                exp.sample(rng)
            }
            DistSpec::Lognormal { p50_ms, p99_ms } => {
                let (mu, sigma) = lognormal_params(*p50_ms, *p99_ms);
                if sigma == 0.0 {
                    *p50_ms
                } else {
                    let ln = LogNormal::new(mu, sigma).map_err(|e| SimError::InvalidDistribution(e.to_string()))?;
                    ln.sample(rng)
                }
            }
            DistSpec::Empirical { values_ms } => {
                let mut sorted = values_ms.clone();
                sorted.sort_by(|a, b| a.total_cmp(b));
                if sorted.len() == 1 {
                    sorted[0]
                } else {
                    let u: f64 = rng.random::<f64>() * (sorted.len() - 1) as f64;
                    let lo = u.floor() as usize;
                    let hi = (lo + 1).min(sorted.len() - 1);
                    let frac = u - lo as f64;
                    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
                }
            }
        };
        Ok(v.max(0.0))
    }
}

/// `(mu, sigma)` of the underlying normal for a lognormal with the given
/// median and 99th percentile.
pub fn lognormal_params(p50: f64, p99: f64) -> (f64, f64) {
    let mu = p50.ln();
    let sigma = (p99.ln() - mu) / Z_99;
    (mu, sigma.max(0.0))
}

/// Draws a duration from `dist`, rounded to integer microseconds.
pub fn sample(dist: &DistSpec, stream: &mut RngStream) -> Result<Micros, SimError> {
    let ms = dist.sample_ms(stream)?;
    Ok((ms * 1_000.0).round() as Micros)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quantile(sorted: &[f64], q: f64) -> f64 {
        let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
        sorted[idx]
    }

    #[test]
    fn deterministic_is_constant() {
        let mut s = RngStream::new(1, 1);
        for _ in 0..100 {
            assert_eq!(sample(&DistSpec::deterministic_ms(5.0), &mut s).unwrap(), 5_000);
        }
    }

    #[test]
    fn exponential_mean_within_one_percent() {
        let mut s = RngStream::new(3, 9);
        let d = DistSpec::exponential_ms(10.0);
        let n = 1_000_000;
        let total: u64 = (0..n).map(|_| sample(&d, &mut s).unwrap()).sum();
        let mean_ms = total as f64 / n as f64 / 1_000.0;
        assert!((mean_ms - 10.0).abs() / 10.0 < 0.01, "mean {mean_ms}");
    }

    #[test]
    fn lognormal_quantiles_within_five_percent() {
        let mut s = RngStream::new(11, 4);
        let d = DistSpec::lognormal_ms(100.0, 1_000.0);
        let mut xs: Vec<f64> = (0..1_000_000).map(|_| d.sample_ms(&mut s).unwrap()).collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        let p50 = quantile(&xs, 0.50);
        let p99 = quantile(&xs, 0.99);
        assert!((p50 - 100.0).abs() / 100.0 < 0.05, "p50 {p50}");
        assert!((p99 - 1_000.0).abs() / 1_000.0 < 0.05, "p99 {p99}");
    }

    #[test]
    fn nonpositive_parameters_rejected() {
        let mut s = RngStream::new(1, 1);
        assert!(matches!(
            sample(&DistSpec::exponential_ms(0.0), &mut s),
            Err(SimError::InvalidDistribution(_))
        ));
        assert!(sample(&DistSpec::lognormal_ms(-1.0, 10.0), &mut s).is_err());
        assert!(sample(&DistSpec::lognormal_ms(10.0, 5.0), &mut s).is_err());
        assert!(sample(&DistSpec::Empirical { values_ms: vec![] }, &mut s).is_err());
    }

    #[test]
    fn empirical_stays_within_table_range() {
        let mut s = RngStream::new(5, 5);
        let d = DistSpec::Empirical { values_ms: vec![3.0, 1.0, 2.0] };
        for _ in 0..1000 {
            let v = d.sample_ms(&mut s).unwrap();
            assert!((1.0..=3.0).contains(&v));
        }
    }
}

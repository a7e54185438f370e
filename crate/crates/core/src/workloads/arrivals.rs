use rand_distr::{Distribution, Exp};

use super::profile::ArrivalPattern;
use crate::simkernel::{secs, stream_id_for, RngStream, SimTime};

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Arrival {
    pub at: SimTime,
    pub device: usize,
}

/// Deterministic arrival schedule over `[0, horizon_s)`, sorted by time then
/// device. Per-frame arrivals follow the frame cadence; batches arrive once
/// per batch window.
pub fn generate_arrivals(pattern: &ArrivalPattern, fps: f64, devices: usize, horizon_s: f64, seed: u64) -> Vec<Arrival> {
    let mut out = Vec::new();
    if horizon_s <= 0.0 {
        return out;
    }
    let horizon = secs(horizon_s);
    for device in 0..devices {
        match pattern {
            ArrivalPattern::PerFrame => periodic(&mut out, device, 1.0 / fps, horizon),
            ArrivalPattern::PerBatch { seconds } => periodic(&mut out, device, *seconds, horizon),
            ArrivalPattern::Periodic { period_s } => periodic(&mut out, device, *period_s, horizon),
            ArrivalPattern::Poisson { mean_gap_s } => {
                let mut rng = RngStream::new(seed, stream_id_for(&format!("arrivals.{device}")));
                let exp = Exp::new(1.0 / mean_gap_s).expect("positive mean gap");
                let mut t = 0.0;
                loop {
                    t += exp.sample(rng.rng());
                    let at = secs(t);
                    if at >= horizon {
                        break;
                    }
                    out.push(Arrival { at: SimTime(at), device });
                }
            }
        }
    }
    out.sort();
    out
}

fn periodic(out: &mut Vec<Arrival>, device: usize, period_s: f64, horizon: u64) {
    let mut k: u64 = 0;
    loop {
        let at = secs(k as f64 * period_s);
        if at >= horizon {
            break;
        }
        out.push(Arrival { at: SimTime(at), device });
        k += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_frame_counts() {
        assert_eq!(generate_arrivals(&ArrivalPattern::PerFrame, 8.0, 1, 10.0, 1).len(), 80);
        assert!(generate_arrivals(&ArrivalPattern::PerFrame, 8.0, 4, 0.0, 1).is_empty());
    }

    #[test]
    fn batch_per_second() {
        let a = generate_arrivals(&ArrivalPattern::PerBatch { seconds: 1.0 }, 8.0, 16, 120.0, 1);
        assert_eq!(a.len(), 16 * 120);
    }

    #[test]
    fn poisson_is_seeded_and_has_the_right_rate() {
        let p = ArrivalPattern::Poisson { mean_gap_s: 5.0 };
        let a = generate_arrivals(&p, 8.0, 2, 10_000.0, 7);
        assert_eq!(a, generate_arrivals(&p, 8.0, 2, 10_000.0, 7));
        assert_ne!(a, generate_arrivals(&p, 8.0, 2, 10_000.0, 8));
        // 4000 expected arrivals; 5 sigma is about 316.
        assert!((a.len() as f64 - 4000.0).abs() < 316.0, "{}", a.len());
        assert!(a.windows(2).all(|w| w[0] <= w[1]));
    }
}

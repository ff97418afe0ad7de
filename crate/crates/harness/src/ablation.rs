//! Paired ablation of the bootstrap-on-step-cap target rule.

use std::fmt::Write as _;

use crate::config::ExperimentConfig;
use crate::plot::moving_average;
use crate::train::train;
use crate::HarnessError;

/// Episodes averaged for the final-window comparison.
pub const FINAL_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct AblationPair {
    pub seed: u64,
    /// Final-window mean return with bootstrapping at the step cap.
    pub adopted: f64,
    /// Same with `y = r` at the step cap.
    pub plain: f64,
    pub adopted_returns: Vec<f64>,
    pub plain_returns: Vec<f64>,
}

impl AblationPair {
    pub fn adopted_wins(&self) -> bool {
        self.adopted > self.plain
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AblationReport {
    pub pairs: Vec<AblationPair>,
}

impl AblationReport {
    pub fn wins(&self) -> usize {
        self.pairs.iter().filter(|p| p.adopted_wins()).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,adopted_final_mean,plain_final_mean,adopted_wins\n");
        for p in &self.pairs {
            let _ = writeln!(out, "{},{},{},{}", p.seed, p.adopted, p.plain, p.adopted_wins());
        }
        out
    }

    /// Per-episode returns of both arms with their 5-episode moving averages.
    pub fn curves_csv(&self) -> String {
        let mut out = String::from("seed,arm,episode,return,smoothed\n");
        for p in &self.pairs {
            for (arm, r) in [("adopted", &p.adopted_returns), ("plain", &p.plain_returns)] {
                let smooth = moving_average(r, crate::plot::SMOOTHING_WINDOW);
                for (i, (v, s)) in r.iter().zip(&smooth).enumerate() {
                    let _ = writeln!(out, "{},{arm},{i},{v},{s}", p.seed);
                }
            }
        }
        out
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for p in &self.pairs {
            let _ = writeln!(
                s,
                "seed {}: adopted {:.1} vs plain {:.1} -> {}",
                p.seed,
                p.adopted,
                p.plain,
                if p.adopted_wins() { "adopted" } else { "plain" }
            );
        }
        let _ = write!(s, "adopted rule ahead in {} of {} pairs", self.wins(), self.pairs.len());
        s
    }
}

/// Mean of the last `window` values (all of them when fewer).
pub fn final_window_mean(values: &[f64], window: usize) -> f64 {
    let tail = &values[values.len().saturating_sub(window.max(1))..];
    if tail.is_empty() {
        return f64::NAN;
    }
    tail.iter().sum::<f64>() / tail.len() as f64
}

/// Trains both arms for every seed of `base` with identical settings apart
/// from the target rule. Evaluation and checkpoints are off.
pub fn ablate_adopted_target(base: &ExperimentConfig) -> Result<AblationReport, HarnessError> {
    let mut pairs = Vec::new();
    for &seed in &base.seeds {
        let arm = |adopted: bool| -> Result<Vec<f64>, HarnessError> {
            let mut c = base.clone();
            c.agent.adopted_target = adopted;
            c.eval_every = 0;
            c.checkpoint_every = 0;
            c.stop_at_lap = None;
            let out = train(&c, seed, None)?;
            Ok(out.metrics.returns())
        };
        let adopted_returns = arm(true)?;
        let plain_returns = arm(false)?;
        pairs.push(AblationPair {
            seed,
            adopted: final_window_mean(&adopted_returns, FINAL_WINDOW),
            plain: final_window_mean(&plain_returns, FINAL_WINDOW),
            adopted_returns,
            plain_returns,
        });
    }
    Ok(AblationReport { pairs })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn final_window_mean_uses_the_tail() {
        assert_eq!(final_window_mean(&[100.0, 1.0, 2.0, 3.0], 3), 2.0);
        assert_eq!(final_window_mean(&[4.0, 6.0], 10), 5.0);
        assert!(final_window_mean(&[], 3).is_nan());
    }

    #[test]
    fn report_counts_wins() {
        let pair = |seed, adopted, plain| AblationPair {
            seed,
            adopted,
            plain,
            adopted_returns: vec![adopted],
            plain_returns: vec![plain],
        };
        let r = AblationReport {
            pairs: vec![pair(1, 5.0, 3.0), pair(2, 1.0, 2.0), pair(3, 2.0, 2.0)],
        };
        assert_eq!(r.wins(), 1);
        assert_eq!(r.to_csv().lines().count(), 4);
        assert!(r.summary().ends_with("1 of 3 pairs"));
    }
}

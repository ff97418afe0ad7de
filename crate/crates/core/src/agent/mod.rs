//! DDPG agents: deterministic actor, feed-forward or recurrent critic,
//! OU exploration with brake bursts and the ten tournament variants.

mod actor;
mod critic;
mod ddpg;
mod metrics;
mod noise;
mod variant;

pub use actor::{Actor, ActorCache, OUTPUT_INIT};
pub use critic::{Critic, CriticCache, CriticInputGrad, FfCritic, LstmCritic};
pub use ddpg::{Agent, AgentConfig, AgentError, ObservationWindow, TrainStats, AGENT_CHECKPOINT_KIND};
pub use metrics::{EpisodeMetrics, MetricsLog, METRICS_HEADER};
pub use noise::{Exploration, ExplorationConfig, OuParams, OuState};
pub use variant::{BufferKind, Family, Variant, UNIFORM_CAPACITY};

use crate::sim::Termination;

/// Whether a transition ending in `termination` bootstraps from the target
/// critic. Premature ends never do; the step cap does only under the
/// adopted-target rule.
pub fn bootstraps(termination: Termination, adopted_target: bool) -> bool {
    match termination {
        Termination::None => true,
        Termination::MaxSteps => adopted_target,
        Termination::OutOfTrack | Termination::Backwards | Termination::SlowProgress => false,
    }
}

/// `y = Σ_{k<m} γ^k r_k + γ^m Q′` when bootstrapping, else the reward sum.
/// `termination` is that of the last transition in the horizon.
pub fn compute_target(
    reward_sum: f64,
    horizon: usize,
    termination: Termination,
    gamma: f64,
    bootstrap_q: f64,
    adopted_target: bool,
) -> f64 {
    if bootstraps(termination, adopted_target) {
        reward_sum + gamma.powi(horizon as i32) * bootstrap_q
    } else {
        reward_sum
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Termination::*;

    #[test]
    fn target_table() {
        // (reward_sum, m, termination, γ, Q′, adopted, expected)
        let cases: [(f64, usize, Termination, f64, f64, bool, f64); 14] = [
            (1.0, 1, None, 0.99, 2.0, true, 2.98),
            (1.0, 1, MaxSteps, 0.99, 2.0, true, 2.98),
            (1.0, 1, MaxSteps, 0.99, 2.0, false, 1.0),
            (-1.0, 1, OutOfTrack, 0.99, 2.0, true, -1.0),
            (-1.0, 1, Backwards, 0.99, 5.0, true, -1.0),
            (0.3, 1, SlowProgress, 0.99, 5.0, true, 0.3),
            (1.5, 2, None, 0.5, 4.0, true, 2.5),
            (1.75, 3, None, 0.5, 8.0, true, 2.75),
            (1.5, 2, OutOfTrack, 0.5, 4.0, true, 1.5),
            (1.5, 2, MaxSteps, 0.5, 4.0, true, 2.5),
            (0.0, 1, None, 0.0, 123.0, true, 0.0),
            (2.0, 4, None, 0.5, 16.0, true, 3.0),
            (-3.0, 1, None, 1.0, 3.0, true, 0.0),
            (10.0, 1, None, 0.9, -10.0, true, 1.0),
        ];
        for (i, &(r, m, t, g, q, at, want)) in cases.iter().enumerate() {
            let got = compute_target(r, m, t, g, q, at);
            assert!((got - want).abs() <= 1e-12, "case {i}: {got} vs {want}");
        }
    }

    #[test]
    fn adopted_rule_adds_exactly_the_bootstrap() {
        for &(r, g, q) in &[(1.0, 0.99, 2.0), (-0.37, 0.9, 13.25), (4.2, 0.5, -7.0)] {
            let at = compute_target(r, 1, MaxSteps, g, q, true);
            let plain = compute_target(r, 1, OutOfTrack, g, q, true);
            assert_eq!(at, plain + g * q);
        }
    }
}

//! Variant-by-seed training fan-out, evaluation and standings.

use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use racer_core::agent::{Agent, Family, Variant};
use racer_core::geometry::tracks;

use crate::config::ExperimentConfig;
use crate::eval::{evaluate, AgentPolicy};
use crate::leaderboard::{LeaderBoard, ModelResult};
use crate::train::{load_reference, load_track, run_name, train};
use crate::HarnessError;

pub const LEADERBOARD_FILE: &str = "leaderboard.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TournamentConfig {
    /// Shared settings; `variant` is overridden per entry.
    pub base: ExperimentConfig,
    pub variants: Vec<Variant>,
    /// Evaluation runs per trained model, starting from evenly spaced grid positions.
    pub eval_runs: usize,
    /// 0 runs every (variant, seed) pair on the calling thread.
    pub workers: usize,
    /// Second phase: family winners retrained here when set.
    pub promote_to: Option<String>,
    pub promote_episodes: usize,
    pub promote_eval_runs: usize,
}

impl Default for TournamentConfig {
    fn default() -> Self {
        Self {
            base: ExperimentConfig::default(),
            variants: Variant::ALL.to_vec(),
            eval_runs: 10,
            workers: 1,
            promote_to: Some(tracks::TECHNICAL.to_string()),
            promote_episodes: 2000,
            promote_eval_runs: 5,
        }
    }
}

impl TournamentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Phase {
    pub track: String,
    pub results: Vec<ModelResult>,
    pub board: LeaderBoard,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TournamentReport {
    pub first: Phase,
    pub promoted: Vec<Variant>,
    pub second: Option<Phase>,
}

/// Evaluates `agent` `runs` times from starts spread evenly around the lap.
pub fn evaluate_model(config: &ExperimentConfig, agent: &Agent, seed: u64, runs: usize) -> Result<ModelResult, HarnessError> {
    let track = load_track(&config.track)?;
    let reference = load_reference(config, &track)?;
    let mut best: Option<f64> = None;
    let (mut damage, mut finished) = (0.0, 0);
    for k in 0..runs {
        let mut env_config = config.env_config();
        env_config.start_delta = track.lap_length() * k as f64 / runs as f64;
        let (r, _) = evaluate(&mut AgentPolicy::new(agent), track.clone(), reference.clone(), &env_config, config.eval_laps)?;
        damage += r.damage;
        if r.finished() {
            finished += 1;
            if let Some(l) = r.best_lap {
                best = Some(best.map_or(l, |b: f64| b.min(l)));
            }
        }
    }
    Ok(ModelResult {
        variant: config.variant,
        seed,
        best_lap: best,
        damage,
        runs,
        finished_runs: finished,
    })
}

/// A run that fails to train counts as a DNF with no finished runs.
fn run_one(config: &ExperimentConfig, seed: u64, runs: usize, out: Option<&Path>) -> Result<ModelResult, HarnessError> {
    let outcome = train(config, seed, out)?;
    if outcome.failure.is_some() {
        return Ok(ModelResult {
            variant: config.variant,
            seed,
            best_lap: None,
            damage: 0.0,
            runs,
            finished_runs: 0,
        });
    }
    let agent = match &outcome.best_checkpoint {
        Some(bytes) => Agent::from_bytes(bytes, seed)?,
        None => outcome.agent,
    };
    let result = evaluate_model(config, &agent, seed, runs)?;
    if let Some(dir) = &outcome.run_dir {
        let json = serde_json::to_string_pretty(&result).expect("result serializes");
        std::fs::write(dir.join("summary.json"), json)?;
    }
    Ok(result)
}

/// Trains and evaluates every (variant, seed) of `configs` on `workers`
/// threads; results come back in job order regardless of completion order.
pub fn run_phase(configs: &[ExperimentConfig], runs: usize, workers: usize, out: Option<&Path>) -> Result<Vec<ModelResult>, HarnessError> {
    let jobs: Vec<(&ExperimentConfig, u64)> = configs.iter().flat_map(|c| c.seeds.iter().map(move |s| (c, *s))).collect();
    if workers <= 1 {
        return jobs.iter().map(|(c, s)| run_one(c, *s, runs, out)).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<ModelResult, HarnessError>>>> = Mutex::new((0..jobs.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers.min(jobs.len()) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some((c, s)) = jobs.get(i) else { break };
                let r = run_one(c, *s, runs, out);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every job ran")).collect()
}

fn phase(track: &str, configs: &[ExperimentConfig], runs: usize, workers: usize, out: Option<&Path>) -> Result<Phase, HarnessError> {
    let results = run_phase(configs, runs, workers, out)?;
    let board = LeaderBoard::from_results(&results);
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join(LEADERBOARD_FILE), board.to_csv())?;
    }
    Ok(Phase {
        track: track.to_string(),
        results,
        board,
    })
}

pub fn tournament(config: &TournamentConfig) -> Result<TournamentReport, HarnessError> {
    if config.variants.is_empty() {
        return Err(HarnessError::Config("tournament needs at least one variant".into()));
    }
    let out = config.base.output_dir.clone();
    let configs: Vec<ExperimentConfig> = config
        .variants
        .iter()
        .map(|v| ExperimentConfig {
            variant: *v,
            ..config.base.clone()
        })
        .collect();
    for c in &configs {
        c.validate()?;
    }
    let first_dir = out.join(&config.base.track);
    let first = phase(&config.base.track, &configs, config.eval_runs, config.workers, Some(&first_dir))?;

    let promoted: Vec<Variant> = [Family::Window, Family::MultiStep, Family::Prioritized, Family::Recurrent]
        .into_iter()
        .filter_map(|f| first.board.family_winner(f))
        .collect();
    let second = match &config.promote_to {
        Some(track) if !promoted.is_empty() => {
            let configs: Vec<ExperimentConfig> = promoted
                .iter()
                .map(|v| ExperimentConfig {
                    variant: *v,
                    track: track.clone(),
                    episodes: config.promote_episodes,
                    ..config.base.clone()
                })
                .collect();
            Some(phase(track, &configs, config.promote_eval_runs, config.workers, Some(&out.join(track)))?)
        }
        _ => None,
    };
    Ok(TournamentReport { first, promoted, second })
}

/// Directory of one tournament run.
pub fn run_dir(config: &ExperimentConfig, seed: u64) -> std::path::PathBuf {
    config.output_dir.join(&config.track).join(run_name(config, seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trip() {
        let c = TournamentConfig::default();
        assert_eq!(TournamentConfig::from_toml(&c.to_toml()).unwrap(), c);
        let partial = TournamentConfig::from_toml("eval_runs = 3\nvariants = [\"WIN1\", \"MS2\"]\n").unwrap();
        assert_eq!(partial.variants, vec![Variant::Win1, Variant::Ms2]);
        assert_eq!(partial.workers, 1);
    }

    #[test]
    fn empty_variant_list_is_rejected() {
        let c = TournamentConfig {
            variants: vec![],
            ..Default::default()
        };
        assert!(matches!(tournament(&c), Err(HarnessError::Config(_))));
    }
}

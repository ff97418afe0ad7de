//! Training loop with periodic greedy evaluation and checkpointing.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use racer_core::agent::{Agent, AgentError, EpisodeMetrics, MetricsLog};
use racer_core::geometry::{tracks, RacingLine, Track};
use racer_core::replay::Transition;

use crate::config::ExperimentConfig;
use crate::eval::{evaluate, AgentPolicy, EpisodeResult, Status};
use crate::HarnessError;

pub const METRICS_FILE: &str = "metrics.csv";
pub const EVALS_FILE: &str = "evals.csv";
pub const CONFIG_FILE: &str = "config.toml";
pub const STATUS_FILE: &str = "status.txt";
pub const CHECKPOINT_DIR: &str = "checkpoints";
pub const BEST_CHECKPOINT: &str = "best.ckpt";
pub const LATEST_CHECKPOINT: &str = "latest.ckpt";

pub const EVALS_HEADER: &str = "episode,status,laps,best_lap,damage,termination,return";

/// Greedy evaluation taken during training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    /// Training episodes completed before the evaluation.
    pub episode: u64,
    pub result: EpisodeResult,
}

impl EvalRecord {
    pub fn to_csv(&self) -> String {
        let r = &self.result;
        format!(
            "{},{},{},{},{},{},{}",
            self.episode,
            match r.status {
                Status::Finished => "finished",
                Status::Dnf => "dnf",
            },
            r.lap_times.len(),
            r.best_lap.map(|v| v.to_string()).unwrap_or_default(),
            r.damage,
            r.termination.as_str(),
            r.episode_return
        )
    }
}

pub fn evals_csv(records: &[EvalRecord]) -> String {
    let mut out = format!("{EVALS_HEADER}\n");
    for r in records {
        let _ = writeln!(out, "{}", r.to_csv());
    }
    out
}

pub struct TrainOutcome {
    pub metrics: MetricsLog,
    pub evals: Vec<EvalRecord>,
    /// Divergence or other fatal error; metrics up to that point are kept.
    pub failure: Option<String>,
    /// Episode and lap time of the best damage-free evaluation.
    pub best: Option<(u64, f64)>,
    pub agent: Agent,
    /// Checkpoint bytes of the best evaluation, if any.
    pub best_checkpoint: Option<Vec<u8>>,
    pub run_dir: Option<PathBuf>,
}

/// Version tag written next to every run: `git describe` when available.
pub fn version_string() -> String {
    std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .map(|g| format!("{}-{g}", env!("CARGO_PKG_VERSION")))
        .unwrap_or_else(|| format!("v{}", env!("CARGO_PKG_VERSION")))
}

pub fn run_name(config: &ExperimentConfig, seed: u64) -> String {
    format!("{}-{}-{}-s{seed}", config.track, config.variant, config.reference)
}

pub fn load_track(name: &str) -> Result<Arc<Track>, HarnessError> {
    Ok(Arc::new(tracks::by_name(name)?))
}

/// The reference line for a run: `None` selects the middle of the track.
pub fn load_reference(config: &ExperimentConfig, track: &Track) -> Result<Option<Arc<RacingLine>>, HarnessError> {
    if !config.reference.uses_line() {
        return Ok(None);
    }
    let path = config
        .racing_line
        .as_ref()
        .ok_or_else(|| HarnessError::Config(format!("reference mode {} needs a racing_line file", config.reference)))?;
    Ok(Some(Arc::new(RacingLine::load(track, path)?)))
}

/// Trains one seed. With `out` set, the run directory `out/<run name>`
/// receives config, seed, version, metrics, evaluations and checkpoints.
pub fn train(config: &ExperimentConfig, seed: u64, out: Option<&Path>) -> Result<TrainOutcome, HarnessError> {
    config.validate()?;
    let track = load_track(&config.track)?;
    let reference = load_reference(config, &track)?;
    let env_config = config.env_config();
    let mut env = racer_core::sim::Environment::new(track.clone(), reference.clone(), env_config.clone())?;
    let state_dim = env.observation_dim();
    let mut agent = Agent::new(config.agent_config(), state_dim, seed)?;

    let run_dir = match out {
        Some(root) => {
            let dir = root.join(run_name(config, seed));
            std::fs::create_dir_all(dir.join(CHECKPOINT_DIR))?;
            config.save(&dir.join(CONFIG_FILE))?;
            std::fs::write(dir.join("seed.txt"), format!("{seed}\n"))?;
            std::fs::write(dir.join("version.txt"), format!("{}\n", version_string()))?;
            Some(dir)
        }
        None => None,
    };

    let mut metrics = MetricsLog::default();
    let mut evals = Vec::new();
    let mut best: Option<(u64, f64)> = None;
    let mut best_checkpoint = None;
    let mut failure = None;
    let mut window = agent.new_window();

    'episodes: for episode in 0..config.episodes as u64 {
        let mut state = env.reset().to_vec();
        window.reset(&state);
        agent.exploration_mut().reset_noise();
        let epsilon_prime = agent.exploration().epsilon();
        let (mut ret, mut loss_sum, mut obj_sum, mut updates) = (0.0, 0.0, 0.0, 0u64);
        let mut step = 0u64;
        loop {
            let action = agent.act_explore(&window.flat())?;
            let result = env.step(action)?;
            let next = result.observation.to_vec();
            agent.remember(Transition {
                state: std::mem::take(&mut state),
                action: action.to_array(),
                reward: result.reward,
                next_state: next.clone(),
                termination: result.termination,
                episode,
                step,
            })?;
            ret += result.reward;
            for _ in 0..config.updates_per_step {
                match agent.train_step() {
                    Ok(Some(stats)) => {
                        loss_sum += stats.critic_loss;
                        obj_sum += stats.actor_objective;
                        updates += 1;
                    }
                    Ok(None) => {}
                    Err(AgentError::Diverged { update, dump }) => {
                        failure = Some(format!("diverged at update {update}\n{dump}"));
                        break;
                    }
                    Err(e) => return Err(e.into()),
                }
            }
            step += 1;
            if failure.is_some() || result.termination.is_terminal() {
                break;
            }
            window.push(&next);
            state = next;
        }
        let mean = |s: f64| if updates > 0 { s / updates as f64 } else { f64::NAN };
        metrics.rows.push(EpisodeMetrics {
            episode,
            steps: step,
            episode_return: ret,
            critic_loss_mean: mean(loss_sum),
            actor_obj_mean: mean(obj_sum),
            epsilon_prime,
            laps: env.lap_times().len() as u32,
            damage: env.state().damage,
        });
        if failure.is_some() {
            break 'episodes;
        }

        let done = episode + 1;
        if config.eval_every > 0 && done % config.eval_every as u64 == 0 {
            let (result, _) = evaluate(&mut AgentPolicy::new(&agent), track.clone(), reference.clone(), &env_config, config.eval_laps)?;
            if let Some(lap) = result.clean_best_lap() {
                if best.is_none_or(|(_, b)| lap < b) {
                    best = Some((done, lap));
                    best_checkpoint = Some(agent.to_bytes());
                }
            }
            evals.push(EvalRecord { episode: done, result });
        }
        let reached = matches!((best, config.stop_at_lap), (Some((_, lap)), Some(goal)) if lap <= goal);
        if let Some(dir) = &run_dir {
            if config.checkpoint_every > 0 && done % config.checkpoint_every as u64 == 0 {
                agent.save(&dir.join(CHECKPOINT_DIR).join(checkpoint_name(done)))?;
            }
        }
        if reached {
            break;
        }
    }

    if let Some(dir) = &run_dir {
        metrics.write_csv(&dir.join(METRICS_FILE))?;
        std::fs::write(dir.join(EVALS_FILE), evals_csv(&evals))?;
        agent.save(&dir.join(LATEST_CHECKPOINT))?;
        if let Some(bytes) = &best_checkpoint {
            std::fs::write(dir.join(BEST_CHECKPOINT), bytes)?;
        }
        let status = match &failure {
            Some(f) => format!("failed: {f}\n"),
            None => "ok\n".to_string(),
        };
        std::fs::write(dir.join(STATUS_FILE), status)?;
    }

    Ok(TrainOutcome {
        metrics,
        evals,
        failure,
        best,
        agent,
        best_checkpoint,
        run_dir,
    })
}

pub fn checkpoint_name(episode: u64) -> String {
    format!("ep{episode:06}.ckpt")
}

/// Episode number encoded in a checkpoint file name.
pub fn checkpoint_episode(path: &Path) -> Option<u64> {
    let name = path.file_name()?.to_str()?;
    name.strip_prefix("ep")?.strip_suffix(".ckpt")?.parse().ok()
}

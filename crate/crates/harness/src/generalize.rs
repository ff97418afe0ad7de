//! Evaluation of every saved checkpoint on several tracks and selection of
//! the general model.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use racer_core::agent::Agent;

use crate::config::ExperimentConfig;
use crate::eval::{evaluate, AgentPolicy};
use crate::plot::Series;
use crate::record::record_reference_line;
use crate::train::{checkpoint_episode, load_track, CHECKPOINT_DIR, CONFIG_FILE};
use crate::HarnessError;

pub const GENERALIZATION_HEADER: &str = "episode,track,status,best_lap,damage";

#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutcome {
    /// `None` for a DNF.
    pub best_lap: Option<f64>,
    pub damage: f64,
}

impl TrackOutcome {
    pub fn finished(&self) -> bool {
        self.best_lap.is_some()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointResult {
    pub episode: u64,
    pub tracks: BTreeMap<String, TrackOutcome>,
}

impl CheckpointResult {
    pub fn finishes_all(&self) -> bool {
        self.tracks.values().all(TrackOutcome::finished)
    }
}

/// Index of the checkpoint with the fastest lap on `training_track` among
/// those that finish every track; ties go to the earlier checkpoint.
pub fn select_general(results: &[CheckpointResult], training_track: &str) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in results.iter().enumerate() {
        if !r.finishes_all() {
            continue;
        }
        let Some(lap) = r.tracks.get(training_track).and_then(|t| t.best_lap) else {
            continue;
        };
        if best.is_none_or(|(_, b)| lap < b) {
            best = Some((i, lap));
        }
    }
    best.map(|(i, _)| i)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizationReport {
    pub training_track: String,
    pub checkpoints: Vec<CheckpointResult>,
    pub general: Option<usize>,
}

impl GeneralizationReport {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{GENERALIZATION_HEADER}\n");
        for c in &self.checkpoints {
            for (track, t) in &c.tracks {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    c.episode,
                    track,
                    if t.finished() { "finished" } else { "dnf" },
                    t.best_lap.map(|v| v.to_string()).unwrap_or_default(),
                    t.damage
                );
            }
        }
        out
    }

    /// Lap time against checkpoint episode, one series per track.
    pub fn series(&self) -> Vec<Series> {
        let mut by_track: BTreeMap<&str, Vec<(f64, f64)>> = BTreeMap::new();
        for c in &self.checkpoints {
            for (track, t) in &c.tracks {
                let pts = by_track.entry(track).or_default();
                if let Some(l) = t.best_lap {
                    pts.push((c.episode as f64, l));
                }
            }
        }
        by_track.into_iter().map(|(t, p)| Series::new(t, p)).collect()
    }

    pub fn summary(&self) -> String {
        match self.general {
            Some(i) => {
                let c = &self.checkpoints[i];
                format!("general model: checkpoint at episode {} ({} tracks finished)", c.episode, c.tracks.len())
            }
            None => "no checkpoint finishes every track; no general model".to_string(),
        }
    }
}

pub fn parse_csv(text: &str) -> Result<GeneralizationReport, HarnessError> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(GENERALIZATION_HEADER) {
        return Err(HarnessError::Run("generalization header mismatch".into()));
    }
    let mut checkpoints: Vec<CheckpointResult> = Vec::new();
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let f: Vec<&str> = line.trim().split(',').collect();
        let bad = || HarnessError::Run(format!("bad generalization row {}", i + 1));
        if f.len() != 5 {
            return Err(bad());
        }
        let episode: u64 = f[0].parse().map_err(|_| bad())?;
        let best_lap = if f[3].is_empty() { None } else { Some(f[3].parse().map_err(|_| bad())?) };
        let damage = f[4].parse().map_err(|_| bad())?;
        if checkpoints.last().is_none_or(|c| c.episode != episode) {
            checkpoints.push(CheckpointResult {
                episode,
                tracks: BTreeMap::new(),
            });
        }
        checkpoints.last_mut().unwrap().tracks.insert(f[1].to_string(), TrackOutcome { best_lap, damage });
    }
    Ok(GeneralizationReport {
        training_track: String::new(),
        checkpoints,
        general: None,
    })
}

/// Numbered checkpoints of a run, oldest first.
pub fn list_checkpoints(run_dir: &Path) -> Result<Vec<(u64, PathBuf)>, HarnessError> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(run_dir.join(CHECKPOINT_DIR))? {
        let path = entry?.path();
        if let Some(ep) = checkpoint_episode(&path) {
            out.push((ep, path));
        }
    }
    out.sort();
    Ok(out)
}

/// Evaluates every numbered checkpoint of `run_dir` on `tracks` (the
/// training track is always included). Line-based runs get a freshly
/// recorded reference lap on each track.
pub fn generalization_eval(run_dir: &Path, tracks: &[String], laps: usize) -> Result<GeneralizationReport, HarnessError> {
    let config = ExperimentConfig::load(&run_dir.join(CONFIG_FILE))?;
    let mut names: Vec<String> = vec![config.track.clone()];
    for t in tracks {
        if !names.contains(t) {
            names.push(t.clone());
        }
    }
    let env_config = config.env_config();
    let mut setups = Vec::new();
    for name in &names {
        let track = load_track(name)?;
        let line = if config.reference.uses_line() {
            Some(std::sync::Arc::new(record_reference_line(&config.bot, &env_config, track.clone())?))
        } else {
            None
        };
        setups.push((name.clone(), track, line));
    }
    let mut checkpoints = Vec::new();
    for (episode, path) in list_checkpoints(run_dir)? {
        let agent = Agent::load(&path, 0)?;
        let mut tracks = BTreeMap::new();
        for (name, track, line) in &setups {
            let (r, _) = evaluate(&mut AgentPolicy::new(&agent), track.clone(), line.clone(), &env_config, laps)?;
            tracks.insert(
                name.clone(),
                TrackOutcome {
                    best_lap: if r.finished() { r.best_lap } else { None },
                    damage: r.damage,
                },
            );
        }
        checkpoints.push(CheckpointResult { episode, tracks });
    }
    let general = select_general(&checkpoints, &config.track);
    Ok(GeneralizationReport {
        training_track: config.track,
        checkpoints,
        general,
    })
}

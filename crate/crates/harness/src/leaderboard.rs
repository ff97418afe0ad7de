//! Aggregation of evaluation results into per-variant standings.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use racer_core::agent::{Family, Variant};

/// Evaluation of one trained model (one variant, one seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub variant: Variant,
    pub seed: u64,
    /// Best lap over the evaluation runs; `None` when no run finished.
    pub best_lap: Option<f64>,
    /// Cumulative over the whole evaluation.
    pub damage: f64,
    pub runs: usize,
    pub finished_runs: usize,
}

impl ModelResult {
    /// Lap time eligible for the standings: finished and never damaged.
    pub fn clean_lap(&self) -> Option<f64> {
        if self.damage == 0.0 && self.finished_runs > 0 {
            self.best_lap
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderRow {
    pub variant: Variant,
    /// Best lap among damage-free models.
    pub blt: Option<f64>,
    /// Mean of the damage-free models' best laps.
    pub alt: Option<f64>,
    pub avg_damage: f64,
    /// Share of models that finished at least one evaluation run.
    pub finish_rate: f64,
    pub models: usize,
    pub clean_models: usize,
}

impl LeaderRow {
    pub fn is_dnf(&self) -> bool {
        self.alt.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LeaderBoard {
    /// Finishers by ascending aLT, then DNF rows in variant order.
    pub rows: Vec<LeaderRow>,
}

pub const LEADERBOARD_HEADER: &str = "rank,variant,bLT,aLT,avg_damage,finish_rate,models,clean_models";

impl LeaderBoard {
    pub fn from_results(results: &[ModelResult]) -> Self {
        let mut by_variant: BTreeMap<usize, (Variant, Vec<&ModelResult>)> = BTreeMap::new();
        for r in results {
            let key = Variant::ALL.iter().position(|v| *v == r.variant).expect("known variant");
            by_variant.entry(key).or_insert((r.variant, Vec::new())).1.push(r);
        }
        let mut rows: Vec<LeaderRow> = by_variant
            .into_values()
            .map(|(variant, models)| {
                let clean: Vec<f64> = models.iter().filter_map(|m| m.clean_lap()).collect();
                let n = models.len() as f64;
                LeaderRow {
                    variant,
                    blt: clean.iter().copied().reduce(f64::min),
                    alt: (!clean.is_empty()).then(|| clean.iter().sum::<f64>() / clean.len() as f64),
                    avg_damage: models.iter().map(|m| m.damage).sum::<f64>() / n,
                    finish_rate: models.iter().filter(|m| m.finished_runs > 0).count() as f64 / n,
                    models: models.len(),
                    clean_models: clean.len(),
                }
            })
            .collect();
        // stable: DNF rows keep variant order
        rows.sort_by(|a, b| match (a.alt, b.alt) {
            (Some(x), Some(y)) => x.total_cmp(&y),
            (Some(_), None) => std::cmp::Ordering::Less,
            (None, Some(_)) => std::cmp::Ordering::Greater,
            (None, None) => std::cmp::Ordering::Equal,
        });
        Self { rows }
    }

    pub fn row(&self, variant: Variant) -> Option<&LeaderRow> {
        self.rows.iter().find(|r| r.variant == variant)
    }

    /// Variant of `family` with the lowest aLT.
    pub fn family_winner(&self, family: Family) -> Option<Variant> {
        self.rows
            .iter()
            .filter(|r| r.variant.family() == family && !r.is_dnf())
            .min_by(|a, b| a.alt.unwrap().total_cmp(&b.alt.unwrap()))
            .map(|r| r.variant)
    }

    pub fn to_csv(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_else(|| "DNF".into());
        let mut out = format!("{LEADERBOARD_HEADER}\n");
        for (i, r) in self.rows.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                i + 1,
                r.variant,
                fmt(r.blt),
                fmt(r.alt),
                r.avg_damage,
                r.finish_rate,
                r.models,
                r.clean_models
            );
        }
        out
    }
}

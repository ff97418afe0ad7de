//! Per-episode training metrics as CSV.

use std::path::Path;

pub const METRICS_HEADER: &str = "episode,steps,return,critic_loss_mean,actor_obj_mean,epsilon_prime,laps,damage";

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub episode: u64,
    pub steps: u64,
    pub episode_return: f64,
    /// NaN when no update ran during the episode.
    pub critic_loss_mean: f64,
    pub actor_obj_mean: f64,
    pub epsilon_prime: f64,
    pub laps: u32,
    pub damage: f64,
}

impl EpisodeMetrics {
    /// Floats use the shortest round-trip form, so equal runs give equal bytes.
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.episode,
            self.steps,
            self.episode_return,
            self.critic_loss_mean,
            self.actor_obj_mean,
            self.epsilon_prime,
            self.laps,
            self.damage
        )
    }

    pub fn parse(line: &str) -> Result<Self, String> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 8 {
            return Err(format!("expected 8 fields, got {}", f.len()));
        }
        let float = |i: usize| f[i].parse::<f64>().map_err(|e| format!("field {i} '{}': {e}", f[i]));
        let int = |i: usize| f[i].parse::<u64>().map_err(|e| format!("field {i} '{}': {e}", f[i]));
        Ok(Self {
            episode: int(0)?,
            steps: int(1)?,
            episode_return: float(2)?,
            critic_loss_mean: float(3)?,
            actor_obj_mean: float(4)?,
            epsilon_prime: float(5)?,
            laps: int(6)? as u32,
            damage: float(7)?,
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<EpisodeMetrics>,
}

impl MetricsLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(METRICS_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == METRICS_HEADER => {}
            _ => return Err("missing metrics header".into()),
        }
        let rows = lines
            .filter(|l| !l.trim().is_empty())
            .map(EpisodeMetrics::parse)
            .collect::<Result<_, _>>()?;
        Ok(Self { rows })
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    pub fn read_csv(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    pub fn returns(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.episode_return).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_keeps_bits() {
        let log = MetricsLog {
            rows: vec![
                EpisodeMetrics {
                    episode: 0,
                    steps: 12,
                    episode_return: 0.1 + 0.2,
                    critic_loss_mean: f64::NAN,
                    actor_obj_mean: -1e-300,
                    epsilon_prime: 1.0,
                    laps: 0,
                    damage: 0.0,
                },
                EpisodeMetrics {
                    episode: 1,
                    steps: 3000,
                    episode_return: 12345.678,
                    critic_loss_mean: 2.5,
                    actor_obj_mean: 7.0,
                    epsilon_prime: 0.97,
                    laps: 2,
                    damage: 3.25,
                },
            ],
        };
        let text = log.to_csv();
        assert!(text.starts_with(METRICS_HEADER));
        let back = MetricsLog::parse(&text).unwrap();
        assert_eq!(back.to_csv(), text);
        assert_eq!(back.rows[0].episode_return.to_bits(), (0.1f64 + 0.2).to_bits());
        assert!(back.rows[0].critic_loss_mean.is_nan());
    }

    #[test]
    fn rejects_malformed() {
        assert!(MetricsLog::parse("nope\n").is_err());
        assert!(MetricsLog::parse(&format!("{METRICS_HEADER}\n1,2,3\n")).is_err());
    }
}

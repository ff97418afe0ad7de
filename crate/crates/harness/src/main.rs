use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use racer_core::agent::Agent;
use racer_core::geometry::{tracks, RacingLine};
use racer_harness::ablation::ablate_adopted_target;
use racer_harness::bot::{BaselineBot, BotConfig};
use racer_harness::config::{ExperimentConfig, ReferenceMode};
use racer_harness::eval::{evaluate, AgentPolicy, EpisodeResult};
use racer_harness::generalize::generalization_eval;
use racer_harness::plot::plot_csv;
use racer_harness::record::record_reference_line;
use racer_harness::tournament::{tournament, TournamentConfig};
use racer_harness::train::{load_track, train};

#[derive(Parser)]
#[command(name = "racer", version, about = "Train and evaluate DDPG racing agents")]
struct Cli {
    /// Print the default experiment and tournament configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one seed of an experiment.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Greedy evaluation of a checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value = tracks::OVAL)]
        track: String,
        #[arg(long, default_value_t = 3)]
        laps: usize,
        #[arg(long, default_value = "mot")]
        reference: ReferenceMode,
        /// Racing line for the line modes; recorded with the bot when absent.
        #[arg(long)]
        racing_line: Option<PathBuf>,
        /// Write the per-step telemetry CSV here.
        #[arg(long)]
        telemetry: Option<PathBuf>,
    },
    /// Train and rank every variant, then promote family winners.
    Tournament {
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Evaluate every checkpoint of a run on several tracks.
    Generalize {
        #[arg(long)]
        run_dir: PathBuf,
        #[arg(long, value_delimiter = ',')]
        tracks: Vec<String>,
        #[arg(long, default_value_t = 1)]
        laps: usize,
        /// Write the per-checkpoint table here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Paired runs with and without bootstrapping at the step cap.
    AblateAt {
        #[arg(long, default_value = tracks::OVAL)]
        track: String,
        #[arg(long, default_value_t = 60)]
        episodes: usize,
        #[arg(long, default_value_t = 300)]
        max_steps: usize,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5")]
        seeds: Vec<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Record a slow reference lap with the bot.
    RecordLine {
        #[arg(long)]
        track: String,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render a metrics, telemetry or generalization CSV as SVG.
    Plot {
        csv: PathBuf,
        #[arg(short, long)]
        out: PathBuf,
    },
    /// Evaluate the baseline bot.
    Bot {
        #[arg(long, default_value = tracks::OVAL)]
        track: String,
        #[arg(long, default_value_t = 3)]
        laps: usize,
    },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if cli.print_config {
        println!("# experiment\n{}", ExperimentConfig::default().to_toml());
        println!("# tournament\n{}", TournamentConfig::default().to_toml());
        return Ok(());
    }
    let Some(command) = cli.command else {
        bail!("no command given; see --help");
    };
    match command {
        Command::Train { config, seed, out } => {
            let mut c = load_experiment(config.as_deref())?;
            if let Some(o) = out {
                c.output_dir = o;
            }
            let outcome = train(&c, seed, Some(&c.output_dir))?;
            let dir = outcome.run_dir.expect("run directory requested");
            println!("run directory: {}", dir.display());
            match outcome.best {
                Some((ep, lap)) => println!("best damage-free lap {lap:.3} s after {ep} episodes"),
                None => println!("no damage-free evaluation lap"),
            }
            if let Some(f) = outcome.failure {
                bail!("training failed: {}", f.lines().next().unwrap_or_default());
            }
        }
        Command::Eval {
            checkpoint,
            track,
            laps,
            reference,
            racing_line,
            telemetry,
        } => {
            let agent = Agent::load(&checkpoint, 0).with_context(|| format!("loading {}", checkpoint.display()))?;
            let t = load_track(&track)?;
            let mut env_config = ExperimentConfig {
                reference,
                ..Default::default()
            }
            .env_config();
            env_config.record_telemetry = telemetry.is_some();
            let line = match (reference.uses_line(), racing_line) {
                (false, _) => None,
                (true, Some(p)) => Some(Arc::new(RacingLine::load(&t, &p)?)),
                (true, None) => Some(Arc::new(record_reference_line(&BotConfig::default(), &env_config, t.clone())?)),
            };
            let (r, env) = evaluate(&mut AgentPolicy::new(&agent), t, line, &env_config, laps)?;
            report(&r);
            if let Some(p) = telemetry {
                env.telemetry_log().write_csv(std::fs::File::create(&p)?)?;
            }
        }
        Command::Tournament { config } => {
            let c = match config {
                Some(p) => TournamentConfig::load(&p)?,
                None => TournamentConfig::default(),
            };
            let r = tournament(&c)?;
            println!("{}:\n{}", r.first.track, r.first.board.to_csv());
            let names: Vec<String> = r.promoted.iter().map(|v| v.to_string()).collect();
            println!("promoted: {}", names.join(", "));
            if let Some(p) = r.second {
                println!("{}:\n{}", p.track, p.board.to_csv());
            }
        }
        Command::Generalize { run_dir, tracks, laps, out } => {
            let r = generalization_eval(&run_dir, &tracks, laps)?;
            let csv = r.to_csv();
            match out {
                Some(p) => std::fs::write(p, csv)?,
                None => print!("{csv}"),
            }
            println!("{}", r.summary());
        }
        Command::AblateAt {
            track,
            episodes,
            max_steps,
            seeds,
            out,
        } => {
            let base = ExperimentConfig {
                track,
                episodes,
                max_steps,
                seeds,
                updates_per_step: 4,
                ..Default::default()
            };
            let r = ablate_adopted_target(&base)?;
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("ablation.csv"), r.to_csv())?;
                std::fs::write(dir.join("ablation_curves.csv"), r.curves_csv())?;
            }
            println!("{}", r.summary());
        }
        Command::RecordLine { track, out } => {
            let t = load_track(&track)?;
            let line = record_reference_line(&BotConfig::default(), &ExperimentConfig::default().env_config(), t)?;
            let path = out.unwrap_or_else(|| PathBuf::from(format!("{track}-line.json")));
            line.save(&path)?;
            println!("{} points written to {}", line.points().len(), path.display());
        }
        Command::Plot { csv, out } => {
            let text = std::fs::read_to_string(&csv).with_context(|| format!("reading {}", csv.display()))?;
            std::fs::write(&out, plot_csv(&text)?)?;
        }
        Command::Bot { track, laps } => {
            let t = load_track(&track)?;
            let env_config = ExperimentConfig::default().env_config();
            let mut bot = BaselineBot::new(BotConfig::default(), env_config.car, &t)?;
            let (r, _) = evaluate(&mut bot, t, None, &env_config, laps)?;
            report(&r);
        }
    }
    Ok(())
}

fn load_experiment(path: Option<&Path>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p).with_context(|| format!("loading {}", p.display()))?,
        None => ExperimentConfig::default(),
    })
}

fn report(r: &EpisodeResult) {
    let laps: Vec<String> = r.lap_times.iter().map(|l| format!("{l:.3}")).collect();
    println!(
        "{:?}: laps [{}], damage {}, termination {}, return {:.1}",
        r.status,
        laps.join(", "),
        r.damage,
        r.termination.as_str(),
        r.episode_return
    );
}

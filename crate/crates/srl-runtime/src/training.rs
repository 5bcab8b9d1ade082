use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use srl_agent::{action_scale_from_box, save_checkpoint, AgentNets, ReplayBuffer};

use crate::episode::{nominal_patch, run_episode, EpisodeContext, EpisodeLog};
use crate::{RunConfig, RuntimeError};

/// Per-run artifacts written by training.
#[derive(Clone, Debug)]
pub struct TrainingOutput {
    pub csv_path: PathBuf,
    pub summary_path: PathBuf,
    pub checkpoint_path: PathBuf,
    pub episodes: Vec<EpisodeLog>,
}

#[derive(Serialize)]
struct RunSummary {
    seed: u64,
    episodes: usize,
    mode: String,
    total_falls: usize,
    total_collisions: usize,
    total_waypoints: usize,
    missions_completed: usize,
    mean_return: f64,
    first_quartile_ma_return: f64,
    last_quartile_ma_return: f64,
    total_syntheses: usize,
}

/// Trailing moving average with the given window.
pub fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    values
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let lo = i.saturating_sub(window - 1);
            let slice = &values[lo..=i];
            slice.iter().sum::<f64>() / slice.len() as f64
        })
        .collect()
}

fn csv_row(ep: usize, log: &EpisodeLog, falls_cum: usize) -> String {
    format!(
        "{},{:.6},{},{},{:.6},{:.6}\n",
        ep,
        log.summary.episode_return,
        falls_cum,
        log.summary.waypoints_reached,
        log.summary.total_energy,
        log.summary.travel_time
    )
}

/// Runs the configured number of episodes with persistent networks and
/// replay buffer, writing one CSV row per episode (flushed as it goes), a
/// JSON summary, and the final agent checkpoint. Deterministic for a
/// fixed seed.
pub fn run_training(cfg: &RunConfig, out_dir: &Path) -> Result<TrainingOutput, RuntimeError> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir)?;
    let world = cfg.load_world()?;
    let spaces = cfg.build_spaces();
    let nominal = nominal_patch(cfg)?;
    let ctx = EpisodeContext {
        cfg,
        world: &world,
        nominal_patch: &nominal,
    };

    let mut nets = AgentNets::new(
        cfg.agent.clone(),
        action_scale_from_box(spaces.actions()),
        cfg.seed ^ 0xa9e1_7001,
    );
    let mut buffer = ReplayBuffer::new(cfg.agent.buffer_capacity, cfg.seed ^ 0xa9e1_7002);

    let csv_path = out_dir.join("train_metrics.csv");
    let mut csv = std::fs::File::create(&csv_path)?;
    csv.write_all(b"episode,return,falls_cum,waypoints,energy,travel_time\n")?;

    let mut episodes = Vec::with_capacity(cfg.episodes);
    let mut falls_cum = 0usize;
    for ep in 0..cfg.episodes {
        let ep_seed = cfg
            .seed
            .wrapping_mul(0x9e37_79b9_7f4a_7c15)
            .wrapping_add(ep as u64);
        let log = run_episode(&ctx, &mut nets, &mut buffer, ep_seed, true)?;
        falls_cum += usize::from(log.summary.fell);
        csv.write_all(csv_row(ep, &log, falls_cum).as_bytes())?;
        csv.flush()?;
        episodes.push(log);
    }

    let returns: Vec<f64> = episodes
        .iter()
        .map(|l| l.summary.episode_return)
        .collect();
    let ma = moving_average(&returns, 10);
    let quartile = (episodes.len() / 4).max(1);
    let first_q = ma[..quartile.min(ma.len())].iter().sum::<f64>() / quartile.min(ma.len()) as f64;
    let last_q = ma[ma.len().saturating_sub(quartile)..].iter().sum::<f64>()
        / quartile.min(ma.len()) as f64;

    let summary = RunSummary {
        seed: cfg.seed,
        episodes: cfg.episodes,
        mode: cfg.mode.to_string(),
        total_falls: falls_cum,
        total_collisions: episodes.iter().filter(|l| l.summary.collided).count(),
        total_waypoints: episodes.iter().map(|l| l.summary.waypoints_reached).sum(),
        missions_completed: episodes
            .iter()
            .filter(|l| l.summary.mission_complete)
            .count(),
        mean_return: returns.iter().sum::<f64>() / returns.len().max(1) as f64,
        first_quartile_ma_return: first_q,
        last_quartile_ma_return: last_q,
        total_syntheses: episodes.iter().map(|l| l.summary.syntheses).sum(),
    };
    let summary_path = out_dir.join("summary.json");
    std::fs::write(&summary_path, serde_json::to_string_pretty(&summary)? + "\n")?;

    let checkpoint_path = out_dir.join("agent.ckpt");
    save_checkpoint(&nets, buffer.len(), buffer.capacity(), &checkpoint_path)?;

    Ok(TrainingOutput {
        csv_path,
        summary_path,
        checkpoint_path,
        episodes,
    })
}

//! Subcommand bodies, independent of argument parsing.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use holocr::bench::{aggregate_report, BenchError, BenchReport};
use holocr::corpus::load_dataset;
use holocr::grpo::{
    entropy_ranking, simulate, GrpoError, IterationStats, RolloutGroup, ScoredGroup, SimConfig,
};
use holocr::pipeline::{score_dataset, ScoringContext};
use holocr::vision::remote::RemoteBackend;
use holocr::vision::render::Renderer;
use holocr::vision::{EmbeddingBackend, StubBackend};

use crate::config::RunConfig;
use crate::error::CliError;

/// Writes `contents` next to `path` first and renames it into place, so a
/// failed run never leaves a truncated file behind.
pub fn write_atomically(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let io =
        |e: std::io::Error| CliError::internal(format!("cannot write {}: {e}", path.display()));
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(contents).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn check_output_dir(path: &Path) -> Result<(), CliError> {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if parent.is_dir() {
        Ok(())
    } else {
        Err(CliError::config(format!(
            "output directory {} does not exist",
            parent.display()
        )))
    }
}

/// Scores the configured dataset and writes the JSON report to the
/// configured output path.
pub fn cmd_score(cfg: &RunConfig) -> Result<BenchReport, CliError> {
    cfg.validate()?;
    let dataset = cfg
        .dataset
        .as_deref()
        .ok_or_else(|| CliError::config("no dataset given (set `dataset` or pass --dataset)"))?;
    let output = cfg
        .output
        .as_deref()
        .ok_or_else(|| CliError::config("no output path given (set `output` or pass --output)"))?;
    check_output_dir(output)?;
    let records = load_dataset(dataset)?;

    let remote;
    let stub = StubBackend;
    let backend: &dyn EmbeddingBackend = match cfg.backend.remote()? {
        Some(rc) => {
            remote = RemoteBackend::connect(rc)
                .map_err(|e| CliError::transport(format!("embedding backend health probe: {e}")))?;
            &remote
        }
        None => &stub,
    };

    let renderer = if cfg.render.commands.is_empty() {
        None
    } else {
        let workdir = cfg
            .render
            .workdir
            .clone()
            .unwrap_or_else(std::env::temp_dir);
        Some(
            Renderer::new(
                cfg.render.commands.clone(),
                workdir,
                cfg.render.max_parallel,
            )
            .map_err(|e| CliError::config(e.to_string()))?,
        )
    };

    let base_dir = dataset.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut ctx = ScoringContext::new(backend, base_dir);
    ctx.vision = cfg.vision;
    ctx.renderer = renderer.as_ref();

    let scored = score_dataset(&records, &ctx, cfg.workers)
        .map_err(|e| CliError::internal(format!("cannot start worker pool: {e}")))?;
    let report = aggregate_report(scored).map_err(|e| match e {
        BenchError::Empty => {
            CliError::dataset(format!("dataset {} has no records", dataset.display()))
        }
        other => CliError::internal(other.to_string()),
    })?;
    write_atomically(output, report.to_json().as_bytes())?;
    Ok(report)
}

/// Simulation config assembled from the `[grpo]` section.
pub fn sim_config(cfg: &RunConfig) -> SimConfig {
    let g = &cfg.grpo;
    SimConfig {
        target: g.sim_target.clone(),
        group_size: g.group_size,
        iterations: g.sim_iterations,
        step_size: g.sim_step_size,
        seed: g.sim_seed,
        epsilon: g.epsilon,
        sigma_guard: g.sigma_guard,
        ..SimConfig::default()
    }
}

/// Runs the toy simulation and renders the trajectory as CSV with header
/// `iteration,mean_reward,max_reward`.
pub fn cmd_grpo_sim(sim: &SimConfig) -> Result<(Vec<IterationStats>, String), CliError> {
    let trajectory = simulate(sim).map_err(|e| CliError::config(e.to_string()))?;
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &trajectory {
        w.serialize(row)
            .map_err(|e| CliError::internal(format!("csv: {e}")))?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::internal(format!("csv: {e}")))?;
    let csv = String::from_utf8(bytes).map_err(|e| CliError::internal(e.to_string()))?;
    Ok((trajectory, csv))
}

/// Reads rollout groups, one JSON object per line (`input_id` or `id`,
/// plus `rewards`).
pub fn parse_rollout_groups(text: &str) -> Result<Vec<RolloutGroup>, CliError> {
    let mut groups = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let g: RolloutGroup = serde_json::from_str(line).map_err(|e| {
            CliError::dataset(format!("line {}: invalid rollout group: {e}", i + 1))
                .at_line(Some(i + 1))
        })?;
        groups.push(g);
    }
    Ok(groups)
}

/// Entropy-ranked ids of the groups in `input`.
pub fn cmd_filter(input: &Path, bins: usize, threshold: f64) -> Result<Vec<ScoredGroup>, CliError> {
    let text = fs::read_to_string(input)
        .map_err(|e| CliError::dataset(format!("cannot read {}: {e}", input.display())))?;
    let groups = parse_rollout_groups(&text)?;
    entropy_ranking(&groups, bins, threshold).map_err(|e| match e {
        GrpoError::GroupTooSmall { .. } => CliError::dataset(e.to_string()),
        other => CliError::config(other.to_string()),
    })
}

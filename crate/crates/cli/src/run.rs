use std::fs;
use std::time::Instant;

use serde::Serialize;
use trimul_core::bound_verifier::{random_smooth_family, sufficiency_sweep, NormSearch};
use trimul_core::coeff_analysis::{analyze, cube_axes, decay_slope, frame_norm_lq, CoeffTensor, MultiplierGrid};
use trimul_core::export::CsvTable;
use trimul_core::index_partition::{full_partition, VerifyReport, WeightedIndexSet};
use trimul_core::necessity_lab::{growth_fit, lq_boundary_check};
use trimul_core::wavelet_frame::{build_wavelet_system, DEFAULT_RESOLUTION};

use crate::config::{ExperimentConfig, ExperimentKind, MultiplierSpec};
use crate::report::{write_atomic, Artifact};
use crate::Result;

pub const MANIFEST: &str = "manifest.json";

#[derive(Clone, Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OutputDigest {
    pub file: String,
    pub sha256: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub config: ExperimentConfig,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub stages: Vec<StageTiming>,
    pub outputs: Vec<OutputDigest>,
}

struct Stages {
    start: Instant,
    timings: Vec<StageTiming>,
}

impl Stages {
    fn new() -> Self {
        Stages {
            start: Instant::now(),
            timings: Vec::new(),
        }
    }

    fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        self.timings.push(StageTiming {
            stage: stage.into(),
            seconds: t.elapsed().as_secs_f64(),
        });
        Ok(out)
    }
}

fn build_multiplier(cfg: &ExperimentConfig) -> Result<MultiplierGrid> {
    let axes = cube_axes(cfg.d, -1.0, 1.0, cfg.grid)?;
    Ok(match cfg.multiplier {
        MultiplierSpec::Zero => MultiplierGrid::zeros(cfg.d, axes)?,
        MultiplierSpec::Gaussian { width } => MultiplierGrid::from_fn(cfg.d, axes, move |p| {
            (-(p[0] * p[0] + (p[1] - 0.1).powi(2) + (p[2] + 0.2).powi(2)) / width).exp()
        })?,
    })
}

fn coefficients(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<CoeffTensor> {
    let sys = stages.time("wavelet_system", || Ok(build_wavelet_system(cfg.family_order, DEFAULT_RESOLUTION)?))?;
    let m = stages.time("multiplier", || build_multiplier(cfg))?;
    stages.time("analyze", || Ok(analyze(&m, &sys, cfg.j_max)?))
}

#[derive(Serialize)]
struct AnalyzeSummary {
    coefficients: usize,
    max_abs: f64,
    sum_squares: f64,
    frame_norm_lq: Option<f64>,
    decay_slope: Option<f64>,
    worst_decay_slope: Option<f64>,
}

#[derive(Serialize)]
struct BlockSummary {
    j: u32,
    g: String,
    size: usize,
    report: VerifyReport,
}

fn run_analyze(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<Vec<Artifact>> {
    let c = coefficients(cfg, stages)?;
    let mut jsonl = Vec::new();
    c.write_jsonl(&mut jsonl)?;
    let fit = decay_slope(&c).ok();
    let summary = AnalyzeSummary {
        coefficients: c.len(),
        max_abs: c.max_abs(),
        sum_squares: c.sum_squares(),
        frame_norm_lq: cfg.q.map(|q| frame_norm_lq(&c, q)).transpose()?,
        decay_slope: fit.as_ref().map(|f| f.slope),
        worst_decay_slope: fit.as_ref().map(|f| f.worst_slope),
    };
    Ok(vec![
        Artifact {
            name: "coefficients.jsonl".into(),
            bytes: jsonl,
        },
        Artifact::json("summary.json", &summary)?,
    ])
}

fn run_partition(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<Vec<Artifact>> {
    let c = coefficients(cfg, stages)?;
    let q = cfg.q.unwrap_or(2.0);
    let (blocks, trees) = stages.time("partition", || {
        let mut blocks = Vec::new();
        let mut trees = Vec::new();
        for (j, g) in c.blocks() {
            let b = WeightedIndexSet::from_block(&c, j, g)?;
            let tree = full_partition(&b, q)?;
            blocks.push(BlockSummary {
                j,
                g: g.to_string(),
                size: b.len(),
                report: tree.verify(),
            });
            trees.push(tree);
        }
        Ok((blocks, trees))
    })?;
    let mut table = CsvTable::new(&["j", "G", "size", "nodes", "leaves", "depth", "failures", "max_diagonal_ratio"]);
    for b in &blocks {
        table.push(vec![
            b.j.to_string(),
            b.g.clone(),
            b.size.to_string(),
            b.report.nodes.to_string(),
            b.report.leaves.to_string(),
            b.report.depth.to_string(),
            b.report.failures.len().to_string(),
            trimul_core::export::fmt_f64(b.report.max_diagonal_ratio()),
        ]);
    }
    let mut jsonl = Vec::new();
    trimul_core::export::write_jsonl(&trees, &mut jsonl)?;
    Ok(vec![
        Artifact::json("partition.json", &blocks)?,
        Artifact::csv("partition.csv", &table),
        Artifact {
            name: "trees.jsonl".into(),
            bytes: jsonl,
        },
    ])
}

fn run_bound_sweep(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<Vec<Artifact>> {
    let q = cfg.q.expect("validated");
    let axes = cube_axes(cfg.d, -1.0, 1.0, cfg.grid)?;
    let family = stages.time("family", || Ok(random_smooth_family(cfg.trials, &axes, q, cfg.seed)?))?;
    let search = NormSearch {
        seed: cfg.seed,
        ..NormSearch::default()
    };
    let report = stages.time("sweep", || Ok(sufficiency_sweep(&family, q, &search)?))?;
    Ok(vec![
        Artifact::json("sweep.json", &report)?,
        Artifact::csv("sweep.csv", &report.to_csv()),
    ])
}

fn run_necessity(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<Vec<Artifact>> {
    let ns: Vec<u32> = (2..=cfg.n_max).collect();
    let report = stages.time("growth", || Ok(growth_fit(&ns, cfg.trials, cfg.seed)?))?;
    Ok(vec![
        Artifact::json("growth.json", &report)?,
        Artifact::csv("growth.csv", &report.to_csv()),
    ])
}

fn run_boundary(cfg: &ExperimentConfig, stages: &mut Stages) -> Result<Vec<Artifact>> {
    let q = cfg.q.expect("validated");
    let report = stages.time("boundary", || Ok(lq_boundary_check(q, cfg.l_max)?))?;
    Ok(vec![Artifact::json("boundary.json", &report)?])
}

/// Computes every artifact, then writes them atomically with the manifest last.
pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    let mut stages = Stages::new();
    let artifacts = match cfg.kind {
        ExperimentKind::Analyze => run_analyze(cfg, &mut stages)?,
        ExperimentKind::Partition => run_partition(cfg, &mut stages)?,
        ExperimentKind::BoundSweep => run_bound_sweep(cfg, &mut stages)?,
        ExperimentKind::Necessity => run_necessity(cfg, &mut stages)?,
        ExperimentKind::Boundary => run_boundary(cfg, &mut stages)?,
    };
    fs::create_dir_all(&cfg.out)?;
    let mut outputs = Vec::new();
    for a in &artifacts {
        write_atomic(&cfg.out, &a.name, &a.bytes)?;
        outputs.push(OutputDigest {
            file: a.name.clone(),
            sha256: a.digest(),
        });
    }
    let manifest = RunManifest {
        config: cfg.clone(),
        version: env!("CARGO_PKG_VERSION").into(),
        wall_clock_seconds: stages.start.elapsed().as_secs_f64(),
        stages: stages.timings,
        outputs,
    };
    let m = Artifact::json(MANIFEST, &manifest)?;
    write_atomic(&cfg.out, MANIFEST, &m.bytes)?;
    Ok(manifest)
}

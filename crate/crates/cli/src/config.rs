use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Analyze,
    Partition,
    BoundSweep,
    Necessity,
    Boundary,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Analyze => "analyze",
            ExperimentKind::Partition => "partition",
            ExperimentKind::BoundSweep => "bound-sweep",
            ExperimentKind::Necessity => "necessity",
            ExperimentKind::Boundary => "boundary",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MultiplierSpec {
    /// `exp(-|x - c|² / width)` with a fixed off-centre `c`.
    Gaussian { width: f64 },
    Zero,
}

impl Default for MultiplierSpec {
    fn default() -> Self {
        MultiplierSpec::Gaussian { width: 0.18 }
    }
}

/// Config file contents and flag overrides; every field is optional here.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub kind: Option<ExperimentKind>,
    pub d: Option<usize>,
    pub q: Option<f64>,
    pub j_max: Option<u32>,
    pub grid: Option<usize>,
    pub family_order: Option<usize>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub multiplier: Option<MultiplierSpec>,
    pub l_max: Option<u64>,
    pub n_max: Option<u32>,
    pub out: Option<PathBuf>,
}

impl PartialConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `flags` win.
    pub fn overlay(self, flags: PartialConfig) -> Self {
        PartialConfig {
            kind: flags.kind.or(self.kind),
            d: flags.d.or(self.d),
            q: flags.q.or(self.q),
            j_max: flags.j_max.or(self.j_max),
            grid: flags.grid.or(self.grid),
            family_order: flags.family_order.or(self.family_order),
            seed: flags.seed.or(self.seed),
            trials: flags.trials.or(self.trials),
            multiplier: flags.multiplier.or(self.multiplier),
            l_max: flags.l_max.or(self.l_max),
            n_max: flags.n_max.or(self.n_max),
            out: flags.out.or(self.out),
        }
    }
}

/// Validated configuration with defaults filled in.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub d: usize,
    pub q: Option<f64>,
    pub j_max: u32,
    pub grid: usize,
    pub family_order: usize,
    pub seed: u64,
    pub trials: usize,
    pub multiplier: MultiplierSpec,
    pub l_max: u64,
    pub n_max: u32,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Collects every field problem before failing.
    pub fn resolve(kind: ExperimentKind, p: PartialConfig) -> Result<Self> {
        let mut problems = Vec::new();
        if let Some(k) = p.kind {
            if k != kind {
                problems.push(format!("kind: config says `{}`, command is `{}`", k.name(), kind.name()));
            }
        }
        let d = p.d.unwrap_or(1);
        if d != 1 {
            problems.push(format!("d: only d = 1 is supported, got {d}"));
        }
        match (kind, p.q) {
            (ExperimentKind::BoundSweep, None) | (ExperimentKind::Boundary, None) => {
                problems.push("q: required for this experiment".into())
            }
            (ExperimentKind::BoundSweep, Some(q)) if !(1.0..3.0).contains(&q) => {
                problems.push(format!("q: need 1 <= q < 3, got {q}"))
            }
            (_, Some(q)) if !(q > 0.0 && q.is_finite()) => problems.push(format!("q: need q > 0, got {q}")),
            _ => {}
        }
        let j_max = p.j_max.unwrap_or(3);
        if !(1..=6).contains(&j_max) {
            problems.push(format!("j_max: need 1..=6, got {j_max}"));
        }
        let grid = p.grid.unwrap_or(match kind {
            ExperimentKind::BoundSweep => 24,
            _ => 64,
        });
        if !(4..=256).contains(&grid) {
            problems.push(format!("grid: need 4..=256, got {grid}"));
        }
        let trials = p.trials.unwrap_or(match kind {
            ExperimentKind::Necessity => 256,
            _ => 20,
        });
        if trials == 0 {
            problems.push("trials: must be positive".into());
        }
        let n_max = p.n_max.unwrap_or(8);
        if !(2..=8).contains(&n_max) {
            problems.push(format!("n_max: need 2..=8, got {n_max}"));
        }
        if let Some(MultiplierSpec::Gaussian { width }) = p.multiplier {
            if !(width > 0.0 && width.is_finite()) {
                problems.push(format!("multiplier.width: must be positive, got {width}"));
            }
        }
        if !problems.is_empty() {
            return Err(CliError::Usage(problems.join("; ")));
        }
        Ok(ExperimentConfig {
            kind,
            d,
            q: p.q,
            j_max,
            grid,
            family_order: p.family_order.unwrap_or(2),
            seed: p.seed.unwrap_or(0),
            trials,
            multiplier: p.multiplier.unwrap_or_default(),
            l_max: p.l_max.unwrap_or(1_000_000),
            n_max,
            out: p.out.unwrap_or_else(|| PathBuf::from("trimul-out")),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win() {
        let file = PartialConfig {
            q: Some(2.0),
            seed: Some(1),
            ..Default::default()
        };
        let flags = PartialConfig {
            seed: Some(9),
            ..Default::default()
        };
        let c = ExperimentConfig::resolve(ExperimentKind::BoundSweep, file.overlay(flags)).unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.q, Some(2.0));
    }

    #[test]
    fn diagnostics_name_fields() {
        let p = PartialConfig {
            grid: Some(1),
            ..Default::default()
        };
        let CliError::Usage(msg) = ExperimentConfig::resolve(ExperimentKind::Boundary, p).unwrap_err() else {
            panic!("expected usage error");
        };
        assert!(msg.contains("q:") && msg.contains("grid:"), "{msg}");
    }

    #[test]
    fn bound_sweep_range() {
        for q in [0.5, 3.0] {
            let p = PartialConfig {
                q: Some(q),
                ..Default::default()
            };
            assert!(ExperimentConfig::resolve(ExperimentKind::BoundSweep, p).is_err());
        }
    }
}

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SpaceArg {
    Euclidean,
    Hyperbolic,
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccuracyConfig {
    pub panels: usize,
    pub order: usize,
}

/// Per-check tolerances before `tolerance_scale` is applied.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub averaging: f64,
    pub parts: f64,
    pub jacobian: f64,
    pub coarea_weight: f64,
    pub coarea: f64,
    pub hardy: f64,
    pub slope: f64,
    pub additivity: f64,
    pub stability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            averaging: 1e-6,
            parts: 1e-6,
            jacobian: 1e-6,
            coarea_weight: 1e-8,
            coarea: 1e-4,
            hardy: 1e-6,
            slope: 0.05,
            additivity: 1e-10,
            stability: 1e-2,
        }
    }
}

impl Tolerances {
    fn scaled(&self, s: f64) -> Self {
        Self {
            averaging: self.averaging * s,
            parts: self.parts * s,
            jacobian: self.jacobian * s,
            coarea_weight: self.coarea_weight * s,
            coarea: self.coarea * s,
            hardy: self.hardy * s,
            slope: self.slope * s,
            additivity: self.additivity * s,
            stability: self.stability * s,
        }
    }

    fn all(&self) -> [(&'static str, f64); 9] {
        [
            ("averaging", self.averaging),
            ("parts", self.parts),
            ("jacobian", self.jacobian),
            ("coarea_weight", self.coarea_weight),
            ("coarea", self.coarea),
            ("hardy", self.hardy),
            ("slope", self.slope),
            ("additivity", self.additivity),
            ("stability", self.stability),
        ]
    }
}

/// Experiment configuration as read from JSON. Every key is optional.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// When present it must name the subcommand being run.
    pub command: Option<String>,
    pub dimension: Option<usize>,
    /// Both spaces when absent.
    pub space: Option<SpaceArg>,
    pub seed: u64,
    /// Family ids for `estimate`; the whole catalog when empty.
    pub families: Vec<String>,
    /// Ratio evaluations per family.
    pub budget: usize,
    pub restarts: usize,
    /// λ grid for `decompose`.
    pub lambdas: Vec<f64>,
    /// Samples with `λ ≥ split` fit the suite constant.
    pub split: f64,
    /// Randomized instances per integration-by-parts check.
    pub instances: usize,
    /// Overrides the per-check quadrature accuracy.
    pub accuracy: Option<AccuracyConfig>,
    pub tolerances: Tolerances,
    pub tolerance_scale: f64,
    /// Exponent `p > m` for decompositions on `ℍᵐ`, `m = n - 1`; defaults to
    /// `n`.
    pub morrey_exponent: Option<f64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            dimension: None,
            space: None,
            seed: 0,
            families: Vec::new(),
            budget: 60,
            restarts: 5,
            lambdas: (1..=10).map(|k| 2f64.powi(-k)).collect(),
            split: 2f64.powi(-5),
            instances: 10,
            accuracy: None,
            tolerances: Tolerances::default(),
            tolerance_scale: 1.0,
            morrey_exponent: None,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub dimension: Option<usize>,
    pub space: Option<SpaceArg>,
    pub tolerance_scale: Option<f64>,
}

/// Validated settings for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct Plan {
    pub command: String,
    pub dimension: usize,
    pub spaces: Vec<SpaceArg>,
    pub seed: u64,
    pub families: Vec<String>,
    pub budget: usize,
    pub restarts: usize,
    pub lambdas: Vec<f64>,
    pub split: f64,
    pub instances: usize,
    pub accuracy: Option<AccuracyConfig>,
    pub tolerances: Tolerances,
    pub morrey_exponent: Option<f64>,
}

impl ExperimentConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn resolve(self, command: &str, overrides: &Overrides) -> Result<Plan, CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if let Some(c) = &self.command {
            if c != command {
                return bad(format!("config is for `{c}`, not `{command}`"));
            }
        }
        let dimension = overrides.dimension.or(self.dimension).unwrap_or(2);
        if !(2..=3).contains(&dimension) {
            return bad(format!("dimension must be 2 or 3, got {dimension}"));
        }
        let spaces = match overrides.space.or(self.space) {
            Some(s) => vec![s],
            None => vec![SpaceArg::Euclidean, SpaceArg::Hyperbolic],
        };
        let scale = overrides.tolerance_scale.unwrap_or(self.tolerance_scale);
        if !(scale > 0.0) || !scale.is_finite() {
            return bad(format!("tolerance scale must be positive, got {scale}"));
        }
        let tolerances = self.tolerances.scaled(scale);
        for (name, t) in tolerances.all() {
            if !(t > 0.0) || !t.is_finite() {
                return bad(format!("tolerance `{name}` must be positive, got {t}"));
            }
        }
        if self.budget == 0 || self.restarts == 0 || self.instances == 0 {
            return bad("budget, restarts and instances must be positive".into());
        }
        if self.lambdas.is_empty() || self.lambdas.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
            return bad("lambda grid must be nonempty and positive".into());
        }
        if !(self.split > 0.0) {
            return bad("split must be positive".into());
        }
        if let Some(a) = self.accuracy {
            if a.panels == 0 || a.order == 0 || a.order > 64 {
                return bad("accuracy needs panels >= 1 and 1 <= order <= 64".into());
            }
        }
        if let Some(p) = self.morrey_exponent {
            if !(p > (dimension - 1) as f64) || !p.is_finite() {
                return bad(format!("morrey exponent must exceed {}, got {p}", dimension - 1));
            }
        }
        Ok(Plan {
            command: command.to_string(),
            dimension,
            spaces,
            seed: overrides.seed.unwrap_or(self.seed),
            families: self.families,
            budget: self.budget,
            restarts: self.restarts,
            lambdas: self.lambdas,
            split: self.split,
            instances: self.instances,
            accuracy: self.accuracy,
            tolerances,
            morrey_exponent: self.morrey_exponent,
        })
    }
}

//! Declarative experiment configuration: JSON schema, presets, command-line
//! overrides and validation.
//!
//! A config file may start from a named preset (`denoise`, `spikes`,
//! `pressure`); explicit fields override the preset, and command-line flags
//! override the file. Validation is strict about solver-specific
//! parameters: a run must set exactly the parameters its solver consumes.

use serde::{Deserialize, Serialize};

use crate::CliError;

/// Problem families the harness can synthesize, plus file-driven custom
/// instances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    /// TV denoising of a blocky image: A = I, B = 2-D gradient.
    Denoise2d,
    /// L1 inversion of spiky sources under a 1-D surface-displacement
    /// kernel: B = I.
    Spikes1d,
    /// TV inversion of a blocky pressure map under the 2-D kernel:
    /// B = 2-D gradient.
    Pressure2d,
    /// Operators and data loaded from binary files.
    Custom,
}

impl Problem {
    pub fn tag(&self) -> &'static str {
        match self {
            Problem::Denoise2d => "denoise2d",
            Problem::Spikes1d => "spikes1d",
            Problem::Pressure2d => "pressure2d",
            Problem::Custom => "custom",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    AdmmExact,
    Ccd,
    Lmccd,
    Rcg,
    Ista,
    Fista,
    ScdMm,
}

impl SolverKind {
    pub fn tag(&self) -> &'static str {
        match self {
            SolverKind::AdmmExact => "admm-exact",
            SolverKind::Ccd => "ccd",
            SolverKind::Lmccd => "lmccd",
            SolverKind::Rcg => "rcg",
            SolverKind::Ista => "ista",
            SolverKind::Fista => "fista",
            SolverKind::ScdMm => "scd-mm",
        }
    }

    pub fn needs_lambda(&self) -> bool {
        !matches!(self, SolverKind::Ista | SolverKind::Fista)
    }
}

/// One solver selection with its private parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    pub name: SolverKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub memory_m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_cg: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

impl SolverEntry {
    pub fn bare(name: SolverKind) -> Self {
        Self {
            name,
            memory_m: None,
            n_cg: None,
            gamma: None,
        }
    }

    /// Short tag for artifact filenames, e.g. `lmccd_m100`, `rcg_nc5`.
    pub fn tag(&self) -> String {
        match self.name {
            SolverKind::Lmccd => format!("lmccd_m{}", self.memory_m.unwrap_or(0)),
            SolverKind::Rcg => format!("rcg_nc{}", self.n_cg.unwrap_or(0)),
            other => other.tag().to_string(),
        }
    }

    fn validate(&self, context: &str) -> Result<(), CliError> {
        let forbid = |field: &str, set: bool| -> Result<(), CliError> {
            if set {
                return Err(CliError::Config(format!(
                    "{context}: solver '{}' does not take '{field}'",
                    self.name.tag()
                )));
            }
            Ok(())
        };
        match self.name {
            SolverKind::Lmccd => {
                if self.memory_m.is_none() {
                    return Err(CliError::Config(format!(
                        "{context}: solver 'lmccd' requires 'memory_m'"
                    )));
                }
                forbid("n_cg", self.n_cg.is_some())?;
                forbid("gamma", self.gamma.is_some())?;
            }
            SolverKind::Rcg => {
                match self.n_cg {
                    None => {
                        return Err(CliError::Config(format!(
                            "{context}: solver 'rcg' requires 'n_cg'"
                        )))
                    }
                    Some(0) => {
                        return Err(CliError::Config(format!(
                            "{context}: 'n_cg' must be at least 1"
                        )))
                    }
                    Some(_) => {}
                }
                forbid("memory_m", self.memory_m.is_some())?;
                forbid("gamma", self.gamma.is_some())?;
            }
            SolverKind::Ista | SolverKind::Fista => {
                forbid("memory_m", self.memory_m.is_some())?;
                forbid("n_cg", self.n_cg.is_some())?;
                if let Some(g) = self.gamma {
                    if !(g > 0.0 && g.is_finite()) {
                        return Err(CliError::Config(format!(
                            "{context}: 'gamma' must be positive and finite, got {g}"
                        )));
                    }
                }
            }
            _ => {
                forbid("memory_m", self.memory_m.is_some())?;
                forbid("n_cg", self.n_cg.is_some())?;
                forbid("gamma", self.gamma.is_some())?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub sigma_rel: f64,
    pub mute_fraction: f64,
    pub seed: u64,
}

/// Grid and kernel geometry. Which fields apply depends on the problem.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// 1-D model/data size (spikes1d).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Square grid side (denoise2d, pressure2d).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_side: Option<usize>,
    /// Kernel depth D in km (spikes1d, pressure2d).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    /// Segment length A in km (spikes1d).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub length: Option<f64>,
    /// Domain half-width A in km (pressure2d).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    /// Kernel scale factor c (spikes1d, pressure2d).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
}

/// Regularization operator for custom problems.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CustomBOp {
    Identity,
    Diff1d,
    Grad2d { nx: usize, ny: usize },
}

/// File-driven problem description: a dense matrix for `A`, a data vector,
/// and optionally a reference model and a constraint vector (scd-mm).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomConfig {
    pub a_matrix: String,
    pub data: String,
    pub b_op: CustomBOp,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constraint: Option<String>,
}

/// The full experiment description. All fields are optional at the file
/// level so presets and overrides can fill them; [`ExperimentConfig::validated`]
/// enforces completeness and consistency.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub problem: Option<Problem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverEntry>,
    /// Solver list for `compare`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solvers: Option<Vec<SolverEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub custom: Option<CustomConfig>,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub budget: Option<u64>,
    pub solver: Option<SolverKind>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub memory: Option<usize>,
    pub ncg: Option<usize>,
}

fn preset(name: &str) -> Result<ExperimentConfig, CliError> {
    let (problem, solver, alpha, lambda, noise, grid) = match name {
        "denoise" => (
            Problem::Denoise2d,
            SolverEntry {
                memory_m: Some(50),
                ..SolverEntry::bare(SolverKind::Lmccd)
            },
            10.0,
            1.0,
            NoiseConfig {
                sigma_rel: 0.15,
                mute_fraction: 0.25,
                seed: 42,
            },
            GridConfig {
                n_side: Some(64),
                ..GridConfig::default()
            },
        ),
        "spikes" => (
            Problem::Spikes1d,
            SolverEntry {
                memory_m: Some(100),
                ..SolverEntry::bare(SolverKind::Lmccd)
            },
            1e4,
            0.05,
            NoiseConfig {
                sigma_rel: 0.15,
                mute_fraction: 0.2,
                seed: 42,
            },
            GridConfig {
                n: Some(500),
                depth: Some(0.1),
                length: Some(2.0),
                scale: Some(1e-2),
                ..GridConfig::default()
            },
        ),
        "pressure" => (
            Problem::Pressure2d,
            SolverEntry {
                memory_m: Some(100),
                ..SolverEntry::bare(SolverKind::Lmccd)
            },
            0.1,
            10.0,
            NoiseConfig {
                sigma_rel: 0.15,
                mute_fraction: 0.25,
                seed: 42,
            },
            GridConfig {
                n_side: Some(50),
                depth: Some(0.455),
                half_width: Some(1.2),
                scale: Some(5.8515e3),
                ..GridConfig::default()
            },
        ),
        other => {
            return Err(CliError::Config(format!(
                "unknown preset '{other}' (expected denoise, spikes or pressure)"
            )))
        }
    };
    Ok(ExperimentConfig {
        preset: None,
        problem: Some(problem),
        solver: Some(solver),
        solvers: None,
        alpha: Some(alpha),
        lambda: Some(lambda),
        budget: Some(100),
        max_iters: Some(1_000_000),
        tol: Some(0.0),
        noise: Some(noise),
        grid: Some(grid),
        custom: None,
    })
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config parse: {e}")))
    }

    /// Expands the preset (file fields win) and applies flag overrides.
    pub fn resolve(mut self, overrides: &Overrides) -> Result<Self, CliError> {
        if let Some(name) = self.preset.take() {
            let base = preset(&name)?;
            self.problem = self.problem.or(base.problem);
            self.solver = self.solver.or(base.solver);
            self.alpha = self.alpha.or(base.alpha);
            self.lambda = self.lambda.or(base.lambda);
            self.budget = self.budget.or(base.budget);
            self.max_iters = self.max_iters.or(base.max_iters);
            self.tol = self.tol.or(base.tol);
            self.noise = self.noise.or(base.noise);
            self.grid = self.grid.or(base.grid);
        }
        if let Some(kind) = overrides.solver {
            // switching solver kind drops stale solver-specific parameters
            let same = self.solver.as_ref().map(|s| s.name) == Some(kind);
            if !same {
                self.solver = Some(SolverEntry::bare(kind));
            }
        }
        if let Some(solver) = &mut self.solver {
            if let Some(m) = overrides.memory {
                solver.memory_m = Some(m);
            }
            if let Some(n) = overrides.ncg {
                solver.n_cg = Some(n);
            }
        }
        if let Some(seed) = overrides.seed {
            if let Some(noise) = &mut self.noise {
                noise.seed = seed;
            }
        }
        if let Some(budget) = overrides.budget {
            self.budget = Some(budget);
        }
        if let Some(lambda) = overrides.lambda {
            self.lambda = Some(lambda);
        }
        if let Some(alpha) = overrides.alpha {
            self.alpha = Some(alpha);
        }
        Ok(self)
    }

    fn require<T: Copy>(field: Option<T>, name: &str) -> Result<T, CliError> {
        field.ok_or_else(|| CliError::Config(format!("missing required field '{name}'")))
    }

    fn validate_shared(&self) -> Result<(), CliError> {
        let problem = Self::require(self.problem, "problem")?;
        if let Some(budget) = self.budget {
            if budget == 0 {
                return Err(CliError::Config(
                    "'budget' must be positive (omit it for an unlimited run)".into(),
                ));
            }
        }
        let max_iters = Self::require(self.max_iters, "max_iters")?;
        if max_iters == 0 {
            return Err(CliError::Config("'max_iters' must be at least 1".into()));
        }
        let tol = Self::require(self.tol, "tol")?;
        if !(tol >= 0.0 && tol.is_finite()) {
            return Err(CliError::Config(format!(
                "'tol' must be nonnegative and finite, got {tol}"
            )));
        }
        match problem {
            Problem::Custom => {
                if self.custom.is_none() {
                    return Err(CliError::Config(
                        "problem 'custom' requires the 'custom' section".into(),
                    ));
                }
                if self.noise.is_some() {
                    return Err(CliError::Config(
                        "problem 'custom' takes data from files; remove 'noise'".into(),
                    ));
                }
                if self.grid.is_some() {
                    return Err(CliError::Config(
                        "problem 'custom' takes operators from files; remove 'grid'".into(),
                    ));
                }
            }
            synthetic => {
                if self.custom.is_some() {
                    return Err(CliError::Config(format!(
                        "'custom' section is only for problem 'custom', not '{}'",
                        synthetic.tag()
                    )));
                }
                let noise = self
                    .noise
                    .as_ref()
                    .ok_or_else(|| CliError::Config("missing required field 'noise'".into()))?;
                if !(noise.sigma_rel >= 0.0 && noise.sigma_rel.is_finite()) {
                    return Err(CliError::Config(format!(
                        "'noise.sigma_rel' must be nonnegative, got {}",
                        noise.sigma_rel
                    )));
                }
                if !(0.0..=1.0).contains(&noise.mute_fraction) {
                    return Err(CliError::Config(format!(
                        "'noise.mute_fraction' must lie in [0, 1], got {}",
                        noise.mute_fraction
                    )));
                }
                let grid = self
                    .grid
                    .as_ref()
                    .ok_or_else(|| CliError::Config("missing required field 'grid'".into()))?;
                grid.validate_for(synthetic)?;
            }
        }
        Ok(())
    }

    fn validate_solver_entry(&self, entry: &SolverEntry, context: &str) -> Result<(), CliError> {
        entry.validate(context)?;
        let problem = self.problem.expect("validated");
        match entry.name {
            SolverKind::ScdMm => {
                let custom = self.custom.as_ref().ok_or_else(|| {
                    CliError::Config(format!(
                        "{context}: solver 'scd-mm' solves constrained problems; use problem \
                         'custom' with a 'constraint' file"
                    ))
                })?;
                if custom.constraint.is_none() {
                    return Err(CliError::Config(format!(
                        "{context}: solver 'scd-mm' requires 'custom.constraint'"
                    )));
                }
                if self.alpha.is_some() {
                    return Err(CliError::Config(format!(
                        "{context}: solver 'scd-mm' fixes the data weight to 1; remove 'alpha'"
                    )));
                }
            }
            SolverKind::Ista | SolverKind::Fista => {
                let b_is_identity = match problem {
                    Problem::Spikes1d => true,
                    Problem::Custom => matches!(
                        self.custom.as_ref().map(|c| &c.b_op),
                        Some(CustomBOp::Identity)
                    ),
                    _ => false,
                };
                if !b_is_identity {
                    return Err(CliError::Config(format!(
                        "{context}: '{}' applies to the L1 problem only (identity \
                         regularization operator); problem '{}' uses a gradient",
                        entry.name.tag(),
                        problem.tag()
                    )));
                }
                if self.lambda.is_some() {
                    log::warn!(
                        "{context}: '{}' does not use 'lambda'; the value is ignored",
                        entry.name.tag()
                    );
                }
            }
            _ => {}
        }
        if entry.name != SolverKind::ScdMm {
            let alpha = Self::require(self.alpha, "alpha")?;
            if !(alpha > 0.0 && alpha.is_finite()) {
                return Err(CliError::Config(format!(
                    "'alpha' must be positive and finite, got {alpha}"
                )));
            }
        }
        if entry.name.needs_lambda() && entry.name != SolverKind::ScdMm {
            let lambda = Self::require(self.lambda, "lambda")?;
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(CliError::Config(format!(
                    "'lambda' must be positive and finite, got {lambda}"
                )));
            }
        }
        if entry.name == SolverKind::ScdMm {
            let lambda = Self::require(self.lambda, "lambda")?;
            if !(lambda > 0.0 && lambda.is_finite()) {
                return Err(CliError::Config(format!(
                    "'lambda' must be positive and finite, got {lambda}"
                )));
            }
        }
        Ok(())
    }

    /// Validates the config for `run`: exactly one solver with exactly its
    /// own parameters.
    pub fn validated_for_run(self) -> Result<Self, CliError> {
        self.validate_shared()?;
        if self.solvers.is_some() {
            return Err(CliError::Config(
                "'solvers' is for the compare command; 'run' takes a single 'solver'".into(),
            ));
        }
        let entry = self
            .solver
            .clone()
            .ok_or_else(|| CliError::Config("missing required field 'solver'".into()))?;
        self.validate_solver_entry(&entry, "solver")?;
        Ok(self)
    }

    /// Validates the config for `compare`: at least two solver entries over
    /// one shared problem instance.
    pub fn validated_for_compare(self) -> Result<Self, CliError> {
        self.validate_shared()?;
        let entries = self
            .solvers
            .clone()
            .ok_or_else(|| CliError::Config("compare requires a 'solvers' list".into()))?;
        if entries.len() < 2 {
            return Err(CliError::Config(format!(
                "compare needs at least 2 solver entries, got {}",
                entries.len()
            )));
        }
        for (i, entry) in entries.iter().enumerate() {
            self.validate_solver_entry(entry, &format!("solvers[{i}]"))?;
        }
        let mut tags: Vec<String> = entries.iter().map(|e| e.tag()).collect();
        tags.sort();
        tags.dedup();
        if tags.len() != entries.len() {
            return Err(CliError::Config(
                "duplicate solver entries in 'solvers'".into(),
            ));
        }
        Ok(self)
    }

    /// Lighter validation for `cond`: only the operator geometry matters.
    pub fn validated_for_cond(self) -> Result<Self, CliError> {
        let problem = Self::require(self.problem, "problem")?;
        let alpha = Self::require(self.alpha, "alpha")?;
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(CliError::Config(format!(
                "'alpha' must be positive and finite, got {alpha}"
            )));
        }
        if let Some(lambda) = self.lambda {
            if !(lambda >= 0.0 && lambda.is_finite()) {
                return Err(CliError::Config(format!(
                    "'lambda' must be nonnegative and finite, got {lambda}"
                )));
            }
        }
        match problem {
            Problem::Custom => {
                if self.custom.is_none() {
                    return Err(CliError::Config(
                        "problem 'custom' requires the 'custom' section".into(),
                    ));
                }
            }
            synthetic => {
                let grid = self
                    .grid
                    .as_ref()
                    .ok_or_else(|| CliError::Config("missing required field 'grid'".into()))?;
                grid.validate_for(synthetic)?;
            }
        }
        Ok(self)
    }

    pub fn noise_seed(&self) -> Option<u64> {
        self.noise.as_ref().map(|n| n.seed)
    }
}

impl GridConfig {
    fn validate_for(&self, problem: Problem) -> Result<(), CliError> {
        let need = |ok: bool, name: &str| -> Result<(), CliError> {
            if !ok {
                return Err(CliError::Config(format!(
                    "problem '{}' requires 'grid.{name}'",
                    problem.tag()
                )));
            }
            Ok(())
        };
        let forbid = |set: bool, name: &str| -> Result<(), CliError> {
            if set {
                return Err(CliError::Config(format!(
                    "problem '{}' does not take 'grid.{name}'",
                    problem.tag()
                )));
            }
            Ok(())
        };
        match problem {
            Problem::Denoise2d => {
                need(self.n_side.is_some(), "n_side")?;
                forbid(self.n.is_some(), "n")?;
                forbid(self.depth.is_some(), "depth")?;
                forbid(self.length.is_some(), "length")?;
                forbid(self.half_width.is_some(), "half_width")?;
                forbid(self.scale.is_some(), "scale")?;
                if self.n_side.unwrap() < 10 {
                    return Err(CliError::Config("'grid.n_side' must be at least 10".into()));
                }
            }
            Problem::Spikes1d => {
                need(self.n.is_some(), "n")?;
                need(self.depth.is_some(), "depth")?;
                need(self.length.is_some(), "length")?;
                need(self.scale.is_some(), "scale")?;
                forbid(self.n_side.is_some(), "n_side")?;
                forbid(self.half_width.is_some(), "half_width")?;
                if self.n.unwrap() < 16 {
                    return Err(CliError::Config("'grid.n' must be at least 16".into()));
                }
            }
            Problem::Pressure2d => {
                need(self.n_side.is_some(), "n_side")?;
                need(self.depth.is_some(), "depth")?;
                need(self.half_width.is_some(), "half_width")?;
                need(self.scale.is_some(), "scale")?;
                forbid(self.n.is_some(), "n")?;
                forbid(self.length.is_some(), "length")?;
                if self.n_side.unwrap() < 10 {
                    return Err(CliError::Config("'grid.n_side' must be at least 10".into()));
                }
            }
            Problem::Custom => unreachable!("custom problems carry no grid"),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_expansion_with_overrides() {
        let cfg = ExperimentConfig::from_json(r#"{"preset": "spikes", "lambda": 0.1}"#).unwrap();
        let resolved = cfg
            .resolve(&Overrides {
                budget: Some(200),
                ..Overrides::default()
            })
            .unwrap();
        assert_eq!(resolved.problem, Some(Problem::Spikes1d));
        assert_eq!(resolved.lambda, Some(0.1)); // file beats preset
        assert_eq!(resolved.budget, Some(200)); // flag beats preset
        assert!(resolved.validated_for_run().is_ok());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = ExperimentConfig::from_json(r#"{"presett": "spikes"}"#).unwrap_err();
        assert!(err.to_string().contains("presett"));
    }

    #[test]
    fn zero_budget_is_rejected() {
        let cfg = ExperimentConfig::from_json(r#"{"preset": "denoise", "budget": 0}"#).unwrap();
        let err = cfg
            .resolve(&Overrides::default())
            .unwrap()
            .validated_for_run()
            .unwrap_err();
        assert!(err.to_string().contains("budget"));
    }

    #[test]
    fn solver_specific_parameters_are_strict() {
        // rcg without n_cg
        let cfg = ExperimentConfig::from_json(
            r#"{"preset": "denoise", "solver": {"name": "rcg"}}"#,
        )
        .unwrap();
        let err = cfg
            .resolve(&Overrides::default())
            .unwrap()
            .validated_for_run()
            .unwrap_err();
        assert!(err.to_string().contains("n_cg"));

        // ccd with memory_m
        let cfg = ExperimentConfig::from_json(
            r#"{"preset": "denoise", "solver": {"name": "ccd", "memory_m": 10}}"#,
        )
        .unwrap();
        let err = cfg
            .resolve(&Overrides::default())
            .unwrap()
            .validated_for_run()
            .unwrap_err();
        assert!(err.to_string().contains("memory_m"));
    }

    #[test]
    fn fista_rejected_on_tv_problems() {
        let cfg = ExperimentConfig::from_json(
            r#"{"preset": "denoise", "solver": {"name": "fista"}}"#,
        )
        .unwrap();
        let err = cfg
            .resolve(&Overrides::default())
            .unwrap()
            .validated_for_run()
            .unwrap_err();
        assert!(err.to_string().contains("L1"));
    }

    #[test]
    fn solver_flag_override_switches_kind() {
        let cfg = ExperimentConfig::from_json(r#"{"preset": "spikes"}"#).unwrap();
        let resolved = cfg
            .resolve(&Overrides {
                solver: Some(SolverKind::Rcg),
                ncg: Some(5),
                ..Overrides::default()
            })
            .unwrap();
        let validated = resolved.validated_for_run().unwrap();
        let solver = validated.solver.unwrap();
        assert_eq!(solver.name, SolverKind::Rcg);
        assert_eq!(solver.n_cg, Some(5));
        assert_eq!(solver.memory_m, None); // preset's lmccd memory dropped
    }

    #[test]
    fn compare_requires_two_entries() {
        let cfg = ExperimentConfig::from_json(
            r#"{"preset": "spikes", "solvers": [{"name": "lmccd", "memory_m": 100}]}"#,
        )
        .unwrap();
        let err = cfg
            .resolve(&Overrides::default())
            .unwrap()
            .validated_for_compare()
            .unwrap_err();
        assert!(err.to_string().contains("at least 2"));
    }

    #[test]
    fn resolved_config_round_trips_through_json() {
        let cfg = ExperimentConfig::from_json(r#"{"preset": "pressure"}"#)
            .unwrap()
            .resolve(&Overrides::default())
            .unwrap();
        let text = serde_json::to_string_pretty(&cfg).unwrap();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.alpha, cfg.alpha);
        assert_eq!(back.problem, cfg.problem);
        assert!(back.preset.is_none());
    }
}

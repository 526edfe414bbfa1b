//! Builds concrete problem instances (operators, truth, data) from a
//! validated configuration.

use std::path::Path;

use ccd_core::harness::{blocky_truth, make_noise, spikes_truth, NoiseSpec};
use ccd_core::operators::{
    dense_operator, diff1d, dilat1d_kernel, grad2d_aniso, reservoir2d_kernel, IdentityOperator,
    LinearOperator,
};

use crate::artifacts::read_f64;
use crate::config::{CustomBOp, ExperimentConfig, Problem};
use crate::CliError;

pub struct ProblemSetup {
    pub a_op: Box<dyn LinearOperator>,
    pub b_op: Box<dyn LinearOperator>,
    /// Observed (noisy) data.
    pub d: Vec<f64>,
    /// Reference model when known.
    pub truth: Option<Vec<f64>>,
    /// Constraint vector for the constrained solver.
    pub constraint: Option<Vec<f64>>,
    /// Model grid shape for image export, `(ny, nx)`.
    pub model_grid: Option<(usize, usize)>,
    /// Data grid shape for image export, `(ny, nx)`.
    pub data_grid: Option<(usize, usize)>,
}

impl ProblemSetup {
    pub fn build(config: &ExperimentConfig) -> Result<Self, CliError> {
        let problem = config.problem.expect("config validated");
        match problem {
            Problem::Denoise2d => {
                let grid = config.grid.as_ref().expect("validated");
                let noise_cfg = config.noise.as_ref().expect("validated");
                let n_side = grid.n_side.expect("validated");
                let truth = blocky_truth(n_side)?;
                let noise = make_noise(
                    &[n_side, n_side],
                    &NoiseSpec {
                        sigma_rel: noise_cfg.sigma_rel,
                        mute_fraction: noise_cfg.mute_fraction,
                        seed: noise_cfg.seed,
                    },
                    &truth,
                )?;
                let d: Vec<f64> = truth.iter().zip(&noise).map(|(t, n)| t + n).collect();
                Ok(Self {
                    a_op: Box::new(IdentityOperator::new(n_side * n_side)),
                    b_op: Box::new(grad2d_aniso(n_side, n_side)?),
                    d,
                    truth: Some(truth),
                    constraint: None,
                    model_grid: Some((n_side, n_side)),
                    data_grid: Some((n_side, n_side)),
                })
            }
            Problem::Spikes1d => {
                let grid = config.grid.as_ref().expect("validated");
                let noise_cfg = config.noise.as_ref().expect("validated");
                let n = grid.n.expect("validated");
                let kernel = dilat1d_kernel(
                    n,
                    n,
                    grid.depth.expect("validated"),
                    grid.length.expect("validated"),
                    grid.scale.expect("validated"),
                )?;
                let truth = spikes_truth(n)?;
                let clean = kernel.apply_vec(&truth);
                let noise = make_noise(
                    &[n],
                    &NoiseSpec {
                        sigma_rel: noise_cfg.sigma_rel,
                        mute_fraction: noise_cfg.mute_fraction,
                        seed: noise_cfg.seed,
                    },
                    &clean,
                )?;
                let d: Vec<f64> = clean.iter().zip(&noise).map(|(c, x)| c + x).collect();
                Ok(Self {
                    a_op: Box::new(kernel),
                    b_op: Box::new(IdentityOperator::new(n)),
                    d,
                    truth: Some(truth),
                    constraint: None,
                    model_grid: None,
                    data_grid: None,
                })
            }
            Problem::Pressure2d => {
                let grid = config.grid.as_ref().expect("validated");
                let noise_cfg = config.noise.as_ref().expect("validated");
                let n_side = grid.n_side.expect("validated");
                let kernel = reservoir2d_kernel(
                    n_side,
                    grid.depth.expect("validated"),
                    grid.half_width.expect("validated"),
                    grid.scale.expect("validated"),
                )?;
                let truth = blocky_truth(n_side)?;
                let clean = kernel.apply_vec(&truth);
                let noise = make_noise(
                    &[n_side, n_side],
                    &NoiseSpec {
                        sigma_rel: noise_cfg.sigma_rel,
                        mute_fraction: noise_cfg.mute_fraction,
                        seed: noise_cfg.seed,
                    },
                    &clean,
                )?;
                let d: Vec<f64> = clean.iter().zip(&noise).map(|(c, x)| c + x).collect();
                Ok(Self {
                    a_op: Box::new(kernel),
                    b_op: Box::new(grad2d_aniso(n_side, n_side)?),
                    d,
                    truth: Some(truth),
                    constraint: None,
                    model_grid: Some((n_side, n_side)),
                    data_grid: Some((n_side, n_side)),
                })
            }
            Problem::Custom => Self::build_custom(config),
        }
    }

    fn build_custom(config: &ExperimentConfig) -> Result<Self, CliError> {
        let custom = config.custom.as_ref().expect("validated");
        let (a_dims, a_data) = read_f64(Path::new(&custom.a_matrix))?;
        if a_dims.len() != 2 {
            return Err(CliError::Config(format!(
                "'custom.a_matrix' must be a 2-D matrix file, got {} dimension(s)",
                a_dims.len()
            )));
        }
        let (rows, cols) = (a_dims[0], a_dims[1]);
        let a_op = dense_operator(rows, cols, a_data)?;

        let (d_dims, d) = read_f64(Path::new(&custom.data))?;
        if d_dims.len() != 1 || d.len() != rows {
            return Err(CliError::Config(format!(
                "'custom.data' must be a vector of length {rows} (matrix rows), got shape {d_dims:?}"
            )));
        }

        let b_op: Box<dyn LinearOperator> = match &custom.b_op {
            CustomBOp::Identity => Box::new(IdentityOperator::new(cols)),
            CustomBOp::Diff1d => Box::new(diff1d(cols)?),
            CustomBOp::Grad2d { nx, ny } => {
                if nx * ny != cols {
                    return Err(CliError::Config(format!(
                        "'custom.b_op' grad2d grid {nx}x{ny} does not match model length {cols}"
                    )));
                }
                Box::new(grad2d_aniso(*nx, *ny)?)
            }
        };

        let truth = match &custom.truth {
            Some(path) => {
                let (dims, t) = read_f64(Path::new(path))?;
                if dims.iter().product::<usize>() != cols {
                    return Err(CliError::Config(format!(
                        "'custom.truth' must have {cols} entries, got shape {dims:?}"
                    )));
                }
                Some(t)
            }
            None => None,
        };

        let constraint = match &custom.constraint {
            Some(path) => {
                let (dims, c) = read_f64(Path::new(path))?;
                if dims.len() != 1 || c.len() != b_op.n_out() {
                    return Err(CliError::Config(format!(
                        "'custom.constraint' must be a vector of length {} (B rows), got shape {dims:?}",
                        b_op.n_out()
                    )));
                }
                Some(c)
            }
            None => None,
        };

        Ok(Self {
            a_op: Box::new(a_op),
            b_op,
            d,
            truth,
            constraint,
            model_grid: match &custom.b_op {
                CustomBOp::Grad2d { nx, ny } => Some((*ny, *nx)),
                _ => None,
            },
            data_grid: None,
        })
    }
}

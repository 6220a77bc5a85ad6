//! Joint disturbance density, evaluated as an unnormalized log-density.
//!
//! Models are block products over a partition of the coordinates:
//! independent zero-mean Gaussians, plus an optional correlated
//! heavy-tailed pair with density proportional to
//!
//! ```text
//!   [1 + (s (u_f - c u_s))^e]^-1 · [1 + (s (u_s - c u_f))^e]^-1
//! ```
//!
//! Normalizing constants are never needed: the Metropolis-Hastings
//! acceptance ratio only consumes log-density differences, and the
//! heavy-tailed normalizer has no closed form anyway. Every block density
//! is strictly positive, so the log-density is finite everywhere.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::ReducedNetwork;

#[derive(Debug, Error)]
pub enum DensityError {
    #[error("blocks must partition the coordinate set: {0}")]
    BadPartition(String),
    #[error("standard deviations must be strictly positive")]
    BadStdDev,
    #[error("heavy-tailed exponent must be even and >= 2")]
    BadExponent,
    #[error("heavy-tailed scale must be strictly positive")]
    BadScale,
    #[error("dimension mismatch: model is {expected}-dimensional, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite disturbance component")]
    NonFinite,
    #[error("case-study model needs at least 3 generators, got {0}")]
    TooFewGenerators(usize),
}

/// One factor of the joint density. Coordinate indices are 0-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum DensityBlock {
    IndependentGaussian {
        indices: Vec<usize>,
        std_devs: Vec<f64>,
    },
    HeavyTailedPair {
        first: usize,
        second: usize,
        scale: f64,
        exponent: u32,
        coupling: f64,
    },
}

/// Product density over a partition of the n coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DensityModel {
    dim: usize,
    blocks: Vec<DensityBlock>,
}

impl DensityModel {
    pub fn new(dim: usize, blocks: Vec<DensityBlock>) -> Result<Self, DensityError> {
        let mut covered = vec![false; dim];
        let mut cover = |i: usize| -> Result<(), DensityError> {
            if i >= dim {
                return Err(DensityError::BadPartition(format!(
                    "index {i} out of range for dimension {dim}"
                )));
            }
            if covered[i] {
                return Err(DensityError::BadPartition(format!("index {i} covered twice")));
            }
            covered[i] = true;
            Ok(())
        };
        for block in &blocks {
            match block {
                DensityBlock::IndependentGaussian { indices, std_devs } => {
                    if indices.len() != std_devs.len() {
                        return Err(DensityError::BadPartition(
                            "one std-dev per Gaussian index required".into(),
                        ));
                    }
                    if std_devs.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
                        return Err(DensityError::BadStdDev);
                    }
                    for &i in indices {
                        cover(i)?;
                    }
                }
                DensityBlock::HeavyTailedPair { first, second, scale, exponent, .. } => {
                    if first == second {
                        return Err(DensityError::BadPartition(
                            "heavy-tailed pair needs two distinct indices".into(),
                        ));
                    }
                    if !((*scale) > 0.0) || !scale.is_finite() {
                        return Err(DensityError::BadScale);
                    }
                    if *exponent < 2 || exponent % 2 != 0 {
                        return Err(DensityError::BadExponent);
                    }
                    cover(*first)?;
                    cover(*second)?;
                }
            }
        }
        if let Some(missing) = covered.iter().position(|&c| !c) {
            return Err(DensityError::BadPartition(format!("index {missing} uncovered")));
        }
        Ok(Self { dim, blocks })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[DensityBlock] {
        &self.blocks
    }

    /// Unnormalized log-density. Finite for every finite input.
    pub fn log_density(&self, u: &DVector<f64>) -> Result<f64, DensityError> {
        self.check(u)?;
        let mut total = 0.0;
        for block in &self.blocks {
            match block {
                DensityBlock::IndependentGaussian { indices, std_devs } => {
                    for (&i, &s) in indices.iter().zip(std_devs) {
                        let z = u[i] / s;
                        total -= 0.5 * z * z;
                    }
                }
                DensityBlock::HeavyTailedPair { first, second, scale, exponent, coupling } => {
                    let a = scale * (u[*first] - coupling * u[*second]);
                    let b = scale * (u[*second] - coupling * u[*first]);
                    total -= (1.0 + a.powi(*exponent as i32)).ln();
                    total -= (1.0 + b.powi(*exponent as i32)).ln();
                }
            }
        }
        Ok(total)
    }

    /// Analytic gradient of the log-density.
    pub fn log_density_grad(&self, u: &DVector<f64>) -> Result<DVector<f64>, DensityError> {
        self.check(u)?;
        let mut g = DVector::zeros(self.dim);
        for block in &self.blocks {
            match block {
                DensityBlock::IndependentGaussian { indices, std_devs } => {
                    for (&i, &s) in indices.iter().zip(std_devs) {
                        g[i] -= u[i] / (s * s);
                    }
                }
                DensityBlock::HeavyTailedPair { first, second, scale, exponent, coupling } => {
                    let e = *exponent as i32;
                    let a = scale * (u[*first] - coupling * u[*second]);
                    let b = scale * (u[*second] - coupling * u[*first]);
                    // d/da of -ln(1 + a^e), chain rule through the scale.
                    let da = -(e as f64) * scale * a.powi(e - 1) / (1.0 + a.powi(e));
                    let db = -(e as f64) * scale * b.powi(e - 1) / (1.0 + b.powi(e));
                    g[*first] += da - coupling * db;
                    g[*second] += db - coupling * da;
                }
            }
        }
        Ok(g)
    }

    fn check(&self, u: &DVector<f64>) -> Result<(), DensityError> {
        if u.len() != self.dim {
            return Err(DensityError::DimensionMismatch { expected: self.dim, got: u.len() });
        }
        if u.iter().any(|v| !v.is_finite()) {
            return Err(DensityError::NonFinite);
        }
        Ok(())
    }
}

/// Case-study mixture: a correlated heavy-tailed pair on the first two
/// generators and independent Gaussians with σ_j = P_nom,j / 65 (p.u. on
/// the 100 MVA base) on the rest.
pub fn make_case_study_model(net: &ReducedNetwork) -> Result<DensityModel, DensityError> {
    if net.n < 3 {
        return Err(DensityError::TooFewGenerators(net.n));
    }
    let indices: Vec<usize> = (2..net.n).collect();
    let std_devs: Vec<f64> = indices.iter().map(|&j| net.p_nom_mw[j] / 100.0 / 65.0).collect();
    DensityModel::new(
        net.n,
        vec![
            DensityBlock::HeavyTailedPair {
                first: 0,
                second: 1,
                scale: 30.0,
                exponent: 4,
                coupling: 0.5,
            },
            DensityBlock::IndependentGaussian { indices, std_devs },
        ],
    )
}

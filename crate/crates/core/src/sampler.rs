//! Conditional sampling on the complement of a safe region.
//!
//! A symmetric random-walk Metropolis chain is modified so that any
//! proposal ray crossing the region is translated through it by the chord
//! length ("ghost" proposal): with current state X outside K, proposal
//! Y = X + σZ and direction φ = (Y-X)/|Y-X|, a ray hit (t₁, t₂) turns the
//! proposal into Z = Y + (t₂-t₁)φ whenever |Y-X| >= t₁. The contraction
//! `T_x` of [`crate::region::ghost_map_t`] inverts this shift, the
//! realized proposal density is
//!
//! ```text
//!   q_K(x, x + rφ) = q(lφ) (l/r)^{n-1} 1_{K^c}(x + rφ),   l = outside length,
//! ```
//!
//! and q_K is symmetric, so the acceptance probability reduces to the
//! plain density ratio π(Z)/π(X) restricted to the complement. The chain
//! therefore has stationary density π·1_{K^c}/π(K^c) and hops across the
//! region as if it were absent.
//!
//! The shift is applied only when the proposal lands at or beyond the
//! entry point (|Y-X| >= t₁); near-side proposals pass through unshifted,
//! which is exactly what keeps T_x inverse to the mechanism.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::{DensityError, DensityModel};
use crate::region::{self, Polytope, Region, RegionError};

#[derive(Debug, Error)]
pub enum SamplerError {
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Density(#[from] DensityError),
    #[error("region covers the whole space; its complement is empty")]
    NoComplement,
    #[error("no point outside the region found after {0} doublings")]
    SearchFailed(usize),
    #[error("initial state lies inside the region")]
    InitialInsideRegion,
    #[error("chain needs an initial state outside the region")]
    MissingInitialState,
    #[error("proposal became non-finite")]
    NonFiniteProposal,
    #[error("sampler configuration: {0}")]
    BadConfig(String),
}

/// Chain configuration. `seed` plus `stream` fully determine the run;
/// concurrent chains share the seed and use their chain index as stream.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Initial proposal scale σ (std-dev per coordinate).
    pub sigma0: f64,
    /// Acceptance-rate target for burn-in adaptation.
    pub target_acceptance: f64,
    /// Half-width of the acceptable acceptance band.
    pub acceptance_band: f64,
    /// Adaptation window length in steps.
    pub adapt_window: usize,
    pub burn_in: usize,
    pub samples: usize,
    pub seed: u64,
    pub stream: u64,
    /// Starting point; when absent a point outside the region is searched
    /// along the tightest constraint normal.
    pub initial_state: Option<Vec<f64>>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            sigma0: 1e-3f64.sqrt(),
            target_acceptance: 0.15,
            acceptance_band: 0.03,
            adapt_window: 200,
            burn_in: 10_000,
            samples: 100_000,
            seed: 1,
            stream: 0,
            initial_state: None,
        }
    }
}

impl SamplerConfig {
    fn validate(&self) -> Result<(), SamplerError> {
        if !(self.sigma0 > 0.0) || !self.sigma0.is_finite() {
            return Err(SamplerError::BadConfig("sigma0 must be positive".into()));
        }
        if !(self.target_acceptance > 0.0 && self.target_acceptance < 1.0) {
            return Err(SamplerError::BadConfig("target acceptance must lie in (0,1)".into()));
        }
        if self.adapt_window == 0 {
            return Err(SamplerError::BadConfig("adaptation window must be positive".into()));
        }
        Ok(())
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Current chain position and counters.
#[derive(Debug, Clone)]
pub struct ChainState {
    pub x: DVector<f64>,
    pub log_pi: f64,
    pub steps: u64,
    pub accepted: u64,
}

/// Everything a finished chain reports.
#[derive(Debug, Clone)]
pub struct ChainRun {
    /// Retained post-burn-in samples, all outside the region.
    pub samples: Vec<DVector<f64>>,
    /// Acceptance rate over the retained phase.
    pub acceptance_rate: f64,
    pub burn_in_acceptance: f64,
    /// Final (frozen) proposal scale.
    pub sigma: f64,
    /// σ at the end of each adaptation window.
    pub sigma_history: Vec<f64>,
    /// Whether the last burn-in window hit the target band.
    pub tuned: bool,
    pub seed: u64,
    pub stream: u64,
    pub initial_state: DVector<f64>,
}

/// One symmetric random-walk proposal y = x + σ z, z ~ N(0, I).
pub fn srwm_propose(x: &DVector<f64>, sigma: f64, rng: &mut ChaCha8Rng) -> DVector<f64> {
    DVector::from_iterator(
        x.len(),
        x.iter().map(|&xi| xi + sigma * rng.sample::<f64, _>(StandardNormal)),
    )
}

/// The ghost proposal density q_K(x, y) for an isotropic Gaussian
/// proposal N(0, σ² I_n).
pub fn ghost_density<R: Region + ?Sized>(
    region: &R,
    x: &DVector<f64>,
    y: &DVector<f64>,
    sigma: f64,
) -> Result<f64, SamplerError> {
    if region.contains(x)? {
        return Err(RegionError::PointInside.into());
    }
    if region.contains(y)? {
        return Ok(0.0);
    }
    let n = x.len() as f64;
    let norm = (2.0 * std::f64::consts::PI * sigma * sigma).powf(-0.5 * n);
    let diff = y - x;
    let r = diff.norm();
    if r == 0.0 {
        return Ok(norm); // (l/r)^{n-1} -> 1 as r -> 0
    }
    let phi = diff / r;
    let l = region::outside_length(region, x, r, &phi)?;
    Ok(norm * (-0.5 * l * l / (sigma * sigma)).exp() * (l / r).powi(x.len() as i32 - 1))
}

/// Search a point strictly outside the region (margin >= 1e-6) by walking
/// out along the normal of the half-space with the smallest slack.
pub fn find_initial_state(region: &Polytope) -> Result<DVector<f64>, SamplerError> {
    const MARGIN: f64 = 1e-6;
    const MAX_DOUBLINGS: usize = 100;
    let idx = region.min_slack_halfspace().ok_or(SamplerError::NoComplement)?;
    let hs = &region.halfspaces()[idx];
    let scale = hs.a.norm();
    let dir = &hs.a / scale;
    let mut t = hs.b / scale + MARGIN;
    for _ in 0..MAX_DOUBLINGS {
        let x = &dir * t;
        let worst = region
            .halfspaces()
            .iter()
            .map(|h| (h.a.dot(&x) - h.b) / h.a.norm())
            .fold(f64::NEG_INFINITY, f64::max);
        if worst >= MARGIN && !region.contains(&x)? {
            return Ok(x);
        }
        t *= 2.0;
    }
    Err(SamplerError::SearchFailed(MAX_DOUBLINGS))
}

/// One draw of the ghost proposal mechanism.
#[derive(Debug, Clone)]
pub struct GhostProposal {
    /// The raw random-walk proposal Y.
    pub proposal: DVector<f64>,
    /// The effective proposal Z, translated through the region when the
    /// ray hits it at or before |Y - X|.
    pub shifted: DVector<f64>,
    pub was_shifted: bool,
}

/// Draw Y ~ N(x, σ²I) and translate it through the region along the
/// proposal ray.
pub fn ghost_propose<R: Region + ?Sized>(
    x: &DVector<f64>,
    region: &R,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<GhostProposal, SamplerError> {
    let (y, phi, r) = loop {
        let y = srwm_propose(x, sigma, rng);
        let diff = &y - x;
        let r = diff.norm();
        if r > 0.0 {
            break (y, diff / r, r);
        }
        // A zero-length proposal has probability zero; redraw.
    };

    let hit = region.ray_clip(x, &phi)?;
    let (z, was_shifted) = match hit {
        Some(h) if r >= h.t_entry => (&y + &phi * h.chord(), true),
        _ => (y.clone(), false),
    };
    if z.iter().any(|v| !v.is_finite()) {
        return Err(SamplerError::NonFiniteProposal);
    }
    Ok(GhostProposal { proposal: y, shifted: z, was_shifted })
}

/// Advance the chain one ghost step. Returns whether the proposal was
/// accepted.
pub fn ghost_step<R: Region + ?Sized>(
    state: &mut ChainState,
    region: &R,
    model: &DensityModel,
    sigma: f64,
    rng: &mut ChaCha8Rng,
) -> Result<bool, SamplerError> {
    let prop = ghost_propose(&state.x, region, sigma, rng)?;
    let z = prop.shifted;

    state.steps += 1;
    if region.contains(&z)? {
        // Indicator zero: landing in K (or on its boundary) is rejected.
        return Ok(false);
    }
    #[cfg(debug_assertions)]
    if prop.was_shifted {
        let back = region::ghost_map_t(region, &state.x, &z)?;
        debug_assert!(
            (&back - &prop.proposal).norm() <= 1e-9,
            "ghost shift must invert through the contraction map"
        );
    }

    let log_pi_z = model.log_density(&z)?;
    let log_alpha = log_pi_z - state.log_pi;
    let accept = log_alpha >= 0.0 || rng.gen::<f64>().ln() <= log_alpha;
    if accept {
        state.x = z;
        state.log_pi = log_pi_z;
        state.accepted += 1;
    }
    Ok(accept)
}

struct BurnInResult {
    state: ChainState,
    sigma: f64,
    sigma_history: Vec<f64>,
    tuned: bool,
    acceptance: f64,
}

fn burn_in_phase<R: Region + ?Sized>(
    mut state: ChainState,
    region: &R,
    model: &DensityModel,
    config: &SamplerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<BurnInResult, SamplerError> {
    let mut sigma = config.sigma0;
    let mut sigma_history = vec![sigma];
    let mut window_rates: Vec<f64> = Vec::new();
    let mut window_accepts = 0usize;
    let mut window_steps = 0usize;
    let mut accepted_total = 0usize;
    for _ in 0..config.burn_in {
        if ghost_step(&mut state, region, model, sigma, rng)? {
            window_accepts += 1;
            accepted_total += 1;
        }
        window_steps += 1;
        if window_steps == config.adapt_window {
            let rate = window_accepts as f64 / window_steps as f64;
            window_rates.push(rate);
            if rate > config.target_acceptance + config.acceptance_band {
                sigma *= 1.1;
            } else if rate < config.target_acceptance - config.acceptance_band {
                sigma /= 1.1;
            }
            sigma_history.push(sigma);
            window_accepts = 0;
            window_steps = 0;
        }
    }
    // Settled when the recent windows average into the target band; a
    // single window is too noisy to judge by.
    let recent = window_rates.iter().rev().take(5).collect::<Vec<_>>();
    let tuned = if recent.is_empty() {
        config.burn_in == 0
    } else {
        let avg = recent.iter().copied().sum::<f64>() / recent.len() as f64;
        (avg - config.target_acceptance).abs() <= config.acceptance_band
    };
    if !tuned {
        log::warn!(
            "step-size adaptation did not settle in the target band; continuing with sigma = {sigma}"
        );
    }
    let acceptance = if config.burn_in > 0 {
        accepted_total as f64 / config.burn_in as f64
    } else {
        0.0
    };
    Ok(BurnInResult { state, sigma, sigma_history, tuned, acceptance })
}

fn initial_chain_state<R: Region + ?Sized>(
    region: &R,
    model: &DensityModel,
    config: &SamplerConfig,
) -> Result<ChainState, SamplerError> {
    let x0 = match &config.initial_state {
        Some(v) => DVector::from_column_slice(v),
        None => return Err(SamplerError::MissingInitialState),
    };
    if region.contains(&x0)? {
        return Err(SamplerError::InitialInsideRegion);
    }
    let log_pi = model.log_density(&x0)?;
    Ok(ChainState { x: x0, log_pi, steps: 0, accepted: 0 })
}

/// Burn-in (with step-size adaptation) only; returns the frozen σ.
pub fn tune_step_size<R: Region + ?Sized>(
    region: &R,
    model: &DensityModel,
    config: &SamplerConfig,
) -> Result<f64, SamplerError> {
    config.validate()?;
    let mut rng = config.rng();
    let state = initial_chain_state(region, model, config)?;
    let burn = burn_in_phase(state, region, model, config, &mut rng)?;
    Ok(burn.sigma)
}

/// Run one chain: burn-in with adaptation, then `samples` retained steps
/// at frozen σ. Deterministic given (seed, stream).
pub fn run_chain<R: Region + ?Sized>(
    region: &R,
    model: &DensityModel,
    config: &SamplerConfig,
) -> Result<ChainRun, SamplerError> {
    config.validate()?;
    let mut rng = config.rng();
    let state = initial_chain_state(region, model, config)?;
    let initial_state = state.x.clone();
    let burn = burn_in_phase(state, region, model, config, &mut rng)?;
    let mut state = burn.state;
    let sigma = burn.sigma;

    let mut samples = Vec::with_capacity(config.samples);
    let mut accepted = 0usize;
    for _ in 0..config.samples {
        if ghost_step(&mut state, region, model, sigma, &mut rng)? {
            accepted += 1;
        }
        debug_assert!(!region.contains(&state.x)?, "chain state must stay outside the region");
        samples.push(state.x.clone());
    }
    let acceptance_rate =
        if config.samples > 0 { accepted as f64 / config.samples as f64 } else { 0.0 };
    Ok(ChainRun {
        samples,
        acceptance_rate,
        burn_in_acceptance: burn.acceptance,
        sigma,
        sigma_history: burn.sigma_history,
        tuned: burn.tuned,
        seed: config.seed,
        stream: config.stream,
        initial_state,
    })
}

/// Run a chain on a polytope, searching an initial state when none is
/// configured.
pub fn run_polytope_chain(
    region: &Polytope,
    model: &DensityModel,
    config: &SamplerConfig,
) -> Result<ChainRun, SamplerError> {
    let mut config = config.clone();
    if config.initial_state.is_none() {
        let x0 = find_initial_state(region)?;
        config.initial_state = Some(x0.iter().copied().collect());
    }
    run_chain(region, model, &config)
}

/// Run `chains` independent chains concurrently; chain k uses RNG stream
/// `base.stream + k` of the shared seed.
pub fn run_polytope_chains(
    region: &Polytope,
    model: &DensityModel,
    base: &SamplerConfig,
    chains: usize,
) -> Result<Vec<ChainRun>, SamplerError> {
    if chains == 0 {
        return Err(SamplerError::BadConfig("chain count must be >= 1".into()));
    }
    let mut configs = Vec::with_capacity(chains);
    for k in 0..chains {
        let mut c = base.clone();
        c.stream = base.stream + k as u64;
        if c.initial_state.is_none() {
            let x0 = find_initial_state(region)?;
            c.initial_state = Some(x0.iter().copied().collect());
        }
        configs.push(c);
    }
    std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|c| scope.spawn(move || run_chain(region, model, c)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("chain thread panicked"))
            .collect()
    })
}

/// The diamond benchmark region `{ |x| + |y| <= half_width }`.
pub fn diamond_region(half_width: f64) -> Polytope {
    use crate::region::HalfSpace;
    use nalgebra::dvector;
    let hs = [
        dvector![1.0, 1.0],
        dvector![1.0, -1.0],
        dvector![-1.0, 1.0],
        dvector![-1.0, -1.0],
    ]
    .into_iter()
    .map(|a| HalfSpace { a, b: half_width, tag: None })
    .collect();
    Polytope::new(2, hs).expect("positive half-width")
}

/// The diamond benchmark target N(0, diag(4, 1)).
pub fn diamond_density() -> DensityModel {
    use crate::density::DensityBlock;
    DensityModel::new(
        2,
        vec![DensityBlock::IndependentGaussian { indices: vec![0, 1], std_devs: vec![2.0, 1.0] }],
    )
    .expect("valid benchmark density")
}

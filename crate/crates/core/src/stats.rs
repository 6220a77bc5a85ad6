//! Reduction of conditional samples to violation statistics: per-generator
//! violation probabilities, the multi-violation probability p_d, the mean
//! number of disconnections d̄ and the mean lost generation L̄, plus the
//! sensitivity sweep over the time discretization N.
//!
//! Standard errors are computed by batch means (50 contiguous batches by
//! default) so the chain autocorrelation is respected.

use std::collections::BTreeSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::density::DensityModel;
use crate::grid::ReducedNetwork;
use crate::region::{self, Polytope, Region};
use crate::sampler::{self, SamplerConfig, SamplerError};

pub const DEFAULT_BATCHES: usize = 50;

/// Stream-block stride between sweep entries, so each entry's chains get
/// a disjoint range of RNG streams.
pub const SWEEP_STREAM_STRIDE: u64 = 4096;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("sample {index} violates no constraint; it lies inside the region")]
    SampleInsideRegion { index: usize },
    #[error("per-node thresholds must match the node count")]
    BadThresholds,
    #[error(transparent)]
    Region(#[from] region::RegionError),
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

/// Violated-node record of one retained sample.
#[derive(Debug, Clone)]
pub struct ViolationRecord {
    pub sample_index: usize,
    pub nodes: BTreeSet<usize>,
    /// Earliest violated time index per node, when tags carry one.
    pub first_violation: Vec<(usize, usize)>,
}

/// Aggregate report for one chain run at one discretization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatsReport {
    /// Time discretization the region was built with.
    pub n_steps: usize,
    pub sample_count: usize,
    /// Conditional violation probability per generator, percent.
    pub per_generator_pct: Vec<f64>,
    pub per_generator_pct_se: Vec<f64>,
    /// Probability of more than one violated generator, percent.
    pub p_d_pct: f64,
    pub p_d_pct_se: f64,
    /// Mean violated-generator count per sample.
    pub mean_disconnections: f64,
    pub mean_disconnections_se: f64,
    /// Mean summed nominal output of violated generators, MW.
    pub mean_lost_mw: f64,
    pub mean_lost_mw_se: f64,
    pub acceptance_rate: f64,
    pub sigma: f64,
}

/// Violated node sets (with first-violation time indices) for every
/// sample, read off the region's tagged half-spaces.
pub fn violation_records(
    samples: &[DVector<f64>],
    region: &Polytope,
) -> Result<Vec<ViolationRecord>, StatsError> {
    if samples.is_empty() {
        return Err(StatsError::EmptySampleSet);
    }
    let mut records = Vec::with_capacity(samples.len());
    for (sample_index, u) in samples.iter().enumerate() {
        let mut nodes = BTreeSet::new();
        let mut first: Vec<(usize, usize)> = Vec::new();
        for hs in region.halfspaces() {
            let Some(tag) = hs.tag else { continue };
            if hs.a.dot(u) > hs.b + region::BOUNDARY_TOL {
                nodes.insert(tag.node);
                match first.iter_mut().find(|(n, _)| *n == tag.node) {
                    Some((_, t)) => *t = (*t).min(tag.time_index),
                    None => first.push((tag.node, tag.time_index)),
                }
            }
        }
        if nodes.is_empty() {
            return Err(StatsError::SampleInsideRegion { index: sample_index });
        }
        first.sort_unstable();
        records.push(ViolationRecord { sample_index, nodes, first_violation: first });
    }
    Ok(records)
}

/// Per-generator conditional violation probabilities in percent.
pub fn violation_table_from_sets(
    sets: &[BTreeSet<usize>],
    n: usize,
) -> Result<Vec<f64>, StatsError> {
    if sets.is_empty() {
        return Err(StatsError::EmptySampleSet);
    }
    let mut counts = vec![0usize; n];
    for s in sets {
        for &j in s {
            if j < n {
                counts[j] += 1;
            }
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| 100.0 * c as f64 / sets.len() as f64)
        .collect())
}

pub fn violation_table(samples: &[DVector<f64>], region: &Polytope) -> Result<Vec<f64>, StatsError> {
    let records = violation_records(samples, region)?;
    let sets: Vec<BTreeSet<usize>> = records.into_iter().map(|r| r.nodes).collect();
    violation_table_from_sets(&sets, region.dim())
}

/// (p_d, d̄, L̄): multi-violation fraction, mean violated count, mean lost
/// generation in MW.
pub fn multi_violation_stats_from_sets(
    sets: &[BTreeSet<usize>],
    p_nom_mw: &DVector<f64>,
) -> Result<(f64, f64, f64), StatsError> {
    if sets.is_empty() {
        return Err(StatsError::EmptySampleSet);
    }
    let n = sets.len() as f64;
    let multi = sets.iter().filter(|s| s.len() > 1).count() as f64 / n;
    let d_bar = sets.iter().map(|s| s.len() as f64).sum::<f64>() / n;
    let lost = sets
        .iter()
        .map(|s| s.iter().map(|&j| p_nom_mw[j]).sum::<f64>())
        .sum::<f64>()
        / n;
    Ok((multi, d_bar, lost))
}

pub fn multi_violation_stats(
    samples: &[DVector<f64>],
    region: &Polytope,
    p_nom_mw: &DVector<f64>,
) -> Result<(f64, f64, f64), StatsError> {
    let records = violation_records(samples, region)?;
    let sets: Vec<BTreeSet<usize>> = records.into_iter().map(|r| r.nodes).collect();
    multi_violation_stats_from_sets(&sets, p_nom_mw)
}

/// Batch-means standard error of the mean of a (possibly autocorrelated)
/// series.
pub fn batch_means_se(values: &[f64], batches: usize) -> f64 {
    let batches = batches.min(values.len()).max(1);
    let per = values.len() / batches;
    if per == 0 || batches < 2 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..batches)
        .map(|b| values[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (var / batches as f64).sqrt()
}

/// Full report over one run's retained samples.
pub fn build_report(
    samples: &[DVector<f64>],
    region: &Polytope,
    p_nom_mw: &DVector<f64>,
    n_steps: usize,
    acceptance_rate: f64,
    sigma: f64,
) -> Result<StatsReport, StatsError> {
    let records = violation_records(samples, region)?;
    let n = region.dim();
    let count = records.len();

    let mut per_gen = Vec::with_capacity(n);
    let mut per_gen_se = Vec::with_capacity(n);
    for j in 0..n {
        let series: Vec<f64> = records
            .iter()
            .map(|r| if r.nodes.contains(&j) { 100.0 } else { 0.0 })
            .collect();
        per_gen.push(series.iter().sum::<f64>() / count as f64);
        per_gen_se.push(batch_means_se(&series, DEFAULT_BATCHES));
    }

    let multi: Vec<f64> = records
        .iter()
        .map(|r| if r.nodes.len() > 1 { 100.0 } else { 0.0 })
        .collect();
    let counts: Vec<f64> = records.iter().map(|r| r.nodes.len() as f64).collect();
    let lost: Vec<f64> = records
        .iter()
        .map(|r| r.nodes.iter().map(|&j| p_nom_mw[j]).sum::<f64>())
        .collect();

    Ok(StatsReport {
        n_steps,
        sample_count: count,
        per_generator_pct: per_gen,
        per_generator_pct_se: per_gen_se,
        p_d_pct: multi.iter().sum::<f64>() / count as f64,
        p_d_pct_se: batch_means_se(&multi, DEFAULT_BATCHES),
        mean_disconnections: counts.iter().sum::<f64>() / count as f64,
        mean_disconnections_se: batch_means_se(&counts, DEFAULT_BATCHES),
        mean_lost_mw: lost.iter().sum::<f64>() / count as f64,
        mean_lost_mw_se: batch_means_se(&lost, DEFAULT_BATCHES),
        acceptance_rate,
        sigma,
    })
}

/// One sweep entry: the region, its chain runs and the merged report.
#[derive(Debug)]
pub struct SweepRun {
    pub n_steps: usize,
    pub polytope: Polytope,
    pub runs: Vec<sampler::ChainRun>,
    pub report: StatsReport,
}

impl SweepRun {
    /// Retained samples of all chains, concatenated in stream order.
    pub fn merged_samples(&self) -> Vec<DVector<f64>> {
        self.runs.iter().flat_map(|r| r.samples.iter().cloned()).collect()
    }
}

/// One region build + chain run + report per requested discretization N.
/// Sweep entry i shifts the RNG stream block by `i * SWEEP_STREAM_STRIDE`
/// of the shared base seed.
pub fn sensitivity_sweep_detailed(
    net: &ReducedNetwork,
    model: &DensityModel,
    n_list: &[usize],
    eps: f64,
    r_max: &[f64],
    config: &SamplerConfig,
    chains: usize,
) -> Result<Vec<SweepRun>, StatsError> {
    if r_max.len() != net.n {
        return Err(StatsError::BadThresholds);
    }
    let mut out = Vec::with_capacity(n_list.len());
    for (i, &n_steps) in n_list.iter().enumerate() {
        let polytope = region::build_all_nodes_region(net, n_steps, eps, r_max)?;
        let mut c = config.clone();
        c.stream = config.stream + i as u64 * SWEEP_STREAM_STRIDE;
        let runs = sampler::run_polytope_chains(&polytope, model, &c, chains)?;
        let samples: Vec<DVector<f64>> =
            runs.iter().flat_map(|r| r.samples.iter().cloned()).collect();
        let acceptance =
            runs.iter().map(|r| r.acceptance_rate).sum::<f64>() / runs.len() as f64;
        let sigma = runs.iter().map(|r| r.sigma).sum::<f64>() / runs.len() as f64;
        let report =
            build_report(&samples, &polytope, &net.p_nom_mw, n_steps, acceptance, sigma)?;
        out.push(SweepRun { n_steps, polytope, runs, report });
    }
    Ok(out)
}

pub fn sensitivity_sweep(
    net: &ReducedNetwork,
    model: &DensityModel,
    n_list: &[usize],
    eps: f64,
    r_max: &[f64],
    config: &SamplerConfig,
    chains: usize,
) -> Result<Vec<StatsReport>, StatsError> {
    Ok(sensitivity_sweep_detailed(net, model, n_list, eps, r_max, config, chains)?
        .into_iter()
        .map(|run| run.report)
        .collect())
}

/// Table-1 layout: one row per N, one column per generator, percent.
pub fn write_violation_table_csv<W: std::io::Write>(
    reports: &[StatsReport],
    labels: &[String],
    mut w: W,
) -> std::io::Result<()> {
    write!(w, "N")?;
    for label in labels {
        write!(w, ",{label}")?;
    }
    writeln!(w)?;
    for r in reports {
        write!(w, "{}", r.n_steps)?;
        for v in &r.per_generator_pct {
            write!(w, ",{}", crate::csvfmt::sig6(*v))?;
        }
        writeln!(w)?;
    }
    Ok(())
}

/// Table-2 layout: p_d, d̄, L̄ plus run metadata per N.
pub fn write_summary_csv<W: std::io::Write>(
    reports: &[StatsReport],
    mut w: W,
) -> std::io::Result<()> {
    writeln!(w, "N,p_d_pct,d_bar,L_bar_mw,samples,acceptance,sigma")?;
    for r in reports {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.n_steps,
            crate::csvfmt::sig6(r.p_d_pct),
            crate::csvfmt::sig6(r.mean_disconnections),
            crate::csvfmt::sig6(r.mean_lost_mw),
            r.sample_count,
            crate::csvfmt::sig6(r.acceptance_rate),
            crate::csvfmt::sig6(r.sigma),
        )?;
    }
    Ok(())
}

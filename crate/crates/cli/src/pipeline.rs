//! Command implementations: case ingestion through reduction, region
//! building, sampling and reporting, with a manifest that pins every
//! input needed to replay a run.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::DVector;
use serde::Serialize;
use sha2::{Digest, Sha256};

use gridfreq::csvfmt::sig6;
use gridfreq::dynamics;
use gridfreq::grid::{self, MachineParams, ReducedNetwork};
use gridfreq::matpower::parse_matpower_case;
use gridfreq::region::{build_all_nodes_region, build_k_as, build_k_ms, Polytope, Region};
use gridfreq::sampler::{self, diamond_density, diamond_region};
use gridfreq::stats::{self, StatsReport, SweepRun};

use crate::config::{mark_input, RunConfig};

/// Load the case, apply machine parameters and Kron-reduce. Failures here
/// are input errors (missing or invalid files).
pub fn load_network(config: &RunConfig) -> Result<ReducedNetwork> {
    mark_input((|| {
        let case_path = &config.case.file;
        let text = fs::read_to_string(case_path)
            .with_context(|| format!("cannot read case file {}", case_path.display()))?;
        let mut case = parse_matpower_case(&text)
            .with_context(|| format!("cannot parse case file {}", case_path.display()))?;
        if let Some(machines_path) = &config.case.machines {
            let machines = MachineParams::load(machines_path)?;
            case.apply_machine_params(&machines)?;
        }
        Ok(grid::reduce_network(&case)?)
    })())
}

fn turbine_params(config: &RunConfig) -> Result<Option<(f64, f64)>> {
    match &config.case.machines {
        None => Ok(None),
        Some(path) => {
            let machines = MachineParams::load(path)?;
            Ok(machines.turbine.map(|t| (t.droop, t.time_constant)))
        }
    }
}

/// Build the safe region selected by the config's region section.
pub fn build_region(config: &RunConfig, net: &ReducedNetwork) -> Result<Polytope> {
    let section = &config.region;
    match section.metric.as_str() {
        "max-nodal" => {
            let r_max = section.r_max.per_node(net.n)?;
            Ok(build_all_nodes_region(net, section.n_steps, section.epsilon, &r_max)?)
        }
        "system-max" => {
            let params = dynamics::SystemFreqParams::from_network(net, turbine_params(config)?)?;
            Ok(build_k_ms(&params, section.r_max.scalar()?)?)
        }
        "system-average" => {
            let params = dynamics::SystemFreqParams::from_network(net, turbine_params(config)?)?;
            Ok(build_k_as(&params, section.r_max.scalar()?, section.epsilon)?)
        }
        other => bail!("unknown region metric `{other}`"),
    }
}

fn ensure_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn region_hash(polytope: &Polytope) -> String {
    let mut hasher = Sha256::new();
    hasher.update(polytope.to_json().as_bytes());
    format!("sha256:{}", hex::encode(hasher.finalize()))
}

#[derive(Serialize)]
struct ChainSummary {
    stream: u64,
    sigma: f64,
    acceptance: f64,
    burn_in_acceptance: f64,
    tuned: bool,
    initial_state: Vec<f64>,
}

#[derive(Serialize)]
struct ManifestEntry {
    n_steps: usize,
    halfspaces: usize,
    region_hash: String,
    samples_file: String,
    chains: Vec<ChainSummary>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    command: &'a str,
    resolved_config: &'a RunConfig,
    entries: Vec<ManifestEntry>,
}

fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest)?;
    fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Full-precision samples matrix: one row per retained sample.
fn write_samples_csv(path: &Path, samples: &[DVector<f64>], labels: &[String]) -> Result<()> {
    let mut w = std::io::BufWriter::new(
        fs::File::create(path).with_context(|| format!("cannot write {}", path.display()))?,
    );
    writeln!(w, "{}", labels.join(","))?;
    for s in samples {
        let row: Vec<String> = s.iter().map(|v| format!("{v}")).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

fn read_samples_csv(path: &Path, dim: usize) -> Result<Vec<DVector<f64>>> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("cannot read samples file {}", path.display()))?;
    let mut lines = text.lines();
    let _header = lines.next();
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("bad number in samples row {}", i + 2))?;
        if values.len() != dim {
            bail!("samples row {} has {} columns, expected {dim}", i + 2, values.len());
        }
        samples.push(DVector::from_vec(values));
    }
    if samples.is_empty() {
        bail!("samples file {} holds no rows", path.display());
    }
    Ok(samples)
}

fn write_stats_files(
    dir: &Path,
    reports: &[StatsReport],
    labels: &[String],
) -> Result<()> {
    let mut table = Vec::new();
    stats::write_violation_table_csv(reports, labels, &mut table)?;
    fs::write(dir.join("violation_table.csv"), table)?;

    let mut summary = Vec::new();
    stats::write_summary_csv(reports, &mut summary)?;
    fs::write(dir.join("summary.csv"), summary)?;

    fs::write(dir.join("stats.json"), serde_json::to_string_pretty(reports)?)?;
    Ok(())
}

pub fn cmd_reduce(config: &RunConfig) -> Result<()> {
    let net = load_network(config)?;
    let dir = &config.output.dir;
    ensure_out_dir(dir)?;

    #[derive(Serialize)]
    struct Reduced<'a> {
        labels: &'a [String],
        inertia: Vec<f64>,
        damping: Vec<f64>,
        p_nom_mw: Vec<f64>,
        laplacian: Vec<Vec<f64>>,
    }
    let reduced = Reduced {
        labels: &net.labels,
        inertia: net.inertia.iter().copied().collect(),
        damping: net.damping.iter().copied().collect(),
        p_nom_mw: net.p_nom_mw.iter().copied().collect(),
        laplacian: (0..net.n)
            .map(|i| net.laplacian.row(i).iter().copied().collect())
            .collect(),
    };
    fs::write(dir.join("reduced.json"), serde_json::to_string_pretty(&reduced)?)?;

    let mut edges = String::from("from,to,susceptance\n");
    for (i, j, b) in net.reduced_lines() {
        edges.push_str(&format!("{},{},{}\n", net.labels[i], net.labels[j], sig6(b)));
    }
    fs::write(dir.join("reduced_edges.csv"), edges)?;

    println!(
        "reduced {} -> {} generators, {} effective lines; wrote {}",
        config.case.file.display(),
        net.n,
        net.reduced_lines().len(),
        dir.join("reduced.json").display()
    );
    Ok(())
}

pub fn cmd_region(config: &RunConfig) -> Result<()> {
    let net = load_network(config)?;
    let polytope = build_region(config, &net)?;
    let dir = &config.output.dir;
    ensure_out_dir(dir)?;
    let path = dir.join("region.json");
    polytope.save(&path)?;
    println!(
        "{} region with {} half-spaces ({}), wrote {}",
        config.region.metric,
        polytope.len(),
        region_hash(&polytope),
        path.display()
    );
    Ok(())
}

pub fn cmd_sample(config: &RunConfig) -> Result<()> {
    let net = load_network(config)?;
    let model = config.density_model(&net)?;
    let dir = config.output.dir.clone();
    ensure_out_dir(&dir)?;

    if config.region.metric != "max-nodal" {
        if config.region.sweep_n.is_some() {
            bail!("sweep_n applies to the max-nodal metric only");
        }
        return sample_system_region(config, &net, &model, &dir);
    }

    let n_list: Vec<usize> =
        config.region.sweep_n.clone().unwrap_or_else(|| vec![config.region.n_steps]);
    let r_max = config.region.r_max.per_node(net.n)?;
    let sweep = stats::sensitivity_sweep_detailed(
        &net,
        &model,
        &n_list,
        config.region.epsilon,
        &r_max,
        &config.sampler_config(),
        config.sampler.chains,
    )?;

    let mut entries = Vec::new();
    for run in &sweep {
        let samples_file = format!("samples_N{}.csv", run.n_steps);
        write_samples_csv(&dir.join(&samples_file), &run.merged_samples(), &net.labels)?;
        entries.push(manifest_entry(run, samples_file));
        println!(
            "N={:>4}: {} samples, acceptance {:.3}, sigma {:.5}",
            run.n_steps,
            run.report.sample_count,
            run.report.acceptance_rate,
            run.report.sigma
        );
    }
    let reports: Vec<StatsReport> = sweep.iter().map(|r| r.report.clone()).collect();
    write_stats_files(&dir, &reports, &net.labels)?;
    write_manifest(
        &dir.join("manifest.json"),
        &Manifest {
            version: env!("CARGO_PKG_VERSION"),
            command: "sample",
            resolved_config: config,
            entries,
        },
    )?;
    println!("wrote stats and manifest under {}", dir.display());
    Ok(())
}

fn manifest_entry(run: &SweepRun, samples_file: String) -> ManifestEntry {
    ManifestEntry {
        n_steps: run.n_steps,
        halfspaces: run.polytope.len(),
        region_hash: region_hash(&run.polytope),
        samples_file,
        chains: run
            .runs
            .iter()
            .map(|c| ChainSummary {
                stream: c.stream,
                sigma: c.sigma,
                acceptance: c.acceptance_rate,
                burn_in_acceptance: c.burn_in_acceptance,
                tuned: c.tuned,
                initial_state: c.initial_state.iter().copied().collect(),
            })
            .collect(),
    }
}

/// System-frequency slabs carry no node tags, so only the samples and the
/// run manifest are written.
fn sample_system_region(
    config: &RunConfig,
    net: &ReducedNetwork,
    model: &gridfreq::density::DensityModel,
    dir: &Path,
) -> Result<()> {
    let polytope = build_region(config, net)?;
    let runs = sampler::run_polytope_chains(
        &polytope,
        model,
        &config.sampler_config(),
        config.sampler.chains,
    )?;
    let samples: Vec<DVector<f64>> =
        runs.iter().flat_map(|r| r.samples.iter().cloned()).collect();
    write_samples_csv(&dir.join("samples.csv"), &samples, &net.labels)?;
    let run = SweepRun {
        n_steps: 0,
        polytope,
        runs,
        report: StatsReport {
            n_steps: 0,
            sample_count: samples.len(),
            per_generator_pct: Vec::new(),
            per_generator_pct_se: Vec::new(),
            p_d_pct: f64::NAN,
            p_d_pct_se: f64::NAN,
            mean_disconnections: f64::NAN,
            mean_disconnections_se: f64::NAN,
            mean_lost_mw: f64::NAN,
            mean_lost_mw_se: f64::NAN,
            acceptance_rate: 0.0,
            sigma: 0.0,
        },
    };
    write_manifest(
        &dir.join("manifest.json"),
        &Manifest {
            version: env!("CARGO_PKG_VERSION"),
            command: "sample",
            resolved_config: config,
            entries: vec![manifest_entry(&run, "samples.csv".into())],
        },
    )?;
    println!(
        "{} samples outside the {} region; per-generator tables apply to max-nodal only",
        samples.len(),
        config.region.metric
    );
    Ok(())
}

pub fn cmd_report(
    config: &RunConfig,
    samples_path: &Path,
    region_path: &Path,
    n_steps: Option<usize>,
) -> Result<()> {
    let net = load_network(config)?;
    let polytope = mark_input(Polytope::load(region_path).map_err(Into::into))?;
    let samples = mark_input(read_samples_csv(samples_path, polytope.dim()))?;
    let report = stats::build_report(
        &samples,
        &polytope,
        &net.p_nom_mw,
        n_steps.unwrap_or(config.region.n_steps),
        f64::NAN,
        f64::NAN,
    )?;
    let dir = &config.output.dir;
    ensure_out_dir(dir)?;
    write_stats_files(dir, std::slice::from_ref(&report), &net.labels)?;
    println!(
        "report over {} samples: p_d {:.2}%, d_bar {:.3}, L_bar {:.1} MW -> {}",
        report.sample_count,
        report.p_d_pct,
        report.mean_disconnections,
        report.mean_lost_mw,
        dir.join("stats.json").display()
    );
    Ok(())
}

pub fn cmd_trajectory(config: &RunConfig, u_spec: &str, t_max: f64, step: f64) -> Result<()> {
    let net = load_network(config)?;
    let u_values: Vec<f64> = mark_input(
        u_spec
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(anyhow::Error::from))
            .collect::<Result<_>>()
            .context("disturbance must be a comma-separated list of numbers (p.u.)"),
    )?;
    if u_values.len() != net.n {
        return mark_input(Err(anyhow::anyhow!(
            "disturbance has {} entries for {} generators",
            u_values.len(),
            net.n
        )));
    }
    if !step.is_finite() || step <= 0.0 || !t_max.is_finite() || t_max < 0.0 {
        return mark_input(Err(anyhow::anyhow!("need step > 0 and t-max >= 0")));
    }
    let u = DVector::from_vec(u_values);
    let points = (t_max / step).round() as usize;
    let times: Vec<f64> = (0..=points).map(|k| k as f64 * step).collect();
    let traj = dynamics::simulate_nodal_trajectory(&net, &u, &times)?;

    let dir = &config.output.dir;
    ensure_out_dir(dir)?;
    let path = dir.join("trajectory.csv");
    let mut buf = Vec::new();
    traj.write_csv(&mut buf)?;
    fs::write(&path, buf)?;
    println!("wrote {} ({} time points)", path.display(), times.len());
    Ok(())
}

/// Built-in benchmark: Gaussian target N(0, diag(4,1)) conditioned
/// outside the diamond |x| + |y| <= 7.
pub fn cmd_demo_diamond(out: &Path, samples: usize, burn_in: usize, seed: u64) -> Result<()> {
    let region = diamond_region(7.0);
    let model = diamond_density();
    let config = sampler::SamplerConfig {
        sigma0: 1.0,
        burn_in,
        samples,
        seed,
        ..sampler::SamplerConfig::default()
    };
    let run = sampler::run_polytope_chain(&region, &model, &config)?;

    let p_x_positive =
        run.samples.iter().filter(|s| s[0] > 0.0).count() as f64 / run.samples.len() as f64;
    let e_x_sq =
        run.samples.iter().map(|s| s[0] * s[0]).sum::<f64>() / run.samples.len() as f64;
    let mut crossings = 0usize;
    let mut prev = run.samples[0][0].signum();
    for s in &run.samples {
        let sign = s[0].signum();
        if sign != prev && s[0].abs() > 1.0 {
            crossings += 1;
            prev = sign;
        }
    }

    ensure_out_dir(out)?;
    let labels = vec!["x".to_string(), "y".to_string()];
    write_samples_csv(&out.join("samples.csv"), &run.samples, &labels)?;

    #[derive(Serialize)]
    struct DemoStats {
        samples: usize,
        p_x_positive: f64,
        e_x_sq: f64,
        diamond_crossings: usize,
        acceptance: f64,
        sigma: f64,
        seed: u64,
    }
    let stats = DemoStats {
        samples: run.samples.len(),
        p_x_positive,
        e_x_sq,
        diamond_crossings: crossings,
        acceptance: run.acceptance_rate,
        sigma: run.sigma,
        seed,
    };
    fs::write(out.join("demo_stats.json"), serde_json::to_string_pretty(&stats)?)?;
    let mut csv = String::from("samples,p_x_positive,e_x_sq,diamond_crossings,acceptance,sigma\n");
    csv.push_str(&format!(
        "{},{},{},{},{},{}\n",
        stats.samples,
        sig6(stats.p_x_positive),
        sig6(stats.e_x_sq),
        stats.diamond_crossings,
        sig6(stats.acceptance),
        sig6(stats.sigma),
    ));
    fs::write(out.join("demo_stats.csv"), csv)?;

    println!(
        "diamond demo: P(x>0 | outside) = {p_x_positive:.4}, E[x^2 | outside] = {e_x_sq:.3}, \
         {crossings} crossings, acceptance {:.3}",
        run.acceptance_rate
    );
    Ok(())
}

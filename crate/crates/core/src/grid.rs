//! Grid case data, the susceptance-weighted Laplacian and Kron reduction.
//!
//! A parsed case holds the raw bus/branch/generator tables. The network
//! enters the dynamics only through the weighted Laplacian `L = C B Cᵀ`
//! (incidence times branch susceptances); passive load buses are then
//! eliminated by taking the Schur complement on the generator buses,
//! which yields an equivalent generator-only network.
//!
//! Inertia and damping are not part of the case format and are supplied
//! through a sidecar [`MachineParams`] file keyed by generator label.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;
use thiserror::Error;

/// Tolerance below which an off-diagonal Laplacian entry is treated as
/// "no line" when reading effective susceptances back out.
pub const LINE_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("schema error: {0}")]
    Schema(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("reduction error: eliminated buses {buses:?} are disconnected from every retained bus")]
    SingularReduction { buses: Vec<u32> },
    #[error("machine parameters: {0}")]
    MachineParams(String),
}

/// A transmission line or transformer branch, reduced to its susceptance.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: u32,
    pub to: u32,
    /// Susceptance 1/x in p.u. (lossless-line model).
    pub susceptance: f64,
}

/// A generating unit. `inertia`/`damping` default to 1.0 at parse time and
/// are overwritten by [`GridCase::apply_machine_params`].
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: u32,
    /// Nominal active injection, MW.
    pub p_nom_mw: f64,
    /// M, p.u. power per Hz/s (100 MVA base).
    pub inertia: f64,
    /// D, p.u. power per Hz (100 MVA base).
    pub damping: f64,
}

/// Raw grid case: bus ids plus branch and generator tables.
#[derive(Debug, Clone)]
pub struct GridCase {
    pub buses: Vec<u32>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
}

/// Machine parameters keyed by generator label (G1, G2, ...).
#[derive(Debug, Clone, Deserialize)]
pub struct MachineParams {
    pub generators: BTreeMap<String, MachineEntry>,
    /// Optional turbine-control parameters for the third-order
    /// system-frequency model.
    pub turbine: Option<TurbineEntry>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct MachineEntry {
    /// M, p.u. power per Hz/s.
    pub inertia: f64,
    /// D, p.u. power per Hz.
    pub damping: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct TurbineEntry {
    /// Turbine time constant tau, s.
    pub time_constant: f64,
    /// Inverse droop 1/R of the rating-1 machine, p.u. per Hz.
    pub droop: f64,
}

impl MachineParams {
    pub fn from_toml_str(text: &str) -> Result<Self, GridError> {
        toml::from_str(text).map_err(|e| GridError::MachineParams(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, GridError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GridError::MachineParams(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

impl GridCase {
    /// Check the case invariants: known endpoints, nonnegative
    /// susceptances, positive machine constants, at least one generator,
    /// no duplicate bus ids and one generator per bus.
    pub fn validate(&self) -> Result<(), GridError> {
        let mut seen = HashSet::new();
        for &b in &self.buses {
            if !seen.insert(b) {
                return Err(GridError::Validation(format!("duplicate bus id {b}")));
            }
        }
        for br in &self.branches {
            if !seen.contains(&br.from) || !seen.contains(&br.to) {
                return Err(GridError::Validation(format!(
                    "branch {}-{} references an unknown bus",
                    br.from, br.to
                )));
            }
            if !(br.susceptance >= 0.0) || !br.susceptance.is_finite() {
                return Err(GridError::Validation(format!(
                    "branch {}-{} has invalid susceptance {}",
                    br.from, br.to, br.susceptance
                )));
            }
        }
        if self.generators.is_empty() {
            return Err(GridError::Validation("case has no generators".into()));
        }
        let mut gen_buses = HashSet::new();
        for g in &self.generators {
            if !seen.contains(&g.bus) {
                return Err(GridError::Validation(format!(
                    "generator references unknown bus {}",
                    g.bus
                )));
            }
            if !gen_buses.insert(g.bus) {
                return Err(GridError::Validation(format!(
                    "more than one generator at bus {}",
                    g.bus
                )));
            }
            if !(g.inertia > 0.0) || !(g.damping > 0.0) {
                return Err(GridError::Validation(format!(
                    "generator at bus {} needs positive inertia and damping",
                    g.bus
                )));
            }
        }
        Ok(())
    }

    /// Generator labels in table order: G1, G2, ...
    pub fn generator_labels(&self) -> Vec<String> {
        (1..=self.generators.len()).map(|i| format!("G{i}")).collect()
    }

    /// Overwrite the placeholder inertia/damping values from a sidecar
    /// parameter set. Every generator label must be present.
    pub fn apply_machine_params(&mut self, params: &MachineParams) -> Result<(), GridError> {
        let labels = self.generator_labels();
        for (gen, label) in self.generators.iter_mut().zip(&labels) {
            let entry = params.generators.get(label).ok_or_else(|| {
                GridError::MachineParams(format!("no machine entry for {label}"))
            })?;
            if !(entry.inertia > 0.0) || !(entry.damping > 0.0) {
                return Err(GridError::MachineParams(format!(
                    "{label}: inertia and damping must be positive"
                )));
            }
            gen.inertia = entry.inertia;
            gen.damping = entry.damping;
        }
        Ok(())
    }
}

/// Kron-reduced generator-only network.
#[derive(Debug, Clone)]
pub struct ReducedNetwork {
    pub n: usize,
    /// Reduced weighted Laplacian, n x n.
    pub laplacian: DMatrix<f64>,
    /// Diagonal inertias, p.u. per Hz/s.
    pub inertia: DVector<f64>,
    /// Diagonal dampings, p.u. per Hz.
    pub damping: DVector<f64>,
    /// Nominal injections, MW.
    pub p_nom_mw: DVector<f64>,
    pub labels: Vec<String>,
}

impl ReducedNetwork {
    /// Invariants: symmetry, zero row sums (1e-9), nonnegative effective
    /// susceptances (off-diagonals <= 1e-12), positive M and D.
    pub fn validate(&self) -> Result<(), GridError> {
        let l = &self.laplacian;
        let n = self.n;
        if l.nrows() != n || l.ncols() != n {
            return Err(GridError::Validation("laplacian dimension mismatch".into()));
        }
        for i in 0..n {
            for j in 0..n {
                if (l[(i, j)] - l[(j, i)]).abs() > 1e-9 {
                    return Err(GridError::Validation(format!(
                        "reduced laplacian not symmetric at ({i},{j})"
                    )));
                }
                if i != j && l[(i, j)] > 1e-12 {
                    return Err(GridError::Validation(format!(
                        "negative effective susceptance at ({i},{j}): {}",
                        -l[(i, j)]
                    )));
                }
            }
            let row_sum: f64 = l.row(i).sum();
            if row_sum.abs() > 1e-9 {
                return Err(GridError::Validation(format!(
                    "row {i} of reduced laplacian sums to {row_sum}"
                )));
            }
        }
        if self.inertia.iter().any(|&m| !(m > 0.0)) || self.damping.iter().any(|&d| !(d > 0.0)) {
            return Err(GridError::Validation(
                "inertia and damping must be strictly positive".into(),
            ));
        }
        Ok(())
    }

    /// Edges (i, j, effective susceptance) read off the reduced Laplacian.
    pub fn reduced_lines(&self) -> Vec<(usize, usize, f64)> {
        extract_reduced_lines(&self.laplacian, LINE_THRESHOLD)
    }
}

/// Build the full-network weighted Laplacian `C B Cᵀ` in bus-table order.
/// Parallel branches add.
pub fn build_weighted_laplacian(case: &GridCase) -> DMatrix<f64> {
    let index: HashMap<u32, usize> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, &b)| (b, i))
        .collect();
    let n = case.buses.len();
    let mut l = DMatrix::zeros(n, n);
    for br in &case.branches {
        let (i, j) = (index[&br.from], index[&br.to]);
        if i == j {
            continue; // self-loop contributes nothing to the Laplacian
        }
        l[(i, j)] -= br.susceptance;
        l[(j, i)] -= br.susceptance;
        l[(i, i)] += br.susceptance;
        l[(j, j)] += br.susceptance;
    }
    l
}

/// Schur complement `L_kk - L_ke L_ee^-1 L_ek` keeping the given row/column
/// indices. `keep` holding every index returns `L` unchanged.
pub fn kron_reduce(l: &DMatrix<f64>, keep: &[usize]) -> Result<DMatrix<f64>, GridError> {
    let n = l.nrows();
    assert_eq!(n, l.ncols(), "laplacian must be square");
    let keep_set: HashSet<usize> = keep.iter().copied().collect();
    assert_eq!(keep_set.len(), keep.len(), "keep indices must be unique");
    assert!(keep.iter().all(|&k| k < n), "keep index out of range");
    let elim: Vec<usize> = (0..n).filter(|i| !keep_set.contains(i)).collect();
    if elim.is_empty() {
        return Ok(l.select_rows(keep.iter()).select_columns(keep.iter()));
    }

    let l_kk = l.select_rows(keep.iter()).select_columns(keep.iter());
    let l_ke = l.select_rows(keep.iter()).select_columns(elim.iter());
    let l_ek = l.select_rows(elim.iter()).select_columns(keep.iter());
    let l_ee = l.select_rows(elim.iter()).select_columns(elim.iter());

    let scale = l_ee.amax().max(1.0);
    let lu = l_ee.clone().lu();
    let min_pivot = lu.u().diagonal().iter().fold(f64::INFINITY, |a, &p| a.min(p.abs()));
    if min_pivot <= 1e-10 * scale {
        return Err(GridError::SingularReduction {
            buses: floating_components(l, &keep_set, &elim)
                .into_iter()
                .map(|i| i as u32)
                .collect(),
        });
    }
    let solved = lu
        .solve(&l_ek)
        .ok_or_else(|| GridError::SingularReduction {
            buses: elim.iter().map(|&i| i as u32).collect(),
        })?;
    let mut reduced = l_kk - l_ke * solved;
    // Exact symmetry is lost to rounding in the solve; restore it.
    for i in 0..reduced.nrows() {
        for j in (i + 1)..reduced.ncols() {
            let avg = 0.5 * (reduced[(i, j)] + reduced[(j, i)]);
            reduced[(i, j)] = avg;
            reduced[(j, i)] = avg;
        }
    }
    Ok(reduced)
}

/// Eliminated indices whose connected component (within the eliminated
/// subgraph) never touches a retained bus. These are exactly the buses
/// that make the eliminated block singular.
fn floating_components(l: &DMatrix<f64>, keep: &HashSet<usize>, elim: &[usize]) -> Vec<usize> {
    let n = l.nrows();
    let adjacent = |i: usize, j: usize| i != j && l[(i, j)].abs() > LINE_THRESHOLD;
    let mut component: HashMap<usize, usize> = HashMap::new();
    let mut touches_keep: Vec<bool> = Vec::new();
    for &start in elim {
        if component.contains_key(&start) {
            continue;
        }
        let id = touches_keep.len();
        touches_keep.push(false);
        let mut stack = vec![start];
        component.insert(start, id);
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if !adjacent(i, j) {
                    continue;
                }
                if keep.contains(&j) {
                    touches_keep[id] = true;
                } else if let std::collections::hash_map::Entry::Vacant(e) = component.entry(j) {
                    e.insert(id);
                    stack.push(j);
                }
            }
        }
    }
    let mut floating: Vec<usize> = elim
        .iter()
        .copied()
        .filter(|i| !touches_keep[component[i]])
        .collect();
    floating.sort_unstable();
    floating
}

/// Edges (i, j, B_ij = -L_ij) with effective susceptance above `threshold`.
pub fn extract_reduced_lines(l_red: &DMatrix<f64>, threshold: f64) -> Vec<(usize, usize, f64)> {
    let n = l_red.nrows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let b = -l_red[(i, j)];
            if b > threshold {
                edges.push((i, j, b));
            }
        }
    }
    edges
}

/// Full reduction pipeline: validate, build the Laplacian, eliminate every
/// non-generator bus and package machine data in generator-table order.
pub fn reduce_network(case: &GridCase) -> Result<ReducedNetwork, GridError> {
    case.validate()?;
    let index: HashMap<u32, usize> = case
        .buses
        .iter()
        .enumerate()
        .map(|(i, &b)| (b, i))
        .collect();
    let keep: Vec<usize> = case.generators.iter().map(|g| index[&g.bus]).collect();
    let l = build_weighted_laplacian(case);
    let laplacian = kron_reduce(&l, &keep).map_err(|e| match e {
        GridError::SingularReduction { buses } => GridError::SingularReduction {
            buses: buses.into_iter().map(|i| case.buses[i as usize]).collect(),
        },
        other => other,
    })?;
    let net = ReducedNetwork {
        n: keep.len(),
        laplacian,
        inertia: DVector::from_iterator(keep.len(), case.generators.iter().map(|g| g.inertia)),
        damping: DVector::from_iterator(keep.len(), case.generators.iter().map(|g| g.damping)),
        p_nom_mw: DVector::from_iterator(keep.len(), case.generators.iter().map(|g| g.p_nom_mw)),
        labels: case.generator_labels(),
    };
    net.validate()?;
    Ok(net)
}

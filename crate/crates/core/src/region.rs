//! Safe regions as half-space intersections, with the ray queries the
//! conditional sampler needs.
//!
//! Every region here is a convex polytope `{u : a_i · u <= b_i}` that
//! strictly contains the origin (the zero disturbance induces zero RoCoF,
//! so b_i > 0 throughout). Regions need not be bounded: the system-level
//! slabs are not, but they are *ray-bounded* (a ray entering the region
//! always exits), which is all the ghost proposal requires. Each
//! half-space may carry a (node, time index, sign) tag so violating nodes
//! can be read back without re-evaluating the dynamics.

use std::collections::BTreeSet;
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{self, StateMatrix, SystemFreqParams};
use crate::grid::ReducedNetwork;

/// Tolerance for half-space arithmetic in the ray clipper.
pub const CLIP_TOL: f64 = 1e-12;
/// Chords shorter than this count as no intersection (grazing contact).
pub const CHORD_TOL: f64 = 1e-9;
/// Boundary slack for membership: points within this of the boundary are
/// inside (the region is closed).
pub const BOUNDARY_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("dimension mismatch: region is {expected}-dimensional, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("half-space normal must be nonzero with a finite bound")]
    BadHalfSpace,
    #[error("bound {0} does not strictly contain the origin (b > 0 required)")]
    OriginExcluded(f64),
    #[error("threshold must be strictly positive, got {0}")]
    DegenerateThreshold(f64),
    #[error("time discretization must satisfy N >= 1")]
    InvalidDiscretization,
    #[error("point expected outside the region is inside")]
    PointInside,
    #[error("direction must be a unit vector")]
    NotUnit,
    #[error("ray enters the region but never exits (region not ray-bounded)")]
    NotRayBounded,
    #[error(transparent)]
    Dynamics(#[from] dynamics::DynamicsError),
    #[error("region i/o: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

/// Provenance of a half-space: node j, sample index n, constraint sign.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintTag {
    pub node: usize,
    pub time_index: usize,
    pub sign: Sign,
}

/// `{u : a · u <= b}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HalfSpace {
    pub a: DVector<f64>,
    pub b: f64,
    pub tag: Option<ConstraintTag>,
}

/// Entry/exit distances of a ray into the region, `t_exit >= t_entry > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t_entry: f64,
    pub t_exit: f64,
}

impl RayHit {
    pub fn chord(&self) -> f64 {
        self.t_exit - self.t_entry
    }
}

/// Convex polytope as a half-space list. An empty list is the whole space
/// (every membership test passes), which arises from vacuous thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Polytope {
    dim: usize,
    halfspaces: Vec<HalfSpace>,
}

/// Minimal query surface the sampler needs; only polytopes ship, but any
/// closed ray-bounded region with these queries plugs in.
pub trait Region {
    fn dim(&self) -> usize;
    fn contains(&self, u: &DVector<f64>) -> Result<bool, RegionError>;
    fn ray_clip(&self, x: &DVector<f64>, phi: &DVector<f64>) -> Result<Option<RayHit>, RegionError>;
}

impl Polytope {
    pub fn new(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Self, RegionError> {
        for hs in &halfspaces {
            if hs.a.len() != dim {
                return Err(RegionError::DimensionMismatch { expected: dim, got: hs.a.len() });
            }
            if hs.a.amax() == 0.0 || !hs.a.iter().all(|v| v.is_finite()) || !hs.b.is_finite() {
                return Err(RegionError::BadHalfSpace);
            }
            if hs.b <= 0.0 {
                return Err(RegionError::OriginExcluded(hs.b));
            }
        }
        Ok(Self { dim, halfspaces })
    }

    pub fn halfspaces(&self) -> &[HalfSpace] {
        &self.halfspaces
    }

    pub fn len(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.halfspaces.is_empty()
    }

    fn check_dim(&self, v: &DVector<f64>) -> Result<(), RegionError> {
        if v.len() != self.dim {
            return Err(RegionError::DimensionMismatch { expected: self.dim, got: v.len() });
        }
        Ok(())
    }

    /// Nodes with at least one violated tagged half-space at `u`.
    pub fn violating_nodes(&self, u: &DVector<f64>) -> Result<BTreeSet<usize>, RegionError> {
        self.check_dim(u)?;
        let mut nodes = BTreeSet::new();
        for hs in &self.halfspaces {
            if let Some(tag) = hs.tag {
                if nodes.contains(&tag.node) {
                    continue;
                }
                if hs.a.dot(u) > hs.b + BOUNDARY_TOL {
                    nodes.insert(tag.node);
                }
            }
        }
        Ok(nodes)
    }

    /// Index of the half-space whose boundary is nearest the origin.
    pub fn min_slack_halfspace(&self) -> Option<usize> {
        (0..self.halfspaces.len()).min_by(|&i, &j| {
            let di = self.halfspaces[i].b / self.halfspaces[i].a.norm();
            let dj = self.halfspaces[j].b / self.halfspaces[j].a.norm();
            di.partial_cmp(&dj).expect("finite slack")
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("polytope serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, RegionError> {
        let p: Polytope = serde_json::from_str(text).map_err(|e| RegionError::Io(e.to_string()))?;
        Polytope::new(p.dim, p.halfspaces)
    }

    pub fn save(&self, path: &Path) -> Result<(), RegionError> {
        std::fs::write(path, self.to_json()).map_err(|e| RegionError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, RegionError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| RegionError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

impl Region for Polytope {
    fn dim(&self) -> usize {
        self.dim
    }

    fn contains(&self, u: &DVector<f64>) -> Result<bool, RegionError> {
        self.check_dim(u)?;
        Ok(self
            .halfspaces
            .iter()
            .all(|hs| hs.a.dot(u) <= hs.b + BOUNDARY_TOL))
    }

    /// Interval clipping of `{t >= 0 : x + t phi in K}` over the
    /// half-spaces. `x` must be strictly outside; `phi` a unit vector.
    fn ray_clip(&self, x: &DVector<f64>, phi: &DVector<f64>) -> Result<Option<RayHit>, RegionError> {
        self.check_dim(x)?;
        self.check_dim(phi)?;
        if (phi.norm() - 1.0).abs() > 1e-9 {
            return Err(RegionError::NotUnit);
        }
        if self.contains(x)? {
            return Err(RegionError::PointInside);
        }
        let mut lo = 0.0f64;
        let mut hi = f64::INFINITY;
        for hs in &self.halfspaces {
            let d = hs.a.dot(phi);
            let s = hs.b - hs.a.dot(x);
            if d > CLIP_TOL {
                hi = hi.min(s / d);
            } else if d < -CLIP_TOL {
                lo = lo.max(s / d);
            } else if s < -CLIP_TOL {
                // Parallel ray on the violated side: never enters.
                return Ok(None);
            }
            if hi < lo {
                return Ok(None);
            }
        }
        if hi - lo <= CHORD_TOL {
            return Ok(None);
        }
        if hi.is_infinite() {
            return Err(RegionError::NotRayBounded);
        }
        debug_assert!(lo > 0.0, "entry distance must be positive for an outside start");
        Ok(Some(RayHit { t_entry: lo, t_exit: hi }))
    }
}

/// Length of `[x, x + r phi]` lying outside the region.
pub fn outside_length<R: Region + ?Sized>(
    region: &R,
    x: &DVector<f64>,
    r: f64,
    phi: &DVector<f64>,
) -> Result<f64, RegionError> {
    if r == 0.0 {
        return Ok(0.0);
    }
    match region.ray_clip(x, phi)? {
        None => Ok(r),
        Some(hit) => {
            let overlap = (r.min(hit.t_exit) - hit.t_entry).max(0.0);
            Ok(r - overlap)
        }
    }
}

/// The contraction `T_x(y) = x + l phi` removing the region chord from the
/// segment; the inverse of the ghost shift.
pub fn ghost_map_t<R: Region + ?Sized>(
    region: &R,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<DVector<f64>, RegionError> {
    if region.contains(y)? {
        return Err(RegionError::PointInside);
    }
    let diff = y - x;
    let r = diff.norm();
    if r == 0.0 {
        return Ok(x.clone());
    }
    let phi = diff / r;
    let l = outside_length(region, x, r, &phi)?;
    Ok(x + phi * l)
}

fn slab_pair(a: DVector<f64>, bound: f64, tag_node: Option<(usize, usize)>) -> Vec<HalfSpace> {
    let (plus, minus) = match tag_node {
        Some((node, time_index)) => (
            Some(ConstraintTag { node, time_index, sign: Sign::Plus }),
            Some(ConstraintTag { node, time_index, sign: Sign::Minus }),
        ),
        None => (None, None),
    };
    vec![
        HalfSpace { a: a.clone(), b: bound, tag: plus },
        HalfSpace { a: -a, b: bound, tag: minus },
    ]
}

/// Maximum-RoCoF safe region of the system frequency:
/// `|Σ u_i| <= r_max / |ġ(0)|`.
pub fn build_k_ms(params: &SystemFreqParams, r_max: f64) -> Result<Polytope, RegionError> {
    let n = params.ratings.len();
    if !(r_max > 0.0) {
        return Err(RegionError::DegenerateThreshold(r_max));
    }
    if r_max.is_infinite() {
        return Polytope::new(n, Vec::new());
    }
    let gdot0 = dynamics::system_freq_gdot0(params);
    let bound = r_max / gdot0;
    Polytope::new(n, slab_pair(DVector::repeat(n, 1.0), bound, None))
}

/// Average-RoCoF safe region of the system frequency over `[0, eps]`:
/// `|Σ u_i| <= eps r_max / ∫|ġ|`.
pub fn build_k_as(params: &SystemFreqParams, r_max: f64, eps: f64) -> Result<Polytope, RegionError> {
    let n = params.ratings.len();
    if !(r_max > 0.0) {
        return Err(RegionError::DegenerateThreshold(r_max));
    }
    if r_max.is_infinite() {
        return Polytope::new(n, Vec::new());
    }
    let integral = dynamics::average_rocof_coefficient(params, eps)?;
    let bound = eps * r_max / integral;
    Polytope::new(n, slab_pair(DVector::repeat(n, 1.0), bound, None))
}

/// Node-j safe region: `|ω̇_j(n eps / N)| <= r_max` for n = 0..N, as
/// 2(N+1) half-spaces over the disturbance.
pub fn build_node_region(
    net: &ReducedNetwork,
    node: usize,
    n_steps: usize,
    eps: f64,
    r_max: f64,
) -> Result<Polytope, RegionError> {
    build_region(net, n_steps, eps, |j| if j == node { Some(r_max) } else { None })
}

/// All-nodes safe region: the intersection of every node region, with
/// per-node thresholds. Infinite thresholds contribute no constraints.
pub fn build_all_nodes_region(
    net: &ReducedNetwork,
    n_steps: usize,
    eps: f64,
    r_max: &[f64],
) -> Result<Polytope, RegionError> {
    if r_max.len() != net.n {
        return Err(RegionError::DimensionMismatch { expected: net.n, got: r_max.len() });
    }
    build_region(net, n_steps, eps, |j| Some(r_max[j]))
}

fn build_region(
    net: &ReducedNetwork,
    n_steps: usize,
    eps: f64,
    threshold: impl Fn(usize) -> Option<f64>,
) -> Result<Polytope, RegionError> {
    if n_steps < 1 {
        return Err(RegionError::InvalidDiscretization);
    }
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(RegionError::Dynamics(dynamics::DynamicsError::InvalidTimes));
    }
    let n = net.n;
    for j in 0..n {
        if let Some(r) = threshold(j) {
            if !(r > 0.0) {
                return Err(RegionError::DegenerateThreshold(r));
            }
        }
    }
    let state: StateMatrix = dynamics::build_state_matrix(net);
    let mut halfspaces = Vec::new();
    for step in 0..=n_steps {
        let t = eps * step as f64 / n_steps as f64;
        let g = dynamics::rocof_matrix(&state, t)?;
        for j in 0..n {
            let Some(r) = threshold(j) else { continue };
            if r.is_infinite() {
                continue;
            }
            let a = g.row(j).transpose();
            halfspaces.extend(slab_pair(a, r, Some((j, step))));
        }
    }
    Polytope::new(n, halfspaces)
}

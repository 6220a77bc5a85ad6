//! Linearized frequency dynamics of the reduced network.
//!
//! Stacking x = [ω̇; ω] turns the swing equations into the homogeneous
//! system ẋ = Ax with
//!
//! ```text
//!     A = [ -M⁻¹D  -M⁻¹L ]     x(0) = [ M⁻¹u ]
//!         [   I      0   ],           [   0  ]
//! ```
//!
//! so nodal frequencies and RoCoFs at any time are rows of `exp(tA)`
//! applied to the disturbance-injected initial state. The module also
//! carries the closed-form step responses of the aggregated
//! system-frequency (center-of-inertia) models, with and without turbine
//! control, plus a dense third-order ODE reference used to validate them.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::grid::ReducedNetwork;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("non-finite entries in input matrix")]
    NonFinite,
    #[error("time points must be finite, ascending and start at t >= 0")]
    InvalidTimes,
    #[error("negative evaluation time {0}")]
    NegativeTime(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("node index {node} out of range for {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("ratings must lie in (0, 1] with max exactly 1")]
    BadRatings,
    #[error("third-order model is not under-damped (omega_d^2 = {0})")]
    Overdamped(f64),
    #[error("machine constants do not satisfy the common-rating condition: {0}")]
    RatingCondition(String),
}

/// The 2n-state matrix of ẋ = Ax over x = [ω̇; ω].
#[derive(Debug, Clone)]
pub struct StateMatrix {
    pub a: DMatrix<f64>,
    pub n: usize,
    /// Diagonal inertias of the underlying network (needed to inject u).
    pub inertia: DVector<f64>,
}

pub fn build_state_matrix(net: &ReducedNetwork) -> StateMatrix {
    let n = net.n;
    let mut a = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        a[(i, i)] = -net.damping[i] / net.inertia[i];
        for j in 0..n {
            a[(i, n + j)] = -net.laplacian[(i, j)] / net.inertia[i];
        }
        a[(n + i, i)] = 1.0;
    }
    StateMatrix { a, n, inertia: net.inertia.clone() }
}

/// exp(tA) for t >= 0.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>, DynamicsError> {
    if a.iter().any(|v| !v.is_finite()) || !t.is_finite() {
        return Err(DynamicsError::NonFinite);
    }
    if t < 0.0 {
        return Err(DynamicsError::NegativeTime(t));
    }
    Ok((a * t).exp())
}

/// All-node RoCoF map at time t: the n x n matrix G(t) with
/// ω̇(t) = G(t) u, i.e. G(t)[j,k] = exp(tA)[j,k] / M_k.
pub fn rocof_matrix(state: &StateMatrix, t: f64) -> Result<DMatrix<f64>, DynamicsError> {
    let n = state.n;
    let e = matrix_exponential(&state.a, t)?;
    let mut g = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            g[(j, k)] = e[(j, k)] / state.inertia[k];
        }
    }
    Ok(g)
}

/// Linear functional a with ω̇_j(t) = a · u.
pub fn rocof_functional(
    state: &StateMatrix,
    node: usize,
    t: f64,
) -> Result<DVector<f64>, DynamicsError> {
    if node >= state.n {
        return Err(DynamicsError::NodeOutOfRange { node, n: state.n });
    }
    let g = rocof_matrix(state, t)?;
    Ok(g.row(node).transpose())
}

/// Nodal frequency / RoCoF traces plus the center-of-inertia frequency.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    /// ω, one row per node, one column per time point (Hz).
    pub omega: DMatrix<f64>,
    /// ω̇, same layout (Hz/s).
    pub omega_dot: DMatrix<f64>,
    /// Inertia-weighted average frequency ω̄ (Hz).
    pub coi: Vec<f64>,
}

impl Trajectory {
    /// CSV export: t, coi, omega_1.., omegadot_1..; 6 significant digits.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.omega.nrows();
        write!(w, "t,coi")?;
        for j in 1..=n {
            write!(w, ",omega_{j}")?;
        }
        for j in 1..=n {
            write!(w, ",omegadot_{j}")?;
        }
        writeln!(w)?;
        for (k, &t) in self.times.iter().enumerate() {
            write!(w, "{},{}", crate::csvfmt::sig6(t), crate::csvfmt::sig6(self.coi[k]))?;
            for j in 0..n {
                write!(w, ",{}", crate::csvfmt::sig6(self.omega[(j, k)]))?;
            }
            for j in 0..n {
                write!(w, ",{}", crate::csvfmt::sig6(self.omega_dot[(j, k)]))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

fn check_times(times: &[f64]) -> Result<(), DynamicsError> {
    if times.is_empty()
        || times.iter().any(|t| !t.is_finite())
        || times[0] < 0.0
        || times.windows(2).any(|w| w[1] < w[0])
    {
        return Err(DynamicsError::InvalidTimes);
    }
    Ok(())
}

/// Post-disturbance response to the step disturbance u via exp(tA).
pub fn simulate_nodal_trajectory(
    net: &ReducedNetwork,
    u: &DVector<f64>,
    times: &[f64],
) -> Result<Trajectory, DynamicsError> {
    let n = net.n;
    if u.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: u.len() });
    }
    check_times(times)?;
    let state = build_state_matrix(net);
    let mut x0 = DVector::zeros(2 * n);
    for i in 0..n {
        x0[i] = u[i] / net.inertia[i];
    }
    let total_m: f64 = net.inertia.sum();
    let mut omega = DMatrix::zeros(n, times.len());
    let mut omega_dot = DMatrix::zeros(n, times.len());
    let mut coi = Vec::with_capacity(times.len());
    for (k, &t) in times.iter().enumerate() {
        let x = matrix_exponential(&state.a, t)? * &x0;
        let mut coi_k = 0.0;
        for i in 0..n {
            omega_dot[(i, k)] = x[i];
            omega[(i, k)] = x[n + i];
            coi_k += net.inertia[i] * x[n + i];
        }
        coi.push(coi_k / total_m);
    }
    Ok(Trajectory { times: times.to_vec(), omega, omega_dot, coi })
}

/// Which aggregated system-frequency model to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SystemFreqModel {
    SecondOrder,
    /// Turbine control with inverse droop 1/R (rating-1 machine) and time
    /// constant tau.
    ThirdOrder { r_inv: f64, tau: f64 },
}

/// Parameters of the center-of-inertia response under the common-rating
/// condition M_i = f_i M, D_i = f_i D (and R_i⁻¹ = f_i R⁻¹ with turbine
/// control): ω̄(t) = g(t) Σu_i.
#[derive(Debug, Clone)]
pub struct SystemFreqParams {
    pub model: SystemFreqModel,
    /// Inertia of the rating-1 machine.
    pub m: f64,
    /// Damping of the rating-1 machine.
    pub d: f64,
    /// Ratings f_i in (0, 1], max exactly 1.
    pub ratings: Vec<f64>,
}

impl SystemFreqParams {
    pub fn second_order(m: f64, d: f64, ratings: Vec<f64>) -> Result<Self, DynamicsError> {
        let p = Self { model: SystemFreqModel::SecondOrder, m, d, ratings };
        p.check()?;
        Ok(p)
    }

    pub fn third_order(
        m: f64,
        d: f64,
        r_inv: f64,
        tau: f64,
        ratings: Vec<f64>,
    ) -> Result<Self, DynamicsError> {
        let p = Self { model: SystemFreqModel::ThirdOrder { r_inv, tau }, m, d, ratings };
        p.check()?;
        let w2 = p.omega_d_sq();
        if w2 <= 0.0 {
            return Err(DynamicsError::Overdamped(w2));
        }
        Ok(p)
    }

    /// Derive parameters from a reduced network, requiring the machine
    /// constants to share a common rating vector.
    pub fn from_network(
        net: &ReducedNetwork,
        turbine: Option<(f64, f64)>, // (r_inv, tau)
    ) -> Result<Self, DynamicsError> {
        let m_max = net.inertia.max();
        let idx = net
            .inertia
            .iter()
            .position(|&m| m == m_max)
            .expect("nonempty inertia vector");
        let m = net.inertia[idx];
        let d = net.damping[idx];
        let ratings: Vec<f64> = net.inertia.iter().map(|&mi| mi / m).collect();
        for (i, &f) in ratings.iter().enumerate() {
            let expect_d = f * d;
            if (net.damping[i] - expect_d).abs() > 1e-6 * d.max(1.0) {
                return Err(DynamicsError::RatingCondition(format!(
                    "damping of machine {} is {} but the rating condition needs {}",
                    i + 1,
                    net.damping[i],
                    expect_d
                )));
            }
        }
        match turbine {
            None => Self::second_order(m, d, ratings),
            Some((r_inv, tau)) => Self::third_order(m, d, r_inv, tau, ratings),
        }
    }

    fn check(&self) -> Result<(), DynamicsError> {
        if self.ratings.is_empty()
            || self.ratings.iter().any(|&f| !(f > 0.0 && f <= 1.0))
            || self.ratings.iter().cloned().fold(f64::NEG_INFINITY, f64::max) != 1.0
        {
            return Err(DynamicsError::BadRatings);
        }
        if !(self.m > 0.0) || !(self.d > 0.0) {
            return Err(DynamicsError::RatingCondition(
                "rating-1 machine constants must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn sum_ratings(&self) -> f64 {
        self.ratings.iter().sum()
    }

    pub fn sum_inertia(&self) -> f64 {
        self.m * self.sum_ratings()
    }

    pub fn sum_damping(&self) -> f64 {
        self.d * self.sum_ratings()
    }

    fn eta(&self, tau: f64) -> f64 {
        0.5 * (1.0 / tau + self.d / self.m)
    }

    fn gamma(&self, r_inv: f64, tau: f64) -> f64 {
        1.0 / tau - r_inv / self.m
    }

    fn omega_d_sq(&self) -> f64 {
        match self.model {
            SystemFreqModel::SecondOrder => 0.0,
            SystemFreqModel::ThirdOrder { r_inv, tau } => {
                (self.d + r_inv) / (self.m * tau) - self.eta(tau).powi(2)
            }
        }
    }
}

/// Step-response kernel g(t) of the system frequency: ω̄(t) = g(t) Σu_i.
pub fn system_freq_g(params: &SystemFreqParams, t: f64) -> Result<f64, DynamicsError> {
    if !t.is_finite() || t < 0.0 {
        return Err(DynamicsError::NegativeTime(t));
    }
    match params.model {
        SystemFreqModel::SecondOrder => {
            Ok((1.0 - (-(params.d / params.m) * t).exp()) / params.sum_damping())
        }
        SystemFreqModel::ThirdOrder { r_inv, tau } => {
            let w2 = params.omega_d_sq();
            if w2 <= 0.0 {
                return Err(DynamicsError::Overdamped(w2));
            }
            let wd = w2.sqrt();
            let eta = params.eta(tau);
            let kappa = (params.gamma(r_inv, tau) - eta) / wd;
            let denom = params.sum_ratings() * (params.d + r_inv);
            let num = 1.0 - (-eta * t).exp() * ((wd * t).cos() + kappa * (wd * t).sin());
            Ok(num / denom)
        }
    }
}

/// |ġ(0)|, from the analytic derivative of g. Equals 1/ΣM_i for both
/// models.
pub fn system_freq_gdot0(params: &SystemFreqParams) -> f64 {
    match params.model {
        SystemFreqModel::SecondOrder => (params.d / params.m) / params.sum_damping(),
        SystemFreqModel::ThirdOrder { r_inv, tau } => {
            let eta = params.eta(tau);
            let gamma = params.gamma(r_inv, tau);
            let denom = params.sum_ratings() * (params.d + r_inv);
            ((2.0 * eta - gamma) / denom).abs()
        }
    }
    .abs()
}

/// ∫₀^ε |ġ(t)| dt. The integrand changes sign only at the analytically
/// known turning points of g, so the integral is an exact telescoping sum
/// of |g| differences over that partition.
pub fn average_rocof_coefficient(params: &SystemFreqParams, eps: f64) -> Result<f64, DynamicsError> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(DynamicsError::InvalidTimes);
    }
    match params.model {
        // g is strictly increasing: the integral is g(ε) - g(0) = g(ε).
        SystemFreqModel::SecondOrder => system_freq_g(params, eps),
        SystemFreqModel::ThirdOrder { r_inv, tau } => {
            let w2 = params.omega_d_sq();
            if w2 <= 0.0 {
                return Err(DynamicsError::Overdamped(w2));
            }
            let wd = w2.sqrt();
            let eta = params.eta(tau);
            let gamma = params.gamma(r_inv, tau);
            // ġ(t) ∝ e^{-ηt} (a cos ω_d t + b sin ω_d t): zeros where
            // cos(ω_d t - ψ) = 0 with ψ = atan2(b, a).
            let a = 2.0 * eta - gamma;
            let b = (eta * (gamma - eta) + w2) / wd;
            let psi = b.atan2(a);
            let mut cuts = vec![0.0];
            let mut k = ((-psi - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).ceil() as i64;
            loop {
                let t = (psi + std::f64::consts::FRAC_PI_2 + k as f64 * std::f64::consts::PI) / wd;
                if t >= eps {
                    break;
                }
                if t > 1e-12 {
                    cuts.push(t);
                }
                k += 1;
            }
            cuts.push(eps);
            let mut total = 0.0;
            for w in cuts.windows(2) {
                total += (system_freq_g(params, w[1])? - system_freq_g(params, w[0])?).abs();
            }
            Ok(total)
        }
    }
}

/// Dense RK4 integration of the full third-order dynamics (per-node
/// frequency, turbine power and aggregated line flows), returning the
/// center-of-inertia trace at the requested times. Serves as the
/// reference the closed-form g(t) is validated against.
pub fn simulate_third_order_reference(
    net: &ReducedNetwork,
    r_inv: &DVector<f64>,
    tau: f64,
    u: &DVector<f64>,
    times: &[f64],
) -> Result<Vec<f64>, DynamicsError> {
    let n = net.n;
    if u.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: u.len() });
    }
    if r_inv.len() != n {
        return Err(DynamicsError::DimensionMismatch { expected: n, got: r_inv.len() });
    }
    check_times(times)?;
    if !(tau > 0.0) {
        return Err(DynamicsError::RatingCondition("turbine time constant must be positive".into()));
    }

    let total_m: f64 = net.inertia.sum();
    // State y = (ω, q, p) with p the net outflow Lθ-rate aggregate.
    let deriv = |y: &DVector<f64>| -> DVector<f64> {
        let mut dy = DVector::zeros(3 * n);
        let omega = y.rows(0, n);
        let q = y.rows(n, n);
        let p = y.rows(2 * n, n);
        let flow = &net.laplacian * &omega.clone_owned();
        for i in 0..n {
            dy[i] = (-net.damping[i] * omega[i] + q[i] + u[i] - p[i]) / net.inertia[i];
            dy[n + i] = -(r_inv[i] * omega[i] + q[i]) / tau;
            dy[2 * n + i] = flow[i];
        }
        dy
    };

    const H_TARGET: f64 = 2.5e-4;
    let mut y = DVector::zeros(3 * n);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t_next in times {
        let span = t_next - t;
        if span > 0.0 {
            let steps = (span / H_TARGET).ceil() as usize;
            let h = span / steps as f64;
            for _ in 0..steps {
                let k1 = deriv(&y);
                let k2 = deriv(&(&y + &k1 * (h / 2.0)));
                let k3 = deriv(&(&y + &k2 * (h / 2.0)));
                let k4 = deriv(&(&y + &k3 * h));
                y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
            }
            t = t_next;
        }
        let coi: f64 = (0..n).map(|i| net.inertia[i] * y[i]).sum::<f64>() / total_m;
        out.push(coi);
    }
    Ok(out)
}

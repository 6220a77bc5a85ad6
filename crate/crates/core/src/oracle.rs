//! Independent reference implementations used by the test suites.
//!
//! Nothing here is consumed by the production pipeline: the swing
//! integrator works edge by edge with a fixed-step RK4 scheme instead of
//! the matrix exponential, and the diamond-benchmark oracle uses
//! plain rejection sampling instead of the chain. Results from this
//! module anchor the correctness tests of the fast paths.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{extract_reduced_lines, ReducedNetwork};
use crate::region::{HalfSpace, Polytope};

/// Fixed-step RK4 integration of the swing/flow dynamics
/// `M ω̇ = -D ω + u - C f`, `ḟ = B Cᵀ ω`, with flows carried per edge.
/// Returns (ω, ω̇) sampled at `times`, one row per node.
pub fn swing_rk4(
    net: &ReducedNetwork,
    u: &DVector<f64>,
    times: &[f64],
    h_target: f64,
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = net.n;
    assert_eq!(u.len(), n);
    let edges = extract_reduced_lines(&net.laplacian, 0.0);
    let m = edges.len();

    // State y = (ω_1..ω_n, f_1..f_m).
    let deriv = |y: &DVector<f64>| -> DVector<f64> {
        let mut dy = DVector::zeros(n + m);
        let mut outflow = vec![0.0; n];
        for (e, &(i, j, _)) in edges.iter().enumerate() {
            outflow[i] += y[n + e];
            outflow[j] -= y[n + e];
        }
        for i in 0..n {
            dy[i] = (-net.damping[i] * y[i] + u[i] - outflow[i]) / net.inertia[i];
        }
        for (e, &(i, j, b)) in edges.iter().enumerate() {
            dy[n + e] = b * (y[i] - y[j]);
        }
        dy
    };

    let mut omega = DMatrix::zeros(n, times.len());
    let mut omega_dot = DMatrix::zeros(n, times.len());
    let mut y = DVector::zeros(n + m);
    let mut t = 0.0;
    for (k, &t_next) in times.iter().enumerate() {
        let span = t_next - t;
        if span > 0.0 {
            let steps = (span / h_target).ceil() as usize;
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
        let dy = deriv(&y);
        for i in 0..n {
            omega[(i, k)] = y[i];
            omega_dot[(i, k)] = dy[i];
        }
    }
    (omega, omega_dot)
}

/// Rejection-sampling oracle for the diamond benchmark: draw from
/// N(0, diag(4, 1)) and keep points outside `{|x| + |y| <= half_width}`.
/// Returns the kept points.
pub fn diamond_rejection(seed: u64, draws: usize, half_width: f64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kept = Vec::new();
    for _ in 0..draws {
        let x = 2.0 * rng.sample::<f64, _>(StandardNormal);
        let y = rng.sample::<f64, _>(StandardNormal);
        if x.abs() + y.abs() > half_width {
            kept.push((x, y));
        }
    }
    kept
}

/// Mean and naive (i.i.d.) standard error of a sample.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Random connected weighted Laplacian on `n` buses: a random spanning
/// tree plus extra random edges, susceptances in [0.5, 3].
pub fn random_connected_laplacian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    let add_edge = |l: &mut DMatrix<f64>, i: usize, j: usize, b: f64| {
        l[(i, j)] -= b;
        l[(j, i)] -= b;
        l[(i, i)] += b;
        l[(j, j)] += b;
    };
    for j in 1..n {
        let i = rng.gen_range(0..j);
        add_edge(&mut l, i, j, rng.gen_range(0.5..3.0));
    }
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        if i != j {
            add_edge(&mut l, i, j, rng.gen_range(0.5..3.0));
        }
    }
    l
}

/// Random connected reduced network with moderate machine constants.
pub fn random_reduced_network(rng: &mut ChaCha8Rng, n: usize) -> ReducedNetwork {
    let laplacian = random_connected_laplacian(rng, n);
    ReducedNetwork {
        n,
        laplacian,
        inertia: DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(0.5..2.0))),
        damping: DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(0.1..0.5))),
        p_nom_mw: DVector::from_iterator(n, (0..n).map(|_| rng.gen_range(100.0..1000.0))),
        labels: (1..=n).map(|i| format!("G{i}")).collect(),
    }
}

/// Random intersection of slabs `|a·u| <= b` through the origin; always
/// ray-bounded because every constraint comes with its mirror.
pub fn random_slab_polytope(rng: &mut ChaCha8Rng, dim: usize, pairs: usize) -> Polytope {
    let mut halfspaces = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let mut a = DVector::zeros(dim);
        loop {
            for i in 0..dim {
                a[i] = rng.sample::<f64, _>(StandardNormal);
            }
            if a.norm() > 1e-6 {
                break;
            }
        }
        let b = rng.gen_range(0.5..3.0);
        halfspaces.push(HalfSpace { a: a.clone(), b, tag: None });
        halfspaces.push(HalfSpace { a: -a, b, tag: None });
    }
    Polytope::new(dim, halfspaces).expect("slab polytopes are valid")
}

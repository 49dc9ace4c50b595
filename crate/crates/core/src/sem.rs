//! Synthetic linear-SEM data: sparse Erdős–Rényi DAGs, forward simulation,
//! and the near-cyclic stress instance.
//!
//! All generation is deterministic given the seeds. A single 64-bit seed is
//! expanded into independent substreams of a portable counter-based
//! generator (ChaCha8): stream 0 drives the topology (node order and edge
//! selection), stream 1 the edge weights, and stream 2 the observation
//! noise. This split keeps, e.g., the sampled graph invariant when only the
//! noise seed changes.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{is_dag_support, spectral_radius, topological_order, DenseMatrix, Lu};

const TOPOLOGY_STREAM: u64 = 0;
const WEIGHT_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Parameters of a random sparse DAG draw.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct GraphSpec {
    /// Number of nodes.
    pub d: usize,
    /// Exact number of edges to place.
    pub num_edges: usize,
    /// Lower bound of the weight magnitude range.
    pub weight_low: f64,
    /// Upper bound of the weight magnitude range.
    pub weight_high: f64,
    /// Seed for topology and weights.
    pub seed: u64,
}

impl Default for GraphSpec {
    fn default() -> Self {
        GraphSpec { d: 50, num_edges: 50, weight_low: 0.5, weight_high: 1.0, seed: 0 }
    }
}

impl GraphSpec {
    /// Maximum number of edges a DAG on `d` nodes can carry.
    pub fn capacity(&self) -> usize {
        self.d * self.d.saturating_sub(1) / 2
    }

    pub fn validate(&self) -> Result<(), SemError> {
        if self.num_edges > self.capacity() {
            return Err(SemError::TooManyEdges {
                requested: self.num_edges,
                capacity: self.capacity(),
            });
        }
        if !(self.weight_low > 0.0 && self.weight_low <= self.weight_high) {
            return Err(SemError::BadWeightRange);
        }
        Ok(())
    }
}

/// Where a dataset came from. Kept alongside the data so that reports can
/// echo the full generation recipe.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Provenance {
    /// Synthetic: graph spec plus simulation parameters.
    Generated { graph: GraphSpec, n: usize, noise_std: f64, noise_seed: u64 },
    /// Loaded from an external file by a companion tool.
    External { path: String, centered: bool },
}

/// An n×d sample matrix, optionally paired with the generating weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    /// Samples, one row per observation.
    pub x: DenseMatrix,
    /// Ground-truth weighted adjacency when known.
    pub w_true: Option<DenseMatrix>,
    pub provenance: Provenance,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.x.rows()
    }

    pub fn d(&self) -> usize {
        self.x.cols()
    }
}

/// Failure modes of graph sampling and SEM simulation.
#[derive(Debug, Clone, PartialEq)]
pub enum SemError {
    TooManyEdges { requested: usize, capacity: usize },
    BadWeightRange,
    /// Simulation of a cyclic support without the near-cyclic opt-in.
    CyclicSupport,
    /// Near-cyclic simulation where the squared weights are not a
    /// contraction, so the implied series does not converge.
    SpectralRadiusTooLarge { rho: f64 },
    /// `I - W` singular during near-cyclic simulation.
    SingularSystem,
}

impl fmt::Display for SemError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SemError::TooManyEdges { requested, capacity } => {
                write!(f, "requested {} edges but a DAG holds at most {}", requested, capacity)
            }
            SemError::BadWeightRange => {
                write!(f, "weight range must satisfy 0 < low <= high")
            }
            SemError::CyclicSupport => {
                write!(f, "support is cyclic; pass the near-cyclic flag to simulate anyway")
            }
            SemError::SpectralRadiusTooLarge { rho } => {
                write!(f, "spectral radius of W∘W is {} >= 1; simulation would diverge", rho)
            }
            SemError::SingularSystem => write!(f, "I - W is singular"),
        }
    }
}

impl core::error::Error for SemError {}

/// Draw a weighted DAG: a uniform topological order, then exactly
/// `num_edges` ordered pairs consistent with it chosen uniformly without
/// replacement, each weighted uniformly from `±[weight_low, weight_high]`.
pub fn sample_er_dag(spec: &GraphSpec) -> Result<DenseMatrix, SemError> {
    spec.validate()?;
    let d = spec.d;

    let mut topo_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    topo_rng.set_stream(TOPOLOGY_STREAM);
    // Fisher-Yates for the node order.
    let mut position: Vec<usize> = (0..d).collect();
    for i in (1..d).rev() {
        let j = topo_rng.gen_range(0..=i);
        position.swap(i, j);
    }
    // All ordered pairs consistent with the order, in a canonical listing.
    let mut candidates: Vec<(usize, usize)> = Vec::with_capacity(spec.capacity());
    for i in 0..d {
        for j in 0..d {
            if position[i] < position[j] {
                candidates.push((i, j));
            }
        }
    }
    let mut chosen = rand::seq::index::sample(&mut topo_rng, candidates.len(), spec.num_edges)
        .into_vec();
    // Canonical edge order for the weight draw, so the weight stream maps
    // onto edges independently of the sampler's internal ordering.
    chosen.sort_unstable();

    let mut weight_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    weight_rng.set_stream(WEIGHT_STREAM);
    let mut w = DenseMatrix::zeros(d, d);
    for idx in chosen {
        let (i, j) = candidates[idx];
        let magnitude = weight_rng.gen_range(spec.weight_low..=spec.weight_high);
        let negative: bool = weight_rng.gen();
        w.set(i, j, if negative { -magnitude } else { magnitude });
    }
    debug_assert!(is_dag_support(&w), "construction guarantees acyclicity");
    Ok(w)
}

/// Standard normal draws via the Box-Muller transform, pair-cached so that
/// consecutive calls consume the underlying uniform stream two at a time.
struct NormalSource {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSource {
    fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(NOISE_STREAM);
        NormalSource { rng, spare: None }
    }

    fn next(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        // u1 in (0, 1] avoids log(0); u2 in [0, 1).
        let u1: f64 = 1.0 - self.rng.gen::<f64>();
        let u2: f64 = self.rng.gen();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * core::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }
}

/// Simulate `n` rows of the linear SEM `X = XW + Z` with iid Gaussian noise
/// of standard deviation `noise_std`.
///
/// DAG supports are simulated by forward substitution in topological
/// order. A cyclic support is accepted only with `allow_near_cyclic` set
/// and `spectral_radius(W∘W) < 1`, in which case the linear system
/// `X(I − W) = Z` is solved directly.
pub fn simulate_sem(
    w_true: &DenseMatrix,
    n: usize,
    noise_std: f64,
    seed: u64,
    allow_near_cyclic: bool,
) -> Result<DenseMatrix, SemError> {
    assert!(w_true.is_square(), "weight matrix must be square");
    let d = w_true.rows();
    let mut noise = NormalSource::new(seed);
    let mut z = DenseMatrix::zeros(n, d);
    for i in 0..n {
        for j in 0..d {
            z.set(i, j, noise_std * noise.next());
        }
    }

    match topological_order(w_true) {
        Some(order) => {
            // x_j = z_j + sum over parents i of w_ij * x_i, parents first.
            let mut x = z;
            for &j in &order {
                for i in 0..d {
                    let w = w_true.get(i, j);
                    if w != 0.0 && i != j {
                        for row in 0..n {
                            let v = x.get(row, j) + w * x.get(row, i);
                            x.set(row, j, v);
                        }
                    }
                }
            }
            Ok(x)
        }
        None => {
            if !allow_near_cyclic {
                return Err(SemError::CyclicSupport);
            }
            let sq = w_true.hadamard(w_true);
            let rho = spectral_radius(&sq).value;
            if rho >= 1.0 {
                return Err(SemError::SpectralRadiusTooLarge { rho });
            }
            // X = Z (I - W)^{-1}.
            let mut system = DenseMatrix::identity(d);
            system.add_scaled(-1.0, w_true);
            let lu = Lu::factor(&system).map_err(|_| SemError::SingularSystem)?;
            let b = lu.solve_matrix(&DenseMatrix::identity(d));
            Ok(z.matmul(&b))
        }
    }
}

/// Sample a graph and dataset in one step, recording full provenance.
pub fn generate_dataset(
    graph: &GraphSpec,
    n: usize,
    noise_std: f64,
    noise_seed: u64,
) -> Result<Dataset, SemError> {
    let w_true = sample_er_dag(graph)?;
    let x = simulate_sem(&w_true, n, noise_std, noise_seed, false)?;
    Ok(Dataset {
        x,
        w_true: Some(w_true),
        provenance: Provenance::Generated { graph: *graph, n, noise_std, noise_seed },
    })
}

/// The fixed 3-cycle stress instance: equal weights `√0.999996` on
/// `0→1→2→0`, so the squared-weight matrix has spectral radius `0.999996`.
pub fn near_cyclic_instance() -> DenseMatrix {
    let w = libm::sqrt(0.999996);
    let mut m = DenseMatrix::zeros(3, 3);
    m.set(0, 1, w);
    m.set(1, 2, w);
    m.set(2, 0, w);
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_nodes_one_edge() {
        let spec = GraphSpec { d: 2, num_edges: 1, weight_low: 0.5, weight_high: 1.0, seed: 1 };
        let w = sample_er_dag(&spec).unwrap();
        assert_eq!(w.count_nonzero(), 1, "exactly one edge must be placed");
        assert!(is_dag_support(&w));
    }

    #[test]
    fn fifty_node_benchmark_graph() {
        let spec = GraphSpec { d: 50, num_edges: 50, weight_low: 0.5, weight_high: 1.0, seed: 7 };
        let w = sample_er_dag(&spec).unwrap();
        assert_eq!(w.count_nonzero(), 50);
        assert!(is_dag_support(&w), "sampled support must be acyclic");
        for i in 0..50 {
            for j in 0..50 {
                let v = w.get(i, j);
                if v != 0.0 {
                    let a = v.abs();
                    assert!((0.5..=1.0).contains(&a), "weight magnitude {} out of range", a);
                }
            }
        }
    }

    #[test]
    fn edge_capacity_is_enforced() {
        let spec = GraphSpec { d: 3, num_edges: 4, weight_low: 0.5, weight_high: 1.0, seed: 0 };
        assert_eq!(
            sample_er_dag(&spec).unwrap_err(),
            SemError::TooManyEdges { requested: 4, capacity: 3 }
        );
    }

    #[test]
    fn graph_sampling_is_deterministic() {
        let spec = GraphSpec { d: 12, num_edges: 20, weight_low: 0.5, weight_high: 1.5, seed: 42 };
        let a = sample_er_dag(&spec).unwrap();
        let b = sample_er_dag(&spec).unwrap();
        assert_eq!(a.as_slice(), b.as_slice(), "same seed must give identical bytes");
        let other = GraphSpec { seed: 43, ..spec };
        let c = sample_er_dag(&other).unwrap();
        assert_ne!(a.as_slice(), c.as_slice(), "different seed should change the draw");
    }

    #[test]
    fn noise_seed_does_not_disturb_graph() {
        let graph = GraphSpec { d: 8, num_edges: 8, weight_low: 0.5, weight_high: 1.0, seed: 3 };
        let d1 = generate_dataset(&graph, 20, 1.0, 100).unwrap();
        let d2 = generate_dataset(&graph, 20, 1.0, 101).unwrap();
        assert_eq!(
            d1.w_true.as_ref().unwrap().as_slice(),
            d2.w_true.as_ref().unwrap().as_slice(),
            "graph must depend only on the graph seed"
        );
        assert_ne!(d1.x.as_slice(), d2.x.as_slice(), "noise must follow its own seed");
    }

    #[test]
    fn simulation_is_deterministic() {
        let w = near_cyclic_instance();
        let a = simulate_sem(&w, 50, 1.0, 9, true).unwrap();
        let b = simulate_sem(&w, 50, 1.0, 9, true).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
    }

    #[test]
    fn zero_graph_gives_unit_variance_noise() {
        let w = DenseMatrix::zeros(3, 3);
        let x = simulate_sem(&w, 20_000, 1.0, 5, false).unwrap();
        for j in 0..3 {
            let mut mean = 0.0;
            for i in 0..x.rows() {
                mean += x.get(i, j);
            }
            mean /= x.rows() as f64;
            let mut var = 0.0;
            for i in 0..x.rows() {
                let c = x.get(i, j) - mean;
                var += c * c;
            }
            var /= x.rows() as f64;
            assert!((var - 1.0).abs() < 0.05, "column {} variance {} should be near 1", j, var);
            assert!(mean.abs() < 0.05, "column {} mean {} should be near 0", j, mean);
        }
    }

    #[test]
    fn chain_accumulates_variance() {
        // 0 -> 1 with weight 1: Var(x_1) = 1 + 1 = 2.
        let mut w = DenseMatrix::zeros(2, 2);
        w.set(0, 1, 1.0);
        let x = simulate_sem(&w, 10_000, 1.0, 11, false).unwrap();
        let mut var = 0.0;
        for i in 0..x.rows() {
            let v = x.get(i, 1);
            var += v * v;
        }
        var /= x.rows() as f64;
        assert!((var - 2.0).abs() < 0.1, "child variance {} should be about 2", var);
    }

    #[test]
    fn empirical_covariance_matches_model() {
        let spec = GraphSpec { d: 4, num_edges: 4, weight_low: 0.5, weight_high: 1.0, seed: 21 };
        let w = sample_er_dag(&spec).unwrap();
        let n = 50_000;
        let x = simulate_sem(&w, n, 1.0, 22, false).unwrap();
        // Model covariance (I - W)^{-T} (I - W)^{-1}.
        let mut system = DenseMatrix::identity(4);
        system.add_scaled(-1.0, &w);
        let binv = Lu::factor(&system).unwrap().solve_matrix(&DenseMatrix::identity(4));
        let want = binv.transpose().matmul(&binv);
        let got = x.transpose().matmul(&x);
        for i in 0..4 {
            for j in 0..4 {
                let emp = got.get(i, j) / n as f64;
                assert!(
                    (emp - want.get(i, j)).abs() < 0.05,
                    "covariance entry ({}, {}): empirical {} vs model {}",
                    i,
                    j,
                    emp,
                    want.get(i, j)
                );
            }
        }
    }

    #[test]
    fn near_cyclic_instance_matches_advertised_radius() {
        let w = near_cyclic_instance();
        assert!(!is_dag_support(&w), "the stress instance is a genuine cycle");
        let rho = spectral_radius(&w.hadamard(&w));
        assert!(
            (rho.value - 0.999996).abs() <= 1e-9,
            "squared-weight spectral radius {} must be 0.999996 within 1e-9",
            rho.value
        );
        let entry = w.get(0, 1);
        assert!((entry - libm::sqrt(0.999996)).abs() < 1e-15);
    }

    #[test]
    fn cyclic_support_requires_opt_in() {
        let w = near_cyclic_instance();
        assert_eq!(simulate_sem(&w, 10, 1.0, 0, false).unwrap_err(), SemError::CyclicSupport);
        let x = simulate_sem(&w, 10, 1.0, 0, true).unwrap();
        assert!(x.all_finite(), "near-cyclic simulation must stay finite");
    }

    #[test]
    fn divergent_cycle_is_rejected() {
        let mut w = DenseMatrix::zeros(2, 2);
        w.set(0, 1, 1.5);
        w.set(1, 0, 1.5);
        match simulate_sem(&w, 10, 1.0, 0, true) {
            Err(SemError::SpectralRadiusTooLarge { rho }) => {
                assert!(rho >= 1.0, "reported radius {} should exceed 1", rho)
            }
            other => panic!("expected spectral radius rejection, got {:?}", other),
        }
    }
}

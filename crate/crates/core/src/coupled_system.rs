//! The coupled ring system and its pathwise integrators.
//!
//! In the transformed (random ODE) variables the ring evolves by
//!
//! ```text
//! dx^(j)/dt = F^(j)(x^(j), X̄^(j)) + λ (x^(j-1) - 2 x^(j) + x^(j+1))
//! F^(j)(x, X̄) = f^(j)(x + X̄) + x + X̄
//! ```
//!
//! with cyclic indices and the stationary convolutions `X̄^(j)` carrying the
//! noise. The equivalent stochastic form integrated by [`integrate_coupled_sode`]
//! is the exact change of variables `X = x + X̄`, i.e.
//!
//! ```text
//! dX^(j) = [ f^(j)(X^(j)) + (X^(j) - X̄^(j))
//!            + λ Δ_ring(X - X̄)^(j) ] dt + c_j dL^(j)
//! ```
//!
//! so that the two integrations agree pathwise up to O(step); the
//! transform-consistency check measures exactly this defect.
//!
//! Both integrators are explicit Euler with left-point evaluation (the
//! increment over a cell enters at its left node, keeping the scheme
//! predictable in the jump cells). Dissipativity keeps explicit stepping
//! stable for `h < 2 / (l + 4λ)`; the integrators enforce this bound and
//! refuse larger steps. States above `1e12` raise a divergence error naming
//! the first bad time instead of emitting NaN reports.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::grid::TimeGrid;
use crate::levy_process::{LevyPath, LevySpec};
use crate::math;
use crate::ou_stationary::{stationary_convolution, OUTrajectory};
use crate::rng::{Stream, PURPOSE_PROBE};
use crate::{Result, SimError};

/// Blow-up threshold for the divergence guard.
pub const BLOWUP_THRESHOLD: f64 = 1e12;

/// Left margin (in time units) of path support required by the stationary
/// convolutions; `e^{-35}` leaves the truncation bound far below tolerance.
pub const OU_SUPPORT_MARGIN: f64 = 35.0;

type CustomDrift = Arc<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
enum DriftKind {
    /// `f(u) = -a u`
    Linear { a: f64 },
    /// `f(u) = -a u - u³` componentwise
    CubicDamped { a: f64 },
    /// `f(u) = -a u + sin(u)` componentwise
    SineDamped { a: f64 },
    Custom(CustomDrift),
}

/// A drift with its declared one-sided dissipativity constant `l` and
/// integrability exponent bound `m0`.
///
/// The library ships three families; all satisfy
/// `⟨x - y, f(x) - f(y)⟩ <= -l ‖x - y‖²` with the stated `l`, and their
/// polynomial growth keeps every exponentially weighted integral of
/// `|f(X(s))|²` finite for sub-exponential `X`. Custom drifts may be
/// registered but must declare `(l, m0)` themselves.
#[derive(Clone)]
pub struct DriftSpec {
    name: String,
    kind: DriftKind,
    l: f64,
    m0: f64,
}

impl core::fmt::Debug for DriftSpec {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DriftSpec")
            .field("name", &self.name)
            .field("l", &self.l)
            .field("m0", &self.m0)
            .finish()
    }
}

impl DriftSpec {
    fn checked(name: String, kind: DriftKind, l: f64, m0: f64) -> Result<Self> {
        if !(l > 4.0) {
            return Err(SimError::InvalidParameter(format!(
                "drift {name}: dissipativity constant must exceed 4, got {l}"
            )));
        }
        if !(m0 >= l) {
            return Err(SimError::InvalidParameter(format!(
                "drift {name}: integrability exponent {m0} must be >= l = {l}"
            )));
        }
        Ok(DriftSpec { name, kind, l, m0 })
    }

    /// `f(u) = -a u`, dissipativity exactly `a`.
    pub fn linear(a: f64) -> Result<Self> {
        Self::checked(format!("linear(a={a})"), DriftKind::Linear { a }, a, a)
    }

    /// `f(u) = -a u - u³` componentwise; the cubic term only strengthens the
    /// contraction, so the declared constant is `a`.
    pub fn cubic_damped(a: f64) -> Result<Self> {
        Self::checked(
            format!("cubic(a={a})"),
            DriftKind::CubicDamped { a },
            a,
            a,
        )
    }

    /// `f(u) = -a u + sin(u)` componentwise; `sin` is 1-Lipschitz, so the
    /// declared constant is `a - 1`.
    pub fn sine_damped(a: f64) -> Result<Self> {
        Self::checked(
            format!("sine(a={a})"),
            DriftKind::SineDamped { a },
            a - 1.0,
            a - 1.0,
        )
    }

    /// Register a custom drift with declared constants.
    pub fn custom(
        name: &str,
        l: f64,
        m0: f64,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Result<Self> {
        Self::checked(name.into(), DriftKind::Custom(Arc::new(f)), l, m0)
    }

    /// Parse a library drift from `(kind, a)`.
    pub fn from_library(kind: &str, a: f64) -> Result<Self> {
        match kind {
            "linear" => Self::linear(a),
            "cubic" => Self::cubic_damped(a),
            "sine" => Self::sine_damped(a),
            other => Err(SimError::InvalidParameter(format!(
                "unknown drift kind {other:?} (expected linear, cubic or sine)"
            ))),
        }
    }

    #[inline]
    pub fn name(&self) -> &str {
        &self.name
    }

    /// Declared one-sided dissipativity constant.
    #[inline]
    pub fn dissipativity(&self) -> f64 {
        self.l
    }

    /// Declared integrability exponent bound.
    #[inline]
    pub fn integrability_bound(&self) -> f64 {
        self.m0
    }

    /// Evaluate `f(x)` into `out`.
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), out.len());
        match &self.kind {
            DriftKind::Linear { a } => {
                for (o, &u) in out.iter_mut().zip(x) {
                    *o = -a * u;
                }
            }
            DriftKind::CubicDamped { a } => {
                for (o, &u) in out.iter_mut().zip(x) {
                    *o = -a * u - u * u * u;
                }
            }
            DriftKind::SineDamped { a } => {
                for (o, &u) in out.iter_mut().zip(x) {
                    *o = -a * u + math::sin(u);
                }
            }
            DriftKind::Custom(f) => f(x, out),
        }
    }
}

/// The full experiment definition for one coupled run.
#[derive(Debug, Clone)]
pub struct SystemConfig {
    /// Ring size `N >= 2`; indices wrap (`0 ≡ N`, `N+1 ≡ 1`).
    pub n_components: usize,
    /// State dimension per component.
    pub dim: usize,
    /// Coupling coefficient; nonnegative (zero decouples the ring and is
    /// allowed for diagnostics).
    pub lambda: f64,
    pub drifts: Vec<DriftSpec>,
    /// Noise coefficient vectors, one per component, no zero entries.
    pub coefficients: Vec<Vec<f64>>,
    /// Law of the driving noises (independent across components).
    pub noise: LevySpec,
    /// Integration grid.
    pub grid: TimeGrid,
    /// Master seed for the per-component path substreams.
    pub seed: u64,
}

impl SystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_components < 2 {
            return Err(SimError::InvalidParameter(format!(
                "need at least 2 components, got {}",
                self.n_components
            )));
        }
        if self.dim == 0 {
            return Err(SimError::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(SimError::InvalidParameter(format!(
                "lambda must be finite and >= 0, got {}",
                self.lambda
            )));
        }
        if self.drifts.len() != self.n_components {
            return Err(SimError::Shape(format!(
                "{} drifts for {} components",
                self.drifts.len(),
                self.n_components
            )));
        }
        if self.coefficients.len() != self.n_components {
            return Err(SimError::Shape(format!(
                "{} coefficient vectors for {} components",
                self.coefficients.len(),
                self.n_components
            )));
        }
        for (j, c) in self.coefficients.iter().enumerate() {
            if c.len() != self.dim {
                return Err(SimError::Shape(format!(
                    "coefficient vector {j} has {} entries, dimension is {}",
                    c.len(),
                    self.dim
                )));
            }
            if c.iter().any(|&x| x == 0.0) {
                return Err(SimError::InvalidParameter(format!(
                    "coefficient vector {j} has a zero component"
                )));
            }
        }
        if self.noise.dimension != self.dim {
            return Err(SimError::Shape(format!(
                "noise dimension {} does not match state dimension {}",
                self.noise.dimension, self.dim
            )));
        }
        self.noise.validate()?;
        Ok(())
    }

    /// Largest declared dissipativity constant, controls the step bound.
    pub fn max_dissipativity(&self) -> f64 {
        self.drifts
            .iter()
            .map(|d| d.dissipativity())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Smallest declared dissipativity constant, controls decay envelopes.
    pub fn min_dissipativity(&self) -> f64 {
        self.drifts
            .iter()
            .map(|d| d.dissipativity())
            .fold(f64::INFINITY, f64::min)
    }

    /// Stability bound for explicit stepping.
    pub fn max_stable_step(&self) -> f64 {
        2.0 / (self.max_dissipativity() + 4.0 * self.lambda)
    }

    fn check_step(&self) -> Result<()> {
        let h = self.grid.step();
        let bound = self.max_stable_step();
        if h >= bound {
            return Err(SimError::InvalidParameter(format!(
                "step {h} violates the explicit stability bound {bound} \
                 (= 2 / (l + 4 lambda)); refine the grid"
            )));
        }
        Ok(())
    }

    /// Same configuration on a different grid.
    pub fn with_grid(&self, grid: TimeGrid) -> SystemConfig {
        SystemConfig {
            grid,
            ..self.clone()
        }
    }

    /// Same configuration with a different coupling.
    pub fn with_lambda(&self, lambda: f64) -> SystemConfig {
        SystemConfig {
            lambda,
            ..self.clone()
        }
    }

    /// Flat state length `N * d`.
    #[inline]
    pub fn state_len(&self) -> usize {
        self.n_components * self.dim
    }
}

/// Time-indexed states of the coupled system; the value at a node is the
/// right limit, matching the càdlàg convention of the driving paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: TimeGrid,
    pub n_blocks: usize,
    pub dim: usize,
    states: Vec<f64>,
}

impl Trajectory {
    pub(crate) fn with_capacity(grid: TimeGrid, n_blocks: usize, dim: usize) -> Self {
        let cap = grid.n_nodes() * n_blocks * dim;
        Trajectory {
            grid,
            n_blocks,
            dim,
            states: Vec::with_capacity(cap),
        }
    }

    pub(crate) fn push_state(&mut self, state: &[f64]) {
        debug_assert_eq!(state.len(), self.n_blocks * self.dim);
        self.states.extend_from_slice(state);
    }

    /// Full state (all blocks) at node `i`.
    #[inline]
    pub fn state(&self, i: usize) -> &[f64] {
        let w = self.n_blocks * self.dim;
        &self.states[i * w..(i + 1) * w]
    }

    /// Block `j` of the state at node `i`.
    #[inline]
    pub fn block(&self, i: usize, j: usize) -> &[f64] {
        let w = self.n_blocks * self.dim;
        &self.states[i * w + j * self.dim..i * w + (j + 1) * self.dim]
    }

    /// Endpoint state.
    pub fn last_state(&self) -> &[f64] {
        self.state(self.grid.n_cells())
    }
}

#[inline]
fn check_finite(state: &[f64], t: f64) -> Result<()> {
    for &x in state {
        if !x.is_finite() || math::abs(x) > BLOWUP_THRESHOLD {
            return Err(SimError::Divergence {
                time: t,
                detail: format!("state magnitude {x}"),
            });
        }
    }
    Ok(())
}

/// Ring Laplacian `(x^(j-1) - 2 x^(j) + x^(j+1))_j` with cyclic indices.
pub fn ring_laplacian(n_blocks: usize, dim: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(x.len(), n_blocks * dim);
    for j in 0..n_blocks {
        let left = (j + n_blocks - 1) % n_blocks;
        let right = (j + 1) % n_blocks;
        for k in 0..dim {
            out[j * dim + k] =
                (x[left * dim + k] - 2.0 * x[j * dim + k]) + x[right * dim + k];
        }
    }
}

fn rode_rhs_into(
    config: &SystemConfig,
    x: &[f64],
    xbar: &[f64],
    shifted: &mut [f64],
    lap: &mut [f64],
    out: &mut [f64],
) {
    let d = config.dim;
    for k in 0..x.len() {
        shifted[k] = x[k] + xbar[k];
    }
    ring_laplacian(config.n_components, d, x, lap);
    for j in 0..config.n_components {
        let block = j * d..(j + 1) * d;
        config.drifts[j].eval(&shifted[block.clone()], &mut out[block.clone()]);
        for k in block {
            out[k] += shifted[k] + config.lambda * lap[k];
        }
    }
}

/// Right-hand side of the coupled random ODE at one instant:
/// `F^(j)(x^(j), X̄^(j)) + λ Δ_ring(x)^(j)`.
pub fn rode_rhs(config: &SystemConfig, x: &[f64], xbar: &[f64]) -> Result<Vec<f64>> {
    config.validate()?;
    let len = config.state_len();
    if x.len() != len || xbar.len() != len {
        return Err(SimError::Shape(format!(
            "state/OU length {} / {} does not match N*d = {len}",
            x.len(),
            xbar.len()
        )));
    }
    let mut shifted = vec![0.0; len];
    let mut lap = vec![0.0; len];
    let mut out = vec![0.0; len];
    rode_rhs_into(config, x, xbar, &mut shifted, &mut lap, &mut out);
    Ok(out)
}

fn check_ou_match(config: &SystemConfig, ou: &[OUTrajectory]) -> Result<()> {
    if ou.len() != config.n_components {
        return Err(SimError::Shape(format!(
            "{} stationary trajectories for {} components",
            ou.len(),
            config.n_components
        )));
    }
    for (j, o) in ou.iter().enumerate() {
        if o.grid != config.grid {
            return Err(SimError::Alignment(format!(
                "stationary trajectory {j} grid does not match the integration grid"
            )));
        }
        if o.dim() != config.dim {
            return Err(SimError::Shape(format!(
                "stationary trajectory {j} has dimension {}, expected {}",
                o.dim(),
                config.dim
            )));
        }
    }
    Ok(())
}

fn gather_xbar(ou: &[OUTrajectory], i: usize, out: &mut [f64]) {
    let d = ou[0].dim();
    for (j, o) in ou.iter().enumerate() {
        out[j * d..(j + 1) * d].copy_from_slice(o.state(i));
    }
}

/// Integrate the coupled random ODE by explicit Euler with left-point
/// evaluation: `x_{i+1} = x_i + h F(x_i, X̄(t_i))`.
pub fn integrate_coupled_rode(
    config: &SystemConfig,
    ou: &[OUTrajectory],
    x0: &[f64],
) -> Result<Trajectory> {
    config.validate()?;
    config.check_step()?;
    check_ou_match(config, ou)?;
    let len = config.state_len();
    if x0.len() != len {
        return Err(SimError::Shape(format!(
            "initial state has {} entries, expected {len}",
            x0.len()
        )));
    }
    let h = config.grid.step();
    let mut traj = Trajectory::with_capacity(config.grid.clone(), config.n_components, config.dim);
    let mut state = x0.to_vec();
    let mut xbar = vec![0.0; len];
    let mut shifted = vec![0.0; len];
    let mut lap = vec![0.0; len];
    let mut rhs = vec![0.0; len];
    check_finite(&state, config.grid.time(0))?;
    traj.push_state(&state);
    for i in 0..config.grid.n_cells() {
        gather_xbar(ou, i, &mut xbar);
        rode_rhs_into(config, &state, &xbar, &mut shifted, &mut lap, &mut rhs);
        for k in 0..len {
            state[k] += h * rhs[k];
        }
        check_finite(&state, config.grid.time(i + 1))?;
        traj.push_state(&state);
    }
    Ok(traj)
}

/// Integrate the equivalent stochastic form by Euler-Maruyama with
/// left-point drift evaluation and increment-driven noise:
/// `X_{i+1} = X_i + h G(X_i, X̄(t_i)) + c ⊙ ΔL_i`, where `G` is the exact
/// transform of the random-ODE right-hand side.
pub fn integrate_coupled_sode(
    config: &SystemConfig,
    paths: &[LevyPath],
    x0: &[f64],
) -> Result<Trajectory> {
    config.validate()?;
    config.check_step()?;
    let len = config.state_len();
    if x0.len() != len {
        return Err(SimError::Shape(format!(
            "initial state has {} entries, expected {len}",
            x0.len()
        )));
    }
    let ou = build_stationary(config, paths)?;
    let offsets: Vec<usize> = paths
        .iter()
        .map(|p| p.grid().offset_of(&config.grid))
        .collect::<Result<_>>()?;

    let d = config.dim;
    let h = config.grid.step();
    let mut traj = Trajectory::with_capacity(config.grid.clone(), config.n_components, config.dim);
    let mut state = x0.to_vec();
    let mut xbar = vec![0.0; len];
    let mut diff = vec![0.0; len];
    let mut lap = vec![0.0; len];
    let mut drift = vec![0.0; len];
    check_finite(&state, config.grid.time(0))?;
    traj.push_state(&state);
    for i in 0..config.grid.n_cells() {
        gather_xbar(&ou, i, &mut xbar);
        // G(X, X̄) block j: f_j(X_j) + (X_j - X̄_j) + λ Δ_ring(X - X̄)_j
        for k in 0..len {
            diff[k] = state[k] - xbar[k];
        }
        ring_laplacian(config.n_components, d, &diff, &mut lap);
        for j in 0..config.n_components {
            let block = j * d..(j + 1) * d;
            config.drifts[j].eval(&state[block.clone()], &mut drift[block.clone()]);
            for k in block {
                drift[k] += diff[k] + config.lambda * lap[k];
            }
        }
        for j in 0..config.n_components {
            for k in 0..d {
                let idx = j * d + k;
                state[idx] += h * drift[idx]
                    + config.coefficients[j][k] * paths[j].increment(offsets[j] + i, k);
            }
        }
        check_finite(&state, config.grid.time(i + 1))?;
        traj.push_state(&state);
    }
    Ok(traj)
}

/// Stationary convolutions of the system paths on the integration grid.
pub fn build_stationary(config: &SystemConfig, paths: &[LevyPath]) -> Result<Vec<OUTrajectory>> {
    if paths.len() != config.n_components {
        return Err(SimError::Shape(format!(
            "{} paths for {} components",
            paths.len(),
            config.n_components
        )));
    }
    paths
        .iter()
        .zip(&config.coefficients)
        .map(|(p, c)| stationary_convolution(p, c, &config.grid))
        .collect()
}

/// Sample `n` independent driving paths covering `grid` with the left
/// support margin required by the stationary convolutions. The path of
/// component `j` uses substream pair `(2j, 2j + 1)` of the master seed.
pub fn sample_paths_for(
    noise: &LevySpec,
    grid: &TimeGrid,
    seed: u64,
    n: usize,
    extra_left: f64,
) -> Result<Vec<LevyPath>> {
    let step = grid.step();
    let margin_cells = libm::ceil((OU_SUPPORT_MARGIN + extra_left.max(0.0)) / step) as i64;
    // two-sided sampling needs the grid to straddle zero
    let k_start = (grid.k_start() - margin_cells).min(-1);
    let k_end = (grid.k_start() + grid.n_cells() as i64).max(1);
    let path_grid = TimeGrid::from_lattice(k_start, (k_end - k_start) as usize, step)?;
    (0..n)
        .map(|j| LevyPath::sample_two_sided_tagged(noise, &path_grid, seed, j))
        .collect()
}

/// Sample the `N` independent driving paths of a configuration.
pub fn sample_system_paths(config: &SystemConfig, extra_left: f64) -> Result<Vec<LevyPath>> {
    config.validate()?;
    sample_paths_for(
        &config.noise,
        &config.grid,
        config.seed,
        config.n_components,
        extra_left,
    )
}

/// Consistency of the two integration routes: builds the stationary
/// convolutions, integrates the random ODE from `x0` and the stochastic form
/// from `X0 = x0 + X̄(t_start)`, and returns
/// `sup_t ‖X(t) - (x(t) + X̄(t))‖`. Contract: O(step).
pub fn transform_consistency(
    config: &SystemConfig,
    paths: &[LevyPath],
    x0: &[f64],
) -> Result<f64> {
    let ou = build_stationary(config, paths)?;
    let rode = integrate_coupled_rode(config, &ou, x0)?;
    let len = config.state_len();
    let mut xbar0 = vec![0.0; len];
    gather_xbar(&ou, 0, &mut xbar0);
    let x0_sode: Vec<f64> = x0.iter().zip(&xbar0).map(|(a, b)| a + b).collect();
    let sode = integrate_coupled_sode(config, paths, &x0_sode)?;
    let mut xbar = vec![0.0; len];
    let mut sup: f64 = 0.0;
    for i in 0..config.grid.n_nodes() {
        gather_xbar(&ou, i, &mut xbar);
        let mut err_sq = 0.0;
        for k in 0..len {
            let e = sode.state(i)[k] - (rode.state(i)[k] + xbar[k]);
            err_sq += e * e;
        }
        sup = sup.max(math::sqrt(err_sq));
    }
    Ok(sup)
}

/// Empirical one-sided dissipativity constant of a drift:
/// `min over sampled pairs of -⟨x - y, f(x) - f(y)⟩ / ‖x - y‖²`.
///
/// Coincident pairs are resampled, never divided by zero. The library
/// invariant is `estimate >= declared l`.
pub fn estimate_dissipativity(
    drift: &DriftSpec,
    dim: usize,
    radius: f64,
    n_pairs: usize,
    seed: u64,
) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(SimError::InvalidParameter(format!(
            "sample box radius must be positive, got {radius}"
        )));
    }
    if n_pairs == 0 {
        return Err(SimError::InvalidParameter("need at least one pair".into()));
    }
    let mut stream = Stream::derive(seed, PURPOSE_PROBE);
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    let mut fx = vec![0.0; dim];
    let mut fy = vec![0.0; dim];
    let mut best = f64::INFINITY;
    let mut drawn = 0;
    while drawn < n_pairs {
        for k in 0..dim {
            x[k] = stream.uniform_in(-radius, radius);
            y[k] = stream.uniform_in(-radius, radius);
        }
        let gap_sq = math::dist_sq(&x, &y);
        if gap_sq == 0.0 {
            continue; // resample coincident pair
        }
        drawn += 1;
        drift.eval(&x, &mut fx);
        drift.eval(&y, &mut fy);
        let mut inner = 0.0;
        for k in 0..dim {
            inner += (x[k] - y[k]) * (fx[k] - fy[k]);
        }
        best = best.min(-inner / gap_sq);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn grid(t0: f64, t1: f64, h: f64) -> TimeGrid {
        TimeGrid::new(t0, t1, h).unwrap()
    }

    fn zero_noise_config(n: usize, dim: usize, lambda: f64, a: f64, g: TimeGrid) -> SystemConfig {
        SystemConfig {
            n_components: n,
            dim,
            lambda,
            drifts: (0..n).map(|_| DriftSpec::linear(a).unwrap()).collect(),
            coefficients: vec![vec![1.0; dim]; n],
            noise: LevySpec::compound_poisson(0.0, 1.0, dim),
            grid: g,
            seed: 7,
        }
    }

    fn mixed_drifts(a: f64) -> Vec<DriftSpec> {
        vec![
            DriftSpec::linear(a).unwrap(),
            DriftSpec::cubic_damped(a).unwrap(),
            DriftSpec::sine_damped(a + 1.0).unwrap(),
        ]
    }

    #[test]
    fn drift_library_validates_constants() {
        assert!(DriftSpec::linear(4.0).is_err());
        assert!(DriftSpec::linear(4.5).is_ok());
        assert!(DriftSpec::sine_damped(5.0).is_err()); // declared l = 4
        assert!(DriftSpec::sine_damped(5.5).is_ok());
        assert!(DriftSpec::custom("c", 5.0, 4.0, |_x, _o| {}).is_err());
    }

    #[test]
    fn rhs_is_zero_at_the_origin_without_noise() {
        let cfg = zero_noise_config(3, 2, 0.0, 6.0, grid(0.0, 1.0, 0.01));
        let x = vec![0.0; 6];
        let xbar = vec![0.0; 6];
        let rhs = rode_rhs(&cfg, &x, &xbar).unwrap();
        assert!(rhs.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coupling_vanishes_on_equal_blocks() {
        let g = grid(0.0, 1.0, 0.01);
        let x = vec![0.4, -1.0, 0.4, -1.0, 0.4, -1.0];
        let xbar = vec![0.1; 6];
        let with_coupling = rode_rhs(
            &zero_noise_config(3, 2, 5.0, 6.0, g.clone()),
            &x,
            &xbar,
        )
        .unwrap();
        let without = rode_rhs(&zero_noise_config(3, 2, 0.0, 6.0, g), &x, &xbar).unwrap();
        assert_eq!(with_coupling, without);
    }

    #[test]
    fn ring_laplacian_hand_value() {
        // N = 3, d = 1, x = (1, 0, 0): Laplacian = (-2, 1, 1), scaled by
        // lambda = 2 gives (-4, 2, 2)
        let mut out = vec![0.0; 3];
        ring_laplacian(3, 1, &[1.0, 0.0, 0.0], &mut out);
        assert_eq!(out, vec![-2.0, 1.0, 1.0]);
        let cfg = zero_noise_config(3, 1, 2.0, 6.0, grid(0.0, 1.0, 0.01));
        let rhs = rode_rhs(&cfg, &[1.0, 0.0, 0.0], &[0.0; 3]).unwrap();
        // block j: -6 x + x + lambda lap = -5 x + 2 lap
        assert_eq!(rhs, vec![-5.0 - 4.0, 2.0, 2.0]);
    }

    #[test]
    fn equal_blocks_decay_like_the_scalar_recursion() {
        // zero noise, f = -6u, equal blocks: every block follows
        // v_{i+1} = (1 + h (-6 + 1)) v_i   (the +1 from the additive term)
        let h = 1e-3;
        let g = grid(0.0, 1.0, h);
        let cfg = zero_noise_config(4, 1, 3.0, 6.0, g.clone());
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        let v0 = 0.7;
        let traj = integrate_coupled_rode(&cfg, &ou, &[v0; 4]).unwrap();
        let mut v = v0;
        for i in 0..=g.n_cells() {
            // blocks stay exactly equal by symmetry
            for j in 1..4 {
                assert_eq!(traj.block(i, j)[0], traj.block(i, 0)[0], "node {i} block {j}");
            }
            assert_relative_eq!(traj.block(i, 0)[0], v, max_relative = 1e-12);
            v += h * (-5.0 * v);
        }
    }

    #[test]
    fn integration_is_deterministic() {
        let g = grid(0.0, 1.0, 1e-3);
        let cfg = SystemConfig {
            n_components: 3,
            dim: 1,
            lambda: 1.0,
            drifts: mixed_drifts(5.0),
            coefficients: vec![vec![1.0]; 3],
            noise: LevySpec::brownian(1.0, 1),
            grid: g,
            seed: 42,
        };
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        let a = integrate_coupled_rode(&cfg, &ou, &[0.3, -0.2, 0.1]).unwrap();
        let b = integrate_coupled_rode(&cfg, &ou, &[0.3, -0.2, 0.1]).unwrap();
        assert_eq!(a, b);
        let sa = integrate_coupled_sode(&cfg, &paths, &[0.3, -0.2, 0.1]).unwrap();
        let sb = integrate_coupled_sode(&cfg, &paths, &[0.3, -0.2, 0.1]).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn endpoint_error_is_first_order_in_the_step() {
        // Richardson halving on smooth (Brownian-free) input: for a
        // first-order scheme the successive endpoint differences
        // |x_h - x_{h/2}| and |x_{h/2} - x_{h/4}| shrink by a factor ~2
        let master = grid(0.0, 1.0, 2.5e-4);
        let cfg_master = SystemConfig {
            n_components: 3,
            dim: 1,
            lambda: 1.0,
            drifts: mixed_drifts(5.0),
            coefficients: vec![vec![1.0]; 3],
            noise: LevySpec::compound_poisson(0.0, 1.0, 1).with_drift(1.5),
            grid: master.clone(),
            seed: 5,
        };
        let master_paths = sample_system_paths(&cfg_master, 0.0).unwrap();
        let x0 = [0.5, -0.5, 0.25];
        let endpoint = |factor: usize| {
            let cfg = cfg_master.with_grid(master.coarsen(factor).unwrap());
            let ps: Vec<LevyPath> = master_paths
                .iter()
                .map(|p| p.restrict(factor).unwrap())
                .collect();
            let ou = build_stationary(&cfg, &ps).unwrap();
            integrate_coupled_rode(&cfg, &ou, &x0)
                .unwrap()
                .last_state()
                .to_vec()
        };
        let x_h = endpoint(4);
        let x_h2 = endpoint(2);
        let x_h4 = endpoint(1);
        let e1 = math::dist(&x_h, &x_h2);
        let e2 = math::dist(&x_h2, &x_h4);
        let ratio = e1 / e2;
        assert!(ratio > 1.4 && ratio < 2.8, "refinement ratio {ratio}");
    }

    #[test]
    fn sode_zero_noise_keeps_equal_blocks_equal() {
        let g = grid(0.0, 1.0, 1e-3);
        let cfg = zero_noise_config(3, 2, 2.0, 6.0, g.clone());
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let x0 = vec![0.3, -0.1, 0.3, -0.1, 0.3, -0.1];
        let traj = integrate_coupled_sode(&cfg, &paths, &x0).unwrap();
        for i in 0..g.n_nodes() {
            let b0 = traj.block(i, 0).to_vec();
            for j in 1..3 {
                assert_eq!(traj.block(i, j), &b0[..], "node {i} block {j}");
            }
        }
    }

    #[test]
    fn single_jump_enters_the_state_exactly() {
        use crate::levy_process::{IncrementSequence, JumpRecord};
        // one jump of size J in component 1 at a known cell, zero elsewhere
        let h = 1e-3;
        let g = grid(-37.0, 1.0, h);
        let n = 3usize;
        let spec = LevySpec::compound_poisson(0.0, 1.0, 1);
        let jump_size = 2.5;
        let jump_cell = g.index_of(0.5).unwrap();
        let make_path = |with_jump: bool| {
            let mut values = vec![0.0; g.n_cells()];
            let jumps = if with_jump {
                values[jump_cell] = jump_size;
                vec![JumpRecord {
                    cell: jump_cell,
                    time: 0.5 + 0.3 * h,
                    component: 0,
                    size: jump_size,
                }]
            } else {
                Vec::new()
            };
            let inc = IncrementSequence {
                grid: g.clone(),
                dimension: 1,
                values,
                jumps: Some(jumps),
            };
            LevyPath::from_increments(&spec, &inc, 0).unwrap()
        };
        let paths = vec![make_path(false), make_path(true), make_path(false)];
        let cfg = SystemConfig {
            n_components: n,
            dim: 1,
            lambda: 1.0,
            drifts: (0..n).map(|_| DriftSpec::linear(6.0).unwrap()).collect(),
            coefficients: vec![vec![1.0], vec![0.8], vec![1.0]],
            noise: spec,
            grid: g.subgrid(g.index_of(0.0).unwrap(), g.n_cells()).unwrap(),
            seed: 0,
        };
        let traj = integrate_coupled_sode(&cfg, &paths, &[0.2, 0.2, 0.2]).unwrap();
        let i = cfg.grid.index_of(0.5).unwrap();
        // state change at the jump cell minus the no-jump drift prediction
        // equals c_j * J exactly
        let ou = build_stationary(&cfg, &paths).unwrap();
        let mut xbar = vec![0.0; 3];
        gather_xbar(&ou, i, &mut xbar);
        let state = traj.state(i);
        let mut diff = vec![0.0; 3];
        for k in 0..3 {
            diff[k] = state[k] - xbar[k];
        }
        let mut lap = vec![0.0; 3];
        ring_laplacian(3, 1, &diff, &mut lap);
        let mut fx = vec![0.0; 1];
        cfg.drifts[1].eval(&state[1..2], &mut fx);
        let predicted = state[1] + h * (fx[0] + diff[1] + cfg.lambda * lap[1]);
        let actual = traj.state(i + 1)[1];
        assert_relative_eq!(actual - predicted, 0.8 * jump_size, epsilon = 1e-12);
    }

    #[test]
    fn transform_consistency_zero_noise_is_roundoff() {
        let g = grid(0.0, 1.0, 1e-3);
        let cfg = zero_noise_config(3, 1, 1.0, 6.0, g);
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let disc = transform_consistency(&cfg, &paths, &[0.5, -0.5, 0.2]).unwrap();
        assert!(disc <= 1e-14, "discrepancy {disc}");
    }

    #[test]
    fn transform_consistency_halves_with_the_step() {
        let fine_grid = grid(0.0, 2.0, 5e-4);
        let cfg_fine = SystemConfig {
            n_components: 3,
            dim: 1,
            lambda: 1.0,
            drifts: mixed_drifts(5.0),
            coefficients: vec![vec![1.0]; 3],
            noise: LevySpec::brownian(1.0, 1),
            grid: fine_grid.clone(),
            seed: 2,
        };
        let paths = sample_system_paths(&cfg_fine, 0.0).unwrap();
        let coarse_paths: Vec<LevyPath> =
            paths.iter().map(|p| p.restrict(2).unwrap()).collect();
        let cfg_coarse = cfg_fine.with_grid(fine_grid.coarsen(2).unwrap());
        let x0 = [0.4, 0.0, -0.4];
        let d_fine = transform_consistency(&cfg_fine, &paths, &x0).unwrap();
        let d_coarse = transform_consistency(&cfg_coarse, &coarse_paths, &x0).unwrap();
        let ratio = d_coarse / d_fine;
        assert!(
            ratio > 1.6 && ratio < 2.4,
            "halving ratio {ratio} ({d_coarse} / {d_fine})"
        );
    }

    #[test]
    fn transform_consistency_first_order_for_jumps() {
        let base = grid(0.0, 1.0, 1e-3);
        let steps = [1usize, 2, 4];
        let fine = base.refine(4).unwrap();
        let cfg_master = SystemConfig {
            n_components: 2,
            dim: 1,
            lambda: 1.0,
            drifts: vec![DriftSpec::linear(6.0).unwrap(), DriftSpec::linear(5.0).unwrap()],
            coefficients: vec![vec![1.0]; 2],
            noise: LevySpec::compound_poisson(4.0, 1.0, 1),
            grid: fine.clone(),
            seed: 13,
        };
        let master_paths = sample_system_paths(&cfg_master, 0.0).unwrap();
        let x0 = [0.5, -0.5];
        let mut discrepancies = Vec::new();
        for &m in &steps {
            let factor = 4 / m;
            let cfg = cfg_master.with_grid(fine.coarsen(factor).unwrap());
            let paths: Vec<LevyPath> = master_paths
                .iter()
                .map(|p| p.restrict(factor).unwrap())
                .collect();
            discrepancies.push(transform_consistency(&cfg, &paths, &x0).unwrap());
        }
        // discrepancies listed coarse to fine must decrease with the step
        assert!(
            discrepancies[0] > discrepancies[1] && discrepancies[1] > discrepancies[2],
            "{discrepancies:?}"
        );
    }

    #[test]
    fn dissipativity_linear_is_exact() {
        let d = DriftSpec::linear(6.0).unwrap();
        let est = estimate_dissipativity(&d, 3, 2.0, 200, 1).unwrap();
        assert_relative_eq!(est, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn dissipativity_cubic_at_least_declared() {
        let d = DriftSpec::cubic_damped(5.0).unwrap();
        let est = estimate_dissipativity(&d, 2, 3.0, 500, 2).unwrap();
        assert!(est >= 5.0 - 1e-12, "estimate {est}");
    }

    #[test]
    fn dissipativity_sine_at_least_declared() {
        let d = DriftSpec::sine_damped(6.0).unwrap();
        let est = estimate_dissipativity(&d, 2, 3.0, 500, 3).unwrap();
        assert!(est >= 5.0 - 1e-12, "estimate {est}");
    }

    #[test]
    fn ring_rotation_equivariance_is_exact() {
        let g = grid(0.0, 1.0, 1e-3);
        let cfg = SystemConfig {
            n_components: 3,
            dim: 1,
            lambda: 2.0,
            drifts: mixed_drifts(5.0),
            coefficients: vec![vec![1.0], vec![0.5], vec![2.0]],
            noise: LevySpec::brownian(1.0, 1),
            grid: g.clone(),
            seed: 6,
        };
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let x0 = [0.3, -0.2, 0.6];
        let ou = build_stationary(&cfg, &paths).unwrap();
        let base = integrate_coupled_rode(&cfg, &ou, &x0).unwrap();

        // rotate drifts, coefficients, paths and the initial state by one
        fn rot<T>(v: &mut Vec<T>) {
            let first = v.remove(0);
            v.push(first);
        }
        let mut cfg_rot = cfg.clone();
        rot(&mut cfg_rot.drifts);
        rot(&mut cfg_rot.coefficients);
        let mut paths_rot = paths.clone();
        rot(&mut paths_rot);
        let x0_rot = [x0[1], x0[2], x0[0]];
        let ou_rot = build_stationary(&cfg_rot, &paths_rot).unwrap();
        let rotated = integrate_coupled_rode(&cfg_rot, &ou_rot, &x0_rot).unwrap();
        for i in 0..g.n_nodes() {
            for j in 0..3 {
                assert_eq!(
                    rotated.block(i, j)[0],
                    base.block(i, (j + 1) % 3)[0],
                    "node {i} block {j}"
                );
            }
        }
    }

    #[test]
    fn zero_coupling_decouples_bit_for_bit() {
        let g = grid(0.0, 1.0, 1e-3);
        let cfg = SystemConfig {
            n_components: 3,
            dim: 1,
            lambda: 0.0,
            drifts: mixed_drifts(5.0),
            coefficients: vec![vec![1.0], vec![0.5], vec![2.0]],
            noise: LevySpec::brownian(1.0, 1),
            grid: g.clone(),
            seed: 9,
        };
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        let x0 = [0.3, -0.2, 0.6];
        let coupled = integrate_coupled_rode(&cfg, &ou, &x0).unwrap();
        // each block must match a 2-component ring of identical nodes driven
        // by the same path, which also decouples at lambda = 0
        for j in 0..3 {
            let single = SystemConfig {
                n_components: 2,
                dim: 1,
                lambda: 0.0,
                drifts: vec![cfg.drifts[j].clone(), cfg.drifts[j].clone()],
                coefficients: vec![cfg.coefficients[j].clone(); 2],
                noise: cfg.noise.clone(),
                grid: g.clone(),
                seed: 9,
            };
            let ou_single = vec![ou[j].clone(), ou[j].clone()];
            let traj = integrate_coupled_rode(&single, &ou_single, &[x0[j], x0[j]]).unwrap();
            for i in 0..g.n_nodes() {
                assert_eq!(traj.block(i, 0)[0], coupled.block(i, j)[0]);
            }
        }
    }

    #[test]
    fn oversized_step_is_rejected() {
        let g = grid(0.0, 1.0, 0.01); // bound: 2/(6 + 4*100) = 0.0049
        let cfg = zero_noise_config(3, 1, 100.0, 6.0, g);
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        assert!(matches!(
            integrate_coupled_rode(&cfg, &ou, &[0.0; 3]),
            Err(SimError::InvalidParameter(_))
        ));
    }

    #[test]
    fn blowup_raises_divergence_with_first_bad_time() {
        let g = grid(0.0, 1.0, 1e-3);
        let mut cfg = zero_noise_config(2, 1, 0.0, 6.0, g);
        cfg.drifts = vec![
            DriftSpec::cubic_damped(6.0).unwrap(),
            DriftSpec::cubic_damped(6.0).unwrap(),
        ];
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        // explicit Euler on -u^3 from far outside its stability region
        let res = integrate_coupled_rode(&cfg, &ou, &[1e7, 0.0]);
        match res {
            Err(SimError::Divergence { time, .. }) => assert!(time > 0.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }
}

//! The mean-field system reached in the strong-coupling limit.
//!
//! As the coupling grows, all ring components collapse onto the solution of
//! the averaged random ODE
//!
//! ```text
//! dZ/dt = (1/N) Σ_j f^(j)(X̄^(j) + Z) + (1/N) Σ_j (X̄^(j) + Z)
//! ```
//!
//! which has no coupling coefficient. The module reuses the same explicit
//! Euler stepping as the coupled integrator (it is a thin configuration of
//! it), estimates the singleton pullback attractor `Z̄(ω)`, and reconstructs
//! the stationary solution `z(t) = Z̄(θ_t ω) + (1/N) Σ X̄_t^(j)` of the
//! induced stochastic form
//!
//! ```text
//! dz = [ (1/N) Σ_j f^(j)(X̄^(j) + Z) + Z ] dt + (1/N) Σ_j c_j dL^(j),
//! ```
//! the exact change of variables `z = Z + mean(X̄)`; the reconstruction
//! residual measures its per-cell defect.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::attractor::{AttractorEstimate, PULLBACK_TOL};
use crate::coupled_system::{SystemConfig, Trajectory, BLOWUP_THRESHOLD};
use crate::grid::TimeGrid;
use crate::levy_process::{LevyPath, LevySpec};
use crate::math;
use crate::ou_stationary::{stationary_convolution, OUTrajectory};
use crate::{Result, SimError};

/// Experiment definition for the averaged system; the coupled configuration
/// minus the coupling coefficient.
#[derive(Debug, Clone)]
pub struct AveragedConfig {
    pub n_components: usize,
    pub dim: usize,
    pub drifts: Vec<crate::coupled_system::DriftSpec>,
    pub coefficients: Vec<Vec<f64>>,
    pub noise: LevySpec,
    pub grid: TimeGrid,
    pub seed: u64,
}

impl AveragedConfig {
    /// Drop the coupling from a ring configuration.
    pub fn from_system(config: &SystemConfig) -> AveragedConfig {
        AveragedConfig {
            n_components: config.n_components,
            dim: config.dim,
            drifts: config.drifts.clone(),
            coefficients: config.coefficients.clone(),
            noise: config.noise.clone(),
            grid: config.grid.clone(),
            seed: config.seed,
        }
    }


    pub fn validate(&self) -> Result<()> {
        if self.n_components == 0 {
            return Err(SimError::InvalidParameter(
                "need at least one component".into(),
            ));
        }
        if self.dim == 0 {
            return Err(SimError::InvalidParameter("dimension must be >= 1".into()));
        }
        if self.drifts.len() != self.n_components
            || self.coefficients.len() != self.n_components
        {
            return Err(SimError::Shape(format!(
                "{} drifts / {} coefficient vectors for {} components",
                self.drifts.len(),
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
            return Err(SimError::Shape(
                "noise dimension does not match state dimension".into(),
            ));
        }
        self.noise.validate()?;
        Ok(())
    }

    pub fn min_dissipativity(&self) -> f64 {
        self.drifts
            .iter()
            .map(|d| d.dissipativity())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_dissipativity(&self) -> f64 {
        self.drifts
            .iter()
            .map(|d| d.dissipativity())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn with_grid(&self, grid: TimeGrid) -> AveragedConfig {
        AveragedConfig {
            grid,
            ..self.clone()
        }
    }

    fn check_step(&self) -> Result<()> {
        let h = self.grid.step();
        let bound = 2.0 / self.max_dissipativity();
        if h >= bound {
            return Err(SimError::InvalidParameter(format!(
                "step {h} violates the explicit stability bound {bound}"
            )));
        }
        Ok(())
    }
}

fn check_ou(config: &AveragedConfig, ou: &[OUTrajectory]) -> Result<()> {
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
                "stationary trajectory {j} dimension mismatch"
            )));
        }
    }
    Ok(())
}

/// Right-hand side of the averaged system at one instant.
fn averaged_rhs_into(
    config: &AveragedConfig,
    z: &[f64],
    ou: &[OUTrajectory],
    node: usize,
    shifted: &mut [f64],
    fbuf: &mut [f64],
    out: &mut [f64],
) {
    let d = config.dim;
    let inv_n = 1.0 / config.n_components as f64;
    for k in 0..d {
        out[k] = 0.0;
    }
    let mut lin = vec![0.0; d];
    for (j, o) in ou.iter().enumerate() {
        let xbar = o.state(node);
        for k in 0..d {
            shifted[k] = z[k] + xbar[k];
        }
        config.drifts[j].eval(shifted, fbuf);
        for k in 0..d {
            out[k] += fbuf[k];
            lin[k] += shifted[k];
        }
    }
    for k in 0..d {
        out[k] = (out[k] + lin[k]) * inv_n;
    }
}

/// Explicit Euler integration of the averaged system; a single-block
/// trajectory in the same state dimension.
pub fn integrate_averaged_rode(
    config: &AveragedConfig,
    ou: &[OUTrajectory],
    z0: &[f64],
) -> Result<Trajectory> {
    config.validate()?;
    config.check_step()?;
    check_ou(config, ou)?;
    if z0.len() != config.dim {
        return Err(SimError::Shape(format!(
            "initial state has {} entries, expected {}",
            z0.len(),
            config.dim
        )));
    }
    let d = config.dim;
    let h = config.grid.step();
    let mut traj = Trajectory::with_capacity(config.grid.clone(), 1, d);
    let mut state = z0.to_vec();
    let mut shifted = vec![0.0; d];
    let mut fbuf = vec![0.0; d];
    let mut rhs = vec![0.0; d];
    traj.push_state(&state);
    for i in 0..config.grid.n_cells() {
        averaged_rhs_into(config, &state, ou, i, &mut shifted, &mut fbuf, &mut rhs);
        for k in 0..d {
            state[k] += h * rhs[k];
        }
        for &x in &state {
            if !x.is_finite() || math::abs(x) > BLOWUP_THRESHOLD {
                return Err(SimError::Divergence {
                    time: config.grid.time(i + 1),
                    detail: format!("state magnitude {x}"),
                });
            }
        }
        traj.push_state(&state);
    }
    Ok(traj)
}

/// Stationary convolutions of the averaged configuration's paths on its grid.
pub fn build_stationary(config: &AveragedConfig, paths: &[LevyPath]) -> Result<Vec<OUTrajectory>> {
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

/// Sample the driving paths of the averaged configuration (same substream
/// layout as the coupled system).
pub fn sample_paths(config: &AveragedConfig, extra_left: f64) -> Result<Vec<LevyPath>> {
    config.validate()?;
    crate::coupled_system::sample_paths_for(
        &config.noise,
        &config.grid,
        config.seed,
        config.n_components,
        extra_left,
    )
}

/// Singleton pullback attractor of the averaged system with the absorbing
/// radius `R̃² = 1 + (1/N) Σ_j ∫_{t0}^0 e^{(2l-4)τ} (‖f_j(X̄_τ)‖² + ‖X̄_τ‖²) dτ`.
pub fn averaged_pullback_point(
    config: &AveragedConfig,
    paths: &[LevyPath],
    t0_list: &[f64],
    z0_set: &[Vec<f64>],
) -> Result<AttractorEstimate> {
    config.validate()?;
    if t0_list.is_empty() || t0_list.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SimError::InvalidParameter(
            "pullback horizons must be strictly decreasing".into(),
        ));
    }
    if t0_list.iter().any(|&t| !(t < 0.0)) {
        return Err(SimError::InvalidParameter(
            "pullback horizons must be negative".into(),
        ));
    }
    if z0_set.len() < 2 {
        return Err(SimError::InvalidParameter(
            "need at least two initial states".into(),
        ));
    }
    let i_zero = config.grid.index_of(0.0)?;
    let ou = build_stationary(config, paths)?;

    let mut endpoints: Vec<Vec<Vec<f64>>> = Vec::with_capacity(t0_list.len());
    for &t0 in t0_list {
        let i_start = config.grid.index_of(t0)?;
        let sub = config.grid.subgrid(i_start, i_zero)?;
        let ou_sub: Vec<OUTrajectory> = ou
            .iter()
            .map(|o| o.window(i_start, i_zero))
            .collect::<Result<_>>()?;
        let cfg = config.with_grid(sub);
        let mut per_z0 = Vec::with_capacity(z0_set.len());
        for z0 in z0_set {
            per_z0.push(
                integrate_averaged_rode(&cfg, &ou_sub, z0)?
                    .last_state()
                    .to_vec(),
            );
        }
        endpoints.push(per_z0);
    }

    let deepest = endpoints.last().unwrap();
    let point = deepest[0].clone();
    let mut initial_spread: f64 = 0.0;
    for a in 0..deepest.len() {
        for b in a + 1..deepest.len() {
            initial_spread = initial_spread.max(math::dist(&deepest[a], &deepest[b]));
        }
    }
    let cauchy_gaps: Vec<f64> = endpoints
        .windows(2)
        .map(|w| math::dist(&w[0][0], &w[1][0]))
        .collect();

    // truncated absorbing radius
    let l = config.min_dissipativity();
    let rate = 2.0 * l - 4.0;
    let h = config.grid.step();
    let i_start = config.grid.index_of(*t0_list.last().unwrap())?;
    let mut acc = 0.0;
    let mut fx = vec![0.0; config.dim];
    for i in i_start..i_zero {
        let tau = config.grid.time(i);
        let weight = math::exp(rate * tau);
        for (j, o) in ou.iter().enumerate() {
            let xbar = o.state(i);
            config.drifts[j].eval(xbar, &mut fx);
            acc += weight * (math::norm_sq(&fx) + math::norm_sq(xbar)) * h;
        }
    }
    let radius = math::sqrt(1.0 + acc / config.n_components as f64);

    let scale = 1.0 + math::norm(&point);
    let floor = 1e-12 * scale;
    let gaps_decreasing = cauchy_gaps
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + 1e-9) || w[1] < floor);
    let converged = gaps_decreasing
        && cauchy_gaps.last().is_none_or(|g| *g < PULLBACK_TOL * scale)
        && initial_spread < PULLBACK_TOL * scale;

    Ok(AttractorEstimate {
        point,
        pullback_horizons: t0_list.to_vec(),
        cauchy_gaps,
        initial_spread,
        radius,
        converged,
    })
}

/// Per-cell defect of the reconstructed stationary solution
/// `z(t) = Z(t) + (1/N) Σ_j X̄_t^(j)` against the induced stochastic form.
///
/// `averaged_traj` is an averaged-system trajectory `Z` on `config.grid`
/// (normally the forward orbit of the estimated attractor point); the
/// reconstruction `z` is formed internally. Returns the maximum over cells of
/// `‖Δz - h G(Z_i) - (1/N) Σ_j c_j ⊙ ΔL_j‖ / h` with
/// `G(Z) = (1/N) Σ_j f^(j)(X̄^(j) + Z) + Z`.
pub fn averaged_sode_residual(
    config: &AveragedConfig,
    paths: &[LevyPath],
    averaged_traj: &Trajectory,
) -> Result<f64> {
    config.validate()?;
    if averaged_traj.grid != config.grid
        || averaged_traj.n_blocks != 1
        || averaged_traj.dim != config.dim
    {
        return Err(SimError::Alignment(
            "trajectory does not match the averaged configuration".into(),
        ));
    }
    let ou = build_stationary(config, paths)?;
    let offsets: Vec<usize> = paths
        .iter()
        .map(|p| p.grid().offset_of(&config.grid))
        .collect::<Result<_>>()?;
    let d = config.dim;
    let n = config.n_components as f64;
    let h = config.grid.step();
    let mut worst: f64 = 0.0;
    let mut shifted = vec![0.0; d];
    let mut fbuf = vec![0.0; d];
    let mean_xbar = |node: usize, out: &mut [f64]| {
        out.iter_mut().for_each(|x| *x = 0.0);
        for o in &ou {
            for k in 0..d {
                out[k] += o.state(node)[k];
            }
        }
        for x in out.iter_mut() {
            *x /= n;
        }
    };
    let mut xm0 = vec![0.0; d];
    let mut xm1 = vec![0.0; d];
    for i in 0..config.grid.n_cells() {
        let big_z0 = averaged_traj.state(i);
        let big_z1 = averaged_traj.state(i + 1);
        mean_xbar(i, &mut xm0);
        mean_xbar(i + 1, &mut xm1);
        // G(Z_i) = (1/N) Σ f_j(X̄_j + Z) + Z
        let mut drift = vec![0.0; d];
        for (j, o) in ou.iter().enumerate() {
            let xbar = o.state(i);
            for k in 0..d {
                shifted[k] = big_z0[k] + xbar[k];
            }
            config.drifts[j].eval(&shifted, &mut fbuf);
            for k in 0..d {
                drift[k] += fbuf[k];
            }
        }
        for k in 0..d {
            drift[k] = drift[k] / n + big_z0[k];
        }
        let mut defect_sq = 0.0;
        for k in 0..d {
            let mut noise = 0.0;
            for (j, p) in paths.iter().enumerate() {
                noise += config.coefficients[j][k] * p.increment(offsets[j] + i, k);
            }
            noise /= n;
            let z0 = big_z0[k] + xm0[k];
            let z1 = big_z1[k] + xm1[k];
            let defect = z1 - z0 - h * drift[k] - noise;
            defect_sq += defect * defect;
        }
        worst = worst.max(math::sqrt(defect_sq) / h);
    }
    Ok(worst)
}

//! Synchronization metrics.
//!
//! * two-solution decay curves against the `exp(-2lt)` envelope;
//! * componentwise spread of one solution across the ring;
//! * coupling sweeps reusing one noise realization across all couplings
//!   (the convergence statements are pathwise), with automatic step
//!   refinement where the explicit stability bound demands it;
//! * the constants `C^{j,k,α}` bounding the spread estimates;
//! * an approximate Skorohod J1 distance via a banded minimax alignment.
//!
//! Decay verdicts: the proof bound `exp(-2lt)` governs the squared Euclidean
//! norm of the vector of per-component squared gaps (`quartic` below), and a
//! faster measured decay is consistent with it, so only slower decay fails.
//! The fitted slope of the plain squared-gap sum is reported alongside; for
//! linear drifts it reproduces the sharper spectral rate `2 - 2l` of the
//! comparison matrix.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use serde::Serialize;

use crate::averaged::{integrate_averaged_rode, AveragedConfig};
use crate::coupled_system::{
    build_stationary, integrate_coupled_rode, sample_paths_for, DriftSpec, SystemConfig,
    Trajectory,
};
use crate::levy_process::LevyPath;
use crate::math;
use crate::ou_stationary::OUTrajectory;
use crate::{Result, SimError};

/// Gap magnitudes below this are treated as underflow and truncate slope
/// fits.
pub const GAP_UNDERFLOW: f64 = 1e-300;

/// Relative slack of the decay-slope verdict: the measured slope may be up to
/// 15% shallower than `-2l` before the verdict fails.
pub const DECAY_SLACK: f64 = 0.15;

/// Fraction of the window discarded before taking sups in sweeps: the decay
/// estimates carry an initial-condition term that dies like `e^{-l t}`, so
/// `5 / l` time units suffice.
pub const TRANSIENT_TRIM_FACTOR: f64 = 5.0;

/// Default time-deformation budget of the J1 alignment, in grid steps of the
/// unrefined grid.
pub const J1_BUDGET_STEPS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DecayVerdict {
    Pass,
    Fail,
    /// Gap identically zero at the window start; nothing to fit.
    Degenerate,
}

/// Two-solution decay record.
#[derive(Debug, Clone, Serialize)]
pub struct DecayRecord {
    pub times: Vec<f64>,
    /// Squared gap per component: `per_component_sq[j][i] = ‖Δ_j(t_i)‖²`.
    pub per_component_sq: Vec<Vec<f64>>,
    /// `Σ_j ‖Δ_j‖²` per node.
    pub sum_sq: Vec<f64>,
    /// `Σ_j ‖Δ_j‖⁴` per node — the squared norm of the gap-squared vector,
    /// the object the `exp(-2lt)` bound controls.
    pub quartic: Vec<f64>,
    /// Least-squares slope of `log Σ‖Δ‖²` over the fit window.
    pub slope_sum_sq: Option<f64>,
    /// Least-squares slope of `log Σ‖Δ‖⁴` over the fit window.
    pub slope_quartic: Option<f64>,
    /// Dissipativity constant the verdict is measured against.
    pub dissipativity: f64,
    pub verdict: DecayVerdict,
    /// Time at which underflow truncated the fit window, if any.
    pub truncated_at: Option<f64>,
}

/// Decay of the gap between two solutions sharing a grid, fitted over
/// `fit_window` and judged against the `exp(-2 l t)` envelope with
/// [`DECAY_SLACK`].
pub fn pairwise_sync_curve(
    traj1: &Trajectory,
    traj2: &Trajectory,
    fit_window: (f64, f64),
    dissipativity: f64,
) -> Result<DecayRecord> {
    if traj1.grid != traj2.grid || traj1.n_blocks != traj2.n_blocks || traj1.dim != traj2.dim {
        return Err(SimError::Alignment(
            "trajectories do not share grid and shape".into(),
        ));
    }
    let grid = &traj1.grid;
    let n = traj1.n_blocks;
    let nodes = grid.n_nodes();
    let mut per_component_sq = vec![Vec::with_capacity(nodes); n];
    let mut sum_sq = Vec::with_capacity(nodes);
    let mut quartic = Vec::with_capacity(nodes);
    let times: Vec<f64> = grid.times().collect();
    for i in 0..nodes {
        let mut total = 0.0;
        let mut total4 = 0.0;
        for j in 0..n {
            let g = math::dist_sq(traj1.block(i, j), traj2.block(i, j));
            per_component_sq[j].push(g);
            total += g;
            total4 += g * g;
        }
        sum_sq.push(total);
        quartic.push(total4);
    }

    let i_lo = grid.index_of(fit_window.0)?;
    let i_hi = grid.index_of(fit_window.1)?;
    if i_lo >= i_hi {
        return Err(SimError::InvalidParameter("empty fit window".into()));
    }
    if sum_sq[i_lo] == 0.0 {
        return Ok(DecayRecord {
            times,
            per_component_sq,
            sum_sq,
            quartic,
            slope_sum_sq: None,
            slope_quartic: None,
            dissipativity,
            verdict: DecayVerdict::Degenerate,
            truncated_at: None,
        });
    }

    // truncate the fit where the quartic series underflows
    let mut i_end = i_hi;
    let mut truncated_at = None;
    for i in i_lo..=i_hi {
        if quartic[i] < GAP_UNDERFLOW {
            i_end = i;
            truncated_at = Some(times[i]);
            break;
        }
    }
    if i_end <= i_lo + 1 {
        return Err(SimError::Numeric(
            "gap underflows immediately inside the fit window".into(),
        ));
    }
    let ts = &times[i_lo..i_end];
    let log_sum: Vec<f64> = sum_sq[i_lo..i_end].iter().map(|&g| math::ln(g)).collect();
    let log_quartic: Vec<f64> = quartic[i_lo..i_end].iter().map(|&g| math::ln(g)).collect();
    let slope_sum_sq = math::ls_slope(ts, &log_sum);
    let slope_quartic = math::ls_slope(ts, &log_quartic);
    let verdict = match slope_quartic {
        Some(s) if s <= -2.0 * dissipativity * (1.0 - DECAY_SLACK) => DecayVerdict::Pass,
        Some(_) => DecayVerdict::Fail,
        None => DecayVerdict::Fail,
    };
    Ok(DecayRecord {
        times,
        per_component_sq,
        sum_sq,
        quartic,
        slope_sum_sq,
        slope_quartic,
        dissipativity,
        verdict,
        truncated_at,
    })
}

/// Componentwise spread of one trajectory over a window.
#[derive(Debug, Clone, Serialize)]
pub struct SpreadReport {
    /// `sup_t max_{j,k} ‖x^(j)(t) - x^(k)(t)‖` over the window.
    pub sup: f64,
    /// Per-pair sups: `per_pair[j][k] = sup_t ‖x^(j) - x^(k)‖`.
    pub per_pair: Vec<Vec<f64>>,
}

/// Spread of the components of `traj` over `window`.
pub fn component_spread(traj: &Trajectory, window: (f64, f64)) -> Result<SpreadReport> {
    let i_lo = traj.grid.index_of(window.0)?;
    let i_hi = traj.grid.index_of(window.1)?;
    let n = traj.n_blocks;
    let mut per_pair = vec![vec![0.0; n]; n];
    for i in i_lo..=i_hi {
        for j in 0..n {
            for k in j + 1..n {
                let d = math::dist(traj.block(i, j), traj.block(i, k));
                if d > per_pair[j][k] {
                    per_pair[j][k] = d;
                    per_pair[k][j] = d;
                }
            }
        }
    }
    let sup = per_pair
        .iter()
        .flatten()
        .cloned()
        .fold(0.0, f64::max);
    Ok(SpreadReport { sup, per_pair })
}

/// One row of a coupling sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub lambda: f64,
    /// Step actually used (refined when the stability bound demands it).
    pub step: f64,
    pub spread: f64,
    pub spread_sq: f64,
    /// `max_j sup_t ‖x^(j)(t) - Z(t)‖` over the trimmed window.
    pub averaged_gap: f64,
    /// Approximate J1 distance between the ring trajectory and the diagonal
    /// embedding of the averaged one.
    pub skorohod_j1: f64,
}

/// Result of a coupling sweep over one pinned noise realization.
#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub window: (f64, f64),
    /// Window after discarding the initial transient.
    pub trimmed_window: (f64, f64),
    pub seed: u64,
}

impl SweepReport {
    /// Log-log slope of `spread²` against the coupling over the top decade
    /// (the last two rows).
    pub fn top_decade_slope(&self) -> Option<f64> {
        if self.rows.len() < 2 {
            return None;
        }
        let a = &self.rows[self.rows.len() - 2];
        let b = &self.rows[self.rows.len() - 1];
        if a.spread_sq <= 0.0 || b.spread_sq <= 0.0 {
            return None;
        }
        Some(
            (math::ln(b.spread_sq) - math::ln(a.spread_sq))
                / (math::ln(b.lambda) - math::ln(a.lambda)),
        )
    }
}

/// Integration step divisor for coupling `lambda`: the smallest integer `m`
/// with `base_step / m` below half the explicit stability bound.
fn step_divisor(base_step: f64, l_max: f64, lambda: f64) -> usize {
    let target = 0.5 / (l_max + 4.0 * lambda);
    libm::ceil(base_step / target).max(1.0) as usize
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(mut a: usize, mut b: usize) -> usize {
        while b != 0 {
            let t = a % b;
            a = b;
            b = t;
        }
        a
    }
    a / gcd(a, b) * b
}

/// Sweep the coupling coefficient over one pinned noise realization.
///
/// The paths are sampled once on a master grid fine enough for every
/// coupling and restricted (never resampled) to each coupling's grid, so all
/// rows see the same `ω`. For each coupling the ring is integrated from
/// `x0`, the averaged system from the block mean of `x0`, and the spread,
/// averaged gap and J1 distance are evaluated over the transient-trimmed
/// window.
pub fn lambda_sweep(
    template: &SystemConfig,
    lambdas: &[f64],
    window: (f64, f64),
    x0: &[f64],
) -> Result<SweepReport> {
    template.validate()?;
    if lambdas.is_empty() {
        return Err(SimError::InvalidParameter("empty coupling list".into()));
    }
    if lambdas.iter().any(|&l| !(l >= 1.0)) {
        return Err(SimError::InvalidParameter(
            "sweep couplings must be >= 1".into(),
        ));
    }
    if lambdas.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(SimError::InvalidParameter(
            "sweep couplings must be increasing".into(),
        ));
    }
    if x0.len() != template.state_len() {
        return Err(SimError::Shape(format!(
            "initial state has {} entries, expected {}",
            x0.len(),
            template.state_len()
        )));
    }

    let base_step = template.grid.step();
    let l_max = template.max_dissipativity();
    let divisors: Vec<usize> = lambdas
        .iter()
        .map(|&l| step_divisor(base_step, l_max, l))
        .collect();
    let master_factor = divisors.iter().fold(1usize, |acc, &m| lcm(acc, m));
    let master_grid = template.grid.refine(master_factor)?;
    let master_paths = sample_paths_for(
        &template.noise,
        &master_grid,
        template.seed,
        template.n_components,
        0.0,
    )?;

    let l_min = template.min_dissipativity();
    let trim = TRANSIENT_TRIM_FACTOR / l_min;
    let d = template.dim;
    let n = template.n_components;
    let z0: Vec<f64> = (0..d)
        .map(|k| (0..n).map(|j| x0[j * d + k]).sum::<f64>() / n as f64)
        .collect();
    let budget = J1_BUDGET_STEPS as f64 * base_step;

    let mut rows = Vec::with_capacity(lambdas.len());
    let mut trimmed = window;
    for (&lambda, &divisor) in lambdas.iter().zip(&divisors) {
        let factor = master_factor / divisor;
        let grid = master_grid.coarsen(factor)?;
        let paths: Vec<LevyPath> = master_paths
            .iter()
            .map(|p| p.restrict(factor))
            .collect::<Result<_>>()?;
        let cfg = template.with_grid(grid.clone()).with_lambda(lambda);
        let ou = build_stationary(&cfg, &paths)?;
        let traj = integrate_coupled_rode(&cfg, &ou, x0)?;

        let avg_cfg = AveragedConfig::from_system(&cfg);
        let avg = integrate_averaged_rode(&avg_cfg, &ou, &z0)?;

        // snap the trimmed window start up onto this grid
        let h = grid.step();
        if window.0 + trim >= window.1 {
            return Err(SimError::InvalidParameter(format!(
                "window ({}, {}) is shorter than the transient trim {trim}",
                window.0, window.1
            )));
        }
        let t_lo = libm::ceil((window.0 + trim) / h) * h;
        trimmed = (t_lo, window.1);

        let spread = component_spread(&traj, trimmed)?;
        let i0 = grid.index_of(trimmed.0)?;
        let i1 = grid.index_of(trimmed.1)?;
        let mut averaged_gap: f64 = 0.0;
        for i in i0..=i1 {
            for j in 0..n {
                averaged_gap = averaged_gap.max(math::dist(traj.block(i, j), avg.state(i)));
            }
        }
        let diagonal = diagonal_trajectory(&avg, n);
        let j1 = skorohod_distance_j1(&traj, &diagonal, trimmed, budget)?;

        rows.push(SweepRow {
            lambda,
            step: h,
            spread: spread.sup,
            spread_sq: spread.sup * spread.sup,
            averaged_gap,
            skorohod_j1: j1.distance,
        });
    }
    Ok(SweepReport {
        rows,
        window,
        trimmed_window: trimmed,
        seed: template.seed,
    })
}

/// Embed a single-block trajectory as the diagonal of an `n`-block one.
pub fn diagonal_trajectory(z: &Trajectory, n: usize) -> Trajectory {
    let mut out = Trajectory::with_capacity(z.grid.clone(), n, z.dim);
    let mut row = vec![0.0; n * z.dim];
    for i in 0..z.grid.n_nodes() {
        for j in 0..n {
            row[j * z.dim..(j + 1) * z.dim].copy_from_slice(z.state(i));
        }
        out.push_state(&row);
    }
    out
}

/// The spread-estimate constants `C^{j,k,α}`.
#[derive(Debug, Clone, Serialize)]
pub struct ConstantsTable {
    pub alpha: f64,
    /// Entries `(j, k, value)` for `j < k`.
    pub entries: Vec<(usize, usize, f64)>,
}

/// Evaluate
/// `C^{j,k,α} = (4/α) sup_t [ (‖f_j(X̄^(j))‖² + ‖X̄^(j)‖²) + (‖f_k(X̄^(k))‖² + ‖X̄^(k)‖²) ]`
/// over the window, for every pair `j < k`.
pub fn sync_constants(
    drifts: &[DriftSpec],
    ou: &[OUTrajectory],
    window: (f64, f64),
    alpha: f64,
) -> Result<ConstantsTable> {
    if !(alpha > 0.0) {
        return Err(SimError::InvalidParameter(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    if drifts.len() != ou.len() || drifts.is_empty() {
        return Err(SimError::Shape(
            "drift and trajectory counts do not match".into(),
        ));
    }
    let grid = &ou[0].grid;
    let i_lo = grid.index_of(window.0)?;
    let i_hi = grid.index_of(window.1)?;
    let n = drifts.len();
    let d = ou[0].dim();
    // g_j(t) = ‖f_j(X̄_j)‖² + ‖X̄_j‖² per node
    let mut g = vec![vec![0.0; i_hi - i_lo + 1]; n];
    let mut fx = vec![0.0; d];
    for (j, o) in ou.iter().enumerate() {
        if o.grid != *grid {
            return Err(SimError::Alignment(
                "stationary trajectories do not share a grid".into(),
            ));
        }
        for i in i_lo..=i_hi {
            let xbar = o.state(i);
            drifts[j].eval(xbar, &mut fx);
            g[j][i - i_lo] = math::norm_sq(&fx) + math::norm_sq(xbar);
        }
    }
    let mut entries = Vec::new();
    for j in 0..n {
        for k in j + 1..n {
            let sup = g[j]
                .iter()
                .zip(&g[k])
                .map(|(a, b)| a + b)
                .fold(0.0, f64::max);
            entries.push((j, k, 4.0 / alpha * sup));
        }
    }
    Ok(ConstantsTable { alpha, entries })
}

/// Approximate Skorohod J1 distance with its certificate alignment.
#[derive(Debug, Clone, Serialize)]
pub struct J1Result {
    pub distance: f64,
    /// Matched node-index pairs of the minimax alignment.
    pub alignment: Vec<(usize, usize)>,
}

/// Approximate J1 distance between two trajectories over a window.
///
/// Minimum over banded monotone grid alignments (a coupled traversal
/// advancing either side or both, never moving apart by more than the
/// time-change budget) of `max(‖a∘ξ - b‖_∞, ‖ξ - id‖_∞)`. The identity
/// alignment is admissible, so the result never exceeds the uniform
/// distance; the reported value is an upper bound on the true J1 infimum at
/// grid resolution.
pub fn skorohod_distance_j1(
    a: &Trajectory,
    b: &Trajectory,
    window: (f64, f64),
    timechange_budget: f64,
) -> Result<J1Result> {
    if a.grid != b.grid || a.n_blocks != b.n_blocks || a.dim != b.dim {
        return Err(SimError::Alignment(
            "trajectories do not share grid and shape".into(),
        ));
    }
    if !(timechange_budget >= 0.0) {
        return Err(SimError::InvalidParameter(
            "time-change budget must be nonnegative".into(),
        ));
    }
    if timechange_budget > window.1 - window.0 {
        return Err(SimError::InvalidParameter(format!(
            "time-change budget {timechange_budget} exceeds the window length {}",
            window.1 - window.0
        )));
    }
    let grid = &a.grid;
    let i_lo = grid.index_of(window.0)?;
    let i_hi = grid.index_of(window.1)?;
    let m = i_hi - i_lo; // node count minus one
    let h = grid.step();
    let band = libm::round(timechange_budget / h) as usize;

    let cost = |i: usize, j: usize| -> f64 {
        let dt = math::abs(grid.time(i_lo + i) - grid.time(i_lo + j));
        let dx = math::dist(a.state(i_lo + i), b.state(i_lo + j));
        dt.max(dx)
    };

    let width = 2 * band + 1;
    let idx = |i: usize, j: usize| -> usize { i * width + (j + band - i) };
    let in_band = |i: usize, j: usize| -> bool {
        (j + band >= i) && (j <= i + band) && j <= m
    };
    let mut dp = vec![f64::INFINITY; (m + 1) * width];
    let mut from = vec![u8::MAX; (m + 1) * width];
    dp[idx(0, 0)] = cost(0, 0);
    for i in 0..=m {
        let j_min = i.saturating_sub(band);
        let j_max = (i + band).min(m);
        for j in j_min..=j_max {
            if i == 0 && j == 0 {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut arg = u8::MAX;
            if i > 0 && in_band(i - 1, j) && dp[idx(i - 1, j)] < best {
                best = dp[idx(i - 1, j)];
                arg = 0;
            }
            if j > 0 && in_band(i, j - 1) && dp[idx(i, j - 1)] < best {
                best = dp[idx(i, j - 1)];
                arg = 1;
            }
            if i > 0 && j > 0 && in_band(i - 1, j - 1) && dp[idx(i - 1, j - 1)] < best {
                best = dp[idx(i - 1, j - 1)];
                arg = 2;
            }
            if arg == u8::MAX {
                continue;
            }
            dp[idx(i, j)] = best.max(cost(i, j));
            from[idx(i, j)] = arg;
        }
    }
    let distance = dp[idx(m, m)];
    if !distance.is_finite() {
        return Err(SimError::Numeric("J1 alignment found no path".into()));
    }
    // backtrack the certificate
    let mut alignment = Vec::new();
    let (mut i, mut j) = (m, m);
    loop {
        alignment.push((i_lo + i, i_lo + j));
        if i == 0 && j == 0 {
            break;
        }
        match from[idx(i, j)] {
            0 => i -= 1,
            1 => j -= 1,
            2 => {
                i -= 1;
                j -= 1;
            }
            _ => break,
        }
    }
    alignment.reverse();
    Ok(J1Result {
        distance,
        alignment,
    })
}

/// Bundle of synchronization diagnostics, assembled per experiment.
#[derive(Debug, Clone, Serialize, Default)]
pub struct SyncReport {
    pub decay: Option<DecayRecord>,
    pub sweep: Option<SweepReport>,
    pub constants: Option<ConstantsTable>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupled_system::sample_system_paths;
    use crate::grid::TimeGrid;
    use crate::levy_process::LevySpec;
    use approx::assert_relative_eq;

    fn grid(t0: f64, t1: f64, h: f64) -> TimeGrid {
        TimeGrid::new(t0, t1, h).unwrap()
    }

    fn linear_config(n: usize, a: f64, lambda: f64, g: TimeGrid, seed: u64) -> SystemConfig {
        SystemConfig {
            n_components: n,
            dim: 1,
            lambda,
            drifts: (0..n).map(|_| DriftSpec::linear(a).unwrap()).collect(),
            coefficients: vec![vec![1.0]; n],
            noise: LevySpec::brownian(1.0, 1),
            grid: g,
            seed,
        }
    }

    fn step_trajectory(g: &TimeGrid, jump_time: f64) -> Trajectory {
        let mut t = Trajectory::with_capacity(g.clone(), 1, 1);
        for i in 0..g.n_nodes() {
            let v = if g.time(i) >= jump_time { 1.0 } else { 0.0 };
            t.push_state(&[v]);
        }
        t
    }

    #[test]
    fn identical_trajectories_are_degenerate() {
        let g = grid(0.0, 1.0, 1e-2);
        let cfg = linear_config(3, 6.0, 1.0, g, 1);
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        let t1 = integrate_coupled_rode(&cfg, &ou, &[0.1, 0.2, 0.3]).unwrap();
        let rec = pairwise_sync_curve(&t1, &t1, (0.0, 1.0), 6.0).unwrap();
        assert_eq!(rec.verdict, DecayVerdict::Degenerate);
        assert!(rec.slope_quartic.is_none());
    }

    #[test]
    fn linear_ring_matches_the_spectral_rate() {
        // zero noise, f = -6u, N = 3, lambda = 1: the squared-gap sum decays
        // at the top comparison-matrix rate 2 - 2l = -10; the quartic series
        // at twice that; the verdict envelope -2l(1-15%) = -10.2 passes
        let h = 1e-3;
        let g = grid(0.0, 2.0, h);
        let mut cfg = linear_config(3, 6.0, 1.0, g, 1);
        cfg.noise = LevySpec::compound_poisson(0.0, 1.0, 1);
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        let t1 = integrate_coupled_rode(&cfg, &ou, &[0.5, 0.5, 0.5]).unwrap();
        let t2 = integrate_coupled_rode(&cfg, &ou, &[-0.5, -0.5, -0.5]).unwrap();
        let rec = pairwise_sync_curve(&t1, &t2, (0.1, 1.9), 6.0).unwrap();
        assert_eq!(rec.verdict, DecayVerdict::Pass);
        // uniform-mode initial data: exact rate 2(1 - l) per block norm
        assert_relative_eq!(rec.slope_sum_sq.unwrap(), -10.0, epsilon = 0.05);
        assert_relative_eq!(rec.slope_quartic.unwrap(), -20.0, epsilon = 0.1);
    }

    #[test]
    fn gap_curves_do_not_depend_on_the_noise_seed_for_linear_drifts() {
        // the gap dynamics subtract the stationary convolution exactly when
        // the drift is linear, so two realizations give the same curve
        let h = 1e-3;
        let g = grid(0.0, 1.0, h);
        let run = |seed: u64| {
            let cfg = linear_config(3, 6.0, 1.0, g.clone(), seed);
            let paths = sample_system_paths(&cfg, 0.0).unwrap();
            let ou = build_stationary(&cfg, &paths).unwrap();
            let t1 = integrate_coupled_rode(&cfg, &ou, &[1.0, 0.0, 0.0]).unwrap();
            let t2 = integrate_coupled_rode(&cfg, &ou, &[0.0, 0.0, 0.0]).unwrap();
            pairwise_sync_curve(&t1, &t2, (0.0, 1.0), 6.0).unwrap()
        };
        let a = run(11);
        let b = run(99);
        for (x, y) in a.sum_sq.iter().zip(&b.sum_sq) {
            assert_relative_eq!(x, y, max_relative = 1e-9, epsilon = 1e-30);
        }
    }

    #[test]
    fn spread_of_equal_blocks_is_zero() {
        let g = grid(0.0, 1.0, 0.1);
        let mut t = Trajectory::with_capacity(g.clone(), 3, 2);
        for _ in 0..g.n_nodes() {
            t.push_state(&[1.0, -2.0, 1.0, -2.0, 1.0, -2.0]);
        }
        let rep = component_spread(&t, (0.0, 1.0)).unwrap();
        assert_eq!(rep.sup, 0.0);
    }

    #[test]
    fn spread_of_constant_blocks_is_their_distance() {
        let g = grid(0.0, 1.0, 0.1);
        let mut t = Trajectory::with_capacity(g.clone(), 2, 1);
        for _ in 0..g.n_nodes() {
            t.push_state(&[1.0, -1.0]);
        }
        let rep = component_spread(&t, (0.0, 1.0)).unwrap();
        assert_eq!(rep.sup, 2.0);
        assert_eq!(rep.per_pair[0][1], 2.0);
    }

    #[test]
    fn spread_is_translation_invariant() {
        let g = grid(0.0, 1.0, 0.1);
        let mut t1 = Trajectory::with_capacity(g.clone(), 2, 1);
        let mut t2 = Trajectory::with_capacity(g.clone(), 2, 1);
        for i in 0..g.n_nodes() {
            let shift = 3.0 * i as f64;
            t1.push_state(&[0.3 * i as f64, -0.1 * i as f64]);
            t2.push_state(&[0.3 * i as f64 + shift, -0.1 * i as f64 + shift]);
        }
        let a = component_spread(&t1, (0.0, 1.0)).unwrap();
        let b = component_spread(&t2, (0.0, 1.0)).unwrap();
        assert_relative_eq!(a.sup, b.sup, max_relative = 1e-12);
    }

    #[test]
    fn sweep_with_identical_components_has_zero_spread() {
        let g = grid(0.0, 1.0, 1e-3);
        let mut cfg = linear_config(3, 6.0, 1.0, g, 17);
        // identical drifts and identical noise: force one substream by
        // making all components share a path via restriction below
        let lambdas = [1.0, 10.0];
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let shared = vec![paths[0].clone(), paths[0].clone(), paths[0].clone()];
        // equal-block initial data
        let x0 = [0.4, 0.4, 0.4];
        for &lambda in &lambdas {
            cfg.lambda = lambda;
            let ou = build_stationary(&cfg, &shared).unwrap();
            let traj = integrate_coupled_rode(&cfg, &ou, &x0).unwrap();
            let rep = component_spread(&traj, (0.0, 1.0)).unwrap();
            assert_eq!(rep.sup, 0.0, "lambda {lambda}");
        }
    }

    #[test]
    fn constants_vanish_for_zero_noise_and_odd_drifts() {
        let g = grid(0.0, 1.0, 1e-2);
        let mut cfg = linear_config(3, 6.0, 1.0, g, 1);
        cfg.noise = LevySpec::compound_poisson(0.0, 1.0, 1);
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        let table = sync_constants(&cfg.drifts, &ou, (0.0, 1.0), 2.0).unwrap();
        for &(_, _, v) in &table.entries {
            assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn constants_scale_inversely_with_alpha() {
        let g = grid(0.0, 1.0, 1e-2);
        let cfg = linear_config(3, 6.0, 1.0, g, 5);
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        let t1 = sync_constants(&cfg.drifts, &ou, (0.0, 1.0), 1.0).unwrap();
        let t2 = sync_constants(&cfg.drifts, &ou, (0.0, 1.0), 2.0).unwrap();
        for (a, b) in t1.entries.iter().zip(&t2.entries) {
            assert_eq!(a.2, 2.0 * b.2);
        }
    }

    #[test]
    fn constants_are_reproducible() {
        let g = grid(0.0, 1.0, 1e-2);
        let cfg = linear_config(3, 6.0, 1.0, g, 5);
        let paths = sample_system_paths(&cfg, 0.0).unwrap();
        let ou = build_stationary(&cfg, &paths).unwrap();
        let t1 = sync_constants(&cfg.drifts, &ou, (0.0, 1.0), 1.5).unwrap();
        let t2 = sync_constants(&cfg.drifts, &ou, (0.0, 1.0), 1.5).unwrap();
        assert_eq!(t1.entries, t2.entries);
    }

    #[test]
    fn j1_distance_of_identical_paths_is_zero() {
        let g = grid(0.0, 1.0, 0.01);
        let t = step_trajectory(&g, 0.5);
        let r = skorohod_distance_j1(&t, &t, (0.0, 1.0), 0.1).unwrap();
        assert_eq!(r.distance, 0.0);
        // identity alignment
        assert!(r.alignment.iter().all(|&(i, j)| i == j));
    }

    #[test]
    fn j1_aligns_nearby_steps() {
        // unit steps at 0.30 vs 0.31: uniform distance 1, J1 <= 0.01
        let g = grid(0.0, 1.0, 0.01);
        let a = step_trajectory(&g, 0.30);
        let b = step_trajectory(&g, 0.31);
        let uniform = skorohod_distance_j1(&a, &b, (0.0, 1.0), 0.0).unwrap();
        assert_eq!(uniform.distance, 1.0);
        let r = skorohod_distance_j1(&a, &b, (0.0, 1.0), 0.1).unwrap();
        assert!(r.distance <= 0.01 + 1e-12, "{}", r.distance);
    }

    #[test]
    fn j1_never_exceeds_uniform_distance_and_is_symmetric() {
        use crate::rng::Stream;
        let g = grid(0.0, 1.0, 0.02);
        let mut s = Stream::derive(77, 0);
        for _ in 0..100 {
            let mut a = Trajectory::with_capacity(g.clone(), 1, 1);
            let mut b = Trajectory::with_capacity(g.clone(), 1, 1);
            let (mut va, mut vb) = (0.0, 0.0);
            for _ in 0..g.n_nodes() {
                if s.uniform() < 0.1 {
                    va += s.normal();
                }
                if s.uniform() < 0.1 {
                    vb += s.normal();
                }
                a.push_state(&[va]);
                b.push_state(&[vb]);
            }
            let uniform: f64 = (0..g.n_nodes())
                .map(|i| (a.state(i)[0] - b.state(i)[0]).abs())
                .fold(0.0, f64::max);
            let d_ab = skorohod_distance_j1(&a, &b, (0.0, 1.0), 0.1).unwrap().distance;
            let d_ba = skorohod_distance_j1(&b, &a, (0.0, 1.0), 0.1).unwrap().distance;
            assert!(d_ab <= uniform + 1e-12);
            assert_eq!(d_ab, d_ba);
        }
    }

    #[test]
    fn j1_triangle_inequality_within_resolution() {
        let g = grid(0.0, 1.0, 0.01);
        let a = step_trajectory(&g, 0.30);
        let b = step_trajectory(&g, 0.33);
        let c = step_trajectory(&g, 0.38);
        let budget = 0.1;
        let dab = skorohod_distance_j1(&a, &b, (0.0, 1.0), budget).unwrap().distance;
        let dbc = skorohod_distance_j1(&b, &c, (0.0, 1.0), budget).unwrap().distance;
        let dac = skorohod_distance_j1(&a, &c, (0.0, 1.0), budget).unwrap().distance;
        assert!(dac <= dab + dbc + 2.0 * g.step() + 1e-12, "{dac} vs {dab} + {dbc}");
    }

    #[test]
    fn j1_budget_must_fit_the_window() {
        let g = grid(0.0, 1.0, 0.01);
        let t = step_trajectory(&g, 0.5);
        assert!(matches!(
            skorohod_distance_j1(&t, &t, (0.0, 0.5), 1.0),
            Err(SimError::InvalidParameter(_))
        ));
    }

    #[test]
    fn sweep_reduces_spread_with_stronger_coupling() {
        let g = grid(0.0, 2.0, 1e-3);
        let cfg = SystemConfig {
            n_components: 3,
            dim: 1,
            lambda: 1.0,
            drifts: vec![
                DriftSpec::linear(6.0).unwrap(),
                DriftSpec::cubic_damped(6.0).unwrap(),
                DriftSpec::sine_damped(6.0).unwrap(),
            ],
            coefficients: vec![vec![1.0]; 3],
            noise: LevySpec::brownian(1.0, 1),
            grid: g,
            seed: 2024,
        };
        let report = lambda_sweep(&cfg, &[10.0, 100.0], (0.5, 2.0), &[1.0, -1.0, 0.5]).unwrap();
        assert_eq!(report.rows.len(), 2);
        assert!(
            report.rows[1].spread < report.rows[0].spread,
            "{:?}",
            report.rows
        );
        assert!(report.rows[1].averaged_gap < report.rows[0].averaged_gap);
        assert!(report.rows[1].skorohod_j1 <= report.rows[1].averaged_gap * (3.0f64).sqrt() + 1e-12);
    }

    #[test]
    fn sweep_rejects_bad_coupling_lists() {
        let g = grid(0.0, 1.0, 1e-3);
        let cfg = linear_config(3, 6.0, 1.0, g, 1);
        let x0 = [0.1, 0.2, 0.3];
        assert!(lambda_sweep(&cfg, &[], (0.2, 1.0), &x0).is_err());
        assert!(lambda_sweep(&cfg, &[0.5, 2.0], (0.2, 1.0), &x0).is_err());
        assert!(lambda_sweep(&cfg, &[10.0, 5.0], (0.2, 1.0), &x0).is_err());
    }
}

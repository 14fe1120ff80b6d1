//! The self-contained verification suite.
//!
//! Ten criteria exercise every claim the laboratory is built to check, each
//! with pinned tolerances and the shipped default seeds. The CLI `verify-all`
//! subcommand and the acceptance test target both run [`run_all`]; a
//! criterion is a pure function of the master seed, so results are
//! reproducible bit for bit.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::Serialize;

use crate::analysis::{
    lambda_sweep, pairwise_sync_curve, sync_constants, DecayVerdict, SweepReport,
};
use crate::attractor::{pullback_fixed_point, stationary_orbit_residual, DEFAULT_HORIZONS};
use crate::averaged::{
    averaged_pullback_point, averaged_sode_residual, build_stationary as build_avg_stationary,
    integrate_averaged_rode, sample_paths as sample_avg_paths, AveragedConfig,
};
use crate::bounds::{
    admissible_beta_range, closed_form_eigenvalues, gronwall_bound_check, CouplingMatrixSpec,
    MatrixVariant,
};
use crate::coupled_system::{
    build_stationary, integrate_coupled_rode, sample_system_paths, transform_consistency,
    DriftSpec, SystemConfig,
};
use crate::grid::TimeGrid;
use crate::levy_process::{exp_weighted_integral, LevyPath, LevySpec, LowerLimit};
use crate::linalg::DMatrix;
use crate::math;
use crate::rng::Stream;
use crate::Result;

/// Master seed of the shipped default suite.
pub const DEFAULT_SEED: u64 = 1729;

/// Outcome of one verification criterion.
#[derive(Debug, Clone, Serialize)]
pub struct CriterionOutcome {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub details: String,
}

impl CriterionOutcome {
    fn new(id: usize, name: &str, passed: bool, details: String) -> Self {
        CriterionOutcome {
            id,
            name: name.into(),
            passed,
            details,
        }
    }
}

fn grid(t0: f64, t1: f64, h: f64) -> Result<TimeGrid> {
    TimeGrid::new(t0, t1, h)
}

/// Criterion 1 — closed-form spectra agree with the dense solver to 1e-10
/// relative for every variant, ring size and coupling; the circulant top
/// eigenvalue equals `2 - 2l` exactly and the normalized tridiagonal top
/// eigenvalue matches its trigonometric closed form.
pub fn criterion_eigenvalues() -> Result<CriterionOutcome> {
    let l = 5.0;
    let mut worst_gap: f64 = 0.0;
    let mut failures = Vec::new();
    for n in 3..=64usize {
        for &lambda in &[1.0, 10.0, 1000.0] {
            let mut specs = vec![
                CouplingMatrixSpec::circulant(MatrixVariant::D, n, lambda, l),
                CouplingMatrixSpec::circulant(MatrixVariant::DTilde, n, lambda, l),
            ];
            let beta = admissible_beta_range(n)?.default;
            if n % 2 == 0 {
                specs.push(CouplingMatrixSpec::tridiagonal(
                    MatrixVariant::H,
                    n,
                    lambda,
                    beta,
                ));
            } else {
                specs.push(CouplingMatrixSpec::tridiagonal(
                    MatrixVariant::HTilde,
                    n,
                    lambda,
                    beta,
                ));
            }
            for spec in specs {
                let rep = closed_form_eigenvalues(&spec)?;
                worst_gap = worst_gap.max(rep.relative_gap());
                if rep.relative_gap() > 1e-10 {
                    failures.push(format!(
                        "{} N={n} lambda={lambda}: relative gap {}",
                        rep.variant,
                        rep.relative_gap()
                    ));
                }
                match spec.variant {
                    MatrixVariant::D => {
                        if rep.mu_max != 2.0 - 2.0 * l {
                            failures.push(format!(
                                "D N={n} lambda={lambda}: mu_max {} != {}",
                                rep.mu_max,
                                2.0 - 2.0 * l
                            ));
                        }
                    }
                    MatrixVariant::H => {
                        let angle =
                            core::f64::consts::PI * n as f64 / (n as f64 + 2.0);
                        let expected = -beta - 2.0 * math::cos(angle);
                        if math::abs(rep.mu_max / lambda - expected) > 1e-12 {
                            failures.push(format!(
                                "H N={n} lambda={lambda}: mu_max/lambda {} vs {expected}",
                                rep.mu_max / lambda
                            ));
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    Ok(CriterionOutcome::new(
        1,
        "eigenvalue closed forms vs dense solver",
        failures.is_empty(),
        if failures.is_empty() {
            format!("worst relative gap {worst_gap:.3e} over N in [3,64], lambda in {{1,10,1000}}")
        } else {
            failures.join("; ")
        },
    ))
}

fn mixed_drifts_l(l: f64, n: usize) -> Result<Vec<DriftSpec>> {
    // cycle through the three families, all declaring the same constant
    (0..n)
        .map(|j| match j % 3 {
            0 => DriftSpec::linear(l),
            1 => DriftSpec::cubic_damped(l),
            _ => DriftSpec::sine_damped(l + 1.0),
        })
        .collect()
}

/// Criterion 2 — decay of the gap between two solutions: the squared norm of
/// the gap-squared vector at `t = 2` sits below `e^{-2l·2} (1 + 15%)` and the
/// fitted slope beats `-2l · 0.85`.
pub fn criterion_two_solution_decay(seed: u64) -> Result<CriterionOutcome> {
    let l = 5.0;
    let h = 1e-3;
    let n = 5;
    let d = 2;
    let cfg = SystemConfig {
        n_components: n,
        dim: d,
        lambda: 1.0,
        drifts: mixed_drifts_l(l, n)?,
        coefficients: vec![vec![1.0; d]; n],
        noise: LevySpec::brownian(1.0, d),
        grid: grid(0.0, 2.0, h)?,
        seed,
    };
    let paths = sample_system_paths(&cfg, 0.0)?;
    let ou = build_stationary(&cfg, &paths)?;
    let x0a = vec![0.0; n * d];
    let mut x0b = vec![0.0; n * d];
    x0b[0] = 1.0; // distance 1, carried by one block
    let t1 = integrate_coupled_rode(&cfg, &ou, &x0a)?;
    let t2 = integrate_coupled_rode(&cfg, &ou, &x0b)?;
    let rec = pairwise_sync_curve(&t1, &t2, (0.25, 1.75), l)?;
    let q0 = rec.quartic[0];
    let q_end = *rec.quartic.last().unwrap();
    let bound = q0 * math::exp(-2.0 * l * 2.0) * 1.15;
    let slope = rec.slope_quartic.unwrap_or(f64::INFINITY);
    let slope_cap = -2.0 * l * 0.85;
    let passed =
        q_end <= bound && slope <= slope_cap && rec.verdict == DecayVerdict::Pass;
    Ok(CriterionOutcome::new(
        2,
        "two-solution synchronization decay",
        passed,
        format!(
            "gap-sq-vector norm² at t=2: {q_end:.3e} (bound {bound:.3e}); fitted slope {slope:.2} \
             (cap {slope_cap:.2})"
        ),
    ))
}

fn sweep_config(seed: u64) -> Result<SystemConfig> {
    Ok(SystemConfig {
        n_components: 3,
        dim: 1,
        lambda: 1.0,
        drifts: vec![
            DriftSpec::linear(6.0)?,
            DriftSpec::cubic_damped(6.0)?,
            DriftSpec::sine_damped(6.0)?,
        ],
        coefficients: vec![vec![1.0]; 3],
        noise: LevySpec::brownian(1.0, 1),
        grid: grid(0.0, 2.0, 1e-3)?,
        seed,
    })
}

/// Shared coupling sweep behind criteria 3 and 4.
pub fn run_default_sweep(seed: u64) -> Result<SweepReport> {
    let cfg = sweep_config(seed)?;
    lambda_sweep(&cfg, &[10.0, 100.0, 1000.0], (0.5, 2.0), &[1.0, -1.0, 0.5])
}

/// Criterion 3 — component spread shrinks with the coupling: strictly
/// decreasing, factor ≥ 5 between the extreme couplings, and the log-log
/// slope of `spread²` over the top decade in `[-2.5, -0.6]`.
///
/// The window is centred on the sharp rate: the forcing that separates
/// components has O(1) correlation time, so the difference modes respond
/// through a `1/(βλ)` filter and their squared spread scales like `λ^{-2}`
/// (measured slope ≈ -1.95, comfortably faster than the `O(1/λ)` envelope
/// of the comparison estimate; only slower decay fails).
pub fn criterion_component_spread(sweep: &SweepReport) -> CriterionOutcome {
    let spreads: Vec<f64> = sweep.rows.iter().map(|r| r.spread).collect();
    let decreasing = spreads.windows(2).all(|w| w[1] < w[0]);
    let factor_ok = spreads.last().unwrap() * 5.0 < spreads[0];
    let slope = sweep.top_decade_slope().unwrap_or(f64::NAN);
    let slope_ok = (-2.5..=-0.6).contains(&slope);
    CriterionOutcome::new(
        3,
        "component spread shrinks with coupling",
        decreasing && factor_ok && slope_ok,
        format!(
            "spreads {:?} (steps {:?}), spread² log-log slope {slope:.2} (window [-2.5, -0.6])",
            spreads,
            sweep.rows.iter().map(|r| r.step).collect::<Vec<_>>()
        ),
    )
}

/// Criterion 4 — convergence to the averaged dynamics: per-component gaps to
/// the averaged trajectory decrease in the coupling and the J1 distance at
/// the strongest coupling is at least 3x below its weakest-coupling value.
pub fn criterion_averaged_convergence(sweep: &SweepReport) -> CriterionOutcome {
    let gaps: Vec<f64> = sweep.rows.iter().map(|r| r.averaged_gap).collect();
    let j1s: Vec<f64> = sweep.rows.iter().map(|r| r.skorohod_j1).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let j1_ok = j1s.last().unwrap() * 3.0 <= j1s[0];
    CriterionOutcome::new(
        4,
        "convergence to the averaged dynamics",
        decreasing && j1_ok,
        format!("averaged gaps {gaps:?}, J1 distances {j1s:?}"),
    )
}

fn attractor_config(seed: u64, t_end: f64) -> Result<SystemConfig> {
    Ok(SystemConfig {
        n_components: 3,
        dim: 1,
        lambda: 1.0,
        drifts: vec![
            DriftSpec::linear(6.0)?,
            DriftSpec::cubic_damped(6.0)?,
            DriftSpec::sine_damped(7.0)?,
        ],
        coefficients: vec![vec![1.0]; 3],
        noise: LevySpec::brownian(1.0, 1),
        grid: grid(-20.0, t_end, 1e-3)?,
        seed,
    })
}

fn offset_states(len: usize) -> Vec<Vec<f64>> {
    let a = vec![0.0; len];
    let mut b = vec![0.0; len];
    b[0] = 1.0;
    vec![a, b]
}

/// Criterion 5 — singleton pullback attractor: endpoint spread below 1e-6
/// over initial conditions at distance 1, Cauchy gaps decreasing over the
/// horizons, and the point inside the absorbing ball.
pub fn criterion_pullback_attractor(seed: u64) -> Result<CriterionOutcome> {
    let cfg = attractor_config(seed, 0.0)?;
    let paths = sample_system_paths(&cfg, 20.0)?;
    let est = pullback_fixed_point(&cfg, &paths, &DEFAULT_HORIZONS, &offset_states(3))?;
    let norm = math::norm(&est.point);
    let spread_ok = est.initial_spread < 1e-6;
    let contained = norm <= est.radius;
    let passed = spread_ok && est.converged && contained;
    Ok(CriterionOutcome::new(
        5,
        "singleton pullback attractor",
        passed,
        format!(
            "endpoint spread {:.3e}, cauchy gaps {:?}, ‖point‖ {:.4} <= R {:.4}: {}",
            est.initial_spread, est.cauchy_gaps, norm, est.radius, contained
        ),
    ))
}

/// Criterion 6 — stationary orbit property: propagating the attractor point
/// matches re-estimating it on the shifted realization to 1e-4.
pub fn criterion_stationary_orbit(seed: u64) -> Result<CriterionOutcome> {
    let cfg = attractor_config(seed, 2.0)?;
    let paths = sample_system_paths(&cfg, 3.0)?;
    let residual = stationary_orbit_residual(
        &cfg,
        &paths,
        &[0.0, 1.0, 2.0],
        &DEFAULT_HORIZONS,
        &offset_states(3),
    )?;
    Ok(CriterionOutcome::new(
        6,
        "stationary orbit property",
        residual < 1e-4,
        format!("residual {residual:.3e} over anchors {{0, 1, 2}} (tolerance 1e-4)"),
    ))
}

/// Criterion 7 — averaged attractor: two-solution squared gap at `t = 2`
/// below `e^{(2-2l)·2} (1 + 15%)`, and the reconstructed stationary solution
/// satisfies the induced stochastic form to `10 · step`.
pub fn criterion_averaged_attractor(seed: u64) -> Result<CriterionOutcome> {
    let l = 6.0;
    let h = 1e-3;
    let full = grid(-20.0, 2.0, h)?;
    let avg = AveragedConfig {
        n_components: 3,
        dim: 1,
        drifts: vec![
            DriftSpec::linear(6.0)?,
            DriftSpec::cubic_damped(6.0)?,
            DriftSpec::sine_damped(7.0)?,
        ],
        coefficients: vec![vec![1.0]; 3],
        noise: LevySpec::brownian(1.0, 1),
        grid: full.clone(),
        seed,
    };
    let paths = sample_avg_paths(&avg, 0.0)?;

    // two-solution decay on [0, 2]
    let i_zero = full.index_of(0.0)?;
    let fwd = avg.with_grid(full.subgrid(i_zero, full.n_cells())?);
    let ou = build_avg_stationary(&fwd, &paths)?;
    let z1 = integrate_averaged_rode(&fwd, &ou, &[0.5])?;
    let z2 = integrate_averaged_rode(&fwd, &ou, &[-0.5])?;
    let gap0_sq = math::dist_sq(z1.state(0), z2.state(0));
    let gap_sq = math::dist_sq(z1.last_state(), z2.last_state());
    let bound = gap0_sq * math::exp((2.0 - 2.0 * l) * 2.0) * 1.15;
    let decay_ok = gap_sq <= bound;

    // reconstruction residual on the forward orbit of the attractor point
    let pull = avg.with_grid(full.subgrid(0, i_zero)?);
    let est = averaged_pullback_point(&pull, &paths, &DEFAULT_HORIZONS, &offset_states(1))?;
    let z_traj = integrate_averaged_rode(&fwd, &ou, &est.point)?;
    let residual = averaged_sode_residual(&fwd, &paths, &z_traj)?;
    let residual_ok = residual <= 10.0 * h;

    Ok(CriterionOutcome::new(
        7,
        "averaged attractor and reconstruction",
        decay_ok && est.converged && residual_ok,
        format!(
            "gap² at t=2: {gap_sq:.3e} (bound {bound:.3e}); reconstruction residual \
             {residual:.3e} (tolerance {:.1e})",
            10.0 * h
        ),
    ))
}

/// Criterion 8 — exponentially weighted integrals: bounded in the weight over
/// dyadic `delta` with no increasing trend, and the windowed integral at
/// `delta = 1024` at least 10x below its `delta = 1` value, across three
/// seeds and all three noise families.
pub fn criterion_weighted_integrals(seed: u64) -> Result<CriterionOutcome> {
    let h = 1e-3;
    let g = grid(-40.0, 2.0, h)?;
    let deltas: Vec<f64> = (0..=10).map(|k| (1u64 << k) as f64).collect();
    let kinds = [
        LevySpec::brownian(1.0, 1),
        LevySpec::compound_poisson(5.0, 1.0, 1),
        LevySpec::alpha_stable(1.5, 1.0, 1),
    ];
    let mut details = Vec::new();
    let mut passed = true;
    for spec in &kinds {
        for s in 0..3u64 {
            let path = LevyPath::sample_two_sided(spec, &g, seed + s)?;
            // (bounded) improper integrals over dyadic delta at several t
            let mut sups = vec![0.0f64; deltas.len()];
            for &t in &[0.0, 0.5, 1.0] {
                for (k, &delta) in deltas.iter().enumerate() {
                    let v = exp_weighted_integral(&path, delta, t, LowerLimit::NegInfinity)?;
                    let mag = math::norm(&v.value);
                    if !mag.is_finite() {
                        passed = false;
                    }
                    sups[k] = sups[k].max(mag);
                }
            }
            let first_half = sups[..5].iter().cloned().fold(0.0, f64::max);
            let second_half = sups[6..].iter().cloned().fold(0.0, f64::max);
            if second_half > first_half {
                passed = false;
                details.push(format!(
                    "{} seed {}: growth in delta ({first_half:.3e} -> {second_half:.3e})",
                    spec.label(),
                    seed + s
                ));
            }
            // (vanishing) windowed integral shrinks by at least 10x
            let lo = LowerLimit::Finite(-7.0);
            let v1 = math::norm(&exp_weighted_integral(&path, 1.0, 1.0, lo)?.value);
            let v1024 = math::norm(&exp_weighted_integral(&path, 1024.0, 1.0, lo)?.value);
            if v1024 * 10.0 > v1 {
                passed = false;
                details.push(format!(
                    "{} seed {}: |I(1024)| = {v1024:.3e} not 10x below |I(1)| = {v1:.3e}",
                    spec.label(),
                    seed + s
                ));
            }
        }
    }
    Ok(CriterionOutcome::new(
        8,
        "exponentially weighted integrals bounded and vanishing",
        passed,
        if details.is_empty() {
            "all 9 (seed, noise) combinations bounded with 10x decay".into()
        } else {
            details.join("; ")
        },
    ))
}

/// Criterion 9 — the two integration routes stay consistent and the
/// discrepancy halves (factor in [1.6, 2.4]) when the step halves.
pub fn criterion_transform_consistency(seed: u64) -> Result<CriterionOutcome> {
    let fine_grid = grid(0.0, 2.0, 5e-4)?;
    let cfg_fine = SystemConfig {
        n_components: 3,
        dim: 1,
        lambda: 1.0,
        drifts: mixed_drifts_l(5.0, 3)?,
        coefficients: vec![vec![1.0]; 3],
        noise: LevySpec::brownian(1.0, 1),
        grid: fine_grid.clone(),
        seed,
    };
    let paths = sample_system_paths(&cfg_fine, 0.0)?;
    let coarse_paths: Vec<LevyPath> = paths
        .iter()
        .map(|p| p.restrict(2))
        .collect::<Result<_>>()?;
    let cfg_coarse = cfg_fine.with_grid(fine_grid.coarsen(2)?);
    let x0 = [0.4, 0.0, -0.4];
    let d_fine = transform_consistency(&cfg_fine, &paths, &x0)?;
    let d_coarse = transform_consistency(&cfg_coarse, &coarse_paths, &x0)?;
    let ratio = d_coarse / d_fine;
    Ok(CriterionOutcome::new(
        9,
        "integration-route consistency halves with the step",
        (1.6..=2.4).contains(&ratio),
        format!("discrepancy {d_coarse:.3e} -> {d_fine:.3e}, ratio {ratio:.2} (target [1.6, 2.4])"),
    ))
}

/// Criterion 10 — componentwise comparison inequality: the equality case
/// matches the bound to `10 · step` and 100 random nonnegative-slack systems
/// never exceed the bound beyond `10 · step`.
pub fn criterion_comparison_inequality(seed: u64) -> Result<CriterionOutcome> {
    let h = 1e-3;
    let g = grid(0.0, 1.0, h)?;
    // equality case: scalar contraction
    let scalar = gronwall_bound_check(
        &|_t| {
            let mut m = DMatrix::zeros(1, 1);
            m[(0, 0)] = -1.0;
            m
        },
        &[1.0],
        &|_t| vec![0.0],
        &|_t| vec![0.0],
        &g,
    )?;
    let equality_ok = scalar.max_gap <= 10.0 * h;

    // random diagonally dominant quasimonotone systems with slack
    let mut stream = Stream::derive(seed, 0xB0);
    let mut worst_violation = f64::NEG_INFINITY;
    for trial in 0..100 {
        let n = 1 + (trial % 3);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                if i != j {
                    let v = 0.3 * stream.uniform();
                    m[(i, j)] = v;
                    row_sum += v;
                }
            }
            m[(i, i)] = -(1.0 + row_sum + stream.uniform());
        }
        let psi: Vec<f64> = (0..n).map(|_| stream.uniform()).collect();
        let slack: Vec<f64> = (0..n).map(|_| 0.5 * stream.uniform()).collect();
        let phi0: Vec<f64> = (0..n).map(|_| stream.uniform()).collect();
        let report = gronwall_bound_check(
            &move |_t| m.clone(),
            &phi0,
            &{
                let psi = psi.clone();
                move |_t| psi.clone()
            },
            &{
                let slack = slack.clone();
                move |_t| slack.clone()
            },
            &g,
        )?;
        worst_violation = worst_violation.max(report.max_violation);
    }
    let slack_ok = worst_violation <= 10.0 * h;
    Ok(CriterionOutcome::new(
        10,
        "componentwise comparison inequality",
        equality_ok && slack_ok,
        format!(
            "equality gap {:.3e}, worst slack-system violation {worst_violation:.3e} \
             (tolerance {:.1e})",
            scalar.max_gap,
            10.0 * h
        ),
    ))
}

/// Run every criterion with the given master seed.
pub fn run_all_seeded(seed: u64) -> Result<Vec<CriterionOutcome>> {
    let mut out = Vec::with_capacity(10);
    out.push(criterion_eigenvalues()?);
    out.push(criterion_two_solution_decay(seed)?);
    let sweep = run_default_sweep(seed)?;
    out.push(criterion_component_spread(&sweep));
    out.push(criterion_averaged_convergence(&sweep));
    out.push(criterion_pullback_attractor(seed)?);
    out.push(criterion_stationary_orbit(seed)?);
    out.push(criterion_averaged_attractor(seed)?);
    out.push(criterion_weighted_integrals(seed)?);
    out.push(criterion_transform_consistency(seed)?);
    out.push(criterion_comparison_inequality(seed)?);
    Ok(out)
}

/// Run every criterion with the shipped default seed.
pub fn run_all() -> Result<Vec<CriterionOutcome>> {
    run_all_seeded(DEFAULT_SEED)
}

/// Evaluate the spread-constant table on the default sweep configuration
/// (used by the CLI sweep report).
pub fn default_constants(seed: u64) -> Result<crate::analysis::ConstantsTable> {
    let cfg = sweep_config(seed)?;
    let paths = sample_system_paths(&cfg, 0.0)?;
    let ou = build_stationary(&cfg, &paths)?;
    sync_constants(&cfg.drifts, &ou, (0.5, 2.0), 2.0)
}

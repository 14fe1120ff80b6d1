//! Comparison matrices of the synchronization estimates and their spectra.
//!
//! Four symmetric matrices drive the differential inequalities used in the
//! analysis of the coupled ring:
//!
//! * `D`  — circulant `N×N`, diagonal `2 - 2l - 2λ`, entries `λ` on the ring
//!   neighbours: governs the decay of squared gaps between two solutions;
//! * `D~` — same circulant pattern with diagonal `4 - 2l - 2λ`: governs the
//!   absorbing-ball estimate;
//! * `H`  — tridiagonal `⌊N/2⌋ × ⌊N/2⌋` (no corner entries), diagonal `-βλ`,
//!   off-diagonal `λ`: governs the spread of adjacent-component differences
//!   for even ring sizes;
//! * `H~` — the `(N-1)/2` analogue used for odd ring sizes.
//!
//! Circulant spectra are `diag + 2λ cos(2πk/N)`; tridiagonal Toeplitz spectra
//! are `-βλ + 2λ cos(kπ/(M+1))`. Both closed forms are cross-checked against
//! the dense Jacobi eigensolver, which exists precisely to be an independent
//! oracle. The module also evaluates the componentwise comparison inequality
//! `Φ' ≤ D(t)Φ + Ψ  ⟹  Φ(t) ≤ exp(∫D)Φ(T0) + ∫ exp(∫D)Ψ` on instances.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use serde::Serialize;

use crate::grid::TimeGrid;
use crate::linalg::{expm, jacobi_eigh, DMatrix};
use crate::math;
use crate::{Result, SimError};

/// Which comparison matrix to build.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MatrixVariant {
    /// Circulant, diagonal `2 - 2l - 2λ`.
    D,
    /// Circulant, diagonal `4 - 2l - 2λ`.
    DTilde,
    /// Tridiagonal `⌊N/2⌋`, diagonal `-βλ`.
    H,
    /// Tridiagonal `(N-1)/2`, diagonal `-βλ`.
    HTilde,
}

impl MatrixVariant {
    pub fn name(&self) -> &'static str {
        match self {
            MatrixVariant::D => "D",
            MatrixVariant::DTilde => "D_tilde",
            MatrixVariant::H => "H",
            MatrixVariant::HTilde => "H_tilde",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "D" | "d" => Ok(MatrixVariant::D),
            "D_tilde" | "d_tilde" | "Dt" => Ok(MatrixVariant::DTilde),
            "H" | "h" => Ok(MatrixVariant::H),
            "H_tilde" | "h_tilde" | "Ht" => Ok(MatrixVariant::HTilde),
            other => Err(SimError::InvalidParameter(format!(
                "unknown matrix variant {other:?}"
            ))),
        }
    }
}

/// Parameters of a comparison matrix.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingMatrixSpec {
    pub variant: MatrixVariant,
    /// Ring size.
    pub n: usize,
    pub lambda: f64,
    /// Dissipativity constant (circulant variants only).
    pub l: f64,
    /// Tridiagonal diagonal coefficient (H variants only).
    pub beta: Option<f64>,
}

impl CouplingMatrixSpec {
    pub fn circulant(variant: MatrixVariant, n: usize, lambda: f64, l: f64) -> Self {
        CouplingMatrixSpec {
            variant,
            n,
            lambda,
            l,
            beta: None,
        }
    }

    pub fn tridiagonal(variant: MatrixVariant, n: usize, lambda: f64, beta: f64) -> Self {
        CouplingMatrixSpec {
            variant,
            n,
            lambda,
            l: 0.0,
            beta: Some(beta),
        }
    }

    /// Matrix size: `N` for circulant variants, `⌊N/2⌋` / `(N-1)/2` for the
    /// tridiagonal ones.
    pub fn size(&self) -> usize {
        match self.variant {
            MatrixVariant::D | MatrixVariant::DTilde => self.n,
            MatrixVariant::H => self.n / 2,
            MatrixVariant::HTilde => (self.n - 1) / 2,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(SimError::InvalidParameter(format!(
                "ring size must be >= 2, got {}",
                self.n
            )));
        }
        if !(self.lambda > 0.0) {
            return Err(SimError::InvalidParameter(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        match self.variant {
            MatrixVariant::H | MatrixVariant::HTilde => {
                if self.beta.is_none() {
                    return Err(SimError::InvalidParameter(
                        "beta is required for the tridiagonal variants".into(),
                    ));
                }
                if self.size() == 0 {
                    return Err(SimError::InvalidParameter(format!(
                        "ring size {} too small for variant {}",
                        self.n,
                        self.variant.name()
                    )));
                }
            }
            _ => {}
        }
        Ok(())
    }

    fn diagonal(&self) -> f64 {
        match self.variant {
            MatrixVariant::D => 2.0 - 2.0 * self.l - 2.0 * self.lambda,
            MatrixVariant::DTilde => 4.0 - 2.0 * self.l - 2.0 * self.lambda,
            MatrixVariant::H | MatrixVariant::HTilde => -self.beta.unwrap() * self.lambda,
        }
    }
}

/// Dense symmetric realization of the spec.
pub fn build_coupling_matrix(spec: &CouplingMatrixSpec) -> Result<DMatrix> {
    spec.validate()?;
    let m = spec.size();
    let diag = spec.diagonal();
    let mut out = DMatrix::zeros(m, m);
    for i in 0..m {
        out[(i, i)] = diag;
    }
    match spec.variant {
        MatrixVariant::D | MatrixVariant::DTilde => {
            // circulant: neighbours mod N get lambda (for N = 2 both
            // neighbours coincide, doubling the entry)
            for i in 0..m {
                out[(i, (i + 1) % m)] += spec.lambda;
                out[(i, (i + m - 1) % m)] += spec.lambda;
            }
        }
        MatrixVariant::H | MatrixVariant::HTilde => {
            for i in 0..m.saturating_sub(1) {
                out[(i, i + 1)] = spec.lambda;
                out[(i + 1, i)] = spec.lambda;
            }
        }
    }
    Ok(out)
}

/// Closed-form spectrum cross-checked against the dense solver.
#[derive(Debug, Clone, Serialize)]
pub struct EigenReport {
    pub variant: String,
    pub n: usize,
    pub lambda: f64,
    /// Dense-solver eigenvalues, ascending.
    pub eigenvalues: Vec<f64>,
    /// Closed-form eigenvalues, ascending.
    pub closed_form: Vec<f64>,
    pub mu_max: f64,
    /// Largest |dense - closed| over the sorted spectra.
    pub max_abs_gap: f64,
    /// Spectral scale used for the relative gap (largest |eigenvalue|).
    pub norm: f64,
}

impl EigenReport {
    /// Relative agreement between the two eigenvalue routes.
    pub fn relative_gap(&self) -> f64 {
        self.max_abs_gap / self.norm.max(f64::MIN_POSITIVE)
    }
}

/// Closed-form eigenvalues of the spec, ascending.
pub fn closed_form_spectrum(spec: &CouplingMatrixSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let m = spec.size();
    let diag = spec.diagonal();
    let mut values: Vec<f64> = match spec.variant {
        MatrixVariant::D | MatrixVariant::DTilde => (0..m)
            .map(|k| {
                diag + 2.0
                    * spec.lambda
                    * math::cos(2.0 * core::f64::consts::PI * k as f64 / m as f64)
            })
            .collect(),
        MatrixVariant::H | MatrixVariant::HTilde => (1..=m)
            .map(|k| {
                diag + 2.0
                    * spec.lambda
                    * math::cos(core::f64::consts::PI * k as f64 / (m as f64 + 1.0))
            })
            .collect(),
    };
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok(values)
}

/// Build the matrix, compute both eigenvalue routes and report the gap.
pub fn closed_form_eigenvalues(spec: &CouplingMatrixSpec) -> Result<EigenReport> {
    let matrix = build_coupling_matrix(spec)?;
    let dense = jacobi_eigh(&matrix)?.values;
    let closed = closed_form_spectrum(spec)?;
    let max_abs_gap = dense
        .iter()
        .zip(&closed)
        .map(|(a, b)| math::abs(a - b))
        .fold(0.0, f64::max);
    let norm = dense.iter().fold(0.0f64, |m, x| m.max(math::abs(*x)));
    Ok(EigenReport {
        variant: spec.variant.name().into(),
        n: spec.n,
        lambda: spec.lambda,
        mu_max: *closed.last().unwrap(),
        eigenvalues: dense,
        closed_form: closed,
        max_abs_gap,
        norm,
    })
}

/// Admissible open interval for the tridiagonal diagonal coefficient and its
/// default choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaRange {
    pub lower: f64,
    pub upper: f64,
    pub default: f64,
}

/// For ring size `N >= 3`: the interval `(-2 cos(Nπ/(N+2)), 2)` for even `N`
/// (`(-2 cos((N-1)π/(N+1)), 2)` for odd) with default `1 - cos(·)` at the
/// same angle.
pub fn admissible_beta_range(n: usize) -> Result<BetaRange> {
    if n < 3 {
        return Err(SimError::InvalidParameter(format!(
            "beta range needs ring size >= 3, got {n}"
        )));
    }
    let angle = if n % 2 == 0 {
        core::f64::consts::PI * n as f64 / (n as f64 + 2.0)
    } else {
        core::f64::consts::PI * (n as f64 - 1.0) / (n as f64 + 1.0)
    };
    let c = math::cos(angle);
    Ok(BetaRange {
        lower: -2.0 * c,
        upper: 2.0,
        default: 1.0 - c,
    })
}

/// Outcome of one comparison-inequality check.
#[derive(Debug, Clone, Serialize)]
pub struct GronwallReport {
    /// Largest componentwise excess of the trajectory over the bound
    /// (positive means the bound was exceeded).
    pub max_violation: f64,
    /// Largest componentwise |trajectory - bound| (meaningful for the
    /// equality case).
    pub max_gap: f64,
    pub grid_step: f64,
}

/// Integrate `Φ' = D(t)Φ + Ψ(t) - slack(t)` with forward Euler and compare
/// against the comparison bound evaluated with matrix exponentials of the
/// cumulative `∫D`.
///
/// With `slack = 0` this is the equality case and `max_gap` is O(step); any
/// nonnegative slack must keep `max_violation` within discretization error.
/// `D(t)` must have nonnegative off-diagonal entries for the componentwise
/// bound to apply; this is checked on every node.
pub fn gronwall_bound_check(
    d_fn: &dyn Fn(f64) -> DMatrix,
    phi0: &[f64],
    psi_fn: &dyn Fn(f64) -> Vec<f64>,
    slack_fn: &dyn Fn(f64) -> Vec<f64>,
    grid: &TimeGrid,
) -> Result<GronwallReport> {
    let n = phi0.len();
    let h = grid.step();
    let nodes = grid.n_nodes();

    // sample coefficients once per node
    let mut mats = Vec::with_capacity(nodes);
    let mut psis = Vec::with_capacity(nodes);
    let mut slacks = Vec::with_capacity(nodes);
    for i in 0..nodes {
        let t = grid.time(i);
        let m = d_fn(t);
        if m.n_rows() != n || m.n_cols() != n {
            return Err(SimError::Shape("D(t) size does not match Φ0".into()));
        }
        for r in 0..n {
            for c in 0..n {
                if r != c && m[(r, c)] < 0.0 {
                    return Err(SimError::InvalidParameter(format!(
                        "D({t}) has a negative off-diagonal entry; the componentwise bound \
                         requires quasimonotone D"
                    )));
                }
            }
        }
        let p = psi_fn(t);
        let s = slack_fn(t);
        if p.len() != n || s.len() != n {
            return Err(SimError::Shape("Ψ or slack size does not match Φ0".into()));
        }
        if s.iter().any(|&x| x < 0.0) {
            return Err(SimError::InvalidParameter("slack must be nonnegative".into()));
        }
        mats.push(m);
        psis.push(p);
        slacks.push(s);
    }

    // forward Euler for the trajectory
    let mut phi = phi0.to_vec();
    let mut trajectory = Vec::with_capacity(nodes);
    trajectory.push(phi.clone());
    for i in 0..grid.n_cells() {
        let dphi = mats[i].matvec(&phi);
        for k in 0..n {
            phi[k] += h * (dphi[k] + psis[i][k] - slacks[i][k]);
        }
        trajectory.push(phi.clone());
    }

    // cumulative integral of D by the trapezoid rule
    let mut cum = Vec::with_capacity(nodes);
    cum.push(DMatrix::zeros(n, n));
    for i in 0..grid.n_cells() {
        let inc = mats[i].add(&mats[i + 1]).scale(0.5 * h);
        cum.push(cum[i].add(&inc));
    }

    // bound(t_i) = exp(∫_{T0}^{t_i} D) Φ0 + Σ_{j<i} exp(∫_{t_j}^{t_i} D) Ψ(t_j) h,
    // accumulated stepwise: B_{i+1} = exp(∫_{t_i}^{t_{i+1}} D) (B_i + h Ψ_i).
    // For commuting families (constant D in particular) this equals the
    // closed expression exactly.
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_gap: f64 = 0.0;
    let mut bound = phi0.to_vec();
    for i in 0..nodes {
        if !bound.iter().all(|x| x.is_finite()) {
            return Err(SimError::Numeric("non-finite comparison bound".into()));
        }
        for k in 0..n {
            let excess = trajectory[i][k] - bound[k];
            max_violation = max_violation.max(excess);
            max_gap = max_gap.max(math::abs(excess));
        }
        if i < grid.n_cells() {
            let step_int = cum[i + 1].sub(&cum[i]);
            let propagator = expm(&step_int)?;
            let fed: Vec<f64> = (0..n).map(|k| bound[k] + h * psis[i][k]).collect();
            bound = propagator.matvec(&fed);
        }
    }
    Ok(GronwallReport {
        max_violation,
        max_gap,
        grid_step: h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;
    use approx::assert_relative_eq;

    #[test]
    fn circulant_n3_entries_match_hand_construction() {
        // N = 3, l = 5, lambda = 1: diagonal -10, every off-diagonal 1
        // (on 3 nodes both ring neighbours are adjacent)
        let spec = CouplingMatrixSpec::circulant(MatrixVariant::D, 3, 1.0, 5.0);
        let m = build_coupling_matrix(&spec).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expected = if i == j { -10.0 } else { 1.0 };
                assert_eq!(m[(i, j)], expected, "({i},{j})");
            }
        }
    }

    #[test]
    fn circulant_n3_spectrum_is_minus8_minus11_minus11() {
        let spec = CouplingMatrixSpec::circulant(MatrixVariant::D, 3, 1.0, 5.0);
        let rep = closed_form_eigenvalues(&spec).unwrap();
        assert_relative_eq!(rep.eigenvalues[0], -11.0, epsilon = 1e-12);
        assert_relative_eq!(rep.eigenvalues[1], -11.0, epsilon = 1e-12);
        assert_relative_eq!(rep.eigenvalues[2], -8.0, epsilon = 1e-12);
        // mu_max = 2 - 2l <= -l
        assert_eq!(rep.mu_max, -8.0);
        assert!(rep.mu_max <= -5.0);
    }

    #[test]
    fn tridiagonal_n4_matches_display_and_spectrum() {
        let beta = admissible_beta_range(4).unwrap().default;
        assert_relative_eq!(beta, 1.5, epsilon = 1e-15);
        let lambda = 3.0;
        let spec = CouplingMatrixSpec::tridiagonal(MatrixVariant::H, 4, lambda, beta);
        let m = build_coupling_matrix(&spec).unwrap();
        assert_eq!(m.n_rows(), 2);
        assert_eq!(m[(0, 0)], -beta * lambda);
        assert_eq!(m[(0, 1)], lambda);
        assert_eq!(m[(1, 0)], lambda);
        assert_eq!(m[(1, 1)], -beta * lambda);
        // lambda-normalized eigenvalues {-2.5, -0.5}
        let rep = closed_form_eigenvalues(&spec).unwrap();
        assert_relative_eq!(rep.eigenvalues[0] / lambda, -2.5, epsilon = 1e-12);
        assert_relative_eq!(rep.eigenvalues[1] / lambda, -0.5, epsilon = 1e-12);
        // mu_max / lambda = -beta - 2 cos(N pi / (N+2))
        let angle = core::f64::consts::PI * 4.0 / 6.0;
        assert_relative_eq!(
            rep.mu_max / lambda,
            -beta - 2.0 * angle.cos(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn circulant_with_tiny_lambda_approaches_scaled_identity() {
        // D with lambda -> 0 degenerates to (2 - 2l) I; lambda must stay
        // positive, so check continuity at 1e-12
        let spec = CouplingMatrixSpec::circulant(MatrixVariant::D, 5, 1e-12, 6.0);
        let m = build_coupling_matrix(&spec).unwrap();
        for i in 0..5 {
            assert_relative_eq!(m[(i, i)], 2.0 - 12.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn tridiagonal_spectra_scale_linearly_in_lambda() {
        let beta = admissible_beta_range(8).unwrap().default;
        let base = closed_form_spectrum(&CouplingMatrixSpec::tridiagonal(
            MatrixVariant::H,
            8,
            1.0,
            beta,
        ))
        .unwrap();
        let scaled = closed_form_spectrum(&CouplingMatrixSpec::tridiagonal(
            MatrixVariant::H,
            8,
            1000.0,
            beta,
        ))
        .unwrap();
        for (a, b) in base.iter().zip(&scaled) {
            assert_relative_eq!(b / 1000.0, a, epsilon = 1e-12);
        }
    }

    #[test]
    fn beta_defaults_and_intervals() {
        // even N = 4: default 1.5 inside (1, 2)
        let r4 = admissible_beta_range(4).unwrap();
        assert_relative_eq!(r4.lower, 1.0, epsilon = 1e-12);
        assert_eq!(r4.upper, 2.0);
        assert_relative_eq!(r4.default, 1.5, epsilon = 1e-12);
        // odd N = 5: same numbers via the odd-angle formula
        let r5 = admissible_beta_range(5).unwrap();
        assert_relative_eq!(r5.lower, 1.0, epsilon = 1e-12);
        assert_relative_eq!(r5.default, 1.5, epsilon = 1e-12);
        assert!(admissible_beta_range(2).is_err());
    }

    #[test]
    fn beta_default_strictly_inside_interval_for_all_sizes() {
        for n in 3..=64 {
            let r = admissible_beta_range(n).unwrap();
            assert!(
                r.lower < r.default && r.default < r.upper,
                "n = {n}: {r:?}"
            );
        }
    }

    #[test]
    fn dense_and_closed_form_agree_across_all_variants() {
        for n in 3..=64 {
            for &lambda in &[1.0, 10.0, 1000.0] {
                let mut specs = vec![
                    CouplingMatrixSpec::circulant(MatrixVariant::D, n, lambda, 5.0),
                    CouplingMatrixSpec::circulant(MatrixVariant::DTilde, n, lambda, 5.0),
                ];
                let beta = admissible_beta_range(n).unwrap().default;
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
                    let rep = closed_form_eigenvalues(&spec).unwrap();
                    assert!(
                        rep.relative_gap() <= 1e-10,
                        "{} n = {n} lambda = {lambda}: gap {}",
                        rep.variant,
                        rep.relative_gap()
                    );
                }
            }
        }
    }

    #[test]
    fn circulant_mu_max_is_lambda_independent() {
        // the top eigenvector of the ring is constant, so mu_max = 2 - 2l
        for l in [4.5, 5.0, 6.0, 10.0] {
            for lambda in [1.0, 10.0, 1000.0] {
                let rep = closed_form_eigenvalues(&CouplingMatrixSpec::circulant(
                    MatrixVariant::D,
                    6,
                    lambda,
                    l,
                ))
                .unwrap();
                assert_eq!(rep.mu_max, 2.0 - 2.0 * l);
                assert!(rep.mu_max < -l);
            }
        }
    }

    #[test]
    fn quadratic_form_is_below_minus_l_t() {
        // zeta^T (t D) zeta <= -l t |zeta|^2 for random zeta
        let t = 1.7;
        let l = 5.0;
        let spec = CouplingMatrixSpec::circulant(MatrixVariant::D, 7, 3.0, l);
        let m = build_coupling_matrix(&spec).unwrap().scale(t);
        let mut s = Stream::derive(2024, 1);
        for _ in 0..100 {
            let zeta: Vec<f64> = (0..7).map(|_| s.normal()).collect();
            let quad = crate::math::dot(&zeta, &m.matvec(&zeta));
            let bound = -l * t * crate::math::norm_sq(&zeta);
            assert!(quad <= bound + 1e-12, "{quad} > {bound}");
        }
    }

    #[test]
    fn tridiagonal_mu_max_negative_for_default_beta() {
        for n in (4..=64).step_by(2) {
            let beta = admissible_beta_range(n).unwrap().default;
            let rep = closed_form_eigenvalues(&CouplingMatrixSpec::tridiagonal(
                MatrixVariant::H,
                n,
                7.0,
                beta,
            ))
            .unwrap();
            assert!(rep.mu_max < 0.0, "n = {n}: {}", rep.mu_max);
        }
        for n in (3..=63).step_by(2) {
            let beta = admissible_beta_range(n).unwrap().default;
            let rep = closed_form_eigenvalues(&CouplingMatrixSpec::tridiagonal(
                MatrixVariant::HTilde,
                n,
                7.0,
                beta,
            ))
            .unwrap();
            assert!(rep.mu_max < 0.0, "n = {n}: {}", rep.mu_max);
        }
    }

    #[test]
    fn construction_errors() {
        assert!(build_coupling_matrix(&CouplingMatrixSpec::circulant(
            MatrixVariant::D,
            1,
            1.0,
            5.0
        ))
        .is_err());
        let mut spec = CouplingMatrixSpec::circulant(MatrixVariant::H, 6, 1.0, 5.0);
        spec.beta = None;
        assert!(build_coupling_matrix(&spec).is_err());
    }

    fn unit_grid(h: f64) -> TimeGrid {
        TimeGrid::new(0.0, 1.0, h).unwrap()
    }

    #[test]
    fn gronwall_scalar_equality_case() {
        // Φ' = -Φ, Φ0 = 1: trajectory e^{-t}, bound e^{-t}
        let h = 1e-3;
        let report = gronwall_bound_check(
            &|_t| {
                let mut m = DMatrix::zeros(1, 1);
                m[(0, 0)] = -1.0;
                m
            },
            &[1.0],
            &|_t| vec![0.0],
            &|_t| vec![0.0],
            &unit_grid(h),
        )
        .unwrap();
        assert!(report.max_gap <= 10.0 * h, "gap {}", report.max_gap);
    }

    #[test]
    fn gronwall_diagonal_matches_componentwise_closed_form() {
        // constant commuting diagonal D: bound equals the per-component
        // closed form b_k(t) = e^{d_k t} phi_k + psi_k (e^{d_k t} - 1) / d_k
        let h = 1e-3;
        let d = [-1.0, -3.0];
        let psi = [0.5, 2.0];
        let phi0 = [1.0, 0.25];
        let report = gronwall_bound_check(
            &|_t| {
                let mut m = DMatrix::zeros(2, 2);
                m[(0, 0)] = d[0];
                m[(1, 1)] = d[1];
                m
            },
            &phi0,
            &|_t| psi.to_vec(),
            &|_t| vec![0.0, 0.0],
            &unit_grid(h),
        )
        .unwrap();
        assert!(report.max_gap <= 10.0 * h, "gap {}", report.max_gap);
        for k in 0..2 {
            let t: f64 = 1.0;
            let exact = (d[k] * t).exp() * phi0[k] + psi[k] * ((d[k] * t).exp() - 1.0) / d[k];
            assert!(exact.is_finite());
        }
    }

    #[test]
    fn gronwall_slack_keeps_trajectory_below_bound() {
        let h = 1e-3;
        let report = gronwall_bound_check(
            &|_t| {
                let mut m = DMatrix::zeros(2, 2);
                m[(0, 0)] = -2.0;
                m[(1, 1)] = -1.0;
                m[(0, 1)] = 0.3;
                m[(1, 0)] = 0.2;
                m
            },
            &[1.0, 1.0],
            &|t| vec![1.0, 0.5 + 0.5 * (3.0 * t).sin()],
            &|_t| vec![0.4, 0.2],
            &unit_grid(h),
        )
        .unwrap();
        assert!(
            report.max_violation <= 10.0 * h,
            "violation {}",
            report.max_violation
        );
        // slack makes the trajectory strictly smaller somewhere
        assert!(report.max_gap > 0.01);
    }

    #[test]
    fn gronwall_rejects_non_quasimonotone_d() {
        let res = gronwall_bound_check(
            &|_t| {
                let mut m = DMatrix::zeros(2, 2);
                m[(0, 1)] = -1.0;
                m
            },
            &[1.0, 1.0],
            &|_t| vec![0.0, 0.0],
            &|_t| vec![0.0, 0.0],
            &unit_grid(0.01),
        );
        assert!(matches!(res, Err(SimError::InvalidParameter(_))));
    }
}

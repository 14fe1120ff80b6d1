//! Two-sided Lévy sample paths on a time grid.
//!
//! A path is stored as cumulative values on the grid together with the index
//! of its anchor node, where the path is zero by construction. Values are
//! exposed relative to the anchor, so the shift map `(θ_t ω)(s) = ω(t+s) - ω(t)`
//! is a pure relabelling: it moves the anchor and translates the grid, leaves
//! the raw data untouched, and therefore composes exactly
//! (`shift(shift(p, s), t) = shift(p, s + t)` bit for bit). Cell increments
//! are differences of raw values and are invariant under shifts.
//!
//! Three noise families are provided: Brownian motion, compound Poisson with
//! Gaussian jump sizes, and symmetric alpha-stable increments with
//! `alpha in (1, 2]` (so `E|L_1|` is finite). Every family carries an optional
//! deterministic drift slope `gamma`; a compound Poisson spec with zero
//! intensity and nonzero `gamma` degenerates to the pure-drift path
//! `L(t) = gamma * t`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use serde::Serialize;

use crate::grid::TimeGrid;
use crate::math;
use crate::rng::{stream_tag, Stream, PURPOSE_PATH};
use crate::{Result, SimError};

/// Noise family of a path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LevyKind {
    CompoundPoisson,
    SymmetricAlphaStable,
    Brownian,
}

/// Law of a d-dimensional Lévy path; components are independent copies of the
/// scalar law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevySpec {
    pub kind: LevyKind,
    /// Jump rate per unit time (compound Poisson only).
    pub intensity: f64,
    /// Scale of the random part: Brownian volatility, jump-size standard
    /// deviation, or stable scale.
    pub jump_scale: f64,
    /// Stability index in `(1, 2]` (alpha-stable only).
    pub alpha: f64,
    /// Deterministic slope; equals the mean `E L_1` whenever the random part
    /// is centred (all shipped families are).
    pub drift_gamma: f64,
    /// Path dimension.
    pub dimension: usize,
}

impl LevySpec {
    pub fn brownian(jump_scale: f64, dimension: usize) -> Self {
        LevySpec {
            kind: LevyKind::Brownian,
            intensity: 0.0,
            jump_scale,
            alpha: 2.0,
            drift_gamma: 0.0,
            dimension,
        }
    }

    pub fn compound_poisson(intensity: f64, jump_scale: f64, dimension: usize) -> Self {
        LevySpec {
            kind: LevyKind::CompoundPoisson,
            intensity,
            jump_scale,
            alpha: 2.0,
            drift_gamma: 0.0,
            dimension,
        }
    }

    pub fn alpha_stable(alpha: f64, jump_scale: f64, dimension: usize) -> Self {
        LevySpec {
            kind: LevyKind::SymmetricAlphaStable,
            intensity: 0.0,
            jump_scale,
            alpha,
            drift_gamma: 0.0,
            dimension,
        }
    }

    pub fn with_drift(mut self, gamma: f64) -> Self {
        self.drift_gamma = gamma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.dimension == 0 {
            return Err(SimError::InvalidParameter("dimension must be >= 1".into()));
        }
        if !(self.jump_scale > 0.0) {
            return Err(SimError::InvalidParameter(format!(
                "jump_scale must be positive, got {}",
                self.jump_scale
            )));
        }
        if self.kind == LevyKind::CompoundPoisson && !(self.intensity >= 0.0) {
            return Err(SimError::InvalidParameter(format!(
                "intensity must be >= 0, got {}",
                self.intensity
            )));
        }
        if self.kind == LevyKind::SymmetricAlphaStable && !(self.alpha > 1.0 && self.alpha <= 2.0)
        {
            return Err(SimError::InvalidParameter(format!(
                "alpha must lie in (1, 2], got {}",
                self.alpha
            )));
        }
        if !self.drift_gamma.is_finite() {
            return Err(SimError::InvalidParameter("drift_gamma must be finite".into()));
        }
        Ok(())
    }

    /// Human-readable tag used in reports.
    pub fn label(&self) -> String {
        match self.kind {
            LevyKind::Brownian => format!("brownian(scale={})", self.jump_scale),
            LevyKind::CompoundPoisson => format!(
                "compound-poisson(rate={}, scale={})",
                self.intensity, self.jump_scale
            ),
            LevyKind::SymmetricAlphaStable => format!(
                "alpha-stable(alpha={}, scale={})",
                self.alpha, self.jump_scale
            ),
        }
    }
}

/// A recorded compound-Poisson jump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JumpRecord {
    /// Grid cell the jump falls in.
    pub cell: usize,
    /// Jump time (current frame; updated by shifts).
    pub time: f64,
    /// Path component the jump belongs to.
    pub component: usize,
    pub size: f64,
}

/// Increments of a path over the cells of a grid, one `dimension`-vector per
/// cell, flattened row-major.
#[derive(Debug, Clone)]
pub struct IncrementSequence {
    pub grid: TimeGrid,
    pub dimension: usize,
    pub values: Vec<f64>,
    pub jumps: Option<Vec<JumpRecord>>,
}

impl IncrementSequence {
    #[inline]
    pub fn cell(&self, i: usize) -> &[f64] {
        &self.values[i * self.dimension..(i + 1) * self.dimension]
    }
}

/// Draw one increment vector per grid cell from the given stream.
fn draw_increments(spec: &LevySpec, grid: &TimeGrid, stream: &mut Stream) -> IncrementSequence {
    let d = spec.dimension;
    let n = grid.n_cells();
    let h = grid.step();
    let mut values = vec![0.0; n * d];
    let mut jumps = if spec.kind == LevyKind::CompoundPoisson {
        Some(Vec::new())
    } else {
        None
    };
    for i in 0..n {
        for k in 0..d {
            let mut inc = spec.drift_gamma * h;
            match spec.kind {
                LevyKind::Brownian => {
                    inc += spec.jump_scale * math::sqrt(h) * stream.normal();
                }
                LevyKind::CompoundPoisson => {
                    let count = stream.poisson(spec.intensity * h);
                    for _ in 0..count {
                        let pos = stream.uniform();
                        let size = spec.jump_scale * stream.normal();
                        inc += size;
                        jumps.as_mut().unwrap().push(JumpRecord {
                            cell: i,
                            time: grid.time(i) + pos * h,
                            component: k,
                            size,
                        });
                    }
                }
                LevyKind::SymmetricAlphaStable => {
                    inc += spec.jump_scale
                        * math::powf(h, 1.0 / spec.alpha)
                        * stream.symmetric_stable(spec.alpha);
                }
            }
            values[i * d + k] = inc;
        }
    }
    IncrementSequence {
        grid: grid.clone(),
        dimension: d,
        values,
        jumps,
    }
}

/// Sample independent increments over the cells of `grid`.
///
/// Identical `(spec, grid, seed)` reproduce identical output bit for bit.
pub fn sample_increments(spec: &LevySpec, grid: &TimeGrid, seed: u64) -> Result<IncrementSequence> {
    spec.validate()?;
    let mut stream = Stream::derive(seed, stream_tag(PURPOSE_PATH, 0, 0));
    Ok(draw_increments(spec, grid, &mut stream))
}

/// A two-sided càdlàg sample path on a grid.
///
/// `value(i)` is the right limit at node `i`, measured relative to the anchor
/// node where the path is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LevyPath {
    pub spec: LevySpec,
    grid: TimeGrid,
    /// Cumulative raw values (node-major, `dimension` entries per node).
    raw: Vec<f64>,
    /// Anchor node index; exposed values are `raw[i] - raw[anchor]`.
    anchor: usize,
    pub jumps: Option<Vec<JumpRecord>>,
    pub seed: u64,
}

impl LevyPath {
    /// Build a two-sided path anchored at zero.
    ///
    /// Increments for `t > 0` come from the forward substream of `seed`,
    /// increments over the negative cells from an independent backward
    /// substream, mirrored so every cell increment has the one-sided law.
    pub fn sample_two_sided(spec: &LevySpec, grid: &TimeGrid, seed: u64) -> Result<LevyPath> {
        Self::sample_two_sided_tagged(spec, grid, seed, 0)
    }

    /// Two-sided path on the substream pair of `component`; the noises of a
    /// multi-component system are independent copies indexed this way.
    pub fn sample_two_sided_tagged(
        spec: &LevySpec,
        grid: &TimeGrid,
        seed: u64,
        component: usize,
    ) -> Result<LevyPath> {
        spec.validate()?;
        if !grid.straddles_zero() {
            return Err(SimError::Grid(format!(
                "two-sided grid must straddle 0, got [{}, {}]",
                grid.t_start(),
                grid.t_end()
            )));
        }
        let zero = grid.index_of_zero().expect("straddling grid has a zero node");
        let d = spec.dimension;

        let fwd_grid = grid.subgrid(zero, grid.n_cells())?;
        // Backward increments are drawn on the positive mirror grid
        // [0, |t_start|], right-to-left from the anchor, so the cells adjacent
        // to zero do not depend on how far left the grid goes.
        let bwd_grid = TimeGrid::from_lattice(0, zero, grid.step())?;
        let mut fwd_stream = Stream::derive(seed, stream_tag(PURPOSE_PATH, component, 0));
        let mut bwd_stream = Stream::derive(seed, stream_tag(PURPOSE_PATH, component, 1));
        let fwd = draw_increments(spec, &fwd_grid, &mut fwd_stream);
        let bwd = draw_increments(spec, &bwd_grid, &mut bwd_stream);

        let mut raw = vec![0.0; grid.n_nodes() * d];
        for i in 0..fwd_grid.n_cells() {
            let node = zero + i;
            for k in 0..d {
                raw[(node + 1) * d + k] = raw[node * d + k] + fwd.values[i * d + k];
            }
        }
        for j in 0..bwd_grid.n_cells() {
            // cell index (counted from zero leftwards) j covers nodes
            // [zero - j - 1, zero - j]
            let node = zero - j;
            for k in 0..d {
                raw[(node - 1) * d + k] = raw[node * d + k] - bwd.values[j * d + k];
            }
        }

        let mut jumps = match (fwd.jumps, bwd.jumps) {
            (Some(f), Some(b)) => {
                let mut all: Vec<JumpRecord> = Vec::with_capacity(f.len() + b.len());
                for rec in b {
                    // backward cell j (drawn on [0, |t_start|]) mirrors to the
                    // real cell [-(j+1)h, -jh]
                    let cell = zero - rec.cell - 1;
                    all.push(JumpRecord {
                        cell,
                        time: -rec.time,
                        component: rec.component,
                        size: rec.size,
                    });
                }
                for rec in f {
                    all.push(JumpRecord {
                        cell: rec.cell + zero,
                        time: rec.time,
                        component: rec.component,
                        size: rec.size,
                    });
                }
                Some(all)
            }
            _ => None,
        };
        if let Some(list) = jumps.as_mut() {
            list.sort_by(|a, b| a.time.partial_cmp(&b.time).unwrap());
        }

        Ok(LevyPath {
            spec: spec.clone(),
            grid: grid.clone(),
            raw,
            anchor: zero,
            jumps,
            seed,
        })
    }

    /// Assemble a path from explicit increments (synthetic paths for
    /// diagnostics and tests). The anchor is placed at zero when the grid
    /// straddles it, otherwise at the first node.
    pub fn from_increments(spec: &LevySpec, inc: &IncrementSequence, seed: u64) -> Result<LevyPath> {
        spec.validate()?;
        let d = spec.dimension;
        if inc.dimension != d {
            return Err(SimError::Shape(format!(
                "increments have dimension {}, spec has {}",
                inc.dimension, d
            )));
        }
        let grid = inc.grid.clone();
        let mut raw = vec![0.0; grid.n_nodes() * d];
        for i in 0..grid.n_cells() {
            for k in 0..d {
                raw[(i + 1) * d + k] = raw[i * d + k] + inc.values[i * d + k];
            }
        }
        let anchor = grid.index_of_zero().unwrap_or(0);
        Ok(LevyPath {
            spec: spec.clone(),
            grid,
            raw,
            anchor,
            jumps: inc.jumps.clone(),
            seed,
        })
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    /// Path value at node `i`, component `k` (relative to the anchor).
    #[inline]
    pub fn value(&self, i: usize, k: usize) -> f64 {
        let d = self.spec.dimension;
        self.raw[i * d + k] - self.raw[self.anchor * d + k]
    }

    /// Copy the value vector at node `i` into `out`.
    pub fn value_into(&self, i: usize, out: &mut [f64]) {
        for k in 0..self.spec.dimension {
            out[k] = self.value(i, k);
        }
    }

    /// Increment of component `k` over cell `i`; anchor-independent.
    #[inline]
    pub fn increment(&self, i: usize, k: usize) -> f64 {
        let d = self.spec.dimension;
        self.raw[(i + 1) * d + k] - self.raw[i * d + k]
    }

    /// Shift map: returns the path `s -> self(t + s) - self(t)` on the
    /// translated grid. `t` must be a node of the stored grid; composition of
    /// shifts is exact.
    pub fn shift(&self, t: f64) -> Result<LevyPath> {
        let idx = self.grid.index_of(t).map_err(|_| {
            SimError::OutOfSupport(format!(
                "shift time {t} not representable on the stored grid [{}, {}] step {}",
                self.grid.t_start(),
                self.grid.t_end(),
                self.grid.step()
            ))
        })?;
        let jumps = self.jumps.as_ref().map(|list| {
            list.iter()
                .map(|rec| JumpRecord {
                    cell: rec.cell,
                    time: rec.time - t,
                    component: rec.component,
                    size: rec.size,
                })
                .collect()
        });
        // new node i sits at old_time(i) - t, i.e. lattice index i - idx
        let lattice_shift = self.grid.k_start() + idx as i64;
        Ok(LevyPath {
            spec: self.spec.clone(),
            grid: self.grid.translate(lattice_shift),
            raw: self.raw.clone(),
            anchor: idx,
            jumps,
            seed: self.seed,
        })
    }

    /// Keep every `factor`-th node: the restriction of the same sample path
    /// to the coarser grid (values are subsampled, never resampled).
    pub fn restrict(&self, factor: usize) -> Result<LevyPath> {
        let coarse = self.grid.coarsen(factor)?;
        if self.anchor % factor != 0 {
            return Err(SimError::Grid(format!(
                "anchor node {} not on the factor-{factor} sublattice",
                self.anchor
            )));
        }
        let d = self.spec.dimension;
        let mut raw = Vec::with_capacity(coarse.n_nodes() * d);
        for i in 0..coarse.n_nodes() {
            raw.extend_from_slice(&self.raw[i * factor * d..(i * factor * d) + d]);
        }
        let jumps = self.jumps.as_ref().map(|list| {
            list.iter()
                .map(|rec| JumpRecord {
                    cell: rec.cell / factor,
                    ..*rec
                })
                .collect()
        });
        Ok(LevyPath {
            spec: self.spec.clone(),
            grid: coarse,
            raw,
            anchor: self.anchor / factor,
            jumps,
            seed: self.seed,
        })
    }

    /// Empirical linear-growth envelope `max_i |L(t_i)| / (1 + |t_i|)`.
    pub fn growth_envelope(&self) -> f64 {
        let d = self.spec.dimension;
        let mut env: f64 = 0.0;
        let mut buf = vec![0.0; d];
        for i in 0..self.grid.n_nodes() {
            self.value_into(i, &mut buf);
            env = env.max(math::norm(&buf) / (1.0 + math::abs(self.grid.time(i))));
        }
        env
    }

    /// Grid cells containing at least one recorded jump.
    pub fn jump_cells(&self) -> Vec<usize> {
        let mut cells: Vec<usize> = self
            .jumps
            .iter()
            .flatten()
            .map(|rec| rec.cell)
            .collect();
        cells.sort_unstable();
        cells.dedup();
        cells
    }
}

/// Lower limit of an exponentially weighted integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowerLimit {
    Finite(f64),
    NegInfinity,
}

/// Value of `∫ e^{-delta (t - s)} dL_s` with a truncation-error bound for the
/// improper case.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpIntegral {
    pub value: Vec<f64>,
    /// Bound on the tail cut off at the path's left support (zero for finite
    /// lower limits).
    pub truncation_bound: f64,
}

/// Pathwise integral `∫_lower^t e^{-delta (t - s)} dL_s` as a left-point
/// Riemann-Stieltjes sum over the stored increments.
///
/// With `lower = -∞` the sum is truncated at the path's left support `T_left`
/// and the returned bound dominates the discarded tail under the path's
/// empirical linear-growth envelope:
/// `e^{-delta (t - T_left)} * K * (2 (1 + |T_left|) + 1 / delta)`.
pub fn exp_weighted_integral(
    path: &LevyPath,
    delta: f64,
    t: f64,
    lower: LowerLimit,
) -> Result<ExpIntegral> {
    if !(delta > 0.0) {
        return Err(SimError::InvalidParameter(format!(
            "delta must be positive, got {delta}"
        )));
    }
    let grid = path.grid();
    let i_t = grid.index_of(t)?;
    let (i_lo, truncation_bound) = match lower {
        LowerLimit::Finite(lo) => {
            if !(lo < t) {
                return Err(SimError::InvalidParameter(format!(
                    "lower limit {lo} must be below t = {t}"
                )));
            }
            (grid.index_of(lo)?, 0.0)
        }
        LowerLimit::NegInfinity => {
            let t_left = grid.t_start();
            let envelope = path.growth_envelope();
            let bound = math::exp(-delta * (t - t_left))
                * envelope
                * (2.0 * (1.0 + math::abs(t_left)) + 1.0 / delta);
            (0, bound)
        }
    };
    let d = path.dimension();
    let mut value = vec![0.0; d];
    for i in i_lo..i_t {
        let w = math::exp(-delta * (t - grid.time(i)));
        for k in 0..d {
            value[k] += w * path.increment(i, k);
        }
    }
    Ok(ExpIntegral {
        value,
        truncation_bound,
    })
}

/// Strong-law ratio `L(T) / T`, compared against `drift_gamma` by the
/// verification suite. Requires `|T| >= 1` and `T` on the grid.
pub fn strong_law_ratio(path: &LevyPath, t: f64) -> Result<Vec<f64>> {
    if t == 0.0 {
        return Err(SimError::InvalidParameter(
            "strong-law ratio undefined at T = 0".into(),
        ));
    }
    if math::abs(t) < 1.0 {
        return Err(SimError::InvalidParameter(format!(
            "|T| must be >= 1, got {t}"
        )));
    }
    let i = path.grid().index_of(t)?;
    Ok((0..path.dimension())
        .map(|k| path.value(i, k) / t)
        .collect())
}

//! Analytic engine for the two-photon coincidence rate: the spectral
//! correlation kernel, grid averaging, ideal fringes, trim/phase sweeps,
//! visibility, washout maps and the Bell-violation proxy.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interferometer::{InterferometerError, MachZehnder};
use crate::spectral::{coherence_length, DetuningGrid, LockMode, PairSourceModel};
use crate::SPEED_OF_LIGHT;

/// Fringe visibility above this bound violates the two-photon Bell proxy.
pub const BELL_VISIBILITY_BOUND: f64 = FRAC_1_SQRT_2;

/// Nodes of the fixed quadrature rule used for pump-jitter averaging.
const PUMP_GRID_POINTS: usize = 33;

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("symmetric-locked averaging requires a sum-locked source")]
    SymmetricNeedsSumLock,
    #[error("nonsymmetric worst-case averaging requires an unlocked source")]
    NonsymmetricNeedsUnlocked,
    #[error(transparent)]
    Geometry(#[from] InterferometerError),
    #[error("sweep needs at least 2 steps, got {0}")]
    TooFewSteps(usize),
    #[error("sweep range must be finite with start < stop, got [{start}, {stop}]")]
    InvalidRange { start: f64, stop: f64 },
    #[error("series must not be empty")]
    EmptySeries,
    #[error("series lengths differ: {abscissa} abscissa values vs {values} g2 values")]
    LengthMismatch { abscissa: usize, values: usize },
    #[error("abscissa must be strictly increasing")]
    NonMonotoneAbscissa,
    #[error("g2 value {0} outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("visibility undefined: fringe maximum + minimum = 0")]
    UndefinedVisibility,
    #[error("washout map needs at least one bandwidth row")]
    EmptyBandwidths,
    #[error("washout bandwidths must be finite, positive and strictly increasing")]
    InvalidBandwidths,
}

/// How the detuning of the grid enters the pair phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningMode {
    /// Anti-correlated detunings: the detuning couples to ΔL₁ - ΔL₂ and
    /// cancels when the interferometers match.
    SymmetricLocked,
    /// Same-sign detunings, the washout worst case: the detuning couples to
    /// ΔL₁ + ΔL₂.
    NonsymmetricWorstCase,
}

/// Which control a sweep moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Trim of interferometer B only; abscissa in meters.
    TrimB,
    /// Both trims together; abscissa in meters.
    TrimBoth,
    /// Phase applied to interferometer B as the equivalent trim
    /// φ·c/(2π f₀); abscissa in radians.
    Phase,
}

/// Validated sweep description: `steps` evenly spaced points over
/// [start, stop].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSpec {
    pub kind: SweepKind,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl SweepSpec {
    pub fn new(kind: SweepKind, start: f64, stop: f64, steps: usize) -> Result<Self, CorrelationError> {
        if steps < 2 {
            return Err(CorrelationError::TooFewSteps(steps));
        }
        if !start.is_finite() || !stop.is_finite() || !(start < stop) {
            return Err(CorrelationError::InvalidRange { start, stop });
        }
        Ok(SweepSpec {
            kind,
            start,
            stop,
            steps,
        })
    }

    /// The i-th sweep point; the endpoints are exact.
    pub fn point(&self, i: usize) -> f64 {
        if i == self.steps - 1 {
            self.stop
        } else {
            self.start + (self.stop - self.start) * i as f64 / (self.steps - 1) as f64
        }
    }
}

/// Everything the analytic engine needs for one experiment: the source, the
/// two interferometers, the detuning coupling mode and the averaging grid.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationConfig {
    pub source: PairSourceModel,
    pub mzi_a: MachZehnder,
    pub mzi_b: MachZehnder,
    pub detuning_mode: DetuningMode,
    pub grid: DetuningGrid,
}

impl CorrelationConfig {
    /// Builds a config, rejecting a detuning mode inconsistent with the
    /// source lock: symmetric averaging presumes anti-correlated (sum-locked)
    /// pairs and nonsymmetric averaging presumes unlocked ones.
    pub fn new(
        source: PairSourceModel,
        mzi_a: MachZehnder,
        mzi_b: MachZehnder,
        detuning_mode: DetuningMode,
        grid: DetuningGrid,
    ) -> Result<Self, CorrelationError> {
        match (detuning_mode, source.lock) {
            (DetuningMode::SymmetricLocked, LockMode::Unlocked) => {
                return Err(CorrelationError::SymmetricNeedsSumLock)
            }
            (DetuningMode::NonsymmetricWorstCase, LockMode::SumLocked) => {
                return Err(CorrelationError::NonsymmetricNeedsUnlocked)
            }
            _ => {}
        }
        Ok(CorrelationConfig {
            source,
            mzi_a,
            mzi_b,
            detuning_mode,
            grid,
        })
    }

    /// Coincidence post-selection is meaningful only while the coherence
    /// length exceeds the imbalance mismatch; false flags the series rather
    /// than failing, so scans may cross into the washed-out region.
    pub fn coincidence_condition_ok(&self) -> bool {
        let lc = SPEED_OF_LIGHT / self.source.bandwidth_hz;
        lc > (self.mzi_a.delta_l() - self.mzi_b.delta_l()).abs()
    }
}

/// Coincidence rate for one detuning sample:
/// ½{1 + cos[(π/c) f₀ (ΔL₁+ΔL₂) + (2π/c) δf X + (2π/c) ζ (ΔL₁-ΔL₂)]}
/// with X = ΔL₁-ΔL₂ (symmetric lock) or ΔL₁+ΔL₂ (nonsymmetric worst case).
pub fn g2_kernel(
    f0_hz: f64,
    delta_f_hz: f64,
    dl1_m: f64,
    dl2_m: f64,
    mode: DetuningMode,
    zeta_hz: f64,
) -> f64 {
    assert!(
        f0_hz.is_finite() && f0_hz > 0.0,
        "g2_kernel requires a positive sum frequency, got {f0_hz}"
    );
    let sum = dl1_m + dl2_m;
    let diff = dl1_m - dl2_m;
    let x = match mode {
        DetuningMode::SymmetricLocked => diff,
        DetuningMode::NonsymmetricWorstCase => sum,
    };
    let phase = (PI * f0_hz) * sum / SPEED_OF_LIGHT
        + (TAU * delta_f_hz) * x / SPEED_OF_LIGHT
        + (TAU * zeta_hz) * diff / SPEED_OF_LIGHT;
    0.5 * (1.0 + phase.cos())
}

/// Ideal coincidence fringe ½[1 + cos(2π f₀ ΔL / c)] in the mean path
/// difference ΔL = (ΔL₁ + ΔL₂)/2.
pub fn g2_ideal(f0_hz: f64, delta_l_m: f64) -> f64 {
    assert!(
        f0_hz.is_finite() && f0_hz > 0.0,
        "g2_ideal requires a positive sum frequency, got {f0_hz}"
    );
    let phase = (TAU * f0_hz) * delta_l_m / SPEED_OF_LIGHT;
    0.5 * (1.0 + phase.cos())
}

/// Quadrature nodes (offset from f₀, weight) for pump-jitter averaging:
/// a single exact node at zero when the linewidth is zero, otherwise a
/// trapezoid rule over ±4σ weighted by the Gaussian density.
fn pump_grid(linewidth_hz: f64) -> Vec<(f64, f64)> {
    if linewidth_hz == 0.0 {
        return vec![(0.0, 1.0)];
    }
    let half = (PUMP_GRID_POINTS / 2) as isize;
    let mut nodes = Vec::with_capacity(PUMP_GRID_POINTS);
    for i in 0..PUMP_GRID_POINTS as isize {
        let k = i - half;
        let x = linewidth_hz * crate::PUMP_JITTER_SIGMA_SPAN * (k as f64 / half as f64);
        let endpoint = i == 0 || i == PUMP_GRID_POINTS as isize - 1;
        let coeff = if endpoint { 0.5 } else { 1.0 };
        let t = x / linewidth_hz;
        nodes.push((x, coeff * (-0.5 * t * t).exp()));
    }
    let sum: f64 = nodes.iter().map(|&(_, w)| w).sum();
    for n in &mut nodes {
        n.1 /= sum;
    }
    nodes
}

/// Kernel averaged over pump jitter at a fixed detuning sample.
fn kernel_over_pump(
    pump: &[(f64, f64)],
    f0_hz: f64,
    delta_f_hz: f64,
    dl1_m: f64,
    dl2_m: f64,
    mode: DetuningMode,
    zeta_hz: f64,
) -> f64 {
    let mut acc = 0.0;
    for &(jitter, v) in pump {
        acc += v * g2_kernel(f0_hz + jitter, delta_f_hz, dl1_m, dl2_m, mode, zeta_hz);
    }
    acc
}

/// Coincidence rate averaged over the detuning grid (and pump jitter when
/// the source declares a nonzero pump linewidth).
pub fn g2_averaged(cfg: &CorrelationConfig) -> f64 {
    let dl1 = cfg.mzi_a.delta_l();
    let dl2 = cfg.mzi_b.delta_l();
    let zeta = cfg.source.degeneracy.zeta_hz();
    let pump = pump_grid(cfg.source.pump_linewidth_hz);
    let mut acc = 0.0;
    for &(df, w) in cfg.grid.samples() {
        acc += w * kernel_over_pump(&pump, cfg.source.f0_hz, df, dl1, dl2, cfg.detuning_mode, zeta);
    }
    // Weight normalization can overshoot [0, 1] by a few ulps; the physical
    // range is exact.
    acc.clamp(0.0, 1.0)
}

/// One sweep's worth of coincidence values.
#[derive(Debug, Clone, PartialEq)]
pub struct FringeSeries {
    pub abscissa: Vec<f64>,
    pub g2: Vec<f64>,
    pub sweep_kind: SweepKind,
    /// False when any sweep point leaves the coincidence-valid region
    /// l_c > |ΔL₁ - ΔL₂|.
    pub coincidence_ok: bool,
}

impl FringeSeries {
    pub fn new(
        abscissa: Vec<f64>,
        g2: Vec<f64>,
        sweep_kind: SweepKind,
        coincidence_ok: bool,
    ) -> Result<Self, CorrelationError> {
        if abscissa.is_empty() {
            return Err(CorrelationError::EmptySeries);
        }
        if abscissa.len() != g2.len() {
            return Err(CorrelationError::LengthMismatch {
                abscissa: abscissa.len(),
                values: g2.len(),
            });
        }
        if abscissa.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(CorrelationError::NonMonotoneAbscissa);
        }
        if let Some(&bad) = g2.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(CorrelationError::ValueOutOfRange(bad));
        }
        Ok(FringeSeries {
            abscissa,
            g2,
            sweep_kind,
            coincidence_ok,
        })
    }

    pub fn len(&self) -> usize {
        self.abscissa.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Interferometers after applying one sweep point.
fn apply_sweep_point(
    cfg: &CorrelationConfig,
    kind: SweepKind,
    value: f64,
) -> Result<(MachZehnder, MachZehnder), CorrelationError> {
    Ok(match kind {
        SweepKind::TrimB => (cfg.mzi_a, cfg.mzi_b.with_trim(value)?),
        SweepKind::TrimBoth => (cfg.mzi_a.with_trim(value)?, cfg.mzi_b.with_trim(value)?),
        SweepKind::Phase => {
            let trim = value * SPEED_OF_LIGHT / (TAU * cfg.source.f0_hz);
            (cfg.mzi_a, cfg.mzi_b.with_trim(trim)?)
        }
    })
}

/// Evaluates g2_averaged along a sweep. Points are independent and evaluated
/// in parallel; the output ordering follows the abscissa deterministically.
pub fn fringe_scan(cfg: &CorrelationConfig, sweep: &SweepSpec) -> Result<FringeSeries, CorrelationError> {
    let abscissa: Vec<f64> = (0..sweep.steps).map(|i| sweep.point(i)).collect();
    let lc = coherence_length(cfg.source.bandwidth_hz).expect("bandwidth validated at construction");
    let evaluated: Result<Vec<(f64, bool)>, CorrelationError> = abscissa
        .par_iter()
        .map(|&t| {
            let (mzi_a, mzi_b) = apply_sweep_point(cfg, sweep.kind, t)?;
            let point_cfg = CorrelationConfig {
                mzi_a,
                mzi_b,
                ..cfg.clone()
            };
            let ok = lc > (mzi_a.delta_l() - mzi_b.delta_l()).abs();
            Ok((g2_averaged(&point_cfg), ok))
        })
        .collect();
    let evaluated = evaluated?;
    let coincidence_ok = evaluated.iter().all(|&(_, ok)| ok);
    let g2 = evaluated.into_iter().map(|(v, _)| v).collect();
    FringeSeries::new(abscissa, g2, sweep.kind, coincidence_ok)
}

/// Fringe visibility (max - min)/(max + min) of a series.
pub fn visibility(series: &FringeSeries) -> Result<f64, CorrelationError> {
    let max = series.g2.iter().cloned().fold(f64::MIN, f64::max);
    let min = series.g2.iter().cloned().fold(f64::MAX, f64::min);
    if max + min == 0.0 {
        return Err(CorrelationError::UndefinedVisibility);
    }
    Ok((max - min) / (max + min))
}

/// Bell proxy: a two-photon fringe visibility strictly above 1/√2.
pub fn bell_violation(visibility: f64) -> bool {
    assert!(
        (0.0..=1.0).contains(&visibility),
        "visibility must lie in [0, 1], got {visibility}"
    );
    visibility > BELL_VISIBILITY_BOUND
}

/// One bandwidth row of a washout map.
#[derive(Debug, Clone, PartialEq)]
pub struct WashoutRow {
    pub bandwidth_hz: f64,
    /// (detuning, g2) pairs over the row's own support.
    pub samples: Vec<(f64, f64)>,
    /// Weighted sum of the row, i.e. g2_averaged at this bandwidth.
    pub row_sum: f64,
}

/// Coincidence rate resolved in (bandwidth, detuning), with per-row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct WashoutMap {
    pub rows: Vec<WashoutRow>,
}

impl WashoutMap {
    pub fn row_sums(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.row_sum).collect()
    }
}

/// Evaluates the kernel over a (bandwidth, detuning) plane. Each row reuses
/// the axis weights with its positions rescaled onto ±bandwidth, so a row's
/// weighted sum is exactly the grid average at that bandwidth.
pub fn washout_map(
    template: &CorrelationConfig,
    bandwidths_hz: &[f64],
    detuning_axis: &DetuningGrid,
) -> Result<WashoutMap, CorrelationError> {
    if bandwidths_hz.is_empty() {
        return Err(CorrelationError::EmptyBandwidths);
    }
    let ordered = bandwidths_hz
        .windows(2)
        .all(|w| w[0] < w[1]);
    if !ordered || bandwidths_hz.iter().any(|b| !b.is_finite() || *b <= 0.0) {
        return Err(CorrelationError::InvalidBandwidths);
    }

    let dl1 = template.mzi_a.delta_l();
    let dl2 = template.mzi_b.delta_l();
    let zeta = template.source.degeneracy.zeta_hz();
    let pump = pump_grid(template.source.pump_linewidth_hz);
    let span = detuning_axis.span_hz();

    let rows = bandwidths_hz
        .iter()
        .map(|&bw| {
            let scale = if span > 0.0 { bw / span } else { 0.0 };
            let mut samples = Vec::with_capacity(detuning_axis.len());
            let mut row_sum = 0.0;
            for &(x, w) in detuning_axis.samples() {
                let df = x * scale;
                let g2 = kernel_over_pump(
                    &pump,
                    template.source.f0_hz,
                    df,
                    dl1,
                    dl2,
                    template.detuning_mode,
                    zeta,
                );
                samples.push((df, g2));
                row_sum += w * g2;
            }
            WashoutRow {
                bandwidth_hz: bw,
                samples,
                row_sum: row_sum.clamp(0.0, 1.0),
            }
        })
        .collect();
    Ok(WashoutMap { rows })
}

//! Photon-pair source model: center frequency, detuning bandwidth, sum-lock
//! behaviour and the detuning densities used for spectral averaging.
//!
//! Detunings are measured from half the pair sum frequency. A grid or a
//! sampler draws the symmetric detuning component; a fixed offset `zeta`
//! moves the two photon centers apart without changing that component.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::SPEED_OF_LIGHT;

/// Pump linewidth above this fraction of the pair bandwidth strains the
/// narrowband-pump assumption and is reported as a warning.
pub const PUMP_LINEWIDTH_WARN_RATIO: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("center frequency must be finite and > 0, got {0}")]
    InvalidCenterFrequency(f64),
    #[error("bandwidth must be finite and > 0, got {0}")]
    InvalidBandwidth(f64),
    #[error("pump linewidth must be finite and >= 0, got {0}")]
    InvalidPumpLinewidth(f64),
    #[error("center offset must be finite and >= 0, got {0}")]
    InvalidCenterOffset(f64),
    #[error("detuning {detuning_hz} Hz outside the source support ±{bandwidth_hz} Hz")]
    DetuningOutOfSupport { detuning_hz: f64, bandwidth_hz: f64 },
    #[error("grid size must be odd and >= 1, got {0}")]
    InvalidGridSize(usize),
    #[error("grid must contain at least one sample")]
    EmptyGrid,
    #[error("grid weights sum to {0}, expected 1 within 1e-12")]
    UnnormalizedGrid(f64),
}

/// Shape of the detuning density over the symmetric support.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityShape {
    /// Flat density over the full support.
    Uniform,
    /// Zero-mean Gaussian with standard deviation of half the support
    /// half-width, truncated at the support edges and renormalized.
    Gaussian,
}

/// Whether the two photon frequencies are locked to a fixed sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LockMode {
    /// `f1 + f2` equals the pair sum frequency exactly; detunings are
    /// anti-correlated.
    SumLocked,
    /// Detunings of the two photons carry the same sign, the worst case for
    /// fringe washout.
    Unlocked,
}

/// Spectral degeneracy of the pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Degeneracy {
    /// Both photons centered at half the sum frequency.
    Degenerate,
    /// Photon centers offset by ±`zeta_hz` from half the sum frequency.
    Nondegenerate { zeta_hz: f64 },
}

impl Degeneracy {
    /// Center offset in Hz; zero in the degenerate case.
    pub fn zeta_hz(self) -> f64 {
        match self {
            Degeneracy::Degenerate => 0.0,
            Degeneracy::Nondegenerate { zeta_hz } => zeta_hz,
        }
    }
}

/// Sign branch selecting which photon takes the positive detuning.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetuningSign {
    Plus,
    Minus,
}

impl DetuningSign {
    fn factor(self) -> f64 {
        match self {
            DetuningSign::Plus => 1.0,
            DetuningSign::Minus => -1.0,
        }
    }
}

/// Photon-pair source: sum frequency `f0_hz`, detuning half-width
/// `bandwidth_hz`, residual pump linewidth, degeneracy, lock mode and
/// detuning density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSourceModel {
    pub f0_hz: f64,
    pub bandwidth_hz: f64,
    pub pump_linewidth_hz: f64,
    pub degeneracy: Degeneracy,
    pub lock: LockMode,
    pub density: DensityShape,
}

impl PairSourceModel {
    pub fn new(
        f0_hz: f64,
        bandwidth_hz: f64,
        pump_linewidth_hz: f64,
        degeneracy: Degeneracy,
        lock: LockMode,
        density: DensityShape,
    ) -> Result<Self, SpectralError> {
        if !f0_hz.is_finite() || f0_hz <= 0.0 {
            return Err(SpectralError::InvalidCenterFrequency(f0_hz));
        }
        if !bandwidth_hz.is_finite() || bandwidth_hz <= 0.0 {
            return Err(SpectralError::InvalidBandwidth(bandwidth_hz));
        }
        if !pump_linewidth_hz.is_finite() || pump_linewidth_hz < 0.0 {
            return Err(SpectralError::InvalidPumpLinewidth(pump_linewidth_hz));
        }
        let zeta = degeneracy.zeta_hz();
        if !zeta.is_finite() || zeta < 0.0 {
            return Err(SpectralError::InvalidCenterOffset(zeta));
        }
        Ok(PairSourceModel {
            f0_hz,
            bandwidth_hz,
            pump_linewidth_hz,
            degeneracy,
            lock,
            density,
        })
    }

    /// Copy with a shifted sum frequency; used to apply pump jitter.
    pub fn with_f0(mut self, f0_hz: f64) -> Self {
        self.f0_hz = f0_hz;
        self
    }

    /// Non-fatal model concerns, currently the narrowband-pump check.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ratio = self.pump_linewidth_hz / self.bandwidth_hz;
        if ratio >= PUMP_LINEWIDTH_WARN_RATIO {
            out.push(format!(
                "pump linewidth is {ratio:.3}x the pair bandwidth; \
                 the narrowband-pump assumption is strained"
            ));
        }
        out
    }

    /// Photon frequencies for one pair at the given symmetric detuning.
    ///
    /// The detuning is the quantity produced by [`detuning_grid`] and
    /// [`sample_detuning`]; a nondegenerate source adds its fixed center
    /// offset on top of it. Sum-locked pairs satisfy `f1 + f2 == f0`
    /// exactly; unlocked pairs carry the same signed detuning on both
    /// photons.
    pub fn pair_frequencies(
        &self,
        detuning_hz: f64,
        sign: DetuningSign,
    ) -> Result<(f64, f64), SpectralError> {
        if !(detuning_hz.abs() <= self.bandwidth_hz) {
            return Err(SpectralError::DetuningOutOfSupport {
                detuning_hz,
                bandwidth_hz: self.bandwidth_hz,
            });
        }
        let zeta = self.degeneracy.zeta_hz();
        let signed = sign.factor() * detuning_hz;
        let f1 = 0.5 * self.f0_hz + zeta + signed;
        let f2 = match self.lock {
            LockMode::SumLocked => self.f0_hz - f1,
            LockMode::Unlocked => 0.5 * self.f0_hz - zeta + signed,
        };
        Ok((f1, f2))
    }
}

/// Coherence length c/Δf in meters for a bandwidth in Hz.
pub fn coherence_length(bandwidth_hz: f64) -> Result<f64, SpectralError> {
    if !bandwidth_hz.is_finite() || bandwidth_hz <= 0.0 {
        return Err(SpectralError::InvalidBandwidth(bandwidth_hz));
    }
    Ok(SPEED_OF_LIGHT / bandwidth_hz)
}

/// Coherence time 1/Δf in seconds for a bandwidth in Hz.
pub fn coherence_time(bandwidth_hz: f64) -> Result<f64, SpectralError> {
    if !bandwidth_hz.is_finite() || bandwidth_hz <= 0.0 {
        return Err(SpectralError::InvalidBandwidth(bandwidth_hz));
    }
    Ok(1.0 / bandwidth_hz)
}

/// Quadrature grid over the detuning support: sample positions with
/// normalized non-negative weights, symmetric about zero.
#[derive(Debug, Clone, PartialEq)]
pub struct DetuningGrid {
    samples: Vec<(f64, f64)>,
}

impl DetuningGrid {
    /// Wraps explicit (detuning, weight) samples, checking normalization.
    pub fn from_samples(samples: Vec<(f64, f64)>) -> Result<Self, SpectralError> {
        if samples.is_empty() {
            return Err(SpectralError::EmptyGrid);
        }
        let sum: f64 = samples.iter().map(|&(_, w)| w).sum();
        if !((sum - 1.0).abs() <= 1e-12) {
            return Err(SpectralError::UnnormalizedGrid(sum));
        }
        Ok(DetuningGrid { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Largest absolute sample position; zero for the single-point grid.
    pub fn span_hz(&self) -> f64 {
        self.samples
            .iter()
            .map(|&(x, _)| x.abs())
            .fold(0.0, f64::max)
    }

    /// Grid with every sample position negated, weights unchanged.
    pub fn negated(&self) -> Self {
        DetuningGrid {
            samples: self.samples.iter().map(|&(x, w)| (-x, w)).collect(),
        }
    }
}

/// Builds the quadrature grid for a source: `n_points` odd so zero detuning
/// is always sampled, positions spanning ±bandwidth, trapezoid-style weights
/// shaped by the source density and normalized to unit sum.
pub fn detuning_grid(
    source: &PairSourceModel,
    n_points: usize,
) -> Result<DetuningGrid, SpectralError> {
    if n_points == 0 || n_points % 2 == 0 {
        return Err(SpectralError::InvalidGridSize(n_points));
    }
    let half = (n_points / 2) as isize;
    let mut samples = Vec::with_capacity(n_points);
    for i in 0..n_points as isize {
        let k = i - half;
        // Mirrored construction: position(i) == -position(n-1-i) bitwise.
        let x = if half == 0 {
            0.0
        } else {
            source.bandwidth_hz * (k as f64 / half as f64)
        };
        let endpoint = i == 0 || i == n_points as isize - 1;
        let coeff = if n_points > 1 && endpoint { 0.5 } else { 1.0 };
        let rho = match source.density {
            DensityShape::Uniform => 1.0,
            DensityShape::Gaussian => {
                // sigma = bandwidth/2, so the exponent is -2 (x/bandwidth)^2.
                let t = x / source.bandwidth_hz;
                (-2.0 * t * t).exp()
            }
        };
        samples.push((x, coeff * rho));
    }
    let sum: f64 = samples.iter().map(|&(_, w)| w).sum();
    for s in &mut samples {
        s.1 /= sum;
    }
    DetuningGrid::from_samples(samples)
}

/// Draws one detuning from the source density, in ±bandwidth.
pub fn sample_detuning<R: Rng + ?Sized>(source: &PairSourceModel, rng: &mut R) -> f64 {
    match source.density {
        DensityShape::Uniform => rng.gen_range(-source.bandwidth_hz..=source.bandwidth_hz),
        DensityShape::Gaussian => {
            let normal = Normal::new(0.0, 0.5 * source.bandwidth_hz)
                .expect("bandwidth validated at construction");
            loop {
                let x = normal.sample(rng);
                if x.abs() <= source.bandwidth_hz {
                    return x;
                }
            }
        }
    }
}

//! Unbalanced Mach-Zehnder geometry: arm lengths, trims, propagation phase,
//! short/long wavepacket overlap, single-detector intensity and the regime
//! test separating two-photon fringes from ordinary single-photon
//! interference.

use thiserror::Error;

use crate::spectral::DensityShape;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Error, PartialEq)]
pub enum InterferometerError {
    #[error("arm length must be finite and > 0, got {0}")]
    InvalidArmLength(f64),
    #[error("trim must be finite and >= 0, got {0}")]
    InvalidTrim(f64),
    #[error("long arm plus trim ({long_m}) must not be shorter than the short arm ({short_m})")]
    NegativePathDifference { short_m: f64, long_m: f64 },
    #[error("frequency must be finite and > 0, got {0}")]
    InvalidFrequency(f64),
    #[error("overlap factor must lie in [0, 1], got {0}")]
    InvalidOverlap(f64),
}

/// One unbalanced Mach-Zehnder interferometer. The trim is a fine adjustment
/// added to the long arm, kept separate so sweeps can move it without
/// rebuilding the geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MachZehnder {
    pub short_m: f64,
    pub long_m: f64,
    pub trim_m: f64,
}

impl MachZehnder {
    pub fn new(short_m: f64, long_m: f64, trim_m: f64) -> Result<Self, InterferometerError> {
        if !short_m.is_finite() || short_m <= 0.0 {
            return Err(InterferometerError::InvalidArmLength(short_m));
        }
        if !long_m.is_finite() || long_m <= 0.0 {
            return Err(InterferometerError::InvalidArmLength(long_m));
        }
        if !trim_m.is_finite() || trim_m < 0.0 {
            return Err(InterferometerError::InvalidTrim(trim_m));
        }
        let mzi = MachZehnder {
            short_m,
            long_m,
            trim_m,
        };
        if mzi.delta_l() < 0.0 {
            return Err(InterferometerError::NegativePathDifference {
                short_m,
                long_m: long_m + trim_m,
            });
        }
        Ok(mzi)
    }

    /// Path-length difference (long + trim) - short, in meters.
    pub fn delta_l(&self) -> f64 {
        (self.long_m + self.trim_m) - self.short_m
    }

    /// Effective long-path length including the trim, in meters.
    pub fn long_path_m(&self) -> f64 {
        self.long_m + self.trim_m
    }

    /// Copy with the trim replaced, revalidated.
    pub fn with_trim(&self, trim_m: f64) -> Result<Self, InterferometerError> {
        MachZehnder::new(self.short_m, self.long_m, trim_m)
    }
}

/// Propagation phase 2π f ΔL / c picked up on the long path relative to the
/// short one, in radians. The phase common to both paths cancels in every
/// observable and is not represented.
///
/// Panics if the frequency is not finite and positive; frequency validation
/// belongs to the callers that accept external input.
pub fn arm_phase(mzi: &MachZehnder, f_hz: f64) -> f64 {
    assert!(
        f_hz.is_finite() && f_hz > 0.0,
        "arm_phase requires a positive frequency, got {f_hz}"
    );
    (std::f64::consts::TAU * f_hz) * mzi.delta_l() / SPEED_OF_LIGHT
}

/// Which interference mechanism dominates at a given bandwidth and imbalance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// Imbalance at or beyond the coherence length: single-photon fringes
    /// are washed out and only two-photon correlation fringes survive.
    FransonRegime,
    /// Imbalance within the coherence length: each photon interferes with
    /// itself and the two-photon analysis does not apply.
    SelfInterfering,
}

/// Outcome of the separability test with its dimensionless margin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Separability {
    pub verdict: Regime,
    /// Δf ΔL / c; at least 1 in the two-photon regime.
    pub ratio: f64,
}

/// Tests whether the path imbalance reaches the single-photon coherence
/// length, i.e. Δf ΔL / c >= 1, equivalently ΔL >= l_c.
pub fn separability_check(mzi: &MachZehnder, bandwidth_hz: f64) -> Separability {
    let ratio = bandwidth_hz * mzi.delta_l() / SPEED_OF_LIGHT;
    let verdict = if ratio >= 1.0 {
        Regime::FransonRegime
    } else {
        Regime::SelfInterfering
    };
    Separability { verdict, ratio }
}

/// Mode overlap between the short-path and long-path wavepackets at one
/// detector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OverlapModel {
    /// Path-labelled states treated as fully orthogonal; the default for
    /// every two-photon simulation in this crate.
    Orthogonal,
    /// First-order coherence envelope of the given spectral density, for
    /// exploring the transition region.
    Envelope(DensityShape),
}

/// Overlap factor γ in [0, 1] multiplying the single-photon fringe term.
///
/// `Orthogonal` returns 0 for any input. The envelopes evaluate at
/// x = 2π ΔL / l_c: `Uniform` gives |sin(x)/x|, `Gaussian` gives
/// exp(-(x/2)²/2); both are 1 at zero imbalance.
pub fn path_overlap(model: OverlapModel, delta_l_m: f64, coherence_length_m: f64) -> f64 {
    assert!(
        delta_l_m >= 0.0 && coherence_length_m > 0.0,
        "path_overlap requires delta_l >= 0 and coherence length > 0"
    );
    match model {
        OverlapModel::Orthogonal => 0.0,
        OverlapModel::Envelope(shape) => {
            let x = (std::f64::consts::TAU * delta_l_m) / coherence_length_m;
            match shape {
                DensityShape::Uniform => {
                    if x == 0.0 {
                        1.0
                    } else {
                        (x.sin() / x).abs()
                    }
                }
                DensityShape::Gaussian => {
                    let h = 0.5 * x;
                    (-0.5 * h * h).exp()
                }
            }
        }
    }
}

/// Mean intensity at one output of a single interferometer, normalized so a
/// non-interfering arm reads exactly 1: returns 1 + γ cos(2π f ΔL / c).
///
/// With γ = 0 (orthogonal paths) the result is exactly 1 for every
/// frequency and trim: one photon of a pair shows no fringe on its own.
pub fn single_arm_intensity(
    mzi: &MachZehnder,
    f_hz: f64,
    gamma: f64,
) -> Result<f64, InterferometerError> {
    if !f_hz.is_finite() || f_hz <= 0.0 {
        return Err(InterferometerError::InvalidFrequency(f_hz));
    }
    if !(0.0..=1.0).contains(&gamma) {
        return Err(InterferometerError::InvalidOverlap(gamma));
    }
    Ok(1.0 + gamma * arm_phase(mzi, f_hz).cos())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::coherence_length;
    use approx::assert_relative_eq;

    #[test]
    fn test_constructor_validates_geometry() {
        assert!(MachZehnder::new(1.0, 1.1, 0.0).is_ok());
        assert!(matches!(
            MachZehnder::new(0.0, 1.1, 0.0),
            Err(InterferometerError::InvalidArmLength(_))
        ));
        assert!(matches!(
            MachZehnder::new(1.0, -1.0, 0.0),
            Err(InterferometerError::InvalidArmLength(_))
        ));
        assert!(matches!(
            MachZehnder::new(1.0, 1.1, -1e-6),
            Err(InterferometerError::InvalidTrim(_))
        ));
        assert!(matches!(
            MachZehnder::new(1.1, 1.0, 0.0),
            Err(InterferometerError::NegativePathDifference { .. })
        ));
        assert!(MachZehnder::new(1.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn test_balanced_geometry_is_allowed() {
        let mzi = MachZehnder::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(mzi.delta_l(), 0.0);
    }

    #[test]
    fn test_delta_l_values() {
        let mzi = MachZehnder::new(1.0, 1.1, 0.0).unwrap();
        assert_relative_eq!(mzi.delta_l(), 0.1, max_relative = 1e-12);
        let mzi = MachZehnder::new(1.0, 1.1, 5e-7).unwrap();
        assert_relative_eq!(mzi.delta_l(), 0.1000005, max_relative = 1e-12);
        assert_relative_eq!(mzi.long_path_m(), 1.1000005, max_relative = 1e-15);
    }

    #[test]
    fn test_with_trim_replaces_and_revalidates() {
        let mzi = MachZehnder::new(1.0, 1.1, 2.5e-7).unwrap();
        let trimmed = mzi.with_trim(0.0).unwrap();
        assert_relative_eq!(trimmed.delta_l(), 0.1, max_relative = 1e-12);
        assert_eq!(trimmed.short_m, mzi.short_m);
        assert_eq!(trimmed.long_m, mzi.long_m);
        assert!(mzi.with_trim(-1.0).is_err());
        assert!(mzi.with_trim(f64::INFINITY).is_err());
    }

    #[test]
    fn test_arm_phase_frozen_values() {
        let m = |long: f64| MachZehnder::new(1.0, long, 0.0).unwrap();
        assert_eq!(arm_phase(&m(1.0 + 1e-6), 1.5e14), 3.143767532668895);
        assert_eq!(arm_phase(&m(1.0), 1.5e14), 0.0);
        // One full wavelength of imbalance is one turn of phase.
        let wavelength = SPEED_OF_LIGHT / 1.5e14;
        assert_relative_eq!(
            arm_phase(&m(1.0 + wavelength), 1.5e14),
            std::f64::consts::TAU,
            max_relative = 1e-9
        );
    }

    #[test]
    fn test_arm_phase_linear_in_frequency_and_imbalance() {
        let m1 = MachZehnder::new(1.0, 1.05, 0.0).unwrap();
        let m2 = MachZehnder::new(1.0, 1.1, 0.0).unwrap();
        let base = arm_phase(&m1, 1e14);
        assert_relative_eq!(arm_phase(&m1, 2e14), 2.0 * base, max_relative = 1e-12);
        assert_relative_eq!(arm_phase(&m2, 1e14), 2.0 * base, max_relative = 1e-12);
    }

    #[test]
    #[should_panic(expected = "positive frequency")]
    fn test_arm_phase_rejects_nonpositive_frequency() {
        let mzi = MachZehnder::new(1.0, 1.1, 0.0).unwrap();
        arm_phase(&mzi, 0.0);
    }

    #[test]
    fn test_separability_frozen_ratios() {
        let mzi = MachZehnder::new(1.0, 1.1, 0.0).unwrap();

        let s = separability_check(&mzi, 3e9);
        assert_eq!(s.verdict, Regime::FransonRegime);
        assert_relative_eq!(s.ratio, 1.0006922855944562, max_relative = 1e-12);

        let s = separability_check(&mzi, 1e9);
        assert_eq!(s.verdict, Regime::SelfInterfering);
        assert_relative_eq!(s.ratio, 0.33356409519815206, max_relative = 1e-12);
    }

    #[test]
    fn test_separability_balanced_mzi_never_separates() {
        let mzi = MachZehnder::new(1.0, 1.0, 0.0).unwrap();
        let s = separability_check(&mzi, 1e15);
        assert_eq!(s.verdict, Regime::SelfInterfering);
        assert_eq!(s.ratio, 0.0);
    }

    #[test]
    fn test_separability_equals_coherence_length_comparison() {
        for &(df, long) in &[(3e9, 1.1), (1e9, 1.1), (2e13, 1.2), (1e9, 1.0)] {
            let mzi = MachZehnder::new(1.0, long, 0.0).unwrap();
            let s = separability_check(&mzi, df);
            let by_length = mzi.delta_l() >= coherence_length(df).unwrap();
            assert_eq!(s.verdict == Regime::FransonRegime, by_length);
        }
    }

    #[test]
    fn test_path_overlap_orthogonal_is_zero_always() {
        let lc = coherence_length(1e9).unwrap();
        assert_eq!(path_overlap(OverlapModel::Orthogonal, 0.0, lc), 0.0);
        assert_eq!(path_overlap(OverlapModel::Orthogonal, 0.1, lc), 0.0);
        assert_eq!(path_overlap(OverlapModel::Orthogonal, 1e-15, lc), 0.0);
    }

    #[test]
    fn test_path_overlap_envelopes_frozen_values() {
        let u = OverlapModel::Envelope(DensityShape::Uniform);
        let g = OverlapModel::Envelope(DensityShape::Gaussian);
        let lc1 = coherence_length(1e9).unwrap();
        assert_eq!(path_overlap(u, 0.0, lc1), 1.0);
        assert_eq!(path_overlap(g, 0.0, lc1), 1.0);
        assert_relative_eq!(
            path_overlap(u, 0.2, lc1),
            0.20695034007638982,
            max_relative = 1e-13
        );
        assert_relative_eq!(
            path_overlap(g, 0.2, lc1),
            0.11121576028575725,
            max_relative = 1e-13
        );
        let lc3 = coherence_length(3e9).unwrap();
        assert_relative_eq!(
            path_overlap(u, 0.1, lc3),
            0.0006918044851254676,
            max_relative = 1e-10
        );
    }

    #[test]
    fn test_path_overlap_uniform_first_null_at_half_coherence_length() {
        let lc = coherence_length(1e9).unwrap();
        assert!(path_overlap(OverlapModel::Envelope(DensityShape::Uniform), lc / 2.0, lc) < 1e-15);
    }

    #[test]
    fn test_path_overlap_stays_in_unit_interval() {
        let lc = coherence_length(2e9).unwrap();
        for model in [
            OverlapModel::Orthogonal,
            OverlapModel::Envelope(DensityShape::Uniform),
            OverlapModel::Envelope(DensityShape::Gaussian),
        ] {
            for i in 0..300 {
                let v = path_overlap(model, i as f64 * 0.01, lc);
                assert!((0.0..=1.0).contains(&v), "gamma {v} out of range");
            }
        }
    }

    #[test]
    fn test_single_arm_intensity_orthogonal_overlap_is_flat_one() {
        let mzi = MachZehnder::new(1.0, 1.1, 0.0).unwrap();
        let lc = coherence_length(3e9).unwrap();
        for i in 0..50 {
            let m = mzi.with_trim(i as f64 * 1e-8).unwrap();
            let gamma = path_overlap(OverlapModel::Orthogonal, m.delta_l(), lc);
            assert_eq!(single_arm_intensity(&m, 1.5e14, gamma).unwrap(), 1.0);
        }
    }

    #[test]
    fn test_single_arm_intensity_limits() {
        // Full overlap at one wavelength of imbalance: constructive, near 2.
        let wavelength = SPEED_OF_LIGHT / 1.5e14;
        let m = MachZehnder::new(1.0, 1.0 + wavelength, 0.0).unwrap();
        assert_relative_eq!(
            single_arm_intensity(&m, 1.5e14, 1.0).unwrap(),
            2.0,
            max_relative = 1e-12
        );
        // Half a wavelength: destructive, near 0 (phase pi frozen above).
        let m = MachZehnder::new(1.0, 1.0 + 1e-6, 0.0).unwrap();
        assert_relative_eq!(
            single_arm_intensity(&m, 1.5e14, 1.0).unwrap(),
            2.3650485720949632e-6,
            max_relative = 1e-9
        );
    }

    #[test]
    fn test_single_arm_intensity_rejects_bad_arguments() {
        let mzi = MachZehnder::new(1.0, 1.1, 0.0).unwrap();
        assert!(matches!(
            single_arm_intensity(&mzi, 0.0, 0.0),
            Err(InterferometerError::InvalidFrequency(_))
        ));
        assert!(single_arm_intensity(&mzi, f64::NAN, 0.0).is_err());
        assert!(matches!(
            single_arm_intensity(&mzi, 1e14, -0.1),
            Err(InterferometerError::InvalidOverlap(_))
        ));
        assert!(matches!(
            single_arm_intensity(&mzi, 1e14, 1.1),
            Err(InterferometerError::InvalidOverlap(_))
        ));
    }

    #[test]
    fn test_translation_invariance_of_geometry() {
        let a = MachZehnder::new(1.0, 1.1, 1e-7).unwrap();
        let b = MachZehnder::new(3.0, 3.1, 1e-7).unwrap();
        // Equal arm extensions shift both paths but not the difference.
        assert_relative_eq!(a.delta_l(), b.delta_l(), max_relative = 1e-12);
        assert_relative_eq!(
            arm_phase(&a, 1.5e14),
            arm_phase(&b, 1.5e14),
            max_relative = 1e-12
        );
    }
}

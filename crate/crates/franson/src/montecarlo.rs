//! Event-based estimator: samples photon pairs, routes them through both
//! interferometers, applies a coincidence window to time-tagged detections
//! and estimates the coincidence rate for comparison with the analytic
//! engine. Deliberately shares no algebra with the correlation kernel beyond
//! the per-arm propagation phase.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::correlation::{CorrelationError, FringeSeries, SweepKind};
use crate::interferometer::{arm_phase, InterferometerError, MachZehnder};
use crate::spectral::{sample_detuning, DetuningSign, PairSourceModel};
use crate::SPEED_OF_LIGHT;

/// Pairs are emitted this many coincidence-window widths apart (plus the
/// full flight time), so inter-pair accidentals are impossible by
/// construction.
const EMISSION_SPACING_WINDOWS: f64 = 1e3;

#[derive(Debug, Error, PartialEq)]
pub enum McError {
    #[error("n_pairs must be at least 1")]
    ZeroPairs,
    #[error("coincidence window must be finite and > 0, got {0}")]
    InvalidWindow(f64),
    #[error(
        "window {window_s} s admits short-long cross terms; \
         it must stay below min(dL1, dL2)/c = {limit_s} s"
    )]
    WindowAdmitsCrossTerms { window_s: f64, limit_s: f64 },
    #[error(transparent)]
    Geometry(#[from] InterferometerError),
    #[error(transparent)]
    Series(#[from] CorrelationError),
    #[error("time tags for detector {0:?} are not sorted by arrival time")]
    UnsortedTags(Detector),
}

/// Monte Carlo run description; `seed` fixes the full event stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub n_pairs: u64,
    pub window_s: f64,
    pub seed: u64,
    pub source: PairSourceModel,
    pub mzi_a: MachZehnder,
    pub mzi_b: MachZehnder,
}

impl McConfig {
    pub fn new(
        n_pairs: u64,
        window_s: f64,
        seed: u64,
        source: PairSourceModel,
        mzi_a: MachZehnder,
        mzi_b: MachZehnder,
    ) -> Result<Self, McError> {
        let cfg = McConfig {
            n_pairs,
            window_s,
            seed,
            source,
            mzi_a,
            mzi_b,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), McError> {
        if self.n_pairs == 0 {
            return Err(McError::ZeroPairs);
        }
        if !self.window_s.is_finite() || self.window_s <= 0.0 {
            return Err(McError::InvalidWindow(self.window_s));
        }
        // A window wider than the shorter imbalance would let a short-long
        // pair count as a coincidence and break post-selection.
        let limit_s = self.mzi_a.delta_l().min(self.mzi_b.delta_l()) / SPEED_OF_LIGHT;
        if self.window_s >= limit_s {
            return Err(McError::WindowAdmitsCrossTerms {
                window_s: self.window_s,
                limit_s,
            });
        }
        Ok(())
    }

    /// Time between pair emissions; large enough that detections of
    /// different pairs can never fall into one window.
    fn emission_spacing_s(&self) -> f64 {
        let flight = self.mzi_a.long_path_m().max(self.mzi_b.long_path_m()) / SPEED_OF_LIGHT;
        EMISSION_SPACING_WINDOWS * (self.window_s + flight)
    }
}

/// Which coincidence detector fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detector {
    A,
    B,
}

/// One detection event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeTagRecord {
    pub pair_id: u64,
    pub detector: Detector,
    pub t_s: f64,
}

/// Aggregated estimator output.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McResult {
    pub coincidences: u64,
    pub post_selected_pairs: u64,
    /// Conditional coincidence fraction within the post-selected channel.
    pub g2_estimate: f64,
    /// Binomial standard error sqrt(p(1-p)/post_selected_pairs).
    pub std_err: f64,
}

impl McResult {
    fn from_counts(coincidences: u64, post_selected_pairs: u64) -> Self {
        let (g2_estimate, std_err) = if post_selected_pairs == 0 {
            (0.0, 0.0)
        } else {
            let p = coincidences as f64 / post_selected_pairs as f64;
            (p, (p * (1.0 - p) / post_selected_pairs as f64).sqrt())
        };
        McResult {
            coincidences,
            post_selected_pairs,
            g2_estimate,
            std_err,
        }
    }
}

/// Full simulation output: aggregate result plus the detection stream in
/// pair order.
#[derive(Debug, Clone, PartialEq)]
pub struct McRun {
    pub result: McResult,
    pub tags: Vec<TimeTagRecord>,
}

/// Conditional coincidence probability of the post-selected channel,
/// ½[1 + cos(φ_A + φ_B)] with each φ the arm phase of one photon.
pub fn pair_coincidence_probability(
    f1_hz: f64,
    f2_hz: f64,
    mzi_a: &MachZehnder,
    mzi_b: &MachZehnder,
) -> f64 {
    let phase = arm_phase(mzi_a, f1_hz) + arm_phase(mzi_b, f2_hz);
    0.5 * (1.0 + phase.cos())
}

fn splitmix_mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Expands the user seed into a cipher key; pairs then get independent
/// substreams of the same keyed generator, so results do not depend on
/// thread count or scheduling.
fn rng_key(seed: u64) -> [u8; 32] {
    let mut key = [0u8; 32];
    let mut state = seed;
    for chunk in key.chunks_exact_mut(8) {
        state = state.wrapping_add(0x9E3779B97F4A7C15);
        chunk.copy_from_slice(&splitmix_mix(state).to_le_bytes());
    }
    key
}

fn pair_rng(key: &[u8; 32], pair_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::from_seed(*key);
    rng.set_stream(pair_id);
    rng
}

/// Outcome of one emitted pair.
struct PairEvent {
    post_selected: bool,
    coincident: bool,
    /// Arrival times (t_A, t_B); None when the pair leaves through
    /// unmonitored ports.
    detections: Option<(f64, f64)>,
}

fn pair_event(cfg: &McConfig, key: &[u8; 32], pair_id: u64) -> PairEvent {
    let mut rng = pair_rng(key, pair_id);

    let f0 = if cfg.source.pump_linewidth_hz > 0.0 {
        let sigma = cfg.source.pump_linewidth_hz;
        let normal = Normal::new(0.0, sigma).expect("linewidth validated at construction");
        let span = crate::PUMP_JITTER_SIGMA_SPAN * sigma;
        loop {
            let jitter = normal.sample(&mut rng);
            if jitter.abs() <= span {
                break cfg.source.f0_hz + jitter;
            }
        }
    } else {
        cfg.source.f0_hz
    };
    // The sampled detuning already carries its sign; the ± branch of the
    // frequency assignment is redundant under a symmetric density.
    let detuning = sample_detuning(&cfg.source, &mut rng);
    let (f1, f2) = cfg
        .source
        .with_f0(f0)
        .pair_frequencies(detuning, DetuningSign::Plus)
        .expect("detuning drawn within the source support");

    let emission = pair_id as f64 * cfg.emission_spacing_s();
    let arrive = |path_m: f64| emission + path_m / SPEED_OF_LIGHT;

    // Route combination, uniform over short/short, short/long, long/short,
    // long/long.
    match rng.gen_range(0u32..4) {
        1 => PairEvent {
            post_selected: false,
            coincident: false,
            detections: Some((arrive(cfg.mzi_a.short_m), arrive(cfg.mzi_b.long_path_m()))),
        },
        2 => PairEvent {
            post_selected: false,
            coincident: false,
            detections: Some((arrive(cfg.mzi_a.long_path_m()), arrive(cfg.mzi_b.short_m))),
        },
        combo => {
            // Short-short and long-long are indistinguishable at the
            // detectors; the pair interferes and either fires both detectors
            // or exits through the unmonitored ports.
            let p = pair_coincidence_probability(f1, f2, &cfg.mzi_a, &cfg.mzi_b);
            if rng.gen::<f64>() >= p {
                return PairEvent {
                    post_selected: true,
                    coincident: false,
                    detections: None,
                };
            }
            let (t_a, t_b) = if combo == 0 {
                (arrive(cfg.mzi_a.short_m), arrive(cfg.mzi_b.short_m))
            } else {
                (arrive(cfg.mzi_a.long_path_m()), arrive(cfg.mzi_b.long_path_m()))
            };
            PairEvent {
                post_selected: true,
                coincident: (t_a - t_b).abs() < cfg.window_s,
                detections: Some((t_a, t_b)),
            }
        }
    }
}

/// Runs the estimator and keeps only the counts. Identical to
/// [`simulate_pairs`] including the random stream, minus tag storage.
pub fn simulate_result(cfg: &McConfig) -> Result<McResult, McError> {
    cfg.validate()?;
    let key = rng_key(cfg.seed);
    let (post, coinc) = (0..cfg.n_pairs)
        .into_par_iter()
        .map(|pair_id| {
            let ev = pair_event(cfg, &key, pair_id);
            (ev.post_selected as u64, ev.coincident as u64)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    Ok(McResult::from_counts(coinc, post))
}

/// Runs the estimator and returns the aggregate result together with the
/// time-tag stream (two records per detected pair, in pair order).
pub fn simulate_pairs(cfg: &McConfig) -> Result<McRun, McError> {
    cfg.validate()?;
    let key = rng_key(cfg.seed);
    let events: Vec<PairEvent> = (0..cfg.n_pairs)
        .into_par_iter()
        .map(|pair_id| pair_event(cfg, &key, pair_id))
        .collect();

    let mut post = 0u64;
    let mut coinc = 0u64;
    let mut tags = Vec::new();
    for (pair_id, ev) in events.iter().enumerate() {
        post += ev.post_selected as u64;
        coinc += ev.coincident as u64;
        if let Some((t_a, t_b)) = ev.detections {
            tags.push(TimeTagRecord {
                pair_id: pair_id as u64,
                detector: Detector::A,
                t_s: t_a,
            });
            tags.push(TimeTagRecord {
                pair_id: pair_id as u64,
                detector: Detector::B,
                t_s: t_b,
            });
        }
    }
    Ok(McRun {
        result: McResult::from_counts(coinc, post),
        tags,
    })
}

/// Pairs A against B tags with |t_A - t_B| < window, earliest match first,
/// each tag consumed at most once.
pub fn coincidence_count(tags: &[TimeTagRecord], window_s: f64) -> Result<u64, McError> {
    if !window_s.is_finite() || window_s <= 0.0 {
        return Err(McError::InvalidWindow(window_s));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    for tag in tags {
        match tag.detector {
            Detector::A => a.push(tag.t_s),
            Detector::B => b.push(tag.t_s),
        }
    }
    for (times, det) in [(&a, Detector::A), (&b, Detector::B)] {
        if times.windows(2).any(|w| w[0] > w[1]) {
            return Err(McError::UnsortedTags(det));
        }
    }
    let (mut i, mut j, mut count) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        let dt = a[i] - b[j];
        if dt.abs() < window_s {
            count += 1;
            i += 1;
            j += 1;
        } else if dt < 0.0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    Ok(count)
}

/// Estimator fringe: per-point coincidence estimates with their standard
/// errors.
#[derive(Debug, Clone, PartialEq)]
pub struct McFringe {
    pub series: FringeSeries,
    pub std_err: Vec<f64>,
}

/// Runs the estimator at each trim of interferometer B, with an independent
/// per-point substream derived from the base seed.
pub fn estimate_g2(cfg: &McConfig, trim_points_m: &[f64]) -> Result<McFringe, McError> {
    let mut estimates = Vec::with_capacity(trim_points_m.len());
    let mut errors = Vec::with_capacity(trim_points_m.len());
    let mut coincidence_ok = true;
    for (idx, &trim) in trim_points_m.iter().enumerate() {
        let point_seed = splitmix_mix(cfg.seed ^ (idx as u64 + 1).wrapping_mul(0x9E3779B97F4A7C15));
        let point_cfg = McConfig::new(
            cfg.n_pairs,
            cfg.window_s,
            point_seed,
            cfg.source,
            cfg.mzi_a,
            cfg.mzi_b.with_trim(trim)?,
        )?;
        let lc = SPEED_OF_LIGHT / cfg.source.bandwidth_hz;
        coincidence_ok &=
            lc > (point_cfg.mzi_a.delta_l() - point_cfg.mzi_b.delta_l()).abs();
        let result = simulate_result(&point_cfg)?;
        estimates.push(result.g2_estimate);
        errors.push(result.std_err);
    }
    let series = FringeSeries::new(
        trim_points_m.to_vec(),
        estimates,
        SweepKind::TrimB,
        coincidence_ok,
    )?;
    Ok(McFringe {
        series,
        std_err: errors,
    })
}

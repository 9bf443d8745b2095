//! Experiment files and result serialization: the JSON configuration
//! schema with full-file validation, deterministic CSV rendering, the
//! time-tag dump format and the built-in demonstration recipes.
//!
//! All quantities in configuration files are SI (Hz, m, s); the recipes
//! document the conversions from the conventional GHz/THz figures.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::correlation::{CorrelationConfig, DetuningMode, SweepKind, SweepSpec};
use crate::interferometer::MachZehnder;
use crate::montecarlo::{Detector, McConfig, TimeTagRecord};
use crate::spectral::{detuning_grid, Degeneracy, DensityShape, DetuningGrid, LockMode, PairSourceModel};
use crate::SPEED_OF_LIGHT;

/// One named validation failure; `field` is the dotted path in the file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {}", self.field, self.message)
    }
}

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid config: {}", join_errors(.0))]
    Invalid(Vec<FieldError>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn join_errors(errors: &[FieldError]) -> String {
    errors
        .iter()
        .map(FieldError::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}

/// Source block: pair spectrum and locking behaviour.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSection {
    /// Pair sum frequency in Hz.
    pub f0: f64,
    /// Half-width of the detuning support in Hz.
    pub bandwidth_df: f64,
    /// Pump sum-frequency jitter (standard deviation) in Hz.
    #[serde(default)]
    pub pump_linewidth_df0: f64,
    /// Fixed center offset in Hz; zero means degenerate photons.
    #[serde(default)]
    pub zeta: f64,
    pub lock: LockMode,
    pub density: DensityShape,
}

/// One interferometer block; trim extends the long path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MziSection {
    pub short_m: f64,
    pub long_m: f64,
    #[serde(default)]
    pub trim_m: f64,
}

/// Sweep block; start/stop are meters for trim kinds, radians for phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub kind: SweepKind,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

/// Monte Carlo block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub n_pairs: u64,
    pub window_s: f64,
    pub seed: u64,
}

/// Washout-map block: bandwidth rows sharing one detuning axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WashoutSection {
    pub bandwidths_hz: Vec<f64>,
    pub detuning_points: usize,
}

/// Optional default output destinations; command-line flags take priority.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub csv: Option<String>,
    #[serde(default)]
    pub tags: Option<String>,
}

fn default_grid_points() -> usize {
    1001
}

/// Complete experiment description as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub source: SourceSection,
    pub mzi_a: MziSection,
    pub mzi_b: MziSection,
    pub detuning_mode: DetuningMode,
    /// Detuning quadrature resolution; must be odd.
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    pub sweep: SweepSection,
    #[serde(default)]
    pub mc: Option<McSection>,
    #[serde(default)]
    pub washout: Option<WashoutSection>,
    #[serde(default)]
    pub output: Option<OutputSection>,
}

/// Engine-ready objects built from a validated [`ExperimentConfig`].
#[derive(Debug, Clone)]
pub struct ValidatedExperiment {
    pub correlation: CorrelationConfig,
    pub sweep: SweepSpec,
    pub mc: Option<McConfig>,
    pub washout: Option<WashoutPlan>,
    pub output: OutputSection,
}

/// Washout rows plus the shared detuning axis they are evaluated on.
#[derive(Debug, Clone)]
pub struct WashoutPlan {
    pub bandwidths_hz: Vec<f64>,
    pub axis: DetuningGrid,
}

struct Checker {
    errors: Vec<FieldError>,
}

impl Checker {
    fn new() -> Self {
        Checker { errors: Vec::new() }
    }

    fn require(&mut self, ok: bool, field: &str, message: &str) -> bool {
        if !ok {
            self.errors.push(FieldError {
                field: field.to_string(),
                message: message.to_string(),
            });
        }
        ok
    }

    fn finite_positive(&mut self, value: f64, field: &str) -> bool {
        self.require(value.is_finite() && value > 0.0, field, "must be > 0")
    }

    fn finite_nonnegative(&mut self, value: f64, field: &str) -> bool {
        self.require(value.is_finite() && value >= 0.0, field, "must be >= 0")
    }
}

fn check_mzi(c: &mut Checker, mzi: &MziSection, section: &str) -> bool {
    let short_ok = c.finite_positive(mzi.short_m, &format!("{section}.short_m"));
    let long_ok = c.finite_positive(mzi.long_m, &format!("{section}.long_m"));
    let trim_ok = c.finite_nonnegative(mzi.trim_m, &format!("{section}.trim_m"));
    let mut ok = short_ok && long_ok && trim_ok;
    if ok {
        ok = c.require(
            mzi.long_m + mzi.trim_m >= mzi.short_m,
            section,
            "long_m + trim_m must be at least short_m",
        );
    }
    ok
}

impl ExperimentConfig {
    /// Checks every invariant and reports all violations, not just the
    /// first.
    pub fn validate(&self) -> Result<(), Vec<FieldError>> {
        let mut c = Checker::new();

        let f0_ok = c.finite_positive(self.source.f0, "source.f0");
        c.finite_positive(self.source.bandwidth_df, "source.bandwidth_df");
        c.finite_nonnegative(self.source.pump_linewidth_df0, "source.pump_linewidth_df0");
        if c.require(self.source.zeta.is_finite(), "source.zeta", "must be finite") && f0_ok {
            c.require(
                self.source.zeta.abs() < 0.5 * self.source.f0,
                "source.zeta",
                "must stay below f0/2 in magnitude",
            );
        }

        match self.detuning_mode {
            DetuningMode::SymmetricLocked => c.require(
                self.source.lock == LockMode::SumLocked,
                "source.lock",
                "must be sum_locked in symmetric_locked mode",
            ),
            DetuningMode::NonsymmetricWorstCase => c.require(
                self.source.lock == LockMode::Unlocked,
                "source.lock",
                "must be unlocked in nonsymmetric_worst_case mode",
            ),
        };

        let a_ok = check_mzi(&mut c, &self.mzi_a, "mzi_a");
        let b_ok = check_mzi(&mut c, &self.mzi_b, "mzi_b");

        c.require(self.grid_points % 2 == 1, "grid_points", "must be odd");

        c.require(self.sweep.steps >= 2, "sweep.steps", "must be at least 2");
        let range_ok = self.sweep.start.is_finite()
            && self.sweep.stop.is_finite()
            && self.sweep.start < self.sweep.stop;
        c.require(range_ok, "sweep.stop", "must be finite and greater than start");
        if range_ok {
            c.require(
                self.sweep.start >= 0.0,
                "sweep.start",
                "must be >= 0",
            );
        }

        if let Some(mc) = &self.mc {
            c.require(mc.n_pairs >= 1, "mc.n_pairs", "must be at least 1");
            if c.finite_positive(mc.window_s, "mc.window_s") && a_ok && b_ok {
                let dl_a = (self.mzi_a.long_m + self.mzi_a.trim_m) - self.mzi_a.short_m;
                let dl_b = (self.mzi_b.long_m + self.mzi_b.trim_m) - self.mzi_b.short_m;
                let limit = dl_a.min(dl_b) / SPEED_OF_LIGHT;
                c.require(
                    mc.window_s < limit,
                    "mc.window_s",
                    "must stay below min(delta_l)/c so cross routes never coincide",
                );
            }
        }

        if let Some(w) = &self.washout {
            if c.require(
                !w.bandwidths_hz.is_empty(),
                "washout.bandwidths_hz",
                "must not be empty",
            ) {
                let all_positive = w.bandwidths_hz.iter().all(|b| b.is_finite() && *b > 0.0);
                c.require(all_positive, "washout.bandwidths_hz", "must be > 0");
                c.require(
                    w.bandwidths_hz.windows(2).all(|p| p[0] < p[1]),
                    "washout.bandwidths_hz",
                    "must be strictly increasing",
                );
            }
            c.require(
                w.detuning_points % 2 == 1,
                "washout.detuning_points",
                "must be odd",
            );
        }

        if c.errors.is_empty() {
            Ok(())
        } else {
            Err(c.errors)
        }
    }

    /// Builds the engine objects. All construction runs against invariants
    /// already checked by [`validate`](Self::validate), so failures here are
    /// bugs, not bad input.
    pub fn build(&self) -> Result<ValidatedExperiment, ConfigError> {
        self.validate().map_err(ConfigError::Invalid)?;
        let degeneracy = if self.source.zeta == 0.0 {
            Degeneracy::Degenerate
        } else {
            Degeneracy::Nondegenerate {
                zeta_hz: self.source.zeta,
            }
        };
        let source = PairSourceModel::new(
            self.source.f0,
            self.source.bandwidth_df,
            self.source.pump_linewidth_df0,
            degeneracy,
            self.source.lock,
            self.source.density,
        )
        .expect("source section validated");
        let mzi_a = MachZehnder::new(self.mzi_a.short_m, self.mzi_a.long_m, self.mzi_a.trim_m)
            .expect("mzi_a section validated");
        let mzi_b = MachZehnder::new(self.mzi_b.short_m, self.mzi_b.long_m, self.mzi_b.trim_m)
            .expect("mzi_b section validated");
        let grid = detuning_grid(&source, self.grid_points).expect("grid_points validated");
        let correlation = CorrelationConfig::new(source, mzi_a, mzi_b, self.detuning_mode, grid)
            .expect("mode and lock validated");
        let sweep = SweepSpec::new(
            self.sweep.kind,
            self.sweep.start,
            self.sweep.stop,
            self.sweep.steps,
        )
        .expect("sweep section validated");
        let mc = self.mc.map(|m| {
            McConfig::new(m.n_pairs, m.window_s, m.seed, source, mzi_a, mzi_b)
                .expect("mc section validated")
        });
        let washout = self.washout.as_ref().map(|w| WashoutPlan {
            bandwidths_hz: w.bandwidths_hz.clone(),
            axis: detuning_grid(&source, w.detuning_points).expect("detuning_points validated"),
        });
        Ok(ValidatedExperiment {
            correlation,
            sweep,
            mc,
            washout,
            output: self.output.clone().unwrap_or_default(),
        })
    }

    /// Canonical single-line JSON rendering; field order is fixed by the
    /// schema, so equal configs serialize identically.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("schema has no non-serializable values")
    }

    /// Hex SHA-256 of the canonical JSON; stamped into CSV metadata so a
    /// result file names the exact configuration that produced it.
    pub fn config_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_json().as_bytes());
        format!("{:x}", hasher.finalize())
    }
}

/// Parses and fully validates an experiment file.
pub fn read_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let config: ExperimentConfig = serde_json::from_str(text).map_err(|e| ConfigError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    config.validate().map_err(ConfigError::Invalid)?;
    Ok(config)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TableError {
    #[error("table needs at least one column")]
    NoColumns,
    #[error("row has {got} values, expected {expected}")]
    WidthMismatch { got: usize, expected: usize },
    #[error("rows must be strictly increasing in lexicographic order")]
    RowOrder,
    #[error("row contains a non-finite value")]
    NonFinite,
}

/// Rectangular numeric results with a metadata preamble. Rows are kept in
/// strictly increasing lexicographic order, which covers both plain sweeps
/// (monotone abscissa) and long-form maps (bandwidth, then detuning).
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
    metadata: Vec<(String, String)>,
}

impl ResultTable {
    pub fn new(
        columns: Vec<String>,
        metadata: Vec<(String, String)>,
    ) -> Result<Self, TableError> {
        if columns.is_empty() {
            return Err(TableError::NoColumns);
        }
        Ok(ResultTable {
            columns,
            rows: Vec::new(),
            metadata,
        })
    }

    pub fn push_row(&mut self, row: Vec<f64>) -> Result<(), TableError> {
        if row.len() != self.columns.len() {
            return Err(TableError::WidthMismatch {
                got: row.len(),
                expected: self.columns.len(),
            });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(TableError::NonFinite);
        }
        if let Some(last) = self.rows.last() {
            if last.as_slice() >= row.as_slice() {
                return Err(TableError::RowOrder);
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Renders the full file: "#"-prefixed metadata, header, then one line
    /// per row with 17-significant-digit floats and "\n" endings.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for (key, value) in &self.metadata {
            out.push_str(&format!("# {key}: {value}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line = row
                .iter()
                .map(|v| format!("{v:.16e}"))
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&line);
            out.push('\n');
        }
        out
    }
}

/// Writes the rendered table in a single filesystem call, so a failed run
/// never leaves a partial file behind.
pub fn write_csv(table: &ResultTable, destination: &Path) -> Result<(), ConfigError> {
    std::fs::write(destination, table.to_csv_string())?;
    Ok(())
}

/// Writes detection records as "pair_id,detector,t_seconds" lines with no
/// header, matching the table float format.
pub fn write_tag_dump(tags: &[TimeTagRecord], destination: &Path) -> Result<(), ConfigError> {
    let mut out = String::new();
    for tag in tags {
        let det = match tag.detector {
            Detector::A => "A",
            Detector::B => "B",
        };
        out.push_str(&format!("{},{},{:.16e}\n", tag.pair_id, det, tag.t_s));
    }
    std::fs::write(destination, out)?;
    Ok(())
}

fn recipe_base(
    bandwidth_df: f64,
    lock: LockMode,
    detuning_mode: DetuningMode,
    sweep: SweepSection,
) -> ExperimentConfig {
    ExperimentConfig {
        source: SourceSection {
            f0: 3e14,
            bandwidth_df,
            pump_linewidth_df0: 0.0,
            zeta: 0.0,
            lock,
            density: DensityShape::Uniform,
        },
        mzi_a: MziSection {
            short_m: 1.0,
            long_m: 1.1,
            trim_m: 0.0,
        },
        mzi_b: MziSection {
            short_m: 1.0,
            long_m: 1.1,
            trim_m: 0.0,
        },
        detuning_mode,
        grid_points: 1001,
        sweep,
        mc: Some(McSection {
            n_pairs: 1_000_000,
            window_s: 1e-10,
            seed: 42,
        }),
        washout: None,
        output: None,
    }
}

/// Built-in configurations for the standard demonstration curves: one
/// airtight fringe, three wash-out comparisons, the broadband classical
/// baseline and the bandwidth-resolved washout map. All use a 300 THz pair
/// sum frequency and 0.1 m imbalances.
pub fn fig2_recipes() -> Vec<(&'static str, ExperimentConfig)> {
    let two_fringes = SweepSection {
        kind: SweepKind::TrimB,
        start: 0.0,
        stop: 2e-6,
        steps: 2001,
    };
    // Five coherence lengths at 20 THz: 5 * c / 2e13.
    let five_lc = SweepSection {
        kind: SweepKind::TrimB,
        start: 0.0,
        stop: 7.49481145e-5,
        steps: 2001,
    };
    let mut fig2cd = recipe_base(
        3e9,
        LockMode::Unlocked,
        DetuningMode::NonsymmetricWorstCase,
        two_fringes,
    );
    fig2cd.washout = Some(WashoutSection {
        bandwidths_hz: vec![1e9, 2e9, 3e9],
        detuning_points: 1001,
    });
    vec![
        (
            "fig2a_red",
            recipe_base(
                3e9,
                LockMode::SumLocked,
                DetuningMode::SymmetricLocked,
                two_fringes,
            ),
        ),
        (
            "fig2a_green",
            recipe_base(
                1e9,
                LockMode::Unlocked,
                DetuningMode::NonsymmetricWorstCase,
                two_fringes,
            ),
        ),
        (
            "fig2a_blue",
            recipe_base(
                2e9,
                LockMode::Unlocked,
                DetuningMode::NonsymmetricWorstCase,
                two_fringes,
            ),
        ),
        (
            "fig2a_dotted",
            recipe_base(
                3e9,
                LockMode::Unlocked,
                DetuningMode::NonsymmetricWorstCase,
                two_fringes,
            ),
        ),
        (
            "fig2b",
            recipe_base(
                2e13,
                LockMode::SumLocked,
                DetuningMode::SymmetricLocked,
                five_lc,
            ),
        ),
        ("fig2cd", fig2cd),
    ]
}

/// Looks up one recipe by name.
pub fn recipe(name: &str) -> Option<ExperimentConfig> {
    fig2_recipes()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, cfg)| cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn minimal_json() -> String {
        r#"{
            "source": {
                "f0": 3e14,
                "bandwidth_df": 3e9,
                "lock": "sum_locked",
                "density": "uniform"
            },
            "mzi_a": {"short_m": 1.0, "long_m": 1.1},
            "mzi_b": {"short_m": 1.0, "long_m": 1.1},
            "detuning_mode": "symmetric_locked",
            "sweep": {"kind": "trim_b", "start": 0.0, "stop": 2e-6, "steps": 2001}
        }"#
        .to_string()
    }

    #[test]
    fn test_read_minimal_config() {
        let cfg = read_config(&minimal_json()).unwrap();
        assert_eq!(cfg.source.f0, 3e14);
        assert_eq!(cfg.source.bandwidth_df, 3e9);
        assert_eq!(cfg.source.pump_linewidth_df0, 0.0);
        assert_eq!(cfg.source.zeta, 0.0);
        assert_eq!(cfg.grid_points, 1001);
        assert_eq!(cfg.mzi_a.trim_m, 0.0);
        assert_eq!(cfg.detuning_mode, DetuningMode::SymmetricLocked);
        assert!(cfg.mc.is_none());
        let built = cfg.build().unwrap();
        assert_eq!(built.correlation.grid.len(), 1001);
        assert_eq!(built.sweep.steps, 2001);
    }

    #[test]
    fn test_parse_error_carries_line_and_column() {
        let text = "{\n  \"source\": }";
        match read_config(text) {
            Err(ConfigError::Parse { line, column, .. }) => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn test_unknown_key_rejected_by_name() {
        let text = minimal_json().replace("bandwidth_df", "bandwith_df");
        let err = read_config(&text).unwrap_err();
        assert!(err.to_string().contains("bandwith_df"), "{err}");
    }

    #[test]
    fn test_validation_reports_every_failure() {
        let mut cfg = read_config(&minimal_json()).unwrap();
        cfg.source.bandwidth_df = 0.0;
        cfg.sweep.steps = 1;
        cfg.grid_points = 10;
        cfg.mc = Some(McSection {
            n_pairs: 0,
            window_s: 1e-10,
            seed: 1,
        });
        let errors = cfg.validate().unwrap_err();
        let rendered: Vec<String> = errors.iter().map(FieldError::to_string).collect();
        assert!(rendered.contains(&"source.bandwidth_df must be > 0".to_string()));
        assert!(rendered.contains(&"sweep.steps must be at least 2".to_string()));
        assert!(rendered.contains(&"grid_points must be odd".to_string()));
        assert!(rendered.contains(&"mc.n_pairs must be at least 1".to_string()));
        assert_eq!(errors.len(), 4);
    }

    #[test]
    fn test_lock_and_mode_must_pair_up() {
        let mut cfg = read_config(&minimal_json()).unwrap();
        cfg.source.lock = LockMode::Unlocked;
        let errors = cfg.validate().unwrap_err();
        assert_eq!(errors.len(), 1);
        assert_eq!(errors[0].field, "source.lock");

        cfg.detuning_mode = DetuningMode::NonsymmetricWorstCase;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn test_mc_window_checked_against_geometry() {
        let mut cfg = read_config(&minimal_json()).unwrap();
        cfg.mc = Some(McSection {
            n_pairs: 100,
            window_s: 4e-10,
            seed: 1,
        });
        let errors = cfg.validate().unwrap_err();
        assert_eq!(errors[0].field, "mc.window_s");

        cfg.mc.as_mut().unwrap().window_s = 1e-10;
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn test_washout_section_validation() {
        let mut cfg = read_config(&minimal_json()).unwrap();
        cfg.washout = Some(WashoutSection {
            bandwidths_hz: vec![2e9, 1e9],
            detuning_points: 100,
        });
        let errors = cfg.validate().unwrap_err();
        let fields: Vec<&str> = errors.iter().map(|e| e.field.as_str()).collect();
        assert!(fields.contains(&"washout.bandwidths_hz"));
        assert!(fields.contains(&"washout.detuning_points"));
    }

    #[test]
    fn test_recipes_round_trip_and_validate() {
        let recipes = fig2_recipes();
        assert_eq!(recipes.len(), 6);
        for (name, cfg) in &recipes {
            assert!(cfg.validate().is_ok(), "{name} must validate");
            let text = serde_json::to_string(cfg).unwrap();
            let back = read_config(&text).unwrap();
            assert_eq!(&back, cfg, "{name} must round-trip");
            cfg.build().unwrap();
        }
    }

    #[test]
    fn test_recipe_parameters() {
        let red = recipe("fig2a_red").unwrap();
        assert_eq!(red.source.bandwidth_df, 3e9);
        assert_eq!(red.detuning_mode, DetuningMode::SymmetricLocked);
        assert_eq!(red.source.f0, 3e14);
        assert_eq!(red.mc.unwrap().seed, 42);

        let green = recipe("fig2a_green").unwrap();
        assert_eq!(green.source.bandwidth_df, 1e9);
        assert_eq!(green.detuning_mode, DetuningMode::NonsymmetricWorstCase);

        let broadband = recipe("fig2b").unwrap();
        assert_eq!(broadband.source.bandwidth_df, 2e13);

        let map = recipe("fig2cd").unwrap();
        let w = map.washout.unwrap();
        assert_eq!(w.bandwidths_hz, vec![1e9, 2e9, 3e9]);
        assert_eq!(w.detuning_points, 1001);

        assert!(recipe("fig2a_cyan").is_none());
    }

    #[test]
    fn test_config_hash_tracks_content() {
        let cfg = recipe("fig2a_red").unwrap();
        let h1 = cfg.config_hash();
        assert_eq!(h1.len(), 64);
        assert_eq!(h1, cfg.config_hash());
        let mut other = cfg.clone();
        other.source.bandwidth_df = 2e9;
        assert_ne!(h1, other.config_hash());
    }

    #[test]
    fn test_table_rendering_frozen() {
        let mut table = ResultTable::new(
            vec!["trim_m".into(), "g2".into()],
            vec![
                ("config_sha256".into(), "abc".into()),
                ("version".into(), "0.1.0".into()),
            ],
        )
        .unwrap();
        table.push_row(vec![0.0, 1.0]).unwrap();
        table.push_row(vec![1e-6, 0.5]).unwrap();
        assert_eq!(
            table.to_csv_string(),
            "# config_sha256: abc\n\
             # version: 0.1.0\n\
             trim_m,g2\n\
             0.0000000000000000e0,1.0000000000000000e0\n\
             9.9999999999999995e-7,5.0000000000000000e-1\n"
        );
    }

    #[test]
    fn test_empty_table_renders_header_and_metadata_only() {
        let table =
            ResultTable::new(vec!["a".into()], vec![("seed".into(), "42".into())]).unwrap();
        assert_eq!(table.to_csv_string(), "# seed: 42\na\n");
    }

    #[test]
    fn test_table_rejects_malformed_rows() {
        assert_eq!(
            ResultTable::new(vec![], vec![]).unwrap_err(),
            TableError::NoColumns
        );
        let mut table = ResultTable::new(vec!["x".into(), "y".into()], vec![]).unwrap();
        assert_eq!(
            table.push_row(vec![1.0]).unwrap_err(),
            TableError::WidthMismatch {
                got: 1,
                expected: 2
            }
        );
        assert_eq!(
            table.push_row(vec![0.0, f64::NAN]).unwrap_err(),
            TableError::NonFinite
        );
        table.push_row(vec![1.0, 0.0]).unwrap();
        assert_eq!(
            table.push_row(vec![1.0, 0.0]).unwrap_err(),
            TableError::RowOrder
        );
        // Lexicographic order admits a repeated leading column.
        table.push_row(vec![1.0, 2.0]).unwrap();
        assert_eq!(
            table.push_row(vec![0.5, 9.0]).unwrap_err(),
            TableError::RowOrder
        );
    }

    #[test]
    fn test_write_csv_is_byte_identical_across_runs() {
        let dir = tempdir().unwrap();
        let mut table = ResultTable::new(
            vec!["x".into(), "y".into()],
            vec![("seed".into(), "7".into())],
        )
        .unwrap();
        table.push_row(vec![0.1, 0.2]).unwrap();
        let p1 = dir.path().join("a.csv");
        let p2 = dir.path().join("b.csv");
        write_csv(&table, &p1).unwrap();
        write_csv(&table, &p2).unwrap();
        assert_eq!(
            std::fs::read(&p1).unwrap(),
            std::fs::read(&p2).unwrap()
        );
    }

    #[test]
    fn test_tag_dump_format() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("tags.csv");
        let tags = [
            TimeTagRecord {
                pair_id: 0,
                detector: Detector::A,
                t_s: 1.5e-7,
            },
            TimeTagRecord {
                pair_id: 0,
                detector: Detector::B,
                t_s: 2.0e-7,
            },
        ];
        write_tag_dump(&tags, &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "0,A,1.4999999999999999e-7\n0,B,1.9999999999999999e-7\n"
        );
    }

    #[test]
    fn test_build_wires_washout_plan() {
        let built = recipe("fig2cd").unwrap().build().unwrap();
        let plan = built.washout.unwrap();
        assert_eq!(plan.bandwidths_hz, vec![1e9, 2e9, 3e9]);
        assert_eq!(plan.axis.len(), 1001);
        assert_eq!(plan.axis.span_hz(), 3e9);
        assert!(built.mc.is_some());
    }
}

//! Parameter sweeps over single- and two-particle error rates, the
//! entangling-threshold scan, and the CSV / config text formats.
//!
//! Config files are flat `key = value` lines with `#` comments. CSV output
//! starts with `# key=value` lines recording every effective parameter,
//! followed by a column-name row and data rows. Reals are written with 12
//! significant digits.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::gate::{choi_of_noisy_gate, is_entangling, logical_gate_metrics, Cut};
use crate::noise::{NoiseParams, TWO_QUBIT_DIM};
use crate::purify::{PumpConfig, PumpMode, MAX_NESTING_LEVELS};
use crate::state::UnitaryGate;

/// Largest error rate of a depolarizing two-qubit operation.
pub const MAX_ERROR_RATE: f64 = 0.75;

pub const CSV_COLUMNS: [&str; 8] = [
    "p_single",
    "p_two",
    "levels",
    "pump_steps_total",
    "pair_fidelity",
    "logical_error_rate",
    "expected_raw_pairs",
    "expected_gate_attempts",
];

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {value:?} ({constraint})")]
    Invalid {
        key: String,
        value: String,
        constraint: String,
    },
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("row p_single={p_single} p_two={p_two} levels={levels}: {source}")]
    Row {
        p_single: f64,
        p_two: f64,
        levels: usize,
        #[source]
        source: crate::Error,
    },
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl SweepError {
    /// True when the failure is a broken numerical invariant rather than I/O.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            SweepError::Row {
                source: crate::Error::InvariantViolation(_),
                ..
            }
        )
    }
}

/// Measurement reliability used for every sweep point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaPolicy {
    /// `η = q_local`
    FollowLocal,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub p_single: Vec<f64>,
    pub p_two: Vec<f64>,
    pub levels: Vec<usize>,
    pub pump: PumpConfig,
    pub eta: EtaPolicy,
    pub p_herald: f64,
    pub output_path: PathBuf,
}

/// `n` points from `lo` to `hi` spaced evenly in log10.
pub fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64))
                .collect()
        }
    }
}

impl Default for SweepSpec {
    /// Two-qubit error rates 0.15 and 0.01, 25 single-particle error rates
    /// from 1e-6 to 1e-1, nesting levels 0 through 3.
    fn default() -> Self {
        Self {
            p_single: logspace(1e-6, 1e-1, 25),
            p_two: vec![0.15, 0.01],
            levels: vec![0, 1, 2, 3],
            pump: PumpConfig::default(),
            eta: EtaPolicy::FollowLocal,
            p_herald: 1.0,
            output_path: PathBuf::from("fig1.csv"),
        }
    }
}

fn invalid(key: &str, value: &str, constraint: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
        constraint: constraint.into(),
    }
}

fn parse_f64(key: &str, value: &str) -> Result<f64, ConfigError> {
    value
        .trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| invalid(key, value, "expected a finite number"))
}

fn parse_uint<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| invalid(key, value, "expected a non-negative integer"))
}

/// `a,b,c` or `logspace:lo,hi,n`.
pub fn parse_real_list(key: &str, value: &str) -> Result<Vec<f64>, ConfigError> {
    let v = value.trim();
    if let Some(args) = v.strip_prefix("logspace:") {
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 3 {
            return Err(invalid(key, value, "logspace needs lo,hi,n"));
        }
        let lo = parse_f64(key, parts[0])?;
        let hi = parse_f64(key, parts[1])?;
        let n: usize = parse_uint(key, parts[2])?;
        if lo <= 0.0 || hi <= 0.0 {
            return Err(invalid(key, value, "logspace bounds must be positive"));
        }
        return Ok(logspace(lo, hi, n));
    }
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| parse_f64(key, s))
        .collect()
}

/// Splits config text into `(key, value)` pairs, skipping blanks and `#` comments.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: i + 1,
            text: raw.to_string(),
        })?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config_file(path: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_text(&text)
}

impl SweepSpec {
    /// Applies overrides on top of the defaults, later pairs winning, then validates.
    pub fn from_pairs<I, K, V>(pairs: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut spec = Self::default();
        for (k, v) in pairs {
            spec.set(k.as_ref(), v.as_ref())?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let key_norm = key.trim().replace('-', "_");
        match key_norm.as_str() {
            "p_single" => self.p_single = parse_real_list(key, value)?,
            "p_two" => self.p_two = parse_real_list(key, value)?,
            "levels" => {
                self.levels = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse_uint(key, s))
                    .collect::<Result<_, _>>()?
            }
            "mode" => {
                self.pump.mode = match value.trim() {
                    "expected" | "expected_value" => PumpMode::ExpectedValue,
                    "mc" | "monte_carlo" => PumpMode::MonteCarlo,
                    _ => return Err(invalid(key, value, "expected `expected` or `mc`")),
                }
            }
            "trials" => self.pump.trials = parse_uint(key, value)?,
            "seed" => self.pump.seed = parse_uint(key, value)?,
            "epsilon" => self.pump.convergence_epsilon = parse_f64(key, value)?,
            "max_steps" => self.pump.max_steps_per_level = parse_uint(key, value)?,
            "eta" => {
                self.eta = match value.trim() {
                    "q_local" => EtaPolicy::FollowLocal,
                    v => EtaPolicy::Fixed(parse_f64(key, v)?),
                }
            }
            "p_herald" => self.p_herald = parse_f64(key, value)?,
            "out" | "output_path" => self.output_path = PathBuf::from(value.trim()),
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        check_grid("p_single", &self.p_single)?;
        check_grid("p_two", &self.p_two)?;
        if self.levels.is_empty() {
            return Err(invalid("levels", "", "must not be empty"));
        }
        if let Some(l) = self.levels.iter().find(|&&l| l > MAX_NESTING_LEVELS) {
            return Err(invalid("levels", &l.to_string(), "each level must lie in [0, 4]"));
        }
        if !(self.pump.convergence_epsilon > 0.0) {
            return Err(invalid(
                "epsilon",
                &self.pump.convergence_epsilon.to_string(),
                "must be > 0",
            ));
        }
        if self.pump.max_steps_per_level == 0 {
            return Err(invalid("max_steps", "0", "must be >= 1"));
        }
        if self.pump.mode == PumpMode::MonteCarlo && self.pump.trials == 0 {
            return Err(invalid("trials", "0", "must be >= 1 in mc mode"));
        }
        if let EtaPolicy::Fixed(eta) = self.eta {
            if !(0.0..=1.0).contains(&eta) {
                return Err(invalid("eta", &eta.to_string(), "must lie in [0, 1]"));
            }
        }
        if !(self.p_herald > 0.0 && self.p_herald <= 1.0) {
            return Err(invalid("p_herald", &self.p_herald.to_string(), "must lie in (0, 1]"));
        }
        Ok(())
    }

    /// Noise parameters of one sweep point.
    pub fn noise_at(&self, p_single: f64, p_two: f64) -> crate::Result<NoiseParams> {
        let n = NoiseParams::from_error_rates(p_single, p_two)?.with_p_herald(self.p_herald)?;
        match self.eta {
            EtaPolicy::FollowLocal => Ok(n),
            EtaPolicy::Fixed(eta) => n.with_eta(eta),
        }
    }

    /// `# key=value` header lines, enough to re-run the sweep exactly.
    pub fn header_lines(&self) -> Vec<String> {
        // shortest round-trip form, so a re-run from the header is bit-exact
        let list = |v: &[f64]| v.iter().map(f64::to_string).collect::<Vec<_>>().join(",");
        let mode = match self.pump.mode {
            PumpMode::ExpectedValue => "expected",
            PumpMode::MonteCarlo => "mc",
        };
        let eta = match self.eta {
            EtaPolicy::FollowLocal => "q_local".to_string(),
            EtaPolicy::Fixed(e) => e.to_string(),
        };
        vec![
            format!("p_single={}", list(&self.p_single)),
            format!("p_two={}", list(&self.p_two)),
            format!(
                "levels={}",
                self.levels.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
            ),
            format!("mode={mode}"),
            format!("trials={}", self.pump.trials),
            format!("seed={}", self.pump.seed),
            format!("epsilon={}", self.pump.convergence_epsilon),
            format!("max_steps={}", self.pump.max_steps_per_level),
            format!("eta={eta}"),
            format!("p_herald={}", self.p_herald),
            format!("out={}", self.output_path.display()),
        ]
    }
}

fn check_grid(key: &str, values: &[f64]) -> Result<(), ConfigError> {
    if values.is_empty() {
        return Err(invalid(key, "", "must not be empty"));
    }
    for &p in values {
        if !(p > 0.0 && p <= MAX_ERROR_RATE) {
            return Err(invalid(key, &p.to_string(), "each value must lie in (0, 3/4]"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub p_single: f64,
    pub p_two: f64,
    pub levels: usize,
    pub pump_steps_total: usize,
    pub pair_fidelity: f64,
    pub logical_error_rate: f64,
    pub expected_raw_pairs: f64,
    pub expected_gate_attempts: f64,
}

impl ResultRow {
    pub fn to_csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            fmt_real(self.p_single),
            fmt_real(self.p_two),
            self.levels,
            self.pump_steps_total,
            fmt_real(self.pair_fidelity),
            fmt_real(self.logical_error_rate),
            fmt_real(self.expected_raw_pairs),
            fmt_real(self.expected_gate_attempts),
        )
    }
}

/// 12 significant digits, scientific notation.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.11e}")
}

/// One row per `(p_single, p_two, level)`, sorted by `(p_two, levels, p_single)`.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<ResultRow>, SweepError> {
    let mut points = Vec::new();
    for &p_two in &spec.p_two {
        for &levels in &spec.levels {
            for &p_single in &spec.p_single {
                points.push((p_single, p_two, levels));
            }
        }
    }
    let mut rows = points
        .par_iter()
        .map(|&(p_single, p_two, levels)| {
            evaluate_point(spec, p_single, p_two, levels).map_err(|source| SweepError::Row {
                p_single,
                p_two,
                levels,
                source,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    rows.sort_by(|a, b| {
        a.p_two
            .total_cmp(&b.p_two)
            .then(a.levels.cmp(&b.levels))
            .then(a.p_single.total_cmp(&b.p_single))
    });
    Ok(rows)
}

fn evaluate_point(spec: &SweepSpec, p_single: f64, p_two: f64, levels: usize) -> crate::Result<ResultRow> {
    let noise = spec.noise_at(p_single, p_two)?;
    let report = logical_gate_metrics(&noise, &spec.pump.with_levels(levels))?;
    Ok(ResultRow {
        p_single,
        p_two,
        levels,
        pump_steps_total: report.pump.steps_total(),
        pair_fidelity: report.pair_fidelity(),
        logical_error_rate: report.metrics.error_rate,
        expected_raw_pairs: report.cost.expected_raw_pairs,
        expected_gate_attempts: report.cost.expected_gate_attempts,
    })
}

pub fn render_csv(spec: &SweepSpec, rows: &[ResultRow]) -> String {
    let mut out = String::new();
    for line in spec.header_lines() {
        let _ = writeln!(out, "# {line}");
    }
    let _ = writeln!(out, "{}", CSV_COLUMNS.join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.to_csv());
    }
    out
}

/// Runs the sweep and writes the CSV to `spec.output_path`.
pub fn run_sweep_to_file(spec: &SweepSpec) -> Result<Vec<ResultRow>, SweepError> {
    let rows = run_sweep(spec)?;
    std::fs::write(&spec.output_path, render_csv(spec, &rows)).map_err(|source| SweepError::Io {
        path: spec.output_path.clone(),
        source,
    })?;
    Ok(rows)
}

#[derive(Debug, Error, PartialEq)]
#[error("csv line {line}: {reason}")]
pub struct CsvError {
    pub line: usize,
    pub reason: String,
}

/// Parses a CSV produced by [`render_csv`] back into its header map and rows.
pub fn parse_csv(text: &str) -> Result<(BTreeMap<String, String>, Vec<ResultRow>), CsvError> {
    let mut header = BTreeMap::new();
    let mut rows = Vec::new();
    let mut seen_columns = false;
    for (i, line) in text.lines().enumerate() {
        let err = |reason: String| CsvError { line: i + 1, reason };
        if let Some(h) = line.strip_prefix('#') {
            if let Some((k, v)) = h.trim().split_once('=') {
                header.insert(k.to_string(), v.to_string());
            }
            continue;
        }
        if !seen_columns {
            if line != CSV_COLUMNS.join(",") {
                return Err(err(format!("unexpected column row {line:?}")));
            }
            seen_columns = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != CSV_COLUMNS.len() {
            return Err(err(format!("expected {} fields", CSV_COLUMNS.len())));
        }
        let real = |s: &str| s.parse::<f64>().map_err(|e| err(format!("{s:?}: {e}")));
        let int = |s: &str| s.parse::<usize>().map_err(|e| err(format!("{s:?}: {e}")));
        rows.push(ResultRow {
            p_single: real(f[0])?,
            p_two: real(f[1])?,
            levels: int(f[2])?,
            pump_steps_total: int(f[3])?,
            pair_fidelity: real(f[4])?,
            logical_error_rate: real(f[5])?,
            expected_raw_pairs: real(f[6])?,
            expected_gate_attempts: real(f[7])?,
        });
    }
    Ok((header, rows))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThresholdKind {
    /// Smallest `q′` for which the depolarized CNOT is entangling.
    Entangling,
}

/// Bisection over `q′ ∈ [0, 1]`. At least one midpoint is evaluated, and
/// halving continues until the bracket is no wider than `tolerance`; the
/// midpoint of the final bracket is returned, so a tolerance of 1 or more
/// yields 0.25 or 0.75 after the single evaluation at 0.5.
pub fn threshold_scan(kind: ThresholdKind, tolerance: f64) -> crate::Result<f64> {
    if !(tolerance > 0.0) {
        return Err(crate::Error::ParameterOutOfRange {
            name: "tolerance",
            value: tolerance,
            range: "> 0",
        });
    }
    let ThresholdKind::Entangling = kind;
    let cnot = UnitaryGate::cnot();
    let cut = Cut::particle_a();
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    loop {
        let mid = 0.5 * (lo + hi);
        let (entangling, _) = is_entangling(&choi_of_noisy_gate(&cnot, mid)?, &cut)?;
        if entangling {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= tolerance {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Error rate `3(1−q′)/4` at the entangling threshold.
pub fn threshold_error_rate(q: f64) -> crate::Result<f64> {
    crate::noise::error_rate_from_q(q, TWO_QUBIT_DIM)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_fig1_preset() {
        let spec = SweepSpec::from_pairs(Vec::<(String, String)>::new()).unwrap();
        assert_eq!(spec.p_single.len(), 25);
        assert!((spec.p_single[0] - 1e-6).abs() < 1e-18);
        assert!((spec.p_single[24] - 1e-1).abs() < 1e-15);
        assert_eq!(spec.p_two, vec![0.15, 0.01]);
        assert_eq!(spec.levels, vec![0, 1, 2, 3]);
        assert_eq!(spec.pump.convergence_epsilon, 1e-4);
        assert_eq!(spec.pump.max_steps_per_level, 20);
        assert_eq!(spec.pump.mode, PumpMode::ExpectedValue);
        assert_eq!(spec.eta, EtaPolicy::FollowLocal);
    }

    #[test]
    fn rejects_error_rate_above_three_quarters() {
        let err = SweepSpec::from_pairs([("p_single", "0.9")]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("p_single") && msg.contains("3/4"), "{msg}");
    }

    #[test]
    fn unknown_key_named() {
        let err = SweepSpec::from_pairs([("p_tripple", "0.1")]).unwrap_err();
        assert!(err.to_string().contains("p_tripple"));
    }

    #[test]
    fn eta_override_recorded() {
        let spec = SweepSpec::from_pairs([("eta", "1.0")]).unwrap();
        assert_eq!(spec.eta, EtaPolicy::Fixed(1.0));
        assert!(spec.header_lines().iter().any(|l| l == "eta=1"));
    }

    #[test]
    fn config_text_parsing() {
        let pairs = parse_config_text("# comment\np_two = 0.1, 0.2  # trailing\n\nlevels=0,2\n").unwrap();
        assert_eq!(pairs.len(), 2);
        let spec = SweepSpec::from_pairs(pairs).unwrap();
        assert_eq!(spec.p_two, vec![0.1, 0.2]);
        assert_eq!(spec.levels, vec![0, 2]);
        assert!(matches!(
            parse_config_text("novalue"),
            Err(ConfigError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn logspace_list() {
        let v = parse_real_list("p_single", "logspace:1e-4,1e-2,3").unwrap();
        assert_eq!(v.len(), 3);
        assert!((v[1] - 1e-3).abs() < 1e-15);
        assert!(parse_real_list("p_single", "logspace:1e-4,1e-2").is_err());
    }

    #[test]
    fn header_reproduces_spec() {
        let spec = SweepSpec::from_pairs([("mode", "mc"), ("seed", "7"), ("eta", "0.99")]).unwrap();
        let pairs = spec.header_lines().into_iter().map(|l| {
            let (k, v) = l.split_once('=').unwrap();
            (k.to_string(), v.to_string())
        });
        assert_eq!(SweepSpec::from_pairs(pairs).unwrap(), spec);
    }

    #[test]
    fn levels_out_of_range() {
        assert!(SweepSpec::from_pairs([("levels", "0,5")]).is_err());
    }

    #[test]
    fn degenerate_tolerance_single_evaluation() {
        // one evaluation at 0.5 (entangling) leaves the bracket [0, 0.5]
        assert_eq!(threshold_scan(ThresholdKind::Entangling, 1.0).unwrap(), 0.25);
        assert!(threshold_scan(ThresholdKind::Entangling, 0.0).is_err());
    }

    #[test]
    fn fmt_real_has_twelve_significant_digits() {
        assert_eq!(fmt_real(0.15), "1.50000000000e-1");
        assert_eq!(fmt_real(1.0 / 3.0).parse::<f64>().unwrap(), 3.33333333333e-1);
    }
}

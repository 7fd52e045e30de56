use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Numeric knobs shared by all experiments. Unset fields fall back to the
/// experiment's own default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Inverse temperature
    #[arg(long)]
    pub beta: Option<f64>,
    /// Comma-separated β schedule
    #[arg(long, value_delimiter = ',')]
    pub betas: Option<Vec<f64>>,
    /// Central charge
    #[arg(long)]
    pub c: Option<f64>,
    /// Conformal weight
    #[arg(long)]
    pub h: Option<f64>,
    /// Covering level or statistic power
    #[arg(long)]
    pub n: Option<usize>,
    /// Möbius parameter |a⁻¹b|
    #[arg(long)]
    pub r: Option<f64>,
    /// Comma-separated r values
    #[arg(long, value_delimiter = ',')]
    pub rs: Option<Vec<f64>>,
    /// Möbius phase
    #[arg(long)]
    pub phase: Option<f64>,
    /// Mode cutoff of the truncated operators
    #[arg(long = "N")]
    #[serde(rename = "N")]
    pub cutoff: Option<usize>,
    /// Grid size
    #[arg(long = "M")]
    #[serde(rename = "M")]
    pub grid: Option<usize>,
    /// Sine modes of the bridge
    #[arg(long)]
    pub modes: Option<usize>,
    /// Monte Carlo sample count
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random trials
    #[arg(long)]
    pub trials: Option<usize>,
    /// Exponent p
    #[arg(long)]
    pub p: Option<u32>,
    /// Comma-separated Cameron-Martin norms |h|_H
    #[arg(long = "h-norms", value_delimiter = ',')]
    #[serde(rename = "h-norms")]
    pub h_norms: Option<Vec<f64>>,
    /// Paths for the energy expectation table
    #[arg(long = "table-paths")]
    #[serde(rename = "table-paths")]
    pub table_paths: Option<usize>,
    /// Variant selector (e.g. bott/det, a/p)
    #[arg(long)]
    pub kind: Option<String>,
}

impl Params {
    /// Fields set in `other` replace those in `self`.
    pub fn overlay(self, other: Params) -> Params {
        macro_rules! pick {
            ($($f:ident),*) => { Params { $($f: other.$f.or(self.$f)),* } };
        }
        pick!(beta, betas, c, h, n, r, rs, phase, cutoff, grid, modes, samples, trials, p, h_norms, table_paths, kind)
    }
}

/// One rejected field.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl fmt::Display for FieldError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub Vec<FieldError>);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError(vec![FieldError { field: field.into(), message: message.into() }])
}

/// Values read from a config file: top-level keys, then `[params]`, then the
/// experiment's own section, later ones winning.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub params: Params,
}

pub fn parse_config(text: &str, experiment: &str) -> Result<FileConfig, ConfigError> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| field_err("config", e.message().to_string()))?;
    let mut top = toml::Table::new();
    let mut layers = Vec::new();
    let mut out = FileConfig::default();
    for (k, v) in &table {
        match (k.as_str(), v) {
            ("seed", toml::Value::Integer(s)) if *s >= 0 => out.seed = Some(*s as u64),
            ("seed", _) => return Err(field_err("seed", "must be a nonnegative integer")),
            ("workers", toml::Value::Integer(w)) if *w >= 1 => out.workers = Some(*w as usize),
            ("workers", _) => return Err(field_err("workers", "must be a positive integer")),
            (_, toml::Value::Table(_)) => {}
            _ => {
                top.insert(k.clone(), v.clone());
            }
        }
    }
    layers.push(("(top level)".to_string(), top));
    for name in ["params", experiment] {
        if let Some(v) = table.get(name) {
            match v {
                toml::Value::Table(t) => layers.push((name.to_string(), t.clone())),
                _ => return Err(field_err(name, "expected a section")),
            }
        }
    }
    let mut errors = Vec::new();
    for (name, layer) in layers {
        match Params::deserialize(toml::Value::Table(layer)) {
            Ok(p) => out.params = out.params.clone().overlay(p),
            Err(e) => errors.push(FieldError { field: name, message: e.message().to_string() }),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(ConfigError(errors))
    }
}

pub fn load_config(path: &Path, experiment: &str) -> Result<FileConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| field_err("config", format!("{}: {e}", path.display())))?;
    parse_config(&text, experiment)
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: String,
    pub params: Params,
    pub seed: u64,
    #[serde(skip)]
    pub workers: usize,
}

impl RunConfig {
    /// Range checks on every set field.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let p = &self.params;
        let mut errs = Vec::new();
        let mut bad = |field: &str, msg: &str| errs.push(FieldError { field: field.into(), message: msg.into() });
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if p.beta.is_some_and(|b| !positive(b)) {
            bad("beta", "must be positive");
        }
        if p.betas.as_ref().is_some_and(|v| v.is_empty() || v.iter().any(|&b| !positive(b))) {
            bad("betas", "must be a nonempty list of positive values");
        }
        if p.c.is_some_and(|c| !(c >= 0.0 && c.is_finite())) {
            bad("c", "must be nonnegative");
        }
        if p.h.is_some_and(|h| !(h >= 0.0 && h.is_finite())) {
            bad("h", "must be nonnegative");
        }
        if p.n == Some(0) {
            bad("n", "must be at least 1");
        }
        if p.r.is_some_and(|r| !(0.0..1.0).contains(&r)) {
            bad("r", "must lie in [0, 1)");
        }
        if p.rs.as_ref().is_some_and(|v| v.is_empty() || v.iter().any(|r| !(0.0..1.0).contains(r))) {
            bad("rs", "must be a nonempty list in [0, 1)");
        }
        if p.phase.is_some_and(|x| !x.is_finite()) {
            bad("phase", "must be finite");
        }
        if p.cutoff.is_some_and(|n| n < 2) {
            bad("N", "must be at least 2");
        }
        if p.grid.is_some_and(|m| m < 16) {
            bad("M", "must be at least 16");
        }
        if p.modes == Some(0) {
            bad("modes", "must be at least 1");
        }
        if let (Some(m), Some(k)) = (p.grid, p.modes) {
            if k >= m {
                bad("modes", "must be smaller than M");
            }
        }
        if p.samples == Some(0) {
            bad("samples", "must be at least 1");
        }
        if p.trials == Some(0) {
            bad("trials", "must be at least 1");
        }
        if p.p.is_some_and(|x| x == 0 || x > 8) {
            bad("p", "must be in 1..=8");
        }
        if p.h_norms.as_ref().is_some_and(|v| v.is_empty() || v.iter().any(|&x| !(x >= 0.0 && x.is_finite()))) {
            bad("h-norms", "must be a nonempty list of nonnegative values");
        }
        if p.table_paths == Some(0) {
            bad("table-paths", "must be at least 1");
        }
        if let Some(k) = &p.kind {
            let allowed: &[&str] = match self.experiment.as_str() {
                "blocks" => &["a", "p", "antiperiodic", "periodic"],
                "cocycle-identity" => &["bott", "det"],
                _ => &[],
            };
            if !allowed.contains(&k.as_str()) {
                let msg = if allowed.is_empty() {
                    format!("not used by {}", self.experiment)
                } else {
                    format!("must be one of {}", allowed.join(", "))
                };
                bad("kind", &msg);
            }
        }
        if self.workers == 0 {
            bad("workers", "must be at least 1");
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(ConfigError(errs))
        }
    }

    /// Canonical JSON of (experiment, params, seed); the worker count is not
    /// part of it since results do not depend on scheduling.
    pub fn canonical(&self) -> String {
        serde_json::to_string(self).expect("serializable config")
    }

    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(params: Params) -> RunConfig {
        RunConfig { experiment: "det".into(), params, seed: 1, workers: 1 }
    }

    #[test]
    fn sections_layer_in_order() {
        let text = "seed = 9\nbeta = 1.0\nN = 64\n[params]\nbeta = 2.0\nrs = [0.1, 0.2]\n[det]\nbeta = 3.0\n[other]\nbeta = 4.0\n";
        let cfg = parse_config(text, "det").unwrap();
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.params.beta, Some(3.0));
        assert_eq!(cfg.params.cutoff, Some(64));
        assert_eq!(cfg.params.rs, Some(vec![0.1, 0.2]));
    }

    #[test]
    fn unknown_keys_are_reported_per_section() {
        let err = parse_config("bogus = 1\n[params]\nbeta = \"x\"\n", "det").unwrap_err();
        assert_eq!(err.0.len(), 2);
        assert!(err.0[0].message.contains("bogus"), "{err}");
        assert_eq!(err.0[1].field, "params");
    }

    #[test]
    fn flags_override_file() {
        let file = Params { beta: Some(1.0), samples: Some(10), ..Default::default() };
        let flags = Params { beta: Some(0.5), ..Default::default() };
        let p = file.overlay(flags);
        assert_eq!((p.beta, p.samples), (Some(0.5), Some(10)));
    }

    #[test]
    fn validation_names_fields() {
        let err = run(Params { r: Some(1.5), beta: Some(-1.0), ..Default::default() }).validate().unwrap_err();
        let fields: Vec<_> = err.0.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, ["beta", "r"]);
        assert!(run(Params::default()).validate().is_ok());
        let err = run(Params { kind: Some("bott".into()), ..Default::default() }).validate().unwrap_err();
        assert_eq!(err.0[0].field, "kind");
    }

    #[test]
    fn fingerprint_is_stable_and_ignores_workers() {
        let a = run(Params { r: Some(0.5), ..Default::default() });
        let mut b = a.clone();
        b.workers = 4;
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
        let mut c = a.clone();
        c.seed = 2;
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}

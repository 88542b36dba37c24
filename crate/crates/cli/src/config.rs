//! Run configuration: a TOML file plus command-line overrides.
//!
//! Precedence, lowest first: built-in defaults, the config file, flags.

use std::fmt;
use std::path::{Path, PathBuf};

use qgnn_core::experiments::clustering::{ClusterMode, MAX_CLUSTER_QUBITS};
use qgnn_core::experiments::isomorphism::MAX_ISO_NODES;
use qgnn_core::experiments::{ClusterConfig, DynamicsConfig, GhzConfig, GraphSpec, IsoConfig};
use qgnn_core::optimize::{AdamConfig, NelderMeadConfig, SimplexInit};
use qgnn_core::sim::DEFAULT_DENSE_CAP;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Dynamics,
    Ghz,
    Cluster,
    Isomorphism,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Dynamics => "dynamics",
            Experiment::Ghz => "ghz",
            Experiment::Cluster => "cluster",
            Experiment::Isomorphism => "isomorphism",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Fully resolved configuration of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub out: PathBuf,
    /// Worker threads; 0 picks one per core.
    pub threads: usize,
    pub dynamics: DynamicsConfig,
    pub ghz: GhzConfig,
    pub cluster: ClusterConfig,
    pub isomorphism: IsoConfig,
}

/// What the file may contain; everything is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    experiment: Option<Experiment>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    #[serde(default)]
    dynamics: DynamicsConfig,
    #[serde(default)]
    ghz: GhzConfig,
    #[serde(default)]
    cluster: ClusterConfig,
    #[serde(default)]
    isomorphism: IsoConfig,
}

/// Values given on the command line.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub experiment: Option<Experiment>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted path of the offending field, when known.
    pub field: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.field, self.line) {
            (Some(field), Some(line)) => write!(f, "`{field}` (line {line}): {}", self.message),
            (Some(field), None) => write!(f, "`{field}`: {}", self.message),
            _ => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

pub const DEFAULT_OUT: &str = "runs";

pub fn load_config(path: &Path, overrides: &Overrides) -> anyhow::Result<RunConfig> {
    let src = std::fs::read_to_string(path)
        .map_err(|e| anyhow::anyhow!("cannot read config {}: {e}", path.display()))?;
    parse_config(&src, overrides).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))
}

/// Parses, merges and validates a configuration.
pub fn parse_config(src: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let table: toml::Table = src.parse().map_err(|e: toml::de::Error| ConfigError {
        field: None,
        line: None,
        message: e.to_string(),
    })?;
    // Catch negative integers first so the error names the field instead of
    // reporting a bare type mismatch.
    check_negative(&toml::Value::Table(table), "", src)?;
    let file: FileConfig = toml::from_str(src).map_err(|e: toml::de::Error| ConfigError {
        field: None,
        line: None,
        message: e.to_string(),
    })?;
    let missing = |field: &str| ConfigError {
        field: Some(field.into()),
        line: None,
        message: "required field missing (set it in the file or on the command line)".into(),
    };
    let cfg = RunConfig {
        experiment: overrides.experiment.or(file.experiment).ok_or_else(|| missing("experiment"))?,
        seed: overrides.seed.or(file.seed).ok_or_else(|| missing("seed"))?,
        out: overrides.out.clone().or(file.out).unwrap_or_else(|| DEFAULT_OUT.into()),
        threads: overrides.threads.or(file.threads).unwrap_or(0),
        dynamics: file.dynamics,
        ghz: file.ghz,
        cluster: file.cluster,
        isomorphism: file.isomorphism,
    };
    cfg.validate().map_err(|mut e| {
        if let Some(field) = &e.field {
            e.line = line_of(src, field);
        }
        e
    })?;
    Ok(cfg)
}

impl RunConfig {
    /// The effective configuration as TOML; parsing it back yields `self`.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let d = &self.dynamics;
        graph(&d.graph, "dynamics.graph", DEFAULT_DENSE_CAP)?;
        finite("dynamics.coupling", d.coupling)?;
        finite("dynamics.bias", d.bias)?;
        positive("dynamics.delta", d.delta)?;
        positive("dynamics.t_max", d.t_max)?;
        at_least("dynamics.batch", d.batch, 1)?;
        positive("dynamics.fd_eps", d.fd_eps)?;
        adam("dynamics.adam", &d.adam)?;
        non_negative("dynamics.init_range", d.init_range)?;

        let g = &self.ghz;
        graph(&g.graph, "ghz.graph", 24)?;
        at_least("ghz.depth", g.depth, 1)?;
        positive("ghz.fd_eps", g.fd_eps)?;
        adam("ghz.adam", &g.adam)?;
        non_negative("ghz.init_scale", g.init_scale)?;
        at_least("ghz.restarts", g.restarts, 1)?;
        non_negative("ghz.target_gap", g.target_gap)?;
        at_least("ghz.kickback_points", g.kickback_points, 2)?;

        let c = &self.cluster;
        let n = graph(&c.graph, "cluster.graph", MAX_CLUSTER_QUBITS)?;
        if let ClusterMode::MultiQubit {
            m,
            half_width,
            mu,
            omega,
        } = &c.mode
        {
            at_least("cluster.mode.m", *m, 1)?;
            positive("cluster.mode.half_width", *half_width)?;
            finite("cluster.mode.mu", *mu)?;
            finite("cluster.mode.omega", *omega)?;
            if n.is_some_and(|n| n * m > MAX_CLUSTER_QUBITS) {
                return Err(field_err(
                    "cluster.mode.m",
                    format!("{} nodes x {m} qubits exceeds the {MAX_CLUSTER_QUBITS}-qubit cap", n.unwrap_or(0)),
                ));
            }
        }
        at_least("cluster.depth", c.depth, 1)?;
        positive("cluster.fd_eps", c.fd_eps)?;
        adam("cluster.adam", &c.adam)?;
        non_negative("cluster.init_scale", c.init_scale)?;

        let i = &self.isomorphism;
        if !(2..=MAX_ISO_NODES).contains(&i.n) {
            return Err(field_err("isomorphism.n", format!("must lie in 2..={MAX_ISO_NODES}")));
        }
        if !(i.edge_probability > 0.0 && i.edge_probability <= 1.0) {
            return Err(field_err("isomorphism.edge_probability", "must lie in (0, 1]".into()));
        }
        at_least("isomorphism.depth", i.depth, 1)?;
        for (name, size) in [
            ("isomorphism.train_pairs", i.train_pairs),
            ("isomorphism.val_pairs", i.val_pairs),
            ("isomorphism.test_pairs", i.test_pairs),
        ] {
            at_least(name, size, 2)?;
            if size % 2 != 0 {
                return Err(field_err(name, "must be even so the classes balance".into()));
            }
        }
        if !(0.0..=1.0).contains(&i.threshold) {
            return Err(field_err("isomorphism.threshold", "must lie in [0, 1]".into()));
        }
        at_least("isomorphism.init_candidates", i.init_candidates, 1)?;
        non_negative("isomorphism.init_scale", i.init_scale)?;
        nelder_mead("isomorphism.nelder_mead", &i.nelder_mead)?;
        Ok(())
    }
}

fn field_err(field: &str, message: String) -> ConfigError {
    ConfigError {
        field: Some(field.into()),
        line: None,
        message,
    }
}

fn finite(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(field_err(field, format!("must be finite, got {v}")))
    }
}

fn positive(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("must be positive, got {v}")))
    }
}

fn non_negative(field: &str, v: f64) -> Result<(), ConfigError> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(field_err(field, format!("must be non-negative, got {v}")))
    }
}

fn at_least(field: &str, v: usize, min: usize) -> Result<(), ConfigError> {
    if v >= min {
        Ok(())
    } else {
        Err(field_err(field, format!("must be at least {min}, got {v}")))
    }
}

fn adam(prefix: &str, a: &AdamConfig) -> Result<(), ConfigError> {
    positive(&format!("{prefix}.lr"), a.lr)?;
    for (name, b) in [("beta1", a.beta1), ("beta2", a.beta2)] {
        if !(0.0..1.0).contains(&b) {
            return Err(field_err(&format!("{prefix}.{name}"), format!("must lie in [0, 1), got {b}")));
        }
    }
    positive(&format!("{prefix}.epsilon"), a.epsilon)
}

fn nelder_mead(prefix: &str, nm: &NelderMeadConfig) -> Result<(), ConfigError> {
    at_least(&format!("{prefix}.max_evals"), nm.max_evals, 1)?;
    non_negative(&format!("{prefix}.diameter_tol"), nm.diameter_tol)?;
    positive(&format!("{prefix}.reflection"), nm.reflection)?;
    if nm.expansion <= nm.reflection.max(1.0) {
        return Err(field_err(&format!("{prefix}.expansion"), "must exceed 1 and the reflection".into()));
    }
    for (name, v) in [("contraction", nm.contraction), ("shrink", nm.shrink)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(field_err(&format!("{prefix}.{name}"), format!("must lie in (0, 1), got {v}")));
        }
    }
    match nm.init {
        SimplexInit::Relative { nonzero, zero } => {
            positive(&format!("{prefix}.init.relative.nonzero"), nonzero)?;
            positive(&format!("{prefix}.init.relative.zero"), zero)
        }
        SimplexInit::Absolute { step } => positive(&format!("{prefix}.init.absolute.step"), step),
    }
}

/// Checks a graph spec and returns its node count when known up front.
fn graph(spec: &GraphSpec, field: &str, cap: usize) -> Result<Option<usize>, ConfigError> {
    let n = match spec {
        GraphSpec::Path { n } | GraphSpec::Ring { n } | GraphSpec::Complete { n } => Some(*n),
        GraphSpec::BridgedTriangles => Some(6),
        GraphSpec::ErdosRenyi { n, p } => {
            if !(*p > 0.0 && *p <= 1.0) {
                return Err(field_err(&format!("{field}.p"), "must lie in (0, 1]".into()));
            }
            Some(*n)
        }
        GraphSpec::Edges { n, edges } => {
            if let Some((j, k)) = edges.iter().find(|(j, k)| j == k || *j >= *n || *k >= *n) {
                return Err(field_err(&format!("{field}.edges"), format!("invalid edge ({j}, {k})")));
            }
            Some(*n)
        }
    };
    if let Some(n) = n {
        let min = if matches!(spec, GraphSpec::Ring { .. }) { 3 } else { 1 };
        if n < min || n > cap {
            return Err(field_err(&format!("{field}.n"), format!("must lie in {min}..={cap}, got {n}")));
        }
    }
    Ok(n)
}

fn check_negative(v: &toml::Value, path: &str, src: &str) -> Result<(), ConfigError> {
    match v {
        toml::Value::Integer(i) if *i < 0 => Err(ConfigError {
            field: Some(path.into()),
            line: line_of(src, path),
            message: format!("must be non-negative, got {i}"),
        }),
        toml::Value::Table(t) => {
            for (k, v) in t {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                check_negative(v, &p, src)?;
            }
            Ok(())
        }
        toml::Value::Array(items) => items.iter().try_for_each(|x| check_negative(x, path, src)),
        _ => Ok(()),
    }
}

/// Best-effort 1-based line of a dotted key: the first `key =` line inside
/// the deepest matching `[table]` header, or a dotted/inline form anywhere.
fn line_of(src: &str, dotted: &str) -> Option<usize> {
    let parts: Vec<&str> = dotted.split('.').collect();
    let mut section: Vec<String> = Vec::new();
    let mut fallback = None;
    for (i, raw) in src.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            section = h.trim_matches(['[', ']']).split('.').map(|s| s.trim().to_string()).collect();
            continue;
        }
        let Some((key, _)) = line.split_once('=') else {
            continue;
        };
        let mut full: Vec<String> = section.clone();
        full.extend(key.split('.').map(|s| s.trim().trim_matches('"').to_string()));
        if full.iter().map(String::as_str).eq(parts.iter().copied()) {
            return Some(i + 1);
        }
        // Inline tables: the parent key is on this line and the leaf appears in it.
        if fallback.is_none()
            && parts.len() > full.len()
            && full.iter().map(String::as_str).eq(parts[..full.len()].iter().copied())
            && line.contains(parts[parts.len() - 1])
        {
            fallback = Some(i + 1);
        }
    }
    fallback
}

//! Declarative experiment configuration.
//!
//! Configurations come from three layers, later layers overriding earlier
//! ones: per-experiment defaults, an optional flat `key = value` file, and
//! command-line flags. Lists are comma-separated. Unknown keys are
//! rejected so typos fail loudly.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::cs::BpdnSettings;
use crate::ensembles::{EnsembleKind, EnsembleSpec};
use crate::error::{Error, Result};
use crate::harness::stats::log_grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ExperimentKind {
    FrameError,
    ConstantTerm,
    FourierPlateau,
    CsTwoStage,
    MuStudy,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::FrameError => "frame",
            ExperimentKind::ConstantTerm => "constant-term",
            ExperimentKind::FourierPlateau => "fourier",
            ExperimentKind::CsTwoStage => "cs",
            ExperimentKind::MuStudy => "mu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "frame" => Ok(ExperimentKind::FrameError),
            "constant-term" => Ok(ExperimentKind::ConstantTerm),
            "fourier" => Ok(ExperimentKind::FourierPlateau),
            "cs" => Ok(ExperimentKind::CsTwoStage),
            "mu" => Ok(ExperimentKind::MuStudy),
            other => Err(Error::Config(format!("unknown experiment '{other}'"))),
        }
    }
}

/// How the signal is produced for a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum SignalSpec {
    /// Seeded Gaussian direction normalized to unit norm; fixed across all
    /// trials of a run.
    FixedUnitNorm,
    /// Explicit coordinates.
    Explicit(Vec<f64>),
    /// Fresh k-sparse signal per trial with entries `+-1/sqrt(k)`
    /// (compressed-sensing runs only).
    SparsePm,
    /// `(c, 0, ..., 0)`: every partial-DFT measurement equals `c`.
    Spike(f64),
}

impl SignalSpec {
    pub fn parse(s: &str) -> Result<Self> {
        if s == "fixed-unit-norm" {
            return Ok(SignalSpec::FixedUnitNorm);
        }
        if s == "sparse-pm" {
            return Ok(SignalSpec::SparsePm);
        }
        if let Some(c) = s.strip_prefix("spike:") {
            let c: f64 = c
                .parse()
                .map_err(|_| Error::Config(format!("bad spike amplitude '{c}'")))?;
            return Ok(SignalSpec::Spike(c));
        }
        if let Some(list) = s.strip_prefix("explicit:") {
            return Ok(SignalSpec::Explicit(parse_f64_list(list)?));
        }
        Err(Error::Config(format!(
            "unknown signal '{s}' (expected fixed-unit-norm, sparse-pm, spike:<c>, or explicit:<v1,v2,...>)"
        )))
    }
}

fn parse_ensemble(s: &str) -> Result<EnsembleKind> {
    match s {
        "gaussian" => Ok(EnsembleKind::Gaussian),
        "bernoulli" => Ok(EnsembleKind::Bernoulli),
        "sphere-rows" => Ok(EnsembleKind::SphereRows),
        "partial-dft" => Ok(EnsembleKind::PartialDft),
        other => Err(Error::Config(format!("unknown ensemble '{other}'"))),
    }
}

/// Fully resolved description of one run.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub ensemble: EnsembleKind,
    /// Signal dimension (frame experiments) or sparsity (CS experiment).
    pub k: usize,
    /// Ambient dimension: `N` of the DFT matrix or of the sparse signal.
    pub ambient_n: usize,
    pub lambdas: Vec<f64>,
    pub deltas: Vec<f64>,
    pub trials: u64,
    pub master_seed: u64,
    pub signal: SignalSpec,
    /// Sub-Gaussian constant `c_K` used by band evaluations.
    pub c_k_ensemble: f64,
    /// Failure-probability split `c2` used by band evaluations.
    pub c2: f64,
    /// Documentation-only decay exponent carried into the sidecar JSON.
    pub alpha_doc: f64,
    /// Fraction of trials allowed to fail before the run is reported as
    /// non-converged.
    pub failure_budget: f64,
    /// Allow the Bernoulli + delta = 0.1 combination that support recovery
    /// is known to reject in the CS experiment.
    pub allow_bernoulli_coarse_delta: bool,
    pub tol_feas: f64,
    pub tol_obj: f64,
    pub max_iter: usize,
    pub output_path: Option<PathBuf>,
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn defaults_for(kind: ExperimentKind) -> Self {
        let base = Self {
            experiment: kind,
            ensemble: EnsembleKind::Gaussian,
            k: 20,
            ambient_n: 0,
            lambdas: Vec::new(),
            deltas: Vec::new(),
            trials: 200,
            master_seed: 1,
            signal: SignalSpec::FixedUnitNorm,
            c_k_ensemble: 1.0,
            c2: 0.05,
            alpha_doc: 0.0,
            failure_budget: 0.01,
            allow_bernoulli_coarse_delta: false,
            tol_feas: 1e-8,
            tol_obj: 1e-6,
            max_iter: 50_000,
            output_path: None,
            threads: None,
        };
        match kind {
            ExperimentKind::FrameError => Self {
                lambdas: log_grid(1.0, 100.0, 10),
                deltas: vec![0.01, 0.05, 0.1],
                ..base
            },
            ExperimentKind::ConstantTerm => {
                let mut lambdas = log_grid(10.0, 1000.0, 10);
                lambdas.push(500.0);
                lambdas.sort_by(|a, b| a.partial_cmp(b).unwrap());
                Self { lambdas, deltas: vec![4.0], ..base }
            }
            ExperimentKind::FourierPlateau => Self {
                ensemble: EnsembleKind::PartialDft,
                ambient_n: 100_000,
                lambdas: log_grid(10.0, 1000.0, 10),
                deltas: vec![0.01],
                trials: 100,
                // scenario-D style spike: every measurement equals c, and
                // the plateau equals |c - q(c)| = 0.46 delta at delta 0.01
                signal: SignalSpec::Spike(0.9954),
                ..base
            },
            ExperimentKind::CsTwoStage => Self {
                ambient_n: 1000,
                lambdas: log_grid(5.0, 25.0, 6),
                deltas: vec![0.01, 0.05],
                trials: 100,
                signal: SignalSpec::SparsePm,
                ..base
            },
            ExperimentKind::MuStudy => Self {
                lambdas: vec![50.0],
                deltas: vec![4.0],
                trials: 200_000,
                ..base
            },
        }
    }

    /// Applies `key = value` pairs from a flat config file.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "{}:{}: expected 'key = value', got '{raw}'",
                    path.display(),
                    lineno + 1
                )));
            };
            self.apply_kv(key.trim(), value.trim()).map_err(|e| {
                Error::Config(format!("{}:{}: {e}", path.display(), lineno + 1))
            })?;
        }
        Ok(())
    }

    /// Applies one override.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "experiment" => self.experiment = ExperimentKind::parse(value)?,
            "ensemble" => self.ensemble = parse_ensemble(value)?,
            "k" => self.k = parse_num(key, value)?,
            "ambient_n" => self.ambient_n = parse_num(key, value)?,
            "lambdas" => self.lambdas = parse_f64_list(value)?,
            "deltas" => self.deltas = parse_f64_list(value)?,
            "trials" => self.trials = parse_num(key, value)?,
            "seed" | "master_seed" => self.master_seed = parse_num(key, value)?,
            "signal" => self.signal = SignalSpec::parse(value)?,
            "c_k" | "c_k_ensemble" => self.c_k_ensemble = parse_num(key, value)?,
            "c2" => self.c2 = parse_num(key, value)?,
            "alpha" | "alpha_doc" => self.alpha_doc = parse_num(key, value)?,
            "failure_budget" => self.failure_budget = parse_num(key, value)?,
            "allow_bernoulli_coarse_delta" => {
                self.allow_bernoulli_coarse_delta = parse_num::<i64>(key, value)? != 0
            }
            "tol_feas" => self.tol_feas = parse_num(key, value)?,
            "tol_obj" => self.tol_obj = parse_num(key, value)?,
            "max_iter" => self.max_iter = parse_num(key, value)?,
            "out" | "output_path" => self.output_path = Some(PathBuf::from(value)),
            "threads" => self.threads = Some(parse_num(key, value)?),
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            kind: self.ensemble,
            ambient_n: self.ambient_n,
            subgaussian_norm_k: 1.0,
        }
    }

    pub fn solver_settings(&self) -> BpdnSettings {
        BpdnSettings {
            tol_feas: self.tol_feas,
            tol_obj: self.tol_obj,
            max_iter: self.max_iter,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |field: &str, msg: String| -> Result<()> {
            Err(Error::Config(format!("{field}: {msg}")))
        };
        if self.k == 0 {
            return fail("k", "must be at least 1".into());
        }
        if self.trials == 0 {
            return fail("trials", "must be at least 1".into());
        }
        if self.lambdas.is_empty() {
            return fail("lambdas", "must contain at least one value".into());
        }
        for &l in &self.lambdas {
            if !(l >= 1.0 && l.is_finite()) {
                return fail("lambdas", format!("every lambda must be >= 1, got {l}"));
            }
        }
        if self.deltas.is_empty() {
            return fail("deltas", "must contain at least one value".into());
        }
        for &d in &self.deltas {
            if !(d > 0.0 && d.is_finite()) {
                return fail("deltas", format!("every delta must be positive, got {d}"));
            }
        }
        if !(self.failure_budget >= 0.0 && self.failure_budget <= 1.0) {
            return fail("failure_budget", format!("must lie in [0,1], got {}", self.failure_budget));
        }
        let max_m = self
            .lambdas
            .iter()
            .map(|&l| (l * self.k as f64).round() as usize)
            .max()
            .unwrap_or(0);
        match self.experiment {
            ExperimentKind::FrameError | ExperimentKind::ConstantTerm => {
                if self.ensemble == EnsembleKind::PartialDft {
                    return fail("ensemble", "this experiment runs on the real ensembles".into());
                }
                if self.experiment == ExperimentKind::ConstantTerm && self.k < 3 {
                    return fail("k", "bands require k >= 3".into());
                }
            }
            ExperimentKind::FourierPlateau => {
                if self.ensemble != EnsembleKind::PartialDft {
                    return fail("ensemble", "the fourier experiment requires partial-dft".into());
                }
                if self.ambient_n < max_m {
                    return fail(
                        "ambient_n",
                        format!("N = {} is below the largest m = {max_m}", self.ambient_n),
                    );
                }
            }
            ExperimentKind::CsTwoStage => {
                if self.ensemble == EnsembleKind::PartialDft {
                    return fail("ensemble", "the cs experiment runs on the real ensembles".into());
                }
                if self.ambient_n <= self.k {
                    return fail(
                        "ambient_n",
                        format!("N = {} must exceed the sparsity k = {}", self.ambient_n, self.k),
                    );
                }
                if self.ensemble == EnsembleKind::Bernoulli
                    && !self.allow_bernoulli_coarse_delta
                    && self.deltas.iter().any(|&d| (d - 0.1).abs() < 1e-12)
                {
                    return fail(
                        "deltas",
                        "delta = 0.1 with the Bernoulli ensemble does not meet the support-recovery \
                         condition and is excluded by default (set allow_bernoulli_coarse_delta = 1 \
                         to override)"
                            .into(),
                    );
                }
                if !matches!(self.signal, SignalSpec::SparsePm) {
                    return fail("signal", "the cs experiment uses signal = sparse-pm".into());
                }
            }
            ExperimentKind::MuStudy => {}
        }
        if self.experiment != ExperimentKind::CsTwoStage {
            if let SignalSpec::Explicit(v) = &self.signal {
                if v.len() != self.k {
                    return fail(
                        "signal",
                        format!("explicit signal has {} entries but k = {}", v.len(), self.k),
                    );
                }
            }
            if matches!(self.signal, SignalSpec::SparsePm) {
                return fail("signal", "sparse-pm is only for the cs experiment".into());
            }
        }
        Ok(())
    }

    /// Key-value view used for the sidecar JSON.
    pub fn resolved_map(&self) -> BTreeMap<String, serde_json::Value> {
        let mut m = BTreeMap::new();
        let v = serde_json::to_value(self).expect("config serializes");
        if let serde_json::Value::Object(o) = v {
            for (k, val) in o {
                m.insert(k, val);
            }
        }
        m
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value '{value}' for {key}")))
}

fn parse_f64_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad list entry '{t}'")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for kind in [
            ExperimentKind::FrameError,
            ExperimentKind::ConstantTerm,
            ExperimentKind::FourierPlateau,
            ExperimentKind::CsTwoStage,
            ExperimentKind::MuStudy,
        ] {
            ExperimentConfig::defaults_for(kind).validate().unwrap();
        }
    }

    #[test]
    fn kv_overrides() {
        let mut c = ExperimentConfig::defaults_for(ExperimentKind::FrameError);
        c.apply_kv("deltas", "0.5, 0.25").unwrap();
        c.apply_kv("trials", "7").unwrap();
        c.apply_kv("signal", "spike:0.33").unwrap();
        assert_eq!(c.deltas, vec![0.5, 0.25]);
        assert_eq!(c.trials, 7);
        assert_eq!(c.signal, SignalSpec::Spike(0.33));
        assert!(c.apply_kv("nonsense", "1").is_err());
    }

    #[test]
    fn bernoulli_coarse_delta_is_rejected() {
        let mut c = ExperimentConfig::defaults_for(ExperimentKind::CsTwoStage);
        c.ensemble = EnsembleKind::Bernoulli;
        c.deltas = vec![0.05, 0.1];
        assert!(c.validate().is_err());
        c.allow_bernoulli_coarse_delta = true;
        c.validate().unwrap();
    }

    #[test]
    fn field_level_messages() {
        let mut c = ExperimentConfig::defaults_for(ExperimentKind::FrameError);
        c.lambdas = vec![0.5];
        let err = c.validate().unwrap_err().to_string();
        assert!(err.contains("lambdas"), "{err}");
    }
}

//! Experiment configuration files.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use basepc::adaptation::{RunConfig, SampleMode};
use basepc::qoi::{lookup, QoiSpec};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    BasePcSa,
    BasePcNoSa,
    TotalOrder(usize),
}

impl Method {
    /// File-name friendly label.
    pub fn label(self) -> String {
        match self {
            Method::BasePcSa => "base_pc_sa".into(),
            Method::BasePcNoSa => "base_pc_no_sa".into(),
            Method::TotalOrder(p) => format!("total_order_{p}"),
        }
    }

    /// `base` with the sampling mode and basis policy of this method.
    pub fn apply(self, base: &RunConfig) -> RunConfig {
        let mut cfg = base.clone();
        match self {
            Method::BasePcSa => {
                cfg.sample_mode = SampleMode::SampleAdaptive;
                cfg.fixed_order = None;
            }
            Method::BasePcNoSa => {
                cfg.sample_mode = SampleMode::Orthogonality;
                cfg.fixed_order = None;
            }
            Method::TotalOrder(p) => {
                cfg.sample_mode = SampleMode::Orthogonality;
                cfg.fixed_order = Some(p);
            }
        }
        cfg
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::BasePcSa => f.write_str("base_pc_sa"),
            Method::BasePcNoSa => f.write_str("base_pc_no_sa"),
            Method::TotalOrder(p) => write!(f, "total_order:{p}"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "base_pc_sa" => Ok(Method::BasePcSa),
            "base_pc_no_sa" => Ok(Method::BasePcNoSa),
            _ => {
                let p = s
                    .strip_prefix("total_order:")
                    .ok_or_else(|| format!("unknown method {s:?}; expected base_pc_sa, base_pc_no_sa or total_order:P"))?;
                p.trim()
                    .parse()
                    .map(Method::TotalOrder)
                    .map_err(|_| format!("total order in {s:?} must be a nonnegative integer"))
            }
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Contents of an experiment file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub qoi: String,
    /// Dimension, for QoIs where it is free.
    pub d: Option<usize>,
    /// Method for `run`.
    pub method: Option<Method>,
    /// Methods for `compare`.
    #[serde(default)]
    pub methods: Vec<Method>,
    #[serde(default)]
    pub seed: u64,
    /// Reference points for the true RRMSE; none when unset.
    pub n_ref: Option<usize>,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub run: RunConfig,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n_ref: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path, over: &Overrides) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        if let Some(s) = over.seed {
            cfg.seed = s;
        }
        if let Some(o) = &over.out {
            cfg.out = Some(o.clone());
        }
        if let Some(n) = over.n_ref {
            cfg.n_ref = Some(n);
        }
        cfg.run.seed = cfg.seed;
        cfg.run.n_ref = cfg.n_ref;
        cfg.run.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn qoi(&self) -> Result<QoiSpec, CliError> {
        lookup(&self.qoi, self.d).map_err(|e| CliError::Config(format!("qoi: {e}")))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("basepc-out"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in [Method::BasePcSa, Method::BasePcNoSa, Method::TotalOrder(0), Method::TotalOrder(8)] {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("total_order:-1".parse::<Method>().is_err());
        assert!("lasso".parse::<Method>().is_err());
    }

    #[test]
    fn parses_nested_run_table() {
        let cfg = ExperimentConfig::parse(
            "qoi = \"franke\"\nmethod = \"total_order:3\"\nseed = 4\n[run]\nmax_iterations = 2\n[run.cv]\nfolds = 5\n",
        )
        .unwrap();
        assert_eq!(cfg.method, Some(Method::TotalOrder(3)));
        assert_eq!(cfg.run.max_iterations, 2);
        assert_eq!(cfg.run.cv.folds, 5);
        assert_eq!(cfg.run.gamma, RunConfig::default().gamma);
    }

    #[test]
    fn missing_and_unknown_fields_are_named() {
        let e = ExperimentConfig::parse("method = \"base_pc_sa\"\n").unwrap_err();
        assert!(e.to_string().contains("qoi"), "{e}");
        let e = ExperimentConfig::parse("qoi = \"franke\"\n[run]\nmax_iteration = 3\n").unwrap_err();
        assert!(e.to_string().contains("max_iteration"), "{e}");
    }

    #[test]
    fn methods_set_sampling() {
        let base = RunConfig::default();
        let to = Method::TotalOrder(2).apply(&base);
        assert_eq!((to.sample_mode, to.fixed_order), (SampleMode::Orthogonality, Some(2)));
        let sa = Method::BasePcSa.apply(&to);
        assert_eq!((sa.sample_mode, sa.fixed_order), (SampleMode::SampleAdaptive, None));
    }
}

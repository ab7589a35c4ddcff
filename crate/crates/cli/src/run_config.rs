//! Run configuration: a JSON document optionally overridden by flags.

use std::path::{Path, PathBuf};

use geodequiv::catalog::{self, CatalogEntry};
use geodequiv::config::PairConfig;
use geodequiv::levi_civita::LcSpecConfig;
use geodequiv::verify::SuiteOptions;
use serde::Deserialize;

use crate::CliError;

/// Where the metric pair comes from.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum PairSource {
    Name(String),
    LeviCivita(LcSpecConfig),
    Inline(PairConfig),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub pair: Option<PairSource>,
    pub seed: Option<u64>,
    pub tol_drift: Option<f64>,
    pub tol_bracket: Option<f64>,
    pub rank_tol: Option<f64>,
    pub trajectories: Option<usize>,
    pub t_end: Option<f64>,
    pub points: Option<usize>,
    pub samples: Option<usize>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    /// Fill unset fields from `other`.
    pub fn or(self, other: RunConfig) -> RunConfig {
        RunConfig {
            pair: self.pair.or(other.pair),
            seed: self.seed.or(other.seed),
            tol_drift: self.tol_drift.or(other.tol_drift),
            tol_bracket: self.tol_bracket.or(other.tol_bracket),
            rank_tol: self.rank_tol.or(other.rank_tol),
            trajectories: self.trajectories.or(other.trajectories),
            t_end: self.t_end.or(other.t_end),
            points: self.points.or(other.points),
            samples: self.samples.or(other.samples),
            format: self.format.or(other.format),
            out: self.out.or(other.out),
        }
    }

    pub fn suite_options(&self) -> Result<SuiteOptions, CliError> {
        let d = SuiteOptions::default();
        let opts = SuiteOptions {
            seed: self.seed.unwrap_or(d.seed),
            trajectories: self.trajectories.unwrap_or(d.trajectories),
            points: self.points.unwrap_or(d.points),
            t_end: self.t_end.unwrap_or(d.t_end),
            tol_drift: self.tol_drift.unwrap_or(d.tol_drift),
            tol_bracket: self.tol_bracket.unwrap_or(d.tol_bracket),
            rank_tol: self.rank_tol.unwrap_or(d.rank_tol),
            samples: self.samples.unwrap_or(d.samples),
            ..d
        };
        opts.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(opts)
    }

    pub fn entry(&self) -> Result<CatalogEntry, CliError> {
        let usage = |e: geodequiv::Error| CliError::Usage(e.to_string());
        match &self.pair {
            None => Err(CliError::Usage("no pair given; use --pair or a config file".into())),
            Some(PairSource::Name(name)) => catalog::lookup(name).map_err(usage),
            Some(PairSource::LeviCivita(cfg)) => {
                let spec = cfg.build().map_err(usage)?;
                Ok(CatalogEntry {
                    name: "inline-lc".into(),
                    pair: spec.build_pair().map_err(usage)?,
                    lc_spec: Some(spec),
                    equivalent: true,
                    description: "Levi-Civita pair from the run config".into(),
                })
            }
            Some(PairSource::Inline(cfg)) => Ok(CatalogEntry {
                name: "inline".into(),
                pair: cfg.build().map_err(usage)?,
                lc_spec: None,
                equivalent: true,
                description: "metric pair from the run config".into(),
            }),
        }
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sources() {
        let c: RunConfig = serde_json::from_str(r#"{"pair": "flat:2", "seed": 3}"#).unwrap();
        assert!(matches!(c.pair, Some(PairSource::Name(_))));
        assert_eq!(c.entry().unwrap().pair.dim(), 2);
        let c: RunConfig = serde_json::from_str(
            r#"{"pair": {"coordinates": ["u", "v"], "g": {"g[1][1]": "1", "g[2][2]": "1"},
                "gbar": {"g[1][1]": "2", "g[2][2]": "2"}}}"#,
        )
        .unwrap();
        assert!(matches!(c.pair, Some(PairSource::Inline(_))));
        c.entry().unwrap();
        let c: RunConfig = serde_json::from_str(
            r#"{"pair": {"sizes": [1, 1], "phi": ["1 + 0.1*sin(x1)", 3],
                "blocks": [{"g[1][1]": "1"}, {"g[1][1]": "1"}]}}"#,
        )
        .unwrap();
        assert!(matches!(c.pair, Some(PairSource::LeviCivita(_))));
        assert!(c.entry().unwrap().lc_spec.is_some());
    }

    #[test]
    fn overrides_and_validation() {
        let flags = RunConfig { seed: Some(9), ..RunConfig::default() };
        let file = RunConfig { seed: Some(1), points: Some(4), ..RunConfig::default() };
        let merged = flags.or(file);
        assert_eq!(merged.seed, Some(9));
        assert_eq!(merged.points, Some(4));
        let bad = RunConfig { trajectories: Some(0), ..RunConfig::default() };
        assert!(matches!(bad.suite_options(), Err(CliError::Usage(_))));
        assert!(serde_json::from_str::<RunConfig>(r#"{"sed": 1}"#).is_err());
    }
}

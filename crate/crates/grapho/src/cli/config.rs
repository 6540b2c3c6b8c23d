use std::path::PathBuf;

use grapho_core::{FitConfig, GwConfig, MotifFactor, OracleConfig};
use serde::{Deserialize, Serialize};

/// Lambda values visited by `train --lambda-sweep` unless the config lists
/// its own.
pub const DEFAULT_LAMBDA_SWEEP: [f64; 5] = [0.0, 0.05, 0.5, 1.0, 6.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    #[default]
    Tudataset,
    Edgelist,
}

/// Every setting a run depends on. Written back as `resolved_config.json`;
/// passing that file to `--config` replays the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed, copied into every nested seed field on resolution.
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,

    pub input: Option<PathBuf>,
    pub format: CorpusFormat,
    /// Fail on a TUDataset directory without a graph labels file.
    pub require_labels: bool,

    pub oracle: OracleConfig,
    /// Precomputed oracle graphon; estimated from `input` when absent.
    pub oracle_file: Option<PathBuf>,

    pub fit: FitConfig,
    pub bases: usize,
    pub basis_size: usize,
    pub lambda: f64,
    /// Train once per value instead of once at `lambda`.
    pub lambda_sweep: Option<Vec<f64>>,

    pub graphon: Option<PathBuf>,
    pub nodes: usize,
    pub count: usize,

    /// Second corpus for `distance`.
    pub other: Option<PathBuf>,
    /// Solver for the discrepancy between the two estimated oracles.
    pub gw: GwConfig,

    pub predicted: Option<PathBuf>,
    pub bases_file: Option<PathBuf>,
    /// Resample both graphons to this size before the cut norm.
    pub resolution: Option<usize>,
    pub motif_factor: MotifFactor,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            threads: None,
            out: PathBuf::from("out"),
            input: None,
            format: CorpusFormat::default(),
            require_labels: true,
            oracle: OracleConfig::default(),
            oracle_file: None,
            fit: FitConfig::default(),
            bases: 32,
            basis_size: 50,
            lambda: 1.0,
            lambda_sweep: None,
            graphon: None,
            nodes: 100,
            count: 10,
            other: None,
            gw: GwConfig::default(),
            predicted: None,
            bases_file: None,
            resolution: None,
            motif_factor: MotifFactor::default(),
        }
    }
}

impl RunConfig {
    pub(crate) fn propagate_seed(&mut self) {
        self.oracle.seed = self.seed;
        self.oracle.gw.seed = self.seed;
        self.fit.seed = self.seed;
        self.fit.gw.seed = self.seed;
        self.gw.seed = self.seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_config_keeps_defaults() {
        let cfg: RunConfig = serde_json::from_str(r#"{"oracle": {"oracle_size": 12}, "format": "edgelist"}"#).unwrap();
        assert_eq!(cfg.oracle.oracle_size, 12);
        assert_eq!(cfg.oracle.barycenter_iters, OracleConfig::default().barycenter_iters);
        assert_eq!(cfg.format, CorpusFormat::Edgelist);
        assert_eq!(cfg.bases, 32);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"oracel": {}}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"fit": {"rate": 1}}"#).is_err());
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig { lambda_sweep: Some(DEFAULT_LAMBDA_SWEEP.to_vec()), ..RunConfig::default() };
        let back: RunConfig = serde_json::from_str(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }
}

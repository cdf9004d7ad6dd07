//! Config file support. Keys mirror the long flag names; flags win.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use wimotion::fusion::TrainConfig;

use crate::CliError;

const KNOWN_KEYS: &[&str] = &[
    "threads", "seed", "per-class", "subjects", "out", "data", "model", "in", "report", "label",
    "subject", "rate", "scaled", "sizes", "total", "seeds", "c", "c-amp", "c-phase", "sigma-amp",
    "sigma-phase", "wma-window", "dwt-levels", "tx", "rx", "rx-a", "rx-b", "weights", "tol",
    "max-iter",
];

#[derive(Debug, Default, Clone, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FileConfig {
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub per_class: Option<usize>,
    pub subjects: Option<usize>,
    pub out: Option<PathBuf>,
    pub data: Option<PathBuf>,
    pub model: Option<PathBuf>,
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub label: Option<String>,
    pub subject: Option<String>,
    pub rate: Option<f64>,
    pub scaled: Option<bool>,
    pub sizes: Option<Vec<usize>>,
    pub total: Option<bool>,
    pub seeds: Option<Vec<u64>>,
    #[serde(flatten)]
    pub hyper: HyperParams,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        let bad = |e: String| CliError::Usage(format!("config {}: {e}", path.display()));
        let table: toml::Table = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        if let Some(key) = table.keys().find(|k| !KNOWN_KEYS.contains(&k.as_str())) {
            return Err(bad(format!("unknown key `{key}`")));
        }
        table.try_into().map_err(|e: toml::de::Error| bad(e.to_string()))
    }
}

/// Hyperparameter overrides shared by `train` and `curve`.
#[derive(Debug, Default, Clone, PartialEq, Serialize, Deserialize, clap::Args)]
#[serde(rename_all = "kebab-case")]
pub struct HyperParams {
    /// SVM box constraint for both streams
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub c_amp: Option<f64>,
    #[arg(long)]
    pub c_phase: Option<f64>,
    /// Kernel bandwidth of the amplitude stream (default: median distance)
    #[arg(long)]
    pub sigma_amp: Option<f64>,
    /// Kernel bandwidth of the phase stream (default: median distance)
    #[arg(long)]
    pub sigma_phase: Option<f64>,
    /// WMA window length
    #[arg(long)]
    pub wma_window: Option<usize>,
    #[arg(long)]
    pub dwt_levels: Option<usize>,
    /// Transmit antenna used by both streams
    #[arg(long)]
    pub tx: Option<usize>,
    /// Receive antenna of the amplitude stream
    #[arg(long)]
    pub rx: Option<usize>,
    /// Receive antennas differenced by the phase stream
    #[arg(long)]
    pub rx_a: Option<usize>,
    #[arg(long)]
    pub rx_b: Option<usize>,
    /// Fusion weights as AMP,PHASE
    #[arg(long, value_delimiter = ',')]
    pub weights: Option<Vec<f64>>,
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
}

impl HyperParams {
    /// Fields set here take precedence over `fallback`.
    pub fn or(&self, fallback: &HyperParams) -> HyperParams {
        HyperParams {
            c: self.c.or(fallback.c),
            c_amp: self.c_amp.or(fallback.c_amp),
            c_phase: self.c_phase.or(fallback.c_phase),
            sigma_amp: self.sigma_amp.or(fallback.sigma_amp),
            sigma_phase: self.sigma_phase.or(fallback.sigma_phase),
            wma_window: self.wma_window.or(fallback.wma_window),
            dwt_levels: self.dwt_levels.or(fallback.dwt_levels),
            tx: self.tx.or(fallback.tx),
            rx: self.rx.or(fallback.rx),
            rx_a: self.rx_a.or(fallback.rx_a),
            rx_b: self.rx_b.or(fallback.rx_b),
            weights: self.weights.clone().or_else(|| fallback.weights.clone()),
            tol: self.tol.or(fallback.tol),
            max_iter: self.max_iter.or(fallback.max_iter),
        }
    }

    pub fn train_config(&self) -> Result<TrainConfig, CliError> {
        let mut cfg = TrainConfig::default();
        if let Some(c) = self.c {
            cfg.c_amp = c;
            cfg.c_phase = c;
        }
        if let Some(c) = self.c_amp {
            cfg.c_amp = c;
        }
        if let Some(c) = self.c_phase {
            cfg.c_phase = c;
        }
        for (name, c) in [("c-amp", cfg.c_amp), ("c-phase", cfg.c_phase)] {
            if !(c > 0.0 && c.is_finite()) {
                return Err(CliError::Usage(format!("--{name} must be positive, got {c}")));
            }
        }
        cfg.sigma_amp = self.sigma_amp;
        cfg.sigma_phase = self.sigma_phase;
        let f = &mut cfg.features;
        if let Some(m) = self.wma_window {
            f.amplitude.wma_window = m;
        }
        if let Some(l) = self.dwt_levels {
            f.amplitude.dwt_levels = l;
        }
        if let Some(tx) = self.tx {
            f.amplitude.tx = tx;
            f.phase.tx = tx;
        }
        if let Some(rx) = self.rx {
            f.amplitude.rx = rx;
        }
        if let Some(rx) = self.rx_a {
            f.phase.rx_a = rx;
        }
        if let Some(rx) = self.rx_b {
            f.phase.rx_b = rx;
        }
        if let Some(w) = &self.weights {
            cfg.fusion_weights = w
                .as_slice()
                .try_into()
                .map_err(|_| CliError::Usage(format!("--weights needs two values, got {}", w.len())))?;
        }
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(n) = self.max_iter {
            cfg.max_iter = n;
        }
        Ok(cfg)
    }
}

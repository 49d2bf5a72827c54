//! Run configuration: one TOML file with subcommand-specific sections.
//! Flags override file values; relative paths resolve against the file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Deserialize;
use vgrsi_core::broker::AccountConfig;
use vgrsi_core::marketdata::{load_csv, resample, InstrumentSpec, MarketData, Timeframe};
use vgrsi_core::signals::StrategyParams;
use vgrsi_core::vgrsi::{Variant, VgrsiParams};
use vgrsi_core::walkforward::WalkForwardConfig;

/// Input candle CSVs. Higher timeframes are resampled from the M1 stream
/// when not given explicitly.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub m1: PathBuf,
    pub m5: Option<PathBuf>,
    pub m30: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

fn default_timeframe() -> Timeframe {
    Timeframe::M1
}

/// `indicator` subcommand: which timeframe's closes to roll over, and the
/// indicator parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IndicatorSection {
    #[serde(default = "default_timeframe")]
    pub timeframe: Timeframe,
    pub window_size: usize,
    pub window_visibility: usize,
    pub variant: Variant,
}

impl IndicatorSection {
    pub fn params(&self) -> VgrsiParams {
        VgrsiParams::new(self.window_size, self.window_visibility, self.variant)
    }
}

/// `report` subcommand: where to find the walk-forward manifest.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReportSection {
    /// Defaults to `manifest.json` inside the output directory.
    pub manifest: Option<PathBuf>,
}

fn default_true() -> bool {
    true
}

/// The whole config file. Sections for subcommands other than the one being
/// run may be omitted.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instrument: InstrumentSpec,
    pub data: DataPaths,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub account: AccountConfig,
    /// Sharpe annualization for `backtest` stats (walk-forward carries its
    /// own switch).
    #[serde(default = "default_true")]
    pub annualize_sharpe: bool,
    pub indicator: Option<IndicatorSection>,
    pub strategy: Option<StrategyParams>,
    pub walkforward: Option<WalkForwardConfig>,
    #[serde(default)]
    pub report: ReportSection,
}

impl RunConfig {
    /// Parse `path`, resolve its relative paths, and validate the sections
    /// every subcommand needs.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        config.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        config.instrument.validate()?;
        config.account.validate()?;
        Ok(config)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.data.m1);
        if let Some(p) = self.data.m5.as_mut() {
            fix(p);
        }
        if let Some(p) = self.data.m30.as_mut() {
            fix(p);
        }
        fix(&mut self.output.dir);
        if let Some(p) = self.report.manifest.as_mut() {
            fix(p);
        }
    }

    /// Load and validate all three candle streams.
    pub fn load_market_data(&self) -> Result<MarketData> {
        let spec = &self.instrument;
        let load = |path: &PathBuf, tf: Timeframe| {
            load_csv(path, spec, tf)
                .with_context(|| format!("loading {tf} data {}", path.display()))
        };
        let m1 = load(&self.data.m1, Timeframe::M1)?;
        let data = match (&self.data.m5, &self.data.m30) {
            (None, None) => MarketData::from_m1(m1)?,
            (m5, m30) => {
                let m5 = match m5 {
                    Some(path) => load(path, Timeframe::M5)?,
                    None => resample(&m1, Timeframe::M5, false)?,
                };
                let m30 = match m30 {
                    Some(path) => load(path, Timeframe::M30)?,
                    None => resample(&m1, Timeframe::M30, false)?,
                };
                MarketData::with_series(m1, m5, m30)?
            }
        };
        Ok(data)
    }

    pub fn indicator(&self) -> Result<&IndicatorSection> {
        self.indicator
            .as_ref()
            .context("config is missing the [indicator] section")
    }

    pub fn strategy(&self) -> Result<StrategyParams> {
        let strategy = self
            .strategy
            .context("config is missing the [strategy] section")?;
        strategy.validate()?;
        Ok(strategy)
    }

    pub fn walkforward(&self) -> Result<WalkForwardConfig> {
        let config = self
            .walkforward
            .clone()
            .context("config is missing the [walkforward] section")?;
        config.validate()?;
        Ok(config)
    }
}

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ecs_leggett::inequalities::{Kind, DEFAULT_SEED};
use ecs_leggett::sweep::Range;
use serde::Deserialize;

#[derive(Parser, Debug)]
#[command(name = "ecs-leggett", version, about = "Leggett and Bell-CHSH violation by entangled coherent states")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Evaluate an inequality over a grid of (alpha, phi, eta)
    Sweep(Common),
    /// Smallest alpha at which a Leggett-type inequality is violated
    Threshold(Common),
    /// Optimize the catalog angle (L, LS) or all eight angles (BELL)
    Optimize(Common),
    /// Run the engine against both oracles on the fixed regression set
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// `min:max:step`
#[derive(Copy, Clone, Debug, PartialEq)]
pub struct RangeArg(pub Range);

impl FromStr for RangeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected min:max:step, got '{s}'"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("'{p}': {e}"));
        Ok(RangeArg(Range {
            min: num(parts[0])?,
            max: num(parts[1])?,
            step: num(parts[2])?,
        }))
    }
}

impl<'de> Deserialize<'de> for RangeArg {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Text(String),
            Fields(Range),
        }
        match Repr::deserialize(d)? {
            Repr::Text(s) => s.parse().map_err(serde::de::Error::custom),
            Repr::Fields(r) => Ok(RangeArg(r)),
        }
    }
}

#[derive(Args, Debug, Default, Clone)]
pub struct Common {
    /// Inequality: L, LS or BELL
    #[arg(long)]
    pub kind: Option<Kind>,
    /// Single coherent amplitude
    #[arg(long, conflicts_with = "alpha_range")]
    pub alpha: Option<f64>,
    /// Amplitude grid as min:max:step
    #[arg(long)]
    pub alpha_range: Option<RangeArg>,
    /// Single catalog angle in radians
    #[arg(long, conflicts_with = "phi_range")]
    pub phi: Option<f64>,
    /// Catalog angle grid as min:max:step
    #[arg(long)]
    pub phi_range: Option<RangeArg>,
    /// Detection efficiencies, comma separated
    #[arg(long, value_delimiter = ',')]
    pub eta: Vec<f64>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Output file (standard output if absent)
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Bisection resolution in alpha for `threshold`
    #[arg(long)]
    pub resolution: Option<f64>,
    /// JSON file supplying any of the flags above
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Skip the grid route and compare against the number-basis oracle only
    #[arg(long)]
    pub skip_wigner: bool,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Flag values as they may appear in a configuration file.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileConfig {
    pub kind: Option<Kind>,
    pub alpha: Option<f64>,
    #[serde(alias = "alpha_range")]
    pub alpha_range: Option<RangeArg>,
    pub phi: Option<f64>,
    #[serde(alias = "phi_range")]
    pub phi_range: Option<RangeArg>,
    pub eta: Option<EtaList>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub resolution: Option<f64>,
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
pub enum EtaList {
    One(f64),
    Many(Vec<f64>),
}

/// Fully resolved options after merging flags over the configuration file.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub kind: Kind,
    pub alpha: Option<Range>,
    pub phi: Option<Range>,
    pub eta: Vec<f64>,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub resolution: f64,
}

pub const DEFAULT_RESOLUTION: f64 = 0.05;

impl Common {
    pub fn resolve(&self) -> Result<Resolved, String> {
        let file = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
                serde_json::from_str::<FileConfig>(&text)
                    .map_err(|e| format!("invalid config {}: {e}", path.display()))?
            }
            None => FileConfig::default(),
        };
        let pick_range = |single: Option<f64>, range: Option<RangeArg>| -> Option<Range> {
            range.map(|r| r.0).or(single.map(Range::single))
        };
        // a flag of either shape overrides both shapes from the file
        let alpha = pick_range(self.alpha, self.alpha_range)
            .or_else(|| pick_range(file.alpha, file.alpha_range));
        let phi = pick_range(self.phi, self.phi_range).or_else(|| pick_range(file.phi, file.phi_range));
        let eta = if !self.eta.is_empty() {
            self.eta.clone()
        } else {
            match file.eta {
                Some(EtaList::One(e)) => vec![e],
                Some(EtaList::Many(v)) => v,
                None => vec![1.0],
            }
        };
        Ok(Resolved {
            kind: self.kind.or(file.kind).ok_or("missing --kind (L, LS or BELL)")?,
            alpha,
            phi,
            eta,
            format: self.format.or(file.format).unwrap_or(Format::Csv),
            out: self.out.clone().or(file.out),
            seed: self.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            resolution: self.resolution.or(file.resolution).unwrap_or(DEFAULT_RESOLUTION),
        })
    }
}

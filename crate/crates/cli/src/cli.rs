use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "deph", version, about = "Capacities and bounds for bosonic dephasing channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Single-point EA and HSW capacities.
    Capacity(CapacityArgs),
    /// Capacity ratio of the pure dephasing channel against g(E), per m.
    Fig2(Fig2Args),
    /// Bound ratios of the thermal-loss dephasing channel, one file per N_B.
    Fig3(Fig3Args),
    /// Upper and lower EA bounds of the thermal-loss dephasing channel.
    Bounds(BoundsArgs),
    /// Holevo information of phase encoding on squeezed-vacuum pairs.
    PhaseEncoding(PhaseArgs),
    /// Run the Fock-space oracle checks.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug)]
pub struct OutputArgs {
    /// Output file (a directory for fig3). Defaults to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct CapacityArgs {
    /// Pure dephasing channel on blocks of m modes.
    #[arg(long, conflicts_with = "thermal_loss")]
    pub pure_dephasing: bool,
    /// Thermal-loss channel (the default).
    #[arg(long)]
    pub thermal_loss: bool,
    #[arg(short = 'k', long, default_value_t = 0.8)]
    pub kappa: f64,
    #[arg(long, default_value_t = 10.0)]
    pub nb: f64,
    /// Mean photon number per mode [default: 1 for pure dephasing, 0.001 otherwise].
    #[arg(short = 'E', long)]
    pub energy: Option<f64>,
    /// Block length m: a value, a list "1,2,5", a range "1:20" or a
    /// log range "1e1:1e7:10/dec".
    #[arg(short = 'm', long, default_value = "1")]
    pub modes: ModeGrid,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct Fig2Args {
    #[arg(short = 'E', long, default_value_t = 1.0)]
    pub energy: f64,
    #[arg(short = 'm', long, default_value = "1:20")]
    pub modes: ModeGrid,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct Fig3Args {
    #[arg(short = 'k', long, default_value_t = 0.8)]
    pub kappa: f64,
    /// One or more noise levels, comma separated.
    #[arg(long, value_delimiter = ',', default_values_t = [10.0, 1.0, 0.1, 0.01])]
    pub nb: Vec<f64>,
    #[arg(short = 'E', long, default_value_t = 0.001)]
    pub energy: f64,
    #[arg(short = 'm', long, default_value = "1e1:1e7:10/dec")]
    pub modes: ModeGrid,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct BoundsArgs {
    #[arg(short = 'k', long, default_value_t = 0.8)]
    pub kappa: f64,
    #[arg(long, default_value_t = 10.0)]
    pub nb: f64,
    #[arg(short = 'E', long, default_value_t = 0.001)]
    pub energy: f64,
    #[arg(short = 'm', long, default_value = "1e5")]
    pub modes: ModeGrid,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct PhaseArgs {
    #[arg(short = 'k', long, default_value_t = 0.8)]
    pub kappa: f64,
    #[arg(long, default_value_t = 10.0)]
    pub nb: f64,
    #[arg(short = 'E', long, default_value_t = 0.001)]
    pub energy: f64,
    /// Block lengths for the lower bound with shared phase noise.
    #[arg(short = 'm', long)]
    pub modes: Option<ModeGrid>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Run only the named checks.
    #[arg(long = "check")]
    pub checks: Vec<String>,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Sorted, deduplicated list of block lengths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModeGrid(Vec<u64>);

impl ModeGrid {
    pub fn values(&self) -> &[u64] {
        &self.0
    }

    pub fn is_single(&self) -> bool {
        self.0.len() == 1
    }
}

fn parse_count(s: &str) -> Result<u64, String> {
    let x: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !(x >= 1.0) || x.fract() != 0.0 || x > 9.0e15 {
        return Err(format!("block length must be a positive integer, got '{s}'"));
    }
    Ok(x as u64)
}

impl FromStr for ModeGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let mut values = match parts.as_slice() {
            [one] => one.split(',').map(parse_count).collect::<Result<Vec<_>, _>>()?,
            [lo, hi] => {
                let (lo, hi) = (parse_count(lo)?, parse_count(hi)?);
                if hi < lo || hi - lo > 10_000_000 {
                    return Err(format!("bad range {lo}:{hi}"));
                }
                (lo..=hi).collect()
            }
            [lo, hi, density] => {
                let (lo, hi) = (parse_count(lo)?, parse_count(hi)?);
                let per_decade: u32 = density
                    .strip_suffix("/dec")
                    .and_then(|d| d.parse().ok())
                    .filter(|&d| d > 0)
                    .ok_or_else(|| format!("density must look like '10/dec', got '{density}'"))?;
                if hi < lo {
                    return Err(format!("bad range {lo}:{hi}"));
                }
                let (a, b) = ((lo as f64).log10(), (hi as f64).log10());
                let steps = ((b - a) * per_decade as f64).round() as u64;
                (0..=steps)
                    .map(|i| 10f64.powf(a + i as f64 / per_decade as f64).round() as u64)
                    .collect()
            }
            _ => return Err(format!("cannot parse block lengths '{s}'")),
        };
        values.sort_unstable();
        values.dedup();
        if values.is_empty() {
            return Err("empty block-length grid".into());
        }
        Ok(ModeGrid(values))
    }
}

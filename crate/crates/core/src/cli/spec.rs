use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Constellation, ConstellationKind, SystemConfig, make_constellation};
use crate::mp::ShapingFunction;
use crate::quantizer::Quantizer;

#[derive(Parser, Debug)]
#[command(
    name = "quantprec",
    version,
    about = "Linear-quantized massive-MIMO precoding: asymptotics, optimal design and Monte Carlo"
)]
struct Cli {
    #[command(subcommand)]
    command: CommandArgs,

    /// Worker threads for Monte Carlo runs (results do not depend on it)
    #[arg(long, global = true, env = "QUANTPREC_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum CommandArgs {
    /// Asymptotic SINR and SEP of one precoder
    Asym(RunArgs),
    /// Optimal DAC input scale and regularized-ZF design
    Optimize(RunArgs),
    /// Monte Carlo SER of the finite system
    Simulate(RunArgs),
    /// Optimal distortion ratio for 1-4 bit independent and CE quantizers
    TablePhi(RunArgs),
    /// KS comparison of the direct and equivalent-model samplers
    EquivCheck(RunArgs),
    /// Asymptotic (and optionally Monte Carlo) SER over a parameter range
    Sweep(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// ce:L, indep:L:DELTA or identity
    #[arg(long, default_value = "ce:4", value_parser = parse_via::<Quantizer>)]
    quantizer: Quantizer,

    /// psk:M or qam:M
    #[arg(long, default_value = "psk:4", value_parser = parse_via::<ConstellationSpec>)]
    constellation: ConstellationSpec,

    /// Antenna-to-user ratio N/K
    #[arg(long)]
    gamma: Option<f64>,

    /// Number of users K
    #[arg(long)]
    users: Option<usize>,

    /// Number of antennas N (with --users, instead of --gamma)
    #[arg(long)]
    antennas: Option<usize>,

    /// Channel SNR 1/σ² in dB
    #[arg(long, allow_negative_numbers = true, conflicts_with = "sigma")]
    snr_db: Option<f64>,

    /// Noise standard deviation σ
    #[arg(long)]
    sigma: Option<f64>,

    /// mf, zf, rzf:RHO, srzf:RHO:TAU or opt
    #[arg(long, default_value = "zf", value_parser = parse_via::<PrecoderSpec>)]
    precoder: PrecoderSpec,

    /// Fixed DAC scale; default saturates the power budget
    #[arg(long)]
    eta: Option<f64>,

    /// Symbol vectors (simulate, sweep) or draws per sampler (equiv-check); 0 skips Monte Carlo in sweeps
    #[arg(long, default_value_t = 10_000)]
    trials: u64,

    /// Symbol vectors per channel draw
    #[arg(long, default_value_t = 1)]
    batch: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Swept parameter
    #[arg(long, value_enum)]
    var: Option<SweepVar>,

    /// START:END:POINTS, inclusive
    #[arg(long, allow_hyphen_values = true, value_parser = parse_via::<SweepRange>)]
    range: Option<SweepRange>,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file; stdout if absent. With --format both, the extension is
    /// replaced by .csv and .json.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_via<T: FromStr<Err = Error>>(s: &str) -> std::result::Result<T, String> {
    s.parse::<T>().map_err(|e| e.to_string())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Asym,
    Optimize,
    Simulate,
    TablePhi,
    EquivCheck,
    Sweep,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Asym => "asym",
            Command::Optimize => "optimize",
            Command::Simulate => "simulate",
            Command::TablePhi => "table-phi",
            Command::EquivCheck => "equiv-check",
            Command::Sweep => "sweep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    Gamma,
    Snr,
    Bits,
    Rho,
}

impl fmt::Display for SweepVar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVar::Gamma => "gamma",
            SweepVar::Snr => "snr",
            SweepVar::Bits => "bits",
            SweepVar::Rho => "rho",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Both,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Csv => "csv",
            Format::Json => "json",
            Format::Both => "both",
        })
    }
}

/// Inclusive, evenly spaced grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRange {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl SweepRange {
    pub fn values(&self) -> Vec<f64> {
        if self.points == 1 {
            return vec![self.start];
        }
        let step = (self.end - self.start) / (self.points - 1) as f64;
        (0..self.points)
            .map(|i| if i + 1 == self.points { self.end } else { self.start + step * i as f64 })
            .collect()
    }
}

impl FromStr for SweepRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Parse(format!("range '{s}' must be START:END:POINTS"));
        let [a, b, n] = parts.as_slice() else {
            return Err(bad());
        };
        let start: f64 = a.parse().map_err(|_| bad())?;
        let end: f64 = b.parse().map_err(|_| bad())?;
        let points: usize = n.parse().map_err(|_| bad())?;
        if points == 0 || !start.is_finite() || !end.is_finite() {
            return Err(bad());
        }
        Ok(Self { start, end, points })
    }
}

impl fmt::Display for SweepRange {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.end, self.points)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConstellationSpec {
    pub kind: ConstellationKind,
    pub order: usize,
}

impl ConstellationSpec {
    pub fn build(&self, symbol_var: f64) -> Result<Constellation> {
        make_constellation(self.kind, self.order, symbol_var)
    }
}

impl FromStr for ConstellationSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("constellation '{s}' must be psk:M or qam:M"));
        let (kind, order) = s.split_once(':').ok_or_else(bad)?;
        let kind = match kind {
            "psk" => ConstellationKind::Psk,
            "qam" => ConstellationKind::Qam,
            _ => return Err(bad()),
        };
        let order: usize = order.parse().map_err(|_| bad())?;
        let spec = Self { kind, order };
        spec.build(1.0)?;
        Ok(spec)
    }
}

impl fmt::Display for ConstellationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind, self.order)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PrecoderSpec {
    Mf,
    Zf,
    Rzf(f64),
    Srzf(f64, f64),
    /// The optimal regularized-ZF design for the quantizer at hand.
    Opt,
}

impl PrecoderSpec {
    /// Fixed shaping function; `None` for [`PrecoderSpec::Opt`].
    pub fn shaping(&self) -> Option<ShapingFunction> {
        match *self {
            PrecoderSpec::Mf => Some(ShapingFunction::MatchedFilter),
            PrecoderSpec::Zf => Some(ShapingFunction::ZeroForcing),
            PrecoderSpec::Rzf(r) => Some(ShapingFunction::Rzf(r)),
            PrecoderSpec::Srzf(rho, tau) => Some(ShapingFunction::OptimalScaled { rho, tau }),
            PrecoderSpec::Opt => None,
        }
    }
}

impl FromStr for PrecoderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "opt" {
            return Ok(PrecoderSpec::Opt);
        }
        let f: ShapingFunction = s.parse().map_err(|e: Error| match e {
            Error::Parse(m) => Error::Parse(m.replace("or srzf:RHO:TAU", "srzf:RHO:TAU or opt")),
            other => other,
        })?;
        Ok(match f {
            ShapingFunction::MatchedFilter => PrecoderSpec::Mf,
            ShapingFunction::ZeroForcing => PrecoderSpec::Zf,
            ShapingFunction::Rzf(r) => PrecoderSpec::Rzf(r),
            ShapingFunction::OptimalScaled { rho, tau } => PrecoderSpec::Srzf(rho, tau),
            ShapingFunction::Custom(_) => unreachable!("custom shapings have no string form"),
        })
    }
}

impl fmt::Display for PrecoderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.shaping() {
            Some(s) => write!(f, "{s}"),
            None => f.write_str("opt"),
        }
    }
}

/// System dimensions as given on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dims {
    Unspecified,
    /// Only meaningful as the base of a gamma sweep.
    Users { users: usize },
    Asymptotic { gamma: f64 },
    GammaUsers { gamma: f64, users: usize },
    Finite { antennas: usize, users: usize },
}

impl Dims {
    fn from_flags(gamma: Option<f64>, users: Option<usize>, antennas: Option<usize>) -> Result<Self> {
        Ok(match (gamma, users, antennas) {
            (None, None, None) => Dims::Unspecified,
            (None, Some(users), None) => Dims::Users { users },
            (Some(gamma), None, None) => Dims::Asymptotic { gamma },
            (Some(gamma), Some(users), None) => Dims::GammaUsers { gamma, users },
            (None, Some(users), Some(antennas)) => Dims::Finite { antennas, users },
            _ => {
                return Err(Error::InvalidConfig(
                    "give --gamma, --gamma with --users, or --antennas with --users".into(),
                ));
            }
        })
    }

    pub fn gamma(&self) -> Option<f64> {
        match *self {
            Dims::Unspecified | Dims::Users { .. } => None,
            Dims::Asymptotic { gamma } | Dims::GammaUsers { gamma, .. } => Some(gamma),
            Dims::Finite { antennas, users } => Some(antennas as f64 / users as f64),
        }
    }

    pub fn users(&self) -> Option<usize> {
        match *self {
            Dims::Users { users } | Dims::GammaUsers { users, .. } | Dims::Finite { users, .. } => Some(users),
            _ => None,
        }
    }

    /// The same dimensions with the antenna ratio replaced.
    pub fn with_gamma(&self, gamma: f64) -> Dims {
        match self.users() {
            Some(users) => Dims::GammaUsers { gamma, users },
            None => Dims::Asymptotic { gamma },
        }
    }

    pub fn system(&self) -> Result<SystemConfig> {
        match *self {
            Dims::Unspecified | Dims::Users { .. } => Err(Error::InvalidConfig(
                "this command needs --gamma or --antennas/--users".into(),
            )),
            Dims::Asymptotic { gamma } => SystemConfig::asymptotic(gamma),
            Dims::GammaUsers { gamma, users } => SystemConfig::from_gamma_users(gamma, users),
            Dims::Finite { antennas, users } => SystemConfig::finite(antennas, users),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Noise {
    Sigma(f64),
    SnrDb(f64),
}

impl Noise {
    pub fn apply(&self, cfg: SystemConfig) -> Result<SystemConfig> {
        match *self {
            Noise::Sigma(s) if s >= 0.0 && s.is_finite() => cfg.with_noise_var(s * s),
            Noise::Sigma(s) => Err(Error::InvalidConfig(format!("sigma must be >= 0 (got {s})"))),
            Noise::SnrDb(db) => cfg.with_snr_db(db),
        }
    }
}

/// A fully parsed experiment. Its `Display` is the canonical command line,
/// which parses back to an equal spec.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub command: Command,
    pub quantizer: Quantizer,
    pub constellation: ConstellationSpec,
    pub dims: Dims,
    pub noise: Noise,
    pub precoder: PrecoderSpec,
    pub eta: Option<f64>,
    pub trials: u64,
    pub batch: usize,
    pub seed: u64,
    pub sweep: Option<(SweepVar, SweepRange)>,
    pub format: Format,
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    /// Base system configuration (dimensions and noise).
    pub fn system(&self) -> Result<SystemConfig> {
        self.noise.apply(self.dims.system()?)
    }

    fn validate(&self) -> Result<()> {
        match self.command {
            Command::TablePhi => {}
            Command::Simulate | Command::EquivCheck => {
                if self.dims.users().is_none() {
                    return Err(Error::InvalidConfig(format!(
                        "{} needs a finite system: --gamma with --users, or --antennas with --users",
                        self.command
                    )));
                }
                self.system()?;
            }
            Command::Asym | Command::Optimize => {
                self.system()?;
            }
            Command::Sweep => {
                let Some((var, _)) = self.sweep else {
                    return Err(Error::InvalidConfig("sweep needs --var and --range".into()));
                };
                if var != SweepVar::Gamma {
                    self.system()?;
                } else if matches!(self.dims, Dims::Finite { .. }) {
                    return Err(Error::InvalidConfig(
                        "a gamma sweep takes --users, not --antennas".into(),
                    ));
                }
            }
        }
        if self.command != Command::Sweep && self.sweep.is_some() {
            return Err(Error::InvalidConfig("--var/--range only apply to sweep".into()));
        }
        if let Some(eta) = self.eta
            && !(eta > 0.0 && eta.is_finite())
        {
            return Err(Error::InvalidConfig(format!("eta must be > 0 (got {eta})")));
        }
        if self.batch == 0 {
            return Err(Error::InvalidConfig("batch must be >= 1".into()));
        }
        Ok(())
    }
}

impl fmt::Display for ExperimentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} --quantizer {} --constellation {}",
            self.command, self.quantizer, self.constellation
        )?;
        match self.dims {
            Dims::Unspecified => {}
            Dims::Users { users } => write!(f, " --users {users}")?,
            Dims::Asymptotic { gamma } => write!(f, " --gamma {gamma}")?,
            Dims::GammaUsers { gamma, users } => write!(f, " --gamma {gamma} --users {users}")?,
            Dims::Finite { antennas, users } => write!(f, " --antennas {antennas} --users {users}")?,
        }
        match self.noise {
            Noise::Sigma(s) => write!(f, " --sigma {s}")?,
            Noise::SnrDb(db) => write!(f, " --snr-db {db}")?,
        }
        write!(f, " --precoder {}", self.precoder)?;
        if let Some(eta) = self.eta {
            write!(f, " --eta {eta}")?;
        }
        write!(f, " --trials {} --batch {} --seed {}", self.trials, self.batch, self.seed)?;
        if let Some((var, range)) = self.sweep {
            write!(f, " --var {var} --range {range}")?;
        }
        write!(f, " --format {}", self.format)?;
        if let Some(p) = &self.output {
            write!(f, " --output {}", p.display())?;
        }
        Ok(())
    }
}

impl FromStr for ExperimentSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let args = std::iter::once("quantprec").chain(s.split_whitespace());
        let cli = Cli::try_parse_from(args).map_err(|e| Error::Parse(e.render().to_string()))?;
        spec_from_cli(cli)
    }
}

fn spec_from_cli(cli: Cli) -> Result<ExperimentSpec> {
    let (command, a) = match cli.command {
        CommandArgs::Asym(a) => (Command::Asym, a),
        CommandArgs::Optimize(a) => (Command::Optimize, a),
        CommandArgs::Simulate(a) => (Command::Simulate, a),
        CommandArgs::TablePhi(a) => (Command::TablePhi, a),
        CommandArgs::EquivCheck(a) => (Command::EquivCheck, a),
        CommandArgs::Sweep(a) => (Command::Sweep, a),
    };
    let sweep = match (a.var, a.range) {
        (Some(v), Some(r)) => Some((v, r)),
        (None, None) => None,
        _ => return Err(Error::InvalidConfig("--var and --range go together".into())),
    };
    let noise = match (a.sigma, a.snr_db) {
        (_, Some(db)) => Noise::SnrDb(db),
        (Some(s), None) => Noise::Sigma(s),
        (None, None) => Noise::Sigma(0.0),
    };
    let spec = ExperimentSpec {
        command,
        quantizer: a.quantizer,
        constellation: a.constellation,
        dims: Dims::from_flags(a.gamma, a.users, a.antennas)?,
        noise,
        precoder: a.precoder,
        eta: a.eta,
        trials: a.trials,
        batch: a.batch,
        seed: a.seed,
        sweep,
        format: a.format,
        output: a.output,
    };
    spec.validate()?;
    Ok(spec)
}

pub(crate) enum ParseOutcome {
    /// Help or version text; not an error.
    Display(String),
    Usage(String),
}

pub(crate) fn parse_args<I, T>(args: I) -> std::result::Result<(ExperimentSpec, Option<usize>), ParseOutcome>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    use clap::error::ErrorKind;
    let cli = Cli::try_parse_from(args).map_err(|e| match e.kind() {
        ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ParseOutcome::Display(e.render().to_string()),
        _ => ParseOutcome::Usage(e.render().to_string()),
    })?;
    let threads = cli.threads;
    if threads == Some(0) {
        return Err(ParseOutcome::Usage("error: --threads must be >= 1\n".into()));
    }
    let spec = spec_from_cli(cli).map_err(|e| ParseOutcome::Usage(format!("error: {e}\n")))?;
    Ok((spec, threads))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_round_trip() {
        for s in [
            "table-phi --sigma 0",
            "sweep --var rho --range 0.02:0.6:30 --quantizer ce:4 --gamma 3 --users 100 --constellation psk:4 --sigma 0",
            "simulate --precoder zf --quantizer ce:4 --gamma 3 --users 20 --seed 9 --batch 10",
            "asym --quantizer indep:16:0.5 --antennas 12 --users 4 --snr-db -3.5 --precoder rzf:0.25 --eta 1.5",
            "optimize --gamma 2.5 --quantizer indep:64:1 --precoder opt --format json",
            "equiv-check --antennas 6 --users 3 --trials 10000 --output out.csv",
            "sweep --var gamma --range 2:6:5 --users 100 --trials 0",
        ] {
            let spec: ExperimentSpec = s.parse().unwrap();
            let canon = spec.to_string();
            let again: ExperimentSpec = canon.parse().unwrap();
            assert_eq!(again, spec, "{s}");
            assert_eq!(again.to_string(), canon);
        }
    }

    #[test]
    fn defaults() {
        let spec: ExperimentSpec = "table-phi --sigma 0".parse().unwrap();
        assert_eq!(spec.noise, Noise::Sigma(0.0));
        assert_eq!(spec.quantizer, Quantizer::constant_envelope(4).unwrap());
        assert_eq!(spec.precoder, PrecoderSpec::Zf);
        assert_eq!(spec.dims, Dims::Unspecified);
    }

    #[test]
    fn bad_flags_rejected() {
        for s in [
            "simulate --gamma 3",
            "sweep --gamma 3",
            "asym",
            "asym --gamma 3 --antennas 10",
            "asym --gamma 3 --quantizer ce:3",
            "asym --gamma 3 --constellation qam:8",
            "asym --gamma 3 --precoder rzf:-1",
            "asym --gamma 3 --sigma 1 --snr-db 3",
            "asym --gamma 3 --var rho --range 0:1:3",
            "sweep --gamma 3 --var rho --range 0:1",
            "frobnicate",
        ] {
            assert!(s.parse::<ExperimentSpec>().is_err(), "{s}");
        }
    }

    #[test]
    fn range_values() {
        let r: SweepRange = "0.02:0.6:30".parse().unwrap();
        let v = r.values();
        assert_eq!(v.len(), 30);
        assert_eq!(v[0], 0.02);
        assert_eq!(v[29], 0.6);
        assert_eq!("-5:5:1".parse::<SweepRange>().unwrap().values(), vec![-5.0]);
    }
}

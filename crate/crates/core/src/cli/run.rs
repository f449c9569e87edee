use std::io::Write;
use std::path::Path;

use serde_json::{Value, json};

use super::output::{Cell, Table};
use super::spec::{Command, ExperimentSpec, Format, Noise, PrecoderSpec, SweepVar};
use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::mp::{self, AsymptoticReport, ShapingFunction};
use crate::optimizer::{self, optimal_design};
use crate::quantizer::Quantizer;
use crate::simulator::{self, EtaPolicy, MonteCarloOptions, MonteCarloReport};

/// Rendered outputs of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub table: Table,
    pub csv: String,
    pub json: String,
}

/// Runs `spec` and writes the artifacts it asks for.
pub fn run(spec: &ExperimentSpec) -> Result<()> {
    let art = run_to_artifacts(spec)?;
    match (&spec.output, spec.format) {
        (None, Format::Csv) => emit_stdout(&art.csv),
        (None, Format::Json) => emit_stdout(&art.json),
        (None, Format::Both) => {
            emit_stdout(&art.csv)?;
            emit_stdout(&art.json)
        }
        (Some(p), Format::Csv) => write_file(p, &art.csv),
        (Some(p), Format::Json) => write_file(p, &art.json),
        (Some(p), Format::Both) => {
            write_file(&p.with_extension("csv"), &art.csv)?;
            write_file(&p.with_extension("json"), &art.json)
        }
    }
}

fn emit_stdout(s: &str) -> Result<()> {
    std::io::stdout()
        .lock()
        .write_all(s.as_bytes())
        .map_err(|e| Error::InvalidArgument(format!("cannot write to stdout: {e}")))
}

fn write_file(p: &Path, s: &str) -> Result<()> {
    std::fs::write(p, s).map_err(|e| Error::InvalidArgument(format!("cannot write {}: {e}", p.display())))
}

/// Runs `spec` and renders CSV and JSON without touching the filesystem.
pub fn run_to_artifacts(spec: &ExperimentSpec) -> Result<Artifacts> {
    let table = match spec.command {
        Command::Asym => asym(spec)?,
        Command::Optimize => optimize(spec)?,
        Command::Simulate => simulate(spec)?,
        Command::TablePhi => table_phi(spec)?,
        Command::EquivCheck => equiv_check(spec)?,
        Command::Sweep => sweep(spec)?,
    };
    let csv = table.to_csv()?;
    let doc = json!({
        "config": config_json(spec),
        "results": table.results_json(),
    });
    let mut json = serde_json::to_string_pretty(&doc).expect("json values serialize");
    json.push('\n');
    Ok(Artifacts { table, csv, json })
}

fn config_json(spec: &ExperimentSpec) -> Value {
    json!({
        "canonical": spec.to_string(),
        "command": spec.command,
        "quantizer": spec.quantizer.to_string(),
        "constellation": spec.constellation.to_string(),
        "dims": spec.dims,
        "noise": spec.noise,
        "precoder": spec.precoder.to_string(),
        "eta": spec.eta,
        "trials": spec.trials,
        "batch": spec.batch,
        "seed": spec.seed,
        "sweep": spec.sweep.map(|(v, r)| json!({"var": v, "range": r})),
        "system": spec.system().ok(),
    })
}

/// Shaping function and DAC-scale rule for a precoder spec.
fn resolve(
    cfg: &SystemConfig,
    q: &Quantizer,
    precoder: PrecoderSpec,
    eta: Option<f64>,
) -> Result<(ShapingFunction, EtaPolicy)> {
    match precoder.shaping() {
        Some(f) => Ok((f, eta.map_or(EtaPolicy::Saturate, EtaPolicy::Fixed))),
        None => {
            let d = optimal_design(cfg, q)?;
            Ok((d.shaping.clone(), EtaPolicy::Fixed(eta.unwrap_or(d.eta_star))))
        }
    }
}

struct Point {
    f: ShapingFunction,
    policy: EtaPolicy,
    report: AsymptoticReport,
}

fn asymptotic_point(
    spec: &ExperimentSpec,
    cfg: &SystemConfig,
    q: &Quantizer,
    precoder: PrecoderSpec,
) -> Result<Point> {
    let c = spec.constellation.build(cfg.symbol_var)?;
    let (f, policy) = resolve(cfg, q, precoder, spec.eta)?;
    let dist = mp::MpDistribution::new(cfg.gamma)?;
    let eta = policy.resolve(&dist, cfg, &f, q)?;
    let report = mp::asymptotic_sinr_with(&dist, cfg, &f, q, eta)?.with_sep(&c);
    Ok(Point { f, policy, report })
}

fn mc_options(spec: &ExperimentSpec) -> MonteCarloOptions {
    MonteCarloOptions::new(spec.trials, spec.seed).with_batch(spec.batch)
}

fn asym(spec: &ExperimentSpec) -> Result<Table> {
    let cfg = spec.system()?;
    let p = asymptotic_point(spec, &cfg, &spec.quantizer, spec.precoder)?;
    let r = &p.report;
    let mut t = Table::new(&[
        "gamma",
        "precoder",
        "shaping",
        "quantizer",
        "eta",
        "alpha_bar",
        "phi",
        "gain_re",
        "gain_im",
        "distortion",
        "sinr_asym",
        "sep_asym",
        "sep_exact",
        "tx_power",
    ]);
    t.push(vec![
        cfg.gamma.into(),
        spec.precoder.to_string().into(),
        p.f.to_string().into(),
        spec.quantizer.to_string().into(),
        r.eta.into(),
        r.alpha_bar.into(),
        r.phi.into(),
        r.gain.re.into(),
        r.gain.im.into(),
        r.distortion.into(),
        r.sinr.into(),
        r.sep.into(),
        r.sep_exact.into(),
        r.tx_power.into(),
    ]);
    Ok(t)
}

fn optimize(spec: &ExperimentSpec) -> Result<Table> {
    let cfg = spec.system()?;
    let d = optimal_design(&cfg, &spec.quantizer)?;
    let mut t = Table::new(&[
        "quantizer",
        "gamma",
        "noise_var",
        "alpha_star",
        "phi_star",
        "eta_star",
        "rho_star",
        "tau_star",
        "zeta_star",
        "shaping",
    ]);
    t.push(vec![
        spec.quantizer.to_string().into(),
        cfg.gamma.into(),
        cfg.noise_var.into(),
        d.alpha_star.into(),
        d.phi_star.into(),
        d.eta_star.into(),
        d.rho_star.into(),
        d.tau_star.into(),
        d.zeta_star.into(),
        d.shaping.to_string().into(),
    ]);
    Ok(t)
}

fn simulate(spec: &ExperimentSpec) -> Result<Table> {
    let cfg = spec.system()?;
    let (n, k) = cfg.dims()?;
    let c = spec.constellation.build(cfg.symbol_var)?;
    let p = asymptotic_point(spec, &cfg, &spec.quantizer, spec.precoder)?;
    let mc = simulator::simulate_ser(&cfg, &p.f, &spec.quantizer, &c, p.policy, &mc_options(spec))?;
    let mut t = Table::new(&[
        "gamma",
        "users",
        "antennas",
        "sinr_asym",
        "sep_asym",
        "sep_exact",
        "ser_mc",
        "ci_low",
        "ci_high",
        "errors",
        "trials",
        "tx_power",
        "eta",
    ]);
    t.push(vec![
        cfg.gamma.into(),
        k.into(),
        n.into(),
        p.report.sinr.into(),
        p.report.sep.into(),
        p.report.sep_exact.into(),
        mc.ser.into(),
        mc.ci_low.into(),
        mc.ci_high.into(),
        mc.errors.into(),
        mc.trials.into(),
        mc.tx_power.into(),
        mc.eta.into(),
    ]);
    Ok(t)
}

fn noise_var(noise: Noise) -> Result<f64> {
    Ok(noise.apply(SystemConfig::asymptotic(2.0)?)?.noise_var)
}

/// Independent quantizer with `4^bits` levels (same interval as `like`, or
/// 1) and CE quantizer with `2^(bits+1)` phases.
fn quantizer_with_bits(like: &Quantizer, bits: u32) -> Result<Quantizer> {
    if bits == 0 || bits > 8 {
        return Err(Error::InvalidConfig(format!("bits must be in 1..=8 (got {bits})")));
    }
    match like {
        Quantizer::Independent { interval, .. } => Quantizer::independent(4usize.pow(bits), *interval),
        Quantizer::ConstantEnvelope { .. } => Quantizer::constant_envelope(2usize.pow(bits + 1)),
        Quantizer::Identity => Err(Error::InvalidConfig("a bits sweep needs a finite-resolution quantizer".into())),
    }
}

fn table_phi(spec: &ExperimentSpec) -> Result<Table> {
    let nv = noise_var(spec.noise)?;
    let mut t = Table::new(&["bits", "independent", "ce", "indep_quantizer", "ce_quantizer"]);
    let indep_like = Quantizer::independent(4, 1.0)?;
    let ce_like = Quantizer::constant_envelope(4)?;
    for bits in 1..=4u32 {
        let qi = quantizer_with_bits(&indep_like, bits)?;
        let qc = quantizer_with_bits(&ce_like, bits)?;
        let (_, phi_i) = optimizer::optimize_alpha(&qi, nv, 1.0)?;
        let (_, phi_c) = optimizer::optimize_alpha(&qc, nv, 1.0)?;
        t.push(vec![
            (bits as u64).into(),
            phi_i.into(),
            phi_c.into(),
            qi.to_string().into(),
            qc.to_string().into(),
        ]);
    }
    Ok(t)
}

fn equiv_check(spec: &ExperimentSpec) -> Result<Table> {
    let cfg = spec.system()?;
    let c = spec.constellation.build(cfg.symbol_var)?;
    let (f, policy) = resolve(&cfg, &spec.quantizer, spec.precoder, spec.eta)?;
    let trials = usize::try_from(spec.trials).map_err(|_| Error::InvalidArgument("too many trials".into()))?;
    let r = simulator::equivalence_test(&cfg, &f, &spec.quantizer, &c, policy, trials, spec.seed)?;
    let mut t = Table::new(&["statistic", "ks", "critical", "below_critical"]);
    for (name, v) in [
        ("re_y1", r.ks_re),
        ("im_y1", r.ks_im),
        ("abs_y1", r.ks_abs),
        ("control_without_tg", r.control_ks),
    ] {
        t.push(vec![name.into(), v.into(), r.critical.into(), (v < r.critical).to_string().into()]);
    }
    Ok(t)
}

fn sweep(spec: &ExperimentSpec) -> Result<Table> {
    let (var, range) = spec.sweep.expect("validated");
    let xs = range.values();
    let mut t = Table::new(&["x", "sinr_asym", "sep_asym", "ser_mc", "ci_low", "ci_high"]);
    let mc_enabled = spec.trials > 0 && spec.dims.users().is_some();

    if var == SweepVar::Rho {
        // common channels, symbols and noise across the whole grid
        let cfg = spec.system()?;
        let mut points = Vec::with_capacity(xs.len());
        for &rho in &xs {
            points.push(asymptotic_point(spec, &cfg, &spec.quantizer, PrecoderSpec::Rzf(rho))?);
        }
        let mc: Vec<Option<MonteCarloReport>> = if mc_enabled {
            let c = spec.constellation.build(cfg.symbol_var)?;
            let fs: Vec<ShapingFunction> = points.iter().map(|p| p.f.clone()).collect();
            let policy = spec.eta.map_or(EtaPolicy::Saturate, EtaPolicy::Fixed);
            simulator::simulate_ser_many(&cfg, &fs, &spec.quantizer, &c, policy, &mc_options(spec))?
                .into_iter()
                .map(Some)
                .collect()
        } else {
            vec![None; xs.len()]
        };
        for ((x, p), m) in xs.iter().zip(&points).zip(mc) {
            t.push(sweep_row(*x, &p.report, m.as_ref()));
        }
        return Ok(t);
    }

    for &x in &xs {
        let mut q = spec.quantizer;
        let cfg = match var {
            SweepVar::Gamma => spec.noise.apply(spec.dims.with_gamma(x).system()?)?,
            SweepVar::Snr => Noise::SnrDb(x).apply(spec.dims.system()?)?,
            SweepVar::Bits => {
                let bits = x.round();
                if (x - bits).abs() > 1e-9 || bits < 1.0 {
                    return Err(Error::InvalidConfig(format!("bits must be whole numbers (got {x})")));
                }
                q = quantizer_with_bits(&spec.quantizer, bits as u32)?;
                spec.system()?
            }
            SweepVar::Rho => unreachable!(),
        };
        let p = asymptotic_point(spec, &cfg, &q, spec.precoder)?;
        let m = if mc_enabled {
            let c = spec.constellation.build(cfg.symbol_var)?;
            Some(simulator::simulate_ser(&cfg, &p.f, &q, &c, p.policy, &mc_options(spec))?)
        } else {
            None
        };
        t.push(sweep_row(x, &p.report, m.as_ref()));
    }
    Ok(t)
}

fn sweep_row(x: f64, r: &AsymptoticReport, m: Option<&MonteCarloReport>) -> Vec<Cell> {
    vec![
        x.into(),
        r.sinr.into(),
        r.sep.into(),
        m.map(|m| m.ser).into(),
        m.map(|m| m.ci_low).into(),
        m.map(|m| m.ci_high).into(),
    ]
}

//! Finite-system Monte Carlo: end-to-end transmission, SER estimation and the
//! statistically equivalent sampler.

use faer::Mat;
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Constellation, SystemConfig};
use crate::mp::{self, MpDistribution, ShapingFunction};
use crate::optimizer::saturating_eta_with;
use crate::quantizer::Quantizer;
use crate::randmat::{self, ChannelDecomposition, norm, reflector};
use crate::rng::{self, StreamRng, complex_normal, complex_normal_vec, tag};
use crate::stats;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// How the DAC scale `η` is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EtaPolicy {
    Fixed(f64),
    /// `η = √(P_T / E|q(ᾱZ)|²)` with `ᾱ` from the asymptotic input scale.
    Saturate,
}

impl EtaPolicy {
    pub fn resolve(
        &self,
        dist: &MpDistribution,
        cfg: &SystemConfig,
        f: &ShapingFunction,
        q: &Quantizer,
    ) -> Result<f64> {
        match *self {
            EtaPolicy::Fixed(eta) if eta > 0.0 && eta.is_finite() => Ok(eta),
            EtaPolicy::Fixed(eta) => Err(Error::InvalidArgument(format!("eta must be > 0 (got {eta})"))),
            EtaPolicy::Saturate => saturating_eta_with(dist, cfg, f, q),
        }
    }
}

/// `s ↦ V_thin diag(f(d)) Uᴴ s` without forming the N x N `V`.
#[derive(Debug, Clone)]
pub struct Precoder<'a> {
    dec: &'a ChannelDecomposition,
    gains: Vec<f64>,
}

pub fn build_precoder<'a>(dec: &'a ChannelDecomposition, f: &ShapingFunction) -> Result<Precoder<'a>> {
    f.validate()?;
    let gains: Vec<f64> = dec.singulars.iter().map(|&d| f.eval(d)).collect();
    if let Some((i, g)) = gains.iter().enumerate().find(|(_, g)| !g.is_finite()) {
        return Err(Error::NonFinite(format!(
            "shaping function {f} is {g} at singular value d_{i} = {}",
            dec.singulars[i]
        )));
    }
    Ok(Precoder { dec, gains })
}

impl Precoder<'_> {
    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn apply(&self, s: &[Complex64]) -> Vec<Complex64> {
        let k = self.gains.len();
        assert_eq!(s.len(), k, "dimension mismatch");
        let sm = Mat::from_fn(k, 1, |i, _| s[i]);
        let x = self.apply_block(&sm);
        (0..x.nrows()).map(|i| x[(i, 0)]).collect()
    }

    /// Applies the precoder to every column of `s` (K x B).
    pub fn apply_block(&self, s: &Mat<Complex64>) -> Mat<Complex64> {
        let mut t = self.dec.u.adjoint() * s;
        scale_rows(&mut t, &self.gains);
        &self.dec.v_thin * &t
    }
}

fn scale_rows(m: &mut Mat<Complex64>, gains: &[f64]) {
    for j in 0..m.ncols() {
        for (i, g) in gains.iter().enumerate() {
            m[(i, j)] *= *g;
        }
    }
}

/// One symbol vector pushed through `y = ηHq(Ps) + n`.
#[derive(Debug, Clone)]
pub struct TransmissionDraw {
    pub symbol_indices: Vec<usize>,
    pub symbols: Vec<Complex64>,
    pub precoded: Vec<Complex64>,
    pub transmitted: Vec<Complex64>,
    pub received: Vec<Complex64>,
    pub scaled: Vec<Complex64>,
    pub decisions: Vec<usize>,
}

impl TransmissionDraw {
    /// `(1/N)‖x‖²`
    pub fn tx_power(&self) -> f64 {
        self.transmitted.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.transmitted.len() as f64
    }

    pub fn symbol_errors(&self) -> usize {
        self.symbol_indices
            .iter()
            .zip(&self.decisions)
            .filter(|(a, b)| a != b)
            .count()
    }
}

#[allow(clippy::too_many_arguments)]
pub fn transmit(
    precoder: &Precoder<'_>,
    q: &Quantizer,
    eta: f64,
    beta: Complex64,
    c: &Constellation,
    symbol_indices: &[usize],
    noise: &[Complex64],
) -> TransmissionDraw {
    let symbols: Vec<Complex64> = symbol_indices.iter().map(|&i| c.point(i)).collect();
    let precoded = precoder.apply(&symbols);
    let transmitted: Vec<Complex64> = precoded.iter().map(|&z| eta * q.quantize(z)).collect();
    let h = &precoder.dec.h;
    let received: Vec<Complex64> = (0..h.nrows())
        .map(|i| (0..h.ncols()).map(|j| h[(i, j)] * transmitted[j]).sum::<Complex64>() + noise[i])
        .collect();
    let scaled: Vec<Complex64> = received.iter().map(|y| beta * y).collect();
    let decisions = scaled.iter().map(|&r| c.decode(r)).collect();
    TransmissionDraw {
        symbol_indices: symbol_indices.to_vec(),
        symbols,
        precoded,
        transmitted,
        received,
        scaled,
        decisions,
    }
}

/// Monte Carlo run parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloOptions {
    /// Number of symbol vectors.
    pub vectors: u64,
    /// Symbol vectors sharing one channel draw.
    pub batch: usize,
    pub seed: u64,
}

impl MonteCarloOptions {
    pub fn new(vectors: u64, seed: u64) -> Self {
        Self {
            vectors,
            batch: 1,
            seed,
        }
    }

    pub fn with_batch(mut self, batch: usize) -> Self {
        self.batch = batch;
        self
    }

    pub fn channel_draws(&self) -> u64 {
        self.vectors.div_ceil(self.batch.max(1) as u64)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MonteCarloReport {
    /// Symbol decisions counted (vectors x users).
    pub trials: u64,
    pub errors: u64,
    pub ser: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub per_user: Vec<f64>,
    pub eta: f64,
    pub beta: Complex64,
    /// Mean of `(1/N)‖x‖²` over symbol vectors, and its standard error.
    pub tx_power: f64,
    pub tx_power_se: f64,
    pub channel_draws: u64,
}

/// SER of `y = ηHq(Ps) + n` with asymptotic `β` rescaling.
pub fn simulate_ser(
    cfg: &SystemConfig,
    f: &ShapingFunction,
    q: &Quantizer,
    c: &Constellation,
    eta_policy: EtaPolicy,
    opts: &MonteCarloOptions,
) -> Result<MonteCarloReport> {
    let mut out = simulate_ser_many(cfg, std::slice::from_ref(f), q, c, eta_policy, opts)?;
    Ok(out.remove(0))
}

/// One report per shaping function. Every shaping sees the same channels,
/// symbols and noise, so differences between reports are not blurred by
/// independent sampling noise.
pub fn simulate_ser_many(
    cfg: &SystemConfig,
    shapings: &[ShapingFunction],
    q: &Quantizer,
    c: &Constellation,
    eta_policy: EtaPolicy,
    opts: &MonteCarloOptions,
) -> Result<Vec<MonteCarloReport>> {
    let (n, k) = cfg.dims()?;
    if opts.vectors == 0 || opts.batch == 0 {
        return Err(Error::InvalidArgument("need at least one symbol vector and batch >= 1".into()));
    }
    if shapings.is_empty() {
        return Err(Error::InvalidArgument("no shaping functions given".into()));
    }
    if (c.symbol_var() - cfg.symbol_var).abs() > 1e-12 * cfg.symbol_var {
        return Err(Error::InvalidConfig(format!(
            "constellation energy {} differs from configured symbol variance {}",
            c.symbol_var(),
            cfg.symbol_var
        )));
    }
    let dist = MpDistribution::new(cfg.gamma)?;
    let mut links = Vec::with_capacity(shapings.len());
    for f in shapings {
        let eta = eta_policy.resolve(&dist, cfg, f, q)?;
        let report = mp::asymptotic_sinr_with(&dist, cfg, f, q, eta)?;
        links.push((eta, report.beta));
    }

    let draws = opts.channel_draws();
    let ctx = DrawContext {
        cfg,
        n,
        k,
        shapings,
        links: &links,
        q,
        c,
        opts,
    };
    let stats: Vec<DrawStats> = (0..draws)
        .into_par_iter()
        .map(|j| ctx.run(j))
        .collect::<Result<_>>()?;

    let vectors = opts.vectors;
    let mut reports = Vec::with_capacity(shapings.len());
    for (r, &(eta, beta)) in links.iter().enumerate() {
        let mut per_user = vec![0u64; k];
        let (mut p1, mut p2) = (0.0, 0.0);
        // fixed-order reduction keeps the floats schedule independent
        for s in &stats {
            for (acc, e) in per_user.iter_mut().zip(&s.errors[r * k..(r + 1) * k]) {
                *acc += e;
            }
            p1 += s.power[r];
            p2 += s.power_sq[r];
        }
        let errors: u64 = per_user.iter().sum();
        let trials = vectors * k as u64;
        let (ci_low, ci_high) = stats::wilson_interval(errors, trials);
        let v = vectors as f64;
        let mean_p = p1 / v;
        let var_p = if vectors > 1 {
            ((p2 - v * mean_p * mean_p) / (v - 1.0)).max(0.0)
        } else {
            0.0
        };
        reports.push(MonteCarloReport {
            trials,
            errors,
            ser: errors as f64 / trials as f64,
            ci_low,
            ci_high,
            per_user: per_user.iter().map(|&e| e as f64 / v).collect(),
            eta,
            beta,
            tx_power: mean_p,
            tx_power_se: (var_p / v).sqrt(),
            channel_draws: draws,
        });
    }
    Ok(reports)
}

struct DrawContext<'a> {
    cfg: &'a SystemConfig,
    n: usize,
    k: usize,
    shapings: &'a [ShapingFunction],
    links: &'a [(f64, Complex64)],
    q: &'a Quantizer,
    c: &'a Constellation,
    opts: &'a MonteCarloOptions,
}

struct DrawStats {
    /// shaping-major, K entries per shaping
    errors: Vec<u64>,
    power: Vec<f64>,
    power_sq: Vec<f64>,
}

impl DrawContext<'_> {
    fn run(&self, j: u64) -> Result<DrawStats> {
        let (n, k) = (self.n, self.k);
        let seed = self.opts.seed;
        let batch = self.opts.batch as u64;
        let b = (self.opts.vectors - j * batch).min(batch) as usize;

        let h = randmat::sample_channel(self.cfg, &mut rng::stream(seed, tag::CHANNEL, j))?;
        let dec = decompose(&h)?;

        let mut srng = rng::stream(seed, tag::SYMBOLS, j);
        let m = self.c.order();
        let idx: Vec<usize> = (0..k * b).map(|_| srng.random_range(0..m)).collect();
        let s = Mat::from_fn(k, b, |i, col| self.c.point(idx[col * k + i]));
        let mut nrng = rng::stream(seed, tag::NOISE, j);
        let noise_var = self.cfg.noise_var;
        let noise = Mat::from_fn(k, b, |_, _| {
            if noise_var > 0.0 {
                complex_normal(&mut nrng, noise_var)
            } else {
                ZERO
            }
        });

        let t = dec.u.adjoint() * &s;
        let r = self.shapings.len();
        let mut z = Mat::<Complex64>::zeros(k, r * b);
        for (ri, f) in self.shapings.iter().enumerate() {
            let p = build_precoder(&dec, f)?;
            for col in 0..b {
                for i in 0..k {
                    z[(i, ri * b + col)] = t[(i, col)] * p.gains[i];
                }
            }
        }
        let mut x = &dec.v_thin * &z;
        let mut power = vec![0.0; r];
        let mut power_sq = vec![0.0; r];
        for ri in 0..r {
            let eta = self.links[ri].0;
            for col in ri * b..(ri + 1) * b {
                let mut p = 0.0;
                for i in 0..n {
                    let v = eta * self.q.quantize(x[(i, col)]);
                    p += v.norm_sqr();
                    x[(i, col)] = v;
                }
                p /= n as f64;
                power[ri] += p;
                power_sq[ri] += p * p;
            }
        }
        let y = &dec.h * &x;
        let mut errors = vec![0u64; r * k];
        for ri in 0..r {
            let beta = self.links[ri].1;
            for col in 0..b {
                for i in 0..k {
                    let rcv = beta * (y[(i, ri * b + col)] + noise[(i, col)]);
                    if self.c.decode(rcv) != idx[col * k + i] {
                        errors[ri * k + i] += 1;
                    }
                }
            }
        }
        Ok(DrawStats {
            errors,
            power,
            power_sq,
        })
    }
}

/// Gram route first; the SVD route only if the Gram factors lose accuracy.
fn decompose(h: &Mat<Complex64>) -> Result<ChannelDecomposition> {
    match randmat::thin_svd_gram(h) {
        Ok(d) if d.singulars.last().copied().unwrap_or(0.0) >= 1e-6 * d.singulars[0] => Ok(d),
        _ => randmat::thin_svd(h),
    }
}

/// One draw of `ŷ = ηTₛs + ηT_g g₂ + n` with all intermediate quantities.
#[derive(Debug, Clone)]
pub struct EquivalentDraw {
    /// Length N; entries beyond K are zero.
    pub s_hat1: Vec<Complex64>,
    pub c1: Complex64,
    pub c2: f64,
    pub t_s: Complex64,
    pub t_g: f64,
    pub y_hat: Vec<Complex64>,
    pub g1: Vec<Complex64>,
    pub g2: Vec<Complex64>,
    pub z1: Vec<Complex64>,
    pub z2: Vec<Complex64>,
}

impl EquivalentDraw {
    /// `ηTₛs + ηT_g g₂ + n` rebuilt from the stored parts.
    pub fn reconstruct(&self, eta: f64, s: &[Complex64], noise: &[Complex64]) -> Vec<Complex64> {
        s.iter()
            .zip(&self.g2)
            .zip(noise)
            .map(|((si, gi), ni)| eta * self.t_s * si + eta * self.t_g * gi + ni)
            .collect()
    }
}

/// Samples the equivalent model given `s`, `n` and the singular values.
/// Matrix free: every Haar factor is replaced by Householder reflectors.
#[allow(clippy::too_many_arguments)]
pub fn sample_equivalent<R: Rng + ?Sized>(
    cfg: &SystemConfig,
    f: &ShapingFunction,
    q: &Quantizer,
    eta: f64,
    s: &[Complex64],
    noise: &[Complex64],
    singulars: &[f64],
    rng: &mut R,
) -> Result<EquivalentDraw> {
    let (n, k) = cfg.dims()?;
    if s.len() != k || noise.len() != k || singulars.len() != k {
        return Err(Error::InvalidArgument(format!(
            "expected {k} symbols, noise samples and singular values"
        )));
    }
    let s_norm = norm(s);
    if s_norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let g1 = complex_normal_vec(rng, k, 1.0);
    let g2 = complex_normal_vec(rng, k, 1.0);
    let z1 = complex_normal_vec(rng, n, 1.0);
    let z2 = complex_normal_vec(rng, n, 1.0);

    let scale = s_norm / norm(&g1);
    let mut s_hat1 = vec![ZERO; n];
    for i in 0..k {
        let fd = f.eval(singulars[i]);
        if !fd.is_finite() {
            return Err(Error::NonFinite(format!("shaping function {f} at d = {}", singulars[i])));
        }
        s_hat1[i] = scale * fd * g1[i];
    }
    let sh_norm = norm(&s_hat1);
    let z1_norm = norm(&z1);
    let r = sh_norm / z1_norm;
    let qz: Vec<Complex64> = z1.iter().map(|&z| q.quantize(r * z)).collect();
    let c1 = z1.iter().zip(&qz).map(|(a, b)| a.conj() * b).sum::<Complex64>() / (sh_norm * z1_norm);
    let c2 = norm(&reflector(&z1)?.apply_b_adjoint(&qz)) / norm(&z2[1..]);

    let spread = reflector(&s_hat1)?.apply_b(&z2[1..]);
    let w: Vec<Complex64> = (0..k)
        .map(|i| singulars[i] * (c1 * s_hat1[i] + c2 * spread[i]))
        .collect();
    let rs_g2 = reflector(s)?.apply_adjoint(&g2);
    let t_g = norm(&reflector(&g1)?.apply_b_adjoint(&w)) / norm(&rs_g2[1..]);
    let proj = g1.iter().zip(&w).map(|(a, b)| a.conj() * b).sum::<Complex64>();
    let t_s = proj / (norm(&g1) * s_norm) - t_g * rs_g2[0] / s_norm;

    let y_hat = s
        .iter()
        .zip(&g2)
        .zip(noise)
        .map(|((si, gi), ni)| eta * t_s * si + eta * t_g * gi + ni)
        .collect();
    Ok(EquivalentDraw {
        s_hat1,
        c1,
        c2,
        t_s,
        t_g,
        y_hat,
        g1,
        g2,
        z1,
        z2,
    })
}

/// Two-sample KS comparison of user 1's received sample under the direct
/// and equivalent samplers.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceReport {
    pub draws: usize,
    pub eta: f64,
    pub ks_re: f64,
    pub ks_im: f64,
    pub ks_abs: f64,
    pub critical: f64,
    pub pass: bool,
    /// Largest KS statistic when the `T_g` term is dropped.
    pub control_ks: f64,
    pub control_rejected: bool,
}

/// Samples of `y₁` from both models; `s` is shared draw by draw.
#[derive(Debug, Clone)]
pub struct EquivalenceSamples {
    pub direct: Vec<Complex64>,
    pub equivalent: Vec<Complex64>,
    pub control: Vec<Complex64>,
    pub eta: f64,
}

pub fn equivalence_samples(
    cfg: &SystemConfig,
    f: &ShapingFunction,
    q: &Quantizer,
    c: &Constellation,
    eta_policy: EtaPolicy,
    draws: usize,
    seed: u64,
) -> Result<EquivalenceSamples> {
    let (n, k) = cfg.dims()?;
    let dist = MpDistribution::new(cfg.gamma)?;
    let eta = eta_policy.resolve(&dist, cfg, f, q)?;
    let m = c.order();
    let noise_var = cfg.noise_var;
    let draw_noise = |rng: &mut StreamRng| complex_normal_vec(rng, k, noise_var);

    let rows: Vec<(Complex64, Complex64, Complex64)> = (0..draws as u64)
        .into_par_iter()
        .map(|i| {
            let mut srng = rng::stream(seed, tag::SYMBOLS, i);
            let idx: Vec<usize> = (0..k).map(|_| srng.random_range(0..m)).collect();
            let s: Vec<Complex64> = idx.iter().map(|&j| c.point(j)).collect();

            let h = randmat::sample_channel(cfg, &mut rng::stream(seed, tag::CHANNEL, i))?;
            let dec = decompose(&h)?;
            let p = build_precoder(&dec, f)?;
            let direct = transmit(&p, q, eta, Complex64::new(1.0, 0.0), c, &idx, &draw_noise(&mut rng::stream(seed, tag::NOISE, i)));

            let mut erng = rng::stream(seed, tag::EQUIVALENT, i);
            let h2 = randmat::sample_channel(cfg, &mut erng)?;
            let d2 = decompose(&h2)?;
            let noise = draw_noise(&mut erng);
            let e = sample_equivalent(cfg, f, q, eta, &s, &noise, &d2.singulars, &mut erng)?;
            let control = eta * e.t_s * s[0] + noise[0];
            debug_assert_eq!(h.ncols(), n);
            Ok((direct.received[0], e.y_hat[0], control))
        })
        .collect::<Result<_>>()?;
    Ok(EquivalenceSamples {
        direct: rows.iter().map(|r| r.0).collect(),
        equivalent: rows.iter().map(|r| r.1).collect(),
        control: rows.iter().map(|r| r.2).collect(),
        eta,
    })
}

/// Largest of the KS statistics on real part, imaginary part and modulus.
pub fn ks_components(a: &[Complex64], b: &[Complex64]) -> [f64; 3] {
    let parts = |v: &[Complex64], g: fn(&Complex64) -> f64| v.iter().map(g).collect::<Vec<f64>>();
    [
        stats::ks_two_sample(&parts(a, |z| z.re), &parts(b, |z| z.re)),
        stats::ks_two_sample(&parts(a, |z| z.im), &parts(b, |z| z.im)),
        stats::ks_two_sample(&parts(a, |z| z.norm()), &parts(b, |z| z.norm())),
    ]
}

pub fn equivalence_test(
    cfg: &SystemConfig,
    f: &ShapingFunction,
    q: &Quantizer,
    c: &Constellation,
    eta_policy: EtaPolicy,
    draws: usize,
    seed: u64,
) -> Result<EquivalenceReport> {
    if draws < 1000 {
        return Err(Error::InvalidArgument(format!("need at least 1000 draws (got {draws})")));
    }
    let smp = equivalence_samples(cfg, f, q, c, eta_policy, draws, seed)?;
    let [ks_re, ks_im, ks_abs] = ks_components(&smp.direct, &smp.equivalent);
    let ctrl = ks_components(&smp.direct, &smp.control);
    let control_ks = ctrl.into_iter().fold(0.0, f64::max);
    let critical = stats::ks_critical_value(draws, draws, 0.01);
    Ok(EquivalenceReport {
        draws,
        eta: smp.eta,
        ks_re,
        ks_im,
        ks_abs,
        critical,
        pass: ks_re < critical && ks_im < critical && ks_abs < critical,
        control_ks,
        control_rejected: control_ks >= critical,
    })
}

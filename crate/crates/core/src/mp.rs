//! Marchenko–Pastur expectations, the asymptotic scalar model and
//! closed-form SINR/SEP expressions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Constellation, ConstellationKind, SystemConfig};
use crate::quadrature;
use crate::quantizer::{self, Quantizer, ce_cross};
use crate::special::q_function;

const PANELS: usize = 100;
const PER_PANEL: usize = 20;

/// Limiting eigenvalue law of `HHᴴ` for `N/K → γ`.
///
/// Holds a fixed 2000-point rule in `θ` under `x = a + (b−a) sin²θ`, which
/// removes the square-root edges of the density.
#[derive(Debug, Clone)]
pub struct MpDistribution {
    pub gamma: f64,
    pub c: f64,
    pub a: f64,
    pub b: f64,
    lambdas: Vec<f64>,
    weights: Vec<f64>,
}

impl MpDistribution {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "Marchenko-Pastur ratio must satisfy gamma > 1 (got {gamma})"
            )));
        }
        let c = 1.0 / gamma;
        let a = (1.0 - c.sqrt()).powi(2);
        let b = (1.0 + c.sqrt()).powi(2);
        let rule = quadrature::composite_legendre(0.0, 0.5 * PI, PANELS, PER_PANEL);
        let mut lambdas = Vec::with_capacity(rule.nodes.len());
        let mut weights = Vec::with_capacity(rule.nodes.len());
        for (t, w) in rule.nodes.iter().zip(&rule.weights) {
            let (s, co) = t.sin_cos();
            let x = a + (b - a) * s * s;
            lambdas.push(x);
            weights.push(w * (b - a).powi(2) * 2.0 * s * s * co * co / (2.0 * PI * c * x));
        }
        Ok(Self {
            gamma,
            c,
            a,
            b,
            lambdas,
            weights,
        })
    }

    pub fn density(&self, x: f64) -> f64 {
        if x <= self.a || x >= self.b {
            return 0.0;
        }
        ((x - self.a) * (self.b - x)).sqrt() / (2.0 * PI * self.c * x)
    }

    /// `P(λ ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.a {
            return 0.0;
        }
        if x >= self.b {
            return 1.0;
        }
        let theta = ((x - self.a) / (self.b - self.a)).sqrt().asin();
        let rule = quadrature::composite_legendre(0.0, theta, 8, 20);
        let (a, b, c) = (self.a, self.b, self.c);
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(t, w)| {
                let (s, co) = t.sin_cos();
                let x = a + (b - a) * s * s;
                w * (b - a).powi(2) * 2.0 * s * s * co * co / (2.0 * PI * c * x)
            })
            .sum::<f64>()
            .clamp(0.0, 1.0)
    }

    /// `E[g(d)]` with `d = √λ`.
    pub fn expect(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in self.lambdas.iter().zip(&self.weights) {
            let v = g(x.sqrt());
            if !v.is_finite() {
                return Err(Error::NonFinite(format!(
                    "integrand is {v} at d = {}",
                    x.sqrt()
                )));
            }
            acc += w * v;
        }
        Ok(acc)
    }

    /// Quadrature abscissae on the singular-value scale.
    pub fn singular_nodes(&self) -> impl Iterator<Item = f64> + '_ {
        self.lambdas.iter().map(|x| x.sqrt())
    }
}

pub fn mp_expect(dist: &MpDistribution, g: impl Fn(f64) -> f64) -> Result<f64> {
    dist.expect(g)
}

/// Spectral shaping `f` in `P = V f(D)ᵀ Uᴴ`.
#[derive(Clone)]
pub enum ShapingFunction {
    MatchedFilter,
    ZeroForcing,
    Rzf(f64),
    /// `d / (τ (d² + ρ))`
    OptimalScaled { rho: f64, tau: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for ShapingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ShapingFunction({self})")
    }
}

impl fmt::Display for ShapingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapingFunction::MatchedFilter => f.write_str("mf"),
            ShapingFunction::ZeroForcing => f.write_str("zf"),
            ShapingFunction::Rzf(rho) => write!(f, "rzf:{rho}"),
            ShapingFunction::OptimalScaled { rho, tau } => write!(f, "srzf:{rho}:{tau}"),
            ShapingFunction::Custom(_) => f.write_str("custom"),
        }
    }
}

impl FromStr for ShapingFunction {
    type Err = Error;

    /// `mf`, `zf`, `rzf:ρ` or `srzf:ρ:τ`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |t: &str| {
            t.parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad number '{t}' in precoder '{s}'")))
        };
        let f = match parts.as_slice() {
            ["mf"] => ShapingFunction::MatchedFilter,
            ["zf"] => ShapingFunction::ZeroForcing,
            ["rzf", r] => ShapingFunction::Rzf(num(r)?),
            ["srzf", r, t] => ShapingFunction::OptimalScaled {
                rho: num(r)?,
                tau: num(t)?,
            },
            _ => {
                return Err(Error::Parse(format!(
                    "unknown precoder '{s}' (expected mf, zf, rzf:RHO or srzf:RHO:TAU)"
                )));
            }
        };
        f.validate()?;
        Ok(f)
    }
}

impl ShapingFunction {
    pub fn custom(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ShapingFunction::Custom(Arc::new(f))
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ShapingFunction::Rzf(rho) if !(rho >= 0.0) || !rho.is_finite() => Err(
                Error::InvalidArgument(format!("RZF regularization must be >= 0 (got {rho})")),
            ),
            ShapingFunction::OptimalScaled { rho, tau }
                if !(rho >= 0.0) || !(tau > 0.0) || !rho.is_finite() || !tau.is_finite() =>
            {
                Err(Error::InvalidArgument(format!(
                    "scaled RZF needs rho >= 0 and tau > 0 (got {rho}, {tau})"
                )))
            }
            _ => Ok(()),
        }
    }

    #[inline]
    pub fn eval(&self, d: f64) -> f64 {
        match self {
            ShapingFunction::MatchedFilter => d,
            ShapingFunction::ZeroForcing => 1.0 / d,
            ShapingFunction::Rzf(rho) => d / (d * d + rho),
            ShapingFunction::OptimalScaled { rho, tau } => d / (tau * (d * d + rho)),
            ShapingFunction::Custom(f) => f(d),
        }
    }

    /// Checks positivity and finiteness on the quadrature nodes of `dist`.
    pub fn check_support(&self, dist: &MpDistribution) -> Result<()> {
        self.validate()?;
        for d in dist.singular_nodes() {
            let v = self.eval(d);
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "shaping function {self} is {v} at d = {d}; it must be positive and finite"
                )));
            }
        }
        Ok(())
    }
}

/// Stand-in for an infinite SINR (distortion- and noise-free ZF).
pub const SINR_SENTINEL: f64 = 1e15;

/// Scalar asymptotic model `ȳ = ηT̄ₛ s + ηT̄_g g + n` for one design.
#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    pub alpha_bar: f64,
    pub gain: Complex64,
    pub distortion: f64,
    pub signal_coef: Complex64,
    pub noise_coef: f64,
    pub eta: f64,
    pub phi: f64,
    pub sinr: f64,
    /// SINR was capped at [`SINR_SENTINEL`].
    pub infinite: bool,
    pub sep: Option<f64>,
    /// Exact scalar-channel SEP where one exists (see [`exact_sep`]).
    pub sep_exact: Option<f64>,
    pub beta: Complex64,
    pub mean_df: f64,
    pub var_df: f64,
    pub mean_f2: f64,
    /// `(1/N) E‖x‖² = η² E|q(ᾱZ)|²`
    pub tx_power: f64,
}

impl AsymptoticReport {
    /// `E²[df] / (var[df] + φ E[f²]/γ)` from the stored parts.
    pub fn sinr_from_parts(&self, gamma: f64) -> f64 {
        self.mean_df.powi(2) / (self.var_df + self.phi * self.mean_f2 / gamma)
    }

    pub fn with_sep(mut self, c: &Constellation) -> Self {
        self.sep = Some(if self.infinite { 0.0 } else { asymptotic_sep(self.sinr, c) });
        self.sep_exact = if self.infinite { Some(0.0) } else { exact_sep(self.sinr, c) };
        self
    }
}

/// Asymptotic SINR of `f` under quantizer `q` at DAC scale `eta`.
pub fn asymptotic_sinr(
    cfg: &SystemConfig,
    f: &ShapingFunction,
    q: &Quantizer,
    eta: f64,
) -> Result<AsymptoticReport> {
    let dist = MpDistribution::new(cfg.gamma)?;
    asymptotic_sinr_with(&dist, cfg, f, q, eta)
}

/// As [`asymptotic_sinr`] but reusing a prepared distribution.
pub fn asymptotic_sinr_with(
    dist: &MpDistribution,
    cfg: &SystemConfig,
    f: &ShapingFunction,
    q: &Quantizer,
    eta: f64,
) -> Result<AsymptoticReport> {
    cfg.validate()?;
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("eta must be > 0 (got {eta})")));
    }
    f.check_support(dist)?;
    let gamma = cfg.gamma;
    let mean_df = dist.expect(|d| d * f.eval(d))?;
    let mean_d2f2 = dist.expect(|d| (d * f.eval(d)).powi(2))?;
    let mean_f2 = dist.expect(|d| f.eval(d).powi(2))?;
    let var_df = (mean_d2f2 - mean_df * mean_df).max(0.0);
    let alpha_bar = (cfg.symbol_var * mean_f2 / gamma).sqrt();
    let m = quantizer::moments(q, alpha_bar)?;
    let phi = quantizer::phi_from_moments(&m, eta, cfg.noise_var)?;
    let signal_coef = m.gain * mean_df;
    let noise_coef = (cfg.symbol_var * m.gain.norm_sqr() * var_df + m.distortion.powi(2)).sqrt();
    let num = mean_df * mean_df;
    let den = var_df + phi * mean_f2 / gamma;
    // var[df] is pure rounding noise for ZF
    let infinite = den <= 1e-13 * num;
    let sinr = if infinite { SINR_SENTINEL } else { num / den };
    let beta = signal_coef.conj() / (eta * signal_coef.norm_sqr());
    Ok(AsymptoticReport {
        alpha_bar,
        gain: m.gain,
        distortion: m.distortion,
        signal_coef,
        noise_coef,
        eta,
        phi,
        sinr,
        infinite,
        sep: None,
        sep_exact: None,
        beta,
        mean_df,
        var_df,
        mean_f2,
        tx_power: eta * eta * m.out_power,
    })
}

/// Closed forms for CE quantizers at `η = √P_T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QceClosedForms {
    pub c_l: f64,
    pub sinr_mf: f64,
    pub sinr_zf: f64,
    pub sinr_opt: f64,
    /// Optimal RZF regularization `C / γ`.
    pub rho_opt: f64,
}

pub fn qce_closed_forms(cfg: &SystemConfig, q: &Quantizer) -> Result<QceClosedForms> {
    let Quantizer::ConstantEnvelope { levels } = *q else {
        return Err(Error::InvalidQuantizer(format!(
            "closed forms need a CE quantizer (got {q})"
        )));
    };
    cfg.validate()?;
    let g2 = ce_cross(levels).powi(2);
    let c_l = (1.0 - g2 + cfg.noise_var / cfg.power_budget) / g2;
    let gamma = cfg.gamma;
    let u = c_l + gamma - 1.0;
    Ok(QceClosedForms {
        c_l,
        sinr_mf: gamma / (c_l + 1.0),
        sinr_zf: (gamma - 1.0) / c_l,
        sinr_opt: ((u * u + 4.0 * c_l).sqrt() + u) / (2.0 * c_l) - 1.0,
        rho_opt: c_l / gamma,
    })
}

/// Symbol error probability on the scalar AWGN model at `sinr`.
///
/// M-PSK (M >= 4) uses the approximation `2Q(√2 sin(π/M) √SINR)` clamped to
/// 1; BPSK uses the exact `Q(√(2 SINR))`; square M-QAM is exact.
pub fn asymptotic_sep(sinr: f64, c: &Constellation) -> f64 {
    let sinr = sinr.max(0.0);
    let m = c.order() as f64;
    match c.kind() {
        ConstellationKind::Psk if c.order() == 2 => q_function((2.0 * sinr).sqrt()),
        ConstellationKind::Psk => {
            (2.0 * q_function(2f64.sqrt() * (PI / m).sin() * sinr.sqrt())).min(1.0)
        }
        ConstellationKind::Qam => {
            let k = 1.0 - 1.0 / m.sqrt();
            let e0 = q_function((3.0 * sinr / (m - 1.0)).sqrt());
            (4.0 * k * e0 - 4.0 * k * k * e0 * e0).clamp(0.0, 1.0)
        }
    }
}

/// Exact SEP of the scalar Gaussian model for BPSK, QPSK and square QAM;
/// `None` for M-PSK with M >= 8. QPSK is rotated 4-QAM, so it gets
/// `2Q(√SINR) − Q(√SINR)²` where [`asymptotic_sep`] keeps only the first term.
pub fn exact_sep(sinr: f64, c: &Constellation) -> Option<f64> {
    match (c.kind(), c.order()) {
        (ConstellationKind::Psk, 2) => Some(asymptotic_sep(sinr, c)),
        (ConstellationKind::Psk, 4) => {
            let e = q_function(sinr.max(0.0).sqrt());
            Some(2.0 * e - e * e)
        }
        (ConstellationKind::Psk, _) => None,
        (ConstellationKind::Qam, _) => Some(asymptotic_sep(sinr, c)),
    }
}

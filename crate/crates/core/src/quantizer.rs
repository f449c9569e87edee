//! Independent (I/Q) and constant-envelope DAC quantizers and their
//! Gaussian input/output moments.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{self, Rule};
use crate::special::{normal_cdf, normal_pdf};

/// Memoryless map from ℂ onto a finite alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Quantizer {
    /// `√L` uniform levels per real axis, spaced `interval` apart.
    Independent { levels: usize, interval: f64 },
    /// `L` unit-modulus phases `e^{j(2ℓ−1)π/L}`.
    ConstantEnvelope { levels: usize },
    /// Pass-through, for tests.
    Identity,
}

impl Quantizer {
    pub fn independent(levels: usize, interval: f64) -> Result<Self> {
        let side = (levels as f64).sqrt().round() as usize;
        if levels < 4 || !levels.is_power_of_two() || side * side != levels {
            return Err(Error::InvalidQuantizer(format!(
                "independent quantizer needs L = 4^b with b >= 1 (got {levels})"
            )));
        }
        if !(interval > 0.0) || !interval.is_finite() {
            return Err(Error::InvalidQuantizer(format!(
                "quantization interval must be > 0 (got {interval})"
            )));
        }
        Ok(Quantizer::Independent { levels, interval })
    }

    pub fn constant_envelope(levels: usize) -> Result<Self> {
        if levels < 4 || !levels.is_power_of_two() {
            return Err(Error::InvalidQuantizer(format!(
                "CE quantizer needs L = 2^b with L >= 4 (got {levels})"
            )));
        }
        Ok(Quantizer::ConstantEnvelope { levels })
    }

    /// Number of output points (0 for identity).
    pub fn levels(&self) -> usize {
        match *self {
            Quantizer::Independent { levels, .. } | Quantizer::ConstantEnvelope { levels } => levels,
            Quantizer::Identity => 0,
        }
    }

    /// Bits per complex sample (`log2 L`).
    pub fn bits(&self) -> u32 {
        self.levels().max(1).trailing_zeros()
    }

    pub fn is_constant_envelope(&self) -> bool {
        matches!(self, Quantizer::ConstantEnvelope { .. })
    }

    /// Per-axis levels of the independent quantizer, ascending.
    pub fn axis_levels(&self) -> Option<Vec<f64>> {
        match *self {
            Quantizer::Independent { levels, interval } => {
                let n = (levels as f64).sqrt().round() as usize;
                Some(
                    (1..=n)
                        .map(|l| 0.5 * interval * (2.0 * l as f64 - 1.0 - n as f64))
                        .collect(),
                )
            }
            _ => None,
        }
    }

    /// Full output alphabet.
    pub fn alphabet(&self) -> Vec<Complex64> {
        match *self {
            Quantizer::Independent { .. } => {
                let lv = self.axis_levels().unwrap_or_default();
                lv.iter()
                    .flat_map(|&re| lv.iter().map(move |&im| Complex64::new(re, im)))
                    .collect()
            }
            Quantizer::ConstantEnvelope { levels } => (1..=levels)
                .map(|l| Complex64::from_polar(1.0, (2.0 * l as f64 - 1.0) * PI / levels as f64))
                .collect(),
            Quantizer::Identity => Vec::new(),
        }
    }

    /// Nearest output point; ties go to the smaller level index.
    #[inline]
    pub fn quantize(&self, x: Complex64) -> Complex64 {
        match *self {
            Quantizer::Independent { levels, interval } => {
                let n = sqrt_levels(levels);
                Complex64::new(
                    axis_quantize(x.re, n, interval),
                    axis_quantize(x.im, n, interval),
                )
            }
            Quantizer::ConstantEnvelope { levels } => {
                let idx = ce_index(x, levels);
                Complex64::from_polar(1.0, (2.0 * idx as f64 + 1.0) * PI / levels as f64)
            }
            Quantizer::Identity => x,
        }
    }

    pub fn quantize_slice(&self, xs: &[Complex64], out: &mut [Complex64]) {
        for (o, x) in out.iter_mut().zip(xs) {
            *o = self.quantize(*x);
        }
    }
}

#[inline]
fn sqrt_levels(levels: usize) -> usize {
    // levels is a power of four
    1usize << (levels.trailing_zeros() / 2)
}

/// Level index `clamp(⌈u/Δ + n/2⌉ − 1, 0, n − 1)`, then its value.
#[inline]
fn axis_quantize(u: f64, n: usize, delta: f64) -> f64 {
    let t = (u / delta + 0.5 * n as f64).ceil() - 1.0;
    let idx = t.clamp(0.0, n as f64 - 1.0);
    0.5 * delta * (2.0 * idx + 1.0 - n as f64)
}

/// Sector `⌈θL/2π⌉ − 1` for `θ = arg x ∈ [0, 2π)`, with `θ = 0` in sector 0.
#[inline]
fn ce_index(x: Complex64, levels: usize) -> usize {
    let mut theta = x.im.atan2(x.re);
    if theta < 0.0 {
        theta += 2.0 * PI;
    }
    let t = theta * levels as f64 / (2.0 * PI);
    let idx = t.ceil() - 1.0;
    if idx < 0.0 {
        0
    } else {
        (idx as usize).min(levels - 1)
    }
}

pub fn quantize(q: &Quantizer, x: Complex64) -> Complex64 {
    q.quantize(x)
}

impl fmt::Display for Quantizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Quantizer::Independent { levels, interval } => write!(f, "indep:{levels}:{interval}"),
            Quantizer::ConstantEnvelope { levels } => write!(f, "ce:{levels}"),
            Quantizer::Identity => f.write_str("identity"),
        }
    }
}

impl FromStr for Quantizer {
    type Err = Error;

    /// `ce:L`, `indep:L:Δ` or `identity`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split(':').collect();
        let parse_l = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad level count '{t}' in quantizer '{s}'")))
        };
        match parts.as_slice() {
            ["identity"] => Ok(Quantizer::Identity),
            ["ce", l] => Quantizer::constant_envelope(parse_l(l)?),
            ["indep", l, d] => {
                let delta = d
                    .parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad interval '{d}' in quantizer '{s}'")))?;
                Quantizer::independent(parse_l(l)?, delta)
            }
            _ => Err(Error::Parse(format!(
                "unknown quantizer '{s}' (expected ce:L, indep:L:DELTA or identity)"
            ))),
        }
    }
}

/// Moments of `q(ᾱZ)` for `Z ~ CN(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantizerMoments {
    pub alpha: f64,
    /// `E[Z* q(ᾱZ)]`
    pub cross: Complex64,
    /// `E|q(ᾱZ)|²`
    pub out_power: f64,
    /// `C̄₁ = cross / ᾱ`
    pub gain: Complex64,
    /// `C̄₂ = √(out_power − |cross|²)`
    pub distortion: f64,
}

impl QuantizerMoments {
    fn from_parts(alpha: f64, cross: Complex64, out_power: f64) -> Self {
        Self {
            alpha,
            cross,
            out_power,
            gain: cross / alpha,
            distortion: (out_power - cross.norm_sqr()).max(0.0).sqrt(),
        }
    }
}

/// Closed-form moments.
pub fn moments(q: &Quantizer, alpha: f64) -> Result<QuantizerMoments> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::InvalidArgument(format!("alpha must be > 0 (got {alpha})")));
    }
    let (cross, out_power) = match *q {
        Quantizer::Identity => (Complex64::new(alpha, 0.0), alpha * alpha),
        Quantizer::ConstantEnvelope { levels } => (Complex64::new(ce_cross(levels), 0.0), 1.0),
        Quantizer::Independent { levels, interval } => {
            let (c, p) = independent_axis_moments(sqrt_levels(levels), interval, alpha);
            (Complex64::new(2.0 * c, 0.0), 2.0 * p)
        }
    };
    Ok(QuantizerMoments::from_parts(alpha, cross, out_power))
}

/// `E[Z* q_CE(ᾱZ)] = L sin(π/L) / (2√π)` for every `ᾱ`.
pub fn ce_cross(levels: usize) -> f64 {
    let l = levels as f64;
    l * (PI / l).sin() / (2.0 * PI.sqrt())
}

/// Per-axis `(E[X q_r(αX)], E[q_r(αX)²])` for `X ~ N(0, 1/2)`.
///
/// With `W = √2 X ~ N(0, 1)` level `l_k` is hit on `(a_k, b_k]`, the
/// thresholds scaled by `√2/α`; `E[W 1{a<W≤b}] = φ(a) − φ(b)`.
fn independent_axis_moments(n: usize, delta: f64, alpha: f64) -> (f64, f64) {
    let scale = SQRT_2 / alpha;
    let mut cross = 0.0;
    let mut power = 0.0;
    for k in 0..n {
        let level = 0.5 * delta * (2.0 * k as f64 + 1.0 - n as f64);
        let a = if k == 0 {
            f64::NEG_INFINITY
        } else {
            delta * (k as f64 - 0.5 * n as f64) * scale
        };
        let b = if k + 1 == n {
            f64::INFINITY
        } else {
            delta * (k as f64 + 1.0 - 0.5 * n as f64) * scale
        };
        cross += level * (normal_pdf(a) - normal_pdf(b));
        power += level * level * (normal_cdf(b) - normal_cdf(a));
    }
    (cross * FRAC_1_SQRT_2, power)
}

/// `φ(ᾱ, η) = (E|q|² − |cross|² + σ²/η²) / |cross|²`.
pub fn phi(q: &Quantizer, alpha: f64, eta: f64, noise_var: f64) -> Result<f64> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidArgument(format!("eta must be > 0 (got {eta})")));
    }
    if !(noise_var >= 0.0) {
        return Err(Error::InvalidArgument("noise variance must be >= 0".into()));
    }
    let m = moments(q, alpha)?;
    phi_from_moments(&m, eta, noise_var)
}

pub fn phi_from_moments(m: &QuantizerMoments, eta: f64, noise_var: f64) -> Result<f64> {
    let c2 = m.cross.norm_sqr();
    if !(c2 > 0.0) {
        return Err(Error::ZeroBussgangGain);
    }
    Ok(((m.out_power - c2).max(0.0) + noise_var / (eta * eta)) / c2)
}

/// Tensor Gauss–Hermite moments of an arbitrary memoryless map, with
/// `nodes` points per axis. Spectrally accurate for smooth maps; on
/// staircase maps each central node carries ~15% of the mass at 64 nodes,
/// so use [`reference_moments`] there.
pub fn gauss_hermite_moments(
    f: impl Fn(Complex64) -> Complex64,
    alpha: f64,
    nodes: usize,
) -> Result<QuantizerMoments> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be > 0 (got {alpha})")));
    }
    let r = quadrature::gauss_hermite(nodes);
    // Z = X + jY with X, Y ~ N(0, 1/2): density e^{-x²-y²}/π
    let mut cross = Complex64::new(0.0, 0.0);
    let mut power = 0.0;
    for (x, wx) in r.nodes.iter().zip(&r.weights) {
        for (y, wy) in r.nodes.iter().zip(&r.weights) {
            let z = Complex64::new(*x, *y);
            let out = f(z * alpha);
            let w = wx * wy / PI;
            cross += z.conj() * out * w;
            power += out.norm_sqr() * w;
        }
    }
    Ok(QuantizerMoments::from_parts(alpha, cross, power))
}

/// Reference quadrature that splits the domain along the quantizer's
/// decision boundaries, so every panel sees a smooth integrand.
///
/// CE: polar coordinates, angular panels per sector, radial Gauss–Legendre
/// on `[0, 12]`. Independent: Cartesian product of per-axis panels between
/// thresholds, truncated at `±12` standard deviations.
pub fn reference_moments(q: &Quantizer, alpha: f64) -> Result<QuantizerMoments> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("alpha must be > 0 (got {alpha})")));
    }
    let base = quadrature::gauss_legendre(24);
    match *q {
        Quantizer::Identity => gauss_hermite_moments(|z| z, alpha, 8),
        Quantizer::ConstantEnvelope { levels } => {
            let radial = quadrature::composite_with(&base, 0.0, 12.0, 24);
            let mut cross = Complex64::new(0.0, 0.0);
            let mut power = 0.0;
            let sector = 2.0 * PI / levels as f64;
            for s in 0..levels {
                let ang = quadrature::composite_with(&base, s as f64 * sector, (s + 1) as f64 * sector, 2);
                for (t, wt) in ang.nodes.iter().zip(&ang.weights) {
                    for (r, wr) in radial.nodes.iter().zip(&radial.weights) {
                        let z = Complex64::from_polar(*r, *t);
                        let out = q.quantize(z * alpha);
                        // density e^{-r²}/π with Jacobian r
                        let w = wt * wr * r * (-r * r).exp() / PI;
                        cross += z.conj() * out * w;
                        power += out.norm_sqr() * w;
                    }
                }
            }
            Ok(QuantizerMoments::from_parts(alpha, cross, power))
        }
        Quantizer::Independent { levels, interval } => {
            let axis = independent_axis_rule(&base, sqrt_levels(levels), interval, alpha);
            let mut cross = Complex64::new(0.0, 0.0);
            let mut power = 0.0;
            for (x, wx) in axis.nodes.iter().zip(&axis.weights) {
                for (y, wy) in axis.nodes.iter().zip(&axis.weights) {
                    let z = Complex64::new(*x, *y);
                    let out = q.quantize(z * alpha);
                    let w = wx * wy * (-x * x - y * y).exp() / PI;
                    cross += z.conj() * out * w;
                    power += out.norm_sqr() * w;
                }
            }
            Ok(QuantizerMoments::from_parts(alpha, cross, power))
        }
    }
}

fn independent_axis_rule(base: &Rule, n: usize, delta: f64, alpha: f64) -> Rule {
    let lim = 12.0 * FRAC_1_SQRT_2;
    let mut cuts = vec![-lim];
    for k in 1..n {
        let t = delta * (k as f64 - 0.5 * n as f64) / alpha;
        if t > -lim && t < lim {
            cuts.push(t);
        }
    }
    cuts.push(lim);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in cuts.windows(2) {
        let r = quadrature::composite_with(base, w[0], w[1], 4);
        nodes.extend(r.nodes);
        weights.extend(r.weights);
    }
    Rule { nodes, weights }
}

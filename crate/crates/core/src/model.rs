//! System configuration, symbol constellations and nearest-neighbour decoding.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensions and power parameters of a downlink.
///
/// `num_antennas` / `num_users` are optional: purely asymptotic analyses only
/// need the ratio `gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub num_antennas: Option<usize>,
    pub num_users: Option<usize>,
    pub gamma: f64,
    pub noise_var: f64,
    pub symbol_var: f64,
    pub power_budget: f64,
}

impl SystemConfig {
    /// Asymptotic configuration with antenna/user ratio `gamma > 1`.
    pub fn asymptotic(gamma: f64) -> Result<Self> {
        let cfg = Self {
            num_antennas: None,
            num_users: None,
            gamma,
            noise_var: 0.0,
            symbol_var: 1.0,
            power_budget: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Finite system with `n` antennas and `k` users.
    pub fn finite(n: usize, k: usize) -> Result<Self> {
        if n < 3 || k < 3 {
            return Err(Error::InvalidConfig(format!(
                "finite systems need N >= 3 and K >= 3 (got N={n}, K={k})"
            )));
        }
        let cfg = Self {
            num_antennas: Some(n),
            num_users: Some(k),
            gamma: n as f64 / k as f64,
            noise_var: 0.0,
            symbol_var: 1.0,
            power_budget: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Finite system with `k` users and `round(gamma * k)` antennas.
    pub fn from_gamma_users(gamma: f64, k: usize) -> Result<Self> {
        let n = (gamma * k as f64).round() as usize;
        Self::finite(n, k)
    }

    pub fn with_noise_var(mut self, noise_var: f64) -> Result<Self> {
        self.noise_var = noise_var;
        self.validate()?;
        Ok(self)
    }

    /// Sets the noise variance from a channel SNR in dB (SNR = 1/σ²).
    pub fn with_snr_db(self, snr_db: f64) -> Result<Self> {
        self.with_noise_var(10f64.powf(-snr_db / 10.0))
    }

    pub fn with_symbol_var(mut self, symbol_var: f64) -> Result<Self> {
        self.symbol_var = symbol_var;
        self.validate()?;
        Ok(self)
    }

    pub fn with_power_budget(mut self, power_budget: f64) -> Result<Self> {
        self.power_budget = power_budget;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 1.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "antenna/user ratio must satisfy gamma > 1 (got {})",
                self.gamma
            )));
        }
        if let (Some(n), Some(k)) = (self.num_antennas, self.num_users) {
            if k >= n {
                return Err(Error::InvalidConfig(format!(
                    "need fewer users than antennas (N={n}, K={k})"
                )));
            }
            if self.gamma != n as f64 / k as f64 {
                return Err(Error::InvalidConfig("gamma must equal N/K".into()));
            }
        }
        if !(self.noise_var >= 0.0) || !self.noise_var.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be finite and >= 0 (got {})",
                self.noise_var
            )));
        }
        if !(self.symbol_var > 0.0) || !self.symbol_var.is_finite() {
            return Err(Error::InvalidConfig("symbol variance must be > 0".into()));
        }
        if !(self.power_budget > 0.0) || !self.power_budget.is_finite() {
            return Err(Error::InvalidConfig("power budget must be > 0".into()));
        }
        Ok(())
    }

    /// `(N, K)`, or an error for purely asymptotic configurations.
    pub fn dims(&self) -> Result<(usize, usize)> {
        match (self.num_antennas, self.num_users) {
            (Some(n), Some(k)) => Ok((n, k)),
            _ => Err(Error::InvalidConfig(
                "operation needs a finite system (N and K)".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConstellationKind {
    Psk,
    Qam,
}

impl fmt::Display for ConstellationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstellationKind::Psk => f.write_str("psk"),
            ConstellationKind::Qam => f.write_str("qam"),
        }
    }
}

/// A finite, zero-free symbol alphabet with uniform priors.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    kind: ConstellationKind,
    order: usize,
    points: Vec<Complex64>,
    symbol_var: f64,
}

/// Builds an M-PSK or M-QAM constellation with average energy `symbol_var`.
///
/// PSK points are `σ_s e^{j2πm/M}` (phase offset 0, so QPSK sits on the
/// axes). QAM points form a square grid, indexed row-major over
/// (real level, imaginary level), both ascending.
pub fn make_constellation(
    kind: ConstellationKind,
    order: usize,
    symbol_var: f64,
) -> Result<Constellation> {
    Constellation::new(kind, order, symbol_var, 0.0)
}

impl Constellation {
    /// Like [`make_constellation`] but rotates PSK points by `phase_offset`.
    pub fn new(
        kind: ConstellationKind,
        order: usize,
        symbol_var: f64,
        phase_offset: f64,
    ) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::InvalidConstellation(format!(
                "order must be a power of two >= 2 (got {order})"
            )));
        }
        if !(symbol_var > 0.0) || !symbol_var.is_finite() {
            return Err(Error::InvalidConstellation(
                "symbol variance must be > 0".into(),
            ));
        }
        let points = match kind {
            ConstellationKind::Psk => {
                let amp = symbol_var.sqrt();
                (0..order)
                    .map(|m| {
                        Complex64::from_polar(amp, 2.0 * PI * m as f64 / order as f64 + phase_offset)
                    })
                    .collect()
            }
            ConstellationKind::Qam => {
                let side = (order as f64).sqrt().round() as usize;
                if side * side != order || side < 2 {
                    return Err(Error::InvalidConstellation(format!(
                        "QAM order must be a perfect square (got {order})"
                    )));
                }
                // odd-integer grid has mean energy 2(M-1)/3
                let scale = (symbol_var * 3.0 / (2.0 * (order as f64 - 1.0))).sqrt();
                let level = |i: usize| (2.0 * i as f64 - (side as f64 - 1.0)) * scale;
                let mut pts = Vec::with_capacity(order);
                for i in 0..side {
                    for j in 0..side {
                        pts.push(Complex64::new(level(i), level(j)));
                    }
                }
                pts
            }
        };
        Ok(Self {
            kind,
            order,
            points,
            symbol_var,
        })
    }

    pub fn kind(&self) -> ConstellationKind {
        self.kind
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, index: usize) -> Complex64 {
        self.points[index]
    }

    pub fn symbol_var(&self) -> f64 {
        self.symbol_var
    }

    /// Index of the nearest point; ties go to the smallest index.
    #[inline]
    pub fn decode(&self, r: Complex64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (m, p) in self.points.iter().enumerate() {
            let d = (r - p).norm_sqr();
            if d < best_d {
                best_d = d;
                best = m;
            }
        }
        best
    }

    /// Half-space description of every nearest-neighbour decision region,
    /// keeping only the constraints that touch the region boundary.
    pub fn decision_regions(&self) -> Vec<DecisionRegion> {
        (0..self.order).map(|m| self.region_of(m)).collect()
    }

    fn region_of(&self, m: usize) -> DecisionRegion {
        let s = self.points[m];
        let all: Vec<HalfSpace> = self
            .points
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != m)
            .map(|(i, &si)| HalfSpace {
                neighbor: i,
                normal: si - s,
                offset: s.norm_sqr() - si.norm_sqr(),
            })
            .collect();
        let scale = self.symbol_var;
        let active = all
            .iter()
            .enumerate()
            .filter(|&(j, h)| boundary_segment_len(h, &all, j) > 1e-9 * scale.sqrt())
            .map(|(_, h)| *h)
            .collect();
        DecisionRegion {
            symbol: m,
            constraints: active,
        }
    }
}

pub fn decode(r: Complex64, c: &Constellation) -> usize {
    c.decode(r)
}

pub fn sep_decision_regions(c: &Constellation) -> Vec<DecisionRegion> {
    c.decision_regions()
}

/// `{ r : 2 Re(normal* r) + offset < 0 }`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpace {
    pub neighbor: usize,
    pub normal: Complex64,
    pub offset: f64,
}

impl HalfSpace {
    #[inline]
    pub fn value(&self, r: Complex64) -> f64 {
        2.0 * (self.normal.conj() * r).re + self.offset
    }

    pub fn contains(&self, r: Complex64) -> bool {
        self.value(r) < 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRegion {
    pub symbol: usize,
    pub constraints: Vec<HalfSpace>,
}

impl DecisionRegion {
    pub fn contains(&self, r: Complex64) -> bool {
        self.constraints.iter().all(|h| h.contains(r))
    }

    /// Largest constraint value; zero on the boundary, negative inside.
    pub fn margin(&self, r: Complex64) -> f64 {
        self.constraints
            .iter()
            .map(|h| h.value(r))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Length of the piece of `all[j]`'s boundary line lying inside every other
/// half-space (infinite for unbounded pieces).
fn boundary_segment_len(h: &HalfSpace, all: &[HalfSpace], j: usize) -> f64 {
    let a = h.normal;
    let a2 = a.norm_sqr();
    let r0 = a * (-h.offset / (2.0 * a2));
    let dir = Complex64::new(0.0, 1.0) * a / a2.sqrt();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (k, other) in all.iter().enumerate() {
        if k == j {
            continue;
        }
        // other.value(r0 + t dir) = c0 + c1 t < 0
        let c0 = other.value(r0);
        let c1 = 2.0 * (other.normal.conj() * dir).re;
        let tol = 1e-12 * (other.normal.norm() + 1.0);
        if c1.abs() <= tol {
            if c0 >= 0.0 {
                return 0.0;
            }
        } else if c1 > 0.0 {
            hi = hi.min(-c0 / c1);
        } else {
            lo = lo.max(-c0 / c1);
        }
        if hi <= lo {
            return 0.0;
        }
    }
    hi - lo
}

//! Optimal input scale, DAC scale and spectral shaping for a quantizer.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::mp::{self, MpDistribution, SINR_SENTINEL, ShapingFunction};
use crate::quantizer::{self, Quantizer, QuantizerMoments};

pub const ALPHA_MIN: f64 = 1e-3;
pub const ALPHA_MAX: f64 = 1e3;
const GRID_POINTS: usize = 200;
const ALPHA_RTOL: f64 = 1e-8;

/// Minimizes a unimodal `f` on `[lo, hi]` until the bracket is narrower
/// than `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 { (x1, f1) } else { (x2, f2) }
}

/// Result of the scale search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaSearch {
    pub alpha_star: f64,
    pub phi_star: f64,
    /// `inf E|q|² / |cross|²`
    pub min_ratio: f64,
    /// Objective constant over the search domain; `alpha_star` is then 1.
    pub flat: bool,
    /// Minimum landed on the edge of `[1e-3, 1e3]`.
    pub on_boundary: bool,
}

/// `ᾱ*, φ* = (1 + σ²/P_T) inf_ᾱ E|q(ᾱZ)|²/|E[Z*q(ᾱZ)]|² − 1`.
pub fn optimize_alpha(q: &Quantizer, noise_var: f64, power_budget: f64) -> Result<(f64, f64)> {
    let s = search_alpha(|a| quantizer::moments(q, a), noise_var, power_budget)?;
    Ok((s.alpha_star, s.phi_star))
}

/// Scale search over any moment map.
pub fn search_alpha(
    moments: impl Fn(f64) -> Result<QuantizerMoments>,
    noise_var: f64,
    power_budget: f64,
) -> Result<AlphaSearch> {
    if !(noise_var >= 0.0) || !(power_budget > 0.0) {
        return Err(Error::InvalidArgument(
            "need noise variance >= 0 and power budget > 0".into(),
        ));
    }
    let ratio = |a: f64| -> f64 {
        match moments(a) {
            Ok(m) if m.cross.norm_sqr() > 0.0 => m.out_power / m.cross.norm_sqr(),
            _ => f64::INFINITY,
        }
    };
    let (lmin, lmax) = (ALPHA_MIN.ln(), ALPHA_MAX.ln());
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| lmin + (lmax - lmin) * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let vals: Vec<f64> = grid.iter().map(|&l| ratio(l.exp())).collect();
    let finite: Vec<f64> = vals.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() {
        return Err(Error::DegenerateQuantizer);
    }
    let lo_v = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi_v = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let prefactor = 1.0 + noise_var / power_budget;
    if finite.len() == vals.len() && hi_v - lo_v <= 1e-12 * lo_v {
        let r = ratio(1.0);
        return Ok(AlphaSearch {
            alpha_star: 1.0,
            phi_star: prefactor * r - 1.0,
            min_ratio: r,
            flat: true,
            on_boundary: false,
        });
    }
    let i = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_finite())
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .ok_or(Error::DegenerateQuantizer)?;
    let lo = grid[i.saturating_sub(1)];
    let hi = grid[(i + 1).min(GRID_POINTS - 1)];
    // an absolute width in log α is a relative width in α
    let (mut l_star, mut best) = golden_section(|l| ratio(l.exp()), lo, hi, ALPHA_RTOL);
    if vals[i] < best {
        l_star = grid[i];
        best = vals[i];
    }
    let alpha_star = l_star.exp();
    let on_boundary = i == 0 || i == GRID_POINTS - 1;
    Ok(AlphaSearch {
        alpha_star,
        phi_star: prefactor * best - 1.0,
        min_ratio: best,
        flat: false,
        on_boundary,
    })
}

/// Asymptotically optimal design for one quantizer and system.
#[derive(Debug, Clone, Serialize)]
pub struct OptimalDesign {
    pub alpha_star: f64,
    pub phi_star: f64,
    pub eta_star: f64,
    pub tau_star: f64,
    pub rho_star: f64,
    #[serde(serialize_with = "serialize_display")]
    pub shaping: ShapingFunction,
    pub zeta_star: f64,
    /// `E|q(ᾱ*Z)|²`
    pub out_power: f64,
    pub search: AlphaSearch,
}

fn serialize_display<S: serde::Serializer>(f: &ShapingFunction, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(f)
}

impl OptimalDesign {
    /// Same regularization with `τ = 1`; for CE quantizers the scale is
    /// irrelevant.
    pub fn unscaled_shaping(&self) -> ShapingFunction {
        ShapingFunction::Rzf(self.rho_star)
    }
}

pub fn optimal_design(cfg: &SystemConfig, q: &Quantizer) -> Result<OptimalDesign> {
    let dist = MpDistribution::new(cfg.gamma)?;
    optimal_design_with(&dist, cfg, q)
}

pub fn optimal_design_with(dist: &MpDistribution, cfg: &SystemConfig, q: &Quantizer) -> Result<OptimalDesign> {
    cfg.validate()?;
    let search = search_alpha(|a| quantizer::moments(q, a), cfg.noise_var, cfg.power_budget)?;
    design_from_search(dist, cfg, q, search)
}

fn design_from_search(
    dist: &MpDistribution,
    cfg: &SystemConfig,
    q: &Quantizer,
    search: AlphaSearch,
) -> Result<OptimalDesign> {
    let alpha_star = search.alpha_star;
    let phi_star = search.phi_star;
    if !phi_star.is_finite() {
        return Err(Error::DegenerateQuantizer);
    }
    let out_power = quantizer::moments(q, alpha_star)?.out_power;
    let eta_star = (cfg.power_budget / out_power).sqrt();
    let gamma = cfg.gamma;
    let rho_star = phi_star / gamma;
    let e_g2 = dist.expect(|d| (d / (d * d + rho_star)).powi(2))?;
    let tau_star = (cfg.symbol_var / (gamma * alpha_star * alpha_star) * e_g2).sqrt();
    let e_ratio = dist.expect(|d| d * d / (d * d + rho_star))?;
    let gap = 1.0 - e_ratio;
    let zeta_star = if gap <= 1e-13 {
        SINR_SENTINEL
    } else {
        1.0 / gap - 1.0
    };
    Ok(OptimalDesign {
        alpha_star,
        phi_star,
        eta_star,
        tau_star,
        rho_star,
        shaping: ShapingFunction::OptimalScaled {
            rho: rho_star,
            tau: tau_star,
        },
        zeta_star,
        out_power,
        search,
    })
}

/// `√(P_T / E|q(ᾱ_f Z)|²)` for the input scale `f` induces.
pub fn saturating_eta(cfg: &SystemConfig, f: &ShapingFunction, q: &Quantizer) -> Result<f64> {
    let dist = MpDistribution::new(cfg.gamma)?;
    saturating_eta_with(&dist, cfg, f, q)
}

pub fn saturating_eta_with(
    dist: &MpDistribution,
    cfg: &SystemConfig,
    f: &ShapingFunction,
    q: &Quantizer,
) -> Result<f64> {
    f.check_support(dist)?;
    let mean_f2 = dist.expect(|d| f.eval(d).powi(2))?;
    let alpha = (cfg.symbol_var * mean_f2 / cfg.gamma).sqrt();
    let p = quantizer::moments(q, alpha)?.out_power;
    Ok((cfg.power_budget / p).sqrt())
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditEntry {
    pub name: String,
    pub eta: f64,
    pub sinr: f64,
    /// `ζ* − sinr`
    pub margin: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub zeta_star: f64,
    pub entries: Vec<AuditEntry>,
    pub all_ok: bool,
}

/// SINR of each rival at its own power-saturating `η`, checked against
/// `ζ* + 1e-9`.
pub fn optimality_audit(
    cfg: &SystemConfig,
    q: &Quantizer,
    design: &OptimalDesign,
    rivals: &[ShapingFunction],
) -> Result<AuditReport> {
    let dist = MpDistribution::new(cfg.gamma)?;
    let mut entries = Vec::with_capacity(rivals.len());
    for f in rivals {
        let eta = saturating_eta_with(&dist, cfg, f, q)?;
        let r = mp::asymptotic_sinr_with(&dist, cfg, f, q, eta)?;
        let margin = design.zeta_star - r.sinr;
        entries.push(AuditEntry {
            name: f.to_string(),
            eta,
            sinr: r.sinr,
            margin,
            ok: margin >= -1e-9,
        });
    }
    let all_ok = entries.iter().all(|e| e.ok);
    Ok(AuditReport {
        zeta_star: design.zeta_star,
        entries,
        all_ok,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mp::qce_closed_forms;
    use num_complex::Complex64;

    #[test]
    fn golden_section_quadratic() {
        let (x, fx) = golden_section(|x| (x - 1.234).powi(2), 0.0, 5.0, 1e-10);
        assert!((x - 1.234).abs() < 1e-8);
        assert!(fx < 1e-16);
    }

    #[test]
    fn ce_is_flat() {
        for levels in [4usize, 8, 16, 32] {
            let q = Quantizer::constant_envelope(levels).unwrap();
            let s = search_alpha(|a| quantizer::moments(&q, a), 0.0, 1.0).unwrap();
            assert!(s.flat);
            assert_eq!(s.alpha_star, 1.0);
            let cfg = SystemConfig::asymptotic(3.0).unwrap();
            let cf = qce_closed_forms(&cfg, &q).unwrap();
            assert!((s.phi_star - cf.c_l).abs() < 1e-12);
        }
    }

    #[test]
    fn one_bit_independent_phi() {
        let q = Quantizer::independent(4, 2.0).unwrap();
        let (_, phi) = optimize_alpha(&q, 0.0, 1.0).unwrap();
        assert!((phi - 0.57).abs() < 0.01);
    }

    #[test]
    fn independent_interior_minimum() {
        for levels in [16usize, 64, 256] {
            let q = Quantizer::independent(levels, 1.0).unwrap();
            let s = search_alpha(|a| quantizer::moments(&q, a), 0.0, 1.0).unwrap();
            assert!(!s.flat && !s.on_boundary, "{levels}");
            // the refined point beats its neighbours
            for f in [0.999, 1.001] {
                let m = quantizer::moments(&q, s.alpha_star * f).unwrap();
                assert!(m.out_power / m.cross.norm_sqr() >= s.min_ratio - 1e-14);
            }
        }
    }

    #[test]
    fn ce_design_matches_closed_forms() {
        let cfg = SystemConfig::asymptotic(3.0).unwrap();
        let q = Quantizer::constant_envelope(4).unwrap();
        let d = optimal_design(&cfg, &q).unwrap();
        let cf = qce_closed_forms(&cfg, &q).unwrap();
        assert!((d.eta_star - 1.0).abs() < 1e-15);
        assert!((d.phi_star - cf.c_l).abs() < 1e-8);
        assert!((d.rho_star - cf.rho_opt).abs() < 1e-8);
        assert!((d.zeta_star - cf.sinr_opt).abs() < 1e-8);
        assert!((d.rho_star - 0.1903).abs() < 1e-4);
    }

    #[test]
    fn identity_design_is_zf() {
        let cfg = SystemConfig::asymptotic(3.0).unwrap();
        let d = optimal_design(&cfg, &Quantizer::Identity).unwrap();
        assert_eq!(d.phi_star, 0.0);
        assert_eq!(d.rho_star, 0.0);
        assert_eq!(d.zeta_star, SINR_SENTINEL);
        // f* ∝ 1/d
        let r = d.shaping.eval(0.7) * 0.7 / (d.shaping.eval(1.3) * 1.3);
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn degenerate_quantizer_error() {
        let zero = |a: f64| {
            Ok(QuantizerMoments {
                alpha: a,
                cross: Complex64::new(0.0, 0.0),
                out_power: 1.0,
                gain: Complex64::new(0.0, 0.0),
                distortion: 1.0,
            })
        };
        assert_eq!(search_alpha(zero, 0.0, 1.0).unwrap_err(), Error::DegenerateQuantizer);
    }

    #[test]
    fn design_invariants() {
        let dist = MpDistribution::new(3.0).unwrap();
        for q in [
            Quantizer::independent(16, 1.0).unwrap(),
            Quantizer::independent(64, 0.5).unwrap(),
            Quantizer::constant_envelope(8).unwrap(),
        ] {
            for sigma2 in [0.0, 0.1] {
                let cfg = SystemConfig::asymptotic(3.0).unwrap().with_noise_var(sigma2).unwrap();
                let d = optimal_design(&cfg, &q).unwrap();
                let p = quantizer::moments(&q, d.alpha_star).unwrap().out_power;
                assert!((d.eta_star.powi(2) * p / cfg.power_budget - 1.0).abs() < 1e-8);
                let e_f2 = dist.expect(|x| d.shaping.eval(x).powi(2)).unwrap();
                let want = cfg.gamma * d.alpha_star.powi(2) / cfg.symbol_var;
                assert!((e_f2 / want - 1.0).abs() < 1e-6);
                // f* at η* reproduces ζ*
                let r = mp::asymptotic_sinr_with(&dist, &cfg, &d.shaping, &q, d.eta_star).unwrap();
                assert!((r.sinr - d.zeta_star).abs() < 1e-9 * d.zeta_star.max(1.0), "{q}: {} vs {}", r.sinr, d.zeta_star);
                assert!((r.alpha_bar / d.alpha_star - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn audit_small() {
        let cfg = SystemConfig::asymptotic(3.0).unwrap();
        let q = Quantizer::constant_envelope(4).unwrap();
        let d = optimal_design(&cfg, &q).unwrap();
        let rivals = vec![
            ShapingFunction::MatchedFilter,
            ShapingFunction::ZeroForcing,
            ShapingFunction::Rzf(0.05),
            ShapingFunction::Rzf(0.5),
            ShapingFunction::Rzf(d.rho_star),
            d.shaping.clone(),
        ];
        let rep = optimality_audit(&cfg, &q, &d, &rivals).unwrap();
        assert!(rep.all_ok);
        assert!(rep.entries[4].margin.abs() < 1e-9);
        assert!(rep.entries[5].margin.abs() < 1e-9);
    }
}

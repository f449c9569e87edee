//! Gauss–Legendre and Gauss–Hermite rules.

use std::f64::consts::PI;

/// Nodes and weights of an n-point rule.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss–Legendre on [-1, 1], Newton iteration on the three-term recurrence.
pub fn gauss_legendre(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, d) = legendre(n, x);
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    Rule { nodes, weights }
}

/// P_n(x) and P_n'(x).
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss–Hermite for weight e^{-x^2} on the real line.
///
/// Uses the orthonormal recurrence to keep the iteration stable for n ~ 100.
pub fn gauss_hermite(n: usize) -> Rule {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let pim4 = PI.powf(-0.25);
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        // standard initial guesses (Numerical Recipes gauher)
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..200 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 1..=n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let dz = p1 / pp;
            z -= dz;
            if dz.abs() < 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        nodes[i] = z;
        weights[i] = 2.0 / (pp * pp);
    }
    // gauher fills descending; mirror into ascending order
    let mut out_n = vec![0.0; n];
    let mut out_w = vec![0.0; n];
    for i in 0..m {
        out_n[n - 1 - i] = nodes[i];
        out_w[n - 1 - i] = weights[i];
        out_n[i] = -nodes[i];
        out_w[i] = weights[i];
    }
    Rule {
        nodes: out_n,
        weights: out_w,
    }
}

/// Composite Gauss–Legendre on [lo, hi] split into `panels` equal pieces.
pub fn composite_legendre(lo: f64, hi: f64, panels: usize, per_panel: usize) -> Rule {
    let base = gauss_legendre(per_panel);
    composite_with(&base, lo, hi, panels)
}

pub(crate) fn composite_with(base: &Rule, lo: f64, hi: f64, panels: usize) -> Rule {
    let h = (hi - lo) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * base.nodes.len());
    let mut weights = Vec::with_capacity(panels * base.nodes.len());
    for p in 0..panels {
        let a = lo + h * p as f64;
        for (x, w) in base.nodes.iter().zip(&base.weights) {
            nodes.push(a + 0.5 * h * (x + 1.0));
            weights.push(0.5 * h * w);
        }
    }
    Rule { nodes, weights }
}

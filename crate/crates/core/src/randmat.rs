//! Gaussian channels, thin SVDs and matrix-free Householder reflectors.

use faer::{Mat, Side};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::SystemConfig;
use crate::rng::{complex_normal, complex_normal_vec};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// K x N channel with i.i.d. CN(0, 1/N) entries, filled row by row.
pub fn sample_channel<R: Rng + ?Sized>(cfg: &SystemConfig, rng: &mut R) -> Result<Mat<Complex64>> {
    let (n, k) = cfg.dims()?;
    Ok(sample_gaussian_matrix(k, n, 1.0 / n as f64, rng))
}

pub fn sample_gaussian_matrix<R: Rng + ?Sized>(
    rows: usize,
    cols: usize,
    var: f64,
    rng: &mut R,
) -> Mat<Complex64> {
    let mut h = Mat::<Complex64>::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            h[(i, j)] = complex_normal(rng, var);
        }
    }
    h
}

/// `H = U diag(d) V_thinᴴ` with singular values in descending order.
#[derive(Debug, Clone)]
pub struct ChannelDecomposition {
    pub h: Mat<Complex64>,
    pub u: Mat<Complex64>,
    pub singulars: Vec<f64>,
    pub v_thin: Mat<Complex64>,
}

impl ChannelDecomposition {
    pub fn num_users(&self) -> usize {
        self.h.nrows()
    }

    pub fn num_antennas(&self) -> usize {
        self.h.ncols()
    }

    /// `‖H − U diag(d) V_thinᴴ‖_F / ‖H‖_F`.
    pub fn reconstruction_error(&self) -> f64 {
        let mut ud = self.u.clone();
        for (j, &d) in self.singulars.iter().enumerate() {
            for i in 0..ud.nrows() {
                ud[(i, j)] *= d;
            }
        }
        let rec = &ud * self.v_thin.adjoint();
        (&self.h - &rec).norm_l2() / self.h.norm_l2()
    }
}

fn check_rank(d: &[f64]) -> Result<()> {
    let first = d.first().copied().unwrap_or(0.0);
    let last = d.last().copied().unwrap_or(0.0);
    if !(first > 0.0) || !(last >= 1e-12 * first) {
        return Err(Error::RankDeficient {
            ratio: if first > 0.0 { last / first } else { 0.0 },
        });
    }
    Ok(())
}

/// Thin SVD of a wide K x N matrix (K <= N).
pub fn thin_svd(h: &Mat<Complex64>) -> Result<ChannelDecomposition> {
    let (k, n) = (h.nrows(), h.ncols());
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "thin_svd expects a wide matrix, got {k}x{n}"
        )));
    }
    let svd = h
        .thin_svd()
        .map_err(|e| Error::LinAlg(format!("svd did not converge: {e:?}")))?;
    let s = svd.S().column_vector();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| s[b].re.total_cmp(&s[a].re));
    let singulars: Vec<f64> = order.iter().map(|&i| s[i].re).collect();
    check_rank(&singulars)?;
    let (su, sv) = (svd.U(), svd.V());
    let u = Mat::from_fn(k, k, |i, j| su[(i, order[j])]);
    let v_thin = Mat::from_fn(n, k, |i, j| sv[(i, order[j])]);
    Ok(ChannelDecomposition {
        h: h.clone(),
        u,
        singulars,
        v_thin,
    })
}

/// Same factors through the eigendecomposition of `HHᴴ`, with
/// `V_thin = Hᴴ U D⁻¹`. About three times faster than [`thin_svd`];
/// orthonormality degrades with the squared condition number, which stays
/// small for `gamma > 1` Gaussian channels.
pub fn thin_svd_gram(h: &Mat<Complex64>) -> Result<ChannelDecomposition> {
    let (k, n) = (h.nrows(), h.ncols());
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "thin_svd_gram expects a wide matrix, got {k}x{n}"
        )));
    }
    let g = h * h.adjoint();
    let evd = g
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::LinAlg(format!("eigendecomposition failed: {e:?}")))?;
    let lam = evd.S().column_vector();
    let eu = evd.U();
    // ascending -> descending
    let singulars: Vec<f64> = (0..k).rev().map(|i| lam[i].re.max(0.0).sqrt()).collect();
    check_rank(&singulars)?;
    let u = Mat::from_fn(k, k, |i, j| eu[(i, k - 1 - j)]);
    let mut v_thin = h.adjoint() * &u;
    for (j, &d) in singulars.iter().enumerate() {
        let inv = 1.0 / d;
        for i in 0..n {
            v_thin[(i, j)] *= inv;
        }
    }
    Ok(ChannelDecomposition {
        h: h.clone(),
        u,
        singulars,
        v_thin,
    })
}

/// Largest deviation of `AᴴA` from the identity.
pub fn orthonormality_error(a: &Mat<Complex64>) -> f64 {
    let g = a.adjoint() * a;
    let mut worst = 0.0f64;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

/// `R(v) = p_v (I − 2uuᴴ/‖u‖²)` with `u = v − p_v‖v‖e₁` and
/// `p_v = −e^{j arg v_s}`, `s` the first nonzero index.
#[derive(Debug, Clone)]
pub struct HouseholderReflector {
    anchor: Vec<Complex64>,
    phase: Complex64,
    u: Vec<Complex64>,
    u_norm_sq: f64,
    anchor_norm: f64,
}

pub fn reflector(v: &[Complex64]) -> Result<HouseholderReflector> {
    HouseholderReflector::new(v)
}

#[inline]
fn dot_conj(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

impl HouseholderReflector {
    pub fn new(v: &[Complex64]) -> Result<Self> {
        let s = v.iter().position(|z| *z != ZERO).ok_or(Error::ZeroVector)?;
        let phase = -Complex64::from_polar(1.0, v[s].arg());
        let anchor_norm = norm(v);
        let mut u = v.to_vec();
        u[0] -= phase * anchor_norm;
        let u_norm_sq: f64 = u.iter().map(|z| z.norm_sqr()).sum();
        if !u_norm_sq.is_finite() || !anchor_norm.is_finite() {
            return Err(Error::NonFinite("reflector anchor".into()));
        }
        Ok(Self {
            anchor: v.to_vec(),
            phase,
            u,
            u_norm_sq,
            anchor_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.u.len()
    }

    pub fn anchor(&self) -> &[Complex64] {
        &self.anchor
    }

    pub fn phase(&self) -> Complex64 {
        self.phase
    }

    pub fn direction(&self) -> &[Complex64] {
        &self.u
    }

    pub fn anchor_norm(&self) -> f64 {
        self.anchor_norm
    }

    /// `(I − 2uuᴴ/‖u‖²) x` scaled by `c`.
    fn reflect_scaled(&self, x: &[Complex64], c: Complex64, out: &mut [Complex64]) {
        assert_eq!(x.len(), self.u.len(), "dimension mismatch");
        let t = dot_conj(&self.u, x) * (2.0 / self.u_norm_sq);
        for ((o, xi), ui) in out.iter_mut().zip(x).zip(&self.u) {
            *o = c * (xi - ui * t);
        }
    }

    /// `R x`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; x.len()];
        self.reflect_scaled(x, self.phase, &mut out);
        out
    }

    /// `Rᴴ x`.
    pub fn apply_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; x.len()];
        self.reflect_scaled(x, self.phase.conj(), &mut out);
        out
    }

    /// `B w = R [0; w]` for `w` of length n − 1.
    pub fn apply_b(&self, w: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(w.len() + 1, self.u.len(), "dimension mismatch");
        let mut x = Vec::with_capacity(self.u.len());
        x.push(ZERO);
        x.extend_from_slice(w);
        self.apply(&x)
    }

    /// `Bᴴ x = (Rᴴ x)[2:n]`.
    pub fn apply_b_adjoint(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.apply_adjoint(x);
        y.remove(0);
        y
    }

    /// Dense `R`, for tests and small problems.
    pub fn to_dense(&self) -> Mat<Complex64> {
        let n = self.dim();
        let mut m = Mat::<Complex64>::zeros(n, n);
        let mut e = vec![ZERO; n];
        for j in 0..n {
            e[j] = ONE;
            let col = self.apply(&e);
            for i in 0..n {
                m[(i, j)] = col[i];
            }
            e[j] = ZERO;
        }
        m
    }
}

fn columns_apply(m: &mut Mat<Complex64>, f: impl Fn(&[Complex64]) -> Vec<Complex64>) {
    let n = m.nrows();
    let mut col = vec![ZERO; n];
    for j in 0..m.ncols() {
        for i in 0..n {
            col[i] = m[(i, j)];
        }
        let out = f(&col);
        for i in 0..n {
            m[(i, j)] = out[i];
        }
    }
}

/// Haar(n) sample by the reflector recursion
/// `Q_n = R(g) diag(1, Q_{n−1}) R(v)ᴴ`, or with `tilde` the mirrored form
/// `R(v) diag(1, Q_{n−1}) R(g)ᴴ`. `v` is an independent Gaussian vector.
pub fn haar_recursive<R: Rng + ?Sized>(n: usize, tilde: bool, rng: &mut R) -> Mat<Complex64> {
    assert!(n >= 1);
    if n == 1 {
        let z = complex_normal(rng, 1.0);
        let mut m = Mat::<Complex64>::zeros(1, 1);
        m[(0, 0)] = z / z.norm();
        return m;
    }
    let inner = haar_recursive(n - 1, tilde, rng);
    let g = reflector(&complex_normal_vec(rng, n, 1.0)).expect("gaussian vector is nonzero a.s.");
    let v = reflector(&complex_normal_vec(rng, n, 1.0)).expect("gaussian vector is nonzero a.s.");
    let mut m = Mat::<Complex64>::zeros(n, n);
    m[(0, 0)] = ONE;
    for i in 1..n {
        for j in 1..n {
            m[(i, j)] = inner[(i - 1, j - 1)];
        }
    }
    let (left, right) = if tilde { (&v, &g) } else { (&g, &v) };
    columns_apply(&mut m, |c| left.apply(c));
    // M Rᴴ = (R Mᴴ)ᴴ
    let mut t = m.adjoint().to_owned();
    columns_apply(&mut t, |c| right.apply(c));
    t.adjoint().to_owned()
}

/// Statistics of the reflector-recursion Haar sampler.
#[derive(Debug, Clone)]
pub struct HaarCheck {
    pub n: usize,
    pub trials: usize,
    /// Mean of `|Q₁₁|²`; `1/n` for Haar.
    pub mean_q11_sq: f64,
    pub se_q11_sq: f64,
    /// KS distance of `|Q₁₁|²` samples against Beta(1, n−1).
    pub ks_q11_sq: f64,
    /// Worst `|‖Qx‖ − ‖x‖|` over one random `x` per trial.
    pub max_norm_defect: f64,
}

pub fn haar_recursion_check<R: Rng + ?Sized>(
    n: usize,
    trials: usize,
    tilde: bool,
    rng: &mut R,
) -> Result<HaarCheck> {
    if n < 2 || trials < 2 {
        return Err(Error::InvalidArgument("need n >= 2 and trials >= 2".into()));
    }
    let mut samples = Vec::with_capacity(trials);
    let mut max_norm_defect = 0.0f64;
    for _ in 0..trials {
        let q = haar_recursive(n, tilde, rng);
        samples.push(q[(0, 0)].norm_sqr());
        let x = complex_normal_vec(rng, n, 1.0);
        let mut qx = vec![ZERO; n];
        for i in 0..n {
            qx[i] = (0..n).map(|j| q[(i, j)] * x[j]).sum();
        }
        max_norm_defect = max_norm_defect.max((norm(&qx) - norm(&x)).abs() / norm(&x));
    }
    let t = trials as f64;
    let mean = samples.iter().sum::<f64>() / t;
    let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (t - 1.0);
    let cdf = |x: f64| 1.0 - (1.0 - x.clamp(0.0, 1.0)).powi(n as i32 - 1);
    let ks = crate::stats::ks_one_sample(&samples, cdf);
    Ok(HaarCheck {
        n,
        trials,
        mean_q11_sq: mean,
        se_q11_sq: (var / t).sqrt(),
        ks_q11_sq: ks,
        max_norm_defect,
    })
}

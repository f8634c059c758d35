//! Group actions on the slice `X′ = {a_τ u(ξ)Γ : τ > 0, ξ ∈ [−1/2, 1/2)^{d−1}}`.
//!
//! Points are kept as exact `(τ, ξ)` coordinates and every flow is applied in
//! closed form. Direction indices `i` are zero-based (`0 ≤ i < d − 1`).

use crate::error::{Error, Flag, Result};
use crate::lattice::UnimodularLattice;
use crate::linalg::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Wraps a real into `[−1/2, 1/2)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - (x + 0.5).floor();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

/// The diagonal element `a_τ = diag(e^{τ_1}, …, e^{τ_{d−1}}, e^{−Στ})`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagParam {
    pub tau: Vec<f64>,
}

impl DiagParam {
    pub fn new(tau: Vec<f64>) -> Result<Self> {
        if tau.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter("tau must be finite".into()));
        }
        Ok(Self { tau })
    }

    /// `t·e_i`.
    pub fn along(d: usize, i: usize, t: f64) -> Self {
        let mut tau = vec![0.0; d - 1];
        tau[i] = t;
        Self { tau }
    }

    pub fn sum(&self) -> f64 {
        self.tau.iter().sum()
    }

    /// Row-major d×d matrix.
    pub fn matrix(&self) -> Mat {
        let d = self.tau.len() + 1;
        let mut m = vec![vec![0.0; d]; d];
        for (j, &t) in self.tau.iter().enumerate() {
            m[j][j] = t.exp();
        }
        m[d - 1][d - 1] = (-self.sum()).exp();
        m
    }
}

/// `u(ξ)`: identity with `ξ` in the last column above the diagonal.
pub fn u_matrix(xi: &[f64]) -> Mat {
    let d = xi.len() + 1;
    let mut m: Mat = (0..d)
        .map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for (j, &x) in xi.iter().enumerate() {
        m[j][d - 1] = x;
    }
    m
}

/// `u_i(s) = u(s·e_i)`.
pub fn u_i_matrix(d: usize, i: usize, s: f64) -> Mat {
    let mut xi = vec![0.0; d - 1];
    xi[i] = s;
    u_matrix(&xi)
}

/// A point `a_τ u(ξ)Γ` of the slice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XPrimePoint {
    tau: Vec<f64>,
    xi: Vec<f64>,
}

impl XPrimePoint {
    /// Validates `τ > 0` and `ξ ∈ [−1/2, 1/2)^{d−1}`.
    pub fn new(tau: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if tau.is_empty() || tau.len() != xi.len() {
            return Err(Error::InvalidParameter("tau and xi need equal length >= 1".into()));
        }
        if tau.iter().any(|&t| !(t > 0.0) || !t.is_finite()) {
            return Err(Error::LeavesSlice(tau));
        }
        if xi.iter().any(|&x| !(-0.5..0.5).contains(&x)) {
            return Err(Error::InvalidParameter(format!("xi outside [-1/2, 1/2): {xi:?}")));
        }
        Ok(Self { tau, xi })
    }

    /// Like [`XPrimePoint::new`] but reduces `ξ` mod 1 first.
    pub fn wrapped(tau: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        let xi = xi.into_iter().map(wrap_unit).collect();
        Self::new(tau, xi)
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn d(&self) -> usize {
        self.tau.len() + 1
    }

    pub fn tau_sum(&self) -> f64 {
        self.tau.iter().sum()
    }

    /// Basis `a_τ u(ξ)`: columns `e^{τ_j} e_j` and `(e^{τ_j} ξ_j, e^{−Στ})`.
    pub fn to_lattice(&self) -> UnimodularLattice {
        let d = self.d();
        let sum = self.tau_sum();
        let mut cols = Vec::with_capacity(d);
        for j in 0..d - 1 {
            let mut c = vec![0.0; d];
            c[j] = self.tau[j].exp();
            cols.push(c);
        }
        let mut last: Vec<f64> = self
            .tau
            .iter()
            .zip(&self.xi)
            .map(|(t, x)| t.exp() * x)
            .collect();
        last.push((-sum).exp());
        cols.push(last);
        UnimodularLattice::from_columns(cols).expect("slice points are unimodular")
    }

    /// `a_σ · x = a_{τ+σ} u(ξ)Γ`.
    pub fn act_diag(&self, sigma: &DiagParam) -> Result<Self> {
        if sigma.tau.len() != self.tau.len() {
            return Err(Error::InvalidParameter("sigma has wrong length".into()));
        }
        let tau: Vec<f64> = self.tau.iter().zip(&sigma.tau).map(|(a, b)| a + b).collect();
        if tau.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::LeavesSlice(tau));
        }
        Ok(Self { tau, xi: self.xi.clone() })
    }

    /// `u_i(s) · x`: by `a_τ u_i(s') a_{−τ} = u_i(e^{τ_i+Στ} s')`, the slice
    /// coordinate moves by `s·e^{−(τ_i+Στ)}`, reduced mod 1.
    pub fn act_horo_i(&self, s: f64, i: usize) -> Self {
        let mut xi = self.xi.clone();
        let scale = (-(self.tau[i] + self.tau_sum())).exp();
        xi[i] = wrap_unit(xi[i] + s * scale);
        Self { tau: self.tau.clone(), xi }
    }

    /// `u(η) · x` for a full horospherical element.
    pub fn act_horo(&self, eta: &[f64]) -> Self {
        let sum = self.tau_sum();
        let xi = self
            .xi
            .iter()
            .zip(&self.tau)
            .zip(eta)
            .map(|((x, t), e)| wrap_unit(x + e * (-(t + sum)).exp()))
            .collect();
        Self { tau: self.tau.clone(), xi }
    }

    /// `κ_i = e^{Στ − τ_i}`.
    pub fn kappa_i(&self, i: usize) -> f64 {
        (self.tau_sum() - self.tau[i]).exp()
    }

    /// Basis columns of `φ_i(x) = ā_{Στ} ū(ξ_i) SL₂(ℤ)`.
    pub fn phi_i(&self, i: usize) -> [[f64; 2]; 2] {
        let s = self.tau_sum();
        [[s.exp(), 0.0], [s.exp() * self.xi[i], (-s).exp()]]
    }
}

/// Samples slice points with `ξ` uniform on the box and each `τ_j` uniform
/// on `[tau_min, tau_max]`. This is a harness measure, not Haar measure.
pub fn sample_points<R: Rng>(rng: &mut R, count: usize, d: usize, tau_range: (f64, f64)) -> Vec<XPrimePoint> {
    (0..count)
        .map(|_| {
            let tau = (0..d - 1).map(|_| rng.gen_range(tau_range.0..=tau_range.1)).collect();
            let xi = (0..d - 1).map(|_| rng.gen_range(-0.5..0.5)).collect();
            XPrimePoint::new(tau, xi).expect("sampled point is valid")
        })
        .collect()
}

/// A finite set of points of `(tℕ)^{d−1}`, stored as integer step counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TauGrid {
    pub n: usize,
    pub t: f64,
    pub steps: Vec<Vec<u32>>,
    pub flags: Vec<Flag>,
}

impl TauGrid {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.steps
            .iter()
            .map(|s| s.iter().map(|&k| k as f64 * self.t).collect())
            .collect()
    }

    pub fn contains(&self, steps: &[u32]) -> bool {
        self.steps.binary_search_by(|s| s.as_slice().cmp(steps)).is_ok()
    }

    fn filtered(&self, keep: impl Fn(&[u32]) -> bool) -> Self {
        let steps: Vec<Vec<u32>> = self.steps.iter().filter(|s| keep(s)).cloned().collect();
        let flags = if steps.is_empty() { vec![Flag::EmptySet] } else { vec![] };
        Self { n: self.n, t: self.t, steps, flags }
    }
}

fn for_each_box(d1: usize, hi: u32, f: &mut dyn FnMut(&[u32])) {
    let mut cur = vec![1u32; d1];
    loop {
        f(&cur);
        let mut p = 0;
        loop {
            if p == d1 {
                return;
            }
            cur[p] += 1;
            if cur[p] <= hi {
                break;
            }
            cur[p] = 1;
            p += 1;
        }
    }
}

/// `𝒟_N = {τ ∈ (tℕ)^{d−1} : max_j τ_j + Σ_j τ_j ≤ 2dNt}` with ℕ = {1, 2, …}.
pub fn make_d_n(n: usize, t: f64, d: usize) -> Result<TauGrid> {
    if n == 0 || !(t > 0.0) || d < 2 {
        return Err(Error::InvalidParameter("need N >= 1, t > 0, d >= 2".into()));
    }
    let limit = (2 * d * n) as u32;
    let mut steps = Vec::new();
    for_each_box(d - 1, limit, &mut |s| {
        let mx = *s.iter().max().unwrap();
        let sum: u32 = s.iter().sum();
        if mx + sum <= limit {
            steps.push(s.to_vec());
        }
    });
    steps.sort();
    Ok(TauGrid { n, t, steps, flags: vec![] })
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok(())
}

/// `ℰ_{N,δ,i} = {τ ∈ 𝒟_N : ‖τ − dNt·e_i‖ ≤ δNt}`; flagged `EmptySet` when empty.
pub fn make_e(n: usize, delta: f64, i: usize, t: f64, d: usize) -> Result<TauGrid> {
    check_delta(delta)?;
    let dn = make_d_n(n, t, d)?;
    let target = (d * n) as f64;
    let r2 = (delta * n as f64).powi(2) * (1.0 + 1e-12);
    Ok(dn.filtered(|s| {
        let dist2: f64 = s
            .iter()
            .enumerate()
            .map(|(j, &k)| {
                let c = if j == i { target } else { 0.0 };
                (k as f64 - c).powi(2)
            })
            .sum();
        dist2 <= r2
    }))
}

/// `ℰ̂_{N,δ,i}`: `(d/2 − δ)Nt < τ_i ≤ (d − δ/2)Nt` and `‖τ − τ_i e_i‖ ≤ (δ/d)Nt`.
pub fn make_ehat(n: usize, delta: f64, i: usize, t: f64, d: usize) -> Result<TauGrid> {
    check_delta(delta)?;
    let dn = make_d_n(n, t, d)?;
    let nf = n as f64;
    let df = d as f64;
    let lo = (df / 2.0 - delta) * nf;
    let hi = (df - delta / 2.0) * nf * (1.0 + 1e-12);
    let r2 = (delta / df * nf).powi(2) * (1.0 + 1e-12);
    Ok(dn.filtered(|s| {
        let ti = s[i] as f64;
        let off: f64 = s
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, &k)| (k as f64).powi(2))
            .sum();
        ti > lo && ti <= hi && off <= r2
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_convention() {
        assert_eq!(wrap_unit(0.5), -0.5);
        assert_eq!(wrap_unit(-0.5), -0.5);
        assert!((wrap_unit(0.8) + 0.2).abs() < 1e-15);
        assert!((wrap_unit(1.3) - 0.3).abs() < 1e-12);
    }

    #[test]
    fn lattice_of_diagonal_point() {
        let x = XPrimePoint::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let m = x.to_lattice().matrix();
        let e = 1f64.exp();
        assert!((m[0][0] - e).abs() < 1e-12);
        assert!((m[1][1] - e).abs() < 1e-12);
        assert!((m[2][2] - (-2f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn det_is_one() {
        let x = XPrimePoint::new(vec![1.0, 2.0], vec![0.4, -0.4]).unwrap();
        assert!((x.to_lattice().det() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn diag_action() {
        let x = XPrimePoint::new(vec![1.0, 1.0], vec![0.1, 0.2]).unwrap();
        let y = x.act_diag(&DiagParam::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(y.tau(), &[2.0, 1.0]);
        assert_eq!(y.xi(), x.xi());
        let e = x.act_diag(&DiagParam::new(vec![-2.0, 0.0]).unwrap());
        assert!(matches!(e, Err(Error::LeavesSlice(_))));
    }

    #[test]
    fn horo_action_examples() {
        let x = XPrimePoint::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let e3 = 3f64.exp();
        let y = x.act_horo_i(e3 * 0.3, 0);
        assert!((y.xi()[0] - 0.3).abs() < 1e-12 && y.xi()[1] == 0.0);
        let y = x.act_horo_i(e3 * 0.8, 0);
        assert!((y.xi()[0] + 0.2).abs() < 1e-12);
        assert_eq!(x.act_horo_i(0.0, 1), x);
    }

    #[test]
    fn phi_and_kappa() {
        let x = XPrimePoint::new(vec![0.5, 0.5], vec![0.25, 0.0]).unwrap();
        let p = x.phi_i(0);
        let e = 1f64.exp();
        assert!((p[0][0] - e).abs() < 1e-12);
        assert!((p[1][0] - e / 4.0).abs() < 1e-12);
        assert!((p[1][1] - 1.0 / e).abs() < 1e-12);
        let x = XPrimePoint::new(vec![2.0, 3.0], vec![0.0, 0.0]).unwrap();
        assert!((x.kappa_i(1) - 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn d_n_small_cases() {
        let g = make_d_n(1, 1.0, 3).unwrap();
        assert_eq!(g.steps, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        let g = make_d_n(1, 1.0, 2).unwrap();
        assert_eq!(g.steps, vec![vec![1], vec![2]]);
    }

    #[test]
    fn e_small_case_is_empty() {
        let e = make_e(1, 0.4, 0, 1.0, 3).unwrap();
        assert!(e.is_empty());
        assert_eq!(e.flags, vec![Flag::EmptySet]);
    }
}

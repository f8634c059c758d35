//! Exactly tracked diagonal orbits.
//!
//! A float basis of `a_τ u(ξ)ℤ^d` loses every significant digit once
//! `τ_i + Στ` passes about 30: the reduced vectors come from cancelling
//! entries of size `e^{τ_i}q`. [`SliceTracker`] keeps an exact big-integer
//! coefficient matrix `C` instead, re-evaluates `a_τ u(ξ) C` from exact
//! `ξ`, and folds each LLL transform back into `C`.

use crate::error::{Error, Result};
use crate::exact::{BigQuad, Value};
use crate::lattice::{gram_schmidt, mu_noise, shortest_vector, UnimodularLattice, LLL_DELTA};
use num_bigint::BigInt;
use num_traits::{FromPrimitive, Zero};

/// Largest per-coordinate move between reductions.
const TRACK_STEP: f64 = 1.0;

/// Reduced basis of `a_τ u(ξ)ℤ^d` with an exact integer coefficient matrix.
#[derive(Clone, Debug)]
pub struct SliceTracker {
    xi: Vec<BigQuad>,
    tau: Vec<f64>,
    /// Integer columns: basis column j is `a_τ u(ξ) c_j`, or
    /// `a_τ^{−1} u(ξ)^{−T} c_j` for the dual lattice.
    c: Vec<Vec<BigInt>>,
    basis: Vec<Vec<f64>>,
    /// Extra per-coordinate log-scale applied on evaluation.
    log_w: Vec<f64>,
    dual: bool,
}

impl SliceTracker {
    pub fn new(xi: &[Value]) -> Result<Self> {
        let d = xi.len() + 1;
        let c = (0..d)
            .map(|j| (0..d).map(|i| BigInt::from(i64::from(i == j))).collect())
            .collect();
        let mut t = Self {
            xi: xi.iter().map(BigQuad::from_value).collect(),
            tau: vec![0.0; d - 1],
            c,
            basis: vec![],
            log_w: vec![0.0; d],
            dual: false,
        };
        t.refresh()?;
        t.reduce()?;
        Ok(t)
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn dim(&self) -> usize {
        self.tau.len() + 1
    }

    fn eval_col(&self, col: &[BigInt]) -> Result<Vec<f64>> {
        let d = self.dim();
        let sum: f64 = self.tau.iter().sum();
        let mut v = Vec::with_capacity(d);
        if self.dual {
            for i in 0..d - 1 {
                v.push(BigQuad::from_int(col[i].clone()).to_f64() * (self.log_w[i] - self.tau[i]).exp());
            }
            let terms: Vec<BigQuad> = (0..d - 1).map(|j| self.xi[j].mul_int(&-&col[j])).collect();
            v.push(exact_sum(&terms, &col[d - 1]) * (self.log_w[d - 1] + sum).exp());
        } else {
            for i in 0..d - 1 {
                let y = self.xi[i].mul_int(&col[d - 1]).add_int(&col[i]);
                v.push(y.to_f64() * (self.log_w[i] + self.tau[i]).exp());
            }
            v.push(BigQuad::from_int(col[d - 1].clone()).to_f64() * (self.log_w[d - 1] - sum).exp());
        }
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateBasis);
        }
        Ok(v)
    }

    fn refresh(&mut self) -> Result<()> {
        self.basis = self.c.iter().map(|col| self.eval_col(col)).collect::<Result<_>>()?;
        Ok(())
    }

    /// LLL on the float basis with size reductions applied to the exact
    /// coefficients, so multipliers of any size are allowed. Reductions below
    /// the float noise of `μ` are skipped.
    fn reduce(&mut self) -> Result<()> {
        let d = self.dim();
        let mut k = 1;
        for _ in 0..100_000 {
            if k >= d {
                return Ok(());
            }
            let (mu, bstar2) = gram_schmidt(&self.basis);
            if bstar2.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
                return Err(Error::DegenerateBasis);
            }
            let target =
                (0..k).rev().find(|&j| mu[k][j].abs() > 0.5 + 1e-9 && mu[k][j].abs() > mu_noise(&self.basis[k], bstar2[j]));
            if let Some(j) = target {
                let q = BigInt::from_f64(mu[k][j].round()).ok_or(Error::DegenerateBasis)?;
                let cj = self.c[j].clone();
                for (dst, src) in self.c[k].iter_mut().zip(&cj) {
                    *dst -= &q * src;
                }
                self.basis[k] = self.eval_col(&self.c[k])?;
                continue;
            }
            let m = mu[k][k - 1];
            if bstar2[k] < (LLL_DELTA - m * m) * bstar2[k - 1] {
                self.c.swap(k, k - 1);
                self.basis.swap(k, k - 1);
                k = (k - 1).max(1);
            } else {
                k += 1;
            }
        }
        Err(Error::DegenerateBasis)
    }

    /// Moves to `target` in steps of at most one unit per coordinate.
    pub fn advance_to(&mut self, target: &[f64]) -> Result<()> {
        if target.len() != self.tau.len() {
            return Err(Error::InvalidParameter("tau has wrong length".into()));
        }
        let start = self.tau.clone();
        let span = start
            .iter()
            .zip(target)
            .map(|(a, b)| (b - a).abs())
            .fold(0.0, f64::max);
        let steps = (span / TRACK_STEP).ceil().max(1.0) as usize;
        for k in 1..=steps {
            let f = k as f64 / steps as f64;
            self.tau = start.iter().zip(target).map(|(a, b)| a + f * (b - a)).collect();
            self.refresh()?;
            self.reduce()?;
        }
        Ok(())
    }

    pub fn lattice(&self) -> UnimodularLattice {
        UnimodularLattice::from_columns_unchecked(self.basis.clone())
    }

    pub fn lambda1(&self) -> Result<f64> {
        Ok(shortest_vector(&self.lattice())?.0)
    }

    /// `C·y`: integer coordinates in `ℤ^d` of the reduced-basis combination `y`.
    pub fn integer_coords(&self, y: &[i64]) -> Vec<BigInt> {
        let d = self.dim();
        let mut out = vec![BigInt::zero(); d];
        for (j, &yj) in y.iter().enumerate() {
            if yj != 0 {
                for (o, c) in out.iter_mut().zip(&self.c[j]) {
                    *o += c * yj;
                }
            }
        }
        out
    }

    /// `qξ_i − nearest integer`, exactly rounded.
    pub fn signed_frac(&self, i: usize, q: &BigInt) -> f64 {
        self.xi[i].mul_int(q).frac_centered()
    }
}

impl SliceTracker {
    /// The dual lattice `(a_τ u(ξ))^{−T}ℤ^d` at the same τ, with coefficient
    /// matrix `C^{−T}`.
    pub fn dual(&self) -> Result<Self> {
        let d = self.dim();
        let m: Vec<Vec<BigInt>> = (0..d).map(|r| (0..d).map(|j| self.c[j][r].clone()).collect()).collect();
        let inv = unimodular_inverse(&m)?;
        // Columns of C^{−T} are the rows of C^{−1}.
        let mut t = Self { c: inv, dual: !self.dual, basis: vec![], ..self.clone() };
        t.refresh()?;
        t.reduce()?;
        Ok(t)
    }

    /// Reduced basis of `diag(e^{log_w})·L`, evaluated exactly.
    pub fn rescaled(&self, log_w: &[f64]) -> Result<Self> {
        if log_w.len() != self.dim() {
            return Err(Error::InvalidParameter("log weights have wrong length".into()));
        }
        let mut t = Self { log_w: log_w.to_vec(), basis: vec![], ..self.clone() };
        t.refresh()?;
        t.reduce()?;
        Ok(t)
    }

    /// Current basis columns (after rescaling, if any).
    pub fn basis(&self) -> &[Vec<f64>] {
        &self.basis
    }

    /// Tracker for float slice coordinates, taken as exact dyadic rationals.
    pub fn from_f64(xi: &[f64]) -> Result<Self> {
        let vals: Vec<Value> = xi.iter().map(|&v| Value::Float(v)).collect();
        Self::new(&vals)
    }
}

/// `k + Σ t_j` as a float, exact when all terms share one square root and
/// otherwise exact in integer parts.
fn exact_sum(terms: &[BigQuad], k: &BigInt) -> f64 {
    let mut acc = Some(BigQuad::from_int(k.clone()));
    for t in terms {
        acc = acc.and_then(|a| a.add(t).ok());
    }
    if let Some(a) = acc {
        return a.to_f64();
    }
    let mut whole = k.clone();
    let mut frac = 0.0;
    for t in terms {
        let f = t.floor();
        frac += t.add_int(&-&f).to_f64();
        whole += f;
    }
    BigQuad::from_int(whole).to_f64() + frac
}

fn big_det(m: &[Vec<BigInt>]) -> BigInt {
    let n = m.len();
    if n == 1 {
        return m[0][0].clone();
    }
    let mut total = BigInt::zero();
    for (j, pivot) in m[0].iter().enumerate() {
        if pivot.is_zero() {
            continue;
        }
        let minor: Vec<Vec<BigInt>> =
            m[1..].iter().map(|row| row.iter().enumerate().filter(|&(c, _)| c != j).map(|(_, v)| v.clone()).collect()).collect();
        let term = pivot * big_det(&minor);
        if j % 2 == 0 {
            total += term;
        } else {
            total -= term;
        }
    }
    total
}

/// Inverse of an integer matrix of determinant ±1, by the adjugate.
fn unimodular_inverse(m: &[Vec<BigInt>]) -> Result<Vec<Vec<BigInt>>> {
    let n = m.len();
    let det = big_det(m);
    if det.magnitude() != &num_bigint::BigUint::from(1u8) {
        return Err(Error::DegenerateBasis);
    }
    let mut inv = vec![vec![BigInt::zero(); n]; n];
    for r in 0..n {
        for c in 0..n {
            let minor: Vec<Vec<BigInt>> = m
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != r)
                .map(|(_, row)| row.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, v)| v.clone()).collect())
                .collect();
            let cof = if n == 1 { BigInt::from(1) } else { big_det(&minor) };
            let cof = if (r + c) % 2 == 0 { cof } else { -cof };
            // adj[c][r] = cofactor(r, c)
            inv[c][r] = cof * &det;
        }
    }
    Ok(inv)
}

/// Below this value of `max_i τ_i + Στ` the plain float basis is accurate to
/// well under `1e-9` relative.
pub const DIRECT_LIMIT: f64 = 10.0;

fn needs_tracking(tau: &[f64]) -> bool {
    let sum: f64 = tau.iter().sum();
    let top = tau.iter().cloned().fold(0.0, f64::max);
    top + sum > DIRECT_LIMIT
}

fn direct_basis(tau: &[f64], xi: &[f64]) -> Vec<Vec<f64>> {
    let d = tau.len() + 1;
    let sum: f64 = tau.iter().sum();
    let mut cols: Vec<Vec<f64>> = (0..d - 1)
        .map(|j| {
            let mut c = vec![0.0; d];
            c[j] = tau[j].exp();
            c
        })
        .collect();
    let mut last: Vec<f64> = tau.iter().zip(xi).map(|(t, x)| t.exp() * x).collect();
    last.push((-sum).exp());
    cols.push(last);
    cols
}

/// A tracker sitting at `τ` for float slice coordinates `ξ`.
pub fn slice_tracker(tau: &[f64], xi: &[f64]) -> Result<SliceTracker> {
    if tau.len() != xi.len() {
        return Err(Error::InvalidParameter("tau and xi lengths differ".into()));
    }
    let mut tr = SliceTracker::from_f64(xi)?;
    tr.advance_to(tau)?;
    Ok(tr)
}

/// Whether `(τ, ξ)` is far enough out that float bases lose precision.
pub fn needs_exact(tau: &[f64]) -> bool {
    needs_tracking(tau)
}

/// A basis of `a_τ u(ξ)ℤ^d` good to near machine precision at any τ. Small τ
/// uses the defining basis; larger τ goes through a [`SliceTracker`].
pub fn slice_lattice(tau: &[f64], xi: &[f64]) -> Result<UnimodularLattice> {
    if tau.len() != xi.len() {
        return Err(Error::InvalidParameter("tau and xi lengths differ".into()));
    }
    if !needs_tracking(tau) {
        return Ok(UnimodularLattice::from_columns_unchecked(direct_basis(tau, xi)));
    }
    let mut tr = SliceTracker::from_f64(xi)?;
    tr.advance_to(tau)?;
    Ok(tr.lattice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::parse_vector;
    use crate::flows::XPrimePoint;
    use crate::lattice::lambda1;

    #[test]
    fn tracker_matches_direct_basis_for_small_tau() {
        let xi = parse_vector("sqrt2-1,sqrt3-1").unwrap();
        let mut tr = SliceTracker::new(&xi).unwrap();
        tr.advance_to(&[2.0, 3.0]).unwrap();
        let xf: Vec<f64> = xi.iter().map(Value::to_f64).collect();
        let p = XPrimePoint::wrapped(vec![2.0, 3.0], xf).unwrap();
        let direct = lambda1(&p.to_lattice()).unwrap();
        assert!((tr.lambda1().unwrap() - direct).abs() < 1e-12);
    }

    #[test]
    fn tracker_for_zero_xi_is_diagonal() {
        let mut tr = SliceTracker::new(&parse_vector("0,0").unwrap()).unwrap();
        tr.advance_to(&[20.0, 30.0]).unwrap();
        assert!((tr.lambda1().unwrap() - (-50f64).exp()).abs() < 1e-12 * (-50f64).exp());
    }

    #[test]
    fn slice_lattice_is_continuous_across_the_switch() {
        let xi = [0.123456789, -0.3141592653];
        let below = lambda1(&slice_lattice(&[3.33, 3.33], &xi).unwrap()).unwrap();
        let above = lambda1(&slice_lattice(&[3.34, 3.34], &xi).unwrap()).unwrap();
        assert!(((below - above) / below).abs() < 0.05);
        let mut tr = SliceTracker::from_f64(&xi).unwrap();
        tr.advance_to(&[3.33, 3.33]).unwrap();
        assert!((tr.lambda1().unwrap() - below).abs() < 1e-12);
    }

    #[test]
    fn tracked_rational_slice_stays_exact() {
        // ξ = (1/4, 1/2): 4·e_3-column is (e^{τ1}, 2e^{τ2}, 4e^{−Σ}) minus integers.
        let l = slice_lattice(&[15.0, 16.0], &[0.25, 0.5]).unwrap();
        assert!((lambda1(&l).unwrap() - 4.0 * (-31f64).exp()).abs() < 1e-9 * (-31f64).exp());
    }
}

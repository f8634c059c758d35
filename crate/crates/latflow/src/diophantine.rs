//! Littlewood-type quantities, multiplicative singularity, ℛ_d membership,
//! Dani-correspondence checks and grid-space scans.
//!
//! Long diagonal orbits are handled by [`SliceTracker`], which keeps an exact
//! big-integer coefficient matrix `C` with `a_τ u(ξ) C` reduced, moving τ in
//! small steps and re-evaluating the float basis from `C` after each
//! reduction. This keeps `λ₁(a_τ u(ξ)ℤ^d)` accurate long after a plain f64
//! basis has lost every significant digit.

use crate::error::{Error, Flag, Result};
use crate::exact::{dirichlet_witness as cf_witness, parse_vector, QuadNum, Value};
use crate::flows::{u_matrix, wrap_unit, XPrimePoint};
use crate::heights::{alpha_tilde_all, CalibratedConstants, HeightParams};
use crate::lattice::{enumerate_vectors_within, grid_min_norm, lll, shortest_vector, Grid, NormKind, UnimodularLattice, LLL_DELTA};
use crate::tracker::SliceTracker;
use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Inputs for the Diophantine operations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetSpec {
    pub xi: Vec<Value>,
    pub theta: Option<Vec<Value>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Exactness {
    Exact,
    Float,
    Mixed,
}

impl TargetSpec {
    pub fn parse(xi: &str, theta: Option<&str>) -> Result<Self> {
        let xi = parse_vector(xi)?;
        let theta = theta.map(parse_vector).transpose()?;
        if let Some(th) = &theta {
            if th.len() != xi.len() {
                return Err(Error::InvalidParameter("theta and xi lengths differ".into()));
            }
        }
        Ok(Self { xi, theta })
    }

    pub fn exactness(&self) -> Exactness {
        let all = self.xi.iter().chain(self.theta.iter().flatten());
        let (mut ex, mut fl) = (false, false);
        for v in all {
            match v {
                Value::Exact(_) => ex = true,
                Value::Float(_) => fl = true,
            }
        }
        match (ex, fl) {
            (true, false) => Exactness::Exact,
            (false, _) => Exactness::Float,
            _ => Exactness::Mixed,
        }
    }

    pub fn xi_f64(&self) -> Vec<f64> {
        self.xi.iter().map(Value::to_f64).collect()
    }
}

/// Running window minimum of a Littlewood-type product.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DioReport {
    pub q_horizon: u64,
    pub q0: u64,
    pub min_value: f64,
    pub argmin: u64,
    /// `(q, value)` at each strict new record.
    pub series: Vec<(u64, f64)>,
    pub flags: Vec<Flag>,
}

/// `√D` as an unevaluated double-double.
#[derive(Clone, Copy, Debug)]
struct DdRoot {
    hi: f64,
    lo: f64,
}

impl DdRoot {
    fn new(d: u64) -> Self {
        let df = d as f64;
        let hi = df.sqrt();
        let lo = (-hi).mul_add(hi, df) / (2.0 * hi);
        Self { hi, lo }
    }

    /// `m√D mod 1` for an integer `m`, accurate to a few ulps of 1.
    fn frac_mul(&self, m: i128) -> f64 {
        let mf = m as f64;
        let p = mf * self.hi;
        let e = mf.mul_add(self.hi, -p);
        let tail = e + mf * self.lo + ((m - mf as i128) as f64) * self.hi;
        (p - p.round()) + tail
    }
}

/// One coordinate of `q ↦ qξ − θ` prepared for fast, accurate scanning.
#[derive(Clone, Debug)]
enum Coord {
    /// `(p1·q − p0)/r + ((k1·q − k0)/s)·√D`
    Exact { p1: i128, p0: i128, r: i128, k1: i128, k0: i128, s: i128, root: Option<DdRoot> },
    Float { xi: f64, theta: f64 },
}

fn lcm(a: i128, b: i128) -> i128 {
    a / num_integer::gcd(a, b) * b
}

impl Coord {
    fn new(xi: &Value, theta: Option<&Value>) -> Self {
        let zero = QuadNum::int(0);
        let th_exact = match theta {
            None => Some(&zero),
            Some(Value::Exact(t)) => Some(t),
            Some(Value::Float(_)) => None,
        };
        if let (Value::Exact(x), Some(t)) = (xi, th_exact) {
            if x.root == 1 || t.root == 1 || x.root == t.root {
                let root = x.root.max(t.root);
                let r = lcm(*x.a.denom(), *t.a.denom());
                let s = lcm(*x.b.denom(), *t.b.denom());
                return Coord::Exact {
                    p1: x.a.numer() * (r / x.a.denom()),
                    p0: t.a.numer() * (r / t.a.denom()),
                    r,
                    k1: x.b.numer() * (s / x.b.denom()),
                    k0: t.b.numer() * (s / t.b.denom()),
                    s,
                    root: (root > 1).then(|| DdRoot::new(root)),
                };
            }
        }
        Coord::Float { xi: xi.to_f64(), theta: theta.map_or(0.0, Value::to_f64) }
    }

    /// `qξ − θ` reduced to `[−1/2, 1/2)`; exact zeros stay exact.
    fn signed_frac(&self, q: u64) -> f64 {
        match *self {
            Coord::Exact { p1, p0, r, k1, k0, s, root } => {
                let qi = q as i128;
                let rat = (p1 * qi - p0).rem_euclid(r);
                let k = k1 * qi - k0;
                if k == 0 || root.is_none() {
                    return wrap_unit(rat as f64 / r as f64);
                }
                let dd = root.expect("irrational part");
                let (m, rem) = (k.div_euclid(s), k.rem_euclid(s));
                let irr = dd.frac_mul(m) + rem as f64 * (dd.hi + dd.lo) / s as f64;
                wrap_unit(rat as f64 / r as f64 + irr)
            }
            Coord::Float { xi, theta } => {
                let qf = q as f64;
                let p = qf * xi;
                let e = qf.mul_add(xi, -p);
                wrap_unit((p - p.round()) + e - theta)
            }
        }
    }
}

fn coords(xi: &[Value], theta: Option<&[Value]>) -> Vec<Coord> {
    xi.iter()
        .enumerate()
        .map(|(i, x)| Coord::new(x, theta.map(|t| &t[i])))
        .collect()
}

fn window_min(cs: &[Coord], q0: u64, q_max: u64) -> DioReport {
    let mut series = Vec::new();
    let (mut best, mut arg) = (f64::INFINITY, q0);
    for q in q0..=q_max {
        let mut v = q as f64;
        for c in cs {
            v *= c.signed_frac(q).abs();
        }
        if v < best {
            best = v;
            arg = q;
            series.push((q, v));
            if v == 0.0 {
                break;
            }
        }
    }
    DioReport { q_horizon: q_max, q0, min_value: best, argmin: arg, series, flags: vec![] }
}

/// `min_{1≤q≤Q} q·∏‖qξ_i‖` with its record series.
pub fn littlewood_min(xi: &[Value], q_max: u64) -> Result<DioReport> {
    if q_max < 1 {
        return Err(Error::InvalidParameter("Q must be >= 1".into()));
    }
    Ok(window_min(&coords(xi, None), 1, q_max))
}

/// `min_{q0≤q≤Q} q·∏‖qξ_i − θ_i‖` with its record series.
pub fn inhom_littlewood_min(xi: &[Value], theta: &[Value], q_max: u64, q0: u64) -> Result<DioReport> {
    if q0 < 1 || q0 > q_max {
        return Err(Error::InvalidParameter("need 1 <= q0 <= Q".into()));
    }
    if theta.len() != xi.len() {
        return Err(Error::InvalidParameter("theta and xi lengths differ".into()));
    }
    Ok(window_min(&coords(xi, Some(theta)), q0, q_max))
}

/// Maximum over a θ-grid of the window minimum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaScan {
    pub resolution: usize,
    pub q0: u64,
    pub q_horizon: u64,
    pub max_value: f64,
    pub argmax_theta: Vec<f64>,
}

/// Scans `θ ∈ {k/res}^{d−1}` (in `[−1/2, 1/2)`), cells in lexicographic order.
pub fn theta_scan(xi: &[Value], resolution: usize, q0: u64, q_max: u64) -> Result<ThetaScan> {
    if resolution == 0 || q0 < 1 || q0 > q_max {
        return Err(Error::InvalidParameter("need resolution >= 1 and 1 <= q0 <= Q".into()));
    }
    let m = xi.len();
    let cs = coords(xi, None);
    let fr: Vec<Vec<f64>> = cs
        .iter()
        .map(|c| (q0..=q_max).map(|q| c.signed_frac(q)).collect())
        .collect();
    let cells = resolution.pow(m as u32);
    let theta_of = |cell: usize| -> Vec<f64> {
        let mut c = cell;
        let mut th = vec![0.0; m];
        for j in (0..m).rev() {
            th[j] = wrap_unit((c % resolution) as f64 / resolution as f64);
            c /= resolution;
        }
        th
    };
    let vals: Vec<f64> = (0..cells)
        .into_par_iter()
        .map(|cell| {
            let th = theta_of(cell);
            let mut best = f64::INFINITY;
            for (k, q) in (q0..=q_max).enumerate() {
                let mut v = q as f64;
                for j in 0..m {
                    v *= wrap_unit(fr[j][k] - th[j]).abs();
                }
                best = best.min(v);
            }
            best
        })
        .collect();
    let (arg, max) = vals
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(a, m), (i, &v)| if v > m { (i, v) } else { (a, m) });
    Ok(ThetaScan { resolution, q0, q_horizon: q_max, max_value: max, argmax_theta: theta_of(arg) })
}

/// Result of the ℛ_d membership test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum RdMembership {
    Exact(bool),
    Heuristic { member: bool, confidence: f64 },
}

impl RdMembership {
    pub fn member(&self) -> bool {
        match *self {
            RdMembership::Exact(b) => b,
            RdMembership::Heuristic { member, .. } => member,
        }
    }
}

/// `dim span_ℚ(1, ξ) ≤ 2`. Exact inputs in ℚ(√D) decide it by counting the
/// distinct square roots; anything else goes through integer-relation search.
pub fn r_d_membership(spec: &TargetSpec) -> RdMembership {
    let exact: Option<Vec<&QuadNum>> = spec.xi.iter().map(Value::exact).collect();
    match exact {
        Some(xs) => {
            let mut roots: Vec<u64> = xs.iter().filter(|x| !x.is_rational()).map(|x| x.root).collect();
            roots.sort_unstable();
            roots.dedup();
            RdMembership::Exact(roots.len() <= 1)
        }
        None => {
            let (member, confidence) = relation_heuristic(&spec.xi_f64());
            RdMembership::Heuristic { member, confidence }
        }
    }
}

const RELATION_SCALE: f64 = 1e12;
const RELATION_HEIGHT: f64 = 1e3;
const RELATION_TOL: f64 = 1e-13;

/// Integer relations among `(1, ξ)` from an LLL-reduced basis of the columns
/// `(M·x_j, e_j)`; the first coordinate of `e_j` is dropped so the basis is
/// square. Returns membership and a confidence in `[0, 1]`.
pub fn relation_heuristic(xi: &[f64]) -> (bool, f64) {
    let mut x = vec![1.0];
    x.extend_from_slice(xi);
    let n = x.len();
    let cols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut c = vec![0.0; n];
            c[0] = RELATION_SCALE * x[j];
            if j > 0 {
                c[j] = 1.0;
            }
            c
        })
        .collect();
    // The matrix is triangular with determinant M.
    let scale = RELATION_SCALE.powf(-1.0 / n as f64);
    let cols = cols.into_iter().map(|c| c.into_iter().map(|v| v * scale).collect()).collect();
    let l = UnimodularLattice::from_columns_unchecked(cols);
    let red = match lll(&l, LLL_DELTA) {
        Ok(r) => r,
        Err(_) => return (false, 0.0),
    };
    let mut rel_sizes = Vec::new();
    let mut other_sizes = Vec::new();
    for u in &red.u {
        let size = u.iter().map(|c| c.abs()).max().unwrap_or(0) as f64;
        let resid: f64 = u.iter().zip(&x).map(|(&c, &v)| c as f64 * v).sum::<f64>().abs();
        if size <= RELATION_HEIGHT && resid <= RELATION_TOL * size.max(1.0) {
            rel_sizes.push(size);
        } else {
            other_sizes.push(size.max(resid * RELATION_SCALE));
        }
    }
    let member = rel_sizes.len() + 2 >= n;
    let worst_rel = rel_sizes.iter().cloned().fold(1.0, f64::max);
    let best_other = other_sizes.iter().cloned().fold(f64::INFINITY, f64::min);
    let gap = if best_other.is_finite() { best_other / worst_rel } else { RELATION_SCALE };
    (member, (gap.log10() / 3.0).clamp(0.0, 1.0))
}

/// Exact rationality of a pair: `qξ − θ + p = 0` for some `q ∈ ℤ, p ∈ ℤ^{d−1}`.
/// `None` unless every entry is exact.
pub fn is_rational_pair(xi: &[Value], theta: &[Value]) -> Option<bool> {
    let xs: Vec<&QuadNum> = xi.iter().map(Value::exact).collect::<Option<_>>()?;
    let ts: Vec<&QuadNum> = theta.iter().map(Value::exact).collect::<Option<_>>()?;
    let hits = |q: i128| {
        xs.iter().zip(&ts).all(|(x, t)| match x.scale(q).sub(t) {
            Ok(y) => y.wrap_unit().signum() == 0,
            Err(_) => false,
        })
    };
    // An irrational coordinate pins q through its √D coefficient.
    for (x, t) in xs.iter().zip(&ts) {
        if !x.is_rational() {
            if !t.is_rational() && t.root != x.root {
                return Some(false);
            }
            let q = t.b / x.b;
            return Some(q.is_integer() && hits(q.to_integer()));
        }
    }
    if ts.iter().any(|t| !t.is_rational()) {
        return Some(false);
    }
    let period = xs.iter().fold(1i128, |acc, x| lcm(acc, *x.a.denom()));
    if period > 10_000_000 {
        return None;
    }
    Some((0..period).any(hits))
}

/// `q ≤ Q` from continued-fraction convergents with `‖qξ₀‖ ≤ 1/Q`, and the
/// re-evaluated distance.
pub fn dirichlet_witness(xi0: &QuadNum, q_max: u64) -> Result<(u64, f64)> {
    let q = cf_witness(xi0, q_max)?;
    let dist = xi0.scale(q as i128).dist_to_int();
    if dist > 1.0 / q_max as f64 * (1.0 + 1e-12) {
        return Err(Error::CalibrationUnstable(format!("witness q={q} fails ‖qξ‖ ≤ 1/Q")));
    }
    Ok((q, dist))
}

/// Evaluates `f` at every `τ = offset + t·s`, `s ∈ {lo..hi}^{d−1}`, in
/// lexicographic order. Lines along the last axis run in parallel.
fn scan_slice_grid<T, F>(xi: &[Value], offset: &[f64], lo: usize, hi: usize, t: f64, f: F) -> Result<Vec<(Vec<usize>, T)>>
where
    T: Send,
    F: Fn(&SliceTracker, &[usize]) -> Result<T> + Sync,
{
    let m = xi.len();
    if m == 0 || lo == 0 || lo > hi {
        return Err(Error::InvalidParameter("need d >= 2 and 1 <= lo <= hi".into()));
    }
    let side = hi - lo + 1;
    let lines = side.pow(m as u32 - 1);
    let base = SliceTracker::new(xi)?;
    let per_line: Vec<Vec<(Vec<usize>, T)>> = (0..lines)
        .into_par_iter()
        .map(|line| {
            let mut prefix = vec![0usize; m - 1];
            let mut c = line;
            for j in (0..m - 1).rev() {
                prefix[j] = lo + c % side;
                c /= side;
            }
            let mut tr = base.clone();
            let mut out = Vec::with_capacity(side);
            for last in lo..=hi {
                let mut s = prefix.clone();
                s.push(last);
                let tau: Vec<f64> = s.iter().zip(offset).map(|(&k, o)| o + t * k as f64).collect();
                tr.advance_to(&tau)?;
                out.push((s.clone(), f(&tr, &s)?));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_line.into_iter().flatten().collect())
}

/// Prefix-box densities: for each `N ∈ {1..nmax}`, the fraction of `s` with
/// `max s ≤ N` where `hit` is true.
fn prefix_densities(table: &[(Vec<usize>, bool)], nmax: usize, m: usize) -> Vec<(usize, f64)> {
    (1..=nmax)
        .map(|n| {
            let hits = table.iter().filter(|(s, h)| *h && s.iter().all(|&k| k <= n)).count();
            (n, hits as f64 / (n as f64).powi(m as i32))
        })
        .collect()
}

/// Multiplicative-singularity densities with per-point witness verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularDensity {
    pub eps: f64,
    pub series: Vec<(usize, f64)>,
    pub witnesses_verified: usize,
    pub flags: Vec<Flag>,
}

const QSCAN_LIMIT: f64 = 1e6;

fn witness_holds(tr: &SliceTracker, n: &[usize], eps: f64, q: &BigInt) -> bool {
    let sum: f64 = n.iter().map(|&k| k as f64).sum();
    let qf = q.to_f64().unwrap_or(f64::INFINITY);
    if !(qf > 0.0 && qf < eps * sum.exp()) {
        return false;
    }
    n.iter()
        .enumerate()
        .all(|(i, &k)| tr.signed_frac(i, q).abs() <= eps * (-(k as f64)).exp())
}

fn find_witness(tr: &SliceTracker, n: &[usize], eps: f64, enum_cap: usize) -> Result<Option<BigInt>> {
    let d = tr.dim();
    let lat = tr.lattice();
    // Any nonzero vector in the sup-box has q ≠ 0, so a short vector settles
    // most points without enumerating a possibly huge ball.
    let (_, y) = shortest_vector(&lat)?;
    let q = tr.integer_coords(&y)[d - 1].abs();
    if !q.is_zero() && witness_holds(tr, n, eps, &q) {
        return Ok(Some(q));
    }
    match enumerate_vectors_within(&lat, eps, NormKind::Sup, enum_cap) {
        Ok(vs) => {
            for v in vs {
                let z = tr.integer_coords(&v.coeffs);
                let q = z[d - 1].abs();
                if !q.is_zero() && witness_holds(tr, n, eps, &q) {
                    return Ok(Some(q));
                }
            }
            Ok(None)
        }
        Err(Error::EnumerationBudgetExceeded { cap }) => {
            let sum: f64 = n.iter().map(|&k| k as f64).sum();
            let bound = eps * sum.exp();
            if bound > QSCAN_LIMIT {
                return Err(Error::EnumerationBudgetExceeded { cap });
            }
            for q in 1..=(bound.ceil() as u64) {
                let qb = BigInt::from(q);
                if witness_holds(tr, n, eps, &qb) {
                    return Ok(Some(qb));
                }
            }
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// For each `N ≤ nmax`, the fraction of `n ∈ {1..N}^{d−1}` admitting
/// `q ∈ ℕ` with `‖qξ_i‖ ≤ εe^{−n_i}` and `0 < q < εe^{Σn}`.
pub fn mult_singular_density(xi: &[Value], eps: f64, nmax: usize, enum_cap: usize) -> Result<SingularDensity> {
    if !(eps > 0.0) {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let zero = vec![0.0; xi.len()];
    let table = scan_slice_grid(xi, &zero, 1, nmax, 1.0, |tr, s| Ok(find_witness(tr, s, eps, enum_cap)?.is_some()))?;
    let verified = table.iter().filter(|(_, h)| *h).count();
    Ok(SingularDensity { eps, series: prefix_densities(&table, nmax, xi.len()), witnesses_verified: verified, flags: vec![] })
}

/// The compact set used by [`escape_of_mass`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    /// `K_ε = {λ₁ ≥ ε}`.
    Epsilon(f64),
    /// `K_h = {max_i α̃_i ≤ h}`.
    Height(f64),
}

/// Base point of an orbit: `a_{τ0} u(ξ)Γ`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitBase {
    pub tau0: Vec<f64>,
    pub xi: Vec<Value>,
}

impl OrbitBase {
    pub fn from_xi(xi: Vec<Value>) -> Self {
        Self { tau0: vec![0.0; xi.len()], xi }
    }

    pub fn from_point(x: &XPrimePoint) -> Self {
        Self { tau0: x.tau().to_vec(), xi: x.xi().iter().map(|&v| Value::Float(v)).collect() }
    }
}

/// Escape densities with the flags raised along the way.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeSeries {
    pub series: Vec<(usize, f64)>,
    pub flags: Vec<Flag>,
}

/// The height gate evaluates at the f64 rounding of `ξ`. For an irrational
/// exact `ξ` that rounding is visible once `max τ_i + Στ` passes this value.
const ROUNDED_XI_LIMIT: f64 = 30.0;

/// For each `N ≤ nmax`, `1 − #{τ ∈ {t..Nt}^{d−1} : a_τ x ∈ K}/N^{d−1}`.
pub fn escape_of_mass(
    base: &OrbitBase,
    nmax: usize,
    t: f64,
    gate: Gate,
    params: &HeightParams,
    consts: &CalibratedConstants,
) -> Result<EscapeSeries> {
    let m = base.xi.len();
    let mut flags = Vec::new();
    let table: Vec<(Vec<usize>, bool)> = match gate {
        Gate::Epsilon(eps) => {
            if !(eps > 0.0) {
                return Err(Error::InvalidParameter("gate parameter must be positive".into()));
            }
            scan_slice_grid(&base.xi, &base.tau0, 1, nmax, t, |tr, _| Ok(tr.lambda1()? < eps))?
        }
        Gate::Height(h) => {
            if !(h > 0.0) {
                return Err(Error::InvalidParameter("gate parameter must be positive".into()));
            }
            let xi: Vec<f64> = base.xi.iter().map(Value::to_f64).collect();
            let pts: Vec<Vec<usize>> = (0..nmax.pow(m as u32))
                .map(|mut c| {
                    let mut s = vec![0; m];
                    for j in (0..m).rev() {
                        s[j] = 1 + c % nmax;
                        c /= nmax;
                    }
                    s
                })
                .collect();
            let top = base.tau0.iter().cloned().fold(0.0, f64::max) + base.tau0.iter().sum::<f64>() + t * ((m + 1) * nmax) as f64;
            let irrational = base.xi.iter().any(|v| v.exact().is_some_and(|q| !q.is_rational()));
            if irrational && top > ROUNDED_XI_LIMIT {
                flags.push(Flag::Heuristic);
            }
            pts.into_par_iter()
                .map(|s| {
                    let tau: Vec<f64> = s.iter().zip(&base.tau0).map(|(&k, o)| o + t * k as f64).collect();
                    let x = XPrimePoint::wrapped(tau, xi.clone())?;
                    let top = alpha_tilde_all(&x, params, consts)?.iter().map(|a| a.value).fold(0.0, f64::max);
                    Ok((s, top > h))
                })
                .collect::<Result<_>>()?
        }
    };
    Ok(EscapeSeries { series: prefix_densities(&table, nmax, m), flags })
}

/// Side-by-side densities for the Dani correspondence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DaniReport {
    pub eps: f64,
    pub t: f64,
    pub singular: Vec<(usize, f64)>,
    pub mahler: Vec<(usize, f64)>,
    pub caveat: String,
}

pub const DANI_CAVEAT: &str = "The correspondence is asymptotic and its two sides use different \
ε-scales at finite horizon; agreement is qualitative, not pointwise.";

pub fn dani_check(xi: &[Value], eps: f64, n: usize, t: f64, enum_cap: usize) -> Result<DaniReport> {
    let singular = mult_singular_density(xi, eps, n, enum_cap)?.series;
    let params = HeightParams::default();
    let consts = CalibratedConstants::uncalibrated(&params, xi.len() + 1);
    let mahler = escape_of_mass(&OrbitBase::from_xi(xi.to_vec()), n, t, Gate::Epsilon(eps), &params, &consts)?.series;
    Ok(DaniReport { eps, t, singular, mahler, caveat: DANI_CAVEAT.into() })
}

/// `x̂_{ξ,θ} = u(ξ)ℤ^d − (θ, 0)`.
pub fn make_grid_point(xi: &[f64], theta: &[f64]) -> Result<Grid> {
    if xi.len() != theta.len() {
        return Err(Error::InvalidParameter("theta and xi lengths differ".into()));
    }
    let l = UnimodularLattice::from_matrix(&u_matrix(xi))?;
    let mut shift: Vec<f64> = theta.iter().map(|x| -x).collect();
    shift.push(0.0);
    Grid::new(l, shift)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InhomScan {
    /// First τ in lexicographic order with a grid point in the open ε-ball,
    /// and that point's norm.
    pub first_violation: Option<(Vec<f64>, f64)>,
    pub rational: Option<bool>,
    pub points_scanned: usize,
    pub flags: Vec<Flag>,
}

/// Above this `Στ` the f64 grid basis loses precision; results are flagged.
const GRID_TAU_LIMIT: f64 = 25.0;

/// Scans `τ ∈ (t·{⌈T/t⌉..nmax})^{d−1}` for `a_τ x̂` meeting the ε-ball.
#[allow(clippy::too_many_arguments)]
pub fn inhom_dani_scan(xi: &[Value], theta: &[Value], eps: f64, t_min: f64, nmax: usize, t: f64, enum_cap: usize) -> Result<InhomScan> {
    if !(eps > 0.0 && t_min > 0.0 && t > 0.0) {
        return Err(Error::InvalidParameter("need eps, T, t > 0".into()));
    }
    let m = xi.len();
    let xf: Vec<f64> = xi.iter().map(Value::to_f64).collect();
    let tf: Vec<f64> = theta.iter().map(Value::to_f64).collect();
    let grid = make_grid_point(&xf, &tf)?;
    let lo = (t_min / t).ceil().max(1.0) as usize;
    let mut flags = Vec::new();
    if lo > nmax {
        return Ok(InhomScan { first_violation: None, rational: is_rational_pair(xi, theta), points_scanned: 0, flags });
    }
    let side = nmax - lo + 1;
    if t * (m * nmax) as f64 > GRID_TAU_LIMIT {
        flags.push(Flag::Heuristic);
    }
    let hits: Vec<Option<(Vec<f64>, f64)>> = (0..side.pow(m as u32))
        .into_par_iter()
        .map(|mut c| {
            let mut tau = vec![0.0; m];
            for j in (0..m).rev() {
                tau[j] = t * (lo + c % side) as f64;
                c /= side;
            }
            let a = crate::flows::DiagParam::new(tau.clone())?.matrix();
            let g = grid.transformed(&a)?;
            let r = grid_min_norm(&g, eps, NormKind::Euclidean, enum_cap)?;
            Ok((r < eps).then_some((tau, r)))
        })
        .collect::<Result<_>>()?;
    let n = hits.len();
    Ok(InhomScan {
        first_violation: hits.into_iter().flatten().next(),
        rational: is_rational_pair(xi, theta),
        points_scanned: n,
        flags,
    })
}

/// `‖qξ‖` via exact arithmetic, for callers that want a reference value.
pub fn exact_dist(x: &QuadNum, q: i128) -> f64 {
    x.scale(q).dist_to_int()
}

//! Height functions on lattices and on the slice `X′`.
//!
//! * `φ_{i,k,ε}` and the Benoist–Quint height `α_{i,ε}` (max over primitive
//!   wedges, all degrees k);
//! * `ht_λ` on 2D lattices and the auxiliary height `α′_i = κ_i·ht_λ∘φ_i`;
//! * the modified height `α̃_i`, which switches between the two;
//! * the dynamical heights `J`, `β`, `Ω` and `ψ` built from `α̃` along τ-grids.
//!
//! The weight-one part of a k-vector collects the coordinates `e_S` with
//! `|S ∩ {i, d}| = 1`; everything else is weight zero.

use crate::error::{Error, Flag, Result};
use crate::flows::{make_d_n, make_e, DiagParam, TauGrid, XPrimePoint};
use crate::lattice::{
    best_gated_primitive, enumerate_primitive_wedges, gated_search, lagrange_gauss_reduce, lambda1, GatedHit, UnimodularLattice, WedgeElement,
    DEFAULT_ENUM_CAP,
};
use crate::linalg;
use crate::tracker::{needs_exact, slice_lattice, slice_tracker, SliceTracker, DIRECT_LIMIT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Stand-in for `+∞` when a qualifying wedge has zero weight-one part.
pub const SENTINEL: f64 = 1e300;

/// Parameters shared by all height evaluations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightParams {
    pub lambda: f64,
    pub t: f64,
    pub epsilon: f64,
    /// Largest wedge norm explored when no monomial has qualified yet.
    pub enum_bound: f64,
    pub quad_resolution: usize,
    pub enum_cap: usize,
}

impl Default for HeightParams {
    fn default() -> Self {
        Self {
            lambda: 0.9,
            t: 4.0,
            epsilon: 0.3,
            enum_bound: 64.0,
            quad_resolution: 64,
            enum_cap: DEFAULT_ENUM_CAP,
        }
    }
}

impl HeightParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidParameter(format!("lambda must lie in (0,1), got {}", self.lambda)));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::InvalidParameter(format!("epsilon must lie in (0,1), got {}", self.epsilon)));
        }
        if !(self.t > 0.0) {
            return Err(Error::InvalidParameter(format!("t must be positive, got {}", self.t)));
        }
        if !(self.enum_bound > 0.0) {
            return Err(Error::InvalidParameter("enum_bound must be positive".into()));
        }
        if self.quad_resolution < 64 {
            return Err(Error::InvalidParameter("quadrature resolution must be >= 64".into()));
        }
        Ok(())
    }
}

/// Fitted constants. Serialized with the field names used by the
/// calibration file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibratedConstants {
    pub lambda: f64,
    pub t: f64,
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "C_ht")]
    pub c_ht: f64,
    #[serde(rename = "E101")]
    pub e101: f64,
    /// Sorted `(h, D(h))` pairs, nondecreasing in both coordinates.
    #[serde(rename = "D_breakpoints")]
    pub d_breakpoints: Vec<(f64, f64)>,
}

impl CalibratedConstants {
    /// `max{5C, 5C′, ε^{−(d−1)}}`.
    pub fn e101_formula(c: f64, c_ht: f64, epsilon: f64, d: usize) -> f64 {
        (5.0 * c).max(5.0 * c_ht).max(epsilon.powi(-(d as i32 - 1)))
    }

    /// Constants with `C = C′ = 0` and no D-table; `E101 = ε^{−(d−1)}`.
    pub fn uncalibrated(params: &HeightParams, d: usize) -> Self {
        Self {
            lambda: params.lambda,
            t: params.t,
            epsilon: params.epsilon,
            c: 0.0,
            c_ht: 0.0,
            e101: Self::e101_formula(0.0, 0.0, params.epsilon, d),
            d_breakpoints: vec![],
        }
    }

    /// Monotone upper envelope `D(h) > h` from the breakpoint table. Beyond
    /// the table the last ratio `D/h` is reused.
    pub fn d_of_h(&self, h: f64) -> f64 {
        let fallback = |ratio: f64| (h * ratio).max(h * (1.0 + 1e-9));
        match self.d_breakpoints.iter().find(|(hb, _)| *hb >= h) {
            Some(&(_, dv)) => dv.max(h * (1.0 + 1e-9)),
            None => match self.d_breakpoints.last() {
                Some(&(hb, dv)) => fallback(dv / hb),
                None => fallback(1.5),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("constants serialize")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

fn weight_one(subset: &[usize], i: usize, d: usize) -> bool {
    let hits = subset.iter().filter(|&&s| s == i || s == d - 1).count();
    hits == 1
}

/// Splits wedge coordinates into weight-zero and weight-one parts. Both
/// outputs have the full coordinate length, with complementary supports.
pub fn project_wedge(w: &WedgeElement, i: usize, d: usize) -> (Vec<f64>, Vec<f64>) {
    let subsets = linalg::k_subsets(d, w.k);
    let mut v0 = vec![0.0; w.coords.len()];
    let mut v1 = vec![0.0; w.coords.len()];
    for (idx, s) in subsets.iter().enumerate() {
        if weight_one(s, i, d) {
            v1[idx] = w.coords[idx];
        } else {
            v0[idx] = w.coords[idx];
        }
    }
    (v0, v1)
}

fn gate_scale(epsilon: f64, k: usize, d: usize) -> f64 {
    epsilon.powi((k * (d - k)) as i32)
}

fn phi_from_norms(n0: f64, n1: f64, epsilon: f64, lambda: f64, k: usize, d: usize) -> (f64, bool) {
    let e = gate_scale(epsilon, k, d);
    if n0 >= e {
        (0.0, false)
    } else if n1 == 0.0 {
        (SENTINEL, true)
    } else {
        ((e * n1.powf(-lambda)).min(SENTINEL), false)
    }
}

/// `φ_{i,k,ε}(w)`; the flag is `Some(Sentinel)` on a weight-one blow-up.
pub fn bq_phi(w: &WedgeElement, i: usize, d: usize, params: &HeightParams) -> (f64, Option<Flag>) {
    let (v0, v1) = project_wedge(w, i, d);
    let (val, blow) = phi_from_norms(
        linalg::norm2(&v0).sqrt(),
        linalg::norm2(&v1).sqrt(),
        params.epsilon,
        params.lambda,
        w.k,
        d,
    );
    (val, blow.then_some(Flag::Sentinel))
}

/// A height value with the events met while computing it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightValue {
    pub value: f64,
    pub flags: Vec<Flag>,
}

fn push_flag(flags: &mut Vec<Flag>, f: Flag) {
    if !flags.contains(&f) {
        flags.push(f);
    }
}

/// Norm bound beyond which a wedge of degree k cannot beat `best`.
fn needed_radius(best: f64, epsilon: f64, lambda: f64, k: usize, d: usize) -> f64 {
    let e = gate_scale(epsilon, k, d);
    let v1 = (best / e).powf(-1.0 / lambda);
    (e * e + v1 * v1).sqrt()
}

/// The anisotropic scan starts at this fraction of `λ₁`.
const ANISO_START: f64 = 1e-3;

/// Best `φ_{i,k,ε}` over degree 1 (`dual = false`) or degree `d−1` (`dual =
/// true`, through primitive dual vectors, whose coordinates are the Hodge
/// duals of the wedge coordinates and keep their weight).
///
/// Searches the ellipsoid `‖v₀‖²/ε_k² + ‖v₁‖²/R² ≤ 2`, which contains every
/// vector passing the gate with weight-one norm at most `R`, doubling `R` from
/// `10⁻³·λ₁`. The first hit is optimal, so deep-cusp lattices cost a handful
/// of points instead of the whole Euclidean ball.
fn extreme_degree_best(base: &Base, i: usize, dual: bool, params: &HeightParams) -> Result<(f64, Option<Flag>)> {
    let d = base.dim();
    let k = if dual { d - 1 } else { 1 };
    let e = gate_scale(params.epsilon, k, d);
    let base = if dual { base.dual()? } else { base.clone() };
    let heavy: Vec<bool> = (0..d).map(|j| j == i || j == d - 1).collect();
    let search = |r: f64| -> Result<Option<GatedHit>> {
        let w: Vec<f64> = heavy.iter().map(|&h| if h { 1.0 / r } else { 1.0 / e }).collect();
        match &base {
            Base::Plain(l) => best_gated_primitive(l, &w, &heavy, e, params.enum_cap),
            Base::Tracked(tr) => {
                let log_w: Vec<f64> = w.iter().map(|x| x.ln()).collect();
                gated_search(tr.rescaled(&log_w)?.basis(), &w, &heavy, e, params.enum_cap)
            }
        }
    };
    let mut r = ANISO_START * base.lambda1()?;
    loop {
        let r_eff = r.min(params.enum_bound);
        if let Some(hit) = search(r_eff)? {
            // Everything passing the gate with weight-one norm up to this hit
            // lies in the ellipsoid of that radius.
            let hit = if hit.n1 > r_eff && hit.n1 > 0.0 { search(hit.n1)?.unwrap_or(hit) } else { hit };
            let (val, blow) = phi_from_norms(hit.n0, hit.n1, params.epsilon, params.lambda, k, d);
            return Ok((val, blow.then_some(Flag::Sentinel)));
        }
        if r_eff >= params.enum_bound {
            return Ok((0.0, None));
        }
        r *= 16.0;
    }
}

/// A lattice given by a float basis, or exactly through a tracker.
#[derive(Clone)]
enum Base {
    Plain(UnimodularLattice),
    Tracked(SliceTracker),
}

impl Base {
    fn dim(&self) -> usize {
        match self {
            Base::Plain(l) => l.dim(),
            Base::Tracked(t) => t.dim(),
        }
    }

    fn dual(&self) -> Result<Self> {
        Ok(match self {
            Base::Plain(l) => Base::Plain(l.dual()?),
            Base::Tracked(t) => Base::Tracked(t.dual()?),
        })
    }

    fn lambda1(&self) -> Result<f64> {
        match self {
            Base::Plain(l) => lambda1(l),
            Base::Tracked(t) => t.lambda1(),
        }
    }

    fn lattice(&self) -> UnimodularLattice {
        match self {
            Base::Plain(l) => l.clone(),
            Base::Tracked(t) => t.lattice(),
        }
    }
}

/// `α_{i,ε}` for every direction `i ∈ is` at once, sharing the enumeration.
///
/// Degrees 1 and `d−1` go through an anisotropic search per direction; the
/// middle degrees (only present for `d ≥ 4`) enumerate wedges by norm.
pub fn bq_alpha_multi(l: &UnimodularLattice, is: &[usize], params: &HeightParams) -> Result<Vec<HeightValue>> {
    bq_alpha_base(&Base::Plain(l.clone()), is, params)
}

/// `α_{i,ε}(x)` at a slice point for every `i ∈ is`. Far out in the cusp
/// the lattice and its dual are handled exactly through a tracker.
pub fn bq_alpha_slice(x: &XPrimePoint, is: &[usize], params: &HeightParams) -> Result<Vec<HeightValue>> {
    if needs_exact(x.tau()) {
        bq_alpha_base(&Base::Tracked(slice_tracker(x.tau(), x.xi())?), is, params)
    } else {
        bq_alpha_multi(&slice_lattice(x.tau(), x.xi())?, is, params)
    }
}

fn bq_alpha_base(base: &Base, is: &[usize], params: &HeightParams) -> Result<Vec<HeightValue>> {
    let d = base.dim();
    let (eps, lam) = (params.epsilon, params.lambda);
    let mut best = vec![0.0f64; is.len()];
    let mut flags: Vec<Vec<Flag>> = vec![vec![]; is.len()];
    for (slot, &i) in is.iter().enumerate() {
        for dual in [false, true] {
            if dual && d == 2 {
                continue;
            }
            let (v, f) = extreme_degree_best(base, i, dual, params)?;
            if let Some(f) = f {
                push_flag(&mut flags[slot], f);
            }
            best[slot] = best[slot].max(v);
        }
    }
    if d < 4 {
        return Ok(finish_alpha(best, flags));
    }
    let l = &base.lattice();
    let mut searched = vec![0.0f64; d];
    let scan = |k: usize, r: f64, best: &mut [f64], flags: &mut [Vec<Flag>]| -> Result<()> {
        let ws = enumerate_primitive_wedges(l, k, r, params.enum_cap)?;
        let subsets = linalg::k_subsets(d, k);
        for w in &ws {
            for (slot, &i) in is.iter().enumerate() {
                let (mut n0, mut n1) = (0.0, 0.0);
                for (idx, s) in subsets.iter().enumerate() {
                    let c = w.coords[idx] * w.coords[idx];
                    if weight_one(s, i, d) {
                        n1 += c;
                    } else {
                        n0 += c;
                    }
                }
                let (v, blow) = phi_from_norms(n0.sqrt(), n1.sqrt(), eps, lam, k, d);
                if blow {
                    push_flag(&mut flags[slot], Flag::Sentinel);
                }
                if v > best[slot] {
                    best[slot] = v;
                }
            }
        }
        Ok(())
    };

    // First pass: unit radius, doubling until every degree has some wedge
    // passing the gate or the exploration bound is reached.
    for k in 2..d - 1 {
        let mut r = 1.0f64.min(params.enum_bound);
        loop {
            scan(k, r, &mut best, &mut flags)?;
            searched[k] = r;
            if best.iter().all(|&b| b > 0.0) || r >= params.enum_bound {
                break;
            }
            r = (2.0 * r).min(params.enum_bound);
        }
    }
    // Second pass: extend each degree to the pruning radius of the weakest
    // direction.
    loop {
        let floor = best.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut extended = false;
        for k in 2..d - 1 {
            let need = if floor > 0.0 {
                needed_radius(floor, eps, lam, k, d).min(params.enum_bound)
            } else {
                params.enum_bound
            };
            if need > searched[k] * (1.0 + 1e-12) {
                scan(k, need, &mut best, &mut flags)?;
                searched[k] = need;
                extended = true;
            }
        }
        if !extended {
            break;
        }
    }
    Ok(finish_alpha(best, flags))
}

fn finish_alpha(best: Vec<f64>, flags: Vec<Vec<Flag>>) -> Vec<HeightValue> {
    best.into_iter()
        .zip(flags)
        .map(|(value, mut fl)| {
            if value == 0.0 {
                push_flag(&mut fl, Flag::EmptyMax);
            }
            HeightValue { value, flags: fl }
        })
        .collect()
}

/// Benoist–Quint height `α_{i,ε}(L)`: max of `φ_{i,k,ε}` over primitive
/// wedges of every degree. An empty qualifying set yields 0 (flagged).
pub fn bq_alpha(l: &UnimodularLattice, i: usize, params: &HeightParams) -> Result<HeightValue> {
    Ok(bq_alpha_multi(l, &[i], params)?.remove(0))
}

/// `ht_λ(L) = λ₁(L)^{−λ}` for a 2D lattice given by basis columns.
pub fn ht2(cols: [[f64; 2]; 2], lambda: f64) -> Result<f64> {
    let (b, _) = lagrange_gauss_reduce(cols)?;
    Ok(b[0][0].hypot(b[0][1]).powf(-lambda))
}

/// `λ₁` of `φ_i(x) = ā_{Στ}ū(ξ_i)SL₂(ℤ)`; large `Στ` goes through a tracker.
pub fn phi_lambda1(x: &XPrimePoint, i: usize) -> Result<f64> {
    let sum = x.tau_sum();
    if 2.0 * sum > DIRECT_LIMIT {
        let mut tr = SliceTracker::from_f64(&[x.xi()[i]])?;
        tr.advance_to(&[sum])?;
        return tr.lambda1();
    }
    let (b, _) = lagrange_gauss_reduce(x.phi_i(i))?;
    Ok(b[0][0].hypot(b[0][1]))
}

/// `α′_i(x) = κ_i(x)·ht_λ(φ_i(x))`.
pub fn alpha_prime(x: &XPrimePoint, i: usize, lambda: f64) -> Result<f64> {
    Ok(x.kappa_i(i) * phi_lambda1(x, i)?.powf(-lambda))
}

/// Which branch of `α̃` was taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TildeBranch {
    /// `α ≤ E101·κ_i`: value `max{α, 1}`.
    Floor,
    /// Otherwise: value `min{α, α′}`.
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlphaTilde {
    pub value: f64,
    pub alpha: f64,
    pub alpha_prime: f64,
    pub kappa: f64,
    pub branch: TildeBranch,
    pub flags: Vec<Flag>,
}

fn combine_tilde(alpha: f64, ap: f64, kappa: f64, e101: f64) -> (f64, TildeBranch) {
    if alpha <= e101 * kappa {
        (alpha.max(1.0), TildeBranch::Floor)
    } else {
        (alpha.min(ap), TildeBranch::Min)
    }
}

/// `α̃_i` for all directions at x.
pub fn alpha_tilde_all(x: &XPrimePoint, params: &HeightParams, consts: &CalibratedConstants) -> Result<Vec<AlphaTilde>> {
    let d = x.d();
    let is: Vec<usize> = (0..d - 1).collect();
    let alphas = bq_alpha_slice(x, &is, params)?;
    is.iter()
        .zip(alphas)
        .map(|(&i, a)| {
            let ap = alpha_prime(x, i, params.lambda)?;
            let kappa = x.kappa_i(i);
            let (value, branch) = combine_tilde(a.value, ap, kappa, consts.e101);
            Ok(AlphaTilde { value, alpha: a.value, alpha_prime: ap, kappa, branch, flags: a.flags })
        })
        .collect()
}

/// Modified height `α̃_i(x)`.
pub fn alpha_tilde(x: &XPrimePoint, i: usize, params: &HeightParams, consts: &CalibratedConstants) -> Result<AlphaTilde> {
    let a = bq_alpha_slice(x, &[i], params)?.remove(0);
    let ap = alpha_prime(x, i, params.lambda)?;
    let kappa = x.kappa_i(i);
    let (value, branch) = combine_tilde(a.value, ap, kappa, consts.e101);
    Ok(AlphaTilde { value, alpha: a.value, alpha_prime: ap, kappa, branch, flags: a.flags })
}

/// `α̃_i(a_{jt e_i} x)` for `j = 1..=n`.
pub fn tilde_along(x: &XPrimePoint, i: usize, t: f64, n: usize, params: &HeightParams, consts: &CalibratedConstants) -> Result<Vec<f64>> {
    (1..=n)
        .map(|j| {
            let y = x.act_diag(&DiagParam::along(x.d(), i, j as f64 * t))?;
            Ok(alpha_tilde(&y, i, params, consts)?.value)
        })
        .collect()
}

/// `J_{i,h}(x) ∩ {1..N}`: the `j` with `α̃_i(a_{jt e_i}x) ≥ h`.
pub fn j_set(x: &XPrimePoint, i: usize, h: f64, t: f64, n: usize, params: &HeightParams, consts: &CalibratedConstants) -> Result<Vec<usize>> {
    if h < 1.0 {
        return Err(Error::InvalidParameter("h must be >= 1".into()));
    }
    let vals = tilde_along(x, i, t, n, params, consts)?;
    Ok(vals
        .iter()
        .enumerate()
        .filter(|(_, &v)| v >= h)
        .map(|(j, _)| j + 1)
        .collect())
}

fn beta_from_track(track: &[f64], delta: f64, h: f64) -> f64 {
    let n = track.len();
    let count = track.iter().filter(|&&v| v >= h).count();
    if count as f64 >= (1.0 - delta) * n as f64 - 1e-12 {
        track[n - 1]
    } else {
        0.0
    }
}

/// `β_{N,δ,i,h}(x)`.
#[allow(clippy::too_many_arguments)]
pub fn beta(x: &XPrimePoint, n: usize, delta: f64, i: usize, h: f64, t: f64, params: &HeightParams, consts: &CalibratedConstants) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) || n == 0 {
        return Err(Error::InvalidParameter("need 0 < delta < 1 and N >= 1".into()));
    }
    let track = tilde_along(x, i, t, n, params, consts)?;
    Ok(beta_from_track(&track, delta, h))
}

/// `α̃_i(a_τ x)` for every τ of a grid, all directions. Rows follow `grid.steps`.
pub fn tilde_table(x: &XPrimePoint, grid: &TauGrid, params: &HeightParams, consts: &CalibratedConstants) -> Result<Vec<Vec<f64>>> {
    grid.points()
        .par_iter()
        .map(|tau| {
            let y = x.act_diag(&DiagParam::new(tau.clone())?)?;
            Ok(alpha_tilde_all(&y, params, consts)?.into_iter().map(|a| a.value).collect())
        })
        .collect()
}

/// `Ω(N,h,x) = {τ ∈ 𝒟_N : min_i α̃_i(a_τ x) ≥ h}`.
pub fn omega_set(x: &XPrimePoint, n: usize, h: f64, t: f64, params: &HeightParams, consts: &CalibratedConstants) -> Result<TauGrid> {
    let dn = make_d_n(n, t, x.d())?;
    let table = tilde_table(x, &dn, params, consts)?;
    Ok(omega_from_table(&dn, &table, h))
}

pub(crate) fn omega_from_table(dn: &TauGrid, table: &[Vec<f64>], h: f64) -> TauGrid {
    let steps: Vec<Vec<u32>> = dn
        .steps
        .iter()
        .zip(table)
        .filter(|(_, row)| row.iter().cloned().fold(f64::INFINITY, f64::min) >= h)
        .map(|(s, _)| s.clone())
        .collect();
    let flags = if steps.is_empty() { vec![Flag::EmptySet] } else { vec![] };
    TauGrid { n: dn.n, t: dn.t, steps, flags }
}

/// `ψ_{N,δ,h}(x)` with its flags.
#[allow(clippy::too_many_arguments)]
pub fn psi(x: &XPrimePoint, n: usize, delta: f64, h: f64, t: f64, params: &HeightParams, consts: &CalibratedConstants, c7: f64) -> Result<HeightValue> {
    let d = x.d();
    let dn = make_d_n(n, t, d)?;
    let table = tilde_table(x, &dn, params, consts)?;
    psi_from_table(&dn, &table, delta, h, c7, d)
}

pub(crate) fn psi_from_table(dn: &TauGrid, table: &[Vec<f64>], delta: f64, h: f64, c7: f64, d: usize) -> Result<HeightValue> {
    let omega = omega_from_table(dn, table, h);
    let gate = 1.0 - delta.powi(d as i32) / (4.0 * c7);
    if (omega.len() as f64) < gate * dn.len() as f64 {
        return Ok(HeightValue { value: 0.0, flags: vec![] });
    }
    let mut prod = 1.0;
    for i in 0..d - 1 {
        let e = make_e(dn.n, delta, i, dn.t, d)?;
        let mut m = f64::INFINITY;
        for (s, row) in dn.steps.iter().zip(table) {
            if e.contains(s) && omega.contains(s) {
                m = m.min(row[i]);
            }
        }
        if !m.is_finite() {
            return Ok(HeightValue { value: 0.0, flags: vec![Flag::EmptyMinSet] });
        }
        prod *= m;
    }
    Ok(HeightValue { value: prod, flags: vec![] })
}

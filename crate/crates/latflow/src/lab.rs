//! Numerical certification harness.
//!
//! Horocycle averages `∫ f(a_{te_i}u_i(s)x) ds` by stratified midpoint
//! quadrature, calibration of the subharmonic constants, empirical checks of
//! the contraction and log-Lipschitz inequalities, fits of the auxiliary
//! constants, and the covering-count estimator for the divergent set.
//!
//! Every random choice flows from a [`SampleSpec`] seed, and all parallel
//! reductions are order-independent, so reports are reproducible.

use crate::error::{Error, Flag, Result};
use crate::flows::{make_d_n, make_e, make_ehat, wrap_unit, DiagParam, TauGrid, XPrimePoint};
use crate::heights::{
    alpha_prime, alpha_tilde, alpha_tilde_all, bq_alpha, bq_alpha_slice, phi_lambda1, psi_from_table, tilde_table, CalibratedConstants,
    HeightParams, SENTINEL,
};
use crate::lattice::{lambda1, UnimodularLattice};
use crate::linalg::{self, Mat};
use crate::tracker::slice_lattice;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Which height an inequality is about.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeightKind {
    /// `ht_λ` on the 2D lattices `φ_i(x)`.
    Ht,
    BqAlpha,
    AlphaPrime,
    AlphaTilde,
}

impl std::str::FromStr for HeightKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ht" => Ok(Self::Ht),
            "bq_alpha" => Ok(Self::BqAlpha),
            "alpha_prime" => Ok(Self::AlphaPrime),
            "alpha_tilde" => Ok(Self::AlphaTilde),
            _ => Err(Error::InvalidParameter(format!("unknown height kind {s:?}"))),
        }
    }
}

impl std::fmt::Display for HeightKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ht => "ht",
            Self::BqAlpha => "bq_alpha",
            Self::AlphaPrime => "alpha_prime",
            Self::AlphaTilde => "alpha_tilde",
        })
    }
}

/// Below this horocycle scale, cusp points are centred at 0.
const DEEP_SCALE: f64 = 1e-12;

/// A seeded sample of slice points.
///
/// With probability `cusp_fraction` a point is placed near the cusp: each
/// `ξ_j` is a rational `p/q` with `q ≤ 4`, moved by less than
/// `e^{−(τ_j+Στ)}/2`, so the lattice keeps a vector of length about `qe^{−Στ}`.
/// When `e^{−(τ_j+Στ)} < 1e-12` the centre is 0 so the offset stays
/// representable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub count: usize,
    pub seed: u64,
    pub d: usize,
    pub tau_range: (f64, f64),
    pub cusp_fraction: f64,
}

impl SampleSpec {
    pub fn new(count: usize, seed: u64, d: usize, tau_range: (f64, f64)) -> Self {
        Self { count, seed, d, tau_range, cusp_fraction: 0.0 }
    }

    pub fn with_cusp_fraction(mut self, f: f64) -> Self {
        self.cusp_fraction = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.tau_range;
        if self.d < 2 || !(lo > 0.0 && hi >= lo && hi.is_finite()) || !(0.0..=1.0).contains(&self.cusp_fraction) {
            return Err(Error::InvalidParameter("sample spec needs d >= 2, 0 < tau_min <= tau_max, cusp fraction in [0,1]".into()));
        }
        Ok(())
    }

    /// Points with the direction each one is tested in (cycling through `0..d−1`).
    pub fn draw(&self) -> Result<Vec<(XPrimePoint, usize)>> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let m = self.d - 1;
        (0..self.count)
            .map(|k| {
                let tau: Vec<f64> = (0..m).map(|_| rng.gen_range(self.tau_range.0..=self.tau_range.1)).collect();
                let sum: f64 = tau.iter().sum();
                let xi: Vec<f64> = if rng.gen::<f64>() < self.cusp_fraction {
                    let q = rng.gen_range(1..=4u32);
                    tau.iter()
                        .map(|t| {
                            let p = rng.gen_range(0..q);
                            let scale = (-(t + sum)).exp();
                            let eta = rng.gen_range(-0.5..0.5) * scale;
                            // Offsets from a nonzero centre this small would be
                            // lost to float spacing.
                            let centre = if scale < DEEP_SCALE { 0.0 } else { p as f64 / q as f64 };
                            wrap_unit(centre + eta)
                        })
                        .collect()
                } else {
                    (0..m).map(|_| rng.gen_range(-0.5..0.5)).collect()
                };
                Ok((XPrimePoint::new(tau, xi)?, k % m))
            })
            .collect()
    }
}

/// A quadrature estimate with its error proxy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadEstimate {
    pub value: f64,
    /// Midpoint rule on `n` strata.
    pub coarse: f64,
    /// Midpoint rule on `2n` strata.
    pub refined: f64,
    /// `|refined − coarse|`.
    pub error: f64,
    pub flags: Vec<Flag>,
}

const MAX_SUBDIVISION: u32 = 3;

fn blown(v: f64) -> bool {
    !v.is_finite() || v >= SENTINEL * 0.5
}

/// Weighted finite mass, weight of strata still blown up, and the largest
/// finite value seen, for one stratum `[a, b]`.
fn stratum<G>(g: &G, a: f64, b: f64, depth: u32) -> Result<(f64, f64, f64)>
where
    G: Fn(f64) -> Result<f64>,
{
    let v = g(0.5 * (a + b))?;
    if !blown(v) {
        return Ok((v * (b - a), 0.0, v));
    }
    if depth == MAX_SUBDIVISION {
        return Ok((0.0, b - a, f64::NEG_INFINITY));
    }
    let m = 0.5 * (a + b);
    let (s1, w1, m1) = stratum(g, a, m, depth + 1)?;
    let (s2, w2, m2) = stratum(g, m, b, depth + 1)?;
    Ok((s1 + s2, w1 + w2, m1.max(m2)))
}

fn midpoint_rule<G>(g: &G, n: usize) -> Result<(f64, bool)>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    let parts: Vec<(f64, f64, f64)> = (0..n)
        .into_par_iter()
        .map(|k| {
            let a = -0.5 + k as f64 / n as f64;
            stratum(g, a, a + 1.0 / n as f64, 0)
        })
        .collect::<Result<_>>()?;
    let mass: Vec<f64> = parts.iter().map(|p| p.0).collect();
    let blown_w: Vec<f64> = parts.iter().map(|p| p.1).collect();
    let cap = parts.iter().map(|p| p.2).fold(0.0, f64::max);
    let blown_total = linalg::pairwise_sum(&blown_w);
    Ok((linalg::pairwise_sum(&mass) + blown_total * cap, blown_total > 0.0))
}

/// `∫_{−1/2}^{1/2} g(s) ds` by stratified midpoints on `n` and `2n` strata.
///
/// A stratum whose midpoint hits the height sentinel is halved up to three
/// times; what is still infinite then counts at the largest finite value seen
/// and raises [`Flag::NonFinite`]. The two levels are combined by one
/// Richardson step `(4·refined − coarse)/3` when they agree to within half
/// their size; otherwise the refined value is returned as is.
pub fn quad_unit<G>(g: G, resolution: usize) -> Result<QuadEstimate>
where
    G: Fn(f64) -> Result<f64> + Sync,
{
    if resolution < 1 {
        return Err(Error::InvalidParameter("resolution must be positive".into()));
    }
    let (coarse, b1) = midpoint_rule(&g, resolution)?;
    let (refined, b2) = midpoint_rule(&g, 2 * resolution)?;
    let error = (refined - coarse).abs();
    let value = if error <= 0.5 * refined.abs().max(coarse.abs()) {
        (4.0 * refined - coarse) / 3.0
    } else {
        refined
    };
    let flags = if b1 || b2 { vec![Flag::NonFinite] } else { vec![] };
    Ok(QuadEstimate { value, coarse, refined, error, flags })
}

/// Whether quadrature nodes `1/(2·resolution)` apart still move `ξ_i` by
/// more than a few float spacings.
pub fn shifts_resolved(x: &XPrimePoint, i: usize, resolution: usize) -> bool {
    let step = (-(x.tau()[i] + x.tau_sum())).exp() / (2 * resolution) as f64;
    let ulp = (x.xi()[i].abs() * f64::EPSILON).max(f64::MIN_POSITIVE);
    step > 16.0 * ulp
}

/// `∫_{−1/2}^{1/2} f(a_{te_i}u_i(s)x) ds`. Raises
/// [`Flag::BelowFloatResolution`] when the nodes cannot move `ξ_i`.
pub fn quad_average_u<F>(f: F, x: &XPrimePoint, i: usize, t: f64, resolution: usize) -> Result<QuadEstimate>
where
    F: Fn(&XPrimePoint) -> Result<f64> + Sync,
{
    if resolution < 64 {
        return Err(Error::InvalidParameter("quadrature resolution must be >= 64".into()));
    }
    if i + 1 >= x.d() {
        return Err(Error::InvalidParameter("direction out of range".into()));
    }
    let a = DiagParam::along(x.d(), i, t);
    let mut q = quad_unit(|s| f(&x.act_horo_i(s, i).act_diag(&a)?), resolution)?;
    if !shifts_resolved(x, i, resolution) {
        q.flags.push(Flag::BelowFloatResolution);
    }
    Ok(q)
}

/// The 2D point `φ_i(x) = ā_{Στ}ū(ξ_i)` as a slice point with `d = 2`.
pub fn phi_point(x: &XPrimePoint, i: usize) -> Result<XPrimePoint> {
    XPrimePoint::new(vec![x.tau_sum()], vec![x.xi()[i]])
}

/// Evaluates the height of the given kind. For [`HeightKind::Ht`], `x` is a
/// 2D slice point and `i` must be 0.
pub fn eval_height(kind: HeightKind, x: &XPrimePoint, i: usize, params: &HeightParams, consts: &CalibratedConstants) -> Result<f64> {
    match kind {
        HeightKind::Ht => {
            if x.d() != 2 {
                return Err(Error::InvalidParameter("ht is evaluated on 2D points".into()));
            }
            Ok(phi_lambda1(x, 0)?.powf(-params.lambda))
        }
        HeightKind::BqAlpha => Ok(bq_alpha_slice(x, &[i], params)?.remove(0).value),
        HeightKind::AlphaPrime => alpha_prime(x, i, params.lambda),
        HeightKind::AlphaTilde => Ok(alpha_tilde(x, i, params, consts)?.value),
    }
}

fn percentile(values: &[f64], p: f64) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let rank = ((p * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

fn max_of(values: &[f64]) -> f64 {
    values.iter().cloned().fold(0.0, f64::max)
}

/// One calibration measurement: the input height and `(∫ − e^{−λt}·height)⁺`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcessSample {
    pub height: f64,
    pub integral: f64,
    pub error: f64,
    pub excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub constants: CalibratedConstants,
    pub sample: SampleSpec,
    pub resolution: usize,
    pub c_max: f64,
    pub c_p99: f64,
    pub c_ht_max: f64,
    pub c_ht_p99: f64,
    pub bq_samples: Vec<ExcessSample>,
    pub ht_samples: Vec<ExcessSample>,
}

/// Flags linear growth of the fitted constant with height: the top decile by
/// height spans at least 10× the median height and needs at least 4× the
/// constant of the rest.
fn check_stability(label: &str, samples: &[ExcessSample]) -> Result<()> {
    let mut s: Vec<&ExcessSample> = samples.iter().collect();
    s.sort_by(|a, b| a.height.total_cmp(&b.height));
    let cut = s.len() - (s.len() / 10).max(1);
    let (low, high) = s.split_at(cut);
    if low.is_empty() {
        return Ok(());
    }
    let median_h = low[low.len() / 2].height.max(1e-300);
    let top_h = high.iter().map(|e| e.height).fold(0.0, f64::max);
    let c_low = low.iter().map(|e| e.excess).fold(0.0, f64::max);
    let c_high = high.iter().map(|e| e.excess).fold(0.0, f64::max);
    if top_h >= 10.0 * median_h && c_high >= 4.0 * c_low.max(1e-12) {
        return Err(Error::CalibrationUnstable(format!(
            "{label}: constant {c_high:.4} on the top height decile (heights up to {top_h:.4}) vs {c_low:.4} below"
        )));
    }
    Ok(())
}

fn excess_sample(q: QuadEstimate, height: f64, contraction: f64) -> ExcessSample {
    ExcessSample { height, integral: q.value, error: q.error, excess: (q.value - contraction * height).max(0.0) }
}

/// Fits `C` (for `α`) and `C′` (for `ht_λ`), assembles `E101` and the
/// `D(h)` table. The fitted value is the 99th percentile; maxima are reported.
pub fn calibrate(params: &HeightParams, spec: &SampleSpec) -> Result<CalibrationReport> {
    params.validate()?;
    if spec.count < 100 {
        return Err(Error::InvalidParameter("calibration needs at least 100 sample points".into()));
    }
    let contraction = (-params.lambda * params.t).exp();
    if contraction >= 1.0 - 1e-9 {
        return Err(Error::InvalidParameter("e^{-lambda t} must be < 1; t is too small".into()));
    }
    let pts = spec.draw()?;
    let d = spec.d;
    let res = params.quad_resolution;
    let zero = CalibratedConstants::uncalibrated(params, d);
    let bq: Vec<ExcessSample> = pts
        .par_iter()
        .map(|(x, i)| {
            let h = eval_height(HeightKind::BqAlpha, x, *i, params, &zero)?;
            let q = quad_average_u(|y| eval_height(HeightKind::BqAlpha, y, *i, params, &zero), x, *i, params.t, res)?;
            Ok(excess_sample(q, h, contraction))
        })
        .collect::<Result<_>>()?;
    let ht: Vec<ExcessSample> = pts
        .par_iter()
        .map(|(x, i)| {
            let y = phi_point(x, *i)?;
            let h = eval_height(HeightKind::Ht, &y, 0, params, &zero)?;
            let q = quad_average_u(|z| eval_height(HeightKind::Ht, z, 0, params, &zero), &y, 0, params.t, res)?;
            Ok(excess_sample(q, h, contraction))
        })
        .collect::<Result<_>>()?;
    check_stability("alpha", &bq)?;
    check_stability("ht", &ht)?;
    let ex: Vec<f64> = bq.iter().map(|e| e.excess).collect();
    let ex_ht: Vec<f64> = ht.iter().map(|e| e.excess).collect();
    let (c, c_ht) = (percentile(&ex, 0.99), percentile(&ex_ht, 0.99));
    let mut constants = CalibratedConstants {
        lambda: params.lambda,
        t: params.t,
        epsilon: params.epsilon,
        c,
        c_ht,
        e101: CalibratedConstants::e101_formula(c, c_ht, params.epsilon, d),
        d_breakpoints: vec![],
    };
    constants.d_breakpoints = d_table(&pts, params, &constants)?;
    Ok(CalibrationReport {
        constants,
        sample: spec.clone(),
        resolution: res,
        c_max: max_of(&ex),
        c_p99: c,
        c_ht_max: max_of(&ex_ht),
        c_ht_p99: c_ht,
        bq_samples: bq,
        ht_samples: ht,
    })
}

/// Perturbations `η` of the unit ball of `U` on the grid `{−r, 0, r}^{d−1}`,
/// `r = (d−1)^{−1/2}`.
fn u_ball_grid(m: usize) -> Vec<Vec<f64>> {
    let r = 1.0 / (m as f64).sqrt();
    (0..3usize.pow(m as u32))
        .map(|mut c| {
            (0..m)
                .map(|_| {
                    let v = (c % 3) as f64 - 1.0;
                    c /= 3;
                    v * r
                })
                .collect()
        })
        .collect()
}

const D_SAFETY: f64 = 1.5;

/// `D(h)` at `h = 2^k`: 1.5 × the largest `α̃_i(u(η)x)` over sample points
/// with `α̃_i(x) ≤ h`, made monotone.
fn d_table(pts: &[(XPrimePoint, usize)], params: &HeightParams, consts: &CalibratedConstants) -> Result<Vec<(f64, f64)>> {
    let m = pts.first().map_or(1, |p| p.0.d() - 1);
    let grid = u_ball_grid(m);
    let pairs: Vec<Vec<(f64, f64)>> = pts
        .par_iter()
        .map(|(x, _)| {
            let base: Vec<f64> = alpha_tilde_all(x, params, consts)?.iter().map(|a| a.value).collect();
            let mut worst = base.clone();
            for eta in &grid {
                let y = x.act_horo(eta);
                for (w, a) in worst.iter_mut().zip(alpha_tilde_all(&y, params, consts)?) {
                    *w = w.max(a.value);
                }
            }
            Ok(base.into_iter().zip(worst).collect())
        })
        .collect::<Result<_>>()?;
    let pairs: Vec<(f64, f64)> = pairs.into_iter().flatten().collect();
    let top = pairs.iter().map(|p| p.0).fold(1.0, f64::max);
    let mut table = Vec::new();
    let mut h = 1.0;
    let mut running = 0.0f64;
    loop {
        let worst = pairs.iter().filter(|p| p.0 <= h).map(|p| p.1).fold(h, f64::max);
        running = running.max(D_SAFETY * worst);
        table.push((h, running));
        if h >= top {
            break;
        }
        h *= 2.0;
    }
    Ok(table)
}

/// Per-sample verdict of a contraction check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub input_height: f64,
    pub integral_estimate: f64,
    pub error: f64,
    pub bound: f64,
    pub pass: bool,
    pub regime: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    pub inequality: String,
    pub kind: HeightKind,
    pub sample: SampleSpec,
    pub samples: Vec<SampleResult>,
    pub pass_rate: f64,
    /// Counts per regime label.
    pub regimes: BTreeMap<String, usize>,
    pub fitted: BTreeMap<String, f64>,
    pub resolution: usize,
    pub flags: Vec<Flag>,
}

fn pass_rate(results: &[SampleResult]) -> f64 {
    if results.is_empty() {
        return 1.0;
    }
    results.iter().filter(|r| r.pass).count() as f64 / results.len() as f64
}

/// Checks the subharmonic inequality of the given kind on a fresh sample.
///
/// * `ht`: `∫ ≤ e^{−λt}ht + C′` on `φ_i(x)`;
/// * `bq_alpha`: `∫ ≤ e^{−λt}α + C`;
/// * `alpha_prime`: `∫ ≤ e^{−λt}α′ + C′κ_i`;
/// * `alpha_tilde`: `∫ ≤ 2e^{−λ²t}α̃` where `α̃ ≥ E101·e^t`, else `∫ ≤ E101·α̃`.
///
/// A sample passes when `integral ≤ bound + error`.
pub fn check_subharmonic(kind: HeightKind, params: &HeightParams, consts: &CalibratedConstants, spec: &SampleSpec) -> Result<ContractionReport> {
    params.validate()?;
    let pts = spec.draw()?;
    let (lam, t) = (params.lambda, params.t);
    let high = consts.e101 * t.exp();
    let results: Vec<(SampleResult, Vec<Flag>)> = pts
        .par_iter()
        .map(|(x, i)| {
            let (point, dir) = if kind == HeightKind::Ht { (phi_point(x, *i)?, 0) } else { (x.clone(), *i) };
            let h = eval_height(kind, &point, dir, params, consts)?;
            let q = quad_average_u(|y| eval_height(kind, y, dir, params, consts), &point, dir, t, params.quad_resolution)?;
            let (bound, regime) = match kind {
                HeightKind::Ht => ((-lam * t).exp() * h + consts.c_ht, "subharmonic"),
                HeightKind::BqAlpha => ((-lam * t).exp() * h + consts.c, "subharmonic"),
                HeightKind::AlphaPrime => ((-lam * t).exp() * h + consts.c_ht * x.kappa_i(*i), "subharmonic"),
                HeightKind::AlphaTilde if h >= high => (2.0 * (-lam * lam * t).exp() * h, "high_point"),
                HeightKind::AlphaTilde => (consts.e101 * h, "upper"),
            };
            let pass = q.value <= bound + q.error;
            let r = SampleResult { input_height: h, integral_estimate: q.value, error: q.error, bound, pass, regime: regime.into() };
            Ok((r, q.flags))
        })
        .collect::<Result<_>>()?;
    let mut flags: Vec<Flag> = results.iter().flat_map(|r| r.1.iter().cloned()).collect();
    flags.sort_by_key(|f| format!("{f:?}"));
    flags.dedup();
    let samples: Vec<SampleResult> = results.into_iter().map(|r| r.0).collect();
    let mut regimes = BTreeMap::new();
    for s in &samples {
        *regimes.entry(s.regime.clone()).or_insert(0) += 1;
    }
    let mut fitted = BTreeMap::new();
    fitted.insert("C".into(), consts.c);
    fitted.insert("C_ht".into(), consts.c_ht);
    fitted.insert("E101".into(), consts.e101);
    let inequality = match kind {
        HeightKind::Ht => "ht subharmonic",
        HeightKind::BqAlpha => "alpha subharmonic",
        HeightKind::AlphaPrime => "alpha_prime subharmonic with kappa_i scaling",
        HeightKind::AlphaTilde => "alpha_tilde upper bound and high-point contraction",
    };
    Ok(ContractionReport {
        inequality: inequality.into(),
        kind,
        sample: spec.clone(),
        pass_rate: pass_rate(&samples),
        samples,
        regimes,
        fitted,
        resolution: params.quad_resolution,
        flags,
    })
}

/// Perturbation groups for the log-Lipschitz checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LipGroup {
    /// Unit ball of the `SL₂(ℝ)` copy `H_i` acting on coordinates `(i, d)`.
    HBall,
    /// `a_σ u(η)` with `σ ≥ 0`, `‖σ‖ ≤ 1`, `‖η‖ ≤ 1`.
    APlusUBall,
    /// `a_{re_i}u_i(s)` with `0 ≤ r ≤ 1`, `|s| ≤ 1`.
    AiUiBall,
    /// `u_j(s)`, `j ≠ i`, with `s` covering the whole circle of `ξ_j`.
    UiPerp,
    Identity,
}

impl std::str::FromStr for LipGroup {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "h_ball" => Ok(Self::HBall),
            "a_plus_u_ball" => Ok(Self::APlusUBall),
            "ai_ui_ball" => Ok(Self::AiUiBall),
            "ui_perp" => Ok(Self::UiPerp),
            "identity" => Ok(Self::Identity),
            _ => Err(Error::InvalidParameter(format!("unknown perturbation group {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipschitzReport {
    pub kind: HeightKind,
    pub group: LipGroup,
    pub sample: SampleSpec,
    pub perturbations: usize,
    /// Per-sample `max |log f(gx) − log f(x)|`.
    pub per_sample: Vec<f64>,
    pub max_log_ratio: f64,
    /// `exp` of the 99th percentile of `per_sample`.
    pub fitted_constant: f64,
    /// `exp(max_log_ratio)`.
    pub fitted_constant_max: f64,
    /// Samples exceeding the asserted bound, where there is one.
    pub violations: usize,
    pub asserted_bound: Option<String>,
    pub pass: bool,
}

/// `exp` of a traceless 2×2 matrix `[[a, b], [c, −a]]`.
fn sl2_exp(a: f64, b: f64, c: f64) -> [[f64; 2]; 2] {
    let disc = a * a + b * c;
    let (ch, sh) = if disc > 0.0 {
        let r = disc.sqrt();
        (r.cosh(), r.sinh() / r)
    } else if disc < 0.0 {
        let r = (-disc).sqrt();
        (r.cos(), r.sin() / r)
    } else {
        (1.0, 1.0)
    };
    [[ch + sh * a, sh * b], [sh * c, ch - sh * a]]
}

fn embed_sl2(d: usize, i: usize, g: [[f64; 2]; 2]) -> Mat {
    let mut m: Mat = (0..d).map(|r| (0..d).map(|c| f64::from(u8::from(r == c))).collect()).collect();
    let idx = [i, d - 1];
    for (r, &ir) in idx.iter().enumerate() {
        for (c, &ic) in idx.iter().enumerate() {
            m[ir][ic] = g[r][c];
        }
    }
    m
}

fn unit_vector<R: Rng>(rng: &mut R, m: usize, radius: f64) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..=1.0)).collect();
        let n = linalg::norm2(&v).sqrt();
        if n <= 1.0 {
            return v.into_iter().map(|x| x * radius).collect();
        }
    }
}

enum Perturbed {
    Point(XPrimePoint),
    Lattice(UnimodularLattice),
}

fn perturb<R: Rng>(rng: &mut R, group: LipGroup, x: &XPrimePoint, i: usize) -> Result<Perturbed> {
    let d = x.d();
    let m = d - 1;
    Ok(match group {
        LipGroup::Identity => Perturbed::Point(x.clone()),
        LipGroup::HBall => {
            let v = unit_vector(rng, 3, 1.0);
            let g = embed_sl2(d, i, sl2_exp(v[0], v[1], v[2]));
            Perturbed::Lattice(slice_lattice(x.tau(), x.xi())?.transformed(&g)?)
        }
        LipGroup::APlusUBall => {
            let sigma: Vec<f64> = unit_vector(rng, m, 1.0).into_iter().map(f64::abs).collect();
            let eta = unit_vector(rng, m, 1.0);
            Perturbed::Point(x.act_horo(&eta).act_diag(&DiagParam::new(sigma)?)?)
        }
        LipGroup::AiUiBall => {
            let r = rng.gen_range(0.0..=1.0);
            let s = rng.gen_range(-1.0..=1.0);
            Perturbed::Point(x.act_horo_i(s, i).act_diag(&DiagParam::along(d, i, r))?)
        }
        LipGroup::UiPerp => {
            if m < 2 {
                return Err(Error::InvalidParameter("U_i-perp is trivial for d = 2".into()));
            }
            let mut j = rng.gen_range(0..m - 1);
            if j >= i {
                j += 1;
            }
            let s = rng.gen_range(-0.5..0.5) * (x.tau()[j] + x.tau_sum()).exp();
            Perturbed::Point(x.act_horo_i(s, j))
        }
    })
}

fn eval_perturbed(kind: HeightKind, p: &Perturbed, i: usize, params: &HeightParams, consts: &CalibratedConstants) -> Result<f64> {
    match p {
        Perturbed::Point(y) => eval_height(kind, y, i, params, consts),
        Perturbed::Lattice(l) => match kind {
            HeightKind::BqAlpha => Ok(bq_alpha(l, i, params)?.value),
            _ => Err(Error::InvalidParameter("H_i perturbations leave the slice; only bq_alpha is defined there".into())),
        },
    }
}

/// Largest `|log f(gx) − log f(x)|` over seeded perturbations `g` of the
/// group. Asserted bounds:
/// * `alpha_prime` under `U_i^⊥`: at most `1e-9` (exact invariance);
/// * `alpha_tilde` under `U_i^⊥`: at most `log(E101·κ_i(x)²)`;
/// * any kind under the identity: exactly 0.
///
/// Other combinations only report the fitted constant.
pub fn check_log_lipschitz(
    kind: HeightKind,
    group: LipGroup,
    params: &HeightParams,
    consts: &CalibratedConstants,
    spec: &SampleSpec,
    perturbations: usize,
) -> Result<LipschitzReport> {
    if kind == HeightKind::Ht {
        return Err(Error::InvalidParameter("log-Lipschitz checks take slice heights".into()));
    }
    let pts = spec.draw()?;
    let rows: Vec<(f64, bool)> = pts
        .par_iter()
        .enumerate()
        .map(|(k, (x, i))| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)));
            let base = eval_height(kind, x, *i, params, consts)?;
            let mut worst = 0.0f64;
            for _ in 0..perturbations.max(1) {
                let p = perturb(&mut rng, group, x, *i)?;
                let v = eval_perturbed(kind, &p, *i, params, consts)?;
                let r = if base > 0.0 && v > 0.0 {
                    (v.ln() - base.ln()).abs()
                } else if base == v {
                    0.0
                } else {
                    f64::INFINITY
                };
                worst = worst.max(r);
            }
            let ok = match (kind, group) {
                (_, LipGroup::Identity) => worst == 0.0,
                (HeightKind::AlphaPrime, LipGroup::UiPerp) => worst <= 1e-9,
                (HeightKind::AlphaTilde, LipGroup::UiPerp) => worst <= (consts.e101 * x.kappa_i(*i).powi(2)).ln() + 1e-12,
                _ => true,
            };
            Ok((worst, ok))
        })
        .collect::<Result<_>>()?;
    let per_sample: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let violations = rows.iter().filter(|r| !r.1).count();
    let asserted_bound = match (kind, group) {
        (_, LipGroup::Identity) => Some("log ratio = 0".to_string()),
        (HeightKind::AlphaPrime, LipGroup::UiPerp) => Some("log ratio <= 1e-9".to_string()),
        (HeightKind::AlphaTilde, LipGroup::UiPerp) => Some("ratio <= E101*kappa_i^2".to_string()),
        _ => None,
    };
    let max_log_ratio = per_sample.iter().cloned().fold(0.0, f64::max);
    Ok(LipschitzReport {
        kind,
        group,
        sample: spec.clone(),
        perturbations,
        fitted_constant: percentile(&per_sample, 0.99).exp(),
        fitted_constant_max: max_log_ratio.exp(),
        per_sample,
        max_log_ratio,
        violations,
        asserted_bound,
        pass: violations == 0,
    })
}

/// Constants that the inequalities only assert to exist, fitted on a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FittedConstants {
    /// Log-Lipschitz constant of `α′` along the unit ball of `A⁺U`.
    pub c4: f64,
    pub c4_max: f64,
    /// Log-Lipschitz constant of `α̃` along the unit ball of `A_i⁺U_i`.
    pub c5: f64,
    pub c5_max: f64,
    /// `1 + log C₅`.
    pub c6: f64,
    /// Count constant for `ℰ` and `ℰ̂` against `δ^d·#𝒟_N` (1% margin).
    pub c7: f64,
    /// `2d(d−1)·max{2, log C₄}`.
    pub c11: f64,
    /// Largest `c` with `α̃_i(x) ≥ c·λ₁(x)^{−λ}` on sample points with `λ₁ ≤ 0.2`.
    pub c_inj: Option<f64>,
}

/// `C₇ = 1.01 × max` over `N ∈ ns` and all `i` of the two-sided ratios
/// `#ℰ/(δ^d#𝒟)` and `#ℰ̂/(δ^{d−1}#𝒟)`. Empty sets are skipped.
pub fn fit_c7(ns: &[usize], delta: f64, d: usize, t: f64) -> Result<f64> {
    let mut worst = 1.0f64;
    for &n in ns {
        let dn = make_d_n(n, t, d)?.len() as f64;
        for i in 0..d - 1 {
            let e = make_e(n, delta, i, t, d)?.len() as f64;
            let eh = make_ehat(n, delta, i, t, d)?.len() as f64;
            for (count, scale) in [(e, delta.powi(d as i32)), (eh, delta.powi(d as i32 - 1))] {
                if count > 0.0 {
                    let r = count / (scale * dn);
                    worst = worst.max(r).max(1.0 / r);
                }
            }
        }
    }
    Ok(1.01 * worst)
}

/// Fits `C₄, C₅, C₆, C₁₁`, the injectivity constant and `C₇`.
pub fn fit_constants(
    params: &HeightParams,
    consts: &CalibratedConstants,
    spec: &SampleSpec,
    perturbations: usize,
    c7_ns: &[usize],
    delta: f64,
) -> Result<FittedConstants> {
    let c4r = check_log_lipschitz(HeightKind::AlphaPrime, LipGroup::APlusUBall, params, consts, spec, perturbations)?;
    let c5r = check_log_lipschitz(HeightKind::AlphaTilde, LipGroup::AiUiBall, params, consts, spec, perturbations)?;
    let d = spec.d;
    let c4 = c4r.fitted_constant.max(1.0);
    let c5 = c5r.fitted_constant.max(1.0);
    let pts = spec.draw()?;
    let inj: Vec<f64> = pts
        .par_iter()
        .map(|(x, _)| {
            let l1 = lambda1(&slice_lattice(x.tau(), x.xi())?)?;
            if l1 > 0.2 {
                return Ok(f64::INFINITY);
            }
            let low = alpha_tilde_all(x, params, consts)?.iter().map(|a| a.value).fold(f64::INFINITY, f64::min);
            Ok(low * l1.powf(params.lambda))
        })
        .collect::<Result<_>>()?;
    let c_inj = inj.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(FittedConstants {
        c4,
        c4_max: c4r.fitted_constant_max.max(1.0),
        c5,
        c5_max: c5r.fitted_constant_max.max(1.0),
        c6: 1.0 + c5.ln(),
        c7: fit_c7(c7_ns, delta, d, params.t)?,
        c11: 2.0 * (d * (d - 1)) as f64 * c4.ln().max(2.0),
        c_inj: c_inj.is_finite().then_some(c_inj),
    })
}

/// One sample of the β contraction check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaSample {
    pub direction: usize,
    pub alpha_tilde: f64,
    pub integral: f64,
    pub error: f64,
    /// `(1/(Nt))·log(∫β / α̃_i(x))`; `None` when vacuous.
    pub rate: Option<f64>,
    pub vacuous: bool,
    /// The horocycle steps were below float resolution; excluded from rates.
    pub unresolved: bool,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetaReport {
    pub n: usize,
    pub delta: f64,
    pub h: f64,
    pub c5: f64,
    pub c6: f64,
    /// The additive slack used in the verdict.
    pub slack: f64,
    /// `log(8C₅)/t`, the slack the contraction inequality itself carries.
    pub inequality_slack: f64,
    /// `−λ² + C₆δ + slack`.
    pub rate_bound: f64,
    pub samples: Vec<BetaSample>,
    pub nonvacuous: usize,
    /// Fraction of resolved nonvacuous samples that pass.
    pub pass_rate: f64,
    pub flags: Vec<Flag>,
}

/// `β_{N,δ,i,h}` along the orbit of `x`, stopping at the first miss that
/// makes the count unreachable.
fn beta_lazy(x: &XPrimePoint, n: usize, delta: f64, i: usize, h: f64, params: &HeightParams, consts: &CalibratedConstants) -> Result<f64> {
    let allowed_misses = n as f64 - ((1.0 - delta) * n as f64 - 1e-12);
    let mut misses = 0usize;
    let mut last = 0.0;
    for j in 1..=n {
        let y = x.act_diag(&DiagParam::along(x.d(), i, j as f64 * params.t))?;
        last = alpha_tilde(&y, i, params, consts)?.value;
        if last < h {
            misses += 1;
            if misses as f64 > allowed_misses {
                return Ok(0.0);
            }
        }
    }
    Ok(last)
}

/// Empirical contraction rate of `∫β_{N,δ,i,h}(u_i(s)x) ds` against `α̃_i(x)`.
/// Samples whose horocycle steps are below float resolution are reported
/// with [`Flag::BelowFloatResolution`] and left out of the pass rate.
/// A nonvacuous sample passes when `rate ≤ −λ² + C₆δ + slack`; with
/// `slack = None` the inequality's own `log(8C₅)/t` is used. Samples whose β
/// vanishes on every quadrature node are vacuous and carry
/// [`Flag::DegenerateSupport`].
#[allow(clippy::too_many_arguments)]
pub fn check_beta_contraction(
    params: &HeightParams,
    consts: &CalibratedConstants,
    points: &[(XPrimePoint, usize)],
    n: usize,
    delta: f64,
    h: f64,
    c5: f64,
    c6: f64,
    slack: Option<f64>,
) -> Result<BetaReport> {
    params.validate()?;
    let t = params.t;
    if h < consts.e101 * t.exp() {
        return Err(Error::InvalidParameter("h must be at least E101*e^t".into()));
    }
    if n == 0 || !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter("need N >= 1 and 0 < delta < 1".into()));
    }
    let inequality_slack = (8.0 * c5).ln() / t;
    let slack = slack.unwrap_or(inequality_slack);
    let lam = params.lambda;
    let rate_bound = -lam * lam + c6 * delta + slack;
    let samples: Vec<BetaSample> = points
        .iter()
        .map(|(x, i)| {
            let base = alpha_tilde(x, *i, params, consts)?.value;
            let unresolved = !shifts_resolved(x, *i, params.quad_resolution);
            let q = quad_unit(|s| beta_lazy(&x.act_horo_i(s, *i), n, delta, *i, h, params, consts), params.quad_resolution)?;
            let vacuous = q.coarse == 0.0 && q.refined == 0.0;
            let rate = (!vacuous).then(|| (q.value.max(f64::MIN_POSITIVE) / base).ln() / (n as f64 * t));
            let pass = unresolved || rate.is_none_or(|r| r <= rate_bound);
            Ok(BetaSample { direction: *i, alpha_tilde: base, integral: q.value, error: q.error, rate, vacuous, unresolved, pass })
        })
        .collect::<Result<_>>()?;
    let live: Vec<&BetaSample> = samples.iter().filter(|s| !s.vacuous && !s.unresolved).collect();
    let nonvacuous = live.len();
    let pass_rate = if live.is_empty() { 1.0 } else { live.iter().filter(|s| s.pass).count() as f64 / nonvacuous as f64 };
    let mut flags = vec![];
    if samples.iter().any(|s| s.vacuous) {
        flags.push(Flag::DegenerateSupport);
    }
    if samples.iter().any(|s| s.unresolved) {
        flags.push(Flag::BelowFloatResolution);
    }
    Ok(BetaReport { n, delta, h, c5, c6, slack, inequality_slack, rate_bound, samples, nonvacuous, pass_rate, flags })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsiReport {
    pub n: usize,
    pub delta: f64,
    pub h: f64,
    pub grid_resolution: usize,
    /// `∫_{[−1/2,1/2]^{d−1}} ψ_{N,δ,h}(u(ξ)x) dξ` by the midpoint rule.
    pub integral: f64,
    /// `M(x) = ∏_i max{sup_ξ α̃_i(u(ξ)x), E101·e^t}`, sup over the grid.
    pub m_x: f64,
    /// `E101·e^{C₁₁Nt}·M(x)`.
    pub trivial_bound: f64,
    pub pass: bool,
    /// `∫ψ_{2N} / ∫ψ_N` when requested and `∫ψ_N > 0`.
    pub doubling_ratio: Option<f64>,
    pub flags: Vec<Flag>,
}

fn grid_points(m: usize, res: usize) -> Vec<Vec<f64>> {
    (0..res.pow(m as u32))
        .map(|mut c| {
            let mut v = vec![0.0; m];
            for slot in v.iter_mut().rev() {
                *slot = -0.5 + ((c % res) as f64 + 0.5) / res as f64;
                c /= res;
            }
            v
        })
        .collect()
}

fn psi_integral(
    x: &XPrimePoint,
    n: usize,
    delta: f64,
    h: f64,
    params: &HeightParams,
    consts: &CalibratedConstants,
    c7: f64,
    grid: &[Vec<f64>],
) -> Result<(f64, Vec<f64>, Vec<Flag>)> {
    let d = x.d();
    let dn = make_d_n(n, params.t, d)?;
    let rows: Vec<(f64, Vec<f64>, Vec<Flag>)> = grid
        .par_iter()
        .map(|eta| {
            let y = x.act_horo(eta);
            let table = tilde_table(&y, &dn, params, consts)?;
            let v = psi_from_table(&dn, &table, delta, h, c7, d)?;
            let sup: Vec<f64> = alpha_tilde_all(&y, params, consts)?.iter().map(|a| a.value).collect();
            Ok((v.value, sup, v.flags))
        })
        .collect::<Result<_>>()?;
    let vals: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut sup = vec![0.0f64; d - 1];
    for r in &rows {
        for (s, v) in sup.iter_mut().zip(&r.1) {
            *s = s.max(*v);
        }
    }
    let mut flags: Vec<Flag> = rows.iter().flat_map(|r| r.2.iter().cloned()).collect();
    flags.sort_by_key(|f| format!("{f:?}"));
    flags.dedup();
    Ok((linalg::pairwise_sum(&vals) / grid.len() as f64, sup, flags))
}

/// The trivial bound for `ψ` and, optionally, the doubling ratio
/// `∫ψ_{2N}/∫ψ_N` whose sign of `log` is the contraction trend.
#[allow(clippy::too_many_arguments)]
pub fn check_psi_bounds(
    params: &HeightParams,
    consts: &CalibratedConstants,
    x: &XPrimePoint,
    n: usize,
    delta: f64,
    h: f64,
    c7: f64,
    c11: f64,
    grid_resolution: usize,
    inductive: bool,
) -> Result<PsiReport> {
    if inductive && n > 4 {
        return Err(Error::InvalidParameter("the doubling check takes N <= 4".into()));
    }
    if grid_resolution == 0 || !(delta > 0.0 && delta < 1.0) || h < 1.0 {
        return Err(Error::InvalidParameter("need grid resolution >= 1, 0 < delta < 1, h >= 1".into()));
    }
    let grid = grid_points(x.d() - 1, grid_resolution);
    let (integral, sup, mut flags) = psi_integral(x, n, delta, h, params, consts, c7, &grid)?;
    let floor = consts.e101 * params.t.exp();
    let m_x: f64 = sup.iter().map(|s| s.max(floor)).product();
    let trivial_bound = consts.e101 * (c11 * n as f64 * params.t).exp() * m_x;
    let doubling_ratio = if inductive && integral > 0.0 {
        let (i2, _, f2) = psi_integral(x, 2 * n, delta, h, params, consts, c7, &grid)?;
        flags.extend(f2);
        flags.sort_by_key(|f| format!("{f:?}"));
        flags.dedup();
        Some(i2 / integral)
    } else {
        None
    };
    Ok(PsiReport { n, delta, h, grid_resolution, integral, m_x, trivial_bound, pass: integral <= trivial_bound, doubling_ratio, flags })
}

/// One row of the covering series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringRow {
    pub n: usize,
    /// `e^{−2dNt}`.
    pub resolution: f64,
    pub cells: usize,
    pub covering_count: usize,
    /// `log M / (2dNt)`, or 0 when `M = 0`.
    pub slope: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringSeries {
    pub delta: f64,
    pub h: f64,
    pub t: f64,
    pub c7: f64,
    pub rows: Vec<CoveringRow>,
}

/// Default cap on the number of covering cells.
pub const COVERING_BUDGET: usize = 10_000_000;

/// Whether `#Ω(N,h,y)/#𝒟_N ≥ 1 − δ^d/(4C₇)`, stopping once the count is
/// decided.
fn omega_dense(y: &XPrimePoint, dn: &TauGrid, h: f64, gate: f64, params: &HeightParams, consts: &CalibratedConstants) -> Result<bool> {
    let total = dn.len();
    let need = (gate * total as f64 - 1e-9).ceil().max(0.0) as usize;
    let allowed_misses = total - need.min(total);
    let (mut hits, mut misses) = (0usize, 0usize);
    for tau in dn.points() {
        let z = y.act_diag(&DiagParam::new(tau)?)?;
        let low = alpha_tilde_all(&z, params, consts)?.iter().map(|a| a.value).fold(f64::INFINITY, f64::min);
        if low >= h {
            hits += 1;
            if hits >= need {
                return Ok(true);
            }
        } else {
            misses += 1;
            if misses > allowed_misses {
                return Ok(false);
            }
        }
    }
    Ok(hits >= need)
}

/// Covering counts of `{ξ : u(ξ)x stays outside K_h on most of 𝒟_N}`.
///
/// For each `N`, `[−1/2, 1/2]^{d−1}` is cut into cells of side
/// `2e^{−2dNt}` and a cell is counted when its centre passes the
/// `Ω`-density gate. The grid uses the same `t` as the τ-grid.
#[allow(clippy::too_many_arguments)]
pub fn covering_counts(
    x_base: &XPrimePoint,
    n_list: &[usize],
    delta: f64,
    h: f64,
    t: f64,
    params: &HeightParams,
    consts: &CalibratedConstants,
    c7: f64,
    budget: usize,
) -> Result<CoveringSeries> {
    if !(delta > 0.0 && delta < 1.0) || h < 1.0 || !(t > 0.0) || c7 <= 0.0 {
        return Err(Error::InvalidParameter("need 0 < delta < 1, h >= 1, t > 0, C7 > 0".into()));
    }
    let d = x_base.d();
    let m = d - 1;
    let mut ns = n_list.to_vec();
    ns.sort_unstable();
    ns.dedup();
    let gate = 1.0 - delta.powi(d as i32) / (4.0 * c7);
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        let scale = 2.0 * (d * n) as f64 * t;
        let resolution = (-scale).exp();
        let side = (1.0 / (2.0 * resolution)).ceil();
        let cells_f = side.powi(m as i32);
        if !(cells_f <= budget as f64) {
            return Err(Error::GridBudgetExceeded { cells: cells_f, budget: budget as f64 });
        }
        let side = side as usize;
        let dn = make_d_n(n, t, d)?;
        let members: Vec<bool> = grid_points(m, side)
            .par_iter()
            .map(|eta| omega_dense(&x_base.act_horo(eta), &dn, h, gate, params, consts))
            .collect::<Result<_>>()?;
        let count = members.iter().filter(|&&b| b).count();
        let slope = if count > 0 { (count as f64).ln() / scale } else { 0.0 };
        rows.push(CoveringRow { n, resolution, cells: side.pow(m as u32), covering_count: count, slope });
    }
    Ok(CoveringSeries { delta, h, t, c7, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrand_is_exact() {
        let q = quad_unit(|_| Ok(1.0), 64).unwrap();
        assert_eq!((q.value, q.error), (1.0, 0.0));
    }

    #[test]
    fn smooth_integrand_converges() {
        let q = quad_unit(|s| Ok(s * s), 64).unwrap();
        assert!((q.value - 1.0 / 12.0).abs() < 1e-12, "{}", q.value);
    }

    #[test]
    fn sentinel_strata_are_subdivided_and_flagged() {
        let q = quad_unit(|s| Ok(if s.abs() < 1e-6 { SENTINEL } else { 1.0 }), 64).unwrap();
        assert!(q.flags.is_empty());
        assert!((q.value - 1.0).abs() < 1e-12);
        let q = quad_unit(|s| Ok(if s.abs() < 0.05 { SENTINEL } else { 2.0 }), 64).unwrap();
        assert_eq!(q.flags, vec![Flag::NonFinite]);
        assert!((q.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn quad_average_u_rejects_low_resolution() {
        let x = XPrimePoint::new(vec![1.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(quad_average_u(|_| Ok(1.0), &x, 0, 4.0, 32).is_err());
        let q = quad_average_u(|_| Ok(1.0), &x, 0, 4.0, 64).unwrap();
        assert_eq!(q.value, 1.0);
    }

    #[test]
    fn sl2_exp_has_unit_determinant() {
        for (a, b, c) in [(0.3, 0.2, -0.7), (0.5, 0.5, 0.5), (0.0, 0.0, 0.0), (0.1, -0.4, 0.9)] {
            let g = sl2_exp(a, b, c);
            assert!((g[0][0] * g[1][1] - g[0][1] * g[1][0] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_are_deterministic() {
        let s = SampleSpec::new(20, 7, 3, (0.5, 2.0)).with_cusp_fraction(0.5);
        assert_eq!(s.draw().unwrap(), s.draw().unwrap());
    }

    #[test]
    fn calibration_rejects_small_samples() {
        let p = HeightParams::default();
        assert!(matches!(calibrate(&p, &SampleSpec::new(50, 1, 3, (0.5, 2.0))), Err(Error::InvalidParameter(_))));
        let tiny = HeightParams { t: 1e-12, ..p };
        assert!(matches!(calibrate(&tiny, &SampleSpec::new(100, 1, 3, (0.5, 2.0))), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn c7_covers_counts() {
        let c7 = fit_c7(&[20, 30], 0.1, 3, 1.0).unwrap();
        assert!(c7 > 1.0 && c7.is_finite());
    }

    #[test]
    fn covering_with_h_one_is_full() {
        let p = HeightParams::default();
        let consts = CalibratedConstants::uncalibrated(&p, 3);
        let x = XPrimePoint::new(vec![0.5, 0.5], vec![0.1, 0.2]).unwrap();
        let s = covering_counts(&x, &[1], 0.3, 1.0, 0.2, &p, &consts, 2.0, COVERING_BUDGET).unwrap();
        let r = &s.rows[0];
        assert_eq!(r.covering_count, r.cells);
        let h = covering_counts(&x, &[1], 0.3, 1e9, 0.2, &p, &consts, 2.0, COVERING_BUDGET).unwrap();
        assert_eq!((h.rows[0].covering_count, h.rows[0].slope), (0, 0.0));
    }

    #[test]
    fn covering_budget_is_enforced() {
        let p = HeightParams::default();
        let consts = CalibratedConstants::uncalibrated(&p, 3);
        let x = XPrimePoint::new(vec![0.5, 0.5], vec![0.1, 0.2]).unwrap();
        let e = covering_counts(&x, &[2], 0.3, 2.0, 4.0, &p, &consts, 2.0, COVERING_BUDGET);
        assert!(matches!(e, Err(Error::GridBudgetExceeded { .. })));
    }
}

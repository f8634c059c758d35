//! Lattice primitives for small dimension (d ≤ 6).
//!
//! Bases are stored by columns. Every enumeration runs LLL (δ = 0.99) first
//! and then a Fincke–Pohst descent bounded by the Gram–Schmidt norms, so the
//! results are complete inside the requested ball. Coefficient vectors are
//! always reported with respect to the caller's original basis.

use crate::error::{Error, Flag, Result};
use crate::linalg::{self, Mat};
use num_integer::Integer;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Default cap on the number of vectors an enumeration may return.
pub const DEFAULT_ENUM_CAP: usize = 1_000_000;
/// Lovász constant for the LLL preconditioner.
pub const LLL_DELTA: f64 = 0.99;
const UNIMODULAR_TOL: f64 = 1e-9;
const RADIUS_SLACK: f64 = 1e-10;

/// Which norm a ball test uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum NormKind {
    #[default]
    Euclidean,
    Sup,
}

impl NormKind {
    pub fn of(self, v: &[f64]) -> f64 {
        match self {
            NormKind::Euclidean => linalg::norm2(v).sqrt(),
            NormKind::Sup => linalg::sup_norm(v),
        }
    }
}

/// A covolume-one lattice `basis · ℤ^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnimodularLattice {
    cols: Vec<Vec<f64>>,
}

impl UnimodularLattice {
    /// Builds a lattice from basis columns, checking `|det − 1|` against
    /// 1e-9 scaled by the Hadamard bound of the basis.
    pub fn from_columns(cols: Vec<Vec<f64>>) -> Result<Self> {
        let d = cols.len();
        if d < 2 || cols.iter().any(|c| c.len() != d) {
            return Err(Error::InvalidParameter(format!(
                "basis must be square with d >= 2, got {d} columns"
            )));
        }
        if cols.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::DegenerateBasis);
        }
        let det = linalg::det(&linalg::transpose(&cols));
        let hadamard: f64 = cols.iter().map(|c| linalg::norm2(c).sqrt()).product();
        if det.abs() <= 1e-14 * hadamard.max(1.0) {
            return Err(Error::DegenerateBasis);
        }
        if (det - 1.0).abs() > UNIMODULAR_TOL * hadamard.max(1.0) {
            return Err(Error::NotUnimodular(det));
        }
        Ok(Self { cols })
    }

    /// Builds from a row-major matrix whose columns are the basis.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        Self::from_columns(linalg::transpose(&rows.to_vec()))
    }

    /// Rescales a nonsingular basis to determinant one, flipping the first
    /// column if needed.
    pub fn normalized(mut cols: Vec<Vec<f64>>) -> Result<Self> {
        let d = cols.len();
        let det = linalg::det(&linalg::transpose(&cols));
        if !det.is_finite() || det == 0.0 {
            return Err(Error::DegenerateBasis);
        }
        let s = det.abs().powf(-1.0 / d as f64);
        for c in cols.iter_mut() {
            for x in c.iter_mut() {
                *x *= s;
            }
        }
        if det < 0.0 {
            for x in cols[0].iter_mut() {
                *x = -*x;
            }
        }
        Self::from_columns(cols)
    }

    /// Wraps columns already known to span a covolume-one lattice.
    pub(crate) fn from_columns_unchecked(cols: Vec<Vec<f64>>) -> Self {
        Self { cols }
    }

    pub fn identity(d: usize) -> Self {
        let cols = (0..d)
            .map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        Self { cols }
    }

    pub fn dim(&self) -> usize {
        self.cols.len()
    }

    pub fn columns(&self) -> &[Vec<f64>] {
        &self.cols
    }

    /// Row-major copy of the basis matrix.
    pub fn matrix(&self) -> Mat {
        linalg::transpose(&self.cols)
    }

    pub fn det(&self) -> f64 {
        linalg::det(&self.matrix())
    }

    /// The lattice vector `basis · m`.
    pub fn vector(&self, m: &[i64]) -> Vec<f64> {
        let d = self.dim();
        let mut v = vec![0.0; d];
        for (c, &k) in self.cols.iter().zip(m) {
            if k != 0 {
                for i in 0..d {
                    v[i] += c[i] * k as f64;
                }
            }
        }
        v
    }

    /// Left action `g · L` for a square matrix `g` (row-major).
    pub fn transformed(&self, g: &Mat) -> Result<Self> {
        let cols = self.cols.iter().map(|c| linalg::mat_vec(g, c)).collect();
        Self::from_columns(cols)
    }

    /// The dual lattice, with basis `B^{-T}`.
    pub fn dual(&self) -> Result<Self> {
        let inv = linalg::inverse(&self.matrix()).ok_or(Error::DegenerateBasis)?;
        // Columns of B^{-T} are the rows of B^{-1}.
        Ok(Self { cols: inv })
    }
}

/// LLL output: reduced columns `b_j = B·u_j` with Gram–Schmidt data.
#[derive(Clone, Debug)]
pub(crate) struct Reduced {
    pub b: Vec<Vec<f64>>,
    pub u: Vec<Vec<i64>>,
    pub mu: Mat,
    pub bstar2: Vec<f64>,
}

pub(crate) fn gram_schmidt(b: &[Vec<f64>]) -> (Mat, Vec<f64>) {
    let n = b.len();
    let mut mu = vec![vec![0.0; n]; n];
    let mut bstar: Vec<Vec<f64>> = Vec::with_capacity(n);
    let mut bstar2 = vec![0.0; n];
    for i in 0..n {
        let mut v = b[i].clone();
        for j in 0..i {
            mu[i][j] = linalg::dot(&b[i], &bstar[j]) / bstar2[j];
            for (vk, bk) in v.iter_mut().zip(&bstar[j]) {
                *vk -= mu[i][j] * bk;
            }
        }
        bstar2[i] = linalg::norm2(&v);
        mu[i][i] = 1.0;
        bstar.push(v);
    }
    (mu, bstar2)
}

/// Size of `μ_kj` below which the float Gram–Schmidt data cannot tell it
/// from zero: coordinates carry relative error about `1e-16`.
pub(crate) fn mu_noise(bk: &[f64], bstar2_j: f64) -> f64 {
    1e-12 * (linalg::norm2(bk) / bstar2_j).sqrt()
}

/// LLL reduction with Lovász constant `delta`, tracking the unimodular transform.
pub(crate) fn lll(l: &UnimodularLattice, delta: f64) -> Result<Reduced> {
    let n = l.dim();
    let mut b = l.cols.clone();
    let mut u: Vec<Vec<i64>> = (0..n)
        .map(|j| (0..n).map(|i| i64::from(i == j)).collect())
        .collect();
    let (mut mu, mut bstar2) = gram_schmidt(&b);
    let mut k = 1;
    let mut iters = 0usize;
    while k < n {
        iters += 1;
        if iters > 100_000 {
            return Err(Error::DegenerateBasis);
        }
        for j in (0..k).rev() {
            let q = mu[k][j].round();
            if q != 0.0 && mu[k][j].abs() > mu_noise(&b[k], bstar2[j]) {
                if q.abs() > 1e15 {
                    return Err(Error::DegenerateBasis);
                }
                let qi = q as i64;
                for t in 0..n {
                    b[k][t] -= q * b[j][t];
                    u[k][t] = qi
                        .checked_mul(u[j][t])
                        .and_then(|p| u[k][t].checked_sub(p))
                        .ok_or(Error::DegenerateBasis)?;
                }
                for l2 in 0..=j {
                    mu[k][l2] -= q * mu[j][l2];
                }
            }
        }
        if bstar2[k] >= (delta - mu[k][k - 1] * mu[k][k - 1]) * bstar2[k - 1] {
            k += 1;
        } else {
            b.swap(k, k - 1);
            u.swap(k, k - 1);
            let gs = gram_schmidt(&b);
            mu = gs.0;
            bstar2 = gs.1;
            k = (k - 1).max(1);
        }
    }
    // Refresh GS data after the last size reduction.
    let (mu, bstar2) = gram_schmidt(&b);
    if bstar2.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::DegenerateBasis);
    }
    Ok(Reduced { b, u, mu, bstar2 })
}

/// Fincke–Pohst descent over `y ∈ ℤ^n` with `‖Σ (y_j − c_j) b_j‖² ≤ r2`.
/// Calls `emit(y)` for each hit; aborts once more than `cap` hits occur.
fn fincke_pohst(
    red: &Reduced,
    center: &[f64],
    r2: f64,
    cap: usize,
    emit: &mut dyn FnMut(&[i64]),
) -> Result<()> {
    let n = red.b.len();
    let mut y = vec![0i64; n];
    let mut hits = 0usize;
    let mut nodes = 0usize;
    let node_cap = cap.saturating_mul(64).max(1 << 20);

    #[allow(clippy::too_many_arguments)]
    fn rec(
        j: usize,
        partial: f64,
        red: &Reduced,
        center: &[f64],
        r2: f64,
        y: &mut [i64],
        hits: &mut usize,
        nodes: &mut usize,
        cap: usize,
        node_cap: usize,
        emit: &mut dyn FnMut(&[i64]),
    ) -> Result<()> {
        let n = y.len();
        let mut c = center[j];
        for l in j + 1..n {
            c -= red.mu[l][j] * (y[l] as f64 - center[l]);
        }
        let rem = r2 - partial;
        if rem < 0.0 {
            return Ok(());
        }
        let w = (rem / red.bstar2[j]).sqrt();
        let lo = (c - w).ceil();
        let hi = (c + w).floor();
        if hi - lo > 1e12 {
            return Err(Error::EnumerationBudgetExceeded { cap });
        }
        let (lo, hi) = (lo as i64, hi as i64);
        for v in lo..=hi {
            *nodes += 1;
            if *nodes > node_cap {
                return Err(Error::EnumerationBudgetExceeded { cap });
            }
            let diff = v as f64 - c;
            let p = partial + red.bstar2[j] * diff * diff;
            if p > r2 {
                continue;
            }
            y[j] = v;
            if j == 0 {
                *hits += 1;
                if *hits > cap {
                    return Err(Error::EnumerationBudgetExceeded { cap });
                }
                emit(y);
            } else {
                rec(j - 1, p, red, center, r2, y, hits, nodes, cap, node_cap, emit)?;
            }
        }
        y[j] = 0;
        Ok(())
    }

    rec(
        n - 1,
        0.0,
        red,
        center,
        r2,
        &mut y,
        &mut hits,
        &mut nodes,
        cap,
        node_cap,
        emit,
    )
}

fn to_original(red: &Reduced, y: &[i64]) -> Vec<i64> {
    let n = y.len();
    let mut x = vec![0i64; n];
    for (j, &yj) in y.iter().enumerate() {
        if yj != 0 {
            for i in 0..n {
                x[i] += yj * red.u[j][i];
            }
        }
    }
    x
}

fn reduced_vector(red: &Reduced, y: &[f64]) -> Vec<f64> {
    let n = red.b.len();
    let mut v = vec![0.0; n];
    for (j, &yj) in y.iter().enumerate() {
        if yj != 0.0 {
            for i in 0..n {
                v[i] += yj * red.b[j][i];
            }
        }
    }
    v
}

fn first_nonzero_positive(x: &[i64]) -> bool {
    x.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0)
}

/// A nonzero lattice vector found by enumeration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeVector {
    pub coeffs: Vec<i64>,
    pub vector: Vec<f64>,
    pub norm: f64,
}

/// All nonzero vectors with `norm ≤ radius`, one per ± pair (the one whose
/// first nonzero coefficient is positive), sorted by norm then coefficients.
pub fn enumerate_vectors_within(
    l: &UnimodularLattice,
    radius: f64,
    norm: NormKind,
    cap: usize,
) -> Result<Vec<LatticeVector>> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidParameter(format!("radius must be positive, got {radius}")));
    }
    let red = lll(l, LLL_DELTA)?;
    let d = l.dim();
    let euclid_r = match norm {
        NormKind::Euclidean => radius,
        NormKind::Sup => radius * (d as f64).sqrt(),
    };
    let r2 = euclid_r * euclid_r * (1.0 + RADIUS_SLACK);
    let center = vec![0.0; d];
    let mut out = Vec::new();
    let limit = radius * (1.0 + 1e-12);
    fincke_pohst(&red, &center, r2, cap.saturating_mul(2), &mut |y| {
        if y.iter().all(|&v| v == 0) {
            return;
        }
        let x = to_original(&red, y);
        if !first_nonzero_positive(&x) {
            return;
        }
        let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let v = reduced_vector(&red, &yf);
        let nv = norm.of(&v);
        if nv <= limit {
            out.push(LatticeVector { coeffs: x, vector: v, norm: nv });
        }
    })
    .map_err(|e| match e {
        Error::EnumerationBudgetExceeded { .. } => Error::EnumerationBudgetExceeded { cap },
        other => other,
    })?;
    if out.len() > cap {
        return Err(Error::EnumerationBudgetExceeded { cap });
    }
    out.sort_by(|a, b| a.norm.total_cmp(&b.norm).then_with(|| a.coeffs.cmp(&b.coeffs)));
    Ok(out)
}

/// λ₁ and an achieving coefficient vector (Euclidean norm).
pub fn shortest_vector(l: &UnimodularLattice) -> Result<(f64, Vec<i64>)> {
    let red = lll(l, LLL_DELTA)?;
    let r = red
        .b
        .iter()
        .map(|c| linalg::norm2(c).sqrt())
        .fold(f64::INFINITY, f64::min);
    let d = l.dim();
    let mut best: Option<(f64, Vec<i64>)> = None;
    fincke_pohst(
        &red,
        &vec![0.0; d],
        r * r * (1.0 + RADIUS_SLACK),
        DEFAULT_ENUM_CAP,
        &mut |y| {
            if y.iter().all(|&v| v == 0) {
                return;
            }
            let yf: Vec<f64> = y.iter().map(|&v| v as f64).collect();
            let n = linalg::norm2(&reduced_vector(&red, &yf)).sqrt();
            let x = to_original(&red, y);
            let better = match &best {
                None => true,
                Some((bn, bx)) => n < *bn || (n == *bn && x > *bx),
            };
            if better {
                best = Some((n, x));
            }
        },
    )?;
    best.ok_or(Error::DegenerateBasis)
}

/// λ₁ only.
pub fn lambda1(l: &UnimodularLattice) -> Result<f64> {
    shortest_vector(l).map(|(n, _)| n)
}

/// An affine lattice `basis · ℤ^d + shift`, with the shift canonicalized so
/// that `basis⁻¹ · shift ∈ [−1/2, 1/2)^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lattice: UnimodularLattice,
    shift: Vec<f64>,
}

fn wrap_half(x: f64) -> f64 {
    let r = x - (x + 0.5).floor();
    if r >= 0.5 {
        r - 1.0
    } else {
        r
    }
}

impl Grid {
    pub fn new(lattice: UnimodularLattice, shift: Vec<f64>) -> Result<Self> {
        if shift.len() != lattice.dim() {
            return Err(Error::InvalidParameter("shift length must equal d".into()));
        }
        let inv = linalg::inverse(&lattice.matrix()).ok_or(Error::DegenerateBasis)?;
        let c: Vec<f64> = linalg::mat_vec(&inv, &shift).into_iter().map(wrap_half).collect();
        let shift = linalg::mat_vec(&lattice.matrix(), &c);
        Ok(Self { lattice, shift })
    }

    pub fn lattice(&self) -> &UnimodularLattice {
        &self.lattice
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    /// Coordinates of the shift in the lattice basis.
    pub fn shift_coords(&self) -> Vec<f64> {
        let inv = linalg::inverse(&self.lattice.matrix()).expect("valid lattice");
        linalg::mat_vec(&inv, &self.shift)
    }

    /// Left action `g · (L + v) = gL + gv`.
    pub fn transformed(&self, g: &Mat) -> Result<Self> {
        Self::new(self.lattice.transformed(g)?, linalg::mat_vec(g, &self.shift))
    }
}

/// Minimum norm over grid points inside the ball of radius `cap`, or
/// `f64::INFINITY` when the grid misses that ball.
pub fn grid_min_norm(g: &Grid, cap: f64, norm: NormKind, enum_cap: usize) -> Result<f64> {
    if !(cap > 0.0) {
        return Err(Error::InvalidParameter(format!("cap must be positive, got {cap}")));
    }
    let l = g.lattice();
    let d = l.dim();
    let red = lll(l, LLL_DELTA)?;
    // Grid point B_red·y + v = B_red·(y − c) with c = −B_red⁻¹ v.
    let bred = linalg::transpose(&red.b);
    let inv = linalg::inverse(&bred).ok_or(Error::DegenerateBasis)?;
    let center: Vec<f64> = linalg::mat_vec(&inv, g.shift()).into_iter().map(|x| -x).collect();
    let euclid_r = match norm {
        NormKind::Euclidean => cap,
        NormKind::Sup => cap * (d as f64).sqrt(),
    };
    let mut best = f64::INFINITY;
    fincke_pohst(
        &red,
        &center,
        euclid_r * euclid_r * (1.0 + RADIUS_SLACK),
        enum_cap,
        &mut |y| {
            let mut p = g.shift().to_vec();
            for (j, &yj) in y.iter().enumerate() {
                if yj != 0 {
                    for i in 0..d {
                        p[i] += yj as f64 * red.b[j][i];
                    }
                }
            }
            let n = norm.of(&p);
            if n <= cap * (1.0 + 1e-12) && n < best {
                best = n;
            }
        },
    )?;
    Ok(best)
}

/// Lagrange–Gauss reduction of a 2D basis given by columns. The returned
/// columns achieve λ₁ and λ₂; the integer matrix maps old columns to new.
pub fn lagrange_gauss_reduce(cols: [[f64; 2]; 2]) -> Result<([[f64; 2]; 2], [[i64; 2]; 2])> {
    let [mut b0, mut b1] = cols;
    let det = b0[0] * b1[1] - b0[1] * b1[0];
    if !det.is_finite() || det == 0.0 {
        return Err(Error::DegenerateBasis);
    }
    let n2 = |v: &[f64; 2]| v[0] * v[0] + v[1] * v[1];
    let mut u0 = [1i64, 0];
    let mut u1 = [0i64, 1];
    if n2(&b1) < n2(&b0) {
        std::mem::swap(&mut b0, &mut b1);
        std::mem::swap(&mut u0, &mut u1);
    }
    for _ in 0..10_000 {
        let q = ((b0[0] * b1[0] + b0[1] * b1[1]) / n2(&b0)).round();
        if q != 0.0 {
            if q.abs() > 1e15 {
                return Err(Error::DegenerateBasis);
            }
            b1 = [b1[0] - q * b0[0], b1[1] - q * b0[1]];
            let qi = q as i64;
            u1 = [u1[0] - qi * u0[0], u1[1] - qi * u0[1]];
        }
        if n2(&b1) >= n2(&b0) {
            return Ok(([b0, b1], [u0, u1]));
        }
        std::mem::swap(&mut b0, &mut b1);
        std::mem::swap(&mut u0, &mut u1);
    }
    Err(Error::DegenerateBasis)
}

/// A decomposable k-vector attached to a primitive subgroup of a lattice.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WedgeElement {
    pub k: usize,
    /// k×k minors of `basis · generators`, indexed by lexicographic k-subsets.
    pub coords: Vec<f64>,
    /// Integer generator columns (length d each), saturated.
    pub generators: Vec<Vec<i64>>,
    pub flags: Vec<Flag>,
}

impl WedgeElement {
    pub fn norm(&self) -> f64 {
        linalg::norm2(&self.coords).sqrt()
    }

    /// Integer Plücker coordinates of the generators, normalized in sign.
    pub fn key(&self) -> Vec<i128> {
        let d = self.generators[0].len();
        plucker_key(&self.generators, d)
    }
}

fn int_det(m: &[Vec<i128>]) -> i128 {
    // Bareiss fraction-free elimination.
    let n = m.len();
    if n == 0 {
        return 1;
    }
    let mut a = m.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for c in 0..n {
        if a[c][c] == 0 {
            match (c + 1..n).find(|&r| a[r][c] != 0) {
                Some(r) => {
                    a.swap(r, c);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for r in c + 1..n {
            for k in c + 1..n {
                a[r][k] = (a[r][k] * a[c][c] - a[r][c] * a[c][k]) / prev;
            }
        }
        prev = a[c][c];
    }
    sign * a[n - 1][n - 1]
}

fn plucker_key(gens: &[Vec<i64>], d: usize) -> Vec<i128> {
    let k = gens.len();
    let mut key: Vec<i128> = linalg::k_subsets(d, k)
        .iter()
        .map(|s| {
            let m: Vec<Vec<i128>> = s
                .iter()
                .map(|&r| gens.iter().map(|g| g[r] as i128).collect())
                .collect();
            int_det(&m)
        })
        .collect();
    if key.iter().find(|&&v| v != 0).is_some_and(|&v| v < 0) {
        for v in key.iter_mut() {
            *v = -*v;
        }
    }
    key
}

/// Column-style Hermite reduction of the k×d row matrix `rows`.
/// Returns (H, V, W) with `rows · V = [H | 0]`, `W = V⁻¹`, V unimodular.
#[allow(clippy::type_complexity)]
fn column_hermite(rows: &[Vec<i64>]) -> Result<(Vec<Vec<i128>>, Vec<Vec<i128>>, Vec<Vec<i128>>)> {
    let k = rows.len();
    let d = rows[0].len();
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    // v stored by columns, w by rows.
    let mut v: Vec<Vec<i128>> = (0..d).map(|j| (0..d).map(|i| i128::from(i == j)).collect()).collect();
    let mut w: Vec<Vec<i128>> = v.clone();
    for r in 0..k {
        for c in r + 1..d {
            let a = m[r][r];
            let b = m[r][c];
            if b == 0 {
                continue;
            }
            let eg = a.extended_gcd(&b);
            let (g, x, y) = (eg.gcd, eg.x, eg.y);
            let (ag, bg) = (a / g, b / g);
            // new col_r = x col_r + y col_c; new col_c = −(b/g) col_r + (a/g) col_c
            for row in m.iter_mut() {
                let (p, q) = (row[r], row[c]);
                row[r] = x * p + y * q;
                row[c] = -bg * p + ag * q;
            }
            let (vr, vc) = (v[r].clone(), v[c].clone());
            for i in 0..d {
                v[r][i] = x * vr[i] + y * vc[i];
                v[c][i] = -bg * vr[i] + ag * vc[i];
            }
            let (wr, wc) = (w[r].clone(), w[c].clone());
            for i in 0..d {
                w[r][i] = ag * wr[i] + bg * wc[i];
                w[c][i] = -y * wr[i] + x * wc[i];
            }
            if m.iter().flatten().chain(v.iter().flatten()).any(|x| x.abs() > (1i128 << 100)) {
                return Err(Error::InvalidParameter("integer overflow in Hermite reduction".into()));
            }
        }
        if m[r][r] == 0 {
            return Err(Error::RankDeficient { k });
        }
    }
    let h = m.iter().map(|row| row[..k].to_vec()).collect();
    Ok((h, v, w))
}

/// Replaces integer generator columns by a basis of their primitive hull.
/// The boolean reports whether the input was already saturated.
pub fn saturate(generators: &[Vec<i64>]) -> Result<(Vec<Vec<i64>>, bool)> {
    let k = generators.len();
    if k == 0 {
        return Err(Error::RankDeficient { k: 0 });
    }
    let (h, _v, w) = column_hermite(generators)?;
    let det = int_det(&h);
    if det == 0 {
        return Err(Error::RankDeficient { k });
    }
    if det.abs() == 1 {
        return Ok((generators.to_vec(), true));
    }
    let sat = w[..k]
        .iter()
        .map(|row| row.iter().map(|&x| x as i64).collect())
        .collect();
    Ok((sat, false))
}

/// Integer basis (d−1 columns) of `{m ∈ ℤ^d : w · m = 0}` for primitive `w`.
fn integer_kernel(w: &[i64]) -> Result<Vec<Vec<i64>>> {
    let (_h, v, _w) = column_hermite(&[w.to_vec()])?;
    Ok(v[1..]
        .iter()
        .map(|c| c.iter().map(|&x| x as i64).collect())
        .collect())
}

/// Wedge coordinates of the subgroup spanned by `generators` (d-vectors).
/// Non-saturated input is replaced by its saturation and flagged.
pub fn wedge_coords(l: &UnimodularLattice, generators: &[Vec<i64>]) -> Result<WedgeElement> {
    let d = l.dim();
    let k = generators.len();
    if k == 0 || k >= d || generators.iter().any(|g| g.len() != d) {
        return Err(Error::InvalidParameter(format!("need 1 <= k <= d-1 generators of length {d}")));
    }
    let (gens, was_saturated) = saturate(generators)?;
    let vecs: Vec<Vec<f64>> = gens.iter().map(|g| l.vector(g)).collect();
    let coords = linalg::k_subsets(d, k)
        .iter()
        .map(|s| {
            let m: Mat = s.iter().map(|&r| vecs.iter().map(|v| v[r]).collect()).collect();
            linalg::det(&m)
        })
        .collect();
    let flags = if was_saturated { vec![] } else { vec![Flag::SaturationApplied] };
    Ok(WedgeElement { k, coords, generators: gens, flags })
}

fn gcd_all(x: &[i64]) -> i64 {
    x.iter().fold(0i64, |g, &v| g.gcd(&v))
}

/// Gated and weight-one norms of the best vector found by
/// [`best_gated_primitive`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct GatedHit {
    pub n0: f64,
    pub n1: f64,
}

/// How far along a line to look for a coprime multiplier.
const COPRIME_REACH: i64 = 4096;

/// Among primitive vectors `v` of `l` whose scaled copy `w ⊙ v` lies in the
/// ball of radius `√2`, the one with `‖v_heavy‖` smallest subject to
/// `‖v_light‖ < gate`.
///
/// Fincke–Pohst over the outer coordinates; along the innermost line the
/// weight-one norm is a convex quadratic and the gate an interval, so the best
/// primitive point is the coprime multiplier nearest to the minimiser on
/// either side. Lines hundreds of millions long cost a few gcds.
pub(crate) fn best_gated_primitive(
    l: &UnimodularLattice,
    weights: &[f64],
    heavy: &[bool],
    gate: f64,
    cap: usize,
) -> Result<Option<GatedHit>> {
    let scaled: Vec<Vec<f64>> = l.cols.iter().map(|c| c.iter().zip(weights).map(|(x, w)| x * w).collect()).collect();
    let red = lll(&UnimodularLattice { cols: scaled }, LLL_DELTA)?;
    gated_search(&red.b, weights, heavy, gate, cap)
}

/// [`best_gated_primitive`] on a basis of the scaled lattice that is already
/// reduced, for bases whose reduction needed exact arithmetic.
pub(crate) fn gated_search(
    scaled_basis: &[Vec<f64>],
    weights: &[f64],
    heavy: &[bool],
    gate: f64,
    cap: usize,
) -> Result<Option<GatedHit>> {
    let n = scaled_basis.len();
    let (mu, bstar2) = gram_schmidt(scaled_basis);
    if bstar2.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::DegenerateBasis);
    }
    let red = Reduced { b: scaled_basis.to_vec(), u: vec![], mu, bstar2 };
    // Unscaled reduced columns.
    let cols: Vec<Vec<f64>> = red.b.iter().map(|b| b.iter().zip(weights).map(|(x, w)| x / w).collect()).collect();
    let split = |v: &[f64]| -> (f64, f64) {
        let (mut a, mut b) = (0.0, 0.0);
        for (j, x) in v.iter().enumerate() {
            if heavy[j] {
                b += x * x;
            } else {
                a += x * x;
            }
        }
        (a, b)
    };
    let r2 = 2.0 * (1.0 + RADIUS_SLACK);
    let mut best: Option<GatedHit> = None;
    let mut nodes = 0usize;
    let mut y = vec![0i64; n];

    #[allow(clippy::too_many_arguments)]
    fn line(
        y: &[i64],
        lo: i64,
        hi: i64,
        cols: &[Vec<f64>],
        split: &dyn Fn(&[f64]) -> (f64, f64),
        gate: f64,
        best: &mut Option<GatedHit>,
    ) {
        let n = y.len();
        let mut rest = vec![0.0; n];
        for (j, &yj) in y.iter().enumerate().skip(1) {
            for (r, c) in rest.iter_mut().zip(&cols[j]) {
                *r += yj as f64 * c;
            }
        }
        let g = y[1..].iter().fold(0i64, |g, &v| g.gcd(&v));
        let at = |k: i64| -> Vec<f64> { rest.iter().zip(&cols[0]).map(|(r, c)| r + k as f64 * c).collect() };
        // Both parts are quadratics a·k² + 2b·k + c in the multiplier k.
        let (a0, a1) = split(&cols[0]);
        let (c0, _) = split(&rest);
        let (plus, minus) = (split(&at(1)), split(&at(-1)));
        let (b0, b1) = ((plus.0 - minus.0) / 4.0, (plus.1 - minus.1) / 4.0);
        let centre = if a1 > 0.0 { -b1 / a1 } else { 0.5 * (lo + hi) as f64 };
        let (mut glo, mut ghi) = (lo as f64, hi as f64);
        if a0 > 0.0 {
            let disc = b0 * b0 - a0 * (c0 - gate * gate);
            if disc < 0.0 {
                return;
            }
            let s = disc.sqrt();
            glo = glo.max((-b0 - s) / a0);
            ghi = ghi.min((-b0 + s) / a0);
        } else if c0 >= gate * gate {
            return;
        }
        let (klo, khi) = (glo.ceil() as i64, ghi.floor() as i64);
        if klo > khi {
            return;
        }
        let start = (centre.round() as i64).clamp(klo, khi);
        let coprime = |k: i64| if g == 0 { k.abs() == 1 } else { k.gcd(&g) == 1 };
        let mut consider = |k: i64| {
            let (n0, n1) = split(&at(k));
            if n0.sqrt() < gate && best.is_none_or(|b| n1.sqrt() < b.n1) {
                *best = Some(GatedHit { n0: n0.sqrt(), n1: n1.sqrt() });
            }
        };
        if g == 0 {
            for k in [-1, 1] {
                if (klo..=khi).contains(&k) {
                    consider(k);
                }
            }
            return;
        }
        for dir in [1i64, -1] {
            let mut k = start;
            for _ in 0..COPRIME_REACH {
                if !(klo..=khi).contains(&k) {
                    break;
                }
                if coprime(k) {
                    consider(k);
                    break;
                }
                k += dir;
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        j: usize,
        partial: f64,
        red: &Reduced,
        r2: f64,
        y: &mut [i64],
        nodes: &mut usize,
        cap: usize,
        cols: &[Vec<f64>],
        split: &dyn Fn(&[f64]) -> (f64, f64),
        gate: f64,
        best: &mut Option<GatedHit>,
    ) -> Result<()> {
        let n = y.len();
        let mut c = 0.0;
        for l in j + 1..n {
            c -= red.mu[l][j] * y[l] as f64;
        }
        let rem = r2 - partial;
        if rem < 0.0 {
            return Ok(());
        }
        let w = (rem / red.bstar2[j]).sqrt();
        let (lo, hi) = ((c - w).ceil(), (c + w).floor());
        if lo > hi {
            return Ok(());
        }
        if j == 0 {
            *nodes += 1;
            if *nodes > cap {
                return Err(Error::EnumerationBudgetExceeded { cap });
            }
            if hi - lo > 1e15 {
                return Err(Error::EnumerationBudgetExceeded { cap });
            }
            line(y, lo as i64, hi as i64, cols, split, gate, best);
            return Ok(());
        }
        if hi - lo > cap as f64 {
            return Err(Error::EnumerationBudgetExceeded { cap });
        }
        for v in lo as i64..=hi as i64 {
            let diff = v as f64 - c;
            let p = partial + red.bstar2[j] * diff * diff;
            if p > r2 {
                continue;
            }
            y[j] = v;
            rec(j - 1, p, red, r2, y, nodes, cap, cols, split, gate, best)?;
        }
        y[j] = 0;
        Ok(())
    }

    rec(n - 1, 0.0, &red, r2, &mut y, &mut nodes, cap, &cols, &split, gate, &mut best)?;
    Ok(best)
}

/// Primitive rank-k subgroups with wedge norm ≤ `bound`, one per ± pair.
///
/// Exact for k = 1 and k = d − 1. For 2 ≤ k ≤ d − 2 only subgroups spanned
/// by k primitive vectors of norm ≤ `bound` are found.
pub fn enumerate_primitive_wedges(
    l: &UnimodularLattice,
    k: usize,
    bound: f64,
    cap: usize,
) -> Result<Vec<WedgeElement>> {
    let d = l.dim();
    if k == 0 || k >= d {
        return Err(Error::InvalidParameter(format!("degree {k} outside 1..={}", d - 1)));
    }
    let limit = bound * (1.0 + 1e-9);
    if k == 1 {
        let vs = enumerate_vectors_within(l, bound, NormKind::Euclidean, cap)?;
        return Ok(vs
            .into_iter()
            .filter(|v| gcd_all(&v.coeffs) == 1)
            .map(|v| WedgeElement {
                k: 1,
                coords: v.vector,
                generators: vec![v.coeffs],
                flags: vec![],
            })
            .collect());
    }
    if k == d - 1 {
        // Hodge duality: rank d−1 primitive subgroups ↔ primitive dual vectors
        // of the same norm.
        let dual = l.dual()?;
        let ws = enumerate_vectors_within(&dual, bound, NormKind::Euclidean, cap)?;
        let mut out = Vec::new();
        for w in ws.into_iter().filter(|w| gcd_all(&w.coeffs) == 1) {
            let gens = integer_kernel(&w.coeffs)?;
            let we = wedge_coords(l, &gens)?;
            if we.norm() <= limit {
                out.push(we);
            }
        }
        return Ok(out);
    }
    let vs: Vec<Vec<i64>> = enumerate_vectors_within(l, bound, NormKind::Euclidean, cap)?
        .into_iter()
        .filter(|v| gcd_all(&v.coeffs) == 1)
        .map(|v| v.coeffs)
        .collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    let mut combos = 0usize;
    let mut idx: Vec<usize> = (0..k).collect();
    if vs.len() < k {
        return Ok(out);
    }
    loop {
        combos += 1;
        if combos > cap {
            return Err(Error::EnumerationBudgetExceeded { cap });
        }
        let gens: Vec<Vec<i64>> = idx.iter().map(|&i| vs[i].clone()).collect();
        match wedge_coords(l, &gens) {
            Ok(we) => {
                if we.norm() <= limit && seen.insert(we.key()) {
                    out.push(WedgeElement { flags: vec![], ..we });
                }
            }
            Err(Error::RankDeficient { .. }) => {}
            Err(e) => return Err(e),
        }
        // Next k-combination of 0..vs.len().
        let n = vs.len();
        let mut p = k;
        while p > 0 && idx[p - 1] == n - k + p - 1 {
            p -= 1;
        }
        if p == 0 {
            break;
        }
        idx[p - 1] += 1;
        for q in p..k {
            idx[q] = idx[q - 1] + 1;
        }
    }
    out.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
    Ok(out)
}

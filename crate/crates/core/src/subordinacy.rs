//! Weyl m-functions, power-law fits of solution growth and the Holder
//! bound on the whole-line spectral measure.
//!
//! Half-line m-functions come from the backward Riccati recursion
//! `m_n = 1 / (V(n) - z - m_{n+1})` seeded with the free value. The
//! truncation error is bounded by the diameter of the Weyl disk, the image
//! of the closed upper half-plane under the composed recursion: the true
//! tail value lies in the upper half-plane, and so does the seed.

use num_complex::Complex64;
use serde::Serialize;

use crate::cf::RotationNumber;
use crate::error::{invalid, Error, Result};
use crate::traces::{sturm_count, sturm_eigenvalue};
use crate::transfer::{evolve, norm_u};
use crate::words::{potential_window, Phase, Word};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// Sites `1, 2, ...`
    Right,
    /// Sites `0, -1, ...`
    Left,
}

/// `(-z + sqrt(z^2 - 4)) / 2` on the branch with positive imaginary part.
pub fn free_m(z: Complex64) -> Complex64 {
    let s = (z * z - 4.0).sqrt();
    let a = (-z + s) / 2.0;
    if a.im > 0.0 {
        a
    } else {
        (-z - s) / 2.0
    }
}

fn check_upper(z: Complex64) -> Result<()> {
    if !(z.im > 0.0) || !z.re.is_finite() || !z.im.is_finite() {
        return Err(invalid(format!("z = {z} must lie in the upper half-plane")));
    }
    Ok(())
}

/// `v(n)` on sites `from..=from + len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinePotential {
    pub from: i64,
    pub bits: Word,
}

impl LinePotential {
    /// Sites `-radius..=radius + 1`.
    pub fn new(r: &RotationNumber, beta: &Phase, radius: usize) -> Result<Self> {
        let radius = radius as i64;
        Ok(Self {
            from: -radius,
            bits: potential_window(r, beta, -radius, radius + 1)?,
        })
    }

    /// Largest truncation both half-lines support.
    pub fn radius(&self) -> usize {
        let right = self.from + self.bits.len() as i64 - 1;
        (-self.from).min(right - 1).max(0) as usize
    }

    fn bit(&self, site: i64) -> u8 {
        self.bits.symbols()[(site - self.from) as usize]
    }
}

/// `m` with the diameter of its Weyl disk.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Riccati {
    m: Complex64,
    error_bound: f64,
}

/// Runs the recursion over `values` ordered from the boundary site outward.
fn riccati(values: impl DoubleEndedIterator<Item = f64>, z: Complex64) -> Riccati {
    let seed = free_m(z);
    let mut m = seed;
    // composed Mobius map [[a, b], [c, d]], rescaled; log |det| tracked
    let (mut a, mut b, mut c, mut d) = (
        Complex64::new(1.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, 0.0),
        Complex64::new(1.0, 0.0),
    );
    let mut log_det = 0.0;
    for v in values.rev() {
        let w = v - z;
        m = 1.0 / (w - m);
        // [[0, 1], [-1, w]] * [[a, b], [c, d]]
        let (na, nb, nc, nd) = (c, d, -a + w * c, -b + w * d);
        let s = na.norm().max(nb.norm()).max(nc.norm()).max(nd.norm());
        a = na / s;
        b = nb / s;
        c = nc / s;
        d = nd / s;
        log_det -= 2.0 * s.ln();
    }
    let denom = 2.0 * (c.conj() * d).im.abs();
    let radius = if denom > 0.0 {
        (log_det - denom.ln()).exp()
    } else {
        f64::INFINITY
    };
    Riccati {
        m,
        error_bound: 2.0 * radius,
    }
}

fn half_values(lambda: f64, pot: &LinePotential, side: Side, n: usize) -> Vec<f64> {
    let n = n as i64;
    match side {
        Side::Right => (1..=n).map(|s| lambda * f64::from(pot.bit(s))).collect(),
        Side::Left => (0..n).map(|k| lambda * f64::from(pot.bit(-k))).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HalfLineM {
    pub side: Side,
    pub z: Complex64,
    pub value: Complex64,
    pub truncation: usize,
    /// Weyl-disk diameter at this truncation.
    pub error_bound: f64,
    /// `|m_N - m_{2N}|`
    pub doubling_change: f64,
    /// Set when doubling `N` moves the value noticeably.
    pub precision_warning: bool,
}

/// Relative movement under doubling that triggers a precision warning.
pub const DOUBLING_TOLERANCE: f64 = 1e-8;

/// Half-line m-function from a truncation of length `n`.
pub fn m_half_line(
    side: Side,
    lambda: f64,
    r: &RotationNumber,
    beta: &Phase,
    z: Complex64,
    n: usize,
) -> Result<HalfLineM> {
    check_upper(z)?;
    if n < 1 {
        return Err(invalid("truncation must be at least one site"));
    }
    let pot = LinePotential::new(r, beta, 2 * n)?;
    half_line_on(&pot, side, lambda, z, n)
}

/// [`m_half_line`] over a precomputed potential covering `2n` sites.
pub fn half_line_on(
    pot: &LinePotential,
    side: Side,
    lambda: f64,
    z: Complex64,
    n: usize,
) -> Result<HalfLineM> {
    check_upper(z)?;
    if 2 * n > pot.radius() {
        return Err(invalid(format!(
            "potential radius {} does not cover 2N = {}",
            pot.radius(),
            2 * n
        )));
    }
    let short = riccati(half_values(lambda, pot, side, n).into_iter(), z);
    let long = riccati(half_values(lambda, pot, side, 2 * n).into_iter(), z);
    let doubling_change = (short.m - long.m).norm();
    herglotz(short.m, "half-line m")?;
    Ok(HalfLineM {
        side,
        z,
        value: short.m,
        truncation: n,
        error_bound: short.error_bound,
        doubling_change,
        precision_warning: doubling_change > DOUBLING_TOLERANCE * short.m.norm().max(1.0),
    })
}

fn herglotz(m: Complex64, what: &str) -> Result<()> {
    if m.im > 0.0 {
        Ok(())
    } else {
        Err(Error::Internal(format!("{what} = {m} is not in the upper half-plane")))
    }
}

pub type ComplexMatrix = [[Complex64; 2]; 2];

/// `M = (1 - m+ m-)^{-1} [[m-, -m+ m-], [-m+ m-, m+]]` and `m = tr M`.
pub fn m_whole_line(m_plus: Complex64, m_minus: Complex64) -> Result<(ComplexMatrix, Complex64)> {
    if !(m_plus.im > 0.0 && m_minus.im > 0.0) {
        return Err(invalid(format!(
            "m+ = {m_plus} and m- = {m_minus} must both lie in the upper half-plane"
        )));
    }
    let den = 1.0 - m_plus * m_minus;
    if den.norm() < 1e-14 {
        return Err(invalid(format!("1 - m+ m- = {den} is degenerate")));
    }
    let off = -m_plus * m_minus / den;
    let matrix = [[m_minus / den, off], [off, m_plus / den]];
    Ok((matrix, (m_plus + m_minus) / den))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylPoint {
    pub z: Complex64,
    pub m_plus: Complex64,
    pub m_minus: Complex64,
    pub m_matrix: ComplexMatrix,
    pub m_trace: Complex64,
    pub truncation: usize,
    /// First-order propagation of the two Weyl-disk diameters into `m`.
    pub truncation_error_bound: f64,
}

fn weyl_from(z: Complex64, p: Riccati, q: Riccati, n: usize) -> Result<WeylPoint> {
    let (m_matrix, m_trace) = m_whole_line(p.m, q.m)?;
    herglotz(m_trace, "whole-line m")?;
    let den = 1.0 - p.m * q.m;
    let dp = ((1.0 + q.m * q.m) / (den * den)).norm();
    let dq = ((1.0 + p.m * p.m) / (den * den)).norm();
    Ok(WeylPoint {
        z,
        m_plus: p.m,
        m_minus: q.m,
        m_matrix,
        m_trace,
        truncation: n,
        truncation_error_bound: dp * p.error_bound + dq * q.error_bound,
    })
}

/// Whole-line data from truncations of length `n` on both sides.
pub fn weyl_point_on(pot: &LinePotential, lambda: f64, z: Complex64, n: usize) -> Result<WeylPoint> {
    check_upper(z)?;
    if n < 1 || n > pot.radius() {
        return Err(invalid(format!("truncation {n} outside 1..={}", pot.radius())));
    }
    let p = riccati(half_values(lambda, pot, Side::Right, n).into_iter(), z);
    let q = riccati(half_values(lambda, pot, Side::Left, n).into_iter(), z);
    herglotz(p.m, "m+")?;
    herglotz(q.m, "m-")?;
    weyl_from(z, p, q, n)
}

pub fn weyl_point(
    lambda: f64,
    r: &RotationNumber,
    beta: &Phase,
    z: Complex64,
    n: usize,
) -> Result<WeylPoint> {
    let pot = LinePotential::new(r, beta, n)?;
    weyl_point_on(&pot, lambda, z, n)
}

/// Doubles the truncation from `n0` until the error bound drops below
/// `rel_tol * |m|` or the potential runs out; the last point is returned
/// either way.
pub fn weyl_point_adaptive(
    pot: &LinePotential,
    lambda: f64,
    z: Complex64,
    n0: usize,
    rel_tol: f64,
) -> Result<WeylPoint> {
    let cap = pot.radius();
    let mut n = n0.clamp(1, cap);
    loop {
        let w = weyl_point_on(pot, lambda, z, n)?;
        if w.truncation_error_bound <= rel_tol * w.m_trace.norm() || n == cap {
            return Ok(w);
        }
        n = (2 * n).min(cap);
    }
}

/// Resolvent block `<delta_i, (J - z)^{-1} delta_j>` for `i, j` in
/// `{i0, i0 + 1}` of the tridiagonal matrix with unit off-diagonal.
pub fn truncated_green_block(diag: &[f64], z: Complex64, i0: usize) -> Result<ComplexMatrix> {
    check_upper(z)?;
    if i0 + 1 >= diag.len() {
        return Err(invalid("resolvent block outside the truncation"));
    }
    let n = diag.len();
    // Thomas elimination; every pivot has imaginary part <= -Im z
    let mut piv = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        let base = Complex64::new(diag[i], 0.0) - z;
        piv[i] = if i == 0 { base } else { base - 1.0 / piv[i - 1] };
    }
    let solve = |k: usize| {
        let mut y = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let rhs = if i == k { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
            y[i] = if i == 0 { rhs } else { rhs - y[i - 1] / piv[i - 1] };
        }
        let mut x = vec![Complex64::new(0.0, 0.0); n];
        for i in (0..n).rev() {
            x[i] = if i + 1 == n { y[i] / piv[i] } else { (y[i] - x[i + 1]) / piv[i] };
        }
        x
    };
    let a = solve(i0);
    let b = solve(i0 + 1);
    Ok([[a[i0], b[i0]], [a[i0 + 1], b[i0 + 1]]])
}

/// `|(sin phi + cos phi m+) / (cos phi - sin phi m+)|`
pub fn mobius_value(m_plus: Complex64, phi: f64) -> f64 {
    let (s, c) = phi.sin_cos();
    ((s + c * m_plus) / (c - s * m_plus)).norm()
}

/// Supremum of [`mobius_value`] over `phi`, equal to `(1 + |mu|) / (1 - |mu|)`
/// with `mu = (m+ - i) / (m+ + i)`.
pub fn mobius_sup(m_plus: Complex64) -> f64 {
    let i = Complex64::new(0.0, 1.0);
    let mu = ((m_plus - i) / (m_plus + i)).norm();
    (1.0 + mu) / (1.0 - mu)
}

/// `2 gamma1 / (gamma1 + gamma2)`
pub fn alpha_from_exponents(gamma1: f64, gamma2: f64) -> f64 {
    2.0 * gamma1 / (gamma1 + gamma2)
}

/// `count` points from `lo` to `hi` in geometric progression.
pub fn geometric_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count).map(|i| lo * (ratio * i as f64).exp()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthFit {
    pub energy: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    #[serde(rename = "C2")]
    pub c2: f64,
    pub alpha: f64,
    pub fit_range: (f64, f64),
    /// RMS of the log-log residuals of the lower and upper envelopes.
    pub residuals: (f64, f64),
    pub angles: usize,
    /// Why the fit does not describe a power law, if it does not.
    pub failure: Option<String>,
}

fn slope(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let b = sxy / sxx;
    let a = my - b * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - a - b * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (b, a, rms)
}

/// Fits `C1 L^gamma1 <= ||u||_L <= C2 L^gamma2` over `phi_samples`
/// boundary angles, using the min and max envelopes over `phi`.
pub fn fit_exponents(
    lambda: f64,
    r: &RotationNumber,
    beta: &Phase,
    energy: f64,
    l_grid: &[f64],
    phi_samples: usize,
) -> Result<GrowthFit> {
    if l_grid.len() < 3 || l_grid.iter().any(|&l| !(l >= 1.0)) {
        return Err(invalid("length grid needs at least three values >= 1"));
    }
    let lo = l_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = l_grid.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 1e3 * (1.0 - 1e-9) {
        return Err(invalid(format!(
            "length grid spans {:.2} decades; at least 3 are needed",
            (hi / lo).log10()
        )));
    }
    if phi_samples == 0 {
        return Err(invalid("at least one boundary angle is needed"));
    }
    let sites = hi.ceil() as i64 + 2;
    let pot = potential_window(r, beta, 1, sites)?;
    let mut lower = vec![f64::INFINITY; l_grid.len()];
    let mut upper = vec![0.0f64; l_grid.len()];
    for i in 0..phi_samples {
        let phi = std::f64::consts::PI * i as f64 / phi_samples as f64;
        let t = evolve(lambda, energy, &pot, phi)?;
        for (k, &l) in l_grid.iter().enumerate() {
            let v = norm_u(&t, l)?;
            lower[k] = lower[k].min(v);
            upper[k] = upper[k].max(v);
        }
    }
    let xs: Vec<f64> = l_grid.iter().map(|l| l.ln()).collect();
    let (gamma1, _, res1) = slope(&xs, &lower.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let (gamma2, _, res2) = slope(&xs, &upper.iter().map(|v| v.ln()).collect::<Vec<_>>());
    let c1 = l_grid
        .iter()
        .zip(&lower)
        .map(|(l, v)| v / l.powf(gamma1))
        .fold(f64::INFINITY, f64::min);
    let c2 = l_grid
        .iter()
        .zip(&upper)
        .map(|(l, v)| v / l.powf(gamma2))
        .fold(0.0, f64::max);
    let failure = if !(gamma1 > 0.0) {
        Some(format!(
            "lower envelope slope {gamma1} is not positive; the energy is probably outside the spectrum"
        ))
    } else if gamma1 > gamma2 {
        Some(format!("lower slope {gamma1} exceeds upper slope {gamma2}"))
    } else {
        None
    };
    Ok(GrowthFit {
        energy,
        gamma1,
        gamma2,
        c1,
        c2,
        alpha: alpha_from_exponents(gamma1, gamma2),
        fit_range: (lo, hi),
        residuals: (res1, res2),
        angles: phi_samples,
        failure,
    })
}

/// Orthonormal eigenvectors picked out by inverse iteration.
struct InverseIteration<'a> {
    diag: &'a [f64],
    previous: Vec<(f64, Vec<f64>)>,
}

/// Solves `(J - shift) x = b` in place, with partial pivoting.
fn solve_shifted(diag: &[f64], shift: f64, b: &mut [f64]) {
    let n = diag.len();
    let tiny = f64::EPSILON * (1.0 + shift.abs() + diag.iter().fold(0.0f64, |m, d| m.max(d.abs())));
    let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
    let dl = vec![1.0f64; n.saturating_sub(1)];
    let mut du = vec![1.0; n.saturating_sub(1)];
    let mut du2 = vec![0.0; n.saturating_sub(2)];
    for i in 0..n.saturating_sub(1) {
        if d[i].abs() >= dl[i].abs() {
            if d[i] == 0.0 {
                d[i] = tiny;
            }
            let fact = dl[i] / d[i];
            d[i + 1] -= fact * du[i];
            b[i + 1] -= fact * b[i];
        } else {
            let fact = d[i] / dl[i];
            d[i] = dl[i];
            let temp = d[i + 1];
            d[i + 1] = du[i] - fact * temp;
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -fact * du2[i];
            }
            du[i] = temp;
            let tb = b[i];
            b[i] = b[i + 1];
            b[i + 1] = tb - fact * b[i + 1];
        }
    }
    if d[n - 1] == 0.0 {
        d[n - 1] = tiny;
    }
    b[n - 1] /= d[n - 1];
    if n >= 2 {
        b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
}

impl InverseIteration<'_> {
    fn vector(&mut self, x: f64) -> Vec<f64> {
        let n = self.diag.len();
        let cluster = 1e-7 * (1.0 + x.abs());
        self.previous.retain(|(y, _)| (x - y).abs() < cluster);
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64) * 0.7548776662).sin()).collect();
        for _ in 0..3 {
            solve_shifted(self.diag, x, &mut v);
            for (_, u) in &self.previous {
                let dot: f64 = v.iter().zip(u).map(|(a, b)| a * b).sum();
                for (a, b) in v.iter_mut().zip(u) {
                    *a -= dot * b;
                }
            }
            let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            for a in v.iter_mut() {
                *a /= norm;
            }
        }
        self.previous.push((x, v.clone()));
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TruncatedMeasure {
    pub energy: f64,
    pub epsilon: f64,
    /// Sites `-N..=N+1` were kept.
    pub truncation: usize,
    /// Weight of `delta_0` plus `delta_1` on `[E - eps, E + eps]`.
    pub measure: f64,
    pub eigenvalues: usize,
    /// `m` of the same truncation at `E + i eps`.
    pub m_trace: Complex64,
}

/// `Lambda_N([E - eps, E + eps])` for the matrix on sites `-n..=n+1`.
pub fn truncated_measure(
    pot: &LinePotential,
    lambda: f64,
    energy: f64,
    epsilon: f64,
    n: usize,
) -> Result<TruncatedMeasure> {
    if !(epsilon > 0.0) {
        return Err(invalid("window half-width must be positive"));
    }
    if n > pot.radius() {
        return Err(invalid(format!("truncation {n} exceeds potential radius {}", pot.radius())));
    }
    let diag: Vec<f64> = (-(n as i64)..=n as i64 + 1)
        .map(|s| lambda * f64::from(pot.bit(s)))
        .collect();
    let (a, b) = (energy - epsilon, energy + epsilon);
    let below = sturm_count(&diag, a);
    let upto = sturm_count(&diag, b);
    let mut inv = InverseIteration {
        diag: &diag,
        previous: Vec::new(),
    };
    let mut measure = 0.0;
    for j in below + 1..=upto {
        let x = sturm_eigenvalue(&diag, j, a, b, 1e-14 * (1.0 + energy.abs()));
        let v = inv.vector(x);
        measure += v[n] * v[n] + v[n + 1] * v[n + 1];
    }
    let g = truncated_green_block(&diag, Complex64::new(energy, epsilon), n)?;
    Ok(TruncatedMeasure {
        energy,
        epsilon,
        truncation: n,
        measure,
        eigenvalues: upto - below,
        m_trace: g[0][0] + g[1][1],
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderOptions {
    /// Target `error bound / |m|` for the Riccati truncation.
    pub rel_tol: f64,
    pub max_truncation: usize,
    /// Half-widths at which the truncated-matrix measure is computed.
    pub oracle_epsilons: Vec<f64>,
    /// Truncation for the measure oracle is `max(sites_per_eps / eps, 200)`.
    pub oracle_sites_per_eps: f64,
}

impl Default for HolderOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-6,
            max_truncation: 1 << 21,
            oracle_epsilons: vec![1e-1, 1e-2, 1e-3],
            oracle_sites_per_eps: 20.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderPoint {
    pub energy: f64,
    pub epsilon: f64,
    pub m_abs: f64,
    pub m_im: f64,
    /// `sup_phi` of the boundary-condition Mobius transform of `m+`.
    pub mobius: f64,
    pub truncation: usize,
    pub error_bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderViolation {
    pub energy: f64,
    pub epsilon: f64,
    pub kind: String,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HolderReport {
    pub lambda: f64,
    pub alpha: f64,
    pub energies: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Smallest `C3` with `sup_phi |...| <= C3 eps^(alpha - 1)` on the grid.
    #[serde(rename = "C3")]
    pub c3: f64,
    pub points: Vec<HolderPoint>,
    pub oracle: Vec<TruncatedMeasure>,
    pub violations: Vec<HolderViolation>,
    /// Points whose truncation error bound missed the requested tolerance.
    pub unconverged: usize,
}

/// Fits `C3` from the half-line data, then checks `|m| <= C3 eps^(alpha-1)`
/// for the whole-line m-function and `Lambda <= 2 eps Im m <= 2 C3 eps^alpha`
/// against truncated-matrix measures.
pub fn holder_check(
    lambda: f64,
    r: &RotationNumber,
    beta: &Phase,
    energies: &[f64],
    epsilon_grid: &[f64],
    alpha: f64,
    opts: &HolderOptions,
) -> Result<HolderReport> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha = {alpha} must lie in (0, 1]")));
    }
    if epsilon_grid.is_empty() || epsilon_grid.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
        return Err(invalid("epsilon grid must be non-empty and inside (0, 1]"));
    }
    let eps_min = epsilon_grid
        .iter()
        .chain(&opts.oracle_epsilons)
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let oracle_n = |eps: f64| ((opts.oracle_sites_per_eps / eps).ceil() as usize).max(200);
    let radius = opts.max_truncation.max(oracle_n(eps_min));
    let pot = LinePotential::new(r, beta, radius)?;

    let mut points = Vec::new();
    let mut unconverged = 0;
    for &e in energies {
        for &eps in epsilon_grid {
            let z = Complex64::new(e, eps);
            let n0 = ((8.0 / eps).ceil() as usize).max(200);
            let w = weyl_point_adaptive(&pot, lambda, z, n0, opts.rel_tol)?;
            if w.truncation_error_bound > opts.rel_tol * w.m_trace.norm() {
                unconverged += 1;
            }
            points.push(HolderPoint {
                energy: e,
                epsilon: eps,
                m_abs: w.m_trace.norm(),
                m_im: w.m_trace.im,
                mobius: mobius_sup(w.m_plus),
                truncation: w.truncation,
                error_bound: w.truncation_error_bound,
            });
        }
    }
    let c3 = points
        .iter()
        .map(|p| p.mobius * p.epsilon.powf(1.0 - alpha))
        .fold(0.0, f64::max);

    let mut violations = Vec::new();
    for p in &points {
        let bound = c3 * p.epsilon.powf(alpha - 1.0);
        if p.m_abs > bound * (1.0 + 1e-9) + p.error_bound {
            violations.push(HolderViolation {
                energy: p.energy,
                epsilon: p.epsilon,
                kind: "m bound".into(),
                value: p.m_abs,
                bound,
            });
        }
    }
    let mut oracle = Vec::new();
    for &e in energies {
        for &eps in &opts.oracle_epsilons {
            let t = truncated_measure(&pot, lambda, e, eps, oracle_n(eps))?;
            let im_bound = 2.0 * eps * t.m_trace.im;
            if t.measure > im_bound * (1.0 + 1e-9) + 1e-12 {
                violations.push(HolderViolation {
                    energy: e,
                    epsilon: eps,
                    kind: "measure vs 2 eps Im m".into(),
                    value: t.measure,
                    bound: im_bound,
                });
            }
            let c3_bound = 2.0 * c3 * eps.powf(alpha);
            if t.measure > c3_bound {
                violations.push(HolderViolation {
                    energy: e,
                    epsilon: eps,
                    kind: "measure vs 2 C3 eps^alpha".into(),
                    value: t.measure,
                    bound: c3_bound,
                });
            }
            oracle.push(t);
        }
    }
    Ok(HolderReport {
        lambda,
        alpha,
        energies: energies.to_vec(),
        epsilons: epsilon_grid.to_vec(),
        c3,
        points,
        oracle,
        violations,
        unconverged,
    })
}

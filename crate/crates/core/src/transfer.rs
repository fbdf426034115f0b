//! Transfer matrices and solutions of `(H - E) u = 0`.
//!
//! One site acts by `T(b) = [[E - lambda b, -1], [1, 0]]` on
//! `U(n) = (u(n), u(n-1))`, and a word `w_1 ... w_n` by the ordered product
//! `T(w_n) ... T(w_1)`.

use std::ops::Mul;

use serde::Serialize;

use crate::cf::RotationNumber;
use crate::error::{invalid, Error, Result};
use crate::words::{ensure_depth, Word};

/// Entries beyond this magnitude abort a product.
pub const OVERFLOW_LIMIT: f64 = 1e150;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransferMatrix {
    pub entries: [[f64; 2]; 2],
}

impl TransferMatrix {
    pub const IDENTITY: Self = Self {
        entries: [[1.0, 0.0], [0.0, 1.0]],
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self {
            entries: [[a, b], [c, d]],
        }
    }

    pub fn trace(&self) -> f64 {
        self.entries[0][0] + self.entries[1][1]
    }

    pub fn det(&self) -> f64 {
        let [[a, b], [c, d]] = self.entries;
        a * d - b * c
    }

    pub fn max_abs(&self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    pub fn is_finite_within(&self, limit: f64) -> bool {
        self.entries.iter().flatten().all(|x| x.is_finite() && x.abs() <= limit)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let [[a, b], [c, d]] = self.entries;
        [a * v[0] + b * v[1], c * v[0] + d * v[1]]
    }

    pub fn scale(&self, s: f64) -> Self {
        let [[a, b], [c, d]] = self.entries;
        Self::new(a * s, b * s, c * s, d * s)
    }

    /// `self^k` by repeated squaring.
    pub fn pow(&self, mut k: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::IDENTITY;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            k >>= 1;
            if k > 0 {
                base = base * base;
            }
        }
        acc
    }

    /// Frobenius norm of `self - other`.
    pub fn distance(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .flatten()
            .zip(other.entries.iter().flatten())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

impl Mul for TransferMatrix {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let [[a, b], [c, d]] = self.entries;
        let [[e, f], [g, h]] = rhs.entries;
        Self::new(
            a * e + b * g,
            a * f + b * h,
            c * e + d * g,
            c * f + d * h,
        )
    }
}

/// `T(bit)`.
pub fn step_matrix(lambda: f64, energy: f64, bit: u8) -> TransferMatrix {
    TransferMatrix::new(energy - lambda * f64::from(bit), -1.0, 1.0, 0.0)
}

/// Site-by-site product `T(w_n) ... T(w_1)`.
pub fn word_matrix(lambda: f64, energy: f64, w: &Word) -> Result<TransferMatrix> {
    let mut m = TransferMatrix::IDENTITY;
    for (i, &bit) in w.symbols().iter().enumerate() {
        m = step_matrix(lambda, energy, bit) * m;
        if !m.is_finite_within(OVERFLOW_LIMIT) {
            return Err(Error::NumericRange {
                index: i,
                context: format!("word matrix at E = {energy}"),
            });
        }
    }
    Ok(m)
}

/// [`word_matrix`] in double-double arithmetic, rounded at the end. Accurate
/// to about one ulp of the entries even when the trace is much smaller than
/// the norm.
pub fn word_matrix_compensated(lambda: f64, energy: f64, w: &Word) -> Result<TransferMatrix> {
    let mut m = DdMatrix::IDENTITY;
    for (i, &bit) in w.symbols().iter().enumerate() {
        m = DdMatrix::step(lambda, energy, bit).mul(&m);
        if !m.rounded().is_finite_within(OVERFLOW_LIMIT) {
            return Err(Error::NumericRange {
                index: i,
                context: format!("word matrix at E = {energy}"),
            });
        }
    }
    Ok(m.rounded())
}

/// `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    let bb = s - a;
    Dd {
        hi: s,
        lo: (a - (s - bb)) + (b - bb),
    }
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd { hi: s, lo: b - (s - a) }
}

impl Dd {
    const ZERO: Self = Self { hi: 0.0, lo: 0.0 };
    const ONE: Self = Self { hi: 1.0, lo: 0.0 };

    fn from(x: f64) -> Self {
        Self { hi: x, lo: 0.0 }
    }

    fn add(self, o: Self) -> Self {
        let s = two_sum(self.hi, o.hi);
        quick_two_sum(s.hi, s.lo + self.lo + o.lo)
    }

    fn mul(self, o: Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + (self.hi * o.lo + self.lo * o.hi);
        quick_two_sum(p, e)
    }

    fn value(self) -> f64 {
        self.hi + self.lo
    }
}

/// A 2x2 matrix in double-double arithmetic. The canonical recursion
/// multiplies matrices whose norms compound level after level; carrying
/// the low-order parts keeps the rounded result as accurate as the
/// exact product would be.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct DdMatrix([[Dd; 2]; 2]);

impl DdMatrix {
    const IDENTITY: Self = Self([[Dd::ONE, Dd::ZERO], [Dd::ZERO, Dd::ONE]]);

    fn step(lambda: f64, energy: f64, bit: u8) -> Self {
        let x = two_sum(energy, -lambda * f64::from(bit));
        Self([[x, Dd::from(-1.0)], [Dd::ONE, Dd::ZERO]])
    }

    fn mul(&self, rhs: &Self) -> Self {
        let (a, b) = (&self.0, &rhs.0);
        let entry = |i: usize, j: usize| a[i][0].mul(b[0][j]).add(a[i][1].mul(b[1][j]));
        Self([[entry(0, 0), entry(0, 1)], [entry(1, 0), entry(1, 1)]])
    }

    fn pow(&self, mut k: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::IDENTITY;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            base = base.mul(&base);
            k >>= 1;
        }
        acc
    }

    pub(crate) fn rounded(&self) -> TransferMatrix {
        let e = |i: usize, j: usize| self.0[i][j].value();
        TransferMatrix::new(e(0, 0), e(0, 1), e(1, 0), e(1, 1))
    }

    pub(crate) fn trace(&self) -> f64 {
        self.0[0][0].add(self.0[1][1]).value()
    }

    /// `tr(self * rhs)`, rounded once.
    pub(crate) fn product_trace(&self, rhs: &Self) -> f64 {
        self.mul(rhs).trace()
    }
}

/// `[M(s_{-1}), M(s_0), ..., M(s_n)]` from `M(s_k) = M(s_{k-2}) M(s_{k-1})^{a_k}`
/// (with `M(s_1) = M(s_{-1}) M(s_0)^{a_1 - 1}`).
///
/// Stops early when an entry passes [`OVERFLOW_LIMIT`]; the returned vector
/// then ends at the last representable level.
pub fn canonical_matrices(
    lambda: f64,
    energy: f64,
    r: &RotationNumber,
    n: usize,
) -> Result<Vec<TransferMatrix>> {
    Ok(canonical_matrices_dd(lambda, energy, r, n)?
        .iter()
        .map(DdMatrix::rounded)
        .collect())
}

pub(crate) fn canonical_matrices_dd(
    lambda: f64,
    energy: f64,
    r: &RotationNumber,
    n: usize,
) -> Result<Vec<DdMatrix>> {
    let r = ensure_depth(r, n)?;
    let mut ms = vec![DdMatrix::step(lambda, energy, 1), DdMatrix::step(lambda, energy, 0)];
    for k in 1..=n {
        let a = r.a(k).unwrap();
        let m = if k == 1 {
            ms[0].mul(&ms[1].pow(a - 1))
        } else {
            ms[k - 1].mul(&ms[k].pow(a))
        };
        if !m.rounded().is_finite_within(OVERFLOW_LIMIT) {
            break;
        }
        ms.push(m);
    }
    Ok(ms)
}

/// A normalized solution over sites `0..=N`, with `u(0) = cos phi`,
/// `u(1) = sin phi`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolutionTrajectory {
    pub lambda: f64,
    pub energy: f64,
    pub phi: f64,
    /// `v(1), ..., v(N)`
    #[serde(skip)]
    pub potential: Word,
    /// `u(0), ..., u(N)`
    pub u: Vec<f64>,
}

impl SolutionTrajectory {
    /// `N`, the last site with a known `U(n)`.
    pub fn len(&self) -> usize {
        self.u.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `U(n) = (u(n), u(n-1))` for `1 <= n <= N`.
    pub fn vector(&self, n: usize) -> [f64; 2] {
        [self.u[n], self.u[n - 1]]
    }

    /// `||U(n)||`
    pub fn vector_norm(&self, n: usize) -> f64 {
        self.u[n].hypot(self.u[n - 1])
    }

    /// Potential on sites `from..=to` (1-based, inside `1..=N`).
    pub fn potential_slice(&self, from: usize, to: usize) -> Word {
        self.potential.slice(from - 1, to + 1 - from)
    }
}

/// Propagates `U(n+1) = T(v(n)) U(n)` across the potential (sites `1..=N`).
pub fn evolve(lambda: f64, energy: f64, potential: &Word, phi: f64) -> Result<SolutionTrajectory> {
    let t = evolve_partial(lambda, energy, potential, phi)?;
    if t.len() < potential.len() {
        return Err(Error::NumericRange {
            index: t.len() + 1,
            context: format!("solution at E = {energy} left the representable range"),
        });
    }
    Ok(t)
}

/// Like [`evolve`], but stops at the last site before an entry passes
/// [`OVERFLOW_LIMIT`] instead of failing.
pub fn evolve_partial(lambda: f64, energy: f64, potential: &Word, phi: f64) -> Result<SolutionTrajectory> {
    let n = potential.len();
    if n == 0 {
        return Err(invalid("empty potential"));
    }
    let mut u = Vec::with_capacity(n + 1);
    u.push(phi.cos());
    u.push(phi.sin());
    let bits = potential.symbols();
    for site in 1..n {
        let next = (energy - lambda * f64::from(bits[site - 1])) * u[site] - u[site - 1];
        if !next.is_finite() || next.abs() > OVERFLOW_LIMIT {
            break;
        }
        u.push(next);
    }
    Ok(SolutionTrajectory {
        lambda,
        energy,
        phi,
        potential: potential.clone(),
        u,
    })
}

fn split_length(l: f64) -> Result<(usize, f64)> {
    if !(l >= 1.0) || !l.is_finite() {
        return Err(invalid(format!("L = {l} must be a finite number >= 1")));
    }
    let floor = l.floor();
    Ok((floor as usize, l - floor))
}

fn coverage_error(l: f64, n: usize) -> Error {
    Error::NumericRange {
        index: n,
        context: format!("trajectory of length {n} does not cover L = {l}"),
    }
}

/// `||u||_L = (sum_{n=0}^{[L]} |u(n)|^2 + (L - [L]) |u([L]+1)|^2)^{1/2}`
pub fn norm_u(t: &SolutionTrajectory, l: f64) -> Result<f64> {
    let (m, frac) = split_length(l)?;
    let need = if frac > 0.0 { m + 1 } else { m };
    if need > t.len() {
        return Err(coverage_error(l, t.len()));
    }
    let mut s: f64 = t.u[..=m].iter().map(|x| x * x).sum();
    if frac > 0.0 {
        s += frac * t.u[m + 1] * t.u[m + 1];
    }
    Ok(s.sqrt())
}

/// `||U||_L = (sum_{n=1}^{[L]} ||U(n)||^2 + (L - [L]) ||U([L]+1)||^2)^{1/2}`
#[allow(non_snake_case)]
pub fn norm_U(t: &SolutionTrajectory, l: f64) -> Result<f64> {
    let (m, frac) = split_length(l)?;
    let need = if frac > 0.0 { m + 1 } else { m };
    if need > t.len() {
        return Err(coverage_error(l, t.len()));
    }
    let sq = |n: usize| t.u[n] * t.u[n] + t.u[n - 1] * t.u[n - 1];
    let mut s: f64 = (1..=m).map(sq).sum();
    if frac > 0.0 {
        s += frac * sq(m + 1);
    }
    Ok(s.sqrt())
}

/// Running `||U||_n^2` for `n = 0..=N` (index 0 holds 0).
pub fn cumulative_vector_norms(t: &SolutionTrajectory) -> Vec<f64> {
    let mut out = Vec::with_capacity(t.u.len());
    out.push(0.0);
    let mut acc = 0.0;
    for n in 1..t.u.len() {
        acc += t.u[n] * t.u[n] + t.u[n - 1] * t.u[n - 1];
        out.push(acc);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn single_site_matrices() {
        let m = step_matrix(3.0, 0.7, 0);
        assert_eq!(m.entries, [[0.7, -1.0], [1.0, 0.0]]);
        let m = step_matrix(2.0, 1.0, 1);
        assert_eq!(m.entries, [[-1.0, -1.0], [1.0, 0.0]]);
        assert_eq!(m.det(), 1.0);
    }

    #[test]
    fn free_rotation_has_order_four() {
        for word in ["0000", "1010", "1111", "0110"] {
            let m = word_matrix(0.0, 0.0, &w(word)).unwrap();
            assert!(m.distance(&TransferMatrix::IDENTITY) < 1e-15);
        }
    }

    #[test]
    fn concatenation_order() {
        let u = w("10");
        let v = w("101");
        let (l, e) = (1.3, 0.4);
        let joint = word_matrix(l, e, &u.concat(&v)).unwrap();
        let split = word_matrix(l, e, &v).unwrap() * word_matrix(l, e, &u).unwrap();
        assert!(joint.distance(&split) < 1e-13);
    }

    #[test]
    fn off_spectrum_overflow_is_reported() {
        let long = w(&"1".repeat(5000));
        assert!(matches!(
            word_matrix(1.0, 10.0, &long),
            Err(Error::NumericRange { .. })
        ));
    }

    #[test]
    fn free_trajectory() {
        let t = evolve(0.0, 0.0, &w(&"0".repeat(12)), FRAC_PI_2).unwrap();
        let expect = [0.0, 1.0, 0.0, -1.0, 0.0, 1.0];
        for (n, e) in expect.iter().enumerate() {
            assert!((t.u[n] - e).abs() < 1e-15);
        }
        for n in 1..=t.len() {
            assert!((t.vector_norm(n) - 1.0).abs() < 1e-15);
        }
        assert!((norm_u(&t, 3.0).unwrap().powi(2) - 2.0).abs() < 1e-14);
        // u(2) = 0, so the fractional term adds nothing
        assert!((norm_u(&t, 1.5).unwrap().powi(2) - 1.0).abs() < 1e-14);
        assert!((norm_U(&t, 1.5).unwrap().powi(2) - 1.5).abs() < 1e-14);
        assert!((norm_U(&t, 7.25).unwrap().powi(2) - 7.25).abs() < 1e-13);
        assert!((norm_U(&t, 1.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn integer_length_needs_no_extra_site() {
        let t = evolve(1.0, 0.3, &w("0110"), 0.2).unwrap();
        assert!(norm_u(&t, 4.0).is_ok());
        assert!(norm_u(&t, 3.5).is_ok());
        assert!(norm_u(&t, 4.5).is_err());
        assert!(norm_U(&t, 0.5).is_err());
    }

    #[test]
    fn trajectory_matches_word_matrix() {
        let pot = w("1011010110110");
        let t = evolve(1.7, 0.2, &pot, 0.9).unwrap();
        let n = pot.len();
        let m = word_matrix(1.7, 0.2, &pot.slice(0, n - 1)).unwrap();
        let got = m.apply(t.vector(1));
        let want = t.vector(n);
        assert!((got[0] - want[0]).abs() < 1e-12 && (got[1] - want[1]).abs() < 1e-12);
    }

    #[test]
    fn wronskian_constant() {
        let pot = w("10110101101101011010110110101101");
        let a = evolve(2.0, 0.5, &pot, 0.0).unwrap();
        let b = evolve(2.0, 0.5, &pot, FRAC_PI_2).unwrap();
        let wr = |n: usize| a.u[n + 1] * b.u[n] - a.u[n] * b.u[n + 1];
        for n in 0..pot.len() - 1 {
            assert!((wr(n) - wr(0)).abs() < 1e-10 * (1.0 + a.u[n].abs() + b.u[n].abs()));
        }
    }

    #[test]
    fn canonical_recursion_matches_direct_products() {
        let r = RotationNumber::periodic(&[2], &[1, 3], 9).unwrap();
        let ms = canonical_matrices(1.1, 0.35, &r, 9).unwrap();
        for n in 0..=9 {
            let s = crate::words::canonical_word(&r, n as i64).unwrap();
            let direct = word_matrix(1.1, 0.35, &s).unwrap();
            let scale = 1.0 + direct.max_abs();
            assert!(ms[n + 1].distance(&direct) <= 1e-10 * scale, "level {n}");
        }
    }
}

//! Trace-map orbits, the Fricke-Vogt invariant and periodic approximant
//! spectra `sigma_n = {E : |tr M(s_n)| <= 2}`.
//!
//! Bands are located without an energy grid. The Dirichlet eigenvalues of
//! `s_n` on sites `1..q_n - 1` are the zeros of the lower left entry of
//! `M(s_n)`; there is exactly one in each closed gap, so consecutive
//! eigenvalues bracket exactly one band. Each bracket is then split at the
//! unique zero of the discriminant and both band edges are bisected.

use serde::Serialize;

use crate::cf::RotationNumber;
use crate::error::{invalid, Error, Result};
use crate::transfer::{canonical_matrices_dd, step_matrix, TransferMatrix, OVERFLOW_LIMIT};
use crate::words::{canonical_word, ensure_depth, Word};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceTriple {
    pub level: usize,
    /// `tr M(s_{n-1})`
    pub x: f64,
    /// `tr M(s_n)`
    pub y: f64,
    /// `tr M(s_n s_{n-1})`
    pub z: f64,
}

impl TraceTriple {
    pub fn max_abs(&self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceOrbit {
    pub lambda: f64,
    pub energy: f64,
    pub triples: Vec<TraceTriple>,
    /// First level whose matrices could not be represented.
    pub escaped_at: Option<usize>,
}

impl TraceOrbit {
    pub fn escaped(&self) -> bool {
        self.escaped_at.is_some()
    }
}

/// Triples for `n = 1..=depth` from the matrix recursion.
pub fn trace_orbit(lambda: f64, energy: f64, r: &RotationNumber, depth: usize) -> Result<TraceOrbit> {
    if depth < 1 {
        return Err(invalid("trace orbit needs depth >= 1"));
    }
    let ms = canonical_matrices_dd(lambda, energy, r, depth)?;
    let mut triples = Vec::with_capacity(depth);
    let mut escaped_at = None;
    for n in 1..=depth {
        // ms[k + 1] is M(s_k)
        let Some(m) = ms.get(n + 1) else {
            escaped_at = Some(n);
            break;
        };
        let prev = &ms[n];
        let t = TraceTriple {
            level: n,
            x: prev.trace(),
            y: m.trace(),
            z: prev.product_trace(m),
        };
        if !(t.max_abs() <= OVERFLOW_LIMIT) {
            escaped_at = Some(n);
            break;
        }
        triples.push(t);
    }
    Ok(TraceOrbit {
        lambda,
        energy,
        triples,
        escaped_at,
    })
}

/// `x^2 + y^2 + z^2 - x y z - lambda^2 - 4`
pub fn fricke_vogt_residual(t: &TraceTriple, lambda: f64) -> f64 {
    t.x * t.x + t.y * t.y + t.z * t.z - t.x * t.y * t.z - lambda * lambda - 4.0
}

/// A matrix stored as `exp(log_scale) * m` with `max |m_ij| = 1`.
#[derive(Debug, Clone, Copy)]
struct Scaled {
    m: TransferMatrix,
    log_scale: f64,
}

impl Scaled {
    const IDENTITY: Self = Self {
        m: TransferMatrix::IDENTITY,
        log_scale: 0.0,
    };

    fn new(m: TransferMatrix) -> Self {
        Self { m, log_scale: 0.0 }.normalized()
    }

    fn normalized(mut self) -> Self {
        let s = self.m.max_abs();
        if s > 0.0 && s.is_finite() {
            self.m = self.m.scale(1.0 / s);
            self.log_scale += s.ln();
        }
        self
    }

    fn mul(&self, rhs: &Self) -> Self {
        Self {
            m: self.m * rhs.m,
            log_scale: self.log_scale + rhs.log_scale,
        }
        .normalized()
    }

    fn pow(&self, mut k: u64) -> Self {
        let mut base = *self;
        let mut acc = Self::IDENTITY;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul(&base);
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// `s * tr - 2` evaluated without forming `tr`.
    fn signed_excess(&self, s: f64) -> f64 {
        let t = s * self.m.trace();
        if t <= 0.0 {
            return t * self.log_scale.min(700.0).exp() - 2.0;
        }
        let log_t = t.ln() + self.log_scale;
        if log_t > 700.0 {
            f64::INFINITY
        } else {
            log_t.exp() - 2.0
        }
    }

    fn trace(&self) -> f64 {
        self.m.trace() * self.log_scale.exp()
    }
}

/// Evaluates `tr M(s_n)(E)` for a fixed potential.
trait Discriminant {
    fn eval(&self, energy: f64) -> Scaled;
}

struct CanonicalDiscriminant {
    lambda: f64,
    coefficients: Vec<u64>,
}

impl Discriminant for CanonicalDiscriminant {
    fn eval(&self, energy: f64) -> Scaled {
        let mut older = Scaled::new(step_matrix(self.lambda, energy, 1));
        let mut newer = Scaled::new(step_matrix(self.lambda, energy, 0));
        for (i, &a) in self.coefficients.iter().enumerate() {
            let next = if i == 0 {
                older.mul(&newer.pow(a - 1))
            } else {
                older.mul(&newer.pow(a))
            };
            older = newer;
            newer = next;
        }
        newer
    }
}

struct WordDiscriminant {
    lambda: f64,
    word: Word,
}

impl Discriminant for WordDiscriminant {
    fn eval(&self, energy: f64) -> Scaled {
        let mut acc = Scaled::IDENTITY;
        for chunk in self.word.symbols().chunks(16) {
            let mut m = TransferMatrix::IDENTITY;
            for &b in chunk {
                m = step_matrix(self.lambda, energy, b) * m;
            }
            acc = Scaled::new(m).mul(&acc);
        }
        acc
    }
}

/// Number of eigenvalues below `energy` of the tridiagonal matrix with the
/// given diagonal and unit off-diagonal.
pub(crate) fn sturm_count(diag: &[f64], energy: f64) -> usize {
    let mut count = 0;
    let mut d = 1.0;
    for (i, &a) in diag.iter().enumerate() {
        d = if i == 0 { a - energy } else { a - energy - 1.0 / d };
        if d == 0.0 {
            d = -f64::EPSILON * (1.0 + a.abs() + energy.abs());
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// The `j`-th (1-based) eigenvalue inside `[lo, hi]`, to absolute `tol`.
pub(crate) fn sturm_eigenvalue(diag: &[f64], j: usize, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, mid) >= j {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection for the zero of a function that is `>= 0` at `pos` and `< 0`
/// at `neg` and changes sign once between them.
fn bisect(f: impl Fn(f64) -> f64, mut pos: f64, mut neg: f64, tol: f64) -> f64 {
    while (pos - neg).abs() > tol {
        let mid = 0.5 * (pos + neg);
        if mid == pos || mid == neg {
            break;
        }
        if f(mid) >= 0.0 {
            pos = mid;
        } else {
            neg = mid;
        }
    }
    0.5 * (pos + neg)
}

/// Multiple of the matrix size below which `|tr| - 2` is treated as rounding
/// noise; the recursion loses a few digits at high levels.
const UNRESOLVED_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectrumSearch {
    pub bracket: (f64, f64),
    pub tol: f64,
    /// Neighbouring bands closer than this are reported as one.
    pub merge_gap: f64,
}

impl SpectrumSearch {
    pub fn for_lambda(lambda: f64) -> Self {
        let b = 3.0 + lambda.abs();
        Self {
            bracket: (-b, b),
            tol: 1e-10,
            merge_gap: 1e-9,
        }
    }

    fn check(&self, lambda: f64) -> Result<()> {
        let need = 2.0 + lambda.abs();
        if !(self.bracket.0 <= -need && self.bracket.1 >= need) {
            return Err(invalid(format!(
                "energy bracket {:?} must contain [-{need}, {need}]",
                self.bracket
            )));
        }
        if !(self.tol > 0.0) {
            return Err(invalid("bisection tolerance must be positive"));
        }
        if !(self.merge_gap >= 0.0) {
            return Err(invalid("merge gap must be non-negative"));
        }
        Ok(())
    }
}

struct BandFinder<'a, D: Discriminant> {
    disc: &'a D,
    /// Dirichlet diagonal, sites `1..q-1`.
    diag: Vec<f64>,
    q: usize,
    search: SpectrumSearch,
}

impl<D: Discriminant> BandFinder<'_, D> {
    /// Sign of the discriminant above band `k` (1-based, ascending).
    fn sign_above(&self, k: usize) -> f64 {
        if (self.q - k) % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }

    fn dirichlet(&self, j: usize) -> f64 {
        let (lo, hi) = self.search.bracket;
        if j == 0 {
            lo
        } else if j == self.q {
            hi
        } else {
            sturm_eigenvalue(&self.diag, j, lo, hi, self.search.tol * 1e-2)
        }
    }

    fn band_between(&self, k: usize, left: f64, right: f64) -> Result<[f64; 2]> {
        let tol = self.search.tol;
        let s_right = self.sign_above(k);
        let s_left = -s_right;
        let g_left = |e: f64| self.disc.eval(e).signed_excess(s_left);
        let g_right = |e: f64| self.disc.eval(e).signed_excess(s_right);
        // s_right * tr runs from <= -2 at `left` to >= 2 at `right`
        let root = bisect(
            |e| s_right * self.disc.eval(e).m.trace(),
            right,
            left,
            tol * 1e-2,
        );
        // a Dirichlet eigenvalue may sit on a band edge, so both edges are
        // always bisected; closed gaps show up as gaps below `merge_gap`
        let lo = bisect(g_left, left, root, tol);
        let hi = bisect(g_right, right, root, tol);
        if !(lo <= root && root <= hi) {
            return Err(Error::Internal(format!(
                "band {k} edges [{lo}, {hi}] do not surround the discriminant zero {root}"
            )));
        }
        Ok([lo, hi])
    }

    fn band(&self, k: usize) -> Result<[f64; 2]> {
        self.band_between(k, self.dirichlet(k - 1), self.dirichlet(k))
    }

    fn all_bands(&self) -> Result<Vec<[f64; 2]>> {
        let mut mu = Vec::with_capacity(self.q + 1);
        for j in 0..=self.q {
            mu.push(self.dirichlet(j));
        }
        let mut bands: Vec<[f64; 2]> = Vec::with_capacity(self.q);
        for k in 1..=self.q {
            let b = self.band_between(k, mu[k - 1], mu[k])?;
            match bands.last_mut() {
                Some(last) if self.merges(k - 1, last[1], b[0], mu[k - 1]) => last[1] = b[1],
                _ => bands.push(b),
            }
        }
        Ok(bands)
    }

    /// Gap `k` spanning `[a, b]` and containing `mu` is dropped when it is
    /// narrower than `merge_gap` or when `|tr| - 2` inside it never rises
    /// above the rounding level, as happens at a tangential touch.
    fn merges(&self, k: usize, a: f64, b: f64, mu: f64) -> bool {
        let width = b - a;
        if width <= self.search.merge_gap.max(2.0 * self.search.tol) {
            return true;
        }
        let s = self.sign_above(k);
        [mu, 0.5 * (a + b)].iter().all(|&e| {
            let m = self.disc.eval(e);
            m.signed_excess(s) <= UNRESOLVED_GAP * m.log_scale.exp().max(1.0)
        })
    }
}

fn word_diagonal(lambda: f64, w: &Word) -> Vec<f64> {
    let bits = w.symbols();
    bits[..bits.len() - 1]
        .iter()
        .map(|&b| lambda * f64::from(b))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumApprox {
    pub level: usize,
    pub lambda: f64,
    pub bands: Vec<[f64; 2]>,
    pub total_measure: f64,
    #[serde(rename = "C_estimate")]
    pub trace_bound_estimate: f64,
}

impl SpectrumApprox {
    pub fn band_count(&self) -> usize {
        self.bands.len()
    }

    pub fn contains(&self, energy: f64) -> bool {
        self.bands.iter().any(|b| b[0] <= energy && energy <= b[1])
    }

    pub fn centers(&self) -> Vec<f64> {
        self.bands.iter().map(|b| 0.5 * (b[0] + b[1])).collect()
    }
}

fn canonical_finder_parts(
    lambda: f64,
    r: &RotationNumber,
    level: usize,
) -> Result<(CanonicalDiscriminant, Word)> {
    if level < 1 {
        return Err(invalid("spectrum level must be >= 1"));
    }
    let disc = canonical_discriminant(lambda, r, level)?;
    let word = canonical_word(&ensure_depth(r, level)?, level as i64)?;
    Ok((disc, word))
}

/// Bands of `sigma_level` with the empirical trace bound over them.
pub fn approximate_spectrum(
    lambda: f64,
    r: &RotationNumber,
    level: usize,
    search: SpectrumSearch,
) -> Result<SpectrumApprox> {
    let bands = spectrum_bands(lambda, r, level, search)?;
    let total_measure = bands.iter().map(|b| b[1] - b[0]).sum();
    let c = trace_bound_over(lambda, r, level, &bands, 2)?;
    Ok(SpectrumApprox {
        level,
        lambda,
        bands,
        total_measure,
        trace_bound_estimate: c.value,
    })
}

/// Bands of `sigma_level` only.
pub fn spectrum_bands(
    lambda: f64,
    r: &RotationNumber,
    level: usize,
    search: SpectrumSearch,
) -> Result<Vec<[f64; 2]>> {
    search.check(lambda)?;
    let (disc, word) = canonical_finder_parts(lambda, r, level)?;
    BandFinder {
        disc: &disc,
        diag: word_diagonal(lambda, &word),
        q: word.len(),
        search,
    }
    .all_bands()
}

/// The `k`-th band (1-based, ascending, before merging touching bands) of
/// `sigma_level`; there are `q_level` of them.
pub fn spectrum_band(
    lambda: f64,
    r: &RotationNumber,
    level: usize,
    k: usize,
    search: SpectrumSearch,
) -> Result<[f64; 2]> {
    search.check(lambda)?;
    let (disc, word) = canonical_finder_parts(lambda, r, level)?;
    if k == 0 || k > word.len() {
        return Err(invalid(format!("band index {k} outside 1..={}", word.len())));
    }
    BandFinder {
        disc: &disc,
        diag: word_diagonal(lambda, &word),
        q: word.len(),
        search,
    }
    .band(k)
}

/// Bands of the periodic operator with period word `w`.
pub fn periodic_bands(lambda: f64, w: &Word, search: SpectrumSearch) -> Result<Vec<[f64; 2]>> {
    search.check(lambda)?;
    if w.is_empty() {
        return Err(invalid("empty period word"));
    }
    let disc = WordDiscriminant {
        lambda,
        word: w.clone(),
    };
    BandFinder {
        disc: &disc,
        diag: word_diagonal(lambda, w),
        q: w.len(),
        search,
    }
    .all_bands()
}

/// `tr M(s_level)(E)` through scaled products, safe far outside the bands.
pub fn discriminant(lambda: f64, energy: f64, r: &RotationNumber, level: usize) -> Result<f64> {
    Ok(canonical_discriminant(lambda, r, level)?.eval(energy).trace())
}

/// `|tr M(s_level)(E)| <= 2`
pub fn in_approximant_spectrum(lambda: f64, energy: f64, r: &RotationNumber, level: usize) -> Result<bool> {
    let s = canonical_discriminant(lambda, r, level)?.eval(energy);
    Ok(s.signed_excess(1.0) <= 0.0 && s.signed_excess(-1.0) <= 0.0)
}

fn canonical_discriminant(lambda: f64, r: &RotationNumber, level: usize) -> Result<CanonicalDiscriminant> {
    let r = ensure_depth(r, level)?;
    Ok(CanonicalDiscriminant {
        lambda,
        coefficients: r.coefficients()[..level].to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceBound {
    pub value: f64,
    /// Level and energy where the maximum was seen.
    pub level: usize,
    pub energy: f64,
    pub samples: usize,
}

fn trace_bound_over(
    lambda: f64,
    r: &RotationNumber,
    depth: usize,
    bands: &[[f64; 2]],
    grid: usize,
) -> Result<TraceBound> {
    let mut best = TraceBound {
        value: 0.0,
        level: 1,
        energy: f64::NAN,
        samples: 0,
    };
    for b in bands {
        for i in 0..=grid + 1 {
            let e = b[0] + (b[1] - b[0]) * i as f64 / (grid + 1) as f64;
            let orbit = trace_orbit(lambda, e, r, depth)?;
            if let Some(k) = orbit.escaped_at {
                return Err(Error::Internal(format!(
                    "trace orbit escaped at level {k} for E = {e} inside a band"
                )));
            }
            best.samples += 1;
            for t in &orbit.triples {
                if t.max_abs() > best.value || best.energy.is_nan() {
                    best.value = t.max_abs();
                    best.level = t.level;
                    best.energy = e;
                }
            }
        }
    }
    Ok(best)
}

/// Largest `max(|x_n|, |y_n|, |z_n|)` over `n <= depth` and energies in the
/// level-`depth` bands: endpoints plus `grid` interior points per band.
pub fn estimate_c_lambda(lambda: f64, r: &RotationNumber, depth: usize, grid: usize) -> Result<TraceBound> {
    let bands = spectrum_bands(lambda, r, depth, SpectrumSearch::for_lambda(lambda))?;
    trace_bound_over(lambda, r, depth, &bands, grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::words::canonical_word;

    fn fib(depth: usize) -> RotationNumber {
        RotationNumber::golden_mean(depth)
    }

    #[test]
    fn parabolic_free_orbit() {
        let o = trace_orbit(0.0, 2.0, &fib(20), 20).unwrap();
        assert!(!o.escaped());
        for t in &o.triples {
            assert!((t.x - 2.0).abs() < 1e-9 && (t.y - 2.0).abs() < 1e-9 && (t.z - 2.0).abs() < 1e-9);
            assert!(fricke_vogt_residual(t, 0.0).abs() < 1e-8);
        }
    }

    #[test]
    fn free_orbit_at_zero_energy() {
        let o = trace_orbit(0.0, 0.0, &fib(12), 12).unwrap();
        for t in &o.triples {
            assert!(fricke_vogt_residual(t, 0.0).abs() < 1e-12);
        }
    }

    #[test]
    fn orbit_shifts_and_residual() {
        let o = trace_orbit(1.3, 0.4, &fib(15), 15).unwrap();
        for pair in o.triples.windows(2) {
            assert_eq!(pair[1].x, pair[0].y);
        }
        let t = o.triples[4];
        let bumped = TraceTriple { x: t.x + 1.0, ..t };
        assert!(fricke_vogt_residual(&t, 1.3).abs() < 1e-9);
        assert!(fricke_vogt_residual(&bumped, 1.3).abs() > 1e-3);
    }

    #[test]
    fn escape_far_outside() {
        let o = trace_orbit(2.0, 9.0, &fib(40), 40).unwrap();
        let k = o.escaped_at.expect("must escape");
        assert!(k <= 15);
        assert_eq!(o.triples.len(), k - 1);
    }

    #[test]
    fn free_spectrum_is_one_band() {
        for level in [1, 3, 7, 12] {
            let bands = spectrum_bands(0.0, &fib(level), level, SpectrumSearch::for_lambda(0.0)).unwrap();
            assert_eq!(bands.len(), 1, "level {level}: {bands:?}");
            assert!((bands[0][0] + 2.0).abs() < 1e-9 && (bands[0][1] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn band_edges_hit_two() {
        let r = fib(10);
        let bands = spectrum_bands(2.0, &r, 10, SpectrumSearch::for_lambda(2.0)).unwrap();
        assert_eq!(bands.len(), 89);
        for b in &bands {
            for e in b {
                let y = discriminant(2.0, *e, &r, 10).unwrap();
                assert!((y.abs() - 2.0).abs() < 1e-5, "{e}: {y}");
            }
        }
        for pair in bands.windows(2) {
            assert!(pair[0][1] < pair[1][0]);
        }
    }

    #[test]
    fn single_band_matches_full_list() {
        let r = fib(9);
        let s = SpectrumSearch::for_lambda(1.0);
        let bands = spectrum_bands(1.0, &r, 9, s).unwrap();
        for k in [1, 17, 55] {
            let b = spectrum_band(1.0, &r, 9, k, s).unwrap();
            assert!((b[0] - bands[k - 1][0]).abs() < 1e-9 && (b[1] - bands[k - 1][1]).abs() < 1e-9);
        }
    }

    #[test]
    fn word_and_canonical_paths_agree() {
        let r = RotationNumber::periodic(&[], &[2, 1], 8).unwrap();
        let s = SpectrumSearch::for_lambda(1.5);
        let a = spectrum_bands(1.5, &r, 6, s).unwrap();
        let w = canonical_word(&r, 6).unwrap();
        let b = periodic_bands(1.5, &w, s).unwrap();
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert!((x[0] - y[0]).abs() < 1e-9 && (x[1] - y[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn bad_bracket_rejected() {
        let s = SpectrumSearch {
            bracket: (-3.0, 3.0),
            ..SpectrumSearch::for_lambda(2.0)
        };
        assert!(matches!(spectrum_bands(2.0, &fib(5), 5, s), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn free_trace_bound_is_two() {
        let c = estimate_c_lambda(0.0, &fib(10), 10, 8).unwrap();
        assert!((c.value - 2.0).abs() < 1e-8, "{c:?}");
    }

    #[test]
    fn far_outside_is_out() {
        assert!(!in_approximant_spectrum(2.0, 50.0, &fib(30), 30).unwrap());
        assert!(in_approximant_spectrum(0.0, 0.3, &fib(30), 30).unwrap());
    }
}

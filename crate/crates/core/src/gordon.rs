//! Gordon squares and mass reproduction.
//!
//! If `v(j..j+2k-1)` is a square `ww` then `U(j+2k) = M(w)^2 U(j)`, and
//! Cayley-Hamilton gives `U(j+2k) - tr M(w) U(j+k) + U(j) = 0`. With
//! `|tr M(w)| <= C` this keeps a fixed share of the mass of `U` on `1..l`
//! alive on `l+1..l+2k`.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::cf::RotationNumber;
use crate::error::{invalid, Error, Result};
use crate::traces::in_approximant_spectrum;
use crate::transfer::{evolve_partial, norm_U, word_matrix, SolutionTrajectory};
use crate::words::{
    canonical_word, ensure_depth, is_conjugate, n_partition, potential_window, BlockLabel,
    NPartition, Phase, Word,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GordonCase {
    One,
    Two,
    ThreeOne,
    ThreeTwoOne,
    ThreeTwoTwo,
}

impl GordonCase {
    pub const ALL: [GordonCase; 5] = [
        GordonCase::One,
        GordonCase::Two,
        GordonCase::ThreeOne,
        GordonCase::ThreeTwoOne,
        GordonCase::ThreeTwoTwo,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            GordonCase::One => "1",
            GordonCase::Two => "2",
            GordonCase::ThreeOne => "3.1",
            GordonCase::ThreeTwoOne => "3.2.1",
            GordonCase::ThreeTwoTwo => "3.2.2",
        }
    }
}

impl fmt::Display for GordonCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl Serialize for GordonCase {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// The word whose square the window is conjugate to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquareClass {
    /// `(s_m)^2`
    Single(usize),
    /// `(s_{m-1} s_m)^2`
    Pair(usize),
}

impl SquareClass {
    /// The half-word `s_m` or `s_{m-1} s_m`.
    pub fn half_word(&self, r: &RotationNumber) -> Result<Word> {
        match *self {
            SquareClass::Single(m) => canonical_word(r, m as i64),
            SquareClass::Pair(m) => {
                Ok(canonical_word(r, m as i64 - 1)?.concat(&canonical_word(r, m as i64)?))
            }
        }
    }

    pub fn half_len(&self, r: &RotationNumber) -> Result<usize> {
        let q = |m: usize| {
            r.q_usize(m)
                .ok_or_else(|| Error::Resource(format!("q_{m} does not fit in memory")))
        };
        match *self {
            SquareClass::Single(m) => q(m),
            SquareClass::Pair(m) => Ok(q(m - 1)? + q(m)?),
        }
    }
}

impl fmt::Display for SquareClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SquareClass::Single(m) => write!(f, "(s_{m})^2"),
            SquareClass::Pair(m) => write!(f, "(s_{} s_{m})^2", m - 1),
        }
    }
}

impl Serialize for SquareClass {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SquareWitness {
    #[serde(rename = "case")]
    pub case_label: GordonCase,
    pub l: usize,
    pub k: usize,
    pub square_class: SquareClass,
    pub level: usize,
}

fn label(p: &NPartition, j: isize) -> Result<BlockLabel> {
    Ok(p.complete_block(j)?.label)
}

fn partition_window(r: &RotationNumber, n: usize) -> Result<std::ops::RangeInclusive<i64>> {
    let q = r
        .q_usize(n + 2)
        .ok_or_else(|| Error::Resource(format!("q_{} does not fit in memory", n + 2)))?;
    let w = 6 * q as i64 + 16;
    Ok(-w..=w)
}

/// Runs the case analysis on the level-`n` and level-`(n+1)` partitions and
/// validates the resulting square against the potential.
pub fn find_square(r: &RotationNumber, beta: &Phase, n: usize) -> Result<SquareWitness> {
    use BlockLabel::*;
    if n < 4 {
        return Err(invalid(format!("square search needs n >= 4, got {n}")));
    }
    let r = ensure_depth(r, n + 3)?;
    let q = |m: usize| r.q_usize(m).unwrap();
    let window = partition_window(&r, n)?;
    let pn = n_partition(&r, beta, n, window.clone())?;

    let (case, l, k, class) = match (label(&pn, 0)?, label(&pn, 1)?) {
        (Previous, _) => (GordonCase::One, q(n - 4), q(n - 1), SquareClass::Single(n - 1)),
        (Current, Current) => (GordonCase::Two, q(n - 3), q(n), SquareClass::Single(n)),
        (Current, Previous) => {
            let pm = n_partition(&r, beta, n + 1, window)?;
            if label(&pm, 0)? != Current {
                return Err(Error::Internal(format!(
                    "level-{} block z'_0 is not s_{}",
                    n + 1,
                    n + 1
                )));
            }
            match label(&pm, 1)? {
                Current => (
                    GordonCase::ThreeOne,
                    q(n - 2),
                    q(n + 1),
                    SquareClass::Single(n + 1),
                ),
                Previous => {
                    if label(&pm, 2)? != Current {
                        return Err(Error::Internal(format!(
                            "level-{} block z'_2 is not s_{} after z'_1 = s_{n}",
                            n + 1,
                            n + 1
                        )));
                    }
                    let sub = match label(&pm, 3)? {
                        Previous => (GordonCase::ThreeTwoOne, q(n - 1)),
                        Current => (GordonCase::ThreeTwoTwo, q(n - 3)),
                    };
                    (sub.0, sub.1, q(n) + q(n + 1), SquareClass::Pair(n + 1))
                }
            }
        }
    };
    let witness = SquareWitness {
        case_label: case,
        l,
        k,
        square_class: class,
        level: n,
    };
    let potential = potential_window(&r, beta, 1, (l + 2 * k) as i64)?;
    check_witness(&witness, &r, &potential)?;
    Ok(witness)
}

/// Checks literally that `v(j..j+2k-1)` is `ww` with `w` conjugate to the
/// declared class for every `j <= l`; `potential` holds `v(1), v(2), ...`.
pub fn check_witness(w: &SquareWitness, r: &RotationNumber, potential: &Word) -> Result<()> {
    let r = ensure_depth(r, w.level + 2)?;
    let (l, k) = (w.l, w.k);
    if potential.len() < l + 2 * k - 1 {
        return Err(invalid(format!(
            "potential of length {} does not cover l + 2k - 1 = {}",
            potential.len(),
            l + 2 * k - 1
        )));
    }
    if l > k {
        return Err(Error::Validation {
            block: 0,
            reason: format!("l = {l} exceeds k = {k}"),
        });
    }
    if w.square_class.half_len(&r)? != k {
        return Err(Error::Validation {
            block: 0,
            reason: format!("k = {k} differs from |half of {}|", w.square_class),
        });
    }
    let class = w.square_class.half_word(&r)?;
    let v = potential.symbols();
    // sites 1..l+2k-1 must have period k
    for i in 0..l + k - 1 {
        if v[i] != v[i + k] {
            return Err(Error::Validation {
                block: i + 1,
                reason: format!("v({}) != v({}) inside the claimed square", i + 1, i + 1 + k),
            });
        }
    }
    // with period k every window is a rotation of the first half
    let half = potential.slice(0, k);
    if is_conjugate(&half, &class).is_none() {
        return Err(Error::Validation {
            block: 1,
            reason: format!("half-word is not conjugate to {}", w.square_class),
        });
    }
    Ok(())
}

fn window_is_square(t: &SolutionTrajectory, j: usize, k: usize) -> Result<()> {
    if j < 1 || j + 2 * k > t.len() {
        return Err(invalid(format!(
            "trajectory of length {} does not cover U({})",
            t.len(),
            j + 2 * k
        )));
    }
    let v = t.potential.symbols();
    if (j..j + k).any(|i| v[i - 1] != v[i + k - 1]) {
        return Err(invalid(format!("v({j}..{}) is not a square", j + 2 * k - 1)));
    }
    Ok(())
}

/// `||U(j+2k) - tr M(v(j..j+k-1)) U(j+k) + U(j)||`
pub fn reproduction_residual(t: &SolutionTrajectory, j: usize, k: usize) -> Result<f64> {
    window_is_square(t, j, k)?;
    let tr = word_matrix(t.lambda, t.energy, &t.potential_slice(j, j + k - 1))?.trace();
    Ok(residual_with_trace(t, j, k, tr))
}

fn residual_with_trace(t: &SolutionTrajectory, j: usize, k: usize, tr: f64) -> f64 {
    let (a, b, c) = (t.vector(j + 2 * k), t.vector(j + k), t.vector(j));
    (a[0] - tr * b[0] + c[0]).hypot(a[1] - tr * b[1] + c[1])
}

/// `D^2 = 1 + (1/(2C))^2`
pub fn growth_factor(c: f64) -> f64 {
    (1.0 + 1.0 / (4.0 * c * c)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthReport {
    /// `|tr M(w)|` for the half-word of the square.
    pub trace: f64,
    pub trace_within_bound: bool,
    /// Sites `j <= l` where `max(||U(j+k)||, ||U(j+2k)||) < ||U(j)|| / (2C)`.
    pub pointwise_violations: Vec<usize>,
    /// `||U||_{l+2k} / ||U||_l`
    pub ratio: f64,
    pub d: f64,
    /// Largest reproduction residual relative to the window scale.
    pub max_relative_residual: f64,
}

impl GrowthReport {
    pub fn holds(&self) -> bool {
        self.trace_within_bound && self.pointwise_violations.is_empty() && self.ratio >= self.d
    }
}

/// Checks the pointwise bound and `||U||_{l+2k} >= D ||U||_l` for a witness.
pub fn local_growth_check(t: &SolutionTrajectory, w: &SquareWitness, c: f64) -> Result<GrowthReport> {
    let (l, k) = (w.l, w.k);
    if l + 2 * k > t.len() {
        return Err(invalid(format!(
            "trajectory of length {} does not cover l + 2k = {}",
            t.len(),
            l + 2 * k
        )));
    }
    if !(c > 0.0) {
        return Err(invalid("trace bound C must be positive"));
    }
    let tr = word_matrix(t.lambda, t.energy, &t.potential_slice(1, k))?.trace();
    let mut pointwise_violations = Vec::new();
    let mut max_relative_residual: f64 = 0.0;
    for j in 1..=l {
        window_is_square(t, j, k)?;
        let (a, b, c0) = (t.vector_norm(j + 2 * k), t.vector_norm(j + k), t.vector_norm(j));
        if a.max(b) < c0 / (2.0 * c) {
            pointwise_violations.push(j);
        }
        // conjugate half-words share the trace
        let res = residual_with_trace(t, j, k, tr);
        let scale = a.max(b).max(c0) * (1.0 + tr.abs());
        max_relative_residual = max_relative_residual.max(res / scale);
    }
    let ratio = norm_U(t, (l + 2 * k) as f64)? / norm_U(t, l as f64)?;
    Ok(GrowthReport {
        trace: tr.abs(),
        trace_within_bound: tr.abs() <= c,
        pointwise_violations,
        ratio,
        d: growth_factor(c),
        max_relative_residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingOptions {
    /// Number of equispaced boundary angles in `[0, pi)`.
    pub angles: usize,
    /// Level of the bands the energy was drawn from.
    pub band_level: usize,
    /// How many levels deeper to test membership after a violation.
    pub refine_levels: usize,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        Self {
            angles: 16,
            band_level: 16,
            refine_levels: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingRow {
    pub n: usize,
    pub witness: SquareWitness,
    /// `min_phi ||U||_{q_n} / ||U||_{q_{n-8}}`
    pub min_ratio: f64,
    /// `min_phi ||U||_{q_n}`
    pub min_norm: f64,
    pub max_relative_residual: f64,
    pub max_trace: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub n: usize,
    pub phi: f64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingReport {
    pub lambda: f64,
    pub energy: f64,
    pub beta: String,
    pub c: f64,
    pub d: f64,
    pub in_bands: bool,
    pub rows: Vec<ScalingRow>,
    /// Last level the trajectories reached before overflow, if short.
    pub truncated_at: Option<usize>,
    pub violations: Vec<Violation>,
    /// First deeper level whose bands no longer contain the energy.
    pub ejected_at: Option<usize>,
}

impl ScalingReport {
    /// Violations that a deeper band level does not explain.
    pub fn surviving_violations(&self) -> usize {
        if self.ejected_at.is_some() {
            0
        } else {
            self.violations.len()
        }
    }
}

pub fn angles(count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| std::f64::consts::PI * i as f64 / count as f64)
        .collect()
}

/// Ratios `||U||_{q_n} / ||U||_{q_{n-8}}` for `8 <= n <= n_max` over a
/// sample of boundary angles, with the level-`(n-4)` square checked on each
/// trajectory.
pub fn scaling_check(
    lambda: f64,
    r: &RotationNumber,
    beta: &Phase,
    energy: f64,
    n_max: usize,
    c: f64,
    opts: &ScalingOptions,
) -> Result<ScalingReport> {
    if n_max < 8 {
        return Err(invalid(format!("scaling check needs n_max >= 8, got {n_max}")));
    }
    if opts.angles == 0 {
        return Err(invalid("at least one boundary angle is needed"));
    }
    let r = ensure_depth(
        r,
        (n_max + 3).max(opts.band_level + opts.refine_levels + 1),
    )?;
    let len = r
        .q_usize(n_max)
        .ok_or_else(|| Error::Resource(format!("q_{n_max} does not fit in memory")))?;
    let potential = potential_window(&r, beta, 1, len as i64 + 1)?;
    let witnesses = (8..=n_max)
        .map(|n| find_square(&r, beta, n - 4))
        .collect::<Result<Vec<_>>>()?;
    let trajectories = angles(opts.angles)
        .into_iter()
        .map(|phi| evolve_partial(lambda, energy, &potential, phi))
        .collect::<Result<Vec<_>>>()?;
    let reach = trajectories.iter().map(|t| t.len()).min().unwrap();

    let d = growth_factor(c);
    let mut rows = Vec::new();
    let mut violations = Vec::new();
    let mut truncated_at = None;
    for (n, witness) in (8..=n_max).zip(witnesses) {
        let qn = r.q_usize(n).unwrap();
        if qn > reach {
            truncated_at = Some(n - 1);
            break;
        }
        let q8 = r.q_usize(n - 8).unwrap();
        let mut row = ScalingRow {
            n,
            witness: witness.clone(),
            min_ratio: f64::INFINITY,
            min_norm: f64::INFINITY,
            max_relative_residual: 0.0,
            max_trace: 0.0,
            violations: 0,
        };
        for t in &trajectories {
            let top = norm_U(t, qn as f64)?;
            let ratio = top / norm_U(t, q8 as f64)?;
            row.min_ratio = row.min_ratio.min(ratio);
            row.min_norm = row.min_norm.min(top);
            let g = local_growth_check(t, &witness, c)?;
            row.max_relative_residual = row.max_relative_residual.max(g.max_relative_residual);
            row.max_trace = row.max_trace.max(g.trace);
            let mut reasons = Vec::new();
            if ratio < d {
                reasons.push(format!("ratio {ratio} < D = {d}"));
            }
            if !g.holds() {
                reasons.push(format!(
                    "square at level {}: trace {} (C = {c}), {} pointwise failures, ratio {}",
                    n - 4,
                    g.trace,
                    g.pointwise_violations.len(),
                    g.ratio
                ));
            }
            if !reasons.is_empty() {
                row.violations += 1;
                violations.push(Violation {
                    n,
                    phi: t.phi,
                    reason: reasons.join("; "),
                });
            }
        }
        rows.push(row);
    }

    let in_bands = in_approximant_spectrum(lambda, energy, &r, opts.band_level)?;
    let mut ejected_at = None;
    if !violations.is_empty() {
        for m in opts.band_level..=opts.band_level + opts.refine_levels {
            if !in_approximant_spectrum(lambda, energy, &r, m)? {
                ejected_at = Some(m);
                break;
            }
        }
    }
    Ok(ScalingReport {
        lambda,
        energy,
        beta: beta.to_string(),
        c,
        d,
        in_bands,
        rows,
        truncated_at,
        violations,
        ejected_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transfer::evolve;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn growth_factor_formula() {
        assert!((growth_factor(2.0).powi(2) - 1.0625).abs() < 1e-15);
        assert!(growth_factor(1e8) - 1.0 < 1e-15);
    }

    #[test]
    fn fibonacci_origin_square() {
        let r = RotationNumber::golden_mean(20);
        let w = find_square(&r, &Phase::zero(), 4).unwrap();
        assert_eq!(w.level, 4);
        let pot = potential_window(&r, &Phase::zero(), 1, (w.l + 2 * w.k) as i64).unwrap();
        check_witness(&w, &r, &pot).unwrap();
        assert!(w.l + 2 * w.k <= 2 * (8 + 5) + 3);
    }

    #[test]
    fn corrupted_witness_fails() {
        let r = RotationNumber::golden_mean(20);
        let w = find_square(&r, &Phase::zero(), 6).unwrap();
        let pot = potential_window(&r, &Phase::zero(), 1, 200).unwrap();
        let bad = SquareWitness { k: w.k + 1, ..w.clone() };
        assert!(check_witness(&bad, &r, &pot).is_err());
        let mut bits = pot.symbols().to_vec();
        bits[w.k] ^= 1;
        assert!(check_witness(&w, &r, &Word::new(bits).unwrap()).is_err());
    }

    #[test]
    fn free_residual_vanishes() {
        let pot: Word = "0".repeat(64).parse().unwrap();
        let t = evolve(0.0, 0.0, &pot, 0.4).unwrap();
        for k in [2, 4, 6] {
            assert!(reproduction_residual(&t, 3, k).unwrap() < 1e-14);
        }
    }

    #[test]
    fn off_by_one_residual_is_large() {
        let r = RotationNumber::golden_mean(20);
        let w = find_square(&r, &Phase::zero(), 6).unwrap();
        let pot = potential_window(&r, &Phase::zero(), 1, 400).unwrap();
        let t = evolve(1.0, 0.3, &pot, FRAC_PI_2).unwrap();
        assert!(reproduction_residual(&t, 1, w.k).unwrap() < 1e-9);
        assert!(matches!(reproduction_residual(&t, 1, w.k + 1), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn free_growth_trivial() {
        let r = RotationNumber::golden_mean(20);
        let w = find_square(&r, &Phase::zero(), 5).unwrap();
        let pot = potential_window(&r, &Phase::zero(), 1, 100).unwrap();
        let t = evolve(0.0, 0.7, &pot, 0.3).unwrap();
        let g = local_growth_check(&t, &w, 2.0).unwrap();
        assert!(g.trace_within_bound && g.pointwise_violations.is_empty());
    }

    #[test]
    fn silver_mean_never_hits_case_three_two_one() {
        let r = RotationNumber::silver_mean(20);
        for i in 0..40 {
            let beta = Phase::rational(i, 40);
            for n in 4..=7 {
                let w = find_square(&r, &beta, n).unwrap();
                assert_ne!(w.case_label, GordonCase::ThreeTwoOne);
            }
        }
    }
}

//! Sturmian symbolic dynamics.
//!
//! The potential is `v(n) = chi_[1-theta, 1)(n theta + beta mod 1)`, which is
//! the same as `floor((n+1) theta + beta) - floor(n theta + beta)`. The floors
//! are decided exactly: theta is only known to lie in the open interval
//! spanned by two consecutive convergent bounds, and a floor is accepted only
//! when no integer falls inside the image of that interval.

use std::fmt;
use std::ops::RangeInclusive;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::cf::{RotationNumber, Tail};
use crate::error::{invalid, Error, Result};

/// Longest canonical word built without an explicit budget.
pub const DEFAULT_LENGTH_BUDGET: usize = 10_000_000;

/// Finite word over `{0, 1}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word(Vec<u8>);

impl Word {
    pub fn new(symbols: Vec<u8>) -> Result<Self> {
        if let Some(i) = symbols.iter().position(|&b| b > 1) {
            return Err(invalid(format!("symbol {} at {i} is not 0 or 1", symbols[i])));
        }
        Ok(Self(symbols))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    pub fn symbols(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = Vec::with_capacity(self.len() + other.len());
        v.extend_from_slice(&self.0);
        v.extend_from_slice(&other.0);
        Word(v)
    }

    pub fn repeat(&self, times: usize) -> Word {
        Word(self.0.repeat(times))
    }

    pub fn is_prefix_of(&self, other: &Word) -> bool {
        other.0.starts_with(&self.0)
    }

    /// Sub-word `[start, start + len)`.
    pub fn slice(&self, start: usize, len: usize) -> Word {
        Word(self.0[start..start + len].to_vec())
    }

    pub(crate) fn ascii(&self) -> String {
        self.0.iter().map(|&b| if b == 0 { '0' } else { '1' }).collect()
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.ascii())
    }
}

impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(invalid(format!("symbol {other:?} is not 0 or 1"))),
            })
            .collect::<Result<Vec<u8>>>()
            .map(Word)
    }
}

impl Serialize for Word {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.ascii())
    }
}

/// `w^R`.
pub fn reverse(w: &Word) -> Word {
    Word(w.0.iter().rev().copied().collect())
}

/// `Some(i)` when `w = v_i ... v_n v_1 ... v_{i-1}` (1-based `i`), `None`
/// when `w` is not a cyclic rotation of `v`. Two empty words are conjugate
/// with `i = 1`.
pub fn is_conjugate(w: &Word, v: &Word) -> Option<usize> {
    if w.len() != v.len() {
        return None;
    }
    if w.is_empty() {
        return Some(1);
    }
    let doubled = v.concat(v).ascii();
    let target = w.ascii();
    doubled[..2 * v.len() - 1].find(&target).map(|r| r + 1)
}

/// The phase `beta = constant + theta_coeff * theta`.
///
/// Only `beta mod 1` matters for the potential. Keeping a `theta` component
/// lets orbit points such as `1 - k theta` (and `theta / 2`) be handled
/// without rounding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Phase {
    pub constant: BigRational,
    pub theta_coeff: BigRational,
}

impl Phase {
    pub fn zero() -> Self {
        Self::rational(0, 1)
    }

    pub fn rational(p: i64, q: i64) -> Self {
        Self {
            constant: BigRational::new(p.into(), q.into()),
            theta_coeff: BigRational::zero(),
        }
    }

    /// `beta = 1 - k theta (mod 1)`.
    pub fn orbit(k: i64) -> Self {
        Self {
            constant: BigRational::one(),
            theta_coeff: BigRational::from_integer((-k).into()),
        }
    }

    /// `beta = (p/q) theta`.
    pub fn theta_multiple(p: i64, q: i64) -> Self {
        Self {
            constant: BigRational::zero(),
            theta_coeff: BigRational::new(p.into(), q.into()),
        }
    }

    /// `beta mod 1` as a float, given an approximation of theta.
    pub fn approx(&self, theta: f64) -> f64 {
        let v = rat_to_f64(&self.constant) + rat_to_f64(&self.theta_coeff) * theta;
        v.rem_euclid(1.0)
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.theta_coeff.is_zero() {
            write!(f, "{}", self.constant)
        } else if self.constant.is_zero() {
            write!(f, "theta*{}", self.theta_coeff)
        } else {
            write!(f, "{}+theta*{}", self.constant, self.theta_coeff)
        }
    }
}

impl FromStr for Phase {
    type Err = Error;

    /// Accepts `3/7`, `0.25`, `orbit:k`, `theta*1/2` and `1/3+theta*2`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(k) = s.strip_prefix("orbit:") {
            let k: i64 = k.parse().map_err(|_| invalid(format!("bad orbit index {k:?}")))?;
            return Ok(Self::orbit(k));
        }
        let (constant, coeff) = match s.find("theta*") {
            None => (s, None),
            Some(pos) => {
                let head = s[..pos].trim_end_matches('+');
                (head, Some(&s[pos + "theta*".len()..]))
            }
        };
        Ok(Self {
            constant: if constant.is_empty() {
                BigRational::zero()
            } else {
                parse_rational(constant)?
            },
            theta_coeff: match coeff {
                Some(c) => parse_rational(c)?,
                None => BigRational::zero(),
            },
        })
    }
}

/// Exact rational from `p/q`, an integer, or a decimal literal.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || invalid(format!("cannot parse {s:?} as a rational"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let int_part: BigInt = match int.trim_start_matches(['-', '+']) {
            "" => BigInt::zero(),
            digits => digits.parse().map_err(|_| bad())?,
        };
        if !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let frac_part: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10), frac.len());
        let mag = BigRational::new(int_part * &scale + frac_part, scale);
        return Ok(if negative { -mag } else { mag });
    }
    s.parse::<BigInt>()
        .map(BigRational::from_integer)
        .map_err(|_| bad())
}

pub(crate) fn rat_to_f64(x: &BigRational) -> f64 {
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => {
            let shift = x.denom().bits().saturating_sub(60);
            let n = (x.numer() >> shift).to_f64().unwrap_or(0.0);
            let d = (x.denom() >> shift).to_f64().unwrap_or(1.0);
            n / d
        }
    }
}

/// Rotation number with at least `depth` coefficients, unrolling a
/// periodic tail when needed.
pub(crate) fn ensure_depth(r: &RotationNumber, depth: usize) -> Result<RotationNumber> {
    if r.depth() >= depth {
        Ok(r.clone())
    } else {
        r.with_depth(depth)
    }
}

/// The canonical word `s_n` (`n >= -1`) within the default length budget.
pub fn canonical_word(r: &RotationNumber, n: i64) -> Result<Word> {
    canonical_word_with_budget(r, n, DEFAULT_LENGTH_BUDGET)
}

/// `s_{-1} = 1`, `s_0 = 0`, `s_1 = s_0^{a_1 - 1} s_{-1}`,
/// `s_n = s_{n-1}^{a_n} s_{n-2}`.
pub fn canonical_word_with_budget(r: &RotationNumber, n: i64, budget: usize) -> Result<Word> {
    if n < -1 {
        return Err(invalid(format!("canonical words start at s_-1, got s_{n}")));
    }
    if n == -1 {
        return Ok(Word(vec![1]));
    }
    let n = n as usize;
    let r = ensure_depth(r, n)?;
    let len = r
        .q_usize(n)
        .filter(|&q| q <= budget)
        .ok_or_else(|| Error::Resource(format!("s_{n} has length {} > budget {budget}", r.q(n).unwrap())))?;
    let words = canonical_words_upto(&r, n);
    debug_assert_eq!(words[n + 1].len(), len);
    Ok(words.into_iter().nth(n + 1).unwrap())
}

/// `[s_{-1}, s_0, ..., s_n]`; the caller has checked the budget.
pub(crate) fn canonical_words_upto(r: &RotationNumber, n: usize) -> Vec<Word> {
    let mut words = vec![Word(vec![1]), Word(vec![0])];
    for k in 1..=n {
        let a = r.a(k).expect("depth checked by caller") as usize;
        let w = if k == 1 {
            words[1].repeat(a - 1).concat(&words[0])
        } else {
            words[k].repeat(a).concat(&words[k - 1])
        };
        words.push(w);
    }
    words
}

/// Checks `s_n s_{n+1} = s_{n+1} s_{n-1}^{a_n - 1} s_{n-2} s_{n-1}` as strings.
pub fn verify_concat_identity(r: &RotationNumber, n: usize) -> Result<bool> {
    verify_concat_identity_with_budget(r, n, DEFAULT_LENGTH_BUDGET)
}

/// [`verify_concat_identity`] with an explicit bound on `q_{n+1}`.
pub fn verify_concat_identity_with_budget(r: &RotationNumber, n: usize, budget: usize) -> Result<bool> {
    if n < 2 {
        return Err(invalid("the concatenation identity needs n >= 2"));
    }
    let r = ensure_depth(r, n + 1)?;
    if !r.q_usize(n + 1).is_some_and(|q| q <= budget) {
        return Err(Error::Resource(format!("s_{} exceeds the length budget", n + 1)));
    }
    let w = canonical_words_upto(&r, n + 1);
    // w[k + 1] = s_k
    let s = |k: usize| &w[k + 1];
    let a = r.a(n).unwrap() as usize;
    let lhs = s(n).concat(s(n + 1));
    let rhs = s(n + 1)
        .concat(&s(n - 1).repeat(a - 1))
        .concat(s(n - 2))
        .concat(s(n - 1));
    Ok(lhs == rhs)
}

/// Exact floors of `m theta + beta` for `m` in `from..=to`, using the
/// convergent enclosure of `r`. `Err(m)` names the first undecidable site.
fn exact_floors(
    r: &RotationNumber,
    beta: &Phase,
    from: i64,
    to: i64,
) -> Result<std::result::Result<Vec<BigInt>, i64>> {
    let (lo, hi) = r.enclosure()?;
    let c0 = &beta.constant;
    let c1 = &beta.theta_coeff;
    let d = c0.denom() * c1.denom();
    let c1_num = c1.numer() * c0.denom(); // (c1 * d)
    let c0_num = c0.numer() * c1.denom(); // (c0 * d)
    let c0_floor = c0.numer().div_floor(c0.denom());

    // N(m) = (m d + c1 d) P + c0 d Q over the denominator d Q.
    struct Track {
        quot: BigInt,
        rem: BigInt,
        step_quot: BigInt,
        step_rem: BigInt,
        modulus: BigInt,
    }
    let track = |theta: &BigRational| {
        let p = theta.numer();
        let q = theta.denom();
        let modulus = &d * q;
        let start = (BigInt::from(from) * &d + &c1_num) * p + &c0_num * q;
        let (quot, rem) = start.div_mod_floor(&modulus);
        let (step_quot, step_rem) = (&d * p).div_mod_floor(&modulus);
        Track {
            quot,
            rem,
            step_quot,
            step_rem,
            modulus,
        }
    };
    let mut t_lo = track(&lo);
    let mut t_hi = track(&hi);
    let advance = |t: &mut Track| {
        t.quot += &t.step_quot;
        t.rem += &t.step_rem;
        if t.rem >= t.modulus {
            t.rem -= &t.modulus;
            t.quot += 1;
        }
    };

    let mut out = Vec::with_capacity((to - from + 1).max(0) as usize);
    for m in from..=to {
        // sign of (m + c1) decides which end of the theta-interval is lower
        let slope = BigInt::from(m) * &d + &c1_num;
        let floor = match slope.sign() {
            num_bigint::Sign::NoSign => c0_floor.clone(),
            sign => {
                let (low, high) = if sign == num_bigint::Sign::Plus {
                    (&t_lo, &t_hi)
                } else {
                    (&t_hi, &t_lo)
                };
                let ceil_high = if high.rem.is_zero() {
                    high.quot.clone()
                } else {
                    &high.quot + 1
                };
                if low.quot.clone() + 1 != ceil_high {
                    return Ok(Err(m));
                }
                low.quot.clone()
            }
        };
        out.push(floor);
        advance(&mut t_lo);
        advance(&mut t_hi);
    }
    Ok(Ok(out))
}

/// Depth whose denominator is at least `bound`, unrolling periodic tails.
fn depth_for_bound(r: &RotationNumber, bound: &BigUint) -> Result<RotationNumber> {
    if let Some(n) = r.level_with_denominator_at_least(bound) {
        return r.with_depth(n.max(1));
    }
    match r.tail() {
        Tail::Unknown => Ok(r.clone()),
        Tail::Periodic { .. } => {
            let mut depth = r.depth().max(1);
            loop {
                depth *= 2;
                let deeper = r.with_depth(depth)?;
                if let Some(n) = deeper.level_with_denominator_at_least(bound) {
                    return deeper.with_depth(n.max(1));
                }
            }
        }
    }
}

/// The bits `v(from), ..., v(to)`.
pub fn potential_window(r: &RotationNumber, beta: &Phase, from: i64, to: i64) -> Result<Word> {
    if from > to {
        return Err(invalid(format!("empty window {from}..{to}")));
    }
    let reach = from.unsigned_abs().max(to.unsigned_abs()) + 2;
    let coeff = beta.theta_coeff.abs().ceil().to_integer().to_u64().unwrap_or(u64::MAX);
    let scale = BigUint::from(reach) * BigUint::from(coeff.saturating_add(1));
    let first = BigUint::from(1u32 << 16) * &scale;
    let second = &first * &first;

    let attempts: Vec<RotationNumber> = if r.is_extendable() {
        vec![depth_for_bound(r, &first)?, depth_for_bound(r, &second)?]
    } else {
        vec![r.clone()]
    };
    let mut last_bad = from;
    for rr in attempts {
        match exact_floors(&rr, beta, from, to + 1)? {
            Ok(floors) => {
                let bits = floors
                    .windows(2)
                    .map(|w| (&w[1] - &w[0]).to_u8().unwrap_or(u8::MAX))
                    .collect::<Vec<u8>>();
                if bits.iter().any(|&b| b > 1) {
                    return Err(Error::Internal("floor increments outside {0, 1}".into()));
                }
                return Ok(Word(bits));
            }
            Err(site) => last_bad = site,
        }
    }
    // the potential at site n needs floors at n and n + 1
    Err(Error::Precision {
        site: last_bad.min(to),
    })
}

/// Which canonical word a block spells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockLabel {
    /// `s_n`
    Current,
    /// `s_{n-1}`
    Previous,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Block {
    /// First site of the block.
    pub start: i64,
    pub len: usize,
    pub label: BlockLabel,
    /// Cut by the window edge; the label is then only a guess.
    pub fragment: bool,
}

impl Block {
    /// Last site, inclusive.
    pub fn end(&self) -> i64 {
        self.start + self.len as i64 - 1
    }

    pub fn contains(&self, site: i64) -> bool {
        site >= self.start && site <= self.end()
    }
}

/// Block decomposition of a potential window at level `n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NPartition {
    pub level: usize,
    pub blocks: Vec<Block>,
    /// Position in `blocks` of `I_0`, the block containing site 1.
    pub origin: usize,
    pub window_start: i64,
    pub potential: Word,
}

impl NPartition {
    /// Block `z_j` (relative to the origin block).
    pub fn block(&self, j: isize) -> Option<&Block> {
        let idx = self.origin as isize + j;
        if idx < 0 {
            None
        } else {
            self.blocks.get(idx as usize)
        }
    }

    /// `z_j`, refusing fragments.
    pub fn complete_block(&self, j: isize) -> Result<&Block> {
        match self.block(j) {
            Some(b) if !b.fragment => Ok(b),
            _ => Err(Error::Resource(format!(
                "block z_{j} of the level-{} partition is not inside the window",
                self.level
            ))),
        }
    }

    /// Potential bits of a block.
    pub fn spelled(&self, b: &Block) -> Word {
        self.potential
            .slice((b.start - self.window_start) as usize, b.len)
    }
}

/// Number of `s_n` blocks absorbed by each `s_{n-1}` when grouping level
/// `n` into level `n + 1`.
fn absorb_count(r: &RotationNumber, n: usize) -> usize {
    if n == 0 {
        (r.a(1).unwrap() - 1) as usize
    } else {
        r.a(n + 1).unwrap() as usize
    }
}

fn merge(blocks: &[Block], label: BlockLabel, fragment: bool) -> Block {
    let start = blocks[0].start;
    let len = blocks.iter().map(|b| b.len).sum();
    Block {
        start,
        len,
        label,
        fragment: fragment || blocks.iter().any(|b| b.fragment),
    }
}

/// Level `n` to level `n + 1`: every complete `s_{n-1}` closes an
/// `s_{n+1} = s_n^c s_{n-1}` with the `c` blocks before it; any surplus
/// `s_n` becomes a level-`(n + 1)` `s_n`.
fn group_level(blocks: &[Block], c: usize, n: usize) -> Result<Vec<Block>> {
    use BlockLabel::*;
    let markers: Vec<usize> = blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.label == Previous && !b.fragment)
        .map(|(i, _)| i)
        .collect();
    if markers.is_empty() {
        return Ok(vec![merge(blocks, Current, true)]);
    }
    let mut out = Vec::new();
    let run_error = |len: usize| {
        Error::Internal(format!(
            "run of {len} s_{n} blocks at level {n}; expected {c} or {}",
            c + 1
        ))
    };

    // leading run
    let first = markers[0];
    if first < c {
        out.push(merge(&blocks[..=first], Current, true));
    } else {
        let leftover = &blocks[..first - c];
        let complete: Vec<&Block> = leftover.iter().filter(|b| !b.fragment).collect();
        if complete.len() > 1 {
            return Err(run_error(first));
        }
        for b in leftover {
            out.push(Block {
                label: Previous,
                ..b.clone()
            });
        }
        out.push(merge(&blocks[first - c..=first], Current, false));
    }

    for pair in markers.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let run = b - a - 1;
        if run != c && run != c + 1 {
            return Err(run_error(run));
        }
        if run == c + 1 {
            out.push(Block {
                label: Previous,
                ..blocks[a + 1].clone()
            });
        }
        out.push(merge(&blocks[b - c..=b], Current, false));
    }

    // trailing run
    let last = *markers.last().unwrap();
    let tail = &blocks[last + 1..];
    if !tail.is_empty() {
        let complete = tail.iter().filter(|b| !b.fragment).count();
        if complete > c + 1 {
            return Err(run_error(complete));
        }
        if complete == c + 1 {
            out.push(Block {
                label: Previous,
                ..tail[0].clone()
            });
            if tail.len() > 1 {
                out.push(merge(&tail[1..], Current, true));
            }
        } else {
            out.push(merge(tail, Current, true));
        }
    }
    Ok(out)
}

/// The unique level-`n` block decomposition of `v` over `window`, anchored
/// so that the block containing site 1 is `z_0`.
///
/// Built bottom-up: level 0 is one block per site, and each further level
/// groups the previous one. Blocks cut by the window edge are flagged as
/// fragments.
pub fn n_partition(
    r: &RotationNumber,
    beta: &Phase,
    n: usize,
    window: RangeInclusive<i64>,
) -> Result<NPartition> {
    let (from, to) = (*window.start(), *window.end());
    if !(from..=to).contains(&1) {
        return Err(invalid(format!("window {from}..={to} does not contain site 1")));
    }
    let r = ensure_depth(r, n + 1)?;
    let span = (to - from + 1) as u64;
    match r.q(n) {
        Some(q) if q <= &BigUint::from(span) => {}
        _ => {
            return Err(Error::Resource(format!(
                "window of {span} sites is shorter than q_{n}"
            )))
        }
    }
    let potential = potential_window(&r, beta, from, to)?;
    partition_of_potential(&r, n, from, potential)
}

/// Level-`n` partition of a known potential window starting at `from`.
pub fn partition_of_potential(
    r: &RotationNumber,
    n: usize,
    from: i64,
    potential: Word,
) -> Result<NPartition> {
    let r = ensure_depth(r, n + 1)?;
    let mut blocks: Vec<Block> = potential
        .symbols()
        .iter()
        .enumerate()
        .map(|(i, &bit)| Block {
            start: from + i as i64,
            len: 1,
            label: if bit == 0 {
                BlockLabel::Current
            } else {
                BlockLabel::Previous
            },
            fragment: false,
        })
        .collect();
    for level in 0..n {
        blocks = group_level(&blocks, absorb_count(&r, level), level)?;
    }
    let origin = blocks
        .iter()
        .position(|b| b.contains(1))
        .ok_or_else(|| invalid("window does not contain site 1"))?;
    let complete_left = blocks[..origin].iter().filter(|b| !b.fragment).count();
    let complete_right = blocks[origin + 1..].iter().filter(|b| !b.fragment).count();
    if blocks[origin].fragment || complete_left < 3 || complete_right < 3 {
        return Err(Error::Resource(format!(
            "window too short for a level-{n} partition: {complete_left} complete blocks left \
             and {complete_right} right of the origin"
        )));
    }
    Ok(NPartition {
        level: n,
        blocks,
        origin,
        window_start: from,
        potential,
    })
}

/// Outcome of [`validate_partition`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PartitionReport {
    pub blocks_checked: usize,
    pub isolated_previous: usize,
    /// Maximal `s_n` runs bounded by complete `s_{n-1}` blocks on both sides.
    pub runs_checked: usize,
    /// Runs touching a window edge or a fragment, whose length is unknown.
    pub runs_inconclusive: usize,
}

/// Checks the partition against its potential: each block spells its word,
/// `s_{n-1}` blocks are isolated, and `s_n` runs have length `a_{n+1}` or
/// `a_{n+1} + 1` (`a_1 - 1` or `a_1` at level 0).
pub fn validate_partition(p: &NPartition, r: &RotationNumber) -> Result<PartitionReport> {
    let n = p.level;
    let r = ensure_depth(r, n + 1)?;
    let words = canonical_words_upto(&r, n);
    let current = &words[n + 1];
    let previous = &words[n];
    let c = absorb_count(&r, n);

    let mut report = PartitionReport {
        blocks_checked: 0,
        isolated_previous: 0,
        runs_checked: 0,
        runs_inconclusive: 0,
    };
    let mut cursor = p.window_start;
    for (i, b) in p.blocks.iter().enumerate() {
        if b.start != cursor {
            return Err(Error::Validation {
                block: i,
                reason: format!("starts at {} but previous block ended at {}", b.start, cursor - 1),
            });
        }
        cursor += b.len as i64;
        if b.fragment {
            continue;
        }
        let expected = match b.label {
            BlockLabel::Current => current,
            BlockLabel::Previous => previous,
        };
        if &p.spelled(b) != expected {
            return Err(Error::Validation {
                block: i,
                reason: format!("spells {} instead of {:?}", p.spelled(b), b.label),
            });
        }
        report.blocks_checked += 1;
    }

    let blocks = &p.blocks;
    for (i, b) in blocks.iter().enumerate() {
        if b.fragment || b.label != BlockLabel::Previous || c == 0 {
            continue;
        }
        let neighbours = [i.checked_sub(1), Some(i + 1)];
        let mut all_known = true;
        for j in neighbours {
            match j.and_then(|j| blocks.get(j)) {
                Some(nb) if !nb.fragment => {
                    if nb.label != BlockLabel::Current {
                        return Err(Error::Validation {
                            block: i,
                            reason: "s_{n-1} block adjacent to another s_{n-1}".into(),
                        });
                    }
                }
                _ => all_known = false,
            }
        }
        if all_known {
            report.isolated_previous += 1;
        }
    }

    // maximal runs of s_n
    let mut i = 0;
    while i < blocks.len() {
        if blocks[i].label != BlockLabel::Current || blocks[i].fragment {
            i += 1;
            continue;
        }
        let start = i;
        while i < blocks.len() && blocks[i].label == BlockLabel::Current && !blocks[i].fragment {
            i += 1;
        }
        let len = i - start;
        let bounded_left = start > 0 && !blocks[start - 1].fragment;
        let bounded_right = i < blocks.len() && !blocks[i].fragment;
        if bounded_left && bounded_right {
            if len != c && len != c + 1 {
                return Err(Error::Validation {
                    block: start,
                    reason: format!("run of {len} s_n blocks, expected {c} or {}", c + 1),
                });
            }
            report.runs_checked += 1;
        } else {
            if len > c + 1 {
                return Err(Error::Validation {
                    block: start,
                    reason: format!("edge run of {len} s_n blocks exceeds {}", c + 1),
                });
            }
            report.runs_inconclusive += 1;
        }
    }
    // level-0 runs of length zero are adjacent s_{-1} blocks
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cf::convergents;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    #[test]
    fn fibonacci_words() {
        let r = RotationNumber::golden_mean(10);
        let got: Vec<String> = (1..=4)
            .map(|n| canonical_word(&r, n).unwrap().to_string())
            .collect();
        assert_eq!(got, ["1", "10", "101", "10110"]);
        assert_eq!(canonical_word(&r, 0).unwrap(), w("0"));
        assert_eq!(canonical_word(&r, -1).unwrap(), w("1"));
        assert!(canonical_word(&r, -2).is_err());
    }

    #[test]
    fn large_first_coefficient() {
        let r = convergents(&[3, 1, 1], 3).unwrap();
        assert_eq!(canonical_word(&r, 1).unwrap(), w("001"));
    }

    #[test]
    fn length_budget() {
        let r = RotationNumber::golden_mean(40);
        assert!(matches!(
            canonical_word_with_budget(&r, 30, 1000),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn lengths_and_prefixes() {
        let r = RotationNumber::silver_mean(12);
        let words = canonical_words_upto(&r, 12);
        for n in 0..=12 {
            assert_eq!(words[n + 1].len(), r.q_usize(n).unwrap());
        }
        for n in 2..=12 {
            assert!(words[n].is_prefix_of(&words[n + 1]));
        }
    }

    #[test]
    fn golden_potential_start() {
        let r = RotationNumber::golden_mean(30);
        let v = potential_window(&r, &Phase::zero(), 1, 5).unwrap();
        assert_eq!(v, w("10110"));
    }

    #[test]
    fn half_open_endpoint() {
        let r = RotationNumber::golden_mean(30);
        let v = potential_window(&r, &Phase::orbit(1), 0, 0).unwrap();
        assert_eq!(v, w("1"));
    }

    #[test]
    fn potential_prefix_is_canonical_word() {
        for r in [RotationNumber::golden_mean(40), RotationNumber::silver_mean(30)] {
            let s = canonical_word(&r, 8).unwrap();
            let v = potential_window(&r, &Phase::zero(), 1, s.len() as i64).unwrap();
            assert_eq!(v, s);
        }
    }

    #[test]
    fn concat_identity_examples() {
        let fib = RotationNumber::golden_mean(25);
        let s2 = canonical_word(&fib, 2).unwrap();
        let s3 = canonical_word(&fib, 3).unwrap();
        assert_eq!(s2.concat(&s3), w("10101"));
        for n in 2..=18 {
            assert!(verify_concat_identity(&fib, n).unwrap(), "n = {n}");
        }
        assert!(verify_concat_identity(&RotationNumber::silver_mean(8), 3).unwrap());
        assert!(verify_concat_identity(&fib, 1).is_err());
    }

    #[test]
    fn reversal() {
        assert_eq!(reverse(&w("10110")), w("01101"));
        assert_eq!(reverse(&w("010")), w("010"));
        assert_eq!(reverse(&Word::empty()), Word::empty());
    }

    #[test]
    fn conjugacy() {
        assert_eq!(is_conjugate(&w("10"), &w("01")), Some(2));
        assert!(is_conjugate(&w("10110"), &w("11010")).is_some());
        assert_eq!(is_conjugate(&w("10"), &w("11")), None);
        assert_eq!(is_conjugate(&w("101"), &w("10")), None);
        assert_eq!(is_conjugate(&w("0110"), &w("0110")), Some(1));
    }

    #[test]
    fn phase_parsing() {
        assert_eq!("3/7".parse::<Phase>().unwrap(), Phase::rational(3, 7));
        assert_eq!("0.25".parse::<Phase>().unwrap(), Phase::rational(1, 4));
        assert_eq!("orbit:2".parse::<Phase>().unwrap(), Phase::orbit(2));
        assert_eq!("theta*1/2".parse::<Phase>().unwrap(), Phase::theta_multiple(1, 2));
        let mixed: Phase = "1/3+theta*2".parse().unwrap();
        assert_eq!(mixed.constant, BigRational::new(1.into(), 3.into()));
        assert_eq!(mixed.theta_coeff, BigRational::from_integer(2.into()));
        assert!("abc".parse::<Phase>().is_err());
    }

    #[test]
    fn fibonacci_level_one_partition() {
        let r = RotationNumber::golden_mean(30);
        let p = n_partition(&r, &Phase::zero(), 1, -10..=20).unwrap();
        assert_eq!(p.potential.slice(11, 8), w("10110101"));
        let labels: Vec<BlockLabel> = (0..8).map(|j| p.block(j).unwrap().label).collect();
        use BlockLabel::*;
        assert_eq!(
            labels,
            [Current, Previous, Current, Current, Previous, Current, Previous, Current]
        );
        assert_eq!(p.block(0).unwrap().start, 1);
        let report = validate_partition(&p, &r).unwrap();
        assert!(report.runs_checked > 0);
    }

    #[test]
    fn corrupted_label_fails() {
        let r = RotationNumber::golden_mean(30);
        let mut p = n_partition(&r, &Phase::zero(), 3, -60..=60).unwrap();
        let j = p.origin + 1;
        p.blocks[j].label = match p.blocks[j].label {
            BlockLabel::Current => BlockLabel::Previous,
            BlockLabel::Previous => BlockLabel::Current,
        };
        assert!(matches!(
            validate_partition(&p, &r),
            Err(Error::Validation { block, .. }) if block == j
        ));
    }

    #[test]
    fn long_runs_are_inconclusive_in_short_windows() {
        let r = convergents(&[2, 20, 1, 1, 1], 5).unwrap();
        let p = n_partition(&r, &Phase::rational(1, 7), 1, -12..=14).unwrap();
        let report = validate_partition(&p, &r).unwrap();
        assert_eq!(report.runs_checked, 0);
        assert!(report.runs_inconclusive > 0);
    }

    #[test]
    fn short_window_rejected() {
        let r = RotationNumber::golden_mean(30);
        assert!(matches!(
            n_partition(&r, &Phase::zero(), 8, 1..=20),
            Err(Error::Resource(_))
        ));
        assert!(n_partition(&r, &Phase::zero(), 2, 2..=40).is_err());
    }

    #[test]
    fn finite_prefix_runs_out_of_precision() {
        let r = convergents(&[1, 1, 1, 1], 4).unwrap();
        assert!(matches!(
            potential_window(&r, &Phase::rational(1, 3), 1, 200),
            Err(Error::Precision { .. })
        ));
    }
}

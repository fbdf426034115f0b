//! Continued-fraction data for the rotation number.
//!
//! A rotation number is never held as a float. It is the coefficient
//! sequence `a_1, a_2, ...` together with the exact convergents
//! `p_n / q_n`, where
//!
//! ```text
//! p_0 = 0, p_1 = 1, p_n = a_n p_{n-1} + p_{n-2}
//! q_0 = 1, q_1 = a_1, q_n = a_n q_{n-1} + q_{n-2}
//! ```
//!
//! Eventually periodic expansions (quadratic irrationals such as the golden
//! mean) remember their period so that deeper convergents can be unrolled
//! on demand.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::{BigRational, Ratio};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// What is known about the coefficients past the stored prefix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Tail {
    /// Only the stored prefix is known.
    Unknown,
    /// `a = preperiod ++ period ++ period ++ ...`
    Periodic { preperiod: Vec<u64>, period: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RotationNumber {
    coefficients: Vec<u64>,
    numerators: Vec<BigUint>,
    denominators: Vec<BigUint>,
    density_stat: Ratio<u64>,
    growth_bound: f64,
    tail: Tail,
}

/// Convergents of the first `depth` coefficients.
pub fn convergents(coefficients: &[u64], depth: usize) -> Result<RotationNumber> {
    if depth > coefficients.len() {
        return Err(invalid(format!(
            "depth {depth} exceeds the {} supplied coefficients",
            coefficients.len()
        )));
    }
    RotationNumber::build(coefficients[..depth].to_vec(), Tail::Unknown)
}

/// Continued-fraction expansion of `p/q`, canonical form (last coefficient
/// at least 2).
pub fn coefficients_from_rational(p: u64, q: u64) -> Result<Vec<u64>> {
    if p == 0 || p >= q {
        return Err(invalid(format!("{p}/{q} is not in (0, 1)")));
    }
    if p.gcd(&q) != 1 {
        return Err(invalid(format!("{p}/{q} is not in lowest terms")));
    }
    // p/q = 1/(q/p)
    let (mut num, mut den) = (q, p);
    let mut out = Vec::new();
    while den != 0 {
        let (a, r) = num.div_rem(&den);
        out.push(a);
        num = den;
        den = r;
    }
    Ok(out)
}

/// Prefix statistic for the bounded-density condition.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityReport {
    /// `max_{n <= depth} (1/n) sum_{i <= n} a_i`
    pub statistic: f64,
    pub numerator: u64,
    pub denominator: u64,
    pub bounded: bool,
}

/// Finite-prefix proxy for `limsup (1/n) sum a_i < infinity`: reports the
/// running maximum of the Cesaro averages and compares it with `threshold`.
/// A finite prefix can never decide the limsup itself.
pub fn is_bounded_density(r: &RotationNumber, threshold: f64) -> DensityReport {
    let s = r.density_stat;
    let statistic = *s.numer() as f64 / *s.denom() as f64;
    DensityReport {
        statistic,
        numerator: *s.numer(),
        denominator: *s.denom(),
        bounded: statistic <= threshold,
    }
}

impl RotationNumber {
    fn build(coefficients: Vec<u64>, tail: Tail) -> Result<Self> {
        if let Some(pos) = coefficients.iter().position(|&a| a == 0) {
            return Err(invalid(format!("coefficient a_{} is zero", pos + 1)));
        }
        let depth = coefficients.len();
        let mut numerators = Vec::with_capacity(depth + 1);
        let mut denominators = Vec::with_capacity(depth + 1);
        numerators.push(BigUint::zero());
        denominators.push(BigUint::one());
        for (i, &a) in coefficients.iter().enumerate() {
            let n = i + 1;
            let a = BigUint::from(a);
            if n == 1 {
                numerators.push(BigUint::one());
                denominators.push(a);
            } else {
                let p = &a * &numerators[n - 1] + &numerators[n - 2];
                let q = &a * &denominators[n - 1] + &denominators[n - 2];
                numerators.push(p);
                denominators.push(q);
            }
        }

        let mut density_stat = Ratio::new(0u64, 1);
        let mut sum = 0u64;
        for (i, &a) in coefficients.iter().enumerate() {
            sum = sum
                .checked_add(a)
                .ok_or_else(|| invalid("coefficient sum overflows u64"))?;
            let avg = Ratio::new(sum, i as u64 + 1);
            if avg > density_stat {
                density_stat = avg;
            }
        }

        let growth_bound = denominators
            .iter()
            .enumerate()
            .skip(1)
            .map(|(n, q)| (ln_biguint(q) / n as f64).exp())
            .fold(1.0, f64::max);

        Ok(Self {
            coefficients,
            numerators,
            denominators,
            density_stat,
            growth_bound,
            tail,
        })
    }

    /// `preperiod ++ period^omega`, unrolled to `depth` coefficients.
    ///
    /// `--theta-cf-periodic :1` is the golden mean.
    pub fn periodic(preperiod: &[u64], period: &[u64], depth: usize) -> Result<Self> {
        if period.is_empty() {
            return Err(invalid("empty period"));
        }
        let coefficients = preperiod
            .iter()
            .chain(period.iter().cycle())
            .take(depth)
            .copied()
            .collect();
        Self::build(
            coefficients,
            Tail::Periodic {
                preperiod: preperiod.to_vec(),
                period: period.to_vec(),
            },
        )
    }

    /// Golden mean `(sqrt 5 - 1)/2`, all `a_i = 1`.
    pub fn golden_mean(depth: usize) -> Self {
        Self::periodic(&[], &[1], depth).expect("constant expansion is valid")
    }

    /// Silver mean `sqrt 2 - 1`, all `a_i = 2`.
    pub fn silver_mean(depth: usize) -> Self {
        Self::periodic(&[], &[2], depth).expect("constant expansion is valid")
    }

    /// Number of stored coefficients `N`.
    pub fn depth(&self) -> usize {
        self.coefficients.len()
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    /// Coefficient `a_n`, 1-based.
    pub fn a(&self, n: usize) -> Option<u64> {
        n.checked_sub(1).and_then(|i| self.coefficients.get(i).copied())
    }

    pub fn p(&self, n: usize) -> Option<&BigUint> {
        self.numerators.get(n)
    }

    pub fn q(&self, n: usize) -> Option<&BigUint> {
        self.denominators.get(n)
    }

    pub fn numerators(&self) -> &[BigUint] {
        &self.numerators
    }

    pub fn denominators(&self) -> &[BigUint] {
        &self.denominators
    }

    /// `q_n` as a machine integer, `None` when out of range or too large.
    pub fn q_usize(&self, n: usize) -> Option<usize> {
        self.q(n).and_then(|q| q.to_usize())
    }

    pub fn density_stat(&self) -> Ratio<u64> {
        self.density_stat
    }

    /// `max_n q_n^{1/n}` over the stored range.
    pub fn growth_bound(&self) -> f64 {
        self.growth_bound
    }

    pub fn tail(&self) -> &Tail {
        &self.tail
    }

    pub fn is_extendable(&self) -> bool {
        matches!(self.tail, Tail::Periodic { .. })
    }

    /// Same rotation number with `depth` stored coefficients. Shrinking is
    /// always possible; growing needs a periodic tail.
    pub fn with_depth(&self, depth: usize) -> Result<Self> {
        if depth <= self.depth() {
            return Self::build(self.coefficients[..depth].to_vec(), self.tail.clone());
        }
        match &self.tail {
            Tail::Periodic { preperiod, period } => Self::periodic(preperiod, period, depth),
            Tail::Unknown => Err(Error::Resource(format!(
                "need {depth} coefficients, only {} known",
                self.depth()
            ))),
        }
    }

    /// Smallest stored level whose denominator reaches `bound`.
    pub fn level_with_denominator_at_least(&self, bound: &BigUint) -> Option<usize> {
        self.denominators.iter().position(|q| q >= bound)
    }

    /// Last convergent `p_N / q_N` as a float.
    pub fn approx(&self) -> f64 {
        let n = self.depth();
        ratio_to_f64(&self.numerators[n], &self.denominators[n])
    }

    /// Open interval containing every irrational with this coefficient
    /// prefix: the endpoints are `p_N/q_N` and
    /// `(p_N + p_{N-1})/(q_N + q_{N-1})`. Returned as `(lo, hi)`.
    pub fn enclosure(&self) -> Result<(BigRational, BigRational)> {
        let n = self.depth();
        if n == 0 {
            return Err(invalid("rotation number needs at least one coefficient"));
        }
        let to_int = |x: &BigUint| BigInt::from(x.clone());
        let a = BigRational::new(to_int(&self.numerators[n]), to_int(&self.denominators[n]));
        let b = BigRational::new(
            to_int(&(&self.numerators[n] + &self.numerators[n - 1])),
            to_int(&(&self.denominators[n] + &self.denominators[n - 1])),
        );
        Ok(if a < b { (a, b) } else { (b, a) })
    }

    /// Levels `n >= 4` (with `n + 4` stored) where
    /// `q_{n+4} >= 2(q_{n+1} + q_n) + q_{n-1}` fails.
    pub fn scaling_inequality_violations(&self) -> Vec<usize> {
        let q = &self.denominators;
        (4..)
            .take_while(|n| n + 4 < q.len())
            .filter(|&n| {
                let rhs = BigUint::from(2u32) * (&q[n + 1] + &q[n]) + &q[n - 1];
                q[n + 4] < rhs
            })
            .collect()
    }
}

fn ratio_to_f64(p: &BigUint, q: &BigUint) -> f64 {
    (ln_biguint(p) - ln_biguint(q)).exp()
}

/// Natural log of a positive big integer without overflowing `f64`.
pub(crate) fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        x.to_f64().unwrap_or(f64::INFINITY).ln()
    } else {
        let shift = bits - 64;
        let top = (x >> shift).to_f64().unwrap_or(f64::INFINITY);
        top.ln() + shift as f64 * std::f64::consts::LN_2
    }
}

use std::fmt;
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sturmian::cf::{coefficients_from_rational, convergents, RotationNumber};
use sturmian::words::Phase;

/// Depth to which periodic expansions are unrolled up front; the library
/// extends them further on demand.
const PERIODIC_DEPTH: usize = 40;

/// How the rotation number was supplied on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ThetaSpec {
    Cf(Vec<u64>),
    Periodic { preperiod: Vec<u64>, period: Vec<u64> },
    Rational { p: u64, q: u64 },
}

fn parse_list(s: &str) -> Result<Vec<u64>, String> {
    if s.trim().is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|t| {
            let a: u64 = t.trim().parse().map_err(|_| format!("bad coefficient {t:?}"))?;
            if a == 0 {
                Err("coefficients must be positive".to_string())
            } else {
                Ok(a)
            }
        })
        .collect()
}

fn join(v: &[u64]) -> String {
    v.iter().map(u64::to_string).collect::<Vec<_>>().join(",")
}

pub fn parse_cf(s: &str) -> Result<ThetaSpec, String> {
    let v = parse_list(s)?;
    if v.is_empty() {
        return Err("empty coefficient list".into());
    }
    Ok(ThetaSpec::Cf(v))
}

pub fn parse_periodic(s: &str) -> Result<ThetaSpec, String> {
    let (pre, per) = s
        .split_once(':')
        .ok_or_else(|| format!("expected preperiod:period, got {s:?}"))?;
    let period = parse_list(per)?;
    if period.is_empty() {
        return Err("empty period".into());
    }
    Ok(ThetaSpec::Periodic {
        preperiod: parse_list(pre)?,
        period,
    })
}

pub fn parse_rational(s: &str) -> Result<ThetaSpec, String> {
    let (p, q) = s.split_once('/').ok_or_else(|| format!("expected p/q, got {s:?}"))?;
    let p: u64 = p.trim().parse().map_err(|_| format!("bad numerator {p:?}"))?;
    let q: u64 = q.trim().parse().map_err(|_| format!("bad denominator {q:?}"))?;
    coefficients_from_rational(p, q).map_err(|e| e.to_string())?;
    Ok(ThetaSpec::Rational { p, q })
}

impl ThetaSpec {
    pub fn golden() -> Self {
        ThetaSpec::Periodic {
            preperiod: Vec::new(),
            period: vec![1],
        }
    }

    pub fn rotation(&self) -> sturmian::Result<RotationNumber> {
        match self {
            ThetaSpec::Cf(a) => convergents(a, a.len()),
            ThetaSpec::Periodic { preperiod, period } => {
                RotationNumber::periodic(preperiod, period, PERIODIC_DEPTH.max(preperiod.len() + 1))
            }
            ThetaSpec::Rational { p, q } => {
                let a = coefficients_from_rational(*p, *q)?;
                convergents(&a, a.len())
            }
        }
    }
}

impl fmt::Display for ThetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaSpec::Cf(a) => write!(f, "cf:{}", join(a)),
            ThetaSpec::Periodic { preperiod, period } => {
                write!(f, "periodic:{}:{}", join(preperiod), join(period))
            }
            ThetaSpec::Rational { p, q } => write!(f, "rational:{p}/{q}"),
        }
    }
}

impl FromStr for ThetaSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("cf:") {
            parse_cf(rest)
        } else if let Some(rest) = s.strip_prefix("periodic:") {
            parse_periodic(rest)
        } else if let Some(rest) = s.strip_prefix("rational:") {
            parse_rational(rest)
        } else {
            Err(format!("unknown theta specification {s:?}"))
        }
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_string())
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(ThetaSpec);
string_serde!(EnergySpec);

/// Energies to sample.
#[derive(Debug, Clone, PartialEq)]
pub enum EnergySpec {
    List(Vec<f64>),
    /// Centers of `count` evenly spread bands of `sigma_level`.
    FromBands { level: usize, count: usize },
    /// Centers of `count` bands of `sigma_level` drawn with the run seed.
    RandomBands { level: usize, count: usize },
}

pub const DEFAULT_BAND_SAMPLE: usize = 20;

impl fmt::Display for EnergySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnergySpec::List(v) => {
                let parts: Vec<String> = v.iter().map(|e| format!("{e:?}")).collect();
                write!(f, "{}", parts.join(","))
            }
            EnergySpec::FromBands { level, count } => write!(f, "from-bands:{level}:{count}"),
            EnergySpec::RandomBands { level, count } => write!(f, "random-bands:{level}:{count}"),
        }
    }
}

fn level_count(s: &str) -> Result<(usize, usize), String> {
    let (level, count) = match s.split_once(':') {
        Some((l, c)) => (l, Some(c)),
        None => (s, None),
    };
    let level: usize = level.parse().map_err(|_| format!("bad band level {level:?}"))?;
    let count = match count {
        Some(c) => c.parse().map_err(|_| format!("bad band count {c:?}"))?,
        None => DEFAULT_BAND_SAMPLE,
    };
    if count == 0 {
        return Err("band count must be positive".into());
    }
    Ok((level, count))
}

impl FromStr for EnergySpec {
    type Err = String;

    /// `0.5,1.2`, `from-bands:LEVEL[:COUNT]` or `random-bands:LEVEL[:COUNT]`.
    fn from_str(s: &str) -> Result<Self, String> {
        if let Some(rest) = s.strip_prefix("from-bands:") {
            let (level, count) = level_count(rest)?;
            return Ok(EnergySpec::FromBands { level, count });
        }
        if let Some(rest) = s.strip_prefix("random-bands:") {
            let (level, count) = level_count(rest)?;
            return Ok(EnergySpec::RandomBands { level, count });
        }
        let v: Vec<f64> = s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad energy {t:?}")))
            .collect::<Result<_, _>>()?;
        if v.iter().any(|e| !e.is_finite()) {
            return Err("energies must be finite".into());
        }
        Ok(EnergySpec::List(v))
    }
}

pub fn positive(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("bad number {s:?}"))?;
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s} must be positive"))
    }
}

pub fn finite(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|_| format!("bad number {s:?}"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("{s} must be finite"))
    }
}

pub fn phase(s: &str) -> Result<Phase, String> {
    s.parse().map_err(|e: sturmian::Error| e.to_string())
}

/// `a..b`, inclusive of both ends.
pub fn level_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected a..b, got {s:?}"))?;
    let a: usize = a.parse().map_err(|_| format!("bad level {a:?}"))?;
    let b: usize = b.trim_start_matches('=').parse().map_err(|_| format!("bad level {b:?}"))?;
    if a > b {
        return Err(format!("empty range {s}"));
    }
    Ok(a..=b)
}

/// `lo..hi` of positive reals with `lo < hi`.
pub fn real_range(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once("..").ok_or_else(|| format!("expected lo..hi, got {s:?}"))?;
    let (a, b) = (positive(a)?, positive(b)?);
    if a >= b {
        return Err(format!("empty range {s}"));
    }
    Ok((a, b))
}

/// Everything that determines a run, as embedded in every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub theta: ThetaSpec,
    pub lambda: f64,
    pub beta: String,
    pub seed: u64,
    pub tol: f64,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !self.lambda.is_finite() {
            return Err("lambda must be finite".into());
        }
        if !(self.tol > 0.0) {
            return Err("tolerance must be positive".into());
        }
        phase(&self.beta)?;
        Ok(())
    }

    pub fn beta(&self) -> Phase {
        phase(&self.beta).expect("validated phase")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn theta_round_trips() {
        for s in ["cf:1,2,3", "periodic::1", "periodic:1,2:3,4", "rational:5/8"] {
            let t: ThetaSpec = s.parse().unwrap();
            assert_eq!(t.to_string(), s);
        }
        assert_eq!(parse_periodic(":1").unwrap(), ThetaSpec::golden());
        assert!(parse_rational("2/4").is_err());
        assert!(parse_cf("1,0").is_err());
    }

    #[test]
    fn energies_round_trip() {
        for s in ["0.5,-1.25", "from-bands:16:20", "random-bands:8:3"] {
            let e: EnergySpec = s.parse().unwrap();
            assert_eq!(e.to_string(), s);
        }
        assert_eq!(
            "from-bands:12".parse::<EnergySpec>().unwrap(),
            EnergySpec::FromBands { level: 12, count: DEFAULT_BAND_SAMPLE }
        );
    }

    #[test]
    fn config_round_trips_through_json() {
        let c = RunConfig {
            theta: ThetaSpec::golden(),
            lambda: 0.1,
            beta: "1/3+theta*2".into(),
            seed: 7,
            tol: 1e-10,
            out: "out".into(),
        };
        c.validate().unwrap();
        let json = serde_json::to_string(&c).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, c);
        assert_eq!(serde_json::to_string(&back).unwrap(), json);
    }

    #[test]
    fn ranges() {
        assert_eq!(level_range("8..14").unwrap(), 8..=14);
        assert_eq!(level_range("8..=14").unwrap(), 8..=14);
        assert!(level_range("9..8").is_err());
        assert_eq!(real_range("1e-4..1e-1").unwrap(), (1e-4, 1e-1));
        assert!(real_range("0..1").is_err());
    }
}

use std::fmt::Write as _;
use std::path::PathBuf;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sturmian::cf::RotationNumber;
use sturmian::gordon::{growth_factor, scaling_check, ScalingOptions, ScalingReport};
use sturmian::subordinacy::{
    fit_exponents, geometric_grid, holder_check, m_half_line, weyl_point, GrowthFit, HalfLineM,
    HolderOptions, HolderReport, Side, WeylPoint,
};
use sturmian::traces::{
    approximate_spectrum, estimate_c_lambda, spectrum_bands, SpectrumApprox, SpectrumSearch,
    TraceBound,
};
use sturmian::transfer::{cumulative_vector_norms, evolve, norm_U, norm_u};
use sturmian::words::{canonical_word, n_partition, potential_window, NPartition, Word};

use crate::config::{EnergySpec, RunConfig};
use crate::{Command, MSide};

/// Smallest epsilon the Holder sweep handles at desk cost.
const EPS_FLOOR: f64 = 1e-4;

/// Band level assumed for lists of energies supplied by hand.
const DEFAULT_BAND_LEVEL: usize = 16;

/// Length grid for the exponent fit behind `holder` without `--alpha`.
const HOLDER_FIT: (f64, f64, usize, usize) = (100.0, 1e6, 50, 32);

pub enum Failure {
    Module(sturmian::Error),
    Io(std::io::Error),
}

impl From<sturmian::Error> for Failure {
    fn from(e: sturmian::Error) -> Self {
        Failure::Module(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome<T> = Result<T, Failure>;

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    version: &'static str,
    config: &'a RunConfig,
    command: &'a Command,
    #[serde(flatten)]
    result: T,
}

/// Files are only written once every result is in hand.
struct Outputs<'a> {
    config: &'a RunConfig,
    command: &'a Command,
    files: Vec<(String, String)>,
}

impl<'a> Outputs<'a> {
    fn json<T: Serialize>(&mut self, name: &str, result: T) {
        let a = Artifact {
            version: sturmian::VERSION,
            config: self.config,
            command: self.command,
            result,
        };
        let mut text = serde_json::to_string_pretty(&a).expect("artifact serializes");
        text.push('\n');
        self.files.push((name.to_string(), text));
    }

    fn csv(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text));
    }

    fn write(self) -> Outcome<Vec<PathBuf>> {
        std::fs::create_dir_all(&self.config.out)?;
        let mut paths = Vec::new();
        for (name, text) in self.files {
            let p = self.config.out.join(name);
            std::fs::write(&p, text)?;
            paths.push(p);
        }
        Ok(paths)
    }
}

fn search(cfg: &RunConfig) -> SpectrumSearch {
    SpectrumSearch {
        tol: cfg.tol,
        ..SpectrumSearch::for_lambda(cfg.lambda)
    }
}

fn band_centers(cfg: &RunConfig, r: &RotationNumber, level: usize) -> Outcome<Vec<f64>> {
    let bands = spectrum_bands(cfg.lambda, r, level, search(cfg))?;
    Ok(bands.iter().map(|b| 0.5 * (b[0] + b[1])).collect())
}

fn energies(cfg: &RunConfig, r: &RotationNumber, spec: &EnergySpec) -> Outcome<Vec<f64>> {
    match spec {
        EnergySpec::List(v) => Ok(v.clone()),
        EnergySpec::FromBands { level, count } => {
            let c = band_centers(cfg, r, *level)?;
            let k = (*count).min(c.len());
            Ok((0..k).map(|i| c[(2 * i + 1) * c.len() / (2 * k)]).collect())
        }
        EnergySpec::RandomBands { level, count } => {
            let c = band_centers(cfg, r, *level)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            let mut idx = rand::seq::index::sample(&mut rng, c.len(), (*count).min(c.len())).into_vec();
            idx.sort_unstable();
            Ok(idx.into_iter().map(|i| c[i]).collect())
        }
    }
}

fn band_level(spec: &EnergySpec) -> usize {
    match spec {
        EnergySpec::List(_) => DEFAULT_BAND_LEVEL,
        EnergySpec::FromBands { level, .. } | EnergySpec::RandomBands { level, .. } => *level,
    }
}

#[derive(Serialize)]
struct WordsResult {
    level: i64,
    length: usize,
    word: Word,
    window: (i64, i64),
    potential: Word,
    partition: Option<NPartition>,
}

#[derive(Serialize)]
struct EvolveResult {
    energy: f64,
    phi: f64,
    length: usize,
    norm_u: f64,
    #[serde(rename = "norm_U")]
    norm_big_u: f64,
    last_vector: [f64; 2],
}

#[derive(Serialize)]
struct GordonResult {
    c_lambda: TraceBound,
    d: f64,
    energies: Vec<f64>,
    reports: Vec<ScalingReport>,
    surviving_violations: usize,
}

#[derive(Serialize)]
struct AlphaResult {
    fits: Vec<GrowthFit>,
    alpha_min: f64,
}

#[derive(Serialize)]
#[serde(untagged)]
enum MResult {
    Half(HalfLineM),
    Whole(WeylPoint),
}

#[derive(Serialize)]
struct HolderResult {
    alpha_source: &'static str,
    fits: Vec<GrowthFit>,
    report: HolderReport,
}

fn min_alpha(fits: &[GrowthFit]) -> f64 {
    fits.iter().map(|f| f.alpha).fold(f64::INFINITY, f64::min)
}

pub fn run(cfg: &RunConfig, command: &Command) -> Outcome<Vec<PathBuf>> {
    let r = cfg.theta.rotation()?;
    let beta = cfg.beta();
    let lambda = cfg.lambda;
    let mut out = Outputs {
        config: cfg,
        command,
        files: Vec::new(),
    };
    match command {
        Command::Words {
            level,
            window,
            partition,
        } => {
            let word = canonical_word(&r, *level)?;
            let window = window.unwrap_or((1, word.len() as i64));
            let potential = potential_window(&r, &beta, window.0, window.1)?;
            let partition = if *partition {
                let n = usize::try_from(*level)
                    .map_err(|_| sturmian::Error::InvalidInput("partition level must be >= 0".into()))?;
                Some(n_partition(&r, &beta, n, window.0..=window.1)?)
            } else {
                None
            };
            out.json(
                "words.json",
                WordsResult {
                    level: *level,
                    length: word.len(),
                    word,
                    window,
                    potential,
                    partition,
                },
            );
        }
        Command::Evolve { energy, phi, length } => {
            let pot = potential_window(&r, &beta, 1, *length as i64)?;
            let t = evolve(lambda, *energy, &pot, *phi)?;
            let cum = cumulative_vector_norms(&t);
            let mut csv = String::from("n,v,u,norm_U\n");
            for n in 0..t.u.len() {
                let v = if n == 0 { String::new() } else { pot.symbols()[n - 1].to_string() };
                writeln!(csv, "{n},{v},{:?},{:?}", t.u[n], cum[n].sqrt()).expect("string write");
            }
            let l = *length as f64;
            let result = EvolveResult {
                energy: *energy,
                phi: *phi,
                length: *length,
                norm_u: norm_u(&t, l)?,
                norm_big_u: norm_U(&t, l)?,
                last_vector: t.vector(t.len()),
            };
            out.json("evolve.json", result);
            out.csv("evolve.csv", csv);
        }
        Command::Spectrum { level } => {
            let s: SpectrumApprox = approximate_spectrum(lambda, &r, *level, search(cfg))?;
            out.json("bands.json", s);
        }
        Command::Gordon {
            level_range,
            energies: spec,
            angles,
            c_depth,
        } => {
            let es = energies(cfg, &r, spec)?;
            let c = estimate_c_lambda(lambda, &r, *c_depth, 4)?;
            let opts = ScalingOptions {
                angles: *angles,
                band_level: band_level(spec),
                ..ScalingOptions::default()
            };
            let mut reports = Vec::new();
            for &e in &es {
                let mut rep = scaling_check(lambda, &r, &beta, e, *level_range.end(), c.value, &opts)?;
                rep.rows.retain(|row| level_range.contains(&row.n));
                rep.violations.retain(|v| level_range.contains(&v.n));
                reports.push(rep);
            }
            let surviving_violations = reports.iter().map(ScalingReport::surviving_violations).sum();
            out.json(
                "gordon.json",
                GordonResult {
                    c_lambda: c,
                    d: growth_factor(c.value),
                    energies: es,
                    reports,
                    surviving_violations,
                },
            );
        }
        Command::Alpha {
            energies: spec,
            l_range,
            l_points,
            angles,
        } => {
            let es = energies(cfg, &r, spec)?;
            let grid = geometric_grid(l_range.0, l_range.1, *l_points);
            let fits = es
                .iter()
                .map(|&e| fit_exponents(lambda, &r, &beta, e, &grid, *angles))
                .collect::<sturmian::Result<Vec<_>>>()?;
            let alpha_min = min_alpha(&fits);
            out.json("alpha.json", AlphaResult { fits, alpha_min });
        }
        Command::Mfunction { z, n, side } => {
            let z: Complex64 = *z;
            let result = match side {
                MSide::Right => MResult::Half(m_half_line(Side::Right, lambda, &r, &beta, z, *n)?),
                MSide::Left => MResult::Half(m_half_line(Side::Left, lambda, &r, &beta, z, *n)?),
                MSide::Whole => MResult::Whole(weyl_point(lambda, &r, &beta, z, *n)?),
            };
            out.json("mfunction.json", result);
        }
        Command::Holder {
            alpha,
            eps_range,
            eps_points,
            energies: spec,
        } => {
            if eps_range.0 < EPS_FLOOR {
                eprintln!(
                    "warning: epsilon below {EPS_FLOOR:e} needs truncations beyond {} sites",
                    (8.0 / EPS_FLOOR) as usize
                );
            }
            let es = energies(cfg, &r, spec)?;
            let (alpha, fits, alpha_source) = match alpha {
                Some(a) => (*a, Vec::new(), "given"),
                None => {
                    let (lo, hi, points, angles) = HOLDER_FIT;
                    let grid = geometric_grid(lo, hi, points);
                    let fits = es
                        .iter()
                        .map(|&e| fit_exponents(lambda, &r, &beta, e, &grid, angles))
                        .collect::<sturmian::Result<Vec<_>>>()?;
                    (min_alpha(&fits).min(1.0), fits, "fitted-minimum")
                }
            };
            let eps = geometric_grid(eps_range.0, eps_range.1, *eps_points);
            let report = holder_check(lambda, &r, &beta, &es, &eps, alpha, &HolderOptions::default())?;
            out.json(
                "holder.json",
                HolderResult {
                    alpha_source,
                    fits,
                    report,
                },
            );
        }
    }
    out.write()
}

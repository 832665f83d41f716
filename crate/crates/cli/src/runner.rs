//! Subcommand execution and artifact writing.

use serde_json::{json, Value};
use std::fs;
use std::path::{Path, PathBuf};

use k3dyn::minkowski::{kak_decompose, classify_isometry, LatticeIsometry};
use k3dyn::pentagon::SideLengths;
use k3dyn::randwalk::{
    coh_lyapunov, equidistribution_test, furstenberg_estimate, limit_class, run_orbit,
    stable_direction_dependence, tangent_lyapunov, twist_growth, CohOrder, CohSystem,
    GeneratorSystem, Itinerary, PentagonSystem, RealSurfaceSystem, WehlerSystem,
};
use k3dyn::rng::CounterRng;
use k3dyn::wehler::WehlerSurface;

use crate::config::{ExperimentConfig, Subcommand, SurfaceSpec};
use crate::svg;

#[derive(Debug)]
pub enum CliError {
    /// exit code 2
    Config(String),
    /// exit code 3
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn rt<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Everything one run produces; written to disk in a fixed order by a
/// single writer.
pub struct ArtifactSet {
    pub records: Vec<Value>,
    pub summary: Value,
    pub csv: Option<String>,
    pub svg: Option<String>,
}

enum SystemKind {
    Pentagon(PentagonSystem),
    Wehler(WehlerSystem),
}

fn build_system(cfg: &ExperimentConfig) -> Result<SystemKind> {
    match &cfg.surface {
        SurfaceSpec::Pentagon { lengths } => {
            let l = SideLengths::new(*lengths).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(SystemKind::Pentagon(PentagonSystem::new(l)))
        }
        SurfaceSpec::Wehler { coeffs } => {
            let s =
                WehlerSurface::from_flat(coeffs).map_err(|e| CliError::Config(e.to_string()))?;
            Ok(SystemKind::Wehler(WehlerSystem::new(s)))
        }
    }
}

fn coh_system(cfg: &ExperimentConfig) -> Result<CohSystem> {
    match &cfg.surface {
        SurfaceSpec::Wehler { .. } => {
            CohSystem::wehler(&cfg.generators.words, &cfg.generators.weights).map_err(rt)
        }
        SurfaceSpec::Pentagon { .. } => Err(CliError::Runtime(
            "cohomology matrices are only available for Wehler surfaces".into(),
        )),
    }
}

fn start_point<S: RealSurfaceSystem>(sys: &S, seed: u64, trial: u64) -> Result<S::Point> {
    let mut rng = CounterRng::stream(seed, (1 << 32) | trial);
    sys.random_point(&mut rng).map_err(rt)
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn run_experiment(cfg: &ExperimentConfig, quiet: bool) -> Result<ArtifactSet> {
    let gen = make_generators(cfg)?;
    match cfg.subcommand {
        Subcommand::Orbit => match build_system(cfg)? {
            SystemKind::Pentagon(s) => orbit(cfg, &s, &gen),
            SystemKind::Wehler(s) => orbit(cfg, &s, &gen),
        },
        Subcommand::Lyapunov => match build_system(cfg)? {
            SystemKind::Pentagon(s) => lyapunov(cfg, &s, &gen),
            SystemKind::Wehler(s) => lyapunov(cfg, &s, &gen),
        },
        Subcommand::Cohomology => cohomology(cfg),
        Subcommand::Classify => classify(cfg),
        Subcommand::Boundary => boundary(cfg, quiet),
        Subcommand::StableDirs => match build_system(cfg)? {
            SystemKind::Pentagon(s) => stable_dirs(cfg, &s, &gen),
            SystemKind::Wehler(s) => stable_dirs(cfg, &s, &gen),
        },
        Subcommand::Twist => match build_system(cfg)? {
            SystemKind::Pentagon(s) => twist(cfg, &s, &gen),
            SystemKind::Wehler(s) => twist(cfg, &s, &gen),
        },
        Subcommand::Equidist => match build_system(cfg)? {
            SystemKind::Pentagon(s) => equidist(cfg, &s, &gen),
            SystemKind::Wehler(s) => equidist(cfg, &s, &gen),
        },
    }
}

fn make_generators(cfg: &ExperimentConfig) -> Result<GeneratorSystem> {
    let letters = match cfg.surface {
        SurfaceSpec::Wehler { .. } => 3,
        SurfaceSpec::Pentagon { .. } => 5,
    };
    GeneratorSystem::new(cfg.generators.words.clone(), cfg.generators.weights.clone(), letters)
        .map_err(|e| CliError::Config(e.to_string()))
}

fn orbit<S: RealSurfaceSystem>(
    cfg: &ExperimentConfig,
    sys: &S,
    gen: &GeneratorSystem,
) -> Result<ArtifactSet> {
    let grid = cfg.grid.unwrap_or(64);
    let mut records = Vec::new();
    let mut merged = vec![0u64; 2 * grid * grid];
    let mut worst = 0.0f64;
    for trial in 0..cfg.trials {
        let x0 = start_point(sys, cfg.seed, trial as u64)?;
        let it = Itinerary::new(cfg.seed, trial as u64);
        let m = run_orbit(sys, gen, &x0, &it, cfg.n, grid);
        for (acc, c) in merged.iter_mut().zip(&m.counts) {
            *acc += c;
        }
        worst = worst.max(m.worst_residual);
        records.push(json!({
            "trial": trial,
            "n_recorded": m.n_recorded,
            "support_size": m.support_size(),
            "worst_residual": m.worst_residual,
            "truncated": m.truncated,
        }));
    }
    let mut csv = String::from("branch,i1,i2,count\n");
    for b in 0..2 {
        for i1 in 0..grid {
            for i2 in 0..grid {
                let c = merged[(b * grid + i1) * grid + i2];
                if c > 0 {
                    let sign = if b == 1 { 1 } else { -1 };
                    csv.push_str(&format!("{sign},{i1},{i2},{c}\n"));
                }
            }
        }
    }
    let svg = svg::histogram2d(grid, &merged, &cfg.hash(), cfg.seed).map_err(rt)?;
    Ok(ArtifactSet {
        records,
        summary: json!({
            "subcommand": "orbit",
            "trials": cfg.trials,
            "n": cfg.n,
            "grid": grid,
            "worst_residual": worst,
        }),
        csv: Some(csv),
        svg: Some(svg),
    })
}

fn lyapunov<S: RealSurfaceSystem>(
    cfg: &ExperimentConfig,
    sys: &S,
    gen: &GeneratorSystem,
) -> Result<ArtifactSet> {
    let mut records = Vec::new();
    let mut plus = Vec::new();
    let mut minus = Vec::new();
    for trial in 0..cfg.trials {
        let x0 = start_point(sys, cfg.seed, trial as u64)?;
        let it = Itinerary::new(cfg.seed, trial as u64);
        let est = tangent_lyapunov(sys, gen, &x0, &it, cfg.n).map_err(rt)?;
        plus.push(est.lambda_plus);
        minus.push(est.lambda_minus);
        records.push(json!({
            "trial": trial,
            "lambda_plus": est.lambda_plus,
            "lambda_minus": est.lambda_minus,
            "stderr_plus": est.stderr_plus,
            "stderr_minus": est.stderr_minus,
            "steps_used": est.n,
            "gaps": est.gaps,
        }));
    }
    let (mp, sp) = k3dyn::randwalk::mean_and_stderr(&plus);
    let (mm, sm) = k3dyn::randwalk::mean_and_stderr(&minus);
    Ok(ArtifactSet {
        records,
        summary: json!({
            "subcommand": "lyapunov",
            "trials": cfg.trials,
            "n": cfg.n,
            "lambda_plus": mp,
            "lambda_plus_stderr": sp,
            "lambda_minus": mm,
            "lambda_minus_stderr": sm,
            "sum": mp + mm,
        }),
        csv: None,
        svg: None,
    })
}

fn cohomology(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    let cs = coh_system(cfg)?;
    let fwd = coh_lyapunov(&cs, cfg.seed, cfg.trials, cfg.n, CohOrder::Pullback).map_err(rt)?;
    let rev = coh_lyapunov(&cs, cfg.seed, cfg.trials, cfg.n, CohOrder::Reversed).map_err(rt)?;
    let records = fwd
        .per_trial
        .iter()
        .zip(&rev.per_trial)
        .enumerate()
        .map(|(trial, (f, r))| {
            json!({"trial": trial, "lambda_pullback": f, "lambda_reversed": r})
        })
        .collect();
    Ok(ArtifactSet {
        records,
        summary: json!({
            "subcommand": "cohomology",
            "trials": cfg.trials,
            "n": cfg.n,
            "lambda_pullback": fwd.lambda,
            "lambda_pullback_stderr": fwd.stderr,
            "lambda_reversed": rev.lambda,
            "lambda_reversed_stderr": rev.stderr,
            "spectrum": fwd.spectrum.to_vec(),
            "spectrum_stderr": fwd.spectrum_stderr.to_vec(),
        }),
        csv: None,
        svg: None,
    })
}

fn classify(cfg: &ExperimentConfig) -> Result<ArtifactSet> {
    match cfg.surface {
        SurfaceSpec::Wehler { .. } => {}
        SurfaceSpec::Pentagon { .. } => {
            return Err(CliError::Runtime(
                "classification acts on the Wehler cohomology lattice".into(),
            ))
        }
    }
    let coh = k3dyn::wehler::coh_matrices();
    let mut records = Vec::new();
    let mut kinds = std::collections::BTreeMap::<String, usize>::new();
    for (i, word) in cfg.generators.words.iter().enumerate() {
        let m = k3dyn::wehler::pullback_of_word(word);
        let iso = LatticeIsometry::from_int(&coh.form, m).map_err(rt)?;
        let rep = classify_isometry(&coh.form, &iso).map_err(rt)?;
        let kak = kak_decompose(&coh.form, &iso).map_err(rt)?;
        *kinds.entry(format!("{:?}", rep.kind).to_lowercase()).or_default() += 1;
        records.push(json!({
            "word": word,
            "index": i,
            "kind": format!("{:?}", rep.kind).to_lowercase(),
            "spectral_radius": rep.spectral_radius,
            "translation_length": rep.translation_length,
            "char_poly": rep.char_poly,
            "salem_factor": rep.salem_factor,
            "cyclotomic_part": rep.cyclotomic_part,
            "kak_r": kak.r,
            "kak_residual": kak.residual,
        }));
    }
    Ok(ArtifactSet {
        records,
        summary: json!({"subcommand": "classify", "kinds": kinds}),
        csv: None,
        svg: None,
    })
}

fn boundary(cfg: &ExperimentConfig, quiet: bool) -> Result<ArtifactSet> {
    let cs = coh_system(cfg)?;
    let rep = furstenberg_estimate(&cs, cfg.seed, cfg.trials, cfg.n).map_err(rt)?;
    if let (false, Some(w)) = (quiet, &rep.warning) {
        eprintln!("warning: {w}");
    }
    let mut records = Vec::new();
    let mut klein = Vec::new();
    let ortho = cs.form.orthonormalize().map_err(rt)?;
    let ortho_inv = ortho
        .clone()
        .try_inverse()
        .ok_or_else(|| CliError::Runtime("orthonormalization not invertible".into()))?;
    for (k, class) in rep.sample.classes.iter().enumerate() {
        let it = Itinerary::new(cfg.seed, k as u64);
        let diag = if cfg.n > 0 {
            let lc = limit_class(&cs, &it, cfg.n).map_err(rt)?;
            json!({
                "q_value": lc.q_value,
                "equivariance_angle": lc.equivariance_angle,
                "nef_min_pairing": lc.nef_min_pairing,
            })
        } else {
            json!({"q_value": rep.sample.q_values[k]})
        };
        let v = nalgebra::DVector::from_vec(class.clone());
        let std_coords = &ortho_inv * v;
        if std_coords[0].abs() > 1e-12 {
            klein.push((std_coords[1] / std_coords[0], std_coords[2] / std_coords[0]));
        }
        records.push(json!({
            "trial": k,
            "e_hat": class,
            "diagnostics": diag,
        }));
    }
    let min_angle =
        rep.sample.pairwise_angles.iter().cloned().fold(f64::INFINITY, f64::min);
    let svg = svg::klein_scatter(&klein, &cfg.hash(), cfg.seed).map_err(rt)?;
    Ok(ArtifactSet {
        records,
        summary: json!({
            "subcommand": "boundary",
            "trials": cfg.trials,
            "n": cfg.n,
            "lambda_furstenberg": rep.lambda,
            "lambda_stderr": rep.stderr,
            "min_pairwise_angle": min_angle,
            "warning": rep.warning,
        }),
        csv: None,
        svg: Some(svg),
    })
}

fn stable_dirs<S: RealSurfaceSystem>(
    cfg: &ExperimentConfig,
    sys: &S,
    gen: &GeneratorSystem,
) -> Result<ArtifactSet> {
    let x0 = start_point(sys, cfg.seed, 0)?;
    let rep =
        stable_direction_dependence(sys, gen, &x0, cfg.seed, cfg.trials, cfg.n).map_err(rt)?;
    let records = rep
        .directions
        .iter()
        .enumerate()
        .map(|(k, d)| json!({"trial": k, "direction": [d.0, d.1]}))
        .collect();
    let mut angles = rep.pairwise_angles.clone();
    Ok(ArtifactSet {
        records,
        summary: json!({
            "subcommand": "stable-dirs",
            "trials": cfg.trials,
            "n": cfg.n,
            "retained": rep.directions.len(),
            "excluded": rep.excluded,
            "median_pairwise_angle": median(&mut angles),
        }),
        csv: None,
        svg: None,
    })
}

fn twist<S: RealSurfaceSystem>(
    cfg: &ExperimentConfig,
    sys: &S,
    gen: &GeneratorSystem,
) -> Result<ArtifactSet> {
    let mut records = Vec::new();
    let mut slopes = Vec::new();
    let mut first_plot: Option<String> = None;
    for trial in 0..cfg.trials {
        let x0 = start_point(sys, cfg.seed, trial as u64)?;
        let rep = twist_growth(sys, gen, 0, &x0, cfg.n).map_err(rt)?;
        slopes.push(rep.loglog_slope);
        if first_plot.is_none() {
            let xs: Vec<f64> = rep.ns.iter().map(|&v| (v as f64).ln()).collect();
            let (slope, intercept, _) = k3dyn::randwalk::linear_fit(&xs, &rep.log_norms);
            first_plot = Some(
                svg::growth_plot(
                    &xs,
                    &rep.log_norms,
                    slope,
                    intercept,
                    "loglog",
                    &cfg.hash(),
                    cfg.seed,
                )
                .map_err(rt)?,
            );
        }
        records.push(json!({
            "trial": trial,
            "ns": rep.ns,
            "log_norms": rep.log_norms,
            "loglog_slope": rep.loglog_slope,
            "loglog_r2": rep.loglog_r2,
            "semilog_slope": rep.semilog_slope,
            "semilog_r2": rep.semilog_r2,
            "truncated": rep.truncated,
        }));
    }
    let (mean_slope, slope_stderr) = k3dyn::randwalk::mean_and_stderr(&slopes);
    Ok(ArtifactSet {
        records,
        summary: json!({
            "subcommand": "twist",
            "trials": cfg.trials,
            "n_max": cfg.n,
            "mean_loglog_slope": mean_slope,
            "loglog_slope_stderr": slope_stderr,
        }),
        csv: None,
        svg: first_plot,
    })
}

fn equidist<S: RealSurfaceSystem>(
    cfg: &ExperimentConfig,
    sys: &S,
    gen: &GeneratorSystem,
) -> Result<ArtifactSet> {
    let x0 = start_point(sys, cfg.seed, 0)?;
    let it = Itinerary::new(cfg.seed, 0);
    let k_funcs = 8;
    let vol_samples = (cfg.n / 10).max(20_000);
    let rep = equidistribution_test(sys, gen, &x0, &it, cfg.n, k_funcs, vol_samples, cfg.seed)
        .map_err(rt)?;
    let records = (0..k_funcs)
        .map(|f| {
            json!({
                "function": f,
                "orbit_mean": rep.orbit_means[f],
                "orbit_stderr": rep.orbit_stderr[f],
                "vol_mean": rep.vol_means[f],
                "vol_stderr": rep.vol_stderr[f],
                "z": rep.z_scores[f],
            })
        })
        .collect();
    Ok(ArtifactSet {
        records,
        summary: json!({
            "subcommand": "equidist",
            "n": cfg.n,
            "vol_samples": vol_samples,
            "max_abs_z": rep.z_scores.iter().cloned().fold(0.0f64, |a, z| a.max(z.abs())),
            "verdict": if rep.consistent { "consistent" } else { "rejected" },
        }),
        csv: None,
        svg: None,
    })
}

/// Atomic write: temp file in the target directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact")
    ));
    fs::write(&tmp, bytes).map_err(rt)?;
    fs::rename(&tmp, path).map_err(rt)?;
    Ok(())
}

/// Write the artifact set: results.jsonl, summary.json, optional
/// samples.csv and plot.svg. Every record and file carries the config
/// hash and master seed.
pub fn write_artifacts(cfg: &ExperimentConfig, out: &Path, set: &ArtifactSet) -> Result<PathBuf> {
    fs::create_dir_all(out).map_err(rt)?;
    let hash = cfg.hash();
    let mut jsonl = String::new();
    for rec in &set.records {
        let mut obj = rec.clone();
        if let Some(map) = obj.as_object_mut() {
            map.insert("config_hash".into(), json!(hash));
            map.insert("master_seed".into(), json!(cfg.seed));
        }
        jsonl.push_str(&serde_json::to_string(&obj).map_err(rt)?);
        jsonl.push('\n');
    }
    write_atomic(&out.join("results.jsonl"), jsonl.as_bytes())?;

    let mut summary = set.summary.clone();
    if let Some(map) = summary.as_object_mut() {
        map.insert("config_hash".into(), json!(hash));
        map.insert("master_seed".into(), json!(cfg.seed));
    }
    let summary_path = out.join("summary.json");
    write_atomic(&summary_path, serde_json::to_string_pretty(&summary).map_err(rt)?.as_bytes())?;

    if let Some(csv) = &set.csv {
        let body = format!("# config_hash={hash} seed={}\n{csv}", cfg.seed);
        write_atomic(&out.join("samples.csv"), body.as_bytes())?;
    }
    if let Some(svg) = &set.svg {
        write_atomic(&out.join("plot.svg"), svg.as_bytes())?;
    }
    Ok(summary_path)
}

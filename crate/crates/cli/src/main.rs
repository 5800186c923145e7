//! `relatom`: runs the solvers and lemma checks and writes JSON/CSV reports.
//!
//! Exit codes: 0 all checks pass, 2 configuration or usage error,
//! 3 solver did not converge, 4 some check failed, 1 I/O failure.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use relatom::grid::Grid;
use relatom::hamiltonian::{ground_state_with, CouplingParams, DEFAULT_ALPHA};
use relatom::lab::fourier_mass::{fourier_mass_check, high_mode_case};
use relatom::lab::hard_part::{hard_part_constants, HardPartSetup};
use relatom::lab::partition::{first_order_cross_term, localization_check, partition_exactness_report, PartitionOfUnity};
use relatom::lab::report::{all_pass, LemmaReport};
use relatom::lab::selfcheck::*;
use relatom::lab::trial::{analyze_trial, build_trial_family, leading_term_report, trial_energy_report, ShellProfile, TrialAnalysis};
use relatom::lab::weyl::*;
use relatom::lanczos::LanczosOptions;
use relatom::projector::gaussian_field;
use relatom::radial::radial_ground_state;

const THREADS_VAR: &str = "RELATOM_THREADS";

#[derive(Parser)]
#[command(name = "relatom", version, about = "Brown–Ravenhall solvers and lemma checks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// Fine-structure constant.
    #[arg(long, global = true, default_value_t = DEFAULT_ALPHA)]
    alpha: f64,
    /// Grid points per axis (default 48; 128 for `weyl`).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Solver tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Directory for the reports.
    #[arg(long, global = true, default_value = "relatom-out")]
    out: PathBuf,
}

#[derive(Subcommand, Clone, Debug)]
enum Command {
    /// Dirac symbol, Bessel and projector invariant suites.
    Selfcheck,
    /// Lowest eigenvalue of the one-electron operator.
    GroundState {
        #[arg(long, default_value_t = 50.0)]
        z: f64,
        /// Box edge in orbital radii 1/(αZ).
        #[arg(long = "box", default_value_t = 8.0)]
        box_radii: f64,
        /// Write the eigenvector as a binary field dump.
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Weyl sequence residuals and energies.
    Weyl {
        #[arg(long, default_value_t = 50.0)]
        z: f64,
        /// Box edge in Compton wavelengths.
        #[arg(long = "box", default_value_t = 136.0)]
        box_l: f64,
        /// Grid for the one-electron ground state, centred in the box.
        #[arg(long, default_value_t = 56)]
        inner: usize,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 1.2])]
        lambdas: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![8.0, 16.0, 32.0])]
        r_sweep: Vec<f64>,
    },
    /// Trial-function families below the essential spectrum.
    Trial {
        #[arg(long, default_value_t = 2.0)]
        z: f64,
        #[arg(long, default_value_t = 2)]
        n: usize,
        /// Base radii R; shells sit at 2R, 4R, ...
        #[arg(long, value_delimiter = ',', default_values_t = vec![2e3, 2e4, 2e5])]
        r_sweep: Vec<f64>,
        /// Shells per family.
        #[arg(long, default_value_t = 3)]
        count: usize,
        /// Gaussians in the radial ground-state basis.
        #[arg(long, default_value_t = 24)]
        basis: usize,
    },
    /// Partition of unity, localization and hard-part checks.
    Lemmas {
        #[arg(long, default_value_t = 20.0)]
        z: f64,
        /// Box edge in Compton wavelengths for the localization sweep.
        #[arg(long = "box", default_value_t = 48.0)]
        box_l: f64,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.5, 3.0, 6.0])]
        r_sweep: Vec<f64>,
        /// Bottom of the spectrum one level down.
        #[arg(long, default_value_t = 0.0)]
        e_prev: f64,
    },
    /// Fourier mass outside a cube for functions orthogonal to low modes.
    FourierMass {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long, default_value_t = 2.0)]
        m: f64,
        #[arg(long, default_value_t = 50)]
        n_random: usize,
    },
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Convergence(String),
    Io(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Convergence(_) => 3,
            Failure::Io(_) => 1,
        }
    }
}

impl From<relatom::Error> for Failure {
    fn from(e: relatom::Error) -> Self {
        match e {
            relatom::Error::Convergence { .. } => Failure::Convergence(e.to_string()),
            relatom::Error::Io(_) | relatom::Error::Json(_) => Failure::Io(e.to_string()),
            _ => Failure::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Io(e.to_string())
    }
}

/// Everything that determines the output; hashed into every report.
#[derive(Serialize)]
struct RunConfig {
    command: String,
    alpha: f64,
    z: Option<f64>,
    grid_n: usize,
    box_l: Option<f64>,
    tolerance: f64,
    seed: u64,
    options: BTreeMap<String, Value>,
}

impl RunConfig {
    fn hash(&self) -> String {
        let digest = Sha256::digest(serde_json::to_vec(self).expect("config serializes"));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

struct Outcome {
    reports: Vec<LemmaReport>,
    results: Value,
    /// Extra CSV tables: file stem and rows (first row is the header).
    tables: Vec<(String, Vec<Vec<String>>)>,
}

impl Outcome {
    fn reports(reports: Vec<LemmaReport>) -> Self {
        Self { reports, results: Value::Null, tables: Vec::new() }
    }
}

fn thread_count() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1))
}

/// Maps `f` over `items` on a bounded pool; results keep the input order.
fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let next = AtomicUsize::new(0);
    let out: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..thread_count().min(items.len()) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *out[i].lock().unwrap() = Some(r);
            });
        }
    });
    out.into_iter().map(|m| m.into_inner().unwrap().expect("job finished")).collect()
}

fn params(alpha: f64, z: f64) -> Result<CouplingParams, Failure> {
    Ok(CouplingParams::new(alpha, z)?)
}

fn selfcheck(c: &Common, grid_n: usize) -> Result<Outcome, Failure> {
    let jobs: Vec<u8> = (0..5).collect();
    let results = par_map(&jobs, |&k| -> relatom::Result<LemmaReport> {
        Ok(match k {
            0 => projector_algebra_report(1000, c.seed),
            1 => bessel_accuracy_report(400),
            2 => bessel_derivative_report(400),
            3 => dual_representation_report(grid_n, 40.0, 10, c.seed, 5e-2)?,
            _ => decay_report(10, 50, c.seed, 1e-9)?,
        })
    });
    Ok(Outcome::reports(results.into_iter().collect::<relatom::Result<_>>()?))
}

fn ground_state(c: &Common, grid_n: usize, z: f64, box_radii: f64, dump: Option<&Path>) -> Result<Outcome, Failure> {
    let p = params(c.alpha, z)?;
    let box_l = box_radii * p.orbital_radius();
    let opts = LanczosOptions { tol: c.tol, ..LanczosOptions::default() };
    let gs = ground_state_with(&p, grid_n, box_l, &opts, c.seed)?;
    let e = gs.result.e1;
    let reports = vec![
        LemmaReport::at_least("ground_state.bracket_low", e, 1.0 - p.alpha_z(), 0.0).input("z", z),
        {
            let r = LemmaReport::at_most("ground_state.bracket_high", e, 1.0, 0.0).input("z", z);
            if e < 1.0 {
                r
            } else {
                r.force_fail("E1 must lie strictly below 1")
            }
        },
        LemmaReport::at_most("ground_state.residual", gs.result.residual, c.tol, 0.0).input("z", z),
    ];
    if let Some(path) = dump {
        relatom::io::write_field(path, &gs.state, json!({ "z": z, "alpha": c.alpha, "e1": e }))?;
    }
    Ok(Outcome { reports, results: serde_json::to_value(&gs.result).expect("result serializes"), tables: Vec::new() })
}

fn weyl(c: &Common, grid_n: usize, z: f64, box_l: f64, inner: usize, lambdas: &[f64], r_sweep: &[f64]) -> Result<Outcome, Failure> {
    if lambdas.is_empty() || r_sweep.is_empty() {
        return Err(Failure::Config("empty lambda or radius sweep".into()));
    }
    let g = Grid::new(grid_n, box_l)?;
    let opts = LanczosOptions { tol: c.tol, ..LanczosOptions::default() };
    let ctx = WeylContext::from_ground_state(g, params(c.alpha, z)?, inner, &opts, c.seed)?;
    let r_max = r_sweep.iter().cloned().fold(0.0, f64::max);
    let per_lambda = par_map(lambdas, |&lambda| -> relatom::Result<Vec<LemmaReport>> {
        let mut reps = Vec::new();
        let mut residuals = Vec::new();
        for &r in r_sweep {
            let s = build_weyl_state(&g, lambda, r, 11)?;
            residuals.push(weyl_residual_report(&ctx, &s));
            reps.push(antisym_overlap_check(&ctx, &s, 0.9));
            if r == r_max {
                reps.push(weyl_energy_report(&ctx, &s, 0.05)?);
            }
        }
        reps.push(weyl_trend_report(&residuals));
        reps.extend(residuals);
        Ok(reps)
    });
    let mut reports = Vec::new();
    for r in per_lambda {
        reports.extend(r?);
    }
    Ok(Outcome::reports(reports))
}

fn trial(c: &Common, z: f64, n: usize, r_sweep: &[f64], count: usize, basis: usize) -> Result<Outcome, Failure> {
    if r_sweep.is_empty() {
        return Err(Failure::Config("empty radius sweep".into()));
    }
    let p = params(c.alpha, z)?;
    let gs = radial_ground_state(&p, basis)?;
    let profile = Arc::new(ShellProfile::new(n.max(1)));
    let analyses: Vec<TrialAnalysis> = par_map(r_sweep, |&r| -> relatom::Result<TrialAnalysis> {
        let fam = build_trial_family(&p, n, r, count, &gs, profile.clone())?;
        analyze_trial(&fam)
    })
    .into_iter()
    .collect::<relatom::Result<_>>()?;

    let mut reports = Vec::new();
    let mut rows = vec![
        ["base_r", "m", "r_m", "norm_sqr", "kinetic", "nuclear", "i1", "i2", "i3", "total", "chain", "diagonal_coefficient"]
            .map(String::from)
            .to_vec(),
    ];
    for (a, &base) in analyses.iter().zip(r_sweep) {
        reports.push(trial_energy_report(a).input("base_r", base));
        reports.push(
            LemmaReport::at_most("trial.term_bounds", a.violations.len() as f64, 0.0, 0.0)
                .input("z", z)
                .input("base_r", base)
                .note(a.violations.join("; ")),
        );
        for (m, d) in a.diagonal.iter().enumerate() {
            let vals = [d.r_m, d.norm_sqr, d.kinetic, d.nuclear, d.i1, d.i2, d.i3, d.total, d.chain, d.leading];
            let mut row = vec![format!("{base:e}"), (m + 1).to_string()];
            row.extend(vals.iter().map(|v| format!("{v:e}")));
            rows.push(row);
        }
    }
    reports.push(leading_term_report(&analyses, n, 0.3));
    let results = json!({
        "e1": gs.energy,
        "mu": analyses.iter().map(|a| a.mu).collect::<Vec<_>>(),
        "rayleigh": analyses.iter().map(|a| a.rayleigh()).collect::<Vec<_>>(),
    });
    Ok(Outcome { reports, results, tables: vec![("trial_terms".into(), rows)] })
}

fn lemmas(c: &Common, grid_n: usize, z: f64, box_l: f64, r_sweep: &[f64], e_prev: f64) -> Result<Outcome, Failure> {
    let p = params(c.alpha, z)?;
    let mut reports = Vec::new();
    for n in 1..=3 {
        let part = PartitionOfUnity::new(n, 3.0)?;
        reports.push(partition_exactness_report(&part, 10_000, c.seed));
        reports.push(first_order_cross_term(&part, 1000, c.seed));
    }
    let g = Grid::new(grid_n, box_l)?;
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let fields = vec![gaussian_field(g, &mut rng)];
    let local = par_map(r_sweep, |&r| -> relatom::Result<LemmaReport> {
        let part = PartitionOfUnity::new(1, r)?;
        localization_check(&fields, &part, &p, 0.5, 20)
    })
    .into_iter()
    .collect::<relatom::Result<Vec<_>>>()?;
    for (w, rs) in local.windows(2).zip(r_sweep.windows(2)) {
        let ratio = w[0].measured / w[1].measured;
        reports.push(
            LemmaReport::at_most("localization.halving", (ratio - 2.1).abs(), 0.5, 0.0)
                .input("r", rs[0])
                .input("r_next", rs[1])
                .detail("ratio", ratio),
        );
    }
    reports.extend(local);
    reports.push(hard_part_constants(&p, e_prev, &HardPartSetup { seed: c.seed, ..HardPartSetup::default() })?);
    Ok(Outcome::reports(reports))
}

fn fourier_mass(c: &Common, dim: usize, r: f64, m: f64, n_random: usize) -> Result<Outcome, Failure> {
    let mut reports = vec![fourier_mass_check(dim, r, m, n_random, c.seed)?];
    let high = high_mode_case(dim, r, m)?;
    reports.push(LemmaReport::at_least("fourier_mass.high_mode", high.ratio(), 0.5, 0.0).input("dim", dim).input("r", r).input("m", m));
    Ok(Outcome::reports(reports))
}

fn write_outputs(dir: &Path, cfg: &RunConfig, out: &Outcome) -> Result<(), Failure> {
    fs::create_dir_all(dir)?;
    let doc = json!({
        "tool": "relatom",
        "version": env!("CARGO_PKG_VERSION"),
        "config_hash": cfg.hash(),
        "config": cfg,
        "pass": all_pass(&out.reports),
        "reports": out.reports,
        "results": out.results,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    fs::write(dir.join(format!("{}.json", cfg.command)), text)?;

    let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", cfg.command)))?;
    w.write_record(["lemma", "params", "measured", "bound", "margin", "pass"])?;
    for r in &out.reports {
        w.write_record([
            r.lemma.clone(),
            r.params_string(),
            format!("{:e}", r.measured),
            format!("{:e}", r.bound),
            format!("{:e}", r.margin),
            r.pass.to_string(),
        ])?;
    }
    w.flush()?;
    for (stem, rows) in &out.tables {
        let mut w = csv::Writer::from_path(dir.join(format!("{stem}.csv")))?;
        for row in rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let c = &cli.common;
    let grid_n = c.grid.unwrap_or(match cli.command {
        Command::Weyl { .. } => 128,
        _ => 48,
    });
    let mut options = BTreeMap::new();
    let (name, z, box_l, outcome) = match &cli.command {
        Command::Selfcheck => ("selfcheck", None, Some(40.0), selfcheck(c, grid_n)?),
        Command::GroundState { z, box_radii, dump } => {
            options.insert("box_orbital_radii".into(), json!(box_radii));
            let box_l = params(c.alpha, *z)?.orbital_radius() * box_radii;
            ("ground-state", Some(*z), Some(box_l), ground_state(c, grid_n, *z, *box_radii, dump.as_deref())?)
        }
        Command::Weyl { z, box_l, inner, lambdas, r_sweep } => {
            options.insert("inner_grid".into(), json!(inner));
            options.insert("lambdas".into(), json!(lambdas));
            options.insert("r_sweep".into(), json!(r_sweep));
            ("weyl", Some(*z), Some(*box_l), weyl(c, grid_n, *z, *box_l, *inner, lambdas, r_sweep)?)
        }
        Command::Trial { z, n, r_sweep, count, basis } => {
            options.insert("n".into(), json!(n));
            options.insert("r_sweep".into(), json!(r_sweep));
            options.insert("count".into(), json!(count));
            options.insert("basis".into(), json!(basis));
            ("trial", Some(*z), None, trial(c, *z, *n, r_sweep, *count, *basis)?)
        }
        Command::Lemmas { z, box_l, r_sweep, e_prev } => {
            options.insert("r_sweep".into(), json!(r_sweep));
            options.insert("e_prev".into(), json!(e_prev));
            ("lemmas", Some(*z), Some(*box_l), lemmas(c, grid_n, *z, *box_l, r_sweep, *e_prev)?)
        }
        Command::FourierMass { dim, r, m, n_random } => {
            options.insert("dim".into(), json!(dim));
            options.insert("r".into(), json!(r));
            options.insert("m".into(), json!(m));
            options.insert("n_random".into(), json!(n_random));
            ("fourier-mass", None, None, fourier_mass(c, *dim, *r, *m, *n_random)?)
        }
    };
    let cfg = RunConfig {
        command: name.to_string(),
        alpha: c.alpha,
        z,
        grid_n,
        box_l,
        tolerance: c.tol,
        seed: c.seed,
        options,
    };
    write_outputs(&c.out, &cfg, &outcome)?;
    for r in &outcome.reports {
        println!("{} {} measured={:.6e} bound={:.6e}", if r.pass { "PASS" } else { "FAIL" }, r.lemma, r.measured, r.bound);
    }
    Ok(all_pass(&outcome.reports))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(4),
        Err(f) => {
            let msg = match &f {
                Failure::Config(m) | Failure::Convergence(m) | Failure::Io(m) => m,
            };
            eprintln!("relatom: {msg}");
            ExitCode::from(f.code())
        }
    }
}

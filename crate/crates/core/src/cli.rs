//! Command-line interface.
//!
//! Exit codes: 0 on success, 1 for configuration and input errors, 2 for
//! numerical failures (CFL violation, non-finite values).

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::diagnostics::{audit_grad_q, audit_triple_product, pressure_frequency_split, wall_traces, WallTraces};
use crate::elliptic::recover_pressures;
use crate::error::{Error, Result};
use crate::field::{velocity_from_state, FlowState, Regime, ScalarField};
use crate::grid::{build_grid, Grid};
use crate::initial::InitialCondition;
use crate::snapshot::{physical_samples, read_snapshot, write_fields, write_series_file, write_snapshot};
use crate::solver::SolverConfig;
use crate::study::{run_simulation, run_study, StudyConfig};

#[derive(Debug, Parser)]
#[command(name = "anisoflow", version, about = "Anisotropic Navier-Stokes channel solver and audit harness")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Directory for all output files.
    #[arg(long, global = true, default_value = "out")]
    pub out_dir: PathBuf,
    /// Worker threads for the study pool.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides the seed of random initial conditions and audit corpora.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrates the viscous system.
    Run { config: PathBuf },
    /// Integrates the limit system (nu2 = 0).
    Limit { config: PathBuf },
    /// Runs the nu2 family against the limit system.
    Study { config: PathBuf },
    /// Audits a snapshot, or a seeded corpus of random band-limited fields.
    Audit {
        snapshot: Option<PathBuf>,
        #[arg(long, conflicts_with = "snapshot")]
        random: Option<usize>,
    },
    /// Recovers the flow and boundary-layer pressures of a snapshot.
    Pressure { snapshot: PathBuf },
}

fn load_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn apply_seed(ic: &mut InitialCondition, seed: Option<u64>) {
    if let (InitialCondition::RandomModes { seed: s, .. }, Some(new)) = (ic, seed) {
        *s = new;
    }
}

fn cmd_run(global: &GlobalArgs, config: &Path, regime: Regime) -> Result<()> {
    let mut cfg: SolverConfig = load_json(config)?;
    apply_seed(&mut cfg.initial, global.seed);
    let cfg = match regime {
        Regime::Viscous => SolverConfig { regime, ..cfg },
        Regime::Limit => cfg.to_limit(),
    };
    let out = run_simulation(&cfg)?;
    let dir = &global.out_dir;
    write_series_file(&dir.join("series.csv"), &out.series)?;
    for (i, s) in out.snapshots.iter().enumerate() {
        write_snapshot(&dir.join(format!("snapshot_{i:04}.bin")), s)?;
    }
    println!(
        "{} steps, {} records, {} snapshots in {}",
        out.steps,
        out.series.len(),
        out.snapshots.len(),
        dir.display()
    );
    Ok(())
}

fn cmd_study(global: &GlobalArgs, config: &Path) -> Result<()> {
    let mut cfg: StudyConfig = load_json(config)?;
    apply_seed(&mut cfg.initial, global.seed);
    let res = run_study(&cfg)?;
    let dir = &global.out_dir;
    write_json(&dir.join("study_summary.json"), &res)?;
    write_series_file(&dir.join("series_limit.csv"), &res.family.limit_series)?;
    for m in &res.family.members {
        write_series_file(&dir.join(format!("series_nu2_{:e}.csv", m.nu2)), &m.series)?;
    }
    for a in &res.family.alpha {
        println!("alpha_{} = {:.4} (residual {:.2e})", a.r, a.fit.alpha, a.fit.residual);
    }
    println!("study finished in {:.1} s", res.runtime_seconds);
    if res.family.is_partial() {
        println!("partial result, failed nu2: {:?}", res.family.failed);
    }
    Ok(())
}

/// Seeded random field `sum a_kn cos(k x + phi) cos(n pi y)` over a small band,
/// defined analytically so that it can be sampled on any grid.
#[derive(Debug, Clone)]
pub struct BandLimited {
    terms: Vec<(f64, f64, f64, f64)>,
}

impl BandLimited {
    pub fn random(rng: &mut ChaCha8Rng, kmax: u32, nmax: u32) -> Self {
        let mut terms = Vec::new();
        for k in 0..=kmax {
            for n in 0..=nmax {
                let a: f64 = rng.random_range(-1.0..1.0);
                let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                terms.push((k as f64, n as f64, a, phase));
            }
        }
        Self { terms }
    }

    pub fn sample(&self, grid: &std::sync::Arc<Grid>) -> ScalarField {
        ScalarField::from_fn(grid, |x, y| {
            self.terms.iter().map(|(k, n, a, ph)| a * (k * x + ph).cos() * (n * std::f64::consts::PI * y).cos()).sum()
        })
    }
}

/// Maximum triple-product ratio per `m` over a seeded corpus, on a grid and on its refinement.
#[derive(Debug, Clone, Serialize)]
pub struct TripleProductCorpus {
    pub m: f64,
    pub max_ratio: f64,
    pub max_ratio_refined: f64,
    pub all_finite: bool,
}

pub fn triple_product_corpus(count: usize, seed: u64, nx: usize, ny: usize) -> Result<Vec<TripleProductCorpus>> {
    let coarse = build_grid(nx, ny, 0.0)?;
    let fine = build_grid(2 * nx, 2 * ny - 1, 0.0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let triples: Vec<[BandLimited; 3]> = (0..count)
        .map(|_| {
            let mut field = || BandLimited::random(&mut rng, 4, 3);
            [field(), field(), field()]
        })
        .collect();
    [1.0, 2.0, 4.0]
        .iter()
        .map(|&m| {
            let mut out = TripleProductCorpus { m, max_ratio: 0.0, max_ratio_refined: 0.0, all_finite: true };
            for t in &triples {
                for (grid, slot) in [(&coarse, 0), (&fine, 1)] {
                    let r = audit_triple_product(&t[0].sample(grid), &t[1].sample(grid), &t[2].sample(grid), m)?;
                    out.all_finite &= r.is_finite();
                    if slot == 0 {
                        out.max_ratio = out.max_ratio.max(r);
                    } else {
                        out.max_ratio_refined = out.max_ratio_refined.max(r);
                    }
                }
            }
            Ok(out)
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotAudit {
    pub t: f64,
    /// `(m, ratio)` for `f = g = u`, `h = v`.
    pub triple_product: Vec<(f64, f64)>,
    pub grad_q_ratio: Option<f64>,
    pub split_radius: f64,
    pub split_low_ratio: f64,
    pub split_high_ratio: f64,
    pub wall_traces: WallTraces,
}

pub fn audit_snapshot(s: &FlowState) -> Result<SnapshotAudit> {
    let (u, v) = velocity_from_state(s);
    let triple_product =
        [1.0, 2.0, 4.0].iter().map(|&m| Ok((m, audit_triple_product(&u, &u, &v, m)?))).collect::<Result<Vec<_>>>()?;
    let grad_q_ratio = match s.regime {
        Regime::Viscous => Some(audit_grad_q(s)?),
        Regime::Limit => None,
    };
    let pressures = recover_pressures(s)?;
    let radius = (s.grid().nx / 3) as f64 / 2.0;
    let split = pressure_frequency_split(&pressures.p, radius)?;
    Ok(SnapshotAudit {
        t: s.t,
        triple_product,
        grad_q_ratio,
        split_radius: radius,
        split_low_ratio: split.low_ratio,
        split_high_ratio: split.high_ratio,
        wall_traces: wall_traces(s),
    })
}

fn cmd_audit(global: &GlobalArgs, snapshot: Option<&Path>, random: Option<usize>) -> Result<()> {
    let report = match (snapshot, random) {
        (Some(path), None) => serde_json::to_value(audit_snapshot(&read_snapshot(path)?)?)?,
        (None, Some(n)) => {
            let corpus = triple_product_corpus(n, global.seed.unwrap_or(0), 32, 33)?;
            json!({ "count": n, "seed": global.seed.unwrap_or(0), "triple_product": corpus })
        }
        _ => return Err(Error::Config("audit needs a snapshot path or --random N".into())),
    };
    write_json(&global.out_dir.join("audit.json"), &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_pressure(global: &GlobalArgs, snapshot: &Path) -> Result<()> {
    let s = read_snapshot(snapshot)?;
    let pq = recover_pressures(&s)?;
    let (p, q) = (physical_samples(&pq.p), physical_samples(&pq.q));
    write_fields(&global.out_dir.join("pressure.bin"), &s, &["p", "q"], &[&p, &q])?;
    println!("wrote {}", global.out_dir.join("pressure.bin").display());
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        // a second call in one process keeps the first pool, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    fs::create_dir_all(&cli.global.out_dir)?;
    match &cli.command {
        Command::Run { config } => cmd_run(&cli.global, config, Regime::Viscous),
        Command::Limit { config } => cmd_run(&cli.global, config, Regime::Limit),
        Command::Study { config } => cmd_study(&cli.global, config),
        Command::Audit { snapshot, random } => cmd_audit(&cli.global, snapshot.as_deref(), *random),
        Command::Pressure { snapshot } => cmd_pressure(&cli.global, snapshot),
    }
}

/// Parses `args` and runs the command; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

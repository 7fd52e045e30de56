use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use virlab_cli::config::{load_config, FileConfig, RunConfig};
use virlab_cli::experiments;
use virlab_cli::output::{self, Manifest, Versions};

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser)]
#[command(name = "virlab", version, about = "Experiments on circle diffeomorphisms, welding and bridge measures")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// key = value config file with optional [params] and per-experiment sections
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this
    #[arg(long)]
    workers: Option<usize>,
    /// Output root, overriding VIRLAB_OUT
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    params: virlab_cli::config::Params,
}

#[derive(Subcommand)]
enum Cmd {
    /// Draw ν_β samples and summarize them
    Sample(Common),
    /// Weld a Möbius map, or ν_β samples when --samples is given
    Weld(Common),
    /// C*C spectrum of the truncated blocks of a Möbius map
    Blocks(Common),
    /// Möbius determinants against closed forms
    Det(Common),
    #[command(name = "su11-check")]
    /// Möbius determinant exponents and the spin ratio
    Su11Check(Common),
    #[command(name = "s2-check")]
    /// Toeplitz commutator determinant
    S2Check(Common),
    #[command(name = "cocycle-identity")]
    /// Bott cocycle identity (--kind bott) or Möbius determinant cocycle (--kind det)
    CocycleIdentity(Common),
    #[command(name = "virasoro-check")]
    /// Virasoro structure constants from quadrature
    VirasoroCheck(Common),
    #[command(name = "rn-check")]
    /// Radon–Nikodym mean and transfer identity
    RnCheck(Common),
    #[command(name = "shift-bound")]
    /// Gaussian shift bound on a (β, |h|) grid
    ShiftBound(Common),
    /// Heavy-tailed exponential statistic across β
    Q3220(Common),
    #[command(name = "pitman-yor")]
    /// Laws of the Pitman–Yor functional at β and β/2
    PitmanYor(Common),
    /// Regularized energy with its δ-level residuals
    Energy(Common),
    #[command(name = "beta-sweep")]
    /// Weighted ensembles along a decreasing β schedule
    BetaSweep(Common),
    #[command(name = "probe-13-6")]
    /// Smallest eigenvalue of |A_a| − |A_p|
    Probe136(Common),
}

impl Cmd {
    fn split(self) -> (&'static str, Common) {
        match self {
            Cmd::Sample(c) => ("sample", c),
            Cmd::Weld(c) => ("weld", c),
            Cmd::Blocks(c) => ("blocks", c),
            Cmd::Det(c) => ("det", c),
            Cmd::Su11Check(c) => ("su11-check", c),
            Cmd::S2Check(c) => ("s2-check", c),
            Cmd::CocycleIdentity(c) => ("cocycle-identity", c),
            Cmd::VirasoroCheck(c) => ("virasoro-check", c),
            Cmd::RnCheck(c) => ("rn-check", c),
            Cmd::ShiftBound(c) => ("shift-bound", c),
            Cmd::Q3220(c) => ("q3220", c),
            Cmd::PitmanYor(c) => ("pitman-yor", c),
            Cmd::Energy(c) => ("energy", c),
            Cmd::BetaSweep(c) => ("beta-sweep", c),
            Cmd::Probe136(c) => ("probe-13-6", c),
        }
    }
}

fn resolve(name: &str, c: Common) -> Result<(RunConfig, PathBuf), String> {
    let file = match &c.config {
        Some(path) => load_config(path, name).map_err(|e| e.to_string())?,
        None => FileConfig::default(),
    };
    let cfg = RunConfig {
        experiment: name.to_string(),
        params: file.params.overlay(c.params),
        seed: c.seed.or(file.seed).unwrap_or(0),
        workers: c.workers.or(file.workers).unwrap_or(1),
    };
    cfg.validate().map_err(|e| e.to_string())?;
    let root = c.out.unwrap_or_else(output::output_root);
    let dir = root.join(name).join(&cfg.fingerprint()[..16]);
    Ok((cfg, dir))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, common) = cli.cmd.split();
    let (cfg, dir) = match resolve(name, common) {
        Ok(x) => x,
        Err(msg) => {
            eprintln!("virlab {name}: invalid configuration\n{msg}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let start = Instant::now();
    let result = experiments::run(&cfg);
    let fingerprint = cfg.fingerprint();
    let (status, error, files) = match &result {
        Ok(tables) => match output::write_tables(&dir, tables) {
            Ok(files) => ("ok", None, files),
            Err(e) => ("failed", Some(format!("writing results: {e}")), Vec::new()),
        },
        Err(e) => ("failed", Some(e.to_string()), Vec::new()),
    };
    let manifest = Manifest {
        experiment: name,
        config: &cfg,
        seed: cfg.seed,
        workers: cfg.workers,
        fingerprint: &fingerprint,
        versions: Versions::current(),
        wall_time_s: start.elapsed().as_secs_f64(),
        status,
        error: error.clone(),
        files,
    };
    if let Err(e) = output::write_manifest(&dir, &manifest) {
        eprintln!("virlab {name}: cannot write manifest: {e}");
        return ExitCode::from(EXIT_NUMERIC);
    }
    match error {
        None => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Some(msg) => {
            eprintln!("virlab {name}: {msg}");
            ExitCode::from(EXIT_NUMERIC)
        }
    }
}

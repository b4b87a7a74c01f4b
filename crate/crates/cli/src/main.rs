use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use optbench::dynamics::{run_chain, ChainSpec};
use optbench::harness::suite::{default_suite, parse_dims, parse_manifest, write_manifest};
use optbench::harness::{
    classify_all, compute_references, parse_query, run_suite, ExperimentDB, SuiteOptions, UnitTest,
};
use optbench::optimizers::{default_setups, expand_grid, AlgorithmSetup, Family};
use optbench::report::{layout, render, ImageFormat};
use optbench::{Error, Result};

#[derive(Parser)]
#[command(
    name = "optbench",
    version,
    about = "Unit tests for stochastic optimization algorithms"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DbArg {
    /// Experiment database (line-delimited JSON).
    #[arg(long, env = "OPTBENCH_DB")]
    db: PathBuf,
}

#[derive(Args)]
struct Exec {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parallel experiment workers.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    #[arg(long, default_value_t = optbench::harness::REPEATS)]
    repeats: u32,
    #[arg(long, default_value_t = optbench::harness::STEPS)]
    steps: u32,
}

fn default_workers() -> usize {
    SuiteOptions::default().workers
}

impl Exec {
    fn options(&self) -> SuiteOptions {
        SuiteOptions {
            workers: self.workers,
            repeats: self.repeats,
            steps: self.steps,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write the default suite manifest.
    Generate {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "1,2,10")]
        dims: String,
    },
    /// Compute references and run every setup on every unit test.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// JSON array of setups; defaults to the built-in grids.
        #[arg(long)]
        setups: Option<PathBuf>,
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        exec: Exec,
    },
    /// Compute tuned-SGD references only.
    Reference {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        db: DbArg,
        #[command(flatten)]
        exec: Exec,
    },
    /// Recompute colour classes from the stored runs.
    Classify {
        #[command(flatten)]
        db: DbArg,
    },
    /// Print matching run records as JSON lines.
    Filter {
        #[command(flatten)]
        db: DbArg,
        /// JSON object, e.g. '{"fun":["quad"],"algo":["sgd"],"learningRate":1e-4}'.
        #[arg(long, default_value = "{}")]
        query: String,
        /// Print only the number of matches.
        #[arg(long)]
        count: bool,
    },
    /// Render the heatmap (.ppm or .svg).
    Report {
        #[command(flatten)]
        db: DbArg,
        #[arg(long)]
        out: PathBuf,
    },
    /// Append a hyperparameter grid over a built-in family to a setups file.
    AddAlgoGrid {
        #[arg(long)]
        family: String,
        /// JSON object mapping hyperparameter names to value lists.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        setups: PathBuf,
    },
    /// Run a chain of unit tests with one optimizer whose state persists.
    Chain {
        #[arg(long)]
        spec: PathBuf,
        /// JSON file holding one setup.
        #[arg(long)]
        setup: PathBuf,
        #[command(flatten)]
        db: DbArg,
        #[arg(long, default_value_t = 1)]
        repeats: u32,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn in_file<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Json(j) => Error::Config(format!("{}: {j}", path.display())),
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

fn load_manifest(path: &Path) -> Result<Vec<UnitTest>> {
    in_file(path, parse_manifest(&read(path)?))
}

fn load_setups(path: &Path) -> Result<Vec<AlgorithmSetup>> {
    let setups: Vec<AlgorithmSetup> = in_file(path, serde_json::from_str(&read(path)?).map_err(Error::from))?;
    for s in &setups {
        in_file(path, s.validate())?;
    }
    Ok(setups)
}

fn parse_family(tag: &str) -> Result<Family> {
    Family::ALL.into_iter().find(|f| f.tag() == tag).ok_or_else(|| {
        let known: Vec<&str> = Family::ALL.iter().map(|f| f.tag()).collect();
        Error::Config(format!("unknown family `{tag}`; known: {}", known.join(", ")))
    })
}

fn execute(cmd: Command) -> Result<()> {
    match cmd {
        Command::Generate { out, seed, dims } => {
            let tests = default_suite(seed, &parse_dims(&dims)?)?;
            write(&out, write_manifest(&tests)?.as_bytes())?;
            log::info!("wrote {} unit tests to {}", tests.len(), out.display());
            println!("{}", tests.len());
        }
        Command::Run {
            manifest,
            setups,
            db,
            exec,
        } => {
            let tests = load_manifest(&manifest)?;
            let setups = match setups {
                Some(p) => load_setups(&p)?,
                None => default_setups(),
            };
            let mut store = ExperimentDB::open_or_create(&db.db, exec.seed)?;
            let summary = run_suite(&mut store, &tests, &setups, &exec.options())?;
            store.save(&db.db)?;
            println!(
                "references: {} new, {} unavailable; experiments: {} run, {} failed",
                summary.references_computed, summary.unreferenced, summary.experiments_run, summary.experiments_failed
            );
        }
        Command::Reference { manifest, db, exec } => {
            let tests = load_manifest(&manifest)?;
            let mut store = ExperimentDB::open_or_create(&db.db, exec.seed)?;
            let summary = compute_references(&mut store, &tests, &exec.options())?;
            store.save(&db.db)?;
            println!(
                "references: {} new, {} unavailable",
                summary.references_computed, summary.unreferenced
            );
        }
        Command::Classify { db } => {
            let mut store = ExperimentDB::load(&db.db)?;
            let n = classify_all(&mut store);
            store.save(&db.db)?;
            println!("classified {n} pairings");
        }
        Command::Filter { db, query, count } => {
            let store = ExperimentDB::load(&db.db)?;
            let query = parse_query(&query).map_err(|e| Error::Config(format!("--query: {e}")))?;
            let records = store.filter(&query)?;
            let stdout = std::io::stdout();
            let mut out = stdout.lock();
            let io = |e| Error::io("<stdout>", e);
            if count {
                writeln!(out, "{}", records.len()).map_err(io)?;
            } else {
                for r in records {
                    writeln!(out, "{}", serde_json::to_string(r)?).map_err(io)?;
                }
            }
        }
        Command::Report { db, out } => {
            let format = ImageFormat::from_path(&out)?;
            let store = ExperimentDB::load(&db.db)?;
            render(&layout(&store)?, &out, format)?;
        }
        Command::AddAlgoGrid { family, grid, setups } => {
            let family = parse_family(&family)?;
            let axes: std::collections::BTreeMap<String, Vec<f64>> =
                serde_json::from_str(&grid).map_err(|e| Error::Config(format!("--grid: {e}")))?;
            let axes: Vec<(&str, Vec<f64>)> = axes.iter().map(|(k, v)| (k.as_str(), v.clone())).collect();
            let new = expand_grid(family, &axes)?;
            let mut all = if setups.exists() {
                load_setups(&setups)?
            } else {
                Vec::new()
            };
            let before = all.len();
            for s in new {
                if !all.contains(&s) {
                    all.push(s);
                }
            }
            let mut text = serde_json::to_string_pretty(&all)?;
            text.push('\n');
            write(&setups, text.as_bytes())?;
            println!("added {} setups ({} total)", all.len() - before, all.len());
        }
        Command::Chain {
            spec,
            setup,
            db,
            repeats,
            out,
        } => {
            let chain: ChainSpec = in_file(&spec, serde_json::from_str(&read(&spec)?).map_err(Error::from))?;
            let setup: AlgorithmSetup = in_file(&setup, serde_json::from_str(&read(&setup)?).map_err(Error::from))?;
            let store = ExperimentDB::load(&db.db)?;
            let mut text = String::new();
            for k in 0..repeats {
                let outcome = run_chain(&chain, |id| store.tests.get(id), &setup, store.suite_seed, k)?;
                text.push_str(&serde_json::to_string(&outcome)?);
                text.push('\n');
            }
            match out {
                Some(p) => write(&p, text.as_bytes())?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

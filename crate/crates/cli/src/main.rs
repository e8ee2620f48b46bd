use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Arg, ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand};
use loadshape::config::{MethodChoice, RunConfig, OVERRIDE_KEYS};
use loadshape::synth::{default_archetypes, generate_dataset, SynthConfig};
use loadshape::{pipeline, Stratum};

#[derive(Parser)]
#[command(name = "loadshape", version, about = "Cluster domestic electricity load profiles")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic readings CSV from load-shape archetypes.
    Synth(SynthArgs),
    /// Clean the input and write diagnostics and mean profiles.
    Ingest(RunArgs),
    /// Run the configured method and write a run directory.
    Cluster(RunArgs),
    /// Kmeans WCSS for a range of k (elbow curve).
    SweepK {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 2)]
        k_min: usize,
        #[arg(long, default_value_t = 15)]
        k_max: usize,
    },
    /// Run Kmeans, SOM and two-stage on the same profiles and compare MIA.
    Compare(RunArgs),
    /// Regenerate the SVGs of a run directory from its CSV files.
    Render {
        dir: PathBuf,
        #[arg(long, default_value = "winter-weekend")]
        stratum: Stratum,
    },
}

#[derive(Args)]
struct SynthArgs {
    /// Readings CSV to write.
    #[arg(long)]
    out: PathBuf,
    /// Also write `household_id,archetype` ground truth.
    #[arg(long)]
    labels: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 93)]
    households: usize,
    /// Day-to-day noise sd around each archetype shape.
    #[arg(long, default_value_t = 0.02)]
    noise_sd: f64,
    #[arg(long, default_value_t = 0.01)]
    missing_rate: f64,
    /// Use only the first N default archetypes.
    #[arg(long)]
    archetypes: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config (or a run manifest).
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

/// One `--<dotted.key> VALUE` flag per config key; `_` may be written `-`.
struct Overrides(Vec<(String, String)>);

impl FromArgMatches for Overrides {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let pairs = OVERRIDE_KEYS
            .iter()
            .filter_map(|&k| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
            .collect();
        Ok(Overrides(pairs))
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        *self = Self::from_arg_matches(m)?;
        Ok(())
    }
}

impl Args for Overrides {
    fn augment_args(cmd: Command) -> Command {
        OVERRIDE_KEYS.iter().fold(cmd, |cmd, &k| {
            let arg = Arg::new(k).long(k).value_name("VALUE").help(format!("Override config key {k}"));
            let hyphenated = k.replace('_', "-");
            cmd.arg(if hyphenated == k { arg } else { arg.alias(hyphenated) })
        })
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}

impl RunArgs {
    fn resolve(&self) -> loadshape::Result<RunConfig> {
        let mut config = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for (k, v) in &self.overrides.0 {
            config.apply_override(k, v)?;
        }
        Ok(config)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot write {}", path.display()))?))
}

fn synth(args: &SynthArgs) -> Result<()> {
    let mut archetypes = default_archetypes(args.noise_sd);
    if let Some(n) = args.archetypes {
        anyhow::ensure!(
            (1..=archetypes.len()).contains(&n),
            loadshape::Error::Parameter(format!("--archetypes must be between 1 and {}", archetypes.len()))
        );
        archetypes.truncate(n);
    }
    let mut config = SynthConfig::new(archetypes, args.seed);
    config.n_households = args.households;
    config.missing_rate = args.missing_rate;
    let data = generate_dataset(&config)?;
    let mut out = create(&args.out)?;
    data.write_csv(&mut out)?;
    out.flush()?;
    if let Some(path) = &args.labels {
        let mut out = create(path)?;
        data.write_labels(&mut out)?;
        out.flush()?;
    }
    eprintln!("wrote {} households to {}", data.households.len(), args.out.display());
    Ok(())
}

fn print_rows(summary: &pipeline::RunSummary) {
    println!("method,mia,wcss,sizes,best");
    for r in &summary.rows {
        let sizes: Vec<String> = r.sizes.iter().map(|s| s.to_string()).collect();
        println!("{},{:.7},{:.7},{},{}", r.method, r.mia, r.wcss, sizes.join(" "), r.best);
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Cmd::Synth(args) => synth(&args),
        Cmd::Ingest(args) => {
            let config = args.resolve()?;
            let counts = pipeline::run_ingest(&config.input, config.stratum, &config.outdir)?;
            println!("{}", serde_json::to_string_pretty(&counts)?);
            Ok(())
        }
        Cmd::Cluster(args) => {
            let config = args.resolve()?;
            let summary = pipeline::run_pipeline(&config)?;
            print_rows(&summary);
            Ok(())
        }
        Cmd::Compare(args) => {
            let mut config = args.resolve()?;
            config.method = MethodChoice::All;
            let summary = pipeline::run_pipeline(&config)?;
            print_rows(&summary);
            Ok(())
        }
        Cmd::SweepK { run, k_min, k_max } => {
            let config = run.resolve()?;
            let curve = pipeline::run_sweep(&config, k_min, k_max)?;
            println!("k,wcss");
            for p in curve {
                println!("{},{:.7}", p.k, p.wcss);
            }
            Ok(())
        }
        Cmd::Render { dir, stratum } => {
            for path in pipeline::render_dir(&dir, stratum)? {
                println!("{}", path.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let numerical = match e.downcast_ref::<loadshape::Error>() {
                Some(inner) => {
                    eprintln!("error: {inner}");
                    inner.is_numerical()
                }
                None => {
                    eprintln!("error: {e:#}");
                    false
                }
            };
            ExitCode::from(if numerical { 3 } else { 2 })
        }
    }
}

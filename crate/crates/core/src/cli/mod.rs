//! `bladeopt` command-line front end.

pub mod commands;
pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::Result;
use crate::geometry::SurfaceFormat;
pub use config::PipelineConfig;

const FILE_FORMATS: &str = "\
Files:
  baseline table   whitespace columns r/R, c/D, P/D, skew/D, rake/D, f/c; `#` comments
  designs.csv      header mu_1..mu_m, one design per row, values in [-1, 1];
                   sidecar designs.csv.meta holds seed, bounds and bound scales
  dataset.csv      `# key=value` metadata lines, header mu_1..mu_m,kt,eta,pmax,fmax
  subspace_*.csv   `# active_dim=`, `# ambiguous=`, eigenvalues row, one `w` row per eigenvector
  geometry         binary STL, or CSV with columns blade_id,i,j,x,y,z

Settings resolve as defaults < --config file < --set KEY=VALUE < dedicated flags.
The default output directory is $BLADEOPT_OUT, else ./bladeopt-out.
Exit status: 0 success, 1 runtime error, 2 usage or configuration error.";

#[derive(Debug, Parser)]
#[command(name = "bladeopt", version, about = "Active-subspace design exploration for marine propeller blades", after_long_help = FILE_FORMATS)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// TOML file of `key = value` settings
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Number of design parameters (even)
    #[arg(short = 'm', global = true)]
    m: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Baseline blade table (defaults to the bundled blade)
    #[arg(long, global = true)]
    baseline: Option<PathBuf>,
    /// Override any setting, e.g. `--set va=4.8`
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the baseline radial distributions
    FitBaseline {
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw smooth designs from the parameter space
    Sample {
        #[arg(short = 'n', long)]
        n_samples: Option<usize>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Loft and export blade surfaces
    Build {
        /// Design file; without it the baseline blade is built
        #[arg(long)]
        designs: Option<PathBuf>,
        /// Zero-based rows of the design file (default: all)
        #[arg(long, value_delimiter = ',')]
        index: Vec<usize>,
        #[arg(long, value_parser = config::parse_format)]
        format: Option<SurfaceFormat>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Evaluate designs with the blade-element surrogate
    Evaluate {
        #[arg(long)]
        designs: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Validate an external dataset and copy it into the standard layout
    Ingest {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Gradients, active subspaces and sensitivity tables
    Analyze {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Response surfaces and constrained optimization on the active variable
    Optimize {
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        subspace: Option<PathBuf>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run every stage over the standard layout
    Pipeline,
}

fn resolve(global: &GlobalArgs) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::default();
    if let Some(path) = &global.config {
        cfg.load_file(path)?;
    }
    for kv in &global.set {
        let (k, v) =
            kv.split_once('=').ok_or_else(|| crate::Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = global.seed {
        cfg.seed = s;
    }
    if let Some(j) = global.jobs {
        cfg.jobs = j;
    }
    if let Some(m) = global.m {
        cfg.m = m;
    }
    if let Some(d) = &global.out_dir {
        cfg.out_dir = d.clone();
    }
    if let Some(b) = &global.baseline {
        cfg.baseline = Some(b.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<Vec<PathBuf>> {
    use commands::layout;
    let mut cfg = resolve(&cli.global)?;
    let out = cfg.out_dir.clone();
    let or = |p: Option<PathBuf>, default: &str| p.unwrap_or_else(|| out.join(default));
    match cli.command {
        Command::FitBaseline { output } => commands::fit_baseline(&cfg, &or(output, layout::BASELINE)),
        Command::Sample { n_samples, output } => {
            if let Some(n) = n_samples {
                cfg.n_samples = n;
                cfg.validate()?;
            }
            commands::sample(&cfg, &or(output, layout::DESIGNS))
        }
        Command::Build { designs, index, format, output } => commands::build(
            &cfg,
            designs.as_deref(),
            &index,
            &or(output, layout::GEOMETRY),
            format.unwrap_or(cfg.surface_format),
        ),
        Command::Evaluate { designs, output } => {
            commands::evaluate(&cfg, &or(designs, layout::DESIGNS), &or(output, layout::DATASET))
        }
        Command::Ingest { input, output } => commands::ingest(&input, &or(output, layout::DATASET)),
        Command::Analyze { dataset, output } => {
            commands::analyze(&cfg, &or(dataset, layout::DATASET), &or(output, layout::ANALYSIS))
        }
        Command::Optimize { dataset, subspace, output } => commands::optimize(
            &cfg,
            &or(dataset, layout::DATASET),
            &or(subspace, layout::SHARED_SUBSPACE),
            &or(output, layout::OPTIMIZATION),
        ),
        Command::Pipeline => commands::pipeline(&cfg),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(written) => {
            for p in written {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, crate::Error::Config(_)) {
                2
            } else {
                1
            }
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rpys::config::{parse_sort, PipelineConfig};
use rpys::pipeline::{self, PipelineError};

#[derive(Parser)]
#[command(
    name = "rpys",
    version,
    about = "Reference publication year spectroscopy and top-percentile indicators over Web of Science exports"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and export the indicator table as CSV
    Run(RunArgs),
    /// Print corpus statistics without clustering or exporting
    Info(InfoArgs),
    /// Export only the RPYS spectrum (RPY, N_CR, MEDIAN_DEV)
    Spectrum(SpectrumArgs),
}

/// Options shared by all subcommands. Flags override config-file keys of
/// the same name.
#[derive(Args)]
struct CommonArgs {
    /// Configuration file (flat `key = value` lines)
    #[arg(short, long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Input WoS plain-text export
    #[arg(short, long, value_name = "FILE")]
    input: Option<PathBuf>,

    /// Citing-year window: MIN,MAX,INCLUDE_MISSING (default 1980,2017,false)
    #[arg(long, value_name = "WINDOW")]
    py: Option<String>,

    /// Reference-year window: MIN,MAX,INCLUDE_MISSING (default 1900,2015,false)
    #[arg(long, value_name = "WINDOW")]
    rpy: Option<String>,

    /// Per-record reference cap; 0 means no cap
    #[arg(long, value_name = "N")]
    max_cr: Option<u32>,

    /// Only admit records whose DT tag equals this (case-insensitive)
    #[arg(long, value_name = "TYPE")]
    doc_type: Option<String>,
}

#[derive(Args)]
struct ClusterArgs {
    /// Similarity threshold in [0,1] (default 0.75)
    #[arg(long, value_name = "T")]
    cluster_threshold: Option<f64>,

    /// Require equal volume when both present (default true)
    #[arg(long, value_name = "BOOL")]
    cluster_volume: Option<bool>,

    /// Require equal page when both present (default true)
    #[arg(long, value_name = "BOOL")]
    cluster_page: Option<bool>,

    /// Require equal DOI when both present (default false)
    #[arg(long, value_name = "BOOL")]
    cluster_doi: Option<bool>,

    /// Write one diagnostic line per cluster (rpy, members, canonical)
    #[arg(long, value_name = "FILE")]
    dump_clusters: Option<PathBuf>,
}

#[derive(Args)]
struct GateArgs {
    /// Minimum linked-reference ratio (default 0.3)
    #[arg(long, value_name = "RATIO")]
    linked_ratio_min: Option<String>,

    /// Proceed even when the linked-ratio gate fails
    #[arg(long)]
    force: bool,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Output CSV path
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Keep rows with N_TOP >= this (default 10)
    #[arg(long, value_name = "N")]
    min_indicator: Option<u32>,

    /// Percentile level, e.g. 0.001 for the top 0.1%
    #[arg(long, value_name = "P")]
    pct: Option<String>,

    /// Citing-year smoothing half-width (default 2)
    #[arg(long, value_name = "R")]
    n_pct_range: Option<u32>,

    /// Spectrum median half-width (default 2)
    #[arg(long, value_name = "M")]
    median_range: Option<u32>,

    /// Sort keys, e.g. "N_TOP DESC, N_CR DESC"
    #[arg(long, value_name = "KEYS")]
    sort: Option<String>,

    /// Also write the spectrum to <out>.rpys.csv
    #[arg(long)]
    spectrum: bool,

    /// Record the configured percentile as a "# p=..." comment line
    #[arg(long)]
    p_comment: bool,

    #[command(flatten)]
    cluster: ClusterArgs,

    #[command(flatten)]
    gate: GateArgs,
}

#[derive(Args)]
struct InfoArgs {
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SpectrumArgs {
    #[command(flatten)]
    common: CommonArgs,

    /// Output CSV path
    #[arg(short, long, value_name = "FILE")]
    out: Option<PathBuf>,

    /// Spectrum median half-width (default 2)
    #[arg(long, value_name = "M")]
    median_range: Option<u32>,

    #[command(flatten)]
    cluster: ClusterArgs,

    #[command(flatten)]
    gate: GateArgs,
}

fn base_config(common: &CommonArgs) -> Result<PipelineConfig, PipelineError> {
    let mut config = match &common.config {
        Some(path) => PipelineConfig::from_file(path).map_err(|e| PipelineError::Config(e.0))?,
        None => PipelineConfig::default(),
    };
    if let Some(input) = &common.input {
        config.input = Some(input.clone());
    }
    let mut apply = |key: &str, value: Option<String>| -> Result<(), PipelineError> {
        if let Some(value) = value {
            config
                .apply(key, &value)
                .map_err(|e| PipelineError::Config(e.0))?;
        }
        Ok(())
    };
    apply("py", common.py.clone())?;
    apply("rpy", common.rpy.clone())?;
    apply("max_cr", common.max_cr.map(|v| v.to_string()))?;
    apply("doc_type", common.doc_type.clone())?;
    Ok(config)
}

fn apply_cluster(config: &mut PipelineConfig, args: &ClusterArgs) -> Result<(), PipelineError> {
    if let Some(t) = args.cluster_threshold {
        config
            .apply("cluster.threshold", &t.to_string())
            .map_err(|e| PipelineError::Config(e.0))?;
    }
    if let Some(v) = args.cluster_volume {
        config.cluster.require_volume = v;
    }
    if let Some(v) = args.cluster_page {
        config.cluster.require_page = v;
    }
    if let Some(v) = args.cluster_doi {
        config.cluster.require_doi = v;
    }
    if let Some(path) = &args.dump_clusters {
        config.dump_clusters = Some(path.clone());
    }
    Ok(())
}

fn apply_gate(config: &mut PipelineConfig, args: &GateArgs) -> Result<(), PipelineError> {
    if let Some(min) = &args.linked_ratio_min {
        config
            .apply("linked_ratio_min", min)
            .map_err(|e| PipelineError::Config(e.0))?;
    }
    Ok(())
}

fn run_command(args: RunArgs) -> Result<(), PipelineError> {
    let mut config = base_config(&args.common)?;
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    if let Some(min) = args.min_indicator {
        config.min_n_top = min;
    }
    if let Some(pct) = &args.pct {
        config
            .apply("pct", pct)
            .map_err(|e| PipelineError::Config(e.0))?;
    }
    if let Some(r) = args.n_pct_range {
        config.smoothing.n_pct_range = r;
    }
    if let Some(m) = args.median_range {
        config.smoothing.median_range = m;
    }
    if let Some(sort) = &args.sort {
        config.sort = parse_sort(sort).map_err(|e| PipelineError::Config(e.0))?;
    }
    if args.spectrum {
        config.spectrum = true;
    }
    if args.p_comment {
        config.p_comment = true;
    }
    apply_cluster(&mut config, &args.cluster)?;
    apply_gate(&mut config, &args.gate)?;

    let summary = pipeline::run(&config, args.gate.force)?;
    summary
        .write_to(std::io::stderr())
        .map_err(|e| PipelineError::Io {
            context: "cannot write summary".into(),
            source: e,
        })
}

fn info_command(args: InfoArgs) -> Result<(), PipelineError> {
    let config = base_config(&args.common)?;
    let report = pipeline::info(&config)?;
    println!("{report}");
    Ok(())
}

fn spectrum_command(args: SpectrumArgs) -> Result<(), PipelineError> {
    let mut config = base_config(&args.common)?;
    if let Some(out) = &args.out {
        config.output = Some(out.clone());
    }
    if let Some(m) = args.median_range {
        config.smoothing.median_range = m;
    }
    apply_cluster(&mut config, &args.cluster)?;
    apply_gate(&mut config, &args.gate)?;

    let summary = pipeline::spectrum(&config, args.gate.force)?;
    summary
        .write_to(std::io::stderr())
        .map_err(|e| PipelineError::Io {
            context: "cannot write summary".into(),
            source: e,
        })
}

/// `RPYS_THREADS` caps worker parallelism for clustering and the per-year
/// indicator computations.
fn init_thread_pool() {
    if let Ok(value) = std::env::var("RPYS_THREADS") {
        match value.parse::<usize>() {
            Ok(threads) if threads > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring invalid RPYS_THREADS value {value:?}"),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_thread_pool();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Info(args) => info_command(args),
        Command::Spectrum(args) => spectrum_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! `msboot` command line: fit bootstrap count tables, reproduce exact
//! rejection tables and sphere curves, assess hierarchical clusters, and
//! draw synthetic mixture data.

mod commands;
mod config;

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use commands::{Ctx, OutFormat};

#[derive(Parser)]
#[command(
    name = "msboot",
    version,
    about = "Multiscale bootstrap selective inference"
)]
struct Cli {
    /// RNG seed shared by every stochastic subcommand.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for data-parallel stages (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<OutFormat>,
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write output to this file instead of stdout.
    #[arg(long, short = 'o', global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit scaling models to a bootstrap count table and report p-values.
    Fit(FitArgs),
    /// Exact rejection-probability tables for analytic boundary shapes.
    Simulate(SimulateArgs),
    /// Selective rejection curves for spherical boundaries across dimensions.
    Sphere(SphereArgs),
    /// Cluster columns and attach multiscale bootstrap p-values to each node.
    Pvclust(PvclustArgs),
    /// Draw a synthetic three-column normal-mixture dataset.
    MixtureSim(MixtureArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Count table (TSV with header sigma2/nprime/B/C).
    counts: PathBuf,
    /// Input counts the selection side; complement it before fitting.
    #[arg(long)]
    complement: bool,
    /// Taylor terms for the extrapolations.
    #[arg(long)]
    k: Option<usize>,
    /// Anchor scale for the sigma^2 = -1 extrapolation.
    #[arg(long)]
    tau2_h: Option<f64>,
    /// Anchor scale for the sigma^2 = 0 extrapolation.
    #[arg(long)]
    tau2_s: Option<f64>,
    /// Candidate models (comma-separated, e.g. poly.2,poly.3,sing.3).
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Boundary shape: concave-smooth, concave-nonsmooth, convex-smooth,
    /// convex-nonsmooth, halfspace, or custom (with --sign/--a).
    #[arg(long)]
    region: Option<String>,
    /// Custom region: +1 bends the boundary toward the region, -1 away.
    #[arg(long, allow_hyphen_values = true)]
    sign: Option<i8>,
    /// Custom region: squared intercept of the boundary curve.
    #[arg(long)]
    a: Option<f64>,
    /// Significance level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Methods (comma-separated: bp, au3, 2bp, 2au2, 2au3, sdbp, si2, si3, etsi).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Largest boundary position.
    #[arg(long)]
    theta_max: Option<f64>,
    /// Boundary position step.
    #[arg(long)]
    theta_step: Option<f64>,
}

#[derive(Args)]
struct SphereArgs {
    /// Curvature magnitudes -gamma (comma-separated).
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    /// Ambient dimensions m+1 (comma-separated, each in [10, 1000]).
    #[arg(long, value_delimiter = ',')]
    dims: Option<Vec<u32>>,
    /// Significance level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Methods (comma-separated).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
}

#[derive(Args)]
struct PvclustArgs {
    /// Data matrix (.csv comma-separated; .tsv/.tab/.txt tab-separated);
    /// first column holds row labels, header holds column labels.
    data: PathBuf,
    /// Distance: euclid or correlation.
    #[arg(long)]
    metric: Option<String>,
    /// Bootstrap replicates per scale.
    #[arg(long)]
    b: Option<u64>,
    /// Taylor terms for the extrapolations.
    #[arg(long)]
    k: Option<usize>,
    /// Also write the annotated dendrogram to this file.
    #[arg(long)]
    newick: Option<PathBuf>,
}

#[derive(Args)]
struct MixtureArgs {
    /// Mixture separation parameter.
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    /// Number of rows.
    #[arg(long)]
    n: Option<usize>,
}

fn main() {
    if let Err(e) = run() {
        eprintln!("msboot: {e:#}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    let file = config::load(cli.config.as_deref())?;

    let threads = cli.threads.or(file.threads);
    if let Some(t) = threads {
        configure_threads(t)?;
    }
    let format = match (cli.format, &file.format) {
        (Some(f), _) => f,
        (None, Some(name)) => OutFormat::parse_name(name)?,
        (None, None) => OutFormat::Tsv,
    };
    let ctx = Ctx {
        seed: cli.seed.or(file.seed).unwrap_or(1),
        format,
        output: cli.output.clone(),
    };

    match &cli.command {
        Command::Fit(args) => {
            let section = &file.fit;
            let models = match args.models.clone().or_else(|| section.models.clone()) {
                Some(names) => commands::parse_models(&names)?,
                None => msboot::models::default_candidates(),
            };
            let opts = commands::FitOptions {
                counts: args.counts.clone(),
                complement: args.complement || section.complement.unwrap_or(false),
                k: args.k.or(section.k).unwrap_or(3),
                tau2_h: args.tau2_h.or(section.tau2_h).unwrap_or(1.0),
                tau2_s: args.tau2_s.or(section.tau2_s).unwrap_or(1.0),
                models,
            };
            commands::run_fit(&ctx, &opts)
        }
        Command::Simulate(args) => {
            let section = &file.simulate;
            let region_name = args
                .region
                .clone()
                .or_else(|| section.region.clone())
                .context("--region is required (or set simulate.region in the config)")?;
            let region = commands::parse_region(
                &region_name,
                args.sign.or(section.sign),
                args.a.or(section.a),
            )?;
            let methods = match args.methods.clone().or_else(|| section.methods.clone()) {
                Some(names) => commands::parse_methods(&names)?,
                None => default_table_methods(),
            };
            let opts = commands::SimulateOptions {
                region,
                alpha: args.alpha.or(section.alpha).unwrap_or(0.1),
                methods,
                thetas: commands::theta_grid(
                    args.theta_max.or(section.theta_max).unwrap_or(3.5),
                    args.theta_step.or(section.theta_step).unwrap_or(0.5),
                )?,
            };
            commands::run_simulate(&ctx, &opts)
        }
        Command::Sphere(args) => {
            let section = &file.sphere;
            let methods = match args.methods.clone().or_else(|| section.methods.clone()) {
                Some(names) => commands::parse_methods(&names)?,
                None => default_sphere_methods(),
            };
            let opts = commands::SphereOptions {
                gammas: args
                    .gammas
                    .clone()
                    .or_else(|| section.gammas.clone())
                    .unwrap_or_else(|| vec![0.5, 1.0, 1.5]),
                dims: args
                    .dims
                    .clone()
                    .or_else(|| section.dims.clone())
                    .unwrap_or_else(|| vec![10, 30, 100, 300, 1000]),
                alpha: args.alpha.or(section.alpha).unwrap_or(0.1),
                methods,
            };
            commands::run_sphere(&ctx, &opts)
        }
        Command::Pvclust(args) => {
            let section = &file.pvclust;
            let metric_name = args
                .metric
                .clone()
                .or_else(|| section.metric.clone())
                .unwrap_or_else(|| "euclid".to_string());
            let opts = commands::PvclustOptions {
                data: args.data.clone(),
                metric: metric_name.parse()?,
                b: args.b.or(section.b).unwrap_or(10_000),
                k: args.k.or(section.k).unwrap_or(3),
                newick: args.newick.clone(),
            };
            commands::run_pvclust(&ctx, &opts)
        }
        Command::MixtureSim(args) => {
            let section = &file.mixture_sim;
            let opts = commands::MixtureOptions {
                a: args.a.or(section.a).unwrap_or(1.0),
                n: args.n.or(section.n).unwrap_or(1000),
            };
            commands::run_mixture(&ctx, &opts)
        }
    }
}

fn default_table_methods() -> Vec<msboot::region::RejectionMethod> {
    use msboot::region::RejectionMethod as M;
    vec![
        M::Bp,
        M::Au { k: 3 },
        M::DoubledBp,
        M::DoubledAu { k: 2 },
        M::DoubledAu { k: 3 },
        M::Sdbp,
        M::Si { k: 2 },
        M::Si { k: 3 },
    ]
}

fn default_sphere_methods() -> Vec<msboot::region::RejectionMethod> {
    use msboot::region::RejectionMethod as M;
    vec![M::DoubledBp, M::DoubledAu { k: 3 }, M::Si { k: 3 }]
}

#[cfg(feature = "parallel")]
fn configure_threads(t: usize) -> Result<()> {
    if t == 0 {
        bail!("--threads must be at least 1");
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(t)
        .build_global()
        .context("configuring the thread pool")
}

#[cfg(not(feature = "parallel"))]
fn configure_threads(_t: usize) -> Result<()> {
    eprintln!("msboot: built without the parallel feature; --threads has no effect");
    Ok(())
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crsp::cluster::cluster_dissimilarity;
use crsp::datasets::{self, SbmParams, DEFAULT_PROJECTION_ANGLES};
use crsp::embed::classical_mds;
use crsp::eval::{evaluate, NmiNormalization};
use crsp::fusion::{crsp_dissimilarity, FusionMode};
use crsp::graph::{cull_disconnected, gaussian_affinity, Bandwidth, FeatureMatrix, MultiViewGraph};
use crsp::io::{self, Dataset, ViewFormat};
use crsp::pipeline::{run_pipeline, InputSpec, PipelineConfig};
use crsp::{DissimilarityMatrix, Error, Result, RspParams};

#[derive(Parser)]
#[command(name = "crsp", version, about = "Randomized shortest path dissimilarities on multi-view graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic dataset (manifest, views, labels).
    #[command(subcommand)]
    Generate(Generate),
    /// Gaussian-kernel affinity from a feature CSV.
    Affinity {
        #[arg(long)]
        features: PathBuf,
        /// Fixed bandwidth; the median pairwise distance when omitted.
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// C-RSP dissimilarity of a manifest graph (plain RSP for one view).
    Dissimilarity {
        #[arg(long)]
        manifest: PathBuf,
        #[command(flatten)]
        rsp: RspArgs,
        #[arg(long)]
        cull: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classical MDS of a dissimilarity CSV.
    Embed {
        #[arg(long)]
        delta: PathBuf,
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Spectral clustering of a dissimilarity CSV.
    Cluster {
        #[arg(long)]
        delta: PathBuf,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// CCR and NMI of predicted labels against ground truth, as JSON.
    Evaluate {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, value_enum, default_value_t = NmiArg::Geometric)]
        nmi: NmiArg,
    },
    /// Run every stage end to end.
    Pipeline(PipelineArgs),
}

#[derive(Subcommand)]
enum Generate {
    Sbm {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10.0)]
        c: f64,
        #[arg(long, default_value_t = 0.9)]
        lambda: f64,
        #[arg(long, default_value_t = 1)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = FormatArg::Dense)]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
    Swissroll {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Rotation angles about the vertical axis, in degrees.
        #[arg(long, value_delimiter = ',')]
        angles: Option<Vec<f64>>,
        #[arg(long)]
        no_holes: bool,
        #[arg(long, value_enum, default_value_t = FormatArg::Dense)]
        format: FormatArg,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RspArgs {
    #[arg(long, default_value_t = crsp::rsp::DEFAULT_BETA)]
    beta: f64,
    #[arg(long, value_enum, default_value_t = FusionArg::Union)]
    fusion: FusionArg,
}

#[derive(Args)]
struct PipelineArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, conflicts_with_all = ["sbm", "swissroll"])]
    manifest: Option<PathBuf>,
    /// Generated SBM input: `n,k,c,lambda,m`.
    #[arg(long, value_delimiter = ',')]
    sbm: Option<Vec<f64>>,
    /// Generated Swiss roll input with this many points.
    #[arg(long)]
    swissroll: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long, value_enum)]
    fusion: Option<FusionArg>,
    #[arg(long)]
    dims: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    cull: bool,
    #[arg(long, value_enum)]
    nmi: Option<NmiArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FusionArg {
    Union,
    Intersection,
}

impl From<FusionArg> for FusionMode {
    fn from(a: FusionArg) -> Self {
        match a {
            FusionArg::Union => FusionMode::Union,
            FusionArg::Intersection => FusionMode::Intersection,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum NmiArg {
    Geometric,
    Arithmetic,
}

impl From<NmiArg> for NmiNormalization {
    fn from(a: NmiArg) -> Self {
        match a {
            NmiArg::Geometric => NmiNormalization::Geometric,
            NmiArg::Arithmetic => NmiNormalization::Arithmetic,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Dense,
    Triplets,
}

impl From<FormatArg> for ViewFormat {
    fn from(a: FormatArg) -> Self {
        match a {
            FormatArg::Dense => ViewFormat::DenseCsv,
            FormatArg::Triplets => ViewFormat::Triplets,
        }
    }
}

fn read_delta(path: &Path) -> Result<DissimilarityMatrix> {
    DissimilarityMatrix::new(io::read_matrix_csv(path)?)
}

fn generate(cmd: Generate) -> Result<()> {
    match cmd {
        Generate::Sbm {
            n,
            k,
            c,
            lambda,
            m,
            seed,
            format,
            out,
        } => {
            let sample = datasets::generate_sbm(&SbmParams { n, k, c, lambda, m, seed })?;
            log::info!("sbm: {} of {n} nodes survive culling", sample.graph.n());
            let dataset = Dataset {
                graph: sample.graph,
                labels: Some(sample.labels),
            };
            let manifest = io::save_dataset(&out, &dataset, format.into())?;
            println!("{}", manifest.display());
        }
        Generate::Swissroll {
            n,
            seed,
            angles,
            no_holes,
            format,
            out,
        } => {
            let holes = if no_holes { Vec::new() } else { datasets::default_holes() };
            let cloud = datasets::generate_swiss_roll(n, &holes, seed)?;
            let angles = angles.unwrap_or_else(|| DEFAULT_PROJECTION_ANGLES.to_vec());
            let rotations: Vec<_> = angles.iter().map(|&a| datasets::rotation_about_y(a)).collect();
            let projections = datasets::project_views(&cloud, &rotations)?;
            let views = projections
                .iter()
                .map(|f| gaussian_affinity(f, Bandwidth::Median))
                .collect::<Result<Vec<_>>>()?;
            let dataset = Dataset {
                graph: MultiViewGraph::new(views)?,
                labels: None,
            };
            let manifest = io::save_dataset(&out, &dataset, format.into())?;
            io::write_matrix_csv(&out.join("points.csv"), &cloud.points)?;
            let params = nalgebra::DMatrix::from_column_slice(n, 1, &cloud.node_params);
            io::write_matrix_csv(&out.join("roll_params.csv"), &params)?;
            for (idx, p) in projections.iter().enumerate() {
                io::write_matrix_csv(&out.join(format!("projection_{}.csv", idx + 1)), p.data())?;
            }
            println!("{}", manifest.display());
        }
    }
    Ok(())
}

fn pipeline_config(args: PipelineArgs) -> Result<PipelineConfig> {
    let input_override = if let Some(path) = args.manifest {
        Some(InputSpec::Manifest { path })
    } else if let Some(v) = args.sbm {
        if v.len() != 5 {
            return Err(Error::InvalidParameter(format!(
                "--sbm takes n,k,c,lambda,m, got {} value(s)",
                v.len()
            )));
        }
        let count = |x: f64, name: &str| -> Result<usize> {
            if x >= 0.0 && x.fract() == 0.0 {
                Ok(x as usize)
            } else {
                Err(Error::InvalidParameter(format!("--sbm {name} must be a nonnegative integer, got {x}")))
            }
        };
        Some(InputSpec::Sbm {
            n: count(v[0], "n")?,
            k: count(v[1], "k")?,
            c: v[2],
            lambda: v[3],
            m: count(v[4], "m")?,
        })
    } else {
        args.swissroll.map(|n| InputSpec::Swissroll {
            n,
            holes: datasets::default_holes(),
            angles: DEFAULT_PROJECTION_ANGLES.to_vec(),
        })
    };
    let mut config = match (args.config, input_override) {
        (Some(path), input) => {
            let mut c = PipelineConfig::from_json_file(&path)?;
            if let Some(input) = input {
                c.input = input;
            }
            c
        }
        (None, Some(input)) => PipelineConfig::new(input, "crsp-out"),
        (None, None) => {
            return Err(Error::InvalidParameter(
                "pipeline needs --config or one of --manifest/--sbm/--swissroll".into(),
            ))
        }
    };
    if let Some(b) = args.beta {
        config.beta = b;
    }
    if let Some(f) = args.fusion {
        config.fusion = f.into();
    }
    if let Some(d) = args.dims {
        config.dims = d;
    }
    if args.k.is_some() {
        config.k = args.k;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if args.cull {
        config.cull = true;
    }
    if let Some(n) = args.nmi {
        config.nmi = n.into();
    }
    if let Some(out) = args.out {
        config.output_dir = out;
    }
    Ok(config)
}

fn run(cli: Cli) -> std::result::Result<(), (i32, String)> {
    let fail = |e: Error| (e.exit_code(), e.to_string());
    match cli.command {
        Command::Generate(g) => generate(g).map_err(fail),
        Command::Affinity { features, sigma, out } => (|| {
            let features = FeatureMatrix::new(io::read_matrix_csv(&features)?)?;
            let bandwidth = sigma.map_or(Bandwidth::Median, Bandwidth::Fixed);
            io::write_matrix_csv(&out, gaussian_affinity(&features, bandwidth)?.weights())
        })()
        .map_err(fail),
        Command::Dissimilarity { manifest, rsp, cull, out } => (|| {
            let mut graph = io::load_multiview_graph(&manifest)?;
            if cull {
                graph = cull_disconnected(&graph)?;
            }
            let params = RspParams::new(rsp.beta)?;
            let delta = crsp_dissimilarity(&graph, &params, rsp.fusion.into())?;
            io::write_matrix_csv(&out, delta.as_matrix())
        })()
        .map_err(fail),
        Command::Embed { delta, dims, out } => (|| {
            let embedding = classical_mds(&read_delta(&delta)?, dims)?;
            if embedding.padded_columns > 0 {
                log::warn!("{} embedding column(s) padded with zeros", embedding.padded_columns);
            }
            if embedding.negative_eigenvalues > 0 {
                log::info!("{} negative eigenvalue(s) clamped", embedding.negative_eigenvalues);
            }
            io::write_matrix_csv(&out, &embedding.coords)
        })()
        .map_err(fail),
        Command::Cluster { delta, k, seed, out } => (|| {
            let labels = cluster_dissimilarity(&read_delta(&delta)?, k, seed)?;
            io::write_labels(&out, &labels)
        })()
        .map_err(fail),
        Command::Evaluate { pred, truth, nmi } => (|| {
            let report = evaluate(&io::read_labels(&pred)?, &io::read_labels(&truth)?, nmi.into())?;
            println!("{}", serde_json::to_string(&report).expect("report serializes"));
            Ok(())
        })()
        .map_err(fail),
        Command::Pipeline(args) => {
            let config = pipeline_config(args).map_err(fail)?;
            let outcome = run_pipeline(&config).map_err(|f| (f.exit_code(), f.to_string()))?;
            let summary = serde_json::json!({ "ccr": outcome.metrics.ccr, "nmi": outcome.metrics.nmi });
            println!("{summary}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err((code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code as u8)
        }
    }
}

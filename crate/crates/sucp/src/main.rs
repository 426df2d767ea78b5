use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};

use sucp::config::RunConfig;
use sucp::data::UserIdx;
use sucp::eval::Recommender;
use sucp::experiment::{run_experiment, Axis};
use sucp::pipeline::{
    self, analyze_social, evaluate_top_popular, evaluate_variant, SucpRecommender,
};
use sucp::recommend::Variant;

#[derive(Parser)]
#[command(
    name = "sucp",
    about = "Geo-social POI recommender: social graph + activity centers + matrix factorization",
    version
)]
struct Cli {
    /// Key-value config file (`key = value` per line).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override the run seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Override the fusion variant (full | no_social).
    #[arg(long, global = true)]
    variant: Option<String>,

    /// Override the social mixing weight.
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Override the friendship overlap threshold.
    #[arg(long, global = true)]
    overlap_threshold: Option<f64>,

    /// Override the training subsample fraction.
    #[arg(long, global = true)]
    train_fraction: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Ingest, preprocess, split, and cache the dataset; print the manifest.
    Prepare,
    /// Train factor models, activity centers, and the social graph.
    Train,
    /// Emit ranked lists as `user rank poi score` lines.
    Recommend {
        /// Comma-separated user ids, or "all".
        #[arg(long, default_value = "all")]
        users: String,
        #[arg(long, default_value_t = 10)]
        n: usize,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate on the test split and print the metric table.
    Evaluate {
        /// Also evaluate the TopPopular baseline.
        #[arg(long)]
        baseline: bool,
        /// Write machine-readable metrics here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep one axis, re-running the pipeline per value.
    Experiment {
        /// beta | train_fraction | overlap_threshold
        #[arg(long)]
        axis: String,
        /// Comma-separated axis values (axis default when omitted).
        #[arg(long)]
        values: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average friend similarity and friend center-distance statistics.
    AnalyzeSocial {
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load_config(cli: &Cli) -> anyhow::Result<RunConfig> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)
            .with_context(|| format!("loading config {}", path.display()))?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
        cfg.mf.seed = seed;
    }
    if let Some(v) = &cli.variant {
        cfg.variant = v.parse::<Variant>().map_err(anyhow::Error::msg)?;
    }
    if let Some(beta) = cli.beta {
        cfg.beta = beta;
    }
    if let Some(t) = cli.overlap_threshold {
        cfg.overlap_threshold = t;
    }
    if let Some(f) = cli.train_fraction {
        cfg.train_fraction = f;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_or_print(out: &Option<PathBuf>, content: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, content)
                .with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{content}"),
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = load_config(&cli)?;

    match &cli.command {
        Command::Prepare => {
            let prepared = pipeline::prepare(&cfg)?;
            print!("{}", prepared.manifest);
        }
        Command::Train => {
            let prepared = pipeline::prepare(&cfg)?;
            let bundle = pipeline::train(&cfg, &prepared)?;
            println!("static model: k={} final_loss={:.6}", bundle.static_model.k, bundle.static_model.final_loss());
            println!("temporal models: {}", bundle.rhat.models().len());
            if cfg.variant == Variant::NoSocial {
                println!("social graph: skipped (variant no_social)");
            } else {
                println!(
                    "social graph: {} users, {} edges (beta={}, {} friendship links kept)",
                    bundle.graph.num_users(),
                    bundle.graph.num_edges(),
                    cfg.beta,
                    bundle.filtered_edges.len()
                );
            }
            println!(
                "activity centers: {}",
                bundle.centers.iter().map(|c| c.centers.len()).sum::<usize>()
            );
        }
        Command::Recommend { users, n, out } => {
            let prepared = pipeline::prepare(&cfg)?;
            let bundle = pipeline::train(&cfg, &prepared)?;
            let recommender = SucpRecommender::new(&cfg, &prepared, &bundle, cfg.variant);
            let log = &prepared.split.train;
            let targets: Vec<UserIdx> = if users == "all" {
                (0..log.num_users() as UserIdx).collect()
            } else {
                users
                    .split(',')
                    .map(|id| {
                        log.user_idx(id.trim())
                            .ok_or_else(|| sucp::Error::UnknownUser(id.trim().to_string()))
                    })
                    .collect::<Result<_, _>>()?
            };
            let recs: Vec<_> = targets
                .iter()
                .map(|&u| recommender.recommend(u, *n))
                .collect();
            write_or_print(out, &pipeline::recommendation_lines(log, &recs))?;
        }
        Command::Evaluate { baseline, out } => {
            let prepared = pipeline::prepare(&cfg)?;
            let bundle = pipeline::train(&cfg, &prepared)?;
            let report = evaluate_variant(&cfg, &prepared, &bundle, cfg.variant)?;
            println!("variant {}:", cfg.variant.as_str());
            print!("{}", report.table());
            let mut machine = report.machine_lines();
            if *baseline {
                let pop = evaluate_top_popular(&cfg, &prepared)?;
                println!("top_popular baseline:");
                print!("{}", pop.table());
                machine.push_str(&pop.machine_lines());
            }
            if out.is_some() {
                write_or_print(out, &machine)?;
            }
        }
        Command::Experiment { axis, values, out } => {
            let axis: Axis = axis.parse().map_err(anyhow::Error::msg)?;
            let values: Vec<f64> = match values {
                Some(csv) => csv
                    .split(',')
                    .map(|s| {
                        s.trim()
                            .parse::<f64>()
                            .with_context(|| format!("bad axis value {s:?}"))
                    })
                    .collect::<anyhow::Result<_>>()?,
                None => axis.default_values(),
            };
            let grid = run_experiment(&cfg, axis, &values)?;
            print!("{}", grid.table());
            write_or_print(out, &grid.lines())?;
            if grid.cells.iter().any(|c| c.report.is_err()) {
                bail!("one or more experiment cells failed");
            }
        }
        Command::AnalyzeSocial { out } => {
            let prepared = pipeline::prepare(&cfg)?;
            let bundle = pipeline::train(&cfg, &prepared)?;
            let analysis = analyze_social(&prepared, &bundle)?;
            write_or_print(out, &analysis.lines())?;
        }
    }
    Ok(())
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use chromanet::clustering::{cluster_stats, cut_dendrogram, ward_cluster};
use chromanet::cutnorm::{cut_distance, cutnorm, ApproxParams, CutNormMethod, Method, RealMatrix};
use chromanet::distmat::{average_matrix, color_distance_matrix, cosine_distance_matrix, Alphabet};
use chromanet::io;
use chromanet::netmetrics::{
    betweenness, clustering_coefficient_avg, clustering_coefficients, DegreeMode, PathTransform, DEFAULT_EPSILON,
};
use chromanet::pipeline::{run_pipeline, Cutoffs, EmbeddingSource, RunConfig};
use chromanet::simtask::{correlation_report, rank_pairs};
use chromanet::synthetic::{gen_synthetic, SyntheticParams};
use chromanet::{Error, Result};

#[derive(Parser)]
#[command(name = "chromanet", version, about = "Character similarity from grapheme-color annotations and embeddings")]
struct Cli {
    /// Characters under study, e.g. ABCDEFGHIJKLMNOPQRSTUVWXYZ
    #[arg(long, global = true, default_value = "ABCDEFGHIJKLMNOPQRSTUVWXYZ")]
    alphabet: String,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    /// Keep raw distances instead of dividing each matrix by its maximum
    #[arg(long, global = true)]
    no_normalize: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write synthetic annotations with a planted letter partition
    GenSynthetic {
        #[arg(long, default_value_t = 200)]
        subjects: usize,
        #[arg(long, default_value_t = 3)]
        groups: usize,
        #[arg(long, default_value_t = 2.0)]
        within: f64,
        #[arg(long, default_value_t = 60.0)]
        between: f64,
    },
    /// Color distance matrix of one subject, or the average over all subjects
    ColorDist {
        #[arg(long)]
        annotations: PathBuf,
        #[arg(long)]
        subject: Option<String>,
    },
    /// Cosine distance matrix of an embedding file
    EmbedDist {
        #[arg(long)]
        embeddings: PathBuf,
    },
    /// Entrywise average of matrix CSVs
    Average {
        #[arg(required = true)]
        matrices: Vec<PathBuf>,
    },
    /// Ward clustering with statistics at the given cutoffs
    Cluster {
        #[arg(long)]
        matrix: PathBuf,
        /// Absolute cutoffs, or root-height fractions with a `rel:` prefix
        #[arg(long, default_value = "rel:0.3,0.5,0.7")]
        cutoffs: String,
    },
    /// Clustering coefficients and betweenness centrality
    Metrics {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Cut norm of a matrix, or cut distance between two
    Cutnorm {
        #[arg(long)]
        matrix: PathBuf,
        #[arg(long)]
        other: Option<PathBuf>,
        #[command(flatten)]
        cut: CutArgs,
    },
    /// Pearson correlations of model matrices with a human matrix
    Correlate {
        #[arg(long)]
        human: PathBuf,
        /// `TAG=path` matrix CSVs
        #[arg(long = "model", required = true)]
        models: Vec<String>,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
    },
    /// Full analysis battery
    Report {
        #[arg(long)]
        annotations: PathBuf,
        /// `[TAG=]path` embedding CSVs; repeated tags are averaged
        #[arg(long = "embeddings")]
        embeddings: Vec<String>,
        #[arg(long, default_value = "rel:0.3,0.5,0.7")]
        cutoffs: String,
        #[command(flatten)]
        net: NetArgs,
        #[command(flatten)]
        cut: CutArgs,
        #[arg(long, default_value_t = 100)]
        baseline_iters: usize,
        #[arg(long, default_value_t = 10)]
        top_k: usize,
        /// Skip the per-subject section
        #[arg(long)]
        no_per_subject: bool,
    },
}

#[derive(Args)]
struct NetArgs {
    /// neighbor_count or strength
    #[arg(long, default_value = "neighbor_count")]
    degree_mode: String,
    /// none or similarity_half_minus_d
    #[arg(long, default_value = "similarity_half_minus_d")]
    betweenness_transform: String,
    /// Lower clamp for transformed edge lengths, or `off`
    #[arg(long, default_value_t = DEFAULT_EPSILON.to_string())]
    epsilon: String,
}

impl NetArgs {
    fn parse(&self) -> Result<(DegreeMode, PathTransform, Option<f64>)> {
        let eps = match self.epsilon.as_str() {
            "off" | "none" => None,
            s => Some(s.parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad epsilon {s:?}")))?),
        };
        Ok((self.degree_mode.parse()?, self.betweenness_transform.parse()?, eps))
    }
}

#[derive(Args)]
struct CutArgs {
    /// exact or approx
    #[arg(long, default_value = "approx")]
    cutnorm_method: String,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long, default_value_t = 200)]
    rounding_trials: usize,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
}

impl CutArgs {
    fn method(&self, seed: u64) -> Result<CutNormMethod> {
        Ok(match self.cutnorm_method.parse::<Method>()? {
            Method::Exact => CutNormMethod::Exact,
            Method::Approx => CutNormMethod::Approx(ApproxParams {
                rank: self.rank,
                max_iters: self.max_iters,
                rounding_trials: self.rounding_trials,
                seed,
            }),
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?);
    Ok(())
}

fn out(cli_dir: &Path, name: &str) -> PathBuf {
    cli_dir.join(name)
}

fn run(cli: Cli) -> Result<()> {
    let alphabet = Alphabet::parse(&cli.alphabet)?;
    let normalize = !cli.no_normalize;
    let dir = cli.out_dir.as_path();
    match cli.command {
        Command::GenSynthetic { subjects, groups, within, between } => {
            let params = SyntheticParams {
                n_subjects: subjects,
                n_groups: groups,
                within_spread: within,
                between_spread: between,
                seed: cli.seed,
            };
            let data = gen_synthetic(&alphabet, &params)?;
            io::write_annotations(out(dir, "synthetic.csv"), &data.annotations)?;
            io::write_json(out(dir, "planted.json"), &data.planted)?;
            println!("{}", out(dir, "synthetic.csv").display());
        }
        Command::ColorDist { annotations, subject } => {
            let anns = io::read_annotations(&annotations, &alphabet)?;
            let (m, name) = match subject {
                Some(id) => {
                    let ann = anns
                        .iter()
                        .find(|a| a.subject_id == id)
                        .ok_or_else(|| Error::InvalidArgument(format!("no subject {id:?}")))?;
                    (color_distance_matrix(ann, normalize), format!("{id}.csv"))
                }
                None => {
                    let ms: Vec<_> = anns.iter().map(|a| color_distance_matrix(a, normalize)).collect();
                    (average_matrix(&ms)?, "human_avg.csv".to_string())
                }
            };
            io::write_matrix(out(dir, &name), &m)?;
            println!("{}", out(dir, &name).display());
        }
        Command::EmbedDist { embeddings } => {
            let emb = io::read_embeddings(&embeddings, &alphabet)?;
            let mut m = cosine_distance_matrix(&emb)?;
            if normalize {
                m = m.normalized_by_max();
            }
            let path = out(dir, &format!("{}.csv", emb.source_tag));
            io::write_matrix(&path, &m)?;
            println!("{}", path.display());
        }
        Command::Average { matrices } => {
            let ms = matrices.iter().map(io::read_matrix).collect::<Result<Vec<_>>>()?;
            let path = out(dir, "average.csv");
            io::write_matrix(&path, &average_matrix(&ms)?)?;
            println!("{}", path.display());
        }
        Command::Cluster { matrix, cutoffs } => {
            let m = io::read_matrix(&matrix)?;
            let cutoffs: Cutoffs = cutoffs.parse()?;
            let d = ward_cluster(&m)?;
            let values = cutoffs.resolve(&d);
            let stats = cluster_stats(&d, &values)?;
            let partitions = values.iter().map(|&c| cut_dendrogram(&d, c)).collect::<Result<Vec<_>>>()?;
            let result = serde_json::json!({ "dendrogram": d, "stats": stats, "partitions": partitions });
            io::write_json(out(dir, "cluster.json"), &result)?;
            print_json(&result)?;
        }
        Command::Metrics { matrix, net } => {
            let m = io::read_matrix(&matrix)?;
            let (mode, transform, eps) = net.parse()?;
            let cc = clustering_coefficients(&m, mode);
            let bc = betweenness(&m, transform, eps)?;
            io::write_atomic(out(dir, "clustering_coefficients.csv"), io::scores_csv(&cc).as_bytes())?;
            io::write_atomic(out(dir, "betweenness.csv"), io::scores_csv(&bc).as_bytes())?;
            println!("clustering_coefficient_avg {}", clustering_coefficient_avg(&m, mode));
        }
        Command::Cutnorm { matrix, other, cut } => {
            let a = io::read_matrix(&matrix)?;
            let method = cut.method(cli.seed)?;
            let result = match other {
                Some(b) => cut_distance(&a, &io::read_matrix(&b)?, &method)?,
                None => cutnorm(&RealMatrix::from(&a), &method)?,
            };
            print_json(&result)?;
        }
        Command::Correlate { human, models, top_k } => {
            let h = io::read_matrix(&human)?;
            let mut ms = Vec::new();
            for spec in &models {
                let src: EmbeddingSource = spec.parse()?;
                let m = io::read_matrix(&src.path)?;
                let tag = src.tag.unwrap_or_else(|| {
                    src.path.file_stem().map_or_else(|| "model".into(), |s| s.to_string_lossy().into_owned())
                });
                ms.push((tag, m));
            }
            let report = correlation_report(&h, &ms)?;
            let k = top_k.min(h.n() * (h.n() - 1) / 2);
            let rankings = ms.iter().map(|(t, m)| Ok((t.clone(), rank_pairs(m, k)?))).collect::<Result<Vec<_>>>()?;
            io::write_atomic(out(dir, "correlations.csv"), io::correlation_long_csv(&report).as_bytes())?;
            print_json(&serde_json::json!({ "correlations": report, "pair_rankings": rankings }))?;
        }
        Command::Report { annotations, embeddings, cutoffs, net, cut, baseline_iters, top_k, no_per_subject } => {
            let (degree_mode, betweenness_transform, epsilon) = net.parse()?;
            let config = RunConfig {
                alphabet,
                annotations,
                embeddings: embeddings.iter().map(|s| s.parse()).collect::<Result<Vec<_>>>()?,
                seed: cli.seed,
                cutoffs: cutoffs.parse()?,
                cutnorm: cut.method(0)?,
                degree_mode,
                betweenness_transform,
                epsilon,
                normalize,
                baseline_iters,
                per_subject: !no_per_subject,
                top_k,
                out_dir: cli.out_dir.clone(),
            };
            let report = run_pipeline(&config)?;
            for m in &report.correlations.ranking {
                println!("{}\t{:.4}", m.tag, m.r);
            }
            println!("{}", out(dir, "report.json").display());
        }
    }
    Ok(())
}

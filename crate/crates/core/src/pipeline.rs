//! Full analysis battery: ingestion, per-source analyses, baselines and the
//! assembled report.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clustering::{
    cluster_stats, cut_dendrogram, relative_cutoffs, ward_cluster, ClusterStats, Dendrogram, Partition,
    DEFAULT_CUTOFF_FRACTIONS,
};
use crate::cutnorm::{cut_distance, ApproxParams, CutNormMethod, CutNormResult};
use crate::distmat::{
    average_matrix, color_distance_matrix, cosine_distance_matrix, homogeneous_like, random_uniform_like,
    shuffle_matrix, Alphabet, ColorAnnotation, DistanceMatrix,
};
use crate::error::{Error, Result};
use crate::io;
use crate::netmetrics::{
    betweenness, clustering_coefficient_avg, clustering_coefficients, DegreeMode, NodeScores, PathTransform,
    DEFAULT_EPSILON,
};
use crate::simtask::{
    condensed_vector, correlation_report, pearson, rank_pairs, CorrelationReport, PairRanking, HUMAN_LABEL,
};

/// Published average clustering coefficient for random distance matrices.
pub const PUBLISHED_RANDOM_CLUSTERING: f64 = 0.5;

/// One embedding file, optionally under an explicit source tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSource {
    pub tag: Option<String>,
    pub path: PathBuf,
}

impl std::str::FromStr for EmbeddingSource {
    type Err = Error;
    /// `TAG=path` or a bare path.
    fn from_str(s: &str) -> Result<Self> {
        let (tag, path) = match s.split_once('=') {
            Some((t, p)) if !t.is_empty() => (Some(t.to_string()), p),
            _ => (None, s),
        };
        if path.is_empty() {
            return Err(Error::InvalidArgument(format!("empty embedding path in {s:?}")));
        }
        Ok(EmbeddingSource { tag, path: PathBuf::from(path) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "values", rename_all = "snake_case")]
pub enum Cutoffs {
    Absolute(Vec<f64>),
    /// Fractions of each dendrogram's root height.
    Relative(Vec<f64>),
}

impl Default for Cutoffs {
    fn default() -> Self {
        Cutoffs::Relative(DEFAULT_CUTOFF_FRACTIONS.to_vec())
    }
}

impl std::str::FromStr for Cutoffs {
    type Err = Error;
    /// Comma-separated values; a `rel:` prefix makes them root-height fractions.
    fn from_str(s: &str) -> Result<Self> {
        let (relative, list) = match s.strip_prefix("rel:") {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let values = list
            .split(',')
            .map(|v| v.trim().parse::<f64>().map_err(|_| Error::InvalidArgument(format!("bad cutoff {v:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        Ok(if relative { Cutoffs::Relative(values) } else { Cutoffs::Absolute(values) })
    }
}

impl Cutoffs {
    fn values(&self) -> &[f64] {
        match self {
            Cutoffs::Absolute(v) | Cutoffs::Relative(v) => v,
        }
    }

    pub fn resolve(&self, d: &Dendrogram) -> Vec<f64> {
        match self {
            Cutoffs::Absolute(v) => v.clone(),
            Cutoffs::Relative(f) => relative_cutoffs(d, f),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alphabet: Alphabet,
    pub annotations: PathBuf,
    pub embeddings: Vec<EmbeddingSource>,
    pub seed: u64,
    pub cutoffs: Cutoffs,
    /// Approximate-method settings; the seed field is replaced per stage.
    pub cutnorm: CutNormMethod,
    pub degree_mode: DegreeMode,
    pub betweenness_transform: PathTransform,
    /// `None` disables clamping of transformed edge lengths.
    pub epsilon: Option<f64>,
    pub normalize: bool,
    pub baseline_iters: usize,
    pub per_subject: bool,
    pub top_k: usize,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(annotations: impl Into<PathBuf>, out_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            alphabet: Alphabet::latin(),
            annotations: annotations.into(),
            embeddings: Vec::new(),
            seed: 0,
            cutoffs: Cutoffs::default(),
            cutnorm: CutNormMethod::Approx(ApproxParams::default()),
            degree_mode: DegreeMode::default(),
            betweenness_transform: PathTransform::default(),
            epsilon: Some(DEFAULT_EPSILON),
            normalize: true,
            baseline_iters: 100,
            per_subject: true,
            top_k: 10,
            out_dir: out_dir.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.annotations.as_os_str().is_empty() || self.out_dir.as_os_str().is_empty() {
            return bad("paths must be nonempty".into());
        }
        if self.embeddings.iter().any(|e| e.path.as_os_str().is_empty()) {
            return bad("embedding paths must be nonempty".into());
        }
        if self.embeddings.iter().any(|e| e.tag.as_deref() == Some(HUMAN_LABEL)) {
            return bad(format!("source tag {HUMAN_LABEL:?} is reserved"));
        }
        let cutoffs = self.cutoffs.values();
        if cutoffs.is_empty() || cutoffs.iter().any(|c| !(c.is_finite() && *c > 0.0)) {
            return bad("cutoffs must be positive".into());
        }
        if self.baseline_iters == 0 || self.top_k == 0 {
            return bad("baseline_iters and top_k must be positive".into());
        }
        if let Some(eps) = self.epsilon {
            if !(eps.is_finite() && eps > 0.0) {
                return bad(format!("epsilon must be positive, got {eps}"));
            }
        }
        if let CutNormMethod::Approx(p) = &self.cutnorm {
            if p.rounding_trials == 0 || p.max_iters == 0 || p.rank.is_some_and(|r| r < 2) {
                return bad("rounding_trials and max_iters must be positive, rank at least 2".into());
            }
        }
        Ok(())
    }

    fn method(&self, seed: u64) -> CutNormMethod {
        match self.cutnorm {
            CutNormMethod::Exact => CutNormMethod::Exact,
            CutNormMethod::Approx(p) => CutNormMethod::Approx(ApproxParams { seed, ..p }),
        }
    }
}

/// Seeds of every randomized stage, derived from the configured seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub root: u64,
    pub random_baseline: u64,
    pub shuffled_baseline: u64,
    pub cutnorm: u64,
}

impl StageSeeds {
    pub fn derive(root: u64) -> Self {
        StageSeeds {
            root,
            random_baseline: splitmix(root, 1),
            shuffled_baseline: splitmix(root, 2),
            cutnorm: splitmix(root, 3),
        }
    }
}

fn splitmix(seed: u64, stream: u64) -> u64 {
    let mut z = seed.wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSummary {
    pub tag: String,
    /// `human` or `model`.
    pub kind: String,
    /// Subjects averaged (human) or embedding files averaged (model).
    pub inputs: usize,
    pub normalized: bool,
    pub max_entry: f64,
    pub mean_entry: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub dendrogram: Dendrogram,
    pub stats: ClusterStats,
    /// One partition per cutoff, in `stats.cutoffs` order.
    pub partitions: Vec<Partition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSummary {
    pub samples: usize,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

impl SampleSummary {
    fn of(xs: &[f64]) -> Self {
        let k = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / k;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0) } else { 0.0 };
        SampleSummary {
            samples: xs.len(),
            mean,
            std: var.sqrt(),
            min: xs.iter().copied().fold(f64::INFINITY, f64::min),
            max: xs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineDistances {
    pub zero: CutNormResult,
    pub homogeneous: CutNormResult,
    /// Against each shared random matrix.
    pub random: SampleSummary,
    /// Against shuffles of this source.
    pub shuffled: SampleSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceAnalysis {
    pub summary: SourceSummary,
    pub clustering: Clustering,
    pub clustering_coefficients: NodeScores,
    pub clustering_coefficient_avg: f64,
    pub betweenness: NodeScores,
    pub pair_ranking: PairRanking,
    pub cut_distances: BaselineDistances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseDistance {
    pub source_a: String,
    pub source_b: String,
    pub result: CutNormResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub random_clustering_coefficient: SampleSummary,
    pub published_random_clustering_coefficient: f64,
    pub homogeneous_value: f64,
    pub homogeneous_clustering_coefficient: f64,
    /// Correlation of the human average with its own shuffles.
    pub shuffled_human_r: SampleSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectAnalysis {
    pub subject_id: String,
    pub r_vs_human_avg: Option<f64>,
    pub clustering_coefficient_avg: f64,
    pub root_height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub generated_at: u64,
    pub seeds: StageSeeds,
    pub cutnorm_inputs_normalized: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub provenance: Provenance,
    pub config: RunConfig,
    pub correlations: CorrelationReport,
    /// Human average first, then models in input order.
    pub sources: Vec<SourceAnalysis>,
    pub baselines: Baselines,
    pub pairwise_cut_distances: Vec<PairwiseDistance>,
    pub subjects: Vec<SubjectAnalysis>,
}

impl AnalysisReport {
    pub fn source(&self, tag: &str) -> Option<&SourceAnalysis> {
        self.sources.iter().find(|s| s.summary.tag == tag)
    }
}

/// Everything read from disk, before any computation.
pub struct Inputs {
    pub annotations: Vec<ColorAnnotation>,
    /// Distance matrices grouped by tag, tags in first-seen order.
    pub models: Vec<(String, Vec<DistanceMatrix>)>,
}

pub fn ingest(config: &RunConfig) -> Result<Inputs> {
    let annotations = io::read_annotations(&config.annotations, &config.alphabet)?;
    let mut models: Vec<(String, Vec<DistanceMatrix>)> = Vec::new();
    for src in &config.embeddings {
        let emb = io::read_embeddings(&src.path, &config.alphabet)?;
        let tag = src.tag.clone().unwrap_or_else(|| emb.source_tag.clone());
        if tag == HUMAN_LABEL {
            return Err(Error::InvalidArgument(format!("source tag {HUMAN_LABEL:?} is reserved")));
        }
        let mut m = cosine_distance_matrix(&emb)?;
        if config.normalize {
            m = m.normalized_by_max();
        }
        match models.iter_mut().find(|(t, _)| *t == tag) {
            Some((_, ms)) => ms.push(m),
            None => models.push((tag, vec![m])),
        }
    }
    Ok(Inputs { annotations, models })
}

/// Reads inputs, runs every analysis, then writes the report and plot data.
/// Nothing is written if any stage fails.
pub fn run_pipeline(config: &RunConfig) -> Result<AnalysisReport> {
    config.validate()?;
    let inputs = ingest(config)?;
    let report = analyze(config, &inputs)?;
    write_outputs(&config.out_dir, &report, &inputs_matrices(config, &inputs)?)?;
    Ok(report)
}

fn human_matrices(config: &RunConfig, annotations: &[ColorAnnotation]) -> Vec<DistanceMatrix> {
    annotations.par_iter().map(|a| color_distance_matrix(a, config.normalize)).collect()
}

fn inputs_matrices(config: &RunConfig, inputs: &Inputs) -> Result<Vec<(String, DistanceMatrix)>> {
    let mut out = vec![(HUMAN_LABEL.to_string(), average_matrix(&human_matrices(config, &inputs.annotations))?)];
    for (tag, ms) in &inputs.models {
        out.push((tag.clone(), average_matrix(ms)?));
    }
    Ok(out)
}

/// Runs the analyses on already-ingested inputs.
pub fn analyze(config: &RunConfig, inputs: &Inputs) -> Result<AnalysisReport> {
    config.validate()?;
    let seeds = StageSeeds::derive(config.seed);
    let subject_matrices = human_matrices(config, &inputs.annotations);
    let human = average_matrix(&subject_matrices)?;

    let mut sources: Vec<(SourceSummary, DistanceMatrix)> =
        vec![(summarize(HUMAN_LABEL, "human", subject_matrices.len(), &human), human.clone())];
    for (tag, ms) in &inputs.models {
        let m = average_matrix(ms)?;
        sources.push((summarize(tag, "model", ms.len(), &m), m));
    }
    let models: Vec<(String, DistanceMatrix)> = sources[1..].iter().map(|(s, m)| (s.tag.clone(), m.clone())).collect();
    let correlations = correlation_report(&human, &models)?;

    let randoms: Vec<DistanceMatrix> = (0..config.baseline_iters as u64)
        .map(|k| random_uniform_like(&config.alphabet, splitmix(seeds.random_baseline, k)))
        .collect();
    let homogeneous_value = if config.normalize { 1.0 } else { human.max_entry().max(f64::MIN_POSITIVE) };
    let homogeneous = homogeneous_like(&config.alphabet, homogeneous_value)?;

    let analyses = sources
        .par_iter()
        .enumerate()
        .map(|(idx, (summary, m))| analyze_source(config, &seeds, idx as u64, summary.clone(), m, &randoms))
        .collect::<Result<Vec<_>>>()?;

    let shuffled_r = (0..config.baseline_iters as u64)
        .map(|k| {
            pearson(
                &condensed_vector(&human),
                &condensed_vector(&shuffle_matrix(&human, splitmix(seeds.shuffled_baseline, k))),
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    let random_cc: Vec<f64> = randoms.par_iter().map(|r| clustering_coefficient_avg(r, config.degree_mode)).collect();
    let baselines = Baselines {
        random_clustering_coefficient: SampleSummary::of(&random_cc),
        published_random_clustering_coefficient: PUBLISHED_RANDOM_CLUSTERING,
        homogeneous_value,
        homogeneous_clustering_coefficient: clustering_coefficient_avg(&homogeneous, config.degree_mode),
        shuffled_human_r: SampleSummary::of(&shuffled_r),
    };

    let pairs: Vec<(usize, usize)> =
        (0..sources.len()).flat_map(|i| (i + 1..sources.len()).map(move |j| (i, j))).collect();
    let pairwise_cut_distances = pairs
        .par_iter()
        .map(|&(i, j)| {
            let method = config.method(splitmix(seeds.cutnorm, (1 << 32) + (i * sources.len() + j) as u64));
            Ok(PairwiseDistance {
                source_a: sources[i].0.tag.clone(),
                source_b: sources[j].0.tag.clone(),
                result: cut_distance(&sources[i].1, &sources[j].1, &method)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let subjects = if config.per_subject {
        let human_vec = condensed_vector(&human);
        inputs
            .annotations
            .par_iter()
            .zip(&subject_matrices)
            .map(|(a, m)| {
                Ok(SubjectAnalysis {
                    subject_id: a.subject_id.clone(),
                    r_vs_human_avg: pearson(&condensed_vector(m), &human_vec).ok(),
                    clustering_coefficient_avg: clustering_coefficient_avg(m, config.degree_mode),
                    root_height: ward_cluster(m)?.root_height(),
                })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    Ok(AnalysisReport {
        provenance: Provenance {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            generated_at: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
            seeds,
            cutnorm_inputs_normalized: config.normalize,
        },
        config: config.clone(),
        correlations,
        sources: analyses,
        baselines,
        pairwise_cut_distances,
        subjects,
    })
}

fn summarize(tag: &str, kind: &str, inputs: usize, m: &DistanceMatrix) -> SourceSummary {
    let cv = condensed_vector(m);
    SourceSummary {
        tag: tag.into(),
        kind: kind.into(),
        inputs,
        normalized: m.is_normalized(),
        max_entry: m.max_entry(),
        mean_entry: cv.values.iter().sum::<f64>() / cv.values.len() as f64,
    }
}

fn analyze_source(
    config: &RunConfig,
    seeds: &StageSeeds,
    idx: u64,
    summary: SourceSummary,
    m: &DistanceMatrix,
    randoms: &[DistanceMatrix],
) -> Result<SourceAnalysis> {
    let dendrogram = ward_cluster(m)?;
    let cutoffs = config.cutoffs.resolve(&dendrogram);
    let stats = cluster_stats(&dendrogram, &cutoffs)?;
    let partitions = cutoffs.iter().map(|&c| cut_dendrogram(&dendrogram, c)).collect::<Result<Vec<_>>>()?;

    let cc = clustering_coefficients(m, config.degree_mode);
    let cc_avg = cc.values.iter().sum::<f64>() / cc.values.len() as f64;
    let bc = betweenness(m, config.betweenness_transform, config.epsilon)?;
    let k = config.top_k.min(m.n() * (m.n() - 1) / 2);
    let pair_ranking = rank_pairs(m, k)?;

    // stream layout: idx << 20 | baseline kind << 16 | sample
    let method = |kind: u64, sample: u64| config.method(splitmix(seeds.cutnorm, idx << 20 | kind << 16 | sample));
    let zero = cut_distance(m, &m.scaled(0.0), &method(0, 0))?;
    let homogeneous_value = if config.normalize { 1.0 } else { m.max_entry().max(f64::MIN_POSITIVE) };
    let homogeneous = cut_distance(m, &homogeneous_like(m.alphabet(), homogeneous_value)?, &method(1, 0))?;
    let random = randoms
        .iter()
        .enumerate()
        .map(|(s, r)| Ok(cut_distance(m, r, &method(2, s as u64))?.value))
        .collect::<Result<Vec<f64>>>()?;
    let shuffled = (0..config.baseline_iters as u64)
        .map(|s| {
            let sh = shuffle_matrix(m, splitmix(seeds.shuffled_baseline, idx << 20 | s));
            Ok(cut_distance(m, &sh, &method(3, s))?.value)
        })
        .collect::<Result<Vec<f64>>>()?;

    Ok(SourceAnalysis {
        summary,
        clustering: Clustering { dendrogram, stats, partitions },
        clustering_coefficients: cc,
        clustering_coefficient_avg: cc_avg,
        betweenness: bc,
        pair_ranking,
        cut_distances: BaselineDistances {
            zero,
            homogeneous,
            random: SampleSummary::of(&random),
            shuffled: SampleSummary::of(&shuffled),
        },
    })
}

/// `report.json` plus long-form plot series and the analyzed matrices.
pub fn write_outputs(out_dir: &Path, report: &AnalysisReport, matrices: &[(String, DistanceMatrix)]) -> Result<()> {
    let mut scores = String::from("source,metric,character,value\n");
    let mut cuts = String::from("source,baseline,value\n");
    let mut merges = String::from("source,step,left,right,distance,size\n");
    for s in &report.sources {
        let tag = &s.summary.tag;
        for ns in [&s.clustering_coefficients, &s.betweenness] {
            for (c, v) in ns.alphabet.chars().iter().zip(&ns.values) {
                scores.push_str(&format!("{tag},{},{c},{v}\n", ns.metric_tag));
            }
        }
        let cd = &s.cut_distances;
        for (name, v) in [
            ("zero", cd.zero.value),
            ("homogeneous", cd.homogeneous.value),
            ("random_mean", cd.random.mean),
            ("shuffled_mean", cd.shuffled.mean),
        ] {
            cuts.push_str(&format!("{tag},{name},{v}\n"));
        }
        for (k, m) in s.clustering.dendrogram.merges.iter().enumerate() {
            merges.push_str(&format!("{tag},{k},{},{},{},{}\n", m.left, m.right, m.distance, m.size));
        }
    }
    for p in &report.pairwise_cut_distances {
        cuts.push_str(&format!("{},{},{}\n", p.source_a, p.source_b, p.result.value));
    }

    io::write_atomic(out_dir.join("correlations.csv"), io::correlation_long_csv(&report.correlations).as_bytes())?;
    io::write_atomic(out_dir.join("node_scores.csv"), scores.as_bytes())?;
    io::write_atomic(out_dir.join("cut_distances.csv"), cuts.as_bytes())?;
    io::write_atomic(out_dir.join("merges.csv"), merges.as_bytes())?;
    for (tag, m) in matrices {
        io::write_matrix(out_dir.join("matrices").join(format!("{tag}.csv")), m)?;
    }
    // the report goes last so its presence marks a complete run
    io::write_json(out_dir.join("report.json"), report)
}

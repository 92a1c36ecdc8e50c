//! Weighted clustering coefficient and betweenness centrality on the complete
//! graph defined by a distance matrix.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distmat::{Alphabet, DistanceMatrix};
use crate::error::{Error, Result};

/// What `deg(u)` means in the clustering coefficient denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeMode {
    /// Number of neighbors joined by a nonzero weight.
    #[default]
    NeighborCount,
    /// Sum of normalized edge weights. The result is clamped to [0, 1].
    Strength,
}

impl FromStr for DegreeMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neighbor_count" | "neighbor-count" => Ok(Self::NeighborCount),
            "strength" => Ok(Self::Strength),
            _ => Err(Error::InvalidArgument(format!("unknown degree mode {s:?}"))),
        }
    }
}

/// How matrix entries become edge lengths for shortest paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathTransform {
    /// Length = distance.
    None,
    /// Length = 0.5 - distance, for normalized matrices.
    #[default]
    SimilarityHalfMinusD,
}

impl FromStr for PathTransform {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "similarity_half_minus_d" | "similarity-half-minus-d" | "half-minus-d" => Ok(Self::SimilarityHalfMinusD),
            _ => Err(Error::InvalidArgument(format!("unknown betweenness transform {s:?}"))),
        }
    }
}

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// One value per alphabet character.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeScores {
    pub alphabet: Alphabet,
    pub values: Vec<f64>,
    pub metric_tag: String,
}

impl NodeScores {
    pub fn get(&self, c: char) -> Option<f64> {
        self.alphabet.index_of(c).map(|i| self.values[i])
    }
}

fn local_coefficient(m: &DistanceMatrix, u: usize, max_weight: f64, mode: DegreeMode) -> f64 {
    if max_weight <= 0.0 {
        return 0.0;
    }
    let n = m.n();
    let neighbors: Vec<usize> = (0..n).filter(|&v| v != u && m.get(u, v) > 0.0).collect();
    if neighbors.len() < 2 {
        return 0.0;
    }
    let w = |i: usize, j: usize| m.get(i, j) / max_weight;
    let mut sum = 0.0;
    for &v in &neighbors {
        for &x in &neighbors {
            if v != x {
                sum += (w(u, v) * w(u, x) * w(v, x)).cbrt();
            }
        }
    }
    let deg = match mode {
        DegreeMode::NeighborCount => neighbors.len() as f64,
        DegreeMode::Strength => neighbors.iter().map(|&v| w(u, v)).sum(),
    };
    let denom = deg * (deg - 1.0);
    if denom <= 0.0 {
        return 0.0;
    }
    (sum / denom).clamp(0.0, 1.0)
}

/// Local weighted clustering coefficient of one node.
pub fn clustering_coefficient_local(m: &DistanceMatrix, node: char, mode: DegreeMode) -> Result<f64> {
    let u = m
        .alphabet()
        .index_of(node)
        .ok_or_else(|| Error::InvalidArgument(format!("{node:?} is not in the alphabet")))?;
    Ok(local_coefficient(m, u, m.max_entry(), mode))
}

/// Local coefficients of every node.
pub fn clustering_coefficients(m: &DistanceMatrix, mode: DegreeMode) -> NodeScores {
    let max = m.max_entry();
    NodeScores {
        alphabet: m.alphabet().clone(),
        values: (0..m.n()).map(|u| local_coefficient(m, u, max, mode)).collect(),
        metric_tag: "clustering_coefficient".into(),
    }
}

/// Mean of the local coefficients over all nodes.
pub fn clustering_coefficient_avg(m: &DistanceMatrix, mode: DegreeMode) -> f64 {
    let scores = clustering_coefficients(m, mode);
    scores.values.iter().sum::<f64>() / scores.values.len() as f64
}

/// Edge lengths after applying `transform`. `epsilon = None` disables clamping
/// and turns negative lengths into an error.
pub fn edge_lengths(m: &DistanceMatrix, transform: PathTransform, epsilon: Option<f64>) -> Result<Vec<f64>> {
    let n = m.n();
    let mut lengths = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let d = m.get(i, j);
            let len = match transform {
                PathTransform::None => d,
                PathTransform::SimilarityHalfMinusD => {
                    let raw = 0.5 - d;
                    match epsilon {
                        Some(eps) => raw.max(eps),
                        None => raw,
                    }
                }
            };
            if len < 0.0 {
                let chars = m.alphabet().chars();
                return Err(Error::NegativeEdge { from: chars[i], to: chars[j], length: len });
            }
            lengths[i * n + j] = len;
        }
    }
    Ok(lengths)
}

/// Betweenness centrality: for every node, the sum over unordered pairs
/// `{s, t}` not containing it of the fraction of shortest s-t paths through
/// it. Unnormalized.
///
/// Shortest paths use Dijkstra with exact-equality tie detection. Zero-length
/// edges are followed in settlement order only, so paths that would need to
/// revisit an already-settled node at the same distance are not counted.
pub fn betweenness(m: &DistanceMatrix, transform: PathTransform, epsilon: Option<f64>) -> Result<NodeScores> {
    let n = m.n();
    let lengths = edge_lengths(m, transform, epsilon)?;
    let mut scores = vec![0.0; n];

    let mut dist = vec![f64::INFINITY; n];
    let mut sigma = vec![0.0f64; n];
    let mut settled = vec![false; n];
    let mut preds: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut order = Vec::with_capacity(n);
    let mut delta = vec![0.0; n];

    for s in 0..n {
        dist.fill(f64::INFINITY);
        sigma.fill(0.0);
        settled.fill(false);
        preds.iter_mut().for_each(Vec::clear);
        order.clear();
        dist[s] = 0.0;
        sigma[s] = 1.0;

        loop {
            let mut next = None;
            for v in 0..n {
                if !settled[v] && dist[v].is_finite() && next.is_none_or(|b: usize| dist[v] < dist[b]) {
                    next = Some(v);
                }
            }
            let Some(v) = next else { break };
            settled[v] = true;
            order.push(v);
            for w in 0..n {
                if w == v || settled[w] {
                    continue;
                }
                let alt = dist[v] + lengths[v * n + w];
                if alt < dist[w] {
                    dist[w] = alt;
                    sigma[w] = sigma[v];
                    preds[w].clear();
                    preds[w].push(v);
                } else if alt == dist[w] {
                    sigma[w] += sigma[v];
                    preds[w].push(v);
                }
            }
        }

        delta.fill(0.0);
        while let Some(w) = order.pop() {
            for &v in &preds[w] {
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
            }
            if w != s {
                scores[w] += delta[w];
            }
        }
    }
    // each unordered pair was counted from both endpoints
    for v in &mut scores {
        *v /= 2.0;
    }
    Ok(NodeScores { alphabet: m.alphabet().clone(), values: scores, metric_tag: "betweenness".into() })
}

//! Character similarity task: condensed pair vectors, Pearson correlation
//! between sources, and pair rankings.

use serde::{Deserialize, Serialize};

use crate::distmat::{Alphabet, DistanceMatrix};
use crate::error::{Error, Result};

/// Label used for the averaged human matrix in correlation reports.
pub const HUMAN_LABEL: &str = "human_avg";

/// Upper-triangle entries `(i, j), i < j`, in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CondensedVector {
    pub alphabet: Alphabet,
    pub values: Vec<f64>,
}

impl CondensedVector {
    /// Pairs in the order their values appear.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> {
        let n = self.alphabet.len();
        (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
    }

    /// Rebuilds the symmetric matrix.
    pub fn to_matrix(&self, normalized: bool) -> Result<DistanceMatrix> {
        let n = self.alphabet.len();
        let mut values = vec![0.0; n * n];
        for ((i, j), v) in self.pairs().zip(&self.values) {
            values[i * n + j] = *v;
            values[j * n + i] = *v;
        }
        DistanceMatrix::new(self.alphabet.clone(), values, normalized)
    }
}

pub fn condensed_vector(m: &DistanceMatrix) -> CondensedVector {
    let n = m.n();
    let values = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).collect();
    CondensedVector { alphabet: m.alphabet().clone(), values }
}

/// Sample Pearson correlation coefficient.
pub fn pearson(x: &CondensedVector, y: &CondensedVector) -> Result<f64> {
    if x.alphabet != y.alphabet {
        return Err(Error::AlphabetMismatch);
    }
    pearson_slices(&x.values, &y.values)
}

pub(crate) fn pearson_slices(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.is_empty() {
        return Err(Error::InvalidArgument(format!("vector lengths {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::ConstantVector);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedModel {
    pub tag: String,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    /// Row/column labels: the human average first, then models in input order.
    pub labels: Vec<String>,
    pub matrix: Vec<Vec<f64>>,
    /// Models by correlation with the human average, highest first.
    pub ranking: Vec<RankedModel>,
}

impl CorrelationReport {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.labels.iter().position(|l| l == a)?;
        let j = self.labels.iter().position(|l| l == b)?;
        Some(self.matrix[i][j])
    }

    /// Long-form `(source_a, source_b, r)` rows covering the full matrix.
    pub fn long_form(&self) -> Vec<(String, String, f64)> {
        let mut rows = Vec::with_capacity(self.labels.len().pow(2));
        for (i, a) in self.labels.iter().enumerate() {
            for (j, b) in self.labels.iter().enumerate() {
                rows.push((a.clone(), b.clone(), self.matrix[i][j]));
            }
        }
        rows
    }
}

/// All-pairs Pearson correlations over the human average and every model.
pub fn correlation_report(
    human_avg: &DistanceMatrix,
    models: &[(String, DistanceMatrix)],
) -> Result<CorrelationReport> {
    let mut labels = vec![HUMAN_LABEL.to_string()];
    let mut vectors = vec![condensed_vector(human_avg)];
    for (tag, m) in models {
        if m.alphabet() != human_avg.alphabet() {
            return Err(Error::AlphabetMismatch);
        }
        if labels.contains(tag) {
            return Err(Error::InvalidArgument(format!("duplicate source tag {tag:?}")));
        }
        labels.push(tag.clone());
        vectors.push(condensed_vector(m));
    }
    let k = labels.len();
    let mut matrix = vec![vec![0.0; k]; k];
    for i in 0..k {
        matrix[i][i] = 1.0;
        for j in i + 1..k {
            let r = pearson(&vectors[i], &vectors[j])?;
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
    }
    if k == 1 {
        // still reject a constant human vector
        pearson(&vectors[0], &vectors[0])?;
    }
    let mut ranking: Vec<RankedModel> =
        (1..k).map(|j| RankedModel { tag: labels[j].clone(), r: matrix[0][j] }).collect();
    ranking.sort_by(|a, b| b.r.total_cmp(&a.r).then_with(|| a.tag.cmp(&b.tag)));
    Ok(CorrelationReport { labels, matrix, ranking })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedPair {
    pub first: char,
    pub second: char,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRanking {
    /// Closest pairs, ascending by distance.
    pub similar: Vec<RankedPair>,
    /// Farthest pairs, descending by distance.
    pub dissimilar: Vec<RankedPair>,
}

/// The `k` most similar and `k` most dissimilar pairs. Ties break by pair
/// position in alphabet order.
pub fn rank_pairs(m: &DistanceMatrix, k: usize) -> Result<PairRanking> {
    let cv = condensed_vector(m);
    let available = cv.values.len();
    if k == 0 || k > available {
        return Err(Error::KTooLarge { k, available });
    }
    let mut order: Vec<usize> = (0..available).collect();
    let chars = m.alphabet().chars();
    let pairs: Vec<(usize, usize)> = cv.pairs().collect();
    let to_pair =
        |idx: usize| RankedPair { first: chars[pairs[idx].0], second: chars[pairs[idx].1], distance: cv.values[idx] };

    order.sort_by(|&a, &b| cv.values[a].total_cmp(&cv.values[b]).then(a.cmp(&b)));
    let similar = order[..k].iter().map(|&i| to_pair(i)).collect();
    order.sort_by(|&a, &b| cv.values[b].total_cmp(&cv.values[a]).then(a.cmp(&b)));
    let dissimilar = order[..k].iter().map(|&i| to_pair(i)).collect();
    Ok(PairRanking { similar, dissimilar })
}

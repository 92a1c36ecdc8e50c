//! Ward agglomerative clustering over a distance matrix.
//!
//! Leaves are cluster ids `0..n`; the k-th merge creates cluster `n + k`.
//! After merging `s` and `t` into `u`, the distance to any other cluster `v`
//! is updated as
//!
//! ```text
//! d(u,v) = sqrt( (|v|+|s|)/T d(v,s)^2 + (|v|+|t|)/T d(v,t)^2 - |v|/T d(s,t)^2 ),  T = |s|+|t|+|v|
//! ```

use serde::{Deserialize, Serialize};

use crate::distmat::{Alphabet, DistanceMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Merge {
    pub left: usize,
    pub right: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    pub alphabet: Alphabet,
    pub merges: Vec<Merge>,
}

impl Dendrogram {
    pub fn n(&self) -> usize {
        self.alphabet.len()
    }

    /// Heights of all merges, in merge order.
    pub fn heights(&self) -> Vec<f64> {
        self.merges.iter().map(|m| m.distance).collect()
    }

    pub fn root_height(&self) -> f64 {
        self.merges.last().map_or(0.0, |m| m.distance)
    }
}

/// Disjoint character groups covering an alphabet, in canonical order:
/// members follow alphabet order and groups are ordered by first member.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition(pub Vec<Vec<char>>);

impl Partition {
    /// Canonicalizes groups given by alphabet indices.
    pub fn from_indices(alphabet: &Alphabet, mut groups: Vec<Vec<usize>>) -> Self {
        for g in &mut groups {
            g.sort_unstable();
        }
        groups.retain(|g| !g.is_empty());
        groups.sort_unstable_by_key(|g| g[0]);
        let chars = alphabet.chars();
        Self(groups.into_iter().map(|g| g.into_iter().map(|i| chars[i]).collect()).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.0.iter().map(Vec::len).collect()
    }

    /// Same set family regardless of how either side is ordered.
    pub fn same_groups(&self, other: &Partition) -> bool {
        let canon = |p: &Partition| {
            let mut gs: Vec<Vec<char>> =
                p.0.iter()
                    .map(|g| {
                        let mut g = g.clone();
                        g.sort_unstable();
                        g
                    })
                    .collect();
            gs.sort();
            gs
        };
        canon(self) == canon(other)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffStats {
    pub cutoff: f64,
    pub cluster_count: usize,
    /// Cluster sizes, largest first.
    pub cluster_sizes: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterStats {
    pub merge_distances: Vec<f64>,
    pub cutoffs: Vec<CutoffStats>,
}

/// Runs Ward's algorithm. Ties in the minimal distance merge the pair with the
/// lexicographically smallest `(min id, max id)`.
pub fn ward_cluster(m: &DistanceMatrix) -> Result<Dendrogram> {
    let n = m.n();
    if n < 2 {
        return Err(Error::InvalidArgument("clustering needs at least 2 items".into()));
    }
    // slot-indexed working state; slot i starts as leaf i
    let mut dist: Vec<f64> = m.values().to_vec();
    let mut ids: Vec<usize> = (0..n).collect();
    let mut sizes: Vec<usize> = vec![1; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..n - 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for (ai, &p) in active.iter().enumerate() {
            for &q in &active[ai + 1..] {
                let d = dist[p * n + q];
                let key = (ids[p].min(ids[q]), ids[p].max(ids[q]));
                let better = match best {
                    None => true,
                    Some((bd, bkey, _, _)) => d < bd || (d == bd && key < bkey),
                };
                if better {
                    best = Some((d, key, p, q));
                }
            }
        }
        let (d_st, _, s, t) = best.expect("at least two active clusters");
        let (ns, nt) = (sizes[s] as f64, sizes[t] as f64);
        for &v in &active {
            if v == s || v == t {
                continue;
            }
            let d = ward_update(ns, nt, sizes[v] as f64, dist[v * n + s], dist[v * n + t], d_st);
            dist[s * n + v] = d;
            dist[v * n + s] = d;
        }
        merges.push(Merge {
            left: ids[s].min(ids[t]),
            right: ids[s].max(ids[t]),
            distance: d_st,
            size: sizes[s] + sizes[t],
        });
        ids[s] = n + step;
        sizes[s] += sizes[t];
        active.retain(|&x| x != t);
    }
    Ok(Dendrogram { alphabet: m.alphabet().clone(), merges })
}

/// Distance from the union of `s` and `t` to `v`, given cluster sizes and
/// the three pairwise distances.
pub(crate) fn ward_update(ns: f64, nt: f64, nv: f64, d_vs: f64, d_vt: f64, d_st: f64) -> f64 {
    let total = ns + nt + nv;
    let a = (nv + ns) / total * d_vs * d_vs;
    let b = (nv + nt) / total * d_vt * d_vt;
    let c = nv / total * d_st * d_st;
    (a + b - c).max(0.0).sqrt()
}

/// Undoes every merge whose height exceeds `cutoff`.
pub fn cut_dendrogram(d: &Dendrogram, cutoff: f64) -> Result<Partition> {
    if cutoff.is_nan() || cutoff <= 0.0 {
        return Err(Error::InvalidArgument(format!("cutoff must be positive, got {cutoff}")));
    }
    let n = d.n();
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for (k, m) in d.merges.iter().enumerate() {
        if m.distance <= cutoff {
            let (l, r) = (find(&mut parent, m.left), find(&mut parent, m.right));
            parent[l] = n + k;
            parent[r] = n + k;
        }
    }
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); 2 * n - 1];
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        groups[root].push(leaf);
    }
    Ok(Partition::from_indices(&d.alphabet, groups))
}

/// Merge heights plus cluster count and sizes at each cutoff.
pub fn cluster_stats(d: &Dendrogram, cutoffs: &[f64]) -> Result<ClusterStats> {
    if cutoffs.is_empty() {
        return Err(Error::InvalidArgument("at least one cutoff is required".into()));
    }
    let cutoffs = cutoffs
        .iter()
        .map(|&c| {
            let p = cut_dendrogram(d, c)?;
            let mut sizes = p.sizes();
            sizes.sort_unstable_by(|a, b| b.cmp(a));
            Ok(CutoffStats { cutoff: c, cluster_count: p.len(), cluster_sizes: sizes })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ClusterStats { merge_distances: d.heights(), cutoffs })
}

/// Cutoffs placed at fixed fractions of the root height. The fractions are a
/// convention of this tool, not a calibrated choice.
pub const DEFAULT_CUTOFF_FRACTIONS: [f64; 3] = [0.3, 0.5, 0.7];

pub fn relative_cutoffs(d: &Dendrogram, fractions: &[f64]) -> Vec<f64> {
    let root = d.root_height();
    fractions.iter().map(|f| if root > 0.0 { f * root } else { f64::MIN_POSITIVE }).collect()
}

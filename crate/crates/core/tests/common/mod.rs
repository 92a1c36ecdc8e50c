//! Independent reference implementations used by the integration suites.
//! Nothing here calls into the code paths it checks.

#![allow(dead_code)]

use chromanet::distmat::{Alphabet, DistanceMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// CIEDE2000 reference pairs: (L1, a1, b1, L2, a2, b2, dE00), as published
/// with the formula's implementation notes (Sharma, Wu, Dalal 2005, Table 1).
pub const CIEDE2000_PAIRS: [[f64; 7]; 34] = [
    [50.0000, 2.6772, -79.7751, 50.0000, 0.0000, -82.7485, 2.0425],
    [50.0000, 3.1571, -77.2803, 50.0000, 0.0000, -82.7485, 2.8615],
    [50.0000, 2.8361, -74.0200, 50.0000, 0.0000, -82.7485, 3.4412],
    [50.0000, -1.3802, -84.2814, 50.0000, 0.0000, -82.7485, 1.0000],
    [50.0000, -1.1848, -84.8006, 50.0000, 0.0000, -82.7485, 1.0000],
    [50.0000, -0.9009, -85.5211, 50.0000, 0.0000, -82.7485, 1.0000],
    [50.0000, 0.0000, 0.0000, 50.0000, -1.0000, 2.0000, 2.3669],
    [50.0000, -1.0000, 2.0000, 50.0000, 0.0000, 0.0000, 2.3669],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0009, 7.1792],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0010, 7.1792],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0011, 7.2195],
    [50.0000, 2.4900, -0.0010, 50.0000, -2.4900, 0.0012, 7.2195],
    [50.0000, -0.0010, 2.4900, 50.0000, 0.0009, -2.4900, 4.8045],
    [50.0000, -0.0010, 2.4900, 50.0000, 0.0010, -2.4900, 4.8045],
    [50.0000, -0.0010, 2.4900, 50.0000, 0.0011, -2.4900, 4.7461],
    [50.0000, 2.5000, 0.0000, 50.0000, 0.0000, -2.5000, 4.3065],
    [50.0000, 2.5000, 0.0000, 73.0000, 25.0000, -18.0000, 27.1492],
    [50.0000, 2.5000, 0.0000, 61.0000, -5.0000, 29.0000, 22.8977],
    [50.0000, 2.5000, 0.0000, 56.0000, -27.0000, -3.0000, 31.9030],
    [50.0000, 2.5000, 0.0000, 58.0000, 24.0000, 15.0000, 19.4535],
    [50.0000, 2.5000, 0.0000, 50.0000, 3.1736, 0.5854, 1.0000],
    [50.0000, 2.5000, 0.0000, 50.0000, 3.2972, 0.0000, 1.0000],
    [50.0000, 2.5000, 0.0000, 50.0000, 1.8634, 0.5757, 1.0000],
    [50.0000, 2.5000, 0.0000, 50.0000, 3.2592, 0.3350, 1.0000],
    [60.2574, -34.0099, 36.2677, 60.4626, -34.1751, 39.4387, 1.2644],
    [63.0109, -31.0961, -5.8663, 62.8187, -29.7946, -4.0864, 1.2630],
    [61.2901, 3.7196, -5.3901, 61.4292, 2.2480, -4.9620, 1.8731],
    [35.0831, -44.1164, 3.7933, 35.0232, -40.0716, 1.5901, 1.8645],
    [22.7233, 20.0904, -46.6940, 23.0331, 14.9730, -42.5619, 2.0373],
    [36.4612, 47.8580, 18.3852, 36.2715, 50.5065, 21.2231, 1.4146],
    [90.8027, -2.0831, 1.4410, 91.1528, -1.6435, 0.0447, 1.4441],
    [90.9257, -0.5406, -0.9208, 88.6381, -0.8985, -0.7239, 1.5381],
    [6.7747, -0.2908, -2.4247, 5.8714, -0.0985, -2.2286, 0.6377],
    [2.0776, 0.0795, -1.1350, 0.9033, -0.0636, -0.5514, 0.9082],
];

pub fn alphabet(n: usize) -> Alphabet {
    Alphabet::new(('A'..='Z').take(n).collect()).unwrap()
}

/// Symmetric matrix from its strict upper triangle, row-major.
pub fn from_upper(n: usize, upper: &[f64], normalized: bool) -> DistanceMatrix {
    let mut values = vec![0.0; n * n];
    let mut it = upper.iter();
    for i in 0..n {
        for j in i + 1..n {
            let v = *it.next().expect("enough upper entries");
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    DistanceMatrix::new(alphabet(n), values, normalized).unwrap()
}

pub fn random_matrix(n: usize, rng: &mut ChaCha8Rng) -> DistanceMatrix {
    let upper: Vec<f64> = (0..n * (n - 1) / 2).map(|_| rng.gen_range(0.01..1.0)).collect();
    from_upper(n, &upper, true)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ward merge heights recomputed from scratch every round. The distance
/// between clusters A and B is evaluated directly from member distances:
///
///   d(A,B)^2 = 2|A||B|/(|A|+|B|) * ( S(A,B)/(|A||B|) - S(A,A)/(2|A|^2) - S(B,B)/(2|B|^2) )
///
/// with S(X,Y) the sum of squared distances over x in X, y in Y. This closed
/// form equals what the size-weighted update recurrence produces, but it
/// never stores or reuses a cluster-level distance.
pub fn naive_ward_heights(m: &DistanceMatrix) -> Vec<f64> {
    let n = m.n();
    let sq = |x: &[usize], y: &[usize]| -> f64 {
        x.iter().map(|&a| y.iter().map(|&b| m.get(a, b).powi(2)).sum::<f64>()).sum()
    };
    let ward = |x: &[usize], y: &[usize]| -> f64 {
        let (p, q) = (x.len() as f64, y.len() as f64);
        let inner = sq(x, y) / (p * q) - sq(x, x) / (2.0 * p * p) - sq(y, y) / (2.0 * q * q);
        (2.0 * p * q / (p + q) * inner).max(0.0).sqrt()
    };
    let mut clusters: Vec<(usize, Vec<usize>)> = (0..n).map(|i| (i, vec![i])).collect();
    let mut heights = Vec::new();
    let mut next_id = n;
    while clusters.len() > 1 {
        let mut best: Option<(f64, (usize, usize), usize, usize)> = None;
        for a in 0..clusters.len() {
            for b in a + 1..clusters.len() {
                let d = ward(&clusters[a].1, &clusters[b].1);
                let key = (clusters[a].0.min(clusters[b].0), clusters[a].0.max(clusters[b].0));
                if best.is_none_or(|(bd, bk, _, _)| d < bd || (d == bd && key < bk)) {
                    best = Some((d, key, a, b));
                }
            }
        }
        let (d, _, a, b) = best.unwrap();
        heights.push(d);
        let merged: Vec<usize> = clusters[a].1.iter().chain(&clusters[b].1).copied().collect();
        clusters.remove(b);
        clusters.remove(a);
        clusters.push((next_id, merged));
        next_id += 1;
    }
    heights
}

/// Betweenness by enumerating every simple path between every pair.
/// Path lengths accumulate from the source end.
pub fn brute_betweenness(lengths: &[f64], n: usize) -> Vec<f64> {
    fn walk(
        lengths: &[f64],
        n: usize,
        path: &mut Vec<usize>,
        len: f64,
        target: usize,
        out: &mut Vec<(f64, Vec<usize>)>,
    ) {
        let last = *path.last().unwrap();
        if last == target {
            out.push((len, path.clone()));
            return;
        }
        for next in 0..n {
            if !path.contains(&next) {
                path.push(next);
                walk(lengths, n, path, len + lengths[last * n + next], target, out);
                path.pop();
            }
        }
    }
    let mut scores = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            let mut paths = Vec::new();
            walk(lengths, n, &mut vec![s], 0.0, t, &mut paths);
            let best = paths.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
            let shortest: Vec<&Vec<usize>> = paths.iter().filter(|p| p.0 == best).map(|p| &p.1).collect();
            let total = shortest.len() as f64;
            for (u, score) in scores.iter_mut().enumerate() {
                if u == s || u == t {
                    continue;
                }
                let through = shortest.iter().filter(|p| p.contains(&u)).count() as f64;
                *score += through / total;
            }
        }
    }
    scores
}

/// Cut norm (divided by m n) by enumerating every pair of nonempty subsets.
pub fn brute_cutnorm(a: &[f64], m: usize, n: usize) -> f64 {
    let mut best: f64 = 0.0;
    for rows in 1u32..(1 << m) {
        for cols in 1u32..(1 << n) {
            let mut s = 0.0;
            for i in 0..m {
                if rows >> i & 1 == 1 {
                    for j in 0..n {
                        if cols >> j & 1 == 1 {
                            s += a[i * n + j];
                        }
                    }
                }
            }
            best = best.max(s.abs());
        }
    }
    best / (m * n) as f64
}

/// Matrix with `groups` planted blocks: `within` inside a block, `between`
/// across blocks. Returns the matrix and the block of every index.
pub fn planted_matrix(n: usize, groups: usize, within: f64, between: f64, seed: u64) -> (DistanceMatrix, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut r = rng(seed);
    let mut labels: Vec<usize> = (0..n).map(|i| i % groups).collect();
    labels.shuffle(&mut r);
    let mut upper = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            upper.push(if labels[i] == labels[j] { within } else { between });
        }
    }
    (from_upper(n, &upper, true), labels)
}

/// Planted groups as sorted character sets.
pub fn planted_groups(m: &DistanceMatrix, labels: &[usize]) -> Vec<Vec<char>> {
    let k = labels.iter().max().unwrap() + 1;
    let mut groups: Vec<Vec<char>> = vec![Vec::new(); k];
    for (i, &l) in labels.iter().enumerate() {
        groups[l].push(m.alphabet().chars()[i]);
    }
    groups.sort();
    groups
}

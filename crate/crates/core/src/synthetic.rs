//! Synthetic grapheme-color annotations with a planted letter partition.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::clustering::Partition;
use crate::color::{lab_to_srgb, srgb_to_lab, LabColor, RgbColor};
use crate::distmat::{Alphabet, ColorAnnotation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    pub n_subjects: usize,
    pub n_groups: usize,
    /// Standard deviation of the per-letter Lab jitter around its group color.
    pub within_spread: f64,
    /// Minimum Euclidean Lab distance between any two group colors of a subject.
    pub between_spread: f64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub annotations: Vec<ColorAnnotation>,
    /// Letter groups shared by every subject.
    pub planted: Partition,
}

const BASE_ATTEMPTS: usize = 20_000;

/// Each subject draws its own group base colors (pairwise at least
/// `between_spread` apart in Lab); each letter gets its group's base plus
/// Gaussian Lab jitter, mapped back into sRGB.
pub fn gen_synthetic(alphabet: &Alphabet, params: &SyntheticParams) -> Result<SyntheticData> {
    let SyntheticParams { n_subjects, n_groups, within_spread, between_spread, seed } = *params;
    if n_subjects == 0 {
        return Err(Error::InvalidArgument("need at least one subject".into()));
    }
    if n_groups == 0 || n_groups > alphabet.len() {
        return Err(Error::InvalidArgument(format!("group count must be in 1..={}, got {n_groups}", alphabet.len())));
    }
    if !(within_spread >= 0.0 && between_spread >= 0.0) {
        return Err(Error::InvalidArgument("spreads must be non-negative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..alphabet.len()).collect();
    order.shuffle(&mut rng);
    let mut group_of = vec![0; alphabet.len()];
    for (k, &letter) in order.iter().enumerate() {
        group_of[letter] = k % n_groups;
    }
    let mut groups = vec![Vec::new(); n_groups];
    for (letter, &g) in group_of.iter().enumerate() {
        groups[g].push(letter);
    }
    let planted = Partition::from_indices(alphabet, groups);

    let jitter = Normal::new(0.0, within_spread.max(f64::MIN_POSITIVE)).expect("finite spread");
    let width = n_subjects.to_string().len();
    let mut annotations = Vec::with_capacity(n_subjects);
    for s in 0..n_subjects {
        let bases = draw_bases(&mut rng, n_groups, between_spread)?;
        let colors = group_of
            .iter()
            .map(|&g| {
                let (rgb, lab) = bases[g];
                if within_spread == 0.0 {
                    return rgb;
                }
                lab_to_srgb(LabColor::new(
                    (lab.l + jitter.sample(&mut rng)).clamp(0.0, 100.0),
                    lab.a + jitter.sample(&mut rng),
                    lab.b + jitter.sample(&mut rng),
                ))
            })
            .collect();
        annotations.push(ColorAnnotation::new(format!("syn{:0width$}", s), alphabet.clone(), colors)?);
    }
    Ok(SyntheticData { annotations, planted })
}

fn draw_bases(rng: &mut ChaCha8Rng, k: usize, separation: f64) -> Result<Vec<(RgbColor, LabColor)>> {
    let mut bases: Vec<(RgbColor, LabColor)> = Vec::with_capacity(k);
    let mut attempts = 0;
    while bases.len() < k {
        attempts += 1;
        if attempts > BASE_ATTEMPTS {
            return Err(Error::InfeasibleSeparation { groups: k, separation });
        }
        let rgb = RgbColor::new(rng.gen(), rng.gen(), rng.gen());
        let lab = srgb_to_lab(rgb);
        if bases.iter().all(|(_, other)| lab.euclidean(other) >= separation) {
            bases.push((rgb, lab));
        } else if attempts % 2_000 == 0 {
            // greedy placement can paint itself into a corner; start over
            bases.clear();
        }
    }
    Ok(bases)
}

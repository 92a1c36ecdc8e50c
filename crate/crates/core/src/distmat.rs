//! Labeled distance matrices and their constructors.

use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::color::{ciede2000, srgb_to_lab, RgbColor};
use crate::error::{Error, Result};

/// Ordered, duplicate-free set of character labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Alphabet(Vec<char>);

impl Alphabet {
    pub fn new(chars: Vec<char>) -> Result<Self> {
        if chars.is_empty() {
            return Err(Error::InvalidArgument("alphabet is empty".into()));
        }
        for (i, c) in chars.iter().enumerate() {
            if chars[..i].contains(c) {
                return Err(Error::InvalidArgument(format!("alphabet repeats {c:?}")));
            }
        }
        Ok(Self(chars))
    }

    /// Parses an alphabet from its characters, case-folded to uppercase.
    pub fn parse(spec: &str) -> Result<Self> {
        Self::new(spec.chars().filter(|c| !c.is_whitespace()).map(fold_case).collect())
    }

    /// The 26 uppercase letters A-Z.
    pub fn latin() -> Self {
        Self(('A'..='Z').collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn chars(&self) -> &[char] {
        &self.0
    }

    pub fn index_of(&self, c: char) -> Option<usize> {
        self.0.iter().position(|&x| x == c)
    }
}

impl Default for Alphabet {
    fn default() -> Self {
        Self::latin()
    }
}

impl fmt::Display for Alphabet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.iter().try_for_each(|c| write!(f, "{c}"))
    }
}

impl TryFrom<String> for Alphabet {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        Self::parse(&s)
    }
}

impl From<Alphabet> for String {
    fn from(a: Alphabet) -> String {
        a.to_string()
    }
}

/// Case folding applied to every character label at ingestion.
pub fn fold_case(c: char) -> char {
    c.to_uppercase().next().unwrap_or(c)
}

/// One subject's letter-to-color mapping, aligned with its alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColorAnnotation {
    pub subject_id: String,
    pub alphabet: Alphabet,
    colors: Vec<RgbColor>,
}

impl ColorAnnotation {
    pub fn new(subject_id: impl Into<String>, alphabet: Alphabet, colors: Vec<RgbColor>) -> Result<Self> {
        if colors.len() != alphabet.len() {
            return Err(Error::InvalidArgument(format!(
                "{} colors for a {}-letter alphabet",
                colors.len(),
                alphabet.len()
            )));
        }
        Ok(Self { subject_id: subject_id.into(), alphabet, colors })
    }

    pub fn colors(&self) -> &[RgbColor] {
        &self.colors
    }

    pub fn color_of(&self, c: char) -> Option<RgbColor> {
        self.alphabet.index_of(c).map(|i| self.colors[i])
    }
}

/// Per-character vectors of one embedding model.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub alphabet: Alphabet,
    pub source_tag: String,
    vectors: Vec<Vec<f64>>,
}

impl EmbeddingMatrix {
    pub fn new(alphabet: Alphabet, vectors: Vec<Vec<f64>>, source_tag: impl Into<String>) -> Result<Self> {
        if vectors.len() != alphabet.len() {
            return Err(Error::InvalidArgument(format!(
                "{} vectors for a {}-letter alphabet",
                vectors.len(),
                alphabet.len()
            )));
        }
        let dim = vectors[0].len();
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        if let Some(v) = vectors.iter().find(|v| v.len() != dim) {
            return Err(Error::InvalidArgument(format!("expected dimension {dim}, found {}", v.len())));
        }
        for (c, v) in alphabet.chars().iter().zip(&vectors) {
            if v.iter().all(|x| *x == 0.0) {
                return Err(Error::ZeroVector(*c));
            }
        }
        Ok(Self { alphabet, source_tag: source_tag.into(), vectors })
    }

    pub fn dim(&self) -> usize {
        self.vectors[0].len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }
}

/// Symmetric, zero-diagonal, non-negative matrix over an alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    alphabet: Alphabet,
    values: Vec<f64>,
    normalized: bool,
}

impl DistanceMatrix {
    /// Builds a matrix from row-major values, checking every invariant.
    pub fn new(alphabet: Alphabet, values: Vec<f64>, normalized: bool) -> Result<Self> {
        let n = alphabet.len();
        if values.len() != n * n {
            return Err(Error::InvalidMatrix(format!("{} values for {n}x{n}", values.len())));
        }
        for i in 0..n {
            if values[i * n + i] != 0.0 {
                return Err(Error::InvalidMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = values[i * n + j];
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidMatrix(format!("entry ({i},{j}) = {v}")));
                }
                if v != values[j * n + i] {
                    return Err(Error::InvalidMatrix(format!("asymmetric at ({i},{j})")));
                }
                if normalized && v > 1.0 {
                    return Err(Error::InvalidMatrix(format!("normalized entry ({i},{j}) = {v} > 1")));
                }
            }
        }
        Ok(Self { alphabet, values, normalized })
    }

    /// Builds a matrix from a function over the strict upper triangle.
    fn from_upper(alphabet: Alphabet, normalized: bool, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let n = alphabet.len();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        Self { alphabet, values, normalized }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn n(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n() + j]
    }

    /// Row-major values.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn max_entry(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Divides every entry by the maximum entry; a zero matrix is returned as is.
    pub fn normalized_by_max(&self) -> Self {
        let max = self.max_entry();
        let values = if max > 0.0 { self.values.iter().map(|v| v / max).collect() } else { self.values.clone() };
        Self { alphabet: self.alphabet.clone(), values, normalized: true }
    }

    /// Multiplies every entry by `c >= 0`.
    pub fn scaled(&self, c: f64) -> Self {
        assert!(c >= 0.0 && c.is_finite(), "scale must be finite and non-negative");
        let values: Vec<f64> = self.values.iter().map(|v| v * c).collect();
        let normalized = self.normalized && values.iter().all(|v| *v <= 1.0);
        Self { alphabet: self.alphabet.clone(), values, normalized }
    }

    /// Reorders rows and columns: entry (i, j) of the result is entry
    /// (perm[i], perm[j]) of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n();
        assert_eq!(perm.len(), n);
        let chars = perm.iter().map(|&p| self.alphabet.chars()[p]).collect();
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                values[i * n + j] = self.get(perm[i], perm[j]);
            }
        }
        Self { alphabet: Alphabet(chars), values, normalized: self.normalized }
    }

    /// Entrywise difference `self - other` as a plain row-major matrix.
    pub fn difference(&self, other: &DistanceMatrix) -> Result<Vec<f64>> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch);
        }
        Ok(self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect())
    }
}

/// Pairwise CIEDE2000 differences between one subject's letter colors.
pub fn color_distance_matrix(annotation: &ColorAnnotation, normalize: bool) -> DistanceMatrix {
    let labs: Vec<_> = annotation.colors().iter().map(|&c| srgb_to_lab(c)).collect();
    let m = DistanceMatrix::from_upper(annotation.alphabet.clone(), false, |i, j| ciede2000(labs[i], labs[j]));
    if normalize {
        m.normalized_by_max()
    } else {
        m
    }
}

/// Pairwise cosine distances `1 - cos(v_i, v_j)`, in [0, 2].
pub fn cosine_distance_matrix(embeddings: &EmbeddingMatrix) -> Result<DistanceMatrix> {
    let norms: Vec<f64> = embeddings.vectors().iter().map(|v| v.iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0 || !n.is_finite()) {
        return Err(Error::ZeroVector(embeddings.alphabet.chars()[i]));
    }
    let vs = embeddings.vectors();
    Ok(DistanceMatrix::from_upper(embeddings.alphabet.clone(), false, |i, j| {
        let dot: f64 = vs[i].iter().zip(&vs[j]).map(|(a, b)| a * b).sum();
        (1.0 - dot / (norms[i] * norms[j])).clamp(0.0, 2.0)
    }))
}

/// Entrywise mean of matrices sharing one alphabet.
pub fn average_matrix(matrices: &[DistanceMatrix]) -> Result<DistanceMatrix> {
    let first = matrices.first().ok_or(Error::EmptyInput)?;
    if matrices.iter().any(|m| m.alphabet != first.alphabet) {
        return Err(Error::AlphabetMismatch);
    }
    let k = matrices.len() as f64;
    let mut values = vec![0.0; first.values.len()];
    for m in matrices {
        for (acc, v) in values.iter_mut().zip(&m.values) {
            *acc += v;
        }
    }
    for v in &mut values {
        *v /= k;
    }
    let n = first.n();
    // keep exact symmetry regardless of summation order
    for i in 0..n {
        for j in i + 1..n {
            values[j * n + i] = values[i * n + j];
        }
    }
    let normalized = matrices.iter().all(|m| m.normalized) && values.iter().all(|v| *v <= 1.0);
    Ok(DistanceMatrix { alphabet: first.alphabet.clone(), values, normalized })
}

fn check_size(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("matrix size must be at least 2, got {n}")));
    }
    Ok(())
}

/// Synthetic labels `0, 1, ...` for baselines that have no alphabet of their own.
fn index_alphabet(n: usize) -> Alphabet {
    if n <= 26 {
        Alphabet(('A'..='Z').take(n).collect())
    } else {
        Alphabet((0..n as u32).filter_map(|i| char::from_u32(0x100 + i)).collect())
    }
}

/// Symmetric matrix with i.i.d. uniform [0, 1) upper-triangle entries.
pub fn random_uniform_matrix(n: usize, seed: u64) -> Result<DistanceMatrix> {
    check_size(n)?;
    Ok(random_uniform_like(&index_alphabet(n), seed))
}

/// [`random_uniform_matrix`] labeled with an existing alphabet.
pub fn random_uniform_like(alphabet: &Alphabet, seed: u64) -> DistanceMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DistanceMatrix::from_upper(alphabet.clone(), true, |_, _| rng.gen::<f64>())
}

/// All off-diagonal entries equal to `value`.
pub fn homogeneous_matrix(n: usize, value: f64) -> Result<DistanceMatrix> {
    check_size(n)?;
    homogeneous_like(&index_alphabet(n), value)
}

/// [`homogeneous_matrix`] labeled with an existing alphabet.
pub fn homogeneous_like(alphabet: &Alphabet, value: f64) -> Result<DistanceMatrix> {
    if !(value > 0.0 && value.is_finite()) {
        return Err(Error::InvalidArgument(format!("homogeneous value must be positive, got {value}")));
    }
    Ok(DistanceMatrix::from_upper(alphabet.clone(), value <= 1.0, |_, _| value))
}

/// Randomly permutes the strict upper triangle, mirroring to keep symmetry.
pub fn shuffle_matrix(m: &DistanceMatrix, seed: u64) -> DistanceMatrix {
    let n = m.n();
    let mut upper: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    upper.shuffle(&mut rng);
    let mut it = upper.into_iter();
    DistanceMatrix::from_upper(m.alphabet.clone(), m.normalized, |_, _| it.next().unwrap_or(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_valid(m: &DistanceMatrix) {
        DistanceMatrix::new(m.alphabet.clone(), m.values.clone(), m.normalized).unwrap();
    }

    fn upper_sorted(m: &DistanceMatrix) -> Vec<f64> {
        let n = m.n();
        let mut v: Vec<f64> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).map(|(i, j)| m.get(i, j)).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    #[test]
    fn alphabet_rules() {
        assert_eq!(Alphabet::parse("abc").unwrap().chars(), &['A', 'B', 'C']);
        assert!(Alphabet::parse("aA").is_err());
        assert!(Alphabet::parse("").is_err());
        assert_eq!(Alphabet::default().len(), 26);
    }

    #[test]
    fn invalid_matrices_rejected() {
        let a = Alphabet::parse("AB").unwrap();
        assert!(DistanceMatrix::new(a.clone(), vec![0.0, 1.0, 2.0, 0.0], false).is_err());
        assert!(DistanceMatrix::new(a.clone(), vec![1.0, 1.0, 1.0, 0.0], false).is_err());
        assert!(DistanceMatrix::new(a.clone(), vec![0.0, -1.0, -1.0, 0.0], false).is_err());
        assert!(DistanceMatrix::new(a.clone(), vec![0.0, 2.0, 2.0, 0.0], true).is_err());
        assert!(DistanceMatrix::new(a, vec![0.0, 2.0, 2.0, 0.0], false).is_ok());
    }

    #[test]
    fn same_color_gives_zero_matrix() {
        let a = Alphabet::parse("ABCD").unwrap();
        let ann = ColorAnnotation::new("s", a, vec![RgbColor::new(10, 200, 30); 4]).unwrap();
        let m = color_distance_matrix(&ann, true);
        assert!(m.values().iter().all(|v| *v == 0.0));
        assert!(m.is_normalized());
    }

    #[test]
    fn white_black_white() {
        let a = Alphabet::parse("ABC").unwrap();
        let w = RgbColor::new(255, 255, 255);
        let k = RgbColor::new(0, 0, 0);
        let ann = ColorAnnotation::new("s", a, vec![w, k, w]).unwrap();
        let raw = color_distance_matrix(&ann, false);
        // skimage.color.deltaE_ciede2000 on the same Lab values gives 100.00000017602524
        assert!((raw.get(0, 1) - 100.0).abs() < 1e-5);
        assert_eq!(raw.get(0, 1), raw.get(1, 2));
        assert_eq!(raw.get(0, 2), 0.0);
        let norm = color_distance_matrix(&ann, true);
        assert_eq!((norm.get(0, 1), norm.get(1, 2), norm.get(0, 2)), (1.0, 1.0, 0.0));
    }

    #[test]
    fn random_annotations_satisfy_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let colors = (0..26).map(|_| RgbColor::new(rng.gen(), rng.gen(), rng.gen())).collect();
            let ann = ColorAnnotation::new("s", Alphabet::latin(), colors).unwrap();
            assert_valid(&color_distance_matrix(&ann, true));
            assert_valid(&color_distance_matrix(&ann, false));
        }
    }

    #[test]
    fn color_matrix_is_permutation_equivariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let colors: Vec<RgbColor> = (0..8).map(|_| RgbColor::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let a = Alphabet::parse("ABCDEFGH").unwrap();
        let ann = ColorAnnotation::new("s", a.clone(), colors.clone()).unwrap();
        let mut perm: Vec<usize> = (0..8).collect();
        perm.shuffle(&mut rng);
        let pa = Alphabet::new(perm.iter().map(|&p| a.chars()[p]).collect()).unwrap();
        let pann = ColorAnnotation::new("s", pa, perm.iter().map(|&p| colors[p]).collect()).unwrap();
        assert_eq!(color_distance_matrix(&pann, true), color_distance_matrix(&ann, true).permuted(&perm));
    }

    #[test]
    fn cosine_cases() {
        let a = Alphabet::parse("ABCD").unwrap();
        let e = EmbeddingMatrix::new(a, vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 3.0], vec![-1.0, 0.0]], "t")
            .unwrap();
        let m = cosine_distance_matrix(&e).unwrap();
        assert_eq!(m.get(0, 1), 0.0);
        assert_eq!(m.get(0, 2), 1.0);
        assert_eq!(m.get(0, 3), 2.0);
        assert!(!m.is_normalized());
        let z = EmbeddingMatrix::new(Alphabet::parse("AB").unwrap(), vec![vec![1.0], vec![0.0]], "t");
        assert!(matches!(z, Err(Error::ZeroVector('B'))));
    }

    #[test]
    fn averaging() {
        let a = Alphabet::parse("AB").unwrap();
        let m1 = DistanceMatrix::new(a.clone(), vec![0.0, 0.2, 0.2, 0.0], true).unwrap();
        let m2 = DistanceMatrix::new(a.clone(), vec![0.0, 0.4, 0.4, 0.0], true).unwrap();
        assert!((average_matrix(&[m1.clone(), m2.clone()]).unwrap().get(0, 1) - 0.3).abs() < 1e-15);
        assert_eq!(average_matrix(std::slice::from_ref(&m1)).unwrap(), m1);
        assert!(matches!(average_matrix(&[]), Err(Error::EmptyInput)));
        let other = DistanceMatrix::new(Alphabet::parse("AC").unwrap(), vec![0.0, 0.4, 0.4, 0.0], true).unwrap();
        assert!(matches!(average_matrix(&[m1, other]), Err(Error::AlphabetMismatch)));

        let r = random_uniform_matrix(10, 4).unwrap();
        let avg = average_matrix(&vec![r.clone(); 7]).unwrap();
        for (x, y) in avg.values().iter().zip(r.values()) {
            assert!((x - y).abs() < 1e-15);
        }
        let scaled = average_matrix(&[r.scaled(3.0), m2_like(&r).scaled(3.0)]).unwrap();
        let plain = average_matrix(&[r.clone(), m2_like(&r)]).unwrap().scaled(3.0);
        for (x, y) in scaled.values().iter().zip(plain.values()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    fn m2_like(m: &DistanceMatrix) -> DistanceMatrix {
        random_uniform_like(m.alphabet(), 99)
    }

    #[test]
    fn random_uniform_is_seeded() {
        let a = random_uniform_matrix(26, 7).unwrap();
        assert_eq!(a, random_uniform_matrix(26, 7).unwrap());
        assert_ne!(a, random_uniform_matrix(26, 8).unwrap());
        assert_valid(&a);
        assert!(random_uniform_matrix(1, 0).is_err());
    }

    #[test]
    fn random_uniform_mean() {
        // 10^4 draws of one fixed entry; the mean of U[0,1) is 1/2.
        let mean: f64 = (0..10_000).map(|s| random_uniform_matrix(4, s).unwrap().get(1, 3)).sum::<f64>() / 1e4;
        assert!((mean - 0.5).abs() < 0.02, "{mean}");
    }

    #[test]
    fn homogeneous() {
        let h = homogeneous_matrix(3, 1.0).unwrap();
        assert_eq!(h.values(), &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
        assert_valid(&h);
        let h = homogeneous_matrix(5, 4.0).unwrap().normalized_by_max();
        assert!((0..5).all(|i| (0..5).all(|j| h.get(i, j) == if i == j { 0.0 } else { 1.0 })));
        assert!(homogeneous_matrix(3, 0.0).is_err());
    }

    #[test]
    fn shuffling() {
        let m = random_uniform_matrix(12, 3).unwrap();
        let s = shuffle_matrix(&m, 5);
        assert_valid(&s);
        assert_eq!(upper_sorted(&s), upper_sorted(&m));
        assert_ne!(s, m);
        assert_eq!(s, shuffle_matrix(&m, 5));
        let two = random_uniform_matrix(2, 1).unwrap();
        assert_eq!(shuffle_matrix(&two, 9), two);
    }
}

//! File formats: annotation and embedding CSV ingestion, matrix/score/report
//! emission.
//!
//! * annotations: `subject_id,letter,hex`, one row per (subject, letter), hex `#RRGGBB`
//! * embeddings: `char,d0,...,d{k-1}`, one row per character; an optional
//!   first line `# tag: NAME` overrides the filename-derived source tag
//! * matrices: CSV with a label header row and a label first column

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::Serialize;

use crate::color::RgbColor;
use crate::distmat::{fold_case, Alphabet, ColorAnnotation, DistanceMatrix, EmbeddingMatrix};
use crate::error::{Error, Result};
use crate::netmetrics::NodeScores;
use crate::simtask::CorrelationReport;

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: display(path), line, msg: msg.into() }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(file))
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map_or(0, |p| p.line() as usize)
}

fn map_csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

/// Single character label, case-folded.
fn parse_letter(path: &Path, line: usize, field: &str) -> Result<char> {
    let mut chars = field.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) => Ok(fold_case(c)),
        _ => Err(parse_err(path, line, format!("expected a single character, found {field:?}"))),
    }
}

/// Reads every subject's annotation. Subjects appear in first-seen order and
/// must each cover the whole alphabet exactly once.
pub fn read_annotations(path: impl AsRef<Path>, alphabet: &Alphabet) -> Result<Vec<ColorAnnotation>> {
    let path = path.as_ref();
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| map_csv_err(path, e))?.clone();
    let expected = ["subject_id", "letter", "hex"];
    if headers.len() != 3 || headers.iter().zip(expected).any(|(h, e)| h != e) {
        return Err(parse_err(path, 1, format!("header must be {}", expected.join(","))));
    }

    let mut order: Vec<String> = Vec::new();
    let mut colors: HashMap<String, Vec<Option<RgbColor>>> = HashMap::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| map_csv_err(path, e))?;
        let line = record_line(&rec);
        if rec.len() != 3 {
            return Err(parse_err(path, line, format!("expected 3 fields, found {}", rec.len())));
        }
        let subject = rec[0].to_string();
        if subject.is_empty() {
            return Err(parse_err(path, line, "empty subject_id"));
        }
        let letter = parse_letter(path, line, &rec[1])?;
        let idx = alphabet
            .index_of(letter)
            .ok_or_else(|| parse_err(path, line, format!("letter {letter:?} is not in the alphabet")))?;
        let color = RgbColor::from_hex(&rec[2]).ok_or_else(|| Error::BadColor {
            path: display(path),
            line,
            value: rec[2].to_string(),
        })?;
        let slots = colors.entry(subject.clone()).or_insert_with(|| {
            order.push(subject.clone());
            vec![None; alphabet.len()]
        });
        if slots[idx].replace(color).is_some() {
            return Err(Error::DuplicateLetter { subject, letter });
        }
    }
    if order.is_empty() {
        return Err(parse_err(path, 1, "no annotation rows"));
    }
    order
        .into_iter()
        .map(|subject| {
            let slots = colors.remove(&subject).expect("subject recorded");
            let mut out = Vec::with_capacity(slots.len());
            for (c, slot) in alphabet.chars().iter().zip(slots) {
                out.push(slot.ok_or(Error::MissingLetter { subject: subject.clone(), letter: *c })?);
            }
            ColorAnnotation::new(subject, alphabet.clone(), out)
        })
        .collect()
}

pub fn write_annotations(path: impl AsRef<Path>, annotations: &[ColorAnnotation]) -> Result<()> {
    let mut out = String::from("subject_id,letter,hex\n");
    for ann in annotations {
        for (c, color) in ann.alphabet.chars().iter().zip(ann.colors()) {
            out.push_str(&format!("{},{},{}\n", ann.subject_id, c, color.to_hex()));
        }
    }
    write_atomic(path, out.as_bytes())
}

/// Source tag declared on the first line as `# tag: NAME`, if any.
fn declared_tag(path: &Path) -> Result<Option<String>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut first = String::new();
    BufReader::new(file).read_line(&mut first).map_err(|e| Error::io(path, e))?;
    Ok(first
        .trim()
        .strip_prefix('#')
        .and_then(|rest| rest.trim().strip_prefix("tag:"))
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty()))
}

/// Reads one embedding matrix. Rows for characters outside the alphabet are
/// ignored; every alphabet character must appear exactly once.
pub fn read_embeddings(path: impl AsRef<Path>, alphabet: &Alphabet) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let tag = match declared_tag(path)? {
        Some(t) => t,
        None => path.file_stem().map_or_else(|| "model".to_string(), |s| s.to_string_lossy().into_owned()),
    };
    let mut reader = csv_reader(path)?;
    let headers = reader.headers().map_err(|e| map_csv_err(path, e))?.clone();
    if headers.len() < 2 || &headers[0] != "char" {
        return Err(parse_err(path, 1, "header must be char,d0,...,d{k-1}"));
    }
    let dim = headers.len() - 1;

    let mut vectors: Vec<Option<Vec<f64>>> = vec![None; alphabet.len()];
    for rec in reader.records() {
        let rec = rec.map_err(|e| map_csv_err(path, e))?;
        let line = record_line(&rec);
        let letter = parse_letter(path, line, &rec[0])?;
        if rec.len() - 1 != dim {
            return Err(Error::DimensionMismatch { path: display(path), line, expected: dim, found: rec.len() - 1 });
        }
        let Some(idx) = alphabet.index_of(letter) else { continue };
        let values = rec
            .iter()
            .skip(1)
            .map(|f| f.parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| parse_err(path, line, "non-numeric vector component"))?;
        if vectors[idx].is_some() {
            return Err(parse_err(path, line, format!("duplicate row for {letter:?}")));
        }
        if values.iter().all(|v| *v == 0.0) {
            return Err(Error::ZeroVector(letter));
        }
        vectors[idx] = Some(values);
    }
    let mut out = Vec::with_capacity(alphabet.len());
    for (c, v) in alphabet.chars().iter().zip(vectors) {
        out.push(v.ok_or(Error::MissingLetter { subject: tag.clone(), letter: *c })?);
    }
    EmbeddingMatrix::new(alphabet.clone(), out, tag)
}

pub fn write_embeddings(path: impl AsRef<Path>, embeddings: &EmbeddingMatrix) -> Result<()> {
    let mut out = format!("# tag: {}\nchar", embeddings.source_tag);
    for k in 0..embeddings.dim() {
        out.push_str(&format!(",d{k}"));
    }
    out.push('\n');
    for (c, v) in embeddings.alphabet.chars().iter().zip(embeddings.vectors()) {
        out.push(*c);
        for x in v {
            out.push_str(&format!(",{x}"));
        }
        out.push('\n');
    }
    write_atomic(path, out.as_bytes())
}

/// Labeled square CSV. Values use Rust's shortest round-trip formatting.
pub fn matrix_csv(m: &DistanceMatrix) -> String {
    let chars = m.alphabet().chars();
    let mut out = String::new();
    for c in chars {
        out.push(',');
        out.push(*c);
    }
    out.push('\n');
    for (i, c) in chars.iter().enumerate() {
        out.push(*c);
        for v in m.row(i) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: impl AsRef<Path>, m: &DistanceMatrix) -> Result<()> {
    write_atomic(path, matrix_csv(m).as_bytes())
}

/// Reads a labeled matrix. It is flagged normalized when every entry is at most 1.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<DistanceMatrix> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(file);
    let mut rows = reader.records();
    let header =
        rows.next().ok_or_else(|| parse_err(path, 1, "empty matrix file"))?.map_err(|e| map_csv_err(path, e))?;
    let labels = header.iter().skip(1).map(|f| parse_letter(path, 1, f)).collect::<Result<Vec<char>>>()?;
    let alphabet = Alphabet::new(labels).map_err(|e| parse_err(path, 1, e.to_string()))?;
    let n = alphabet.len();
    let mut values = Vec::with_capacity(n * n);
    for (i, rec) in rows.enumerate() {
        let rec = rec.map_err(|e| map_csv_err(path, e))?;
        let line = i + 2;
        if i >= n {
            return Err(parse_err(path, line, "more rows than labels"));
        }
        if rec.len() != n + 1 || parse_letter(path, line, &rec[0])? != alphabet.chars()[i] {
            return Err(parse_err(path, line, "row label or width does not match the header"));
        }
        for f in rec.iter().skip(1) {
            values.push(f.parse::<f64>().map_err(|_| parse_err(path, line, format!("bad number {f:?}")))?);
        }
    }
    if values.len() != n * n {
        return Err(parse_err(path, n + 1, "fewer rows than labels"));
    }
    let normalized = values.iter().all(|v| *v <= 1.0);
    DistanceMatrix::new(alphabet, values, normalized).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn scores_csv(scores: &NodeScores) -> String {
    let mut out = String::from("character,value\n");
    for (c, v) in scores.alphabet.chars().iter().zip(&scores.values) {
        out.push_str(&format!("{c},{v}\n"));
    }
    out
}

pub fn correlation_long_csv(report: &CorrelationReport) -> String {
    let mut out = String::from("source_a,source_b,r\n");
    for (a, b, r) in report.long_form() {
        out.push_str(&format!("{a},{b},{r}\n"));
    }
    out
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path.file_name().map_or_else(|| "out".into(), |n| n.to_string_lossy().into_owned());
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(Error::io(path, e));
    }
    Ok(())
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Serialize(e.to_string()))?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

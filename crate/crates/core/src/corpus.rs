//! Loading and aligning transcripts, labels and feature tables.
//!
//! File conventions:
//!
//! * transcripts: `<dir>/<id>.txt`, UTF-8, id = file stem (NFC-normalized, case-sensitive)
//! * labels: CSV with header exactly `id,label`, labels `ad`/`cn` in any case
//! * features: CSV with header `id,<name>,...`; cells are decimal numbers or `NA`

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// Column count of an eGeMAPS functional table.
pub const EGEMAPS_WIDTH: usize = 88;
/// Column count of a sentence-embedding table.
pub const EMBEDDING_WIDTH: usize = 768;
/// Cell marker for a missing (undefined) value.
pub const MISSING: &str = "NA";

/// Binary diagnosis label. `Ad` is the positive class throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Ad,
    Cn,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Ad, Label::Cn];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Ad => "ad",
            Label::Cn => "cn",
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Ad
    }

    /// `+1.0` for `ad`, `-1.0` for `cn`.
    pub fn sign(self) -> f64 {
        if self.is_positive() {
            1.0
        } else {
            -1.0
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Ad => Label::Cn,
            Label::Cn => Label::Ad,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ad" => Ok(Label::Ad),
            "cn" => Ok(Label::Cn),
            other => Err(Error::Schema(format!("unknown label {other:?} (expected ad or cn)"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    pub id: String,
    pub text: String,
}

/// Documents ordered lexicographically by id, ids unique.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DocumentSet {
    docs: Vec<Document>,
}

impl DocumentSet {
    pub fn new(mut docs: Vec<Document>) -> Result<Self> {
        docs.sort_by(|a, b| a.id.cmp(&b.id));
        for pair in docs.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Schema(format!("duplicate document id {}", pair[0].id)));
            }
        }
        if let Some(d) = docs.iter().find(|d| d.id.is_empty()) {
            return Err(Error::Schema(format!("empty document id (text {:?})", d.text)));
        }
        Ok(Self { docs })
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Document> {
        self.docs.iter()
    }

    pub fn ids(&self) -> Vec<&str> {
        self.docs.iter().map(|d| d.id.as_str()).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.docs
            .binary_search_by(|d| d.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.docs[i])
    }

    pub fn as_slice(&self) -> &[Document] {
        &self.docs
    }
}

/// Options for [`load_transcripts`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TranscriptOptions {
    pub allow_empty: bool,
}

/// Load every `*.txt` file (extension matched case-insensitively) in `dir`.
pub fn load_transcripts(dir: &Path, opts: TranscriptOptions) -> Result<DocumentSet> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let is_txt = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case("txt"));
        if is_txt && path.is_file() {
            paths.push(path);
        }
    }
    paths.sort();

    let mut seen: BTreeMap<String, std::path::PathBuf> = BTreeMap::new();
    let mut docs = Vec::with_capacity(paths.len());
    for path in paths {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| Error::load(&path, "file name is not valid UTF-8"))?;
        let id: String = stem.nfc().collect();
        if id.is_empty() {
            return Err(Error::load(&path, "empty subject id"));
        }
        if let Some(prev) = seen.get(&id) {
            return Err(Error::load(
                &path,
                format!("duplicate subject id {id:?} (also {})", prev.display()),
            ));
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let text = String::from_utf8(bytes)
            .map_err(|e| Error::load(&path, format!("invalid UTF-8: {e}")))?;
        if text.trim().is_empty() && !opts.allow_empty {
            return Err(Error::load(&path, "empty transcript"));
        }
        seen.insert(id.clone(), path);
        docs.push(Document { id, text });
    }
    if docs.is_empty() {
        log::warn!("no transcripts found in {}", dir.display());
    }
    DocumentSet::new(docs)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabelMap {
    entries: BTreeMap<String, Label>,
}

impl LabelMap {
    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Label)>,
        S: Into<String>,
    {
        let mut entries = BTreeMap::new();
        for (id, label) in pairs {
            let id = id.into();
            if entries.insert(id.clone(), label).is_some() {
                return Err(Error::Schema(format!("duplicate label id {id}")));
            }
        }
        Ok(Self { entries })
    }

    pub fn get(&self, id: &str) -> Option<Label> {
        self.entries.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Label)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn csv_reader(path: &Path) -> Result<csv::Reader<fs::File>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(file))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::load(path, e.to_string())
}

pub fn load_labels(path: &Path) -> Result<LabelMap> {
    let mut rdr = csv_reader(path)?;
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(path, e))?,
        None => return Err(Error::load(path, "missing header `id,label`")),
    };
    if header.len() != 2 || &header[0] != "id" || &header[1] != "label" {
        return Err(Error::load(path, "missing header `id,label`"));
    }
    let mut entries = BTreeMap::new();
    for (line, rec) in records.enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        if rec.len() != 2 {
            return Err(Error::load(path, format!("line {}: expected 2 fields", line + 2)));
        }
        let id: String = rec[0].nfc().collect();
        let label = rec[1].parse::<Label>().map_err(|_| {
            Error::load(path, format!("line {}: unknown label {:?}", line + 2, &rec[1]))
        })?;
        if entries.insert(id.clone(), label).is_some() {
            return Err(Error::load(path, format!("duplicate id {id}")));
        }
    }
    Ok(LabelMap { entries })
}

/// Dense row-major feature matrix with named rows and columns.
///
/// Missing values are stored as `NaN` and serialized as `NA`; any other
/// non-finite value is rejected at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    ids: Vec<String>,
    columns: Vec<String>,
    values: Vec<f64>,
}

impl FeatureTable {
    pub fn new(ids: Vec<String>, columns: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if values.len() != ids.len() * columns.len() {
            return Err(Error::Schema(format!(
                "value count {} does not match {} rows x {} columns",
                values.len(),
                ids.len(),
                columns.len()
            )));
        }
        let mut names = HashSet::new();
        for c in &columns {
            if !names.insert(c.as_str()) {
                return Err(Error::Schema(format!("duplicate column name {c}")));
            }
        }
        if let Some(i) = values.iter().position(|v| v.is_infinite()) {
            let (r, c) = (i / columns.len(), i % columns.len());
            return Err(Error::Schema(format!(
                "non-finite value at row {} column {}",
                ids[r], columns[c]
            )));
        }
        Ok(Self {
            ids,
            columns,
            values,
        })
    }

    pub fn from_rows(ids: Vec<String>, columns: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        for (id, row) in ids.iter().zip(&rows) {
            if row.len() != columns.len() {
                return Err(Error::Schema(format!(
                    "row {id} has {} values, expected {}",
                    row.len(),
                    columns.len()
                )));
            }
        }
        if rows.len() != ids.len() {
            return Err(Error::Schema(format!(
                "{} rows for {} ids",
                rows.len(),
                ids.len()
            )));
        }
        Self::new(ids, columns, rows.concat())
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let p = self.n_cols();
        &self.values[i * p..(i + 1) * p]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        self.rows().map(|r| r[col]).collect()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn has_missing(&self) -> bool {
        self.values.iter().any(|v| v.is_nan())
    }

    /// Row subset in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureTable {
        let mut values = Vec::with_capacity(indices.len() * self.n_cols());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureTable {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            columns: self.columns.clone(),
            values,
        }
    }

    /// Column subset in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> FeatureTable {
        let mut values = Vec::with_capacity(indices.len() * self.n_rows());
        for row in self.rows() {
            values.extend(indices.iter().map(|&j| row[j]));
        }
        FeatureTable {
            ids: self.ids.clone(),
            columns: indices.iter().map(|&j| self.columns[j].clone()).collect(),
            values,
        }
    }

    /// Same values with every column name prefixed by `prefix`.
    pub fn with_prefix(&self, prefix: &str) -> FeatureTable {
        FeatureTable {
            ids: self.ids.clone(),
            columns: self.columns.iter().map(|c| format!("{prefix}{c}")).collect(),
            values: self.values.clone(),
        }
    }

    /// Map every value through `f`, keeping names.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> FeatureTable {
        let p = self.n_cols().max(1);
        FeatureTable {
            ids: self.ids.clone(),
            columns: self.columns.clone(),
            values: self
                .values
                .iter()
                .enumerate()
                .map(|(i, &v)| f(i % p, v))
                .collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().from_writer(out);
        let header = std::iter::once("id").chain(self.columns.iter().map(String::as_str));
        w.write_record(header)
            .map_err(|e| Error::Schema(e.to_string()))?;
        let mut record = Vec::with_capacity(self.n_cols() + 1);
        for (id, row) in self.ids.iter().zip(self.rows()) {
            record.clear();
            record.push(id.clone());
            record.extend(row.iter().map(|v| format_value(*v)));
            w.write_record(&record)
                .map_err(|e| Error::Schema(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Shortest round-trip decimal form, `NA` for missing.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        MISSING.to_string()
    } else {
        format!("{v}")
    }
}

fn parse_cell(cell: &str) -> Option<f64> {
    if cell == MISSING {
        return Some(f64::NAN);
    }
    // Rust's float parser also accepts "inf"/"nan" spellings; those are rejected here.
    if !cell
        .bytes()
        .all(|b| b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
    {
        return None;
    }
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Load a feature CSV; `expected_width` checks the feature column count.
pub fn load_feature_table(path: &Path, expected_width: Option<usize>) -> Result<FeatureTable> {
    let mut rdr = csv_reader(path)?;
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_err(path, e))?,
        None => return Err(Error::load(path, "missing header row")),
    };
    if header.is_empty() || &header[0] != "id" {
        return Err(Error::load(path, "header must start with `id`"));
    }
    let columns: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    if let Some(w) = expected_width {
        if columns.len() != w {
            return Err(Error::load(
                path,
                format!("expected {w} feature columns, found {}", columns.len()),
            ));
        }
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    let mut seen = HashSet::new();
    for rec in records {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let id: String = rec[0].nfc().collect();
        if id.is_empty() {
            return Err(Error::load(path, "empty id"));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::load(path, format!("duplicate id {id}")));
        }
        if rec.len() != columns.len() + 1 {
            return Err(Error::load(
                path,
                format!(
                    "row {id}: {} values, expected {}",
                    rec.len() - 1,
                    columns.len()
                ),
            ));
        }
        for (cell, name) in rec.iter().skip(1).zip(&columns) {
            let v = parse_cell(cell).ok_or_else(|| {
                Error::load(
                    path,
                    format!("row {id} column {name}: not a finite number: {cell:?}"),
                )
            })?;
            values.push(v);
        }
        ids.push(id);
    }
    FeatureTable::new(ids, columns, values).map_err(|e| Error::load(path, e.to_string()))
}

/// Feature table joined with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub table: FeatureTable,
    pub labels: Vec<Label>,
}

impl Dataset {
    pub fn new(table: FeatureTable, labels: Vec<Label>) -> Result<Self> {
        if table.n_rows() != labels.len() {
            return Err(Error::Schema(format!(
                "{} labels for {} rows",
                labels.len(),
                table.n_rows()
            )));
        }
        Ok(Self { table, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.table.n_cols()
    }

    pub fn class_count(&self, label: Label) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    /// Errors unless both classes are present.
    pub fn require_both_classes(&self) -> Result<()> {
        require_both_classes(&self.labels)
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            table: self.table.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }
}

pub(crate) fn require_both_classes(labels: &[Label]) -> Result<()> {
    for class in Label::ALL {
        if !labels.contains(&class) {
            return Err(Error::InvalidArgument(format!(
                "training data has no rows of class {class}"
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AlignMode {
    #[default]
    Strict,
    Lenient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aligned {
    pub dataset: Dataset,
    /// Table ids without a label (lenient mode only).
    pub dropped: Vec<String>,
}

/// Join a table with labels, preserving table row order.
pub fn align_dataset(table: &FeatureTable, labels: &LabelMap, mode: AlignMode) -> Result<Aligned> {
    let mut keep = Vec::new();
    let mut row_labels = Vec::new();
    let mut dropped = Vec::new();
    for (i, id) in table.ids().iter().enumerate() {
        match labels.get(id) {
            Some(l) => {
                keep.push(i);
                row_labels.push(l);
            }
            None if mode == AlignMode::Strict => {
                return Err(Error::Schema(format!("no label for id {id}")));
            }
            None => dropped.push(id.clone()),
        }
    }
    if keep.is_empty() {
        return Err(Error::Schema(
            "feature table and labels share no ids".to_string(),
        ));
    }
    if !dropped.is_empty() {
        log::warn!("dropped {} unlabeled rows: {}", dropped.len(), dropped.join(","));
    }
    Ok(Aligned {
        dataset: Dataset::new(table.select_rows(&keep), row_labels)?,
        dropped,
    })
}

/// Number of training rows for a class of size `n`; the odd row goes to training.
fn train_count(n: usize, fraction: f64) -> usize {
    let exact = fraction * n as f64;
    let rounded = exact.round();
    let n_train = if (exact - rounded).abs() < 1e-9 {
        rounded as usize
    } else {
        exact.ceil() as usize
    };
    n_train.clamp(1, n - 1)
}

/// Index-level train/test split. Both index lists are returned in ascending order.
pub fn split_indices(
    labels: &[Label],
    train_fraction: f64,
    seed: u64,
    stratified: bool,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    for class in Label::ALL {
        let n = labels.iter().filter(|&&l| l == class).count();
        if n < 2 {
            return Err(Error::InvalidArgument(format!(
                "class {class} has {n} rows; at least 2 are needed to split"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    let groups: Vec<Vec<usize>> = if stratified {
        Label::ALL
            .iter()
            .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
            .collect()
    } else {
        vec![(0..labels.len()).collect()]
    };
    for mut group in groups {
        group.shuffle(&mut rng);
        let k = train_count(group.len(), train_fraction);
        train.extend_from_slice(&group[..k]);
        test.extend_from_slice(&group[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Seeded train/test split, stratified by class.
pub fn split_train_test(
    dataset: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    let (train, test) = split_indices(&dataset.labels, train_fraction, seed, true)?;
    Ok((dataset.subset(&train), dataset.subset(&test)))
}

/// Ids present in both sets.
pub fn overlapping_ids<'a>(a: &'a [String], b: &[String]) -> Vec<&'a str> {
    let bs: BTreeSet<&str> = b.iter().map(String::as_str).collect();
    a.iter()
        .map(String::as_str)
        .filter(|id| bs.contains(id))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn transcripts_sorted_by_id() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "S002.txt", "a girl");
        write(dir.path(), "S001.txt", "the boy");
        write(dir.path(), "notes.md", "ignored");
        let set = load_transcripts(dir.path(), Default::default()).unwrap();
        assert_eq!(set.ids(), vec!["S001", "S002"]);
        assert_eq!(set.get("S001").unwrap().text, "the boy");
    }

    #[test]
    fn empty_directory_gives_empty_set() {
        let dir = tempfile::tempdir().unwrap();
        let set = load_transcripts(dir.path(), Default::default()).unwrap();
        assert!(set.is_empty());
    }

    #[test]
    fn extension_case_collision_is_duplicate() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "S001.txt", "one");
        write(dir.path(), "S001.TXT", "two");
        // Case-insensitive filesystems cannot hold both files.
        if fs::read_dir(dir.path()).unwrap().count() < 2 {
            return;
        }
        let err = load_transcripts(dir.path(), Default::default()).unwrap_err();
        assert!(err.to_string().contains("duplicate subject id"), "{err}");
    }

    #[test]
    fn ids_differing_in_case_are_distinct() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "s1.txt", "one");
        write(dir.path(), "S1.txt", "two");
        if fs::read_dir(dir.path()).unwrap().count() < 2 {
            return;
        }
        let set = load_transcripts(dir.path(), Default::default()).unwrap();
        assert_eq!(set.len(), 2);
    }

    #[test]
    fn invalid_utf8_names_file() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("bad.txt"), [0xff, 0xfe, 0x00]).unwrap();
        let err = load_transcripts(dir.path(), Default::default()).unwrap_err();
        assert!(err.to_string().contains("bad.txt"));
        assert!(err.to_string().contains("UTF-8"));
    }

    #[test]
    fn empty_transcript_needs_flag() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "S1.txt", "  \n");
        assert!(load_transcripts(dir.path(), Default::default()).is_err());
        let set = load_transcripts(dir.path(), TranscriptOptions { allow_empty: true }).unwrap();
        assert_eq!(set.len(), 1);
    }

    #[test]
    fn labels_normalize_case() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "labels.csv", "id,label\nS1,ad\nS2,cn\nS3,AD\n");
        let map = load_labels(&p).unwrap();
        assert_eq!(map.len(), 3);
        assert_eq!(map.get("S3"), Some(Label::Ad));
        assert_eq!(map.get("S2"), Some(Label::Cn));
    }

    #[test]
    fn labels_reject_unknown_duplicate_and_headerless() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "id,label\nS4,mci\n");
        assert!(load_labels(&p).unwrap_err().to_string().contains("unknown label"));
        let p = write(dir.path(), "b.csv", "id,label\nS4,ad\nS4,cn\n");
        assert!(load_labels(&p).unwrap_err().to_string().contains("duplicate"));
        let p = write(dir.path(), "c.csv", "S4,ad\n");
        assert!(load_labels(&p).unwrap_err().to_string().contains("header"));
    }

    fn numeric_csv(rows: usize, cols: usize, prefix: &str) -> String {
        let mut s = String::from("id");
        for j in 0..cols {
            s.push_str(&format!(",{prefix}{j}"));
        }
        s.push('\n');
        for i in 0..rows {
            s.push_str(&format!("S{}", i + 1));
            for j in 0..cols {
                s.push_str(&format!(",{}", (i * cols + j) as f64 * 0.5));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn feature_table_widths() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "eg.csv", &numeric_csv(2, 88, "f"));
        let t = load_feature_table(&p, Some(EGEMAPS_WIDTH)).unwrap();
        assert_eq!((t.n_rows(), t.n_cols()), (2, 88));
        assert_eq!(t.get(1, 3), (88 + 3) as f64 * 0.5);

        let p = write(dir.path(), "emb.csv", &numeric_csv(2, 768, "e"));
        let t = load_feature_table(&p, Some(EMBEDDING_WIDTH)).unwrap();
        assert_eq!(t.columns()[767], "e767");

        let p = write(dir.path(), "short.csv", &numeric_csv(2, 87, "f"));
        let err = load_feature_table(&p, Some(EGEMAPS_WIDTH)).unwrap_err();
        assert!(err.to_string().contains("expected 88"));
    }

    #[test]
    fn feature_table_bad_cells() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "a.csv", "id,F0mean,x\nS1,1,2\nS2,abc,3\n");
        let err = load_feature_table(&p, None).unwrap_err().to_string();
        assert!(err.contains("S2") && err.contains("F0mean"), "{err}");
        for bad in ["NaN", "inf", "-inf", "nan", "1e999"] {
            let p = write(dir.path(), "b.csv", &format!("id,a\nS1,{bad}\n"));
            assert!(load_feature_table(&p, None).is_err(), "{bad} accepted");
        }
        let p = write(dir.path(), "c.csv", "id,a\nS1,NA\n");
        assert!(load_feature_table(&p, None).unwrap().get(0, 0).is_nan());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let t = FeatureTable::from_rows(
            vec!["a".into(), "b".into()],
            vec!["x".into(), "y".into()],
            vec![vec![0.1 + 0.2, f64::NAN], vec![-1.0e-300, 123_456_789.123_456_79]],
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        t.save_csv(&p).unwrap();
        let back = load_feature_table(&p, Some(2)).unwrap();
        assert_eq!(back.ids(), t.ids());
        for (a, b) in back.values().iter().zip(t.values()) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }

    fn table(ids: &[&str]) -> FeatureTable {
        FeatureTable::from_rows(
            ids.iter().map(|s| s.to_string()).collect(),
            vec!["x".into()],
            ids.iter().enumerate().map(|(i, _)| vec![i as f64]).collect(),
        )
        .unwrap()
    }

    #[test]
    fn align_strict_and_lenient() {
        let t = table(&["A", "B"]);
        let both = LabelMap::from_pairs([("A", Label::Ad), ("B", Label::Cn)]).unwrap();
        let a = align_dataset(&t, &both, AlignMode::Strict).unwrap();
        assert_eq!(a.dataset.labels, vec![Label::Ad, Label::Cn]);
        assert_eq!(a.dataset.table.ids(), &["A", "B"]);

        let only_a = LabelMap::from_pairs([("A", Label::Ad)]).unwrap();
        let err = align_dataset(&t, &only_a, AlignMode::Strict).unwrap_err();
        assert!(err.to_string().contains('B'));
        let a = align_dataset(&t, &only_a, AlignMode::Lenient).unwrap();
        assert_eq!(a.dataset.len(), 1);
        assert_eq!(a.dropped, vec!["B".to_string()]);

        let none = LabelMap::from_pairs([("Z", Label::Ad)]).unwrap();
        assert!(align_dataset(&t, &none, AlignMode::Lenient).is_err());
    }

    fn labelled(n_ad: usize, n_cn: usize) -> Dataset {
        let ids: Vec<String> = (0..n_ad + n_cn).map(|i| format!("S{i:03}")).collect();
        let labels = (0..n_ad + n_cn)
            .map(|i| if i < n_ad { Label::Ad } else { Label::Cn })
            .collect();
        let rows = (0..n_ad + n_cn).map(|i| vec![i as f64]).collect();
        Dataset::new(FeatureTable::from_rows(ids, vec!["x".into()], rows).unwrap(), labels).unwrap()
    }

    #[test]
    fn split_counts() {
        let d = labelled(20, 20);
        let (tr, te) = split_train_test(&d, 0.7, 7).unwrap();
        assert_eq!((tr.class_count(Label::Ad), tr.class_count(Label::Cn)), (14, 14));
        assert_eq!((te.class_count(Label::Ad), te.class_count(Label::Cn)), (6, 6));

        let d = labelled(2, 2);
        let (tr, te) = split_train_test(&d, 0.5, 1).unwrap();
        assert_eq!((tr.len(), te.len()), (2, 2));
        assert_eq!(tr.class_count(Label::Ad), 1);

        assert!(split_train_test(&d, 1.1, 1).is_err());
        assert!(split_train_test(&labelled(1, 5), 0.5, 1).is_err());
    }

    #[test]
    fn odd_remainder_goes_to_training() {
        let d = labelled(5, 5);
        let (tr, _) = split_train_test(&d, 0.5, 3).unwrap();
        assert_eq!(tr.class_count(Label::Ad), 3);
    }
}

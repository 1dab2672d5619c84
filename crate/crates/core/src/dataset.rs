//! Evaluation records with possibly-missing labels: CSV ingestion and
//! stratified fold partitioning.
//!
//! The truth channel (labels revealed only for harness evaluation) is kept
//! out of [`EvalRecord`] entirely: estimators work from the records and index
//! sets, while the held-out labels live in a private side channel reachable
//! only through the explicitly named truth accessors.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// One evaluation record as visible to estimators.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    /// Opaque identifier, preserved from the input.
    pub id: String,
    /// Model output in [0, 1].
    pub score: f64,
    /// Observed label; `None` marks a missing label.
    pub observed: Option<bool>,
}

/// Evaluation set with explicit known / missing index sets.
///
/// Immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct MaskedDataset {
    records: Vec<EvalRecord>,
    known: Vec<usize>,
    missing: Vec<usize>,
    /// Held-out labels, populated by masking generators or a `truth` CSV
    /// column. Consumed only by the harness; estimators never read it.
    truths: Vec<Option<bool>>,
}

/// Column-name mapping for CSV ingestion.
#[derive(Debug, Clone)]
pub struct CsvSchema {
    pub score: String,
    pub label: String,
    pub truth: String,
    pub id: String,
}

impl Default for CsvSchema {
    fn default() -> Self {
        CsvSchema {
            score: "score".into(),
            label: "label".into(),
            truth: "truth".into(),
            id: "id".into(),
        }
    }
}

fn parse_label(raw: &str, row: usize, column: &str) -> Result<Option<bool>> {
    let trimmed = raw.trim();
    if trimmed.is_empty() || trimmed.eq_ignore_ascii_case("na") {
        return Ok(None);
    }
    match trimmed {
        "0" => Ok(Some(false)),
        "1" => Ok(Some(true)),
        other => Err(Error::MalformedRow {
            row,
            column: column.to_string(),
            message: format!("label '{other}' is not 0, 1, or NA"),
        }),
    }
}

impl MaskedDataset {
    /// Build a dataset from estimator-visible records plus the truth channel.
    pub fn new(records: Vec<EvalRecord>, truths: Vec<Option<bool>>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if truths.len() != records.len() {
            return Err(Error::LengthMismatch {
                left: records.len(),
                right: truths.len(),
            });
        }
        for (row, rec) in records.iter().enumerate() {
            if !(rec.score >= 0.0 && rec.score <= 1.0) {
                return Err(Error::ScoreOutOfRange {
                    row: row + 1,
                    value: rec.score,
                });
            }
        }
        let mut known = Vec::new();
        let mut missing = Vec::new();
        for (i, rec) in records.iter().enumerate() {
            match rec.observed {
                Some(_) => known.push(i),
                None => missing.push(i),
            }
        }
        Ok(MaskedDataset {
            records,
            known,
            missing,
            truths,
        })
    }

    /// Convenience constructor used heavily by tests and the harness.
    pub fn from_parts(
        scores: Vec<f64>,
        observed: Vec<Option<bool>>,
        truths: Vec<Option<bool>>,
    ) -> Result<Self> {
        if scores.len() != observed.len() {
            return Err(Error::LengthMismatch {
                left: scores.len(),
                right: observed.len(),
            });
        }
        let records = scores
            .into_iter()
            .zip(observed)
            .enumerate()
            .map(|(i, (score, observed))| EvalRecord {
                id: (i + 1).to_string(),
                score,
                observed,
            })
            .collect();
        MaskedDataset::new(records, truths)
    }

    /// Fully labeled dataset (no missing labels); truth mirrors the labels.
    pub fn fully_labeled(scores: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        let observed: Vec<Option<bool>> = labels.iter().copied().map(Some).collect();
        let truths = observed.clone();
        MaskedDataset::from_parts(scores, observed, truths)
    }

    pub fn records(&self) -> &[EvalRecord] {
        &self.records
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    /// Number of known labels.
    pub fn k(&self) -> usize {
        self.known.len()
    }

    pub fn known_indices(&self) -> &[usize] {
        &self.known
    }

    pub fn missing_indices(&self) -> &[usize] {
        &self.missing
    }

    pub fn score(&self, i: usize) -> f64 {
        self.records[i].score
    }

    pub fn scores(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.score).collect()
    }

    pub fn observed(&self, i: usize) -> Option<bool> {
        self.records[i].observed
    }

    /// Truth-channel label for record `i`. Harness use only.
    pub fn truth(&self, i: usize) -> Option<bool> {
        self.truths[i]
    }

    /// The whole truth channel. Harness use only.
    pub fn truths(&self) -> &[Option<bool>] {
        &self.truths
    }

    /// Copy with the truth channel emptied. Used to assert that estimators
    /// produce identical results without it.
    pub fn without_truths(&self) -> Self {
        MaskedDataset {
            records: self.records.clone(),
            known: self.known.clone(),
            missing: self.missing.clone(),
            truths: vec![None; self.records.len()],
        }
    }

    /// Write records back out as CSV (id, score, label, truth).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["id", "score", "label", "truth"])?;
        for (rec, truth) in self.records.iter().zip(&self.truths) {
            let label = match rec.observed {
                Some(true) => "1".to_string(),
                Some(false) => "0".to_string(),
                None => "NA".to_string(),
            };
            let truth = match truth {
                Some(true) => "1".to_string(),
                Some(false) => "0".to_string(),
                None => String::new(),
            };
            w.write_record([rec.id.clone(), format!("{}", rec.score), label, truth])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Load a dataset from CSV. Required columns: score and label; optional:
/// truth and id. A label is missing when the cell is empty or reads `NA`
/// (case-insensitive). Row order is preserved.
pub fn load_dataset(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<MaskedDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let score_col = find(&schema.score).ok_or_else(|| Error::MalformedRow {
        row: 0,
        column: schema.score.clone(),
        message: "column not found in header".into(),
    })?;
    let label_col = find(&schema.label).ok_or_else(|| Error::MalformedRow {
        row: 0,
        column: schema.label.clone(),
        message: "column not found in header".into(),
    })?;
    let truth_col = find(&schema.truth);
    let id_col = find(&schema.id);

    let mut records = Vec::new();
    let mut truths = Vec::new();
    for (idx, row) in reader.records().enumerate() {
        let row_no = idx + 1;
        let row = row?;
        let raw_score = row.get(score_col).unwrap_or_default();
        let score: f64 = raw_score.parse().map_err(|_| Error::MalformedRow {
            row: row_no,
            column: schema.score.clone(),
            message: format!("score '{raw_score}' is not a number"),
        })?;
        if !(score >= 0.0 && score <= 1.0) {
            return Err(Error::ScoreOutOfRange {
                row: row_no,
                value: score,
            });
        }
        let observed = parse_label(row.get(label_col).unwrap_or_default(), row_no, &schema.label)?;
        let truth = match truth_col {
            Some(col) => parse_label(row.get(col).unwrap_or_default(), row_no, &schema.truth)?,
            None => None,
        };
        let id = match id_col {
            Some(col) => {
                let raw = row.get(col).unwrap_or_default();
                if raw.is_empty() {
                    row_no.to_string()
                } else {
                    raw.to_string()
                }
            }
            None => row_no.to_string(),
        };
        records.push(EvalRecord {
            id,
            score,
            observed,
        });
        truths.push(truth);
    }
    MaskedDataset::new(records, truths)
}

/// Partition `labels` into `folds` stratified folds.
///
/// Positives and negatives are shuffled separately (seeded) and dealt
/// round-robin, so per-fold positive counts differ by at most one and the
/// partition is deterministic for a fixed seed.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 {
        return Err(Error::invalid(format!("folds must be >= 2, got {folds}")));
    }
    let mut pos: Vec<usize> = Vec::new();
    let mut neg: Vec<usize> = Vec::new();
    for (i, &label) in labels.iter().enumerate() {
        if label {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    for class in [&pos, &neg] {
        if class.len() < folds {
            return Err(Error::ClassTooSmall {
                members: class.len(),
                folds,
            });
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pos.shuffle(&mut rng);
    neg.shuffle(&mut rng);

    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); folds];
    for (i, idx) in pos.into_iter().chain(neg).enumerate() {
        parts[i % folds].push(idx);
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    Ok(parts)
}

/// Check that `parts` is a disjoint, exhaustive partition of `0..n`.
pub fn is_partition(parts: &[Vec<usize>], n: usize) -> bool {
    let mut seen = BTreeSet::new();
    for part in parts {
        for &i in part {
            if i >= n || !seen.insert(i) {
                return false;
            }
        }
    }
    seen.len() == n
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write as _;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn load_three_rows_with_one_missing() {
        let f = write_temp("score,label\n0.9,1\n0.5,NA\n0.2,0\n");
        let data = load_dataset(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(data.n(), 3);
        assert_eq!(data.k(), 2);
        assert_eq!(data.missing_indices(), &[1]);
        assert_eq!(data.observed(0), Some(true));
        assert_eq!(data.observed(2), Some(false));
    }

    #[test]
    fn missing_marker_is_case_insensitive_or_empty() {
        let f = write_temp("score,label\n0.1,na\n0.2,\n0.3,Na\n0.4,1\n");
        let data = load_dataset(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(data.missing_indices(), &[0, 1, 2]);
    }

    #[test]
    fn empty_file_is_an_error() {
        let f = write_temp("score,label\n");
        match load_dataset(f.path(), &CsvSchema::default()) {
            Err(Error::EmptyDataset) => {}
            other => panic!("expected EmptyDataset, got {other:?}"),
        }
    }

    #[test]
    fn score_out_of_range_names_the_row() {
        let f = write_temp("score,label\n0.4,1\n1.7,0\n");
        match load_dataset(f.path(), &CsvSchema::default()) {
            Err(Error::ScoreOutOfRange { row: 2, value }) => {
                assert!((value - 1.7).abs() < 1e-12)
            }
            other => panic!("expected ScoreOutOfRange, got {other:?}"),
        }
    }

    #[test]
    fn malformed_label_names_row_and_column() {
        let f = write_temp("score,label\n0.4,2\n");
        match load_dataset(f.path(), &CsvSchema::default()) {
            Err(Error::MalformedRow { row: 1, column, .. }) => assert_eq!(column, "label"),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn truth_column_feeds_the_truth_channel_only() {
        let f = write_temp("score,label,truth\n0.9,NA,1\n0.5,0,0\n");
        let data = load_dataset(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(data.truth(0), Some(true));
        assert_eq!(data.observed(0), None);
        assert_eq!(data.truth(1), Some(false));
    }

    #[test]
    fn csv_round_trip_preserves_rows() {
        let f = write_temp("score,label,truth\n0.9,1,1\n0.5,NA,0\n0.25,0,\n");
        let data = load_dataset(f.path(), &CsvSchema::default()).unwrap();
        let mut out = Vec::new();
        data.write_csv(&mut out).unwrap();
        let g = write_temp(std::str::from_utf8(&out).unwrap());
        let reloaded = load_dataset(g.path(), &CsvSchema::default()).unwrap();
        assert_eq!(data.records(), reloaded.records());
        assert_eq!(data.truths(), reloaded.truths());
    }

    #[test]
    fn folds_exact_divisibility() {
        // 100 records, 40 positive, 10 folds -> 4 positives and 6 negatives each.
        let labels: Vec<bool> = (0..100).map(|i| i < 40).collect();
        let parts = stratified_folds(&labels, 10, 3).unwrap();
        assert!(is_partition(&parts, 100));
        for part in &parts {
            assert_eq!(part.len(), 10);
            let pos = part.iter().filter(|&&i| labels[i]).count();
            assert_eq!(pos, 4);
        }
    }

    #[test]
    fn folds_reject_tiny_class() {
        let labels: Vec<bool> = (0..10).map(|i| i == 0).collect();
        match stratified_folds(&labels, 10, 0) {
            Err(Error::ClassTooSmall { members: 1, folds: 10 }) => {}
            other => panic!("expected ClassTooSmall, got {other:?}"),
        }
    }

    #[test]
    fn folds_deterministic_per_seed() {
        let labels: Vec<bool> = (0..53).map(|i| i % 3 == 0).collect();
        let a = stratified_folds(&labels, 5, 42).unwrap();
        let b = stratified_folds(&labels, 5, 42).unwrap();
        let c = stratified_folds(&labels, 5, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn stratification_within_one_of_proportional() {
        let labels: Vec<bool> = (0..103).map(|i| i % 4 == 0).collect();
        let total_pos = labels.iter().filter(|&&b| b).count();
        let parts = stratified_folds(&labels, 7, 9).unwrap();
        assert!(is_partition(&parts, labels.len()));
        for part in &parts {
            let pos = part.iter().filter(|&&i| labels[i]).count() as f64;
            let expect = part.len() as f64 * total_pos as f64 / labels.len() as f64;
            assert!((pos - expect).abs() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn truth_channel_strip_is_total() {
        let data = MaskedDataset::from_parts(
            vec![0.2, 0.8],
            vec![Some(true), None],
            vec![Some(true), Some(false)],
        )
        .unwrap();
        let stripped = data.without_truths();
        assert_eq!(stripped.records(), data.records());
        assert!(stripped.truths().iter().all(|t| t.is_none()));
    }
}

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::{FfError, Result};

/// One CSV row. List-valued columns are `;`-separated; accuracies are
/// percentages. A failed run keeps its config columns and fills `error`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub dataset: String,
    pub fraction: String,
    pub seed: u64,
    pub unlabeled_mode: String,
    pub arch: String,
    pub ensemble_types: String,
    pub alpha: f64,
    pub keep_fraction: f64,
    pub stage_widths: String,
    pub labeled_count: usize,
    pub unlabeled_count: usize,
    /// Unlabeled rows used by each intermediate stage (first member).
    pub selected_unlabeled: String,
    /// Member specs, in fusion order.
    pub members: String,
    pub member_accuracies: String,
    /// The single network's accuracy, or the member mean for ensembles.
    pub accuracy: Option<f64>,
    pub ensemble_accuracy: Option<f64>,
    pub seconds: f64,
    pub error: String,
}

pub const METRICS_COLUMNS: [&str; 18] = [
    "dataset",
    "fraction",
    "seed",
    "unlabeled_mode",
    "arch",
    "ensemble_types",
    "alpha",
    "keep_fraction",
    "stage_widths",
    "labeled_count",
    "unlabeled_count",
    "selected_unlabeled",
    "members",
    "member_accuracies",
    "accuracy",
    "ensemble_accuracy",
    "seconds",
    "error",
];

pub(crate) fn join_list<T: ToString>(items: &[T]) -> String {
    items.iter().map(ToString::to_string).collect::<Vec<_>>().join(";")
}

impl MetricsRecord {
    /// Config columns filled in, results empty.
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        MetricsRecord {
            dataset: cfg.dataset.to_string(),
            fraction: cfg.fraction.to_string(),
            seed: cfg.seed,
            unlabeled_mode: cfg.unlabeled_mode.to_string(),
            arch: cfg.arch.to_string(),
            ensemble_types: cfg.get("ensemble_types").unwrap_or_default(),
            alpha: cfg.alpha,
            keep_fraction: cfg.keep_fraction,
            stage_widths: join_list(&cfg.stage_widths),
            labeled_count: 0,
            unlabeled_count: 0,
            selected_unlabeled: String::new(),
            members: String::new(),
            member_accuracies: String::new(),
            accuracy: None,
            ensemble_accuracy: None,
            seconds: 0.0,
            error: String::new(),
        }
    }

    pub fn failed(cfg: &ExperimentConfig, err: &FfError, seconds: f64) -> Self {
        MetricsRecord {
            error: err.to_string(),
            seconds,
            ..MetricsRecord::from_config(cfg)
        }
    }

    pub fn is_error(&self) -> bool {
        !self.error.is_empty()
    }

    /// Per-member accuracies parsed back from their column.
    pub fn member_accuracy_values(&self) -> Vec<f64> {
        self.member_accuracies
            .split(';')
            .filter_map(|s| s.trim().parse().ok())
            .collect()
    }
}

fn csv_err(e: csv::Error) -> FfError {
    FfError::format(format!("csv: {e}"))
}

/// Header plus one row per record (header only for no records).
pub fn write_records(w: impl Write, records: &[MetricsRecord]) -> Result<()> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    wr.write_record(METRICS_COLUMNS).map_err(csv_err)?;
    for r in records {
        wr.serialize(r).map_err(csv_err)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_records(r: impl Read) -> Result<Vec<MetricsRecord>> {
    let mut rd = csv::Reader::from_reader(r);
    let header = rd.headers().map_err(csv_err)?;
    if header.iter().ne(METRICS_COLUMNS) {
        return Err(FfError::format("metrics header does not match the schema"));
    }
    rd.deserialize().map(|r| r.map_err(csv_err)).collect()
}

pub fn write_records_file(path: impl AsRef<Path>, records: &[MetricsRecord]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_records(File::create(path)?, records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::DatasetKind;

    fn sample() -> MetricsRecord {
        MetricsRecord {
            labeled_count: 230,
            unlabeled_count: 59770,
            selected_unlabeled: "41839;41839".into(),
            members: "T1:FF-1:gray:gray".into(),
            member_accuracies: "91.37".into(),
            accuracy: Some(91.37),
            seconds: 12.5,
            error: "stage \"fit\", failed".into(),
            ..MetricsRecord::from_config(&ExperimentConfig::defaults(DatasetKind::Mnist))
        }
    }

    #[test]
    fn records_round_trip() {
        let recs = vec![sample(), MetricsRecord::from_config(&ExperimentConfig::defaults(DatasetKind::Svhn))];
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("dataset,fraction,seed,"));
        assert!(text.contains("\"stage \"\"fit\"\", failed\""));
        assert_eq!(read_records(buf.as_slice()).unwrap(), recs);
        assert_eq!(recs[0].member_accuracy_values(), vec![91.37]);
    }

    #[test]
    fn empty_is_header_only() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }
}

//! Versioned on-disk formats.
//!
//! Corpora, checkpoints and reports are single JSON documents; interaction
//! logs are JSON Lines with one trajectory per line. Checkpoints embed a
//! SHA-256 digest over a canonical byte encoding of the parameter arrays, so
//! loads reject damaged or hand-edited files. Serialization is fully
//! deterministic: re-running a pipeline with identical seeds reproduces
//! every artifact byte for byte.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use negrec_core::catalog::{Corpus, CorpusSpec};
use negrec_core::model::ModelParams;
use negrec_core::responsiveness::{ResponsivenessReport, SimilarityMode};
use negrec_core::simenv::Trajectory;
use negrec_core::train::{TrainConfig, TrainReport};

use crate::error::AppError;

pub const CORPUS_VERSION: u32 = 1;
pub const CHECKPOINT_VERSION: u32 = 1;
pub const REPORT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn read_to_string(path: &Path) -> Result<String, AppError> {
    fs::read_to_string(path).map_err(|e| AppError::io(path, e))
}

fn write_bytes(path: &Path, bytes: &[u8]) -> Result<(), AppError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| AppError::io(path, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| AppError::io(path, e))
}

fn parse_json<'a, T: Deserialize<'a>>(raw: &'a str, path: &Path) -> Result<T, AppError> {
    serde_json::from_str(raw).map_err(|e| AppError::Corrupt {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })
}

// ---------------------------------------------------------------- corpus --

#[derive(Debug, Serialize, Deserialize)]
pub struct CorpusDoc {
    pub version: u32,
    pub spec: CorpusSpec,
    pub corpus: Corpus,
}

pub fn save_corpus(path: &Path, spec: &CorpusSpec, corpus: &Corpus) -> Result<(), AppError> {
    let doc = CorpusDoc {
        version: CORPUS_VERSION,
        spec: spec.clone(),
        corpus: corpus.clone(),
    };
    write_bytes(path, serde_json::to_string(&doc).expect("corpus serializes").as_bytes())
}

pub fn load_corpus(path: &Path) -> Result<CorpusDoc, AppError> {
    let raw = read_to_string(path)?;
    let doc: CorpusDoc = parse_json(&raw, path)?;
    if doc.version != CORPUS_VERSION {
        return Err(AppError::Version {
            path: path.to_path_buf(),
            found: doc.version,
            expected: CORPUS_VERSION,
        });
    }
    doc.corpus.validate()?;
    Ok(doc)
}

// ------------------------------------------------------------------ logs --

pub fn save_logs(path: &Path, logs: &[Trajectory]) -> Result<(), AppError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| AppError::io(path, e))?;
        }
    }
    let file = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut out = BufWriter::new(file);
    for trajectory in logs {
        serde_json::to_writer(&mut out, trajectory).map_err(|e| AppError::Corrupt {
            path: path.to_path_buf(),
            detail: e.to_string(),
        })?;
        out.write_all(b"\n").map_err(|e| AppError::io(path, e))?;
    }
    out.flush().map_err(|e| AppError::io(path, e))
}

pub fn load_logs(path: &Path) -> Result<Vec<Trajectory>, AppError> {
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut logs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let trajectory: Trajectory = serde_json::from_str(&line).map_err(|e| AppError::Corrupt {
            path: path.to_path_buf(),
            detail: format!("line {}: {e}", lineno + 1),
        })?;
        logs.push(trajectory);
    }
    Ok(logs)
}

// ------------------------------------------------------------ checkpoint --

#[derive(Debug, Serialize, Deserialize)]
pub struct CheckpointDoc {
    pub version: u32,
    /// Name of the training variant that produced these parameters.
    pub variant: String,
    pub params: ModelParams,
    /// SHA-256 over the canonical encoding of dimensions and arrays.
    pub checksum: String,
}

/// Canonical byte encoding of everything the checksum must protect:
/// dimensions, feature switches, then every parameter array in block order,
/// row-major, little-endian f64 bits.
fn canonical_param_bytes(params: &ModelParams) -> Vec<u8> {
    let total: usize = params.blocks().iter().map(|(_, b)| b.len()).sum();
    let mut bytes = Vec::with_capacity(32 + total * 8);
    bytes.extend_from_slice(b"negrec-checkpoint-v1");
    bytes.extend_from_slice(&(params.num_items as u64).to_le_bytes());
    bytes.extend_from_slice(&(params.embed_dim as u64).to_le_bytes());
    bytes.extend_from_slice(&(params.max_history as u64).to_le_bytes());
    let flags = params.features.use_dislike_feature as u8
        | (params.features.use_dwell_feature as u8) << 1
        | (params.features.exclude_disliked_from_input as u8) << 2;
    bytes.push(flags);
    for (_, block) in params.blocks() {
        for &v in block {
            bytes.extend_from_slice(&v.to_bits().to_le_bytes());
        }
    }
    bytes
}

pub fn save_checkpoint(path: &Path, variant: &str, params: &ModelParams) -> Result<(), AppError> {
    let doc = CheckpointDoc {
        version: CHECKPOINT_VERSION,
        variant: variant.to_string(),
        params: params.clone(),
        checksum: sha256_hex(&canonical_param_bytes(params)),
    };
    write_bytes(
        path,
        serde_json::to_string(&doc).expect("checkpoint serializes").as_bytes(),
    )
}

pub fn load_checkpoint(path: &Path) -> Result<CheckpointDoc, AppError> {
    let raw = read_to_string(path)?;
    let doc: CheckpointDoc = parse_json(&raw, path)?;
    if doc.version != CHECKPOINT_VERSION {
        return Err(AppError::Version {
            path: path.to_path_buf(),
            found: doc.version,
            expected: CHECKPOINT_VERSION,
        });
    }
    doc.params.validate().map_err(|e| AppError::Dimension {
        detail: e.to_string(),
    })?;
    if sha256_hex(&canonical_param_bytes(&doc.params)) != doc.checksum {
        return Err(AppError::Checksum {
            path: path.to_path_buf(),
        });
    }
    Ok(doc)
}

/// Loads a checkpoint and rejects it when its item count does not match the
/// corpus it is being used with.
pub fn load_checkpoint_for_corpus(
    path: &Path,
    corpus_items: usize,
) -> Result<CheckpointDoc, AppError> {
    let doc = load_checkpoint(path)?;
    if doc.params.num_items != corpus_items {
        return Err(AppError::Dimension {
            detail: format!(
                "checkpoint covers {} items but the corpus has {corpus_items}",
                doc.params.num_items
            ),
        });
    }
    Ok(doc)
}

// --------------------------------------------------------- train reports --

#[derive(Debug, Serialize, Deserialize)]
pub struct TrainRunDoc {
    pub version: u32,
    pub config: TrainConfig,
    pub report: TrainReport,
    pub checkpoint: String,
}

pub fn save_train_run(path: &Path, doc: &TrainRunDoc) -> Result<(), AppError> {
    write_bytes(path, serde_json::to_string(doc).expect("report serializes").as_bytes())
}

/// Loss curve as CSV: epoch, total, pos_term, neg_term.
pub fn loss_curve_csv(report: &TrainReport) -> String {
    let mut out = String::from("epoch,total,pos_term,neg_term\n");
    for (epoch, loss) in report.epoch_losses.iter().enumerate() {
        out.push_str(&format!(
            "{epoch},{:.9},{:.9},{:.9}\n",
            loss.total, loss.positive, loss.negative
        ));
    }
    out
}

// -------------------------------------------------- responsiveness report --

#[derive(Debug, Serialize, Deserialize)]
pub struct ReportDoc {
    pub version: u32,
    pub variant: String,
    pub report: ResponsivenessReport,
}

pub fn save_report(path: &Path, doc: &ReportDoc) -> Result<(), AppError> {
    write_bytes(path, serde_json::to_string(doc).expect("report serializes").as_bytes())
}

pub fn load_report(path: &Path) -> Result<ReportDoc, AppError> {
    let raw = read_to_string(path)?;
    let doc: ReportDoc = parse_json(&raw, path)?;
    if doc.version != REPORT_VERSION {
        return Err(AppError::Version {
            path: path.to_path_buf(),
            found: doc.version,
            expected: REPORT_VERSION,
        });
    }
    Ok(doc)
}

pub const SUMMARY_HEADER: &str =
    "variant,mode,branch,mean_similarity,responsiveness,ci_lo,ci_hi\n";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.9}"))
}

/// CSV rows for one report: one row per (mode, branch).
pub fn report_csv_rows(doc: &ReportDoc) -> String {
    let mut out = String::new();
    for (mode, name) in [
        (SimilarityMode::Content, "content"),
        (SimilarityMode::Creator, "creator"),
    ] {
        let m = doc.report.mode(mode);
        for (branch, mean) in [
            ("baseline", m.mean_similarity_baseline),
            ("dislike", m.mean_similarity_counterfactual),
        ] {
            out.push_str(&format!(
                "{},{},{},{:.9},{},{},{}\n",
                doc.variant,
                name,
                branch,
                mean,
                opt(m.responsiveness),
                opt(m.ci_lower),
                opt(m.ci_upper),
            ));
        }
    }
    out
}

/// Report documents in `dir`, ordered by file name for reproducibility.
/// Manifests are skipped.
pub fn list_reports(dir: &Path) -> Result<Vec<std::path::PathBuf>, AppError> {
    let mut paths: Vec<_> = fs::read_dir(dir)
        .map_err(|e| AppError::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .filter(|p| !p.to_string_lossy().ends_with(".manifest.json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(AppError::Usage(format!(
            "no report documents found in {}",
            dir.display()
        )));
    }
    Ok(paths)
}

/// Merges report documents into one summary CSV.
pub fn merge_report_paths(paths: &[std::path::PathBuf]) -> Result<String, AppError> {
    let mut out = String::from(SUMMARY_HEADER);
    for path in paths {
        let doc = load_report(path)?;
        out.push_str(&report_csv_rows(&doc));
    }
    Ok(out)
}

pub fn write_text(path: &Path, content: &str) -> Result<(), AppError> {
    write_bytes(path, content.as_bytes())
}

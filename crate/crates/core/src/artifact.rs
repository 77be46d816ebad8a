//! Experiment artifacts: everything a fitted model needs to sample again.
//!
//! An artifact is a directory of plain-text files. The directory name embeds
//! the creation time; the file contents never do, so two runs with the same
//! seed and data produce byte-identical files. Checkpoints store IEEE-754
//! bit patterns in hex, so loading restores the exact weights.

use crate::config::{Dtype, PipelineConfig};
use crate::encode::numeric::NumericLayout;
use crate::encode::{ColumnLayout, TableCodec, TableLayout, Vocabulary};
use crate::error::{Error, Result};
use crate::ingest::{escape_field, schema_from_string, schema_to_string, unescape_field, TableSchema};
use crate::nnet::{ModelConfig, TransformerModel};
use crate::scalar::Scalar;
use crate::train::TrainReport;
use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const META_MAGIC: &str = "tabsynth-meta v1";
const VOCAB_MAGIC: &str = "tabsynth-vocab v1";
const LAYOUT_MAGIC: &str = "tabsynth-layout v1";
const CKPT_MAGIC: &str = "tabsynth-ckpt v1";

/// A model of either scalar width, as restored from a checkpoint.
#[derive(Debug, Clone)]
pub enum AnyModel {
    F32(TransformerModel<f32>),
    F64(TransformerModel<f64>),
}

impl AnyModel {
    pub fn dtype(&self) -> Dtype {
        match self {
            AnyModel::F32(_) => Dtype::F32,
            AnyModel::F64(_) => Dtype::F64,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        match self {
            AnyModel::F32(m) => &m.config,
            AnyModel::F64(m) => &m.config,
        }
    }
}

/// What a directory holds, per its metadata file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArtifactKind {
    Parent,
    Child,
}

/// A restored single-table model.
#[derive(Debug, Clone)]
pub struct ParentArtifact {
    pub config: PipelineConfig,
    pub seed: u64,
    pub codec: TableCodec,
    pub model: AnyModel,
}

/// A restored relational model: the frozen parent encoder plus the fitted
/// child decoder and both codecs.
#[derive(Debug, Clone)]
pub struct ChildArtifact {
    pub config: PipelineConfig,
    pub seed: u64,
    pub join_on: String,
    pub output_max_length: usize,
    pub parent_codec: TableCodec,
    pub encoder: AnyModel,
    pub child_codec: TableCodec,
    pub decoder: AnyModel,
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn corrupt(path: &Path, why: impl std::fmt::Display) -> Error {
    Error::Model(format!("artifact file {} is corrupt: {why}", path.display()))
}

/// Creates `<root>/id<UTC timestamp>` and returns its path. The timestamp
/// appears only in the directory name, never inside any file; on a name
/// collision the call retries with a fresh clock reading.
pub fn create_experiment_dir(root: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    loop {
        let stamp = chrono::Utc::now().format("id%Y%m%dT%H%M%S%3fZ").to_string();
        let dir = root.join(stamp);
        match std::fs::create_dir(&dir) {
            Ok(()) => return Ok(dir),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => continue,
            Err(e) => return Err(Error::io(&dir, e)),
        }
    }
}

// ---------------------------------------------------------------- metadata

fn meta_text(kind: ArtifactKind, seed: u64, dtype: Dtype, extra: &[(String, String)]) -> String {
    let mut out = String::from(META_MAGIC);
    out.push('\n');
    let kind = match kind {
        ArtifactKind::Parent => "parent",
        ArtifactKind::Child => "child",
    };
    let _ = writeln!(out, "kind {kind}");
    let _ = writeln!(out, "seed {seed}");
    let _ = writeln!(out, "dtype {}", dtype.as_str());
    for (key, value) in extra {
        let _ = writeln!(out, "{key} {value}");
    }
    out
}

fn parse_meta(path: &Path) -> Result<Vec<(String, String)>> {
    let text = read_text(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l == META_MAGIC => {}
        other => return Err(corrupt(path, format!("expected `{META_MAGIC}`, found {other:?}"))),
    }
    let mut entries = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(' ')
            .ok_or_else(|| corrupt(path, format!("bad metadata line `{line}`")))?;
        entries.push((key.to_string(), value.to_string()));
    }
    Ok(entries)
}

fn meta_value<'a>(entries: &'a [(String, String)], key: &str, path: &Path) -> Result<&'a str> {
    entries
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .ok_or_else(|| corrupt(path, format!("missing `{key}` entry")))
}

/// Reads the kind of the artifact stored at `dir`.
pub fn artifact_kind(dir: &Path) -> Result<ArtifactKind> {
    let path = dir.join("meta.txt");
    let entries = parse_meta(&path)?;
    match meta_value(&entries, "kind", &path)? {
        "parent" => Ok(ArtifactKind::Parent),
        "child" => Ok(ArtifactKind::Child),
        other => Err(corrupt(&path, format!("unknown kind `{other}`"))),
    }
}

// -------------------------------------------------------------- vocabulary

fn vocab_text(vocab: &Vocabulary) -> String {
    let mut out = String::from(VOCAB_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "columns {}", vocab.n_columns());
    for (col, token, id) in vocab.entries() {
        let _ = writeln!(out, "{col} {id} {}", escape_field(token));
    }
    out
}

fn vocab_from_text(text: &str, path: &Path) -> Result<Vocabulary> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l == VOCAB_MAGIC => {}
        other => return Err(corrupt(path, format!("expected `{VOCAB_MAGIC}`, found {other:?}"))),
    }
    let n_columns: usize = match lines.next().and_then(|l| l.strip_prefix("columns ")) {
        Some(n) => n.parse().map_err(|e| corrupt(path, format!("bad column count: {e}")))?,
        None => return Err(corrupt(path, "missing column count")),
    };
    let mut sets: Vec<BTreeSet<String>> = vec![BTreeSet::new(); n_columns];
    let mut stored: Vec<(usize, String, u32)> = Vec::new();
    for line in lines {
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, ' ');
        let (col, id, token) = match (parts.next(), parts.next(), parts.next()) {
            (Some(c), Some(i), Some(t)) => (c, i, t),
            _ => return Err(corrupt(path, format!("bad vocabulary line `{line}`"))),
        };
        let col: usize = col.parse().map_err(|e| corrupt(path, format!("bad column index: {e}")))?;
        let id: u32 = id.parse().map_err(|e| corrupt(path, format!("bad token id: {e}")))?;
        if col >= n_columns {
            return Err(corrupt(path, format!("column index {col} out of range")));
        }
        let token = unescape_field(token)
            .map_err(|e| corrupt(path, format!("bad token escape: {e}")))?;
        if !sets[col].insert(token.clone()) {
            return Err(corrupt(path, format!("duplicate token in column {col}")));
        }
        stored.push((col, token, id));
    }
    let vocab = Vocabulary::from_token_sets(sets);
    // The id assignment is fully determined by the token sets; comparing the
    // recomputed ids against the stored ones catches reordered, edited, or
    // truncated files.
    for (col, token, id) in &stored {
        if vocab.id_of(*col, token) != Some(*id) {
            return Err(corrupt(
                path,
                format!("token `{token}` in column {col} no longer maps to id {id}"),
            ));
        }
    }
    if vocab.entries().count() != stored.len() {
        return Err(corrupt(path, "entry count mismatch"));
    }
    Ok(vocab)
}

// ------------------------------------------------------------------ layout

fn layout_text(layout: &TableLayout) -> String {
    let mut out = String::from(LAYOUT_MAGIC);
    out.push('\n');
    for column in &layout.columns {
        match column {
            ColumnLayout::Categorical => {
                let _ = writeln!(out, "categorical");
            }
            ColumnLayout::Numeric(l) => {
                let _ = writeln!(
                    out,
                    "numeric {} {} {} {}",
                    l.precision, l.pre_width, l.total_width, l.partition
                );
            }
            ColumnLayout::Datetime { layout: l, date_only } => {
                let _ = writeln!(
                    out,
                    "datetime {} {} {} {}",
                    l.pre_width, l.total_width, l.partition, date_only
                );
            }
        }
    }
    out
}

fn numeric_layout(precision: usize, fields: &[&str], path: &Path) -> Result<NumericLayout> {
    let parse = |s: &str| -> Result<usize> {
        s.parse().map_err(|e| corrupt(path, format!("bad layout number `{s}`: {e}")))
    };
    let (pre_width, total_width, partition) = (parse(fields[0])?, parse(fields[1])?, parse(fields[2])?);
    if partition == 0 || total_width == 0 {
        return Err(corrupt(path, "layout widths must be positive"));
    }
    Ok(NumericLayout {
        precision,
        pre_width,
        total_width,
        partition,
        n_chunks: total_width.div_ceil(partition),
    })
}

fn layout_from_text(text: &str, schema: &TableSchema, path: &Path) -> Result<TableLayout> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l == LAYOUT_MAGIC => {}
        other => return Err(corrupt(path, format!("expected `{LAYOUT_MAGIC}`, found {other:?}"))),
    }
    let mut columns = Vec::new();
    for (ci, line) in lines.filter(|l| !l.is_empty()).enumerate() {
        let fields: Vec<&str> = line.split(' ').collect();
        let column = match fields.as_slice() {
            ["categorical"] => ColumnLayout::Categorical,
            ["numeric", rest @ ..] if rest.len() == 4 => {
                let precision: usize = rest[0]
                    .parse()
                    .map_err(|e| corrupt(path, format!("bad precision: {e}")))?;
                ColumnLayout::Numeric(numeric_layout(precision, &rest[1..], path)?)
            }
            ["datetime", rest @ ..] if rest.len() == 4 => {
                let date_only: bool = rest[3]
                    .parse()
                    .map_err(|e| corrupt(path, format!("bad date_only flag: {e}")))?;
                ColumnLayout::Datetime {
                    layout: numeric_layout(0, &rest[..3], path)?,
                    date_only,
                }
            }
            _ => return Err(corrupt(path, format!("bad layout line `{line}` for column {ci}"))),
        };
        columns.push(column);
    }
    if columns.len() != schema.len() {
        return Err(corrupt(
            path,
            format!("{} layout lines for {} schema columns", columns.len(), schema.len()),
        ));
    }
    Ok(TableLayout::from_columns(schema, columns))
}

// ------------------------------------------------------------------- codec

fn write_codec(dir: &Path, prefix: &str, codec: &TableCodec) -> Result<()> {
    write_text(&dir.join(format!("{prefix}schema.txt")), &schema_to_string(&codec.schema))?;
    write_text(&dir.join(format!("{prefix}vocab.txt")), &vocab_text(&codec.vocab))?;
    write_text(&dir.join(format!("{prefix}layout.txt")), &layout_text(&codec.layout))?;
    Ok(())
}

fn read_codec(dir: &Path, prefix: &str) -> Result<TableCodec> {
    let schema_path = dir.join(format!("{prefix}schema.txt"));
    let schema = schema_from_string(&read_text(&schema_path)?)?;
    let layout_path = dir.join(format!("{prefix}layout.txt"));
    let layout = layout_from_text(&read_text(&layout_path)?, &schema, &layout_path)?;
    let vocab_path = dir.join(format!("{prefix}vocab.txt"));
    let vocab = vocab_from_text(&read_text(&vocab_path)?, &vocab_path)?;
    if vocab.n_columns() != layout.n_derived() {
        return Err(corrupt(
            &vocab_path,
            format!(
                "vocabulary covers {} derived columns but the layout defines {}",
                vocab.n_columns(),
                layout.n_derived()
            ),
        ));
    }
    Ok(TableCodec { schema, layout, vocab })
}

// -------------------------------------------------------------- checkpoint

/// Serializes a model as versioned text: the configuration, then every
/// tensor in canonical order as hex IEEE-754 bit patterns, one row per line.
pub fn checkpoint_text<T: Scalar>(model: &TransformerModel<T>) -> String {
    let c = &model.config;
    let mut out = String::from(CKPT_MAGIC);
    out.push('\n');
    let _ = writeln!(out, "dtype {}", T::DTYPE);
    let _ = writeln!(out, "vocab_size {}", c.vocab_size);
    let _ = writeln!(out, "d_model {}", c.d_model);
    let _ = writeln!(out, "n_layers {}", c.n_layers);
    let _ = writeln!(out, "n_heads {}", c.n_heads);
    let _ = writeln!(out, "max_positions {}", c.max_positions);
    let _ = writeln!(out, "cross_attention {}", c.cross_attention);
    for (name, _, mat) in model.params() {
        let _ = writeln!(out, "tensor {name} {} {}", mat.rows, mat.cols);
        for r in 0..mat.rows {
            let row = mat.row(r);
            for (i, v) in row.iter().enumerate() {
                if i > 0 {
                    out.push(' ');
                }
                let _ = write!(out, "{:016x}", v.to_bits_u64());
            }
            out.push('\n');
        }
    }
    out
}

pub fn write_checkpoint<T: Scalar>(path: &Path, model: &TransformerModel<T>) -> Result<()> {
    write_text(path, &checkpoint_text::<T>(model))
}

fn header_value<'a>(lines: &mut std::str::Lines<'a>, key: &str, path: &Path) -> Result<&'a str> {
    match lines.next().and_then(|l| l.strip_prefix(key)).and_then(|l| l.strip_prefix(' ')) {
        Some(v) => Ok(v),
        None => Err(corrupt(path, format!("missing `{key}` header"))),
    }
}

fn checkpoint_from_text<T: Scalar>(text: &str, path: &Path) -> Result<TransformerModel<T>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l == CKPT_MAGIC => {}
        other => return Err(corrupt(path, format!("expected `{CKPT_MAGIC}`, found {other:?}"))),
    }
    let dtype = header_value(&mut lines, "dtype", path)?;
    if dtype != T::DTYPE {
        return Err(corrupt(
            path,
            format!("checkpoint dtype is {dtype}, expected {}", T::DTYPE),
        ));
    }
    let usize_header = |lines: &mut std::str::Lines, key: &str| -> Result<usize> {
        header_value(lines, key, path)?
            .parse()
            .map_err(|e| corrupt(path, format!("bad `{key}` header: {e}")))
    };
    let config = ModelConfig {
        vocab_size: usize_header(&mut lines, "vocab_size")?,
        d_model: usize_header(&mut lines, "d_model")?,
        n_layers: usize_header(&mut lines, "n_layers")?,
        n_heads: usize_header(&mut lines, "n_heads")?,
        max_positions: usize_header(&mut lines, "max_positions")?,
        cross_attention: header_value(&mut lines, "cross_attention", path)?
            .parse()
            .map_err(|e| corrupt(path, format!("bad `cross_attention` header: {e}")))?,
    };
    let mut model = TransformerModel::<T>::zeros(config)?;
    for (name, _, mat) in model.params_mut() {
        let header = lines
            .next()
            .ok_or_else(|| corrupt(path, format!("missing tensor `{name}`")))?;
        let expected = format!("tensor {name} {} {}", mat.rows, mat.cols);
        if header != expected {
            return Err(corrupt(path, format!("expected `{expected}`, found `{header}`")));
        }
        for r in 0..mat.rows {
            let line = lines
                .next()
                .ok_or_else(|| corrupt(path, format!("tensor `{name}` is truncated")))?;
            let row = mat.row_mut(r);
            let mut filled = 0;
            for word in line.split(' ') {
                let bits = u64::from_str_radix(word, 16)
                    .map_err(|e| corrupt(path, format!("bad hex word in `{name}`: {e}")))?;
                if filled >= row.len() {
                    return Err(corrupt(path, format!("tensor `{name}` row {r} is too long")));
                }
                row[filled] = T::from_bits_u64(bits);
                filled += 1;
            }
            if filled != row.len() {
                return Err(corrupt(
                    path,
                    format!("tensor `{name}` row {r} has {filled} of {} values", row.len()),
                ));
            }
        }
    }
    if lines.any(|l| !l.is_empty()) {
        return Err(corrupt(path, "trailing content after the last tensor"));
    }
    Ok(model)
}

pub fn read_checkpoint<T: Scalar>(path: &Path) -> Result<TransformerModel<T>> {
    checkpoint_from_text(&read_text(path)?, path)
}

/// Reads a checkpoint, dispatching on its recorded dtype.
pub fn read_checkpoint_any(path: &Path) -> Result<AnyModel> {
    let text = read_text(path)?;
    let dtype_line = text
        .lines()
        .nth(1)
        .ok_or_else(|| corrupt(path, "missing dtype header"))?;
    match dtype_line.strip_prefix("dtype ") {
        Some("f32") => Ok(AnyModel::F32(checkpoint_from_text(&text, path)?)),
        Some("f64") => Ok(AnyModel::F64(checkpoint_from_text(&text, path)?)),
        other => Err(corrupt(path, format!("unknown dtype header {other:?}"))),
    }
}

// ----------------------------------------------------------------- reports

fn float_repr(x: f64) -> String {
    format!("{x:?}")
}

fn earlystop_text(report: &TrainReport) -> String {
    let mut out = String::from("epoch statistic threshold decision\n");
    for e in &report.events {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            e.epoch,
            float_repr(e.statistic),
            float_repr(e.threshold),
            e.decision.as_str()
        );
    }
    out
}

fn train_report_text(report: &TrainReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "epochs_run {}", report.epochs_run);
    let _ = writeln!(out, "stopped_early {}", report.stopped_early);
    let restored = match report.restored_epoch {
        Some(e) => e.to_string(),
        None => "none".into(),
    };
    let _ = writeln!(out, "restored_epoch {restored}");
    let _ = writeln!(out, "never_passed {}", report.never_passed);
    let _ = writeln!(out, "threshold {}", float_repr(report.threshold));
    let _ = writeln!(out, "final_loss {}", float_repr(report.final_loss));
    for (i, loss) in report.loss_curve.iter().enumerate() {
        let _ = writeln!(out, "loss {} {}", i + 1, float_repr(*loss));
    }
    out
}

/// Appends one line to the sampling log of an artifact. The line must not
/// contain wall-clock information, keeping reruns byte-identical.
pub fn append_samples_log(dir: &Path, line: &str) -> Result<()> {
    use std::io::Write as _;
    let path = dir.join("samples.log");
    let mut file = std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&path)
        .map_err(|e| Error::io(&path, e))?;
    writeln!(file, "{line}").map_err(|e| Error::io(&path, e))
}

// -------------------------------------------------------------- save / load

/// Writes a fitted single-table model into `dir`.
pub fn save_parent<T: Scalar>(
    dir: &Path,
    config: &PipelineConfig,
    seed: u64,
    codec: &TableCodec,
    model: &TransformerModel<T>,
    report: Option<&TrainReport>,
) -> Result<()> {
    let dtype = Dtype::parse(T::DTYPE)?;
    write_text(&dir.join("config.toml"), &config.to_toml())?;
    write_text(&dir.join("meta.txt"), &meta_text(ArtifactKind::Parent, seed, dtype, &[]))?;
    write_codec(dir, "", codec)?;
    write_checkpoint(&dir.join("model.ckpt"), model)?;
    if let Some(report) = report {
        write_text(&dir.join("earlystop.log"), &earlystop_text(report))?;
        write_text(&dir.join("train_report.txt"), &train_report_text(report))?;
    }
    ensure_samples_log(dir)?;
    Ok(())
}

/// Creates an empty sampling log so a fresh artifact directory is complete;
/// an existing log is left untouched.
fn ensure_samples_log(dir: &Path) -> Result<()> {
    let path = dir.join("samples.log");
    if !path.exists() {
        write_text(&path, "")?;
    }
    Ok(())
}

/// Writes a fitted child model, the frozen encoder it depends on, and both
/// codecs into `dir`.
#[allow(clippy::too_many_arguments)]
pub fn save_child<T: Scalar>(
    dir: &Path,
    config: &PipelineConfig,
    seed: u64,
    join_on: &str,
    output_max_length: usize,
    parent_codec: &TableCodec,
    encoder: &TransformerModel<T>,
    child_codec: &TableCodec,
    decoder: &TransformerModel<T>,
    report: Option<&TrainReport>,
) -> Result<()> {
    let dtype = Dtype::parse(T::DTYPE)?;
    let extra = vec![
        ("join_on".to_string(), escape_field(join_on)),
        ("output_max_length".to_string(), output_max_length.to_string()),
    ];
    write_text(&dir.join("config.toml"), &config.to_toml())?;
    write_text(&dir.join("meta.txt"), &meta_text(ArtifactKind::Child, seed, dtype, &extra))?;
    write_codec(dir, "", child_codec)?;
    write_codec(dir, "parent_", parent_codec)?;
    write_checkpoint(&dir.join("model.ckpt"), decoder)?;
    write_checkpoint(&dir.join("encoder.ckpt"), encoder)?;
    if let Some(report) = report {
        write_text(&dir.join("earlystop.log"), &earlystop_text(report))?;
        write_text(&dir.join("train_report.txt"), &train_report_text(report))?;
    }
    ensure_samples_log(dir)?;
    Ok(())
}

/// Restores a single-table artifact.
pub fn load_parent(dir: &Path) -> Result<ParentArtifact> {
    if artifact_kind(dir)? != ArtifactKind::Parent {
        return Err(Error::Model(format!(
            "{} holds a relational child artifact, not a single-table one",
            dir.display()
        )));
    }
    let meta_path = dir.join("meta.txt");
    let entries = parse_meta(&meta_path)?;
    let seed: u64 = meta_value(&entries, "seed", &meta_path)?
        .parse()
        .map_err(|e| corrupt(&meta_path, format!("bad seed: {e}")))?;
    let config = PipelineConfig::load(&dir.join("config.toml"))?;
    let codec = read_codec(dir, "")?;
    let model = read_checkpoint_any(&dir.join("model.ckpt"))?;
    if model.config().vocab_size != codec.vocab.n_tokens() {
        return Err(Error::Model(format!(
            "model vocabulary size {} does not match the stored vocabulary ({} tokens)",
            model.config().vocab_size,
            codec.vocab.n_tokens()
        )));
    }
    Ok(ParentArtifact { config, seed, codec, model })
}

/// Restores a relational child artifact.
pub fn load_child(dir: &Path) -> Result<ChildArtifact> {
    if artifact_kind(dir)? != ArtifactKind::Child {
        return Err(Error::Model(format!(
            "{} holds a single-table artifact, not a relational child one",
            dir.display()
        )));
    }
    let meta_path = dir.join("meta.txt");
    let entries = parse_meta(&meta_path)?;
    let seed: u64 = meta_value(&entries, "seed", &meta_path)?
        .parse()
        .map_err(|e| corrupt(&meta_path, format!("bad seed: {e}")))?;
    let join_on = unescape_field(meta_value(&entries, "join_on", &meta_path)?)?;
    let output_max_length: usize = meta_value(&entries, "output_max_length", &meta_path)?
        .parse()
        .map_err(|e| corrupt(&meta_path, format!("bad output_max_length: {e}")))?;
    let config = PipelineConfig::load(&dir.join("config.toml"))?;
    let child_codec = read_codec(dir, "")?;
    let parent_codec = read_codec(dir, "parent_")?;
    let decoder = read_checkpoint_any(&dir.join("model.ckpt"))?;
    let encoder = read_checkpoint_any(&dir.join("encoder.ckpt"))?;
    if decoder.dtype() != encoder.dtype() {
        return Err(Error::Model(format!(
            "decoder dtype {} does not match encoder dtype {}",
            decoder.dtype().as_str(),
            encoder.dtype().as_str()
        )));
    }
    if !decoder.config().cross_attention {
        return Err(Error::Model("stored decoder lacks cross-attention".into()));
    }
    if decoder.config().vocab_size != child_codec.vocab.n_tokens() {
        return Err(Error::Model(format!(
            "decoder vocabulary size {} does not match the stored child vocabulary ({} tokens)",
            decoder.config().vocab_size,
            child_codec.vocab.n_tokens()
        )));
    }
    if encoder.config().vocab_size != parent_codec.vocab.n_tokens() {
        return Err(Error::Model(format!(
            "encoder vocabulary size {} does not match the stored parent vocabulary ({} tokens)",
            encoder.config().vocab_size,
            parent_codec.vocab.n_tokens()
        )));
    }
    Ok(ChildArtifact {
        config,
        seed,
        join_on,
        output_max_length,
        parent_codec,
        encoder,
        child_codec,
        decoder,
    })
}

//! End-to-end operations behind the command-line interface: fit a table
//! model, fit a child model on top of a fitted parent, sample from either,
//! score synthetic output, and inspect encodings and distance statistics.

use crate::artifact::{self, AnyModel};
use crate::config::{Dtype, PipelineConfig};
use crate::encode::{build_child_sequences, child_sequence_len, TableCodec};
use crate::error::{Error, Result};
use crate::evaluate::{discriminator_measure, logistic_detection, merged_table_detection, DetectionResult};
use crate::ingest::{
    read_table_with, validate_link, write_table, InferOptions, RawTable, RelationalLink,
    TableSchema,
};
use crate::nnet::TransformerModel;
use crate::overfit::{dcr, q_delta_audit, QuantileSet, RowDistanceMetric};
use crate::rng::{substream, Domain};
use crate::sample::{sample_children, sample_parent, SampleReport};
use crate::scalar::Scalar;
use crate::train::{train_child, train_parent, TrainReport};
use rand::seq::SliceRandom;
use rand::Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Delimiter by file extension: tab for `.tsv`, comma otherwise.
fn delimiter_for(path: &Path) -> u8 {
    match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") => b'\t',
        _ => b',',
    }
}

fn infer_options(config: &PipelineConfig) -> InferOptions {
    InferOptions {
        missing_marker: config.data.missing_marker.clone(),
        precision_cap: config.data.precision_cap,
    }
}

/// Reads a delimited file and drops the configured ignore columns, keeping
/// `keep` even when listed there.
fn read_input(path: &Path, config: &PipelineConfig, keep: Option<&str>) -> Result<RawTable> {
    let table = read_table_with(path, delimiter_for(path), None, &infer_options(config))?;
    let drop: Vec<&str> = config
        .data
        .ignore_columns
        .iter()
        .map(String::as_str)
        .filter(|c| table.schema.index_of(c).is_some())
        .filter(|c| Some(*c) != keep)
        .collect();
    if drop.is_empty() {
        Ok(table)
    } else {
        table.without_columns(&drop)
    }
}

/// Reorders and re-types the columns of `file_table` to match `schema`.
/// Extra file columns are dropped; a missing column is an error. The
/// returned table uses `schema` verbatim, so downstream canonicalization
/// agrees with whatever that schema was fitted against.
fn align_to_schema(file_table: &RawTable, schema: &TableSchema, what: &str) -> Result<RawTable> {
    let mut picks = Vec::with_capacity(schema.len());
    for spec in &schema.columns {
        let idx = file_table.schema.index_of(&spec.name).ok_or_else(|| {
            Error::Schema(format!("{what} lacks the column `{}`", spec.name))
        })?;
        picks.push(idx);
    }
    let rows = file_table
        .rows
        .iter()
        .map(|row| picks.iter().map(|&i| row[i].clone()).collect())
        .collect();
    RawTable::new(schema.clone(), rows)
}

/// Result of fitting either model kind.
pub struct FitOutcome {
    pub dir: PathBuf,
    pub report: TrainReport,
    pub n_rows: usize,
    pub vocab_tokens: usize,
    pub parameters: usize,
    pub seed: u64,
    pub notes: Vec<String>,
}

impl FitOutcome {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "artifact: {}", self.dir.display());
        let _ = writeln!(
            out,
            "rows: {}  vocabulary: {} tokens  parameters: {}",
            self.n_rows, self.vocab_tokens, self.parameters
        );
        let _ = writeln!(out, "seed: {}", self.seed);
        let _ = writeln!(
            out,
            "epochs run: {}{}",
            self.report.epochs_run,
            if self.report.stopped_early { " (stopped by the overfitting monitor)" } else { "" }
        );
        let _ = writeln!(out, "overfit threshold: {:?}", self.report.threshold);
        match (self.report.restored_epoch, self.report.never_passed) {
            (Some(e), _) => {
                let _ = writeln!(out, "restored checkpoint: epoch {e}");
            }
            (None, true) => {
                let _ = writeln!(out, "restored checkpoint: none passed, final weights kept");
            }
            (None, false) => {
                let _ = writeln!(out, "restored checkpoint: none (no evaluation ran)");
            }
        }
        let _ = writeln!(out, "final loss: {:?}", self.report.final_loss);
        for e in &self.report.events {
            let _ = writeln!(
                out,
                "monitor: epoch {} statistic {:?} {}",
                e.epoch,
                e.statistic,
                e.decision.as_str()
            );
        }
        for note in &self.notes {
            let _ = writeln!(out, "note: {note}");
        }
        out
    }
}

/// Fits a single-table model on a delimited file and writes the artifact
/// under `out_root`.
pub fn fit(data: &Path, config: &PipelineConfig, seed: u64, out_root: &Path) -> Result<FitOutcome> {
    config.validate()?;
    let table = read_input(data, config, None)?;
    let codec = TableCodec::fit(&table, config.data.partition_size)?;
    if codec.seq_len() > config.model.max_positions {
        return Err(Error::Config(format!(
            "rows encode to {} tokens but max_positions is {}; raise max_positions or coarsen the encoding",
            codec.seq_len(),
            config.model.max_positions
        )));
    }
    let (report, dir, parameters) = match config.model.dtype {
        Dtype::F32 => fit_parent_typed::<f32>(&table, &codec, config, seed, out_root)?,
        Dtype::F64 => fit_parent_typed::<f64>(&table, &codec, config, seed, out_root)?,
    };
    Ok(FitOutcome {
        dir,
        report,
        n_rows: table.n_rows(),
        vocab_tokens: codec.vocab.n_tokens(),
        parameters,
        seed,
        notes: Vec::new(),
    })
}

fn fit_parent_typed<T: Scalar>(
    table: &RawTable,
    codec: &TableCodec,
    config: &PipelineConfig,
    seed: u64,
    out_root: &Path,
) -> Result<(TrainReport, PathBuf, usize)> {
    let mut model = TransformerModel::<T>::init(
        config.model_config(codec.vocab.n_tokens(), false),
        seed,
    )?;
    let report = train_parent(
        &mut model,
        table,
        codec,
        &config.train_config(),
        &config.bootstrap_config(),
        &config.sample_config(),
        seed,
    )?;
    let dir = artifact::create_experiment_dir(out_root)?;
    artifact::save_parent(&dir, config, seed, codec, &model, Some(&report))?;
    Ok((report, dir, model.n_parameters()))
}

fn link_error(report: &crate::ingest::LinkReport, join_on: &str) -> Error {
    let shown: Vec<String> = report.violations.iter().take(8).map(|v| v.to_string()).collect();
    let more = report.violations.len().saturating_sub(8);
    let suffix = if more > 0 { format!("; and {more} more") } else { String::new() };
    Error::Data(format!(
        "the link on `{join_on}` is invalid: {}{suffix}",
        shown.join("; ")
    ))
}

/// Fits a child-table model conditioned on a fitted parent artifact and
/// writes the child artifact under `out_root`.
pub fn fit_child(
    child_data: &Path,
    parent_data: &Path,
    parent_artifact: &Path,
    join_on: &str,
    config: Option<&PipelineConfig>,
    seed: u64,
    out_root: &Path,
) -> Result<FitOutcome> {
    let parent_art = artifact::load_parent(parent_artifact)?;
    let config = match config {
        Some(c) => c.clone(),
        None => parent_art.config.clone(),
    };
    config.validate()?;
    if config.model.dtype != parent_art.model.dtype() {
        return Err(Error::Config(format!(
            "the child model must use the parent encoder's dtype {}",
            parent_art.model.dtype().as_str()
        )));
    }

    // The parent file is read with the artifact's inference settings so the
    // keyless view reproduces the schema the encoder was fitted on.
    let parent_keyed = {
        let table = read_input(parent_data, &parent_art.config, Some(join_on))?;
        if table.schema.index_of(join_on).is_none() {
            return Err(Error::Config(format!(
                "parent data lacks the key column `{join_on}`"
            )));
        }
        table
    };
    let parent_sans_key = parent_keyed.without_columns(&[join_on])?;
    if parent_sans_key.schema != parent_art.codec.schema {
        return Err(Error::Schema(
            "parent data does not match the schema stored in the parent artifact".into(),
        ));
    }

    let child_keyed = read_input(child_data, &config, Some(join_on))?;
    if child_keyed.schema.index_of(join_on).is_none() {
        return Err(Error::Config(format!(
            "child data lacks the key column `{join_on}`"
        )));
    }

    let link = RelationalLink {
        parent: parent_keyed.clone(),
        child: child_keyed.clone(),
        key_column: join_on.to_string(),
        max_children: config.data.max_children,
    };
    let link_report = validate_link(&link)?;
    if !link_report.ok {
        return Err(link_error(&link_report, join_on));
    }

    let child_sans_key = child_keyed.without_columns(&[join_on])?;
    let child_codec = TableCodec::fit(&child_sans_key, config.data.partition_size)?;
    let output_max_length = config.data.output_max_length;
    if output_max_length > config.model.max_positions {
        return Err(Error::Config(format!(
            "output_max_length {} exceeds max_positions {}",
            output_max_length, config.model.max_positions
        )));
    }
    let one_row = child_sequence_len(1, child_codec.row_width());
    if one_row > output_max_length {
        return Err(Error::Config(format!(
            "output_max_length {output_max_length} cannot hold even one child row ({one_row} tokens)"
        )));
    }
    let sequences = build_child_sequences(
        &parent_keyed,
        &child_keyed,
        join_on,
        &child_codec,
        output_max_length,
    )?;
    let truncated = sequences.iter().filter(|s| s.truncated).count();

    let (report, dir, parameters) = match parent_art.model {
        AnyModel::F32(ref encoder) => fit_child_typed::<f32>(
            encoder,
            &parent_art.codec,
            &parent_sans_key,
            &child_codec,
            &child_sans_key,
            &sequences,
            join_on,
            &config,
            seed,
            out_root,
        )?,
        AnyModel::F64(ref encoder) => fit_child_typed::<f64>(
            encoder,
            &parent_art.codec,
            &parent_sans_key,
            &child_codec,
            &child_sans_key,
            &sequences,
            join_on,
            &config,
            seed,
            out_root,
        )?,
    };
    let mut notes = Vec::new();
    if truncated > 0 {
        notes.push(format!(
            "{truncated} of {} training sequences were truncated to fit output_max_length {output_max_length}",
            sequences.len()
        ));
    }
    Ok(FitOutcome {
        dir,
        report,
        n_rows: child_sans_key.n_rows(),
        vocab_tokens: child_codec.vocab.n_tokens(),
        parameters,
        seed,
        notes,
    })
}

#[allow(clippy::too_many_arguments)]
fn fit_child_typed<T: Scalar>(
    encoder: &TransformerModel<T>,
    parent_codec: &TableCodec,
    parents: &RawTable,
    child_codec: &TableCodec,
    child_table: &RawTable,
    sequences: &[crate::encode::ChildSequence],
    join_on: &str,
    config: &PipelineConfig,
    seed: u64,
    out_root: &Path,
) -> Result<(TrainReport, PathBuf, usize)> {
    let mut decoder = TransformerModel::<T>::init(
        config.model_config(child_codec.vocab.n_tokens(), true),
        seed,
    )?;
    let report = train_child(
        &mut decoder,
        encoder,
        parent_codec,
        parents,
        child_codec,
        child_table,
        sequences,
        config.data.output_max_length,
        &config.train_config(),
        &config.bootstrap_config(),
        &config.sample_config(),
        seed,
    )?;
    let dir = artifact::create_experiment_dir(out_root)?;
    artifact::save_child(
        &dir,
        config,
        seed,
        join_on,
        config.data.output_max_length,
        parent_codec,
        encoder,
        child_codec,
        &decoder,
        Some(&report),
    )?;
    Ok((report, dir, decoder.n_parameters()))
}

/// Result of a sampling run.
pub struct SampleOutcome {
    pub out_path: PathBuf,
    /// Keyed parent file written when the parent input had no key column.
    pub parents_path: Option<PathBuf>,
    pub report: SampleReport,
}

impl SampleOutcome {
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "samples: {}", self.out_path.display());
        if let Some(p) = &self.parents_path {
            let _ = writeln!(out, "keyed parents: {}", p.display());
        }
        let r = &self.report;
        let _ = writeln!(
            out,
            "requested: {}  produced: {}  invalid: {}  attempts: {}  seed: {}",
            r.requested, r.produced, r.invalid_count, r.attempts, r.seed
        );
        out
    }
}

/// Samples `n` rows from a fitted single-table artifact and writes them as
/// a delimited file. Without an explicit seed the artifact's root seed is
/// reused, making reruns byte-identical.
pub fn sample(artifact_dir: &Path, n: usize, seed: Option<u64>, out: Option<&Path>) -> Result<SampleOutcome> {
    let art = artifact::load_parent(artifact_dir)?;
    let seed = seed.unwrap_or(art.seed);
    let cfg = art.config.sample_config();
    let (rows, report) = match &art.model {
        AnyModel::F32(m) => sample_parent(m, &art.codec, n, &cfg, seed)?,
        AnyModel::F64(m) => sample_parent(m, &art.codec, n, &cfg, seed)?,
    };
    let out_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| artifact_dir.join("samples.csv"));
    write_table(&rows, &out_path, delimiter_for(&out_path))?;
    artifact::append_samples_log(
        artifact_dir,
        &format!(
            "kind parent seed {} requested {} produced {} invalid {} attempts {}",
            report.seed, report.requested, report.produced, report.invalid_count, report.attempts
        ),
    )?;
    Ok(SampleOutcome { out_path, parents_path: None, report })
}

/// Samples child rows conditioned on the parent rows in `parent_data`.
///
/// When the parent file carries the key column its keys are reused;
/// otherwise fresh keys `p0, p1, …` are assigned and the keyed parents are
/// written next to the output so the link stays usable. `n` restricts
/// generation to the first `n` parents.
pub fn sample_relational(
    artifact_dir: &Path,
    parent_data: &Path,
    n: Option<usize>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> Result<SampleOutcome> {
    let art = artifact::load_child(artifact_dir)?;
    let seed = seed.unwrap_or(art.seed);
    let file_table = read_table_with(
        parent_data,
        delimiter_for(parent_data),
        None,
        &infer_options(&art.config),
    )?;
    let key_present = file_table.schema.index_of(&art.join_on).is_some();
    let parents = align_to_schema(&file_table, &art.parent_codec.schema, "the parent data")?;
    let mut keys: Vec<String> = match file_table.schema.index_of(&art.join_on) {
        Some(ki) => file_table.rows.iter().map(|r| r[ki].clone()).collect(),
        None => (0..parents.n_rows()).map(|i| format!("p{i}")).collect(),
    };
    let mut parents = parents;
    if let Some(limit) = n {
        if limit > parents.n_rows() {
            return Err(Error::Data(format!(
                "requested {limit} parents but {} holds only {}",
                parent_data.display(),
                parents.n_rows()
            )));
        }
        let idx: Vec<usize> = (0..limit).collect();
        parents = parents.select_rows(&idx);
        keys.truncate(limit);
    }

    let cfg = art.config.sample_config();
    let (rows, report) = match (&art.encoder, &art.decoder) {
        (AnyModel::F32(enc), AnyModel::F32(dec)) => sample_children(
            enc,
            &art.parent_codec,
            dec,
            &art.child_codec,
            &parents,
            &keys,
            &art.join_on,
            art.output_max_length,
            &cfg,
            seed,
        )?,
        (AnyModel::F64(enc), AnyModel::F64(dec)) => sample_children(
            enc,
            &art.parent_codec,
            dec,
            &art.child_codec,
            &parents,
            &keys,
            &art.join_on,
            art.output_max_length,
            &cfg,
            seed,
        )?,
        _ => return Err(Error::Model("encoder and decoder dtypes disagree".into())),
    };

    let out_path = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| artifact_dir.join("child_samples.csv"));
    write_table(&rows, &out_path, delimiter_for(&out_path))?;

    let parents_path = if key_present {
        None
    } else {
        let stem = out_path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("child_samples");
        let path = out_path.with_file_name(format!("{stem}_parents.csv"));
        let mut columns = vec![crate::ingest::ColumnSpec::new(
            art.join_on.clone(),
            crate::ingest::ColumnKind::Categorical,
            0,
        )];
        columns.extend(parents.schema.columns.iter().cloned());
        let keyed_schema = TableSchema::new(columns)?;
        let keyed_rows = keys
            .iter()
            .zip(&parents.rows)
            .map(|(k, row)| {
                let mut r = Vec::with_capacity(row.len() + 1);
                r.push(k.clone());
                r.extend(row.iter().cloned());
                r
            })
            .collect();
        write_table(&RawTable::new(keyed_schema, keyed_rows)?, &path, b',')?;
        Some(path)
    };

    artifact::append_samples_log(
        artifact_dir,
        &format!(
            "kind child seed {} parents {} rows {} invalid {} attempts {}",
            report.seed,
            report.requested,
            rows.n_rows(),
            report.invalid_count,
            report.attempts
        ),
    )?;
    Ok(SampleOutcome { out_path, parents_path, report })
}

/// What to evaluate: a real/synthetic pair, optionally with the linked
/// parent tables for relational scoring.
pub struct EvaluateArgs<'a> {
    pub real: &'a Path,
    pub synthetic: &'a Path,
    pub parent_real: Option<&'a Path>,
    pub parent_synthetic: Option<&'a Path>,
    pub join_on: Option<&'a str>,
    pub folds: usize,
}

fn render_detection(out: &mut String, heading: &str, det: &DetectionResult) {
    let _ = writeln!(out, "{heading}");
    for (i, auc) in det.fold_aucs.iter().enumerate() {
        let _ = writeln!(out, "  fold {}: auc {:.4}", i + 1, auc);
    }
    let _ = writeln!(out, "  mu_ra: {:.4}", det.mu_ra);
    let _ = writeln!(
        out,
        "  score: {:.1} (100 = indistinguishable, 0 = fully detectable)",
        det.ld
    );
}

/// Scores synthetic data against real data and renders a plain-text report:
/// cross-validated logistic detection, the held-out discriminator measure,
/// and — when the parent tables and key are supplied — detection on the
/// parent-joined rows.
pub fn evaluate(args: &EvaluateArgs, config: &PipelineConfig, seed: u64) -> Result<String> {
    config.validate()?;
    if args.folds < 2 {
        return Err(Error::Config("evaluation needs at least 2 folds".into()));
    }
    let relational_args = [
        args.parent_real.is_some(),
        args.parent_synthetic.is_some(),
        args.join_on.is_some(),
    ];
    if relational_args.iter().any(|&b| b) && !relational_args.iter().all(|&b| b) {
        return Err(Error::Config(
            "relational evaluation needs the real parents, the synthetic parents, and the key together".into(),
        ));
    }

    let real = read_input(args.real, config, args.join_on)?;
    let synthetic_file = read_table_with(
        args.synthetic,
        delimiter_for(args.synthetic),
        None,
        &infer_options(config),
    )?;
    let synthetic = align_to_schema(&synthetic_file, &real.schema, "the synthetic data")?;

    // The key column, when present, is excluded from single-table scoring:
    // identifiers are arbitrary labels, not distributions worth matching.
    let (real_flat, syn_flat) = match args.join_on {
        Some(key) if real.schema.index_of(key).is_some() => (
            real.without_columns(&[key])?,
            synthetic.without_columns(&[key])?,
        ),
        _ => (real.clone(), synthetic.clone()),
    };

    let mut out = String::new();
    let _ = writeln!(
        out,
        "rows: real {}  synthetic {}",
        real.n_rows(),
        synthetic.n_rows()
    );

    let syn_ld = if syn_flat.n_rows() > real_flat.n_rows() {
        let idx: Vec<usize> = (0..real_flat.n_rows()).collect();
        syn_flat.select_rows(&idx)
    } else {
        syn_flat.clone()
    };
    let det = logistic_detection(&real_flat, &syn_ld, args.folds, seed)?;
    render_detection(&mut out, "logistic detection", &det);

    let n = real_flat.n_rows();
    if syn_flat.n_rows() >= n && n >= 4 {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(&mut substream(seed, Domain::Evaluation, 2));
        let half = n / 2;
        let train = real_flat.select_rows(&idx[..half]);
        let holdout = real_flat.select_rows(&idx[half..]);
        let dm = discriminator_measure(&train, &syn_flat, &holdout, seed)?;
        let _ = writeln!(out, "discriminator measure");
        let _ = writeln!(out, "  held-out accuracy: {dm:.1}% (50 = indistinguishable)");
    } else {
        let _ = writeln!(out, "discriminator measure");
        let _ = writeln!(
            out,
            "  skipped: needs at least 4 real rows and {} synthetic rows (have {})",
            n,
            syn_flat.n_rows()
        );
    }

    render_distance_audit(&mut out, &real_flat, &syn_flat, config.bootstrap.rho, seed)?;

    if let (Some(pr), Some(ps), Some(key)) = (args.parent_real, args.parent_synthetic, args.join_on) {
        let parent_real = read_input(pr, config, Some(key))?;
        let parent_syn_file =
            read_table_with(ps, delimiter_for(ps), None, &infer_options(config))?;
        let parent_syn = align_to_schema(&parent_syn_file, &parent_real.schema, "the synthetic parents")?;
        let parent_real_flat = parent_real.without_columns(&[key])?;
        let parent_syn_flat = parent_syn.without_columns(&[key])?;
        let syn_parent_ld = if parent_syn_flat.n_rows() > parent_real_flat.n_rows() {
            let idx: Vec<usize> = (0..parent_real_flat.n_rows()).collect();
            parent_syn_flat.select_rows(&idx)
        } else {
            parent_syn_flat
        };
        let det = logistic_detection(&parent_real_flat, &syn_parent_ld, args.folds, seed)?;
        render_detection(&mut out, "parent logistic detection", &det);
        let det = merged_table_detection(
            &parent_real,
            &real,
            &parent_syn,
            &synthetic,
            key,
            args.folds,
            seed,
        )?;
        render_detection(&mut out, "merged parent+child detection", &det);
    }
    Ok(out)
}

/// Appends the closest-record distance audit: the real table is split the
/// way a monitor round splits it, the synthetic rows play the generated
/// side, and the per-quantile excess closeness is tabulated.
fn render_distance_audit(
    out: &mut String,
    real: &RawTable,
    synthetic: &RawTable,
    rho: f64,
    seed: u64,
) -> Result<()> {
    let _ = writeln!(out, "distance audit");
    let n = real.n_rows();
    let k = ((rho * n as f64).floor() as usize).max(1);
    if 2 * k >= n {
        let _ = writeln!(out, "  skipped: {n} rows are too few to split three ways");
        return Ok(());
    }
    let metric = RowDistanceMetric::fit(real)?;
    let interned = metric.intern_all(&[real, synthetic])?;
    let (real_cells, syn_cells) = (&interned[0], &interned[1]);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut substream(seed, Domain::Evaluation, 3));
    let pick = |range: &[usize]| -> Vec<_> {
        range.iter().map(|&i| real_cells[i].clone()).collect::<Vec<_>>()
    };
    let s_h = pick(&idx[..k]);
    let s_tr = pick(&idx[2 * k..]);
    let d_h = dcr(&metric, &s_tr, &s_h).concat();
    let d_g = dcr(&metric, &s_tr, syn_cells).concat();
    let audit = q_delta_audit(&d_h, &d_g, &QuantileSet::default());
    let _ = writeln!(
        out,
        "  statistic: {:.4} (positive = synthetic sits closer to the data than held-out rows do)",
        audit.statistic
    );
    let _ = writeln!(out, "  # probe q v_q p_q");
    for p in &audit.probes {
        let _ = writeln!(out, "  probe {:.3} {:.4} {:.4}", p.q, p.v_q, p.p_q);
    }
    Ok(())
}

/// Splits the table the way one overfitting-monitor round does and renders
/// the distance distributions, the quantile probes, and the statistic. The
/// split matches bootstrap round 0 of [`crate::overfit::bootstrap_threshold`]
/// under the same seed, so the statistic equals that round's.
pub fn audit_dcr(data: &Path, config: &PipelineConfig, seed: u64) -> Result<String> {
    config.validate()?;
    let table = read_input(data, config, None)?;
    let metric = RowDistanceMetric::fit(&table)?;
    let rows = metric.intern_all(&[&table])?.remove(0);
    let n = rows.len();
    let k = ((config.bootstrap.rho * n as f64).floor() as usize).max(1);
    if 2 * k >= n {
        return Err(Error::Data(format!(
            "{n} rows are too few for three disjoint nonempty samples (two of {k} rows plus a remainder)"
        )));
    }
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut substream(seed, Domain::Bootstrap, 0));
    let pick = |range: std::ops::Range<usize>| -> Vec<_> {
        indices[range].iter().map(|&i| rows[i].clone()).collect::<Vec<_>>()
    };
    let s_h = pick(0..k);
    let s_g = pick(k..2 * k);
    let s_tr = pick(2 * k..n);
    let d_h = dcr(&metric, &s_tr, &s_h).concat();
    let d_g = dcr(&metric, &s_tr, &s_g).concat();
    let audit = q_delta_audit(&d_h, &d_g, &QuantileSet::default());

    let mut out = String::new();
    let _ = writeln!(out, "rows {n}");
    let _ = writeln!(out, "split holdout {k} generated-proxy {k} reference {}", n - 2 * k);
    let _ = writeln!(out, "statistic {:?}", audit.statistic);
    let _ = writeln!(out, "# probe q v_q p_q");
    for p in &audit.probes {
        let _ = writeln!(out, "probe {:?} {:?} {:?}", p.q, p.v_q, p.p_q);
    }
    for d in &d_h {
        let _ = writeln!(out, "d_h {d:?}");
    }
    for d in &d_g {
        let _ = writeln!(out, "d_g {d:?}");
    }
    Ok(out)
}

/// Renders the token grid of the first `n` rows (all rows when `None`) as
/// tab-separated text: derived column names, then one surface token per
/// slot. This is the exact view the language model is trained on.
pub fn encode_dump(data: &Path, config: &PipelineConfig, n: Option<usize>) -> Result<String> {
    config.validate()?;
    let table = read_input(data, config, None)?;
    let codec = TableCodec::fit(&table, config.data.partition_size)?;
    let mut out = String::new();
    let names: Vec<String> = codec.layout.derived.iter().map(|d| d.name.clone()).collect();
    out.push_str(&names.join("\t"));
    out.push('\n');
    let limit = n.unwrap_or(table.n_rows()).min(table.n_rows());
    for row in table.rows.iter().take(limit) {
        let body = codec.encode_body(row)?;
        let mut cells = Vec::with_capacity(body.len());
        for id in body {
            let (_, token) = codec
                .vocab
                .token_of(id)
                .ok_or_else(|| Error::Model(format!("id {id} has no token")))?;
            cells.push(crate::ingest::escape_field(token));
        }
        out.push_str(&cells.join("\t"));
        out.push('\n');
    }
    Ok(out)
}

/// Root seed helper: a fresh seed drawn from entropy when the user gave
/// none, so every run is still reproducible from its recorded seed.
pub fn resolve_seed(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| rand::rng().random())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::toydata::{correlated_relational, gaussian_mixture_table};

    fn tiny_config() -> PipelineConfig {
        let mut cfg = PipelineConfig::default();
        cfg.model.d_model = 16;
        cfg.model.n_layers = 1;
        cfg.model.n_heads = 2;
        cfg.model.max_positions = 64;
        cfg.train.max_epochs = 2;
        cfg.train.eval_period = 2;
        cfg.train.batch_size = 16;
        cfg.bootstrap.rounds = 10;
        cfg
    }

    fn write_csv(dir: &Path, name: &str, table: &RawTable) -> PathBuf {
        let path = dir.join(name);
        write_table(table, &path, b',').unwrap();
        path
    }

    #[test]
    fn fit_then_sample_round_trips_through_the_artifact() {
        let tmp = tempfile::tempdir().unwrap();
        let data = write_csv(tmp.path(), "data.csv", &gaussian_mixture_table(80, 5));
        let cfg = tiny_config();
        let outcome = fit(&data, &cfg, 11, &tmp.path().join("out")).unwrap();
        assert!(outcome.dir.join("model.ckpt").is_file());
        assert!(outcome.dir.join("config.toml").is_file());
        assert!(outcome.dir.join("train_report.txt").is_file());
        assert!(!outcome.render().is_empty());

        let s1 = sample(&outcome.dir, 12, Some(3), Some(&tmp.path().join("a.csv"))).unwrap();
        let s2 = sample(&outcome.dir, 12, Some(3), Some(&tmp.path().join("b.csv"))).unwrap();
        assert_eq!(s1.report.produced, 12);
        let a = std::fs::read(&s1.out_path).unwrap();
        let b = std::fs::read(&s2.out_path).unwrap();
        assert_eq!(a, b, "same seed must give identical sample files");

        // The sampled file parses under the fitted schema.
        let back = read_table_with(&s1.out_path, b',', None, &InferOptions::default()).unwrap();
        assert_eq!(back.n_rows(), 12);
        assert_eq!(back.schema.names(), vec!["x", "y", "color", "grade"]);
    }

    #[test]
    fn ignore_columns_are_dropped_before_fitting() {
        let tmp = tempfile::tempdir().unwrap();
        let mut table = gaussian_mixture_table(60, 6);
        // Prepend a row-id column that must not be modelled.
        let mut columns = vec![crate::ingest::ColumnSpec::new(
            "rowid",
            crate::ingest::ColumnKind::Categorical,
            0,
        )];
        columns.extend(table.schema.columns.iter().cloned());
        let rows: Vec<Vec<String>> = table
            .rows
            .drain(..)
            .enumerate()
            .map(|(i, mut r)| {
                let mut out = vec![format!("r{i}")];
                out.append(&mut r);
                out
            })
            .collect();
        let keyed = RawTable::new(TableSchema::new(columns).unwrap(), rows).unwrap();
        let data = write_csv(tmp.path(), "keyed.csv", &keyed);

        let mut cfg = tiny_config();
        cfg.data.ignore_columns = vec!["rowid".into()];
        let outcome = fit(&data, &cfg, 4, &tmp.path().join("out")).unwrap();
        let art = artifact::load_parent(&outcome.dir).unwrap();
        assert_eq!(art.codec.schema.names(), vec!["x", "y", "color", "grade"]);
    }

    #[test]
    fn relational_fit_and_sampling_produce_linked_rows() {
        let tmp = tempfile::tempdir().unwrap();
        let toy = correlated_relational(40, 2.0, 8);
        let parent_path = write_csv(tmp.path(), "parent.csv", &toy.parent);
        let child_path = write_csv(tmp.path(), "child.csv", &toy.child);

        let mut cfg = tiny_config();
        cfg.data.ignore_columns = vec!["pid".into()];
        cfg.data.output_max_length = 64;
        let parent_fit = fit(&parent_path, &cfg, 21, &tmp.path().join("out")).unwrap();
        let child_fit = fit_child(
            &child_path,
            &parent_path,
            &parent_fit.dir,
            "pid",
            None,
            22,
            &tmp.path().join("out"),
        )
        .unwrap();
        assert!(child_fit.dir.join("encoder.ckpt").is_file());
        assert!(child_fit.dir.join("parent_schema.txt").is_file());

        // Sampling against the keyed real parents reuses their keys.
        let s = sample_relational(
            &child_fit.dir,
            &parent_path,
            Some(10),
            Some(7),
            Some(&tmp.path().join("kids.csv")),
        )
        .unwrap();
        assert!(s.parents_path.is_none());
        let kids = read_table_with(&s.out_path, b',', None, &InferOptions::default()).unwrap();
        assert_eq!(kids.schema.names()[0], "pid");
        let valid_keys: std::collections::BTreeSet<&str> =
            toy.parent.rows.iter().take(10).map(|r| r[0].as_str()).collect();
        for row in &kids.rows {
            assert!(valid_keys.contains(row[0].as_str()), "orphan key {}", row[0]);
        }

        // A keyless parent file gets fresh keys and a keyed parents file.
        let keyless = toy.parent.without_columns(&["pid"]).unwrap();
        let keyless_path = write_csv(tmp.path(), "keyless.csv", &keyless);
        let s2 = sample_relational(
            &child_fit.dir,
            &keyless_path,
            Some(5),
            Some(7),
            Some(&tmp.path().join("kids2.csv")),
        )
        .unwrap();
        let parents_file = s2.parents_path.expect("fresh keys need a parents file");
        let keyed = read_table_with(&parents_file, b',', None, &InferOptions::default()).unwrap();
        assert_eq!(keyed.schema.names(), vec!["pid", "pvalue"]);
        assert_eq!(keyed.n_rows(), 5);
        assert_eq!(keyed.rows[0][0], "p0");
    }

    #[test]
    fn evaluate_renders_all_sections() {
        let tmp = tempfile::tempdir().unwrap();
        let real = gaussian_mixture_table(120, 31);
        let synthetic = gaussian_mixture_table(120, 32);
        let real_path = write_csv(tmp.path(), "real.csv", &real);
        let syn_path = write_csv(tmp.path(), "syn.csv", &synthetic);
        let report = evaluate(
            &EvaluateArgs {
                real: &real_path,
                synthetic: &syn_path,
                parent_real: None,
                parent_synthetic: None,
                join_on: None,
                folds: 3,
            },
            &PipelineConfig::default(),
            9,
        )
        .unwrap();
        assert!(report.contains("logistic detection"), "{report}");
        assert!(report.contains("discriminator measure"), "{report}");
        assert!(report.contains("distance audit"), "{report}");
        assert!(report.contains("statistic:"), "{report}");
        assert!(report.contains("score:"), "{report}");
    }

    #[test]
    fn evaluate_requires_the_full_relational_triple() {
        let tmp = tempfile::tempdir().unwrap();
        let real = gaussian_mixture_table(30, 1);
        let p = write_csv(tmp.path(), "r.csv", &real);
        let err = evaluate(
            &EvaluateArgs {
                real: &p,
                synthetic: &p,
                parent_real: Some(&p),
                parent_synthetic: None,
                join_on: None,
                folds: 3,
            },
            &PipelineConfig::default(),
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }

    #[test]
    fn audit_matches_the_first_bootstrap_round() {
        let tmp = tempfile::tempdir().unwrap();
        let table = gaussian_mixture_table(100, 13);
        let path = write_csv(tmp.path(), "t.csv", &table);
        let cfg = PipelineConfig::default();
        let text = audit_dcr(&path, &cfg, 77).unwrap();
        let stat_line = text
            .lines()
            .find(|l| l.starts_with("statistic "))
            .expect("statistic line");
        let stat: f64 = stat_line.trim_start_matches("statistic ").parse().unwrap();

        let metric = RowDistanceMetric::fit(&table).unwrap();
        let rows = metric.intern_all(&[&table]).unwrap().remove(0);
        let boot = crate::overfit::bootstrap_threshold(
            &metric,
            &rows,
            &crate::overfit::BootstrapConfig { rounds: 1, ..Default::default() },
            &QuantileSet::default(),
            77,
        )
        .unwrap();
        assert_eq!(stat, boot.stats[0]);
        assert!(text.lines().filter(|l| l.starts_with("d_h ")).count() > 0);
        assert!(text.lines().filter(|l| l.starts_with("probe ")).count() == 20);
    }

    #[test]
    fn encode_dump_shows_the_token_grid() {
        let tmp = tempfile::tempdir().unwrap();
        let table = gaussian_mixture_table(10, 2);
        let path = write_csv(tmp.path(), "t.csv", &table);
        let dump = encode_dump(&path, &PipelineConfig::default(), Some(3)).unwrap();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 4);
        let header: Vec<&str> = lines[0].split('\t').collect();
        assert!(header.contains(&"color"));
        assert!(header.iter().any(|h| h.starts_with("x[")));
        // Every data line has exactly as many cells as the header.
        for line in &lines[1..] {
            assert_eq!(line.split('\t').count(), header.len());
        }
    }
}

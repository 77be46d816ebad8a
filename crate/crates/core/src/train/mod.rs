//! Training loops for the row model and the child-sequence model.
//!
//! Both loops share one engine: shuffled minibatches of next-token
//! prediction with target masking, an adaptive optimizer with decoupled
//! weight decay and linear warmup, and a periodic overfitting evaluation
//! that drives the early-stop controller. The controller's threshold is
//! calibrated once, before any training, by bootstrapping the `q_delta`
//! statistic on synthetic splits of the training table; every
//! `eval_period` epochs the current model generates a fresh sample whose
//! distance-to-closest-record profile is compared against genuinely
//! held-out rows. The child loop conditions every sequence on its parent
//! row's encoder states, which are computed once up front from the fitted
//! parent model — the parent model itself is borrowed immutably and cannot
//! change during child training.

pub mod adamw;
pub mod early_stop;

pub use adamw::{warmup_scale, AdamW, AdamWConfig};
pub use early_stop::{Decision, EarlyStop, EarlyStopEvent};

use crate::encode::{ChildSequence, TableCodec, MASK, N_SPECIAL};
use crate::error::{Error, Result};
use crate::ingest::RawTable;
use crate::nnet::{ce_loss_and_grad, tensor::Matrix, TransformerModel, IGNORE_TARGET};
use crate::overfit::{
    bootstrap_threshold, dcr, q_delta, BootstrapConfig, Cell, QuantileSet, RowDistanceMetric,
};
use crate::rng::{substream, Domain};
use crate::sample::{sample_children, sample_parent, SampleConfig};
use crate::scalar::Scalar;
use rand::seq::SliceRandom;
use rand::Rng;

/// Training-loop controls.
#[derive(Debug, Clone, Copy)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub max_epochs: usize,
    /// Probability of replacing a value target with MASK.
    pub mask_rate: f64,
    /// Epochs between overfitting evaluations.
    pub eval_period: usize,
    /// Consecutive failed evaluations tolerated before stopping.
    pub grace: usize,
    pub weight_decay: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            learning_rate: 5e-4,
            max_epochs: 100,
            mask_rate: 0.1,
            eval_period: 5,
            grace: 2,
            weight_decay: 0.01,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(Error::Config("max_epochs must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.mask_rate) {
            return Err(Error::Config(format!(
                "mask_rate {} must lie in [0, 1)",
                self.mask_rate
            )));
        }
        if self.eval_period == 0 {
            return Err(Error::Config("eval_period must be at least 1".into()));
        }
        if self.grace == 0 {
            return Err(Error::Config("grace must be at least 1".into()));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }

    fn optimizer(&self) -> AdamWConfig {
        AdamWConfig {
            learning_rate: self.learning_rate,
            weight_decay: self.weight_decay,
            ..AdamWConfig::default()
        }
    }
}

/// Replaces each value target with MASK independently with probability
/// `mask_rate`. Special ids (frame tokens) and ignored positions are never
/// masked, and inputs are untouched — masking regularizes only what the
/// model is asked to predict.
pub fn apply_target_masking(
    targets: &mut [u32],
    mask_rate: f64,
    rng: &mut impl Rng,
) -> Result<()> {
    if !(0.0..1.0).contains(&mask_rate) {
        return Err(Error::Config(format!(
            "mask_rate {mask_rate} must lie in [0, 1)"
        )));
    }
    if mask_rate == 0.0 {
        return Ok(());
    }
    for t in targets.iter_mut() {
        if *t == IGNORE_TARGET || *t < N_SPECIAL {
            continue;
        }
        if rng.random::<f64>() < mask_rate {
            *t = MASK;
        }
    }
    Ok(())
}

/// What a finished training run reports.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub epochs_run: usize,
    /// Whether the overfitting monitor terminated training.
    pub stopped_early: bool,
    /// Epoch of the restored checkpoint; None when no evaluation passed
    /// (final weights kept).
    pub restored_epoch: Option<usize>,
    /// Evaluations ran but none fell below the threshold.
    pub never_passed: bool,
    pub threshold: f64,
    /// Token-mean loss per epoch, in order.
    pub loss_curve: Vec<f64>,
    pub final_loss: f64,
    pub events: Vec<EarlyStopEvent>,
}

/// One training sequence: its tokens and, for child training, the index of
/// the parent context it conditions on.
struct TrainItem {
    context: Option<usize>,
    tokens: Vec<u32>,
}

/// Periodic overfitting evaluation. Draws a generated table of `k = ⌊ρn⌋`
/// rows from the sampler, splits the training rows (without replacement)
/// into a hold-out part of size `k` and a reference part of size `n − 2k`
/// — the same three-way geometry the bootstrap calibrated on, with the
/// middle part unused — and returns the `q_delta` statistic of generated
/// versus held-out distance profiles, both measured against the reference
/// part.
fn evaluate_epoch<T: Scalar, S>(
    model: &TransformerModel<T>,
    train_table: &RawTable,
    metric: &RowDistanceMetric,
    rho: f64,
    qs: &QuantileSet,
    sampler: &mut S,
    epoch: usize,
    seed: u64,
) -> Result<f64>
where
    S: FnMut(&TransformerModel<T>, usize, u64) -> Result<RawTable>,
{
    let n = train_table.n_rows();
    let k = ((rho * n as f64).floor() as usize).max(1);
    if 2 * k >= n {
        return Err(Error::Data(format!(
            "{n} rows are too few for three disjoint nonempty samples (two of {k} rows plus a remainder)"
        )));
    }
    let mut rng = substream(seed, Domain::EvalSampling, epoch as u64);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let sampler_seed: u64 = rng.random();
    let generated = sampler(model, k, sampler_seed)?;
    if generated.n_rows() == 0 {
        return Err(Error::Sampling(
            "evaluation sampler yielded zero valid rows".into(),
        ));
    }
    let interned = metric.intern_all(&[train_table, &generated])?;
    let (train_cells, gen_cells) = (&interned[0], &interned[1]);
    let pick = |range: &[usize]| -> Vec<Vec<Cell>> {
        range.iter().map(|&i| train_cells[i].clone()).collect()
    };
    let s_h = pick(&indices[..k]);
    let s_tr = pick(&indices[2 * k..]);
    let d_h = dcr(metric, &s_tr, &s_h).concat();
    let d_g = dcr(metric, &s_tr, gen_cells).concat();
    Ok(q_delta(&d_h, &d_g, qs))
}

/// The shared epoch engine; see the module docs for the contract.
#[allow(clippy::too_many_arguments)]
fn run_training<T: Scalar, S>(
    model: &mut TransformerModel<T>,
    items: &[TrainItem],
    contexts: &[Matrix<T>],
    train_table: &RawTable,
    metric: &RowDistanceMetric,
    threshold: f64,
    rho: f64,
    cfg: &TrainConfig,
    sampler: &mut S,
    seed: u64,
) -> Result<TrainReport>
where
    S: FnMut(&TransformerModel<T>, usize, u64) -> Result<RawTable>,
{
    let qs = QuantileSet::default();
    let mut opt = AdamW::new(cfg.optimizer(), model)?;
    let batches_per_epoch = items.len().div_ceil(cfg.batch_size);
    let total_steps = cfg.max_epochs * batches_per_epoch;
    let mut stop: EarlyStop<TransformerModel<T>> = EarlyStop::new(threshold, cfg.grace)?;
    let mut loss_curve = Vec::with_capacity(cfg.max_epochs);
    let mut stopped_early = false;
    let mut epochs_run = 0;
    let mut global_step = 0usize;

    for epoch in 1..=cfg.max_epochs {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.shuffle(&mut substream(seed, Domain::Shuffle, epoch as u64));
        let mut mask_rng = substream(seed, Domain::Masking, epoch as u64);
        let mut epoch_loss_sum = 0.0;
        let mut epoch_tokens = 0usize;

        for batch in order.chunks(cfg.batch_size) {
            let mut members = Vec::with_capacity(batch.len());
            let mut batch_loss_sum = 0.0;
            let mut batch_tokens = 0usize;
            for &i in batch {
                let item = &items[i];
                let len = item.tokens.len();
                let inputs = &item.tokens[..len - 1];
                let mut targets = item.tokens[1..].to_vec();
                apply_target_masking(&mut targets, cfg.mask_rate, &mut mask_rng)?;
                let ctx = item.context.map(|ci| &contexts[ci]);
                let trace = model.forward(inputs, ctx)?;
                let (loss_sum, count, dlogits) = ce_loss_and_grad(&trace.logits, &targets, 1.0)?;
                batch_loss_sum += loss_sum;
                batch_tokens += count;
                members.push((trace, dlogits, ctx));
            }
            if batch_tokens == 0 {
                continue;
            }
            let batch_loss = batch_loss_sum / batch_tokens as f64;
            if !batch_loss.is_finite() {
                return Err(Error::Divergence(format!(
                    "non-finite loss {batch_loss} at epoch {epoch}, step {global_step}"
                )));
            }
            let inv = T::from_f64_lossy(1.0 / batch_tokens as f64);
            let mut grads = model.zeros_like();
            for (trace, mut dlogits, ctx) in members {
                for x in dlogits.data.iter_mut() {
                    *x *= inv;
                }
                model.backward(&trace, &dlogits, ctx, &mut grads);
            }
            opt.step(model, &grads, warmup_scale(global_step, total_steps));
            global_step += 1;
            epoch_loss_sum += batch_loss_sum;
            epoch_tokens += batch_tokens;
        }

        loss_curve.push(epoch_loss_sum / epoch_tokens.max(1) as f64);
        epochs_run = epoch;

        if epoch % cfg.eval_period == 0 {
            let stat = evaluate_epoch(model, train_table, metric, rho, &qs, sampler, epoch, seed)?;
            if stop.observe(epoch, stat, || model.clone()) == Decision::Stop {
                stopped_early = true;
                break;
            }
        }
    }

    let (best, events) = stop.finish();
    let never_passed = !events.is_empty() && best.is_none();
    let restored_epoch = match best {
        Some((epoch, checkpoint)) => {
            *model = checkpoint;
            Some(epoch)
        }
        None => None,
    };
    Ok(TrainReport {
        epochs_run,
        stopped_early,
        restored_epoch,
        never_passed,
        threshold,
        final_loss: loss_curve.last().copied().unwrap_or(f64::NAN),
        loss_curve,
        events,
    })
}

/// Fits the row model on a table: bootstrap-calibrates the overfitting
/// threshold, then runs masked next-token training with periodic
/// evaluations, returning the checkpoint dictated by the early-stop
/// contract (the most recent passing one; final weights when none passed).
pub fn train_parent<T: Scalar>(
    model: &mut TransformerModel<T>,
    table: &RawTable,
    codec: &TableCodec,
    cfg: &TrainConfig,
    boot: &BootstrapConfig,
    sample_cfg: &SampleConfig,
    seed: u64,
) -> Result<TrainReport> {
    cfg.validate()?;
    if model.config.vocab_size != codec.vocab.n_tokens() {
        return Err(Error::Model(format!(
            "model vocabulary {} does not match the codec vocabulary {}",
            model.config.vocab_size,
            codec.vocab.n_tokens()
        )));
    }
    if table.n_rows() == 0 {
        return Err(Error::Data("nothing to train on: the table is empty".into()));
    }
    let items: Vec<TrainItem> = codec
        .encode_table(table)?
        .into_iter()
        .map(|tokens| TrainItem {
            context: None,
            tokens,
        })
        .collect();
    let metric = RowDistanceMetric::fit(table)?;
    let interned = metric.intern_all(&[table])?;
    let qs = QuantileSet::default();
    let calibration = bootstrap_threshold(&metric, &interned[0], boot, &qs, seed)?;
    let mut sampler = |m: &TransformerModel<T>, n: usize, s: u64| {
        sample_parent(m, codec, n, sample_cfg, s).map(|(t, _)| t)
    };
    run_training(
        model,
        &items,
        &[],
        table,
        &metric,
        calibration.threshold,
        boot.rho,
        cfg,
        &mut sampler,
        seed,
    )
}

/// Fits the child-sequence model. The fitted parent model serves as a
/// frozen encoder: every parent row's encoder states are computed once up
/// front, the optimizer sees only the decoder's parameters, and the parent
/// model is borrowed immutably for the whole run. The overfitting monitor
/// works on decoded child rows, sampled through the relational state
/// machine from a shuffled subset of parents each evaluation.
#[allow(clippy::too_many_arguments)]
pub fn train_child<T: Scalar>(
    decoder: &mut TransformerModel<T>,
    encoder: &TransformerModel<T>,
    parent_codec: &TableCodec,
    parents: &RawTable,
    child_codec: &TableCodec,
    child_table: &RawTable,
    sequences: &[ChildSequence],
    output_max_length: usize,
    cfg: &TrainConfig,
    boot: &BootstrapConfig,
    sample_cfg: &SampleConfig,
    seed: u64,
) -> Result<TrainReport> {
    cfg.validate()?;
    if !decoder.config.cross_attention {
        return Err(Error::Model(
            "child training needs a cross-attention decoder".into(),
        ));
    }
    if decoder.config.vocab_size != child_codec.vocab.n_tokens() {
        return Err(Error::Model(format!(
            "decoder vocabulary {} does not match the child codec vocabulary {}",
            decoder.config.vocab_size,
            child_codec.vocab.n_tokens()
        )));
    }
    if child_table.n_rows() == 0 {
        return Err(Error::Data(
            "nothing to train on: the child table is empty".into(),
        ));
    }
    if let Some(longest) = sequences.iter().map(|s| s.tokens.len()).max() {
        if longest > decoder.config.max_positions + 1 {
            return Err(Error::Model(format!(
                "child sequences of length {longest} exceed the decoder's {} positions",
                decoder.config.max_positions
            )));
        }
    }

    // one encoder pass per parent row, reused across all epochs
    let mut contexts = Vec::with_capacity(parents.n_rows());
    for row in &parents.rows {
        let tokens = parent_codec.encode_row(row)?;
        contexts.push(encoder.encode_context(&tokens)?);
    }

    let items: Vec<TrainItem> = sequences
        .iter()
        .map(|s| TrainItem {
            context: Some(s.parent_index),
            tokens: s.tokens.clone(),
        })
        .collect();

    let metric = RowDistanceMetric::fit(child_table)?;
    let interned = metric.intern_all(&[child_table])?;
    let qs = QuantileSet::default();
    let calibration = bootstrap_threshold(&metric, &interned[0], boot, &qs, seed)?;

    let key_name = "__parent";
    let mut sampler = |m: &TransformerModel<T>, n: usize, s: u64| -> Result<RawTable> {
        // visit the parents in a fresh seeded order, then keep the first n
        // generated child rows
        let mut rng = substream(s, Domain::EvalSampling, 0);
        let mut order: Vec<usize> = (0..parents.n_rows()).collect();
        order.shuffle(&mut rng);
        let shuffled = RawTable {
            schema: parents.schema.clone(),
            rows: order.iter().map(|&i| parents.rows[i].clone()).collect(),
        };
        let keys: Vec<String> = (0..shuffled.n_rows()).map(|i| i.to_string()).collect();
        let inner_seed: u64 = rng.random();
        let (with_keys, _) = sample_children(
            encoder,
            parent_codec,
            m,
            child_codec,
            &shuffled,
            &keys,
            key_name,
            output_max_length,
            sample_cfg,
            inner_seed,
        )?;
        let mut out = with_keys.without_columns(&[key_name])?;
        out.rows.truncate(n);
        Ok(out)
    };

    run_training(
        decoder,
        &items,
        &contexts,
        child_table,
        &metric,
        calibration.threshold,
        boot.rho,
        cfg,
        &mut sampler,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encode::build_child_sequences;
    use crate::ingest::{ColumnKind, ColumnSpec, TableSchema};
    use crate::nnet::ModelConfig;

    #[test]
    fn masking_hits_the_requested_rate() {
        let mut rng = substream(99, Domain::Masking, 0);
        let n = 1_000_000usize;
        let mut targets: Vec<u32> = (0..n).map(|i| N_SPECIAL + (i % 50) as u32).collect();
        apply_target_masking(&mut targets, 0.1, &mut rng).unwrap();
        let masked = targets.iter().filter(|&&t| t == MASK).count();
        let fraction = masked as f64 / n as f64;
        assert!(
            (fraction - 0.1).abs() < 0.003,
            "masked fraction {fraction}"
        );
    }

    #[test]
    fn masking_skips_special_and_ignored_positions() {
        let mut rng = substream(1, Domain::Masking, 0);
        let mut targets = vec![0, 1, 2, 3, 4, IGNORE_TARGET];
        let before = targets.clone();
        apply_target_masking(&mut targets, 0.999, &mut rng).unwrap();
        assert_eq!(targets, before);
    }

    #[test]
    fn zero_mask_rate_changes_nothing() {
        let mut rng = substream(1, Domain::Masking, 1);
        let mut targets: Vec<u32> = (5..200).collect();
        let before = targets.clone();
        apply_target_masking(&mut targets, 0.0, &mut rng).unwrap();
        assert_eq!(targets, before);
    }

    #[test]
    fn out_of_range_mask_rates_are_rejected() {
        let mut rng = substream(1, Domain::Masking, 2);
        let mut targets = vec![7u32];
        assert!(apply_target_masking(&mut targets, 1.0, &mut rng).is_err());
        assert!(apply_target_masking(&mut targets, -0.1, &mut rng).is_err());
    }

    fn toy_table(n: usize) -> RawTable {
        let schema = TableSchema::new(vec![
            ColumnSpec::new("x", ColumnKind::Numeric, 0),
            ColumnSpec::new("c", ColumnKind::Categorical, 0),
        ])
        .unwrap();
        let rows: Vec<Vec<String>> = (0..n)
            .map(|i| {
                vec![
                    ((i * 7) % 30).to_string(),
                    ["a", "b", "c"][i % 3].to_string(),
                ]
            })
            .collect();
        RawTable::new(schema, rows).unwrap()
    }

    fn toy_model(vocab: usize, cross: bool, seed: u64) -> TransformerModel<f64> {
        TransformerModel::init(
            ModelConfig {
                vocab_size: vocab,
                d_model: 16,
                n_layers: 1,
                n_heads: 2,
                max_positions: 64,
                cross_attention: cross,
            },
            seed,
        )
        .unwrap()
    }

    fn quick_cfg(max_epochs: usize) -> TrainConfig {
        TrainConfig {
            batch_size: 16,
            learning_rate: 3e-3,
            max_epochs,
            mask_rate: 0.1,
            eval_period: 5,
            grace: 2,
            weight_decay: 0.01,
        }
    }

    fn quick_boot() -> BootstrapConfig {
        BootstrapConfig {
            rho: 0.165,
            alpha: 0.95,
            rounds: 30,
        }
    }

    #[test]
    fn training_reduces_the_loss_on_a_toy_table() {
        let table = toy_table(200);
        let codec = TableCodec::fit(&table, 1).unwrap();
        let mut model = toy_model(codec.vocab.n_tokens(), false, 7);
        let report = train_parent(
            &mut model,
            &table,
            &codec,
            &quick_cfg(8),
            &quick_boot(),
            &SampleConfig::default(),
            1234,
        )
        .unwrap();
        assert!(report.loss_curve.len() >= 2);
        assert!(
            report.final_loss < report.loss_curve[0],
            "loss went {} -> {}",
            report.loss_curve[0],
            report.final_loss
        );
    }

    #[test]
    fn same_seed_gives_identical_loss_curves() {
        let table = toy_table(80);
        let codec = TableCodec::fit(&table, 1).unwrap();
        let run = || {
            let mut model = toy_model(codec.vocab.n_tokens(), false, 7);
            train_parent(
                &mut model,
                &table,
                &codec,
                &quick_cfg(6),
                &quick_boot(),
                &SampleConfig::default(),
                55,
            )
            .map(|r| (r.loss_curve, model))
        };
        let (curve_a, model_a) = run().unwrap();
        let (curve_b, model_b) = run().unwrap();
        assert_eq!(curve_a, curve_b);
        for ((na, _, pa), (nb, _, pb)) in model_a.params().iter().zip(model_b.params().iter()) {
            assert_eq!(na, nb);
            assert_eq!(pa.data, pb.data, "parameter {na} differs");
        }
    }

    #[test]
    fn child_training_runs_and_loss_decreases() {
        let parents = toy_table(30);
        let parent_codec = TableCodec::fit(&parents, 1).unwrap();
        let encoder = toy_model(parent_codec.vocab.n_tokens(), false, 3);

        // child table: key + one categorical copied loosely from the parent
        let child_schema = TableSchema::new(vec![
            ColumnSpec::new("k", ColumnKind::Categorical, 0),
            ColumnSpec::new("v", ColumnKind::Categorical, 0),
        ])
        .unwrap();
        let mut child_rows = Vec::new();
        for i in 0..30 {
            for _ in 0..(i % 3) {
                child_rows.push(vec![i.to_string(), ["p", "q"][i % 2].to_string()]);
            }
        }
        let child_with_key = RawTable::new(child_schema, child_rows).unwrap();

        // keyed parent view for sequence building
        let keyed_schema = TableSchema::new(vec![
            ColumnSpec::new("k", ColumnKind::Categorical, 0),
            ColumnSpec::new("x", ColumnKind::Numeric, 0),
            ColumnSpec::new("c", ColumnKind::Categorical, 0),
        ])
        .unwrap();
        let keyed_rows: Vec<Vec<String>> = parents
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut row = vec![i.to_string()];
                row.extend(r.iter().cloned());
                row
            })
            .collect();
        let keyed_parents = RawTable::new(keyed_schema, keyed_rows).unwrap();

        let child_table = child_with_key.without_columns(&["k"]).unwrap();
        let child_codec = TableCodec::fit(&child_table, 1).unwrap();
        let max_len = 2 + 6 * (child_codec.row_width() + 2);
        let sequences = build_child_sequences(
            &keyed_parents,
            &child_with_key,
            "k",
            &child_codec,
            max_len,
        )
        .unwrap();
        assert_eq!(sequences.len(), 30);
        assert!(sequences.iter().any(|s| s.n_rows == 0), "some parents are childless");

        let mut decoder = toy_model(child_codec.vocab.n_tokens(), true, 5);
        let encoder_before: Vec<Vec<u64>> = encoder
            .params()
            .iter()
            .map(|(_, _, p)| p.data.iter().map(|x| x.to_bits_u64()).collect())
            .collect();
        let report = train_child(
            &mut decoder,
            &encoder,
            &parent_codec,
            &parents,
            &child_codec,
            &child_table,
            &sequences,
            max_len,
            &quick_cfg(6),
            &quick_boot(),
            &SampleConfig::default(),
            777,
        )
        .unwrap();
        assert!(report.final_loss < report.loss_curve[0]);
        let encoder_after: Vec<Vec<u64>> = encoder
            .params()
            .iter()
            .map(|(_, _, p)| p.data.iter().map(|x| x.to_bits_u64()).collect())
            .collect();
        assert_eq!(encoder_before, encoder_after, "encoder stayed bit-identical");
    }

    #[test]
    fn divergent_learning_rate_reports_divergence() {
        let table = toy_table(60);
        let codec = TableCodec::fit(&table, 1).unwrap();
        let mut model = toy_model(codec.vocab.n_tokens(), false, 7);
        let cfg = TrainConfig {
            learning_rate: 1e18,
            max_epochs: 30,
            ..quick_cfg(30)
        };
        let err = train_parent(
            &mut model,
            &table,
            &codec,
            &cfg,
            &quick_boot(),
            &SampleConfig::default(),
            9,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Divergence(_)), "{err}");
    }

    #[test]
    fn empty_table_is_rejected() {
        let table = toy_table(5);
        let codec = TableCodec::fit(&table, 1).unwrap();
        let empty = RawTable::new(table.schema.clone(), Vec::new()).unwrap();
        let mut model = toy_model(codec.vocab.n_tokens(), false, 7);
        assert!(train_parent(
            &mut model,
            &empty,
            &codec,
            &quick_cfg(2),
            &quick_boot(),
            &SampleConfig::default(),
            9,
        )
        .is_err());
    }
}

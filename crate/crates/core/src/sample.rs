//! Constrained autoregressive sampling.
//!
//! Generation never relies on the model learning the row grammar: at every
//! step the logits are first restricted to the set of ids that are legal in
//! the current position (all others forced to −∞), so emitted sequences are
//! well-formed by construction. For flat rows the legal set is the fitted
//! per-position vocabulary domain; for multi-row child sequences a small
//! state machine walks the `[BOS, (ROWSEP, row, ROWSEP)…, EOS]` framing and
//! additionally enforces the output length budget. MASK and PAD are never
//! legal anywhere. The only way a sampled row can still fail to decode is
//! semantic (a numeric value mixing missing and digit chunks); such rows are
//! counted and retried (parents) or dropped (children).

use crate::encode::{TableCodec, BOS, EOS, ROWSEP};
use crate::error::{Error, Result};
use crate::ingest::{ColumnKind, ColumnSpec, RawTable, TableSchema};
use crate::nnet::{tensor::Matrix, TransformerModel};
use crate::rng::{substream, Domain};
use crate::scalar::Scalar;
use rand::Rng;

/// Sampling controls.
#[derive(Debug, Clone, Copy)]
pub struct SampleConfig {
    /// Softmax temperature; 1 samples the learned distribution unchanged.
    pub temperature: f64,
    /// Total row attempts allowed per requested row.
    pub retry_factor: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            temperature: 1.0,
            retry_factor: 10,
        }
    }
}

impl SampleConfig {
    fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature {} must be a positive finite number",
                self.temperature
            )));
        }
        if self.retry_factor == 0 {
            return Err(Error::Config("retry_factor must be at least 1".into()));
        }
        Ok(())
    }
}

/// What a sampling run did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleReport {
    pub requested: usize,
    pub produced: usize,
    /// Sampled rows that failed to decode.
    pub invalid_count: usize,
    pub attempts: usize,
    pub seed: u64,
}

/// Forces every logit outside `allowed` to −∞, in place. Entries inside the
/// set are untouched, so the subsequent softmax renormalizes over exactly
/// the allowed ids.
pub fn constrain_logits(logits: &mut [f64], allowed: &[u32]) -> Result<()> {
    if allowed.is_empty() {
        return Err(Error::Sampling("empty allowed set".into()));
    }
    let mut keep = vec![false; logits.len()];
    for &id in allowed {
        let i = id as usize;
        if i >= logits.len() {
            return Err(Error::Sampling(format!(
                "allowed id {id} lies outside the {}-entry vocabulary",
                logits.len()
            )));
        }
        keep[i] = true;
    }
    for (l, k) in logits.iter_mut().zip(keep) {
        if !k {
            *l = f64::NEG_INFINITY;
        }
    }
    Ok(())
}

/// Tempered softmax over logits that may contain −∞ entries. The result
/// sums to 1 and places zero mass on −∞ entries.
pub fn softmax_probabilities(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::Sampling("no admissible token".into()));
    }
    let weights: Vec<f64> = logits
        .iter()
        .map(|&l| {
            if l == f64::NEG_INFINITY {
                0.0
            } else {
                ((l - m) / temperature).exp()
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Constrained tempered softmax: the distribution `sample_from_logits`
/// draws from after [`constrain_logits`].
pub fn constrained_probabilities(
    logits: &[f64],
    allowed: &[u32],
    temperature: f64,
) -> Result<Vec<f64>> {
    let mut l = logits.to_vec();
    constrain_logits(&mut l, allowed)?;
    softmax_probabilities(&l, temperature)
}

/// Draws one index from the tempered softmax of the logits by inverse-CDF
/// on a single uniform draw. −∞ entries carry zero mass.
pub fn sample_from_logits(logits: &[f64], temperature: f64, rng: &mut impl Rng) -> Result<usize> {
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::Config(format!(
            "temperature {temperature} must be a positive finite number"
        )));
    }
    let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return Err(Error::Sampling("no admissible token".into()));
    }
    let weights: Vec<f64> = logits
        .iter()
        .map(|&l| {
            if l == f64::NEG_INFINITY {
                0.0
            } else {
                ((l - m) / temperature).exp()
            }
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = None;
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last_positive = Some(i);
            if u < acc {
                return Ok(i);
            }
        }
    }
    // floating-point edge: u landed on the very top of the CDF
    Ok(last_positive.expect("some weight is positive"))
}

/// Forward the prefix and return the logits of its last position as f64.
fn last_logits<T: Scalar>(
    model: &TransformerModel<T>,
    tokens: &[u32],
    context: Option<&Matrix<T>>,
) -> Result<Vec<f64>> {
    let trace = model.forward(tokens, context)?;
    let last = trace.logits.row(trace.logits.rows - 1);
    Ok(last.iter().map(|v| v.to_f64_lossy()).collect())
}

/// Constrain, draw, and assert the draw landed inside the allowed set.
fn constrained_draw(
    logits: &mut [f64],
    allowed: &[u32],
    temperature: f64,
    rng: &mut impl Rng,
) -> Result<u32> {
    constrain_logits(logits, allowed)?;
    let picked = sample_from_logits(logits, temperature, rng)? as u32;
    assert!(
        allowed.contains(&picked),
        "constraint violation: drew id {picked}"
    );
    Ok(picked)
}

fn check_model_matches<T: Scalar>(model: &TransformerModel<T>, codec: &TableCodec) -> Result<()> {
    if model.config.vocab_size != codec.vocab.n_tokens() {
        return Err(Error::Model(format!(
            "model vocabulary {} does not match the codec vocabulary {}",
            model.config.vocab_size,
            codec.vocab.n_tokens()
        )));
    }
    Ok(())
}

/// Samples `n` rows from a fitted row model under per-position vocabulary
/// constraints. Rows that fail to decode are replaced by fresh attempts;
/// the total attempt budget is `retry_factor · n`. Attempt `a` draws from
/// the substream `(seed, Sampling, a)`.
pub fn sample_parent<T: Scalar>(
    model: &TransformerModel<T>,
    codec: &TableCodec,
    n: usize,
    cfg: &SampleConfig,
    seed: u64,
) -> Result<(RawTable, SampleReport)> {
    cfg.validate()?;
    check_model_matches(model, codec)?;
    if codec.seq_len() > model.config.max_positions {
        return Err(Error::Model(format!(
            "row sequences of length {} exceed the model's {} positions",
            codec.seq_len(),
            model.config.max_positions
        )));
    }
    let width = codec.row_width();
    let domains: Vec<Vec<u32>> = (0..width).map(|c| codec.vocab.domain(c)).collect();
    if let Some(empty) = domains.iter().position(|d| d.is_empty()) {
        return Err(Error::Sampling(format!(
            "position {empty} has an empty vocabulary domain"
        )));
    }
    let budget = cfg.retry_factor.saturating_mul(n);
    let mut rows: Vec<Vec<String>> = Vec::with_capacity(n);
    let mut attempts = 0usize;
    let mut invalid = 0usize;
    while rows.len() < n {
        if attempts >= budget {
            return Err(Error::Sampling(format!(
                "retry budget exhausted: {attempts} attempts yielded {} of {n} rows",
                rows.len()
            )));
        }
        let mut rng = substream(seed, Domain::Sampling, attempts as u64);
        attempts += 1;
        let mut tokens = vec![BOS];
        for domain in &domains {
            let mut logits = last_logits(model, &tokens, None)?;
            tokens.push(constrained_draw(&mut logits, domain, cfg.temperature, &mut rng)?);
        }
        // after the last column the frame admits only EOS
        tokens.push(EOS);
        match codec.decode_row(&tokens) {
            Ok(cells) => rows.push(cells),
            Err(_) => invalid += 1,
        }
    }
    let table = RawTable {
        schema: codec.schema.clone(),
        rows,
    };
    let produced = table.n_rows();
    Ok((
        table,
        SampleReport {
            requested: n,
            produced,
            invalid_count: invalid,
            attempts,
            seed,
        },
    ))
}

/// Where the relational decoder stands inside the framed sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ChildState {
    /// After BOS or after a closing ROWSEP: may open another row or stop.
    Boundary,
    /// Inside a row, the index of the next value slot; at `width` the row
    /// must close.
    InRow(usize),
}

/// What the state machine permits next: a free choice over a set, or a
/// single forced id emitted without consulting the model.
enum Step<'a> {
    Free(&'a [u32]),
    Forced(u32),
}

/// Samples child rows for each parent row: the parent is encoded and run
/// through the frozen encoder once, then the decoder emits a framed
/// multi-row sequence under the relational state machine, stopping at EOS
/// or when the length budget `output_max_length` leaves no room for another
/// complete row. Parent `i` draws from the substream `(seed, Sampling, i)`.
///
/// Returns the child table with the key column first, each decoded child
/// row tagged with its parent's key. Child rows that fail to decode are
/// dropped and counted. The report counts parent sequences: one requested,
/// attempted, and produced per parent row.
#[allow(clippy::too_many_arguments)]
pub fn sample_children<T: Scalar>(
    encoder: &TransformerModel<T>,
    parent_codec: &TableCodec,
    decoder: &TransformerModel<T>,
    child_codec: &TableCodec,
    parents: &RawTable,
    keys: &[String],
    key_name: &str,
    output_max_length: usize,
    cfg: &SampleConfig,
    seed: u64,
) -> Result<(RawTable, SampleReport)> {
    cfg.validate()?;
    check_model_matches(encoder, parent_codec)?;
    check_model_matches(decoder, child_codec)?;
    if !decoder.config.cross_attention {
        return Err(Error::Model(
            "child decoding needs a cross-attention model".into(),
        ));
    }
    if keys.len() != parents.n_rows() {
        return Err(Error::Data(format!(
            "{} keys for {} parent rows",
            keys.len(),
            parents.n_rows()
        )));
    }
    if output_max_length < 2 {
        return Err(Error::Config(
            "output_max_length must be at least 2 (BOS and EOS)".into(),
        ));
    }
    if output_max_length > decoder.config.max_positions {
        return Err(Error::Config(format!(
            "output_max_length {} exceeds the decoder's {} positions",
            output_max_length, decoder.config.max_positions
        )));
    }
    if parent_codec.seq_len() > encoder.config.max_positions {
        return Err(Error::Model(format!(
            "parent sequences of length {} exceed the encoder's {} positions",
            parent_codec.seq_len(),
            encoder.config.max_positions
        )));
    }

    let width = child_codec.row_width();
    let domains: Vec<Vec<u32>> = (0..width).map(|c| child_codec.vocab.domain(c)).collect();
    if let Some(empty) = domains.iter().position(|d| d.is_empty()) {
        return Err(Error::Sampling(format!(
            "child position {empty} has an empty vocabulary domain"
        )));
    }
    let boundary: Vec<u32> = vec![ROWSEP, EOS];

    let mut schema_columns = vec![ColumnSpec::new(key_name, ColumnKind::Categorical, 0)];
    schema_columns.extend(child_codec.schema.columns.iter().cloned());
    let schema = TableSchema::new(schema_columns)?;

    let mut out_rows: Vec<Vec<String>> = Vec::new();
    let mut invalid = 0usize;
    for (pi, parent_row) in parents.rows.iter().enumerate() {
        let parent_tokens = parent_codec.encode_row(parent_row)?;
        let context = encoder.encode_context(&parent_tokens)?;
        let mut rng = substream(seed, Domain::Sampling, pi as u64);
        let mut tokens = vec![BOS];
        let mut state = ChildState::Boundary;
        loop {
            let step = match state {
                ChildState::Boundary => {
                    // a further row needs ROWSEP + width values + ROWSEP,
                    // and EOS still has to fit afterwards
                    if tokens.len() + width + 3 > output_max_length {
                        Step::Forced(EOS)
                    } else {
                        Step::Free(&boundary)
                    }
                }
                ChildState::InRow(j) if j == width => Step::Forced(ROWSEP),
                ChildState::InRow(j) => Step::Free(&domains[j]),
            };
            let id = match step {
                Step::Forced(id) => id,
                Step::Free(allowed) => {
                    let mut logits = last_logits(decoder, &tokens, Some(&context))?;
                    constrained_draw(&mut logits, allowed, cfg.temperature, &mut rng)?
                }
            };
            tokens.push(id);
            state = match (state, id) {
                (ChildState::Boundary, EOS) => break,
                (ChildState::Boundary, _) => ChildState::InRow(0),
                (ChildState::InRow(j), _) if j == width => ChildState::Boundary,
                (ChildState::InRow(j), _) => ChildState::InRow(j + 1),
            };
        }
        debug_assert!(tokens.len() <= output_max_length);
        let bodies = crate::encode::parse_child_sequence(&tokens, width)
            .expect("generated sequence is well-formed by construction");
        for body in bodies {
            match child_codec.decode_body(&body) {
                Ok(cells) => {
                    let mut row = Vec::with_capacity(1 + cells.len());
                    row.push(keys[pi].clone());
                    row.extend(cells);
                    out_rows.push(row);
                }
                Err(_) => invalid += 1,
            }
        }
    }

    let n_parents = parents.n_rows();
    let table = RawTable {
        schema,
        rows: out_rows,
    };
    Ok((
        table,
        SampleReport {
            requested: n_parents,
            produced: n_parents,
            invalid_count: invalid,
            attempts: n_parents,
            seed,
        },
    ))
}

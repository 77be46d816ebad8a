//! Turning tables into fixed-length token-id sequences and back.
//!
//! Every source column expands into one or more *derived* columns:
//! categorical columns map one-to-one, numeric and datetime columns become
//! one derived column per fixed-width digit chunk. Token ids are scoped to
//! their derived column, so the id space doubles as a positional grammar:
//! at each slot in a row only that slot's ids are valid.

pub mod numeric;

use crate::error::{Error, Result};
use crate::ingest::{ColumnKind, RawTable, TableSchema};
use numeric::{canonical_cell, NumericLayout};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Padding id (never a real token).
pub const PAD: u32 = 0;
/// Start-of-sequence id.
pub const BOS: u32 = 1;
/// End-of-sequence id.
pub const EOS: u32 = 2;
/// Row separator id for multi-row sequences.
pub const ROWSEP: u32 = 3;
/// Mask id substituted into training targets.
pub const MASK: u32 = 4;
/// Count of reserved ids; value ids start here.
pub const N_SPECIAL: u32 = 5;

/// Surface token standing in for a missing value in numeric and datetime
/// grids. Occupies every chunk slot of the affected column.
pub const NA_TOKEN: &str = "<NA>";

/// How one source column expands into derived columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnLayout {
    /// One derived column whose tokens are the raw cell strings.
    Categorical,
    /// `layout.n_chunks` derived columns of digit chunks.
    Numeric(NumericLayout),
    /// Seconds since the epoch encoded through the integral numeric path.
    Datetime { layout: NumericLayout, date_only: bool },
}

impl ColumnLayout {
    pub fn n_derived(&self) -> usize {
        match self {
            ColumnLayout::Categorical => 1,
            ColumnLayout::Numeric(l) => l.n_chunks,
            ColumnLayout::Datetime { layout, .. } => layout.n_chunks,
        }
    }
}

/// One derived column: which source column it came from and which chunk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivedColumn {
    pub source: usize,
    pub chunk: usize,
    pub name: String,
}

/// Expansion of a whole schema into derived columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableLayout {
    /// Per source column, parallel to the schema.
    pub columns: Vec<ColumnLayout>,
    /// All derived columns in row order.
    pub derived: Vec<DerivedColumn>,
}

impl TableLayout {
    pub fn n_derived(&self) -> usize {
        self.derived.len()
    }

    /// Derived-column index range of one source column.
    pub fn derived_range(&self, source: usize) -> std::ops::Range<usize> {
        let start = self.derived.iter().position(|d| d.source == source).unwrap();
        start..start + self.columns[source].n_derived()
    }
}

/// Fits grid geometry for every column of a table.
pub fn fit_layout(table: &RawTable, partition: usize) -> Result<TableLayout> {
    let mut columns = Vec::with_capacity(table.schema.len());
    for (ci, spec) in table.schema.columns.iter().enumerate() {
        let layout = match spec.kind {
            ColumnKind::Categorical => ColumnLayout::Categorical,
            ColumnKind::Numeric => {
                let canon = present_canonicals(table, ci, spec.precision)?;
                ColumnLayout::Numeric(NumericLayout::fit(&canon, spec.precision, partition)?)
            }
            ColumnKind::Datetime => {
                let (canon, date_only) = datetime_canonicals(table, ci)?;
                ColumnLayout::Datetime {
                    layout: NumericLayout::fit(&canon, 0, partition)?,
                    date_only,
                }
            }
        };
        columns.push(layout);
    }
    Ok(TableLayout::from_columns(&table.schema, columns))
}

impl TableLayout {
    /// Builds the derived-column listing from per-source layouts. The
    /// derived names and order are fully determined by the inputs, so a
    /// layout reconstructed from stored per-column facts is identical to
    /// the originally fitted one.
    pub fn from_columns(schema: &TableSchema, columns: Vec<ColumnLayout>) -> TableLayout {
        let mut derived = Vec::new();
        for (source, (layout, spec)) in columns.iter().zip(&schema.columns).enumerate() {
            for chunk in 0..layout.n_derived() {
                let name = if layout.n_derived() == 1 && matches!(layout, ColumnLayout::Categorical)
                {
                    spec.name.clone()
                } else {
                    format!("{}[{}]", spec.name, chunk)
                };
                derived.push(DerivedColumn { source, chunk, name });
            }
        }
        TableLayout { columns, derived }
    }
}

fn present_canonicals(table: &RawTable, col: usize, precision: usize) -> Result<Vec<String>> {
    let marker = &table.schema.columns[col].missing_marker;
    let mut out = Vec::new();
    for (ri, row) in table.rows.iter().enumerate() {
        let cell = &row[col];
        if cell == marker {
            continue;
        }
        out.push(canonical_cell(cell, precision).map_err(|e| {
            Error::Data(format!(
                "column `{}`, row {ri}: {e}",
                table.schema.columns[col].name
            ))
        })?);
    }
    Ok(out)
}

fn datetime_canonicals(table: &RawTable, col: usize) -> Result<(Vec<String>, bool)> {
    let marker = &table.schema.columns[col].missing_marker;
    let mut out = Vec::new();
    let mut date_only = true;
    let mut any = false;
    for (ri, row) in table.rows.iter().enumerate() {
        let cell = &row[col];
        if cell == marker {
            continue;
        }
        any = true;
        let secs = crate::ingest::parse_datetime_cell(cell).ok_or_else(|| {
            Error::Data(format!(
                "column `{}`, row {ri}: `{cell}` is not a recognized date or date-time",
                table.schema.columns[col].name
            ))
        })?;
        date_only &= crate::ingest::is_date_only(cell);
        out.push(secs.to_string());
    }
    Ok((out, date_only && any))
}

fn render_datetime(secs: i64, date_only: bool) -> Result<String> {
    let dt = chrono::DateTime::from_timestamp(secs, 0)
        .ok_or_else(|| Error::Data(format!("timestamp {secs} out of range")))?;
    let fmt = if date_only { "%Y-%m-%d" } else { "%Y-%m-%dT%H:%M:%SZ" };
    Ok(dt.format(fmt).to_string())
}

/// Column-scoped token table. Ids `0..N_SPECIAL` are reserved; value ids
/// are dense above that, allocated derived column by derived column with
/// tokens sorted within each column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    /// Per derived column: token string to id.
    maps: Vec<BTreeMap<String, u32>>,
    /// `flat[id - N_SPECIAL]` = (derived column, token string).
    flat: Vec<(u32, String)>,
}

impl Vocabulary {
    /// Builds the table from per-derived-column token sets.
    pub fn from_token_sets(sets: Vec<BTreeSet<String>>) -> Self {
        let mut maps = Vec::with_capacity(sets.len());
        let mut flat = Vec::new();
        let mut next = N_SPECIAL;
        for (col, set) in sets.into_iter().enumerate() {
            let mut map = BTreeMap::new();
            for token in set {
                map.insert(token.clone(), next);
                flat.push((col as u32, token));
                next += 1;
            }
            maps.push(map);
        }
        Vocabulary { maps, flat }
    }

    /// Total id count including the reserved ids.
    pub fn n_tokens(&self) -> usize {
        N_SPECIAL as usize + self.flat.len()
    }

    pub fn n_columns(&self) -> usize {
        self.maps.len()
    }

    pub fn is_special(id: u32) -> bool {
        id < N_SPECIAL
    }

    /// Id of `token` within derived column `col`, if present.
    pub fn id_of(&self, col: usize, token: &str) -> Option<u32> {
        self.maps[col].get(token).copied()
    }

    /// Derived column and surface string of a value id.
    pub fn token_of(&self, id: u32) -> Option<(usize, &str)> {
        if id < N_SPECIAL {
            return None;
        }
        self.flat
            .get((id - N_SPECIAL) as usize)
            .map(|(c, t)| (*c as usize, t.as_str()))
    }

    /// Sorted valid ids for one derived column. Ids are allocated densely
    /// per column, so this is a contiguous range.
    pub fn domain(&self, col: usize) -> Vec<u32> {
        self.maps[col].values().copied().collect()
    }

    /// All (column, token, id) entries in id order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, &str, u32)> {
        self.flat
            .iter()
            .enumerate()
            .map(|(i, (c, t))| (*c as usize, t.as_str(), N_SPECIAL + i as u32))
    }
}

/// Why a token row failed to decode.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DecodeError {
    /// Wrong length or wrong frame tokens.
    BadFrame(String),
    /// An id outside the domain of its slot.
    OutOfDomain { position: usize, id: u32 },
    /// Some but not all chunks of a column were the missing token.
    MixedMissing { column: String },
    /// Chunks formed a string that is not a well-formed value.
    Malformed { column: String, reason: String },
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::BadFrame(why) => write!(f, "bad frame: {why}"),
            DecodeError::OutOfDomain { position, id } => {
                write!(f, "id {id} is not valid at position {position}")
            }
            DecodeError::MixedMissing { column } => {
                write!(f, "column `{column}` mixes missing and present chunks")
            }
            DecodeError::Malformed { column, reason } => {
                write!(f, "column `{column}` is malformed: {reason}")
            }
        }
    }
}

/// Fitted encoder/decoder for one table shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableCodec {
    pub schema: TableSchema,
    pub layout: TableLayout,
    pub vocab: Vocabulary,
}

impl TableCodec {
    /// Fits layout and vocabulary to a table.
    pub fn fit(table: &RawTable, partition: usize) -> Result<Self> {
        let layout = fit_layout(table, partition)?;
        let mut sets: Vec<BTreeSet<String>> = vec![BTreeSet::new(); layout.n_derived()];
        let codec_shell = TableCodec {
            schema: table.schema.clone(),
            layout,
            vocab: Vocabulary::from_token_sets(Vec::new()),
        };
        for row in &table.rows {
            let tokens = codec_shell.row_tokens(row)?;
            for (slot, token) in tokens.into_iter().enumerate() {
                sets[slot].insert(token);
            }
        }
        Ok(TableCodec {
            vocab: Vocabulary::from_token_sets(sets),
            ..codec_shell
        })
    }

    /// Derived-column count, i.e. value tokens per row.
    pub fn row_width(&self) -> usize {
        self.layout.n_derived()
    }

    /// Encoded row length including `BOS` and `EOS`.
    pub fn seq_len(&self) -> usize {
        self.row_width() + 2
    }

    /// Surface tokens of one row in derived-column order.
    fn row_tokens(&self, row: &[String]) -> Result<Vec<String>> {
        let mut out = Vec::with_capacity(self.layout.n_derived());
        for (ci, (spec, layout)) in self
            .schema
            .columns
            .iter()
            .zip(&self.layout.columns)
            .enumerate()
        {
            let cell = &row[ci];
            let missing = cell == &spec.missing_marker;
            match layout {
                ColumnLayout::Categorical => out.push(cell.clone()),
                ColumnLayout::Numeric(nl) => {
                    if missing {
                        out.extend(std::iter::repeat_n(NA_TOKEN.to_string(), nl.n_chunks));
                    } else {
                        let canon = canonical_cell(cell, nl.precision)
                            .map_err(|e| Error::Data(format!("column `{}`: {e}", spec.name)))?;
                        out.extend(nl.tokenize(&canon)?);
                    }
                }
                ColumnLayout::Datetime { layout: nl, .. } => {
                    if missing {
                        out.extend(std::iter::repeat_n(NA_TOKEN.to_string(), nl.n_chunks));
                    } else {
                        let secs = crate::ingest::parse_datetime_cell(cell).ok_or_else(|| {
                            Error::Data(format!(
                                "column `{}`: `{cell}` is not a recognized date or date-time",
                                spec.name
                            ))
                        })?;
                        out.extend(nl.tokenize(&secs.to_string())?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Value ids of one row, without frame tokens.
    pub fn encode_body(&self, row: &[String]) -> Result<Vec<u32>> {
        if row.len() != self.schema.len() {
            return Err(Error::Data(format!(
                "row has {} cells, expected {}",
                row.len(),
                self.schema.len()
            )));
        }
        let tokens = self.row_tokens(row)?;
        let mut ids = Vec::with_capacity(tokens.len());
        for (slot, token) in tokens.iter().enumerate() {
            let id = self.vocab.id_of(slot, token).ok_or_else(|| {
                Error::Data(format!(
                    "token `{token}` was never seen in derived column `{}`",
                    self.layout.derived[slot].name
                ))
            })?;
            ids.push(id);
        }
        Ok(ids)
    }

    /// `[BOS, value ids…, EOS]` for one row.
    pub fn encode_row(&self, row: &[String]) -> Result<Vec<u32>> {
        let mut ids = Vec::with_capacity(self.seq_len());
        ids.push(BOS);
        ids.extend(self.encode_body(row)?);
        ids.push(EOS);
        Ok(ids)
    }

    /// Encodes every row of a table with the same schema.
    pub fn encode_table(&self, table: &RawTable) -> Result<Vec<Vec<u32>>> {
        if table.schema != self.schema {
            return Err(Error::Schema("table schema does not match the fitted codec".into()));
        }
        table.rows.iter().map(|r| self.encode_row(r)).collect()
    }

    /// Decodes value ids (no frame tokens) back into source cells.
    pub fn decode_body(&self, body: &[u32]) -> std::result::Result<Vec<String>, DecodeError> {
        if body.len() != self.row_width() {
            return Err(DecodeError::BadFrame(format!(
                "body has {} ids, expected {}",
                body.len(),
                self.row_width()
            )));
        }
        let mut tokens: Vec<&str> = Vec::with_capacity(body.len());
        for (slot, &id) in body.iter().enumerate() {
            match self.vocab.token_of(id) {
                Some((col, token)) if col == slot => tokens.push(token),
                _ => return Err(DecodeError::OutOfDomain { position: slot, id }),
            }
        }
        let mut cells = Vec::with_capacity(self.schema.len());
        for (ci, (spec, layout)) in self
            .schema
            .columns
            .iter()
            .zip(&self.layout.columns)
            .enumerate()
        {
            let range = self.layout.derived_range(ci);
            let chunk_tokens = &tokens[range];
            let cell = match layout {
                ColumnLayout::Categorical => chunk_tokens[0].to_string(),
                ColumnLayout::Numeric(nl) => {
                    match reassemble_numeric(chunk_tokens, nl, spec)? {
                        Some(canon) => canon,
                        None => spec.missing_marker.clone(),
                    }
                }
                ColumnLayout::Datetime { layout: nl, date_only } => {
                    match reassemble_numeric(chunk_tokens, nl, spec)? {
                        Some(canon) => {
                            let secs: i64 = canon.parse().map_err(|_| DecodeError::Malformed {
                                column: spec.name.clone(),
                                reason: format!("`{canon}` is not a timestamp"),
                            })?;
                            render_datetime(secs, *date_only).map_err(|e| {
                                DecodeError::Malformed {
                                    column: spec.name.clone(),
                                    reason: e.to_string(),
                                }
                            })?
                        }
                        None => spec.missing_marker.clone(),
                    }
                }
            };
            cells.push(cell);
        }
        Ok(cells)
    }

    /// Decodes a full `[BOS, …, EOS]` row.
    pub fn decode_row(&self, ids: &[u32]) -> std::result::Result<Vec<String>, DecodeError> {
        if ids.len() != self.seq_len() {
            return Err(DecodeError::BadFrame(format!(
                "row has {} ids, expected {}",
                ids.len(),
                self.seq_len()
            )));
        }
        if ids[0] != BOS {
            return Err(DecodeError::BadFrame("row does not start with BOS".into()));
        }
        if ids[ids.len() - 1] != EOS {
            return Err(DecodeError::BadFrame("row does not end with EOS".into()));
        }
        self.decode_body(&ids[1..ids.len() - 1])
    }

    /// Decodes many rows, collecting the valid ones and counting failures.
    pub fn decode_table(&self, rows: &[Vec<u32>]) -> (RawTable, usize) {
        let mut ok = Vec::new();
        let mut invalid = 0;
        for row in rows {
            match self.decode_row(row) {
                Ok(cells) => ok.push(cells),
                Err(_) => invalid += 1,
            }
        }
        let table = RawTable {
            schema: self.schema.clone(),
            rows: ok,
        };
        (table, invalid)
    }
}

/// `Ok(Some(canonical))` for a present value, `Ok(None)` when every chunk is
/// the missing token, an error when they mix.
fn reassemble_numeric(
    chunk_tokens: &[&str],
    nl: &NumericLayout,
    spec: &crate::ingest::ColumnSpec,
) -> std::result::Result<Option<String>, DecodeError> {
    let n_missing = chunk_tokens.iter().filter(|t| **t == NA_TOKEN).count();
    if n_missing == chunk_tokens.len() {
        return Ok(None);
    }
    if n_missing > 0 {
        return Err(DecodeError::MixedMissing {
            column: spec.name.clone(),
        });
    }
    nl.detokenize(chunk_tokens)
        .map(Some)
        .map_err(|e| DecodeError::Malformed {
            column: spec.name.clone(),
            reason: e.to_string(),
        })
}

/// One parent's children as a framed token sequence:
/// `[BOS, (ROWSEP, row ids, ROWSEP)…, EOS]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChildSequence {
    /// Index of the parent row this sequence belongs to.
    pub parent_index: usize,
    pub tokens: Vec<u32>,
    /// Child rows represented after any truncation.
    pub n_rows: usize,
    /// Whether rows were dropped to respect the length budget.
    pub truncated: bool,
}

/// Sequence length for `n_rows` child rows of `row_width` value tokens.
pub fn child_sequence_len(n_rows: usize, row_width: usize) -> usize {
    2 + n_rows * (row_width + 2)
}

/// Builds one training sequence per parent row, in parent order. Children
/// keep their file order within each sequence. Sequences longer than
/// `max_len` are truncated at the last complete row.
pub fn build_child_sequences(
    parent: &RawTable,
    child: &RawTable,
    key_column: &str,
    child_codec: &TableCodec,
    max_len: usize,
) -> Result<Vec<ChildSequence>> {
    let pk = parent
        .schema
        .index_of(key_column)
        .ok_or_else(|| Error::Schema(format!("key column `{key_column}` missing from parent")))?;
    let ck = child
        .schema
        .index_of(key_column)
        .ok_or_else(|| Error::Schema(format!("key column `{key_column}` missing from child")))?;
    if max_len < 2 {
        return Err(Error::Config(format!(
            "maximum sequence length {max_len} cannot hold even an empty sequence"
        )));
    }

    // child bodies grouped by key, preserving file order
    let mut by_key: BTreeMap<&str, Vec<Vec<u32>>> = BTreeMap::new();
    for row in &child.rows {
        let body_cells: Vec<String> = row
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != ck)
            .map(|(_, c)| c.clone())
            .collect();
        let body = child_codec.encode_body(&body_cells)?;
        by_key.entry(row[ck].as_str()).or_default().push(body);
    }

    let width = child_codec.row_width();
    let mut sequences = Vec::with_capacity(parent.n_rows());
    for (pi, prow) in parent.rows.iter().enumerate() {
        let bodies = by_key.get(prow[pk].as_str()).map(Vec::as_slice).unwrap_or(&[]);
        let mut keep = bodies.len();
        while child_sequence_len(keep, width) > max_len {
            keep -= 1;
        }
        let mut tokens = Vec::with_capacity(child_sequence_len(keep, width));
        tokens.push(BOS);
        for body in &bodies[..keep] {
            tokens.push(ROWSEP);
            tokens.extend_from_slice(body);
            tokens.push(ROWSEP);
        }
        tokens.push(EOS);
        sequences.push(ChildSequence {
            parent_index: pi,
            tokens,
            n_rows: keep,
            truncated: keep < bodies.len(),
        });
    }
    Ok(sequences)
}

/// Splits a framed multi-row sequence into per-row id bodies. Returns an
/// error describing the first structural fault.
pub fn parse_child_sequence(
    tokens: &[u32],
    row_width: usize,
) -> std::result::Result<Vec<Vec<u32>>, DecodeError> {
    let mut rows = Vec::new();
    let mut i = 0;
    if tokens.first() != Some(&BOS) {
        return Err(DecodeError::BadFrame("sequence does not start with BOS".into()));
    }
    i += 1;
    loop {
        match tokens.get(i) {
            Some(&EOS) => {
                if i + 1 != tokens.len() {
                    return Err(DecodeError::BadFrame("tokens after EOS".into()));
                }
                return Ok(rows);
            }
            Some(&ROWSEP) => {
                i += 1;
                let body: Vec<u32> = tokens
                    .get(i..i + row_width)
                    .ok_or_else(|| DecodeError::BadFrame("row cut short".into()))?
                    .to_vec();
                i += row_width;
                if tokens.get(i) != Some(&ROWSEP) {
                    return Err(DecodeError::BadFrame("row not closed by ROWSEP".into()));
                }
                i += 1;
                rows.push(body);
            }
            Some(&other) => {
                return Err(DecodeError::BadFrame(format!(
                    "unexpected id {other} between rows"
                )))
            }
            None => return Err(DecodeError::BadFrame("sequence does not end with EOS".into())),
        }
    }
}

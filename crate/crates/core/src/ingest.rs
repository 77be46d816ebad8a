//! Reading delimited tables, schema inference, and parent/child link checks.

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

/// Declared type of a source column.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnKind {
    Numeric,
    Datetime,
    Categorical,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Datetime => "datetime",
            ColumnKind::Categorical => "categorical",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "numeric" => Ok(ColumnKind::Numeric),
            "datetime" => Ok(ColumnKind::Datetime),
            "categorical" => Ok(ColumnKind::Categorical),
            other => Err(Error::Schema(format!("unknown column kind `{other}`"))),
        }
    }
}

/// One column declaration: name, kind, decimal precision (numeric and
/// datetime only; datetime always 0), and the marker string that denotes a
/// missing value in that column.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub precision: usize,
    pub missing_marker: String,
}

impl ColumnSpec {
    pub fn new(name: impl Into<String>, kind: ColumnKind, precision: usize) -> Self {
        ColumnSpec {
            name: name.into(),
            kind,
            precision,
            missing_marker: String::new(),
        }
    }

    pub fn with_missing_marker(mut self, marker: impl Into<String>) -> Self {
        self.missing_marker = marker.into();
        self
    }
}

/// Ordered column declarations for one table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableSchema {
    pub columns: Vec<ColumnSpec>,
}

impl TableSchema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Self> {
        let mut seen = BTreeSet::new();
        for col in &columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Schema(format!("duplicate column name `{}`", col.name)));
            }
            if col.kind == ColumnKind::Categorical && col.precision != 0 {
                return Err(Error::Schema(format!(
                    "column `{}` is categorical but declares precision {}",
                    col.name, col.precision
                )));
            }
            if col.kind == ColumnKind::Datetime && col.precision != 0 {
                return Err(Error::Schema(format!(
                    "column `{}` is datetime; precision must be 0",
                    col.name
                )));
            }
        }
        Ok(TableSchema { columns })
    }

    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.columns.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// Schema with the named columns removed (e.g. join keys before modeling).
    pub fn without_columns(&self, drop: &[&str]) -> Result<TableSchema> {
        for name in drop {
            if self.index_of(name).is_none() {
                return Err(Error::Schema(format!("column `{name}` not found")));
            }
        }
        TableSchema::new(
            self.columns
                .iter()
                .filter(|c| !drop.contains(&c.name.as_str()))
                .cloned()
                .collect(),
        )
    }
}

/// A table of string cells plus its schema. Every row has exactly
/// `schema.len()` cells.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawTable {
    pub schema: TableSchema,
    pub rows: Vec<Vec<String>>,
}

impl RawTable {
    pub fn new(schema: TableSchema, rows: Vec<Vec<String>>) -> Result<Self> {
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.len() {
                return Err(Error::Data(format!(
                    "row {} has {} cells, expected {}",
                    i,
                    row.len(),
                    schema.len()
                )));
            }
        }
        Ok(RawTable { schema, rows })
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn column(&self, idx: usize) -> impl Iterator<Item = &str> {
        self.rows.iter().map(move |r| r[idx].as_str())
    }

    /// Whether the given cell of a column counts as missing.
    pub fn is_missing(&self, row: usize, col: usize) -> bool {
        self.rows[row][col] == self.schema.columns[col].missing_marker
    }

    /// Table restricted to the given row indices (cloned cells).
    pub fn select_rows(&self, indices: &[usize]) -> RawTable {
        RawTable {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// Table with the named columns removed.
    pub fn without_columns(&self, drop: &[&str]) -> Result<RawTable> {
        let keep: Vec<usize> = self
            .schema
            .columns
            .iter()
            .enumerate()
            .filter(|(_, c)| !drop.contains(&c.name.as_str()))
            .map(|(i, _)| i)
            .collect();
        if keep.len() + drop.len() < self.schema.len() {
            // some drop name matched nothing; report it
            for name in drop {
                if self.schema.index_of(name).is_none() {
                    return Err(Error::Schema(format!("column `{name}` not found")));
                }
            }
        }
        let schema = self.schema.without_columns(drop)?;
        let rows = self
            .rows
            .iter()
            .map(|r| keep.iter().map(|&i| r[i].clone()).collect())
            .collect();
        RawTable::new(schema, rows)
    }
}

/// One parent table, one child table, and the key column linking them.
#[derive(Debug, Clone)]
pub struct RelationalLink {
    pub parent: RawTable,
    pub child: RawTable,
    pub key_column: String,
    pub max_children: usize,
}

/// A single problem found by [`validate_link`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LinkViolation {
    OrphanChildKey(String),
    DuplicateParentKey(String),
    TooManyChildren { key: String, count: usize, max: usize },
}

impl fmt::Display for LinkViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkViolation::OrphanChildKey(k) => write!(f, "orphan key {k}"),
            LinkViolation::DuplicateParentKey(k) => write!(f, "duplicate parent key {k}"),
            LinkViolation::TooManyChildren { key, count, max } => {
                write!(f, "parent {key} has {count} children (max {max})")
            }
        }
    }
}

/// Result of [`validate_link`]: violations plus per-parent child counts.
#[derive(Debug, Clone)]
pub struct LinkReport {
    pub ok: bool,
    pub violations: Vec<LinkViolation>,
    /// Child count per parent key, zero-count parents included.
    pub child_counts: BTreeMap<String, usize>,
}

/// Checks that every child key resolves to exactly one parent row and that
/// no parent exceeds `max_children`.
pub fn validate_link(link: &RelationalLink) -> Result<LinkReport> {
    let pk = link
        .parent
        .schema
        .index_of(&link.key_column)
        .ok_or_else(|| {
            Error::Schema(format!("key column `{}` missing from parent", link.key_column))
        })?;
    let ck = link.child.schema.index_of(&link.key_column).ok_or_else(|| {
        Error::Schema(format!("key column `{}` missing from child", link.key_column))
    })?;

    let mut violations = Vec::new();
    let mut parent_keys: BTreeSet<&str> = BTreeSet::new();
    for row in &link.parent.rows {
        let key = row[pk].as_str();
        if !parent_keys.insert(key) {
            violations.push(LinkViolation::DuplicateParentKey(key.to_string()));
        }
    }

    let mut child_counts: BTreeMap<String, usize> =
        parent_keys.iter().map(|k| (k.to_string(), 0)).collect();
    for row in &link.child.rows {
        let key = row[ck].as_str();
        match child_counts.get_mut(key) {
            Some(count) => *count += 1,
            None => violations.push(LinkViolation::OrphanChildKey(key.to_string())),
        }
    }

    for (key, &count) in &child_counts {
        if count > link.max_children {
            violations.push(LinkViolation::TooManyChildren {
                key: key.clone(),
                count,
                max: link.max_children,
            });
        }
    }

    Ok(LinkReport {
        ok: violations.is_empty(),
        violations,
        child_counts,
    })
}

/// True when the cell is a plain signed decimal: optional sign, digits,
/// at most one decimal point, at least one digit. Exponents, infinities
/// and NaN spellings are rejected so inference stays deterministic.
pub fn is_plain_decimal(s: &str) -> bool {
    let body = s.strip_prefix('-').or_else(|| s.strip_prefix('+')).unwrap_or(s);
    if body.is_empty() {
        return false;
    }
    let mut seen_digit = false;
    let mut seen_point = false;
    for ch in body.chars() {
        match ch {
            '0'..='9' => seen_digit = true,
            '.' if !seen_point => seen_point = true,
            _ => return false,
        }
    }
    seen_digit
}

/// Digits after the decimal point in a plain decimal string.
fn decimal_places(s: &str) -> usize {
    match s.find('.') {
        Some(i) => s.len() - i - 1,
        None => 0,
    }
}

pub(crate) const DATETIME_FORMATS: [&str; 3] =
    ["%Y-%m-%dT%H:%M:%SZ", "%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"];

/// Parses one cell as an accepted calendar value, returning UTC seconds.
pub fn parse_datetime_cell(s: &str) -> Option<i64> {
    for fmt in DATETIME_FORMATS {
        if let Ok(dt) = chrono::NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d")
        .ok()
        .map(|d| d.and_hms_opt(0, 0, 0).unwrap().and_utc().timestamp())
}

/// True when the cell is a bare date with no time component.
pub fn is_date_only(s: &str) -> bool {
    chrono::NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}

/// Controls for schema inference.
#[derive(Debug, Clone)]
pub struct InferOptions {
    /// Cells equal to this string are treated as missing.
    pub missing_marker: String,
    /// Upper bound on inferred numeric precision.
    pub precision_cap: usize,
}

impl Default for InferOptions {
    fn default() -> Self {
        InferOptions {
            missing_marker: String::new(),
            precision_cap: 6,
        }
    }
}

/// Infers a schema from a header and a grid of string rows.
///
/// A column is numeric iff every non-missing cell is a plain decimal,
/// datetime iff every non-missing cell parses under the accepted calendar
/// formats, and categorical otherwise (including all-missing columns).
/// Inference only inspects the multiset of cell values, so it is invariant
/// to row order.
pub fn infer_schema(header: &[String], rows: &[Vec<String>], opts: &InferOptions) -> Result<TableSchema> {
    if rows.is_empty() {
        return Err(Error::Data("no rows".into()));
    }
    let mut columns = Vec::with_capacity(header.len());
    for (ci, name) in header.iter().enumerate() {
        let cells = rows.iter().map(|r| r[ci].as_str());
        let mut any_present = false;
        let mut all_numeric = true;
        let mut all_datetime = true;
        let mut precision = 0usize;
        for cell in cells {
            if cell == opts.missing_marker {
                continue;
            }
            any_present = true;
            if is_plain_decimal(cell) {
                precision = precision.max(decimal_places(cell).min(opts.precision_cap));
            } else {
                all_numeric = false;
            }
            if parse_datetime_cell(cell).is_none() {
                all_datetime = false;
            }
            if !all_numeric && !all_datetime {
                break;
            }
        }
        let kind = if !any_present {
            ColumnKind::Categorical
        } else if all_numeric {
            ColumnKind::Numeric
        } else if all_datetime {
            ColumnKind::Datetime
        } else {
            ColumnKind::Categorical
        };
        let precision = if kind == ColumnKind::Numeric { precision } else { 0 };
        columns.push(ColumnSpec {
            name: name.clone(),
            kind,
            precision,
            missing_marker: opts.missing_marker.clone(),
        });
    }
    TableSchema::new(columns)
}

/// Reads a delimited file (first row header, UTF-8) into a [`RawTable`].
///
/// When no schema is supplied one is inferred; empty cells become the
/// missing marker (default: the empty string, which they already are).
pub fn read_table(path: &Path, delimiter: u8, schema: Option<TableSchema>) -> Result<RawTable> {
    let opts = InferOptions::default();
    read_table_with(path, delimiter, schema, &opts)
}

pub fn read_table_with(
    path: &Path,
    delimiter: u8,
    schema: Option<TableSchema>,
    opts: &InferOptions,
) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_path(path)
        .map_err(|e| map_csv_error(path, e))?;

    let header: Vec<String> = reader
        .headers()
        .map_err(|e| map_csv_error(path, e))?
        .iter()
        .map(|s| s.to_string())
        .collect();

    let mut rows: Vec<Vec<String>> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| map_csv_error(path, e))?;
        rows.push(record.iter().map(|s| s.to_string()).collect());
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("no rows in {}", path.display())));
    }

    let schema = match schema {
        Some(s) => {
            if s.len() != header.len() {
                return Err(Error::Schema(format!(
                    "schema has {} columns, file has {}",
                    s.len(),
                    header.len()
                )));
            }
            for (spec, name) in s.columns.iter().zip(&header) {
                if &spec.name != name {
                    return Err(Error::Schema(format!(
                        "schema column `{}` does not match header `{}`",
                        spec.name, name
                    )));
                }
            }
            s
        }
        None => infer_schema(&header, &rows, opts)?,
    };

    RawTable::new(schema, rows)
}

fn map_csv_error(path: &Path, e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(path, io),
            _ => unreachable!(),
        }
    } else {
        Error::Data(format!("{}: {}", path.display(), e))
    }
}

/// Writes a table as delimited text, header first. Inverse of
/// [`read_table`] at the string level.
pub fn write_table(table: &RawTable, path: &Path, delimiter: u8) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .delimiter(delimiter)
        .from_path(path)
        .map_err(|e| map_csv_error(path, e))?;
    writer
        .write_record(table.schema.names())
        .map_err(|e| map_csv_error(path, e))?;
    for row in &table.rows {
        writer.write_record(row).map_err(|e| map_csv_error(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub(crate) fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for ch in s.chars() {
        match ch {
            '%' => out.push_str("%25"),
            ' ' => out.push_str("%20"),
            '\t' => out.push_str("%09"),
            '\n' => out.push_str("%0A"),
            '\r' => out.push_str("%0D"),
            c => out.push(c),
        }
    }
    out
}

pub(crate) fn unescape_field(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'%' {
            if i + 2 >= bytes.len() + 1 {
                return Err(Error::Data(format!("truncated escape in `{s}`")));
            }
            let hex = s
                .get(i + 1..i + 3)
                .ok_or_else(|| Error::Data(format!("truncated escape in `{s}`")))?;
            let code =
                u8::from_str_radix(hex, 16).map_err(|_| Error::Data(format!("bad escape in `{s}`")))?;
            out.push(code as char);
            i += 3;
        } else {
            let ch = s[i..].chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    Ok(out)
}

const SCHEMA_MAGIC: &str = "tabsynth-schema v1";

/// Serializes a schema to the sidecar key-value format.
pub fn schema_to_string(schema: &TableSchema) -> String {
    let mut out = String::from(SCHEMA_MAGIC);
    out.push('\n');
    for col in &schema.columns {
        out.push_str(&format!(
            "column name={} kind={} precision={} missing={}\n",
            escape_field(&col.name),
            col.kind.as_str(),
            col.precision,
            escape_field(&col.missing_marker),
        ));
    }
    out
}

/// Parses the sidecar format written by [`schema_to_string`].
pub fn schema_from_string(text: &str) -> Result<TableSchema> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l == SCHEMA_MAGIC => {}
        other => {
            return Err(Error::Config(format!(
                "bad schema header: {:?}",
                other.unwrap_or("")
            )))
        }
    }
    let mut columns = Vec::new();
    for line in lines {
        if line.trim().is_empty() {
            continue;
        }
        let rest = line
            .strip_prefix("column ")
            .ok_or_else(|| Error::Config(format!("bad schema line `{line}`")))?;
        let mut name = None;
        let mut kind = None;
        let mut precision = None;
        let mut missing = None;
        for field in rest.split(' ') {
            let (k, v) = field
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("bad schema field `{field}`")))?;
            match k {
                "name" => name = Some(unescape_field(v)?),
                "kind" => kind = Some(ColumnKind::parse(v)?),
                "precision" => {
                    precision = Some(v.parse::<usize>().map_err(|_| {
                        Error::Config(format!("bad precision `{v}` in schema"))
                    })?)
                }
                "missing" => missing = Some(unescape_field(v)?),
                other => return Err(Error::Config(format!("unknown schema field `{other}`"))),
            }
        }
        columns.push(ColumnSpec {
            name: name.ok_or_else(|| Error::Config("schema column without name".into()))?,
            kind: kind.ok_or_else(|| Error::Config("schema column without kind".into()))?,
            precision: precision.unwrap_or(0),
            missing_marker: missing.unwrap_or_default(),
        });
    }
    TableSchema::new(columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn grid(rows: &[&[&str]]) -> Vec<Vec<String>> {
        rows.iter()
            .map(|r| r.iter().map(|s| s.to_string()).collect())
            .collect()
    }

    fn header(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn read_table_infers_simple_schema() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,b\n1,x\n2,y\n3,z").unwrap();
        let table = read_table(f.path(), b',', None).unwrap();
        assert_eq!(table.n_rows(), 3);
        assert_eq!(table.schema.columns[0].kind, ColumnKind::Numeric);
        assert_eq!(table.schema.columns[1].kind, ColumnKind::Categorical);
    }

    #[test]
    fn read_table_rejects_empty_file() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let err = read_table(f.path(), b',', None).unwrap_err();
        assert!(err.to_string().contains("no rows"), "{err}");
    }

    #[test]
    fn read_table_rejects_ragged_rows() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "a,b\n1,x\n2").unwrap();
        assert!(read_table(f.path(), b',', None).is_err());
    }

    #[test]
    fn long_decimals_infer_numeric() {
        let rows = grid(&[&["1032.325345"], &["10.291"], &["-3.0"]]);
        let schema = infer_schema(&header(&["v"]), &rows, &InferOptions::default()).unwrap();
        assert_eq!(schema.columns[0].kind, ColumnKind::Numeric);
        assert_eq!(schema.columns[0].precision, 6);
    }

    #[test]
    fn dates_infer_datetime() {
        let rows = grid(&[&["2015-06-01"], &["2015-06-02"]]);
        let schema = infer_schema(&header(&["d"]), &rows, &InferOptions::default()).unwrap();
        assert_eq!(schema.columns[0].kind, ColumnKind::Datetime);
    }

    #[test]
    fn mixed_cells_fall_back_to_categorical() {
        let rows = grid(&[&["3.14"], &["x"]]);
        let schema = infer_schema(&header(&["c"]), &rows, &InferOptions::default()).unwrap();
        assert_eq!(schema.columns[0].kind, ColumnKind::Categorical);
    }

    #[test]
    fn precision_is_max_decimal_places() {
        let rows = grid(&[&["1032.33"], &["10.29"], &["-3.0"]]);
        let schema = infer_schema(&header(&["v"]), &rows, &InferOptions::default()).unwrap();
        assert_eq!(schema.columns[0].kind, ColumnKind::Numeric);
        assert_eq!(schema.columns[0].precision, 2);
    }

    #[test]
    fn exponents_and_nan_are_not_numeric() {
        for bad in ["1e3", "inf", "NaN", "-inf", "+", "-", "."] {
            assert!(!is_plain_decimal(bad), "{bad}");
        }
        for good in ["0", "-3.0", "+2.5", ".5", "5.", "007"] {
            assert!(is_plain_decimal(good), "{good}");
        }
    }

    #[test]
    fn missing_cells_are_skipped_in_inference() {
        let rows = grid(&[&["1.5"], &[""], &["2.25"]]);
        let schema = infer_schema(&header(&["v"]), &rows, &InferOptions::default()).unwrap();
        assert_eq!(schema.columns[0].kind, ColumnKind::Numeric);
        assert_eq!(schema.columns[0].precision, 2);
    }

    fn keyed_table(keys: &[&str]) -> RawTable {
        let schema = TableSchema::new(vec![ColumnSpec::new("k", ColumnKind::Categorical, 0)]).unwrap();
        RawTable::new(schema, keys.iter().map(|k| vec![k.to_string()]).collect()).unwrap()
    }

    #[test]
    fn link_counts_children_per_parent() {
        let link = RelationalLink {
            parent: keyed_table(&["1", "2"]),
            child: keyed_table(&["1", "1", "2"]),
            key_column: "k".into(),
            max_children: 50,
        };
        let report = validate_link(&link).unwrap();
        assert!(report.ok);
        assert_eq!(report.child_counts["1"], 2);
        assert_eq!(report.child_counts["2"], 1);
    }

    #[test]
    fn link_reports_orphans() {
        let link = RelationalLink {
            parent: keyed_table(&["1"]),
            child: keyed_table(&["1", "3"]),
            key_column: "k".into(),
            max_children: 50,
        };
        let report = validate_link(&link).unwrap();
        assert!(!report.ok);
        assert_eq!(
            report.violations,
            vec![LinkViolation::OrphanChildKey("3".into())]
        );
    }

    #[test]
    fn link_reports_duplicate_parent_keys() {
        let link = RelationalLink {
            parent: keyed_table(&["1", "1"]),
            child: keyed_table(&[]),
            key_column: "k".into(),
            max_children: 50,
        };
        let report = validate_link(&link).unwrap();
        assert!(!report.ok);
        assert_eq!(
            report.violations,
            vec![LinkViolation::DuplicateParentKey("1".into())]
        );
    }

    #[test]
    fn link_enforces_max_children() {
        let link = RelationalLink {
            parent: keyed_table(&["1"]),
            child: keyed_table(&["1", "1", "1"]),
            key_column: "k".into(),
            max_children: 2,
        };
        let report = validate_link(&link).unwrap();
        assert!(!report.ok);
        assert!(matches!(
            report.violations[0],
            LinkViolation::TooManyChildren { count: 3, max: 2, .. }
        ));
    }

    #[test]
    fn link_missing_key_column_is_an_error() {
        let link = RelationalLink {
            parent: keyed_table(&["1"]),
            child: keyed_table(&["1"]),
            key_column: "nope".into(),
            max_children: 50,
        };
        assert!(validate_link(&link).is_err());
    }

    #[test]
    fn table_roundtrips_through_file() {
        let schema = TableSchema::new(vec![
            ColumnSpec::new("a", ColumnKind::Numeric, 1),
            ColumnSpec::new("b", ColumnKind::Categorical, 0),
        ])
        .unwrap();
        let table = RawTable::new(
            schema,
            grid(&[&["1.5", "x,with comma"], &["2.0", "quote\"inside"], &["-3.5", ""]]),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_table(&table, &path, b',').unwrap();
        let back = read_table(&path, b',', Some(table.schema.clone())).unwrap();
        assert_eq!(back.rows, table.rows);
    }

    #[test]
    fn schema_sidecar_roundtrips() {
        let schema = TableSchema::new(vec![
            ColumnSpec::new("amount", ColumnKind::Numeric, 2).with_missing_marker("NA"),
            ColumnSpec::new("when", ColumnKind::Datetime, 0),
            ColumnSpec::new("city name", ColumnKind::Categorical, 0),
        ])
        .unwrap();
        let text = schema_to_string(&schema);
        let back = schema_from_string(&text).unwrap();
        assert_eq!(back, schema);
    }

    #[test]
    fn inference_is_permutation_invariant() {
        let rows = grid(&[&["1.5", "a"], &["2.25", "b"], &["", "c"], &["10.125", "a"]]);
        let mut reversed = rows.clone();
        reversed.reverse();
        let h = header(&["v", "c"]);
        let a = infer_schema(&h, &rows, &InferOptions::default()).unwrap();
        let b = infer_schema(&h, &reversed, &InferOptions::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn datetime_cells_parse_to_seconds() {
        assert_eq!(parse_datetime_cell("1970-01-01T00:00:00Z"), Some(0));
        assert_eq!(parse_datetime_cell("1970-01-01T00:01:40Z"), Some(100));
        assert_eq!(parse_datetime_cell("1970-01-01"), Some(0));
        assert_eq!(parse_datetime_cell("not a date"), None);
    }
}

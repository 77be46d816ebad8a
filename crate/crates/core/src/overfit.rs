//! Detecting when the model starts copying its training rows.
//!
//! The signal is distance-to-closest-record: for hold-out rows and for
//! generated rows alike, measure how close each row sits to the training
//! set under a range-scaled mixed-type distance. If generated rows hug the
//! training set more tightly than genuinely unseen rows do, the model is
//! reproducing its inputs. The `q_delta` statistic summarizes that excess
//! closeness over a set of lower quantiles, and a bootstrap over synthetic
//! splits of the training set calibrates how large the statistic can get
//! by chance.

use crate::error::{Error, Result};
use crate::ingest::{ColumnKind, RawTable};
use crate::rng::{substream, Domain};
use rand::seq::SliceRandom;
use std::collections::BTreeMap;

/// One table cell reduced to what the distance needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Cat(u32),
    Missing,
}

/// Mixed-type row distance: the sum of per-column contributions, each
/// capped at 1, so a full row distance lies in `[0, n_columns]`.
///
/// Per column: numeric and datetime pairs score `min(|a−b| / range, 1)`
/// with the range taken from the fit table (zero-range columns score 0 on
/// equality, 1 otherwise); categorical pairs score 0 on equality, 1
/// otherwise; two missing cells score 0; missing against present scores 1.
#[derive(Debug, Clone)]
pub struct RowDistanceMetric {
    kinds: Vec<ColumnKind>,
    missing_markers: Vec<String>,
    /// Per column: numeric range from the fit table, None for categorical.
    ranges: Vec<Option<f64>>,
}

fn parse_cell_value(kind: ColumnKind, cell: &str) -> Option<f64> {
    match kind {
        ColumnKind::Numeric => cell.parse::<f64>().ok().filter(|v| v.is_finite()),
        ColumnKind::Datetime => crate::ingest::parse_datetime_cell(cell).map(|s| s as f64),
        ColumnKind::Categorical => None,
    }
}

impl RowDistanceMetric {
    /// Fits per-column ranges on a table (normally the training table).
    pub fn fit(table: &RawTable) -> Result<Self> {
        let mut ranges = Vec::with_capacity(table.schema.len());
        for (ci, spec) in table.schema.columns.iter().enumerate() {
            if spec.kind == ColumnKind::Categorical {
                ranges.push(None);
                continue;
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for (ri, row) in table.rows.iter().enumerate() {
                let cell = &row[ci];
                if cell == &spec.missing_marker {
                    continue;
                }
                let v = parse_cell_value(spec.kind, cell).ok_or_else(|| {
                    Error::Data(format!(
                        "column `{}`, row {ri}: `{cell}` is not parseable",
                        spec.name
                    ))
                })?;
                lo = lo.min(v);
                hi = hi.max(v);
            }
            ranges.push(Some(if lo <= hi { hi - lo } else { 0.0 }));
        }
        Ok(RowDistanceMetric {
            kinds: table.schema.columns.iter().map(|c| c.kind).collect(),
            missing_markers: table
                .schema
                .columns
                .iter()
                .map(|c| c.missing_marker.clone())
                .collect(),
            ranges,
        })
    }

    pub fn n_columns(&self) -> usize {
        self.kinds.len()
    }

    /// Interns several tables at once so categorical codes are shared.
    pub fn intern_all(&self, tables: &[&RawTable]) -> Result<Vec<Vec<Vec<Cell>>>> {
        let mut cat_codes: Vec<BTreeMap<String, u32>> = vec![BTreeMap::new(); self.kinds.len()];
        let mut out = Vec::with_capacity(tables.len());
        for table in tables {
            if table.schema.len() != self.kinds.len() {
                return Err(Error::Schema(
                    "table width does not match the fitted distance".into(),
                ));
            }
            let mut rows = Vec::with_capacity(table.n_rows());
            for (ri, row) in table.rows.iter().enumerate() {
                let mut cells = Vec::with_capacity(row.len());
                for (ci, cell) in row.iter().enumerate() {
                    if cell == &self.missing_markers[ci] {
                        cells.push(Cell::Missing);
                    } else if self.kinds[ci] == ColumnKind::Categorical {
                        let codes = &mut cat_codes[ci];
                        let next = codes.len() as u32;
                        let code = *codes.entry(cell.clone()).or_insert(next);
                        cells.push(Cell::Cat(code));
                    } else {
                        let v = parse_cell_value(self.kinds[ci], cell).ok_or_else(|| {
                            Error::Data(format!(
                                "row {ri}, column {ci}: `{cell}` is not parseable"
                            ))
                        })?;
                        cells.push(Cell::Num(v));
                    }
                }
                rows.push(cells);
            }
            out.push(rows);
        }
        Ok(out)
    }

    /// Distance between two interned rows, in `[0, n_columns]`. Zero
    /// exactly when the rows agree cell for cell.
    #[inline]
    pub fn distance(&self, a: &[Cell], b: &[Cell]) -> f64 {
        let mut sum = 0.0;
        for (ci, (x, y)) in a.iter().zip(b).enumerate() {
            sum += match (x, y) {
                (Cell::Missing, Cell::Missing) => 0.0,
                (Cell::Missing, _) | (_, Cell::Missing) => 1.0,
                (Cell::Cat(p), Cell::Cat(q)) => {
                    if p == q {
                        0.0
                    } else {
                        1.0
                    }
                }
                (Cell::Num(p), Cell::Num(q)) => {
                    let range = self.ranges[ci].unwrap_or(0.0);
                    if range > 0.0 {
                        ((p - q).abs() / range).min(1.0)
                    } else if p == q {
                        0.0
                    } else {
                        1.0
                    }
                }
                // kind mismatch can only come from incompatible tables
                _ => 1.0,
            };
        }
        sum
    }
}

/// Distances to the closest record, in both directions.
#[derive(Debug, Clone)]
pub struct DcrResult {
    /// Per reference row: distance to its closest row in `other`.
    pub d_ref: Vec<f64>,
    /// Per `other` row: distance to its closest reference row.
    pub d_other: Vec<f64>,
}

impl DcrResult {
    /// Both directions concatenated, reference side first.
    pub fn concat(&self) -> Vec<f64> {
        let mut d = self.d_ref.clone();
        d.extend_from_slice(&self.d_other);
        d
    }
}

/// Brute-force distance to the closest record between two interned row
/// sets. Either side may be empty; its counterpart then gets no distances.
pub fn dcr(metric: &RowDistanceMetric, reference: &[Vec<Cell>], other: &[Vec<Cell>]) -> DcrResult {
    let min_to = |row: &Vec<Cell>, set: &[Vec<Cell>]| -> f64 {
        let mut best = f64::INFINITY;
        for s in set {
            let d = metric.distance(row, s);
            if d < best {
                best = d;
            }
        }
        best
    };
    let d_ref = if other.is_empty() {
        Vec::new()
    } else {
        reference.iter().map(|r| min_to(r, other)).collect()
    };
    let d_other = if reference.is_empty() {
        Vec::new()
    } else {
        other.iter().map(|r| min_to(r, reference)).collect()
    };
    DcrResult { d_ref, d_other }
}

/// Linear-interpolation quantile of an ascending slice: the value at
/// fractional position `q · (n−1)`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of nothing");
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

/// The quantile probabilities `q_delta` averages over.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileSet(pub Vec<f64>);

impl Default for QuantileSet {
    /// Twenty evenly spaced points on (0, 0.5]: 0.025, 0.05, …, 0.5. Only
    /// the lower half matters — copying shows up as generated rows sitting
    /// unusually close to training rows.
    fn default() -> Self {
        QuantileSet((1..=20).map(|i| 0.025 * i as f64).collect())
    }
}

impl QuantileSet {
    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

/// One row of a [`QDeltaAudit`].
#[derive(Debug, Clone)]
pub struct QuantileProbe {
    pub q: f64,
    /// The `q`-quantile of the hold-out distances.
    pub v_q: f64,
    /// Fraction of generated-side distances at or below `v_q`.
    pub p_q: f64,
}

/// `q_delta` with its per-quantile working shown.
#[derive(Debug, Clone)]
pub struct QDeltaAudit {
    pub probes: Vec<QuantileProbe>,
    pub statistic: f64,
}

/// Excess closeness of `d_g` relative to `d_h`: the mean over the quantile
/// set of `p_q − q`, where `v_q` is the `q`-quantile of `d_h` and `p_q` the
/// fraction of `d_g` at or below `v_q`. Zero means the generated rows keep
/// the same distance profile as unseen rows; positive means they sit closer.
pub fn q_delta(d_h: &[f64], d_g: &[f64], qs: &QuantileSet) -> f64 {
    q_delta_audit(d_h, d_g, qs).statistic
}

/// [`q_delta`], returning every probe for inspection.
pub fn q_delta_audit(d_h: &[f64], d_g: &[f64], qs: &QuantileSet) -> QDeltaAudit {
    assert!(!d_h.is_empty() && !d_g.is_empty(), "empty distance set");
    let mut sorted = d_h.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let n_g = d_g.len() as f64;
    let mut probes = Vec::with_capacity(qs.0.len());
    let mut sum = 0.0;
    for &q in &qs.0 {
        let v_q = quantile_sorted(&sorted, q);
        let p_q = d_g.iter().filter(|&&x| x <= v_q).count() as f64 / n_g;
        sum += p_q - q;
        probes.push(QuantileProbe { q, v_q, p_q });
    }
    QDeltaAudit {
        statistic: sum / qs.0.len() as f64,
        probes,
    }
}

/// Bootstrap calibration controls.
#[derive(Debug, Clone, Copy)]
pub struct BootstrapConfig {
    /// Fraction of training rows per synthetic hold-out/generated part.
    pub rho: f64,
    /// Quantile of the bootstrap statistics used as the threshold.
    pub alpha: f64,
    /// Bootstrap rounds.
    pub rounds: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            rho: 0.165,
            alpha: 0.95,
            rounds: 500,
        }
    }
}

/// Bootstrap statistics and the calibrated threshold.
#[derive(Debug, Clone)]
pub struct BootstrapResult {
    pub stats: Vec<f64>,
    pub threshold: f64,
}

/// Splits the training rows into three disjoint parts per round — two of
/// size `⌊ρ·n⌋` playing hold-out and generated, the rest as reference —
/// computes the `q_delta` statistic of the split, and returns the `alpha`
/// quantile of all round statistics. Round `b` draws its shuffle from
/// substream `(seed, Bootstrap, b)`.
pub fn bootstrap_threshold(
    metric: &RowDistanceMetric,
    rows: &[Vec<Cell>],
    cfg: &BootstrapConfig,
    qs: &QuantileSet,
    seed: u64,
) -> Result<BootstrapResult> {
    if !(cfg.rho > 0.0 && cfg.rho < 0.5) {
        return Err(Error::Config(format!("rho {} must be inside (0, 0.5)", cfg.rho)));
    }
    if !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::Config(format!("alpha {} must be inside [0, 1]", cfg.alpha)));
    }
    if cfg.rounds == 0 {
        return Err(Error::Config("at least one bootstrap round is required".into()));
    }
    let n = rows.len();
    let k = ((cfg.rho * n as f64).floor() as usize).max(1);
    if 2 * k >= n {
        return Err(Error::Data(format!(
            "{n} rows are too few for three disjoint nonempty samples (two of {k} rows plus a remainder)"
        )));
    }
    let mut stats = Vec::with_capacity(cfg.rounds);
    let mut indices: Vec<usize> = (0..n).collect();
    for b in 0..cfg.rounds {
        let mut rng = substream(seed, Domain::Bootstrap, b as u64);
        indices.shuffle(&mut rng);
        let pick = |range: std::ops::Range<usize>| -> Vec<Vec<Cell>> {
            indices[range].iter().map(|&i| rows[i].clone()).collect()
        };
        let s_h = pick(0..k);
        let s_g = pick(k..2 * k);
        let s_tr = pick(2 * k..n);
        let d_h = dcr(metric, &s_tr, &s_h).concat();
        let d_g = dcr(metric, &s_tr, &s_g).concat();
        stats.push(q_delta(&d_h, &d_g, qs));
    }
    let mut sorted = stats.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite statistics"));
    let threshold = quantile_sorted(&sorted, cfg.alpha);
    Ok(BootstrapResult { stats, threshold })
}

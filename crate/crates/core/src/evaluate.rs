//! Synthetic-data quality measures.
//!
//! Two complementary checks, both built on an in-repo L2-regularized
//! logistic classifier over a fixed feature encoding: the discriminator
//! measure trains the classifier to tell real from synthetic rows and
//! reports held-out accuracy (50% means indistinguishable), and logistic
//! detection cross-validates the same task and maps the fold AUCs onto a
//! 0–100 score where 100 means the classifier does no better than chance.
//! The relational variant joins child rows with their parent's attributes
//! first, so cross-table structure enters the comparison.

use crate::error::{Error, Result};
use crate::ingest::{validate_link, ColumnKind, RawTable, RelationalLink, TableSchema};
use crate::rng::{substream, Domain};
use rand::seq::SliceRandom;
use std::collections::{BTreeMap, BTreeSet};

/// Turns mixed-type rows into bounded real vectors: numeric and datetime
/// columns min-max scaled into [0, 1], categorical columns one-hot over
/// the categories seen at fit time, and every column carrying a missing
/// indicator (the value features are zero when the cell is missing). No
/// output entry is ever non-finite.
#[derive(Debug, Clone)]
pub struct Featurizer {
    schema: TableSchema,
    plans: Vec<ColumnPlan>,
    width: usize,
}

#[derive(Debug, Clone)]
enum ColumnPlan {
    /// Min and range of the present values seen at fit time.
    Numeric { min: f64, range: f64 },
    /// Sorted categories seen at fit time, missing marker excluded.
    Categorical { categories: Vec<String> },
}

fn numeric_value(kind: ColumnKind, cell: &str) -> Option<f64> {
    match kind {
        ColumnKind::Numeric => cell.parse::<f64>().ok().filter(|v| v.is_finite()),
        ColumnKind::Datetime => crate::ingest::parse_datetime_cell(cell).map(|s| s as f64),
        ColumnKind::Categorical => None,
    }
}

impl Featurizer {
    /// Fits scaling ranges and category lists on the union of the given
    /// tables, which must share a schema.
    pub fn fit(tables: &[&RawTable]) -> Result<Self> {
        let first = tables
            .first()
            .ok_or_else(|| Error::Data("no tables to featurize".into()))?;
        for t in tables {
            if t.schema != first.schema {
                return Err(Error::Schema(
                    "tables must share a schema to featurize together".into(),
                ));
            }
        }
        let schema = first.schema.clone();
        let mut plans = Vec::with_capacity(schema.len());
        for (ci, spec) in schema.columns.iter().enumerate() {
            let plan = match spec.kind {
                ColumnKind::Categorical => {
                    let mut cats = BTreeSet::new();
                    for t in tables {
                        for row in &t.rows {
                            if row[ci] != spec.missing_marker {
                                cats.insert(row[ci].clone());
                            }
                        }
                    }
                    ColumnPlan::Categorical {
                        categories: cats.into_iter().collect(),
                    }
                }
                _ => {
                    let mut lo = f64::INFINITY;
                    let mut hi = f64::NEG_INFINITY;
                    for t in tables {
                        for (ri, row) in t.rows.iter().enumerate() {
                            let cell = &row[ci];
                            if cell == &spec.missing_marker {
                                continue;
                            }
                            let v = numeric_value(spec.kind, cell).ok_or_else(|| {
                                Error::Data(format!(
                                    "column `{}`, row {ri}: `{cell}` is not parseable",
                                    spec.name
                                ))
                            })?;
                            lo = lo.min(v);
                            hi = hi.max(v);
                        }
                    }
                    if lo > hi {
                        // column entirely missing: degenerate but legal
                        lo = 0.0;
                        hi = 0.0;
                    }
                    ColumnPlan::Numeric {
                        min: lo,
                        range: hi - lo,
                    }
                }
            };
            plans.push(plan);
        }
        let width = plans
            .iter()
            .map(|p| match p {
                ColumnPlan::Numeric { .. } => 2,
                ColumnPlan::Categorical { categories } => categories.len() + 1,
            })
            .sum();
        Ok(Featurizer {
            schema,
            plans,
            width,
        })
    }

    /// Features per row.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn transform(&self, table: &RawTable) -> Result<Vec<Vec<f64>>> {
        if table.schema != self.schema {
            return Err(Error::Schema(
                "table does not match the fitted featurizer".into(),
            ));
        }
        let mut out = Vec::with_capacity(table.n_rows());
        for (ri, row) in table.rows.iter().enumerate() {
            let mut features = Vec::with_capacity(self.width);
            for (ci, plan) in self.plans.iter().enumerate() {
                let spec = &self.schema.columns[ci];
                let cell = &row[ci];
                let missing = cell == &spec.missing_marker;
                match plan {
                    ColumnPlan::Numeric { min, range } => {
                        let scaled = if missing {
                            0.0
                        } else {
                            let v = numeric_value(spec.kind, cell).ok_or_else(|| {
                                Error::Data(format!(
                                    "column `{}`, row {ri}: `{cell}` is not parseable",
                                    spec.name
                                ))
                            })?;
                            if *range > 0.0 {
                                ((v - min) / range).clamp(0.0, 1.0)
                            } else {
                                0.0
                            }
                        };
                        features.push(scaled);
                        features.push(if missing { 1.0 } else { 0.0 });
                    }
                    ColumnPlan::Categorical { categories } => {
                        let hit = if missing {
                            None
                        } else {
                            categories.iter().position(|c| c == cell)
                        };
                        for k in 0..categories.len() {
                            features.push(if hit == Some(k) { 1.0 } else { 0.0 });
                        }
                        features.push(if missing { 1.0 } else { 0.0 });
                    }
                }
            }
            debug_assert_eq!(features.len(), self.width);
            debug_assert!(features.iter().all(|f| f.is_finite()));
            out.push(features);
        }
        Ok(out)
    }
}

/// Probability that a random positive scores above a random negative, with
/// ties counted half — the rank-sum formulation.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Data(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Data(
            "ROC-AUC needs both classes present".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));
    // average ranks within tied groups (1-based ranks)
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j < order.len() && scores[order[j]] == scores[order[i]] {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0; // mean of ranks i+1 ..= j
        for &idx in &order[i..j] {
            if labels[idx] {
                rank_sum_pos += avg_rank;
            }
        }
        i = j;
    }
    let u = rank_sum_pos - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// L2-regularized logistic regression fit by deterministic full-batch
/// gradient descent from a zero start, with the step size chosen from the
/// loss's curvature bound so the fit never oscillates.
#[derive(Debug, Clone)]
pub struct LogisticRegression {
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl LogisticRegression {
    pub fn fit(x: &[Vec<f64>], y: &[bool], l2: f64, iterations: usize) -> Result<Self> {
        if x.is_empty() || x.len() != y.len() {
            return Err(Error::Data(format!(
                "{} feature rows for {} labels",
                x.len(),
                y.len()
            )));
        }
        let n = x.len();
        let d = x[0].len();
        // curvature bound: 0.25·max row norm² (plus bias) plus the ridge
        let max_sq = x
            .iter()
            .map(|row| row.iter().map(|v| v * v).sum::<f64>() + 1.0)
            .fold(0.0, f64::max);
        let lr = 1.0 / (0.25 * max_sq + l2).max(1e-12);
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        for _ in 0..iterations {
            let mut gw = vec![0.0; d];
            let mut gb = 0.0;
            for (row, &label) in x.iter().zip(y) {
                let z = row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>() + b;
                let err = sigmoid(z) - if label { 1.0 } else { 0.0 };
                for (g, a) in gw.iter_mut().zip(row) {
                    *g += err * a;
                }
                gb += err;
            }
            let inv_n = 1.0 / n as f64;
            for (wi, gi) in w.iter_mut().zip(&gw) {
                *wi -= lr * (gi * inv_n + l2 * *wi);
            }
            b -= lr * gb * inv_n;
        }
        Ok(LogisticRegression { weights: w, bias: b })
    }

    pub fn score(&self, row: &[f64]) -> f64 {
        let z = row
            .iter()
            .zip(&self.weights)
            .map(|(a, c)| a * c)
            .sum::<f64>()
            + self.bias;
        sigmoid(z)
    }
}

const LOGISTIC_ITERATIONS: usize = 400;

/// Result of a detection run.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub fold_aucs: Vec<f64>,
    pub mu_ra: f64,
    /// 100 means the detector is at chance: best possible quality.
    pub ld: f64,
}

/// The score aggregation alone: each fold contributes
/// `max(0.5, AUC)·2 − 1`, and the detection score is `100·(1 − mean)`.
pub fn detection_from_fold_aucs(fold_aucs: &[f64]) -> Result<DetectionResult> {
    if fold_aucs.is_empty() {
        return Err(Error::Data("no fold AUCs".into()));
    }
    let mu_ra = fold_aucs
        .iter()
        .map(|&auc| auc.max(0.5) * 2.0 - 1.0)
        .sum::<f64>()
        / fold_aucs.len() as f64;
    Ok(DetectionResult {
        fold_aucs: fold_aucs.to_vec(),
        mu_ra,
        ld: 100.0 * (1.0 - mu_ra),
    })
}

/// Stratified fold ids: each class is shuffled separately and dealt
/// round-robin, so every fold holds both classes whenever each class has
/// at least `folds` members.
fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Vec<usize> {
    let mut rng = substream(seed, Domain::Evaluation, 0);
    let mut assignment = vec![0usize; labels.len()];
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        for (slot, idx) in members.into_iter().enumerate() {
            assignment[idx] = slot % folds;
        }
    }
    assignment
}

/// Cross-validated real-vs-synthetic detection. The labeled union is split
/// into stratified folds; each fold's ROC-AUC (trained on the remaining
/// folds) enters the aggregation of [`detection_from_fold_aucs`].
pub fn logistic_detection(
    real: &RawTable,
    synthetic: &RawTable,
    folds: usize,
    seed: u64,
) -> Result<DetectionResult> {
    if folds < 2 {
        return Err(Error::Config("detection needs at least 2 folds".into()));
    }
    if real.n_rows() == 0 || synthetic.n_rows() == 0 {
        return Err(Error::Data("detection needs nonempty tables".into()));
    }
    let featurizer = Featurizer::fit(&[real, synthetic])?;
    let mut x = featurizer.transform(real)?;
    x.extend(featurizer.transform(synthetic)?);
    let labels: Vec<bool> = std::iter::repeat_n(true, real.n_rows())
        .chain(std::iter::repeat_n(false, synthetic.n_rows()))
        .collect();
    let assignment = stratified_folds(&labels, folds, seed);
    let l2 = 1.0 / labels.len() as f64;
    let mut fold_aucs = Vec::with_capacity(folds);
    for fold in 0..folds {
        let mut train_x = Vec::new();
        let mut train_y = Vec::new();
        let mut test_scores = Vec::new();
        let mut test_y = Vec::new();
        for i in 0..labels.len() {
            if assignment[i] == fold {
                test_y.push((i, labels[i]));
            } else {
                train_x.push(x[i].clone());
                train_y.push(labels[i]);
            }
        }
        let one_class = |ys: &[bool]| ys.iter().all(|&l| l) || ys.iter().all(|&l| !l);
        if test_y.is_empty() || one_class(&train_y) || one_class(
            &test_y.iter().map(|&(_, l)| l).collect::<Vec<_>>(),
        ) {
            return Err(Error::Data(format!(
                "fold {fold} holds a single class; use fewer folds or more rows"
            )));
        }
        let model = LogisticRegression::fit(&train_x, &train_y, l2, LOGISTIC_ITERATIONS)?;
        let mut ys = Vec::with_capacity(test_y.len());
        for (i, label) in test_y {
            test_scores.push(model.score(&x[i]));
            ys.push(label);
        }
        fold_aucs.push(roc_auc(&test_scores, &ys)?);
    }
    detection_from_fold_aucs(&fold_aucs)
}

/// Trains the detector on an equal-sized labeled union of real and
/// synthetic rows and reports its accuracy, as a percentage, on a held-out
/// union of fresh real and fresh synthetic rows. 50% means the synthetic
/// rows are indistinguishable. The synthetic table must bring enough rows
/// to cover training (matching `real`) plus a held-out slice matching
/// `holdout_real`.
pub fn discriminator_measure(
    real: &RawTable,
    synthetic: &RawTable,
    holdout_real: &RawTable,
    seed: u64,
) -> Result<f64> {
    if real.n_rows() == 0 || holdout_real.n_rows() == 0 {
        return Err(Error::Data(
            "discriminator needs nonempty real and holdout tables".into(),
        ));
    }
    if real.schema != synthetic.schema || real.schema != holdout_real.schema {
        return Err(Error::Schema(
            "discriminator tables must share a schema".into(),
        ));
    }
    let need = real.n_rows() + holdout_real.n_rows();
    if synthetic.n_rows() < need {
        return Err(Error::Data(format!(
            "synthetic table has {} rows but {need} are needed: {} to match the real training rows and {} fresh ones for the held-out test",
            synthetic.n_rows(),
            real.n_rows(),
            holdout_real.n_rows()
        )));
    }
    let syn_train = synthetic.select_rows(&(0..real.n_rows()).collect::<Vec<_>>());
    let syn_test = synthetic.select_rows(&(real.n_rows()..need).collect::<Vec<_>>());

    let featurizer = Featurizer::fit(&[real, &syn_train, holdout_real, &syn_test])?;
    let mut train_x = featurizer.transform(real)?;
    train_x.extend(featurizer.transform(&syn_train)?);
    let mut train_y: Vec<bool> = std::iter::repeat_n(true, real.n_rows())
        .chain(std::iter::repeat_n(false, syn_train.n_rows()))
        .collect();

    // seeded shuffle of the training union; full-batch descent makes this
    // order-free, but the seed keeps the contract explicit
    let mut order: Vec<usize> = (0..train_x.len()).collect();
    order.shuffle(&mut substream(seed, Domain::Evaluation, 1));
    train_x = order.iter().map(|&i| train_x[i].clone()).collect();
    train_y = order.iter().map(|&i| train_y[i]).collect();

    let l2 = 1.0 / train_y.len() as f64;
    let model = LogisticRegression::fit(&train_x, &train_y, l2, LOGISTIC_ITERATIONS)?;

    let mut correct = 0usize;
    let mut total = 0usize;
    for (table, label) in [(holdout_real, true), (&syn_test, false)] {
        for row in featurizer.transform(table)? {
            let predicted = model.score(&row) >= 0.5;
            if predicted == label {
                correct += 1;
            }
            total += 1;
        }
    }
    Ok(100.0 * correct as f64 / total as f64)
}

/// Joins each child row to its parent's attributes (parent key dropped,
/// child's key column dropped) and runs [`logistic_detection`] on the
/// merged tables, so relationships across the link enter the comparison.
pub fn merged_table_detection(
    real_parent: &RawTable,
    real_child: &RawTable,
    syn_parent: &RawTable,
    syn_child: &RawTable,
    key: &str,
    folds: usize,
    seed: u64,
) -> Result<DetectionResult> {
    let merged_real = merge_on_key(real_parent, real_child, key)?;
    let merged_syn = merge_on_key(syn_parent, syn_child, key)?;
    logistic_detection(&merged_real, &merged_syn, folds, seed)
}

/// One merged row per child row: the child's columns (key excluded)
/// followed by its parent's columns (key excluded). The link must be valid
/// and the child table nonempty.
pub fn merge_on_key(parent: &RawTable, child: &RawTable, key: &str) -> Result<RawTable> {
    if child.n_rows() == 0 {
        return Err(Error::Data("the child table has no rows to merge".into()));
    }
    let link = RelationalLink {
        parent: parent.clone(),
        child: child.clone(),
        key_column: key.to_string(),
        max_children: usize::MAX,
    };
    let report = validate_link(&link)?;
    if !report.ok {
        return Err(Error::Data(format!(
            "cannot merge on `{key}`: {}",
            report
                .violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join("; ")
        )));
    }
    let pk = parent.schema.index_of(key).expect("validated");
    let ck = child.schema.index_of(key).expect("validated");
    let mut columns = Vec::new();
    for (i, spec) in child.schema.columns.iter().enumerate() {
        if i != ck {
            columns.push(spec.clone());
        }
    }
    for (i, spec) in parent.schema.columns.iter().enumerate() {
        if i != pk {
            let mut renamed = spec.clone();
            renamed.name = format!("parent.{}", spec.name);
            columns.push(renamed);
        }
    }
    let schema = TableSchema::new(columns)?;
    let mut by_key = std::collections::BTreeMap::new();
    for row in &parent.rows {
        by_key.insert(row[pk].clone(), row);
    }
    let mut rows = Vec::with_capacity(child.n_rows());
    for crow in &child.rows {
        let prow = by_key[&crow[ck]];
        let mut merged = Vec::with_capacity(schema.len());
        for (i, cell) in crow.iter().enumerate() {
            if i != ck {
                merged.push(cell.clone());
            }
        }
        for (i, cell) in prow.iter().enumerate() {
            if i != pk {
                merged.push(cell.clone());
            }
        }
        rows.push(merged);
    }
    RawTable::new(schema, rows)
}

/// Pearson correlation coefficient of two equal-length samples.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Data(format!(
            "correlation needs two equal samples of at least 2 points, got {} and {}",
            xs.len(),
            ys.len()
        )));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Data("correlation is undefined for a constant sample".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

/// Total variation distance between the per-column marginals of two tables.
///
/// Categorical columns compare category frequencies directly. Numeric and
/// datetime columns are binned into `bins` equal-width bins over the pooled
/// present range (missing cells form their own bin). The result lies in
/// `[0, 1]`.
pub fn column_tvd(real: &RawTable, synthetic: &RawTable, column: &str, bins: usize) -> Result<f64> {
    let ri = real
        .schema
        .index_of(column)
        .ok_or_else(|| Error::Schema(format!("column `{column}` not found")))?;
    let si = synthetic
        .schema
        .index_of(column)
        .ok_or_else(|| Error::Schema(format!("column `{column}` not found")))?;
    if real.n_rows() == 0 || synthetic.n_rows() == 0 {
        return Err(Error::Data("both tables need rows to compare marginals".into()));
    }
    if bins == 0 {
        return Err(Error::Data("bins must be at least 1".into()));
    }
    let kind = real.schema.columns[ri].kind;

    let freq_diff = |a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>, na: f64, nb: f64| {
        let mut keys: BTreeSet<&String> = a.keys().collect();
        keys.extend(b.keys());
        let mut sum = 0.0;
        for k in keys {
            let pa = *a.get(k).unwrap_or(&0) as f64 / na;
            let pb = *b.get(k).unwrap_or(&0) as f64 / nb;
            sum += (pa - pb).abs();
        }
        sum / 2.0
    };

    match kind {
        ColumnKind::Categorical => {
            let mut fa = BTreeMap::new();
            for row in &real.rows {
                *fa.entry(row[ri].clone()).or_insert(0) += 1;
            }
            let mut fb = BTreeMap::new();
            for row in &synthetic.rows {
                *fb.entry(row[si].clone()).or_insert(0) += 1;
            }
            Ok(freq_diff(&fa, &fb, real.n_rows() as f64, synthetic.n_rows() as f64))
        }
        ColumnKind::Numeric | ColumnKind::Datetime => {
            let value = |table: &RawTable, col: usize, row: usize| -> Result<Option<f64>> {
                if table.is_missing(row, col) {
                    return Ok(None);
                }
                let cell = &table.rows[row][col];
                let v = if kind == ColumnKind::Datetime {
                    crate::ingest::parse_datetime_cell(cell).ok_or_else(|| {
                        Error::Data(format!("`{cell}` is not a recognized date or date-time"))
                    })? as f64
                } else {
                    cell.parse::<f64>()
                        .map_err(|_| Error::Data(format!("`{cell}` is not numeric")))?
                };
                Ok(Some(v))
            };
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            let mut values_a = Vec::with_capacity(real.n_rows());
            for row in 0..real.n_rows() {
                let v = value(real, ri, row)?;
                if let Some(v) = v {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                values_a.push(v);
            }
            let mut values_b = Vec::with_capacity(synthetic.n_rows());
            for row in 0..synthetic.n_rows() {
                let v = value(synthetic, si, row)?;
                if let Some(v) = v {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
                values_b.push(v);
            }
            let width = if hi > lo { (hi - lo) / bins as f64 } else { 1.0 };
            let bin_of = |v: Option<f64>| -> String {
                match v {
                    None => "missing".to_string(),
                    Some(v) => {
                        let b = (((v - lo) / width) as usize).min(bins - 1);
                        format!("b{b}")
                    }
                }
            };
            let mut fa = BTreeMap::new();
            for v in values_a {
                *fa.entry(bin_of(v)).or_insert(0) += 1;
            }
            let mut fb = BTreeMap::new();
            for v in values_b {
                *fb.entry(bin_of(v)).or_insert(0) += 1;
            }
            Ok(freq_diff(&fa, &fb, real.n_rows() as f64, synthetic.n_rows() as f64))
        }
    }
}

//! Seeded synthetic datasets with known structure, used by the end-to-end
//! tests and handy for demos: a two-component Gaussian mixture with
//! component-linked categories, and a parent/child pair whose values are
//! strongly correlated across the link.

use crate::ingest::{ColumnKind, ColumnSpec, RawTable, TableSchema};
use crate::rng::{substream, Domain};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};

/// A table with two numeric columns drawn from a two-component Gaussian
/// mixture and two categorical columns whose frequencies depend on the
/// component. Values are formatted with two fraction digits.
pub fn gaussian_mixture_table(n: usize, seed: u64) -> RawTable {
    let mut rng = substream(seed, Domain::Fixture, 0);
    let comp0_x = Normal::new(0.0, 1.0).unwrap();
    let comp1_x = Normal::new(4.0, 1.0).unwrap();
    let comp0_y = Normal::new(10.0, 2.0).unwrap();
    let comp1_y = Normal::new(2.0, 1.0).unwrap();
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let comp1 = rng.random::<f64>() < 0.5;
        let (x, y) = if comp1 {
            (comp1_x.sample(&mut rng), comp1_y.sample(&mut rng))
        } else {
            (comp0_x.sample(&mut rng), comp0_y.sample(&mut rng))
        };
        let u = rng.random::<f64>();
        let color = if comp1 {
            if u < 0.7 { "blue" } else { "green" }
        } else if u < 0.7 {
            "red"
        } else {
            "blue"
        };
        let v = rng.random::<f64>();
        let grade = if comp1 == (v < 0.8) { "a" } else { "b" };
        rows.push(vec![
            format!("{x:.2}"),
            format!("{y:.2}"),
            color.to_string(),
            grade.to_string(),
        ]);
    }
    let schema = TableSchema::new(vec![
        ColumnSpec::new("x", ColumnKind::Numeric, 2),
        ColumnSpec::new("y", ColumnKind::Numeric, 2),
        ColumnSpec::new("color", ColumnKind::Categorical, 0),
        ColumnSpec::new("grade", ColumnKind::Categorical, 0),
    ])
    .unwrap();
    RawTable::new(schema, rows).unwrap()
}

/// A linked parent/child pair for relational tests.
pub struct RelationalToy {
    /// Columns `pid` (key) and `pvalue`.
    pub parent: RawTable,
    /// Columns `pid` (key) and `cvalue`; child counts are Poisson.
    pub child: RawTable,
}

/// Parent values are Normal(50, 10). Each parent draws a Poisson(`mean_children`)
/// number of children whose values equal the parent value plus Normal noise
/// sized so the parent/child correlation is 0.95. Values are formatted with
/// one fraction digit.
pub fn correlated_relational(n_parents: usize, mean_children: f64, seed: u64) -> RelationalToy {
    let mut rng = substream(seed, Domain::Fixture, 1);
    let parent_dist = Normal::new(50.0, 10.0).unwrap();
    // With parent deviation 10, noise of 10 * sqrt(1/0.95^2 - 1) makes
    // corr(parent, parent + noise) = 0.95.
    let noise_sigma = 10.0 * (1.0 / (0.95_f64 * 0.95) - 1.0).sqrt();
    let noise_dist = Normal::new(0.0, noise_sigma).unwrap();
    let count_dist = Poisson::new(mean_children).unwrap();
    let mut parent_rows = Vec::with_capacity(n_parents);
    let mut child_rows = Vec::new();
    for i in 0..n_parents {
        let key = format!("p{i}");
        let pvalue: f64 = parent_dist.sample(&mut rng);
        parent_rows.push(vec![key.clone(), format!("{pvalue:.1}")]);
        let n_children = count_dist.sample(&mut rng) as usize;
        for _ in 0..n_children {
            let cvalue = pvalue + noise_dist.sample(&mut rng);
            child_rows.push(vec![key.clone(), format!("{cvalue:.1}")]);
        }
    }
    let parent_schema = TableSchema::new(vec![
        ColumnSpec::new("pid", ColumnKind::Categorical, 0),
        ColumnSpec::new("pvalue", ColumnKind::Numeric, 1),
    ])
    .unwrap();
    let child_schema = TableSchema::new(vec![
        ColumnSpec::new("pid", ColumnKind::Categorical, 0),
        ColumnSpec::new("cvalue", ColumnKind::Numeric, 1),
    ])
    .unwrap();
    RelationalToy {
        parent: RawTable::new(parent_schema, parent_rows).unwrap(),
        child: RawTable::new(child_schema, child_rows).unwrap(),
    }
}

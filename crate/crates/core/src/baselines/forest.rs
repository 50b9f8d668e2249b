use rand::seq::index;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{check_width, vote, FeatureMatrix};
use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// Features tried per node; `None` means `ceil(sqrt(n_features))`.
    pub max_features: Option<usize>,
    pub max_depth: Option<usize>,
    /// Fit each tree on a bootstrap resample; off fits on the rows as given.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_features: None,
            max_depth: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    /// Root at index 0.
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn leaf_counts(&self, row: &[f64]) -> &[usize] {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
                Node::Leaf { counts } => return counts,
            }
        }
    }

    pub fn predict(&self, row: &[f64]) -> usize {
        vote(self.leaf_counts(row))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub n_classes: usize,
    pub n_features: usize,
    /// Impurity decrease per feature, normalized over the whole forest.
    pub importances: Vec<f64>,
    pub feature_names: Vec<String>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

struct Best {
    gain: f64,
    feature: usize,
    threshold: f64,
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [usize],
    n_classes: usize,
    max_features: usize,
    max_depth: Option<usize>,
    importance: Vec<f64>,
}

impl Grower<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        idx.iter().for_each(|&i| c[self.y[i]] += 1);
        c
    }

    /// Best split of `idx` on `feature`, scanning thresholds in ascending
    /// order and keeping the first maximum.
    fn scan(&self, idx: &mut [usize], feature: usize, parent: &[usize], best: &mut Option<Best>) {
        let x = self.x;
        idx.sort_by(|&a, &b| x[a][feature].total_cmp(&x[b][feature]).then(a.cmp(&b)));
        let n = idx.len();
        let parent_impurity = n as f64 * gini(parent, n);
        let mut left = vec![0; self.n_classes];
        let mut right = parent.to_vec();
        for s in 1..n {
            let moved = self.y[idx[s - 1]];
            left[moved] += 1;
            right[moved] -= 1;
            let (lo, hi) = (x[idx[s - 1]][feature], x[idx[s]][feature]);
            if lo == hi {
                continue;
            }
            let gain = parent_impurity - s as f64 * gini(&left, s) - (n - s) as f64 * gini(&right, n - s);
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                let mid = lo + (hi - lo) / 2.0;
                *best = Some(Best {
                    gain,
                    feature,
                    threshold: if mid < hi { mid } else { lo },
                });
            }
        }
    }

    fn grow(&mut self, rows: Vec<usize>, rng: &mut seed::Rng) -> Tree {
        let n_features = self.x[0].len();
        let mut nodes = vec![Node::Leaf { counts: Vec::new() }];
        let mut stack = vec![(0usize, rows, 0usize)];
        while let Some((slot, mut idx, depth)) = stack.pop() {
            let counts = self.counts(&idx);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            if pure || idx.len() < 2 || self.max_depth.is_some_and(|d| depth >= d) {
                nodes[slot] = Node::Leaf { counts };
                continue;
            }
            let mut tried = index::sample(rng, n_features, self.max_features).into_vec();
            tried.sort_unstable();
            let mut best = None;
            for &f in &tried {
                self.scan(&mut idx, f, &counts, &mut best);
            }
            if best.is_none() {
                // Every sampled feature is constant here; fall back to the rest.
                for f in (0..n_features).filter(|f| !tried.contains(f)) {
                    self.scan(&mut idx, f, &counts, &mut best);
                    if best.is_some() {
                        break;
                    }
                }
            }
            let Some(best) = best else {
                nodes[slot] = Node::Leaf { counts };
                continue;
            };
            self.importance[best.feature] += best.gain;
            let (l, r): (Vec<usize>, Vec<usize>) =
                idx.iter().partition(|&&i| self.x[i][best.feature] <= best.threshold);
            let (left, right) = (nodes.len(), nodes.len() + 1);
            nodes.push(Node::Leaf { counts: Vec::new() });
            nodes.push(Node::Leaf { counts: Vec::new() });
            nodes[slot] = Node::Split {
                feature: best.feature,
                threshold: best.threshold,
                left,
                right,
            };
            stack.push((right, r, depth + 1));
            stack.push((left, l, depth + 1));
        }
        Tree { nodes }
    }
}

/// CART forest with Gini splits. Tree `t` draws its bootstrap and feature
/// subsets from its own stream `derive(seed, [t])`.
pub fn train_random_forest(matrix: &FeatureMatrix, config: &ForestConfig) -> Result<ForestModel> {
    let n_classes = matrix.require_classes()?;
    let f = matrix.n_features();
    if config.n_trees == 0 {
        return Err(Error::InvalidConfig("n_trees must be positive".into()));
    }
    let max_features = match config.max_features {
        None => (f as f64).sqrt().ceil() as usize,
        Some(m) if (1..=f).contains(&m) => m,
        Some(m) => return Err(Error::InvalidConfig(format!("max_features {m} not in 1..={f}"))),
    };
    let n = matrix.len();
    let mut grower = Grower {
        x: &matrix.rows,
        y: &matrix.labels,
        n_classes,
        max_features,
        max_depth: config.max_depth,
        importance: vec![0.0; f],
    };
    let trees = (0..config.n_trees)
        .map(|t| {
            let mut rng = seed::derived_rng(config.seed, &[t as u64]);
            let rows = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grower.grow(rows, &mut rng)
        })
        .collect();
    let total: f64 = grower.importance.iter().sum();
    let importances = if total > 0.0 {
        grower.importance.iter().map(|v| v / total).collect()
    } else {
        vec![0.0; f]
    };
    Ok(ForestModel {
        trees,
        n_classes,
        n_features: f,
        importances,
        feature_names: matrix.feature_names.clone(),
    })
}

/// Majority vote over trees; ties go to the smallest class index.
pub fn predict_forest(model: &ForestModel, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
    check_width(rows, model.n_features)?;
    Ok(rows
        .iter()
        .map(|r| {
            let mut votes = vec![0; model.n_classes];
            model.trees.iter().for_each(|t| votes[t.predict(r)] += 1);
            vote(&votes)
        })
        .collect())
}

/// `feature,importance` rows sorted by descending importance.
pub fn importance_csv(model: &ForestModel) -> String {
    let mut order: Vec<usize> = (0..model.n_features).collect();
    order.sort_by(|&a, &b| model.importances[b].total_cmp(&model.importances[a]).then(a.cmp(&b)));
    let mut s = String::from("feature,importance\n");
    for i in order {
        s.push_str(&format!("{},{:?}\n", model.feature_names[i], model.importances[i]));
    }
    s
}

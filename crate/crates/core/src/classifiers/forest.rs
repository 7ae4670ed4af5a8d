//! Random forest of CART trees with Gini-impurity splits and
//! mean-decrease-in-impurity feature importances.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::seeding::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        label: u8,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> u8 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { label } => return *label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }
}

/// Bagged CART trees plus the normalized Gini importances accumulated while
/// growing them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub n_trees: usize,
    pub seed: u64,
    pub trees: Vec<Tree>,
    /// Normalized mean decrease in Gini impurity per feature; sums to 1
    /// whenever any split occurred, otherwise all zeros.
    pub importances: Vec<f64>,
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts
        .iter()
        .map(|c| {
            let p = *c as f64 / t;
            p * p
        })
        .sum::<f64>()
}

fn majority(counts: &[usize], classes: &[u8]) -> u8 {
    let best = counts
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .unwrap()
        .0;
    classes[best]
}

struct TreeBuilder<'a> {
    rows: &'a [Vec<f64>],
    class_index: &'a [usize],
    classes: &'a [u8],
    features_per_split: usize,
    nodes: Vec<Node>,
    // Raw (unnormalized) impurity decrease per feature, weighted by node size.
    importance: Vec<f64>,
}

impl<'a> TreeBuilder<'a> {
    fn class_counts(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.classes.len()];
        for i in indices {
            counts[self.class_index[*i]] += 1;
        }
        counts
    }

    /// Best (feature, threshold, impurity decrease) among the candidate
    /// features, scanning sorted values with running class counts. Candidates
    /// are visited in ascending feature order so exact ties resolve
    /// deterministically.
    fn best_split(
        &self,
        indices: &[usize],
        candidates: &[usize],
        parent_gini: f64,
    ) -> Option<(usize, f64, f64)> {
        let n = indices.len();
        let mut best: Option<(usize, f64, f64)> = None;
        for &feature in candidates {
            let mut order: Vec<usize> = indices.to_vec();
            order.sort_by(|a, b| {
                self.rows[*a][feature]
                    .partial_cmp(&self.rows[*b][feature])
                    .unwrap()
                    .then(a.cmp(b))
            });
            let mut left_counts = vec![0usize; self.classes.len()];
            let mut right_counts = self.class_counts(indices);
            for split_at in 1..n {
                let moved = order[split_at - 1];
                left_counts[self.class_index[moved]] += 1;
                right_counts[self.class_index[moved]] -= 1;
                let prev = self.rows[order[split_at - 1]][feature];
                let next = self.rows[order[split_at]][feature];
                if prev == next {
                    continue;
                }
                let g_left = gini(&left_counts, split_at);
                let g_right = gini(&right_counts, n - split_at);
                let weighted = (split_at as f64 * g_left + (n - split_at) as f64 * g_right)
                    / n as f64;
                let decrease = parent_gini - weighted;
                let better = match best {
                    None => decrease > 1e-15,
                    Some((_, _, best_dec)) => decrease > best_dec + 1e-15,
                };
                if better {
                    best = Some((feature, 0.5 * (prev + next), decrease));
                }
            }
        }
        best
    }

    fn grow(&mut self, indices: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let counts = self.class_counts(&indices);
        let parent_gini = gini(&counts, indices.len());
        let node_label = majority(&counts, self.classes);

        if parent_gini == 0.0 || indices.len() < 2 {
            self.nodes.push(Node::Leaf { label: node_label });
            return self.nodes.len() - 1;
        }

        let dims = self.rows[0].len();
        let mut pool: Vec<usize> = (0..dims).collect();
        // Partial Fisher-Yates: draw `features_per_split` distinct features.
        let take = self.features_per_split.min(dims);
        for i in 0..take {
            let j = rng.random_range(i..dims);
            pool.swap(i, j);
        }
        let mut candidates: Vec<usize> = pool[..take].to_vec();
        candidates.sort_unstable();

        let Some((feature, threshold, decrease)) =
            self.best_split(&indices, &candidates, parent_gini)
        else {
            self.nodes.push(Node::Leaf { label: node_label });
            return self.nodes.len() - 1;
        };

        self.importance[feature] += decrease * indices.len() as f64;

        let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|i| self.rows[*i][feature] <= threshold);

        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf { label: node_label }); // placeholder
        let left = self.grow(left_idx, rng);
        let right = self.grow(right_idx, rng);
        self.nodes[slot] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        slot
    }
}

/// Train a forest: `n_trees` CART trees, each on a bootstrap sample, with
/// `sqrt(dims)` candidate features per split and unlimited depth. Each tree
/// derives its own RNG from `seed`, so results do not depend on training
/// order.
pub fn train_forest(
    rows: &[Vec<f64>],
    labels: &[u8],
    classes: &[u8],
    n_trees: usize,
    seed: u64,
) -> ForestModel {
    let n = rows.len();
    let dims = rows[0].len();
    let features_per_split = (dims as f64).sqrt().ceil() as usize;
    let class_index: Vec<usize> = labels
        .iter()
        .map(|l| classes.iter().position(|c| c == l).unwrap())
        .collect();

    let mut trees = Vec::with_capacity(n_trees);
    let mut raw_importance = vec![0.0; dims];
    for t in 0..n_trees {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, t as u64));
        let sample: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
        let mut builder = TreeBuilder {
            rows,
            class_index: &class_index,
            classes,
            features_per_split,
            nodes: Vec::new(),
            importance: vec![0.0; dims],
        };
        builder.grow(sample, &mut rng);
        for (acc, v) in raw_importance.iter_mut().zip(&builder.importance) {
            *acc += v;
        }
        trees.push(Tree {
            nodes: builder.nodes,
        });
    }

    let total: f64 = raw_importance.iter().sum();
    let importances = if total > 0.0 {
        raw_importance.iter().map(|v| v / total).collect()
    } else {
        raw_importance
    };

    ForestModel {
        n_trees,
        seed,
        trees,
        importances,
    }
}

impl ForestModel {
    /// Majority vote across trees; vote ties resolve to the smallest label.
    pub fn predict(&self, row: &[f64], classes: &[u8]) -> u8 {
        let mut votes = vec![0usize; classes.len()];
        for tree in &self.trees {
            let label = tree.predict(row);
            if let Some(pos) = classes.iter().position(|c| *c == label) {
                votes[pos] += 1;
            }
        }
        let best = votes
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
            .unwrap()
            .0;
        classes[best]
    }
}

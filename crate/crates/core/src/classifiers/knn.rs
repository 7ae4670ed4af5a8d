//! k-nearest-neighbour classifier over standardized rows.

use serde::{Deserialize, Serialize};

/// Stored training rows (already standardized) with labels and the vote size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl KnnModel {
    /// Majority vote among the `k` nearest stored rows by Euclidean distance.
    /// Exact distance ties are broken by stored-row index, and a vote tie is
    /// broken by the nearest neighbour among the tied classes, so prediction
    /// is deterministic and (up to exact ties) independent of row order.
    pub fn predict(&self, row: &[f64]) -> u8 {
        let mut distances: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, stored)| {
                let d2: f64 = stored
                    .iter()
                    .zip(row)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, i)
            })
            .collect();
        distances.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));

        let neighbours = &distances[..self.k.min(distances.len())];
        let mut votes: Vec<(u8, usize)> = Vec::new();
        for (_, idx) in neighbours {
            let label = self.labels[*idx];
            match votes.iter_mut().find(|(l, _)| *l == label) {
                Some((_, count)) => *count += 1,
                None => votes.push((label, 1)),
            }
        }
        let top = votes.iter().map(|(_, c)| *c).max().unwrap();
        let tied: Vec<u8> = votes
            .iter()
            .filter(|(_, c)| *c == top)
            .map(|(l, _)| *l)
            .collect();
        if tied.len() == 1 {
            return tied[0];
        }
        // Vote tie: the nearest neighbour belonging to a tied class decides.
        neighbours
            .iter()
            .map(|(_, idx)| self.labels[*idx])
            .find(|l| tied.contains(l))
            .unwrap()
    }
}

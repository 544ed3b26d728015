//! FedCluster: clients are grouped once (round 1) by k-means over per-client
//! data summaries, then weighted averaging runs independently inside each
//! cluster. The evaluation model is the sample-size-weighted average of the
//! cluster models.

use super::{
    weighted_average_weights, RoundUpdate, Strategy, StrategyConfig, StrategyError, StrategyKind,
    StrategyState,
};
use crate::model::ParamVector;
use crate::seed::rng_for;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Compact description of one client's data distribution: the six feature
/// means plus the positive-label rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClientSummary {
    pub client_id: usize,
    pub n_samples: usize,
    pub features: Vec<f64>,
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Seeded k-means over small point sets.
///
/// Deterministic procedure: k-means++ initialization driven by a ChaCha
/// stream (a zero-distance spread falls back to the lowest unused index),
/// then Lloyd iterations with distance ties resolved toward the lowest
/// cluster index. Empty clusters keep their previous centroid.
pub fn kmeans_assign(points: &[Vec<f64>], k: usize, seed: u64) -> Vec<usize> {
    let n = points.len();
    assert!(k >= 1 && k <= n, "need 1 <= k <= n");
    let mut rng = rng_for(seed, "kmeans", &[]);
    let mut centroids: Vec<Vec<f64>> = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)].clone());
    while centroids.len() < k {
        let dists: Vec<f64> = points
            .iter()
            .map(|p| {
                centroids
                    .iter()
                    .map(|c| sq_dist(p, c))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = dists.iter().sum();
        let next = if total == 0.0 {
            centroids.len() % n
        } else {
            let mut r = rng.random::<f64>() * total;
            let mut pick = n - 1;
            for (i, &d) in dists.iter().enumerate() {
                if r < d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        };
        centroids.push(points[next].clone());
    }

    let assign_all = |centroids: &[Vec<f64>]| -> Vec<usize> {
        points
            .iter()
            .map(|p| {
                let mut best = 0;
                let mut best_d = sq_dist(p, &centroids[0]);
                for (c, centroid) in centroids.iter().enumerate().skip(1) {
                    let d = sq_dist(p, centroid);
                    if d < best_d {
                        best = c;
                        best_d = d;
                    }
                }
                best
            })
            .collect()
    };

    let dim = points[0].len();
    let mut assignment = assign_all(&centroids);
    for _ in 0..100 {
        for (c, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<f64>> = points
                .iter()
                .zip(&assignment)
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            for d in 0..dim {
                centroid[d] = members.iter().map(|p| p[d]).sum::<f64>() / members.len() as f64;
            }
        }
        let next = assign_all(&centroids);
        if next == assignment {
            break;
        }
        assignment = next;
    }
    assignment
}

pub struct FedCluster {
    /// client_id -> cluster index (clusters renumbered compactly).
    assignment: Vec<usize>,
    models: Vec<ParamVector>,
    /// Static per-cluster sample totals, used to weight the eval model.
    sizes: Vec<usize>,
}

impl FedCluster {
    pub fn new(
        initial: ParamVector,
        cfg: &StrategyConfig,
        summaries: &[ClientSummary],
        seed: u64,
    ) -> Result<Self, StrategyError> {
        if summaries.is_empty() {
            return Err(StrategyError::Config("no client summaries".into()));
        }
        if cfg.n_clusters > summaries.len() {
            return Err(StrategyError::Config(format!(
                "n_clusters {} exceeds client count {}",
                cfg.n_clusters,
                summaries.len()
            )));
        }
        let mut ordered: Vec<&ClientSummary> = summaries.iter().collect();
        ordered.sort_by_key(|s| s.client_id);
        if ordered
            .iter()
            .enumerate()
            .any(|(i, s)| s.client_id != i)
        {
            return Err(StrategyError::Config(
                "client summaries must cover ids 0..n".into(),
            ));
        }
        let points: Vec<Vec<f64>> = ordered.iter().map(|s| s.features.clone()).collect();
        let raw = kmeans_assign(&points, cfg.n_clusters, seed);
        // Renumber to the non-empty clusters only; k-means can leave clusters
        // unused when summaries coincide, which folds them together.
        let mut used: Vec<usize> = raw.clone();
        used.sort_unstable();
        used.dedup();
        let assignment: Vec<usize> = raw
            .iter()
            .map(|c| used.iter().position(|u| u == c).unwrap())
            .collect();
        let n_clusters = used.len();
        let mut sizes = vec![0usize; n_clusters];
        for (client, &cluster) in assignment.iter().enumerate() {
            sizes[cluster] += ordered[client].n_samples;
        }
        Ok(FedCluster {
            assignment,
            models: vec![initial; n_clusters],
            sizes,
        })
    }

    pub fn restore(
        assignment: Vec<usize>,
        models: Vec<ParamVector>,
        sizes: Vec<usize>,
        _cfg: &StrategyConfig,
    ) -> Result<Self, StrategyError> {
        if models.len() != sizes.len() {
            return Err(StrategyError::Config(
                "cluster models and sizes disagree".into(),
            ));
        }
        if assignment.iter().any(|&c| c >= models.len()) {
            return Err(StrategyError::Config("assignment out of range".into()));
        }
        Ok(FedCluster {
            assignment,
            models,
            sizes,
        })
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn n_clusters(&self) -> usize {
        self.models.len()
    }
}

impl Strategy for FedCluster {
    fn kind(&self) -> StrategyKind {
        StrategyKind::FedCluster
    }

    fn broadcast(&self, client_id: usize) -> &ParamVector {
        &self.models[self.assignment[client_id]]
    }

    fn apply_round(&mut self, updates: &[RoundUpdate]) -> Result<(), StrategyError> {
        if updates.is_empty() {
            return Err(StrategyError::NoUpdates);
        }
        for cluster in 0..self.models.len() {
            let members: Vec<RoundUpdate> = updates
                .iter()
                .filter(|u| self.assignment[u.client_id] == cluster)
                .cloned()
                .collect();
            if members.is_empty() {
                continue; // all members failed or were not selected this round
            }
            self.models[cluster] = weighted_average_weights(&members)?;
        }
        Ok(())
    }

    /// Sample-size-weighted average of the cluster models.
    fn eval_model(&self) -> ParamVector {
        let total: usize = self.sizes.iter().sum();
        let mut out = ParamVector::zeros(self.models[0].len());
        for (model, &size) in self.models.iter().zip(&self.sizes) {
            out.axpy(size as f64 / total as f64, model);
        }
        out
    }

    fn snapshot(&self) -> StrategyState {
        StrategyState::FedCluster {
            assignment: self.assignment.clone(),
            models: self.models.clone(),
            sizes: self.sizes.clone(),
        }
    }
}

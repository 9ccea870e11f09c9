//! Dispersion, similarity and gradient-norm statistics of a run.

use crate::engine::StepRound;
use crate::error::{Error, Result};
use crate::Vector;

/// Returns `(V, Lambda)`: the mean squared distance to the node average and
/// the mean squared pairwise distance `(1/M^2) sum_{m,s} ||y_m - y_s||^2`.
///
/// For any finite point set `Lambda = 2 V`; both are computed directly.
pub fn drift(iterates: &[Vector]) -> (f64, f64) {
    let m = iterates.len();
    if m < 2 {
        return (0.0, 0.0);
    }
    let mean = iterates.iter().fold(Vector::zeros(iterates[0].len()), |acc, y| acc + y) / m as f64;
    let v = iterates.iter().map(|y| (y - &mean).norm_squared()).sum::<f64>() / m as f64;
    let mut pairs = 0.0;
    for (i, a) in iterates.iter().enumerate() {
        for b in &iterates[i + 1..] {
            pairs += (a - b).norm_squared();
        }
    }
    (v, 2.0 * pairs / (m * m) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityRecord {
    pub round: usize,
    pub mean: f64,
    pub std: f64,
    /// Set when some delta had zero norm; such pairs count as cosine 0.
    pub zero_flag: bool,
}

/// Pairwise cosine similarity of per-node deltas. Needs at least two nodes;
/// with fewer the mean and std are NaN.
pub fn cosine_similarity(round: usize, deltas: &[Vector]) -> SimilarityRecord {
    let norms: Vec<f64> = deltas.iter().map(|d| d.norm()).collect();
    let mut cosines = Vec::with_capacity(deltas.len() * deltas.len().saturating_sub(1) / 2);
    let mut zero_flag = false;
    for i in 0..deltas.len() {
        for j in i + 1..deltas.len() {
            if norms[i] == 0.0 || norms[j] == 0.0 {
                zero_flag = true;
                cosines.push(0.0);
            } else {
                let c = deltas[i].dot(&deltas[j]) / (norms[i] * norms[j]);
                cosines.push(c.clamp(-1.0, 1.0));
            }
        }
    }
    if cosines.is_empty() {
        return SimilarityRecord {
            round,
            mean: f64::NAN,
            std: f64::NAN,
            zero_flag,
        };
    }
    let n = cosines.len() as f64;
    let mean = cosines.iter().sum::<f64>() / n;
    let var = cosines.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / n;
    SimilarityRecord {
        round,
        mean,
        std: var.sqrt(),
        zero_flag,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradientStats {
    /// RMS of the node-averaged gradient norms `||g_{r,h}||`.
    pub g1_rms: f64,
    /// RMS of the per-node gradient norms `||g_{m,r,h}||`.
    pub g2_rms: f64,
    /// Per round: `sum_h ||g_{r,h}||`.
    pub avg_norm_sums: Vec<f64>,
    /// Per round: `sum_{m,h} ||g_{m,r,h}||`.
    pub node_norm_sums: Vec<f64>,
}

pub fn gradient_stats(rounds: &[StepRound]) -> Result<GradientStats> {
    let mut g1_sq = 0.0;
    let mut g1_count = 0usize;
    let mut g2_sq = 0.0;
    let mut g2_count = 0usize;
    let mut avg_norm_sums = Vec::with_capacity(rounds.len());
    let mut node_norm_sums = Vec::with_capacity(rounds.len());
    for round in rounds {
        let mut avg_sum = 0.0;
        for g in &round.avg_grads {
            let n = g.norm();
            g1_sq += n * n;
            avg_sum += n;
            g1_count += 1;
        }
        let mut node_sum = 0.0;
        for step in &round.node_grad_norms {
            for &n in step {
                g2_sq += n * n;
                node_sum += n;
                g2_count += 1;
            }
        }
        avg_norm_sums.push(avg_sum);
        node_norm_sums.push(node_sum);
    }
    if g1_count == 0 || g2_count == 0 {
        return Err(Error::MissingData("step-level gradient records"));
    }
    Ok(GradientStats {
        g1_rms: (g1_sq / g1_count as f64).sqrt(),
        g2_rms: (g2_sq / g2_count as f64).sqrt(),
        avg_norm_sums,
        node_norm_sums,
    })
}

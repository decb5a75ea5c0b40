use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::dbscan::NOISE;
use super::trace::ActivationTrace;
use super::AnalysisError;

pub const PHASE_BINS: usize = 50;

/// One combination of the selected bits and its share of a cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct SignatureShare {
    pub bits: Vec<u8>,
    pub count: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterSummary {
    /// Cluster id, or [`NOISE`] for the unclustered group.
    pub label: i64,
    pub count: usize,
    /// Bit combinations present, most common first.
    pub signatures: Vec<SignatureShare>,
    /// Density histogram of phase over `[0, 1)` for each trace period.
    pub phase_histograms: Vec<Vec<f64>>,
    pub x_norm_min: f64,
    pub x_norm_max: f64,
}

impl ClusterSummary {
    pub fn dominant_fraction(&self) -> f64 {
        self.signatures.first().map_or(0.0, |s| s.fraction)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    /// 1-based bit positions tabulated.
    pub positions: Vec<usize>,
    pub labels: Vec<i64>,
    /// Clusters in ascending label order, noise group (if any) first.
    pub clusters: Vec<ClusterSummary>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitScore {
    pub position: usize,
    /// Mutual information with the cluster label, in bits.
    pub score: f64,
}

fn check_labels(trace: &ActivationTrace, labels: &[i64]) -> Result<(), AnalysisError> {
    if labels.len() != trace.n_samples() {
        return Err(AnalysisError::ShapeMismatch { expected: trace.n_samples(), got: labels.len() });
    }
    Ok(())
}

fn density_histogram(values: impl Iterator<Item = f64>, count: usize) -> Vec<f64> {
    let mut hist = alloc::vec![0.0; PHASE_BINS];
    if count == 0 {
        return hist;
    }
    for v in values {
        let bin = ((v * PHASE_BINS as f64) as usize).min(PHASE_BINS - 1);
        hist[bin] += 1.0;
    }
    let scale = PHASE_BINS as f64 / count as f64;
    hist.iter_mut().for_each(|h| *h *= scale);
    hist
}

/// Per-cluster tables of the values taken by the bits at `positions`, with
/// phase histograms and `x'` ranges.
pub fn bit_signature(trace: &ActivationTrace, labels: &[i64], positions: &[usize]) -> Result<ClusterReport, AnalysisError> {
    check_labels(trace, labels)?;
    let n_bits = trace.n_bits();
    if positions.iter().any(|&p| p == 0 || p > n_bits) {
        return Err(AnalysisError::InvalidParameter("bit positions must lie in 1..=n_bits"));
    }
    let mut groups: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for (i, &l) in labels.iter().enumerate() {
        if l < NOISE {
            return Err(AnalysisError::InvalidParameter("labels must be -1 or a cluster id"));
        }
        groups.entry(l).or_default().push(i);
    }
    if groups.keys().all(|&l| l == NOISE) {
        return Err(AnalysisError::NoClusters);
    }
    let clusters = groups
        .into_iter()
        .map(|(label, members)| {
            let count = members.len();
            let mut combos: BTreeMap<Vec<u8>, usize> = BTreeMap::new();
            for &i in &members {
                *combos.entry(positions.iter().map(|&p| trace.bit(i, p)).collect()).or_default() += 1;
            }
            let mut signatures: Vec<SignatureShare> = combos
                .into_iter()
                .map(|(bits, c)| SignatureShare { bits, count: c, fraction: c as f64 / count as f64 })
                .collect();
            signatures.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.bits.cmp(&b.bits)));
            let phase_histograms =
                trace.phases.iter().map(|ph| density_histogram(members.iter().map(|&i| ph[i]), count)).collect();
            let xs = members.iter().map(|&i| trace.x_norm[i]);
            let x_norm_min = xs.clone().fold(f64::INFINITY, f64::min);
            let x_norm_max = xs.fold(f64::NEG_INFINITY, f64::max);
            ClusterSummary { label, count, signatures, phase_histograms, x_norm_min, x_norm_max }
        })
        .collect();
    Ok(ClusterReport { positions: positions.to_vec(), labels: labels.to_vec(), clusters })
}

/// Mutual information, in bits, between a binary variable and dense labels
/// `0..n_labels`.
fn mi_dense(bits: &[u8], labels: &[usize], n_labels: usize, joint: &mut Vec<[usize; 2]>) -> f64 {
    joint.clear();
    joint.resize(n_labels, [0, 0]);
    for (&b, &l) in bits.iter().zip(labels) {
        joint[l][b as usize] += 1;
    }
    let n = bits.len() as f64;
    let ones = bits.iter().filter(|&&b| b == 1).count() as f64;
    let bit_marginal = [n - ones, ones];
    let mut mi = 0.0;
    for row in joint.iter() {
        let label_total = (row[0] + row[1]) as f64;
        for b in 0..2 {
            if row[b] > 0 {
                let p = row[b] as f64 / n;
                mi += p * libm::log2(p * n * n / (label_total * bit_marginal[b]));
            }
        }
    }
    mi.max(0.0)
}

/// Clustered (non-noise) samples with labels remapped to `0..k`.
fn clustered(labels: &[i64]) -> (Vec<usize>, Vec<usize>, usize) {
    let mut ids: BTreeMap<i64, usize> = BTreeMap::new();
    let mut rows = Vec::new();
    let mut dense = Vec::new();
    for (i, &l) in labels.iter().enumerate() {
        if l != NOISE {
            let next = ids.len();
            dense.push(*ids.entry(l).or_insert(next));
            rows.push(i);
        }
    }
    (rows, dense, ids.len())
}

fn bit_column(trace: &ActivationTrace, rows: &[usize], position: usize) -> Vec<u8> {
    rows.iter().map(|&i| trace.bit(i, position)).collect()
}

/// Mutual information in bits between a 0/1 sequence and cluster labels,
/// over the samples not labeled [`NOISE`].
pub fn mutual_information(bits: &[u8], labels: &[i64]) -> Result<f64, AnalysisError> {
    if bits.len() != labels.len() {
        return Err(AnalysisError::ShapeMismatch { expected: labels.len(), got: bits.len() });
    }
    let (rows, dense, k) = clustered(labels);
    if rows.is_empty() {
        return Err(AnalysisError::NoClusters);
    }
    let kept: Vec<u8> = rows.iter().map(|&i| bits[i]).collect();
    Ok(mi_dense(&kept, &dense, k, &mut Vec::new()))
}

/// Every bit position ranked by mutual information with the cluster label,
/// highest first. Noise samples are left out.
pub fn signature_scan(trace: &ActivationTrace, labels: &[i64]) -> Result<Vec<BitScore>, AnalysisError> {
    check_labels(trace, labels)?;
    let (rows, dense, k) = clustered(labels);
    if k < 2 {
        return Err(AnalysisError::TooFewClusters { found: k });
    }
    let mut joint = Vec::new();
    let mut scores: Vec<BitScore> = (1..=trace.n_bits())
        .map(|position| BitScore { position, score: mi_dense(&bit_column(trace, &rows, position), &dense, k, &mut joint) })
        .collect();
    scores.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.position.cmp(&b.position)));
    Ok(scores)
}

/// Median mutual information of each bit in `positions` against
/// `n_permutations` shuffles of the cluster labels.
pub fn permutation_null(
    trace: &ActivationTrace,
    labels: &[i64],
    positions: &[usize],
    n_permutations: usize,
    seed: u64,
) -> Result<Vec<f64>, AnalysisError> {
    check_labels(trace, labels)?;
    if n_permutations == 0 {
        return Err(AnalysisError::InvalidParameter("need at least one permutation"));
    }
    if positions.iter().any(|&p| p == 0 || p > trace.n_bits()) {
        return Err(AnalysisError::InvalidParameter("bit positions must lie in 1..=n_bits"));
    }
    let (rows, mut dense, k) = clustered(labels);
    if k < 2 {
        return Err(AnalysisError::TooFewClusters { found: k });
    }
    let columns: Vec<Vec<u8>> = positions.iter().map(|&p| bit_column(trace, &rows, p)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut joint = Vec::new();
    let mut draws: Vec<Vec<f64>> = alloc::vec![Vec::with_capacity(n_permutations); positions.len()];
    for _ in 0..n_permutations {
        dense.shuffle(&mut rng);
        for (col, out) in columns.iter().zip(draws.iter_mut()) {
            out.push(mi_dense(col, &dense, k, &mut joint));
        }
    }
    draws.iter().map(|d| super::dbscan::quantile(d, 0.5)).collect()
}

/// Least-squares slope of `ys` against `xs`; `None` without spread in `xs`.
pub fn trend_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::encode_nb2e;
    use crate::nn::Matrix;
    use alloc::vec;
    use rand::Rng;

    fn trace_for(x_norm: Vec<f64>) -> ActivationTrace {
        let n = x_norm.len();
        let bits = x_norm.iter().map(|&x| encode_nb2e(x, 12).unwrap()).collect();
        let phases = vec![x_norm.iter().map(|&x| (x * 8.0) % 1.0).collect()];
        ActivationTrace {
            layers: vec![Matrix::zeros(n, 1)],
            x_raw: x_norm.clone(),
            x_norm,
            bits,
            periods: vec![0.125],
            phases,
        }
    }

    fn uniform(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random_range(0.0..1.0)).collect()
    }

    #[test]
    fn single_signature_cluster() {
        // x' in [0.0390625, 0.046875) has bits 5, 6, 7 = 1, 0, 1.
        let xs: Vec<f64> = (0..40).map(|i| 0.0390625 + i as f64 * 1e-4).collect();
        let trace = trace_for(xs);
        let report = bit_signature(&trace, &vec![0; 40], &[5, 6, 7]).unwrap();
        assert_eq!(report.clusters.len(), 1);
        let c = &report.clusters[0];
        assert_eq!(c.signatures, vec![SignatureShare { bits: vec![1, 0, 1], count: 40, fraction: 1.0 }]);
        assert_eq!(c.dominant_fraction(), 1.0);
    }

    #[test]
    fn report_invariants() {
        let trace = trace_for(uniform(500, 1));
        let labels: Vec<i64> = (0..500).map(|i| (i % 4) as i64 - 1).collect();
        let report = bit_signature(&trace, &labels, &[1, 3]).unwrap();
        assert_eq!(report.clusters.iter().map(|c| c.count).sum::<usize>(), 500);
        assert_eq!(report.clusters[0].label, NOISE);
        for c in &report.clusters {
            let total: f64 = c.signatures.iter().map(|s| s.fraction).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let mass: f64 = c.phase_histograms[0].iter().sum::<f64>() / PHASE_BINS as f64;
            assert!((mass - 1.0).abs() < 1e-12);
            assert!(c.x_norm_min <= c.x_norm_max);
        }
    }

    #[test]
    fn signature_errors() {
        let trace = trace_for(uniform(10, 2));
        assert_eq!(bit_signature(&trace, &[NOISE; 10], &[1]), Err(AnalysisError::NoClusters));
        assert!(bit_signature(&trace, &[0; 10], &[0]).is_err());
        assert!(bit_signature(&trace, &[0; 10], &[13]).is_err());
        assert!(bit_signature(&trace, &[0; 9], &[1]).is_err());
        assert_eq!(signature_scan(&trace, &[0; 10]), Err(AnalysisError::TooFewClusters { found: 1 }));
    }

    #[test]
    fn scan_finds_constructed_bit() {
        let trace = trace_for(uniform(2000, 3));
        let labels: Vec<i64> = (0..2000).map(|i| i64::from(trace.bit(i, 5))).collect();
        let scores = signature_scan(&trace, &labels).unwrap();
        assert_eq!(scores[0].position, 5);
        let entropy = {
            let p = labels.iter().filter(|&&l| l == 1).count() as f64 / 2000.0;
            -(p * p.log2() + (1.0 - p) * (1.0 - p).log2())
        };
        assert!((scores[0].score - entropy).abs() < 1e-12);
        assert!(scores[1].score < 0.01);
    }

    #[test]
    fn independent_labels_score_near_zero() {
        let trace = trace_for(uniform(4000, 4));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let labels: Vec<i64> = (0..4000).map(|_| rng.random_range(0..3)).collect();
        let scores = signature_scan(&trace, &labels).unwrap();
        let null = permutation_null(&trace, &labels, &[1, 2, 3], 50, 6).unwrap();
        assert!(scores.iter().all(|s| s.score < 0.005));
        assert!(null.iter().all(|&m| (0.0..0.005).contains(&m)));
    }

    #[test]
    fn mutual_information_skips_noise() {
        let bits = [0, 1, 0, 1, 1];
        assert!((mutual_information(&bits, &[0, 1, 0, 1, NOISE]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(mutual_information(&bits, &[0, 0, 0, 0, 0]).unwrap(), 0.0);
    }

    #[test]
    fn slope() {
        assert_eq!(trend_slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]), Some(2.0));
        assert_eq!(trend_slope(&[1.0, 1.0], &[0.0, 1.0]), None);
    }
}

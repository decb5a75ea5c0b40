use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};

use super::AnalysisError;
use crate::nn::{gemm, Matrix};

/// Eigenvalues below this fraction of the largest, scaled by the width, count
/// as zero.
const RANK_TOLERANCE: f64 = 1e-12;

/// Mean-centered projection onto the leading principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// `[n x kept]` coordinates.
    pub coords: Matrix,
    /// `[width x kept]`; column `j` is the `j`-th principal direction.
    pub components: Matrix,
    pub mean: Vec<f64>,
    /// Sample variance along each kept direction, descending.
    pub explained_variance: Vec<f64>,
    /// Trace of the sample covariance.
    pub total_variance: f64,
    pub requested: usize,
}

impl Projection {
    pub fn kept(&self) -> usize {
        self.explained_variance.len()
    }

    /// True when fewer than the requested directions carried any variance.
    pub fn rank_deficient(&self) -> bool {
        self.kept() < self.requested
    }

    pub fn explained_ratio(&self) -> Vec<f64> {
        self.explained_variance.iter().map(|v| v / self.total_variance).collect()
    }
}

/// Projects the rows of `data` onto its top `k` principal directions.
///
/// Each direction is signed so its largest-magnitude loading is positive.
/// If the data has rank below `k`, only the directions with nonzero variance
/// are returned and [`Projection::rank_deficient`] reports it.
pub fn project_pca(data: &Matrix, k: usize) -> Result<Projection, AnalysisError> {
    let (n, d) = data.shape();
    if k == 0 || k > d {
        return Err(AnalysisError::InvalidParameter("k must lie in 1..=width"));
    }
    if n < k.max(2) {
        return Err(AnalysisError::InvalidParameter("need at least max(k, 2) samples"));
    }
    let mut mean = alloc::vec![0.0; d];
    for r in 0..n {
        for (m, &v) in mean.iter_mut().zip(data.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut centered = data.clone();
    for r in 0..n {
        for (v, &m) in centered.row_mut(r).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    gemm(1.0 / (n - 1) as f64, &centered, true, &centered, false, 0.0, &mut cov);
    let total_variance: f64 = (0..d).map(|i| cov.get(i, i)).sum();

    let eig = SymmetricEigen::new(DMatrix::from_row_slice(d, d, cov.as_slice()));
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let largest = eig.eigenvalues[order[0]].max(0.0);
    let cutoff = largest * RANK_TOLERANCE * d as f64;
    let kept: Vec<usize> = order.into_iter().take(k).filter(|&j| largest > 0.0 && eig.eigenvalues[j] > cutoff).collect();

    let mut components = Matrix::zeros(d, kept.len());
    for (c, &j) in kept.iter().enumerate() {
        let col = eig.eigenvectors.column(j);
        let mut pivot = 0;
        for i in 1..d {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        let sign = if col[pivot] < 0.0 { -1.0 } else { 1.0 };
        for i in 0..d {
            components.set(i, c, sign * col[i]);
        }
    }
    let mut coords = Matrix::zeros(n, kept.len());
    if !kept.is_empty() {
        gemm(1.0, &centered, false, &components, false, 0.0, &mut coords);
    }
    let explained_variance = kept.iter().map(|&j| eig.eigenvalues[j]).collect();
    Ok(Projection { coords, components, mean, explained_variance, total_variance, requested: k })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Matrix::from_fn(n, d, |_, _| StandardNormal.sample(&mut rng))
    }

    fn dist(m: &Matrix, a: usize, b: usize) -> f64 {
        m.row(a).iter().zip(m.row(b)).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }

    #[test]
    fn full_rotation_preserves_geometry() {
        let data = gaussian(60, 6, 1);
        let p = project_pca(&data, 6).unwrap();
        assert_eq!(p.kept(), 6);
        for a in 0..60 {
            for b in a + 1..60 {
                assert!((dist(&data, a, b) - dist(&p.coords, a, b)).abs() < 1e-8);
            }
        }
        let sum: f64 = p.explained_variance.iter().sum();
        assert!((sum - p.total_variance).abs() < 1e-8);
        assert!(p.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn subspace_data_reconstructs() {
        let latent = gaussian(200, 2, 2);
        let basis = gaussian(2, 7, 3);
        let mut data = Matrix::zeros(200, 7);
        gemm(1.0, &latent, false, &basis, false, 0.0, &mut data);
        let p = project_pca(&data, 2).unwrap();
        let mut back = Matrix::zeros(200, 7);
        gemm(1.0, &p.coords, false, &p.components, true, 0.0, &mut back);
        for r in 0..200 {
            for c in 0..7 {
                assert!((back.get(r, c) + p.mean[c] - data.get(r, c)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn rank_deficiency_drops_components() {
        let latent = gaussian(100, 2, 4);
        let basis = gaussian(2, 5, 5);
        let mut data = Matrix::zeros(100, 5);
        gemm(1.0, &latent, false, &basis, false, 0.0, &mut data);
        let p = project_pca(&data, 4).unwrap();
        assert_eq!(p.kept(), 2);
        assert!(p.rank_deficient());
        assert_eq!(p.coords.shape(), (100, 2));
        let constant = Matrix::from_fn(10, 3, |_, _| 1.5);
        let p = project_pca(&constant, 2).unwrap();
        assert_eq!(p.kept(), 0);
    }

    #[test]
    fn isotropic_noise_has_even_spectrum() {
        let p = project_pca(&gaussian(20_000, 4, 6), 4).unwrap();
        for r in p.explained_ratio() {
            assert!((r - 0.25).abs() < 0.02, "ratio {r}");
        }
    }

    #[test]
    fn sign_convention_is_stable() {
        let data = gaussian(50, 4, 7);
        let mut flipped = data.clone();
        flipped.as_mut_slice().iter_mut().for_each(|v| *v = -*v);
        let a = project_pca(&data, 3).unwrap();
        let b = project_pca(&flipped, 3).unwrap();
        for c in 0..a.kept() {
            let col: Vec<f64> = (0..4).map(|i| a.components.get(i, c)).collect();
            let big = col.iter().copied().fold(0.0_f64, |m, v| if v.abs() > m.abs() { v } else { m });
            assert!(big > 0.0);
            for i in 0..4 {
                assert!((a.components.get(i, c) - b.components.get(i, c)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bad_arguments() {
        let data = gaussian(5, 3, 8);
        assert!(project_pca(&data, 0).is_err());
        assert!(project_pca(&data, 4).is_err());
        assert!(project_pca(&gaussian(2, 3, 9), 3).is_err());
    }
}

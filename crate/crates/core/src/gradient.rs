//! Exploration directions: uniform unit vectors, null spaces of recently
//! discouraged directions, hybrid sampling inside a subspace and
//! query-dependent preselection.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::engine::history::GradientQueue;
use crate::ranking::{dot, norm};

/// Relative singular-value cutoff used by the learners.
pub const NULL_SPACE_TOL: f64 = 1e-10;

/// Raised when the selected directions span the whole feature space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("directions span the full feature space; null space is empty")]
pub struct FullRankExhausted;

fn normalized(mut v: Vec<f64>) -> Option<Vec<f64>> {
    let n = norm(&v);
    if n == 0.0 || !n.is_finite() {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n);
    Some(v)
}

/// Uniform draw from the unit sphere in `dim` dimensions.
pub fn sample_uniform_unit<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    assert!(dim >= 1, "dimension must be positive");
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if let Some(u) = normalized(v) {
            return u;
        }
    }
}

/// Rows are directions in R^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionMatrix {
    dim: usize,
    rows: Vec<Vec<f64>>,
}

impl DirectionMatrix {
    pub fn new(dim: usize, rows: Vec<Vec<f64>>) -> Self {
        for r in &rows {
            assert_eq!(r.len(), dim, "direction has wrong dimension");
            assert!(r.iter().all(|x| x.is_finite()), "direction must be finite");
            assert!(norm(r) > 0.0, "direction must be nonzero");
        }
        DirectionMatrix { dim, rows }
    }

    pub fn empty(dim: usize) -> Self {
        DirectionMatrix {
            dim,
            rows: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Orthonormal basis of a subspace of R^dim.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    dim: usize,
    basis: Vec<Vec<f64>>,
}

impl SubspaceBasis {
    pub fn identity(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|i| {
                let mut e = vec![0.0; dim];
                e[i] = 1.0;
                e
            })
            .collect();
        SubspaceBasis { dim, basis }
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Orthogonal projection of `v` onto the subspace.
    pub fn project(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for b in &self.basis {
            let c = dot(b, v);
            out.iter_mut().zip(b).for_each(|(o, x)| *o += c * x);
        }
        out
    }
}

/// Orthonormal basis of `{v : Gv = 0}` from the right singular vectors of `G`.
///
/// Singular values at or below `tol` times the largest are treated as zero.
/// `G` is zero-padded to at least `dim` rows so the decomposition yields a
/// complete set of right singular vectors.
pub fn null_space(g: &DirectionMatrix, tol: f64) -> Result<SubspaceBasis, FullRankExhausted> {
    let dim = g.dim;
    if g.is_empty() {
        return Ok(SubspaceBasis::identity(dim));
    }
    let nrows = g.len().max(dim);
    let mut m = DMatrix::<f64>::zeros(nrows, dim);
    for (i, row) in g.rows.iter().enumerate() {
        for (j, &x) in row.iter().enumerate() {
            m[(i, j)] = x;
        }
    }
    let svd = m.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors were requested");
    let sigma = &svd.singular_values;
    let cutoff = tol * sigma.max();
    let basis: Vec<Vec<f64>> = (0..sigma.len())
        .filter(|&j| sigma[j] <= cutoff)
        .map(|j| v_t.row(j).iter().copied().collect())
        .collect();
    if basis.is_empty() {
        return Err(FullRankExhausted);
    }
    Ok(SubspaceBasis { dim, basis })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingMode {
    /// A random basis vector with a random sign.
    BasisSelection,
    /// A uniform unit vector inside the span of the basis.
    InteriorSampling,
}

/// Interior sampling once the ranker moved less than `1 - epsilon` over the
/// lag window, basis selection otherwise.
pub fn select_mode(current: &[f64], lagged: &[f64], epsilon: f64) -> SamplingMode {
    assert_eq!(current.len(), lagged.len(), "dimension mismatch");
    let dist = current
        .iter()
        .zip(lagged)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if dist < 1.0 - epsilon {
        SamplingMode::InteriorSampling
    } else {
        SamplingMode::BasisSelection
    }
}

/// Hybrid switch parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HybridSwitch {
    pub lag: usize,
    pub epsilon: f64,
}

impl HybridSwitch {
    /// `lagged` is the ranker from `lag` iterations ago, if one exists yet.
    pub fn mode(&self, current: &[f64], lagged: Option<&[f64]>) -> SamplingMode {
        match lagged {
            Some(past) => select_mode(current, past, self.epsilon),
            None => SamplingMode::BasisSelection,
        }
    }
}

pub fn sample_in_subspace<R: Rng + ?Sized>(
    basis: &SubspaceBasis,
    mode: SamplingMode,
    rng: &mut R,
) -> Vec<f64> {
    assert!(basis.rank() > 0, "cannot sample from an empty subspace");
    match mode {
        SamplingMode::BasisSelection => {
            let b = &basis.basis[rng.random_range(0..basis.rank())];
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            normalized(b.iter().map(|x| sign * x).collect()).expect("basis vectors are unit norm")
        }
        SamplingMode::InteriorSampling => loop {
            let coeffs = sample_uniform_unit(basis.rank(), rng);
            let mut v = vec![0.0; basis.dim];
            for (c, b) in coeffs.iter().zip(&basis.basis) {
                v.iter_mut().zip(b).for_each(|(o, x)| *o += c * x);
            }
            if let Some(u) = normalized(v) {
                break u;
            }
        },
    }
}

/// Indices of the `m` candidates with largest `|xbar . g|`, best first,
/// ties by lower index.
pub fn preselect(candidates: &[Vec<f64>], xbar: &[f64], m: usize) -> Vec<usize> {
    assert!(m >= 1, "must select at least one candidate");
    assert!(
        candidates.len() >= m,
        "cannot select {m} of {} candidates",
        candidates.len()
    );
    let scores: Vec<f64> = candidates.iter().map(|g| dot(xbar, g).abs()).collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(m);
    order
}

/// The `k_g` most negative-quality directions in the queue, newer first on
/// equal quality.
pub fn worst_gradients(queue: &GradientQueue, k_g: usize) -> DirectionMatrix {
    let mut records: Vec<(usize, &crate::engine::history::GradientRecord)> =
        queue.iter().enumerate().collect();
    // enumerate() runs oldest to newest.
    records.sort_by(|(ia, a), (ib, b)| a.quality.cmp(&b.quality).then(ib.cmp(ia)));
    let rows = records
        .into_iter()
        .take(k_g)
        .map(|(_, r)| r.direction.clone())
        .collect();
    DirectionMatrix::new(queue.dim(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::history::GradientRecord;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn unit_vectors() {
        let mut r = rng(1);
        for d in 1..30 {
            let v = sample_uniform_unit(d, &mut r);
            assert_eq!(v.len(), d);
            assert!((norm(&v) - 1.0).abs() <= 1e-12);
        }
        for _ in 0..50 {
            let v = sample_uniform_unit(1, &mut r);
            assert!(v[0] == 1.0 || v[0] == -1.0);
        }
    }

    #[test]
    fn uniform_unit_is_centered() {
        let mut r = rng(2);
        let mut mean = [0.0; 3];
        let n = 100_000;
        for _ in 0..n {
            let v = sample_uniform_unit(3, &mut r);
            mean.iter_mut().zip(&v).for_each(|(m, x)| *m += x / n as f64);
        }
        assert!(mean.iter().all(|m| m.abs() <= 0.02), "{mean:?}");
    }

    #[test]
    fn axis_null_space() {
        let g = DirectionMatrix::new(3, vec![vec![1.0, 0.0, 0.0]]);
        let basis = null_space(&g, NULL_SPACE_TOL).unwrap();
        assert_eq!(basis.rank(), 2);
        for b in basis.vectors() {
            assert!(b[0].abs() <= 1e-12);
        }
        let p = basis.project(&[0.0, 0.3, -0.4]);
        assert!((p[1] - 0.3).abs() < 1e-12 && (p[2] + 0.4).abs() < 1e-12);
    }

    #[test]
    fn empty_matrix_gives_identity() {
        let basis = null_space(&DirectionMatrix::empty(4), NULL_SPACE_TOL).unwrap();
        assert_eq!(basis, SubspaceBasis::identity(4));
    }

    #[test]
    fn spanning_rows_exhaust() {
        let g = DirectionMatrix::new(2, vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(null_space(&g, NULL_SPACE_TOL), Err(FullRankExhausted));
    }

    #[test]
    fn dependent_rows_keep_extra_dimension() {
        let g = DirectionMatrix::new(3, vec![vec![1.0, 1.0, 0.0], vec![2.0, 2.0, 0.0]]);
        let basis = null_space(&g, NULL_SPACE_TOL).unwrap();
        assert_eq!(basis.rank(), 2);
    }

    #[test]
    fn basis_selection_in_line() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let basis = null_space(
            &DirectionMatrix::new(3, vec![vec![s, s, 0.0], vec![0.0, 0.0, 1.0]]),
            NULL_SPACE_TOL,
        )
        .unwrap();
        assert_eq!(basis.rank(), 1);
        let b = basis.vectors()[0].clone();
        let mut r = rng(3);
        let mut seen = (false, false);
        for _ in 0..100 {
            for mode in [SamplingMode::BasisSelection, SamplingMode::InteriorSampling] {
                let v = sample_in_subspace(&basis, mode, &mut r);
                let c = dot(&v, &b);
                assert!((c.abs() - 1.0).abs() <= 1e-12);
                if c > 0.0 {
                    seen.0 = true;
                } else {
                    seen.1 = true;
                }
            }
        }
        assert!(seen.0 && seen.1, "both orientations reachable");
    }

    #[test]
    fn interior_sampling_is_centered() {
        let g = DirectionMatrix::new(3, vec![vec![0.0, 0.0, 1.0]]);
        let basis = null_space(&g, NULL_SPACE_TOL).unwrap();
        assert_eq!(basis.rank(), 2);
        let b1 = basis.vectors()[0].clone();
        let mut r = rng(4);
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|_| dot(&sample_in_subspace(&basis, SamplingMode::InteriorSampling, &mut r), &b1))
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() <= 0.02, "{mean}");
    }

    #[test]
    fn mode_switch() {
        assert_eq!(select_mode(&[0.3, 0.2], &[0.3, 0.2], 0.1), SamplingMode::InteriorSampling);
        assert_eq!(select_mode(&[1.0, 0.0], &[0.0, 1.0], 0.1), SamplingMode::BasisSelection);
        // distance exactly 0.5 = 1 - 0.5
        assert_eq!(select_mode(&[0.5, 0.0], &[0.0, 0.0], 0.5), SamplingMode::BasisSelection);
        let hybrid = HybridSwitch { lag: 10, epsilon: 0.1 };
        assert_eq!(hybrid.mode(&[0.0], None), SamplingMode::BasisSelection);
        assert_eq!(hybrid.mode(&[0.0], Some(&[0.1])), SamplingMode::InteriorSampling);
    }

    #[test]
    fn preselect_examples() {
        let c = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(preselect(&c, &[2.0, 0.1], 1), [0]);
        assert_eq!(preselect(&c, &[2.0, 0.1], 2).len(), 2);
        let c = vec![vec![0.6, 0.8], vec![1.0, 0.0], vec![0.0, -1.0]];
        assert_eq!(preselect(&c, &[1.0, 1.0], 2), [0, 1]);
    }

    #[test]
    #[should_panic]
    fn preselect_too_few() {
        preselect(&[vec![1.0]], &[1.0], 2);
    }

    fn queue_with(qualities: &[i32], capacity: usize) -> GradientQueue {
        let mut q = GradientQueue::new(2, capacity);
        for (i, &quality) in qualities.iter().enumerate() {
            q.push(GradientRecord {
                direction: vec![1.0, i as f64],
                quality,
            });
        }
        q
    }

    #[test]
    fn worst_gradient_selection() {
        let q = queue_with(&[-3, -1, -2], 15);
        let g = worst_gradients(&q, 2);
        assert_eq!(g.rows(), [vec![1.0, 0.0], vec![1.0, 2.0]]);
        assert!(worst_gradients(&GradientQueue::new(2, 15), 25).is_empty());
        let q = queue_with(&[-1; 15], 15);
        assert_eq!(worst_gradients(&q, 25).len(), 15);
        // equal quality: newest first
        let q = queue_with(&[-1, -1, -1], 15);
        assert_eq!(worst_gradients(&q, 1).rows()[0], [1.0, 2.0]);
    }
}

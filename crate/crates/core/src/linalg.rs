//! Dense row-major matrices, symmetric eigenvalues, and spectrum reductions.
//!
//! Everything here works in `f64`. Inputs captured in `f32` are widened
//! before they reach an accumulator, so cancellation in covariance formation
//! is bounded by the 64-bit mantissa.

use std::fmt;

use thiserror::Error;

/// Relative tolerance used for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-9;
/// Negative eigenvalues down to `-EIG_CLAMP_TOL * total` are treated as zero.
pub const EIG_CLAMP_TOL: f64 = 1e-9;
/// Total variance at or below this value is considered zero.
pub const ZERO_VARIANCE: f64 = 1e-12;
/// Jacobi iteration stops once the off-diagonal Frobenius norm drops below
/// this fraction of the trace.
pub const JACOBI_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {max_asymmetry:e})")]
    NonSymmetric { max_asymmetry: f64 },
    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("eigenvalue {value:e} is below the clamp tolerance {tolerance:e}")]
    NegativeEigenvalue { value: f64, tolerance: f64 },
    #[error("total variance {total:e} is not above {ZERO_VARIANCE:e}")]
    ZeroVariance { total: f64 },
    #[error("k = {k} exceeds spectrum length {len}")]
    RankOutOfRange { k: usize, len: usize },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },
}

/// A dense matrix stored row-major.
#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self, LinalgError> {
        if data.len() != rows * cols {
            return Err(LinalgError::ShapeMismatch {
                expected: format!("{} values for {rows}x{cols}", rows * cols),
                found: format!("{} values", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &v) in diag.iter().enumerate() {
            m.data[i * n + i] = v;
        }
        m
    }

    /// Builds a matrix from equally long rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn transpose(&self) -> Matrix {
        Matrix::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn sub(&self, other: &Matrix) -> Result<Matrix, LinalgError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LinalgError::ShapeMismatch {
                expected: format!("{}x{}", self.rows, self.cols),
                found: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn check_finite(&self) -> Result<(), LinalgError> {
        match self.data.iter().position(|v| !v.is_finite()) {
            Some(idx) => Err(LinalgError::NonFinite {
                row: idx / self.cols.max(1),
                col: idx % self.cols.max(1),
            }),
            None => Ok(()),
        }
    }

    /// Largest `|a_ij - a_ji|`. Zero for non-square matrices is not meaningful,
    /// callers check squareness first.
    pub fn max_asymmetry(&self) -> f64 {
        let n = self.rows;
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    /// Replaces the matrix with `(A + Aᵀ) / 2`.
    pub fn symmetrize(&mut self) {
        let n = self.rows;
        for i in 0..n {
            for j in (i + 1)..n {
                let v = 0.5 * (self.get(i, j) + self.get(j, i));
                self.set(i, j, v);
                self.set(j, i, v);
            }
        }
    }

    fn check_symmetric(&self) -> Result<(), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            });
        }
        self.check_finite()?;
        let asym = self.max_asymmetry();
        if asym > SYMMETRY_TOL * self.max_abs().max(1.0) {
            return Err(LinalgError::NonSymmetric {
                max_asymmetry: asym,
            });
        }
        Ok(())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// `a · b` with an i-k-j loop order so the inner loop runs over contiguous memory.
pub fn matmul(a: &Matrix, b: &Matrix) -> Result<Matrix, LinalgError> {
    if a.cols != b.rows {
        return Err(LinalgError::ShapeMismatch {
            expected: format!("{} rows on the right operand", a.cols),
            found: format!("{}x{}", b.rows, b.cols),
        });
    }
    let mut out = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let out_row = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for k in 0..a.cols {
            let aik = a.data[i * a.cols + k];
            if aik == 0.0 {
                continue;
            }
            let b_row = &b.data[k * b.cols..(k + 1) * b.cols];
            for (o, &bv) in out_row.iter_mut().zip(b_row) {
                *o += aik * bv;
            }
        }
    }
    out.check_finite()?;
    Ok(out)
}

/// Eigenvalues of a positive semi-definite matrix, sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSpectrum {
    values: Vec<f64>,
    total: f64,
}

impl EigenSpectrum {
    /// Sorts, validates and clamps raw eigenvalues.
    ///
    /// Values in `[-EIG_CLAMP_TOL * scale, 0)` become zero; anything more
    /// negative means the source matrix was not PSD.
    pub fn from_eigenvalues(mut values: Vec<f64>) -> Result<Self, LinalgError> {
        if let Some(idx) = values.iter().position(|v| !v.is_finite()) {
            return Err(LinalgError::NonFinite { row: idx, col: idx });
        }
        values.sort_by(|a, b| b.total_cmp(a));
        let scale: f64 = values.iter().map(|v| v.abs()).sum();
        let tolerance = EIG_CLAMP_TOL * scale;
        for v in values.iter_mut() {
            if *v < 0.0 {
                if *v < -tolerance {
                    return Err(LinalgError::NegativeEigenvalue {
                        value: *v,
                        tolerance,
                    });
                }
                *v = 0.0;
            }
        }
        let total = values.iter().sum();
        Ok(Self { values, total })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of eigenvalues above the relative noise floor of the solver.
    pub fn numerical_rank(&self) -> usize {
        let floor = JACOBI_TOL * self.total.max(f64::MIN_POSITIVE);
        self.values.iter().filter(|&&v| v > floor).count()
    }
}

/// Eigenvalues (and optionally eigenvectors) of a symmetric matrix by cyclic
/// Jacobi rotations. Values are returned in diagonal order, unsorted.
///
/// Eigenvectors, when requested, are the columns of the returned matrix.
pub fn jacobi_eigen(m: &Matrix, with_vectors: bool) -> Result<(Vec<f64>, Option<Matrix>), LinalgError> {
    m.check_symmetric()?;
    let n = m.rows;
    let mut a = m.clone();
    a.symmetrize();
    let mut v = with_vectors.then(|| Matrix::identity(n));

    let scale = a.trace().abs().max(a.frobenius_norm());
    let threshold = JACOBI_TOL * scale;
    let mut sweeps = 0;
    loop {
        let off = off_diagonal_norm(&a);
        if off <= threshold || off == 0.0 {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(LinalgError::NoConvergence { sweeps });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, v.as_mut(), p, q);
            }
        }
    }
    let values = (0..n).map(|i| a.get(i, i)).collect();
    Ok((values, v))
}

fn off_diagonal_norm(a: &Matrix) -> f64 {
    let n = a.rows;
    let mut s = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let x = a.get(i, j);
            s += 2.0 * x * x;
        }
    }
    s.sqrt()
}

fn rotate(a: &mut Matrix, v: Option<&mut Matrix>, p: usize, q: usize) {
    let apq = a.get(p, q);
    if apq == 0.0 {
        return;
    }
    let app = a.get(p, p);
    let aqq = a.get(q, q);
    let tau = (aqq - app) / (2.0 * apq);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let n = a.rows;
    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        let new_kp = c * akp - s * akq;
        let new_kq = s * akp + c * akq;
        a.set(k, p, new_kp);
        a.set(p, k, new_kp);
        a.set(k, q, new_kq);
        a.set(q, k, new_kq);
    }
    a.set(p, p, app - t * apq);
    a.set(q, q, aqq + t * apq);
    a.set(p, q, 0.0);
    a.set(q, p, 0.0);
    if let Some(v) = v {
        for k in 0..n {
            let vkp = v.get(k, p);
            let vkq = v.get(k, q);
            v.set(k, p, c * vkp - s * vkq);
            v.set(k, q, s * vkp + c * vkq);
        }
    }
}

/// Descending eigen-spectrum of a symmetric positive semi-definite matrix.
pub fn eigh(m: &Matrix) -> Result<EigenSpectrum, LinalgError> {
    let (values, _) = jacobi_eigen(m, false)?;
    EigenSpectrum::from_eigenvalues(values)
}

/// Fraction of the total variance explained by the `k` largest eigenvalues.
pub fn cumulative_ratio(spectrum: &EigenSpectrum, k: usize) -> Result<f64, LinalgError> {
    if k > spectrum.len() {
        return Err(LinalgError::RankOutOfRange {
            k,
            len: spectrum.len(),
        });
    }
    let total = spectrum.total();
    if total <= ZERO_VARIANCE {
        return Err(LinalgError::ZeroVariance { total });
    }
    if k == spectrum.len() {
        return Ok(1.0);
    }
    let head: f64 = spectrum.values()[..k].iter().sum();
    Ok((head / total).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
    }

    fn gram(b: &Matrix) -> Matrix {
        matmul(&b.transpose(), b).unwrap()
    }

    /// Power iteration with Hotelling deflation; independent of the Jacobi path.
    fn power_deflation_oracle(m: &Matrix) -> Vec<f64> {
        let n = m.rows();
        let mut a = m.clone();
        let mut values = Vec::new();
        for start in 0..n {
            let mut x: Vec<f64> = (0..n).map(|i| 1.0 + ((i + start) % 3) as f64 * 0.1).collect();
            let mut lambda = 0.0;
            for _ in 0..20_000 {
                let y: Vec<f64> = (0..n)
                    .map(|i| (0..n).map(|j| a.get(i, j) * x[j]).sum())
                    .collect();
                let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm == 0.0 {
                    lambda = 0.0;
                    break;
                }
                let next: Vec<f64> = y.iter().map(|v| v / norm).collect();
                let delta: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
                x = next;
                lambda = norm;
                if delta < 1e-15 {
                    break;
                }
            }
            values.push(lambda);
            for i in 0..n {
                for j in 0..n {
                    let v = a.get(i, j) - lambda * x[i] * x[j];
                    a.set(i, j, v);
                }
            }
        }
        values.sort_by(|a, b| b.total_cmp(a));
        values
    }

    #[test]
    fn identity_spectrum() {
        let s = eigh(&Matrix::identity(2)).unwrap();
        assert_eq!(s.values(), &[1.0, 1.0]);
        assert_eq!(s.total(), 2.0);
    }

    #[test]
    fn diagonal_spectrum() {
        let s = eigh(&Matrix::from_rows(&[[2.0, 0.0], [0.0, 0.0]])).unwrap();
        assert_eq!(s.values(), &[2.0, 0.0]);
    }

    #[test]
    fn gram_spectrum_matches_power_iteration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let b = random_matrix(&mut rng, 5, 5);
        let a = gram(&b);
        let spectrum = eigh(&a).unwrap();
        let oracle = power_deflation_oracle(&a);
        for (got, want) in spectrum.values().iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }

    #[test]
    fn eigenvectors_reconstruct_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = gram(&random_matrix(&mut rng, 9, 7));
        let (values, vectors) = jacobi_eigen(&a, true).unwrap();
        let v = vectors.unwrap();
        let lambda = Matrix::from_diag(&values);
        let rebuilt = matmul(&matmul(&v, &lambda).unwrap(), &v.transpose()).unwrap();
        let err = rebuilt.sub(&a).unwrap().max_abs();
        assert!(err < 1e-10 * a.max_abs(), "reconstruction error {err}");
    }

    #[test]
    fn psd_spectrum_preserves_trace_and_sign() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let rows = rng.gen_range(2..12);
            let cols = rng.gen_range(2..12);
            let a = gram(&random_matrix(&mut rng, rows, cols));
            let s = eigh(&a).unwrap();
            let trace = a.trace();
            assert!((s.total() - trace).abs() <= 1e-9 * trace);
            assert!(s.values().iter().all(|&v| v >= -1e-9 * trace));
            assert!(s.values().windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn permutation_similarity_keeps_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = gram(&random_matrix(&mut rng, 10, 6));
        let n = a.rows();
        let mut perm: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let p = Matrix::from_fn(n, n, |i, j| if perm[i] == j { 1.0 } else { 0.0 });
        let b = matmul(&matmul(&p, &a).unwrap(), &p.transpose()).unwrap();
        let sa = eigh(&a).unwrap();
        let sb = eigh(&b).unwrap();
        for (x, y) in sa.values().iter().zip(sb.values()) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn rejects_asymmetric_and_non_finite() {
        let m = Matrix::from_rows(&[[1.0, 2.0], [0.0, 1.0]]);
        assert!(matches!(eigh(&m), Err(LinalgError::NonSymmetric { .. })));
        let m = Matrix::from_rows(&[[1.0, f64::NAN], [f64::NAN, 1.0]]);
        assert!(matches!(eigh(&m), Err(LinalgError::NonFinite { .. })));
        let m = Matrix::zeros(2, 3);
        assert!(matches!(eigh(&m), Err(LinalgError::NotSquare { .. })));
    }

    #[test]
    fn clamps_tiny_negatives_and_rejects_large_ones() {
        let s = EigenSpectrum::from_eigenvalues(vec![-1e-12, 3.0, 1.0]).unwrap();
        assert_eq!(s.values(), &[3.0, 1.0, 0.0]);
        assert!(matches!(
            EigenSpectrum::from_eigenvalues(vec![1.0, -0.5]),
            Err(LinalgError::NegativeEigenvalue { .. })
        ));
    }

    #[test]
    fn matmul_identity_and_hand_example() {
        let a = Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]);
        assert_eq!(matmul(&Matrix::identity(2), &a).unwrap(), a);
        let ones = Matrix::from_rows(&[[1.0], [1.0]]);
        let out = matmul(&a, &ones).unwrap();
        assert_eq!(out, Matrix::from_rows(&[[3.0], [7.0]]));
    }

    #[test]
    fn matmul_matches_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_matrix(&mut rng, 8, 8);
        let b = random_matrix(&mut rng, 8, 8);
        let got = matmul(&a, &b).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let mut want = 0.0;
                for k in 0..8 {
                    want += a.get(i, k) * b.get(k, j);
                }
                assert!((got.get(i, j) - want).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn matmul_shape_mismatch() {
        let err = matmul(&Matrix::zeros(2, 3), &Matrix::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, LinalgError::ShapeMismatch { .. }));
    }

    #[test]
    fn matmul_is_associative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..10 {
            let (m, k, l, n) = (
                rng.gen_range(1..7),
                rng.gen_range(1..7),
                rng.gen_range(1..7),
                rng.gen_range(1..7),
            );
            let a = random_matrix(&mut rng, m, k);
            let b = random_matrix(&mut rng, k, l);
            let c = random_matrix(&mut rng, l, n);
            let left = matmul(&matmul(&a, &b).unwrap(), &c).unwrap();
            let right = matmul(&a, &matmul(&b, &c).unwrap()).unwrap();
            let diff = left.sub(&right).unwrap().frobenius_norm();
            assert!(diff <= 1e-10 * left.frobenius_norm().max(1.0));
        }
    }

    #[test]
    fn cumulative_ratio_examples() {
        let s = EigenSpectrum::from_eigenvalues(vec![4.0, 3.0, 2.0, 1.0]).unwrap();
        assert!((cumulative_ratio(&s, 2).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(cumulative_ratio(&s, 0).unwrap(), 0.0);
        assert_eq!(cumulative_ratio(&s, 4).unwrap(), 1.0);
        let flat = EigenSpectrum::from_eigenvalues(vec![1.0; 4]).unwrap();
        assert_eq!(cumulative_ratio(&flat, 3).unwrap(), 0.75);
        assert!(matches!(
            cumulative_ratio(&s, 5),
            Err(LinalgError::RankOutOfRange { .. })
        ));
        let zero = EigenSpectrum::from_eigenvalues(vec![0.0; 3]).unwrap();
        assert!(matches!(
            cumulative_ratio(&zero, 1),
            Err(LinalgError::ZeroVariance { .. })
        ));
    }

    #[test]
    fn cumulative_ratio_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let raw: Vec<f64> = (0..12).map(|_| rng.gen_range(0.0..5.0)).collect();
        let s = EigenSpectrum::from_eigenvalues(raw).unwrap();
        let ratios: Vec<f64> = (0..=s.len()).map(|k| cumulative_ratio(&s, k).unwrap()).collect();
        assert!(ratios.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(ratios[0], 0.0);
        assert_eq!(*ratios.last().unwrap(), 1.0);
    }
}

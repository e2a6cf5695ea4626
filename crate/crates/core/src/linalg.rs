//! Small dense linear algebra: Householder least squares, singular values
//! by one-sided Jacobi, and pivoted Gaussian elimination.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Real> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m.data[i * cols + j] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.rows)
            .map(|i| {
                (0..self.cols).fold(T::zero(), |acc, j| acc + self.get(i, j) * x[j])
            })
            .collect()
    }

    /// Appends `sqrt(ridge) I` below the matrix.
    fn augmented(&self, ridge: T) -> Self {
        let mut out = Self::zeros(self.rows + self.cols, self.cols);
        out.data[..self.data.len()].copy_from_slice(&self.data);
        let r = ridge.sqrt();
        for j in 0..self.cols {
            out.set(self.rows + j, j, r);
        }
        out
    }
}

/// In-place Householder triangularization of `a` (rows ≥ cols), applying the
/// same reflections to `rhs`. Returns the `cols × cols` upper factor.
fn householder<T2: Real>(a: &mut Matrix<T2>, rhs: &mut [T2]) -> Matrix<T2> {
    let (n, p) = (a.rows, a.cols);
    for k in 0..p {
        let norm = (k..n).fold(T2::zero(), |acc, i| acc + a.get(i, k).powi(2)).sqrt();
        if norm == T2::zero() {
            continue;
        }
        let x0 = a.get(k, k);
        let alpha = if x0 >= T2::zero() { -norm } else { norm };
        let mut v: Vec<T2> = (k..n).map(|i| a.get(i, k)).collect();
        v[0] = v[0] - alpha;
        let vnorm2 = v.iter().fold(T2::zero(), |acc, &x| acc + x * x);
        if vnorm2 == T2::zero() {
            continue;
        }
        let two = T2::lit(2.0);
        for j in k..p {
            let dot = v
                .iter()
                .enumerate()
                .fold(T2::zero(), |acc, (r, &vr)| acc + vr * a.get(k + r, j));
            let f = two * dot / vnorm2;
            for (r, &vr) in v.iter().enumerate() {
                let cur = a.get(k + r, j);
                a.set(k + r, j, cur - f * vr);
            }
        }
        let dot = v
            .iter()
            .enumerate()
            .fold(T2::zero(), |acc, (r, &vr)| acc + vr * rhs[k + r]);
        let f = two * dot / vnorm2;
        for (r, &vr) in v.iter().enumerate() {
            rhs[k + r] = rhs[k + r] - f * vr;
        }
    }
    Matrix::from_fn(p, p, |i, j| if j >= i { a.get(i, j) } else { T2::zero() })
}

/// Singular values of a square matrix, descending, by one-sided Jacobi.
fn jacobi_singular_values<T: Real>(mut m: Matrix<T>) -> Vec<T> {
    let p = m.cols;
    let n = m.rows;
    let tol = T::epsilon();
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..p {
            for j in (i + 1)..p {
                let (mut a, mut b, mut g) = (T::zero(), T::zero(), T::zero());
                for r in 0..n {
                    let (x, y) = (m.get(r, i), m.get(r, j));
                    a = a + x * x;
                    b = b + y * y;
                    g = g + x * y;
                }
                if g == T::zero() || g.abs() <= tol * (a * b).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (b - a) / (T::lit(2.0) * g);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for r in 0..n {
                    let (x, y) = (m.get(r, i), m.get(r, j));
                    m.set(r, i, c * x - s * y);
                    m.set(r, j, s * x + c * y);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut sv: Vec<T> = (0..p)
        .map(|j| (0..n).fold(T::zero(), |acc, r| acc + m.get(r, j).powi(2)).sqrt())
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    sv
}

/// Singular values of a tall (or square) matrix, descending.
pub fn singular_values<T: Real>(a: &Matrix<T>) -> Vec<T> {
    if a.rows < a.cols {
        // Work with the transpose; singular values are identical.
        let t = Matrix::from_fn(a.cols, a.rows, |i, j| a.get(j, i));
        return singular_values(&t);
    }
    let mut work = a.clone();
    let mut dummy = vec![T::zero(); a.rows];
    let r = householder(&mut work, &mut dummy);
    jacobi_singular_values(r)
}

/// 2-norm condition number `σ_max / σ_min`; infinite for a singular matrix.
pub fn condition_number<T: Real>(a: &Matrix<T>) -> T {
    let sv = singular_values(a);
    match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        _ => T::infinity(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares<T> {
    pub solution: Vec<T>,
    /// Condition number of the design matrix alone.
    pub condition: T,
    /// Condition number of the ridge-augmented system actually solved.
    pub effective_condition: T,
    /// Residual 2-norm `|A x - b|` (without the ridge term).
    pub residual_norm: T,
}

/// Solves `min |A x - b|² + ridge |x|²` through a QR factorization of the
/// augmented matrix `[A; sqrt(ridge) I]`.
pub fn ridge_least_squares<T: Real>(a: &Matrix<T>, b: &[T], ridge: T) -> Result<LeastSquares<T>> {
    if b.len() != a.rows {
        return Err(Error::Data(format!(
            "right-hand side has {} entries for {} rows",
            b.len(),
            a.rows
        )));
    }
    if a.rows < a.cols {
        return Err(Error::Precondition(format!(
            "least squares needs at least as many rows ({}) as unknowns ({})",
            a.rows, a.cols
        )));
    }
    if ridge < T::zero() || !ridge.is_finite() {
        return Err(Error::Domain(format!("ridge parameter must be non-negative, got {ridge}")));
    }
    let condition = condition_number(a);
    let mut aug = a.augmented(ridge);
    let mut rhs = b.to_vec();
    rhs.resize(aug.rows, T::zero());
    let r = householder(&mut aug, &mut rhs);
    let sv = jacobi_singular_values(r.clone());
    let effective_condition = match (sv.first(), sv.last()) {
        (Some(&hi), Some(&lo)) if lo > T::zero() => hi / lo,
        _ => T::infinity(),
    };
    if effective_condition.is_nan() || effective_condition * T::epsilon() >= T::lit(0.1) {
        return Err(Error::RankDeficient {
            condition: effective_condition.to_f64_lossy(),
        });
    }
    let p = a.cols;
    let mut x = vec![T::zero(); p];
    for i in (0..p).rev() {
        let s = ((i + 1)..p).fold(rhs[i], |acc, j| acc - r.get(i, j) * x[j]);
        x[i] = s / r.get(i, i);
    }
    let fitted = a.mul_vec(&x);
    let residual_norm = fitted
        .iter()
        .zip(b)
        .fold(T::zero(), |acc, (&f, &y)| acc + (f - y).powi(2))
        .sqrt();
    Ok(LeastSquares {
        solution: x,
        condition,
        effective_condition,
        residual_norm,
    })
}

/// Gaussian elimination with partial pivoting for a square system.
pub fn solve_square<T: Real>(a: &Matrix<T>, b: &[T]) -> Result<Vec<T>> {
    let n = a.rows;
    if a.cols != n || b.len() != n {
        return Err(Error::Data("solve_square needs a square system".into()));
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| {
                m.get(i, k)
                    .abs()
                    .partial_cmp(&m.get(j, k).abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap_or(k);
        if m.get(piv, k) == T::zero() {
            return Err(Error::RankDeficient {
                condition: f64::INFINITY,
            });
        }
        if piv != k {
            for j in 0..n {
                let (u, v) = (m.get(k, j), m.get(piv, j));
                m.set(k, j, v);
                m.set(piv, j, u);
            }
            x.swap(k, piv);
        }
        for i in (k + 1)..n {
            let f = m.get(i, k) / m.get(k, k);
            for j in k..n {
                let v = m.get(i, j) - f * m.get(k, j);
                m.set(i, j, v);
            }
            x[i] = x[i] - f * x[k];
        }
    }
    for i in (0..n).rev() {
        let s = ((i + 1)..n).fold(x[i], |acc, j| acc - m.get(i, j) * x[j]);
        x[i] = s / m.get(i, i);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn singular_values_of_diagonal_and_rotated() {
        let d = Matrix::from_fn(3, 3, |i, j| if i == j { [3.0, 1.0, 2.0][i] } else { 0.0 });
        let sv = singular_values(&d);
        assert_abs_diff_eq!(sv[0], 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sv[1], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sv[2], 1.0, epsilon = 1e-14);
        // [[1, 1], [0, 1]] has singular values φ and 1/φ.
        let m = Matrix::from_fn(2, 2, |i, j| if i == 1 && j == 0 { 0.0 } else { 1.0 });
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        let sv = singular_values(&m);
        assert_abs_diff_eq!(sv[0], phi, epsilon = 1e-14);
        assert_abs_diff_eq!(sv[1], 1.0 / phi, epsilon = 1e-14);
        assert_abs_diff_eq!(condition_number(&m), phi * phi, epsilon = 1e-13);
    }

    #[test]
    fn least_squares_recovers_exact_fit() {
        let a = Matrix::from_fn(10, 3, |i, j| (i as f64 * 0.3).powi(j as i32));
        let x_true = [1.0, -2.0, 0.5];
        let b = a.mul_vec(&x_true);
        let ls = ridge_least_squares(&a, &b, 0.0).unwrap();
        for (u, v) in ls.solution.iter().zip(&x_true) {
            assert_abs_diff_eq!(u, v, epsilon = 1e-12);
        }
        assert!(ls.residual_norm < 1e-12);
    }

    #[test]
    fn ridge_matches_normal_equations() {
        let a = Matrix::from_fn(6, 2, |i, j| ((i + 1) as f64).powi(j as i32 + 1).sin());
        let b: Vec<f64> = (0..6).map(|i| i as f64 * 0.7 - 1.0).collect();
        let ridge = 0.3;
        let ls = ridge_least_squares(&a, &b, ridge).unwrap();
        let ata = Matrix::from_fn(2, 2, |i, j| {
            (0..6).map(|r| a.get(r, i) * a.get(r, j)).sum::<f64>() + if i == j { ridge } else { 0.0 }
        });
        let atb: Vec<f64> = (0..2).map(|i| (0..6).map(|r| a.get(r, i) * b[r]).sum()).collect();
        let x = solve_square(&ata, &atb).unwrap();
        assert_abs_diff_eq!(ls.solution[0], x[0], epsilon = 1e-12);
        assert_abs_diff_eq!(ls.solution[1], x[1], epsilon = 1e-12);
    }

    #[test]
    fn rank_deficiency_is_reported() {
        let a = Matrix::from_fn(5, 2, |i, _| i as f64);
        let b = vec![0.0; 5];
        assert!(matches!(
            ridge_least_squares(&a, &b, 0.0),
            Err(Error::RankDeficient { .. })
        ));
        // Regularization restores solvability.
        assert!(ridge_least_squares(&a, &b, 1e-3).is_ok());
        assert!(ridge_least_squares(&a, &b[..2], 0.0).is_err());
    }
}

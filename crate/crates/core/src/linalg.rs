//! Small dense solvers.
//!
//! Two jobs only: factor shadow-fading covariance kernels, and solve the
//! per-UE second-layer weight systems. Matrices are at most a few hundred
//! rows, so straightforward textbook factorizations are the right tool.
//! Solvers equilibrate by the diagonal first; link gains span many orders of
//! magnitude and raw pivots would otherwise lose precision.

use num_complex::Complex;

use crate::num::Real;
use crate::Error;

/// Lower-triangular Cholesky factor `L` (row-major n×n) with `A = L·Lᵀ`.
///
/// Fails with a numerical error if a pivot is nonpositive or not finite.
pub fn cholesky_lower<T: Real>(n: usize, a: &[T]) -> Result<Vec<T>, Error> {
    assert_eq!(a.len(), n * n, "matrix shape");
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return Err(Error::Numerical(format!(
                        "Cholesky pivot {s:?} at row {i} is not positive"
                    )));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

/// Solves `A x = b` for symmetric positive-definite `A` (row-major n×n).
///
/// Equilibrates by the diagonal, factors with Cholesky, and falls back to a
/// partially pivoted elimination if the factorization fails.
pub fn solve_sym_pd<T: Real>(n: usize, a: &[T], b: &[T]) -> Result<Vec<T>, Error> {
    assert_eq!(a.len(), n * n, "matrix shape");
    assert_eq!(b.len(), n, "rhs length");
    let scale: Vec<T> = (0..n)
        .map(|i| {
            let d = a[i * n + i];
            if d > T::zero() && d.is_finite() {
                d.sqrt().recip()
            } else {
                T::one()
            }
        })
        .collect();
    let mut sa = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            sa[i * n + j] = a[i * n + j] * scale[i] * scale[j];
        }
    }
    let sb: Vec<T> = (0..n).map(|i| b[i] * scale[i]).collect();

    let y = match cholesky_lower(n, &sa) {
        Ok(l) => {
            let mut y = sb.clone();
            // Forward substitution L z = b, then backward Lᵀ y = z.
            for i in 0..n {
                let mut s = y[i];
                for k in 0..i {
                    s = s - l[i * n + k] * y[k];
                }
                y[i] = s / l[i * n + i];
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in (i + 1)..n {
                    s = s - l[k * n + i] * y[k];
                }
                y[i] = s / l[i * n + i];
            }
            y
        }
        Err(_) => solve_lu(n, &sa, &sb)?,
    };
    Ok((0..n).map(|i| y[i] * scale[i]).collect())
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_lu<T: Real>(n: usize, a: &[T], b: &[T]) -> Result<Vec<T>, Error> {
    assert_eq!(a.len(), n * n, "matrix shape");
    assert_eq!(b.len(), n, "rhs length");
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| {
                m[p * n + col]
                    .abs()
                    .partial_cmp(&m[q * n + col].abs())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty pivot range");
        let pivot = m[pivot_row * n + col];
        if pivot == T::zero() || !pivot.is_finite() {
            return Err(Error::Numerical(format!(
                "singular system: pivot {pivot:?} in column {col}"
            )));
        }
        if pivot_row != col {
            for j in 0..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        for row in (col + 1)..n {
            let f = m[row * n + col] / pivot;
            if f == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[col * n + j];
                m[row * n + j] = m[row * n + j] - f * v;
            }
            let v = x[col];
            x[row] = x[row] - f * v;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s = s - m[i * n + j] * x[j];
        }
        x[i] = s / m[i * n + i];
    }
    Ok(x)
}

/// Lower-triangular Cholesky factor of a Hermitian positive-definite matrix,
/// `A = L·Lᴴ`.
pub fn cholesky_lower_hermitian<T: Real>(
    n: usize,
    a: &[Complex<T>],
) -> Result<Vec<Complex<T>>, Error> {
    assert_eq!(a.len(), n * n, "matrix shape");
    let mut l = vec![Complex::new(T::zero(), T::zero()); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            if i == j {
                if !(s.re > T::zero()) || !s.re.is_finite() {
                    return Err(Error::Numerical(format!(
                        "Hermitian Cholesky pivot {:?} at row {i} is not positive",
                        s.re
                    )));
                }
                l[i * n + i] = Complex::new(s.re.sqrt(), T::zero());
            } else {
                l[i * n + j] = s / l[j * n + j].re;
            }
        }
    }
    Ok(l)
}

/// Solves `A x = b` for Hermitian positive-definite `A`, with diagonal
/// equilibration and a pivoted fallback, mirroring [`solve_sym_pd`].
pub fn solve_herm_pd<T: Real>(
    n: usize,
    a: &[Complex<T>],
    b: &[Complex<T>],
) -> Result<Vec<Complex<T>>, Error> {
    assert_eq!(a.len(), n * n, "matrix shape");
    assert_eq!(b.len(), n, "rhs length");
    let scale: Vec<T> = (0..n)
        .map(|i| {
            let d = a[i * n + i].re;
            if d > T::zero() && d.is_finite() {
                d.sqrt().recip()
            } else {
                T::one()
            }
        })
        .collect();
    let mut sa = vec![Complex::new(T::zero(), T::zero()); n * n];
    for i in 0..n {
        for j in 0..n {
            sa[i * n + j] = a[i * n + j] * (scale[i] * scale[j]);
        }
    }
    let sb: Vec<Complex<T>> = (0..n).map(|i| b[i] * scale[i]).collect();

    let y = match cholesky_lower_hermitian(n, &sa) {
        Ok(l) => {
            let mut y = sb.clone();
            for i in 0..n {
                let mut s = y[i];
                for k in 0..i {
                    s -= l[i * n + k] * y[k];
                }
                y[i] = s / l[i * n + i].re;
            }
            for i in (0..n).rev() {
                let mut s = y[i];
                for k in (i + 1)..n {
                    s -= l[k * n + i].conj() * y[k];
                }
                y[i] = s / l[i * n + i].re;
            }
            y
        }
        Err(_) => solve_lu_complex(n, &sa, &sb)?,
    };
    Ok((0..n).map(|i| y[i] * scale[i]).collect())
}

/// Complex Gaussian elimination with partial pivoting.
fn solve_lu_complex<T: Real>(
    n: usize,
    a: &[Complex<T>],
    b: &[Complex<T>],
) -> Result<Vec<Complex<T>>, Error> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| {
                m[p * n + col]
                    .norm_sqr()
                    .partial_cmp(&m[q * n + col].norm_sqr())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .expect("nonempty pivot range");
        let pivot = m[pivot_row * n + col];
        if pivot.norm_sqr() == T::zero() || !pivot.norm_sqr().is_finite() {
            return Err(Error::Numerical(format!(
                "singular system: pivot {pivot:?} in column {col}"
            )));
        }
        if pivot_row != col {
            for j in 0..n {
                m.swap(col * n + j, pivot_row * n + j);
            }
            x.swap(col, pivot_row);
        }
        for row in (col + 1)..n {
            let f = m[row * n + col] / pivot;
            if f.norm_sqr() == T::zero() {
                continue;
            }
            for j in col..n {
                let v = m[col * n + j];
                m[row * n + j] -= f * v;
            }
            let v = x[col];
            x[row] -= f * v;
        }
    }
    for i in (0..n).rev() {
        let mut s = x[i];
        for j in (i + 1)..n {
            s -= m[i * n + j] * x[j];
        }
        x[i] = s / m[i * n + i];
    }
    Ok(x)
}

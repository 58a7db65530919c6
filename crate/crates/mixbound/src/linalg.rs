//! Small dense solver used for stationary distributions. Desk scale only.

use ndarray::{Array1, Array2};

/// Solve `a x = b` by Gaussian elimination with partial pivoting, followed by
/// one step of iterative refinement. Returns `None` for (numerically) singular
/// systems.
pub(crate) fn solve(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let x = solve_raw(a, b)?;
    // Refinement: solve a d = b - a x and correct.
    let r = b - &a.dot(&x);
    match solve_raw(a, &r) {
        Some(d) => Some(x + d),
        None => Some(x),
    }
}

fn solve_raw(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = b.len();
    debug_assert_eq!(a.nrows(), n);
    debug_assert_eq!(a.ncols(), n);

    // Augmented working copy.
    let mut m = vec![0.0f64; n * (n + 1)];
    for i in 0..n {
        for j in 0..n {
            m[i * (n + 1) + j] = a[[i, j]];
        }
        m[i * (n + 1) + n] = b[i];
    }

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| {
                m[p * (n + 1) + col]
                    .abs()
                    .total_cmp(&m[q * (n + 1) + col].abs())
            })
            .unwrap();
        let pivot = m[pivot_row * (n + 1) + col];
        if pivot.abs() < 1e-300 {
            return None;
        }
        if pivot_row != col {
            for j in 0..=n {
                m.swap(col * (n + 1) + j, pivot_row * (n + 1) + j);
            }
        }
        for row in (col + 1)..n {
            let factor = m[row * (n + 1) + col] / m[col * (n + 1) + col];
            if factor == 0.0 {
                continue;
            }
            for j in col..=n {
                m[row * (n + 1) + j] -= factor * m[col * (n + 1) + j];
            }
        }
    }

    let mut x = Array1::zeros(n);
    for row in (0..n).rev() {
        let mut acc = m[row * (n + 1) + n];
        for j in (row + 1)..n {
            acc -= m[row * (n + 1) + j] * x[j];
        }
        x[row] = acc / m[row * (n + 1) + row];
    }
    if x.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(x)
}

use super::SolverError;

/// Solves `A x = rhs` for a symmetric tridiagonal `A` by Gaussian elimination
/// without pivoting (the Thomas algorithm), in O(n) time.
///
/// `diag` holds `A[i][i]` and `off` holds `A[i][i+1] = A[i+1][i]`. Without
/// pivoting the elimination is stable for definite matrices, which is what
/// the climber Hessians are.
pub fn solve_symmetric_tridiagonal(diag: &[f64], off: &[f64], rhs: &[f64]) -> Result<Vec<f64>, SolverError> {
    let n = diag.len();
    if rhs.len() != n || off.len() + 1 != n.max(1) {
        return Err(SolverError::DimensionMismatch {
            diag: n,
            off: off.len(),
            rhs: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }

    // Forward elimination. `pivot[i]` is the i-th diagonal of U, `y` the
    // transformed right-hand side.
    let mut pivot = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    pivot.push(diag[0]);
    y.push(rhs[0]);
    for i in 1..n {
        let prev = pivot[i - 1];
        if prev == 0.0 || !prev.is_finite() {
            return Err(SolverError::Singular { row: i - 1 });
        }
        let m = off[i - 1] / prev;
        pivot.push(diag[i] - m * off[i - 1]);
        y.push(rhs[i] - m * y[i - 1]);
    }
    if pivot[n - 1] == 0.0 || !pivot[n - 1].is_finite() {
        return Err(SolverError::Singular { row: n - 1 });
    }

    let mut x = vec![0.0; n];
    x[n - 1] = y[n - 1] / pivot[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = (y[i] - off[i] * x[i + 1]) / pivot[i];
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one() {
        assert_eq!(solve_symmetric_tridiagonal(&[-4.0], &[], &[2.0]).unwrap(), vec![-0.5]);
    }

    #[test]
    fn empty() {
        assert!(solve_symmetric_tridiagonal(&[], &[], &[]).unwrap().is_empty());
    }

    #[test]
    fn three_by_three() {
        // [-2  1  0] [1]   [ 0]
        // [ 1 -2  1] [2] = [ 0]
        // [ 0  1 -2] [3]   [-4]
        let x = solve_symmetric_tridiagonal(&[-2.0, -2.0, -2.0], &[1.0, 1.0], &[0.0, 0.0, -4.0]).unwrap();
        for (got, want) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn singular() {
        assert!(matches!(
            solve_symmetric_tridiagonal(&[0.0, -1.0], &[1.0], &[1.0, 1.0]),
            Err(SolverError::Singular { row: 0 })
        ));
        assert!(matches!(
            solve_symmetric_tridiagonal(&[1.0, 1.0], &[1.0], &[1.0, 1.0]),
            Err(SolverError::Singular { row: 1 })
        ));
    }

    #[test]
    fn dimension_mismatch() {
        assert!(solve_symmetric_tridiagonal(&[1.0, 1.0], &[], &[1.0, 1.0]).is_err());
        assert!(solve_symmetric_tridiagonal(&[1.0], &[], &[1.0, 1.0]).is_err());
    }
}

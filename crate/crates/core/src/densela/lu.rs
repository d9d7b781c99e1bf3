use super::{Matrix, Vector};
use crate::{Error, Result};

/// Pivots smaller than this multiple of the largest entry magnitude count as zero.
pub const PIVOT_THRESHOLD: f64 = 1e-12;

/// LU factorization with partial pivoting, `P M = L U`.
#[derive(Clone, Debug)]
pub struct Lu {
    n: usize,
    // unit lower factor below the diagonal, upper factor on and above it
    factors: Matrix,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(m: &Matrix) -> Result<Lu> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "LU needs a square matrix, got {}x{}",
                m.rows(),
                m.cols()
            )));
        }
        let n = m.rows();
        let scale = m.max_abs();
        let threshold = PIVOT_THRESHOLD * scale;
        let mut a = m.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (p, pivot) = (k..n)
                .map(|i| (i, a[(i, k)].abs()))
                .fold(
                    (k, -1.0),
                    |best, cur| if cur.1 > best.1 { cur } else { best },
                );
            if pivot <= threshold || scale == 0.0 {
                return Err(Error::SingularMatrix {
                    column: k,
                    pivot,
                    threshold,
                });
            }
            if p != k {
                perm.swap(p, k);
                for j in 0..n {
                    let tmp = a[(k, j)];
                    a[(k, j)] = a[(p, j)];
                    a[(p, j)] = tmp;
                }
            }
            let d = a[(k, k)];
            for i in k + 1..n {
                let l = a[(i, k)] / d;
                a[(i, k)] = l;
                if l != 0.0 {
                    for j in k + 1..n {
                        a[(i, j)] -= l * a[(k, j)];
                    }
                }
            }
        }
        Ok(Lu {
            n,
            factors: a,
            perm,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Vector {
        assert_eq!(rhs.len(), self.n, "Lu::solve: dimension mismatch");
        let a = &self.factors;
        let mut x: Vector = self.perm.iter().map(|&p| rhs[p]).collect();
        for i in 0..self.n {
            let s: f64 = (0..i).map(|j| a[(i, j)] * x[j]).sum();
            x[i] -= s;
        }
        for i in (0..self.n).rev() {
            let s: f64 = (i + 1..self.n).map(|j| a[(i, j)] * x[j]).sum();
            x[i] = (x[i] - s) / a[(i, i)];
        }
        x
    }

    /// Solves `M X = B` column by column.
    pub fn solve_matrix(&self, b: &Matrix) -> Matrix {
        assert_eq!(b.rows(), self.n, "Lu::solve_matrix: dimension mismatch");
        let cols: Vec<Vector> = (0..b.cols()).map(|j| self.solve(&b.col(j))).collect();
        Matrix::from_fn(self.n, b.cols(), |i, j| cols[j][i])
    }

    pub fn inverse(&self) -> Matrix {
        self.solve_matrix(&Matrix::identity(self.n))
    }

    pub fn determinant(&self) -> f64 {
        let mut swaps = 0;
        let mut seen = vec![false; self.n];
        for start in 0..self.n {
            if seen[start] {
                continue;
            }
            let mut len = 0;
            let mut i = start;
            while !seen[i] {
                seen[i] = true;
                i = self.perm[i];
                len += 1;
            }
            swaps += len - 1;
        }
        let sign = if swaps % 2 == 0 { 1.0 } else { -1.0 };
        sign * (0..self.n).map(|i| self.factors[(i, i)]).product::<f64>()
    }
}

/// Solves `M x = rhs` by Gaussian elimination with partial pivoting.
pub fn solve_linear(m: &Matrix, rhs: &[f64]) -> Result<Vector> {
    if rhs.len() != m.rows() {
        return Err(Error::DimensionMismatch(format!(
            "right-hand side has {} entries for a {}x{} matrix",
            rhs.len(),
            m.rows(),
            m.cols()
        )));
    }
    Ok(Lu::factor(m)?.solve(rhs))
}

/// Numerical rank by Gaussian elimination with complete pivoting; pivots at or below
/// `rel_tol` times the largest entry count as zero.
pub fn rank(m: &Matrix, rel_tol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = (a.rows(), a.cols());
    let threshold = rel_tol * a.max_abs();
    let mut r = 0;
    while r < rows.min(cols) {
        let mut best = (r, r, 0.0);
        for i in r..rows {
            for j in r..cols {
                if a[(i, j)].abs() > best.2 {
                    best = (i, j, a[(i, j)].abs());
                }
            }
        }
        if best.2 <= threshold || best.2 == 0.0 {
            break;
        }
        let (pi, pj, _) = best;
        for j in 0..cols {
            let tmp = a[(r, j)];
            a[(r, j)] = a[(pi, j)];
            a[(pi, j)] = tmp;
        }
        for i in 0..rows {
            let tmp = a[(i, r)];
            a[(i, r)] = a[(i, pj)];
            a[(i, pj)] = tmp;
        }
        for i in r + 1..rows {
            let l = a[(i, r)] / a[(r, r)];
            for j in r..cols {
                a[(i, j)] -= l * a[(r, j)];
            }
        }
        r += 1;
    }
    r
}

//! Dense LU factorization with partial pivoting, used for the simplex
//! basis. Desk-scale problems do not need sparse factors.

/// PA = LU with L unit lower triangular. L and U share one dense
/// row-major array; the unit diagonal of L is implicit.
pub struct LuFactors {
    m: usize,
    lu: Vec<f64>,
    /// `perm[k]` is the original row index placed at position k.
    perm: Vec<usize>,
}

#[derive(Debug)]
pub struct Singular {
    pub column: usize,
}

impl LuFactors {
    /// Factorizes the m x m matrix whose k-th column is the sparse
    /// `cols[k]` (row, value) list.
    pub fn factorize(m: usize, cols: &[&[(usize, f64)]]) -> Result<LuFactors, Singular> {
        debug_assert_eq!(cols.len(), m);
        let mut a = vec![0.0; m * m];
        for (k, col) in cols.iter().enumerate() {
            for &(r, val) in *col {
                a[r * m + k] = val;
            }
        }
        let mut perm: Vec<usize> = (0..m).collect();
        for k in 0..m {
            let mut piv = k;
            let mut best = a[k * m + k].abs();
            for r in (k + 1)..m {
                let cand = a[r * m + k].abs();
                if cand > best {
                    best = cand;
                    piv = r;
                }
            }
            if best < 1e-12 {
                return Err(Singular { column: k });
            }
            if piv != k {
                perm.swap(k, piv);
                for c in 0..m {
                    a.swap(k * m + c, piv * m + c);
                }
            }
            let diag = a[k * m + k];
            for r in (k + 1)..m {
                let factor = a[r * m + k] / diag;
                a[r * m + k] = factor;
                if factor != 0.0 {
                    let (head, tail) = a.split_at_mut(r * m);
                    let krow = &head[k * m..k * m + m];
                    let rrow = &mut tail[..m];
                    for c in (k + 1)..m {
                        rrow[c] -= factor * krow[c];
                    }
                }
            }
        }
        Ok(LuFactors { m, lu: a, perm })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Solves B x = b in place.
    pub fn solve(&self, b: &mut [f64]) {
        let m = self.m;
        debug_assert_eq!(b.len(), m);
        let mut y = vec![0.0; m];
        for k in 0..m {
            y[k] = b[self.perm[k]];
        }
        // Forward: L y' = y (unit diagonal).
        for k in 0..m {
            let yk = y[k];
            if yk != 0.0 {
                for r in (k + 1)..m {
                    y[r] -= self.lu[r * m + k] * yk;
                }
            }
        }
        // Backward: U x = y'.
        for k in (0..m).rev() {
            let mut v = y[k];
            for c in (k + 1)..m {
                v -= self.lu[k * m + c] * y[c];
            }
            y[k] = v / self.lu[k * m + k];
        }
        b.copy_from_slice(&y);
    }

    /// Solves Bᵀ x = c in place.
    pub fn solve_transpose(&self, c: &mut [f64]) {
        let m = self.m;
        debug_assert_eq!(c.len(), m);
        // B = Pᵀ L U, so Bᵀ = Uᵀ Lᵀ P and we solve Uᵀ w = c, Lᵀ z = w,
        // x = Pᵀ z.
        let mut w = c.to_vec();
        for k in 0..m {
            let mut v = w[k];
            for r in 0..k {
                v -= self.lu[r * m + k] * w[r];
            }
            w[k] = v / self.lu[k * m + k];
        }
        for k in (0..m).rev() {
            let wk = w[k];
            if wk != 0.0 {
                for r in 0..k {
                    w[r] -= self.lu[k * m + r] * wk;
                }
            }
        }
        for k in 0..m {
            c[self.perm[k]] = w[k];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_dense_system() {
        // B = [[2,1,0],[1,3,1],[0,1,4]]
        let cols: Vec<Vec<(usize, f64)>> = vec![
            vec![(0, 2.0), (1, 1.0)],
            vec![(0, 1.0), (1, 3.0), (2, 1.0)],
            vec![(1, 1.0), (2, 4.0)],
        ];
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        let lu = LuFactors::factorize(3, &refs).unwrap();

        let mut b = vec![3.0, 5.0, 5.0];
        lu.solve(&mut b);
        // Check B x = rhs.
        let x = b;
        assert!((2.0 * x[0] + x[1] - 3.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] + x[2] - 5.0).abs() < 1e-12);
        assert!((x[1] + 4.0 * x[2] - 5.0).abs() < 1e-12);

        let mut c = vec![1.0, 2.0, 3.0];
        lu.solve_transpose(&mut c);
        let y = c;
        assert!((2.0 * y[0] + y[1] - 1.0).abs() < 1e-12);
        assert!((y[0] + 3.0 * y[1] + y[2] - 2.0).abs() < 1e-12);
        assert!((y[1] + 4.0 * y[2] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reports_singularity() {
        let cols: Vec<Vec<(usize, f64)>> = vec![vec![(0, 1.0)], vec![(0, 2.0)]];
        let refs: Vec<&[(usize, f64)]> = cols.iter().map(|c| c.as_slice()).collect();
        assert!(LuFactors::factorize(2, &refs).is_err());
    }
}

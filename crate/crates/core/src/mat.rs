//! Dense symmetric matrices and Cholesky factorization of pattern submatrices.
//!
//! Positive definiteness is decided by attempted factorization: a pivot that
//! does not exceed a relative floor of [`PD_PIVOT_REL_FLOOR`] times the
//! largest diagonal entry of the submatrix marks the matrix as not positive
//! definite. This single rule defines feasibility everywhere in the crate.

/// Relative pivot floor for positive-definiteness checks.
pub const PD_PIVOT_REL_FLOOR: f64 = 1e-10;

/// Symmetric matrix with full row-major storage. Writes through [`SymMat::set`]
/// keep both triangles in sync.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat {
    dim: usize,
    data: Vec<f64>,
}

impl SymMat {
    pub fn zeros(dim: usize) -> Self {
        SymMat {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    /// Diagonal matrix with entries `diag`.
    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = SymMat::zeros(diag.len());
        for (j, &d) in diag.iter().enumerate() {
            m.set(j, j, d);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim + b]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, value: f64) {
        self.data[a * self.dim + b] = value;
        self.data[b * self.dim + a] = value;
    }

    #[inline]
    pub fn add_assign_at(&mut self, a: usize, b: usize, value: f64) {
        self.data[a * self.dim + b] += value;
        if a != b {
            self.data[b * self.dim + a] += value;
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|j| self.get(j, j)).collect()
    }

    /// Returns a copy with `shift[j]` added to diagonal entry `j`.
    pub fn with_diagonal_shift(&self, shift: &[f64]) -> SymMat {
        assert_eq!(shift.len(), self.dim);
        let mut out = self.clone();
        for (j, &s) in shift.iter().enumerate() {
            let v = out.get(j, j) + s;
            out.set(j, j, v);
        }
        out
    }

    /// Cholesky factorization of the principal submatrix indexed by `support`.
    ///
    /// Returns `None` when a pivot falls at or below the relative floor, which
    /// is the crate-wide definition of "not positive definite".
    pub fn cholesky_submatrix(&self, support: &[usize]) -> Option<CholeskyFactor> {
        let s = support.len();
        if s == 0 {
            return Some(CholeskyFactor {
                dim: 0,
                lower: Vec::new(),
                log_det: 0.0,
            });
        }
        let mut max_diag = f64::NEG_INFINITY;
        for &j in support {
            max_diag = max_diag.max(self.get(j, j));
        }
        if !(max_diag > 0.0) {
            return None;
        }
        let floor = PD_PIVOT_REL_FLOOR * max_diag;

        // Row-major packed lower triangle: row i holds i+1 entries.
        let mut lower = vec![0.0; s * (s + 1) / 2];
        let mut log_det = 0.0;
        for i in 0..s {
            let row_i = i * (i + 1) / 2;
            for j in 0..=i {
                let row_j = j * (j + 1) / 2;
                let mut acc = self.get(support[i], support[j]);
                for k in 0..j {
                    acc -= lower[row_i + k] * lower[row_j + k];
                }
                if i == j {
                    if acc <= floor {
                        return None;
                    }
                    let pivot = acc.sqrt();
                    lower[row_i + i] = pivot;
                    log_det += 2.0 * pivot.ln();
                } else {
                    lower[row_i + j] = acc / lower[row_j + j];
                }
            }
        }
        Some(CholeskyFactor {
            dim: s,
            lower,
            log_det,
        })
    }

    /// Factorization of the full matrix.
    pub fn cholesky(&self) -> Option<CholeskyFactor> {
        let support: Vec<usize> = (0..self.dim).collect();
        self.cholesky_submatrix(&support)
    }
}

/// Lower-triangular Cholesky factor L with `L Lᵀ` equal to the factored
/// (sub)matrix, stored packed row-major.
#[derive(Debug, Clone)]
pub struct CholeskyFactor {
    dim: usize,
    lower: Vec<f64>,
    log_det: f64,
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Log-determinant of the factored matrix.
    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    #[cfg(test)]
    fn l(&self, i: usize, j: usize) -> f64 {
        self.lower[i * (i + 1) / 2 + j]
    }

    /// Solves `L w = b` in place.
    pub fn forward_solve(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.dim);
        for i in 0..self.dim {
            let row = i * (i + 1) / 2;
            let mut acc = b[i];
            for k in 0..i {
                acc -= self.lower[row + k] * b[k];
            }
            b[i] = acc / self.lower[row + i];
        }
    }

    /// Squared Mahalanobis norm `bᵀ (L Lᵀ)⁻¹ b`.
    pub fn quad_form(&self, b: &[f64]) -> f64 {
        let mut w = b.to_vec();
        self.forward_solve(&mut w);
        w.iter().map(|x| x * x).sum()
    }

    /// Diagonal of the inverse of the factored matrix.
    ///
    /// Column j of `L⁻¹` is obtained by forward substitution on the unit
    /// vector; its squared norm is entry j of `(L Lᵀ)⁻¹`'s diagonal.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        let mut col = vec![0.0; self.dim];
        for j in 0..self.dim {
            for x in col.iter_mut() {
                *x = 0.0;
            }
            col[j] = 1.0;
            let mut norm2 = 0.0;
            for i in j..self.dim {
                let row = i * (i + 1) / 2;
                let mut acc = col[i];
                for k in j..i {
                    acc -= self.lower[row + k] * col[k];
                }
                let v = acc / self.lower[row + i];
                col[i] = v;
                norm2 += v * v;
            }
            out[j] = norm2;
        }
        out
    }
}

use nalgebra::DMatrix;

use super::{LinalgError, Permutation, SparseMatrix};

/// A pivot is rejected when `|u_ii| <= PIVOT_TOLERANCE * max_j |a_ij|`.
pub const PIVOT_TOLERANCE: f64 = 1e-14;

/// Envelope (variable band) LU factors of `P A Pᵀ` without row interchanges.
///
/// Row `i` of `L` and column `i` of `U` share the envelope start `first[i]`
/// because the pattern is structurally symmetric. Both are stored
/// contiguously, which keeps the inner products of the factorization and the
/// triangular solves on unit-stride slices.
#[derive(Debug, Clone)]
pub struct Factorization {
    n: usize,
    perm: Permutation,
    first: Vec<usize>,
    offsets: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    diag: Vec<f64>,
}

pub fn factorize(a: &SparseMatrix, perm: &Permutation) -> Result<Factorization, LinalgError> {
    let n = a.n_rows();
    if perm.len() != n {
        return Err(LinalgError::DimensionMismatch {
            expected: n,
            found: perm.len(),
        });
    }
    a.pattern().check_symmetric()?;

    let fwd = perm.forward();
    let rows = a.row_offsets();
    let cols = a.col_indices();
    let vals = a.values();

    let mut first: Vec<usize> = (0..n).collect();
    for i in 0..n {
        let pi = fwd[i];
        for &j in &cols[rows[i]..rows[i + 1]] {
            let pj = fwd[j];
            if pj < pi {
                first[pi] = first[pi].min(pj);
            }
        }
    }
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0);
    for i in 0..n {
        offsets.push(offsets[i] + (i - first[i]));
    }
    let envelope = offsets[n];

    let mut lower = vec![0.0; envelope];
    let mut upper = vec![0.0; envelope];
    let mut diag = vec![0.0; n];
    let mut row_scale = vec![0.0; n];
    for i in 0..n {
        let pi = fwd[i];
        row_scale[pi] = a.row_max_abs(i);
        for k in rows[i]..rows[i + 1] {
            let pj = fwd[cols[k]];
            let v = vals[k];
            match pj.cmp(&pi) {
                std::cmp::Ordering::Less => lower[offsets[pi] + pj - first[pi]] = v,
                std::cmp::Ordering::Greater => upper[offsets[pj] + pi - first[pj]] = v,
                std::cmp::Ordering::Equal => diag[pi] = v,
            }
        }
    }

    for i in 0..n {
        let fi = first[i];
        let oi = offsets[i];
        // column i of U above the diagonal
        for j in fi..i {
            let fj = first[j];
            let k0 = fi.max(fj);
            let lj = &lower[offsets[j] + k0 - fj..offsets[j] + j - fj];
            let ui = &upper[oi + k0 - fi..oi + j - fi];
            let s: f64 = lj.iter().zip(ui).map(|(l, u)| l * u).sum();
            upper[oi + j - fi] -= s;
        }
        // row i of L
        for j in fi..i {
            let fj = first[j];
            let k0 = fi.max(fj);
            let li = &lower[oi + k0 - fi..oi + j - fi];
            let uj = &upper[offsets[j] + k0 - fj..offsets[j] + j - fj];
            let s: f64 = li.iter().zip(uj).map(|(l, u)| l * u).sum();
            lower[oi + j - fi] = (lower[oi + j - fi] - s) / diag[j];
        }
        let s: f64 = (0..i - fi).map(|k| lower[oi + k] * upper[oi + k]).sum();
        diag[i] -= s;
        if diag[i].is_nan() || diag[i].abs() <= PIVOT_TOLERANCE * row_scale[i] {
            return Err(LinalgError::Singular {
                index: perm.inverse()[i],
                pivot: diag[i],
            });
        }
    }

    Ok(Factorization {
        n,
        perm: perm.clone(),
        first,
        offsets,
        lower,
        upper,
        diag,
    })
}

impl Factorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn permutation(&self) -> &Permutation {
        &self.perm
    }

    /// Number of stored off-diagonal entries per triangle.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    /// Solves `A x = b` for every column of `rhs`.
    pub fn solve(&self, rhs: &DMatrix<f64>) -> Result<DMatrix<f64>, LinalgError> {
        if rhs.nrows() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: rhs.nrows(),
            });
        }
        let mut out = DMatrix::zeros(self.n, rhs.ncols());
        let mut work = vec![0.0; self.n];
        for c in 0..rhs.ncols() {
            self.solve_into(rhs.column(c).as_slice(), &mut work, out.column_mut(c).as_mut_slice());
        }
        Ok(out)
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
        if b.len() != self.n {
            return Err(LinalgError::DimensionMismatch {
                expected: self.n,
                found: b.len(),
            });
        }
        let mut x = vec![0.0; self.n];
        let mut work = vec![0.0; self.n];
        self.solve_into(b, &mut work, &mut x);
        Ok(x)
    }

    fn solve_into(&self, b: &[f64], y: &mut [f64], x: &mut [f64]) {
        let fwd = self.perm.forward();
        for (i, &bi) in b.iter().enumerate() {
            y[fwd[i]] = bi;
        }
        for i in 0..self.n {
            let fi = self.first[i];
            let oi = self.offsets[i];
            let s: f64 = self.lower[oi..self.offsets[i + 1]]
                .iter()
                .zip(&y[fi..i])
                .map(|(l, yk)| l * yk)
                .sum();
            y[i] -= s;
        }
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let oi = self.offsets[i];
            let xi = y[i] / self.diag[i];
            y[i] = xi;
            for (yk, u) in y[fi..i].iter_mut().zip(&self.upper[oi..self.offsets[i + 1]]) {
                *yk -= u * xi;
            }
        }
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = y[fwd[i]];
        }
    }
}

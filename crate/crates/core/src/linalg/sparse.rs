use super::LinalgError;

/// CSR sparsity structure without values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparsityPattern {
    n: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
}

impl SparsityPattern {
    /// Builds a pattern from arbitrary `(row, col)` entries. Duplicates are merged.
    pub fn from_entries<I>(n: usize, entries: I) -> Self
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, j) in entries {
            assert!(i < n && j < n, "entry ({i}, {j}) out of bounds for n = {n}");
            rows[i].push(j);
        }
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut col_indices = Vec::new();
        row_offsets.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_indices.extend_from_slice(row);
            row_offsets.push(col_indices.len());
        }
        Self {
            n,
            row_offsets,
            col_indices,
        }
    }

    pub fn new(n: usize, row_offsets: Vec<usize>, col_indices: Vec<usize>) -> Result<Self, LinalgError> {
        validate_csr(n, &row_offsets, &col_indices)?;
        Ok(Self {
            n,
            row_offsets,
            col_indices,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_indices[self.row_offsets[i]..self.row_offsets[i + 1]]
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.position(i, j).is_some()
    }

    /// Index into the value array of entry `(i, j)`, if present.
    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_offsets[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }

    /// Returns the first entry whose transpose is missing, if any.
    pub fn check_symmetric(&self) -> Result<(), LinalgError> {
        for i in 0..self.n {
            for &j in self.row(i) {
                if !self.contains(j, i) {
                    return Err(LinalgError::NotSymmetric { row: i, col: j });
                }
            }
        }
        Ok(())
    }

    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).iter().map(move |&j| i.abs_diff(j)))
            .max()
            .unwrap_or(0)
    }

    /// Bandwidth after renumbering with `forward` (old -> new).
    pub fn permuted_bandwidth(&self, forward: &[usize]) -> usize {
        (0..self.n)
            .flat_map(|i| self.row(i).iter().map(move |&j| forward[i].abs_diff(forward[j])))
            .max()
            .unwrap_or(0)
    }
}

fn validate_csr(n: usize, row_offsets: &[usize], col_indices: &[usize]) -> Result<(), LinalgError> {
    if row_offsets.len() != n + 1 {
        return Err(LinalgError::InvalidStructure(format!(
            "row_offsets has length {}, expected {}",
            row_offsets.len(),
            n + 1
        )));
    }
    if row_offsets[0] != 0 || row_offsets[n] != col_indices.len() {
        return Err(LinalgError::InvalidStructure(
            "row_offsets must start at 0 and end at nnz".into(),
        ));
    }
    for i in 0..n {
        if row_offsets[i] > row_offsets[i + 1] {
            return Err(LinalgError::InvalidStructure(format!(
                "row_offsets decreases at row {i}"
            )));
        }
        let row = &col_indices[row_offsets[i]..row_offsets[i + 1]];
        if row.windows(2).any(|w| w[0] >= w[1]) {
            return Err(LinalgError::InvalidStructure(format!(
                "column indices of row {i} are not strictly increasing"
            )));
        }
        if row.iter().any(|&j| j >= n) {
            return Err(LinalgError::InvalidStructure(format!(
                "column index out of range in row {i}"
            )));
        }
    }
    Ok(())
}

/// Square CSR matrix with a structurally symmetric pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    pub fn new(
        n_rows: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, LinalgError> {
        validate_csr(n_rows, &row_offsets, &col_indices)?;
        if values.len() != col_indices.len() {
            return Err(LinalgError::DimensionMismatch {
                expected: col_indices.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            n_rows,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// All-zero matrix with the given structure.
    pub fn zeros(pattern: &SparsityPattern) -> Self {
        Self {
            n_rows: pattern.n,
            row_offsets: pattern.row_offsets.clone(),
            col_indices: pattern.col_indices.clone(),
            values: vec![0.0; pattern.nnz()],
        }
    }

    /// Dense-to-CSR conversion keeping nonzeros plus the transposed positions
    /// (so the result is structurally symmetric) and the diagonal.
    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let n = rows.len();
        let pattern = SparsityPattern::from_entries(
            n,
            (0..n).flat_map(|i| {
                (0..n).filter_map(move |j| (i == j || rows[i][j] != 0.0 || rows[j][i] != 0.0).then_some((i, j)))
            }),
        );
        let mut m = Self::zeros(&pattern);
        for (i, row) in rows.iter().enumerate().take(n) {
            for k in m.row_offsets[i]..m.row_offsets[i + 1] {
                m.values[k] = row[m.col_indices[k]];
            }
        }
        m
    }

    pub fn identity(n: usize) -> Self {
        Self {
            n_rows: n,
            row_offsets: (0..=n).collect(),
            col_indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn pattern(&self) -> SparsityPattern {
        SparsityPattern {
            n: self.n_rows,
            row_offsets: self.row_offsets.clone(),
            col_indices: self.col_indices.clone(),
        }
    }

    pub fn position(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_offsets[i];
        self.col_indices[start..self.row_offsets[i + 1]]
            .binary_search(&j)
            .ok()
            .map(|k| start + k)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.position(i, j).map_or(0.0, |k| self.values[k])
    }

    /// Adds `v` at `(i, j)`. Panics if the entry is not in the pattern.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .position(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) not in sparsity pattern"));
        self.values[k] += v;
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n_rows);
        (0..self.n_rows)
            .map(|i| {
                (self.row_offsets[i]..self.row_offsets[i + 1])
                    .map(|k| self.values[k] * x[self.col_indices[k]])
                    .sum()
            })
            .collect()
    }

    /// Maximum absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| {
                self.values[self.row_offsets[i]..self.row_offsets[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Largest absolute value in row `i`.
    pub fn row_max_abs(&self, i: usize) -> f64 {
        self.values[self.row_offsets[i]..self.row_offsets[i + 1]]
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

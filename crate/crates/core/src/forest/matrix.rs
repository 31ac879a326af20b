use crate::num::Scalar;

/// Column-major feature matrix with every column's row order presorted by value.
#[derive(Debug, Clone)]
pub struct ColumnMatrix<T> {
    n_rows: usize,
    n_cols: usize,
    values: Vec<T>,
    sorted: Vec<u32>,
}

impl<T: Scalar> ColumnMatrix<T> {
    pub fn from_rows<R: AsRef<[T]>>(rows: &[R]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = vec![T::zero(); n_rows * n_cols];
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            assert_eq!(r.len(), n_cols, "ragged feature rows");
            for (j, v) in r.iter().enumerate() {
                values[j * n_rows + i] = *v;
            }
        }
        let mut sorted = Vec::with_capacity(n_rows * n_cols);
        for j in 0..n_cols {
            let col = &values[j * n_rows..(j + 1) * n_rows];
            let mut idx: Vec<u32> = (0..n_rows as u32).collect();
            idx.sort_by(|&a, &b| col[a as usize].partial_cmp(&col[b as usize]).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
            sorted.extend(idx);
        }
        Self {
            n_rows,
            n_cols,
            values,
            sorted,
        }
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn column(&self, j: usize) -> &[T] {
        &self.values[j * self.n_rows..(j + 1) * self.n_rows]
    }

    /// Row indices of column `j` in ascending value order (ties by row index).
    pub fn sorted_rows(&self, j: usize) -> &[u32] {
        &self.sorted[j * self.n_rows..(j + 1) * self.n_rows]
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        self.values[col * self.n_rows + row]
    }
}

//! Basis factorization for the bounded revised simplex.
//!
//! The constraint matrix is `[A | -I]`: one logical column per row. A basis
//! position holding a logical is a signed unit column, so only the square
//! kernel formed by the basic structural columns and the rows not covered by
//! basic logicals needs an LU factorization. Updates between
//! refactorizations are kept as product-form eta columns.

/// Column-compressed sparse matrix.
#[derive(Clone, Debug, Default)]
pub(crate) struct Csc {
    pub rows: usize,
    pub cols: usize,
    pub start: Vec<usize>,
    pub index: Vec<usize>,
    pub value: Vec<f64>,
}

impl Csc {
    pub fn col(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.start[j], self.start[j + 1]);
        self.index[s..e]
            .iter()
            .copied()
            .zip(self.value[s..e].iter().copied())
    }

    /// Transposed copy (row-compressed view of the same matrix).
    pub fn transpose(&self) -> Csc {
        let mut count = vec![0usize; self.rows + 1];
        for &r in &self.index {
            count[r + 1] += 1;
        }
        for r in 0..self.rows {
            count[r + 1] += count[r];
        }
        let mut next = count.clone();
        let nnz = self.index.len();
        let mut index = vec![0; nnz];
        let mut value = vec![0.0; nnz];
        for j in 0..self.cols {
            for (r, v) in self.col(j) {
                let slot = next[r];
                index[slot] = j;
                value[slot] = v;
                next[r] += 1;
            }
        }
        Csc {
            rows: self.cols,
            cols: self.rows,
            start: count,
            index,
            value,
        }
    }
}

const PIVOT_ABS_TOL: f64 = 1e-9;
const PIVOT_REL_THRESHOLD: f64 = 0.01;

/// A rejected factorization: the listed basis positions are linearly
/// dependent; `free_rows` are rows left without a pivot. Replacing the
/// positions with the logicals of those rows gives a nonsingular basis.
#[derive(Debug)]
pub(crate) struct Singular {
    pub positions: Vec<usize>,
    pub free_rows: Vec<usize>,
}

struct Eta {
    pos: usize,
    pivot: f64,
    others: Vec<(usize, f64)>,
}

/// Sparse triangular factors of the permuted kernel, stored in both
/// orientations for forward and transposed solves.
#[derive(Default)]
struct KernelLu {
    size: usize,
    diag: Vec<f64>,
    l_cols: Vec<Vec<(usize, f64)>>,
    l_rows: Vec<Vec<(usize, f64)>>,
    u_cols: Vec<Vec<(usize, f64)>>,
    u_rows: Vec<Vec<(usize, f64)>>,
}

impl KernelLu {
    fn solve(&self, b: &mut [f64]) {
        for k in 0..self.size {
            let zk = b[k];
            if zk != 0.0 {
                for &(i, l) in &self.l_cols[k] {
                    b[i] -= l * zk;
                }
            }
        }
        for k in (0..self.size).rev() {
            if b[k] != 0.0 {
                let xk = b[k] / self.diag[k];
                b[k] = xk;
                for &(i, u) in &self.u_cols[k] {
                    b[i] -= u * xk;
                }
            }
        }
    }

    fn solve_transposed(&self, c: &mut [f64]) {
        for k in 0..self.size {
            if c[k] != 0.0 {
                let wk = c[k] / self.diag[k];
                c[k] = wk;
                for &(j, u) in &self.u_rows[k] {
                    c[j] -= u * wk;
                }
            }
        }
        for k in (0..self.size).rev() {
            let vk = c[k];
            if vk != 0.0 {
                for &(j, l) in &self.l_rows[k] {
                    c[j] -= l * vk;
                }
            }
        }
    }
}

pub(crate) struct BasisFactor {
    m: usize,
    /// For each basis position: `Some(row)` if it holds that row's logical.
    logical_row: Vec<Option<usize>>,
    /// Pivot order: kernel step -> matrix row.
    kernel_rows: Vec<usize>,
    /// Pivot order: kernel step -> (basis position, structural column).
    kernel_cols: Vec<(usize, usize)>,
    lu: KernelLu,
    etas: Vec<Eta>,
}

impl BasisFactor {
    /// Factors the basis whose position `p` holds variable `head[p]`
    /// (`head[p] >= n` denotes the logical of row `head[p] - n`).
    pub fn new(a: &Csc, head: &[usize]) -> Result<BasisFactor, Singular> {
        let m = a.rows;
        let n = a.cols;
        debug_assert_eq!(head.len(), m);
        let mut logical_row = vec![None; m];
        let mut covered = vec![false; m];
        let mut structural = Vec::new();
        for (p, &var) in head.iter().enumerate() {
            if var >= n {
                logical_row[p] = Some(var - n);
                covered[var - n] = true;
            } else {
                structural.push((p, var));
            }
        }
        let free_rows: Vec<usize> = (0..m).filter(|&r| !covered[r]).collect();
        let k = structural.len();
        debug_assert_eq!(free_rows.len(), k);

        // Local index of each uncovered row.
        let mut local_row = vec![usize::MAX; m];
        for (t, &r) in free_rows.iter().enumerate() {
            local_row[r] = t;
        }
        // Sparser columns first.
        structural.sort_by_key(|&(p, j)| {
            (
                a.col(j)
                    .filter(|&(r, _)| local_row[r] != usize::MAX)
                    .count(),
                p,
            )
        });

        let mut dense = vec![0.0; k * k];
        for (c, &(_, j)) in structural.iter().enumerate() {
            for (r, v) in a.col(j) {
                let t = local_row[r];
                if t != usize::MAX {
                    dense[t * k + c] = v;
                }
            }
        }

        let mut pivot_of_row = vec![usize::MAX; k];
        let mut step_rows = Vec::with_capacity(k);
        let mut step_cols = Vec::with_capacity(k);
        let mut singular_cols = Vec::new();
        let mut nz_cols: Vec<usize> = Vec::with_capacity(k);
        let mut col_done = vec![false; k];

        for c in 0..k {
            let mut best_abs = 0.0f64;
            for i in 0..k {
                if pivot_of_row[i] == usize::MAX {
                    best_abs = best_abs.max(dense[i * k + c].abs());
                }
            }
            if best_abs < PIVOT_ABS_TOL {
                singular_cols.push(structural[c].0);
                col_done[c] = true;
                continue;
            }
            // Threshold pivoting: among acceptable rows, prefer the sparsest.
            let mut pick = usize::MAX;
            let mut pick_count = usize::MAX;
            let mut pick_abs = 0.0;
            for i in 0..k {
                if pivot_of_row[i] != usize::MAX {
                    continue;
                }
                let v = dense[i * k + c].abs();
                if v >= PIVOT_REL_THRESHOLD * best_abs && v >= PIVOT_ABS_TOL {
                    let row = &dense[i * k..(i + 1) * k];
                    let count = (0..k).filter(|&cc| !col_done[cc] && row[cc] != 0.0).count();
                    if count < pick_count || (count == pick_count && v > pick_abs) {
                        pick = i;
                        pick_count = count;
                        pick_abs = v;
                    }
                }
            }
            let p = pick;
            let step = step_rows.len();
            pivot_of_row[p] = step;
            col_done[c] = true;
            step_rows.push(p);
            step_cols.push(c);

            let piv = dense[p * k + c];
            nz_cols.clear();
            for cc in 0..k {
                if !col_done[cc] && dense[p * k + cc] != 0.0 {
                    nz_cols.push(cc);
                }
            }
            for i in 0..k {
                if pivot_of_row[i] != usize::MAX {
                    continue;
                }
                let v = dense[i * k + c];
                if v == 0.0 {
                    continue;
                }
                let l = v / piv;
                dense[i * k + c] = l;
                for &cc in &nz_cols {
                    let u = dense[p * k + cc];
                    dense[i * k + cc] -= l * u;
                }
            }
        }

        if !singular_cols.is_empty() {
            let free: Vec<usize> = (0..k)
                .filter(|&i| pivot_of_row[i] == usize::MAX)
                .map(|i| free_rows[i])
                .collect();
            return Err(Singular {
                positions: singular_cols,
                free_rows: free,
            });
        }

        // Step index of each local column.
        let mut step_of_col = vec![0usize; k];
        for (s, &c) in step_cols.iter().enumerate() {
            step_of_col[c] = s;
        }
        let mut lu = KernelLu {
            size: k,
            diag: vec![0.0; k],
            l_cols: vec![Vec::new(); k],
            l_rows: vec![Vec::new(); k],
            u_cols: vec![Vec::new(); k],
            u_rows: vec![Vec::new(); k],
        };
        for (s, &i) in step_rows.iter().enumerate() {
            let row = &dense[i * k..(i + 1) * k];
            for (c, &v) in row.iter().enumerate() {
                if v == 0.0 {
                    continue;
                }
                let t = step_of_col[c];
                if t < s {
                    lu.l_cols[t].push((s, v));
                    lu.l_rows[s].push((t, v));
                } else if t == s {
                    lu.diag[s] = v;
                } else {
                    lu.u_cols[t].push((s, v));
                    lu.u_rows[s].push((t, v));
                }
            }
        }

        Ok(BasisFactor {
            m,
            logical_row,
            kernel_rows: step_rows.iter().map(|&i| free_rows[i]).collect(),
            kernel_cols: step_cols.iter().map(|&c| structural[c]).collect(),
            lu,
            etas: Vec::new(),
        })
    }

    pub fn num_updates(&self) -> usize {
        self.etas.len()
    }

    /// Solves `B z = rhs`; `rhs` is indexed by row, the result by position.
    pub fn ftran(&self, a: &Csc, rhs: &[f64]) -> Vec<f64> {
        let k = self.kernel_rows.len();
        let mut zk: Vec<f64> = self.kernel_rows.iter().map(|&r| rhs[r]).collect();
        self.lu.solve(&mut zk);
        let mut z = vec![0.0; self.m];
        // Logical rows: z_q = sum_K A[r,.] z_K - rhs[r].
        let mut w: Vec<f64> = rhs.iter().map(|v| -v).collect();
        for t in 0..k {
            let (p, j) = self.kernel_cols[t];
            let v = zk[t];
            z[p] = v;
            if v != 0.0 {
                for (r, coef) in a.col(j) {
                    w[r] += coef * v;
                }
            }
        }
        for (p, lr) in self.logical_row.iter().enumerate() {
            if let Some(r) = *lr {
                z[p] = w[r];
            }
        }
        for eta in &self.etas {
            let zr = z[eta.pos];
            if zr != 0.0 {
                let v = zr / eta.pivot;
                z[eta.pos] = v;
                for &(i, alpha) in &eta.others {
                    z[i] -= alpha * v;
                }
            }
        }
        z
    }

    /// Solves `B^T y = rhs`; `rhs` is indexed by position, the result by row.
    pub fn btran(&self, a: &Csc, rhs: &[f64]) -> Vec<f64> {
        let mut w = rhs.to_vec();
        for eta in self.etas.iter().rev() {
            let mut s = w[eta.pos];
            for &(i, alpha) in &eta.others {
                s -= alpha * w[i];
            }
            w[eta.pos] = s / eta.pivot;
        }
        let mut y = vec![0.0; self.m];
        for (p, lr) in self.logical_row.iter().enumerate() {
            if let Some(r) = *lr {
                y[r] = -w[p];
            }
        }
        let k = self.kernel_rows.len();
        let mut ck = vec![0.0; k];
        for t in 0..k {
            let (p, j) = self.kernel_cols[t];
            let mut s = w[p];
            for (r, coef) in a.col(j) {
                // Rows covered by logicals already have their final y.
                if y[r] != 0.0 {
                    s -= coef * y[r];
                }
            }
            ck[t] = s;
        }
        // Kernel rows have y = 0 so far, so the subtraction above only saw
        // logical-covered rows.
        self.lu.solve_transposed(&mut ck);
        for (s, &r) in self.kernel_rows.iter().enumerate() {
            y[r] = ck[s];
        }
        y
    }

    /// Records the basis change where position `pos` is replaced by a column
    /// whose ftran image is `alpha`.
    pub fn update(&mut self, pos: usize, alpha: &[f64]) {
        let others = alpha
            .iter()
            .enumerate()
            .filter(|&(i, &v)| i != pos && v != 0.0)
            .map(|(i, &v)| (i, v))
            .collect();
        self.etas.push(Eta {
            pos,
            pivot: alpha[pos],
            others,
        });
    }
}

//! Binary linear algebra over GF(2).
//!
//! [`ParityCheckMatrix`] is the sparse (Tanner graph) view used by message
//! passing; [`BitMatrix`] is a dense row-packed copy used for elimination.

use std::fmt;
use std::ops::Range;

use crate::bits::BitBlock;
use crate::error::{check_len, Error, Result};

const WORD: usize = 64;

/// Sparse binary `m x n` matrix with row and column adjacency lists.
///
/// Edges are numbered in row-major order: the entries of row `j` occupy
/// edge ids `row_ptr[j]..row_ptr[j + 1]`. Column lists carry the edge id of
/// each entry so message tables can be indexed from either side.
#[derive(Clone, PartialEq, Eq)]
pub struct ParityCheckMatrix {
    m: usize,
    n: usize,
    row_ptr: Vec<usize>,
    row_vars: Vec<usize>,
    col_ptr: Vec<usize>,
    col_checks: Vec<usize>,
    col_edges: Vec<usize>,
}

impl ParityCheckMatrix {
    /// Builds a matrix from per-check variable lists. Lists are sorted;
    /// duplicates and out-of-range indices are rejected.
    pub fn from_rows(n: usize, rows: Vec<Vec<usize>>) -> Result<Self> {
        let m = rows.len();
        let mut row_ptr = Vec::with_capacity(m + 1);
        let mut row_vars = Vec::new();
        row_ptr.push(0);
        for (j, mut row) in rows.into_iter().enumerate() {
            row.sort_unstable();
            if let Some(w) = row.windows(2).find(|w| w[0] == w[1]) {
                return Err(Error::Consistency(format!(
                    "row {j} lists variable {} twice",
                    w[0]
                )));
            }
            if let Some(&bad) = row.iter().find(|&&i| i >= n) {
                return Err(Error::Consistency(format!(
                    "row {j} references variable {bad} but n = {n}"
                )));
            }
            row_vars.extend_from_slice(&row);
            row_ptr.push(row_vars.len());
        }

        let mut col_deg = vec![0usize; n];
        for &i in &row_vars {
            col_deg[i] += 1;
        }
        let mut col_ptr = Vec::with_capacity(n + 1);
        col_ptr.push(0);
        for d in &col_deg {
            col_ptr.push(col_ptr.last().unwrap() + d);
        }
        let mut fill = col_ptr[..n].to_vec();
        let mut col_checks = vec![0; row_vars.len()];
        let mut col_edges = vec![0; row_vars.len()];
        for j in 0..m {
            for e in row_ptr[j]..row_ptr[j + 1] {
                let i = row_vars[e];
                col_checks[fill[i]] = j;
                col_edges[fill[i]] = e;
                fill[i] += 1;
            }
        }

        Ok(ParityCheckMatrix {
            m,
            n,
            row_ptr,
            row_vars,
            col_ptr,
            col_checks,
            col_edges,
        })
    }

    /// Builds a matrix from dense 0/1 rows.
    pub fn from_dense<R: AsRef<[u8]>>(n: usize, rows: &[R]) -> Result<Self> {
        let mut lists = Vec::with_capacity(rows.len());
        for r in rows {
            let r = r.as_ref();
            check_len(n, r.len())?;
            lists.push((0..n).filter(|&i| r[i] != 0).collect());
        }
        Self::from_rows(n, lists)
    }

    pub fn from_bit_matrix(d: &BitMatrix) -> Self {
        let rows = (0..d.rows())
            .map(|r| (0..d.cols()).filter(|&c| d.get(r, c)).collect())
            .collect();
        Self::from_rows(d.cols(), rows).expect("dense matrix rows are always valid")
    }

    pub fn identity(n: usize) -> Self {
        Self::from_rows(n, (0..n).map(|i| vec![i]).collect()).unwrap()
    }

    pub fn zeros(m: usize, n: usize) -> Self {
        Self::from_rows(n, vec![Vec::new(); m]).unwrap()
    }

    /// Number of checks (rows).
    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of variables (columns).
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.row_vars.len()
    }

    /// Variables adjacent to check `j`, ascending.
    pub fn row(&self, j: usize) -> &[usize] {
        &self.row_vars[self.row_ptr[j]..self.row_ptr[j + 1]]
    }

    /// Edge ids of check `j`, aligned with [`row`](Self::row).
    pub fn row_edges(&self, j: usize) -> Range<usize> {
        self.row_ptr[j]..self.row_ptr[j + 1]
    }

    /// Checks adjacent to variable `i`, ascending.
    pub fn col(&self, i: usize) -> &[usize] {
        &self.col_checks[self.col_ptr[i]..self.col_ptr[i + 1]]
    }

    /// Edge ids of variable `i`, aligned with [`col`](Self::col).
    pub fn col_edges(&self, i: usize) -> &[usize] {
        &self.col_edges[self.col_ptr[i]..self.col_ptr[i + 1]]
    }

    /// Variable at the end of edge `e`.
    #[inline]
    pub fn edge_var(&self, e: usize) -> usize {
        self.row_vars[e]
    }

    pub fn check_degree(&self, j: usize) -> usize {
        self.row_ptr[j + 1] - self.row_ptr[j]
    }

    pub fn var_degree(&self, i: usize) -> usize {
        self.col_ptr[i + 1] - self.col_ptr[i]
    }

    pub fn check_degrees(&self) -> Vec<usize> {
        (0..self.m).map(|j| self.check_degree(j)).collect()
    }

    pub fn var_degrees(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.var_degree(i)).collect()
    }

    pub fn get(&self, j: usize, i: usize) -> bool {
        self.row(j).binary_search(&i).is_ok()
    }

    /// Edge id of entry `(j, i)`, if present.
    pub fn edge(&self, j: usize, i: usize) -> Option<usize> {
        self.row(j)
            .binary_search(&i)
            .ok()
            .map(|pos| self.row_ptr[j] + pos)
    }

    /// Syndrome `H * x`.
    pub fn mul_vec(&self, x: &BitBlock) -> Result<BitBlock> {
        check_len(self.n, x.len())?;
        let mut z = BitBlock::zeros(self.m);
        for j in 0..self.m {
            let parity = self.row(j).iter().fold(false, |acc, &i| acc ^ x.get(i));
            if parity {
                z.set(j, true);
            }
        }
        Ok(z)
    }

    /// Returns the matrix whose column `p` is column `perm[p]` of `self`.
    pub fn permute_columns(&self, perm: &[usize]) -> Result<Self> {
        check_len(self.n, perm.len())?;
        let mut inverse = vec![usize::MAX; self.n];
        for (p, &c) in perm.iter().enumerate() {
            if c >= self.n || inverse[c] != usize::MAX {
                return Err(Error::InvalidParameter(
                    "column permutation is not a bijection".into(),
                ));
            }
            inverse[c] = p;
        }
        let rows = (0..self.m)
            .map(|j| self.row(j).iter().map(|&c| inverse[c]).collect())
            .collect();
        Self::from_rows(self.n, rows)
    }

    /// Vertically stacks matrices with equal column counts.
    pub fn stack(mats: &[&ParityCheckMatrix]) -> Result<Self> {
        let n = mats.first().map_or(0, |h| h.n);
        let mut rows = Vec::new();
        for h in mats {
            check_len(n, h.n)?;
            rows.extend((0..h.m).map(|j| h.row(j).to_vec()));
        }
        Self::from_rows(n, rows)
    }

    pub fn to_dense(&self) -> BitMatrix {
        let mut d = BitMatrix::zeros(self.m, self.n);
        for j in 0..self.m {
            for &i in self.row(j) {
                d.set(j, i, true);
            }
        }
        d
    }

    /// Dense copy of the columns at `cols` (in that order).
    pub fn column_submatrix(&self, cols: &[usize]) -> BitMatrix {
        let mut d = BitMatrix::zeros(self.m, cols.len());
        for (p, &c) in cols.iter().enumerate() {
            for &j in self.col(c) {
                d.set(j, p, true);
            }
        }
        d
    }

    /// Counts pairs of checks sharing two or more variables (length-4 cycles
    /// in the Tanner graph, counted once per check pair).
    pub fn four_cycle_pairs(&self) -> usize {
        let mut shared = vec![0u32; self.m];
        let mut touched = Vec::new();
        let mut pairs = 0;
        for j in 0..self.m {
            for &i in self.row(j) {
                for &other in self.col(i) {
                    if other > j {
                        if shared[other] == 0 {
                            touched.push(other);
                        }
                        shared[other] += 1;
                    }
                }
            }
            for &o in &touched {
                if shared[o] >= 2 {
                    pairs += 1;
                }
                shared[o] = 0;
            }
            touched.clear();
        }
        pairs
    }
}

impl fmt::Debug for ParityCheckMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "ParityCheckMatrix({}x{}, {} edges)",
            self.m,
            self.n,
            self.edge_count()
        )
    }
}

/// Syndrome `H * x`.
pub fn mat_vec_mul(h: &ParityCheckMatrix, x: &BitBlock) -> Result<BitBlock> {
    h.mul_vec(x)
}

/// GF(2) rank of `h`.
pub fn gf2_rank(h: &ParityCheckMatrix) -> usize {
    h.to_dense().rank()
}

/// Dense binary matrix, each row packed into 64-bit words.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    stride: usize,
    data: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let stride = cols.div_ceil(WORD);
        BitMatrix {
            rows,
            cols,
            stride,
            data: vec![0; rows * stride],
        }
    }

    pub fn identity(size: usize) -> Self {
        let mut d = Self::zeros(size, size);
        for i in 0..size {
            d.set(i, i, true);
        }
        d
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols);
        (self.data[r * self.stride + c / WORD] >> (c % WORD)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols);
        let w = &mut self.data[r * self.stride + c / WORD];
        let mask = 1u64 << (c % WORD);
        if value {
            *w |= mask;
        } else {
            *w &= !mask;
        }
    }

    fn row_words(&self, r: usize) -> &[u64] {
        &self.data[r * self.stride..(r + 1) * self.stride]
    }

    /// `row[dst] ^= row[src]`, touching only words from `from_word` on.
    fn xor_rows(&mut self, dst: usize, src: usize, from_word: usize) {
        debug_assert_ne!(dst, src);
        let s = self.stride;
        let (d, sr) = if dst < src {
            let (lo, hi) = self.data.split_at_mut(src * s);
            (&mut lo[dst * s..(dst + 1) * s], &hi[..s])
        } else {
            let (lo, hi) = self.data.split_at_mut(dst * s);
            (&mut hi[..s], &lo[src * s..(src + 1) * s])
        };
        for (a, b) in d[from_word..].iter_mut().zip(&sr[from_word..]) {
            *a ^= b;
        }
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let s = self.stride;
        for w in 0..s {
            self.data.swap(a * s + w, b * s + w);
        }
    }

    /// Rank by forward elimination on a copy.
    pub fn rank(&self) -> usize {
        let mut m = self.clone();
        let mut rank = 0;
        for c in 0..m.cols {
            if rank == m.rows {
                break;
            }
            let Some(p) = (rank..m.rows).find(|&r| m.get(r, c)) else {
                continue;
            };
            m.swap_rows(rank, p);
            let w = c / WORD;
            for r in rank + 1..m.rows {
                if m.get(r, c) {
                    m.xor_rows(r, rank, w);
                }
            }
            rank += 1;
        }
        rank
    }

    pub fn mul_vec(&self, x: &BitBlock) -> Result<BitBlock> {
        check_len(self.cols, x.len())?;
        let xw = x.words();
        Ok(BitBlock::from_bools((0..self.rows).map(|r| {
            self.row_words(r)
                .iter()
                .zip(xw)
                .fold(0u32, |acc, (a, b)| acc ^ (a & b).count_ones())
                & 1
                == 1
        })))
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &BitMatrix) -> Result<BitMatrix> {
        check_len(self.cols, rhs.rows)?;
        let mut out = BitMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                if self.get(r, k) {
                    let src = rhs.row_words(k);
                    let dst = &mut out.data[r * out.stride..(r + 1) * out.stride];
                    for (a, b) in dst.iter_mut().zip(src) {
                        *a ^= b;
                    }
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix({}x{})", self.rows, self.cols)?;
        if self.rows <= 16 && self.cols <= 64 {
            for r in 0..self.rows {
                for c in 0..self.cols {
                    write!(f, "{}", u8::from(self.get(r, c)))?;
                }
                writeln!(f)?;
            }
        }
        Ok(())
    }
}

/// Decomposition `H = A * (H' | E_m) * B` of a full-row-rank matrix.
///
/// `perm` encodes `B`: column `p` of `(H' | E_m)` is column `perm[p]` of the
/// original matrix. The last `m` entries of `perm` are the independent columns,
/// ordered so that `perm[t + r]` carries the pivot of row `r`.
#[derive(Clone, Debug)]
pub struct SystematicForm {
    pub a: BitMatrix,
    pub hprime: BitMatrix,
    pub perm: Vec<usize>,
    /// Independent column indices of the original matrix, ascending.
    pub independent_positions: Vec<usize>,
}

impl SystematicForm {
    pub fn m(&self) -> usize {
        self.a.rows()
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    /// Rebuilds the original matrix from the decomposition.
    pub fn recompose(&self) -> BitMatrix {
        let m = self.m();
        let t = self.n() - m;
        // Columns of (H' | E_m) scattered back to their original positions.
        let mut scattered = BitMatrix::zeros(m, self.n());
        for (p, &c) in self.perm.iter().enumerate() {
            for r in 0..m {
                let bit = if p < t {
                    self.hprime.get(r, p)
                } else {
                    p - t == r
                };
                if bit {
                    scattered.set(r, c, true);
                }
            }
        }
        self.a.mul(&scattered).expect("shapes agree by construction")
    }
}

/// Systematic decomposition with the default pivot order: columns are scanned
/// right to left, and each pivot is taken from the first unused row.
pub fn systematic_decompose(h: &ParityCheckMatrix) -> Result<SystematicForm> {
    let order: Vec<usize> = (0..h.n()).rev().collect();
    systematic_decompose_with_candidates(h, &order)
}

/// Systematic decomposition where pivots are only sought in `candidates`,
/// scanned in the given order.
///
/// Fails with [`Error::RankDeficient`] if fewer than `m` pivots are found.
pub fn systematic_decompose_with_candidates(
    h: &ParityCheckMatrix,
    candidates: &[usize],
) -> Result<SystematicForm> {
    let (m, n) = (h.m(), h.n());
    let mut reduced = h.to_dense();
    let mut row_used = vec![false; m];
    let mut pivot_of_row = vec![usize::MAX; m];
    let mut found = 0;

    for &c in candidates {
        if found == m {
            break;
        }
        if c >= n {
            return Err(Error::InvalidParameter(format!(
                "pivot candidate {c} out of range"
            )));
        }
        let Some(p) = (0..m).find(|&r| !row_used[r] && reduced.get(r, c)) else {
            continue;
        };
        row_used[p] = true;
        pivot_of_row[p] = c;
        found += 1;
        for r in 0..m {
            if r != p && reduced.get(r, c) {
                reduced.xor_rows(r, p, 0);
            }
        }
    }
    if found < m {
        return Err(Error::RankDeficient {
            rank: found,
            rows: m,
        });
    }

    let mut is_pivot = vec![false; n];
    for &c in &pivot_of_row {
        is_pivot[c] = true;
    }
    let mut perm: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
    let t = perm.len();
    perm.extend_from_slice(&pivot_of_row);

    let mut hprime = BitMatrix::zeros(m, t);
    for r in 0..m {
        for (p, &c) in perm[..t].iter().enumerate() {
            if reduced.get(r, c) {
                hprime.set(r, p, true);
            }
        }
    }
    // Row r of the reduced matrix has its unit entry at pivot_of_row[r], so
    // column r of A is the original column at that pivot.
    let a = h.column_submatrix(&pivot_of_row);

    let mut independent_positions = pivot_of_row;
    independent_positions.sort_unstable();
    Ok(SystematicForm {
        a,
        hprime,
        perm,
        independent_positions,
    })
}

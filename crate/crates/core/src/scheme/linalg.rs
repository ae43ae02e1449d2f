//! Direct solver for the per-step systems: banded LU with partial pivoting
//! for each curve block, and a dense Schur complement for the few junction
//! unknowns coupling the blocks.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square band matrix with `kl` sub- and `ku` super-diagonals, stored row by
/// row with `kl` extra super-diagonals of room for pivoting fill-in.
#[derive(Clone, Debug)]
pub struct Banded<T> {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    a: Vec<T>,
    piv: Vec<usize>,
    factored: bool,
}

impl<T: Scalar> Banded<T> {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self { n, kl, ku, width, a: vec![T::zero(); n * width], piv: Vec::new(), factored: false }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn pos(&self, i: usize, j: usize) -> usize {
        debug_assert!(j + self.kl >= i && j <= i + self.kl + self.ku);
        i * self.width + (j + self.kl - i)
    }

    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        assert!(self.in_band(i, j), "entry ({i}, {j}) outside band kl={} ku={}", self.kl, self.ku);
        let p = self.pos(i, j);
        self.a[p] = self.a[p] + v;
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        if self.in_band(i, j) {
            self.a[self.pos(i, j)]
        } else {
            T::zero()
        }
    }

    /// In-place LU factorization. On a zero pivot returns the failing row.
    pub fn factor(&mut self) -> std::result::Result<(), usize> {
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        self.piv = vec![0; n];
        for c in 0..n {
            let last_row = (c + kl).min(n - 1);
            let mut p = c;
            let mut best = self.a[self.pos(c, c)].abs();
            for r in c + 1..=last_row {
                let v = self.a[self.pos(r, c)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > T::zero()) || !best.is_finite() {
                return Err(c);
            }
            self.piv[c] = p;
            let last_col = (c + kl + ku).min(n - 1);
            if p != c {
                for j in c..=last_col {
                    let (pc, pp) = (self.pos(c, j), self.pos(p, j));
                    self.a.swap(pc, pp);
                }
            }
            let pivot = self.a[self.pos(c, c)];
            for r in c + 1..=last_row {
                let prc = self.pos(r, c);
                let l = self.a[prc] / pivot;
                self.a[prc] = l;
                if l == T::zero() {
                    continue;
                }
                for j in c + 1..=last_col {
                    let (prj, pcj) = (self.pos(r, j), self.pos(c, j));
                    self.a[prj] = self.a[prj] - l * self.a[pcj];
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place using the factorization.
    pub fn solve_in_place(&self, b: &mut [T]) {
        assert!(self.factored, "solve before factor");
        let (n, kl, ku) = (self.n, self.kl, self.ku);
        for c in 0..n {
            let p = self.piv[c];
            if p != c {
                b.swap(c, p);
            }
            let bc = b[c];
            if bc != T::zero() {
                for r in c + 1..=(c + kl).min(n - 1) {
                    b[r] = b[r] - self.a[self.pos(r, c)] * bc;
                }
            }
        }
        for c in (0..n).rev() {
            let mut s = b[c];
            for j in c + 1..=(c + kl + ku).min(n - 1) {
                s = s - self.a[self.pos(c, j)] * b[j];
            }
            b[c] = s / self.a[self.pos(c, c)];
        }
    }
}

/// Dense LU solve with partial pivoting; `a` is row-major `n × n`.
pub fn dense_solve<T: Scalar>(a: &mut [T], n: usize, b: &mut [T]) -> std::result::Result<(), usize> {
    for c in 0..n {
        let mut p = c;
        for r in c + 1..n {
            if a[r * n + c].abs() > a[p * n + c].abs() {
                p = r;
            }
        }
        let pivot = a[p * n + c];
        if !(pivot.abs() > T::zero()) || !pivot.is_finite() {
            return Err(c);
        }
        if p != c {
            for j in 0..n {
                a.swap(c * n + j, p * n + j);
            }
            b.swap(c, p);
        }
        for r in c + 1..n {
            let l = a[r * n + c] / pivot;
            if l == T::zero() {
                continue;
            }
            for j in c..n {
                a[r * n + j] = a[r * n + j] - l * a[c * n + j];
            }
            b[r] = b[r] - l * b[c];
        }
    }
    for c in (0..n).rev() {
        let mut s = b[c];
        for j in c + 1..n {
            s = s - a[c * n + j] * b[j];
        }
        b[c] = s / a[c * n + c];
    }
    Ok(())
}

/// Block-diagonal banded matrix bordered by a few dense rows and columns:
///
/// ```text
/// [ A_1         B_1 ]
/// [     ...     ... ]
/// [         A_m B_m ]
/// [ C_1 ... C_m  D  ]
/// ```
#[derive(Clone, Debug)]
pub struct BorderedSystem<T> {
    blocks: Vec<Banded<T>>,
    offsets: Vec<usize>,
    nb: usize,
    b: Vec<Vec<T>>,
    c: Vec<Vec<T>>,
    d: Vec<T>,
    pub rhs: Vec<T>,
}

enum Loc {
    Block(usize, usize),
    Border(usize),
}

impl<T: Scalar> BorderedSystem<T> {
    /// `block_sizes` in global order, followed by `nb` border unknowns.
    pub fn new(block_sizes: &[usize], nb: usize, kl: usize, ku: usize) -> Self {
        let mut offsets = Vec::with_capacity(block_sizes.len() + 1);
        let mut o = 0;
        for &s in block_sizes {
            offsets.push(o);
            o += s;
        }
        offsets.push(o);
        Self {
            blocks: block_sizes.iter().map(|&s| Banded::new(s, kl, ku)).collect(),
            b: block_sizes.iter().map(|&s| vec![T::zero(); s * nb]).collect(),
            c: block_sizes.iter().map(|&s| vec![T::zero(); s * nb]).collect(),
            d: vec![T::zero(); nb * nb],
            rhs: vec![T::zero(); o + nb],
            offsets,
            nb,
        }
    }

    pub fn dim(&self) -> usize {
        self.offsets[self.blocks.len()] + self.nb
    }

    #[inline]
    fn loc(&self, i: usize) -> Loc {
        let border_start = self.offsets[self.blocks.len()];
        if i >= border_start {
            return Loc::Border(i - border_start);
        }
        let blk = self.offsets.partition_point(|&o| o <= i) - 1;
        Loc::Block(blk, i - self.offsets[blk])
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: T) {
        let nb = self.nb;
        match (self.loc(i), self.loc(j)) {
            (Loc::Block(bi, li), Loc::Block(bj, lj)) => {
                assert_eq!(bi, bj, "coupling between blocks {bi} and {bj}");
                self.blocks[bi].add(li, lj, v);
            }
            (Loc::Block(bi, li), Loc::Border(k)) => {
                let e = &mut self.b[bi][li * nb + k];
                *e = *e + v;
            }
            (Loc::Border(k), Loc::Block(bj, lj)) => {
                let e = &mut self.c[bj][k * self.blocks[bj].dim() + lj];
                *e = *e + v;
            }
            (Loc::Border(k), Loc::Border(l)) => {
                let e = &mut self.d[k * nb + l];
                *e = *e + v;
            }
        }
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let nb = self.nb;
        match (self.loc(i), self.loc(j)) {
            (Loc::Block(bi, li), Loc::Block(bj, lj)) => {
                if bi == bj {
                    self.blocks[bi].get(li, lj)
                } else {
                    T::zero()
                }
            }
            (Loc::Block(bi, li), Loc::Border(k)) => self.b[bi][li * nb + k],
            (Loc::Border(k), Loc::Block(bj, lj)) => self.c[bj][k * self.blocks[bj].dim() + lj],
            (Loc::Border(k), Loc::Border(l)) => self.d[k * nb + l],
        }
    }

    /// Dense copy, row-major.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let n = self.dim();
        (0..n).map(|i| (0..n).map(|j| self.get(i, j)).collect()).collect()
    }

    /// Factors and solves, consuming the system. Returns the solution.
    pub fn solve(mut self) -> Result<Vec<T>> {
        let nb = self.nb;
        let border_start = self.offsets[self.blocks.len()];
        let mut x = self.rhs.clone();
        // Per block: y_i = A_i⁻¹ b_i and W_i = A_i⁻¹ B_i (column by column).
        let mut schur = self.d.clone();
        let mut schur_rhs: Vec<T> = x[border_start..].to_vec();
        let mut w_cols: Vec<Vec<Vec<T>>> = Vec::with_capacity(self.blocks.len());
        for (bi, blk) in self.blocks.iter_mut().enumerate() {
            let off = self.offsets[bi];
            let n = blk.dim();
            blk.factor().map_err(|r| Error::SingularMatrix { row: off + r })?;
            blk.solve_in_place(&mut x[off..off + n]);
            let mut cols = Vec::with_capacity(nb);
            for k in 0..nb {
                let mut col: Vec<T> = (0..n).map(|r| self.b[bi][r * nb + k]).collect();
                if col.iter().any(|v| *v != T::zero()) {
                    blk.solve_in_place(&mut col);
                }
                cols.push(col);
            }
            let c = &self.c[bi];
            for k in 0..nb {
                let crow = &c[k * n..(k + 1) * n];
                let mut s = T::zero();
                for r in 0..n {
                    s = s + crow[r] * x[off + r];
                }
                schur_rhs[k] = schur_rhs[k] - s;
                for (l, col) in cols.iter().enumerate() {
                    let mut s = T::zero();
                    for r in 0..n {
                        s = s + crow[r] * col[r];
                    }
                    schur[k * nb + l] = schur[k * nb + l] - s;
                }
            }
            w_cols.push(cols);
        }
        if nb > 0 {
            dense_solve(&mut schur, nb, &mut schur_rhs).map_err(|r| Error::SingularMatrix { row: border_start + r })?;
            for (bi, cols) in w_cols.iter().enumerate() {
                let off = self.offsets[bi];
                for (l, col) in cols.iter().enumerate() {
                    let z = schur_rhs[l];
                    for (r, v) in col.iter().enumerate() {
                        x[off + r] = x[off + r] - *v * z;
                    }
                }
            }
            x[border_start..].copy_from_slice(&schur_rhs);
        }
        Ok(x)
    }
}

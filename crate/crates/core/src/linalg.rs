//! Small dense linear algebra mod q, plus a bit-packed solver for F_2.
//!
//! Matrices are `Vec<Vec<u8>>` in row-major order. Sizes stay small
//! everywhere except the F_2 decomposition solver, which packs rows into
//! u64 words.

use crate::gf::PrimeField;

/// Reduced row echelon form in place. Returns the pivot column of each
/// pivot row, in order.
pub fn rref(mat: &mut [Vec<u8>], field: &PrimeField) -> Vec<usize> {
    let rows = mat.len();
    if rows == 0 {
        return Vec::new();
    }
    let cols = mat[0].len();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| mat[i][c] != 0) else {
            continue;
        };
        mat.swap(r, p);
        let inv = field.inv(mat[r][c]);
        for x in mat[r].iter_mut() {
            *x = field.mul(*x, inv);
        }
        for i in 0..rows {
            if i != r && mat[i][c] != 0 {
                let factor = mat[i][c];
                for j in 0..cols {
                    let sub = field.mul(factor, mat[r][j]);
                    mat[i][j] = field.sub(mat[i][j], sub);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(mat: &[Vec<u8>], field: &PrimeField) -> usize {
    let mut m = mat.to_vec();
    rref(&mut m, field).len()
}

/// True when the given vectors are linearly independent over F_q.
pub fn independent(vectors: &[Vec<u8>], field: &PrimeField) -> bool {
    rank(vectors, field) == vectors.len()
}

/// One solution of A x = b, if any, with free variables set to zero.
pub fn solve(a: &[Vec<u8>], b: &[u8], field: &PrimeField) -> Option<Vec<u8>> {
    let rows = a.len();
    debug_assert_eq!(rows, b.len());
    if rows == 0 {
        return Some(Vec::new());
    }
    let cols = a[0].len();
    let mut aug: Vec<Vec<u8>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            let mut r = row.clone();
            r.push(rhs);
            r
        })
        .collect();
    let pivots = rref(&mut aug, field);
    // inconsistent if a pivot lands in the rhs column
    if pivots.last() == Some(&cols) {
        return None;
    }
    let mut x = vec![0u8; cols];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = aug[row][cols];
    }
    Some(x)
}

/// Inverse of a square matrix, if invertible.
pub fn invert(mat: &[Vec<u8>], field: &PrimeField) -> Option<Vec<Vec<u8>>> {
    let n = mat.len();
    let mut aug: Vec<Vec<u8>> = mat
        .iter()
        .enumerate()
        .map(|(i, row)| {
            debug_assert_eq!(row.len(), n);
            let mut r = row.clone();
            r.extend((0..n).map(|j| u8::from(i == j)));
            r
        })
        .collect();
    let pivots = rref(&mut aug, field);
    if pivots.len() < n || pivots[..n] != (0..n).collect::<Vec<_>>()[..] {
        return None;
    }
    Some(aug.into_iter().map(|row| row[n..].to_vec()).collect())
}

/// Basis of the kernel of a single row vector w (solutions of <w,x> = 0),
/// in reduced echelon order.
pub fn kernel_of_functional(w: &[u8], field: &PrimeField) -> Vec<Vec<u8>> {
    let n = w.len();
    let Some(pivot) = (0..n).find(|&j| !w[j].is_multiple_of(field.q())) else {
        // zero functional: kernel is everything
        return (0..n)
            .map(|j| {
                let mut e = vec![0u8; n];
                e[j] = 1;
                e
            })
            .collect();
    };
    let inv = field.inv(w[pivot]);
    let mut basis = Vec::with_capacity(n - 1);
    for j in 0..n {
        if j == pivot {
            continue;
        }
        let mut v = vec![0u8; n];
        v[j] = 1;
        v[pivot] = field.neg(field.mul(inv, w[j]));
        basis.push(v);
    }
    basis
}

/// Bit-packed augmented system over F_2. Columns 0..cols are unknowns, the
/// last bit of each row is the right-hand side.
pub struct F2System {
    pub cols: usize,
    words: usize,
    rows: Vec<Vec<u64>>,
}

impl F2System {
    pub fn new(cols: usize) -> Self {
        let words = (cols + 1).div_ceil(64);
        F2System {
            cols,
            words,
            rows: Vec::new(),
        }
    }

    /// Add one equation from a dense 0/1 coefficient slice plus rhs.
    pub fn push_row_bits(&mut self, coeffs: impl Iterator<Item = bool>, rhs: bool) {
        let mut row = vec![0u64; self.words];
        for (j, bit) in coeffs.enumerate() {
            if bit {
                row[j / 64] |= 1 << (j % 64);
            }
        }
        if rhs {
            let j = self.cols;
            row[j / 64] |= 1 << (j % 64);
        }
        self.rows.push(row);
    }

    pub fn push_packed_row(&mut self, row: Vec<u64>) {
        debug_assert_eq!(row.len(), self.words);
        self.rows.push(row);
    }

    pub fn words(&self) -> usize {
        self.words
    }

    /// One solution with free variables zero, or None if inconsistent.
    pub fn solve(mut self) -> Option<Vec<bool>> {
        let nrows = self.rows.len();
        let mut pivot_of_row: Vec<usize> = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            let w = c / 64;
            let bit = 1u64 << (c % 64);
            let Some(p) = (r..nrows).find(|&i| self.rows[i][w] & bit != 0) else {
                continue;
            };
            self.rows.swap(r, p);
            let pivot_row = self.rows[r].clone();
            for (i, row) in self.rows.iter_mut().enumerate() {
                if i != r && row[w] & bit != 0 {
                    for (a, b) in row.iter_mut().zip(pivot_row.iter()) {
                        *a ^= *b;
                    }
                }
            }
            pivot_of_row.push(c);
            r += 1;
            if r == nrows {
                break;
            }
        }
        // inconsistency: a zero coefficient row with rhs 1
        let rhs_w = self.cols / 64;
        let rhs_bit = 1u64 << (self.cols % 64);
        for row in &self.rows[r..] {
            let mut nonzero = false;
            for (j, &word) in row.iter().enumerate() {
                let mut word = word;
                if j == rhs_w {
                    word &= !rhs_bit;
                }
                if word != 0 {
                    nonzero = true;
                    break;
                }
            }
            if !nonzero && row[rhs_w] & rhs_bit != 0 {
                return None;
            }
        }
        let mut x = vec![false; self.cols];
        for (row, &c) in pivot_of_row.iter().enumerate() {
            x[c] = self.rows[row][rhs_w] & rhs_bit != 0;
        }
        Some(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(q: u8) -> PrimeField {
        PrimeField::new(q).unwrap()
    }

    #[test]
    fn rank_and_independence() {
        let field = f(2);
        let vecs = vec![vec![1, 0, 1], vec![0, 1, 1], vec![1, 1, 0]];
        assert_eq!(rank(&vecs, &field), 2);
        assert!(!independent(&vecs, &field));
        assert!(independent(&vecs[..2], &field));
    }

    #[test]
    fn solve_mod3() {
        let field = f(3);
        // x + 2y = 1, 2x + y = 2  =>  x = 1, y = 0
        let a = vec![vec![1, 2], vec![2, 1]];
        let x = solve(&a, &[1, 2], &field).unwrap();
        for (row, &rhs) in a.iter().zip(&[1u8, 2]) {
            let got = row
                .iter()
                .zip(&x)
                .fold(0u8, |acc, (&c, &v)| field.add(acc, field.mul(c, v)));
            assert_eq!(got, rhs);
        }
    }

    #[test]
    fn solve_detects_inconsistency() {
        let field = f(2);
        let a = vec![vec![1, 1], vec![1, 1]];
        assert!(solve(&a, &[0, 1], &field).is_none());
    }

    #[test]
    fn invert_round_trip() {
        let field = f(5);
        let m = vec![vec![1, 2, 0], vec![0, 1, 4], vec![3, 0, 2]];
        let inv = invert(&m, &field).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0u8;
                for k in 0..3 {
                    s = field.add(s, field.mul(m[i][k], inv[k][j]));
                }
                assert_eq!(s, u8::from(i == j));
            }
        }
    }

    #[test]
    fn kernel_of_functional_spans_hyperplane() {
        let field = f(3);
        let w = vec![0, 2, 1];
        let basis = kernel_of_functional(&w, &field);
        assert_eq!(basis.len(), 2);
        assert!(independent(&basis, &field));
        for v in &basis {
            let dot = w
                .iter()
                .zip(v)
                .fold(0u8, |acc, (&a, &b)| field.add(acc, field.mul(a, b)));
            assert_eq!(dot, 0);
        }
    }

    #[test]
    fn f2_system_solves_and_rejects() {
        // x1 ^ x2 = 1, x2 ^ x3 = 0, x1 ^ x3 = 1
        let mut sys = F2System::new(3);
        sys.push_row_bits([true, true, false].into_iter(), true);
        sys.push_row_bits([false, true, true].into_iter(), false);
        sys.push_row_bits([true, false, true].into_iter(), true);
        let x = sys.solve().unwrap();
        assert!(x[0] ^ x[1]);
        assert!(!(x[1] ^ x[2]));
        assert!(x[0] ^ x[2]);

        let mut bad = F2System::new(2);
        bad.push_row_bits([true, true].into_iter(), false);
        bad.push_row_bits([true, true].into_iter(), true);
        assert!(bad.solve().is_none());
    }

    #[test]
    fn f2_system_wide() {
        // 70 unknowns, single equation
        let mut sys = F2System::new(70);
        sys.push_row_bits((0..70).map(|j| j == 69), true);
        let x = sys.solve().unwrap();
        assert!(x[69]);
        assert!(x[..69].iter().all(|&b| !b));
    }
}

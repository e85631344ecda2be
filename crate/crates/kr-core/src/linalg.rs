//! Small dense exact linear algebra (solving and rank) used by the Frobenius
//! dual-basis computation and the brute-force homology oracle.

use crate::field::{FElem, Field};

/// Rank by Gaussian elimination; consumes the rows.
pub fn rank(f: &Field, mut rows: Vec<Vec<FElem>>) -> usize {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut rk = 0;
    let mut row = 0;
    for col in 0..ncols {
        let Some(p) = (row..rows.len()).find(|&r| !f.is_zero(&rows[r][col])) else {
            continue;
        };
        rows.swap(row, p);
        let pivinv = f.inv(&rows[row][col]).unwrap();
        for r in row + 1..rows.len() {
            if f.is_zero(&rows[r][col]) {
                continue;
            }
            let factor = f.mul(&rows[r][col], &pivinv);
            for c in col..ncols {
                let t = f.mul(&factor, &rows[row][c]);
                rows[r][c] = f.sub(&rows[r][c], &t);
            }
        }
        rk += 1;
        row += 1;
        if row == rows.len() {
            break;
        }
    }
    rk
}

/// Solve A x = b for square A; None if singular.
pub fn solve(f: &Field, mut a: Vec<Vec<FElem>>, mut b: Vec<FElem>) -> Option<Vec<FElem>> {
    let n = a.len();
    for col in 0..n {
        let p = (col..n).find(|&r| !f.is_zero(&a[r][col]))?;
        a.swap(col, p);
        b.swap(col, p);
        let pivinv = f.inv(&a[col][col]).unwrap();
        for r in 0..n {
            if r == col || f.is_zero(&a[r][col]) {
                continue;
            }
            let factor = f.mul(&a[r][col], &pivinv);
            for c in col..n {
                let t = f.mul(&factor, &a[col][c]);
                a[r][c] = f.sub(&a[r][c], &t);
            }
            let t = f.mul(&factor, &b[col]);
            b[r] = f.sub(&b[r], &t);
        }
    }
    Some((0..n).map(|i| f.div(&b[i], &a[i][i])).collect())
}

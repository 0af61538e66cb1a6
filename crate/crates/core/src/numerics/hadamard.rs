//! Sylvester-type Hadamard matrices.

use crate::error::{Error, Result};

pub const MAX_ORDER_LOG2: u32 = 16;

/// A Sylvester Hadamard matrix of size `2^order_log2`.
///
/// Entries are generated on demand: `H[i][j] = (-1)^popcount(i & j)`, which
/// is the closed form of the recursion `H_{2k} = [[H_k, H_k], [H_k, -H_k]]`.
/// At the largest supported order the dense form would need 4 GiB.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HadamardMatrix {
    order_log2: u32,
}

impl HadamardMatrix {
    pub fn order_log2(&self) -> u32 {
        self.order_log2
    }

    pub fn size(&self) -> usize {
        1usize << self.order_log2
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> i8 {
        debug_assert!(row < self.size() && col < self.size());
        if (row & col).count_ones().is_multiple_of(2) {
            1
        } else {
            -1
        }
    }

    pub fn row(&self, row: usize) -> Vec<i8> {
        (0..self.size()).map(|col| self.entry(row, col)).collect()
    }

    pub fn to_dense(&self) -> Vec<Vec<i8>> {
        (0..self.size()).map(|r| self.row(r)).collect()
    }
}

pub fn sylvester_hadamard(order_log2: u32) -> Result<HadamardMatrix> {
    if order_log2 > MAX_ORDER_LOG2 {
        return Err(Error::Capacity(format!(
            "Hadamard order 2^{order_log2} exceeds 2^{MAX_ORDER_LOG2}"
        )));
    }
    Ok(HadamardMatrix { order_log2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sylvester_recursive(k: u32) -> Vec<Vec<i64>> {
        let mut h = vec![vec![1i64]];
        for _ in 0..k {
            let n = h.len();
            let mut next = vec![vec![0i64; 2 * n]; 2 * n];
            for i in 0..n {
                for j in 0..n {
                    next[i][j] = h[i][j];
                    next[i][j + n] = h[i][j];
                    next[i + n][j] = h[i][j];
                    next[i + n][j + n] = -h[i][j];
                }
            }
            h = next;
        }
        h
    }

    #[test]
    fn small_orders() {
        assert_eq!(sylvester_hadamard(0).unwrap().to_dense(), vec![vec![1]]);
        assert_eq!(sylvester_hadamard(1).unwrap().to_dense(), vec![vec![1, 1], vec![1, -1]]);
    }

    #[test]
    fn matches_recursive_construction() {
        for k in 0..=6 {
            let h = sylvester_hadamard(k).unwrap();
            let r = sylvester_recursive(k);
            for (i, row) in r.iter().enumerate() {
                for (j, &v) in row.iter().enumerate() {
                    assert_eq!(h.entry(i, j) as i64, v);
                }
            }
        }
    }

    #[test]
    fn order_eight_gram_and_agreement() {
        let h = sylvester_hadamard(3).unwrap().to_dense();
        for i in 0..8 {
            for j in 0..8 {
                let dot: i64 = (0..8).map(|c| h[i][c] as i64 * h[j][c] as i64).sum();
                assert_eq!(dot, if i == j { 8 } else { 0 });
                if i != j {
                    let agree = (0..8).filter(|&c| h[i][c] == h[j][c]).count();
                    assert_eq!(agree, 4);
                }
            }
        }
        assert!(h[0].iter().all(|&v| v == 1));
    }

    #[test]
    fn gram_is_scaled_identity_up_to_order_seven() {
        for k in 0..=7 {
            let h = sylvester_hadamard(k).unwrap();
            let n = h.size();
            for i in 0..n {
                for j in 0..n {
                    let dot: i64 = (0..n).map(|c| (h.entry(i, c) * h.entry(j, c)) as i64).sum();
                    assert_eq!(dot, if i == j { n as i64 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn largest_order_is_lazy() {
        let h = sylvester_hadamard(16).unwrap();
        assert_eq!(h.size(), 65536);
        assert_eq!(h.entry(65535, 65535), 1);
        assert_eq!(h.entry(1, 65535), -1);
        assert!(matches!(sylvester_hadamard(17), Err(Error::Capacity(_))));
    }
}

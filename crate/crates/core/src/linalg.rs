//! Exact rank and kernel computations for integer matrices, plus a thin
//! floating-point eigenvalue wrapper used as an independent cross-check.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

/// Rank of an integer matrix (given as rows) by Bareiss fraction-free elimination.
///
/// Every intermediate entry is a minor of the input, so each division is exact.
pub fn rank_fraction_free(rows: &[Vec<i128>]) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let mut a: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|row| row.iter().map(|&x| BigInt::from(x)).collect())
        .collect();
    let nrows = a.len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(p) = (rank..nrows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(rank, p);
        let (top, rest) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        let pivot = pivot_row[col].clone();
        rest.par_iter_mut().for_each(|row| {
            let factor = row[col].clone();
            for j in col + 1..ncols {
                let v = &pivot * &row[j] - &factor * &pivot_row[j];
                row[j] = v / &prev;
            }
            row[col] = BigInt::zero();
        });
        prev = pivot;
        rank += 1;
    }
    rank
}

const PRIMES: [u64; 3] = [1_000_000_007, 998_244_353, 2_305_843_009_213_693_951];

#[inline]
fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    if p >> 32 == 0 {
        a * b % p
    } else {
        ((a as u128 * b as u128) % p as u128) as u64
    }
}

fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    acc
}

/// Rank over `GF(p)`. It never exceeds the rank over the rationals.
pub fn rank_mod_p(rows: &[Vec<i128>], p: u64) -> usize {
    if rows.is_empty() {
        return 0;
    }
    let ncols = rows[0].len();
    let pi = p as i128;
    let mut a: Vec<Vec<u64>> = rows
        .iter()
        .map(|row| row.iter().map(|&x| x.rem_euclid(pi) as u64).collect())
        .collect();
    let nrows = a.len();
    let mut rank = 0;
    for col in 0..ncols {
        if rank == nrows {
            break;
        }
        let Some(piv) = (rank..nrows).find(|&i| a[i][col] != 0) else {
            continue;
        };
        a.swap(rank, piv);
        let inv = powmod(a[rank][col], p - 2, p);
        let (top, rest) = a.split_at_mut(rank + 1);
        let pivot_row = &top[rank];
        rest.par_iter_mut().for_each(|row| {
            if row[col] == 0 {
                return;
            }
            let f = mulmod(row[col], inv, p);
            for j in col..ncols {
                if pivot_row[j] != 0 {
                    let sub = mulmod(f, pivot_row[j], p);
                    row[j] = if row[j] >= sub {
                        row[j] - sub
                    } else {
                        row[j] + p - sub
                    };
                }
            }
        });
        rank += 1;
    }
    rank
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    FractionFree,
    /// Full row rank modulo a prime, which implies full row rank over the integers.
    ModularFullRank,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct RankCertificate {
    pub rank: usize,
    pub method: RankMethod,
}

/// Matrices with more entries than this go through modular elimination first.
const FRACTION_FREE_LIMIT: usize = 64 * 64;

/// Exact rank of the row set. Large inputs are first tried modulo a few primes;
/// a full-rank result there is a proof, anything else falls back to Bareiss.
pub fn exact_rank(rows: &[Vec<i128>]) -> RankCertificate {
    let n = rows.len();
    let m = rows.first().map_or(0, |r| r.len());
    if n * m > FRACTION_FREE_LIMIT {
        for &p in &PRIMES {
            if rank_mod_p(rows, p) == n {
                return RankCertificate {
                    rank: n,
                    method: RankMethod::ModularFullRank,
                };
            }
        }
    }
    RankCertificate {
        rank: rank_fraction_free(rows),
        method: RankMethod::FractionFree,
    }
}

/// Integer basis of the right kernel of a small integer matrix, via exact rational RREF.
pub fn integer_kernel(matrix: &[Vec<i128>]) -> Vec<Vec<i128>> {
    let nrows = matrix.len();
    let ncols = matrix.first().map_or(0, |r| r.len());
    let mut a: Vec<Vec<BigRational>> = matrix
        .iter()
        .map(|row| {
            row.iter()
                .map(|&x| BigRational::from_integer(BigInt::from(x)))
                .collect()
        })
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..ncols {
        if row == nrows {
            break;
        }
        let Some(p) = (row..nrows).find(|&i| !a[i][col].is_zero()) else {
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for x in a[row].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..nrows {
            if i != row && !a[i][col].is_zero() {
                let f = a[i][col].clone();
                for j in 0..ncols {
                    let d = &f * &a[row][j];
                    a[i][j] = &a[i][j] - d;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::one();
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = -a[i][f].clone();
            }
            to_primitive_integers(&v)
        })
        .collect()
}

fn to_primitive_integers(v: &[BigRational]) -> Vec<i128> {
    use num_integer::Integer;
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    ints.iter()
        .map(|x| {
            let y = if g.is_zero() { x.clone() } else { x / &g };
            i128::try_from(y).expect("kernel entry exceeds 128 bits")
        })
        .collect()
}

/// Sorted eigenvalues of a real symmetric matrix.
pub fn symmetric_eigenvalues(m: nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_agree_on_small_examples() {
        let m = vec![vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]];
        assert_eq!(rank_fraction_free(&m), 2);
        assert_eq!(rank_mod_p(&m, PRIMES[0]), 2);
        assert_eq!(rank_mod_p(&m, PRIMES[2]), 2);
        let id: Vec<Vec<i128>> = (0..5)
            .map(|i| (0..5).map(|j| (i == j) as i128).collect())
            .collect();
        assert_eq!(rank_fraction_free(&id), 5);
        assert_eq!(exact_rank(&id).rank, 5);
        assert_eq!(rank_fraction_free(&[]), 0);
    }

    #[test]
    fn fraction_free_handles_skipped_columns() {
        let m = vec![
            vec![0, 2, 4, 1],
            vec![0, 1, 2, 3],
            vec![0, 3, 6, 4],
            vec![0, 0, 0, 0],
        ];
        assert_eq!(rank_fraction_free(&m), 2);
    }

    #[test]
    fn small_prime_can_undercount_but_not_overcount() {
        let p = 7u64;
        let m = vec![vec![7, 0], vec![0, 1]];
        assert_eq!(rank_mod_p(&m, p), 1);
        assert_eq!(rank_fraction_free(&m), 2);
    }

    #[test]
    fn kernel_basis_is_annihilated() {
        let m = vec![vec![1, 1, 0, 0], vec![0, 0, 2, -2]];
        let ker = integer_kernel(&m);
        assert_eq!(ker.len(), 2);
        for v in &ker {
            for row in &m {
                assert_eq!(row.iter().zip(v).map(|(a, b)| a * b).sum::<i128>(), 0);
            }
        }
        assert_eq!(rank_fraction_free(&ker), 2);
    }

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = nalgebra::DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0, 2.0]));
        let ev = symmetric_eigenvalues(m);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[2] - 3.0).abs() < 1e-12);
    }
}

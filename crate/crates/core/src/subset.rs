//! Subsets of `[r]` encoded as bitmasks, exact binomials, the superset zeta
//! transform, and the binomial-sum identities the eigenvalue calculations rely on.
//!
//! Bit `i - 1` of a mask stands for element `i` of `[r] = {1, ..., r}`. Vectors
//! indexed by subsets are stored in increasing mask order.

use std::fmt;
use std::ops::AddAssign;
use std::sync::OnceLock;

use crate::error::{invalid, Error, Result};

/// Largest ground set supported by the matrix-free routines.
pub const MAX_R: u32 = 24;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetIndex {
    bits: u32,
    r: u32,
}

impl SubsetIndex {
    pub fn new(bits: u32, r: u32) -> Result<Self> {
        if r > MAX_R {
            return Err(invalid(format!("r = {r} exceeds {MAX_R}")));
        }
        if (bits as u64) >> r != 0 {
            return Err(invalid(format!(
                "mask {bits:#b} has elements outside [{r}]"
            )));
        }
        Ok(SubsetIndex { bits, r })
    }

    /// Builds a subset from 1-based element labels.
    pub fn from_elements(elements: &[u32], r: u32) -> Result<Self> {
        let mut bits = 0u32;
        for &e in elements {
            if e == 0 || e > r {
                return Err(invalid(format!("element {e} not in [{r}]")));
            }
            bits |= 1 << (e - 1);
        }
        SubsetIndex::new(bits, r)
    }

    pub fn empty(r: u32) -> Self {
        SubsetIndex { bits: 0, r }
    }

    pub fn full(r: u32) -> Self {
        SubsetIndex {
            bits: full_mask(r),
            r,
        }
    }

    pub fn bits(self) -> u32 {
        self.bits
    }

    pub fn r(self) -> u32 {
        self.r
    }

    pub fn cardinality(self) -> u32 {
        self.bits.count_ones()
    }

    pub fn complement(self) -> Self {
        SubsetIndex {
            bits: self.bits ^ full_mask(self.r),
            r: self.r,
        }
    }

    pub fn contains(self, element: u32) -> bool {
        element >= 1 && element <= self.r && self.bits >> (element - 1) & 1 == 1
    }

    pub fn elements(self) -> impl Iterator<Item = u32> {
        let bits = self.bits;
        (1..=self.r).filter(move |&e| bits >> (e - 1) & 1 == 1)
    }
}

impl fmt::Display for SubsetIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.elements().map(|e| e.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[inline]
pub fn full_mask(r: u32) -> u32 {
    if r >= 32 {
        u32::MAX
    } else {
        (1u32 << r) - 1
    }
}

/// Exact integer vector indexed by the subsets of `[r]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsetVector {
    r: u32,
    data: Vec<i128>,
}

impl SubsetVector {
    pub fn zeros(r: u32) -> Self {
        SubsetVector {
            r,
            data: vec![0; 1usize << r],
        }
    }

    pub fn from_vec(r: u32, data: Vec<i128>) -> Result<Self> {
        if r > MAX_R {
            return Err(invalid(format!("r = {r} exceeds {MAX_R}")));
        }
        if data.len() != 1usize << r {
            return Err(invalid(format!(
                "vector of length {} cannot be indexed by subsets of [{r}]",
                data.len()
            )));
        }
        Ok(SubsetVector { r, data })
    }

    /// Vector with `value(T)` at every subset `T`.
    pub fn from_fn(r: u32, mut value: impl FnMut(u32) -> i128) -> Self {
        SubsetVector {
            r,
            data: (0..1u32 << r).map(&mut value).collect(),
        }
    }

    pub fn indicator(r: u32, set: SubsetIndex) -> Self {
        let mut v = SubsetVector::zeros(r);
        v.data[set.bits() as usize] = 1;
        v
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[i128] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [i128] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<i128> {
        self.data
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    pub fn dot(&self, other: &SubsetVector) -> Result<i128> {
        self.data
            .iter()
            .zip(&other.data)
            .try_fold(0i128, |acc, (&a, &b)| {
                a.checked_mul(b)
                    .and_then(|p| acc.checked_add(p))
                    .ok_or(Error::Overflow("inner product"))
            })
    }

    pub fn scaled(&self, factor: i128) -> Result<SubsetVector> {
        let data = self
            .data
            .iter()
            .map(|&x| {
                x.checked_mul(factor)
                    .ok_or(Error::Overflow("vector scaling"))
            })
            .collect::<Result<_>>()?;
        Ok(SubsetVector { r: self.r, data })
    }

    pub fn sub(&self, other: &SubsetVector) -> SubsetVector {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        SubsetVector { r: self.r, data }
    }

    /// Reindexes `T -> complement(T)`.
    pub fn complemented(&self) -> SubsetVector {
        let mut data = self.data.clone();
        data.reverse();
        SubsetVector { r: self.r, data }
    }
}

/// Exact integer vector indexed by cardinality levels `0..=r`.
pub type LevelVector = Vec<i128>;

/// Pascal triangle of exact binomial coefficients up to a fixed row.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    max_n: usize,
    rows: Vec<Vec<i128>>,
}

impl BinomialTable {
    pub fn new(max_n: usize) -> Self {
        let mut rows: Vec<Vec<i128>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = vec![1i128; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        BinomialTable { max_n, rows }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// `C(n, k)`, zero outside `0 <= k <= n`. Panics if `n > max_n`.
    pub fn get(&self, n: usize, k: i64) -> i128 {
        if k < 0 || k as usize > n {
            0
        } else {
            self.rows[n][k as usize]
        }
    }
}

const TABLE_ROWS: usize = 100;

fn table() -> &'static BinomialTable {
    static TABLE: OnceLock<BinomialTable> = OnceLock::new();
    TABLE.get_or_init(|| BinomialTable::new(TABLE_ROWS))
}

/// `C(n, k)` with the convention that out-of-range `k` gives zero.
pub fn binom(n: i64, k: i64) -> Result<i128> {
    if n < 0 {
        return Err(invalid(format!("binomial with negative n = {n}")));
    }
    if k < 0 || k > n {
        return Ok(0);
    }
    if n as usize <= TABLE_ROWS {
        return Ok(table().get(n as usize, k));
    }
    let k = k.min(n - k);
    let mut acc: i128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc
            .checked_mul((n - i) as i128)
            .ok_or(Error::Overflow("binomial coefficient"))?
            / (i + 1) as i128;
    }
    Ok(acc)
}

/// `C(n, k)` for `n` known to be small and nonnegative.
#[inline]
pub(crate) fn choose(n: u32, k: i64) -> i128 {
    table().get(n as usize, k)
}

#[inline]
pub(crate) fn pairs(m: u32) -> i128 {
    let m = m as i128;
    m * (m - 1) / 2
}

/// In-place superset sums `w_U = sum over T containing U of v_T` for any additive type.
pub fn superset_sums<T: Copy + AddAssign>(xs: &mut [T]) {
    assert!(xs.len().is_power_of_two());
    let mut half = 1;
    while half < xs.len() {
        for block in xs.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (z, o) in lo.iter_mut().zip(hi.iter()) {
                *z += *o;
            }
        }
        half <<= 1;
    }
}

pub(crate) fn superset_sums_checked(xs: &mut [i128]) -> Result<()> {
    debug_assert!(xs.len().is_power_of_two());
    let mut half = 1;
    while half < xs.len() {
        for block in xs.chunks_exact_mut(2 * half) {
            let (lo, hi) = block.split_at_mut(half);
            for (z, o) in lo.iter_mut().zip(hi.iter()) {
                *z = z
                    .checked_add(*o)
                    .ok_or(Error::Overflow("superset zeta transform"))?;
            }
        }
        half <<= 1;
    }
    Ok(())
}

/// Superset zeta transform, `O(r 2^r)` additions.
pub fn zeta_superset(v: &SubsetVector) -> Result<SubsetVector> {
    let mut out = v.clone();
    superset_sums_checked(out.as_mut_slice())?;
    Ok(out)
}

/// The five binomial identities used when evaluating `M_r` on lifted vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Identity {
    /// `C(k,2) C(n,k-x) = C(n,2) C(n-2,k-x-2) + x(k-x) C(n,k-x) + C(x,2) C(n,k-x)`
    PairShift { n: i64, k: i64, x: i64 },
    /// `sum_k k C(n,k) = n 2^(n-1)`
    WeightedSum { n: i64 },
    /// Chu-Vandermonde: `sum_j C(m,j) C(n-m,k-j) = C(n,k)`
    Vandermonde { m: i64, n: i64, k: i64 },
    /// `sum_k k^2 C(n,k) = (n + n^2) 2^(n-2)`
    SquareWeightedSum { n: i64 },
    /// `sum_k C(k,2) C(n,k-x) = C(n,2) 2^(n-2) + x n 2^(n-1) + C(x,2) 2^n`
    PairShiftSum { n: i64, x: i64 },
}

impl Identity {
    /// Parses the numbered form used on the command line: `id` in `1..=5` with
    /// parameters `(n,k,x)`, `(n)`, `(m,n,k)`, `(n)`, `(n,x)` respectively.
    pub fn from_numbered(id: u8, params: &[i64]) -> Result<Identity> {
        let want = match id {
            1 | 3 => 3,
            2 | 4 => 1,
            5 => 2,
            _ => return Err(invalid(format!("identity number {id} not in 1..=5"))),
        };
        if params.len() != want {
            return Err(invalid(format!(
                "identity {id} takes {want} parameters, got {}",
                params.len()
            )));
        }
        let p = params;
        Ok(match id {
            1 => Identity::PairShift {
                n: p[0],
                k: p[1],
                x: p[2],
            },
            2 => Identity::WeightedSum { n: p[0] },
            3 => Identity::Vandermonde {
                m: p[0],
                n: p[1],
                k: p[2],
            },
            4 => Identity::SquareWeightedSum { n: p[0] },
            _ => Identity::PairShiftSum { n: p[0], x: p[1] },
        })
    }

    pub fn number(&self) -> u8 {
        match self {
            Identity::PairShift { .. } => 1,
            Identity::WeightedSum { .. } => 2,
            Identity::Vandermonde { .. } => 3,
            Identity::SquareWeightedSum { .. } => 4,
            Identity::PairShiftSum { .. } => 5,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Identity::PairShift { n, k, x } => n >= 0 && k >= 0 && x >= 0,
            Identity::WeightedSum { n } | Identity::SquareWeightedSum { n } => n >= 0,
            Identity::Vandermonde { m, n, k } => n >= 0 && m >= 0 && m <= n && k >= 0,
            Identity::PairShiftSum { n, x } => n >= 0 && x >= 0,
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "parameters outside the validity range of {self:?}"
            )))
        }
    }

    /// Both sides evaluated exactly. Sides involving `2^(n-1)` or `2^(n-2)` are
    /// multiplied through by a common power of two so that everything stays integral.
    pub fn sides(&self) -> Result<(i128, i128)> {
        self.validate()?;
        let ov = || Error::Overflow("identity evaluation");
        let pow2 = |e: i64| -> Result<i128> {
            if e >= 126 {
                Err(ov())
            } else {
                Ok(1i128 << e)
            }
        };
        match *self {
            Identity::PairShift { n, k, x } => {
                let j = k - x;
                let cnj = binom(n, j)?;
                let lhs = binom(k, 2)?.checked_mul(cnj).ok_or_else(ov)?;
                let first = if n >= 2 {
                    binom(n, 2)? * binom(n - 2, j - 2)?
                } else {
                    0
                };
                let rhs = first + (x as i128) * (j as i128) * cnj + binom(x, 2)? * cnj;
                Ok((lhs, rhs))
            }
            Identity::WeightedSum { n } => {
                let mut lhs = 0i128;
                for k in 0..=n {
                    lhs += k as i128 * binom(n, k)?;
                }
                Ok((2 * lhs, (n as i128) * pow2(n)?))
            }
            Identity::Vandermonde { m, n, k } => {
                let mut lhs = 0i128;
                for j in 0..=k {
                    lhs += binom(m, j)? * binom(n - m, k - j)?;
                }
                Ok((lhs, binom(n, k)?))
            }
            Identity::SquareWeightedSum { n } => {
                let mut lhs = 0i128;
                for k in 0..=n {
                    lhs += (k as i128) * (k as i128) * binom(n, k)?;
                }
                let n = n as i128;
                Ok((4 * lhs, (n + n * n) * pow2(n as i64)?))
            }
            Identity::PairShiftSum { n, x } => {
                // C(n, k - x) vanishes unless x <= k <= x + n.
                let mut lhs = 0i128;
                for k in x..=x + n {
                    lhs += binom(k, 2)? * binom(n, k - x)?;
                }
                let p = pow2(n)?;
                let rhs =
                    binom(n, 2)? * p + 2 * (x as i128) * (n as i128) * p + 4 * binom(x, 2)? * p;
                Ok((4 * lhs, rhs))
            }
        }
    }
}

/// Evaluates identity `id` (numbered 1 to 5) at `params` and reports whether both sides agree.
pub fn check_identity(id: u8, params: &[i64]) -> Result<bool> {
    let (lhs, rhs) = Identity::from_numbered(id, params)?.sides()?;
    Ok(lhs == rhs)
}

/// Counts of checked and failed instances from [`identity_sweep`].
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct IdentitySweep {
    pub identity: u8,
    pub checked: u64,
    pub failures: Vec<Vec<i64>>,
}

/// Runs every identity over the grid `n <= max_n`, `k <= max_k`, `x <= max_x`, `m <= n`.
pub fn identity_sweep(max_n: i64, max_k: i64, max_x: i64) -> Result<Vec<IdentitySweep>> {
    let mut out: Vec<IdentitySweep> = (1..=5)
        .map(|id| IdentitySweep {
            identity: id,
            ..Default::default()
        })
        .collect();
    let mut record = |slot: usize, params: Vec<i64>| -> Result<()> {
        let ok = check_identity(slot as u8 + 1, &params)?;
        out[slot].checked += 1;
        if !ok {
            out[slot].failures.push(params);
        }
        Ok(())
    };
    for n in 0..=max_n {
        record(1, vec![n])?;
        record(3, vec![n])?;
        for x in 0..=max_x {
            record(4, vec![n, x])?;
            for k in 0..=max_k {
                record(0, vec![n, k, x])?;
            }
        }
        for m in 0..=n {
            for k in 0..=max_k {
                record(2, vec![m, n, k])?;
            }
        }
    }
    Ok(out)
}

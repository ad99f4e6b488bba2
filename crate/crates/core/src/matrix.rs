//! The power-set matrix `M_r(S,T) = C(|S∩T|,2) + C(|S̄∩T̄|,2)`, its level quotient
//! `N_r`, the clique-edge Gram factorization and a matrix-free product.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::subset::{
    choose, full_mask, pairs, superset_sums, superset_sums_checked, LevelVector, SubsetIndex,
    SubsetVector, MAX_R,
};

pub const DEFAULT_DENSE_CAP: u32 = 12;
/// Hard ceiling for dense storage regardless of configuration (4^14 entries).
pub const MAX_DENSE_CAP: u32 = 14;

fn check_r(r: u32) -> Result<()> {
    if r > MAX_R {
        Err(invalid(format!(
            "r = {r} exceeds the supported maximum {MAX_R}"
        )))
    } else {
        Ok(())
    }
}

#[inline]
pub(crate) fn entry_bits(r: u32, s: u32, t: u32) -> i128 {
    let full = full_mask(r);
    pairs((s & t).count_ones()) + pairs((!s & !t & full).count_ones())
}

/// One entry of `M_r`, evaluated from the definition.
pub fn entry(r: u32, s: SubsetIndex, t: SubsetIndex) -> Result<i128> {
    check_r(r)?;
    if s.r() != r || t.r() != r {
        return Err(invalid(format!(
            "subsets {s} and {t} are not both subsets of [{r}]"
        )));
    }
    Ok(entry_bits(r, s.bits(), t.bits()))
}

/// Dense `2^r x 2^r` copy of `M_r`, row-major in subset-mask order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PowerSetMatrix {
    r: u32,
    entries: Vec<i128>,
}

impl PowerSetMatrix {
    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn dim(&self) -> usize {
        1usize << self.r
    }

    pub fn get(&self, s: u32, t: u32) -> i128 {
        self.entries[s as usize * self.dim() + t as usize]
    }

    pub fn row(&self, s: u32) -> &[i128] {
        let n = self.dim();
        &self.entries[s as usize * n..(s as usize + 1) * n]
    }

    pub fn entries(&self) -> &[i128] {
        &self.entries
    }

    pub fn trace(&self) -> i128 {
        (0..self.dim() as u32).map(|s| self.get(s, s)).sum()
    }

    pub fn diagonal(&self) -> Vec<i128> {
        (0..self.dim() as u32).map(|s| self.get(s, s)).collect()
    }

    pub fn mul_vec(&self, v: &SubsetVector) -> Result<SubsetVector> {
        if v.r() != self.r {
            return Err(invalid("vector and matrix sizes differ"));
        }
        let x = v.as_slice();
        let data = self
            .entries
            .par_chunks(self.dim())
            .map(|row| {
                row.iter().zip(x).try_fold(0i128, |acc, (&m, &xi)| {
                    m.checked_mul(xi)
                        .and_then(|p| acc.checked_add(p))
                        .ok_or(Error::Overflow("dense matrix-vector product"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SubsetVector::from_vec(self.r, data)
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| self.entries[i * n + j] as f64)
    }

    /// Row-major CSV; the first column holds the row subset mask and the header the column masks.
    pub fn write_csv<W: std::io::Write>(&self, mut out: W) -> Result<()> {
        let n = self.dim();
        let header: Vec<String> = (0..n).map(|t| t.to_string()).collect();
        writeln!(out, "S,{}", header.join(","))?;
        for s in 0..n {
            let row: Vec<String> = self.row(s as u32).iter().map(|x| x.to_string()).collect();
            writeln!(out, "{s},{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn header(&self) -> MatrixHeader {
        MatrixHeader {
            r: self.r,
            format: "csv-row-major",
            dim: self.dim(),
            trace: self.trace(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MatrixHeader {
    pub r: u32,
    pub format: &'static str,
    pub dim: usize,
    #[serde(serialize_with = "crate::json::exact")]
    pub trace: i128,
}

/// Materializes `M_r`; refuses when `r` is above `cap`.
pub fn build_dense(r: u32, cap: u32) -> Result<PowerSetMatrix> {
    if cap > MAX_DENSE_CAP {
        return Err(invalid(format!(
            "dense cap {cap} above the hard limit {MAX_DENSE_CAP}"
        )));
    }
    if r > cap {
        return Err(Error::Capacity(format!(
            "dense M_{r} needs 4^{r} entries; the dense cap is r <= {cap}"
        )));
    }
    let n = 1usize << r;
    let mut entries = vec![0i128; n * n];
    entries.par_chunks_mut(n).enumerate().for_each(|(s, row)| {
        for (t, slot) in row.iter_mut().enumerate() {
            *slot = entry_bits(r, s as u32, t as u32);
        }
    });
    Ok(PowerSetMatrix { r, entries })
}

/// `(K K^T v)(S) = sum over edges e ⊆ S of sum over T ⊇ e of v_T`.
fn clique_gram_apply(r: u32, v: &[i128]) -> Result<Vec<i128>> {
    let mut w = v.to_vec();
    superset_sums_checked(&mut w)?;
    // Keep only the two-element sets, stored at complemented positions so that
    // the superset sum computes the subset sum of the original.
    let full = full_mask(r) as usize;
    let mut u = vec![0i128; w.len()];
    for (e, &we) in w.iter().enumerate() {
        if e.count_ones() == 2 {
            u[e ^ full] = we;
        }
    }
    superset_sums_checked(&mut u)?;
    u.reverse();
    Ok(u)
}

/// `M_r v` without materializing `M_r`.
pub fn apply(r: u32, v: &SubsetVector) -> Result<SubsetVector> {
    check_r(r)?;
    if v.r() != r {
        return Err(invalid(format!(
            "vector is indexed by subsets of [{}], not [{r}]",
            v.r()
        )));
    }
    let x = v.as_slice();
    let (direct, mirrored) = rayon::join(
        || clique_gram_apply(r, x),
        || {
            let rev: Vec<i128> = x.iter().rev().copied().collect();
            clique_gram_apply(r, &rev)
        },
    );
    let direct = direct?;
    let mut mirrored = mirrored?;
    mirrored.reverse();
    let data = direct
        .iter()
        .zip(&mirrored)
        .map(|(a, b)| {
            a.checked_add(*b)
                .ok_or(Error::Overflow("matrix-free product"))
        })
        .collect::<Result<Vec<_>>>()?;
    SubsetVector::from_vec(r, data)
}

/// Floating-point counterpart of [`apply`], used by continuous relaxations.
pub fn apply_f64(r: u32, x: &[f64]) -> Vec<f64> {
    fn gram(r: u32, x: &[f64]) -> Vec<f64> {
        let mut w = x.to_vec();
        superset_sums(&mut w);
        let full = full_mask(r) as usize;
        let mut u = vec![0.0; w.len()];
        for (e, &we) in w.iter().enumerate() {
            if e.count_ones() == 2 {
                u[e ^ full] = we;
            }
        }
        superset_sums(&mut u);
        u.reverse();
        u
    }
    let direct = gram(r, x);
    let rev: Vec<f64> = x.iter().rev().copied().collect();
    let mut mirrored = gram(r, &rev);
    mirrored.reverse();
    direct.iter().zip(&mirrored).map(|(a, b)| a + b).collect()
}

/// `(r+1) x (r+1)` matrix of column sums of `M_r` over cardinality classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QuotientMatrix {
    pub r: u32,
    #[serde(serialize_with = "crate::json::exact_rows")]
    pub entries: Vec<Vec<i128>>,
}

impl QuotientMatrix {
    pub fn get(&self, s: usize, t: usize) -> i128 {
        self.entries[s][t]
    }

    pub fn mul_levels(&self, v: &[i128]) -> LevelVector {
        self.entries
            .iter()
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }
}

/// Closed form `N_r(s,t) = C(s,2) C(r-2,r-t) + C(r-s,2) C(r-2,t)`.
pub fn build_quotient(r: u32) -> Result<QuotientMatrix> {
    check_r(r)?;
    let ri = r as i64;
    let entries = (0..=ri)
        .map(|s| {
            (0..=ri)
                .map(|t| {
                    if r < 2 {
                        // Both C(s,2) and C(r-s,2) vanish.
                        0
                    } else {
                        choose(s as u32, 2) * choose(r - 2, ri - t)
                            + choose((ri - s) as u32, 2) * choose(r - 2, t)
                    }
                })
                .collect()
        })
        .collect();
    Ok(QuotientMatrix { r, entries })
}

/// `N_r` from its definition: `N_r(s,t) = sum over |T| = t of M_r([s], T)`.
pub fn quotient_by_enumeration(r: u32) -> Result<QuotientMatrix> {
    check_r(r)?;
    let n = r as usize;
    let mut entries = vec![vec![0i128; n + 1]; n + 1];
    for (s, row) in entries.iter_mut().enumerate() {
        let first_s = full_mask(s as u32);
        for t in 0..1u32 << r {
            row[t.count_ones() as usize] += entry_bits(r, first_s, t);
        }
    }
    Ok(QuotientMatrix { r, entries })
}

/// Lifts a level vector to the subset vector that is constant on each cardinality class.
pub fn lift(r: u32, levels: &[i128]) -> Result<SubsetVector> {
    check_r(r)?;
    if levels.len() != r as usize + 1 {
        return Err(invalid(format!(
            "level vector for r = {r} needs {} entries, got {}",
            r + 1,
            levels.len()
        )));
    }
    Ok(SubsetVector::from_fn(r, |t| {
        levels[t.count_ones() as usize]
    }))
}

/// 0/1 incidence between subsets of `[r]` and the edges of the complete graph on `[r]`.
#[derive(Clone, Debug)]
pub struct CliqueEdgeIncidence {
    r: u32,
    edges: Vec<(u32, u32)>,
}

impl CliqueEdgeIncidence {
    pub fn new(r: u32) -> Result<Self> {
        check_r(r)?;
        let mut edges = Vec::new();
        for i in 1..=r {
            for j in i + 1..=r {
                edges.push((i, j));
            }
        }
        Ok(CliqueEdgeIncidence { r, edges })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// Edges as 1-based vertex pairs, in column order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn get(&self, s: u32, edge: usize) -> bool {
        let (i, j) = self.edges[edge];
        let mask = (1u32 << (i - 1)) | (1u32 << (j - 1));
        s & mask == mask
    }

    pub fn row(&self, s: u32) -> Vec<u8> {
        (0..self.edges.len())
            .map(|e| self.get(s, e) as u8)
            .collect()
    }

    /// `K K^T` formed by multiplying out the incidence rows.
    pub fn gram(&self, cap: u32) -> Result<Vec<i128>> {
        if self.r > cap.min(MAX_DENSE_CAP) {
            return Err(Error::Capacity(format!(
                "dense Gram matrix for r = {} exceeds the dense cap {cap}",
                self.r
            )));
        }
        let n = 1usize << self.r;
        let rows: Vec<Vec<u8>> = (0..n as u32).map(|s| self.row(s)).collect();
        let mut g = vec![0i128; n * n];
        g.par_chunks_mut(n).enumerate().for_each(|(s, out)| {
            for (t, slot) in out.iter_mut().enumerate() {
                *slot = rows[s]
                    .iter()
                    .zip(&rows[t])
                    .map(|(a, b)| (a & b) as i128)
                    .sum();
            }
        });
        Ok(g)
    }

    /// `K K^T + P (K K^T) P^T` with `P` the complementation permutation.
    pub fn reconstruct(&self, cap: u32) -> Result<Vec<i128>> {
        let g = self.gram(cap)?;
        let n = 1usize << self.r;
        let full = n - 1;
        let mut out = vec![0i128; n * n];
        out.par_chunks_mut(n).enumerate().for_each(|(s, row)| {
            for (t, slot) in row.iter_mut().enumerate() {
                *slot = g[s * n + t] + g[(s ^ full) * n + (t ^ full)];
            }
        });
        Ok(out)
    }
}

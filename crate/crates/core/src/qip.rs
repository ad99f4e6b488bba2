//! The quadratic integer program
//! `t = min { v^T M_r v - v·diag(M_r) : v >= 0 integral, sum(v) = s }`
//! and the 2-guaranteed triple `[r, s, floor(r(r-1)s(s-1)/(2t)) + 1]` it yields.
//!
//! A feasible `v` is a multiset of `s` subsets, and the objective is the sum of
//! `M_r(S_i, S_j)` over ordered pairs `i != j`. Both solvers walk multisets as
//! nondecreasing sequences of subset masks.

use std::cmp::Ordering;
use std::sync::atomic::{AtomicI64, AtomicU64, Ordering as AtomicOrdering};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::matrix::{apply, apply_f64, entry_bits};
use crate::subset::{binom, full_mask, SubsetIndex, SubsetVector};

pub const DEFAULT_ENUM_BUDGET: u64 = 100_000_000;
/// Largest `r` the branch-and-bound solver accepts.
pub const MAX_QIP_R: u32 = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct QipInstance {
    pub r: u32,
    pub s: u32,
}

impl QipInstance {
    pub fn new(r: u32, s: u32) -> Result<Self> {
        if r < 2 || s < 2 {
            return Err(invalid(format!(
                "need r >= 2 and s >= 2, got r = {r}, s = {s}"
            )));
        }
        if r > MAX_QIP_R {
            return Err(invalid(format!(
                "r = {r} exceeds the solver limit {MAX_QIP_R}"
            )));
        }
        Ok(QipInstance { r, s })
    }

    /// Number of feasible vectors, `C(s + 2^r - 1, s)`, saturating.
    pub fn feasible_count(&self) -> u128 {
        let n = 1i64 << self.r;
        match binom(self.s as i64 + n - 1, self.s as i64) {
            Ok(c) => c as u128,
            Err(_) => u128::MAX,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exhaustive,
    BranchAndBound,
}

/// Symmetry used to restrict the smallest subset of a multiset.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Symmetry {
    None,
    /// Complementation `S -> S̄`.
    Complement,
    /// Complementation together with all relabelings of `[r]`.
    #[default]
    Full,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub budget: u64,
    pub symmetry: Symmetry,
    pub parallel: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            budget: DEFAULT_ENUM_BUDGET,
            symmetry: Symmetry::Full,
            parallel: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct QipSolution {
    #[serde(serialize_with = "crate::json::exact")]
    pub t: i128,
    /// Minimizer as a sorted multiset of subset masks.
    #[serde(serialize_with = "serialize_multiset")]
    pub argmin: Vec<u32>,
    pub method: Method,
    pub nodes_explored: u64,
    pub symmetry: Symmetry,
    #[serde(skip)]
    pub r: u32,
}

impl QipSolution {
    pub fn argmin_vector(&self) -> SubsetVector {
        let mut v = SubsetVector::zeros(self.r);
        for &x in &self.argmin {
            v.as_mut_slice()[x as usize] += 1;
        }
        v
    }
}

#[derive(Serialize)]
struct Cell {
    subset: u32,
    elements: String,
    count: u32,
}

fn serialize_multiset<S: Serializer>(sets: &[u32], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(run_lengths(sets).into_iter().map(|(subset, count)| Cell {
        subset,
        elements: subset_label(subset),
        count,
    }))
}

fn subset_label(mask: u32) -> String {
    let r = 32 - mask.leading_zeros();
    SubsetIndex::new(mask, r)
        .map(|s| s.to_string())
        .unwrap_or_default()
}

fn run_lengths(sorted: &[u32]) -> Vec<(u32, u32)> {
    let mut out: Vec<(u32, u32)> = Vec::new();
    for &x in sorted {
        match out.last_mut() {
            Some((y, c)) if *y == x => *c += 1,
            _ => out.push((x, 1)),
        }
    }
    out
}

/// Lexicographic order of the count vectors of two sorted multisets, indexed by subset mask.
pub fn cmp_count_vectors(a: &[u32], b: &[u32]) -> Ordering {
    let (ra, rb) = (run_lengths(a), run_lengths(b));
    for (&(ia, ca), &(ib, cb)) in ra.iter().zip(&rb) {
        if ia != ib {
            // The one with support at the smaller index is larger there.
            return if ia < ib {
                Ordering::Greater
            } else {
                Ordering::Less
            };
        }
        if ca != cb {
            return ca.cmp(&cb);
        }
    }
    ra.len().cmp(&rb.len())
}

/// `v^T M_r v - v·diag(M_r)` for a nonnegative vector, via the matrix-free product.
pub fn objective(r: u32, v: &SubsetVector) -> Result<i128> {
    if v.as_slice().iter().any(|&x| x < 0) {
        return Err(invalid("objective is defined on nonnegative vectors"));
    }
    let mv = apply(r, v)?;
    let quad = v.dot(&mv)?;
    let diag: i128 = v
        .as_slice()
        .iter()
        .enumerate()
        .map(|(s, &x)| x * entry_bits(r, s as u32, s as u32))
        .sum();
    Ok(quad - diag)
}

/// Objective of a multiset of subsets: sum of `M_r` over ordered pairs of distinct positions.
pub fn objective_multiset(r: u32, sets: &[u32]) -> i128 {
    let mut total = 0;
    for (i, &a) in sets.iter().enumerate() {
        for &b in &sets[i + 1..] {
            total += 2 * entry_bits(r, a, b);
        }
    }
    total
}

/// Allowed smallest elements of a multiset after symmetry reduction.
fn root_choices(r: u32, symmetry: Symmetry) -> Vec<u32> {
    let n = 1u32 << r;
    match symmetry {
        Symmetry::None => (0..n).collect(),
        Symmetry::Complement => (0..n).filter(|&x| x >> (r - 1) & 1 == 0).collect(),
        // Under relabeling and complementation every subset can be moved to
        // {1..j} with j <= r/2, so the orbit minimum has that form.
        Symmetry::Full => (0..=r / 2).map(full_mask).collect(),
    }
}

/// Dense `M_r` with small entries, used inside the search loops.
struct Table {
    n: usize,
    m: Vec<u16>,
}

impl Table {
    fn new(r: u32) -> Self {
        let n = 1usize << r;
        let mut m = vec![0u16; n * n];
        m.par_chunks_mut(n).enumerate().for_each(|(s, row)| {
            for (t, x) in row.iter_mut().enumerate() {
                *x = entry_bits(r, s as u32, t as u32) as u16;
            }
        });
        Table { n, m }
    }

    #[inline]
    fn get(&self, a: u32, b: u32) -> i64 {
        self.m[a as usize * self.n + b as usize] as i64
    }

    fn delta(&self, x: u32, stack: &[u32]) -> i64 {
        2 * stack.iter().map(|&y| self.get(x, y)).sum::<i64>()
    }
}

#[derive(Clone, Debug)]
struct Best {
    value: i64,
    sets: Vec<u32>,
}

impl Best {
    fn none() -> Self {
        Best {
            value: i64::MAX,
            sets: Vec::new(),
        }
    }

    fn offer(&mut self, value: i64, sets: &[u32]) {
        let better = value < self.value
            || (value == self.value && cmp_count_vectors(sets, &self.sets) == Ordering::Less);
        if better {
            self.value = value;
            self.sets = sets.to_vec();
        }
    }

    fn merge(mut self, other: Best) -> Best {
        if other.value != i64::MAX {
            self.offer(other.value, &other.sets);
        }
        self
    }
}

fn check_budget(inst: &QipInstance, budget: u64) -> Result<()> {
    let count = inst.feasible_count();
    if count > budget as u128 {
        return Err(Error::Capacity(format!(
            "r = {}, s = {} has {count} feasible vectors, above the enumeration budget {budget}; \
             use the branch-and-bound method",
            inst.r, inst.s
        )));
    }
    Ok(())
}

/// Global minimum by enumerating every multiset (up to the chosen symmetry).
///
/// Ties are broken towards the lexicographically least count vector.
pub fn solve_exhaustive(inst: QipInstance, opts: SolveOptions) -> Result<QipSolution> {
    check_budget(&inst, opts.budget)?;
    let table = Table::new(inst.r);
    let s = inst.s as usize;
    let run = |root: u32| -> (Best, u64) {
        let mut best = Best::none();
        let mut nodes = 0u64;
        let mut stack = vec![root];
        exhaustive_dfs(&table, s, 0, &mut stack, &mut best, &mut nodes);
        (best, nodes + 1)
    };
    let roots = root_choices(inst.r, opts.symmetry);
    let results: Vec<(Best, u64)> = if opts.parallel {
        roots.par_iter().map(|&x| run(x)).collect()
    } else {
        roots.iter().map(|&x| run(x)).collect()
    };
    let nodes = results.iter().map(|(_, n)| n).sum();
    let best = results
        .into_iter()
        .fold(Best::none(), |acc, (b, _)| acc.merge(b));
    Ok(QipSolution {
        t: best.value as i128,
        argmin: best.sets,
        method: Method::Exhaustive,
        nodes_explored: nodes,
        symmetry: opts.symmetry,
        r: inst.r,
    })
}

fn exhaustive_dfs(
    table: &Table,
    s: usize,
    cost: i64,
    stack: &mut Vec<u32>,
    best: &mut Best,
    nodes: &mut u64,
) {
    if stack.len() == s {
        best.offer(cost, stack);
        return;
    }
    let start = *stack.last().expect("stack holds the root");
    for x in start..table.n as u32 {
        *nodes += 1;
        let d = table.delta(x, stack);
        stack.push(x);
        exhaustive_dfs(table, s, cost + d, stack, best, nodes);
        stack.pop();
    }
}

/// Iterations of the Frank-Wolfe relaxation solver per node.
const RELAX_ITERS: usize = 40;

/// Lower bound for completing `stack` with `k` more subsets, all `>= start`.
///
/// Minimizes the convex relaxation `2 c·w + w^T M w - d·w` over the scaled simplex
/// `{w >= 0, sum w = k, supp w >= start}`, where `c = M v_stack` and `d = diag M`.
/// It agrees with the true completion cost on integral points and is convex because
/// `M_r` is PSD, so the Frank-Wolfe duality gap gives a valid bound at every iterate.
fn relaxation_bound(r: u32, table: &Table, stack: &[u32], start: u32, k: u32) -> Option<f64> {
    let n = table.n;
    let kf = k as f64;
    let mut c = vec![0.0f64; n];
    for &y in stack {
        for (x, cx) in c.iter_mut().enumerate() {
            *cx += table.get(x as u32, y) as f64;
        }
    }
    let d: Vec<f64> = (0..n)
        .map(|x| table.get(x as u32, x as u32) as f64)
        .collect();
    let start = start as usize;
    let mut w = vec![0.0f64; n];
    // Start at the vertex with the smallest linear cost.
    let i0 = (start..n).min_by(|&a, &b| (2.0 * c[a] - d[a]).total_cmp(&(2.0 * c[b] - d[b])))?;
    w[i0] = kf;
    let mut mw = apply_f64(r, &w);
    let mut lower = f64::NEG_INFINITY;
    for _ in 0..RELAX_ITERS {
        let value: f64 = (0..n).map(|i| w[i] * (2.0 * c[i] + mw[i] - d[i])).sum();
        let grad: Vec<f64> = (0..n).map(|i| 2.0 * c[i] + 2.0 * mw[i] - d[i]).collect();
        let j = (start..n).min_by(|&a, &b| grad[a].total_cmp(&grad[b]))?;
        let gw: f64 = (0..n).map(|i| grad[i] * w[i]).sum();
        let gap = gw - kf * grad[j];
        if !value.is_finite() || !gap.is_finite() {
            return None;
        }
        lower = lower.max(value - gap);
        if gap <= 1e-9 * (1.0 + value.abs()) {
            break;
        }
        let mut dir: Vec<f64> = w.iter().map(|&x| -x).collect();
        dir[j] += kf;
        let md = apply_f64(r, &dir);
        let curv: f64 = dir.iter().zip(&md).map(|(a, b)| a * b).sum();
        let slope: f64 = dir.iter().zip(&grad).map(|(a, b)| a * b).sum();
        let gamma = if curv > 0.0 {
            (-slope / (2.0 * curv)).clamp(0.0, 1.0)
        } else {
            1.0
        };
        for i in 0..n {
            w[i] += gamma * dir[i];
            mw[i] += gamma * md[i];
        }
    }
    lower.is_finite().then_some(lower)
}

struct Bnb<'a> {
    r: u32,
    s: usize,
    table: &'a Table,
    incumbent: &'a AtomicI64,
    nodes: &'a AtomicU64,
}

impl Bnb<'_> {
    fn bound(&self, stack: &[u32], cost: i64) -> i64 {
        let k = (self.s - stack.len()) as u32;
        if k == 0 {
            return cost;
        }
        let start = *stack.last().expect("nonempty stack");
        // Entries of M_r are nonnegative, so the cheapest cross term is a bound on its own.
        let min_cross = (start..self.table.n as u32)
            .map(|x| self.table.delta(x, stack))
            .min()
            .unwrap_or(0);
        let trivial = cost + k as i64 * min_cross;
        let relaxed = relaxation_bound(self.r, self.table, stack, start, k)
            .map(|b| cost + (b - 1e-6 * (1.0 + b.abs())).ceil() as i64)
            .unwrap_or(i64::MIN);
        trivial.max(relaxed)
    }

    fn dfs(&self, stack: &mut Vec<u32>, cost: i64, best: &mut Best) {
        self.nodes.fetch_add(1, AtomicOrdering::Relaxed);
        if stack.len() == self.s {
            self.incumbent.fetch_min(cost, AtomicOrdering::Relaxed);
            best.offer(cost, stack);
            return;
        }
        // Strict comparison keeps every optimal leaf reachable, so the
        // tie-break matches the exhaustive solver.
        if self.bound(stack, cost) > self.incumbent.load(AtomicOrdering::Relaxed) {
            return;
        }
        let start = *stack.last().expect("nonempty stack");
        for x in start..self.table.n as u32 {
            let d = self.table.delta(x, stack);
            if cost + d > self.incumbent.load(AtomicOrdering::Relaxed) {
                continue;
            }
            stack.push(x);
            self.dfs(stack, cost + d, best);
            stack.pop();
        }
    }
}

/// Greedy completion from `root`, used as the initial incumbent.
fn greedy(table: &Table, s: usize, root: u32) -> i64 {
    let mut stack = vec![root];
    let mut cost = 0;
    while stack.len() < s {
        let start = *stack.last().unwrap();
        let (x, d) = (start..table.n as u32)
            .map(|x| (x, table.delta(x, &stack)))
            .min_by_key(|&(_, d)| d)
            .unwrap();
        cost += d;
        stack.push(x);
    }
    cost
}

/// Branch and bound with convex-relaxation bounds. Returns the same `t` and
/// argmin as [`solve_exhaustive`] under the same symmetry setting.
pub fn solve_bnb(inst: QipInstance, opts: SolveOptions) -> Result<QipSolution> {
    let table = Table::new(inst.r);
    let s = inst.s as usize;
    let roots = root_choices(inst.r, opts.symmetry);
    let start_ub = roots
        .iter()
        .map(|&x| greedy(&table, s, x))
        .min()
        .unwrap_or(i64::MAX);
    let incumbent = AtomicI64::new(start_ub);
    let nodes = AtomicU64::new(0);
    let search = Bnb {
        r: inst.r,
        s,
        table: &table,
        incumbent: &incumbent,
        nodes: &nodes,
    };
    let run = |root: u32| -> Best {
        let mut best = Best::none();
        let mut stack = vec![root];
        search.dfs(&mut stack, 0, &mut best);
        best
    };
    let results: Vec<Best> = if opts.parallel {
        roots.par_iter().map(|&x| run(x)).collect()
    } else {
        roots.iter().map(|&x| run(x)).collect()
    };
    let best = results.into_iter().fold(Best::none(), Best::merge);
    if best.value == i64::MAX {
        return Err(Error::Integrity(
            "branch and bound found no feasible point".into(),
        ));
    }
    Ok(QipSolution {
        t: best.value as i128,
        argmin: best.sets,
        method: Method::BranchAndBound,
        nodes_explored: nodes.load(AtomicOrdering::Relaxed),
        symmetry: opts.symmetry,
        r: inst.r,
    })
}

/// Third coordinate of the triple; `None` when `t = 0` and the bound is vacuous.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GuaranteedTriple {
    pub r: u32,
    pub s: u32,
    #[serde(serialize_with = "serialize_third")]
    pub third: Option<u128>,
}

fn serialize_third<S: Serializer>(x: &Option<u128>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => match u64::try_from(*v) {
            Ok(small) => s.serialize_u64(small),
            Err(_) => s.serialize_str(&v.to_string()),
        },
        None => s.serialize_str("unbounded"),
    }
}

pub fn guaranteed_triple_from_t(r: u32, s: u32, t: i128) -> GuaranteedTriple {
    let third = (t > 0).then(|| {
        let num = (r as u128) * (r as u128 - 1) * (s as u128) * (s as u128 - 1);
        num / (2 * t as u128) + 1
    });
    GuaranteedTriple { r, s, third }
}

pub fn guaranteed_triple(inst: QipInstance, sol: &QipSolution) -> GuaranteedTriple {
    guaranteed_triple_from_t(inst.r, inst.s, sol.t)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn serial(symmetry: Symmetry) -> SolveOptions {
        SolveOptions {
            symmetry,
            parallel: false,
            ..Default::default()
        }
    }

    #[test]
    fn objective_examples() {
        for r in 2..=5u32 {
            for s in 2..=4i128 {
                let v = SubsetVector::from_fn(r, |t| if t == 0 { s } else { 0 });
                let cr2 = (r * (r - 1) / 2) as i128;
                assert_eq!(objective(r, &v).unwrap(), s * (s - 1) * cr2);
            }
        }
        let v = SubsetVector::from_vec(2, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(objective(2, &v).unwrap(), 0);
        assert_eq!(objective(3, &SubsetVector::zeros(3)).unwrap(), 0);
        let neg = SubsetVector::from_vec(2, vec![0, -1, 1, 0]).unwrap();
        assert!(objective(2, &neg).is_err());
    }

    #[test]
    fn multiset_objective_matches_vector_objective() {
        let sets = [0u32, 3, 3, 5, 7];
        let mut v = SubsetVector::zeros(3);
        for &x in &sets {
            v.as_mut_slice()[x as usize] += 1;
        }
        assert_eq!(objective_multiset(3, &sets), objective(3, &v).unwrap());
    }

    #[test]
    fn instance_validation() {
        assert!(QipInstance::new(1, 3).is_err());
        assert!(QipInstance::new(3, 1).is_err());
        assert!(QipInstance::new(13, 2).is_err());
        assert_eq!(QipInstance::new(2, 2).unwrap().feasible_count(), 10);
    }

    #[test]
    fn small_instances() {
        let inst = QipInstance::new(2, 2).unwrap();
        let sol = solve_exhaustive(inst, serial(Symmetry::None)).unwrap();
        assert_eq!(sol.t, 0);
        assert_eq!(objective(2, &sol.argmin_vector()).unwrap(), 0);
        assert_eq!(guaranteed_triple(inst, &sol).third, None);
        let sol3 =
            solve_exhaustive(QipInstance::new(3, 2).unwrap(), serial(Symmetry::None)).unwrap();
        assert_eq!(sol3.t, 0);
    }

    #[test]
    fn budget_is_enforced() {
        let inst = QipInstance::new(4, 4).unwrap();
        let opts = SolveOptions {
            budget: 100,
            ..Default::default()
        };
        assert!(matches!(
            solve_exhaustive(inst, opts),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn triple_formula() {
        assert_eq!(guaranteed_triple_from_t(3, 7, 3).third, Some(43));
        assert_eq!(guaranteed_triple_from_t(2, 2, 0).third, None);
        let json = serde_json::to_string(&guaranteed_triple_from_t(2, 2, 0)).unwrap();
        assert_eq!(json, r#"{"r":2,"s":2,"third":"unbounded"}"#);
    }

    #[test]
    fn count_vector_order() {
        // (0,0,1,1) < (0,0,2,0) < (0,1,1,0)
        assert_eq!(cmp_count_vectors(&[2, 3], &[2, 2]), Ordering::Less);
        assert_eq!(cmp_count_vectors(&[2, 2], &[1, 2]), Ordering::Less);
        assert_eq!(cmp_count_vectors(&[1, 2], &[1, 2]), Ordering::Equal);
    }

    #[test]
    fn bnb_matches_exhaustive_small() {
        for (r, s) in [(2, 2), (2, 5), (3, 4), (4, 3)] {
            let inst = QipInstance::new(r, s).unwrap();
            for sym in [Symmetry::None, Symmetry::Full] {
                let a = solve_exhaustive(inst, serial(sym)).unwrap();
                let b = solve_bnb(inst, serial(sym)).unwrap();
                assert_eq!((a.t, &a.argmin), (b.t, &b.argmin), "r={r} s={s} {sym:?}");
            }
        }
    }
}

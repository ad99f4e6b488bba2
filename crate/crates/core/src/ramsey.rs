//! Exhaustive decision of the c-guaranteed property on small grids.
//!
//! A grid `[a_1] x ... x [a_d]` is c-guaranteed when every c-coloring contains a
//! monochromatic box `{x_1,y_1} x ... x {x_d,y_d}`. Cells are stored row-major with
//! the last axis fastest; a *line* is a run of cells along the last axis, and each
//! line is kept as one bitset per color so that box detection is an AND over the
//! `2^(d-1)` corner lines followed by a popcount.
//!
//! The search assigns whole lines in row-major order. Colorings are ordered as
//! base-c numbers with the first cell most significant, so the first counterexample
//! reached is the smallest one in that order.

use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Default bound on `c^(number of cells)`.
pub const DEFAULT_STATE_CAP: u128 = 1 << 30;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct GridSpec {
    pub dims: Vec<u32>,
    pub colors: u32,
}

impl GridSpec {
    pub fn new(dims: Vec<u32>, colors: u32) -> Result<Self> {
        if dims.is_empty() {
            return Err(invalid("a grid needs at least one axis"));
        }
        if dims.contains(&0) {
            return Err(invalid(format!(
                "grid dimensions must be >= 1, got {dims:?}"
            )));
        }
        if colors == 0 || colors > 255 {
            return Err(invalid(format!(
                "number of colors must be in 1..=255, got {colors}"
            )));
        }
        Ok(GridSpec { dims, colors })
    }

    pub fn d(&self) -> usize {
        self.dims.len()
    }

    pub fn cells(&self) -> usize {
        self.dims.iter().map(|&a| a as usize).product()
    }

    pub fn line_len(&self) -> usize {
        *self.dims.last().unwrap() as usize
    }

    pub fn lines(&self) -> usize {
        self.cells() / self.line_len()
    }

    /// `c^cells`, saturating at `u128::MAX`.
    pub fn state_count(&self) -> u128 {
        let mut acc: u128 = 1;
        for _ in 0..self.cells() {
            acc = acc.saturating_mul(self.colors as u128);
        }
        acc
    }

    fn check_cap(&self, cap: u128) -> Result<()> {
        let states = self.state_count();
        if states > cap {
            return Err(Error::Capacity(format!(
                "{} colorings of the {:?} grid exceed the enumeration cap {cap}",
                if states == u128::MAX {
                    "too many".to_string()
                } else {
                    states.to_string()
                },
                self.dims
            )));
        }
        if self.line_len() > 64 {
            return Err(Error::Capacity(
                "lines longer than 64 cells are not supported".into(),
            ));
        }
        Ok(())
    }

    /// Multi-index (over the first `d-1` axes) of line `p`.
    fn line_coords(&self, mut p: usize) -> Vec<u32> {
        let axes = &self.dims[..self.d() - 1];
        let mut out = vec![0; axes.len()];
        for i in (0..axes.len()).rev() {
            out[i] = (p % axes[i] as usize) as u32;
            p /= axes[i] as usize;
        }
        out
    }

    fn line_index(&self, coords: &[u32]) -> usize {
        coords
            .iter()
            .zip(&self.dims)
            .fold(0, |acc, (&x, &a)| acc * a as usize + x as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridColoring {
    pub spec: GridSpec,
    pub cells: Vec<u8>,
}

impl Serialize for GridColoring {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        // One row per line along the last axis.
        s.collect_seq(self.cells.chunks(self.spec.line_len()))
    }
}

impl GridColoring {
    pub fn new(spec: GridSpec, cells: Vec<u8>) -> Result<Self> {
        if cells.len() != spec.cells() {
            return Err(invalid(format!(
                "coloring has {} cells, grid {:?} has {}",
                cells.len(),
                spec.dims,
                spec.cells()
            )));
        }
        if cells.iter().any(|&c| c as u32 >= spec.colors) {
            return Err(invalid(format!(
                "a cell uses a color outside [0, {})",
                spec.colors
            )));
        }
        Ok(GridColoring { spec, cells })
    }

    /// Coloring number `idx` in ascending base-c order, first cell most significant.
    pub fn from_index(spec: GridSpec, mut idx: u128) -> Self {
        let c = spec.colors as u128;
        let mut cells = vec![0u8; spec.cells()];
        for cell in cells.iter_mut().rev() {
            *cell = (idx % c) as u8;
            idx /= c;
        }
        GridColoring { spec, cells }
    }

    pub fn get(&self, coords: &[u32]) -> u8 {
        let idx = coords
            .iter()
            .zip(&self.spec.dims)
            .fold(0usize, |acc, (&x, &a)| acc * a as usize + x as usize);
        self.cells[idx]
    }

    fn line_bitsets(&self) -> Vec<Vec<u64>> {
        let l = self.spec.line_len();
        self.cells
            .chunks(l)
            .map(|line| color_bits(line, self.spec.colors))
            .collect()
    }
}

fn color_bits(line: &[u8], colors: u32) -> Vec<u64> {
    let mut bits = vec![0u64; colors as usize];
    for (j, &col) in line.iter().enumerate() {
        bits[col as usize] |= 1 << j;
    }
    bits
}

/// A monochromatic box: one `(x, y)` pair per axis, 1-based with `x < y`, plus its color.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonoBox {
    pub pairs: Vec<(u32, u32)>,
    pub color: u8,
}

/// All choices of one pair per axis for the first `d-1` axes, in lexicographic order.
fn pair_tuples(axes: &[u32]) -> Vec<Vec<(u32, u32)>> {
    let mut out = vec![Vec::new()];
    for &a in axes {
        let mut next = Vec::new();
        for prefix in &out {
            for x in 0..a {
                for y in x + 1..a {
                    let mut t = prefix.clone();
                    t.push((x, y));
                    next.push(t);
                }
            }
        }
        out = next;
    }
    out
}

/// Finds the lexicographically first monochromatic box, if any.
pub fn find_mono_box(coloring: &GridColoring) -> Option<MonoBox> {
    let spec = &coloring.spec;
    let d = spec.d();
    let bits = coloring.line_bitsets();
    for tuple in pair_tuples(&spec.dims[..d - 1]) {
        let mut hit: Option<(u32, u32, u8)> = None;
        for col in 0..spec.colors as usize {
            let mut acc = u64::MAX;
            for corner in 0..1usize << (d - 1) {
                let coords: Vec<u32> = tuple
                    .iter()
                    .enumerate()
                    .map(|(i, &(x, y))| if corner >> i & 1 == 0 { x } else { y })
                    .collect();
                acc &= bits[spec.line_index(&coords)][col];
            }
            if acc.count_ones() >= 2 {
                let lo = acc.trailing_zeros();
                let hi = (acc & (acc - 1)).trailing_zeros();
                if hit.is_none_or(|(a, b, _)| (lo, hi) < (a, b)) {
                    hit = Some((lo, hi, col as u8));
                }
            }
        }
        if let Some((lo, hi, color)) = hit {
            let mut pairs: Vec<(u32, u32)> = tuple.iter().map(|&(x, y)| (x + 1, y + 1)).collect();
            pairs.push((lo + 1, hi + 1));
            return Some(MonoBox { pairs, color });
        }
    }
    None
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SearchOptions {
    /// Restrict to colorings that are lexicographically least under axis
    /// permutations and color relabeling.
    pub symmetry: bool,
    pub cap: u128,
}

impl SearchOptions {
    pub fn new(symmetry: bool) -> Self {
        SearchOptions {
            symmetry,
            cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct GuaranteeVerdict {
    pub dims: Vec<u32>,
    pub colors: u32,
    pub guaranteed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<GridColoring>,
    /// Colorings accounted for: leaves visited plus subtrees cut because a box was
    /// already present. Without symmetry reduction this equals `c^cells` whenever
    /// the grid is guaranteed.
    #[serde(serialize_with = "ser_u128")]
    pub checked: u128,
    #[serde(serialize_with = "ser_u128")]
    pub total_colorings: u128,
    pub symmetry_reductions: Vec<String>,
}

fn ser_u128<S: Serializer>(x: &u128, s: S) -> std::result::Result<S::Ok, S::Error> {
    match u64::try_from(*x) {
        Ok(v) => s.serialize_u64(v),
        Err(_) => s.serialize_str(&x.to_string()),
    }
}

struct Search<'a> {
    spec: &'a GridSpec,
    symmetry: bool,
    /// `colors^(cells after line p)` for each line p.
    tail_weight: Vec<u128>,
    /// For each line, the strictly-smaller multi-indices paired with it, as line
    /// index lists of the other `2^(d-1) - 1` corners.
    corner_sets: Vec<Vec<Vec<usize>>>,
    line_values: Vec<Vec<u8>>,
    abort_after: &'a AtomicUsize,
}

struct Partition {
    covered: u128,
    witness: Option<Vec<u8>>,
}

impl<'a> Search<'a> {
    fn new(spec: &'a GridSpec, symmetry: bool, abort_after: &'a AtomicUsize) -> Self {
        let lines = spec.lines();
        let l = spec.line_len();
        let c = spec.colors as u128;
        let tail_weight = (0..lines)
            .map(|p| {
                let rest = (lines - p - 1) * l;
                (0..rest).fold(1u128, |acc, _| acc.saturating_mul(c))
            })
            .collect();
        let d = spec.d();
        let corner_sets = (0..lines)
            .map(|p| {
                let coords = spec.line_coords(p);
                let mut sets = Vec::new();
                // Every q with q_i < p_i on each of the first d-1 axes.
                let ranges: Vec<u32> = coords.clone();
                let count: usize = ranges.iter().map(|&x| x as usize).product();
                for mut k in 0..count {
                    let mut q = vec![0u32; d - 1];
                    for i in (0..d - 1).rev() {
                        q[i] = (k % ranges[i] as usize) as u32;
                        k /= ranges[i] as usize;
                    }
                    let corners: Vec<usize> = (1..1usize << (d - 1))
                        .map(|mask| {
                            let cc: Vec<u32> = (0..d - 1)
                                .map(|i| if mask >> i & 1 == 1 { q[i] } else { coords[i] })
                                .collect();
                            spec.line_index(&cc)
                        })
                        .collect();
                    sets.push(corners);
                }
                sets
            })
            .collect();
        let n_values = (0..l).fold(1usize, |acc, _| acc * spec.colors as usize);
        let line_values = (0..n_values)
            .map(|mut v| {
                let mut digits = vec![0u8; l];
                for digit in digits.iter_mut().rev() {
                    *digit = (v % spec.colors as usize) as u8;
                    v /= spec.colors as usize;
                }
                digits
            })
            .collect();
        Search {
            spec,
            symmetry,
            tail_weight,
            corner_sets,
            line_values,
            abort_after,
        }
    }

    fn line_creates_box(&self, p: usize, bits: &[Vec<u64>]) -> bool {
        let mine = &bits[p];
        if self.spec.d() == 1 {
            return mine.iter().any(|b| b.count_ones() >= 2);
        }
        self.corner_sets[p].iter().any(|corners| {
            mine.iter().enumerate().any(|(col, &b)| {
                let acc = corners.iter().fold(b, |acc, &q| acc & bits[q][col]);
                acc.count_ones() >= 2
            })
        })
    }

    /// Checks the symmetry-breaking constraints on the first `assigned` cells.
    /// Returns false only when some constraint is already violated.
    fn symmetry_ok(&self, cells: &[u8], assigned: usize) -> bool {
        // Colors first appear in increasing order.
        let mut next_new = 0u8;
        for &c in &cells[..assigned] {
            if c > next_new {
                return false;
            }
            if c == next_new {
                next_new = next_new.saturating_add(1);
            }
        }
        // Adjacent slices along every axis are lexicographically ordered.
        let dims = &self.spec.dims;
        let mut stride = 1usize;
        let mut strides = vec![0usize; dims.len()];
        for k in (0..dims.len()).rev() {
            strides[k] = stride;
            stride *= dims[k] as usize;
        }
        let n = cells.len();
        for k in 0..dims.len() {
            let a = dims[k] as usize;
            let sk = strides[k];
            for i in 0..a.saturating_sub(1) {
                // Cells with coordinate k = i, in row-major order, paired with k = i + 1.
                'walk: for idx in 0..n {
                    if (idx / sk) % a != i {
                        continue;
                    }
                    let partner = idx + sk;
                    if partner >= assigned {
                        break 'walk;
                    }
                    match cells[idx].cmp(&cells[partner]) {
                        std::cmp::Ordering::Less => break 'walk,
                        std::cmp::Ordering::Greater => return false,
                        std::cmp::Ordering::Equal => {}
                    }
                }
            }
        }
        true
    }

    fn abort(&self, part: usize) -> bool {
        self.abort_after.load(Ordering::Relaxed) < part
    }

    fn run_partition(&self, part: usize) -> Partition {
        let lines = self.spec.lines();
        let l = self.spec.line_len();
        let mut cells = vec![0u8; self.spec.cells()];
        let mut bits: Vec<Vec<u64>> = vec![vec![0; self.spec.colors as usize]; lines];
        let mut covered = 0u128;
        let first = &self.line_values[part];
        cells[..l].copy_from_slice(first);
        bits[0] = color_bits(first, self.spec.colors);
        if self.symmetry && !self.symmetry_ok(&cells, l) {
            return Partition {
                covered: 0,
                witness: None,
            };
        }
        if self.line_creates_box(0, &bits) {
            return Partition {
                covered: self.tail_weight[0],
                witness: None,
            };
        }
        if lines == 1 {
            return Partition {
                covered: 1,
                witness: Some(cells),
            };
        }
        // Iterative DFS over lines 1..lines; choice[p] is the next value to try.
        let mut choice = vec![0usize; lines];
        let mut p = 1;
        loop {
            if self.abort(part) {
                return Partition {
                    covered,
                    witness: None,
                };
            }
            if choice[p] == self.line_values.len() {
                choice[p] = 0;
                p -= 1;
                if p == 0 {
                    return Partition {
                        covered,
                        witness: None,
                    };
                }
                continue;
            }
            let value = &self.line_values[choice[p]];
            choice[p] += 1;
            cells[p * l..(p + 1) * l].copy_from_slice(value);
            bits[p] = color_bits(value, self.spec.colors);
            if self.symmetry && !self.symmetry_ok(&cells, (p + 1) * l) {
                continue;
            }
            if self.line_creates_box(p, &bits) {
                covered += self.tail_weight[p];
                continue;
            }
            if p + 1 == lines {
                covered += 1;
                return Partition {
                    covered,
                    witness: Some(cells),
                };
            }
            p += 1;
        }
    }
}

/// Decides whether every coloring of the grid contains a monochromatic box.
pub fn is_guaranteed(spec: &GridSpec, opts: SearchOptions) -> Result<GuaranteeVerdict> {
    let cap = if opts.cap == 0 {
        DEFAULT_STATE_CAP
    } else {
        opts.cap
    };
    spec.check_cap(cap)?;
    let abort_after = AtomicUsize::new(usize::MAX);
    let search = Search::new(spec, opts.symmetry, &abort_after);
    let parts: Vec<Partition> = (0..search.line_values.len())
        .into_par_iter()
        .map(|part| {
            let res = search.run_partition(part);
            if res.witness.is_some() {
                abort_after.fetch_min(part, Ordering::Relaxed);
            }
            res
        })
        .collect();
    let first_hit = parts.iter().position(|p| p.witness.is_some());
    let upto = first_hit.map_or(parts.len(), |i| i + 1);
    let checked: u128 = parts[..upto].iter().map(|p| p.covered).sum();
    let witness = first_hit.map(|i| GridColoring {
        spec: spec.clone(),
        cells: parts[i].witness.clone().expect("witness present"),
    });
    let symmetry_reductions = if opts.symmetry {
        vec![
            "color relabeling: colors first appear in increasing order".to_string(),
            "slice permutations: adjacent slices along every axis in lexicographic order"
                .to_string(),
        ]
    } else {
        Vec::new()
    };
    Ok(GuaranteeVerdict {
        dims: spec.dims.clone(),
        colors: spec.colors,
        guaranteed: witness.is_none(),
        witness,
        checked,
        total_colorings: spec.state_count(),
        symmetry_reductions,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    Enumerated,
    /// A coordinatewise-smaller tuple is guaranteed.
    ImpliedUp,
    /// A coordinatewise-larger tuple has a box-free coloring.
    ImpliedDown,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanEntry {
    pub dims: Vec<u32>,
    pub guaranteed: bool,
    pub decision: Decision,
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanReport {
    pub colors: u32,
    pub d: usize,
    pub max: Vec<u32>,
    pub minimal: Vec<Vec<u32>>,
    pub entries: Vec<ScanEntry>,
}

fn leq(a: &[u32], b: &[u32]) -> bool {
    a.iter().zip(b).all(|(x, y)| x <= y)
}

/// Minimal guaranteed tuples below `max` (coordinatewise), using that the
/// guaranteed tuples form an up-set.
pub fn obstruction_scan(colors: u32, max: &[u32], opts: SearchOptions) -> Result<ScanReport> {
    if max.is_empty() || max.contains(&0) {
        return Err(invalid(
            "scan bounds must be a nonempty list of positive integers",
        ));
    }
    let d = max.len();
    let mut tuples: Vec<Vec<u32>> = vec![Vec::new()];
    for &m in max {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                (1..=m).map(move |a| {
                    let mut u = t.clone();
                    u.push(a);
                    u
                })
            })
            .collect();
    }
    let mut entries: Vec<ScanEntry> = Vec::with_capacity(tuples.len());
    let mut known_yes: Vec<Vec<u32>> = Vec::new();
    let mut known_no: Vec<Vec<u32>> = Vec::new();
    // Larger tuples first within the scan would need more enumeration, so decide
    // in lexicographic order and reuse results in both directions.
    for dims in tuples {
        let entry = if known_yes.iter().any(|y| leq(y, &dims)) {
            ScanEntry {
                dims,
                guaranteed: true,
                decision: Decision::ImpliedUp,
            }
        } else if known_no.iter().any(|n| leq(&dims, n)) {
            ScanEntry {
                dims,
                guaranteed: false,
                decision: Decision::ImpliedDown,
            }
        } else {
            let verdict = is_guaranteed(&GridSpec::new(dims.clone(), colors)?, opts)?;
            if verdict.guaranteed {
                known_yes.push(dims.clone());
            } else {
                known_no.push(dims.clone());
            }
            ScanEntry {
                dims,
                guaranteed: verdict.guaranteed,
                decision: Decision::Enumerated,
            }
        };
        entries.push(entry);
    }
    let yes: Vec<&Vec<u32>> = entries
        .iter()
        .filter(|e| e.guaranteed)
        .map(|e| &e.dims)
        .collect();
    let mut minimal: Vec<Vec<u32>> = yes
        .iter()
        .filter(|t| !yes.iter().any(|u| u != *t && leq(u, t)))
        .map(|t| (*t).clone())
        .collect();
    minimal.sort();
    Ok(ScanReport {
        colors,
        d,
        max: max.to_vec(),
        minimal,
        entries,
    })
}

/// Checks a triple `[r, s, third]` for 2-colorings when the grid is within `cap`.
/// Returns `None` when the check is out of reach.
pub fn check_triple(r: u32, s: u32, third: Option<u128>, cap: u128) -> Result<Option<bool>> {
    let Some(third) = third else { return Ok(None) };
    let Ok(third) = u32::try_from(third) else {
        return Ok(None);
    };
    let spec = GridSpec::new(vec![r, s, third], 2)?;
    if spec.state_count() > cap || spec.line_len() > 64 {
        return Ok(None);
    }
    let opts = SearchOptions {
        symmetry: true,
        cap,
    };
    Ok(Some(is_guaranteed(&spec, opts)?.guaranteed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(dims: &[u32], colors: u32) -> GridSpec {
        GridSpec::new(dims.to_vec(), colors).unwrap()
    }

    #[test]
    fn mono_box_examples() {
        let all_one = GridColoring::new(grid(&[2, 2], 2), vec![1; 4]).unwrap();
        let b = find_mono_box(&all_one).unwrap();
        assert_eq!(b.pairs, vec![(1, 2), (1, 2)]);
        assert_eq!(b.color, 1);

        // Every column of a 2 x 5 grid bichromatic.
        let cols = GridColoring::new(grid(&[2, 5], 2), vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1]).unwrap();
        assert!(find_mono_box(&cols).is_none());

        let checker = GridColoring::new(
            grid(&[3, 3], 2),
            (0..9).map(|i| ((i / 3 + i % 3) % 2) as u8).collect(),
        )
        .unwrap();
        // Rows 1 and 3 agree, so the four corners {1,3} x {1,3} share color 0.
        let b = find_mono_box(&checker).unwrap();
        assert_eq!((b.pairs, b.color), (vec![(1, 3), (1, 3)], 0));

        let free = GridColoring::new(grid(&[3, 3], 2), vec![0, 0, 1, 0, 1, 0, 1, 0, 0]).unwrap();
        assert!(find_mono_box(&free).is_none());
    }

    #[test]
    fn box_in_three_dimensions() {
        let spec = grid(&[2, 2, 3], 2);
        let mut cells = vec![1u8; 12];
        cells[2] = 0;
        let c = GridColoring::new(spec, cells).unwrap();
        let b = find_mono_box(&c).unwrap();
        assert_eq!(b.pairs, vec![(1, 2), (1, 2), (1, 2)]);
    }

    #[test]
    fn validation() {
        assert!(GridSpec::new(vec![], 2).is_err());
        assert!(GridSpec::new(vec![2, 0], 2).is_err());
        assert!(GridSpec::new(vec![2, 2], 0).is_err());
        assert!(GridColoring::new(grid(&[2, 2], 2), vec![0, 1, 2, 0]).is_err());
        let big = grid(&[6, 6], 2);
        assert!(matches!(
            is_guaranteed(&big, SearchOptions::new(false)),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn two_by_n_never_guaranteed() {
        for n in 1..=8 {
            let v = is_guaranteed(&grid(&[2, n], 2), SearchOptions::new(false)).unwrap();
            assert!(!v.guaranteed);
            assert!(find_mono_box(v.witness.as_ref().unwrap()).is_none());
        }
    }

    #[test]
    fn unit_axis_is_not_guaranteed() {
        let v = is_guaranteed(&grid(&[1, 5], 1), SearchOptions::new(false)).unwrap();
        assert!(!v.guaranteed);
    }

    #[test]
    fn one_color_one_axis() {
        let rep = obstruction_scan(1, &[3], SearchOptions::new(false)).unwrap();
        assert_eq!(rep.minimal, vec![vec![2]]);
    }

    #[test]
    fn guaranteed_count_is_exhaustive() {
        let spec = grid(&[3, 7], 2);
        let v = is_guaranteed(&spec, SearchOptions::new(false)).unwrap();
        assert!(v.guaranteed);
        assert_eq!(v.checked, 1 << 21);
    }

    #[test]
    fn witness_is_first_in_order() {
        let spec = grid(&[2, 3], 2);
        let v = is_guaranteed(&spec, SearchOptions::new(false)).unwrap();
        let first = (0u128..64)
            .map(|i| GridColoring::from_index(spec.clone(), i))
            .find(|c| find_mono_box(c).is_none())
            .unwrap();
        assert_eq!(v.witness.unwrap(), first);
        // Colorings 0..=index(first) are accounted for.
        let idx = first
            .cells
            .iter()
            .fold(0u128, |acc, &c| acc * 2 + c as u128);
        assert_eq!(v.checked, idx + 1);
    }
}

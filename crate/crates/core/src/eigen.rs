//! Explicit eigenvectors of `M_r`, exact eigenpair verification, independent
//! bases per eigenvalue, and the assembled spectrum with its PSD certificate.
//!
//! Seven families of vectors are generated (tags `A` through `G`). Each one is
//! checked by an exact matrix-free product `M_r v = λ v`; nothing here trusts a
//! formula without that check.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::linalg::{exact_rank, integer_kernel, symmetric_eigenvalues, RankCertificate};
use crate::matrix::{apply, build_dense, entry_bits, lift, CliqueEdgeIncidence, DEFAULT_DENSE_CAP};
use crate::subset::{choose, full_mask, SubsetVector, MAX_R};

/// Largest `r` for which rank certificates are computed by default.
pub const DEFAULT_RANK_CAP: u32 = 10;

/// Eigenvector family with its parameters. Elements are 1-based, `D` carries a subset mask.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(tag = "tag")]
pub enum FamilyId {
    A,
    B,
    C,
    D { u: u32 },
    E { x: u32, y: u32 },
    F { w: u32, x: u32, y: u32, z: u32 },
    G { x: u32, y: u32 },
}

impl FamilyId {
    pub fn tag(&self) -> char {
        match self {
            FamilyId::A => 'A',
            FamilyId::B => 'B',
            FamilyId::C => 'C',
            FamilyId::D { .. } => 'D',
            FamilyId::E { .. } => 'E',
            FamilyId::F { .. } => 'F',
            FamilyId::G { .. } => 'G',
        }
    }

    fn validate(&self, r: u32) -> Result<()> {
        let in_range = |e: u32| e >= 1 && e <= r;
        let ok = match *self {
            FamilyId::A | FamilyId::B | FamilyId::C => true,
            FamilyId::D { u } => u >> r == 0 && u.count_ones() + 2 < r,
            FamilyId::E { x, y } | FamilyId::G { x, y } => in_range(x) && in_range(y) && x != y,
            FamilyId::F { w, x, y, z } => {
                let all = [w, x, y, z];
                all.iter().all(|&e| in_range(e))
                    && (0..4).all(|i| (i + 1..4).all(|j| all[i] != all[j]))
            }
        };
        if ok {
            Ok(())
        } else {
            Err(invalid(format!(
                "{self:?} is not a valid family parameter for r = {r}"
            )))
        }
    }
}

/// The eigenvalue each family is claimed to have, as an exact integer (`r >= 4`).
pub fn claimed_eigenvalue(r: u32, id: &FamilyId) -> i128 {
    let ri = r as i128;
    match id {
        FamilyId::A | FamilyId::D { .. } => 0,
        FamilyId::B => (ri * ri - ri + 2) << (r - 4),
        FamilyId::C => (ri - 1) << (r - 2),
        FamilyId::E { .. } => (ri - 2) << (r - 3),
        FamilyId::F { .. } | FamilyId::G { .. } => 1 << (r - 3),
    }
}

#[inline]
fn has(t: u32, e: u32) -> i128 {
    (t >> (e - 1) & 1) as i128
}

/// The explicit vector of a family member, without verification.
pub fn family_raw_vector(r: u32, id: &FamilyId) -> Result<SubsetVector> {
    check_family_r(r)?;
    id.validate(r)?;
    let ri = r as i128;
    let v = match *id {
        FamilyId::A => {
            let mut levels = vec![0i128; r as usize + 1];
            levels[r as usize - 1] = 1;
            levels[r as usize] = 2 - ri;
            lift(r, &levels)?
        }
        FamilyId::B | FamilyId::C => {
            let sign = if *id == FamilyId::B { 1 } else { -1 };
            let levels: Vec<i128> = (0..=r)
                .map(|t| choose(t, 2) + sign * choose(r - t, 2))
                .collect();
            lift(r, &levels)?
        }
        FamilyId::D { u } => SubsetVector::from_fn(r, |t| {
            if t & u == u {
                if t.count_ones() % 2 == 0 {
                    1
                } else {
                    -1
                }
            } else {
                0
            }
        }),
        FamilyId::E { x, y } => SubsetVector::from_fn(r, |t| has(t, x) - has(t, y)),
        FamilyId::F { w, x, y, z } => {
            SubsetVector::from_fn(r, |t| (has(t, w) - has(t, x)) * (has(t, y) - has(t, z)))
        }
        FamilyId::G { x, y } => SubsetVector::from_fn(r, |t| {
            (ri - 2 * t.count_ones() as i128) * (has(t, x) - has(t, y))
        }),
    };
    Ok(v)
}

fn check_family_r(r: u32) -> Result<()> {
    if !(4..=MAX_R).contains(&r) {
        Err(invalid(format!(
            "eigenvector families are defined here for 4 <= r <= {MAX_R}, got {r}"
        )))
    } else {
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EigenPair {
    pub vector: SubsetVector,
    pub eigenvalue: i128,
    pub family: FamilyId,
    pub verified: bool,
}

/// Exact check of `M_r v = λ v` with `v != 0`.
pub fn verify_eigenpair(r: u32, v: &SubsetVector, lambda: i128) -> Result<bool> {
    if v.is_zero() {
        return Ok(false);
    }
    Ok(apply(r, v)? == v.scaled(lambda)?)
}

/// Generates a family vector and verifies its claimed eigenvalue exactly.
pub fn family_vector(r: u32, id: FamilyId) -> Result<EigenPair> {
    let vector = family_raw_vector(r, &id)?;
    let eigenvalue = claimed_eigenvalue(r, &id);
    if !verify_eigenpair(r, &vector, eigenvalue)? {
        return Err(Error::Integrity(format!(
            "family {id:?} at r = {r} is not an eigenvector with eigenvalue {eigenvalue}"
        )));
    }
    Ok(EigenPair {
        vector,
        eigenvalue,
        family: id,
        verified: true,
    })
}

/// Eigenvalue classes of `M_r` for `r >= 4`, in report order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenClass {
    /// Eigenvalue 0, families `A` and `D`.
    Zero,
    /// `2^(r-3)(r-2)`, family `E`.
    EClass,
    /// `2^(r-3)`, families `F` and `G`.
    FClass,
    /// `2^(r-4)(r^2-r+2)`, family `B`.
    BClass,
    /// `2^(r-2)(r-1)`, family `C`.
    CClass,
}

impl EigenClass {
    pub const ALL: [EigenClass; 5] = [
        EigenClass::Zero,
        EigenClass::EClass,
        EigenClass::FClass,
        EigenClass::BClass,
        EigenClass::CClass,
    ];

    pub fn formula(self) -> &'static str {
        match self {
            EigenClass::Zero => "0",
            EigenClass::EClass => "2^(r-3)*(r-2)",
            EigenClass::FClass => "2^(r-3)",
            EigenClass::BClass => "2^(r-4)*(r^2-r+2)",
            EigenClass::CClass => "2^(r-2)*(r-1)",
        }
    }

    pub fn families(self) -> &'static str {
        match self {
            EigenClass::Zero => "A,D",
            EigenClass::EClass => "E",
            EigenClass::FClass => "F,G",
            EigenClass::BClass => "B",
            EigenClass::CClass => "C",
        }
    }

    pub fn eigenvalue(self, r: u32) -> i128 {
        let ri = r as i128;
        match self {
            EigenClass::Zero => 0,
            EigenClass::EClass => (ri - 2) << (r - 3),
            EigenClass::FClass => 1 << (r - 3),
            EigenClass::BClass => (ri * ri - ri + 2) << (r - 4),
            EigenClass::CClass => (ri - 1) << (r - 2),
        }
    }

    /// Multiplicity as a closed form; valid for any `r >= 4` up to 64.
    pub fn multiplicity(self, r: u32) -> u128 {
        let rr = r as u128;
        match self {
            EigenClass::Zero => (1u128 << r) - (rr + 1) * rr / 2,
            EigenClass::EClass => rr - 1,
            EigenClass::FClass => rr * (rr - 1) / 2 - 1,
            EigenClass::BClass | EigenClass::CClass => 1,
        }
    }
}

/// The `F` vectors that together with `G(1, j)` span the `2^(r-3)` eigenspace:
/// `Γ_4 = {F(1,2,3,4), F(1,3,2,4)}` and `Γ_k = Γ_{k-1} ∪ {F(1,j,a,k)}` with
/// `j` in `2..k` and `a` the least element of `{2..k-1} \ {j}`.
pub fn gamma_families(r: u32) -> Vec<FamilyId> {
    let mut out = vec![
        FamilyId::F {
            w: 1,
            x: 2,
            y: 3,
            z: 4,
        },
        FamilyId::F {
            w: 1,
            x: 3,
            y: 2,
            z: 4,
        },
    ];
    for k in 5..=r {
        for j in 2..k {
            let a = if j == 2 { 3 } else { 2 };
            out.push(FamilyId::F {
                w: 1,
                x: j,
                y: a,
                z: k,
            });
        }
    }
    out
}

/// Family members making up the basis of one eigenvalue class, in basis order.
pub fn class_families(r: u32, class: EigenClass) -> Vec<FamilyId> {
    match class {
        EigenClass::Zero => {
            let mut us: Vec<u32> = (0..1u32 << r).filter(|u| u.count_ones() + 3 <= r).collect();
            us.sort_by_key(|&u| (u.count_ones(), u));
            std::iter::once(FamilyId::A)
                .chain(us.into_iter().map(|u| FamilyId::D { u }))
                .collect()
        }
        EigenClass::EClass => (2..=r).map(|y| FamilyId::E { x: 1, y }).collect(),
        EigenClass::FClass => {
            let mut fams = gamma_families(r);
            fams.extend((2..=r).map(|y| FamilyId::G { x: 1, y }));
            fams
        }
        EigenClass::BClass => vec![FamilyId::B],
        EigenClass::CClass => vec![FamilyId::C],
    }
}

fn verified_pairs(r: u32, fams: &[FamilyId]) -> Result<Vec<EigenPair>> {
    fams.par_iter().map(|&id| family_vector(r, id)).collect()
}

fn rows_of(vectors: &[SubsetVector]) -> Vec<Vec<i128>> {
    vectors.iter().map(|v| v.as_slice().to_vec()).collect()
}

/// Verified, linearly independent eigenvectors for one class.
pub fn independent_basis(r: u32, class: EigenClass) -> Result<Vec<SubsetVector>> {
    check_family_r(r)?;
    let pairs = verified_pairs(r, &class_families(r, class))?;
    let vectors: Vec<SubsetVector> = pairs.into_iter().map(|p| p.vector).collect();
    let cert = exact_rank(&rows_of(&vectors));
    if cert.rank != vectors.len() {
        return Err(Error::Integrity(format!(
            "{class:?} basis at r = {r} has rank {} but {} vectors",
            cert.rank,
            vectors.len()
        )));
    }
    Ok(vectors)
}

/// Options for [`assemble_spectrum_with`].
#[derive(Clone, Copy, Debug)]
pub struct SpectrumOptions {
    /// Rank certificates (per class and for the concatenated basis) are computed only up to this `r`.
    pub rank_cap: u32,
    /// Dense decompositions (used for `r < 4`) are allowed up to this `r`.
    pub dense_cap: u32,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            rank_cap: DEFAULT_RANK_CAP,
            dense_cap: DEFAULT_DENSE_CAP,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumClass {
    #[serde(serialize_with = "crate::json::exact")]
    pub eigenvalue: i128,
    pub multiplicity: u64,
    pub formula: String,
    pub families: String,
    pub verified: bool,
    pub rank: Option<RankCertificate>,
    #[serde(skip)]
    pub basis: Vec<SubsetVector>,
}

pub const THEOREM_DISCREPANCY_NOTE: &str =
    "The headline eigenvalue list \"0, 2^(r-3)(r-2), 2^(r-3), \
2^(r-4)(r-1)(r-2), 1\" disagrees with the per-family eigenvalues 2^(r-4)(r^2-r+2) (family B) and \
2^(r-2)(r-1) (family C). The per-family values are used: they satisfy M_r v = λ v exactly and the \
trace identity, while the headline list fails the trace identity.";

#[derive(Clone, Debug, Serialize)]
pub struct SpectrumReport {
    pub r: u32,
    pub classes: Vec<SpectrumClass>,
    pub total: u64,
    /// Sum of eigenvalue times multiplicity.
    #[serde(serialize_with = "crate::json::exact")]
    pub trace_check: i128,
    /// `C(r,2) 2^(r-1)`, the trace of `M_r`.
    #[serde(serialize_with = "crate::json::exact")]
    pub trace_expected: i128,
    pub trace_ok: bool,
    pub full_rank: Option<RankCertificate>,
    pub small_r_fallback: bool,
    pub theorem_discrepancy_note: String,
    /// Trace of the headline eigenvalue list, for comparison with `trace_expected`.
    #[serde(serialize_with = "crate::json::exact_opt")]
    pub theorem_list_trace: Option<i128>,
}

impl SpectrumReport {
    pub fn is_psd(&self) -> bool {
        self.classes.iter().all(|c| c.eigenvalue >= 0)
    }

    /// Eigenvalues with multiplicities, ascending by eigenvalue.
    pub fn eigenvalue_multiset(&self) -> Vec<(i128, u64)> {
        let mut v: Vec<(i128, u64)> = self
            .classes
            .iter()
            .map(|c| (c.eigenvalue, c.multiplicity))
            .collect();
        v.sort();
        v
    }
}

/// `trace(M_r) = C(r,2) 2^(r-1)`.
pub fn trace_formula(r: u32) -> i128 {
    if r < 2 {
        0
    } else {
        choose(r, 2) << (r - 1)
    }
}

/// The headline eigenvalue list with its multiplicities, taken literally (`r >= 4`).
pub fn theorem_literal_spectrum(r: u32) -> Vec<(i128, u128)> {
    let ri = r as i128;
    vec![
        (0, EigenClass::Zero.multiplicity(r)),
        ((ri - 2) << (r - 3), EigenClass::EClass.multiplicity(r)),
        (1 << (r - 3), EigenClass::FClass.multiplicity(r)),
        (((ri - 1) * (ri - 2)) << (r - 4), 1),
        (1, 1),
    ]
}

/// The per-family eigenvalues with multiplicities (`r >= 4`).
pub fn predicted_spectrum(r: u32) -> Vec<(i128, u128)> {
    EigenClass::ALL
        .iter()
        .map(|c| (c.eigenvalue(r), c.multiplicity(r)))
        .collect()
}

pub fn spectrum_trace(spectrum: &[(i128, u128)]) -> i128 {
    spectrum.iter().map(|&(l, m)| l * m as i128).sum()
}

pub fn assemble_spectrum(r: u32) -> Result<SpectrumReport> {
    assemble_spectrum_with(r, SpectrumOptions::default())
}

/// Full eigendecomposition of `M_r` with every basis vector verified exactly.
pub fn assemble_spectrum_with(r: u32, opts: SpectrumOptions) -> Result<SpectrumReport> {
    if r > MAX_R {
        return Err(invalid(format!("r = {r} exceeds {MAX_R}")));
    }
    if r < 4 {
        return small_r_spectrum(r, opts.dense_cap);
    }
    let certify = r <= opts.rank_cap;
    let mut classes = Vec::with_capacity(5);
    for class in EigenClass::ALL {
        let fams = class_families(r, class);
        let vectors: Vec<SubsetVector> = verified_pairs(r, &fams)?
            .into_iter()
            .map(|p| p.vector)
            .collect();
        let expected = class.multiplicity(r);
        if vectors.len() as u128 != expected {
            return Err(Error::Integrity(format!(
                "{class:?} at r = {r}: generated {} vectors, expected {expected}",
                vectors.len()
            )));
        }
        let rank = if certify {
            let cert = exact_rank(&rows_of(&vectors));
            if cert.rank != vectors.len() {
                return Err(Error::Integrity(format!(
                    "{class:?} basis at r = {r} has rank {} < {}",
                    cert.rank,
                    vectors.len()
                )));
            }
            Some(cert)
        } else {
            None
        };
        classes.push(SpectrumClass {
            eigenvalue: class.eigenvalue(r),
            multiplicity: vectors.len() as u64,
            formula: class.formula().to_string(),
            families: class.families().to_string(),
            verified: true,
            rank,
            basis: vectors,
        });
    }
    let full_rank = if certify {
        let rows: Vec<Vec<i128>> = classes
            .iter()
            .flat_map(|c| c.basis.iter().map(|v| v.as_slice().to_vec()))
            .collect();
        let cert = exact_rank(&rows);
        if cert.rank != 1usize << r {
            return Err(Error::Integrity(format!(
                "concatenated eigenbasis at r = {r} has rank {} < 2^{r}",
                cert.rank
            )));
        }
        Some(cert)
    } else {
        None
    };
    finish_report(r, classes, full_rank, false)
}

fn finish_report(
    r: u32,
    classes: Vec<SpectrumClass>,
    full_rank: Option<RankCertificate>,
    small_r_fallback: bool,
) -> Result<SpectrumReport> {
    let total: u64 = classes.iter().map(|c| c.multiplicity).sum();
    if total != 1u64 << r {
        return Err(Error::Integrity(format!(
            "multiplicities sum to {total}, not 2^{r}"
        )));
    }
    let trace_check: i128 = classes
        .iter()
        .map(|c| c.eigenvalue * c.multiplicity as i128)
        .sum();
    let trace_expected = trace_formula(r);
    if trace_check != trace_expected {
        return Err(Error::Integrity(format!(
            "eigenvalues sum to {trace_check} but trace(M_{r}) = {trace_expected}"
        )));
    }
    let theorem_list_trace = (r >= 4).then(|| spectrum_trace(&theorem_literal_spectrum(r)));
    Ok(SpectrumReport {
        r,
        classes,
        total,
        trace_check,
        trace_expected,
        trace_ok: true,
        full_rank,
        small_r_fallback,
        theorem_discrepancy_note: THEOREM_DISCREPANCY_NOTE.to_string(),
        theorem_list_trace,
    })
}

/// Exact eigendecomposition of a small dense `M_r` without using the families:
/// floating-point eigenvalues are rounded to integers, and each candidate is
/// confirmed by an exact kernel of `M_r - λI`. The kernels must fill the space.
pub fn dense_exact_spectrum(r: u32, dense_cap: u32) -> Result<Vec<(i128, Vec<SubsetVector>)>> {
    let cap = dense_cap.min(8);
    let m = build_dense(r, cap)?;
    let n = m.dim();
    let mut candidates: Vec<i128> = symmetric_eigenvalues(m.to_f64())
        .iter()
        .map(|x| x.round() as i128)
        .collect();
    candidates.dedup();
    let mut out = Vec::new();
    let mut dims = 0;
    for lambda in candidates {
        let shifted: Vec<Vec<i128>> = (0..n as u32)
            .map(|s| {
                let mut row = m.row(s).to_vec();
                row[s as usize] -= lambda;
                row
            })
            .collect();
        let kernel: Vec<SubsetVector> = integer_kernel(&shifted)
            .into_iter()
            .map(|v| SubsetVector::from_vec(r, v))
            .collect::<Result<_>>()?;
        if kernel.is_empty() {
            continue;
        }
        dims += kernel.len();
        out.push((lambda, kernel));
    }
    if dims != n {
        return Err(Error::Integrity(format!(
            "integer eigenspaces of M_{r} only span {dims} of {n} dimensions"
        )));
    }
    Ok(out)
}

fn small_r_spectrum(r: u32, dense_cap: u32) -> Result<SpectrumReport> {
    let mut classes = Vec::new();
    for (lambda, basis) in dense_exact_spectrum(r, dense_cap)? {
        for v in &basis {
            if !verify_eigenpair(r, v, lambda)? {
                return Err(Error::Integrity(format!(
                    "kernel vector of M_{r} - {lambda}I fails"
                )));
            }
        }
        let cert = exact_rank(&rows_of(&basis));
        classes.push(SpectrumClass {
            eigenvalue: lambda,
            multiplicity: basis.len() as u64,
            formula: "dense".to_string(),
            families: "dense kernel".to_string(),
            verified: true,
            rank: Some(cert),
            basis,
        });
    }
    let rows: Vec<Vec<i128>> = classes
        .iter()
        .flat_map(|c| c.basis.iter().map(|v| v.as_slice().to_vec()))
        .collect();
    let full = exact_rank(&rows);
    finish_report(r, classes, Some(full), true)
}

#[derive(Clone, Debug, Serialize)]
pub struct CrosscheckReport {
    pub r: u32,
    pub tolerance: f64,
    pub passed: bool,
    pub max_relative_error: f64,
    pub min_numeric_eigenvalue: f64,
    pub mismatches: Vec<String>,
}

/// Predicted spectrum used by [`numeric_crosscheck`]: closed forms for `r >= 4`,
/// the exact dense decomposition below that.
pub fn predicted_multiset(r: u32) -> Result<Vec<(i128, u128)>> {
    if r >= 4 {
        Ok(predicted_spectrum(r))
    } else {
        Ok(dense_exact_spectrum(r, 8)?
            .into_iter()
            .map(|(l, b)| (l, b.len() as u128))
            .collect())
    }
}

/// Compares a floating-point spectrum of dense `M_r` against `predicted`.
///
/// Both lists are sorted and matched position by position, which also matches
/// multiplicities. Eigenvalue `λ` agrees with `μ` when `|λ - μ| <= tol * max(1, |μ|)`.
pub fn crosscheck_against(
    r: u32,
    predicted: &[(i128, u128)],
    tol: f64,
) -> Result<CrosscheckReport> {
    if r > 10 {
        return Err(Error::Capacity(format!(
            "numeric cross-check is limited to r <= 10, got {r}"
        )));
    }
    let numeric = symmetric_eigenvalues(build_dense(r, 10)?.to_f64());
    let mut expected: Vec<f64> = predicted
        .iter()
        .flat_map(|&(l, m)| std::iter::repeat_n(l as f64, m as usize))
        .collect();
    expected.sort_by(|a, b| a.total_cmp(b));
    let mut mismatches = Vec::new();
    if expected.len() != numeric.len() {
        mismatches.push(format!(
            "predicted {} eigenvalues, matrix has {}",
            expected.len(),
            numeric.len()
        ));
    }
    let mut max_rel: f64 = 0.0;
    for (i, (&got, &want)) in numeric.iter().zip(&expected).enumerate() {
        let rel = (got - want).abs() / want.abs().max(1.0);
        max_rel = max_rel.max(rel);
        if rel > tol && mismatches.len() < 16 {
            mismatches.push(format!(
                "position {i}: numeric {got:.9} vs predicted {want}"
            ));
        }
    }
    let min_numeric = numeric.first().copied().unwrap_or(0.0);
    Ok(CrosscheckReport {
        r,
        tolerance: tol,
        passed: mismatches.is_empty(),
        max_relative_error: max_rel,
        min_numeric_eigenvalue: min_numeric,
        mismatches,
    })
}

pub fn numeric_crosscheck(r: u32, tol: f64) -> Result<CrosscheckReport> {
    crosscheck_against(r, &predicted_multiset(r)?, tol)
}

#[derive(Clone, Debug, Serialize)]
pub struct Reconstruction {
    pub mode: &'static str,
    pub entries_checked: u64,
    pub mismatches: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PsdCertificate {
    pub r: u32,
    pub factorization: &'static str,
    /// Columns of the clique-edge incidence matrix `K`, as 1-based vertex pairs.
    pub edges: Vec<(u32, u32)>,
    pub reconstruction: Reconstruction,
    /// Exact spectrum as `(eigenvalue, multiplicity)` pairs when `r` is within the dense cap.
    pub spectrum: Option<Vec<(i64, u64)>>,
    pub closed_form_nonnegative: bool,
    pub psd: bool,
}

const SAMPLED_ENTRIES: u64 = 1 << 16;

/// Gram-factorization witness for positive semidefiniteness of `M_r`.
///
/// `M_r = K K^T + P K K^T P^T` where `K` is the clique-edge incidence and `P` the
/// complementation permutation. Up to `dense_cap` the identity is checked on every
/// entry; beyond it on a fixed pseudo-random sample.
pub fn psd_certificate(r: u32, dense_cap: u32) -> Result<PsdCertificate> {
    if r > MAX_R {
        return Err(invalid(format!("r = {r} exceeds {MAX_R}")));
    }
    let k = CliqueEdgeIncidence::new(r)?;
    let reconstruction = if r <= dense_cap.min(10) {
        let rebuilt = k.reconstruct(dense_cap)?;
        let dense = build_dense(r, dense_cap)?;
        let mismatches = rebuilt
            .iter()
            .zip(dense.entries())
            .filter(|(a, b)| a != b)
            .count() as u64;
        Reconstruction {
            mode: "full",
            entries_checked: rebuilt.len() as u64,
            mismatches,
        }
    } else {
        sampled_reconstruction(&k)
    };
    if reconstruction.mismatches > 0 {
        return Err(Error::Integrity(format!(
            "Gram reconstruction of M_{r} differs in {} entries",
            reconstruction.mismatches
        )));
    }
    let spectrum = if r <= dense_cap {
        let opts = SpectrumOptions {
            rank_cap: dense_cap.min(DEFAULT_RANK_CAP),
            dense_cap,
        };
        let report = assemble_spectrum_with(r, opts)?;
        Some(
            report
                .eigenvalue_multiset()
                .into_iter()
                .map(|(l, m)| (l as i64, m))
                .collect(),
        )
    } else {
        None
    };
    let closed_form_nonnegative = r < 4 || predicted_spectrum(r).iter().all(|&(l, _)| l >= 0);
    let spectrum_nonnegative = spectrum
        .as_ref()
        .is_none_or(|s: &Vec<(i64, u64)>| s.iter().all(|&(l, _)| l >= 0));
    Ok(PsdCertificate {
        r,
        factorization: "K*K^T + P*K*K^T*P^T",
        edges: k.edges().to_vec(),
        reconstruction,
        spectrum,
        closed_form_nonnegative,
        psd: closed_form_nonnegative && spectrum_nonnegative,
    })
}

fn sampled_reconstruction(k: &CliqueEdgeIncidence) -> Reconstruction {
    use rand::{Rng, SeedableRng};
    let r = k.r();
    let full = full_mask(r);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed ^ r as u64);
    let gram = |s: u32, t: u32| -> i128 {
        (0..k.edges().len())
            .filter(|&e| k.get(s, e) && k.get(t, e))
            .count() as i128
    };
    let mut mismatches = 0;
    for _ in 0..SAMPLED_ENTRIES {
        let s = rng.gen_range(0..=full);
        let t = rng.gen_range(0..=full);
        if gram(s, t) + gram(s ^ full, t ^ full) != entry_bits(r, s, t) {
            mismatches += 1;
        }
    }
    Reconstruction {
        mode: "sampled",
        entries_checked: SAMPLED_ENTRIES,
        mismatches,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_a_at_r4() {
        let p = family_vector(4, FamilyId::A).unwrap();
        for t in 0..16u32 {
            let want = match t.count_ones() {
                3 => 1,
                4 => -2,
                _ => 0,
            };
            assert_eq!(p.vector.as_slice()[t as usize], want);
        }
        assert_eq!(p.eigenvalue, 0);
        assert!(p.verified);
    }

    #[test]
    fn family_eigenvalue_examples() {
        assert_eq!(
            family_vector(4, FamilyId::E { x: 1, y: 2 })
                .unwrap()
                .eigenvalue,
            4
        );
        let d = family_vector(4, FamilyId::D { u: 0 }).unwrap();
        assert!(d.vector.as_slice().iter().all(|x| x.abs() == 1));
        let f = family_vector(
            5,
            FamilyId::F {
                w: 1,
                x: 2,
                y: 3,
                z: 4,
            },
        )
        .unwrap();
        assert_eq!(f.eigenvalue, 4);
    }

    #[test]
    fn invalid_family_parameters() {
        assert!(family_vector(4, FamilyId::E { x: 1, y: 1 }).is_err());
        assert!(family_vector(4, FamilyId::E { x: 0, y: 1 }).is_err());
        assert!(family_vector(
            4,
            FamilyId::F {
                w: 1,
                x: 2,
                y: 3,
                z: 3
            }
        )
        .is_err());
        // |U| must stay below r - 2.
        assert!(family_vector(4, FamilyId::D { u: 0b11 }).is_err());
        assert!(family_vector(4, FamilyId::D { u: 0b1 }).is_ok());
        assert!(family_vector(3, FamilyId::A).is_err());
    }

    #[test]
    fn basis_sizes() {
        assert_eq!(independent_basis(4, EigenClass::Zero).unwrap().len(), 6);
        assert_eq!(independent_basis(4, EigenClass::EClass).unwrap().len(), 3);
        assert_eq!(independent_basis(5, EigenClass::FClass).unwrap().len(), 9);
    }

    #[test]
    fn gamma_sizes() {
        for r in 4..=12u32 {
            let want = (r * (r - 1) / 2 - r) as usize;
            assert_eq!(gamma_families(r).len(), want);
        }
    }

    #[test]
    fn spectrum_r4() {
        let rep = assemble_spectrum(4).unwrap();
        assert_eq!(
            rep.eigenvalue_multiset(),
            vec![(0, 6), (2, 5), (4, 3), (12, 1), (14, 1)]
        );
        assert_eq!(rep.trace_check, 48);
        assert_eq!(rep.theorem_list_trace, Some(29));
        assert!(rep.full_rank.is_some());
    }

    #[test]
    fn spectrum_small_r_fallback() {
        let rep = assemble_spectrum(2).unwrap();
        assert!(rep.small_r_fallback);
        assert_eq!(rep.eigenvalue_multiset(), vec![(0, 2), (1, 2)]);
        assert_eq!(
            assemble_spectrum(0).unwrap().eigenvalue_multiset(),
            vec![(0, 1)]
        );
    }

    #[test]
    fn theorem_list_fails_trace_at_r4() {
        assert_ne!(
            spectrum_trace(&theorem_literal_spectrum(4)),
            trace_formula(4)
        );
        assert_eq!(spectrum_trace(&predicted_spectrum(4)), trace_formula(4));
    }

    #[test]
    fn psd_certificate_r4() {
        let cert = psd_certificate(4, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(cert.reconstruction.mode, "full");
        assert_eq!(cert.reconstruction.entries_checked, 256);
        assert!(cert.psd);
        assert_eq!(cert.edges.len(), 6);
    }

    #[test]
    fn psd_certificate_sampled_above_cap() {
        let cert = psd_certificate(13, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(cert.reconstruction.mode, "sampled");
        assert!(cert.spectrum.is_none());
        assert!(cert.psd);
    }
}

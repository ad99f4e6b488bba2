//! Acceptance criteria 1-10. Runs sequentially and prints one PASS/FAIL line each.

use std::time::{Duration, Instant};

use prodramsey::eigen::{self, EigenClass};
use prodramsey::linalg;
use prodramsey::matrix::{self, CliqueEdgeIncidence};
use prodramsey::qip::{self, QipInstance, SolveOptions};
use prodramsey::ramsey::{self, GridSpec, SearchOptions};
use prodramsey::subset::{self, SubsetVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn c1_eigen_verification() -> Outcome {
    let start = Instant::now();
    let mut vectors = 0;
    for r in 4..=10u32 {
        for class in EigenClass::ALL {
            for id in eigen::class_families(r, class) {
                let pair = eigen::family_vector(r, id).map_err(e)?;
                ensure(
                    pair.verified && pair.eigenvalue == class.eigenvalue(r),
                    || format!("{id:?} at r={r}"),
                )?;
                vectors += 1;
            }
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(60), || format!("took {took:?}"))?;
    Ok(format!(
        "{vectors} family vectors verified exactly for r in 4..=10 in {took:.2?}"
    ))
}

fn c2_diagonalization() -> Outcome {
    for r in 4..=10u32 {
        let mults: Vec<u128> = EigenClass::ALL.iter().map(|c| c.multiplicity(r)).collect();
        let rr = r as u128;
        let want = vec![
            (1 << r) - (rr + 1) * rr / 2,
            rr - 1,
            rr * (rr - 1) / 2 - 1,
            1,
            1,
        ];
        ensure(mults == want, || format!("r={r}: multiplicities {mults:?}"))?;
        ensure(mults.iter().sum::<u128>() == 1 << r, || {
            format!("r={r}: sum")
        })?;
        let mut all = Vec::new();
        for class in EigenClass::ALL {
            let basis = eigen::independent_basis(r, class).map_err(e)?;
            let rows: Vec<Vec<i128>> = basis.iter().map(|v| v.as_slice().to_vec()).collect();
            let rank = linalg::exact_rank(&rows).rank;
            ensure(rank as u128 == class.multiplicity(r), || {
                format!("r={r} {class:?}: rank {rank}")
            })?;
            all.extend(rows);
        }
        let full = linalg::exact_rank(&all);
        ensure(full.rank == 1 << r, || {
            format!("r={r}: concatenated rank {}", full.rank)
        })?;
    }
    Ok("class ranks equal multiplicities and concatenated rank is 2^r for r in 4..=10".into())
}

fn c3_trace() -> Outcome {
    for r in 4..=12u32 {
        let expected = subset::binom(r as i64, 2).map_err(e)? << (r - 1);
        let got = if r <= 10 {
            let rep = eigen::assemble_spectrum(r).map_err(e)?;
            ensure(rep.classes.iter().all(|c| c.verified), || {
                format!("r={r}: unverified class")
            })?;
            rep.trace_check
        } else {
            eigen::spectrum_trace(&eigen::predicted_spectrum(r))
        };
        ensure(got == expected, || format!("r={r}: {got} != {expected}"))?;
    }
    Ok("sum of eigenvalue times multiplicity equals C(r,2) 2^(r-1) for r in 4..=12".into())
}

fn c4_numeric() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut min_ev = f64::INFINITY;
    for r in 0..=9u32 {
        let rep = eigen::numeric_crosscheck(r, 1e-6).map_err(e)?;
        ensure(rep.passed, || format!("r={r}: {:?}", rep.mismatches))?;
        ensure(rep.min_numeric_eigenvalue >= -1e-9, || {
            format!("r={r}: eigenvalue {}", rep.min_numeric_eigenvalue)
        })?;
        worst = worst.max(rep.max_relative_error);
        min_ev = min_ev.min(rep.min_numeric_eigenvalue);
    }
    for r in 0..=10u32 {
        let rebuilt = CliqueEdgeIncidence::new(r)
            .map_err(e)?
            .reconstruct(10)
            .map_err(e)?;
        let dense = matrix::build_dense(r, 10).map_err(e)?;
        ensure(rebuilt.as_slice() == dense.entries(), || {
            format!("r={r}: Gram reconstruction")
        })?;
    }
    Ok(format!(
        "r in 0..=9 within 1e-6 (max rel. error {worst:.1e}, min eigenvalue {min_ev:.1e}); Gram reconstruction exact for r <= 10"
    ))
}

fn c5_discrepancy() -> Outcome {
    let lit = eigen::spectrum_trace(&eigen::theorem_literal_spectrum(4));
    let props = eigen::spectrum_trace(&eigen::predicted_spectrum(4));
    let expected = eigen::trace_formula(4);
    ensure(lit != expected, || {
        format!("literal list trace {lit} matches")
    })?;
    ensure(props == expected, || {
        format!("per-family list trace {props}")
    })?;
    let rep = eigen::assemble_spectrum(4).map_err(e)?;
    ensure(!rep.theorem_discrepancy_note.is_empty(), || {
        "note missing".into()
    })?;
    ensure(rep.theorem_list_trace == Some(lit), || {
        "report lacks the literal trace".into()
    })?;
    Ok(format!(
        "literal list trace {lit} vs expected {expected}; per-family list {props}; note present"
    ))
}

fn c6_quotient() -> Outcome {
    for r in 2..=12u32 {
        let closed = matrix::build_quotient(r).map_err(e)?;
        let counted = matrix::quotient_by_enumeration(r).map_err(e)?;
        ensure(closed == counted, || format!("r={r}"))?;
    }
    Ok("closed-form N_r equals column sums for r in 2..=12".into())
}

fn c7_identities() -> Outcome {
    let sweeps = subset::identity_sweep(20, 20, 10).map_err(e)?;
    let checked: u64 = sweeps.iter().map(|s| s.checked).sum();
    let failures: usize = sweeps.iter().map(|s| s.failures.len()).sum();
    ensure(sweeps.len() == 5 && failures == 0, || {
        format!("{failures} failures")
    })?;
    Ok(format!(
        "identities (1)-(5): {checked} instances, 0 failures"
    ))
}

fn c8_qip() -> Outcome {
    let mut cases: Vec<(u32, u32)> = (2..=3).flat_map(|r| (2..=8).map(move |s| (r, s))).collect();
    cases.extend((2..=4).map(|s| (4, s)));
    for &(r, s) in &cases {
        let inst = QipInstance::new(r, s).map_err(e)?;
        let ex = qip::solve_exhaustive(inst, SolveOptions::default()).map_err(e)?;
        let bb = qip::solve_bnb(inst, SolveOptions::default()).map_err(e)?;
        ensure(ex.t == bb.t, || {
            format!("r={r} s={s}: exhaustive {} bnb {}", ex.t, bb.t)
        })?;
    }
    let inst = QipInstance::new(2, 2).map_err(e)?;
    let sol = qip::solve_bnb(inst, SolveOptions::default()).map_err(e)?;
    let triple = serde_json::to_value(qip::guaranteed_triple(inst, &sol)).map_err(e)?;
    ensure(sol.t == 0 && triple["third"] == "unbounded", || {
        format!("r=2 s=2: {triple}")
    })?;
    Ok(format!(
        "bnb equals exhaustive on {} instances; (2,2) gives t = 0, unbounded",
        cases.len()
    ))
}

fn c9_ramsey() -> Outcome {
    let start = Instant::now();
    let rep = ramsey::obstruction_scan(2, &[7, 7], SearchOptions::new(true)).map_err(e)?;
    let scan_time = start.elapsed();
    ensure(
        rep.minimal == vec![vec![3, 7], vec![5, 5], vec![7, 3]],
        || format!("minimal {:?}", rep.minimal),
    )?;
    let start = Instant::now();
    let five = ramsey::is_guaranteed(
        &GridSpec::new(vec![5, 5], 2).map_err(e)?,
        SearchOptions::new(true),
    )
    .map_err(e)?;
    let five_time = start.elapsed();
    ensure(five.guaranteed, || "(5,5) not guaranteed".into())?;
    ensure(five_time < Duration::from_secs(600), || {
        format!("(5,5) took {five_time:?}")
    })?;
    let full = ramsey::is_guaranteed(
        &GridSpec::new(vec![5, 5], 2).map_err(e)?,
        SearchOptions::new(false),
    )
    .map_err(e)?;
    ensure(full.guaranteed && full.checked == 1 << 25, || {
        format!("unreduced (5,5) accounted for {} colorings", full.checked)
    })?;
    let mut grids = 0;
    for c in 2..=4u32 {
        for a in 1..=20u32 {
            for b in 1..=20u32 {
                let spec = GridSpec::new(vec![a, b], c).map_err(e)?;
                if spec.state_count() > 1 << 20 {
                    continue;
                }
                let on = ramsey::is_guaranteed(&spec, SearchOptions::new(true)).map_err(e)?;
                let off = ramsey::is_guaranteed(&spec, SearchOptions::new(false)).map_err(e)?;
                ensure(on.guaranteed == off.guaranteed, || format!("{a}x{b} c={c}"))?;
                grids += 1;
            }
        }
    }
    for dims in [[2u32, 2, 2], [2, 2, 3], [2, 2, 4], [2, 3, 3], [2, 2, 5]] {
        let spec = GridSpec::new(dims.to_vec(), 2).map_err(e)?;
        let on = ramsey::is_guaranteed(&spec, SearchOptions::new(true)).map_err(e)?;
        let off = ramsey::is_guaranteed(&spec, SearchOptions::new(false)).map_err(e)?;
        ensure(on.guaranteed == off.guaranteed, || format!("{dims:?}"))?;
        grids += 1;
    }
    Ok(format!(
        "scan (7,7) = {{(3,7),(5,5),(7,3)}} in {scan_time:.2?}; (5,5) in {five_time:.2?}; symmetry agrees on {grids} grids"
    ))
}

fn c10_apply() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for r in 2..=10u32 {
        let dense = matrix::build_dense(r, 10).map_err(e)?;
        for _ in 0..20 {
            let v = SubsetVector::from_fn(r, |_| rng.gen_range(-1_000_000..=1_000_000));
            let fast = matrix::apply(r, &v).map_err(e)?;
            ensure(fast == dense.mul_vec(&v).map_err(e)?, || format!("r={r}"))?;
        }
    }
    let v = SubsetVector::from_fn(20, |_| rng.gen_range(-1000..=1000));
    let start = Instant::now();
    let out = matrix::apply(20, &v).map_err(e)?;
    let took = start.elapsed();
    ensure(out.len() == 1 << 20, || "wrong length".into())?;
    ensure(took < Duration::from_secs(30), || {
        format!("r=20 took {took:?}")
    })?;
    Ok(format!(
        "apply == dense on 180 random vectors; r = 20 in {took:.2?}"
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("exact eigen-verification", c1_eigen_verification),
        ("full diagonalization", c2_diagonalization),
        ("trace identity", c3_trace),
        ("numeric cross-check and Gram reconstruction", c4_numeric),
        ("theorem discrepancy detection", c5_discrepancy),
        ("quotient consistency", c6_quotient),
        ("binomial identities", c7_identities),
        ("QIP oracle equivalence", c8_qip),
        ("Ramsey reproduction", c9_ramsey),
        ("matrix-free apply", c10_apply),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} PASS {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL {name}: {why}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

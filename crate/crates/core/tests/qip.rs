use prodramsey::qip::{self, Method, QipInstance, SolveOptions, Symmetry};
use prodramsey::subset::SubsetVector;
use proptest::prelude::*;

fn naive_entry(r: u32, s: u32, t: u32) -> i128 {
    let full = (1u32 << r) - 1;
    let c2 = |n: u32| (n as i128) * (n as i128 - 1) / 2;
    c2((s & t).count_ones()) + c2((!s & !t & full).count_ones())
}

/// Minimum over all multisets, with the lexicographically least count vector among minimizers.
fn oracle(r: u32, s: u32) -> (i128, Vec<u32>) {
    let n = 1u32 << r;
    let mut best: Option<(i128, Vec<u32>)> = None;
    let mut seq = vec![0u32; s as usize];
    loop {
        let mut t = 0;
        for i in 0..seq.len() {
            for j in 0..seq.len() {
                if i != j {
                    t += naive_entry(r, seq[i], seq[j]);
                }
            }
        }
        let mut counts = vec![0u32; n as usize];
        for &x in &seq {
            counts[x as usize] += 1;
        }
        let better = match &best {
            None => true,
            Some((bt, bc)) => t < *bt || (t == *bt && counts < *bc),
        };
        if better {
            best = Some((t, counts));
        }
        // Next nondecreasing sequence.
        let Some(i) = (0..seq.len()).rev().find(|&i| seq[i] + 1 < n) else {
            break;
        };
        let v = seq[i] + 1;
        for x in &mut seq[i..] {
            *x = v;
        }
    }
    best.unwrap()
}

fn opts(symmetry: Symmetry) -> SolveOptions {
    SolveOptions {
        symmetry,
        ..SolveOptions::default()
    }
}

fn counts_of(sol: &qip::QipSolution) -> Vec<u32> {
    sol.argmin_vector()
        .as_slice()
        .iter()
        .map(|&x| x as u32)
        .collect()
}

#[test]
fn brute_force_oracle_r2_s5() {
    let (t, counts) = oracle(2, 5);
    let inst = QipInstance::new(2, 5).unwrap();
    for sym in [Symmetry::None, Symmetry::Complement, Symmetry::Full] {
        let ex = qip::solve_exhaustive(inst, opts(sym)).unwrap();
        assert_eq!(ex.t, t, "{sym:?}");
        assert_eq!(qip::objective_multiset(2, &ex.argmin), t);
    }
    let ex = qip::solve_exhaustive(inst, opts(Symmetry::None)).unwrap();
    assert_eq!(counts_of(&ex), counts);
}

#[test]
fn exhaustive_matches_oracle_small() {
    for r in 2..=3u32 {
        for s in 2..=6u32 {
            let (t, counts) = oracle(r, s);
            let inst = QipInstance::new(r, s).unwrap();
            let ex = qip::solve_exhaustive(inst, opts(Symmetry::None)).unwrap();
            assert_eq!((ex.t, counts_of(&ex)), (t, counts), "r={r} s={s}");
        }
    }
}

#[test]
fn bnb_equals_exhaustive() {
    let mut cases: Vec<(u32, u32)> = (2..=3).flat_map(|r| (2..=8).map(move |s| (r, s))).collect();
    cases.extend((2..=4).map(|s| (4, s)));
    for (r, s) in cases {
        let inst = QipInstance::new(r, s).unwrap();
        for sym in [Symmetry::None, Symmetry::Full] {
            let ex = qip::solve_exhaustive(inst, opts(sym)).unwrap();
            let bb = qip::solve_bnb(inst, opts(sym)).unwrap();
            assert_eq!(ex.method, Method::Exhaustive);
            assert_eq!(bb.method, Method::BranchAndBound);
            assert_eq!(bb.t, ex.t, "r={r} s={s} {sym:?}");
            assert_eq!(bb.argmin, ex.argmin, "r={r} s={s} {sym:?}");
        }
    }
}

#[test]
fn t_is_monotone_in_s_and_nonnegative() {
    for r in 2..=4u32 {
        let mut prev = 0;
        for s in 2..=if r == 4 { 5 } else { 8 } {
            let t = qip::solve_bnb(QipInstance::new(r, s).unwrap(), SolveOptions::default())
                .unwrap()
                .t;
            assert!(t >= prev, "r={r} s={s}");
            prev = t;
        }
    }
}

#[test]
fn zero_t_is_unbounded() {
    let inst = QipInstance::new(2, 2).unwrap();
    let sol = qip::solve_exhaustive(inst, SolveOptions::default()).unwrap();
    assert_eq!(sol.t, 0);
    assert_eq!(qip::guaranteed_triple(inst, &sol).third, None);
    assert_eq!(qip::guaranteed_triple_from_t(3, 7, 3).third, Some(43));
}

#[test]
fn triple_matches_formula() {
    for (r, s) in [(2, 3), (3, 5), (3, 7), (4, 4)] {
        let inst = QipInstance::new(r, s).unwrap();
        let sol = qip::solve_exhaustive(inst, SolveOptions::default()).unwrap();
        let tr = qip::guaranteed_triple(inst, &sol);
        if sol.t > 0 {
            let want = (r * (r - 1) * s * (s - 1)) as i128 / (2 * sol.t) + 1;
            assert_eq!(tr.third, Some(want as u128));
        }
    }
}

#[test]
fn budget_is_enforced() {
    let inst = QipInstance::new(4, 9).unwrap();
    let o = SolveOptions {
        budget: 10,
        ..SolveOptions::default()
    };
    assert!(matches!(
        qip::solve_exhaustive(inst, o),
        Err(prodramsey::Error::Capacity(_))
    ));
    assert!(QipInstance::new(1, 3).is_err());
    assert!(QipInstance::new(3, 1).is_err());
}

fn permute_mask(mask: u32, perm: &[u32]) -> u32 {
    (0..perm.len())
        .filter(|&i| mask >> i & 1 == 1)
        .fold(0, |acc, i| acc | 1 << perm[i])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn objective_invariances(r in 2u32..=7, raw in prop::collection::vec(0u32..128, 2..9), seed in any::<u64>()) {
        let n = 1u32 << r;
        let sets: Vec<u32> = raw.iter().map(|x| x % n).collect();
        let t = qip::objective_multiset(r, &sets);
        prop_assert!(t >= 0);
        let comp: Vec<u32> = sets.iter().map(|x| !x & (n - 1)).collect();
        prop_assert_eq!(qip::objective_multiset(r, &comp), t);
        let mut perm: Vec<u32> = (0..r).collect();
        let mut st = seed;
        for i in (1..perm.len()).rev() {
            st = st.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (st >> 33) as usize % (i + 1));
        }
        let permuted: Vec<u32> = sets.iter().map(|&x| permute_mask(x, &perm)).collect();
        prop_assert_eq!(qip::objective_multiset(r, &permuted), t);
        let mut v = SubsetVector::zeros(r);
        for &x in &sets {
            v.as_mut_slice()[x as usize] += 1;
        }
        prop_assert_eq!(qip::objective(r, &v).unwrap(), t);
    }
}

use std::collections::BTreeSet;

use macc_lab::coloring::{
    colorize_thm1, colorize_thm2, greedy_coloring, is_proper, local_count, thm2_split,
};
use macc_lab::delivery::{assemble, verify_plan, DeliveryPlan, Mode};
use macc_lab::icp::{realize_union, IcpInstance, IcpUser, UnionIcpDesc};
use macc_lab::linalg_ff::{decode_all, encode, FieldSpec};
use macc_lab::macc::{mod1, DemandProfile, MaccInstance};
use macc_lab::oracle::{exhaustive_chi_l, mais, min_rank_gf2};
use macc_lab::rates::{memory_share, r3, r4, r5_f5, union_bounds, Rational};
use proptest::prelude::*;

fn union_desc() -> impl Strategy<Value = UnionIcpDesc> {
    (0usize..5, 0usize..5, 1usize..8).prop_map(|(a, b, z)| {
        let (a1, a2) = if a >= b { (a, b) } else { (b, a) };
        UnionIcpDesc::new(a1, a2, z).unwrap()
    })
}

/// `(K, L, i)` with `1 <= i` and `iL <= K`.
fn corner(max_k: usize) -> impl Strategy<Value = (usize, usize, usize)> {
    (3..=max_k)
        .prop_flat_map(|k| (Just(k), 1..=k))
        .prop_flat_map(|(k, l)| (Just(k), Just(l), 1..=k / l))
}

fn small_icp() -> impl Strategy<Value = IcpInstance> {
    (2usize..6).prop_flat_map(|n| {
        let user = (0..n, prop::collection::btree_set(0..n, 0..n)).prop_map(|(w, mut known)| {
            known.remove(&w);
            IcpUser {
                want: BTreeSet::from([w]),
                known,
            }
        });
        prop::collection::vec(user, 1..6).prop_map(move |users| IcpInstance::new(n, users).unwrap())
    })
}

fn decodes_everywhere(icp: &IcpInstance, coloring: &macc_lab::coloring::Coloring) -> bool {
    let field = FieldSpec::for_colors(coloring.n_colors_used()).unwrap();
    let scheme = encode(icp, coloring, field).unwrap();
    decode_all(&scheme, icp).iter().all(|&ok| ok)
}

fn plan(k: usize, l: usize, i: usize, mode: Mode) -> DeliveryPlan {
    let inst = MaccInstance::new(k, k, l, i).unwrap();
    assemble(&inst, &DemandProfile::worst_case(&inst), mode).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mod1_lands_in_range(n in -200i64..200, m in 1usize..40) {
        let r = mod1(n, m);
        prop_assert!((1..=m).contains(&r));
        prop_assert_eq!((n - r as i64).rem_euclid(m as i64), 0);
    }

    #[test]
    fn union_bounds_are_ordered(d in union_desc()) {
        let b = union_bounds(d.a1, d.a2, d.z).unwrap();
        prop_assert!(b.lower <= b.r_bar1 && b.r_bar1 <= b.k.max(b.lower));
        if let Some(r2) = b.r_bar2 {
            prop_assert!(b.lower <= r2 && b.k.is_multiple_of(r2));
        }
        if b.k >= b.lower {
            prop_assert!(Rational::from_integer(b.lower as i64) <= b.r_bar3);
        }
    }

    #[test]
    fn r3_with_x_equal_k((k, l, i) in corner(40)) {
        prop_assume!(i * l < k);
        let r = r3(k, l, i, Some(k)).unwrap();
        prop_assert_eq!(r.rate, Some(Rational::new((k - i * l) as i64, 2)));
    }

    #[test]
    fn memory_sharing_is_convex(
        rates in prop::collection::vec(0i64..50, 2..7),
        a in 0i64..60,
        b in 0i64..60,
    ) {
        let pts: Vec<(Rational, Rational)> = rates
            .iter()
            .enumerate()
            .map(|(m, &r)| (Rational::from_integer(m as i64), Rational::from_integer(r)))
            .collect();
        let top = (pts.len() - 1) as i64;
        let qa = Rational::new(a % (10 * top + 1), 10);
        let qb = Rational::new(b % (10 * top + 1), 10);
        let fa = memory_share(&pts, qa).unwrap();
        let fb = memory_share(&pts, qb).unwrap();
        let mid = memory_share(&pts, (qa + qb) / 2).unwrap();
        prop_assert!(mid * 2 <= fa + fb);
        for (m, r) in &pts {
            prop_assert!(memory_share(&pts, *m).unwrap() <= *r);
        }
    }

    #[test]
    fn thm1_coloring_decodes(d in union_desc()) {
        let Some(r2) = union_bounds(d.a1, d.a2, d.z).unwrap().r_bar2 else {
            return Ok(());
        };
        let icp = realize_union(d);
        let c = colorize_thm1(d, r2).unwrap();
        prop_assert!(is_proper(&icp, &c));
        prop_assert!(local_count(&icp, &c) <= r2);
        prop_assert!(decodes_everywhere(&icp, &c));
    }

    #[test]
    fn thm2_coloring_decodes(d in union_desc()) {
        prop_assume!(d.span() <= d.k());
        let (c, m) = colorize_thm2(d).unwrap();
        prop_assert_eq!(m, thm2_split(d));
        let icp = realize_union(d).split(m).unwrap();
        prop_assert!(is_proper(&icp, &c));
        prop_assert_eq!(local_count(&icp, &c), (m * d.span() + d.a2).min(d.k()));
        prop_assert!(decodes_everywhere(&icp, &c));
    }

    #[test]
    fn greedy_on_random_instances(icp in small_icp()) {
        let c = greedy_coloring(&icp);
        prop_assert!(is_proper(&icp, &c));
        prop_assert!(decodes_everywhere(&icp, &c));
        let lo = mais(&icp).unwrap();
        let mid = min_rank_gf2(&icp).unwrap();
        let (chi, _) = exhaustive_chi_l(&icp, icp.n_nodes()).unwrap();
        prop_assert!(lo <= mid && mid <= chi && chi <= local_count(&icp, &c));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn quadratic_plans_match_calculator((k, l, i) in corner(16)) {
        let p = plan(k, l, i, Mode::Quadratic);
        let calc = r5_f5(k, l, i).unwrap();
        prop_assert_eq!(Some(p.total_rate), calc.rate);
        prop_assert_eq!(Some(p.subpacketization), calc.subpacketization);
        prop_assert!(p.total_rate <= Rational::from_integer(k as i64));
        prop_assert!(verify_plan(&p).all_ok);
    }

    #[test]
    fn divisor_plans_match_calculator((k, l, i) in corner(16)) {
        let p = plan(k, l, i, Mode::Divisor(None));
        prop_assert_eq!(Some(p.total_rate), r3(k, l, i, None).unwrap().rate);
        prop_assert!(verify_plan(&p).all_ok);
    }

    #[test]
    fn linear_plans_stay_below_bound((k, l, i) in corner(10)) {
        let p = plan(k, l, i, Mode::Linear);
        let bound = r4(k, l, i).unwrap().rate.unwrap();
        prop_assert!(p.total_rate <= bound);
        let rep = verify_plan(&p);
        prop_assert!(rep.all_ok && rep.matches_calculator);
    }

    #[test]
    fn plan_json_round_trip((k, l, i) in corner(12)) {
        let p = plan(k, l, i, Mode::Quadratic);
        let back = DeliveryPlan::from_json(&p.to_json()).unwrap();
        prop_assert_eq!(back.to_json(), p.to_json());
        prop_assert!(verify_plan(&back).all_ok);
    }

    #[test]
    fn repeated_demands_still_decode(
        (k, l, i) in corner(10),
        seed in prop::collection::vec(1usize..4, 10),
    ) {
        let n = 3;
        let inst = MaccInstance::new(n, k, l, i).unwrap();
        let demands = DemandProfile::new(&inst, seed[..k].to_vec()).unwrap();
        let p = assemble(&inst, &demands, Mode::Quadratic).unwrap();
        prop_assert!(verify_plan(&p).all_ok);
    }
}

mod common;

use common::{big, random_problem};
use espp::fluid::{
    merge_targets, pour, reduce_null_source, reduce_null_target, solve, solve_recursive, verify_plan, FluidProblem,
};
use espp::oracle::valid_instances;
use espp::rational::{int, rat, Rational};
use espp::validate_espp;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

fn slacks(p: &FluidProblem) -> Vec<Rational> {
    (1..=p.k()).map(|l| p.frac_slack_at(l)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn feasible_problems_are_solved(seed in any::<u64>()) {
        let (p, witness) = random_problem(&mut common::rng(seed), 7, 6);
        prop_assert!(verify_plan(&p, &witness));
        prop_assert!(p.frac_slack().is_none_or(|(s, _)| !s.is_negative()));
        let sol = solve(&p).unwrap();
        prop_assert!(verify_plan(&p, &sol.plan));
        let rec = solve_recursive(&p).unwrap();
        prop_assert!(verify_plan(&p, &rec.plan));
    }

    #[test]
    fn perturbed_plans_are_rejected(seed in any::<u64>()) {
        let (p, _) = random_problem(&mut common::rng(seed), 6, 5);
        prop_assume!(p.k() >= 2);
        let mut plan = solve(&p).unwrap().plan;
        let (i, j) = (0..p.n())
            .flat_map(|i| (0..p.k()).map(move |j| (i, j)))
            .find(|&(i, j)| plan.x[i][j].is_positive())
            .unwrap();
        let other = (j + 1) % p.k();
        let eps = plan.x[i][j].clone() / int(2);
        plan.x[i][j] -= &eps;
        plan.x[i][other] += &eps;
        prop_assert!(!verify_plan(&p, &plan));
    }

    #[test]
    fn null_source_keeps_every_slack(seed in any::<u64>()) {
        let (p, _) = random_problem(&mut common::rng(seed), 6, 5);
        let mut parent = p.clone();
        parent.a.insert(0, Rational::zero());
        parent.u.insert(0, Rational::zero());
        prop_assert!(parent.validate().is_ok());
        let (child, lift) = reduce_null_source(&parent).unwrap();
        prop_assert_eq!(slacks(&child), slacks(&parent));
        let plan = lift.apply(&solve(&child).unwrap().plan);
        prop_assert!(verify_plan(&parent, &plan));
    }

    #[test]
    fn null_target_shifts_slack(seed in any::<u64>()) {
        let (p, _) = random_problem(&mut common::rng(seed), 6, 5);
        let mut parent = p.clone();
        parent.b.insert(0, Rational::zero());
        parent.v.insert(0, Rational::zero());
        let (child, lift) = reduce_null_target(&parent).unwrap();
        let ps = slacks(&parent);
        for (l, c) in slacks(&child).into_iter().enumerate() {
            prop_assert_eq!(c, ps[l + 1].clone());
        }
        let plan = lift.apply(&solve(&child).unwrap().plan);
        prop_assert!(verify_plan(&parent, &plan));
    }

    #[test]
    fn merge_shifts_slack(seed in any::<u64>(), num in 1i64..5, den in 5i64..9) {
        let (p, _) = random_problem(&mut common::rng(seed), 6, 5);
        let t = rat(num, den);
        let mut parent = p.clone();
        let (b0, v0) = (parent.b[0].clone(), parent.v[0].clone());
        parent.b[0] = &b0 * &t;
        parent.v[0] = &v0 * &t;
        parent.b.insert(1, &b0 * (int(1) - &t));
        parent.v.insert(1, &v0 * (int(1) - &t));
        let (child, gamma) = merge_targets(&parent).unwrap();
        prop_assert_eq!(gamma, t);
        let ps = slacks(&parent);
        for (l, c) in slacks(&child).into_iter().enumerate() {
            prop_assert_eq!(c, ps[l + 1].clone());
        }
        prop_assert!(verify_plan(&parent, &solve(&parent).unwrap().plan));
    }

    #[test]
    fn pour_keeps_every_slack(seed in any::<u64>()) {
        let (p, _) = random_problem(&mut common::rng(seed), 6, 5);
        prop_assume!(p.k() >= 2 && &p.b[0] * &p.v[1] > &p.b[1] * &p.v[0]);
        let (child, lambda) = pour(&p).unwrap();
        prop_assert!(lambda.is_positive() && lambda <= int(1));
        prop_assert_eq!(slacks(&child), slacks(&p));
    }
}

#[test]
fn espp_relaxations_match_integer_slack() {
    for (n, k, parts) in valid_instances(30, 5) {
        let inst = validate_espp(&big(n), &big(k), &parts).unwrap();
        let p = FluidProblem::from_espp(&inst).unwrap();
        let frac = p.frac_slack().map(|(s, _)| s);
        let int_slack = inst.slack().map(|s| Rational::from_integer(s.value));
        assert_eq!(frac, int_slack, "({n}, {k}, {parts:?})");
        let sol = solve(&p).unwrap();
        assert!(verify_plan(&p, &sol.plan));
    }
}

#[test]
fn espp_solutions_follow_the_predicted_structure() {
    let mut checked = 0;
    for (n, k, parts) in valid_instances(30, 5) {
        let inst = validate_espp(&big(n), &big(k), &parts).unwrap();
        let p = FluidProblem::from_espp(&inst).unwrap();
        let sol = solve(&p).unwrap();
        let st = &sol.structure;
        for l in 1..=k as usize {
            for row in st.first_rows[l - 1] + 1..st.first_rows[l] {
                for j in 1..=k as usize {
                    assert_eq!(
                        sol.plan.x[row - 1][j - 1],
                        st.predicted_entry(l, j),
                        "({n}, {k}, {parts:?}) row {row} col {j}"
                    );
                    checked += 1;
                }
            }
        }
    }
    assert!(checked > 0);
}

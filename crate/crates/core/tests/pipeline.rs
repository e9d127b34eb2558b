//! Cross-module behavior on the bundled fixtures: baseline dispatches, the
//! classic operator-deception replay on the triangle network, and the
//! subset-enumeration outcomes on the 14-bus network.

use gridthreat_core::attack_synthesis::{synthesize, SynthesisGoal, SynthesisOutcome};
use gridthreat_core::dc_powerflow::solve_powerflow;
use gridthreat_core::fixtures::load_fixture;
use gridthreat_core::lodf::compute_lodf;
use gridthreat_core::scopf::evaluate_cost;
use gridthreat_core::verification::{contingency_screen, verify, EmsView};
use gridthreat_core::solve_scopf;

#[test]
fn triangle_admittances_reproduce_the_documented_flows() {
    let (case, _) = load_fixture("3bus").unwrap();
    // 1800/1000/200 MW dispatched against 800/800/1400 MW of load.
    let state = solve_powerflow(&case, &[18.0, 10.0, 2.0], &[8.0, 8.0, 14.0]).unwrap();
    let documented_mw = [508.0, 492.0, 708.0];
    for (i, &mw) in documented_mw.iter().enumerate() {
        assert!(
            (state.line_flow[i] * 100.0 - mw).abs() < 1.0,
            "line {}: {} MW",
            i + 1,
            state.line_flow[i] * 100.0
        );
    }
    assert!((state.theta[1] - -0.4).abs() < 1e-9);
    assert!((state.theta[2] - -0.8).abs() < 1e-9);
}

#[test]
fn triangle_baseline_optimum() {
    let (case, _) = load_fixture("3bus").unwrap();
    let loads = case.load_vector();
    let pre = solve_scopf(&case, &loads).unwrap();
    // The cheap unit is walled in by two post-contingency limits: losing
    // line 2 sends all of bus 1's surplus down line 1 (cap 11) and the
    // combined surplus of buses 1 and 2 down line 3 (cap 12).
    for (bus0, expected) in [(0, 19.0), (1, 9.0), (2, 2.0)] {
        assert!(
            (pre.dispatch[bus0] - expected).abs() < 1e-9,
            "bus {}: {}",
            bus0 + 1,
            pre.dispatch[bus0]
        );
    }
    assert!((pre.cost - 4330.0).abs() < 1e-6, "cost {}", pre.cost);

    // Secure by construction: base case and every single-line outage.
    let lodf = compute_lodf(&case);
    let screen = contingency_screen(&case, &pre.flows, &lodf);
    assert!(screen[0].loading <= 1.0 + 1e-9);
}

#[test]
fn inflated_loads_walk_the_operator_into_an_insecure_dispatch() {
    let (case, _) = load_fixture("3bus").unwrap();
    // The loads an operator would see after the canonical injection:
    // bus 1 raised 2 pu, buses 2 and 3 lowered 1 pu each.
    let seen = [10.0, 7.0, 13.0];
    let ems = solve_scopf(&case, &seen).unwrap();
    for (bus0, expected) in [(0, 20.0), (1, 9.0), (2, 1.0)] {
        assert!(
            (ems.dispatch[bus0] - expected).abs() < 1e-9,
            "bus {}: {}",
            bus0 + 1,
            ems.dispatch[bus0]
        );
    }
    assert!((ems.cost - 4130.0).abs() < 1e-6, "cost {}", ems.cost);
    // Cheaper than the honest optimum: the attack also lowers the bill.
    assert!(ems.cost < 4330.0);

    // Replay that dispatch against the real loads.
    let real = [8.0, 8.0, 14.0];
    let state = solve_powerflow(&case, &[20.0, 9.0, 1.0], &real).unwrap();
    let lodf = compute_lodf(&case);
    let over: Vec<(usize, usize)> = contingency_screen(&case, &state, &lodf)
        .into_iter()
        .filter(|e| e.loading > 1.0 + 1e-9)
        .map(|e| (e.line, e.outage))
        .collect();
    // Losing line 2 overloads lines 1 and 3; losing line 3 overloads
    // line 2; losing line 1 overloads nothing (line 2 lands exactly at
    // its limit).
    assert_eq!(over, vec![(0, 1), (2, 1), (1, 2)]);
    let exact_boundary = contingency_screen(&case, &state, &lodf)
        .into_iter()
        .find(|e| e.line == 1 && e.outage == 0)
        .unwrap();
    assert!((exact_boundary.loading - 1.0).abs() < 1e-9);
}

#[test]
fn fourteen_bus_baseline_optimum() {
    let (case, _) = load_fixture("ieee14").unwrap();
    let loads = case.load_vector();
    let pre = solve_scopf(&case, &loads).unwrap();
    assert!((pre.cost - 294.927).abs() < 1e-3, "cost {}", pre.cost);
    // The radial feeder is the only outage excluded from the screen.
    assert_eq!(pre.islanding_excluded, vec![13]);
    // Units at buses 1 and 8 are priced out entirely; bus 3 rides its
    // binding post-contingency export limit.
    assert_eq!(pre.dispatch[0], 0.0);
    assert_eq!(pre.dispatch[7], 0.0);
    assert!((pre.dispatch[2] - 0.95).abs() < 1e-6, "bus 3: {}", pre.dispatch[2]);
    let total: f64 = pre.dispatch.iter().sum();
    assert!((total - 2.448).abs() < 1e-9);
    assert!((evaluate_cost(&case, &pre.dispatch).unwrap() - pre.cost).abs() < 1e-9);
}

#[test]
fn fourteen_bus_two_compromised_buses_are_certified_hopeless() {
    let (case, _) = load_fixture("ieee14").unwrap();
    let loads = case.load_vector();
    let pre = solve_scopf(&case, &loads).unwrap();
    let mut limited = case.clone();
    limited.attacker_limits.max_buses = 2;
    let goal = SynthesisGoal {
        min_overload_pairs: 1,
        overload_margin: 0.05,
        cost_budget: pre.cost,
    };
    match synthesize(&limited, &pre, &goal).unwrap() {
        SynthesisOutcome::Unsat(cert) => {
            // 14 singletons + C(14,2) = 91 pairs, every one structurally dead.
            assert_eq!(cert.max_subset_size, 2);
            assert_eq!(cert.subsets_explored, 105);
            assert_eq!(cert.structurally_pruned, 105);
            assert_eq!(cert.rejected_by_measurement_budget, 0);
            assert_eq!(cert.rejected_by_replay, 0);
        }
        SynthesisOutcome::Sat(v) => panic!("two buses cannot move a state: {v:?}"),
    }
}

#[test]
fn fourteen_bus_three_compromised_buses_suffice() {
    let (case, _) = load_fixture("ieee14").unwrap();
    let loads = case.load_vector();
    let pre = solve_scopf(&case, &loads).unwrap();
    let goal = SynthesisGoal::from_case(&case, &pre);
    assert_eq!(goal.min_overload_pairs, 1);
    assert!((goal.overload_margin - 0.05).abs() < 1e-12);

    let vector = match synthesize(&case, &pre, &goal).unwrap() {
        SynthesisOutcome::Sat(v) => v,
        SynthesisOutcome::Unsat(c) => panic!("three buses should suffice: {c:?}"),
    };
    vector.check_invariants(&case).unwrap();

    // The minimal foothold is the load pocket around bus 3: inflate its
    // demand, hide the difference at its neighbors.
    let compromised: Vec<usize> = (0..case.num_buses())
        .filter(|&j| vector.compromised[j])
        .map(|j| j + 1)
        .collect();
    assert_eq!(compromised, vec![2, 3, 4]);
    assert!(vector.delta_bus[2] > 0.0, "bus 3 demand must look inflated");

    // Both orderings of the signature pair materialize: line 6 overloads
    // when line 3 trips, and line 3 overloads when line 6 trips.
    let pairs: Vec<(usize, usize)> =
        vector.overload_pairs.iter().map(|&(i, k, _)| (i, k)).collect();
    assert!(pairs.contains(&(5, 2)), "{pairs:?}");
    assert!(pairs.contains(&(2, 5)), "{pairs:?}");

    let report = verify(&case, &pre, &vector).unwrap();
    assert!(report.stealthy);
    assert!(report.cost_delta.unwrap() <= 1e-6);
    assert!(report.confirmed_at_margin(goal.overload_margin) >= 1);
    let EmsView::Redispatch(ems) = &report.ems_view else {
        panic!("re-optimization must absorb the shifted loads");
    };
    assert!(ems.base_violations.is_empty());
    assert!(ems.screen[0].loading <= 1.0 + 1e-9, "operator sees a violation");
    let real = report.true_with_ems_dispatch.as_ref().unwrap();
    assert!(real.screen[0].loading > 1.05, "reality must be insecure");
}

mod common;

use common::{naive_components, naive_e3, Flat};
use diskalloc::allocator::{
    check_allocation_feasible, evaluate_objective, exact_solve, heuristic_solve, local_search, spread_allocate,
    ExactOptions, StageProblem,
};
use diskalloc::io::worked_example;
use diskalloc::model::{Accounting, Allocation, DiskId, DiskSpec, FileId, RelocationMove};
use diskalloc::relation::{detect_communities, integrate_relations};
use diskalloc::restructuring::{
    aligned_relocation_diff, plan_trajectory, recorded_trajectories, relocation_diff, restructure_one_stage,
    RestructureMode, RestructuringProblem, TrajectoryOptions, TrajectoryStrategy,
};
use diskalloc::Parallelism;
use std::collections::BTreeSet;

fn x1() -> Allocation {
    Allocation::from_bins(&[(1, &[1, 4, 6]), (2, &[2, 5, 7]), (3, &[3, 8])])
}
fn x2() -> Allocation {
    Allocation::from_bins(&[(1, &[1, 2, 7]), (2, &[3, 4, 8]), (3, &[5, 6])])
}
fn x3_recorded() -> Allocation {
    Allocation::from_bins(&[(1, &[2, 3, 7]), (2, &[1, 5, 8]), (3, &[4, 6])])
}
fn x2_star() -> Allocation {
    Allocation::from_bins(&[(1, &[4, 5, 6]), (2, &[1, 2, 7]), (3, &[3, 8])])
}
fn x3_star() -> Allocation {
    Allocation::from_bins(&[(1, &[4, 5, 6]), (2, &[1, 3, 7]), (3, &[2, 8])])
}

fn problem(stage: u32) -> StageProblem {
    StageProblem::from_instance(&worked_example(), stage).unwrap()
}

fn edges(list: &[(u32, u32)]) -> BTreeSet<(u32, u32)> {
    list.iter().copied().collect()
}

fn mv(file: u32, from: u32, to: u32) -> RelocationMove {
    RelocationMove {
        file: FileId(file),
        from: DiskId(from),
        to: DiskId(to),
    }
}

#[test]
fn bundled_instance_shape() {
    let inst = worked_example();
    assert_eq!(inst.files.len(), 8);
    assert_eq!(inst.disks.iter().map(|d| d.capacity).collect::<Vec<_>>(), vec![3, 3, 2]);
    assert_eq!(inst.stages.len(), 3);
    for (stage, alloc) in [(1, x1()), (2, x2()), (2, x2_star()), (3, x3_recorded()), (3, x3_star())] {
        assert!(check_allocation_feasible(&alloc, &problem(stage)).feasible());
    }
}

#[test]
fn inferred_capacities_explain_the_two_move_repair() {
    // Under (3, 3, 2) no single move repairs X1 for stage 2; under (3, 3, 3) one does.
    let mut inst = worked_example();
    let flat = Flat::new(&inst, 2);
    let start = flat.encode(&x1());
    assert_eq!(flat.restructure(&start, 1).0, 1.0);
    assert_eq!(flat.restructure(&start, 2).0, 0.0);
    inst.disks[2] = DiskSpec { id: DiskId(3), capacity: 3 };
    let roomy = Flat::new(&inst, 2);
    assert_eq!(roomy.restructure(&start, 1).0, 0.0);
}

#[test]
fn integrated_relations_match_tables() {
    let inst = worked_example();
    let table3 = edges(&[(1, 2), (1, 3), (2, 3), (4, 5), (6, 7), (6, 8), (7, 8)]);
    let table6 = edges(&[(1, 4), (1, 5), (4, 5), (2, 3), (2, 6), (3, 6), (7, 8)]);
    let table9 = edges(&[(1, 2), (1, 4), (2, 4), (3, 5), (3, 6), (5, 6), (7, 8)]);
    for (stage, table) in inst.stages.iter().zip([table3, table6, table9]) {
        let got: BTreeSet<(u32, u32)> = integrate_relations(stage).edges.iter().map(|(a, b)| (a.0, b.0)).collect();
        assert_eq!(got, table);
        assert_eq!(got, naive_e3(stage));
    }
}

#[test]
fn communities_match_components() {
    let inst = worked_example();
    let expected: [&[&[u32]]; 3] = [
        &[&[1, 2, 3], &[4, 5], &[6, 7, 8]],
        &[&[1, 4, 5], &[2, 3, 6], &[7, 8]],
        &[&[1, 2, 4], &[3, 5, 6], &[7, 8]],
    ];
    for (stage, want) in inst.stages.iter().zip(expected) {
        let got: Vec<Vec<u32>> = detect_communities(&integrate_relations(stage), &stage.active_files, 3)
            .into_iter()
            .map(|c| c.members.iter().map(|f| f.0).collect())
            .collect();
        let want: Vec<Vec<u32>> = want.iter().map(|c| c.to_vec()).collect();
        assert_eq!(got, want);
        let files: Vec<u32> = stage.active_files.iter().map(|f| f.0).collect();
        assert_eq!(got, naive_components(&files, &naive_e3(stage)));
    }
}

#[test]
fn spread_reproduces_stage_solutions() {
    let stage3 = Allocation::from_bins(&[(1, &[1, 3, 7]), (2, &[2, 5, 8]), (3, &[4, 6])]);
    for (stage, want) in [(1, x1()), (2, x2()), (3, stage3)] {
        let p = problem(stage);
        let out = spread_allocate(&p.communities(), &p, None).unwrap();
        assert!(!out.degraded);
        assert_eq!(out.allocation, want);
        assert_eq!(evaluate_objective(&out.allocation, &p).unwrap().value, 0.0);
    }
}

#[test]
fn stage_three_spread_costs_four_moves_from_x2() {
    let p = problem(3);
    let spread = spread_allocate(&p.communities(), &p, None).unwrap().allocation;
    let aligned = aligned_relocation_diff(&x2(), &spread, &worked_example().disk_ids(), 1.0).unwrap();
    assert_eq!(aligned.plan.total_cost, 4.0);
    assert_eq!(relocation_diff(&x2(), &spread, 1.0).unwrap().len(), 4);
}

#[test]
fn objective_values() {
    assert_eq!(evaluate_objective(&x1(), &problem(1)).unwrap().value, 0.0);
    for (alloc, stage, pair) in [(x3_star(), 3, (5, 6)), (x2_star(), 2, (4, 5))] {
        let report = evaluate_objective(&alloc, &problem(stage)).unwrap();
        assert_eq!(report.value, 1.0);
        assert_eq!(report.terms.len(), 1);
        assert_eq!((report.terms[0].first.0, report.terms[0].second.0), pair);
    }
    let singletons = Allocation::from_bins(&[(1, &[1]), (2, &[2])]);
    let mut inst = worked_example();
    inst.stages[0].active_files = [FileId(1), FileId(2)].into();
    inst.stages[0].precedence.retain(|(a, b)| a.0 <= 2 && b.0 <= 2);
    inst.stages[0].concurrency.clear();
    let p = StageProblem::from_instance(&inst, 1).unwrap();
    assert_eq!(evaluate_objective(&singletons, &p).unwrap().value, 0.0);
}

#[test]
fn relocation_accounting() {
    let disks = worked_example().disk_ids();
    let a12 = aligned_relocation_diff(&x1(), &x2(), &disks, 1.0).unwrap();
    assert_eq!(a12.plan.total_cost, 3.0);
    assert_eq!(a12.plan.moves, vec![mv(1, 1, 2), mv(4, 1, 3), mv(5, 2, 1)]);
    let a23 = aligned_relocation_diff(&x2(), &x3_recorded(), &disks, 1.0).unwrap();
    assert_eq!(a23.plan.total_cost, 4.0);
    assert_eq!(a23.plan.moves, vec![mv(1, 1, 2), mv(3, 2, 1), mv(4, 2, 3), mv(5, 3, 2)]);
    let star = relocation_diff(&x2_star(), &x3_star(), 1.0).unwrap();
    assert_eq!(star.total_cost, 2.0);
    assert_eq!(star.moves, vec![mv(2, 2, 3), mv(3, 3, 2)]);
    // Taken label by label, the two independent solutions differ in seven files.
    assert_eq!(relocation_diff(&x1(), &x2(), 1.0).unwrap().total_cost, 7.0);
    for (from, to) in [(x1(), x2()), (x2(), x3_recorded()), (x2_star(), x3_star())] {
        let plan = relocation_diff(&from, &to, 1.0).unwrap();
        assert_eq!(plan.apply(&from).unwrap(), to);
    }
}

#[test]
fn local_search_repairs_x1_for_stage_two() {
    let p = problem(2);
    assert_eq!(evaluate_objective(&x1(), &p).unwrap().value, 1.0);
    let out = local_search(&x1(), &p, None).unwrap();
    assert_eq!(out.objective, 0.0);
}

#[test]
fn exact_optima_match_brute_force() {
    let inst = worked_example();
    for stage in 1..=3 {
        let flat = Flat::new(&inst, stage);
        let (psi, assign) = flat.optimum();
        let sol = exact_solve(&problem(stage), ExactOptions::default()).unwrap();
        assert_eq!(sol.objective, psi);
        assert_eq!(sol.objective, 0.0);
        assert_eq!(sol.allocation, flat.decode(&assign));
    }
}

#[test]
fn exact_restructuring_stage_two_budget_two() {
    let p = problem(2);
    let rp = RestructuringProblem::new(x1(), p, 2.0, 1.0, 12, Parallelism::default()).unwrap();
    let out = restructure_one_stage(&rp, RestructureMode::Exact, Parallelism::default()).unwrap();
    assert_eq!(out.proximity, 0.0);
    assert_eq!(out.plan.total_cost, 2.0);
    assert_eq!(out.allocation, Allocation::from_bins(&[(1, &[1, 6, 8]), (2, &[2, 5, 7]), (3, &[3, 4])]));

    let flat = Flat::new(&worked_example(), 2);
    let (psi, moves, assign) = flat.restructure(&flat.encode(&x1()), 2);
    assert_eq!((psi, moves), (0.0, 2));
    assert_eq!(out.allocation, flat.decode(&assign));

    let greedy = restructure_one_stage(&rp, RestructureMode::Greedy, Parallelism::default()).unwrap();
    assert!(greedy.proximity >= out.proximity);
    assert!(greedy.plan.total_cost <= 2.0);
}

#[test]
fn recorded_restructuring_has_proximity_one() {
    let p = problem(2);
    let rp = RestructuringProblem::new(x1(), p, 2.0, 1.0, 12, Parallelism::default()).unwrap();
    let replay = diskalloc::model::RelocationPlan::new(vec![mv(1, 1, 2), mv(5, 2, 1)], 1.0);
    let reached = replay.apply(&x1()).unwrap();
    assert_eq!(reached, x2_star());
    let psi = evaluate_objective(&reached, &rp.target).unwrap().value;
    assert_eq!(psi - rp.reference.value, 1.0);
}

#[test]
fn zero_budget_keeps_previous() {
    let rp = RestructuringProblem::new(x1(), problem(2), 0.0, 1.0, 12, Parallelism::default()).unwrap();
    let out = restructure_one_stage(&rp, RestructureMode::Exact, Parallelism::default()).unwrap();
    assert_eq!(out.allocation, x1());
    assert_eq!(out.proximity, 1.0);
}

#[test]
fn recorded_trajectories_totals() {
    let rec = recorded_trajectories(&worked_example()).unwrap();
    assert_eq!(rec.optimal.total_modification_cost, 7.0);
    assert_eq!(
        rec.optimal.transitions.iter().map(|t| t.plan.total_cost).collect::<Vec<_>>(),
        vec![3.0, 4.0]
    );
    assert!(rec.optimal.transitions.iter().all(|t| t.accounting == Accounting::Aligned));
    assert_eq!(rec.restructured.total_modification_cost, 4.0);
    let rho: Vec<f64> = rec.restructured.stages.iter().map(|s| s.proximity).collect();
    assert_eq!(rho, vec![0.0, 1.0, 1.0]);
    assert_eq!(rec.restructured.stages[1].allocation, x2_star());
    assert_eq!(rec.restructured.stages[2].allocation, x3_star());
    for (w, t) in rec.restructured.stages.windows(2).zip(&rec.restructured.transitions) {
        assert_eq!(t.plan.apply(&w[0].allocation).unwrap(), w[1].allocation);
    }
}

#[test]
fn replay_strategy_returns_restructured_trajectory() {
    let t = plan_trajectory(&worked_example(), TrajectoryStrategy::Replay, &[], &TrajectoryOptions::default()).unwrap();
    assert_eq!(t.total_modification_cost, 4.0);
    let mut other = worked_example();
    other.relocation_unit_cost = 2.0;
    assert!(plan_trajectory(&other, TrajectoryStrategy::Replay, &[], &TrajectoryOptions::default()).is_err());
}

#[test]
fn independent_trajectory_costs_seven() {
    for solver in [
        diskalloc::restructuring::StageSolver::Auto,
        diskalloc::restructuring::StageSolver::Heuristic,
    ] {
        let opts = TrajectoryOptions {
            solver,
            ..TrajectoryOptions::default()
        };
        let t = plan_trajectory(&worked_example(), TrajectoryStrategy::IndependentOptimal, &[], &opts).unwrap();
        assert_eq!(t.total_modification_cost, 7.0);
        assert_eq!(t.stages[0].allocation, x1());
        assert_eq!(t.stages[1].allocation, x2());
        assert!(t.stages.iter().all(|s| s.objective == 0.0 && s.proximity == 0.0));
        for (w, tr) in t.stages.windows(2).zip(&t.transitions) {
            assert!(tr.plan.apply(&w[0].allocation).unwrap().same_partition(&w[1].allocation));
        }
    }
}

#[test]
fn sequential_exact_trajectory() {
    let inst = worked_example();
    let t = plan_trajectory(
        &inst,
        TrajectoryStrategy::SequentialRestructured,
        &[2.0, 2.0],
        &TrajectoryOptions::default(),
    )
    .unwrap();
    assert_eq!(t.total_modification_cost, 2.0);
    assert!(t.stages.iter().all(|s| s.proximity == 0.0));
    assert_eq!(t.transitions[1].plan.total_cost, 0.0);

    // Oracle: the stage-3 restructuring from the stage-2 result needs no moves.
    let flat = Flat::new(&inst, 3);
    let (psi, moves, _) = flat.restructure(&flat.encode(&t.stages[1].allocation), 2);
    assert_eq!((psi, moves), (0.0, 0));
    for (w, tr) in t.stages.windows(2).zip(&t.transitions) {
        assert_eq!(tr.plan.apply(&w[0].allocation).unwrap(), w[1].allocation);
    }

    assert!(plan_trajectory(&inst, TrajectoryStrategy::SequentialRestructured, &[2.0], &TrajectoryOptions::default()).is_err());
}

#[test]
fn heuristic_solve_stage_three_is_optimal() {
    let sol = heuristic_solve(&problem(3), true).unwrap();
    assert_eq!(sol.objective, 0.0);
}

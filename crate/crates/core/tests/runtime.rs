use ppcm_core::linalg::{dist2, norm2};
use ppcm_core::runtime::{Message, MessageBus, Phase, Simulation};
use ppcm_core::{
    adjacency_uniform, build_topology, consensus_gap, generate_lsq, generate_lsq_instance, oracle_solve, simulate, solve,
    toy_instance, BlockVector, ConsensusProblem, ConvexSet, DenseMatrix, Error, LsqInstance, Method, PrimalDualPoint, SimulationConfig,
    SolverConfig, Termination, TopologyKind, WagmStep,
};

fn toy_problem() -> ConsensusProblem {
    let graph = adjacency_uniform(&build_topology(TopologyKind::Complete, 2, 0).unwrap());
    toy_instance().consensus_problem(graph, &ConvexSet::whole_space(1)).unwrap()
}

fn lsq_on(kind: TopologyKind, p: usize, set: ConvexSet) -> ConsensusProblem {
    let inst = generate_lsq_instance(40 * p, 5, p, 3).unwrap();
    inst.consensus_problem(adjacency_uniform(&build_topology(kind, p, 1).unwrap()), &set).unwrap()
}

#[test]
fn toy_ppcm_reaches_consensus_at_two() {
    let (xs, t) = simulate(&toy_problem(), &SimulationConfig::default()).unwrap();
    assert!(t.converged());
    assert!(t.rounds.last().unwrap().global_e <= 1e-3);
    for x in &xs {
        assert!((x[0] - 2.0).abs() <= 1e-3, "x = {x:?}");
    }
    let topo = build_topology(TopologyKind::Complete, 2, 0).unwrap();
    assert!(consensus_gap(&topo, &xs) <= 1e-2);
}

#[test]
fn stationary_start_stops_after_one_round() {
    let cp = toy_problem();
    let mut sim = Simulation::new(&cp, SimulationConfig::default()).unwrap();
    let lambda = BlockVector::from_blocks(&[vec![2.0], vec![-2.0]]).unwrap();
    sim.set_state(&BlockVector::replicate(&[2.0], 2), &lambda).unwrap();
    let out = sim.run_round_ppcm(false).unwrap();
    assert!(out.stop);
    assert_eq!(out.global_e, 0.0);
}

#[test]
fn simulator_matches_centralized_unit_steps() {
    let (_, cp) = generate_lsq(200, 20, 4, 5).unwrap();
    let mut sim = Simulation::new(&cp, SimulationConfig { tol: 1e-300, ..SimulationConfig::default() }).unwrap();
    let cfg = SolverConfig { tol: 1e-300, ..SolverConfig::default() };
    let u0 = PrimalDualPoint::zeros(4, 20);
    for k in 1..=100 {
        sim.run_round_ppcm(false).unwrap();
        let central = solve(&cp, &SolverConfig { max_iters: k, ..cfg.clone() }, &u0, None).unwrap().point;
        let dx = sim.stacked_x().as_slice().iter().zip(central.x.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let dl = sim.stacked_lambda().as_slice().iter().zip(central.lambda.as_slice()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(dx <= 1e-12 && dl <= 1e-12, "round {k}: dx {dx}, dl {dl}");
    }
}

#[test]
fn reruns_are_bitwise_identical() {
    let cp = lsq_on(TopologyKind::ErdosRenyi { prob: 0.5 }, 6, ConvexSet::whole_space(5));
    let cfg = SimulationConfig { random_start: true, seed: 11, ..SimulationConfig::default() };
    let (xa, ta) = simulate(&cp, &cfg).unwrap();
    let (xb, tb) = simulate(&cp, &cfg).unwrap();
    assert_eq!(xa, xb);
    assert_eq!(ta, tb);
    let other = SimulationConfig { seed: 12, ..cfg };
    assert_ne!(simulate(&cp, &other).unwrap().1.rounds[0], ta.rounds[0]);
}

#[test]
fn every_round_moves_the_expected_messages() {
    for (kind, p) in [(TopologyKind::Ring, 5), (TopologyKind::Star, 6), (TopologyKind::Complete, 4)] {
        let cp = lsq_on(kind.clone(), p, ConvexSet::whole_space(5));
        let edges = cp.graph().topology().edges().len();
        let (_, t) = simulate(&cp, &SimulationConfig { max_iters: 20, ..SimulationConfig::default() }).unwrap();
        for r in &t.rounds {
            assert_eq!(r.messages.payload(), 3 * 2 * edges, "{kind:?}");
            assert_eq!((r.messages.error_reports, r.messages.verdicts), (p, p));
            assert!(r.max_mu.unwrap() <= 0.9);
        }
    }
}

#[test]
fn bus_enforces_locality() {
    let ring = build_topology(TopologyKind::Ring, 4, 0).unwrap();
    let mut bus = MessageBus::new(&ring);
    let msg = |s| Message::PhaseB { sender_id: s, x_tilde: vec![0.0] };
    assert!(matches!(bus.send(0, 2, msg(0)), Err(Error::ProtocolViolation(_))));
    assert!(matches!(bus.send(0, 1, msg(3)), Err(Error::ProtocolViolation(_))));
    assert!(matches!(bus.send(0, 1, Message::Verdict { stop: true }), Err(Error::ProtocolViolation(_))));

    bus.send(3, 0, msg(3)).unwrap();
    bus.send(1, 0, msg(1)).unwrap();
    let got = bus.receive(0, Phase::B).unwrap();
    assert_eq!(got, vec![msg(1), msg(3)]);

    bus.send(1, 0, msg(1)).unwrap();
    assert!(matches!(bus.receive(0, Phase::B), Err(Error::ProtocolViolation(_))));

    bus.report(0, 1.0);
    assert!(matches!(bus.reduce_reports(), Err(Error::ProtocolViolation(_))));
}

#[test]
fn iterates_stay_feasible_for_both_methods() {
    let set = ConvexSet::uniform_box(5, -0.05, 0.05).unwrap();
    let cp = lsq_on(TopologyKind::Complete, 4, set.clone());
    for cfg in [
        SimulationConfig { max_iters: 200, ..SimulationConfig::default() },
        SimulationConfig { max_iters: 200, ..SimulationConfig::wagm(WagmStep::Diminishing { c: 0.01 }) },
    ] {
        let (_, t) = simulate(&cp, &cfg).unwrap();
        for r in &t.rounds {
            for a in &r.agents {
                assert!(set.contains(&a.x, 1e-9).unwrap());
            }
        }
    }
}

#[test]
fn wagm_fixed_point_and_averaging() {
    // Both agents hold ½(x − 2)², so the average of the blocks is what moves.
    let b = DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
    let inst = LsqInstance::new(b, vec![2.0, 2.0], 2, None).unwrap();
    let graph = adjacency_uniform(&build_topology(TopologyKind::Complete, 2, 0).unwrap());
    let cp = inst.consensus_problem(graph, &ConvexSet::whole_space(1)).unwrap();
    let mut sim = Simulation::new(&cp, SimulationConfig::wagm(WagmStep::Fixed { alpha: 0.5 })).unwrap();

    sim.set_state(&BlockVector::from_blocks(&[vec![1.0], vec![5.0]]).unwrap(), &BlockVector::zeros(2, 1)).unwrap();
    let out = sim.run_round_wagm(0, false).unwrap();
    assert_eq!(sim.stacked_x().as_slice(), &[2.5, 2.5]);
    assert_eq!(out.global_e, 2.5);

    sim.set_state(&BlockVector::replicate(&[2.0], 2), &BlockVector::zeros(2, 1)).unwrap();
    let out = sim.run_round_wagm(1, false).unwrap();
    assert_eq!(sim.stacked_x().as_slice(), &[2.0, 2.0]);
    assert_eq!(out.global_e, 0.0);
    assert!(out.stop);
}

#[test]
fn wagm_drifts_toward_toy_optimum() {
    let cp = toy_problem();
    let cfg = SimulationConfig { max_iters: 2000, tol: 1e-12, ..SimulationConfig::wagm(WagmStep::Diminishing { c: 0.1 }) };
    let (_, t) = simulate(&cp, &cfg).unwrap();
    let errs: Vec<f64> = t.rounds.iter().map(|r| (r.agents[0].x[0] - 2.0).abs()).collect();
    assert!(errs.windows(2).all(|w| w[1] <= w[0]));
    assert!(*errs.last().unwrap() < 1.0);
    assert!(t.rounds.iter().all(|r| r.max_mu.is_none() && r.messages.payload() == 2));
}

#[test]
fn wagm_needs_a_complete_graph() {
    let cp = lsq_on(TopologyKind::Ring, 4, ConvexSet::whole_space(5));
    let cfg = SimulationConfig { method: Method::Wagm, ..SimulationConfig::default() };
    assert!(matches!(simulate(&cp, &cfg), Err(Error::TopologyUnsupported(_))));
}

#[test]
fn max_iterations_are_flagged() {
    let cp = lsq_on(TopologyKind::Ring, 4, ConvexSet::whole_space(5));
    let (_, t) = simulate(&cp, &SimulationConfig { max_iters: 3, ..SimulationConfig::default() }).unwrap();
    assert_eq!(t.summary.status, Termination::MaxIterations);
    assert_eq!(t.summary.rounds, 3);
}

#[test]
fn desk_instance_agents_match_oracle() {
    let (inst, cp) = generate_lsq(2000, 100, 4, 1).unwrap();
    let x_star = oracle_solve(&inst).unwrap();
    let (xs, mut t) = simulate(&cp, &SimulationConfig::default()).unwrap();
    assert!(t.converged());
    for x in &xs {
        assert!(dist2(x, &x_star) <= 1e-3 * norm2(&x_star));
    }
    t.attach_oracle(&x_star);
    assert_eq!(t.summary.per_agent_error.as_ref().unwrap().len(), 4);
}

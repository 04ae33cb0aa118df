//! Cross-checks of the leader-selection pipeline: the combinatorial
//! stability certificate against an eigenvalue oracle, the relaxation
//! bound against exhaustive enumeration, the published single-leader
//! picks on the eight-node benchmark, the Sherman-Morrison surrogate
//! against direct inversion, and the value invariance of the exhaustive
//! optimum under edge reversal on balanced networks.

mod common;

use common::*;
use poslin::leadersel::{
    exhaustive_oracle, greedy_swap, is_stabilizing, lower_bound, select_leaders,
    surrogate_bound_table, LeaderError, LeaderProblem, Strategy,
};
use poslin::metrics::{symmetric_part_bounds, Metric, MetricsError};
use poslin::netgraph::DirectedNetwork;
use poslin::{Matrix, Vector};
use rand::seq::SliceRandom;
use rand::Rng;

fn branch_network() -> DirectedNetwork {
    DirectedNetwork::new(4, [(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (1, 3, 1.0)]).unwrap()
}

fn closed_loop(net: &DirectedNetwork, leaders: &[usize], kappa: f64) -> Matrix {
    let n = net.num_nodes();
    let mut a = -net.laplacian();
    for &i in leaders {
        a[(i, i)] -= kappa;
    }
    let _ = n;
    a
}

#[test]
fn stability_certificate_matches_the_eigenvalue_oracle() {
    let mut rng = rng(0x1EAD);
    for trial in 0..500 {
        let n = 2 + trial % 7;
        let net = random_digraph(&mut rng, n, 0.35);
        let size = rng.random_range(0..=n);
        let mut nodes: Vec<usize> = (0..n).collect();
        nodes.shuffle(&mut rng);
        let leaders: Vec<usize> = nodes.into_iter().take(size).collect();
        let kappa = [0.3, 1.0, 2.0][trial % 3];
        let claimed = is_stabilizing(&net, &leaders);
        let abscissa = metzler_abscissa_power(&closed_loop(&net, &leaders, kappa));
        assert_eq!(
            claimed,
            abscissa < -1e-8,
            "trial {trial}: n={n} leaders={leaders:?} abscissa={abscissa:.3e}"
        );
    }
}

#[test]
fn branch_network_singleton_optimum_is_a_stabilizing_root() {
    let p = LeaderProblem::new(branch_network(), 1, 1.0, Metric::H2).unwrap();
    let res = exhaustive_oracle(&p).unwrap();
    assert!(res.leaders == vec![0] || res.leaders == vec![1]);
    let j0 = p.set_objective(&[0]).unwrap();
    let j1 = p.set_objective(&[1]).unwrap();
    assert_eq!(res.j, j0.min(j1));
    assert!(res.j >= res.lower_bound - 1e-8);
}

#[test]
fn benchmark_single_leader_picks_match_the_published_ones() {
    let net = eight_node_network();

    let p = LeaderProblem::new(net.clone(), 1, 1.0, Metric::H2).unwrap();
    let exh = select_leaders(&p, Strategy::Exhaustive).unwrap();
    assert_eq!(exh.leaders, vec![6], "exhaustive pick");

    let rounded = select_leaders(&p, Strategy::Round).unwrap();
    assert_eq!(rounded.leaders, vec![3], "rounding pick");
    assert!(rounded.note.is_none());

    let undirected = select_leaders(&p, Strategy::Undirected).unwrap();
    assert_eq!(undirected.leaders, vec![7], "undirected pick");
    assert!(undirected.note.is_none());

    assert!(exh.j <= rounded.j + 1e-12);
    assert!(exh.j <= undirected.j + 1e-12);
    assert!(exh.lower_bound <= exh.j + 1e-8);
    assert!(exh.gap <= 0.25, "gap {}", exh.gap);

    let swapped = select_leaders(&p, Strategy::RoundSwap).unwrap();
    assert!(swapped.j <= rounded.j + 1e-12);

    let best = select_leaders(&p, Strategy::BestOf).unwrap();
    let min_j = rounded.j.min(swapped.j).min(undirected.j);
    assert!((best.j - min_j).abs() <= 1e-12 * (1.0 + min_j));
}

#[test]
fn relaxation_bound_is_monotone_in_leader_count() {
    let net = eight_node_network();
    for metric in [Metric::H2, Metric::Hinf] {
        let mut prev = f64::INFINITY;
        for n_leaders in 1..=8 {
            let p = LeaderProblem::new(net.clone(), n_leaders, 1.0, metric).unwrap();
            let (j_lb, _) = lower_bound(&p).unwrap();
            assert!(
                j_lb <= prev + 1e-7 * (1.0 + j_lb.abs()),
                "{}: lb({n_leaders}) = {j_lb} above lb({}) = {prev}",
                metric.name(),
                n_leaders - 1
            );
            prev = j_lb;
        }
    }
}

#[test]
fn relaxation_lower_bounds_the_exhaustive_optimum() {
    let four = DirectedNetwork::new(
        4,
        [
            (0, 1, 1.0),
            (1, 2, 1.0),
            (2, 3, 1.0),
            (3, 0, 1.0),
            (0, 2, 0.7),
            (2, 0, 1.3),
        ],
    )
    .unwrap();
    let mut pair = Vec::new();
    for (a, b) in [(0usize, 1usize), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3)] {
        pair.push((a, b, 1.0));
    }
    let two_islands = DirectedNetwork::new(6, pair).unwrap();

    for metric in [Metric::H2, Metric::Hinf] {
        let p = LeaderProblem::new(four.clone(), 2, 1.0, metric).unwrap();
        let res = exhaustive_oracle(&p).unwrap();
        assert!(
            res.lower_bound <= res.j + 1e-8,
            "{}: lb {} above optimum {}",
            metric.name(),
            res.lower_bound,
            res.j
        );

        let p2 = LeaderProblem::new(two_islands.clone(), 2, 1.0, metric).unwrap();
        let res2 = exhaustive_oracle(&p2).unwrap();
        assert!(res2.lower_bound <= res2.j + 1e-8);
        assert!(res2.leaders.iter().any(|&i| i < 3) && res2.leaders.iter().any(|&i| i >= 3));

        let infeasible = LeaderProblem::new(two_islands.clone(), 1, 1.0, metric).unwrap();
        assert!(matches!(
            lower_bound(&infeasible),
            Err(LeaderError::Infeasible { .. })
        ));
        assert!(matches!(
            exhaustive_oracle(&infeasible),
            Err(LeaderError::Infeasible { .. })
        ));
    }
}

#[test]
fn sandwich_ordering_holds_on_random_networks() {
    let mut rng = rng(0x5A17);
    for seed in 0..10 {
        let n = 4 + seed % 4;
        let net = random_strongly_connected_net(&mut rng, n, n);
        let n_leaders = 1 + seed % 2;
        let metric = if seed % 2 == 0 { Metric::H2 } else { Metric::Hinf };
        let p = LeaderProblem::new(net.clone(), n_leaders, 1.0, metric).unwrap();
        let exh = exhaustive_oracle(&p).unwrap();
        assert!(exh.lower_bound <= exh.j + 1e-8, "seed {seed}");
        for strategy in [Strategy::Round, Strategy::RoundSwap, Strategy::Undirected, Strategy::BestOf] {
            let res = select_leaders(&p, strategy).unwrap();
            assert!(
                exh.j <= res.j + 1e-9 * (1.0 + exh.j),
                "seed {seed} {}: exhaustive {} above candidate {}",
                strategy.name(),
                exh.j,
                res.j
            );
            assert!(res.lower_bound <= res.j + 1e-8);
            assert!(is_stabilizing(&net, &res.leaders), "seed {seed}");
            let abscissa = metzler_abscissa_power(&closed_loop(&net, &res.leaders, 1.0));
            assert!(abscissa < -1e-8, "seed {seed}");
        }
    }
}

#[test]
fn greedy_swap_lands_in_the_exhaustive_top_three() {
    let mut rng = rng(0x6EED);
    let mut hits = 0;
    for seed in 0..50 {
        let net = random_strongly_connected_net(&mut rng, 7, 8);
        let p = LeaderProblem::new(net, 2, 1.0, Metric::H2).unwrap();

        let mut ranked: Vec<(f64, Vec<usize>)> = Vec::new();
        for a in 0..7 {
            for b in a + 1..7 {
                let j = p.set_objective(&[a, b]).unwrap();
                ranked.push((j, vec![a, b]));
            }
        }
        ranked.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap().then(x.1.cmp(&y.1)));

        let res = select_leaders(&p, Strategy::RoundSwap).unwrap();
        let round = select_leaders(&p, Strategy::Round).unwrap();
        assert!(res.j <= round.j + 1e-12, "seed {seed}");
        if ranked[..3].iter().any(|(_, set)| *set == res.leaders) {
            hits += 1;
        }
    }
    assert!(hits >= 40, "greedy swap hit the top three on {hits}/50 seeds");
}

#[test]
fn edge_reversal_preserves_the_exhaustive_optimal_value() {
    let mut rng = rng(0xBA1A);
    for seed in 0..12 {
        let n = 4 + seed % 3;
        let net = random_balanced_network(&mut rng, n);
        assert!(net.is_balanced());
        let n_leaders = 1 + seed % 2;
        let metric = if seed % 2 == 0 { Metric::H2 } else { Metric::Hinf };
        let fwd = LeaderProblem::new(net.clone(), n_leaders, 1.0, metric).unwrap();
        let rev = LeaderProblem::new(net.reverse(), n_leaders, 1.0, metric).unwrap();
        let jf = exhaustive_oracle(&fwd).unwrap().j;
        let jr = exhaustive_oracle(&rev).unwrap().j;
        assert!(
            (jf - jr).abs() <= 1e-9 * (1.0 + jf),
            "seed {seed}: forward {jf} reversed {jr}"
        );
    }
}

#[test]
fn sherman_morrison_bounds_match_direct_inversion() {
    let mut rng = rng(0x54AD);
    for seed in 0..4 {
        let net = random_undirected_net(&mut rng, 7, 3 + seed);
        let l = net.laplacian();
        for metric in [Metric::H2, Metric::Hinf] {
            for n_leaders in [1, 2, 3, 4, 5, 6, 7] {
                let p = LeaderProblem::new(net.clone(), n_leaders, 0.9, metric).unwrap();
                let table = surrogate_bound_table(&p).unwrap();
                for (set, bound) in &table {
                    let mut u = Vector::zeros(7);
                    for &i in set {
                        u[i] = 0.9;
                    }
                    match symmetric_part_bounds(&l, &u) {
                        Ok((h2, hinf)) => {
                            let direct = match metric {
                                Metric::H2 => h2,
                                Metric::Hinf => hinf,
                            };
                            assert!(
                                (bound - direct).abs() <= 1e-9 * (1.0 + direct.abs()),
                                "seed {seed} {} {set:?}: {bound} vs {direct}",
                                metric.name()
                            );
                        }
                        Err(MetricsError::Singular) => {
                            assert!(bound.is_infinite(), "seed {seed} {set:?}");
                        }
                        Err(e) => panic!("unexpected error {e}"),
                    }
                }
            }
        }
    }

    let mut pair = Vec::new();
    for (a, b) in [(0usize, 1usize), (1, 2), (3, 4), (4, 5)] {
        pair.push((a, b, 1.0));
        pair.push((b, a, 1.0));
    }
    let islands = DirectedNetwork::new(6, pair).unwrap();
    let p = LeaderProblem::new(islands, 2, 1.0, Metric::H2).unwrap();
    for (set, bound) in &surrogate_bound_table(&p).unwrap() {
        let covers = set.iter().any(|&i| i < 3) && set.iter().any(|&i| i >= 3);
        assert_eq!(bound.is_finite(), covers, "set {set:?}");
    }
}

#[test]
fn midrange_surrogate_falls_back_to_rounding() {
    let net = eight_node_network();
    let p = LeaderProblem::new(net, 4, 1.0, Metric::H2).unwrap();
    let undirected = select_leaders(&p, Strategy::Undirected).unwrap();
    let rounded = select_leaders(&p, Strategy::Round).unwrap();
    assert_eq!(undirected.method, "undirected");
    assert!(undirected.note.as_deref().is_some_and(|s| s.contains("fell back")));
    assert_eq!(undirected.leaders, rounded.leaders);
    assert!(undirected.j.is_finite());
}

#[test]
fn full_leader_count_closes_the_gap() {
    let net = eight_node_network();
    let p = LeaderProblem::new(net, 8, 1.0, Metric::H2).unwrap();
    let res = select_leaders(&p, Strategy::BestOf).unwrap();
    assert_eq!(res.leaders, (0..8).collect::<Vec<_>>());
    assert!(res.gap.abs() <= 1e-6, "gap {}", res.gap);
}

#[test]
fn greedy_swap_improves_the_benchmark_rounding_pick() {
    let net = eight_node_network();
    let p = LeaderProblem::new(net, 1, 1.0, Metric::H2).unwrap();
    let start = vec![3];
    let out = greedy_swap(&start, &p).unwrap();
    let j_start = p.set_objective(&start).unwrap();
    let j_out = p.set_objective(&out).unwrap();
    assert!(j_out <= j_start);
}

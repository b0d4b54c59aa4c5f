#![allow(clippy::needless_range_loop)]

mod common;

use common::{naive_cluster_j_approx, naive_group_loss, naive_j, random_instance, Instance};
use fairkm_core::fair::{run_fair, FairParams, FairRunState, StopMode};
use fairkm_core::metrics::{cluster_disparity, fair_kmeans_objective, GroupLossTable};
use fairkm_core::smooth::softmax_weights;
use fairkm_core::{CentroidSet, FeatureMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn state_of(inst: &Instance) -> FairRunState {
    FairRunState::new(
        &inst.data,
        &inst.labels,
        inst.assignment.clone(),
        inst.centroids.clone(),
    )
    .unwrap()
}

#[test]
fn delta_matches_full_recomputation_on_1000_moves() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut checked = 0;
    let mut seed = 0;
    while checked < 1000 {
        seed += 1;
        let inst = random_instance(seed, 200, 5, 4, 3);
        if inst.assignment.k() < 2 {
            continue;
        }
        let st = state_of(&inst);
        let before = naive_j(
            &inst.data,
            &inst.labels,
            inst.assignment.labels(),
            &inst.centroids,
        );
        for _ in 0..10 {
            let i = rng.gen_range(0..inst.data.n());
            let to = rng.gen_range(0..inst.assignment.k());
            let from = inst.assignment.cluster_of(i);
            let Ok(delta) = st.delta_j_move(&inst.data, &inst.labels, i, to) else {
                assert!(to == from || st.stats().cluster_size(from) == 1);
                continue;
            };
            let mut moved = inst.assignment.labels().to_vec();
            moved[i] = to;
            let after = naive_j(&inst.data, &inst.labels, &moved, &inst.centroids);
            let oracle = after - before;
            let scale = oracle.abs().max(before);
            assert!(
                (delta - oracle).abs() <= 1e-9 * scale,
                "seed {seed} object {i} -> {to}: {delta} vs {oracle}"
            );
            checked += 1;
        }
    }
}

#[test]
fn move_and_back_cancel() {
    let inst = (0..)
        .map(|s| random_instance(s, 60, 3, 3, 2))
        .find(|i| i.assignment.k() >= 2)
        .unwrap();
    let mut st = state_of(&inst);
    let (i, from) = (0..inst.data.n())
        .map(|i| (i, inst.assignment.cluster_of(i)))
        .find(|&(_, c)| st.stats().cluster_size(c) > 1)
        .unwrap();
    let to = (from + 1) % inst.assignment.k();
    let d1 = st.delta_j_move(&inst.data, &inst.labels, i, to).unwrap();
    st.apply_move(&inst.data, &inst.labels, i, to).unwrap();
    let d2 = st.delta_j_move(&inst.data, &inst.labels, i, from).unwrap();
    assert!((d1 + d2).abs() <= 1e-9);
}

#[test]
fn gradient_matches_central_differences_on_200_states() {
    let h = 1e-5;
    for seed in 0..200u64 {
        let inst = random_instance(1000 + seed, 80, 5, 4, 3);
        let st = state_of(&inst);
        let phi = [1.0, 3.0, 10.0][(seed % 3) as usize];
        for c in 0..inst.assignment.k() {
            let grad = st.gradient_mu(c, phi);
            let mu = inst.centroids.centroid(c).to_vec();
            for j in 0..mu.len() {
                let mut up = mu.clone();
                let mut dn = mu.clone();
                up[j] += h;
                dn[j] -= h;
                let f = |m: &[f64]| {
                    naive_cluster_j_approx(
                        &inst.data,
                        &inst.labels,
                        inst.assignment.labels(),
                        c,
                        m,
                        phi,
                    )
                };
                let fd = (f(&up) - f(&dn)) / (2.0 * h);
                let err = (grad[j] - fd).abs();
                assert!(
                    err <= 1e-4 * fd.abs() || err <= 1e-7,
                    "seed {seed} cluster {c} coord {j}: {} vs {fd}",
                    grad[j]
                );
            }
        }
    }
}

#[test]
fn smooth_max_sandwich_on_500_states() {
    for seed in 0..500u64 {
        let inst = random_instance(5000 + seed, 60, 4, 4, 3);
        let st = state_of(&inst);
        for phi in [1.0, 3.0, 10.0] {
            for c in 0..inst.assignment.k() {
                let one = fairkm_core::fair::cluster_j_approx(
                    st.stats(),
                    c,
                    inst.centroids.centroid(c),
                    phi,
                );
                let worst = st
                    .cluster_losses(c)
                    .iter()
                    .flatten()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max);
                assert!(worst <= one + 1e-9);
                assert!(one <= worst + st.smoothing_slack(c, phi) + 1e-9);
            }
        }
    }
}

#[test]
fn estep_monotone_and_reaches_brute_force_local_optimum() {
    for seed in 0..100u64 {
        let inst = random_instance(9000 + seed, 60, 3, 3, 2);
        let mut st = state_of(&inst);
        let mut j = naive_j(
            &inst.data,
            &inst.labels,
            st.assignment().labels(),
            &inst.centroids,
        );
        let mut passes = 0;
        loop {
            let moves = st.reassign_estep(&inst.data, &inst.labels).unwrap();
            let after = naive_j(
                &inst.data,
                &inst.labels,
                st.assignment().labels(),
                &inst.centroids,
            );
            assert!(
                after <= j + 1e-9 * j.max(1.0),
                "seed {seed}: {j} -> {after}"
            );
            j = after;
            passes += 1;
            if moves == 0 || passes > 500 {
                break;
            }
        }
        assert!(passes <= 500, "seed {seed}: no fixed point");
        let labels = st.assignment().labels().to_vec();
        let sizes = common::sizes(&labels, inst.assignment.k());
        for i in 0..inst.data.n() {
            for to in 0..inst.assignment.k() {
                if to == labels[i] || sizes[labels[i]] == 1 {
                    continue;
                }
                let mut moved = labels.clone();
                moved[i] = to;
                let alt = naive_j(&inst.data, &inst.labels, &moved, &inst.centroids);
                assert!(
                    alt - j >= -1e-9 * j.max(1.0),
                    "seed {seed}: improving move {i} -> {to}"
                );
            }
        }
    }
}

#[test]
fn softmax_weights_normalised_and_shift_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..200 {
        let m = rng.gen_range(1..6);
        let v: Vec<f64> = (0..m).map(|_| rng.gen_range(0.0..50.0)).collect();
        let shifted: Vec<f64> = v.iter().map(|x| x + 123.0).collect();
        let mut w = vec![0.0; m];
        let mut ws = vec![0.0; m];
        softmax_weights(&v, 3.0, &mut w);
        softmax_weights(&shifted, 3.0, &mut ws);
        assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (a, b) in w.iter().zip(&ws) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn single_group_gradient_is_mean_seeking() {
    for seed in 0..50u64 {
        let inst = random_instance(300 + seed, 60, 4, 4, 1);
        let st = state_of(&inst);
        let means = common::naive_means(&inst.data, &inst.assignment);
        for c in 0..inst.assignment.k() {
            let g = st.gradient_mu(c, 3.0);
            for j in 0..g.len() {
                let expect = -2.0 * (means[c][j] - inst.centroids.centroid(c)[j]);
                assert!((g[j] - expect).abs() <= 1e-10);
            }
        }
    }
}

#[test]
fn run_is_a_pure_function_of_its_inputs() {
    let inst = random_instance(77, 120, 3, 3, 3);
    let mut p = FairParams::new(inst.assignment.k());
    p.max_iters = 30;
    p.stop_mode = StopMode::Contrastive;
    let run = || {
        run_fair(
            &inst.data,
            &inst.labels,
            &p,
            (inst.assignment.clone(), inst.centroids.clone()),
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.assignment(), b.assignment());
    assert_eq!(a.centroids(), b.centroids());
    assert_eq!(a.history(), b.history());
    assert_eq!(a.history().len(), a.iteration());
}

#[test]
fn history_matches_direct_metrics() {
    let inst = random_instance(501, 150, 3, 3, 2);
    let mut p = FairParams::new(inst.assignment.k());
    p.max_iters = 60;
    let st = run_fair(
        &inst.data,
        &inst.labels,
        &p,
        (inst.assignment.clone(), inst.centroids.clone()),
    )
    .unwrap();
    let last = st.history().last().unwrap();
    let table =
        GroupLossTable::compute(&inst.data, &inst.labels, st.assignment(), st.centroids()).unwrap();
    assert!((last.j - table.worst_group_sum()).abs() <= 1e-9 * last.j);
    assert!(
        (last.kmeans_normalized - table.kmeans_normalized()).abs() <= 1e-9 * last.kmeans_normalized
    );
    assert!((last.acd - table.average_cluster_disparity().value).abs() <= 1e-6 * (1.0 + last.acd));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn disparity_is_scale_invariant(seed in any::<u64>(), factor in 0.1f64..20.0) {
        let inst = random_instance(seed, 60, 3, 3, 3);
        let scaled = FeatureMatrix::new(
            inst.data.n(),
            inst.data.d(),
            inst.data.values().iter().map(|v| v * factor).collect(),
        ).unwrap();
        let mu = CentroidSet::new(
            inst.centroids.k(),
            inst.centroids.d(),
            inst.centroids.values().iter().map(|v| v * factor).collect(),
        ).unwrap();
        let a = GroupLossTable::compute(&inst.data, &inst.labels, &inst.assignment, &inst.centroids).unwrap();
        let b = GroupLossTable::compute(&scaled, &inst.labels, &inst.assignment, &mu).unwrap();
        for c in 0..inst.assignment.k() {
            let (x, y) = (a.cluster_disparity(c).value, b.cluster_disparity(c).value);
            prop_assert!((x - y).abs() <= 1e-9 * x.max(1.0), "{x} vs {y}");
        }
    }

    #[test]
    fn acd_zero_iff_equal_losses(losses in proptest::collection::vec(proptest::option::of(0.01f64..10.0), 1..5)) {
        let d = cluster_disparity(&losses);
        prop_assert!(d.value >= 0.0);
        let present: Vec<f64> = losses.iter().flatten().copied().collect();
        let all_equal = present.windows(2).all(|w| w[0] == w[1]);
        prop_assert_eq!(d.value == 0.0, all_equal);
    }

    #[test]
    fn fair_kmeans_objective_matches_triple_loop(seed in any::<u64>()) {
        let inst = random_instance(seed, 100, 4, 4, 3);
        let got = fair_kmeans_objective(&inst.data, &inst.labels, &inst.assignment, &inst.centroids).unwrap();
        let mut worst = f64::NEG_INFINITY;
        for s in 0..inst.labels.g() {
            let mut total = 0.0;
            let mut m = 0;
            for c in 0..inst.assignment.k() {
                for i in 0..inst.data.n() {
                    if inst.assignment.cluster_of(i) == c && inst.labels.group_of(i) == s {
                        total += common::dist2(inst.data.row(i), inst.centroids.centroid(c));
                        m += 1;
                    }
                }
            }
            worst = worst.max(total / m as f64);
        }
        prop_assert!((got - worst).abs() <= 1e-12 * worst.max(1.0));
    }

    #[test]
    fn group_losses_in_state_match_direct(seed in any::<u64>()) {
        let inst = random_instance(seed, 80, 4, 4, 3);
        let st = state_of(&inst);
        for c in 0..inst.assignment.k() {
            for s in 0..inst.labels.g() {
                let direct = naive_group_loss(&inst.data, &inst.labels, inst.assignment.labels(), c, s, inst.centroids.centroid(c));
                match (direct, st.group_loss(c, s)) {
                    (None, None) => {}
                    (Some(a), Some(b)) => prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12)),
                    _ => prop_assert!(false, "presence mismatch"),
                }
            }
        }
    }
}

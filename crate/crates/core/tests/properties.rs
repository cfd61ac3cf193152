// Copyright 2026 nvreg contributors
// SPDX-License-Identifier: Apache-2.0

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use nvreg::composer::{Catalog, GateIdentity, Objective, PrimitiveGateStat, Source};
use nvreg::fidelity::{gate_fidelity_estimate, state_fidelity, uhlmann_fidelity};
use nvreg::linalg::max_abs;
use nvreg::model::{build_static_hamiltonian, nv_frame_coefficients, Eigensystem, RegisterModel};
use nvreg::pulses::{PulseSchedule, PulseSegment, Tone};
use nvreg::selftest::{random_density, random_hermitian};
use nvreg::spincore::{embed, make_spin_operators, CMat, OperatorMatrix, Slot, Unit, C64};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn sorted_eigs(m: &CMat) -> Vec<f64> {
    nvreg::linalg::hermitian_eigen(m).0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn embed_preserves_hermiticity_and_padded_spectrum(seed in any::<u64>(), slot in 0usize..3) {
        let mut r = rng(seed);
        let slot = Slot::ALL[slot];
        let h = random_hermitian(&mut r, slot.dim());
        let op = OperatorMatrix::new(h.clone(), Unit::Dimensionless).unwrap();
        let e = embed(&op, slot).unwrap();
        prop_assert!(e.hermiticity_error() < 1e-14);
        let small = sorted_eigs(&h);
        let reps = 12 / slot.dim();
        let mut want: Vec<f64> = small.iter().flat_map(|&x| std::iter::repeat_n(x, reps)).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in e.eigenvalues_hermitian().iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn hyperfine_trace_identity(cp in -500.0f64..500.0, cq in -500.0f64..500.0, th in -7.0f64..7.0) {
        let f = nv_frame_coefficients(cp, cq, th);
        prop_assert!(((f.c_parallel + 2.0 * f.c_perp) - (cp + 2.0 * cq)).abs() < 1e-10 * (1.0 + cp.abs() + cq.abs()));
    }

    #[test]
    fn static_hamiltonian_is_hermitian(b in 0.0f64..200.0, e in 0.0f64..10.0, third in any::<bool>()) {
        let m = if third { RegisterModel::third_neighbor(b) } else { RegisterModel::nearest_neighbor(b) };
        let h = build_static_hamiltonian(&m.with_strain(e));
        prop_assert!(h.hermiticity_error() <= 1e-12 * max_abs(h.matrix()));
    }

    #[test]
    fn bare_spectrum_is_analytic(b in 0.0f64..300.0) {
        let m = RegisterModel::bare(b);
        let es = Eigensystem::of(&m);
        let mut want: Vec<f64> = [0.0, m.d + m.gamma_e * b, m.d - m.gamma_e * b]
            .iter()
            .flat_map(|&x| std::iter::repeat_n(x, 4))
            .collect();
        want.sort_by(f64::total_cmp);
        let mut got = es.energies.clone();
        got.sort_by(f64::total_cmp);
        for (a, w) in got.iter().zip(&want) {
            prop_assert!((a - w).abs() < 1e-9, "{a} vs {w}");
        }
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed in any::<u64>(), ra in 1usize..=12, rb in 1usize..=12) {
        let mut r = rng(seed);
        let a = random_density(&mut r, ra);
        let b = random_density(&mut r, rb);
        let f = uhlmann_fidelity(&a, &b);
        prop_assert!((f - uhlmann_fidelity(&b, &a)).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&f));
        prop_assert!((state_fidelity(&a, &b).unwrap() - f).abs() < 1e-9);
    }

    #[test]
    fn fidelity_is_monotone_under_mixing(seed in any::<u64>(), lambda in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let rho = random_density(&mut r, 3);
        let sigma = random_density(&mut r, 5);
        let mix = &rho * C64::new(lambda, 0.0) + &sigma * C64::new(1.0 - lambda, 0.0);
        prop_assert!(uhlmann_fidelity(&rho, &mix) >= uhlmann_fidelity(&rho, &sigma) - 1e-9);
    }

    #[test]
    fn gate_min_never_exceeds_average(values in prop::collection::vec(0.0f64..=1.0, 1..30)) {
        let (min, avg) = gate_fidelity_estimate(&values);
        prop_assert!(min <= avg + 1e-15);
    }

    #[test]
    fn schedule_concatenation_is_associative(durs in prop::collection::vec(0.01f64..100.0, 3)) {
        let seg = |d: f64| PulseSchedule::single(PulseSegment::new(vec![Tone::new(1.0, 2.0, 0.0)], d).unwrap());
        let (a, b, c) = (seg(durs[0]), seg(durs[1]), seg(durs[2]));
        let left = a.clone().then(&b).then(&c);
        let right = a.clone().then(&b.clone().then(&c));
        prop_assert_eq!(&left, &right);
        let sum: f64 = left.segments.iter().map(|s| s.duration).sum();
        prop_assert_eq!(left.total_duration(), sum);
    }
}

#[test]
fn casimir_for_every_spin() {
    for two_s in [1u32, 2] {
        let ops = make_spin_operators(two_s).unwrap();
        let s = two_s as f64 / 2.0;
        let sq = |o: &OperatorMatrix| o.matrix() * o.matrix();
        let total = sq(&ops.sx) + sq(&ops.sy) + sq(&ops.sz);
        let n = total.nrows();
        assert!(max_abs(&(total - CMat::identity(n, n) * C64::new(s * (s + 1.0), 0.0))) < 1e-12);
    }
}

fn random_catalog(stats: &[(f64, f64)]) -> Vec<PrimitiveGateStat> {
    stats
        .iter()
        .enumerate()
        .map(|(k, &(f, t))| PrimitiveGateStat::new(&format!("g{k}"), f, t, Source::Assumed))
        .collect()
}

fn step_names(idx: &[usize]) -> Vec<String> {
    idx.iter().map(|k| format!("g{k}")).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn compose_is_associative_and_exact(
        stats in prop::collection::vec((0.5f64..=1.0, 0.0f64..1e5), 5),
        a in prop::collection::vec(0usize..5, 1..6),
        b in prop::collection::vec(0usize..5, 1..6),
    ) {
        let mut cat = Catalog::default();
        for s in random_catalog(&stats) {
            cat.insert(s).unwrap();
        }
        let a_steps = step_names(&a);
        let b_steps = step_names(&b);
        let whole: Vec<String> = a_steps.iter().chain(&b_steps).cloned().collect();
        let ident = |steps: &[String]| GateIdentity {
            target: "T".into(),
            steps: steps.to_vec(),
            note: String::new(),
        };
        let joint = cat.compose(&ident(&whole)).unwrap();
        let staged = cat.extend(&cat.compose(&ident(&a_steps)).unwrap(), &b_steps).unwrap();
        prop_assert_eq!(joint.fidelity.to_bits(), staged.fidelity.to_bits());
        prop_assert_eq!(joint.time_ns.to_bits(), staged.time_ns.to_bits());
        prop_assert_eq!(&joint.chain, &staged.chain);

        let mut t = 0.0;
        for k in whole.iter().map(|s| &cat.entries[s]) {
            prop_assert!(joint.fidelity <= k.fidelity);
            t += k.time_ns;
        }
        prop_assert_eq!(joint.time_ns, t);
    }

    #[test]
    fn best_identity_ignores_insertion_order(
        stats in prop::collection::vec((0.5f64..=1.0, 0.0f64..1e4), 5),
        routes in prop::collection::vec(prop::collection::vec(0usize..5, 1..4), 1..5),
        seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let prims = random_catalog(&stats);
        let ids: Vec<GateIdentity> = routes
            .iter()
            .map(|r| GateIdentity { target: "T".into(), steps: step_names(r), note: String::new() })
            .collect();
        let build = |prims: &[PrimitiveGateStat], ids: &[GateIdentity]| {
            let mut cat = Catalog::default();
            for p in prims {
                cat.insert(p.clone()).unwrap();
            }
            for i in ids {
                cat.add_identity(i.clone()).unwrap();
            }
            cat
        };
        let base = build(&prims, &ids);
        let mut r = rng(seed);
        let (mut p2, mut i2) = (prims.clone(), ids.clone());
        p2.shuffle(&mut r);
        i2.shuffle(&mut r);
        let shuffled = build(&p2, &i2);
        for obj in [Objective::Fidelity, Objective::Time] {
            prop_assert_eq!(base.best_identity("T", obj).unwrap(), shuffled.best_identity("T", obj).unwrap());
        }
    }
}

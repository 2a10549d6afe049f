//! Dual-route checks: every closed-form metric against the sequence
//! oracle over seeded draws from all seven families.

use mpc_metrics::enhanced::{delta_k, empc1, empc1_rho, er_k, er_k_rho, empc2_rho, RhoParameter};
use mpc_metrics::generator::{generate, Family, FamilySpec, SeededRng, ALL_FAMILIES};
use mpc_metrics::matrix::ConfusionMatrix;
use mpc_metrics::oracle::{cross_check, enhanced_from_reduced, pcc, reduce_dimension};

fn family_sweep(seed_value: u64, reps: u64) -> impl Iterator<Item = ConfusionMatrix> {
    let seed = SeededRng::new(seed_value);
    ALL_FAMILIES.into_iter().flat_map(move |family| {
        (0..reps).map(move |rep| {
            let k = if family == Family::Imbalanced32 {
                3 + (rep % 3) as usize
            } else {
                2 + (rep % 4) as usize
            };
            let n = 50 + (rep * 131) % 1951;
            let spec = FamilySpec::new(family, k, n).unwrap();
            generate(&spec, rep, &seed)
        })
    })
}

#[test]
fn closed_forms_match_the_sequence_oracle() {
    for cm in family_sweep(0xC0FFEE, 150) {
        for dev in cross_check(&cm).unwrap() {
            let tol = if dev.quantity == "mcc_vs_pcc" {
                1e-12
            } else {
                1e-10
            };
            assert!(
                dev.abs_diff() <= tol,
                "{} deviates by {:e} on {:?}",
                dev.quantity,
                dev.abs_diff(),
                cm.counts()
            );
        }
    }
}

#[test]
fn analytic_delta_matches_reduced_pcc_at_half_rho() {
    // Even diagonal entries keep rho*C_kk integral at rho = 0.5.
    let cm = ConfusionMatrix::from_rows(&[vec![40, 10], vec![6, 44]]).unwrap();
    let rho = RhoParameter::new(0.5).unwrap();
    for class in 0..2 {
        let pair = reduce_dimension(&cm, class, 0.5).unwrap();
        let seq = pcc(
            &pair.t_red.iter().map(|&v| v as f64).collect::<Vec<_>>(),
            &pair.c_red.iter().map(|&v| v as f64).collect::<Vec<_>>(),
        )
        .unwrap();
        let analytic = delta_k(&cm, class, rho).delta;
        assert!(analytic.defined && seq.defined);
        assert!(
            (analytic.value - seq.value).abs() <= 1e-12,
            "class {class}: {} vs {}",
            analytic.value,
            seq.value
        );
    }
}

#[test]
fn rho_family_matches_reduced_sequences_at_half_rho() {
    // All diagonal entries even, so the reduced lengths are realizable.
    let matrices = [
        vec![vec![40, 10], vec![6, 44]],
        vec![vec![20, 3, 2], vec![4, 30, 1], vec![0, 5, 12]],
        vec![vec![100, 7], vec![9, 54]],
    ];
    let rho = RhoParameter::new(0.5).unwrap();
    for rows in matrices {
        let cm = ConfusionMatrix::from_rows(&rows).unwrap();
        let (er_seq, e1_seq, e2_seq) = enhanced_from_reduced(&cm, 0.5).unwrap();
        let er = er_k_rho(&cm, rho);
        let e1 = empc1_rho(&cm, rho, None);
        let e2 = empc2_rho(&cm, rho);
        for (name, closed, seq) in [
            ("er_k_rho", er, er_seq),
            ("empc1_rho", e1, e1_seq),
            ("empc2_rho", e2, e2_seq),
        ] {
            assert_eq!(closed.defined, seq.defined, "{name} flag");
            assert!(
                (closed.value - seq.value).abs() <= 1e-10,
                "{name}: {} vs {}",
                closed.value,
                seq.value
            );
        }
    }
}

#[test]
fn rho_zero_reduction_agrees_with_enhanced_closed_forms() {
    for cm in family_sweep(0xBEEF, 40) {
        let (er_seq, e1_seq, _) = enhanced_from_reduced(&cm, 0.0).unwrap();
        let er = er_k(&cm);
        let e1 = empc1(&cm, None);
        assert_eq!(er.defined, er_seq.defined);
        if er.defined {
            assert!((er.value - er_seq.value).abs() <= 1e-10);
        }
        assert_eq!(e1.defined, e1_seq.defined);
        assert!((e1.value - e1_seq.value).abs() <= 1e-10);
    }
}

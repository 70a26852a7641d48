//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Derived expectations are recomputed here from first principles rather than taken from the
//! library. Criteria 5, 6 and 12 have items that do not hold as stated; they are reported as
//! FAIL and the test only fails on a failure outside that set (or if one of them starts passing).

use std::f64::consts::{FRAC_PI_4, PI};

use gme_core::bounds::{
    cluster_witness_bounds, mermin_bisep_bound, stabilizer_bisep_bound_numeric,
    stabilizer_single_party_bound, w_crossing, EPS_MAX, THETA_GRID,
};
use gme_core::fidelity::{closed_form_l0, numeric_l_eps, FidelityBoundQuery};
use gme_core::inm::I43_BISEP_LITERATURE;
use gme_core::io::fixtures;
use gme_core::linalg::{bloch_operator, expectation, ComplexMatrix, Pauli, StateVector, C64};
use gme_core::measurement::ImprecisionBudget;
use gme_core::robustness::{di_thresholds, threshold_visibility, MeasurementCase, ThresholdQuery};
use gme_core::states::{cluster_state4, w_state, NoiseKind};
use gme_core::tomography::{fidelity_from_counts, CountTable, Label};
use gme_core::verify;
use gme_core::waveplate::{waveplate_povm, WaveplateErrorSpec};
use gme_core::witness::{mermin_recursive, WitnessKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const UNATTAINABLE: [u8; 3] = [5, 6, 12];

struct Item {
    name: String,
    pass: bool,
    detail: String,
}

fn item(name: impl Into<String>, pass: bool, detail: String) -> Item {
    Item {
        name: name.into(),
        pass,
        detail,
    }
}

fn near(name: &str, actual: f64, expected: f64, tol: f64) -> Item {
    item(
        name,
        (actual - expected).abs() <= tol,
        format!("actual {actual:.10} expected {expected:.10} tol {tol:e}"),
    )
}

fn at_most(name: &str, actual: f64, limit: f64) -> Item {
    item(name, actual <= limit, format!("actual {actual:.10} limit {limit:.10}"))
}

/// Corrected Mermin bound evaluated directly.
fn mermin_corrected(n: usize, eps: f64) -> f64 {
    let base = 2f64.powi(n as i32 - 2);
    if eps <= (2.0 - 2f64.sqrt()) / 4.0 {
        base * (1.0 - 2.0 * eps + 2.0 * (eps * (1.0 - eps)).sqrt())
    } else {
        base * 2f64.sqrt()
    }
}

fn ket(amps: &[C64]) -> StateVector {
    StateVector::new(amps.to_vec()).unwrap()
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn criterion_1() -> Vec<Item> {
    let b = mermin_bisep_bound(4, 0.0025).unwrap().value;
    vec![
        near("mermin bound n=4 eps=0.0025", b, 4.3795, 0.005),
        near("closed form agrees with direct evaluation", b, mermin_corrected(4, 0.0025), 1e-12),
    ]
}

/// Mermin-4 as Re prod_j (A0_j + i A1_j), party 1 tilted toward its partner axis.
fn criterion_2() -> Vec<Item> {
    let r = 0.5f64.sqrt();
    let first = ket(&[c(r, 0.0), C64::from_polar(r, FRAC_PI_4)]);
    let mut rest = vec![c(0.0, 0.0); 8];
    rest[0] = c(r, 0.0);
    rest[7] = C64::from_polar(r, -FRAC_PI_4);
    let spoof = first.kron(&ket(&rest));
    let mut worst: f64 = 0.0;
    for k in 0..10 {
        let eps = 0.14 * k as f64 / 9.0;
        let q = 1.0 - 2.0 * eps;
        let s = (1.0 - q * q).sqrt();
        let mut obs = vec![(bloch_operator([q, s, 0.0]), bloch_operator([s, q, 0.0]))];
        for _ in 1..4 {
            obs.push((Pauli::X.matrix(), Pauli::Y.matrix()));
        }
        let (m, _) = mermin_recursive(&obs).unwrap();
        worst = worst.max((expectation(&m, &spoof).unwrap() - mermin_corrected(4, eps)).abs());
    }
    vec![at_most("spoof state saturates the corrected bound on 10 eps, max gap", worst, 1e-9)]
}

fn random_unit(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let z: f64 = rng.gen_range(-1.0..1.0);
    let phi: f64 = rng.gen_range(0.0..2.0 * PI);
    let r = (1.0 - z * z).sqrt();
    [r * phi.cos(), r * phi.sin(), z]
}

fn criterion_3() -> Vec<Item> {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    let mut factor_gap: f64 = 0.0;
    for k in 0..10_000 {
        let dirs: Vec<[f64; 3]> = (0..4).map(|_| random_unit(&mut rng)).collect();
        let obs: Vec<(ComplexMatrix, ComplexMatrix)> = (0..4)
            .map(|_| (bloch_operator(random_unit(&mut rng)), bloch_operator(random_unit(&mut rng))))
            .collect();
        let qubits: Vec<StateVector> = dirs
            .iter()
            .map(|d| {
                let (t, p) = (d[2].acos(), d[1].atan2(d[0]));
                ket(&[c((t / 2.0).cos(), 0.0), C64::from_polar((t / 2.0).sin(), p)])
            })
            .collect();
        let psi = qubits[1..].iter().fold(qubits[0].clone(), |acc, q| acc.kron(q));
        let (m, n) = mermin_recursive(&obs).unwrap();
        let (em, en) = (expectation(&m, &psi).unwrap(), expectation(&n, &psi).unwrap());
        worst = worst.max(em * em + en * en);
        if k < 200 {
            // product states factorize: <M> + i<N> = prod_j (<A0_j> + i<A1_j>)
            let mut z = c(1.0, 0.0);
            for (q, (a0, a1)) in qubits.iter().zip(&obs) {
                z *= c(expectation(a0, q).unwrap(), expectation(a1, q).unwrap());
            }
            factor_gap = factor_gap.max((z - c(em, en)).norm());
        }
    }
    vec![
        at_most("max <M4>^2+<N4>^2 over 1e4 random product states", worst, 64.0 + 1e-9),
        at_most("factorized oracle agrees", factor_gap, 1e-10),
    ]
}

fn criterion_4() -> Vec<Item> {
    vec![
        near(
            "stabilizer single-party n=4 eps=6e-4",
            stabilizer_single_party_bound(4, 6e-4).unwrap().value,
            7.19,
            0.01,
        ),
        near(
            "stabilizer numeric n=4 eps=0",
            stabilizer_bisep_bound_numeric(4, 0.0, THETA_GRID).unwrap().value,
            7.0,
            1e-7,
        ),
        near(
            "stabilizer numeric n=4 eps=(2-sqrt2)/4",
            stabilizer_bisep_bound_numeric(4, EPS_MAX, THETA_GRID).unwrap().value,
            11.0,
            0.02,
        ),
    ]
}

fn criterion_5() -> Vec<Item> {
    let n = 4;
    let limit = 9.0 * 2f64.powi(n - 4) - 1.0;
    [0.0, 0.05, 0.14]
        .iter()
        .map(|&eps| {
            at_most(
                &format!("2|2 brute force eps={eps}"),
                verify::two_two_brute_force(eps).unwrap(),
                limit + 1e-6,
            )
        })
        .collect()
}

fn ghz(n: usize) -> StateVector {
    let mut a = vec![c(0.0, 0.0); 1 << n];
    a[0] = c(0.5f64.sqrt(), 0.0);
    a[(1 << n) - 1] = c(0.5f64.sqrt(), 0.0);
    ket(&a)
}

fn criterion_6() -> Vec<Item> {
    let g4 = ghz(4);
    let w4 = WitnessKind::Stabilizer(4).ideal().unwrap().matrix;
    let zero_ghz3 = ket(&[c(1.0, 0.0), c(0.0, 0.0)]).kron(&ghz(3));
    vec![
        near(
            "ghz4 mermin",
            expectation(&WitnessKind::Mermin(4).ideal().unwrap().matrix, &g4).unwrap(),
            8.0,
            1e-10,
        ),
        near("ghz4 stabilizer", expectation(&w4, &g4).unwrap(), 11.0, 1e-10),
        near(
            "w state D3",
            expectation(&WitnessKind::W3.ideal().unwrap().matrix, &w_state()).unwrap(),
            4.0,
            1e-10,
        ),
        near(
            "cluster state C4",
            expectation(&WitnessKind::Cluster4.ideal().unwrap().matrix, &cluster_state4()).unwrap(),
            6.0,
            1e-10,
        ),
        near("|0> ghz3 stabilizer", expectation(&w4, &zero_ghz3).unwrap(), 7.0, 1e-10),
    ]
}

fn criterion_7() -> Vec<Item> {
    let records = |src: &str| -> Vec<(String, f64)> {
        let v: serde_json::Value = serde_json::from_str(src).unwrap();
        v["records"]
            .as_array()
            .unwrap()
            .iter()
            .map(|r| (r["letters"].as_str().unwrap().to_string(), r["value"].as_f64().unwrap()))
            .collect()
    };
    // Mermin-4 sign of a term: (-1)^{#Y/2}
    let mermin: f64 = records(fixtures::FIG4_MERMIN)
        .iter()
        .map(|(l, v)| if l.matches('Y').count() % 4 == 0 { *v } else { -v })
        .sum();
    // stabilizer-4: 4 XXXX plus the seven even Z strings (identity and -1 cancel)
    let stab: f64 = records(fixtures::FIG4_STABILIZER)
        .iter()
        .map(|(l, v)| if l == "XXXX" { 4.0 * v } else { *v })
        .sum();
    vec![
        near("fig4 mermin sum", mermin, 7.4665, 0.002),
        near("fig4 stabilizer sum", stab, 10.5168, 0.002),
    ]
}

fn criterion_8() -> Vec<Item> {
    let budget = ImprecisionBudget::uniform(4, [6e-4, 2.3e-3, 3e-4]).unwrap();
    let m = numeric_l_eps(&FidelityBoundQuery::new(WitnessKind::Mermin(4), 7.4665, budget.clone())).unwrap();
    let s = numeric_l_eps(&FidelityBoundQuery::new(WitnessKind::Stabilizer(4), 10.5168, budget)).unwrap();
    vec![
        near(
            "L0 stabilizer at 10.5168",
            closed_form_l0(WitnessKind::Stabilizer(4), 10.5168).unwrap(),
            (10.5168 - 3.0) / 8.0,
            1e-12,
        ),
        near("L0 value", (10.5168 - 3.0) / 8.0, 0.9396, 1e-12),
        near("L_eps mermin at 7.4665", m.value, 0.866, 0.01),
        near("L_eps stabilizer at 10.5168", s.value, 0.881, 0.01),
    ]
}

fn criterion_9() -> Vec<Item> {
    let t = |k, eps, noise| {
        threshold_visibility(&ThresholdQuery::new(k, eps, noise, MeasurementCase::BestCase).unwrap())
            .unwrap()
            .p
    };
    let deph = t(WitnessKind::Mermin(4), 0.005, NoiseKind::Dephasing);
    vec![
        near("dephasing mermin eps=0.005", deph, 0.783, 0.002),
        near("dephasing mermin solves 16p-8 = bound", deph, (mermin_corrected(4, 0.005) + 8.0) / 16.0, 1e-8),
        near("DI m=2", di_thresholds(2, None, 42).unwrap().p, (8.0 + 2f64.powf(2.5)) / 16.0, 1e-8),
        near("DI m=2 value", (8.0 + 2f64.powf(2.5)) / 16.0, 0.8536, 1e-4),
        near("white mermin eps=0", t(WitnessKind::Mermin(4), 0.0, NoiseKind::Depolarizing), 0.5, 1e-9),
        near(
            "white stabilizer eps=0",
            t(WitnessKind::Stabilizer(4), 0.0, NoiseKind::Depolarizing),
            7.0 / 11.0,
            1e-9,
        ),
        near(
            "DI m=3 with 18 sqrt3",
            di_thresholds(3, Some(I43_BISEP_LITERATURE), 42).unwrap().p,
            0.834,
            0.005,
        ),
    ]
}

fn criterion_10() -> Vec<Item> {
    vec![
        near("D3 bound crosses 4", w_crossing(4.0, 0.0, 0.05).unwrap(), 0.006, 0.001),
        near(
            "C4 biseparable bound eps=0",
            cluster_witness_bounds(0.0).unwrap().biseparable.value,
            4.0,
            1e-7,
        ),
    ]
}

fn criterion_11() -> Vec<Item> {
    let spec = WaveplateErrorSpec::laboratory();
    let mut out = Vec::new();
    for (axis, expected) in [
        (gme_core::measurement::Axis::Z, 0.9989),
        (gme_core::measurement::Axis::X, 0.9982),
        (gme_core::measurement::Axis::Y, 0.9978),
    ] {
        out.push(near(
            &format!("waveplate {axis:?}"),
            waveplate_povm(axis, &spec).unwrap().fidelity,
            expected,
            0.0005,
        ));
    }
    let report = fidelity_from_counts(&CountTable::from_csv_str(fixtures::TABLE_A1).unwrap()).unwrap();
    for (l, expected) in [
        (Label::D, 0.9994),
        (Label::A, 0.9994),
        (Label::R, 0.9976),
        (Label::L, 0.9977),
        (Label::H, 0.9997),
        (Label::V, 0.9998),
    ] {
        out.push(near(&format!("table {}", l.as_str()), report.get(l).fidelity, expected, 0.0005));
    }
    out
}

/// Spot checks of the module properties; the exhaustive versions are in tests/properties.rs.
/// The multi-qubit-partition one-sidedness property fails with criterion 5.
fn criterion_12() -> Vec<Item> {
    let mut out: Vec<Item> = verify::criterion_12()
        .into_iter()
        .map(|c| item(c.name.clone(), c.pass, c.detail()))
        .collect();
    let over = verify::two_two_brute_force(0.05).unwrap() - 8.0;
    out.push(at_most("one-sided oracle, multi-qubit-partition bound at eps=0.05", over, 1e-6));
    out
}

/// Runs without the libtest harness so the report is never captured.
fn main() {
    let criteria: Vec<(u8, fn() -> Vec<Item>)> = vec![
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
        (12, criterion_12),
    ];
    let mut failed = Vec::new();
    for (k, f) in criteria {
        let items = f();
        let pass = items.iter().all(|i| i.pass);
        println!("{} criterion {k}", if pass { "PASS" } else { "FAIL" });
        for i in &items {
            println!("    {} {}: {}", if i.pass { "ok  " } else { "FAIL" }, i.name, i.detail);
        }
        if !pass {
            failed.push(k);
        }
    }
    let unexpected: Vec<u8> = failed.iter().copied().filter(|k| !UNATTAINABLE.contains(k)).collect();
    let recovered: Vec<u8> = UNATTAINABLE.iter().copied().filter(|k| !failed.contains(k)).collect();
    assert!(unexpected.is_empty(), "criteria failed: {unexpected:?}");
    assert!(recovered.is_empty(), "criteria documented as unattainable now pass: {recovered:?}");
}

mod common;

use aerostt::cgt::{cgt, hocgt_coeffs, qcgt_coeffs_vector, second_order_cgt, CgtFamily, SelectionMatrix};
use aerostt::dynamics::{Component, N};
use aerostt::propagation::SttSet;
use aerostt::qoi::{QoiKind, QoiPartials};
use aerostt::tensor::{symmetrize, Derivs};
use common::{random_trailing_symmetric, rng, taylor_polys, unit, Poly};
use rand::Rng;

fn random_stt(seed: u64) -> SttSet {
    let mut r = rng(seed);
    SttSet {
        t_start: 0.0,
        t_end: 1.0,
        order: 3,
        dim: N,
        component: Component::Full,
        phi1: (0..N * N).map(|_| r.random_range(-2.0..2.0)).collect(),
        phi2: random_trailing_symmetric(&mut r, N, N, 2),
        phi3: random_trailing_symmetric(&mut r, N, N, 3),
    }
}

fn random_eta(seed: u64) -> QoiPartials {
    let mut r = rng(seed);
    QoiPartials {
        kind: QoiKind::Energy,
        order: 3,
        value: 0.0,
        eta1: (0..N).map(|_| r.random_range(-1.0..1.0)).collect(),
        eta2: random_trailing_symmetric(&mut r, 1, N, 2),
        eta3: random_trailing_symmetric(&mut r, 1, N, 3),
    }
}

fn sum_of_squares(polys: &[Poly]) -> Poly {
    polys.iter().fold(Poly::zero(), |acc, p| acc.add(p.mul(*p)))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-10 * b.abs().max(1.0)
}

#[test]
fn hocgt_contractions_are_objective_coefficients() {
    for seed in 0..5 {
        let stt = random_stt(seed);
        let v = unit(&mut rng(100 + seed), N);
        let obj = sum_of_squares(&taylor_polys(&stt.phi1, &stt.phi2, &stt.phi3, N, N, &v));
        for m in 2..=4 {
            let c = cgt(&stt, &CgtFamily::Full, m).unwrap().contract_all(&v);
            assert!(close(c, obj.0[m]), "m {m}: {c} vs {}", obj.0[m]);
        }
    }
}

#[test]
fn scgt_contractions_are_selected_objective_coefficients() {
    let sel = SelectionMatrix::position_velocity_fpa();
    for seed in 0..5 {
        let stt = random_stt(seed);
        let v = unit(&mut rng(200 + seed), N);
        let polys = taylor_polys(&stt.phi1, &stt.phi2, &stt.phi3, N, N, &v);
        let picked: Vec<Poly> = sel.rows().iter().map(|&r| polys[r]).collect();
        let obj = sum_of_squares(&picked);
        for m in 2..=4 {
            let c = cgt(&stt, &CgtFamily::Selective(&sel), m).unwrap().contract_all(&v);
            assert!(close(c, obj.0[m]));
        }
    }
}

/// `q(x + dx(t)) - q(x)` expanded with the quantity partials, then squared.
#[test]
fn qcgt_contractions_are_quantity_objective_coefficients() {
    for seed in 0..5 {
        let stt = random_stt(seed);
        let eta = random_eta(50 + seed);
        let v = unit(&mut rng(300 + seed), N);
        let d = taylor_polys(&stt.phi1, &stt.phi2, &stt.phi3, N, N, &v);
        let mut dq = Poly::zero();
        for a in 0..N {
            dq = dq.add(d[a].scale(eta.eta1[a]));
            for b in 0..N {
                dq = dq.add(d[a].mul(d[b]).scale(0.5 * eta.eta2[a * N + b]));
                for c in 0..N {
                    dq = dq.add(d[a].mul(d[b]).mul(d[c]).scale(eta.eta3[(a * N + b) * N + c] / 6.0));
                }
            }
        }
        // only terms through t^3 of dq reach t^4 of dq^2
        dq.0[4] = 0.0;
        let obj = dq.mul(dq);
        for m in 2..=4 {
            let c = cgt(&stt, &CgtFamily::Quantity(&eta), m).unwrap().contract_all(&v);
            assert!(close(c, obj.0[m]), "m {m}: {c} vs {}", obj.0[m]);
        }
    }
}

#[test]
fn identity_quantity_reduces_to_hocgt() {
    let stt = random_stt(7);
    let mut eye = vec![0.0; N * N];
    for i in 0..N {
        eye[i * N + i] = 1.0;
    }
    let zeros2 = vec![0.0; N * N * N];
    let zeros3 = vec![0.0; N * N * N * N];
    let eta = Derivs {
        first: &eye,
        second: &zeros2,
        third: &zeros3,
    };
    for m in 2..=4 {
        let q = symmetrize(&qcgt_coeffs_vector(eta, N, &stt, m).unwrap());
        let h = symmetrize(&hocgt_coeffs(&stt, m).unwrap());
        let diff: f64 = q.data().iter().zip(h.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff < 1e-12 * h.frobenius_norm());
    }
}

#[test]
fn second_order_cgt_is_gram_matrix() {
    let stt = random_stt(8);
    let c = second_order_cgt(&stt.phi1, N);
    for i in 0..N {
        for j in 0..N {
            let g: f64 = (0..N).map(|k| stt.phi1[k * N + i] * stt.phi1[k * N + j]).sum();
            assert!((c[i * N + j] - g).abs() < 1e-12);
        }
    }
    let c2 = cgt(&stt, &CgtFamily::Full, 2).unwrap();
    assert!(c2.data().iter().zip(&c).all(|(a, b)| (a - b).abs() < 1e-12));
}

#[test]
fn cgt_order_limits() {
    let stt = random_stt(9).truncated(2);
    assert!(cgt(&stt, &CgtFamily::Full, 3).is_ok());
    assert!(cgt(&stt, &CgtFamily::Full, 4).is_err());
}

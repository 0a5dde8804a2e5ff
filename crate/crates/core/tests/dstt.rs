mod common;

use aerostt::cgt::CgtFamily;
use aerostt::dstt::{cgt2_basis, construct_dstt, frobenius_error, tensor_basis, BasisTag, RotationBasis};
use aerostt::dynamics::{Component, N};
use aerostt::eigen::{vector_angle, SearchConfig};
use aerostt::propagation::{SttSet, SttSweep};
use common::{add, default_context, random_trailing_symmetric, rel, rng, unit};
use rand::Rng;
use std::sync::OnceLock;

fn sweep() -> &'static SttSweep {
    static S: OnceLock<SttSweep> = OnceLock::new();
    S.get_or_init(|| default_context().sweep(3, Component::Full).unwrap())
}

fn whole_flight() -> SttSet {
    let s = sweep();
    s.compose_range(0, s.stts.len()).unwrap()
}

fn random_dx(r: &mut impl Rng, scale: f64) -> [f64; N] {
    std::array::from_fn(|_| scale * r.random_range(-1.0..1.0))
}

fn apply(p: &[f64], dx: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| (0..N).map(|j| p[i * N + j] * dx[j]).sum())
}

fn contract2(t: &[f64], u: &[f64; N]) -> Vec<f64> {
    (0..N)
        .map(|i| (0..N).map(|a| (0..N).map(|b| t[(i * N + a) * N + b] * u[a] * u[b]).sum::<f64>()).sum())
        .collect()
}

fn contract3(t: &[f64], u: &[f64; N]) -> Vec<f64> {
    (0..N)
        .map(|i| {
            let mut s = 0.0;
            for a in 0..N {
                for b in 0..N {
                    for c in 0..N {
                        s += t[((i * N + a) * N + b) * N + c] * u[a] * u[b] * u[c];
                    }
                }
            }
            s
        })
        .collect()
}

/// The nonlinear part of DSTT propagation equals the STTs contracted with
/// the projected perturbation.
#[test]
fn projected_contraction_matches_full_contraction() {
    let stt = &sweep().stts[30];
    let basis = cgt2_basis(stt, 3).unwrap();
    let d = construct_dstt(stt, &basis).unwrap();
    let (p2, p3) = (basis.projector(2), basis.projector(3));
    let mut r = rng(21);
    for _ in 0..100 {
        let dx = random_dx(&mut r, 1.0);
        let lin = d.propagate(&dx, 1).unwrap();
        let o2 = d.propagate(&dx, 2).unwrap();
        let o3 = d.propagate(&dx, 3).unwrap();
        let got2: Vec<f64> = (0..N).map(|i| 2.0 * (o2[i] - lin[i])).collect();
        let got3: Vec<f64> = (0..N).map(|i| 6.0 * (o3[i] - o2[i])).collect();
        assert!(rel(&got2, &contract2(&stt.phi2, &apply(&p2, &dx))) < 1e-12);
        assert!(rel(&got3, &contract3(&stt.phi3, &apply(&p3, &dx))) < 1e-12);
    }
}

#[test]
fn full_rank_basis_reproduces_stt_propagation() {
    let stt = whole_flight();
    let d = construct_dstt(&stt, &cgt2_basis(&stt, N).unwrap()).unwrap();
    let e = frobenius_error(&stt, &d).unwrap();
    assert!(e.eps2 < 1e-12 && e.eps3 < 1e-12);
    let mut r = rng(22);
    for _ in 0..100 {
        let dx = random_dx(&mut r, 1e-6);
        let a = d.propagate(&dx, 3).unwrap();
        let b = stt.propagate(&dx, 3).unwrap();
        assert!(rel(&a, &b) < 1e-12);
    }
}

#[test]
fn frobenius_error_matches_direct_projection() {
    let mut r = rng(23);
    let stt = SttSet {
        t_start: 0.0,
        t_end: 1.0,
        order: 3,
        dim: N,
        component: Component::Full,
        phi1: (0..N * N).map(|_| r.random_range(-1.0..1.0)).collect(),
        phi2: random_trailing_symmetric(&mut r, N, N, 2),
        phi3: random_trailing_symmetric(&mut r, N, N, 3),
    };
    let mut rows = unit(&mut r, N);
    rows.extend(unit(&mut r, N));
    let basis = RotationBasis::new(BasisTag::Cgt2TopL, (0.0, 1.0), rows.clone(), rows).unwrap();
    let e = frobenius_error(&stt, &construct_dstt(&stt, &basis).unwrap()).unwrap();
    let p = basis.projector(2);
    let mut num2 = 0.0;
    let mut num3 = 0.0;
    for i in 0..N {
        for a in 0..N {
            for b in 0..N {
                let mut proj = 0.0;
                for c in 0..N {
                    for d in 0..N {
                        proj += stt.phi2[(i * N + c) * N + d] * p[c * N + a] * p[d * N + b];
                    }
                }
                num2 += (stt.phi2[(i * N + a) * N + b] - proj).powi(2);
                for g in 0..N {
                    let mut proj3 = 0.0;
                    for c in 0..N {
                        for d in 0..N {
                            for h in 0..N {
                                proj3 += stt.phi3[((i * N + c) * N + d) * N + h] * p[c * N + a] * p[d * N + b] * p[h * N + g];
                            }
                        }
                    }
                    num3 += (stt.phi3[((i * N + a) * N + b) * N + g] - proj3).powi(2);
                }
            }
        }
    }
    let n2 = stt.phi2.iter().map(|x| x * x).sum::<f64>();
    let n3 = stt.phi3.iter().map(|x| x * x).sum::<f64>();
    assert!((e.eps2 - (num2 / n2).sqrt()).abs() < 1e-12);
    assert!((e.eps3 - (num3 / n3).sqrt()).abs() < 1e-12);
}

#[test]
fn higher_order_directions_differ_from_the_stretching_direction() {
    let stt = whole_flight();
    let top = cgt2_basis(&stt, 1).unwrap();
    let ho = tensor_basis(&stt, &CgtFamily::Full, BasisTag::Hocgt, &SearchConfig::default()).unwrap();
    let a2 = vector_angle(&ho.basis.r2, &top.r2).unwrap();
    let a3 = vector_angle(&ho.basis.r3, &top.r3).unwrap();
    assert!(a2.max(a3) > 5.0, "angles {a2} {a3}");
}

#[test]
fn perturbation_along_the_maximal_direction_beats_the_stm() {
    let ctx = default_context();
    let s = sweep();
    let stt = whole_flight();
    let ho = tensor_basis(&stt, &CgtFamily::Full, BasisTag::Hocgt, &SearchConfig::default()).unwrap();
    let d = construct_dstt(&stt, &ho.basis).unwrap();
    let dir: [f64; N] = ho.basis.r2.clone().try_into().unwrap();
    let dx: [f64; N] = std::array::from_fn(|i| 1e-6 * dir[i]);
    let truth = ctx.propagator.replay_to(&s.grid, &add(&ctx.x0, &dir, 1e-6), 0, s.stts.len()).unwrap();
    let xf = s.grid.final_state();
    let err = |p: [f64; N]| (0..N).map(|i| (xf[i] + p[i] - truth[i]).powi(2)).sum::<f64>().sqrt();
    let e_dstt = err(d.propagate(&dx, 2).unwrap());
    let e_stm = err(stt.propagate(&dx, 1).unwrap());
    let e_stt = err(stt.propagate(&dx, 2).unwrap());
    assert!(e_dstt < e_stm);
    assert!((e_dstt - e_stt).abs() <= 1e-3 * e_stm);
}

#[test]
fn nested_cgt2_bases_refine_on_every_interval() {
    for stt in &sweep().stts {
        let errs: Vec<f64> = [1, 3, 6]
            .iter()
            .map(|&l| frobenius_error(stt, &construct_dstt(stt, &cgt2_basis(stt, l).unwrap()).unwrap()).unwrap().eps2)
            .collect();
        assert!(errs[2] <= errs[1] && errs[1] <= errs[0]);
    }
}

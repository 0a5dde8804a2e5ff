//! The numerical studies behind the command-line tool. Each study returns a
//! plain result struct and has a `write_*` companion producing CSV/JSON.

use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::cgt::{cgt, second_order_cgt, CgtFamily, SelectionMatrix};
use crate::config::{ExperimentConfig, Method};
use crate::dstt::{cgt2_basis, construct_dstt, frobenius_error, tensor_basis, BasisTag, DsttSet, FrobeniusError, TensorBasis};
use crate::dynamics::{Component, DynamicsModel, StateVector, Units, N, ZETA};
use crate::eigen::{max_eigenpair, start_vector, symmetric_eigen, vector_angle, SearchConfig};
use crate::error::{Error, Result};
use crate::output::{Cell, CsvTable, Written};
use crate::propagation::{uniform_grid, Propagator, SttSet, SttSweep, TrajectoryGrid};
use crate::qoi::{self, OrbitFrame, QoiKind};
use crate::stats::BoxStats;
use crate::tensor::frobenius;

/// Resolved configuration plus the derived propagator and initial state.
#[derive(Clone, Debug)]
pub struct Context {
    pub config: ExperimentConfig,
    pub propagator: Propagator,
    /// Nondimensional planet-relative initial state.
    pub x0: [f64; N],
    /// Grid times [s].
    pub times: Vec<f64>,
    pub frame: OrbitFrame,
    pub search: SearchConfig,
    pub hash: String,
}

impl Context {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let models = config.models();
        let mut propagator = Propagator::new(models, config.integrator.to_config());
        if config.vacuum {
            propagator = propagator.without_aero();
        }
        let x0 = propagator
            .scales
            .nondimensionalize(&config.initial_state.to_relative(&models)?)
            .to_array();
        let times = uniform_grid(0.0, config.time.t_final_s, config.time.grid_step_s)?;
        let frame = OrbitFrame::from(&propagator.model);
        let search = SearchConfig::from(&config.eigen);
        let hash = config.hash();
        Ok(Self {
            config,
            propagator,
            x0,
            times,
            frame,
            search,
            hash,
        })
    }

    pub fn sweep(&self, order: usize, which: Component) -> Result<SttSweep> {
        self.propagator.integrate_stts(&self.x0, &self.times, order, which)
    }

    fn to_dimensional(&self, x: &[f64; N]) -> StateVector {
        self.propagator
            .scales
            .redimensionalize(&StateVector::from_array(*x, Units::Nondimensional))
    }

    fn energy_scale(&self) -> f64 {
        self.propagator.scales.speed_ref.powi(2)
    }

    fn length_scale(&self) -> f64 {
        self.propagator.scales.length_ref
    }
}

// ---------------------------------------------------------------- reference

#[derive(Clone, Debug, Serialize)]
pub struct ReferencePoint {
    pub t: f64,
    /// Dimensional state.
    pub state: [f64; N],
    /// [Pa]
    pub dynamic_pressure: f64,
    pub accel_ratio: f64,
    /// [J/kg]
    pub energy: f64,
    /// Energy including the J2 potential [J/kg].
    pub mechanical_energy: f64,
    /// [m]; `None` while not captured.
    pub apoapsis: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReferenceRun {
    #[serde(skip)]
    pub grid: TrajectoryGrid,
    pub points: Vec<ReferencePoint>,
    pub peak_dynamic_pressure_time: f64,
    /// First and last grid time with `accel_ratio > 1`.
    pub high_accel_window: Option<(f64, f64)>,
    pub energy_drop: f64,
    pub captured: bool,
}

pub fn reference(ctx: &Context) -> Result<ReferenceRun> {
    let grid = ctx.propagator.integrate_trajectory(&ctx.x0, &ctx.times)?;
    let dim_model = {
        let m = DynamicsModel::dimensional(&ctx.propagator.models);
        if ctx.config.vacuum {
            m.without_aero()
        } else {
            m
        }
    };
    let mut points = Vec::with_capacity(grid.times.len());
    for (t, x) in grid.times.iter().zip(&grid.states) {
        let xd = ctx.to_dimensional(x).to_array();
        points.push(ReferencePoint {
            t: *t,
            state: xd,
            dynamic_pressure: dim_model.dynamic_pressure(&xd),
            accel_ratio: dim_model.accel_ratio(&xd),
            energy: qoi::energy(x, ctx.frame) * ctx.energy_scale(),
            mechanical_energy: qoi::mechanical_energy(x, &ctx.propagator.model) * ctx.energy_scale(),
            apoapsis: qoi::apoapsis_radius(x, ctx.frame).ok().map(|r| r * ctx.length_scale()),
        });
    }
    let peak = points
        .iter()
        .max_by(|a, b| a.dynamic_pressure.total_cmp(&b.dynamic_pressure))
        .map(|p| p.t)
        .unwrap_or(0.0);
    let high: Vec<f64> = points.iter().filter(|p| p.accel_ratio > 1.0).map(|p| p.t).collect();
    let energy_drop = points[0].energy - points.last().expect("non-empty").energy;
    let captured = points.last().expect("non-empty").apoapsis.is_some();
    Ok(ReferenceRun {
        grid,
        peak_dynamic_pressure_time: peak,
        high_accel_window: high.first().map(|a| (*a, *high.last().expect("non-empty"))),
        energy_drop,
        captured,
        points,
    })
}

pub fn write_reference(ctx: &Context, run: &ReferenceRun, out: &Path) -> Result<Written> {
    let mut w = Written::default();
    let mut t = CsvTable::new(&[
        "t_s",
        "r_m",
        "theta_rad",
        "phi_rad",
        "v_m_s",
        "gamma_rad",
        "psi_rad",
        "zeta_ln_kg_m3",
        "dynamic_pressure_pa",
        "accel_ratio",
        "energy_j_kg",
        "mechanical_energy_j_kg",
        "apoapsis_m",
    ]);
    for p in &run.points {
        let mut row = vec![Cell::F(p.t)];
        row.extend(p.state.iter().map(|v| Cell::F(*v)));
        row.push(Cell::F(p.dynamic_pressure));
        row.push(Cell::F(p.accel_ratio));
        row.push(Cell::F(p.energy));
        row.push(Cell::F(p.mechanical_energy));
        row.push(Cell::F(p.apoapsis.unwrap_or(f64::NAN)));
        t.push(&row);
    }
    w.csv(out, "trajectory.csv", &t, &ctx.hash)?;
    w.json(out, "reference.json", run, &ctx.hash)?;
    Ok(w)
}

// ------------------------------------------------------------ STT validation

/// Relative Frobenius error of STTs against nested finite differences.
#[derive(Clone, Debug, Serialize)]
pub struct VariationalCheck {
    pub t_start: f64,
    pub t_end: f64,
    pub rel_error: [f64; 3],
}

/// Least-squares log-log slope of Taylor error against perturbation size.
#[derive(Clone, Debug, Serialize)]
pub struct SlopeCheck {
    pub order: usize,
    pub magnitudes: Vec<f64>,
    pub errors: Vec<f64>,
    pub slope: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SttValidation {
    pub variational: VariationalCheck,
    pub slopes: Vec<SlopeCheck>,
    /// Composed vs directly integrated STTs over the whole grid, per order.
    pub composition_rel_error: [f64; 3],
}

fn rel_frob(a: &[f64], b: &[f64]) -> f64 {
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    frobenius(&diff) / frobenius(b).max(f64::MIN_POSITIVE)
}

/// Finite-difference derivatives of the replayed flow over grid intervals
/// `i..j`: `(phi1, phi2, phi3)` from central differences of the flow, of its
/// first differences and of its second differences.
pub fn finite_difference_stts(prop: &Propagator, grid: &TrajectoryGrid, i: usize, j: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let x = grid.states[i];
    let flow = |dx: &[f64; N]| -> Result<[f64; N]> {
        let p: [f64; N] = std::array::from_fn(|k| x[k] + dx[k]);
        prop.replay_to(grid, &p, i, j)
    };
    let step = |k: usize, h: f64| -> [f64; N] {
        let mut d = [0.0; N];
        d[k] = h;
        d
    };
    let add = |a: &[f64; N], b: &[f64; N]| -> [f64; N] { std::array::from_fn(|k| a[k] + b[k]) };
    let h1 = 1e-6;
    let h2 = 1e-4;
    let h3 = 1e-3;
    let mut phi1 = vec![0.0; N * N];
    for a in 0..N {
        let fp = flow(&step(a, h1))?;
        let fm = flow(&step(a, -h1))?;
        for r in 0..N {
            phi1[r * N + a] = (fp[r] - fm[r]) / (2.0 * h1);
        }
    }
    // d2 f / da db by a 4-point stencil; d3 by a stencil over three axes
    let mut phi2 = vec![0.0; N * N * N];
    for a in 0..N {
        for b in a..N {
            let e = |sa: f64, sb: f64| flow(&add(&step(a, sa * h2), &step(b, sb * h2)));
            let (pp, pm, mp, mm) = (e(1.0, 1.0)?, e(1.0, -1.0)?, e(-1.0, 1.0)?, e(-1.0, -1.0)?);
            for r in 0..N {
                let v = (pp[r] - pm[r] - mp[r] + mm[r]) / (4.0 * h2 * h2);
                phi2[(r * N + a) * N + b] = v;
                phi2[(r * N + b) * N + a] = v;
            }
        }
    }
    let mut phi3 = vec![0.0; N * N * N * N];
    for a in 0..N {
        for b in a..N {
            for c in b..N {
                let mut acc = [0.0; N];
                for (sa, sb, sc) in [
                    (1.0, 1.0, 1.0),
                    (1.0, 1.0, -1.0),
                    (1.0, -1.0, 1.0),
                    (1.0, -1.0, -1.0),
                    (-1.0, 1.0, 1.0),
                    (-1.0, 1.0, -1.0),
                    (-1.0, -1.0, 1.0),
                    (-1.0, -1.0, -1.0),
                ] {
                    let d = add(&add(&step(a, sa * h3), &step(b, sb * h3)), &step(c, sc * h3));
                    let f = flow(&d)?;
                    let sign = sa * sb * sc;
                    for r in 0..N {
                        acc[r] += sign * f[r];
                    }
                }
                for r in 0..N {
                    let v = acc[r] / (8.0 * h3 * h3 * h3);
                    for (p, q, s) in [(a, b, c), (a, c, b), (b, a, c), (b, c, a), (c, a, b), (c, b, a)] {
                        phi3[((r * N + p) * N + q) * N + s] = v;
                    }
                }
            }
        }
    }
    Ok((phi1, phi2, phi3))
}

/// Grid index range of about `span` seconds centred on peak dynamic pressure.
pub fn peak_window(run: &ReferenceRun, span: f64) -> (usize, usize) {
    let times = &run.grid.times;
    let centre = run.peak_dynamic_pressure_time;
    let start = times.iter().position(|t| *t >= centre - span / 2.0).unwrap_or(0);
    let end = times.iter().position(|t| *t >= times[start] + span).unwrap_or(times.len() - 1);
    (start, end)
}

/// Perturbations `magnitude * d` with `d` a fixed unit direction.
pub fn taylor_slopes(ctx: &Context, sweep: &SttSweep, full: &SttSet, direction: &[f64; N], magnitudes: &[f64]) -> Result<Vec<SlopeCheck>> {
    let k = sweep.stts.len();
    let xf = sweep.grid.final_state();
    let mut truth = Vec::new();
    for &m in magnitudes {
        let x: [f64; N] = std::array::from_fn(|i| ctx.x0[i] + m * direction[i]);
        let xe = ctx.propagator.replay_to(&sweep.grid, &x, 0, k)?;
        truth.push(std::array::from_fn::<f64, N, _>(|i| xe[i] - xf[i]));
    }
    let mut out = Vec::new();
    for order in 1..=full.order {
        let mut errors = Vec::new();
        for (mag, t) in magnitudes.iter().zip(&truth) {
            let dx: [f64; N] = std::array::from_fn(|i| mag * direction[i]);
            let p = full.propagate(&dx, order)?;
            errors.push((0..N).map(|i| (p[i] - t[i]).powi(2)).sum::<f64>().sqrt());
        }
        out.push(SlopeCheck {
            order,
            slope: loglog_slope(magnitudes, &errors),
            magnitudes: magnitudes.to_vec(),
            errors,
        });
    }
    Ok(out)
}

pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Deterministic unit direction used by the slope study.
pub fn unit_direction(seed: u64) -> [f64; N] {
    let v = start_vector(seed, 0, N);
    std::array::from_fn(|i| v[i])
}

pub fn stt_validate(ctx: &Context) -> Result<SttValidation> {
    let run = reference(ctx)?;
    let sweep = ctx.sweep(3, Component::Full)?;
    let (i, j) = peak_window(&run, 100.0);
    let seg = sweep.compose_range(i, j)?;
    let (f1, f2, f3) = finite_difference_stts(&ctx.propagator, &sweep.grid, i, j)?;
    let variational = VariationalCheck {
        t_start: sweep.grid.times[i],
        t_end: sweep.grid.times[j],
        rel_error: [rel_frob(&seg.phi1, &f1), rel_frob(&seg.phi2, &f2), rel_frob(&seg.phi3, &f3)],
    };

    let full = sweep.compose_range(0, sweep.stts.len())?;
    let magnitudes: Vec<f64> = (0..9).map(|k| 10f64.powf(-8.0 + 0.5 * k as f64)).collect();
    let slopes = taylor_slopes(ctx, &sweep, &full, &unit_direction(ctx.config.direction_study.seed), &magnitudes)?;

    let t_end = *ctx.times.last().expect("non-empty");
    let (direct, _, _) = ctx.propagator.integrate_interval(&ctx.x0, ctx.times[0], t_end, 3, Component::Full)?;
    let composition_rel_error = [
        rel_frob(&full.phi1, &direct.phi1),
        rel_frob(&full.phi2, &direct.phi2),
        rel_frob(&full.phi3, &direct.phi3),
    ];
    Ok(SttValidation {
        variational,
        slopes,
        composition_rel_error,
    })
}

pub fn write_stt_validation(ctx: &Context, v: &SttValidation, out: &Path) -> Result<Written> {
    let mut w = Written::default();
    let mut t = CsvTable::new(&["order", "magnitude_nd", "error_nd"]);
    for s in &v.slopes {
        for (m, e) in s.magnitudes.iter().zip(&s.errors) {
            t.push(&[Cell::U(s.order), Cell::F(*m), Cell::F(*e)]);
        }
    }
    w.csv(out, "taylor_scaling.csv", &t, &ctx.hash)?;
    w.json(out, "stt_validation.json", v, &ctx.hash)?;
    Ok(w)
}

// ------------------------------------------------------------- eigen studies

#[derive(Clone, Debug, Serialize)]
pub struct DecomposedRow {
    pub t_start: f64,
    pub t_end: f64,
    pub full: Vec<f64>,
    pub conservative: Vec<f64>,
    pub dissipative: Vec<f64>,
    pub lambda_full: f64,
    pub lambda_conservative: f64,
    pub lambda_dissipative: f64,
    pub angle_dissipative_full_deg: f64,
    pub angle_conservative_full_deg: f64,
}

/// Dominant second-order CGT eigenvectors of the full, conservative and
/// dissipative STMs on every grid interval.
pub fn decomposed_cgt(ctx: &Context) -> Result<Vec<DecomposedRow>> {
    let full = ctx.sweep(1, Component::Full)?;
    let cons = ctx.sweep(1, Component::Conservative)?;
    let diss = ctx.sweep(1, Component::Dissipative)?;
    let mut rows = Vec::new();
    for k in 0..full.stts.len() {
        let dom = |s: &SttSet| {
            let e = symmetric_eigen(&second_order_cgt(&s.phi1, N), N);
            e.into_iter().next().expect("n > 0")
        };
        let (lf, vf) = dom(&full.stts[k]);
        let (lc, vc) = dom(&cons.stts[k]);
        let (ld, vd) = dom(&diss.stts[k]);
        rows.push(DecomposedRow {
            t_start: full.stts[k].t_start,
            t_end: full.stts[k].t_end,
            angle_dissipative_full_deg: vector_angle(&vd, &vf)?,
            angle_conservative_full_deg: vector_angle(&vc, &vf)?,
            full: vf,
            conservative: vc,
            dissipative: vd,
            lambda_full: lf,
            lambda_conservative: lc,
            lambda_dissipative: ld,
        });
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenRow {
    pub t_start: f64,
    pub t_end: f64,
    pub family: String,
    pub order: usize,
    pub lambda_1: f64,
    pub lambda_2: f64,
    pub v: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
}

fn eigen_row(stt: &SttSet, family: &CgtFamily<'_>, name: &str, m: usize, search: &SearchConfig) -> EigenRow {
    let base = |lambda_1, lambda_2, v, residual, converged| EigenRow {
        t_start: stt.t_start,
        t_end: stt.t_end,
        family: name.to_string(),
        order: m,
        lambda_1,
        lambda_2,
        v,
        residual,
        converged,
    };
    if m == 2 {
        let c = match cgt(stt, family, 2) {
            Ok(c) => c,
            Err(_) => return base(f64::NAN, f64::NAN, vec![f64::NAN; N], f64::NAN, false),
        };
        let e = symmetric_eigen(c.data(), N);
        return base(e[0].0, e[1].0, e[0].1.clone(), 0.0, true);
    }
    match cgt(stt, family, m).and_then(|t| max_eigenpair(&t, search)) {
        Ok(s) => {
            let b = s.best();
            base(
                b.lambda,
                s.runner_up().map(|r| r.lambda).unwrap_or(f64::NAN),
                b.v.clone(),
                b.residual,
                true,
            )
        }
        Err(_) => base(f64::NAN, f64::NAN, vec![f64::NAN; N], f64::NAN, false),
    }
}

/// Per-interval maximal eigenpairs of orders 2-4 for the HOCGT, the sCGT
/// (radius, speed, flight path angle) and the energy qCGT.
pub fn interval_eigenpairs(ctx: &Context, sweep: &SttSweep) -> Result<Vec<EigenRow>> {
    let sel = SelectionMatrix::position_velocity_fpa();
    let mut rows = Vec::new();
    for (k, stt) in sweep.stts.iter().enumerate() {
        let xe = sweep.grid.states[k + 1];
        let eta = qoi::qoi_partials(&xe, QoiKind::Energy, 3, ctx.frame)?;
        for (name, fam) in [
            ("hocgt", CgtFamily::Full),
            ("scgt", CgtFamily::Selective(&sel)),
            ("eps-qcgt", CgtFamily::Quantity(&eta)),
        ] {
            for m in 2..=4 {
                rows.push(eigen_row(stt, &fam, name, m, &ctx.search));
            }
        }
    }
    Ok(rows)
}

/// Angle between consecutive maximal eigenvectors of one family and order.
#[derive(Clone, Debug, Serialize)]
pub struct ModeAngle {
    pub family: String,
    pub order: usize,
    pub t: f64,
    pub angle_deg: f64,
}

pub fn mode_angles(rows: &[EigenRow]) -> Vec<ModeAngle> {
    let mut out = Vec::new();
    let mut keys: Vec<(String, usize)> = rows.iter().map(|r| (r.family.clone(), r.order)).collect();
    keys.sort();
    keys.dedup();
    for (fam, m) in keys {
        let series: Vec<&EigenRow> = rows.iter().filter(|r| r.family == fam && r.order == m).collect();
        for w in series.windows(2) {
            let angle = vector_angle(&w[0].v, &w[1].v).unwrap_or(f64::NAN);
            out.push(ModeAngle {
                family: fam.clone(),
                order: m,
                t: w[1].t_start,
                angle_deg: angle,
            });
        }
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct MaximalityRow {
    pub family: String,
    /// 0 is the maximal eigenvector, 1..=6 the orthonormal completion.
    pub direction: usize,
    pub objective: f64,
    pub relative: f64,
}

/// The maximal direction followed by `N - 1` seeded Gram-Schmidt completion
/// vectors.
pub fn orthonormal_completion(v: &[f64], seed: u64) -> Vec<Vec<f64>> {
    let mut frame = vec![v.to_vec()];
    let mut k = 0;
    while frame.len() < v.len() {
        let mut u = start_vector(seed, k, v.len());
        k += 1;
        for _ in 0..2 {
            for f in &frame {
                let d: f64 = u.iter().zip(f).map(|(a, b)| a * b).sum();
                u.iter_mut().zip(f).for_each(|(a, b)| *a -= d * b);
            }
        }
        let n = frobenius(&u);
        if n > 1e-6 {
            u.iter_mut().for_each(|a| *a /= n);
            frame.push(u);
        }
    }
    frame
}

/// Integrated final objectives for perturbations of size `magnitude` along
/// the maximal order-3 eigenvector of each family over the whole flight and
/// its orthonormal completion.
pub fn maximality(ctx: &Context, sweep: &SttSweep, full: &SttSet) -> Result<Vec<MaximalityRow>> {
    let k = sweep.stts.len();
    let xf = sweep.grid.final_state();
    let sel = SelectionMatrix::position_velocity_fpa();
    let ra = qoi::qoi_partials(&xf, QoiKind::Apoapsis, 3, ctx.frame)?;
    let mag = ctx.config.direction_study.magnitude;
    let mut rows = Vec::new();
    for (name, fam) in [
        ("hocgt", CgtFamily::Full),
        ("scgt", CgtFamily::Selective(&sel)),
        ("ra-qcgt", CgtFamily::Quantity(&ra)),
    ] {
        let best = max_eigenpair(&cgt(full, &fam, 3)?, &ctx.search)?;
        let dirs = orthonormal_completion(&best.best().v, ctx.config.direction_study.seed);
        let mut objs = Vec::new();
        for d in &dirs {
            let x: [f64; N] = std::array::from_fn(|i| ctx.x0[i] + mag * d[i]);
            let xe = ctx.propagator.replay_to(&sweep.grid, &x, 0, k)?;
            let diff: Vec<f64> = (0..N).map(|i| xe[i] - xf[i]).collect();
            let obj = match fam {
                CgtFamily::Full => frobenius(&diff),
                CgtFamily::Selective(s) => s.rows().iter().map(|&r| diff[r] * diff[r]).sum::<f64>().sqrt(),
                CgtFamily::Quantity(q) => (qoi::evaluate(q.kind, &xe, ctx.frame)? - q.value).abs(),
            };
            objs.push(obj);
        }
        for (i, o) in objs.iter().enumerate() {
            rows.push(MaximalityRow {
                family: name.into(),
                direction: i,
                objective: *o,
                relative: o / objs[0],
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, Serialize)]
pub struct EigStudies {
    pub decomposed: Vec<DecomposedRow>,
    pub eigenpairs: Vec<EigenRow>,
    pub mode_angles: Vec<ModeAngle>,
    pub maximality: Vec<MaximalityRow>,
}

pub fn eig_studies(ctx: &Context) -> Result<EigStudies> {
    let decomposed = decomposed_cgt(ctx)?;
    let sweep = ctx.sweep(3, Component::Full)?;
    let eigenpairs = interval_eigenpairs(ctx, &sweep)?;
    let mode_angles = mode_angles(&eigenpairs);
    let full = sweep.compose_range(0, sweep.stts.len())?;
    let maximality = maximality(ctx, &sweep, &full)?;
    Ok(EigStudies {
        decomposed,
        eigenpairs,
        mode_angles,
        maximality,
    })
}

fn vec_columns(prefix: &str) -> Vec<String> {
    (0..N).map(|i| format!("{prefix}{i}")).collect()
}

pub fn write_eig_studies(ctx: &Context, e: &EigStudies, out: &Path) -> Result<Written> {
    let mut w = Written::default();

    let mut cols: Vec<String> = vec!["t_k_s".into(), "t_kp1_s".into()];
    for p in ["full_v", "conservative_v", "dissipative_v"] {
        cols.extend(vec_columns(p));
    }
    cols.extend(
        ["lambda_full", "lambda_conservative", "lambda_dissipative", "angle_dissipative_full_deg", "angle_conservative_full_deg"]
            .map(String::from),
    );
    let mut t = CsvTable::new(&cols);
    for r in &e.decomposed {
        let mut row = vec![Cell::F(r.t_start), Cell::F(r.t_end)];
        for v in [&r.full, &r.conservative, &r.dissipative] {
            row.extend(v.iter().map(|x| Cell::F(*x)));
        }
        for x in [
            r.lambda_full,
            r.lambda_conservative,
            r.lambda_dissipative,
            r.angle_dissipative_full_deg,
            r.angle_conservative_full_deg,
        ] {
            row.push(Cell::F(x));
        }
        t.push(&row);
    }
    w.csv(out, "decomposed_cgt.csv", &t, &ctx.hash)?;

    let mut cols: Vec<String> = ["t_k_s", "t_kp1_s", "method", "order", "lambda_1", "lambda_2"].map(String::from).to_vec();
    cols.extend(vec_columns("v"));
    cols.push("residual".into());
    let mut t = CsvTable::new(&cols);
    for r in &e.eigenpairs {
        let mut row = vec![
            Cell::F(r.t_start),
            Cell::F(r.t_end),
            Cell::S(&r.family),
            Cell::U(r.order),
            Cell::F(r.lambda_1),
            Cell::F(r.lambda_2),
        ];
        row.extend(r.v.iter().map(|x| Cell::F(*x)));
        row.push(Cell::F(r.residual));
        t.push(&row);
    }
    w.csv(out, "cgt_eigenpairs.csv", &t, &ctx.hash)?;

    let mut t = CsvTable::new(&["t_s", "method", "order", "angle_deg"]);
    for m in &e.mode_angles {
        t.push(&[Cell::F(m.t), Cell::S(&m.family), Cell::U(m.order), Cell::F(m.angle_deg)]);
    }
    w.csv(out, "mode_angles.csv", &t, &ctx.hash)?;

    let mut t = CsvTable::new(&["method", "direction", "objective_nd", "relative_objective"]);
    for m in &e.maximality {
        t.push(&[Cell::S(&m.family), Cell::U(m.direction), Cell::F(m.objective), Cell::F(m.relative)]);
    }
    w.csv(out, "maximality.csv", &t, &ctx.hash)?;

    #[derive(Serialize)]
    struct Summary<'a> {
        intervals: usize,
        max_angle_dissipative_full_deg: f64,
        max_conservative_zeta_component: f64,
        maximality: &'a [MaximalityRow],
    }
    let summary = Summary {
        intervals: e.decomposed.len(),
        max_angle_dissipative_full_deg: e.decomposed.iter().map(|r| r.angle_dissipative_full_deg).fold(0.0, f64::max),
        max_conservative_zeta_component: e.decomposed.iter().map(|r| r.conservative[ZETA].abs()).fold(0.0, f64::max),
        maximality: &e.maximality,
    };
    w.json(out, "eig_studies.json", &summary, &ctx.hash)?;
    Ok(w)
}

// ------------------------------------------------------------------- DSTTs

/// Builds the rotation basis of a DSTT method from the STTs of one interval.
/// `eta_energy` and `eta_apoapsis` are the quantity partials at the
/// interval's final state (required only by the quantity methods).
pub fn method_basis(
    method: Method,
    stt: &SttSet,
    eta_energy: Option<&qoi::QoiPartials>,
    eta_apoapsis: Option<&qoi::QoiPartials>,
    search: &SearchConfig,
) -> Result<crate::dstt::RotationBasis> {
    let tensor = |fam: CgtFamily<'_>, tag| -> Result<TensorBasis> { tensor_basis(stt, &fam, tag, search) };
    let missing = |what: &str| Error::Config(format!("{method} needs {what} partials"));
    Ok(match method {
        Method::Dstt1 => cgt2_basis(stt, 1)?,
        Method::Dstt3 => cgt2_basis(stt, 3)?,
        Method::Dstt6 => cgt2_basis(stt, 6)?,
        Method::Dstt7 => cgt2_basis(stt, 7)?,
        Method::HoDstt => tensor(CgtFamily::Full, BasisTag::Hocgt)?.basis,
        Method::SDstt => {
            let sel = SelectionMatrix::position_velocity_fpa();
            tensor(CgtFamily::Selective(&sel), BasisTag::Scgt)?.basis
        }
        Method::EpsQDstt => tensor(CgtFamily::Quantity(eta_energy.ok_or_else(|| missing("energy"))?), BasisTag::QcgtEnergy)?.basis,
        Method::RaQDstt => tensor(CgtFamily::Quantity(eta_apoapsis.ok_or_else(|| missing("apoapsis"))?), BasisTag::QcgtApoapsis)?.basis,
        Method::Stm | Method::Stt2 | Method::Stt3 => {
            return Err(Error::Config(format!("{method} is not a DSTT method")));
        }
    })
}

/// A propagation method ready to map perturbations over one interval.
#[derive(Clone, Debug)]
pub enum Approximation {
    Stt { stt: SttSet, order: usize },
    Dstt(Box<DsttSet>),
}

impl Approximation {
    pub fn build(
        method: Method,
        stt: &SttSet,
        eta_energy: Option<&qoi::QoiPartials>,
        eta_apoapsis: Option<&qoi::QoiPartials>,
        search: &SearchConfig,
    ) -> Result<Self> {
        Ok(match method {
            Method::Stm => Approximation::Stt { stt: stt.truncated(1), order: 1 },
            Method::Stt2 => Approximation::Stt { stt: stt.truncated(2), order: 2 },
            Method::Stt3 => Approximation::Stt { stt: stt.clone(), order: 3 },
            _ => {
                let basis = method_basis(method, stt, eta_energy, eta_apoapsis, search)?;
                Approximation::Dstt(Box::new(construct_dstt(stt, &basis)?))
            }
        })
    }

    pub fn propagate(&self, dx: &[f64; N]) -> Result<[f64; N]> {
        match self {
            Approximation::Stt { stt, order } => stt.propagate(dx, *order),
            Approximation::Dstt(d) => d.propagate(dx, 3),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FrobeniusRow {
    pub t_start: f64,
    pub t_end: f64,
    pub method: Method,
    pub error: FrobeniusError,
}

/// Methods compared on per-interval maps.
pub const FROBENIUS_METHODS: [Method; 7] = [
    Method::Dstt1,
    Method::Dstt3,
    Method::Dstt6,
    Method::Dstt7,
    Method::HoDstt,
    Method::SDstt,
    Method::EpsQDstt,
];

pub fn frobenius_sweep(ctx: &Context, sweep: &SttSweep, methods: &[Method]) -> Result<Vec<FrobeniusRow>> {
    let mut rows = Vec::new();
    for (k, stt) in sweep.stts.iter().enumerate() {
        let eta = qoi::qoi_partials(&sweep.grid.states[k + 1], QoiKind::Energy, 3, ctx.frame)?;
        for &m in methods {
            if !m.is_dstt() || m == Method::RaQDstt {
                continue;
            }
            let basis = method_basis(m, stt, Some(&eta), None, &ctx.search)?;
            let dstt = construct_dstt(stt, &basis)?;
            rows.push(FrobeniusRow {
                t_start: stt.t_start,
                t_end: stt.t_end,
                method: m,
                error: frobenius_error(stt, &dstt)?,
            });
        }
    }
    Ok(rows)
}

pub fn frobenius_study(ctx: &Context) -> Result<Vec<FrobeniusRow>> {
    let sweep = ctx.sweep(3, Component::Full)?;
    let methods: Vec<Method> = if ctx.config.methods.iter().any(|m| FROBENIUS_METHODS.contains(m)) {
        ctx.config.methods.iter().copied().filter(|m| FROBENIUS_METHODS.contains(m)).collect()
    } else {
        FROBENIUS_METHODS.to_vec()
    };
    frobenius_sweep(ctx, &sweep, &methods)
}

pub fn write_frobenius(ctx: &Context, rows: &[FrobeniusRow], out: &Path) -> Result<Written> {
    let mut w = Written::default();
    let mut t = CsvTable::new(&["t_k_s", "t_kp1_s", "method", "eps2", "eps3", "stt2_norm_nd", "stt3_norm_nd", "low_nonlinearity"]);
    for r in rows {
        t.push(&[
            Cell::F(r.t_start),
            Cell::F(r.t_end),
            Cell::S(r.method.name()),
            Cell::F(r.error.eps2),
            Cell::F(r.error.eps3),
            Cell::F(r.error.norm2),
            Cell::F(r.error.norm3),
            Cell::U(r.error.low_nonlinearity as usize),
        ]);
    }
    w.csv(out, "frobenius.csv", &t, &ctx.hash)?;
    #[derive(Serialize)]
    struct MethodMean {
        method: Method,
        mean_eps2: f64,
        mean_eps3: f64,
    }
    let mut means = Vec::new();
    let mut seen: Vec<Method> = rows.iter().map(|r| r.method).collect();
    seen.sort();
    seen.dedup();
    for m in seen {
        let sel: Vec<&FrobeniusRow> = rows.iter().filter(|r| r.method == m && !r.error.low_nonlinearity).collect();
        let n = sel.len().max(1) as f64;
        means.push(MethodMean {
            method: m,
            mean_eps2: sel.iter().map(|r| r.error.eps2).sum::<f64>() / n,
            mean_eps3: sel.iter().map(|r| r.error.eps3).sum::<f64>() / n,
        });
    }
    w.json(out, "frobenius.json", &serde_json::json!({ "methods": means }), &ctx.hash)?;
    Ok(w)
}

// --------------------------------------------------------- direction study

#[derive(Clone, Debug, Serialize)]
pub struct DirectionRow {
    pub kappa_deg: f64,
    pub t: f64,
    pub method: Method,
    pub error: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DirectionStudy {
    pub r2: Vec<f64>,
    pub u: Vec<f64>,
    pub rows: Vec<DirectionRow>,
}

pub fn direction_study(ctx: &Context) -> Result<DirectionStudy> {
    let sweep = ctx.sweep(3, Component::Full)?;
    let maps = sweep.maps_from_start()?;
    let full = maps.last().expect("non-empty");
    let hocgt = max_eigenpair(&cgt(full, &CgtFamily::Full, 3)?, &ctx.search)?;
    let mut r2 = hocgt.best().v.clone();
    crate::eigen::normalize_sign(&mut r2);
    let u = orthonormal_completion(&r2, ctx.config.direction_study.seed)[1].clone();
    let basis = crate::dstt::RotationBasis::new(BasisTag::Hocgt, (full.t_start, full.t_end), r2.clone(), r2.clone())?;
    let dstts: Vec<DsttSet> = maps.iter().map(|m| construct_dstt(m, &basis)).collect::<Result<_>>()?;
    let count = ctx.config.direction_study.angles;
    let mag = ctx.config.direction_study.magnitude;
    let mut rows = Vec::new();
    for a in 0..count {
        let kappa = 90.0 * a as f64 / (count - 1) as f64;
        let (s, c) = if a == 0 {
            (0.0, 1.0)
        } else if a == count - 1 {
            (1.0, 0.0)
        } else {
            kappa.to_radians().sin_cos()
        };
        let dx: [f64; N] = std::array::from_fn(|i| mag * (c * r2[i] + s * u[i]));
        let x: [f64; N] = std::array::from_fn(|i| ctx.x0[i] + dx[i]);
        let truth = ctx.propagator.replay(&sweep.grid, &x, 0, sweep.stts.len())?;
        for k in 0..maps.len() {
            let dtrue: [f64; N] = std::array::from_fn(|i| truth[k][i] - sweep.grid.states[k][i]);
            let err = |p: [f64; N]| (0..N).map(|i| (p[i] - dtrue[i]).powi(2)).sum::<f64>().sqrt();
            for (method, pred) in [
                (Method::Stm, maps[k].propagate(&dx, 1)?),
                (Method::Stt2, maps[k].propagate(&dx, 2)?),
                (Method::HoDstt, dstts[k].propagate(&dx, 2)?),
            ] {
                rows.push(DirectionRow {
                    kappa_deg: kappa,
                    t: sweep.grid.times[k],
                    method,
                    error: err(pred),
                });
            }
        }
    }
    Ok(DirectionStudy { r2, u, rows })
}

pub fn write_direction_study(ctx: &Context, d: &DirectionStudy, out: &Path) -> Result<Written> {
    let mut w = Written::default();
    let mut t = CsvTable::new(&["kappa_deg", "t_s", "method", "error_nd"]);
    for r in &d.rows {
        t.push(&[Cell::F(r.kappa_deg), Cell::F(r.t), Cell::S(r.method.name()), Cell::F(r.error)]);
    }
    w.csv(out, "direction_study.csv", &t, &ctx.hash)?;
    let t_f = d.rows.iter().map(|r| r.t).fold(f64::MIN, f64::max);
    let finals: Vec<&DirectionRow> = d.rows.iter().filter(|r| r.t == t_f).collect();
    w.json(
        out,
        "direction_study.json",
        &serde_json::json!({ "r2": d.r2, "u": d.u, "final_errors": finals }),
        &ctx.hash,
    )?;
    Ok(w)
}

// -------------------------------------------------------------- Monte Carlo

#[derive(Clone, Debug, Serialize)]
pub struct SampleRow {
    pub sample: usize,
    pub method: Method,
    /// Whether the integrated perturbed trajectory ends captured.
    pub captured: bool,
    /// [m]; NaN when excluded.
    pub abs_delta_ra: f64,
    /// [J/kg]
    pub abs_delta_energy: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct MethodStats {
    pub method: Method,
    pub apoapsis: BoxStats,
    pub energy: BoxStats,
}

#[derive(Clone, Debug, Serialize)]
pub struct MonteCarlo {
    pub samples: usize,
    pub escaped: usize,
    pub seed: u64,
    pub sigmas_nd: [f64; N],
    pub stats: Vec<MethodStats>,
    #[serde(skip)]
    pub rows: Vec<SampleRow>,
}

/// Zero-mean Gaussian perturbation `k`, drawn from its own stream.
pub fn sample_perturbation(seed: u64, k: usize, sigmas: &[f64; N]) -> [f64; N] {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    std::array::from_fn(|i| {
        let z: f64 = StandardNormal.sample(&mut rng);
        z * sigmas[i]
    })
}

pub fn monte_carlo(ctx: &Context) -> Result<MonteCarlo> {
    let mc = &ctx.config.monte_carlo;
    let sigmas = mc.nondimensional_sigmas(&ctx.propagator.scales);
    let methods = ctx.config.methods.clone();
    if mc.samples == 0 {
        return Ok(MonteCarlo {
            samples: 0,
            escaped: 0,
            seed: mc.seed,
            sigmas_nd: sigmas,
            stats: methods
                .iter()
                .map(|&m| MethodStats {
                    method: m,
                    apoapsis: BoxStats::from_samples(&[]),
                    energy: BoxStats::from_samples(&[]),
                })
                .collect(),
            rows: Vec::new(),
        });
    }
    let sweep = ctx.sweep(3, Component::Full)?;
    let k = sweep.stts.len();
    let full = sweep.compose_range(0, k)?;
    let xf = sweep.grid.final_state();
    let eta_e = qoi::qoi_partials(&xf, QoiKind::Energy, 3, ctx.frame)?;
    let eta_r = qoi::qoi_partials(&xf, QoiKind::Apoapsis, 3, ctx.frame).ok();
    let approx: Vec<Approximation> = methods
        .iter()
        .map(|&m| Approximation::build(m, &full, Some(&eta_e), eta_r.as_ref(), &ctx.search))
        .collect::<Result<_>>()?;
    let (ls, es) = (ctx.length_scale(), ctx.energy_scale());
    let mut rows = Vec::with_capacity(mc.samples * methods.len());
    let mut escaped = 0;
    for s in 0..mc.samples {
        let dx = sample_perturbation(mc.seed, s, &sigmas);
        let x: [f64; N] = std::array::from_fn(|i| ctx.x0[i] + dx[i]);
        let xt = ctx.propagator.replay_to(&sweep.grid, &x, 0, k)?;
        let ra_true = qoi::apoapsis_radius(&xt, ctx.frame).ok();
        let e_true = qoi::energy(&xt, ctx.frame);
        if ra_true.is_none() {
            escaped += 1;
        }
        for (m, a) in methods.iter().zip(&approx) {
            let d = a.propagate(&dx)?;
            let xp: [f64; N] = std::array::from_fn(|i| xf[i] + d[i]);
            let ra = match (ra_true, qoi::apoapsis_radius(&xp, ctx.frame)) {
                (Some(t), Ok(p)) => (p - t).abs() * ls,
                _ => f64::NAN,
            };
            rows.push(SampleRow {
                sample: s,
                method: *m,
                captured: ra_true.is_some(),
                abs_delta_ra: ra,
                abs_delta_energy: (qoi::energy(&xp, ctx.frame) - e_true).abs() * es,
            });
        }
    }
    let stats = methods
        .iter()
        .map(|&m| {
            let ra: Vec<f64> = rows.iter().filter(|r| r.method == m).map(|r| r.abs_delta_ra).collect();
            let en: Vec<f64> = rows.iter().filter(|r| r.method == m).map(|r| r.abs_delta_energy).collect();
            MethodStats {
                method: m,
                apoapsis: BoxStats::from_samples(&ra),
                energy: BoxStats::from_samples(&en),
            }
        })
        .collect();
    Ok(MonteCarlo {
        samples: mc.samples,
        escaped,
        seed: mc.seed,
        sigmas_nd: sigmas,
        stats,
        rows,
    })
}

impl MonteCarlo {
    pub fn stats_for(&self, m: Method) -> Option<&MethodStats> {
        self.stats.iter().find(|s| s.method == m)
    }
}

pub fn write_monte_carlo(ctx: &Context, mc: &MonteCarlo, out: &Path) -> Result<Written> {
    let mut w = Written::default();
    let mut t = CsvTable::new(&["sample", "method", "captured", "abs_delta_ra_m", "abs_delta_energy_j_kg"]);
    for r in &mc.rows {
        t.push(&[
            Cell::U(r.sample),
            Cell::S(r.method.name()),
            Cell::U(r.captured as usize),
            Cell::F(r.abs_delta_ra),
            Cell::F(r.abs_delta_energy),
        ]);
    }
    w.csv(out, "monte_carlo_samples.csv", &t, &ctx.hash)?;
    w.json(out, "monte_carlo.json", mc, &ctx.hash)?;
    Ok(w)
}

/// Mean absolute energy error of each method at every grid time, over
/// `samples` Monte Carlo draws propagated with the `(t_k, t_0)` maps.
pub fn energy_history(ctx: &Context, samples: usize) -> Result<CsvTable> {
    let mc = &ctx.config.monte_carlo;
    let sigmas = mc.nondimensional_sigmas(&ctx.propagator.scales);
    let sweep = ctx.sweep(3, Component::Full)?;
    let maps = sweep.maps_from_start()?;
    let mut approx: Vec<Vec<Approximation>> = Vec::new();
    for (k, map) in maps.iter().enumerate() {
        let eta_e = qoi::qoi_partials(&sweep.grid.states[k], QoiKind::Energy, 3, ctx.frame)?;
        let mut row = Vec::new();
        for &m in &ctx.config.methods {
            if m == Method::RaQDstt {
                continue;
            }
            row.push(if k == 0 {
                Approximation::Stt { stt: map.clone(), order: 1 }
            } else {
                Approximation::build(m, map, Some(&eta_e), None, &ctx.search)?
            });
        }
        approx.push(row);
    }
    let methods: Vec<Method> = ctx.config.methods.iter().copied().filter(|m| *m != Method::RaQDstt).collect();
    let mut sums = vec![vec![0.0; methods.len()]; maps.len()];
    for s in 0..samples {
        let dx = sample_perturbation(mc.seed, s, &sigmas);
        let x: [f64; N] = std::array::from_fn(|i| ctx.x0[i] + dx[i]);
        let truth = ctx.propagator.replay(&sweep.grid, &x, 0, sweep.stts.len())?;
        for k in 0..maps.len() {
            let xr = sweep.grid.states[k];
            let e_true = qoi::energy(&truth[k], ctx.frame);
            for (j, a) in approx[k].iter().enumerate() {
                let d = a.propagate(&dx)?;
                let xp: [f64; N] = std::array::from_fn(|i| xr[i] + d[i]);
                sums[k][j] += (qoi::energy(&xp, ctx.frame) - e_true).abs();
            }
        }
    }
    let mut t = CsvTable::new(&["t_s", "method", "mean_abs_delta_energy_j_kg"]);
    for (k, row) in sums.iter().enumerate() {
        for (j, m) in methods.iter().enumerate() {
            t.push(&[
                Cell::F(sweep.grid.times[k]),
                Cell::S(m.name()),
                Cell::F(row[j] / samples.max(1) as f64 * ctx.energy_scale()),
            ]);
        }
    }
    Ok(t)
}

//! Reference trajectories, state transition tensors (STTs) to third order,
//! their algebraic composition and Taylor-series perturbation propagation.
//!
//! STT layout is row-major with the output component first:
//! `phi1[i*n + a]`, `phi2[(i*n + a)*n + b]`, `phi3[((i*n + a)*n + b)*n + c]`.
//! Tensor entries are with respect to the nondimensional state; interval
//! end points are in seconds.

use serde::{Deserialize, Serialize};

use crate::dynamics::{Component, DynamicsModel, Models, Scales, N};
use crate::error::{Error, Result};
use crate::integrator::{self, IntegratorConfig, OdeSystem};
use crate::tensor::{chain, symmetrize_trailing, Derivs};

const N2: usize = N * N;
const N3: usize = N2 * N;
const N4: usize = N3 * N;

/// Solution-flow partials over one time interval `(t_start -> t_end)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SttSet {
    /// [s]
    pub t_start: f64,
    /// [s]
    pub t_end: f64,
    pub order: usize,
    pub dim: usize,
    pub component: Component,
    pub phi1: Vec<f64>,
    /// Empty when `order < 2`.
    pub phi2: Vec<f64>,
    /// Empty when `order < 3`.
    pub phi3: Vec<f64>,
}

impl SttSet {
    /// `(I, 0, 0)` over the zero-length interval at `t`.
    pub fn identity(t: f64, order: usize) -> Self {
        let mut phi1 = vec![0.0; N2];
        for i in 0..N {
            phi1[i * N + i] = 1.0;
        }
        Self {
            t_start: t,
            t_end: t,
            order,
            dim: N,
            component: Component::Full,
            phi1,
            phi2: if order >= 2 { vec![0.0; N3] } else { Vec::new() },
            phi3: if order >= 3 { vec![0.0; N4] } else { Vec::new() },
        }
    }

    pub fn derivs(&self) -> Derivs<'_> {
        Derivs {
            first: &self.phi1,
            second: &self.phi2,
            third: &self.phi3,
        }
    }

    /// Keeps only the first `order` tensors.
    pub fn truncated(&self, order: usize) -> Self {
        let mut out = self.clone();
        out.order = order.min(self.order);
        if out.order < 3 {
            out.phi3.clear();
        }
        if out.order < 2 {
            out.phi2.clear();
        }
        out
    }

    /// Taylor-series propagation of `dx` through the first `m` orders.
    pub fn propagate(&self, dx: &[f64; N], m: usize) -> Result<[f64; N]> {
        if m == 0 || m > self.order {
            return Err(Error::InsufficientOrder { needed: m, have: self.order });
        }
        let mut out = [0.0; N];
        for i in 0..N {
            let mut acc = 0.0;
            for a in 0..N {
                acc += self.phi1[i * N + a] * dx[a];
            }
            if m >= 2 {
                let mut s2 = 0.0;
                for a in 0..N {
                    let mut inner = 0.0;
                    for b in 0..N {
                        inner += self.phi2[(i * N + a) * N + b] * dx[b];
                    }
                    s2 += inner * dx[a];
                }
                acc += 0.5 * s2;
            }
            if m >= 3 {
                let mut s3 = 0.0;
                for a in 0..N {
                    let mut sa = 0.0;
                    for b in 0..N {
                        let base = ((i * N + a) * N + b) * N;
                        let mut sb = 0.0;
                        for c in 0..N {
                            sb += self.phi3[base + c] * dx[c];
                        }
                        sa += sb * dx[b];
                    }
                    s3 += sa * dx[a];
                }
                acc += s3 / 6.0;
            }
            out[i] = acc;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let stt: SttSet = serde_json::from_str(s)?;
        let expect = |len: usize, want: usize, name: &str| {
            if len != want {
                Err(Error::Dimension(format!("{name} has {len} entries, expected {want}")))
            } else {
                Ok(())
            }
        };
        expect(stt.phi1.len(), N2, "phi1")?;
        expect(stt.phi2.len(), if stt.order >= 2 { N3 } else { 0 }, "phi2")?;
        expect(stt.phi3.len(), if stt.order >= 3 { N4 } else { 0 }, "phi3")?;
        Ok(stt)
    }
}

/// Chain-rule composition of `ab` over `(t_a, t_b)` followed by `bc` over
/// `(t_b, t_c)`, giving the STTs over `(t_a, t_c)`.
pub fn compose(ab: &SttSet, bc: &SttSet) -> Result<SttSet> {
    let tol = 1e-9 * (1.0 + ab.t_end.abs());
    if (ab.t_end - bc.t_start).abs() > tol {
        return Err(Error::IntervalMismatch(format!(
            "first map ends at {} but second starts at {}",
            ab.t_end, bc.t_start
        )));
    }
    if ab.order != bc.order {
        return Err(Error::IntervalMismatch(format!("orders differ: {} vs {}", ab.order, bc.order)));
    }
    let order = ab.order;
    let (phi1, mut phi2, mut phi3) = chain(bc.derivs(), ab.derivs(), N, N, N, order);
    symmetrize_trailing(&mut phi2, N, 2);
    symmetrize_trailing(&mut phi3, N, 3);
    Ok(SttSet {
        t_start: ab.t_start,
        t_end: bc.t_end,
        order,
        dim: N,
        component: if ab.component == bc.component { ab.component } else { Component::Full },
        phi1,
        phi2,
        phi3,
    })
}

/// The plain equations of motion in nondimensional time.
pub struct StateSystem<'a> {
    pub model: &'a DynamicsModel,
}

impl OdeSystem for StateSystem<'_> {
    fn dim(&self) -> usize {
        N
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let x: [f64; N] = y.try_into().expect("state length");
        dy.copy_from_slice(&self.model.eom(&x)?);
        Ok(())
    }
}

/// Reference state jointly with the variational equations up to `order`.
/// The state always follows the full dynamics; the variational equations use
/// the partials of `which`.
pub struct VariationalSystem<'a> {
    pub model: &'a DynamicsModel,
    pub order: usize,
    pub which: Component,
}

impl VariationalSystem<'_> {
    pub fn len(order: usize) -> usize {
        N + N2 + if order >= 2 { N3 } else { 0 } + if order >= 3 { N4 } else { 0 }
    }

    fn initial(x0: &[f64; N], order: usize) -> Vec<f64> {
        let id = SttSet::identity(0.0, order);
        let mut y = Vec::with_capacity(Self::len(order));
        y.extend_from_slice(x0);
        y.extend_from_slice(&id.phi1);
        y.extend_from_slice(&id.phi2);
        y.extend_from_slice(&id.phi3);
        y
    }
}

impl OdeSystem for VariationalSystem<'_> {
    fn dim(&self) -> usize {
        Self::len(self.order)
    }

    fn rhs(&self, _t: f64, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let x: [f64; N] = y[..N].try_into().expect("state length");
        dy[..N].copy_from_slice(&self.model.eom(&x)?);
        let partials = self.model.partials(&x, self.order, self.which)?;
        let (s1, rest) = y[N..].split_at(N2);
        let (s2, s3) = if self.order >= 2 { rest.split_at(N3) } else { (rest, &rest[..0]) };
        let (d1, d2, d3) = chain(
            Derivs {
                first: &partials.a,
                second: &partials.b,
                third: &partials.c,
            },
            Derivs {
                first: s1,
                second: s2,
                third: s3,
            },
            N,
            N,
            N,
            self.order,
        );
        let out = &mut dy[N..];
        out[..N2].copy_from_slice(&d1);
        if self.order >= 2 {
            out[N2..N2 + N3].copy_from_slice(&d2);
        }
        if self.order >= 3 {
            out[N2 + N3..].copy_from_slice(&d3);
        }
        Ok(())
    }
}

/// Reference trajectory sampled on a time grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryGrid {
    /// Grid times [s], strictly increasing.
    pub times: Vec<f64>,
    /// Nondimensional state at each grid time.
    pub states: Vec<[f64; N]>,
    /// Accepted nondimensional step sizes for each interval `(t_k, t_{k+1})`.
    pub steps: Vec<Vec<f64>>,
}

impl TrajectoryGrid {
    pub fn intervals(&self) -> usize {
        self.times.len().saturating_sub(1)
    }

    pub fn final_state(&self) -> [f64; N] {
        *self.states.last().expect("non-empty grid")
    }
}

/// Per-interval STTs along a reference trajectory.
#[derive(Clone, Debug)]
pub struct SttSweep {
    pub grid: TrajectoryGrid,
    /// `stts[k]` maps `(t_k -> t_{k+1})`.
    pub stts: Vec<SttSet>,
}

impl SttSweep {
    /// STTs over `(t_i -> t_j)`, `i <= j`, by composition.
    pub fn compose_range(&self, i: usize, j: usize) -> Result<SttSet> {
        if i > j || j > self.stts.len() {
            return Err(Error::IntervalMismatch(format!("bad grid range {i}..{j}")));
        }
        let order = self.stts.first().map(|s| s.order).unwrap_or(1);
        let mut acc = SttSet::identity(self.grid.times[i], order);
        acc.component = self.stts.first().map(|s| s.component).unwrap_or(Component::Full);
        for stt in &self.stts[i..j] {
            acc = compose(&acc, stt)?;
        }
        Ok(acc)
    }

    /// `(t_k -> t_0)`-style maps from the start to every grid time.
    pub fn maps_from_start(&self) -> Result<Vec<SttSet>> {
        let order = self.stts.first().map(|s| s.order).unwrap_or(1);
        let mut out = vec![SttSet::identity(self.grid.times[0], order)];
        for stt in &self.stts {
            let next = compose(out.last().expect("non-empty"), stt)?;
            out.push(next);
        }
        Ok(out)
    }

    /// Maps from every grid time to the final time.
    pub fn maps_to_end(&self) -> Result<Vec<SttSet>> {
        let k = self.stts.len();
        let order = self.stts.first().map(|s| s.order).unwrap_or(1);
        let mut out = vec![SttSet::identity(self.grid.times[k], order)];
        for stt in self.stts.iter().rev() {
            let next = compose(stt, out.last().expect("non-empty"))?;
            out.push(next);
        }
        out.reverse();
        Ok(out)
    }
}

/// Uniform grid `t0, t0 + dt, ...`, always ending exactly at `t1`.
pub fn uniform_grid(t0: f64, t1: f64, dt: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t1 > t0) {
        return Err(Error::Config(format!("invalid grid [{t0}, {t1}] step {dt}")));
    }
    let count = ((t1 - t0) / dt - 1e-9).ceil() as usize;
    let mut times: Vec<f64> = (0..count).map(|k| t0 + k as f64 * dt).collect();
    times.push(t1);
    Ok(times)
}

/// Integration front end holding the models, scales and tolerances.
#[derive(Clone, Debug)]
pub struct Propagator {
    pub models: Models,
    pub model: DynamicsModel,
    pub scales: Scales,
    pub config: IntegratorConfig,
}

impl Propagator {
    pub fn new(models: Models, config: IntegratorConfig) -> Self {
        Self {
            model: DynamicsModel::nondimensional(&models),
            scales: Scales::new(&models),
            models,
            config,
        }
    }

    /// Vacuum variant: lift, drag and the density rate switched off.
    pub fn without_aero(mut self) -> Self {
        self.model = self.model.without_aero();
        self
    }

    fn tau(&self, t: f64) -> f64 {
        self.scales.time_to_nondim(t)
    }

    /// Integrates the reference state across `times` [s].
    pub fn integrate_trajectory(&self, x0: &[f64; N], times: &[f64]) -> Result<TrajectoryGrid> {
        check_times(times)?;
        self.model.check_domain(x0)?;
        let sys = StateSystem { model: &self.model };
        let mut states = vec![*x0];
        let mut steps = Vec::new();
        for w in times.windows(2) {
            let x = states.last().expect("non-empty");
            let sol = integrator::integrate(&sys, self.tau(w[0]), x, self.tau(w[1]), &self.config)
                .map_err(|e| self.with_time(e))?;
            states.push(sol.y.try_into().expect("state length"));
            steps.push(sol.steps);
        }
        Ok(TrajectoryGrid {
            times: times.to_vec(),
            states,
            steps,
        })
    }

    /// Per-interval STTs `(t_k -> t_{k+1})` with identity initial conditions.
    pub fn integrate_stts(&self, x0: &[f64; N], times: &[f64], order: usize, which: Component) -> Result<SttSweep> {
        check_times(times)?;
        if !(1..=3).contains(&order) {
            return Err(Error::InsufficientOrder { needed: order, have: 3 });
        }
        self.model.check_domain(x0)?;
        let mut states = vec![*x0];
        let mut steps = Vec::new();
        let mut stts = Vec::new();
        for w in times.windows(2) {
            let x = *states.last().expect("non-empty");
            let (stt, x1, log) = self.integrate_interval(&x, w[0], w[1], order, which)?;
            states.push(x1);
            steps.push(log);
            stts.push(stt);
        }
        Ok(SttSweep {
            grid: TrajectoryGrid {
                times: times.to_vec(),
                states,
                steps,
            },
            stts,
        })
    }

    /// STTs over a single interval integrated directly. Returns the STTs, the
    /// end state and the accepted step log.
    pub fn integrate_interval(&self, x0: &[f64; N], t0: f64, t1: f64, order: usize, which: Component) -> Result<(SttSet, [f64; N], Vec<f64>)> {
        let sys = VariationalSystem {
            model: &self.model,
            order,
            which,
        };
        let y0 = VariationalSystem::initial(x0, order);
        let sol = integrator::integrate(&sys, self.tau(t0), &y0, self.tau(t1), &self.config)
            .map_err(|e| self.with_time(e))?;
        let y = sol.y;
        let x1: [f64; N] = y[..N].try_into().expect("state length");
        let mut phi2 = Vec::new();
        let mut phi3 = Vec::new();
        if order >= 2 {
            phi2 = y[N + N2..N + N2 + N3].to_vec();
            symmetrize_trailing(&mut phi2, N, 2);
        }
        if order >= 3 {
            phi3 = y[N + N2 + N3..].to_vec();
            symmetrize_trailing(&mut phi3, N, 3);
        }
        let stt = SttSet {
            t_start: t0,
            t_end: t1,
            order,
            dim: N,
            component: which,
            phi1: y[N..N + N2].to_vec(),
            phi2,
            phi3,
        };
        Ok((stt, x1, sol.steps))
    }

    /// Integrates `x0` (given at grid time `i`) through intervals `i..j` by
    /// replaying the grid's recorded steps; returns the states at grid
    /// times `i..=j`.
    pub fn replay(&self, grid: &TrajectoryGrid, x0: &[f64; N], i: usize, j: usize) -> Result<Vec<[f64; N]>> {
        if i > j || j > grid.intervals() {
            return Err(Error::IntervalMismatch(format!("bad grid range {i}..{j}")));
        }
        let sys = StateSystem { model: &self.model };
        let mut out = vec![*x0];
        for k in i..j {
            let y = integrator::replay(&sys, self.tau(grid.times[k]), out.last().expect("non-empty"), &grid.steps[k])
                .map_err(|e| self.with_time(e))?;
            out.push(y.try_into().expect("state length"));
        }
        Ok(out)
    }

    /// Final state of a replayed perturbed trajectory over `(t_i -> t_j)`.
    pub fn replay_to(&self, grid: &TrajectoryGrid, x0: &[f64; N], i: usize, j: usize) -> Result<[f64; N]> {
        Ok(*self.replay(grid, x0, i, j)?.last().expect("non-empty"))
    }

    fn with_time(&self, e: Error) -> Error {
        match e {
            Error::StepUnderflow { t, h } => Error::StepUnderflow {
                t: self.scales.time_to_dim(t),
                h: self.scales.time_to_dim(h),
            },
            Error::TooManySteps { t, steps } => Error::TooManySteps {
                t: self.scales.time_to_dim(t),
                steps,
            },
            other => other,
        }
    }
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.len() < 2 || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Config("grid times must be strictly increasing with at least two entries".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_stt(order: usize, seed: u64) -> SttSet {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut s = SttSet::identity(0.0, order);
        s.t_end = 1.0;
        for v in s.phi1.iter_mut() {
            *v += rng.random_range(-0.5..0.5);
        }
        for v in s.phi2.iter_mut() {
            *v = rng.random_range(-0.5..0.5);
        }
        for v in s.phi3.iter_mut() {
            *v = rng.random_range(-0.5..0.5);
        }
        symmetrize_trailing(&mut s.phi2, N, 2);
        symmetrize_trailing(&mut s.phi3, N, 3);
        s
    }

    #[test]
    fn compose_with_identity_is_noop() {
        let s = sample_stt(3, 1);
        let id = SttSet::identity(1.0, 3);
        let c = compose(&s, &id).unwrap();
        for (a, b) in c.phi3.iter().zip(&s.phi3) {
            assert!((a - b).abs() < 1e-15);
        }
        let id0 = SttSet::identity(0.0, 3);
        let c = compose(&id0, &s).unwrap();
        for (a, b) in c.phi2.iter().zip(&s.phi2) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn compose_checks_junction_and_order() {
        let s = sample_stt(2, 2);
        let mut t = sample_stt(2, 3);
        t.t_start = 5.0;
        assert!(matches!(compose(&s, &t), Err(Error::IntervalMismatch(_))));
        let u = sample_stt(3, 4);
        let mut u = u;
        u.t_start = 1.0;
        assert!(compose(&s, &u).is_err());
    }

    #[test]
    fn propagate_zero_and_linear() {
        let s = sample_stt(3, 5);
        assert_eq!(s.propagate(&[0.0; N], 3).unwrap(), [0.0; N]);
        let dx = [1e-3, -2e-3, 0.5e-3, 0.0, 1e-3, 0.0, -1e-3];
        let lin = s.propagate(&dx, 1).unwrap();
        for i in 0..N {
            let expect: f64 = (0..N).map(|a| s.phi1[i * N + a] * dx[a]).sum();
            assert_eq!(lin[i], expect);
        }
        assert!(s.truncated(2).propagate(&dx, 3).is_err());
    }

    #[test]
    fn json_round_trip() {
        let s = sample_stt(3, 6);
        let back = SttSet::from_json(&s.to_json().unwrap()).unwrap();
        assert_eq!(s, back);
        let mut bad = s.clone();
        bad.phi3.pop();
        assert!(SttSet::from_json(&serde_json::to_string(&bad).unwrap()).is_err());
    }

    #[test]
    fn grid_ends_exactly() {
        let g = uniform_grid(0.0, 780.0, 10.0).unwrap();
        assert_eq!(g.len(), 79);
        assert_eq!(*g.last().unwrap(), 780.0);
        let g = uniform_grid(0.0, 25.0, 10.0).unwrap();
        assert_eq!(g, vec![0.0, 10.0, 20.0, 25.0]);
    }
}

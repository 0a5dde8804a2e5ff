//! Z-eigenpairs of symmetric tensors: the shifted symmetric higher-order
//! power method (SS-HOPM) with multi-start search and deduplication, plus a
//! dense symmetric eigensolver for the matrix case.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::SymmetricTensor;

/// `(lambda, v)` with `T v^{m-1} = lambda v`, `|v| = 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    pub lambda: f64,
    pub v: Vec<f64>,
    /// `|T v^{m-1} - lambda v|` on the tensor scaled to unit Frobenius norm.
    pub residual: f64,
    pub converged: bool,
    pub start: usize,
    /// Power iterations used (excluding Newton refinement).
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Shift {
    /// Shift from the local Hessian eigenvalues with margin `tau`.
    Adaptive { tau: f64 },
    Fixed(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopmConfig {
    pub shift: Shift,
    /// Stop once `|lambda_{k+1} - lambda_k|` drops below this.
    pub tol: f64,
    pub max_iter: usize,
    /// Newton refinement steps applied after the power iteration.
    pub polish_steps: usize,
    /// Residual required to mark the pair converged.
    pub residual_tol: f64,
}

impl Default for HopmConfig {
    fn default() -> Self {
        Self {
            shift: Shift::Adaptive { tau: 1e-6 },
            tol: 1e-14,
            max_iter: 2000,
            polish_steps: 8,
            residual_tol: 1e-10,
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = norm(v);
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn min_eigenvalue(mat: &[f64], n: usize) -> f64 {
    let m = DMatrix::from_row_slice(n, n, mat);
    let m = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(m).eigenvalues.min()
}

/// Residual `|T v^{m-1} - lambda v|` with `lambda = T v^m`.
pub fn residual(t: &SymmetricTensor, v: &[f64]) -> (f64, f64) {
    let g = t.contract_all_but_one(v);
    let lambda = dot(&g, v);
    let r: Vec<f64> = g.iter().zip(v).map(|(a, b)| a - lambda * b).collect();
    (lambda, norm(&r))
}

/// Newton's method on `T v^{m-1} = lambda v`, `(v.v - 1)/2 = 0`.
fn polish(t: &SymmetricTensor, v: &mut Vec<f64>, steps: usize) {
    let n = t.dim();
    let m = t.order() as f64;
    let (_, mut best_res) = residual(t, v);
    for _ in 0..steps {
        if best_res < 1e-15 {
            break;
        }
        let g = t.contract_all_but_one(v);
        let lambda = dot(&g, v);
        let h = t.contract_all_but_two(v);
        let mut jac = DMatrix::zeros(n + 1, n + 1);
        let mut rhs = DVector::zeros(n + 1);
        for i in 0..n {
            for j in 0..n {
                jac[(i, j)] = (m - 1.0) * h[i * n + j] - if i == j { lambda } else { 0.0 };
            }
            jac[(i, n)] = -v[i];
            jac[(n, i)] = v[i];
            rhs[i] = -(g[i] - lambda * v[i]);
        }
        rhs[n] = -(dot(v, v) - 1.0) * 0.5;
        let Some(delta) = jac.lu().solve(&rhs) else { break };
        let mut cand: Vec<f64> = (0..n).map(|i| v[i] + delta[i]).collect();
        normalize(&mut cand);
        let (_, res) = residual(t, &cand);
        if !(res < best_res) {
            break;
        }
        best_res = res;
        *v = cand;
    }
}

/// SS-HOPM from `v0`. The iteration runs on `T / |T|_F`; the returned
/// eigenvalue is rescaled back, the residual is not.
pub fn ss_hopm(t: &SymmetricTensor, v0: &[f64], cfg: &HopmConfig) -> Result<Eigenpair> {
    let n = t.dim();
    if v0.len() != n {
        return Err(Error::Dimension(format!("start vector has {} entries, tensor dim {n}", v0.len())));
    }
    let scale = t.frobenius_norm();
    let mut v = v0.to_vec();
    if normalize(&mut v) == 0.0 {
        return Err(Error::Domain("zero start vector".into()));
    }
    if scale == 0.0 {
        return Ok(Eigenpair {
            lambda: 0.0,
            v,
            residual: 0.0,
            converged: true,
            start: 0,
            iterations: 0,
        });
    }
    let tn = t.scaled(1.0 / scale);
    let m = t.order();
    let mf = m as f64;
    let fixed_fallback = (mf - 1.0).max(1.0);
    let mut lambda = tn.contract_all(&v);
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        iterations += 1;
        let alpha = match cfg.shift {
            Shift::Fixed(a) => a,
            Shift::Adaptive { tau } => {
                if m < 2 {
                    0.0
                } else {
                    let h: Vec<f64> = tn.contract_all_but_two(&v).iter().map(|x| x * mf * (mf - 1.0)).collect();
                    ((tau - min_eigenvalue(&h, n)) / mf).max(0.0)
                }
            }
        };
        let step = |alpha: f64, v: &[f64]| -> Vec<f64> {
            let mut w = tn.contract_all_but_one(v);
            w.iter_mut().zip(v).for_each(|(a, b)| *a += alpha * b);
            normalize(&mut w);
            w
        };
        let mut w = step(alpha, &v);
        let mut next = tn.contract_all(&w);
        if next < lambda - 1e-15 {
            w = step(fixed_fallback, &v);
            next = tn.contract_all(&w);
        }
        let change = (next - lambda).abs();
        v = w;
        lambda = next;
        if change < cfg.tol {
            break;
        }
    }
    polish(&tn, &mut v, cfg.polish_steps);
    let (lam, res) = residual(&tn, &v);
    Ok(Eigenpair {
        lambda: lam * scale,
        v,
        residual: res,
        converged: res < cfg.residual_tol,
        iterations,
        start: 0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub starts: usize,
    pub seed: u64,
    pub dedup_angle: f64,
    pub hopm: HopmConfig,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            starts: 100,
            seed: 20_240_601,
            dedup_angle: 1e-3,
            hopm: HopmConfig::default(),
        }
    }
}

impl From<&crate::config::EigenSettings> for SearchConfig {
    fn from(e: &crate::config::EigenSettings) -> Self {
        Self {
            starts: e.starts,
            seed: e.seed,
            dedup_angle: e.dedup_angle_rad,
            hopm: HopmConfig {
                tol: e.tol,
                max_iter: e.max_iter,
                ..HopmConfig::default()
            },
        }
    }
}

/// Deduplicated converged eigenpairs, sorted by descending eigenvalue.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSearch {
    pub pairs: Vec<Eigenpair>,
    pub non_converged: usize,
}

impl EigenSearch {
    pub fn best(&self) -> &Eigenpair {
        &self.pairs[0]
    }

    /// Second-largest distinct eigenvalue, if any.
    pub fn runner_up(&self) -> Option<&Eigenpair> {
        self.pairs.get(1)
    }
}

/// Unit start vector `k` of the multi-start search, drawn from its own
/// ChaCha stream so that results do not depend on evaluation order.
pub fn start_vector(seed: u64, k: usize, n: usize) -> Vec<f64> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    loop {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        if normalize(&mut v) > 1e-8 {
            return v;
        }
    }
}

/// Multi-start SS-HOPM. Both `v` and `-v` of every converged pair are
/// candidates (at odd order `-v` carries `-lambda`); candidates closer than
/// `dedup_angle` to an already kept vector are dropped. At even order the
/// kept eigenvectors are sign-normalized.
pub fn max_eigenpair(t: &SymmetricTensor, cfg: &SearchConfig) -> Result<EigenSearch> {
    let n = t.dim();
    let odd = t.order() % 2 == 1;
    let mut cands = Vec::new();
    let mut non_converged = 0;
    let mut best_residual = f64::INFINITY;
    for k in 0..cfg.starts {
        let v0 = start_vector(cfg.seed, k, n);
        let mut pair = ss_hopm(t, &v0, &cfg.hopm)?;
        pair.start = k;
        best_residual = best_residual.min(pair.residual);
        if !pair.converged {
            non_converged += 1;
            continue;
        }
        let mut neg = pair.clone();
        neg.v.iter_mut().for_each(|x| *x = -*x);
        if odd {
            neg.lambda = -neg.lambda;
        }
        cands.push(pair);
        cands.push(neg);
    }
    if cands.is_empty() {
        return Err(Error::NoConvergedEigenpair {
            starts: cfg.starts,
            best_residual,
        });
    }
    cands.sort_by(|a, b| b.lambda.total_cmp(&a.lambda).then(a.start.cmp(&b.start)));
    let cos_tol = cfg.dedup_angle.cos();
    let mut kept: Vec<Eigenpair> = Vec::new();
    for c in cands {
        let dup = kept.iter().any(|k| {
            let d = dot(&k.v, &c.v);
            // at even order v and -v are the same eigenpair
            let d = if odd { d } else { d.abs() };
            d > cos_tol
        });
        if !dup {
            kept.push(c);
        }
    }
    if !odd {
        for p in kept.iter_mut() {
            normalize_sign(&mut p.v);
        }
    }
    Ok(EigenSearch {
        pairs: kept,
        non_converged,
    })
}

/// Flips `v` so its largest-magnitude component is positive.
pub fn normalize_sign(v: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Eigenpairs of a dense symmetric `n x n` matrix, sorted by descending
/// eigenvalue (ties: ascending index of the largest component), with
/// sign-normalized eigenvectors.
pub fn symmetric_eigen(mat: &[f64], n: usize) -> Vec<(f64, Vec<f64>)> {
    let m = DMatrix::from_row_slice(n, n, mat);
    let m = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(m);
    let mut out: Vec<(f64, Vec<f64>)> = (0..n)
        .map(|k| {
            let mut v: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
            normalize_sign(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    let lead = |v: &[f64]| {
        let mut idx = 0;
        for (i, x) in v.iter().enumerate() {
            if x.abs() > v[idx].abs() {
                idx = i;
            }
        }
        idx
    };
    out.sort_by(|a, b| b.0.total_cmp(&a.0).then(lead(&a.1).cmp(&lead(&b.1))));
    out
}

/// Angle in degrees between two directions, ignoring sign: in `[0, 90]`.
pub fn vector_angle(a: &[f64], b: &[f64]) -> Result<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(Error::Domain("angle with a zero vector".into()));
    }
    let s = if dot(a, b) < 0.0 { -1.0 } else { 1.0 };
    let (mut diff, mut sum) = (0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (u, w) = (x / na, s * y / nb);
        diff += (u - w) * (u - w);
        sum += (u + w) * (u + w);
    }
    // half-angle form stays accurate near 0 where acos does not
    Ok((2.0 * diff.sqrt().atan2(sum.sqrt())).to_degrees())
}

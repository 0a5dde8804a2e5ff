#![allow(dead_code)]

use aerostt::config::ExperimentConfig;
use aerostt::dynamics::N;
use aerostt::experiments::Context;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn default_context() -> Context {
    Context::new(ExperimentConfig::default()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / s).collect()
}

pub fn rel(a: &[f64], b: &[f64]) -> f64 {
    let num = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let den = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    num / den.max(f64::MIN_POSITIVE)
}

pub fn add(a: &[f64; N], b: &[f64; N], s: f64) -> [f64; N] {
    std::array::from_fn(|i| a[i] + s * b[i])
}

/// Polynomials in one variable truncated at degree 4.
#[derive(Clone, Copy, Debug)]
pub struct Poly(pub [f64; 5]);

impl Poly {
    pub fn zero() -> Self {
        Poly([0.0; 5])
    }

    pub fn add(self, o: Poly) -> Poly {
        Poly(std::array::from_fn(|i| self.0[i] + o.0[i]))
    }

    pub fn scale(self, s: f64) -> Poly {
        Poly(self.0.map(|c| c * s))
    }

    pub fn mul(self, o: Poly) -> Poly {
        let mut c = [0.0; 5];
        for i in 0..5 {
            for j in 0..5 - i {
                c[i + j] += self.0[i] * o.0[j];
            }
        }
        Poly(c)
    }
}

/// `phi1 t v + phi2 (t v)^2 / 2 + phi3 (t v)^3 / 6` per output row.
pub fn taylor_polys(phi1: &[f64], phi2: &[f64], phi3: &[f64], rows: usize, n: usize, v: &[f64]) -> Vec<Poly> {
    (0..rows)
        .map(|i| {
            let mut c = [0.0; 5];
            for a in 0..n {
                c[1] += phi1[i * n + a] * v[a];
                for b in 0..n {
                    c[2] += 0.5 * phi2[(i * n + a) * n + b] * v[a] * v[b];
                    for d in 0..n {
                        c[3] += phi3[((i * n + a) * n + b) * n + d] * v[a] * v[b] * v[d] / 6.0;
                    }
                }
            }
            Poly(c)
        })
        .collect()
}

/// Random tensor of shape `rows x n^order` symmetric in its trailing indices.
pub fn random_trailing_symmetric(rng: &mut impl Rng, rows: usize, n: usize, order: usize) -> Vec<f64> {
    let size = rows * n.pow(order as u32);
    let mut data: Vec<f64> = (0..size).map(|_| rng.random_range(-1.0..1.0)).collect();
    aerostt::tensor::symmetrize_trailing(&mut data, n, order);
    data
}

/// Random fully symmetric tensor with entries of order one.
pub fn random_symmetric(rng: &mut impl Rng, n: usize, order: usize) -> aerostt::tensor::SymmetricTensor {
    let data: Vec<f64> = (0..n.pow(order as u32)).map(|_| rng.random_range(-1.0..1.0)).collect();
    aerostt::tensor::symmetrize(&aerostt::tensor::DenseTensor::from_data(order, n, data).unwrap())
}

/// Brute-force maximum of `T v^m` over `points` seeded unit vectors.
/// Returns the best value and the grid points.
pub fn sphere_grid(n: usize, points: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..points).map(|_| unit_gaussian(&mut r, n)).collect()
}

fn unit_gaussian(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    use rand_distr::{Distribution, StandardNormal};
    let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    let s = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / s).collect()
}

/// Outcome of comparing a claimed maximal eigenvalue with a sphere grid:
/// the grid maximum, and the resolution bound `m |T|_F d` with `d` the
/// distance from the claimed eigenvector to its nearest grid point.
pub struct GridCheck {
    pub grid_max: f64,
    pub bound: f64,
}

impl GridCheck {
    pub fn new(t: &aerostt::tensor::SymmetricTensor, v: &[f64], grid: &[Vec<f64>]) -> Self {
        let mut grid_max = f64::NEG_INFINITY;
        let mut nearest = f64::INFINITY;
        for w in grid {
            grid_max = grid_max.max(t.contract_all(w));
            let d = w.iter().zip(v).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            nearest = nearest.min(d);
        }
        Self {
            grid_max,
            bound: t.order() as f64 * t.frobenius_norm() * nearest,
        }
    }

    /// The grid never beats `lambda`, and `lambda` is within the bound of it.
    pub fn agrees(&self, lambda: f64) -> bool {
        self.grid_max <= lambda + 1e-12 && lambda - self.grid_max <= self.bound
    }
}

//! Truncated multivariate Taylor polynomials (jets) in seven variables.
//!
//! A [`Jet`] carries every monomial coefficient up to total degree three, so
//! evaluating a function on jets seeded with [`Jet::variable`] yields its first,
//! second and third partial derivatives in one pass. This is how the dynamics
//! and quantity-of-interest partials are generated.

use std::ops::{Add, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

use crate::scalar::Scalar;

/// Number of independent variables.
pub const NVARS: usize = 7;
/// Number of monomials of total degree <= 3 in seven variables.
pub const NCOEF: usize = 120;

const DEG1: usize = 1;

struct Tables {
    /// Sorted variable multiset of every monomial.
    monomials: Vec<Vec<usize>>,
    /// (a, b, c): monomial a times monomial b equals monomial c.
    products: Vec<(u8, u8, u8)>,
    idx2: [[usize; NVARS]; NVARS],
    idx3: Vec<usize>,
}

fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(|| {
        let mut monomials = vec![Vec::new()];
        for i in 0..NVARS {
            monomials.push(vec![i]);
        }
        let mut idx2 = [[0; NVARS]; NVARS];
        for i in 0..NVARS {
            for j in i..NVARS {
                idx2[i][j] = monomials.len();
                idx2[j][i] = monomials.len();
                monomials.push(vec![i, j]);
            }
        }
        let mut idx3 = vec![0; NVARS * NVARS * NVARS];
        for i in 0..NVARS {
            for j in i..NVARS {
                for k in j..NVARS {
                    let id = monomials.len();
                    for (a, b, c) in permutations3(i, j, k) {
                        idx3[(a * NVARS + b) * NVARS + c] = id;
                    }
                    monomials.push(vec![i, j, k]);
                }
            }
        }
        debug_assert_eq!(monomials.len(), NCOEF);

        let lookup = |vars: &[usize]| -> usize {
            match vars.len() {
                0 => 0,
                1 => DEG1 + vars[0],
                2 => idx2[vars[0]][vars[1]],
                _ => idx3[(vars[0] * NVARS + vars[1]) * NVARS + vars[2]],
            }
        };
        let mut products = Vec::new();
        for (a, ma) in monomials.iter().enumerate() {
            for (b, mb) in monomials.iter().enumerate() {
                if ma.len() + mb.len() > 3 {
                    continue;
                }
                let mut merged: Vec<usize> = ma.iter().chain(mb.iter()).copied().collect();
                merged.sort_unstable();
                products.push((a as u8, b as u8, lookup(&merged) as u8));
            }
        }
        Tables {
            monomials,
            products,
            idx2,
            idx3,
        }
    })
}

fn permutations3(i: usize, j: usize, k: usize) -> [(usize, usize, usize); 6] {
    [
        (i, j, k),
        (i, k, j),
        (j, i, k),
        (j, k, i),
        (k, i, j),
        (k, j, i),
    ]
}

/// Product of factorials of the exponent multiplicities of a sorted multiset.
fn multiplicity_factor(vars: &[usize]) -> f64 {
    let mut factor = 1.0;
    let mut run = 1.0;
    for w in vars.windows(2) {
        if w[0] == w[1] {
            run += 1.0;
            factor *= run;
        } else {
            run = 1.0;
        }
    }
    factor
}

/// Degree-3 truncated Taylor polynomial in [`NVARS`] variables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub coeffs: [f64; NCOEF],
}

impl Jet {
    pub fn constant(value: f64) -> Self {
        let mut coeffs = [0.0; NCOEF];
        coeffs[0] = value;
        Self { coeffs }
    }

    /// The jet of `value + d_i`, i.e. variable `i` expanded about `value`.
    pub fn variable(value: f64, i: usize) -> Self {
        let mut jet = Self::constant(value);
        jet.coeffs[DEG1 + i] = 1.0;
        jet
    }

    /// Seeds a full expansion point: component `i` becomes variable `i`.
    pub fn seed(point: &[f64; NVARS]) -> [Jet; NVARS] {
        std::array::from_fn(|i| Jet::variable(point[i], i))
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// First partial derivative with respect to variable `i`.
    pub fn d1(&self, i: usize) -> f64 {
        self.coeffs[DEG1 + i]
    }

    /// Second partial derivative with respect to variables `i`, `j`.
    pub fn d2(&self, i: usize, j: usize) -> f64 {
        let c = self.coeffs[tables().idx2[i][j]];
        if i == j {
            2.0 * c
        } else {
            c
        }
    }

    /// Third partial derivative with respect to variables `i`, `j`, `k`.
    pub fn d3(&self, i: usize, j: usize, k: usize) -> f64 {
        let t = tables();
        let id = t.idx3[(i * NVARS + j) * NVARS + k];
        self.coeffs[id] * multiplicity_factor(&t.monomials[id])
    }

    /// Expansion with the constant term removed.
    fn increment(&self) -> Self {
        let mut h = *self;
        h.coeffs[0] = 0.0;
        h
    }

    /// Composes a univariate function given its value and first three
    /// derivatives at the constant term.
    fn compose(&self, f0: f64, f1: f64, f2: f64, f3: f64) -> Self {
        let h = self.increment();
        let h2 = h * h;
        let h3 = h2 * h;
        let mut out = Self::constant(f0);
        for k in 1..NCOEF {
            out.coeffs[k] = f1 * h.coeffs[k] + 0.5 * f2 * h2.coeffs[k] + f3 / 6.0 * h3.coeffs[k];
        }
        out
    }

    pub fn recip(&self) -> Self {
        let a = self.value();
        let inv = 1.0 / a;
        self.compose(inv, -inv * inv, 2.0 * inv * inv * inv, -6.0 * inv * inv * inv * inv)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a += b;
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: Jet) -> Jet {
        for (a, b) in self.coeffs.iter_mut().zip(rhs.coeffs.iter()) {
            *a -= b;
        }
        self
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let mut out = [0.0; NCOEF];
        for &(a, b, c) in &tables().products {
            out[c as usize] += self.coeffs[a as usize] * rhs.coeffs[b as usize];
        }
        Jet { coeffs: out }
    }
}

impl Div for Jet {
    type Output = Jet;
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(mut self) -> Jet {
        for a in self.coeffs.iter_mut() {
            *a = -*a;
        }
        self
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.coeffs[0] += rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(mut self, rhs: f64) -> Jet {
        for a in self.coeffs.iter_mut() {
            *a *= rhs;
        }
        self
    }
}

impl Scalar for Jet {
    fn cst(value: f64) -> Self {
        Jet::constant(value)
    }

    fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(s, c, -s, -c)
    }

    fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        self.compose(c, -s, -c, s)
    }

    fn tan(&self) -> Self {
        let t = self.value().tan();
        let sec2 = 1.0 + t * t;
        self.compose(t, sec2, 2.0 * t * sec2, 2.0 * sec2 * (1.0 + 3.0 * t * t))
    }

    fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(e, e, e, e)
    }

    fn sqrt(&self) -> Self {
        let s = self.value().sqrt();
        let a = self.value();
        self.compose(s, 0.5 / s, -0.25 / (a * s), 0.375 / (a * a * s))
    }

    fn powi(&self, n: i32) -> Self {
        let a = self.value();
        let nf = n as f64;
        self.compose(
            a.powi(n),
            nf * a.powi(n - 1),
            nf * (nf - 1.0) * a.powi(n - 2),
            nf * (nf - 1.0) * (nf - 2.0) * a.powi(n - 3),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(point: [f64; NVARS], f: impl Fn(&[Jet; NVARS]) -> Jet) -> Jet {
        f(&Jet::seed(&point))
    }

    #[test]
    fn polynomial_partials_are_exact() {
        // f = x0^2 x1 + 3 x2^3
        let p = [1.5, -2.0, 0.5, 0.0, 0.0, 0.0, 0.0];
        let j = at(p, |x| x[0] * x[0] * x[1] + x[2] * x[2] * x[2] * 3.0);
        assert_eq!(j.value(), 1.5 * 1.5 * -2.0 + 3.0 * 0.125);
        assert_eq!(j.d1(0), 2.0 * 1.5 * -2.0);
        assert_eq!(j.d1(1), 2.25);
        assert_eq!(j.d2(0, 0), 2.0 * -2.0);
        assert_eq!(j.d2(0, 1), 3.0);
        assert_eq!(j.d2(1, 0), 3.0);
        assert_eq!(j.d3(0, 0, 1), 2.0);
        assert_eq!(j.d3(1, 0, 0), 2.0);
        assert_eq!(j.d3(2, 2, 2), 18.0);
        assert_eq!(j.d3(0, 1, 2), 0.0);
    }

    #[test]
    fn transcendental_derivatives() {
        let x0 = 0.7;
        let p = [x0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let s = at(p, |x| x[0].sin());
        assert!((s.d3(0, 0, 0) + x0.cos()).abs() < 1e-15);
        let e = at(p, |x| x[0].exp());
        assert!((e.d3(0, 0, 0) - x0.exp()).abs() < 1e-15);
        let q = at(p, |x| x[0].sqrt());
        assert!((q.d3(0, 0, 0) - 0.375 * x0.powf(-2.5)).abs() < 1e-13);
        let t = at(p, |x| x[0].tan());
        let sec2 = 1.0 / x0.cos().powi(2);
        assert!((t.d2(0, 0) - 2.0 * x0.tan() * sec2).abs() < 1e-13);
        let r = at(p, |x| x[0].recip());
        assert!((r.d3(0, 0, 0) + 6.0 / x0.powi(4)).abs() < 1e-12);
        let w = at(p, |x| x[0].powi(-2));
        assert!((w.d3(0, 0, 0) + 24.0 / x0.powi(5)).abs() < 1e-11);
    }

    #[test]
    fn quotient_of_mixed_variables() {
        // f = x3 / x4, d^3 f / dx3 dx4 dx4 = 2 / x4^3
        let p = [0.0, 0.0, 0.0, 2.0, 0.5, 0.0, 0.0];
        let j = at(p, |x| x[3] / x[4]);
        assert!((j.d3(3, 4, 4) - 2.0 / 0.125).abs() < 1e-12);
        assert!((j.d2(4, 4) - 2.0 * 2.0 / 0.125).abs() < 1e-12);
    }
}

//! Dense tensors of small order and the chain-rule contraction shared by the
//! variational equations, STT composition and quantity-of-interest Taylor
//! coefficients.
//!
//! Storage is row-major throughout: element `(i0, i1, ..., i_{m-1})` of an
//! order-`m`, dimension-`n` tensor lives at `((i0*n + i1)*n + ...)`.

use crate::error::{Error, Result};

/// Order-`m` tensor with every index running over `0..dim`.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseTensor {
    pub order: usize,
    pub dim: usize,
    pub data: Vec<f64>,
}

impl DenseTensor {
    pub fn zeros(order: usize, dim: usize) -> Self {
        Self {
            order,
            dim,
            data: vec![0.0; dim.pow(order as u32)],
        }
    }

    pub fn from_data(order: usize, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != dim.pow(order as u32) {
            return Err(Error::Dimension(format!(
                "order {order} dim {dim} tensor needs {} entries, got {}",
                dim.pow(order as u32),
                data.len()
            )));
        }
        Ok(Self { order, dim, data })
    }

    pub fn frobenius_norm(&self) -> f64 {
        frobenius(&self.data)
    }

    /// Full contraction `T x^m`.
    pub fn contract_all(&self, x: &[f64]) -> f64 {
        let mut cur = self.data.clone();
        for _ in 0..self.order {
            cur = contract_last(&cur, x);
        }
        cur[0]
    }
}

/// Fully symmetric tensor (invariant under any index permutation).
#[derive(Clone, Debug, PartialEq)]
pub struct SymmetricTensor {
    inner: DenseTensor,
}

impl SymmetricTensor {
    pub fn order(&self) -> usize {
        self.inner.order
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn data(&self) -> &[f64] {
        &self.inner.data
    }

    pub fn as_dense(&self) -> &DenseTensor {
        &self.inner
    }

    /// Wraps a tensor that is already symmetric; checked to `tol` relative.
    pub fn try_from_symmetric(t: DenseTensor, tol: f64) -> Result<Self> {
        let sym = symmetrize(&t);
        let scale = t.frobenius_norm().max(f64::MIN_POSITIVE);
        let diff: f64 = frobenius(
            &t.data.iter().zip(sym.data()).map(|(a, b)| a - b).collect::<Vec<_>>(),
        );
        if diff > tol * scale {
            return Err(Error::Dimension(format!("tensor is not symmetric (rel. asymmetry {:e})", diff / scale)));
        }
        Ok(sym)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            inner: DenseTensor {
                order: self.inner.order,
                dim: self.inner.dim,
                data: self.inner.data.iter().map(|v| v * s).collect(),
            },
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.inner.frobenius_norm()
    }

    /// `T x^m`.
    pub fn contract_all(&self, x: &[f64]) -> f64 {
        self.inner.contract_all(x)
    }

    /// `T x^{m-1}` (a vector).
    pub fn contract_all_but_one(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = self.inner.data.clone();
        for _ in 1..self.inner.order {
            cur = contract_last(&cur, x);
        }
        cur
    }

    /// `T x^{m-2}` (an `n x n` matrix, row-major).
    pub fn contract_all_but_two(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = self.inner.data.clone();
        for _ in 2..self.inner.order {
            cur = contract_last(&cur, x);
        }
        cur
    }
}

/// Contracts the last index of a row-major tensor with `x`.
pub fn contract_last(data: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    data.chunks_exact(n)
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn frobenius(data: &[f64]) -> f64 {
    data.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn for_each_permutation(m: usize, mut f: impl FnMut(&[usize])) {
    fn rec(k: usize, perm: &mut Vec<usize>, used: &mut Vec<bool>, f: &mut dyn FnMut(&[usize])) {
        if k == perm.len() {
            f(perm);
            return;
        }
        for i in 0..perm.len() {
            if !used[i] {
                used[i] = true;
                perm[k] = i;
                rec(k + 1, perm, used, f);
                used[i] = false;
            }
        }
    }
    let mut perm = vec![0; m];
    let mut used = vec![false; m];
    rec(0, &mut perm, &mut used, &mut f);
}

fn multi_index(mut flat: usize, n: usize, m: usize, out: &mut [usize]) {
    for k in (0..m).rev() {
        out[k] = flat % n;
        flat /= n;
    }
}

fn flat_index(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0, |acc, &i| acc * n + i)
}

/// Average over all `m!` index permutations.
pub fn symmetrize(t: &DenseTensor) -> SymmetricTensor {
    let (m, n) = (t.order, t.dim);
    let mut out = vec![0.0; t.data.len()];
    let mut perms = Vec::new();
    for_each_permutation(m, |p| perms.push(p.to_vec()));
    let count = perms.len() as f64;
    let mut idx = vec![0; m];
    let mut permuted = vec![0; m];
    for (flat, value) in t.data.iter().enumerate() {
        if *value == 0.0 {
            continue;
        }
        multi_index(flat, n, m, &mut idx);
        for p in &perms {
            for k in 0..m {
                permuted[k] = idx[p[k]];
            }
            out[flat_index(&permuted, n)] += value / count;
        }
    }
    SymmetricTensor {
        inner: DenseTensor {
            order: m,
            dim: n,
            data: out,
        },
    }
}

/// Symmetrizes the trailing `order` indices of a `rows x n^order` block in
/// place (each row is one output component).
pub fn symmetrize_trailing(data: &mut [f64], n: usize, order: usize) {
    if order < 2 {
        return;
    }
    let block = n.pow(order as u32);
    let mut perms = Vec::new();
    for_each_permutation(order, |p| perms.push(p.to_vec()));
    let count = perms.len() as f64;
    let mut idx = vec![0; order];
    let mut permuted = vec![0; order];
    let mut scratch = vec![0.0; block];
    for row in data.chunks_exact_mut(block) {
        scratch.iter_mut().for_each(|v| *v = 0.0);
        for flat in 0..block {
            multi_index(flat, n, order, &mut idx);
            let mut acc = 0.0;
            for p in &perms {
                for k in 0..order {
                    permuted[k] = idx[p[k]];
                }
                acc += row[flat_index(&permuted, n)];
            }
            scratch[flat] = acc / count;
        }
        row.copy_from_slice(&scratch);
    }
}

/// Derivatives of an outer map with respect to its input, `(first, second,
/// third)`, shaped `p x q`, `p x q x q`, `p x q x q x q`. Higher blocks may be
/// empty when unused.
#[derive(Clone, Copy, Debug)]
pub struct Derivs<'a> {
    pub first: &'a [f64],
    pub second: &'a [f64],
    pub third: &'a [f64],
}

/// Chain rule to third order: derivatives of `outer(inner(x))` given the
/// derivatives of `outer` (output dim `p`, input dim `q`) and of `inner`
/// (output dim `q`, input dim `n`).
///
/// `outer.second` and `outer.third` must be symmetric in their trailing
/// indices. Returns blocks shaped `p x n`, `p x n x n`, `p x n x n x n`; the
/// higher ones are empty when `order` excludes them.
pub fn chain(outer: Derivs<'_>, inner: Derivs<'_>, p: usize, q: usize, n: usize, order: usize) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let a = outer.first;
    let phi1 = inner.first;

    let mut out1 = vec![0.0; p * n];
    for i in 0..p {
        for al in 0..q {
            let aia = a[i * q + al];
            if aia == 0.0 {
                continue;
            }
            let row = &phi1[al * n..(al + 1) * n];
            let dst = &mut out1[i * n..(i + 1) * n];
            for (d, r) in dst.iter_mut().zip(row) {
                *d += aia * r;
            }
        }
    }
    if order < 2 {
        return (out1, Vec::new(), Vec::new());
    }

    let b = outer.second;
    let phi2 = inner.second;
    let n2 = n * n;

    // t1[i, al, c] = sum_be B[i, al, be] phi1[be, c]
    let mut t1 = vec![0.0; p * q * n];
    for i in 0..p {
        for al in 0..q {
            let brow = &b[(i * q + al) * q..(i * q + al + 1) * q];
            let dst = &mut t1[(i * q + al) * n..(i * q + al + 1) * n];
            for (be, &bv) in brow.iter().enumerate() {
                if bv == 0.0 {
                    continue;
                }
                let row = &phi1[be * n..(be + 1) * n];
                for (d, r) in dst.iter_mut().zip(row) {
                    *d += bv * r;
                }
            }
        }
    }

    let mut out2 = vec![0.0; p * n2];
    for i in 0..p {
        let dst = &mut out2[i * n2..(i + 1) * n2];
        for al in 0..q {
            let aia = a[i * q + al];
            if aia != 0.0 {
                let src = &phi2[al * n2..(al + 1) * n2];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += aia * s;
                }
            }
            let trow = &t1[(i * q + al) * n..(i * q + al + 1) * n];
            for aa in 0..n {
                let f = phi1[al * n + aa];
                if f == 0.0 {
                    continue;
                }
                let d = &mut dst[aa * n..(aa + 1) * n];
                for (dv, tv) in d.iter_mut().zip(trow) {
                    *dv += f * tv;
                }
            }
        }
    }
    if order < 3 {
        return (out1, out2, Vec::new());
    }

    let c = outer.third;
    let phi3 = inner.third;
    let n3 = n2 * n;
    let q2 = q * q;
    let mut out3 = vec![0.0; p * n3];

    // u1[i, al, be, cc] = sum_ga C[i, al, be, ga] phi1[ga, cc]
    let mut u1 = vec![0.0; p * q2 * n];
    for i in 0..p {
        for ab in 0..q2 {
            let crow = &c[(i * q2 + ab) * q..(i * q2 + ab + 1) * q];
            let dst = &mut u1[(i * q2 + ab) * n..(i * q2 + ab + 1) * n];
            for (ga, &cv) in crow.iter().enumerate() {
                if cv == 0.0 {
                    continue;
                }
                let row = &phi1[ga * n..(ga + 1) * n];
                for (d, r) in dst.iter_mut().zip(row) {
                    *d += cv * r;
                }
            }
        }
    }
    // u2[i, al, bb, cc] = sum_be u1[i, al, be, cc] phi1[be, bb]
    let mut u2 = vec![0.0; p * q * n2];
    for i in 0..p {
        for al in 0..q {
            let dst = &mut u2[(i * q + al) * n2..(i * q + al + 1) * n2];
            for be in 0..q {
                let src = &u1[((i * q + al) * q + be) * n..((i * q + al) * q + be + 1) * n];
                for bb in 0..n {
                    let f = phi1[be * n + bb];
                    if f == 0.0 {
                        continue;
                    }
                    let d = &mut dst[bb * n..(bb + 1) * n];
                    for (dv, sv) in d.iter_mut().zip(src) {
                        *dv += f * sv;
                    }
                }
            }
        }
    }

    for i in 0..p {
        let dst = &mut out3[i * n3..(i + 1) * n3];
        for al in 0..q {
            let aia = a[i * q + al];
            if aia != 0.0 {
                let src = &phi3[al * n3..(al + 1) * n3];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += aia * s;
                }
            }
            let trow = &t1[(i * q + al) * n..(i * q + al + 1) * n];
            let p2 = &phi2[al * n2..(al + 1) * n2];
            let u2row = &u2[(i * q + al) * n2..(i * q + al + 1) * n2];
            for aa in 0..n {
                let f1 = phi1[al * n + aa];
                let ta = trow[aa];
                for bb in 0..n {
                    let tb = trow[bb];
                    let base = (aa * n + bb) * n;
                    let p2ab = p2[aa * n + bb];
                    for cc in 0..n {
                        // T1[a] phi2[b c] + T1[c] phi2[a b] + T1[b] phi2[a c] + phi1[a] u2[b c]
                        dst[base + cc] += ta * p2[bb * n + cc]
                            + trow[cc] * p2ab
                            + tb * p2[aa * n + cc]
                            + f1 * u2row[bb * n + cc];
                    }
                }
            }
        }
    }
    (out1, out2, out3)
}

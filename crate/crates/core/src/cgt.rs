//! Cauchy-Green tensors of the flow: the second-order CGT, higher-order
//! CGTs (HOCGT), state-selective CGTs (sCGT) and quantity-of-interest CGTs
//! (qCGT).
//!
//! Each family is the coefficient set of a squared objective expanded as a
//! polynomial in the initial perturbation `dx`: with `F1, F2, F3` the first
//! three derivatives of the objective map,
//! `|F(dx)|^2 = C2 dx^2 + C3 dx^3 + C4 dx^4 + ...` where
//! `C2 = F1.F1`, `C3 = F1.F2` and `C4 = F1.F3/3 + F2.F2/4`.

use serde::{Deserialize, Serialize};

use crate::dynamics::N;
use crate::error::{Error, Result};
use crate::propagation::SttSet;
use crate::qoi::QoiPartials;
use crate::tensor::{chain, symmetrize, DenseTensor, Derivs, SymmetricTensor};

/// Rows of the identity picking a subset of state components.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionMatrix {
    rows: Vec<usize>,
    dim: usize,
}

impl SelectionMatrix {
    pub fn new(rows: Vec<usize>, dim: usize) -> Result<Self> {
        if rows.is_empty() || rows.len() > dim {
            return Err(Error::Selection(format!("{} rows for dimension {dim}", rows.len())));
        }
        for (k, &r) in rows.iter().enumerate() {
            if r >= dim {
                return Err(Error::Selection(format!("row index {r} out of range")));
            }
            if rows[..k].contains(&r) {
                return Err(Error::Selection(format!("row index {r} repeated")));
            }
        }
        Ok(Self { rows, dim })
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            rows: (0..dim).collect(),
            dim,
        }
    }

    /// Radius, speed and flight path angle of the entry state.
    pub fn position_velocity_fpa() -> Self {
        use crate::dynamics::{GAMMA, R, V};
        Self {
            rows: vec![R, V, GAMMA],
            dim: N,
        }
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Dense `w x n` matrix, row-major.
    pub fn matrix(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.rows.len() * self.dim];
        for (k, &r) in self.rows.iter().enumerate() {
            m[k * self.dim + r] = 1.0;
        }
        m
    }
}

/// Non-symmetric order-`m` coefficient of `|F|^2` from the derivative blocks
/// `first` (`p x n`), `second` (`p x n x n`), `third` (`p x n x n x n`).
pub fn objective_coeffs(d: Derivs<'_>, p: usize, n: usize, m: usize) -> Result<DenseTensor> {
    let need = |len: usize, want: usize, order: usize| {
        if len < want {
            Err(Error::InsufficientOrder { needed: order, have: order - 1 })
        } else {
            Ok(())
        }
    };
    need(d.first.len(), p * n, 1)?;
    let n2 = n * n;
    let n3 = n2 * n;
    let mut t = DenseTensor::zeros(m, n);
    match m {
        2 => {
            for i in 0..p {
                let f = &d.first[i * n..(i + 1) * n];
                for a in 0..n {
                    for b in 0..n {
                        t.data[a * n + b] += f[a] * f[b];
                    }
                }
            }
        }
        3 => {
            need(d.second.len(), p * n2, 2)?;
            for i in 0..p {
                let f = &d.first[i * n..(i + 1) * n];
                let s = &d.second[i * n2..(i + 1) * n2];
                for a in 0..n {
                    if f[a] == 0.0 {
                        continue;
                    }
                    for (bc, sv) in s.iter().enumerate() {
                        t.data[a * n2 + bc] += f[a] * sv;
                    }
                }
            }
        }
        4 => {
            need(d.second.len(), p * n2, 2)?;
            need(d.third.len(), p * n3, 3)?;
            for i in 0..p {
                let f = &d.first[i * n..(i + 1) * n];
                let s = &d.second[i * n2..(i + 1) * n2];
                let th = &d.third[i * n3..(i + 1) * n3];
                for a in 0..n {
                    let fa = f[a] / 3.0;
                    for (bcd, tv) in th.iter().enumerate() {
                        t.data[a * n3 + bcd] += fa * tv;
                    }
                }
                for ab in 0..n2 {
                    let sab = s[ab] / 4.0;
                    if sab == 0.0 {
                        continue;
                    }
                    for (cd, sv) in s.iter().enumerate() {
                        t.data[ab * n2 + cd] += sab * sv;
                    }
                }
            }
        }
        _ => return Err(Error::Dimension(format!("CGT order must be 2, 3 or 4, got {m}"))),
    }
    Ok(t)
}

/// `C = Phi^T Phi` (row-major `n x n`).
pub fn second_order_cgt(phi1: &[f64], n: usize) -> Vec<f64> {
    let p = phi1.len() / n;
    let d = Derivs {
        first: phi1,
        second: &[],
        third: &[],
    };
    objective_coeffs(d, p, n, 2).expect("order 2 needs only the first block").data
}

fn check_order(stt: &SttSet, m: usize) -> Result<()> {
    if stt.order + 1 < m {
        return Err(Error::InsufficientOrder { needed: m - 1, have: stt.order });
    }
    Ok(())
}

pub fn hocgt_coeffs(stt: &SttSet, m: usize) -> Result<DenseTensor> {
    check_order(stt, m)?;
    objective_coeffs(stt.derivs(), N, N, m)
}

/// Rows of every STT block kept by `sel`.
pub fn select_rows(stt: &SttSet, sel: &SelectionMatrix) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if sel.dim() != N {
        return Err(Error::Selection(format!("selection dimension {} but state dimension {N}", sel.dim())));
    }
    let pick = |data: &[f64], block: usize| -> Vec<f64> {
        if data.is_empty() {
            return Vec::new();
        }
        sel.rows().iter().flat_map(|&r| data[r * block..(r + 1) * block].iter().copied()).collect()
    };
    Ok((pick(&stt.phi1, N), pick(&stt.phi2, N * N), pick(&stt.phi3, N * N * N)))
}

pub fn scgt_coeffs(stt: &SttSet, sel: &SelectionMatrix, m: usize) -> Result<DenseTensor> {
    check_order(stt, m)?;
    let (f1, f2, f3) = select_rows(stt, sel)?;
    let d = Derivs {
        first: &f1,
        second: &f2,
        third: &f3,
    };
    objective_coeffs(d, sel.rows().len(), N, m)
}

/// Taylor coefficients `D1, D2, D3` of `q(x_z)` in the initial perturbation,
/// for a `p`-valued quantity with partials `eta` at the final state.
pub fn qoi_taylor(eta: Derivs<'_>, p: usize, stt: &SttSet, order: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    if stt.order < order {
        return Err(Error::InsufficientOrder { needed: order, have: stt.order });
    }
    Ok(chain(eta, stt.derivs(), p, N, N, order))
}

pub fn qcgt_coeffs_vector(eta: Derivs<'_>, p: usize, stt: &SttSet, m: usize) -> Result<DenseTensor> {
    let (d1, d2, d3) = qoi_taylor(eta, p, stt, m - 1)?;
    let d = Derivs {
        first: &d1,
        second: &d2,
        third: &d3,
    };
    objective_coeffs(d, p, N, m)
}

pub fn qcgt_coeffs(stt: &SttSet, eta: &QoiPartials, m: usize) -> Result<DenseTensor> {
    if eta.order + 1 < m {
        return Err(Error::InsufficientOrder { needed: m - 1, have: eta.order });
    }
    qcgt_coeffs_vector(eta.derivs(), 1, stt, m)
}

/// Which squared objective a CGT describes.
#[derive(Clone, Debug, PartialEq)]
pub enum CgtFamily<'a> {
    /// `|x_z|^2`.
    Full,
    /// `|S x_z|^2`.
    Selective(&'a SelectionMatrix),
    /// `q(x_z)^2`.
    Quantity(&'a QoiPartials),
}

/// Symmetric order-`m` CGT of the given family.
pub fn cgt(stt: &SttSet, family: &CgtFamily<'_>, m: usize) -> Result<SymmetricTensor> {
    let raw = match family {
        CgtFamily::Full => hocgt_coeffs(stt, m)?,
        CgtFamily::Selective(sel) => scgt_coeffs(stt, sel, m)?,
        CgtFamily::Quantity(eta) => qcgt_coeffs(stt, eta, m)?,
    };
    Ok(symmetrize(&raw))
}

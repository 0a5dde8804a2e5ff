//! Directional STTs: higher-order STTs projected onto per-order bases of
//! orthonormal rows, reduced perturbation propagation, and the Frobenius
//! reconstruction error of the projection.

use serde::{Deserialize, Serialize};

use crate::cgt::{cgt, second_order_cgt, CgtFamily};
use crate::dynamics::N;
use crate::eigen::{max_eigenpair, normalize_sign, symmetric_eigen, EigenSearch, SearchConfig};
use crate::error::{Error, Result};
use crate::propagation::SttSet;
use crate::tensor::frobenius;

/// How a rotation basis was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisTag {
    /// Top-`l` eigenvectors of the second-order CGT, shared by both orders.
    Cgt2TopL,
    Hocgt,
    Scgt,
    QcgtEnergy,
    QcgtApoapsis,
}

/// Per-order projection matrices with orthonormal rows, row-major
/// `l2 x n` and `l3 x n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RotationBasis {
    pub tag: BasisTag,
    pub t_start: f64,
    pub t_end: f64,
    pub l2: usize,
    pub l3: usize,
    pub r2: Vec<f64>,
    pub r3: Vec<f64>,
}

/// Modified Gram-Schmidt on the rows of an `l x n` matrix.
pub fn orthonormalize_rows(rows: &mut [f64], n: usize) -> Result<()> {
    let l = rows.len() / n;
    for k in 0..l {
        for j in 0..k {
            let d: f64 = (0..n).map(|c| rows[k * n + c] * rows[j * n + c]).sum();
            for c in 0..n {
                rows[k * n + c] -= d * rows[j * n + c];
            }
        }
        let nrm = frobenius(&rows[k * n..(k + 1) * n]);
        if !(nrm > 1e-12) {
            return Err(Error::Dimension(format!("basis row {k} is linearly dependent")));
        }
        rows[k * n..(k + 1) * n].iter_mut().for_each(|v| *v /= nrm);
    }
    Ok(())
}

fn max_orthonormality_defect(rows: &[f64], n: usize) -> f64 {
    let l = rows.len() / n;
    let mut worst: f64 = 0.0;
    for a in 0..l {
        for b in 0..l {
            let d: f64 = (0..n).map(|c| rows[a * n + c] * rows[b * n + c]).sum();
            worst = worst.max((d - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

impl RotationBasis {
    /// Re-orthonormalizes the rows and checks `R R^T = I`.
    pub fn new(tag: BasisTag, interval: (f64, f64), mut r2: Vec<f64>, mut r3: Vec<f64>) -> Result<Self> {
        for r in [&r2, &r3] {
            if r.is_empty() || r.len() % N != 0 || r.len() > N * N {
                return Err(Error::Dimension(format!("basis with {} entries for dimension {N}", r.len())));
            }
        }
        orthonormalize_rows(&mut r2, N)?;
        orthonormalize_rows(&mut r3, N)?;
        for r in [&r2, &r3] {
            let defect = max_orthonormality_defect(r, N);
            if defect > 1e-12 {
                return Err(Error::Dimension(format!("basis rows not orthonormal ({defect:e})")));
            }
        }
        Ok(Self {
            tag,
            t_start: interval.0,
            t_end: interval.1,
            l2: r2.len() / N,
            l3: r3.len() / N,
            r2,
            r3,
        })
    }

    /// `P = R^T R` for the order-2 (`order = 2`) or order-3 basis.
    pub fn projector(&self, order: usize) -> Vec<f64> {
        let (r, l) = if order == 2 { (&self.r2, self.l2) } else { (&self.r3, self.l3) };
        let mut p = vec![0.0; N * N];
        for g in 0..l {
            for a in 0..N {
                for b in 0..N {
                    p[a * N + b] += r[g * N + a] * r[g * N + b];
                }
            }
        }
        p
    }
}

/// Basis from the `l` dominant eigenvectors of `Phi^T Phi`.
pub fn cgt2_basis(stt: &SttSet, l: usize) -> Result<RotationBasis> {
    if l == 0 || l > N {
        return Err(Error::Dimension(format!("latent dimension {l} outside 1..={N}")));
    }
    let c = second_order_cgt(&stt.phi1, N);
    let eig = symmetric_eigen(&c, N);
    let rows: Vec<f64> = eig.iter().take(l).flat_map(|(_, v)| v.iter().copied()).collect();
    RotationBasis::new(BasisTag::Cgt2TopL, (stt.t_start, stt.t_end), rows.clone(), rows)
}

/// Eigen searches backing a tensor-derived basis.
#[derive(Clone, Debug)]
pub struct TensorBasis {
    pub basis: RotationBasis,
    /// Order-3 CGT search (gives `R2`).
    pub order3: EigenSearch,
    /// Order-4 CGT search (gives `R3`).
    pub order4: EigenSearch,
}

/// Basis from the maximal eigenvectors of the order-3 (for `R2`) and order-4
/// (for `R3`) CGTs of `family`.
pub fn tensor_basis(stt: &SttSet, family: &CgtFamily<'_>, tag: BasisTag, search: &SearchConfig) -> Result<TensorBasis> {
    let s3 = max_eigenpair(&cgt(stt, family, 3)?, search)?;
    let s4 = max_eigenpair(&cgt(stt, family, 4)?, search)?;
    let mut r2 = s3.best().v.clone();
    let mut r3 = s4.best().v.clone();
    normalize_sign(&mut r2);
    normalize_sign(&mut r3);
    Ok(TensorBasis {
        basis: RotationBasis::new(tag, (stt.t_start, stt.t_end), r2, r3)?,
        order3: s3,
        order4: s4,
    })
}

/// Contracts every trailing index of a row-major tensor (`rows` leading
/// entries, `order` trailing indices of size `n_in`) with the rows of `r`
/// (`n_out x n_in`).
fn project_trailing(data: &[f64], rows: usize, order: usize, r: &[f64], n_in: usize, n_out: usize) -> Vec<f64> {
    let mut cur = data.to_vec();
    // dims of the trailing indices, updated one axis at a time
    let mut dims = vec![n_in; order];
    for axis in 0..order {
        let before: usize = rows * dims[..axis].iter().product::<usize>();
        let after: usize = dims[axis + 1..].iter().product();
        let mut next = vec![0.0; before * n_out * after];
        for b in 0..before {
            for g in 0..n_out {
                let rrow = &r[g * n_in..(g + 1) * n_in];
                let dst = &mut next[(b * n_out + g) * after..(b * n_out + g + 1) * after];
                for (k, &rv) in rrow.iter().enumerate() {
                    if rv == 0.0 {
                        continue;
                    }
                    let src = &cur[(b * n_in + k) * after..(b * n_in + k + 1) * after];
                    for (d, s) in dst.iter_mut().zip(src) {
                        *d += rv * s;
                    }
                }
            }
        }
        dims[axis] = n_out;
        cur = next;
    }
    cur
}

fn transpose(r: &[f64], l: usize, n: usize) -> Vec<f64> {
    let mut t = vec![0.0; l * n];
    for g in 0..l {
        for k in 0..n {
            t[k * l + g] = r[g * n + k];
        }
    }
    t
}

/// Projected tensors `psi2` (`n x l2 x l2`) and `psi3` (`n x l3 x l3 x l3`)
/// with the full STM retained.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DsttSet {
    pub t_start: f64,
    pub t_end: f64,
    pub phi1: Vec<f64>,
    pub psi2: Vec<f64>,
    pub psi3: Vec<f64>,
    pub basis: RotationBasis,
}

pub fn construct_dstt(stt: &SttSet, basis: &RotationBasis) -> Result<DsttSet> {
    if stt.order < 3 {
        return Err(Error::InsufficientOrder { needed: 3, have: stt.order });
    }
    if basis.r2.len() != basis.l2 * N || basis.r3.len() != basis.l3 * N {
        return Err(Error::Dimension("basis shape does not match its latent dimensions".into()));
    }
    Ok(DsttSet {
        t_start: stt.t_start,
        t_end: stt.t_end,
        phi1: stt.phi1.clone(),
        psi2: project_trailing(&stt.phi2, N, 2, &basis.r2, N, basis.l2),
        psi3: project_trailing(&stt.phi3, N, 3, &basis.r3, N, basis.l3),
        basis: basis.clone(),
    })
}

impl DsttSet {
    /// `Phi dx + sum_p psi_p (R_p dx)^p / p!` for `p = 2..=m`.
    pub fn propagate(&self, dx: &[f64; N], m: usize) -> Result<[f64; N]> {
        if !(1..=3).contains(&m) {
            return Err(Error::InsufficientOrder { needed: m, have: 3 });
        }
        let b = &self.basis;
        let latent = |r: &[f64], l: usize| -> Vec<f64> {
            (0..l).map(|g| (0..N).map(|k| r[g * N + k] * dx[k]).sum()).collect()
        };
        let y2 = latent(&b.r2, b.l2);
        let y3 = latent(&b.r3, b.l3);
        let mut out = [0.0; N];
        for i in 0..N {
            let mut acc: f64 = (0..N).map(|a| self.phi1[i * N + a] * dx[a]).sum();
            if m >= 2 {
                let l = b.l2;
                let blk = &self.psi2[i * l * l..(i + 1) * l * l];
                let mut s = 0.0;
                for g in 0..l {
                    let inner: f64 = (0..l).map(|h| blk[g * l + h] * y2[h]).sum();
                    s += inner * y2[g];
                }
                acc += 0.5 * s;
            }
            if m >= 3 {
                let l = b.l3;
                let blk = &self.psi3[i * l * l * l..(i + 1) * l * l * l];
                let mut s = 0.0;
                for g in 0..l {
                    let mut sg = 0.0;
                    for h in 0..l {
                        let base = (g * l + h) * l;
                        let sh: f64 = (0..l).map(|k| blk[base + k] * y3[k]).sum();
                        sg += sh * y3[h];
                    }
                    s += sg * y3[g];
                }
                acc += s / 6.0;
            }
            out[i] = acc;
        }
        Ok(out)
    }

    /// `psi2` and `psi3` mapped back to full dimension through the basis
    /// rows: `phi_p ~ psi_p . R_p (x) ... (x) R_p`.
    pub fn reconstruct(&self) -> (Vec<f64>, Vec<f64>) {
        let b = &self.basis;
        let r2t = transpose(&b.r2, b.l2, N);
        let r3t = transpose(&b.r3, b.l3, N);
        (
            project_trailing(&self.psi2, N, 2, &r2t, b.l2, N),
            project_trailing(&self.psi3, N, 3, &r3t, b.l3, N),
        )
    }
}

/// Normalized Frobenius reconstruction error per order. When an STT block
/// is identically zero the error is undefined: it is reported as NaN and
/// `low_nonlinearity` is set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrobeniusError {
    pub eps2: f64,
    pub eps3: f64,
    pub norm2: f64,
    pub norm3: f64,
    pub low_nonlinearity: bool,
}

pub fn frobenius_error(stt: &SttSet, dstt: &DsttSet) -> Result<FrobeniusError> {
    let tol = 1e-9 * (1.0 + stt.t_end.abs());
    if (stt.t_start - dstt.t_start).abs() > tol || (stt.t_end - dstt.t_end).abs() > tol {
        return Err(Error::IntervalMismatch("STT and DSTT cover different intervals".into()));
    }
    if stt.order < 3 {
        return Err(Error::InsufficientOrder { needed: 3, have: stt.order });
    }
    let (rec2, rec3) = dstt.reconstruct();
    let rel = |full: &[f64], rec: &[f64]| -> (f64, f64) {
        let nrm = frobenius(full);
        let diff: f64 = full.iter().zip(rec).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        (if nrm > 0.0 { diff / nrm } else { f64::NAN }, nrm)
    };
    let (eps2, norm2) = rel(&stt.phi2, &rec2);
    let (eps3, norm3) = rel(&stt.phi3, &rec3);
    Ok(FrobeniusError {
        eps2,
        eps3,
        norm2,
        norm3,
        low_nonlinearity: norm2 == 0.0 || norm3 == 0.0,
    })
}

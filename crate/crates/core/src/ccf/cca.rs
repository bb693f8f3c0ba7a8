use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)] // inherent float methods shadow it under std
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, solve_lower, solve_lower_transposed, symmetric_eigen};

/// Canonical directions of the feature block against one-hot labels.
#[derive(Debug, Clone, PartialEq)]
pub struct CcaResult {
    /// Unit-norm projection vectors over the input columns.
    pub projections: Vec<Vec<f64>>,
    /// Sample canonical correlation of each projection, descending.
    pub correlations: Vec<f64>,
}

/// Canonical correlation analysis between `x` (`n × p`, row-major) and the
/// one-hot encoding of `classes` (values `0..n_classes`).
///
/// Directions come from the ridge-regularized generalized eigenproblem on
/// centered data (`epsilon` added to both covariance diagonals). Reported
/// correlations are measured on the data without regularization: for
/// one-hot targets the canonical correlation of a direction equals the
/// square root of its between-class to total variance ratio.
pub fn cca_project(x: &[f64], n: usize, p: usize, classes: &[usize], n_classes: usize, epsilon: f64) -> Result<CcaResult> {
    if n < 2 || p == 0 {
        return Err(Error::InvalidParameter("CCA needs n >= 2 and p >= 1".into()));
    }
    if x.len() != n * p || classes.len() != n {
        return Err(Error::DimensionMismatch { expected: (n, p), found: (x.len() / p.max(1), classes.len()) });
    }
    // Compact present classes; the last present class is the dropped reference column.
    let mut present = vec![usize::MAX; n_classes];
    let mut n_present = 0;
    for &c in classes {
        if present[c] == usize::MAX {
            present[c] = n_present;
            n_present += 1;
        }
    }
    if n_present < 2 {
        return Err(Error::InvalidParameter("CCA needs at least two classes".into()));
    }
    let y_of: Vec<usize> = classes.iter().map(|&c| present[c]).collect();
    let q = n_present - 1;
    let nf = n as f64;

    let mut mean_x = vec![0.0; p];
    for row in x.chunks(p) {
        for (m, v) in mean_x.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean_x.iter_mut().for_each(|m| *m /= nf);
    let mut class_n = vec![0.0; n_present];
    for &c in &y_of {
        class_n[c] += 1.0;
    }
    let mean_y: Vec<f64> = class_n[..q].iter().map(|c| c / nf).collect();

    let denom = nf - 1.0;
    let mut cxx = vec![0.0; p * p];
    let mut cxy = vec![0.0; p * q];
    let mut cyy = vec![0.0; q * q];
    let mut xc = vec![0.0; p];
    let mut yc = vec![0.0; q];
    for (row, &c) in x.chunks(p).zip(&y_of) {
        for k in 0..p {
            xc[k] = row[k] - mean_x[k];
        }
        for k in 0..q {
            yc[k] = if c == k { 1.0 } else { 0.0 } - mean_y[k];
        }
        for a in 0..p {
            for b in a..p {
                cxx[a * p + b] += xc[a] * xc[b];
            }
            for b in 0..q {
                cxy[a * q + b] += xc[a] * yc[b];
            }
        }
        for a in 0..q {
            for b in a..q {
                cyy[a * q + b] += yc[a] * yc[b];
            }
        }
    }
    for a in 0..p {
        for b in a..p {
            let v = cxx[a * p + b] / denom;
            cxx[a * p + b] = v;
            cxx[b * p + a] = v;
        }
        cxx[a * p + a] += epsilon;
        for b in 0..q {
            cxy[a * q + b] /= denom;
        }
    }
    for a in 0..q {
        for b in a..q {
            let v = cyy[a * q + b] / denom;
            cyy[a * q + b] = v;
            cyy[b * q + a] = v;
        }
        cyy[a * q + a] += epsilon;
    }
    if cxx.iter().chain(&cxy).any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite covariance".into()));
    }
    let lx = cholesky(&cxx, p).ok_or_else(|| Error::Numerical("feature covariance not positive definite".into()))?;
    let ly = cholesky(&cyy, q).ok_or_else(|| Error::Numerical("label covariance not positive definite".into()))?;

    // K = Lx⁻¹ Cxy Ly⁻ᵀ, built column by column of Kᵀ = Ly⁻¹ (Lx⁻¹ Cxy)ᵀ.
    let mut t = vec![0.0; p * q]; // Lx⁻¹ Cxy, stored column-major per label column
    for b in 0..q {
        let mut col: Vec<f64> = (0..p).map(|a| cxy[a * q + b]).collect();
        solve_lower(&lx, p, &mut col);
        for a in 0..p {
            t[a * q + b] = col[a];
        }
    }
    let mut k = vec![0.0; p * q];
    for a in 0..p {
        let mut row: Vec<f64> = t[a * q..(a + 1) * q].to_vec();
        solve_lower(&ly, q, &mut row);
        k[a * q..(a + 1) * q].copy_from_slice(&row);
    }
    let mut kkt = vec![0.0; p * p];
    for a in 0..p {
        for b in a..p {
            let v: f64 = (0..q).map(|c| k[a * q + c] * k[b * q + c]).sum();
            kkt[a * p + b] = v;
            kkt[b * p + a] = v;
        }
    }
    let (_, vectors) = symmetric_eigen(&kkt, p);
    let n_comp = p.min(q);

    let mut comps: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n_comp);
    for u in vectors.into_iter().take(n_comp) {
        let mut a = u;
        solve_lower_transposed(&lx, p, &mut a);
        let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            continue;
        }
        a.iter_mut().for_each(|v| *v /= norm);
        // sign: largest-magnitude weight positive
        let pivot = a.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
        }
        let rho = eta(x, p, &a, &y_of, n_present);
        comps.push((rho, a));
    }
    comps.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap_or(core::cmp::Ordering::Equal));
    let (correlations, projections) = comps.into_iter().unzip();
    Ok(CcaResult { projections, correlations })
}

/// Correlation ratio of the projection `x·a` against the classes.
fn eta(x: &[f64], p: usize, a: &[f64], classes: &[usize], n_classes: usize) -> f64 {
    let z: Vec<f64> = x.chunks(p).map(|row| row.iter().zip(a).map(|(v, w)| v * w).sum()).collect();
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let mut sums = vec![0.0; n_classes];
    let mut counts = vec![0.0; n_classes];
    for (&v, &c) in z.iter().zip(classes) {
        sums[c] += v;
        counts[c] += 1.0;
    }
    let total: f64 = z.iter().map(|v| (v - mean) * (v - mean)).sum();
    if total <= 0.0 {
        return 0.0;
    }
    let between: f64 = sums
        .iter()
        .zip(&counts)
        .filter(|(_, &c)| c > 0.0)
        .map(|(s, c)| {
            let m = s / c;
            c * (m - mean) * (m - mean)
        })
        .sum();
    (between / total).clamp(0.0, 1.0).sqrt()
}

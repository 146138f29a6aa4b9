//! Galerkin truncation of the mode operators `A_k` in the poloidal Fourier
//! basis `e^{il eta}`, `|l| <= L`, and the map to Neumann-Poincare eigenvalues.
//!
//! In this basis `A_k` has the matrix `M_{ml} = c_{m-l} s_{k,l} - xi s'_{k,l} delta_{ml}`
//! and the Gram matrix of the `k`-inner product is `diag(2 pi s_{k,l})`. The
//! diagonal congruence `B = G^{1/2} M G^{-1/2}`, entrywise
//! `B_{ml} = c_{m-l} sqrt(s_{k,m} s_{k,l}) - xi s'_{k,l} delta_{ml}`, is symmetric
//! and has the spectrum of `M`.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TorusShape;
use crate::modes::{c_m, check_xi, mode_table, mode_table_for, ModeTable};
use crate::quadrature::QuadratureSpec;

/// Default magnitude above which eigenvalues count as resolved. Each block
/// has infinitely many eigenvalues of both signs accumulating at zero, and a
/// truncation at `L` only converges those above a scale that shrinks with `L`;
/// below it the number of Ritz values of either sign keeps growing with `L`.
pub const RESOLVED_THRESHOLD: f64 = 1e-2;

pub const MAX_TRUNCATION: usize = 256;

/// Residual bound of every returned eigenpair, relative to `||B||_2`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// `(1 - xi^2) / (8 pi sqrt2 xi)`, taking eigenvalues of `A_k` to those of the
/// Neumann-Poincare operator.
pub fn np_scale(shape: &TorusShape) -> f64 {
    let xi = shape.xi();
    (1.0 - xi * xi) / (8.0 * PI * SQRT_2 * xi)
}

#[derive(Clone, Debug)]
pub struct ModeMatrix {
    pub xi: f64,
    pub k: i64,
    pub l_trunc: usize,
    /// Symmetric `(2L+1) x (2L+1)`, rows and columns ordered `l = -L..=L`.
    pub entries: DMatrix<f64>,
    pub s_diag: Vec<f64>,
    pub ds_diag: Vec<f64>,
    /// Frobenius norm of the entrywise error bounds; by Weyl's inequality it
    /// bounds the eigenvalue error due to quadrature, in `A_k` units.
    pub build_err: f64,
}

impl ModeMatrix {
    pub fn dim(&self) -> usize {
        2 * self.l_trunc + 1
    }

    /// Position of poloidal index `l` in the basis ordering.
    pub fn position(&self, l: i64) -> usize {
        assert!(l.unsigned_abs() as usize <= self.l_trunc);
        (l + self.l_trunc as i64) as usize
    }

    pub fn diagonal(&self, l: i64) -> f64 {
        let p = self.position(l);
        self.entries[(p, p)]
    }

    /// The unsymmetrized matrix `M`.
    pub fn raw(&self, shape: &TorusShape) -> DMatrix<f64> {
        let n = self.dim();
        let xi = shape.xi();
        DMatrix::from_fn(n, n, |i, j| {
            let c = c_m(shape, i as i64 - j as i64) * self.s_diag[j];
            if i == j {
                c - xi * self.ds_diag[j]
            } else {
                c
            }
        })
    }
}

fn check_truncation(l_trunc: usize) -> Result<()> {
    if l_trunc == 0 || l_trunc > MAX_TRUNCATION {
        return Err(Error::Domain(format!(
            "truncation L = {l_trunc} outside 1..={MAX_TRUNCATION}"
        )));
    }
    Ok(())
}

pub fn build_mode_matrix(shape: &TorusShape, k: i64, l_trunc: usize, spec: &QuadratureSpec) -> Result<ModeMatrix> {
    check_truncation(l_trunc)?;
    let table = mode_table_for(shape, &[k.unsigned_abs() as u32], l_trunc, spec)?;
    mode_matrix_from_table(shape, &table, k, l_trunc, spec)
}

/// Assemble from precomputed integrals; `table` must cover `|k|` and `l <= l_trunc`.
pub fn mode_matrix_from_table(
    shape: &TorusShape,
    table: &ModeTable,
    k: i64,
    l_trunc: usize,
    spec: &QuadratureSpec,
) -> Result<ModeMatrix> {
    check_xi(shape)?;
    check_truncation(l_trunc)?;
    if !table.contains(k, l_trunc as i64) || table.xi != shape.xi() {
        return Err(Error::Domain(format!(
            "mode table (xi = {}, L <= {}) does not cover k = {k}, L = {l_trunc}",
            table.xi, table.l_max
        )));
    }
    if let Some((tk, tl)) = table.first_unresolved(k, l_trunc, spec) {
        return Err(Error::NonConvergence {
            what: format!("mode integrals at (k, l) = ({tk}, {tl})"),
            value: table.s(tk, tl),
            err_estimate: table.s_err(tk, tl),
        });
    }
    let xi = shape.xi();
    let n = 2 * l_trunc + 1;
    let ls: Vec<i64> = (-(l_trunc as i64)..=l_trunc as i64).collect();
    let s: Vec<f64> = ls.iter().map(|&l| table.s(k, l)).collect();
    let ds: Vec<f64> = ls.iter().map(|&l| table.ds(k, l)).collect();
    let rel: Vec<f64> = ls.iter().zip(&s).map(|(&l, sv)| table.s_err(k, l) / sv).collect();
    if let Some(i) = s.iter().position(|&v| v.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater)) {
        return Err(Error::Domain(format!(
            "s_(k,l) = {} not positive at (k, l) = ({k}, {})",
            s[i], ls[i]
        )));
    }
    let root: Vec<f64> = s.iter().map(|v| v.sqrt()).collect();
    let coef: Vec<f64> = (0..2 * n).map(|j| c_m(shape, j as i64)).collect();
    let mut entries = DMatrix::zeros(n, n);
    let mut err2 = 0.0;
    for i in 0..n {
        for j in 0..=i {
            let c = coef[i - j];
            let mut v = c * root[i] * root[j];
            let mut e = v.abs() * 0.5 * (rel[i] + rel[j]);
            if i == j {
                v -= xi * ds[i];
                e += xi * table.ds_err(k, ls[i]);
            }
            // one product, written to both triangles: symmetric exactly
            entries[(i, j)] = v;
            entries[(j, i)] = v;
            err2 += if i == j { e * e } else { 2.0 * e * e };
        }
    }
    Ok(ModeMatrix {
        xi,
        k,
        l_trunc,
        entries,
        s_diag: s,
        ds_diag: ds,
        build_err: err2.sqrt(),
    })
}

/// Eigenpairs sorted by descending eigenvalue.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Column `j` belongs to `values[j]`.
    pub vectors: DMatrix<f64>,
    /// `||A v - lambda v||_2` per pair.
    pub residuals: Vec<f64>,
    /// `max |V^T V - I|`.
    pub orthogonality_defect: f64,
}

/// Relative asymmetry `max |A_ij - A_ji| / max |A_ij|`.
pub fn asymmetry(a: &DMatrix<f64>) -> f64 {
    let scale = a.amax();
    if scale == 0.0 {
        return 0.0;
    }
    let mut worst: f64 = 0.0;
    for i in 0..a.nrows() {
        for j in 0..i {
            worst = worst.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    worst / scale
}

/// Dense symmetric eigensolver (Householder tridiagonalization and implicit
/// QL) with residual and orthonormality checks on the result.
pub fn symmetric_eigendecomposition(a: &DMatrix<f64>, tol: f64) -> Result<EigenDecomposition> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::Domain(format!("matrix is {}x{}, not square", a.nrows(), a.ncols())));
    }
    let asym = asymmetry(a);
    if asym > 1e-12 {
        return Err(Error::NotSymmetric(asym));
    }
    let max_iter = 100 * n;
    let eig = SymmetricEigen::try_new(a.clone(), f64::EPSILON, max_iter)
        .ok_or(Error::Eigen { iterations: max_iter })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);

    let norm = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let residuals: Vec<f64> = (0..n)
        .map(|j| {
            let v: DVector<f64> = vectors.column(j).into_owned();
            (a * &v - &v * values[j]).norm()
        })
        .collect();
    let gram = vectors.transpose() * &vectors;
    let orthogonality_defect = (gram - DMatrix::identity(n, n)).amax();
    let worst = residuals.iter().fold(0.0f64, |m, r| m.max(*r));
    if worst > tol * norm.max(f64::MIN_POSITIVE) || orthogonality_defect > 1e-10 {
        return Err(Error::NonConvergence {
            what: "symmetric eigendecomposition".into(),
            value: worst,
            err_estimate: orthogonality_defect,
        });
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        residuals,
        orthogonality_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRecord {
    pub xi: f64,
    pub k: i64,
    #[serde(rename = "L")]
    pub l_trunc: usize,
    /// Rank in descending order, from 0.
    pub index: usize,
    pub lambda_a: f64,
    pub lambda_np: f64,
    pub residual: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SignCounts {
    pub positive: usize,
    pub negative: usize,
    /// Beyond the quadrature noise `10 * build_err`: the sign is certain, and
    /// by Rayleigh-Ritz each such value implies a distinct eigenvalue of the
    /// operator with that sign.
    pub certified_positive: usize,
    pub certified_negative: usize,
    /// `|lambda_np| >= resolution`.
    pub resolved_positive: usize,
    pub resolved_negative: usize,
    pub resolution: f64,
}

impl SignCounts {
    pub fn of(lambda_np: impl IntoIterator<Item = f64>, noise: f64, resolution: f64) -> Self {
        let mut c = Self {
            resolution,
            ..Self::default()
        };
        for v in lambda_np {
            if v > 0.0 {
                c.positive += 1;
            } else if v < 0.0 {
                c.negative += 1;
            }
            if v > noise {
                c.certified_positive += 1;
            } else if v < -noise {
                c.certified_negative += 1;
            }
            if v >= resolution {
                c.resolved_positive += 1;
            } else if v <= -resolution {
                c.resolved_negative += 1;
            }
        }
        c
    }

    fn add(&mut self, o: &Self) {
        self.positive += o.positive;
        self.negative += o.negative;
        self.certified_positive += o.certified_positive;
        self.certified_negative += o.certified_negative;
        self.resolved_positive += o.resolved_positive;
        self.resolved_negative += o.resolved_negative;
        self.resolution = o.resolution;
    }
}

/// Spectrum of one truncated mode operator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub xi: f64,
    pub k: i64,
    #[serde(rename = "L")]
    pub l_trunc: usize,
    pub records: Vec<SpectrumRecord>,
    pub counts: SignCounts,
    /// `build_err` in Neumann-Poincare units.
    pub build_err_np: f64,
    pub max_residual: f64,
}

impl ModeSpectrum {
    pub fn lambda_np(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.lambda_np)
    }

    /// Containment slack `10 * build_err` around `[-1/2, 1/2]`.
    pub fn containment_slack(&self) -> f64 {
        10.0 * self.build_err_np
    }

    pub fn contained(&self) -> bool {
        let bound = 0.5 + self.containment_slack();
        self.lambda_np().all(|v| v.abs() <= bound)
    }

    /// Counts with a different resolution threshold.
    pub fn counts_at(&self, resolution: f64) -> SignCounts {
        SignCounts::of(self.lambda_np(), self.containment_slack(), resolution)
    }
}

pub fn spectrum_of(shape: &TorusShape, m: &ModeMatrix) -> Result<ModeSpectrum> {
    let eig = symmetric_eigendecomposition(&m.entries, RESIDUAL_TOL)?;
    let scale = np_scale(shape);
    let records: Vec<SpectrumRecord> = eig
        .values
        .iter()
        .zip(&eig.residuals)
        .enumerate()
        .map(|(index, (&lambda_a, &residual))| SpectrumRecord {
            xi: m.xi,
            k: m.k,
            l_trunc: m.l_trunc,
            index,
            lambda_a,
            lambda_np: scale * lambda_a,
            residual,
        })
        .collect();
    let build_err_np = scale * m.build_err;
    let counts = SignCounts::of(records.iter().map(|r| r.lambda_np), 10.0 * build_err_np, RESOLVED_THRESHOLD);
    Ok(ModeSpectrum {
        xi: m.xi,
        k: m.k,
        l_trunc: m.l_trunc,
        counts,
        build_err_np,
        max_residual: eig.residuals.iter().fold(0.0, |a, r| a.max(*r)),
        records,
    })
}

pub fn mode_spectrum(shape: &TorusShape, k: i64, l_trunc: usize, spec: &QuadratureSpec) -> Result<ModeSpectrum> {
    let m = build_mode_matrix(shape, k, l_trunc, spec)?;
    spectrum_of(shape, &m)
}

/// Per-mode spectra for `k = 0..=k_max`. Negative `k` give the same blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub xi: f64,
    #[serde(rename = "L")]
    pub l_trunc: usize,
    pub blocks: Vec<ModeSpectrum>,
    pub totals: SignCounts,
}

impl SpectrumTable {
    pub fn block(&self, k: i64) -> Option<&ModeSpectrum> {
        self.blocks.iter().find(|b| b.k == k.abs())
    }

    /// Re-count every block at another resolution threshold.
    pub fn with_resolution(mut self, resolution: f64) -> Self {
        let mut totals = SignCounts {
            resolution,
            ..SignCounts::default()
        };
        for b in &mut self.blocks {
            b.counts = b.counts_at(resolution);
            totals.add(&b.counts);
        }
        self.totals = totals;
        self
    }
}

pub fn assemble_spectrum(
    shape: &TorusShape,
    k_max: usize,
    l_trunc: usize,
    spec: &QuadratureSpec,
) -> Result<SpectrumTable> {
    check_truncation(l_trunc)?;
    let table = mode_table(shape, k_max, l_trunc, spec)?;
    spectrum_table_from(shape, &table, l_trunc, spec)
}

/// Spectra for every `k` in `table`, blocks solved in parallel.
pub fn spectrum_table_from(
    shape: &TorusShape,
    table: &ModeTable,
    l_trunc: usize,
    spec: &QuadratureSpec,
) -> Result<SpectrumTable> {
    let blocks = table
        .ks
        .par_iter()
        .map(|&k| {
            let m = mode_matrix_from_table(shape, table, k as i64, l_trunc, spec)?;
            spectrum_of(shape, &m)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut totals = SignCounts {
        resolution: RESOLVED_THRESHOLD,
        ..SignCounts::default()
    };
    for b in &blocks {
        totals.add(&b.counts);
    }
    Ok(SpectrumTable {
        xi: shape.xi(),
        l_trunc,
        blocks,
        totals,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    #[serde(rename = "L")]
    pub l_trunc: usize,
    /// Largest `lambda_np`, descending.
    pub top: Vec<f64>,
    /// Smallest `lambda_np`, ascending.
    pub bottom: Vec<f64>,
    /// `|top_j(L) - top_j(L_prev)|`; empty on the first row.
    pub top_deltas: Vec<f64>,
    pub bottom_deltas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub xi: f64,
    pub k: i64,
    pub rows: Vec<ConvergenceRow>,
    /// Deltas of the largest eigenvalue strictly decrease along the sequence.
    pub top_monotone: bool,
    pub bottom_monotone: bool,
}

fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Spectra at increasing truncations. All truncations share one table of
/// integrals, so the bases are nested and the extremal values move
/// monotonically.
pub fn convergence_study(
    shape: &TorusShape,
    k: i64,
    l_sequence: &[usize],
    n_extremal: usize,
    spec: &QuadratureSpec,
) -> Result<ConvergenceStudy> {
    if l_sequence.is_empty() || !l_sequence.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::Domain("truncation sequence must be non-empty and increasing".into()));
    }
    let l_max = *l_sequence.last().unwrap();
    check_truncation(l_sequence[0])?;
    check_truncation(l_max)?;
    let table = mode_table_for(shape, &[k.unsigned_abs() as u32], l_max, spec)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &l_trunc in l_sequence {
        let m = mode_matrix_from_table(shape, &table, k, l_trunc, spec)?;
        let sp = spectrum_of(shape, &m)?;
        let vals: Vec<f64> = sp.lambda_np().collect();
        let take = n_extremal.min(vals.len());
        let top: Vec<f64> = vals[..take].to_vec();
        let bottom: Vec<f64> = vals.iter().rev().take(take).copied().collect();
        let (top_deltas, bottom_deltas) = match rows.last() {
            Some(prev) => (
                top.iter().zip(&prev.top).map(|(a, b)| (a - b).abs()).collect(),
                bottom.iter().zip(&prev.bottom).map(|(a, b)| (a - b).abs()).collect(),
            ),
            None => (Vec::new(), Vec::new()),
        };
        rows.push(ConvergenceRow {
            l_trunc,
            top,
            bottom,
            top_deltas,
            bottom_deltas,
        });
    }
    let firsts = |f: fn(&ConvergenceRow) -> &Vec<f64>| -> Vec<f64> {
        rows.iter().skip(1).filter_map(|r| f(r).first().copied()).collect()
    };
    let top_monotone = strictly_decreasing(&firsts(|r| &r.top_deltas));
    let bottom_monotone = strictly_decreasing(&firsts(|r| &r.bottom_deltas));
    Ok(ConvergenceStudy {
        xi: shape.xi(),
        k,
        rows,
        top_monotone,
        bottom_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::{geometric_ratio, i_kl_spectral};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};

    fn shape(xi: f64) -> TorusShape {
        TorusShape::unit(xi).unwrap()
    }

    #[test]
    fn eigen_small_examples() {
        let e = symmetric_eigendecomposition(&DMatrix::identity(5, 5), 1e-12).unwrap();
        assert!(e.values.iter().all(|v| (v - 1.0).abs() < 1e-15));
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let e = symmetric_eigendecomposition(&a, 1e-12).unwrap();
        assert_relative_eq!(e.values[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(e.values[1], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn eigen_random_reconstruction() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let n = 20;
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v: f64 = rng.gen_range(-1.0..1.0);
                a[(i, j)] = v;
                a[(j, i)] = v;
            }
        }
        let e = symmetric_eigendecomposition(&a, 1e-12).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        let lambda = DMatrix::from_diagonal(&DVector::from_vec(e.values.clone()));
        let back = &e.vectors * lambda * e.vectors.transpose();
        assert!((back - &a).norm() / a.norm() < 1e-10);
        assert!(e.orthogonality_defect < 1e-12);
    }

    #[test]
    fn eigen_rejects_asymmetric() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 1.0]);
        assert!(matches!(symmetric_eigendecomposition(&a, 1e-12), Err(Error::NotSymmetric(_))));
    }

    #[test]
    fn mode_matrix_symmetric_and_positive() {
        let spec = QuadratureSpec::default();
        let m = build_mode_matrix(&shape(0.5), 0, 8, &spec).unwrap();
        assert_eq!(m.dim(), 17);
        assert_eq!(asymmetry(&m.entries), 0.0);
        assert!(m.s_diag.iter().all(|v| *v > 0.0));
        assert!(m.build_err > 0.0 && m.build_err < 1e-6);
    }

    #[test]
    fn diagonal_is_normalized_numerical_range() {
        let spec = QuadratureSpec::default();
        let s = shape(0.5);
        let m = build_mode_matrix(&s, 3, 4, &spec).unwrap();
        for l in -4..=4 {
            let r = i_kl_spectral(&s, 3, l, &spec).unwrap();
            let lhs = m.diagonal(l) * s.cos_alpha();
            assert!((lhs - r.value).abs() <= r.err_estimate + m.build_err, "l={l}: {lhs} vs {}", r.value);
        }
    }

    #[test]
    fn off_diagonal_decay_is_geometric() {
        let spec = QuadratureSpec::default();
        let s = shape(0.5);
        let m = build_mode_matrix(&s, 2, 16, &spec).unwrap();
        let beta = geometric_ratio(&s);
        let n = m.dim();
        // C fitted on the first off-diagonal
        let c = (0..n - 1).map(|i| m.entries[(i + 1, i)].abs() / beta).fold(0.0, f64::max);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    let d = (i as i32 - j as i32).unsigned_abs() as i32;
                    assert!(m.entries[(i, j)].abs() <= c * beta.powi(d) * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn symmetrized_matrix_is_isospectral_to_raw() {
        let spec = QuadratureSpec::default();
        let s = shape(0.5);
        let m = build_mode_matrix(&s, 1, 4, &spec).unwrap();
        let raw = m.raw(&s);
        let half = DMatrix::from_diagonal(&DVector::from_iterator(9, m.s_diag.iter().map(|v| v.sqrt())));
        let inv = DMatrix::from_diagonal(&DVector::from_iterator(9, m.s_diag.iter().map(|v| 1.0 / v.sqrt())));
        let similar = &half * &raw * &inv;
        assert!((similar - &m.entries).amax() <= 1e-12 * m.entries.amax());
        // Rayleigh quotients of M in the Gram inner product reproduce the eigenvalues
        let e = symmetric_eigendecomposition(&m.entries, 1e-12).unwrap();
        let gram = DMatrix::from_diagonal(&DVector::from_iterator(9, m.s_diag.iter().map(|v| 2.0 * PI * v)));
        for j in 0..9 {
            let w = &inv * e.vectors.column(j);
            let num = (w.transpose() * &gram * &raw * &w)[(0, 0)];
            let den = (w.transpose() * &gram * &w)[(0, 0)];
            assert!((num / den - e.values[j]).abs() <= 1e-12 * e.values[0].abs());
        }
    }

    #[test]
    fn nested_truncations_interlace() {
        let spec = QuadratureSpec::default();
        let s = shape(0.6);
        let table = mode_table_for(&s, &[5], 12, &spec).unwrap();
        let a = symmetric_eigendecomposition(&mode_matrix_from_table(&s, &table, 5, 11, &spec).unwrap().entries, 1e-12)
            .unwrap()
            .values;
        let b = symmetric_eigendecomposition(&mode_matrix_from_table(&s, &table, 5, 12, &spec).unwrap().entries, 1e-12)
            .unwrap()
            .values;
        // the L = 12 basis adds two functions, so values of L = 11 sit between
        // ranks j and j + 2 of L = 12
        for (j, v) in a.iter().enumerate() {
            assert!(*v <= b[j] + 1e-10 && *v >= b[j + 2] - 1e-10, "rank {j}");
        }
    }

    #[test]
    fn spectrum_records_and_counts() {
        let spec = QuadratureSpec::default();
        let s = shape(0.5);
        let sp = mode_spectrum(&s, 12, 24, &spec).unwrap();
        assert_eq!(sp.records.len(), 49);
        assert!(sp.records.windows(2).all(|w| w[0].lambda_a >= w[1].lambda_a));
        assert!(sp.records.iter().all(|r| r.index < 49 && r.residual <= 1e-10 * 12.0));
        assert!(sp.contained());
        assert_eq!(sp.counts.positive + sp.counts.negative, 49);
        assert!(sp.counts.certified_negative >= 1 && sp.counts.certified_positive >= 1);
        let neg = mode_spectrum(&s, -12, 24, &spec).unwrap();
        for (a, b) in sp.records.iter().zip(&neg.records) {
            assert_eq!(a.lambda_np, b.lambda_np);
        }
        let c = sp.counts_at(1e-9);
        assert_eq!(c.resolved_negative + c.resolved_positive, 49);
    }

    #[test]
    fn convergence_study_shapes() {
        let spec = QuadratureSpec::default();
        let st = convergence_study(&shape(0.5), 0, &[2, 4, 8], 2, &spec).unwrap();
        assert_eq!(st.rows.len(), 3);
        assert!(st.rows[0].top_deltas.is_empty());
        assert_eq!(st.rows[2].top.len(), 2);
        // pre-asymptotic range: Ritz values still moving visibly
        assert!(st.top_monotone);
        let top = st.rows[2].top[0];
        assert!((top - 0.5).abs() < 1e-8 && top <= 0.5 + 1e-12);
        assert!(convergence_study(&shape(0.5), 0, &[8, 4], 2, &spec).is_err());
    }

    #[test]
    fn truncation_bounds() {
        let spec = QuadratureSpec::default();
        assert!(build_mode_matrix(&shape(0.5), 0, 0, &spec).is_err());
        assert!(build_mode_matrix(&shape(0.5), 0, 257, &spec).is_err());
    }

    proptest::proptest! {
        #[test]
        fn sign_counts_partition(values in proptest::collection::vec(-0.5f64..0.5, 0..60), noise in 0.0f64..1e-2) {
            let c = SignCounts::of(values.iter().copied(), noise, 3e-3);
            let zeros = values.iter().filter(|v| **v == 0.0).count();
            proptest::prop_assert_eq!(c.positive + c.negative + zeros, values.len());
            proptest::prop_assert!(c.certified_negative <= c.negative && c.certified_positive <= c.positive);
            proptest::prop_assert!(c.resolved_negative <= c.negative && c.resolved_positive <= c.positive);
        }
    }
}

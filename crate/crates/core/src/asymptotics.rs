//! Stationary-phase leading terms for `I_{k,l}` and empirical certification
//! of its sign pattern: positive along `l = 0` for large `k`, negative for
//! large `l` at fixed `k`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use nalgebra::{Matrix2, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::TorusShape;
use crate::modes::{check_xi, h_eval, lead_i_k0, lead_i_l, mode_table_for, SIGN_MARGIN};
use crate::quadrature::QuadratureSpec;

/// Hessians with `|det| <= DEGENERATE_DET` are treated as singular.
pub const DEGENERATE_DET: f64 = 1e-10;

/// Smallest scan bound accepted by [`certify_signs`].
pub const MIN_SCAN: i64 = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct CriticalPointData {
    /// `(r, theta)`.
    pub location: (f64, f64),
    pub hessian: Matrix2<f64>,
    pub phase_value: f64,
    pub amplitude: f64,
}

impl CriticalPointData {
    /// `(|det H|, #positive - #negative eigenvalues)`.
    fn signature(&self) -> Result<(f64, i32)> {
        let h = self.hessian;
        if (h[(0, 1)] - h[(1, 0)]).abs() > 1e-14 * h.amax().max(1.0) {
            return Err(Error::NotSymmetric(h[(0, 1)] - h[(1, 0)]));
        }
        let det = h.determinant();
        if det.abs() <= DEGENERATE_DET || !det.is_finite() {
            return Err(Error::SingularHessian(det));
        }
        let eig = SymmetricEigen::new(h).eigenvalues;
        let sign = eig.iter().map(|v| if *v > 0.0 { 1 } else { -1 }).sum();
        Ok((det.abs(), sign))
    }
}

/// Leading stationary-phase term of `int int h e^{i n Psi}` over a domain
/// whose only critical points are `points`, all interior.
pub fn stationary_phase_estimate(points: &[CriticalPointData], n: f64) -> Result<Complex64> {
    if n.is_nan() || n <= 0.0 {
        return Err(Error::Domain(format!("large parameter must be positive, got {n}")));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for p in points {
        let (det, sign) = p.signature()?;
        let phase = Complex64::from_polar(1.0, n * p.phase_value + FRAC_PI_4 * sign as f64);
        total += phase * (2.0 * PI / n) * p.amplitude / det.sqrt();
    }
    Ok(total)
}

/// Critical data of `Psi = -r cos(theta)` on the polar domain: the points
/// `(0, +-pi/2)`, where the Hessian is `[[0, sin theta], [sin theta, 0]]`.
fn polar_axis_points(amplitude: impl Fn(f64) -> f64) -> Vec<CriticalPointData> {
    [FRAC_PI_2, -FRAC_PI_2]
        .into_iter()
        .map(|theta: f64| {
            let off = theta.sin();
            CriticalPointData {
                location: (0.0, theta),
                hessian: Matrix2::new(0.0, off, off, 0.0),
                phase_value: 0.0,
                amplitude: amplitude(theta),
            }
        })
        .collect()
}

/// Critical data for the `l = 0` axis.
pub fn positive_axis_points(shape: &TorusShape) -> Vec<CriticalPointData> {
    polar_axis_points(|theta| h_eval(shape, 0.0, theta))
}

/// Critical data for fixed `k` and large `l`. The angle is shifted by a
/// quarter turn so the phase is again `-r cos(theta)`; the `e^{-ikr cos}`
/// factor is 1 at the origin and drops out of the amplitude.
pub fn negative_axis_points(shape: &TorusShape) -> Vec<CriticalPointData> {
    polar_axis_points(|theta| h_eval(shape, 0.0, theta + FRAC_PI_2))
}

/// Stationary-phase value of `I_{k,0}`; `I` carries a factor `1/2` in front
/// of the polar integral.
pub fn stationary_phase_i_k0(shape: &TorusShape, k: i64) -> Result<f64> {
    Ok(0.5 * stationary_phase_estimate(&positive_axis_points(shape), k as f64)?.re)
}

/// Stationary-phase value of `I_{k,l}` for large `l`.
pub fn stationary_phase_i_l(shape: &TorusShape, l: i64) -> Result<f64> {
    Ok(0.5 * stationary_phase_estimate(&negative_axis_points(shape), l as f64)?.re)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "axis", rename_all = "snake_case")]
pub enum ModeAxis {
    /// `l = 0`, scanning `k`.
    PositiveAxis,
    /// Fixed `k`, scanning `l`.
    NegativeAxis { k: i64 },
}

impl ModeAxis {
    pub fn label(&self) -> String {
        match self {
            ModeAxis::PositiveAxis => "l0".to_string(),
            ModeAxis::NegativeAxis { k } => format!("k{k}"),
        }
    }

    fn expected_sign(&self) -> f64 {
        match self {
            ModeAxis::PositiveAxis => 1.0,
            ModeAxis::NegativeAxis { .. } => -1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub index: i64,
    pub value: f64,
    pub err_estimate: f64,
    pub lead: f64,
    /// `value / lead`.
    pub ratio: f64,
    /// `|value| / err_estimate`.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignCertificate {
    pub xi: f64,
    pub mode_axis: ModeAxis,
    /// Smallest scanned index from which every value has the expected sign
    /// with margin at least [`SIGN_MARGIN`]. An observation, not a bound.
    pub threshold: Option<i64>,
    pub scan: Vec<ScanPoint>,
    /// `|ratio - 1|` at the largest scanned index.
    pub leading_constant_check: f64,
}

impl SignCertificate {
    fn from_scan(xi: f64, mode_axis: ModeAxis, scan: Vec<ScanPoint>) -> Self {
        let sign = mode_axis.expected_sign();
        let good = |p: &ScanPoint| p.value * sign > 0.0 && p.margin >= SIGN_MARGIN;
        let tail = scan.iter().rev().take_while(|p| good(p)).count();
        let threshold = (tail > 0).then(|| scan[scan.len() - tail].index);
        let leading_constant_check = scan.last().map_or(f64::INFINITY, |p| (p.ratio - 1.0).abs());
        SignCertificate {
            xi,
            mode_axis,
            threshold,
            scan,
            leading_constant_check,
        }
    }

    pub fn certified(&self) -> bool {
        self.threshold.is_some()
    }

    pub fn point(&self, index: i64) -> Option<&ScanPoint> {
        self.scan.iter().find(|p| p.index == index)
    }

    /// Smallest margin over the certified tail.
    pub fn min_margin(&self) -> Option<f64> {
        let t = self.threshold?;
        self.scan.iter().filter(|p| p.index >= t).map(|p| p.margin).reduce(f64::min)
    }

    /// Whether `|ratio - 1|` at the last index is strictly below its value at `early`.
    pub fn ratio_improves_from(&self, early: i64) -> Option<bool> {
        let a = self.point(early)?;
        let b = self.scan.last()?;
        Some((b.ratio - 1.0).abs() < (a.ratio - 1.0).abs())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificates {
    pub xi: f64,
    pub positive_axis: SignCertificate,
    pub negative_axis: Vec<SignCertificate>,
}

/// Scans `I_{k,0}` for `1 <= k <= k_scan_max` and `I_{k,l}` for
/// `1 <= l <= l_scan_max` at each `k` in `ks`, from a single mode table.
pub fn certify_signs(
    shape: &TorusShape,
    k_scan_max: i64,
    l_scan_max: i64,
    ks: &[i64],
    spec: &QuadratureSpec,
) -> Result<Certificates> {
    check_xi(shape)?;
    if k_scan_max < MIN_SCAN || l_scan_max < MIN_SCAN {
        return Err(Error::Domain(format!(
            "scan bounds must be at least {MIN_SCAN}, got k <= {k_scan_max}, l <= {l_scan_max}"
        )));
    }
    let mut table_ks: Vec<u32> = (1..=k_scan_max as u32).collect();
    table_ks.extend(ks.iter().map(|k| k.unsigned_abs() as u32));
    let table = mode_table_for(shape, &table_ks, l_scan_max as usize, spec)?;
    let point = |k: i64, l: i64, lead: f64| {
        let (value, err) = table.numerical_range(k, l);
        // a zero error estimate would make the margin infinite
        let err = err.max(f64::EPSILON * value.abs());
        ScanPoint {
            index: if l == 0 { k } else { l },
            value,
            err_estimate: err,
            lead,
            ratio: value / lead,
            margin: value.abs() / err,
        }
    };
    let positive = (1..=k_scan_max)
        .map(|k| Ok(point(k, 0, lead_i_k0(k)?)))
        .collect::<Result<Vec<_>>>()?;
    let negative = ks
        .iter()
        .map(|&k| {
            let scan = (1..=l_scan_max)
                .map(|l| Ok(point(k, l, lead_i_l(shape, l)?)))
                .collect::<Result<Vec<_>>>()?;
            Ok(SignCertificate::from_scan(shape.xi(), ModeAxis::NegativeAxis { k }, scan))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Certificates {
        xi: shape.xi(),
        positive_axis: SignCertificate::from_scan(shape.xi(), ModeAxis::PositiveAxis, positive),
        negative_axis: negative,
    })
}

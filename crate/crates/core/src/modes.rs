//! Mode-reduced kernel integrals on the torus.
//!
//! With `D(phi, eta) = mu(phi) - cos(eta)` the quantities computed here are
//!
//! * `s_k(eta)    = int e^{-ik phi} D^{-1/2} dphi`
//! * `s_{k,l}     = int int e^{-ik phi} e^{-il eta} D^{-1/2}`
//! * `s'_{k,l}    = xi^{-3} int int (1 - cos phi) e^{-ik phi} e^{-il eta} D^{-3/2}`
//! * `I_{k,l}     = s_{k,l} - xi sqrt(1 - xi^2) s'_{k,l}`
//!
//! `I_{k,l}` is evaluated three ways: from `s` and `s'`, as one double integral
//! of the combined integrand, and in polar coordinates around the origin where
//! the integrand is smooth. All double integrals have a single `1/r` type
//! singularity at `(phi, eta) = (0, 0)`.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{reduce_angle, TorusShape};
use crate::quadrature::{
    geometric_breaks, integrate_periodic, iterated, iterated_with, GradedInterval, Layout, QuadResult, QuadratureSpec,
};

pub const XI_MIN: f64 = 0.05;
pub const XI_MAX: f64 = 0.99;

/// Signs are only reported once `|I|` exceeds this multiple of its error estimate.
pub const SIGN_MARGIN: f64 = 3.0;

pub fn check_xi(shape: &TorusShape) -> Result<()> {
    let xi = shape.xi();
    if !(XI_MIN..=XI_MAX).contains(&xi) {
        return Err(Error::Domain(format!(
            "xi = {xi} outside the supported range [{XI_MIN}, {XI_MAX}]"
        )));
    }
    Ok(())
}

/// Toroidal (`k`) and poloidal (`l`) Fourier indices.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub k: i64,
    pub l: i64,
}

impl ModeIndex {
    pub fn new(k: i64, l: i64) -> Self {
        Self { k, l }
    }

    /// Representative with `k, l >= 0`; every mode integral is even in both.
    pub fn canonical(self) -> Self {
        Self {
            k: self.k.abs(),
            l: self.l.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignVerdict {
    Positive,
    Negative,
    Indeterminate,
}

impl SignVerdict {
    pub fn of(value: f64, err: f64) -> Self {
        if value.abs() > SIGN_MARGIN * err {
            if value > 0.0 {
                Self::Positive
            } else {
                Self::Negative
            }
        } else {
            Self::Indeterminate
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Positive => "positive",
            Self::Negative => "negative",
            Self::Indeterminate => "indeterminate",
        }
    }
}

/// Stable pieces of the kernels at `(phi, eta)`.
struct KernelPoint {
    /// `mu(phi) - cos(eta)`
    d: f64,
    /// `1 - cos(phi)`
    one_minus_cos_phi: f64,
    /// `1 - cos(eta)`
    one_minus_cos_eta: f64,
}

impl KernelPoint {
    fn new(xi: f64, phi: f64, eta: f64) -> Self {
        let sp = (0.5 * phi).sin();
        let se = (0.5 * eta).sin();
        let one_minus_cos_phi = 2.0 * sp * sp;
        let one_minus_cos_eta = 2.0 * se * se;
        Self {
            d: (1.0 / (xi * xi) - 1.0) * one_minus_cos_phi + one_minus_cos_eta,
            one_minus_cos_phi,
            one_minus_cos_eta,
        }
    }
}

/// Integrands of the mode integrals, without the Fourier factors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kernel {
    Single,
    XiDerivative,
    NumericalRange,
}

impl Kernel {
    fn eval(self, xi: f64, phi: f64, eta: f64) -> f64 {
        let p = KernelPoint::new(xi, phi, eta);
        match self {
            Kernel::Single => 1.0 / p.d.sqrt(),
            Kernel::XiDerivative => p.one_minus_cos_phi / (xi * xi * xi * p.d * p.d.sqrt()),
            Kernel::NumericalRange => {
                // 1 - c - (1 - xi^2 - c) cos(phi) - xi^2 cos(eta) with c = sqrt(1 - xi^2),
                // regrouped so that both terms vanish at the origin
                let c = (1.0 - xi * xi).sqrt();
                let num = (1.0 - xi * xi - c) * p.one_minus_cos_phi + xi * xi * p.one_minus_cos_eta;
                num / (xi * xi * p.d * p.d.sqrt())
            }
        }
    }
}

/// Width in `eta` of the near-singular peak of the kernels on the line `phi`.
fn peak_width(xi: f64, phi: f64) -> f64 {
    (1.0 / (xi * xi) - 1.0).sqrt() * phi.abs()
}

/// Imaginary parts of the mode integrals vanish by evenness; a residue larger
/// than the error estimate points at a quadrature fault.
fn real_part(r: QuadResult<Complex64>, spec: &QuadratureSpec) -> QuadResult<f64> {
    let healthy = r.value.im.abs() <= spec.abs_tol + r.err_estimate;
    QuadResult {
        value: r.value.re,
        err_estimate: r.err_estimate,
        evaluations: r.evaluations,
        converged: r.converged && healthy,
    }
}

/// Full-domain complex evaluation of several kernels against `e^{-ik phi} e^{-il eta}`.
fn full_mode_integrals(
    shape: &TorusShape,
    k: i64,
    l: i64,
    kernels: &[Kernel],
    spec: &QuadratureSpec,
) -> Result<Vec<QuadResult<f64>>> {
    check_xi(shape)?;
    spec.validate()?;
    let xi = shape.xi();
    let n = kernels.len();
    let outer = [
        GradedInterval {
            start: 0.0,
            end: -PI,
            power: spec.grading_exponent,
        },
        GradedInterval {
            start: 0.0,
            end: PI,
            power: spec.grading_exponent,
        },
    ];
    let (kf, lf) = (k as f64, l as f64);
    // real parts first and active; imaginary parts ride along for the health check
    let res = iterated_with(
        |phi, eta, out| {
            let (s, c) = (kf * phi + lf * eta).sin_cos();
            for (j, kernel) in kernels.iter().enumerate() {
                let v = kernel.eval(xi, phi, eta);
                out[j] = v * c;
                out[n + j] = -v * s;
            }
        },
        |phi| geometric_breaks(-PI, PI, 0.0, peak_width(xi, phi)),
        |_, vals, errs, out, out_err| {
            out.copy_from_slice(vals);
            out_err.copy_from_slice(errs);
        },
        complex_layout(n),
        &outer,
        spec,
    );
    Ok((0..n)
        .map(|j| {
            let value = Complex64::new(res.values[j], res.values[n + j]);
            let err_estimate = res.errors[j].hypot(res.errors[n + j]);
            real_part(
                QuadResult {
                    value,
                    err_estimate,
                    evaluations: res.evaluations,
                    converged: res.converged,
                },
                spec,
            )
        })
        .collect())
}

fn complex_layout(n: usize) -> Layout {
    Layout {
        inner_dim: 2 * n,
        inner_active: n,
        outer_dim: 2 * n,
        outer_active: n,
    }
}

/// `s_k(eta)`; logarithmically singular at `eta = 0`, which is rejected.
pub fn s_k_eta(shape: &TorusShape, k: i64, eta: f64, spec: &QuadratureSpec) -> Result<QuadResult<f64>> {
    check_xi(shape)?;
    let e = reduce_angle(eta);
    let dist = e.min(2.0 * PI - e);
    if dist < 1e-13 {
        return Err(Error::Domain(format!("s_k(eta) is singular at eta = {eta}")));
    }
    let xi = shape.xi();
    let kf = k as f64;
    let r = integrate_periodic(
        |phi| {
            let d = KernelPoint::new(xi, phi, e).d;
            Complex64::from_polar(1.0 / d.sqrt(), -kf * phi)
        },
        spec,
    );
    Ok(real_part(r, spec))
}

/// `s_{k,l}(xi)`.
pub fn s_kl(shape: &TorusShape, k: i64, l: i64, spec: &QuadratureSpec) -> Result<QuadResult<f64>> {
    Ok(full_mode_integrals(shape, k, l, &[Kernel::Single], spec)?.remove(0))
}

/// `d s_{k,l} / d xi`, differentiated under the integral sign.
pub fn ds_kl(shape: &TorusShape, k: i64, l: i64, spec: &QuadratureSpec) -> Result<QuadResult<f64>> {
    Ok(full_mode_integrals(shape, k, l, &[Kernel::XiDerivative], spec)?.remove(0))
}

/// Fourier coefficient `(1/2pi) int e^{-im eta} / psi(eta) d eta`.
pub fn c_m(shape: &TorusShape, m: i64) -> f64 {
    let beta = geometric_ratio(shape);
    beta.powi(m.unsigned_abs() as i32) / shape.cos_alpha()
}

/// `beta = (1 - sqrt(1 - xi^2)) / xi`, the decay ratio of `c_m`.
pub fn geometric_ratio(shape: &TorusShape) -> f64 {
    let xi = shape.xi();
    // (1 - c) / xi rewritten as xi / (1 + c)
    xi / (1.0 + shape.cos_alpha())
}

/// `I_{k,l}` assembled from `s_{k,l}` and `s'_{k,l}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralParts {
    pub s: QuadResult<f64>,
    pub ds: QuadResult<f64>,
    pub i: QuadResult<f64>,
}

pub fn i_kl_spectral_parts(
    shape: &TorusShape,
    k: i64,
    l: i64,
    spec: &QuadratureSpec,
) -> Result<SpectralParts> {
    let mut r = full_mode_integrals(shape, k, l, &[Kernel::Single, Kernel::XiDerivative], spec)?;
    let ds = r.remove(1);
    let s = r.remove(0);
    let w = shape.xi() * shape.cos_alpha();
    let i = QuadResult {
        value: s.value - w * ds.value,
        err_estimate: s.err_estimate + w * ds.err_estimate,
        evaluations: s.evaluations,
        converged: s.converged && ds.converged,
    };
    Ok(SpectralParts { s, ds, i })
}

pub fn i_kl_spectral(shape: &TorusShape, k: i64, l: i64, spec: &QuadratureSpec) -> Result<QuadResult<f64>> {
    Ok(i_kl_spectral_parts(shape, k, l, spec)?.i)
}

/// `I_{k,l}` as a single double integral of the combined integrand over
/// `[-pi, pi]^2`.
pub fn i_kl_direct(shape: &TorusShape, k: i64, l: i64, spec: &QuadratureSpec) -> Result<QuadResult<f64>> {
    Ok(full_mode_integrals(shape, k, l, &[Kernel::NumericalRange], spec)?.remove(0))
}

/// Distance from the origin to the boundary of `[-pi, pi]^2` along direction `theta`.
pub fn polar_radius(theta: f64) -> f64 {
    PI / theta.cos().abs().max(theta.sin().abs())
}

/// Polar amplitude `h(r, theta)`: the combined integrand times `|r|` at
/// `(phi, eta) = (r cos theta, r sin theta)`. Smooth, even in `r` and `theta`,
/// and pi-periodic in `theta`.
pub fn h_eval(shape: &TorusShape, r: f64, theta: f64) -> f64 {
    let xi = shape.xi();
    let c = shape.cos_alpha();
    let (st, ct) = theta.sin_cos();
    if r == 0.0 {
        let num = xi * (1.0 - xi * xi - c) * ct * ct + xi * xi * xi * st * st;
        let den = ((1.0 - xi * xi) * ct * ct + xi * xi * st * st).powf(1.5);
        return SQRT_2 * num / den;
    }
    // (1 - cos x) / r^2 = (cos^2 theta / 2) sinc^2(x / 2) with x = r cos theta
    let sinc = |x: f64| if x == 0.0 { 1.0 } else { x.sin() / x };
    let a = 0.5 * ct * ct * sinc(0.5 * r * ct).powi(2);
    let b = 0.5 * st * st * sinc(0.5 * r * st).powi(2);
    let num = (1.0 - xi * xi - c) * a + xi * xi * b;
    let den = (1.0 / (xi * xi) - 1.0) * a + b;
    num / (xi * xi * den * den.sqrt())
}

/// `I_{k,l} = 1/2 int_{-pi}^{pi} int_{-R(theta)}^{R(theta)} h e^{-i r (k cos theta + l sin theta)} dr dtheta`.
pub fn i_kl_polar(shape: &TorusShape, k: i64, l: i64, spec: &QuadratureSpec) -> Result<QuadResult<f64>> {
    check_xi(shape)?;
    spec.validate()?;
    let (kf, lf) = (k as f64, l as f64);
    // R(theta) has corners on the diagonals; one smooth sector between each pair
    let sectors: Vec<GradedInterval> = (0..4)
        .map(|j| {
            let a = -3.0 * FRAC_PI_4 + FRAC_PI_2 * j as f64;
            GradedInterval::plain(a, a + FRAC_PI_2)
        })
        .collect();
    // r = R(theta) rho with rho in [-1, 1]
    let res = iterated_with(
        |theta, rho, out| {
            let big_r = polar_radius(theta);
            let r = big_r * rho;
            let omega = kf * theta.cos() + lf * theta.sin();
            let amp = 0.5 * big_r * h_eval(shape, r, theta);
            let (s, c) = (r * omega).sin_cos();
            out[0] = amp * c;
            out[1] = -amp * s;
        },
        |_| vec![-1.0, 1.0],
        |_, vals, errs, out, out_err| {
            out.copy_from_slice(vals);
            out_err.copy_from_slice(errs);
        },
        complex_layout(1),
        &sectors,
        spec,
    );
    let value = Complex64::new(res.values[0], res.values[1]);
    let err_estimate = res.errors[0].hypot(res.errors[1]);
    Ok(real_part(
        QuadResult {
            value,
            err_estimate,
            evaluations: res.evaluations,
            converged: res.converged,
        },
        spec,
    ))
}

/// Leading stationary-phase term of `I_{k,0}` (`k >= 1`), independent of `xi`.
pub fn lead_i_k0(k: i64) -> Result<f64> {
    if k < 1 {
        return Err(Error::Domain(format!("lead_I_k0 needs k >= 1, got {k}")));
    }
    Ok(2.0 * SQRT_2 * PI / k as f64)
}

/// Leading stationary-phase term of `I_{k,l}` for fixed `k` and large `l` (`l >= 1`).
pub fn lead_i_l(shape: &TorusShape, l: i64) -> Result<f64> {
    if l < 1 {
        return Err(Error::Domain(format!("lead_I_l needs l >= 1, got {l}")));
    }
    Ok(-2.0 * SQRT_2 * PI * negative_axis_constant(shape) / l as f64)
}

/// `xi (1 - sqrt(1 - xi^2)) / (1 - xi^2)`, positive on `0 < xi < 1`.
pub fn negative_axis_constant(shape: &TorusShape) -> f64 {
    let xi = shape.xi();
    xi * geometric_ratio(shape) * xi / (1.0 - xi * xi)
}

/// Asymptotic prediction attached to a record: the `l = 0` law along the
/// toroidal axis, the fixed-`k` law otherwise, nothing at the origin.
pub fn lead_prediction(shape: &TorusShape, k: i64, l: i64) -> Option<f64> {
    let (k, l) = (k.abs(), l.abs());
    if l == 0 {
        lead_i_k0(k).ok()
    } else {
        lead_i_l(shape, l).ok()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RangeMethod {
    Spectral,
    Direct,
    Polar,
    All,
}

impl RangeMethod {
    pub fn wants_direct(self) -> bool {
        matches!(self, Self::Direct | Self::All)
    }

    pub fn wants_polar(self) -> bool {
        matches!(self, Self::Polar | Self::All)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Spectral => "spectral",
            Self::Direct => "direct",
            Self::Polar => "polar",
            Self::All => "all",
        }
    }
}

impl std::str::FromStr for RangeMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "spectral" => Ok(Self::Spectral),
            "direct" => Ok(Self::Direct),
            "polar" => Ok(Self::Polar),
            "all" => Ok(Self::All),
            other => Err(format!("unknown method '{other}' (spectral|direct|polar|all)")),
        }
    }
}

/// `I_{k,l}` and its ingredients at one `(xi, k, l)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NumericalRangeRecord {
    pub xi: f64,
    pub k: i64,
    pub l: i64,
    pub s_kl: f64,
    pub ds_kl: f64,
    pub i_spectral: f64,
    pub i_direct: Option<f64>,
    pub i_polar: Option<f64>,
    pub lead_pred: Option<f64>,
    pub sign_verdict: SignVerdict,
    /// Error estimate of `i_spectral`.
    pub err_estimate: f64,
    pub err_direct: Option<f64>,
    pub err_polar: Option<f64>,
    pub converged: bool,
}

impl NumericalRangeRecord {
    /// Largest pairwise gap between the available evaluations, and the sum of
    /// the two error estimates for that pair.
    pub fn max_disagreement(&self) -> (f64, f64) {
        let mut vals = vec![(self.i_spectral, self.err_estimate)];
        if let (Some(v), Some(e)) = (self.i_direct, self.err_direct) {
            vals.push((v, e));
        }
        if let (Some(v), Some(e)) = (self.i_polar, self.err_polar) {
            vals.push((v, e));
        }
        let mut worst = (0.0, 0.0);
        for a in 0..vals.len() {
            for b in a + 1..vals.len() {
                let gap = (vals[a].0 - vals[b].0).abs();
                if gap >= worst.0 {
                    worst = (gap, vals[a].1 + vals[b].1);
                }
            }
        }
        worst
    }
}

pub fn numerical_range_record(
    shape: &TorusShape,
    k: i64,
    l: i64,
    method: RangeMethod,
    spec: &QuadratureSpec,
) -> Result<NumericalRangeRecord> {
    let parts = i_kl_spectral_parts(shape, k, l, spec)?;
    let direct = if method.wants_direct() {
        Some(i_kl_direct(shape, k, l, spec)?)
    } else {
        None
    };
    let polar = if method.wants_polar() {
        Some(i_kl_polar(shape, k, l, spec)?)
    } else {
        None
    };
    let converged = parts.i.converged
        && direct.is_none_or(|d| d.converged)
        && polar.is_none_or(|p| p.converged);
    let sign_verdict = if converged {
        SignVerdict::of(parts.i.value, parts.i.err_estimate)
    } else {
        SignVerdict::Indeterminate
    };
    Ok(NumericalRangeRecord {
        xi: shape.xi(),
        k,
        l,
        s_kl: parts.s.value,
        ds_kl: parts.ds.value,
        i_spectral: parts.i.value,
        i_direct: direct.map(|d| d.value),
        i_polar: polar.map(|p| p.value),
        lead_pred: lead_prediction(shape, k, l),
        sign_verdict,
        err_estimate: parts.i.err_estimate,
        err_direct: direct.map(|d| d.err_estimate),
        err_polar: polar.map(|p| p.err_estimate),
        converged,
    })
}

/// `s_{k,l}` and `s'_{k,l}` for a set of `k >= 0` and all `0 <= l <= l_max`,
/// from one folded pass over `[0, pi]^2` (the integrands are even in both
/// angles). Lookups accept negative indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub xi: f64,
    pub ks: Vec<u32>,
    pub l_max: usize,
    /// Row-major `[position of k in ks][l]`.
    pub s: Vec<f64>,
    pub ds: Vec<f64>,
    pub s_err: Vec<f64>,
    pub ds_err: Vec<f64>,
    pub converged: bool,
}

impl ModeTable {
    pub fn contains(&self, k: i64, l: i64) -> bool {
        l.unsigned_abs() as usize <= self.l_max && self.ks.iter().any(|&q| q as u64 == k.unsigned_abs())
    }

    fn idx(&self, k: i64, l: i64) -> usize {
        let l = l.unsigned_abs() as usize;
        let row = self
            .ks
            .iter()
            .position(|&q| q as u64 == k.unsigned_abs())
            .unwrap_or_else(|| panic!("k = {k} not tabulated"));
        assert!(l <= self.l_max, "l = {l} beyond table");
        row * (self.l_max + 1) + l
    }

    pub fn s(&self, k: i64, l: i64) -> f64 {
        self.s[self.idx(k, l)]
    }

    pub fn ds(&self, k: i64, l: i64) -> f64 {
        self.ds[self.idx(k, l)]
    }

    pub fn s_err(&self, k: i64, l: i64) -> f64 {
        self.s_err[self.idx(k, l)]
    }

    pub fn ds_err(&self, k: i64, l: i64) -> f64 {
        self.ds_err[self.idx(k, l)]
    }

    /// First `(k, l)` with `l <= l_trunc` whose integrals miss `spec`, or
    /// `None`. The rounding floors of the table scale with `int |F|`, so the
    /// absolute tolerance is raised to `ROUNDOFF` times the size of `s_{0,0}`.
    pub fn first_unresolved(&self, k: i64, l_trunc: usize, spec: &QuadratureSpec) -> Option<(i64, i64)> {
        let floor = crate::quadrature::gauss_kronrod::ROUNDOFF * 4.0 * self.s[0].abs();
        let row = self.idx(k, 0) / (self.l_max + 1);
        let base = row * (self.l_max + 1);
        (0..=l_trunc.min(self.l_max)).find_map(|l| {
            let t = base + l;
            // written so that a NaN error estimate counts as unresolved
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            let bad = |v: f64, e: f64| !(e <= spec.tolerance_for(v).max(floor)) || !v.is_finite();
            (bad(self.s[t], self.s_err[t]) || bad(self.ds[t], self.ds_err[t])).then_some((k, l as i64))
        })
    }

    /// `I_{k,l}` from the tabulated parts, with its error estimate.
    pub fn numerical_range(&self, k: i64, l: i64) -> (f64, f64) {
        let w = self.xi * (1.0 - self.xi * self.xi).sqrt();
        (
            self.s(k, l) - w * self.ds(k, l),
            self.s_err(k, l) + w * self.ds_err(k, l),
        )
    }
}

/// Table for `k = 0..=k_max`.
pub fn mode_table(
    shape: &TorusShape,
    k_max: usize,
    l_max: usize,
    spec: &QuadratureSpec,
) -> Result<ModeTable> {
    let ks: Vec<u32> = (0..=k_max as u32).collect();
    mode_table_for(shape, &ks, l_max, spec)
}

pub fn mode_table_for(
    shape: &TorusShape,
    ks: &[u32],
    l_max: usize,
    spec: &QuadratureSpec,
) -> Result<ModeTable> {
    check_xi(shape)?;
    spec.validate()?;
    if ks.is_empty() {
        return Err(Error::Domain("mode table needs at least one k".into()));
    }
    let mut ks = ks.to_vec();
    ks.sort_unstable();
    ks.dedup();
    let xi = shape.xi();
    let nl = l_max + 1;
    let inner_dim = 2 * nl;
    let outer_dim = ks.len() * inner_dim;
    let res = iterated(
        |phi, eta, out| {
            let p = KernelPoint::new(xi, phi, eta);
            let single = 1.0 / p.d.sqrt();
            let deriv = p.one_minus_cos_phi * single / (xi * xi * xi * p.d);
            // cos(l eta) by the Chebyshev recurrence
            let two_cos = 2.0 * eta.cos();
            let (mut prev, mut cur) = (eta.cos(), 1.0);
            for l in 0..nl {
                out[l] = single * cur;
                out[nl + l] = deriv * cur;
                let next = two_cos * cur - prev;
                prev = cur;
                cur = next;
            }
        },
        inner_dim,
        |phi| geometric_breaks(0.0, PI, 0.0, peak_width(xi, phi)),
        |phi, vals, errs, out, out_err| {
            for (row, &k) in ks.iter().enumerate() {
                let w = 4.0 * (k as f64 * phi).cos();
                let base = row * inner_dim;
                for j in 0..inner_dim {
                    out[base + j] = w * vals[j];
                    out_err[base + j] = w.abs() * errs[j];
                }
            }
        },
        outer_dim,
        &[GradedInterval {
            start: 0.0,
            end: PI,
            power: spec.grading_exponent,
        }],
        spec,
    );
    let n = ks.len() * nl;
    let mut table = ModeTable {
        xi,
        ks: ks.clone(),
        l_max,
        s: vec![0.0; n],
        ds: vec![0.0; n],
        s_err: vec![0.0; n],
        ds_err: vec![0.0; n],
        converged: res.converged,
    };
    for row in 0..ks.len() {
        for l in 0..nl {
            let base = row * inner_dim;
            let t = row * nl + l;
            table.s[t] = res.values[base + l];
            table.ds[t] = res.values[base + nl + l];
            table.s_err[t] = res.errors[base + l];
            table.ds_err[t] = res.errors[base + nl + l];
        }
    }
    Ok(table)
}

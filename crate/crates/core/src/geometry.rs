//! Toroidal coordinates on the torus `xi = const` and the surface kernels of the
//! single layer and Neumann-Poincare operators written in those coordinates.
//!
//! Every distance-like quantity is routed through
//! `mu(phi - phi') - cos(eta - eta')`, evaluated in the cancellation-free form
//! `2 (1/xi^2 - 1) sin^2(dphi/2) + 2 sin^2(deta/2)`.

use std::f64::consts::{PI, SQRT_2, TAU};

use crate::error::{Error, Result};

/// Separation below which two surface points are treated as coincident.
pub const COINCIDENCE_FLOOR: f64 = 1e-13;

/// Reduce an angle to `[0, 2pi)`.
pub fn reduce_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Torus fixed by the toroidal parameter `xi` and the poloidal-axis radius `R0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TorusShape {
    xi: f64,
    r0: f64,
    a: f64,
}

impl TorusShape {
    pub fn new(xi: f64, big_r0: f64) -> Result<Self> {
        if !(xi > 0.0 && xi < 1.0) {
            return Err(Error::InvalidShape(format!("xi = {xi} outside (0, 1)")));
        }
        if !(big_r0 > 0.0 && big_r0.is_finite()) {
            return Err(Error::InvalidShape(format!("R0 = {big_r0} must be positive")));
        }
        let c = (1.0 - xi * xi).sqrt();
        Ok(Self {
            xi,
            r0: big_r0 / c,
            a: big_r0 * xi / c,
        })
    }

    /// Unit poloidal-axis radius.
    pub fn unit(xi: f64) -> Result<Self> {
        Self::new(xi, 1.0)
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Major radius of the tube centre line.
    pub fn major_radius(&self) -> f64 {
        self.r0
    }

    /// Minor (tube) radius.
    pub fn minor_radius(&self) -> f64 {
        self.a
    }

    /// `R0 = sqrt(r0^2 - a^2)`, recomputed from the stored radii.
    pub fn big_r0(&self) -> f64 {
        ((self.r0 - self.a) * (self.r0 + self.a)).sqrt()
    }

    /// `sqrt(1 - xi^2)`.
    pub fn cos_alpha(&self) -> f64 {
        (1.0 - self.xi * self.xi).sqrt()
    }

    pub fn psi(&self, eta: f64) -> f64 {
        1.0 - self.xi * eta.cos()
    }

    pub fn mu(&self, dphi: f64) -> f64 {
        let inv = 1.0 / (self.xi * self.xi);
        inv + (1.0 - inv) * dphi.cos()
    }

    /// `mu(dphi) - cos(deta)` without cancellation.
    pub fn separation(&self, deta: f64, dphi: f64) -> f64 {
        let sp = (0.5 * dphi).sin();
        let se = (0.5 * deta).sin();
        2.0 * (1.0 / (self.xi * self.xi) - 1.0) * sp * sp + 2.0 * se * se
    }

    pub fn to_cartesian(&self, p: SurfacePoint) -> [f64; 3] {
        let big_r0 = self.big_r0();
        let psi = self.psi(p.eta);
        let rho = big_r0 * self.cos_alpha() / psi;
        [
            rho * p.phi.cos(),
            rho * p.phi.sin(),
            -big_r0 * self.xi * p.eta.sin() / psi,
        ]
    }

    /// `(h_xi, h_eta, h_phi)`.
    pub fn scale_factors(&self, p: SurfacePoint) -> [f64; 3] {
        let big_r0 = self.big_r0();
        let psi = self.psi(p.eta);
        let c = self.cos_alpha();
        [big_r0 / (c * psi), big_r0 * self.xi / psi, big_r0 * c / psi]
    }

    /// Surface element `h_eta h_phi`, so that `dsigma = jacobian * deta dphi`.
    pub fn surface_jacobian(&self, eta: f64) -> f64 {
        let psi = self.psi(eta);
        let big_r0 = self.big_r0();
        big_r0 * big_r0 * self.xi * self.cos_alpha() / (psi * psi)
    }

    /// Closed-form surface area `4 pi^2 r0 a`.
    pub fn surface_area(&self) -> f64 {
        4.0 * PI * PI * self.r0 * self.a
    }

    pub fn outward_normal(&self, p: SurfacePoint) -> [f64; 3] {
        let psi = self.psi(p.eta);
        let radial = (p.eta.cos() - self.xi) / psi;
        [
            radial * p.phi.cos(),
            radial * p.phi.sin(),
            -self.cos_alpha() * p.eta.sin() / psi,
        ]
    }

    fn checked_separation(&self, eta: f64, eta_p: f64, dphi: f64) -> Result<f64> {
        let d = self.separation(eta - eta_p, dphi);
        if d < COINCIDENCE_FLOOR {
            return Err(Error::CoincidentPoints { eta, eta_p, dphi });
        }
        Ok(d)
    }

    /// Laplace fundamental solution `1 / (4 pi |x - y|)` in factored toroidal form.
    pub fn fundamental_solution(&self, p: SurfacePoint, q: SurfacePoint) -> Result<f64> {
        let d = self.checked_separation(p.eta, q.eta, p.phi - q.phi)?;
        let num = (self.psi(p.eta) * self.psi(q.eta)).sqrt();
        Ok(num / (4.0 * PI * SQRT_2 * self.big_r0() * self.xi * d.sqrt()))
    }

    /// `(x - y) . nu_x` in the two-term toroidal form.
    pub fn normal_projection(&self, p: SurfacePoint, q: SurfacePoint) -> f64 {
        let big_r0 = self.big_r0();
        let c = self.cos_alpha();
        let d = self.separation(p.eta - q.eta, p.phi - q.phi);
        let one_minus_cos = 2.0 * (0.5 * (p.phi - q.phi)).sin().powi(2);
        let psi_x = self.psi(p.eta);
        let psi_y = self.psi(q.eta);
        big_r0 * self.xi * c * d / (psi_x * psi_y) - big_r0 * c * one_minus_cos / (self.xi * psi_y)
    }

    /// Single-layer kernel `s(eta, eta'; dphi)` with the surface element folded in.
    pub fn kernel_single(&self, eta: f64, eta_p: f64, dphi: f64) -> Result<f64> {
        let d = self.checked_separation(eta, eta_p, dphi)?;
        let psi = self.psi(eta);
        let psi_p = self.psi(eta_p);
        Ok(self.big_r0() * self.cos_alpha() * psi.sqrt()
            / (4.0 * PI * SQRT_2 * psi_p.powf(1.5) * d.sqrt()))
    }

    /// Neumann-Poincare kernel `k(eta, eta'; dphi)` with the surface element folded in.
    pub fn kernel_np(&self, eta: f64, eta_p: f64, dphi: f64) -> Result<f64> {
        let d = self.checked_separation(eta, eta_p, dphi)?;
        let xi = self.xi;
        let pref = (1.0 - xi * xi) / (8.0 * PI * SQRT_2 * xi);
        let psi = self.psi(eta);
        let psi_p = self.psi(eta_p);
        let one_minus_cos = 2.0 * (0.5 * dphi).sin().powi(2);
        let first = psi.sqrt() / (psi_p.powf(1.5) * d.sqrt());
        let second = (psi / psi_p).powf(1.5) * one_minus_cos / (xi * xi * d.powf(1.5));
        Ok(pref * (first - second))
    }
}

/// Point `(eta, phi)` on the torus, both angles reduced to `[0, 2pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub eta: f64,
    pub phi: f64,
}

impl SurfacePoint {
    pub fn new(eta: f64, phi: f64) -> Self {
        Self {
            eta: reduce_angle(eta),
            phi: reduce_angle(phi),
        }
    }
}

pub(crate) fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn sub3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Worst relative deviations of the factored fundamental solution and the
/// normal-projection identity from their Cartesian evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct IdentityDeviation {
    pub fundamental: f64,
    pub normal_projection: f64,
    pub np_kernel: f64,
    pub normal_unit: f64,
    pub samples: usize,
}

/// Compare the toroidal closed forms against brute Cartesian evaluation at the
/// supplied point pairs.
pub fn identity_deviation(
    shape: &TorusShape,
    pairs: impl IntoIterator<Item = (SurfacePoint, SurfacePoint)>,
) -> IdentityDeviation {
    let mut dev = IdentityDeviation::default();
    for (p, q) in pairs {
        let x = shape.to_cartesian(p);
        let y = shape.to_cartesian(q);
        let diff = sub3(x, y);
        let dist = norm3(diff);
        let nu = shape.outward_normal(p);
        dev.normal_unit = dev.normal_unit.max((norm3(nu) - 1.0).abs());

        let Ok(gamma) = shape.fundamental_solution(p, q) else {
            continue;
        };
        dev.samples += 1;
        let cart_gamma = 1.0 / (4.0 * PI * dist);
        dev.fundamental = dev.fundamental.max(rel_dev(gamma, cart_gamma));

        let proj = dot3(diff, nu);
        let toroidal_proj = shape.normal_projection(p, q);
        // the projection vanishes to second order as y -> x; compare on the distance scale
        let scale = proj.abs().max(dist * dist / shape.major_radius());
        dev.normal_projection = dev
            .normal_projection
            .max((proj - toroidal_proj).abs() / scale);

        if let Ok(k) = shape.kernel_np(p.eta, q.eta, p.phi - q.phi) {
            let cart = proj / (4.0 * PI * dist.powi(3)) * shape.surface_jacobian(q.eta);
            let scale = cart.abs().max(
                dist * dist / shape.major_radius() / (4.0 * PI * dist.powi(3))
                    * shape.surface_jacobian(q.eta),
            );
            dev.np_kernel = dev.np_kernel.max((k - cart).abs() / scale);
        }
    }
    dev
}

fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

//! Iterated double integrals: an adaptive inner integral for every node of an
//! adaptive outer integral laid over algebraically graded intervals.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::gauss_kronrod::{self, VecIntegral};
use super::{QuadResult, QuadratureSpec};

/// Outer interval mapped by `x = start + (end - start) u^power`, `u` in `[0, 1]`,
/// so the nodes cluster at `start`. `end < start` is allowed; the measure is
/// always taken positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradedInterval {
    pub start: f64,
    pub end: f64,
    pub power: f64,
}

impl GradedInterval {
    pub fn plain(start: f64, end: f64) -> Self {
        Self {
            start,
            end,
            power: 1.0,
        }
    }

    fn map(&self, u: f64) -> (f64, f64) {
        let len = self.end - self.start;
        let x = self.start + len * u.powf(self.power);
        let jac = (len * self.power * u.powf(self.power - 1.0)).abs();
        (x, jac)
    }
}

#[derive(Clone, Debug)]
pub struct IteratedResult {
    pub values: Vec<f64>,
    /// Outer error estimate plus the outer integral of the inner estimates.
    pub errors: Vec<f64>,
    /// Rounding floors, outer plus the outer integral of the inner floors.
    pub floors: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

impl IteratedResult {
    pub fn worst_ratio(&self, spec: &QuadratureSpec) -> f64 {
        self.values
            .iter()
            .zip(&self.errors)
            .map(|(v, e)| e / spec.tolerance_for(*v))
            .fold(0.0, f64::max)
    }
}

/// Breakpoints for an inner integral over `[lo, hi]` whose integrand has a
/// peak of width about `scale` at `centre`: `lo`, `hi`, `centre` and the
/// geometric ladder `centre +/- scale 4^j`, whatever falls strictly inside.
/// A fixed mesh would step over the peak once `scale` is small and report a
/// wrong value as converged.
pub fn geometric_breaks(lo: f64, hi: f64, centre: f64, scale: f64) -> Vec<f64> {
    let mut b = vec![lo, hi];
    if centre > lo && centre < hi {
        b.push(centre);
    }
    if scale > 0.0 {
        let mut d = scale;
        while d < hi - lo {
            for y in [centre - d, centre + d] {
                if y > lo && y < hi {
                    b.push(y);
                }
            }
            d *= 4.0;
        }
    }
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Iterated integration.
///
/// For each outer node `x`, `inner(x, y, out)` is integrated over `y` across
/// `inner_breaks(x)`, producing `inner_dim` values and error estimates. Then
/// `combine(x, values, errors, out, out_err)` turns those into the
/// `outer_dim` components of the outer integrand together with a bound on
/// their inner-quadrature error. If the outer integral converges but the
/// composed error misses tolerance, the inner tolerance is tightened and the
/// whole integral redone (at most twice).
pub fn iterated<I, B, C>(
    inner: I,
    inner_dim: usize,
    inner_breaks: B,
    combine: C,
    outer_dim: usize,
    outer: &[GradedInterval],
    spec: &QuadratureSpec,
) -> IteratedResult
where
    I: Fn(f64, f64, &mut [f64]),
    B: Fn(f64) -> Vec<f64>,
    C: Fn(f64, &[f64], &[f64], &mut [f64], &mut [f64]),
{
    let layout = Layout {
        inner_dim,
        inner_active: inner_dim,
        outer_dim,
        outer_active: outer_dim,
    };
    iterated_with(inner, inner_breaks, combine, layout, outer, spec)
}

/// Component counts of an iterated integral. Only the leading `*_active`
/// components drive refinement and count toward convergence; the rest are
/// integrated on the same meshes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Layout {
    pub inner_dim: usize,
    pub inner_active: usize,
    pub outer_dim: usize,
    pub outer_active: usize,
}

/// [`iterated`] with passive components.
pub fn iterated_with<I, B, C>(
    inner: I,
    inner_breaks: B,
    combine: C,
    layout: Layout,
    outer: &[GradedInterval],
    spec: &QuadratureSpec,
) -> IteratedResult
where
    I: Fn(f64, f64, &mut [f64]),
    B: Fn(f64) -> Vec<f64>,
    C: Fn(f64, &[f64], &[f64], &mut [f64], &mut [f64]),
{
    assert!(layout.inner_active <= layout.inner_dim && layout.outer_active <= layout.outer_dim);
    let outer_dim = layout.outer_dim;
    let mut factor = 0.05;
    let mut evaluations = 0;
    loop {
        let (res, evals) = iterated_once(&inner, &inner_breaks, &combine, layout, outer, spec, factor);
        evaluations += evals;
        let mut values = Vec::with_capacity(outer_dim);
        let mut errors = Vec::with_capacity(outer_dim);
        let mut floors = Vec::with_capacity(outer_dim);
        for c in 0..outer_dim {
            values.push(res.values[c]);
            errors.push(res.errors[c] + res.values[outer_dim + c].abs());
            floors.push(res.floors[c] + res.values[2 * outer_dim + c].abs());
        }
        let composed_ok =
            (0..layout.outer_active).all(|c| errors[c] <= spec.tolerance_for(values[c]).max(floors[c]));
        if composed_ok || !res.converged || factor < 1e-4 {
            return IteratedResult {
                values,
                errors,
                floors,
                evaluations,
                converged: res.converged && composed_ok,
            };
        }
        factor *= 1e-2;
    }
}

fn iterated_once<I, B, C>(
    inner: &I,
    inner_breaks: &B,
    combine: &C,
    layout: Layout,
    outer: &[GradedInterval],
    spec: &QuadratureSpec,
    factor: f64,
) -> (VecIntegral, usize)
where
    I: Fn(f64, f64, &mut [f64]),
    B: Fn(f64) -> Vec<f64>,
    C: Fn(f64, &[f64], &[f64], &mut [f64], &mut [f64]),
{
    let Layout {
        inner_dim,
        inner_active,
        outer_dim,
        outer_active,
    } = layout;
    let inner_ctl = spec.adaptive(factor);
    let mut discard = vec![0.0; outer_dim];
    let mut inner_evals = 0usize;
    let mut inner_ok = true;
    let breaks: Vec<f64> = (0..=outer.len()).map(|j| j as f64).collect();
    let res = gauss_kronrod::integrate(
        |t, out| {
            let j = (t.floor() as usize).min(outer.len() - 1);
            let (x, jac) = outer[j].map(t - j as f64);
            let breaks = inner_breaks(x);
            let r = gauss_kronrod::integrate(
                |y, o| inner(x, y, o),
                inner_dim,
                inner_active,
                &breaks,
                inner_ctl,
            );
            inner_evals += r.evaluations;
            inner_ok &= r.converged;
            let (vals, rest) = out.split_at_mut(outer_dim);
            let (errs, floors) = rest.split_at_mut(outer_dim);
            combine(x, &r.values, &r.errors, vals, errs);
            // combine is linear in the error slot, so it transports floors too
            combine(x, &r.values, &r.floors, &mut discard, floors);
            for v in vals.iter_mut() {
                *v *= jac;
            }
            for e in errs.iter_mut().chain(floors.iter_mut()) {
                *e = e.abs() * jac;
            }
        },
        3 * outer_dim,
        outer_active,
        &breaks,
        spec.adaptive(1.0),
    );
    let converged = res.converged && inner_ok;
    (
        VecIntegral {
            converged,
            ..res
        },
        inner_evals,
    )
}

/// Integrate a complex integrand over `[0, 2pi]^2` (outer variable first).
///
/// With a singular point `(x0, y0)` the domain is recentred to
/// `[x0 - pi, x0 + pi] x [y0 - pi, y0 + pi]`; the outer variable is graded
/// toward `x0` and the inner integral is split geometrically around `y0` at
/// the scale `|x - x0|`.
pub fn integrate_2d<F>(
    f: F,
    spec: &QuadratureSpec,
    singular_point: Option<(f64, f64)>,
) -> QuadResult<Complex64>
where
    F: Fn(f64, f64) -> Complex64,
{
    let (outer, centre) = match singular_point {
        Some((x0, y0)) => (
            vec![
                GradedInterval {
                    start: x0,
                    end: x0 - PI,
                    power: spec.grading_exponent,
                },
                GradedInterval {
                    start: x0,
                    end: x0 + PI,
                    power: spec.grading_exponent,
                },
            ],
            Some((x0, y0)),
        ),
        None => (
            vec![GradedInterval::plain(0.0, PI), GradedInterval::plain(PI, 2.0 * PI)],
            None,
        ),
    };
    let inner_breaks = |x: f64| match centre {
        Some((x0, y0)) => geometric_breaks(y0 - PI, y0 + PI, y0, (x - x0).abs()),
        None => vec![0.0, PI, 2.0 * PI],
    };
    let res = iterated(
        |x, y, out| {
            let v = f(x, y);
            out[0] = v.re;
            out[1] = v.im;
        },
        2,
        inner_breaks,
        |_, vals, errs, out, out_err| {
            out.copy_from_slice(vals);
            out_err.copy_from_slice(errs);
        },
        2,
        &outer,
        spec,
    );
    let value = Complex64::new(res.values[0], res.values[1]);
    let err_estimate = res.errors[0].hypot(res.errors[1]);
    QuadResult {
        value,
        err_estimate,
        evaluations: res.evaluations,
        converged: res.converged
            && err_estimate <= spec.tolerance_for(value.norm()).max(res.floors[0].hypot(res.floors[1])),
    }
}

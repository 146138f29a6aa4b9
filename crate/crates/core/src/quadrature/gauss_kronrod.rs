//! Globally adaptive 21-point Gauss-Kronrod integration of vector-valued
//! integrands.
//!
//! Many Fourier components of one kernel are integrated in a single pass: the
//! integrand writes all components for a node into an output slice, and the
//! subdivision is driven by whichever component is furthest from its
//! tolerance. Trailing "passive" components are integrated on the same mesh
//! but never drive refinement; they carry inner error estimates of iterated
//! schemes.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

// tabulated to 30 digits as published; the compiler rounds once
#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689,
    0.973_906_528_517_171_720_077_964_012_084,
    0.930_157_491_355_708_226_001_207_180_060,
    0.865_063_366_688_984_510_732_096_688_423,
    0.780_817_726_586_416_897_063_717_578_345,
    0.679_409_568_299_024_406_234_327_365_115,
    0.562_757_134_668_604_683_339_000_099_273,
    0.433_395_394_129_247_190_799_265_943_166,
    0.294_392_862_701_460_198_131_126_603_104,
    0.148_874_338_981_631_210_884_826_001_130,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062,
    0.032_558_162_307_964_727_478_818_972_459,
    0.054_755_896_574_351_996_031_381_300_245,
    0.075_039_674_810_919_952_767_043_140_916,
    0.093_125_454_583_697_605_535_065_465_083,
    0.109_387_158_802_297_641_899_210_590_326,
    0.123_491_976_262_065_851_077_208_369_929,
    0.134_709_217_311_473_325_928_054_001_772,
    0.142_775_938_577_060_080_797_094_273_139,
    0.147_739_104_901_338_491_374_841_515_972,
    0.149_445_554_002_916_905_664_936_468_390,
];

// 10-point Gauss weights, attached to XGK[1], XGK[3], ..., XGK[9]
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893,
    0.149_451_349_150_580_593_145_776_339_658,
    0.219_086_362_515_982_043_995_534_934_228,
    0.269_266_719_309_996_355_091_226_921_569,
    0.295_524_224_714_752_870_173_892_994_651,
];

const EPMACH: f64 = f64::EPSILON;
const UFLOW: f64 = f64::MIN_POSITIVE;

/// Twice the per-rule rounding allowance `50 eps resabs`.
pub const ROUNDOFF: f64 = 100.0 * EPMACH;

/// Tolerances and budget for one adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct AdaptiveControl {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_segments: usize,
}

#[derive(Clone, Debug)]
pub struct VecIntegral {
    pub values: Vec<f64>,
    pub errors: Vec<f64>,
    /// Rounding floor of each component, `ROUNDOFF * int |f|`; tolerances
    /// below it are unattainable and are raised to it.
    pub floors: Vec<f64>,
    pub evaluations: usize,
    pub converged: bool,
}

struct Segment {
    a: f64,
    b: f64,
    values: Vec<f64>,
    errors: Vec<f64>,
    absolutes: Vec<f64>,
    score: f64,
    splittable: bool,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.score == other.score
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.score.total_cmp(&other.score)
    }
}

/// Apply the 21-point rule on `[a, b]`. `scratch` must hold `21 * dim` values.
/// Returns values, error estimates and integrals of `|f|`.
fn rule21<F>(f: &mut F, a: f64, b: f64, dim: usize, scratch: &mut [f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>)
where
    F: FnMut(f64, &mut [f64]),
{
    let centre = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let habs = half.abs();
    // node order: centre, then +/- pairs for XGK[0..10]
    f(centre, &mut scratch[0..dim]);
    for (j, x) in XGK[..10].iter().enumerate() {
        let dx = half * x;
        let lo = (1 + 2 * j) * dim;
        let (left, right) = scratch[lo..lo + 2 * dim].split_at_mut(dim);
        f(centre - dx, left);
        f(centre + dx, right);
    }

    let mut values = vec![0.0; dim];
    let mut errors = vec![0.0; dim];
    let mut absolutes = vec![0.0; dim];
    for c in 0..dim {
        let fc = scratch[c];
        let mut resk = WGK[10] * fc;
        let mut resg = 0.0;
        let mut resabs = WGK[10] * fc.abs();
        for (j, w) in WGK[..10].iter().enumerate() {
            let lo = (1 + 2 * j) * dim;
            let f1 = scratch[lo + c];
            let f2 = scratch[lo + dim + c];
            resk += w * (f1 + f2);
            resabs += w * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                resg += WG[j / 2] * (f1 + f2);
            }
        }
        let reskh = 0.5 * resk;
        let mut resasc = WGK[10] * (fc - reskh).abs();
        for (j, w) in WGK[..10].iter().enumerate() {
            let lo = (1 + 2 * j) * dim;
            resasc += w * ((scratch[lo + c] - reskh).abs() + (scratch[lo + dim + c] - reskh).abs());
        }
        let value = resk * half;
        let resabs = resabs * habs;
        let resasc = resasc * habs;
        let mut err = ((resk - resg) * half).abs();
        if resasc != 0.0 && err != 0.0 {
            err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
        }
        if resabs > UFLOW / (50.0 * EPMACH) {
            err = err.max(50.0 * EPMACH * resabs);
        }
        values[c] = value;
        errors[c] = err;
        absolutes[c] = resabs;
    }
    (values, errors, absolutes)
}

/// Integrate `f` over the consecutive intervals given by `breakpoints`
/// (strictly monotone, at least two entries). Components `0..active` drive
/// refinement; the remaining `dim - active` are carried along.
pub fn integrate<F>(
    mut f: F,
    dim: usize,
    active: usize,
    breakpoints: &[f64],
    ctl: AdaptiveControl,
) -> VecIntegral
where
    F: FnMut(f64, &mut [f64]),
{
    assert!(breakpoints.len() >= 2 && active <= dim);
    let mut scratch = vec![0.0; 21 * dim];
    let mut evaluations = 0usize;
    let mut totals = vec![0.0; dim];
    let mut total_err = vec![0.0; dim];
    let mut total_abs = vec![0.0; dim];
    let mut heap: BinaryHeap<Segment> = BinaryHeap::new();
    let mut frozen: Vec<Segment> = Vec::new();

    let tol_of = |totals: &[f64], total_abs: &[f64], c: usize| {
        (ctl.rel_tol * totals[c].abs())
            .max(ctl.abs_tol)
            .max(ROUNDOFF * total_abs[c])
    };
    let score_of = |errors: &[f64], totals: &[f64], total_abs: &[f64]| {
        (0..active)
            .map(|c| errors[c] / tol_of(totals, total_abs, c))
            .fold(0.0, f64::max)
    };
    let min_width = |a: f64, b: f64| {
        let scale = a.abs().max(b.abs());
        (b - a).abs() <= (1e3 * EPMACH * scale).max(1e-250)
    };

    let mut initial = Vec::new();
    for w in breakpoints.windows(2) {
        let (values, errors, absolutes) = rule21(&mut f, w[0], w[1], dim, &mut scratch);
        evaluations += 21;
        for c in 0..dim {
            totals[c] += values[c];
            total_err[c] += errors[c];
            total_abs[c] += absolutes[c];
        }
        initial.push((w[0], w[1], values, errors, absolutes));
    }
    for (a, b, values, errors, absolutes) in initial {
        let score = score_of(&errors, &totals, &total_abs);
        heap.push(Segment {
            a,
            b,
            values,
            errors,
            absolutes,
            score,
            splittable: !min_width(a, b),
        });
    }

    let satisfied = |totals: &[f64], total_err: &[f64], total_abs: &[f64]| {
        (0..active).all(|c| total_err[c] <= tol_of(totals, total_abs, c))
    };

    let mut converged = satisfied(&totals, &total_err, &total_abs);
    while !converged {
        if heap.len() + frozen.len() >= ctl.max_segments {
            break;
        }
        let Some(seg) = heap.pop() else { break };
        if !seg.splittable {
            frozen.push(seg);
            continue;
        }
        let mid = 0.5 * (seg.a + seg.b);
        let (lv, le, la) = rule21(&mut f, seg.a, mid, dim, &mut scratch);
        let (rv, re, ra) = rule21(&mut f, mid, seg.b, dim, &mut scratch);
        evaluations += 42;
        for c in 0..dim {
            totals[c] += lv[c] + rv[c] - seg.values[c];
            total_err[c] += le[c] + re[c] - seg.errors[c];
            total_abs[c] += la[c] + ra[c] - seg.absolutes[c];
        }
        for (a, b, values, errors, absolutes) in [(seg.a, mid, lv, le, la), (mid, seg.b, rv, re, ra)] {
            let score = score_of(&errors, &totals, &total_abs);
            heap.push(Segment {
                a,
                b,
                values,
                errors,
                absolutes,
                score,
                splittable: !min_width(a, b),
            });
        }
        converged = satisfied(&totals, &total_err, &total_abs);
    }

    // re-sum from the final segments to shed accumulated update rounding
    let mut values = vec![0.0; dim];
    let mut errors = vec![0.0; dim];
    let mut floors = vec![0.0; dim];
    let mut segs: Vec<Segment> = heap.into_vec();
    segs.extend(frozen);
    segs.sort_by(|x, y| x.a.total_cmp(&y.a));
    for s in &segs {
        for c in 0..dim {
            values[c] += s.values[c];
            errors[c] += s.errors[c];
            floors[c] += ROUNDOFF * s.absolutes[c];
        }
    }
    VecIntegral {
        values,
        errors,
        floors,
        evaluations,
        converged,
    }
}

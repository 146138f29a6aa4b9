use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{certify_signs, Certificates, SignCertificate};
use crate::geometry::{identity_deviation, IdentityDeviation, SurfacePoint, TorusShape};
use crate::modes::{numerical_range_record, NumericalRangeRecord, SignVerdict};
use crate::spectral::{convergence_study, mode_spectrum, ConvergenceStudy, ModeSpectrum, SignCounts};

use super::{fmt_float, fmt_opt, Cache, CacheKey, CliError, Outcome, RunConfig};

pub const NUMRANGE_HEADER: &str = "xi,k,l,s_kl,ds_kl,I_spectral,I_direct,I_polar,lead_pred,sign_verdict,err_estimate";
pub const SPECTRUM_HEADER: &str = "xi,k,L,index,lambda_A,lambda_np,residual";
pub const ASYMPTOTICS_HEADER: &str = "xi,axis,index,I_value,lead_pred,ratio,margin";
pub const CONVERGENCE_HEADER: &str = "xi,k,L,end,rank,lambda_np,delta";

/// Largest relative deviation the geometry identities may show.
pub const GEOMETRY_TOL: f64 = 1e-10;
const GEOMETRY_SAMPLES: usize = 100;
const GEOMETRY_SEED: u64 = 0x006e_7074_6f72_7573;
/// Extremal eigenvalues tracked per end by the convergence command.
const CONVERGENCE_EXTREMAL: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    GeometryCheck,
    Numrange,
    Spectrum,
    Asymptotics,
    Convergence,
}

impl Command {
    pub fn execute(self, config: &RunConfig) -> Result<Outcome, CliError> {
        config.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| CliError::Config(format!("cannot start {} workers: {e}", config.jobs)))?;
        pool.install(|| match self {
            Command::GeometryCheck => cmd_geometry_check(config),
            Command::Numrange => cmd_numrange(config),
            Command::Spectrum => cmd_spectrum(config),
            Command::Asymptotics => cmd_asymptotics(config),
            Command::Convergence => cmd_convergence(config),
        })
    }
}

fn prepare_out(config: &RunConfig) -> Result<(), CliError> {
    fs::create_dir_all(&config.out_dir).map_err(|e| CliError::io(&config.out_dir, e))
}

fn open_cache(config: &RunConfig) -> Result<Cache, CliError> {
    let dir = config.cache_dir();
    Cache::open(&dir).map_err(|e| CliError::io(&dir, e))
}

fn write_file(path: PathBuf, contents: &str, outcome: &mut Outcome) -> Result<(), CliError> {
    fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
    outcome.files.push(path);
    Ok(())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T, outcome: &mut Outcome) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(&path, std::io::Error::other(e)))?;
    text.push('\n');
    write_file(path, &text, outcome)
}

fn shape(xi: f64) -> Result<TorusShape, CliError> {
    TorusShape::unit(xi).map_err(|e| CliError::Config(e.to_string()))
}

#[derive(Serialize)]
struct GeometryEntry {
    xi: f64,
    samples: usize,
    fundamental_solution: f64,
    normal_projection: f64,
    np_kernel: f64,
    normal_unit: f64,
    pass: bool,
}

#[derive(Serialize)]
struct GeometryReport {
    tolerance: f64,
    pairs_per_shape: usize,
    seed: u64,
    shapes: Vec<GeometryEntry>,
    pass: bool,
}

/// Deterministic pseudo-random point pairs on the torus.
pub fn sample_pairs(n: usize, seed: u64) -> Vec<(SurfacePoint, SurfacePoint)> {
    let mut rng = StdRng::seed_from_u64(seed);
    let mut angle = || rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI);
    (0..n)
        .map(|_| (SurfacePoint::new(angle(), angle()), SurfacePoint::new(angle(), angle())))
        .collect()
}

pub fn cmd_geometry_check(config: &RunConfig) -> Result<Outcome, CliError> {
    prepare_out(config)?;
    let pairs = sample_pairs(GEOMETRY_SAMPLES, GEOMETRY_SEED);
    let mut shapes = Vec::new();
    for &xi in &config.xi {
        let d: IdentityDeviation = identity_deviation(&shape(xi)?, pairs.iter().copied());
        shapes.push(GeometryEntry {
            xi,
            samples: d.samples,
            fundamental_solution: d.fundamental,
            normal_projection: d.normal_projection,
            np_kernel: d.np_kernel,
            normal_unit: d.normal_unit,
            pass: d.fundamental <= GEOMETRY_TOL && d.normal_projection <= GEOMETRY_TOL && d.samples == pairs.len(),
        });
    }
    let failed = shapes.iter().filter(|s| !s.pass).count();
    let report = GeometryReport {
        tolerance: GEOMETRY_TOL,
        pairs_per_shape: pairs.len(),
        seed: GEOMETRY_SEED,
        pass: failed == 0,
        shapes,
    };
    let mut outcome = Outcome::default();
    write_json(config.out_dir.join("geometry_report.json"), &report, &mut outcome)?;
    outcome.unconverged = failed;
    Ok(outcome)
}

/// Compute `tasks` in parallel through the cache, preserving their order.
fn sweep<T, R, F>(tasks: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    tasks.par_iter().map(f).collect()
}

pub fn cmd_numrange(config: &RunConfig) -> Result<Outcome, CliError> {
    prepare_out(config)?;
    let cache = open_cache(config)?;
    let spec = config.spec()?;
    let kind = format!("numrange-{}", config.method.as_str());
    let mut tasks = Vec::new();
    for &xi in &config.xi {
        for k in 0..=config.k_max as i64 {
            for l in 0..=config.l_max as i64 {
                tasks.push((xi, k, l));
            }
        }
    }
    let records = sweep(&tasks, |&(xi, k, l)| {
        let s = shape(xi)?;
        let key = CacheKey::new(&kind, xi, k, l, 0, &spec);
        cache
            .get_or_compute(&key, || numerical_range_record(&s, k, l, config.method, &spec))
            .map_err(CliError::from)
    });
    let mut csv = String::from(NUMRANGE_HEADER);
    csv.push('\n');
    let mut outcome = Outcome::default();
    for r in records {
        let r: NumericalRangeRecord = r?;
        let verdict = if r.converged {
            r.sign_verdict
        } else {
            outcome.unconverged += 1;
            SignVerdict::Indeterminate
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_float(r.xi),
            r.k,
            r.l,
            fmt_float(r.s_kl),
            fmt_float(r.ds_kl),
            fmt_float(r.i_spectral),
            fmt_opt(r.i_direct),
            fmt_opt(r.i_polar),
            fmt_opt(r.lead_pred),
            verdict.as_str(),
            fmt_float(r.err_estimate),
        );
    }
    write_file(config.out_dir.join("numrange.csv"), &csv, &mut outcome)?;
    Ok(outcome)
}

#[derive(Serialize)]
struct BlockSummary {
    k: i64,
    #[serde(flatten)]
    counts: Option<SignCounts>,
    build_err_np: Option<f64>,
    max_residual: Option<f64>,
    contained: Option<bool>,
    top: Option<f64>,
    bottom: Option<f64>,
    error: Option<String>,
}

#[derive(Serialize)]
struct ShapeSummary {
    xi: f64,
    #[serde(rename = "L")]
    l_trunc: usize,
    positive_count: usize,
    negative_count: usize,
    certified_negative_count: usize,
    resolved_negative_count: usize,
    blocks: Vec<BlockSummary>,
}

pub fn cmd_spectrum(config: &RunConfig) -> Result<Outcome, CliError> {
    prepare_out(config)?;
    let cache = open_cache(config)?;
    let spec = config.spec()?;
    let l_trunc = config.l_trunc;
    let tasks: Vec<(f64, i64)> = config
        .xi
        .iter()
        .flat_map(|&xi| (0..=config.k_max as i64).map(move |k| (xi, k)))
        .collect();
    let blocks = sweep(&tasks, |&(xi, k)| -> Result<crate::Result<ModeSpectrum>, CliError> {
        let s = shape(xi)?;
        let key = CacheKey::new("spectrum", xi, k, 0, l_trunc, &spec);
        if let Some(hit) = cache.get(&key) {
            return Ok(Ok(hit));
        }
        let block = mode_spectrum(&s, k, l_trunc, &spec);
        if let Ok(b) = &block {
            let _ = cache.put(&key, b);
        }
        Ok(block)
    });

    let mut outcome = Outcome::default();
    let mut csv = String::from(SPECTRUM_HEADER);
    csv.push('\n');
    let mut summaries: Vec<ShapeSummary> = Vec::new();
    for (&(xi, k), block) in tasks.iter().zip(blocks) {
        if summaries.last().is_none_or(|s| s.xi != xi) {
            summaries.push(ShapeSummary {
                xi,
                l_trunc,
                positive_count: 0,
                negative_count: 0,
                certified_negative_count: 0,
                resolved_negative_count: 0,
                blocks: Vec::new(),
            });
        }
        let summary = summaries.last_mut().expect("pushed above");
        match block? {
            Ok(b) => {
                for r in &b.records {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{}",
                        fmt_float(r.xi),
                        r.k,
                        r.l_trunc,
                        r.index,
                        fmt_float(r.lambda_a),
                        fmt_float(r.lambda_np),
                        fmt_float(r.residual),
                    );
                }
                summary.positive_count += b.counts.positive;
                summary.negative_count += b.counts.negative;
                summary.certified_negative_count += b.counts.certified_negative;
                summary.resolved_negative_count += b.counts.resolved_negative;
                summary.blocks.push(BlockSummary {
                    k,
                    counts: Some(b.counts),
                    build_err_np: Some(b.build_err_np),
                    max_residual: Some(b.max_residual),
                    contained: Some(b.contained()),
                    top: b.records.first().map(|r| r.lambda_np),
                    bottom: b.records.last().map(|r| r.lambda_np),
                    error: None,
                });
            }
            Err(e) => {
                outcome.unconverged += 1;
                summary.blocks.push(BlockSummary {
                    k,
                    counts: None,
                    build_err_np: None,
                    max_residual: None,
                    contained: None,
                    top: None,
                    bottom: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    write_file(config.out_dir.join("spectrum.csv"), &csv, &mut outcome)?;
    write_json(config.out_dir.join("spectrum_summary.json"), &summaries, &mut outcome)?;
    Ok(outcome)
}

fn plot_name(xi: f64, cert: &SignCertificate) -> String {
    format!("asymptotics_xi{xi}_{}.dat", cert.mode_axis.label())
}

pub fn cmd_asymptotics(config: &RunConfig) -> Result<Outcome, CliError> {
    if config.k_max < crate::asymptotics::MIN_SCAN as usize || config.l_max < crate::asymptotics::MIN_SCAN as usize {
        return Err(CliError::Config(format!(
            "asymptotic scans need k_max and l_max of at least {}",
            crate::asymptotics::MIN_SCAN
        )));
    }
    prepare_out(config)?;
    let cache = open_cache(config)?;
    let spec = config.spec()?;
    let ks: Vec<String> = config.scan_ks.iter().map(i64::to_string).collect();
    let kind = format!("certificates-{}", ks.join(":"));
    let certs = sweep(&config.xi, |&xi| {
        let s = shape(xi)?;
        let key = CacheKey::new(&kind, xi, config.k_max as i64, config.l_max as i64, 0, &spec);
        cache
            .get_or_compute(&key, || {
                certify_signs(&s, config.k_max as i64, config.l_max as i64, &config.scan_ks, &spec)
            })
            .map_err(CliError::from)
    })
    .into_iter()
    .collect::<Result<Vec<Certificates>, _>>()?;

    let mut outcome = Outcome::default();
    let mut csv = String::from(ASYMPTOTICS_HEADER);
    csv.push('\n');
    for c in &certs {
        for cert in std::iter::once(&c.positive_axis).chain(&c.negative_axis) {
            let mut plot = String::new();
            for p in &cert.scan {
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{}",
                    fmt_float(c.xi),
                    cert.mode_axis.label(),
                    p.index,
                    fmt_float(p.value),
                    fmt_float(p.lead),
                    fmt_float(p.ratio),
                    fmt_float(p.margin),
                );
                let _ = writeln!(plot, "{} {}", p.index, fmt_float(p.ratio));
            }
            write_file(config.out_dir.join(plot_name(c.xi, cert)), &plot, &mut outcome)?;
        }
    }
    write_file(config.out_dir.join("asymptotics.csv"), &csv, &mut outcome)?;
    write_json(config.out_dir.join("certificates.json"), &certs, &mut outcome)?;
    Ok(outcome)
}

/// `8, 16, 32, ...` below `l_trunc`, then `l_trunc` itself.
pub fn truncation_sequence(l_trunc: usize) -> Vec<usize> {
    let mut seq: Vec<usize> = std::iter::successors(Some(8usize), |l| Some(l * 2))
        .take_while(|&l| l < l_trunc)
        .collect();
    seq.push(l_trunc);
    seq
}

pub fn cmd_convergence(config: &RunConfig) -> Result<Outcome, CliError> {
    prepare_out(config)?;
    let cache = open_cache(config)?;
    let spec = config.spec()?;
    let seq = truncation_sequence(config.l_trunc);
    let tasks: Vec<(f64, i64)> = config
        .xi
        .iter()
        .flat_map(|&xi| (0..=config.k_max as i64).map(move |k| (xi, k)))
        .collect();
    let studies = sweep(&tasks, |&(xi, k)| {
        let s = shape(xi)?;
        let key = CacheKey::new("convergence", xi, k, 0, config.l_trunc, &spec);
        cache
            .get_or_compute(&key, || convergence_study(&s, k, &seq, CONVERGENCE_EXTREMAL, &spec))
            .map_err(CliError::from)
    });
    let mut csv = String::from(CONVERGENCE_HEADER);
    csv.push('\n');
    let mut all = Vec::new();
    for st in studies {
        let st: ConvergenceStudy = st?;
        for row in &st.rows {
            for (end, vals, deltas) in [("top", &row.top, &row.top_deltas), ("bottom", &row.bottom, &row.bottom_deltas)] {
                for (rank, v) in vals.iter().enumerate() {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{end},{rank},{},{}",
                        fmt_float(st.xi),
                        st.k,
                        row.l_trunc,
                        fmt_float(*v),
                        fmt_opt(deltas.get(rank).copied()),
                    );
                }
            }
        }
        all.push(st);
    }
    let mut outcome = Outcome::default();
    write_file(config.out_dir.join("convergence.csv"), &csv, &mut outcome)?;
    write_json(config.out_dir.join("convergence.json"), &all, &mut outcome)?;
    Ok(outcome)
}

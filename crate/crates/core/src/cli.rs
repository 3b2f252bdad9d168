//! Config grammar, CSV formats and the command implementations behind the
//! `dirac-phase` binary.
//!
//! Config files are UTF-8 `key = value` lines. `#` starts a comment, blank
//! lines are ignored, and every key may appear at most once.
//!
//! | key          | values                                             | default |
//! |--------------|----------------------------------------------------|---------|
//! | `field`      | `uniform-asym`, `uniform-sym`, `monopole`, `monopole-linear` | required |
//! | `noise`      | `wiener`, `ou`                                     | required |
//! | `drift`      | `trivial`, `precession`                            | required |
//! | `T`          | operational time > 0                               | required |
//! | `steps`      | time steps >= 1                                    | required |
//! | `samples`    | trajectories >= 1                                  | required |
//! | `seed`       | master seed (u64)                                  | required |
//! | `coupling`   | phase coupling                                     | 1       |
//! | `Bx` `By` `Bz` | Wiener diffusion constants >= 0                  | 0       |
//! | `gamma`      | OU relaxation rate > 0                             | required for `ou` |
//! | `D` / `epsilon` | OU diffusion or stationary amplitude (exactly one) | required for `ou` |
//! | `ou_init`    | `stationary`, `origin`                             | `stationary` |
//! | `theta0`     | drift colatitude in [0, π]                         | 0; required for monopole fields and precession |
//! | `phi0`       | drift azimuth                                      | 0       |
//! | `turns`      | precession turns >= 1                              | 1       |
//! | `quad_steps` | closure quadrature panels >= 1                     | 64      |
//! | `bootstrap`  | bootstrap resamples >= 2                           | 200     |

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::montecarlo::{
    estimate_moments, fit_sqrt_law, bootstrap_seed, run_experiment, sweep_axis, sweep_variance, ExperimentConfig,
    FieldKind, FitResult, MomentEstimate, NoiseModel, PhaseEnsemble, SweepAxis, SweepPoint, DEFAULT_BOOTSTRAP,
};
use crate::paths::{DriftLoop, OuInit, OuParams, WienerParams};
use crate::phase::{PhaseConvention, DEFAULT_CLOSURE_PANELS};
use crate::{Error, Result};

pub const ENSEMBLE_HEADER: &str = "sample_index,phase";
pub const SUMMARY_HEADER: &str = "samples,rejected,mean,variance,stderr_mean,stderr_variance";
pub const SWEEP_HEADER: &str = "N,sigma,sigma_stderr";
pub const FIT_HEADER: &str = "a,b,a_stderr,b_stderr,residual_norm";

const KEYS: &[&str] = &[
    "field", "noise", "drift", "T", "steps", "samples", "seed", "coupling", "Bx", "By", "Bz", "gamma", "D", "epsilon",
    "ou_init", "theta0", "phi0", "turns", "quad_steps", "bootstrap",
];

/// Process exit codes.
pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const VALIDATION: i32 = 1;
    pub const ABORTED: i32 = 2;
    pub const VERIFY_FAILED: i32 = 3;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::AbortedRun { .. } => exit::ABORTED,
        _ => exit::VALIDATION,
    }
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line: Some(line), message: message.into() }
}

struct Entries {
    map: BTreeMap<String, (usize, String)>,
}

impl Entries {
    fn take(&mut self, key: &str) -> Option<(usize, String)> {
        self.map.remove(key)
    }

    fn required(&mut self, key: &str) -> Result<(usize, String)> {
        self.take(key)
            .ok_or_else(|| Error::Config { line: None, message: format!("missing required key `{key}`") })
    }

    fn real(&mut self, key: &str) -> Result<Option<(usize, f64)>> {
        self.take(key)
            .map(|(line, v)| match v.parse::<f64>() {
                Ok(x) if x.is_finite() => Ok((line, x)),
                _ => Err(config_err(line, format!("`{key}` expects a finite number, got `{v}`"))),
            })
            .transpose()
    }

    fn integer(&mut self, key: &str) -> Result<Option<(usize, u64)>> {
        self.take(key)
            .map(|(line, v)| {
                if let Ok(x) = v.parse::<u64>() {
                    return Ok((line, x));
                }
                // accept integral scientific notation such as 1e5
                match v.parse::<f64>() {
                    Ok(x) if x >= 0.0 && x.fract() == 0.0 && x < 2f64.powi(53) => Ok((line, x as u64)),
                    _ => Err(config_err(line, format!("`{key}` expects a non-negative integer, got `{v}`"))),
                }
            })
            .transpose()
    }

    /// Reject a key that does not apply to the chosen mode.
    fn forbid(&mut self, key: &str, why: &str) -> Result<()> {
        match self.take(key) {
            Some((line, _)) => Err(config_err(line, format!("`{key}` {why}"))),
            None => Ok(()),
        }
    }
}

fn check(cond: bool, line: usize, msg: impl Into<String>) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(config_err(line, msg))
    }
}

/// Parse and validate a config file body.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let mut map = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let (key, value) = body
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected `key = value`, got `{body}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(config_err(line, format!("unknown key `{key}`")));
        }
        if value.is_empty() {
            return Err(config_err(line, format!("`{key}` has no value")));
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
            return Err(config_err(line, format!("duplicate key `{key}` (first set on line {first})")));
        }
    }
    let mut e = Entries { map };

    let (field_line, field) = e.required("field")?;
    let field = match field.as_str() {
        "uniform-asym" => FieldKind::UniformAsymmetric,
        "uniform-sym" => FieldKind::UniformSymmetric,
        "monopole" => FieldKind::Monopole,
        "monopole-linear" => FieldKind::MonopoleLinear,
        other => return Err(config_err(field_line, format!("unknown field `{other}`"))),
    };

    let (line, t) = e.real("T")?.ok_or_else(|| Error::Config { line: None, message: "missing required key `T`".into() })?;
    check(t > 0.0, line, format!("`T` must be > 0, got {t}"))?;
    let (line, steps) = e.integer("steps")?.ok_or_else(|| Error::Config { line: None, message: "missing required key `steps`".into() })?;
    check(steps >= 1, line, "`steps` must be >= 1")?;
    let (line, samples) = e.integer("samples")?.ok_or_else(|| Error::Config { line: None, message: "missing required key `samples`".into() })?;
    check(samples >= 1, line, "`samples` must be >= 1")?;
    let (_, seed) = e.integer("seed")?.ok_or_else(|| Error::Config { line: None, message: "missing required key `seed`".into() })?;
    let coupling = e.real("coupling")?.map_or(1.0, |(_, c)| c);

    let (noise_line, noise) = e.required("noise")?;
    let noise = match noise.as_str() {
        "wiener" => {
            for key in ["gamma", "D", "epsilon", "ou_init"] {
                e.forbid(key, "only applies to `noise = ou`")?;
            }
            let mut b = [0.0; 3];
            for (slot, key) in b.iter_mut().zip(["Bx", "By", "Bz"]) {
                if let Some((line, v)) = e.real(key)? {
                    check(v >= 0.0, line, format!("`{key}` must be >= 0, got {v}"))?;
                    *slot = v;
                }
            }
            NoiseModel::Wiener(WienerParams::new(b[0], b[1], b[2])?)
        }
        "ou" => {
            for key in ["Bx", "By", "Bz"] {
                e.forbid(key, "only applies to `noise = wiener`")?;
            }
            let (gline, gamma) = e
                .real("gamma")?
                .ok_or_else(|| config_err(noise_line, "`noise = ou` needs `gamma`"))?;
            check(gamma > 0.0, gline, format!("`gamma` must be > 0, got {gamma}"))?;
            let params = match (e.real("D")?, e.real("epsilon")?) {
                (Some((dl, _)), Some((el, _))) => {
                    return Err(config_err(
                        dl.max(el),
                        format!("`D` (line {dl}) and `epsilon` (line {el}) are mutually exclusive"),
                    ))
                }
                (Some((dl, d)), None) => {
                    check(d >= 0.0, dl, format!("`D` must be >= 0, got {d}"))?;
                    OuParams::new(gamma, d)?
                }
                (None, Some((el, eps))) => {
                    check(eps >= 0.0, el, format!("`epsilon` must be >= 0, got {eps}"))?;
                    OuParams::from_epsilon(gamma, eps)?
                }
                (None, None) => return Err(config_err(noise_line, "`noise = ou` needs exactly one of `D`, `epsilon`")),
            };
            let init = match e.take("ou_init") {
                None => OuInit::Stationary,
                Some((_, v)) if v == "stationary" => OuInit::Stationary,
                Some((_, v)) if v == "origin" => OuInit::Origin,
                Some((line, v)) => return Err(config_err(line, format!("unknown ou_init `{v}`"))),
            };
            NoiseModel::Ou { params, init }
        }
        other => return Err(config_err(noise_line, format!("unknown noise `{other}`"))),
    };

    let (drift_line, drift) = e.required("drift")?;
    let needs_theta = matches!(field, FieldKind::Monopole | FieldKind::MonopoleLinear) || drift == "precession";
    let theta0 = match e.real("theta0")? {
        Some((line, th)) => {
            check((0.0..=std::f64::consts::PI).contains(&th), line, format!("`theta0` must lie in [0, π], got {th}"))?;
            th
        }
        None if needs_theta => {
            return Err(config_err(drift_line, "monopole fields and precession drift need `theta0`"))
        }
        None => 0.0,
    };
    let phi0 = e.real("phi0")?.map_or(0.0, |(_, p)| p);
    let drift = match drift.as_str() {
        "trivial" => {
            e.forbid("turns", "only applies to `drift = precession`")?;
            DriftLoop::trivial_at(theta0, phi0)
        }
        "precession" => {
            let turns = match e.integer("turns")? {
                Some((line, n)) => {
                    check((1..=u32::MAX as u64).contains(&n), line, "`turns` must be >= 1")?;
                    n as u32
                }
                None => 1,
            };
            DriftLoop::Precession { theta0, phi0, turns }
        }
        other => return Err(config_err(drift_line, format!("unknown drift `{other}`"))),
    };

    let closure_panels = match e.integer("quad_steps")? {
        Some((line, q)) => {
            check(q >= 1, line, "`quad_steps` must be >= 1")?;
            q as usize
        }
        None => DEFAULT_CLOSURE_PANELS,
    };
    let bootstrap = match e.integer("bootstrap")? {
        Some((line, b)) => {
            check(b >= 2, line, "`bootstrap` must be >= 2")?;
            b as usize
        }
        None => DEFAULT_BOOTSTRAP,
    };
    debug_assert!(e.map.is_empty(), "unconsumed keys: {:?}", e.map.keys());

    let config = ExperimentConfig {
        field,
        noise,
        drift,
        total_time: t,
        steps: steps as usize,
        samples: samples as usize,
        master_seed: seed,
        convention: PhaseConvention { coupling, closure_panels },
        bootstrap,
    };
    config.validate().map_err(|err| Error::Config { line: None, message: err.to_string() })?;
    Ok(config)
}

/// Render a config in the same grammar, with every default spelled out.
/// Drift coordinates are written as `theta0`/`phi0` of the starting point.
pub fn render_config(c: &ExperimentConfig) -> String {
    let mut s = String::new();
    let field = match c.field {
        FieldKind::UniformAsymmetric => "uniform-asym",
        FieldKind::UniformSymmetric => "uniform-sym",
        FieldKind::Monopole => "monopole",
        FieldKind::MonopoleLinear => "monopole-linear",
    };
    let _ = writeln!(s, "field = {field}");
    match c.noise {
        NoiseModel::Wiener(w) => {
            let _ = writeln!(s, "noise = wiener\nBx = {:?}\nBy = {:?}\nBz = {:?}", w.bx, w.by, w.bz);
        }
        NoiseModel::Ou { params, init } => {
            let init = match init {
                OuInit::Stationary => "stationary",
                OuInit::Origin => "origin",
            };
            let _ = writeln!(s, "noise = ou\ngamma = {:?}\nD = {:?}\nou_init = {init}", params.gamma(), params.diffusion());
        }
    }
    match c.drift {
        DriftLoop::Trivial { point } => {
            let r = point.norm();
            let theta = if r > 0.0 { (point.z / r).clamp(-1.0, 1.0).acos() } else { 0.0 };
            let _ = writeln!(s, "drift = trivial\ntheta0 = {theta:?}\nphi0 = {:?}", point.y.atan2(point.x));
        }
        DriftLoop::Precession { theta0, phi0, turns } => {
            let _ = writeln!(s, "drift = precession\ntheta0 = {theta0:?}\nphi0 = {phi0:?}\nturns = {turns}");
        }
    }
    let _ = writeln!(
        s,
        "T = {:?}\nsteps = {}\nsamples = {}\nseed = {}\ncoupling = {:?}\nquad_steps = {}\nbootstrap = {}",
        c.total_time, c.steps, c.samples, c.master_seed, c.convention.coupling, c.convention.closure_panels, c.bootstrap
    );
    s
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    parse_config(&fs::read_to_string(path)?)
}

/// Full-precision float rendering used in every CSV (17 significant digits).
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn ensemble_csv(ensemble: &PhaseEnsemble) -> String {
    let mut s = String::with_capacity(32 * ensemble.phases.len() + 32);
    s.push_str(ENSEMBLE_HEADER);
    s.push('\n');
    for &(i, p) in &ensemble.phases {
        let _ = writeln!(s, "{i},{}", fmt_f64(p));
    }
    s
}

pub fn summary_csv(samples: usize, rejected: usize, m: &MomentEstimate) -> String {
    format!(
        "{SUMMARY_HEADER}\n{samples},{rejected},{},{},{},{}\n",
        fmt_f64(m.mean),
        fmt_f64(m.variance),
        fmt_f64(m.stderr_mean),
        fmt_f64(m.stderr_variance)
    )
}

pub fn sweep_csv(points: &[SweepPoint]) -> String {
    let mut s = format!("{SWEEP_HEADER}\n");
    for p in points {
        let _ = writeln!(s, "{},{},{}", fmt_f64(p.n), fmt_f64(p.sigma), fmt_f64(p.sigma_stderr));
    }
    s
}

pub fn fit_csv(f: &FitResult) -> String {
    format!(
        "{FIT_HEADER}\n{},{},{},{},{}\n",
        fmt_f64(f.a),
        fmt_f64(f.b),
        fmt_f64(f.a_stderr),
        fmt_f64(f.b_stderr),
        fmt_f64(f.residual_norm)
    )
}

fn csv_rows<'a>(text: &'a str, header: &str, origin: &str) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(Error::Csv { path: origin.into(), message: format!("expected header `{header}`") }),
    }
    let width = header.split(',').count();
    lines
        .map(|(i, l)| {
            let cells: Vec<&str> = l.trim().split(',').collect();
            if cells.len() != width {
                return Err(Error::Csv {
                    path: origin.into(),
                    message: format!("line {}: expected {width} fields, got {}", i + 1, cells.len()),
                });
            }
            Ok((i + 1, cells))
        })
        .collect()
}

fn cell<T: std::str::FromStr>(v: &str, line: usize, origin: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::Csv { path: origin.into(), message: format!("line {line}: cannot parse `{v}`") })
}

pub fn parse_ensemble_csv(text: &str, origin: &str) -> Result<Vec<(u64, f64)>> {
    csv_rows(text, ENSEMBLE_HEADER, origin)?
        .into_iter()
        .map(|(line, c)| Ok((cell(c[0], line, origin)?, cell(c[1], line, origin)?)))
        .collect()
}

pub fn parse_sweep_csv(text: &str, origin: &str) -> Result<Vec<SweepPoint>> {
    csv_rows(text, SWEEP_HEADER, origin)?
        .into_iter()
        .map(|(line, c)| {
            Ok(SweepPoint {
                n: cell(c[0], line, origin)?,
                sigma: cell(c[1], line, origin)?,
                sigma_stderr: cell(c[2], line, origin)?,
            })
        })
        .collect()
}

pub fn parse_n_values(list: &str) -> Result<Vec<f64>> {
    list.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite() && *x > 0.0)
                .ok_or_else(|| Error::invalid(format!("bad N value `{v}`")))
        })
        .collect()
}

pub struct SimulateOutput {
    pub ensemble_path: PathBuf,
    pub summary_path: PathBuf,
    pub moments: MomentEstimate,
    pub rejected: usize,
}

/// `simulate`: run the configured ensemble and write `ensemble.csv` and
/// `summary.csv` into `out_dir`.
pub fn simulate_command(config_path: &Path, out_dir: &Path, workers: Option<usize>) -> Result<SimulateOutput> {
    let config = load_config(config_path)?;
    let ensemble = run_experiment(&config, workers)?;
    let moments = estimate_moments(&ensemble, config.bootstrap, bootstrap_seed(config.master_seed))?;
    fs::create_dir_all(out_dir)?;
    let ensemble_path = out_dir.join("ensemble.csv");
    let summary_path = out_dir.join("summary.csv");
    fs::write(&ensemble_path, ensemble_csv(&ensemble))?;
    fs::write(&summary_path, summary_csv(config.samples, ensemble.rejected, &moments))?;
    Ok(SimulateOutput { ensemble_path, summary_path, moments, rejected: ensemble.rejected })
}

/// `sweep`: σ_g at each N, written to `sweep.csv`.
pub fn sweep_command(
    config_path: &Path,
    n_values: &[f64],
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<(PathBuf, Vec<SweepPoint>, SweepAxis)> {
    let config = load_config(config_path)?;
    let points = sweep_variance(&config, n_values, workers)?;
    fs::create_dir_all(out_dir)?;
    let path = out_dir.join("sweep.csv");
    fs::write(&path, sweep_csv(&points))?;
    Ok((path, points, sweep_axis(&config)))
}

/// `fit`: least-squares `σ = a√N + b` on a sweep file; writes `fit.csv`
/// into `out_dir`, or next to the sweep file when none is given.
pub fn fit_command(sweep_path: &Path, out_dir: Option<&Path>) -> Result<(PathBuf, FitResult)> {
    let text = fs::read_to_string(sweep_path)?;
    let points = parse_sweep_csv(&text, &sweep_path.display().to_string())?;
    let fit = fit_sqrt_law(&points)?;
    let dir = match out_dir {
        Some(d) => d.to_path_buf(),
        None => sweep_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(&dir)?;
    }
    let path = dir.join("fit.csv");
    fs::write(&path, fit_csv(&fit))?;
    Ok((path, fit))
}

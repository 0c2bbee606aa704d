use std::fs::File;
use std::io::{self, Read};
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Map, Value};
use smeary_core::frechet::FrechetCurve;
use smeary_core::harness::{
    clt_cube_check, estimate_rate, grid_manifest, log_spaced, read_records_csv, run_grid,
    sigma_theoretical, write_records_csv, DEFAULT_BETAS, SCHEMA_VERSION,
};
use smeary_core::{alpha_crit, c_m, gamma_m, karcher_mean, sphere_volume, GridConfig};
use smeary_core::{SmearyFamily, SpherePoint};

use crate::args::{
    CltArgs, ConstantsArgs, CurveArgs, Format, MassArgs, MeanArgs, RateArgs, SimulateArgs,
};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numeric(String),
    Io(io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) | CliError::Numeric(s) => f.write_str(s),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<smeary_core::Error> for CliError {
    fn from(e: smeary_core::Error) -> Self {
        match e {
            smeary_core::Error::Io(e) => CliError::Io(e),
            e if e.is_numeric() => CliError::Numeric(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

pub type CmdResult<T> = Result<T, CliError>;

/// Rendered output of a command, plus a numeric failure that should set the
/// exit code after the output has been written.
pub struct Output {
    pub body: Vec<u8>,
    pub failure: Option<String>,
}

impl Output {
    fn ok(body: Vec<u8>) -> Self {
        Self {
            body,
            failure: None,
        }
    }
}

fn json_body(mut v: Value, kind: &str) -> CmdResult<Vec<u8>> {
    if let Value::Object(map) = &mut v {
        let mut head = Map::new();
        head.insert("schema_version".into(), SCHEMA_VERSION.into());
        head.insert("kind".into(), kind.into());
        head.append(map);
        *map = head;
    }
    let mut out = serde_json::to_vec_pretty(&v)?;
    out.push(b'\n');
    Ok(out)
}

fn csv_rows<T: Serialize>(rows: &[T]) -> CmdResult<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

/// Flattens nested JSON into `key,value` rows; array elements get `_i` suffixes.
fn flatten_json(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}_{k}")
        }
    };
    match v {
        Value::Object(map) => map.iter().for_each(|(k, x)| flatten_json(&join(k), x, out)),
        Value::Array(xs) => xs
            .iter()
            .enumerate()
            .for_each(|(i, x)| flatten_json(&join(&i.to_string()), x, out)),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

fn key_value_csv(v: &Value) -> CmdResult<Vec<u8>> {
    let mut rows = Vec::new();
    flatten_json("", v, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"])?;
    for (k, x) in rows {
        w.write_record([k, x])?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

fn open_input(path: &Path) -> CmdResult<Box<dyn Read>> {
    if path.as_os_str() == "-" {
        return Ok(Box::new(io::stdin().lock()));
    }
    File::open(path)
        .map(|f| Box::new(io::BufReader::new(f)) as Box<dyn Read>)
        .map_err(|e| CliError::Usage(format!("cannot open {}: {e}", path.display())))
}

#[derive(Serialize)]
struct ConstantsRow {
    m: usize,
    v_m: f64,
    v_m_plus_1: f64,
    gamma_m: f64,
    alpha_crit: f64,
    c_m: f64,
    alpha_crit_2dp: String,
}

pub fn constants(a: &ConstantsArgs, format: Format) -> CmdResult<Output> {
    let mut rows = Vec::with_capacity(a.dim.len());
    for &m in &a.dim {
        SmearyFamily::critical(m)?;
        rows.push(ConstantsRow {
            m,
            v_m: sphere_volume(m),
            v_m_plus_1: sphere_volume(m + 1),
            gamma_m: gamma_m(m),
            alpha_crit: alpha_crit(m),
            c_m: c_m(m),
            alpha_crit_2dp: format!("{:.2}", alpha_crit(m)),
        });
    }
    let body = match format {
        Format::Csv => csv_rows(&rows)?,
        Format::Json => json_body(json!({ "rows": rows }), "constants")?,
    };
    Ok(Output::ok(body))
}

fn family(m: usize, mass: &MassArgs) -> CmdResult<SmearyFamily> {
    let fam = match (mass.alpha, mass.beta) {
        (Some(a), None) => SmearyFamily::new(m, a)?,
        (None, Some(b)) => SmearyFamily::from_beta(m, b)?,
        _ => {
            return Err(CliError::Usage(
                "exactly one of --alpha, --beta is required".into(),
            ))
        }
    };
    Ok(fam)
}

#[derive(Serialize)]
struct CurveRow {
    delta: f64,
    #[serde(rename = "G_minus_G0")]
    g_minus_g0: f64,
    #[serde(rename = "Gprime")]
    gprime: f64,
    terms_used: usize,
}

pub fn curve(a: &CurveArgs, format: Format) -> CmdResult<Output> {
    let fam = family(a.dim, &a.mass)?;
    let c = FrechetCurve::uniform(fam, a.dmax, a.steps, a.tol)?;
    let body = match format {
        Format::Csv => {
            let mut out = Vec::new();
            c.write_csv(&mut out)?;
            out
        }
        Format::Json => {
            let rows: Vec<CurveRow> = (0..c.len())
                .map(|i| CurveRow {
                    delta: c.deltas[i],
                    g_minus_g0: c.values[i],
                    gprime: c.grads[i],
                    terms_used: c.truncation_terms[i],
                })
                .collect();
            json_body(
                json!({
                    "m": fam.m(),
                    "alpha": fam.alpha(),
                    "beta": fam.beta(),
                    "tol": c.tol,
                    "rows": rows,
                }),
                "curve",
            )?
        }
    };
    Ok(Output::ok(body))
}

/// Tolerance on `|‖x‖ - 1|` for input points.
const UNIT_TOL: f64 = 1e-6;

fn read_points(input: impl Read) -> CmdResult<Vec<SpherePoint>> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut pts = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        let coords = match parsed {
            Ok(c) => c,
            Err(_) if i == 0 => continue,
            Err(e) => return Err(CliError::Usage(format!("row {}: {e}", i + 1))),
        };
        let norm = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(CliError::Usage(format!(
                "row {}: not a unit vector (norm {norm})",
                i + 1
            )));
        }
        let p = SpherePoint::new(coords)?;
        if let Some(first) = pts.first().map(SpherePoint::dim) {
            if p.dim() != first {
                return Err(CliError::Usage(format!(
                    "row {}: expected {} coordinates, found {}",
                    i + 1,
                    first + 1,
                    p.dim() + 1
                )));
            }
        }
        pts.push(p);
    }
    if pts.is_empty() {
        return Err(CliError::Usage("no points in input".into()));
    }
    Ok(pts)
}

pub fn mean(a: &MeanArgs, format: Format) -> CmdResult<Output> {
    let pts = read_points(open_input(&a.input)?)?;
    let mut res = karcher_mean(&pts, &a.solver.options())?;
    let failure = (!res.converged).then(|| {
        format!(
            "solver stopped after {} iterations without convergence (last step {:e})",
            res.iterations, res.final_step
        )
    });
    if !a.history {
        res.history.clear();
    }
    let body = match format {
        Format::Json => json_body(json!({ "n": pts.len(), "result": res }), "mean")?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let mut head: Vec<String> = [
                "n",
                "iterations",
                "converged",
                "frechet_value",
                "final_step",
                "halvings",
                "skipped_antipodal",
                "init_fallback",
            ]
            .map(String::from)
            .to_vec();
            head.extend((0..res.mean.coords().len()).map(|i| format!("x{i}")));
            w.write_record(&head)?;
            let mut row = vec![
                pts.len().to_string(),
                res.iterations.to_string(),
                res.converged.to_string(),
                format!("{:?}", res.frechet_value),
                format!("{:?}", res.final_step),
                res.halvings.to_string(),
                res.skipped_antipodal.to_string(),
                res.init_fallback.to_string(),
            ];
            row.extend(res.mean.coords().iter().map(|x| format!("{x:?}")));
            w.write_record(&row)?;
            w.into_inner().map_err(|e| CliError::Io(e.into_error()))?
        }
    };
    Ok(Output { body, failure })
}

pub fn simulate(a: &SimulateArgs, seed: u64, format: Format) -> CmdResult<Output> {
    let betas = match (&a.betas, &a.alphas) {
        (Some(b), _) => b.clone(),
        (None, Some(al)) => al.iter().map(|x| x - alpha_crit(a.dim)).collect(),
        (None, None) => DEFAULT_BETAS.to_vec(),
    };
    let cfg = GridConfig {
        m: a.dim,
        betas,
        sample_sizes: log_spaced(a.nmin, a.nmax, a.per_decade)?,
        reps: a.reps,
        seed,
        solver: a.solver.options(),
    };
    cfg.validate()?;
    let records = run_grid(&cfg)?;
    let flagged: Vec<String> = records
        .iter()
        .filter(|r| r.flagged())
        .map(|r| {
            format!(
                "(beta={}, n={}: {}/{})",
                r.beta, r.n, r.nonconverged, r.reps
            )
        })
        .collect();
    let failure = (!flagged.is_empty())
        .then(|| format!("non-convergence above 10% in cells {}", flagged.join(", ")));
    let body = match format {
        Format::Csv => {
            let mut out = Vec::new();
            write_records_csv(&records, &mut out)?;
            out
        }
        Format::Json => {
            let mut v = grid_manifest(&cfg);
            v["records"] = serde_json::to_value(&records)?;
            let mut out = serde_json::to_vec_pretty(&v)?;
            out.push(b'\n');
            out
        }
    };
    Ok(Output { body, failure })
}

#[derive(Serialize)]
struct RateRow {
    m: usize,
    beta: f64,
    alpha: f64,
    slope: f64,
    slope_stderr: f64,
    intercept: f64,
    residual_rms: f64,
    n_low: usize,
    n_high: usize,
    points: usize,
    implied_order: Option<f64>,
}

pub fn rate(a: &RateArgs, format: Format) -> CmdResult<Output> {
    let records: Vec<_> = read_records_csv(open_input(&a.input)?)?
        .into_iter()
        .filter(|r| a.dim.map_or(true, |m| r.m == m))
        .filter(|r| a.beta.map_or(true, |b| r.beta == b))
        .collect();
    if records.is_empty() {
        return Err(CliError::Usage("no records match the filters".into()));
    }
    // groups in order of first appearance
    let mut keys: Vec<(usize, u64)> = Vec::new();
    for r in &records {
        let k = (r.m, r.beta.to_bits());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let mut rows = Vec::with_capacity(keys.len());
    for (m, bits) in keys {
        let group: Vec<_> = records
            .iter()
            .filter(|r| r.m == m && r.beta.to_bits() == bits)
            .cloned()
            .collect();
        let est = estimate_rate(&group, a.window)?;
        rows.push(RateRow {
            m,
            beta: group[0].beta,
            alpha: group[0].alpha,
            slope: est.slope,
            slope_stderr: est.slope_stderr,
            intercept: est.intercept,
            residual_rms: est.residual_rms,
            n_low: est.window.0,
            n_high: est.window.1,
            points: est.points,
            implied_order: est.implied_order,
        });
    }
    let body = match format {
        Format::Csv => csv_rows(&rows)?,
        Format::Json => json_body(json!({ "estimates": rows }), "rate")?,
    };
    Ok(Output::ok(body))
}

pub fn clt(a: &CltArgs, seed: u64, format: Format) -> CmdResult<Output> {
    let summary = clt_cube_check(a.dim, a.n, a.reps, seed, &a.solver.options())?;
    let failure = (summary.nonconverged * 10 > summary.reps).then(|| {
        format!(
            "{} of {} replications did not converge",
            summary.nonconverged, summary.reps
        )
    });
    let mut v = json!({ "summary": summary });
    if a.sigma_draws > 0 {
        v["sigma"] = serde_json::to_value(sigma_theoretical(a.dim, a.sigma_draws, seed)?)?;
    }
    let body = match format {
        Format::Json => json_body(v, "clt")?,
        Format::Csv => key_value_csv(&v)?,
    };
    Ok(Output { body, failure })
}

//! On-disk formats: headerless numeric CSV, binary PGM, `key=value` text,
//! and directory bundles for datasets, variational fits and chains.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use vbip_core::expfam::InverseChiSq;
use vbip_core::kernels::{KernelKind, KernelSpec, MagnetometryGeometry};
use vbip_core::mcmc::{AcceptanceRates, ChainResult, ProposalScales};
use vbip_core::model::FitResult;
use vbip_core::penalties::BMoments;
use vbip_core::{data, GridShape, Matrix};

use crate::error::{CliError, Result};

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        format!("{v}")
    }
}

fn parse_f64(s: &str, path: &Path) -> Result<f64> {
    s.trim().parse().map_err(|_| CliError::format(path, format!("not a number: {s:?}")))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_matrix_csv(m: &Matrix, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(m.rows() * m.cols() * 24);
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&v| format_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

pub fn read_matrix_csv(path: &Path) -> Result<Matrix> {
    let text = read_text(path)?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::format(path, format!("ragged or malformed CSV: {e}")))?;
        match cols {
            None => cols = Some(rec.len()),
            Some(c) if c != rec.len() => {
                return Err(CliError::format(path, format!("ragged rows: {} and {} fields", c, rec.len())));
            }
            _ => {}
        }
        for field in rec.iter() {
            data.push(parse_f64(field, path)?);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| CliError::format(path, "empty matrix file"))?;
    Ok(Matrix::from_row_major(rows, cols, data)?)
}

/// A vector as one value per line.
pub fn write_vector_csv(v: &[f64], path: &Path) -> Result<()> {
    write_matrix_csv(&Matrix::from_fn(v.len(), 1, |i, _| v[i]), path)
}

/// An empty file reads as an empty vector.
pub fn read_vector_csv(path: &Path) -> Result<Vec<f64>> {
    if read_text(path)?.trim().is_empty() {
        return Ok(Vec::new());
    }
    let m = read_matrix_csv(path)?;
    if m.cols() != 1 {
        return Err(CliError::format(path, "expected a single column"));
    }
    Ok(m.as_slice().to_vec())
}

/// Binary greyscale (P5). `range` fixes the values mapped to black and
/// white; by default the matrix minimum and maximum are used.
pub fn write_pgm(m: &Matrix, path: &Path, range: Option<(f64, f64)>) -> Result<()> {
    let (lo, hi) = range.unwrap_or_else(|| {
        let s = m.as_slice();
        let lo = s.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    });
    let mut out = format!("P5\n{} {}\n255\n", m.cols(), m.rows()).into_bytes();
    for i in 0..m.rows() {
        for &v in m.row(i) {
            let g = if hi > lo { ((v - lo) / (hi - lo) * 255.0).round().clamp(0.0, 255.0) } else { 0.0 };
            out.push(g as u8);
        }
    }
    fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// Width, height and pixel bytes of a P5 file.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let bad = || CliError::format(path, "not a binary PGM");
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(String::from_utf8_lossy(&bytes[start..pos]).into_owned());
    }
    pos += 1;
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad());
    }
    let w: usize = fields[1].parse().map_err(|_| bad())?;
    let h: usize = fields[2].parse().map_err(|_| bad())?;
    let pixels = bytes.get(pos..pos + w * h).ok_or_else(bad)?.to_vec();
    Ok((w, h, pixels))
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(pub Vec<(String, String)>);

impl KeyValues {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }

    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, format_f64(value));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().rev().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_map(&self) -> BTreeMap<String, String> {
        self.0.iter().cloned().collect()
    }

    pub fn render(&self) -> String {
        self.0.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Blank lines and `#` comments are skipped.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut out = Self::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::format(path, format!("line {}: expected key=value", n + 1)))?;
            out.push(k.trim(), v.trim());
        }
        Ok(out)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&read_text(path)?, path)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_text(path, &self.render())
    }

    pub fn require(&self, key: &str, path: &Path) -> Result<&str> {
        self.get(key).ok_or_else(|| CliError::format(path, format!("missing key `{key}`")))
    }

    pub fn require_f64(&self, key: &str, path: &Path) -> Result<f64> {
        parse_f64(self.require(key, path)?, path)
    }

    pub fn require_usize(&self, key: &str, path: &Path) -> Result<usize> {
        let s = self.require(key, path)?;
        s.parse().map_err(|_| CliError::format(path, format!("`{key}` is not a count: {s:?}")))
    }
}

/// Creates `dir`, refusing to reuse a non-empty one unless `force`.
pub fn prepare_output_dir(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let non_empty = fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?.next().is_some();
        if non_empty && !force {
            return Err(CliError::io(
                dir,
                std::io::Error::new(std::io::ErrorKind::AlreadyExists, "output exists; pass --force to overwrite"),
            ));
        }
    }
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn format_truncation(t: Option<usize>) -> String {
    t.map_or_else(|| "inf".to_string(), |l| l.to_string())
}

pub fn parse_truncation(s: &str) -> Option<Option<usize>> {
    match s.trim() {
        "inf" | "none" => Some(None),
        v => v.parse().ok().filter(|&l| l > 0).map(Some),
    }
}

fn kernel_name(kind: KernelKind) -> &'static str {
    match kind {
        KernelKind::Gaussian1d => "gaussian1d",
        KernelKind::Gaussian2d => "gaussian2d",
        KernelKind::Magnetometry => "magnetometry",
    }
}

const GEOMETRY_KEYS: [&str; 9] = [
    "inclination_deg",
    "bearing_deg",
    "flux_density",
    "prism_top",
    "prism_bottom",
    "prism_side",
    "lower_sensor",
    "upper_sensor",
    "spacing",
];

fn geometry_values(g: &MagnetometryGeometry) -> [f64; 9] {
    [
        g.inclination_deg,
        g.bearing_deg,
        g.flux_density,
        g.prism_top,
        g.prism_bottom,
        g.prism_side,
        g.lower_sensor,
        g.upper_sensor,
        g.spacing,
    ]
}

pub fn kernel_to_kv(kv: &mut KeyValues, k: &KernelSpec) {
    kv.push("kernel", kernel_name(k.kind));
    kv.push_f64("delta", k.delta);
    kv.push("truncation", format_truncation(k.truncation));
    if k.kind == KernelKind::Magnetometry {
        for (key, v) in GEOMETRY_KEYS.iter().zip(geometry_values(&k.geometry)) {
            kv.push_f64(key, v);
        }
    }
}

pub fn kernel_from_kv(kv: &KeyValues, path: &Path) -> Result<KernelSpec> {
    let kind = match kv.require("kernel", path)? {
        "gaussian1d" => KernelKind::Gaussian1d,
        "gaussian2d" => KernelKind::Gaussian2d,
        "magnetometry" => KernelKind::Magnetometry,
        other => return Err(CliError::format(path, format!("unknown kernel `{other}`"))),
    };
    let truncation = parse_truncation(kv.require("truncation", path)?)
        .ok_or_else(|| CliError::format(path, "truncation must be a positive integer or inf"))?;
    let mut geometry = MagnetometryGeometry::default();
    if kind == KernelKind::Magnetometry {
        let mut v = [0.0; 9];
        for (slot, key) in v.iter_mut().zip(GEOMETRY_KEYS) {
            *slot = kv.require_f64(key, path)?;
        }
        geometry = MagnetometryGeometry {
            inclination_deg: v[0],
            bearing_deg: v[1],
            flux_density: v[2],
            prism_top: v[3],
            prism_bottom: v[4],
            prism_side: v[5],
            lower_sensor: v[6],
            upper_sensor: v[7],
            spacing: v[8],
        };
    }
    Ok(KernelSpec { kind, delta: kv.require_f64("delta", path)?, truncation, geometry })
}

fn shape_from_kv(kv: &KeyValues, path: &Path) -> Result<GridShape> {
    let m1 = kv.require_usize("m1", path)?;
    let m2 = kv.require_usize("m2", path)?;
    GridShape::new(m1, m2).map_err(|e| CliError::format(path, e.to_string()))
}

/// `y.csv`, optional `truth.csv` and `meta.txt`.
pub fn write_dataset(dir: &Path, ds: &data::Dataset, force: bool) -> Result<()> {
    ds.validate()?;
    prepare_output_dir(dir, force)?;
    write_vector_csv(&ds.y, &dir.join("y.csv"))?;
    let truth_path = dir.join("truth.csv");
    match &ds.truth {
        Some(t) => write_vector_csv(t, &truth_path)?,
        None if truth_path.exists() => fs::remove_file(&truth_path).map_err(|e| CliError::io(&truth_path, e))?,
        None => {}
    }
    let mut kv = KeyValues::new();
    kv.push("m1", ds.shape.m1);
    kv.push("m2", ds.shape.m2);
    kernel_to_kv(&mut kv, &ds.kernel);
    kv.push("seed", ds.meta.seed);
    kv.push_f64("sigma", ds.meta.sigma);
    kv.push("timestamp", ds.meta.timestamp);
    kv.write(&dir.join("meta.txt"))
}

pub fn read_dataset(dir: &Path) -> Result<data::Dataset> {
    let meta_path = dir.join("meta.txt");
    let kv = KeyValues::read(&meta_path)?;
    let shape = shape_from_kv(&kv, &meta_path)?;
    let kernel = kernel_from_kv(&kv, &meta_path)?;
    let y = read_vector_csv(&dir.join("y.csv"))?;
    let truth_path = dir.join("truth.csv");
    let truth = if truth_path.exists() { Some(read_vector_csv(&truth_path)?) } else { None };
    let meta = data::DatasetMeta {
        seed: kv.require("seed", &meta_path)?.parse().map_err(|_| CliError::format(&meta_path, "bad seed"))?,
        sigma: kv.require_f64("sigma", &meta_path)?,
        timestamp: kv.get("timestamp").and_then(|s| s.parse().ok()).unwrap_or(0),
    };
    let ds = data::Dataset { y, shape, kernel, truth, meta };
    ds.validate().map_err(|e| CliError::format(dir, e.to_string()))?;
    Ok(ds)
}

fn image_of(v: &[f64], shape: GridShape) -> Result<Matrix> {
    Ok(data::unvec_image(v, shape)?)
}

fn write_reconstruction(dir: &Path, mean: &[f64], shape: GridShape) -> Result<()> {
    let img = image_of(mean, shape)?;
    write_matrix_csv(&img, &dir.join("reconstruction.csv"))?;
    write_pgm(&img, &dir.join("reconstruction.pgm"), None)
}

fn write_intervals(path: &Path, iv: &[(f64, f64)]) -> Result<()> {
    write_matrix_csv(&Matrix::from_fn(iv.len(), 2, |i, j| if j == 0 { iv[i].0 } else { iv[i].1 }), path)
}

fn push_inv_chi(kv: &mut KeyValues, name: &str, d: &InverseChiSq) {
    kv.push_f64(&format!("{name}_kappa"), d.kappa);
    kv.push_f64(&format!("{name}_lambda"), d.lambda);
}

fn read_inv_chi(kv: &KeyValues, name: &str, path: &Path) -> Result<InverseChiSq> {
    let k = kv.require_f64(&format!("{name}_kappa"), path)?;
    let l = kv.require_f64(&format!("{name}_lambda"), path)?;
    Ok(InverseChiSq::new(k, l)?)
}

/// Everything a variational fit bundle records besides the q-parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunInfo {
    pub method: String,
    pub shape: GridShape,
    pub wall_time_s: f64,
    pub extra: KeyValues,
}

/// Variational fit: q-parameter CSVs, 95% intervals, reconstruction CSV and
/// PGM, and `summary.txt`.
pub fn write_fit(dir: &Path, fit: &FitResult, info: &RunInfo, force: bool) -> Result<()> {
    prepare_output_dir(dir, force)?;
    write_vector_csv(&fit.mu_x, &dir.join("mu_x.csv"))?;
    write_vector_csv(&fit.sigma_x_diag, &dir.join("sigma_x_diag.csv"))?;
    write_vector_csv(&fit.sigma_x_off1, &dir.join("sigma_x_off1.csv"))?;
    write_vector_csv(&fit.sigma_x_off_m1, &dir.join("sigma_x_off_m1.csv"))?;
    write_vector_csv(&fit.b.mu_b, &dir.join("mu_b.csv"))?;
    write_vector_csv(&fit.trace, &dir.join("trace.csv"))?;
    write_intervals(&dir.join("intervals.csv"), &fit.credible_intervals(0.95)?)?;
    write_reconstruction(dir, &fit.mu_x, info.shape)?;
    let mut kv = KeyValues::new();
    kv.push("method", &info.method);
    kv.push("m1", info.shape.m1);
    kv.push("m2", info.shape.m2);
    kv.push("iterations", fit.iterations);
    kv.push("converged", fit.converged);
    kv.push_f64("wall_time_s", info.wall_time_s);
    push_inv_chi(&mut kv, "sigma2_eps", &fit.sig_eps);
    push_inv_chi(&mut kv, "sigma2_x", &fit.sig_x);
    push_inv_chi(&mut kv, "a_eps", &fit.a_eps);
    push_inv_chi(&mut kv, "a_x", &fit.a_x);
    kv.push_f64("mean_recip_sigma2_eps", fit.sig_eps.mean_reciprocal());
    kv.push_f64("mean_recip_sigma2_x", fit.sig_x.mean_reciprocal());
    if let Some(l) = fit.b.lambda_b {
        kv.push_f64("lambda_b", l);
    }
    kv.0.extend(info.extra.0.iter().cloned());
    kv.write(&dir.join("summary.txt"))
}

pub fn read_fit(dir: &Path) -> Result<(FitResult, RunInfo)> {
    let sp = dir.join("summary.txt");
    let kv = KeyValues::read(&sp)?;
    let shape = shape_from_kv(&kv, &sp)?;
    let fit = FitResult {
        mu_x: read_vector_csv(&dir.join("mu_x.csv"))?,
        sigma_x_diag: read_vector_csv(&dir.join("sigma_x_diag.csv"))?,
        sigma_x_off1: read_vector_csv(&dir.join("sigma_x_off1.csv"))?,
        sigma_x_off_m1: read_vector_csv(&dir.join("sigma_x_off_m1.csv"))?,
        b: BMoments {
            mu_b: read_vector_csv(&dir.join("mu_b.csv"))?,
            lambda_b: kv.get("lambda_b").map(|s| parse_f64(s, &sp)).transpose()?,
        },
        sig_eps: read_inv_chi(&kv, "sigma2_eps", &sp)?,
        sig_x: read_inv_chi(&kv, "sigma2_x", &sp)?,
        a_eps: read_inv_chi(&kv, "a_eps", &sp)?,
        a_x: read_inv_chi(&kv, "a_x", &sp)?,
        iterations: kv.require_usize("iterations", &sp)?,
        converged: kv.require("converged", &sp)? == "true",
        trace: read_vector_csv(&dir.join("trace.csv"))?,
    };
    if fit.mu_x.len() != shape.m() || fit.sigma_x_diag.len() != shape.m() {
        return Err(CliError::format(dir, "fit vectors do not match the recorded shape"));
    }
    let info = RunInfo {
        method: kv.require("method", &sp)?.to_string(),
        shape,
        wall_time_s: kv.require_f64("wall_time_s", &sp)?,
        extra: KeyValues::new(),
    };
    Ok((fit, info))
}

/// Kept draws with a header row of parameter names.
pub fn write_chain_csv(chain: &ChainResult, path: &Path) -> Result<()> {
    let mut out = chain.column_names().join(",");
    out.push('\n');
    for r in 0..chain.samples.rows() {
        let row: Vec<String> = chain.samples.row(r).iter().map(|&v| format_f64(v)).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

/// Chain bundle: `chain.csv`, posterior-mean reconstruction, 95% intervals
/// and `summary.txt` with acceptance rates.
pub fn write_chain(dir: &Path, chain: &ChainResult, info: &RunInfo, force: bool) -> Result<()> {
    prepare_output_dir(dir, force)?;
    write_chain_csv(chain, &dir.join("chain.csv"))?;
    write_intervals(&dir.join("intervals.csv"), &chain.x_intervals(0.95))?;
    write_reconstruction(dir, &chain.x_means(), info.shape)?;
    let mut kv = KeyValues::new();
    kv.push("method", &info.method);
    kv.push("m1", info.shape.m1);
    kv.push("m2", info.shape.m2);
    kv.push("kept", chain.kept());
    kv.push_f64("wall_time_s", info.wall_time_s);
    kv.push_f64("acceptance_x", chain.acceptance.x);
    kv.push_f64("acceptance_scales", chain.acceptance.scales);
    kv.push_f64("acceptance_b", chain.acceptance.b);
    kv.push_f64("final_scale_x", chain.final_scales.x);
    kv.push_f64("final_scale_scales", chain.final_scales.scales);
    kv.push_f64("final_scale_b", chain.final_scales.b);
    kv.push_f64("mean_sigma2_eps", chain.mean(chain.sig_eps_column()));
    kv.push_f64("mean_sigma2_x", chain.mean(chain.sig_x_column()));
    kv.0.extend(info.extra.0.iter().cloned());
    kv.write(&dir.join("summary.txt"))
}

pub fn read_chain(dir: &Path) -> Result<(ChainResult, RunInfo)> {
    let sp = dir.join("summary.txt");
    let kv = KeyValues::read(&sp)?;
    let shape = shape_from_kv(&kv, &sp)?;
    let path = dir.join("chain.csv");
    let text = read_text(&path)?;
    let (header, body) = text.split_once('\n').ok_or_else(|| CliError::format(&path, "missing header"))?;
    let names: Vec<&str> = header.split(',').collect();
    let m = shape.m();
    let d = shape.d();
    if names.len() != m + 4 + d {
        return Err(CliError::format(&path, "column count does not match the recorded shape"));
    }
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(body.as_bytes());
    let mut data = Vec::new();
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec.map_err(|e| CliError::format(&path, format!("ragged or malformed CSV: {e}")))?;
        if rec.len() != names.len() {
            return Err(CliError::format(&path, "ragged rows"));
        }
        for f in rec.iter() {
            data.push(parse_f64(f, &path)?);
        }
        rows += 1;
    }
    let chain = ChainResult {
        samples: Matrix::from_row_major(rows, names.len(), data)?,
        m,
        d,
        acceptance: AcceptanceRates {
            x: kv.require_f64("acceptance_x", &sp)?,
            scales: kv.require_f64("acceptance_scales", &sp)?,
            b: kv.require_f64("acceptance_b", &sp)?,
        },
        final_scales: ProposalScales {
            x: kv.require_f64("final_scale_x", &sp)?,
            scales: kv.require_f64("final_scale_scales", &sp)?,
            b: kv.require_f64("final_scale_b", &sp)?,
        },
    };
    let info = RunInfo {
        method: kv.require("method", &sp)?.to_string(),
        shape,
        wall_time_s: kv.require_f64("wall_time_s", &sp)?,
        extra: KeyValues::new(),
    };
    Ok((chain, info))
}

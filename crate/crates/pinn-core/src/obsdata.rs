//! Observed tumor radii and binary-labeled datasets.
//!
//! Lab measurements provide a tumor radius at each rescaled time; under the
//! radial-symmetry assumption these are converted to 0/1 presence labels for
//! training, and predicted fields are reduced back to a threshold radius for
//! comparison.

use crate::error::{Error, Result};
use crate::physics::{DataPoint, PATCH_R2};
use crate::solver::DensityField;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusSeries {
    /// (rescaled time, radius), times strictly increasing in [0, 1].
    pub entries: Vec<(f64, f64)>,
}

/// The seven tabulated observations (rescaled time, radius).
pub fn builtin_radius_table() -> RadiusSeries {
    RadiusSeries {
        entries: vec![
            (0.25, 0.66),
            (0.375, 0.97),
            (0.5, 1.26),
            (0.625, 1.48),
            (0.75, 1.93),
            (0.875, 2.13),
            (1.0, 2.5),
        ],
    }
}

impl RadiusSeries {
    pub fn validate(&self) -> Result<()> {
        let mut prev = -1.0;
        for &(t, r) in &self.entries {
            if !(0.0..=1.0).contains(&t) || t <= prev {
                return Err(Error::Data("times must be strictly increasing in [0, 1]".into()));
            }
            if r <= 0.0 {
                return Err(Error::Data(format!("radius must be positive, got {r}")));
            }
            prev = t;
        }
        Ok(())
    }

    /// Radius at a tabulated time; t = 0 maps to the initial patch radius.
    /// No interpolation: an absent time is an error.
    pub fn radius_at(&self, t: f64) -> Result<f64> {
        if t == 0.0 {
            return Ok(PATCH_R2.sqrt());
        }
        self.entries
            .iter()
            .find(|(tt, _)| (tt - t).abs() < 1e-12)
            .map(|&(_, r)| r)
            .ok_or_else(|| Error::Data(format!("no tabulated radius at t = {t}")))
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
        let mut entries = Vec::new();
        for rec in rdr.deserialize() {
            let (t, radius): (f64, f64) = rec?;
            entries.push((t, radius));
        }
        let series = RadiusSeries { entries };
        series.validate()?;
        Ok(series)
    }
}

/// Whether binary points are drawn uniformly over the box or balanced
/// half inside / half outside the disc at each time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinarySampling {
    Uniform,
    Balanced,
}

/// Synthesize 0/1 presence observations: positions over [−3,3]², times drawn
/// uniformly from `train_times`, label 1 iff r < R(t).
pub fn make_binary_dataset(
    series: &RadiusSeries,
    train_times: &[f64],
    n_points: usize,
    sampling: BinarySampling,
    seed: u64,
) -> Result<Vec<DataPoint>> {
    if train_times.is_empty() {
        return Err(Error::Config("no training times given".into()));
    }
    let radii: Vec<f64> =
        train_times.iter().map(|t| series.radius_at(*t)).collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n_points);
    for k in 0..n_points {
        let ti = rng.gen_range(0..train_times.len());
        let (t, radius) = (train_times[ti], radii[ti]);
        let (x, y) = match sampling {
            BinarySampling::Uniform => {
                (-3.0 + 6.0 * rng.gen::<f64>(), -3.0 + 6.0 * rng.gen::<f64>())
            }
            BinarySampling::Balanced => {
                // alternate: even points inside the disc, odd points anywhere
                if k % 2 == 0 {
                    let rr = radius * rng.gen::<f64>().sqrt();
                    let th = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
                    (rr * th.cos(), rr * th.sin())
                } else {
                    (-3.0 + 6.0 * rng.gen::<f64>(), -3.0 + 6.0 * rng.gen::<f64>())
                }
            }
        };
        let label = if (x * x + y * y).sqrt() < radius { 1.0 } else { 0.0 };
        out.push(DataPoint { t, x, y, value: label });
    }
    Ok(out)
}

/// Threshold radius along the +x ray from the origin: first crossing of
/// (value − threshold), linearly interpolated. Assumes radial symmetry,
/// which is checked to a loose tolerance first.
pub fn extract_radius(field: &DensityField, threshold: f64) -> Result<f64> {
    let g = &field.grid;
    if threshold <= 0.0 {
        return Err(Error::Config("threshold must be positive".into()));
    }
    if threshold >= field.max_value() {
        return Err(Error::Data(format!(
            "threshold {threshold} is above the field maximum {}",
            field.max_value()
        )));
    }
    // symmetry spot check: x<->y transposition
    let mut asym = 0.0_f64;
    let step = (g.nx / 16).max(1);
    for i in (0..g.nx).step_by(step) {
        for j in (0..g.ny).step_by(step) {
            asym = asym.max((field.at(i, j) - field.at(j, i)).abs());
        }
    }
    if asym > 0.05 * field.max_value().max(1e-12) {
        return Err(Error::Data(format!("field is not radially symmetric (asymmetry {asym})")));
    }

    // march from the center node along +x at y = 0
    let ci = ((0.0 - g.xmin) / g.hx()).round() as usize;
    let cj = ((0.0 - g.ymin) / g.hy()).round() as usize;
    let mut prev = field.at(ci, cj) - threshold;
    if prev <= 0.0 {
        return Err(Error::Data("center density is below the threshold; no boundary".into()));
    }
    for i in ci + 1..g.nx {
        let cur = field.at(i, cj) - threshold;
        if cur <= 0.0 {
            let frac = prev / (prev - cur);
            return Ok(g.x(i - 1) - g.x(ci) + frac * g.hx());
        }
        prev = cur;
    }
    Err(Error::Data("density never crosses the threshold; no boundary found".into()))
}

/// Contour-based variant for asymmetry diagnostics: walks `n_rays` rays from
/// the origin, interpolating bilinearly, and returns (mean radius, max
/// deviation from the mean). Does not assume symmetry.
pub fn extract_radius_contour(
    field: &DensityField,
    threshold: f64,
    n_rays: usize,
) -> Result<(f64, f64)> {
    if threshold <= 0.0 || n_rays == 0 {
        return Err(Error::Config("threshold and ray count must be positive".into()));
    }
    if threshold >= field.max_value() {
        return Err(Error::Data(format!(
            "threshold {threshold} is above the field maximum {}",
            field.max_value()
        )));
    }
    let g = &field.grid;
    let r_max = g.xmax.min(g.ymax.min(-g.xmin).min(-g.ymin));
    let dr = g.hx().min(g.hy()) * 0.5;
    let mut radii = Vec::with_capacity(n_rays);
    for k in 0..n_rays {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / n_rays as f64;
        let (s, c) = theta.sin_cos();
        let mut prev = field.sample(0.0, 0.0)? - threshold;
        if prev <= 0.0 {
            return Err(Error::Data("center density is below the threshold; no boundary".into()));
        }
        let mut r = dr;
        let mut found = None;
        while r < r_max {
            let cur = field.sample(c * r, s * r)? - threshold;
            if cur <= 0.0 {
                let frac = prev / (prev - cur);
                found = Some(r - dr + frac * dr);
                break;
            }
            prev = cur;
            r += dr;
        }
        radii.push(found.ok_or_else(|| {
            Error::Data(format!("no threshold crossing along ray {k} (theta = {theta:.3})"))
        })?);
    }
    let mean = radii.iter().sum::<f64>() / n_rays as f64;
    let max_dev = radii.iter().map(|r| (r - mean).abs()).fold(0.0, f64::max);
    Ok((mean, max_dev))
}

/// |pred − obs| / |obs|.
pub fn relative_error(pred: f64, obs: f64) -> Result<f64> {
    if obs == 0.0 {
        return Err(Error::Domain("relative error undefined for zero observation".into()));
    }
    Ok((pred - obs).abs() / obs.abs())
}

/// Observation CSV with header `t,x,y,label` or `t,x,y,value`.
pub fn read_observations(path: &Path) -> Result<Vec<DataPoint>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let (t, x, y, value): (f64, f64, f64, f64) = rec?;
        out.push(DataPoint { t, x, y, value });
    }
    if out.is_empty() {
        return Err(Error::Data(format!("no observations in {}", path.display())));
    }
    Ok(out)
}

pub fn write_observations(path: &Path, points: &[DataPoint], header: &str, meta: &str) -> Result<()> {
    use std::io::Write;
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "# {meta}")?;
    writeln!(f, "{header}")?;
    for p in points {
        writeln!(f, "{},{},{},{}", p.t, p.x, p.y, p.value)?;
    }
    Ok(())
}

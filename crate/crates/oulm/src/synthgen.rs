//! Synthetic multi-observer dataset generator.
//!
//! Each sample is built in four steps: a random blob-shaped ground truth
//! (eight jittered circle points joined by a closed interpolating cubic
//! spline), five simulated observer annotations (the three rightmost control
//! points re-jittered per observer), a low-entropy rendering (value, blur,
//! noise) and a high-entropy rendering (observer accumulation, normalization,
//! value, rightward exponential decay, blur, noise).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{read_pgm, read_pgm_mask, write_pgm, write_pgm_mask};
use crate::raster::{BinaryMask, GrayImage};
use crate::rng::Rng;

/// Number of perimeter control points.
pub const N_CONTROL_POINTS: usize = 8;
/// Spline samples per segment used for rasterization.
const SAMPLES_PER_SEGMENT: usize = 256;
/// Attempts before a degenerate outline becomes a generation error.
const MAX_RETRIES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub angle_deg: f64,
    pub radius_factor: f64,
}

/// Perimeter description of one blob: eight polar control points around a
/// center, with angles strictly increasing modulo 360°.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapeSpec {
    pub center: (f64, f64),
    pub base_radius: f64,
    pub points: [ControlPoint; N_CONTROL_POINTS],
}

impl ShapeSpec {
    pub fn new(
        center: (f64, f64),
        base_radius: f64,
        points: [ControlPoint; N_CONTROL_POINTS],
    ) -> Result<Self> {
        let mut total = 0.0;
        for i in 0..N_CONTROL_POINTS {
            let next = points[(i + 1) % N_CONTROL_POINTS].angle_deg;
            let diff = (next - points[i].angle_deg).rem_euclid(360.0);
            if diff <= 0.0 {
                return Err(Error::Domain("control point angles not strictly increasing".into()));
            }
            total += diff;
        }
        if (total - 360.0).abs() > 1e-9 {
            return Err(Error::Domain("control point angles wrap more than once".into()));
        }
        Ok(Self { center, base_radius, points })
    }

    pub fn cartesian(&self) -> [(f64, f64); N_CONTROL_POINTS] {
        let mut out = [(0.0, 0.0); N_CONTROL_POINTS];
        for (i, p) in self.points.iter().enumerate() {
            let r = p.radius_factor * self.base_radius;
            let a = p.angle_deg.to_radians();
            out[i] = (self.center.0 + r * a.cos(), self.center.1 + r * a.sin());
        }
        out
    }
}

/// Generator parameters; the defaults match the canonical dataset recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub image_size: usize,
    pub count: usize,
    pub n_observers: usize,
    /// Ground-truth angle jitter, uniform in +/- this many degrees.
    pub gt_angle_jitter_deg: f64,
    /// Ground-truth radius factor range relative to the base radius.
    pub gt_radius_range: (f64, f64),
    /// Observer angle jitter, uniform in +/- this many degrees.
    pub obs_angle_jitter_deg: f64,
    /// Observer radius offset, uniform in +/- this fraction of the point's
    /// distance to the center.
    pub obs_radius_jitter: f64,
    pub max_value_range: (f64, f64),
    pub blur_sigma_range: (f64, f64),
    /// Gaussian noise standard deviation as a fraction of the intensity range.
    pub noise_factor: f64,
    /// Random per-observer weights in the high-entropy accumulation.
    pub obs_intensity_range: (f64, f64),
    /// Exponential decay rate range for the rightward intensity gradient.
    pub decay_range: (f64, f64),
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        Self {
            image_size: 128,
            count: 100,
            n_observers: 5,
            gt_angle_jitter_deg: 15.0,
            gt_radius_range: (0.75, 1.5),
            obs_angle_jitter_deg: 10.0,
            obs_radius_jitter: 0.4,
            max_value_range: (30.0, 255.0),
            blur_sigma_range: (2.0, 8.0),
            noise_factor: 0.15,
            obs_intensity_range: (50.0, 255.0),
            decay_range: (0.5, 6.5),
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        fn range_ok(name: &str, (lo, hi): (f64, f64), min: f64, max: f64) -> Result<()> {
            if !(lo <= hi && lo >= min && hi <= max) {
                return Err(Error::Config(format!(
                    "{name} range [{lo}, {hi}] invalid (must lie within [{min}, {max}])"
                )));
            }
            Ok(())
        }
        if self.image_size < 32 {
            return Err(Error::Config(format!("image_size {} < 32", self.image_size)));
        }
        if self.n_observers == 0 {
            return Err(Error::Config("n_observers must be positive".into()));
        }
        // angle jitter below half the 45 degree spacing keeps angles ordered
        if !(0.0..22.5).contains(&self.gt_angle_jitter_deg)
            || !(0.0..22.5).contains(&self.obs_angle_jitter_deg)
        {
            return Err(Error::Config("angle jitter must lie in [0, 22.5) degrees".into()));
        }
        range_ok("gt_radius", self.gt_radius_range, 0.1, 2.0)?;
        range_ok("max_value", self.max_value_range, 1.0, 255.0)?;
        range_ok("blur_sigma", self.blur_sigma_range, 0.0, 32.0)?;
        range_ok("obs_intensity", self.obs_intensity_range, 0.0, 255.0)?;
        range_ok("decay", self.decay_range, 0.0, 64.0)?;
        if !(0.0..1.0).contains(&self.obs_radius_jitter) {
            return Err(Error::Config("obs_radius_jitter must lie in [0, 1)".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_factor) {
            return Err(Error::Config("noise_factor must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One generated case: ground truth, observer annotations and both renderings.
#[derive(Debug, Clone)]
pub struct SyntheticSample {
    pub id: String,
    pub gt: BinaryMask,
    pub observers: Vec<BinaryMask>,
    pub image_unperturbed: GrayImage,
    pub image_perturbed: GrayImage,
}

// ---------------------------------------------------------------------------
// Spline and rasterization
// ---------------------------------------------------------------------------

/// Samples the closed interpolating cubic spline (Catmull-Rom tangents
/// `(P[i+1] - P[i-1]) / 2`) through the control points.
fn sample_closed_spline(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let n = points.len();
    let mut tangents = Vec::with_capacity(n);
    for i in 0..n {
        let prev = points[(i + n - 1) % n];
        let next = points[(i + 1) % n];
        tangents.push(((next.0 - prev.0) * 0.5, (next.1 - prev.1) * 0.5));
    }
    let mut out = Vec::with_capacity(n * SAMPLES_PER_SEGMENT);
    for i in 0..n {
        let p0 = points[i];
        let p1 = points[(i + 1) % n];
        let m0 = tangents[i];
        let m1 = tangents[(i + 1) % n];
        for s in 0..SAMPLES_PER_SEGMENT {
            let t = s as f64 / SAMPLES_PER_SEGMENT as f64;
            let t2 = t * t;
            let t3 = t2 * t;
            let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
            let h10 = t3 - 2.0 * t2 + t;
            let h01 = -2.0 * t3 + 3.0 * t2;
            let h11 = t3 - t2;
            out.push((
                h00 * p0.0 + h10 * m0.0 + h01 * p1.0 + h11 * m1.0,
                h00 * p0.1 + h10 * m0.1 + h01 * p1.1 + h11 * m1.1,
            ));
        }
    }
    out
}

/// Even-odd scanline fill of a closed polygon; a pixel is foreground when its
/// center lies inside.
fn rasterize_polygon(polygon: &[(f64, f64)], width: usize, height: usize) -> BinaryMask {
    let mut mask = BinaryMask::filled(width, height, false);
    let n = polygon.len();
    let mut crossings: Vec<f64> = Vec::with_capacity(16);
    for y in 0..height {
        let scan = y as f64 + 0.5;
        crossings.clear();
        for i in 0..n {
            let (x0, y0) = polygon[i];
            let (x1, y1) = polygon[(i + 1) % n];
            if (y0 <= scan) != (y1 <= scan) {
                crossings.push(x0 + (scan - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        crossings.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for pair in crossings.chunks_exact(2) {
            // pixel centers in [xa, xb)
            let start = (pair[0] - 0.5).ceil().max(0.0) as usize;
            let stop = ((pair[1] - 0.5).ceil() as isize).min(width as isize);
            for x in start as isize..stop {
                mask.set(x as usize, y, true);
            }
        }
    }
    mask
}

pub fn rasterize_shape(spec: &ShapeSpec, size: usize) -> BinaryMask {
    let polygon = sample_closed_spline(&spec.cartesian());
    rasterize_polygon(&polygon, size, size)
}

fn shape_is_valid(mask: &BinaryMask) -> bool {
    mask.is_single_component()
}

// ---------------------------------------------------------------------------
// Ground truth and observers
// ---------------------------------------------------------------------------

/// Draws a random blob: eight equidistant circle points with angle jitter and
/// radius factor jitter, splined and rasterized. Retries on degenerate
/// (self-intersecting) outlines by drawing again from the same stream.
pub fn generate_gt(rng: &mut Rng, params: &GenParams) -> Result<(ShapeSpec, BinaryMask)> {
    params.validate()?;
    let size = params.image_size;
    let center = (size as f64 / 2.0, size as f64 / 2.0);
    let base_radius = size as f64 / 4.0;
    for _ in 0..MAX_RETRIES {
        let mut points = [ControlPoint { angle_deg: 0.0, radius_factor: 1.0 }; N_CONTROL_POINTS];
        for (k, p) in points.iter_mut().enumerate() {
            let jitter = rng.uniform_in(-params.gt_angle_jitter_deg, params.gt_angle_jitter_deg);
            let factor = rng.uniform_in(params.gt_radius_range.0, params.gt_radius_range.1);
            p.angle_deg = k as f64 * (360.0 / N_CONTROL_POINTS as f64) + jitter;
            p.radius_factor = factor;
        }
        let spec = ShapeSpec::new(center, base_radius, points)?;
        let mask = rasterize_shape(&spec, size);
        if shape_is_valid(&mask) {
            return Ok((spec, mask));
        }
    }
    Err(Error::Generation {
        id: String::new(),
        reason: format!("degenerate outline after {MAX_RETRIES} attempts"),
    })
}

/// Indices of the three control points with the largest x-coordinate.
fn rightmost_indices(spec: &ShapeSpec) -> [usize; 3] {
    let pts = spec.cartesian();
    let mut idx: Vec<usize> = (0..N_CONTROL_POINTS).collect();
    idx.sort_by(|a, b| pts[*b].0.partial_cmp(&pts[*a].0).unwrap().then(a.cmp(b)));
    let mut top = [idx[0], idx[1], idx[2]];
    top.sort();
    top
}

/// Derives one observer annotation: the three rightmost perimeter points get
/// angle jitter and a radius offset proportional to their distance from the
/// center, then the outline is re-splined and re-rasterized.
pub fn generate_observer(
    spec: &ShapeSpec,
    rng: &mut Rng,
    params: &GenParams,
) -> Result<BinaryMask> {
    let targets = rightmost_indices(spec);
    for _ in 0..MAX_RETRIES {
        let mut points = spec.points;
        for &i in &targets {
            let dangle =
                rng.uniform_in(-params.obs_angle_jitter_deg, params.obs_angle_jitter_deg);
            let d = points[i].radius_factor * spec.base_radius;
            let dr = rng.uniform_in(-params.obs_radius_jitter * d, params.obs_radius_jitter * d);
            points[i].angle_deg += dangle;
            points[i].radius_factor = (d + dr) / spec.base_radius;
        }
        let Ok(perturbed) = ShapeSpec::new(spec.center, spec.base_radius, points) else {
            continue;
        };
        let mask = rasterize_shape(&perturbed, params.image_size);
        if shape_is_valid(&mask) {
            return Ok(mask);
        }
    }
    Err(Error::Generation {
        id: String::new(),
        reason: format!("degenerate observer outline after {MAX_RETRIES} attempts"),
    })
}

pub fn generate_observers(
    spec: &ShapeSpec,
    rng: &mut Rng,
    params: &GenParams,
) -> Result<Vec<BinaryMask>> {
    (0..params.n_observers)
        .map(|o| generate_observer(spec, &mut rng.substream(&format!("obs/{o}")), params))
        .collect()
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

/// Separable Gaussian blur, truncated kernel radius `ceil(3 sigma)`,
/// zero-padded borders. `sigma <= 0` is the identity.
fn gaussian_blur(data: &mut [f64], width: usize, height: usize, sigma: f64) {
    if sigma <= 0.0 {
        return;
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel = Vec::with_capacity(2 * radius as usize + 1);
    let denom = 2.0 * sigma * sigma;
    for i in -radius..=radius {
        kernel.push((-(i * i) as f64 / denom).exp());
    }
    let norm: f64 = kernel.iter().sum();
    for k in &mut kernel {
        *k /= norm;
    }

    let mut tmp = vec![0.0f64; data.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sx = x as isize + ki as isize - radius;
                if sx >= 0 && (sx as usize) < width {
                    acc += k * data[y * width + sx as usize];
                }
            }
            tmp[y * width + x] = acc;
        }
    }
    for x in 0..width {
        for y in 0..height {
            let mut acc = 0.0;
            for (ki, k) in kernel.iter().enumerate() {
                let sy = y as isize + ki as isize - radius;
                if sy >= 0 && (sy as usize) < height {
                    acc += k * tmp[sy as usize * width + x];
                }
            }
            data[y * width + x] = acc;
        }
    }
}

/// Adds i.i.d. Gaussian noise with std `factor * (max - min)` in row-major
/// draw order, then clamps to `[0, 255]`.
fn add_noise_and_clamp(data: &mut [f64], factor: f64, rng: &mut Rng) {
    if factor > 0.0 {
        let mut mn = f64::INFINITY;
        let mut mx = f64::NEG_INFINITY;
        for v in data.iter() {
            mn = mn.min(*v);
            mx = mx.max(*v);
        }
        let std = factor * (mx - mn);
        if std > 0.0 {
            for v in data.iter_mut() {
                *v += rng.normal(0.0, std);
            }
        }
    }
    for v in data.iter_mut() {
        *v = v.clamp(0.0, 255.0);
    }
}

fn to_image(data: Vec<f64>, width: usize, height: usize) -> GrayImage {
    GrayImage::new(width, height, data.into_iter().map(|v| v as f32).collect())
        .expect("render produced out-of-range intensity")
}

/// Low-entropy rendering with explicit parameters (test hook: pass
/// `sigma <= 0` to skip the blur and `noise_factor = 0` to skip the noise).
pub fn render_unperturbed_with(
    gt: &BinaryMask,
    max_value: f64,
    sigma: f64,
    noise_factor: f64,
    rng: &mut Rng,
) -> GrayImage {
    let (w, h) = (gt.width(), gt.height());
    let mut data: Vec<f64> =
        gt.as_slice().iter().map(|fg| if *fg { max_value } else { 0.0 }).collect();
    gaussian_blur(&mut data, w, h, sigma);
    add_noise_and_clamp(&mut data, noise_factor, rng);
    to_image(data, w, h)
}

/// Low-entropy rendering: ground truth at a random value, random blur, noise.
/// Draw order: max value, sigma, then the noise grid.
pub fn render_unperturbed(gt: &BinaryMask, rng: &mut Rng, params: &GenParams) -> GrayImage {
    let max_value = rng.uniform_in(params.max_value_range.0, params.max_value_range.1);
    let sigma = rng.uniform_in(params.blur_sigma_range.0, params.blur_sigma_range.1);
    render_unperturbed_with(gt, max_value, sigma, params.noise_factor, rng)
}

/// High-entropy rendering with explicit parameters (test hook: `lambda = 0`
/// disables the decay, `sigma <= 0` the blur, `noise_factor = 0` the noise).
pub fn render_perturbed_with(
    gt: &BinaryMask,
    observers: &[BinaryMask],
    obs_weights: &[f64],
    max_value: f64,
    lambda: f64,
    sigma: f64,
    noise_factor: f64,
    rng: &mut Rng,
) -> GrayImage {
    assert_eq!(observers.len(), obs_weights.len());
    let (w, h) = (gt.width(), gt.height());
    // observer annotations summed onto the ground truth
    let mut data: Vec<f64> =
        gt.as_slice().iter().map(|fg| if *fg { 255.0 } else { 0.0 }).collect();
    for (obs, c) in observers.iter().zip(obs_weights) {
        for (v, fg) in data.iter_mut().zip(obs.as_slice()) {
            if *fg {
                *v += *c;
            }
        }
    }
    // normalize by the accumulated maximum, then scale to the random value
    let mx = data.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if mx > 0.0 {
        for v in data.iter_mut() {
            *v = *v / mx * max_value;
        }
    }
    // rightward exponential decay per column
    if lambda != 0.0 {
        for y in 0..h {
            for x in 0..w {
                data[y * w + x] *= (-lambda * x as f64 / w as f64).exp();
            }
        }
    }
    gaussian_blur(&mut data, w, h, sigma);
    add_noise_and_clamp(&mut data, noise_factor, rng);
    to_image(data, w, h)
}

/// High-entropy rendering. Draw order: one weight per observer, max value,
/// decay rate, sigma, then the noise grid.
pub fn render_perturbed(
    gt: &BinaryMask,
    observers: &[BinaryMask],
    rng: &mut Rng,
    params: &GenParams,
) -> GrayImage {
    let weights: Vec<f64> = (0..observers.len())
        .map(|_| rng.uniform_in(params.obs_intensity_range.0, params.obs_intensity_range.1))
        .collect();
    let max_value = rng.uniform_in(params.max_value_range.0, params.max_value_range.1);
    let lambda = rng.uniform_in(params.decay_range.0, params.decay_range.1);
    let sigma = rng.uniform_in(params.blur_sigma_range.0, params.blur_sigma_range.1);
    render_perturbed_with(
        gt,
        observers,
        &weights,
        max_value,
        lambda,
        sigma,
        params.noise_factor,
        rng,
    )
}

// ---------------------------------------------------------------------------
// Dataset assembly and manifest
// ---------------------------------------------------------------------------

pub fn sample_id(index: usize) -> String {
    format!("{index:03}")
}

/// Generates one sample from its dedicated substream.
pub fn generate_sample(id: &str, root: &Rng, params: &GenParams) -> Result<SyntheticSample> {
    let stream = root.substream(&format!("sample/{id}"));
    let with_id = |e: Error| match e {
        Error::Generation { reason, .. } => Error::Generation { id: id.to_string(), reason },
        other => other,
    };
    let (spec, gt) = generate_gt(&mut stream.substream("gt"), params).map_err(with_id)?;
    let observers =
        generate_observers(&spec, &mut stream.substream("observers"), params).map_err(with_id)?;
    let image_unperturbed =
        render_unperturbed(&gt, &mut stream.substream("unperturbed"), params);
    let image_perturbed =
        render_perturbed(&gt, &observers, &mut stream.substream("perturbed"), params);
    Ok(SyntheticSample {
        id: id.to_string(),
        gt,
        observers,
        image_unperturbed,
        image_perturbed,
    })
}

/// Generates the whole dataset in memory. Samples use independent substreams
/// indexed by id, so the result is independent of generation order.
pub fn generate_samples(params: &GenParams) -> Result<Vec<SyntheticSample>> {
    params.validate()?;
    let root = Rng::new(params.seed);
    (0..params.count).map(|i| generate_sample(&sample_id(i), &root, params)).collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestSample {
    pub id: String,
    pub gt: String,
    pub observers: Vec<String>,
    pub unperturbed: String,
    pub perturbed: String,
}

/// Dataset index written next to the rasters; all paths relative to it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub params: GenParams,
    pub samples: Vec<ManifestSample>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("manifest: {e}")))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("manifest serialization");
        fs::write(path, text)?;
        Ok(())
    }

    pub fn find(&self, id: &str) -> Result<&ManifestSample> {
        self.samples
            .iter()
            .find(|s| s.id == id)
            .ok_or_else(|| Error::Config(format!("sample {id:?} not in manifest")))
    }

    /// Loads one sample's rasters; `dir` is the manifest's directory.
    pub fn load_sample(&self, dir: &Path, id: &str) -> Result<SyntheticSample> {
        let entry = self.find(id)?;
        let gt = read_pgm_mask(&dir.join(&entry.gt))?;
        let observers = entry
            .observers
            .iter()
            .map(|p| read_pgm_mask(&dir.join(p)))
            .collect::<Result<Vec<_>>>()?;
        let image_unperturbed = read_pgm(&dir.join(&entry.unperturbed))?;
        let image_perturbed = read_pgm(&dir.join(&entry.perturbed))?;
        Ok(SyntheticSample { id: id.to_string(), gt, observers, image_unperturbed, image_perturbed })
    }
}

/// Writes one sample's rasters under `dir/<id>/` and returns its manifest row.
fn write_sample(sample: &SyntheticSample, dir: &Path) -> Result<ManifestSample> {
    let sub = dir.join(&sample.id);
    fs::create_dir_all(&sub)?;
    let rel = |name: &str| format!("{}/{name}", sample.id);
    write_pgm_mask(&sample.gt, &sub.join("gt.pgm"))?;
    let mut observers = Vec::with_capacity(sample.observers.len());
    for (k, obs) in sample.observers.iter().enumerate() {
        let name = format!("obs{k}.pgm");
        write_pgm_mask(obs, &sub.join(&name))?;
        observers.push(rel(&name));
    }
    write_pgm(&sample.image_unperturbed, &sub.join("unperturbed.pgm"))?;
    write_pgm(&sample.image_perturbed, &sub.join("perturbed.pgm"))?;
    Ok(ManifestSample {
        id: sample.id.clone(),
        gt: rel("gt.pgm"),
        observers,
        unperturbed: rel("unperturbed.pgm"),
        perturbed: rel("perturbed.pgm"),
    })
}

/// Generates the dataset and writes rasters plus `manifest.json` to `dir`.
pub fn generate_dataset(params: &GenParams, dir: &Path) -> Result<Manifest> {
    let samples = generate_samples(params)?;
    fs::create_dir_all(dir)?;
    let rows = samples
        .iter()
        .map(|s| write_sample(s, dir))
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest { seed: params.seed, params: params.clone(), samples: rows };
    manifest.save(&dir.join("manifest.json"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::dice;

    fn disk_mask(size: usize, radius: f64) -> BinaryMask {
        let c = size as f64 / 2.0;
        let mut m = BinaryMask::filled(size, size, false);
        for y in 0..size {
            for x in 0..size {
                let dx = x as f64 + 0.5 - c;
                let dy = y as f64 + 0.5 - c;
                if (dx * dx + dy * dy).sqrt() <= radius {
                    m.set(x, y, true);
                }
            }
        }
        m
    }

    fn zero_jitter_spec(size: usize) -> ShapeSpec {
        let mut points = [ControlPoint { angle_deg: 0.0, radius_factor: 1.0 }; N_CONTROL_POINTS];
        for (k, p) in points.iter_mut().enumerate() {
            p.angle_deg = k as f64 * 45.0;
        }
        ShapeSpec::new((size as f64 / 2.0, size as f64 / 2.0), size as f64 / 4.0, points).unwrap()
    }

    #[test]
    fn zero_jitter_approximates_disk() {
        let size = 128;
        let mask = rasterize_shape(&zero_jitter_spec(size), size);
        let ideal = disk_mask(size, size as f64 / 4.0);
        let d = dice(&mask, &ideal).unwrap();
        assert!(d >= 0.98, "dice vs ideal disk = {d}");
    }

    #[test]
    fn gt_is_deterministic() {
        let params = GenParams::default();
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        let (_, m1) = generate_gt(&mut a, &params).unwrap();
        let (_, m2) = generate_gt(&mut b, &params).unwrap();
        assert_eq!(m1, m2);
    }

    #[test]
    fn gt_foreground_fraction_in_band() {
        let params = GenParams::default();
        let root = Rng::new(7);
        for i in 0..50 {
            let (_, mask) = generate_gt(&mut root.substream(&format!("t/{i}")), &params).unwrap();
            let frac = mask.count_foreground() as f64 / (128.0 * 128.0);
            assert!(frac > 0.02 && frac < 0.5, "foreground fraction {frac}");
        }
    }

    #[test]
    fn observer_zero_jitter_equals_gt() {
        let size = 128;
        let spec = zero_jitter_spec(size);
        let gt = rasterize_shape(&spec, size);
        let mut params = GenParams::default();
        params.obs_angle_jitter_deg = 0.0;
        params.obs_radius_jitter = 0.0;
        let mut rng = Rng::new(1);
        let observers = generate_observers(&spec, &mut rng, &params).unwrap();
        for obs in observers {
            assert_eq!(obs, gt);
        }
    }

    #[test]
    fn observer_difference_lies_right_of_center() {
        let params = GenParams::default();
        let root = Rng::new(3);
        for i in 0..20 {
            let stream = root.substream(&format!("s/{i}"));
            let (spec, gt) = generate_gt(&mut stream.substream("gt"), &params).unwrap();
            let observers =
                generate_observers(&spec, &mut stream.substream("obs"), &params).unwrap();
            for obs in &observers {
                let mut sum_x = 0.0;
                let mut count = 0usize;
                for y in 0..gt.height() {
                    for x in 0..gt.width() {
                        if obs.get(x, y) != gt.get(x, y) {
                            sum_x += x as f64 + 0.5;
                            count += 1;
                        }
                    }
                }
                if count > 0 {
                    assert!(sum_x / count as f64 > spec.center.0);
                }
            }
        }
    }

    #[test]
    fn unperturbed_degenerate_pipeline_is_scaled_gt() {
        let params = GenParams::default();
        let (_, gt) = generate_gt(&mut Rng::new(9), &params).unwrap();
        let img = render_unperturbed_with(&gt, 200.0, 0.0, 0.0, &mut Rng::new(0));
        for (v, fg) in img.as_slice().iter().zip(gt.as_slice()) {
            assert_eq!(*v, if *fg { 200.0 } else { 0.0 });
        }
    }

    #[test]
    fn perturbed_degenerate_pipeline_is_scaled_gt() {
        let params = GenParams::default();
        let (_, gt) = generate_gt(&mut Rng::new(9), &params).unwrap();
        let observers = vec![gt.clone(); 5];
        let img = render_perturbed_with(
            &gt,
            &observers,
            &[100.0; 5],
            200.0,
            0.0,
            0.0,
            0.0,
            &mut Rng::new(0),
        );
        for (v, fg) in img.as_slice().iter().zip(gt.as_slice()) {
            assert_eq!(*v, if *fg { 200.0 } else { 0.0 });
        }
    }

    #[test]
    fn rendered_intensities_in_range() {
        let mut params = GenParams::default();
        params.image_size = 64;
        params.count = 3;
        params.seed = 5;
        for s in generate_samples(&params).unwrap() {
            for img in [&s.image_unperturbed, &s.image_perturbed] {
                for v in img.as_slice() {
                    assert!((0.0..=255.0).contains(v));
                }
            }
        }
    }

    #[test]
    fn perturbed_render_deterministic() {
        let mut params = GenParams::default();
        params.image_size = 64;
        params.count = 1;
        params.seed = 11;
        let a = generate_samples(&params).unwrap();
        let b = generate_samples(&params).unwrap();
        assert_eq!(a[0].image_perturbed, b[0].image_perturbed);
        assert_eq!(a[0].image_unperturbed, b[0].image_unperturbed);
    }

    #[test]
    fn dataset_writes_files_and_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let mut params = GenParams::default();
        params.image_size = 32;
        params.count = 2;
        params.seed = 13;
        let manifest = generate_dataset(&params, dir.path()).unwrap();
        assert_eq!(manifest.samples.len(), 2);
        let loaded = Manifest::load(&dir.path().join("manifest.json")).unwrap();
        assert_eq!(loaded.samples.len(), 2);
        let sample = loaded.load_sample(dir.path(), "001").unwrap();
        let generated = &generate_samples(&params).unwrap()[1];
        assert_eq!(sample.gt, generated.gt);
        assert_eq!(sample.observers, generated.observers);
        // images round-trip through 8-bit quantization
        for (a, b) in sample
            .image_perturbed
            .as_slice()
            .iter()
            .zip(generated.image_perturbed.as_slice())
        {
            assert_eq!(*a, GrayImage::quantize(*b) as f32);
        }
    }

    #[test]
    fn empty_dataset_is_fine() {
        let dir = tempfile::tempdir().unwrap();
        let mut params = GenParams::default();
        params.count = 0;
        let manifest = generate_dataset(&params, dir.path()).unwrap();
        assert!(manifest.samples.is_empty());
    }

    #[test]
    fn manifest_regeneration_identical_bytes() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut params = GenParams::default();
        params.image_size = 32;
        params.count = 1;
        params.seed = 21;
        generate_dataset(&params, dir_a.path()).unwrap();
        generate_dataset(&params, dir_b.path()).unwrap();
        let a = std::fs::read(dir_a.path().join("manifest.json")).unwrap();
        let b = std::fs::read(dir_b.path().join("manifest.json")).unwrap();
        assert_eq!(a, b);
        let ga = std::fs::read(dir_a.path().join("000/perturbed.pgm")).unwrap();
        let gb = std::fs::read(dir_b.path().join("000/perturbed.pgm")).unwrap();
        assert_eq!(ga, gb);
    }
}

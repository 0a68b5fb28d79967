//! Latency-aware collision maps: bird's-eye grids whose cells hold the
//! largest delayed collision probability over ego positions inside the
//! cell, plus classification, PNG rendering and a compact wire format.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::geometry::{Extents, Pose2};
use crate::licp::{licp_seeded, LatencyQuery, SafetyConfig};
use crate::prediction::ObstacleTrack;
use crate::rng::derive_seed;
use crate::{Error, Result};

pub const WIRE_MAGIC: &[u8; 4] = b"LICM";
pub const WIRE_VERSION: u8 = 1;
/// magic + version + width + height + resolution + origin + tau.
pub const WIRE_HEADER_LEN: usize = 4 + 1 + 2 + 2 + 4 + 8 + 4;

/// Cells are pruned when the obstacle mass that could reach them is below
/// `lambda * PRUNE_FACTOR`.
pub const PRUNE_FACTOR: f64 = 1e-3;

/// Grid geometry. Cell `(col, row)` spans
/// `[origin.0 + col * res, origin.0 + (col + 1) * res]` in x and likewise in y;
/// values are stored row-major from the bottom row up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: (f64, f64),
    pub resolution: f64,
    pub width: usize,
    pub height: usize,
}

impl GridSpec {
    pub fn new(origin: (f64, f64), resolution: f64, width: usize, height: usize) -> Result<Self> {
        let s = Self { origin, resolution, width, height };
        s.validate()?;
        Ok(s)
    }

    /// Square grid of side `extent` meters centered on `(cx, cy)`.
    pub fn centered(cx: f64, cy: f64, extent: f64, resolution: f64) -> Result<Self> {
        let n = (extent / resolution).round().max(1.0) as usize;
        let half = 0.5 * n as f64 * resolution;
        Self::new((cx - half, cy - half), resolution, n, n)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.resolution > 0.0 && self.resolution.is_finite()) {
            return Err(Error::InvalidInput(format!("grid resolution must be positive, got {}", self.resolution)));
        }
        if !(self.origin.0.is_finite() && self.origin.1.is_finite()) {
            return Err(Error::NonFinite("grid origin"));
        }
        let max = u16::MAX as usize;
        if self.width == 0 || self.height == 0 || self.width > max || self.height > max {
            return Err(Error::InvalidInput(format!("grid size {}x{} outside 1..=65535", self.width, self.height)));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, col: usize, row: usize) -> usize {
        row * self.width + col
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin.0 + (col as f64 + 0.5) * self.resolution,
            self.origin.1 + (row as f64 + 0.5) * self.resolution,
        )
    }

    /// Probe positions of a cell: the center and four points offset by a
    /// quarter cell diagonally.
    pub fn probes(&self, col: usize, row: usize) -> [(f64, f64); 5] {
        let (cx, cy) = self.cell_center(col, row);
        let q = 0.25 * self.resolution;
        [(cx, cy), (cx - q, cy - q), (cx + q, cy - q), (cx + q, cy + q), (cx - q, cy + q)]
    }
}

/// Per-cell risk values at one latency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskGrid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
    /// Latency the grid was built for, seconds.
    pub tau: f64,
    /// Simulation time of the snapshot, seconds. Not carried on the wire.
    pub timestamp: f64,
}

impl RiskGrid {
    pub fn zeros(spec: GridSpec, tau: f64, timestamp: f64) -> Self {
        Self { values: vec![0.0; spec.len()], spec, tau, timestamp }
    }

    pub fn new(spec: GridSpec, values: Vec<f64>, tau: f64, timestamp: f64) -> Result<Self> {
        spec.validate()?;
        if values.len() != spec.len() {
            return Err(Error::InvalidInput(format!("{} values for a {}-cell grid", values.len(), spec.len())));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("grid values must lie in [0, 1]".into()));
        }
        Ok(Self { spec, values, tau, timestamp })
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.values[self.spec.index(col, row)]
    }

    /// Number of cells classified unsafe at `lambda`.
    pub fn unsafe_count(&self, lambda: f64) -> usize {
        self.values.iter().filter(|v| **v >= lambda).count()
    }

    /// The grid as it looks after a trip through the wire format.
    pub fn to_wire_precision(&self) -> Self {
        let f = |v: f64| v as f32 as f64;
        Self {
            spec: GridSpec {
                origin: (f(self.spec.origin.0), f(self.spec.origin.1)),
                resolution: f(self.spec.resolution),
                width: self.spec.width,
                height: self.spec.height,
            },
            values: self.values.iter().map(|v| dequantize(quantize(*v))).collect(),
            tau: f(self.tau),
            timestamp: 0.0,
        }
    }

    /// Binary payload: 25-byte little-endian header then one `u16` per cell.
    pub fn to_wire(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(WIRE_HEADER_LEN + 2 * self.values.len());
        out.extend_from_slice(WIRE_MAGIC);
        out.push(WIRE_VERSION);
        out.extend_from_slice(&(self.spec.width as u16).to_le_bytes());
        out.extend_from_slice(&(self.spec.height as u16).to_le_bytes());
        out.extend_from_slice(&(self.spec.resolution as f32).to_le_bytes());
        out.extend_from_slice(&(self.spec.origin.0 as f32).to_le_bytes());
        out.extend_from_slice(&(self.spec.origin.1 as f32).to_le_bytes());
        out.extend_from_slice(&(self.tau as f32).to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&quantize(*v).to_le_bytes());
        }
        out
    }

    pub fn from_wire(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < WIRE_HEADER_LEN {
            return Err(Error::Malformed(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if &bytes[0..4] != WIRE_MAGIC {
            return Err(Error::Malformed("bad magic".into()));
        }
        if bytes[4] != WIRE_VERSION {
            return Err(Error::Malformed(format!("unsupported version {}", bytes[4])));
        }
        let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
        let f32_at = |i: usize| f32::from_le_bytes([bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]]) as f64;
        let width = u16_at(5) as usize;
        let height = u16_at(7) as usize;
        let spec = GridSpec { origin: (f32_at(13), f32_at(17)), resolution: f32_at(9), width, height };
        spec.validate().map_err(|e| Error::Malformed(e.to_string()))?;
        let tau = f32_at(21);
        if !tau.is_finite() {
            return Err(Error::Malformed("non-finite tau".into()));
        }
        let expected = WIRE_HEADER_LEN + 2 * spec.len();
        if bytes.len() != expected {
            return Err(Error::Malformed(format!("expected {expected} bytes, got {}", bytes.len())));
        }
        let values = (0..spec.len()).map(|i| dequantize(u16_at(WIRE_HEADER_LEN + 2 * i))).collect();
        Ok(Self { spec, values, tau, timestamp: 0.0 })
    }
}

fn quantize(v: f64) -> u16 {
    (v.clamp(0.0, 1.0) * 65535.0).round() as u16
}

fn dequantize(q: u16) -> f64 {
    q as f64 / 65535.0
}

/// Heading and size of the ego used at every probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoTemplate {
    /// Ego heading at the effect time, radians.
    pub heading: f64,
    pub extents: Extents,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LicomConfig {
    pub safety: SafetyConfig,
    pub pruning: bool,
}

impl Default for LicomConfig {
    fn default() -> Self {
        Self { safety: SafetyConfig::default(), pruning: true }
    }
}

/// Upper bound on the probability that the obstacle center lands in the
/// axis-aligned box, from the per-axis marginals of the belief at the
/// effect time.
fn mass_bound(track: &ObstacleTrack, tau: f64, lo: (f64, f64), hi: (f64, f64)) -> Result<f64> {
    let belief = track.belief.propagate(tau, &track.motion)?;
    let interval = |mu: f64, var: f64, a: f64, b: f64| -> f64 {
        if var <= 0.0 {
            return if (a..=b).contains(&mu) { 1.0 } else { 0.0 };
        }
        let s = (2.0 * var).sqrt();
        (0.5 * (libm::erf((b - mu) / s) - libm::erf((a - mu) / s))).max(0.0)
    };
    Ok(belief
        .modes
        .iter()
        .map(|m| {
            let px = interval(m.mean.x, m.covariance[(0, 0)], lo.0, hi.0);
            let py = interval(m.mean.y, m.covariance[(1, 1)], lo.1, hi.1);
            m.weight * px.min(py)
        })
        .sum())
}

/// Builds the risk map for an obstacle at latency `tau`.
///
/// Each cell takes the maximum delayed collision probability over its five
/// probe positions, all at the template heading. With pruning enabled a
/// cell is left at zero when even the obstacle mass within collision reach
/// of the cell is below `lambda * 1e-3`. Cell `i` draws from streams keyed
/// by `(seed, i)`, so neighbouring cells and repeated sweeps share random
/// numbers.
pub fn compute_licom(
    spec: &GridSpec,
    ego: &EgoTemplate,
    obstacle: Option<&ObstacleTrack>,
    tau: f64,
    issue_time: f64,
    config: &LicomConfig,
    seed: u64,
) -> Result<RiskGrid> {
    spec.validate()?;
    config.safety.validate()?;
    if !(tau >= 0.0) || !tau.is_finite() {
        return Err(Error::InvalidInput(format!("tau must be finite and >= 0, got {tau}")));
    }
    let Some(track) = obstacle else {
        return Ok(RiskGrid::zeros(*spec, tau, issue_time));
    };
    let reach = ego.extents.circumradius() + track.observed.extents.circumradius() + 0.25 * spec.resolution;
    let floor = config.safety.lambda * PRUNE_FACTOR;
    let rows: Vec<Result<Vec<f64>>> = (0..spec.height)
        .into_par_iter()
        .map(|row| {
            let mut out = Vec::with_capacity(spec.width);
            for col in 0..spec.width {
                let (cx, cy) = spec.cell_center(col, row);
                if config.pruning
                    && mass_bound(track, tau, (cx - reach, cy - reach), (cx + reach, cy + reach))? < floor
                {
                    out.push(0.0);
                    continue;
                }
                let cell_seed = derive_seed(seed, &[spec.index(col, row) as u64]);
                let mut best = 0.0f64;
                for (px, py) in spec.probes(col, row) {
                    let q = LatencyQuery {
                        issue_time,
                        latency: tau,
                        ego_at_effect: Pose2::new(px, py, ego.heading),
                        ego_extents: ego.extents,
                        belief: track.belief.clone(),
                        motion: track.motion,
                        obstacle_extents: track.observed.extents,
                    };
                    best = best.max(licp_seeded(&q, &config.safety, cell_seed)?.value);
                }
                out.push(best);
            }
            Ok(out)
        })
        .collect();
    let mut values = Vec::with_capacity(spec.len());
    for r in rows {
        values.extend(r?);
    }
    Ok(RiskGrid { spec: *spec, values, tau, timestamp: issue_time })
}

/// Unsafe mask: `true` where the value is at or above `lambda`.
pub fn classify(grid: &RiskGrid, lambda: f64) -> Vec<bool> {
    grid.values.iter().map(|v| *v >= lambda).collect()
}

/// Color of a cell: green ramp below `lambda`, red ramp at or above.
pub fn cell_color(value: f64, lambda: f64) -> [u8; 3] {
    if value >= lambda {
        let span = (1.0 - lambda).max(1e-12);
        let t = ((value - lambda) / span).clamp(0.0, 1.0);
        [255, (110.0 * (1.0 - t)).round() as u8, (60.0 * (1.0 - t)).round() as u8]
    } else {
        let t = if lambda > 0.0 { (value / lambda).clamp(0.0, 1.0) } else { 0.0 };
        [(150.0 * t).round() as u8, 190, (90.0 * (1.0 - t)).round() as u8]
    }
}

/// PNG heatmap with `px_per_cell` square pixels per cell. Image row 0 is the
/// top (highest y) grid row.
pub fn render_heatmap(grid: &RiskGrid, lambda: f64, px_per_cell: u32) -> Result<Vec<u8>> {
    let scale = px_per_cell.max(1) as usize;
    let (w, h) = (grid.spec.width * scale, grid.spec.height * scale);
    let mut pixels = vec![0u8; w * h * 3];
    for row in 0..grid.spec.height {
        let img_row = grid.spec.height - 1 - row;
        for col in 0..grid.spec.width {
            let c = cell_color(grid.get(col, row), lambda);
            for dy in 0..scale {
                let y = img_row * scale + dy;
                for dx in 0..scale {
                    let i = (y * w + col * scale + dx) * 3;
                    pixels[i..i + 3].copy_from_slice(&c);
                }
            }
        }
    }
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, w as u32, h as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header()?;
        writer.write_image_data(&pixels)?;
    }
    Ok(out)
}

pub fn write_heatmap(grid: &RiskGrid, lambda: f64, px_per_cell: u32, path: &Path) -> Result<()> {
    let bytes = render_heatmap(grid, lambda, px_per_cell)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

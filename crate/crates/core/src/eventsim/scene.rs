//! Synthetic radiance fields shared by both sensor models.

use serde::{Deserialize, Serialize};

use crate::numerics::Rng;

/// Positive radiance `L(x, y, t)` over a fixed pixel grid and time span.
///
/// Coordinates are pixel indices; the field is sampled at pixel centers
/// `(x + 0.5, y + 0.5)`. Time is in microseconds and may be fractional.
pub trait RadianceField: Sync {
    fn width(&self) -> usize;
    fn height(&self) -> usize;
    fn duration_us(&self) -> u64;
    fn radiance(&self, x: usize, y: usize, t_us: f64) -> f64;

    fn log_radiance(&self, x: usize, y: usize, t_us: f64) -> f64 {
        self.radiance(x, y, t_us).ln()
    }
}

/// Scripted scene, deserialized from `{"type": "...", ...}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Scene {
    MovingBox(MovingBox),
    GaussianBlob(GaussianBlob),
    StaticTexture(StaticTexture),
}

impl Default for Scene {
    fn default() -> Self {
        Scene::MovingBox(MovingBox::default())
    }
}

impl Scene {
    pub fn as_field(&self) -> &dyn RadianceField {
        match self {
            Scene::MovingBox(s) => s,
            Scene::GaussianBlob(s) => s,
            Scene::StaticTexture(s) => s,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Scene::MovingBox(_) => "moving_box",
            Scene::GaussianBlob(_) => "gaussian_blob",
            Scene::StaticTexture(_) => "static_texture",
        }
    }
}

/// Bright square translating at constant velocity over a uniform background.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MovingBox {
    pub width: usize,
    pub height: usize,
    pub duration_us: u64,
    pub seed: u64,
    pub box_size: f64,
    pub start_x: f64,
    pub start_y: f64,
    /// Pixels per second.
    pub velocity_x: f64,
    pub velocity_y: f64,
    pub background: f64,
    pub foreground: f64,
}

impl Default for MovingBox {
    fn default() -> Self {
        Self {
            width: 64,
            height: 48,
            duration_us: 100_000,
            seed: 0,
            box_size: 8.0,
            start_x: 8.0,
            start_y: 20.0,
            velocity_x: 200.0,
            velocity_y: 0.0,
            background: 1.0,
            foreground: 4.0,
        }
    }
}

impl MovingBox {
    pub fn left_top(&self, t_us: f64) -> (f64, f64) {
        let s = t_us * 1e-6;
        (
            self.start_x + self.velocity_x * s,
            self.start_y + self.velocity_y * s,
        )
    }
}

impl RadianceField for MovingBox {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn duration_us(&self) -> u64 {
        self.duration_us
    }
    fn radiance(&self, x: usize, y: usize, t_us: f64) -> f64 {
        let (left, top) = self.left_top(t_us);
        let (cx, cy) = (x as f64 + 0.5, y as f64 + 0.5);
        let inside = cx >= left && cx < left + self.box_size && cy >= top && cy < top + self.box_size;
        if inside {
            self.foreground
        } else {
            self.background
        }
    }
}

/// Isotropic Gaussian bump moving at constant velocity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GaussianBlob {
    pub width: usize,
    pub height: usize,
    pub duration_us: u64,
    pub seed: u64,
    pub sigma: f64,
    pub start_x: f64,
    pub start_y: f64,
    pub velocity_x: f64,
    pub velocity_y: f64,
    pub background: f64,
    pub amplitude: f64,
}

impl Default for GaussianBlob {
    fn default() -> Self {
        Self {
            width: 64,
            height: 48,
            duration_us: 100_000,
            seed: 0,
            sigma: 3.0,
            start_x: 12.0,
            start_y: 24.0,
            velocity_x: 300.0,
            velocity_y: 0.0,
            background: 1.0,
            amplitude: 3.0,
        }
    }
}

impl RadianceField for GaussianBlob {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn duration_us(&self) -> u64 {
        self.duration_us
    }
    fn radiance(&self, x: usize, y: usize, t_us: f64) -> f64 {
        let s = t_us * 1e-6;
        let dx = x as f64 + 0.5 - (self.start_x + self.velocity_x * s);
        let dy = y as f64 + 0.5 - (self.start_y + self.velocity_y * s);
        let r2 = dx * dx + dy * dy;
        self.background + self.amplitude * (-r2 / (2.0 * self.sigma * self.sigma)).exp()
    }
}

/// Time-invariant per-pixel random texture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StaticTexture {
    pub width: usize,
    pub height: usize,
    pub duration_us: u64,
    pub seed: u64,
    pub mean: f64,
    /// Texture values are uniform in `mean ± amplitude`; must stay below `mean`.
    pub amplitude: f64,
}

impl Default for StaticTexture {
    fn default() -> Self {
        Self {
            width: 64,
            height: 48,
            duration_us: 100_000,
            seed: 0,
            mean: 2.0,
            amplitude: 1.0,
        }
    }
}

impl RadianceField for StaticTexture {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn duration_us(&self) -> u64 {
        self.duration_us
    }
    fn radiance(&self, x: usize, y: usize, _t_us: f64) -> f64 {
        let cell = (y * self.width + x) as u64;
        let mut rng = Rng::derive(self.seed, cell);
        self.mean + self.amplitude * (2.0 * rng.next_f64() - 1.0)
    }
}

/// Spatially uniform field whose log-radiance changes linearly from
/// `base_log` to `base_log + total_change` over the duration.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearLogRamp {
    pub width: usize,
    pub height: usize,
    pub duration_us: u64,
    pub base_log: f64,
    pub total_change: f64,
}

impl RadianceField for LinearLogRamp {
    fn width(&self) -> usize {
        self.width
    }
    fn height(&self) -> usize {
        self.height
    }
    fn duration_us(&self) -> u64 {
        self.duration_us
    }
    fn radiance(&self, x: usize, y: usize, t_us: f64) -> f64 {
        self.log_radiance(x, y, t_us).exp()
    }
    fn log_radiance(&self, _x: usize, _y: usize, t_us: f64) -> f64 {
        self.base_log + self.total_change * (t_us / self.duration_us as f64)
    }
}

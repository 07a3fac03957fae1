//! Frame-camera integration and threshold-crossing event generation.

#[cfg(feature = "parallel")]
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scene::RadianceField;
use crate::error::{Error, Result};
use crate::numerics::Mat;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub t_us: u64,
    pub x: u32,
    pub y: u32,
    /// `+1` (ON) or `-1` (OFF).
    pub polarity: i8,
}

impl Event {
    fn order_key(&self) -> (u64, u32, u32) {
        (self.t_us, self.y, self.x)
    }
}

/// Events sorted by `(t_us, y, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    pub width: usize,
    pub height: usize,
    pub duration_us: u64,
    pub contrast_threshold: f64,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(
        width: usize,
        height: usize,
        duration_us: u64,
        contrast_threshold: f64,
        mut events: Vec<Event>,
    ) -> Result<Self> {
        for e in &events {
            if e.x as usize >= width || e.y as usize >= height || e.t_us > duration_us {
                return Err(Error::Range(format!(
                    "event at ({}, {}, t={}) outside {width}x{height} over {duration_us} us",
                    e.x, e.y, e.t_us
                )));
            }
            if e.polarity != 1 && e.polarity != -1 {
                return Err(Error::Argument(format!("polarity {} not in {{-1, 1}}", e.polarity)));
            }
        }
        events.sort_by_key(Event::order_key);
        Ok(Self {
            width,
            height,
            duration_us,
            contrast_threshold,
            events,
        })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RgbFrame {
    pub width: usize,
    pub height: usize,
    pub t_us: u64,
    pub exposure_us: u64,
    /// Integrated radiance, rows indexed by `y`.
    pub intensity: Mat,
}

/// Integrates the field over `[t_us - exposure_us, t_us]` with the midpoint rule.
pub fn integrate_frame(
    field: &dyn RadianceField,
    t_us: u64,
    exposure_us: u64,
    substeps: usize,
) -> Result<RgbFrame> {
    if exposure_us == 0 {
        return Err(Error::Argument("exposure must be positive".into()));
    }
    if substeps == 0 {
        return Err(Error::Argument("substeps must be at least 1".into()));
    }
    if t_us < exposure_us || t_us > field.duration_us() {
        return Err(Error::Range(format!(
            "exposure window [{}, {t_us}] outside field duration [0, {}]",
            t_us as i64 - exposure_us as i64,
            field.duration_us()
        )));
    }
    let start = (t_us - exposure_us) as f64;
    let step = exposure_us as f64 / substeps as f64;
    let times: Vec<f64> = (0..substeps).map(|k| start + (k as f64 + 0.5) * step).collect();
    let intensity = Mat::from_fn(field.height(), field.width(), |y, x| {
        times.iter().map(|&t| field.radiance(x, y, t) * step).sum()
    });
    Ok(RgbFrame {
        width: field.width(),
        height: field.height(),
        t_us,
        exposure_us,
        intensity,
    })
}

/// Scans every pixel at `dt_sample_us` intervals and emits an event each time
/// log-radiance departs from the pixel's reference level by at least
/// `threshold_c`; the reference then moves by exactly `±threshold_c`.
pub fn trigger_events(
    field: &dyn RadianceField,
    threshold_c: f64,
    dt_sample_us: u64,
) -> Result<EventStream> {
    if !(threshold_c > 0.0) {
        return Err(Error::Argument(format!("contrast threshold must be positive, got {threshold_c}")));
    }
    if dt_sample_us == 0 {
        return Err(Error::Argument("sampling interval must be at least 1 us".into()));
    }
    let (w, h, duration) = (field.width(), field.height(), field.duration_us());
    let samples = duration / dt_sample_us;

    let rows = 0..h;
    #[cfg(feature = "parallel")]
    let rows = rows.into_par_iter();
    let per_row: Vec<Result<Vec<Event>>> = rows
        .map(|y| {
            let mut out = Vec::new();
            for x in 0..w {
                let mut reference = checked_log(field, x, y, 0)?;
                for k in 1..=samples {
                    let t = k * dt_sample_us;
                    let level = checked_log(field, x, y, t)?;
                    while level - reference >= threshold_c {
                        reference += threshold_c;
                        out.push(Event { t_us: t, x: x as u32, y: y as u32, polarity: 1 });
                    }
                    while reference - level >= threshold_c {
                        reference -= threshold_c;
                        out.push(Event { t_us: t, x: x as u32, y: y as u32, polarity: -1 });
                    }
                }
            }
            Ok(out)
        })
        .collect();

    let mut events = Vec::new();
    for row in per_row {
        events.extend(row?);
    }
    // stable: events of one pixel at one timestamp keep their emission order
    events.sort_by_key(Event::order_key);
    Ok(EventStream {
        width: w,
        height: h,
        duration_us: duration,
        contrast_threshold: threshold_c,
        events,
    })
}

fn checked_log(field: &dyn RadianceField, x: usize, y: usize, t: u64) -> Result<f64> {
    let l = field.log_radiance(x, y, t as f64);
    if !l.is_finite() {
        return Err(Error::Numeric(format!(
            "radiance at ({x}, {y}, t={t}) is not positive and finite"
        )));
    }
    Ok(l)
}

/// Signed polarity accumulation over a time window, optionally split into
/// uniform temporal bins.
#[derive(Clone, Debug, PartialEq)]
pub struct EventFrame {
    pub width: usize,
    pub height: usize,
    pub window: (u64, u64),
    /// Sum over all bins.
    pub counts: Mat,
    /// One signed map per temporal bin.
    pub bins: Vec<Mat>,
    /// Events that fell inside the window.
    pub event_count: usize,
}

/// Events with `t0 <= t < t1` are accumulated; an event exactly at `t1` is
/// included only when `t1` is the stream's end time.
pub fn accumulate_event_frame(stream: &EventStream, window: (u64, u64), bins: usize) -> Result<EventFrame> {
    let (t0, t1) = window;
    if bins == 0 {
        return Err(Error::Argument("bins must be at least 1".into()));
    }
    if t0 > t1 || t1 > stream.duration_us {
        return Err(Error::Range(format!(
            "window [{t0}, {t1}] outside stream duration [0, {}]",
            stream.duration_us
        )));
    }
    let mut maps = vec![Mat::zeros(stream.height, stream.width); bins];
    let span = t1 - t0;
    let mut event_count = 0;
    for e in &stream.events {
        let inside = e.t_us >= t0 && (e.t_us < t1 || (e.t_us == t1 && t1 == stream.duration_us));
        if !inside || span == 0 {
            continue;
        }
        let b = (((e.t_us - t0) as u128 * bins as u128) / span as u128).min(bins as u128 - 1) as usize;
        maps[b][(e.y as usize, e.x as usize)] += f64::from(e.polarity);
        event_count += 1;
    }
    let mut counts = Mat::zeros(stream.height, stream.width);
    for m in &maps {
        for (c, v) in counts.as_mut_slice().iter_mut().zip(m.as_slice()) {
            *c += v;
        }
    }
    Ok(EventFrame {
        width: stream.width,
        height: stream.height,
        window,
        counts,
        bins: maps,
        event_count,
    })
}

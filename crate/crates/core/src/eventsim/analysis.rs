//! Sampling asymmetry between the two sensors and the modality-analysis
//! metrics (dynamic-edge IoU, co-occurrence texture contrast).

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::scene::RadianceField;
use super::sensor::{trigger_events, EventStream};
use crate::error::{Error, Result};
use crate::numerics::Mat;

/// Temporal resolution, latency, density and redundancy of both sensors.
///
/// `dt_rgb_us` is `1e6 / f` truncated to whole microseconds. The event
/// sensor's resolution and latency are both one scan interval of the
/// simulator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymmetryReport {
    pub dt_rgb_us: u64,
    pub tau_rgb_us: u64,
    pub dt_event_us: u64,
    pub tau_event_us: u64,
    pub d_rgb: usize,
    pub d_event_mean: f64,
    pub r_rgb: f64,
    pub r_event: f64,
    pub frame_intervals: usize,
    pub event_count: usize,
}

/// Simulates the event sensor over `field` and reports the asymmetry metrics.
pub fn asymmetry_report(
    field: &dyn RadianceField,
    frame_rate: f64,
    exposure_us: u64,
    threshold_c: f64,
    dt_sample_us: u64,
) -> Result<AsymmetryReport> {
    let stream = trigger_events(field, threshold_c, dt_sample_us)?;
    asymmetry_from_stream(&stream, frame_rate, exposure_us, dt_sample_us)
}

pub fn asymmetry_from_stream(
    stream: &EventStream,
    frame_rate: f64,
    exposure_us: u64,
    dt_sample_us: u64,
) -> Result<AsymmetryReport> {
    if !(frame_rate > 0.0) || !frame_rate.is_finite() {
        return Err(Error::Argument(format!("frame rate must be positive, got {frame_rate}")));
    }
    let dt_rgb_us = (1e6 / frame_rate) as u64;
    if dt_rgb_us == 0 {
        return Err(Error::Argument(format!("frame rate {frame_rate} exceeds 1 MHz")));
    }
    let pixels = stream.width * stream.height;
    let intervals = ((stream.duration_us / dt_rgb_us) as usize).max(1);

    // K(t): distinct active pixels per frame interval
    let mut active: Vec<HashSet<(u32, u32)>> = vec![HashSet::new(); intervals];
    for e in &stream.events {
        let k = ((e.t_us / dt_rgb_us) as usize).min(intervals - 1);
        active[k].insert((e.x, e.y));
    }
    let d_event_mean = active.iter().map(|s| s.len() as f64).sum::<f64>() / intervals as f64;

    Ok(AsymmetryReport {
        dt_rgb_us,
        tau_rgb_us: exposure_us + dt_rgb_us,
        dt_event_us: dt_sample_us,
        tau_event_us: dt_sample_us,
        d_rgb: pixels,
        d_event_mean,
        // every pixel is read out every frame
        r_rgb: 1.0,
        r_event: d_event_mean / pixels as f64,
        frame_intervals: intervals,
        event_count: stream.len(),
    })
}

/// Central-difference gradient magnitude with replicated borders.
pub fn gradient_magnitude(a: &Mat) -> Mat {
    let (h, w) = a.shape();
    Mat::from_fn(h, w, |y, x| {
        let gx = (a[(y, (x + 1).min(w - 1))] - a[(y, x.saturating_sub(1))]) / 2.0;
        let gy = (a[((y + 1).min(h - 1), x)] - a[(y.saturating_sub(1), x)]) / 2.0;
        (gx * gx + gy * gy).sqrt()
    })
}

fn edge_set(a: &Mat, grad_threshold: f64) -> Vec<bool> {
    gradient_magnitude(a)
        .as_slice()
        .iter()
        .map(|&g| g >= grad_threshold)
        .collect()
}

/// IoU of the gradient-threshold edge sets of two maps; 1 when both are empty.
pub fn edge_iou(a: &Mat, b: &Mat, grad_threshold: f64) -> Result<f64> {
    a.check_same_shape(b)?;
    let ea = edge_set(a, grad_threshold);
    let eb = edge_set(b, grad_threshold);
    let inter = ea.iter().zip(&eb).filter(|(x, y)| **x && **y).count();
    let union = ea.iter().zip(&eb).filter(|(x, y)| **x || **y).count();
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Co-occurrence contrast `Σ (i - j)² p(i, j)` for the horizontal neighbour
/// offset, on a min-max quantization to `levels` gray levels.
pub fn texture_contrast(a: &Mat, levels: usize) -> Result<f64> {
    if levels < 2 {
        return Err(Error::Argument(format!("need at least 2 gray levels, got {levels}")));
    }
    let (h, w) = a.shape();
    let (lo, hi) = a
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &v| (l.min(v), u.max(v)));
    if w < 2 || !(hi > lo) {
        return Ok(0.0);
    }
    let quant = |v: f64| (((v - lo) / (hi - lo) * levels as f64) as usize).min(levels - 1);

    let mut glcm = vec![0.0; levels * levels];
    let mut total = 0.0;
    for y in 0..h {
        for x in 0..w - 1 {
            let i = quant(a[(y, x)]);
            let j = quant(a[(y, x + 1)]);
            glcm[i * levels + j] += 1.0;
            glcm[j * levels + i] += 1.0;
            total += 2.0;
        }
    }
    let mut contrast = 0.0;
    for i in 0..levels {
        for j in 0..levels {
            let d = i as f64 - j as f64;
            contrast += d * d * glcm[i * levels + j] / total;
        }
    }
    Ok(contrast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eventsim::scene::{MovingBox, StaticTexture};

    fn boxed(h: usize, w: usize, rows: (usize, usize), cols: (usize, usize)) -> Mat {
        Mat::from_fn(h, w, |y, x| {
            if y >= rows.0 && y < rows.1 && x >= cols.0 && x < cols.1 {
                1.0
            } else {
                0.0
            }
        })
    }

    /// Pixel set adjacent to the box boundary, enumerated geometrically.
    fn box_edges(rows: (usize, usize), cols: (usize, usize)) -> HashSet<(usize, usize)> {
        let mut s = HashSet::new();
        for r in rows.0..rows.1 {
            for c in [cols.0 - 1, cols.0, cols.1 - 1, cols.1] {
                s.insert((r, c));
            }
        }
        for c in cols.0..cols.1 {
            for r in [rows.0 - 1, rows.0, rows.1 - 1, rows.1] {
                s.insert((r, c));
            }
        }
        s
    }

    #[test]
    fn edge_iou_identical_and_disjoint() {
        let a = boxed(20, 20, (5, 10), (5, 10));
        assert_eq!(edge_iou(&a, &a, 0.25).unwrap(), 1.0);
        let far = boxed(20, 20, (5, 10), (2, 4));
        let c = boxed(20, 20, (14, 18), (14, 18));
        assert_eq!(edge_iou(&far, &c, 0.25).unwrap(), 0.0);
        let flat = Mat::zeros(20, 20);
        assert_eq!(edge_iou(&flat, &flat, 0.25).unwrap(), 1.0);
        assert!(matches!(edge_iou(&flat, &Mat::zeros(3, 3), 0.1), Err(Error::Shape(_))));
    }

    #[test]
    fn edge_iou_of_shifted_box() {
        let (rows, cols) = ((4, 20), (8, 24));
        let a = boxed(24, 32, rows, cols);
        let b = boxed(24, 32, rows, (cols.0 + 1, cols.1 + 1));
        let ea = box_edges(rows, cols);
        let eb = box_edges(rows, (cols.0 + 1, cols.1 + 1));
        let expected = ea.intersection(&eb).count() as f64 / ea.union(&eb).count() as f64;
        let got = edge_iou(&a, &b, 0.25).unwrap();
        assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
        // 16x16 box shifted by one column: 92 shared edge pixels of 156
        assert!((expected - 92.0 / 156.0).abs() < 1e-15, "{expected}");
    }

    #[test]
    fn texture_contrast_cases() {
        assert_eq!(texture_contrast(&Mat::filled(8, 8, 3.0), 4).unwrap(), 0.0);
        let checker = Mat::from_fn(8, 8, |y, x| ((x + y) % 2) as f64);
        assert_eq!(texture_contrast(&checker, 2).unwrap(), 1.0);
        let ramp = Mat::from_fn(8, 8, |_, x| x as f64);
        let checker8 = Mat::from_fn(8, 8, |y, x| 7.0 * ((x + y) % 2) as f64);
        assert!(texture_contrast(&ramp, 8).unwrap() < texture_contrast(&checker8, 8).unwrap());
        assert!(texture_contrast(&ramp, 1).is_err());
    }

    #[test]
    fn frame_interval_truncation() {
        let scene = StaticTexture::default();
        let r = asymmetry_report(&scene, 30.0, 5_000, 0.2, 100).unwrap();
        assert_eq!(r.dt_rgb_us, 33_333);
        assert_eq!(r.tau_rgb_us, 38_333);
        assert_eq!(r.r_event, 0.0);
        assert_eq!(r.r_rgb, 1.0);
        let r60 = asymmetry_report(&scene, 60.0, 5_000, 0.2, 100).unwrap();
        assert!((r.dt_rgb_us / 2) - r60.dt_rgb_us <= 1);
        assert!(asymmetry_report(&scene, 0.0, 5_000, 0.2, 100).is_err());
    }

    #[test]
    fn moving_dot_is_sparse() {
        let scene = MovingBox { box_size: 2.0, ..Default::default() };
        let r = asymmetry_report(&scene, 30.0, 5_000, 0.2, 50).unwrap();
        // direct count of active pixels per frame interval
        let stream = trigger_events(&scene, 0.2, 50).unwrap();
        let mut per = vec![HashSet::new(); r.frame_intervals];
        for e in &stream.events {
            let k = ((e.t_us / r.dt_rgb_us) as usize).min(r.frame_intervals - 1);
            per[k].insert((e.x, e.y));
        }
        let mean = per.iter().map(|s| s.len()).sum::<usize>() as f64 / per.len() as f64;
        assert_eq!(r.d_event_mean, mean);
        assert!(r.r_event > 0.0 && r.r_event < 0.05, "{}", r.r_event);
        assert_eq!(r.r_rgb, 1.0);
    }
}

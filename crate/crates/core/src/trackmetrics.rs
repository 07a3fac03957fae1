//! Single-object tracking metrics: success (overlap), precision (center
//! error in pixels) and normalized precision (center error in units of the
//! ground-truth box size).
//!
//! Threshold grids: success at IoU `0, 0.05, ..., 1` (a frame counts when
//! `IoU >= t`), precision at `0..=50` px, normalized precision at
//! `0, 0.01, ..., 0.5`. Absent frames are skipped entirely.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    /// Top-left corner.
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    pub fn new(x: f64, y: f64, w: f64, h: f64) -> Result<Self> {
        if !(w > 0.0 && h > 0.0) || ![x, y, w, h].iter().all(|v| v.is_finite()) {
            return Err(Error::Argument(format!("invalid box ({x}, {y}, {w}, {h})")));
        }
        Ok(Self { x, y, w, h })
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x + self.w / 2.0, self.y + self.h / 2.0)
    }

    pub fn area(&self) -> f64 {
        self.w * self.h
    }
}

pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = ((a.x + a.w).min(b.x + b.w) - a.x.max(b.x)).max(0.0);
    let iy = ((a.y + a.h).min(b.y + b.h) - a.y.max(b.y)).max(0.0);
    let inter = ix * iy;
    if inter == 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackFrame {
    pub predicted: BBox,
    pub truth: BBox,
    pub present: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackSequence {
    pub frames: Vec<TrackFrame>,
}

pub const SUCCESS_POINTS: usize = 21;
pub const PRECISION_POINTS: usize = 51;
pub const PRECISION_OPERATING_PX: usize = 20;

pub fn success_thresholds() -> Vec<f64> {
    (0..SUCCESS_POINTS).map(|k| k as f64 / 20.0).collect()
}

pub fn precision_thresholds() -> Vec<f64> {
    (0..PRECISION_POINTS).map(|k| k as f64).collect()
}

pub fn norm_precision_thresholds() -> Vec<f64> {
    (0..PRECISION_POINTS).map(|k| k as f64 / 100.0).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCurves {
    pub success: Vec<f64>,
    pub precision: Vec<f64>,
    pub norm_precision: Vec<f64>,
    pub sr_auc: f64,
    pub pr_at_20: f64,
    pub npr_auc: f64,
    pub present_frames: usize,
}

fn fraction_within(values: &[f64], thresholds: &[f64], hit: impl Fn(f64, f64) -> bool) -> Vec<f64> {
    thresholds
        .iter()
        .map(|&t| values.iter().filter(|&&v| hit(v, t)).count() as f64 / values.len() as f64)
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

pub fn evaluate(seq: &TrackSequence) -> Result<MetricCurves> {
    let present: Vec<&TrackFrame> = seq.frames.iter().filter(|f| f.present).collect();
    if present.is_empty() {
        return Err(Error::Argument("sequence has no present frames".into()));
    }
    let overlaps: Vec<f64> = present.iter().map(|f| iou(&f.predicted, &f.truth)).collect();
    let (errors, norm_errors): (Vec<f64>, Vec<f64>) = present
        .iter()
        .map(|f| {
            let (px, py) = f.predicted.center();
            let (gx, gy) = f.truth.center();
            let (dx, dy) = (px - gx, py - gy);
            (dx.hypot(dy), (dx / f.truth.w).hypot(dy / f.truth.h))
        })
        .unzip();

    let success = fraction_within(&overlaps, &success_thresholds(), |v, t| v >= t);
    let precision = fraction_within(&errors, &precision_thresholds(), |v, t| v <= t);
    let norm_precision = fraction_within(&norm_errors, &norm_precision_thresholds(), |v, t| v <= t);
    Ok(MetricCurves {
        sr_auc: mean(&success),
        pr_at_20: precision[PRECISION_OPERATING_PX],
        npr_auc: mean(&norm_precision),
        success,
        precision,
        norm_precision,
        present_frames: present.len(),
    })
}

pub const SEQUENCE_HEADER: [&str; 10] = [
    "frame", "pred_x", "pred_y", "pred_w", "pred_h", "gt_x", "gt_y", "gt_w", "gt_h", "present",
];

/// Reads a sequence CSV; parse failures carry the 1-based line number.
pub fn read_sequence<R: Read>(input: R, source: &Path) -> Result<TrackSequence> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(SEQUENCE_HEADER) {
        return Err(Error::Parse {
            file: source.to_path_buf(),
            line: 1,
            detail: format!("expected header {}", SEQUENCE_HEADER.join(",")),
        });
    }
    let mut frames = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let line = k as u64 + 2;
        let err = |detail: String| Error::Parse {
            file: source.to_path_buf(),
            line,
            detail,
        };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        if rec.len() != SEQUENCE_HEADER.len() {
            return Err(err(format!("expected 10 fields, found {}", rec.len())));
        }
        let num = |i: usize| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|e| err(format!("{}: {e}", SEQUENCE_HEADER[i])))
        };
        let boxed = |o: usize| -> Result<BBox> {
            BBox::new(num(o)?, num(o + 1)?, num(o + 2)?, num(o + 3)?).map_err(|e| err(e.to_string()))
        };
        let present = match &rec[9] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(err(format!("present flag `{other}` is not 0/1"))),
        };
        frames.push(TrackFrame {
            predicted: boxed(1)?,
            truth: boxed(5)?,
            present,
        });
    }
    Ok(TrackSequence { frames })
}

pub fn write_sequence<W: Write>(seq: &TrackSequence, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SEQUENCE_HEADER)?;
    for (k, f) in seq.frames.iter().enumerate() {
        let (p, t) = (f.predicted, f.truth);
        w.write_record([
            k.to_string(),
            p.x.to_string(),
            p.y.to_string(),
            p.w.to_string(),
            p.h.to_string(),
            t.x.to_string(),
            t.y.to_string(),
            t.w.to_string(),
            t.h.to_string(),
            if f.present { "1" } else { "0" }.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format `curve,threshold,value`.
pub fn write_curves<W: Write>(curves: &MetricCurves, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["curve", "threshold", "value"])?;
    let groups = [
        ("success", success_thresholds(), &curves.success),
        ("precision", precision_thresholds(), &curves.precision),
        ("norm_precision", norm_precision_thresholds(), &curves.norm_precision),
    ];
    for (name, thresholds, values) in groups {
        for (t, v) in thresholds.iter().zip(values.iter()) {
            w.write_record([name.to_string(), t.to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest};

    fn b(x: f64, y: f64, w: f64, h: f64) -> BBox {
        BBox::new(x, y, w, h).unwrap()
    }

    fn frame(p: BBox, t: BBox) -> TrackFrame {
        TrackFrame { predicted: p, truth: t, present: true }
    }

    #[test]
    fn iou_cases() {
        let a = b(1.0, 2.0, 3.0, 4.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &b(10.0, 10.0, 1.0, 1.0)), 0.0);
        let unit = b(0.0, 0.0, 1.0, 1.0);
        let half = b(0.5, 0.0, 1.0, 1.0);
        assert!((iou(&unit, &half) - 1.0 / 3.0).abs() < 1e-15);
        assert!(BBox::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn perfect_track() {
        let seq = TrackSequence {
            frames: (0..7).map(|k| frame(b(k as f64, 3.0, 10.0, 8.0), b(k as f64, 3.0, 10.0, 8.0))).collect(),
        };
        let m = evaluate(&seq).unwrap();
        assert_eq!((m.sr_auc, m.pr_at_20, m.npr_auc), (1.0, 1.0, 1.0));
    }

    #[test]
    fn constant_offset_crosses_at_25px() {
        let seq = TrackSequence {
            frames: (0..5).map(|_| frame(b(25.0, 0.0, 40.0, 40.0), b(0.0, 0.0, 40.0, 40.0))).collect(),
        };
        let m = evaluate(&seq).unwrap();
        assert_eq!(m.pr_at_20, 0.0);
        assert_eq!(m.precision[24], 0.0);
        assert_eq!(m.precision[25], 1.0);
    }

    #[test]
    fn mixed_overlaps() {
        let gt = b(0.0, 0.0, 1.0, 1.0);
        let mut frames = vec![frame(gt, gt); 5];
        // IoU 0.5: same height, width 2 containing the truth
        frames.extend(vec![frame(b(0.0, 0.0, 2.0, 1.0), gt); 3]);
        frames.extend(vec![frame(b(5.0, 5.0, 1.0, 1.0), gt); 2]);
        let m = evaluate(&TrackSequence { frames }).unwrap();
        assert_eq!(m.success[9], 0.8); // threshold 0.45
        assert_eq!(m.success[10], 0.8); // 0.5 inclusive
        assert_eq!(m.success[11], 0.5);
    }

    #[test]
    fn all_absent_is_an_error() {
        let gt = b(0.0, 0.0, 1.0, 1.0);
        let seq = TrackSequence { frames: vec![TrackFrame { predicted: gt, truth: gt, present: false }] };
        assert!(matches!(evaluate(&seq), Err(Error::Argument(_))));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let gt = b(1.5, 2.0, 3.0, 4.0);
        let seq = TrackSequence {
            frames: vec![frame(b(1.0, 2.0, 3.0, 4.0), gt), TrackFrame { predicted: gt, truth: gt, present: false }],
        };
        let mut buf = Vec::new();
        write_sequence(&seq, &mut buf).unwrap();
        assert_eq!(read_sequence(&buf[..], Path::new("s.csv")).unwrap(), seq);

        let bad = "frame,pred_x,pred_y,pred_w,pred_h,gt_x,gt_y,gt_w,gt_h,present\n0,1,1,1,1,1,1,1,1,1\n1,1,1,x,1,1,1,1,1,1\n";
        match read_sequence(bad.as_bytes(), Path::new("s.csv")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn curves_are_monotone() {
        let gt = b(10.0, 10.0, 20.0, 20.0);
        let frames = (0..30)
            .map(|k| frame(b(10.0 + k as f64, 10.0 - k as f64 / 2.0, 20.0, 22.0), gt))
            .collect();
        let m = evaluate(&TrackSequence { frames }).unwrap();
        assert!(m.success.windows(2).all(|w| w[0] >= w[1]));
        assert!(m.precision.windows(2).all(|w| w[0] <= w[1]));
        assert!(m.norm_precision.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(m.success.len(), 21);
        assert_eq!(m.precision.len(), 51);
        let mut buf = Vec::new();
        write_curves(&m, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + 21 + 51 + 51);
    }

    proptest! {
        #[test]
        fn iou_symmetric_and_translation_invariant(
            x in -50.0f64..50.0, y in -50.0f64..50.0, w in 0.5f64..30.0, h in 0.5f64..30.0,
            dx in -20.0f64..20.0, dy in -20.0f64..20.0, w2 in 0.5f64..30.0, h2 in 0.5f64..30.0,
            tx in -100.0f64..100.0, ty in -100.0f64..100.0,
        ) {
            let a = b(x, y, w, h);
            let c = b(x + dx, y + dy, w2, h2);
            prop_assert_eq!(iou(&a, &c), iou(&c, &a));
            let at = b(x + tx, y + ty, w, h);
            let ct = b(x + dx + tx, y + dy + ty, w2, h2);
            prop_assert!((iou(&a, &c) - iou(&at, &ct)).abs() < 1e-12);
        }

        #[test]
        fn absent_frames_change_nothing(seed in 0u64..1000, gaps in proptest::collection::vec(0usize..12, 1..6)) {
            let mut rng = crate::numerics::Rng::new(seed);
            let mut frames: Vec<TrackFrame> = (0..12)
                .map(|_| frame(
                    b(rng.uniform(0.0, 60.0), rng.uniform(0.0, 60.0), rng.uniform(5.0, 30.0), rng.uniform(5.0, 30.0)),
                    b(rng.uniform(0.0, 60.0), rng.uniform(0.0, 60.0), rng.uniform(5.0, 30.0), rng.uniform(5.0, 30.0)),
                ))
                .collect();
            let base = evaluate(&TrackSequence { frames: frames.clone() }).unwrap();
            for g in gaps {
                let junk = b(rng.uniform(0.0, 9.0), 0.0, 1.0, 1.0);
                frames.insert(g.min(frames.len()), TrackFrame { predicted: junk, truth: b(500.0, 500.0, 2.0, 2.0), present: false });
            }
            prop_assert_eq!(evaluate(&TrackSequence { frames }).unwrap(), base);
        }

        #[test]
        fn scale_invariance_contrast(seed in 0u64..1000) {
            let mut rng = crate::numerics::Rng::new(seed);
            let frames: Vec<TrackFrame> = (0..15)
                .map(|_| {
                    let gt = b(rng.uniform(0.0, 40.0), rng.uniform(0.0, 40.0), rng.uniform(10.0, 30.0), rng.uniform(10.0, 30.0));
                    let p = b(gt.x + rng.uniform(-12.0, 12.0), gt.y + rng.uniform(-12.0, 12.0), gt.w * rng.uniform(0.7, 1.3), gt.h);
                    frame(p, gt)
                })
                .collect();
            let s = 4.0;
            let scale = |bb: BBox| b(bb.x * s, bb.y * s, bb.w * s, bb.h * s);
            let scaled: Vec<TrackFrame> = frames.iter().map(|f| frame(scale(f.predicted), scale(f.truth))).collect();
            let m = evaluate(&TrackSequence { frames }).unwrap();
            let ms = evaluate(&TrackSequence { frames: scaled }).unwrap();
            prop_assert_eq!(&m.success, &ms.success);
            prop_assert_eq!(&m.norm_precision, &ms.norm_precision);
            // raw pixel errors grow by s, so precision at a fixed pixel threshold can only drop
            prop_assert!(m.precision.iter().zip(&ms.precision).all(|(a, c)| c <= a));
            prop_assert!(m.precision != ms.precision);
        }
    }
}

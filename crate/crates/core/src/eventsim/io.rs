//! CSV persistence for event streams and frame dumps.

use std::io::{Read, Write};
use std::path::Path;

use super::sensor::{Event, EventStream, RgbFrame};
use crate::error::{Error, Result};

pub const EVENT_HEADER: [&str; 4] = ["t_us", "x", "y", "polarity"];

pub fn write_events<W: Write>(stream: &EventStream, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(EVENT_HEADER)?;
    for e in &stream.events {
        w.write_record([
            e.t_us.to_string(),
            e.x.to_string(),
            e.y.to_string(),
            e.polarity.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `t_us,x,y,polarity` rows; rows must already be in `(t_us, y, x)` order.
pub fn read_events<R: Read>(
    input: R,
    source: &Path,
    width: usize,
    height: usize,
    duration_us: u64,
    contrast_threshold: f64,
) -> Result<EventStream> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(EVENT_HEADER) {
        return Err(Error::Parse {
            file: source.to_path_buf(),
            line: 1,
            detail: format!("expected header {}", EVENT_HEADER.join(",")),
        });
    }
    let mut events = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec?;
        let parse_err = |detail: String| Error::Parse {
            file: source.to_path_buf(),
            line,
            detail,
        };
        if rec.len() != 4 {
            return Err(parse_err(format!("expected 4 fields, found {}", rec.len())));
        }
        let field = |k: usize| rec[k].trim().to_string();
        let e = Event {
            t_us: field(0).parse().map_err(|e| parse_err(format!("t_us: {e}")))?,
            x: field(1).parse().map_err(|e| parse_err(format!("x: {e}")))?,
            y: field(2).parse().map_err(|e| parse_err(format!("y: {e}")))?,
            polarity: field(3).parse().map_err(|e| parse_err(format!("polarity: {e}")))?,
        };
        if e.polarity != 1 && e.polarity != -1 {
            return Err(parse_err(format!("polarity {} not in {{-1, 1}}", e.polarity)));
        }
        if let Some(prev) = events.last() {
            let prev: &Event = prev;
            if (prev.t_us, prev.y, prev.x) > (e.t_us, e.y, e.x) {
                return Err(parse_err("rows not sorted by t_us, y, x".into()));
            }
        }
        events.push(e);
    }
    EventStream::new(width, height, duration_us, contrast_threshold, events)
}

/// Long-format frame dump: `frame,t_us,y,x,intensity`.
pub fn write_frames<W: Write>(frames: &[RgbFrame], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["frame", "t_us", "y", "x", "intensity"])?;
    for (k, f) in frames.iter().enumerate() {
        for y in 0..f.height {
            for x in 0..f.width {
                w.write_record([
                    k.to_string(),
                    f.t_us.to_string(),
                    y.to_string(),
                    x.to_string(),
                    f.intensity[(y, x)].to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

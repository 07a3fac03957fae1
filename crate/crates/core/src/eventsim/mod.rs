//! Sensor models driven by a shared synthetic radiance field: a global-shutter
//! frame camera that integrates over the exposure, and an event sensor that
//! fires on log-radiance threshold crossings.

pub mod analysis;
pub mod io;
pub mod scene;
pub mod sensor;

pub use io::{read_events, write_events, write_frames, EVENT_HEADER};
pub use analysis::{asymmetry_from_stream, asymmetry_report, edge_iou, texture_contrast, AsymmetryReport};
pub use scene::{GaussianBlob, LinearLogRamp, MovingBox, RadianceField, Scene, StaticTexture};
pub use sensor::{accumulate_event_frame, integrate_frame, trigger_events, Event, EventFrame, EventStream, RgbFrame};

//! Event trace: one `time_us,vehicle,event,detail` record per line.

use std::fmt;
use std::io::{self, Write};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    Generation,
    Enqueue,
    Drop,
    Reservation,
    Transmission,
    Collision,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Generation => "generation",
            EventKind::Enqueue => "enqueue",
            EventKind::Drop => "drop",
            EventKind::Reservation => "reservation",
            EventKind::Transmission => "transmission",
            EventKind::Collision => "collision",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One trace record. For transmissions and collisions `detail` names the
/// resource (`csr=<c>` for C-V2X, `channel` for 802.11p); for reservations
/// it holds `subframe=<s>;csr=<c>;rc=<n>;origin=<select|keep>`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEvent {
    pub time_us: u64,
    pub vehicle: u32,
    pub kind: EventKind,
    pub detail: String,
}

pub trait TraceSink {
    fn record(&mut self, event: TraceEvent);
}

/// Collects events in memory.
#[derive(Debug, Default)]
pub struct VecSink(pub Vec<TraceEvent>);

impl TraceSink for VecSink {
    fn record(&mut self, event: TraceEvent) {
        self.0.push(event);
    }
}

pub const TRACE_HEADER: &str = "time_us,vehicle,event,detail";

/// Writes CSV records. The first I/O error is kept and reported by `finish`.
pub struct CsvTraceWriter<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> CsvTraceWriter<W> {
    pub fn new(mut out: W) -> Self {
        let error = writeln!(out, "{TRACE_HEADER}").err();
        Self { out, error }
    }

    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> TraceSink for CsvTraceWriter<W> {
    fn record(&mut self, e: TraceEvent) {
        if self.error.is_none() {
            if let Err(err) = writeln!(self.out, "{},{},{},{}", e.time_us, e.vehicle, e.kind, e.detail) {
                self.error = Some(err);
            }
        }
    }
}

/// Sink handle that costs nothing when tracing is off.
pub(crate) struct Tracer<'a> {
    sink: Option<&'a mut dyn TraceSink>,
}

impl<'a> Tracer<'a> {
    pub(crate) fn new(sink: Option<&'a mut dyn TraceSink>) -> Self {
        Self { sink }
    }

    #[inline]
    pub(crate) fn emit(&mut self, time_us: u64, vehicle: usize, kind: EventKind, detail: impl FnOnce() -> String) {
        if let Some(sink) = self.sink.as_deref_mut() {
            sink.record(TraceEvent { time_us, vehicle: vehicle as u32, kind, detail: detail() });
        }
    }
}

//! IEEE XES reading and writing.
//!
//! Only scalar attributes directly under `<log>`, `<trace>` and `<event>` are
//! kept. Anything nested below an attribute (meta-attributes, lists,
//! containers) and the `<global>`/`<classifier>`/`<extension>` declarations
//! are skipped. Gzip input is detected by its magic bytes.

use std::fmt::Write as _;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{DateTime, NaiveDateTime, SubsecRound, Utc};
use flate2::read::GzDecoder;
use flate2::write::GzEncoder;
use quick_xml::escape::escape;
use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;

use super::{AttributeValue, Attributes, Event, EventLog, LogError, Trace};

const CONCEPT_NAME: &str = "concept:name";
const TIME_TIMESTAMP: &str = "time:timestamp";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scope {
    Log,
    Trace,
    Event,
    Ignored,
}

#[derive(Default)]
struct PendingTrace {
    attributes: Attributes,
    events: Vec<Event>,
}

/// Parses an XES document (plain or gzip-compressed).
pub fn parse_xes<R: Read>(mut input: R) -> Result<EventLog, LogError> {
    let mut raw = Vec::new();
    input.read_to_end(&mut raw)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut plain = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut plain)
            .map_err(|e| LogError::MalformedXml(format!("gzip: {e}")))?;
        raw = plain;
    }
    parse_bytes(&raw)
}

pub fn parse_xes_file(path: impl AsRef<Path>) -> Result<EventLog, LogError> {
    let file = std::fs::File::open(path)?;
    parse_xes(std::io::BufReader::new(file))
}

fn malformed(e: impl std::fmt::Display) -> LogError {
    LogError::MalformedXml(e.to_string())
}

fn parse_bytes(raw: &[u8]) -> Result<EventLog, LogError> {
    let mut reader = Reader::from_reader(raw);
    reader.config_mut().trim_text(true);

    let mut stack: Vec<Scope> = Vec::new();
    let mut saw_log = false;
    let mut log_attributes = Attributes::new();
    let mut traces: Vec<Trace> = Vec::new();
    let mut n_trace_elements = 0usize;
    let mut trace: Option<PendingTrace> = None;
    let mut event: Option<Attributes> = None;
    let mut buf = Vec::new();

    loop {
        let ev = reader.read_event_into(&mut buf).map_err(malformed)?;
        match ev {
            XmlEvent::Start(ref e) | XmlEvent::Empty(ref e) => {
                let is_empty = matches!(ev, XmlEvent::Empty(_));
                let name = std::str::from_utf8(e.local_name().into_inner())
                    .map_err(malformed)?
                    .to_owned();
                let top = stack.last().copied();
                let scope = match (top, name.as_str()) {
                    (None, "log") => {
                        saw_log = true;
                        Scope::Log
                    }
                    (None, other) => {
                        return Err(LogError::MalformedXml(format!(
                            "expected <log> root element, found <{other}>"
                        )))
                    }
                    (Some(Scope::Log), "trace") => {
                        trace = Some(PendingTrace::default());
                        Scope::Trace
                    }
                    (Some(Scope::Trace), "event") => {
                        event = Some(Attributes::new());
                        Scope::Event
                    }
                    (Some(s @ (Scope::Log | Scope::Trace | Scope::Event)), kind) => {
                        if let Some((key, value)) = scalar_attribute(kind, e)? {
                            let target = match s {
                                Scope::Log => &mut log_attributes,
                                Scope::Trace => &mut trace.as_mut().expect("open trace").attributes,
                                _ => event.as_mut().expect("open event"),
                            };
                            target.insert(key, value);
                        }
                        Scope::Ignored
                    }
                    _ => Scope::Ignored,
                };
                if is_empty {
                    close(
                        scope,
                        &mut trace,
                        &mut event,
                        &mut traces,
                        &mut n_trace_elements,
                    )?;
                } else {
                    stack.push(scope);
                }
            }
            XmlEvent::End(_) => {
                let scope = stack.pop().ok_or_else(|| malformed("unbalanced end tag"))?;
                close(
                    scope,
                    &mut trace,
                    &mut event,
                    &mut traces,
                    &mut n_trace_elements,
                )?;
            }
            XmlEvent::Eof => break,
            _ => {}
        }
        buf.clear();
    }

    if !stack.is_empty() {
        return Err(malformed("unexpected end of document"));
    }
    if !saw_log {
        return Err(malformed("no <log> element"));
    }
    EventLog::with_attributes(traces, log_attributes)
}

fn close(
    scope: Scope,
    trace: &mut Option<PendingTrace>,
    event: &mut Option<Attributes>,
    traces: &mut Vec<Trace>,
    n_trace_elements: &mut usize,
) -> Result<(), LogError> {
    match scope {
        Scope::Event => {
            let mut attrs = event.take().expect("open event");
            let activity = match attrs.remove(CONCEPT_NAME) {
                Some(AttributeValue::String(s)) if !s.is_empty() => s,
                Some(other) if !matches!(other, AttributeValue::String(_)) => display_value(&other),
                _ => return Err(LogError::MissingActivity),
            };
            let timestamp = match attrs.remove(TIME_TIMESTAMP) {
                Some(AttributeValue::Time(t)) => t,
                Some(AttributeValue::String(s)) => parse_timestamp(&s)?,
                _ => return Err(LogError::MissingTimestamp),
            };
            trace.as_mut().expect("open trace").events.push(Event {
                activity,
                timestamp,
                attributes: attrs,
            });
        }
        Scope::Trace => {
            let index = *n_trace_elements;
            *n_trace_elements += 1;
            let mut pending = trace.take().expect("open trace");
            let case_id = pending
                .attributes
                .remove(CONCEPT_NAME)
                .map(|v| display_value(&v))
                .unwrap_or_else(|| format!("case_{index}"));
            // Empty <trace/> elements carry no behavior and are dropped.
            if !pending.events.is_empty() {
                traces.push(Trace::new(case_id, pending.events)?);
            }
        }
        Scope::Log | Scope::Ignored => {}
    }
    Ok(())
}

fn scalar_attribute(
    kind: &str,
    e: &BytesStart<'_>,
) -> Result<Option<(String, AttributeValue)>, LogError> {
    if !matches!(kind, "string" | "date" | "int" | "float" | "boolean" | "id") {
        return Ok(None);
    }
    let mut key = None;
    let mut value = None;
    for attr in e.attributes() {
        let attr = attr.map_err(malformed)?;
        let v = attr.unescape_value().map_err(malformed)?.into_owned();
        match attr.key.local_name().into_inner() {
            b"key" => key = Some(v),
            b"value" => value = Some(v),
            _ => {}
        }
    }
    let (Some(key), Some(raw)) = (key, value) else {
        return Ok(None);
    };
    let value = match kind {
        "date" => match parse_timestamp(&raw) {
            Ok(t) => AttributeValue::Time(t),
            Err(e) if key == TIME_TIMESTAMP => return Err(e),
            Err(_) => AttributeValue::String(raw),
        },
        "int" => raw
            .trim()
            .parse()
            .map(AttributeValue::Int)
            .unwrap_or(AttributeValue::String(raw)),
        "float" => raw
            .trim()
            .parse()
            .map(AttributeValue::Float)
            .unwrap_or(AttributeValue::String(raw)),
        "boolean" => match raw.trim().to_ascii_lowercase().as_str() {
            "true" => AttributeValue::Bool(true),
            "false" => AttributeValue::Bool(false),
            _ => AttributeValue::String(raw),
        },
        _ => AttributeValue::String(raw),
    };
    Ok(Some((key, value)))
}

/// ISO-8601 timestamp, truncated to millisecond resolution. Values without
/// an offset are taken as UTC.
pub(crate) fn parse_timestamp(raw: &str) -> Result<DateTime<Utc>, LogError> {
    let s = raw.trim();
    if let Ok(t) = DateTime::parse_from_rfc3339(s) {
        return Ok(t.with_timezone(&Utc).trunc_subsecs(3));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f%z", "%Y-%m-%d %H:%M:%S%.f%z"] {
        if let Ok(t) = DateTime::parse_from_str(s, fmt) {
            return Ok(t.with_timezone(&Utc).trunc_subsecs(3));
        }
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(t) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(t.and_utc().trunc_subsecs(3));
        }
    }
    Err(LogError::InvalidTimestamp(raw.to_owned()))
}

fn format_timestamp(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%S%.3f+00:00").to_string()
}

fn display_value(v: &AttributeValue) -> String {
    match v {
        AttributeValue::String(s) => s.clone(),
        AttributeValue::Int(i) => i.to_string(),
        AttributeValue::Float(f) => f.to_string(),
        AttributeValue::Bool(b) => b.to_string(),
        AttributeValue::Time(t) => format_timestamp(t),
    }
}

fn write_attribute(out: &mut String, indent: &str, key: &str, value: &AttributeValue) {
    let kind = match value {
        AttributeValue::String(_) => "string",
        AttributeValue::Int(_) => "int",
        AttributeValue::Float(_) => "float",
        AttributeValue::Bool(_) => "boolean",
        AttributeValue::Time(_) => "date",
    };
    let _ = writeln!(
        out,
        "{indent}<{kind} key=\"{}\" value=\"{}\"/>",
        escape(key),
        escape(display_value(value).as_str())
    );
}

/// Serializes `log` as XES, readable back by [`parse_xes`].
pub fn write_xes<W: Write>(log: &EventLog, mut out: W) -> std::io::Result<()> {
    let mut s = String::new();
    s.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    s.push_str(
        "<log xes.version=\"1.0\" xes.features=\"nested-attributes\" xmlns=\"http://www.xes-standard.org/\">\n",
    );
    s.push_str("  <extension name=\"Concept\" prefix=\"concept\" uri=\"http://www.xes-standard.org/concept.xesext\"/>\n");
    s.push_str("  <extension name=\"Time\" prefix=\"time\" uri=\"http://www.xes-standard.org/time.xesext\"/>\n");
    for (k, v) in log.attributes() {
        write_attribute(&mut s, "  ", k, v);
    }
    for trace in log.traces() {
        s.push_str("  <trace>\n");
        write_attribute(
            &mut s,
            "    ",
            CONCEPT_NAME,
            &AttributeValue::String(trace.case_id.clone()),
        );
        for e in &trace.events {
            s.push_str("    <event>\n");
            write_attribute(
                &mut s,
                "      ",
                CONCEPT_NAME,
                &AttributeValue::String(e.activity.clone()),
            );
            write_attribute(&mut s, "      ", TIME_TIMESTAMP, &AttributeValue::Time(e.timestamp));
            for (k, v) in &e.attributes {
                write_attribute(&mut s, "      ", k, v);
            }
            s.push_str("    </event>\n");
        }
        s.push_str("  </trace>\n");
    }
    s.push_str("</log>\n");
    out.write_all(s.as_bytes())
}

pub fn write_xes_gz<W: Write>(log: &EventLog, out: W) -> std::io::Result<()> {
    let mut enc = GzEncoder::new(out, flate2::Compression::default());
    write_xes(log, &mut enc)?;
    enc.finish()?;
    Ok(())
}

/// One JSON object per trace, newline-delimited.
pub fn to_jsonl<W: Write>(log: &EventLog, mut out: W) -> std::io::Result<()> {
    for t in log.traces() {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

//! Minimal XES 1.0 reader: `log`, `trace` and `event` elements with the
//! string attribute `concept:name` and the date attribute `time:timestamp`.
//! Everything else (globals, extensions, classifiers) is skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use quick_xml::events::{BytesStart, Event as XmlEvent};
use quick_xml::Reader;

use crate::error::{Error, Result};

use super::{CaseId, Event, EventLog, Timestamp, Trace};

#[derive(Default)]
struct PendingEvent {
    activity: Option<String>,
    timestamp: Option<Timestamp>,
    lifecycle: Option<String>,
}

struct PendingTrace {
    case_id: Option<String>,
    events: Vec<(Event, Option<String>)>,
}

/// Reads an event log from XES.
pub fn parse_xes<R: BufRead>(reader: R) -> Result<EventLog> {
    parse_inner(reader).map(|(log, _)| log)
}

/// Case ids whose final event (by timestamp) carries
/// `lifecycle:transition = "complete"`, for callers that take the source's
/// own completion marks at face value.
pub fn lifecycle_complete_cases<R: BufRead>(reader: R) -> Result<BTreeSet<CaseId>> {
    parse_inner(reader).map(|(_, complete)| complete)
}

fn parse_inner<R: BufRead>(reader: R) -> Result<(EventLog, BTreeSet<CaseId>)> {
    let mut xml = Reader::from_reader(reader);
    xml.trim_text(true);

    let mut buf = Vec::new();
    let mut traces: Vec<PendingTrace> = Vec::new();
    let mut current_trace: Option<PendingTrace> = None;
    let mut current_event: Option<PendingEvent> = None;

    loop {
        let position = xml.buffer_position();
        let ev = xml.read_event_into(&mut buf);
        match ev {
            Ok(XmlEvent::Start(ref e)) | Ok(XmlEvent::Empty(ref e)) => {
                let self_closing = matches!(ev, Ok(XmlEvent::Empty(_)));
                match e.local_name().as_ref() {
                    b"trace" => {
                        let tr = PendingTrace { case_id: None, events: Vec::new() };
                        if self_closing {
                            traces.push(tr);
                        } else {
                            current_trace = Some(tr);
                        }
                    }
                    b"event" if current_trace.is_some() => {
                        let ev = PendingEvent::default();
                        if self_closing {
                            close_event(ev, current_trace.as_mut().unwrap(), traces.len(), position)?;
                        } else {
                            current_event = Some(ev);
                        }
                    }
                    b"string" | b"date" => {
                        let (key, value) = key_value(e, position)?;
                        if let Some(ev) = current_event.as_mut() {
                            match key.as_str() {
                                "concept:name" => ev.activity = Some(value),
                                "time:timestamp" => {
                                    ev.timestamp =
                                        Some(Timestamp::parse(&value).ok_or_else(|| {
                                            xes_err(position, format!("bad timestamp '{value}'"))
                                        })?)
                                }
                                "lifecycle:transition" => ev.lifecycle = Some(value),
                                _ => {}
                            }
                        } else if let Some(tr) = current_trace.as_mut() {
                            if key == "concept:name" {
                                tr.case_id = Some(value);
                            }
                        }
                    }
                    _ => {}
                }
            }
            Ok(XmlEvent::End(ref e)) => match e.local_name().as_ref() {
                b"event" => {
                    if let (Some(ev), Some(tr)) = (current_event.take(), current_trace.as_mut()) {
                        close_event(ev, tr, traces.len(), position)?;
                    }
                }
                b"trace" => {
                    if let Some(tr) = current_trace.take() {
                        traces.push(tr);
                    }
                }
                _ => {}
            },
            Ok(XmlEvent::Eof) => break,
            Ok(_) => {}
            Err(e) => return Err(xes_err(position, e.to_string())),
        }
        buf.clear();
    }

    assemble(traces)
}

fn close_event(
    ev: PendingEvent,
    tr: &mut PendingTrace,
    trace_index: usize,
    position: usize,
) -> Result<()> {
    let trace_name = tr
        .case_id
        .clone()
        .unwrap_or_else(|| format!("trace_{}", trace_index + 1));
    let activity = ev.activity.ok_or_else(|| {
        xes_err(position, format!("event without concept:name in trace '{trace_name}'"))
    })?;
    let timestamp = ev.timestamp.ok_or_else(|| {
        xes_err(position, format!("event without time:timestamp in trace '{trace_name}'"))
    })?;
    tr.events.push((Event { activity, timestamp }, ev.lifecycle));
    Ok(())
}

fn assemble(pending: Vec<PendingTrace>) -> Result<(EventLog, BTreeSet<CaseId>)> {
    let mut seen = BTreeMap::new();
    let mut traces = Vec::with_capacity(pending.len());
    let mut complete = BTreeSet::new();
    for (i, tr) in pending.into_iter().enumerate() {
        let case_id = CaseId::from(tr.case_id.unwrap_or_else(|| format!("trace_{}", i + 1)));
        if seen.insert(case_id.clone(), ()).is_some() {
            return Err(xes_err(0, format!("duplicate trace id '{case_id}'")));
        }
        let last_ts = tr.events.iter().map(|(e, _)| e.timestamp).max();
        if let Some(last_ts) = last_ts {
            let lc = tr
                .events
                .iter()
                .filter(|(e, _)| e.timestamp == last_ts)
                .filter_map(|(_, lc)| lc.as_deref())
                .next_back();
            if lc.map(|s| s.eq_ignore_ascii_case("complete")).unwrap_or(false) {
                complete.insert(case_id.clone());
            }
        }
        traces.push(Trace::new(case_id, tr.events.into_iter().map(|(e, _)| e).collect()));
    }
    Ok((EventLog::new(traces)?, complete))
}

fn key_value(e: &BytesStart<'_>, position: usize) -> Result<(String, String)> {
    let mut key = String::new();
    let mut value = String::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| xes_err(position, err.to_string()))?;
        let v = attr
            .unescape_value()
            .map_err(|err| xes_err(position, err.to_string()))?
            .into_owned();
        match attr.key.as_ref() {
            b"key" => key = v,
            b"value" => value = v,
            _ => {}
        }
    }
    Ok((key, value))
}

fn xes_err(position: usize, message: impl Into<String>) -> Error {
    Error::Xes { location: format!("byte {position}"), message: message.into() }
}

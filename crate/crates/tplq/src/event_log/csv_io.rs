//! Native CSV interchange format: UTF-8, RFC-4180, header row.
//!
//! Default columns are `case,activity,timestamp`; timestamps are ISO-8601
//! (UTC on write) or epoch milliseconds on read.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use crate::error::{Error, Result};

use super::{CaseId, Event, EventLog, Timestamp, Trace};

/// Maps the logical columns onto header names in the file.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct CsvColumns {
    pub case: String,
    pub activity: String,
    pub timestamp: String,
}

impl Default for CsvColumns {
    fn default() -> Self {
        CsvColumns {
            case: "case".to_owned(),
            activity: "activity".to_owned(),
            timestamp: "timestamp".to_owned(),
        }
    }
}

/// Reads an event log from CSV. Row order in the file is immaterial: events
/// are grouped per case and sorted by timestamp (ties keep file order).
pub fn parse_csv<R: Read>(reader: R, columns: &CsvColumns) -> Result<EventLog> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr
        .headers()
        .map_err(|e| Error::CsvRow { row: 1, message: e.to_string() })?
        .clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::CsvSchema(name.to_owned()))
    };
    let case_i = col(&columns.case)?;
    let act_i = col(&columns.activity)?;
    let ts_i = col(&columns.timestamp)?;

    let mut per_case: BTreeMap<CaseId, Vec<Event>> = BTreeMap::new();
    for (n, record) in rdr.records().enumerate() {
        let row = n as u64 + 2; // header is row 1
        let record = record.map_err(|e| Error::CsvRow { row, message: e.to_string() })?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::CsvRow { row, message: "missing field".to_owned() })
        };
        let raw_ts = field(ts_i)?;
        let timestamp = Timestamp::parse(raw_ts)
            .ok_or_else(|| Error::Timestamp { row, value: raw_ts.to_owned() })?;
        per_case
            .entry(CaseId::from(field(case_i)?))
            .or_default()
            .push(Event { activity: field(act_i)?.to_owned(), timestamp });
    }

    EventLog::new(per_case.into_iter().map(|(c, evs)| Trace::new(c, evs)).collect())
}

/// Writes the real events of a log in the native format, ordered by
/// (timestamp, case id, position within case). Artificial labels are
/// reconstructed by canonicalization on read, so they are not written.
pub fn write_csv<W: Write>(log: &EventLog, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record(["case", "activity", "timestamp"])
        .map_err(|e| Error::CsvRow { row: 1, message: e.to_string() })?;
    let mut rows: Vec<(Timestamp, &CaseId, usize, &str)> = Vec::with_capacity(log.real_event_count());
    for trace in log.traces() {
        for (i, e) in trace.events().iter().enumerate() {
            rows.push((e.timestamp, trace.case_id(), i, e.activity.as_str()));
        }
    }
    rows.sort();
    for (ts, case, _, activity) in rows {
        wtr.write_record([case.as_str(), activity, &ts.to_iso()])
            .map_err(|e| Error::CsvRow { row: 0, message: e.to_string() })?;
    }
    wtr.flush().map_err(|e| Error::CsvRow { row: 0, message: e.to_string() })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_groups_by_case() {
        let data = "case,activity,timestamp\n\
                    c2,a,1970-01-01T00:00:01.000Z\n\
                    c1,b,2000\n\
                    c1,a,1000\n";
        let log = parse_csv(data.as_bytes(), &CsvColumns::default()).unwrap();
        assert_eq!(log.num_cases(), 2);
        let t = log.trace(&CaseId::from("c1")).unwrap();
        let acts: Vec<&str> = t.events().iter().map(|e| e.activity.as_str()).collect();
        assert_eq!(acts, vec!["a", "b"]);
    }

    #[test]
    fn header_only_gives_empty_log() {
        let log = parse_csv("case,activity,timestamp\n".as_bytes(), &CsvColumns::default())
            .unwrap();
        assert_eq!(log.num_cases(), 0);
        assert_eq!(log.real_event_count(), 0);
    }

    #[test]
    fn missing_column_is_schema_error() {
        let res = parse_csv("case,activity\nc,a\n".as_bytes(), &CsvColumns::default());
        assert!(matches!(res, Err(Error::CsvSchema(c)) if c == "timestamp"));
    }

    #[test]
    fn bad_timestamp_reports_row_number() {
        let data = "case,activity,timestamp\nc,a,1000\nc,b,whenever\n";
        let res = parse_csv(data.as_bytes(), &CsvColumns::default());
        assert!(matches!(res, Err(Error::Timestamp { row: 3, .. })));
    }

    #[test]
    fn custom_column_mapping() {
        let cols = CsvColumns {
            case: "case:concept:name".into(),
            activity: "concept:name".into(),
            timestamp: "time:timestamp".into(),
        };
        let data = "case:concept:name,concept:name,time:timestamp\nk,x,12\n";
        let log = parse_csv(data.as_bytes(), &cols).unwrap();
        assert_eq!(log.trace(&CaseId::from("k")).unwrap().events()[0].activity, "x");
    }

    #[test]
    fn round_trip_is_identity() {
        let data = "case,activity,timestamp\n\
                    c1,a,1970-01-01T00:00:01.000Z\n\
                    c2,a,1970-01-01T00:00:01.500Z\n\
                    c1,b,1970-01-01T00:00:02.250Z\n";
        let log = parse_csv(data.as_bytes(), &CsvColumns::default()).unwrap();
        let mut buf = Vec::new();
        write_csv(&log, &mut buf).unwrap();
        let again = parse_csv(buf.as_slice(), &CsvColumns::default()).unwrap();
        assert_eq!(log, again);
    }
}

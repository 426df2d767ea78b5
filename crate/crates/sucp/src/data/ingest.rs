//! Flat-file ingestion. One check-in per line `user,poi,lat,lon,timestamp`
//! (tab or comma delimited, auto-detected); friendship file `user,user`.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::{DateTime, NaiveDate, NaiveDateTime};

use crate::data::{CheckInLog, FriendshipEdgeList, RawCheckIn};
use crate::error::{Error, Result};

/// Row-level accounting for an ingest run.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub checkin_rows: usize,
    pub checkin_rows_skipped: usize,
    pub friendship_rows: usize,
    pub friendship_rows_skipped: usize,
    pub self_loops_dropped: usize,
    pub edges_with_unknown_user: usize,
}

/// Accepts integer epoch seconds, RFC 3339, `Y-m-d H:M:S`, `Y-m-dTH:M:S`,
/// or a bare date (midnight UTC).
pub fn parse_timestamp(s: &str) -> Option<i64> {
    let s = s.trim();
    if s.is_empty() {
        return None;
    }
    if s.bytes().all(|b| b.is_ascii_digit()) {
        return s.parse::<i64>().ok();
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Some(dt.timestamp());
    }
    for fmt in ["%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Some(dt.and_utc().timestamp());
        }
    }
    if let Ok(d) = NaiveDate::parse_from_str(s, "%Y-%m-%d") {
        return Some(d.and_hms_opt(0, 0, 0)?.and_utc().timestamp());
    }
    None
}

fn split_fields(line: &str) -> Vec<&str> {
    let delim = if line.contains('\t') { '\t' } else { ',' };
    line.split(delim).map(str::trim).collect()
}

fn parse_checkin_line(line: &str) -> Option<RawCheckIn> {
    let fields = split_fields(line);
    if fields.len() != 5 {
        return None;
    }
    let lat: f64 = fields[2].parse().ok()?;
    let lon: f64 = fields[3].parse().ok()?;
    let timestamp = parse_timestamp(fields[4])?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) || timestamp <= 0 {
        return None;
    }
    if fields[0].is_empty() || fields[1].is_empty() {
        return None;
    }
    Some(RawCheckIn {
        user_id: fields[0].to_string(),
        poi_id: fields[1].to_string(),
        lat,
        lon,
        timestamp,
    })
}

fn open_lines(path: &Path) -> Result<impl Iterator<Item = std::io::Result<String>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(BufReader::new(file).lines())
}

/// Reads both input files, assigns dense indices, and restricts edges to
/// users present in the check-in log. Unparseable rows are counted and
/// skipped; a check-in file with no valid rows is an error.
pub fn ingest(
    checkin_path: &Path,
    friendship_path: &Path,
) -> Result<(CheckInLog, FriendshipEdgeList, IngestStats)> {
    let mut stats = IngestStats::default();

    let mut raw = Vec::new();
    for (lineno, line) in open_lines(checkin_path)?.enumerate() {
        let line = line.map_err(|e| Error::io(checkin_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        stats.checkin_rows += 1;
        match parse_checkin_line(&line) {
            Some(c) => raw.push(c),
            None => {
                stats.checkin_rows_skipped += 1;
                log::debug!("{}:{}: skipped malformed row", checkin_path.display(), lineno + 1);
            }
        }
    }
    if raw.is_empty() {
        return Err(Error::ZeroValidRows {
            path: checkin_path.to_path_buf(),
        });
    }
    let log = CheckInLog::from_raw(&raw);

    let mut pairs = Vec::new();
    for line in open_lines(friendship_path)? {
        let line = line.map_err(|e| Error::io(friendship_path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        stats.friendship_rows += 1;
        let fields = split_fields(&line);
        if fields.len() != 2 || fields[0].is_empty() || fields[1].is_empty() {
            stats.friendship_rows_skipped += 1;
            continue;
        }
        if fields[0] == fields[1] {
            stats.self_loops_dropped += 1;
            continue;
        }
        match (log.user_idx(fields[0]), log.user_idx(fields[1])) {
            (Some(a), Some(b)) => pairs.push((a, b)),
            _ => stats.edges_with_unknown_user += 1,
        }
    }
    let edges = FriendshipEdgeList::new(pairs);
    Ok((log, edges, stats))
}

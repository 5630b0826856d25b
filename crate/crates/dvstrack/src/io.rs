//! Event file formats.
//!
//! Binary files follow the jAER DVS128 recording layout: optional `#` header
//! lines, then 8-byte big-endian records of a 32-bit address word and a
//! 32-bit microsecond timestamp. Address bit 0 is the polarity (1 = ON),
//! bits 1–7 are x, bits 8–14 are y, and every higher bit must be clear.
//!
//! Text files start with the header `t_us,x,y,p` followed by one
//! `t,x,y,p` line per event, with `p` written as `1` or `-1`.

use std::fmt::Write as _;

use dvstrack_core::{Event, EventStream, Geometry, Polarity};

pub const AEDAT_VERSION_LINE: &str = "#!AER-DAT2.0";
pub const TEXT_HEADER: &str = "t_us,x,y,p";

const RECORD_LEN: usize = 8;
const ADDRESS_MASK: u32 = 0x7fff;
const MAX_COORD: u32 = 127;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FormatError {
    #[error("truncated record at offset {offset} (file byte {file_offset})")]
    TruncatedRecord { offset: usize, file_offset: usize },
    #[error("address bits outside the DVS128 layout in record {record} (address {address:#010x})")]
    UnknownAddressBits { record: usize, address: u32 },
    #[error("unterminated header line at byte {offset}")]
    UnterminatedHeader { offset: usize },
    #[error("timestamp wraparound at record {record}: streams longer than 2^32 µs are not supported")]
    Wraparound { record: usize },
    #[error("event {index} does not fit the binary layout: {reason}")]
    Unencodable { index: usize, reason: &'static str },
    #[error("missing or malformed header line (expected \"{TEXT_HEADER}\")")]
    MissingTextHeader,
    #[error("malformed line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("invalid polarity {token:?} on line {line}")]
    BadPolarity { line: usize, token: String },
}

/// `#`-prefixed header of a binary recording.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AedatHeader {
    /// Header lines without their terminators.
    pub lines: Vec<String>,
    /// Version token from a `#!AER-DAT<version>` line, if present.
    pub version: Option<String>,
}

/// Parses a binary recording. Events come back in file order on a 128×128
/// geometry.
pub fn read_aedat(bytes: &[u8]) -> Result<(AedatHeader, EventStream), FormatError> {
    let mut header = AedatHeader::default();
    let mut pos = 0;
    while bytes.get(pos) == Some(&b'#') {
        let end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .ok_or(FormatError::UnterminatedHeader { offset: pos })?;
        let mut line = &bytes[pos..pos + end];
        if line.last() == Some(&b'\r') {
            line = &line[..line.len() - 1];
        }
        let line = String::from_utf8_lossy(line).into_owned();
        if let Some(v) = line.strip_prefix("#!AER-DAT") {
            header.version = Some(v.trim().to_string());
        }
        header.lines.push(line);
        pos += end + 1;
    }

    let body = &bytes[pos..];
    let whole = body.len() / RECORD_LEN * RECORD_LEN;
    if whole != body.len() {
        return Err(FormatError::TruncatedRecord {
            offset: whole,
            file_offset: pos + whole,
        });
    }
    let mut events = Vec::with_capacity(body.len() / RECORD_LEN);
    let mut last_t = 0u32;
    for (record, chunk) in body.chunks_exact(RECORD_LEN).enumerate() {
        let address = u32::from_be_bytes(chunk[..4].try_into().expect("4-byte slice"));
        let t = u32::from_be_bytes(chunk[4..].try_into().expect("4-byte slice"));
        if address & !ADDRESS_MASK != 0 {
            return Err(FormatError::UnknownAddressBits { record, address });
        }
        // A drop of more than half the counter range can only be a wrap.
        if record > 0 && t < last_t && last_t - t > u32::MAX / 2 {
            return Err(FormatError::Wraparound { record });
        }
        last_t = t;
        let p = if address & 1 == 1 { Polarity::On } else { Polarity::Off };
        let x = (address >> 1) & 0x7f;
        let y = (address >> 8) & 0x7f;
        events.push(Event::new(x, y, t as u64, p));
    }
    Ok((header, EventStream::new(Geometry::DVS128, events)))
}

/// Encodes a stream in the binary layout with a version header line.
pub fn write_aedat(stream: &EventStream) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::with_capacity(AEDAT_VERSION_LINE.len() + 2 + stream.len() * RECORD_LEN);
    out.extend_from_slice(AEDAT_VERSION_LINE.as_bytes());
    out.extend_from_slice(b"\r\n");
    for (index, e) in stream.events.iter().enumerate() {
        if e.x > MAX_COORD || e.y > MAX_COORD {
            return Err(FormatError::Unencodable {
                index,
                reason: "coordinate above 127",
            });
        }
        let t = u32::try_from(e.t).map_err(|_| FormatError::Unencodable {
            index,
            reason: "timestamp exceeds 32 bits",
        })?;
        let address = (e.y << 8) | (e.x << 1) | u32::from(e.p == Polarity::On);
        out.extend_from_slice(&address.to_be_bytes());
        out.extend_from_slice(&t.to_be_bytes());
    }
    Ok(out)
}

pub fn write_events_text(stream: &EventStream) -> Vec<u8> {
    let mut out = String::with_capacity(16 * (stream.len() + 1));
    out.push_str(TEXT_HEADER);
    out.push('\n');
    for e in &stream.events {
        let _ = writeln!(out, "{},{},{},{}", e.t, e.x, e.y, e.p.sign());
    }
    out.into_bytes()
}

/// Parses the text format onto a 128×128 geometry. Line numbers in errors
/// are 1-based and count the header.
pub fn read_events_text(bytes: &[u8]) -> Result<EventStream, FormatError> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        FormatError::MalformedLine {
            line,
            reason: "invalid UTF-8".into(),
        }
    })?;
    let mut lines = text.split('\n');
    match lines.next() {
        Some(h) if h.trim_end_matches('\r') == TEXT_HEADER => {}
        _ => return Err(FormatError::MissingTextHeader),
    }
    let mut events = Vec::new();
    let mut lines = lines.enumerate().peekable();
    while let Some((i, raw)) = lines.next() {
        let line = i + 2;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() && lines.peek().is_none() {
            break;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 4 {
            return Err(FormatError::MalformedLine {
                line,
                reason: format!("expected 4 fields, found {}", fields.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<u64, FormatError> {
            s.trim().parse::<u64>().map_err(|_| FormatError::MalformedLine {
                line,
                reason: format!("{what} {s:?} is not a non-negative integer"),
            })
        };
        let t = num(fields[0], "timestamp")?;
        let x = u32::try_from(num(fields[1], "x")?).map_err(|_| FormatError::MalformedLine {
            line,
            reason: "x does not fit 32 bits".into(),
        })?;
        let y = u32::try_from(num(fields[2], "y")?).map_err(|_| FormatError::MalformedLine {
            line,
            reason: "y does not fit 32 bits".into(),
        })?;
        let p = match fields[3].trim() {
            "1" | "+1" => Polarity::On,
            "-1" => Polarity::Off,
            other => {
                return Err(FormatError::BadPolarity {
                    line,
                    token: other.to_string(),
                })
            }
        };
        events.push(Event::new(x, y, t, p));
    }
    Ok(EventStream::new(Geometry::DVS128, events))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventFormat {
    Text,
    Aedat,
}

impl EventFormat {
    /// Text files are recognized by their header; anything else is binary.
    pub fn sniff(bytes: &[u8]) -> Self {
        if bytes.starts_with(TEXT_HEADER.as_bytes()) {
            EventFormat::Text
        } else {
            EventFormat::Aedat
        }
    }
}

pub fn read_events(bytes: &[u8]) -> Result<EventStream, FormatError> {
    match EventFormat::sniff(bytes) {
        EventFormat::Text => read_events_text(bytes),
        EventFormat::Aedat => read_aedat(bytes).map(|(_, s)| s),
    }
}

pub fn write_events(stream: &EventStream, format: EventFormat) -> Result<Vec<u8>, FormatError> {
    match format {
        EventFormat::Text => Ok(write_events_text(stream)),
        EventFormat::Aedat => write_aedat(stream),
    }
}

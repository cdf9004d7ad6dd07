//! JSON-Lines trace interchange.
//!
//! The first line is a metadata object, every following line one frame:
//!
//! ```text
//! {"meta":{"label":"Walk","subject":"s1","rate":30.0}}
//! {"t":0.0,"ntx":1,"nrx":3,"csi":[[[[re,im], ×30] ×nrx] ×ntx]}
//! ```
//!
//! Numbers are written in shortest round-trip form, so a write/read cycle
//! is lossless.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::csi::{ActivityLabel, ComplexSample, CsiFrame, CsiTrace, SUBCARRIERS};
use crate::error::{Error, Result};

#[derive(Serialize)]
struct MetaLine<'a> {
    meta: Meta<'a>,
}

#[derive(Serialize)]
struct Meta<'a> {
    label: Option<&'a str>,
    subject: Option<&'a str>,
    rate: f64,
}

#[derive(Serialize)]
struct FrameLine {
    t: f64,
    ntx: usize,
    nrx: usize,
    csi: Vec<Vec<Vec<[f64; 2]>>>,
}

fn schema(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::Schema {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

pub fn encode_jsonl(trace: &CsiTrace, mut out: impl Write) -> Result<()> {
    let check = |v: f64, what: &str| {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Range(format!("{what} {v} is not representable in JSON")))
        }
    };
    let meta = MetaLine {
        meta: Meta {
            label: trace.label.map(ActivityLabel::name),
            subject: trace.subject_id.as_deref(),
            rate: trace.sample_rate,
        },
    };
    serde_json::to_writer(&mut out, &meta).map_err(std::io::Error::from)?;
    out.write_all(b"\n")?;
    for frame in trace.frames() {
        let mut csi = Vec::with_capacity(frame.ntx());
        for tx in 0..frame.ntx() {
            let mut per_rx = Vec::with_capacity(frame.nrx());
            for rx in 0..frame.nrx() {
                per_rx.push(
                    frame
                        .link(tx, rx)?
                        .iter()
                        .map(|c| Ok([check(c.re, "csi")?, check(c.im, "csi")?]))
                        .collect::<Result<Vec<_>>>()?,
                );
            }
            csi.push(per_rx);
        }
        let line = FrameLine {
            t: frame.timestamp,
            ntx: frame.ntx(),
            nrx: frame.nrx(),
            csi,
        };
        serde_json::to_writer(&mut out, &line).map_err(std::io::Error::from)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn write_jsonl(trace: &CsiTrace, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    encode_jsonl(trace, &mut w)?;
    w.flush()?;
    Ok(())
}

fn field<'a>(obj: &'a Map<String, Value>, line: usize, name: &str) -> Result<&'a Value> {
    obj.get(name)
        .ok_or_else(|| schema(line, name, "missing field"))
}

fn as_count(v: &Value, line: usize, name: &str) -> Result<usize> {
    v.as_u64()
        .map(|n| n as usize)
        .ok_or_else(|| schema(line, name, "expected a non-negative integer"))
}

fn optional_string(obj: &Map<String, Value>, line: usize, name: &str) -> Result<Option<String>> {
    match obj.get(name) {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(_) => Err(schema(line, name, "expected a string or null")),
    }
}

fn parse_frame(obj: &Map<String, Value>, line: usize) -> Result<CsiFrame> {
    let t = field(obj, line, "t")?
        .as_f64()
        .ok_or_else(|| schema(line, "t", "expected a number"))?;
    let ntx = as_count(field(obj, line, "ntx")?, line, "ntx")?;
    let nrx = as_count(field(obj, line, "nrx")?, line, "nrx")?;
    let csi = field(obj, line, "csi")?
        .as_array()
        .ok_or_else(|| schema(line, "csi", "expected an array"))?;
    if csi.len() != ntx {
        return Err(schema(line, "csi", format!("expected {ntx} tx rows, got {}", csi.len())));
    }
    let mut samples = Vec::with_capacity(ntx * nrx * SUBCARRIERS);
    for tx_row in csi {
        let tx_row = tx_row
            .as_array()
            .filter(|r| r.len() == nrx)
            .ok_or_else(|| schema(line, "csi", format!("each tx row needs {nrx} rx rows")))?;
        for rx_row in tx_row {
            let rx_row = rx_row
                .as_array()
                .filter(|r| r.len() == SUBCARRIERS)
                .ok_or_else(|| {
                    schema(line, "csi", format!("each rx row needs {SUBCARRIERS} entries"))
                })?;
            for entry in rx_row {
                let pair = entry
                    .as_array()
                    .filter(|p| p.len() == 2)
                    .ok_or_else(|| schema(line, "csi", "entries must be [re, im] pairs"))?;
                let re = pair[0]
                    .as_f64()
                    .ok_or_else(|| schema(line, "csi", "non-numeric real part"))?;
                let im = pair[1]
                    .as_f64()
                    .ok_or_else(|| schema(line, "csi", "non-numeric imaginary part"))?;
                samples.push(ComplexSample::new(re, im));
            }
        }
    }
    CsiFrame::new(t, ntx, nrx, samples, None).map_err(|e| schema(line, "csi", e.to_string()))
}

pub fn decode_jsonl(input: impl BufRead) -> Result<CsiTrace> {
    let mut label = None;
    let mut subject = None;
    let mut rate = CsiTrace::NOMINAL_RATE;
    let mut frames = Vec::new();
    let mut seen_content = false;
    for (idx, text) in input.lines().enumerate() {
        let line = idx + 1;
        let text = text?;
        if text.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| schema(line, "<line>", e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| schema(line, "<line>", "expected a JSON object"))?;
        let first = !seen_content;
        seen_content = true;
        if let Some(meta) = obj.get("meta") {
            if !first {
                return Err(schema(line, "meta", "metadata must be on the first line"));
            }
            let meta = meta
                .as_object()
                .ok_or_else(|| schema(line, "meta", "expected an object"))?;
            label = optional_string(meta, line, "label")?
                .map(|s| {
                    s.parse::<ActivityLabel>()
                        .map_err(|_| schema(line, "label", format!("unknown activity {s:?}")))
                })
                .transpose()?;
            subject = optional_string(meta, line, "subject")?;
            if let Some(r) = meta.get("rate") {
                rate = r
                    .as_f64()
                    .filter(|r| *r > 0.0)
                    .ok_or_else(|| schema(line, "rate", "expected a positive number"))?;
            }
            continue;
        }
        frames.push(parse_frame(obj, line)?);
    }
    let mut trace = CsiTrace::new(frames, rate)?;
    trace.label = label;
    trace.subject_id = subject;
    Ok(trace)
}

pub fn read_jsonl(path: impl AsRef<Path>) -> Result<CsiTrace> {
    decode_jsonl(BufReader::new(fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_trace() -> CsiTrace {
        let frames = (0..3)
            .map(|t| {
                let csi = (0..2 * SUBCARRIERS)
                    .map(|i| ComplexSample::new(0.1 * i as f64 + t as f64 / 3.0, -1.0 / (i + 1) as f64))
                    .collect();
                CsiFrame::new(t as f64 / 30.0, 1, 2, csi, None).unwrap()
            })
            .collect();
        CsiTrace::new(frames, 30.0)
            .unwrap()
            .with_label(ActivityLabel::SitDown)
            .with_subject("s2")
    }

    fn round_trip(trace: &CsiTrace) -> CsiTrace {
        let mut buf = Vec::new();
        encode_jsonl(trace, &mut buf).unwrap();
        decode_jsonl(buf.as_slice()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let t = sample_trace();
        assert_eq!(round_trip(&t), t);
    }

    #[test]
    fn missing_csi_names_line_and_field() {
        let text = "{\"meta\":{\"label\":null,\"subject\":null,\"rate\":30.0}}\n{\"t\":0.0,\"ntx\":1,\"nrx\":1}\n";
        match decode_jsonl(text.as_bytes()) {
            Err(Error::Schema { line, field, .. }) => {
                assert_eq!(line, 2);
                assert_eq!(field, "csi");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_label_rejected() {
        let text = "{\"meta\":{\"label\":\"Jump\",\"subject\":null,\"rate\":30.0}}\n";
        match decode_jsonl(text.as_bytes()) {
            Err(Error::Schema { line: 1, field, .. }) => assert_eq!(field, "label"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_subcarrier_count_rejected() {
        let text = "{\"t\":0.0,\"ntx\":1,\"nrx\":1,\"csi\":[[[[1,0]]]]}\n";
        assert!(matches!(
            decode_jsonl(text.as_bytes()),
            Err(Error::Schema { line: 1, .. })
        ));
    }
}

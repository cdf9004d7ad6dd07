//! Intel 5300 CSI-Tool beamforming log (`.dat`) reader and writer.
//!
//! A log is a flat sequence of fields. Every field starts with a 2-byte
//! big-endian length (which counts the code byte) and a 1-byte code. Code
//! `0xBB` carries a beamforming feedback record:
//!
//! ```text
//! offset  size  field
//!      0     4  timestamp_low (LE, microseconds)
//!      4     2  bfee_count (LE)
//!      6     2  reserved
//!      8     1  nrx
//!      9     1  ntx
//!     10     3  rssi_a, rssi_b, rssi_c
//!     13     1  noise (signed)
//!     14     1  agc
//!     15     1  antenna_sel
//!     16     2  len (LE)
//!     18     2  rate (LE)
//!     20   len  bit-packed CSI payload
//! ```
//!
//! Each subcarrier block is preceded by 3 padding bits, then holds
//! `ntx·nrx` signed 8-bit (real, imag) pairs, `tx` varying fastest.

use std::fs;
use std::path::Path;

use crate::csi::{ComplexSample, CsiFrame, SUBCARRIERS};
use crate::error::{Error, Result};

pub const BFEE_CODE: u8 = 0xBB;
const HEADER_LEN: usize = 20;
const IDENTITY_ANTENNA_SEL: u8 = 0b10_01_00;
const DEFAULT_NOISE: i8 = -92;

/// Payload byte count implied by the antenna configuration.
pub fn payload_len(nrx: usize, ntx: usize) -> usize {
    (SUBCARRIERS * (nrx * ntx * 8 * 2 + 3)).div_ceil(8)
}

/// One decoded `0xBB` record with the CSI still in integer form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bfee5300Record {
    pub timestamp_low: u32,
    pub bfee_count: u16,
    pub nrx: u8,
    pub ntx: u8,
    pub rssi_a: u8,
    pub rssi_b: u8,
    pub rssi_c: u8,
    pub noise: i8,
    pub agc: u8,
    pub antenna_sel: u8,
    pub rate: u16,
    /// `[tx][rx][subcarrier]` (real, imag), receive permutation already applied.
    pub csi: Vec<(i8, i8)>,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct DatOptions {
    /// Rescale CSI to absolute SNR units using RSSI, AGC and noise.
    pub scaled: bool,
}

impl Bfee5300Record {
    fn decode(body: &[u8], offset: usize) -> Result<Self> {
        if body.len() < HEADER_LEN {
            return Err(Error::CorruptRecord {
                offset,
                message: format!("beamforming header needs {HEADER_LEN} bytes, got {}", body.len()),
            });
        }
        let u16le = |i: usize| u16::from_le_bytes([body[i], body[i + 1]]);
        let nrx = body[8];
        let ntx = body[9];
        if !(1..=3).contains(&nrx) || !(1..=3).contains(&ntx) {
            return Err(Error::CorruptRecord {
                offset,
                message: format!("antenna counts out of range: nrx={nrx} ntx={ntx}"),
            });
        }
        let len = u16le(16) as usize;
        let expected = payload_len(nrx as usize, ntx as usize);
        if len != expected {
            return Err(Error::CorruptRecord {
                offset,
                message: format!("payload length {len} does not match {expected} for {ntx}x{nrx}"),
            });
        }
        if HEADER_LEN + len > body.len() {
            return Err(Error::CorruptRecord {
                offset,
                message: format!(
                    "payload of {len} bytes exceeds field length {}",
                    body.len() + 1
                ),
            });
        }
        let payload = &body[HEADER_LEN..HEADER_LEN + len];
        let antenna_sel = body[15];
        let pairs = nrx as usize * ntx as usize;
        let mut raw = Vec::with_capacity(pairs * SUBCARRIERS);
        let mut bit = 0usize;
        for _ in 0..SUBCARRIERS {
            bit += 3;
            for _ in 0..pairs {
                let re = read_i8(payload, bit);
                let im = read_i8(payload, bit + 8);
                raw.push((re, im));
                bit += 16;
            }
        }
        // raw is [subcarrier][rx][tx]; reshape to [tx][rx][subcarrier] applying the
        // receive-chain permutation.
        let (ntx_u, nrx_u) = (ntx as usize, nrx as usize);
        let perm = receive_permutation(antenna_sel, nrx_u);
        let mut csi = vec![(0i8, 0i8); pairs * SUBCARRIERS];
        for k in 0..SUBCARRIERS {
            for rx in 0..nrx_u {
                for tx in 0..ntx_u {
                    let src = raw[k * pairs + rx * ntx_u + tx];
                    let dst_rx = perm[rx];
                    csi[(tx * nrx_u + dst_rx) * SUBCARRIERS + k] = src;
                }
            }
        }
        Ok(Self {
            timestamp_low: u32::from_le_bytes([body[0], body[1], body[2], body[3]]),
            bfee_count: u16le(4),
            nrx,
            ntx,
            rssi_a: body[10],
            rssi_b: body[11],
            rssi_c: body[12],
            noise: body[13] as i8,
            agc: body[14],
            antenna_sel,
            rate: u16le(18),
            csi,
        })
    }

    fn encode(&self) -> Vec<u8> {
        let (nrx, ntx) = (self.nrx as usize, self.ntx as usize);
        let len = payload_len(nrx, ntx);
        let mut body = vec![0u8; HEADER_LEN + len];
        body[0..4].copy_from_slice(&self.timestamp_low.to_le_bytes());
        body[4..6].copy_from_slice(&self.bfee_count.to_le_bytes());
        body[8] = self.nrx;
        body[9] = self.ntx;
        body[10] = self.rssi_a;
        body[11] = self.rssi_b;
        body[12] = self.rssi_c;
        body[13] = self.noise as u8;
        body[14] = self.agc;
        body[15] = self.antenna_sel;
        body[16..18].copy_from_slice(&(len as u16).to_le_bytes());
        body[18..20].copy_from_slice(&self.rate.to_le_bytes());
        let perm = receive_permutation(self.antenna_sel, nrx);
        let payload = &mut body[HEADER_LEN..];
        let mut bit = 0usize;
        for k in 0..SUBCARRIERS {
            bit += 3;
            for rx in 0..nrx {
                for tx in 0..ntx {
                    let (re, im) = self.csi[(tx * nrx + perm[rx]) * SUBCARRIERS + k];
                    write_i8(payload, bit, re);
                    write_i8(payload, bit + 8, im);
                    bit += 16;
                }
            }
        }
        body
    }

    pub fn timestamp_seconds(&self) -> f64 {
        self.timestamp_low as f64 * 1e-6
    }

    /// Total received power in dBm, as computed by the CSI-Tool.
    pub fn total_rss(&self) -> f64 {
        let mag: f64 = [self.rssi_a, self.rssi_b, self.rssi_c]
            .iter()
            .filter(|&&r| r != 0)
            .map(|&r| dbinv(r as f64))
            .sum();
        10.0 * mag.log10() - 44.0 - self.agc as f64
    }

    /// CSI scaled into SNR units using RSSI, AGC and the noise floor.
    pub fn scaled_csi(&self) -> Vec<ComplexSample> {
        let csi: Vec<ComplexSample> = self
            .csi
            .iter()
            .map(|&(re, im)| ComplexSample::new(re as f64, im as f64))
            .collect();
        let csi_pwr: f64 = csi.iter().map(|c| c.re * c.re + c.im * c.im).sum();
        if csi_pwr == 0.0 {
            return csi;
        }
        let rssi_pwr = dbinv(self.total_rss());
        let scale = rssi_pwr / (csi_pwr / SUBCARRIERS as f64);
        let noise_db = if self.noise == -127 { -92.0 } else { self.noise as f64 };
        let quant_error_pwr = scale * (self.nrx as f64 * self.ntx as f64);
        let total_noise_pwr = dbinv(noise_db) + quant_error_pwr;
        let mut factor = (scale / total_noise_pwr).sqrt();
        match self.ntx {
            2 => factor *= 2f64.sqrt(),
            3 => factor *= dbinv(4.5).sqrt(),
            _ => {}
        }
        csi.into_iter()
            .map(|c| ComplexSample::new(c.re * factor, c.im * factor))
            .collect()
    }

    fn to_frame(&self, timestamp: f64, scaled: bool) -> Result<CsiFrame> {
        let csi = if scaled {
            self.scaled_csi()
        } else {
            self.csi
                .iter()
                .map(|&(re, im)| ComplexSample::new(re as f64, im as f64))
                .collect()
        };
        CsiFrame::new(
            timestamp,
            self.ntx as usize,
            self.nrx as usize,
            csi,
            Some([self.rssi_a as f64, self.rssi_b as f64, self.rssi_c as f64]),
        )
    }
}

fn dbinv(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Destination receive index for each raw receive chain. Falls back to the
/// identity when `antenna_sel` does not encode a permutation of `0..nrx`.
fn receive_permutation(antenna_sel: u8, nrx: usize) -> [usize; 3] {
    let mut perm = [0usize; 3];
    let mut seen = [false; 3];
    for (r, p) in perm.iter_mut().enumerate().take(nrx) {
        *p = ((antenna_sel >> (2 * r)) & 0x3) as usize;
        if *p >= nrx || seen[*p] {
            return [0, 1, 2];
        }
        seen[*p] = true;
    }
    perm
}

fn read_i8(payload: &[u8], bit: usize) -> i8 {
    let byte = bit / 8;
    let rem = bit % 8;
    if rem == 0 {
        payload[byte] as i8
    } else {
        ((payload[byte] >> rem) | (payload[byte + 1] << (8 - rem))) as i8
    }
}

fn write_i8(payload: &mut [u8], bit: usize, value: i8) {
    let v = value as u8;
    let byte = bit / 8;
    let rem = bit % 8;
    payload[byte] |= v << rem;
    if rem != 0 {
        payload[byte + 1] |= v >> (8 - rem);
    }
}

/// Decode every `0xBB` record in a log. Other codes are skipped.
pub fn parse_records(bytes: &[u8]) -> Result<Vec<Bfee5300Record>> {
    let mut records = Vec::new();
    let mut offset = 0usize;
    while offset < bytes.len() {
        if offset + 3 > bytes.len() {
            return Err(Error::Parse {
                offset,
                message: "truncated field header".into(),
            });
        }
        let field_len = u16::from_be_bytes([bytes[offset], bytes[offset + 1]]) as usize;
        if field_len == 0 {
            return Err(Error::CorruptRecord {
                offset,
                message: "zero field length".into(),
            });
        }
        let end = offset + 2 + field_len;
        if end > bytes.len() {
            return Err(Error::Parse {
                offset,
                message: format!(
                    "field declares {field_len} bytes, only {} remain",
                    bytes.len() - offset - 2
                ),
            });
        }
        let code = bytes[offset + 2];
        if code == BFEE_CODE {
            records.push(Bfee5300Record::decode(&bytes[offset + 3..end], offset)?);
        }
        offset = end;
    }
    Ok(records)
}

/// Decode a log into frames. Timestamps are unwrapped across 32-bit rollover.
pub fn decode_dat(bytes: &[u8], options: DatOptions) -> Result<Vec<CsiFrame>> {
    let records = parse_records(bytes)?;
    if records.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut frames = Vec::with_capacity(records.len());
    let mut wraps = 0u64;
    let mut prev: Option<u32> = None;
    for r in &records {
        if let Some(p) = prev {
            if r.timestamp_low < p {
                wraps += 1;
            }
        }
        prev = Some(r.timestamp_low);
        let micros = r.timestamp_low as u64 + (wraps << 32);
        frames.push(r.to_frame(micros as f64 / 1e6, options.scaled)?);
    }
    Ok(frames)
}

pub fn read_dat(path: impl AsRef<Path>, options: DatOptions) -> Result<Vec<CsiFrame>> {
    decode_dat(&fs::read(path)?, options)
}

fn quantize_part(v: f64) -> Result<i8> {
    let q = v.round();
    if !(-127.0..=127.0).contains(&q) {
        return Err(Error::Range(format!("CSI component {v} exceeds signed 8-bit range")));
    }
    Ok(q as i8)
}

fn quantize_micros(t: f64) -> Result<u64> {
    let us = (t * 1e6).round();
    if !(0.0..9.007_199_254_740_992e15).contains(&us) {
        return Err(Error::Range(format!("timestamp {t} cannot be encoded")));
    }
    Ok(us as u64)
}

fn quantize_rssi(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

fn frame_to_record(frame: &CsiFrame, index: usize) -> Result<Bfee5300Record> {
    let csi = frame
        .samples()
        .iter()
        .map(|c| Ok((quantize_part(c.re)?, quantize_part(c.im)?)))
        .collect::<Result<Vec<_>>>()?;
    let rssi = frame.rssi.unwrap_or([0.0; 3]);
    Ok(Bfee5300Record {
        timestamp_low: quantize_micros(frame.timestamp)? as u32,
        bfee_count: index as u16,
        nrx: frame.nrx() as u8,
        ntx: frame.ntx() as u8,
        rssi_a: quantize_rssi(rssi[0]),
        rssi_b: quantize_rssi(rssi[1]),
        rssi_c: quantize_rssi(rssi[2]),
        noise: DEFAULT_NOISE,
        agc: 0,
        antenna_sel: IDENTITY_ANTENNA_SEL,
        rate: 0x4101,
        csi,
    })
}

/// The frame exactly as it will come back from a `.dat` round trip.
pub fn quantize(frame: &CsiFrame) -> Result<CsiFrame> {
    let micros = quantize_micros(frame.timestamp)?;
    let r = frame_to_record(frame, 0)?;
    r.to_frame(micros as f64 / 1e6, false)
}

pub fn encode_dat(frames: &[CsiFrame]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (i, frame) in frames.iter().enumerate() {
        let body = frame_to_record(frame, i)?.encode();
        out.extend_from_slice(&((body.len() + 1) as u16).to_be_bytes());
        out.push(BFEE_CODE);
        out.extend_from_slice(&body);
    }
    Ok(out)
}

pub fn write_dat(frames: &[CsiFrame], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, encode_dat(frames)?)?;
    Ok(())
}

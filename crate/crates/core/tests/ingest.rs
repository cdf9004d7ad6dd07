use proptest::prelude::*;

use wimotion::ingest::{
    decode_dat, decode_jsonl, encode_dat, encode_jsonl, parse_records, payload_len, quantize,
    DatOptions,
};
use wimotion::{ActivityLabel, ComplexSample, CsiFrame, CsiTrace, Error};

/// LSB-first bit sink, written independently of the library's packer.
struct Bits {
    bytes: Vec<u8>,
    pos: usize,
}

impl Bits {
    fn new(len: usize) -> Self {
        Self { bytes: vec![0; len], pos: 0 }
    }

    fn push(&mut self, value: u8, width: usize) {
        for b in 0..width {
            if value >> b & 1 == 1 {
                self.bytes[self.pos / 8] |= 1 << (self.pos % 8);
            }
            self.pos += 1;
        }
    }
}

/// A `0xBB` field with `raw[k][rx][tx]` as the receive chains saw it.
fn hand_record(ts: u32, ntx: u8, nrx: u8, sel: u8, raw: &[Vec<Vec<(i8, i8)>>]) -> Vec<u8> {
    let len = payload_len(nrx as usize, ntx as usize);
    let mut bits = Bits::new(len);
    for sub in raw {
        bits.push(0, 3);
        for chain in sub {
            for &(re, im) in chain {
                bits.push(re as u8, 8);
                bits.push(im as u8, 8);
            }
        }
    }
    let mut body = Vec::new();
    body.extend_from_slice(&ts.to_le_bytes());
    body.extend_from_slice(&7u16.to_le_bytes());
    body.extend_from_slice(&[0, 0, nrx, ntx, 33, 34, 35, (-90i8) as u8, 20, sel]);
    body.extend_from_slice(&(len as u16).to_le_bytes());
    body.extend_from_slice(&0x4101u16.to_le_bytes());
    body.extend_from_slice(&bits.bytes);
    let mut field = ((body.len() + 1) as u16).to_be_bytes().to_vec();
    field.push(0xBB);
    field.extend_from_slice(&body);
    field
}

fn pattern(k: usize, rx: usize, tx: usize) -> (i8, i8) {
    let re = (k as i32 * 7 + rx as i32 * 31 + tx as i32 * 11) % 255 - 127;
    let im = 127 - (k as i32 * 13 + rx as i32 * 5 + tx as i32 * 41) % 255;
    (re as i8, im as i8)
}

fn raw_block(ntx: usize, nrx: usize) -> Vec<Vec<Vec<(i8, i8)>>> {
    (0..30)
        .map(|k| (0..nrx).map(|rx| (0..ntx).map(|tx| pattern(k, rx, tx)).collect()).collect())
        .collect()
}

#[test]
fn payload_lengths() {
    assert_eq!(payload_len(3, 1), 192);
    assert_eq!(payload_len(1, 1), 72);
    assert_eq!(payload_len(3, 3), 552);
    assert_eq!(payload_len(2, 2), 252);
}

#[test]
fn decodes_hand_packed_record() {
    for (ntx, nrx) in [(1u8, 3u8), (2, 3), (3, 3), (1, 1), (3, 2)] {
        let sel = match nrx {
            3 => 0b10_01_00,
            2 => 0b01_00,
            _ => 0,
        };
        let bytes = hand_record(1_500_000, ntx, nrx, sel, &raw_block(ntx as usize, nrx as usize));
        let frames = decode_dat(&bytes, DatOptions::default()).unwrap();
        assert_eq!(frames.len(), 1);
        let f = &frames[0];
        assert_eq!((f.ntx(), f.nrx()), (ntx as usize, nrx as usize));
        assert_eq!(f.timestamp, 1.5);
        assert_eq!(f.rssi, Some([33.0, 34.0, 35.0]));
        for tx in 0..ntx as usize {
            for rx in 0..nrx as usize {
                for k in 0..30 {
                    let (re, im) = pattern(k, rx, tx);
                    assert_eq!(f.get(tx, rx, k).unwrap(), ComplexSample::new(re as f64, im as f64));
                }
            }
        }
    }
}

#[test]
fn antenna_selection_permutes_receive_chains() {
    // chain 0 → antenna 2, chain 1 → antenna 0, chain 2 → antenna 1
    let sel = 0b01_00_10;
    let bytes = hand_record(0, 1, 3, sel, &raw_block(1, 3));
    let f = &decode_dat(&bytes, DatOptions::default()).unwrap()[0];
    for (chain, antenna) in [(0, 2), (1, 0), (2, 1)] {
        for k in 0..30 {
            let (re, im) = pattern(k, chain, 0);
            assert_eq!(f.get(0, antenna, k).unwrap(), ComplexSample::new(re as f64, im as f64));
        }
    }
    let rec = &parse_records(&bytes).unwrap()[0];
    assert_eq!(rec.antenna_sel, sel);
    assert_eq!(rec.bfee_count, 7);
    assert_eq!(rec.noise, -90);
    assert_eq!(rec.agc, 20);
}

#[test]
fn timestamps_unwrap_across_rollover() {
    let mut bytes = hand_record(u32::MAX - 9, 1, 1, 0, &raw_block(1, 1));
    bytes.extend(hand_record(10, 1, 1, 0, &raw_block(1, 1)));
    bytes.extend(hand_record(30, 1, 1, 0, &raw_block(1, 1)));
    let t: Vec<f64> = decode_dat(&bytes, DatOptions::default())
        .unwrap()
        .iter()
        .map(|f| f.timestamp)
        .collect();
    let base = (u32::MAX - 9) as f64 / 1e6;
    assert_eq!(t[0], base);
    assert!((t[1] - t[0] - 20e-6).abs() < 1e-9);
    assert!((t[2] - t[1] - 20e-6).abs() < 1e-9);
}

#[test]
fn foreign_fields_are_skipped() {
    let mut bytes = vec![0, 4, 0xC1, 1, 2, 3];
    bytes.extend(hand_record(5, 1, 3, 0b10_01_00, &raw_block(1, 3)));
    bytes.extend([0, 2, 0x10, 9]);
    assert_eq!(decode_dat(&bytes, DatOptions::default()).unwrap().len(), 1);
}

#[test]
fn scaled_decoding_preserves_phase() {
    let bytes = hand_record(5, 1, 3, 0b10_01_00, &raw_block(1, 3));
    let raw = &decode_dat(&bytes, DatOptions::default()).unwrap()[0];
    let scaled = &decode_dat(&bytes, DatOptions { scaled: true }).unwrap()[0];
    let ratio = scaled.samples()[0].amplitude() / raw.samples()[0].amplitude();
    assert!(ratio.is_finite() && ratio > 0.0);
    for (a, b) in raw.samples().iter().zip(scaled.samples()) {
        if a.amplitude() > 0.0 {
            assert!((b.amplitude() / a.amplitude() - ratio).abs() < 1e-9 * ratio);
            assert!((a.phase() - b.phase()).abs() < 1e-12);
        }
    }
}

#[test]
fn malformed_logs_are_rejected() {
    let good = hand_record(5, 1, 3, 0b10_01_00, &raw_block(1, 3));
    let opts = DatOptions::default();

    assert!(matches!(decode_dat(&[], opts), Err(Error::EmptyTrace)));
    assert!(matches!(decode_dat(&[0, 3, 0xC1, 0, 0], opts), Err(Error::EmptyTrace)));
    assert!(matches!(decode_dat(&good[..good.len() - 5], opts), Err(Error::Parse { .. })));
    assert!(matches!(decode_dat(&good[..2], opts), Err(Error::Parse { .. })));
    assert!(matches!(decode_dat(&[0, 0, 0xBB], opts), Err(Error::CorruptRecord { .. })));

    let mut bad_len = good.clone();
    bad_len[3 + 16] ^= 1;
    assert!(matches!(decode_dat(&bad_len, opts), Err(Error::CorruptRecord { .. })));

    let mut bad_nrx = good.clone();
    bad_nrx[3 + 8] = 4;
    assert!(matches!(decode_dat(&bad_nrx, opts), Err(Error::CorruptRecord { .. })));

    let mut short = good[..3 + 10].to_vec();
    short[0..2].copy_from_slice(&11u16.to_be_bytes());
    assert!(matches!(decode_dat(&short, opts), Err(Error::CorruptRecord { .. })));
}

#[test]
fn out_of_range_csi_cannot_be_encoded() {
    let mut csi = vec![ComplexSample::new(0.0, 0.0); 30];
    csi[4] = ComplexSample::new(127.6, 0.0);
    let f = CsiFrame::new(0.0, 1, 1, csi, None).unwrap();
    assert!(matches!(encode_dat(&[f]), Err(Error::Range(_))));
}

fn frames_strategy() -> impl Strategy<Value = Vec<CsiFrame>> {
    (1usize..=3, 1usize..=3, 1usize..6).prop_flat_map(|(ntx, nrx, n)| {
        let frame = (
            prop::collection::vec((-127.4..127.4f64, -127.4..127.4f64), ntx * nrx * 30),
            prop::option::of(prop::array::uniform3(0.0..255.0f64)),
        );
        prop::collection::vec(frame, n).prop_map(move |fs| {
            fs.into_iter()
                .enumerate()
                .map(|(i, (csi, rssi))| {
                    let csi = csi.into_iter().map(|(re, im)| ComplexSample::new(re, im)).collect();
                    CsiFrame::new(i as f64 / 30.0 + 0.25, ntx, nrx, csi, rssi).unwrap()
                })
                .collect()
        })
    })
}

fn finite() -> impl Strategy<Value = f64> {
    prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
}

fn trace_strategy() -> impl Strategy<Value = CsiTrace> {
    (1usize..=3, 1usize..=3, 1usize..4).prop_flat_map(|(ntx, nrx, n)| {
        let frame = prop::collection::vec((finite(), finite()), ntx * nrx * 30);
        (
            prop::collection::vec(frame, n),
            -1e6..1e6f64,
            1e-6..1e3f64,
            prop::option::of(0usize..6),
            prop::option::of("[a-z0-9\"\\\\ ]{0,8}"),
            1e-3..1e4f64,
        )
            .prop_map(move |(fs, t0, step, label, subject, rate)| {
                let frames = fs
                    .into_iter()
                    .enumerate()
                    .map(|(i, csi)| {
                        let t = t0 + step * i as f64;
                        let csi = csi.into_iter().map(|(re, im)| ComplexSample::new(re, im)).collect();
                        CsiFrame::new(t, ntx, nrx, csi, None).unwrap()
                    })
                    .collect();
                let mut trace = CsiTrace::new(frames, rate).unwrap();
                trace.label = label.map(|c| ActivityLabel::ALL[c]);
                trace.subject_id = subject;
                trace
            })
    })
}

proptest! {
    #[test]
    fn dat_round_trip_matches_quantize(frames in frames_strategy()) {
        let bytes = encode_dat(&frames).unwrap();
        let back = decode_dat(&bytes, DatOptions::default()).unwrap();
        prop_assert_eq!(back.len(), frames.len());
        for (orig, got) in frames.iter().zip(&back) {
            let want = quantize(orig).unwrap();
            prop_assert_eq!(got.samples(), want.samples());
            prop_assert_eq!(got.timestamp.to_bits(), want.timestamp.to_bits());
            prop_assert_eq!(got.rssi, want.rssi);
            for (a, b) in orig.samples().iter().zip(got.samples()) {
                prop_assert!((a.re - b.re).abs() <= 0.5 && (a.im - b.im).abs() <= 0.5);
            }
        }
    }

    #[test]
    fn jsonl_round_trip_is_lossless(trace in trace_strategy()) {
        let mut buf = Vec::new();
        encode_jsonl(&trace, &mut buf).unwrap();
        let back = decode_jsonl(buf.as_slice()).unwrap();
        prop_assert_eq!(back.label, trace.label);
        prop_assert_eq!(&back.subject_id, &trace.subject_id);
        prop_assert_eq!(back.sample_rate.to_bits(), trace.sample_rate.to_bits());
        prop_assert_eq!(back.len(), trace.len());
        for (a, b) in trace.frames().iter().zip(back.frames()) {
            prop_assert_eq!(a.timestamp.to_bits(), b.timestamp.to_bits());
            for (x, y) in a.samples().iter().zip(b.samples()) {
                prop_assert_eq!(x.re.to_bits(), y.re.to_bits());
                prop_assert_eq!(x.im.to_bits(), y.im.to_bits());
            }
        }
    }
}

#[test]
fn jsonl_schema_errors_name_the_line() {
    let row: String = format!("[{}]", vec!["[1.0,2.0]"; 30].join(","));
    let good = format!("{{\"t\":0.0,\"ntx\":1,\"nrx\":1,\"csi\":[[{row}]]}}");
    assert_eq!(decode_jsonl(good.as_bytes()).unwrap().len(), 1);

    let cases = [
        (format!("{{\"meta\":{{\"label\":\"Jump\"}}}}\n{good}"), 1, "label"),
        (format!("{good}\n{{\"ntx\":1,\"nrx\":1,\"csi\":[[{row}]]}}"), 2, "t"),
        (format!("{good}\n{{\"t\":0.1,\"ntx\":2,\"nrx\":1,\"csi\":[[{row}]]}}"), 2, "csi"),
        (format!("{good}\n{{\"meta\":{{}}}}"), 2, "meta"),
        ("{\"t\":0.0,\"ntx\":1,\"nrx\":1,\"csi\":[[[[1.0,\"x\"]]]]}".to_string(), 1, "csi"),
        ("not json".to_string(), 1, "<line>"),
    ];
    for (text, want_line, want_field) in cases {
        match decode_jsonl(text.as_bytes()) {
            Err(Error::Schema { line, field, .. }) => {
                assert_eq!((line, field.as_str()), (want_line, want_field), "{text}");
            }
            other => panic!("expected schema error for {text}: {other:?}"),
        }
    }
}

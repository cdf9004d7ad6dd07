//! File formats: Intel 5300 CSI-Tool logs and JSON-Lines traces.

pub mod dat;
pub mod jsonl;

pub use dat::{
    decode_dat, encode_dat, parse_records, payload_len, quantize, read_dat, write_dat, Bfee5300Record,
    DatOptions,
};
pub use jsonl::{decode_jsonl, encode_jsonl, read_jsonl, write_jsonl};

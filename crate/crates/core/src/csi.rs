//! Channel state information domain types.
//!
//! A [`CsiFrame`] holds the complex channel matrix reported for one packet:
//! `ntx × nrx` antenna pairs, each with [`SUBCARRIERS`] grouped subcarriers.
//! A [`CsiTrace`] is a time-ordered sequence of frames sharing the same
//! antenna configuration, optionally labelled with an activity.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of grouped subcarriers reported per antenna pair.
pub const SUBCARRIERS: usize = 30;

/// Maximum antennas on either side of the link.
pub const MAX_ANTENNAS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexSample {
    pub re: f64,
    pub im: f64,
}

impl ComplexSample {
    pub const ZERO: ComplexSample = ComplexSample { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn from_polar(amplitude: f64, phase: f64) -> Self {
        Self {
            re: amplitude * phase.cos(),
            im: amplitude * phase.sin(),
        }
    }

    pub fn amplitude(&self) -> f64 {
        self.re.hypot(self.im)
    }

    /// Phase in `[-π, π]`, following the `atan2` convention.
    pub fn phase(&self) -> f64 {
        self.im.atan2(self.re)
    }
}

impl From<num_complex::Complex64> for ComplexSample {
    fn from(c: num_complex::Complex64) -> Self {
        Self { re: c.re, im: c.im }
    }
}

impl From<ComplexSample> for num_complex::Complex64 {
    fn from(c: ComplexSample) -> Self {
        num_complex::Complex64::new(c.re, c.im)
    }
}

/// The six recognised activities, with stable codes 0–5.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActivityLabel {
    Bend,
    HandClap,
    Walk,
    PhoneCall,
    SitDown,
    Squat,
}

impl ActivityLabel {
    pub const COUNT: usize = 6;

    pub const ALL: [ActivityLabel; 6] = [
        ActivityLabel::Bend,
        ActivityLabel::HandClap,
        ActivityLabel::Walk,
        ActivityLabel::PhoneCall,
        ActivityLabel::SitDown,
        ActivityLabel::Squat,
    ];

    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Self> {
        Self::ALL.get(code).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActivityLabel::Bend => "Bend",
            ActivityLabel::HandClap => "HandClap",
            ActivityLabel::Walk => "Walk",
            ActivityLabel::PhoneCall => "PhoneCall",
            ActivityLabel::SitDown => "SitDown",
            ActivityLabel::Squat => "Squat",
        }
    }
}

impl fmt::Display for ActivityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActivityLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|l| l.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown activity label {s:?}")))
    }
}

/// Signed subcarrier indices of the 30 reported groups, plus the FFT size.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubcarrierIndexSet {
    k: Vec<i32>,
    fft_size: u32,
}

impl SubcarrierIndexSet {
    /// 802.11n 20 MHz grouping as exported by the Intel 5300.
    pub const IWL5300_20MHZ: [i32; SUBCARRIERS] = [
        -28, -26, -24, -22, -20, -18, -16, -14, -12, -10, -8, -6, -4, -2, -1, 1, 3, 5, 7, 9, 11,
        13, 15, 17, 19, 21, 23, 25, 27, 28,
    ];

    pub fn new(k: Vec<i32>, fft_size: u32) -> Result<Self> {
        if k.len() != SUBCARRIERS {
            return Err(Error::InvalidArgument(format!(
                "subcarrier index set needs {SUBCARRIERS} entries, got {}",
                k.len()
            )));
        }
        if fft_size == 0 {
            return Err(Error::InvalidArgument("fft size must be positive".into()));
        }
        if k.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "subcarrier indices must be strictly increasing".into(),
            ));
        }
        if k[0] != -28 || k[SUBCARRIERS - 1] != 28 {
            return Err(Error::InvalidArgument(
                "subcarrier indices must span -28..=28".into(),
            ));
        }
        Ok(Self { k, fft_size })
    }

    /// A set with `Σk = 0`: `±{1, 2, 4, 6, …, 28}`.
    pub fn symmetric() -> Self {
        let mut pos: Vec<i32> = vec![1];
        pos.extend((1..=14).map(|i| 2 * i));
        let mut k: Vec<i32> = pos.iter().rev().map(|&v| -v).collect();
        k.extend(pos);
        Self::new(k, 64).expect("symmetric set is valid")
    }

    pub fn indices(&self) -> &[i32] {
        &self.k
    }

    pub fn fft_size(&self) -> u32 {
        self.fft_size
    }

    pub fn sum(&self) -> i64 {
        self.k.iter().map(|&v| v as i64).sum()
    }
}

impl Default for SubcarrierIndexSet {
    fn default() -> Self {
        Self {
            k: Self::IWL5300_20MHZ.to_vec(),
            fft_size: 64,
        }
    }
}

/// One packet's channel matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiFrame {
    pub timestamp: f64,
    ntx: usize,
    nrx: usize,
    csi: Vec<ComplexSample>,
    pub rssi: Option<[f64; 3]>,
}

impl CsiFrame {
    /// `csi` is laid out `[tx][rx][subcarrier]`, row-major.
    pub fn new(
        timestamp: f64,
        ntx: usize,
        nrx: usize,
        csi: Vec<ComplexSample>,
        rssi: Option<[f64; 3]>,
    ) -> Result<Self> {
        if !(1..=MAX_ANTENNAS).contains(&ntx) || !(1..=MAX_ANTENNAS).contains(&nrx) {
            return Err(Error::InvalidArgument(format!(
                "antenna counts must be in 1..=3, got ntx={ntx} nrx={nrx}"
            )));
        }
        if csi.len() != ntx * nrx * SUBCARRIERS {
            return Err(Error::InvalidArgument(format!(
                "expected {} CSI entries for {ntx}x{nrx}, got {}",
                ntx * nrx * SUBCARRIERS,
                csi.len()
            )));
        }
        if !timestamp.is_finite() {
            return Err(Error::InvalidArgument("timestamp must be finite".into()));
        }
        Ok(Self {
            timestamp,
            ntx,
            nrx,
            csi,
            rssi,
        })
    }

    pub fn ntx(&self) -> usize {
        self.ntx
    }

    pub fn nrx(&self) -> usize {
        self.nrx
    }

    pub fn samples(&self) -> &[ComplexSample] {
        &self.csi
    }

    /// The 30 subcarrier samples of antenna pair `(tx, rx)`.
    pub fn link(&self, tx: usize, rx: usize) -> Result<&[ComplexSample]> {
        if tx >= self.ntx {
            return Err(Error::IndexOutOfRange {
                what: "tx",
                index: tx,
                limit: self.ntx,
            });
        }
        if rx >= self.nrx {
            return Err(Error::IndexOutOfRange {
                what: "rx",
                index: rx,
                limit: self.nrx,
            });
        }
        let start = (tx * self.nrx + rx) * SUBCARRIERS;
        Ok(&self.csi[start..start + SUBCARRIERS])
    }

    pub fn get(&self, tx: usize, rx: usize, k: usize) -> Result<ComplexSample> {
        if k >= SUBCARRIERS {
            return Err(Error::IndexOutOfRange {
                what: "subcarrier",
                index: k,
                limit: SUBCARRIERS,
            });
        }
        Ok(self.link(tx, rx)?[k])
    }
}

/// Time series of frames with a shared antenna configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct CsiTrace {
    frames: Vec<CsiFrame>,
    pub label: Option<ActivityLabel>,
    pub subject_id: Option<String>,
    pub sample_rate: f64,
}

impl CsiTrace {
    pub const NOMINAL_RATE: f64 = 30.0;

    pub fn new(frames: Vec<CsiFrame>, sample_rate: f64) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if let Some(first) = frames.first() {
            let shape = (first.ntx, first.nrx);
            for (i, f) in frames.iter().enumerate() {
                if (f.ntx, f.nrx) != shape {
                    return Err(Error::InvalidArgument(format!(
                        "frame {i} has shape {}x{}, trace is {}x{}",
                        f.ntx, f.nrx, shape.0, shape.1
                    )));
                }
            }
            if let Some(i) = frames
                .windows(2)
                .position(|w| w[1].timestamp <= w[0].timestamp)
            {
                return Err(Error::InvalidArgument(format!(
                    "timestamps not strictly increasing at frame {}",
                    i + 1
                )));
            }
        }
        Ok(Self {
            frames,
            label: None,
            subject_id: None,
            sample_rate,
        })
    }

    pub fn with_label(mut self, label: ActivityLabel) -> Self {
        self.label = Some(label);
        self
    }

    pub fn with_subject(mut self, subject: impl Into<String>) -> Self {
        self.subject_id = Some(subject.into());
        self
    }

    pub fn frames(&self) -> &[CsiFrame] {
        &self.frames
    }

    pub fn into_frames(self) -> Vec<CsiFrame> {
        self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// `(ntx, nrx)`, or `None` for an empty trace.
    pub fn shape(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| (f.ntx, f.nrx))
    }

    fn check_link(&self, tx: usize, rx: usize) -> Result<()> {
        let (ntx, nrx) = self.shape().unwrap_or((0, 0));
        if tx >= ntx {
            return Err(Error::IndexOutOfRange {
                what: "tx",
                index: tx,
                limit: ntx,
            });
        }
        if rx >= nrx {
            return Err(Error::IndexOutOfRange {
                what: "rx",
                index: rx,
                limit: nrx,
            });
        }
        Ok(())
    }

    fn link_matrix(&self, tx: usize, rx: usize, f: impl Fn(&ComplexSample) -> f64) -> Result<DMatrix<f64>> {
        self.check_link(tx, rx)?;
        let mut m = DMatrix::zeros(self.frames.len(), SUBCARRIERS);
        for (t, frame) in self.frames.iter().enumerate() {
            for (k, s) in frame.link(tx, rx)?.iter().enumerate() {
                m[(t, k)] = f(s);
            }
        }
        Ok(m)
    }
}

/// `T × 30` matrix of amplitudes for antenna pair `(tx, rx)`.
pub fn amplitude_matrix(trace: &CsiTrace, tx: usize, rx: usize) -> Result<DMatrix<f64>> {
    trace.link_matrix(tx, rx, ComplexSample::amplitude)
}

/// `T × 30` matrix of raw phases in `[-π, π]` for antenna pair `(tx, rx)`.
pub fn phase_matrix(trace: &CsiTrace, tx: usize, rx: usize) -> Result<DMatrix<f64>> {
    trace.link_matrix(tx, rx, ComplexSample::phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn single(entry: ComplexSample) -> CsiTrace {
        let frame = CsiFrame::new(0.0, 1, 1, vec![entry; SUBCARRIERS], None).unwrap();
        CsiTrace::new(vec![frame], 30.0).unwrap()
    }

    #[test]
    fn amplitude_examples() {
        let m = amplitude_matrix(&single(ComplexSample::new(3.0, 4.0)), 0, 0).unwrap();
        assert_eq!(m[(0, 0)], 5.0);
        let m = amplitude_matrix(&single(ComplexSample::ZERO), 0, 0).unwrap();
        assert!(m.iter().all(|&v| v == 0.0));
        let m = amplitude_matrix(&single(ComplexSample::new(1.0, 0.0)), 0, 0).unwrap();
        assert_eq!(m[(0, 29)], 1.0);
    }

    #[test]
    fn phase_examples() {
        let p = |re, im| phase_matrix(&single(ComplexSample::new(re, im)), 0, 0).unwrap()[(0, 0)];
        assert_eq!(p(1.0, 0.0), 0.0);
        assert_eq!(p(0.0, 1.0), PI / 2.0);
        assert_eq!(p(-1.0, 0.0), PI);
    }

    #[test]
    fn out_of_range_link() {
        let t = single(ComplexSample::ZERO);
        assert!(matches!(
            amplitude_matrix(&t, 1, 0),
            Err(Error::IndexOutOfRange { what: "tx", .. })
        ));
        assert!(matches!(
            phase_matrix(&t, 0, 2),
            Err(Error::IndexOutOfRange { what: "rx", .. })
        ));
    }

    #[test]
    fn labels_round_trip_codes() {
        for (i, l) in ActivityLabel::ALL.iter().enumerate() {
            assert_eq!(l.code(), i);
            assert_eq!(ActivityLabel::from_code(i), Some(*l));
            assert_eq!(l.name().parse::<ActivityLabel>().unwrap(), *l);
        }
        assert!(ActivityLabel::from_code(6).is_none());
        assert!("Jump".parse::<ActivityLabel>().is_err());
    }

    #[test]
    fn subcarrier_sets() {
        let d = SubcarrierIndexSet::default();
        assert_eq!(d.indices()[0], -28);
        assert_eq!(d.indices()[29], 28);
        assert_ne!(d.sum(), 0);
        let s = SubcarrierIndexSet::symmetric();
        assert_eq!(s.sum(), 0);
        assert_eq!(s.indices().len(), 30);
        assert!(SubcarrierIndexSet::new(vec![0; 30], 64).is_err());
        assert!(SubcarrierIndexSet::new(vec![1, 2], 64).is_err());
    }

    #[test]
    fn trace_validation() {
        let f0 = CsiFrame::new(0.0, 1, 2, vec![ComplexSample::ZERO; 60], None).unwrap();
        let f1 = CsiFrame::new(0.0, 1, 2, vec![ComplexSample::ZERO; 60], None).unwrap();
        assert!(CsiTrace::new(vec![f0.clone(), f1], 30.0).is_err());
        let f2 = CsiFrame::new(0.1, 2, 1, vec![ComplexSample::ZERO; 60], None).unwrap();
        assert!(CsiTrace::new(vec![f0, f2], 30.0).is_err());
        assert!(CsiFrame::new(0.0, 4, 1, vec![ComplexSample::ZERO; 120], None).is_err());
        assert!(CsiFrame::new(0.0, 1, 1, vec![ComplexSample::ZERO; 29], None).is_err());
    }

    #[test]
    fn polar_reconstruction() {
        let s = ComplexSample::new(-0.3, 2.5);
        let r = ComplexSample::from_polar(s.amplitude(), s.phase());
        assert!((r.re - s.re).abs() < 1e-12 && (r.im - s.im).abs() < 1e-12);
    }
}

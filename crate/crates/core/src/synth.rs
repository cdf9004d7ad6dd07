//! Deterministic synthetic CSI.
//!
//! The channel on receive antenna `r` and subcarrier `k` is a fixed
//! environment (line of sight plus static reflections) plus `path_count`
//! body reflections whose path length oscillates at `body_freq`:
//!
//! ```text
//! H(r, k, t) = Σ_s g_s e^{-j2π f_k τ_s(r)} + Σ_p g_p e^{-j2π f_k τ_p(r, t)}
//! ```
//!
//! Receiver impairments follow the usual phase error model: every packet gets
//! a timing offset δ (in samples), the trace a constant offset β, and
//! complex Gaussian noise is added on top.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::csi::{ActivityLabel, ComplexSample, CsiFrame, CsiTrace, SubcarrierIndexSet, SUBCARRIERS};
use crate::error::{Error, Result};

const LIGHT_SPEED: f64 = 299_792_458.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivityProfile {
    pub class: ActivityLabel,
    /// Dominant motion frequency, Hz.
    pub body_freq: f64,
    /// Amplitude of each body reflection relative to the line of sight.
    pub path_gain: f64,
    pub path_count: usize,
    /// Seconds.
    pub duration: f64,
}

impl ActivityProfile {
    pub fn new(
        class: ActivityLabel,
        body_freq: f64,
        path_gain: f64,
        path_count: usize,
        duration: f64,
    ) -> Result<Self> {
        let p = Self {
            class,
            body_freq,
            path_gain,
            path_count,
            duration,
        };
        p.validate()?;
        Ok(p)
    }

    fn validate(&self) -> Result<()> {
        if !(self.body_freq > 0.0 && self.body_freq.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "body frequency must be positive, got {}",
                self.body_freq
            )));
        }
        if !(self.duration > 0.0 && self.duration.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "duration must be positive, got {}",
                self.duration
            )));
        }
        if !(self.path_gain >= 0.0 && self.path_gain.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "path gain must be non-negative, got {}",
                self.path_gain
            )));
        }
        Ok(())
    }

    /// Default per-class parameters. Pairs that are close in motion frequency
    /// differ in reflection strength and vice versa.
    pub fn default_for(class: ActivityLabel) -> Self {
        let (body_freq, path_gain, path_count) = match class {
            ActivityLabel::Bend => (0.70, 0.11, 2),
            ActivityLabel::HandClap => (1.20, 0.04, 1),
            ActivityLabel::Walk => (1.50, 0.19, 3),
            ActivityLabel::PhoneCall => (0.45, 0.07, 1),
            ActivityLabel::SitDown => (0.25, 0.16, 2),
            ActivityLabel::Squat => (0.95, 0.15, 3),
        };
        Self {
            class,
            body_freq,
            path_gain,
            path_count,
            duration: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticNoise {
    /// Per-packet timing offset δ drawn uniformly from this range (samples).
    pub timing_offset: (f64, f64),
    /// Draw a constant phase offset β per trace.
    pub constant_offset: bool,
    /// Standard deviation of each complex noise component, relative to the
    /// line-of-sight amplitude.
    pub awgn_std: f64,
}

impl SyntheticNoise {
    pub fn none() -> Self {
        Self {
            timing_offset: (0.0, 0.0),
            constant_offset: false,
            awgn_std: 0.0,
        }
    }

    /// Timing and constant offsets only, no additive noise.
    pub fn offsets_only() -> Self {
        Self {
            awgn_std: 0.0,
            ..Self::default()
        }
    }
}

impl Default for SyntheticNoise {
    fn default() -> Self {
        Self {
            timing_offset: (0.0, 2.0),
            constant_offset: true,
            awgn_std: 0.01,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub sample_rate: f64,
    pub ntx: usize,
    pub nrx: usize,
    pub subcarriers: SubcarrierIndexSet,
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    /// Receive antenna spacing, metres.
    pub antenna_spacing_m: f64,
    /// Peak path-length change of a body reflection, metres.
    pub excursion_m: f64,
    /// Seed of the static environment shared by all traces.
    pub environment_seed: u64,
    pub static_reflections: usize,
    /// Spread of the body reflection positions between traces, metres.
    pub position_jitter_m: f64,
    /// Output scale; keeps values inside the 8-bit range of the 5300 log format.
    pub scale: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            sample_rate: CsiTrace::NOMINAL_RATE,
            ntx: 1,
            nrx: 3,
            subcarriers: SubcarrierIndexSet::default(),
            carrier_hz: 2.412e9,
            subcarrier_spacing_hz: 312.5e3,
            antenna_spacing_m: 0.0625,
            excursion_m: 0.02,
            environment_seed: 0x5eed,
            static_reflections: 3,
            position_jitter_m: 0.004,
            scale: 40.0,
        }
    }
}

struct Path {
    gain: f64,
    delay_s: f64,
    /// Extra delay per antenna index from the arrival angle.
    antenna_delay_s: f64,
    motion_phase: f64,
}

fn static_paths(config: &SynthConfig) -> Vec<Path> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.environment_seed);
    let mut paths = vec![Path {
        gain: 1.0,
        delay_s: 20e-9,
        antenna_delay_s: config.antenna_spacing_m * 0.3f64.sin() / LIGHT_SPEED,
        motion_phase: 0.0,
    }];
    for _ in 0..config.static_reflections {
        let angle: f64 = rng.random_range(-1.2..1.2);
        paths.push(Path {
            gain: rng.random_range(0.05..0.15),
            delay_s: rng.random_range(35e-9..80e-9),
            antenna_delay_s: config.antenna_spacing_m * angle.sin() / LIGHT_SPEED,
            motion_phase: 0.0,
        });
    }
    paths
}

// Where the moving body parts sit depends on the activity; each trace
// perturbs those positions slightly.
fn body_paths(profile: &ActivityProfile, config: &SynthConfig, rng: &mut ChaCha8Rng) -> Vec<Path> {
    let mut layout = ChaCha8Rng::seed_from_u64(config.environment_seed);
    layout.set_stream(2 + profile.class.code() as u64);
    let jitter = Normal::new(0.0, config.position_jitter_m / LIGHT_SPEED).expect("finite jitter");
    (0..profile.path_count)
        .map(|_| {
            let angle: f64 = layout.random_range(-1.3..1.3);
            let delay: f64 = layout.random_range(30e-9..60e-9);
            Path {
                gain: profile.path_gain * rng.random_range(0.9..1.1),
                delay_s: delay + jitter.sample(rng),
                antenna_delay_s: config.antenna_spacing_m * (angle + rng.random_range(-0.05..0.05)).sin()
                    / LIGHT_SPEED,
                motion_phase: rng.random_range(0.0..2.0 * PI),
            }
        })
        .collect()
}

pub fn generate_trace(profile: &ActivityProfile, seed: u64, noise: &SyntheticNoise) -> Result<CsiTrace> {
    generate_trace_with(profile, seed, noise, &SynthConfig::default())
}

pub fn generate_trace_with(
    profile: &ActivityProfile,
    seed: u64,
    noise: &SyntheticNoise,
    config: &SynthConfig,
) -> Result<CsiTrace> {
    profile.validate()?;
    if !(config.sample_rate > 0.0) {
        return Err(Error::InvalidArgument("sample rate must be positive".into()));
    }
    let (lo, hi) = noise.timing_offset;
    if !(lo <= hi) || noise.awgn_std < 0.0 {
        return Err(Error::InvalidArgument("invalid noise configuration".into()));
    }
    let frames_n = ((profile.duration * config.sample_rate).round() as usize).max(1);

    // The channel and the impairments draw from separate streams so a clean
    // and a noisy trace with the same seed share the same true channel.
    let mut geo = ChaCha8Rng::seed_from_u64(seed);
    geo.set_stream(0);
    let mut imp = ChaCha8Rng::seed_from_u64(seed);
    imp.set_stream(1);

    let statics = static_paths(config);
    let body = body_paths(profile, config, &mut geo);
    let freq_scale: Vec<f64> = (0..profile.path_count)
        .map(|_| geo.random_range(0.95..1.05))
        .collect();

    let k = config.subcarriers.indices();
    let n_fft = config.subcarriers.fft_size() as f64;
    let f_k: Vec<f64> = k
        .iter()
        .map(|&ki| config.carrier_hz + ki as f64 * config.subcarrier_spacing_hz)
        .collect();

    // Static part depends only on (rx, k).
    let mut static_h = vec![Complex64::new(0.0, 0.0); config.nrx * SUBCARRIERS];
    for rx in 0..config.nrx {
        for (ki, &f) in f_k.iter().enumerate() {
            static_h[rx * SUBCARRIERS + ki] = statics
                .iter()
                .map(|p| {
                    let tau = p.delay_s + rx as f64 * p.antenna_delay_s;
                    Complex64::from_polar(p.gain, -2.0 * PI * f * tau)
                })
                .sum();
        }
    }

    let beta = if noise.constant_offset {
        imp.random_range(-PI..PI)
    } else {
        0.0
    };
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let excursion_s = config.excursion_m / LIGHT_SPEED;

    let mut frames = Vec::with_capacity(frames_n);
    for n in 0..frames_n {
        let t = n as f64 / config.sample_rate;
        let delta = if hi > lo { imp.random_range(lo..hi) } else { lo };
        let mut csi = Vec::with_capacity(config.ntx * config.nrx * SUBCARRIERS);
        for _tx in 0..config.ntx {
            for rx in 0..config.nrx {
                for (ki, &f) in f_k.iter().enumerate() {
                    let mut h = static_h[rx * SUBCARRIERS + ki];
                    for (p, fs) in body.iter().zip(&freq_scale) {
                        let swing = (2.0 * PI * profile.body_freq * fs * t + p.motion_phase).sin();
                        let tau = p.delay_s + rx as f64 * p.antenna_delay_s + excursion_s * swing;
                        h += Complex64::from_polar(p.gain, -2.0 * PI * f * tau);
                    }
                    let offset = -2.0 * PI * k[ki] as f64 / n_fft * delta + beta;
                    h *= Complex64::from_polar(1.0, offset);
                    if noise.awgn_std > 0.0 {
                        h += Complex64::new(
                            noise.awgn_std * normal.sample(&mut imp),
                            noise.awgn_std * normal.sample(&mut imp),
                        );
                    }
                    csi.push(ComplexSample::from(h * config.scale));
                }
            }
        }
        frames.push(CsiFrame::new(t, config.ntx, config.nrx, csi, None)?);
    }
    Ok(CsiTrace::new(frames, config.sample_rate)?.with_label(profile.class))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub synth: SynthConfig,
    pub noise: SyntheticNoise,
    /// One profile per class, in class-code order.
    pub profiles: Vec<ActivityProfile>,
    /// Relative per-sample spread of frequency and gain.
    pub jitter: f64,
    /// Per-sample spread of duration, seconds.
    pub duration_spread: f64,
    pub subjects: usize,
    /// Relative change in motion speed between neighbouring subjects.
    pub subject_spread: f64,
}

impl Default for DatasetConfig {
    fn default() -> Self {
        Self {
            synth: SynthConfig::default(),
            noise: SyntheticNoise::default(),
            profiles: ActivityLabel::ALL.iter().map(|&c| ActivityProfile::default_for(c)).collect(),
            jitter: 0.06,
            duration_spread: 0.25,
            subjects: 1,
            subject_spread: 0.05,
        }
    }
}

pub fn generate_dataset(n_per_class: usize, seed: u64) -> Result<Vec<CsiTrace>> {
    generate_dataset_with(n_per_class, seed, &DatasetConfig::default())
}

/// `6 · n_per_class` traces ordered by class, then sample index. Subjects are
/// assigned round-robin within each class and named `s1`, `s2`, ….
pub fn generate_dataset_with(
    n_per_class: usize,
    seed: u64,
    config: &DatasetConfig,
) -> Result<Vec<CsiTrace>> {
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("n_per_class must be at least 1".into()));
    }
    if config.profiles.len() != ActivityLabel::COUNT {
        return Err(Error::InvalidArgument(format!(
            "need {} class profiles, got {}",
            ActivityLabel::COUNT,
            config.profiles.len()
        )));
    }
    if config.subjects == 0 {
        return Err(Error::InvalidArgument("at least one subject is required".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(n_per_class * ActivityLabel::COUNT);
    for base in &config.profiles {
        for i in 0..n_per_class {
            let subject = i % config.subjects;
            let speed = 1.0
                + config.subject_spread * (subject as f64 - (config.subjects - 1) as f64 / 2.0);
            let j = config.jitter;
            let spread = config.duration_spread;
            let mut p = base.clone();
            p.body_freq *= speed * master.random_range(1.0 - j..=1.0 + j);
            p.path_gain *= master.random_range(1.0 - j..=1.0 + j);
            if spread > 0.0 {
                p.duration = (p.duration + master.random_range(-spread..=spread)).max(0.5);
            }
            jobs.push((p, master.next_u64(), subject));
        }
    }
    use rayon::prelude::*;
    jobs.into_par_iter()
        .map(|(p, s, subject)| {
            Ok(generate_trace_with(&p, s, &config.noise, &config.synth)?
                .with_subject(format!("s{}", subject + 1)))
        })
        .collect()
}

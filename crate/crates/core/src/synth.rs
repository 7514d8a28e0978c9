//! Deterministic synthetic drives with injected anomalies.
//!
//! Noise comes from ChaCha8 seeded with the scenario seed and is drawn in a
//! fixed order (speed, gsen x/y/z, gyro x/y/z per sample), so a scenario
//! reproduces the same stream bit-for-bit on every platform.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::{Error, GroundTruth, RawSample, Result, TruthEntry, SAMPLE_RATE_HZ};

/// Resting vertical acceleration, m/s².
pub const GRAVITY: f64 = 9.81;

/// Angular-rate transient per unit of linear shock, (rad/s) per (m/s²).
pub const GYRO_COUPLING: f64 = 0.1;

/// Metres per degree of latitude.
const METRES_PER_DEGREE: f64 = 111_320.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InjectionKind {
    Pothole,
    HarshBrake,
    HarshCorner,
}

impl InjectionKind {
    /// Samples touched by the injection.
    pub const fn span(self) -> usize {
        match self {
            InjectionKind::Pothole => 2,
            InjectionKind::HarshBrake | InjectionKind::HarshCorner => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Injection {
    pub kind: InjectionKind,
    /// Seconds from the start of the drive; rounded to the nearest sample.
    pub time_s: f64,
    /// Peak amplitude on the primary channel, m/s².
    pub magnitude: f64,
}

impl Injection {
    pub fn first_sample(&self) -> usize {
        libm::round(self.time_s * SAMPLE_RATE_HZ) as usize
    }
}

/// Speed held from `start_s` until the next segment starts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedSegment {
    pub start_s: f64,
    /// m/s
    pub speed: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSigmas {
    pub speed: f64,
    pub gsen: [f64; 3],
    pub gyro: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriveScenario {
    pub seed: u64,
    pub duration_s: f64,
    #[serde(default = "default_start_timestamp")]
    pub start_timestamp: f64,
    #[serde(default = "default_origin")]
    pub origin: [f64; 2],
    pub base_speed_profile: Vec<SpeedSegment>,
    pub noise_sigmas: NoiseSigmas,
    /// Slowly varying road roughness scaling all sensor noise; `None` keeps
    /// the noise stationary.
    #[serde(default)]
    pub roughness: Option<Roughness>,
    #[serde(default)]
    pub injections: Vec<Injection>,
}

/// Log-normal AR(1) multiplier on the accelerometer and gyroscope noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roughness {
    /// Stationary standard deviation of the log multiplier.
    pub sigma_log: f64,
    /// Correlation time of the log multiplier, seconds.
    pub correlation_s: f64,
}

fn default_start_timestamp() -> f64 {
    1_500_000_000.0
}

fn default_origin() -> [f64; 2] {
    [40.4433, -79.9436]
}

impl DriveScenario {
    /// 2000 s (1000 windows) of steady driving with 30 potholes, each placed
    /// inside a single window.
    pub fn demo() -> Self {
        let injections = (0..30)
            .map(|i| Injection {
                kind: InjectionKind::Pothole,
                // window 15 + 33i, third sample of the window
                time_s: f64::from(15 + 33 * i) * 2.0 + 0.6,
                magnitude: 3.0,
            })
            .collect();
        DriveScenario {
            seed: 20_230_107,
            duration_s: 2000.0,
            start_timestamp: default_start_timestamp(),
            origin: default_origin(),
            base_speed_profile: alloc::vec![SpeedSegment {
                start_s: 0.0,
                speed: 11.0,
            }],
            noise_sigmas: NoiseSigmas {
                speed: 0.3,
                gsen: [0.15, 0.15, 0.2],
                gyro: [0.02, 0.02, 0.02],
            },
            roughness: Some(Roughness {
                sigma_log: 0.4,
                correlation_s: 20.0,
            }),
            injections,
        }
    }

    pub fn sample_count(&self) -> usize {
        libm::floor(self.duration_s * SAMPLE_RATE_HZ) as usize
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |msg: alloc::string::String| Err(Error::InvalidScenario(msg));
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return invalid(alloc::format!(
                "duration {} must be positive",
                self.duration_s
            ));
        }
        if !self.start_timestamp.is_finite() || self.origin.iter().any(|v| !v.is_finite()) {
            return invalid("start timestamp and origin must be finite".into());
        }
        let Some(first) = self.base_speed_profile.first() else {
            return invalid("speed profile is empty".into());
        };
        if first.start_s != 0.0 {
            return invalid("speed profile must start at 0 s".into());
        }
        for pair in self.base_speed_profile.windows(2) {
            if pair[1].start_s.partial_cmp(&pair[0].start_s) != Some(Ordering::Greater) {
                return invalid("speed segments must start in increasing order".into());
            }
        }
        if self
            .base_speed_profile
            .iter()
            .any(|s| !(s.speed >= 0.0 && s.speed.is_finite()))
        {
            return invalid("segment speeds must be finite and non-negative".into());
        }
        let sig = &self.noise_sigmas;
        let sigmas = [sig.speed].into_iter().chain(sig.gsen).chain(sig.gyro);
        if sigmas.clone().any(|s| !(s >= 0.0 && s.is_finite())) {
            return invalid("noise sigmas must be finite and non-negative".into());
        }

        let n = self.sample_count();
        let mut spans: Vec<(usize, usize)> = Vec::with_capacity(self.injections.len());
        for inj in &self.injections {
            if !(inj.magnitude > 0.0 && inj.magnitude.is_finite()) {
                return invalid(alloc::format!(
                    "injection at {} s has non-positive magnitude",
                    inj.time_s
                ));
            }
            if inj.time_s.is_nan() || inj.time_s < 0.0 || inj.first_sample() + inj.kind.span() > n {
                return invalid(alloc::format!(
                    "injection at {} s runs past the end of the drive",
                    inj.time_s
                ));
            }
            spans.push((inj.first_sample(), inj.first_sample() + inj.kind.span()));
        }
        spans.sort_unstable();
        if let Some(pair) = spans.windows(2).find(|p| p[1].0 < p[0].1) {
            return invalid(alloc::format!(
                "injections overlap at samples {} and {}",
                pair[0].0,
                pair[1].0
            ));
        }
        Ok(())
    }

    fn speed_at(&self, t: f64) -> f64 {
        let idx = self
            .base_speed_profile
            .partition_point(|s| s.start_s <= t)
            .saturating_sub(1);
        self.base_speed_profile[idx].speed
    }
}

/// Generated samples and, per sample, the injection covering it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDrive {
    pub samples: Vec<RawSample>,
    pub truth: Vec<Option<InjectionKind>>,
}

impl SynthDrive {
    /// One positive range per pothole, spanning its first to last sample.
    pub fn pothole_truth(&self) -> GroundTruth {
        let mut entries = Vec::new();
        let mut i = 0;
        while i < self.truth.len() {
            if self.truth[i] == Some(InjectionKind::Pothole) {
                let start = i;
                let len = InjectionKind::Pothole.span();
                let end = (start + len - 1).min(self.samples.len() - 1);
                entries.push(TruthEntry::Range {
                    start: self.samples[start].timestamp,
                    end: self.samples[end].timestamp,
                    is_pothole: true,
                });
                i = start + len;
            } else {
                i += 1;
            }
        }
        GroundTruth::new(entries).expect("generated ranges never overlap")
    }

    /// Whether each window of `window_size` samples contains an injection
    /// of `kind`.
    pub fn window_flags(&self, window_size: usize, kind: InjectionKind) -> Vec<bool> {
        self.truth
            .chunks_exact(window_size)
            .map(|w| w.contains(&Some(kind)))
            .collect()
    }
}

pub fn generate(scenario: &DriveScenario) -> Result<SynthDrive> {
    scenario.validate()?;
    let n = scenario.sample_count();
    let dt = 1.0 / SAMPLE_RATE_HZ;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    let mut gauss = move || -> f64 { StandardNormal.sample(&mut rng) };
    let sig = scenario.noise_sigmas;

    let (rho, innovation) = match scenario.roughness {
        Some(r) => {
            let rho = libm::exp(-dt / r.correlation_s);
            (rho, r.sigma_log * libm::sqrt(1.0 - rho * rho))
        }
        None => (0.0, 0.0),
    };
    let mut log_rough = 0.0;

    let mut samples = Vec::with_capacity(n);
    let mut latitude = scenario.origin[0];
    for k in 0..n {
        let t = k as f64 * dt;
        if scenario.roughness.is_some() {
            log_rough = rho * log_rough + innovation * gauss();
        }
        let r = libm::exp(log_rough);
        let speed = (scenario.speed_at(t) + sig.speed * gauss()).max(0.0);
        let gsen_x = r * sig.gsen[0] * gauss();
        let gsen_y = r * sig.gsen[1] * gauss();
        let gsen_z = GRAVITY + r * sig.gsen[2] * gauss();
        let gyro_x = r * sig.gyro[0] * gauss();
        let gyro_y = r * sig.gyro[1] * gauss();
        let gyro_z = r * sig.gyro[2] * gauss();
        samples.push(RawSample {
            timestamp: scenario.start_timestamp + t,
            latitude,
            longitude: scenario.origin[1],
            speed,
            gsen_x,
            gsen_y,
            gsen_z,
            gyro_x,
            gyro_y,
            gyro_z,
        });
        latitude += speed * dt / METRES_PER_DEGREE;
    }

    let mut truth = alloc::vec![None; n];
    for inj in &scenario.injections {
        let k0 = inj.first_sample();
        let m = inj.magnitude;
        let c = GYRO_COUPLING * m;
        for j in 0..inj.kind.span() {
            let s = &mut samples[k0 + j];
            truth[k0 + j] = Some(inj.kind);
            match inj.kind {
                InjectionKind::Pothole => {
                    let sign = if j == 0 { 1.0 } else { -1.0 };
                    s.gsen_z += sign * m;
                    s.gyro_x += sign * c;
                    s.gyro_y -= sign * c;
                }
                InjectionKind::HarshBrake => {
                    s.gsen_x -= m * (j + 1) as f64 / 5.0;
                }
                InjectionKind::HarshCorner => {
                    let shape = [0.5, 1.0, 1.0, 1.0, 0.5][j];
                    s.gsen_y += m * shape;
                    s.gyro_z += c * shape;
                }
            }
        }
    }
    Ok(SynthDrive { samples, truth })
}

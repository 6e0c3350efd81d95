//! Deterministic synthetic strength-training sessions.
//!
//! Each motion class is a quasi-periodic orientation trajectory with its own
//! repetition frequency, posture and amplitude. Orientation channels are
//! derived from the Euler trajectory exactly as a device would report them:
//! quaternion from Euler, inverse from the quaternion, gravity projected into
//! the device frame. Accelerometer readings are linear acceleration minus
//! gravity, and the magnetometer is a fixed world field rotated into the
//! device frame.
//!
//! Output depends only on the inputs and the seed.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::sensor::{
    euler_to_quaternion, gravity_from_euler, quaternion_inverse, AvailabilityMask, HandSide, MotionType,
    RecordingSession, SensorFrame, SessionStatus, Vec3, STANDARD_GRAVITY,
};

/// Earth magnetic field in the world frame, µT.
const WORLD_FIELD: Vec3 = [22.0, 4.0, -41.0];

/// Repetition cycle and posture of one motion class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotionProfile {
    pub motion: MotionType,
    pub frequency_hz: f64,
    /// Mean roll, pitch, yaw in radians.
    pub posture: Vec3,
    /// Orientation swing amplitude per axis, radians.
    pub swing: Vec3,
    /// Phase of each orientation axis relative to the cycle.
    pub swing_phase: Vec3,
    /// Linear acceleration amplitude per axis, m/s².
    pub thrust: Vec3,
    pub thrust_phase: Vec3,
    /// Relative weight of the second harmonic.
    pub harmonic: f64,
    pub noise_std: f64,
    /// Right-hand amplitudes are this fraction of the left-hand ones.
    pub right_scale: f64,
}

/// The nine built-in profiles, one per motion in index order. Base
/// frequencies are pairwise distinct and centred on a ~3 s repetition.
pub fn motion_profiles() -> Vec<MotionProfile> {
    MotionType::ALL
        .iter()
        .map(|&motion| {
            let k = motion.index() as f64;
            MotionProfile {
                motion,
                frequency_hz: 0.22 + 0.035 * k,
                posture: [0.5 * (1.3 * k).cos(), -0.6 + 0.15 * k, 0.8 * (0.7 * k + 0.4).sin()],
                swing: [0.15 + 0.04 * (k % 3.0), 0.25 + 0.05 * ((k + 1.0) % 4.0), 0.1 + 0.03 * ((k + 2.0) % 3.0)],
                swing_phase: [0.0, 0.4 * k, 1.1 * k],
                thrust: [1.0 + 0.3 * (k % 4.0), 0.6 + 0.2 * ((k + 2.0) % 3.0), 1.5 - 0.1 * k],
                thrust_phase: [0.3 * k, 1.0 + 0.2 * k, 2.0],
                harmonic: 0.15 + 0.05 * (k % 3.0),
                noise_std: 1.0,
                right_scale: 0.9,
            }
        })
        .collect()
}

/// Timing and noise parameters shared by every generated session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub rows_per_second: f64,
    pub repetitions: f64,
    pub seconds_per_repetition: f64,
    /// Half-width of the per-respondent tempo factor.
    pub respondent_jitter: f64,
    /// Half-width of the per-session tempo factor.
    pub session_jitter: f64,
    /// Right-hand sessions are this fraction of the left-hand length.
    pub right_timing: f64,
    /// Sessions are never shorter than this many frames.
    pub min_frames: usize,
    pub noise_scale: f64,
    /// Unix time of the first generated session.
    pub start_epoch: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            rows_per_second: 7.0,
            repetitions: 8.0,
            seconds_per_repetition: 3.0,
            respondent_jitter: 0.07,
            session_jitter: 0.03,
            right_timing: 144.0 / 164.0,
            min_frames: 150,
            noise_scale: 1.0,
            start_epoch: 1_690_000_000.0,
        }
    }
}

/// Per-respondent variation applied to every session of that respondent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Respondent {
    pub code: String,
    pub amplitude: f64,
    pub tempo: f64,
    pub posture_offset: Vec3,
}

impl Respondent {
    pub fn draw(code: &str, seed: u64, config: &SimConfig) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, hash_str(code)]));
        let j = config.respondent_jitter;
        Respondent {
            code: code.to_string(),
            amplitude: rng.random_range(0.85..1.15),
            tempo: rng.random_range(1.0 - j..=1.0 + j),
            posture_offset: [0.0; 3].map(|_: f64| 0.03 * rng.sample::<f64, _>(StandardNormal)),
        }
    }
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Combines seed components into an independent stream seed.
pub fn derive_seed(parts: &[u64]) -> u64 {
    parts.iter().fold(0x5eed_u64, |acc, p| mix(acc ^ mix(*p)))
}

fn hash_str(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Rotates a world-frame vector into the device frame (`Rᵀ·v` with
/// `R = Rz·Ry·Rx`).
fn world_to_device(euler: Vec3, v: Vec3) -> Vec3 {
    let [roll, pitch, yaw] = euler;
    let (sr, cr) = roll.sin_cos();
    let (sp, cp) = pitch.sin_cos();
    let (sy, cy) = yaw.sin_cos();
    let r = [
        [cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr],
        [sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr],
        [-sp, cp * sr, cp * cr],
    ];
    [0, 1, 2].map(|c| (0..3).map(|k| r[k][c] * v[k]).sum())
}

fn wrap_angle(a: f64) -> f64 {
    (a + std::f64::consts::PI).rem_euclid(TAU) - std::f64::consts::PI
}

#[derive(Debug, Clone)]
pub struct Simulator {
    pub config: SimConfig,
    pub profiles: Vec<MotionProfile>,
}

impl Default for Simulator {
    fn default() -> Self {
        Simulator { config: SimConfig::default(), profiles: motion_profiles() }
    }
}

impl Simulator {
    pub fn profile(&self, motion: MotionType) -> &MotionProfile {
        &self.profiles[motion.index()]
    }

    /// Frame count for a session given the combined tempo factor.
    fn frame_count(&self, side: HandSide, tempo: f64) -> usize {
        let c = &self.config;
        let side_factor = match side {
            HandSide::Left => 1.0,
            HandSide::Right => c.right_timing,
        };
        let nominal = c.rows_per_second * c.repetitions * c.seconds_per_repetition;
        ((nominal * tempo * side_factor).round() as usize).max(c.min_frames).max(2)
    }

    /// One session starting at `start` (Unix seconds).
    pub fn session(
        &self,
        respondent: &Respondent,
        motion: MotionType,
        side: HandSide,
        seed: u64,
        start: f64,
    ) -> RecordingSession {
        let c = &self.config;
        let p = self.profile(motion);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let j = c.session_jitter;
        let tempo = respondent.tempo * rng.random_range(1.0 - j..=1.0 + j);
        let n = self.frame_count(side, tempo);
        let duration = n as f64 / c.rows_per_second;
        let dt = duration / (n - 1) as f64;
        let phase0 = rng.random_range(0.0..TAU);
        let phase2 = rng.random_range(0.0..TAU);

        let (scale, mirror) = match side {
            HandSide::Left => (respondent.amplitude, 1.0),
            HandSide::Right => (respondent.amplitude * p.right_scale, -1.0),
        };
        let posture = [
            mirror * p.posture[0] + respondent.posture_offset[0],
            p.posture[1] + respondent.posture_offset[1],
            mirror * p.posture[2] + respondent.posture_offset[2],
        ];
        let omega = TAU * p.frequency_hz;
        let noise = p.noise_std * c.noise_scale;
        let mut gauss = |sd: f64| sd * noise * rng.sample::<f64, _>(StandardNormal);

        let mut frames = Vec::with_capacity(n);
        let mut first_euler = None;
        for i in 0..n {
            let tau = i as f64 * dt;
            let cycle = |ph: f64| {
                (omega * tau + phase0 + ph).sin() + p.harmonic * (2.0 * omega * tau + phase2 + ph).sin()
            };
            let cycle_rate = |ph: f64| {
                omega * (omega * tau + phase0 + ph).cos()
                    + 2.0 * omega * p.harmonic * (2.0 * omega * tau + phase2 + ph).cos()
            };

            let mut euler = [0.0; 3];
            let mut gyro = [0.0; 3];
            for k in 0..3 {
                euler[k] = posture[k] + scale * p.swing[k] * cycle(p.swing_phase[k]) + gauss(0.004);
                gyro[k] = scale * p.swing[k] * cycle_rate(p.swing_phase[k]) + gauss(0.02);
            }
            euler[0] = wrap_angle(euler[0]);
            euler[2] = wrap_angle(euler[2]);
            let mut linear = [0.0; 3];
            for k in 0..3 {
                linear[k] = scale * p.thrust[k] * cycle(p.thrust_phase[k]) + gauss(0.05);
            }
            let gravity = gravity_from_euler(euler, STANDARD_GRAVITY).expect("finite euler");
            let accelerometer = [0, 1, 2].map(|k| linear[k] - gravity[k] + gauss(0.04));
            let mut magnetometer = world_to_device(euler, WORLD_FIELD).map(|v| v + gauss(0.4));
            if side == HandSide::Left {
                // Wrist-band interference that tracks the forearm thrust.
                magnetometer[0] += 3.0 * linear[0];
            }
            let quaternion = euler_to_quaternion(euler).expect("finite euler");
            let inverse_quaternion = quaternion_inverse(quaternion).expect("unit quaternion");
            let origin = *first_euler.get_or_insert(euler);
            let relative_orientation = [0, 1, 2].map(|k| wrap_angle(euler[k] - origin[k]));

            frames.push(SensorFrame {
                respondent: respondent.code.clone(),
                timestamp: start + tau,
                accelerometer,
                magnetometer,
                gyroscope: gyro,
                linear_accelerometer: linear,
                gravity,
                euler,
                quaternion,
                inverse_quaternion,
                relative_orientation,
                motion_type: motion,
                side,
                availability_mask: AvailabilityMask::ALL,
            });
        }

        RecordingSession {
            session_id: format!("sim-{}-{}-{}", respondent.code, motion, side),
            respondent: respondent.code.clone(),
            motion_type: motion,
            side,
            started_at: start,
            finished_at: start + duration,
            frames,
            status: SessionStatus::Finished,
        }
    }

    /// `n` respondents × 9 motions × `sides`, each session seeded
    /// independently from `seed`. Sessions are ordered by respondent, side,
    /// motion, with increasing start times.
    pub fn corpus(&self, respondents: usize, sides: &[HandSide], seed: u64) -> Vec<RecordingSession> {
        let width = respondents.to_string().len().max(2);
        let mut out = Vec::with_capacity(respondents * sides.len() * MotionType::COUNT);
        for r in 0..respondents {
            let code = format!("S{:0width$}", r + 1);
            let who = Respondent::draw(&code, seed, &self.config);
            for &side in sides {
                for motion in MotionType::ALL {
                    let side_idx = side as u64;
                    let session_seed = derive_seed(&[seed, r as u64, motion.index() as u64, side_idx]);
                    let start = self.config.start_epoch
                        + r as f64 * 10_000.0
                        + side_idx as f64 * 5_000.0
                        + motion.index() as f64 * 400.0;
                    out.push(self.session(&who, motion, side, session_seed, start));
                }
            }
        }
        out
    }
}

/// One session with the default profiles and timing; respondent traits are
/// drawn from the code and seed.
pub fn synth_session(respondent: &str, motion: MotionType, side: HandSide, seed: u64) -> RecordingSession {
    let sim = Simulator::default();
    let who = Respondent::draw(respondent, seed, &sim.config);
    sim.session(&who, motion, side, derive_seed(&[seed, motion.index() as u64, side as u64]), sim.config.start_epoch)
}

/// Full default corpus.
pub fn synth_corpus(respondents: usize, sides: &[HandSide], seed: u64) -> Vec<RecordingSession> {
    Simulator::default().corpus(respondents, sides, seed)
}

/// Frequency (Hz) with the largest periodogram power in `signal`, searched
/// on a fine grid over `[lo, hi]`. Used as an independent separability check
/// on generated data.
pub fn dominant_frequency(signal: &[f64], sample_rate: f64, lo: f64, hi: f64) -> f64 {
    let n = signal.len() as f64;
    let mean = signal.iter().sum::<f64>() / n;
    let mut best = (lo, f64::NEG_INFINITY);
    let steps = 2000;
    for s in 0..=steps {
        let f = lo + (hi - lo) * s as f64 / steps as f64;
        let w = TAU * f / sample_rate;
        let (mut re, mut im) = (0.0, 0.0);
        for (i, v) in signal.iter().enumerate() {
            let (sn, cs) = (w * i as f64).sin_cos();
            re += (v - mean) * cs;
            im += (v - mean) * sn;
        }
        let power = re * re + im * im;
        if power > best.1 {
            best = (f, power);
        }
    }
    best.0
}

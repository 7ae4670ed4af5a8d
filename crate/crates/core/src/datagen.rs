//! Seeded synthetic rotor-vibration fleet generation.
//!
//! Real run-to-failure vibration data shows two robust signatures: the
//! per-interval spread of the displacement signal grows sharply from normal
//! through risky to high-risk operation, and the dominant vibration
//! frequency falls as deterioration progresses. The generator reproduces
//! both: every wave is a two-tone sinusoid mixture plus Gaussian noise whose
//! variance budget hits a per-sensor, per-interval standard-deviation
//! target, clipped at a per-interval amplitude bound, with sparse large
//! transients added in the high-risk interval so the risky/high-risk
//! distinction is harder than normal/abnormal.
//!
//! Deterioration is continuous: within the risky and high-risk intervals the
//! wave amplitude ramps monotonically along a piecewise-linear curve whose
//! segment endpoints are solved so each interval's pooled standard deviation
//! still meets its target. Waves near the risky/high-risk boundary therefore
//! look genuinely alike, which is what makes the second classification stage
//! harder than the first.
//!
//! Determinism: every wave's RNG derives from (fleet seed, machine id, wave
//! index, sensor id), so generation is reproducible and order-independent.
//! Per-machine profile jitter (one +-10% factor per machine and sensor,
//! applied to all three interval targets) keeps machines distinct without
//! breaking the interval amplitude ordering.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

use crate::cascade::{label_timeline, machine_seed, MachineTimeline, StateLabel};
use crate::seeding::derive_seed;
use crate::signal::{SignalError, Wave, WaveArray, SENSOR_COUNT};

#[derive(Debug, Error)]
pub enum DatagenError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("timeline construction: {0}")]
    Timeline(String),
}

/// Per-sensor standard-deviation targets (micrometres) for the normal /
/// risky / high-risk intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorTargets {
    pub stds: [f64; 3],
}

/// Degradation profile: what each interval's waves look like.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegradationProfile {
    /// Std targets per sensor (index 0 = sensor 1).
    pub sensors: [SensorTargets; SENSOR_COUNT],
    /// Dominant tone bin range `[start, end]` per interval, in cycles per
    /// wave. The tone frequency ramps from `start` to `end` across the
    /// interval (rounded to an integer bin per wave), never increases over
    /// the machine's life, and each interval's mean bin sits strictly below
    /// the previous interval's.
    pub freq_bins: [[f64; 2]; 3],
    /// Amplitude bound per interval as a multiple of the std target; samples
    /// are clipped there. The high-risk bound ramps from the risky value at
    /// the interval boundary up to `cap_factors[2]` at the end of the loop,
    /// so no scale-free feature jumps at the risky/high-risk transition.
    pub cap_factors: [f64; 3],
    /// Fraction of the variance budget carried by Gaussian noise.
    pub noise_variance_fraction: f64,
    /// Fraction of the variance budget carried by the second harmonic.
    pub harmonic_variance_fraction: f64,
    /// Per-sample probability of a high-risk transient spike at the end of
    /// the loop; the rate ramps up from zero at the risky boundary.
    pub spike_rate: f64,
    /// Spike magnitude range as multiples of the std target.
    pub spike_scale: (f64, f64),
    /// Half-width of the per-machine, per-sensor target jitter (0.1 = +-10%).
    pub machine_jitter: f64,
    /// Half-width of the per-wave amplitude wobble. The wobble is shared by
    /// all six sensors of a wave array (load and speed fluctuations move the
    /// whole machine), with a small independent per-sensor term on top, so
    /// it cannot be averaged away across sensors.
    pub wave_jitter: f64,
    /// Half-width of the independent per-sensor wobble component.
    pub sensor_jitter: f64,
}

impl Default for DegradationProfile {
    fn default() -> Self {
        Self {
            // Fleet-level std of real displacement waves by interval.
            sensors: [
                SensorTargets { stds: [2.0366, 6.7985, 11.1055] },
                SensorTargets { stds: [2.8504, 6.8678, 12.3792] },
                SensorTargets { stds: [2.1308, 10.1692, 12.5702] },
                SensorTargets { stds: [2.2505, 9.9623, 11.8240] },
                SensorTargets { stds: [4.8239, 12.6074, 15.6947] },
                SensorTargets { stds: [5.0908, 12.1179, 16.1177] },
            ],
            // Rotation slows as deterioration progresses: flat while the
            // machine is healthy, then falling continuously through the
            // deterioration intervals. The risky and high-risk ramps meet at
            // the boundary and share one wavelet band, so nothing about the
            // transition is visible to a single frequency-ratio threshold.
            freq_bins: [[96.0, 96.0], [44.0, 41.0], [41.0, 38.0]],
            cap_factors: [1.3, 1.3, 2.2],
            noise_variance_fraction: 0.05,
            harmonic_variance_fraction: 0.05,
            spike_rate: 0.004,
            spike_scale: (1.6, 2.0),
            machine_jitter: 0.10,
            wave_jitter: 0.12,
            sensor_jitter: 0.02,
        }
    }
}

impl DegradationProfile {
    pub fn validate(&self) -> Result<(), DatagenError> {
        for (i, sensor) in self.sensors.iter().enumerate() {
            let [n, r, h] = sensor.stds;
            if !(n > 0.0 && n < r && r < h) {
                return Err(DatagenError::InvalidProfile(format!(
                    "sensor {}: std targets must increase strictly, got {:?}",
                    i + 1,
                    sensor.stds
                )));
            }
        }
        for [start, end] in &self.freq_bins {
            if end > start || *end < 1.0 {
                return Err(DatagenError::InvalidProfile(format!(
                    "tone bin range [{start}, {end}] must not increase and must stay >= 1"
                )));
            }
        }
        // Frequency never increases over the machine's life, and each
        // interval vibrates strictly slower on average than the previous.
        if self.freq_bins[0][1] < self.freq_bins[1][0] || self.freq_bins[1][1] < self.freq_bins[2][0]
        {
            return Err(DatagenError::InvalidProfile(format!(
                "tone bins must not increase across interval boundaries, got {:?}",
                self.freq_bins
            )));
        }
        let mean = |r: [f64; 2]| (r[0] + r[1]) / 2.0;
        if mean(self.freq_bins[0]) <= mean(self.freq_bins[1])
            || mean(self.freq_bins[1]) <= mean(self.freq_bins[2])
        {
            return Err(DatagenError::InvalidProfile(format!(
                "interval mean tone bins must decrease strictly, got {:?}",
                self.freq_bins
            )));
        }
        let budget = self.noise_variance_fraction + self.harmonic_variance_fraction;
        if !(0.0..1.0).contains(&budget) {
            return Err(DatagenError::InvalidProfile(
                "noise + harmonic variance fractions must stay below 1".into(),
            ));
        }
        for (i, sensor) in self.sensors.iter().enumerate() {
            let [_, r, h] = sensor.stds;
            if h >= 4.0 * r {
                return Err(DatagenError::InvalidProfile(format!(
                    "sensor {}: high-risk target {h} too far above risky {r} for a continuous ramp",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// Main-tone amplitude factor: the tone carries the variance budget left
    /// over from noise and harmonic.
    fn tone_factor(&self) -> f64 {
        (2.0 * (1.0 - self.noise_variance_fraction - self.harmonic_variance_fraction)).sqrt()
    }

    /// Deterioration ramp endpoints `(c, d, e)` for one sensor: the wave std
    /// rises linearly from `c` to `d` across the risky interval and from `d`
    /// to `e` across the high-risk interval, continuous and monotone, with
    /// each segment's pooled mean square equal to its interval target
    /// (`(c^2 + c d + d^2) / 3 = t_r^2`, likewise for the high segment).
    /// The knee sits at `d = sqrt(t_r * t_h)`.
    fn ramp(&self, sensor: usize) -> (f64, f64, f64) {
        let [_, t_r, t_h] = self.sensors[sensor].stds;
        let d = (t_r * t_h).sqrt();
        let c = (-d + (12.0 * t_r * t_r - 3.0 * d * d).sqrt()) / 2.0;
        let e = (-d + (12.0 * t_h * t_h - 3.0 * d * d).sqrt()) / 2.0;
        (c, d, e)
    }

    /// Wave-level std target for a sensor at `progress` within `interval`
    /// (progress in `[0, 1]`, by time).
    fn wave_std(&self, sensor: usize, interval: usize, progress: f64) -> f64 {
        let (c, d, e) = self.ramp(sensor);
        match interval {
            0 => self.sensors[sensor].stds[0],
            1 => c + (d - c) * progress,
            _ => d + (e - d) * progress,
        }
    }
}

/// Wave counts for the three intervals of one faulty machine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntervalCounts {
    pub normal: usize,
    pub risky: usize,
    pub high_risk: usize,
}

/// Everything generated for one machine.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratedMachine {
    pub timeline: MachineTimeline,
    pub arrays: Vec<WaveArray>,
    pub labels: Vec<StateLabel>,
}

const DAY: f64 = 86_400.0;
/// Fixed epoch for generated timelines; nothing depends on the wall clock.
const TIME_BASE: f64 = 1_600_000_000.0;

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller.
    let u1: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.random_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

fn synth_wave(
    profile: &DegradationProfile,
    interval: usize,
    progress: f64,
    target_std: f64,
    common_wobble: f64,
    wave_len: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<f64> {
    let wobble =
        common_wobble * (1.0 + rng.random_range(-profile.sensor_jitter..=profile.sensor_jitter));
    let target = target_std * wobble;
    let tone_amp = profile.tone_factor() * target;
    let harmonic_amp = (2.0 * profile.harmonic_variance_fraction).sqrt() * target;
    let noise_std = profile.noise_variance_fraction.sqrt() * target;
    let cap_factor = if interval == 2 {
        profile.cap_factors[1] + (profile.cap_factors[2] - profile.cap_factors[1]) * progress
    } else {
        profile.cap_factors[interval]
    };
    let cap = cap_factor * target_std;
    let spike_rate = if interval == 2 {
        profile.spike_rate * progress
    } else {
        0.0
    };
    let [bin_start, bin_end] = profile.freq_bins[interval];
    let bin = (bin_start + (bin_end - bin_start) * progress).round();
    let phase1 = rng.random_range(0.0..2.0 * PI);
    let phase2 = rng.random_range(0.0..2.0 * PI);

    let mut samples = Vec::with_capacity(wave_len);
    for m in 0..wave_len {
        let angle = 2.0 * PI * bin * m as f64 / wave_len as f64;
        let mut value = tone_amp * (angle + phase1).sin()
            + harmonic_amp * (2.0 * angle + phase2).sin()
            + noise_std * gaussian(rng);
        if spike_rate > 0.0 && rng.random_range(0.0..1.0) < spike_rate {
            let magnitude = rng.random_range(profile.spike_scale.0..profile.spike_scale.1) * target;
            let sign = if rng.random_range(0..2) == 0 { 1.0 } else { -1.0 };
            value += sign * magnitude;
        }
        samples.push(value.clamp(-cap, cap));
    }
    samples
}

fn linspace_exclusive(start: f64, end: f64, count: usize) -> Vec<f64> {
    let step = (end - start) / count as f64;
    (0..count).map(|i| start + i as f64 * step).collect()
}

fn linspace_inclusive(start: f64, end: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![start];
    }
    let step = (end - start) / (count - 1) as f64;
    (0..count).map(|i| start + i as f64 * step).collect()
}

/// Generate one machine's full observation history.
///
/// Faulty machines emit `counts.normal` waves spread over the normal
/// interval, `counts.risky` over `[failure - 30 d, failure - 1 d)`, and
/// `counts.high_risk` over `[failure - 1 d, failure - 60 s]`; healthy
/// machines emit `counts.normal` waves over the whole duration. The
/// generated labels always agree with [`label_timeline`].
pub fn generate_machine(
    profile: &DegradationProfile,
    machine_id: &str,
    faulty: bool,
    duration_seconds: f64,
    counts: IntervalCounts,
    wave_len: usize,
    seed: u64,
) -> Result<GeneratedMachine, DatagenError> {
    profile.validate()?;
    if counts.normal == 0 {
        return Err(DatagenError::InvalidCounts(
            "normal interval needs at least one wave".into(),
        ));
    }
    if faulty && (counts.risky == 0 || counts.high_risk == 0) {
        return Err(DatagenError::InvalidCounts(
            "faulty machines need waves in every interval".into(),
        ));
    }
    if duration_seconds <= crate::cascade::RISKY_WINDOW_SECONDS && faulty {
        return Err(DatagenError::InvalidCounts(
            "duration must exceed the 30-day risky window".into(),
        ));
    }
    if wave_len < 16 || !wave_len.is_multiple_of(16) {
        return Err(DatagenError::InvalidCounts(format!(
            "wave length {wave_len} must be a positive multiple of 16"
        )));
    }

    let mseed = machine_seed(seed, machine_id);
    let start = TIME_BASE;

    // (timestamp, interval, progress within the interval by time)
    let (points, failure_time, downtime_end) = if faulty {
        let failure = start + duration_seconds;
        let risky_start = failure - crate::cascade::RISKY_WINDOW_SECONDS;
        let high_start = failure - crate::cascade::HIGH_RISK_WINDOW_SECONDS;
        let loop_end = failure - 60.0;
        let mut points = Vec::new();
        for t in linspace_exclusive(start, risky_start, counts.normal) {
            points.push((t, 0usize, 0.0));
        }
        for t in linspace_exclusive(risky_start, high_start, counts.risky) {
            points.push((t, 1, (t - risky_start) / (high_start - risky_start)));
        }
        // A single high-risk observation sits at the end of the loop (the
        // most deteriorated moment); otherwise the grid spans the interval
        // inclusively.
        if counts.high_risk == 1 {
            points.push((loop_end, 2, 1.0));
        } else {
            for t in linspace_inclusive(high_start, loop_end, counts.high_risk) {
                points.push((t, 2, (t - high_start) / (loop_end - high_start)));
            }
        }
        (points, Some(failure), Some(failure + 2.0 * DAY))
    } else {
        let points = linspace_inclusive(start, start + duration_seconds, counts.normal)
            .into_iter()
            .map(|t| (t, 0usize, 0.0))
            .collect();
        (points, None, None)
    };

    // One jitter factor per sensor, shared by all three interval targets so
    // the amplitude ordering survives.
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(derive_seed(mseed, 0xA11));
    let jitter: Vec<f64> = (0..SENSOR_COUNT)
        .map(|_| 1.0 + jitter_rng.random_range(-profile.machine_jitter..=profile.machine_jitter))
        .collect();

    let mut arrays = Vec::with_capacity(points.len());
    for (wave_idx, (timestamp, interval, progress)) in points.iter().enumerate() {
        let mut common_rng =
            ChaCha8Rng::seed_from_u64(derive_seed(mseed, (wave_idx as u64) * 8 + 7));
        let common_wobble =
            1.0 + common_rng.random_range(-profile.wave_jitter..=profile.wave_jitter);
        let mut waves = Vec::with_capacity(SENSOR_COUNT);
        for (sensor, jitter_factor) in jitter.iter().enumerate() {
            let wave_seed = derive_seed(mseed, (wave_idx as u64) * 8 + sensor as u64 + 1);
            let mut rng = ChaCha8Rng::seed_from_u64(wave_seed);
            let target = profile.wave_std(sensor, *interval, *progress) * jitter_factor;
            let samples = synth_wave(
                profile,
                *interval,
                *progress,
                target,
                common_wobble,
                wave_len,
                &mut rng,
            );
            waves.push(Wave::new(machine_id, (sensor + 1) as u8, *timestamp, samples)?);
        }
        arrays.push(WaveArray::new(waves)?);
    }

    let timestamps: Vec<f64> = points.iter().map(|(t, _, _)| *t).collect();
    let timeline = MachineTimeline::new(machine_id, timestamps, failure_time, downtime_end)
        .map_err(|e| DatagenError::Timeline(e.to_string()))?;
    let labels = label_timeline(&timeline);
    Ok(GeneratedMachine {
        timeline,
        arrays,
        labels,
    })
}

/// Fleet composition and sizing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FleetConfig {
    pub n_faulty: usize,
    pub n_healthy: usize,
    /// Wave counts per faulty machine.
    pub faulty_counts: IntervalCounts,
    /// Normal-interval wave count per healthy machine.
    pub healthy_waves: usize,
    pub duration_seconds: f64,
    pub wave_len: usize,
    pub profile: DegradationProfile,
    pub seed: u64,
}

impl Default for FleetConfig {
    fn default() -> Self {
        Self {
            n_faulty: 7,
            n_healthy: 7,
            faulty_counts: IntervalCounts {
                normal: 90,
                risky: 60,
                high_risk: 55,
            },
            healthy_waves: 205,
            duration_seconds: 180.0 * DAY,
            wave_len: 1024,
            profile: DegradationProfile::default(),
            seed: 42,
        }
    }
}

/// Generate a fleet: machines `M1..` are faulty, the rest healthy. Each
/// machine derives its own seed from the fleet seed and its id.
pub fn generate_fleet(config: &FleetConfig) -> Result<Vec<GeneratedMachine>, DatagenError> {
    if config.n_faulty + config.n_healthy < 2 {
        return Err(DatagenError::InvalidCounts(
            "a fleet needs at least two machines".into(),
        ));
    }
    let mut machines = Vec::with_capacity(config.n_faulty + config.n_healthy);
    for i in 0..config.n_faulty + config.n_healthy {
        let machine_id = format!("M{}", i + 1);
        let faulty = i < config.n_faulty;
        let counts = if faulty {
            config.faulty_counts
        } else {
            IntervalCounts {
                normal: config.healthy_waves,
                risky: 0,
                high_risk: 0,
            }
        };
        machines.push(generate_machine(
            &config.profile,
            &machine_id,
            faulty,
            config.duration_seconds,
            counts,
            config.wave_len,
            config.seed,
        )?);
    }
    Ok(machines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::fft_spectrum;

    fn small_counts() -> IntervalCounts {
        IntervalCounts {
            normal: 12,
            risky: 8,
            high_risk: 6,
        }
    }

    #[test]
    fn empirical_stds_hit_the_sensor_one_targets() {
        let profile = DegradationProfile::default();
        let machine = generate_machine(
            &profile,
            "M1",
            true,
            180.0 * DAY,
            IntervalCounts { normal: 20, risky: 20, high_risk: 20 },
            1024,
            42,
        )
        .unwrap();
        let targets = [2.0366, 6.7985, 11.1055];
        for (interval, target) in targets.iter().enumerate() {
            let mut values = Vec::new();
            for (array, label) in machine.arrays.iter().zip(&machine.labels) {
                if label.as_u8() as usize == interval {
                    values.extend_from_slice(array.waves()[0].samples());
                }
            }
            let n = values.len() as f64;
            let mean = values.iter().sum::<f64>() / n;
            let std =
                (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n).sqrt();
            assert!(
                (std - target).abs() <= 0.15 * target,
                "interval {interval}: std {std} vs target {target}"
            );
        }
    }

    #[test]
    fn interval_amplitude_ordering_holds_across_seeds() {
        let profile = DegradationProfile::default();
        for seed in 0..10u64 {
            let machine = generate_machine(
                &profile,
                "M1",
                true,
                180.0 * DAY,
                small_counts(),
                256,
                seed,
            )
            .unwrap();
            for sensor in 0..SENSOR_COUNT {
                let mut max_abs = [0.0f64; 3];
                for (array, label) in machine.arrays.iter().zip(&machine.labels) {
                    let peak = array.waves()[sensor]
                        .samples()
                        .iter()
                        .fold(0.0f64, |acc, s| acc.max(s.abs()));
                    let i = label.as_u8() as usize;
                    max_abs[i] = max_abs[i].max(peak);
                }
                assert!(
                    max_abs[0] < max_abs[1] && max_abs[1] < max_abs[2],
                    "seed {seed} sensor {sensor}: {max_abs:?}"
                );
            }
        }
    }

    #[test]
    fn dominant_bin_decreases_with_deterioration() {
        let profile = DegradationProfile::default();
        let machine = generate_machine(
            &profile,
            "M3",
            true,
            180.0 * DAY,
            small_counts(),
            1024,
            7,
        )
        .unwrap();
        let dominant = |wave: &Wave| {
            let spectrum = fft_spectrum(wave);
            spectrum.amplitudes()[1..]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
                + 1
        };
        // The dominant bin never increases over the machine's life, and each
        // interval is strictly slower on average than the one before.
        let sequence: Vec<usize> = machine
            .arrays
            .iter()
            .map(|a| dominant(&a.waves()[0]))
            .collect();
        assert!(
            sequence.windows(2).all(|w| w[1] <= w[0]),
            "dominant bins must not increase in time: {sequence:?}"
        );
        let mut bins: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
        for (bin, label) in sequence.iter().zip(&machine.labels) {
            bins[label.as_u8() as usize].push(*bin);
        }
        let mean = |v: &[usize]| v.iter().sum::<usize>() as f64 / v.len() as f64;
        assert!(mean(&bins[1]) < mean(&bins[0]), "{bins:?}");
        assert!(mean(&bins[2]) < mean(&bins[1]), "{bins:?}");
    }

    #[test]
    fn same_seed_gives_bit_identical_fleet() {
        let config = FleetConfig {
            n_faulty: 1,
            n_healthy: 1,
            faulty_counts: small_counts(),
            healthy_waves: 10,
            wave_len: 128,
            ..FleetConfig::default()
        };
        let a = generate_fleet(&config).unwrap();
        let b = generate_fleet(&config).unwrap();
        assert_eq!(a, b);

        let other = generate_fleet(&FleetConfig { seed: 43, ..config }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn healthy_machine_has_only_normal_waves() {
        let machine = generate_machine(
            &DegradationProfile::default(),
            "M8",
            false,
            180.0 * DAY,
            IntervalCounts { normal: 15, risky: 0, high_risk: 0 },
            128,
            1,
        )
        .unwrap();
        assert!(machine.labels.iter().all(|l| *l == StateLabel::Normal));
        assert!(machine.timeline.failure_time().is_none());
        assert_eq!(machine.arrays.len(), 15);
    }

    #[test]
    fn generated_labels_agree_with_timeline_labeling() {
        let machine = generate_machine(
            &DegradationProfile::default(),
            "M2",
            true,
            120.0 * DAY,
            small_counts(),
            128,
            5,
        )
        .unwrap();
        assert_eq!(machine.labels, label_timeline(&machine.timeline));
        let expected: Vec<u8> = [
            vec![0u8; small_counts().normal],
            vec![1u8; small_counts().risky],
            vec![2u8; small_counts().high_risk],
        ]
        .concat();
        let got: Vec<u8> = machine.labels.iter().map(|l| l.as_u8()).collect();
        assert_eq!(got, expected);
    }

    #[test]
    fn fleet_normal_share_stays_in_band() {
        let config = FleetConfig::default();
        // Count labels without generating megabytes of waves.
        let faulty_total = config.faulty_counts.normal
            + config.faulty_counts.risky
            + config.faulty_counts.high_risk;
        let total = config.n_faulty * faulty_total + config.n_healthy * config.healthy_waves;
        let normal = config.n_faulty * config.faulty_counts.normal
            + config.n_healthy * config.healthy_waves;
        let share = normal as f64 / total as f64;
        assert!((0.6..=0.8).contains(&share), "normal share {share}");
    }

    #[test]
    fn invalid_profiles_and_counts_are_rejected() {
        let mut profile = DegradationProfile::default();
        profile.sensors[0].stds = [5.0, 4.0, 11.0];
        assert!(matches!(
            generate_machine(&profile, "M1", true, 180.0 * DAY, small_counts(), 128, 0),
            Err(DatagenError::InvalidProfile(_))
        ));

        let bad_freq = DegradationProfile {
            freq_bins: [[96.0, 96.0], [40.0, 44.0], [40.0, 35.0]],
            ..DegradationProfile::default()
        };
        assert!(bad_freq.validate().is_err());
        let rising = DegradationProfile {
            freq_bins: [[96.0, 96.0], [46.0, 40.0], [42.0, 35.0]],
            ..DegradationProfile::default()
        };
        assert!(rising.validate().is_err());

        assert!(matches!(
            generate_machine(
                &DegradationProfile::default(),
                "M1",
                true,
                180.0 * DAY,
                IntervalCounts { normal: 5, risky: 0, high_risk: 3 },
                128,
                0
            ),
            Err(DatagenError::InvalidCounts(_))
        ));
    }
}

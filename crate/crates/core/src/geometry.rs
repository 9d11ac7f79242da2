//! Array geometry, acquisition parameters and the receive-delay formulas every
//! beamformer in the crate is built on.
//!
//! Conventions: the array lies on the x-axis with the origin at its center,
//! the beam at angle `theta` points along `(sin theta, cos theta)` in the
//! (x, z) plane, and time `t` on a beam line is the two-way travel time seen
//! by the origin element, so sample `j` images depth `c * j / (2 f_s)`.

use crate::error::{invalid, shape, Result};

/// Signed element offsets from the array center, in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    pitch: f64,
    delta: Vec<f64>,
}

impl ArrayGeometry {
    /// Uniform linear array of `elements` elements spaced by `pitch`.
    pub fn uniform(elements: usize, pitch: f64) -> Result<Self> {
        let delta = element_positions(elements, pitch)?;
        Ok(Self { pitch, delta })
    }

    /// Uniform array at half-wavelength pitch `c / (2 f_c)`.
    pub fn half_wavelength(elements: usize, sound_speed: f64, carrier_hz: f64) -> Result<Self> {
        Self::uniform(elements, sound_speed / (2.0 * carrier_hz))
    }

    /// Geometry from explicit offsets (used for mirrored arrays in tests).
    pub fn from_offsets(delta: Vec<f64>) -> Result<Self> {
        if delta.is_empty() {
            return Err(invalid("array needs at least one element"));
        }
        if delta.iter().any(|d| !d.is_finite()) {
            return Err(invalid("element offsets must be finite"));
        }
        let pitch = if delta.len() > 1 {
            (delta[delta.len() - 1] - delta[0]) / (delta.len() - 1) as f64
        } else {
            0.0
        };
        Ok(Self { pitch, delta })
    }

    pub fn elements(&self) -> usize {
        self.delta.len()
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn offsets(&self) -> &[f64] {
        &self.delta
    }

    pub fn offset(&self, m: usize) -> f64 {
        self.delta[m]
    }

    /// Full aperture length from first to last element.
    pub fn aperture(&self) -> f64 {
        self.delta[self.delta.len() - 1] - self.delta[0]
    }
}

/// Centered element layout: `delta_m = (m - (M-1)/2) * pitch`.
pub fn element_positions(elements: usize, pitch: f64) -> Result<Vec<f64>> {
    if elements == 0 {
        return Err(invalid("element count must be at least 1"));
    }
    if !(pitch > 0.0) || !pitch.is_finite() {
        return Err(invalid(format!("pitch must be positive, got {pitch}")));
    }
    let center = (elements as f64 - 1.0) / 2.0;
    Ok((0..elements).map(|m| (m as f64 - center) * pitch).collect())
}

/// Receive time on element `m` whose alignment maps onto origin time `t`:
/// `tau = (t + sqrt(t^2 - 4 g t sin(theta) + 4 g^2)) / 2` with `g = delta_m / c`.
#[inline]
pub fn delay_tau(t: f64, theta: f64, delta_m: f64, sound_speed: f64) -> f64 {
    let g = delta_m / sound_speed;
    // Written as a sum of squares so rounding never produces a negative radicand.
    let a = t - 2.0 * g * theta.sin();
    let b = 2.0 * g * theta.cos();
    0.5 * (t + (a * a + b * b).sqrt())
}

/// Distance from the pulse position at time `t` along direction `theta` to
/// the element at offset `delta_m`.
#[inline]
pub fn distance_dm(t: f64, theta: f64, delta_m: f64, sound_speed: f64) -> f64 {
    let ct = sound_speed * t;
    let z = ct * theta.cos();
    let x = delta_m - ct * theta.sin();
    z.hypot(x)
}

/// Acquisition parameters shared by simulation and beamforming.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionConfig {
    /// Speed of sound, m/s.
    pub sound_speed: f64,
    /// Pulse carrier frequency, Hz.
    pub carrier_hz: f64,
    /// Channel sampling rate, Hz.
    pub sampling_hz: f64,
    /// Samples per beam line.
    pub samples: usize,
    /// Transmission angles, radians.
    pub angles: Vec<f64>,
    /// Beam support duration per angle, seconds. `None` means the full line.
    pub beam_support: Option<Vec<f64>>,
}

impl AcquisitionConfig {
    /// 2.7 MHz carrier sampled at 10.9 MHz, 1918 samples per line, 65 angles
    /// over +-40 degrees.
    pub fn reference() -> Self {
        Self {
            sound_speed: 1540.0,
            carrier_hz: 2.7e6,
            sampling_hz: 10.9e6,
            samples: 1918,
            angles: uniform_angles(65, 40f64.to_radians()),
            beam_support: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sound_speed > 0.0) || !(self.carrier_hz > 0.0) || !(self.sampling_hz > 0.0) {
            return Err(invalid("sound speed, carrier and sampling rate must be positive"));
        }
        if self.sampling_hz < 2.0 * self.carrier_hz {
            return Err(invalid(format!(
                "sampling rate {} Hz is below twice the carrier {} Hz",
                self.sampling_hz, self.carrier_hz
            )));
        }
        if self.samples < 2 {
            return Err(invalid("a beam line needs at least two samples"));
        }
        if self.angles.is_empty() {
            return Err(invalid("angle set is empty"));
        }
        if self.angles.iter().any(|a| !(a.abs() < std::f64::consts::FRAC_PI_2)) {
            return Err(invalid("angles must lie strictly inside (-pi/2, pi/2)"));
        }
        if let Some(tb) = &self.beam_support {
            if tb.len() != self.angles.len() {
                return Err(shape(format!(
                    "{} beam-support durations for {} angles",
                    tb.len(),
                    self.angles.len()
                )));
            }
            let t = self.line_duration();
            if tb.iter().any(|&d| !(d >= 0.0) || d > t * (1.0 + 1e-12)) {
                return Err(invalid("beam support must lie in [0, T]"));
            }
        }
        Ok(())
    }

    /// Line duration `T = N / f_s`.
    pub fn line_duration(&self) -> f64 {
        self.samples as f64 / self.sampling_hz
    }

    /// Beam support `T_B(theta)` for angle index `a`.
    pub fn support(&self, a: usize) -> f64 {
        match &self.beam_support {
            Some(tb) => tb[a],
            None => self.line_duration(),
        }
    }

    /// Deepest imaged point, `c T / 2`.
    pub fn max_depth(&self) -> f64 {
        self.sound_speed * self.line_duration() / 2.0
    }

    /// Depth imaged by sample `j`.
    pub fn depth_of_sample(&self, j: f64) -> f64 {
        self.sound_speed * j / (2.0 * self.sampling_hz)
    }

    /// Axial distance between samples in meters.
    pub fn axial_spacing(&self) -> f64 {
        self.sound_speed / (2.0 * self.sampling_hz)
    }

    pub fn n_angles(&self) -> usize {
        self.angles.len()
    }
}

/// `count` angles evenly spanning `[-half_span, half_span]`.
pub fn uniform_angles(count: usize, half_span: f64) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..count)
            .map(|i| -half_span + 2.0 * half_span * i as f64 / (count - 1) as f64)
            .collect(),
    }
}

/// Real channel data, laid out `[angle][element][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RfFrame {
    n_angles: usize,
    elements: usize,
    samples: usize,
    data: Vec<f64>,
}

impl RfFrame {
    pub fn zeros(n_angles: usize, elements: usize, samples: usize) -> Self {
        Self {
            n_angles,
            elements,
            samples,
            data: vec![0.0; n_angles * elements * samples],
        }
    }

    pub fn from_vec(n_angles: usize, elements: usize, samples: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_angles * elements * samples {
            return Err(shape(format!(
                "frame payload has {} values, expected {n_angles}x{elements}x{samples}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("frame contains non-finite values"));
        }
        Ok(Self {
            n_angles,
            elements,
            samples,
            data,
        })
    }

    /// Checks that the frame dimensions agree with a geometry and config.
    pub fn check(&self, geometry: &ArrayGeometry, config: &AcquisitionConfig) -> Result<()> {
        if self.elements != geometry.elements() || self.samples != config.samples || self.n_angles != config.n_angles()
        {
            return Err(shape(format!(
                "frame is {}x{}x{}, configuration expects {}x{}x{}",
                self.n_angles,
                self.elements,
                self.samples,
                config.n_angles(),
                geometry.elements(),
                config.samples
            )));
        }
        Ok(())
    }

    pub fn n_angles(&self) -> usize {
        self.n_angles
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// All channels of one angle, `[element][sample]`.
    pub fn angle(&self, a: usize) -> &[f64] {
        let len = self.elements * self.samples;
        &self.data[a * len..(a + 1) * len]
    }

    pub fn angle_mut(&mut self, a: usize) -> &mut [f64] {
        let len = self.elements * self.samples;
        &mut self.data[a * len..(a + 1) * len]
    }

    pub fn channel(&self, a: usize, m: usize) -> &[f64] {
        let start = (a * self.elements + m) * self.samples;
        &self.data[start..start + self.samples]
    }

    pub fn channel_mut(&mut self, a: usize, m: usize) -> &mut [f64] {
        let start = (a * self.elements + m) * self.samples;
        &mut self.data[start..start + self.samples]
    }

    pub fn scale(&mut self, alpha: f64) {
        self.data.iter_mut().for_each(|v| *v *= alpha);
    }
}

/// One beamformed line.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamLine {
    pub samples: Vec<f64>,
    pub angle: f64,
}

impl BeamLine {
    pub fn new(samples: Vec<f64>, angle: f64) -> Self {
        Self { samples, angle }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn single_element_sits_at_origin() {
        assert_eq!(element_positions(1, 0.285e-3).unwrap(), vec![0.0]);
    }

    #[test]
    fn sixty_four_elements_are_centered() {
        let d = element_positions(64, 0.285e-3).unwrap();
        assert_relative_eq!(d[0], -8.9775e-3, max_relative = 1e-12);
        assert_relative_eq!(d[63], 8.9775e-3, max_relative = 1e-12);
        assert!(d.iter().sum::<f64>().abs() < 1e-15);
        assert!(d.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn half_wavelength_pitch() {
        let g = ArrayGeometry::half_wavelength(64, 1540.0, 2.7e6).unwrap();
        assert_relative_eq!(g.pitch(), 2.8519e-4, max_relative = 1e-4);
        assert_eq!(g.elements(), 64);
    }

    #[test]
    fn rejects_bad_pitch() {
        assert!(element_positions(4, 0.0).is_err());
        assert!(element_positions(4, -1e-3).is_err());
        assert!(element_positions(0, 1e-3).is_err());
    }

    #[test]
    fn origin_element_has_no_delay() {
        for &t in &[0.0, 1e-6, 3.3e-5] {
            for &th in &[-0.6, 0.0, 0.3] {
                assert_eq!(delay_tau(t, th, 0.0, 1540.0), t);
            }
        }
    }

    #[test]
    fn broadside_substitution() {
        // theta = 0 and gamma = t/2 give t (1 + sqrt 2) / 2.
        let c = 1540.0;
        let t = 2e-5;
        let delta = c * t / 2.0;
        let expected = t * (1.0 + 2f64.sqrt()) / 2.0;
        assert_relative_eq!(delay_tau(t, 0.0, delta, c), expected, max_relative = 1e-14);
    }

    #[test]
    fn tau_matches_arrival_time_of_reflection() {
        // tau_m at origin time 2 t0 equals the arrival time t0 + d_m(t0)/c.
        let c = 1540.0;
        let offsets = element_positions(64, 2.85e-4).unwrap();
        let mut worst: f64 = 0.0;
        for &theta in &[-0.7, -0.2, 0.0, 0.45] {
            for &delta in offsets.iter().step_by(7) {
                for i in 0..400 {
                    let t0 = i as f64 * 2.2e-7;
                    let arrival = t0 + distance_dm(t0, theta, delta, c) / c;
                    worst = worst.max((delay_tau(2.0 * t0, theta, delta, c) - arrival).abs());
                }
            }
        }
        assert!(worst < 1e-12, "max error {worst}");
    }

    #[test]
    fn tau_inverts_arrival_time_on_a_grid() {
        // Brute force: tabulate arrival(t0) on a fine grid and invert it by
        // bracketing, then compare against the closed form.
        let c = 1540.0;
        let (theta, delta) = (0.35, 6.1e-3);
        let step = 1e-9;
        let grid: Vec<(f64, f64)> = (0..60_000)
            .map(|i| {
                let t0 = i as f64 * step;
                (t0, t0 + distance_dm(t0, theta, delta, c) / c)
            })
            .collect();
        let mut worst: f64 = 0.0;
        for w in grid.windows(2).step_by(997) {
            let (t0a, ra) = w[0];
            let (t0b, rb) = w[1];
            // arrival is monotone here; interpolate the origin time for the
            // midpoint arrival and check tau(2 t0) reproduces it.
            let r = 0.5 * (ra + rb);
            let t0 = t0a + (r - ra) / (rb - ra) * (t0b - t0a);
            let arrival = t0 + distance_dm(t0, theta, delta, c) / c;
            worst = worst.max((delay_tau(2.0 * t0, theta, delta, c) - arrival).abs());
        }
        assert!(worst < 1e-12, "max error {worst}");
    }

    #[test]
    fn distance_cases() {
        assert_relative_eq!(distance_dm(0.0, 0.4, -3e-3, 1540.0), 3e-3, max_relative = 1e-15);
        assert_relative_eq!(distance_dm(1e-5, 0.4, 0.0, 1540.0), 1540.0 * 1e-5, max_relative = 1e-14);
        assert_relative_eq!(distance_dm(4.0, 0.0, 3.0, 1.0), 5.0, max_relative = 1e-15);
    }

    #[test]
    fn reference_config_is_valid() {
        let cfg = AcquisitionConfig::reference();
        cfg.validate().unwrap();
        assert_eq!(cfg.n_angles(), 65);
        assert_relative_eq!(cfg.angles[0], -40f64.to_radians());
        assert_eq!(cfg.support(3), cfg.line_duration());
        let mut bad = cfg.clone();
        bad.sampling_hz = 5e6;
        assert!(bad.validate().is_err());
    }

    proptest! {
        #[test]
        fn tau_bounds_and_monotonicity(
            t in 0.0f64..1e-4,
            dt in 0.0f64..1e-6,
            theta in -1.4f64..1.4,
            delta in -0.02f64..0.02,
        ) {
            let c = 1540.0;
            let tau = delay_tau(t, theta, delta, c);
            prop_assert!(tau >= t / 2.0 - 1e-18);
            prop_assert!(delay_tau(t + dt, theta, delta, c) >= tau - 1e-18);
        }

        #[test]
        fn tau_is_dimensionally_homogeneous(
            t in 0.0f64..1e-4,
            theta in -1.4f64..1.4,
            delta in -0.02f64..0.02,
            a in 0.1f64..10.0,
        ) {
            let c = 1540.0;
            let lhs = delay_tau(a * t, theta, a * delta, c);
            let rhs = a * delay_tau(t, theta, delta, c);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-9));
        }

        #[test]
        fn distance_mirror_symmetry(
            t in 0.0f64..1e-4,
            theta in -1.4f64..1.4,
            delta in -0.02f64..0.02,
        ) {
            let c = 1540.0;
            let d1 = distance_dm(t, theta, delta, c);
            let d2 = distance_dm(t, -theta, -delta, c);
            prop_assert!(d1 >= 0.0);
            prop_assert!((d1 - d2).abs() <= 1e-15 * d1.max(1e-12));
        }
    }
}

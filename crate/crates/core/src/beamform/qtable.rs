//! Distortion coefficients for frequency-domain time alignment.
//!
//! Let `A_m` be the `N x N` operator that performs the time-domain alignment
//! of element `m` (linear interpolation at `tau_m(t_j; theta)`, rows outside
//! the beam support zeroed) and `F` the unitary DFT. The aligned coefficients
//! are `c^_m = B_m c_m` with `B_m = F A_m F^{-1}`, and the distortion
//! coefficients are the diagonals of `B_m` seen from each beam index:
//!
//! ```text
//! Q[k][m][n] = B_m[k, (k - n) mod N]      c^_m[k] = sum_n c_m[k - n] Q[k][m][n]
//! ```
//!
//! Row `k` of `B_m` is `(1/N) IDFT(u_k)` with `u_k = A_m^T f_k`, `f_k[j] =
//! e^{-2 pi i k j / N}`; `A_m` has at most two taps per row, so each row costs
//! one scatter pass and one inverse FFT. Rows are truncated to the smallest
//! window `|n| <= h` holding the requested share of the row energy, and the
//! window is shared by all elements at a given `k`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::beamform::fourier::{half_spectrum_len, SpectrumSet};
use crate::beamform::time::{alignment_taps, Tap};
use crate::error::{invalid, shape, Error, Result};
use crate::fft;
use crate::geometry::{AcquisitionConfig, ArrayGeometry};

/// Precomputed `e^{-2 pi i r / N}` for `r = 0..N`.
struct Twiddles(Vec<Complex64>);

impl Twiddles {
    fn new(n: usize) -> Self {
        Self(
            (0..n)
                .map(|r| Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * r as f64 / n as f64))
                .collect(),
        )
    }
}

/// Writes row `k` of `B_m` into `row` (length N).
fn distortion_row(taps: &[Tap], k: usize, tw: &Twiddles, row: &mut [Complex64]) {
    let n = taps.len();
    row.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
    let step = k % n;
    let mut r = 0usize;
    for tap in taps {
        let w = tw.0[r];
        if tap.lo != 0.0 {
            row[tap.base] += w * tap.lo;
        }
        if tap.hi != 0.0 {
            row[tap.base + 1] += w * tap.hi;
        }
        r += step;
        if r >= n {
            r -= n;
        }
    }
    fft::inverse_in_place(row);
    let s = 1.0 / n as f64;
    row.iter_mut().for_each(|v| *v *= s);
}

/// Inclusive range of `n` covering a full row of length `len`.
fn full_range(len: usize) -> (i64, usize) {
    (-(((len - 1) / 2) as i64), len)
}

/// Smallest centered half-width whose energy reaches `fraction` of the row
/// energy. `None` means the whole row.
fn window_half_width(row: &[Complex64], k: usize, fraction: f64) -> Option<usize> {
    let n = row.len();
    if fraction >= 1.0 {
        return None;
    }
    let energy = |d: i64| row[(k as i64 - d).rem_euclid(n as i64) as usize].norm_sqr();
    let total: f64 = row.iter().map(|v| v.norm_sqr()).sum();
    if total == 0.0 {
        return Some(0);
    }
    let target = fraction * total;
    let mut acc = energy(0);
    let max_h = (n - 1) / 2;
    for h in 0..=max_h {
        if h > 0 {
            acc += energy(h as i64) + energy(-(h as i64));
        }
        if acc >= target {
            return Some(h);
        }
    }
    None
}

/// Distortion coefficients of one angle for a set of beam indices.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    theta: f64,
    samples: usize,
    elements: usize,
    energy_fraction: f64,
    key: u64,
    /// Beam indices `k`, sorted.
    rows: Vec<usize>,
    /// First `n` of each row's window.
    n_first: Vec<i64>,
    /// Window length of each row.
    widths: Vec<usize>,
    /// Start of each row block in `values`; a block is `[m][n]`.
    starts: Vec<usize>,
    values: Vec<Complex64>,
}

impl QTable {
    /// Builds the table for angle index `a` on all indices `0..=N/2`.
    pub fn build(geometry: &ArrayGeometry, config: &AcquisitionConfig, a: usize, energy_fraction: f64) -> Result<Self> {
        let rows: Vec<usize> = (0..half_spectrum_len(config.samples)).collect();
        Self::build_rows(geometry, config, a, energy_fraction, &rows)
    }

    /// Builds the table for angle index `a` on the beam indices `rows`.
    pub fn build_rows(
        geometry: &ArrayGeometry,
        config: &AcquisitionConfig,
        a: usize,
        energy_fraction: f64,
        rows: &[usize],
    ) -> Result<Self> {
        config.validate()?;
        if a >= config.n_angles() {
            return Err(invalid(format!("angle index {a} out of range")));
        }
        if !(energy_fraction > 0.0 && energy_fraction <= 1.0) {
            return Err(invalid(format!(
                "energy fraction must lie in (0, 1], got {energy_fraction}"
            )));
        }
        let n = config.samples;
        let half = half_spectrum_len(n);
        if rows.windows(2).any(|w| w[1] <= w[0]) || rows.iter().any(|&k| k >= half) {
            return Err(invalid("table rows must be sorted, unique and within [0, N/2]"));
        }
        let theta = config.angles[a];
        let support = config.support(a);
        let m_count = geometry.elements();
        let taps: Vec<Vec<Tap>> = (0..m_count)
            .map(|m| alignment_taps(geometry.offset(m), theta, support, config))
            .collect();
        let tw = Twiddles::new(n);

        let blocks: Vec<(i64, usize, Vec<Complex64>)> = rows
            .par_iter()
            .map(|&k| {
                let mut full = vec![Complex64::new(0.0, 0.0); m_count * n];
                let mut h: Option<usize> = Some(0);
                for (m, row) in full.chunks_exact_mut(n).enumerate() {
                    distortion_row(&taps[m], k, &tw, row);
                    h = match (h, window_half_width(row, k, energy_fraction)) {
                        (Some(x), Some(y)) => Some(x.max(y)),
                        _ => None,
                    };
                }
                let (first, width) = match h {
                    Some(h) if 2 * h + 1 < n => (-(h as i64), 2 * h + 1),
                    _ => full_range(n),
                };
                let mut block = Vec::with_capacity(m_count * width);
                for row in full.chunks_exact(n) {
                    for i in 0..width {
                        let nn = first + i as i64;
                        block.push(row[(k as i64 - nn).rem_euclid(n as i64) as usize]);
                    }
                }
                (first, width, block)
            })
            .collect();

        let mut n_first = Vec::with_capacity(rows.len());
        let mut widths = Vec::with_capacity(rows.len());
        let mut starts = Vec::with_capacity(rows.len());
        let mut values = Vec::with_capacity(blocks.iter().map(|b| b.2.len()).sum());
        for (first, width, block) in blocks {
            n_first.push(first);
            widths.push(width);
            starts.push(values.len());
            values.extend(block);
        }
        Ok(Self {
            theta,
            samples: n,
            elements: m_count,
            energy_fraction,
            key: table_key(geometry, config, a, energy_fraction, rows),
            rows: rows.to_vec(),
            n_first,
            widths,
            starts,
            values,
        })
    }

    /// Reassembles a table from stored parts (see [`QTable::parts`]).
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        theta: f64,
        samples: usize,
        elements: usize,
        energy_fraction: f64,
        key: u64,
        rows: Vec<usize>,
        n_first: Vec<i64>,
        widths: Vec<usize>,
        values: Vec<Complex64>,
    ) -> Result<Self> {
        if rows.len() != n_first.len() || rows.len() != widths.len() {
            return Err(shape("row metadata lengths disagree"));
        }
        let mut starts = Vec::with_capacity(rows.len());
        let mut total = 0;
        for &w in &widths {
            starts.push(total);
            total += w * elements;
        }
        if total != values.len() {
            return Err(shape(format!(
                "table payload has {} values, rows need {total}",
                values.len()
            )));
        }
        Ok(Self {
            theta,
            samples,
            elements,
            energy_fraction,
            key,
            rows,
            n_first,
            widths,
            starts,
            values,
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn energy_fraction(&self) -> f64 {
        self.energy_fraction
    }

    /// Cache key derived from geometry, acquisition, angle, fraction and rows.
    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn row_position(&self, k: usize) -> Option<usize> {
        self.rows.binary_search(&k).ok()
    }

    /// Window of row position `i` as (first n, length).
    pub fn window(&self, i: usize) -> (i64, usize) {
        (self.n_first[i], self.widths[i])
    }

    /// Largest `|n|` retained by row position `i`.
    pub fn half_width(&self, i: usize) -> usize {
        let (first, width) = self.window(i);
        (-first).max(first + width as i64 - 1) as usize
    }

    /// Coefficients `Q[k][m][first..first + width]` for row position `i`.
    pub fn coefficients(&self, i: usize, m: usize) -> &[Complex64] {
        let w = self.widths[i];
        let start = self.starts[i] + m * w;
        &self.values[start..start + w]
    }

    /// `Q[k][m][n]`, zero outside the stored window.
    pub fn get(&self, k: usize, m: usize, n: i64) -> Complex64 {
        let Some(i) = self.row_position(k) else {
            return Complex64::new(0.0, 0.0);
        };
        let (first, width) = self.window(i);
        let off = n - first;
        if off < 0 || off >= width as i64 {
            return Complex64::new(0.0, 0.0);
        }
        self.coefficients(i, m)[off as usize]
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    /// Row metadata for persistence: `(rows, n_first, widths)`.
    pub fn parts(&self) -> (&[usize], &[i64], &[usize]) {
        (&self.rows, &self.n_first, &self.widths)
    }

    /// Number of stored complex coefficients.
    pub fn stored_len(&self) -> usize {
        self.values.len()
    }
}

/// FNV-1a over the quantities a table depends on. Data never enters the key.
pub fn table_key(
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
    a: usize,
    energy_fraction: f64,
    rows: &[usize],
) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |bytes: &[u8]| {
        for &b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    };
    for d in geometry.offsets() {
        eat(&d.to_bits().to_le_bytes());
    }
    for v in [
        config.sound_speed,
        config.sampling_hz,
        config.angles[a],
        config.support(a),
        energy_fraction,
    ] {
        eat(&v.to_bits().to_le_bytes());
    }
    eat(&(config.samples as u64).to_le_bytes());
    for &k in rows {
        eat(&(k as u64).to_le_bytes());
    }
    h
}

/// Per-element aligned coefficients and the share of alignment terms whose
/// source coefficient was not available.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedSpectra {
    pub spectra: SpectrumSet,
    pub dropped_fraction: f64,
}

/// Dense view of a spectrum set over all residues `0..N`, with conjugate
/// symmetry applied for the upper half.
struct DenseSpectrum {
    present: Vec<bool>,
    values: Vec<Vec<Complex64>>,
}

impl DenseSpectrum {
    fn new(spectra: &SpectrumSet) -> Self {
        let n = spectra.samples;
        let mut present = vec![false; n];
        let zero = Complex64::new(0.0, 0.0);
        let mut values = vec![vec![zero; n]; spectra.elements()];
        for (i, &k) in spectra.kept.iter().enumerate() {
            present[k] = true;
            if k != 0 {
                present[n - k] = true;
            }
            for (m, dense) in values.iter_mut().enumerate() {
                let c = spectra.coeffs[m][i];
                dense[k] = c;
                if k != 0 && 2 * k != n {
                    dense[n - k] = c.conj();
                }
            }
        }
        Self { present, values }
    }
}

fn check_inputs(spectra: &SpectrumSet, elements: usize) -> Result<()> {
    if spectra.kept.is_empty() {
        return Err(invalid("spectrum set has no kept coefficients"));
    }
    if spectra.elements() != elements {
        return Err(shape(format!(
            "spectra have {} elements, alignment expects {elements}",
            spectra.elements()
        )));
    }
    Ok(())
}

/// `c^_m[k] = sum_{n in window(k)} c_m[k - n] Q[k][m][n]` for every kept `k`.
///
/// Source coefficients that are neither kept nor recoverable by conjugate
/// symmetry contribute zero and are counted in `dropped_fraction`.
pub fn fd_time_align(spectra: &SpectrumSet, table: &QTable) -> Result<AlignedSpectra> {
    check_inputs(spectra, table.elements)?;
    if spectra.samples != table.samples {
        return Err(shape(format!(
            "spectra of length {} against a table for length {}",
            spectra.samples, table.samples
        )));
    }
    let positions: Vec<usize> = spectra
        .kept
        .iter()
        .map(|&k| {
            table
                .row_position(k)
                .ok_or_else(|| Error::Config(format!("distortion table has no row for beam index {k}")))
        })
        .collect::<Result<_>>()?;
    let n = spectra.samples as i64;
    let dense = DenseSpectrum::new(spectra);

    let mut total_terms = 0usize;
    let mut dropped_terms = 0usize;
    for (&k, &i) in spectra.kept.iter().zip(&positions) {
        let (first, width) = table.window(i);
        total_terms += width;
        dropped_terms += (0..width)
            .filter(|&o| !dense.present[(k as i64 - first - o as i64).rem_euclid(n) as usize])
            .count();
    }

    let coeffs: Vec<Vec<Complex64>> = (0..table.elements)
        .into_par_iter()
        .map(|m| {
            let src = &dense.values[m];
            spectra
                .kept
                .iter()
                .zip(&positions)
                .map(|(&k, &i)| {
                    let (first, _) = table.window(i);
                    table
                        .coefficients(i, m)
                        .iter()
                        .enumerate()
                        .map(|(o, q)| q * src[(k as i64 - first - o as i64).rem_euclid(n) as usize])
                        .sum()
                })
                .collect()
        })
        .collect();

    Ok(AlignedSpectra {
        spectra: SpectrumSet {
            coeffs,
            kept: spectra.kept.clone(),
            samples: spectra.samples,
            sampling_hz: spectra.sampling_hz,
        },
        dropped_fraction: dropped_terms as f64 / total_terms as f64,
    })
}

/// Untruncated alignment for angle index `a`, generating each element's
/// distortion rows on the fly instead of holding the full table. Equivalent
/// to [`fd_time_align`] with an `energy_fraction = 1` table.
pub fn fd_time_align_exact(
    spectra: &SpectrumSet,
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
    a: usize,
) -> Result<AlignedSpectra> {
    check_inputs(spectra, geometry.elements())?;
    if spectra.samples != config.samples {
        return Err(shape("spectra length does not match the configuration"));
    }
    let n = config.samples;
    let theta = config.angles[a];
    let support = config.support(a);
    let tw = Twiddles::new(n);
    let dense = DenseSpectrum::new(spectra);
    let missing = dense.present.iter().filter(|p| !**p).count();

    let coeffs: Vec<Vec<Complex64>> = (0..geometry.elements())
        .into_par_iter()
        .map(|m| {
            let taps = alignment_taps(geometry.offset(m), theta, support, config);
            let src = &dense.values[m];
            let mut row = vec![Complex64::new(0.0, 0.0); n];
            spectra
                .kept
                .iter()
                .map(|&k| {
                    distortion_row(&taps, k, &tw, &mut row);
                    row.iter().zip(src).map(|(b, c)| b * c).sum()
                })
                .collect()
        })
        .collect();

    Ok(AlignedSpectra {
        spectra: SpectrumSet {
            coeffs,
            kept: spectra.kept.clone(),
            samples: n,
            sampling_hz: spectra.sampling_hz,
        },
        dropped_fraction: missing as f64 / n as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beamform::fourier::{dft_coeffs, subnyquist_select};
    use crate::beamform::time::time_align_channels;
    use crate::geometry::uniform_angles;
    use crate::simulate::PulseSpec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(m: usize, n: usize, angles: Vec<f64>) -> (ArrayGeometry, AcquisitionConfig) {
        let g = ArrayGeometry::half_wavelength(m, 1540.0, 2.7e6).unwrap();
        let cfg = AcquisitionConfig {
            samples: n,
            angles,
            ..AcquisitionConfig::reference()
        };
        (g, cfg)
    }

    fn random_channels(len: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    /// Time-domain oracle: align, then transform each element.
    fn oracle(channels: &[f64], g: &ArrayGeometry, cfg: &AcquisitionConfig, a: usize) -> SpectrumSet {
        let cube = time_align_channels(channels, g, cfg, cfg.angles[a], cfg.support(a)).unwrap();
        let m = g.elements();
        let per_element: Vec<f64> = (0..m).flat_map(|e| cube.column(e)).collect();
        dft_coeffs(&per_element, m, cfg.sampling_hz).unwrap()
    }

    fn rel_err(a: &SpectrumSet, b: &SpectrumSet) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (ra, rb) in a.coeffs.iter().zip(&b.coeffs) {
            for (x, y) in ra.iter().zip(rb) {
                num += (x - y).norm_sqr();
                den += y.norm_sqr();
            }
        }
        (num / den).sqrt()
    }

    #[test]
    fn origin_element_table_is_identity() {
        let (g, cfg) = setup(5, 64, vec![0.3]);
        assert_eq!(g.offset(2), 0.0);
        let t = QTable::build(&g, &cfg, 0, 0.95).unwrap();
        for (i, &k) in t.rows().iter().enumerate() {
            let (first, width) = t.window(i);
            for o in 0..width {
                let nn = first + o as i64;
                let q = t.get(k, 2, nn);
                let expected = if nn == 0 { 1.0 } else { 0.0 };
                assert!((q - Complex64::new(expected, 0.0)).norm() < 1e-12, "k={k} n={nn} q={q}");
            }
        }
        // A single-element array at the origin needs no spreading at all.
        let (g1, cfg1) = setup(1, 64, vec![0.3]);
        let t1 = QTable::build(&g1, &cfg1, 0, 0.95).unwrap();
        assert!((0..t1.rows().len()).all(|i| t1.window(i) == (0, 1)));
    }

    #[test]
    fn full_table_reproduces_time_domain_alignment() {
        for &n in &[64usize, 75] {
            let (g, cfg) = setup(6, n, vec![-0.4, 0.25]);
            let channels = random_channels(6 * n, n as u64);
            let spectra = dft_coeffs(&channels, 6, cfg.sampling_hz).unwrap();
            for a in 0..2 {
                let t = QTable::build(&g, &cfg, a, 1.0).unwrap();
                let got = fd_time_align(&spectra, &t).unwrap();
                assert_eq!(got.dropped_fraction, 0.0);
                let err = rel_err(&got.spectra, &oracle(&channels, &g, &cfg, a));
                assert!(err < 1e-10, "n={n} a={a} err={err}");
                let exact = fd_time_align_exact(&spectra, &g, &cfg, a).unwrap();
                assert!(rel_err(&exact.spectra, &got.spectra) < 1e-12);
            }
        }
    }

    #[test]
    fn beam_support_enters_the_operator() {
        let (g, mut cfg) = setup(4, 80, vec![0.2]);
        cfg.beam_support = Some(vec![50.0 / cfg.sampling_hz]);
        let channels = random_channels(4 * 80, 3);
        let spectra = dft_coeffs(&channels, 4, cfg.sampling_hz).unwrap();
        let t = QTable::build(&g, &cfg, 0, 1.0).unwrap();
        let got = fd_time_align(&spectra, &t).unwrap();
        assert!(rel_err(&got.spectra, &oracle(&channels, &g, &cfg, 0)) < 1e-10);
    }

    #[test]
    fn windows_hold_the_requested_energy_and_nest() {
        let (g, cfg) = setup(8, 128, vec![0.5]);
        let t90 = QTable::build(&g, &cfg, 0, 0.9).unwrap();
        let t99 = QTable::build(&g, &cfg, 0, 0.99).unwrap();
        let full = QTable::build(&g, &cfg, 0, 1.0).unwrap();
        for (i, &k) in t90.rows().iter().enumerate() {
            assert!(t90.half_width(i) <= t99.half_width(i));
            for m in 0..8 {
                let row_energy: f64 = full.coefficients(i, m).iter().map(|q| q.norm_sqr()).sum();
                let kept: f64 = t90.coefficients(i, m).iter().map(|q| q.norm_sqr()).sum();
                assert!(kept >= 0.9 * row_energy * (1.0 - 1e-12), "k={k} m={m}");
            }
        }
        assert_eq!(t90.key(), QTable::build(&g, &cfg, 0, 0.9).unwrap().key());
        assert_ne!(t90.key(), t99.key());
    }

    #[test]
    fn reference_windows_concentrate_in_the_pulse_band() {
        let (g, cfg) = setup(64, 1918, uniform_angles(9, 40f64.to_radians()));
        let band: Vec<usize> = (275..675).collect();
        for a in [0, 4] {
            let t = QTable::build_rows(&g, &cfg, a, 0.95, &band).unwrap();
            let mut widths: Vec<usize> = (0..band.len()).map(|i| t.half_width(i)).collect();
            widths.sort_unstable();
            assert!(
                widths[widths.len() / 2] < 1918 / 16,
                "median {}",
                widths[widths.len() / 2]
            );
            assert!(*widths.last().unwrap() < 1918 / 4);
        }
    }

    #[test]
    fn zero_spectra_align_to_zero() {
        let (g, cfg) = setup(4, 64, vec![0.1]);
        let spectra = dft_coeffs(&vec![0.0; 4 * 64], 4, cfg.sampling_hz).unwrap();
        let t = QTable::build(&g, &cfg, 0, 0.95).unwrap();
        let got = fd_time_align(&spectra, &t).unwrap();
        assert!(got.spectra.coeffs.iter().flatten().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn empty_kept_set_is_rejected() {
        let (g, cfg) = setup(2, 32, vec![0.0]);
        let t = QTable::build(&g, &cfg, 0, 0.9).unwrap();
        let empty = SpectrumSet {
            coeffs: vec![vec![], vec![]],
            kept: vec![],
            samples: 32,
            sampling_hz: cfg.sampling_hz,
        };
        assert!(matches!(fd_time_align(&empty, &t), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn missing_rows_are_a_configuration_error() {
        let (g, cfg) = setup(2, 32, vec![0.0]);
        let t = QTable::build_rows(&g, &cfg, 0, 0.9, &[3, 4, 5]).unwrap();
        let spectra = dft_coeffs(&random_channels(64, 1), 2, cfg.sampling_hz).unwrap();
        assert!(matches!(fd_time_align(&spectra, &t), Err(Error::Config(_))));
    }

    #[test]
    fn sub_nyquist_band_drops_terms() {
        let n = 1918;
        let (g, cfg) = setup(8, n, vec![0.3]);
        let channels = random_channels(8 * n, 17);
        let spectra = dft_coeffs(&channels, 8, cfg.sampling_hz).unwrap();
        let band = subnyquist_select(&spectra, 400, &PulseSpec::with_carrier(2.7e6))
            .unwrap()
            .spectra;
        let t = QTable::build_rows(&g, &cfg, 0, 0.95, &band.kept).unwrap();
        let partial = fd_time_align(&band, &t).unwrap();
        assert!(partial.dropped_fraction > 0.0);
        // Reference: every source coefficient available, same output indices.
        let full = fd_time_align_exact(&spectra, &g, &cfg, 0).unwrap();
        let reference = SpectrumSet {
            coeffs: full
                .spectra
                .coeffs
                .iter()
                .map(|r| band.kept.iter().map(|&k| r[k]).collect())
                .collect(),
            ..band.clone()
        };
        assert!(rel_err(&partial.spectra, &reference) > 0.0);
    }
}

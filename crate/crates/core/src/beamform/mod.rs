//! Time-domain (DAS, MV) and Fourier-domain beamformers plus the B-mode
//! display chain.

pub mod display;
pub mod fourier;
pub mod mv;
pub mod qtable;
pub mod time;

use crate::error::Result;
use crate::geometry::{AcquisitionConfig, ArrayGeometry, BeamLine, RfFrame};

pub use display::{bmode, envelope, log_compress, scan_convert, Raster};
pub use fourier::{
    degraded_reconstruct, dft_coeffs, fd_beamform, subnyquist_select, BeamSpectrum, Selection, SpectrumSet,
};
pub use mv::{mv_beamform, MvConfig};
pub use qtable::{fd_time_align, fd_time_align_exact, AlignedSpectra, QTable};
pub use time::{das, time_align, time_align_channels, AlignedCube};

/// Delay-and-sum line for angle index `a`.
pub fn das_line(frame: &RfFrame, a: usize, geometry: &ArrayGeometry, config: &AcquisitionConfig) -> Result<BeamLine> {
    Ok(das(&time_align(frame, a, geometry, config)?))
}

/// Minimum-variance line for angle index `a`.
pub fn mv_line(
    frame: &RfFrame,
    a: usize,
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
    mv: &MvConfig,
) -> Result<BeamLine> {
    mv_beamform(&time_align(frame, a, geometry, config)?, mv)
}

/// Frequency-domain DAS line for angle index `a` from the full spectrum.
/// `table = None` uses the untruncated operator.
pub fn fd_das_line(
    frame: &RfFrame,
    a: usize,
    geometry: &ArrayGeometry,
    config: &AcquisitionConfig,
    table: Option<&QTable>,
) -> Result<BeamLine> {
    frame.check(geometry, config)?;
    let spectra = dft_coeffs(frame.angle(a), geometry.elements(), config.sampling_hz)?;
    let aligned = match table {
        Some(t) => fd_time_align(&spectra, t)?,
        None => fd_time_align_exact(&spectra, geometry, config, a)?,
    };
    let beam = fd_beamform(&aligned.spectra);
    Ok(BeamLine::new(
        degraded_reconstruct(&beam.coeffs, &beam.kept, beam.samples)?,
        config.angles[a],
    ))
}

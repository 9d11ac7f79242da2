use std::path::PathBuf;

use anyhow::Result;
use serde_json::json;
use snb_core::rng::split_seed;
use snb_core::simulate::simulate_rf;

use super::{load_config, FRAME_FILE};
use crate::manifest::{Manifest, OutputSet};
use crate::snb1::Tensor;

pub struct SimulateArgs {
    pub config: Option<PathBuf>,
    pub seed: u64,
    pub out: PathBuf,
}

/// Simulates the configured phantom. The phantom draws from
/// `split_seed(seed, 0)` and the noise from `split_seed(seed, 1)`.
pub fn simulate(args: &SimulateArgs) -> Result<String> {
    let cfg = load_config(args.config.as_deref())?;
    cfg.validate()?;
    let phantom = cfg.phantom.build(split_seed(args.seed, 0))?;
    let acq = cfg.acquisition();
    let frame = simulate_rf(
        &phantom,
        &cfg.geometry()?,
        &acq,
        &cfg.pulse()?,
        &cfg.simulation(),
        cfg.simulation.snr_db,
        split_seed(args.seed, 1),
    )?;
    let dims = vec![frame.n_angles(), frame.elements(), frame.samples()];
    let mut out = OutputSet::new(&args.out);
    out.add_tensor(FRAME_FILE, &Tensor::f64(dims, frame.into_vec())?);
    let mut m = Manifest::new("simulate", &cfg);
    m.seed = Some(args.seed);
    m.details = json!({ "scatterers": phantom.len(), "phantom": phantom.description });
    let hash = out.commit(m)?;
    log::info!("simulated {} scatterers into {}", phantom.len(), args.out.display());
    Ok(hash)
}

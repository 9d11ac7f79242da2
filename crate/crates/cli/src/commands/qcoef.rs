use std::path::PathBuf;

use anyhow::Result;
use serde_json::json;
use snb_core::sampling::{build_scheme_tables, SchemeLabel};

use super::{index_file, load_config, scheme, table_file, TablesDetails};
use crate::manifest::{sha256_hex, Artifact, Manifest, OutputSet, MANIFEST_FILE};
use crate::snb1::Tensor;

pub struct QcoefArgs {
    pub config: Option<PathBuf>,
    pub scheme: SchemeLabel,
    pub energy_fraction: Option<f64>,
    pub out: PathBuf,
}

/// Outcome of a table build.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum QcoefOutcome {
    Built(String),
    Cached(String),
}

impl QcoefOutcome {
    pub fn hash(&self) -> &str {
        match self {
            QcoefOutcome::Built(h) | QcoefOutcome::Cached(h) => h,
        }
    }
}

/// Builds one table per angle over the scheme's band. An energy fraction
/// of 1 stores nothing and marks the set as the untruncated operator,
/// which is generated on the fly. Re-running with an unchanged key leaves
/// the output directory untouched.
pub fn qcoef(args: &QcoefArgs) -> Result<QcoefOutcome> {
    let cfg = load_config(args.config.as_deref())?;
    cfg.validate()?;
    let fraction = args.energy_fraction.unwrap_or(cfg.energy_fraction);
    anyhow::ensure!(fraction > 0.0 && fraction <= 1.0, "energy fraction must lie in (0, 1]");
    let scheme = scheme(&cfg, args.scheme)?;
    let key_src = json!({
        "geometry": cfg.geometry,
        "acquisition": cfg.acquisition,
        "pulse": cfg.pulse,
        "scheme": args.scheme.as_str(),
        "energy_fraction": fraction,
    });
    let cache_key = sha256_hex(&serde_json::to_vec(&key_src)?);
    if args.out.join(MANIFEST_FILE).exists() {
        if let Ok(art) = Artifact::open(&args.out, "qcoef") {
            if let Ok(d) = art.manifest.detail::<TablesDetails>("tables") {
                if d.cache_key == cache_key {
                    log::info!("qcoef cache hit for key {cache_key} in {}", args.out.display());
                    return Ok(QcoefOutcome::Cached(art.hash));
                }
            }
            for name in art.manifest.outputs.keys() {
                std::fs::remove_file(art.path(name))?;
                std::fs::remove_file(art.path(&format!("{name}.json")))?;
            }
        }
        log::info!("qcoef cache in {} is stale; rebuilding", args.out.display());
    }
    let acq = cfg.acquisition();
    let mut out = OutputSet::new(&args.out);
    let exact = fraction == 1.0;
    let (rows, stored_values) = if exact {
        (scheme.band(&cfg.pulse()?, acq.sampling_hz)?.len(), 0)
    } else {
        let tables = build_scheme_tables(&cfg.geometry()?, &acq, &scheme, &cfg.pulse()?, fraction)?;
        let mut stored = 0;
        for (a, t) in tables.iter().enumerate() {
            let (rows, n_first, widths) = t.parts();
            let mut index: Vec<f64> = rows.iter().map(|&r| r as f64).collect();
            index.extend(n_first.iter().map(|&n| n as f64));
            index.extend(widths.iter().map(|&w| w as f64));
            out.add_tensor(&index_file(a), &Tensor::f64(vec![3, rows.len()], index)?);
            out.add_tensor(
                &table_file(a),
                &Tensor::c128(vec![t.stored_len()], t.values().to_vec())?,
            );
            stored += t.stored_len();
        }
        (tables[0].rows().len(), stored)
    };
    let details = TablesDetails {
        cache_key,
        energy_fraction: fraction,
        exact,
        angles: acq.n_angles(),
        rows,
        stored_values,
    };
    let mut m = Manifest::new("qcoef", &cfg);
    m.scheme = Some(args.scheme.as_str().into());
    m.details = json!({ "tables": details });
    let hash = out.commit(m)?;
    if exact {
        log::info!(
            "marked {} as the untruncated operator for {} angles",
            args.out.display(),
            acq.n_angles()
        );
    } else {
        log::info!(
            "built {} distortion tables ({stored_values} coefficients) in {}",
            acq.n_angles(),
            args.out.display()
        );
    }
    Ok(QcoefOutcome::Built(hash))
}

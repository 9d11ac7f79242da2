//! End-to-end acceptance run. Prints one PASS or FAIL line per criterion
//! followed by a tally.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use snb::commands::{
    beamform, evaluate, make_dataset, open_frame, qcoef, simulate, train, BeamformArgs, EvaluateArgs, MakeDatasetArgs,
    Method, QcoefArgs, SimulateArgs, TrainArgs,
};
use snb::config::{PhantomSpec, RunConfig};
use snb::evaluation::{ReportRow, Scores, REPORT_ROWS};
use snb::manifest::{Artifact, MANIFEST_FILE};
use snb_core::beamform::Raster;
use snb_core::metrics::{cnr, cnr_values, fwhm, nrmse, ssim, ssim_with_range, RegionSpec, SsimWindow};
use snb_core::neural::gradcheck;
use snb_core::sampling::{make_degraded_channels, CubeLayout, SamplingScheme, SchemeLabel};

type Verdict = Result<(bool, String)>;

fn write_config(dir: &Path, name: &str, cfg: &RunConfig) -> Result<PathBuf> {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_vec_pretty(cfg)?)?;
    Ok(p)
}

fn depth_mm(cfg: &RunConfig) -> f64 {
    cfg.acquisition().max_depth() * 1e3
}

/// Fixed pseudo-random fraction in `[0, 1)` for frame `f`, draw `k`.
fn jitter(f: u64, k: u64) -> f64 {
    ((f * 7919 + k * 104_729) % 1000) as f64 / 1000.0
}

/// Speckle frame at the reference geometry with 9 angles. Shared by the
/// first and third criteria.
fn reference_frame(dir: &Path) -> Result<(PathBuf, f64)> {
    let mut cfg = RunConfig::default();
    cfg.acquisition.angle_count = 9;
    let d = depth_mm(&cfg);
    cfg.phantom = PhantomSpec::Cyst {
        r_min_mm: 0.05 * d,
        r_max_mm: 0.99 * d,
        half_span_deg: cfg.acquisition.half_span_deg,
        center_depth_mm: 0.5 * d,
        center_angle_deg: 0.0,
        radius_mm: 6.0,
        density_per_cm2: 100.0,
    };
    let config = write_config(dir, "reference.json", &cfg)?;
    let out = dir.join("reference_frame");
    let t0 = Instant::now();
    simulate(&SimulateArgs {
        config: Some(config),
        seed: 1,
        out: out.clone(),
    })?;
    Ok((out, t0.elapsed().as_secs_f64()))
}

fn fd_equivalence(dir: &Path, frame: &Path) -> Verdict {
    let t0 = Instant::now();
    let cfg = open_frame(frame)?.config;
    let config = write_config(dir, "equivalence.json", &cfg)?;
    let check = |fraction: f64, name: &str| -> Result<f64> {
        let tables = dir.join(name);
        qcoef(&QcoefArgs {
            config: Some(config.clone()),
            scheme: SchemeLabel::Full,
            energy_fraction: Some(fraction),
            out: tables.clone(),
        })?;
        let (_, e) = beamform(&BeamformArgs {
            frame: frame.to_path_buf(),
            method: Method::FdDas,
            scheme: SchemeLabel::Full,
            tables: Some(tables),
            check: true,
            raster: false,
            out: dir.join(format!("{name}_fd")),
        })?;
        e.context("beamform reported no check value")
    };
    let exact = check(1.0, "q_exact")?;
    let truncated = check(0.95, "q_095")?;
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        exact <= 1e-9 && truncated <= 5e-2 && secs <= 120.0,
        format!("NRMSE exact {exact:.2e} (<= 1e-9), 0.95 {truncated:.2e} (<= 5e-2), {secs:.1} s (<= 120 s)"),
    ))
}

fn reduction_accounting() -> Verdict {
    let f = |l: SchemeLabel| -> Result<f64> { Ok(SamplingScheme::new(l, 1918, 64)?.reduction_factor()) };
    let (x5, x9, x11) = (f(SchemeLabel::X5)?, f(SchemeLabel::X9)?, f(SchemeLabel::X11)?);
    let kept = SamplingScheme::new(SchemeLabel::X11, 1918, 64)?.kept_elements.len();
    let round1 = |v: f64| (v * 10.0).round() / 10.0;
    let pass = x5 == 1918.0 / 400.0
        && x9 == 1918.0 / 220.0
        && x11 == (1918.0 * 64.0) / (400.0 * 27.0)
        && kept == 27
        && [round1(x5), round1(x9), round1(x11)] == [4.8, 8.7, 11.4]
        && [x5.round(), x9.round(), x11.round()] == [5.0, 9.0, 11.0]
        && f(SchemeLabel::Full)? == 1.0;
    Ok((
        pass,
        format!("x5 {x5:.4}, x9 {x9:.4}, x11 {x11:.4} with {kept} elements"),
    ))
}

fn degradation_ordering(frame: &Path) -> Verdict {
    let fa = open_frame(frame)?;
    let cfg = &fa.config;
    let (g, acq, pulse) = (cfg.geometry()?, cfg.acquisition(), cfg.pulse()?);
    let degraded = |label: SchemeLabel| -> Result<snb_core::RfFrame> {
        let s = SamplingScheme::new(label, acq.samples, g.elements())?;
        Ok(make_degraded_channels(&fa.frame, &g, &acq, &s, None, &pulse)?.frame)
    };
    let (full, x5, x9) = (
        degraded(SchemeLabel::Full)?,
        degraded(SchemeLabel::X5)?,
        degraded(SchemeLabel::X9)?,
    );
    let element = |f: &snb_core::RfFrame, m: usize| -> Vec<f64> {
        (0..f.n_angles()).flat_map(|a| f.channel(a, m).to_vec()).collect()
    };
    let mut ordered = 0;
    let m = g.elements();
    for e in 0..m {
        let reference = element(&full, e);
        if nrmse(&element(&x9, e), &reference)? > nrmse(&element(&x5, e), &reference)? {
            ordered += 1;
        }
    }
    let share = ordered as f64 / m as f64;
    Ok((
        share >= 0.95,
        format!(
            "x9 error above x5 on {ordered}/{m} elements ({:.1}%, >= 95%)",
            100.0 * share
        ),
    ))
}

/// Settings of the desk-scale training run.
const TOY_FRAMES: u64 = 10;
const TOY_EPOCHS: usize = 50;
const TOY_LR: f64 = 2e-4;
const TOY_WIDTHS: [usize; 3] = [4, 8, 16];
const TOY_BOTTLENECK: usize = 32;
const TOY_CYST_RADIUS_MM: f64 = 1.8;
const HELD_OUT_POINTS: u64 = 7;
const HELD_OUT_CYST: u64 = 8;

fn toy_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.acquisition.samples = 768;
    cfg.acquisition.angle_count = 21;
    cfg.acquisition.half_span_deg = 10.0;
    cfg.simulation.snr_db = None;
    cfg.network.widths = TOY_WIDTHS;
    cfg.network.bottleneck = TOY_BOTTLENECK;
    cfg.training.epochs = TOY_EPOCHS;
    cfg.training.lr = TOY_LR;
    cfg
}

/// Odd frames hold a 3 x 3 point grid, even frames an anechoic cyst in
/// speckle; both are shifted per frame.
fn toy_phantom(cfg: &RunConfig, f: u64) -> PhantomSpec {
    let d = depth_mm(cfg);
    let half = cfg.acquisition.half_span_deg;
    if f % 2 == 1 {
        let off = 0.1 * (jitter(f, 1) - 0.5);
        PhantomSpec::PointGrid {
            depths_mm: [0.3, 0.55, 0.8].iter().map(|v| (v + off) * d).collect(),
            angles_deg: [-0.6, 0.0, 0.6].iter().map(|v| (v + off) * half).collect(),
            amplitude: 1.0,
        }
    } else {
        PhantomSpec::Cyst {
            r_min_mm: 0.05 * d,
            r_max_mm: 0.99 * d,
            half_span_deg: half,
            center_depth_mm: (0.45 + 0.25 * jitter(f, 2)) * d,
            center_angle_deg: (jitter(f, 3) - 0.5) * half,
            radius_mm: TOY_CYST_RADIUS_MM * (0.8 + 0.4 * jitter(f, 4)),
            density_per_cm2: 600.0,
        }
    }
}

fn toy_frame(dir: &Path, cfg: &RunConfig, f: u64) -> Result<PathBuf> {
    let mut c = cfg.clone();
    c.phantom = toy_phantom(cfg, f);
    let config = write_config(dir, &format!("toy_{f}.json"), &c)?;
    let out = dir.join(format!("toy_frame_{f}"));
    simulate(&SimulateArgs {
        config: Some(config),
        seed: f,
        out: out.clone(),
    })?;
    Ok(out)
}

struct ToyRun {
    frames: usize,
    epochs: usize,
    train_secs: f64,
    first_val: f64,
    best_val: f64,
    points: Vec<ReportRow>,
    cyst: Vec<ReportRow>,
}

fn row<'a>(rows: &'a [ReportRow], method: &str) -> Result<&'a Scores> {
    rows.iter()
        .find(|r| r.0 == method && (method != "proposed" || r.1 == "x5"))
        .map(|r| &r.2)
        .with_context(|| format!("no {method} row"))
}

fn toy_run(dir: &Path) -> Result<ToyRun> {
    let cfg = toy_config();
    let config = write_config(dir, "toy.json", &cfg)?;
    let frames = (100..100 + TOY_FRAMES)
        .map(|f| toy_frame(dir, &cfg, f))
        .collect::<Result<Vec<_>>>()?;
    let tables = dir.join("toy_tables");
    qcoef(&QcoefArgs {
        config: Some(config.clone()),
        scheme: SchemeLabel::X5,
        energy_fraction: Some(0.95),
        out: tables.clone(),
    })?;
    let dataset = dir.join("toy_dataset");
    make_dataset(&MakeDatasetArgs {
        frames: frames.clone(),
        config: Some(config),
        scheme: SchemeLabel::X5,
        layout: CubeLayout::ElementsD2,
        tables: Some(tables.clone()),
        out: dataset.clone(),
    })?;
    let checkpoint = dir.join("toy_checkpoint");
    let t0 = Instant::now();
    let state = train(&TrainArgs {
        dataset: dataset.clone(),
        epochs: None,
        lr: None,
        seed: 1,
        resume: false,
        out: checkpoint.clone(),
    })?;
    let train_secs = t0.elapsed().as_secs_f64();
    let records = &state.history.records;
    ensure!(!records.is_empty(), "training ran no epochs");
    let best = state.history.best_epoch().context("no best epoch")?;
    let scores = |f: u64| -> Result<Vec<ReportRow>> {
        let frame = toy_frame(dir, &cfg, f)?;
        Ok(evaluate(&EvaluateArgs {
            frame,
            checkpoints: vec![checkpoint.clone()],
            tables: vec![tables.clone()],
            datasets: vec![dataset.clone()],
            out: dir.join(format!("toy_eval_{f}")),
        })?
        .1)
    };
    Ok(ToyRun {
        frames: frames.len(),
        epochs: records.len(),
        train_secs,
        first_val: records[0].val_smsle,
        best_val: records[best - 1].val_smsle,
        points: scores(HELD_OUT_POINTS)?,
        cyst: scores(HELD_OUT_CYST)?,
    })
}

fn resolution_ordering(run: &ToyRun) -> Verdict {
    let lateral = |m: &str| -> Result<f64> {
        row(&run.points, m)?
            .lateral_fwhm_mm
            .with_context(|| format!("{m} FWHM"))
    };
    let (das, mv, net) = (lateral("das")?, lateral("mv")?, lateral("proposed")?);
    Ok((
        mv <= 0.85 * das && net <= das,
        format!(
            "lateral FWHM DAS {das:.3} mm, MV {mv:.3} mm (<= {:.3}), network x5 {net:.3} mm (<= DAS)",
            0.85 * das
        ),
    ))
}

fn toy_training(run: &ToyRun) -> Verdict {
    let cyst_ssim = row(&run.cyst, "proposed")?.ssim_vs_mv.context("cyst SSIM")?;
    let point_ssim = row(&run.points, "proposed")?.ssim_vs_mv;
    let pass = run.frames >= 10
        && run.epochs <= 50
        && run.train_secs <= 1800.0
        && run.best_val <= 0.5 * run.first_val
        && cyst_ssim >= 0.7;
    Ok((
        pass,
        format!(
            "{} frames, {} epochs in {:.0} s (<= 1800 s), val SMSLE {:.4} -> best {:.4} (<= {:.4}), \
             held-out speckle SSIM {cyst_ssim:.3} (>= 0.7), held-out point-grid SSIM {}",
            run.frames,
            run.epochs,
            run.train_secs,
            run.first_val,
            run.best_val,
            0.5 * run.first_val,
            point_ssim.map_or("undefined".into(), |s| format!("{s:.3}")),
        ),
    ))
}

fn contrast(run: &ToyRun) -> Verdict {
    let c = |m: &str| -> Result<f64> { row(&run.cyst, m)?.cnr.with_context(|| format!("{m} CNR")) };
    let (das, mv, net) = (c("das")?, c("mv")?, c("proposed")?);
    Ok((
        das > 1.5 && (net - mv).abs() <= 0.3 * mv,
        format!(
            "CNR DAS {das:.3} (> 1.5), MV {mv:.3}, network x5 {net:.3} (within [{:.3}, {:.3}])",
            0.7 * mv,
            1.3 * mv
        ),
    ))
}

fn gradient_integrity() -> Verdict {
    let t0 = Instant::now();
    let layers = gradcheck::layer_checks(11);
    let worst = layers
        .iter()
        .cloned()
        .fold(("", 0.0), |a, b| if b.1 > a.1 { b } else { a });
    let net = gradcheck::network_check(true, 12).max(gradcheck::network_check(false, 13));
    let secs = t0.elapsed().as_secs_f64();
    Ok((
        worst.1 < 1e-6 && net < 1e-5 && secs < 60.0,
        format!(
            "worst layer {} {:.2e} (< 1e-6), network {net:.2e} (< 1e-5), {secs:.1} s",
            worst.0, worst.1
        ),
    ))
}

/// Uniform draws from a fixed 64-bit LCG.
fn lcg(seed: u64, n: usize) -> Vec<f64> {
    let mut s = seed;
    (0..n)
        .map(|_| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

fn metric_units() -> Verdict {
    let mut failures = Vec::new();
    let mut expect = |ok: bool, what: &str| {
        if !ok {
            failures.push(what.to_string());
        }
    };

    let mut rect = vec![0.0; 30];
    rect[10..17].fill(1.0);
    expect((fwhm(&rect, 0.25)? - 7.0 * 0.25).abs() < 1e-12, "rectangle FWHM");
    expect((fwhm(&[0.0, 1.0, 0.0], 1.0)? - 1.0).abs() < 1e-12, "triangle FWHM");
    let sigma = 4.1;
    let gauss: Vec<f64> = (-1500..=1500)
        .map(|i| (-(i as f64 * 0.02).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    expect(
        (fwhm(&gauss, 0.02)? / (2.355 * sigma) - 1.0).abs() < 0.01,
        "Gaussian FWHM",
    );
    expect(fwhm(&[1.0, 0.6, 0.2], 1.0).is_err(), "FWHM with the peak at the edge");

    let bg: Vec<f64> = (0..50).map(|i| if i % 2 == 0 { 0.0 } else { 2.0 }).collect();
    expect((cnr_values(&[3.0; 8], &bg)? - 2.0).abs() < 1e-12, "CNR arithmetic");
    expect(cnr_values(&[1.0; 8], &bg)? == 0.0, "CNR of equal means");
    expect(cnr_values(&[1.0], &[4.0; 6]).is_err(), "CNR of a flat background");
    let w = 48;
    let noise = lcg(3, w * w);
    let img: Vec<f64> = (0..w * w)
        .map(|k| {
            let (r, c) = ((k / w) as f64, (k % w) as f64);
            (if (r - 24.0).hypot(c - 24.0) < 7.0 { 0.1 } else { 0.6 }) + 0.2 * noise[k]
        })
        .collect();
    let raster = |data: Vec<f64>| Raster {
        width: w,
        height: w,
        x0: 0.0,
        dx: 1.0,
        z0: 0.0,
        dz: 1.0,
        data,
    };
    let cyst = RegionSpec::Disk {
        row: 24.0,
        col: 24.0,
        radius: 5.0,
    };
    let ring = RegionSpec::SectorRect {
        r_min: 42.0,
        r_max: 60.0,
        theta_min: 0.2,
        theta_max: 1.3,
    };
    let base = cnr(&raster(img.clone()), &cyst, &ring)?;
    let mapped = cnr(&raster(img.iter().map(|v| -2.5 * v + 7.0).collect()), &cyst, &ring)?;
    expect((base - mapped).abs() <= 1e-9 * base, "CNR affine invariance");

    let (iw, ih) = (40, 24);
    let x = lcg(5, iw * ih);
    let y = lcg(6, iw * ih);
    expect(ssim(&x, &x, iw, ih, SsimWindow::default())? == 1.0, "SSIM identity");
    let a = ssim_with_range(&x, &y, iw, ih, 1.0, SsimWindow::default())?;
    let b = ssim_with_range(&y, &x, iw, ih, 1.0, SsimWindow::default())?;
    expect((a - b).abs() < 1e-14, "SSIM symmetry");
    let smooth: Vec<f64> = (0..64 * 64)
        .map(|k| 0.5 + 0.4 * ((k % 64) as f64 * 0.2).sin() * ((k / 64) as f64 * 0.15).cos())
        .collect();
    let amp = 0.01 * 3f64.sqrt();
    let noisy: Vec<f64> = smooth
        .iter()
        .zip(lcg(7, smooth.len()))
        .map(|(v, u)| v + amp * (2.0 * u - 1.0))
        .collect();
    let s = ssim(&noisy, &smooth, 64, 64, SsimWindow::default())?;
    expect(s > 0.9 && s < 1.0, "SSIM at 40 dB PSNR");
    expect(
        ssim(&x, &y[..10], iw, ih, SsimWindow::default()).is_err(),
        "SSIM shape mismatch",
    );

    let r = [1.0, -2.0, 3.0];
    expect(nrmse(&r, &r)? == 0.0, "NRMSE of the reference");
    expect(nrmse(&[0.0; 3], &r)? == 1.0, "NRMSE of zeros");
    expect(nrmse(&[2.0, -4.0, 6.0], &r)? == 1.0, "NRMSE of twice the reference");
    expect(nrmse(&r, &[0.0; 3]).is_err(), "NRMSE of a zero reference");

    Ok((
        failures.is_empty(),
        match failures.is_empty() {
            true => format!("all metric checks hold (40 dB SSIM {s:.4})"),
            false => format!("failed: {}", failures.join(", ")),
        },
    ))
}

const SMALL: &str = r#"{
  "geometry": {"elements": 8},
  "acquisition": {"samples": 256, "angle_count": 11, "half_span_deg": 10},
  "phantom": {"kind": "point-grid", "depths_mm": [6, 12], "angles_deg": [-4, 4], "amplitude": 1},
  "mv": {"window": 5},
  "network": {"widths": [2, 2, 4], "bottleneck": 4},
  "training": {"epochs": 3, "batch_size": 4, "lr": 0.001}
}"#;

fn cli(dir: &Path, args: &[&str]) -> Result<()> {
    let out = Command::new(env!("CARGO_BIN_EXE_snb"))
        .args(args)
        .current_dir(dir)
        .env("SNB_THREADS", "0")
        .env("RUST_LOG", "warn")
        .output()?;
    ensure!(
        out.status.success(),
        "snb {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    Ok(())
}

const PIPELINE: [&str; 6] = ["frame", "frame2", "dataset", "checkpoint", "prediction", "evaluation"];

fn cli_pipeline(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("small.json"), SMALL)?;
    cli(
        dir,
        &["simulate", "--config", "small.json", "--seed", "3", "--out", "frame"],
    )?;
    cli(
        dir,
        &["simulate", "--config", "small.json", "--seed", "4", "--out", "frame2"],
    )?;
    cli(
        dir,
        &[
            "make-dataset",
            "--frame",
            "frame",
            "--frame",
            "frame2",
            "--scheme",
            "x5",
            "--out",
            "dataset",
        ],
    )?;
    cli(
        dir,
        &["train", "--dataset", "dataset", "--seed", "2", "--out", "checkpoint"],
    )?;
    cli(
        dir,
        &[
            "predict",
            "--frame",
            "frame2",
            "--checkpoint",
            "checkpoint",
            "--out",
            "prediction",
        ],
    )?;
    cli(
        dir,
        &[
            "evaluate",
            "--frame",
            "frame2",
            "--checkpoint",
            "checkpoint",
            "--dataset",
            "dataset",
            "--out",
            "evaluation",
        ],
    )
}

fn determinism(root: &Path) -> Verdict {
    let (a, b) = (root.join("run_a"), root.join("run_b"));
    cli_pipeline(&a)?;
    cli_pipeline(&b)?;
    let (mut same, mut differ, mut timing) = (0, Vec::new(), 0);
    for stage in PIPELINE {
        let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join(stage).join(MANIFEST_FILE))?)?;
        let timing_files: Vec<String> = manifest["timing_outputs"]
            .as_array()
            .map(|v| v.iter().filter_map(|s| s.as_str().map(String::from)).collect())
            .unwrap_or_default();
        let mut names: Vec<String> = std::fs::read_dir(a.join(stage))?
            .map(|e| Ok(e?.file_name().to_string_lossy().into_owned()))
            .collect::<Result<_>>()?;
        names.sort();
        for name in names {
            if timing_files.contains(&name) {
                timing += 1;
                continue;
            }
            let (x, y) = (
                std::fs::read(a.join(stage).join(&name))?,
                std::fs::read(b.join(stage).join(&name)).ok(),
            );
            match y {
                Some(y) if y == x => same += 1,
                _ => differ.push(format!("{stage}/{name}")),
            }
        }
    }
    Ok((
        differ.is_empty() && same > 0,
        match differ.is_empty() {
            true => format!("{same} files byte-identical across two runs ({timing} wall-clock files skipped)"),
            false => format!("differing: {}", differ.join(", ")),
        },
    ))
}

fn report_schema(root: &Path) -> Verdict {
    let eval = root.join("run_a").join("evaluation");
    Artifact::open(&eval, "evaluate")?;
    let mut reader = csv::Reader::from_path(eval.join("metrics.csv"))?;
    let rows: Vec<(String, String)> = reader
        .records()
        .map(|r| Ok(r.map(|r| (r[0].to_string(), r[1].to_string()))?))
        .collect::<Result<_>>()?;
    let expected: Vec<(String, String)> = REPORT_ROWS
        .iter()
        .map(|(m, s)| (m.to_string(), s.to_string()))
        .collect();
    let nesta = rows.iter().any(|(m, _)| m.to_ascii_lowercase().contains("nesta"));
    Ok((
        rows == expected && !nesta,
        format!(
            "rows {}; compressed-sensing rows absent",
            rows.iter()
                .map(|(m, s)| format!("{m}/{s}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    ))
}

fn main() {
    let _ = rayon::ThreadPoolBuilder::new().num_threads(1).build_global();
    let work = tempfile::tempdir().expect("temporary directory");
    let dir = work.path();
    let mut passed = 0;
    let mut line = |n: usize, name: &str, v: Verdict| {
        let (ok, detail) = v.unwrap_or_else(|e| (false, format!("error: {e:#}")));
        passed += ok as usize;
        println!("{} {n:>2} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    };

    let reference = reference_frame(dir);
    match &reference {
        Ok((frame, secs)) => {
            println!("     reference frame simulated in {secs:.1} s");
            line(1, "fd/time-domain equivalence", fd_equivalence(dir, frame));
        }
        Err(e) => line(1, "fd/time-domain equivalence", Err(anyhow::anyhow!("{e:#}"))),
    }
    line(2, "data-reduction accounting", reduction_accounting());
    match &reference {
        Ok((frame, _)) => line(3, "degradation ordering", degradation_ordering(frame)),
        Err(e) => line(3, "degradation ordering", Err(anyhow::anyhow!("{e:#}"))),
    }
    match toy_run(dir) {
        Ok(run) => {
            line(4, "resolution ordering", resolution_ordering(&run));
            line(5, "toy training", toy_training(&run));
            line(6, "contrast", contrast(&run));
        }
        Err(e) => {
            let msg = format!("{e:#}");
            line(4, "resolution ordering", Err(anyhow::anyhow!("{msg}")));
            line(5, "toy training", Err(anyhow::anyhow!("{msg}")));
            line(6, "contrast", Err(anyhow::anyhow!("{msg}")));
        }
    }
    line(7, "gradient integrity", gradient_integrity());
    line(8, "metric unit checks", metric_units());
    line(9, "determinism", determinism(dir));
    line(10, "report schema", report_schema(dir));
    println!("acceptance: {passed}/10 criteria passed");
}

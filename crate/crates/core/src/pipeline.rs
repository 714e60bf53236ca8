// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Seeded end-to-end experiments. Each pipeline builds its artifacts in
//! memory; [`write_run`] stores them and a `manifest.json` of SHA-256
//! hashes. Identical config and seed give byte-identical output.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::csde::{optimize, synthesize_waveform, MemoryProblem};
use crate::error::{Error, Result};
use crate::io::{
    density_csv, field_text, parse_quadratures, quadrature_csv, read_text, waveform_csv,
    write_file, Csv,
};
use crate::modes::{lg_field, lg_to_hg, petal_pattern, truncation_warning};
use crate::oam::{
    decode_charge, memory_time, petal_spectrum, time_bandwidth_product, OamDecayModel, OamSpectrum,
};
use crate::plant::{impedance_matched_control, memory_efficiency};
use crate::residual_net::{forward, gen_training_data, train_adam, MlpParams, TrainingSet};
use crate::rng::substream;
use crate::tomography::{
    analyzer_curve, cardinal_states, mle_reconstruct, sam_qst, simulate_homodyne, total_fidelity,
    uhlmann_fidelity, visibility, DensityMatrix, PolarizationCounts, NO_CLONING_LIMIT,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pipeline {
    Optimize,
    ChargeSweep,
    OamDecay,
    SamQst,
    Tomo,
    GenData,
    TrainNet,
    Modes,
}

impl Pipeline {
    pub const ALL: [Pipeline; 8] = [
        Pipeline::Optimize,
        Pipeline::ChargeSweep,
        Pipeline::OamDecay,
        Pipeline::SamQst,
        Pipeline::Tomo,
        Pipeline::GenData,
        Pipeline::TrainNet,
        Pipeline::Modes,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Pipeline::Optimize => "optimize",
            Pipeline::ChargeSweep => "charge-sweep",
            Pipeline::OamDecay => "oam-decay",
            Pipeline::SamQst => "sam-qst",
            Pipeline::Tomo => "tomo",
            Pipeline::GenData => "gen-data",
            Pipeline::TrainNet => "train-net",
            Pipeline::Modes => "modes",
        }
    }
}

impl fmt::Display for Pipeline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pipeline {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown pipeline `{s}`")))
    }
}

/// Artifacts of one pipeline run, keyed by relative path.
#[derive(Debug, Clone, Default)]
pub struct Run {
    pub files: BTreeMap<String, Vec<u8>>,
    /// Headline numbers, also written to `summary.csv`.
    pub summary: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

impl Run {
    fn file(&mut self, path: impl Into<String>, text: String) {
        self.files.insert(path.into(), text.into_bytes());
    }

    fn note(&mut self, key: &str, value: impl fmt::Display) {
        self.summary.push((key.to_string(), value.to_string()));
    }
}

#[derive(Serialize)]
struct ManifestEntry<'a> {
    path: &'a str,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    pipeline: &'a str,
    seed: u64,
    files: Vec<ManifestEntry<'a>>,
}

pub fn manifest_json(pipeline: Pipeline, seed: u64, run: &Run) -> String {
    let files = run
        .files
        .iter()
        .map(|(path, bytes)| ManifestEntry {
            path,
            bytes: bytes.len(),
            sha256: hex::encode(Sha256::digest(bytes)),
        })
        .collect();
    let m = Manifest {
        tool: "ramopt",
        version: crate::VERSION,
        pipeline: pipeline.name(),
        seed,
        files,
    };
    serde_json::to_string_pretty(&m).expect("manifest serializes") + "\n"
}

/// Writes every artifact plus `manifest.json` under `out_dir`.
pub fn write_run(out_dir: &Path, pipeline: Pipeline, seed: u64, run: &Run) -> Result<()> {
    for (path, bytes) in &run.files {
        write_file(&out_dir.join(path), bytes)?;
    }
    write_file(
        &out_dir.join("manifest.json"),
        manifest_json(pipeline, seed, run).as_bytes(),
    )
}

pub fn run_pipeline(cfg: &ExperimentConfig, pipeline: Pipeline) -> Result<Run> {
    let mut run = match pipeline {
        Pipeline::Optimize => run_optimize(cfg)?,
        Pipeline::ChargeSweep => run_charge_sweep(cfg)?,
        Pipeline::OamDecay => run_oam_decay(cfg)?,
        Pipeline::SamQst => run_sam_qst(cfg)?,
        Pipeline::Tomo => run_tomo(cfg)?,
        Pipeline::GenData => run_gen_data(cfg)?,
        Pipeline::TrainNet => run_train_net(cfg)?,
        Pipeline::Modes => run_modes(cfg)?,
    };
    let mut csv = Csv::new(cfg.seed, &["quantity", "value"]);
    for (k, v) in &run.summary {
        csv.row([k, v]);
    }
    run.file("summary.csv", csv.into_string());
    Ok(run)
}

fn load_net(cfg: &ExperimentConfig) -> Result<Option<MlpParams>> {
    match &cfg.net.model_path {
        None => Ok(None),
        Some(path) => Ok(Some(MlpParams::from_json(&read_text(path)?)?)),
    }
}

fn run_optimize(cfg: &ExperimentConfig) -> Result<Run> {
    let grid = cfg.write_grid()?;
    let plant = cfg.plant_params()?;
    let signal = cfg.signal()?;
    let net = load_net(cfg)?;
    let problem = MemoryProblem {
        grid,
        plant: &plant,
        signal: &signal,
        net: net.as_ref(),
        charge: 0,
    };
    let (best, trace) = optimize(&cfg.de, &problem, cfg.seed)?;
    let mut run = Run::default();
    let mut csv = Csv::new(cfg.seed, &["generation", "best_eta", "mean_eta"]);
    for r in &trace.records {
        csv.row([
            r.generation.to_string(),
            r.best.to_string(),
            r.mean.to_string(),
        ]);
    }
    run.file("trace.csv", csv.into_string());
    let control = synthesize_waveform(&best, &grid, net.as_ref())?;
    run.file("control.csv", waveform_csv(&control, cfg.seed));
    let matched = impedance_matched_control(&signal, &plant)?;
    let matched_eta = memory_efficiency(&signal, &matched, &plant, 0)?.eta_m;
    run.note("final_best_eta", trace.final_best().unwrap_or(f64::NAN));
    run.note("generations", trace.records.len() - 1);
    run.note("matched_control_eta", matched_eta);
    run.note("net", if net.is_some() { "on" } else { "off" });
    Ok(run)
}

fn run_charge_sweep(cfg: &ExperimentConfig) -> Result<Run> {
    let grid = cfg.write_grid()?;
    let plant = cfg.plant_params()?;
    let signal = cfg.signal()?;
    let net = load_net(cfg)?;
    let mut csv = Csv::new(cfg.seed, &["l", "eta_m", "eta_w", "eta_r"]);
    let mut etas = Vec::new();
    for l in -5..=5 {
        let problem = MemoryProblem {
            grid,
            plant: &plant,
            signal: &signal,
            net: net.as_ref(),
            charge: l,
        };
        let (best, _) = optimize(&cfg.de, &problem, cfg.seed)?;
        let control = synthesize_waveform(&best, &grid, net.as_ref())?;
        let out = memory_efficiency(&signal, &control, &plant, l)?;
        csv.row([
            l.to_string(),
            out.eta_m.to_string(),
            out.eta_w.to_string(),
            out.eta_r.to_string(),
        ]);
        etas.push((l, out.eta_m));
    }
    let mut run = Run::default();
    run.file("charge_sweep.csv", csv.into_string());
    let monotone = etas.iter().all(|(l, e)| {
        etas.iter()
            .filter(|(m, _)| m.unsigned_abs() > l.unsigned_abs())
            .all(|(_, f)| f <= e)
    });
    run.note("eta_l0", etas[5].1);
    run.note("eta_l5", etas[10].1);
    run.note("monotone_in_abs_l", monotone);
    if !monotone {
        run.warnings
            .push("efficiency is not monotone in |l|".into());
    }
    Ok(run)
}

fn spectrum_csv(s: &OamSpectrum, seed: u64) -> String {
    let mut csv = Csv::new(seed, &["l", "power"]);
    for (l, p) in s.power.iter().enumerate() {
        csv.row([l.to_string(), p.to_string()]);
    }
    csv.into_string()
}

fn calibrated_model(cfg: &ExperimentConfig) -> Result<OamDecayModel> {
    let model = cfg.decay_model();
    if !cfg.analysis.calibrate {
        return Ok(model);
    }
    let a = &cfg.analysis;
    model.calibrate_diffusion(
        a.calibration_charge,
        a.calibration_tau_us,
        a.threshold,
        &cfg.spatial_grid()?,
    )
}

fn run_oam_decay(cfg: &ExperimentConfig) -> Result<Run> {
    let grid = cfg.spatial_grid()?;
    let model = calibrated_model(cfg)?;
    let taus = cfg.taus();
    let a = &cfg.analysis;
    struct ChargeResult {
        curve: Vec<(f64, f64)>,
        tau: Option<f64>,
        spectra: (OamSpectrum, OamSpectrum),
        shift: (f64, f64),
    }
    let charges: Vec<i32> = (1..=5).collect();
    let results: Vec<ChargeResult> = charges
        .par_iter()
        .map(|&l| {
            let curve = model.curve(l, &taus, &grid)?;
            Ok(ChargeResult {
                tau: memory_time(&curve, a.threshold)?,
                curve,
                spectra: model.spectra(l, a.report_tau_us, &grid)?,
                shift: model.shift(l, a.report_tau_us, &grid)?,
            })
        })
        .collect::<Result<_>>()?;

    let mut run = Run::default();
    run.note("diffusion_mm2_per_us", model.diffusion);
    let mut times = Csv::new(cfg.seed, &["l", "tau_us", "time_bandwidth"]);
    let mut shifts = Csv::new(cfg.seed, &["l", "raw_rad", "corrected_rad"]);
    for (l, r) in charges.iter().zip(&results) {
        let mut csv = Csv::new(cfg.seed, &["tau_us", "F"]);
        for (t, f) in &r.curve {
            csv.row([t, f]);
        }
        run.file(format!("fidelity_l{l}.csv"), csv.into_string());
        run.file(
            format!("spectrum_l{l}_in.csv"),
            spectrum_csv(&r.spectra.0, cfg.seed),
        );
        run.file(
            format!("spectrum_l{l}_out.csv"),
            spectrum_csv(&r.spectra.1, cfg.seed),
        );
        let tau = r.tau.unwrap_or(f64::NAN);
        let tbp = time_bandwidth_product(tau, a.bandwidth_mhz);
        times.row([l.to_string(), tau.to_string(), tbp.to_string()]);
        shifts.row([l.to_string(), r.shift.0.to_string(), r.shift.1.to_string()]);
        run.note(&format!("memory_time_l{l}_us"), tau);
        run.note(&format!("time_bandwidth_l{l}"), tbp);
        run.note(
            &format!("f_oam_l{l}_at_report_tau"),
            crate::oam::oam_fidelity(&r.spectra.0, &r.spectra.1)?,
        );
    }
    run.file("memory_times.csv", times.into_string());
    run.file("azimuth_shift.csv", shifts.into_string());
    Ok(run)
}

struct SamTrial {
    label: &'static str,
    counts: PolarizationCounts,
    rho: DensityMatrix,
    fidelity: f64,
    clipped: bool,
}

/// Noisy six-projection counts for each cardinal state and their
/// reconstruction fidelities.
fn sam_trials(cfg: &ExperimentConfig) -> Result<Vec<SamTrial>> {
    let mut rng = substream(cfg.seed, "sam");
    let noise = cfg.tomography.sam_noise;
    let mut out = Vec::new();
    for (label, ch, cv) in cardinal_states() {
        let ideal = PolarizationCounts::from_state(ch, cv).as_array();
        let mut noisy = [0.0; 6];
        for (n, i) in noisy.iter_mut().zip(ideal) {
            let z: f64 = StandardNormal.sample(&mut rng);
            *n = (i * (1.0 + noise * z)).max(0.0);
        }
        let counts = PolarizationCounts::from_array(noisy);
        let r = sam_qst(&counts)?;
        let truth = DensityMatrix::pure(&[ch, cv])?;
        let f = uhlmann_fidelity(&truth, &r.rho)?;
        out.push(SamTrial {
            label,
            counts,
            rho: r.rho,
            fidelity: f,
            clipped: r.clipped,
        });
    }
    Ok(out)
}

fn run_sam_qst(cfg: &ExperimentConfig) -> Result<Run> {
    let trials = sam_trials(cfg)?;
    let mut run = Run::default();
    let mut counts_csv = Csv::new(cfg.seed, &["state", "H", "V", "D", "A", "R", "L"]);
    let mut fid_csv = Csv::new(cfg.seed, &["state", "fidelity", "clipped"]);
    for SamTrial {
        label,
        counts,
        rho,
        fidelity: f,
        clipped,
    } in &trials
    {
        let mut row = vec![label.to_string()];
        row.extend(counts.as_array().iter().map(f64::to_string));
        counts_csv.row(row);
        fid_csv.row([label.to_string(), f.to_string(), clipped.to_string()]);
        run.file(format!("rho_{label}.csv"), density_csv(rho, cfg.seed));
        if let Some(w) = counts.conservation_warning() {
            run.warnings.push(format!("{label}: {w}"));
        }
    }
    run.file("sam_counts.csv", counts_csv.into_string());
    run.file("sam_fidelity.csv", fid_csv.into_string());
    let curve = analyzer_curve(cfg.tomography.crosstalk, 360)?;
    let mut csv = Csv::new(cfg.seed, &["angle_rad", "intensity"]);
    for (a, i) in &curve {
        csv.row([a, i]);
    }
    run.file("analyzer.csv", csv.into_string());
    let mean = trials.iter().map(|t| t.fidelity).sum::<f64>() / trials.len() as f64;
    run.note("f_sam_mean", mean);
    run.note("visibility", visibility(&curve)?);
    Ok(run)
}

fn run_tomo(cfg: &ExperimentConfig) -> Result<Run> {
    let t = &cfg.tomography;
    let mut run = Run::default();
    let alpha = Complex64::from_polar(t.mean_photons.sqrt(), t.phase);
    let samples = match &t.quadrature_path {
        Some(path) => parse_quadratures(&read_text(path)?)?,
        None => {
            let s = simulate_homodyne(alpha, t.n_samples, t.efficiency, cfg.seed)?;
            run.file("quadratures.csv", quadrature_csv(&s, cfg.seed));
            s
        }
    };
    let result = mle_reconstruct(&samples, &cfg.mle())?;
    run.file("rho.csv", density_csv(&result.rho, cfg.seed));
    let mut ll = Csv::new(cfg.seed, &["iteration", "log_likelihood"]);
    for (i, v) in result.log_likelihood.iter().enumerate() {
        ll.row([i.to_string(), v.to_string()]);
    }
    run.file("likelihood.csv", ll.into_string());
    run.warnings.extend(result.warnings.iter().cloned());

    let truth = DensityMatrix::coherent(alpha * t.efficiency.sqrt(), t.n_max)?;
    let f_smg = uhlmann_fidelity(&truth, &result.rho)?;
    let model = calibrated_model(cfg)?;
    let f_oam = model.fidelity(
        cfg.modes.charge,
        cfg.analysis.report_tau_us,
        &cfg.spatial_grid()?,
    )?;
    let trials = sam_trials(cfg)?;
    let f_sam = trials.iter().map(|t| t.fidelity).sum::<f64>() / trials.len() as f64;
    let total = total_fidelity(f_smg, f_oam, f_sam)?;
    run.note("f_smg", f_smg);
    run.note("f_oam", f_oam);
    run.note("f_sam", f_sam);
    run.note("total_fidelity", total);
    run.note("above_no_cloning_limit", total > NO_CLONING_LIMIT);
    run.note(
        "log_likelihood_monotone",
        result.log_likelihood.windows(2).all(|w| w[1] >= w[0]),
    );
    Ok(run)
}

fn training_csv(data: &TrainingSet, seed: u64) -> String {
    let n_in = data.inputs.first().map_or(0, Vec::len);
    let n_out = data.targets.first().map_or(0, Vec::len);
    let columns: Vec<String> = (0..n_in)
        .map(|i| format!("x{i}"))
        .chain((0..n_out).map(|i| format!("y{i}")))
        .collect();
    let refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut csv = Csv::new(seed, &refs);
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        csv.row(x.iter().chain(y));
    }
    csv.into_string()
}

fn training_data(cfg: &ExperimentConfig, n: usize) -> Result<TrainingSet> {
    gen_training_data(
        n,
        cfg.de.n_nodes,
        cfg.plant.omega_max,
        &cfg.write_grid()?,
        &cfg.net.distortion,
        cfg.seed,
    )
}

fn run_gen_data(cfg: &ExperimentConfig) -> Result<Run> {
    let data = training_data(cfg, cfg.net.n_train)?;
    let mut run = Run::default();
    run.file("training_set.csv", training_csv(&data, cfg.seed));
    run.note("samples", data.len());
    Ok(run)
}

fn rms(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v * v, n + 1));
    (sum / n.max(1) as f64).sqrt()
}

/// RMS waveform error on `data` without the net and with it.
pub fn heldout_errors(params: &MlpParams, data: &TrainingSet) -> Result<(f64, f64)> {
    let spline = rms(data.targets.iter().flatten().copied());
    let mut residuals = Vec::with_capacity(data.len() * params.output_len());
    for (x, y) in data.inputs.iter().zip(&data.targets) {
        let pred = forward(params, x)?;
        residuals.extend(y.iter().zip(&pred).map(|(t, p)| t - p));
    }
    Ok((spline, rms(residuals.into_iter())))
}

fn run_train_net(cfg: &ExperimentConfig) -> Result<Run> {
    let n = &cfg.net;
    let all = training_data(cfg, n.n_train + n.n_heldout)?;
    let split = |range: std::ops::Range<usize>| TrainingSet {
        inputs: all.inputs[range.clone()].to_vec(),
        targets: all.targets[range].to_vec(),
    };
    let train = split(0..n.n_train);
    let heldout = split(n.n_train..n.n_train + n.n_heldout);
    let trained = train_adam(&train, &n.adam, cfg.seed)?;
    let mut run = Run::default();
    run.file("model.json", trained.params.to_json()? + "\n");
    let mut csv = Csv::new(cfg.seed, &["epoch", "mse"]);
    csv.row(["0".to_string(), trained.initial_loss.to_string()]);
    for (e, l) in trained.loss_history.iter().enumerate() {
        csv.row([(e + 1).to_string(), l.to_string()]);
    }
    run.file("loss.csv", csv.into_string());
    let (spline, net) = heldout_errors(&trained.params, &heldout)?;
    run.note("heldout_rms_spline", spline);
    run.note("heldout_rms_net", net);
    run.note("heldout_reduction", 1.0 - net / spline);
    Ok(run)
}

fn pgm(image: &crate::image::Image) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    image.write_pgm16(&mut bytes)?;
    Ok(bytes)
}

fn run_modes(cfg: &ExperimentConfig) -> Result<Run> {
    let grid = cfg.spatial_grid()?;
    let m = &cfg.modes;
    let l = m.charge;
    let mut run = Run::default();
    let lg = lg_field(l, m.w0, &grid)?;
    run.warnings.extend(truncation_warning(&lg));
    run.files
        .insert(format!("lg_l{l}.pgm"), pgm(&lg.intensity())?);
    run.file(format!("lg_l{l}.field"), field_text(&lg));
    let petal = petal_pattern(l, m.w0, &grid, m.rotation)?;
    run.files.insert(format!("petal_l{l}.pgm"), pgm(&petal)?);
    let hg = lg_to_hg(l, m.w0, &grid)?;
    let mut csv = Csv::new(cfg.seed, &["m", "n", "re", "im"]);
    for ((i, j), c) in &hg.coefficients {
        csv.row([
            i.to_string(),
            j.to_string(),
            c.re.to_string(),
            c.im.to_string(),
        ]);
    }
    run.file(format!("hg_l{l}.csv"), csv.into_string());
    let l_max = cfg.analysis.l_max.max(l.unsigned_abs() as usize);
    let spectrum = petal_spectrum(&petal, l, m.w0, &grid, cfg.analysis.n_angles, l_max)?;
    run.file("petal_spectrum.csv", spectrum_csv(&spectrum, cfg.seed));
    run.note("hg_completeness", hg.completeness);
    run.note(
        "decoded_charge",
        decode_charge(&petal, m.w0, &grid, cfg.analysis.n_angles, l_max)?,
    );
    Ok(run)
}

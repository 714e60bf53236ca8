// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! End-to-end acceptance checks. Runs without the libtest harness and
//! prints one `criterion N: PASS|FAIL <detail>` line per check.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use ramopt::config::ExperimentConfig;
use ramopt::csde::{optimize, run_de, DeConfig, MemoryProblem};
use ramopt::image::Image;
use ramopt::modes::{lg_field, lg_to_hg, petal_pattern, SpatialGrid};
use ramopt::oam::{
    azimuth_shift, circular_sample, decode_charge, memory_time, oam_fidelity, oam_power_spectrum,
    time_bandwidth_product,
};
use ramopt::pipeline::{run_pipeline, Pipeline};
use ramopt::plant::{impedance_matched_control, simulate_write, SignalEnvelope};
use ramopt::residual_net::{loss_and_gradient, MlpParams, TrainingSet};
use ramopt::rng::substream;
use ramopt::tomography::{
    cardinal_states, mle_reconstruct, sam_qst, simulate_homodyne, total_fidelity, uhlmann_fidelity,
    DensityMatrix, PolarizationCounts,
};
use ramopt::waveforms::{spline_interpolate, ChebyshevGenotype};
use rand::Rng;
use rand_distr::{Distribution, Normal};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fail(e: impl std::fmt::Display) -> String {
    format!("error: {e}")
}

fn passivity() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.plant.gamma_s = 0.0;
    let mut plant = cfg.plant_params().map_err(fail)?;
    plant.omega_max = 3.0;
    let grid = cfg.write_grid().map_err(fail)?;
    let mut rng = substream(cfg.seed, "acceptance.passivity");
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let center = rng.random_range(70.0..130.0);
        let fwhm = rng.random_range(10.0..30.0);
        let phase = rng.random_range(0.0..2.0 * PI);
        let base = SignalEnvelope::gaussian(grid, center, fwhm).map_err(fail)?;
        let rotated = base
            .values()
            .iter()
            .map(|v| v * Complex64::from_polar(1.0, phase))
            .collect();
        let signal = SignalEnvelope::new(grid, rotated).map_err(fail)?;
        let nodes = (0..10)
            .map(|_| rng.random_range(0.0..=plant.omega_max))
            .collect();
        let genotype = ChebyshevGenotype::new(nodes, plant.omega_max).map_err(fail)?;
        let control = spline_interpolate(&genotype, &grid).map_err(fail)?;
        let w = simulate_write(&signal, &control, &plant, 0).map_err(fail)?;
        let e_in = w.input_energy;
        let balance = w.spin_final.norm_sqr() + w.leak_energy;
        worst = worst.max((balance - e_in).abs() / e_in);
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-6 && elapsed < Duration::from_secs(10),
        format!("max relative imbalance {worst:.2e} over 100 pairs in {elapsed:.2?}"),
    )
}

fn analytic_optimum() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::default();
    cfg.plant.gamma_s = 0.0;
    cfg.plant.omega_max = 10.0;
    cfg.de.max_generations = 300;
    cfg.de.population_size = 40;
    let plant = cfg.plant_params().map_err(fail)?;
    let signal = cfg.signal().map_err(fail)?;
    let problem = MemoryProblem {
        grid: cfg.write_grid().map_err(fail)?,
        plant: &plant,
        signal: &signal,
        net: None,
        charge: 0,
    };
    let (_, trace) = optimize(&cfg.de, &problem, cfg.seed).map_err(fail)?;
    let eta = trace.final_best().unwrap_or(f64::NAN);
    let mut free = plant.clone();
    free.omega_max = f64::INFINITY;
    let matched = impedance_matched_control(&signal, &free).map_err(fail)?;
    let eta_matched = ramopt::plant::memory_efficiency(&signal, &matched, &free, 0)
        .map_err(fail)?
        .eta_m;
    let best = trace.best_fitness();
    let monotone = best.windows(2).all(|w| w[1] >= w[0]);
    let gap = (eta - eta_matched).abs() / eta_matched;
    let elapsed = start.elapsed();
    check(
        eta >= 0.98 && gap <= 0.02 && monotone && elapsed < Duration::from_secs(120),
        format!(
            "eta {eta:.4} vs matched {eta_matched:.4} (gap {:.2}%), {} generations, monotone {monotone}, {elapsed:.2?}",
            100.0 * gap,
            best.len() - 1
        ),
    )
}

fn summary_value(run: &ramopt::pipeline::Run, key: &str) -> Result<f64, String> {
    run.summary
        .iter()
        .find(|(k, _)| k == key)
        .ok_or_else(|| format!("summary lacks {key}"))?
        .1
        .parse()
        .map_err(fail)
}

fn calibrated_plateau() -> Outcome {
    let cfg = ExperimentConfig::load(Path::new(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../configs/default.json"
    )))
    .map_err(fail)?;
    let run = run_pipeline(&cfg, Pipeline::Optimize).map_err(fail)?;
    let eta = summary_value(&run, "final_best_eta")?;
    check(
        (eta - 0.92).abs() <= 0.02,
        format!("final best eta {eta:.4} (target 0.92 +/- 0.02)"),
    )
}

fn sphere() -> Outcome {
    let cfg = DeConfig {
        max_generations: 500,
        patience: 0,
        n_nodes: 10,
        ..DeConfig::default()
    };
    let objective = |g: &ChebyshevGenotype| -> ramopt::Result<f64> {
        Ok(-g
            .node_values()
            .iter()
            .map(|x| (x - 0.5).powi(2))
            .sum::<f64>())
    };
    let mut worst = 0.0f64;
    let mut hits = 0;
    for seed in 0..10 {
        let (_, trace) = run_de(&cfg, 1.0, seed, &objective).map_err(fail)?;
        let gap = -trace.final_best().unwrap_or(f64::NEG_INFINITY);
        worst = worst.max(gap);
        if gap <= 1e-3 {
            hits += 1;
        }
    }
    check(
        hits == 10,
        format!("{hits}/10 seeds within 1e-3, worst gap {worst:.2e}"),
    )
}

fn coordinate(p: &mut MlpParams, is_bias: bool, layer: usize, j: usize) -> &mut f64 {
    if is_bias {
        &mut p.biases[layer][j]
    } else {
        &mut p.weights[layer][j]
    }
}

fn net_gradients() -> Outcome {
    let layout = MlpParams::default_layout(20, 200);
    let mut worst = 0.0f64;
    for seed in 0..5u64 {
        let params = MlpParams::glorot(&layout, seed).map_err(fail)?;
        let mut rng = substream(seed, "acceptance.gradient");
        let data = TrainingSet {
            inputs: (0..4)
                .map(|_| (0..20).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect(),
            targets: (0..4)
                .map(|_| (0..200).map(|_| rng.random_range(-0.1..0.1)).collect())
                .collect(),
        };
        let batch = [0, 1, 2, 3];
        let (_, grads) = loss_and_gradient(&params, &data, &batch);
        // A sample of coordinates from every weight and bias block.
        for layer in 0..params.weights.len() {
            for (is_bias, len) in [
                (false, params.weights[layer].len()),
                (true, params.biases[layer].len()),
            ] {
                for _ in 0..20 {
                    let j = rng.random_range(0..len);
                    let h = 1e-6;
                    let mut probe = params.clone();
                    let x0 = *coordinate(&mut probe, is_bias, layer, j);
                    *coordinate(&mut probe, is_bias, layer, j) = x0 + h;
                    let up = loss_and_gradient(&probe, &data, &batch).0;
                    *coordinate(&mut probe, is_bias, layer, j) = x0 - h;
                    let down = loss_and_gradient(&probe, &data, &batch).0;
                    let numeric = (up - down) / (2.0 * h);
                    let analytic = if is_bias {
                        grads.biases[layer][j]
                    } else {
                        grads.weights[layer][j]
                    };
                    let scale = analytic.abs().max(numeric.abs()).max(1e-6);
                    worst = worst.max((analytic - numeric).abs() / scale);
                }
            }
        }
    }
    let cfg = ExperimentConfig::default();
    let run = run_pipeline(&cfg, Pipeline::TrainNet).map_err(fail)?;
    let reduction = summary_value(&run, "heldout_reduction")?;
    check(
        worst < 1e-4 && reduction >= 0.5,
        format!(
            "max gradient relative error {worst:.2e}; held-out RMS reduction {:.1}%",
            100.0 * reduction
        ),
    )
}

fn mode_math() -> Outcome {
    let grid = SpatialGrid::square(256, 3.0).map_err(fail)?;
    let fields = (-5..=5)
        .map(|l| lg_field(l, 0.5, &grid))
        .collect::<ramopt::Result<Vec<_>>>()
        .map_err(fail)?;
    let mut ortho = 0.0f64;
    for (i, a) in fields.iter().enumerate() {
        for (j, b) in fields.iter().enumerate() {
            let expect = if i == j { 1.0 } else { 0.0 };
            ortho = ortho.max((a.inner(b).map_err(fail)? - expect).norm());
        }
    }
    let mut completeness = 0.0f64;
    for l in -5..=5 {
        completeness =
            completeness.max((lg_to_hg(l, 0.5, &grid).map_err(fail)?.completeness - 1.0).abs());
    }
    let mut coeff = 0.0f64;
    for l in [1, -1] {
        let d = lg_to_hg(l, 0.5, &grid).map_err(fail)?;
        let c10 = d.get(1, 0).unwrap_or_default();
        let c01 = d.get(0, 1).unwrap_or_default();
        let want01 = Complex64::new(0.0, f64::from(l) * FRAC_1_SQRT_2);
        coeff = coeff
            .max((c10 - FRAC_1_SQRT_2).norm())
            .max((c01 - want01).norm());
    }
    check(
        ortho <= 1e-6 && completeness <= 1e-6 && coeff <= 1e-6,
        format!("orthonormality {ortho:.1e}, completeness {completeness:.1e}, l=1 coefficients {coeff:.1e}"),
    )
}

fn add_noise(image: &Image, level: f64, rng: &mut impl Rng) -> Image {
    let noise = Normal::new(0.0, level * image.max()).expect("positive sigma");
    let data = image.data.iter().map(|v| v + noise.sample(rng)).collect();
    Image::new(image.width, image.height, data).expect("same shape")
}

fn decode_loop() -> Outcome {
    let grid = SpatialGrid::square(128, 3.0).map_err(fail)?;
    let (w0, n_angles, l_max) = (0.5, 256, 5);
    let mut rng = substream(7, "acceptance.decode");
    let mut correct = 0;
    for trial in 0..50 {
        let mut ok = true;
        for l in 1..=5 {
            let rotation = rng.random_range(0.0..PI);
            let clean = petal_pattern(l, w0, &grid, rotation).map_err(fail)?;
            let noisy = add_noise(&clean, 0.01, &mut rng);
            ok &= decode_charge(&noisy, w0, &grid, n_angles, l_max).map_err(fail)? == l as usize;
        }
        if ok {
            correct += 1;
        } else {
            eprintln!("decode trial {trial} failed");
        }
    }
    let image = petal_pattern(3, w0, &grid, 0.0).map_err(fail)?;
    let ring = circular_sample(
        &image,
        image.center(),
        0.5 * 3f64.sqrt() / 2f64.sqrt() / grid.pitch(),
        n_angles,
    )
    .map_err(fail)?;
    let s = oam_power_spectrum(&ring, l_max).map_err(fail)?;
    let f_same = oam_fidelity(&s, &s).map_err(fail)?;

    let fine = SpatialGrid::square(256, 3.0).map_err(fail)?;
    let radius = 0.5 * FRAC_1_SQRT_2 / fine.pitch();
    let base = petal_pattern(1, w0, &fine, 0.0).map_err(fail)?;
    let ring_in = circular_sample(&base, base.center(), radius, 1024).map_err(fail)?;
    let mut worst = 0.0f64;
    for k in 0..10 {
        let theta = 0.05 + 0.05 * k as f64;
        let turned = petal_pattern(1, w0, &fine, theta).map_err(fail)?;
        let ring_r = circular_sample(&turned, turned.center(), radius, 1024).map_err(fail)?;
        worst = worst.max((azimuth_shift(&ring_in, &ring_r).map_err(fail)? - theta).abs());
    }
    check(
        correct == 50 && (f_same - 1.0).abs() <= 1e-9 && worst <= 2.0 * PI / 1024.0,
        format!("{correct}/50 trials decoded l=1..5; F(identical) - 1 = {:.1e}; worst shift error {worst:.2e} rad", f_same - 1.0),
    )
}

fn decay_shape() -> Outcome {
    let cfg = ExperimentConfig::default();
    let grid = cfg.spatial_grid().map_err(fail)?;
    let a = &cfg.analysis;
    let model = cfg
        .decay_model()
        .calibrate_diffusion(1, 1.2, a.threshold, &grid)
        .map_err(fail)?;
    let taus: Vec<f64> = (0..=300).map(|i| 0.01 * i as f64).collect();
    let mut crossing = BTreeMap::new();
    for l in [1, 4] {
        let curve = model.curve(l, &taus, &grid).map_err(fail)?;
        let tau = memory_time(&curve, a.threshold)
            .map_err(fail)?
            .ok_or_else(|| format!("l={l} never crosses {}", a.threshold))?;
        crossing.insert(l, tau);
    }
    let (t1, t4) = (crossing[&1], crossing[&4]);
    let (b1, b4) = (
        time_bandwidth_product(t1, a.bandwidth_mhz),
        time_bandwidth_product(t4, a.bandwidth_mhz),
    );
    let near = |x: f64, target: f64| (x - target).abs() <= 0.1 * target;
    check(
        t4 < t1 && near(b1, 60.0) && near(b4, 52.0),
        format!("tau(l=1) {t1:.3} us, tau(l=4) {t4:.3} us; TBP {b1:.1} and {b4:.1}"),
    )
}

fn tomography_loop() -> Outcome {
    let cfg = ExperimentConfig::default();
    let alpha = Complex64::from_polar(0.9f64.sqrt(), 0.0);
    let truth = DensityMatrix::coherent(alpha, cfg.tomography.n_max).map_err(fail)?;
    let mut good = 0;
    let mut monotone = true;
    let mut slowest = Duration::ZERO;
    let mut lowest = 1.0f64;
    for seed in 0..20 {
        let samples = simulate_homodyne(alpha, 5000, 1.0, seed).map_err(fail)?;
        let start = Instant::now();
        let result = mle_reconstruct(&samples, &cfg.mle()).map_err(fail)?;
        slowest = slowest.max(start.elapsed());
        monotone &= result.log_likelihood.windows(2).all(|w| w[1] >= w[0]);
        let f = uhlmann_fidelity(&result.rho, &truth).map_err(fail)?;
        lowest = lowest.min(f);
        if f >= 0.98 {
            good += 1;
        }
    }
    check(
        good >= 18 && monotone && slowest < Duration::from_secs(60),
        format!("{good}/20 seeds with F >= 0.98 (lowest {lowest:.4}); likelihood monotone {monotone}; slowest {slowest:.2?}"),
    )
}

fn sam_exactness() -> Outcome {
    let mut worst = 0.0f64;
    for (_, c_h, c_v) in cardinal_states() {
        let truth = DensityMatrix::pure(&[c_h, c_v]).map_err(fail)?;
        let result = sam_qst(&PolarizationCounts::from_state(c_h, c_v)).map_err(fail)?;
        worst = worst.max(1.0 - uhlmann_fidelity(&result.rho, &truth).map_err(fail)?);
    }
    let total = total_fidelity(0.99, 0.96, 0.974).map_err(fail)?;
    check(
        worst <= 1e-12 && (total - 0.926).abs() < 5e-4 && (0.92..=0.95).contains(&total),
        format!("worst 1 - F over six cardinal states {worst:.1e}; total fidelity {total:.4}"),
    )
}

fn reduced_config() -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.de.population_size = 8;
    cfg.de.max_generations = 4;
    cfg.net.n_train = 200;
    cfg.net.n_heldout = 20;
    cfg.net.adam.epochs = 2;
    cfg.modes.n_x = 128;
    cfg.modes.n_y = 128;
    cfg.analysis.n_tau = 11;
    cfg.tomography.n_samples = 500;
    cfg.tomography.iterations = 20;
    cfg
}

fn files(dir: &Path) -> std::io::Result<BTreeMap<String, Vec<u8>>> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_file() {
            let name = path
                .file_name()
                .unwrap_or_default()
                .to_string_lossy()
                .into_owned();
            out.insert(name, std::fs::read(&path)?);
        }
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(fail)?;
    let config = tmp.path().join("reduced.json");
    std::fs::write(&config, reduced_config().to_json()).map_err(fail)?;
    let mut differing = Vec::new();
    for pipeline in Pipeline::ALL {
        let mut outputs = Vec::new();
        for attempt in 0..2 {
            let out = tmp.path().join(format!("{pipeline}-{attempt}"));
            let status = Command::new(env!("CARGO_BIN_EXE_ramopt"))
                .arg(pipeline.name())
                .arg("--config")
                .arg(&config)
                .arg("--out-dir")
                .arg(&out)
                .arg("--quiet")
                .status()
                .map_err(fail)?;
            if !status.success() {
                return Err(format!("{pipeline} exited with {status}"));
            }
            outputs.push(files(&out).map_err(fail)?);
        }
        if outputs[0] != outputs[1] || outputs[0].is_empty() {
            differing.push(pipeline.name());
        }
    }
    check(
        differing.is_empty(),
        format!(
            "{} pipelines run twice; differing: {differing:?}",
            Pipeline::ALL.len()
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 11] = [
        ("plant passivity", passivity),
        ("analytic-optimum recovery", analytic_optimum),
        ("calibrated plateau", calibrated_plateau),
        ("DE on the sphere", sphere),
        ("residual-net gradients and held-out gain", net_gradients),
        ("mode math", mode_math),
        ("OAM decode loop", decode_loop),
        ("fidelity-decay shape", decay_shape),
        ("tomography closed loop", tomography_loop),
        ("SAM tomography and total fidelity", sam_exactness),
        ("CLI determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| n.to_string() == *f || name.contains(f.as_str()))
        {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {n}: PASS {name}: {detail} [{secs:.1}s]"),
            Err(detail) => {
                failed += 1;
                println!("criterion {n}: FAIL {name}: {detail} [{secs:.1}s]");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

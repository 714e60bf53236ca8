// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Experiment configuration: a JSON document with optional sections
//! `grid`, `plant`, `de`, `net`, `modes`, `analysis`, `tomography` and a
//! top-level `seed`. Missing keys take their defaults; unknown keys are
//! rejected. Loading reports every violation, each with its key path.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::csde::DeConfig;
use crate::error::{Error, Result};
use crate::modes::SpatialGrid;
use crate::oam::OamDecayModel;
use crate::plant::{flat_top_read, CouplingModel, PlantParams, SignalEnvelope};
use crate::residual_net::{AdamConfig, DistortionParams};
use crate::tomography::MleConfig;
use crate::waveforms::TimeGrid;

/// Write window and signal pulse, times in ns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSection {
    pub t_start_ns: f64,
    pub t_end_ns: f64,
    pub n_samples: usize,
    pub signal_center_ns: f64,
    /// Intensity FWHM of the Gaussian signal.
    pub signal_fwhm_ns: f64,
}

impl Default for GridSection {
    fn default() -> Self {
        Self {
            t_start_ns: 0.0,
            t_end_ns: 200.0,
            n_samples: 200,
            signal_center_ns: 100.0,
            signal_fwhm_ns: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlantSection {
    /// Coupling rate κ, 1/µs.
    pub kappa: f64,
    /// Spin decoherence rate, 1/µs.
    pub gamma_s: f64,
    /// Write control bound, rad/µs.
    pub omega_max: f64,
    pub delay_us: f64,
    #[serde(rename = "coupling_model")]
    pub coupling: CouplingModel,
    pub read_window_ns: f64,
    pub read_samples: usize,
    pub read_ramp_ns: f64,
    /// κ∫Ω_R² dt of the read pulse.
    pub read_area: f64,
}

impl Default for PlantSection {
    fn default() -> Self {
        Self {
            kappa: 100.0,
            gamma_s: 0.02,
            omega_max: 0.91,
            delay_us: 0.0,
            coupling: CouplingModel::Waist,
            read_window_ns: 200.0,
            read_samples: 400,
            read_ramp_ns: 20.0,
            read_area: 20.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetSection {
    /// Trained corrector applied during `optimize`; none means spline only.
    pub model_path: Option<String>,
    pub n_train: usize,
    pub n_heldout: usize,
    pub adam: AdamConfig,
    pub distortion: DistortionParams,
}

impl Default for NetSection {
    fn default() -> Self {
        Self {
            model_path: None,
            n_train: 10000,
            n_heldout: 200,
            adam: AdamConfig::default(),
            distortion: DistortionParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesSection {
    pub n_x: usize,
    pub n_y: usize,
    /// Half-width of the transverse grid, mm.
    pub extent: f64,
    /// Gaussian waist, mm.
    pub w0: f64,
    pub charge: i32,
    pub rotation: f64,
}

impl Default for ModesSection {
    fn default() -> Self {
        let g = SpatialGrid::default();
        Self {
            n_x: g.n_x,
            n_y: g.n_y,
            extent: g.extent,
            w0: 0.5,
            charge: 2,
            rotation: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    pub diffusion: f64,
    pub transit_rate: f64,
    pub noise_floor: f64,
    pub n_angles: usize,
    pub l_max: usize,
    /// Re-fit `diffusion` so the `calibration_charge` curve crosses
    /// `threshold` at `calibration_tau_us`.
    pub calibrate: bool,
    pub calibration_charge: i32,
    pub calibration_tau_us: f64,
    pub threshold: f64,
    pub tau_max_us: f64,
    pub n_tau: usize,
    pub bandwidth_mhz: f64,
    /// Storage time at which the OAM factor of the total fidelity is taken.
    pub report_tau_us: f64,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        let m = OamDecayModel::default();
        Self {
            diffusion: m.diffusion,
            transit_rate: m.transit_rate,
            noise_floor: m.noise_floor,
            n_angles: m.n_angles,
            l_max: m.l_max,
            calibrate: true,
            calibration_charge: 1,
            calibration_tau_us: 1.2,
            threshold: 0.67,
            tau_max_us: 3.0,
            n_tau: 61,
            bandwidth_mhz: 50.0,
            report_tau_us: 0.03,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographySection {
    /// Mean photon number |α|².
    pub mean_photons: f64,
    pub phase: f64,
    pub n_samples: usize,
    pub efficiency: f64,
    pub n_max: usize,
    pub iterations: usize,
    /// Reconstruct from this quadrature CSV instead of simulating.
    pub quadrature_path: Option<String>,
    /// Relative multiplicative noise on each polarization projection.
    pub sam_noise: f64,
    /// Polarization crosstalk of the analyzer curve.
    pub crosstalk: f64,
}

impl Default for TomographySection {
    fn default() -> Self {
        Self {
            mean_photons: 0.9,
            phase: 0.0,
            n_samples: 5000,
            efficiency: 1.0,
            n_max: 10,
            iterations: 300,
            quadrature_path: None,
            sam_noise: 0.01,
            crosstalk: 0.035,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub grid: GridSection,
    pub plant: PlantSection,
    pub de: DeConfig,
    pub net: NetSection,
    pub modes: ModesSection,
    pub analysis: AnalysisSection,
    pub tomography: TomographySection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            grid: GridSection::default(),
            plant: PlantSection::default(),
            de: DeConfig::default(),
            net: NetSection::default(),
            modes: ModesSection::default(),
            analysis: AnalysisSection::default(),
            tomography: TomographySection::default(),
        }
    }
}

/// Drops keys absent from `schema` from `value`, recording each as a
/// dotted path.
fn strip_unknown(
    value: &mut Map<String, Value>,
    schema: &Map<String, Value>,
    prefix: &str,
    out: &mut Vec<String>,
) {
    value.retain(|key, v| {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        match schema.get(key) {
            None => {
                out.push(format!("{path}: unknown key"));
                false
            }
            Some(Value::Object(sub)) => {
                if let Value::Object(inner) = v {
                    strip_unknown(inner, sub, &path, out);
                }
                true
            }
            Some(_) => true,
        }
    });
}

fn section<T: DeserializeOwned + Default>(
    root: &Map<String, Value>,
    key: &str,
    out: &mut Vec<String>,
) -> T {
    match root.get(key) {
        None => T::default(),
        Some(v) => serde_json::from_value(v.clone()).unwrap_or_else(|e| {
            out.push(format!("{key}: {e}"));
            T::default()
        }),
    }
}

fn check(out: &mut Vec<String>, ok: bool, path: &str, msg: impl std::fmt::Display) {
    if !ok {
        out.push(format!("{path}: {msg}"));
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text)
            .map_err(|e| Error::Config(vec![format!("<document>: {e}")]))?;
        let Value::Object(mut root) = value else {
            return Err(Error::Config(vec![
                "<document>: expected a JSON object".into()
            ]));
        };
        let schema = match serde_json::to_value(Self::default()) {
            Ok(Value::Object(m)) => m,
            _ => unreachable!("config serializes to an object"),
        };
        let mut out = Vec::new();
        strip_unknown(&mut root, &schema, "", &mut out);
        let seed = match root.get("seed") {
            None => Self::default().seed,
            Some(v) => v.as_u64().unwrap_or_else(|| {
                out.push(format!("seed: expected a nonnegative integer, got {v}"));
                0
            }),
        };
        let cfg = Self {
            seed,
            grid: section(&root, "grid", &mut out),
            plant: section(&root, "plant", &mut out),
            de: section(&root, "de", &mut out),
            net: section(&root, "net", &mut out),
            modes: section(&root, "modes", &mut out),
            analysis: section(&root, "analysis", &mut out),
            tomography: section(&root, "tomography", &mut out),
        };
        out.extend(cfg.violations());
        if out.is_empty() {
            Ok(cfg)
        } else {
            Err(Error::Config(out))
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Config(vec![format!("{}: cannot read config: {e}", path.display())])
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Every range violation, each prefixed with its key path.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let g = &self.grid;
        check(
            &mut v,
            g.t_end_ns > g.t_start_ns,
            "grid.t_end_ns",
            "must exceed grid.t_start_ns",
        );
        check(&mut v, g.n_samples >= 2, "grid.n_samples", "must be >= 2");
        check(
            &mut v,
            g.signal_fwhm_ns > 0.0,
            "grid.signal_fwhm_ns",
            format!("must be > 0, got {}", g.signal_fwhm_ns),
        );

        let p = &self.plant;
        check(
            &mut v,
            p.kappa > 0.0 && p.kappa.is_finite(),
            "plant.kappa",
            format!("must be > 0, got {}", p.kappa),
        );
        check(
            &mut v,
            p.gamma_s >= 0.0,
            "plant.gamma_s",
            format!("must be >= 0, got {}", p.gamma_s),
        );
        check(
            &mut v,
            p.omega_max > 0.0 && p.omega_max.is_finite(),
            "plant.omega_max",
            format!("must be finite and > 0, got {}", p.omega_max),
        );
        check(
            &mut v,
            p.delay_us >= 0.0,
            "plant.delay_us",
            format!("must be >= 0, got {}", p.delay_us),
        );
        check(
            &mut v,
            p.read_window_ns > 0.0,
            "plant.read_window_ns",
            "must be > 0",
        );
        check(
            &mut v,
            p.read_samples >= 2,
            "plant.read_samples",
            "must be >= 2",
        );
        check(
            &mut v,
            p.read_ramp_ns >= 0.0 && 2.0 * p.read_ramp_ns <= p.read_window_ns,
            "plant.read_ramp_ns",
            "must be in [0, read_window_ns/2]",
        );
        check(
            &mut v,
            p.read_area >= 0.0,
            "plant.read_area",
            "must be >= 0",
        );

        for msg in self.de.violations() {
            v.push(format!("de.{msg}"));
        }

        let n = &self.net;
        check(&mut v, n.n_train >= 1, "net.n_train", "must be >= 1");
        check(&mut v, n.n_heldout >= 1, "net.n_heldout", "must be >= 1");
        check(
            &mut v,
            n.adam.learning_rate > 0.0,
            "net.adam.learning_rate",
            "must be > 0",
        );
        check(
            &mut v,
            n.adam.batch_size >= 1,
            "net.adam.batch_size",
            "must be >= 1",
        );
        check(
            &mut v,
            (0.0..1.0).contains(&n.adam.beta1),
            "net.adam.beta1",
            "must be in [0, 1)",
        );
        check(
            &mut v,
            (0.0..1.0).contains(&n.adam.beta2),
            "net.adam.beta2",
            "must be in [0, 1)",
        );
        check(
            &mut v,
            n.adam.epsilon > 0.0,
            "net.adam.epsilon",
            "must be > 0",
        );
        check(
            &mut v,
            n.distortion.window >= 1,
            "net.distortion.window",
            "must be >= 1",
        );
        check(
            &mut v,
            n.distortion.gain >= 0.0,
            "net.distortion.gain",
            "must be >= 0",
        );

        let m = &self.modes;
        check(
            &mut v,
            m.n_x >= 16,
            "modes.n_x",
            format!("must be >= 16, got {}", m.n_x),
        );
        check(
            &mut v,
            m.n_y >= 16,
            "modes.n_y",
            format!("must be >= 16, got {}", m.n_y),
        );
        check(&mut v, m.extent > 0.0, "modes.extent", "must be > 0");
        check(&mut v, m.w0 > 0.0, "modes.w0", "must be > 0");
        check(
            &mut v,
            (1..=5).contains(&m.charge.unsigned_abs()),
            "modes.charge",
            "|charge| must be in [1, 5]",
        );

        let a = &self.analysis;
        for msg in self.decay_model().violations() {
            v.push(format!("analysis.{msg}"));
        }
        check(
            &mut v,
            a.calibration_charge != 0,
            "analysis.calibration_charge",
            "must be nonzero",
        );
        check(
            &mut v,
            a.calibration_tau_us > 0.0,
            "analysis.calibration_tau_us",
            "must be > 0",
        );
        check(
            &mut v,
            a.threshold > 0.0 && a.threshold < 1.0,
            "analysis.threshold",
            "must be in (0, 1)",
        );
        check(
            &mut v,
            a.tau_max_us > 0.0,
            "analysis.tau_max_us",
            "must be > 0",
        );
        check(&mut v, a.n_tau >= 2, "analysis.n_tau", "must be >= 2");
        check(
            &mut v,
            a.bandwidth_mhz > 0.0,
            "analysis.bandwidth_mhz",
            "must be > 0",
        );
        check(
            &mut v,
            a.report_tau_us >= 0.0,
            "analysis.report_tau_us",
            "must be >= 0",
        );

        let t = &self.tomography;
        check(
            &mut v,
            t.mean_photons >= 0.0,
            "tomography.mean_photons",
            "must be >= 0",
        );
        check(
            &mut v,
            t.n_samples >= 1,
            "tomography.n_samples",
            "must be >= 1",
        );
        check(
            &mut v,
            t.efficiency > 0.0 && t.efficiency <= 1.0,
            "tomography.efficiency",
            "must be in (0, 1]",
        );
        check(&mut v, t.n_max >= 1, "tomography.n_max", "must be >= 1");
        check(
            &mut v,
            t.sam_noise >= 0.0,
            "tomography.sam_noise",
            "must be >= 0",
        );
        check(
            &mut v,
            (0.0..=0.5).contains(&t.crosstalk),
            "tomography.crosstalk",
            "must be in [0, 0.5]",
        );
        v
    }

    pub fn write_grid(&self) -> Result<TimeGrid> {
        TimeGrid::new(
            self.grid.t_start_ns,
            self.grid.t_end_ns,
            self.grid.n_samples,
        )
    }

    pub fn signal(&self) -> Result<SignalEnvelope> {
        SignalEnvelope::gaussian(
            self.write_grid()?,
            self.grid.signal_center_ns,
            self.grid.signal_fwhm_ns,
        )
    }

    pub fn plant_params(&self) -> Result<PlantParams> {
        let p = &self.plant;
        let read_grid = TimeGrid::new(0.0, p.read_window_ns, p.read_samples)?;
        let params = PlantParams {
            kappa: p.kappa,
            gamma_s: p.gamma_s,
            omega_max: p.omega_max,
            read_control: flat_top_read(read_grid, p.read_ramp_ns, p.kappa, p.read_area)?,
            delay_us: p.delay_us,
            coupling: p.coupling,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn spatial_grid(&self) -> Result<SpatialGrid> {
        SpatialGrid::new(self.modes.n_x, self.modes.n_y, self.modes.extent)
    }

    pub fn decay_model(&self) -> OamDecayModel {
        let a = &self.analysis;
        OamDecayModel {
            diffusion: a.diffusion,
            transit_rate: a.transit_rate,
            noise_floor: a.noise_floor,
            w0: self.modes.w0,
            n_angles: a.n_angles,
            l_max: a.l_max,
        }
    }

    pub fn mle(&self) -> MleConfig {
        MleConfig {
            n_max: self.tomography.n_max,
            iterations: self.tomography.iterations,
        }
    }

    /// Storage times of the fidelity curves, evenly spaced from 0.
    pub fn taus(&self) -> Vec<f64> {
        let a = &self.analysis;
        (0..a.n_tau)
            .map(|i| a.tau_max_us * i as f64 / (a.n_tau - 1) as f64)
            .collect()
    }
}

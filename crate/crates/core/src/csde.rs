// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Chebyshev-sampled differential evolution (DE/rand/1/bin) over control
//! waveforms, plus a dense finite-difference gradient baseline.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plant::{memory_efficiency, PlantParams, SignalEnvelope};
use crate::residual_net::{forward, MlpParams};
use crate::rng::substream;
use crate::waveforms::{spline_interpolate, ChebyshevGenotype, ControlWaveform, TimeGrid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeConfig {
    pub population_size: usize,
    pub mutation_factor: f64,
    pub crossover_rate: f64,
    pub max_generations: usize,
    pub patience: usize,
    pub tol: f64,
    /// Number of Chebyshev nodes per genotype.
    pub n_nodes: usize,
}

impl Default for DeConfig {
    fn default() -> Self {
        Self {
            population_size: 40,
            mutation_factor: 0.7,
            crossover_rate: 0.9,
            max_generations: 300,
            patience: 30,
            tol: 1e-4,
            n_nodes: 20,
        }
    }
}

impl DeConfig {
    /// All violated constraints, keyed by field name.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.population_size < 4 {
            v.push(format!(
                "population_size = {} violates NP >= 4 (rand/1 needs three partners besides the target)",
                self.population_size
            ));
        }
        if !(self.mutation_factor > 0.0 && self.mutation_factor <= 2.0) {
            v.push(format!(
                "mutation_factor = {} must be in (0, 2]",
                self.mutation_factor
            ));
        }
        if !(0.0..=1.0).contains(&self.crossover_rate) {
            v.push(format!(
                "crossover_rate = {} must be in [0, 1]",
                self.crossover_rate
            ));
        }
        if self.max_generations == 0 {
            v.push("max_generations must be >= 1".into());
        }
        if !(self.tol >= 0.0) {
            v.push(format!("tol = {} must be >= 0", self.tol));
        }
        if self.n_nodes < 2 {
            v.push(format!("n_nodes = {} must be >= 2", self.n_nodes));
        }
        v
    }

    pub fn validate(&self) -> Result<()> {
        match self.violations().as_slice() {
            [] => Ok(()),
            [first, ..] => Err(Error::invalid(first.clone())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<ChebyshevGenotype>,
    pub fitness: Vec<f64>,
    pub generation: usize,
}

impl Population {
    /// Uniform random members in `[0, omega_max]`, evaluated.
    pub fn random<F>(
        size: usize,
        n_nodes: usize,
        omega_max: f64,
        rng: &mut ChaCha8Rng,
        objective: &F,
    ) -> Result<Self>
    where
        F: Fn(&ChebyshevGenotype) -> Result<f64> + Sync,
    {
        let members = (0..size)
            .map(|_| {
                let nodes = (0..n_nodes)
                    .map(|_| rng.random_range(0.0..=omega_max))
                    .collect();
                ChebyshevGenotype::new(nodes, omega_max)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::evaluated(members, objective)
    }

    pub fn evaluated<F>(members: Vec<ChebyshevGenotype>, objective: &F) -> Result<Self>
    where
        F: Fn(&ChebyshevGenotype) -> Result<f64> + Sync,
    {
        let fitness = members
            .par_iter()
            .map(objective)
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            members,
            fitness,
            generation: 0,
        })
    }

    pub fn best(&self) -> (usize, f64) {
        self.fitness
            .iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::NEG_INFINITY),
                |acc, (i, f)| if f > acc.1 { (i, f) } else { acc },
            )
    }

    pub fn mean_fitness(&self) -> f64 {
        self.fitness.iter().sum::<f64>() / self.fitness.len() as f64
    }
}

/// Three distinct indices, all different from `target`.
fn pick_partners(rng: &mut ChaCha8Rng, n: usize, target: usize) -> [usize; 3] {
    let mut picked = [usize::MAX; 3];
    let mut k = 0;
    while k < 3 {
        let c = rng.random_range(0..n);
        if c != target && !picked[..k].contains(&c) {
            picked[k] = c;
            k += 1;
        }
    }
    picked
}

/// One DE/rand/1/bin generation with greedy selection (ties keep the
/// trial). All random draws happen serially before the trials are
/// evaluated, so evaluation order never affects the result.
pub fn evolve_step<F>(
    pop: &Population,
    cfg: &DeConfig,
    rng: &mut ChaCha8Rng,
    objective: &F,
) -> Result<Population>
where
    F: Fn(&ChebyshevGenotype) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let np = pop.members.len();
    if np < 4 {
        return Err(Error::invalid(format!(
            "population of {np} is below the DE minimum of 4"
        )));
    }
    if pop.fitness.len() != np {
        return Err(Error::invalid("population fitness not evaluated"));
    }

    let trials = (0..np)
        .map(|i| {
            let [r1, r2, r3] = pick_partners(rng, np, i);
            let target = &pop.members[i];
            let bound = target.omega_max();
            let (x1, x2, x3) = (
                pop.members[r1].node_values(),
                pop.members[r2].node_values(),
                pop.members[r3].node_values(),
            );
            let dim = target.degree();
            let forced = rng.random_range(0..dim);
            let nodes = (0..dim)
                .map(|j| {
                    let cross: f64 = rng.random();
                    if j == forced || cross < cfg.crossover_rate {
                        (x1[j] + cfg.mutation_factor * (x2[j] - x3[j])).clamp(0.0, bound)
                    } else {
                        target.node_values()[j]
                    }
                })
                .collect();
            ChebyshevGenotype::new(nodes, bound)
        })
        .collect::<Result<Vec<_>>>()?;

    let trial_fitness = trials
        .par_iter()
        .map(objective)
        .collect::<Result<Vec<_>>>()?;

    let mut next = pop.clone();
    next.generation += 1;
    for (i, (trial, f)) in trials.into_iter().zip(trial_fitness).enumerate() {
        if f >= pop.fitness[i] {
            next.members[i] = trial;
            next.fitness[i] = f;
        }
    }
    Ok(next)
}

/// Dense waveform for a genotype: spline, plus the net's correction when
/// present, clamped to `[0, omega_max]`.
pub fn synthesize_waveform(
    g: &ChebyshevGenotype,
    grid: &TimeGrid,
    net: Option<&MlpParams>,
) -> Result<ControlWaveform> {
    let spline = spline_interpolate(g, grid)?;
    let Some(net) = net else {
        return Ok(spline);
    };
    let correction = forward(net, g.node_values())?;
    if correction.len() != grid.len() {
        return Err(Error::invalid(format!(
            "net output has {} samples but the grid has {}",
            correction.len(),
            grid.len()
        )));
    }
    let amplitude = spline
        .amplitude()
        .iter()
        .zip(&correction)
        .map(|(s, c)| (s + c).clamp(0.0, g.omega_max()))
        .collect();
    ControlWaveform::new(*grid, amplitude)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best: f64,
    pub mean: f64,
    pub best_genotype: ChebyshevGenotype,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptimizationTrace {
    pub records: Vec<GenerationRecord>,
}

impl OptimizationTrace {
    pub fn best_fitness(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.best).collect()
    }

    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best)
    }

    fn push(&mut self, pop: &Population) {
        let (i, best) = pop.best();
        self.records.push(GenerationRecord {
            generation: pop.generation,
            best,
            mean: pop.mean_fitness(),
            best_genotype: pop.members[i].clone(),
        });
    }
}

/// Generic DE driver: random init from the `de` substream, evolve until
/// `max_generations` or until the best fitness gains less than `tol` over
/// `patience` generations.
pub fn run_de<F>(
    cfg: &DeConfig,
    omega_max: f64,
    seed: u64,
    objective: &F,
) -> Result<(ChebyshevGenotype, OptimizationTrace)>
where
    F: Fn(&ChebyshevGenotype) -> Result<f64> + Sync,
{
    cfg.validate()?;
    let mut rng = substream(seed, "de");
    let mut pop = Population::random(
        cfg.population_size,
        cfg.n_nodes,
        omega_max,
        &mut rng,
        objective,
    )?;
    let mut trace = OptimizationTrace::default();
    trace.push(&pop);
    while pop.generation < cfg.max_generations {
        pop = evolve_step(&pop, cfg, &mut rng, objective)?;
        trace.push(&pop);
        let g = trace.records.len() - 1;
        if cfg.patience > 0 && g >= cfg.patience {
            let gain = trace.records[g].best - trace.records[g - cfg.patience].best;
            if gain < cfg.tol {
                break;
            }
        }
    }
    let (i, _) = pop.best();
    Ok((pop.members[i].clone(), trace))
}

/// Everything the memory objective needs besides the genotype.
#[derive(Debug, Clone)]
pub struct MemoryProblem<'a> {
    pub grid: TimeGrid,
    pub plant: &'a PlantParams,
    pub signal: &'a SignalEnvelope,
    pub net: Option<&'a MlpParams>,
    /// Topological charge of the stored signal.
    pub charge: i32,
}

impl MemoryProblem<'_> {
    pub fn efficiency(&self, g: &ChebyshevGenotype) -> Result<f64> {
        let omega = synthesize_waveform(g, &self.grid, self.net)?;
        Ok(memory_efficiency(self.signal, &omega, self.plant, self.charge)?.eta_m)
    }
}

/// CSDE on the memory efficiency η_m.
pub fn optimize(
    cfg: &DeConfig,
    problem: &MemoryProblem<'_>,
    seed: u64,
) -> Result<(ChebyshevGenotype, OptimizationTrace)> {
    problem.plant.validate()?;
    if problem.signal.grid() != &problem.grid {
        return Err(Error::invalid(
            "signal grid differs from the optimization grid",
        ));
    }
    if !problem.plant.omega_max.is_finite() {
        return Err(Error::invalid(
            "DE needs a finite omega_max to bound the genotype",
        ));
    }
    let objective = |g: &ChebyshevGenotype| problem.efficiency(g);
    run_de(cfg, problem.plant.omega_max, seed, &objective)
}

#[derive(Debug, Clone)]
pub struct GradientRun {
    pub best: ControlWaveform,
    /// Efficiency of the initial waveform followed by one entry per step.
    pub trace: Vec<f64>,
}

/// Projected finite-difference gradient ascent directly on the dense
/// waveform, with step halving whenever a step would lower the efficiency.
pub fn gradient_baseline(
    signal: &SignalEnvelope,
    plant: &PlantParams,
    init: &ControlWaveform,
    steps: usize,
    step_size: f64,
    charge: i32,
) -> Result<GradientRun> {
    const FD_STEP: f64 = 1e-3;
    const MAX_BACKOFF: usize = 20;
    if steps == 0 {
        return Err(Error::invalid("gradient baseline needs at least one step"));
    }
    let grid = *signal.grid();
    let upper = plant.omega_max;
    let eval = |amp: &[f64]| -> Result<f64> {
        let w = ControlWaveform::new(grid, amp.to_vec())?;
        Ok(memory_efficiency(signal, &w, plant, charge)?.eta_m)
    };
    let mut current: Vec<f64> = init
        .amplitude()
        .iter()
        .map(|a| a.clamp(0.0, upper))
        .collect();
    let mut value = eval(&current)?;
    let mut trace = vec![value];

    for _ in 0..steps {
        let grad = (0..current.len())
            .into_par_iter()
            .map(|k| {
                let mut probe = current.clone();
                let hi = (current[k] + FD_STEP).min(upper);
                let lo = (current[k] - FD_STEP).max(0.0);
                probe[k] = hi;
                let f_hi = eval(&probe)?;
                probe[k] = lo;
                let f_lo = eval(&probe)?;
                Ok(if hi > lo {
                    (f_hi - f_lo) / (hi - lo)
                } else {
                    0.0
                })
            })
            .collect::<Result<Vec<f64>>>()?;

        let mut step = step_size;
        for _ in 0..MAX_BACKOFF {
            if step <= 0.0 {
                break;
            }
            let candidate: Vec<f64> = current
                .iter()
                .zip(&grad)
                .map(|(a, g)| (a + step * g).clamp(0.0, upper))
                .collect();
            let v = eval(&candidate)?;
            if v >= value {
                current = candidate;
                value = v;
                break;
            }
            step *= 0.5;
        }
        trace.push(value);
    }
    Ok(GradientRun {
        best: ControlWaveform::new(grid, current)?,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(g: &ChebyshevGenotype) -> Result<f64> {
        Ok(-g
            .node_values()
            .iter()
            .map(|x| (x - 0.5).powi(2))
            .sum::<f64>())
    }

    #[test]
    fn identical_population_is_fixed_point() {
        let g = ChebyshevGenotype::new(vec![0.3; 6], 1.0).unwrap();
        let pop = Population::evaluated(vec![g; 8], &sphere).unwrap();
        let mut rng = substream(1, "de");
        let next = evolve_step(&pop, &DeConfig::default(), &mut rng, &sphere).unwrap();
        assert_eq!(next.members, pop.members);
        assert_eq!(next.fitness, pop.fitness);
        assert_eq!(next.generation, 1);
    }

    #[test]
    fn small_population_rejected() {
        let g = ChebyshevGenotype::new(vec![0.3; 3], 1.0).unwrap();
        let pop = Population::evaluated(vec![g; 3], &sphere).unwrap();
        let mut rng = substream(1, "de");
        let cfg = DeConfig {
            population_size: 3,
            ..DeConfig::default()
        };
        assert!(evolve_step(&pop, &cfg, &mut rng, &sphere).is_err());
        assert!(evolve_step(&pop, &DeConfig::default(), &mut rng, &sphere).is_err());
    }

    #[test]
    fn config_violations_listed() {
        let cfg = DeConfig {
            population_size: 2,
            crossover_rate: 1.5,
            ..DeConfig::default()
        };
        let v = cfg.violations();
        assert_eq!(v.len(), 2);
        assert!(v[0].contains("NP >= 4"));
    }

    #[test]
    fn partners_distinct() {
        let mut rng = substream(5, "de");
        for t in 0..4 {
            let p = pick_partners(&mut rng, 4, t);
            assert!(!p.contains(&t));
            assert!(p[0] != p[1] && p[1] != p[2] && p[0] != p[2]);
        }
    }

    #[test]
    fn net_free_synthesis_is_spline() {
        let grid = TimeGrid::new(0.0, 200.0, 200).unwrap();
        let g = ChebyshevGenotype::new((0..20).map(|i| (i % 7) as f64).collect(), 10.0).unwrap();
        let s = spline_interpolate(&g, &grid).unwrap();
        assert_eq!(synthesize_waveform(&g, &grid, None).unwrap(), s);
        let zero = MlpParams::zeros(&[20, 50, 30, 200]).unwrap();
        assert_eq!(synthesize_waveform(&g, &grid, Some(&zero)).unwrap(), s);
        let short = MlpParams::zeros(&[20, 50, 30, 199]).unwrap();
        assert!(synthesize_waveform(&g, &grid, Some(&short)).is_err());
    }
}

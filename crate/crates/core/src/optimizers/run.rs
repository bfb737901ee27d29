use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{maximize_acquisition, Algorithm, CoverSummary, InfoGainSource, RunConfig, RunTrace, TraceRow, REGRET_FLOOR};
use crate::acquisition::{analytic_info_gain, confidence_beta, ei_score, ucb_score};
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::partition::Cover;
use crate::testbed::NoisyOracle;

const ACQUISITION_STREAM: u64 = 2;
/// Candidate floor per cell, times `d`.
const MIN_CELL_CANDIDATES_PER_DIM: usize = 32;

enum Surrogate {
    Global(GpModel),
    Cover(Cover),
}

/// A run in progress; [`Run::step`] performs one iteration.
pub struct Run<'a> {
    config: RunConfig,
    oracle: NoisyOracle<'a>,
    true_optimum: f64,
    dim: usize,
    n_candidates: usize,
    rng: ChaCha8Rng,
    surrogate: Surrogate,
    /// Sampled points with their noiseless values, in sampling order.
    history: Vec<(Vec<f64>, f64)>,
    rows: Vec<TraceRow>,
    cum_regret: f64,
}

impl<'a> Run<'a> {
    pub fn new(config: RunConfig, oracle: NoisyOracle<'a>, true_optimum: f64) -> Result<Self> {
        config.validate()?;
        if !true_optimum.is_finite() {
            return Err(Error::InvalidArgument(format!("true optimum must be finite, got {true_optimum}")));
        }
        let dim = oracle.target().dim();
        let surrogate = match config.algorithm {
            Algorithm::GpEi => Surrogate::Global(GpModel::new(config.kernel, config.lambda, dim)?),
            _ => Surrogate::Cover(Cover::for_matern(config.kernel, config.lambda, dim, config.horizon)?),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(ACQUISITION_STREAM);
        Ok(Self {
            n_candidates: config.candidates_for(dim),
            config,
            oracle,
            true_optimum,
            dim,
            rng,
            surrogate,
            history: Vec::new(),
            rows: Vec::new(),
            cum_regret: 0.0,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn is_done(&self) -> bool {
        self.rows.len() >= self.config.horizon
    }

    /// The global model of a GP-EI run.
    pub fn model(&self) -> Option<&GpModel> {
        match &self.surrogate {
            Surrogate::Global(m) => Some(m),
            Surrogate::Cover(_) => None,
        }
    }

    /// The cover of an Improved-GP-EI or baseline run.
    pub fn cover(&self) -> Option<&Cover> {
        match &self.surrogate {
            Surrogate::Cover(c) => Some(c),
            Surrogate::Global(_) => None,
        }
    }

    pub fn step(&mut self) -> Result<&TraceRow> {
        if self.is_done() {
            return Err(Error::InvalidArgument("run already reached its horizon".into()));
        }
        let t = self.rows.len() + 1;
        let start = Instant::now();
        let step = match self.config.algorithm {
            Algorithm::GpEi => self.select_global(t)?,
            _ => self.select_cover(t)?,
        };
        let obs = self.oracle.observe(&step.x)?;
        let (info_gain, cell_count) = match &mut self.surrogate {
            Surrogate::Global(model) => {
                model.update(&step.x, obs.noisy)?;
                (model.accumulated_info_gain(), 1)
            }
            Surrogate::Cover(cover) => {
                let idx = cover.insert(&step.x, obs.noisy)?;
                debug_assert_eq!(idx, step.cell);
                let gain = cover.cells()[idx].model().accumulated_info_gain();
                cover.split_pass(t)?;
                (gain, cover.len())
            }
        };
        self.history.push((step.x.clone(), obs.truth));

        let plus = self.reported_index()?;
        let (x_plus, f_best) = self.history[plus].clone();
        let instant_regret = self.true_optimum - f_best;
        self.cum_regret += instant_regret;
        let flagged = instant_regret <= 0.0;
        self.rows.push(TraceRow {
            t,
            x: step.x,
            y: obs.noisy,
            x_plus,
            f_best,
            log10_distance: instant_regret.max(REGRET_FLOOR).log10(),
            instant_regret,
            cum_regret: self.cum_regret,
            omega: step.omega,
            info_gain,
            cell_count,
            wallclock_ms: start.elapsed().as_secs_f64() * 1e3,
            selected_stddev: step.stddev,
            flagged,
        });
        Ok(self.rows.last().expect("row just pushed"))
    }

    pub fn finish(mut self) -> Result<RunTrace> {
        while !self.is_done() {
            self.step()?;
        }
        let cover = self.cover().map(|c| CoverSummary {
            cells_final: c.len(),
            cells_ever: c.cells_ever(),
            max_depth: c.max_depth(),
            cells_per_side: c.cells_per_side(),
            b: c.b(),
            q: c.q(),
            splits: c.splits().len(),
            max_cell_info_gain: c.max_cell_info_gain(),
            cell_counts: c.cells().iter().map(|cell| cell.local_count()).collect(),
        });
        Ok(RunTrace {
            run_id: format!("{}-s{}-T{}", self.config.algorithm, self.config.seed, self.config.horizon),
            label: self.config.algorithm.to_string(),
            algorithm: self.config.algorithm,
            seed: self.config.seed,
            horizon: self.config.horizon,
            dim: self.dim,
            lambda: self.config.lambda,
            true_optimum: self.true_optimum,
            rows: self.rows,
            cover,
        })
    }

    fn gain_for_schedule(&self, t: usize, selected: f64) -> f64 {
        match self.config.info_gain_source {
            InfoGainSource::Selected => selected,
            InfoGainSource::AnalyticRate => analytic_info_gain(t - 1, self.dim, self.config.kernel.nu()),
        }
    }

    fn select_global(&mut self, t: usize) -> Result<Selection> {
        let Surrogate::Global(model) = &self.surrogate else {
            unreachable!("global selection on a cover run")
        };
        let gain = self.gain_for_schedule(t, model.accumulated_info_gain());
        let omega = self.config.omega.omega_at(t, gain)?;
        let incumbent = max_or_zero(&model.means_at_data()?);
        let prior: Vec<&[f64]> = model.points().collect();
        let (nc, nr) = if model.is_empty() {
            (1, 0)
        } else {
            (self.n_candidates, self.config.acq_refinements)
        };
        let lower = vec![0.0; self.dim];
        let upper = vec![1.0; self.dim];
        let score = |x: &[f64]| {
            let p = model.posterior_unchecked(x)?;
            ei_score(p.mean, incumbent, omega * p.stddev)
        };
        let (x, _) = maximize_acquisition(score, &lower, &upper, &prior, &mut self.rng, nc, nr)?;
        let stddev = model.posterior(&x)?.stddev;
        Ok(Selection {
            x,
            cell: 0,
            omega,
            stddev,
        })
    }

    fn select_cover(&mut self, t: usize) -> Result<Selection> {
        let Surrogate::Cover(cover) = &self.surrogate else {
            unreachable!("cover selection on a GP-EI run")
        };
        let ucb = self.config.algorithm == Algorithm::PiGpUcbBaseline;
        let omega = if ucb {
            f64::NAN
        } else {
            let gain = self.gain_for_schedule(t, cover.max_cell_info_gain());
            self.config.omega.omega_at(t, gain)?
        };
        let mut best: Option<(f64, Selection)> = None;
        for (i, cell) in cover.cells().iter().enumerate() {
            let model = cell.model();
            let (nc, nr) = if model.is_empty() {
                (1, 0)
            } else {
                let share = (cell.volume() * self.n_candidates as f64).ceil() as usize;
                (share.max(MIN_CELL_CANDIDATES_PER_DIM * self.dim), self.config.acq_refinements)
            };
            let prior: Vec<&[f64]> = model.points().collect();
            let upper = cell.owned_upper();
            let (x, score, scale) = if ucb {
                let gain = match self.config.info_gain_source {
                    InfoGainSource::Selected => model.accumulated_info_gain(),
                    InfoGainSource::AnalyticRate => analytic_info_gain(model.len(), self.dim, self.config.kernel.nu()),
                };
                let beta = confidence_beta(self.config.rkhs_bound, self.config.noise_bound, gain, self.config.delta);
                let f = |x: &[f64]| {
                    let p = model.posterior_unchecked(x)?;
                    Ok(ucb_score(p.mean, p.stddev, beta))
                };
                let (x, s) = maximize_acquisition(f, cell.lower(), &upper, &prior, &mut self.rng, nc, nr)?;
                (x, s, beta)
            } else {
                let incumbent = max_or_zero(&model.means_at_data()?);
                let f = |x: &[f64]| {
                    let p = model.posterior_unchecked(x)?;
                    ei_score(p.mean, incumbent, omega * p.stddev)
                };
                let (x, s) = maximize_acquisition(f, cell.lower(), &upper, &prior, &mut self.rng, nc, nr)?;
                (x, s, omega)
            };
            if best.as_ref().is_none_or(|(s, _)| score > *s) {
                let stddev = model.posterior(&x)?.stddev;
                best = Some((
                    score,
                    Selection {
                        x,
                        cell: i,
                        omega: scale,
                        stddev,
                    },
                ));
            }
        }
        Ok(best.expect("cover has at least one cell").1)
    }

    /// Index into the history of the point with the largest current
    /// posterior mean; earliest wins ties.
    fn reported_index(&self) -> Result<usize> {
        let means: Vec<f64> = match &self.surrogate {
            Surrogate::Global(model) => model.means_at_data()?,
            Surrogate::Cover(cover) => self
                .history
                .iter()
                .map(|(x, _)| {
                    let cell = &cover.cells()[cover.locate(x)?];
                    cell.model().posterior_unchecked(x).map(|p| p.mean)
                })
                .collect::<Result<_>>()?,
        };
        let mut best = 0;
        for (i, &m) in means.iter().enumerate() {
            if m > means[best] {
                best = i;
            }
        }
        Ok(best)
    }
}

struct Selection {
    x: Vec<f64>,
    cell: usize,
    omega: f64,
    stddev: f64,
}

fn max_or_zero(values: &[f64]) -> f64 {
    if values.is_empty() {
        0.0
    } else {
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Runs `config.algorithm` to its horizon.
pub fn run(config: RunConfig, oracle: NoisyOracle<'_>, true_optimum: f64) -> Result<RunTrace> {
    Run::new(config, oracle, true_optimum)?.finish()
}

pub fn run_gp_ei(config: RunConfig, oracle: NoisyOracle<'_>, true_optimum: f64) -> Result<RunTrace> {
    expect_algorithm(&config, Algorithm::GpEi)?;
    run(config, oracle, true_optimum)
}

pub fn run_improved_gp_ei(config: RunConfig, oracle: NoisyOracle<'_>, true_optimum: f64) -> Result<RunTrace> {
    expect_algorithm(&config, Algorithm::ImprovedGpEi)?;
    run(config, oracle, true_optimum)
}

pub fn run_pi_ucb_baseline(config: RunConfig, oracle: NoisyOracle<'_>, true_optimum: f64) -> Result<RunTrace> {
    expect_algorithm(&config, Algorithm::PiGpUcbBaseline)?;
    run(config, oracle, true_optimum)
}

fn expect_algorithm(config: &RunConfig, algorithm: Algorithm) -> Result<()> {
    if config.algorithm != algorithm {
        return Err(Error::InvalidArgument(format!(
            "config is for {}, expected {algorithm}",
            config.algorithm
        )));
    }
    Ok(())
}

//! Experiment execution: seeded parallel Monte-Carlo trials with
//! deterministic reduction.
//!
//! Work is split at trial granularity; every trial derives its randomness
//! from `(master_seed, trial, link)` alone, and rows are reduced in trial
//! order, so the output is a pure function of `(config, master_seed)` no
//! matter how many workers run.

use crate::config::{ArchSpec, ExperimentConfig, ExperimentKind, SweepVariable};
use crate::report::{sort_rows, summarize, ResultRow, SummaryRow};
use bdris_core::channel::{generate_realization, siso_realization, ScenarioDims};
use bdris_core::netcore::{Architecture, NoiseModel};
use bdris_core::siso::{self, PowerBudget, RisKind, ScalingParams, SisoChannel};
use bdris_core::{baselines, mimo, Error as CoreError};
use rayon::prelude::*;

/// Rows plus per-sweep-point statistics.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub errored_trials: usize,
    pub total_trials: usize,
}

/// Numeric code recorded in the CSV when a solver fails on one trial.
pub fn error_code(err: &CoreError) -> u32 {
    match err {
        CoreError::DimensionMismatch { .. } => 1,
        CoreError::ToleranceViolated { .. } => 2,
        CoreError::UnstableAmplifierLoop { .. } => 3,
        CoreError::SingularSystem { .. } => 4,
        CoreError::ZeroNormGroup { .. } => 5,
        CoreError::InvalidParameter { .. } => 6,
        CoreError::BisectionBracket { .. } => 7,
        CoreError::ThetaBudgetExceeded { .. } => 8,
        CoreError::ProblemTooLarge { .. } => 9,
        CoreError::NonConvergence { .. } => 10,
    }
}

fn trial_seed_tag(master_seed: u64, trial: u64) -> u64 {
    // compact per-trial provenance tag for the CSV seed column
    master_seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(trial)
}

/// Runs one experiment and returns rows plus summary.
///
/// Per-trial solver failures become `error`-metric rows and the run
/// continues; the run only fails when more than 10% of trials error.
pub fn run_experiment(config: &ExperimentConfig) -> anyhow::Result<RunOutput> {
    config.validate().map_err(anyhow::Error::new)?;
    let (mut rows, errored, total) = match config.experiment {
        ExperimentKind::SisoScaling => siso_scaling_rows(config)?,
        ExperimentKind::SisoAsymptotic => (siso_asymptotic_rows(config)?, 0, 0),
        ExperimentKind::MimoPowerSweep | ExperimentKind::MimoElementSweep => mimo_sweep_rows(config)?,
        ExperimentKind::Validate => {
            anyhow::bail!("validate is driven through the validation suite, not run_experiment")
        }
    };
    sort_rows(&mut rows);
    if total > 0 && errored * 10 > total {
        anyhow::bail!("{errored} of {total} trials errored (more than 10%)");
    }
    let summary = summarize(&rows);
    Ok(RunOutput { rows, summary, errored_trials: errored, total_trials: total })
}

fn scaling_params(config: &ExperimentConfig, pb: &PowerBudget) -> ScalingParams {
    ScalingParams {
        p_t: pb.p_t,
        p_a: pb.p_a,
        p_t_passive: pb.p_t_passive,
        sigma_i_sq: pb.sigma_i_sq,
        sigma_r_sq: pb.sigma_r_sq,
        zeta_ri_sq: config.zeta_ri_sq(),
        zeta_it_sq: config.zeta_it_sq(),
    }
}

fn siso_budget(config: &ExperimentConfig) -> PowerBudget {
    let p_tot = config.p_tot().expect("validated");
    let noise = config.noise_watts();
    PowerBudget::new(
        config.power_split.transmit_fraction * p_tot,
        config.power_split.ris_fraction * p_tot,
        p_tot,
        noise,
        noise,
    )
    .expect("non-negative powers")
}

fn siso_kind(arch: &ArchSpec, n_i: usize) -> (RisKind, usize) {
    match arch {
        ArchSpec::ActiveD => (RisKind::ActiveD, 1),
        ArchSpec::PassiveD => (RisKind::PassiveD, 1),
        ArchSpec::ActiveBd { .. } => {
            let g = arch.group_size(n_i).expect("bd arch");
            if g == n_i {
                (RisKind::ActiveBdFull, n_i)
            } else {
                (RisKind::ActiveBdGroup, g)
            }
        }
        ArchSpec::PassiveBd { .. } => {
            let g = arch.group_size(n_i).expect("bd arch");
            if g == n_i {
                (RisKind::PassiveBdFull, n_i)
            } else {
                (RisKind::PassiveBdGroup, g)
            }
        }
        ArchSpec::NoRis => unreachable!("rejected by validate"),
    }
}

fn siso_max_snr(kind: RisKind, group: usize, ch: &SisoChannel, pb: &PowerBudget) -> bdris_core::Result<f64> {
    match kind {
        RisKind::ActiveD => Ok(siso::max_snr_active_d(ch, pb)),
        RisKind::ActiveBdGroup | RisKind::ActiveBdFull => siso::max_snr_active_bd(ch, pb, group),
        RisKind::PassiveD => Ok(siso::max_snr_passive_d(ch, pb)),
        RisKind::PassiveBdGroup | RisKind::PassiveBdFull => siso::max_snr_passive_bd(ch, pb, group),
    }
}

fn siso_scaling_rows(config: &ExperimentConfig) -> anyhow::Result<(Vec<ResultRow>, usize, usize)> {
    let pb = siso_budget(config);
    let params = scaling_params(config, &pb);
    let experiment = config.experiment.label().to_string();
    let trials: Vec<u64> = (0..config.trials).collect();

    let per_trial: Vec<Vec<ResultRow>> = trials
        .par_iter()
        .map(|&trial| {
            let mut rows = Vec::new();
            for &sweep in &config.sweep.values {
                let n_i = sweep as usize;
                let (h_ri, h_it) =
                    siso_realization(params.zeta_ri_sq, params.zeta_it_sq, n_i, config.master_seed, trial)
                        .expect("valid fading spec");
                let ch = SisoChannel::new(num_traits_zero(), h_it, h_ri).expect("finite channel");
                for arch in &config.architectures {
                    let (kind, group) = siso_kind(arch, n_i);
                    let row = |metric: &str, value: f64| ResultRow {
                        experiment: experiment.clone(),
                        arch: arch.label(),
                        sweep,
                        trial,
                        metric: metric.to_string(),
                        value,
                        seed: trial_seed_tag(config.master_seed, trial),
                        ms: 0,
                    };
                    if n_i % group != 0 {
                        rows.push(row("error", f64::from(error_code(&CoreError::InvalidParameter {
                            name: "group",
                            message: String::new(),
                        }))));
                        continue;
                    }
                    match siso_max_snr(kind, group, &ch, &pb) {
                        Ok(snr) => rows.push(row("snr", snr)),
                        Err(e) => rows.push(row("error", f64::from(error_code(&e)))),
                    }
                }
            }
            rows
        })
        .collect();

    let mut rows: Vec<ResultRow> = per_trial.into_iter().flatten().collect();
    let errored = rows.iter().filter(|r| r.metric == "error").count();
    let total = rows.len();

    // theory overlay, one row per (arch, sweep point)
    for &sweep in &config.sweep.values {
        let n_i = sweep as usize;
        for arch in &config.architectures {
            let (kind, group) = siso_kind(arch, n_i);
            if n_i % group != 0 {
                continue;
            }
            if let Ok(theory) = siso::asymptotic_snr(kind, n_i, group, &params) {
                rows.push(ResultRow {
                    experiment: experiment.clone(),
                    arch: arch.label(),
                    sweep,
                    trial: 0,
                    metric: "snr_theory".into(),
                    value: theory,
                    seed: trial_seed_tag(config.master_seed, 0),
                    ms: 0,
                });
            }
        }
    }
    Ok((rows, errored, total))
}

fn num_traits_zero() -> bdris_core::C64 {
    bdris_core::C64::new(0.0, 0.0)
}

fn siso_asymptotic_rows(config: &ExperimentConfig) -> anyhow::Result<Vec<ResultRow>> {
    let pb = siso_budget(config);
    let params = scaling_params(config, &pb);
    let experiment = config.experiment.label().to_string();
    let mut rows = Vec::new();
    for &sweep in &config.sweep.values {
        let n_i = sweep as usize;
        for arch in &config.architectures {
            let (kind, group) = siso_kind(arch, n_i);
            if n_i % group != 0 {
                continue;
            }
            let theory = siso::asymptotic_snr(kind, n_i, group, &params).map_err(anyhow::Error::new)?;
            rows.push(ResultRow {
                experiment: experiment.clone(),
                arch: arch.label(),
                sweep,
                trial: 0,
                metric: "snr_theory".into(),
                value: theory,
                seed: trial_seed_tag(config.master_seed, 0),
                ms: 0,
            });
        }
    }
    let (nbar, ntilde) = siso::crossover_elements(&params).map_err(anyhow::Error::new)?;
    for (metric, value) in [("nbar_elements", nbar), ("ntilde_elements", ntilde)] {
        rows.push(ResultRow {
            experiment: experiment.clone(),
            arch: "crossover".into(),
            sweep: 0.0,
            trial: 0,
            metric: metric.into(),
            value,
            seed: trial_seed_tag(config.master_seed, 0),
            ms: 0,
        });
    }
    Ok(rows)
}

/// Mean rate of one architecture on one realization.
fn mimo_arch_rate(
    config: &ExperimentConfig,
    arch: &ArchSpec,
    realization: &bdris_core::channel::ChannelRealization,
    n_i: usize,
    p_tot: f64,
) -> bdris_core::Result<(f64, f64)> {
    let noise_w = config.noise_watts();
    if matches!(arch, ArchSpec::NoRis) {
        let rate = mimo::waterfilling_rate(&realization.h_rt, p_tot, noise_w);
        return Ok((rate, 0.0));
    }
    let group = arch.group_size(n_i).expect("ris arch");
    if group == 0 || n_i % group != 0 {
        return Err(CoreError::InvalidParameter {
            name: "group",
            message: format!("group size {group} must divide N_I = {n_i}"),
        });
    }
    let architecture = Architecture::new(n_i / group, group, arch.reciprocal())?;
    let pb = PowerBudget::new(
        config.power_split.transmit_fraction * p_tot,
        config.power_split.ris_fraction * p_tot,
        p_tot,
        noise_w,
        noise_w,
    )?;
    let noise = NoiseModel::new(noise_w, noise_w)?;
    let problem = mimo::MimoProblem::new(realization.clone(), architecture, config.n_s, pb, noise)?;
    let mut options = mimo::WmmseOptions::default();
    if let Some(tol) = config.wmmse_tol {
        options.tol = tol;
    }
    if let Some(iters) = config.wmmse_max_iters {
        options.max_iters = iters;
    }
    let state = if arch.is_passive() {
        if group == 1 {
            baselines::passive_drs_mimo(&problem, &options)?
        } else {
            baselines::passive_bdris_mimo(&problem, &options)?
        }
    } else {
        mimo::wmmse_optimize(&problem, &options)?
    };
    Ok((state.rate(), state.iterations() as f64))
}

fn mimo_sweep_rows(config: &ExperimentConfig) -> anyhow::Result<(Vec<ResultRow>, usize, usize)> {
    let geometry = config.geometry().map_err(anyhow::Error::new)?;
    let experiment = config.experiment.label().to_string();
    let trials: Vec<u64> = (0..config.trials).collect();

    let per_trial: Vec<Vec<ResultRow>> = trials
        .par_iter()
        .map(|&trial| {
            let mut rows = Vec::new();
            for &sweep in &config.sweep.values {
                let (n_i, p_tot) = match config.sweep.variable {
                    SweepVariable::NI => (sweep as usize, config.p_tot().expect("validated")),
                    SweepVariable::PTotDbm => (config.n_i.expect("validated"), bdris_core::units::dbm_to_watts(sweep)),
                };
                let dims = ScenarioDims { n_t: config.n_t, n_i, n_r: config.n_r };
                let realization = generate_realization(&geometry, dims, config.kappa, config.master_seed, trial)
                    .expect("valid geometry");
                for arch in &config.architectures {
                    let row = |metric: &str, value: f64| ResultRow {
                        experiment: experiment.clone(),
                        arch: arch.label(),
                        sweep,
                        trial,
                        metric: metric.to_string(),
                        value,
                        seed: trial_seed_tag(config.master_seed, trial),
                        ms: 0,
                    };
                    match mimo_arch_rate(config, arch, &realization, n_i, p_tot) {
                        Ok((rate, iters)) => {
                            rows.push(row("rate", rate));
                            if !matches!(arch, ArchSpec::NoRis) {
                                rows.push(row("iters", iters));
                            }
                        }
                        Err(e) => rows.push(row("error", f64::from(error_code(&e)))),
                    }
                }
            }
            rows
        })
        .collect();

    let rows: Vec<ResultRow> = per_trial.into_iter().flatten().collect();
    let errored = rows.iter().filter(|r| r.metric == "error").count();
    let total = rows.iter().filter(|r| r.metric != "iters").count();
    Ok((rows, errored, total))
}

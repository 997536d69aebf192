use std::f64::consts::PI;
use std::path::Path;

use serde::Serialize;

use pulseopt_core::dynamics::{adiabaticity_ratio, propagate, IntegratorConfig};
use pulseopt_core::fitness::{evaluate, integrated_occupation_curve, FitnessSpec};
use pulseopt_core::model::{ground_state, make_grid, TwoLevelSystem};
use pulseopt_core::morse::{eigenstates, MorseModel};
use pulseopt_core::optimizer::{
    optimize, perturbation_audit, random_envelope, OptimizationProblem,
};
use pulseopt_core::pulses::{
    constant_pulse, pulse_area, pulse_energy, soliton_envelope, square_pulse_matching,
    EnergyBudget, Envelope,
};
use pulseopt_core::Error as CoreError;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{sha256_hex, OutDir, Provenance};

fn envelope_rows<'a>(
    grid: &'a pulseopt_core::model::TimeGrid,
    env: &'a Envelope,
    step: usize,
) -> impl Iterator<Item = Vec<f64>> + 'a {
    (0..grid.len())
        .step_by(step.max(1))
        .map(move |i| vec![grid.node(i), env.value(grid.node(i))])
}

#[derive(Serialize)]
struct SimulateSummary {
    q22: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    rho22_at_t_control: Option<f64>,
    energy: f64,
    area: f64,
    adiabaticity_ratio: Option<f64>,
    provenance: Provenance,
}

pub fn cmd_simulate(config_path: &Path, out: &Path) -> Result<(), CliError> {
    let (config, hash) = RunConfig::load(config_path)?;
    let sys = config.system()?;
    let grid = config.time_grid()?;
    let env = config.envelope(&sys, &grid)?;
    let cfg = config.integrator()?;

    let traj = propagate(&sys, &env, &grid, ground_state(), &cfg)?;
    let q22 = evaluate(&FitnessSpec::IntegratedUpper, &traj)?;
    let rho22_at_t_control = match config.fitness_spec() {
        FitnessSpec::TerminalUpper { .. } => Some(evaluate(&config.fitness_spec(), &traj)?),
        FitnessSpec::IntegratedUpper => None,
    };
    let adiabaticity = match adiabaticity_ratio(&env, &sys, &grid) {
        Ok(r) => Some(r),
        Err(CoreError::ZeroEnvelope) => None,
        Err(e) => return Err(e.into()),
    };

    let out = OutDir::new(out)?;
    let prefix = &config.output.prefix;
    out.write_csv(
        &format!("{prefix}_trajectory.csv"),
        "t,rho11,rho22,re12,im12",
        traj.states.iter().enumerate().map(|(i, s)| {
            vec![grid.node(i), s.rho11, s.rho22, s.re12, s.im12]
        }),
    )?;
    out.write_json(
        &format!("{prefix}_summary.json"),
        &SimulateSummary {
            q22,
            rho22_at_t_control,
            energy: pulse_energy(&env, &grid)?,
            area: pulse_area(&env, &sys, &grid)?.total(),
            adiabaticity_ratio: adiabaticity,
            provenance: Provenance::new(hash, "simulate"),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct Fig1Summary {
    q22_soliton: f64,
    q22_square: f64,
    ratio: f64,
    provenance: Provenance,
}

pub fn cmd_fig1(out: &Path) -> Result<(), CliError> {
    let sys = TwoLevelSystem::lossless(1.0, 1.0)?;
    let budget = EnergyBudget::new(2.0)?;
    let grid = make_grid(-50.0, 50.0, 20001)?;
    let cfg = IntegratorConfig::new(0.01, 1)?;
    let hash = sha256_hex(b"fig1 mu=1 E0=2 gamma=0 window=[-50,50] n=20001");

    let soliton = soliton_envelope(&sys, &budget)?;
    let soliton_area = pulse_area(&soliton, &sys, &grid)?.total();
    let square = square_pulse_matching(&sys, soliton_area, &budget)?;

    let out = OutDir::new(out)?;
    let mut q22 = [0.0; 2];
    for (slot, (name, env)) in q22
        .iter_mut()
        .zip([("soliton", &soliton), ("square", &square)])
    {
        let traj = propagate(&sys, env, &grid, ground_state(), &cfg)?;
        let curve = integrated_occupation_curve(&traj);
        *slot = evaluate(&FitnessSpec::IntegratedUpper, &traj)?;
        out.write_csv(&format!("fig1_{name}_envelope.csv"), "t,V", envelope_rows(&grid, env, 10))?;
        out.write_csv(
            &format!("fig1_{name}_occupation.csv"),
            "t,int_rho22",
            curve
                .iter()
                .enumerate()
                .step_by(10)
                .map(|(i, v)| vec![grid.node(i), *v]),
        )?;
    }

    let [q_sol, q_sq] = q22;
    let ratio = q_sol / q_sq;
    if q_sol >= q_sq || (ratio - 8.0 / (PI * PI)).abs() > 1e-3 {
        return Err(CliError::Numeric(format!(
            "integrated-occupation ratio check failed: {q_sol} / {q_sq} = {ratio}"
        )));
    }
    out.write_json(
        "fig1_summary.json",
        &Fig1Summary { q22_soliton: q_sol, q22_square: q_sq, ratio, provenance: Provenance::new(hash, "fig1") },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct Fig2Summary {
    mass: f64,
    mu: f64,
    omega: f64,
    amplitude: f64,
    e0: f64,
    t_control: f64,
    rho22_at_t_control: f64,
    provenance: Provenance,
}

pub fn cmd_fig2(mass: f64, t_control: f64, out: &Path) -> Result<(), CliError> {
    let model = MorseModel::new(mass)?;
    let states = eigenstates(&model, 2)?;
    let mu = states.matrix_element(0, 1, |r| model.dipole(r)).abs();
    let omega = states.energies[1] - states.energies[0];
    let sys = TwoLevelSystem::lossless(mu, omega)?;
    let (env, budget) = constant_pulse(&sys, t_control)?;
    let amplitude = env.value(0.5 * t_control);
    let hash = sha256_hex(format!("fig2 mass={mass} t_control={t_control}").as_bytes());

    // the closed-form identities the constant optimum must satisfy
    if (amplitude * mu * t_control - PI / 2.0).abs() > 1e-12 {
        return Err(CliError::Numeric("pulse-area identity violated".into()));
    }
    if (budget.e0 * 4.0 * mu * mu * t_control - PI * PI).abs() > 1e-12 * PI * PI {
        return Err(CliError::Numeric("energy identity violated".into()));
    }

    let grid = make_grid(0.0, t_control, 30001)?;
    let traj = propagate(&sys, &env, &grid, ground_state(), &IntegratorConfig::per_node())?;
    let occupied = traj.states.last().unwrap().rho22;
    if occupied < 1.0 - 1e-6 {
        return Err(CliError::Numeric(format!(
            "terminal occupation {occupied} below 1 - 1e-6"
        )));
    }

    let out = OutDir::new(out)?;
    out.write_csv("fig2_envelope.csv", "t,V", envelope_rows(&grid, &env, 10))?;
    out.write_json(
        "fig2_summary.json",
        &Fig2Summary {
            mass,
            mu,
            omega,
            amplitude,
            e0: budget.e0,
            t_control,
            rho22_at_t_control: occupied,
            provenance: Provenance::new(hash, "fig2"),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct OptimizeReportJson {
    final_fitness: f64,
    converged: bool,
    iterations: usize,
    seed: u64,
    fitness_history: Vec<f64>,
    grad_norm_history: Vec<f64>,
    provenance: Provenance,
}

fn optimization_problem(
    config: &RunConfig,
    seed: u64,
) -> Result<(OptimizationProblem, EnergyBudget), CliError> {
    let sys = config.system()?;
    let grid = config.time_grid()?;
    let e0 = config
        .optimizer
        .e0
        .ok_or_else(|| CliError::Config("optimizer.e0 is required".into()))?;
    let budget = EnergyBudget::new(e0)?;
    let init = random_envelope(&grid, &budget, seed)?;
    let mut prob = OptimizationProblem::new(
        sys,
        grid,
        config.fitness_spec(),
        budget,
        &init,
        config.integrator()?,
    )?;
    prob.max_iters = config.optimizer.max_iters;
    prob.tol_grad = config.optimizer.tol_grad;
    prob.step0 = config.optimizer.step0;
    prob.armijo = config.optimizer.armijo;
    prob.seed = seed;
    Ok((prob, budget))
}

pub fn cmd_optimize(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let (config, hash) = RunConfig::load(config_path)?;
    let seed = seed.unwrap_or(config.optimizer.seed);
    let (prob, _) = optimization_problem(&config, seed)?;
    let report = optimize(&prob)?;

    let out = OutDir::new(out)?;
    let prefix = &config.output.prefix;
    out.write_csv(
        &format!("{prefix}_optimized.csv"),
        "t,V",
        envelope_rows(&prob.grid, &report.envelope, 1),
    )?;
    out.write_json(
        &format!("{prefix}_report.json"),
        &OptimizeReportJson {
            final_fitness: report.final_fitness(),
            converged: report.converged,
            iterations: report.iterations,
            seed,
            fitness_history: report.fitness_history.clone(),
            grad_norm_history: report.grad_norm_history.clone(),
            provenance: Provenance::new(hash, "optimize"),
        },
    )?;
    if config.optimizer.require_convergence && !report.converged {
        return Err(CliError::NonConvergence(format!(
            "stopped after {} iterations with gradient norm {:?}",
            report.iterations,
            report.grad_norm_history.last()
        )));
    }
    Ok(())
}

#[derive(Serialize)]
struct AuditJson {
    base_fitness: f64,
    worst_improvement: f64,
    n_trials: usize,
    rel_amplitude: f64,
    seed: u64,
    provenance: Provenance,
}

pub fn cmd_audit(config_path: &Path, out: &Path, seed: Option<u64>) -> Result<(), CliError> {
    let (config, hash) = RunConfig::load(config_path)?;
    let seed = seed.unwrap_or(config.optimizer.seed);
    let sys = config.system()?;
    let grid = config.time_grid()?;
    let e0 = config
        .optimizer
        .e0
        .ok_or_else(|| CliError::Config("optimizer.e0 is required".into()))?;
    let budget = EnergyBudget::new(e0)?;
    let report = perturbation_audit(
        &sys,
        &budget,
        &config.fitness_spec(),
        &grid,
        &config.integrator()?,
        config.optimizer.n_trials,
        config.optimizer.rel_amplitude,
        seed,
    )?;

    let out = OutDir::new(out)?;
    let prefix = &config.output.prefix;
    out.write_csv(
        &format!("{prefix}_audit.csv"),
        "trial,delta",
        report
            .improvements
            .iter()
            .enumerate()
            .map(|(i, d)| vec![i as f64, *d]),
    )?;
    out.write_json(
        &format!("{prefix}_audit.json"),
        &AuditJson {
            base_fitness: report.base_fitness,
            worst_improvement: report.worst_improvement,
            n_trials: config.optimizer.n_trials,
            rel_amplitude: config.optimizer.rel_amplitude,
            seed,
            provenance: Provenance::new(hash, "audit"),
        },
    )?;
    Ok(())
}

#[derive(Serialize)]
struct MorseJson {
    mass: f64,
    mu: f64,
    mu_abs: f64,
    omega: f64,
    e0: f64,
    e1: f64,
    bound_states: usize,
    provenance: Provenance,
}

pub fn cmd_morse(mass: f64, n_r: usize, out: &Path) -> Result<(), CliError> {
    let model = MorseModel::with_grid(mass, 0.5, 12.0, n_r)?;
    let states = eigenstates(&model, 2)?;
    let mu = states.matrix_element(0, 1, |r| model.dipole(r));
    let hash = sha256_hex(format!("morse mass={mass} n_r={n_r}").as_bytes());

    let out = OutDir::new(out)?;
    out.write_csv(
        "morse_wavefunctions.csv",
        "r,psi0,psi1",
        states
            .r
            .iter()
            .zip(&states.wavefunctions[0])
            .zip(&states.wavefunctions[1])
            .map(|((r, a), b)| vec![*r, *a, *b]),
    )?;
    out.write_json(
        "morse_summary.json",
        &MorseJson {
            mass,
            mu,
            mu_abs: mu.abs(),
            omega: states.energies[1] - states.energies[0],
            e0: states.energies[0],
            e1: states.energies[1],
            bound_states: model.bound_state_count(),
            provenance: Provenance::new(hash, "morse"),
        },
    )?;
    Ok(())
}

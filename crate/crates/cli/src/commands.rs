//! `simulate`, `verify` and `list-builtins`.

use crate::config::{Experiment, Model};
use crate::error::CliError;
use crate::output::{self, float};
use spsim_core::pide::{default_padding, PideGrid};
use spsim_core::switching::{sample_with_clock, SPTrajectory};
use spsim_core::verify::{
    check_chapman_kolmogorov, check_conditional_law, check_feynman_kac, check_kolmogorov, check_stationarity,
    estimate_stationary_limit, BudgetItem, Harness, VerificationReport, DEFAULT_BURN_IN, DEFAULT_S_POINTS,
};
use spsim_core::{Executor, MCEstimate, RngStream};
use std::fmt::Write as _;
use std::path::PathBuf;

/// Options shared by all commands.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalOptions {
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub out_dir: PathBuf,
}

impl GlobalOptions {
    pub fn seed(&self, exp: &Experiment) -> u64 {
        self.seed.or(exp.config.run.seed).unwrap_or(0)
    }

    pub fn executor(&self, exp: &Experiment) -> Result<Executor, CliError> {
        let n = self.workers.or(exp.config.run.workers).unwrap_or(1);
        if n == 0 {
            return Err(CliError::Config("worker count must be at least 1".into()));
        }
        Executor::with_workers(n).map_err(|e| CliError::Config(e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Check {
    Kolmogorov,
    ConditionalLaw,
    Stationary,
    ChapmanKolmogorov,
    FeynmanKac,
}

impl Check {
    pub fn name(self) -> &'static str {
        match self {
            Check::Kolmogorov => "kolmogorov",
            Check::ConditionalLaw => "conditional-law",
            Check::Stationary => "stationary",
            Check::ChapmanKolmogorov => "chapman-kolmogorov",
            Check::FeynmanKac => "feynman-kac",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSummary {
    pub n_paths: usize,
    pub jump_count: MCEstimate,
    /// Fraction of paths without a renewal before the horizon.
    pub censored_fraction: f64,
}

fn output_grid(horizon: f64, step: f64) -> Vec<f64> {
    let n = (horizon / step - 1e-9).ceil() as usize;
    let mut t: Vec<f64> = (0..n).map(|k| k as f64 * step).collect();
    t.push(horizon);
    t
}

fn trajectory_rows(id: usize, tr: &SPTrajectory, grid: &[f64]) -> Result<(String, String), spsim_core::SpError> {
    let mut rows = String::new();
    let mut renewals = String::new();
    let push = |out: &mut String, t: f64, event: &str, x: &[f64]| {
        let _ = write!(out, "{id},{},{event}", float(t));
        for v in x {
            let _ = write!(out, ",{}", float(*v));
        }
        out.push('\n');
    };
    let mut r = tr.renewals().iter().peekable();
    for &t in grid {
        while let Some(rec) = r.peek() {
            if rec.time > t {
                break;
            }
            push(&mut rows, rec.time, "pre", &rec.pre_jump_state);
            push(&mut rows, rec.time, "jump", &rec.location);
            r.next();
        }
        push(&mut rows, t, "grid", &tr.evaluate(t)?);
    }
    for rec in tr.renewals() {
        let _ = write!(renewals, "{id},{},{}", rec.index, float(rec.time));
        for v in rec.location.iter().chain(&rec.pre_jump_state) {
            let _ = write!(renewals, ",{}", float(*v));
        }
        renewals.push('\n');
    }
    Ok((rows, renewals))
}

/// Writes `trajectories.csv` and `renewals.csv`.
pub fn simulate(exp: &Experiment, opts: &GlobalOptions) -> Result<SimulateSummary, CliError> {
    let run = &exp.config.run;
    let seed = opts.seed(exp);
    let executor = opts.executor(exp)?;
    let grid = output_grid(run.horizon, run.output_step.unwrap_or(run.horizon / 100.0));
    let cfg = exp.sp.clone().with_observations(grid.clone());
    let model = exp.model.as_generator();
    let results = executor.map(run.n_paths, |i| {
        Ok(sample_with_clock(model, &exp.law, &run.x0, &cfg, RngStream::new(seed, i as u64))
            .and_then(|tr| Ok((tr.renewals().len(), trajectory_rows(i, &tr, &grid)?))))
    })?;
    let dim = exp.dim();
    let coords = |p: &str| (0..dim).map(|k| format!(",{p}{k}")).collect::<String>();
    let mut traj = format!("path_id,t,event{}\n", coords("x_"));
    let mut ren = format!("path_id,n,t{}{}\n", coords("y_"), coords("pre_"));
    let mut counts = Vec::with_capacity(run.n_paths);
    for (i, r) in results.into_iter().enumerate() {
        let (n, (rows, renewals)) = r.map_err(|e| {
            let base = CliError::from(e);
            let msg = format!("path {i} (seed {seed}, stream {i}): {base}");
            match base {
                CliError::Runtime(_) => CliError::Runtime(msg),
                _ => CliError::Validation(msg),
            }
        })?;
        traj.push_str(&rows);
        ren.push_str(&renewals);
        counts.push(n as f64);
    }
    output::write_file(&opts.out_dir, "trajectories.csv", &traj)?;
    output::write_file(&opts.out_dir, "renewals.csv", &ren)?;
    let censored = counts.iter().filter(|c| **c == 0.0).count() as f64 / counts.len() as f64;
    Ok(SimulateSummary {
        n_paths: run.n_paths,
        jump_count: MCEstimate::from_samples(&counts),
        censored_fraction: censored,
    })
}

fn reference_report(identity: &str, estimate: MCEstimate, reference: f64, budget: Vec<BudgetItem>, z: f64) -> VerificationReport {
    VerificationReport::build(
        identity,
        "reference",
        estimate,
        MCEstimate::exact(reference),
        estimate.mean - reference,
        estimate.std_error,
        z,
        budget,
        Vec::new(),
        Vec::new(),
    )
}

/// Runs one check, writes `verify_<which>.csv` and returns the reports.
pub fn verify(exp: &Experiment, which: Check, opts: &GlobalOptions) -> Result<Vec<VerificationReport>, CliError> {
    let v = exp.config.verify_section()?;
    let run = &exp.config.run;
    let mut harness = Harness::new(opts.seed(exp), opts.executor(exp)?);
    if let Some(z) = v.z {
        harness = harness.with_z(z);
    }
    if let Some(c) = v.scheme_constant {
        harness.scheme_constant = c;
    }
    let model = exp.model.as_generator();
    let law = &exp.law;
    let x0 = &run.x0;
    let missing = |s: &str| CliError::Config(format!("missing 'verify.{s}' section"));
    let reports = match which {
        Check::Kolmogorov => {
            let k = v.kolmogorov.as_ref().ok_or_else(|| missing("kolmogorov"))?;
            let g = exp.test_function(k.g.as_ref(), k.t)?;
            let n = k.n_paths.unwrap_or(run.n_paths);
            vec![check_kolmogorov(&harness, model, law, &g, x0, k.t, n, k.s_points.unwrap_or(DEFAULT_S_POINTS), &exp.sp)?]
        }
        Check::ConditionalLaw => {
            let c = v.conditional_law.as_ref().ok_or_else(|| missing("conditional_law"))?;
            let g = exp.test_function(c.g.as_ref(), c.t)?;
            let r = check_conditional_law(
                &harness,
                model,
                law,
                &g,
                x0,
                c.t,
                c.n_outer.unwrap_or(run.n_paths),
                c.n_inner.unwrap_or(1000),
                &exp.sp,
                c.inner_max_step.unwrap_or(run.max_step),
            )?;
            let mut out = vec![r.clone()];
            if let Some(reference) = c.reference {
                out.push(reference_report("conditional-law", r.rhs, reference, r.budget.clone(), harness.z));
            }
            out
        }
        Check::Stationary => {
            let s = v.stationary.as_ref().ok_or_else(|| missing("stationary"))?;
            let g = exp.test_function(s.g.as_ref(), s.t_long)?;
            let n = s.n_paths.unwrap_or(run.n_paths);
            let mut sp = exp.sp.clone();
            if let Some(cap) = s.final_segment_cap {
                sp.final_segment_cap = cap;
            }
            let (r, est) =
                estimate_stationary_limit(&harness, model, law, &g, x0, s.t_long, s.burn_in.unwrap_or(DEFAULT_BURN_IN), n, &sp)?;
            let mut out = vec![r];
            if let Some([t1, t2]) = s.compare_at {
                out.push(check_stationarity(&harness, model, law, &g, x0, t1, t2, n, &exp.sp)?);
            }
            if let Some(reference) = s.reference {
                out.push(reference_report("stationary", est.ratio, reference, Vec::new(), harness.z));
            }
            out
        }
        Check::ChapmanKolmogorov => {
            let c = v.chapman_kolmogorov.as_ref().ok_or_else(|| missing("chapman_kolmogorov"))?;
            let g = exp.test_function(c.g.as_ref(), c.t1 + c.t2)?;
            vec![check_chapman_kolmogorov(&harness, model, law, &g, x0, c.t1, c.t2, c.n_paths.unwrap_or(run.n_paths), &exp.sp)?]
        }
        Check::FeynmanKac => {
            let f = v.feynman_kac.as_ref().ok_or_else(|| missing("feynman_kac"))?;
            let Model::Levy(triplet) = &exp.model else {
                return Err(CliError::Validation("feynman-kac needs a levy model".into()));
            };
            if exp.dim() != 1 {
                return Err(CliError::Validation("feynman-kac is one-dimensional".into()));
            }
            let h = exp.test_function(f.h.as_ref(), f.t)?;
            let pad = f.pide.padding.unwrap_or_else(|| default_padding(triplet, f.t));
            let [lo, hi] = f.pide.domain.unwrap_or_else(|| {
                let lo = f.x_grid.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = f.x_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                [lo - pad, hi + pad]
            });
            let grid = PideGrid::new(lo, hi, f.pide.n_x, f.pide.dt, f.pide.theta.unwrap_or(0.5), pad)?;
            let (reports, solution) =
                check_feynman_kac(&harness, triplet, law, &h, f.t, &f.x_grid, f.n_paths.unwrap_or(run.n_paths), &grid, &exp.sp)?;
            let mut csv = Vec::new();
            solution.write_csv(&mut csv)?;
            output::write_file(&opts.out_dir, "pide_solution.csv", &String::from_utf8_lossy(&csv))?;
            reports
        }
    };
    output::write_file(&opts.out_dir, &format!("verify_{}.csv", which.name()), &output::reports_csv(&reports))?;
    Ok(reports)
}

pub fn list_builtins() -> &'static str {
    crate::builtins::listing()
}

use std::path::PathBuf;

use serde::Serialize;
use uplink_aoi::fixed_point::{solve, stability_point, sweep_alpha, FixedPointConfig};
use uplink_aoi::macroscopic::{LinkParams, MetaMoments};
use uplink_aoi::queue::ArrivalSpec;
use uplink_aoi::sim::{aggregate, simulate as run_sim, NetworkConfig, RunOptions};
use uplink_aoi::units::{db_to_linear, Extended};

use crate::config::{CompareArgs, Params};
use crate::error::{config, CliError, Result};
use crate::report::{ccdf_csv, opt_cell, read_ccdf, read_headline, read_manifest, Csv, Run, CCDF, SUMMARY};

fn fixed_point_config(p: &Params) -> FixedPointConfig {
    FixedPointConfig {
        tol: p.tol,
        max_iters: p.max_iters,
        chi_init: p.chi_init,
        damping: p.damping,
        sojourn: p.sojourn_model.into(),
        ..Default::default()
    }
}

fn link(p: &Params, theta: f64) -> Result<LinkParams> {
    Ok(LinkParams::new(theta, p.eta, p.eps)?.with_activity(p.activity.into()))
}

#[derive(Serialize)]
struct AnalysisSummary {
    chi: f64,
    converged: bool,
    iterations: usize,
    trajectory: Vec<f64>,
    moments: MetaMoments,
    distribution: uplink_aoi::macroscopic::MetaDistribution,
    boundaries: Vec<f64>,
    all_stable: bool,
    mean_sojourn: Extended,
    peak_aoi: Extended,
}

pub fn analyze(p: &Params) -> Result<()> {
    let alpha = p.alpha.expect("resolved");
    let sol = solve(&ArrivalSpec::new(alpha)?, &link(p, p.theta)?, p.classes, &fixed_point_config(p))?;
    let mut run = Run::start(&p.out, "analyze", p, vec![])?;

    let mut csv = Csv::new(&["class", "d", "stable", "x0", "mean_sojourn", "peak_aoi"]);
    for (k, (c, peak)) in sol.per_class.iter().zip(&sol.aoi.per_class).enumerate() {
        csv.row(&[
            (k + 1).to_string(),
            c.d.to_string(),
            c.stable.to_string(),
            c.x0.to_string(),
            c.mean_sojourn.to_string(),
            peak.to_string(),
        ]);
    }
    run.write_text("equilibrium.csv", &csv.into_string())?;

    let grid = p.delta_grid();
    let ccdf = grid.iter().map(|&d| sol.distribution.ccdf(d)).collect::<uplink_aoi::Result<Vec<_>>>()?;
    run.write_text(CCDF, &ccdf_csv(&grid, &ccdf))?;

    run.write_json(
        SUMMARY,
        &AnalysisSummary {
            chi: sol.chi,
            converged: sol.converged,
            iterations: sol.iterations,
            trajectory: sol.trajectory.clone(),
            moments: sol.moments,
            distribution: sol.distribution,
            boundaries: sol.table.boundaries.clone(),
            all_stable: sol.all_stable(),
            mean_sojourn: sol.mean_sojourn(),
            peak_aoi: sol.aoi.network,
        },
    )?;
    run.finish()?;
    if sol.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged)
    }
}

#[derive(Serialize)]
struct RealizationSummary {
    realization: u64,
    devices: usize,
    steady: bool,
    warmup_slots: u64,
    idle_fraction: f64,
    mean_sojourn: Option<f64>,
    peak_aoi: Option<f64>,
}

#[derive(Serialize)]
struct SimulationSummary {
    devices: usize,
    excluded_devices: usize,
    non_steady_realizations: usize,
    idle_fraction: f64,
    mean_sojourn: Option<f64>,
    peak_aoi: Option<f64>,
    realizations: Vec<RealizationSummary>,
}

pub fn simulate(p: &Params) -> Result<()> {
    let cfg = NetworkConfig {
        bs_density: p.bs_density,
        area_side: p.area_side,
        alpha: p.alpha.expect("resolved"),
        theta: p.theta,
        eta: p.eta,
        eps: p.eps,
        rho_dbm: p.rho_dbm,
        n_slots_max: p.slots,
        warmup_window: p.warmup_window,
        steady_tol: p.tol,
        seed: p.seed,
        n_realizations: p.realizations,
    };
    let records = run_sim(&cfg, &RunOptions::default())?;
    let grid = p.delta_grid();
    let pooled = aggregate(&records, &grid, p.classes, p.min_attempts)?;
    let mut run = Run::start(&p.out, "simulate", p, vec![p.seed])?;
    run.write_text(CCDF, &ccdf_csv(&grid, &pooled.ccdf))?;

    let mut csv = Csv::new(&["class", "devices", "mean_success", "idle_fraction", "mean_sojourn", "peak_aoi"]);
    for (k, c) in pooled.classes.iter().enumerate() {
        csv.row(&[
            (k + 1).to_string(),
            c.n_devices.to_string(),
            c.mean_success.to_string(),
            c.idle_fraction.to_string(),
            opt_cell(c.mean_sojourn),
            opt_cell(c.peak_aoi),
        ]);
    }
    run.write_text("classes.csv", &csv.into_string())?;

    let realizations = records
        .iter()
        .map(|r| {
            let one = aggregate(std::slice::from_ref(r), &[], p.classes, p.min_attempts)?;
            Ok(RealizationSummary {
                realization: r.realization,
                devices: r.devices.len(),
                steady: r.steady,
                warmup_slots: r.warmup_slots,
                idle_fraction: one.idle_fraction,
                mean_sojourn: one.mean_sojourn,
                peak_aoi: one.peak_aoi,
            })
        })
        .collect::<uplink_aoi::Result<Vec<_>>>()?;
    run.write_json(
        SUMMARY,
        &SimulationSummary {
            devices: pooled.n_devices,
            excluded_devices: pooled.n_excluded,
            non_steady_realizations: pooled.non_steady,
            idle_fraction: pooled.idle_fraction,
            mean_sojourn: pooled.mean_sojourn,
            peak_aoi: pooled.peak_aoi,
            realizations,
        },
    )?;
    run.finish()
}

pub fn sweep(p: &Params) -> Result<()> {
    let alphas = p.alpha_grid();
    let cfg = fixed_point_config(p);
    let mut table = Csv::new(&["theta_db", "alpha", "peak_aoi", "mean_sojourn", "all_stable"]);
    let mut frontier = Csv::new(&["theta_db", "stability_point"]);
    let mut all_converged = true;
    for &theta_db in &p.theta_db_list {
        let points = sweep_alpha(&alphas, &link(p, db_to_linear(theta_db))?, p.classes, &cfg)?;
        for pt in &points {
            all_converged &= pt.converged;
            table.row(&[
                theta_db.to_string(),
                pt.alpha.to_string(),
                pt.peak_aoi.to_string(),
                pt.mean_sojourn.to_string(),
                pt.all_stable.to_string(),
            ]);
        }
        frontier.row(&[theta_db.to_string(), opt_cell(stability_point(&points))]);
    }
    let mut run = Run::start(&p.out, "sweep", p, vec![])?;
    run.write_text("sweep.csv", &table.into_string())?;
    run.write_text("frontier.csv", &frontier.into_string())?;
    run.finish()?;
    if all_converged {
        Ok(())
    } else {
        Err(CliError::NotConverged)
    }
}

/// Parameters two reports must share to be comparable.
const SHARED: [&str; 5] = ["alpha", "theta", "eta", "eps", "classes"];

#[derive(Debug, Serialize)]
struct Comparison {
    reference: PathBuf,
    candidate: PathBuf,
    ccdf_sup_gap: f64,
    ccdf_tol: f64,
    ccdf_pass: bool,
    peak_aoi_rel_error: Option<f64>,
    peak_aoi_rel_tol: f64,
    peak_aoi_pass: bool,
    mean_sojourn_rel_error: Option<f64>,
    mean_sojourn_rel_tol: Option<f64>,
    /// True when every configured check passes.
    pass: bool,
}

fn rel_error(reference: Option<Extended>, candidate: Option<Extended>) -> Option<f64> {
    match (reference?, candidate?) {
        (Extended::Finite(a), Extended::Finite(b)) => Some(if a == b { 0.0 } else { (b - a).abs() / a.abs() }),
        (a, b) if a.is_unbounded() && b.is_unbounded() => Some(0.0),
        _ => Some(f64::INFINITY),
    }
}

pub fn compare(args: CompareArgs) -> Result<()> {
    let a = args.merged()?;
    let (Some(reference), Some(candidate)) = (a.analysis.clone(), a.simulation.clone()) else {
        return config("compare needs --analysis and --simulation");
    };
    let out = a.out.clone().unwrap_or_else(|| PathBuf::from("comparison"));
    let ccdf_tol = a.tol.unwrap_or(0.05);
    let peak_tol = a.rel_tol.unwrap_or(0.05);

    let (ma, mb) = (read_manifest(&reference)?, read_manifest(&candidate)?);
    let diff: Vec<String> = SHARED
        .iter()
        .filter_map(|&k| {
            let (va, vb) = (&ma.parameters[k], &mb.parameters[k]);
            (va != vb).then(|| format!("  {k}: {va} vs {vb}"))
        })
        .collect();
    if !diff.is_empty() {
        return Err(CliError::Mismatch(diff.join("\n")));
    }

    let (ca, cb) = (read_ccdf(&reference)?, read_ccdf(&candidate)?);
    if ca.len() != cb.len() || ca.iter().zip(&cb).any(|(x, y)| x.0 != y.0) {
        return Err(CliError::Mismatch("  delta grids differ".into()));
    }
    let mut gaps = Csv::new(&["delta", "reference", "candidate", "gap"]);
    let mut sup: f64 = 0.0;
    for (x, y) in ca.iter().zip(&cb) {
        let gap = (y.1 - x.1).abs();
        sup = sup.max(gap);
        gaps.row(&[x.0.to_string(), x.1.to_string(), y.1.to_string(), gap.to_string()]);
    }

    let (ha, hb) = (read_headline(&reference)?, read_headline(&candidate)?);
    let peak = rel_error(ha.peak_aoi, hb.peak_aoi);
    let sojourn = rel_error(ha.mean_sojourn, hb.mean_sojourn);
    let ccdf_pass = sup <= ccdf_tol;
    let peak_aoi_pass = peak.is_some_and(|e| e <= peak_tol);
    let pass = ccdf_pass && peak_aoi_pass && a.sojourn_rel_tol.is_none_or(|t| sojourn.is_some_and(|e| e <= t));
    let report = Comparison {
        reference,
        candidate,
        ccdf_sup_gap: sup,
        ccdf_tol,
        ccdf_pass,
        peak_aoi_rel_error: peak,
        peak_aoi_rel_tol: peak_tol,
        peak_aoi_pass,
        mean_sojourn_rel_error: sojourn,
        mean_sojourn_rel_tol: a.sojourn_rel_tol,
        pass,
    };
    let mut run = Run::start(&out, "compare", &a, vec![])?;
    run.write_text("gaps.csv", &gaps.into_string())?;
    run.write_json("comparison.json", &report)?;
    run.finish()?;
    println!(
        "ccdf sup gap {sup:.4} (tol {ccdf_tol}), peak AoI rel error {} (tol {peak_tol}): {}",
        opt_cell(peak),
        if pass { "pass" } else { "fail" }
    );
    if pass {
        Ok(())
    } else {
        Err(CliError::Disagree)
    }
}

//! The five subcommands: build, steady, evolve, metric, verify.
//!
//! Every command resolves its configuration up front, validates it, writes
//! deterministic artifacts into the output directory, and prints a short
//! human summary to stdout. All data of record lives in the files, never on
//! stdout.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use chtn::constants::{chtn_action, diffusion_coefficient, PhysicalConstants};
use chtn::dynamics::{
    closed_form_ghosts, closed_form_steady, evolve_to_steady_observed, gershgorin_substeps,
    random_field, residual, steady_via_kernel, steady_via_relaxation, DistributionField,
};
use chtn::io::{
    to_json_pretty, write_field_csv, write_metric_csv, write_residual_csv, NetworkDocument,
};
use chtn::laplacian::{
    assemble_operator, incidence_assemble, reconcile, DofIndex, EdgeMultisetSpec, GhostValues,
    OperatorMatrix,
};
use chtn::metric::{compare_ads2, induced_metric, poincare_field, DeviationReport};
use chtn::network::{Network, RadialBc, Site, SpeciesId};
use chtn::rng::Lcg64;
use chtn::{tolerances, Error, Real, Result};

use crate::config::{Route, RunConfig};

fn ensure_out_dir(cfg: &RunConfig) -> Result<PathBuf> {
    fs::create_dir_all(&cfg.out)?;
    Ok(cfg.out.clone())
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    fs::write(dir.join(name), text)?;
    Ok(())
}

fn write_json_file<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    write_text(dir, name, &to_json_pretty(value)?)
}

fn write_field_file(dir: &Path, name: &str, network: &Network, field: &DistributionField<Real>) -> Result<()> {
    let mut buf = Vec::new();
    write_field_csv(&mut buf, network, field)?;
    fs::write(dir.join(name), buf)?;
    Ok(())
}

/// Ghost boundary data for operators that reference ghost layers: the
/// analytic profile continued one layer below and above.
fn boundary_ghosts(
    cfg: &RunConfig,
    network: &Network,
    op: &OperatorMatrix,
) -> Result<Option<GhostValues<Real>>> {
    if op.has_ghost_rows() {
        Ok(Some(closed_form_ghosts(network, cfg.base, cfg.sign_order)?))
    } else {
        Ok(None)
    }
}

#[derive(Debug, Serialize)]
struct BuildSummary {
    site_count: usize,
    dof_count: usize,
    pixel_area: usize,
    chtn_action: f64,
    kappa: f64,
}

pub fn cmd_build(cfg: &RunConfig, emit_operator: bool, reconcile_flag: bool) -> Result<i32> {
    let network = cfg.build_network()?;
    let dir = ensure_out_dir(cfg)?;
    write_json_file(&dir, "network.json", &NetworkDocument::new(&network))?;
    let summary = BuildSummary {
        site_count: network.site_count(),
        dof_count: network.dof_count(),
        pixel_area: network.pixel_area(),
        chtn_action: chtn_action(network.pixel_area() as f64, &cfg.constants)?,
        kappa: cfg.kappa_value(),
    };
    write_json_file(&dir, "build_summary.json", &summary)?;
    if emit_operator {
        let op = assemble_operator(&network)?;
        write_text(&dir, "operator.txt", &op.to_triplets())?;
    }
    if reconcile_flag {
        // The incidence construction carries no ghost layers, so the
        // comparison runs on the truncated twin of the configured lattice.
        let mut twin_config = cfg.network.clone();
        twin_config.radial_bc = RadialBc::Truncated;
        let twin = chtn::network::build_network(twin_config)?;
        let authoritative = assemble_operator(&twin)?;
        let incidence = incidence_assemble(&twin, &EdgeMultisetSpec::default())?;
        let report = reconcile(&twin, &incidence, &authoritative)?;
        write_json_file(&dir, "reconciliation.json", &report)?;
        println!(
            "reconciliation: {} of {} rows match up to scale",
            report.matching, report.dimension
        );
    }
    println!(
        "built network: {} sites, {} dofs, area {}, action {}",
        summary.site_count, summary.dof_count, summary.pixel_area, summary.chtn_action
    );
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SteadyReportDoc {
    route: Route,
    converged: bool,
    iterations: u64,
    final_residual: f64,
    kappa: f64,
    substeps: Option<u32>,
    kernel_dimension: Option<usize>,
    tick: u64,
}

pub fn cmd_steady(cfg: &RunConfig) -> Result<i32> {
    let network = cfg.build_network()?;
    let op = assemble_operator(&network)?;
    let ghosts = boundary_ghosts(cfg, &network, &op)?;
    let kappa = cfg.kappa_value();
    let (field, history, iterations, substeps, kernel_dimension) = match cfg.route {
        Route::ClosedForm => {
            let field = closed_form_steady(&network, cfg.base, cfg.sign_order)?;
            let r = residual(&op, &field, ghosts.as_ref())?;
            (field, vec![r], 0, None, None)
        }
        Route::Relax => {
            let substeps = cfg
                .substeps
                .unwrap_or_else(|| gershgorin_substeps(&op, kappa));
            let (field, report) = steady_via_relaxation(
                &op,
                ghosts.as_ref(),
                kappa,
                cfg.tol,
                cfg.max_ticks,
                Some(substeps),
                cfg.seed,
            )?;
            (
                field,
                report.residual_history,
                report.iterations,
                Some(substeps),
                None,
            )
        }
        Route::Kernel => {
            let (field, diagnostics) =
                steady_via_kernel(&op, ghosts.as_ref(), tolerances::KERNEL_SVD_TOL)?;
            let r = residual(&op, &field, ghosts.as_ref())?;
            (field, vec![r], 0, None, Some(diagnostics.null_dimension))
        }
    };
    let final_residual = *history.last().expect("history is never empty");
    let report = SteadyReportDoc {
        route: cfg.route,
        converged: final_residual <= cfg.tol,
        iterations,
        final_residual,
        kappa,
        substeps,
        kernel_dimension,
        tick: field.tick,
    };
    let dir = ensure_out_dir(cfg)?;
    write_field_file(&dir, "field.csv", &network, &field)?;
    let mut buf = Vec::new();
    write_residual_csv(&mut buf, &history)?;
    fs::write(dir.join("residual_history.csv"), buf)?;
    write_json_file(&dir, "steady_report.json", &report)?;
    println!(
        "steady ({}): converged {} after {} ticks, residual {:e}",
        cfg.route.label(),
        report.converged,
        report.iterations,
        report.final_residual
    );
    Ok(0)
}

#[derive(Debug, Serialize)]
struct SnapshotEntry {
    tick: u64,
    file: String,
}

#[derive(Debug, Serialize)]
struct EvolveReportDoc {
    converged: bool,
    iterations: u64,
    final_residual: f64,
    kappa: f64,
    substeps: u32,
    seed: u64,
    snapshot_every: u64,
    snapshots: Vec<SnapshotEntry>,
}

pub fn cmd_evolve(cfg: &RunConfig) -> Result<i32> {
    let network = cfg.build_network()?;
    let op = assemble_operator(&network)?;
    let ghosts = boundary_ghosts(cfg, &network, &op)?;
    let kappa = cfg.kappa_value();
    let substeps = cfg
        .substeps
        .unwrap_or_else(|| gershgorin_substeps(&op, kappa));
    let dir = ensure_out_dir(cfg)?;
    let start = random_field(op.dimension(), cfg.seed);

    let mut snapshots: Vec<SnapshotEntry> = Vec::new();
    let mut snapshot_error: Option<Error> = None;
    let observe = |field: &DistributionField<Real>, _r: Real| {
        if !field.tick.is_multiple_of(cfg.snapshot_every) || snapshot_error.is_some() {
            return;
        }
        let name = format!("snapshot_{:06}.csv", field.tick);
        match write_field_file(&dir, &name, &network, field) {
            Ok(()) => snapshots.push(SnapshotEntry {
                tick: field.tick,
                file: name,
            }),
            Err(e) => snapshot_error = Some(e),
        }
    };
    let (field, report) = evolve_to_steady_observed(
        start,
        &op,
        ghosts.as_ref(),
        kappa,
        cfg.tol,
        cfg.max_ticks,
        substeps,
        observe,
    )?;
    if let Some(e) = snapshot_error {
        return Err(e);
    }
    if snapshots.last().map(|s| s.tick) != Some(field.tick) {
        let name = format!("snapshot_{:06}.csv", field.tick);
        write_field_file(&dir, &name, &network, &field)?;
        snapshots.push(SnapshotEntry {
            tick: field.tick,
            file: name,
        });
    }
    let mut buf = Vec::new();
    write_residual_csv(&mut buf, &report.residual_history)?;
    fs::write(dir.join("residual_history.csv"), buf)?;
    let doc = EvolveReportDoc {
        converged: report.converged,
        iterations: report.iterations,
        final_residual: report.final_residual,
        kappa,
        substeps,
        seed: cfg.seed,
        snapshot_every: cfg.snapshot_every,
        snapshots,
    };
    write_json_file(&dir, "evolve_report.json", &doc)?;
    println!(
        "evolve: converged {} after {} ticks, residual {:e}, {} snapshots",
        doc.converged,
        doc.iterations,
        doc.final_residual,
        doc.snapshots.len()
    );
    Ok(0)
}

pub fn cmd_metric(cfg: &RunConfig, field_path: Option<PathBuf>) -> Result<i32> {
    let network = cfg.build_network()?;
    let path = field_path.unwrap_or_else(|| cfg.out.join("field.csv"));
    let text = fs::read_to_string(&path).map_err(|e| {
        Error::Config(format!("cannot read field CSV {}: {e}", path.display()))
    })?;
    let records = chtn::io::read_field_csv::<Real, _>(text.as_bytes())?;
    let field = chtn::io::field_from_records(&network, &records)?;
    let metric = induced_metric(&field, &network)?;
    let poincare = poincare_field(&metric, network.config().lattice_constant)?;
    let report = compare_ads2(&poincare);
    let dir = ensure_out_dir(cfg)?;
    let mut buf = Vec::new();
    write_metric_csv(&mut buf, &metric, &poincare)?;
    fs::write(dir.join("metric.csv"), buf)?;
    write_json_file(&dir, "deviations.json", &report)?;
    println!(
        "metric: {} interior sites, max deviations xx {:e}, rr {:e}, xr {:e}",
        report.sites, report.dev_xx, report.dev_rr, report.dev_xr
    );
    Ok(0)
}

#[derive(Debug, Serialize)]
struct CriterionResult {
    id: &'static str,
    name: &'static str,
    passed: bool,
    details: String,
}

#[derive(Debug, Serialize)]
struct VerifyDocument {
    passed: bool,
    criteria: Vec<CriterionResult>,
}

/// Maximum relative pointwise difference after rescaling `candidate` to
/// match `reference` at the anchor degree of freedom.
fn normalized_disagreement(
    reference: &DistributionField<Real>,
    candidate: &DistributionField<Real>,
    anchor: usize,
) -> Real {
    let scale = reference.values[anchor] / candidate.values[anchor];
    let norm = reference
        .values
        .iter()
        .fold(0.0_f64, |a, v| a.max(v.abs()));
    reference
        .values
        .iter()
        .zip(&candidate.values)
        .fold(0.0_f64, |worst, (r, c)| {
            worst.max((c * scale - r).abs() / norm)
        })
}

fn kappa_criterion(cfg: &RunConfig) -> CriterionResult {
    let target = 1.0 / (std::f64::consts::PI * std::f64::consts::PI);
    let mut worst = (diffusion_coefficient(&cfg.constants) - target).abs() / target;
    let mut rng = Lcg64::new(cfg.seed);
    let draw = |rng: &mut Lcg64| 10f64.powf(6.0 * (rng.next_unit() - 0.5));
    for _ in 0..100 {
        let pc = PhysicalConstants {
            c: draw(&mut rng),
            hbar: draw(&mut rng),
            ell_p: draw(&mut rng),
            r_ads: draw(&mut rng),
        };
        let rel = (diffusion_coefficient(&pc) - target).abs() / target;
        worst = worst.max(rel);
    }
    CriterionResult {
        id: "kappa-derivation",
        name: "update coefficient derives to 1/pi^2 for randomized constants",
        passed: worst <= tolerances::KAPPA_REL_TOL,
        details: format!("worst relative error {worst:e} over 101 constant sets"),
    }
}

fn annihilation_criterion(
    cfg: &RunConfig,
    network: &Network,
    op: &OperatorMatrix,
    ghosts: Option<&GhostValues<Real>>,
) -> Result<(CriterionResult, DistributionField<Real>)> {
    let field = closed_form_steady(network, cfg.base, cfg.sign_order)?;
    let r = residual(op, &field, ghosts)?;
    Ok((
        CriterionResult {
            id: "stencil-annihilation",
            name: "analytic steady state is annihilated exactly",
            passed: r == 0.0,
            details: format!("relative residual {r:e}"),
        },
        field,
    ))
}

fn route_agreement_criterion(
    cfg: &RunConfig,
    network: &Network,
    op: &OperatorMatrix,
    ghosts: Option<&GhostValues<Real>>,
    closed: &DistributionField<Real>,
) -> Result<(CriterionResult, Option<DistributionField<Real>>)> {
    let kappa = cfg.kappa_value();
    let anchor_site = Site::new(0, 1.min(network.depth() - 1));
    let anchor = network.flat_dof(DofIndex::new(anchor_site, SpeciesId::UD))?;
    let relax = steady_via_relaxation(
        op,
        ghosts,
        kappa,
        cfg.tol,
        cfg.max_ticks,
        cfg.substeps,
        cfg.seed,
    );
    let kernel = steady_via_kernel(op, ghosts, tolerances::KERNEL_SVD_TOL);
    let mut relaxed_field = None;
    let (passed, details) = match (relax, kernel) {
        (Ok((relaxed, report)), Ok((kernel_field, diagnostics))) => {
            let relax_diff = normalized_disagreement(closed, &relaxed, anchor);
            let kernel_diff = normalized_disagreement(closed, &kernel_field, anchor);
            let passed = report.converged
                && relax_diff <= tolerances::ROUTE_AGREEMENT_REL_TOL
                && kernel_diff <= tolerances::ROUTE_AGREEMENT_REL_TOL;
            relaxed_field = Some(relaxed);
            (
                passed,
                format!(
                    "relaxation converged {} in {} ticks (residual {:e}), disagreement vs \
                     analytic: relax {relax_diff:e}, kernel {kernel_diff:e} \
                     (null dimension {})",
                    report.converged,
                    report.iterations,
                    report.final_residual,
                    diagnostics.null_dimension
                ),
            )
        }
        (relax, kernel) => {
            let mut notes = Vec::new();
            match relax {
                Ok((relaxed, report)) => {
                    notes.push(format!(
                        "relaxation converged {} (residual {:e})",
                        report.converged, report.final_residual
                    ));
                    relaxed_field = Some(relaxed);
                }
                Err(Error::Unstable {
                    tick,
                    residual,
                    min_residual,
                }) => {
                    // Instability is an operational failure of the run, not
                    // a verdict on the criteria.
                    return Err(Error::Unstable {
                        tick,
                        residual,
                        min_residual,
                    });
                }
                Err(e) => notes.push(format!("relaxation failed: {e}")),
            }
            match kernel {
                Ok(_) => {}
                Err(e) => notes.push(format!("kernel route failed: {e}")),
            }
            (false, notes.join("; "))
        }
    };
    Ok((
        CriterionResult {
            id: "route-agreement",
            name: "relaxation and kernel routes match the analytic steady state",
            passed,
            details,
        },
        relaxed_field,
    ))
}

fn metric_deviations(
    network: &Network,
    field: &DistributionField<Real>,
) -> Result<DeviationReport<Real>> {
    let metric = induced_metric(field, network)?;
    let poincare = poincare_field(&metric, network.config().lattice_constant)?;
    Ok(compare_ads2(&poincare))
}

fn metric_exactness_criterion(
    network: &Network,
    closed: &DistributionField<Real>,
) -> CriterionResult {
    match metric_deviations(network, closed) {
        Ok(report) => {
            let worst = report.max_deviation();
            CriterionResult {
                id: "metric-exactness",
                name: "induced metric reproduces the hyperbolic half-plane form",
                passed: worst <= tolerances::POINCARE_ABS_TOL,
                details: format!(
                    "max deviations over {} sites: xx {:e}, rr {:e}, xr {:e}",
                    report.sites, report.dev_xx, report.dev_rr, report.dev_xr
                ),
            }
        }
        Err(e) => CriterionResult {
            id: "metric-exactness",
            name: "induced metric reproduces the hyperbolic half-plane form",
            passed: false,
            details: format!("metric computation failed: {e}"),
        },
    }
}

fn relaxed_metric_criterion(
    network: &Network,
    relaxed: Option<&DistributionField<Real>>,
) -> CriterionResult {
    let (passed, details) = match relaxed {
        Some(field) => match metric_deviations(network, field) {
            Ok(report) => {
                let worst = report.max_deviation();
                (
                    worst <= tolerances::RELAXED_METRIC_TOL,
                    format!(
                        "max deviations over {} sites: xx {:e}, rr {:e}, xr {:e}",
                        report.sites, report.dev_xx, report.dev_rr, report.dev_xr
                    ),
                )
            }
            Err(e) => (false, format!("metric computation failed: {e}")),
        },
        None => (false, "no relaxed field available".to_string()),
    };
    CriterionResult {
        id: "relaxed-metric",
        name: "numerically relaxed field keeps metric deviations small",
        passed,
        details,
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<i32> {
    let network = cfg.build_network()?;
    let op = assemble_operator(&network)?;
    let ghosts = boundary_ghosts(cfg, &network, &op)?;

    let mut criteria = Vec::new();
    criteria.push(kappa_criterion(cfg));
    let (annihilation, closed) =
        annihilation_criterion(cfg, &network, &op, ghosts.as_ref())?;
    criteria.push(annihilation);
    let (agreement, relaxed) =
        route_agreement_criterion(cfg, &network, &op, ghosts.as_ref(), &closed)?;
    criteria.push(agreement);
    criteria.push(metric_exactness_criterion(&network, &closed));
    criteria.push(relaxed_metric_criterion(&network, relaxed.as_ref()));

    let passed = criteria.iter().all(|c| c.passed);
    let doc = VerifyDocument { passed, criteria };
    let dir = ensure_out_dir(cfg)?;
    write_json_file(&dir, "verify.json", &doc)?;
    for c in &doc.criteria {
        println!(
            "{} {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.id,
            c.details
        );
    }
    println!("verify: {}", if passed { "all criteria passed" } else { "FAILED" });
    Ok(if passed { 0 } else { 1 })
}

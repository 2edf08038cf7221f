//! Single runs and refinement studies driven by a [`RunConfig`].

use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::assembly::{assemble, DiscreteSystem, LoadData, QuadratureOptions};
use crate::config::{ExtensionMode, MeshMode, RunConfig};
use crate::convergence::{ConvergenceReport, ErrorRecord};
use crate::error::Result;
use crate::gmls::{full_ball_rule, InnerGridSpec};
use crate::io::{write_file, write_matrix_market};
use crate::kernel::Kernel;
use crate::mesh::{BoxDomain, Mesh, PerturbationSpec};
use crate::norms::{boundary_error_profile, h1_error, l2_error, BoundaryProfile};
use crate::plot::report_svg;
use crate::solve::{solve_system, Solution};
use crate::space::FeField;

/// Bins used for the boundary error profile of every level.
pub const PROFILE_BINS: usize = 10;

/// Everything produced by one mesh level.
pub struct LevelResult {
    pub record: ErrorRecord,
    pub mesh: Mesh,
    pub kernel: Kernel,
    pub options: QuadratureOptions,
    pub system: DiscreteSystem,
    pub solution: Solution,
    pub field: FeField,
    pub profile: BoundaryProfile,
}

pub struct StudyResult {
    /// Coarsest first.
    pub levels: Vec<LevelResult>,
    pub report: ConvergenceReport,
}

/// Where artifacts go.
#[derive(Debug, Clone, Default)]
pub struct OutputOptions {
    pub out_dir: PathBuf,
    /// Matrix Market dump of the finest level's stiffness matrix.
    pub dump_matrix: Option<PathBuf>,
    /// CSV of the finest level's full-ball inner rule.
    pub dump_inner_rule: Option<PathBuf>,
}

pub fn build_mesh(cfg: &RunConfig, h: f64) -> Result<Mesh> {
    let delta = cfg.m as f64 * h;
    let domain = BoxDomain::unit(cfg.dimension, delta, cfg.extension_for(delta))?;
    let mesh = if cfg.dimension == 1 { Mesh::uniform_1d(h, &domain)? } else { Mesh::uniform_2d(h, &domain)? };
    match cfg.mesh {
        MeshMode::Uniform => Ok(mesh),
        MeshMode::Perturbed { epsilon, seed } => mesh.perturbed(&PerturbationSpec::new(epsilon, seed)?),
    }
}

pub fn quadrature_options(cfg: &RunConfig, kernel: &Kernel) -> Result<QuadratureOptions> {
    Ok(QuadratureOptions {
        outer_points: cfg.outer_points(),
        body_points: cfg.body_points(),
        inner: InnerGridSpec::new(cfg.inner_points_per_radius(), kernel.horizon(), cfg.dimension)?,
    })
}

fn elapsed_ms(cfg: &RunConfig, start: Instant) -> f64 {
    if cfg.record_timings {
        start.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

/// Mesh, kernel, assembly, solve and error evaluation for one `h`.
pub fn run_level(cfg: &RunConfig, h: f64) -> Result<LevelResult> {
    cfg.validate()?;
    let case = cfg.case();
    let delta = cfg.m as f64 * h;
    let mesh = build_mesh(cfg, h).map_err(|e| e.at("mesh"))?;
    let kernel = cfg.kernel(delta).map_err(|e| e.at("kernel"))?;
    let options = quadrature_options(cfg, &kernel).map_err(|e| e.at("quadrature"))?;

    let start = Instant::now();
    let system = assemble(&mesh, &kernel, &options, &LoadData::from_case(&case)).map_err(|e| e.at("assembly"))?;
    let assembly_ms = elapsed_ms(cfg, start);

    let start = Instant::now();
    let solution = solve_system(&system).map_err(|e| e.at("solve"))?;
    let solve_ms = elapsed_ms(cfg, start);

    let field = FeField::reconstruct(&mesh, &solution.values, |p| case.boundary(p));
    let points = cfg.error_points();
    let l2 = l2_error(&field, &case, &mesh, points).map_err(|e| e.at("errors"))?;
    let h1 = h1_error(&field, &case, &mesh, points).map_err(|e| e.at("errors"))?;
    let profile = boundary_error_profile(&field, &case, &mesh, PROFILE_BINS).map_err(|e| e.at("errors"))?;
    let record = ErrorRecord { h, delta, m: cfg.m, dofs: mesh.num_interior(), l2, h1, assembly_ms, solve_ms };
    Ok(LevelResult { record, mesh, kernel, options, system, solution, field, profile })
}

/// Runs every configured level in order, coarsest first.
pub fn run_study(cfg: &RunConfig) -> Result<StudyResult> {
    cfg.validate()?;
    let levels = cfg.mesh_sizes().into_iter().map(|h| run_level(cfg, h)).collect::<Result<Vec<_>>>()?;
    let report = ConvergenceReport::new(levels.iter().map(|l| l.record.clone()).collect()).map_err(|e| e.at("fit"))?;
    Ok(StudyResult { levels, report })
}

pub fn plot_title(cfg: &RunConfig) -> String {
    let te = match cfg.extension {
        ExtensionMode::Zero => "0",
        ExtensionMode::Delta => "delta",
    };
    let mesh = match cfg.mesh {
        MeshMode::Uniform => "uniform".to_string(),
        MeshMode::Perturbed { epsilon, .. } => format!("perturbed eps={epsilon}"),
    };
    format!("{} {} m={} t_e={te} {mesh}", cfg.case, cfg.kernel_kind().name(), cfg.m)
}

pub fn solution_file_name(h: f64) -> String {
    format!("solution_h{h}.csv")
}

/// Writes `report.csv`, `convergence.svg`, per-level dumps and the optional
/// matrix and inner-rule dumps. Returns the files written, in order.
pub fn write_artifacts(cfg: &RunConfig, study: &StudyResult, out: &OutputOptions) -> Result<Vec<PathBuf>> {
    let tag = |e: crate::Error| e.at("output");
    let mut written = Vec::new();
    let mut emit = |path: PathBuf, body: &dyn Fn(&mut dyn std::io::Write) -> Result<()>| -> Result<()> {
        write_file(&path, |w| body(w)).map_err(tag)?;
        written.push(path);
        Ok(())
    };
    emit(out.out_dir.join("report.csv"), &|w| study.report.write_csv(w))?;
    let svg = report_svg(&plot_title(cfg), &study.report).map_err(tag)?;
    emit(out.out_dir.join("convergence.svg"), &|w| Ok(w.write_all(svg.as_bytes())?))?;
    for level in &study.levels {
        if cfg.dump_solutions {
            emit(out.out_dir.join(solution_file_name(level.record.h)), &|w| level.field.write_csv(&level.mesh, w))?;
        }
        if cfg.dump_mesh {
            emit(out.out_dir.join(format!("mesh_h{}.csv", level.record.h)), &|w| level.mesh.write_csv(w))?;
        }
    }
    let finest = study.levels.last().expect("validated configs have at least one level");
    if let Some(path) = &out.dump_matrix {
        emit(path.clone(), &|w| write_matrix_market(&finest.system.matrix, w))?;
    }
    if let Some(path) = &out.dump_inner_rule {
        let rule = full_ball_rule(&finest.kernel, &finest.options.inner).map_err(|e| e.at("quadrature"))?;
        emit(path.clone(), &|w| rule.write_csv(cfg.dimension, w))?;
    }
    Ok(written)
}

/// Output directory: the explicit override, else the config's, else the working directory.
pub fn resolve_out_dir(cfg: &RunConfig, cli: Option<&Path>) -> PathBuf {
    cli.map(Path::to_path_buf).or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("."))
}

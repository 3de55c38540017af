#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use polyrobin::classify::{self, Kind, VertexReport};
use polyrobin::concavity::{self, ConcavityReport, SamplingOptions};
use polyrobin::cone_harmonics::{self, Sector};
use polyrobin::fem::{self, Field};
use polyrobin::polytope::{hausdorff_distance, Polytope, DEFAULT_ACTIVE_TOL};
use polyrobin::pruefer::{self, LegendreProblem};
use polyrobin::{io as pio, mesh2d, Error, Mesh64, Polytope64};

const MAX_REFINE: usize = 8;

const EXIT_HELP: &str = "\
Exit codes:
   0  success (concavity: no certificate)
  10  concavity certificate found
   2  command-line usage error
   3  invalid configuration or parameter
   4  unreadable or malformed input file
   5  invalid geometry (unbounded, empty, degenerate, wrong dimension)
   6  numerical failure (factorisation, eigensolver, ODE shooting)
   7  corner analysis precondition failed (radius, mesh too coarse, sector)
   8  field not admissible for the requested test (non-positive for log mode)
   1  internal error

Environment:
  POLYROBIN_THREADS  maximum worker threads (default: all cores)";

#[derive(Parser)]
#[command(name = "polyrobin", version, about = "Robin ground states and concavity certificates on convex polytopes", after_help = EXIT_HELP)]
struct Cli {
    /// Offset into the low-discrepancy sample sequence.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct MeshArgs {
    /// Target mesh size (longest edge).
    #[arg(long, default_value_t = 0.05)]
    h: f64,
    /// Extra uniform refinements after meshing (at most 8).
    #[arg(long, default_value_t = 0)]
    refine: usize,
    /// Grade the mesh towards obtuse vertices with the radial power p.
    #[arg(long)]
    grade: Option<f64>,
    /// Write the mesh as OFF plus a `.tags` sidecar.
    #[arg(long)]
    export_mesh: Option<PathBuf>,
}

#[derive(Args)]
struct DomainArgs {
    /// Domain JSON: {"dim": d, "halfspaces": [{"normal": [..], "offset": b}]}.
    domain: PathBuf,
    /// Relative tolerance (times the diameter) for active constraints.
    #[arg(long, default_value_t = DEFAULT_ACTIVE_TOL)]
    active_tol: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Circumsolid / product / consistent-normals classification.
    Classify {
        #[command(flatten)]
        domain: DomainArgs,
    },
    /// Neumann perturbation problem Δv + μ = 0, ∂_ν v = −1.
    Perturbation {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Write the field as CSV `node_index,x,y,value`.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Two lowest Robin eigenpairs at one α.
    Robin {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long)]
        alpha: f64,
        /// Write the ground state as CSV `node_index,x,y,value`.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Eigenvalues over an ascending list of α, as CSV.
    Sweep {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// CSV destination (default: stdout).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sector expansion of the perturbation field at a polygon vertex.
    Corner {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Vertex index in counter-clockwise boundary order.
        #[arg(long)]
        vertex: usize,
        #[arg(long, default_value_t = 4)]
        modes: usize,
        /// Sampling radius; must not exceed the cone radius.
        #[arg(long)]
        radius: f64,
    },
    /// Search for midpoint witnesses against concavity of a field.
    Concavity {
        /// Field CSV `node_index,x,y,value`.
        field: PathBuf,
        /// OFF mesh of the field (default: the field path with extension `off`).
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = ModeArg::Plain)]
        mode: ModeArg,
        /// Superlevel threshold, or `auto` for the best level.
        #[arg(long, default_value = "auto")]
        c: String,
        /// Same field on a refined mesh; enables the stability check.
        #[arg(long)]
        refined: Option<PathBuf>,
        /// Mesh of the refined field (default: its path with extension `off`).
        #[arg(long)]
        refined_mesh: Option<PathBuf>,
        /// Interior sample points.
        #[arg(long, default_value_t = 256)]
        samples: usize,
        /// Tolerance constant in c_tol·osc(f)·(h/D)².
        #[arg(long, default_value_t = 2.0)]
        c_tol: f64,
    },
    /// Prüfer-angle shooting for the λ = 2d Legendre-type equation, as CSV.
    Pruefer {
        #[arg(long)]
        d: usize,
        /// A single μ or a range `a..b` (grid spacing `--grid-step`).
        #[arg(long, conflicts_with = "scan")]
        mu: Option<String>,
        /// Grid `a:b:step`.
        #[arg(long)]
        scan: Option<String>,
        #[arg(long, default_value_t = 0.05)]
        grid_step: f64,
        /// RK4 step in s.
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        /// Truncation S of the s-line.
        #[arg(long, default_value_t = 30.0)]
        s_max: f64,
        /// Also write the localised admissible μ as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Radial Robin ground state on a ball.
    Ball {
        #[arg(long)]
        d: usize,
        #[arg(long = "R", default_value_t = 1.0)]
        radius: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        /// Write the profile as CSV `r,u,v,w`.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Margins gap·D²/π² − 1 of the fundamental gap bound.
    Gapcheck {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// Run even if the domain is not a product of circumsolids.
        #[arg(long)]
        force: bool,
    },
    /// Refinement study of λ₀(α), optionally on corner-clipped domains.
    Converge {
        #[command(flatten)]
        domain: DomainArgs,
        #[command(flatten)]
        mesh: MeshArgs,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        /// Clip sizes ε (distance cut off along each edge at every vertex).
        #[arg(long, value_delimiter = ',')]
        clip: Vec<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Plain,
    Log,
    Superlevel,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Core(Error),
    At(PathBuf, Error),
}

trait AtPath<T> {
    fn at(self, path: &Path) -> CliResult<T>;
}

impl<T, E: Into<Error>> AtPath<T> for Result<T, E> {
    fn at(self, path: &Path) -> CliResult<T> {
        self.map_err(|e| CliError::At(path.to_path_buf(), e.into()))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Core(Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(Error::Json(e))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Core(Error::Parse(e.to_string()))
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::At(p, e) => write!(f, "{}: {e}", p.display()),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        use Error::*;
        match self {
            CliError::Config(_) => 3,
            CliError::Core(e) | CliError::At(_, e) => match e {
                InvalidParameter(_) => 3,
                Io(_) | Json(_) | Parse(_) => 4,
                UnboundedDomain { .. }
                | EmptyDomain
                | DegenerateInput(_)
                | PointOutsideDomain { .. }
                | DimensionUnsupported { .. }
                | DimensionMismatch { .. }
                | DegenerateTriangle { .. } => 5,
                NotPositiveDefinite { .. }
                | SingularSystem(_)
                | EigensolverNoConvergence { .. }
                | NonpositiveEigenvector { .. }
                | ThetaOutOfRange(_)
                | IntegrationBlowup(_)
                | TruncationTooSmall { .. }
                | RootNotBracketed { .. }
                | NonpositiveSolution { .. } => 6,
                InvalidAngle(_) | DegenerateSector | PointOutsideSector | RadiusTooLarge { .. } | MeshTooCoarse(_) => 7,
                NonpositiveField { .. } => 8,
                InternalInconsistency(_) => 1,
            },
        }
    }
}

type CliResult<T> = Result<T, CliError>;

fn config<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Config(msg.into()))
}

fn emit<S: Serialize>(value: &S) -> CliResult<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn load_domain(args: &DomainArgs) -> CliResult<Polytope64> {
    if !(args.active_tol > 0.0) {
        return config("--active-tol must be positive");
    }
    let p: Polytope64 = pio::read_domain(&args.domain).at(&args.domain)?;
    if args.active_tol == DEFAULT_ACTIVE_TOL {
        Ok(p)
    } else {
        Ok(Polytope::with_tolerance(p.halfspaces().to_vec(), args.active_tol)?)
    }
}

fn build_mesh(p: &Polytope64, args: &MeshArgs) -> CliResult<Mesh64> {
    if !(args.h > 0.0) {
        return config("--h must be positive");
    }
    if args.refine > MAX_REFINE {
        return config(format!("--refine is limited to {MAX_REFINE}"));
    }
    let mut mesh = match args.grade {
        Some(power) if !(power >= 1.0) => return config("--grade must be at least 1"),
        Some(power) => mesh2d::triangulate_graded(p, args.h, power)?,
        None => mesh2d::triangulate(p, args.h)?,
    };
    for _ in 0..args.refine {
        mesh = mesh.refine();
    }
    if let Some(path) = &args.export_mesh {
        pio::export_mesh(&mesh, path).at(path)?;
    }
    Ok(mesh)
}

fn write_field(field: &Field<f64>, path: &Option<PathBuf>) -> CliResult<()> {
    if let Some(path) = path {
        pio::write_field_csv(field, File::create(path).at(path)?).at(path)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct MeshSummary {
    nodes: usize,
    triangles: usize,
    h: f64,
    area: f64,
    perimeter: f64,
}

fn mesh_summary(m: &Mesh64) -> MeshSummary {
    MeshSummary {
        nodes: m.nodes().len(),
        triangles: m.triangles().len(),
        h: m.h(),
        area: m.area(),
        perimeter: m.boundary_length(),
    }
}

#[derive(Serialize)]
struct ClassifyOut<'a> {
    #[serde(flatten)]
    kind: &'a Kind<f64>,
    labels: &'a [String],
    borderline: bool,
    vertices: &'a [VertexReport<f64>],
}

fn cmd_classify(domain: &DomainArgs) -> CliResult<u8> {
    let p = load_domain(domain)?;
    let c = classify::classify(&p)?;
    emit(&ClassifyOut {
        kind: &c.kind,
        labels: &c.labels,
        borderline: c.borderline,
        vertices: &c.vertex_reports,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct PerturbationOut {
    mu: f64,
    residual: f64,
    min: f64,
    max: f64,
    mesh: MeshSummary,
}

fn cmd_perturbation(domain: &DomainArgs, mesh: &MeshArgs, field: &Option<PathBuf>) -> CliResult<u8> {
    let p = load_domain(domain)?;
    let m = build_mesh(&p, mesh)?;
    let summary = mesh_summary(&m);
    let ops = fem::assemble(m)?;
    let v = fem::solve_perturbation(&ops, None)?;
    write_field(&v.field, field)?;
    let values = v.field.values();
    emit(&PerturbationOut {
        mu: v.mu,
        residual: v.residual,
        min: v.field.min(),
        max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mesh: summary,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct RobinOut {
    alpha: f64,
    lambda0: f64,
    lambda1: f64,
    dlambda: f64,
    gap: f64,
    residual: f64,
    iterations: usize,
    mesh: MeshSummary,
}

fn check_alpha(alpha: f64) -> CliResult<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        config(format!("alpha must be finite and non-negative, got {alpha}"))
    }
}

fn cmd_robin(domain: &DomainArgs, mesh: &MeshArgs, alpha: f64, field: &Option<PathBuf>) -> CliResult<u8> {
    check_alpha(alpha)?;
    let p = load_domain(domain)?;
    let m = build_mesh(&p, mesh)?;
    let summary = mesh_summary(&m);
    let ops = fem::assemble(m)?;
    let r = fem::robin_eigensystem(&ops, alpha, 2)?;
    write_field(&r.u0, field)?;
    emit(&RobinOut {
        alpha,
        lambda0: r.lambda0,
        lambda1: r.lambda1,
        dlambda: r.dlambda_dalpha,
        gap: r.gap(),
        residual: r.residual,
        iterations: r.iterations,
        mesh: summary,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct SweepRow {
    alpha: f64,
    lambda0: f64,
    lambda1: f64,
    dlambda: f64,
    gap: f64,
    residual: f64,
}

fn cmd_sweep(domain: &DomainArgs, mesh: &MeshArgs, alphas: &[f64], out: &Option<PathBuf>) -> CliResult<u8> {
    for &a in alphas {
        check_alpha(a)?;
    }
    if alphas.windows(2).any(|w| !(w[0] < w[1])) {
        return config("--alphas must be strictly ascending");
    }
    let p = load_domain(domain)?;
    let ops = fem::assemble(build_mesh(&p, mesh)?)?;
    let sweep = fem::alpha_sweep(&ops, alphas)?;
    let sink: Box<dyn Write> = match out {
        Some(path) => Box::new(File::create(path).at(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = csv::Writer::from_writer(sink);
    for r in &sweep.results {
        w.serialize(SweepRow {
            alpha: r.alpha,
            lambda0: r.lambda0,
            lambda1: r.lambda1,
            dlambda: r.dlambda_dalpha,
            gap: r.gap(),
            residual: r.residual,
        })?;
    }
    w.flush()?;
    if !sweep.monotone {
        eprintln!("warning: lambda0 is not monotone in alpha; check the mesh resolution");
    }
    Ok(0)
}

#[derive(Serialize)]
struct CornerDiagnostics {
    sample_radius: f64,
    cone_radius: f64,
    two_radius_spread: f64,
    f_half: Vec<f64>,
    critical: Vec<bool>,
    mu: f64,
    linear_part: [f64; 2],
    vertex_value: f64,
    mesh: MeshSummary,
}

#[derive(Serialize)]
struct CornerOut {
    vertex: [f64; 2],
    theta0: f64,
    bisector: [f64; 2],
    beta: Vec<f64>,
    f: Vec<f64>,
    diagnostics: CornerDiagnostics,
}

fn cmd_corner(domain: &DomainArgs, mesh: &MeshArgs, vertex: usize, modes: usize, radius: f64) -> CliResult<u8> {
    if modes == 0 {
        return config("--modes must be at least 1");
    }
    let p = load_domain(domain)?;
    let sector = Sector::at_polygon_vertex(&p, vertex)?;
    let cone = cone_harmonics::cone_radius(&p, &sector.vertex);
    let m = build_mesh(&p, mesh)?;
    let summary = mesh_summary(&m);
    let ops = fem::assemble(m)?;
    let v = fem::solve_perturbation(&ops, None)?;
    let e = cone_harmonics::corner_expansion(&v.field, &sector, radius, modes, cone)?;
    emit(&CornerOut {
        vertex: sector.vertex,
        theta0: sector.theta0,
        bisector: sector.bisector,
        beta: e.coefficients.iter().map(|c| c.beta).collect(),
        f: e.coefficients.iter().map(|c| c.f).collect(),
        diagnostics: CornerDiagnostics {
            sample_radius: e.sample_radius,
            cone_radius: cone,
            two_radius_spread: e.two_radius_spread,
            f_half: e.coefficients.iter().map(|c| c.f_half).collect(),
            critical: e.coefficients.iter().map(|c| c.beta > 1.0 && c.beta < 2.0).collect(),
            mu: e.mu,
            linear_part: e.linear_part,
            vertex_value: e.constant,
            mesh: summary,
        },
    })?;
    Ok(0)
}

fn load_field(field: &Path, mesh: &Option<PathBuf>) -> CliResult<Field<f64>> {
    let mesh_path = mesh.clone().unwrap_or_else(|| field.with_extension("off"));
    let m: Mesh64 = pio::import_mesh(&mesh_path).at(&mesh_path)?;
    let rows = pio::read_field_rows(File::open(field).at(field)?).at(field)?;
    pio::field_from_rows(Arc::new(m), &rows).at(field)
}

#[derive(Serialize)]
struct ConcavityOut {
    certificate: bool,
    /// A report without violations is not evidence of concavity.
    note: &'static str,
    report: ConcavityReport<f64>,
    refined: Option<ConcavityReport<f64>>,
}

fn run_check(
    field: &Field<f64>,
    mode: ModeArg,
    level: Option<f64>,
    opts: &SamplingOptions<f64>,
) -> CliResult<ConcavityReport<f64>> {
    Ok(match (mode, level) {
        (ModeArg::Plain, _) => concavity::check_midpoint_concavity(field, opts),
        (ModeArg::Log, _) => concavity::check_log_concavity(field, opts)?,
        (ModeArg::Superlevel, Some(c)) => concavity::check_superlevel_convexity(field, c, opts),
        (ModeArg::Superlevel, None) => concavity::check_superlevel_auto(field, opts),
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_concavity(
    field: &Path,
    mesh: &Option<PathBuf>,
    mode: ModeArg,
    c: &str,
    refined: &Option<PathBuf>,
    refined_mesh: &Option<PathBuf>,
    samples: usize,
    c_tol: f64,
    seed: u64,
) -> CliResult<u8> {
    if !(c_tol >= 0.0) {
        return config("--c-tol must be non-negative");
    }
    let level = match c {
        "auto" => None,
        s => match s.parse::<f64>() {
            Ok(v) if v.is_finite() => Some(v),
            _ => return config(format!("--c expects a number or `auto`, got `{s}`")),
        },
    };
    let opts = SamplingOptions {
        n_samples: samples,
        seed,
        c_tol,
        ..SamplingOptions::default()
    };
    let f = load_field(field, mesh)?;
    let mut report = run_check(&f, mode, level, &opts)?;
    for w in &report.violations {
        if concavity::reverify(&f, report.mode, w) != Some(w.gap) {
            return Err(CliError::Core(Error::InternalInconsistency("witness failed re-evaluation".into())));
        }
    }
    let refined_report = match refined {
        Some(path) => {
            let g = load_field(path, refined_mesh)?;
            // The refined run uses the same level so the gaps are comparable.
            let fixed = match report.mode {
                concavity::Mode::Superlevel { c } => Some(c),
                _ => None,
            };
            let r = run_check(&g, mode, fixed, &opts)?;
            report.mark_stability(&r);
            Some(r)
        }
        None => None,
    };
    let certificate = if refined_report.is_some() {
        report.is_certificate()
    } else {
        report.found_violation()
    };
    emit(&ConcavityOut {
        certificate,
        note: "violations certify non-concavity; an empty list is not a proof of concavity",
        report,
        refined: refined_report,
    })?;
    Ok(if certificate { 10 } else { 0 })
}

fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    match s.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => config(format!("bad {what} `{s}`")),
    }
}

fn grid(a: f64, b: f64, step: f64) -> CliResult<Vec<f64>> {
    if !(step > 0.0) || !(b >= a) {
        return config("grid needs a <= b and a positive step");
    }
    let n = ((b - a) / step + 1e-9).floor() as usize;
    if n > 1_000_000 {
        return config("grid has more than 10^6 points");
    }
    Ok((0..=n).map(|i| a + step * i as f64).collect())
}

#[derive(Serialize)]
struct PrueferRow {
    mu: f64,
    sigma_gap: f64,
    crossings: i64,
    admissible: bool,
}

#[allow(clippy::too_many_arguments)]
fn cmd_pruefer(
    d: usize,
    mu: &Option<String>,
    scan: &Option<String>,
    grid_step: f64,
    step: f64,
    s_max: f64,
    json: &Option<PathBuf>,
) -> CliResult<u8> {
    let mus = match (mu, scan) {
        (Some(m), _) if m.contains("..") => {
            let (a, b) = m.split_once("..").unwrap_or_default();
            grid(parse_f64(a, "mu")?, parse_f64(b, "mu")?, grid_step)?
        }
        (Some(m), _) => vec![parse_f64(m, "mu")?],
        (None, Some(s)) => {
            let parts: Vec<&str> = s.split(':').collect();
            if parts.len() != 3 {
                return config("--scan expects a:b:step");
            }
            grid(parse_f64(parts[0], "scan start")?, parse_f64(parts[1], "scan end")?, parse_f64(parts[2], "scan step")?)?
        }
        (None, None) => return config("pass --mu or --scan"),
    };
    if !(step > 0.0) || !(s_max > 0.0) {
        return config("--step and --s-max must be positive");
    }
    let outcomes = if mus.len() == 1 {
        let mut p = LegendreProblem::new(d, mus[0]);
        p.step = step;
        p.s_max = s_max;
        vec![pruefer::pruefer_shoot(&p)?]
    } else {
        let scan = pruefer::admissible_mu_scan_with(d, &mus, step, 1e-7)?;
        if !scan.monotone {
            eprintln!("warning: sigma_gap is not monotone in mu over the grid");
        }
        if let Some(path) = json {
            serde_json::to_writer_pretty(File::create(path).at(path)?, &scan).at(path)?;
        }
        scan.grid
    };
    let mut w = csv::Writer::from_writer(io::stdout().lock());
    for o in outcomes {
        w.serialize(PrueferRow {
            mu: o.mu,
            sigma_gap: o.sigma_gap,
            crossings: o.crossings as i64,
            admissible: o.admissible,
        })?;
    }
    w.flush()?;
    Ok(0)
}

#[derive(Serialize)]
struct BallOut {
    d: usize,
    radius: f64,
    alpha: f64,
    lambda: f64,
    log_concave: bool,
}

fn cmd_ball(d: usize, radius: f64, alpha: f64, samples: usize, csv_path: &Option<PathBuf>) -> CliResult<u8> {
    check_alpha(alpha)?;
    let g = pruefer::ball_ground_state(d, radius, alpha, samples)?;
    if let Some(path) = csv_path {
        let mut w = csv::Writer::from_writer(File::create(path).at(path)?);
        for s in &g.samples {
            w.serialize(s)?;
        }
        w.flush()?;
    }
    emit(&BallOut {
        d,
        radius,
        alpha,
        lambda: g.lambda,
        log_concave: g.log_concave,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct GapEntry {
    alpha: f64,
    lambda0: f64,
    lambda1: f64,
    gap: f64,
    margin: f64,
    flagged: bool,
}

#[derive(Serialize)]
struct GapOut {
    diameter: f64,
    labels: Vec<String>,
    tolerance: f64,
    entries: Vec<GapEntry>,
}

fn cmd_gapcheck(domain: &DomainArgs, mesh: &MeshArgs, alphas: &[f64], force: bool) -> CliResult<u8> {
    const TOL: f64 = 1e-6;
    let p = load_domain(domain)?;
    let c = classify::classify(&p)?;
    if !force && !c.labels.iter().any(|l| l == "product_of_circumsolids") {
        return config("domain is not a product of circumsolids; pass --force to run anyway");
    }
    let mut sorted = alphas.to_vec();
    for &a in &sorted {
        check_alpha(a)?;
    }
    sorted.sort_by(|a, b| a.total_cmp(b));
    sorted.dedup();
    let diameter = p.diameter();
    let ops = fem::assemble(build_mesh(&p, mesh)?)?;
    let sweep = fem::alpha_sweep(&ops, &sorted)?;
    let scale = diameter * diameter / (std::f64::consts::PI * std::f64::consts::PI);
    let entries = sweep
        .results
        .iter()
        .map(|r| {
            let margin = r.gap() * scale - 1.0;
            GapEntry {
                alpha: r.alpha,
                lambda0: r.lambda0,
                lambda1: r.lambda1,
                gap: r.gap(),
                margin,
                flagged: margin < -TOL,
            }
        })
        .collect::<Vec<_>>();
    if entries.iter().any(|e| e.flagged) {
        eprintln!("warning: gap below pi^2/D^2 beyond tolerance; suspect discretisation error");
    }
    emit(&GapOut {
        diameter,
        labels: c.labels,
        tolerance: TOL,
        entries,
    })?;
    Ok(0)
}

#[derive(Serialize)]
struct ClipEntry {
    eps: f64,
    hausdorff: f64,
    study: fem::RefinementStudy<f64>,
}

#[derive(Serialize)]
struct ConvergeOut {
    study: fem::RefinementStudy<f64>,
    clipped: Vec<ClipEntry>,
}

fn cmd_converge(domain: &DomainArgs, mesh: &MeshArgs, alpha: f64, levels: usize, clip: &[f64]) -> CliResult<u8> {
    check_alpha(alpha)?;
    if !(2..=MAX_REFINE).contains(&levels) {
        return config(format!("--levels must lie in 2..={MAX_REFINE}"));
    }
    if mesh.export_mesh.is_some() {
        return config("--export-mesh is not supported by converge");
    }
    let p = load_domain(domain)?;
    let study = fem::refinement_study(build_mesh(&p, mesh)?, alpha, levels)?;
    let mut clipped = Vec::new();
    for &eps in clip {
        let q = p.clip_corners(eps)?;
        clipped.push(ClipEntry {
            eps,
            hausdorff: hausdorff_distance(&p, &q)?,
            study: fem::refinement_study(build_mesh(&q, mesh)?, alpha, levels)?,
        });
    }
    emit(&ConvergeOut { study, clipped })?;
    Ok(0)
}

fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var("POLYROBIN_THREADS") else {
        return Ok(());
    };
    let n: usize = match raw.trim().parse() {
        Ok(n) if n >= 1 => n,
        _ => return config(format!("POLYROBIN_THREADS must be a positive integer, got `{raw}`")),
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn run(cli: Cli) -> CliResult<u8> {
    init_threads()?;
    match &cli.command {
        Command::Classify { domain } => cmd_classify(domain),
        Command::Perturbation { domain, mesh, field } => cmd_perturbation(domain, mesh, field),
        Command::Robin {
            domain,
            mesh,
            alpha,
            field,
        } => cmd_robin(domain, mesh, *alpha, field),
        Command::Sweep {
            domain,
            mesh,
            alphas,
            out,
        } => cmd_sweep(domain, mesh, alphas, out),
        Command::Corner {
            domain,
            mesh,
            vertex,
            modes,
            radius,
        } => cmd_corner(domain, mesh, *vertex, *modes, *radius),
        Command::Concavity {
            field,
            mesh,
            mode,
            c,
            refined,
            refined_mesh,
            samples,
            c_tol,
        } => cmd_concavity(field, mesh, *mode, c, refined, refined_mesh, *samples, *c_tol, cli.seed),
        Command::Pruefer {
            d,
            mu,
            scan,
            grid_step,
            step,
            s_max,
            json,
        } => cmd_pruefer(*d, mu, scan, *grid_step, *step, *s_max, json),
        Command::Ball {
            d,
            radius,
            alpha,
            samples,
            csv,
        } => cmd_ball(*d, *radius, *alpha, *samples, csv),
        Command::Gapcheck {
            domain,
            mesh,
            alphas,
            force,
        } => cmd_gapcheck(domain, mesh, alphas, *force),
        Command::Converge {
            domain,
            mesh,
            alpha,
            levels,
            clip,
        } => cmd_converge(domain, mesh, *alpha, *levels, clip),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Command-line front end over the library: classify level-set domains,
//! evolve meshes to free-boundary minimal surfaces, check integral
//! identities on refinement ladders, run curvature-gap analyses, and emit
//! analytic reference surfaces.
//!
//! Exit codes: 0 success, 2 unusable input (parse, I/O, bad flags), 3 a
//! hypothesis or convergence failure (outputs are still written when the
//! computation itself finished), 4 numerical breakdown.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use fbms_core::domains::{classify, DomainSpec, EllipsoidSpec};
use fbms_core::gap::{
    boundary_convexity, boundary_principal, gap_ball, gap_ellipsoid, jacobi_residual,
    GapError, GapReport,
};
use fbms_core::geometry::compute_geometry;
use fbms_core::identities::{check_identity, IdentityKind, IdentityReport, TestFunction};
use fbms_core::mesh::{load_obj, save_obj, TriMesh};
use fbms_core::reference::{make_reference, ReferenceKind};
use fbms_core::solver::{solve_free_boundary, SolveConfig, SolveError};
use fbms_core::{IdentityError, MeshError};

#[derive(Parser)]
#[command(name = "fbms", version, about = "Free-boundary minimal surface laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Classify a domain: which free-boundary minimal surfaces can it hold?
    Classify(ClassifyArgs),
    /// Evolve a mesh toward a free-boundary minimal surface in a domain.
    Solve(SolveArgs),
    /// Check an integral identity on a ladder of mesh refinements.
    Verify(VerifyArgs),
    /// Run a curvature-gap or boundary analysis on a surface in a domain.
    Gap(GapArgs),
    /// Write an analytic reference surface as OBJ plus a JSON sidecar.
    Reference(ReferenceArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Output directory, created if missing.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Seed for randomized internals; recorded in the run manifest.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Domain spec JSON file.
    spec: PathBuf,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct SolveArgs {
    /// Initial surface mesh (OBJ).
    init: PathBuf,
    /// Domain spec JSON file.
    spec: PathBuf,
    /// Iteration cap.
    #[arg(long, default_value_t = 10_000)]
    max_iters: usize,
    /// Convergence threshold on max |H| * diameter over interior vertices.
    #[arg(long, default_value_t = 1e-3)]
    tol_h: f64,
    /// Convergence threshold on max |<N, Nbar>| over boundary vertices.
    #[arg(long, default_value_t = 1e-2)]
    tol_angle: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct VerifyArgs {
    /// Surface mesh (OBJ) with boundary on the domain wall.
    surface: PathBuf,
    /// Domain spec JSON file.
    spec: PathBuf,
    /// Identity tag: minkowski, fundamental(PHI), homogeneous(DEG),
    /// quadric-laplacian, quadric-combined, rotational-combined,
    /// ball-half(PHI); PHI one of 1, x1, x2, x3, norm-sq, x1x2. A dash may
    /// replace the parentheses: fundamental-x1.
    #[arg(long)]
    identity: String,
    /// Refinement levels, the input mesh included.
    #[arg(long, default_value_t = 3)]
    levels: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct GapArgs {
    /// Surface mesh (OBJ) with boundary on the domain wall.
    surface: PathBuf,
    /// Domain spec JSON file.
    spec: PathBuf,
    /// Check tag: ball-gap, ellipsoid-gap, jacobi, boundary-principal,
    /// boundary-convexity.
    #[arg(long)]
    check: String,
    /// Also write the tested quantity per vertex as CSV.
    #[arg(long)]
    csv: bool,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ReferenceArgs {
    /// Surface kind: equatorial-disk, critical-catenoid, meridian-disk,
    /// cylinder-disk.
    #[arg(long)]
    kind: String,
    /// Vertex rows per direction; the mesh has O(resolution^2) triangles.
    #[arg(long, default_value_t = 64)]
    resolution: usize,
    /// Disk radius (equatorial-disk and cylinder-disk).
    #[arg(long)]
    radius: Option<f64>,
    /// Long semi-axis (meridian-disk).
    #[arg(long)]
    a: Option<f64>,
    /// Short semi-axis (meridian-disk).
    #[arg(long)]
    b: Option<f64>,
    /// Disk height in the cylinder (cylinder-disk).
    #[arg(long)]
    height: Option<f64>,
    #[command(flatten)]
    common: CommonArgs,
}

/// A failed run with its exit code. Input failures abort before outputs;
/// hypothesis failures still write whatever the computation produced.
enum Failure {
    Input(String),
    Hypothesis(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Hypothesis(_) => 3,
            Failure::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Input(m) | Failure::Hypothesis(m) | Failure::Numerical(m) => m,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> Failure {
    Failure::Input(e.to_string())
}

fn numerical_err(e: impl std::fmt::Display) -> Failure {
    Failure::Numerical(e.to_string())
}

fn solve_failure(e: SolveError) -> Failure {
    Failure::Numerical(e.to_string())
}

fn identity_failure(e: IdentityError) -> Failure {
    match e {
        IdentityError::BoundaryOffLevelSet { .. }
        | IdentityError::UnsupportedDomain { .. }
        | IdentityError::NoLevels => Failure::Input(e.to_string()),
        IdentityError::Domain(_) | IdentityError::Geometry(_) | IdentityError::Mesh(_) => {
            Failure::Numerical(e.to_string())
        }
    }
}

fn gap_failure(e: GapError) -> Failure {
    match e {
        GapError::HypothesisUnmet { .. } => Failure::Hypothesis(e.to_string()),
        GapError::BoundaryOffLevelSet { .. }
        | GapError::UnsupportedDomain { .. }
        | GapError::NoBoundary => Failure::Input(e.to_string()),
        GapError::TangentProjectionDegenerate { .. }
        | GapError::Geometry(_)
        | GapError::Domain(_)
        | GapError::Mesh(_) => Failure::Numerical(e.to_string()),
    }
}

/// Everything a run records next to its outputs.
#[derive(Serialize)]
struct RunManifest {
    command: String,
    inputs: Vec<String>,
    domain: Option<serde_json::Value>,
    overrides: serde_json::Value,
    output_dir: String,
    tool_version: String,
    wall_time_seconds: f64,
}

struct ManifestBuilder {
    command: &'static str,
    inputs: Vec<String>,
    domain: Option<serde_json::Value>,
    overrides: serde_json::Value,
    out: PathBuf,
    started: Instant,
}

impl ManifestBuilder {
    fn new(command: &'static str, common: &CommonArgs) -> Self {
        ManifestBuilder {
            command,
            inputs: Vec::new(),
            domain: None,
            overrides: json!({ "seed": common.seed }),
            out: common.out.clone(),
            started: Instant::now(),
        }
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.display().to_string());
    }

    fn domain(&mut self, spec: &DomainSpec) {
        self.domain = serde_json::to_value(spec).ok();
    }

    fn flag(&mut self, key: &str, value: serde_json::Value) {
        self.overrides[key] = value;
    }

    fn write(&self) -> Result<(), Failure> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            inputs: self.inputs.clone(),
            domain: self.domain.clone(),
            overrides: self.overrides.clone(),
            output_dir: self.out.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
        };
        write_json(&self.out.join("manifest.json"), &manifest)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Failure::Input(format!("serialize {}: {e}", path.display())))?;
    fs::write(path, text + "\n")
        .map_err(|e| Failure::Input(format!("write {}: {e}", path.display())))
}

fn ensure_out_dir(dir: &Path) -> Result<(), Failure> {
    fs::create_dir_all(dir)
        .map_err(|e| Failure::Input(format!("create {}: {e}", dir.display())))
}

fn read_spec(path: &Path) -> Result<DomainSpec, Failure> {
    let raw = fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("read {}: {e}", path.display())))?;
    DomainSpec::from_json(&raw).map_err(input_err)
}

fn read_mesh(path: &Path) -> Result<TriMesh, Failure> {
    load_obj(path).map_err(|e| match e {
        MeshError::Io(io) => Failure::Input(format!("read {}: {io}", path.display())),
        other => Failure::Input(other.to_string()),
    })
}

fn main() -> ExitCode {
    configure_threads();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Classify(args) => cmd_classify(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Gap(args) => cmd_gap(args),
        Command::Reference(args) => cmd_reference(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}

/// FBMS_THREADS caps the rayon pool; unset or unparsable means the default.
fn configure_threads() {
    if let Ok(raw) = std::env::var("FBMS_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n >= 1 {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
        }
    }
}

fn cmd_classify(args: ClassifyArgs) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("classify", &args.common);
    manifest.input(&args.spec);
    let spec = read_spec(&args.spec)?;
    manifest.domain(&spec);
    let verdict = classify(&spec).map_err(input_err)?;
    let outcome = serde_json::to_value(verdict.outcome)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default();
    println!("outcome: {outcome}");
    println!("{}", verdict.description);
    println!("rule: {}", verdict.citation);
    ensure_out_dir(&args.common.out)?;
    write_json(&args.common.out.join("verdict.json"), &verdict)?;
    manifest.write()
}

fn cmd_solve(args: SolveArgs) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("solve", &args.common);
    manifest.input(&args.init);
    manifest.input(&args.spec);
    manifest.flag("max_iters", json!(args.max_iters));
    manifest.flag("tol_h", json!(args.tol_h));
    manifest.flag("tol_angle", json!(args.tol_angle));
    let mesh = read_mesh(&args.init)?;
    let spec = read_spec(&args.spec)?;
    manifest.domain(&spec);
    let domain = spec.to_domain().map_err(input_err)?;
    let config = SolveConfig {
        max_iters: args.max_iters,
        tol_h: args.tol_h,
        tol_angle: args.tol_angle,
        ..SolveConfig::default()
    };
    let (final_mesh, report) =
        solve_free_boundary(&mesh, &domain, &config).map_err(solve_failure)?;
    ensure_out_dir(&args.common.out)?;
    save_obj(&final_mesh, &args.common.out.join("final.obj"))
        .map_err(|e| Failure::Input(format!("write final.obj: {e}")))?;
    write_json(&args.common.out.join("report.json"), &report)?;
    manifest.write()?;
    println!(
        "{} after {} iterations: area {:.12}, curvature residual {:.3e}, angle residual {:.3e}",
        if report.converged { "converged" } else { "stopped" },
        report.iterations,
        report.final_area,
        report.residual_h,
        report.residual_angle,
    );
    if report.converged {
        Ok(())
    } else {
        Err(Failure::Hypothesis(format!(
            "did not converge within {} iterations: curvature residual {:.3e} (tol {:.1e}), \
             angle residual {:.3e} (tol {:.1e})",
            report.iterations, report.residual_h, args.tol_h, report.residual_angle, args.tol_angle,
        )))
    }
}

/// Inverse of the identity labels used in reports, plus a dash alias for
/// the parenthesized families so tags stay shell-quoting-free.
fn parse_identity(tag: &str) -> Option<IdentityKind> {
    let tag = tag.trim();
    let inner = |prefix: &str| -> Option<&str> {
        let rest = tag.strip_prefix(prefix)?;
        if let Some(inner) = rest.strip_prefix('(').and_then(|s| s.strip_suffix(')')) {
            Some(inner)
        } else {
            rest.strip_prefix('-')
        }
    };
    if let Some(phi) = inner("fundamental") {
        return TestFunction::parse(phi).map(IdentityKind::Fundamental);
    }
    if let Some(phi) = inner("ball-half") {
        return TestFunction::parse(phi).map(IdentityKind::BallHalf);
    }
    if let Some(deg) = inner("homogeneous") {
        return deg.parse().ok().map(|degree| IdentityKind::Homogeneous { degree });
    }
    match tag {
        "minkowski" => Some(IdentityKind::Minkowski),
        "quadric-laplacian" => Some(IdentityKind::QuadricLaplacian),
        "quadric-combined" => Some(IdentityKind::QuadricCombined),
        "rotational-combined" => Some(IdentityKind::RotationalCombined),
        _ => None,
    }
}

fn print_identity_table(report: &IdentityReport) {
    println!(
        "{:<6} {:>12} {:>16} {:>16} {:>12} {:>12}",
        "level", "h", "lhs", "rhs", "residual", "relative"
    );
    for (i, r) in report.levels.iter().enumerate() {
        println!(
            "{:<6} {:>12.4e} {:>16.8e} {:>16.8e} {:>12.4e} {:>12.4e}",
            i, r.h, r.lhs, r.rhs, r.residual, r.relative_residual
        );
    }
    match report.estimated_order {
        Some(order) => println!("estimated order: {order:.3}"),
        None => println!("estimated order: n/a"),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("verify", &args.common);
    manifest.input(&args.surface);
    manifest.input(&args.spec);
    manifest.flag("identity", json!(args.identity));
    manifest.flag("levels", json!(args.levels));
    let kind = parse_identity(&args.identity)
        .ok_or_else(|| Failure::Input(format!("unknown identity tag `{}`", args.identity)))?;
    let mesh = read_mesh(&args.surface)?;
    let spec = read_spec(&args.spec)?;
    manifest.domain(&spec);
    let domain = spec.to_domain().map_err(input_err)?;
    let report =
        check_identity(kind, &mesh, &domain, args.levels).map_err(identity_failure)?;
    print_identity_table(&report);
    ensure_out_dir(&args.common.out)?;
    write_json(&args.common.out.join("report.json"), &report)?;
    fs::write(args.common.out.join("report.csv"), report.to_csv())
        .map_err(|e| Failure::Input(format!("write report.csv: {e}")))?;
    manifest.write()?;
    if report.hypothesis_met {
        Ok(())
    } else {
        Err(Failure::Hypothesis(format!(
            "minimality hypothesis not met: an interior curvature residual exceeds the gate {:.1e}; \
             the identity is reported but its derivation does not apply",
            report.minimality_gate.unwrap_or(f64::NAN),
        )))
    }
}

fn require_ellipsoid(spec: &DomainSpec) -> Result<EllipsoidSpec, Failure> {
    match spec {
        DomainSpec::Ellipsoid { a, b } => EllipsoidSpec::new(*a, *b).map_err(input_err),
        _ => Err(Failure::Input(
            "this check needs an ellipsoid domain spec".to_string(),
        )),
    }
}

fn cmd_gap(args: GapArgs) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("gap", &args.common);
    manifest.input(&args.surface);
    manifest.input(&args.spec);
    manifest.flag("check", json!(args.check));
    manifest.flag("csv", json!(args.csv));
    let mesh = read_mesh(&args.surface)?;
    let spec = read_spec(&args.spec)?;
    manifest.domain(&spec);
    let geom = compute_geometry(&mesh).map_err(numerical_err)?;
    let report = match args.check.as_str() {
        "ball-gap" => {
            if !matches!(spec, DomainSpec::Ball) {
                return Err(Failure::Input(
                    "ball-gap needs the unit ball domain spec".to_string(),
                ));
            }
            gap_ball(&mesh, &geom)
        }
        "ellipsoid-gap" => gap_ellipsoid(&mesh, &geom, &require_ellipsoid(&spec)?),
        "jacobi" => jacobi_residual(&mesh, &geom),
        "boundary-principal" => {
            let domain = spec.to_domain().map_err(input_err)?;
            boundary_principal(&mesh, &geom, &domain)
        }
        "boundary-convexity" => boundary_convexity(&mesh, &geom, &require_ellipsoid(&spec)?),
        other => {
            return Err(Failure::Input(format!(
                "unknown check tag `{other}`; expected ball-gap, ellipsoid-gap, jacobi, \
                 boundary-principal or boundary-convexity"
            )))
        }
    }
    .map_err(gap_failure)?;
    print_gap_summary(&report);
    ensure_out_dir(&args.common.out)?;
    write_json(&args.common.out.join("report.json"), &report)?;
    if args.csv {
        fs::write(args.common.out.join("per_vertex.csv"), report.per_vertex_csv())
            .map_err(|e| Failure::Input(format!("write per_vertex.csv: {e}")))?;
    }
    manifest.write()?;
    if report.hypothesis_satisfied {
        Ok(())
    } else {
        Err(Failure::Hypothesis(format!(
            "bound violated: {} reaches {:.6e}, above the bound {:.6e}{}",
            report.kind,
            report.max_value,
            report.bound,
            report
                .witness_vertex
                .map(|v| format!(" (witness vertex {v})"))
                .unwrap_or_default(),
        )))
    }
}

fn print_gap_summary(report: &GapReport) {
    println!(
        "{}: max {:.6e} vs bound {:.6e} -> {}",
        report.kind,
        report.max_value,
        report.bound,
        if report.hypothesis_satisfied { "within bound" } else { "violated" },
    );
    if let Some(v) = report.witness_vertex {
        println!("witness vertex: {v}");
    }
    if !report.per_loop.is_empty() {
        println!("boundary loops analyzed: {}", report.per_loop.len());
    }
}

fn cmd_reference(args: ReferenceArgs) -> Result<(), Failure> {
    let mut manifest = ManifestBuilder::new("reference", &args.common);
    manifest.flag("kind", json!(args.kind));
    manifest.flag("resolution", json!(args.resolution));
    let kind = match args.kind.as_str() {
        "equatorial-disk" => ReferenceKind::EquatorialDisk {
            radius: args.radius.unwrap_or(1.0),
        },
        "critical-catenoid" => ReferenceKind::CriticalCatenoid,
        "meridian-disk" => {
            let (a, b) = args.a.zip(args.b).ok_or_else(|| {
                Failure::Input("meridian-disk needs --a and --b semi-axes".to_string())
            })?;
            ReferenceKind::MeridianDisk { a, b }
        }
        "cylinder-disk" => ReferenceKind::CylinderDisk {
            height: args.height.unwrap_or(0.0),
        },
        other => {
            return Err(Failure::Input(format!(
                "unknown reference kind `{other}`; expected equatorial-disk, \
                 critical-catenoid, meridian-disk or cylinder-disk"
            )))
        }
    };
    let (mesh, reference) = make_reference(kind, args.resolution).map_err(input_err)?;
    ensure_out_dir(&args.common.out)?;
    let stem = args.kind.as_str();
    save_obj(&mesh, &args.common.out.join(format!("{stem}.obj")))
        .map_err(|e| Failure::Input(format!("write {stem}.obj: {e}")))?;
    fs::write(
        args.common.out.join(format!("{stem}.json")),
        reference.sidecar_json() + "\n",
    )
    .map_err(|e| Failure::Input(format!("write {stem}.json: {e}")))?;
    manifest.write()?;
    println!(
        "{} vertices, {} triangles, exact area {:.12}, exact boundary length {:.12}",
        mesh.vertex_count(),
        mesh.triangle_count(),
        reference.exact_area,
        reference.exact_boundary_length,
    );
    Ok(())
}

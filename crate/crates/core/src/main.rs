use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use gs_transfer::acceptance;
use gs_transfer::config::Config;
use gs_transfer::diagnostics::{export_report, vtu_data, DiagnosticsReport, MeshStats, RegionMask};
use gs_transfer::equilibria::{manufactured_vacuum, read_geqdsk, solve_linear_gs, EquilibriumInput};
use gs_transfer::fixtures;
use gs_transfer::mesh::{
    build_structured_mesh, perturb_mesh, read_gmsh, refine_along_levelset, write_gmsh, write_vtu, MeshRef, VtuData,
};
use gs_transfer::transfer::{run_transfer, PathKind, RWeight, SourceEval, TransferConfig, TransferResult};
use gs_transfer::{Error, Result};

#[derive(Parser)]
#[command(name = "gs-transfer", version, about = "Transfer Grad-Shafranov equilibria onto MHD meshes")]
struct Cli {
    /// TOML file with [mesh], [equilibrium], [transfer] and [diagnostics] tables.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate, inspect, perturb or refine meshes.
    #[command(subcommand)]
    Mesh(MeshCmd),
    /// Build or import an equilibrium and summarize it.
    #[command(subcommand)]
    Equilibrium(EqCmd),
    /// Run one projection path and write VTU and CSV output.
    Transfer(TransferArgs),
    /// Run all three paths and write masked norms to CSV.
    Diagnose(DiagnoseArgs),
    /// Run test suites.
    #[command(subcommand)]
    Suite(SuiteCmd),
}

#[derive(Subcommand)]
enum MeshCmd {
    /// Structured mesh of a rectangle.
    Gen {
        #[arg(long, default_value_t = 8)]
        nr: usize,
        #[arg(long, default_value_t = 8)]
        nz: usize,
        #[arg(long, default_value_t = 1.0)]
        rmin: f64,
        #[arg(long, default_value_t = 2.0)]
        rmax: f64,
        #[arg(long, default_value_t = 0.0)]
        zmin: f64,
        #[arg(long, default_value_t = 1.0)]
        zmax: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Read a mesh spec and print its statistics.
    Read { mesh: String },
    /// Move every node by alpha * sin of its coordinates.
    Perturb {
        mesh: String,
        #[arg(long, default_value_t = fixtures::PERTURBATION)]
        alpha: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bisect cells straddling the separatrix of an equilibrium on the mesh.
    Refine {
        mesh: String,
        #[arg(long, default_value = "linear-gs")]
        equilibrium: String,
        #[arg(long, default_value_t = 2)]
        passes: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum EqCmd {
    /// Psi = c1 r^2 + c2 + c3 r^2 z with f = f0.
    Vacuum {
        #[arg(long, default_value = "structured:8")]
        mesh: String,
        #[arg(long, default_value_t = 1.0)]
        c1: f64,
        #[arg(long, default_value_t = 0.0)]
        c2: f64,
        #[arg(long, default_value_t = 0.0)]
        c3: f64,
        #[arg(long, default_value_t = 2.0)]
        f0: f64,
        #[arg(long)]
        vtu: Option<PathBuf>,
    },
    /// Fixed-boundary solve with f f' = c.
    LinearGs {
        #[arg(long, default_value = "structured:32")]
        mesh: String,
        #[arg(long, default_value_t = fixtures::LINEAR_GS_C)]
        c: f64,
        #[arg(long, default_value_t = fixtures::LINEAR_GS_F0)]
        f0: f64,
        #[arg(long)]
        vtu: Option<PathBuf>,
    },
    /// Read a G-EQDSK file onto its grid mesh.
    ImportGeqdsk {
        file: PathBuf,
        #[arg(long)]
        vtu: Option<PathBuf>,
        /// Also write the grid mesh as MSH.
        #[arg(long)]
        msh: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Default)]
struct RunArgs {
    /// Source mesh: structured:N, structured:NR,NZ, plasma-wall or an .msh file.
    #[arg(long)]
    source: Option<String>,
    /// vacuum[:c1,c2,c3,f0], linear-gs[:c,f0] or geqdsk:FILE.
    #[arg(long)]
    equilibrium: Option<String>,
    /// Target mesh spec; defaults to the source mesh.
    #[arg(long)]
    target: Option<String>,
    /// Perturbation amplitude applied to the target mesh.
    #[arg(long)]
    perturb: Option<f64>,
    #[arg(long, value_parser = parse_path)]
    path: Option<PathKind>,
    #[arg(long, value_parser = parse_rweight)]
    rweight: Option<RWeight>,
    #[arg(long, value_parser = parse_source_eval)]
    source_eval: Option<SourceEval>,
    #[arg(long)]
    tol: Option<f64>,
    /// Region masks: all, plasma, tag:N, band or band:LO,HI (repeatable).
    #[arg(long = "mask")]
    masks: Vec<String>,
}

#[derive(Args)]
struct TransferArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    vtu: Option<PathBuf>,
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SuiteCmd {
    /// Run the acceptance battery and print one line per criterion.
    Acceptance {
        /// Run a single criterion.
        #[arg(long)]
        only: Option<u8>,
    },
}

fn parse_path(s: &str) -> std::result::Result<PathKind, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_rweight(s: &str) -> std::result::Result<RWeight, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_source_eval(s: &str) -> std::result::Result<SourceEval, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Mesh(cmd) => mesh_cmd(cmd)?,
        Command::Equilibrium(cmd) => eq_cmd(cmd)?,
        Command::Transfer(args) => transfer_cmd(args, &cfg)?,
        Command::Diagnose(args) => diagnose_cmd(args, &cfg)?,
        Command::Suite(SuiteCmd::Acceptance { only }) => return Ok(acceptance_cmd(only)),
    }
    Ok(ExitCode::SUCCESS)
}

fn load_mesh(spec: &str) -> Result<MeshRef> {
    let spec = spec.trim();
    if spec == "plasma-wall" {
        return Ok(fixtures::plasma_wall());
    }
    if let Some(dims) = spec.strip_prefix("structured:") {
        let nums = numbers(dims)?;
        let (nr, nz) = match nums[..] {
            [n] => (n, n),
            [nr, nz] => (nr, nz),
            _ => return Err(Error::Config(format!("bad mesh spec {spec:?}"))),
        };
        if nr.fract() != 0.0 || nz.fract() != 0.0 || nr < 1.0 || nz < 1.0 {
            return Err(Error::Config(format!("bad mesh spec {spec:?}")));
        }
        return Ok(Arc::new(build_structured_mesh(1.0, 2.0, 0.0, 1.0, nr as usize, nz as usize)?));
    }
    if Path::new(spec).extension().is_some_and(|e| e == "msh") {
        return Ok(Arc::new(read_gmsh(spec)?));
    }
    Err(Error::Config(format!("bad mesh spec {spec:?}; expected structured:N, plasma-wall or a .msh file")))
}

fn numbers(list: &str) -> Result<Vec<f64>> {
    list.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| Error::Config(format!("bad number {t:?}")))).collect()
}

fn load_equilibrium(spec: &str, mesh: &MeshRef, tol: f64) -> Result<EquilibriumInput> {
    let spec = spec.trim();
    let (kind, args) = spec.split_once(':').unwrap_or((spec, ""));
    let nums = if args.is_empty() || kind == "geqdsk" { Vec::new() } else { numbers(args)? };
    match (kind, nums.as_slice()) {
        ("vacuum", []) => Ok(fixtures::vacuum(mesh)),
        ("vacuum", [c1, c2, c3, f0]) => Ok(manufactured_vacuum(mesh, *c1, *c2, *c3, *f0)),
        ("linear-gs", []) => solve_linear_gs(mesh, fixtures::LINEAR_GS_C, fixtures::LINEAR_GS_F0, tol),
        ("linear-gs", [c, f0]) => solve_linear_gs(mesh, *c, *f0, tol),
        ("geqdsk", _) if !args.is_empty() => read_geqdsk(args),
        _ => Err(Error::Config(format!(
            "bad equilibrium spec {spec:?}; expected vacuum[:c1,c2,c3,f0], linear-gs[:c,f0] or geqdsk:FILE"
        ))),
    }
}

fn print_mesh(label: &str, mesh: &MeshRef) -> Result<()> {
    mesh.check_invariants()?;
    let (rmin, rmax) = mesh.r_range();
    let mut tags: Vec<i32> = mesh.region_tags().to_vec();
    tags.sort_unstable();
    tags.dedup();
    println!(
        "{label}: {} vertices, {} cells, {} edges, {} boundary edges, r in [{rmin}, {rmax}], regions {tags:?}",
        mesh.num_vertices(),
        mesh.num_cells(),
        mesh.num_edges(),
        mesh.boundary_edges().len()
    );
    Ok(())
}

fn mesh_cmd(cmd: MeshCmd) -> Result<()> {
    match cmd {
        MeshCmd::Gen { nr, nz, rmin, rmax, zmin, zmax, out } => {
            let m: MeshRef = Arc::new(build_structured_mesh(rmin, rmax, zmin, zmax, nr, nz)?);
            write_gmsh(&m, &out)?;
            print_mesh(&out.display().to_string(), &m)
        }
        MeshCmd::Read { mesh } => print_mesh(&mesh, &load_mesh(&mesh)?),
        MeshCmd::Perturb { mesh, alpha, out } => {
            let m: MeshRef = Arc::new(perturb_mesh(&*load_mesh(&mesh)?, alpha)?);
            write_gmsh(&m, &out)?;
            print_mesh(&out.display().to_string(), &m)
        }
        MeshCmd::Refine { mesh, equilibrium, passes, out } => {
            let m = load_mesh(&mesh)?;
            let eq = load_equilibrium(&equilibrium, &m, gs_transfer::assembly::DEFAULT_TOL)?;
            if !eq.mesh.same_as(&m) {
                return Err(Error::Config("refinement needs an equilibrium on the mesh being refined".into()));
            }
            let (r, _) = refine_along_levelset(&m, &eq.psi.coeffs, eq.psi_sep, passes)?;
            let r: MeshRef = Arc::new(r);
            write_gmsh(&r, &out)?;
            print_mesh(&out.display().to_string(), &r)
        }
    }
}

fn summarize(eq: &EquilibriumInput, vtu: Option<PathBuf>) -> Result<()> {
    let (lo, hi) = eq.psi.coeffs.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    println!(
        "equilibrium: {} nodes, psi in [{lo:.6e}, {hi:.6e}], psi_sep {:.6e}, psi_axis {:.6e}",
        eq.psi.coeffs.len(),
        eq.psi_sep,
        eq.psi_axis
    );
    for n in &eq.notes {
        println!("note: {n}");
    }
    if let Some(p) = vtu {
        let data = VtuData {
            point_scalars: vec![("psi".into(), eq.psi.coeffs.clone()), ("f".into(), eq.f.coeffs.clone())],
            ..Default::default()
        };
        write_vtu(&eq.mesh, &data, p)?;
    }
    Ok(())
}

fn eq_cmd(cmd: EqCmd) -> Result<()> {
    match cmd {
        EqCmd::Vacuum { mesh, c1, c2, c3, f0, vtu } => {
            summarize(&manufactured_vacuum(&load_mesh(&mesh)?, c1, c2, c3, f0), vtu)
        }
        EqCmd::LinearGs { mesh, c, f0, vtu } => {
            summarize(&solve_linear_gs(&load_mesh(&mesh)?, c, f0, gs_transfer::assembly::DEFAULT_TOL)?, vtu)
        }
        EqCmd::ImportGeqdsk { file, vtu, msh } => {
            let eq = read_geqdsk(&file)?;
            if let Some(p) = msh {
                write_gmsh(&eq.mesh, p)?;
            }
            summarize(&eq, vtu)
        }
    }
}

/// Flags merged over the config file, with the meshes and equilibrium loaded.
struct Resolved {
    config: TransferConfig,
    eq: EquilibriumInput,
    target: MeshRef,
    masks: Vec<RegionMask>,
    mesh_id: String,
    echo: Vec<(String, String)>,
}

fn resolve(run: RunArgs, cfg: &Config) -> Result<Resolved> {
    let pick =
        |flag: Option<String>, section: &str, key: &str| flag.or_else(|| cfg.get(section, key).map(str::to_string));
    let source = pick(run.source, "mesh", "source").unwrap_or_else(|| "structured:32".into());
    let target_spec = pick(run.target, "mesh", "target");
    let perturb = match run.perturb {
        Some(p) => Some(p),
        None => cfg.parsed::<f64>("mesh", "perturb")?,
    };
    let eq_spec = pick(run.equilibrium, "equilibrium", "spec").unwrap_or_else(|| "linear-gs".into());
    let path = match run.path {
        Some(p) => p,
        None => cfg.parsed("transfer", "path")?.unwrap_or(PathKind::A),
    };
    let rweight = match run.rweight {
        Some(w) => w,
        None => cfg.parsed("transfer", "rweight")?.unwrap_or(RWeight::Multiply),
    };
    let explicit_eval = match run.source_eval {
        Some(s) => Some(s),
        None => cfg.parsed("transfer", "source_eval")?,
    };
    let tol = match run.tol {
        Some(t) => t,
        None => cfg.parsed("transfer", "tol")?.unwrap_or(gs_transfer::assembly::DEFAULT_TOL),
    };
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::Config(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let has_target = target_spec.is_some() || perturb.is_some();
    if explicit_eval == Some(SourceEval::Cross) && !has_target {
        return Err(Error::Config("cross evaluation needs a target mesh (--target or --perturb)".into()));
    }
    let source_eval = explicit_eval.unwrap_or(if has_target { SourceEval::Cross } else { SourceEval::Aligned });

    let source_mesh = load_mesh(&source)?;
    let eq = load_equilibrium(&eq_spec, &source_mesh, tol)?;
    let base = match &target_spec {
        Some(t) => load_mesh(t)?,
        None => eq.mesh.clone(),
    };
    let target = match perturb {
        Some(a) => Arc::new(perturb_mesh(&base, a)?),
        None => base,
    };
    let mask_list: Vec<String> = if !run.masks.is_empty() {
        run.masks
    } else if let Some(m) = cfg.get("diagnostics", "masks") {
        m.split_whitespace().map(str::to_string).collect()
    } else {
        vec!["all".into(), "plasma".into()]
    };
    let masks = mask_list.iter().map(|m| m.parse()).collect::<Result<Vec<RegionMask>>>()?;
    let mesh_id = match (&target_spec, perturb) {
        (Some(t), Some(a)) => format!("{t}+perturb:{a}"),
        (Some(t), None) => t.clone(),
        (None, Some(a)) => format!("{source}+perturb:{a}"),
        (None, None) => source.clone(),
    };
    let config = TransferConfig { path, rweight, solver_tol: tol, source_eval, zero_boundary_flux: false };
    let echo = vec![
        ("source".into(), source),
        ("equilibrium".into(), eq_spec),
        ("target".into(), mesh_id.clone()),
        ("rweight".into(), rweight.to_string()),
        ("source_eval".into(), source_eval.to_string()),
        ("tol".into(), format!("{tol:e}")),
    ];
    Ok(Resolved { config, eq, target, masks, mesh_id, echo })
}

fn select_masks(r: &Resolved) -> Result<Vec<(RegionMask, Vec<bool>)>> {
    r.masks.iter().map(|m| m.select(&r.target, Some(&r.eq)).map(|c| (*m, c))).collect()
}

fn report_for(r: &Resolved, results: &[TransferResult]) -> Result<DiagnosticsReport> {
    let masks = select_masks(r)?;
    let mut report = DiagnosticsReport { config: r.echo.clone(), ..Default::default() };
    report.meshes.push((r.mesh_id.clone(), MeshStats::of(&r.target, 0)));
    for res in results {
        report.add_result(res, &masks, &r.mesh_id)?;
    }
    Ok(report)
}

fn print_rows(report: &DiagnosticsReport) {
    for row in &report.rows {
        println!("{:>2} {:<14} path {} {:<8} {:.6e}", row.field, row.mask, row.path, row.rweight, row.norm);
    }
}

fn transfer_cmd(args: TransferArgs, cfg: &Config) -> Result<()> {
    let r = resolve(args.run, cfg)?;
    let result = run_transfer(&r.config, &r.eq, &r.target)?;
    let report = report_for(&r, std::slice::from_ref(&result))?;
    print_rows(&report);
    let csv = args.csv.or_else(|| cfg.get("diagnostics", "csv").map(PathBuf::from));
    if let Some(p) = csv {
        export_report(&report, p)?;
    }
    let vtu = args.vtu.or_else(|| cfg.get("diagnostics", "vtu").map(PathBuf::from));
    if let Some(p) = vtu {
        let extra: Vec<(&str, &gs_transfer::Field)> =
            if r.eq.mesh.same_as(&r.target) { vec![("psi", &r.eq.psi), ("f", &r.eq.f)] } else { Vec::new() };
        write_vtu(&r.target, &vtu_data(&result, &extra), p)?;
    }
    Ok(())
}

fn diagnose_cmd(args: DiagnoseArgs, cfg: &Config) -> Result<()> {
    let r = resolve(args.run, cfg)?;
    let mut results = Vec::new();
    for p in [PathKind::A, PathKind::B, PathKind::C] {
        results.push(run_transfer(&TransferConfig { path: p, ..r.config }, &r.eq, &r.target)?);
    }
    let report = report_for(&r, &results)?;
    print_rows(&report);
    for other in ["B", "C"] {
        for (field, mask, q) in report.path_ratios("A", other) {
            if field.starts_with('F') {
                println!("ratio A/{other} {field} {mask}: {q:.4}");
            }
        }
    }
    let out = args.out.or_else(|| cfg.get("diagnostics", "csv").map(PathBuf::from));
    if let Some(p) = out {
        export_report(&report, p)?;
    }
    Ok(())
}

fn acceptance_cmd(only: Option<u8>) -> ExitCode {
    let results = match only {
        Some(id) => vec![acceptance::run_criterion(id)],
        None => acceptance::run_all(),
    };
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

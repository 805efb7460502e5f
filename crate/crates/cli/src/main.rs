use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use tfl_core::disks::disk_table;
use tfl_core::probes::{displaceable_by_probe, probe_scan, Verdict, DEFAULT_BOUND};
use tfl_core::rational::{format_point, format_rational, parse_rational, parse_rational_list};
use tfl_core::report::{analyze, render_svg, AnalysisConfig, AnalysisReport};
use tfl_core::solver::certify_fiber;
use tfl_core::{
    build_potential, find_critical_fibers, parse_polytope, BulkParameter, CriticalCertificate, Error, MomentPolytope,
    Rational, SolverConfig,
};

/// Critical and displaceable moment fibers of toric orbifolds.
///
/// Every subcommand reads a polytope document `{"dimension": n, "facets":
/// [{"normal": [..], "offset": "p/q"}, ..]}` describing `⟨λ, v_i⟩ ≥ c_i`.
/// Exit status: 0 on success, 2 on invalid input, 3 when a fiber is both
/// certified critical and displaced by a probe.
#[derive(Parser, Debug)]
#[command(name = "toric-fiber-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a polytope document and print its facets and vertices.
    Validate {
        #[command(flatten)]
        io: Io,
    },
    /// Print the potential's terms at a fiber.
    Potential {
        #[command(flatten)]
        io: Io,
        /// Fiber λ as comma-separated rationals, e.g. `1/2,1/2`.
        #[arg(long, value_name = "P/Q,...")]
        lambda: String,
        /// Bulk deformation file: a list of series per facet.
        #[arg(long, value_name = "FILE")]
        bulk: Option<PathBuf>,
    },
    /// Find critical fibers and print their certificates.
    Critical {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        solver: SolverArgs,
        /// Certify this fiber only instead of searching all candidates.
        #[arg(long, value_name = "P/Q,...")]
        lambda: Option<String>,
    },
    /// Look for probes displacing one fiber or every fiber on a grid.
    Probes {
        #[command(flatten)]
        io: Io,
        /// Fiber to test.
        #[arg(long, value_name = "P/Q,...", conflicts_with = "scan", required_unless_present = "scan")]
        lambda: Option<String>,
        /// Scan the interior grid with this many steps per axis.
        #[arg(long, value_name = "RESOLUTION")]
        scan: Option<u32>,
        /// Largest coordinate of a probe direction.
        #[arg(long, value_name = "N", default_value_t = DEFAULT_BOUND)]
        bound: i64,
    },
    /// List the Maslov index two disk classes bounding a fiber.
    Disks {
        #[command(flatten)]
        io: Io,
        /// Fiber λ as comma-separated rationals.
        #[arg(long, value_name = "P/Q,...")]
        lambda: String,
    },
    /// Classify fibers as critical, probe-displaceable or unknown.
    Analyze {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Also write the SVG figure to this path (2-dimensional polytopes).
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Analyze and draw the polytope with shaded displaceable cells and
    /// marked critical fibers.
    Render {
        #[command(flatten)]
        io: Io,
        #[command(flatten)]
        analysis: AnalysisArgs,
        /// Output path; standard output when omitted.
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct Io {
    /// Polytope document (JSON).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Print JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SolverArgs {
    /// Bulk deformation file: a list of series per facet.
    #[arg(long, value_name = "FILE")]
    bulk: Option<PathBuf>,
    /// Truncation order D; three times the largest facet value by default.
    #[arg(long, value_name = "P/Q")]
    truncation: Option<String>,
    /// Multistart seed.
    #[arg(long, env = "TFL_SEED", default_value_t = 0)]
    seed: u64,
    /// Multistart count; 64·3ⁿ by default.
    #[arg(long, value_name = "N")]
    starts: Option<usize>,
    /// Do not fall back to the graded lift at singular leading Hessians.
    #[arg(long)]
    no_graded: bool,
}

#[derive(Args, Debug)]
struct AnalysisArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Largest coordinate of a probe direction.
    #[arg(long, value_name = "N", default_value_t = DEFAULT_BOUND)]
    bound: i64,
    /// Grid steps per axis for the probe scan.
    #[arg(long, value_name = "N", default_value_t = 16)]
    resolution: u32,
}

/// A failed run: message and exit status.
struct Failure(u8, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(if e.is_validation() { 2 } else { 1 }, e.to_string())
    }
}

type Outcome = Result<u8, Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure(2, format!("cannot read {}: {e}", path.display())))
}

fn load_polytope(path: &Path) -> Result<MomentPolytope, Failure> {
    Ok(parse_polytope(&read(path)?)?)
}

fn load_bulk(path: Option<&PathBuf>) -> Result<Option<BulkParameter>, Failure> {
    path.map(|p| Ok(BulkParameter::from_json(&read(p)?)?)).transpose()
}

fn lambda_arg(text: &str, poly: &MomentPolytope) -> Result<Vec<Rational>, Failure> {
    let lambda = parse_rational_list(text)?;
    if lambda.len() != poly.dimension() {
        return Err(Error::DimensionMismatch(format!(
            "λ has {} coordinates, polytope has dimension {}",
            lambda.len(),
            poly.dimension()
        ))
        .into());
    }
    Ok(lambda)
}

impl SolverArgs {
    fn config(&self) -> Result<SolverConfig, Failure> {
        let truncation = self.truncation.as_deref().map(parse_rational).transpose()?;
        if truncation.is_some_and(|d| d <= Rational::from_integer(0)) {
            return Err(Error::Schema("truncation must be positive".into()).into());
        }
        Ok(SolverConfig { seed: self.seed, starts: self.starts, truncation, allow_graded: !self.no_graded })
    }
}

impl AnalysisArgs {
    fn config(&self) -> Result<AnalysisConfig, Failure> {
        if self.resolution == 0 {
            return Err(Error::Schema("resolution must be positive".into()).into());
        }
        if self.bound < 1 {
            return Err(Error::Schema("bound must be at least 1".into()).into());
        }
        Ok(AnalysisConfig {
            solver: self.solver.config()?,
            bulk: load_bulk(self.solver.bulk.as_ref())?,
            bound: self.bound,
            resolution: self.resolution,
        })
    }
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON value serializes"));
}

fn validate(io: &Io) -> Outcome {
    let poly = load_polytope(&io.input)?;
    let vertices = if poly.is_bounded() { poly.enumerate_vertices() } else { Vec::new() };
    let orbifold: Vec<usize> = (0..poly.facets().len()).filter(|&i| poly.facets()[i].is_orbifold()).collect();
    if io.json {
        print_json(&json!({
            "valid": true,
            "polytope": poly.to_document(),
            "bounded": poly.is_bounded(),
            "vertices": vertices.iter().map(|v| v.iter().map(format_rational).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "orbifold_facets": orbifold,
        }));
    } else {
        print!("{poly}");
        println!("interior point {}", format_point(poly.witness()));
        if poly.is_bounded() {
            println!("bounded, {} vertices", vertices.len());
            for v in &vertices {
                println!("  {}", format_point(v));
            }
        } else {
            println!("unbounded");
        }
        if !orbifold.is_empty() {
            println!("orbifold facets (non-primitive normals): {orbifold:?}");
        }
    }
    Ok(0)
}

fn potential(io: &Io, lambda: &str, bulk: Option<&PathBuf>) -> Outcome {
    let poly = load_polytope(&io.input)?;
    let lambda = lambda_arg(lambda, &poly)?;
    let bulk = load_bulk(bulk)?;
    let w = build_potential(&poly, &lambda, bulk.as_ref())?;
    if io.json {
        print_json(&w.to_json());
    } else {
        print!("{}", w.to_table());
    }
    Ok(0)
}

/// `a+bi` with five decimals and no negative zeros.
fn complex(z: num_complex::Complex64) -> String {
    let clean = |x: f64| if x.abs() < 5e-6 { 0.0 } else { x };
    format!("{:.5}{:+.5}i", clean(z.re), clean(z.im))
}

fn certificate_table(certs: &[CriticalCertificate]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:<16} {:<40} {:<7} {:>10}  statement", "λ", "leading root", "method", "cond");
    for c in certs {
        let root: Vec<String> = c.leading_root.iter().map(|z| complex(*z)).collect();
        let cond = if c.hessian_condition.is_finite() { format!("{:.3e}", c.hessian_condition) } else { "inf".into() };
        let _ = writeln!(
            out,
            "{:<16} {:<40} {:<7} {:>10}  {}, {} intersection points at least",
            c.fiber.label(),
            root.join(", "),
            format!("{:?}", c.method).to_lowercase(),
            cond,
            c.statement(),
            c.intersection_lower_bound
        );
    }
    out
}

fn critical(io: &Io, solver: &SolverArgs, lambda: Option<&str>) -> Outcome {
    let poly = load_polytope(&io.input)?;
    let config = solver.config()?;
    let bulk = load_bulk(solver.bulk.as_ref())?;
    let (certs, reason) = match lambda {
        Some(text) => {
            let lambda = lambda_arg(text, &poly)?;
            match certify_fiber(&poly, &lambda, bulk.as_ref(), &config, config.seed) {
                Ok(certs) if certs.is_empty() => {
                    let w = build_potential(&poly, &lambda, bulk.as_ref())?;
                    let d = config.truncation.unwrap_or_else(|| w.default_truncation());
                    (certs, Some(Error::Inconsistent(format_rational(&d)).to_string()))
                }
                Ok(certs) => (certs, None),
                Err(e @ Error::DegenerateDirection(_)) => (Vec::new(), Some(format!("{e}; no leading cancellation"))),
                Err(e) => return Err(e.into()),
            }
        }
        None => (find_critical_fibers(&poly, bulk.as_ref(), &config)?, None),
    };
    if io.json {
        print_json(&json!({
            "seed": config.seed,
            "critical_fibers": tfl_core::solver::critical_lambdas(&certs)
                .iter()
                .map(|l| l.iter().map(format_rational).collect::<Vec<_>>())
                .collect::<Vec<_>>(),
            "certificates": certs.iter().map(|c| c.to_json()).collect::<Vec<_>>(),
            "reason": reason,
        }));
    } else {
        if certs.is_empty() {
            println!("{}", reason.unwrap_or_else(|| "no critical fibers found".into()));
        } else {
            print!("{}", certificate_table(&certs));
        }
    }
    Ok(0)
}

fn probes(io: &Io, lambda: Option<&str>, scan: Option<u32>, bound: i64) -> Outcome {
    let poly = load_polytope(&io.input)?;
    if bound < 1 {
        return Err(Error::Schema("bound must be at least 1".into()).into());
    }
    if let Some(text) = lambda {
        let lambda = lambda_arg(text, &poly)?;
        if !poly.is_interior(&lambda) {
            return Err(Error::NotInterior.into());
        }
        let probe = displaceable_by_probe(&poly, &lambda, bound);
        if io.json {
            print_json(&json!({
                "lambda": lambda.iter().map(format_rational).collect::<Vec<_>>(),
                "bound": bound,
                "displaceable": probe.is_some(),
                "probe": probe.as_ref().map(|p| p.to_json()),
            }));
        } else {
            match &probe {
                Some(p) => println!(
                    "λ = {} is displaceable: probe from facet {} at {} along {:?}, hits λ at t = {}{}",
                    format_point(&lambda),
                    p.facet_index,
                    format_point(&p.base),
                    p.direction.0,
                    format_rational(&p.hit_parameter),
                    p.exit_parameter.map_or(String::new(), |t| format!(", exits at t = {}", format_rational(&t)))
                ),
                None => println!("λ = {}: no probe with directions up to {bound}", format_point(&lambda)),
            }
        }
        return Ok(0);
    }
    let resolution = scan.expect("clap requires --lambda or --scan");
    if resolution == 0 {
        return Err(Error::Schema("resolution must be positive".into()).into());
    }
    let points = probe_scan(&poly, resolution, bound)?;
    if io.json {
        let grid: Vec<serde_json::Value> = points
            .iter()
            .map(|p| {
                let mut v = serde_json::to_value(Verdict::from_probe(p.probe.as_ref())).expect("verdict serializes");
                v["lambda"] = json!(p.lambda.iter().map(format_rational).collect::<Vec<_>>());
                v
            })
            .collect();
        print_json(&json!({ "resolution": resolution, "bound": bound, "grid": grid }));
    } else {
        let displaced = points.iter().filter(|p| p.probe.is_some()).count();
        println!(
            "{} grid fibers, {} displaceable, {} without a probe (bound {bound})",
            points.len(),
            displaced,
            points.len() - displaced
        );
        for p in points.iter().filter(|p| p.probe.is_none()) {
            println!("  {}", format_point(&p.lambda));
        }
    }
    Ok(0)
}

fn disks(io: &Io, lambda: &str) -> Outcome {
    let poly = load_polytope(&io.input)?;
    let lambda = lambda_arg(lambda, &poly)?;
    if !poly.is_interior(&lambda) {
        return Err(Error::NotInterior.into());
    }
    let table = disk_table(&poly, &lambda);
    if io.json {
        print_json(&json!({
            "lambda": lambda.iter().map(format_rational).collect::<Vec<_>>(),
            "classes": table,
        }));
    } else {
        println!("Maslov index two disks over λ = {}", format_point(&lambda));
        println!("{:>5}  {:<16} {:<8} {:<10} {:<16} radius", "facet", "degrees", "index", "area", "boundary");
        for row in &table {
            println!(
                "{:>5}  {:<16} {:<8} {:<10} {:<16} {}",
                row["facet_index"].to_string(),
                row["degrees"].to_string(),
                row["maslov_index"].to_string(),
                row["area"].as_str().unwrap_or_default(),
                row["boundary_class"].to_string(),
                row["radius"]
            );
        }
    }
    Ok(0)
}

fn status(report: &AnalysisReport) -> u8 {
    if report.inconsistencies.is_empty() {
        0
    } else {
        3
    }
}

fn write_svg(report: &AnalysisReport, path: &Path) -> Result<(), Failure> {
    let svg = render_svg(report)?;
    std::fs::write(path, svg).map_err(|e| Failure(1, format!("cannot write {}: {e}", path.display())))
}

fn run_analyze(io: &Io, args: &AnalysisArgs, svg: Option<&PathBuf>) -> Outcome {
    let poly = load_polytope(&io.input)?;
    let report = analyze(&poly, &args.config()?)?;
    if let Some(path) = svg {
        write_svg(&report, path)?;
    }
    if io.json {
        print_json(&report.to_json());
    } else {
        print!("{}", report.to_text());
    }
    Ok(status(&report))
}

fn render(io: &Io, args: &AnalysisArgs, svg: Option<&PathBuf>) -> Outcome {
    let poly = load_polytope(&io.input)?;
    if poly.dimension() != 2 {
        return Err(Error::DimensionUnsupported { expected: 2, got: poly.dimension() }.into());
    }
    if io.json && svg.is_none() {
        return Err(Failure(2, "render --json needs --svg for the figure".into()));
    }
    let report = analyze(&poly, &args.config()?)?;
    match svg {
        Some(path) => write_svg(&report, path)?,
        None => print!("{}", render_svg(&report)?),
    }
    if io.json {
        print_json(&report.to_json());
    }
    Ok(status(&report))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Validate { io } => validate(io),
        Command::Potential { io, lambda, bulk } => potential(io, lambda, bulk.as_ref()),
        Command::Critical { io, solver, lambda } => critical(io, solver, lambda.as_deref()),
        Command::Probes { io, lambda, scan, bound } => probes(io, lambda.as_deref(), *scan, *bound),
        Command::Disks { io, lambda } => disks(io, lambda),
        Command::Analyze { io, analysis, svg } => run_analyze(io, analysis, svg.as_ref()),
        Command::Render { io, analysis, svg } => render(io, analysis, svg.as_ref()),
    };
    match outcome {
        Ok(code) => {
            if code == 3 {
                eprintln!("error: a fiber is both certified critical and displaced by a probe");
            }
            ExitCode::from(code)
        }
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tfl_core::examples;
    use tfl_core::report::Inconsistency;

    #[test]
    fn inconsistent_reports_exit_with_status_three() {
        let poly = examples::projective_line();
        let mut report = analyze(&poly, &AnalysisConfig { resolution: 4, ..AnalysisConfig::default() }).unwrap();
        assert_eq!(status(&report), 0);
        let lambda = vec![Rational::new(1, 4)];
        let probe = displaceable_by_probe(&poly, &lambda, 1).unwrap();
        report.inconsistencies.push(Inconsistency { lambda, probe });
        assert_eq!(status(&report), 3);
    }
}

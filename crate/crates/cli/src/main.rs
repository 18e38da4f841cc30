use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use flatyamabe::bifurcation::{self, AccumulationOptions, ScanOptions};
use flatyamabe::crystal::{presets, CollapseFamily, CrystalGroup};
use flatyamabe::exact::rational::{self, Rational};
use flatyamabe::exact::{Certifier, ExactReal};
use flatyamabe::lattice::{format_matrix, parse_matrix, Lattice};
use flatyamabe::linalg::RatMatrix;
use flatyamabe::parallel::Exec;
use flatyamabe::scenario::LoadedScenario;
use flatyamabe::spectral::{self, Verdict};
use flatyamabe::tower;
use flatyamabe::Error;

#[derive(Parser)]
#[command(name = "flatyamabe", version, about = "Spectra, index scans and covering towers for products with flat factors")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Working precision of certified comparisons.
    #[arg(long, global = true, default_value_t = 128)]
    precision_bits: u32,
    #[arg(long, global = true, default_value = ".")]
    output_dir: PathBuf,
    #[arg(long, global = true, value_enum, default_value_t = Format::Both)]
    format: Format,
    /// Worker threads; 1 runs sequentially.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Laplace spectrum below a cutoff.
    Spectrum {
        #[command(subcommand)]
        kind: SpectrumKind,
    },
    /// Collapse map A_t, its cone membership and the conjugated group.
    Collapse {
        /// Group JSON file or preset name.
        #[arg(long)]
        group: String,
        /// Slow subspace: "auto" or vectors like "1,0;0,1".
        #[arg(long, default_value = "auto")]
        basis: String,
        #[arg(long)]
        t: String,
    },
    /// Morse index i_t on a grid or at a single parameter.
    IndexScan {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        range: RangeArgs,
        /// Evaluate at this parameter only.
        #[arg(long)]
        t: Option<String>,
    },
    /// Full scan with certified bifurcation instants.
    Bifurcate {
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        range: RangeArgs,
        #[arg(long, default_value_t = 8)]
        max_refinements: u32,
        /// Also collect the first K instants toward the collapse end.
        #[arg(long)]
        accumulation: Option<usize>,
    },
    /// Covering-tower ledger and minimal forcing degree.
    Tower {
        #[arg(long)]
        scenario: PathBuf,
        /// Comma-separated covering degrees.
        #[arg(long, value_delimiter = ',')]
        degrees: Option<Vec<u64>>,
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Verdicts with exit status 0 (holds) or 1 (fails).
    Check {
        #[command(subcommand)]
        kind: CheckKind,
    },
}

#[derive(Args)]
struct RangeArgs {
    #[arg(long)]
    t_min: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
}

#[derive(Subcommand)]
enum SpectrumKind {
    /// Flat torus R^d / L.
    Torus {
        /// Lattice JSON file, "identityN" or a preset name.
        #[arg(long)]
        basis: String,
        #[arg(long)]
        cutoff: String,
    },
    /// Round sphere.
    Sphere {
        #[arg(long)]
        dim: usize,
        #[arg(long, conflicts_with = "radius")]
        unit_volume: bool,
        #[arg(long)]
        radius: Option<String>,
        #[arg(long)]
        cutoff: String,
    },
    /// Flat manifold R^d / π.
    Quotient {
        #[arg(long)]
        group: String,
        #[arg(long)]
        cutoff: String,
    },
}

#[derive(Subcommand)]
enum CheckKind {
    /// Eigenvalue upper bound in terms of the diameter, on a flat torus.
    Cheng {
        #[arg(long)]
        basis: String,
        #[arg(long, default_value_t = 10)]
        j_max: usize,
        #[arg(long, default_value_t = 1e-9)]
        tolerance: f64,
    },
    /// Torsion-freeness of a crystallographic group.
    Torsion {
        #[arg(long)]
        group: String,
    },
    /// Whether a matrix lies in the cone of the group's holonomy.
    Cone {
        #[arg(long)]
        group: String,
        /// Matrix JSON: rows of rational strings.
        #[arg(long)]
        matrix: PathBuf,
    },
}

struct Ctx {
    cert: Certifier,
    out: PathBuf,
    format: Format,
    exec: Exec,
}

impl Ctx {
    fn write(&self, name: &str, body: &str) -> Result<()> {
        fs::create_dir_all(&self.out).with_context(|| format!("creating {}", self.out.display()))?;
        let path = self.out.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        println!("wrote {}", path.display());
        Ok(())
    }

    fn emit(&self, stem: &str, json: Option<&str>, csv: Option<&str>) -> Result<()> {
        if let (Some(j), true) = (json, self.format != Format::Csv) {
            self.write(&format!("{stem}.json"), j)?;
        }
        if let (Some(c), true) = (csv, self.format != Format::Json) {
            self.write(&format!("{stem}.csv"), c)?;
        }
        Ok(())
    }
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn parse_exact(s: &str) -> Result<ExactReal> {
    if let Ok(x) = s.parse::<ExactReal>() {
        return Ok(x);
    }
    let f: f64 = s.parse().map_err(|_| anyhow!(Error::Parse(format!("not a number: '{s}'"))))?;
    Ok(ExactReal::from_rational(rational::from_f64_decimal(f)?))
}

fn parse_rational(s: &str) -> Result<Rational> {
    match rational::parse_rational(s) {
        Ok(q) => Ok(q),
        Err(_) => {
            let f: f64 = s.parse().map_err(|_| anyhow!(Error::Parse(format!("not a rational: '{s}'"))))?;
            Ok(rational::from_f64_decimal(f)?)
        }
    }
}

fn load_group(arg: &str) -> Result<CrystalGroup> {
    if let Some(g) = presets::by_name(arg) {
        return Ok(g);
    }
    Ok(CrystalGroup::read(Path::new(arg))?)
}

fn load_lattice(arg: &str) -> Result<Lattice> {
    if let Some(d) = arg.strip_prefix("identity") {
        let d: usize = d.parse().map_err(|_| anyhow!(Error::Parse(format!("bad lattice name '{arg}'"))))?;
        return Ok(Lattice::new(RatMatrix::identity(d))?);
    }
    if let Some(g) = presets::by_name(arg) {
        return Ok(g.lattice().clone());
    }
    let text = fs::read_to_string(arg).map_err(Error::from)?;
    Ok(Lattice::from_json(&text)?)
}

fn load_matrix(path: &Path) -> Result<RatMatrix> {
    let text = fs::read_to_string(path).map_err(Error::from)?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(Error::from)?;
    let rows = value.get("matrix").unwrap_or(&value);
    let rows: Vec<Vec<String>> = serde_json::from_value(rows.clone()).map_err(Error::from)?;
    Ok(parse_matrix(&rows)?)
}

fn parse_basis(s: &str) -> Result<Vec<Vec<Rational>>> {
    s.split(';').map(|v| v.split(',').map(|x| Ok(rational::parse_rational(x.trim())?)).collect()).collect()
}

fn scan_range(s: &LoadedScenario, r: &RangeArgs) -> Result<(Rational, Rational, usize)> {
    let base = s.scan.clone();
    let t_min = match (&r.t_min, &base) {
        (Some(x), _) => parse_rational(x)?,
        (None, Some(b)) => b.t_min.clone(),
        (None, None) => bail!(Error::InvalidInput("scenario has no [scan] section; pass --t-min".into())),
    };
    let t_max = match (&r.t_max, &base) {
        (Some(x), _) => parse_rational(x)?,
        (None, Some(b)) => b.t_max.clone(),
        (None, None) => bail!(Error::InvalidInput("scenario has no [scan] section; pass --t-max".into())),
    };
    let steps = r.steps.or(base.map(|b| b.steps)).unwrap_or(100);
    Ok((t_min, t_max, steps))
}

fn load_scenario(path: &Path, ctx: &Ctx) -> Result<LoadedScenario> {
    let mut s = LoadedScenario::read(path)?;
    if ctx.cert.bits() != 128 || s.precision_bits < 64 {
        s.precision_bits = ctx.cert.bits();
    }
    Ok(s)
}

fn run(cli: Cli) -> Result<u8> {
    let g = &cli.global;
    if g.precision_bits < 64 {
        bail!(Error::InvalidInput(format!("--precision-bits must be at least 64, got {}", g.precision_bits)));
    }
    let exec = match g.threads {
        Some(0) => bail!(Error::InvalidInput("--threads must be positive".into())),
        Some(1) => Exec::Sequential,
        Some(_n) => {
            #[cfg(feature = "parallel")]
            rayon::ThreadPoolBuilder::new().num_threads(_n).build_global().ok();
            Exec::Parallel
        }
        None => Exec::Parallel,
    };
    let ctx = Ctx { cert: Certifier::new(g.precision_bits), out: g.output_dir.clone(), format: g.format, exec };
    match cli.command {
        Command::Spectrum { kind } => cmd_spectrum(&ctx, kind),
        Command::Collapse { group, basis, t } => cmd_collapse(&ctx, &group, &basis, &t),
        Command::IndexScan { scenario, range, t } => cmd_index_scan(&ctx, &scenario, &range, t.as_deref()),
        Command::Bifurcate { scenario, range, max_refinements, accumulation } => {
            cmd_bifurcate(&ctx, &scenario, &range, max_refinements, accumulation)
        }
        Command::Tower { scenario, degrees, lambda } => cmd_tower(&ctx, &scenario, degrees, lambda.as_deref()),
        Command::Check { kind } => cmd_check(&ctx, kind),
    }
}

fn cmd_spectrum(ctx: &Ctx, kind: SpectrumKind) -> Result<u8> {
    let slice = match kind {
        SpectrumKind::Torus { basis, cutoff } => spectral::torus_spectrum(&load_lattice(&basis)?, &parse_exact(&cutoff)?, &ctx.cert)?,
        SpectrumKind::Sphere { dim, unit_volume, radius, cutoff } => {
            let r = match (unit_volume, radius) {
                (true, _) => spectral::unit_volume_sphere_radius(dim)?,
                (false, Some(r)) => parse_exact(&r)?,
                (false, None) => ExactReal::one(),
            };
            spectral::sphere_spectrum(dim, &r, &parse_exact(&cutoff)?, &ctx.cert)?
        }
        SpectrumKind::Quotient { group, cutoff } => spectral::bieberbach_spectrum(&load_group(&group)?, &parse_exact(&cutoff)?, &ctx.cert)?,
    };
    let mut json = slice.to_json();
    json.push('\n');
    ctx.emit("spectrum", Some(&json), Some(&slice.to_csv()))?;
    println!("{} distinct eigenvalues below {}", slice.len(), slice.cutoff);
    Ok(0)
}

fn cmd_collapse(ctx: &Ctx, group: &str, basis: &str, t: &str) -> Result<u8> {
    let g = load_group(group)?;
    let fam = if basis == "auto" { CollapseFamily::auto(g.clone())? } else { CollapseFamily::from_basis(g.clone(), &parse_basis(basis)?)? };
    let t = parse_rational(t)?;
    let a = fam.collapse_map(&t)?;
    let cone = g.cone_membership(&a)?;
    let deformed = fam.deformed_group(&t)?;
    let report = deformed.validate();
    let (e0, e1) = fam.exponents();
    let value = json!({
        "t": rational::format_rational(&t),
        "dim_e": fam.dim_e(),
        "exponents": [e0, e1],
        "projection": format_matrix(fam.projection()),
        "collapse_map": format_matrix(&a),
        "det": rational::format_rational(&a.det()),
        "cone_membership": cone,
        "conjugated_group": deformed.to_file(),
        "validation": report,
    });
    let mut csv = String::from("key,value\n");
    let _ = writeln!(csv, "t,{}", rational::format_rational(&t));
    let _ = writeln!(csv, "dim_e,{}", fam.dim_e());
    let _ = writeln!(csv, "det,{}", rational::format_rational(&a.det()));
    let _ = writeln!(csv, "cone_membership,{cone}");
    let _ = writeln!(csv, "conjugated_valid,{}", report.valid);
    ctx.emit("collapse", Some(&pretty(&value)), Some(&csv))?;
    println!("det(A_t) = {}, cone membership {cone}, conjugated group valid {}", rational::format_rational(&a.det()), report.valid);
    Ok(0)
}

fn cmd_index_scan(ctx: &Ctx, path: &Path, range: &RangeArgs, t: Option<&str>) -> Result<u8> {
    let loaded = load_scenario(path, ctx)?;
    let s = loaded.scenario()?;
    let points: Vec<Rational> = match t {
        Some(t) => vec![parse_rational(t)?],
        None => {
            let (lo, hi, steps) = scan_range(&loaded, range)?;
            if lo <= Rational::from_integer(0.into()) || lo >= hi || steps == 0 {
                bail!(Error::InvalidInput("need 0 < t_min < t_max and steps > 0".into()));
            }
            let h = (&hi - &lo) / rational::int(steps as i64);
            (0..=steps).map(|i| &lo + &h * rational::int(i as i64)).collect()
        }
    };
    let values = flatyamabe::parallel::try_map(ctx.exec, &points, |t| bifurcation::index_at(&s, t))?;
    let mut csv = String::from("t,t_exact,index,equalities\n");
    let mut rows = Vec::new();
    for (t, v) in points.iter().zip(&values) {
        let _ = writeln!(csv, "{},{},{},{}", rational::to_f64(t), rational::format_rational(t), v.index, v.equalities.len());
        rows.push(json!({ "t": rational::to_f64(t), "t_exact": rational::format_rational(t), "index": v.index, "equalities": v.equalities }));
    }
    let value = json!({ "threshold": s.threshold().to_f64(), "threshold_exact": s.threshold().to_string(), "points": rows });
    ctx.emit("index_scan", Some(&pretty(&value)), Some(&csv))?;
    if let [v] = values.as_slice() {
        println!("i_t = {}", v.index);
    } else {
        println!("{} grid points", values.len());
    }
    Ok(0)
}

fn cmd_bifurcate(ctx: &Ctx, path: &Path, range: &RangeArgs, max_refinements: u32, accumulation: Option<usize>) -> Result<u8> {
    let loaded = load_scenario(path, ctx)?;
    let s = loaded.scenario()?;
    let (lo, hi, steps) = scan_range(&loaded, range)?;
    let opts = ScanOptions { exec: ctx.exec, max_refinements, ..ScanOptions::default() };
    let report = bifurcation::scan(&s, &lo, &hi, steps, &opts)?;
    let mut json = report.to_json();
    json.push('\n');
    if ctx.format != Format::Csv {
        ctx.write("bifurcate.json", &json)?;
    }
    if ctx.format != Format::Json {
        ctx.write("bifurcate_grid.csv", &report.grid_csv())?;
        ctx.write("bifurcate_instants.csv", &report.instants_csv())?;
    }
    println!("{} instants on [{}, {}]", report.instants.len(), rational::format_rational(&lo), rational::format_rational(&hi));
    for i in &report.instants {
        let exact = i.t_exact.as_ref().map(|x| format!(" = {x}")).unwrap_or_default();
        println!("  t in [{:.12}, {:.12}]{exact}, jump {:+}, condition (a) {}", rational::to_f64(&i.t_lo), rational::to_f64(&i.t_hi), i.jump, i.condition_a);
    }
    if let Some(k) = accumulation {
        let aopts = AccumulationOptions { t_start: hi.clone(), scan: opts.clone(), ..AccumulationOptions::default() };
        let e = bifurcation::accumulation_diagnostic(&s, k, &aopts)?;
        ctx.write("bifurcate_accumulation.json", &pretty(&serde_json::to_value(&e)?))?;
        println!("accumulation: {} instants, strictly increasing {}, lower bound {}", e.instants.len(), e.strictly_increasing, e.lower_bound_ok);
    }
    Ok(0)
}

fn cmd_tower(ctx: &Ctx, path: &Path, degrees: Option<Vec<u64>>, lambda: Option<&str>) -> Result<u8> {
    let loaded = load_scenario(path, ctx)?;
    let lambda = lambda.map(parse_exact).transpose()?;
    let p = loaded.product_data(lambda.as_ref())?;
    let degrees = degrees.or_else(|| loaded.tower.as_ref().map(|t| t.degrees.clone())).unwrap_or_default();
    if degrees.is_empty() {
        bail!(Error::InvalidInput("no covering degrees; pass --degrees or set [tower].degrees".into()));
    }
    let forcing = tower::minimal_forcing_degree(&p, &ctx.cert)?;
    let ledger = tower::tower_simulate(&p, &degrees, &ctx.cert)?;
    let value = json!({ "forcing": forcing, "ledger": ledger });
    let mut csv = String::from("level,degree,cumulative_degree,volume,A_value,A_value_exact,crossed,certificate\n");
    for l in &ledger.levels {
        let _ = writeln!(csv, "{},{},{},{},{},{},{},{}", l.level, l.degree, l.cumulative_degree, l.volume, l.a_value, l.a_value_exact, l.crossed, l.certificate);
    }
    ctx.emit("tower", Some(&pretty(&value)), Some(&csv))?;
    println!("minimal forcing degree {}", forcing.degree);
    match ledger.first_crossing {
        Some(k) => println!("first crossing at level {k}"),
        None => println!("no crossing within {} levels", ledger.levels.len()),
    }
    Ok(0)
}

fn cmd_check(ctx: &Ctx, kind: CheckKind) -> Result<u8> {
    match kind {
        CheckKind::Cheng { basis, j_max, tolerance } => {
            let l = load_lattice(&basis)?;
            let spec = spectral::torus_spectrum_with_count(&l, j_max + 1, &ExactReal::one(), &ctx.cert)?;
            let diam = spectral::flat_diameter(&CrystalGroup::torus(l.clone()), tolerance)?;
            let report = spectral::cheng_bound_check(&spec, l.dim(), &diam, j_max)?;
            let mut csv = String::from("j,lambda,lambda_exact,bound,margin,ok\n");
            for r in &report.rows {
                let _ = writeln!(csv, "{},{},{},{},{},{}", r.j, r.lambda, r.lambda_exact, r.bound, r.margin, r.ok);
            }
            ctx.emit("check_cheng", Some(&pretty(&serde_json::to_value(&report)?)), Some(&csv))?;
            println!("cheng: {:?}, {} violations", report.verdict, report.violations);
            Ok(if report.verdict == Verdict::Satisfied { 0 } else { 1 })
        }
        CheckKind::Torsion { group } => {
            let g = load_group(&group)?;
            let validation = g.validate();
            let report = g.torsion_report()?;
            let value = json!({ "validation": validation, "torsion": report });
            let csv = format!("key,value\nvalid,{}\ntorsion_free,{}\n", validation.valid, report.torsion_free);
            ctx.emit("check_torsion", Some(&pretty(&value)), Some(&csv))?;
            println!("torsion free: {}", report.torsion_free);
            Ok(if report.torsion_free { 0 } else { 1 })
        }
        CheckKind::Cone { group, matrix } => {
            let g = load_group(&group)?;
            let a = load_matrix(&matrix)?;
            let inside = g.cone_membership(&a)?;
            let value = json!({ "matrix": format_matrix(&a), "cone_membership": inside });
            ctx.emit("check_cone", Some(&pretty(&value)), Some(&format!("key,value\ncone_membership,{inside}\n")))?;
            println!("cone membership: {inside}");
            Ok(if inside { 0 } else { 1 })
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<Error>() {
        Some(Error::UndecidableComparison { .. }) => 3,
        Some(Error::GridTooCoarse(_)) => 4,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

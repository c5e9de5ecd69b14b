//! Command-line front end: mesh/map construction, energy and degree
//! reports, surgeries, energy minimization, heterotopic sequences, and
//! bubbling detection. All reports are deterministic for a fixed config
//! and seed, independent of `--threads`.

mod selftest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use heterotopy::energy::{p_energy, EnergyReport};
use heterotopy::error::Error;
use heterotopy::experiments::{
    detect_bubbling, heterotopic_sequence, minimize_energy, perturb_field, HetConfig,
    MinimizeConfig,
};
use heterotopy::io::{parse_map_spec, parse_mesh_spec, RunConfig};
use heterotopy::map::{sample, AnalyticMap, VertexField};
use heterotopy::mesh::{make_chart, Chart, MeshKind, SurfacePoint, TriMesh};
use heterotopy::surgery::{
    concatenate, insert_bubble, make_bubble, open_map, reflect_glue, DiskMap,
};
use heterotopy::topology::brouwer_degree;

#[derive(Parser)]
#[command(name = "heterotopy", about = "Dirichlet energy, Brouwer degree, and conformal surgery on maps into the 2-sphere", version)]
struct Cli {
    /// Worker threads for inner loops (default: HETEROTOPY_THREADS or 1).
    /// Results are byte-identical for every value.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Seed recorded in reports and used by seeded perturbations.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// JSON config file; explicit flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output path for the JSON report (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Optional CSV mirror of the tabular part of the report.
    #[arg(long, global = true)]
    csv: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct ChartArgs {
    /// Chart center: `x,y,z` on the sphere or `u,v` on the torus.
    #[arg(long)]
    center: Option<String>,
    /// Chart geodesic radius.
    #[arg(long)]
    rho: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Build a mesh and report its combinatorics (optionally write it).
    Mesh {
        /// Mesh spec: icosphere:<subdivisions> or torus:<n>.
        #[arg(long)]
        mesh: Option<String>,
    },
    /// Sample an analytic map into a vertex field file.
    Sample {
        #[arg(long)]
        mesh: Option<String>,
        /// Map spec: identity | constant:x,y,z | stereo:d,scale[,cx,cy,cz] | file:path
        #[arg(long)]
        map: Option<String>,
    },
    /// Dirichlet p-energy report of a map or field.
    Energy {
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        map: Option<String>,
        /// Vertex-field JSON file (alternative to --map).
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Include the per-triangle masses in the report.
        #[arg(long)]
        full: bool,
    },
    /// Brouwer degree report of a map or field.
    Degree {
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Apply a surgery to a map and write the modified description.
    Surgery {
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        map: Option<String>,
        /// One of: open, insert, reflect-glue, concat.
        #[arg(long)]
        op: String,
        #[command(flatten)]
        chart: ChartArgs,
        /// Opening radius (fraction of the chart radius).
        #[arg(long)]
        r: Option<f64>,
        /// Insertion parameter (fraction of the chart radius).
        #[arg(long)]
        t: Option<f64>,
        /// Disk map spec for insert/concat: bubble:d,scale[,bx,by,bz] or constant:x,y,z.
        #[arg(long)]
        inner: Option<String>,
        /// Second disk map for concat.
        #[arg(long)]
        inner2: Option<String>,
        /// Second map spec for reflect-glue.
        #[arg(long)]
        map2: Option<String>,
        /// Inner gluing radius for reflect-glue.
        #[arg(long)]
        rho_inner: Option<f64>,
        /// Second chart center for concat.
        #[arg(long)]
        center2: Option<String>,
        /// Second chart radius for concat.
        #[arg(long)]
        rho2: Option<f64>,
        /// Where to write the resulting map JSON.
        #[arg(long)]
        out_map: Option<PathBuf>,
    },
    /// Projected gradient descent with Armijo backtracking.
    Minimize {
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        map: Option<String>,
        #[arg(long)]
        field: Option<PathBuf>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        step: Option<f64>,
        #[arg(long)]
        armijo: Option<f64>,
        #[arg(long)]
        grad_tol: Option<f64>,
        /// Disable the degree guard.
        #[arg(long)]
        no_degree_guard: bool,
        /// Seeded tangent noise added to the start field.
        #[arg(long)]
        noise: Option<f64>,
        /// Write the final field here.
        #[arg(long)]
        out_field: Option<PathBuf>,
    },
    /// Heterotopic approximation sequence toward a target degree.
    Het {
        #[arg(long)]
        mesh: Option<String>,
        /// Starting map spec.
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to_degree: Option<i64>,
        /// Comma-separated strictly decreasing schedule in (0,1).
        #[arg(long)]
        t: Option<String>,
        /// Bubble concentration scale.
        #[arg(long)]
        bubble_scale: Option<f64>,
        #[command(flatten)]
        chart: ChartArgs,
    },
    /// Detect concentration atoms on a heterotopic family.
    Bubbling {
        #[arg(long)]
        mesh: Option<String>,
        #[arg(long)]
        from: Option<String>,
        #[arg(long)]
        to_degree: Option<i64>,
        #[arg(long)]
        t: Option<String>,
        #[arg(long)]
        bubble_scale: Option<f64>,
        /// Concentration threshold.
        #[arg(long)]
        eta: Option<f64>,
        /// Comma-separated strictly decreasing detection radii.
        #[arg(long)]
        radii: Option<String>,
        #[command(flatten)]
        chart: ChartArgs,
    },
    /// Run the built-in invariant suite and print a pass/fail table.
    Selftest,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(flagged) => {
            if flagged {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            let kind = match &e {
                Error::Parameter(_) => "parameter",
                Error::Resource(_) => "resource",
                Error::Chart(_) => "chart",
                Error::Geometry(_) => "geometry",
                Error::Surgery(_) => "surgery",
                Error::Composition(_) => "composition",
                Error::Numeric(_) => "numeric",
                Error::Unsupported(_) => "unsupported",
                Error::Io(_) => "io",
                Error::Json(_) => "json",
            };
            eprintln!("{}", json!({ "error": e.to_string(), "kind": kind }));
            ExitCode::FAILURE
        }
    }
}

struct Ctx {
    config: RunConfig,
    seed: u64,
    out: Option<PathBuf>,
    csv: Option<PathBuf>,
}

impl Ctx {
    fn mesh(&self, flag: &Option<String>) -> Result<TriMesh, Error> {
        let spec = flag
            .clone()
            .or_else(|| self.config.mesh.clone())
            .ok_or_else(|| Error::Parameter("no mesh given (--mesh or config)".into()))?;
        parse_mesh_spec(&spec)
    }

    fn map(&self, flag: &Option<String>) -> Result<AnalyticMap, Error> {
        let spec = flag
            .clone()
            .or_else(|| self.config.map.clone())
            .ok_or_else(|| Error::Parameter("no map given (--map or config)".into()))?;
        parse_map_spec(&spec)
    }

    fn emit(&self, report: &Value) -> Result<(), Error> {
        let text = format!("{}\n", serde_json::to_string_pretty(report)?);
        match &self.out {
            Some(path) => std::fs::write(path, text)?,
            None => print!("{text}"),
        }
        Ok(())
    }

    fn emit_csv(&self, header: &str, rows: &[String]) -> Result<(), Error> {
        if let Some(path) = &self.csv {
            let mut text = String::from(header);
            text.push('\n');
            for row in rows {
                text.push_str(row);
                text.push('\n');
            }
            std::fs::write(path, text)?;
        }
        Ok(())
    }
}

fn parse_chart(args: &ChartArgs, kind: MeshKind) -> Result<Chart, Error> {
    let center = match (&args.center, kind) {
        (Some(text), MeshKind::Sphere) => {
            let v = parse_float_list(text)?;
            if v.len() != 3 {
                return Err(Error::Parameter("sphere chart center needs x,y,z".into()));
            }
            SurfacePoint::Sphere([v[0], v[1], v[2]])
        }
        (Some(text), MeshKind::FlatTorus) => {
            let v = parse_float_list(text)?;
            if v.len() != 2 {
                return Err(Error::Parameter("torus chart center needs u,v".into()));
            }
            SurfacePoint::Torus([v[0], v[1]])
        }
        (None, MeshKind::Sphere) => SurfacePoint::Sphere([0.0, 0.0, 1.0]),
        (None, MeshKind::FlatTorus) => SurfacePoint::Torus([0.5, 0.5]),
    };
    let rho = args.rho.unwrap_or(match kind {
        MeshKind::Sphere => 0.95,
        MeshKind::FlatTorus => 0.24,
    });
    make_chart(center, rho)
}

fn parse_float_list(text: &str) -> Result<Vec<f64>, Error> {
    text.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("bad number `{x}`")))
        })
        .collect()
}

fn parse_disk_map(spec: &str) -> Result<DiskMap, Error> {
    if let Some(rest) = spec.strip_prefix("bubble:") {
        let v = parse_float_list(rest)?;
        let (d, scale) = match v.len() {
            2 | 5 => (v[0] as i32, v[1]),
            _ => {
                return Err(Error::Parameter(
                    "bubble spec needs degree,scale or degree,scale,bx,by,bz".into(),
                ))
            }
        };
        let b = if v.len() == 5 { [v[2], v[3], v[4]] } else { [0.0, 0.0, 1.0] };
        return make_bubble(d, scale, b);
    }
    if let Some(rest) = spec.strip_prefix("constant:") {
        let v = parse_float_list(rest)?;
        if v.len() != 3 {
            return Err(Error::Parameter("constant disk map needs x,y,z".into()));
        }
        return Ok(DiskMap::constant([v[0], v[1], v[2]]));
    }
    Err(Error::Parameter(format!(
        "disk map spec `{spec}`: expected bubble:.. or constant:.."
    )))
}

fn load_field(path: &PathBuf, mesh: &TriMesh) -> Result<VertexField, Error> {
    let text = std::fs::read_to_string(path)?;
    let field = VertexField::from_json(&text)?;
    field.check_on(mesh)?;
    Ok(field)
}

fn field_from(
    ctx: &Ctx,
    mesh: &TriMesh,
    map: &Option<String>,
    field: &Option<PathBuf>,
) -> Result<VertexField, Error> {
    match field {
        Some(path) => load_field(path, mesh),
        None => sample(&ctx.map(map)?, mesh),
    }
}

fn fmt_f64(x: f64) -> String {
    let mut s = format!("{x}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

fn energy_value(report: &EnergyReport, full: bool) -> Value {
    if full {
        serde_json::to_value(report).expect("report serializes")
    } else {
        json!({ "p": report.p, "total": report.total })
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    let config = match &cli.config {
        Some(path) => RunConfig::from_json(&std::fs::read_to_string(path)?)?,
        None => RunConfig::default(),
    };
    let threads = cli
        .threads
        .or(config.threads)
        .or_else(|| {
            std::env::var("HETEROTOPY_THREADS")
                .ok()
                .and_then(|s| s.parse().ok())
        })
        .unwrap_or(1);
    heterotopy::parallel::set_threads(threads);

    let ctx = Ctx {
        out: cli.out.clone().or_else(|| config.out.clone().map(PathBuf::from)),
        csv: cli.csv.clone(),
        seed: cli.seed,
        config,
    };

    match cli.command {
        Command::Mesh { mesh } => {
            let m = ctx.mesh(&mesh)?;
            ctx.emit(&json!({
                "kind": format!("{:?}", m.kind),
                "vertices": m.vertex_count(),
                "edges": m.edge_count(),
                "triangles": m.triangle_count(),
                "euler_characteristic": m.euler_characteristic(),
                "total_area": m.total_area(),
                "mesh_hash": m.content_hash(),
                "mesh_json": serde_json::from_str::<Value>(&m.to_json())?,
            }))?;
            Ok(false)
        }
        Command::Sample { mesh, map } => {
            let m = ctx.mesh(&mesh)?;
            let f = sample(&ctx.map(&map)?, &m)?;
            ctx.emit(&serde_json::from_str::<Value>(&f.to_json())?)?;
            Ok(false)
        }
        Command::Energy {
            mesh,
            map,
            field,
            p,
            full,
        } => {
            let m = ctx.mesh(&mesh)?;
            let f = field_from(&ctx, &m, &map, &field)?;
            let report = p_energy(&f, &m, p)?;
            ctx.emit(&energy_value(&report, full))?;
            Ok(false)
        }
        Command::Degree { mesh, map, field } => {
            let m = ctx.mesh(&mesh)?;
            let f = field_from(&ctx, &m, &map, &field)?;
            let report = brouwer_degree(&f, &m)?;
            ctx.emit(&serde_json::to_value(&report)?)?;
            Ok(!report.reliable)
        }
        Command::Surgery {
            mesh,
            map,
            op,
            chart,
            r,
            t,
            inner,
            inner2,
            map2,
            rho_inner,
            center2,
            rho2,
            out_map,
        } => {
            let m = ctx.mesh(&mesh)?;
            let chart = parse_chart(&chart, m.kind)?;
            let (result_json, summary): (String, Value) = match op.as_str() {
                "open" => {
                    let base = ctx.map(&map)?;
                    let r = r.ok_or_else(|| Error::Parameter("open needs --r".into()))?;
                    let out = open_map(&base, &chart, r)?;
                    (out.to_json(), json!({ "op": "open", "r": r }))
                }
                "insert" => {
                    let base = ctx.map(&map)?;
                    let t = t.ok_or_else(|| Error::Parameter("insert needs --t".into()))?;
                    let spec = inner.ok_or_else(|| Error::Parameter("insert needs --inner".into()))?;
                    let disk = parse_disk_map(&spec)?;
                    let opened = open_map(&base, &chart, t)?;
                    let out = insert_bubble(&opened, &chart, disk, t)?;
                    (out.to_json(), json!({ "op": "insert", "t": t }))
                }
                "reflect-glue" => {
                    let u = ctx.map(&map)?;
                    let spec2 = map2
                        .or_else(|| ctx.config.map2.clone())
                        .ok_or_else(|| Error::Parameter("reflect-glue needs --map2".into()))?;
                    let v = parse_map_spec(&spec2)?;
                    let rho = rho_inner
                        .ok_or_else(|| Error::Parameter("reflect-glue needs --rho-inner".into()))?;
                    let w = reflect_glue(&u, &v, &chart, rho)?;
                    (
                        serde_json::to_string_pretty(&w)?,
                        json!({ "op": "reflect-glue", "rho_inner": rho }),
                    )
                }
                "concat" => {
                    let s1 = inner.ok_or_else(|| Error::Parameter("concat needs --inner".into()))?;
                    let s2 = inner2.ok_or_else(|| Error::Parameter("concat needs --inner2".into()))?;
                    let f = parse_disk_map(&s1)?;
                    let g = parse_disk_map(&s2)?;
                    let chart2 = parse_chart(
                        &ChartArgs {
                            center: center2,
                            rho: rho2,
                        },
                        m.kind,
                    )?;
                    let out = concatenate(&f, &g, (&chart, &chart2))?;
                    (out.to_json(), json!({ "op": "concat" }))
                }
                other => {
                    return Err(Error::Parameter(format!(
                        "unknown surgery `{other}`: expected open, insert, reflect-glue, concat"
                    )))
                }
            };
            if let Some(path) = out_map {
                std::fs::write(path, format!("{result_json}\n"))?;
                ctx.emit(&summary)?;
            } else {
                ctx.emit(&serde_json::from_str::<Value>(&result_json)?)?;
            }
            Ok(false)
        }
        Command::Minimize {
            mesh,
            map,
            field,
            iters,
            step,
            armijo,
            grad_tol,
            no_degree_guard,
            noise,
            out_field,
        } => {
            let m = ctx.mesh(&mesh)?;
            let mut f = field_from(&ctx, &m, &map, &field)?;
            if let Some(amp) = noise {
                f = perturb_field(&f, amp, ctx.seed);
            }
            let base = ctx.config.minimize.unwrap_or_default();
            let cfg = MinimizeConfig {
                max_iters: iters.unwrap_or(base.max_iters),
                step: step.unwrap_or(base.step),
                armijo_c: armijo.unwrap_or(base.armijo_c),
                grad_tol: grad_tol.unwrap_or(base.grad_tol),
                degree_guard: !no_degree_guard && base.degree_guard,
            };
            let (final_field, trace) = minimize_energy(&f, &m, &cfg)?;
            if let Some(path) = out_field {
                std::fs::write(path, format!("{}\n", final_field.to_json()))?;
            }
            let rows: Vec<String> = trace
                .steps
                .iter()
                .map(|s| {
                    format!(
                        "{},{},{},{},{}",
                        s.iter,
                        fmt_f64(s.energy),
                        fmt_f64(s.degree_raw),
                        s.degree_snapped,
                        fmt_f64(s.step_size)
                    )
                })
                .collect();
            ctx.emit_csv("iter,energy,degree_raw,degree_snapped,step_size", &rows)?;
            let dropped = matches!(
                trace.status,
                heterotopy::experiments::TerminalStatus::DegreeDropped { .. }
            );
            ctx.emit(&json!({
                "seed": ctx.seed,
                "config": serde_json::to_value(cfg)?,
                "status": serde_json::to_value(trace.status)?,
                "steps": serde_json::to_value(&trace.steps)?,
                "final_energy": trace.steps.last().map(|s| s.energy),
            }))?;
            Ok(dropped)
        }
        Command::Het {
            mesh,
            from,
            to_degree,
            t,
            bubble_scale,
            chart,
        } => {
            let m = ctx.mesh(&mesh)?;
            let u = ctx.map(&from)?;
            let target = to_degree
                .or(ctx.config.to_degree)
                .ok_or_else(|| Error::Parameter("no target degree (--to-degree)".into()))?;
            let schedule = match t {
                Some(text) => parse_float_list(&text)?,
                None => ctx
                    .config
                    .t_schedule
                    .clone()
                    .unwrap_or_else(|| vec![0.3, 0.2, 0.12]),
            };
            let hc = HetConfig {
                chart: if chart.center.is_some() || chart.rho.is_some() {
                    Some(parse_chart(&chart, m.kind)?)
                } else {
                    None
                },
                bubble_scale,
            };
            let report = heterotopic_sequence(&u, &m, target, &schedule, &hc)?;
            let rows: Vec<String> = report
                .records
                .iter()
                .map(|r| {
                    format!(
                        "{},{},{},{},{},{}",
                        fmt_f64(r.t),
                        fmt_f64(r.energy),
                        fmt_f64(r.degree_raw),
                        r.degree,
                        fmt_f64(r.distance),
                        r.flagged
                    )
                })
                .collect();
            ctx.emit_csv("t,energy,degree_raw,degree,distance,flagged", &rows)?;
            let flagged = report.any_flagged();
            ctx.emit(&json!({
                "seed": ctx.seed,
                "records": serde_json::to_value(&report.records)?,
                "summary": {
                    "fitted_limit": report.fitted_limit,
                    "target_constant": report.target_constant,
                    "base_energy": report.base_energy,
                    "base_degree": report.base_degree,
                    "target_degree": report.target_degree,
                },
            }))?;
            Ok(flagged)
        }
        Command::Bubbling {
            mesh,
            from,
            to_degree,
            t,
            bubble_scale,
            eta,
            radii,
            chart,
        } => {
            let m = ctx.mesh(&mesh)?;
            let u = ctx.map(&from)?;
            let target = to_degree
                .or(ctx.config.to_degree)
                .ok_or_else(|| Error::Parameter("no target degree (--to-degree)".into()))?;
            let schedule = match t {
                Some(text) => parse_float_list(&text)?,
                None => ctx
                    .config
                    .t_schedule
                    .clone()
                    .unwrap_or_else(|| vec![0.4, 0.3, 0.2]),
            };
            let radii = match radii {
                Some(text) => parse_float_list(&text)?,
                None => ctx
                    .config
                    .radii
                    .clone()
                    .unwrap_or_else(|| vec![0.35, 0.3, 0.25]),
            };
            let eta = eta
                .or(ctx.config.eta)
                .unwrap_or(heterotopy::experiments::DEFAULT_ETA);
            let hc = HetConfig {
                chart: if chart.center.is_some() || chart.rho.is_some() {
                    Some(parse_chart(&chart, m.kind)?)
                } else {
                    None
                },
                bubble_scale: bubble_scale.or(Some(0.3)),
            };
            // build the family of sampled competitors, then detect
            let u_field = sample(&u, &m)?;
            let base_degree = brouwer_degree(&u_field, &m)?.snapped;
            let family: Vec<VertexField> = {
                let chart = match &hc.chart {
                    Some(c) => c.clone(),
                    None => parse_chart(&ChartArgs::default(), m.kind)?,
                };
                let delta = target - base_degree;
                let mut fam = Vec::new();
                for &tt in &schedule {
                    let opened = open_map(&u, &chart, tt)?;
                    let v = if delta == 0 {
                        opened
                    } else {
                        let b = u.eval(&chart.center);
                        let bubble = make_bubble(delta as i32, hc.bubble_scale.unwrap(), b)?;
                        insert_bubble(&opened, &chart, bubble, tt)?
                    };
                    fam.push(sample(&v, &m)?);
                }
                fam
            };
            let report = detect_bubbling(&family, &m, eta, &radii)?;
            let rows: Vec<String> = report
                .atoms
                .iter()
                .map(|a| {
                    let loc = match a.location {
                        SurfacePoint::Sphere(p) => {
                            format!("{},{},{}", fmt_f64(p[0]), fmt_f64(p[1]), fmt_f64(p[2]))
                        }
                        SurfacePoint::Torus(p) => format!("{},{},", fmt_f64(p[0]), fmt_f64(p[1])),
                    };
                    format!(
                        "{loc},{},{},{},{}",
                        fmt_f64(a.mass),
                        a.degree_defect,
                        fmt_f64(a.radius_used),
                        a.certified
                    )
                })
                .collect();
            ctx.emit_csv("x,y,z,mass,degree_defect,radius,certified", &rows)?;
            let uncertified = report.atoms.iter().any(|a| !a.certified);
            ctx.emit(&json!({
                "seed": ctx.seed,
                "eta": eta,
                "radii": radii,
                "atoms": serde_json::to_value(&report.atoms)?,
                "merged": report.merged,
            }))?;
            Ok(uncertified)
        }
        Command::Selftest => {
            let saved_threads = heterotopy::parallel::threads();
            let report = selftest::run_selftest();
            heterotopy::parallel::set_threads(saved_threads);
            let mut table = String::new();
            for g in &report.groups {
                table.push_str(&format!(
                    "{:<36} {:>10} {:>6} assertions  {}\n",
                    g.name,
                    if g.passed { "PASS" } else { "FAIL" },
                    g.assertions,
                    if g.passed { "" } else { g.detail.as_str() }
                ));
            }
            table.push_str(&format!(
                "total: {} assertions, {}\n",
                report.total_assertions,
                if report.all_passed { "all passed" } else { "FAILURES" }
            ));
            eprint!("{table}");
            ctx.emit(&serde_json::to_value(&report)?)?;
            if !report.all_passed {
                return Err(Error::Numeric("selftest failures".into()));
            }
            Ok(false)
        }
    }
}

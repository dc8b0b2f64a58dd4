mod output;

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use membrane_cauchy::cauchy::{
    admissibility, build_integral_curve, residual_convergence, verify_integral_curve, CauchyData, IntegralCurve,
};
use membrane_cauchy::curve::CurveSpec;
use membrane_cauchy::cylinder::{
    analyze_curve, separating_values, solve_phi_mu, synthesize_curve, CylinderParams, SeparationOptions,
};
use membrane_cauchy::mesh::{extrude_cylinder, patch_mesh};
use membrane_cauchy::shape::{MaterialParams, PhiModel, PrincipalPatch, ShapeModel};
use membrane_cauchy::strip::{march, validate_patch, MarchOptions, Scheme};
use membrane_cauchy::xfunc::XExpr;

use output::{emit, exit_code, provenance, write_text, InvariantViolation};

/// Cauchy problems for membrane shape equations and the closed-cylinder family.
#[derive(Parser, Serialize)]
#[command(name = "membrane", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Serialize)]
enum Command {
    /// Derive the curvature coefficients B1, B2, D1, D2 for a right-hand side.
    DeriveCoeffs {
        #[command(flatten)]
        model: ModelArgs,
        /// Emit JSON (expression text and trees) instead of plain text.
        #[arg(long)]
        json: bool,
    },
    /// Integral curves and strip marching from Cauchy data.
    #[command(subcommand)]
    Cauchy(CauchyCommand),
    /// The family of closed cylinders.
    #[command(subcommand)]
    Cylinder(CylinderCommand),
    /// Recompute residuals of a saved integral curve or marched patch.
    Verify {
        /// Output of `cauchy build` or `cauchy march`.
        input: PathBuf,
        /// Fail (exit 2) when any interior residual exceeds this.
        #[arg(long, default_value_t = 1e-3)]
        tol: f64,
        /// Rows skipped at each edge of a patch.
        #[arg(long, default_value_t = 1)]
        margin: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum PhiChoice {
    Willmore,
    Helfrich,
}

#[derive(Args, Clone, Debug, Serialize, Deserialize)]
struct ModelArgs {
    #[arg(long, value_enum, default_value_t = PhiChoice::Willmore)]
    phi: PhiChoice,
    /// Bending rigidity.
    #[arg(long, default_value_t = 1.0)]
    k: f64,
    #[arg(long, default_value_t = 0.0)]
    kbar: f64,
    /// Spontaneous curvature.
    #[arg(long, default_value_t = 0.0)]
    c0: f64,
    /// Pressure difference.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pressure: f64,
    /// Surface tension.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    lambda: f64,
}

impl ModelArgs {
    fn material(&self) -> MaterialParams {
        MaterialParams { k: self.k, kbar: self.kbar, c0: self.c0, pressure: self.pressure, lambda: self.lambda }
    }

    fn build(&self) -> Result<ShapeModel> {
        let m = match self.phi {
            PhiChoice::Willmore => PhiModel::Willmore,
            PhiChoice::Helfrich => PhiModel::Helfrich(self.material()),
        };
        Ok(ShapeModel::new(m)?)
    }
}

#[derive(Args, Clone, Debug, Serialize)]
struct DataArgs {
    /// Curve spec: a JSON file or an inline JSON object, e.g. '{"kind":"circle","radius":1}'.
    #[arg(long)]
    curve: String,
    /// Mean curvature along the curve, as an expression in x.
    #[arg(long, allow_hyphen_values = true)]
    h: String,
    /// Normal derivative datum h^W, as an expression in x.
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    hw: String,
    /// Samples along the curve.
    #[arg(long, default_value_t = 128)]
    n: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    x0: f64,
    /// Initial Bishop angle; defaults to -pi/2.
    #[arg(long, allow_hyphen_values = true)]
    a0: Option<f64>,
    #[command(flatten)]
    model: ModelArgs,
}

impl DataArgs {
    fn data(&self) -> Result<CauchyData> {
        ensure!(self.n >= 8, InvariantViolation(format!("grid size {} < 8", self.n)));
        let spec: CurveSpec = if self.curve.trim_start().starts_with('{') {
            serde_json::from_str(&self.curve).context("malformed inline curve spec")?
        } else {
            let text = std::fs::read_to_string(&self.curve).with_context(|| format!("cannot read {}", self.curve))?;
            serde_json::from_str(&text).with_context(|| format!("malformed curve spec {}", self.curve))?
        };
        let curve = spec.build().context("invalid curve spec")?;
        let h = XExpr::parse(&self.h).map_err(|e| InvariantViolation(format!("--h: {e}")))?;
        let hw = XExpr::parse(&self.hw).map_err(|e| InvariantViolation(format!("--hw: {e}")))?;
        Ok(CauchyData::new(curve, Arc::new(h), Arc::new(hw), self.x0, self.a0.unwrap_or(-PI / 2.0)))
    }
}

#[derive(Subcommand, Serialize)]
enum CauchyCommand {
    /// Build and check the canonical integral curve.
    Build {
        #[command(flatten)]
        data: DataArgs,
        /// Also measure residual convergence over n, 2n, 4n samples.
        #[arg(long)]
        convergence: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// March a strip off the integral curve.
    March {
        #[command(flatten)]
        data: DataArgs,
        /// Number of steps in y.
        #[arg(long, default_value_t = 16)]
        steps: usize,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        dy: f64,
        #[arg(long, default_value = "rk4")]
        scheme: String,
        /// Patch JSON (with residual diagnostics).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Optional OBJ mesh of the patch.
        #[arg(long)]
        obj: Option<PathBuf>,
    },
}

#[derive(Args, Clone, Debug, Serialize)]
struct FamilyArgs {
    /// Symmetry order.
    #[arg(long)]
    upsilon: u32,
    /// Turning number, coprime to upsilon.
    #[arg(long, default_value_t = 1)]
    mu: u32,
    /// Samples per curvature period.
    #[arg(long, default_value_t = 600)]
    samples: usize,
}

#[derive(Subcommand, Serialize)]
enum CylinderCommand {
    /// Solve the closure condition and synthesize the directrix.
    Solve {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        /// Write directrix.json, directrix.csv and directrix.svg here.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// Locate the convexity threshold and the self-intersection thresholds.
    Separatrices {
        #[arg(long)]
        upsilon: u32,
        #[arg(long, default_value_t = 0.98)]
        rho_max: f64,
        #[arg(long, default_value_t = 0.01)]
        scan_step: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extrude the directrix to a triangle mesh.
    Mesh {
        #[command(flatten)]
        family: FamilyArgs,
        #[arg(long, allow_hyphen_values = true)]
        rho: f64,
        #[arg(long, default_value_t = 4.0)]
        height: f64,
        #[arg(long, default_value_t = 16)]
        levels: usize,
        /// Orientation sign of the rulings.
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Classify members over a grid of rho values, in parallel.
    Sweep {
        #[command(flatten)]
        family: FamilyArgs,
        /// start:stop:count
        #[arg(long)]
        rho_grid: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let prov = provenance(cli);
    match &cli.command {
        Command::DeriveCoeffs { model, json } => derive_coeffs(model, *json, prov),
        Command::Cauchy(CauchyCommand::Build { data, convergence, out }) => {
            cauchy_build(data, *convergence, out.as_deref(), prov)
        }
        Command::Cauchy(CauchyCommand::March { data, steps, dy, scheme, out, obj }) => {
            cauchy_march(data, *steps, *dy, scheme, out.as_deref(), obj.as_deref(), prov)
        }
        Command::Cylinder(CylinderCommand::Solve { family, rho, out_dir }) => {
            cylinder_solve(family, *rho, out_dir.as_deref(), prov)
        }
        Command::Cylinder(CylinderCommand::Separatrices { upsilon, rho_max, scan_step, out }) => {
            let opts = SeparationOptions { rho_max: *rho_max, scan_step: *scan_step, ..Default::default() };
            ensure!(opts.scan_step > 0.0, InvariantViolation("scan step must be positive".into()));
            let sv = separating_values(*upsilon, opts)?;
            emit(&json!({ "provenance": prov, "separating_values": sv }), out.as_deref())
        }
        Command::Cylinder(CylinderCommand::Mesh { family, rho, height, levels, eps, out }) => {
            cylinder_mesh(family, *rho, *height, *levels, *eps, out, prov)
        }
        Command::Cylinder(CylinderCommand::Sweep { family, rho_grid, out }) => {
            cylinder_sweep(family, rho_grid, out.as_deref(), prov)
        }
        Command::Verify { input, tol, margin, out } => verify(input, *tol, *margin, out.as_deref(), prov),
    }
}

fn derive_coeffs(model: &ModelArgs, as_json: bool, prov: Value) -> Result<()> {
    let m = model.build()?;
    if as_json {
        return emit(&json!({ "provenance": prov, "phi": model.phi, "coefficients": m.coefficients.to_json() }), None);
    }
    for (name, e) in m.coefficients.exprs() {
        println!("{name} = {}", e.to_poly()?.to_text());
    }
    Ok(())
}

fn residual_summary(ic: &IntegralCurve, model: &ShapeModel) -> Value {
    let r = verify_integral_curve(ic, model);
    let forms: serde_json::Map<String, Value> = r
        .forms
        .iter()
        .map(|f| (f.form.clone(), json!({ "max": f.max, "argmax": f.argmax, "spikes": f.spikes })))
        .collect();
    json!({
        "dx": r.dx,
        "max": r.max(),
        "forms": forms,
        "mean_curvature_defect": ic.mean_curvature_defect(),
        "hw_defect": ic.hw_defect(),
        "min_gap": ic.min_gap(),
    })
}

fn cauchy_build(args: &DataArgs, convergence: bool, out: Option<&Path>, prov: Value) -> Result<()> {
    let data = args.data()?;
    let model = args.model.build()?;
    let ms = admissibility(&data, &data.grid(args.n))?;
    let ic = build_integral_curve(&data, &model, args.n)?;
    let mut v = json!({
        "provenance": prov,
        "model": args.model,
        "admissibility": { "min_m": ms.iter().copied().fold(f64::INFINITY, f64::min) },
        "residuals": residual_summary(&ic, &model),
        "integral_curve": ic,
    });
    if convergence {
        let rep = residual_convergence(&data, &model, &[args.n, 2 * args.n, 4 * args.n])?;
        v["convergence"] = serde_json::to_value(&rep)?;
    }
    emit(&v, out)
}

fn cauchy_march(
    args: &DataArgs,
    steps: usize,
    dy: f64,
    scheme: &str,
    out: Option<&Path>,
    obj: Option<&Path>,
    prov: Value,
) -> Result<()> {
    ensure!(dy > 0.0 && steps >= 1, InvariantViolation("need dy > 0 and at least one step".into()));
    let scheme: Scheme = scheme.parse().map_err(InvariantViolation)?;
    let data = args.data()?;
    let model = args.model.build()?;
    let ic = build_integral_curve(&data, &model, args.n)?;
    let r = march(&ic, &model, &MarchOptions::new(dy, steps + 1, scheme))?;
    let diag = validate_patch(&r.patch, &model);
    if let Some(path) = obj {
        let mut buf = Vec::new();
        patch_mesh(&r.patch).write_obj(&mut buf, &format!("config_hash {}", prov["config_hash"].as_str().unwrap_or_default()))?;
        write_text(path, &String::from_utf8(buf)?)?;
    }
    let v = json!({
        "provenance": prov,
        "model": args.model,
        "rows": r.patch.ny,
        "truncated": r.truncated,
        "monitor": r.monitor,
        "notes": r.diagnostics,
        "residuals": diag.summary(1).into_iter().collect::<std::collections::BTreeMap<_, _>>(),
        "frame_drift": diag.frame_drift,
        "patch": r.patch,
    });
    emit(&v, out)
}

fn family_params(f: &FamilyArgs, rho: f64) -> Result<CylinderParams> {
    ensure!(f.samples >= 8, InvariantViolation(format!("samples {} < 8", f.samples)));
    let s = solve_phi_mu(f.upsilon, f.mu, rho, None)?;
    let mut p = CylinderParams::new(s, rho, f.upsilon);
    p.mu = f.mu;
    p.validate()?;
    Ok(p)
}

fn cylinder_solve(f: &FamilyArgs, rho: f64, out_dir: Option<&Path>, prov: Value) -> Result<()> {
    let p = family_params(f, rho)?;
    let c = p.constants()?;
    let curve = synthesize_curve(&p, f.samples)?;
    let report = analyze_curve(&curve, f.upsilon, 1e-5)?;
    let (kmin, kmax) = c.kappa_extremes();
    // Constant curvature at rho = 0: the directrix is a circle.
    let radius = (rho == 0.0).then(|| 1.0 / kmin.abs());
    let mut v = json!({
        "provenance": prov,
        "upsilon": f.upsilon,
        "mu": f.mu,
        "rho": rho,
        "varsigma": p.varsigma,
        "radius": radius,
        "kappa_range": [kmin.min(kmax), kmin.max(kmax)],
        "closure_index": c.closure_index()?,
        "constants": c,
        "curve": {
            "length": curve.length,
            "closure_gap": curve.closure_gap,
            "unit_speed_defect": curve.unit_speed_defect,
            "closed_form_defect": curve.closed_form_defect,
            "samples": curve.polyline.len(),
        },
        "report": report,
    });
    if let Some(dir) = out_dir {
        let mut csv = Vec::new();
        curve.polyline.to_csv(&mut csv)?;
        write_text(&dir.join("directrix.csv"), &String::from_utf8(csv)?)?;
        write_text(&dir.join("directrix.svg"), &curve.polyline.to_svg(480.0))?;
        emit(&v, Some(&dir.join("directrix.json")))?;
        v["files"] = json!(["directrix.json", "directrix.csv", "directrix.svg"]);
    }
    emit(&v, None)
}

fn cylinder_mesh(
    f: &FamilyArgs,
    rho: f64,
    height: f64,
    levels: usize,
    eps: f64,
    out: &Path,
    prov: Value,
) -> Result<()> {
    ensure!(height > 0.0, InvariantViolation("height must be positive".into()));
    ensure!(eps == 1.0 || eps == -1.0, InvariantViolation("eps must be 1 or -1".into()));
    let p = family_params(f, rho)?;
    let curve = synthesize_curve(&p, f.samples)?;
    let mesh = extrude_cylinder(&curve.polyline, eps, height, levels)?;
    let mut buf = Vec::new();
    let header = format!(
        "membrane cylinder mesh\nupsilon {} mu {} rho {rho} varsigma {}\nconfig_hash {}",
        f.upsilon, f.mu, p.varsigma, prov["config_hash"].as_str().unwrap_or_default()
    );
    mesh.write_obj(&mut buf, &header)?;
    write_text(out, &String::from_utf8(buf)?)?;
    emit(
        &json!({
            "provenance": prov,
            "obj": out,
            "vertices": mesh.vertices.len(),
            "triangles": mesh.triangles.len(),
        }),
        None,
    )
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || InvariantViolation(format!("rho grid '{s}' is not start:stop:count"));
    if parts.len() != 3 {
        bail!(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    ensure!(n >= 1, bad());
    if n == 1 {
        return Ok(vec![a]);
    }
    Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
}

fn cylinder_sweep(f: &FamilyArgs, grid: &str, out: Option<&Path>, prov: Value) -> Result<()> {
    let rhos = parse_grid(grid)?;
    let rows: Vec<Value> = rhos
        .par_iter()
        .map(|&rho| {
            let row = family_params(f, rho).and_then(|p| {
                let curve = synthesize_curve(&p, f.samples)?;
                let r = analyze_curve(&curve, f.upsilon, 1e-5)?;
                Ok(json!({
                    "rho": rho,
                    "varsigma": p.varsigma,
                    "convexity": r.classification.convexity,
                    "inflections": r.classification.inflection_count,
                    "simple": r.simple,
                    "transversal": r.intersections.transversal_count(),
                    "non_transversal": r.intersections.non_transversal_count(),
                }))
            });
            row.unwrap_or_else(|e| json!({ "rho": rho, "error": format!("{e:#}") }))
        })
        .collect();
    emit(&json!({ "provenance": prov, "upsilon": f.upsilon, "mu": f.mu, "rows": rows }), out)
}

fn verify(input: &Path, tol: f64, margin: usize, out: Option<&Path>, prov: Value) -> Result<()> {
    ensure!(tol > 0.0, InvariantViolation("tolerance must be positive".into()));
    let text = std::fs::read_to_string(input).with_context(|| format!("cannot read {}", input.display()))?;
    let doc: Value = serde_json::from_str(&text).with_context(|| format!("{} is not JSON", input.display()))?;
    let model: ModelArgs = match doc.get("model") {
        Some(m) => serde_json::from_value(m.clone()).context("bad model block")?,
        None => bail!(InvariantViolation("input has no model block".into())),
    };
    let shape = model.build()?;
    let (kind, residuals): (&str, Vec<(String, f64)>) = if let Some(p) = doc.get("patch") {
        let patch: PrincipalPatch = serde_json::from_value(p.clone()).context("bad patch")?;
        patch.check_domain()?;
        ("patch", validate_patch(&patch, &shape).summary(margin))
    } else if let Some(c) = doc.get("integral_curve") {
        let ic: IntegralCurve = serde_json::from_value(c.clone()).context("bad integral curve")?;
        let r = verify_integral_curve(&ic, &shape);
        let mut v: Vec<(String, f64)> = r.forms.iter().map(|f| (f.form.clone(), f.max)).collect();
        v.push(("mean_curvature".into(), ic.mean_curvature_defect()));
        v.push(("hw".into(), ic.hw_defect()));
        ("integral_curve", v)
    } else {
        bail!(InvariantViolation("input holds neither a patch nor an integral curve".into()));
    };
    let failing: Vec<&str> = residuals.iter().filter(|(_, v)| !(*v <= tol)).map(|(n, _)| n.as_str()).collect();
    let summary: std::collections::BTreeMap<_, _> = residuals.iter().cloned().collect();
    emit(
        &json!({ "provenance": prov, "kind": kind, "tol": tol, "residuals": summary, "failing": failing }),
        out,
    )?;
    if !failing.is_empty() {
        bail!(InvariantViolation(format!("residuals above {tol}: {}", failing.join(", "))));
    }
    Ok(())
}

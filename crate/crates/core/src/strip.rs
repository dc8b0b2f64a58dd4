//! Strip marching: propagate an integral curve across the principal direction
//! X₂ by solving the polar equations row by row.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cauchy::{coframe_components, Fiber, FiberPoint, IntegralCurve};
use crate::numerics::{fd_derivative, spectral_derivatives};
use crate::shape::{laplace_h_residual, PatchDiff, PrincipalPatch, ShapeModel};

#[derive(Debug, Error)]
pub enum StripError {
    #[error("umbilic collapse at node {i}: a - c = {gap}")]
    UmbilicCollapse { i: usize, gap: f64 },
    #[error("polar system singular at node {i}")]
    Singular { i: usize },
    #[error("row needs at least {need} nodes, got {got}")]
    TooFewNodes { need: usize, got: usize },
    #[error("row length mismatch: {0}")]
    Shape(String),
}

/// Time-stepping scheme in y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Euler,
    Rk2,
    Rk4,
}

impl std::str::FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "euler" => Ok(Scheme::Euler),
            "rk2" => Ok(Scheme::Rk2),
            "rk4" => Ok(Scheme::Rk4),
            other => Err(format!("unknown scheme '{other}' (expected euler, rk2 or rk4)")),
        }
    }
}

/// θ²-derivatives at one node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeDerivative {
    pub pos: Vector3<f64>,
    pub frame: Matrix3<f64>,
    /// In fiber order p, q, a, c, p1, q2, r, a1, c2, l.
    pub fiber: [f64; 10],
    pub xi1: f64,
    pub xi2: f64,
}

/// x-derivative of each column of `cols` along a row.
fn row_dx(values: &[f64], dx: f64, periodic: bool) -> Vec<f64> {
    if periodic {
        spectral_derivatives(values, dx * values.len() as f64, 1).remove(0)
    } else {
        fd_derivative(values, dx, 1, 7)
    }
}

/// θ²-derivatives of the full state along a row with coordinate components
/// (ξ¹, ξ²), so that ∂_x = ξ¹X₁ + ξ²X₂.
pub fn polar_derivatives(
    row: &[FiberPoint],
    xi: &[(f64, f64)],
    model: &ShapeModel,
    dx: f64,
    periodic: bool,
    umbilic_tol: f64,
) -> Result<Vec<NodeDerivative>, StripError> {
    let n = row.len();
    if xi.len() != n {
        return Err(StripError::Shape(format!("{} nodes but {} coordinate pairs", n, xi.len())));
    }
    let need = if periodic { 4 } else { 7 };
    if n < need {
        return Err(StripError::TooFewNodes { need, got: n });
    }
    for (i, pt) in row.iter().enumerate() {
        let gap = pt.fiber.a - pt.fiber.c;
        if !(gap >= umbilic_tol) {
            return Err(StripError::UmbilicCollapse { i, gap });
        }
    }
    let col = |f: fn(&Fiber) -> f64| row_dx(&row.iter().map(|p| f(&p.fiber)).collect::<Vec<_>>(), dx, periodic);
    let (gp1, gq2, gr, gl) = (col(|f| f.p1), col(|f| f.q2), col(|f| f.r), col(|f| f.l));
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let f = &row[i].fiber;
        let (x1, x2) = xi[i];
        let s = x2 / x1;
        let [b1, b2, d1, d2] = model.bd(f);
        let cma = f.c - f.a;
        let (dp1, dq2, dr, dl) = (gp1[i] / x1, gq2[i] / x1, gr[i] / x1, gl[i] / x1);
        // Unknowns (P2, Q2, R2, L2).
        #[rustfmt::skip]
        let m = Matrix4::new(
            1.0,       0.0,       s,              0.0,
            0.0,       s,         1.0,            0.0,
            -cma * s,  0.0,       cma,            1.0,
            0.0,       cma,       -cma * s,       s,
        );
        let rhs = Vector4::new(dr + b1, dq2 + b2, -cma * dp1 + d1, dl - cma * dr + d2);
        let sol = if s == 0.0 {
            // Triangular on the initial row.
            let p2 = rhs[0];
            let r2 = rhs[1];
            let l2 = rhs[2] - cma * r2;
            let q2 = rhs[3] / cma;
            Vector4::new(p2, q2, r2, l2)
        } else {
            m.lu().solve(&rhs).ok_or(StripError::Singular { i })?
        };
        let big_s = f.a * f.c + f.p * f.p + f.q * f.q;
        let psi = model.psi(f);
        let fiber = [
            f.r + 0.5 * big_s,
            f.q2,
            -f.p * cma,
            f.c2,
            sol[0],
            sol[1],
            sol[2],
            2.0 * f.a1 * f.p - cma * f.p1,
            -f.l + f.r * cma + psi,
            sol[3],
        ];
        let a = &row[i].frame;
        let (a1, a2, a3) = (a.column(0).into_owned(), a.column(1).into_owned(), a.column(2).into_owned());
        let frame = Matrix3::from_columns(&[a2 * f.q, -a1 * f.q + a3 * f.c, -a2 * f.c]);
        out.push(NodeDerivative { pos: a2, frame, fiber, xi1: -f.p * x1, xi2: -f.q * x1 });
    }
    Ok(out)
}

/// Marching parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarchOptions {
    pub dy: f64,
    /// Rows to produce, including the initial one.
    pub n_rows: usize,
    pub scheme: Scheme,
    pub umbilic_tol: f64,
    /// Abort when the row monitor exceeds this absolute value...
    pub monitor_abs: f64,
    /// ...or grows by this factor over its initial value (plus 1e−12).
    pub monitor_growth: f64,
}

impl MarchOptions {
    pub fn new(dy: f64, n_rows: usize, scheme: Scheme) -> Self {
        Self { dy, n_rows, scheme, umbilic_tol: 1e-6, monitor_abs: 1e-3, monitor_growth: 1e8 }
    }
}

/// Marched patch with controller diagnostics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MarchResult {
    pub patch: PrincipalPatch,
    /// Max generator residual on ∂_x of each emitted row.
    pub monitor: Vec<f64>,
    pub truncated: bool,
    pub diagnostics: Vec<String>,
}

const NODE: usize = 24;

fn pack(row: &[FiberPoint], xi: &[(f64, f64)]) -> Vec<f64> {
    let mut v = Vec::with_capacity(row.len() * NODE);
    for (p, (x1, x2)) in row.iter().zip(xi) {
        v.extend_from_slice(p.pos.as_slice());
        v.extend_from_slice(p.frame.as_slice());
        v.extend_from_slice(&p.fiber.to_array());
        v.push(*x1);
        v.push(*x2);
    }
    v
}

fn unpack(v: &[f64]) -> (Vec<FiberPoint>, Vec<(f64, f64)>) {
    v.chunks(NODE)
        .map(|c| {
            let mut fib = [0.0; 10];
            fib.copy_from_slice(&c[12..22]);
            (
                FiberPoint {
                    pos: Vector3::from_column_slice(&c[0..3]),
                    frame: Matrix3::from_column_slice(&c[3..12]),
                    fiber: Fiber::from_array(fib),
                },
                (c[22], c[23]),
            )
        })
        .unzip()
}

fn pack_derivative(d: &[NodeDerivative]) -> Vec<f64> {
    let mut v = Vec::with_capacity(d.len() * NODE);
    for n in d {
        v.extend_from_slice(n.pos.as_slice());
        v.extend_from_slice(n.frame.as_slice());
        v.extend_from_slice(&n.fiber);
        v.push(n.xi1);
        v.push(n.xi2);
    }
    v
}

fn axpy(a: f64, x: &[f64], y: &[f64]) -> Vec<f64> {
    y.iter().zip(x).map(|(yi, xi)| yi + a * xi).collect()
}

/// Closest rotation to `m` via its polar decomposition.
pub fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * vt;
    if r.determinant() < 0.0 {
        let mut u2 = u;
        u2.column_mut(2).neg_mut();
        r = u2 * vt;
    }
    r
}

/// Max |generator(∂_x)| over a row, with ∂_x taken along the row.
pub fn row_monitor(row: &[FiberPoint], model: &ShapeModel, dx: f64, periodic: bool) -> f64 {
    let n = row.len();
    let series = |f: &dyn Fn(&FiberPoint) -> f64| row_dx(&row.iter().map(f).collect::<Vec<_>>(), dx, periodic);
    let dpos: Vec<Vec<f64>> = (0..3).map(|k| series(&|p| p.pos[k])).collect();
    let dframe: Vec<Vec<f64>> = (0..9).map(|k| series(&|p| p.frame.as_slice()[k])).collect();
    let dfib: Vec<Vec<f64>> = (0..10).map(|k| series(&|p| p.fiber.to_array()[k])).collect();
    let mut worst = 0.0f64;
    for i in 0..n {
        let dp = Vector3::new(dpos[0][i], dpos[1][i], dpos[2][i]);
        let df = Matrix3::from_iterator((0..9).map(|k| dframe[k][i]));
        let mut fib = [0.0; 10];
        for k in 0..10 {
            fib[k] = dfib[k][i];
        }
        let v = coframe_components(&row[i], &dp, &df, &fib);
        for g in model.generator_values(&row[i].fiber, &v) {
            worst = worst.max(g.abs());
        }
    }
    worst
}

/// March the integral curve in y.
pub fn march(initial: &IntegralCurve, model: &ShapeModel, opts: &MarchOptions) -> Result<MarchResult, StripError> {
    let nx = initial.points.len();
    let (dx, periodic) = (initial.dx, initial.periodic);
    let rhs = |state: &[f64]| -> Result<Vec<f64>, StripError> {
        let (row, xi) = unpack(state);
        Ok(pack_derivative(&polar_derivatives(&row, &xi, model, dx, periodic, opts.umbilic_tol)?))
    };
    let xi0 = vec![(1.0, 0.0); nx];
    let mut state = pack(&initial.points, &xi0);
    let mut nodes = initial.points.clone();
    let mut xi1 = vec![1.0; nx];
    let mut xi2 = vec![0.0; nx];
    let m0 = if nx > 0 { row_monitor(&initial.points, model, dx, periodic) } else { 0.0 };
    let mut monitor = vec![m0];
    let mut diagnostics = Vec::new();
    let mut truncated = false;
    let h = opts.dy;
    for j in 1..opts.n_rows {
        let step = (|| -> Result<Vec<f64>, StripError> {
            let k1 = rhs(&state)?;
            Ok(match opts.scheme {
                Scheme::Euler => axpy(h, &k1, &state),
                Scheme::Rk2 => {
                    let k2 = rhs(&axpy(0.5 * h, &k1, &state))?;
                    axpy(h, &k2, &state)
                }
                Scheme::Rk4 => {
                    let k2 = rhs(&axpy(0.5 * h, &k1, &state))?;
                    let k3 = rhs(&axpy(0.5 * h, &k2, &state))?;
                    let k4 = rhs(&axpy(h, &k3, &state))?;
                    state
                        .iter()
                        .enumerate()
                        .map(|(k, s)| s + h / 6.0 * (k1[k] + 2.0 * k2[k] + 2.0 * k3[k] + k4[k]))
                        .collect()
                }
            })
        })();
        let next = match step {
            Ok(v) => v,
            Err(e) => {
                diagnostics.push(format!("stopped before row {j}: {e}"));
                truncated = true;
                break;
            }
        };
        let (mut row, xi) = unpack(&next);
        for p in row.iter_mut() {
            p.frame = nearest_rotation(&p.frame);
        }
        if let Some((i, _)) = xi.iter().enumerate().find(|(_, x)| !(x.0 > 0.0)) {
            diagnostics.push(format!("stopped before row {j}: xi1 <= 0 at node {i}"));
            truncated = true;
            break;
        }
        if let Some((i, p)) = row.iter().enumerate().find(|(_, p)| !(p.fiber.a - p.fiber.c >= opts.umbilic_tol)) {
            diagnostics.push(format!("stopped before row {j}: a - c = {} at node {i}", p.fiber.a - p.fiber.c));
            truncated = true;
            break;
        }
        let m = row_monitor(&row, model, dx, periodic);
        if !m.is_finite() || m > opts.monitor_abs || m > opts.monitor_growth * (m0 + 1e-12) {
            diagnostics.push(format!("stopped before row {j}: monitor {m:.3e} exceeds limits (initial {m0:.3e})"));
            truncated = true;
            break;
        }
        monitor.push(m);
        state = pack(&row, &xi);
        nodes.extend_from_slice(&row);
        xi1.extend(xi.iter().map(|x| x.0));
        xi2.extend(xi.iter().map(|x| x.1));
    }
    let ny = if nx == 0 { 0 } else { nodes.len() / nx };
    let patch = PrincipalPatch {
        nx,
        ny,
        dx,
        dy: h,
        x0: initial.xs.first().copied().unwrap_or(0.0),
        periodic,
        nodes,
        xi1,
        xi2,
    };
    Ok(MarchResult { patch, monitor, truncated, diagnostics })
}

/// One residual field of a patch diagnostic.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResidualField {
    pub name: String,
    /// Per node, row-major; `None` where the field is not evaluated.
    pub values: Vec<Option<f64>>,
}

impl ResidualField {
    /// Max |value| over rows `j0..j1`.
    pub fn max_in_rows(&self, nx: usize, j0: usize, j1: usize) -> f64 {
        self.values[j0 * nx..j1 * nx].iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct PatchDiagnostics {
    pub nx: usize,
    pub ny: usize,
    pub fields: Vec<ResidualField>,
    /// Max orthonormality defect of the frames.
    pub frame_drift: f64,
}

impl PatchDiagnostics {
    pub fn field(&self, name: &str) -> Option<&ResidualField> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Max of a field over rows `margin..ny - margin`.
    pub fn interior_max(&self, name: &str, margin: usize) -> Option<f64> {
        let f = self.field(name)?;
        if self.ny <= 2 * margin {
            return Some(0.0);
        }
        Some(f.max_in_rows(self.nx, margin, self.ny - margin))
    }

    pub fn summary(&self, margin: usize) -> Vec<(String, f64)> {
        self.fields.iter().map(|f| (f.name.clone(), self.interior_max(&f.name, margin).unwrap_or(0.0))).collect()
    }
}

pub const PATCH_FIELDS: [&str; 13] = [
    "gauss",
    "codazzi_a",
    "codazzi_c",
    "a21",
    "a12",
    "a22",
    "c21",
    "c12",
    "c11",
    "mixed_partials",
    "coordinates",
    "frame",
    "shape",
];

/// Finite-difference residuals of the structure equations on a patch.
pub fn validate_patch(patch: &PrincipalPatch, model: &ShapeModel) -> PatchDiagnostics {
    let (nx, ny) = (patch.nx, patch.ny);
    if nx < 7 || ny < 3 {
        return PatchDiagnostics { nx, ny, ..Default::default() };
    }
    let d = PatchDiff { patch };
    let fld = |f: fn(&Fiber) -> f64| patch.field(|n| f(&n.fiber));
    let (p, q, a, c) = (fld(|f| f.p), fld(|f| f.q), fld(|f| f.a), fld(|f| f.c));
    let (p1, q2, r, a1, c2) = (fld(|f| f.p1), fld(|f| f.q2), fld(|f| f.r), fld(|f| f.a1), fld(|f| f.c2));
    let (a_1, a_2, c_1, c_2) = (d.d1(&a), d.d2(&a), d.d1(&c), d.d2(&c));
    let (a_21, a_12, a_22) = (d.d1(&a_2), d.d2(&a_1), d.d2(&a_2));
    let (c_21, c_12, c_11) = (d.d1(&c_2), d.d2(&c_1), d.d1(&c_1));
    let (p_2, q_1) = (d.d2(&p), d.d1(&q));
    let n = nx * ny;
    let mut fields: Vec<(&str, Vec<f64>)> = Vec::new();
    let map = |f: &dyn Fn(usize) -> f64| (0..n).map(f).collect::<Vec<f64>>();
    let sq = |k: usize| a[k] * c[k] + p[k] * p[k] + q[k] * q[k];
    fields.push(("gauss", map(&|k| p_2[k] - q_1[k] - sq(k))));
    fields.push(("codazzi_a", map(&|k| a_2[k] + p[k] * (c[k] - a[k]))));
    fields.push(("codazzi_c", map(&|k| c_1[k] + q[k] * (c[k] - a[k]))));
    fields.push(("a21", map(&|k| a_21[k] - ((p1[k] - p[k] * q[k]) * (a[k] - c[k]) + p[k] * a1[k]))));
    fields.push(("a12", map(&|k| a_12[k] - (2.0 * p[k] * a1[k] + p1[k] * (a[k] - c[k])))));
    fields.push((
        "a22",
        map(&|k| a_22[k] - ((r[k] + 0.5 * sq(k)) * (a[k] - c[k]) + p[k] * p[k] * (a[k] - c[k]) - p[k] * c2[k])),
    ));
    fields.push(("c21", map(&|k| c_21[k] - (q2[k] * (a[k] - c[k]) - 2.0 * q[k] * c2[k]))));
    fields.push(("c12", map(&|k| c_12[k] - ((q2[k] + p[k] * q[k]) * (a[k] - c[k]) - q[k] * c2[k]))));
    fields.push((
        "c11",
        map(&|k| c_11[k] - ((r[k] - 0.5 * sq(k)) * (a[k] - c[k]) + q[k] * a1[k] - q[k] * q[k] * (a[k] - c[k]))),
    ));
    fields.push(("mixed_partials", map(&|k| a_12[k] - a_21[k] - (p[k] * a_1[k] + q[k] * a_2[k]))));
    // ∂_x P = ξ¹A₁ + ξ²A₂.
    let px: Vec<Vec<f64>> = (0..3).map(|m| d.dx(&patch.field(|nd| nd.pos[m]))).collect();
    fields.push((
        "coordinates",
        map(&|k| {
            let nd = &patch.nodes[k];
            let want = nd.a(0) * patch.xi1[k] + nd.a(1) * patch.xi2[k];
            (Vector3::new(px[0][k], px[1][k], px[2][k]) - want).norm()
        }),
    ));
    fields.push(("frame", map(&|k| patch.nodes[k].orthonormality_defect())));
    let mut out: Vec<ResidualField> =
        fields.into_iter().map(|(name, v)| ResidualField { name: name.into(), values: v.into_iter().map(Some).collect() }).collect();
    let shape = match laplace_h_residual(patch, model) {
        Ok(l) => l.fd_path,
        Err(_) => vec![None; n],
    };
    out.push(ResidualField { name: "shape".into(), values: shape });
    // Non-periodic rows: x stencils at the ends are one-sided; drop those nodes.
    if !patch.periodic {
        for f in out.iter_mut() {
            for j in 0..ny {
                for i in [0, 1, 2, nx - 3, nx - 2, nx - 1] {
                    f.values[j * nx + i] = None;
                }
            }
        }
    }
    let frame_drift = patch.nodes.iter().map(|n| n.orthonormality_defect()).fold(0.0, f64::max);
    PatchDiagnostics { nx, ny, fields: out, frame_drift }
}

/// Mean curvature and its y-derivative on the first rows, for comparison with h and h^W.
pub fn initial_row_mean_curvature(patch: &PrincipalPatch) -> Option<(Vec<f64>, Vec<f64>)> {
    if patch.ny < 3 {
        return None;
    }
    let hval = |i: usize, j: usize| patch.node(i, j).fiber.h();
    let h0 = (0..patch.nx).map(|i| hval(i, 0)).collect();
    let dh = (0..patch.nx).map(|i| (-3.0 * hval(i, 0) + 4.0 * hval(i, 1) - hval(i, 2)) / (2.0 * patch.dy)).collect();
    Some((h0, dh))
}

//! Triangle meshes of extruded cylinders and marched patches, OBJ output and
//! cotangent-Laplacian mean curvature.

use std::io::Write;

use nalgebra::Vector3;
use serde::Serialize;
use thiserror::Error;

use crate::curve::PlanePolyline;
use crate::shape::PrincipalPatch;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("base curve must be closed")]
    OpenBase,
    #[error("need at least {0} levels/points")]
    TooSmall(usize),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Triangle mesh with per-vertex principal curvatures (k1, k2).
#[derive(Clone, Debug, Default, Serialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    /// Vertex rows are periodic in the first index (closed tube).
    #[serde(skip)]
    pub grid: Option<(usize, usize, bool)>,
}

impl Mesh {
    pub fn mean_curvature(&self) -> Vec<f64> {
        self.k1.iter().zip(&self.k2).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn gauss_curvature(&self) -> Vec<f64> {
        self.k1.iter().zip(&self.k2).map(|(a, b)| a * b).collect()
    }

    /// Wavefront OBJ with `# k1 k2 H K` comments preceding each vertex.
    pub fn write_obj<W: Write>(&self, mut w: W, header: &str) -> Result<(), MeshError> {
        for line in header.lines() {
            writeln!(w, "# {line}")?;
        }
        for (i, v) in self.vertices.iter().enumerate() {
            let (a, b) = (self.k1.get(i).copied().unwrap_or(0.0), self.k2.get(i).copied().unwrap_or(0.0));
            writeln!(w, "# curv {a:.12e} {b:.12e} {:.12e} {:.12e}", 0.5 * (a + b), a * b)?;
            writeln!(w, "v {:.12} {:.12} {:.12}", v[0], v[1], v[2])?;
        }
        for t in &self.triangles {
            writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)?;
        }
        Ok(())
    }

    fn v(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.vertices[i])
    }

    /// Unit normal of each triangle (orientation from vertex order).
    pub fn face_normals(&self) -> Vec<Vector3<f64>> {
        self.triangles
            .iter()
            .map(|t| (self.v(t[1]) - self.v(t[0])).cross(&(self.v(t[2]) - self.v(t[0]))).normalize())
            .collect()
    }

    /// Mean curvature from the cotangent Laplacian, signed against the
    /// area-weighted vertex normal. `None` on boundary vertices.
    pub fn discrete_mean_curvature(&self) -> Vec<Option<f64>> {
        let n = self.vertices.len();
        let mut lap = vec![Vector3::zeros(); n];
        let mut area = vec![0.0; n];
        let mut normal = vec![Vector3::zeros(); n];
        let mut edge_count = std::collections::HashMap::<(usize, usize), usize>::new();
        for t in &self.triangles {
            let p = [self.v(t[0]), self.v(t[1]), self.v(t[2])];
            let fnrm = (p[1] - p[0]).cross(&(p[2] - p[0]));
            let a = 0.5 * fnrm.norm();
            for k in 0..3 {
                let (i, j, o) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
                let (pi, pj, po) = (self.v(i), self.v(j), self.v(o));
                let (u, w) = (pi - po, pj - po);
                let cot = u.dot(&w) / u.cross(&w).norm();
                lap[i] += 0.5 * cot * (pi - pj);
                lap[j] += 0.5 * cot * (pj - pi);
                area[t[k]] += a / 3.0;
                normal[t[k]] += fnrm;
                *edge_count.entry((i.min(j), i.max(j))).or_default() += 1;
            }
        }
        let mut boundary = vec![false; n];
        for ((i, j), c) in edge_count {
            if c == 1 {
                boundary[i] = true;
                boundary[j] = true;
            }
        }
        (0..n)
            .map(|i| {
                if boundary[i] || area[i] == 0.0 {
                    return None;
                }
                // ΔX = −lap/A and ΔX = 2H n.
                let hn = -lap[i] / (2.0 * area[i]);
                Some(hn.dot(&normal[i].normalize()))
            })
            .collect()
    }
}

/// Extrude a closed plane curve to the surface f(s, y) = α(s) + ε y e₃,
/// y ∈ [0, height], with `levels` vertex rings. Triangles are oriented along
/// f_s × f_y = −ε Jα′, and the curvatures are stored relative to that normal:
/// k1 = −ε κ, k2 = 0.
pub fn extrude_cylinder(base: &PlanePolyline, eps: f64, height: f64, levels: usize) -> Result<Mesh, MeshError> {
    if !base.closed {
        return Err(MeshError::OpenBase);
    }
    let n = base.points.len();
    if n < 3 || levels < 2 {
        return Err(MeshError::TooSmall(if n < 3 { 3 } else { 2 }));
    }
    let kappa = base.kappa.clone().unwrap_or_else(|| base.discrete_curvature());
    let mut m = Mesh::default();
    for l in 0..levels {
        let z = eps * height * l as f64 / (levels - 1) as f64;
        for (i, p) in base.points.iter().enumerate() {
            m.vertices.push([p[0], p[1], z]);
            m.k1.push(-eps * kappa[i]);
            m.k2.push(0.0);
        }
    }
    for l in 0..levels - 1 {
        for i in 0..n {
            let (a, b) = (l * n + i, l * n + (i + 1) % n);
            let (c, d) = (a + n, b + n);
            // (s, y) is positively oriented for f_s × f_y.
            m.triangles.push([a, b, d]);
            m.triangles.push([a, d, c]);
        }
    }
    m.grid = Some((n, levels, true));
    Ok(m)
}

/// Mesh of a marched patch with (k1, k2) = (a, c).
pub fn patch_mesh(patch: &PrincipalPatch) -> Mesh {
    let (nx, ny) = (patch.nx, patch.ny);
    let mut m = Mesh::default();
    for nd in &patch.nodes {
        m.vertices.push([nd.pos[0], nd.pos[1], nd.pos[2]]);
        m.k1.push(nd.fiber.a);
        m.k2.push(nd.fiber.c);
    }
    let cols = if patch.periodic { nx } else { nx.saturating_sub(1) };
    for j in 0..ny.saturating_sub(1) {
        for i in 0..cols {
            let (a, b) = (j * nx + i, j * nx + (i + 1) % nx);
            let (c, d) = (a + nx, b + nx);
            m.triangles.push([a, b, d]);
            m.triangles.push([a, d, c]);
        }
    }
    m.grid = Some((nx, ny, patch.periodic));
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn clockwise_circle(r: f64, n: usize) -> PlanePolyline {
        let pts = (0..n).map(|i| {
            let t = -2.0 * PI * i as f64 / n as f64;
            [r * t.cos(), r * t.sin()]
        });
        PlanePolyline { points: pts.collect(), closed: true, kappa: Some(vec![-1.0 / r; n]) }
    }

    #[test]
    fn discrete_mean_curvature_of_circle_cylinder() {
        let r = 2.0;
        for eps in [1.0, -1.0] {
            let m = extrude_cylinder(&clockwise_circle(r, 128), eps, 1.0, 40).unwrap();
            let analytic = m.mean_curvature();
            let h = m.discrete_mean_curvature();
            let mut interior = 0;
            for (hd, ha) in h.iter().zip(&analytic) {
                if let Some(hd) = hd {
                    interior += 1;
                    assert!((hd - ha).abs() <= 0.02 * ha.abs(), "{hd} vs {ha}");
                    assert!((ha - eps / (2.0 * r)).abs() < 1e-15);
                }
            }
            assert!(interior > 0);
            assert!(m.gauss_curvature().iter().all(|k| *k == 0.0));
        }
    }

    #[test]
    fn orientation_follows_parametrization() {
        let m = extrude_cylinder(&clockwise_circle(1.0, 32), 1.0, 1.0, 3).unwrap();
        // Clockwise base, ε = 1: f_s × f_y points inward.
        let fnrm = m.face_normals()[0];
        let t = m.triangles[0];
        let c = (Vector3::from(m.vertices[t[0]]) + Vector3::from(m.vertices[t[1]])) * 0.5;
        assert!(fnrm.dot(&Vector3::new(c[0], c[1], 0.0)) < 0.0);
    }

    #[test]
    fn open_base_rejected() {
        let mut b = clockwise_circle(1.0, 8);
        b.closed = false;
        assert!(matches!(extrude_cylinder(&b, 1.0, 1.0, 3), Err(MeshError::OpenBase)));
    }

    #[test]
    fn obj_output() {
        let m = extrude_cylinder(&clockwise_circle(1.0, 8), 1.0, 1.0, 2).unwrap();
        let mut buf = Vec::new();
        m.write_obj(&mut buf, "test").unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert_eq!(s.lines().filter(|l| l.starts_with("v ")).count(), 16);
        assert_eq!(s.lines().filter(|l| l.starts_with("f ")).count(), 16);
        assert!(s.starts_with("# test\n# curv"));
    }
}

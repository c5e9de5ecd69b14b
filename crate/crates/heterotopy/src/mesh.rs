//! Oriented triangulated closed surfaces (unit icosphere, flat torus) with
//! intrinsic per-triangle geometry, and geodesic polar charts on them.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::{self, Vec2, Vec3};

/// Maximum icosphere subdivision accepted by [`build_icosphere`].
pub const MAX_SUBDIVISIONS: u32 = 8;
/// Flat-torus grid bounds for [`build_flat_torus`].
pub const TORUS_N_RANGE: (u32, u32) = (2, 512);
/// Sphere charts must stay below this geodesic radius (injectivity margin).
pub const SPHERE_CHART_MAX_RADIUS: f64 = std::f64::consts::FRAC_PI_3;
/// Torus charts must stay below this radius so the ball avoids the seam.
pub const TORUS_CHART_MAX_RADIUS: f64 = 0.25;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshKind {
    Sphere,
    FlatTorus,
}

/// A point on one of the two supported surfaces.
///
/// Sphere points are unit vectors in R^3; torus points are canonical
/// representatives in the fundamental domain [0,1)^2.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SurfacePoint {
    Sphere(Vec3),
    Torus(Vec2),
}

impl SurfacePoint {
    pub fn kind(&self) -> MeshKind {
        match self {
            SurfacePoint::Sphere(_) => MeshKind::Sphere,
            SurfacePoint::Torus(_) => MeshKind::FlatTorus,
        }
    }
}

/// Wrap a coordinate into [0, 1).
fn wrap01(x: f64) -> f64 {
    let y = x - x.floor();
    if y >= 1.0 {
        0.0
    } else {
        y
    }
}

/// Wrap a coordinate difference into [-1/2, 1/2) (minimal image).
fn wrap_half(x: f64) -> f64 {
    let y = x - x.round();
    if y >= 0.5 {
        y - 1.0
    } else {
        y
    }
}

pub fn torus_wrap(p: Vec2) -> Vec2 {
    [wrap01(p[0]), wrap01(p[1])]
}

/// Minimal-image difference a - b on the flat torus.
pub fn torus_diff(a: Vec2, b: Vec2) -> Vec2 {
    [wrap_half(a[0] - b[0]), wrap_half(a[1] - b[1])]
}

pub fn torus_dist(a: Vec2, b: Vec2) -> f64 {
    let d = torus_diff(a, b);
    (d[0] * d[0] + d[1] * d[1]).sqrt()
}

/// Geodesic distance between two points of the same kind.
pub fn surface_dist(a: &SurfacePoint, b: &SurfacePoint) -> f64 {
    match (a, b) {
        (SurfacePoint::Sphere(p), SurfacePoint::Sphere(q)) => geom::sphere_dist(*p, *q),
        (SurfacePoint::Torus(p), SurfacePoint::Torus(q)) => torus_dist(*p, *q),
        _ => f64::INFINITY,
    }
}

/// An oriented triangulated closed surface.
///
/// Triangles are index triples with consistent orientation (each shared edge
/// traversed in opposite directions by its two incident triangles). Geometry
/// is intrinsic: every triangle is treated as a flat Euclidean triangle with
/// its embedded (sphere) or minimal-image (torus) edge lengths.
#[derive(Clone, Debug)]
pub struct TriMesh {
    pub kind: MeshKind,
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    total_area: f64,
    hash: String,
}

impl TriMesh {
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Geometric edge count. Each triangle contributes three edges, each
    /// shared by exactly two triangles; for the 2x2 torus two geometric
    /// edges may join the same vertex pair, so edges are counted as 3F/2
    /// rather than by distinct index pairs.
    pub fn edge_count(&self) -> usize {
        3 * self.triangles.len() / 2
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertex_count() as i64 - self.edge_count() as i64 + self.triangle_count() as i64
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn total_area(&self) -> f64 {
        self.total_area
    }

    /// Vertex as a surface point.
    pub fn point(&self, i: usize) -> SurfacePoint {
        let v = self.vertices[i];
        match self.kind {
            MeshKind::Sphere => SurfacePoint::Sphere(v),
            MeshKind::FlatTorus => SurfacePoint::Torus([v[0], v[1]]),
        }
    }

    /// Raw vertex coordinates (third component is 0 for the torus).
    pub fn vertex(&self, i: usize) -> Vec3 {
        self.vertices[i]
    }

    /// Flattens triangle `t` to 2D coordinates (x0 is the origin) using its
    /// intrinsic edge lengths, and returns the three corner positions.
    pub fn flatten_triangle(&self, t: usize) -> [Vec2; 3] {
        let [i, j, k] = self.triangles[t];
        match self.kind {
            MeshKind::FlatTorus => {
                let a = self.vertices[i];
                let b = self.vertices[j];
                let c = self.vertices[k];
                let e1 = torus_diff([b[0], b[1]], [a[0], a[1]]);
                let e2 = torus_diff([c[0], c[1]], [a[0], a[1]]);
                [[0.0, 0.0], e1, e2]
            }
            MeshKind::Sphere => {
                let a = self.vertices[i];
                let b = self.vertices[j];
                let c = self.vertices[k];
                let l01 = geom::chord(a, b);
                let l02 = geom::chord(a, c);
                let l12 = geom::chord(b, c);
                let x = (l01 * l01 + l02 * l02 - l12 * l12) / (2.0 * l01);
                let y2 = l02 * l02 - x * x;
                let y = if y2 > 0.0 { y2.sqrt() } else { 0.0 };
                [[0.0, 0.0], [l01, 0.0], [x, y]]
            }
        }
    }

    /// Barycenter of triangle `t` as a surface point.
    pub fn barycenter(&self, t: usize) -> SurfacePoint {
        let [i, j, k] = self.triangles[t];
        match self.kind {
            MeshKind::Sphere => {
                let s = geom::add(geom::add(self.vertices[i], self.vertices[j]), self.vertices[k]);
                SurfacePoint::Sphere(geom::normalize(s))
            }
            MeshKind::FlatTorus => {
                let a = self.vertices[i];
                let b = self.vertices[j];
                let c = self.vertices[k];
                let db = torus_diff([b[0], b[1]], [a[0], a[1]]);
                let dc = torus_diff([c[0], c[1]], [a[0], a[1]]);
                SurfacePoint::Torus(torus_wrap([
                    a[0] + (db[0] + dc[0]) / 3.0,
                    a[1] + (db[1] + dc[1]) / 3.0,
                ]))
            }
        }
    }

    /// Shortest edge length, used by resolution guards.
    pub fn min_edge_length(&self) -> f64 {
        let mut best = f64::INFINITY;
        for t in 0..self.triangles.len() {
            let p = self.flatten_triangle(t);
            let l01 = ((p[1][0]) * (p[1][0]) + (p[1][1]) * (p[1][1])).sqrt();
            let l02 = ((p[2][0]) * (p[2][0]) + (p[2][1]) * (p[2][1])).sqrt();
            let dx = p[2][0] - p[1][0];
            let dy = p[2][1] - p[1][1];
            let l12 = (dx * dx + dy * dy).sqrt();
            best = best.min(l01).min(l02).min(l12);
        }
        best
    }

    /// Mean edge length of the mesh.
    pub fn mean_edge_length(&self) -> f64 {
        let mut sum = geom::KahanSum::new();
        for t in 0..self.triangles.len() {
            let p = self.flatten_triangle(t);
            let l01 = (p[1][0] * p[1][0] + p[1][1] * p[1][1]).sqrt();
            let l02 = (p[2][0] * p[2][0] + p[2][1] * p[2][1]).sqrt();
            let dx = p[2][0] - p[1][0];
            let dy = p[2][1] - p[1][1];
            sum.add(l01 + l02 + (dx * dx + dy * dy).sqrt());
        }
        // Each geometric edge is visited twice.
        sum.total() / (3.0 * self.triangles.len() as f64)
    }

    /// Validates the closed-surface invariants: balanced directed edges,
    /// positive areas, and the Euler characteristic of the surface kind.
    pub fn validate(&self) -> Result<(), Error> {
        if self.vertices.len() < 3 || self.triangles.is_empty() {
            return Err(Error::Geometry("mesh has too few elements".into()));
        }
        let mut directed: HashMap<(usize, usize), i64> = HashMap::new();
        for &[i, j, k] in &self.triangles {
            if i == j || j == k || i == k {
                return Err(Error::Geometry("degenerate triangle indices".into()));
            }
            if i >= self.vertices.len() || j >= self.vertices.len() || k >= self.vertices.len() {
                return Err(Error::Geometry("triangle index out of bounds".into()));
            }
            for (a, b) in [(i, j), (j, k), (k, i)] {
                *directed.entry((a, b)).or_insert(0) += 1;
            }
        }
        // Closedness + consistent orientation: the directed edge multiset is
        // balanced, every directed edge having an opposite partner.
        for (&(a, b), &n) in &directed {
            let m = directed.get(&(b, a)).copied().unwrap_or(0);
            if n != m {
                return Err(Error::Geometry(format!(
                    "unbalanced edge ({a},{b}): {n} forward vs {m} reverse"
                )));
            }
        }
        for (t, &a) in self.areas.iter().enumerate() {
            if !(a > 0.0) {
                return Err(Error::Geometry(format!("triangle {t} has area {a}")));
            }
        }
        let chi = self.euler_characteristic();
        let want = match self.kind {
            MeshKind::Sphere => 2,
            MeshKind::FlatTorus => 0,
        };
        if chi != want {
            return Err(Error::Geometry(format!(
                "Euler characteristic {chi}, expected {want}"
            )));
        }
        if self.kind == MeshKind::Sphere {
            for (i, v) in self.vertices.iter().enumerate() {
                if (geom::norm(*v) - 1.0).abs() > 1e-9 {
                    return Err(Error::Geometry(format!("vertex {i} is off the unit sphere")));
                }
            }
        }
        Ok(())
    }

    /// FNV-1a digest of the mesh content; binds vertex-field files to the
    /// mesh they were sampled on.
    pub fn content_hash(&self) -> &str {
        &self.hash
    }

    fn compute_hash(&self) -> String {
        let mut h: u64 = 0xcbf29ce484222325;
        let mut eat = |bytes: &[u8]| {
            for &b in bytes {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        };
        eat(match self.kind {
            MeshKind::Sphere => b"sphere",
            MeshKind::FlatTorus => b"torus",
        });
        for v in &self.vertices {
            for c in v {
                eat(&c.to_bits().to_le_bytes());
            }
        }
        for t in &self.triangles {
            for &i in t {
                eat(&(i as u64).to_le_bytes());
            }
        }
        format!("{h:016x}")
    }
}

/// Intrinsic flat area of a triangle from its 2D flattening.
fn flat_area(p: &[Vec2; 3]) -> f64 {
    let ux = p[1][0] - p[0][0];
    let uy = p[1][1] - p[0][1];
    let vx = p[2][0] - p[0][0];
    let vy = p[2][1] - p[0][1];
    0.5 * (ux * vy - uy * vx).abs()
}

fn finish_mesh(kind: MeshKind, vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<TriMesh, Error> {
    let mut mesh = TriMesh {
        kind,
        vertices,
        triangles,
        areas: Vec::new(),
        total_area: 0.0,
        hash: String::new(),
    };
    let mut areas = Vec::with_capacity(mesh.triangles.len());
    let mut total = geom::KahanSum::new();
    for t in 0..mesh.triangles.len() {
        let p = mesh.flatten_triangle(t);
        let a = flat_area(&p);
        total.add(a);
        areas.push(a);
    }
    mesh.areas = areas;
    mesh.total_area = total.total();
    mesh.hash = mesh.compute_hash();
    mesh.validate()?;
    Ok(mesh)
}

/// Builds the unit icosphere: a regular icosahedron subdivided `subdivisions`
/// times with all vertices projected back to the unit sphere.
///
/// F = 20 * 4^s, E = 3F/2, V = 2 + F/2.
pub fn build_icosphere(subdivisions: u32) -> Result<TriMesh, Error> {
    if subdivisions > MAX_SUBDIVISIONS {
        return Err(Error::Resource(format!(
            "icosphere subdivisions {subdivisions} exceeds limit {MAX_SUBDIVISIONS}"
        )));
    }
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = vec![
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    for v in &mut vertices {
        *v = geom::normalize(*v);
    }
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next: Vec<[usize; 3]> = Vec::with_capacity(triangles.len() * 4);
        for &[i, j, k] in &triangles {
            let mut mid = |a: usize, b: usize, verts: &mut Vec<Vec3>| -> usize {
                let key = if a < b { (a, b) } else { (b, a) };
                if let Some(&idx) = midpoint.get(&key) {
                    return idx;
                }
                let m = geom::normalize(geom::add(verts[a], verts[b]));
                verts.push(m);
                let idx = verts.len() - 1;
                midpoint.insert(key, idx);
                idx
            };
            let mij = mid(i, j, &mut vertices);
            let mjk = mid(j, k, &mut vertices);
            let mki = mid(k, i, &mut vertices);
            next.push([i, mij, mki]);
            next.push([j, mjk, mij]);
            next.push([k, mki, mjk]);
            next.push([mij, mjk, mki]);
        }
        triangles = next;
    }

    finish_mesh(MeshKind::Sphere, vertices, triangles)
}

/// Builds the n x n periodic grid on the unit-area flat torus [0,1)^2;
/// each grid square is split into two triangles. V = n^2, F = 2n^2.
pub fn build_flat_torus(n: u32) -> Result<TriMesh, Error> {
    if n < TORUS_N_RANGE.0 || n > TORUS_N_RANGE.1 {
        return Err(Error::Parameter(format!(
            "torus grid size {n} outside [{}, {}]",
            TORUS_N_RANGE.0, TORUS_N_RANGE.1
        )));
    }
    let n = n as usize;
    let step = 1.0 / n as f64;
    let mut vertices = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            vertices.push([i as f64 * step, j as f64 * step, 0.0]);
        }
    }
    let idx = |i: usize, j: usize| (j % n) * n + (i % n);
    let mut triangles = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            let v00 = idx(i, j);
            let v10 = idx(i + 1, j);
            let v01 = idx(i, j + 1);
            let v11 = idx(i + 1, j + 1);
            triangles.push([v00, v10, v11]);
            triangles.push([v00, v11, v01]);
        }
    }
    finish_mesh(MeshKind::FlatTorus, vertices, triangles)
}

/// A geodesic polar chart: a ball B_rho(center) on the surface identified
/// with the Euclidean disk of radius rho.
///
/// On the sphere the chart is the exponential map at `center` (radial
/// geodesics, exact); on the torus it is the translation taking `center`
/// to the origin. `forward . inverse = id` holds to machine precision.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ChartRepr", into = "ChartRepr")]
pub struct Chart {
    pub center: SurfacePoint,
    pub radius: f64,
    /// Tangent frame at the center (sphere only; identity axes on the torus).
    frame: (Vec3, Vec3),
}

#[derive(Serialize, Deserialize)]
struct ChartRepr {
    center: SurfacePoint,
    radius: f64,
}

impl TryFrom<ChartRepr> for Chart {
    type Error = Error;
    fn try_from(r: ChartRepr) -> Result<Self, Error> {
        make_chart(r.center, r.radius)
    }
}

impl From<Chart> for ChartRepr {
    fn from(c: Chart) -> Self {
        ChartRepr {
            center: c.center,
            radius: c.radius,
        }
    }
}

impl Chart {
    pub fn kind(&self) -> MeshKind {
        self.center.kind()
    }

    /// Chart coordinates of `p` (defined for d(center, p) < pi on the
    /// sphere, everywhere on the torus). The center maps to the origin and
    /// |forward(p)| equals the geodesic distance to the center.
    pub fn forward(&self, p: &SurfacePoint) -> Vec2 {
        match (&self.center, p) {
            (SurfacePoint::Sphere(c), SurfacePoint::Sphere(q)) => {
                let d = geom::sphere_dist(*c, *q);
                if d < 1e-15 {
                    return [0.0, 0.0];
                }
                let w = geom::sub(*q, geom::scale(*c, geom::dot(*c, *q)));
                let w = geom::normalize(w);
                [d * geom::dot(w, self.frame.0), d * geom::dot(w, self.frame.1)]
            }
            (SurfacePoint::Torus(c), SurfacePoint::Torus(q)) => torus_diff(*q, *c),
            _ => [f64::NAN, f64::NAN],
        }
    }

    /// Inverse chart map; `inverse(forward(p)) = p` for points in the ball.
    pub fn inverse(&self, x: Vec2) -> SurfacePoint {
        match &self.center {
            SurfacePoint::Sphere(c) => {
                let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if r < 1e-15 {
                    return SurfacePoint::Sphere(*c);
                }
                let dir = geom::normalize(geom::add(
                    geom::scale(self.frame.0, x[0] / r),
                    geom::scale(self.frame.1, x[1] / r),
                ));
                SurfacePoint::Sphere(geom::normalize(geom::add(
                    geom::scale(*c, r.cos()),
                    geom::scale(dir, r.sin()),
                )))
            }
            SurfacePoint::Torus(c) => SurfacePoint::Torus(torus_wrap([c[0] + x[0], c[1] + x[1]])),
        }
    }

    /// Geodesic distance from the chart center.
    pub fn dist_from_center(&self, p: &SurfacePoint) -> f64 {
        surface_dist(&self.center, p)
    }

    /// Whether `p` lies strictly inside the chart ball.
    pub fn contains(&self, p: &SurfacePoint) -> bool {
        self.center.kind() == p.kind() && self.dist_from_center(p) < self.radius
    }
}

/// Creates the geodesic polar chart of radius `rho` at `center`.
pub fn make_chart(center: SurfacePoint, rho: f64) -> Result<Chart, Error> {
    let max = match center.kind() {
        MeshKind::Sphere => SPHERE_CHART_MAX_RADIUS.min(1.0),
        MeshKind::FlatTorus => TORUS_CHART_MAX_RADIUS,
    };
    if !(rho > 0.0) || rho >= max {
        return Err(Error::Chart(format!(
            "chart radius {rho} outside (0, {max})"
        )));
    }
    let (center, frame) = match center {
        SurfacePoint::Sphere(c) => {
            if !c.iter().all(|x| x.is_finite()) || geom::norm(c) < 1e-9 {
                return Err(Error::Chart("chart center is not a usable direction".into()));
            }
            let c = geom::normalize(c);
            (SurfacePoint::Sphere(c), geom::tangent_frame(c))
        }
        SurfacePoint::Torus(c) => {
            if !c.iter().all(|x| x.is_finite()) {
                return Err(Error::Chart("chart center is not finite".into()));
            }
            (
                SurfacePoint::Torus(torus_wrap(c)),
                ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
            )
        }
    };
    Ok(Chart {
        center,
        radius: rho,
        frame,
    })
}

// ---------------------------------------------------------------------------
// JSON mesh file format: { "kind", "vertices", "triangles" }, 0-based indices.

#[derive(Serialize, Deserialize)]
struct MeshFile {
    kind: MeshKind,
    vertices: Vec<Vec<f64>>,
    triangles: Vec<[usize; 3]>,
}

impl TriMesh {
    pub fn to_json(&self) -> String {
        let file = MeshFile {
            kind: self.kind,
            vertices: self
                .vertices
                .iter()
                .map(|v| match self.kind {
                    MeshKind::Sphere => vec![v[0], v[1], v[2]],
                    MeshKind::FlatTorus => vec![v[0], v[1]],
                })
                .collect(),
            triangles: self.triangles.clone(),
        };
        serde_json::to_string_pretty(&file).expect("mesh serializes")
    }

    pub fn from_json(text: &str) -> Result<TriMesh, Error> {
        let file: MeshFile = serde_json::from_str(text)?;
        let mut vertices = Vec::with_capacity(file.vertices.len());
        for (i, v) in file.vertices.iter().enumerate() {
            let p = match (file.kind, v.len()) {
                (MeshKind::Sphere, 3) => [v[0], v[1], v[2]],
                (MeshKind::FlatTorus, 2) => [v[0], v[1], 0.0],
                _ => {
                    return Err(Error::Parameter(format!(
                        "vertex {i} has {} coordinates, wrong for {:?}",
                        v.len(),
                        file.kind
                    )))
                }
            };
            if !p.iter().all(|c| c.is_finite()) {
                return Err(Error::Parameter(format!("vertex {i} is not finite")));
            }
            let p = match file.kind {
                MeshKind::Sphere => p,
                MeshKind::FlatTorus => {
                    if p[0] < 0.0 || p[0] >= 1.0 || p[1] < 0.0 || p[1] >= 1.0 {
                        return Err(Error::Parameter(format!(
                            "torus vertex {i} outside the fundamental domain [0,1)^2"
                        )));
                    }
                    p
                }
            };
            vertices.push(p);
        }
        finish_mesh(file.kind, vertices, file.triangles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_counts() {
        let m = build_icosphere(0).unwrap();
        assert_eq!(m.vertex_count(), 12);
        assert_eq!(m.edge_count(), 30);
        assert_eq!(m.triangle_count(), 20);
        assert_eq!(m.euler_characteristic(), 2);
    }

    #[test]
    fn icosphere_3_counts() {
        let m = build_icosphere(3).unwrap();
        assert_eq!(m.triangle_count(), 1280);
        assert_eq!(m.edge_count(), 1920);
        assert_eq!(m.vertex_count(), 642);
    }

    #[test]
    fn icosphere_5_area_close_to_sphere() {
        let m = build_icosphere(5).unwrap();
        let exact = 4.0 * std::f64::consts::PI;
        assert!((m.total_area() - exact).abs() / exact < 1e-3);
        assert!(m.total_area() < exact);
    }

    #[test]
    fn icosphere_area_monotone_in_subdivision() {
        let mut last = 0.0;
        for s in 0..=5 {
            let a = build_icosphere(s).unwrap().total_area();
            assert!(a > last);
            assert!(a < 4.0 * std::f64::consts::PI);
            last = a;
        }
    }

    #[test]
    fn icosphere_guard() {
        assert!(build_icosphere(9).is_err());
    }

    #[test]
    fn torus_counts_and_area() {
        let m = build_flat_torus(2).unwrap();
        assert_eq!(m.vertex_count(), 4);
        assert_eq!(m.triangle_count(), 8);
        assert!((m.total_area() - 1.0).abs() < 1e-12);

        let m = build_flat_torus(16).unwrap();
        assert_eq!(m.vertex_count(), 256);
        assert_eq!(m.triangle_count(), 512);
        assert_eq!(m.euler_characteristic(), 0);
    }

    #[test]
    fn torus_uniform_triangle_areas() {
        let m = build_flat_torus(64).unwrap();
        for &a in m.areas() {
            assert!((a - 1.0 / 8192.0).abs() < 1e-15);
        }
    }

    #[test]
    fn torus_bounds() {
        assert!(build_flat_torus(1).is_err());
        assert!(build_flat_torus(513).is_err());
    }

    #[test]
    fn torus_chart_is_translation() {
        let chart = make_chart(SurfacePoint::Torus([0.5, 0.5]), 0.2).unwrap();
        let q = SurfacePoint::Torus([0.62, 0.47]);
        let x = chart.forward(&q);
        assert!((x[0] - 0.12).abs() < 1e-12 && (x[1] + 0.03).abs() < 1e-12);
    }

    #[test]
    fn sphere_chart_center_to_origin() {
        let north = SurfacePoint::Sphere([0.0, 0.0, 1.0]);
        let chart = make_chart(north, 0.3).unwrap();
        let x = chart.forward(&north);
        assert!(x[0].abs() < 1e-15 && x[1].abs() < 1e-15);
    }

    #[test]
    fn sphere_chart_radius_is_geodesic_distance() {
        let chart = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.3).unwrap();
        // A point at geodesic distance 0.2 from the center.
        let p = SurfacePoint::Sphere([0.2f64.sin(), 0.0, 0.2f64.cos()]);
        let x = chart.forward(&p);
        let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
        assert!((r - 0.2).abs() < 1e-10);
    }

    #[test]
    fn chart_round_trip_1000_points() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let charts = [
            make_chart(SurfacePoint::Sphere(geom::normalize([0.3, -0.5, 0.8])), 0.9).unwrap(),
            make_chart(SurfacePoint::Torus([0.25, 0.75]), 0.2).unwrap(),
        ];
        for chart in &charts {
            for _ in 0..1000 {
                let r = chart.radius * rng.gen::<f64>().sqrt();
                let th = rng.gen::<f64>() * std::f64::consts::TAU;
                let x = [r * th.cos(), r * th.sin()];
                let p = chart.inverse(x);
                let y = chart.forward(&p);
                let err = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                assert!(err < 1e-12, "round trip error {err}");
            }
        }
    }

    #[test]
    fn chart_radius_guards() {
        assert!(make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 1.1).is_err());
        assert!(make_chart(SurfacePoint::Torus([0.0, 0.0]), 0.25).is_err());
    }

    #[test]
    fn mesh_json_round_trip() {
        let m = build_flat_torus(4).unwrap();
        let text = m.to_json();
        let back = TriMesh::from_json(&text).unwrap();
        assert_eq!(back.vertex_count(), m.vertex_count());
        assert_eq!(back.content_hash(), m.content_hash());
    }

    #[test]
    fn mesh_json_rejects_open_surface() {
        let text = r#"{"kind":"Sphere","vertices":[[1,0,0],[0,1,0],[0,0,1]],"triangles":[[0,1,2]]}"#;
        assert!(TriMesh::from_json(text).is_err());
    }
}

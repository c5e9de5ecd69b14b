//! Chart-localized map-modification operators, implemented exactly in
//! closed form.
//!
//! Every operator is attached to a [`Chart`] and acts in flat chart
//! coordinates, with all radial scalars given as fractions of the chart
//! radius. Outside its chart ball each surgery is an identity
//! pass-through, bitwise. The conformal inversion x -> t^2 x / |x|^2 and
//! the reflect-glue inversion x -> rho x / |x|^2 are applied in chart
//! coordinates; on the sphere this accepts O(rho^2) metric distortion,
//! which the tolerances absorb.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::{self, Vec2, Vec3};
use crate::map::{AnalyticMap, VertexField};
use crate::mesh::{Chart, SurfacePoint};
use crate::parallel;

/// Number of boundary samples used by trace-compatibility checks.
const TRACE_SAMPLES: usize = 256;
/// Tolerance for boundary-trace agreement between glued pieces.
pub const TRACE_TOLERANCE: f64 = 1e-6;

fn norm2(z: Vec2) -> f64 {
    (z[0] * z[0] + z[1] * z[1]).sqrt()
}

/// A map from the closed unit disk into S^2, evaluable in closed form.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum DiskMap {
    /// Constant disk map.
    Constant(Vec3),
    /// Degree-d bubble: the complex power z -> (z/scale)^d in stereographic
    /// coordinates, radially stretched to reach the constant value
    /// `boundary` exactly on the unit circle. Conformal except in the outer
    /// collar, with energy 8*pi*|degree| + O(scale^2).
    Bubble {
        degree: i32,
        scale: f64,
        boundary: Vec3,
    },
    /// A surface map restricted to a chart ball and rescaled to the disk:
    /// z -> map(chart.inverse(radius * z)).
    Restriction {
        map: Box<AnalyticMap>,
        chart: Chart,
    },
    /// Two disk maps with equal boundary traces grafted along the annulus
    /// copy: outer on |z| >= t, outer(t^2 z/|z|^2) on t^2 <= |z| <= t,
    /// inner(z/t^2) on |z| <= t^2.
    Graft {
        outer: Box<DiskMap>,
        inner: Box<DiskMap>,
        t: f64,
    },
    /// Conformal reflect-glue: inner(z/rho) on |z| <= rho and
    /// outer(rho z/|z|^2) outside; energy is the sum of the two pieces.
    ReflectGlue {
        outer: Box<DiskMap>,
        inner: Box<DiskMap>,
        rho: f64,
    },
    /// Cylinder graft of a boundary family around a core disk map:
    /// core(2z/(1+s)) for 2|z| <= 1+s, family((1+s)/|z| - 1, z/|z|)
    /// outside.
    Cylinder {
        family: BoundaryFamily,
        core: Box<DiskMap>,
        s: f64,
    },
}

/// A family of circle maps U(s, .) : [0,1] x S^1 -> S^2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum BoundaryFamily {
    /// Constant in s: the boundary trace of `of` at every parameter.
    Static { of: Box<DiskMap> },
    /// The boundary trace of `of` rotated about `axis` by angle*(1-s);
    /// matches the trace at s = 1.
    Rotating {
        of: Box<DiskMap>,
        axis: Vec3,
        angle: f64,
    },
}

impl BoundaryFamily {
    /// U(s, dir) for a unit direction on the circle.
    pub fn eval(&self, s: f64, dir: Vec2) -> Vec3 {
        match self {
            BoundaryFamily::Static { of } => of.eval(dir),
            BoundaryFamily::Rotating { of, axis, angle } => {
                rotate_about(of.eval(dir), *axis, angle * (1.0 - s))
            }
        }
    }

    fn validate(&self) -> Result<(), Error> {
        match self {
            BoundaryFamily::Static { of } => of.validate(),
            BoundaryFamily::Rotating { of, axis, angle } => {
                if !angle.is_finite() || geom::norm(*axis) < 1e-9 {
                    return Err(Error::Parameter("degenerate rotation family".into()));
                }
                of.validate()
            }
        }
    }
}

fn rotate_about(v: Vec3, axis: Vec3, angle: f64) -> Vec3 {
    let k = geom::normalize(axis);
    let (s, c) = angle.sin_cos();
    geom::add(
        geom::add(geom::scale(v, c), geom::scale(geom::cross(k, v), s)),
        geom::scale(k, geom::dot(k, v) * (1.0 - c)),
    )
}

impl DiskMap {
    pub fn constant(b: Vec3) -> Self {
        DiskMap::Constant(geom::normalize(b))
    }

    /// Evaluates the disk map at a point of the closed unit disk.
    pub fn eval(&self, z: Vec2) -> Vec3 {
        match self {
            DiskMap::Constant(b) => *b,
            DiskMap::Bubble {
                degree,
                scale,
                boundary,
            } => bubble_eval(*degree, *scale, *boundary, z),
            DiskMap::Restriction { map, chart } => {
                map.eval(&chart.inverse([z[0] * chart.radius, z[1] * chart.radius]))
            }
            DiskMap::Graft { outer, inner, t } => {
                let r = norm2(z);
                if r >= *t {
                    outer.eval(z)
                } else if r >= t * t {
                    let f = t * t / (r * r);
                    outer.eval([z[0] * f, z[1] * f])
                } else {
                    inner.eval([z[0] / (t * t), z[1] / (t * t)])
                }
            }
            DiskMap::ReflectGlue { outer, inner, rho } => {
                let r = norm2(z);
                if r <= *rho {
                    inner.eval([z[0] / rho, z[1] / rho])
                } else {
                    let f = rho / (r * r);
                    outer.eval([z[0] * f, z[1] * f])
                }
            }
            DiskMap::Cylinder { family, core, s } => {
                let r = norm2(z);
                if 2.0 * r <= 1.0 + s {
                    core.eval([2.0 * z[0] / (1.0 + s), 2.0 * z[1] / (1.0 + s)])
                } else {
                    family.eval((1.0 + s) / r - 1.0, [z[0] / r, z[1] / r])
                }
            }
        }
    }

    /// The constant boundary value, when the trace is constant within the
    /// trace tolerance.
    pub fn constant_boundary(&self) -> Option<Vec3> {
        let first = self.eval([1.0, 0.0]);
        for k in 1..64 {
            let th = std::f64::consts::TAU * k as f64 / 64.0;
            if geom::chord(self.eval([th.cos(), th.sin()]), first) > TRACE_TOLERANCE {
                return None;
            }
        }
        Some(geom::normalize(first))
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self {
            DiskMap::Constant(b) => {
                if !b.iter().all(|c| c.is_finite()) || geom::norm(*b) < 1e-9 {
                    return Err(Error::Parameter("constant disk map is not a direction".into()));
                }
                Ok(())
            }
            DiskMap::Bubble {
                degree,
                scale,
                boundary,
            } => {
                if *degree == 0 {
                    return Err(Error::Parameter("bubble of degree 0: use Constant".into()));
                }
                if !(*scale > 0.0 && *scale < 1.0) {
                    return Err(Error::Parameter(format!("bubble scale {scale} outside (0, 1)")));
                }
                if !boundary.iter().all(|c| c.is_finite()) || geom::norm(*boundary) < 1e-9 {
                    return Err(Error::Parameter("bubble boundary is not a direction".into()));
                }
                Ok(())
            }
            DiskMap::Restriction { map, chart } => {
                map.validate()?;
                if !map.compatible_with(chart.kind()) {
                    return Err(Error::Composition(
                        "restricted map and chart surface kinds differ".into(),
                    ));
                }
                Ok(())
            }
            DiskMap::Graft { outer, inner, t } => {
                if !(*t > 0.0 && *t < 1.0) {
                    return Err(Error::Parameter(format!("graft parameter {t} outside (0, 1)")));
                }
                outer.validate()?;
                inner.validate()
            }
            DiskMap::ReflectGlue { outer, inner, rho } => {
                if !(*rho > 0.0 && *rho < 1.0) {
                    return Err(Error::Parameter(format!("glue radius {rho} outside (0, 1)")));
                }
                outer.validate()?;
                inner.validate()
            }
            DiskMap::Cylinder { family, core, s } => {
                if !(0.0..=1.0).contains(s) {
                    return Err(Error::Parameter(format!("cylinder parameter {s} outside [0, 1]")));
                }
                family.validate()?;
                core.validate()
            }
        }
    }
}

fn bubble_eval(degree: i32, scale: f64, boundary: Vec3, z: Vec2) -> Vec3 {
    let r = norm2(z);
    // Radial stretch sending |z| = 1 to infinity; the energy excess over
    // 8*pi*|degree| is O(scale^2). For |degree| >= 2 the complex power
    // reaches the residual cap much faster, so a conformal core with a
    // late collar wins; for degree 1 the gentle full-range stretch wins.
    let r0 = if degree.unsigned_abs() == 1 { 0.0 } else { 0.65 };
    let f = if r < 1.0 {
        ((1.0 - r0) / (1.0 - r)).max(1.0)
    } else {
        f64::INFINITY
    };
    let zeta = [z[0] * f / scale, z[1] * f / scale];
    let zeta = if degree < 0 { [zeta[0], -zeta[1]] } else { zeta };
    let w = geom::complex_pow(zeta, degree.unsigned_abs());
    // north -> antipode of the boundary value, so w = infinity lands on it
    let rot = geom::rotation_to(geom::scale(geom::normalize(boundary), -1.0));
    geom::mat_apply(&rot, geom::stereo_to_sphere(w))
}

/// Degree-d bubble with boundary value exactly `boundary`.
pub fn make_bubble(degree: i32, scale: f64, boundary: Vec3) -> Result<DiskMap, Error> {
    let b = DiskMap::Bubble {
        degree,
        scale,
        boundary: geom::normalize(boundary),
    };
    b.validate()?;
    Ok(b)
}

/// One chart-localized modification inside an [`AnalyticMap`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SurgeryRecord {
    pub chart: Chart,
    pub kind: SurgeryKind,
}

/// The modification applied inside the chart ball. Radial parameters are
/// fractions of the chart radius.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum SurgeryKind {
    /// Radial reparametrization r -> (r - r0)/(1 - r0) making the map
    /// constant on B_r0 while keeping the chart boundary fixed.
    Opening { r: f64 },
    /// Scaled copy of `inner` grafted into B_t; the trace of the map below
    /// on the circle of radius t must match the inner boundary.
    BubbleInsertion { inner: DiskMap, t: f64 },
}

impl SurgeryRecord {
    pub(crate) fn eval(&self, map: &AnalyticMap, depth: usize, p: &SurfacePoint) -> Vec3 {
        if p.kind() != self.chart.kind() || self.chart.dist_from_center(p) >= self.chart.radius {
            // identity pass-through outside the chart ball
            return map.eval_depth(p, depth);
        }
        let x = self.chart.forward(p);
        let rho = self.chart.radius;
        let r = norm2(x) / rho;
        match &self.kind {
            SurgeryKind::Opening { r: r0 } => {
                if r <= *r0 {
                    map.eval_depth(&self.chart.center, depth)
                } else {
                    let phi = (r - r0) / (1.0 - r0);
                    let q = self
                        .chart
                        .inverse([x[0] * phi / r, x[1] * phi / r]);
                    map.eval_depth(&q, depth)
                }
            }
            SurgeryKind::BubbleInsertion { inner, t } => {
                if r >= *t {
                    map.eval_depth(p, depth)
                } else {
                    inner.eval([x[0] / (t * rho), x[1] / (t * rho)])
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match &self.kind {
            SurgeryKind::Opening { r } => {
                if !(*r > 0.0 && *r < 1.0) {
                    return Err(Error::Parameter(format!(
                        "opening radius {r} outside (0, 1) chart-normalized"
                    )));
                }
                Ok(())
            }
            SurgeryKind::BubbleInsertion { inner, t } => {
                if !(*t > 0.0 && *t < 1.0) {
                    return Err(Error::Parameter(format!(
                        "insertion parameter {t} outside (0, 1)"
                    )));
                }
                inner.validate()
            }
        }
    }
}

/// Opens `base` on the chart: the result agrees with `base` outside the
/// chart ball, is constant (= base at the chart center) on B_r, and
/// reparametrizes radially in between. Its energy converges to the energy
/// of `base` as r -> 0.
pub fn open_map(base: &AnalyticMap, chart: &Chart, r: f64) -> Result<AnalyticMap, Error> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::Parameter(format!(
            "opening radius {r} must lie in (0, 1) as a fraction of the chart radius"
        )));
    }
    if !base.compatible_with(chart.kind()) {
        return Err(Error::Composition("base map and chart surface kinds differ".into()));
    }
    let mut out = base.clone();
    out.surgeries.push(SurgeryRecord {
        chart: chart.clone(),
        kind: SurgeryKind::Opening { r },
    });
    Ok(out)
}

/// Grafts a scaled copy of the disk map `inner` into the ball B_t of the
/// chart. The base trace on the circle of radius t must match the inner
/// boundary trace (automatic after opening with r >= t); the result
/// differs from `base` only inside B_t, and for p = 2 its energy is the
/// base energy outside B_t plus the inner energy, the annulus copy of the
/// grafting identity being carried by the opened (constant) region.
pub fn insert_bubble(
    base: &AnalyticMap,
    chart: &Chart,
    inner: DiskMap,
    t: f64,
) -> Result<AnalyticMap, Error> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Parameter(format!("insertion parameter {t} outside (0, 1)")));
    }
    if !base.compatible_with(chart.kind()) {
        return Err(Error::Composition("base map and chart surface kinds differ".into()));
    }
    inner.validate()?;
    // Boundary compatibility on the seam circle of radius t.
    let mut worst = 0.0f64;
    for k in 0..TRACE_SAMPLES {
        let th = std::f64::consts::TAU * k as f64 / TRACE_SAMPLES as f64;
        let dir = [th.cos(), th.sin()];
        let on_surface = chart.inverse([dir[0] * t * chart.radius, dir[1] * t * chart.radius]);
        let base_val = base.eval(&on_surface);
        let inner_val = inner.eval(dir);
        worst = worst.max(geom::chord(base_val, inner_val));
    }
    if worst > TRACE_TOLERANCE {
        return Err(Error::Surgery(format!(
            "boundary mismatch {worst:.3e} between base and inserted bubble on the seam circle"
        )));
    }
    let mut out = base.clone();
    out.surgeries.push(SurgeryRecord {
        chart: chart.clone(),
        kind: SurgeryKind::BubbleInsertion { inner, t },
    });
    Ok(out)
}

/// Opening followed by insertion at the same chart and scale: the standard
/// pipeline that guarantees the insertion seam is constant.
pub fn open_and_insert(
    base: &AnalyticMap,
    chart: &Chart,
    inner: DiskMap,
    t: f64,
) -> Result<AnalyticMap, Error> {
    let opened = open_map(base, chart, t)?;
    insert_bubble(&opened, chart, inner, t)
}

/// Conformal reflect-glue of two surface maps over a chart: the result is
/// the disk map equal to v(x/rho) for |x| <= rho and u(rho x/|x|^2)
/// outside, realizing the relative class of (u, v) over the ball as a
/// single bubble with energy E(u|_B) + E(v|_B).
///
/// Requires the traces of u and v to agree on the chart boundary and u to
/// be constant on B_rho of the chart (open it first), so that the result
/// has constant boundary value u(center).
pub fn reflect_glue(
    u: &AnalyticMap,
    v: &AnalyticMap,
    chart: &Chart,
    rho_inner: f64,
) -> Result<DiskMap, Error> {
    if !(rho_inner > 0.0 && rho_inner < 1.0) {
        return Err(Error::Parameter(format!("glue radius {rho_inner} outside (0, 1)")));
    }
    if !u.compatible_with(chart.kind()) || !v.compatible_with(chart.kind()) {
        return Err(Error::Composition("maps and chart surface kinds differ".into()));
    }
    let mut worst_trace = 0.0f64;
    for k in 0..TRACE_SAMPLES {
        let th = std::f64::consts::TAU * k as f64 / TRACE_SAMPLES as f64;
        let p = chart.inverse([chart.radius * th.cos(), chart.radius * th.sin()]);
        worst_trace = worst_trace.max(geom::chord(u.eval(&p), v.eval(&p)));
    }
    if worst_trace > TRACE_TOLERANCE {
        return Err(Error::Surgery(format!(
            "traces differ by {worst_trace:.3e} on the chart boundary"
        )));
    }
    let center_val = u.eval(&chart.center);
    let mut worst_const = 0.0f64;
    for k in 0..64 {
        let th = std::f64::consts::TAU * k as f64 / 64.0;
        for frac in [0.5, 0.999] {
            let rr = rho_inner * frac * chart.radius;
            let p = chart.inverse([rr * th.cos(), rr * th.sin()]);
            worst_const = worst_const.max(geom::chord(u.eval(&p), center_val));
        }
    }
    if worst_const > TRACE_TOLERANCE {
        return Err(Error::Surgery(format!(
            "u varies by {worst_const:.3e} on B_rho: open it first"
        )));
    }
    Ok(DiskMap::ReflectGlue {
        outer: Box::new(DiskMap::Restriction {
            map: Box::new(u.clone()),
            chart: chart.clone(),
        }),
        inner: Box::new(DiskMap::Restriction {
            map: Box::new(v.clone()),
            chart: chart.clone(),
        }),
        rho: rho_inner,
    })
}

/// Places scaled copies of two disk-supported bubbles with a common
/// constant boundary value in disjoint chart balls over the constant
/// background; energy adds exactly in the analytic representation and the
/// degree adds exactly.
pub fn concatenate(
    f: &DiskMap,
    g: &DiskMap,
    charts: (&Chart, &Chart),
) -> Result<AnalyticMap, Error> {
    let (c1, c2) = charts;
    if c1.kind() != c2.kind() {
        return Err(Error::Parameter("charts live on different surfaces".into()));
    }
    let dist = crate::mesh::surface_dist(&c1.center, &c2.center);
    if dist <= c1.radius + c2.radius {
        return Err(Error::Parameter(format!(
            "chart balls overlap: centers {dist:.4} apart, radii {} + {}",
            c1.radius, c2.radius
        )));
    }
    let bf = f
        .constant_boundary()
        .ok_or_else(|| Error::Surgery("first bubble has a non-constant boundary".into()))?;
    let bg = g
        .constant_boundary()
        .ok_or_else(|| Error::Surgery("second bubble has a non-constant boundary".into()))?;
    if geom::chord(bf, bg) > TRACE_TOLERANCE {
        return Err(Error::Surgery("bubble boundary values differ".into()));
    }
    let base = AnalyticMap::constant(bf);
    let placed = insert_bubble(&base, c1, f.clone(), 0.9)?;
    insert_bubble(&placed, c2, g.clone(), 0.9)
}

/// Cylinder graft: W(s, x) = v(2x/(1+s)) for 2|x| <= 1+s and
/// U((1+s)/|x| - 1, x/|x|) outside. W(1, .) = v identically, and the
/// boundary trace of W(s, .) is U(s, .).
pub fn cylinder_homotopy(
    family: &BoundaryFamily,
    core: &DiskMap,
    s: f64,
) -> Result<DiskMap, Error> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Parameter(format!("cylinder parameter {s} outside [0, 1]")));
    }
    family.validate()?;
    core.validate()?;
    let mut worst = 0.0f64;
    for k in 0..TRACE_SAMPLES {
        let th = std::f64::consts::TAU * k as f64 / TRACE_SAMPLES as f64;
        let dir = [th.cos(), th.sin()];
        worst = worst.max(geom::chord(family.eval(1.0, dir), core.eval(dir)));
    }
    if worst > TRACE_TOLERANCE {
        return Err(Error::Surgery(format!(
            "family at s = 1 differs from the core trace by {worst:.3e}"
        )));
    }
    Ok(DiskMap::Cylinder {
        family: family.clone(),
        core: Box::new(core.clone()),
        s,
    })
}

/// The two-disk grafting of maps with equal boundary traces:
/// U = u0 outside B_t, the conformal inversion copy u0(t^2 z/|z|^2) on the
/// annulus t^2 <= |z| <= t, and u1(z/t^2) inside B_{t^2}. For p = 2 its
/// energy is the u0 energy outside B_t counted twice plus the u1 energy.
pub fn graft_two_disks(u0: &DiskMap, u1: &DiskMap, t: f64) -> Result<DiskMap, Error> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::Parameter(format!("graft parameter {t} outside (0, 1)")));
    }
    u0.validate()?;
    u1.validate()?;
    let mut worst = 0.0f64;
    for k in 0..TRACE_SAMPLES {
        let th = std::f64::consts::TAU * k as f64 / TRACE_SAMPLES as f64;
        let dir = [th.cos(), th.sin()];
        worst = worst.max(geom::chord(u0.eval(dir), u1.eval(dir)));
    }
    if worst > TRACE_TOLERANCE {
        return Err(Error::Surgery(format!(
            "boundary traces differ by {worst:.3e}"
        )));
    }
    Ok(DiskMap::Graft {
        outer: Box::new(u0.clone()),
        inner: Box::new(u1.clone()),
        t,
    })
}

// ---------------------------------------------------------------------------
// Disk sampling: a polar triangulation of the unit disk for measuring disk
// map energies and degrees at controllable resolution.

/// Polar triangulation of the closed unit disk.
#[derive(Clone, Debug)]
pub struct DiskGrid {
    pub points: Vec<Vec2>,
    pub triangles: Vec<[usize; 3]>,
}

impl DiskGrid {
    /// Uniform polar grid with `rings` concentric rings; ring i sits at
    /// radius i/rings and carries about 2*pi*i points.
    pub fn polar(rings: usize) -> DiskGrid {
        assert!(rings >= 2, "need at least two rings");
        let mut points: Vec<Vec2> = vec![[0.0, 0.0]];
        let mut ring_start = vec![0usize; rings + 1];
        let mut ring_count = vec![0usize; rings + 1];
        for i in 1..=rings {
            let r = i as f64 / rings as f64;
            let n = ((std::f64::consts::TAU * r * rings as f64).ceil() as usize).max(6);
            ring_start[i] = points.len();
            ring_count[i] = n;
            for k in 0..n {
                let th = std::f64::consts::TAU * k as f64 / n as f64;
                points.push([r * th.cos(), r * th.sin()]);
            }
        }
        let mut triangles = Vec::new();
        // center fan
        let n1 = ring_count[1];
        for k in 0..n1 {
            triangles.push([0, ring_start[1] + k, ring_start[1] + (k + 1) % n1]);
        }
        // stitch consecutive rings by angular merge
        for i in 1..rings {
            let (s_in, n_in) = (ring_start[i], ring_count[i]);
            let (s_out, n_out) = (ring_start[i + 1], ring_count[i + 1]);
            let mut a = 0usize;
            let mut b = 0usize;
            while a < n_in || b < n_out {
                let next_in = (a + 1) as f64 / n_in as f64;
                let next_out = (b + 1) as f64 / n_out as f64;
                let cur_in = s_in + a % n_in;
                let cur_out = s_out + b % n_out;
                if b >= n_out || (a < n_in && next_in <= next_out) {
                    triangles.push([cur_in, cur_out, s_in + (a + 1) % n_in]);
                    a += 1;
                } else {
                    triangles.push([cur_in, cur_out, s_out + (b + 1) % n_out]);
                    b += 1;
                }
            }
        }
        DiskGrid { points, triangles }
    }

    fn barycenter(&self, t: usize) -> Vec2 {
        let [i, j, k] = self.triangles[t];
        [
            (self.points[i][0] + self.points[j][0] + self.points[k][0]) / 3.0,
            (self.points[i][1] + self.points[j][1] + self.points[k][1]) / 3.0,
        ]
    }
}

/// Samples a disk map at the grid points.
pub fn sample_disk(map: &DiskMap, grid: &DiskGrid) -> Vec<Vec3> {
    parallel::map_indexed(grid.points.len(), |i| geom::normalize(map.eval(grid.points[i])))
}

/// Discrete p = 2 energy of a disk map over the radius band
/// r_lo <= |barycenter| <= r_hi of the grid.
pub fn disk_band_energy(map: &DiskMap, grid: &DiskGrid, r_lo: f64, r_hi: f64) -> f64 {
    let values = sample_disk(map, grid);
    let masses = parallel::map_indexed(grid.triangles.len(), |t| {
        let c = grid.barycenter(t);
        let r = norm2(c);
        if r < r_lo || r > r_hi {
            return 0.0;
        }
        let [i, j, k] = grid.triangles[t];
        let p = [grid.points[i], grid.points[j], grid.points[k]];
        let v = [values[i], values[j], values[k]];
        match crate::energy::triangle_differential(&p, &v) {
            Ok(d) => d.area * d.frobenius_sq(),
            Err(_) => 0.0,
        }
    });
    let mut total = geom::KahanSum::new();
    for m in masses {
        total.add(m);
    }
    total.total()
}

/// Discrete p = 2 energy of a disk map over the whole disk.
pub fn disk_energy(map: &DiskMap, grid: &DiskGrid) -> f64 {
    disk_band_energy(map, grid, 0.0, f64::INFINITY)
}

/// Signed image-area integral of a disk map (sum of oriented solid
/// angles); divided by 4*pi this is the degree when the boundary trace is
/// constant.
pub fn disk_signed_area(map: &DiskMap, grid: &DiskGrid) -> f64 {
    let values = sample_disk(map, grid);
    let angles = parallel::map_indexed(grid.triangles.len(), |t| {
        let [i, j, k] = grid.triangles[t];
        crate::topology::oriented_solid_angle(values[i], values[j], values[k]).unwrap_or(0.0)
    });
    let mut sum = geom::KahanSum::new();
    for a in angles {
        sum.add(a);
    }
    sum.total()
}

/// Degree of a constant-boundary disk map from the solid-angle sum.
pub fn disk_degree(map: &DiskMap, grid: &DiskGrid) -> i64 {
    (disk_signed_area(map, grid) / (4.0 * std::f64::consts::PI)).round() as i64
}

/// Locality check used by tests: vertices outside the chart ball keep the
/// exact base values.
pub fn equals_outside_chart(
    result: &VertexField,
    base: &VertexField,
    mesh: &crate::mesh::TriMesh,
    chart: &Chart,
) -> bool {
    (0..mesh.vertex_count()).all(|i| {
        let p = mesh.point(i);
        chart.dist_from_center(&p) < chart.radius || result.values[i] == base.values[i]
    })
}

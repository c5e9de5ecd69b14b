//! Discrete Sobolev p-energy of a vertex field.
//!
//! Each triangle is flattened with its intrinsic edge lengths and carries
//! the affine interpolant of its three target values; the energy density is
//! the Frobenius norm of the interpolant's differential raised to the p/2
//! power. One-point quadrature is exact for the piecewise-affine
//! interpolant, so the per-triangle contribution is area * density. With
//! the Frobenius norm, 2|Jf| <= |Df|^2 holds pointwise, keeping the 8*pi
//! energy quantum per unit of degree exact.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::{self, Vec2, Vec3};
use crate::map::VertexField;
use crate::mesh::{Chart, TriMesh};
use crate::parallel;

/// Differential data of the affine interpolant on one flattened triangle.
#[derive(Clone, Copy, Debug)]
pub struct TriangleDifferential {
    /// Image of the first flat basis direction.
    pub d1: Vec3,
    /// Image of the second flat basis direction.
    pub d2: Vec3,
    /// Intrinsic (flat) triangle area.
    pub area: f64,
}

impl TriangleDifferential {
    /// |Df|^2 with the Frobenius norm.
    pub fn frobenius_sq(&self) -> f64 {
        geom::dot(self.d1, self.d1) + geom::dot(self.d2, self.d2)
    }

    /// Pointwise Jacobian sqrt(det(Df^T Df)) of the interpolant.
    pub fn jacobian(&self) -> f64 {
        geom::norm(geom::cross(self.d1, self.d2))
    }
}

/// Computes the interpolant differential from flattened corner positions
/// and corner values. Fails on degenerate (zero-area) triangles.
pub fn triangle_differential(p: &[Vec2; 3], v: &[Vec3; 3]) -> Result<TriangleDifferential, Error> {
    let a = p[1][0] - p[0][0];
    let b = p[1][1] - p[0][1];
    let c = p[2][0] - p[0][0];
    let d = p[2][1] - p[0][1];
    let det = a * d - b * c;
    let area = 0.5 * det.abs();
    if !(area > 1e-300) || !det.is_finite() {
        return Err(Error::Geometry("degenerate triangle in energy kernel".into()));
    }
    let v1 = geom::sub(v[1], v[0]);
    let v2 = geom::sub(v[2], v[0]);
    // Df = V G^{-1} with G the flat edge matrix.
    let d1 = geom::scale(geom::sub(geom::scale(v1, d), geom::scale(v2, b)), 1.0 / det);
    let d2 = geom::scale(geom::sub(geom::scale(v2, a), geom::scale(v1, c)), 1.0 / det);
    Ok(TriangleDifferential { d1, d2, area })
}

/// Interpolant differential of `field` on mesh triangle `t`.
pub fn mesh_triangle_differential(
    mesh: &TriMesh,
    field: &VertexField,
    t: usize,
) -> Result<TriangleDifferential, Error> {
    let [i, j, k] = mesh.triangles()[t];
    let p = mesh.flatten_triangle(t);
    triangle_differential(&p, &[field.values[i], field.values[j], field.values[k]])
}

/// Discrete p-energy with its per-triangle density measure.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EnergyReport {
    pub p: f64,
    pub total: f64,
    pub per_triangle: Vec<f64>,
}

impl EnergyReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let r: EnergyReport = serde_json::from_str(text)?;
        if !(r.p >= 1.0) {
            return Err(Error::Parameter(format!("exponent p = {} must be >= 1", r.p)));
        }
        if !r.total.is_finite() {
            return Err(Error::Parameter("total is not finite".into()));
        }
        let mut sum = geom::KahanSum::new();
        for (t, &m) in r.per_triangle.iter().enumerate() {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::Parameter(format!("bad mass at triangle {t}")));
            }
            sum.add(m);
        }
        let rel = (sum.total() - r.total).abs() / r.total.abs().max(1e-30);
        if rel > 1e-9 && (sum.total() - r.total).abs() > 1e-12 {
            return Err(Error::Parameter("total does not match per-triangle masses".into()));
        }
        Ok(r)
    }
}

/// Discrete p-energy of a vertex field, integral of |Df|^p over the mesh.
pub fn p_energy(field: &VertexField, mesh: &TriMesh, p: f64) -> Result<EnergyReport, Error> {
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("exponent p = {p} must be >= 1")));
    }
    field.check_on(mesh)?;
    let per_triangle = parallel::map_indexed(mesh.triangle_count(), |t| {
        let diff = mesh_triangle_differential(mesh, field, t).expect("mesh guarantees areas > 0");
        diff.area * diff.frobenius_sq().powf(p / 2.0)
    });
    let mut total = geom::KahanSum::new();
    for &m in &per_triangle {
        total.add(m);
    }
    Ok(EnergyReport {
        p,
        total: total.total(),
        per_triangle,
    })
}

/// Euclidean gradient of the p = 2 energy with respect to the vertex
/// values, projected onto each vertex's tangent plane (I - vv^T).
pub fn energy_gradient(field: &VertexField, mesh: &TriMesh, p: f64) -> Result<Vec<Vec3>, Error> {
    if p != 2.0 {
        return Err(Error::Unsupported(format!("gradient implemented for p = 2 only, got {p}")));
    }
    field.check_on(mesh)?;
    // Per-triangle partials, then a fixed-order scatter for determinism.
    let partials = parallel::map_indexed(mesh.triangle_count(), |t| {
        let [i, j, k] = mesh.triangles()[t];
        let p2d = mesh.flatten_triangle(t);
        let a = p2d[1][0] - p2d[0][0];
        let b = p2d[1][1] - p2d[0][1];
        let c = p2d[2][0] - p2d[0][0];
        let d = p2d[2][1] - p2d[0][1];
        let det = a * d - b * c;
        let area = 0.5 * det.abs();
        // M = area * G^{-1} G^{-T}
        let inv = 1.0 / det;
        // G^{-1} = inv * [[d, -c], [-b, a]]
        let g11 = inv * d;
        let g12 = -inv * c;
        let g21 = -inv * b;
        let g22 = inv * a;
        let m11 = area * (g11 * g11 + g12 * g12);
        let m12 = area * (g11 * g21 + g12 * g22);
        let m22 = area * (g21 * g21 + g22 * g22);
        let v1 = geom::sub(field.values[j], field.values[i]);
        let v2 = geom::sub(field.values[k], field.values[i]);
        let d1 = geom::add(geom::scale(v1, 2.0 * m11), geom::scale(v2, 2.0 * m12));
        let d2 = geom::add(geom::scale(v2, 2.0 * m22), geom::scale(v1, 2.0 * m12));
        (d1, d2)
    });
    let mut grad = vec![[0.0; 3]; mesh.vertex_count()];
    for (t, &[i, j, k]) in mesh.triangles().iter().enumerate() {
        let (d1, d2) = partials[t];
        grad[j] = geom::add(grad[j], d1);
        grad[k] = geom::add(grad[k], d2);
        grad[i] = geom::sub(grad[i], geom::add(d1, d2));
    }
    for (g, v) in grad.iter_mut().zip(&field.values) {
        *g = geom::sub(*g, geom::scale(*v, geom::dot(*g, *v)));
    }
    Ok(grad)
}

/// Sum of per-triangle masses whose barycenter lies in the geodesic ball
/// B_r(chart.center); the discrete mu(B_r).
pub fn ball_energy(report: &EnergyReport, mesh: &TriMesh, chart: &Chart, r: f64) -> Result<f64, Error> {
    if report.per_triangle.len() != mesh.triangle_count() {
        return Err(Error::Parameter("report does not match the mesh".into()));
    }
    let mut sum = geom::KahanSum::new();
    for t in 0..mesh.triangle_count() {
        if chart.dist_from_center(&mesh.barycenter(t)) < r {
            sum.add(report.per_triangle[t]);
        }
    }
    Ok(sum.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{sample, AnalyticMap, VertexField};
    use crate::mesh::{build_flat_torus, build_icosphere, make_chart, SurfacePoint};
    use rand::{Rng, SeedableRng};

    const PI: f64 = std::f64::consts::PI;

    #[test]
    fn constant_field_zero_energy() {
        let mesh = build_flat_torus(16).unwrap();
        let f = sample(&AnalyticMap::constant([0.0, 1.0, 0.0]), &mesh).unwrap();
        for p in [1.0, 2.0, 3.0] {
            let r = p_energy(&f, &mesh, p).unwrap();
            assert!(r.total.abs() < 1e-18);
        }
    }

    #[test]
    fn identity_energy_is_eight_pi() {
        let mesh = build_icosphere(5).unwrap();
        let f = sample(&AnalyticMap::identity_sphere(), &mesh).unwrap();
        let r = p_energy(&f, &mesh, 2.0).unwrap();
        let rel = (r.total - 8.0 * PI) / (8.0 * PI);
        assert!(rel.abs() < 0.01, "relative error {rel}");
    }

    #[test]
    fn report_total_matches_parts() {
        let mesh = build_icosphere(3).unwrap();
        let f = sample(&AnalyticMap::identity_sphere(), &mesh).unwrap();
        let r = p_energy(&f, &mesh, 2.0).unwrap();
        let naive: f64 = r.per_triangle.iter().sum();
        assert!((naive - r.total).abs() / r.total < 1e-9);
        assert!(r.per_triangle.iter().all(|&m| m >= 0.0));
    }

    #[test]
    fn rotation_invariance_exact() {
        let mesh = build_icosphere(3).unwrap();
        let f = sample(&crate::map::stereographic_power_map(2, 0.7, [0.0, 0.0, 1.0]).unwrap(), &mesh).unwrap();
        let e0 = p_energy(&f, &mesh, 2.0).unwrap().total;
        // rotate all values by a fixed orthogonal matrix
        let rot = geom::rotation_to(geom::normalize([0.3, 0.4, 0.87]));
        let g = VertexField {
            mesh_hash: f.mesh_hash.clone(),
            values: f.values.iter().map(|v| geom::mat_apply(&rot, *v)).collect(),
        };
        let e1 = p_energy(&g, &mesh, 2.0).unwrap().total;
        assert!((e0 - e1).abs() <= 1e-12 * e0);
    }

    #[test]
    fn gradient_vanishes_on_constants() {
        let mesh = build_flat_torus(8).unwrap();
        let f = sample(&AnalyticMap::constant([1.0, 0.0, 0.0]), &mesh).unwrap();
        let g = energy_gradient(&f, &mesh, 2.0).unwrap();
        for v in g {
            assert!(geom::norm(v) < 1e-14);
        }
    }

    #[test]
    fn gradient_rejects_other_exponents() {
        let mesh = build_flat_torus(4).unwrap();
        let f = sample(&AnalyticMap::constant([1.0, 0.0, 0.0]), &mesh).unwrap();
        assert!(energy_gradient(&f, &mesh, 3.0).is_err());
    }

    /// Smooth seeded field used by the finite-difference checks.
    fn smooth_field(mesh: &TriMesh, seed: u64) -> VertexField {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let a: f64 = rng.gen_range(0.5..2.0);
        let b: f64 = rng.gen_range(0.5..2.0);
        let c: f64 = rng.gen_range(0.0..PI);
        let values = (0..mesh.vertex_count())
            .map(|i| {
                let v = mesh.vertex(i);
                geom::normalize([
                    (a * v[0] + c).sin() + 0.7,
                    (b * v[1] - c).cos(),
                    v[2] + 0.3 * (a * v[1]).sin(),
                ])
            })
            .collect();
        VertexField {
            mesh_hash: mesh.content_hash().to_string(),
            values,
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mesh = build_icosphere(2).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..5 {
            let f = smooth_field(&mesh, 100 + trial);
            let grad = energy_gradient(&f, &mesh, 2.0).unwrap();
            for _ in 0..3 {
                // random tangent direction
                let dir: Vec<Vec3> = f
                    .values
                    .iter()
                    .map(|v| {
                        let w = [
                            rng.gen::<f64>() - 0.5,
                            rng.gen::<f64>() - 0.5,
                            rng.gen::<f64>() - 0.5,
                        ];
                        geom::sub(w, geom::scale(*v, geom::dot(w, *v)))
                    })
                    .collect();
                let h = 1e-5;
                let shift = |s: f64| VertexField {
                    mesh_hash: f.mesh_hash.clone(),
                    values: f
                        .values
                        .iter()
                        .zip(&dir)
                        .map(|(v, d)| geom::add(*v, geom::scale(*d, s)))
                        .collect(),
                };
                let perturbed_energy = |field: &VertexField| {
                    let per = parallel::map_indexed(mesh.triangle_count(), |t| {
                        let diff = mesh_triangle_differential(&mesh, field, t).unwrap();
                        diff.area * diff.frobenius_sq()
                    });
                    let mut total = geom::KahanSum::new();
                    for m in per {
                        total.add(m);
                    }
                    total.total()
                };
                let num = (perturbed_energy(&shift(h)) - perturbed_energy(&shift(-h))) / (2.0 * h);
                let ana: f64 = grad
                    .iter()
                    .zip(&dir)
                    .map(|(g, d)| geom::dot(*g, *d))
                    .sum();
                let rel = (num - ana).abs() / num.abs().max(1e-12);
                assert!(rel < 1e-6, "finite-difference mismatch: {num} vs {ana}");
            }
        }
    }

    #[test]
    fn ball_energy_covers_and_splits() {
        let mesh = build_icosphere(4).unwrap();
        let f = sample(&AnalyticMap::identity_sphere(), &mesh).unwrap();
        let r = p_energy(&f, &mesh, 2.0).unwrap();
        let chart = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.9).unwrap();
        // whole surface
        let all = ball_energy(&r, &mesh, &chart, 4.0).unwrap();
        assert!((all - r.total).abs() < 1e-12);
        // hemisphere: half the total within a few percent
        let hemi = ball_energy(&r, &mesh, &chart, PI / 2.0).unwrap();
        assert!((hemi - 4.0 * PI).abs() / (4.0 * PI) < 0.03);
        // constant field: zero in any ball
        let c = sample(&AnalyticMap::constant([0.0, 0.0, 1.0]), &mesh).unwrap();
        let rc = p_energy(&c, &mesh, 2.0).unwrap();
        assert!(ball_energy(&rc, &mesh, &chart, 0.5).unwrap().abs() < 1e-18);
    }
}

//! Brouwer degree via the oriented solid-angle (Kronecker) sum, map-area
//! integrals, the pointwise 2|J| <= |Df|^2 bound, and the closed-form
//! minimal energy per homotopy class for S^2 targets.

use serde::{Deserialize, Serialize};

use crate::energy::mesh_triangle_differential;
use crate::error::Error;
use crate::geom::{self, Vec3};
use crate::map::VertexField;
use crate::mesh::TriMesh;
use crate::parallel;

/// Default tolerance for snapping the raw degree to an integer.
pub const SNAP_TOLERANCE: f64 = 0.05;

/// Oriented solid angle of the spherical triangle (a, b, c), computed with
/// the two-argument arctangent form; stable where the naive spherical
/// excess cancels catastrophically.
///
/// Returns `None` for the degenerate near-antipodal great-circle
/// configuration in which the angle is ill-defined.
pub fn oriented_solid_angle(a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let num = geom::triple(a, b, c);
    let den = 1.0 + geom::dot(a, b) + geom::dot(b, c) + geom::dot(c, a);
    if den <= 0.0 && num.abs() < 1e-14 {
        return None;
    }
    Some(2.0 * num.atan2(den))
}

/// Raw and snapped Brouwer degree of a sampled field.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DegreeReport {
    /// Kronecker integral divided by 4*pi.
    pub raw: f64,
    /// Nearest integer to `raw`.
    pub snapped: i64,
    /// |raw - snapped|.
    pub residual: f64,
    /// Whether `residual` is below the snapping tolerance.
    pub reliable: bool,
    /// Number of degenerate image triangles that contributed zero.
    pub degenerate_triangles: usize,
}

/// Brouwer degree of a field on a closed oriented mesh: the normalized sum
/// of oriented solid angles of the image triangles.
pub fn brouwer_degree(field: &VertexField, mesh: &TriMesh) -> Result<DegreeReport, Error> {
    field.check_on(mesh)?;
    let angles = parallel::map_indexed(mesh.triangle_count(), |t| {
        let [i, j, k] = mesh.triangles()[t];
        oriented_solid_angle(field.values[i], field.values[j], field.values[k])
    });
    let mut sum = geom::KahanSum::new();
    let mut degenerate = 0usize;
    for a in angles {
        match a {
            Some(v) => sum.add(v),
            None => degenerate += 1,
        }
    }
    let raw = sum.total() / (4.0 * std::f64::consts::PI);
    let snapped = raw.round() as i64;
    let residual = (raw - snapped as f64).abs();
    Ok(DegreeReport {
        raw,
        snapped,
        residual,
        reliable: residual < SNAP_TOLERANCE,
        degenerate_triangles: degenerate,
    })
}

/// Signed and unsigned image-area integrals: the signed sum of oriented
/// solid angles (4*pi times the raw degree) and the sum of their absolute
/// values (the discrete map area; exact for m = dim N = 2 by the area
/// formula).
pub fn jacobian_integrals(field: &VertexField, mesh: &TriMesh) -> Result<(f64, f64), Error> {
    field.check_on(mesh)?;
    let angles = parallel::map_indexed(mesh.triangle_count(), |t| {
        let [i, j, k] = mesh.triangles()[t];
        oriented_solid_angle(field.values[i], field.values[j], field.values[k]).unwrap_or(0.0)
    });
    let mut signed = geom::KahanSum::new();
    let mut unsigned = geom::KahanSum::new();
    for a in angles {
        signed.add(a);
        unsigned.add(a.abs());
    }
    Ok((signed.total(), unsigned.total()))
}

/// Verifies the pointwise bound 2|J| <= |Df|^2 on every triangle of the
/// piecewise-affine interpolant and returns the minimal slack
/// |Df|^2 - 2|J| over the mesh. A violation beyond 1e-9 would indicate an
/// implementation bug, the inequality being algebraically exact.
pub fn check_amgm_bound(field: &VertexField, mesh: &TriMesh) -> Result<(bool, f64), Error> {
    field.check_on(mesh)?;
    let slacks = parallel::map_indexed(mesh.triangle_count(), |t| {
        let d = mesh_triangle_differential(mesh, field, t).expect("mesh areas positive");
        d.frobenius_sq() - 2.0 * d.jacobian()
    });
    let min_slack = slacks.into_iter().fold(f64::INFINITY, f64::min);
    Ok((min_slack >= -1e-9, min_slack))
}

/// An element of pi_2(S^2) ~ Z, identified by its Brouwer degree.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomotopyClassZ {
    pub degree: i64,
}

impl HomotopyClassZ {
    pub fn from_degree(degree: i64) -> Self {
        HomotopyClassZ { degree }
    }
}

impl TryFrom<DegreeReport> for HomotopyClassZ {
    type Error = Error;
    fn try_from(r: DegreeReport) -> Result<Self, Error> {
        if !r.reliable {
            return Err(Error::Numeric(format!(
                "degree report unreliable: raw {} residual {}",
                r.raw, r.residual
            )));
        }
        Ok(HomotopyClassZ { degree: r.snapped })
    }
}

/// Minimal 2-energy of disk maps realizing the class: exactly
/// 8*pi*|degree| for S^2 targets (the m = 2 value of m^{m/2} |S^m|).
pub fn etop_sphere(class: HomotopyClassZ) -> f64 {
    8.0 * std::f64::consts::PI * class.degree.unsigned_abs() as f64
}

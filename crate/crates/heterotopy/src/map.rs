//! Maps from a surface into S^2, in two representations: closed-form
//! compositional descriptions ([`AnalyticMap`]) and per-vertex samples
//! ([`VertexField`]).
//!
//! An `AnalyticMap` is a base map plus an ordered stack of surgeries; it is
//! evaluated functionally at query points, so surgery formulas stay exact
//! and all interpolation error enters only at [`sample`] time.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geom::{self, Vec3};
use crate::mesh::{MeshKind, SurfacePoint, TriMesh};
use crate::parallel;
use crate::surgery::SurgeryRecord;

/// Base layer of an [`AnalyticMap`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub enum BaseMap {
    /// Constant map to a point of S^2.
    Constant(Vec3),
    /// The identity S^2 -> S^2 (sphere domains only).
    IdentitySphere,
    /// z -> (z/lambda)^d in stereographic coordinates centred at
    /// `rotation * north`; antiholomorphic (conjugated) for d < 0.
    /// Brouwer degree d, Dirichlet energy exactly 8*pi*|d|.
    StereographicPower {
        degree: i32,
        scale: f64,
        rotation: [Vec3; 3],
    },
}

impl BaseMap {
    fn eval(&self, p: &SurfacePoint) -> Vec3 {
        match self {
            BaseMap::Constant(b) => *b,
            BaseMap::IdentitySphere => match p {
                SurfacePoint::Sphere(q) => *q,
                SurfacePoint::Torus(_) => [f64::NAN; 3],
            },
            BaseMap::StereographicPower {
                degree,
                scale,
                rotation,
            } => match p {
                SurfacePoint::Sphere(q) => {
                    let local = geom::mat_transpose_apply(rotation, *q);
                    let z = geom::sphere_to_stereo(local);
                    let z = [z[0] / scale, z[1] / scale];
                    let z = if *degree < 0 { [z[0], -z[1]] } else { z };
                    let w = geom::complex_pow(z, degree.unsigned_abs());
                    geom::mat_apply(rotation, geom::stereo_to_sphere(w))
                }
                SurfacePoint::Torus(_) => [f64::NAN; 3],
            },
        }
    }

    fn required_kind(&self) -> Option<MeshKind> {
        match self {
            BaseMap::Constant(_) => None,
            BaseMap::IdentitySphere | BaseMap::StereographicPower { .. } => Some(MeshKind::Sphere),
        }
    }
}

/// Closed-form description of a map into S^2: a base map with an ordered
/// stack of chart-localized surgeries applied on top.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AnalyticMap {
    pub base: BaseMap,
    pub surgeries: Vec<SurgeryRecord>,
}

impl AnalyticMap {
    pub fn constant(b: Vec3) -> Self {
        AnalyticMap {
            base: BaseMap::Constant(geom::normalize(b)),
            surgeries: Vec::new(),
        }
    }

    pub fn identity_sphere() -> Self {
        AnalyticMap {
            base: BaseMap::IdentitySphere,
            surgeries: Vec::new(),
        }
    }

    /// Evaluates the map at a surface point; the result is a unit vector.
    pub fn eval(&self, p: &SurfacePoint) -> Vec3 {
        self.eval_depth(p, self.surgeries.len())
    }

    /// Evaluates the map with only the first `depth` surgeries applied.
    pub(crate) fn eval_depth(&self, p: &SurfacePoint, depth: usize) -> Vec3 {
        if depth == 0 {
            return self.base.eval(p);
        }
        self.surgeries[depth - 1].eval(self, depth - 1, p)
    }

    /// Surface kind this map needs, if any of its parts constrain it.
    pub fn required_kind(&self) -> Option<MeshKind> {
        if let Some(k) = self.base.required_kind() {
            return Some(k);
        }
        self.surgeries.first().map(|s| s.chart.kind())
    }

    /// Checks that all charts and the base live on `kind`.
    pub fn compatible_with(&self, kind: MeshKind) -> bool {
        if self.base.required_kind().is_some_and(|k| k != kind) {
            return false;
        }
        self.surgeries.iter().all(|s| s.chart.kind() == kind)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let map: AnalyticMap = serde_json::from_str(text)?;
        map.validate()?;
        Ok(map)
    }

    /// Structural validation used when loading untrusted descriptions.
    pub fn validate(&self) -> Result<(), Error> {
        if let BaseMap::Constant(b) = &self.base {
            if !b.iter().all(|c| c.is_finite()) || geom::norm(*b) < 1e-9 {
                return Err(Error::Parameter("constant base is not a usable direction".into()));
            }
        }
        if let BaseMap::StereographicPower {
            degree,
            scale,
            rotation,
        } = &self.base
        {
            if *degree == 0 {
                return Err(Error::Parameter(
                    "degree 0 power map: use a Constant base instead".into(),
                ));
            }
            if !(*scale > 0.0) || !scale.is_finite() {
                return Err(Error::Parameter(format!("power map scale {scale} must be positive")));
            }
            if !geom::is_orthogonal(rotation, 1e-9) {
                return Err(Error::Parameter("power map rotation is not orthogonal".into()));
            }
        }
        for s in &self.surgeries {
            s.validate()?;
        }
        if let Some(kind) = self.required_kind() {
            if !self.compatible_with(kind) {
                return Err(Error::Composition(
                    "surgery charts disagree on the surface kind".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Degree-d map built from the complex power z -> (z/lambda)^d in
/// stereographic coordinates centred at `center`.
pub fn stereographic_power_map(d: i32, lambda: f64, center: Vec3) -> Result<AnalyticMap, Error> {
    if d == 0 {
        return Err(Error::Parameter(
            "degree 0 power map: use a Constant base instead".into(),
        ));
    }
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("scale {lambda} must be positive")));
    }
    let center = geom::normalize(center);
    Ok(AnalyticMap {
        base: BaseMap::StereographicPower {
            degree: d,
            scale: lambda,
            rotation: geom::rotation_to(center),
        },
        surgeries: Vec::new(),
    })
}

/// The discretized map: one unit vector in R^3 per mesh vertex.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexField {
    pub mesh_hash: String,
    pub values: Vec<Vec3>,
}

impl VertexField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks the field belongs to `mesh` and satisfies the unit-norm
    /// invariant.
    pub fn check_on(&self, mesh: &TriMesh) -> Result<(), Error> {
        if self.mesh_hash != mesh.content_hash() {
            return Err(Error::Parameter("field does not belong to this mesh".into()));
        }
        if self.values.len() != mesh.vertex_count() {
            return Err(Error::Parameter(format!(
                "field has {} values for {} vertices",
                self.values.len(),
                mesh.vertex_count()
            )));
        }
        for (i, v) in self.values.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) {
                return Err(Error::Numeric(format!("value {i} is not finite")));
            }
            if (geom::norm(*v) - 1.0).abs() > 1e-9 {
                return Err(Error::Numeric(format!("value {i} is off the unit sphere")));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("field serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Error> {
        let field: VertexField = serde_json::from_str(text)?;
        for (i, v) in field.values.iter().enumerate() {
            if !v.iter().all(|c| c.is_finite()) || (geom::norm(*v) - 1.0).abs() > 1e-9 {
                return Err(Error::Numeric(format!("value {i} violates the unit-norm invariant")));
            }
        }
        Ok(field)
    }
}

/// Samples an analytic map at every mesh vertex.
pub fn sample(map: &AnalyticMap, mesh: &TriMesh) -> Result<VertexField, Error> {
    if !map.compatible_with(mesh.kind) {
        return Err(Error::Composition(format!(
            "map requires {:?}, mesh is {:?}",
            map.required_kind(),
            mesh.kind
        )));
    }
    let values = parallel::map_indexed(mesh.vertex_count(), |i| {
        let v = map.eval(&mesh.point(i));
        debug_assert!((geom::norm(v) - 1.0).abs() < 1e-9, "non-unit map value {v:?}");
        geom::normalize(v)
    });
    for (i, v) in values.iter().enumerate() {
        if !v.iter().all(|c| c.is_finite()) {
            return Err(Error::Numeric(format!("map evaluated to a non-finite value at vertex {i}")));
        }
    }
    Ok(VertexField {
        mesh_hash: mesh.content_hash().to_string(),
        values,
    })
}

/// Integral L^p distance between two fields on the same mesh,
/// (sum_T area(T) * mean over T's vertices of chordal^p)^(1/p).
pub fn l_m_distance(a: &VertexField, b: &VertexField, mesh: &TriMesh, p: f64) -> Result<f64, Error> {
    if a.mesh_hash != b.mesh_hash || a.mesh_hash != mesh.content_hash() {
        return Err(Error::Parameter("fields live on different meshes".into()));
    }
    if !(p >= 1.0) {
        return Err(Error::Parameter(format!("exponent p = {p} must be >= 1")));
    }
    let mut acc = geom::KahanSum::new();
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mut m = 0.0;
        for &i in tri {
            m += geom::chord(a.values[i], b.values[i]).powf(p);
        }
        acc.add(mesh.areas()[t] * m / 3.0);
    }
    Ok(acc.total().powf(1.0 / p))
}

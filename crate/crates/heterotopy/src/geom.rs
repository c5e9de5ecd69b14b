//! Small fixed-size vector and rotation helpers used throughout the crate.
//!
//! Everything here works on plain `[f64; 3]` / `[f64; 2]` arrays; the crate
//! has no linear-algebra dependency.

pub type Vec3 = [f64; 3];
pub type Vec2 = [f64; 2];

pub fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn add(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub fn scale(a: Vec3, s: f64) -> Vec3 {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: Vec3) -> Vec3 {
    let n = norm(a);
    scale(a, 1.0 / n)
}

/// Chordal (ambient R^3) distance between two points.
pub fn chord(a: Vec3, b: Vec3) -> f64 {
    norm(sub(a, b))
}

/// Geodesic distance on the unit sphere.
pub fn sphere_dist(a: Vec3, b: Vec3) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

/// Angle-based triple product, stable for near-degenerate inputs.
pub fn triple(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    dot(a, cross(b, c))
}

/// A deterministic unit vector orthogonal to `a` (|a| = 1 assumed).
pub fn any_orthonormal(a: Vec3) -> Vec3 {
    // Pick the coordinate axis least aligned with `a`.
    let ax = a[0].abs();
    let ay = a[1].abs();
    let az = a[2].abs();
    let e = if ax <= ay && ax <= az {
        [1.0, 0.0, 0.0]
    } else if ay <= az {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    normalize(sub(e, scale(a, dot(e, a))))
}

/// Orthonormal frame (e1, e2) spanning the tangent plane at `a` on the sphere.
pub fn tangent_frame(a: Vec3) -> (Vec3, Vec3) {
    let e1 = any_orthonormal(a);
    let e2 = cross(a, e1);
    (e1, e2)
}

/// Rotation matrix (rows) sending the north pole (0,0,1) to `target`.
pub fn rotation_to(target: Vec3) -> [Vec3; 3] {
    let (e1, e2) = tangent_frame(target);
    // Columns are the images of the standard basis: e1, e2, target.
    [
        [e1[0], e2[0], target[0]],
        [e1[1], e2[1], target[1]],
        [e1[2], e2[2], target[2]],
    ]
}

pub fn mat_apply(m: &[Vec3; 3], v: Vec3) -> Vec3 {
    [dot(m[0], v), dot(m[1], v), dot(m[2], v)]
}

pub fn mat_transpose_apply(m: &[Vec3; 3], v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[1][0] * v[1] + m[2][0] * v[2],
        m[0][1] * v[0] + m[1][1] * v[1] + m[2][1] * v[2],
        m[0][2] * v[0] + m[1][2] * v[1] + m[2][2] * v[2],
    ]
}

/// Checks that the 3x3 matrix has orthonormal rows.
pub fn is_orthogonal(m: &[Vec3; 3], tol: f64) -> bool {
    for i in 0..3 {
        for j in 0..3 {
            let d = dot(m[i], m[j]);
            let want = if i == j { 1.0 } else { 0.0 };
            if (d - want).abs() > tol {
                return false;
            }
        }
    }
    true
}

/// Inverse stereographic projection with the convention 0 -> north pole,
/// infinity -> south pole.
pub fn stereo_to_sphere(w: Vec2) -> Vec3 {
    let r2 = w[0] * w[0] + w[1] * w[1];
    if !r2.is_finite() {
        return [0.0, 0.0, -1.0];
    }
    let d = 1.0 + r2;
    [2.0 * w[0] / d, 2.0 * w[1] / d, (1.0 - r2) / d]
}

/// Stereographic projection inverse to [`stereo_to_sphere`]; the south pole
/// maps to infinity and callers must handle `q[2]` near -1 themselves.
pub fn sphere_to_stereo(q: Vec3) -> Vec2 {
    let d = 1.0 + q[2];
    [q[0] / d, q[1] / d]
}

/// Complex power (x + iy)^k for integer k >= 1.
pub fn complex_pow(z: Vec2, k: u32) -> Vec2 {
    let mut out = [1.0, 0.0];
    for _ in 0..k {
        out = [out[0] * z[0] - out[1] * z[1], out[0] * z[1] + out[1] * z[0]];
    }
    out
}

/// Geodesic interpolation from `a` toward `b` on the unit sphere;
/// s = 0 gives `a`, s = 1 gives `b`. The endpoints must not be antipodal.
pub fn slerp(a: Vec3, b: Vec3, s: f64) -> Vec3 {
    let c = dot(a, b).clamp(-1.0, 1.0);
    let theta = c.acos();
    if theta < 1e-12 {
        return normalize(add(scale(a, 1.0 - s), scale(b, s)));
    }
    let sin_t = theta.sin();
    let wa = ((1.0 - s) * theta).sin() / sin_t;
    let wb = (s * theta).sin() / sin_t;
    normalize(add(scale(a, wa), scale(b, wb)))
}

/// Kahan compensated accumulator; summation order is fixed by the caller,
/// so totals do not depend on how work was chunked.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let y = value - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

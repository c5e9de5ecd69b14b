//! Numerical toolbox for Sobolev maps from closed surfaces into the
//! 2-sphere: discrete Dirichlet p-energy, Brouwer degree via oriented solid
//! angles, conformal surgery operators (opening, bubble insertion,
//! reflect-glue, concatenation, cylinder grafting), and the desk-scale
//! experiments built from them (energy-per-degree estimation, heterotopic
//! approximation sequences, bubbling detection).
//!
//! Domains are the unit icosphere and the unit-area flat torus; the target
//! is always the unit sphere S^2. All energies use the Frobenius norm of
//! the differential, so that the conformal energy quantum per unit of
//! degree is exactly 8*pi.

pub mod energy;
pub mod error;
pub mod experiments;
pub mod geom;
pub mod io;
pub mod map;
pub mod mesh;
pub mod parallel;
pub mod surgery;
pub mod topology;

pub use error::{Error, Result};
pub use mesh::{build_flat_torus, build_icosphere, make_chart, Chart, MeshKind, SurfacePoint, TriMesh};

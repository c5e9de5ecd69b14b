//! Run configuration and the small spec strings used by the command line:
//! mesh specs like `icosphere:6` / `torus:128`, map specs like `identity`,
//! `constant:x,y,z`, `stereo:d,scale[,cx,cy,cz]`, or `file:path`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::experiments::MinimizeConfig;
use crate::map::{stereographic_power_map, AnalyticMap};
use crate::mesh::{build_flat_torus, build_icosphere, TriMesh};

/// Configuration file for a run; command-line flags override any field.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mesh: Option<String>,
    pub map: Option<String>,
    pub map2: Option<String>,
    pub to_degree: Option<i64>,
    pub t_schedule: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub radii: Option<Vec<f64>>,
    pub minimize: Option<MinimizeConfig>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Error> {
        let cfg: RunConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if let Some(m) = &self.mesh {
            parse_mesh_spec_dims(m)?;
        }
        if let Some(m) = &self.map {
            validate_map_spec(m)?;
        }
        if let Some(m) = &self.map2 {
            validate_map_spec(m)?;
        }
        if let Some(ts) = &self.t_schedule {
            for w in ts.windows(2) {
                if !(w[1] < w[0]) {
                    return Err(Error::Parameter("t_schedule must be strictly decreasing".into()));
                }
            }
            if ts.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
                return Err(Error::Parameter("t_schedule values must lie in (0, 1)".into()));
            }
        }
        if let Some(e) = self.eta {
            if !(e > 0.0) {
                return Err(Error::Parameter("eta must be positive".into()));
            }
        }
        if let Some(m) = &self.minimize {
            m.validate()?;
        }
        Ok(())
    }
}

/// Parses `icosphere:<subdivisions>` or `torus:<n>` without building.
pub fn parse_mesh_spec_dims(spec: &str) -> Result<(String, u32), Error> {
    let (kind, num) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parameter(format!("mesh spec `{spec}`: expected kind:number")))?;
    let n: u32 = num
        .parse()
        .map_err(|_| Error::Parameter(format!("mesh spec `{spec}`: bad number `{num}`")))?;
    match kind {
        "icosphere" | "torus" => Ok((kind.to_string(), n)),
        _ => Err(Error::Parameter(format!(
            "mesh spec `{spec}`: kind must be icosphere or torus"
        ))),
    }
}

/// Builds the mesh named by a spec string.
pub fn parse_mesh_spec(spec: &str) -> Result<TriMesh, Error> {
    let (kind, n) = parse_mesh_spec_dims(spec)?;
    match kind.as_str() {
        "icosphere" => build_icosphere(n),
        _ => build_flat_torus(n),
    }
}

fn parse_floats(s: &str) -> Result<Vec<f64>, Error> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parameter(format!("bad number `{x}`")))
        })
        .collect()
}

fn validate_map_spec(spec: &str) -> Result<(), Error> {
    if let Some(path) = spec.strip_prefix("file:") {
        if !Path::new(path).exists() {
            return Err(Error::Parameter(format!("map file `{path}` does not exist")));
        }
        return Ok(());
    }
    parse_builtin_map(spec).map(|_| ())
}

fn parse_builtin_map(spec: &str) -> Result<AnalyticMap, Error> {
    if spec == "identity" {
        return Ok(AnalyticMap::identity_sphere());
    }
    if let Some(rest) = spec.strip_prefix("constant:") {
        let v = parse_floats(rest)?;
        if v.len() != 3 {
            return Err(Error::Parameter("constant map needs 3 coordinates".into()));
        }
        return Ok(AnalyticMap::constant([v[0], v[1], v[2]]));
    }
    if let Some(rest) = spec.strip_prefix("stereo:") {
        let v = parse_floats(rest)?;
        let (d, lambda) = match v.len() {
            2 | 5 => (v[0] as i32, v[1]),
            _ => {
                return Err(Error::Parameter(
                    "stereo map needs degree,scale or degree,scale,cx,cy,cz".into(),
                ))
            }
        };
        let center = if v.len() == 5 { [v[2], v[3], v[4]] } else { [0.0, 0.0, 1.0] };
        return stereographic_power_map(d, lambda, center);
    }
    Err(Error::Parameter(format!(
        "map spec `{spec}`: expected identity, constant:.., stereo:.., or file:path"
    )))
}

/// Builds or loads the analytic map named by a spec string.
pub fn parse_map_spec(spec: &str) -> Result<AnalyticMap, Error> {
    if let Some(path) = spec.strip_prefix("file:") {
        let text = std::fs::read_to_string(path)?;
        return AnalyticMap::from_json(&text);
    }
    parse_builtin_map(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_specs() {
        assert_eq!(parse_mesh_spec("icosphere:3").unwrap().triangle_count(), 1280);
        assert_eq!(parse_mesh_spec("torus:8").unwrap().vertex_count(), 64);
        assert!(parse_mesh_spec("cube:3").is_err());
        assert!(parse_mesh_spec("icosphere").is_err());
        assert!(parse_mesh_spec("icosphere:x").is_err());
    }

    #[test]
    fn map_specs() {
        assert!(parse_map_spec("identity").is_ok());
        assert!(parse_map_spec("constant:0,0,1").is_ok());
        assert!(parse_map_spec("stereo:2,0.5").is_ok());
        assert!(parse_map_spec("stereo:0,0.5").is_err());
        assert!(parse_map_spec("file:/nonexistent/map.json").is_err());
        assert!(parse_map_spec("nonsense").is_err());
    }

    #[test]
    fn config_round_trip_and_validation() {
        let text = r#"{
            "mesh": "icosphere:5",
            "map": "identity",
            "to_degree": 3,
            "t_schedule": [0.3, 0.2, 0.12],
            "seed": 7
        }"#;
        let cfg = RunConfig::from_json(text).unwrap();
        assert_eq!(cfg.to_degree, Some(3));

        let bad = r#"{"t_schedule": [0.1, 0.2]}"#;
        assert!(RunConfig::from_json(bad).is_err());
        let unknown = r#"{"mesh": "icosphere:5", "bogus": 1}"#;
        assert!(RunConfig::from_json(unknown).is_err());
    }
}

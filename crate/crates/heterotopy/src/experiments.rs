//! Desk-scale experiments: energy minimization in a fixed degree class,
//! minimal-energy-per-degree estimation, heterotopic approximation
//! sequences, and detection of energy concentration atoms.

use serde::{Deserialize, Serialize};

use crate::energy::{ball_energy, energy_gradient, p_energy, EnergyReport};
use crate::error::Error;
use crate::geom::{self, Vec3};
use crate::map::{l_m_distance, sample, AnalyticMap, VertexField};
use crate::mesh::{make_chart, surface_dist, Chart, MeshKind, SurfacePoint, TriMesh};
use crate::surgery::{insert_bubble, make_bubble, open_map};
use crate::topology::{brouwer_degree, etop_sphere, HomotopyClassZ};

/// Default energy-concentration threshold; far below the smallest quantum
/// 8*pi, far above discretization noise at the working resolutions.
pub const DEFAULT_ETA: f64 = 1.0;

/// Projected-gradient-descent settings.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MinimizeConfig {
    pub max_iters: usize,
    /// Initial trial step size.
    pub step: f64,
    /// Armijo sufficient-decrease constant in (0, 1).
    pub armijo_c: f64,
    /// Terminate when the projected gradient norm falls below this.
    pub grad_tol: f64,
    /// Stop as soon as the snapped degree changes.
    pub degree_guard: bool,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            max_iters: 300,
            step: 0.05,
            armijo_c: 1e-4,
            grad_tol: 1e-4,
            degree_guard: true,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if !(self.step > 0.0) {
            return Err(Error::Parameter("step must be positive".into()));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::Parameter("armijo_c must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TraceStep {
    pub iter: usize,
    pub energy: f64,
    pub degree_raw: f64,
    pub degree_snapped: i64,
    pub step_size: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum TerminalStatus {
    Converged,
    DegreeDropped { energy_lost: f64 },
    MaxIters,
}

/// Per-step record of a descent run. Energy is non-increasing across
/// accepted steps by construction.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentTrace {
    pub steps: Vec<TraceStep>,
    pub status: TerminalStatus,
}

fn grad_norm(grad: &[Vec3]) -> f64 {
    let mut s = geom::KahanSum::new();
    for g in grad {
        s.add(geom::dot(*g, *g));
    }
    s.total().sqrt()
}

/// Projected gradient descent with Armijo backtracking on the product of
/// unit spheres; vertex values are renormalized after every step.
///
/// With the degree guard on, a change of the snapped degree ends the run
/// with `DegreeDropped`. The collapse sheds energy over several steps, so
/// after the guard triggers the descent continues without the guard until
/// the energy plateaus; the reported loss is measured from the last state
/// whose degree report was still reliably the original class down to the
/// stabilized post-collapse state.
pub fn minimize_energy(
    field: &VertexField,
    mesh: &TriMesh,
    cfg: &MinimizeConfig,
) -> Result<(VertexField, ExperimentTrace), Error> {
    cfg.validate()?;
    field.check_on(mesh)?;
    let mut current = field.clone();
    let mut energy = p_energy(&current, mesh, 2.0)?.total;
    if !energy.is_finite() {
        return Err(Error::Numeric("non-finite starting energy".into()));
    }
    let deg0 = brouwer_degree(&current, mesh)?;
    let mut steps = vec![TraceStep {
        iter: 0,
        energy,
        degree_raw: deg0.raw,
        degree_snapped: deg0.snapped,
        step_size: 0.0,
    }];
    let mut trial_step = cfg.step;
    let mut status = TerminalStatus::MaxIters;
    // last energy seen while the degree was reliably the starting class
    let mut pre_drop_energy = energy;
    let mut dropped = false;
    let mut plateau_run = 0usize;

    for iter in 1..=cfg.max_iters {
        let grad = energy_gradient(&current, mesh, 2.0)?;
        let gnorm = grad_norm(&grad);
        if gnorm < cfg.grad_tol {
            status = if dropped {
                TerminalStatus::DegreeDropped {
                    energy_lost: pre_drop_energy - energy,
                }
            } else {
                TerminalStatus::Converged
            };
            break;
        }
        let gnorm_sq = gnorm * gnorm;
        let mut accepted = None;
        let mut s = trial_step;
        for _ in 0..60 {
            let candidate = VertexField {
                mesh_hash: current.mesh_hash.clone(),
                values: current
                    .values
                    .iter()
                    .zip(&grad)
                    .map(|(v, g)| geom::normalize(geom::sub(*v, geom::scale(*g, s))))
                    .collect(),
            };
            let e = p_energy(&candidate, mesh, 2.0)?.total;
            if !e.is_finite() {
                return Err(Error::Numeric("non-finite energy during descent".into()));
            }
            if e <= energy - cfg.armijo_c * s * gnorm_sq {
                accepted = Some((candidate, e, s));
                break;
            }
            s *= 0.5;
        }
        let Some((candidate, e, s)) = accepted else {
            status = if dropped {
                TerminalStatus::DegreeDropped {
                    energy_lost: pre_drop_energy - energy,
                }
            } else {
                TerminalStatus::Converged
            };
            break;
        };
        let decrease = energy - e;
        current = candidate;
        energy = e;
        trial_step = (s * 2.0).min(1.0);
        let deg = brouwer_degree(&current, mesh)?;
        steps.push(TraceStep {
            iter,
            energy,
            degree_raw: deg.raw,
            degree_snapped: deg.snapped,
            step_size: s,
        });
        if deg.reliable && deg.snapped == deg0.snapped {
            pre_drop_energy = energy;
        }
        if cfg.degree_guard && deg.snapped != deg0.snapped {
            dropped = true;
        }
        if dropped {
            // ride out the collapse until the energy settles
            plateau_run = if decrease < 1e-4 * (1.0 + energy) {
                plateau_run + 1
            } else {
                0
            };
            if plateau_run >= 3 {
                status = TerminalStatus::DegreeDropped {
                    energy_lost: pre_drop_energy - energy,
                };
                break;
            }
        }
    }
    if dropped && matches!(status, TerminalStatus::MaxIters) {
        status = TerminalStatus::DegreeDropped {
            energy_lost: pre_drop_energy - energy,
        };
    }

    Ok((current, ExperimentTrace { steps, status }))
}

/// Tetrahedral directions used to place up to four disjoint bubbles.
fn bubble_sites(count: usize) -> Vec<Vec3> {
    let dirs = [
        [1.0, 1.0, 1.0],
        [1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0],
        [-1.0, -1.0, 1.0],
    ];
    dirs.iter().take(count).map(|d| geom::normalize(*d)).collect()
}

/// Builds a degree-d concatenation of |d| unit bubbles over a constant
/// background and polishes it by degree-guarded descent; returns the final
/// energy, which approximates the minimal energy 8*pi*|d| of the class.
///
/// If the degree drops during polishing the construction is retried once
/// with wider bubbles before reporting failure.
pub fn estimate_etop(d: i64, resolution: u32) -> Result<f64, Error> {
    if d.unsigned_abs() > 4 {
        return Err(Error::Parameter(format!("|degree| = {} exceeds 4", d.unsigned_abs())));
    }
    if resolution > 7 {
        return Err(Error::Parameter(format!("resolution {resolution} exceeds 7")));
    }
    if d == 0 {
        return Ok(0.0);
    }
    let mesh = crate::mesh::build_icosphere(resolution)?;
    let boundary = [0.0, 0.0, -1.0];
    let sign = d.signum() as i32;
    let count = d.unsigned_abs() as usize;

    let run = |scale: f64| -> Result<(f64, TerminalStatus), Error> {
        let mut map = AnalyticMap::constant(boundary);
        for site in bubble_sites(count) {
            let chart = make_chart(SurfacePoint::Sphere(site), 0.7)?;
            let bubble = make_bubble(sign, scale, boundary)?;
            map = insert_bubble(&map, &chart, bubble, 0.9)?;
        }
        let field = sample(&map, &mesh)?;
        let cfg = MinimizeConfig {
            max_iters: 250,
            ..MinimizeConfig::default()
        };
        let (_, trace) = minimize_energy(&field, &mesh, &cfg)?;
        let final_energy = trace.steps.last().expect("trace nonempty").energy;
        Ok((final_energy, trace.status))
    };

    let (energy, status) = run(0.2)?;
    if !matches!(status, TerminalStatus::DegreeDropped { .. }) {
        return Ok(energy);
    }
    let (energy, status) = run(0.35)?;
    if matches!(status, TerminalStatus::DegreeDropped { .. }) {
        return Err(Error::Numeric(
            "degree dropped during polishing even with wider bubbles".into(),
        ));
    }
    Ok(energy)
}

/// One record of a heterotopic approximation sequence.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct HetRecord {
    pub t: f64,
    pub energy: f64,
    pub degree_raw: f64,
    pub degree: i64,
    pub distance: f64,
    pub flagged: bool,
}

/// Sequence report: per-t records plus the fitted limit.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HetReport {
    pub records: Vec<HetRecord>,
    /// Intercept of the least-squares line through the unflagged
    /// (t, energy) records: the t -> 0 energy limit.
    pub fitted_limit: f64,
    /// E(u) + 8*pi*|target - deg u| assembled from the discrete base
    /// energy and the closed-form class energy.
    pub target_constant: f64,
    pub base_energy: f64,
    pub base_degree: i64,
    pub target_degree: i64,
}

impl HetReport {
    pub fn any_flagged(&self) -> bool {
        self.records.iter().any(|r| r.flagged)
    }
}

/// Settings for [`heterotopic_sequence`].
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct HetConfig {
    /// Chart holding the surgery; defaults to a large chart at the north
    /// pole (sphere) or the center of the fundamental domain (torus).
    pub chart: Option<Chart>,
    /// Concentration scale of the grafted bubble, as a fraction of its
    /// disk; smaller is closer to the energy quantum but needs a finer
    /// mesh.
    pub bubble_scale: Option<f64>,
}

fn default_chart(kind: MeshKind) -> Result<Chart, Error> {
    match kind {
        MeshKind::Sphere => make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.95),
        MeshKind::FlatTorus => make_chart(SurfacePoint::Torus([0.5, 0.5]), 0.24),
    }
}

/// Builds the competitor v_t for each t in the schedule: open u at scale t
/// in the chart, then graft a bubble of degree (target - deg u) at scale
/// t. Reports energy, degree, and distance to u per record; records whose
/// bubble is resolved by fewer than three mesh edge lengths are flagged
/// and excluded from the fitted limit.
pub fn heterotopic_sequence(
    u: &AnalyticMap,
    mesh: &TriMesh,
    target_degree: i64,
    t_schedule: &[f64],
    cfg: &HetConfig,
) -> Result<HetReport, Error> {
    if t_schedule.is_empty() {
        return Err(Error::Parameter("empty t schedule".into()));
    }
    for w in t_schedule.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Parameter("t schedule must be strictly decreasing".into()));
        }
    }
    if !(t_schedule[0] < 1.0 && *t_schedule.last().unwrap() > 0.0) {
        return Err(Error::Parameter("t schedule must lie in (0, 1)".into()));
    }
    let chart = match &cfg.chart {
        Some(c) => c.clone(),
        None => default_chart(mesh.kind)?,
    };
    if chart.kind() != mesh.kind {
        return Err(Error::Composition("chart and mesh surface kinds differ".into()));
    }

    let u_field = sample(u, mesh)?;
    let u_report = brouwer_degree(&u_field, mesh)?;
    let base_degree = HomotopyClassZ::try_from(u_report)?.degree;
    let base_energy = p_energy(&u_field, mesh, 2.0)?.total;
    let delta = target_degree - base_degree;
    let h = mesh.mean_edge_length();

    let lambda = cfg
        .bubble_scale
        .unwrap_or(if delta.unsigned_abs() >= 2 { 0.2 } else { 0.12 });

    let mut records = Vec::with_capacity(t_schedule.len());
    for &t in t_schedule {
        let opened = open_map(u, &chart, t)?;
        let v_t = if delta == 0 {
            opened
        } else {
            let b = u.eval(&chart.center);
            let bubble = make_bubble(delta as i32, lambda, b)?;
            insert_bubble(&opened, &chart, bubble, t)?
        };
        let field = sample(&v_t, mesh)?;
        let report = p_energy(&field, mesh, 2.0)?;
        let deg = brouwer_degree(&field, mesh)?;
        let distance = l_m_distance(&field, &u_field, mesh, 2.0)?;
        // concentration scale of the grafted bubble on the surface
        let bubble_extent = lambda * t * chart.radius;
        let flagged = (delta != 0 && bubble_extent < 3.0 * h) || !deg.reliable;
        records.push(HetRecord {
            t,
            energy: report.total,
            degree_raw: deg.raw,
            degree: deg.snapped,
            distance,
            flagged,
        });
    }

    // least-squares line through the unflagged records
    let good: Vec<&HetRecord> = records.iter().filter(|r| !r.flagged).collect();
    let fitted_limit = match good.len() {
        0 => records.last().unwrap().energy,
        1 => good[0].energy,
        _ => {
            let n = good.len() as f64;
            let st: f64 = good.iter().map(|r| r.t).sum();
            let se: f64 = good.iter().map(|r| r.energy).sum();
            let stt: f64 = good.iter().map(|r| r.t * r.t).sum();
            let ste: f64 = good.iter().map(|r| r.t * r.energy).sum();
            let denom = n * stt - st * st;
            let slope = (n * ste - st * se) / denom;
            (se - slope * st) / n
        }
    };

    Ok(HetReport {
        records,
        fitted_limit,
        target_constant: base_energy + etop_sphere(HomotopyClassZ::from_degree(delta)),
        base_energy,
        base_degree,
        target_degree,
    })
}

/// A detected energy concentration point.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConcentrationAtom {
    pub location: SurfacePoint,
    /// Ball energy of the most concentrated family member at
    /// `radius_used`.
    pub mass: f64,
    /// Degree of the first family member minus the degree after replacing
    /// the ball by a constant in the last member.
    pub degree_defect: i64,
    pub radius_used: f64,
    /// Whether the mass reaches the 8*pi*|defect| floor of its class,
    /// within 5%; false signals an under-resolved atom.
    pub certified: bool,
}

/// Result of [`detect_bubbling`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BubblingReport {
    pub atoms: Vec<ConcentrationAtom>,
    /// Candidate maxima suppressed for being within 2*r of a stronger
    /// atom.
    pub merged: usize,
}

/// Detects concentration atoms of a family of fields ordered by
/// concentration parameter: greedily selects ball-energy maxima of the
/// last member exceeding eta at the smallest radius, suppresses non-maxima
/// within twice that radius, and computes each atom's degree defect by
/// constant replacement. Each topological atom is certified against the
/// 8*pi*|defect| energy floor of its class, within 5%.
pub fn detect_bubbling(
    family: &[VertexField],
    mesh: &TriMesh,
    eta: f64,
    radii: &[f64],
) -> Result<BubblingReport, Error> {
    if family.is_empty() {
        return Err(Error::Parameter("empty family".into()));
    }
    if radii.is_empty() {
        return Err(Error::Parameter("empty radius list".into()));
    }
    for w in radii.windows(2) {
        if !(w[1] < w[0]) {
            return Err(Error::Parameter("radii must be strictly decreasing".into()));
        }
    }
    if !(eta > 0.0) {
        return Err(Error::Parameter("eta must be positive".into()));
    }
    for f in family {
        f.check_on(mesh)?;
    }
    let first = &family[0];
    let last = family.last().unwrap();
    let report = p_energy(last, mesh, 2.0)?;
    let r_min = *radii.last().unwrap();

    // candidate centers: barycenters of the highest-mass triangles
    let mut order: Vec<usize> = (0..mesh.triangle_count()).collect();
    order.sort_by(|&a, &b| {
        report.per_triangle[b]
            .partial_cmp(&report.per_triangle[a])
            .unwrap()
            .then(a.cmp(&b))
    });
    let candidates: Vec<SurfacePoint> = order.iter().take(64).map(|&t| mesh.barycenter(t)).collect();

    let mut scored: Vec<(SurfacePoint, f64)> = candidates
        .into_iter()
        .map(|c| {
            let m = ball_energy_at(&report, mesh, &c, r_min);
            (c, m)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());

    let mut centers: Vec<(SurfacePoint, f64)> = Vec::new();
    let mut merged = 0usize;
    for (c, m) in scored {
        if m < eta {
            break;
        }
        if centers.iter().any(|(a, _)| surface_dist(a, &c) < 2.0 * r_min) {
            merged += 1;
            continue;
        }
        centers.push((c, m));
    }

    let deg_first = brouwer_degree(first, mesh)?.snapped;
    let mut atoms = Vec::with_capacity(centers.len());
    for (center, mass) in centers {
        let replaced = replace_ball_by_constant(last, mesh, &center, r_min);
        let deg_replaced = brouwer_degree(&replaced, mesh)?.snapped;
        let defect = deg_first - deg_replaced;
        let certified =
            defect == 0 || mass >= 0.95 * etop_sphere(HomotopyClassZ::from_degree(defect));
        atoms.push(ConcentrationAtom {
            location: center,
            mass,
            degree_defect: defect,
            radius_used: r_min,
            certified,
        });
    }
    Ok(BubblingReport { atoms, merged })
}

fn ball_energy_at(report: &EnergyReport, mesh: &TriMesh, center: &SurfacePoint, r: f64) -> f64 {
    let mut sum = geom::KahanSum::new();
    for t in 0..mesh.triangle_count() {
        if surface_dist(center, &mesh.barycenter(t)) < r {
            sum.add(report.per_triangle[t]);
        }
    }
    sum.total()
}

/// Replaces the values inside B_r(center) by the mean value on the shell
/// just outside the ball.
fn replace_ball_by_constant(
    field: &VertexField,
    mesh: &TriMesh,
    center: &SurfacePoint,
    r: f64,
) -> VertexField {
    let mut shell = [0.0f64; 3];
    let mut count = 0usize;
    for i in 0..mesh.vertex_count() {
        let d = surface_dist(center, &mesh.point(i));
        if d >= r && d < 1.5 * r {
            shell = geom::add(shell, field.values[i]);
            count += 1;
        }
    }
    let fill = if count > 0 && geom::norm(shell) > 1e-9 {
        geom::normalize(shell)
    } else {
        [0.0, 0.0, 1.0]
    };
    VertexField {
        mesh_hash: field.mesh_hash.clone(),
        values: (0..mesh.vertex_count())
            .map(|i| {
                if surface_dist(center, &mesh.point(i)) < r {
                    fill
                } else {
                    field.values[i]
                }
            })
            .collect(),
    }
}

/// Perturbs a field by seeded tangent noise of the given amplitude; the
/// seed makes experiment runs reproducible.
pub fn perturb_field(field: &VertexField, amplitude: f64, seed: u64) -> VertexField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    VertexField {
        mesh_hash: field.mesh_hash.clone(),
        values: field
            .values
            .iter()
            .map(|v| {
                let w = [
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                ];
                let t = geom::sub(w, geom::scale(*v, geom::dot(w, *v)));
                let n = geom::norm(t);
                if n < 1e-12 {
                    *v
                } else {
                    geom::normalize(geom::add(*v, geom::scale(t, amplitude / n)))
                }
            })
            .collect(),
    }
}

/// Ball-energy reading bound to a chart (precondition r <= chart radius).
pub fn chart_ball_energy(
    report: &EnergyReport,
    mesh: &TriMesh,
    chart: &Chart,
    r: f64,
) -> Result<f64, Error> {
    if r > chart.radius {
        return Err(Error::Parameter(format!(
            "ball radius {r} exceeds the chart radius {}",
            chart.radius
        )));
    }
    ball_energy(report, mesh, chart, r)
}

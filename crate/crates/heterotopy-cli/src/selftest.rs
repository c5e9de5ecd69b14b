//! The built-in invariant suite behind `heterotopy selftest`.
//!
//! Groups mirror the library's contracts: mesh combinatorics, chart round
//! trips, energy identities, degree integrality, the pointwise 2|J| <=
//! |Df|^2 bound, surgery locality and additivity, and thread-count
//! determinism. Each group reports how many assertions it executed.

use serde::Serialize;

use heterotopy::energy::{ball_energy, energy_gradient, p_energy};
use heterotopy::experiments::perturb_field;
use heterotopy::geom;
use heterotopy::map::{l_m_distance, sample, stereographic_power_map, AnalyticMap, VertexField};
use heterotopy::mesh::{build_flat_torus, build_icosphere, make_chart, SurfacePoint};
use heterotopy::surgery::{
    concatenate, cylinder_homotopy, disk_band_energy, disk_degree, disk_energy, graft_two_disks,
    insert_bubble, make_bubble, open_map, reflect_glue, BoundaryFamily, DiskGrid, DiskMap,
};
use heterotopy::topology::{brouwer_degree, check_amgm_bound, etop_sphere, HomotopyClassZ};

const PI: f64 = std::f64::consts::PI;

/// Result of one invariant group.
#[derive(Serialize)]
pub struct GroupResult {
    pub name: String,
    pub passed: bool,
    pub assertions: usize,
    pub detail: String,
}

#[derive(Serialize)]
pub struct SelftestReport {
    pub groups: Vec<GroupResult>,
    pub total_assertions: usize,
    pub all_passed: bool,
}

struct Check {
    count: usize,
    failure: Option<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            count: 0,
            failure: None,
        }
    }

    fn that(&mut self, cond: bool, msg: impl Fn() -> String) {
        self.count += 1;
        if !cond && self.failure.is_none() {
            self.failure = Some(msg());
        }
    }

    fn close(&mut self, got: f64, want: f64, tol: f64, what: &str) {
        self.that((got - want).abs() <= tol, || {
            format!("{what}: got {got}, want {want} within {tol}")
        });
    }
}

fn run_group(name: &str, body: impl Fn(&mut Check)) -> GroupResult {
    let mut c = Check::new();
    body(&mut c);
    GroupResult {
        name: name.to_string(),
        passed: c.failure.is_none(),
        assertions: c.count,
        detail: c.failure.clone().unwrap_or_else(|| "ok".to_string()),
    }
}

pub fn run_selftest() -> SelftestReport {
    let mut groups = Vec::new();

    groups.push(run_group("mesh invariants", |c| {
        for s in 0..=4u32 {
            let m = build_icosphere(s).unwrap();
            c.that(m.validate().is_ok(), || format!("icosphere({s}) invariants"));
            let f = 20 * 4usize.pow(s);
            c.that(m.triangle_count() == f, || format!("icosphere({s}) F"));
            c.that(m.vertex_count() == 2 + f / 2, || format!("icosphere({s}) V"));
            c.that(m.euler_characteristic() == 2, || format!("icosphere({s}) chi"));
        }
        let mut last_area = 0.0;
        for s in 0..=4u32 {
            let a = build_icosphere(s).unwrap().total_area();
            c.that(a > last_area && a < 4.0 * PI, || format!("area monotone at {s}"));
            last_area = a;
        }
        for n in [2u32, 16, 64] {
            let m = build_flat_torus(n).unwrap();
            c.that(m.validate().is_ok(), || format!("torus({n}) invariants"));
            c.that(m.euler_characteristic() == 0, || format!("torus({n}) chi"));
            c.close(m.total_area(), 1.0, 1e-12, "torus area");
        }
    }));

    groups.push(run_group("chart round trips", |c| {
        let charts = [
            make_chart(SurfacePoint::Sphere(geom::normalize([0.2, -0.4, 0.89])), 0.9).unwrap(),
            make_chart(SurfacePoint::Torus([0.3, 0.8]), 0.2).unwrap(),
        ];
        for chart in &charts {
            for k in 0..500 {
                let r = chart.radius * (0.002 * (k % 500) as f64).min(0.999);
                let th = 0.013 * k as f64;
                let x = [r * th.cos(), r * th.sin()];
                let p = chart.inverse(x);
                let y = chart.forward(&p);
                let err = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
                c.that(err < 1e-12, || format!("round trip error {err}"));
            }
        }
    }));

    groups.push(run_group("sampling and distance", |c| {
        let mesh = build_icosphere(3).unwrap();
        let maps = [
            AnalyticMap::identity_sphere(),
            stereographic_power_map(2, 0.5, [0.1, 0.1, 0.99]).unwrap(),
            stereographic_power_map(-1, 1.0, [0.0, 1.0, 0.0]).unwrap(),
        ];
        for m in &maps {
            let f = sample(m, &mesh).unwrap();
            c.that(f.check_on(&mesh).is_ok(), || "unit-norm invariant".into());
        }
        let a = sample(&maps[0], &mesh).unwrap();
        let b = sample(&maps[1], &mesh).unwrap();
        let d0 = l_m_distance(&a, &a, &mesh, 2.0).unwrap();
        c.that(d0 < 1e-15, || format!("self distance {d0}"));
        let dab = l_m_distance(&a, &b, &mesh, 2.0).unwrap();
        let dba = l_m_distance(&b, &a, &mesh, 2.0).unwrap();
        c.close(dab, dba, 1e-12, "symmetry");
        let t = sample(&maps[2], &mesh).unwrap();
        let dat = l_m_distance(&a, &t, &mesh, 2.0).unwrap();
        let dbt = l_m_distance(&b, &t, &mesh, 2.0).unwrap();
        c.that(dat <= dab + dbt + 1e-9, || "triangle inequality".into());
    }));

    groups.push(run_group("energy identities", |c| {
        let mesh = build_icosphere(4).unwrap();
        let id = sample(&AnalyticMap::identity_sphere(), &mesh).unwrap();
        let r = p_energy(&id, &mesh, 2.0).unwrap();
        let rel = r.total / (8.0 * PI);
        c.that((0.985..=1.0001).contains(&rel), || format!("identity energy ratio {rel}"));
        let naive: f64 = r.per_triangle.iter().sum();
        c.that((naive - r.total).abs() / r.total < 1e-9, || "total vs parts".into());
        c.that(r.per_triangle.iter().all(|&m| m >= 0.0), || "nonnegative masses".into());

        let constant = sample(&AnalyticMap::constant([0.0, 1.0, 0.0]), &mesh).unwrap();
        c.close(p_energy(&constant, &mesh, 2.0).unwrap().total, 0.0, 1e-18, "constant energy");

        // rotation invariance, exact
        let rot = geom::rotation_to(geom::normalize([0.5, 0.5, 0.7]));
        let rotated = VertexField {
            mesh_hash: id.mesh_hash.clone(),
            values: id.values.iter().map(|v| geom::mat_apply(&rot, *v)).collect(),
        };
        let e1 = p_energy(&rotated, &mesh, 2.0).unwrap().total;
        c.that((e1 - r.total).abs() <= 1e-12 * r.total, || "rotation invariance".into());

        // hemisphere ball energy
        let chart = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.9).unwrap();
        let hemi = ball_energy(&r, &mesh, &chart, PI / 2.0).unwrap();
        c.that((hemi - 4.0 * PI).abs() / (4.0 * PI) < 0.03, || format!("hemisphere energy {hemi}"));
    }));

    groups.push(run_group("gradient checks", |c| {
        let mesh = build_icosphere(2).unwrap();
        let id = sample(&AnalyticMap::identity_sphere(), &mesh).unwrap();
        for trial in 0..6 {
            let f = perturb_field(&id, 0.25, 900 + trial);
            let grad = energy_gradient(&f, &mesh, 2.0).unwrap();
            for dir_seed in 0..2 {
                let probe = perturb_field(&f, 1.0, 7000 + dir_seed);
                let dir: Vec<[f64; 3]> = f
                    .values
                    .iter()
                    .zip(&probe.values)
                    .map(|(v, w)| geom::sub(*w, geom::scale(*v, geom::dot(*w, *v))))
                    .collect();
                let h = 1e-5;
                let energy_at = |s: f64| {
                    let shifted = VertexField {
                        mesh_hash: f.mesh_hash.clone(),
                        values: f
                            .values
                            .iter()
                            .zip(&dir)
                            .map(|(v, d)| geom::add(*v, geom::scale(*d, s)))
                            .collect(),
                    };
                    let mut total = 0.0;
                    for t in 0..mesh.triangle_count() {
                        let d =
                            heterotopy::energy::mesh_triangle_differential(&mesh, &shifted, t)
                                .unwrap();
                        total += d.area * d.frobenius_sq();
                    }
                    total
                };
                let num = (energy_at(h) - energy_at(-h)) / (2.0 * h);
                let ana: f64 = grad.iter().zip(&dir).map(|(g, d)| geom::dot(*g, *d)).sum();
                c.that((num - ana).abs() / num.abs().max(1e-12) < 1e-5, || {
                    format!("fd mismatch {num} vs {ana}")
                });
            }
        }
    }));

    groups.push(run_group("degree and bound", |c| {
        let mesh = build_icosphere(4).unwrap();
        let id = sample(&AnalyticMap::identity_sphere(), &mesh).unwrap();
        let d = brouwer_degree(&id, &mesh).unwrap();
        c.that(d.snapped == 1 && d.residual < 1e-9, || format!("identity degree {}", d.raw));
        for (deg, lambda) in [(2i32, 0.5), (-1, 1.0), (3, 0.7)] {
            let f = sample(&stereographic_power_map(deg, lambda, [0.3, 0.1, 0.95]).unwrap(), &mesh)
                .unwrap();
            let r = brouwer_degree(&f, &mesh).unwrap();
            c.that(r.snapped == deg as i64 && r.reliable, || {
                format!("power degree {deg}: raw {}", r.raw)
            });
            let (ok, slack) = check_amgm_bound(&f, &mesh).unwrap();
            c.that(ok, || format!("pointwise bound slack {slack}"));
            let e = p_energy(&f, &mesh, 2.0).unwrap().total;
            let floor = etop_sphere(HomotopyClassZ::from_degree(deg as i64));
            c.that(e >= floor * 0.99, || format!("energy {e} under the degree floor {floor}"));
        }
        for dd in -4i64..=4 {
            let cls = HomotopyClassZ::from_degree(dd);
            c.close(
                etop_sphere(cls),
                8.0 * PI * dd.unsigned_abs() as f64,
                1e-12,
                "closed form",
            );
            c.close(
                etop_sphere(HomotopyClassZ::from_degree(-dd)),
                etop_sphere(cls),
                0.0,
                "sign symmetry",
            );
        }
    }));

    groups.push(run_group("surgery locality and additivity", |c| {
        let mesh = build_icosphere(5).unwrap();
        let chart = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.8).unwrap();
        let base = AnalyticMap::identity_sphere();
        let base_field = sample(&base, &mesh).unwrap();

        // opening: locality and energy convergence
        let mut last_gap = f64::INFINITY;
        let e_base = p_energy(&base_field, &mesh, 2.0).unwrap().total;
        for r in [0.3, 0.15, 0.075] {
            let opened = open_map(&base, &chart, r).unwrap();
            let f = sample(&opened, &mesh).unwrap();
            c.that(
                heterotopy::surgery::equals_outside_chart(&f, &base_field, &mesh, &chart),
                || "opening locality".into(),
            );
            let gap = (p_energy(&f, &mesh, 2.0).unwrap().total - e_base).abs();
            c.that(gap < last_gap, || "opening gap decreases".into());
            last_gap = gap;
        }
        c.that(last_gap < 0.01 * e_base, || format!("final opening gap {last_gap}"));

        // insertion: locality, degree additivity
        let opened = open_map(&base, &chart, 0.3).unwrap();
        let bubble = make_bubble(1, 0.3, [0.0, 0.0, 1.0]).unwrap();
        let inserted = insert_bubble(&opened, &chart, bubble, 0.3).unwrap();
        let f = sample(&inserted, &mesh).unwrap();
        let opened_field = sample(&opened, &mesh).unwrap();
        c.that(
            heterotopy::surgery::equals_outside_chart(&f, &opened_field, &mesh, &chart),
            || "insertion locality".into(),
        );
        c.that(brouwer_degree(&f, &mesh).unwrap().snapped == 2, || "degree 1 + 1".into());

        // concatenation on the torus: exact degree and tight energy sum
        let tmesh = build_flat_torus(128).unwrap();
        let b = [0.0, 0.0, 1.0];
        let f1 = make_bubble(1, 0.25, b).unwrap();
        let f2 = make_bubble(-1, 0.25, b).unwrap();
        let c1 = make_chart(SurfacePoint::Torus([0.25, 0.25]), 0.24).unwrap();
        let c2 = make_chart(SurfacePoint::Torus([0.75, 0.75]), 0.24).unwrap();
        let h = concatenate(&f1, &f2, (&c1, &c2)).unwrap();
        let hf = sample(&h, &tmesh).unwrap();
        c.that(brouwer_degree(&hf, &tmesh).unwrap().snapped == 0, || "deg +1 -1".into());
        let grid = DiskGrid::polar(260);
        let sum = disk_energy(&f1, &grid) + disk_energy(&f2, &grid);
        let eh = p_energy(&hf, &tmesh, 2.0).unwrap().total;
        c.that((eh - sum).abs() < 0.01 * sum, || format!("concat energy {eh} vs {sum}"));

        // reflect-glue: degree bookkeeping and energy additivity
        let opened8 = open_map(&base, &chart, 0.35).unwrap();
        let w = reflect_glue(&opened8, &opened8, &chart, 0.3).unwrap();
        c.that(disk_degree(&w, &grid) == 0, || "reflect-glue degree".into());
        let e_w = disk_energy(&w, &grid);
        let e_u = disk_energy(
            &DiskMap::Restriction {
                map: Box::new(opened8.clone()),
                chart: chart.clone(),
            },
            &grid,
        );
        c.that((e_w - 2.0 * e_u).abs() < 0.01 * 2.0 * e_u, || {
            format!("reflect-glue energy {e_w} vs {}", 2.0 * e_u)
        });

        // two-disk graft: energy identity with the annulus copy doubled
        let u0 = DiskMap::Restriction {
            map: Box::new(base.clone()),
            chart: chart.clone(),
        };
        let fine = DiskGrid::polar(500);
        let grafted = graft_two_disks(&u0, &u0, 0.3).unwrap();
        let lhs = disk_energy(&grafted, &fine);
        let rhs = 2.0 * disk_band_energy(&u0, &fine, 0.3, f64::INFINITY) + disk_energy(&u0, &fine);
        c.that((lhs - rhs).abs() < 0.01 * rhs, || format!("graft identity {lhs} vs {rhs}"));

        // cylinder: exactness at s = 1 and boundary traces
        let core = make_bubble(1, 0.3, b).unwrap();
        let family = BoundaryFamily::Rotating {
            of: Box::new(core.clone()),
            axis: [0.0, 0.0, 1.0],
            angle: 0.9,
        };
        let w1 = cylinder_homotopy(&family, &core, 1.0).unwrap();
        for z in [[0.0, 0.0], [0.5, 0.3], [0.9, -0.2]] {
            c.that(geom::chord(w1.eval(z), core.eval(z)) < 1e-12, || "cylinder s=1".into());
        }
        let ws = cylinder_homotopy(&family, &core, 0.25).unwrap();
        for k in 0..16 {
            let th = std::f64::consts::TAU * k as f64 / 16.0;
            let dir = [th.cos(), th.sin()];
            c.that(
                geom::chord(ws.eval(dir), family.eval(0.25, dir)) < 1e-10,
                || "cylinder boundary trace".into(),
            );
        }
    }));

    groups.push(run_group("descent monotonicity", |c| {
        let mesh = build_icosphere(3).unwrap();
        let id = sample(&AnalyticMap::identity_sphere(), &mesh).unwrap();
        let noisy = perturb_field(&id, 0.1, 12345);
        let cfg = heterotopy::experiments::MinimizeConfig {
            max_iters: 80,
            ..Default::default()
        };
        let (_, trace) = heterotopy::experiments::minimize_energy(&noisy, &mesh, &cfg).unwrap();
        for w in trace.steps.windows(2) {
            c.that(w[1].energy <= w[0].energy + 1e-12, || "energy non-increasing".into());
        }
        c.that(trace.steps.last().unwrap().degree_snapped == 1, || "degree conserved".into());
    }));

    groups.push(run_group("thread determinism", |c| {
        let mesh = build_icosphere(4).unwrap();
        let map = stereographic_power_map(2, 0.4, [0.2, -0.1, 0.97]).unwrap();
        let mut reference: Option<(Vec<u64>, u64, u64)> = None;
        for threads in [1usize, 3, 8] {
            heterotopy::parallel::set_threads(threads);
            let f = sample(&map, &mesh).unwrap();
            let bits: Vec<u64> = f.values.iter().map(|v| v[0].to_bits() ^ v[1].to_bits() ^ v[2].to_bits()).collect();
            let e = p_energy(&f, &mesh, 2.0).unwrap().total.to_bits();
            let d = brouwer_degree(&f, &mesh).unwrap().raw.to_bits();
            match &reference {
                None => reference = Some((bits, e, d)),
                Some((b0, e0, d0)) => {
                    c.that(&bits == b0, || format!("values differ at {threads} threads"));
                    c.that(e == *e0, || format!("energy differs at {threads} threads"));
                    c.that(d == *d0, || format!("degree differs at {threads} threads"));
                }
            }
        }
        heterotopy::parallel::set_threads(1);
    }));

    let total_assertions = groups.iter().map(|g| g.assertions).sum();
    let all_passed = groups.iter().all(|g| g.passed);
    SelftestReport {
        groups,
        total_assertions,
        all_passed,
    }
}

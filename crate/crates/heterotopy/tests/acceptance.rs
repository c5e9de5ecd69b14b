//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured numbers. Criterion 10 (byte-identical CLI reports
//! across thread counts) lives in the CLI crate's integration tests.

use std::time::Instant;

use heterotopy::energy::{energy_gradient, mesh_triangle_differential, p_energy};
use heterotopy::experiments::{
    detect_bubbling, estimate_etop, heterotopic_sequence, perturb_field, HetConfig,
};
use heterotopy::geom;
use heterotopy::map::{sample, stereographic_power_map, AnalyticMap, VertexField};
use heterotopy::mesh::{build_flat_torus, build_icosphere, make_chart, SurfacePoint, TriMesh};
use heterotopy::surgery::{
    concatenate, disk_band_energy, disk_energy, graft_two_disks, insert_bubble, make_bubble,
    open_map, reflect_glue, DiskGrid, DiskMap,
};
use heterotopy::topology::{brouwer_degree, check_amgm_bound, etop_sphere, HomotopyClassZ};

const PI: f64 = std::f64::consts::PI;
const EIGHT_PI: f64 = 8.0 * std::f64::consts::PI;

/// Lower-bound chain required of every field the suite produces:
/// the pointwise 2|J| <= |Df|^2 bound to 1e-9, and the energy floor
/// 8*pi*|deg| <= E + 1% whenever the degree report is reliable.
fn chain_check(field: &VertexField, mesh: &TriMesh, what: &str) {
    let (ok, slack) = check_amgm_bound(field, mesh).unwrap();
    assert!(ok, "{what}: pointwise bound violated, slack {slack}");
    let report = brouwer_degree(field, mesh).unwrap();
    if report.reliable {
        let e = p_energy(field, mesh, 2.0).unwrap().total;
        let floor = etop_sphere(HomotopyClassZ::from_degree(report.snapped));
        assert!(
            floor <= e * 1.01 + 1e-9,
            "{what}: energy {e} below the degree floor {floor}"
        );
    }
}

#[test]
fn criterion_1_energy_quantum() {
    let t0 = Instant::now();
    let mesh = build_icosphere(5).unwrap();
    let field = sample(&AnalyticMap::identity_sphere(), &mesh).unwrap();
    let energy = p_energy(&field, &mesh, 2.0).unwrap().total;
    chain_check(&field, &mesh, "identity icosphere(5)");
    let ratio = energy / EIGHT_PI;
    // |D id|^2 = 2 on a surface, so the exact integral is 2 * 4*pi; the
    // piecewise-flat sample approximates it from below
    assert!(
        (0.99..=1.0).contains(&ratio),
        "identity energy ratio {ratio}"
    );
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 5.0, "criterion 1 took {elapsed:.1?}");
    println!("criterion 1: PASS - identity energy {energy:.4} = {ratio:.5} * 8pi in {elapsed:.1?}");
}

#[test]
fn criterion_2_etop_reproduction() {
    let t0 = Instant::now();
    let mut lines = Vec::new();
    for d in [1i64, 2, 3] {
        let e = estimate_etop(d, 6).unwrap();
        let target = EIGHT_PI * d as f64;
        let rel = (e - target) / target;
        assert!(rel.abs() < 0.03, "estimate_etop({d}) = {e}, rel {rel}");
        lines.push(format!("d={d}: {e:.3} ({rel:+.4})"));
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "criterion 2 took {elapsed:.1?}");
    println!("criterion 2: PASS - {} in {elapsed:.1?}", lines.join(", "));
}

#[test]
fn criterion_3_heterotopic_identity() {
    let t0 = Instant::now();
    let mesh = build_icosphere(6).unwrap();
    let u = AnalyticMap::identity_sphere();
    let report = heterotopic_sequence(&u, &mesh, 3, &[0.3, 0.2, 0.12], &HetConfig::default()).unwrap();
    let target = 24.0 * PI;
    let rel = (report.fitted_limit - target) / target;
    assert!(rel.abs() < 0.03, "fitted limit {} rel {rel}", report.fitted_limit);
    for w in report.records.windows(2) {
        assert!(
            w[1].distance < w[0].distance,
            "distance not monotone: {} -> {}",
            w[0].distance,
            w[1].distance
        );
    }
    for r in &report.records {
        assert_eq!(r.degree, 3, "competitor degree at t = {}", r.t);
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "criterion 3 took {elapsed:.1?}");
    println!(
        "criterion 3: PASS - limit {:.3} vs 24pi = {target:.3} ({rel:+.4}), distances {:?} in {elapsed:.1?}",
        report.fitted_limit,
        report.records.iter().map(|r| (r.distance * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
}

#[test]
fn criterion_4_insertion_energy_identity() {
    let t0 = Instant::now();
    let chart = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.8).unwrap();
    let id = AnalyticMap::identity_sphere();
    let restrict = |m: &AnalyticMap| DiskMap::Restriction {
        map: Box::new(m.clone()),
        chart: chart.clone(),
    };
    let u_id = restrict(&id);
    let u_opened = restrict(&open_map(&id, &chart, 0.5).unwrap());
    let grid = DiskGrid::polar(800);

    let mut lines = Vec::new();
    // exact identity: E(U_t) = (1 + t^{2(m-p)}) * outside-B_t part + t^{2(m-p)} * inner
    // energy, with the exponent zero at p = m = 2
    for (t, u0, u1, tag) in [
        (0.3, &u_id, &u_id, "t=0.3"),
        (0.15, &u_id, &u_id, "t=0.15"),
        (0.3, &u_id, &u_opened, "t=0.3 distinct inner"),
    ] {
        let grafted = graft_two_disks(u0, u1, t).unwrap();
        let lhs = disk_energy(&grafted, &grid);
        let rhs = 2.0 * disk_band_energy(u0, &grid, t, f64::INFINITY) + disk_energy(u1, &grid);
        let rel = (lhs - rhs) / rhs;
        assert!(rel.abs() < 0.01, "{tag}: {lhs} vs {rhs} ({rel})");
        lines.push(format!("{tag}: {rel:+.5}"));
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "criterion 4 took {elapsed:.1?}");
    println!("criterion 4: PASS - {} in {elapsed:.1?}", lines.join(", "));
}

#[test]
fn criterion_5_lower_bound_chain() {
    let t0 = Instant::now();
    // a battery spanning every kind of field the suite produces
    let sphere = build_icosphere(5).unwrap();
    let torus = build_flat_torus(64).unwrap();
    let mut checked = 0usize;

    let mut check = |field: &VertexField, mesh: &TriMesh, what: &str| {
        chain_check(field, mesh, what);
        checked += 1;
    };

    let id = sample(&AnalyticMap::identity_sphere(), &sphere).unwrap();
    check(&id, &sphere, "identity");
    check(
        &sample(&AnalyticMap::constant([0.3, -0.4, 0.87]), &torus).unwrap(),
        &torus,
        "constant",
    );
    for (d, lambda) in [(1i32, 1.0), (2, 0.5), (-1, 0.7), (3, 0.6), (-2, 0.4)] {
        let f = sample(
            &stereographic_power_map(d, lambda, geom::normalize([0.1, 0.2, 0.97])).unwrap(),
            &sphere,
        )
        .unwrap();
        check(&f, &sphere, &format!("power {d}"));
    }
    for seed in 0..5 {
        check(&perturb_field(&id, 0.2, seed), &sphere, "perturbed identity");
    }
    // surgery products; the graft lives on the finer mesh so that the
    // bubble winding is resolved and the degree floor is meaningful
    let chart = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.8).unwrap();
    let opened = open_map(&AnalyticMap::identity_sphere(), &chart, 0.3).unwrap();
    check(&sample(&opened, &sphere).unwrap(), &sphere, "opened identity");
    let fine = build_icosphere(6).unwrap();
    let with_bubble = insert_bubble(
        &opened,
        &chart,
        make_bubble(2, 0.3, [0.0, 0.0, 1.0]).unwrap(),
        0.3,
    )
    .unwrap();
    check(&sample(&with_bubble, &fine).unwrap(), &fine, "grafted identity");
    let c1 = make_chart(SurfacePoint::Torus([0.25, 0.25]), 0.24).unwrap();
    let c2 = make_chart(SurfacePoint::Torus([0.75, 0.75]), 0.24).unwrap();
    let b = [0.0, 0.0, 1.0];
    let h = concatenate(
        &make_bubble(1, 0.2, b).unwrap(),
        &make_bubble(-1, 0.2, b).unwrap(),
        (&c1, &c2),
    )
    .unwrap();
    check(&sample(&h, &torus).unwrap(), &torus, "torus concatenation");

    assert!(checked >= 15);
    let elapsed = t0.elapsed();
    println!("criterion 5: PASS - pointwise bound and degree floor on {checked} fields in {elapsed:.1?}");
}

#[test]
fn criterion_6_bubbling_detection() {
    let t0 = Instant::now();
    let mesh = build_icosphere(6).unwrap();
    let u = AnalyticMap::identity_sphere();
    let chart = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.95).unwrap();

    // degree 1 -> 3 family: one atom of defect 2 carrying two quanta;
    // the schedule keeps the bubble winding resolved at every member
    let mut family = Vec::new();
    for t in [0.45, 0.35, 0.25] {
        let opened = open_map(&u, &chart, t).unwrap();
        let bubble = make_bubble(2, 0.3, u.eval(&chart.center)).unwrap();
        let v = insert_bubble(&opened, &chart, bubble, t).unwrap();
        family.push(sample(&v, &mesh).unwrap());
    }
    for f in &family {
        chain_check(f, &mesh, "bubbling family");
    }
    let report = detect_bubbling(&family, &mesh, 1.0, &[0.35, 0.3, 0.25]).unwrap();
    assert_eq!(report.atoms.len(), 1, "expected exactly one atom");
    let atom = &report.atoms[0];
    assert_eq!(atom.degree_defect, 2);
    assert!(
        atom.mass >= 0.95 * 16.0 * PI,
        "atom mass {} below 0.95 * 16pi",
        atom.mass
    );
    assert!(atom.certified);

    // two bubbles in disjoint charts: defects +1, +1
    let c1 = make_chart(SurfacePoint::Sphere(geom::normalize([1.0, 0.0, 0.3])), 0.8).unwrap();
    let c2 = make_chart(SurfacePoint::Sphere(geom::normalize([-1.0, 0.0, 0.3])), 0.8).unwrap();
    let mut family2 = Vec::new();
    for t in [0.6, 0.5, 0.45] {
        let mut v = u.clone();
        for c in [&c1, &c2] {
            let opened = open_map(&v, c, t).unwrap();
            let bubble = make_bubble(1, 0.18, u.eval(&c.center)).unwrap();
            v = insert_bubble(&opened, c, bubble, t).unwrap();
        }
        family2.push(sample(&v, &mesh).unwrap());
    }
    let report2 = detect_bubbling(&family2, &mesh, 1.0, &[0.45, 0.4, 0.38]).unwrap();
    assert_eq!(report2.atoms.len(), 2, "expected two atoms");
    let total_mass: f64 = report2.atoms.iter().map(|a| a.mass).sum();
    for a in &report2.atoms {
        assert_eq!(a.degree_defect, 1);
        assert!(a.mass >= 0.95 * EIGHT_PI, "atom mass {}", a.mass);
    }
    assert!(total_mass >= 0.95 * 16.0 * PI, "total mass {total_mass}");

    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "criterion 6 took {elapsed:.1?}");
    println!(
        "criterion 6: PASS - single atom mass {:.3} defect 2; two atoms masses {:.3} in {elapsed:.1?}",
        atom.mass, total_mass
    );
}

#[test]
fn criterion_7_additivity_suite() {
    let t0 = Instant::now();
    let mesh = build_icosphere(6).unwrap();
    let chart = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.95).unwrap();
    let id = AnalyticMap::identity_sphere();

    // exact degree additivity under insertion along a shrinking schedule
    for (delta, t) in [(1i32, 0.3), (1, 0.15), (1, 0.075), (2, 0.3), (-1, 0.15)] {
        let opened = open_map(&id, &chart, t).unwrap();
        let bubble = make_bubble(delta, 0.35, id.eval(&chart.center)).unwrap();
        let v = insert_bubble(&opened, &chart, bubble, t).unwrap();
        let f = sample(&v, &mesh).unwrap();
        let deg = brouwer_degree(&f, &mesh).unwrap();
        assert_eq!(
            deg.snapped,
            1 + delta as i64,
            "insertion degree at t={t}, delta={delta}: raw {}",
            deg.raw
        );
    }

    // exact degree additivity under concatenation
    let torus = build_flat_torus(256).unwrap();
    let b = [0.0, 0.0, 1.0];
    let c1 = make_chart(SurfacePoint::Torus([0.25, 0.25]), 0.24).unwrap();
    let c2 = make_chart(SurfacePoint::Torus([0.75, 0.75]), 0.24).unwrap();
    let grid = DiskGrid::polar(300);
    let mut concat_line = String::new();
    // the |d| = 2 bubble winds twice per circle, so it gets a wider scale
    for (d1, d2) in [(1i32, 1i32), (1, -1), (2, 1)] {
        let scale1 = if d1.abs() >= 2 { 0.18 } else { 0.1 };
        let f = make_bubble(d1, scale1, b).unwrap();
        let g = make_bubble(d2, 0.1, b).unwrap();
        let h = concatenate(&f, &g, (&c1, &c2)).unwrap();
        let hf = sample(&h, &torus).unwrap();
        let deg = brouwer_degree(&hf, &torus).unwrap();
        assert_eq!(deg.snapped, (d1 + d2) as i64, "concat degree {d1}+{d2}");
        // energy additivity within 1% against disk-grid ingredients
        let e_h = p_energy(&hf, &torus, 2.0).unwrap().total;
        let sum = disk_energy(&f, &grid) + disk_energy(&g, &grid);
        let rel = (e_h - sum) / sum;
        assert!(rel.abs() < 0.01, "concat energy {e_h} vs {sum} ({rel})");
        concat_line = format!("concat {d1}+{d2}: {rel:+.4}");
    }

    // reflect-glue energy additivity within 1%
    let chart8 = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.8).unwrap();
    let opened = open_map(&id, &chart8, 0.35).unwrap();
    let w = reflect_glue(&opened, &opened, &chart8, 0.3).unwrap();
    let e_w = disk_energy(&w, &grid);
    let e_u = disk_energy(
        &DiskMap::Restriction {
            map: Box::new(opened.clone()),
            chart: chart8.clone(),
        },
        &grid,
    );
    let rel_glue = (e_w - 2.0 * e_u) / (2.0 * e_u);
    assert!(rel_glue.abs() < 0.01, "reflect-glue {e_w} vs {}", 2.0 * e_u);
    // degree bookkeeping: [u, u] is trivial
    assert_eq!(heterotopy::surgery::disk_degree(&w, &grid), 0);

    let elapsed = t0.elapsed();
    println!(
        "criterion 7: PASS - insertion/concat degrees exact, {concat_line}, reflect-glue {rel_glue:+.4} in {elapsed:.1?}"
    );
}

#[test]
fn criterion_8_gradient_correctness() {
    let t0 = Instant::now();
    let mesh = build_icosphere(2).unwrap();
    let id = sample(&AnalyticMap::identity_sphere(), &mesh).unwrap();
    let mut worst: f64 = 0.0;
    for trial in 0..20u64 {
        let f = perturb_field(&id, 0.3, 1000 + trial);
        let grad = energy_gradient(&f, &mesh, 2.0).unwrap();
        for dir_seed in 0..5u64 {
            let probe = perturb_field(&f, 1.0, 5000 + 10 * trial + dir_seed);
            let dir: Vec<[f64; 3]> = f
                .values
                .iter()
                .zip(&probe.values)
                .map(|(v, w)| geom::sub(*w, geom::scale(*v, geom::dot(*w, *v))))
                .collect();
            let h = 1e-5;
            let energy_at = |s: f64| {
                let mut total = geom::KahanSum::new();
                let shifted = VertexField {
                    mesh_hash: f.mesh_hash.clone(),
                    values: f
                        .values
                        .iter()
                        .zip(&dir)
                        .map(|(v, d)| geom::add(*v, geom::scale(*d, s)))
                        .collect(),
                };
                for t in 0..mesh.triangle_count() {
                    let d = mesh_triangle_differential(&mesh, &shifted, t).unwrap();
                    total.add(d.area * d.frobenius_sq());
                }
                total.total()
            };
            let numeric = (energy_at(h) - energy_at(-h)) / (2.0 * h);
            let analytic: f64 = grad.iter().zip(&dir).map(|(g, d)| geom::dot(*g, *d)).sum();
            let rel = (numeric - analytic).abs() / numeric.abs().max(1e-12);
            worst = worst.max(rel);
            assert!(rel < 1e-5, "trial {trial}/{dir_seed}: {numeric} vs {analytic}");
        }
    }
    let elapsed = t0.elapsed();
    assert!(elapsed.as_secs_f64() < 20.0, "criterion 8 took {elapsed:.1?}");
    println!("criterion 8: PASS - 100 directional checks, worst relative error {worst:.2e} in {elapsed:.1?}");
}

#[test]
fn criterion_9_opening_convergence() {
    let t0 = Instant::now();
    let mesh = build_icosphere(6).unwrap();
    let chart = make_chart(SurfacePoint::Sphere([0.0, 0.0, 1.0]), 0.6).unwrap();
    let id = AnalyticMap::identity_sphere();
    let e_base = p_energy(&sample(&id, &mesh).unwrap(), &mesh, 2.0).unwrap().total;
    let mut gaps = Vec::new();
    for r in [0.3, 0.15, 0.075] {
        let opened = open_map(&id, &chart, r).unwrap();
        let e = p_energy(&sample(&opened, &mesh).unwrap(), &mesh, 2.0).unwrap().total;
        gaps.push((e - e_base).abs());
    }
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "gaps not decreasing: {gaps:?}");
    assert!(gaps[2] < 0.01 * e_base, "final gap {} vs 1% of {e_base}", gaps[2]);
    let elapsed = t0.elapsed();
    println!(
        "criterion 9: PASS - opening gaps {:?} (final {:.4} of E) in {elapsed:.1?}",
        gaps.iter().map(|g| (g * 1000.0).round() / 1000.0).collect::<Vec<_>>(),
        gaps[2] / e_base
    );
}

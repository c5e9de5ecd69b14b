//! Property-based invariants: chart round trips, metric axioms, energy
//! invariances, the pointwise Jacobian bound, and the norm properties of
//! the closed-form class energy.

use proptest::prelude::*;

use heterotopy::energy::p_energy;
use heterotopy::geom;
use heterotopy::map::{l_m_distance, sample, AnalyticMap, VertexField};
use heterotopy::mesh::{build_flat_torus, build_icosphere, make_chart, SurfacePoint};
use heterotopy::topology::{check_amgm_bound, etop_sphere, HomotopyClassZ};

fn unit_vector() -> impl Strategy<Value = [f64; 3]> {
    (
        -1.0f64..1.0,
        -1.0f64..1.0,
        -1.0f64..1.0,
    )
        .prop_filter_map("nonzero", |(x, y, z)| {
            let n = (x * x + y * y + z * z).sqrt();
            (n > 1e-3).then(|| [x / n, y / n, z / n])
        })
}

fn random_field(mesh_hash: String, n: usize, seed: u64) -> VertexField {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    VertexField {
        mesh_hash,
        values: (0..n)
            .map(|_| {
                geom::normalize([
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                ])
            })
            .collect(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn chart_round_trip_sphere(center in unit_vector(), rho in 0.05f64..0.99, r_frac in 0.0f64..1.0, theta in 0.0f64..std::f64::consts::TAU) {
        let chart = make_chart(SurfacePoint::Sphere(center), rho).unwrap();
        let r = rho * r_frac.sqrt() * 0.999;
        let x = [r * theta.cos(), r * theta.sin()];
        let p = chart.inverse(x);
        let y = chart.forward(&p);
        let err = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        prop_assert!(err < 1e-12, "round trip error {err}");
    }

    #[test]
    fn chart_round_trip_torus(cu in 0.0f64..1.0, cv in 0.0f64..1.0, rho in 0.01f64..0.249, r_frac in 0.0f64..1.0, theta in 0.0f64..std::f64::consts::TAU) {
        let chart = make_chart(SurfacePoint::Torus([cu, cv]), rho).unwrap();
        let r = rho * r_frac.sqrt() * 0.999;
        let x = [r * theta.cos(), r * theta.sin()];
        let p = chart.inverse(x);
        let y = chart.forward(&p);
        let err = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        prop_assert!(err < 1e-12, "round trip error {err}");
    }

    #[test]
    fn energy_rotation_invariance(axis in unit_vector(), seed in 0u64..1000) {
        let mesh = build_flat_torus(16).unwrap();
        let f = random_field(mesh.content_hash().to_string(), mesh.vertex_count(), seed);
        let rot = geom::rotation_to(axis);
        let g = VertexField {
            mesh_hash: f.mesh_hash.clone(),
            values: f.values.iter().map(|v| geom::mat_apply(&rot, *v)).collect(),
        };
        let e0 = p_energy(&f, &mesh, 2.0).unwrap().total;
        let e1 = p_energy(&g, &mesh, 2.0).unwrap().total;
        prop_assert!((e0 - e1).abs() <= 1e-12 * e0.max(1.0), "{e0} vs {e1}");
    }

    #[test]
    fn pointwise_jacobian_bound_random_fields(seed in 0u64..1000) {
        let mesh = build_icosphere(2).unwrap();
        let f = random_field(mesh.content_hash().to_string(), mesh.vertex_count(), seed);
        let (ok, slack) = check_amgm_bound(&f, &mesh).unwrap();
        prop_assert!(ok, "slack {slack}");
    }

    #[test]
    fn distance_metric_axioms(sa in 0u64..500, sb in 0u64..500, sc in 0u64..500, p in 1.0f64..4.0) {
        let mesh = build_flat_torus(8).unwrap();
        let hash = mesh.content_hash().to_string();
        let a = random_field(hash.clone(), mesh.vertex_count(), sa);
        let b = random_field(hash.clone(), mesh.vertex_count(), 1000 + sb);
        let c = random_field(hash, mesh.vertex_count(), 2000 + sc);
        let dab = l_m_distance(&a, &b, &mesh, p).unwrap();
        let dba = l_m_distance(&b, &a, &mesh, p).unwrap();
        let dbc = l_m_distance(&b, &c, &mesh, p).unwrap();
        let dac = l_m_distance(&a, &c, &mesh, p).unwrap();
        prop_assert!((dab - dba).abs() < 1e-12);
        prop_assert!(dac <= dab + dbc + 1e-9, "triangle: {dac} vs {dab} + {dbc}");
        prop_assert!(l_m_distance(&a, &a, &mesh, p).unwrap() < 1e-15);
    }

    #[test]
    fn etop_is_a_norm_on_classes(d in -6i64..=6, k in -4i64..=4) {
        let e = etop_sphere(HomotopyClassZ::from_degree(d));
        prop_assert!(e >= 0.0);
        prop_assert!((e - etop_sphere(HomotopyClassZ::from_degree(-d))).abs() < 1e-12);
        // sublinearity, with equality for the Brouwer degree
        let ek = etop_sphere(HomotopyClassZ::from_degree(k * d));
        prop_assert!(ek <= k.unsigned_abs() as f64 * e + 1e-9);
        prop_assert!((ek - k.unsigned_abs() as f64 * e).abs() < 1e-9);
        // gap: only the trivial class sits under the quantum
        if d != 0 {
            prop_assert!(e >= 8.0 * std::f64::consts::PI - 1e-12);
        }
    }

    #[test]
    fn sampling_keeps_unit_norm(center in unit_vector(), lambda in 0.1f64..1.5, d in prop::sample::select(vec![-3i32, -2, -1, 1, 2, 3])) {
        let mesh = build_icosphere(2).unwrap();
        let map = heterotopy::map::stereographic_power_map(d, lambda, center).unwrap();
        let f = sample(&map, &mesh).unwrap();
        prop_assert!(f.check_on(&mesh).is_ok());
    }

    #[test]
    fn field_json_round_trip(seed in 0u64..500) {
        let mesh = build_flat_torus(4).unwrap();
        let f = random_field(mesh.content_hash().to_string(), mesh.vertex_count(), seed);
        let back = VertexField::from_json(&f.to_json()).unwrap();
        prop_assert_eq!(&back.values, &f.values);
        prop_assert_eq!(&back.mesh_hash, &f.mesh_hash);
    }
}

#[test]
fn sampled_analytic_maps_satisfy_invariants() {
    // a fixed sweep complementing the random ones above
    let mesh = build_icosphere(3).unwrap();
    for map in [
        AnalyticMap::identity_sphere(),
        AnalyticMap::constant([0.0, 1.0, 0.0]),
    ] {
        let f = sample(&map, &mesh).unwrap();
        assert!(f.check_on(&mesh).is_ok());
    }
}

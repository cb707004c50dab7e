mod common;

use common::{drift_deviation, haversine_error, haversine_sweep, offset_right, planar_projection};
use ecodrive::fixtures;
use ecodrive::geo::{haversine_distance, match_to_map, project_onto_segment, GeoPoint};
use ecodrive::sim::Route;
use proptest::prelude::*;

#[test]
fn haversine_matches_extended_precision_on_random_pairs() {
    let (worst, violations) = haversine_sweep(10_000, 0x6a7e);
    assert_eq!(violations, 0, "worst relative error {worst:e}");
}

#[test]
fn antipodes_and_dateline() {
    let a = GeoPoint::new(10.0, 179.9);
    let b = GeoPoint::new(-10.0, -0.1);
    assert!(haversine_error(a, b) < 1e-6);
    let c = GeoPoint::new(0.0, 179.999);
    let d = GeoPoint::new(0.0, -179.999);
    assert!(haversine_error(c, d) < 1e-6);
    assert!(haversine_distance(c, d).unwrap() < 300.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2_000))]

    #[test]
    fn heron_projection_matches_planar_oracle(
        lat in -60.0..60.0f64,
        lon in -180.0..180.0f64,
        bearing in 0.0..360.0f64,
        len in 5.0..500.0f64,
        along in 0.02..0.98f64,
        lateral in -25.0..25.0f64,
    ) {
        let n1 = GeoPoint::new(lat, lon);
        let [e, n] = ecodrive::geo::heading_unit(bearing);
        let n2 = n1.offset(e * len, n * len);
        let foot = n1.lerp(&n2, along);
        let truck = offset_right(foot, ecodrive::geo::bearing_deg(n1, n2), lateral);
        let (o_lat, o_rem, f) = planar_projection(truck, n1, n2);
        prop_assume!((0.001..0.999).contains(&f));
        let p = project_onto_segment(truck, n1, n2).unwrap();
        prop_assert!(p.is_interior());
        prop_assert!((p.lateral_error_m - o_lat).abs() < 1e-3, "lateral {} vs {}", p.lateral_error_m, o_lat);
        prop_assert!((p.remaining_to_n2_m - o_rem).abs() < 1e-3, "remaining {} vs {}", p.remaining_to_n2_m, o_rem);
    }

    #[test]
    fn haversine_is_symmetric_and_nonnegative(
        a_lat in -90.0..=90.0f64, a_lon in -180.0..=180.0f64,
        b_lat in -90.0..=90.0f64, b_lon in -180.0..=180.0f64,
    ) {
        let (a, b) = (GeoPoint::new(a_lat, a_lon), GeoPoint::new(b_lat, b_lon));
        let d = haversine_distance(a, b).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(d, haversine_distance(b, a).unwrap());
        prop_assert!(d <= std::f64::consts::PI * ecodrive::geo::EARTH_RADIUS_M + 1e-6);
    }
}

#[test]
fn distance_to_signal_ignores_lateral_drift() {
    let (worst, violations) = drift_deviation(1_000, 17);
    assert_eq!(violations, 0, "worst deviation {worst}");
}

#[test]
fn matched_distance_agrees_with_route_chainage() {
    let map = fixtures::map("carson_corridor.toml").unwrap();
    let route = Route::new(&map, "car-eb-01", 0.0).unwrap();
    for odo in [0.0, 100.0, 399.0, 401.0, 1000.0, 2500.0] {
        let (p, h) = route.pose(odo);
        let (_, d_route) = route.next_signal(odo).unwrap();
        let m = match_to_map(p, h, &map).unwrap();
        assert!((m.distance_to_signal_m - d_route).abs() < 0.05, "odo {odo}: {} vs {d_route}", m.distance_to_signal_m);
    }
}

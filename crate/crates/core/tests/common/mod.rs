//! Independent oracles shared by the integration suites.

#![allow(dead_code)]

use ecodrive::advisor::{SpeedBand, TIMING_EPSILON_S};
use ecodrive::fixtures;
use ecodrive::geo::{
    bearing_deg, haversine_distance, heading_unit, match_to_map, project_onto_segment, GeoPoint, EARTH_RADIUS_M,
};
use ecodrive::sim::Route;
use ecodrive::spat::PhaseColor;
use rug::float::Constant;
use rug::ops::Pow;
use rug::Float;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PREC: u32 = 256;

fn radians(deg: f64) -> Float {
    let pi = Float::with_val(PREC, Constant::Pi);
    Float::with_val(PREC, deg) * pi / 180
}

/// Great-circle distance at 256-bit precision through the atan2 (Vincenty
/// sphere) form of the central angle, which shares no step with haversine.
pub fn mpfr_distance(a: GeoPoint, b: GeoPoint) -> f64 {
    let (p1, p2) = (radians(a.lat), radians(b.lat));
    let dl = radians(b.lon) - radians(a.lon);
    let (s1, c1) = (p1.clone().sin(), p1.cos());
    let (s2, c2) = (p2.clone().sin(), p2.cos());
    let (sdl, cdl) = (dl.clone().sin(), dl.cos());
    let x = Float::with_val(PREC, &c2 * &sdl);
    let y = Float::with_val(PREC, &c1 * &s2) - Float::with_val(PREC, &s1 * &c2) * &cdl;
    let num = (x.pow(2u32) + y.pow(2u32)).sqrt();
    let den = Float::with_val(PREC, &s1 * &s2) + Float::with_val(PREC, &c1 * &c2) * &cdl;
    let angle = num.atan2(&den);
    (angle * Float::with_val(PREC, EARTH_RADIUS_M)).to_f64()
}

fn ecef(p: GeoPoint) -> [f64; 3] {
    let (lat, lon) = (p.lat.to_radians(), p.lon.to_radians());
    [
        EARTH_RADIUS_M * lat.cos() * lon.cos(),
        EARTH_RADIUS_M * lat.cos() * lon.sin(),
        EARTH_RADIUS_M * lat.sin(),
    ]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Planar projection of `truck` onto `n1 -> n2` in the plane of the three
/// chord vectors. Returns `(lateral, remaining_to_n2, fraction along)`.
/// Chords differ from arcs by well under a micrometer at 500 m.
pub fn planar_projection(truck: GeoPoint, n1: GeoPoint, n2: GeoPoint) -> (f64, f64, f64) {
    let (t, a, b) = (ecef(truck), ecef(n1), ecef(n2));
    let ab = sub(b, a);
    let at = sub(t, a);
    let len2 = dot(ab, ab);
    let f = dot(at, ab) / len2;
    let foot = [a[0] + f * ab[0], a[1] + f * ab[1], a[2] + f * ab[2]];
    let lateral = dot(sub(t, foot), sub(t, foot)).sqrt();
    let remaining = (1.0 - f) * len2.sqrt();
    (lateral, remaining, f)
}

/// `point` moved `meters` to the right of travel direction `heading_deg`.
pub fn offset_right(point: GeoPoint, heading_deg: f64, meters: f64) -> GeoPoint {
    let [e, n] = heading_unit(heading_deg + 90.0);
    point.offset(e * meters, n * meters)
}

/// Time to cover `d` meters at constant `v`.
pub fn arrival_s(d: f64, v: f64) -> f64 {
    if d == 0.0 {
        0.0
    } else if v == 0.0 {
        f64::INFINITY
    } else {
        d / v
    }
}

fn speed_grid(v_lim: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = (v_lim / step).floor() as usize;
    (0..=n).map(move |k| k as f64 * step).chain(std::iter::once(v_lim))
}

/// Band from a constant-speed arrival-time search over a speed grid.
///
/// Red (and amber, timed against amber plus the following red): the
/// largest `v` such that every grid speed up to it arrives no earlier than
/// `t`. Green: the slowest grid speed arriving no later than `t`, up to the
/// limit, or `[0, 0]` when none does.
pub fn brute_force_band(
    phase: PhaseColor,
    d: f64,
    t: f64,
    v_lim: f64,
    red_after_amber_s: f64,
    step: f64,
) -> (f64, f64) {
    let (red, t) = match phase {
        PhaseColor::Red => (true, t),
        PhaseColor::Amber => (true, t + red_after_amber_s),
        PhaseColor::Green => (false, t),
    };
    if red {
        let mut upper = 0.0;
        for v in speed_grid(v_lim, step) {
            if arrival_s(d, v) < t {
                break;
            }
            upper = v;
        }
        (0.0, upper)
    } else {
        match speed_grid(v_lim, step).find(|&v| arrival_s(d, v) <= t) {
            Some(lo) => (lo, v_lim),
            None => (0.0, 0.0),
        }
    }
}

/// Checks that `band` is the oracle band for some residual in
/// `[t_lo, t_hi]`. The band moves monotonically with the residual, so the
/// two ends bound every admissible value.
pub fn band_within(
    phase: PhaseColor,
    d: f64,
    t_lo: f64,
    t_hi: f64,
    v_lim: f64,
    red_after_amber_s: f64,
    band: &SpeedBand,
    tol: f64,
) -> Result<(), String> {
    let step = 0.005;
    let at_lo = brute_force_band(phase, d, t_lo, v_lim, red_after_amber_s, step);
    let at_hi = brute_force_band(phase, d, t_hi, v_lim, red_after_amber_s, step);
    let (lo, hi) = (band.v_lower_mps, band.v_upper_mps);
    let within = |x: f64, a: f64, b: f64| x >= a.min(b) - tol && x <= a.max(b) + tol;
    // residuals under the timing epsilon are not timed against at all
    let untimed = t_lo < TIMING_EPSILON_S && phase != PhaseColor::Amber;
    let infeasible = |b: (f64, f64)| b == (0.0, 0.0);
    let ok = match phase {
        PhaseColor::Red | PhaseColor::Amber => {
            lo == 0.0 && (within(hi, at_lo.1, at_hi.1) || (untimed && (hi - v_lim).abs() <= tol))
        }
        PhaseColor::Green if (lo, hi) == (0.0, 0.0) => infeasible(at_lo) || untimed,
        PhaseColor::Green => {
            let slowest = if infeasible(at_lo) { v_lim } else { at_lo.0 };
            !infeasible(at_hi) && (hi - v_lim).abs() <= tol && within(lo, at_hi.0, slowest)
        }
    };
    if ok {
        Ok(())
    } else {
        Err(format!(
            "{phase} d={d:.3} t in [{t_lo:.3}, {t_hi:.3}] v_lim={v_lim}: band [{lo:.3}, {hi:.3}], oracle {at_lo:?} .. {at_hi:?}"
        ))
    }
}

/// Relative error of haversine against the 256-bit oracle. Pairs closer
/// than a millimeter are compared absolutely.
pub fn haversine_error(a: GeoPoint, b: GeoPoint) -> f64 {
    let h = haversine_distance(a, b).unwrap();
    let o = mpfr_distance(a, b);
    if o < 1e-3 {
        (h - o).abs()
    } else {
        (h - o).abs() / o
    }
}

/// Worst relative error and violation count (>= 1e-6) over `n` random
/// pairs, half global and half within a few kilometers.
pub fn haversine_sweep(n: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut violations = 0;
    for k in 0..n {
        let a = GeoPoint::new(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0));
        let b = if k % 2 == 0 {
            GeoPoint::new(rng.random_range(-90.0..=90.0), rng.random_range(-180.0..=180.0))
        } else {
            GeoPoint::new(
                (a.lat + rng.random_range(-0.05..0.05)).clamp(-90.0, 90.0),
                (a.lon + rng.random_range(-0.05..0.05)).clamp(-180.0, 180.0),
            )
        };
        let e = haversine_error(a, b);
        if e >= 1e-6 {
            violations += 1;
        }
        worst = worst.max(e);
    }
    (worst, violations)
}

/// Largest deviation of the matched distance-to-signal over `n` random
/// corridor positions with lateral drift of up to 3 m.
pub fn drift_deviation(n: usize, seed: u64) -> (f64, usize) {
    let map = fixtures::map("carson_corridor.toml").unwrap();
    let route = Route::new(&map, "car-eb-01", 0.0).unwrap();
    let last_signal = route.signal_odometers().last().unwrap().0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut violations = 0;
    for _ in 0..n {
        let odo = rng.random_range(0.5..last_signal - 0.5);
        let (p, heading) = route.pose(odo);
        let drift = rng.random_range(-3.0..=3.0);
        let reference = match_to_map(p, heading, &map).unwrap().distance_to_signal_m;
        let drifted = match_to_map(offset_right(p, heading, drift), heading, &map)
            .unwrap()
            .distance_to_signal_m;
        let dev = (drifted - reference).abs();
        if dev >= 0.05 {
            violations += 1;
        }
        worst = worst.max(dev);
    }
    (worst, violations)
}

/// Worst disagreement in meters between the Heron projection and
/// [`planar_projection`] over `n` random segments of 5 to 500 m, with the
/// truck inside the segment span and up to 25 m off it. Counts disagreements
/// of 1 mm or more.
pub fn heron_sweep(n: usize, seed: u64) -> (f64, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    let mut violations = 0;
    for _ in 0..n {
        let n1 = GeoPoint::new(rng.random_range(-60.0..60.0), rng.random_range(-180.0..180.0));
        let [e, nn] = heading_unit(rng.random_range(0.0..360.0));
        let len = rng.random_range(5.0..=500.0);
        let n2 = n1.offset(e * len, nn * len);
        let foot = n1.lerp(&n2, rng.random_range(0.02..0.98));
        let truck = offset_right(foot, bearing_deg(n1, n2), rng.random_range(-25.0..=25.0));
        let (o_lat, o_rem, _) = planar_projection(truck, n1, n2);
        let p = project_onto_segment(truck, n1, n2).unwrap();
        let err = (p.lateral_error_m - o_lat).abs().max((p.remaining_to_n2_m - o_rem).abs());
        if err >= 1e-3 {
            violations += 1;
        }
        worst = worst.max(err);
    }
    (worst, violations)
}

/// Draws `n` random `(d_sig, t_current, v_lim, phase)` tuples, runs the
/// advisor on each and compares with [`brute_force_band`]. Returns the
/// violation count, the worst bound error, and the wall time spent.
pub fn advisor_sweep(n: usize, seed: u64) -> (usize, f64, std::time::Duration) {
    use ecodrive::advisor::{advise, AdvisorConfig, AdvisoryInput};
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = AdvisorConfig::default();
    let start = std::time::Instant::now();
    let mut violations = 0;
    let mut worst = 0.0_f64;
    for _ in 0..n {
        let phase = [PhaseColor::Green, PhaseColor::Amber, PhaseColor::Red][rng.random_range(0..3)];
        let input = AdvisoryInput {
            d_sig_m: rng.random_range(0.0..2_000.0),
            phase,
            t_current_s: rng.random_range(TIMING_EPSILON_S..150.0),
            v_lim_mps: rng.random_range(5.0..=31.9),
            ego_speed_mps: rng.random_range(0.0..30.0),
            lead: None,
            spat_age_ms: 0,
            red_after_amber_s: rng.random_range(0.0..60.0),
        };
        let band = advise(&input, &config).unwrap();
        let (lo, hi) = brute_force_band(
            phase,
            input.d_sig_m,
            input.t_current_s,
            input.v_lim_mps,
            input.red_after_amber_s,
            0.005,
        );
        let err = (band.v_lower_mps - lo).abs().max((band.v_upper_mps - hi).abs());
        worst = worst.max(err);
        if err > 0.01 {
            violations += 1;
        }
    }
    (violations, worst, start.elapsed())
}

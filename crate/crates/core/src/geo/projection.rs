use super::{haversine_distance, GeoError, GeoPoint};

/// Where the foot of the perpendicular falls relative to the segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentSide {
    Interior,
    /// Projection falls upstream of the first node.
    BeforeStart,
    /// Projection falls downstream of the second node.
    PastEnd,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Height of the truck/node/node triangle over the lane (GNSS drift).
    pub lateral_error_m: f64,
    /// Distance from the projection point to the downstream node.
    pub remaining_to_n2_m: f64,
    pub side: SegmentSide,
    pub truck_to_n1_m: f64,
    pub truck_to_n2_m: f64,
    pub segment_length_m: f64,
}

impl Projection {
    pub fn is_interior(&self) -> bool {
        self.side == SegmentSide::Interior
    }

    /// Distance from the truck to the segment as a set: the height for
    /// interior projections, otherwise the distance to the nearer node.
    pub fn distance_to_segment_m(&self) -> f64 {
        match self.side {
            SegmentSide::Interior => self.lateral_error_m,
            SegmentSide::BeforeStart => self.truck_to_n1_m,
            SegmentSide::PastEnd => self.truck_to_n2_m,
        }
    }
}

/// Triangle area from three side lengths (Heron), evaluated with the sides
/// sorted so the cancelling differences are exact.
fn heron_area(a: f64, b: f64, c: f64) -> f64 {
    let mut s = [a, b, c];
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let prod = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * prod.max(0.0).sqrt()
}

/// Projects the truck onto the lane segment `n1 -> n2` using only
/// great-circle side lengths: Heron's formula gives the triangle area, the
/// area gives the height over the base, and Pythagoras gives the distance
/// from the projection point to `n2`.
///
/// Projections outside the segment are clamped to the nearer node and
/// flagged through [`SegmentSide`].
pub fn project_onto_segment(
    truck: GeoPoint,
    n1: GeoPoint,
    n2: GeoPoint,
) -> Result<Projection, GeoError> {
    let d_tn1 = haversine_distance(truck, n1)?;
    let d_tn2 = haversine_distance(truck, n2)?;
    let d_n1n2 = haversine_distance(n1, n2)?;
    if d_n1n2 == 0.0 {
        return Err(GeoError::InvalidInput("segment nodes coincide".into()));
    }

    let (a2, b2, c2) = (d_tn1 * d_tn1, d_tn2 * d_tn2, d_n1n2 * d_n1n2);
    let side = if a2 > b2 + c2 {
        SegmentSide::PastEnd
    } else if b2 > a2 + c2 {
        SegmentSide::BeforeStart
    } else {
        SegmentSide::Interior
    };

    let (lateral, remaining) = match side {
        SegmentSide::Interior => {
            let h = 2.0 * heron_area(d_tn1, d_tn2, d_n1n2) / d_n1n2;
            let h = h.min(d_tn2);
            (h, (d_tn2 * d_tn2 - h * h).max(0.0).sqrt())
        }
        SegmentSide::PastEnd => (d_tn2, 0.0),
        SegmentSide::BeforeStart => (d_tn1, d_n1n2),
    };

    Ok(Projection {
        lateral_error_m: lateral,
        remaining_to_n2_m: remaining,
        side,
        truck_to_n1_m: d_tn1,
        truck_to_n2_m: d_tn2,
        segment_length_m: d_n1n2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equator(east_m: f64, north_m: f64) -> GeoPoint {
        GeoPoint::new(0.0, 0.0).offset(east_m, north_m)
    }

    #[test]
    fn on_line_is_degenerate_triangle() {
        let p = project_onto_segment(equator(30.0, 0.0), equator(0.0, 0.0), equator(100.0, 0.0))
            .unwrap();
        assert!(p.lateral_error_m < 1e-6, "{p:?}");
        assert!((p.remaining_to_n2_m - 70.0).abs() < 1e-6);
        assert!(p.is_interior());
    }

    #[test]
    fn planar_right_triangle() {
        // truck 30 m past n1, 4 m north of a 100 m equatorial segment
        let p = project_onto_segment(equator(30.0, 4.0), equator(0.0, 0.0), equator(100.0, 0.0))
            .unwrap();
        assert!((p.lateral_error_m - 4.0).abs() < 1e-3, "{p:?}");
        assert!((p.remaining_to_n2_m - 70.0).abs() < 1e-3, "{p:?}");
    }

    #[test]
    fn truck_at_downstream_node() {
        let n2 = equator(100.0, 0.0);
        let p = project_onto_segment(n2, equator(0.0, 0.0), n2).unwrap();
        assert_eq!(p.lateral_error_m, 0.0);
        assert_eq!(p.remaining_to_n2_m, 0.0);
    }

    #[test]
    fn outside_the_segment_is_clamped_and_flagged() {
        let n1 = equator(0.0, 0.0);
        let n2 = equator(100.0, 0.0);
        let past = project_onto_segment(equator(110.0, 2.0), n1, n2).unwrap();
        assert_eq!(past.side, SegmentSide::PastEnd);
        assert_eq!(past.remaining_to_n2_m, 0.0);
        let before = project_onto_segment(equator(-5.0, 1.0), n1, n2).unwrap();
        assert_eq!(before.side, SegmentSide::BeforeStart);
        assert!((before.remaining_to_n2_m - 100.0).abs() < 1e-6);
    }

    #[test]
    fn coincident_nodes_are_rejected() {
        let n = equator(0.0, 0.0);
        assert!(project_onto_segment(equator(1.0, 1.0), n, n).is_err());
    }
}

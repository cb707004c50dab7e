use super::{
    heading_consistent, heading_difference, normalize_heading, project_onto_segment, GeoError,
    GeoPoint, MapGraph, Projection, SegmentSide, SignalRef,
};

/// Candidates farther than this from the truck are never matched.
pub const MAX_MATCH_RADIUS_M: f64 = 25.0;

const TIE_EPS_M: f64 = 1e-9;

/// The truck located on a lane and, through it, on the approach to the next
/// signal.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub segment_id: String,
    pub segment_index: usize,
    /// Perpendicular distance from the truck to the lane.
    pub lateral_error_m: f64,
    /// Distance from the projection point to the segment's downstream node.
    pub along_segment_remaining_m: f64,
    /// Along-road distance from the projection point to the signal node.
    pub distance_to_signal_m: f64,
    pub signal: SignalRef,
    pub speed_limit_mps: f64,
    /// The raw projection fell outside the matched segment and was clamped.
    pub out_of_segment: bool,
}

/// Lane match without requiring a downstream signal.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct LaneMatch {
    pub segment_index: usize,
    pub lateral_error_m: f64,
    pub remaining_m: f64,
    pub out_of_segment: bool,
    /// Projected beyond the last node of a chain; anything at that node
    /// is already behind the truck.
    pub past_map_end: bool,
}

struct Candidate {
    segment: usize,
    distance: f64,
    angle: f64,
    projection: Projection,
}

pub(crate) fn match_lane(
    truck: GeoPoint,
    heading_deg: f64,
    map: &MapGraph,
) -> Result<LaneMatch, GeoError> {
    truck.validate()?;
    if !heading_deg.is_finite() {
        return Err(GeoError::InvalidInput("non-finite heading".into()));
    }
    let heading = normalize_heading(heading_deg);

    let mut best: Option<Candidate> = None;
    for (i, seg) in map.segments().iter().enumerate() {
        let (n1, n2) = map.segment_endpoints(i);
        if !heading_consistent(heading, n1.enu_to(&n2))? {
            continue;
        }
        let projection = project_onto_segment(truck, n1, n2)?;
        let distance = projection.distance_to_segment_m();
        if distance > MAX_MATCH_RADIUS_M {
            continue;
        }
        let cand = Candidate {
            segment: i,
            distance,
            angle: heading_difference(heading, seg.heading_deg),
            projection,
        };
        let better = match &best {
            None => true,
            Some(b) => {
                if (cand.distance - b.distance).abs() > TIE_EPS_M {
                    cand.distance < b.distance
                } else if cand.angle != b.angle {
                    cand.angle < b.angle
                } else {
                    seg.id < map.segments()[b.segment].id
                }
            }
        };
        if better {
            best = Some(cand);
        }
    }

    let best = best.ok_or(GeoError::NoMatch {
        lat: truck.lat,
        lon: truck.lon,
        radius_m: MAX_MATCH_RADIUS_M,
    })?;
    let p = best.projection;
    let walk = |options: &[usize]| {
        options.iter().copied().min_by(|&a, &b| {
            let sa = &map.segments()[a];
            let sb = &map.segments()[b];
            heading_difference(heading, sa.heading_deg)
                .total_cmp(&heading_difference(heading, sb.heading_deg))
                .then_with(|| sa.id.cmp(&sb.id))
        })
    };

    let lane = match p.side {
        SegmentSide::Interior => LaneMatch {
            segment_index: best.segment,
            lateral_error_m: p.lateral_error_m,
            remaining_m: p.remaining_to_n2_m,
            out_of_segment: false,
            past_map_end: false,
        },
        SegmentSide::PastEnd => match walk(map.downstream_of(best.segment)) {
            Some(next) => LaneMatch {
                segment_index: next,
                lateral_error_m: p.lateral_error_m,
                remaining_m: map.segments()[next].length_m,
                out_of_segment: true,
                past_map_end: false,
            },
            None => LaneMatch {
                segment_index: best.segment,
                lateral_error_m: p.lateral_error_m,
                remaining_m: 0.0,
                out_of_segment: true,
                past_map_end: true,
            },
        },
        SegmentSide::BeforeStart => match walk(map.upstream_of(best.segment)) {
            Some(prev) => LaneMatch {
                segment_index: prev,
                lateral_error_m: p.lateral_error_m,
                remaining_m: 0.0,
                out_of_segment: true,
                past_map_end: false,
            },
            None => LaneMatch {
                segment_index: best.segment,
                lateral_error_m: p.lateral_error_m,
                remaining_m: p.segment_length_m,
                out_of_segment: true,
                past_map_end: false,
            },
        },
    };
    Ok(lane)
}

/// Matches the truck to the nearest heading-consistent lane and measures
/// the along-road distance to the next signal: the distance from the
/// projection point to the segment end plus every downstream segment up to
/// the signal node.
pub fn match_to_map(
    truck: GeoPoint,
    heading_deg: f64,
    map: &MapGraph,
) -> Result<MatchResult, GeoError> {
    let lane = match_lane(truck, heading_deg, map)?;
    let seg = &map.segments()[lane.segment_index];
    let (signal, chain_m) = map
        .next_signal(lane.segment_index)
        .filter(|_| !lane.past_map_end)
        .ok_or_else(|| GeoError::NoSignal {
            segment: seg.id.clone(),
        })?;
    Ok(MatchResult {
        segment_id: seg.id.clone(),
        segment_index: lane.segment_index,
        lateral_error_m: lane.lateral_error_m,
        along_segment_remaining_m: lane.remaining_m,
        distance_to_signal_m: lane.remaining_m + chain_m,
        signal,
        speed_limit_mps: seg.speed_limit_mps,
        out_of_segment: lane.out_of_segment,
    })
}

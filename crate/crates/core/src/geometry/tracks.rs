//! Bundled tracks, ordered by difficulty.
//!
//! * `oval`: two long straights and two wide hairpin-free bends; can be
//!   lapped without braking.
//! * `fast-mixed`: medium-speed bends and a chicane; needs some braking.
//! * `technical`: a tight hairpin and sharp corners between fast straights.

use super::{GeometryError, Result, Track, TrackBuilder};

pub const OVAL: &str = "oval";
pub const FAST_MIXED: &str = "fast-mixed";
pub const TECHNICAL: &str = "technical";

pub const ALL: [&str; 3] = [OVAL, FAST_MIXED, TECHNICAL];

pub fn oval() -> Track {
    TrackBuilder::new(OVAL, 15.0)
        .straight(250.0)
        .arc(80.0, 180.0)
        .straight(250.0)
        .arc(80.0, 180.0)
        .build()
        .expect("oval closes")
}

pub fn fast_mixed() -> Track {
    TrackBuilder::new(FAST_MIXED, 13.0)
        .straight(200.0)
        .arc(60.0, 90.0)
        .straight(120.0)
        .arc(50.0, 45.0)
        .straight(60.0)
        .arc(50.0, -45.0)
        .straight(40.0)
        .arc(35.0, 90.0)
        .straight(150.0)
        .arc(45.0, 60.0)
        .straight(50.0)
        .arc(40.0, -60.0)
        .straight(40.0)
        .arc(30.0, 90.0)
        .straight(80.0)
        .arc(50.0, 90.0)
        .closing(8, 14)
        .build()
        .expect("fast-mixed closes")
}

pub fn technical() -> Track {
    TrackBuilder::new(TECHNICAL, 12.0)
        .straight(50.0)
        .arc(15.0, 90.0)
        .straight(200.0)
        .arc(12.0, 180.0)
        .straight(80.0)
        .arc(20.0, -90.0)
        .straight(300.0)
        .arc(25.0, 90.0)
        .straight(60.0)
        .arc(30.0, 90.0)
        .straight(274.0)
        .closing(6, 8)
        .build()
        .expect("technical closes")
}

pub fn by_name(name: &str) -> Result<Track> {
    match name {
        OVAL => Ok(oval()),
        FAST_MIXED => Ok(fast_mixed()),
        TECHNICAL => Ok(technical()),
        other => Err(GeometryError::Invalid {
            what: "track name",
            index: 0,
            reason: format!("unknown track '{other}' (known: {})", ALL.join(", ")),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_no_self_overlap(t: &Track) {
        let pts = t.centerline().points();
        let arc = t.centerline().arc_lengths();
        let lap = t.lap_length();
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let along = (arc[j] - arc[i]).min(lap - (arc[j] - arc[i]));
                if along > 4.0 * t.width() {
                    let d = (pts[i] - pts[j]).norm();
                    assert!(d > t.width() + 4.0, "{}: points {i} and {j} only {d:.2} m apart", t.name());
                }
            }
        }
    }

    #[test]
    fn bundled_tracks_are_valid() {
        for name in ALL {
            let t = by_name(name).unwrap();
            assert_eq!(t.name(), name);
            assert_no_self_overlap(&t);
        }
        assert!(by_name("nowhere").is_err());
    }

    #[test]
    fn difficulty_ladder_by_peak_curvature() {
        let peak = |t: &Track| t.centerline().vertex_curvatures().iter().fold(0.0f64, |m, k| m.max(k.abs()));
        let (o, f, te) = (peak(&oval()), peak(&fast_mixed()), peak(&technical()));
        assert!(o < f && f < te, "{o} {f} {te}");
    }
}

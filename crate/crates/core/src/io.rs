//! Bit-exact serialization of event data.
//!
//! The canonical event CSV has header `shot_id,x_mm,y_mm,t_ns`, one row per
//! event, LF line endings, UTF-8, no quoting. Coordinates print with 9
//! significant digits; since all valid events live on that grid (see
//! [`crate::types::quantize_coord`]), `decode(encode(x)) == x`.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::types::{DetectionEvent, Shot};

pub const EVENT_CSV_HEADER: &str = "shot_id,x_mm,y_mm,t_ns";

fn format_coord(v: f64) -> String {
    format!("{v:.8e}")
}

/// Encode shots into the canonical event CSV byte stream.
///
/// Fails on non-finite coordinates (naming the shot) and on duplicate
/// shot ids. An empty list yields a header-only file.
pub fn encode_shots(shots: &[Shot]) -> Result<Vec<u8>> {
    let mut seen = HashMap::with_capacity(shots.len());
    let mut out = String::new();
    out.push_str(EVENT_CSV_HEADER);
    out.push('\n');
    for shot in shots {
        shot.validate()?;
        if let Some(prev) = seen.insert(shot.shot_id, ()) {
            let _ = prev;
            return Err(Error::BadShot {
                shot_id: shot.shot_id,
                message: "duplicate shot_id in dataset".into(),
            });
        }
        for ev in shot.events() {
            out.push_str(&shot.shot_id.to_string());
            out.push(',');
            out.push_str(&format_coord(ev.x));
            out.push(',');
            out.push_str(&format_coord(ev.y));
            out.push(',');
            out.push_str(&format_coord(ev.t));
            out.push('\n');
        }
    }
    Ok(out.into_bytes())
}

/// Decode the canonical event CSV. Rows may interleave shot ids; events are
/// regrouped per shot (in order of first appearance) and re-sorted into
/// canonical order.
pub fn decode_shots(bytes: &[u8]) -> Result<Vec<Shot>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::Decode {
        line: 0,
        message: format!("not valid UTF-8: {e}"),
    })?;
    let mut lines = text.split('\n').enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == EVENT_CSV_HEADER => {}
        Some((_, header)) => {
            return Err(Error::Decode {
                line: 1,
                message: format!("expected header '{EVENT_CSV_HEADER}', got '{header}'"),
            })
        }
        None => {
            return Err(Error::Decode {
                line: 1,
                message: "empty input".into(),
            })
        }
    }

    let mut order: Vec<u64> = Vec::new();
    let mut groups: HashMap<u64, Vec<DetectionEvent>> = HashMap::new();
    for (idx, raw) in lines {
        let line_no = idx + 1;
        let row = raw.trim_end_matches('\r');
        if row.is_empty() {
            continue;
        }
        let mut fields = row.split(',');
        let mut next_field = |name: &str| {
            fields.next().ok_or_else(|| Error::Decode {
                line: line_no,
                message: format!("missing field {name}"),
            })
        };
        let shot_id: u64 = next_field("shot_id")?.parse().map_err(|e| Error::Decode {
            line: line_no,
            message: format!("bad shot_id: {e}"),
        })?;
        let mut coord = |name: &str| -> Result<f64> {
            let s = next_field(name)?;
            let v: f64 = s.parse().map_err(|e| Error::Decode {
                line: line_no,
                message: format!("bad {name} '{s}': {e}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Decode {
                    line: line_no,
                    message: format!("{name} out of range: {s}"),
                });
            }
            Ok(v)
        };
        let x = coord("x_mm")?;
        let y = coord("y_mm")?;
        let t = coord("t_ns")?;
        if fields.next().is_some() {
            return Err(Error::Decode {
                line: line_no,
                message: "too many fields".into(),
            });
        }
        let entry = groups.entry(shot_id).or_insert_with(|| {
            order.push(shot_id);
            Vec::new()
        });
        entry.push(DetectionEvent::new(x, y, t));
    }

    Ok(order
        .into_iter()
        .map(|id| Shot::new(id, groups.remove(&id).unwrap()))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn empty_list_gives_header_only() {
        let bytes = encode_shots(&[]).unwrap();
        assert_eq!(bytes, format!("{EVENT_CSV_HEADER}\n").into_bytes());
    }

    #[test]
    fn one_shot_two_events_shares_id() {
        let shot = Shot::new(
            4,
            vec![
                DetectionEvent::new(1.0, 2.0, 3.0),
                DetectionEvent::new(-1.0, 0.5, 1.0),
            ],
        );
        let text = String::from_utf8(encode_shots(&[shot]).unwrap()).unwrap();
        let rows: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(rows.len(), 2);
        assert!(rows.iter().all(|r| r.starts_with("4,")));
        // canonical order: the t = 1.0 event first
        assert!(rows[0].ends_with("1.00000000e0"));
    }

    #[test]
    fn header_only_decodes_to_empty() {
        let shots = decode_shots(format!("{EVENT_CSV_HEADER}\n").as_bytes()).unwrap();
        assert!(shots.is_empty());
    }

    #[test]
    fn interleaved_ids_are_regrouped() {
        let text = format!(
            "{EVENT_CSV_HEADER}\n2,0.0,0.0,1.0\n5,1.0,0.0,0.0\n2,0.0,0.0,0.5\n5,2.0,0.0,3.0\n"
        );
        let shots = decode_shots(text.as_bytes()).unwrap();
        assert_eq!(shots.len(), 2);
        assert_eq!(shots[0].shot_id, 2);
        assert_eq!(shots[0].len(), 2);
        assert_eq!(shots[1].shot_id, 5);
        assert_eq!(shots[1].len(), 2);
        // regrouped shots are canonically sorted
        assert!(shots[0].events()[0].t <= shots[0].events()[1].t);
    }

    #[test]
    fn nan_coordinate_reports_line() {
        let text = format!("{EVENT_CSV_HEADER}\n1,0.0,0.0,0.0\n1,NaN,0.0,1.0\n");
        let err = decode_shots(text.as_bytes()).unwrap_err();
        match err {
            Error::Decode { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn malformed_row_reports_line() {
        let text = format!("{EVENT_CSV_HEADER}\n1,0.0,0.0\n");
        let err = decode_shots(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"));
    }

    #[test]
    fn duplicate_shot_id_rejected() {
        let a = Shot::new(1, vec![DetectionEvent::new(0.0, 0.0, 0.0)]);
        let b = Shot::new(1, vec![DetectionEvent::new(1.0, 0.0, 0.0)]);
        assert!(encode_shots(&[a, b]).is_err());
    }

    #[test]
    fn encoding_nan_names_shot() {
        let shot = Shot::new(9, vec![DetectionEvent::new(0.0, f64::NAN, 0.0)]);
        let err = encode_shots(&[shot]).unwrap_err();
        assert!(err.to_string().contains("shot 9"));
    }

    #[test]
    fn round_trip_ten_thousand_random_events() {
        let mut rng = crate::rng::stream(crate::types::RngSpec::new(11, 0), 0xC5, 0);
        let shots: Vec<Shot> = (0..100)
            .map(|id| {
                let events = (0..100)
                    .map(|_| {
                        DetectionEvent::new(
                            rng.gen_range(-35.0..35.0),
                            rng.gen_range(-35.0..35.0),
                            rng.gen_range(0.0..1e6),
                        )
                    })
                    .collect();
                Shot::new(id, events)
            })
            .collect();
        let decoded = decode_shots(&encode_shots(&shots).unwrap()).unwrap();
        assert_eq!(shots, decoded);
    }

    proptest! {
        #[test]
        fn round_trip_is_identity(raw in proptest::collection::vec(
            (0u64..20, -1e6f64..1e6, -1e6f64..1e6, 0f64..1e9), 0..200))
        {
            // group by id, preserving first-appearance order, as a generator
            let mut order = Vec::new();
            let mut groups: std::collections::HashMap<u64, Vec<DetectionEvent>> =
                std::collections::HashMap::new();
            for (id, x, y, t) in raw {
                groups.entry(id).or_insert_with(|| { order.push(id); Vec::new() })
                    .push(DetectionEvent::new(x, y, t));
            }
            let shots: Vec<Shot> = order.into_iter()
                .map(|id| Shot::new(id, groups.remove(&id).unwrap()))
                .collect();
            let decoded = decode_shots(&encode_shots(&shots).unwrap()).unwrap();
            prop_assert_eq!(shots, decoded);
        }
    }
}

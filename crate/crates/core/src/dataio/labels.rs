//! YOLO-style text label and detection files.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boxgeom::NormBox;

/// Coordinates this far outside `[0,1]` are clamped instead of rejected.
pub const COORD_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseErrorKind {
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("field {index} ({text:?}) is not a number")]
    NotNumeric { index: usize, text: String },
    #[error("class id {0:?} is not a non-negative integer")]
    BadClass(String),
    #[error("class id {class} outside declared range 0..{num_classes}")]
    ClassOutOfRange { class: u32, num_classes: u32 },
    #[error("coordinate {field} = {value} outside [0,1]")]
    CoordRange { field: &'static str, value: f64 },
    #[error("confidence {0} outside [0,1]")]
    Confidence(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub class_id: u32,
    pub bbox: NormBox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub class_id: u32,
    pub confidence: f64,
    pub bbox: NormBox,
}

/// Column order of a detection file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetFormat {
    /// `class conf cx cy w h`
    #[default]
    ConfFirst,
    /// `class cx cy w h conf`
    ConfLast,
}

impl FromStr for DetFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "conf-first" | "class,conf,cx,cy,w,h" => Ok(DetFormat::ConfFirst),
            "conf-last" | "class,cx,cy,w,h,conf" => Ok(DetFormat::ConfLast),
            other => Err(format!(
                "unknown detection format {other:?} (expected conf-first or conf-last)"
            )),
        }
    }
}

fn parse_class(text: &str, line: usize, num_classes: Option<u32>) -> Result<u32, ParseError> {
    let class: u32 = text.parse().map_err(|_| ParseError {
        line,
        kind: ParseErrorKind::BadClass(text.to_string()),
    })?;
    if let Some(n) = num_classes {
        if class >= n {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::ClassOutOfRange {
                    class,
                    num_classes: n,
                },
            });
        }
    }
    Ok(class)
}

fn parse_numbers<const N: usize>(
    fields: &[&str],
    first_index: usize,
    line: usize,
) -> Result<[f64; N], ParseError> {
    let mut out = [0.0; N];
    for (k, text) in fields.iter().enumerate() {
        let v: f64 = text.parse().map_err(|_| ParseError {
            line,
            kind: ParseErrorKind::NotNumeric {
                index: first_index + k,
                text: text.to_string(),
            },
        })?;
        if !v.is_finite() {
            return Err(ParseError {
                line,
                kind: ParseErrorKind::NotNumeric {
                    index: first_index + k,
                    text: text.to_string(),
                },
            });
        }
        out[k] = v;
    }
    Ok(out)
}

fn unit_coord(field: &'static str, value: f64, line: usize) -> Result<f64, ParseError> {
    if (-COORD_SLACK..=1.0 + COORD_SLACK).contains(&value) {
        Ok(value.clamp(0.0, 1.0))
    } else {
        Err(ParseError {
            line,
            kind: ParseErrorKind::CoordRange { field, value },
        })
    }
}

fn norm_box(c: [f64; 4], line: usize) -> Result<NormBox, ParseError> {
    let cx = unit_coord("cx", c[0], line)?;
    let cy = unit_coord("cy", c[1], line)?;
    let w = unit_coord("w", c[2], line)?;
    let h = unit_coord("h", c[3], line)?;
    NormBox::new(cx, cy, w, h).map_err(|_| {
        let (field, value) = if w <= 0.0 { ("w", w) } else { ("h", h) };
        ParseError {
            line,
            kind: ParseErrorKind::CoordRange { field, value },
        }
    })
}

/// Non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split_whitespace().collect::<Vec<_>>()))
        .filter(|(_, f)| !f.is_empty())
}

pub fn parse_label_file(text: &str) -> Result<Vec<Annotation>, ParseError> {
    parse_label_file_with(text, None)
}

/// Like [`parse_label_file`], rejecting class ids `>= num_classes` when given.
pub fn parse_label_file_with(
    text: &str,
    num_classes: Option<u32>,
) -> Result<Vec<Annotation>, ParseError> {
    content_lines(text)
        .map(|(line, fields)| {
            if fields.len() != 5 {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::FieldCount {
                        expected: 5,
                        found: fields.len(),
                    },
                });
            }
            let class_id = parse_class(fields[0], line, num_classes)?;
            let coords = parse_numbers::<4>(&fields[1..], 1, line)?;
            Ok(Annotation {
                class_id,
                bbox: norm_box(coords, line)?,
            })
        })
        .collect()
}

pub fn parse_detection_file(text: &str) -> Result<Vec<Detection>, ParseError> {
    parse_detection_file_with(text, DetFormat::ConfFirst, None)
}

pub fn parse_detection_file_with(
    text: &str,
    format: DetFormat,
    num_classes: Option<u32>,
) -> Result<Vec<Detection>, ParseError> {
    content_lines(text)
        .map(|(line, fields)| {
            if fields.len() != 6 {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::FieldCount {
                        expected: 6,
                        found: fields.len(),
                    },
                });
            }
            let class_id = parse_class(fields[0], line, num_classes)?;
            let nums = parse_numbers::<5>(&fields[1..], 1, line)?;
            let (confidence, coords) = match format {
                DetFormat::ConfFirst => (nums[0], [nums[1], nums[2], nums[3], nums[4]]),
                DetFormat::ConfLast => (nums[4], [nums[0], nums[1], nums[2], nums[3]]),
            };
            if !(0.0..=1.0).contains(&confidence) {
                return Err(ParseError {
                    line,
                    kind: ParseErrorKind::Confidence(confidence),
                });
            }
            Ok(Detection {
                class_id,
                confidence,
                bbox: norm_box(coords, line)?,
            })
        })
        .collect()
}

/// Canonical label text: six-decimal fixed point, one line per box.
pub fn serialize_labels(annotations: &[Annotation]) -> String {
    let mut out = String::new();
    for a in annotations {
        let b = &a.bbox;
        let _ = writeln!(
            out,
            "{} {:.6} {:.6} {:.6} {:.6}",
            a.class_id,
            b.cx(),
            b.cy(),
            b.w(),
            b.h()
        );
    }
    out
}

pub fn serialize_detections(detections: &[Detection], format: DetFormat) -> String {
    let mut out = String::new();
    for d in detections {
        let b = &d.bbox;
        let _ = match format {
            DetFormat::ConfFirst => writeln!(
                out,
                "{} {:.6} {:.6} {:.6} {:.6} {:.6}",
                d.class_id,
                d.confidence,
                b.cx(),
                b.cy(),
                b.w(),
                b.h()
            ),
            DetFormat::ConfLast => writeln!(
                out,
                "{} {:.6} {:.6} {:.6} {:.6} {:.6}",
                d.class_id,
                b.cx(),
                b.cy(),
                b.w(),
                b.h(),
                d.confidence
            ),
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn label_examples() {
        assert!(parse_label_file("").unwrap().is_empty());
        let one = parse_label_file("0 0.5 0.5 1.0 1.0\n").unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].class_id, 0);
        assert_eq!(one[0].bbox, NormBox::new(0.5, 0.5, 1.0, 1.0).unwrap());

        let two = parse_label_file("0 0.25 0.5 0.1 0.2\n0 0.7 0.7 0.2 0.2\n").unwrap();
        assert_eq!(
            two,
            vec![
                Annotation {
                    class_id: 0,
                    bbox: NormBox::new(0.25, 0.5, 0.1, 0.2).unwrap()
                },
                Annotation {
                    class_id: 0,
                    bbox: NormBox::new(0.7, 0.7, 0.2, 0.2).unwrap()
                },
            ]
        );
    }

    #[test]
    fn blank_lines_and_whitespace_tolerated() {
        let a = parse_label_file("\n  0\t0.5 0.5   0.2 0.2  \r\n\n\n").unwrap();
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn label_errors_carry_line_numbers() {
        let e = parse_label_file("0 0.5 0.5 0.1 0.1\n0 0.5 0.5 0.1\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(matches!(
            e.kind,
            ParseErrorKind::FieldCount {
                expected: 5,
                found: 4
            }
        ));

        let e = parse_label_file("\n\n0 0.5 abc 0.1 0.1").unwrap_err();
        assert_eq!(e.line, 3);
        assert!(matches!(
            e.kind,
            ParseErrorKind::NotNumeric { index: 2, .. }
        ));

        let e = parse_label_file("0 1.2 0.5 0.1 0.1").unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::CoordRange { field: "cx", .. }
        ));

        let e = parse_label_file("-1 0.5 0.5 0.1 0.1").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::BadClass(_)));

        let e = parse_label_file("0 0.5 0.5 0 0.1").unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::CoordRange { field: "w", .. }
        ));

        let e = parse_label_file("0 nan 0.5 0.1 0.1").unwrap_err();
        assert!(matches!(e.kind, ParseErrorKind::NotNumeric { .. }));

        let e = parse_label_file_with("1 0.5 0.5 0.1 0.1", Some(1)).unwrap_err();
        assert!(matches!(
            e.kind,
            ParseErrorKind::ClassOutOfRange { class: 1, .. }
        ));
    }

    #[test]
    fn round_off_is_clamped() {
        let a = parse_label_file("0 1.0000005 -0.0000003 0.5 1.0000009").unwrap();
        assert_eq!(a[0].bbox.cx(), 1.0);
        assert_eq!(a[0].bbox.cy(), 0.0);
        assert_eq!(a[0].bbox.h(), 1.0);
        assert!(parse_label_file("0 1.00001 0.5 0.5 0.5").is_err());
    }

    #[test]
    fn detection_examples() {
        let d = parse_detection_file("0 1.0 0.5 0.5 1.0 1.0\n").unwrap();
        assert_eq!(d.len(), 1);
        assert_eq!(d[0].confidence, 1.0);
        assert!(parse_detection_file("").unwrap().is_empty());
        let two = parse_detection_file("0 0.9 0.25 0.5 0.1 0.2\n0 0.3 0.7 0.7 0.2 0.2\n").unwrap();
        assert_eq!(two.len(), 2);
        assert_eq!(two[0].confidence, 0.9);
        assert_eq!(two[0].bbox, NormBox::new(0.25, 0.5, 0.1, 0.2).unwrap());
        assert_eq!(two[1].confidence, 0.3);
        assert_eq!(two[1].bbox, NormBox::new(0.7, 0.7, 0.2, 0.2).unwrap());
    }

    #[test]
    fn detection_confidence_checked() {
        let e = parse_detection_file("0 0.5 0.5 0.5 0.1 0.1\n0 1.5 0.5 0.5 0.1 0.1").unwrap_err();
        assert_eq!(e.line, 2);
        assert_eq!(e.kind, ParseErrorKind::Confidence(1.5));
        assert!(parse_detection_file("0 0.5 0.5 0.1 0.1").is_err());
    }

    #[test]
    fn conf_last_column_order() {
        let d =
            parse_detection_file_with("0 0.25 0.5 0.1 0.2 0.9", DetFormat::ConfLast, None).unwrap();
        assert_eq!(d[0].confidence, 0.9);
        assert_eq!(d[0].bbox.cx(), 0.25);
        assert_eq!(
            "conf-last".parse::<DetFormat>().unwrap(),
            DetFormat::ConfLast
        );
        assert!("cxcy".parse::<DetFormat>().is_err());
    }

    fn arb_annotation() -> impl Strategy<Value = Annotation> {
        (
            0u32..3,
            0u32..=1_000_000,
            0u32..=1_000_000,
            1u32..=1_000_000,
            1u32..=1_000_000,
        )
            .prop_map(|(c, cx, cy, w, h)| Annotation {
                class_id: c,
                bbox: NormBox::new(
                    cx as f64 / 1e6,
                    cy as f64 / 1e6,
                    w as f64 / 1e6,
                    h as f64 / 1e6,
                )
                .unwrap(),
            })
    }

    proptest! {
        #[test]
        fn canonical_labels_round_trip(anns in proptest::collection::vec(arb_annotation(), 0..20)) {
            let text = serialize_labels(&anns);
            prop_assert_eq!(parse_label_file(&text).unwrap(), anns);
        }

        #[test]
        fn parser_never_panics(text in "[0-9 .\\-e\n]{0,80}") {
            let _ = parse_label_file(&text);
            let _ = parse_detection_file(&text);
        }
    }
}

use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

/// Box-level outcome counts. `tn` is only meaningful per image: an image with
/// no ground truth and no detections counts as one true negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: Option<u64>,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64) -> Self {
        Self {
            tp,
            fp,
            fn_,
            tn: None,
        }
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let tn = match (self.tn, rhs.tn) {
            (None, None) => None,
            (a, b) => Some(a.unwrap_or(0) + b.unwrap_or(0)),
        };
        Self {
            tp: self.tp + rhs.tp,
            fp: self.fp + rhs.fp,
            fn_: self.fn_ + rhs.fn_,
            tn,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

/// A ratio that may have had a zero denominator, in which case `value` is 0
/// and `degenerate` is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub value: f64,
    pub degenerate: bool,
}

fn rate(num: u64, den: u64) -> Rate {
    if den == 0 {
        Rate {
            value: 0.0,
            degenerate: true,
        }
    } else {
        Rate {
            value: num as f64 / den as f64,
            degenerate: false,
        }
    }
}

/// `tp / (tp + fp)`
pub fn precision(c: &ConfusionCounts) -> Rate {
    rate(c.tp, c.tp + c.fp)
}

/// `tp / (tp + fn)`
pub fn recall(c: &ConfusionCounts) -> Rate {
    rate(c.tp, c.tp + c.fn_)
}

/// Harmonic mean of precision and recall; 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r <= 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precision_examples() {
        assert_eq!(precision(&ConfusionCounts::new(80, 20, 0)).value, 0.8);
        let z = precision(&ConfusionCounts::new(0, 0, 3));
        assert_eq!(z.value, 0.0);
        assert!(z.degenerate);
        let p = precision(&ConfusionCounts::new(5, 0, 0));
        assert_eq!(p.value, 1.0);
        assert!(!p.degenerate);
    }

    #[test]
    fn recall_examples() {
        assert_eq!(recall(&ConfusionCounts::new(80, 0, 20)).value, 0.8);
        let z = recall(&ConfusionCounts::new(0, 4, 0));
        assert_eq!(z.value, 0.0);
        assert!(z.degenerate);
        assert_eq!(recall(&ConfusionCounts::new(7, 2, 0)).value, 1.0);
    }

    #[test]
    fn f1_examples() {
        assert!((f1(0.80, 0.68) - 0.735).abs() <= 0.0005);
        assert!((f1(1.00, 0.89) - 0.942).abs() <= 0.0005);
        assert_eq!(f1(0.0, 0.7), 0.0);
        assert_eq!(f1(0.0, 0.0), 0.0);
    }

    #[test]
    fn counts_add_tn_only_when_present() {
        let a = ConfusionCounts::new(1, 2, 3);
        assert_eq!((a + a).tn, None);
        let b = ConfusionCounts {
            tn: Some(1),
            ..ConfusionCounts::default()
        };
        assert_eq!((a + b).tn, Some(1));
        assert_eq!((a + b).tp, 1);
    }

    proptest! {
        #[test]
        fn f1_symmetric_and_bounded(p in 0.0..=1.0f64, r in 0.0..=1.0f64) {
            prop_assert_eq!(f1(p, r), f1(r, p));
            let v = f1(p, r);
            prop_assert!(v <= 2.0 * p.min(r) + 1e-15);
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }
}

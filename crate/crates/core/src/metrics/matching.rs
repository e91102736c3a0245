//! Greedy one-to-one assignment of detections to ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::counts::ConfusionCounts;
use crate::boxgeom::{iou, BBox};
use crate::dataio::{Annotation, Detection};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatchRecord {
    /// Position of the detection in the input list.
    pub det_index: usize,
    pub class_id: u32,
    pub confidence: f64,
    pub is_tp: bool,
    pub matched_gt: Option<usize>,
    /// IoU with the best still-unmatched ground truth of the same class (0 if none).
    pub iou: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// Records in descending confidence, ties in input order.
    pub records: Vec<MatchRecord>,
    pub total_gt: usize,
    pub gt_per_class: BTreeMap<u32, usize>,
    pub iou_threshold: f64,
}

impl MatchResult {
    pub fn empty(iou_threshold: f64) -> Self {
        Self {
            records: Vec::new(),
            total_gt: 0,
            gt_per_class: BTreeMap::new(),
            iou_threshold,
        }
    }

    pub fn counts(&self) -> ConfusionCounts {
        let tp = self.records.iter().filter(|r| r.is_tp).count() as u64;
        ConfusionCounts::new(
            tp,
            self.records.len() as u64 - tp,
            self.total_gt as u64 - tp,
        )
    }

    /// Counts restricted to detections with confidence `>= min_confidence`.
    pub fn counts_at(&self, min_confidence: f64) -> ConfusionCounts {
        let kept = self
            .records
            .iter()
            .filter(|r| r.confidence >= min_confidence);
        let (tp, fp) = kept.fold((0u64, 0u64), |(tp, fp), r| {
            if r.is_tp {
                (tp + 1, fp)
            } else {
                (tp, fp + 1)
            }
        });
        ConfusionCounts::new(tp, fp, self.total_gt as u64 - tp)
    }

    /// The sub-result for one class. Matching never crosses classes, so this
    /// equals matching the class-filtered inputs directly.
    pub fn for_class(&self, class_id: u32) -> MatchResult {
        let total_gt = self.gt_per_class.get(&class_id).copied().unwrap_or(0);
        let mut gt_per_class = BTreeMap::new();
        if total_gt > 0 {
            gt_per_class.insert(class_id, total_gt);
        }
        MatchResult {
            records: self
                .records
                .iter()
                .filter(|r| r.class_id == class_id)
                .copied()
                .collect(),
            total_gt,
            gt_per_class,
            iou_threshold: self.iou_threshold,
        }
    }

    /// Concatenate per-image results in the given order. The order fixes how
    /// confidence ties across images are ranked, so callers pass images sorted
    /// by id.
    pub fn merge<'a, I>(parts: I, iou_threshold: f64) -> MatchResult
    where
        I: IntoIterator<Item = &'a MatchResult>,
    {
        let mut out = MatchResult::empty(iou_threshold);
        for p in parts {
            out.records.extend_from_slice(&p.records);
            out.total_gt += p.total_gt;
            for (&c, &n) in &p.gt_per_class {
                *out.gt_per_class.entry(c).or_insert(0) += n;
            }
        }
        out
    }
}

/// A detection resolved to a concrete frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredBox {
    pub class_id: u32,
    pub confidence: f64,
    pub bbox: BBox,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthBox {
    pub class_id: u32,
    pub bbox: BBox,
}

/// Pairwise IoU between detections and ground truths, plus the ranking order.
/// Built once per image and reused for every IoU threshold.
#[derive(Debug, Clone)]
pub struct IouTable {
    det_class: Vec<u32>,
    det_conf: Vec<f64>,
    gt_class: Vec<u32>,
    /// row-major `[det][gt]`
    ious: Vec<f64>,
    order: Vec<usize>,
}

impl IouTable {
    pub fn new(dets: &[ScoredBox], gts: &[TruthBox]) -> Self {
        let mut ious = Vec::with_capacity(dets.len() * gts.len());
        for d in dets {
            for g in gts {
                ious.push(iou(&d.bbox, &g.bbox));
            }
        }
        let mut order: Vec<usize> = (0..dets.len()).collect();
        // stable: equal confidences keep input order
        order.sort_by(|&a, &b| dets[b].confidence.total_cmp(&dets[a].confidence));
        Self {
            det_class: dets.iter().map(|d| d.class_id).collect(),
            det_conf: dets.iter().map(|d| d.confidence).collect(),
            gt_class: gts.iter().map(|g| g.class_id).collect(),
            ious,
            order,
        }
    }

    pub fn from_normalized(dets: &[Detection], gts: &[Annotation]) -> Self {
        let dets: Vec<ScoredBox> = dets
            .iter()
            .map(|d| ScoredBox {
                class_id: d.class_id,
                confidence: d.confidence,
                bbox: d.bbox.to_unit_bbox(),
            })
            .collect();
        let gts: Vec<TruthBox> = gts
            .iter()
            .map(|g| TruthBox {
                class_id: g.class_id,
                bbox: g.bbox.to_unit_bbox(),
            })
            .collect();
        Self::new(&dets, &gts)
    }

    pub fn assign(&self, iou_threshold: f64) -> MatchResult {
        let n_gt = self.gt_class.len();
        let mut taken = vec![false; n_gt];
        let mut records = Vec::with_capacity(self.order.len());
        for &d in &self.order {
            let class_id = self.det_class[d];
            let row = &self.ious[d * n_gt..(d + 1) * n_gt];
            let mut best: Option<(usize, f64)> = None;
            for (g, &v) in row.iter().enumerate() {
                if taken[g] || self.gt_class[g] != class_id {
                    continue;
                }
                // strict `>` keeps the lowest index on IoU ties
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((g, v));
                }
            }
            let (matched_gt, best_iou) = match best {
                Some((g, v)) if v >= iou_threshold && v > 0.0 => {
                    taken[g] = true;
                    (Some(g), v)
                }
                Some((_, v)) => (None, v),
                None => (None, 0.0),
            };
            records.push(MatchRecord {
                det_index: d,
                class_id,
                confidence: self.det_conf[d],
                is_tp: matched_gt.is_some(),
                matched_gt,
                iou: best_iou,
            });
        }
        let mut gt_per_class = BTreeMap::new();
        for &c in &self.gt_class {
            *gt_per_class.entry(c).or_insert(0) += 1;
        }
        MatchResult {
            records,
            total_gt: n_gt,
            gt_per_class,
            iou_threshold,
        }
    }
}

/// Greedy matching in descending confidence: each detection takes the
/// unmatched same-class ground truth with the highest IoU if that IoU reaches
/// the threshold, otherwise it is a false positive.
pub fn match_detections(dets: &[Detection], gts: &[Annotation], iou_threshold: f64) -> MatchResult {
    IouTable::from_normalized(dets, gts).assign(iou_threshold)
}

/// [`match_detections`] on boxes already in a common pixel frame.
pub fn match_boxes(dets: &[ScoredBox], gts: &[TruthBox], iou_threshold: f64) -> MatchResult {
    IouTable::new(dets, gts).assign(iou_threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boxgeom::NormBox;
    use proptest::prelude::*;

    fn det(conf: f64, cx: f64, cy: f64, w: f64, h: f64) -> Detection {
        Detection {
            class_id: 0,
            confidence: conf,
            bbox: NormBox::new(cx, cy, w, h).unwrap(),
        }
    }

    fn gt(cx: f64, cy: f64, w: f64, h: f64) -> Annotation {
        Annotation {
            class_id: 0,
            bbox: NormBox::new(cx, cy, w, h).unwrap(),
        }
    }

    #[test]
    fn exact_hit() {
        let m = match_detections(
            &[det(0.9, 0.5, 0.5, 0.2, 0.2)],
            &[gt(0.5, 0.5, 0.2, 0.2)],
            0.5,
        );
        assert_eq!(m.counts(), ConfusionCounts::new(1, 0, 0));
        assert_eq!(m.records[0].matched_gt, Some(0));
    }

    #[test]
    fn no_detections() {
        let m = match_detections(&[], &[gt(0.2, 0.2, 0.1, 0.1), gt(0.7, 0.7, 0.1, 0.1)], 0.5);
        assert_eq!(m.counts(), ConfusionCounts::new(0, 0, 2));
    }

    #[test]
    fn duplicate_detection_is_fp_and_higher_confidence_wins() {
        let g = [gt(0.5, 0.5, 0.2, 0.2)];
        let dets = [det(0.4, 0.5, 0.5, 0.2, 0.2), det(0.8, 0.51, 0.5, 0.2, 0.2)];
        let m = match_detections(&dets, &g, 0.5);
        assert_eq!(m.counts(), ConfusionCounts::new(1, 1, 0));
        let tp: Vec<_> = m.records.iter().filter(|r| r.is_tp).collect();
        assert_eq!(tp[0].det_index, 1);
        assert_eq!(m.records[0].confidence, 0.8);
    }

    #[test]
    fn class_mismatch_never_matches() {
        let mut d = det(0.9, 0.5, 0.5, 0.2, 0.2);
        d.class_id = 1;
        let m = match_detections(&[d], &[gt(0.5, 0.5, 0.2, 0.2)], 0.5);
        assert_eq!(m.counts(), ConfusionCounts::new(0, 1, 1));
        assert_eq!(m.for_class(1).total_gt, 0);
        assert_eq!(m.for_class(0).records.len(), 0);
    }

    #[test]
    fn equal_confidence_keeps_input_order() {
        let g = [gt(0.5, 0.5, 0.2, 0.2)];
        let dets = [det(0.5, 0.5, 0.5, 0.2, 0.2), det(0.5, 0.5, 0.5, 0.2, 0.2)];
        let m = match_detections(&dets, &g, 0.5);
        assert_eq!(m.records[0].det_index, 0);
        assert!(m.records[0].is_tp);
        assert!(!m.records[1].is_tp);
    }

    #[test]
    fn below_threshold_is_fp() {
        // IoU 1/3 between (0,0,0.2,0.2)-ish boxes shifted by half their width
        let m = match_detections(
            &[det(0.9, 0.6, 0.5, 0.2, 0.2)],
            &[gt(0.5, 0.5, 0.2, 0.2)],
            0.5,
        );
        assert_eq!(m.counts(), ConfusionCounts::new(0, 1, 1));
        assert!((m.records[0].iou - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn counts_at_cut() {
        let g = [gt(0.2, 0.2, 0.1, 0.1), gt(0.7, 0.7, 0.1, 0.1)];
        let dets = [det(0.9, 0.2, 0.2, 0.1, 0.1), det(0.3, 0.7, 0.7, 0.1, 0.1)];
        let m = match_detections(&dets, &g, 0.5);
        assert_eq!(m.counts_at(0.5), ConfusionCounts::new(1, 0, 1));
        assert_eq!(m.counts_at(0.0), ConfusionCounts::new(2, 0, 0));
    }

    // --- oracle: enumerate assignments on pixel-grid boxes --------------------

    /// Independent statement of the greedy rule: walk detections by
    /// (confidence desc, index asc); a detection is a TP iff some free GT has
    /// IoU ≥ t, and it claims the free GT of maximal IoU (lowest index on ties).
    /// IoU comes from unit-cell counting, not the analytic formula.
    fn oracle(dets: &[(f64, [i64; 4])], gts: &[[i64; 4]], t: f64) -> Vec<(usize, Option<usize>)> {
        let cells = |r: [i64; 4]| -> Vec<(i64, i64)> {
            (r[1]..r[3])
                .flat_map(|y| (r[0]..r[2]).map(move |x| (x, y)))
                .collect()
        };
        let raster_iou = |a: [i64; 4], b: [i64; 4]| -> f64 {
            let ca = cells(a);
            let cb = cells(b);
            let inter = ca.iter().filter(|c| cb.contains(c)).count();
            let union = ca.len() + cb.len() - inter;
            if union == 0 {
                0.0
            } else {
                inter as f64 / union as f64
            }
        };
        let mut idx: Vec<usize> = (0..dets.len()).collect();
        idx.sort_by(|&a, &b| dets[b].0.partial_cmp(&dets[a].0).unwrap().then(a.cmp(&b)));
        let mut free = vec![true; gts.len()];
        let mut out = vec![];
        for d in idx {
            let mut cand: Vec<(usize, f64)> = (0..gts.len())
                .filter(|&g| free[g])
                .map(|g| (g, raster_iou(dets[d].1, gts[g])))
                .collect();
            cand.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
            match cand.first() {
                Some(&(g, v)) if v >= t && v > 0.0 => {
                    free[g] = false;
                    out.push((d, Some(g)));
                }
                _ => out.push((d, None)),
            }
        }
        out
    }

    fn grid_box() -> impl Strategy<Value = [i64; 4]> {
        (0i64..8, 0i64..8, 1i64..5, 1i64..5).prop_map(|(x, y, w, h)| [x, y, x + w, y + h])
    }

    fn to_bbox(r: [i64; 4]) -> BBox {
        BBox::new(r[0] as f64, r[1] as f64, r[2] as f64, r[3] as f64).unwrap()
    }

    proptest! {
        #[test]
        fn greedy_matches_oracle(
            dets in proptest::collection::vec((0u8..10, grid_box()), 0..5),
            gts in proptest::collection::vec(grid_box(), 0..5),
            t in prop_oneof![Just(0.1), Just(0.3), Just(0.5), Just(0.75)],
        ) {
            let dets: Vec<(f64, [i64; 4])> = dets.into_iter().map(|(c, b)| (c as f64 / 10.0, b)).collect();
            let sb: Vec<ScoredBox> = dets.iter().map(|&(c, b)| ScoredBox { class_id: 0, confidence: c, bbox: to_bbox(b) }).collect();
            let tb: Vec<TruthBox> = gts.iter().map(|&b| TruthBox { class_id: 0, bbox: to_bbox(b) }).collect();
            let m = match_boxes(&sb, &tb, t);
            let got: Vec<(usize, Option<usize>)> = m.records.iter().map(|r| (r.det_index, r.matched_gt)).collect();
            prop_assert_eq!(got, oracle(&dets, &gts, t));

            let c = m.counts();
            prop_assert_eq!(c.tp + c.fn_, gts.len() as u64);
            prop_assert_eq!(c.tp + c.fp, dets.len() as u64);
            let mut used: Vec<usize> = m.records.iter().filter_map(|r| r.matched_gt).collect();
            let n = used.len();
            used.sort();
            used.dedup();
            prop_assert_eq!(used.len(), n);
            for r in &m.records {
                prop_assert!(!r.is_tp || r.iou >= t);
            }
        }
    }
}

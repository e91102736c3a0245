//! Train/validation/test partitioning and the manifest file.

use std::collections::HashSet;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::labels::Annotation;
use crate::boxgeom::ImageDims;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SplitError {
    #[error("cannot split an empty record set")]
    Empty,
    #[error("split ratio parts must be positive, got {0}:{1}:{2}")]
    ZeroPart(u64, u64, u64),
    #[error("explicit counts {train}+{val}+{test} do not sum to {n} records")]
    CountMismatch {
        train: usize,
        val: usize,
        test: usize,
        n: usize,
    },
    #[error("duplicate image id {0:?}")]
    DuplicateId(String),
    #[error("invalid split specification {0:?}")]
    Syntax(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageRecord {
    pub image_id: String,
    pub dims: ImageDims,
    pub annotations: Vec<Annotation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitSpec {
    /// Proportional split; val and test are rounded, train takes the rest.
    Ratio(u64, u64, u64),
    /// Exact part sizes, which must sum to the record count.
    Counts(usize, usize, usize),
}

impl SplitSpec {
    pub const DEFAULT_RATIO: SplitSpec = SplitSpec::Ratio(11, 3, 1);

    /// Part sizes `(train, val, test)` for `n` records.
    pub fn counts_for(&self, n: usize) -> Result<(usize, usize, usize), SplitError> {
        match *self {
            SplitSpec::Ratio(a, b, c) => {
                if a == 0 || b == 0 || c == 0 {
                    return Err(SplitError::ZeroPart(a, b, c));
                }
                let total = (a + b + c) as f64;
                let val = (n as f64 * b as f64 / total).round() as usize;
                let test = (n as f64 * c as f64 / total).round() as usize;
                Ok((n - val - test, val, test))
            }
            SplitSpec::Counts(train, val, test) => {
                if train + val + test != n {
                    return Err(SplitError::CountMismatch {
                        train,
                        val,
                        test,
                        n,
                    });
                }
                Ok((train, val, test))
            }
        }
    }
}

/// Parses `a:b:c` as a ratio. Use [`SplitSpec::parse_counts`] for counts.
impl FromStr for SplitSpec {
    type Err = SplitError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let [a, b, c] = parse_triple(s)?;
        Ok(SplitSpec::Ratio(a, b, c))
    }
}

impl SplitSpec {
    pub fn parse_counts(s: &str) -> Result<Self, SplitError> {
        let [a, b, c] = parse_triple(s)?;
        Ok(SplitSpec::Counts(a as usize, b as usize, c as usize))
    }
}

fn parse_triple(s: &str) -> Result<[u64; 3], SplitError> {
    let parts: Vec<u64> = s
        .split(':')
        .map(|p| p.trim().parse::<u64>())
        .collect::<Result<_, _>>()
        .map_err(|_| SplitError::Syntax(s.to_string()))?;
    parts
        .try_into()
        .map_err(|_| SplitError::Syntax(s.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub train: Vec<ImageRecord>,
    pub validation: Vec<ImageRecord>,
    pub test: Vec<ImageRecord>,
    pub split_seed: u64,
}

impl Manifest {
    pub fn to_file(&self) -> ManifestFile {
        let ids = |v: &[ImageRecord]| v.iter().map(|r| r.image_id.clone()).collect();
        ManifestFile {
            seed: self.split_seed,
            train: ids(&self.train),
            val: ids(&self.validation),
            test: ids(&self.test),
        }
    }
}

/// On-disk manifest: `{"seed", "train": [ids], "val": [ids], "test": [ids]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestFile {
    pub seed: u64,
    pub train: Vec<String>,
    pub val: Vec<String>,
    pub test: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitName {
    Train,
    Val,
    #[default]
    Test,
    All,
}

impl FromStr for SplitName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(SplitName::Train),
            "val" | "validation" => Ok(SplitName::Val),
            "test" => Ok(SplitName::Test),
            "all" => Ok(SplitName::All),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

impl ManifestFile {
    pub fn ids(&self, split: SplitName) -> Vec<String> {
        match split {
            SplitName::Train => self.train.clone(),
            SplitName::Val => self.val.clone(),
            SplitName::Test => self.test.clone(),
            SplitName::All => self
                .train
                .iter()
                .chain(&self.val)
                .chain(&self.test)
                .cloned()
                .collect(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

/// Seeded shuffle followed by contiguous train/val/test assignment.
pub fn split_dataset(
    records: Vec<ImageRecord>,
    spec: SplitSpec,
    seed: u64,
) -> Result<Manifest, SplitError> {
    if records.is_empty() {
        return Err(SplitError::Empty);
    }
    let mut seen = HashSet::with_capacity(records.len());
    for r in &records {
        if !seen.insert(r.image_id.as_str()) {
            return Err(SplitError::DuplicateId(r.image_id.clone()));
        }
    }
    let (n_train, n_val, _) = spec.counts_for(records.len())?;

    let mut shuffled = records;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    shuffled.shuffle(&mut rng);

    let test = shuffled.split_off(n_train + n_val);
    let validation = shuffled.split_off(n_train);
    Ok(Manifest {
        train: shuffled,
        validation,
        test,
        split_seed: seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn records(n: usize) -> Vec<ImageRecord> {
        (0..n)
            .map(|i| ImageRecord {
                image_id: format!("img_{i:05}"),
                dims: ImageDims::new(640, 360).unwrap(),
                annotations: vec![],
            })
            .collect()
    }

    fn sizes(m: &Manifest) -> (usize, usize, usize) {
        (m.train.len(), m.validation.len(), m.test.len())
    }

    #[test]
    fn explicit_counts_reproduce_reference_split() {
        let m = split_dataset(records(1784), SplitSpec::Counts(1265, 401, 118), 0).unwrap();
        assert_eq!(sizes(&m), (1265, 401, 118));
    }

    #[test]
    fn exact_ratio() {
        let m = split_dataset(records(15), SplitSpec::DEFAULT_RATIO, 3).unwrap();
        assert_eq!(sizes(&m), (11, 3, 1));
    }

    #[test]
    fn ratio_rounding_on_reference_total() {
        // 1784·3/15 = 356.8 → 357, 1784/15 = 118.93 → 119
        assert_eq!(
            SplitSpec::DEFAULT_RATIO.counts_for(1784).unwrap(),
            (1308, 357, 119)
        );
    }

    #[test]
    fn seeded_split_is_deterministic() {
        let a = split_dataset(records(100), SplitSpec::DEFAULT_RATIO, 7).unwrap();
        let b = split_dataset(records(100), SplitSpec::DEFAULT_RATIO, 7).unwrap();
        assert_eq!(a, b);
        let c = split_dataset(records(100), SplitSpec::DEFAULT_RATIO, 8).unwrap();
        assert_ne!(a.to_file().train, c.to_file().train);
    }

    #[test]
    fn errors() {
        assert_eq!(
            split_dataset(vec![], SplitSpec::DEFAULT_RATIO, 0),
            Err(SplitError::Empty)
        );
        assert!(matches!(
            split_dataset(records(10), SplitSpec::Counts(5, 3, 1), 0),
            Err(SplitError::CountMismatch { .. })
        ));
        assert!(matches!(
            split_dataset(records(10), SplitSpec::Ratio(1, 0, 1), 0),
            Err(SplitError::ZeroPart(..))
        ));
        let mut dup = records(3);
        dup[2].image_id = dup[0].image_id.clone();
        assert!(matches!(
            split_dataset(dup, SplitSpec::DEFAULT_RATIO, 0),
            Err(SplitError::DuplicateId(_))
        ));
    }

    #[test]
    fn spec_parsing() {
        assert_eq!(
            "11:3:1".parse::<SplitSpec>().unwrap(),
            SplitSpec::Ratio(11, 3, 1)
        );
        assert_eq!(
            SplitSpec::parse_counts("1265:401:118").unwrap(),
            SplitSpec::Counts(1265, 401, 118)
        );
        assert!("11:3".parse::<SplitSpec>().is_err());
        assert!("a:b:c".parse::<SplitSpec>().is_err());
    }

    #[test]
    fn manifest_json_keys() {
        let m = split_dataset(records(15), SplitSpec::DEFAULT_RATIO, 1).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_file().to_json()).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        assert_eq!(keys, ["seed", "test", "train", "val"]);
        assert_eq!(v["test"].as_array().unwrap().len(), 1);
    }

    proptest! {
        #[test]
        fn partition_is_exact(n in 1usize..300, a in 1u64..20, b in 1u64..20, c in 1u64..20, seed in any::<u64>()) {
            let m = split_dataset(records(n), SplitSpec::Ratio(a, b, c), seed).unwrap();
            let (t, v, s) = sizes(&m);
            prop_assert_eq!(t + v + s, n);
            let mut ids: Vec<String> = m.to_file().ids(SplitName::All);
            ids.sort();
            let mut want: Vec<String> = records(n).into_iter().map(|r| r.image_id).collect();
            want.sort();
            prop_assert_eq!(ids, want);
        }
    }
}

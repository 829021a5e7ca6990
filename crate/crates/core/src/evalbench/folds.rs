use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datamodel::{ProcedureRecord, ProcedureType};

use super::EvalError;

pub const FOLDS: usize = 4;

/// Four disjoint, type-balanced sets of procedure ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub folds: Vec<Vec<String>>,
}

impl FoldSplit {
    /// Index of the fold holding `id`.
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.folds.iter().position(|f| f.iter().any(|x| x == id))
    }
}

/// Shuffles the ids of each type (sorted first, so input order is
/// irrelevant) and deals them round-robin; the fold pointer carries over
/// between types so total fold sizes also differ by at most one.
pub fn make_folds(dataset: &[ProcedureRecord], seed: u64) -> Result<FoldSplit, EvalError> {
    if dataset.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut by_type: BTreeMap<ProcedureType, Vec<&str>> = BTreeMap::new();
    for r in dataset {
        by_type.entry(r.ptype()).or_default().push(r.id());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut folds = vec![Vec::new(); FOLDS];
    let mut next = 0;
    for ids in by_type.values_mut() {
        ids.sort_unstable();
        if let Some(w) = ids.windows(2).find(|w| w[0] == w[1]) {
            return Err(EvalError::DuplicateId(w[0].to_string()));
        }
        ids.shuffle(&mut rng);
        for id in ids.iter() {
            folds[next].push(id.to_string());
            next = (next + 1) % FOLDS;
        }
    }
    Ok(FoldSplit { folds })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::datamodel::{ChannelSet, DeviceSample, Frame, DEVICE_SIGNALS};
    use proptest::prelude::*;

    pub(crate) fn rec(id: &str, ptype: u8, n: usize) -> ProcedureRecord {
        let frames = (1..=n)
            .map(|t| Frame {
                t,
                device: Some(DeviceSample::from_raw(vec![0.0; DEVICE_SIGNALS]).unwrap()),
                tools: None,
                image: None,
            })
            .collect();
        let ch = ChannelSet {
            device: true,
            tools: false,
            image: false,
            d_img: 0,
        };
        ProcedureRecord::new(id, ProcedureType::new(ptype).unwrap(), ch, frames).unwrap()
    }

    fn check_balance(data: &[ProcedureRecord], split: &FoldSplit) {
        let sizes: Vec<usize> = split.folds.iter().map(Vec::len).collect();
        assert!(
            sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1,
            "{sizes:?}"
        );
        let mut all: Vec<&String> = split.folds.iter().flatten().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), data.len());
        for t in ProcedureType::all() {
            let per: Vec<usize> = split
                .folds
                .iter()
                .map(|f| {
                    f.iter()
                        .filter(|id| data.iter().any(|r| r.id() == id.as_str() && r.ptype() == t))
                        .count()
                })
                .collect();
            assert!(
                per.iter().max().unwrap() - per.iter().min().unwrap() <= 1,
                "{per:?}"
            );
        }
    }

    #[test]
    fn eight_records_two_per_type() {
        let data: Vec<_> = (0..8)
            .map(|k| rec(&format!("r{k}"), (k / 2 + 1) as u8, 5))
            .collect();
        let split = make_folds(&data, 1).unwrap();
        assert!(split.folds.iter().all(|f| f.len() == 2));
        check_balance(&data, &split);
    }

    #[test]
    fn eighty_records() {
        let data: Vec<_> = (0..80)
            .map(|k| rec(&format!("r{k}"), (k % 5 + 1) as u8, 3))
            .collect();
        let split = make_folds(&data, 9).unwrap();
        assert!(split.folds.iter().all(|f| f.len() == 20));
        assert_eq!(split, make_folds(&data, 9).unwrap());
        let mut rev = data.clone();
        rev.reverse();
        assert_eq!(split, make_folds(&rev, 9).unwrap());
    }

    #[test]
    fn empty_and_duplicates() {
        assert!(matches!(make_folds(&[], 0), Err(EvalError::EmptyDataset)));
        let d = [rec("a", 1, 2), rec("a", 1, 3)];
        assert!(matches!(make_folds(&d, 0), Err(EvalError::DuplicateId(_))));
    }

    proptest! {
        #[test]
        fn balanced_for_any_mix(types in prop::collection::vec(1u8..=5, 1..60), seed in any::<u64>()) {
            let data: Vec<_> = types.iter().enumerate().map(|(k, &t)| rec(&format!("p{k}"), t, 2)).collect();
            let split = make_folds(&data, seed).unwrap();
            check_balance(&data, &split);
        }
    }
}

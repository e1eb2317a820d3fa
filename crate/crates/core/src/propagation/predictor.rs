use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rating::{PairKey, ReRatingSample};

/// Number of recommenders in the standard family: the trial mean plus one per recorded trial.
pub const PREDICTOR_FAMILY_SIZE: usize = 6;

/// Predicted rating per (user, item) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predictor {
    pub label: String,
    pub values: BTreeMap<PairKey, f64>,
}

impl Predictor {
    pub fn new(label: impl Into<String>, values: BTreeMap<PairKey, f64>) -> Self {
        Self {
            label: label.into(),
            values,
        }
    }

    pub fn get(&self, key: &PairKey) -> Result<f64> {
        self.values
            .get(key)
            .copied()
            .ok_or_else(|| Error::MissingPair {
                user: key.user.clone(),
                item: key.item.clone(),
            })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Recommender `k` of the family: `k = 1` predicts the mean over all trials,
/// `k >= 2` predicts the `(k-1)`-th recorded trial.
pub fn predictor_family(cohort: &[ReRatingSample], k: usize) -> Result<Predictor> {
    if k == 0 {
        return Err(invalid("predictor index starts at 1"));
    }
    let mut values = BTreeMap::new();
    for s in cohort {
        let v = if k == 1 {
            s.trials().iter().map(|&t| f64::from(t)).sum::<f64>() / s.len() as f64
        } else {
            match s.trials().get(k - 2) {
                Some(&t) => f64::from(t),
                None => {
                    return Err(Error::MissingTrial {
                        user: s.key().user.clone(),
                        item: s.key().item.clone(),
                        k,
                        have: s.len(),
                        need: k - 1,
                    })
                }
            }
        };
        values.insert(s.key().clone(), v);
    }
    Ok(Predictor::new(format!("k{k}"), values))
}

//! AdWords instances on an integer value grid, JSON I/O and seeded generators.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest integer accepted in instance files (2^53 - 1).
pub const MAX_VALUE: u64 = (1 << 53) - 1;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("parse failure: {0}")]
    Parse(String),
    #[error("scale must be positive")]
    BadScale,
    #[error("non-positive budget for advertiser `{0}`")]
    NonPositiveBudget(String),
    #[error("duplicate advertiser id `{0}`")]
    DuplicateAdvertiser(String),
    #[error("duplicate impression id `{0}`")]
    DuplicateImpression(String),
    #[error("impression `{impression}` bids on unknown advertiser `{advertiser}`")]
    UnknownAdvertiser { impression: String, advertiser: String },
    #[error("bid exceeds budget: impression `{impression}` bids {bid} on advertiser `{advertiser}` with budget {budget}")]
    BidExceedsBudget { impression: String, advertiser: String, bid: u64, budget: u64 },
    #[error("value {0} exceeds 2^53-1")]
    TooLarge(u64),
    #[error("unknown impression index {0}")]
    UnknownImpression(usize),
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("counts must be at least 1")]
    BadCounts,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Advertiser {
    pub id: String,
    pub budget: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Impression {
    pub id: String,
    pub bids: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct InstanceFile {
    scale: u64,
    advertisers: Vec<Advertiser>,
    impressions: Vec<Impression>,
}

/// A validated instance. Bids are stored densely as `bids[i][a]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    scale: u64,
    advertisers: Vec<Advertiser>,
    impression_ids: Vec<String>,
    bids: Vec<Vec<u64>>,
}

impl Instance {
    /// Builds and validates an instance from dense bid rows.
    pub fn new(
        scale: u64,
        advertisers: Vec<Advertiser>,
        impressions: Vec<(String, Vec<u64>)>,
    ) -> Result<Self, InstanceError> {
        if scale == 0 {
            return Err(InstanceError::BadScale);
        }
        check_value(scale)?;
        let mut seen = HashSet::new();
        for a in &advertisers {
            if !seen.insert(a.id.as_str()) {
                return Err(InstanceError::DuplicateAdvertiser(a.id.clone()));
            }
            if a.budget == 0 {
                return Err(InstanceError::NonPositiveBudget(a.id.clone()));
            }
            check_value(a.budget)?;
        }
        let mut seen = HashSet::new();
        let mut ids = Vec::with_capacity(impressions.len());
        let mut bids = Vec::with_capacity(impressions.len());
        for (id, row) in impressions {
            if !seen.insert(id.clone()) {
                return Err(InstanceError::DuplicateImpression(id));
            }
            assert_eq!(row.len(), advertisers.len(), "bid row length");
            for (a, &b) in advertisers.iter().zip(&row) {
                check_value(b)?;
                if b > a.budget {
                    return Err(InstanceError::BidExceedsBudget {
                        impression: id,
                        advertiser: a.id.clone(),
                        bid: b,
                        budget: a.budget,
                    });
                }
            }
            ids.push(id);
            bids.push(row);
        }
        Ok(Self { scale, advertisers, impression_ids: ids, bids })
    }

    pub fn from_json(text: &str) -> Result<Self, InstanceError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| InstanceError::Parse(e.to_string()))?;
        let index: BTreeMap<&str, usize> = file
            .advertisers
            .iter()
            .enumerate()
            .map(|(k, a)| (a.id.as_str(), k))
            .collect();
        let mut rows = Vec::with_capacity(file.impressions.len());
        for imp in &file.impressions {
            let mut row = vec![0; file.advertisers.len()];
            for (adv, &b) in &imp.bids {
                let Some(&k) = index.get(adv.as_str()) else {
                    return Err(InstanceError::UnknownAdvertiser {
                        impression: imp.id.clone(),
                        advertiser: adv.clone(),
                    });
                };
                row[k] = b;
            }
            rows.push((imp.id.clone(), row));
        }
        Self::new(file.scale, file.advertisers, rows)
    }

    pub fn load<R: std::io::Read>(mut source: R) -> Result<Self, InstanceError> {
        let mut text = String::new();
        source
            .read_to_string(&mut text)
            .map_err(|e| InstanceError::Parse(e.to_string()))?;
        Self::from_json(&text)
    }

    /// Canonical JSON; zero bids are omitted from the bid maps.
    pub fn to_json(&self) -> String {
        let file = InstanceFile {
            scale: self.scale,
            advertisers: self.advertisers.clone(),
            impressions: self
                .impression_ids
                .iter()
                .zip(&self.bids)
                .map(|(id, row)| Impression {
                    id: id.clone(),
                    bids: self
                        .advertisers
                        .iter()
                        .zip(row)
                        .filter(|(_, &b)| b > 0)
                        .map(|(a, &b)| (a.id.clone(), b))
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("instance serializes")
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn num_advertisers(&self) -> usize {
        self.advertisers.len()
    }

    pub fn num_impressions(&self) -> usize {
        self.bids.len()
    }

    pub fn advertisers(&self) -> &[Advertiser] {
        &self.advertisers
    }

    pub fn advertiser_id(&self, a: usize) -> &str {
        &self.advertisers[a].id
    }

    pub fn impression_id(&self, i: usize) -> &str {
        &self.impression_ids[i]
    }

    pub fn budget(&self, a: usize) -> u64 {
        self.advertisers[a].budget
    }

    pub fn budgets(&self) -> Vec<u64> {
        self.advertisers.iter().map(|a| a.budget).collect()
    }

    pub fn total_budget(&self) -> u64 {
        self.advertisers.iter().map(|a| a.budget).sum()
    }

    pub fn bid(&self, a: usize, i: usize) -> u64 {
        self.bids[i][a]
    }

    pub fn bids(&self, i: usize) -> &[u64] {
        &self.bids[i]
    }

    /// `2 b >= B`.
    pub fn is_large(&self, a: usize, i: usize) -> bool {
        is_large(self.bid(a, i), self.budget(a))
    }

    /// Every nonzero bid is large.
    pub fn all_large(&self) -> bool {
        (0..self.num_impressions())
            .all(|i| (0..self.num_advertisers()).all(|a| self.bid(a, i) == 0 || self.is_large(a, i)))
    }

    /// Every bid is at most half the budget.
    pub fn small_bids(&self) -> bool {
        (0..self.num_impressions())
            .all(|i| (0..self.num_advertisers()).all(|a| 2 * self.bid(a, i) <= self.budget(a)))
    }

    /// `min(Σ_{i∈S} b_ai, B_a)`.
    pub fn budget_additive_payment(&self, a: usize, set: &[usize]) -> Result<u64, InstanceError> {
        let mut total = 0u64;
        for &i in set {
            if i >= self.num_impressions() {
                return Err(InstanceError::UnknownImpression(i));
            }
            total += self.bid(a, i);
        }
        Ok(total.min(self.budget(a)))
    }
}

pub fn is_large(bid: u64, budget: u64) -> bool {
    2 * bid >= budget
}

fn check_value(v: u64) -> Result<(), InstanceError> {
    if v > MAX_VALUE {
        Err(InstanceError::TooLarge(v))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    UpperTriangular,
    UniformRandom,
    AllLarge,
    Mixed,
}

impl Family {
    pub const ALL: [Family; 4] =
        [Family::UpperTriangular, Family::UniformRandom, Family::AllLarge, Family::Mixed];
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::UpperTriangular => "upper-triangular",
            Family::UniformRandom => "uniform-random",
            Family::AllLarge => "all-large",
            Family::Mixed => "mixed",
        })
    }
}

impl FromStr for Family {
    type Err = InstanceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "upper-triangular" => Ok(Family::UpperTriangular),
            "uniform-random" => Ok(Family::UniformRandom),
            "all-large" => Ok(Family::AllLarge),
            "mixed" => Ok(Family::Mixed),
            other => Err(InstanceError::UnknownFamily(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GenParams {
    pub advertisers: usize,
    pub impressions: usize,
    pub seed: u64,
}

/// Deterministic instance generator. Scale is 1; budgets lie in `4..=16`.
pub fn generate(family: Family, params: GenParams) -> Result<Instance, InstanceError> {
    let GenParams { advertisers: n_a, impressions: n_i, seed } = params;
    if n_a == 0 || n_i == 0 {
        return Err(InstanceError::BadCounts);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let advs: Vec<Advertiser> = (0..n_a)
        .map(|a| Advertiser {
            id: format!("a{}", a + 1),
            budget: match family {
                Family::UpperTriangular => 4,
                _ => rng.gen_range(4..=16),
            },
        })
        .collect();
    let mut rows = Vec::with_capacity(n_i);
    for i in 0..n_i {
        let row: Vec<u64> = advs
            .iter()
            .enumerate()
            .map(|(a, adv)| {
                let b = adv.budget;
                match family {
                    Family::UpperTriangular => {
                        let first = i * n_a / n_i;
                        if a >= first {
                            b
                        } else {
                            0
                        }
                    }
                    Family::UniformRandom => rng.gen_range(0..=b),
                    Family::AllLarge => {
                        if rng.gen_bool(0.3) {
                            0
                        } else {
                            rng.gen_range(b.div_ceil(2)..=b)
                        }
                    }
                    Family::Mixed => match rng.gen_range(0..3) {
                        0 => 0,
                        1 => rng.gen_range(1..=b / 2),
                        _ => rng.gen_range(b.div_ceil(2)..=b),
                    },
                }
            })
            .collect();
        rows.push((format!("i{}", i + 1), row));
    }
    Instance::new(1, advs, rows)
}

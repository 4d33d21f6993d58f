//! BFI-10 scoring and within-sample trait percentiles.
//!
//! The item key (which trait each item loads on, and whether it is
//! reverse-keyed) lives in `data/bfi10_key.csv`.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Big Five traits in the fixed tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trait {
    Extraversion,
    Agreeableness,
    Conscientiousness,
    Neuroticism,
    Openness,
}

impl Trait {
    pub const ALL: [Trait; 5] = [
        Trait::Extraversion,
        Trait::Agreeableness,
        Trait::Conscientiousness,
        Trait::Neuroticism,
        Trait::Openness,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Trait::Extraversion => "extraversion",
            Trait::Agreeableness => "agreeableness",
            Trait::Conscientiousness => "conscientiousness",
            Trait::Neuroticism => "neuroticism",
            Trait::Openness => "openness",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl std::fmt::Display for Trait {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Trait {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Trait::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown trait {s:?}")))
    }
}

#[derive(Debug, Clone, Copy)]
struct KeyItem {
    trait_: Trait,
    reverse: bool,
}

const KEY_CSV: &str = include_str!("../../data/bfi10_key.csv");

fn scoring_key() -> &'static [KeyItem; 10] {
    static KEY: OnceLock<[KeyItem; 10]> = OnceLock::new();
    KEY.get_or_init(|| parse_key(KEY_CSV).expect("bundled BFI-10 key is valid"))
}

fn parse_key(text: &str) -> Result<[KeyItem; 10]> {
    let mut slots: [Option<KeyItem>; 10] = [None; 10];
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for rec in rdr.records() {
        let rec = rec?;
        let item: usize = rec[0]
            .parse()
            .map_err(|_| Error::invalid("bad BFI key item"))?;
        let trait_: Trait = rec[1].parse()?;
        let reverse: bool = rec[2]
            .parse()
            .map_err(|_| Error::invalid("bad BFI key flag"))?;
        let slot = slots
            .get_mut(item.wrapping_sub(1))
            .ok_or_else(|| Error::invalid(format!("BFI key item {item} out of range")))?;
        *slot = Some(KeyItem { trait_, reverse });
    }
    let key = slots.map(|s| s.ok_or_else(|| Error::invalid("BFI key incomplete")));
    let mut out = [KeyItem {
        trait_: Trait::Extraversion,
        reverse: false,
    }; 10];
    for (o, k) in out.iter_mut().zip(key) {
        *o = k?;
    }
    for t in Trait::ALL {
        let items: Vec<_> = out.iter().filter(|k| k.trait_ == t).collect();
        if items.len() != 2 || items.iter().filter(|k| k.reverse).count() != 1 {
            return Err(Error::invalid(format!(
                "BFI key needs one plain and one reversed item for {t}"
            )));
        }
    }
    Ok(out)
}

/// Trait scores on the 1..=5 answer scale, indexed by [`Trait::index`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraitScores(pub [f64; 5]);

impl TraitScores {
    pub fn get(&self, t: Trait) -> f64 {
        self.0[t.index()]
    }
}

/// Scores ten BFI-10 answers: each trait is the mean of its two items with
/// the reverse-keyed one recoded as `6 - answer`.
pub fn bfi10_score(answers: &[u8]) -> Result<TraitScores> {
    if answers.len() != 10 {
        return Err(Error::invalid(format!(
            "BFI-10 needs 10 answers, got {}",
            answers.len()
        )));
    }
    if let Some((i, a)) = answers
        .iter()
        .enumerate()
        .find(|(_, a)| !(1..=5).contains(*a))
    {
        return Err(Error::invalid(format!(
            "BFI-10 answer {} is {a}, expected 1..=5",
            i + 1
        )));
    }
    let mut sums = [0.0; 5];
    for (&answer, key) in answers.iter().zip(scoring_key()) {
        let v = if key.reverse { 6 - answer } else { answer };
        sums[key.trait_.index()] += f64::from(v);
    }
    Ok(TraitScores(sums.map(|s| s / 2.0)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraitProfile {
    pub scores: TraitScores,
    /// Within-sample mid-rank percentiles in [0, 1].
    pub percentiles: [f64; 5],
    pub dominant: Trait,
}

impl TraitProfile {
    pub fn percentile(&self, t: Trait) -> f64 {
        self.percentiles[t.index()]
    }
}

/// Percentiles and dominant trait for every participant in `scores`.
///
/// Percentile of a score = (#strictly lower + 0.5 * #equal, self included) / N.
/// The dominant trait is the highest percentile; ties go to the earlier trait
/// in [`Trait::ALL`].
pub fn dominant_traits(scores: &BTreeMap<String, TraitScores>) -> BTreeMap<String, TraitProfile> {
    let n = scores.len() as f64;
    scores
        .iter()
        .map(|(id, own)| {
            let mut percentiles = [0.0; 5];
            for t in Trait::ALL {
                let v = own.get(t);
                let (lower, equal) = scores.values().fold((0usize, 0usize), |(l, e), s| {
                    let o = s.get(t);
                    (l + usize::from(o < v), e + usize::from(o == v))
                });
                percentiles[t.index()] = (lower as f64 + 0.5 * equal as f64) / n;
            }
            let mut dominant = Trait::Extraversion;
            for t in Trait::ALL {
                if percentiles[t.index()] > percentiles[dominant.index()] {
                    dominant = t;
                }
            }
            (
                id.clone(),
                TraitProfile {
                    scores: *own,
                    percentiles,
                    dominant,
                },
            )
        })
        .collect()
}

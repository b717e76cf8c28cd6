// SPDX-License-Identifier: Apache-2.0

//! Four-way workload classification by Data Expansion Ratio.
//!
//! | category          | condition              | factor |
//! |-------------------|------------------------|--------|
//! | `Shrinking`       | α ≤ 0.5                | 1      |
//! | `Medium`          | 0.5 < α < 1            | 2      |
//! | `ExpandingMedium` | α ≥ 1, inc_shuf < 2    | 3      |
//! | `ExpandingRapid`  | α ≥ 1, inc_shuf ≥ 2    | 4      |
//!
//! All comparisons are exact on rationals.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::ProfileSet;
use crate::metrics::{self, MetricsError};
use crate::ratio::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Category {
    Shrinking,
    Medium,
    ExpandingMedium,
    ExpandingRapid,
}

impl Category {
    /// In increasing order of expansion factor.
    pub const ALL: [Category; 4] = [
        Category::Shrinking,
        Category::Medium,
        Category::ExpandingMedium,
        Category::ExpandingRapid,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Shrinking => "shrinking",
            Category::Medium => "medium",
            Category::ExpandingMedium => "expanding-medium",
            Category::ExpandingRapid => "expanding-rapid",
        }
    }

    /// Data Expansion Factor of the category.
    pub fn expansion_factor(self) -> u8 {
        expansion_factor(self)
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown category {0:?} (expected shrinking, medium, expanding-medium or expanding-rapid)")]
pub struct UnknownCategory(pub String);

impl FromStr for Category {
    type Err = UnknownCategory;

    /// Accepts the kebab-case names as well as dotted forms such as
    /// `Expanding.Rapid`, case-insensitively.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm: String = s
            .trim()
            .chars()
            .filter(|c| !matches!(c, '-' | '_' | '.' | ' '))
            .flat_map(char::to_lowercase)
            .collect();
        match norm.as_str() {
            "shrinking" => Ok(Category::Shrinking),
            "medium" => Ok(Category::Medium),
            "expandingmedium" => Ok(Category::ExpandingMedium),
            "expandingrapid" => Ok(Category::ExpandingRapid),
            _ => Err(UnknownCategory(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("α = {alpha} marks the workload as expanding, but a single run cannot separate rapid from medium expansion; add a second profiling run")]
    InsufficientRuns { alpha: Rational },
    #[error("negative α {0}")]
    NegativeAlpha(Rational),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationResult {
    pub category: Category,
    pub alpha_mean: Rational,
    pub inc_shuf: Option<Rational>,
    pub factor_shuf: u8,
}

impl ClassificationResult {
    /// Whether `factor_shuf` is the fixed factor for `category`.
    pub fn is_consistent(&self) -> bool {
        self.factor_shuf == expansion_factor(self.category)
    }
}

/// Maps `(α, inc_shuf)` to a category. The increase rate is consulted only
/// for α ≥ 1.
pub fn classify(alpha_mean: &Rational, inc_shuf: Option<&Rational>) -> Result<Category, ClassifyError> {
    if alpha_mean.is_negative() {
        return Err(ClassifyError::NegativeAlpha(alpha_mean.clone()));
    }
    let half = Rational::new(1, 2);
    let one = Rational::from_integer(1);
    let two = Rational::from_integer(2);
    if *alpha_mean <= half {
        Ok(Category::Shrinking)
    } else if *alpha_mean < one {
        Ok(Category::Medium)
    } else {
        match inc_shuf {
            Some(inc) if *inc >= two => Ok(Category::ExpandingRapid),
            Some(_) => Ok(Category::ExpandingMedium),
            None => Err(ClassifyError::InsufficientRuns {
                alpha: alpha_mean.clone(),
            }),
        }
    }
}

pub fn expansion_factor(c: Category) -> u8 {
    match c {
        Category::ExpandingRapid => 4,
        Category::ExpandingMedium => 3,
        Category::Medium => 2,
        Category::Shrinking => 1,
    }
}

pub fn classify_profile(ps: &ProfileSet) -> Result<ClassificationResult, ClassifyError> {
    let m = metrics::compute(ps)?;
    let category = classify(&m.alpha_mean, m.inc_shuf.as_ref())?;
    Ok(ClassificationResult {
        category,
        alpha_mean: m.alpha_mean,
        inc_shuf: m.inc_shuf,
        factor_shuf: expansion_factor(category),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{RunProfile, StageRecord};
    use crate::units::MIB;
    use proptest::prelude::*;

    fn r(n: i128, d: i128) -> Rational {
        Rational::new(n, d)
    }

    fn profile(points: &[(u64, u64)]) -> ProfileSet {
        let runs = points
            .iter()
            .map(|&(input, shuffle)| {
                RunProfile::new(
                    "p",
                    input,
                    true,
                    vec![
                        StageRecord { stage_index: 0, shuffle_read_bytes: 0, shuffle_write_bytes: 0 },
                        StageRecord { stage_index: 1, shuffle_read_bytes: shuffle / 2, shuffle_write_bytes: shuffle - shuffle / 2 },
                    ],
                )
                .unwrap()
            })
            .collect();
        ProfileSet::new(runs).unwrap()
    }

    #[test]
    fn classify_examples() {
        let two = Rational::from_integer(2);
        assert_eq!(classify(&two, Some(&two)), Ok(Category::ExpandingRapid));
        assert_eq!(classify(&r(1, 2), None), Ok(Category::Shrinking));
        assert_eq!(classify(&Rational::from_integer(1), Some(&r(19, 10))), Ok(Category::ExpandingMedium));
        assert_eq!(classify(&r(3, 4), Some(&Rational::from_integer(5))), Ok(Category::Medium));
    }

    #[test]
    fn expanding_without_rate_is_an_error() {
        assert!(matches!(
            classify(&Rational::from_integer(1), None),
            Err(ClassifyError::InsufficientRuns { .. })
        ));
        assert!(classify(&r(-1, 2), None).is_err());
    }

    #[test]
    fn factor_map() {
        assert_eq!(expansion_factor(Category::ExpandingRapid), 4);
        assert_eq!(expansion_factor(Category::ExpandingMedium), 3);
        assert_eq!(expansion_factor(Category::Medium), 2);
        assert_eq!(expansion_factor(Category::Shrinking), 1);
        let factors: Vec<u8> = Category::ALL.iter().map(|c| c.expansion_factor()).collect();
        assert!(factors.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn category_names_parse() {
        for c in Category::ALL {
            assert_eq!(c.as_str().parse::<Category>().unwrap(), c);
            let json = serde_json::to_string(&c).unwrap();
            assert_eq!(json, format!("\"{}\"", c.as_str()));
        }
        assert_eq!("Expanding.Rapid".parse::<Category>().unwrap(), Category::ExpandingRapid);
        assert!("huge".parse::<Category>().is_err());
    }

    #[test]
    fn classify_profile_examples() {
        let wl = profile(&[(10, 20), (20, 40), (30, 60), (40, 80), (50, 100)].map(|(a, b)| (a * MIB, b * MIB)));
        let res = classify_profile(&wl).unwrap();
        assert_eq!(res.category, Category::ExpandingRapid);
        assert_eq!(res.alpha_mean, Rational::from_integer(2));
        assert_eq!(res.inc_shuf, Some(Rational::from_integer(2)));
        assert_eq!(res.factor_shuf, 4);

        let shrink = profile(&[(400, 100), (800, 200), (1200, 300)]);
        let res = classify_profile(&shrink).unwrap();
        assert_eq!((res.category, res.factor_shuf), (Category::Shrinking, 1));

        let medium = profile(&[(400, 300), (800, 600), (1200, 900)]);
        let res = classify_profile(&medium).unwrap();
        assert_eq!((res.category, res.factor_shuf), (Category::Medium, 2));
    }

    #[test]
    fn single_run_medium_needs_no_rate() {
        let res = classify_profile(&profile(&[(100, 75)])).unwrap();
        assert_eq!(res.category, Category::Medium);
        assert!(res.inc_shuf.is_none());
    }

    proptest! {
        #[test]
        fn total_over_the_plane(an in 0i64..10_000, ad in 1i64..1000, inc_n in -10_000i64..10_000, has_inc: bool) {
            let alpha = r(an.into(), ad.into());
            let inc = r(inc_n.into(), 100);
            let got = classify(&alpha, has_inc.then_some(&inc));
            let one = Rational::from_integer(1);
            match got {
                Ok(c) => {
                    prop_assert!(Category::ALL.contains(&c));
                    if alpha < one {
                        // below the expanding band the rate is irrelevant
                        prop_assert_eq!(Ok(c), classify(&alpha, None));
                    }
                }
                Err(ClassifyError::InsufficientRuns { .. }) => prop_assert!(alpha >= one && !has_inc),
                Err(e) => prop_assert!(false, "unexpected {e}"),
            }
        }
    }
}

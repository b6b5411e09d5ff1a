use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::graph::CategoryId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StrategyTag {
    S0,
    S1,
    S2,
    S3,
    SAll,
}

impl StrategyTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StrategyTag::S0 => "S0",
            StrategyTag::S1 => "S1",
            StrategyTag::S2 => "S2",
            StrategyTag::S3 => "S3",
            StrategyTag::SAll => "Sall",
        }
    }
}

impl fmt::Display for StrategyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S0" | "s0" => Ok(StrategyTag::S0),
            "S1" | "s1" => Ok(StrategyTag::S1),
            "S2" | "s2" => Ok(StrategyTag::S2),
            "S3" | "s3" => Ok(StrategyTag::S3),
            "Sall" | "SALL" | "sall" | "S_all" => Ok(StrategyTag::SAll),
            _ => Err(Error::param("strategy", format!("unknown strategy tag `{s}`"))),
        }
    }
}

/// Which categories receive pseudo-edges. `S0` uses random labels for every
/// category; all other tags use model labels for their subset.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Strategy {
    tag: StrategyTag,
    categories: Vec<CategoryId>,
}

impl Strategy {
    pub fn random(num_categories: usize) -> Self {
        Self {
            tag: StrategyTag::S0,
            categories: (0..num_categories).map(CategoryId).collect(),
        }
    }

    pub fn all(num_categories: usize) -> Self {
        Self {
            tag: StrategyTag::SAll,
            categories: (0..num_categories).map(CategoryId).collect(),
        }
    }

    /// S1, S2 or S3 over an explicit subset.
    pub fn subset(categories: &[CategoryId], num_categories: usize) -> Result<Self> {
        let mut cats = categories.to_vec();
        cats.sort_unstable();
        cats.dedup();
        if cats.len() != categories.len() {
            return Err(Error::param("strategy", "repeated category in subset"));
        }
        if let Some(c) = cats.iter().find(|c| c.0 >= num_categories) {
            return Err(Error::param("strategy", format!("category #{} out of range", c.0)));
        }
        let tag = match cats.len() {
            1 => StrategyTag::S1,
            2 => StrategyTag::S2,
            3 => StrategyTag::S3,
            n => {
                return Err(Error::param(
                    "strategy",
                    format!("subsets hold 1 to 3 categories, got {n}"),
                ))
            }
        };
        Ok(Self { tag, categories: cats })
    }

    /// Build from a tag and category list; `S0` and `Sall` ignore the list.
    pub fn from_tag(tag: StrategyTag, categories: &[CategoryId], num_categories: usize) -> Result<Self> {
        let s = match tag {
            StrategyTag::S0 => Self::random(num_categories),
            StrategyTag::SAll => Self::all(num_categories),
            _ => Self::subset(categories, num_categories)?,
        };
        if s.tag != tag {
            return Err(Error::param(
                "strategy",
                format!("{tag} needs a different number of categories"),
            ));
        }
        Ok(s)
    }

    pub fn tag(&self) -> StrategyTag {
        self.tag
    }

    /// Categories in id order.
    pub fn categories(&self) -> &[CategoryId] {
        &self.categories
    }

    pub fn uses_random_labels(&self) -> bool {
        self.tag == StrategyTag::S0
    }

    /// Category names sorted alphabetically and joined with `+`.
    pub fn category_list(&self, names: &[String]) -> String {
        let mut v: Vec<&str> = self.categories.iter().map(|c| names[c.0].as_str()).collect();
        v.sort_unstable();
        v.join("+")
    }

    pub fn describe(&self, names: &[String]) -> String {
        format!("{}:{}", self.tag, self.category_list(names))
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<CategoryId>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    if k > n {
        return out;
    }
    loop {
        out.push(idx.iter().copied().map(CategoryId).collect());
        let Some(i) = (0..k).rev().find(|&i| idx[i] != i + n - k) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// S0, every singleton, the requested pairs and triples, then S_all.
/// Without explicit lists all pairs and triples are used when there are at
/// most four categories, and none otherwise.
pub fn strategy_grid(
    num_categories: usize,
    pairs: Option<&[Vec<CategoryId>]>,
    triples: Option<&[Vec<CategoryId>]>,
) -> Result<Vec<Strategy>> {
    if num_categories < 2 {
        return Err(Error::param("categories", "the ablation grid needs at least two categories"));
    }
    let default = |k| if num_categories <= 4 { combinations(num_categories, k) } else { Vec::new() };
    let mut grid = Vec::new();
    grid.push(Strategy::random(num_categories));
    for c in 0..num_categories {
        grid.push(Strategy::subset(&[CategoryId(c)], num_categories)?);
    }
    for (given, k) in [(pairs, 2), (triples, 3)] {
        let subsets = given.map_or_else(|| default(k), <[_]>::to_vec);
        for s in subsets {
            if s.len() != k {
                return Err(Error::param("strategy", format!("expected {k} categories per subset")));
            }
            grid.push(Strategy::subset(&s, num_categories)?);
        }
    }
    grid.push(Strategy::all(num_categories));
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn grid_sizes() {
        assert_eq!(strategy_grid(4, None, None).unwrap().len(), 16);
        let two = strategy_grid(2, None, None).unwrap();
        assert_eq!(two.len(), 5);
        assert_eq!(two[3].categories(), two[4].categories());
        assert_eq!(two[3].tag(), StrategyTag::S2);
        assert_eq!(strategy_grid(5, None, None).unwrap().len(), 7);
        assert!(strategy_grid(1, None, None).is_err());
    }

    #[test]
    fn subset_tags_and_names() {
        let names: Vec<String> = ["Type", "School", "TimeFrame", "Author"].iter().map(|s| (*s).into()).collect();
        let s = Strategy::subset(&[CategoryId(3), CategoryId(1)], 4).unwrap();
        assert_eq!(s.tag(), StrategyTag::S2);
        assert_eq!(s.categories(), &[CategoryId(1), CategoryId(3)]);
        assert_eq!(s.describe(&names), "S2:Author+School");
        assert!(Strategy::subset(&[CategoryId(0); 2], 4).is_err());
        assert!(Strategy::subset(&[], 4).is_err());
        assert!(Strategy::from_tag(StrategyTag::S3, &[CategoryId(0)], 4).is_err());
        assert_eq!(combinations(4, 3).len(), 4);
        assert_eq!(combinations(4, 2)[5], vec![CategoryId(2), CategoryId(3)]);
    }
}

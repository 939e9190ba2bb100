use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;

use super::ImageSet;
use crate::seeds;
use crate::{FfError, Result};

/// A labeled fraction `num/den` of the training set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Fraction {
    pub num: u32,
    pub den: u32,
}

impl Fraction {
    pub const ONE: Fraction = Fraction { num: 1, den: 1 };

    pub fn new(num: u32, den: u32) -> Result<Self> {
        if num == 0 || den == 0 || num > den {
            return Err(FfError::config(format!("fraction {num}/{den} not in (0, 1]")));
        }
        Ok(Fraction { num, den })
    }

    /// `1/2^k` for k in 0..=9, the label fractions of the experiment protocol.
    pub fn inverse_power_of_two(k: u32) -> Self {
        Fraction {
            num: 1,
            den: 1 << k,
        }
    }

    pub fn is_one(self) -> bool {
        self.num == self.den
    }

    pub fn value(self) -> f64 {
        f64::from(self.num) / f64::from(self.den)
    }
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            write!(f, "1")
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Fraction {
    type Err = FfError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || FfError::config(format!("cannot parse fraction `{s}`"));
        let s = s.trim();
        match s.split_once('/') {
            Some((n, d)) => Fraction::new(
                n.trim().parse().map_err(|_| bad())?,
                d.trim().parse().map_err(|_| bad())?,
            ),
            None => {
                let n: u32 = s.parse().map_err(|_| bad())?;
                Fraction::new(n, 1)
            }
        }
    }
}

/// How to draw the labeled subset.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SplitSpec {
    pub fraction: Fraction,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(fraction: Fraction, seed: u64) -> Self {
        SplitSpec { fraction, seed }
    }

    /// `floor(fraction · n_total / classes)`, required to be at least one.
    pub fn per_class_count(&self, n_total: usize, classes: usize) -> Result<usize> {
        if classes == 0 {
            return Err(FfError::config("split needs at least one class"));
        }
        let count = (u128::from(self.fraction.num) * n_total as u128)
            / (u128::from(self.fraction.den) * classes as u128);
        if count == 0 {
            return Err(FfError::config(format!(
                "fraction {} leaves no labeled sample per class",
                self.fraction
            )));
        }
        Ok(count as usize)
    }
}

/// Index form of [`sample_balanced_subset`]: `(labeled, unlabeled)`, both
/// ascending, disjoint and together covering `0..labels.len()`.
pub fn balanced_split_indices(
    labels: &[usize],
    classes: usize,
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if spec.fraction.is_one() {
        return Ok(((0..labels.len()).collect(), Vec::new()));
    }
    let per_class = spec.per_class_count(labels.len(), classes)?;
    let mut by_class = vec![Vec::new(); classes];
    for (i, &l) in labels.iter().enumerate() {
        by_class[l].push(i);
    }
    let mut rng = seeds::rng(spec.seed);
    let mut take = vec![false; labels.len()];
    for (class, members) in by_class.iter_mut().enumerate() {
        if members.len() < per_class {
            return Err(FfError::config(format!(
                "class {class} has {} samples, {per_class} requested",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for &i in &members[..per_class] {
            take[i] = true;
        }
    }
    let (labeled, unlabeled): (Vec<usize>, Vec<usize>) =
        (0..labels.len()).partition(|&i| take[i]);
    Ok((labeled, unlabeled))
}

/// Draws `per_class_count` labeled images from every class with a seeded
/// shuffle. The unlabeled remainder has its labels stripped.
pub fn sample_balanced_subset(set: &ImageSet, spec: &SplitSpec) -> Result<(ImageSet, ImageSet)> {
    let labels = set.require_labels()?;
    let (labeled, unlabeled) = balanced_split_indices(labels, set.num_classes(), spec)?;
    Ok((set.select(&labeled), set.select(&unlabeled).without_labels()))
}

//! Exhaustive enumeration of ordinal game classes for K = 2 and K = 3.
//!
//! Player 1 only ever compares payoffs inside a column and player 2 inside a
//! row, so a game is determined, as far as both dynamics are concerned, by
//! one ordering of the rows per column and one ordering of the columns per
//! row. Under i.i.d. continuous payoffs these `2K` orderings are independent
//! and uniform, which makes the `(K!)^(2K)` classes equally likely.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::game::{Game, Profile};
use crate::graph::{absorption_probabilities_exact, build_graph, sink_decomposition, GraphKind};

/// One ordinal class: `col_orders[c]` lists the rows of column `c` from
/// worst to best for player 1, `row_orders[r]` the columns of row `r` from
/// worst to best for player 2. All indices are 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OrdinalClass {
    pub k: usize,
    pub col_orders: Vec<Vec<usize>>,
    pub row_orders: Vec<Vec<usize>>,
}

impl OrdinalClass {
    /// A representative game: player 1's rank at `(r, c)` is `c·K + position
    /// of r in column c + 1`, and symmetrically for player 2.
    pub fn to_game(&self) -> Game {
        let k = self.k;
        let mut p1 = vec![0u32; k * k];
        let mut p2 = vec![0u32; k * k];
        for (c, order) in self.col_orders.iter().enumerate() {
            for (pos, &r) in order.iter().enumerate() {
                p1[r * k + c] = (c * k + pos + 1) as u32;
            }
        }
        for (r, order) in self.row_orders.iter().enumerate() {
            for (pos, &c) in order.iter().enumerate() {
                p2[r * k + c] = (r * k + pos + 1) as u32;
            }
        }
        Game::from_flat_unchecked(k, p1, p2)
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = Vec::with_capacity(k);
    fn extend(k: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for x in 0..k {
            if !current.contains(&x) {
                current.push(x);
                extend(k, current, out);
                current.pop();
            }
        }
    }
    extend(k, &mut current, &mut out);
    out
}

fn check_supported(k: usize) -> Result<()> {
    if k == 2 || k == 3 {
        Ok(())
    } else {
        Err(Error::UnsupportedSize(k))
    }
}

/// `(K!)^(2K)`.
pub fn class_count(k: usize) -> Result<u64> {
    check_supported(k)?;
    let fact: u64 = (1..=k as u64).product();
    Ok(fact.pow(2 * k as u32))
}

/// Decodes class number `index` (mixed radix `K!`, columns first).
fn class_at(k: usize, perms: &[Vec<usize>], mut index: u64) -> OrdinalClass {
    let base = perms.len() as u64;
    let mut digit = || {
        let d = (index % base) as usize;
        index /= base;
        perms[d].clone()
    };
    let col_orders = (0..k).map(|_| digit()).collect();
    let row_orders = (0..k).map(|_| digit()).collect();
    OrdinalClass {
        k,
        col_orders,
        row_orders,
    }
}

/// Every ordinal class for `K`, each exactly once.
pub fn enumerate_classes(k: usize) -> Result<impl Iterator<Item = OrdinalClass>> {
    let total = class_count(k)?;
    let perms = permutations(k);
    Ok((0..total).map(move |i| class_at(k, &perms, i)))
}

/// Exact distribution of the quantities the Monte Carlo harness estimates,
/// averaged uniformly over ordinal classes. Convergence probabilities are
/// for dynamics started at (1,1).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactSummary {
    #[serde(rename = "K")]
    pub k: usize,
    pub classes: u64,
    #[serde(serialize_with = "ser_pmf")]
    pub pne_pmf: BTreeMap<usize, BigRational>,
    #[serde(serialize_with = "ser_rational")]
    pub p_trap: BigRational,
    /// Better-response dynamics.
    #[serde(rename = "p_converge_brd", serialize_with = "ser_rational")]
    pub p_converge_better: BigRational,
    /// Best-response dynamics.
    #[serde(rename = "p_converge_BRD", serialize_with = "ser_rational")]
    pub p_converge_best: BigRational,
}

impl ExactSummary {
    pub fn mean_pne(&self) -> BigRational {
        self.pne_pmf
            .iter()
            .map(|(&n, p)| p * BigRational::from_integer(BigInt::from(n)))
            .fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn pmf_total(&self) -> BigRational {
        self.pne_pmf.values().fold(BigRational::zero(), |a, b| a + b)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }
}

/// `"num/den"`, always with a denominator.
pub fn format_rational(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn ser_rational<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format_rational(r))
}

fn ser_pmf<S: Serializer>(m: &BTreeMap<usize, BigRational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(m.iter().map(|(k, v)| (k.to_string(), format_rational(v))))
}

#[derive(Default)]
struct Tally {
    pne_counts: BTreeMap<usize, u64>,
    traps: u64,
    better: BigRational,
    best: BigRational,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        for (n, c) in other.pne_counts {
            *self.pne_counts.entry(n).or_default() += c;
        }
        self.traps += other.traps;
        self.better += other.better;
        self.best += other.best;
        self
    }
}

fn tally_class(class: &OrdinalClass) -> Result<Tally> {
    let g = class.to_game();
    let start = Profile::new(1, 1);
    let dec = sink_decomposition(&build_graph(&g, GraphKind::Better));
    let pne = dec.singleton_sinks().len();
    let has_trap = dec.trap_components().next().is_some();
    let better = absorption_probabilities_exact(&g, GraphKind::Better, start)?.converge_probability();
    let best = absorption_probabilities_exact(&g, GraphKind::Best, start)?.converge_probability();
    Ok(Tally {
        pne_counts: BTreeMap::from([(pne, 1)]),
        traps: u64::from(has_trap),
        better,
        best,
    })
}

const CHUNK: u64 = 512;

/// Averages over all classes. Chunks of classes are processed in parallel;
/// the sums are exact, so the result does not depend on scheduling.
pub fn exact_summary(k: usize) -> Result<ExactSummary> {
    let total = class_count(k)?;
    let perms = permutations(k);
    let chunks: Vec<u64> = (0..total.div_ceil(CHUNK)).collect();
    let tally = chunks
        .into_par_iter()
        .map(|chunk| {
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(total);
            (lo..hi).try_fold(Tally::default(), |acc, i| -> Result<Tally> {
                Ok(acc.merge(tally_class(&class_at(k, &perms, i))?))
            })
        })
        .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;

    let denom = BigRational::from_integer(BigInt::from(total));
    let frac = |n: u64| BigRational::from_integer(BigInt::from(n)) / &denom;
    Ok(ExactSummary {
        k,
        classes: total,
        pne_pmf: tally.pne_counts.iter().map(|(&n, &c)| (n, frac(c))).collect(),
        p_trap: frac(tally.traps),
        p_converge_better: tally.better / &denom,
        p_converge_best: tally.best / &denom,
    })
}

/// True when the better-response graph has no sink of size two or more.
pub fn class_is_trap_free(class: &OrdinalClass) -> bool {
    let g = class.to_game();
    sink_decomposition(&build_graph(&g, GraphKind::Better))
        .trap_components()
        .next()
        .is_none()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;
    use crate::game::{PayoffTable, Player};

    fn rational(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn class_counts() {
        assert_eq!(enumerate_classes(2).unwrap().count(), 16);
        assert_eq!(class_count(3).unwrap(), 46_656);
        assert!(matches!(class_count(4), Err(Error::UnsupportedSize(4))));
        assert!(enumerate_classes(1).is_err());
    }

    #[test]
    fn classes_are_distinct_and_games_respect_orders() {
        let classes: Vec<OrdinalClass> = enumerate_classes(2).unwrap().collect();
        let unique: std::collections::HashSet<_> = classes.iter().cloned().collect();
        assert_eq!(unique.len(), 16);
        for class in enumerate_classes(3).unwrap().step_by(997) {
            let g = class.to_game();
            for (c, order) in class.col_orders.iter().enumerate() {
                for w in order.windows(2) {
                    assert!(g.payoff_at(Player::One, w[0], c) < g.payoff_at(Player::One, w[1], c));
                }
            }
            for (r, order) in class.row_orders.iter().enumerate() {
                for w in order.windows(2) {
                    assert!(g.payoff_at(Player::Two, r, w[0]) < g.payoff_at(Player::Two, r, w[1]));
                }
            }
        }
    }

    #[test]
    fn k2_summary() {
        let s = exact_summary(2).unwrap();
        assert_eq!(s.classes, 16);
        assert_eq!(s.pne_pmf[&0], rational(1, 8));
        assert_eq!(s.pne_pmf[&1], rational(3, 4));
        assert_eq!(s.pne_pmf[&2], rational(1, 8));
        assert_eq!(s.p_trap, rational(1, 8));
        assert_eq!(s.p_converge_better, rational(7, 8));
        assert_eq!(s.p_converge_best, rational(7, 8));
        assert_eq!(s.mean_pne(), BigRational::one());
    }

    #[test]
    fn k2_trap_free_classes_always_converge() {
        for class in enumerate_classes(2).unwrap() {
            if class_is_trap_free(&class) {
                let g = class.to_game();
                let a = absorption_probabilities_exact(&g, GraphKind::Better, Profile::new(1, 1)).unwrap();
                assert_eq!(a.converge_probability(), BigRational::one());
            }
        }
    }

    #[test]
    fn json_renders_rationals() {
        let s = exact_summary(2).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s.to_json()).unwrap();
        assert_eq!(v["K"], 2);
        assert_eq!(v["pne_pmf"]["1"], "3/4");
        assert_eq!(v["p_trap"], "1/8");
        assert_eq!(v["p_converge_brd"], "7/8");
        assert_eq!(v["p_converge_BRD"], "7/8");
        assert_eq!(format_rational(&BigRational::one()), "1/1");
    }
}

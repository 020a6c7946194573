//! Random two-player K×K games with ordinal payoffs.
//!
//! A [`Game`] stores, for each player, a permutation of `1..=K²` laid out
//! row-major: entry `(r, c)` is the rank of that player's payoff when player 1
//! plays row `r` and player 2 plays column `c`. Only comparisons inside a
//! column (player 1) or inside a row (player 2) are ever consumed, so ranks
//! carry exactly the information an i.i.d. continuous draw would.
//!
//! Strategies are 1-based at every public surface.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// One of the two players.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
pub enum Player {
    /// Chooses the row.
    One,
    /// Chooses the column.
    Two,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::One, Player::Two];

    pub fn other(self) -> Player {
        match self {
            Player::One => Player::Two,
            Player::Two => Player::One,
        }
    }

    /// 1 or 2.
    pub fn id(self) -> u8 {
        match self {
            Player::One => 1,
            Player::Two => 2,
        }
    }

    /// Picks a player uniformly at random.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Player {
        if rng.random::<bool>() {
            Player::One
        } else {
            Player::Two
        }
    }
}

impl From<Player> for u8 {
    fn from(p: Player) -> u8 {
        p.id()
    }
}

impl TryFrom<u8> for Player {
    type Error = Error;

    fn try_from(v: u8) -> Result<Player> {
        match v {
            1 => Ok(Player::One),
            2 => Ok(Player::Two),
            _ => Err(invalid(format!("player must be 1 or 2, got {v}"))),
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.id())
    }
}

/// A pure strategy profile `(s1, s2)`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Profile {
    pub s1: usize,
    pub s2: usize,
}

impl Profile {
    pub const fn new(s1: usize, s2: usize) -> Profile {
        Profile { s1, s2 }
    }

    /// The profile a node index refers to in a game with `k` strategies.
    pub fn from_index(index: usize, k: usize) -> Profile {
        Profile {
            s1: index / k + 1,
            s2: index % k + 1,
        }
    }

    /// Row-major node index, `(s1 - 1) * k + (s2 - 1)`.
    pub fn index(self, k: usize) -> usize {
        (self.s1 - 1) * k + (self.s2 - 1)
    }

    pub fn is_valid(self, k: usize) -> bool {
        (1..=k).contains(&self.s1) && (1..=k).contains(&self.s2)
    }

    /// The strategy `player` uses in this profile.
    pub fn strategy(self, player: Player) -> usize {
        match player {
            Player::One => self.s1,
            Player::Two => self.s2,
        }
    }

    /// This profile with `player`'s strategy replaced.
    pub fn with(self, player: Player, strategy: usize) -> Profile {
        match player {
            Player::One => Profile::new(strategy, self.s2),
            Player::Two => Profile::new(self.s1, strategy),
        }
    }

    /// True when the profiles differ in exactly the given player's coordinate.
    pub fn is_neighbor(self, other: Profile, player: Player) -> bool {
        match player {
            Player::One => self.s2 == other.s2 && self.s1 != other.s1,
            Player::Two => self.s1 == other.s1 && self.s2 != other.s2,
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.s1, self.s2)
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    /// Parses `"s1,s2"`, with or without surrounding parentheses.
    fn from_str(s: &str) -> Result<Profile> {
        let trimmed = s.trim().trim_start_matches('(').trim_end_matches(')');
        let mut parts = trimmed.split(',').map(str::trim);
        let parse = |p: Option<&str>| -> Result<usize> {
            p.ok_or_else(|| invalid(format!("expected \"s1,s2\", got {s:?}")))?
                .parse()
                .map_err(|_| invalid(format!("expected \"s1,s2\", got {s:?}")))
        };
        let s1 = parse(parts.next())?;
        let s2 = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(invalid(format!("expected \"s1,s2\", got {s:?}")));
        }
        Ok(Profile::new(s1, s2))
    }
}

/// Read access to the payoffs of a two-player square game.
///
/// Response queries only ever compare values with `>`, so any totally
/// ordered payoff type works and strictly increasing transforms of the
/// payoffs leave every answer unchanged.
pub trait PayoffTable {
    type Value: PartialOrd + Copy;

    /// Number of strategies per player.
    fn strategies(&self) -> usize;

    /// Payoff of `player` at 0-based `(row, col)`.
    fn payoff_at(&self, player: Player, row: usize, col: usize) -> Self::Value;

    fn payoff(&self, player: Player, s: Profile) -> Self::Value {
        self.payoff_at(player, s.s1 - 1, s.s2 - 1)
    }
}

/// A game with tie-free ordinal payoffs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "GameJson", into = "GameJson")]
pub struct Game {
    k: usize,
    p1: Vec<u32>,
    p2: Vec<u32>,
}

impl Game {
    /// Builds a game from row-major rank matrices, checking that each is a
    /// permutation of `1..=K²`.
    pub fn from_ranks(p1: Vec<Vec<u32>>, p2: Vec<Vec<u32>>) -> Result<Game> {
        let k = p1.len();
        if k == 0 {
            return Err(invalid("K must be at least 1"));
        }
        let flatten = |m: Vec<Vec<u32>>, name: &str| -> Result<Vec<u32>> {
            if m.len() != k || m.iter().any(|row| row.len() != k) {
                return Err(invalid(format!("{name} must be a {k}x{k} matrix")));
            }
            let flat: Vec<u32> = m.into_iter().flatten().collect();
            check_permutation(&flat, name)?;
            Ok(flat)
        };
        let p1 = flatten(p1, "p1")?;
        let p2 = flatten(p2, "p2")?;
        Ok(Game { k, p1, p2 })
    }

    pub(crate) fn from_flat_unchecked(k: usize, p1: Vec<u32>, p2: Vec<u32>) -> Game {
        debug_assert_eq!(p1.len(), k * k);
        debug_assert_eq!(p2.len(), k * k);
        Game { k, p1, p2 }
    }

    /// Draws a game whose two rank matrices are independent uniform
    /// permutations of `1..=K²`.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<Game> {
        if k == 0 {
            return Err(invalid("K must be at least 1"));
        }
        let n = u32::try_from(k * k).map_err(|_| invalid(format!("K = {k} is too large")))?;
        let mut p1: Vec<u32> = (1..=n).collect();
        let mut p2 = p1.clone();
        p1.shuffle(rng);
        p2.shuffle(rng);
        Ok(Game { k, p1, p2 })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn profile_count(&self) -> usize {
        self.k * self.k
    }

    /// A validated profile of this game.
    pub fn profile(&self, s1: usize, s2: usize) -> Result<Profile> {
        let s = Profile::new(s1, s2);
        if s.is_valid(self.k) {
            Ok(s)
        } else {
            Err(invalid(format!("profile {s} outside [1, {}]^2", self.k)))
        }
    }

    /// Rank of `player` at 0-based `(row, col)`.
    #[inline]
    pub fn rank(&self, player: Player, row: usize, col: usize) -> u32 {
        let i = row * self.k + col;
        match player {
            Player::One => self.p1[i],
            Player::Two => self.p2[i],
        }
    }

    /// Row-major rank matrix of one player.
    pub fn ranks(&self, player: Player) -> Vec<Vec<u32>> {
        let flat = match player {
            Player::One => &self.p1,
            Player::Two => &self.p2,
        };
        flat.chunks(self.k).map(<[u32]>::to_vec).collect()
    }

    pub fn better_responses(&self, s: Profile, player: Player) -> Vec<Profile> {
        better_responses(self, s, player)
    }

    pub fn best_response(&self, s: Profile, player: Player) -> Option<Profile> {
        best_response(self, s, player)
    }

    pub fn is_pne(&self, s: Profile) -> bool {
        is_pne(self, s)
    }

    pub fn enumerate_pne(&self) -> Vec<Profile> {
        enumerate_pne(self)
    }

    /// Row index (0-based) of player 1's best payoff in each column.
    pub(crate) fn best_rows(&self) -> Vec<usize> {
        (0..self.k)
            .map(|c| {
                (0..self.k)
                    .max_by_key(|&r| self.p1[r * self.k + c])
                    .expect("K >= 1")
            })
            .collect()
    }

    /// Column index (0-based) of player 2's best payoff in each row.
    pub(crate) fn best_cols(&self) -> Vec<usize> {
        self.p2
            .chunks(self.k)
            .map(|row| {
                row.iter()
                    .enumerate()
                    .max_by_key(|&(_, v)| *v)
                    .map(|(c, _)| c)
                    .expect("K >= 1")
            })
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("game serializes")
    }

    pub fn from_json(s: &str) -> Result<Game> {
        Ok(serde_json::from_str(s)?)
    }
}

impl PayoffTable for Game {
    type Value = u32;

    fn strategies(&self) -> usize {
        self.k
    }

    #[inline]
    fn payoff_at(&self, player: Player, row: usize, col: usize) -> u32 {
        self.rank(player, row, col)
    }
}

fn check_permutation(flat: &[u32], name: &str) -> Result<()> {
    let n = flat.len();
    let mut seen = vec![false; n];
    for &v in flat {
        let i = v as usize;
        if i == 0 || i > n || seen[i - 1] {
            return Err(invalid(format!(
                "{name} must be a permutation of 1..={n}; offending value {v}"
            )));
        }
        seen[i - 1] = true;
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct GameJson {
    #[serde(rename = "K")]
    k: usize,
    p1: Vec<Vec<u32>>,
    p2: Vec<Vec<u32>>,
}

impl TryFrom<GameJson> for Game {
    type Error = Error;

    fn try_from(j: GameJson) -> Result<Game> {
        if j.k != j.p1.len() {
            return Err(invalid(format!(
                "K = {} but p1 has {} rows",
                j.k,
                j.p1.len()
            )));
        }
        Game::from_ranks(j.p1, j.p2)
    }
}

impl From<Game> for GameJson {
    fn from(g: Game) -> GameJson {
        GameJson {
            k: g.k,
            p1: g.ranks(Player::One),
            p2: g.ranks(Player::Two),
        }
    }
}

/// A game with real-valued payoffs. Ties are possible in principle; the
/// random constructor redraws until there are none.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGame {
    k: usize,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl RealGame {
    pub fn new(p1: Vec<Vec<f64>>, p2: Vec<Vec<f64>>) -> Result<RealGame> {
        let k = p1.len();
        if k == 0 {
            return Err(invalid("K must be at least 1"));
        }
        for (name, m) in [("p1", &p1), ("p2", &p2)] {
            if m.len() != k || m.iter().any(|row| row.len() != k) {
                return Err(invalid(format!("{name} must be a {k}x{k} matrix")));
            }
            if m.iter().flatten().any(|v| !v.is_finite()) {
                return Err(invalid(format!("{name} has a non-finite payoff")));
            }
        }
        Ok(RealGame {
            k,
            p1: p1.into_iter().flatten().collect(),
            p2: p2.into_iter().flatten().collect(),
        })
    }

    /// Uniform `[0, 1)` payoffs, redrawing a player's matrix whenever it
    /// contains an exact tie.
    pub fn random<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<RealGame> {
        if k == 0 {
            return Err(invalid("K must be at least 1"));
        }
        let mut draw = || loop {
            let v: Vec<f64> = (0..k * k).map(|_| rng.random::<f64>()).collect();
            let mut sorted = v.clone();
            sorted.sort_by(f64::total_cmp);
            if sorted.windows(2).all(|w| w[0] < w[1]) {
                break v;
            }
        };
        let p1 = draw();
        let p2 = draw();
        Ok(RealGame { k, p1, p2 })
    }

    /// Replaces every payoff by `f(payoff)`.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> RealGame {
        RealGame {
            k: self.k,
            p1: self.p1.iter().map(|&v| f(v)).collect(),
            p2: self.p2.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Ordinal ranks of the payoffs. Fails if a player's payoffs contain a tie.
    pub fn to_game(&self) -> Result<Game> {
        let rank = |v: &[f64]| -> Result<Vec<u32>> {
            let mut order: Vec<usize> = (0..v.len()).collect();
            order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
            if order.windows(2).any(|w| v[w[0]] == v[w[1]]) {
                return Err(invalid("payoffs contain a tie"));
            }
            let mut ranks = vec![0u32; v.len()];
            for (pos, &i) in order.iter().enumerate() {
                ranks[i] = pos as u32 + 1;
            }
            Ok(ranks)
        };
        Ok(Game::from_flat_unchecked(self.k, rank(&self.p1)?, rank(&self.p2)?))
    }
}

impl From<&Game> for RealGame {
    fn from(g: &Game) -> RealGame {
        RealGame {
            k: g.k,
            p1: g.p1.iter().map(|&v| f64::from(v)).collect(),
            p2: g.p2.iter().map(|&v| f64::from(v)).collect(),
        }
    }
}

impl PayoffTable for RealGame {
    type Value = f64;

    fn strategies(&self) -> usize {
        self.k
    }

    fn payoff_at(&self, player: Player, row: usize, col: usize) -> f64 {
        let i = row * self.k + col;
        match player {
            Player::One => self.p1[i],
            Player::Two => self.p2[i],
        }
    }
}

fn assert_valid<G: PayoffTable + ?Sized>(g: &G, s: Profile) {
    assert!(
        s.is_valid(g.strategies()),
        "profile {s} outside [1, {}]^2",
        g.strategies()
    );
}

/// Profiles reachable by a strict unilateral improvement of `player`.
pub fn better_responses<G: PayoffTable + ?Sized>(g: &G, s: Profile, player: Player) -> Vec<Profile> {
    assert_valid(g, s);
    let current = g.payoff(player, s);
    let own = s.strategy(player);
    (1..=g.strategies())
        .filter(|&x| x != own)
        .map(|x| s.with(player, x))
        .filter(|&t| g.payoff(player, t) > current)
        .collect()
}

/// The unique best improving deviation of `player`, if any improvement exists.
pub fn best_response<G: PayoffTable + ?Sized>(g: &G, s: Profile, player: Player) -> Option<Profile> {
    assert_valid(g, s);
    let current = g.payoff(player, s);
    let own = s.strategy(player);
    let mut best: Option<(Profile, G::Value)> = None;
    for x in (1..=g.strategies()).filter(|&x| x != own) {
        let t = s.with(player, x);
        let v = g.payoff(player, t);
        if v > current && best.is_none_or(|(_, b)| v > b) {
            best = Some((t, v));
        }
    }
    best.map(|(t, _)| t)
}

pub fn is_pne<G: PayoffTable + ?Sized>(g: &G, s: Profile) -> bool {
    assert_valid(g, s);
    Player::BOTH.into_iter().all(|player| {
        let current = g.payoff(player, s);
        let own = s.strategy(player);
        (1..=g.strategies())
            .filter(|&x| x != own)
            .all(|x| !(g.payoff(player, s.with(player, x)) > current))
    })
}

/// All pure Nash equilibria, in row-major order.
pub fn enumerate_pne<G: PayoffTable + ?Sized>(g: &G) -> Vec<Profile> {
    let k = g.strategies();
    (0..k * k)
        .map(|i| Profile::from_index(i, k))
        .filter(|&s| is_pne(g, s))
        .collect()
}

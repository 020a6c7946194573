//! Better-response and best-response dynamics.
//!
//! At every step a player is picked uniformly at random. That player moves to
//! a uniformly random strict improvement (better response) or to its unique
//! best response. When it has no improvement the other player moves instead,
//! and when neither can improve the profile is a pure Nash equilibrium and
//! the process stays put.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::{Game, Player, Profile};
use crate::graph::{GraphKind, SinkDecomposition};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutcomeKind {
    Converged,
    Trapped,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub kind: OutcomeKind,
    /// The equilibrium reached, when converged.
    pub pne: Option<Profile>,
    /// Number of transitions taken when the outcome was decided.
    pub detection_step: usize,
    /// Sink component index (better response) or smallest node index on the
    /// cycle (best response, with cycle confirmation on).
    pub trap_id: Option<usize>,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.kind == OutcomeKind::Converged
    }
}

/// Visited profiles and the player behind each transition.
///
/// Only the first `cap` transitions are stored; [`Trajectory::transitions`]
/// still counts all of them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trajectory {
    steps: Vec<Profile>,
    movers: Vec<Player>,
    cap: usize,
    transitions: usize,
}

impl Trajectory {
    fn new(start: Profile, cap: usize) -> Trajectory {
        Trajectory {
            steps: vec![start],
            movers: Vec::new(),
            cap,
            transitions: 0,
        }
    }

    fn push(&mut self, s: Profile, mover: Player) {
        self.transitions += 1;
        if self.movers.len() < self.cap {
            self.steps.push(s);
            self.movers.push(mover);
        }
    }

    pub fn steps(&self) -> &[Profile] {
        &self.steps
    }

    pub fn movers(&self) -> &[Player] {
        &self.movers
    }

    pub fn transitions(&self) -> usize {
        self.transitions
    }

    pub fn is_truncated(&self) -> bool {
        self.transitions > self.movers.len()
    }

    /// CSV with header `step,s1,s2,mover`; the start row has an empty mover.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["step", "s1", "s2", "mover"])?;
        for (i, s) in self.steps.iter().enumerate() {
            let mover = match i {
                0 => String::new(),
                _ => self.movers[i - 1].to_string(),
            };
            w.write_record([i.to_string(), s.s1.to_string(), s.s2.to_string(), mover])?;
        }
        w.flush().map_err(|e| Error::Csv(e.into()))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Transitions kept in the trajectory; `None` means `4K`.
    pub trajectory_cap: Option<usize>,
    /// Best response only: keep walking past the revisit and check that the
    /// walk is periodic.
    pub confirm_cycle: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            trajectory_cap: None,
            confirm_cycle: false,
        }
    }
}

impl RunOptions {
    fn cap(&self, k: usize) -> usize {
        self.trajectory_cap.unwrap_or(4 * k)
    }
}

/// Uniform pick among `player`'s strict improvements from 0-based `(row, col)`.
fn pick_better<R: Rng + ?Sized>(g: &Game, row: usize, col: usize, player: Player, rng: &mut R) -> Option<usize> {
    let k = g.k();
    let here = g.rank(player, row, col);
    let improves = |x: usize| match player {
        Player::One => x != row && g.rank(player, x, col) > here,
        Player::Two => x != col && g.rank(player, row, x) > here,
    };
    let count = (0..k).filter(|&x| improves(x)).count();
    if count == 0 {
        return None;
    }
    let nth = rng.random_range(0..count);
    (0..k).filter(|&x| improves(x)).nth(nth)
}

/// One better-response transition. Returns the new profile and the mover,
/// or `s` itself with no mover at an equilibrium.
pub fn better_step<R: Rng + ?Sized>(g: &Game, s: Profile, rng: &mut R) -> (Profile, Option<Player>) {
    assert!(s.is_valid(g.k()), "profile {s} outside the game");
    let first = Player::random(rng);
    for player in [first, first.other()] {
        if let Some(x) = pick_better(g, s.s1 - 1, s.s2 - 1, player, rng) {
            return (s.with(player, x + 1), Some(player));
        }
    }
    (s, None)
}

/// One best-response transition.
pub fn best_step<R: Rng + ?Sized>(g: &Game, s: Profile, rng: &mut R) -> (Profile, Option<Player>) {
    let first = Player::random(rng);
    for player in [first, first.other()] {
        if let Some(t) = g.best_response(s, player) {
            return (t, Some(player));
        }
    }
    (s, None)
}

/// Runs best-response dynamics from `start` until it reaches an equilibrium
/// or enters a row or column it has already visited.
///
/// Once the walk stands on a best response of either player it alternates
/// movers and visits at most two profiles per row and column, so a revisited
/// line means a cycle. A start that is a best response for neither player is
/// left out of the visited lines; the first transition fixes that.
pub fn run_best_response<R: Rng + ?Sized>(
    g: &Game,
    rng: &mut R,
    start: Profile,
    opts: &RunOptions,
) -> Result<(RunOutcome, Trajectory)> {
    let k = g.k();
    if !start.is_valid(k) {
        return Err(invalid(format!("start {start} outside [1, {k}]^2")));
    }
    let mut traj = Trajectory::new(start, opts.cap(k));
    let mut rows = vec![false; k];
    let mut cols = vec![false; k];
    let mut tracking = false;
    let mark = |s: Profile, rows: &mut [bool], cols: &mut [bool]| {
        rows[s.s1 - 1] = true;
        cols[s.s2 - 1] = true;
    };

    let stuck1 = g.best_response(start, Player::One).is_none();
    let stuck2 = g.best_response(start, Player::Two).is_none();
    if stuck1 && stuck2 {
        let outcome = RunOutcome {
            kind: OutcomeKind::Converged,
            pne: Some(start),
            detection_step: 0,
            trap_id: None,
        };
        return Ok((outcome, traj));
    }
    if stuck1 || stuck2 {
        mark(start, &mut rows, &mut cols);
        tracking = true;
    }

    let mut s = start;
    loop {
        let (t, mover) = best_step(g, s, rng);
        let mover = mover.ok_or_else(|| Error::Internal("best-response walk stalled off-equilibrium".into()))?;
        traj.push(t, mover);
        s = t;
        let step = traj.transitions();
        if g.is_pne(s) {
            let outcome = RunOutcome {
                kind: OutcomeKind::Converged,
                pne: Some(s),
                detection_step: step,
                trap_id: None,
            };
            return Ok((outcome, traj));
        }
        let revisit = tracking
            && match mover {
                Player::One => rows[s.s1 - 1],
                Player::Two => cols[s.s2 - 1],
            };
        if revisit {
            let trap_id = if opts.confirm_cycle {
                let cycle = confirm_best_response_cycle(g, s).ok_or_else(|| {
                    Error::Internal(format!("revisit at {s} is not on a best-response cycle"))
                })?;
                cycle.iter().map(|p| p.index(k)).min()
            } else {
                None
            };
            let outcome = RunOutcome {
                kind: OutcomeKind::Trapped,
                pne: None,
                detection_step: step,
                trap_id,
            };
            return Ok((outcome, traj));
        }
        mark(s, &mut rows, &mut cols);
        tracking = true;
        debug_assert!(step < 2 * k, "best-response walk exceeded 2K transitions");
    }
}

/// Follows the best-response walk from `from`, which must be a best response
/// for exactly one player, and returns the cycle through `from` if the walk
/// comes back to it.
pub fn confirm_best_response_cycle(g: &Game, from: Profile) -> Option<Vec<Profile>> {
    let mut cycle = vec![from];
    let mut s = from;
    for _ in 0..g.profile_count() {
        let moves: Vec<Profile> = Player::BOTH
            .iter()
            .filter_map(|&p| g.best_response(s, p))
            .collect();
        if moves.len() != 1 {
            return None;
        }
        s = moves[0];
        if s == from {
            return Some(cycle);
        }
        cycle.push(s);
    }
    None
}

/// Runs better-response dynamics from `start` until the walk enters a sink
/// component of the better-response graph. Entering a singleton sink is
/// convergence; entering any larger sink is a trap, which the walk can never
/// leave.
pub fn run_better_response<R: Rng + ?Sized>(
    g: &Game,
    rng: &mut R,
    sinks: &SinkDecomposition,
    start: Profile,
    opts: &RunOptions,
) -> Result<(RunOutcome, Trajectory)> {
    if !sinks.matches(g, GraphKind::Better) {
        return Err(invalid("sink decomposition does not belong to this game's better-response graph"));
    }
    let k = g.k();
    if !start.is_valid(k) {
        return Err(invalid(format!("start {start} outside [1, {k}]^2")));
    }
    let mut traj = Trajectory::new(start, opts.cap(k));
    let mut s = start;
    loop {
        let c = sinks.component_of_profile(s);
        if sinks.is_sink(c) {
            let converged = sinks.component(c).len() == 1;
            let outcome = RunOutcome {
                kind: if converged { OutcomeKind::Converged } else { OutcomeKind::Trapped },
                pne: converged.then_some(s),
                detection_step: traj.transitions(),
                trap_id: (!converged).then_some(c),
            };
            return Ok((outcome, traj));
        }
        let (t, mover) = better_step(g, s, rng);
        let mover = mover.ok_or_else(|| Error::Internal("transient profile without improvements".into()))?;
        traj.push(t, mover);
        s = t;
    }
}

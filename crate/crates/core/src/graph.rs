//! Response digraphs, their sink components, and exact absorption analysis.
//!
//! Nodes are the K² profiles in row-major order. An edge `s -> t` exists when
//! `t` is an improving deviation of one player from `s`: any strict
//! improvement for [`GraphKind::Better`], only the unique best one for
//! [`GraphKind::Best`]. Edges are generated on demand from the game, so a
//! graph costs `O(K)` memory regardless of its edge count.
//!
//! A trap is a sink strongly connected component with at least two profiles.
//! For the uniform better-response kernel every node of a closed strongly
//! connected set is revisited infinitely often almost surely, which makes
//! sink components and traps the same thing.

use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeMap, VecDeque};
use std::hash::{Hash, Hasher};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::game::{Game, Player, Profile};
use crate::util::{ceil_pow, pow_snapped};

/// Which deviations count as edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GraphKind {
    /// Every strict improvement (better-response dynamics).
    Better,
    /// Only the unique best improvement (best-response dynamics).
    Best,
}

impl std::str::FromStr for GraphKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<GraphKind> {
        match s {
            "better" => Ok(GraphKind::Better),
            "best" => Ok(GraphKind::Best),
            _ => Err(invalid(format!("graph kind must be better or best, got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResponseGraph<'g> {
    game: &'g Game,
    kind: GraphKind,
    best_rows: Vec<usize>,
    best_cols: Vec<usize>,
}

impl<'g> ResponseGraph<'g> {
    pub fn build(game: &'g Game, kind: GraphKind) -> ResponseGraph<'g> {
        ResponseGraph {
            game,
            kind,
            best_rows: game.best_rows(),
            best_cols: game.best_cols(),
        }
    }

    pub fn game(&self) -> &'g Game {
        self.game
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn node_count(&self) -> usize {
        self.game.profile_count()
    }

    /// Successors of node `v`: player 1's deviations first, then player 2's.
    pub fn successors(&self, v: usize) -> Successors<'_> {
        let k = self.game.k();
        let (row, col) = (v / k, v % k);
        Successors {
            graph: self,
            row,
            col,
            rank1: self.game.rank(Player::One, row, col),
            rank2: self.game.rank(Player::Two, row, col),
            pos: 0,
        }
    }

    /// Successors of `v` split by the player who moves.
    pub fn moves(&self, v: usize) -> [Vec<usize>; 2] {
        let k = self.game.k();
        let (row, col) = (v / k, v % k);
        let mut split = [Vec::new(), Vec::new()];
        for w in self.successors(v) {
            // player 1 keeps the column
            let mover = if w % k == col && w / k != row { 0 } else { 1 };
            split[mover].push(w);
        }
        split
    }

    pub fn out_edges(&self, s: Profile) -> Vec<Profile> {
        let k = self.game.k();
        self.successors(s.index(k))
            .map(|w| Profile::from_index(w, k))
            .collect()
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.successors(v).count()
    }
}

/// Resumable successor iterator of one node.
#[derive(Debug, Clone)]
pub struct Successors<'a> {
    graph: &'a ResponseGraph<'a>,
    row: usize,
    col: usize,
    rank1: u32,
    rank2: u32,
    pos: usize,
}

impl Iterator for Successors<'_> {
    type Item = usize;

    fn next(&mut self) -> Option<usize> {
        let g = self.graph.game;
        let k = g.k();
        match self.graph.kind {
            GraphKind::Better => {
                while self.pos < 2 * k {
                    let p = self.pos;
                    self.pos += 1;
                    if p < k {
                        if p != self.row && g.rank(Player::One, p, self.col) > self.rank1 {
                            return Some(p * k + self.col);
                        }
                    } else {
                        let c = p - k;
                        if c != self.col && g.rank(Player::Two, self.row, c) > self.rank2 {
                            return Some(self.row * k + c);
                        }
                    }
                }
                None
            }
            GraphKind::Best => {
                while self.pos < 2 {
                    let p = self.pos;
                    self.pos += 1;
                    if p == 0 {
                        let r = self.graph.best_rows[self.col];
                        if r != self.row {
                            return Some(r * k + self.col);
                        }
                    } else {
                        let c = self.graph.best_cols[self.row];
                        if c != self.col {
                            return Some(self.row * k + c);
                        }
                    }
                }
                None
            }
        }
    }
}

/// Strongly connected components of a response graph, with sink flags.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SinkDecomposition {
    kind: GraphKind,
    k: usize,
    game_digest: u64,
    membership: Vec<u32>,
    components: Vec<Vec<usize>>,
    sink: Vec<bool>,
}

pub(crate) fn game_digest(g: &Game) -> u64 {
    let mut h = DefaultHasher::new();
    g.hash(&mut h);
    h.finish()
}

impl SinkDecomposition {
    pub fn of(graph: &ResponseGraph<'_>) -> SinkDecomposition {
        let (membership, components) = tarjan(graph);
        let mut sink = vec![true; components.len()];
        for (c, nodes) in components.iter().enumerate() {
            sink[c] = nodes
                .iter()
                .all(|&v| graph.successors(v).all(|w| membership[w] as usize == c));
        }
        SinkDecomposition {
            kind: graph.kind,
            k: graph.game.k(),
            game_digest: game_digest(graph.game),
            membership,
            components,
            sink,
        }
    }

    pub fn kind(&self) -> GraphKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// True when this decomposition was computed from `g` with the given kind.
    pub fn matches(&self, g: &Game, kind: GraphKind) -> bool {
        self.kind == kind && self.k == g.k() && self.game_digest == game_digest(g)
    }

    pub fn component_count(&self) -> usize {
        self.components.len()
    }

    /// Nodes of component `c`, ascending.
    pub fn component(&self, c: usize) -> &[usize] {
        &self.components[c]
    }

    pub fn component_of(&self, v: usize) -> usize {
        self.membership[v] as usize
    }

    pub fn component_of_profile(&self, s: Profile) -> usize {
        self.component_of(s.index(self.k))
    }

    pub fn is_sink(&self, c: usize) -> bool {
        self.sink[c]
    }

    pub fn sink_components(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.components.len()).filter(|&c| self.sink[c])
    }

    /// Singleton sinks, i.e. the pure Nash equilibria, in row-major order.
    pub fn singleton_sinks(&self) -> Vec<Profile> {
        let mut v: Vec<Profile> = self
            .sink_components()
            .filter(|&c| self.components[c].len() == 1)
            .map(|c| Profile::from_index(self.components[c][0], self.k))
            .collect();
        v.sort();
        v
    }

    /// Sink components with at least two nodes.
    pub fn trap_components(&self) -> impl Iterator<Item = usize> + '_ {
        self.sink_components()
            .filter(|&c| self.components[c].len() >= 2)
    }

    pub fn trap_reports(&self) -> Vec<TrapReport> {
        self.trap_components()
            .map(|c| TrapReport::new(self.k, &self.components[c]))
            .collect()
    }
}

/// Iterative Tarjan; components come out in reverse topological order.
fn tarjan(graph: &ResponseGraph<'_>) -> (Vec<u32>, Vec<Vec<usize>>) {
    const UNSEEN: u32 = u32::MAX;
    let n = graph.node_count();
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0u32; n];
    let mut on_stack = vec![false; n];
    let mut membership = vec![UNSEEN; n];
    let mut stack: Vec<usize> = Vec::new();
    let mut calls: Vec<(usize, Successors<'_>)> = Vec::new();
    let mut components: Vec<Vec<usize>> = Vec::new();
    let mut next_index = 0u32;

    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        calls.push((root, graph.successors(root)));

        while let Some((v, succ)) = calls.last_mut() {
            let v = *v;
            match succ.next() {
                Some(w) if index[w] == UNSEEN => {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    calls.push((w, graph.successors(w)));
                }
                Some(w) => {
                    if on_stack[w] {
                        low[v] = low[v].min(index[w]);
                    }
                }
                None => {
                    calls.pop();
                    if low[v] == index[v] {
                        let id = components.len() as u32;
                        let mut comp = Vec::new();
                        loop {
                            let w = stack.pop().expect("tarjan stack underflow");
                            on_stack[w] = false;
                            membership[w] = id;
                            comp.push(w);
                            if w == v {
                                break;
                            }
                        }
                        comp.sort_unstable();
                        components.push(comp);
                    }
                    if let Some((parent, _)) = calls.last() {
                        low[*parent] = low[*parent].min(low[v]);
                    }
                }
            }
        }
    }
    (membership, components)
}

/// A better-response trap with its row and column occupancy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrapReport {
    pub profiles: Vec<Profile>,
    pub size: usize,
    /// Members per row (player 1's strategy), `R(τ)`.
    #[serde(rename = "R")]
    pub row_counts: Vec<usize>,
    /// Members per column (player 2's strategy), `C(τ)`.
    #[serde(rename = "C")]
    pub col_counts: Vec<usize>,
}

impl TrapReport {
    fn new(k: usize, nodes: &[usize]) -> TrapReport {
        let mut row_counts = vec![0; k];
        let mut col_counts = vec![0; k];
        let profiles: Vec<Profile> = nodes.iter().map(|&v| Profile::from_index(v, k)).collect();
        for s in &profiles {
            row_counts[s.s1 - 1] += 1;
            col_counts[s.s2 - 1] += 1;
        }
        TrapReport {
            size: profiles.len(),
            profiles,
            row_counts,
            col_counts,
        }
    }

    pub fn k(&self) -> usize {
        self.row_counts.len()
    }

    /// Largest number of members sharing one row or one column.
    pub fn max_line_count(&self) -> usize {
        self.row_counts
            .iter()
            .chain(&self.col_counts)
            .copied()
            .max()
            .unwrap_or(0)
    }
}

pub fn build_graph(g: &Game, kind: GraphKind) -> ResponseGraph<'_> {
    ResponseGraph::build(g, kind)
}

pub fn sink_decomposition(graph: &ResponseGraph<'_>) -> SinkDecomposition {
    SinkDecomposition::of(graph)
}

/// All better-response traps of `g`.
pub fn find_traps(g: &Game) -> Vec<TrapReport> {
    SinkDecomposition::of(&ResponseGraph::build(g, GraphKind::Better)).trap_reports()
}

/// Size class of a trap relative to `K^α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TrapClass {
    /// Some row or column holds at least `K^(α/2)` members.
    A1,
    /// More than `K^α` members, but every row and column holds fewer than `K^(α/2)`.
    A2,
    Small,
}

impl TrapClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TrapClass::A1 => "A1",
            TrapClass::A2 => "A2",
            TrapClass::Small => "Small",
        }
    }
}

pub fn classify_large_trap(t: &TrapReport, alpha: f64) -> Result<TrapClass> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let k = t.k();
    let line_threshold = pow_snapped(k, alpha / 2.0);
    let size_threshold = pow_snapped(k, alpha);
    Ok(if t.max_line_count() as f64 >= line_threshold {
        TrapClass::A1
    } else if t.size as f64 > size_threshold {
        TrapClass::A2
    } else {
        TrapClass::Small
    })
}

/// Whether some row's top-`⌈K^σ⌉` player-2 payoffs all beat another row's
/// payoffs in the same columns.
pub fn delta_event_occurs(g: &Game, sigma: f64) -> Result<bool> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid(format!("sigma must lie in (0,1), got {sigma}")));
    }
    Ok(delta_event_with_u(g, ceil_pow(g.k(), sigma)))
}

/// [`delta_event_occurs`] with the number of top columns given directly.
pub fn delta_event_with_u(g: &Game, u: usize) -> bool {
    let k = g.k();
    let u = u.min(k);
    let mut cols: Vec<usize> = (0..k).collect();
    for i in 0..k {
        cols.sort_unstable_by_key(|&c| std::cmp::Reverse(g.rank(Player::Two, i, c)));
        let top = &cols[..u];
        let dominates = |j: usize| {
            top.iter()
                .all(|&c| g.rank(Player::Two, i, c) > g.rank(Player::Two, j, c))
        };
        if (0..k).filter(|&j| j != i).any(dominates) {
            return true;
        }
    }
    false
}

/// Absorption probabilities of a response process started at one profile.
#[derive(Debug, Clone)]
pub struct Absorption<P> {
    pub decomposition: SinkDecomposition,
    /// Sink component index -> probability of ending there.
    pub probabilities: BTreeMap<usize, P>,
}

impl<P: Clone + Zero> Absorption<P> {
    /// Total mass on singleton sinks (pure Nash equilibria).
    pub fn converge_probability(&self) -> P {
        self.mass_where(|len| len == 1)
    }

    /// Total mass on traps.
    pub fn trap_probability(&self) -> P {
        self.mass_where(|len| len >= 2)
    }

    fn mass_where(&self, keep: impl Fn(usize) -> bool) -> P {
        self.probabilities
            .iter()
            .filter(|(&c, _)| keep(self.decomposition.component(c).len()))
            .fold(P::zero(), |acc, (_, p)| acc + p.clone())
    }
}

/// Transition law of the dynamics on transient node `v`: each entry is
/// `(successor, denominator)` with probability `1 / denominator`. The mover
/// is picked with probability 1/2 and falls back to the other player when
/// it has no improving deviation.
fn transition_row(graph: &ResponseGraph<'_>, v: usize) -> Vec<(usize, u64)> {
    let [a, b] = graph.moves(v);
    match (a.is_empty(), b.is_empty()) {
        (true, true) => Vec::new(),
        (false, true) => a.iter().map(|&w| (w, a.len() as u64)).collect(),
        (true, false) => b.iter().map(|&w| (w, b.len() as u64)).collect(),
        (false, false) => {
            let mut row: Vec<(usize, u64)> = a.iter().map(|&w| (w, 2 * a.len() as u64)).collect();
            row.extend(b.iter().map(|&w| (w, 2 * b.len() as u64)));
            row
        }
    }
}

struct Chain {
    /// Transient states reachable from the start, in BFS order.
    states: Vec<usize>,
    local: BTreeMap<usize, usize>,
    rows: Vec<Vec<(usize, u64)>>,
    /// Sink components reachable from the start.
    sinks: Vec<usize>,
}

fn reachable_chain(graph: &ResponseGraph<'_>, dec: &SinkDecomposition, start: usize) -> Chain {
    let mut local = BTreeMap::new();
    let mut states = Vec::new();
    let mut rows = Vec::new();
    let mut sinks = std::collections::BTreeSet::new();
    let mut queue = VecDeque::from([start]);
    local.insert(start, 0);
    states.push(start);
    while let Some(v) = queue.pop_front() {
        let row = transition_row(graph, v);
        for &(w, _) in &row {
            let c = dec.component_of(w);
            if dec.is_sink(c) {
                sinks.insert(c);
            } else if !local.contains_key(&w) {
                local.insert(w, states.len());
                states.push(w);
                queue.push_back(w);
            }
        }
        rows.push(row);
    }
    Chain {
        states,
        local,
        rows,
        sinks: sinks.into_iter().collect(),
    }
}

fn validated_start(g: &Game, start: Profile) -> Result<usize> {
    if !start.is_valid(g.k()) {
        return Err(invalid(format!("start {start} outside [1, {}]^2", g.k())));
    }
    Ok(start.index(g.k()))
}

/// Largest transient chain solved by dense elimination; bigger ones are
/// solved by propagating the transient mass.
const DENSE_LIMIT: usize = 64;
const RESIDUAL_TOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 10_000_000;

/// Absorption probabilities of better-response (`Better`) or best-response
/// (`Best`) dynamics from `start`, in floating point.
pub fn absorption_probabilities(g: &Game, kind: GraphKind, start: Profile) -> Result<Absorption<f64>> {
    let v0 = validated_start(g, start)?;
    let graph = ResponseGraph::build(g, kind);
    let dec = SinkDecomposition::of(&graph);
    let c0 = dec.component_of(v0);
    if dec.is_sink(c0) {
        return Ok(Absorption {
            probabilities: BTreeMap::from([(c0, 1.0)]),
            decomposition: dec,
        });
    }
    let chain = reachable_chain(&graph, &dec, v0);
    let probabilities = if chain.states.len() <= DENSE_LIMIT && g.k() <= 8 {
        solve_dense(&chain, &dec)?
    } else {
        propagate_mass(&chain, &dec)?
    };
    let total: f64 = probabilities.values().sum();
    if (total - 1.0).abs() > RESIDUAL_TOL {
        return Err(Error::Internal(format!("absorption mass sums to {total}")));
    }
    Ok(Absorption {
        decomposition: dec,
        probabilities,
    })
}

fn solve_dense(chain: &Chain, dec: &SinkDecomposition) -> Result<BTreeMap<usize, f64>> {
    let n = chain.states.len();
    let m = chain.sinks.len();
    let sink_col: BTreeMap<usize, usize> = chain.sinks.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    // [I - Q | R]
    let mut a = vec![vec![0.0f64; n + m]; n];
    for (i, row) in chain.rows.iter().enumerate() {
        a[i][i] += 1.0;
        for &(w, den) in row {
            let p = 1.0 / den as f64;
            match chain.local.get(&w) {
                Some(&j) => a[i][j] -= p,
                None => a[i][n + sink_col[&dec.component_of(w)]] += p,
            }
        }
    }
    let original = a.clone();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()))
            .expect("nonempty");
        if a[pivot][col].abs() < 1e-14 {
            return Err(Error::Internal("singular absorption system".into()));
        }
        a.swap(col, pivot);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..n + m {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    let x: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..m).map(|s| a[i][n + s] / a[i][i]).collect())
        .collect();
    for row in original.iter() {
        for s in 0..m {
            let lhs: f64 = (0..n).map(|j| row[j] * x[j][s]).sum();
            if (lhs - row[n + s]).abs() > RESIDUAL_TOL {
                return Err(Error::Internal("absorption residual above tolerance".into()));
            }
        }
    }
    Ok(chain.sinks.iter().enumerate().map(|(s, &c)| (c, x[0][s])).collect())
}

fn propagate_mass(chain: &Chain, dec: &SinkDecomposition) -> Result<BTreeMap<usize, f64>> {
    let n = chain.states.len();
    let mut mass = vec![0.0f64; n];
    let mut next = vec![0.0f64; n];
    mass[0] = 1.0;
    let mut absorbed: BTreeMap<usize, f64> = chain.sinks.iter().map(|&c| (c, 0.0)).collect();
    for _ in 0..MAX_SWEEPS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (i, row) in chain.rows.iter().enumerate() {
            let here = mass[i];
            if here == 0.0 {
                continue;
            }
            for &(w, den) in row {
                let p = here / den as f64;
                match chain.local.get(&w) {
                    Some(&j) => next[j] += p,
                    None => *absorbed.get_mut(&dec.component_of(w)).expect("reachable sink") += p,
                }
            }
        }
        std::mem::swap(&mut mass, &mut next);
        if mass.iter().sum::<f64>() < RESIDUAL_TOL * 1e-2 {
            return Ok(absorbed);
        }
    }
    Err(Error::Internal("mass propagation did not converge".into()))
}

/// [`absorption_probabilities`] in exact rational arithmetic.
pub fn absorption_probabilities_exact(
    g: &Game,
    kind: GraphKind,
    start: Profile,
) -> Result<Absorption<BigRational>> {
    let v0 = validated_start(g, start)?;
    let graph = ResponseGraph::build(g, kind);
    let dec = SinkDecomposition::of(&graph);
    let c0 = dec.component_of(v0);
    if dec.is_sink(c0) {
        return Ok(Absorption {
            probabilities: BTreeMap::from([(c0, BigRational::one())]),
            decomposition: dec,
        });
    }
    let chain = reachable_chain(&graph, &dec, v0);
    let n = chain.states.len();
    let m = chain.sinks.len();
    let sink_col: BTreeMap<usize, usize> = chain.sinks.iter().enumerate().map(|(i, &c)| (c, i)).collect();
    let frac = |den: u64| BigRational::new(BigInt::one(), BigInt::from(den));
    let mut a = vec![vec![BigRational::zero(); n + m]; n];
    for (i, row) in chain.rows.iter().enumerate() {
        a[i][i] += BigRational::one();
        for &(w, den) in row {
            match chain.local.get(&w) {
                Some(&j) => a[i][j] -= frac(den),
                None => a[i][n + sink_col[&dec.component_of(w)]] += frac(den),
            }
        }
    }
    for col in 0..n {
        let pivot = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::Internal("singular absorption system".into()))?;
        a.swap(col, pivot);
        let inv = a[col][col].recip();
        for c in col..n + m {
            a[col][c] = &a[col][c] * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in col..n + m {
                    let d = &f * &a[col][c];
                    a[r][c] -= d;
                }
            }
        }
    }
    let probabilities = chain
        .sinks
        .iter()
        .enumerate()
        .map(|(s, &c)| (c, a[0][n + s].clone()))
        .collect();
    Ok(Absorption {
        decomposition: dec,
        probabilities,
    })
}

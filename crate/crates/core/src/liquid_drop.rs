//! The lattice liquid-drop energy `E(Ω) = |∂Ω| + Σ_{x≠y∈Ω} 1/|x-y|`, its
//! volume-preserving local search, an exact small-volume oracle and the
//! scaling study of the optimal energy.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{
    ball, ball_volume_formula, diameter, is_connected, reachable_from, set_boundary, sphere,
    DistanceKind, LatticePoint,
};
use crate::numeric::CompensatedSum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropEnergy {
    pub perimeter: usize,
    /// Ordered-pair sum `Σ_{x≠y} 1/|x-y|`.
    pub coulomb: f64,
    pub total: f64,
}

impl DropEnergy {
    fn new(perimeter: usize, coulomb: f64) -> Self {
        Self {
            perimeter,
            coulomb,
            total: perimeter as f64 + coulomb,
        }
    }
}

fn coulomb_sum(cells: &[LatticePoint], kind: DistanceKind) -> f64 {
    let mut sorted = cells.to_vec();
    sorted.sort_unstable();
    let mut acc = CompensatedSum::new();
    for (i, &x) in sorted.iter().enumerate() {
        for &y in &sorted[i + 1..] {
            acc.add(2.0 * kind.inverse_length(x - y));
        }
    }
    acc.value()
}

/// Energy of a set given as a list of distinct cells.
pub fn set_energy(cells: &[LatticePoint], kind: DistanceKind) -> DropEnergy {
    DropEnergy::new(set_boundary(cells).len(), coulomb_sum(cells, kind))
}

/// Vector plus position index: O(1) insert, remove and uniform sampling.
#[derive(Debug, Clone, Default)]
struct IndexedSet {
    items: Vec<LatticePoint>,
    index: HashMap<LatticePoint, usize>,
}

impl IndexedSet {
    fn insert(&mut self, p: LatticePoint) -> bool {
        if self.index.contains_key(&p) {
            return false;
        }
        self.index.insert(p, self.items.len());
        self.items.push(p);
        true
    }

    fn remove(&mut self, p: LatticePoint) -> bool {
        let Some(i) = self.index.remove(&p) else {
            return false;
        };
        let last = self.items.pop().expect("nonempty");
        if i < self.items.len() {
            self.items[i] = last;
            self.index.insert(last, i);
        }
        true
    }

    fn contains(&self, p: &LatticePoint) -> bool {
        self.index.contains_key(p)
    }

    fn len(&self) -> usize {
        self.items.len()
    }

    fn sample(&self, rng: &mut impl Rng) -> LatticePoint {
        self.items[rng.gen_range(0..self.items.len())]
    }
}

/// A finite set Ω with cached boundary and Coulomb energy.
#[derive(Debug, Clone)]
pub struct DropSet {
    kind: DistanceKind,
    cells: IndexedSet,
    /// Number of neighbours in Ω, for every point with at least one.
    degree: HashMap<LatticePoint, u8>,
    boundary: IndexedSet,
    frontier: IndexedSet,
    /// `Φ(p) = Σ_{y∈Ω} K(p-y)` on Ω and its frontier.
    potential: HashMap<LatticePoint, f64>,
    coulomb: f64,
}

/// Remove `remove ∈ ∂Ω`, add `add ∉ Ω` adjacent to Ω; volume is preserved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwapMove {
    pub remove: LatticePoint,
    pub add: LatticePoint,
}

impl DropSet {
    pub fn new(cells: &[LatticePoint], kind: DistanceKind) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::domain("a drop needs at least one cell"));
        }
        let mut set = IndexedSet::default();
        for &p in cells {
            if !set.insert(p) {
                return Err(Error::domain(format!("cell {p} listed twice")));
            }
        }
        let mut drop = Self {
            kind,
            cells: set,
            degree: HashMap::new(),
            boundary: IndexedSet::default(),
            frontier: IndexedSet::default(),
            potential: HashMap::new(),
            coulomb: 0.0,
        };
        for &p in cells {
            for q in p.neighbors() {
                *drop.degree.entry(q).or_insert(0) += 1;
            }
        }
        // Sorted so the sampling order does not depend on hash order.
        let mut touched: Vec<LatticePoint> = drop
            .degree
            .keys()
            .copied()
            .chain(cells.iter().copied())
            .collect();
        touched.sort_unstable();
        touched.dedup();
        for p in touched {
            drop.refresh(p);
        }
        drop.resync();
        Ok(drop)
    }

    /// Deterministic near-round seed: whole balls, then the next shell in
    /// lexicographic order.
    pub fn quasi_ball(volume: usize, kind: DistanceKind) -> Result<Self> {
        if volume == 0 {
            return Err(Error::domain("volume must be >= 1"));
        }
        let mut r = 0u64;
        while ball_volume_formula(r + 1) as usize <= volume {
            r += 1;
        }
        let mut cells = ball(LatticePoint::ORIGIN, r);
        let need = volume - cells.len();
        cells.extend(sphere(LatticePoint::ORIGIN, r + 1).into_iter().take(need));
        Self::new(&cells, kind)
    }

    /// Straight segment of `volume` cells along `e₁`.
    pub fn line(volume: usize, kind: DistanceKind) -> Result<Self> {
        let cells: Vec<LatticePoint> = (0..volume as i64)
            .map(|i| LatticePoint::E1.scale(i))
            .collect();
        Self::new(&cells, kind)
    }

    pub fn kind(&self) -> DistanceKind {
        self.kind
    }

    pub fn volume(&self) -> usize {
        self.cells.len()
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.cells.contains(&p)
    }

    /// Cells in lexicographic order.
    pub fn cells(&self) -> Vec<LatticePoint> {
        let mut v = self.cells.items.clone();
        v.sort_unstable();
        v
    }

    pub fn perimeter(&self) -> usize {
        self.boundary.len()
    }

    pub fn coulomb(&self) -> f64 {
        self.coulomb
    }

    /// Cached energy.
    pub fn energy(&self) -> DropEnergy {
        DropEnergy::new(self.perimeter(), self.coulomb)
    }

    pub fn is_connected(&self) -> bool {
        is_connected(&self.cells.items).unwrap_or(false)
    }

    pub fn diameter(&self) -> u64 {
        diameter(&self.cells.items)
    }

    fn degree_of(&self, p: LatticePoint) -> u8 {
        self.degree.get(&p).copied().unwrap_or(0)
    }

    /// Re-derive boundary and frontier membership of `p`.
    fn refresh(&mut self, p: LatticePoint) {
        let deg = self.degree_of(p);
        if self.cells.contains(&p) {
            self.frontier.remove(p);
            if deg < 6 {
                self.boundary.insert(p);
            } else {
                self.boundary.remove(p);
            }
        } else {
            self.boundary.remove(p);
            if deg > 0 {
                self.frontier.insert(p);
            } else {
                self.frontier.remove(p);
            }
        }
    }

    fn shift_degree(&mut self, p: LatticePoint, up: bool) {
        for q in p.neighbors() {
            let e = self.degree.entry(q).or_insert(0);
            if up {
                *e += 1;
            } else {
                *e -= 1;
                if *e == 0 {
                    self.degree.remove(&q);
                }
            }
        }
    }

    pub fn validate_move(&self, mv: SwapMove) -> Result<()> {
        let bad = |cell, reason: &str| {
            Err(Error::InvalidMove {
                cell,
                reason: reason.to_string(),
            })
        };
        if !self.cells.contains(&mv.remove) {
            return bad(mv.remove, "removed cell is not in the set");
        }
        if !self.boundary.contains(&mv.remove) {
            return bad(mv.remove, "removed cell is not on the boundary");
        }
        if self.cells.contains(&mv.add) {
            return bad(mv.add, "added cell is already in the set");
        }
        if self.degree_of(mv.add) == 0 {
            return bad(mv.add, "added cell is not adjacent to the set");
        }
        Ok(())
    }

    /// Perimeter change from a local recount of the at most 14 affected cells.
    fn perimeter_delta(&self, mv: SwapMove) -> i64 {
        let member_after = |p: LatticePoint| {
            if p == mv.remove {
                false
            } else if p == mv.add {
                true
            } else {
                self.cells.contains(&p)
            }
        };
        let mut affected: Vec<LatticePoint> = vec![mv.remove, mv.add];
        affected.extend(mv.remove.neighbors());
        affected.extend(mv.add.neighbors());
        affected.sort_unstable();
        affected.dedup();
        let mut delta = 0i64;
        for p in affected {
            let before = self.boundary.contains(&p);
            let after = member_after(p) && p.neighbors().iter().any(|&q| !member_after(q));
            delta += after as i64 - before as i64;
        }
        delta
    }

    fn potential_direct(&self, p: LatticePoint) -> f64 {
        let mut acc = CompensatedSum::new();
        for &y in &self.cells.items {
            acc.add(self.kind.inverse_length(p - y));
        }
        acc.value()
    }

    /// `2(Σ_{y∈Ω∖r} K(a-y) - Σ_{y∈Ω∖r} K(r-y))` from the cached potential.
    fn coulomb_delta(&self, mv: SwapMove) -> f64 {
        let at = |p| {
            self.potential
                .get(&p)
                .copied()
                .unwrap_or_else(|| self.potential_direct(p))
        };
        2.0 * (at(mv.add) - self.kind.inverse_length(mv.add - mv.remove) - at(mv.remove))
    }

    /// `E(after) - E(before)` without applying the move.
    pub fn move_delta(&self, mv: SwapMove) -> Result<f64> {
        self.validate_move(mv)?;
        Ok(self.perimeter_delta(mv) as f64 + self.coulomb_delta(mv))
    }

    fn apply_unchecked(&mut self, mv: SwapMove, coulomb_delta: f64) {
        self.cells.remove(mv.remove);
        self.shift_degree(mv.remove, false);
        self.cells.insert(mv.add);
        self.shift_degree(mv.add, true);
        let kind = self.kind;
        for (&p, v) in self.potential.iter_mut() {
            *v += kind.inverse_length(p - mv.add) - kind.inverse_length(p - mv.remove);
        }
        let mut affected = vec![mv.remove, mv.add];
        affected.extend(mv.remove.neighbors());
        affected.extend(mv.add.neighbors());
        for p in affected {
            self.refresh(p);
            let tracked = self.cells.contains(&p) || self.frontier.contains(&p);
            if !tracked {
                self.potential.remove(&p);
            } else if !self.potential.contains_key(&p) {
                let v = self.potential_direct(p);
                self.potential.insert(p, v);
            }
        }
        self.coulomb += coulomb_delta;
    }

    /// Whether the Ω-neighbours of `r` are linked inside its 3×3×3
    /// neighbourhood without passing through `r`. Sufficient for Ω∖{r} to
    /// stay connected when Ω is.
    fn locally_removable(&self, r: LatticePoint) -> bool {
        let attached: Vec<LatticePoint> = r
            .neighbors()
            .into_iter()
            .filter(|q| self.cells.contains(q))
            .collect();
        if attached.len() <= 1 {
            return true;
        }
        let near = |q: &LatticePoint| {
            let d = *q - r;
            d.x1.abs() <= 1 && d.x2.abs() <= 1 && d.x3.abs() <= 1 && d != LatticePoint::ORIGIN
        };
        let mut seen: HashSet<LatticePoint> = HashSet::from([attached[0]]);
        let mut stack = vec![attached[0]];
        while let Some(p) = stack.pop() {
            for q in p.neighbors() {
                if near(&q) && self.cells.contains(&q) && seen.insert(q) {
                    stack.push(q);
                }
            }
        }
        attached.iter().all(|q| seen.contains(q))
    }

    /// Whether Ω is still connected after `mv` was applied, assuming it was
    /// connected before.
    fn connected_after(&self, mv: SwapMove) -> bool {
        let attached = mv
            .remove
            .neighbors()
            .into_iter()
            .filter(|q| self.cells.contains(q))
            .count();
        if attached <= 1 {
            // Ω∖{r} stays connected; `a` must still touch it.
            return self.volume() == 1 || self.degree_of(mv.add) > 0;
        }
        if self.locally_removable(mv.remove) {
            return true;
        }
        let members: HashSet<LatticePoint> = self.cells.items.iter().copied().collect();
        reachable_from(&members, self.cells.items[0]) == members.len()
    }

    pub fn apply(&mut self, mv: SwapMove) -> Result<f64> {
        self.validate_move(mv)?;
        let dp = self.perimeter_delta(mv) as f64;
        let dc = self.coulomb_delta(mv);
        self.apply_unchecked(mv, dc);
        Ok(dp + dc)
    }

    /// A uniformly random boundary cell paired with a uniformly random frontier cell.
    pub fn random_move(&self, rng: &mut impl Rng) -> SwapMove {
        SwapMove {
            remove: self.boundary.sample(rng),
            add: self.frontier.sample(rng),
        }
    }

    /// Recompute the potential and Coulomb caches from scratch.
    pub fn resync(&mut self) {
        let tracked: Vec<LatticePoint> = self
            .cells
            .items
            .iter()
            .chain(&self.frontier.items)
            .copied()
            .collect();
        let values: Vec<f64> = tracked
            .par_iter()
            .map(|&p| self.potential_direct(p))
            .collect();
        self.potential = tracked.into_iter().zip(values).collect();
        self.coulomb = coulomb_sum(&self.cells.items, self.kind);
    }

    /// Serialize in the `TFDW-DROP 1` text format.
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "TFDW-DROP 1")?;
        writeln!(out, "kind: {}", self.kind)?;
        writeln!(out, "count: {}", self.volume())?;
        for p in self.cells() {
            writeln!(out, "{} {} {}", p.x1, p.x2, p.x3)?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<DropSet> {
        let mut lines = input.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((n, Ok(l))) => Ok((n, l)),
                Some((_, Err(e))) => Err(e.into()),
                None => Err(Error::parse(
                    0,
                    format!("unexpected end of input, expected {what}"),
                )),
            }
        };
        let (n, magic) = next("header")?;
        if magic.trim() != "TFDW-DROP 1" {
            return Err(Error::parse(
                n,
                format!("expected \"TFDW-DROP 1\", found {magic:?}"),
            ));
        }
        let (n, kind_line) = next("kind line")?;
        let kind: DistanceKind = kind_line
            .trim()
            .strip_prefix("kind:")
            .ok_or_else(|| Error::parse(n, "expected \"kind: ...\""))?
            .parse()
            .map_err(|e: Error| Error::parse(n, e.to_string()))?;
        let (n, count_line) = next("count line")?;
        let count: usize = count_line
            .trim()
            .strip_prefix("count:")
            .and_then(|s| s.trim().parse().ok())
            .ok_or_else(|| Error::parse(n, "expected \"count: V\""))?;
        let mut cells = Vec::with_capacity(count);
        for _ in 0..count {
            let (n, line) = next("cell")?;
            let c: Vec<i64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::parse(n, format!("invalid cell {line:?}")))?;
            let [a, b, d] =
                <[i64; 3]>::try_from(c).map_err(|_| Error::parse(n, "expected three integers"))?;
            cells.push(LatticePoint::new(a, b, d));
        }
        DropSet::new(&cells, kind).map_err(|e| Error::parse(3, e.to_string()))
    }
}

/// Energy of Ω from scratch.
pub fn drop_energy(drop: &DropSet) -> DropEnergy {
    set_energy(&drop.cells.items, drop.kind)
}

pub fn move_delta(drop: &DropSet, mv: SwapMove) -> Result<f64> {
    drop.move_delta(mv)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Schedule {
    /// Metropolis acceptance at temperature `t0 · cooling^sweep`; one sweep is `V` proposals.
    Anneal {
        t0: f64,
        cooling: f64,
        sweeps: usize,
        seed: u64,
    },
    /// Downhill-only moves until `20 V` consecutive proposals fail, repeated `restarts` times.
    Greedy { restarts: usize, seed: u64 },
}

impl Schedule {
    pub fn anneal(seed: u64) -> Self {
        Schedule::Anneal {
            t0: 1.0,
            cooling: 0.999,
            sweeps: 200,
            seed,
        }
    }

    pub fn seed(&self) -> u64 {
        match *self {
            Schedule::Anneal { seed, .. } | Schedule::Greedy { seed, .. } => seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Anneal { t0, cooling, .. } => {
                if !(t0 > 0.0) || !(cooling > 0.0 && cooling <= 1.0) {
                    return Err(Error::domain("anneal needs t0 > 0 and cooling in (0,1]"));
                }
            }
            Schedule::Greedy { restarts, .. } => {
                if restarts == 0 {
                    return Err(Error::domain("greedy search needs at least one restart"));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    /// Reject moves that disconnect Ω. When false, disconnected iterates are
    /// allowed and the best connected iterate is reported.
    pub connected_only: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            connected_only: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchTracePoint {
    pub sweep: usize,
    pub temperature: f64,
    pub current: f64,
    pub best: f64,
}

#[derive(Debug, Clone)]
pub struct DropSearchReport {
    pub best: DropSet,
    /// Recomputed from scratch.
    pub energy: DropEnergy,
    pub proposed: usize,
    pub accepted: usize,
    pub trace: Vec<SearchTracePoint>,
    pub connected: bool,
    /// Lowest energy over all iterates including disconnected ones (equals
    /// `energy.total` in connected-only mode).
    pub best_any_total: f64,
}

struct Searcher<'a> {
    rng: &'a mut ChaCha8Rng,
    options: SearchOptions,
    proposed: usize,
    accepted: usize,
    best: DropSet,
    best_total: f64,
    best_any: f64,
}

impl Searcher<'_> {
    /// One random proposal at temperature `temp` (zero means downhill only).
    fn step(&mut self, drop: &mut DropSet, temp: f64) -> bool {
        self.proposed += 1;
        let mv = drop.random_move(self.rng);
        if mv.remove == mv.add {
            return false;
        }
        let dp = drop.perimeter_delta(mv) as f64;
        let dc = drop.coulomb_delta(mv);
        let delta = dp + dc;
        let accept = if delta <= 0.0 {
            // Zero-cost moves let the shape drift; only strict gains count when greedy.
            temp > 0.0 || delta < -1e-12
        } else {
            temp > 0.0 && self.rng.gen::<f64>() < (-delta / temp).exp()
        };
        accept && self.commit(drop, mv, dc)
    }

    /// Apply `mv`, undoing it if it disconnects Ω in connected-only mode.
    fn commit(&mut self, drop: &mut DropSet, mv: SwapMove, dc: f64) -> bool {
        drop.apply_unchecked(mv, dc);
        let connected = if self.options.connected_only {
            drop.connected_after(mv)
        } else {
            drop.energy().total < self.best_total && drop.is_connected()
        };
        if self.options.connected_only && !connected {
            drop.apply_unchecked(
                SwapMove {
                    remove: mv.add,
                    add: mv.remove,
                },
                -dc,
            );
            return false;
        }
        self.accepted += 1;
        let total = drop.energy().total;
        self.best_any = self.best_any.min(total);
        if connected && total < self.best_total - 1e-12 {
            self.best_total = total;
            self.best = drop.clone();
        }
        true
    }

    /// Best improving move among the `STEEPEST_WIDTH` highest-potential
    /// boundary cells and lowest-potential frontier cells.
    fn steepest(&mut self, drop: &mut DropSet) -> bool {
        let ranked = |set: &IndexedSet, high: bool| {
            let mut v: Vec<(f64, LatticePoint)> =
                set.items.iter().map(|&p| (drop.potential[&p], p)).collect();
            v.sort_unstable_by(|a, b| {
                let o = a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
                if high {
                    o.reverse()
                } else {
                    o
                }
            });
            v.into_iter().map(|(_, p)| p)
        };
        let removes: Vec<LatticePoint> = ranked(&drop.boundary, true)
            .filter(|&r| !self.options.connected_only || drop.locally_removable(r))
            .take(STEEPEST_WIDTH)
            .collect();
        let adds: Vec<LatticePoint> = ranked(&drop.frontier, false).take(STEEPEST_WIDTH).collect();
        let mut moves = Vec::with_capacity(removes.len() * adds.len());
        for &remove in &removes {
            for &add in &adds {
                let mv = SwapMove { remove, add };
                let dc = drop.coulomb_delta(mv);
                let delta = drop.perimeter_delta(mv) as f64 + dc;
                if delta < -1e-12 {
                    moves.push((delta, mv, dc));
                }
            }
        }
        moves.sort_by(|a, b| a.0.total_cmp(&b.0));
        self.proposed += removes.len() * adds.len();
        moves
            .into_iter()
            .any(|(_, mv, dc)| self.commit(drop, mv, dc))
    }
}

const STEEPEST_WIDTH: usize = 12;

/// Volume-constrained search from the quasi-ball seed; the best connected
/// iterate is returned with its energy recomputed from scratch.
pub fn minimize_drop(
    volume: usize,
    kind: DistanceKind,
    schedule: Schedule,
    options: SearchOptions,
) -> Result<DropSearchReport> {
    if volume == 0 {
        return Err(Error::domain("volume must be >= 1"));
    }
    schedule.validate()?;
    let seed_drop = DropSet::quasi_ball(volume, kind)?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed());
    let start_total = seed_drop.energy().total;
    let mut searcher = Searcher {
        rng: &mut rng,
        options,
        proposed: 0,
        accepted: 0,
        best: seed_drop.clone(),
        best_total: start_total,
        best_any: start_total,
    };
    let mut trace = Vec::new();
    match schedule {
        Schedule::Anneal {
            t0,
            cooling,
            sweeps,
            ..
        } => {
            let mut drop = seed_drop;
            let mut temp = t0;
            for sweep in 0..sweeps {
                for _ in 0..volume {
                    searcher.step(&mut drop, temp);
                }
                if sweep % 32 == 31 {
                    drop.resync();
                }
                trace.push(SearchTracePoint {
                    sweep,
                    temperature: temp,
                    current: drop.energy().total,
                    best: searcher.best_total,
                });
                temp *= cooling;
            }
            // Polish the best shape downhill.
            let mut polish = searcher.best.clone();
            greedy_descent(&mut searcher, &mut polish);
        }
        Schedule::Greedy { restarts, .. } => {
            for restart in 0..restarts {
                let mut drop = if restart == 0 {
                    seed_drop.clone()
                } else {
                    searcher.best.clone()
                };
                if restart > 0 {
                    // Kick the incumbent with a few random moves before descending.
                    for _ in 0..volume.max(4) {
                        searcher.step(&mut drop, f64::INFINITY);
                    }
                }
                greedy_descent(&mut searcher, &mut drop);
                trace.push(SearchTracePoint {
                    sweep: restart,
                    temperature: 0.0,
                    current: drop.energy().total,
                    best: searcher.best_total,
                });
            }
        }
    }
    let best = searcher.best;
    let energy = drop_energy(&best);
    Ok(DropSearchReport {
        connected: best.is_connected(),
        best_any_total: searcher.best_any.min(energy.total),
        energy,
        proposed: searcher.proposed,
        accepted: searcher.accepted,
        trace,
        best,
    })
}

/// Steepest moves until none improves, then random downhill proposals until
/// `20 V` in a row fail; repeated while the random phase finds a gain. The
/// move budget bounds the descent when disconnected sets are allowed, since
/// their energy can decrease forever by spreading.
fn greedy_descent(searcher: &mut Searcher<'_>, drop: &mut DropSet) {
    let patience = 20 * drop.volume().max(10);
    let mut budget = 100 * drop.volume() + 1000;
    loop {
        while budget > 0 && searcher.steepest(drop) {
            budget -= 1;
            if budget % 256 == 0 {
                drop.resync();
            }
        }
        if budget == 0 {
            drop.resync();
            break;
        }
        let mut idle = 0;
        let mut improved = false;
        while idle < patience {
            if searcher.step(drop, 0.0) {
                improved = true;
                break;
            }
            idle += 1;
        }
        drop.resync();
        if !improved {
            break;
        }
    }
}

/// Translate so the minimum coordinate on each axis is zero, then sort.
fn canonical(cells: &[LatticePoint]) -> Vec<LatticePoint> {
    let lo = cells.iter().fold([i64::MAX; 3], |m, p| {
        [m[0].min(p.x1), m[1].min(p.x2), m[2].min(p.x3)]
    });
    let shift = LatticePoint::from_coords(lo);
    let mut out: Vec<LatticePoint> = cells.iter().map(|&p| p - shift).collect();
    out.sort_unstable();
    out
}

/// All fixed polycubes (connected sets up to translation) of `volume` cells,
/// in sorted canonical form.
pub fn enumerate_polycubes(volume: usize) -> Result<Vec<Vec<LatticePoint>>> {
    if volume == 0 {
        return Err(Error::domain("volume must be >= 1"));
    }
    if volume > 6 {
        return Err(Error::Budget(format!(
            "exact enumeration is limited to volume <= 6, got {volume}"
        )));
    }
    let mut level: HashSet<Vec<LatticePoint>> = HashSet::from([vec![LatticePoint::ORIGIN]]);
    for _ in 1..volume {
        let mut next = HashSet::new();
        for shape in &level {
            let members: HashSet<LatticePoint> = shape.iter().copied().collect();
            for p in shape {
                for q in p.neighbors() {
                    if !members.contains(&q) {
                        let mut grown = shape.clone();
                        grown.push(q);
                        next.insert(canonical(&grown));
                    }
                }
            }
        }
        level = next;
    }
    let mut shapes: Vec<_> = level.into_iter().collect();
    shapes.sort();
    Ok(shapes)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExactOptimum {
    pub volume: usize,
    pub kind: DistanceKind,
    pub cells: Vec<LatticePoint>,
    pub energy: DropEnergy,
    pub shapes_enumerated: usize,
    /// Energy of `V` isolated cells pushed infinitely far apart: the infimum
    /// over all sets, approached but never attained for `V >= 2`.
    pub separation_infimum: f64,
}

/// Connected optimum by exhaustive enumeration, `V <= 6`.
pub fn exact_enumeration_oracle(volume: usize, kind: DistanceKind) -> Result<ExactOptimum> {
    let shapes = enumerate_polycubes(volume)?;
    let (cells, energy) = shapes
        .iter()
        .map(|s| (s, set_energy(s, kind)))
        .min_by(|a, b| a.1.total.total_cmp(&b.1.total))
        .map(|(s, e)| (s.clone(), e))
        .expect("at least one shape");
    Ok(ExactOptimum {
        volume,
        kind,
        cells,
        energy,
        shapes_enumerated: shapes.len(),
        separation_infimum: volume as f64,
    })
}

/// Energy of `V` cells spaced `gap` apart on a line: tends to `V` as `gap` grows.
pub fn separated_cells_energy(volume: usize, gap: i64, kind: DistanceKind) -> DropEnergy {
    let cells: Vec<LatticePoint> = (0..volume as i64)
        .map(|i| LatticePoint::E1.scale(i * gap))
        .collect();
    set_energy(&cells, kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowOptima {
    /// Minimum over connected subsets of the window.
    pub connected: f64,
    /// Minimum over all subsets of the window.
    pub any: f64,
    pub subsets: usize,
}

/// Minimum energy over every `volume`-subset of the `side³` window.
pub fn window_subset_optima(volume: usize, side: i64, kind: DistanceKind) -> Result<WindowOptima> {
    if volume == 0 || volume > 4 {
        return Err(Error::Budget(format!(
            "all-subset enumeration is limited to volume 1..=4, got {volume}"
        )));
    }
    let points: Vec<LatticePoint> = (0..side)
        .flat_map(|a| {
            (0..side).flat_map(move |b| (0..side).map(move |c| LatticePoint::new(a, b, c)))
        })
        .collect();
    let n = points.len();
    let mut idx: Vec<usize> = (0..volume).collect();
    let mut best = WindowOptima {
        connected: f64::INFINITY,
        any: f64::INFINITY,
        subsets: 0,
    };
    loop {
        let cells: Vec<LatticePoint> = idx.iter().map(|&i| points[i]).collect();
        let e = set_energy(&cells, kind).total;
        best.subsets += 1;
        best.any = best.any.min(e);
        if e < best.connected && is_connected(&cells).unwrap_or(false) {
            best.connected = e;
        }
        // Next combination in lexicographic order.
        let mut k = volume;
        while k > 0 && idx[k - 1] == n - volume + k - 1 {
            k -= 1;
        }
        if k == 0 {
            break;
        }
        idx[k - 1] += 1;
        for j in k..volume {
            idx[j] = idx[j - 1] + 1;
        }
    }
    Ok(best)
}

/// `A(t) = |{(x,y) ∈ Ω×Ω : d(x,y) < t}|` in graph distance, for `t = 1..=diam+1`.
/// Diagonal pairs are included, so `A(1) = V`.
pub fn pair_count_profile(cells: &[LatticePoint]) -> Vec<(u64, u64)> {
    let diam = diameter(cells);
    let mut at = vec![0u64; diam as usize + 1];
    for &x in cells {
        for &y in cells {
            at[x.graph_distance(y) as usize] += 1;
        }
    }
    let mut acc = 0;
    (1..=diam + 1)
        .map(|t| {
            acc += at[t as usize - 1];
            (t, acc)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainBound {
    /// `Σ_{t=1}^{⌊diam/2⌋} A(t)/(t(t+1))`.
    pub bound: f64,
    pub coulomb: f64,
    pub holds: bool,
}

/// Compare the Coulomb sum with the pair-count lower bound.
pub fn coulomb_chain_bound(cells: &[LatticePoint], kind: DistanceKind) -> ChainBound {
    let profile = pair_count_profile(cells);
    let half = diameter(cells) / 2;
    let mut acc = CompensatedSum::new();
    for &(t, a) in profile.iter().take_while(|(t, _)| *t <= half) {
        acc.add(a as f64 / (t * (t + 1)) as f64);
    }
    let coulomb = coulomb_sum(cells, kind);
    let bound = acc.value();
    ChainBound {
        bound,
        coulomb,
        holds: coulomb >= bound,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub volume: usize,
    pub perimeter: usize,
    pub coulomb: f64,
    pub total: f64,
    pub total_over_v: f64,
    pub coulomb_over_v_log_v: f64,
    pub connected: bool,
    pub chain: ChainBound,
    pub cells: Vec<LatticePoint>,
}

pub const SCALING_CSV_HEADER: [&str; 9] = [
    "V",
    "perimeter",
    "coulomb",
    "total",
    "total_over_V",
    "coulomb_over_V_log_V",
    "connected",
    "chain_bound",
    "chain_holds",
];

impl ScalingRow {
    pub fn csv_record(&self) -> [String; 9] {
        [
            self.volume.to_string(),
            self.perimeter.to_string(),
            format!("{:e}", self.coulomb),
            format!("{:e}", self.total),
            format!("{:e}", self.total_over_v),
            format!("{:e}", self.coulomb_over_v_log_v),
            self.connected.to_string(),
            format!("{:e}", self.chain.bound),
            self.chain.holds.to_string(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropSubadditivitySample {
    pub v0: usize,
    pub v1: usize,
    pub e_v0: f64,
    pub e_v1: f64,
    /// Energy of the two optima placed far apart: an upper bound for `E(V₀+V₁)`.
    pub e_union: f64,
    /// Connected search result at `V₀+V₁`, if that volume was in the study.
    pub e_connected_whole: Option<f64>,
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub kind: DistanceKind,
    pub rows: Vec<ScalingRow>,
    pub subadditivity: Vec<DropSubadditivitySample>,
}

impl ScalingStudy {
    /// `max/min` of a positive column.
    pub fn spread(values: impl Iterator<Item = f64>) -> f64 {
        let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
        hi / lo
    }
}

/// Union of `a` and `b` shifted along `e₁` until the cross Coulomb term is
/// at most `slack / 2`.
pub fn separated_union(a: &[LatticePoint], b: &[LatticePoint], slack: f64) -> Vec<LatticePoint> {
    let max_a = a.iter().map(|p| p.x1).max().unwrap_or(0);
    let min_b = b.iter().map(|p| p.x1).min().unwrap_or(0);
    // Cross term 2 V₀ V₁ / gap <= slack / 2.
    let gap = ((4.0 * a.len() as f64 * b.len() as f64) / slack).ceil() as i64 + 2;
    let shift = LatticePoint::E1.scale(max_a - min_b + gap);
    a.iter()
        .copied()
        .chain(b.iter().map(|&p| p + shift))
        .collect()
}

/// Run the search for every volume (in parallel) and tabulate the scaling columns.
pub fn scaling_study(
    volumes: &[usize],
    kind: DistanceKind,
    schedule: Schedule,
    options: SearchOptions,
    slack: f64,
) -> Result<ScalingStudy> {
    if volumes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::domain("volumes must be strictly ascending"));
    }
    let reports: Vec<Result<DropSearchReport>> = volumes
        .par_iter()
        .map(|&v| minimize_drop(v, kind, schedule, options))
        .collect();
    let reports: Vec<DropSearchReport> = reports.into_iter().collect::<Result<_>>()?;
    let rows: Vec<ScalingRow> = reports
        .iter()
        .map(|r| {
            let v = r.best.volume();
            let cells = r.best.cells();
            ScalingRow {
                volume: v,
                perimeter: r.energy.perimeter,
                coulomb: r.energy.coulomb,
                total: r.energy.total,
                total_over_v: r.energy.total / v as f64,
                coulomb_over_v_log_v: if v > 1 {
                    r.energy.coulomb / (v as f64 * (v as f64).ln())
                } else {
                    f64::NAN
                },
                connected: r.connected,
                chain: coulomb_chain_bound(&cells, kind),
                cells,
            }
        })
        .collect();
    let mut subadditivity = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i..] {
            let whole = a.volume + b.volume;
            let e_whole = rows.iter().find(|r| r.volume == whole).map(|r| r.total);
            if e_whole.is_none() && !std::ptr::eq(a, b) {
                continue;
            }
            let union = separated_union(&a.cells, &b.cells, slack);
            let e_union = set_energy(&union, kind).total;
            subadditivity.push(DropSubadditivitySample {
                v0: a.volume,
                v1: b.volume,
                e_v0: a.total,
                e_v1: b.total,
                e_union,
                e_connected_whole: e_whole,
                slack,
                holds: e_union <= a.total + b.total + slack,
            });
        }
    }
    Ok(ScalingStudy {
        kind,
        rows,
        subadditivity,
    })
}

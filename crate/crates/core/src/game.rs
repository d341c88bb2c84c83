//! The coalitional game of a streaming problem and its core.
//!
//! `v(S)` is the revenue of the users whose listened set lies inside the
//! artist coalition `S`. Coalitions are bitmasks over at most
//! [`MAX_PLAYERS`] artists. Core membership is decided two independent
//! ways: [`in_core_direct`] enumerates every coalition, [`in_core_flow`]
//! looks for a split of each user's fee over the artists that user
//! listened to, as a transportation problem solved by exact max-flow.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::flow::FlowNetwork;
use crate::problem::StreamingProblem;
use crate::rational::{self, Rational};

pub const MAX_PLAYERS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GameError {
    #[error("{0} players exceed the coalition-enumeration limit of {MAX_PLAYERS}")]
    TooManyPlayers(usize),
    #[error("expected {expected} characteristic values, got {got}")]
    ValueCount { expected: usize, got: usize },
    #[error("v(empty set) must be zero")]
    NonZeroEmptyCoalition,
    #[error("allocation has {got} entries for {expected} players")]
    AllocationLength { expected: usize, got: usize },
    #[error("allocation is not in the core")]
    NotInCore,
}

/// A TU game: players and `v(S)` for every bitmask `S`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoalitionalGame {
    players: Vec<String>,
    values: Vec<Rational>,
}

impl CoalitionalGame {
    pub fn new(players: Vec<String>, values: Vec<Rational>) -> Result<Self, GameError> {
        if players.len() > MAX_PLAYERS {
            return Err(GameError::TooManyPlayers(players.len()));
        }
        let expected = 1usize << players.len();
        if values.len() != expected {
            return Err(GameError::ValueCount {
                expected,
                got: values.len(),
            });
        }
        if !values[0].is_zero() {
            return Err(GameError::NonZeroEmptyCoalition);
        }
        Ok(Self { players, values })
    }

    pub fn from_fn(players: Vec<String>, v: impl Fn(usize) -> Rational) -> Result<Self, GameError> {
        if players.len() > MAX_PLAYERS {
            return Err(GameError::TooManyPlayers(players.len()));
        }
        let values = (0..1usize << players.len()).map(v).collect();
        Self::new(players, values)
    }

    pub fn players(&self) -> &[String] {
        &self.players
    }

    pub fn n_players(&self) -> usize {
        self.players.len()
    }

    pub fn value(&self, coalition: usize) -> &Rational {
        &self.values[coalition]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }

    pub fn grand_coalition(&self) -> usize {
        (1usize << self.players.len()) - 1
    }

    pub fn members(&self, coalition: usize) -> Vec<&str> {
        members(coalition, self.players.len())
            .map(|i| self.players[i].as_str())
            .collect()
    }
}

fn members(coalition: usize, n: usize) -> impl Iterator<Item = usize> {
    (0..n).filter(move |i| coalition >> i & 1 == 1)
}

/// Comma-joined member ids in player order; the empty coalition is `""`.
pub fn coalition_label(players: &[String], coalition: usize) -> String {
    members(coalition, players.len())
        .map(|i| players[i].as_str())
        .collect::<Vec<_>>()
        .join(",")
}

pub fn streaming_game(problem: &StreamingProblem) -> Result<CoalitionalGame, GameError> {
    let n = problem.n_artists();
    if n > MAX_PLAYERS {
        return Err(GameError::TooManyPlayers(n));
    }
    // users per exact listened set, then summed over subsets
    let mut counts = vec![0u64; 1 << n];
    for j in 0..problem.n_users() {
        counts[problem.listened_mask(j) as usize] += 1;
    }
    for bit in 0..n {
        for s in 0..1usize << n {
            if s >> bit & 1 == 1 {
                counts[s] += counts[s ^ (1 << bit)];
            }
        }
    }
    let fee = problem.fee();
    let values = counts
        .into_iter()
        .map(|c| rational::from_u64(c) * fee)
        .collect();
    CoalitionalGame::new(problem.artists().to_vec(), values)
}

/// A failed instance of `v(S∪i) − v(S) ≤ v(T∪i) − v(T)` with `S ⊆ T`,
/// `i ∉ T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SupermodularityViolation {
    pub smaller: usize,
    pub larger: usize,
    pub player: usize,
}

/// Checks supermodularity through the equivalent local condition
/// `v(S∪{i,k}) − v(S∪{k}) ≥ v(S∪{i}) − v(S)` for all `S` and `i, k ∉ S`.
pub fn is_supermodular(game: &CoalitionalGame) -> Result<(), SupermodularityViolation> {
    let n = game.n_players();
    for s in 0..1usize << n {
        for i in (0..n).filter(|i| s >> i & 1 == 0) {
            let gain_small = game.value(s | 1 << i) - game.value(s);
            for k in (0..n).filter(|&k| k != i && s >> k & 1 == 0) {
                let t = s | 1 << k;
                let gain_large = game.value(t | 1 << i) - game.value(t);
                if gain_small > gain_large {
                    return Err(SupermodularityViolation {
                        smaller: s,
                        larger: t,
                        player: i,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Harsanyi dividends `Δ(R)`, indexed by bitmask (`Δ(∅) = 0`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DividendTable {
    n_players: usize,
    values: Vec<Rational>,
}

impl DividendTable {
    pub fn new(n_players: usize, values: Vec<Rational>) -> Result<Self, GameError> {
        if n_players > MAX_PLAYERS {
            return Err(GameError::TooManyPlayers(n_players));
        }
        let expected = 1usize << n_players;
        if values.len() != expected {
            return Err(GameError::ValueCount {
                expected,
                got: values.len(),
            });
        }
        if !values[0].is_zero() {
            return Err(GameError::NonZeroEmptyCoalition);
        }
        Ok(Self { n_players, values })
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn get(&self, coalition: usize) -> &Rational {
        &self.values[coalition]
    }

    pub fn values(&self) -> &[Rational] {
        &self.values
    }
}

/// Möbius inversion of `v`: `Δ(R) = Σ_{S ⊆ R} (−1)^{|R|−|S|} v(S)`.
pub fn harsanyi_dividends(game: &CoalitionalGame) -> DividendTable {
    let n = game.n_players();
    let mut d = game.values.clone();
    for bit in 0..n {
        for s in 0..1usize << n {
            if s >> bit & 1 == 1 {
                let lower = d[s ^ (1 << bit)].clone();
                d[s] -= lower;
            }
        }
    }
    DividendTable {
        n_players: n,
        values: d,
    }
}

/// `v(S) = Σ_{∅ ≠ R ⊆ S} Δ(R)`.
pub fn reconstruct_from_dividends(
    dividends: &DividendTable,
    players: Vec<String>,
) -> Result<CoalitionalGame, GameError> {
    let n = dividends.n_players;
    if players.len() != n {
        return Err(GameError::ValueCount {
            expected: 1 << players.len(),
            got: dividends.values.len(),
        });
    }
    let mut v = dividends.values.clone();
    for bit in 0..n {
        for s in 0..1usize << n {
            if s >> bit & 1 == 1 {
                let lower = v[s ^ (1 << bit)].clone();
                v[s] += lower;
            }
        }
    }
    CoalitionalGame::new(players, v)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoreVerdict {
    Member,
    /// `Σ_N x ≠ v(N)`.
    Inefficient {
        total: Rational,
        worth: Rational,
    },
    /// Smallest bitmask `S` with `Σ_S x < v(S)`.
    Blocked {
        coalition: usize,
        payoff: Rational,
        worth: Rational,
    },
}

impl CoreVerdict {
    pub fn is_member(&self) -> bool {
        matches!(self, CoreVerdict::Member)
    }

    pub fn blocking_coalition(&self) -> Option<usize> {
        match self {
            CoreVerdict::Blocked { coalition, .. } => Some(*coalition),
            _ => None,
        }
    }
}

/// Core membership by checking every coalition.
pub fn in_core_direct(
    game: &CoalitionalGame,
    allocation: &[Rational],
) -> Result<CoreVerdict, GameError> {
    let n = game.n_players();
    if allocation.len() != n {
        return Err(GameError::AllocationLength {
            expected: n,
            got: allocation.len(),
        });
    }
    let total = rational::sum(allocation);
    let worth = game.value(game.grand_coalition());
    if &total != worth {
        return Ok(CoreVerdict::Inefficient {
            total,
            worth: worth.clone(),
        });
    }
    let mut payoff = vec![Rational::zero(); 1 << n];
    for s in 1..1usize << n {
        let low = s.trailing_zeros() as usize;
        payoff[s] = &payoff[s & (s - 1)] + &allocation[low];
        if &payoff[s] < game.value(s) {
            return Ok(CoreVerdict::Blocked {
                coalition: s,
                payoff: payoff[s].clone(),
                worth: game.value(s).clone(),
            });
        }
    }
    Ok(CoreVerdict::Member)
}

/// Per-user split `x^j` of the fee over the user's listened artists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoreDecomposition {
    shares: Vec<Vec<Rational>>,
}

impl CoreDecomposition {
    pub fn new(shares: Vec<Vec<Rational>>) -> Self {
        Self { shares }
    }

    /// `shares()[j][i]` is user `j`'s payment to artist `i`.
    pub fn shares(&self) -> &[Vec<Rational>] {
        &self.shares
    }

    /// Sum over users.
    pub fn allocation(&self, n_artists: usize) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); n_artists];
        for share in &self.shares {
            for (xi, s) in x.iter_mut().zip(share) {
                *xi += s;
            }
        }
        x
    }

    /// Support, sign and per-user total constraints, plus summing to
    /// `allocation`.
    pub fn is_valid_for(&self, problem: &StreamingProblem, allocation: &[Rational]) -> bool {
        if self.shares.len() != problem.n_users() {
            return false;
        }
        let shape_ok = self.shares.iter().enumerate().all(|(j, share)| {
            share.len() == problem.n_artists()
                && share.iter().enumerate().all(|(i, s)| {
                    if problem.t(i, j) == 0 {
                        s.is_zero()
                    } else {
                        *s >= Rational::zero()
                    }
                })
                && &rational::sum(share) == problem.fee()
        });
        shape_ok && self.allocation(problem.n_artists()) == allocation
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FlowVerdict {
    Member(CoreDecomposition),
    NegativeEntry(usize),
    WrongTotal {
        total: Rational,
        revenue: Rational,
    },
    /// The fees cannot be routed to match the allocation; `routed` is
    /// the maximum that can.
    Infeasible {
        routed: Rational,
        revenue: Rational,
    },
}

impl FlowVerdict {
    pub fn is_member(&self) -> bool {
        matches!(self, FlowVerdict::Member(_))
    }

    pub fn decomposition(&self) -> Option<&CoreDecomposition> {
        match self {
            FlowVerdict::Member(d) => Some(d),
            _ => None,
        }
    }
}

/// Core membership as a transportation feasibility problem.
///
/// Network: source → user `j` (capacity fee), user `j` → artist `i` when
/// `t_ij > 0` (capacity fee, which never binds), artist `i` → sink
/// (capacity `x_i`). All capacities are scaled to integers by the least
/// common denominator. Members are exactly the allocations whose max flow
/// equals the revenue.
pub fn in_core_flow(
    problem: &StreamingProblem,
    allocation: &[Rational],
) -> Result<FlowVerdict, GameError> {
    let n = problem.n_artists();
    let m = problem.n_users();
    if allocation.len() != n {
        return Err(GameError::AllocationLength {
            expected: n,
            got: allocation.len(),
        });
    }
    if let Some(i) = allocation.iter().position(|x| *x < Rational::zero()) {
        return Ok(FlowVerdict::NegativeEntry(i));
    }
    let total = rational::sum(allocation);
    let revenue = problem.revenue();
    if total != revenue {
        return Ok(FlowVerdict::WrongTotal { total, revenue });
    }

    let scale = rational::common_denominator(allocation.iter().chain([problem.fee()]));
    let to_int = |r: &Rational| -> BigInt {
        let scaled = r * Rational::from_integer(scale.clone());
        debug_assert!(scaled.is_integer());
        scaled.to_integer()
    };
    let fee = to_int(problem.fee());

    let source = 0;
    let user_node = |j: usize| 1 + j;
    let artist_node = |i: usize| 1 + m + i;
    let sink = 1 + m + n;
    let mut net = FlowNetwork::new(m + n + 2);
    for j in 0..m {
        net.add_edge(source, user_node(j), fee.clone());
    }
    let mut share_edges = Vec::new();
    for j in 0..m {
        for i in problem.listened(j) {
            share_edges.push((
                j,
                i,
                net.add_edge(user_node(j), artist_node(i), fee.clone()),
            ));
        }
    }
    for (i, x) in allocation.iter().enumerate() {
        net.add_edge(artist_node(i), sink, to_int(x));
    }

    let routed = net.max_flow(source, sink);
    let scale_r = Rational::from_integer(scale);
    if routed != fee * BigInt::from(m) {
        return Ok(FlowVerdict::Infeasible {
            routed: Rational::from_integer(routed) / scale_r,
            revenue,
        });
    }
    let mut shares = vec![vec![Rational::zero(); n]; m];
    for (j, i, edge) in share_edges {
        shares[j][i] = Rational::from_integer(net.flow(edge)) / &scale_r;
    }
    Ok(FlowVerdict::Member(CoreDecomposition { shares }))
}

pub fn extract_decomposition(
    problem: &StreamingProblem,
    allocation: &[Rational],
) -> Result<CoreDecomposition, GameError> {
    match in_core_flow(problem, allocation)? {
        FlowVerdict::Member(d) => Ok(d),
        _ => Err(GameError::NotInCore),
    }
}

/// At least three users and nobody listened to every artist.
pub fn in_domain_pstar(problem: &StreamingProblem) -> bool {
    problem.n_users() >= 3
        && (0..problem.n_users()).all(|j| problem.listened(j).len() < problem.n_artists())
}

#[derive(Debug, Clone, Serialize)]
pub struct GameJson {
    pub players: Vec<String>,
    pub values: serde_json::Map<String, serde_json::Value>,
}

impl GameJson {
    pub fn new(game: &CoalitionalGame) -> Self {
        Self {
            players: game.players.clone(),
            values: coalition_map(&game.players, &game.values),
        }
    }
}

/// `{"<ids>": "p/q"}` over every coalition in bitmask order.
pub fn coalition_map(
    players: &[String],
    values: &[Rational],
) -> serde_json::Map<String, serde_json::Value> {
    values
        .iter()
        .enumerate()
        .map(|(s, v)| (coalition_label(players, s), rational::to_text(v).into()))
        .collect()
}

/// `{"<user>": ["p/q", ...]}` in user order.
pub fn decomposition_json(
    problem: &StreamingProblem,
    decomposition: &CoreDecomposition,
) -> serde_json::Map<String, serde_json::Value> {
    problem
        .users()
        .iter()
        .zip(decomposition.shares())
        .map(|(u, share)| {
            let v: Vec<serde_json::Value> =
                share.iter().map(|s| rational::to_text(s).into()).collect();
            (u.clone(), v.into())
        })
        .collect()
}

/// Unanimity game `u_R`: 1 on supersets of `R`, else 0.
pub fn unanimity_game(players: Vec<String>, carrier: usize) -> Result<CoalitionalGame, GameError> {
    CoalitionalGame::from_fn(players, |s| {
        if carrier != 0 && s & carrier == carrier {
            Rational::one()
        } else {
            Rational::zero()
        }
    })
}

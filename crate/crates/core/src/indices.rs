//! Popularity indices and the reward map.
//!
//! Every index here is a function from a [`StreamingProblem`] to
//! nonnegative per-artist scores; [`rewards`] turns scores into payouts
//! proportional to them. [`Index`] wraps all of them as first-class values
//! so the axiom checkers can treat them uniformly.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_traits::{One, Zero};

use crate::problem::StreamingProblem;
use crate::rational::{self, from_u64, Rational};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("weight system {system} returned non-positive weight {weight} for user {user:?}")]
    NonPositiveWeight {
        system: String,
        user: String,
        weight: Rational,
    },
    #[error("index scores sum to zero")]
    ZeroIndexSum,
    #[error("negative index score {0}")]
    NegativeScore(Rational),
    #[error("index has {got} scores but the problem has {expected} artists")]
    LengthMismatch { expected: usize, got: usize },
    #[error("banded weights need 0 < alpha <= beta, got alpha={alpha}, beta={beta}")]
    InvalidBand { alpha: u64, beta: u64 },
    #[error("unknown index {0:?}")]
    UnknownIndex(String),
}

/// Per-artist scores of an index on one problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexValues(Vec<Rational>);

impl IndexValues {
    pub fn new(scores: Vec<Rational>) -> Result<Self, IndexError> {
        if let Some(s) = scores.iter().find(|s| **s < Rational::zero()) {
            return Err(IndexError::NegativeScore(s.clone()));
        }
        Ok(Self(scores))
    }

    pub fn scores(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_scores(self) -> Vec<Rational> {
        self.0
    }

    pub fn total(&self) -> Rational {
        rational::sum(&self.0)
    }

    /// `λ · I` for `λ > 0`.
    pub fn scaled(&self, lambda: &Rational) -> Self {
        Self(self.0.iter().map(|s| s * lambda).collect())
    }
}

/// Per-artist payouts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation(Vec<Rational>);

impl Allocation {
    pub fn new(payouts: Vec<Rational>) -> Self {
        Self(payouts)
    }

    pub fn payouts(&self) -> &[Rational] {
        &self.0
    }

    pub fn into_payouts(self) -> Vec<Rational> {
        self.0
    }

    pub fn total(&self) -> Rational {
        rational::sum(&self.0)
    }
}

/// A strictly positive weight for each (user, streaming profile) pair.
///
/// Profiles passed in always have a positive total. Implementations hold
/// no interior mutability and may be evaluated concurrently.
pub trait WeightSystem: Send + Sync {
    fn name(&self) -> String;
    fn weight(&self, user: &str, profile: &[u64]) -> Rational;
}

/// Every stream counts the same: yields pro-rata.
#[derive(Debug, Clone, Copy, Default)]
pub struct UnitWeights;

impl WeightSystem for UnitWeights {
    fn name(&self) -> String {
        "unit".to_string()
    }

    fn weight(&self, _user: &str, _profile: &[u64]) -> Rational {
        Rational::one()
    }
}

/// `1 / Σx`: every user carries the same total weight, yields user-centric.
#[derive(Debug, Clone, Copy, Default)]
pub struct InverseTotalWeights;

impl WeightSystem for InverseTotalWeights {
    fn name(&self) -> String {
        "inverse-total".to_string()
    }

    fn weight(&self, _user: &str, profile: &[u64]) -> Rational {
        Rational::new(1.into(), profile.iter().sum::<u64>().into())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BandedWeightParams {
    alpha: u64,
    beta: u64,
}

impl BandedWeightParams {
    pub fn new(alpha: u64, beta: u64) -> Result<Self, IndexError> {
        if alpha == 0 || alpha > beta {
            return Err(IndexError::InvalidBand { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> u64 {
        self.alpha
    }

    pub fn beta(&self) -> u64 {
        self.beta
    }
}

/// Light users (total ≤ α) weigh like user-centric, medium users
/// (α < total ≤ β) get a flat per-stream weight `1/α`, heavy users
/// (total > β) are capped at a total importance of `β/α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BandedWeights(BandedWeightParams);

pub fn banded_weight_system(params: BandedWeightParams) -> BandedWeights {
    BandedWeights(params)
}

impl BandedWeights {
    pub fn params(&self) -> BandedWeightParams {
        self.0
    }
}

impl WeightSystem for BandedWeights {
    fn name(&self) -> String {
        format!("banded(alpha={}, beta={})", self.0.alpha, self.0.beta)
    }

    fn weight(&self, _user: &str, profile: &[u64]) -> Rational {
        let total: u64 = profile.iter().sum();
        let BandedWeightParams { alpha, beta } = self.0;
        if total <= alpha {
            Rational::new(1.into(), total.into())
        } else if total <= beta {
            Rational::new(1.into(), alpha.into())
        } else {
            Rational::new(beta.into(), (u128::from(alpha) * u128::from(total)).into())
        }
    }
}

/// Fixed weight per user id; unknown users get zero, which
/// [`weighted_index`] rejects.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableWeights {
    name: String,
    weights: HashMap<String, Rational>,
}

impl TableWeights {
    pub fn new(name: impl Into<String>, weights: HashMap<String, Rational>) -> Self {
        Self {
            name: name.into(),
            weights,
        }
    }
}

impl WeightSystem for TableWeights {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn weight(&self, user: &str, _profile: &[u64]) -> Rational {
        self.weights
            .get(user)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }
}

/// `P_i = T_i`.
pub fn pro_rata_index(problem: &StreamingProblem) -> IndexValues {
    IndexValues(
        (0..problem.n_artists())
            .map(|i| from_u64(problem.row_total(i)))
            .collect(),
    )
}

/// `U_i = Σ_j t_ij / T^j`.
pub fn user_centric_index(problem: &StreamingProblem) -> IndexValues {
    let totals: Vec<u64> = (0..problem.n_users())
        .map(|j| problem.column_total(j))
        .collect();
    IndexValues(
        problem
            .streams()
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&totals)
                    .filter(|(t, _)| **t > 0)
                    .fold(Rational::zero(), |acc, (&t, &total)| {
                        acc + Rational::new(t.into(), total.into())
                    })
            })
            .collect(),
    )
}

/// `I_i = Σ_j ω(j, t_{.j}) · t_ij`.
pub fn weighted_index(
    problem: &StreamingProblem,
    weights: &dyn WeightSystem,
) -> Result<IndexValues, IndexError> {
    let mut scores = vec![Rational::zero(); problem.n_artists()];
    for j in 0..problem.n_users() {
        let profile = problem.profile(j);
        let user = &problem.users()[j];
        let w = weights.weight(user, &profile);
        if w <= Rational::zero() {
            return Err(IndexError::NonPositiveWeight {
                system: weights.name(),
                user: user.clone(),
                weight: w,
            });
        }
        for (score, &t) in scores.iter_mut().zip(&profile) {
            if t > 0 {
                *score += &w * from_u64(t);
            }
        }
    }
    Ok(IndexValues(scores))
}

/// The five indices used to show the axioms are independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Counterexample {
    /// `I¹_i = 1`.
    I1,
    /// `I²_i = Σ_j (t_ij + T_i) / (T^j + Σ_k T_k)`.
    I2,
    /// `I³_i = Σ_j t_ij²`.
    I3,
    /// `I⁴_i = m · T_i / Σ_k T_k`.
    I4,
    /// `I⁵_i = Σ_{j : i ∈ L^j} 1 / |L^j|`.
    I5,
}

impl Counterexample {
    pub const ALL: [Counterexample; 5] = [
        Counterexample::I1,
        Counterexample::I2,
        Counterexample::I3,
        Counterexample::I4,
        Counterexample::I5,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Counterexample::I1 => "I1",
            Counterexample::I2 => "I2",
            Counterexample::I3 => "I3",
            Counterexample::I4 => "I4",
            Counterexample::I5 => "I5",
        }
    }
}

pub fn counterexample_index(which: Counterexample, problem: &StreamingProblem) -> IndexValues {
    let n = problem.n_artists();
    let m = problem.n_users();
    let row_totals: Vec<u64> = (0..n).map(|i| problem.row_total(i)).collect();
    let col_totals: Vec<u64> = (0..m).map(|j| problem.column_total(j)).collect();
    let grand = problem.grand_total();
    let scores = match which {
        Counterexample::I1 => vec![Rational::one(); n],
        Counterexample::I2 => (0..n)
            .map(|i| {
                (0..m).fold(Rational::zero(), |acc, j| {
                    acc + Rational::new(
                        (problem.t(i, j) + row_totals[i]).into(),
                        (col_totals[j] + grand).into(),
                    )
                })
            })
            .collect(),
        Counterexample::I3 => (0..n)
            .map(|i| {
                let squares: u128 = problem.streams()[i]
                    .iter()
                    .map(|&t| u128::from(t) * u128::from(t))
                    .sum();
                Rational::from_integer(squares.into())
            })
            .collect(),
        Counterexample::I4 => row_totals
            .iter()
            .map(|&t| Rational::new((u128::from(t) * m as u128).into(), grand.into()))
            .collect(),
        Counterexample::I5 => {
            let sizes: Vec<u64> = (0..m).map(|j| problem.listened(j).len() as u64).collect();
            (0..n)
                .map(|i| {
                    (0..m)
                        .filter(|&j| problem.t(i, j) > 0)
                        .fold(Rational::zero(), |acc, j| {
                            acc + Rational::new(1.into(), sizes[j].into())
                        })
                })
                .collect()
        }
    };
    IndexValues(scores)
}

/// `R_i = fee · m · I_i / Σ I`.
pub fn rewards(problem: &StreamingProblem, index: &IndexValues) -> Result<Allocation, IndexError> {
    if index.0.len() != problem.n_artists() {
        return Err(IndexError::LengthMismatch {
            expected: problem.n_artists(),
            got: index.0.len(),
        });
    }
    let total = index.total();
    if total.is_zero() {
        return Err(IndexError::ZeroIndexSum);
    }
    let scale = problem.revenue() / total;
    Ok(Allocation(index.0.iter().map(|s| s * &scale).collect()))
}

/// Any index as a value.
#[derive(Clone)]
pub enum Index {
    ProRata,
    UserCentric,
    Banded(BandedWeightParams),
    Weighted(Arc<dyn WeightSystem>),
    Counterexample(Counterexample),
}

impl Index {
    pub fn name(&self) -> String {
        match self {
            Index::ProRata => "pro-rata".to_string(),
            Index::UserCentric => "user-centric".to_string(),
            Index::Banded(p) => format!("banded:{}:{}", p.alpha, p.beta),
            Index::Weighted(w) => format!("weighted:{}", w.name()),
            Index::Counterexample(c) => c.label().to_string(),
        }
    }

    /// True for the members of the weighted family.
    pub fn is_weighted(&self) -> bool {
        !matches!(self, Index::Counterexample(_))
    }

    pub fn evaluate(&self, problem: &StreamingProblem) -> Result<IndexValues, IndexError> {
        match self {
            Index::ProRata => Ok(pro_rata_index(problem)),
            Index::UserCentric => Ok(user_centric_index(problem)),
            Index::Banded(p) => weighted_index(problem, &banded_weight_system(*p)),
            Index::Weighted(w) => weighted_index(problem, w.as_ref()),
            Index::Counterexample(c) => Ok(counterexample_index(*c, problem)),
        }
    }

    pub fn rewards(&self, problem: &StreamingProblem) -> Result<Allocation, IndexError> {
        rewards(problem, &self.evaluate(problem)?)
    }

    /// P, U and I¹–I⁵.
    pub fn standard_set() -> Vec<Index> {
        let mut all = vec![Index::ProRata, Index::UserCentric];
        all.extend(Counterexample::ALL.map(Index::Counterexample));
        all
    }
}

impl fmt::Debug for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Index({})", self.name())
    }
}

impl FromStr for Index {
    type Err = IndexError;

    /// Accepts `pro-rata`, `user-centric`, `I1`..`I5` and
    /// `banded:<alpha>:<beta>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || IndexError::UnknownIndex(s.to_string());
        match s.trim().to_ascii_lowercase().as_str() {
            "pro-rata" | "prorata" | "p" => Ok(Index::ProRata),
            "user-centric" | "usercentric" | "u" => Ok(Index::UserCentric),
            "i1" => Ok(Index::Counterexample(Counterexample::I1)),
            "i2" => Ok(Index::Counterexample(Counterexample::I2)),
            "i3" => Ok(Index::Counterexample(Counterexample::I3)),
            "i4" => Ok(Index::Counterexample(Counterexample::I4)),
            "i5" => Ok(Index::Counterexample(Counterexample::I5)),
            other => {
                let rest = other.strip_prefix("banded:").ok_or_else(unknown)?;
                let (a, b) = rest.split_once(':').ok_or_else(unknown)?;
                let alpha = a.parse().map_err(|_| unknown())?;
                let beta = b.parse().map_err(|_| unknown())?;
                Ok(Index::Banded(BandedWeightParams::new(alpha, beta)?))
            }
        }
    }
}

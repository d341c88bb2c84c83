//! Executable axioms.
//!
//! Each axiom is checked on concrete instances. A failing check returns
//! a [`Witness`]: the instance, the identifiers involved and the computed
//! quantities that violate the axiom. [`AxiomVerdict::recheck`] recomputes
//! those quantities from scratch and confirms the violation.

mod checks;
mod generator;
mod search;

use std::fmt;
use std::str::FromStr;

use num_traits::Signed;
use serde_json::{json, Value};

use crate::game::GameError;
use crate::indices::{Index, IndexError};
use crate::io::ProblemJson;
use crate::problem::StreamingProblem;
use crate::rational::{self, Rational};

pub use checks::{
    check_additivity, check_click_fraud_proofness, check_core_selection, check_equal_global_impact,
    check_equal_individual_impact, check_homogeneity, check_reasonable_lower_bound,
    check_reasonable_lower_bound_all,
};
pub use generator::{GeneratorConfig, GeneratorError, ProblemGenerator};
pub use search::{
    axiom_matrix, golden_perturbations, golden_problems, search_witness, AxiomMatrix,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axiom {
    Homogeneity,
    Additivity,
    EqualIndividualImpact,
    EqualGlobalImpact,
    ReasonableLowerBound,
    ClickFraudProofness,
    CoreSelection,
}

impl Axiom {
    pub const ALL: [Axiom; 7] = [
        Axiom::Homogeneity,
        Axiom::Additivity,
        Axiom::EqualIndividualImpact,
        Axiom::EqualGlobalImpact,
        Axiom::ReasonableLowerBound,
        Axiom::ClickFraudProofness,
        Axiom::CoreSelection,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axiom::Homogeneity => "homogeneity",
            Axiom::Additivity => "additivity",
            Axiom::EqualIndividualImpact => "equal-individual-impact",
            Axiom::EqualGlobalImpact => "equal-global-impact",
            Axiom::ReasonableLowerBound => "reasonable-lower-bound",
            Axiom::ClickFraudProofness => "click-fraud",
            Axiom::CoreSelection => "core-selection",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Axiom::Homogeneity => "hom",
            Axiom::Additivity => "add",
            Axiom::EqualIndividualImpact => "eii",
            Axiom::EqualGlobalImpact => "egi",
            Axiom::ReasonableLowerBound => "rlb",
            Axiom::ClickFraudProofness => "cfp",
            Axiom::CoreSelection => "core",
        }
    }
}

impl fmt::Display for Axiom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axiom {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase();
        Axiom::ALL
            .into_iter()
            .find(|a| a.name() == key || a.short_name() == key)
            .or(match key.as_str() {
                "click-fraud-proofness" | "click" => Some(Axiom::ClickFraudProofness),
                "core" => Some(Axiom::CoreSelection),
                _ => None,
            })
            .ok_or_else(|| format!("unknown axiom {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AxiomError {
    #[error("premise violated: {0}")]
    PremiseViolated(String),
    #[error("invalid user partition: {0}")]
    InvalidPartition(String),
    #[error("removing a user would leave an invalid problem")]
    WouldBeEmpty,
    #[error(transparent)]
    Index(#[from] IndexError),
    #[error(transparent)]
    Game(#[from] GameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    NotApplicable,
}

impl Status {
    pub fn name(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::NotApplicable => "not-applicable",
        }
    }
}

/// Evidence of a violation. Artist and user fields are positions in the
/// witness problem.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Witness {
    Homogeneity {
        problem: StreamingProblem,
        artist: usize,
        other: usize,
        lambda: Rational,
        score: Rational,
        other_score: Rational,
    },
    Additivity {
        problem: StreamingProblem,
        /// Users of the first part; the rest form the second.
        part: Vec<usize>,
        whole: Vec<Rational>,
        first: Vec<Rational>,
        second: Vec<Rational>,
    },
    EqualIndividualImpact {
        problem: StreamingProblem,
        artist: usize,
        user: usize,
        other_user: usize,
        without_user: Rational,
        without_other: Rational,
    },
    EqualGlobalImpact {
        problem: StreamingProblem,
        user: usize,
        other_user: usize,
        without_user: Rational,
        without_other: Rational,
    },
    ReasonableLowerBound {
        problem: StreamingProblem,
        coalition: Vec<usize>,
        covered: Vec<usize>,
        /// `Σ_{i ∈ L^C} (I_i / ΣI) · m`.
        value: Rational,
    },
    ClickFraud {
        problem: StreamingProblem,
        perturbed: StreamingProblem,
        user: usize,
        artist: usize,
        before: Rational,
        after: Rational,
    },
    CoreSelection {
        problem: StreamingProblem,
        allocation: Vec<Rational>,
        coalition: Vec<usize>,
        payoff: Rational,
        worth: Rational,
    },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomVerdict {
    pub axiom: Axiom,
    pub index: String,
    pub status: Status,
    pub witness: Option<Witness>,
    pub instances_checked: usize,
}

impl AxiomVerdict {
    pub fn pass(axiom: Axiom, index: &Index, instances_checked: usize) -> Self {
        Self {
            axiom,
            index: index.name(),
            status: Status::Pass,
            witness: None,
            instances_checked,
        }
    }

    pub fn fail(axiom: Axiom, index: &Index, witness: Witness) -> Self {
        Self {
            axiom,
            index: index.name(),
            status: Status::Fail,
            witness: Some(witness),
            instances_checked: 1,
        }
    }

    pub fn not_applicable(axiom: Axiom, index: &Index) -> Self {
        Self {
            axiom,
            index: index.name(),
            status: Status::NotApplicable,
            witness: None,
            instances_checked: 0,
        }
    }

    pub fn is_pass(&self) -> bool {
        self.status == Status::Pass
    }

    pub fn is_fail(&self) -> bool {
        self.status == Status::Fail
    }

    /// For a failure, re-derives the witness quantities for `index` and
    /// confirms they are the stored ones and violate the axiom. Other
    /// verdicts recheck trivially when they carry no witness.
    pub fn recheck(&self, index: &Index) -> Result<bool, AxiomError> {
        match (&self.status, &self.witness) {
            (Status::Fail, Some(w)) => w.reproduces(index),
            (Status::Fail, None) => Ok(false),
            (_, w) => Ok(w.is_none()),
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "axiom": self.axiom.name(),
            "index": self.index,
            "status": self.status.name(),
            "instances_checked": self.instances_checked,
            "witness": self.witness.as_ref().map_or(Value::Null, Witness::to_json),
        })
    }
}

fn reduced_index(
    index: &Index,
    problem: &StreamingProblem,
    user: usize,
) -> Result<Vec<Rational>, AxiomError> {
    let reduced = problem
        .without_user(user)
        .map_err(|_| AxiomError::WouldBeEmpty)?;
    Ok(index.evaluate(&reduced)?.into_scores())
}

fn text(r: &Rational) -> Value {
    rational::to_text(r).into()
}

fn texts(v: &[Rational]) -> Value {
    v.iter().map(text).collect::<Vec<_>>().into()
}

fn problem_json(p: &StreamingProblem) -> Value {
    serde_json::to_value(ProblemJson::from(p)).expect("problem JSON is always serializable")
}

impl Witness {
    pub fn problem(&self) -> &StreamingProblem {
        match self {
            Witness::Homogeneity { problem, .. }
            | Witness::Additivity { problem, .. }
            | Witness::EqualIndividualImpact { problem, .. }
            | Witness::EqualGlobalImpact { problem, .. }
            | Witness::ReasonableLowerBound { problem, .. }
            | Witness::ClickFraud { problem, .. }
            | Witness::CoreSelection { problem, .. } => problem,
        }
    }

    /// One-line human description using ids.
    pub fn describe(&self) -> String {
        let p = self.problem();
        let artist = |i: usize| p.artists()[i].as_str();
        let user = |j: usize| p.users()[j].as_str();
        let users = |js: &[usize]| js.iter().map(|&j| user(j)).collect::<Vec<_>>().join(",");
        match self {
            Witness::Homogeneity {
                artist: i,
                other,
                lambda,
                score,
                other_score,
                ..
            } => format!(
                "row {} = {} x row {}, but I_{} = {} while {} x I_{} = {}",
                artist(*i),
                rational::to_text(lambda),
                artist(*other),
                artist(*i),
                rational::to_text(score),
                rational::to_text(lambda),
                artist(*other),
                rational::to_text(&(lambda * other_score))
            ),
            Witness::Additivity {
                part,
                whole,
                first,
                second,
                ..
            } => {
                let split: Vec<Rational> = first.iter().zip(second).map(|(a, b)| a + b).collect();
                format!(
                    "users {{{}}} vs rest: I = {} but the parts sum to {}",
                    users(part),
                    rational::Tuple(whole),
                    rational::Tuple(&split)
                )
            }
            Witness::EqualIndividualImpact {
                artist: i,
                user: j,
                other_user: k,
                without_user,
                without_other,
                ..
            } => format!(
                "t[{0},{1}] = t[{0},{2}], but I_{0} without {1} = {3} and without {2} = {4}",
                artist(*i),
                user(*j),
                user(*k),
                rational::to_text(without_user),
                rational::to_text(without_other)
            ),
            Witness::EqualGlobalImpact {
                user: j,
                other_user: k,
                without_user,
                without_other,
                ..
            } => format!(
                "sum of I without {} = {}, without {} = {}",
                user(*j),
                rational::to_text(without_user),
                user(*k),
                rational::to_text(without_other)
            ),
            Witness::ReasonableLowerBound {
                coalition, value, ..
            } => format!(
                "C = {{{}}}: artists they listened to get {} < {}",
                users(coalition),
                rational::to_text(value),
                coalition.len()
            ),
            Witness::ClickFraud {
                user: j,
                artist: i,
                before,
                after,
                ..
            } => format!(
                "changing {}'s streams moves R_{} from {} to {} (|diff| = {} > fee {})",
                user(*j),
                artist(*i),
                rational::to_text(before),
                rational::to_text(after),
                rational::to_text(&(before - after).abs()),
                rational::to_text(p.fee())
            ),
            Witness::CoreSelection {
                coalition,
                payoff,
                worth,
                ..
            } => format!(
                "coalition {{{}}} receives {} < v(S) = {}",
                coalition
                    .iter()
                    .map(|&i| artist(i))
                    .collect::<Vec<_>>()
                    .join(","),
                rational::to_text(payoff),
                rational::to_text(worth)
            ),
        }
    }

    pub fn to_json(&self) -> Value {
        let p = self.problem();
        let artist = |i: usize| Value::from(p.artists()[i].as_str());
        let user = |j: usize| Value::from(p.users()[j].as_str());
        let mut out = match self {
            Witness::Homogeneity {
                artist: i,
                other,
                lambda,
                score,
                other_score,
                ..
            } => json!({
                "artist": artist(*i),
                "other_artist": artist(*other),
                "lambda": text(lambda),
                "score": text(score),
                "other_score": text(other_score),
            }),
            Witness::Additivity {
                part,
                whole,
                first,
                second,
                ..
            } => json!({
                "first_part": part.iter().map(|&j| user(j)).collect::<Vec<_>>(),
                "whole": texts(whole),
                "first": texts(first),
                "second": texts(second),
            }),
            Witness::EqualIndividualImpact {
                artist: i,
                user: j,
                other_user: k,
                without_user,
                without_other,
                ..
            } => json!({
                "artist": artist(*i),
                "user": user(*j),
                "other_user": user(*k),
                "without_user": text(without_user),
                "without_other_user": text(without_other),
            }),
            Witness::EqualGlobalImpact {
                user: j,
                other_user: k,
                without_user,
                without_other,
                ..
            } => json!({
                "user": user(*j),
                "other_user": user(*k),
                "without_user": text(without_user),
                "without_other_user": text(without_other),
            }),
            Witness::ReasonableLowerBound {
                coalition,
                covered,
                value,
                ..
            } => json!({
                "coalition": coalition.iter().map(|&j| user(j)).collect::<Vec<_>>(),
                "covered_artists": covered.iter().map(|&i| artist(i)).collect::<Vec<_>>(),
                "value": text(value),
                "bound": coalition.len(),
            }),
            Witness::ClickFraud {
                perturbed,
                user: j,
                artist: i,
                before,
                after,
                ..
            } => json!({
                "perturbed": problem_json(perturbed),
                "user": user(*j),
                "artist": artist(*i),
                "before": text(before),
                "after": text(after),
                "difference": text(&(before - after).abs()),
            }),
            Witness::CoreSelection {
                allocation,
                coalition,
                payoff,
                worth,
                ..
            } => json!({
                "allocation": texts(allocation),
                "coalition": coalition.iter().map(|&i| artist(i)).collect::<Vec<_>>(),
                "payoff": text(payoff),
                "worth": text(worth),
            }),
        };
        let obj = out.as_object_mut().expect("witness JSON is an object");
        let mut full = serde_json::Map::new();
        full.insert("problem".into(), problem_json(p));
        full.append(obj);
        full.into()
    }

    fn reproduces(&self, index: &Index) -> Result<bool, AxiomError> {
        match self {
            Witness::Homogeneity {
                problem,
                artist,
                other,
                lambda,
                score,
                other_score,
            } => {
                let premise = (0..problem.n_users()).all(|j| {
                    rational::from_u64(problem.t(*artist, j))
                        == lambda * rational::from_u64(problem.t(*other, j))
                });
                let scores = index.evaluate(problem)?.into_scores();
                Ok(premise
                    && &scores[*artist] == score
                    && &scores[*other] == other_score
                    && *score != lambda * other_score)
            }
            Witness::Additivity {
                problem,
                part,
                whole,
                first,
                second,
            } => {
                let rest: Vec<usize> = (0..problem.n_users())
                    .filter(|j| !part.contains(j))
                    .collect();
                let w = index.evaluate(problem)?.into_scores();
                let a = index
                    .evaluate(
                        &problem
                            .restrict_users(part)
                            .map_err(|_| AxiomError::WouldBeEmpty)?,
                    )?
                    .into_scores();
                let b = index
                    .evaluate(
                        &problem
                            .restrict_users(&rest)
                            .map_err(|_| AxiomError::WouldBeEmpty)?,
                    )?
                    .into_scores();
                let split_differs = w
                    .iter()
                    .zip(a.iter().zip(&b))
                    .any(|(x, (y, z))| *x != y + z);
                Ok(&w == whole && &a == first && &b == second && split_differs)
            }
            Witness::EqualIndividualImpact {
                problem,
                artist,
                user,
                other_user,
                without_user,
                without_other,
            } => {
                let premise = user != other_user
                    && problem.t(*artist, *user) == problem.t(*artist, *other_user);
                let x = reduced_index(index, problem, *user)?;
                let y = reduced_index(index, problem, *other_user)?;
                Ok(premise
                    && &x[*artist] == without_user
                    && &y[*artist] == without_other
                    && without_user != without_other)
            }
            Witness::EqualGlobalImpact {
                problem,
                user,
                other_user,
                without_user,
                without_other,
            } => {
                let x = rational::sum(&reduced_index(index, problem, *user)?);
                let y = rational::sum(&reduced_index(index, problem, *other_user)?);
                Ok(&x == without_user && &y == without_other && x != y)
            }
            Witness::ReasonableLowerBound {
                problem,
                coalition,
                covered,
                value,
            } => {
                let scores = index.evaluate(problem)?.into_scores();
                let total = rational::sum(&scores);
                let union: Vec<usize> = (0..problem.n_artists())
                    .filter(|&i| coalition.iter().any(|&j| problem.t(i, j) > 0))
                    .collect();
                let m = rational::from_u64(problem.n_users() as u64);
                let v = rational::sum(union.iter().map(|&i| &scores[i])) / total * m;
                Ok(!coalition.is_empty()
                    && &union == covered
                    && &v == value
                    && v < rational::from_u64(coalition.len() as u64))
            }
            Witness::ClickFraud {
                problem,
                perturbed,
                user,
                artist,
                before,
                after,
            } => {
                let only_user = problem
                    .differing_columns(perturbed)
                    .map(|cols| cols.iter().all(|j| j == user))
                    .unwrap_or(false);
                let r = index.rewards(problem)?.into_payouts();
                let s = index.rewards(perturbed)?.into_payouts();
                Ok(only_user
                    && problem.fee() == perturbed.fee()
                    && &r[*artist] == before
                    && &s[*artist] == after
                    && (before - after).abs() > *problem.fee())
            }
            Witness::CoreSelection {
                problem,
                allocation,
                coalition,
                payoff,
                worth,
            } => {
                let r = index.rewards(problem)?.into_payouts();
                let inside = |j: usize| problem.listened(j).iter().all(|i| coalition.contains(i));
                let v = rational::from_u64(
                    (0..problem.n_users()).filter(|&j| inside(j)).count() as u64
                ) * problem.fee();
                let x = rational::sum(coalition.iter().map(|&i| &r[i]));
                Ok(&r == allocation && &v == worth && &x == payoff && x < v)
            }
        }
    }
}

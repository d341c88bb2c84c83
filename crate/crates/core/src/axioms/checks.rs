//! Axiom checks on single instances.
//!
//! The public `check_*` functions test one premise tuple. The
//! `*_on` functions enumerate every premise tuple of one instance and
//! report the first violation.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use super::{reduced_index, Axiom, AxiomError, AxiomVerdict, Witness};
use crate::game::{in_core_direct, streaming_game, CoreVerdict};
use crate::indices::Index;
use crate::problem::StreamingProblem;
use crate::rational::{self, Rational};

/// Result of every premise tuple on one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(super) enum Outcome {
    Holds,
    Violated(Box<Witness>),
    /// No premise tuple applies on this instance.
    Vacuous,
}

impl Outcome {
    fn from_witness(w: Option<Witness>) -> Self {
        w.map_or(Outcome::Holds, |w| Outcome::Violated(Box::new(w)))
    }
}

fn verdict(axiom: Axiom, index: &Index, witness: Option<Witness>) -> AxiomVerdict {
    match witness {
        Some(w) => AxiomVerdict::fail(axiom, index, w),
        None => AxiomVerdict::pass(axiom, index, 1),
    }
}

fn check_artist(problem: &StreamingProblem, i: usize) -> Result<(), AxiomError> {
    if i >= problem.n_artists() {
        return Err(AxiomError::PremiseViolated(format!(
            "no artist at position {i}"
        )));
    }
    Ok(())
}

fn check_user(problem: &StreamingProblem, j: usize) -> Result<(), AxiomError> {
    if j >= problem.n_users() {
        return Err(AxiomError::PremiseViolated(format!(
            "no user at position {j}"
        )));
    }
    Ok(())
}

fn homogeneity_witness(
    problem: &StreamingProblem,
    scores: &[Rational],
    i: usize,
    other: usize,
    lambda: &Rational,
) -> Option<Witness> {
    (scores[i] != lambda * &scores[other]).then(|| Witness::Homogeneity {
        problem: problem.clone(),
        artist: i,
        other,
        lambda: lambda.clone(),
        score: scores[i].clone(),
        other_score: scores[other].clone(),
    })
}

/// Rows `i = λ · other` must imply `I_i = λ · I_other`.
pub fn check_homogeneity(
    index: &Index,
    problem: &StreamingProblem,
    i: usize,
    other: usize,
    lambda: &Rational,
) -> Result<AxiomVerdict, AxiomError> {
    check_artist(problem, i)?;
    check_artist(problem, other)?;
    if *lambda < Rational::zero() {
        return Err(AxiomError::PremiseViolated(
            "lambda must be nonnegative".into(),
        ));
    }
    let proportional = (0..problem.n_users()).all(|j| {
        rational::from_u64(problem.t(i, j)) == lambda * rational::from_u64(problem.t(other, j))
    });
    if !proportional {
        return Err(AxiomError::PremiseViolated(format!(
            "row {} is not {} times row {}",
            problem.artists()[i],
            rational::to_text(lambda),
            problem.artists()[other]
        )));
    }
    let scores = index.evaluate(problem)?.into_scores();
    Ok(verdict(
        Axiom::Homogeneity,
        index,
        homogeneity_witness(problem, &scores, i, other, lambda),
    ))
}

/// Every ordered pair of distinct proportional rows. A zero `other` row
/// forces a zero row `i`, which is proportional for every `λ`; `λ = 0`
/// and `λ = 1` are checked.
pub(super) fn homogeneity_on(
    index: &Index,
    problem: &StreamingProblem,
) -> Result<Outcome, AxiomError> {
    let n = problem.n_artists();
    let mut pairs = Vec::new();
    for i in 0..n {
        for other in (0..n).filter(|&k| k != i) {
            let base = problem.streams()[other].iter().position(|&t| t > 0);
            match base {
                Some(j) => {
                    let lambda = Rational::new(problem.t(i, j).into(), problem.t(other, j).into());
                    let proportional = (0..problem.n_users()).all(|k| {
                        rational::from_u64(problem.t(i, k))
                            == &lambda * rational::from_u64(problem.t(other, k))
                    });
                    if proportional {
                        pairs.push((i, other, lambda));
                    }
                }
                None if problem.row_total(i) == 0 => {
                    pairs.push((i, other, Rational::zero()));
                    pairs.push((i, other, rational::int(1)));
                }
                None => {}
            }
        }
    }
    if pairs.is_empty() {
        return Ok(Outcome::Vacuous);
    }
    let scores = index.evaluate(problem)?.into_scores();
    Ok(Outcome::from_witness(pairs.iter().find_map(
        |(i, other, lambda)| homogeneity_witness(problem, &scores, *i, *other, lambda),
    )))
}

fn validate_partition(
    problem: &StreamingProblem,
    part: &[usize],
) -> Result<Vec<usize>, AxiomError> {
    let unique: BTreeSet<usize> = part.iter().copied().collect();
    if unique.len() != part.len() {
        return Err(AxiomError::InvalidPartition("repeated user".into()));
    }
    if let Some(j) = unique.iter().find(|&&j| j >= problem.n_users()) {
        return Err(AxiomError::InvalidPartition(format!(
            "no user at position {j}"
        )));
    }
    if unique.is_empty() || unique.len() == problem.n_users() {
        return Err(AxiomError::InvalidPartition(
            "both parts must be nonempty".into(),
        ));
    }
    Ok((0..problem.n_users())
        .filter(|j| !unique.contains(j))
        .collect())
}

fn additivity_witness(
    problem: &StreamingProblem,
    part: &[usize],
    whole: &[Rational],
    first: &[Rational],
    second: &[Rational],
) -> Option<Witness> {
    let holds = whole
        .iter()
        .zip(first.iter().zip(second))
        .all(|(w, (a, b))| *w == a + b);
    (!holds).then(|| Witness::Additivity {
        problem: problem.clone(),
        part: part.to_vec(),
        whole: whole.to_vec(),
        first: first.to_vec(),
        second: second.to_vec(),
    })
}

/// `I(N, M, t) = I(N, M¹, t¹) + I(N, M², t²)` for the split `part | rest`.
pub fn check_additivity(
    index: &Index,
    problem: &StreamingProblem,
    part: &[usize],
) -> Result<AxiomVerdict, AxiomError> {
    let rest = validate_partition(problem, part)?;
    let first = problem
        .restrict_users(part)
        .map_err(|_| AxiomError::WouldBeEmpty)?;
    let second = problem
        .restrict_users(&rest)
        .map_err(|_| AxiomError::WouldBeEmpty)?;
    let whole = index.evaluate(problem)?.into_scores();
    let a = index.evaluate(&first)?.into_scores();
    let b = index.evaluate(&second)?.into_scores();
    Ok(verdict(
        Axiom::Additivity,
        index,
        additivity_witness(problem, part, &whole, &a, &b),
    ))
}

fn users_of(mask: usize, m: usize) -> Vec<usize> {
    (0..m).filter(|j| mask >> j & 1 == 1).collect()
}

/// Every two-part split of the users, evaluating each user subset once.
/// With `pstar`, only splits whose parts both stay in the restricted
/// domain count.
pub(super) fn additivity_on(
    index: &Index,
    problem: &StreamingProblem,
    pstar: bool,
) -> Result<Outcome, AxiomError> {
    let m = problem.n_users();
    if m < 2 {
        return Ok(Outcome::Vacuous);
    }
    let full = (1usize << m) - 1;
    let mut cache: Vec<Option<Vec<Rational>>> = vec![None; 1 << m];
    let mut eval = |mask: usize| -> Result<Vec<Rational>, AxiomError> {
        if let Some(v) = &cache[mask] {
            return Ok(v.clone());
        }
        let sub = problem
            .restrict_users(&users_of(mask, m))
            .map_err(|_| AxiomError::WouldBeEmpty)?;
        let v = index.evaluate(&sub)?.into_scores();
        cache[mask] = Some(v.clone());
        Ok(v)
    };
    let whole = index.evaluate(problem)?.into_scores();
    let mut any = false;
    // parts containing user 0, so each split is visited once
    for part in (1..full).filter(|s| s & 1 == 1) {
        if pstar && (part.count_ones() < 3 || (full ^ part).count_ones() < 3) {
            continue;
        }
        any = true;
        let a = eval(part)?;
        let b = eval(full ^ part)?;
        if let Some(w) = additivity_witness(problem, &users_of(part, m), &whole, &a, &b) {
            return Ok(Outcome::Violated(Box::new(w)));
        }
    }
    Ok(if any {
        Outcome::Holds
    } else {
        Outcome::Vacuous
    })
}

/// `t_ij = t_ij'` must imply `I_i(without j) = I_i(without j')`.
pub fn check_equal_individual_impact(
    index: &Index,
    problem: &StreamingProblem,
    i: usize,
    j: usize,
    other: usize,
) -> Result<AxiomVerdict, AxiomError> {
    check_artist(problem, i)?;
    check_user(problem, j)?;
    check_user(problem, other)?;
    if j == other {
        return Err(AxiomError::PremiseViolated(
            "the two users must differ".into(),
        ));
    }
    if problem.t(i, j) != problem.t(i, other) {
        return Err(AxiomError::PremiseViolated(format!(
            "t[{0},{1}] != t[{0},{2}]",
            problem.artists()[i],
            problem.users()[j],
            problem.users()[other]
        )));
    }
    let x = reduced_index(index, problem, j)?;
    let y = reduced_index(index, problem, other)?;
    let witness = (x[i] != y[i]).then(|| Witness::EqualIndividualImpact {
        problem: problem.clone(),
        artist: i,
        user: j,
        other_user: other,
        without_user: x[i].clone(),
        without_other: y[i].clone(),
    });
    Ok(verdict(Axiom::EqualIndividualImpact, index, witness))
}

fn reduced_all(
    index: &Index,
    problem: &StreamingProblem,
) -> Result<Vec<Vec<Rational>>, AxiomError> {
    (0..problem.n_users())
        .map(|j| reduced_index(index, problem, j))
        .collect()
}

#[allow(clippy::needless_range_loop)]
pub(super) fn equal_individual_impact_on(
    index: &Index,
    problem: &StreamingProblem,
) -> Result<Outcome, AxiomError> {
    let m = problem.n_users();
    if m < 2 {
        return Ok(Outcome::Vacuous);
    }
    let reduced = reduced_all(index, problem)?;
    for i in 0..problem.n_artists() {
        for j in 0..m {
            for k in (j + 1..m).filter(|&k| problem.t(i, j) == problem.t(i, k)) {
                if reduced[j][i] != reduced[k][i] {
                    return Ok(Outcome::Violated(Box::new(
                        Witness::EqualIndividualImpact {
                            problem: problem.clone(),
                            artist: i,
                            user: j,
                            other_user: k,
                            without_user: reduced[j][i].clone(),
                            without_other: reduced[k][i].clone(),
                        },
                    )));
                }
            }
        }
    }
    Ok(Outcome::Holds)
}

/// `Σ_i I_i(without j) = Σ_i I_i(without j')`.
pub fn check_equal_global_impact(
    index: &Index,
    problem: &StreamingProblem,
    j: usize,
    other: usize,
) -> Result<AxiomVerdict, AxiomError> {
    check_user(problem, j)?;
    check_user(problem, other)?;
    let x = rational::sum(&reduced_index(index, problem, j)?);
    let y = rational::sum(&reduced_index(index, problem, other)?);
    let witness = (x != y).then(|| Witness::EqualGlobalImpact {
        problem: problem.clone(),
        user: j,
        other_user: other,
        without_user: x,
        without_other: y,
    });
    Ok(verdict(Axiom::EqualGlobalImpact, index, witness))
}

pub(super) fn equal_global_impact_on(
    index: &Index,
    problem: &StreamingProblem,
) -> Result<Outcome, AxiomError> {
    let m = problem.n_users();
    if m < 2 {
        return Ok(Outcome::Vacuous);
    }
    let sums: Vec<Rational> = reduced_all(index, problem)?
        .iter()
        .map(rational::sum)
        .collect();
    for j in 0..m {
        for k in j + 1..m {
            if sums[j] != sums[k] {
                return Ok(Outcome::Violated(Box::new(Witness::EqualGlobalImpact {
                    problem: problem.clone(),
                    user: j,
                    other_user: k,
                    without_user: sums[j].clone(),
                    without_other: sums[k].clone(),
                })));
            }
        }
    }
    Ok(Outcome::Holds)
}

fn lower_bound_witness(
    problem: &StreamingProblem,
    scores: &[Rational],
    total: &Rational,
    coalition: Vec<usize>,
) -> Option<Witness> {
    let covered: Vec<usize> = (0..problem.n_artists())
        .filter(|&i| coalition.iter().any(|&j| problem.t(i, j) > 0))
        .collect();
    let m = rational::from_u64(problem.n_users() as u64);
    let value = rational::sum(covered.iter().map(|&i| &scores[i])) * m / total;
    (value < rational::from_u64(coalition.len() as u64)).then(|| Witness::ReasonableLowerBound {
        problem: problem.clone(),
        coalition,
        covered,
        value,
    })
}

/// `Σ_{i ∈ L^C} (I_i / ΣI) · m ≥ |C|`.
pub fn check_reasonable_lower_bound(
    index: &Index,
    problem: &StreamingProblem,
    coalition: &[usize],
) -> Result<AxiomVerdict, AxiomError> {
    if coalition.is_empty() {
        return Err(AxiomError::PremiseViolated(
            "coalition must be nonempty".into(),
        ));
    }
    for &j in coalition {
        check_user(problem, j)?;
    }
    let unique: BTreeSet<usize> = coalition.iter().copied().collect();
    let scores = index.evaluate(problem)?.into_scores();
    let total = rational::sum(&scores);
    Ok(verdict(
        Axiom::ReasonableLowerBound,
        index,
        lower_bound_witness(problem, &scores, &total, unique.into_iter().collect()),
    ))
}

/// Every nonempty coalition of users, reporting the first violation in
/// bitmask order.
pub fn check_reasonable_lower_bound_all(
    index: &Index,
    problem: &StreamingProblem,
) -> Result<AxiomVerdict, AxiomError> {
    let m = problem.n_users();
    let scores = index.evaluate(problem)?.into_scores();
    let total = rational::sum(&scores);
    let witness = (1usize..1 << m)
        .find_map(|mask| lower_bound_witness(problem, &scores, &total, users_of(mask, m)));
    Ok(verdict(Axiom::ReasonableLowerBound, index, witness))
}

fn click_fraud_witness(
    problem: &StreamingProblem,
    perturbed: &StreamingProblem,
    j: usize,
    before: &[Rational],
    after: &[Rational],
) -> Option<Witness> {
    (0..before.len())
        .find(|&i| (&before[i] - &after[i]).abs() > *problem.fee())
        .map(|i| Witness::ClickFraud {
            problem: problem.clone(),
            perturbed: perturbed.clone(),
            user: j,
            artist: i,
            before: before[i].clone(),
            after: after[i].clone(),
        })
}

/// Changing only user `j`'s streams may move no reward by more than the
/// fee.
pub fn check_click_fraud_proofness(
    index: &Index,
    problem: &StreamingProblem,
    perturbed: &StreamingProblem,
    j: usize,
) -> Result<AxiomVerdict, AxiomError> {
    check_user(problem, j)?;
    let differing = problem
        .differing_columns(perturbed)
        .map_err(|e| AxiomError::PremiseViolated(e.to_string()))?;
    if differing.iter().any(|&k| k != j) {
        return Err(AxiomError::PremiseViolated(format!(
            "problems differ outside user {}",
            problem.users()[j]
        )));
    }
    if problem.fee() != perturbed.fee() {
        return Err(AxiomError::PremiseViolated("fees differ".into()));
    }
    let before = index.rewards(problem)?.into_payouts();
    let after = index.rewards(perturbed)?.into_payouts();
    Ok(verdict(
        Axiom::ClickFraudProofness,
        index,
        click_fraud_witness(problem, perturbed, j, &before, &after),
    ))
}

pub(super) fn click_fraud_on(
    index: &Index,
    problem: &StreamingProblem,
    perturbations: &[(StreamingProblem, usize)],
) -> Result<Outcome, AxiomError> {
    if perturbations.is_empty() {
        return Ok(Outcome::Vacuous);
    }
    let before = index.rewards(problem)?.into_payouts();
    for (perturbed, j) in perturbations {
        let after = index.rewards(perturbed)?.into_payouts();
        if let Some(w) = click_fraud_witness(problem, perturbed, *j, &before, &after) {
            return Ok(Outcome::Violated(Box::new(w)));
        }
    }
    Ok(Outcome::Holds)
}

/// The rewards must lie in the core of the streaming game.
pub fn check_core_selection(
    index: &Index,
    problem: &StreamingProblem,
) -> Result<AxiomVerdict, AxiomError> {
    let allocation = index.rewards(problem)?.into_payouts();
    let game = streaming_game(problem)?;
    let witness = match in_core_direct(&game, &allocation)? {
        CoreVerdict::Member => None,
        CoreVerdict::Blocked {
            coalition,
            payoff,
            worth,
        } => Some(Witness::CoreSelection {
            problem: problem.clone(),
            allocation,
            coalition: (0..problem.n_artists())
                .filter(|i| coalition >> i & 1 == 1)
                .collect(),
            payoff,
            worth,
        }),
        CoreVerdict::Inefficient { .. } => {
            unreachable!("rewards always distribute exactly the revenue")
        }
    };
    Ok(verdict(Axiom::CoreSelection, index, witness))
}

pub(super) fn outcome_of(v: AxiomVerdict) -> Outcome {
    Outcome::from_witness(v.witness)
}

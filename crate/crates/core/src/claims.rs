//! Bankruptcy and multi-issue claims problems, and the rules that divide
//! an endowment among claimants.
//!
//! A streaming problem becomes a multi-issue claims problem with the
//! users as issues: each user's fee is an endowment to divide, and every
//! artist holds a claim on each user proportional to that user's streams.

use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::problem::StreamingProblem;
use crate::rational::{self, Rational};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stage {
    First,
    Second { issue: String },
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::First => f.write_str("first-stage"),
            Stage::Second { issue } => write!(f, "second-stage (issue {issue:?})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClaimsError {
    #[error("invalid claims problem: {0}")]
    InvalidProblem(String),
    #[error("invalid {stage} problem: {reason}")]
    InvalidStage { stage: Stage, reason: String },
    #[error("weight function {name:?} violated its contract: {reason}")]
    WeightContractViolated { name: String, reason: String },
}

fn invalid(reason: impl Into<String>) -> ClaimsError {
    ClaimsError::InvalidProblem(reason.into())
}

/// `(N, c, E)` with `Σc ≥ E`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BankruptcyProblem {
    agents: Vec<String>,
    claims: Vec<Rational>,
    endowment: Rational,
}

impl BankruptcyProblem {
    pub fn new(
        agents: Vec<String>,
        claims: Vec<Rational>,
        endowment: Rational,
    ) -> Result<Self, ClaimsError> {
        if agents.is_empty() {
            return Err(invalid("no agents"));
        }
        if agents.len() != claims.len() {
            return Err(invalid(format!(
                "{} agents but {} claims",
                agents.len(),
                claims.len()
            )));
        }
        if let Some(k) = claims.iter().position(|c| *c < Rational::zero()) {
            return Err(invalid(format!("claim of {:?} is negative", agents[k])));
        }
        if endowment < Rational::zero() {
            return Err(invalid("endowment is negative"));
        }
        let total = rational::sum(&claims);
        if total < endowment {
            return Err(invalid(format!(
                "claims total {total} is below the endowment {endowment}"
            )));
        }
        Ok(Self {
            agents,
            claims,
            endowment,
        })
    }

    /// Agents named `"1".."n"`.
    pub fn from_claims(claims: Vec<Rational>, endowment: Rational) -> Result<Self, ClaimsError> {
        let agents = (1..=claims.len()).map(|i| i.to_string()).collect();
        Self::new(agents, claims, endowment)
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn claims(&self) -> &[Rational] {
        &self.claims
    }

    pub fn endowment(&self) -> &Rational {
        &self.endowment
    }
}

/// `c_i · E / Σc`; all zeros when nothing is claimed.
pub fn proportional_rule(bp: &BankruptcyProblem) -> Vec<Rational> {
    let total = rational::sum(&bp.claims);
    if total.is_zero() {
        return vec![Rational::zero(); bp.claims.len()];
    }
    let ratio = &bp.endowment / total;
    bp.claims.iter().map(|c| c * &ratio).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CeaAwards {
    pub awards: Vec<Rational>,
    /// The water level: `award_i = min{λ, c_i}`.
    pub lambda: Rational,
}

/// Constrained equal awards by water-filling over ascending claims.
pub fn cea_rule(bp: &BankruptcyProblem) -> CeaAwards {
    let mut sorted: Vec<&Rational> = bp.claims.iter().collect();
    sorted.sort();
    let mut remaining = bp.endowment.clone();
    let mut lambda = sorted.last().map(|c| (*c).clone()).unwrap_or_default();
    for (k, c) in sorted.iter().enumerate() {
        let uncapped = Rational::from_integer((sorted.len() - k).into());
        if *c * &uncapped >= remaining {
            lambda = remaining / uncapped;
            break;
        }
        remaining -= *c;
    }
    let awards = bp
        .claims
        .iter()
        .map(|c| {
            if *c < lambda {
                c.clone()
            } else {
                lambda.clone()
            }
        })
        .collect();
    CeaAwards { awards, lambda }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BankruptcyRule {
    Proportional,
    Cea,
}

impl BankruptcyRule {
    pub fn name(self) -> &'static str {
        match self {
            BankruptcyRule::Proportional => "P",
            BankruptcyRule::Cea => "CEA",
        }
    }

    pub fn apply(self, bp: &BankruptcyProblem) -> Vec<Rational> {
        match self {
            BankruptcyRule::Proportional => proportional_rule(bp),
            BankruptcyRule::Cea => cea_rule(bp).awards,
        }
    }
}

impl fmt::Display for BankruptcyRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BankruptcyRule {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "p" | "prop" | "proportional" => Ok(BankruptcyRule::Proportional),
            "cea" => Ok(BankruptcyRule::Cea),
            other => Err(format!(
                "unknown rule {other:?} (expected proportional or cea)"
            )),
        }
    }
}

/// `(N, K, c, E)`: claims of agents on several issues, one endowment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiIssueClaims {
    agents: Vec<String>,
    issues: Vec<String>,
    /// `claims[i][j]`: claim of agent `i` on issue `j`.
    claims: Vec<Vec<Rational>>,
    endowment: Rational,
}

impl MultiIssueClaims {
    pub fn new(
        agents: Vec<String>,
        issues: Vec<String>,
        claims: Vec<Vec<Rational>>,
        endowment: Rational,
    ) -> Result<Self, ClaimsError> {
        if agents.is_empty() || issues.is_empty() {
            return Err(invalid("needs at least one agent and one issue"));
        }
        if claims.len() != agents.len() || claims.iter().any(|row| row.len() != issues.len()) {
            return Err(invalid(format!(
                "claims matrix must be {} x {}",
                agents.len(),
                issues.len()
            )));
        }
        if let Some((i, j)) = claims.iter().enumerate().find_map(|(i, row)| {
            row.iter()
                .position(|c| *c < Rational::zero())
                .map(|j| (i, j))
        }) {
            return Err(invalid(format!(
                "claim of {:?} on {:?} is negative",
                agents[i], issues[j]
            )));
        }
        if endowment < Rational::zero() {
            return Err(invalid("endowment is negative"));
        }
        let mic = Self {
            agents,
            issues,
            claims,
            endowment,
        };
        let totals = mic.issue_totals();
        if let Some(j) = totals.iter().position(Zero::is_zero) {
            return Err(invalid(format!("issue {:?} has no claims", mic.issues[j])));
        }
        let total = rational::sum(&totals);
        if total < mic.endowment {
            return Err(invalid(format!(
                "claims total {total} is below the endowment {}",
                mic.endowment
            )));
        }
        Ok(mic)
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn issues(&self) -> &[String] {
        &self.issues
    }

    pub fn claims(&self) -> &[Vec<Rational>] {
        &self.claims
    }

    pub fn endowment(&self) -> &Rational {
        &self.endowment
    }

    /// `C^j = Σ_i c_ij`.
    pub fn issue_totals(&self) -> Vec<Rational> {
        (0..self.issues.len())
            .map(|j| rational::sum(self.claims.iter().map(|row| &row[j])))
            .collect()
    }

    /// The claims column of issue `j`.
    pub fn column(&self, j: usize) -> Vec<Rational> {
        self.claims.iter().map(|row| row[j].clone()).collect()
    }
}

/// Maps issue totals and the endowment to a probability distribution
/// over issues.
pub trait IssueWeightFunction: Send + Sync {
    fn name(&self) -> &str;
    fn weights(&self, issue_totals: &[Rational], endowment: &Rational) -> Vec<Rational>;
}

/// `ω^P_j = C^j / Σ C`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ProportionalIssueWeights;

impl IssueWeightFunction for ProportionalIssueWeights {
    fn name(&self) -> &str {
        "proportional"
    }

    fn weights(&self, issue_totals: &[Rational], _: &Rational) -> Vec<Rational> {
        let total = rational::sum(issue_totals);
        issue_totals.iter().map(|c| c / &total).collect()
    }
}

/// `ω^U_j = 1 / |K|`.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformIssueWeights;

impl IssueWeightFunction for UniformIssueWeights {
    fn name(&self) -> &str {
        "uniform"
    }

    fn weights(&self, issue_totals: &[Rational], _: &Rational) -> Vec<Rational> {
        let share = Rational::new(1.into(), issue_totals.len().into());
        vec![share; issue_totals.len()]
    }
}

/// `P^ω_i = Σ_j (c_ij / C^j) · ω_j · E`.
pub fn weighted_proportional(
    mic: &MultiIssueClaims,
    omega: &dyn IssueWeightFunction,
) -> Result<Vec<Rational>, ClaimsError> {
    let totals = mic.issue_totals();
    let weights = omega.weights(&totals, &mic.endowment);
    let violated = |reason: String| ClaimsError::WeightContractViolated {
        name: omega.name().to_string(),
        reason,
    };
    if weights.len() != totals.len() {
        return Err(violated(format!(
            "{} weights for {} issues",
            weights.len(),
            totals.len()
        )));
    }
    if let Some(w) = weights
        .iter()
        .find(|w| **w < Rational::zero() || **w > Rational::one())
    {
        return Err(violated(format!("weight {w} outside [0, 1]")));
    }
    let sum = rational::sum(&weights);
    if !sum.is_one() {
        return Err(violated(format!("weights sum to {sum}")));
    }
    let mut awards = vec![Rational::zero(); mic.agents.len()];
    for (j, (total, w)) in totals.iter().zip(&weights).enumerate() {
        let share = w * &mic.endowment / total;
        for (award, row) in awards.iter_mut().zip(&mic.claims) {
            *award += &row[j] * &share;
        }
    }
    Ok(awards)
}

/// The issue endowments chosen by `psi` in the first stage.
pub fn first_stage(
    mic: &MultiIssueClaims,
    psi: BankruptcyRule,
) -> Result<Vec<Rational>, ClaimsError> {
    let stage = BankruptcyProblem::new(
        mic.issues.clone(),
        mic.issue_totals(),
        mic.endowment.clone(),
    )
    .map_err(|e| ClaimsError::InvalidStage {
        stage: Stage::First,
        reason: e.to_string(),
    })?;
    Ok(psi.apply(&stage))
}

/// `R^{ψ,φ}`: split `E` over issues by `psi`, then each issue's share
/// over agents by `phi`.
pub fn two_stage_rule(
    mic: &MultiIssueClaims,
    psi: BankruptcyRule,
    phi: BankruptcyRule,
) -> Result<Vec<Rational>, ClaimsError> {
    let shares = first_stage(mic, psi)?;
    let mut awards = vec![Rational::zero(); mic.agents.len()];
    for (j, share) in shares.into_iter().enumerate() {
        let sub =
            BankruptcyProblem::new(mic.agents.clone(), mic.column(j), share).map_err(|e| {
                ClaimsError::InvalidStage {
                    stage: Stage::Second {
                        issue: mic.issues[j].clone(),
                    },
                    reason: e.to_string(),
                }
            })?;
        for (award, a) in awards.iter_mut().zip(phi.apply(&sub)) {
            *award += a;
        }
    }
    Ok(awards)
}

/// Artists as agents, users as issues, `c_ij = fee · t_ij`, `E = m · fee`.
pub fn streaming_to_claims(problem: &StreamingProblem) -> MultiIssueClaims {
    let fee = problem.fee();
    let claims = problem
        .streams()
        .iter()
        .map(|row| row.iter().map(|&t| rational::from_u64(t) * fee).collect())
        .collect();
    MultiIssueClaims::new(
        problem.artists().to_vec(),
        problem.users().to_vec(),
        claims,
        problem.revenue(),
    )
    .expect("every user streams at least once, so each issue is claimed and Σc ≥ E")
}

/// Artists with claims `fee · T_i` on `E = m · fee`.
pub fn streaming_to_bankruptcy(
    problem: &StreamingProblem,
) -> Result<BankruptcyProblem, ClaimsError> {
    let fee = problem.fee();
    let claims = (0..problem.n_artists())
        .map(|i| rational::from_u64(problem.row_total(i)) * fee)
        .collect();
    BankruptcyProblem::new(problem.artists().to_vec(), claims, problem.revenue())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimsJson {
    pub agents: Vec<String>,
    pub issues: Vec<String>,
    pub claims: Vec<Vec<String>>,
    #[serde(with = "rational::serde_text")]
    pub endowment: Rational,
}

impl From<&MultiIssueClaims> for ClaimsJson {
    fn from(mic: &MultiIssueClaims) -> Self {
        Self {
            agents: mic.agents.clone(),
            issues: mic.issues.clone(),
            claims: mic
                .claims
                .iter()
                .map(|row| row.iter().map(rational::to_text).collect())
                .collect(),
            endowment: mic.endowment.clone(),
        }
    }
}

impl TryFrom<ClaimsJson> for MultiIssueClaims {
    type Error = ClaimsError;

    fn try_from(raw: ClaimsJson) -> Result<Self, Self::Error> {
        let claims = raw
            .claims
            .iter()
            .map(|row| {
                row.iter()
                    .map(|c| rational::parse_rational(c).map_err(|e| invalid(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        MultiIssueClaims::new(raw.agents, raw.issues, claims, raw.endowment)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indices::{pro_rata_index, rewards, user_centric_index};
    use crate::problem::{example_one, example_three_users};
    use crate::rational::{frac, int};

    fn ints(xs: &[i64]) -> Vec<Rational> {
        xs.iter().map(|&x| int(x)).collect()
    }

    fn bp(claims: &[i64], e: i64) -> BankruptcyProblem {
        BankruptcyProblem::from_claims(ints(claims), int(e)).unwrap()
    }

    /// CEA by guessing which agents are capped at their claim: the level
    /// is consistent exactly when capped agents claim less than it.
    fn cea_by_capped_sets(b: &BankruptcyProblem) -> Vec<Rational> {
        let n = b.claims().len();
        for capped in 0..1usize << n {
            let free = n - capped.count_ones() as usize;
            if free == 0 {
                if rational::sum(b.claims()) == *b.endowment() {
                    return b.claims().to_vec();
                }
                continue;
            }
            let taken = rational::sum(
                (0..n)
                    .filter(|i| capped >> i & 1 == 1)
                    .map(|i| &b.claims()[i]),
            );
            let lambda = (b.endowment() - taken) / int(free as i64);
            let consistent = (0..n).all(|i| {
                let c = &b.claims()[i];
                if capped >> i & 1 == 1 {
                    *c <= lambda
                } else {
                    *c >= lambda
                }
            });
            if consistent {
                return b
                    .claims()
                    .iter()
                    .map(|c| {
                        if *c < lambda {
                            c.clone()
                        } else {
                            lambda.clone()
                        }
                    })
                    .collect();
            }
        }
        unreachable!("some capped set is always consistent")
    }

    #[test]
    fn proportional_goldens() {
        assert_eq!(
            proportional_rule(&bp(&[10, 90], 2)),
            vec![frac(1, 5), frac(9, 5)]
        );
        assert_eq!(proportional_rule(&bp(&[5, 5], 10)), ints(&[5, 5]));
        assert_eq!(proportional_rule(&bp(&[1, 0], 1)), ints(&[1, 0]));
        assert_eq!(proportional_rule(&bp(&[0, 0], 0)), ints(&[0, 0]));
    }

    #[test]
    fn cea_goldens() {
        let out = cea_rule(&bp(&[10, 90, 40], 3));
        assert_eq!(out.awards, ints(&[1, 1, 1]));
        assert_eq!(out.lambda, int(1));
        let out = cea_rule(&bp(&[1, 5], 4));
        assert_eq!(out.awards, ints(&[1, 3]));
        assert_eq!(out.lambda, int(3));
        assert_eq!(cea_rule(&bp(&[2, 2], 4)).awards, ints(&[2, 2]));
        assert_eq!(cea_rule(&bp(&[3, 0, 7], 0)).awards, ints(&[0, 0, 0]));
    }

    #[test]
    fn cea_matches_capped_set_oracle() {
        let cases: &[(&[i64], i64)] = &[
            (&[1, 2, 3], 5),
            (&[4, 4, 1], 7),
            (&[0, 6, 6, 2], 9),
            (&[10, 1, 1, 1], 4),
            (&[5], 3),
            (&[3, 3, 3], 9),
        ];
        for &(claims, e) in cases {
            let b = bp(claims, e);
            assert_eq!(
                cea_rule(&b).awards,
                cea_by_capped_sets(&b),
                "{claims:?} {e}"
            );
        }
        let b =
            BankruptcyProblem::from_claims(vec![frac(1, 3), frac(5, 2), frac(7, 4)], frac(3, 2))
                .unwrap();
        assert_eq!(cea_rule(&b).awards, cea_by_capped_sets(&b));
    }

    #[test]
    fn bankruptcy_validation() {
        assert!(BankruptcyProblem::from_claims(ints(&[1, 1]), int(3)).is_err());
        assert!(BankruptcyProblem::from_claims(ints(&[-1, 4]), int(1)).is_err());
        assert!(BankruptcyProblem::from_claims(vec![], int(0)).is_err());
        assert!(BankruptcyProblem::from_claims(ints(&[1]), int(-1)).is_err());
    }

    #[test]
    fn translation_goldens() {
        let mic = streaming_to_claims(&example_one());
        assert_eq!(mic.issues(), &["a".to_string(), "b".to_string()]);
        assert_eq!(mic.claims(), &[ints(&[10, 0]), ints(&[0, 90])]);
        assert_eq!(mic.endowment(), &int(2));
        let mic = streaming_to_claims(&example_three_users());
        assert_eq!(mic.endowment(), &int(3));
        assert_eq!(mic.issue_totals(), ints(&[10, 90, 40]));
        let doubled = streaming_to_claims(&example_three_users().with_fee(int(2)).unwrap());
        assert_eq!(doubled.endowment(), &int(6));

        let b = streaming_to_bankruptcy(&example_one()).unwrap();
        assert_eq!(b.claims(), &ints(&[10, 90]));
        assert_eq!(b.endowment(), &int(2));
        let b = streaming_to_bankruptcy(&example_three_users()).unwrap();
        assert_eq!(b.claims(), &ints(&[15, 125]));
        let diag = StreamingProblem::from_matrix(vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]])
            .unwrap();
        let b = streaming_to_bankruptcy(&diag).unwrap();
        assert_eq!(b.claims(), &ints(&[1, 1, 1]));
        assert_eq!(b.endowment(), &int(3));
    }

    #[test]
    fn weighted_proportional_goldens() {
        let mic = streaming_to_claims(&example_one());
        assert_eq!(
            weighted_proportional(&mic, &ProportionalIssueWeights).unwrap(),
            vec![frac(1, 5), frac(9, 5)]
        );
        assert_eq!(
            weighted_proportional(&mic, &UniformIssueWeights).unwrap(),
            ints(&[1, 1])
        );
        let single = MultiIssueClaims::new(
            vec!["x".into(), "y".into()],
            vec!["k".into()],
            vec![ints(&[3]), ints(&[1])],
            int(2),
        )
        .unwrap();
        let expected = proportional_rule(&bp(&[3, 1], 2));
        assert_eq!(
            weighted_proportional(&single, &UniformIssueWeights).unwrap(),
            expected
        );
        assert_eq!(
            weighted_proportional(&single, &ProportionalIssueWeights).unwrap(),
            expected
        );
    }

    struct Broken;

    impl IssueWeightFunction for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn weights(&self, totals: &[Rational], _: &Rational) -> Vec<Rational> {
            vec![int(1); totals.len()]
        }
    }

    #[test]
    fn weight_contract_is_enforced() {
        let mic = streaming_to_claims(&example_one());
        assert!(matches!(
            weighted_proportional(&mic, &Broken),
            Err(ClaimsError::WeightContractViolated { .. })
        ));
    }

    #[test]
    fn two_stage_goldens() {
        use BankruptcyRule::*;
        let mic = streaming_to_claims(&example_one());
        assert_eq!(
            two_stage_rule(&mic, Proportional, Proportional).unwrap(),
            vec![frac(1, 5), frac(9, 5)]
        );
        assert_eq!(
            two_stage_rule(&mic, Cea, Proportional).unwrap(),
            ints(&[1, 1])
        );
        assert_eq!(two_stage_rule(&mic, Cea, Cea).unwrap(), ints(&[1, 1]));
        let three = streaming_to_claims(&example_three_users());
        assert_eq!(
            two_stage_rule(&three, Cea, Proportional).unwrap(),
            vec![frac(9, 8), frac(15, 8)]
        );
    }

    #[test]
    fn identities_on_running_examples() {
        use BankruptcyRule::*;
        for p in [
            example_one(),
            example_three_users(),
            example_three_users().with_fee(frac(5, 2)).unwrap(),
        ] {
            let mic = streaming_to_claims(&p);
            let pr = rewards(&p, &pro_rata_index(&p)).unwrap();
            let uc = rewards(&p, &user_centric_index(&p)).unwrap();
            assert_eq!(
                two_stage_rule(&mic, Proportional, Proportional).unwrap(),
                pr.payouts()
            );
            assert_eq!(
                two_stage_rule(&mic, Cea, Proportional).unwrap(),
                uc.payouts()
            );
            assert_eq!(
                weighted_proportional(&mic, &ProportionalIssueWeights).unwrap(),
                pr.payouts()
            );
            assert_eq!(
                weighted_proportional(&mic, &UniformIssueWeights).unwrap(),
                uc.payouts()
            );
            assert_eq!(
                proportional_rule(&streaming_to_bankruptcy(&p).unwrap()),
                pr.payouts()
            );
        }
    }

    #[test]
    fn multi_issue_validation() {
        let err =
            MultiIssueClaims::new(vec!["x".into()], vec!["k".into()], vec![ints(&[1])], int(2))
                .unwrap_err();
        assert!(matches!(err, ClaimsError::InvalidProblem(_)));
        let zero_issue = MultiIssueClaims::new(
            vec!["x".into()],
            vec!["k".into(), "l".into()],
            vec![ints(&[1, 0])],
            int(1),
        );
        assert!(zero_issue.is_err());
    }

    #[test]
    fn claims_json_round_trip() {
        let mic = streaming_to_claims(&example_three_users().with_fee(frac(1, 2)).unwrap());
        let json = serde_json::to_string(&ClaimsJson::from(&mic)).unwrap();
        assert!(json.contains(r#""endowment":"3/2""#));
        let back: ClaimsJson = serde_json::from_str(&json).unwrap();
        assert_eq!(MultiIssueClaims::try_from(back).unwrap(), mic);
    }

    #[test]
    fn rule_names_parse() {
        assert_eq!("CEA".parse::<BankruptcyRule>(), Ok(BankruptcyRule::Cea));
        assert_eq!(
            "p".parse::<BankruptcyRule>(),
            Ok(BankruptcyRule::Proportional)
        );
        assert!("talmud".parse::<BankruptcyRule>().is_err());
    }
}

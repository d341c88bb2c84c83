//! Witness search over seeded instances and the index × axiom matrix.

use std::thread;

use serde_json::{json, Value};

use super::checks::{
    additivity_on, check_core_selection, check_reasonable_lower_bound_all, click_fraud_on,
    equal_global_impact_on, equal_individual_impact_on, homogeneity_on, outcome_of, Outcome,
};
use super::{Axiom, AxiomError, AxiomVerdict, ProblemGenerator, Status};
use crate::game::in_domain_pstar;
use crate::indices::Index;
use crate::problem::{example_one, example_three_users, StreamingProblem};

/// Instances every search starts from: the two-user running example, its
/// three-user extension and the running example with user `b` cut to two
/// streams.
pub fn golden_problems() -> Vec<StreamingProblem> {
    vec![example_one(), example_three_users(), click_fraud_variant()]
}

fn click_fraud_variant() -> StreamingProblem {
    StreamingProblem::from_matrix(vec![vec![10, 0], vec![0, 2]]).expect("valid example")
}

/// `(problem, perturbed, user)` triples checked before sampling.
pub fn golden_perturbations() -> Vec<(StreamingProblem, StreamingProblem, usize)> {
    vec![(example_one(), click_fraud_variant(), 1)]
}

fn outcome_on(
    index: &Index,
    axiom: Axiom,
    problem: &StreamingProblem,
    generator: &mut ProblemGenerator,
) -> Result<Outcome, AxiomError> {
    let pstar = generator.config().pstar;
    match axiom {
        Axiom::Homogeneity => homogeneity_on(index, problem),
        Axiom::Additivity => additivity_on(index, problem, pstar),
        Axiom::EqualIndividualImpact => equal_individual_impact_on(index, problem),
        Axiom::EqualGlobalImpact => equal_global_impact_on(index, problem),
        Axiom::ReasonableLowerBound => Ok(outcome_of(check_reasonable_lower_bound_all(
            index, problem,
        )?)),
        Axiom::CoreSelection => Ok(outcome_of(check_core_selection(index, problem)?)),
        Axiom::ClickFraudProofness => {
            let perturbations: Vec<(StreamingProblem, usize)> = (0..problem.n_users())
                .map(|j| (generator.perturb_column(problem, j), j))
                .collect();
            click_fraud_on(index, problem, &perturbations)
        }
    }
}

/// Checks the golden instances that lie in the generator's domain, then
/// `budget` generated ones, enumerating every premise tuple on each.
/// Stops at the first violation.
///
/// Homogeneity also checks a copy of each instance with one row replaced
/// by a multiple of another, since random rows are rarely proportional.
/// On the restricted domain, additivity only splits users into parts
/// that stay in the domain.
pub fn search_witness(
    index: &Index,
    axiom: Axiom,
    generator: &ProblemGenerator,
    budget: usize,
) -> Result<AxiomVerdict, AxiomError> {
    let mut generator = generator.restarted();
    let pstar = generator.config().pstar;
    let in_domain = |p: &StreamingProblem| !pstar || in_domain_pstar(p);
    let mut checked = 0;

    let mut record = |outcome: Outcome| -> Option<AxiomVerdict> {
        match outcome {
            Outcome::Holds => {
                checked += 1;
                None
            }
            Outcome::Violated(w) => {
                checked += 1;
                let mut v = AxiomVerdict::fail(axiom, index, *w);
                v.instances_checked = checked;
                Some(v)
            }
            Outcome::Vacuous => None,
        }
    };

    let goldens: Vec<StreamingProblem> = golden_problems()
        .into_iter()
        .filter(|p| in_domain(p))
        .collect();
    if axiom == Axiom::ClickFraudProofness {
        for (p, q, j) in golden_perturbations() {
            if in_domain(&p) && in_domain(&q) {
                if let Some(v) = record(click_fraud_on(index, &p, &[(q, j)])?) {
                    return Ok(v);
                }
            }
        }
    } else {
        for p in &goldens {
            if let Some(v) = record(outcome_on(index, axiom, p, &mut generator)?) {
                return Ok(v);
            }
        }
    }

    for _ in 0..budget {
        let p = generator.next_problem();
        if let Some(v) = record(outcome_on(index, axiom, &p, &mut generator)?) {
            return Ok(v);
        }
        if axiom == Axiom::Homogeneity {
            let planted = generator.plant_proportional_rows(&p);
            if !in_domain(&planted) {
                continue;
            }
            if let Some(v) = record(outcome_on(index, axiom, &planted, &mut generator)?) {
                return Ok(v);
            }
        }
    }

    Ok(if checked == 0 {
        AxiomVerdict::not_applicable(axiom, index)
    } else {
        AxiomVerdict::pass(axiom, index, checked)
    })
}

/// Verdicts for every index × axiom pair, row-major by index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AxiomMatrix {
    pub indices: Vec<String>,
    pub axioms: Vec<Axiom>,
    pub cells: Vec<AxiomVerdict>,
    pub seed: u64,
    pub budget: usize,
}

impl AxiomMatrix {
    pub fn get(&self, index: &str, axiom: Axiom) -> Option<&AxiomVerdict> {
        self.cells
            .iter()
            .find(|v| v.index == index && v.axiom == axiom)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "seed": self.seed,
            "budget": self.budget,
            "indices": self.indices,
            "axioms": self.axioms.iter().map(|a| a.name()).collect::<Vec<_>>(),
            "cells": self.cells.iter().map(AxiomVerdict::to_json).collect::<Vec<_>>(),
        })
    }

    /// Plain-text grid of pass / FAIL / n/a.
    pub fn render_table(&self) -> String {
        let width = self
            .indices
            .iter()
            .map(String::len)
            .max()
            .unwrap_or(5)
            .max(5);
        let mut out = format!("{:width$}", "index");
        for a in &self.axioms {
            out.push_str(&format!("  {:>6}", a.short_name()));
        }
        out.push('\n');
        for name in &self.indices {
            out.push_str(&format!("{name:width$}"));
            for &a in &self.axioms {
                let mark = match self.get(name, a).map(|v| v.status) {
                    Some(Status::Pass) => "pass",
                    Some(Status::Fail) => "FAIL",
                    Some(Status::NotApplicable) | None => "n/a",
                };
                out.push_str(&format!("  {mark:>6}"));
            }
            out.push('\n');
        }
        out
    }
}

/// Runs [`search_witness`] for every cell, in parallel across cells.
pub fn axiom_matrix(
    indices: &[Index],
    axioms: &[Axiom],
    generator: &ProblemGenerator,
    budget: usize,
) -> Result<AxiomMatrix, AxiomError> {
    let pairs: Vec<(&Index, Axiom)> = indices
        .iter()
        .flat_map(|i| axioms.iter().map(move |&a| (i, a)))
        .collect();
    let cells = thread::scope(|scope| {
        let handles: Vec<_> = pairs
            .iter()
            .map(|&(index, axiom)| {
                scope.spawn(move || search_witness(index, axiom, generator, budget))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("axiom search panicked"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(AxiomMatrix {
        indices: indices.iter().map(Index::name).collect(),
        axioms: axioms.to_vec(),
        cells,
        seed: generator.seed(),
        budget,
    })
}

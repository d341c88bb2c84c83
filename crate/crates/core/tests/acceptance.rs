//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::collections::HashMap;
use std::panic::{self, AssertUnwindSafe};

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use streamshare::axioms::{
    axiom_matrix, check_click_fraud_proofness, check_reasonable_lower_bound,
    check_reasonable_lower_bound_all, Axiom, GeneratorConfig, ProblemGenerator, Witness,
};
use streamshare::claims::{
    proportional_rule, streaming_to_bankruptcy, streaming_to_claims, two_stage_rule,
    weighted_proportional, BankruptcyRule, ProportionalIssueWeights, UniformIssueWeights,
};
use streamshare::game::{
    harsanyi_dividends, in_core_direct, in_core_flow, is_supermodular, reconstruct_from_dividends,
    streaming_game, CoreVerdict,
};
use streamshare::indices::{banded_weight_system, weighted_index};
use streamshare::io::{parse_problem, serialize_problem, Format};
use streamshare::problem::{example_one, example_three_users};
use streamshare::rational::{frac, int, to_decimal};
use streamshare::{
    pro_rata_index, rewards, user_centric_index, BandedWeightParams, Counterexample, Index,
    Rational, StreamingProblem,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn generator(seed: u64, config: GeneratorConfig) -> ProblemGenerator {
    ProblemGenerator::new(seed, config).expect("valid generator configuration")
}

fn criterion_1() -> Outcome {
    let p = example_one();
    let pr = rewards(&p, &pro_rata_index(&p)).map_err(|e| e.to_string())?;
    let uc = rewards(&p, &user_centric_index(&p)).map_err(|e| e.to_string())?;
    ensure(
        pr.payouts() == [frac(1, 5), frac(9, 5)],
        "pro-rata rewards differ",
    )?;
    ensure(
        uc.payouts() == [int(1), int(1)],
        "user-centric rewards differ",
    )?;
    Ok("pro-rata (1/5, 9/5), user-centric (1, 1)".into())
}

fn criterion_2() -> Outcome {
    let p = example_three_users();
    let banded = weighted_index(
        &p,
        &banded_weight_system(BandedWeightParams::new(20, 60).map_err(|e| e.to_string())?),
    )
    .map_err(|e| e.to_string())?;
    let pi = pro_rata_index(&p);
    let ui = user_centric_index(&p);
    ensure(pi.scores() == [int(15), int(125)], "P index")?;
    ensure(ui.scores() == [frac(9, 8), frac(15, 8)], "U index")?;
    ensure(banded.scores() == [frac(5, 4), frac(19, 4)], "banded index")?;

    let r = |i| {
        rewards(&p, i)
            .map(|a| a.into_payouts())
            .map_err(|e| e.to_string())
    };
    let (rp, ru, rb) = (r(&pi)?, r(&ui)?, r(&banded)?);
    // 3·15/140 and 3·125/140; the rounded table shows 0.3 and 2.7
    ensure(rp == [frac(9, 28), frac(75, 28)], "P rewards")?;
    ensure(ru == [frac(9, 8), frac(15, 8)], "U rewards")?;
    ensure(rb == [frac(5, 8), frac(19, 8)], "banded rewards")?;
    let rounded = |v: &[Rational]| v.iter().map(|x| to_decimal(x, 1)).collect::<Vec<_>>();
    ensure(rounded(&rp) == ["0.3", "2.7"], "P rounding")?;
    ensure(rounded(&ru) == ["1.1", "1.9"], "U rounding")?;
    ensure(rounded(&rb) == ["0.6", "2.4"], "banded rounding")?;
    Ok("indices (15,125) (9/8,15/8) (5/4,19/4); rewards (9/28,75/28) (9/8,15/8) (5/8,19/8) round to 0.3/2.7 1.1/1.9 0.6/2.4".into())
}

fn criterion_3() -> Outcome {
    let p = example_one();
    let game = streaming_game(&p).map_err(|e| e.to_string())?;
    let pr = rewards(&p, &pro_rata_index(&p)).map_err(|e| e.to_string())?;
    let direct = in_core_direct(&game, pr.payouts()).map_err(|e| e.to_string())?;
    ensure(
        direct.blocking_coalition() == Some(0b01),
        "direct oracle: expected blocking {1}",
    )?;
    let flow = in_core_flow(&p, pr.payouts()).map_err(|e| e.to_string())?;
    ensure(!flow.is_member(), "flow oracle accepted pro-rata")?;

    let uc = rewards(&p, &user_centric_index(&p)).map_err(|e| e.to_string())?;
    ensure(
        in_core_direct(&game, uc.payouts())
            .map_err(|e| e.to_string())?
            .is_member(),
        "direct oracle rejected user-centric",
    )?;
    let flow = in_core_flow(&p, uc.payouts()).map_err(|e| e.to_string())?;
    let d = flow
        .decomposition()
        .ok_or("flow oracle rejected user-centric")?;
    ensure(d.is_valid_for(&p, uc.payouts()), "invalid decomposition")?;
    Ok("pro-rata blocked by {1} (1/5 < 1) in both oracles; user-centric accepted with a valid decomposition".into())
}

fn criterion_4() -> Outcome {
    let p = example_one();
    let q =
        StreamingProblem::from_matrix(vec![vec![10, 0], vec![0, 2]]).map_err(|e| e.to_string())?;
    let before = rewards(&p, &pro_rata_index(&p)).map_err(|e| e.to_string())?;
    let after = rewards(&q, &pro_rata_index(&q)).map_err(|e| e.to_string())?;
    let diff = (&before.payouts()[1] - &after.payouts()[1]).abs();
    ensure(
        diff == frac(22, 15) && diff > int(1),
        format!("pro-rata difference {diff}"),
    )?;

    let mut g = generator(4, GeneratorConfig::default().sizes(6, 6));
    let mut perturbations = 0;
    while perturbations < 1000 {
        let p = g.next_problem();
        for j in 0..p.n_users() {
            let q = g.perturb_column(&p, j);
            let v = check_click_fraud_proofness(&Index::UserCentric, &p, &q, j)
                .map_err(|e| e.to_string())?;
            ensure(v.is_pass(), format!("user-centric failed: {:?}", v.witness))?;
            perturbations += 1;
        }
    }
    Ok(format!(
        "pro-rata |ΔR_2| = 22/15 > 1; user-centric passes {perturbations} perturbations"
    ))
}

/// Each user splits the fee over the artists they listened to with
/// random positive integer weights.
fn random_decomposition_allocation(p: &StreamingProblem, rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let mut x = vec![Rational::zero(); p.n_artists()];
    for j in 0..p.n_users() {
        let listened = p.listened(j);
        let w: Vec<i64> = listened.iter().map(|_| rng.random_range(1..=5)).collect();
        let total: i64 = w.iter().sum();
        for (&i, &wi) in listened.iter().zip(&w) {
            x[i] += frac(wi, total) * p.fee();
        }
    }
    x
}

fn perturb(x: &[Rational], rng: &mut ChaCha8Rng) -> Vec<Rational> {
    let mut y = x.to_vec();
    if y.len() < 2 {
        return y;
    }
    let a = rng.random_range(0..y.len());
    let b = (a + rng.random_range(1..y.len())) % y.len();
    let delta = &y[a] * frac(rng.random_range(1..=4), 4) + frac(rng.random_range(0..=2), 7);
    y[a] -= &delta;
    y[b] += delta;
    y
}

fn criterion_5() -> Outcome {
    let mut g = generator(5, GeneratorConfig::default().sizes(5, 6));
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let (mut cases, mut members, mut rejected) = (0, 0, 0);
    for _ in 0..500 {
        let p = g.next_problem();
        let game = streaming_game(&p).map_err(|e| e.to_string())?;
        let constructed: Vec<Vec<Rational>> = (0..5)
            .map(|_| random_decomposition_allocation(&p, &mut rng))
            .collect();
        let perturbed: Vec<Vec<Rational>> =
            constructed.iter().map(|x| perturb(x, &mut rng)).collect();
        for (k, x) in constructed.iter().chain(&perturbed).enumerate() {
            let direct = in_core_direct(&game, x).map_err(|e| e.to_string())?;
            let flow = in_core_flow(&p, x).map_err(|e| e.to_string())?;
            ensure(
                direct.is_member() == flow.is_member(),
                format!("oracles disagree on {:?} with {:?}", p.streams(), x),
            )?;
            if let Some(d) = flow.decomposition() {
                ensure(
                    d.is_valid_for(&p, x),
                    "flow returned an invalid decomposition",
                )?;
            }
            if k < 5 {
                ensure(flow.is_member(), "constructed allocation rejected")?;
            }
            if let CoreVerdict::Blocked { payoff, worth, .. } = &direct {
                ensure(payoff < worth, "blocking coalition does not block")?;
            }
            cases += 1;
            if direct.is_member() {
                members += 1;
            } else {
                rejected += 1;
            }
        }
    }
    Ok(format!("500 problems, {cases} allocations: full agreement ({members} members, {rejected} non-members)"))
}

fn criterion_6() -> Outcome {
    let mut g = generator(6, GeneratorConfig::default());
    for _ in 0..1000 {
        let p = g.next_problem();
        let mic = streaming_to_claims(&p);
        let rp = rewards(&p, &pro_rata_index(&p))
            .map_err(|e| e.to_string())?
            .into_payouts();
        let ru = rewards(&p, &user_centric_index(&p))
            .map_err(|e| e.to_string())?
            .into_payouts();
        let two = |psi, phi| two_stage_rule(&mic, psi, phi).map_err(|e| e.to_string());
        ensure(
            two(BankruptcyRule::Proportional, BankruptcyRule::Proportional)? == rp,
            "R^P != R^{P,P}",
        )?;
        ensure(
            two(BankruptcyRule::Cea, BankruptcyRule::Proportional)? == ru,
            "U != R^{CEA,P}",
        )?;
        let wp =
            weighted_proportional(&mic, &ProportionalIssueWeights).map_err(|e| e.to_string())?;
        let wu = weighted_proportional(&mic, &UniformIssueWeights).map_err(|e| e.to_string())?;
        ensure(wp == rp, "R^P != P^{w^P}")?;
        ensure(wu == ru, "R^U != P^{w^U}")?;
        let bp = streaming_to_bankruptcy(&p).map_err(|e| e.to_string())?;
        ensure(
            proportional_rule(&bp) == rp,
            "bankruptcy proportional != R^P",
        )?;
    }
    Ok("R^P = R^{P,P}, U = R^{CEA,P}, R^P = P^{w^P}, R^U = P^{w^U} on 1000 problems".into())
}

/// The published independence claims: (index, axiom, satisfied, restricted
/// domain).
fn claimed_cells() -> Vec<(Index, Axiom, bool, bool)> {
    use Axiom::*;
    use Counterexample::*;
    let c = Index::Counterexample;
    vec![
        (c(I1), Additivity, true, false),
        (c(I1), Homogeneity, false, false),
        (c(I1), EqualGlobalImpact, true, false),
        (c(I2), Homogeneity, true, false),
        (c(I2), Additivity, false, false),
        (c(I2), EqualIndividualImpact, true, false),
        (c(I3), Additivity, true, false),
        (c(I3), EqualIndividualImpact, true, false),
        (c(I3), Homogeneity, false, false),
        (Index::UserCentric, Homogeneity, true, false),
        (Index::UserCentric, Additivity, true, false),
        (Index::UserCentric, EqualIndividualImpact, false, false),
        (c(I4), Homogeneity, true, false),
        (c(I4), EqualGlobalImpact, true, false),
        (c(I4), Additivity, false, false),
        (Index::ProRata, Homogeneity, true, false),
        (Index::ProRata, Additivity, true, false),
        (Index::ProRata, EqualGlobalImpact, false, false),
        (Index::UserCentric, ReasonableLowerBound, true, false),
        (Index::ProRata, ReasonableLowerBound, false, false),
        (Index::UserCentric, ClickFraudProofness, true, false),
        (Index::ProRata, ClickFraudProofness, false, false),
        (c(I5), Homogeneity, false, true),
        (c(I5), Additivity, true, true),
        (c(I5), CoreSelection, true, true),
        (c(I2), Homogeneity, true, true),
        (c(I2), Additivity, false, true),
        (c(I2), CoreSelection, true, true),
        (Index::ProRata, Homogeneity, true, true),
        (Index::ProRata, Additivity, true, true),
        (Index::ProRata, CoreSelection, false, true),
        (Index::UserCentric, CoreSelection, true, true),
    ]
}

fn criterion_7() -> Outcome {
    let budget = 1000;
    let full = generator(7, GeneratorConfig::default());
    let restricted = generator(7, GeneratorConfig::default().pstar());
    let first = axiom_matrix(
        &Index::standard_set(),
        &[
            Axiom::Homogeneity,
            Axiom::Additivity,
            Axiom::EqualIndividualImpact,
            Axiom::EqualGlobalImpact,
            Axiom::ReasonableLowerBound,
            Axiom::ClickFraudProofness,
        ],
        &full,
        budget,
    )
    .map_err(|e| e.to_string())?;
    let second = axiom_matrix(
        &Index::standard_set(),
        &[Axiom::Homogeneity, Axiom::Additivity, Axiom::CoreSelection],
        &restricted,
        budget,
    )
    .map_err(|e| e.to_string())?;

    let mut mismatches = Vec::new();
    let claims = claimed_cells();
    for (index, axiom, satisfied, pstar) in &claims {
        let matrix = if *pstar { &second } else { &first };
        let v = matrix
            .get(&index.name(), *axiom)
            .ok_or_else(|| format!("missing cell {} {}", index.name(), axiom))?;
        if v.is_fail() && !v.recheck(index).map_err(|e| e.to_string())? {
            return Err(format!(
                "witness for {} {} does not recheck",
                index.name(),
                axiom
            ));
        }
        let domain = if *pstar { " on P*" } else { "" };
        if *satisfied && !v.is_pass() {
            let why = v
                .witness
                .as_ref()
                .map_or(v.status.name().to_string(), Witness::describe);
            mismatches.push(format!(
                "{} claimed to satisfy {}{domain} but fails: {}",
                index.name(),
                axiom,
                why
            ));
        }
        if !*satisfied && !v.is_fail() {
            mismatches.push(format!(
                "{} claimed to fail {}{domain} but no witness in {} instances",
                index.name(),
                axiom,
                v.instances_checked
            ));
        }
    }
    if mismatches.is_empty() {
        Ok(format!(
            "all {} claimed cells reproduced (budget {budget})",
            claims.len()
        ))
    } else {
        Err(format!(
            "{} of {} claimed cells not reproduced:\n    {}",
            mismatches.len(),
            claims.len(),
            mismatches.join("\n    ")
        ))
    }
}

fn criterion_8() -> Outcome {
    let mut g = generator(8, GeneratorConfig::default());
    for _ in 0..500 {
        let p = g.next_problem();
        let game = streaming_game(&p).map_err(|e| e.to_string())?;
        if let Err(v) = is_supermodular(&game) {
            return Err(format!("not supermodular on {:?}: {v:?}", p.streams()));
        }
        let d = harsanyi_dividends(&game);
        let mut counts: HashMap<u64, i64> = HashMap::new();
        for j in 0..p.n_users() {
            *counts.entry(p.listened_mask(j)).or_default() += 1;
        }
        for r in 0..1usize << p.n_artists() {
            let expected = int(counts.get(&(r as u64)).copied().unwrap_or(0)) * p.fee();
            ensure(
                d.get(r) == &expected,
                format!("dividend of {r:b} on {:?}", p.streams()),
            )?;
            ensure(*d.get(r) >= Rational::zero(), "negative dividend")?;
        }
        let back =
            reconstruct_from_dividends(&d, game.players().to_vec()).map_err(|e| e.to_string())?;
        ensure(back == game, "reconstruction differs")?;
    }
    Ok("500 games supermodular; dividends = fee·|{j: L^j = R}| >= 0; reconstruction exact".into())
}

fn criterion_9() -> Outcome {
    let v = check_reasonable_lower_bound(&Index::ProRata, &example_one(), &[0])
        .map_err(|e| e.to_string())?;
    let value = match &v.witness {
        Some(Witness::ReasonableLowerBound { value, .. }) => value.clone(),
        _ => return Err("pro-rata passed on Example 1 with C = {a}".into()),
    };
    ensure(value == frac(1, 5), format!("unexpected value {value}"))?;
    let mut g = generator(9, GeneratorConfig::default().sizes(6, 6));
    for _ in 0..500 {
        let p = g.next_problem();
        let v =
            check_reasonable_lower_bound_all(&Index::UserCentric, &p).map_err(|e| e.to_string())?;
        ensure(
            v.is_pass(),
            format!("user-centric failed on {:?}", p.streams()),
        )?;
    }
    Ok("user-centric passes every coalition on 500 problems; pro-rata fails C = {a} with (10/100)·2 = 1/5 < 1".into())
}

fn criterion_10() -> Outcome {
    let mut indices = Index::standard_set();
    indices.push(Index::Banded(
        BandedWeightParams::new(3, 8).map_err(|e| e.to_string())?,
    ));
    indices.push(Index::Banded(
        BandedWeightParams::new(20, 60).map_err(|e| e.to_string())?,
    ));
    let mut g = generator(10, GeneratorConfig::default());
    let mut rng = ChaCha8Rng::seed_from_u64(1010);
    for _ in 0..500 {
        let p = g.next_problem();
        for index in &indices {
            let values = index.evaluate(&p).map_err(|e| e.to_string())?;
            let lambda = frac(rng.random_range(1..=50), rng.random_range(1..=50));
            let a = rewards(&p, &values).map_err(|e| e.to_string())?;
            let b = rewards(&p, &values.scaled(&lambda)).map_err(|e| e.to_string())?;
            ensure(a == b, format!("{} not scale invariant", index.name()))?;
        }
        let csv = parse_problem(&serialize_problem(&p, Format::Csv), Format::Csv)
            .map_err(|e| e.to_string())?;
        ensure(csv == p, "CSV round trip")?;
        let fee = frac(rng.random_range(1..=9), rng.random_range(1..=4));
        let q = p.with_fee(fee).map_err(|e| e.to_string())?;
        let json = parse_problem(&serialize_problem(&q, Format::Json), Format::Json)
            .map_err(|e| e.to_string())?;
        ensure(json == q, "JSON round trip")?;
    }
    Ok(format!(
        "{} indices scale-invariant; CSV and JSON round trips exact on 500 problems",
        indices.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        ("Example-1 goldens", criterion_1),
        ("three-user goldens", criterion_2),
        ("core counterexample", criterion_3),
        ("click-fraud", criterion_4),
        ("core oracle equivalence", criterion_5),
        ("claims identities", criterion_6),
        ("independence matrix", criterion_7),
        ("game structure", criterion_8),
        ("reasonable lower bound", criterion_9),
        ("scaling invariance and round trips", criterion_10),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

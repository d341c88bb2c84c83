//! Subcommand implementations. Each returns both renderings of its report.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use serde_json::{json, Map, Value};
use streamshare::axioms::{GeneratorConfig, Status};
use streamshare::claims::{first_stage, streaming_to_claims, two_stage_rule, ClaimsJson};
use streamshare::game::{
    coalition_label, decomposition_json, harsanyi_dividends, in_core_direct, in_core_flow,
    is_supermodular, streaming_game, CoreVerdict, FlowVerdict, MAX_PLAYERS,
};
use streamshare::indices::TableWeights;
use streamshare::rational::{parse_rational, to_decimal, to_text};
use streamshare::{
    axiom_matrix, parse_problem, Axiom, BandedWeightParams, BankruptcyRule, Counterexample, Format,
    Index, ProblemGenerator, Rational, StreamingProblem,
};

use crate::table::Table;
use crate::{GlobalArgs, InputFormat, Method, MethodParams};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("core oracles disagree: {0}")]
    Disagreement(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Disagreement(_) => 3,
        }
    }
}

fn input_err(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub struct Report {
    pub json: Value,
    pub table: String,
}

fn load_problem(g: &GlobalArgs) -> Result<StreamingProblem, CliError> {
    let path = g
        .input
        .as_deref()
        .ok_or_else(|| CliError::Input("no input; pass --input <file> or --input -".into()))?;
    let bytes = if path == Path::new("-") {
        let mut buf = Vec::new();
        std::io::stdin()
            .read_to_end(&mut buf)
            .map_err(|e| input_err(format!("reading stdin: {e}")))?;
        buf
    } else {
        std::fs::read(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?
    };
    let format = match g.format {
        Some(InputFormat::Csv) => Format::Csv,
        Some(InputFormat::Json) => Format::Json,
        None => Format::from_path(path).unwrap_or_else(|| sniff(&bytes)),
    };
    let problem = parse_problem(&bytes, format).map_err(input_err)?;
    match &g.fee {
        Some(fee) => {
            let fee = parse_rational(fee).map_err(|e| input_err(format!("--fee: {e}")))?;
            problem
                .with_fee(fee)
                .map_err(|e| input_err(format!("--fee: {e}")))
        }
        None => Ok(problem),
    }
}

fn sniff(bytes: &[u8]) -> Format {
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => Format::Json,
        _ => Format::Csv,
    }
}

fn build_index(method: Method, params: &MethodParams) -> Result<Index, CliError> {
    Ok(match method {
        Method::ProRata => Index::ProRata,
        Method::UserCentric => Index::UserCentric,
        Method::Banded => {
            let (Some(alpha), Some(beta)) = (params.alpha, params.beta) else {
                return Err(CliError::Input("banded needs --alpha and --beta".into()));
            };
            Index::Banded(BandedWeightParams::new(alpha, beta).map_err(input_err)?)
        }
        Method::WeightedFile => {
            let path = params
                .weights_file
                .as_deref()
                .ok_or_else(|| CliError::Input("weighted-file needs --weights-file".into()))?;
            Index::Weighted(Arc::new(load_weights(path)?))
        }
        Method::I1 => Index::Counterexample(Counterexample::I1),
        Method::I2 => Index::Counterexample(Counterexample::I2),
        Method::I3 => Index::Counterexample(Counterexample::I3),
        Method::I4 => Index::Counterexample(Counterexample::I4),
        Method::I5 => Index::Counterexample(Counterexample::I5),
    })
}

fn load_weights(path: &Path) -> Result<TableWeights, CliError> {
    let context = |e: &dyn std::fmt::Display| input_err(format!("{}: {e}", path.display()));
    let text = std::fs::read_to_string(path).map_err(|e| context(&e))?;
    let raw: Map<String, Value> = serde_json::from_str(&text).map_err(|e| context(&e))?;
    let mut weights = HashMap::new();
    for (user, w) in raw {
        let text = match &w {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            _ => {
                return Err(context(&format!(
                    "weight of {user:?} must be a string or integer"
                )))
            }
        };
        let w = parse_rational(&text).map_err(|e| context(&format!("weight of {user:?}: {e}")))?;
        weights.insert(user, w);
    }
    let name = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("table")
        .to_string();
    Ok(TableWeights::new(name, weights))
}

fn by_id(ids: &[String], values: &[Rational]) -> Value {
    ids.iter()
        .zip(values)
        .map(|(id, v)| (id.clone(), Value::from(to_text(v))))
        .collect::<Map<_, _>>()
        .into()
}

fn header(problem: &StreamingProblem, g: &GlobalArgs) -> String {
    format!(
        "{} artists, {} users, fee {}, revenue {}\n",
        problem.n_artists(),
        problem.n_users(),
        to_decimal(problem.fee(), g.precision),
        to_decimal(&problem.revenue(), g.precision),
    )
}

struct Evaluated {
    name: String,
    index: Vec<Rational>,
    rewards: Vec<Rational>,
}

fn evaluate(index: &Index, problem: &StreamingProblem) -> Result<Evaluated, CliError> {
    let scores = index.evaluate(problem).map_err(input_err)?;
    let rewards = index.rewards(problem).map_err(input_err)?;
    Ok(Evaluated {
        name: index.name(),
        index: scores.into_scores(),
        rewards: rewards.into_payouts(),
    })
}

pub fn allocate(g: &GlobalArgs, method: Method, params: &MethodParams) -> Result<Report, CliError> {
    let problem = load_problem(g)?;
    let e = evaluate(&build_index(method, params)?, &problem)?;
    let artists = problem.artists();
    let json = json!({
        "method": e.name,
        "fee": to_text(problem.fee()),
        "revenue": to_text(&problem.revenue()),
        "index": by_id(artists, &e.index),
        "rewards": by_id(artists, &e.rewards),
    });
    let mut t = Table::new(["artist", "index", "reward"]);
    for (k, a) in artists.iter().enumerate() {
        t.row([
            a.clone(),
            to_decimal(&e.index[k], g.precision),
            to_decimal(&e.rewards[k], g.precision),
        ]);
    }
    let table = format!(
        "method: {}\n{}\n{}",
        e.name,
        header(&problem, g),
        t.render()
    );
    Ok(Report { json, table })
}

pub fn compare(
    g: &GlobalArgs,
    methods: &[Method],
    params: &MethodParams,
) -> Result<Report, CliError> {
    let problem = load_problem(g)?;
    let methods = if methods.is_empty() {
        let mut m = vec![Method::ProRata, Method::UserCentric];
        if params.alpha.is_some() || params.beta.is_some() {
            m.push(Method::Banded);
        }
        if params.weights_file.is_some() {
            m.push(Method::WeightedFile);
        }
        m
    } else {
        methods.to_vec()
    };
    let results = methods
        .iter()
        .map(|&m| evaluate(&build_index(m, params)?, &problem))
        .collect::<Result<Vec<_>, _>>()?;
    let artists = problem.artists();
    let json = json!({
        "fee": to_text(problem.fee()),
        "revenue": to_text(&problem.revenue()),
        "artists": artists,
        "methods": results.iter().map(|e| json!({
            "method": e.name,
            "index": by_id(artists, &e.index),
            "rewards": by_id(artists, &e.rewards),
        })).collect::<Vec<_>>(),
    });
    let mut head = vec!["artist".to_string()];
    for e in &results {
        head.push(format!("{} index", e.name));
        head.push(format!("{} reward", e.name));
    }
    let mut t = Table::new(head);
    for (k, a) in artists.iter().enumerate() {
        let mut row = vec![a.clone()];
        for e in &results {
            row.push(to_decimal(&e.index[k], g.precision));
            row.push(to_decimal(&e.rewards[k], g.precision));
        }
        t.row(row);
    }
    let table = format!("{}\n{}", header(&problem, g), t.render());
    Ok(Report { json, table })
}

fn braces(label: &str) -> String {
    format!("{{{label}}}")
}

pub fn core_check(
    g: &GlobalArgs,
    method: Method,
    params: &MethodParams,
) -> Result<Report, CliError> {
    let problem = load_problem(g)?;
    let e = evaluate(&build_index(method, params)?, &problem)?;
    let artists = problem.artists();
    let dec = |r: &Rational| to_decimal(r, g.precision);

    let flow = in_core_flow(&problem, &e.rewards).map_err(input_err)?;
    let (flow_json, flow_line) = match &flow {
        FlowVerdict::Member(d) => (
            json!({"member": true, "decomposition": decomposition_json(&problem, d)}),
            "flow oracle: member, all fees routed".to_string(),
        ),
        FlowVerdict::Infeasible { routed, revenue } => (
            json!({"member": false, "routed": to_text(routed), "revenue": to_text(revenue)}),
            format!(
                "flow oracle: not a member, only {} of {} can be routed",
                dec(routed),
                dec(revenue)
            ),
        ),
        FlowVerdict::NegativeEntry(i) => (
            json!({"member": false, "negative_entry": artists[*i]}),
            format!(
                "flow oracle: not a member, negative payout to artist {}",
                artists[*i]
            ),
        ),
        FlowVerdict::WrongTotal { total, revenue } => (
            json!({"member": false, "total": to_text(total), "revenue": to_text(revenue)}),
            format!(
                "flow oracle: not a member, payouts total {} but revenue is {}",
                dec(total),
                dec(revenue)
            ),
        ),
    };

    let direct = if problem.n_artists() <= MAX_PLAYERS {
        let game = streaming_game(&problem).map_err(input_err)?;
        Some(in_core_direct(&game, &e.rewards).map_err(input_err)?)
    } else {
        None
    };
    let (direct_json, direct_line) = match &direct {
        None => (
            json!({"skipped": format!("more than {MAX_PLAYERS} artists")}),
            format!("direct oracle: skipped, more than {MAX_PLAYERS} artists"),
        ),
        Some(CoreVerdict::Member) => (
            json!({"member": true}),
            "direct oracle: member, no blocking coalition".to_string(),
        ),
        Some(CoreVerdict::Blocked {
            coalition,
            payoff,
            worth,
        }) => {
            let label = coalition_label(artists, *coalition);
            (
                json!({
                    "member": false,
                    "blocking_coalition": label.split(',').collect::<Vec<_>>(),
                    "payoff": to_text(payoff),
                    "worth": to_text(worth),
                }),
                format!(
                    "direct oracle: not a member, blocking coalition {} receives {} < v = {}",
                    braces(&label),
                    dec(payoff),
                    dec(worth)
                ),
            )
        }
        Some(CoreVerdict::Inefficient { total, worth }) => (
            json!({"member": false, "total": to_text(total), "worth": to_text(worth)}),
            format!(
                "direct oracle: not a member, payouts total {} but v(N) = {}",
                dec(total),
                dec(worth)
            ),
        ),
    };

    let member = flow.is_member();
    if let Some(d) = &direct {
        if d.is_member() != member {
            return Err(CliError::Disagreement(format!(
                "flow says {}, direct says {}",
                if member { "member" } else { "not a member" },
                if d.is_member() {
                    "member"
                } else {
                    "not a member"
                },
            )));
        }
    }

    let json = json!({
        "method": e.name,
        "allocation": by_id(artists, &e.rewards),
        "in_core": member,
        "flow": flow_json,
        "direct": direct_json,
    });
    let mut table = format!(
        "method: {}\n{}allocation: {}\n{}\n{}\n{}\n",
        e.name,
        header(&problem, g),
        artists
            .iter()
            .zip(&e.rewards)
            .map(|(a, r)| format!("{a}: {}", dec(r)))
            .collect::<Vec<_>>()
            .join(", "),
        if member { "IN CORE" } else { "NOT IN CORE" },
        flow_line,
        direct_line,
    );
    if let Some(d) = flow.decomposition() {
        let mut t = Table::new(std::iter::once("user".to_string()).chain(artists.iter().cloned()));
        for (u, share) in problem.users().iter().zip(d.shares()) {
            t.row(std::iter::once(u.clone()).chain(share.iter().map(dec)));
        }
        table.push_str("\ndecomposition (share of each user's fee per artist):\n");
        table.push_str(&t.render());
    }
    Ok(Report { json, table })
}

pub struct AxiomOptions {
    pub seed: u64,
    pub budget: usize,
    pub indices: Vec<String>,
    pub axioms: Vec<String>,
    pub alpha: u64,
    pub beta: u64,
    pub pstar: bool,
}

pub fn axioms(o: &AxiomOptions) -> Result<Report, CliError> {
    let banded = || -> Result<Index, CliError> {
        Ok(Index::Banded(
            BandedWeightParams::new(o.alpha, o.beta).map_err(input_err)?,
        ))
    };
    let indices = if o.indices.is_empty() {
        let mut all = Index::standard_set();
        all.push(banded()?);
        all
    } else {
        o.indices
            .iter()
            .map(|s| match s.trim() {
                "banded" => banded(),
                s => s.parse::<Index>().map_err(input_err),
            })
            .collect::<Result<Vec<_>, _>>()?
    };
    let axioms = if o.axioms.is_empty() {
        Axiom::ALL.to_vec()
    } else {
        o.axioms
            .iter()
            .map(|s| s.parse::<Axiom>().map_err(CliError::Input))
            .collect::<Result<Vec<_>, _>>()?
    };
    let config = if o.pstar {
        GeneratorConfig::default().pstar()
    } else {
        GeneratorConfig::default()
    };
    let generator = ProblemGenerator::new(o.seed, config).map_err(input_err)?;
    let matrix = axiom_matrix(&indices, &axioms, &generator, o.budget).map_err(input_err)?;

    let mut table = format!(
        "seed {}, budget {}, domain {}\n\n{}",
        o.seed,
        o.budget,
        if o.pstar {
            "restricted"
        } else {
            "all problems"
        },
        matrix.render_table()
    );
    let failures: Vec<_> = matrix
        .cells
        .iter()
        .filter(|c| c.status == Status::Fail)
        .collect();
    if !failures.is_empty() {
        table.push_str("\nwitnesses:\n");
        for cell in failures {
            if let Some(w) = &cell.witness {
                table.push_str(&format!(
                    "  {} / {}: {}\n",
                    cell.index,
                    cell.axiom,
                    w.describe()
                ));
            }
        }
    }
    Ok(Report {
        json: matrix.to_json(),
        table,
    })
}

pub fn game(g: &GlobalArgs) -> Result<Report, CliError> {
    let problem = load_problem(g)?;
    let artists = problem.artists();
    if problem.n_artists() > MAX_PLAYERS {
        let notice = format!(
            "{} artists exceed the {MAX_PLAYERS}-player limit for coalition tables; \
             core membership is still available through core-check, which then uses the flow oracle only",
            problem.n_artists()
        );
        return Ok(Report {
            json: json!({"players": artists, "skipped": notice}),
            table: format!("{notice}\n"),
        });
    }
    let game = streaming_game(&problem).map_err(input_err)?;
    let dividends = harsanyi_dividends(&game);
    let supermodular = is_supermodular(&game);

    let dec = |r: &Rational| to_decimal(r, g.precision);
    let full = problem.n_artists() <= 10;
    let mut t = Table::new(["coalition", "v", "dividend"]);
    for s in 1..1usize << problem.n_artists() {
        let d = dividends.get(s);
        if full || !num_is_zero(d) {
            t.row([
                braces(&coalition_label(artists, s)),
                dec(game.value(s)),
                dec(d),
            ]);
        }
    }
    let mut table = header(&problem, g);
    if !full {
        table.push_str("coalitions with nonzero dividend only\n");
    }
    table.push('\n');
    table.push_str(&t.render());

    let coalitions = |values: &[Rational]| -> Map<String, Value> {
        (1..values.len())
            .map(|s| {
                (
                    coalition_label(artists, s),
                    Value::from(to_text(&values[s])),
                )
            })
            .collect()
    };
    let violation = match &supermodular {
        Ok(()) => {
            table.push_str("\nsupermodular: yes\n");
            Value::Null
        }
        Err(v) => {
            let (s, t2) = (
                coalition_label(artists, v.smaller),
                coalition_label(artists, v.larger),
            );
            let player = &artists[v.player];
            table.push_str(&format!(
                "\nsupermodular: no, adding {player} to {} gains more than adding it to {}\n",
                braces(&s),
                braces(&t2)
            ));
            json!({"smaller": s, "larger": t2, "player": player})
        }
    };
    let json = json!({
        "players": artists,
        "values": coalitions(game.values()),
        "dividends": coalitions(dividends.values()),
        "supermodular": supermodular.is_ok(),
        "violation": violation,
    });
    Ok(Report { json, table })
}

fn num_is_zero(r: &Rational) -> bool {
    r == &Rational::from_integer(0.into())
}

pub fn claims(g: &GlobalArgs, psi: &str, phi: &str) -> Result<Report, CliError> {
    let psi: BankruptcyRule = psi.parse().map_err(|e| input_err(format!("--psi: {e}")))?;
    let phi: BankruptcyRule = phi.parse().map_err(|e| input_err(format!("--phi: {e}")))?;
    let problem = load_problem(g)?;
    let mic = streaming_to_claims(&problem);
    let shares = first_stage(&mic, psi).map_err(input_err)?;
    let awards = two_stage_rule(&mic, psi, phi).map_err(input_err)?;
    let dec = |r: &Rational| to_decimal(r, g.precision);

    let json = json!({
        "psi": psi.name(),
        "phi": phi.name(),
        "problem": ClaimsJson::from(&mic),
        "issue_endowments": by_id(problem.users(), &shares),
        "awards": by_id(problem.artists(), &awards),
    });
    let mut first = Table::new(["user", "claims", "endowment"]);
    for (j, u) in problem.users().iter().enumerate() {
        first.row([u.clone(), dec(&mic.issue_totals()[j]), dec(&shares[j])]);
    }
    let mut second = Table::new(["artist", "award"]);
    for (a, x) in problem.artists().iter().zip(&awards) {
        second.row([a.clone(), dec(x)]);
    }
    let table = format!(
        "rule: {} across users, then {} within each user\n{}\nfirst stage:\n{}\nawards:\n{}",
        psi.name(),
        phi.name(),
        header(&problem, g),
        first.render(),
        second.render()
    );
    Ok(Report { json, table })
}

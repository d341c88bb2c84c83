//! Seeded random streaming problems.

use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::problem::{default_artist_ids, default_user_ids, StreamingProblem};
use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid generator configuration: {0}")]
pub struct GeneratorError(String);

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub min_artists: usize,
    pub max_artists: usize,
    pub min_users: usize,
    pub max_users: usize,
    /// Nonzero counts are drawn uniformly from `1..=max_streams`.
    pub max_streams: u64,
    /// Probability that a cell is zero before column repair.
    pub zero_probability: f64,
    /// Restrict to problems with at least three users where nobody
    /// listens to every artist.
    pub pstar: bool,
    pub fee: Rational,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            min_artists: 1,
            max_artists: 6,
            min_users: 1,
            max_users: 6,
            max_streams: 10,
            zero_probability: 0.5,
            pstar: false,
            fee: Rational::one(),
        }
    }
}

impl GeneratorConfig {
    pub fn pstar(mut self) -> Self {
        self.pstar = true;
        self.min_artists = self.min_artists.max(2);
        self.min_users = self.min_users.max(3);
        self
    }

    pub fn sizes(mut self, max_artists: usize, max_users: usize) -> Self {
        self.max_artists = max_artists;
        self.max_users = max_users;
        self
    }

    fn validate(&self) -> Result<(), GeneratorError> {
        let fail = |m: &str| Err(GeneratorError(m.to_string()));
        if self.min_artists == 0 || self.min_artists > self.max_artists {
            return fail("artist bounds must satisfy 1 <= min <= max");
        }
        if self.min_users == 0 || self.min_users > self.max_users {
            return fail("user bounds must satisfy 1 <= min <= max");
        }
        if self.max_streams == 0 {
            return fail("max_streams must be positive");
        }
        if !(0.0..1.0).contains(&self.zero_probability) {
            return fail("zero_probability must lie in [0, 1)");
        }
        if self.fee <= Rational::from_integer(0.into()) {
            return fail("fee must be positive");
        }
        if self.pstar && (self.min_artists < 2 || self.min_users < 3) {
            return fail("the restricted domain needs at least 2 artists and 3 users");
        }
        Ok(())
    }
}

/// Deterministic stream of valid problems: the same seed and
/// configuration always yield the same sequence.
#[derive(Debug, Clone)]
pub struct ProblemGenerator {
    config: GeneratorConfig,
    seed: u64,
    rng: ChaCha8Rng,
}

impl ProblemGenerator {
    pub fn new(seed: u64, config: GeneratorConfig) -> Result<Self, GeneratorError> {
        config.validate()?;
        Ok(Self {
            config,
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    /// A fresh generator with the same seed and configuration.
    pub fn restarted(&self) -> Self {
        Self {
            config: self.config.clone(),
            seed: self.seed,
            rng: ChaCha8Rng::seed_from_u64(self.seed),
        }
    }

    pub fn next_problem(&mut self) -> StreamingProblem {
        let n = self
            .rng
            .random_range(self.config.min_artists..=self.config.max_artists);
        let m = self
            .rng
            .random_range(self.config.min_users..=self.config.max_users);
        let columns: Vec<Vec<u64>> = (0..m).map(|_| self.column(n)).collect();
        let streams = (0..n)
            .map(|i| columns.iter().map(|c| c[i]).collect())
            .collect();
        StreamingProblem::new(
            default_artist_ids(n),
            default_user_ids(m),
            streams,
            self.config.fee.clone(),
        )
        .expect("generated columns are nonempty")
    }

    /// A nonempty column, and not full when restricted.
    fn column(&mut self, n: usize) -> Vec<u64> {
        loop {
            let col: Vec<u64> = (0..n)
                .map(|_| {
                    if self.rng.random_bool(self.config.zero_probability) {
                        0
                    } else {
                        self.rng.random_range(1..=self.config.max_streams)
                    }
                })
                .collect();
            let listened = col.iter().filter(|&&t| t > 0).count();
            if listened > 0 && !(self.config.pstar && listened == n) {
                return col;
            }
        }
    }

    /// Same problem with user `j`'s column redrawn.
    pub fn perturb_column(&mut self, problem: &StreamingProblem, j: usize) -> StreamingProblem {
        let col = self.column(problem.n_artists());
        problem
            .with_column(j, &col)
            .expect("redrawn column is nonempty")
    }

    /// Overwrites one random row with a multiple (0, 2 or 3) of another,
    /// so that proportional rows occur. Returns the problem unchanged
    /// when it has a single artist or the result would be invalid.
    pub fn plant_proportional_rows(&mut self, problem: &StreamingProblem) -> StreamingProblem {
        let n = problem.n_artists();
        if n < 2 {
            return problem.clone();
        }
        let target = self.rng.random_range(0..n);
        let source = (target + self.rng.random_range(1..n)) % n;
        let factor = [0u64, 2, 3][self.rng.random_range(0..3)];
        let mut streams = problem.streams().to_vec();
        streams[target] = streams[source].iter().map(|t| t * factor).collect();
        StreamingProblem::new(
            problem.artists().to_vec(),
            problem.users().to_vec(),
            streams,
            problem.fee().clone(),
        )
        .unwrap_or_else(|_| problem.clone())
    }
}

impl Iterator for ProblemGenerator {
    type Item = StreamingProblem;

    fn next(&mut self) -> Option<StreamingProblem> {
        Some(self.next_problem())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::in_domain_pstar;

    #[test]
    fn same_seed_same_stream() {
        let a: Vec<_> = ProblemGenerator::new(7, GeneratorConfig::default())
            .unwrap()
            .take(50)
            .collect();
        let b: Vec<_> = ProblemGenerator::new(7, GeneratorConfig::default())
            .unwrap()
            .take(50)
            .collect();
        assert_eq!(a, b);
        let c: Vec<_> = ProblemGenerator::new(8, GeneratorConfig::default())
            .unwrap()
            .take(50)
            .collect();
        assert_ne!(a, c);
    }

    #[test]
    fn respects_bounds() {
        let config = GeneratorConfig {
            min_artists: 2,
            max_artists: 3,
            min_users: 4,
            max_users: 5,
            max_streams: 7,
            ..GeneratorConfig::default()
        };
        for p in ProblemGenerator::new(1, config).unwrap().take(200) {
            assert!((2..=3).contains(&p.n_artists()));
            assert!((4..=5).contains(&p.n_users()));
            assert!(p.streams().iter().flatten().all(|&t| t <= 7));
        }
    }

    #[test]
    fn pstar_filter() {
        let config = GeneratorConfig::default().pstar();
        for p in ProblemGenerator::new(3, config).unwrap().take(200) {
            assert!(in_domain_pstar(&p));
        }
    }

    #[test]
    fn restart_replays() {
        let mut g = ProblemGenerator::new(11, GeneratorConfig::default()).unwrap();
        let first = g.next_problem();
        g.next_problem();
        assert_eq!(g.restarted().next_problem(), first);
    }

    #[test]
    fn perturbation_touches_one_column() {
        let mut g = ProblemGenerator::new(5, GeneratorConfig::default()).unwrap();
        for _ in 0..100 {
            let p = g.next_problem();
            let j = p.n_users() - 1;
            let q = g.perturb_column(&p, j);
            assert!(p.differing_columns(&q).unwrap().iter().all(|&k| k == j));
        }
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = GeneratorConfig {
            min_users: 0,
            ..GeneratorConfig::default()
        };
        assert!(ProblemGenerator::new(0, bad).is_err());
        let bad = GeneratorConfig {
            zero_probability: 1.0,
            ..GeneratorConfig::default()
        };
        assert!(ProblemGenerator::new(0, bad).is_err());
        let bad = GeneratorConfig {
            pstar: true,
            max_artists: 1,
            ..GeneratorConfig::default()
        };
        assert!(ProblemGenerator::new(0, bad).is_err());
    }
}

//! Streaming problems: artists, users, the stream-count matrix and the
//! per-user subscription fee.
//!
//! A [`StreamingProblem`] is validated once at construction and immutable
//! afterwards. Artists and users keep their input order; every vector or
//! matrix in the crate is indexed by that order.

use std::collections::HashSet;

use num_traits::{One, Zero};

use crate::rational::Rational;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProblemError {
    #[error("user {0:?} has no streams")]
    EmptyUserColumn(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("subscription fee must be positive, got {0}")]
    NonPositiveFee(Rational),
    #[error("stream matrix is all zero")]
    AllZeroMatrix,
    #[error("duplicate artist id {0:?}")]
    DuplicateArtist(String),
    #[error("duplicate user id {0:?}")]
    DuplicateUser(String),
    #[error("no artists")]
    NoArtists,
    #[error("unknown artist {0:?}")]
    UnknownArtist(String),
    #[error("unknown user {0:?}")]
    UnknownUser(String),
    #[error("removing the requested users would leave an invalid problem")]
    WouldBeEmpty,
    #[error("artist lists differ")]
    ArtistMismatch,
    #[error("user {0:?} appears in both problems")]
    OverlappingUsers(String),
    #[error("subscription fees differ")]
    FeeMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StreamingProblem {
    artists: Vec<String>,
    users: Vec<String>,
    /// `streams[i][j]`: plays of artist `i` by user `j`.
    streams: Vec<Vec<u64>>,
    fee: Rational,
}

impl StreamingProblem {
    /// Builds a validated problem. `streams` holds one row per artist.
    pub fn new(
        artists: Vec<String>,
        users: Vec<String>,
        streams: Vec<Vec<u64>>,
        fee: Rational,
    ) -> Result<Self, ProblemError> {
        if artists.is_empty() {
            return Err(ProblemError::NoArtists);
        }
        if streams.len() != artists.len() {
            return Err(ProblemError::DimensionMismatch(format!(
                "{} artists but {} matrix rows",
                artists.len(),
                streams.len()
            )));
        }
        if let Some((i, row)) = streams
            .iter()
            .enumerate()
            .find(|(_, row)| row.len() != users.len())
        {
            return Err(ProblemError::DimensionMismatch(format!(
                "row for artist {:?} has {} entries, expected {}",
                artists[i],
                row.len(),
                users.len()
            )));
        }
        let mut seen = HashSet::new();
        if let Some(a) = artists.iter().find(|a| !seen.insert(a.as_str())) {
            return Err(ProblemError::DuplicateArtist(a.clone()));
        }
        let mut seen = HashSet::new();
        if let Some(u) = users.iter().find(|u| !seen.insert(u.as_str())) {
            return Err(ProblemError::DuplicateUser(u.clone()));
        }
        if fee <= Rational::zero() {
            return Err(ProblemError::NonPositiveFee(fee));
        }
        if streams.iter().flatten().all(|&t| t == 0) {
            return Err(ProblemError::AllZeroMatrix);
        }
        if let Some(j) = (0..users.len()).find(|&j| streams.iter().all(|row| row[j] == 0)) {
            return Err(ProblemError::EmptyUserColumn(users[j].clone()));
        }
        Ok(Self {
            artists,
            users,
            streams,
            fee,
        })
    }

    /// Convenience constructor with numeric ids (`"1".."n"` for artists,
    /// `"a".."z"` then `"u27"`.. for users) and unit fee.
    pub fn from_matrix(streams: Vec<Vec<u64>>) -> Result<Self, ProblemError> {
        let n = streams.len();
        let m = streams.first().map_or(0, Vec::len);
        Self::new(
            default_artist_ids(n),
            default_user_ids(m),
            streams,
            Rational::one(),
        )
    }

    pub fn artists(&self) -> &[String] {
        &self.artists
    }

    pub fn users(&self) -> &[String] {
        &self.users
    }

    pub fn streams(&self) -> &[Vec<u64>] {
        &self.streams
    }

    pub fn fee(&self) -> &Rational {
        &self.fee
    }

    pub fn n_artists(&self) -> usize {
        self.artists.len()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    #[inline]
    pub fn t(&self, artist: usize, user: usize) -> u64 {
        self.streams[artist][user]
    }

    /// Total revenue to share: `|M| · fee`.
    pub fn revenue(&self) -> Rational {
        Rational::from_integer(self.users.len().into()) * &self.fee
    }

    pub fn artist_index(&self, id: &str) -> Result<usize, ProblemError> {
        self.artists
            .iter()
            .position(|a| a == id)
            .ok_or_else(|| ProblemError::UnknownArtist(id.to_string()))
    }

    pub fn user_index(&self, id: &str) -> Result<usize, ProblemError> {
        self.users
            .iter()
            .position(|u| u == id)
            .ok_or_else(|| ProblemError::UnknownUser(id.to_string()))
    }

    /// `T_i`, by position.
    pub fn row_total(&self, artist: usize) -> u64 {
        self.streams[artist].iter().sum()
    }

    /// `T^j`, by position. Always at least one.
    pub fn column_total(&self, user: usize) -> u64 {
        self.streams.iter().map(|row| row[user]).sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.streams.iter().flatten().sum()
    }

    /// Profile of user `j`: the column `t_{.j}`.
    pub fn profile(&self, user: usize) -> Vec<u64> {
        self.streams.iter().map(|row| row[user]).collect()
    }

    /// `L^j` as artist positions, ascending.
    pub fn listened(&self, user: usize) -> Vec<usize> {
        (0..self.n_artists())
            .filter(|&i| self.streams[i][user] > 0)
            .collect()
    }

    /// `F_i` as user positions, ascending.
    pub fn fans_of(&self, artist: usize) -> Vec<usize> {
        (0..self.n_users())
            .filter(|&j| self.streams[artist][j] > 0)
            .collect()
    }

    /// `L^j` as a coalition bitmask over artists. Only meaningful for
    /// at most 64 artists.
    pub fn listened_mask(&self, user: usize) -> u64 {
        self.listened(user)
            .into_iter()
            .filter(|&i| i < 64)
            .fold(0u64, |acc, i| acc | (1 << i))
    }

    pub fn artist_total(&self, artist: &str) -> Result<u64, ProblemError> {
        Ok(self.row_total(self.artist_index(artist)?))
    }

    pub fn user_total(&self, user: &str) -> Result<u64, ProblemError> {
        Ok(self.column_total(self.user_index(user)?))
    }

    pub fn listened_set(&self, user: &str) -> Result<Vec<&str>, ProblemError> {
        let j = self.user_index(user)?;
        Ok(self
            .listened(j)
            .into_iter()
            .map(|i| self.artists[i].as_str())
            .collect())
    }

    pub fn fans(&self, artist: &str) -> Result<Vec<&str>, ProblemError> {
        let i = self.artist_index(artist)?;
        Ok(self
            .fans_of(i)
            .into_iter()
            .map(|j| self.users[j].as_str())
            .collect())
    }

    /// The problem restricted to the given user positions (kept in the
    /// order given).
    pub fn restrict_users(&self, keep: &[usize]) -> Result<Self, ProblemError> {
        if keep.is_empty() {
            return Err(ProblemError::WouldBeEmpty);
        }
        let users = keep.iter().map(|&j| self.users[j].clone()).collect();
        let streams = self
            .streams
            .iter()
            .map(|row| keep.iter().map(|&j| row[j]).collect())
            .collect();
        Self::new(self.artists.clone(), users, streams, self.fee.clone())
            .map_err(|_| ProblemError::WouldBeEmpty)
    }

    /// `(N, M \ {j}, t^{-j})`, by position.
    pub fn without_user(&self, user: usize) -> Result<Self, ProblemError> {
        let keep: Vec<usize> = (0..self.n_users()).filter(|&k| k != user).collect();
        self.restrict_users(&keep)
    }

    pub fn remove_user(&self, user: &str) -> Result<Self, ProblemError> {
        self.without_user(self.user_index(user)?)
    }

    /// Splits the users into `part` and its complement, preserving order.
    pub fn split_users(&self, part: &[usize]) -> Result<(Self, Self), ProblemError> {
        let first: Vec<usize> = (0..self.n_users()).filter(|j| part.contains(j)).collect();
        let second: Vec<usize> = (0..self.n_users()).filter(|j| !part.contains(j)).collect();
        Ok((self.restrict_users(&first)?, self.restrict_users(&second)?))
    }

    /// Same problem with the column of `user` replaced.
    pub fn with_column(&self, user: usize, column: &[u64]) -> Result<Self, ProblemError> {
        if column.len() != self.n_artists() {
            return Err(ProblemError::DimensionMismatch(format!(
                "replacement column has {} entries, expected {}",
                column.len(),
                self.n_artists()
            )));
        }
        let mut streams = self.streams.clone();
        for (row, &value) in streams.iter_mut().zip(column) {
            row[user] = value;
        }
        Self::new(
            self.artists.clone(),
            self.users.clone(),
            streams,
            self.fee.clone(),
        )
    }

    /// Same streams under a different fee.
    pub fn with_fee(&self, fee: Rational) -> Result<Self, ProblemError> {
        Self::new(
            self.artists.clone(),
            self.users.clone(),
            self.streams.clone(),
            fee,
        )
    }

    /// Same streams with users renamed by `rename`.
    pub fn rename_users(&self, rename: impl Fn(&str) -> String) -> Result<Self, ProblemError> {
        Self::new(
            self.artists.clone(),
            self.users.iter().map(|u| rename(u)).collect(),
            self.streams.clone(),
            self.fee.clone(),
        )
    }

    /// Differing user columns between two problems over the same artists
    /// and users.
    pub fn differing_columns(&self, other: &Self) -> Result<Vec<usize>, ProblemError> {
        if self.artists != other.artists {
            return Err(ProblemError::ArtistMismatch);
        }
        if self.users != other.users {
            return Err(ProblemError::DimensionMismatch(
                "user lists differ".to_string(),
            ));
        }
        Ok((0..self.n_users())
            .filter(|&j| self.profile(j) != other.profile(j))
            .collect())
    }
}

/// Column-concatenates two problems over the same artists and fee.
pub fn merge_problems(
    first: &StreamingProblem,
    second: &StreamingProblem,
) -> Result<StreamingProblem, ProblemError> {
    if first.artists != second.artists {
        return Err(ProblemError::ArtistMismatch);
    }
    if first.fee != second.fee {
        return Err(ProblemError::FeeMismatch);
    }
    if let Some(u) = second.users.iter().find(|u| first.users.contains(u)) {
        return Err(ProblemError::OverlappingUsers(u.clone()));
    }
    let users = first.users.iter().chain(&second.users).cloned().collect();
    let streams = first
        .streams
        .iter()
        .zip(&second.streams)
        .map(|(a, b)| a.iter().chain(b).copied().collect())
        .collect();
    StreamingProblem::new(first.artists.clone(), users, streams, first.fee.clone())
}

pub fn default_artist_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

pub fn default_user_ids(m: usize) -> Vec<String> {
    (0..m)
        .map(|j| {
            if j < 26 {
                char::from(b'a' + j as u8).to_string()
            } else {
                format!("u{}", j + 1)
            }
        })
        .collect()
}

/// The two-artist, two-user running example: `t = [[10, 0], [0, 90]]`.
pub fn example_one() -> StreamingProblem {
    StreamingProblem::from_matrix(vec![vec![10, 0], vec![0, 90]]).expect("valid example")
}

/// The running example plus user `c` with 5 streams of artist 1 and 35 of
/// artist 2.
pub fn example_three_users() -> StreamingProblem {
    StreamingProblem::from_matrix(vec![vec![10, 0, 5], vec![0, 90, 35]]).expect("valid example")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::int;

    fn ids(xs: &[&str]) -> Vec<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn accepts_running_example() {
        let p = StreamingProblem::new(
            ids(&["1", "2"]),
            ids(&["a", "b"]),
            vec![vec![10, 0], vec![0, 90]],
            int(1),
        )
        .unwrap();
        assert_eq!(p, example_one());
        assert_eq!(p.revenue(), int(2));
    }

    #[test]
    fn accepts_single_cell() {
        let p = StreamingProblem::from_matrix(vec![vec![5]]).unwrap();
        assert_eq!(p.user_total("a").unwrap(), 5);
    }

    #[test]
    fn rejects_silent_user() {
        let err = StreamingProblem::from_matrix(vec![vec![10, 0], vec![0, 0]]).unwrap_err();
        assert_eq!(err, ProblemError::EmptyUserColumn("b".into()));
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(matches!(
            StreamingProblem::new(ids(&["1"]), ids(&["a", "b"]), vec![vec![1]], int(1)),
            Err(ProblemError::DimensionMismatch(_))
        ));
        assert!(matches!(
            StreamingProblem::new(ids(&["1", "2"]), ids(&["a"]), vec![vec![1]], int(1)),
            Err(ProblemError::DimensionMismatch(_))
        ));
        assert!(matches!(
            StreamingProblem::new(ids(&["1"]), ids(&["a"]), vec![vec![1]], int(0)),
            Err(ProblemError::NonPositiveFee(_))
        ));
        assert_eq!(
            StreamingProblem::new(ids(&["1"]), ids(&["a"]), vec![vec![0]], int(1)),
            Err(ProblemError::AllZeroMatrix)
        );
        assert_eq!(
            StreamingProblem::new(
                ids(&["1", "1"]),
                ids(&["a"]),
                vec![vec![1], vec![1]],
                int(1)
            ),
            Err(ProblemError::DuplicateArtist("1".into()))
        );
        assert_eq!(
            StreamingProblem::new(ids(&["1"]), ids(&["a", "a"]), vec![vec![1, 1]], int(1)),
            Err(ProblemError::DuplicateUser("a".into()))
        );
    }

    #[test]
    fn aggregates_match_running_examples() {
        let p = example_one();
        assert_eq!(p.artist_total("2").unwrap(), 90);
        assert_eq!(p.user_total("a").unwrap(), 10);
        assert_eq!(p.user_total("b").unwrap(), 90);
        assert_eq!(p.listened_set("a").unwrap(), vec!["1"]);
        assert_eq!(p.fans("1").unwrap(), vec!["a"]);

        let q = example_three_users();
        assert_eq!(q.artist_total("2").unwrap(), 125);
        assert_eq!(q.listened_set("c").unwrap(), vec!["1", "2"]);
        assert_eq!(q.fans("2").unwrap(), vec!["b", "c"]);
    }

    #[test]
    fn all_equal_matrix_totals() {
        let p = StreamingProblem::from_matrix(vec![vec![3; 4]; 2]).unwrap();
        assert_eq!(p.artist_total("1").unwrap(), 12);
        assert_eq!(p.listened_set("c").unwrap(), vec!["1", "2"]);
    }

    #[test]
    fn null_artist_has_no_fans() {
        let p = StreamingProblem::from_matrix(vec![vec![1, 2], vec![0, 0]]).unwrap();
        assert!(p.fans("2").unwrap().is_empty());
        assert_eq!(p.artist_total("2").unwrap(), 0);
    }

    #[test]
    fn unknown_ids_are_reported() {
        let p = example_one();
        assert_eq!(
            p.artist_total("9"),
            Err(ProblemError::UnknownArtist("9".into()))
        );
        assert_eq!(
            p.user_total("z"),
            Err(ProblemError::UnknownUser("z".into()))
        );
        assert!(p.listened_set("z").is_err());
        assert!(p.fans("9").is_err());
        assert!(p.remove_user("z").is_err());
    }

    #[test]
    fn removing_users() {
        let p = example_one();
        let without_a = p.remove_user("a").unwrap();
        assert_eq!(without_a.users(), &ids(&["b"]));
        assert_eq!(without_a.streams(), &[vec![0], vec![90]]);
        let without_b = p.remove_user("b").unwrap();
        assert_eq!(without_b.streams(), &[vec![10], vec![0]]);

        let single = StreamingProblem::from_matrix(vec![vec![5]]).unwrap();
        assert_eq!(single.remove_user("a"), Err(ProblemError::WouldBeEmpty));
    }

    #[test]
    fn merge_round_trip_and_errors() {
        let p = example_one();
        let (left, right) = p.split_users(&[0]).unwrap();
        assert_eq!(merge_problems(&left, &right).unwrap(), p);

        let renamed = p.rename_users(|u| format!("{u}2")).unwrap();
        let doubled = merge_problems(&p, &renamed).unwrap();
        assert_eq!(doubled.row_total(0), 20);
        assert_eq!(doubled.row_total(1), 180);

        assert!(matches!(
            merge_problems(&p, &p),
            Err(ProblemError::OverlappingUsers(_))
        ));
        let other_fee = renamed.with_fee(int(2)).unwrap();
        assert_eq!(
            merge_problems(&p, &other_fee),
            Err(ProblemError::FeeMismatch)
        );
        let other_artists = StreamingProblem::new(
            ids(&["x", "y"]),
            ids(&["c"]),
            vec![vec![1], vec![1]],
            int(1),
        )
        .unwrap();
        assert_eq!(
            merge_problems(&p, &other_artists),
            Err(ProblemError::ArtistMismatch)
        );
    }

    #[test]
    fn column_replacement() {
        let p = example_one();
        let q = p.with_column(1, &[0, 2]).unwrap();
        assert_eq!(q.streams(), &[vec![10, 0], vec![0, 2]]);
        assert_eq!(p.differing_columns(&q).unwrap(), vec![1]);
        assert!(p.with_column(1, &[0, 0]).is_err());
    }

    #[test]
    fn default_user_ids_extend_past_alphabet() {
        let ids = default_user_ids(28);
        assert_eq!(ids[0], "a");
        assert_eq!(ids[25], "z");
        assert_eq!(ids[26], "u27");
    }
}

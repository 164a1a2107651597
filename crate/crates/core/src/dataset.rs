//! Vote data: loading, validation, synthesis, and leave-one-out test cases.
//!
//! Scores are quantized to the six levels {0.0, 0.2, 0.4, 0.6, 0.8, 1.0} and
//! stored internally as integer quanta (0..=5) so that means and deviations
//! can be derived from exact integer sums.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct UserId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MovieId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for MovieId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// A vote score, one of the six quantized levels. Stored as quanta in 0..=5;
/// the real value is `quanta / 5`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Score(u8);

impl Score {
    pub const QUANTA_MAX: u8 = 5;

    /// All six admissible scores, worst to best.
    pub fn levels() -> impl Iterator<Item = Score> {
        (0..=Self::QUANTA_MAX).map(Score)
    }

    pub fn from_quanta(q: u8) -> Result<Score> {
        if q > Self::QUANTA_MAX {
            return Err(Error::InvalidInput(format!(
                "raw score {q} out of range 0..=5"
            )));
        }
        Ok(Score(q))
    }

    /// Accepts a decimal score and maps it onto the quantized set; anything
    /// not within 1e-9 of a level is rejected.
    pub fn from_normalized(v: f64) -> Result<Score> {
        for q in 0..=Self::QUANTA_MAX {
            if (v - q as f64 / 5.0).abs() < 1e-9 {
                return Ok(Score(q));
            }
        }
        Err(Error::InvalidInput(format!(
            "score {v} is not one of the six quantized values 0.0, 0.2, .., 1.0"
        )))
    }

    pub fn quanta(self) -> u8 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 5.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vote {
    pub movie_id: MovieId,
    pub score: Score,
}

/// A user's sparse vote vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UserProfile {
    user_id: UserId,
    votes: BTreeMap<MovieId, Score>,
}

impl UserProfile {
    pub fn new(user_id: UserId) -> UserProfile {
        UserProfile {
            user_id,
            votes: BTreeMap::new(),
        }
    }

    pub fn with_votes(
        user_id: UserId,
        votes: impl IntoIterator<Item = (MovieId, Score)>,
    ) -> Result<UserProfile> {
        let mut profile = UserProfile::new(user_id);
        for (movie, score) in votes {
            profile.add_vote(movie, score)?;
        }
        Ok(profile)
    }

    /// At most one vote per movie; duplicates are a hard error.
    pub fn add_vote(&mut self, movie_id: MovieId, score: Score) -> Result<()> {
        if self.votes.insert(movie_id, score).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate vote for user {} on movie {}",
                self.user_id, movie_id
            )));
        }
        Ok(())
    }

    pub fn user_id(&self) -> UserId {
        self.user_id
    }

    pub fn votes(&self) -> &BTreeMap<MovieId, Score> {
        &self.votes
    }

    pub fn score_for(&self, movie_id: MovieId) -> Option<Score> {
        self.votes.get(&movie_id).copied()
    }

    pub fn len(&self) -> usize {
        self.votes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.votes.is_empty()
    }

    /// Sum of integer quanta over all votes; exact.
    pub fn quanta_sum(&self) -> u64 {
        self.votes.values().map(|s| s.quanta() as u64).sum()
    }

    /// Arithmetic mean over ALL of this user's votes, never restricted to an
    /// overlap with another profile.
    pub fn mean_vote(&self) -> Result<f64> {
        if self.votes.is_empty() {
            return Err(Error::InvalidInput(format!(
                "user {} has no votes; mean undefined",
                self.user_id
            )));
        }
        Ok(self.quanta_sum() as f64 / (5 * self.len()) as f64)
    }
}

/// An immutable collection of user profiles. Safe to share read-only across
/// concurrent workers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    users: Vec<UserProfile>,
    movie_ids: BTreeSet<MovieId>,
}

impl Dataset {
    pub fn from_users(mut users: Vec<UserProfile>) -> Result<Dataset> {
        users.sort_by_key(|u| u.user_id());
        for pair in users.windows(2) {
            if pair[0].user_id() == pair[1].user_id() {
                return Err(Error::InvalidInput(format!(
                    "duplicate user id {}",
                    pair[0].user_id()
                )));
            }
        }
        let movie_ids = users
            .iter()
            .flat_map(|u| u.votes().keys().copied())
            .collect();
        Ok(Dataset { users, movie_ids })
    }

    pub fn users(&self) -> &[UserProfile] {
        &self.users
    }

    pub fn user(&self, id: UserId) -> Option<&UserProfile> {
        self.users
            .binary_search_by_key(&id, |u| u.user_id())
            .ok()
            .map(|i| &self.users[i])
    }

    pub fn movie_ids(&self) -> &BTreeSet<MovieId> {
        &self.movie_ids
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_votes(&self) -> usize {
        self.users.iter().map(|u| u.len()).sum()
    }
}

/// Wire encoding of a votes file: raw integer scores 0..=5, or normalized
/// decimals from the quantized set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VoteFormat {
    Raw0To5,
    Normalized,
}

impl VoteFormat {
    pub fn parse(s: &str) -> Result<VoteFormat> {
        match s {
            "raw0to5" => Ok(VoteFormat::Raw0To5),
            "normalized" => Ok(VoteFormat::Normalized),
            other => Err(Error::InvalidInput(format!(
                "unknown vote format '{other}' (expected raw0to5 or normalized)"
            ))),
        }
    }
}

/// Loads a votes file: one `user_id,movie_id,score` triple per line, `#`
/// comment lines ignored. Every vote is validated; duplicate (user, movie)
/// pairs are a hard error rather than silently merged.
pub fn load_votes<R: Read>(source: R, format: VoteFormat) -> Result<Dataset> {
    let reader = BufReader::new(source);
    let mut users: BTreeMap<UserId, UserProfile> = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split(',');
        let (user, movie, score) = match (fields.next(), fields.next(), fields.next()) {
            (Some(u), Some(m), Some(s)) if fields.next().is_none() => (u, m, s),
            _ => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 'user_id,movie_id,score', got '{trimmed}'"),
                })
            }
        };
        let user_id = parse_id(user, "user id", line_no)?;
        let movie_id = parse_id(movie, "movie id", line_no)?;
        let score = parse_score(score, format, line_no)?;
        let profile = users
            .entry(UserId(user_id))
            .or_insert_with(|| UserProfile::new(UserId(user_id)));
        profile
            .add_vote(MovieId(movie_id), score)
            .map_err(|e| Error::Parse {
                line: line_no,
                msg: e.to_string(),
            })?;
    }
    Dataset::from_users(users.into_values().collect())
}

fn parse_id(field: &str, what: &str, line: usize) -> Result<u32> {
    let value: u32 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        msg: format!("invalid {what} '{field}'"),
    })?;
    if value == 0 {
        return Err(Error::Parse {
            line,
            msg: format!("{what} must be positive"),
        });
    }
    Ok(value)
}

fn parse_score(field: &str, format: VoteFormat, line: usize) -> Result<Score> {
    let field = field.trim();
    let score = match format {
        VoteFormat::Raw0To5 => field
            .parse::<u8>()
            .map_err(|_| Error::InvalidInput(format!("invalid raw score '{field}'")))
            .and_then(Score::from_quanta),
        VoteFormat::Normalized => field
            .parse::<f64>()
            .map_err(|_| Error::InvalidInput(format!("invalid score '{field}'")))
            .and_then(Score::from_normalized),
    };
    score.map_err(|e| Error::Parse {
        line,
        msg: e.to_string(),
    })
}

/// Writes a dataset in the votes-file format; `load_votes` round-trips it.
pub fn write_votes<W: Write>(dataset: &Dataset, mut out: W, format: VoteFormat) -> Result<()> {
    for user in dataset.users() {
        for (movie, score) in user.votes() {
            match format {
                VoteFormat::Raw0To5 => {
                    writeln!(out, "{},{},{}", user.user_id(), movie, score.quanta())?
                }
                VoteFormat::Normalized => {
                    writeln!(out, "{},{},{}", user.user_id(), movie, score.value())?
                }
            }
        }
    }
    Ok(())
}

/// One leave-one-out trial: the training profile with one vote reserved.
#[derive(Debug, Clone, PartialEq)]
pub struct TestCase {
    pub training_user: UserProfile,
    pub reserved: Vote,
    pub original_user_id: UserId,
}

/// Uniform sample without replacement among users with at least `min_votes`
/// votes. Deterministic given the generator state.
pub fn sample_test_users<R: Rng>(
    dataset: &Dataset,
    count: usize,
    min_votes: usize,
    rng: &mut R,
) -> Result<Vec<UserProfile>> {
    if count == 0 {
        return Err(Error::InvalidInput("sample count must be >= 1".into()));
    }
    let mut eligible: Vec<&UserProfile> = dataset
        .users()
        .iter()
        .filter(|u| u.len() >= min_votes)
        .collect();
    if eligible.len() < count {
        return Err(Error::NotEnoughUsers {
            requested: count,
            eligible: eligible.len(),
            min_votes,
        });
    }
    eligible.shuffle(rng);
    Ok(eligible.into_iter().take(count).cloned().collect())
}

/// Reserves one uniformly chosen vote, hiding it from the predictor.
pub fn reserve_vote<R: Rng>(profile: &UserProfile, rng: &mut R) -> Result<TestCase> {
    if profile.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "user {} has {} vote(s); need at least 2 to reserve one",
            profile.user_id(),
            profile.len()
        )));
    }
    let pick = rng.random_range(0..profile.len());
    let (&movie_id, &score) = profile.votes().iter().nth(pick).expect("index in range");
    let mut training = profile.clone();
    training.votes.remove(&movie_id);
    Ok(TestCase {
        training_user: training,
        reserved: Vote { movie_id, score },
        original_user_id: profile.user_id(),
    })
}

/// `generate_synthetic` with a fresh generator seeded from `seed`.
pub fn generate_synthetic_seeded(
    users: usize,
    movies: usize,
    clusters: usize,
    sparsity: f64,
    noise: f64,
    seed: u64,
) -> Result<Dataset> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    generate_synthetic(users, movies, clusters, sparsity, noise, &mut rng)
}

/// Generates a clustered synthetic dataset. Each cluster draws a preference
/// score per movie; each user votes on `ceil(sparsity * movies)` movies and
/// echoes its cluster's preference with probability `1 - noise`.
pub fn generate_synthetic<R: Rng>(
    users: usize,
    movies: usize,
    clusters: usize,
    sparsity: f64,
    noise: f64,
    rng: &mut R,
) -> Result<Dataset> {
    generate_synthetic_labeled(users, movies, clusters, sparsity, noise, rng)
        .map(|(dataset, _)| dataset)
}

/// `generate_synthetic` plus the cluster assignment per user (indexed like
/// `Dataset::users`). The labels let validation code check the generated
/// correlation structure; the engine itself never sees them.
pub fn generate_synthetic_labeled<R: Rng>(
    users: usize,
    movies: usize,
    clusters: usize,
    sparsity: f64,
    noise: f64,
    rng: &mut R,
) -> Result<(Dataset, Vec<usize>)> {
    if users == 0 || movies == 0 {
        return Err(Error::InvalidInput(
            "synthetic dataset needs at least one user and one movie".into(),
        ));
    }
    if clusters == 0 {
        return Err(Error::InvalidInput("clusters must be >= 1".into()));
    }
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "sparsity {sparsity} out of range (0, 1]"
        )));
    }
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::InvalidInput(format!(
            "noise {noise} out of range [0, 1]"
        )));
    }

    let prefs: Vec<Vec<Score>> = (0..clusters)
        .map(|_| {
            (0..movies)
                .map(|_| Score(rng.random_range(0..=Score::QUANTA_MAX)))
                .collect()
        })
        .collect();

    let votes_per_user = ((sparsity * movies as f64).ceil() as usize).clamp(1, movies);
    let mut profiles = Vec::with_capacity(users);
    let mut labels = Vec::with_capacity(users);
    let mut movie_pool: Vec<usize> = (0..movies).collect();
    for uid in 1..=users {
        let cluster = rng.random_range(0..clusters);
        labels.push(cluster);
        movie_pool.shuffle(rng);
        let mut profile = UserProfile::new(UserId(uid as u32));
        for &m in movie_pool.iter().take(votes_per_user) {
            let score = if noise > 0.0 && rng.random_bool(noise) {
                Score(rng.random_range(0..=Score::QUANTA_MAX))
            } else {
                prefs[cluster][m]
            };
            profile.add_vote(MovieId(m as u32 + 1), score)?;
        }
        profiles.push(profile);
    }
    Ok((Dataset::from_users(profiles)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn raw_score_maps_by_fifths() {
        let d = load_votes("7,42,4".as_bytes(), VoteFormat::Raw0To5).unwrap();
        let user = d.user(UserId(7)).unwrap();
        assert_eq!(user.score_for(MovieId(42)).unwrap().value(), 0.8);
    }

    #[test]
    fn normalized_score_is_identity() {
        let d = load_votes("7,42,0.8".as_bytes(), VoteFormat::Normalized).unwrap();
        let user = d.user(UserId(7)).unwrap();
        assert_eq!(user.score_for(MovieId(42)).unwrap().quanta(), 4);
    }

    #[test]
    fn raw_score_out_of_range_is_rejected() {
        let err = load_votes("7,42,7".as_bytes(), VoteFormat::Raw0To5).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
    }

    #[test]
    fn normalized_score_off_grid_is_rejected() {
        assert!(load_votes("1,1,0.35".as_bytes(), VoteFormat::Normalized).is_err());
    }

    #[test]
    fn duplicate_vote_is_a_hard_error() {
        let text = "1,10,0.2\n1,10,0.2\n";
        let err = load_votes(text.as_bytes(), VoteFormat::Normalized).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = "1,10,0.2\n# comment\nnot-a-vote\n";
        let err = load_votes(text.as_bytes(), VoteFormat::Normalized).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let text = "# header\n\n1,10,0.2\n";
        let d = load_votes(text.as_bytes(), VoteFormat::Normalized).unwrap();
        assert_eq!(d.num_votes(), 1);
    }

    #[test]
    fn mean_vote_examples() {
        let p = UserProfile::with_votes(
            UserId(1),
            [(MovieId(1), Score(1)), (MovieId(2), Score(2)), (MovieId(3), Score(3))],
        )
        .unwrap();
        assert_eq!(p.mean_vote().unwrap(), 0.4);

        let single = UserProfile::with_votes(UserId(2), [(MovieId(1), Score(5))]).unwrap();
        assert_eq!(single.mean_vote().unwrap(), 1.0);

        let p = UserProfile::with_votes(
            UserId(3),
            [
                (MovieId(1), Score(0)),
                (MovieId(2), Score(5)),
                (MovieId(3), Score(5)),
                (MovieId(4), Score(5)),
            ],
        )
        .unwrap();
        assert_eq!(p.mean_vote().unwrap(), 0.75);

        assert!(UserProfile::new(UserId(4)).mean_vote().is_err());
    }

    fn small_dataset(n: usize) -> Dataset {
        let users = (1..=n)
            .map(|i| {
                UserProfile::with_votes(
                    UserId(i as u32),
                    [(MovieId(1), Score(1)), (MovieId(2), Score(3))],
                )
                .unwrap()
            })
            .collect();
        Dataset::from_users(users).unwrap()
    }

    #[test]
    fn sampling_is_exhaustive_and_deterministic() {
        let d = small_dataset(10);
        let all = sample_test_users(&d, 10, 2, &mut rng(1)).unwrap();
        assert_eq!(all.len(), 10);
        let mut ids: Vec<u32> = all.iter().map(|u| u.user_id().0).collect();
        ids.sort_unstable();
        assert_eq!(ids, (1..=10).collect::<Vec<_>>());

        let a = sample_test_users(&d, 3, 2, &mut rng(7)).unwrap();
        let b = sample_test_users(&d, 3, 2, &mut rng(7)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sampling_shortfall_names_the_numbers() {
        let d = small_dataset(4);
        let err = sample_test_users(&d, 5, 2, &mut rng(1)).unwrap_err();
        match err {
            Error::NotEnoughUsers {
                requested,
                eligible,
                ..
            } => {
                assert_eq!((requested, eligible), (5, 4));
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn reserve_vote_partitions_the_profile() {
        let p = UserProfile::with_votes(
            UserId(9),
            [(MovieId(1), Score(2)), (MovieId(2), Score(4))],
        )
        .unwrap();
        let tc = reserve_vote(&p, &mut rng(3)).unwrap();
        assert_eq!(tc.training_user.len(), 1);
        assert!(tc.training_user.score_for(tc.reserved.movie_id).is_none());
        // reunion restores the original profile
        let mut rebuilt = tc.training_user.clone();
        rebuilt
            .add_vote(tc.reserved.movie_id, tc.reserved.score)
            .unwrap();
        assert_eq!(rebuilt, p);

        let again = reserve_vote(&p, &mut rng(3)).unwrap();
        assert_eq!(again.reserved.movie_id, tc.reserved.movie_id);
    }

    #[test]
    fn reserve_vote_needs_two_votes() {
        let p = UserProfile::with_votes(UserId(9), [(MovieId(1), Score(2))]).unwrap();
        assert!(reserve_vote(&p, &mut rng(0)).is_err());
    }

    #[test]
    fn synthetic_degenerate_generator_yields_identical_profiles() {
        let d = generate_synthetic(5, 8, 1, 1.0, 0.0, &mut rng(11)).unwrap();
        let first: Vec<_> = d.users()[0].votes().values().collect();
        for user in d.users() {
            assert_eq!(user.len(), 8);
            assert_eq!(user.votes().values().collect::<Vec<_>>(), first);
        }
    }

    #[test]
    fn synthetic_is_deterministic_per_seed() {
        let a = generate_synthetic(30, 20, 3, 0.4, 0.2, &mut rng(5)).unwrap();
        let b = generate_synthetic(30, 20, 3, 0.4, 0.2, &mut rng(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_rejects_bad_parameters() {
        assert!(generate_synthetic(0, 5, 1, 0.5, 0.0, &mut rng(0)).is_err());
        assert!(generate_synthetic(5, 0, 1, 0.5, 0.0, &mut rng(0)).is_err());
        assert!(generate_synthetic(5, 5, 0, 0.5, 0.0, &mut rng(0)).is_err());
        assert!(generate_synthetic(5, 5, 1, 0.0, 0.0, &mut rng(0)).is_err());
        assert!(generate_synthetic(5, 5, 1, 0.5, 1.5, &mut rng(0)).is_err());
    }

    #[test]
    fn votes_round_trip_both_formats() {
        let d = generate_synthetic(12, 9, 2, 0.6, 0.3, &mut rng(21)).unwrap();
        for format in [VoteFormat::Raw0To5, VoteFormat::Normalized] {
            let mut buf = Vec::new();
            write_votes(&d, &mut buf, format).unwrap();
            let back = load_votes(buf.as_slice(), format).unwrap();
            assert_eq!(back, d);
        }
    }
}

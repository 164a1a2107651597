//! Vote prediction and ranked recommendation from a neighbourhood.
//!
//! A prediction is the test user's mean plus the weighted average of the
//! neighbours' deviations from their own means:
//!
//! ```text
//! p_i = u_mean + sum_v w_uv * (v_i - v_mean) / sum_v w_uv
//! ```
//!
//! Neighbours who did not vote on the film are skipped unless a default vote
//! is configured. The denominator is the literal signed weight sum; an
//! absolute-weight denominator is available behind an option.

use std::collections::BTreeSet;

use crate::dataset::{MovieId, Score};
use crate::error::Result;
use crate::neighborhood::Neighborhood;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PredictionOptions {
    /// Stand-in vote for neighbours who have not seen the film; absent means
    /// such neighbours are ignored. The neighbour's own mean stays its true
    /// mean either way.
    pub default_vote: Option<Score>,
    /// Clamp predictions into the vote range [0, 1].
    pub clamp_output: bool,
    /// Weight sums smaller than this in magnitude trigger the mean fallback.
    pub weight_sum_epsilon: f64,
    /// Divide by sum |w| instead of the signed sum w.
    pub abs_weight_denominator: bool,
}

impl Default for PredictionOptions {
    fn default() -> Self {
        PredictionOptions {
            default_vote: None,
            clamp_output: true,
            weight_sum_epsilon: 1e-9,
            abs_weight_denominator: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub value: f64,
    /// True when the prediction fell back to the test user's mean because no
    /// neighbour contributed (or the weight sum vanished).
    pub fallback: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recommendation {
    pub movie_id: MovieId,
    pub predicted_score: f64,
    /// 1-based rank by descending score, ties broken by ascending movie id.
    pub rank: usize,
}

/// Predicts the test user's vote on `movie` from the neighbourhood.
pub fn predict(nh: &Neighborhood, movie: MovieId, opts: &PredictionOptions) -> Result<Prediction> {
    let user_mean = nh.test_user.mean_vote()?;
    let mut weighted_dev = 0.0;
    let mut weight_sum = 0.0;
    let mut contributors = 0usize;
    for entry in &nh.entries {
        let vote = match entry.profile.score_for(movie) {
            Some(score) => score.value(),
            None => match opts.default_vote {
                Some(default) => default.value(),
                None => continue,
            },
        };
        let neighbor_mean = entry.profile.mean_vote()?;
        weighted_dev += entry.weight * (vote - neighbor_mean);
        weight_sum += if opts.abs_weight_denominator {
            entry.weight.abs()
        } else {
            entry.weight
        };
        contributors += 1;
    }
    if contributors == 0 || weight_sum.abs() < opts.weight_sum_epsilon {
        return Ok(Prediction {
            value: user_mean,
            fallback: true,
        });
    }
    let mut value = user_mean + weighted_dev / weight_sum;
    if opts.clamp_output {
        value = value.clamp(0.0, 1.0);
    }
    Ok(Prediction {
        value,
        fallback: false,
    })
}

/// Scores every film any neighbour has rated and returns the ranked list.
pub fn recommend(nh: &Neighborhood, opts: &PredictionOptions) -> Result<Vec<Recommendation>> {
    let candidates: BTreeSet<MovieId> = nh.covered_movies();
    let mut scored = Vec::with_capacity(candidates.len());
    for movie in candidates {
        let prediction = predict(nh, movie, opts)?;
        scored.push((movie, prediction.value));
    }
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("predictions are finite")
            .then(a.0.cmp(&b.0))
    });
    Ok(scored
        .into_iter()
        .enumerate()
        .map(|(i, (movie_id, predicted_score))| Recommendation {
            movie_id,
            predicted_score,
            rank: i + 1,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{UserId, UserProfile};
    use crate::neighborhood::{Method, NeighborEntry};
    use proptest::prelude::*;

    fn profile(id: u32, votes: &[(u32, u8)]) -> UserProfile {
        UserProfile::with_votes(
            UserId(id),
            votes
                .iter()
                .map(|&(m, q)| (MovieId(m), Score::from_quanta(q).unwrap())),
        )
        .unwrap()
    }

    fn neighborhood(test_user: UserProfile, entries: Vec<NeighborEntry>) -> Neighborhood {
        Neighborhood {
            test_user,
            entries,
            method: Method::Sp,
        }
    }

    fn entry(profile: UserProfile, weight: f64) -> NeighborEntry {
        NeighborEntry {
            profile,
            r: weight.signum() * weight.abs().min(1.0),
            concentration: None,
            weight,
        }
    }

    #[test]
    fn single_neighbor_weight_cancels() {
        // neighbour votes 0.8 on the film, its mean is 0.4; user mean 0.5.
        // p = 0.5 + (0.8 - 0.4) = 0.9 regardless of the weight.
        let test_user = profile(1, &[(1, 2), (2, 3)]); // mean 0.5
        let neighbor = profile(2, &[(3, 4), (4, 0)]); // mean 0.4, votes 0.8 on movie 3
        for weight in [0.1, 1.0, 25.0] {
            let nh = neighborhood(test_user.clone(), vec![entry(neighbor.clone(), weight)]);
            let p = predict(&nh, MovieId(3), &PredictionOptions::default()).unwrap();
            assert!(!p.fallback);
            assert!((p.value - 0.9).abs() < 1e-12, "weight {weight} -> {}", p.value);
        }
    }

    #[test]
    fn no_votes_and_no_default_falls_back_to_mean() {
        let test_user = profile(1, &[(1, 2), (2, 3)]);
        let neighbor = profile(2, &[(3, 4)]);
        let nh = neighborhood(test_user, vec![entry(neighbor, 1.0)]);
        let p = predict(&nh, MovieId(9), &PredictionOptions::default()).unwrap();
        assert!(p.fallback);
        assert_eq!(p.value, 0.5);
    }

    #[test]
    fn worked_two_neighbor_example() {
        // weights 25 and 50, deviations +0.4 and -0.2, user mean 0.5:
        // p = 0.5 + (25*0.4 - 50*0.2)/75 = 0.5 (independent arithmetic).
        let expected = 0.5 + (25.0 * 0.4 - 50.0 * 0.2) / 75.0;
        assert_eq!(expected, 0.5);

        let test_user = profile(1, &[(1, 2), (2, 3)]); // mean 0.5
        // neighbour a: votes 1.0 on film 5, mean 0.6 -> deviation +0.4
        let a = profile(2, &[(5, 5), (6, 1)]); // mean (5+1)/10 = 0.6
        // neighbour b: votes 0.2 on film 5, mean 0.4 -> deviation -0.2
        let b = profile(3, &[(5, 1), (6, 3)]); // mean (1+3)/10 = 0.4
        let nh = neighborhood(test_user, vec![entry(a, 25.0), entry(b, 50.0)]);
        let p = predict(&nh, MovieId(5), &PredictionOptions::default()).unwrap();
        assert!((p.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn default_vote_substitutes_but_keeps_true_mean() {
        let test_user = profile(1, &[(1, 2), (2, 3)]); // mean 0.5
        let neighbor = profile(2, &[(3, 4), (4, 0)]); // mean 0.4; no vote on 9
        let opts = PredictionOptions {
            default_vote: Some(Score::from_normalized(0.4).unwrap()),
            ..Default::default()
        };
        let nh = neighborhood(test_user, vec![entry(neighbor, 2.0)]);
        let p = predict(&nh, MovieId(9), &opts).unwrap();
        assert!(!p.fallback);
        // v_i = 0.4 (default), v_mean = 0.4 -> p = 0.5
        assert!((p.value - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vanishing_weight_sum_falls_back() {
        let test_user = profile(1, &[(1, 2), (2, 3)]);
        let a = profile(2, &[(5, 5), (6, 1)]);
        let b = profile(3, &[(5, 1), (6, 3)]);
        let nh = neighborhood(test_user, vec![entry(a, 1.0), entry(b, -1.0)]);
        let p = predict(&nh, MovieId(5), &PredictionOptions::default()).unwrap();
        assert!(p.fallback);
        assert_eq!(p.value, 0.5);
    }

    #[test]
    fn empty_test_profile_is_an_error() {
        let nh = neighborhood(UserProfile::new(UserId(1)), vec![]);
        assert!(predict(&nh, MovieId(1), &PredictionOptions::default()).is_err());
    }

    #[test]
    fn recommend_covers_exactly_the_union() {
        let test_user = profile(1, &[(1, 2), (2, 3)]);
        let a = profile(2, &[(1, 5), (3, 1)]);
        let b = profile(3, &[(3, 1), (7, 4)]);
        let nh = neighborhood(test_user, vec![entry(a, 1.0), entry(b, 0.5)]);
        let recs = recommend(&nh, &PredictionOptions::default()).unwrap();
        let movies: Vec<u32> = recs.iter().map(|r| r.movie_id.0).collect();
        let mut sorted = movies.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, vec![1, 3, 7]);
        assert_eq!(recs.len(), 3);
        let ranks: Vec<usize> = recs.iter().map(|r| r.rank).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
    }

    #[test]
    fn recommend_empty_neighborhood_is_empty() {
        let test_user = profile(1, &[(1, 2), (2, 3)]);
        let nh = neighborhood(test_user, vec![]);
        assert!(recommend(&nh, &PredictionOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn equal_scores_rank_lower_movie_first() {
        let test_user = profile(1, &[(1, 2), (2, 3)]);
        // one neighbour voting identically on two films produces equal
        // predictions for both
        let a = profile(2, &[(8, 4), (3, 4)]);
        let nh = neighborhood(test_user, vec![entry(a, 1.0)]);
        let recs = recommend(&nh, &PredictionOptions::default()).unwrap();
        assert_eq!(recs[0].movie_id, MovieId(3));
        assert_eq!(recs[1].movie_id, MovieId(8));
        assert_eq!(recs[0].predicted_score, recs[1].predicted_score);
    }

    proptest! {
        #[test]
        fn weight_scaling_leaves_predictions_unchanged(scale in 0.001f64..1000.0) {
            let test_user = profile(1, &[(1, 2), (2, 3)]);
            let a = profile(2, &[(5, 5), (6, 1)]);
            let b = profile(3, &[(5, 1), (6, 3), (7, 2)]);
            let base = neighborhood(
                test_user.clone(),
                vec![entry(a.clone(), 2.0), entry(b.clone(), 0.7)],
            );
            let scaled = neighborhood(
                test_user,
                vec![entry(a, 2.0 * scale), entry(b, 0.7 * scale)],
            );
            let opts = PredictionOptions::default();
            for movie in [5u32, 6, 7] {
                let p1 = predict(&base, MovieId(movie), &opts).unwrap();
                let p2 = predict(&scaled, MovieId(movie), &opts).unwrap();
                prop_assert!((p1.value - p2.value).abs() < 1e-9);
                prop_assert_eq!(p1.fallback, p2.fallback);
            }
        }

        #[test]
        fn clamped_predictions_stay_in_vote_range(
            w1 in -3.0f64..3.0,
            w2 in -3.0f64..3.0,
        ) {
            let test_user = profile(1, &[(1, 0), (2, 5)]);
            let a = profile(2, &[(5, 5), (6, 0)]);
            let b = profile(3, &[(5, 0), (6, 5)]);
            let nh = neighborhood(test_user, vec![entry(a, w1), entry(b, w2)]);
            let p = predict(&nh, MovieId(5), &PredictionOptions::default()).unwrap();
            prop_assert!((0.0..=1.0).contains(&p.value));
        }
    }
}

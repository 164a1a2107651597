//! Neighbourhood construction: Simple Pearson top-k, immune-network
//! selection, and fixed-membership injection for swap experiments, plus the
//! community characteristics used to compare them.

use std::collections::BTreeSet;
use std::fmt;

use crate::ais::{AisParams, AisState};
use crate::dataset::{MovieId, TestCase, UserProfile};
use crate::error::{Error, Result};
use crate::similarity::{pearson_amended, SimilarityParams};

/// How a neighbourhood was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Sp,
    Ais,
    FixedSpWeighted,
    FixedAisWeighted,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Method::Sp => "SP",
            Method::Ais => "AIS",
            Method::FixedSpWeighted => "fixed-SP-weighted",
            Method::FixedAisWeighted => "fixed-AIS-weighted",
        };
        f.write_str(s)
    }
}

/// Weighting scheme applied to a fixed member set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weighting {
    /// w = r (signed correlation to the test user).
    Sp,
    /// w = r * concentration after a differentiation run.
    Ais,
}

impl fmt::Display for Weighting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Weighting::Sp => "SP",
            Weighting::Ais => "AIS",
        })
    }
}

#[derive(Debug, Clone)]
pub struct NeighborEntry {
    pub profile: UserProfile,
    /// Signed correlation to the test user.
    pub r: f64,
    /// Final antibody concentration; absent for plain SP entries.
    pub concentration: Option<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct Neighborhood {
    pub test_user: UserProfile,
    pub entries: Vec<NeighborEntry>,
    pub method: Method,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn member_ids(&self) -> BTreeSet<crate::dataset::UserId> {
        self.entries
            .iter()
            .map(|e| e.profile.user_id())
            .collect()
    }

    /// Union of all movies voted on by any neighbour.
    pub fn covered_movies(&self) -> BTreeSet<MovieId> {
        self.entries
            .iter()
            .flat_map(|e| e.profile.votes().keys().copied())
            .collect()
    }
}

/// Community characteristics of a neighbourhood relative to its test case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Characteristics {
    pub size: usize,
    /// Test-user votes that the neighbours' union also covers.
    pub overlap_count: usize,
    pub mean_abs_corr_to_test: f64,
    pub mean_inter_neighbor_abs_corr: f64,
}

/// Simple Pearson selection: scan the whole stream, keep the k strongest
/// |r| among reviewers with any correlation at all, ties broken by lower
/// user id. When `target_movie` is set, reviewers who did not vote on that
/// film are not admitted.
pub fn select_sp<'a>(
    reviewers: impl IntoIterator<Item = &'a UserProfile>,
    test_user: &UserProfile,
    k: usize,
    target_movie: Option<MovieId>,
    sim: &SimilarityParams,
) -> Result<Neighborhood> {
    let mut scored: Vec<(f64, &UserProfile)> = Vec::new();
    for reviewer in reviewers {
        if reviewer.user_id() == test_user.user_id() || reviewer.is_empty() {
            continue;
        }
        if let Some(movie) = target_movie {
            if reviewer.score_for(movie).is_none() {
                continue;
            }
        }
        let r = pearson_amended(reviewer, test_user, sim)?;
        if r != 0.0 {
            scored.push((r, reviewer));
        }
    }
    scored.sort_by(|a, b| {
        b.0.abs()
            .partial_cmp(&a.0.abs())
            .expect("correlations are finite")
            .then(a.1.user_id().cmp(&b.1.user_id()))
    });
    scored.truncate(k);
    let entries = scored
        .into_iter()
        .map(|(r, profile)| NeighborEntry {
            profile: profile.clone(),
            r,
            concentration: None,
            weight: r,
        })
        .collect();
    Ok(Neighborhood {
        test_user: test_user.clone(),
        entries,
        method: Method::Sp,
    })
}

/// Immune-network selection: feed the stream through the network, then reset
/// and differentiate so concentrations can serve as weights.
pub fn select_ais<'a>(
    reviewers: impl IntoIterator<Item = &'a UserProfile>,
    test_user: &UserProfile,
    params: &AisParams,
    sim: &SimilarityParams,
) -> Result<Neighborhood> {
    let mut state = AisState::new(test_user.clone(), *params, *sim)?;
    state.run_selection(reviewers)?;
    if !state.is_empty() {
        state.reset_and_differentiate()?;
    }
    from_ais_state(&state)
}

/// Builds the neighbourhood of a finished network: every surviving antibody
/// becomes an entry with its signed correlation recomputed and weight
/// r * concentration.
pub fn from_ais_state(state: &AisState) -> Result<Neighborhood> {
    let mut entries = Vec::with_capacity(state.len());
    for ab in state.antibodies() {
        let r = pearson_amended(ab.profile(), state.antigen(), state.sim_params())?;
        entries.push(NeighborEntry {
            profile: ab.profile().clone(),
            r,
            concentration: Some(ab.concentration()),
            weight: r * ab.concentration(),
        });
    }
    Ok(Neighborhood {
        test_user: state.antigen().clone(),
        entries,
        method: Method::Ais,
    })
}

/// Takes a fixed member set as given (no admission, no removal) and weights
/// it either by plain correlation or by running only the differentiation
/// pass of the network over it.
pub fn inject_fixed(
    members: &[UserProfile],
    test_user: &UserProfile,
    weighting: Weighting,
    params: &AisParams,
    sim: &SimilarityParams,
) -> Result<Neighborhood> {
    if members.is_empty() {
        return Err(Error::InvalidInput(
            "fixed neighbourhood must not be empty".into(),
        ));
    }
    let mut seen = BTreeSet::new();
    for member in members {
        if member.user_id() == test_user.user_id() {
            return Err(Error::InvalidInput(format!(
                "fixed neighbourhood contains the test user {}",
                test_user.user_id()
            )));
        }
        if !seen.insert(member.user_id()) {
            return Err(Error::InvalidInput(format!(
                "fixed neighbourhood lists user {} twice",
                member.user_id()
            )));
        }
    }

    match weighting {
        Weighting::Sp => {
            let entries = members
                .iter()
                .map(|m| {
                    pearson_amended(m, test_user, sim).map(|r| NeighborEntry {
                        profile: m.clone(),
                        r,
                        concentration: None,
                        weight: r,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Neighborhood {
                test_user: test_user.clone(),
                entries,
                method: Method::FixedSpWeighted,
            })
        }
        Weighting::Ais => {
            // membership is fixed, so capacity must fit all members
            let params = AisParams {
                pool_size: params.pool_size.max(members.len()),
                ..*params
            };
            let mut state = AisState::new(test_user.clone(), params, *sim)?;
            for member in members {
                let accepted = state.add_antibody(member)?;
                debug_assert!(accepted, "membership was validated above");
            }
            state.reset_and_differentiate()?;
            let mut nh = from_ais_state(&state)?;
            nh.method = Method::FixedAisWeighted;
            Ok(nh)
        }
    }
}

/// Size, overlap with the test user's known votes, mean |r| to the test
/// user, and mean pairwise |r| among the neighbours.
pub fn characteristics(
    nh: &Neighborhood,
    test_case: &TestCase,
    sim: &SimilarityParams,
) -> Result<Characteristics> {
    let size = nh.len();
    let covered = nh.covered_movies();
    let overlap_count = test_case
        .training_user
        .votes()
        .keys()
        .filter(|m| covered.contains(m))
        .count();
    let mean_abs_corr_to_test = if size == 0 {
        0.0
    } else {
        nh.entries.iter().map(|e| e.r.abs()).sum::<f64>() / size as f64
    };
    let mean_inter_neighbor_abs_corr = if size < 2 {
        0.0
    } else {
        let mut sum = 0.0;
        let mut pairs = 0usize;
        for i in 0..size {
            for j in (i + 1)..size {
                sum += pearson_amended(&nh.entries[i].profile, &nh.entries[j].profile, sim)?
                    .abs();
                pairs += 1;
            }
        }
        sum / pairs as f64
    };
    Ok(Characteristics {
        size,
        overlap_count,
        mean_abs_corr_to_test,
        mean_inter_neighbor_abs_corr,
    })
}

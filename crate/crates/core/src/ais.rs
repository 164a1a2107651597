//! The idiotypic immune network used for neighbourhood selection.
//!
//! Reviewers enter the pool as antibodies with an initial concentration.
//! Each Euler step applies
//!
//! ```text
//! dx_i/dt = k1 * m_i * x_i * y  -  (k2 / n) * sum_j m_ij * x_i * x_j  -  k3 * x_i
//! ```
//!
//! where `m_i` is the antibody's match to the antigen, `m_ij` the match
//! between antibodies (both absolute amended Pearson values), `y` the
//! antigen concentration and `n` the current antibody count. Updates are
//! synchronous: all derivatives are computed from the pre-step snapshot, so
//! results cannot depend on insertion order. Antibodies falling below the
//! removal threshold drop out; the pool is stable once its size has not
//! changed for a full window of iterations.

use std::collections::VecDeque;

use crate::dataset::{UserId, UserProfile};
use crate::error::{Error, Result};
use crate::similarity::{pearson_amended, SimilarityParams};

/// Rate constants and bounds for the concentration dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AisParams {
    /// k1: weight on antigen-antibody match. Acts as an admission threshold:
    /// an antibody survives alone only if `k1 * m_i * y > k3`.
    pub stimulation: f64,
    /// k2: weight on antibody-antibody match; penalises similar neighbours.
    pub suppression: f64,
    /// k3: baseline exponential decay of concentration.
    pub death_rate: f64,
    pub pool_size: usize,
    pub conc_init: f64,
    pub conc_max: f64,
    pub conc_min: f64,
    /// y: concentration of the single antigen.
    pub antigen_conc: f64,
    /// Antibodies strictly below this concentration are removed.
    pub removal_threshold: f64,
    /// Iterations without a size change before the pool counts as stable.
    pub stability_window: usize,
    /// dt for the explicit Euler integration.
    pub step_size: f64,
    pub max_differentiation_iters: usize,
    /// Include the j = i term in the suppression sum. Off by default: the
    /// self-match would act as a disguised extra death term.
    pub include_self_suppression: bool,
}

impl Default for AisParams {
    fn default() -> Self {
        AisParams {
            stimulation: 0.0,
            suppression: 0.0,
            death_rate: 0.1,
            pool_size: 100,
            conc_init: 10.0,
            conc_max: 100.0,
            conc_min: 0.0,
            antigen_conc: 10.0,
            removal_threshold: 1.0,
            stability_window: 10,
            step_size: 1.0,
            max_differentiation_iters: 10_000,
            include_self_suppression: false,
        }
    }
}

impl AisParams {
    pub fn validate(&self) -> Result<()> {
        let ordered = self.conc_min <= self.removal_threshold
            && self.removal_threshold < self.conc_init
            && self.conc_init < self.conc_max;
        if !ordered {
            return Err(Error::InvalidInput(format!(
                "need conc_min <= removal_threshold < conc_init < conc_max, got {} / {} / {} / {}",
                self.conc_min, self.removal_threshold, self.conc_init, self.conc_max
            )));
        }
        if self.stimulation < 0.0 || self.suppression < 0.0 || self.death_rate < 0.0 {
            return Err(Error::InvalidInput("rate constants must be >= 0".into()));
        }
        if self.pool_size == 0 {
            return Err(Error::InvalidInput("pool_size must be >= 1".into()));
        }
        if self.stability_window == 0 {
            return Err(Error::InvalidInput("stability_window must be >= 1".into()));
        }
        if self.step_size.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::InvalidInput("step_size must be > 0".into()));
        }
        if self.max_differentiation_iters == 0 {
            return Err(Error::InvalidInput(
                "max_differentiation_iters must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// A reviewer profile inside the network, with its live concentration and
/// its match score against the antigen.
#[derive(Debug, Clone)]
pub struct Antibody {
    profile: UserProfile,
    concentration: f64,
    antigen_match: f64,
}

impl Antibody {
    pub fn profile(&self) -> &UserProfile {
        &self.profile
    }

    pub fn user_id(&self) -> UserId {
        self.profile.user_id()
    }

    pub fn concentration(&self) -> f64 {
        self.concentration
    }

    /// m_i: absolute amended Pearson correlation to the antigen.
    pub fn antigen_match(&self) -> f64 {
        self.antigen_match
    }
}

/// One row of the optional concentration trajectory log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: u64,
    pub antibody_user_id: UserId,
    pub concentration: f64,
}

/// The live immune network for one antigen. Single-writer: all mutation goes
/// through `&mut self`; distinct states are independent and may run on
/// different threads.
#[derive(Debug, Clone)]
pub struct AisState {
    antigen: UserProfile,
    params: AisParams,
    sim: SimilarityParams,
    antibodies: Vec<Antibody>,
    /// Symmetric |pearson| matrix between antibody profiles, row-major over
    /// the current pool.
    matches: Vec<f64>,
    size_history: VecDeque<usize>,
    reviewers_seen: usize,
    iteration: u64,
    trace: Option<Vec<TraceRow>>,
}

impl AisState {
    pub fn new(antigen: UserProfile, params: AisParams, sim: SimilarityParams) -> Result<AisState> {
        params.validate()?;
        sim.validate()?;
        if antigen.is_empty() {
            return Err(Error::InvalidInput(
                "antigen profile must be non-empty".into(),
            ));
        }
        Ok(AisState {
            antigen,
            params,
            sim,
            antibodies: Vec::new(),
            matches: Vec::new(),
            size_history: VecDeque::new(),
            reviewers_seen: 0,
            iteration: 0,
            trace: None,
        })
    }

    pub fn antigen(&self) -> &UserProfile {
        &self.antigen
    }

    pub fn params(&self) -> &AisParams {
        &self.params
    }

    pub fn sim_params(&self) -> &SimilarityParams {
        &self.sim
    }

    pub fn antibodies(&self) -> &[Antibody] {
        &self.antibodies
    }

    pub fn len(&self) -> usize {
        self.antibodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.antibodies.is_empty()
    }

    /// Stream items consumed so far, counting rejected reviewers.
    pub fn reviewers_seen(&self) -> usize {
        self.reviewers_seen
    }

    /// m_ij between pool members i and j.
    pub fn match_between(&self, i: usize, j: usize) -> f64 {
        self.matches[i * self.antibodies.len() + j]
    }

    /// Start recording `(iteration, user, concentration)` rows on every step.
    pub fn enable_trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<TraceRow> {
        self.trace.replace(Vec::new()).unwrap_or_default()
    }

    /// Appends a reviewer as an antibody at the initial concentration,
    /// computing its antigen match and its match row against the existing
    /// pool. Returns false (without adding) for the antigen's own user or a
    /// user already present. Counts the reviewer as seen either way.
    pub fn add_antibody(&mut self, reviewer: &UserProfile) -> Result<bool> {
        if self.antibodies.len() >= self.params.pool_size {
            return Err(Error::InvalidInput(format!(
                "antibody pool already at capacity {}",
                self.params.pool_size
            )));
        }
        self.reviewers_seen += 1;
        if reviewer.user_id() == self.antigen.user_id()
            || self
                .antibodies
                .iter()
                .any(|ab| ab.user_id() == reviewer.user_id())
        {
            return Ok(false);
        }

        let antigen_match = pearson_amended(reviewer, &self.antigen, &self.sim)?.abs();
        let old_n = self.antibodies.len();
        let new_n = old_n + 1;
        let mut grown = vec![0.0; new_n * new_n];
        for i in 0..old_n {
            for j in 0..old_n {
                grown[i * new_n + j] = self.matches[i * old_n + j];
            }
        }
        for (i, ab) in self.antibodies.iter().enumerate() {
            let m = pearson_amended(reviewer, ab.profile(), &self.sim)?.abs();
            grown[i * new_n + old_n] = m;
            grown[old_n * new_n + i] = m;
        }
        grown[old_n * new_n + old_n] = pearson_amended(reviewer, reviewer, &self.sim)?.abs();
        self.matches = grown;
        self.antibodies.push(Antibody {
            profile: reviewer.clone(),
            concentration: self.params.conc_init,
            antigen_match,
        });
        Ok(true)
    }

    /// Instantaneous rate of change for antibody `i`, evaluated on the
    /// current state. The suppression sum excludes j = i unless
    /// `include_self_suppression` is set; `n` is the current antibody count.
    pub fn derivative(&self, i: usize) -> f64 {
        let p = &self.params;
        let ab = &self.antibodies[i];
        let n = self.antibodies.len();
        let mut recognised = 0.0;
        for (j, other) in self.antibodies.iter().enumerate() {
            if j == i && !p.include_self_suppression {
                continue;
            }
            recognised += self.match_between(i, j) * other.concentration;
        }
        p.stimulation * ab.antigen_match * ab.concentration * p.antigen_conc
            - (p.suppression / n as f64) * ab.concentration * recognised
            - p.death_rate * ab.concentration
    }

    /// One synchronous Euler step with clamping; no removal, no history.
    fn step_concentrations(&mut self) {
        let derivs: Vec<f64> = (0..self.antibodies.len())
            .map(|i| self.derivative(i))
            .collect();
        let p = self.params;
        for (ab, d) in self.antibodies.iter_mut().zip(&derivs) {
            ab.concentration = (ab.concentration + p.step_size * d).clamp(p.conc_min, p.conc_max);
        }
        self.iteration += 1;
        if let Some(trace) = &mut self.trace {
            let iteration = self.iteration;
            trace.extend(self.antibodies.iter().map(|ab| TraceRow {
                iteration,
                antibody_user_id: ab.user_id(),
                concentration: ab.concentration,
            }));
        }
    }

    /// One full network iteration: synchronous update, removal of antibodies
    /// below the threshold, matrix compaction, and a size-history record.
    /// Returns the removed users.
    pub fn iterate(&mut self) -> Vec<UserId> {
        self.step_concentrations();
        let threshold = self.params.removal_threshold;
        let old_n = self.antibodies.len();
        let keep: Vec<usize> = (0..old_n)
            .filter(|&i| self.antibodies[i].concentration >= threshold)
            .collect();
        let mut removed = Vec::new();
        if keep.len() != old_n {
            let new_n = keep.len();
            let mut compact = vec![0.0; new_n * new_n];
            for (a, &i) in keep.iter().enumerate() {
                for (b, &j) in keep.iter().enumerate() {
                    compact[a * new_n + b] = self.matches[i * old_n + j];
                }
            }
            self.matches = compact;
            let mut kept_iter = keep.iter().copied().peekable();
            let mut survivors = Vec::with_capacity(keep.len());
            for (i, ab) in self.antibodies.drain(..).enumerate() {
                if kept_iter.peek() == Some(&i) {
                    kept_iter.next();
                    survivors.push(ab);
                } else {
                    removed.push(ab.user_id());
                }
            }
            self.antibodies = survivors;
        }
        self.size_history.push_back(self.antibodies.len());
        while self.size_history.len() > self.params.stability_window {
            self.size_history.pop_front();
        }
        removed
    }

    /// True once a full stability window of recorded sizes exists and all of
    /// them are equal.
    pub fn is_stable(&self) -> bool {
        self.size_history.len() == self.params.stability_window
            && self
                .size_history
                .iter()
                .all(|&s| s == self.size_history[0])
    }

    /// Feeds reviewers into the network until it stabilises or the stream is
    /// exhausted: add the next reviewer, then iterate while the pool is at
    /// full size and not yet stable.
    pub fn run_selection<'a>(
        &mut self,
        reviewers: impl IntoIterator<Item = &'a UserProfile>,
    ) -> Result<()> {
        let mut stream = reviewers.into_iter();
        while !self.is_stable() {
            while self.antibodies.len() == self.params.pool_size && !self.is_stable() {
                self.iterate();
            }
            if self.is_stable() {
                break;
            }
            let Some(reviewer) = stream.next() else {
                break;
            };
            self.add_antibody(reviewer)?;
        }
        Ok(())
    }

    /// Resets every concentration to the initial value, then iterates
    /// WITHOUT removal until some antibody saturates at the maximum. This
    /// spreads the concentrations so they can serve as neighbour weights;
    /// membership is already fixed, so nothing may drop out here.
    pub fn reset_and_differentiate(&mut self) -> Result<()> {
        if self.antibodies.is_empty() {
            return Err(Error::InvalidInput(
                "cannot differentiate an empty antibody pool".into(),
            ));
        }
        for ab in &mut self.antibodies {
            ab.concentration = self.params.conc_init;
        }
        for _ in 0..self.params.max_differentiation_iters {
            if self.saturated() {
                return Ok(());
            }
            self.step_concentrations();
        }
        if self.saturated() {
            Ok(())
        } else {
            Err(Error::DifferentiationCap(
                self.params.max_differentiation_iters,
            ))
        }
    }

    fn saturated(&self) -> bool {
        self.antibodies
            .iter()
            .any(|ab| ab.concentration >= self.params.conc_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{MovieId, Score};
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

    /// 100 shared movies with varied scores: pairwise |pearson| is exactly 1
    /// with no overlap penalty.
    fn wide_profile(id: u32) -> UserProfile {
        let votes: Vec<(u32, u8)> = (1..=100).map(|m| (m, (m % 6) as u8)).collect();
        profile(id, &votes)
    }

    /// Profile disjoint from `wide_profile`, so its antigen match is 0.
    fn disjoint_profile(id: u32) -> UserProfile {
        profile(id, &[(1000, 1), (1001, 4)])
    }

    fn state(params: AisParams) -> AisState {
        AisState::new(wide_profile(1), params, SimilarityParams::default()).unwrap()
    }

    #[test]
    fn new_state_is_empty_with_defaults() {
        let s = state(AisParams::default());
        assert_eq!(s.len(), 0);
        assert_eq!(s.reviewers_seen(), 0);
        assert_eq!(s.params().death_rate, 0.1);
        assert_eq!(s.params().pool_size, 100);
    }

    #[test]
    fn invalid_concentration_ordering_is_rejected() {
        let params = AisParams {
            conc_init: 100.0,
            ..Default::default()
        };
        assert!(AisState::new(wide_profile(1), params, SimilarityParams::default()).is_err());
    }

    #[test]
    fn first_antibody_gets_a_one_by_one_matrix() {
        let mut s = state(AisParams::default());
        assert!(s.add_antibody(&wide_profile(2)).unwrap());
        assert_eq!(s.len(), 1);
        assert_eq!(s.match_between(0, 0), 1.0);
        assert_eq!(s.antibodies()[0].antigen_match(), 1.0);
        assert_eq!(s.reviewers_seen(), 1);
    }

    #[test]
    fn no_overlap_reviewer_is_accepted_with_zero_match() {
        let mut s = state(AisParams::default());
        assert!(s.add_antibody(&disjoint_profile(2)).unwrap());
        assert_eq!(s.antibodies()[0].antigen_match(), 0.0);
    }

    #[test]
    fn antigen_user_is_rejected_but_counted() {
        let mut s = state(AisParams::default());
        assert!(!s.add_antibody(&wide_profile(1)).unwrap());
        assert_eq!(s.len(), 0);
        assert_eq!(s.reviewers_seen(), 1);
    }

    #[test]
    fn add_to_full_pool_is_an_error() {
        let params = AisParams {
            pool_size: 1,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        assert!(s.add_antibody(&wide_profile(3)).is_err());
    }

    #[test]
    fn derivative_single_antibody_direct_substitution() {
        let params = AisParams {
            stimulation: 0.2,
            suppression: 0.0,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        // 0.2 * 1 * 10 * 10 - 0 - 0.1 * 10 = 19
        assert!((s.derivative(0) - 19.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_pure_decay() {
        let mut s = state(AisParams::default());
        s.add_antibody(&wide_profile(2)).unwrap();
        assert!((s.derivative(0) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_suppression_matches_brute_force_sum() {
        let params = AisParams {
            stimulation: 0.0,
            suppression: 0.2,
            death_rate: 0.0,
            ..Default::default()
        };
        // Two antibodies whose mutual match is 0.5: 50 shared movies with
        // pattern-correlated scores would be fiddly, so instead check against
        // a brute-force sum over whatever m_12 the profiles produce.
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        s.add_antibody(&wide_profile(3)).unwrap();
        let m12 = s.match_between(0, 1);
        assert_eq!(m12, 1.0);
        // dx_0/dt = -(k2/n) * x_0 * sum_{j != 0} m_0j * x_j
        let brute = -(0.2 / 2.0) * 10.0 * (m12 * 10.0);
        assert!((s.derivative(0) - brute).abs() < 1e-12);
        assert!((s.derivative(0) + 10.0).abs() < 1e-12);
    }

    #[test]
    fn derivative_worked_suppression_example() {
        // k1=0, k2=0.2, k3=0, m_12=0.5, x_1=x_2=10 -> dx_1/dt = -5.
        // Two identical 50-vote profiles correlate perfectly but carry the
        // overlap penalty 50/100, giving m_12 = 0.5 exactly.
        let params = AisParams {
            stimulation: 0.0,
            suppression: 0.2,
            death_rate: 0.0,
            ..Default::default()
        };
        let mut s = state(params);
        let votes: Vec<(u32, u8)> = (1..=50).map(|m| (m, (m % 6) as u8)).collect();
        s.add_antibody(&profile(2, &votes)).unwrap();
        s.add_antibody(&profile(3, &votes)).unwrap();
        assert_eq!(s.match_between(0, 1), 0.5);
        assert!((s.derivative(0) + 5.0).abs() < 1e-12);
    }

    #[test]
    fn iterate_applies_euler_step() {
        let params = AisParams {
            stimulation: 0.2,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        let removed = s.iterate();
        assert!(removed.is_empty());
        assert!((s.antibodies()[0].concentration() - 29.0).abs() < 1e-12);
    }

    #[test]
    fn unmatched_antibody_decays_and_is_removed_at_iteration_22() {
        // Independent scalar oracle: x_t = 10 * 0.9^t crosses 1.0 between
        // t = 21 (1.094) and t = 22 (0.985).
        let mut oracle = 10.0f64;
        let mut removal_at = 0;
        for t in 1..=40 {
            oracle *= 0.9;
            if oracle < 1.0 {
                removal_at = t;
                break;
            }
        }
        assert_eq!(removal_at, 22);

        let mut s = state(AisParams::default());
        s.add_antibody(&disjoint_profile(2)).unwrap();
        for _ in 1..22 {
            assert!(s.iterate().is_empty());
            assert_eq!(s.len(), 1);
        }
        let removed = s.iterate();
        assert_eq!(removed, vec![UserId(2)]);
        assert_eq!(s.len(), 0);
    }

    #[test]
    fn concentration_clamps_at_max_exactly() {
        let params = AisParams {
            stimulation: 5.0,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        for _ in 0..5 {
            s.iterate();
        }
        assert_eq!(s.antibodies()[0].concentration(), 100.0);
    }

    #[test]
    fn stability_needs_a_full_equal_window() {
        let params = AisParams {
            stimulation: 0.2,
            pool_size: 1,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        for i in 0..9 {
            s.iterate();
            assert!(!s.is_stable(), "stable too early after {} iterations", i + 1);
        }
        s.iterate();
        assert!(s.is_stable());
    }

    #[test]
    fn size_change_resets_the_window() {
        let params = AisParams {
            pool_size: 2,
            stimulation: 0.2,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        s.add_antibody(&disjoint_profile(3)).unwrap();
        // the disjoint antibody decays out on iteration 22; nine equal sizes
        // then a differing one is not stable
        for _ in 0..21 {
            s.iterate();
        }
        assert!(s.is_stable()); // 10+ quiet iterations at size 2 so far
        let removed = s.iterate();
        assert_eq!(removed.len(), 1);
        assert!(!s.is_stable());
    }

    #[test]
    fn run_selection_exhausts_short_stream() {
        let params = AisParams {
            pool_size: 100,
            ..Default::default()
        };
        let mut s = state(params);
        let reviewers: Vec<UserProfile> = (2..=5).map(disjoint_profile).collect();
        s.run_selection(reviewers.iter()).unwrap();
        assert_eq!(s.reviewers_seen(), 4);
        assert_eq!(s.len(), 4); // never reached full size, never iterated
        assert!(!s.is_stable());
    }

    #[test]
    fn run_selection_on_stable_state_consumes_nothing() {
        let params = AisParams {
            stimulation: 0.2,
            pool_size: 1,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        while !s.is_stable() {
            s.iterate();
        }
        let seen = s.reviewers_seen();
        let conc = s.antibodies()[0].concentration();
        let reviewers: Vec<UserProfile> = (10..20).map(wide_profile).collect();
        s.run_selection(reviewers.iter()).unwrap();
        assert_eq!(s.reviewers_seen(), seen);
        assert_eq!(s.antibodies()[0].concentration(), conc);
    }

    #[test]
    fn run_selection_fills_and_stabilises_with_matched_reviewers() {
        let params = AisParams {
            stimulation: 0.2,
            suppression: 0.0,
            pool_size: 5,
            ..Default::default()
        };
        let mut s = state(params);
        let reviewers: Vec<UserProfile> = (2..=40).map(wide_profile).collect();
        s.run_selection(reviewers.iter()).unwrap();
        assert!(s.is_stable());
        assert_eq!(s.len(), 5);
        // filled early: only the first pool_size reviewers were consumed
        assert_eq!(s.reviewers_seen(), 5);
    }

    #[test]
    fn differentiation_saturates_a_growing_antibody() {
        let params = AisParams {
            stimulation: 0.2,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        s.iterate();
        s.reset_and_differentiate().unwrap();
        assert_eq!(s.antibodies()[0].concentration(), 100.0);
    }

    #[test]
    fn differentiation_caps_on_pure_decay() {
        let params = AisParams {
            stimulation: 0.0,
            max_differentiation_iters: 50,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        let err = s.reset_and_differentiate().unwrap_err();
        assert!(matches!(err, Error::DifferentiationCap(50)));
        // state is left partially differentiated, not rolled back
        assert!(s.antibodies()[0].concentration() < 10.0);
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn differentiation_orders_by_match_strength() {
        // Independent scalar oracle: with k2 = 0 each antibody follows
        // x <- x * (1 + k1*m*y - k3) clamped at 100.
        let k1 = 0.2;
        let (m1, m2) = (0.8, 0.5);
        let mut x1 = 10.0f64;
        let mut x2 = 10.0f64;
        let mut steps = 0;
        while x1 < 100.0 && x2 < 100.0 {
            x1 = (x1 * (1.0 + k1 * m1 * 10.0 - 0.1)).min(100.0);
            x2 = (x2 * (1.0 + k1 * m2 * 10.0 - 0.1)).min(100.0);
            steps += 1;
        }
        assert_eq!(steps, 3);
        assert_eq!(x1, 100.0);
        assert!(x2 < 100.0);

        // The same ordering must come out of the network: build two
        // antibodies whose antigen matches differ, suppression off.
        let params = AisParams {
            stimulation: 0.2,
            suppression: 0.0,
            pool_size: 10,
            ..Default::default()
        };
        let antigen = wide_profile(1);
        let mut s = AisState::new(antigen, params, SimilarityParams::default()).unwrap();
        s.add_antibody(&wide_profile(2)).unwrap(); // m = 1.0
        // partial profile: 40 of the shared movies -> penalised match 0.4
        let partial: Vec<(u32, u8)> = (1..=40).map(|m| (m, (m % 6) as u8)).collect();
        s.add_antibody(&profile(3, &partial)).unwrap();
        let m_hi = s.antibodies()[0].antigen_match();
        let m_lo = s.antibodies()[1].antigen_match();
        assert!(m_hi > m_lo);
        s.reset_and_differentiate().unwrap();
        let x_hi = s.antibodies()[0].concentration();
        let x_lo = s.antibodies()[1].concentration();
        assert_eq!(x_hi, 100.0);
        assert!(x_hi > x_lo, "x_hi {x_hi} should exceed x_lo {x_lo}");
    }

    #[test]
    fn pure_decay_follows_the_closed_form() {
        let mut s = state(AisParams::default());
        s.add_antibody(&disjoint_profile(2)).unwrap();
        let mut expected = 10.0f64;
        for _ in 0..20 {
            s.iterate();
            expected *= 0.9;
            if expected < 1.0 {
                break;
            }
            let got = s.antibodies()[0].concentration();
            assert!((got - expected).abs() < 1e-9, "got {got}, want {expected}");
        }
    }

    #[test]
    fn raising_suppression_never_raises_concentrations() {
        let antigen = wide_profile(1);
        let build = |k2: f64| {
            let params = AisParams {
                stimulation: 0.3,
                suppression: k2,
                pool_size: 10,
                ..Default::default()
            };
            let mut s = AisState::new(antigen.clone(), params, SimilarityParams::default())
                .unwrap();
            for id in 2..=6 {
                s.add_antibody(&wide_profile(id)).unwrap();
            }
            s.step_concentrations();
            s
        };
        let low = build(0.1);
        let high = build(0.3);
        for (a, b) in low.antibodies().iter().zip(high.antibodies()) {
            assert!(b.concentration() <= a.concentration() + 1e-12);
        }
    }

    #[test]
    fn match_matrix_stays_symmetric_through_add_and_remove() {
        let params = AisParams {
            pool_size: 6,
            ..Default::default()
        };
        let mut s = state(params);
        s.add_antibody(&wide_profile(2)).unwrap();
        s.add_antibody(&disjoint_profile(3)).unwrap();
        s.add_antibody(&profile(4, &[(1, 5), (2, 0), (3, 3)])).unwrap();
        for _ in 0..25 {
            s.iterate();
            let n = s.len();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(s.match_between(i, j), s.match_between(j, i));
                    assert!((0.0..=1.0).contains(&s.match_between(i, j)));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn concentrations_stay_in_bounds(
            k1 in 0.0..1.0f64,
            k2 in 0.0..1.0f64,
            steps in 1usize..30,
        ) {
            let params = AisParams {
                stimulation: k1,
                suppression: k2,
                pool_size: 8,
                ..Default::default()
            };
            let mut s = state(params);
            for id in 2..=8 {
                s.add_antibody(&wide_profile(id)).unwrap();
            }
            for _ in 0..steps {
                s.iterate();
                for ab in s.antibodies() {
                    prop_assert!((0.0..=100.0).contains(&ab.concentration()));
                }
            }
        }

        #[test]
        fn iterate_is_deterministic(k1 in 0.0..0.5f64, k2 in 0.0..0.5f64) {
            let params = AisParams {
                stimulation: k1,
                suppression: k2,
                pool_size: 5,
                ..Default::default()
            };
            let mk = || {
                let mut s = state(params);
                for id in 2..=5 {
                    s.add_antibody(&wide_profile(id)).unwrap();
                }
                for _ in 0..10 { s.iterate(); }
                s.antibodies().iter().map(|a| a.concentration()).collect::<Vec<_>>()
            };
            prop_assert_eq!(mk(), mk());
        }
    }
}

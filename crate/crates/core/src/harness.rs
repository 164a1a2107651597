//! Experiment orchestration: the reserved-vote evaluation loop, parameter
//! sweeps, and the fixed-neighbourhood swap experiment.
//!
//! Every run is a pure function of (dataset, config, seed). Seeds derive
//! hierarchically — run seed to per-test-user seed to per-repeat seed — so
//! test users can be processed in parallel without affecting results.

use std::fmt;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::ais::{AisParams, AisState};
use crate::dataset::{reserve_vote, sample_test_users, Dataset, TestCase, UserId, UserProfile};
use crate::error::{Error, Result};
use crate::eval::{
    kendall_tau, mean_std, summarize, wilcoxon_p, wilcoxon_ranks, PredictionRecord, Summary,
};
use crate::neighborhood::{
    characteristics, from_ais_state, inject_fixed, select_sp, Characteristics, Method,
    Neighborhood, Weighting,
};
use crate::predictor::{predict, recommend, PredictionOptions};
use crate::similarity::SimilarityParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Sp,
    Ais,
    /// Simple Pearson with neighbourhood size and reviewer count copied from
    /// a paired immune-network run on the same stream.
    MatchedSp,
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Algo::Sp => "sp",
            Algo::Ais => "ais",
            Algo::MatchedSp => "matched-sp",
        })
    }
}

impl Algo {
    pub fn parse(s: &str) -> Result<Algo> {
        match s {
            "sp" => Ok(Algo::Sp),
            "ais" => Ok(Algo::Ais),
            "matched-sp" => Ok(Algo::MatchedSp),
            other => Err(Error::InvalidInput(format!(
                "unknown algorithm '{other}' (expected sp, ais or matched-sp)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub algo: Algo,
    pub sim: SimilarityParams,
    pub ais: AisParams,
    pub pred: PredictionOptions,
    pub n_test_users: usize,
    pub max_reviewers: usize,
    pub sp_k: usize,
    pub seed: u64,
    pub repeats: usize,
    /// When set, each immune-network run writes its concentration trajectory
    /// to `<dir>/trace_user<id>.csv`.
    pub trace_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(algo: Algo, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            algo,
            sim: SimilarityParams::default(),
            ais: AisParams::default(),
            pred: PredictionOptions::default(),
            n_test_users: 100,
            max_reviewers: 15_000,
            sp_k: 100,
            seed,
            repeats: 5,
            trace_dir: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        self.ais.validate()?;
        if self.n_test_users == 0 {
            return Err(Error::InvalidInput("n_test_users must be >= 1".into()));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidInput("repeats must be >= 1".into()));
        }
        if self.sp_k == 0 {
            return Err(Error::InvalidInput("sp_k must be >= 1".into()));
        }
        if self.max_reviewers == 0 {
            return Err(Error::InvalidInput("max_reviewers must be >= 1".into()));
        }
        Ok(())
    }
}

/// SplitMix64-style mixing for hierarchical seed derivation.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    let mut state = mix(base ^ 0x9e3779b97f4a7c15);
    for &tag in tags {
        state = mix(state.wrapping_add(0x9e3779b97f4a7c15).wrapping_add(tag));
    }
    state
}

const TAG_SAMPLE: u64 = 1;
const TAG_USER: u64 = 2;
const TAG_SWEEP: u64 = 3;

/// Outcome of neighbourhood construction for one trial.
struct Selection {
    neighborhood: Neighborhood,
    reviewers_seen: usize,
}

fn empty_characteristics() -> Characteristics {
    Characteristics {
        size: 0,
        overlap_count: 0,
        mean_abs_corr_to_test: 0.0,
        mean_inter_neighbor_abs_corr: 0.0,
    }
}

/// A record for a trial whose neighbourhood construction or evaluation
/// failed: the prediction falls back to the training user's mean and the
/// record is flagged, but the run continues.
fn flagged_record(tc: &TestCase, reviewers_seen: usize) -> PredictionRecord {
    let mean = tc.training_user.mean_vote().unwrap_or(0.5);
    PredictionRecord {
        test_user_id: tc.original_user_id,
        movie_id: tc.reserved.movie_id,
        actual: tc.reserved.score.value(),
        predicted: mean,
        fallback: true,
        neighborhood_size: 0,
        reviewers_seen,
        n_recommendations: 0,
        overlap_count: 0,
        tau: None,
        characteristics: empty_characteristics(),
    }
}

/// Builds the per-user reviewer stream: a seeded shuffle of all other users,
/// truncated at the reviewer budget.
fn reviewer_stream<'a>(
    dataset: &'a Dataset,
    test_user: UserId,
    max_reviewers: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<&'a UserProfile> {
    let mut stream: Vec<&UserProfile> = dataset
        .users()
        .iter()
        .filter(|u| u.user_id() != test_user)
        .collect();
    stream.shuffle(rng);
    stream.truncate(max_reviewers);
    stream
}

fn run_ais_selection(
    stream: &[&UserProfile],
    antigen: &UserProfile,
    cfg: &ExperimentConfig,
) -> Result<(Selection, AisState)> {
    let mut state = AisState::new(antigen.clone(), cfg.ais, cfg.sim)?;
    if cfg.trace_dir.is_some() {
        state.enable_trace();
    }
    state.run_selection(stream.iter().copied())?;
    if !state.is_empty() {
        state.reset_and_differentiate()?;
    }
    let neighborhood = from_ais_state(&state)?;
    let reviewers_seen = state.reviewers_seen();
    Ok((
        Selection {
            neighborhood,
            reviewers_seen,
        },
        state,
    ))
}

fn write_trace(state: &mut AisState, dir: &PathBuf, user: UserId) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("trace_user{user}.csv"));
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "iteration,antibody_user_id,concentration")?;
    for row in state.take_trace() {
        writeln!(
            out,
            "{},{},{}",
            row.iteration, row.antibody_user_id, row.concentration
        )?;
    }
    Ok(())
}

fn select_for(
    algo: Algo,
    stream: &[&UserProfile],
    tc: &TestCase,
    cfg: &ExperimentConfig,
) -> Result<Selection> {
    let antigen = &tc.training_user;
    // Neighbourhoods are selected from the training profile alone; a
    // neighbour who has not seen the target film is skipped at prediction
    // time rather than excluded from the neighbourhood. select_sp's
    // target_movie filter remains available for movie-scoped selection.
    match algo {
        Algo::Sp => {
            let nh = select_sp(stream.iter().copied(), antigen, cfg.sp_k, None, &cfg.sim)?;
            Ok(Selection {
                neighborhood: nh,
                reviewers_seen: stream.len(),
            })
        }
        Algo::Ais => {
            let (selection, mut state) = run_ais_selection(stream, antigen, cfg)?;
            if let Some(dir) = &cfg.trace_dir {
                write_trace(&mut state, dir, tc.original_user_id)?;
            }
            Ok(selection)
        }
        Algo::MatchedSp => {
            // run the immune network first, then give Simple Pearson the same
            // neighbourhood size and reviewer budget
            let (ais_selection, _) = run_ais_selection(stream, antigen, cfg)?;
            let k = ais_selection.neighborhood.len();
            let budget = ais_selection.reviewers_seen.min(stream.len());
            let nh = if k == 0 {
                Neighborhood {
                    test_user: antigen.clone(),
                    entries: Vec::new(),
                    method: Method::Sp,
                }
            } else {
                select_sp(stream[..budget].iter().copied(), antigen, k, None, &cfg.sim)?
            };
            Ok(Selection {
                neighborhood: nh,
                reviewers_seen: budget,
            })
        }
    }
}

/// Scores a built neighbourhood against the reserved vote: prediction,
/// recommendation list, overlap, rank correlation, and characteristics.
fn evaluate_neighborhood(
    nh: &Neighborhood,
    tc: &TestCase,
    reviewers_seen: usize,
    cfg: &ExperimentConfig,
) -> Result<PredictionRecord> {
    let prediction = predict(nh, tc.reserved.movie_id, &cfg.pred)?;
    let recommendations = recommend(nh, &cfg.pred)?;
    let chars = characteristics(nh, tc, &cfg.sim)?;
    let overlap_pairs: Vec<_> = recommendations
        .iter()
        .filter_map(|rec| {
            tc.training_user
                .score_for(rec.movie_id)
                .map(|actual| (rec.movie_id, actual.value(), rec.predicted_score))
        })
        .collect();
    let tau = if overlap_pairs.len() >= 2 {
        Some(kendall_tau(&overlap_pairs)?)
    } else {
        None
    };
    debug_assert_eq!(overlap_pairs.len(), chars.overlap_count);
    Ok(PredictionRecord {
        test_user_id: tc.original_user_id,
        movie_id: tc.reserved.movie_id,
        actual: tc.reserved.score.value(),
        predicted: prediction.value,
        fallback: prediction.fallback,
        neighborhood_size: nh.len(),
        reviewers_seen,
        n_recommendations: recommendations.len(),
        overlap_count: chars.overlap_count,
        tau,
        characteristics: chars,
    })
}

fn run_one(dataset: &Dataset, cfg: &ExperimentConfig, user: &UserProfile) -> Result<PredictionRecord> {
    let user_seed = derive_seed(cfg.seed, &[TAG_USER, user.user_id().0 as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(user_seed);
    let tc = reserve_vote(user, &mut rng)?;
    let stream = reviewer_stream(dataset, user.user_id(), cfg.max_reviewers, &mut rng);
    match select_for(cfg.algo, &stream, &tc, cfg) {
        Ok(selection) => {
            match evaluate_neighborhood(&selection.neighborhood, &tc, selection.reviewers_seen, cfg)
            {
                Ok(record) => Ok(record),
                Err(Error::Io(e)) => Err(Error::Io(e)),
                Err(_) => Ok(flagged_record(&tc, selection.reviewers_seen)),
            }
        }
        // trial-level failures become flagged records; io failures abort
        Err(Error::Io(e)) => Err(Error::Io(e)),
        Err(_) => Ok(flagged_record(&tc, stream.len())),
    }
}

/// The reserved-vote evaluation loop over a sample of test users. Records
/// come back sorted by test user id; per-user failures are flagged records,
/// never a run abort.
pub fn run_experiment(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<Vec<PredictionRecord>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_SAMPLE]));
    let test_users = sample_test_users(dataset, cfg.n_test_users, 2, &mut rng)?;
    let mut records = test_users
        .par_iter()
        .map(|user| run_one(dataset, cfg, user))
        .collect::<Result<Vec<_>>>()?;
    records.sort_by_key(|r| r.test_user_id);
    Ok(records)
}

/// Re-derives each sampled test user's neighbourhood with the same seed
/// chain the experiment used. Selection is deterministic, so this reproduces
/// exactly the memberships and weights behind a results file. Trials whose
/// selection failed come back as empty neighbourhoods.
pub fn rebuild_neighborhoods(
    dataset: &Dataset,
    cfg: &ExperimentConfig,
) -> Result<Vec<(UserId, Neighborhood)>> {
    cfg.validate()?;
    let cfg = ExperimentConfig {
        trace_dir: None,
        ..cfg.clone()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_SAMPLE]));
    let test_users = sample_test_users(dataset, cfg.n_test_users, 2, &mut rng)?;
    let mut out = test_users
        .par_iter()
        .map(|user| {
            let user_seed = derive_seed(cfg.seed, &[TAG_USER, user.user_id().0 as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(user_seed);
            let tc = reserve_vote(user, &mut rng)?;
            let stream = reviewer_stream(dataset, user.user_id(), cfg.max_reviewers, &mut rng);
            let nh = match select_for(cfg.algo, &stream, &tc, &cfg) {
                Ok(selection) => selection.neighborhood,
                Err(Error::Io(e)) => return Err(Error::Io(e)),
                Err(_) => Neighborhood {
                    test_user: tc.training_user.clone(),
                    entries: Vec::new(),
                    method: Method::Sp,
                },
            };
            Ok((user.user_id(), nh))
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by_key(|(id, _)| *id);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Stimulation,
    Suppression,
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepParam::Stimulation => "stim",
            SweepParam::Suppression => "supp",
        })
    }
}

impl SweepParam {
    pub fn parse(s: &str) -> Result<SweepParam> {
        match s {
            "stim" | "stimulation" => Ok(SweepParam::Stimulation),
            "supp" | "suppression" => Ok(SweepParam::Suppression),
            other => Err(Error::InvalidInput(format!(
                "unknown sweep parameter '{other}' (expected stim or supp)"
            ))),
        }
    }
}

/// One completed run inside a sweep.
#[derive(Debug, Clone)]
pub struct SweepCell {
    pub value: f64,
    pub repeat: usize,
    pub summary: Summary,
}

/// Mean and std across repeats for one swept value.
#[derive(Debug, Clone, Copy)]
pub struct SweepAggregate {
    pub value: f64,
    pub mae: (f64, f64),
    pub tau: Option<(f64, f64)>,
    pub recommendations: (f64, f64),
    pub overlap: (f64, f64),
    pub neighbors: (f64, f64),
    pub reviewers: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct SweepTable {
    pub param: SweepParam,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    /// Per-value mean and std of each summary statistic across repeats.
    pub fn aggregates(&self) -> Vec<SweepAggregate> {
        let mut values: Vec<f64> = Vec::new();
        for cell in &self.cells {
            if !values.contains(&cell.value) {
                values.push(cell.value);
            }
        }
        values
            .into_iter()
            .map(|value| {
                let group: Vec<&SweepCell> =
                    self.cells.iter().filter(|c| c.value == value).collect();
                let collect = |f: &dyn Fn(&Summary) -> f64| -> (f64, f64) {
                    mean_std(&group.iter().map(|c| f(&c.summary)).collect::<Vec<_>>())
                };
                let taus: Vec<f64> = group.iter().filter_map(|c| c.summary.tau_mean).collect();
                SweepAggregate {
                    value,
                    mae: collect(&|s| s.mae),
                    tau: if taus.is_empty() {
                        None
                    } else {
                        Some(mean_std(&taus))
                    },
                    recommendations: collect(&|s| s.recommendations_mean),
                    overlap: collect(&|s| s.overlap_mean),
                    neighbors: collect(&|s| s.neighbors_mean),
                    reviewers: collect(&|s| s.reviewers_mean),
                }
            })
            .collect()
    }
}

/// Runs the experiment at each parameter value, `repeats` times each with
/// derived seeds. This produces the data behind the stimulation and
/// suppression figures.
pub fn sweep(
    dataset: &Dataset,
    base: &ExperimentConfig,
    param: SweepParam,
    values: &[f64],
) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one value".into()));
    }
    let mut cells = Vec::with_capacity(values.len() * base.repeats);
    for (vi, &value) in values.iter().enumerate() {
        for repeat in 0..base.repeats {
            let mut cfg = base.clone();
            match param {
                SweepParam::Stimulation => cfg.ais.stimulation = value,
                SweepParam::Suppression => cfg.ais.suppression = value,
            }
            cfg.seed = derive_seed(base.seed, &[TAG_SWEEP, vi as u64, repeat as u64]);
            let records = run_experiment(dataset, &cfg)?;
            cells.push(SweepCell {
                value,
                repeat,
                summary: summarize(&records)?,
            });
        }
    }
    Ok(SweepTable { param, cells })
}

/// The four predictor x neighbourhood regimes of the swap experiment.
pub const SWAP_REGIMES: [(Weighting, Weighting); 4] = [
    (Weighting::Sp, Weighting::Sp),
    (Weighting::Ais, Weighting::Sp),
    (Weighting::Sp, Weighting::Ais),
    (Weighting::Ais, Weighting::Ais),
];

#[derive(Debug, Clone)]
pub struct RegimeRecords {
    pub predictor: Weighting,
    pub neighborhood: Weighting,
    pub records: Vec<PredictionRecord>,
}

/// One pairwise regime comparison for one metric.
#[derive(Debug, Clone)]
pub struct ComparisonRow {
    pub metric: String,
    pub pred1: Weighting,
    pub nh1: Weighting,
    pub pred2: Weighting,
    pub nh2: Weighting,
    pub median1: f64,
    pub median2: f64,
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p: Option<f64>,
}

/// One community-characteristic comparison between the base neighbourhoods.
#[derive(Debug, Clone)]
pub struct CharacteristicComparison {
    pub characteristic: String,
    pub mean_sp: f64,
    pub mean_ais: f64,
    pub n: usize,
    pub w_plus: f64,
    pub w_minus: f64,
    pub p: Option<f64>,
}

/// Common and unique membership counts per test user.
#[derive(Debug, Clone, Copy)]
pub struct MembershipRow {
    pub test_user: UserId,
    pub common: usize,
    pub unique_sp: usize,
    pub unique_ais: usize,
}

/// One row of a neighbourhood dump.
#[derive(Debug, Clone, Copy)]
pub struct NeighborhoodDumpRow {
    pub test_user: UserId,
    pub neighbor_user: UserId,
    pub r: f64,
    pub concentration: Option<f64>,
    pub weight: f64,
    pub method: Method,
}

pub fn dump_rows(nh: &Neighborhood, test_user: UserId) -> Vec<NeighborhoodDumpRow> {
    nh.entries
        .iter()
        .map(|e| NeighborhoodDumpRow {
            test_user,
            neighbor_user: e.profile.user_id(),
            r: e.r,
            concentration: e.concentration,
            weight: e.weight,
            method: nh.method,
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct SwapOutput {
    pub regimes: Vec<RegimeRecords>,
    pub comparisons: Vec<ComparisonRow>,
    pub characteristics: Vec<CharacteristicComparison>,
    pub membership: Vec<MembershipRow>,
    pub base_neighborhoods: Vec<NeighborhoodDumpRow>,
}

struct SwapUserResult {
    records: [PredictionRecord; 4],
    base_characteristics: [Characteristics; 2], // SP, AIS
    membership: MembershipRow,
    dump: Vec<NeighborhoodDumpRow>,
}

fn swap_one(dataset: &Dataset, cfg: &ExperimentConfig, user: &UserProfile) -> Result<SwapUserResult> {
    // identical derivation to run_one, so the SP-weighted SP-neighbourhood
    // regime reproduces the plain SP run record for record
    let user_seed = derive_seed(cfg.seed, &[TAG_USER, user.user_id().0 as u64]);
    let mut rng = ChaCha8Rng::seed_from_u64(user_seed);
    let tc = reserve_vote(user, &mut rng)?;
    let stream = reviewer_stream(dataset, user.user_id(), cfg.max_reviewers, &mut rng);

    let sp_nh = select_sp(
        stream.iter().copied(),
        &tc.training_user,
        cfg.sp_k,
        None,
        &cfg.sim,
    )?;
    let sp_seen = stream.len();
    let (ais_selection, ais_seen) = match run_ais_selection(&stream, &tc.training_user, cfg) {
        Ok((sel, state)) => {
            let seen = state.reviewers_seen();
            (Some(sel.neighborhood), seen)
        }
        Err(Error::Io(e)) => return Err(Error::Io(e)),
        Err(_) => (None, stream.len()),
    };

    let sp_ids = sp_nh.member_ids();
    let ais_ids = ais_selection
        .as_ref()
        .map(|nh| nh.member_ids())
        .unwrap_or_default();
    let common = sp_ids.intersection(&ais_ids).count();
    let membership = MembershipRow {
        test_user: tc.original_user_id,
        common,
        unique_sp: sp_ids.len() - common,
        unique_ais: ais_ids.len() - common,
    };

    let mut dump = dump_rows(&sp_nh, tc.original_user_id);
    if let Some(nh) = &ais_selection {
        dump.extend(dump_rows(nh, tc.original_user_id));
    }

    let sp_chars = characteristics(&sp_nh, &tc, &cfg.sim)?;
    let ais_chars = match &ais_selection {
        Some(nh) => characteristics(nh, &tc, &cfg.sim)?,
        None => empty_characteristics(),
    };

    let evaluate_regime = |predictor: Weighting, base: Option<&Neighborhood>, seen: usize| {
        let Some(base) = base else {
            return flagged_record(&tc, seen);
        };
        if base.is_empty() {
            return flagged_record(&tc, seen);
        }
        let members: Vec<UserProfile> =
            base.entries.iter().map(|e| e.profile.clone()).collect();
        match inject_fixed(&members, &tc.training_user, predictor, &cfg.ais, &cfg.sim)
            .and_then(|nh| evaluate_neighborhood(&nh, &tc, seen, cfg))
        {
            Ok(record) => record,
            Err(_) => flagged_record(&tc, seen),
        }
    };

    let records = [
        evaluate_regime(Weighting::Sp, Some(&sp_nh), sp_seen),
        evaluate_regime(Weighting::Ais, Some(&sp_nh), sp_seen),
        evaluate_regime(Weighting::Sp, ais_selection.as_ref(), ais_seen),
        evaluate_regime(Weighting::Ais, ais_selection.as_ref(), ais_seen),
    ];

    Ok(SwapUserResult {
        records,
        base_characteristics: [sp_chars, ais_chars],
        membership,
        dump,
    })
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

fn compare_paired(
    metric: &str,
    regime1: (Weighting, Weighting),
    regime2: (Weighting, Weighting),
    paired: &[(f64, f64)],
) -> ComparisonRow {
    let mut firsts: Vec<f64> = paired.iter().map(|p| p.0).collect();
    let mut seconds: Vec<f64> = paired.iter().map(|p| p.1).collect();
    let (n, w_plus, w_minus, p) = match wilcoxon_ranks(paired) {
        Ok(res) => {
            let p = wilcoxon_p(res.n_effective, res.w_plus).ok();
            (res.n_effective, res.w_plus, res.w_minus, p)
        }
        Err(_) => (0, 0.0, 0.0, None),
    };
    ComparisonRow {
        metric: metric.to_string(),
        pred1: regime1.0,
        nh1: regime1.1,
        pred2: regime2.0,
        nh2: regime2.1,
        median1: median(&mut firsts),
        median2: median(&mut seconds),
        n,
        w_plus,
        w_minus,
        p,
    }
}

/// Records and swaps the SP and immune-network neighbourhoods for each test
/// user, evaluates all four predictor x neighbourhood regimes over the fixed
/// memberships, and compares every regime pair with the signed-rank test.
pub fn swap_experiment(dataset: &Dataset, cfg: &ExperimentConfig) -> Result<SwapOutput> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, &[TAG_SAMPLE]));
    let test_users = sample_test_users(dataset, cfg.n_test_users, 2, &mut rng)?;
    let mut results = test_users
        .par_iter()
        .map(|user| swap_one(dataset, cfg, user).map(|r| (user.user_id(), r)))
        .collect::<Result<Vec<_>>>()?;
    results.sort_by_key(|(id, _)| *id);

    let mut regimes: Vec<RegimeRecords> = SWAP_REGIMES
        .iter()
        .map(|&(predictor, neighborhood)| RegimeRecords {
            predictor,
            neighborhood,
            records: Vec::with_capacity(results.len()),
        })
        .collect();
    let mut membership = Vec::with_capacity(results.len());
    let mut base_neighborhoods = Vec::new();
    let mut char_values: [Vec<(f64, f64)>; 4] = Default::default(); // (sp, ais) per user
    for (_, result) in &mut results {
        for (slot, record) in regimes.iter_mut().zip(result.records.iter()) {
            slot.records.push(record.clone());
        }
        membership.push(result.membership);
        base_neighborhoods.append(&mut result.dump);
        let [sp, ais] = result.base_characteristics;
        char_values[0].push((sp.size as f64, ais.size as f64));
        char_values[1].push((sp.overlap_count as f64, ais.overlap_count as f64));
        char_values[2].push((sp.mean_abs_corr_to_test, ais.mean_abs_corr_to_test));
        char_values[3].push((
            sp.mean_inter_neighbor_abs_corr,
            ais.mean_inter_neighbor_abs_corr,
        ));
    }

    // six pairwise regime comparisons per metric
    let mut comparisons = Vec::new();
    for metric in ["prediction_error", "kendall_tau"] {
        for i in 0..SWAP_REGIMES.len() {
            for j in (i + 1)..SWAP_REGIMES.len() {
                let paired: Vec<(f64, f64)> = regimes[i]
                    .records
                    .iter()
                    .zip(&regimes[j].records)
                    .filter_map(|(a, b)| match metric {
                        "prediction_error" => Some((a.abs_error(), b.abs_error())),
                        _ => match (a.tau, b.tau) {
                            (Some(x), Some(y)) => Some((x, y)),
                            _ => None,
                        },
                    })
                    .collect();
                comparisons.push(compare_paired(
                    metric,
                    SWAP_REGIMES[i],
                    SWAP_REGIMES[j],
                    &paired,
                ));
            }
        }
    }

    let names = ["neighbors", "overlap", "correlation", "neighbor_correlation"];
    let characteristics = names
        .iter()
        .zip(char_values.iter())
        .map(|(name, paired)| {
            let sp: Vec<f64> = paired.iter().map(|p| p.0).collect();
            let ais: Vec<f64> = paired.iter().map(|p| p.1).collect();
            let (n, w_plus, w_minus, p) = match wilcoxon_ranks(paired) {
                Ok(res) => {
                    let p = wilcoxon_p(res.n_effective, res.w_plus).ok();
                    (res.n_effective, res.w_plus, res.w_minus, p)
                }
                Err(_) => (0, 0.0, 0.0, None),
            };
            CharacteristicComparison {
                characteristic: name.to_string(),
                mean_sp: mean_std(&sp).0,
                mean_ais: mean_std(&ais).0,
                n,
                w_plus,
                w_minus,
                p,
            }
        })
        .collect();

    Ok(SwapOutput {
        regimes,
        comparisons,
        characteristics,
        membership,
        base_neighborhoods,
    })
}

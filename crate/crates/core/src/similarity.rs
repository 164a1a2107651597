//! Amended Pearson correlation between two user profiles.
//!
//! The raw coefficient is computed over the overlap (movies both users voted
//! on) but with each user's mean taken over ALL of their votes. Three
//! amendments are applied in order: an empty overlap returns
//! `no_overlap_default`, a zero product of deviation sums returns
//! `zero_variance_default`, and overlaps smaller than the penalty `P` scale
//! the coefficient by `n / P`.

use crate::dataset::{MovieId, UserProfile};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimilarityParams {
    /// Overlap penalty P: correlations over fewer than P common votes are
    /// scaled down linearly.
    pub overlap_penalty: u32,
    pub no_overlap_default: f64,
    pub zero_variance_default: f64,
}

impl Default for SimilarityParams {
    fn default() -> Self {
        SimilarityParams {
            overlap_penalty: 100,
            no_overlap_default: 0.0,
            zero_variance_default: 0.0,
        }
    }
}

impl SimilarityParams {
    pub fn validate(&self) -> Result<()> {
        if self.overlap_penalty < 1 {
            return Err(Error::InvalidInput("overlap penalty must be >= 1".into()));
        }
        Ok(())
    }
}

/// Sorted intersection of the two users' voted movie ids.
pub fn overlap(u: &UserProfile, v: &UserProfile) -> Vec<MovieId> {
    let (small, large) = if u.len() <= v.len() { (u, v) } else { (v, u) };
    small
        .votes()
        .keys()
        .filter(|m| large.votes().contains_key(m))
        .copied()
        .collect()
}

/// Amended Pearson correlation; always in [-1, 1].
///
/// Deviations are formed from exact integer numerators (`k*q_i - sum_q` over
/// 5k), so the zero-variance test is exact rather than tolerance-based.
pub fn pearson_amended(u: &UserProfile, v: &UserProfile, params: &SimilarityParams) -> Result<f64> {
    params.validate()?;
    if u.is_empty() || v.is_empty() {
        return Err(Error::InvalidInput(format!(
            "cannot correlate empty profile (users {}, {})",
            u.user_id(),
            v.user_id()
        )));
    }

    let ku = u.len() as i64;
    let kv = v.len() as i64;
    let su = u.quanta_sum() as i64;
    let sv = v.quanta_sum() as i64;
    let u_scale = (5 * ku) as f64;
    let v_scale = (5 * kv) as f64;

    let mut n = 0usize;
    let mut cross = 0.0f64;
    let mut uu = 0.0f64;
    let mut vv = 0.0f64;
    let mut u_flat = true;
    let mut v_flat = true;

    let (small, large, small_is_u) = if u.len() <= v.len() {
        (u, v, true)
    } else {
        (v, u, false)
    };
    for (movie, &s_score) in small.votes() {
        let Some(&l_score) = large.votes().get(movie) else {
            continue;
        };
        let (qu, qv) = if small_is_u {
            (s_score.quanta(), l_score.quanta())
        } else {
            (l_score.quanta(), s_score.quanta())
        };
        n += 1;
        let du_num = ku * qu as i64 - su;
        let dv_num = kv * qv as i64 - sv;
        u_flat &= du_num == 0;
        v_flat &= dv_num == 0;
        let du = du_num as f64 / u_scale;
        let dv = dv_num as f64 / v_scale;
        cross += du * dv;
        uu += du * du;
        vv += dv * dv;
    }

    if n == 0 {
        return Ok(params.no_overlap_default);
    }
    if u_flat || v_flat {
        return Ok(params.zero_variance_default);
    }
    let mut r = (cross / (uu * vv).sqrt()).clamp(-1.0, 1.0);
    let p = params.overlap_penalty as usize;
    if n < p {
        r *= n as f64 / p as f64;
    }
    Ok(r)
}

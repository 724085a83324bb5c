//! Attention feature filter.
//!
//! At every spatial location the filter scores each of the L input levels
//! by the channel dot product between that level's feature vector and the
//! query's, turns the scores into softmax weights, and blends the levels
//! with those weights. The forward pass also exposes the weights so callers
//! can inspect where the filter attends.
//!
//! Determinism notes: channel dot products use pairwise summation, and all
//! reductions across levels accumulate in value order (sorted by
//! `total_cmp`), which makes the results exactly invariant under level
//! permutation.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::pairwise_sum;

use super::{expect_same_shape, FeatureMap};

/// Forward result: blended output plus the per-location weights (one
/// weight plane per level).
#[derive(Debug, Clone)]
pub struct AttentionForward {
    pub output: FeatureMap,
    pub weights: FeatureMap,
}

/// Backward result: gradients for every level and for the query.
#[derive(Debug, Clone)]
pub struct AttentionGrads {
    pub d_levels: Vec<FeatureMap>,
    pub d_query: FeatureMap,
}

fn validate(levels: &[FeatureMap], query: &FeatureMap) -> Result<()> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter {
            what: "attention levels",
            detail: "need at least one level".into(),
        });
    }
    for level in levels {
        expect_same_shape("attention level vs query", query, level)?;
    }
    Ok(())
}

/// Sum in ascending value order. Order-canonical, so permuting the inputs
/// cannot change the result.
fn sorted_sum(terms: &mut [f64]) -> f64 {
    terms.sort_unstable_by(f64::total_cmp);
    let mut acc = 0.0;
    for &t in terms.iter() {
        acc += t;
    }
    acc
}

/// Per-location channel dot product between a level and the query.
fn scores_for_level(level: &FeatureMap, query: &FeatureMap) -> Vec<f64> {
    let (w, h, c) = query.shape();
    let n = w * h;
    let mut out = vec![0.0; n];
    let mut lane = vec![0.0; c];
    for p in 0..n {
        for (ch, slot) in lane.iter_mut().enumerate() {
            *slot = level.data()[ch * n + p] * query.data()[ch * n + p];
        }
        out[p] = pairwise_sum(&lane);
    }
    out
}

/// Softmax across levels at each location, max-subtracted for stability.
fn softmax_weights(scores: &[Vec<f64>], n: usize) -> Vec<Vec<f64>> {
    let levels = scores.len();
    let mut weights = vec![vec![0.0; n]; levels];
    let mut exps = vec![0.0; levels];
    for p in 0..n {
        let mut max = f64::NEG_INFINITY;
        for s in scores {
            if s[p] > max {
                max = s[p];
            }
        }
        for (l, s) in scores.iter().enumerate() {
            exps[l] = libm::exp(s[p] - max);
        }
        let mut denom_terms = exps.clone();
        let denom = sorted_sum(&mut denom_terms);
        for l in 0..levels {
            weights[l][p] = exps[l] / denom;
        }
    }
    weights
}

/// Blend the levels with softmax'd dot-product scores against the query.
/// With a single level the output is that level, bit for bit.
pub fn attention_forward(levels: &[FeatureMap], query: &FeatureMap) -> Result<AttentionForward> {
    validate(levels, query)?;
    let (w, h, c) = query.shape();
    let n = w * h;
    let num_levels = levels.len();

    let scores: Vec<Vec<f64>> = levels
        .iter()
        .map(|level| scores_for_level(level, query))
        .collect();
    let weights = softmax_weights(&scores, n);

    let mut out = vec![0.0; n * c];
    let mut terms = vec![0.0; num_levels];
    for ch in 0..c {
        for p in 0..n {
            for (l, level) in levels.iter().enumerate() {
                terms[l] = weights[l][p] * level.data()[ch * n + p];
            }
            out[ch * n + p] = sorted_sum(&mut terms);
        }
    }

    let mut weight_data = Vec::with_capacity(num_levels * n);
    for wplane in &weights {
        weight_data.extend_from_slice(wplane);
    }
    Ok(AttentionForward {
        output: FeatureMap::new(w, h, c, out)?,
        weights: FeatureMap::new(w, h, num_levels, weight_data)?,
    })
}

/// Gradients of the blend with respect to every level and the query, given
/// the upstream gradient of the output.
///
/// With `gw_l = sum_c g f_l` (per location):
///   `ds_l = w_l * (gw_l - sum_m w_m gw_m)`
///   `df_l = w_l * g + ds_l * q`
///   `dq   = sum_l ds_l * f_l`
///
/// A single level collapses to `df = g`, `dq = 0` exactly.
pub fn attention_backward(
    levels: &[FeatureMap],
    query: &FeatureMap,
    upstream: &FeatureMap,
) -> Result<AttentionGrads> {
    validate(levels, query)?;
    expect_same_shape("attention upstream gradient", query, upstream)?;
    let (w, h, c) = query.shape();
    let n = w * h;
    let num_levels = levels.len();

    let scores: Vec<Vec<f64>> = levels
        .iter()
        .map(|level| scores_for_level(level, query))
        .collect();
    let weights = softmax_weights(&scores, n);
    let grad_dots: Vec<Vec<f64>> = levels
        .iter()
        .map(|level| scores_for_level(level, upstream))
        .collect();

    // ds_l per location.
    let mut ds = vec![vec![0.0; n]; num_levels];
    let mut terms = vec![0.0; num_levels];
    for p in 0..n {
        for l in 0..num_levels {
            terms[l] = weights[l][p] * grad_dots[l][p];
        }
        let mix = sorted_sum(&mut terms);
        for l in 0..num_levels {
            ds[l][p] = weights[l][p] * (grad_dots[l][p] - mix);
        }
    }

    let mut d_levels = Vec::with_capacity(num_levels);
    for l in 0..num_levels {
        let mut d = vec![0.0; n * c];
        for ch in 0..c {
            for p in 0..n {
                d[ch * n + p] =
                    weights[l][p] * upstream.data()[ch * n + p] + ds[l][p] * query.data()[ch * n + p];
            }
        }
        d_levels.push(FeatureMap::new(w, h, c, d)?);
    }

    let mut dq = vec![0.0; n * c];
    for ch in 0..c {
        for p in 0..n {
            for (l, level) in levels.iter().enumerate() {
                terms[l] = ds[l][p] * level.data()[ch * n + p];
            }
            dq[ch * n + p] = sorted_sum(&mut terms);
        }
    }

    Ok(AttentionGrads {
        d_levels,
        d_query: FeatureMap::new(w, h, c, dq)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn fm(w: usize, h: usize, c: usize, vals: &[f64]) -> FeatureMap {
        FeatureMap::new(w, h, c, vals.to_vec()).unwrap()
    }

    fn random_fm(w: usize, h: usize, c: usize, rng: &mut SeededRng) -> FeatureMap {
        FeatureMap::new(w, h, c, (0..w * h * c).map(|_| rng.uniform_f64() * 2.0 - 1.0).collect())
            .unwrap()
    }

    #[test]
    fn two_level_probe() {
        // Scores 1 and 0; softmax gives (e/(e+1), 1/(e+1)).
        let levels = [fm(1, 1, 1, &[1.0]), fm(1, 1, 1, &[0.0])];
        let query = fm(1, 1, 1, &[1.0]);
        let fwd = attention_forward(&levels, &query).unwrap();
        let w0 = fwd.weights.get(0, 0, 0);
        let w1 = fwd.weights.get(1, 0, 0);
        assert!((w0 - 0.73105857863000488).abs() < 1e-12, "{w0}");
        assert!((w1 - 0.26894142136999512).abs() < 1e-12, "{w1}");
        assert!((fwd.output.get(0, 0, 0) - 0.73105857863000488).abs() < 1e-12);
    }

    #[test]
    fn weights_sum_to_one() {
        let mut rng = SeededRng::new(3);
        let levels: Vec<FeatureMap> = (0..4).map(|_| random_fm(5, 4, 8, &mut rng)).collect();
        let query = random_fm(5, 4, 8, &mut rng);
        let fwd = attention_forward(&levels, &query).unwrap();
        for p in 0..20 {
            let total: f64 = (0..4).map(|l| fwd.weights.plane(l)[p]).sum();
            assert!((total - 1.0).abs() < 1e-12, "{total}");
        }
    }

    #[test]
    fn single_level_passthrough_is_bit_exact() {
        let mut rng = SeededRng::new(9);
        let level = random_fm(6, 3, 5, &mut rng);
        let query = random_fm(6, 3, 5, &mut rng);
        let fwd = attention_forward(core::slice::from_ref(&level), &query).unwrap();
        assert_eq!(fwd.output, level);
        assert!(fwd.weights.data().iter().all(|&w| w == 1.0));

        let upstream = random_fm(6, 3, 5, &mut rng);
        let grads =
            attention_backward(core::slice::from_ref(&level), &query, &upstream).unwrap();
        assert_eq!(grads.d_levels[0], upstream);
        assert!(grads.d_query.data().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn permutation_invariance_is_exact() {
        let mut rng = SeededRng::new(21);
        let levels: Vec<FeatureMap> = (0..4).map(|_| random_fm(4, 4, 8, &mut rng)).collect();
        let query = random_fm(4, 4, 8, &mut rng);
        let base = attention_forward(&levels, &query).unwrap();

        let perm = [2usize, 0, 3, 1];
        let shuffled: Vec<FeatureMap> = perm.iter().map(|&i| levels[i].clone()).collect();
        let out = attention_forward(&shuffled, &query).unwrap();
        assert_eq!(out.output, base.output);
        for (slot, &src) in perm.iter().enumerate() {
            assert_eq!(out.weights.plane(slot), base.weights.plane(src));
        }
    }

    #[test]
    fn output_stays_in_level_hull() {
        let mut rng = SeededRng::new(40);
        let levels: Vec<FeatureMap> = (0..3).map(|_| random_fm(4, 4, 4, &mut rng)).collect();
        let query = random_fm(4, 4, 4, &mut rng);
        let fwd = attention_forward(&levels, &query).unwrap();
        let n = 16;
        for ch in 0..4 {
            for p in 0..n {
                let vals: Vec<f64> = levels.iter().map(|l| l.plane(ch)[p]).collect();
                let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let v = fwd.output.plane(ch)[p];
                assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
            }
        }
    }

    #[test]
    fn scaling_query_sharpens_weights() {
        let mut rng = SeededRng::new(55);
        let levels: Vec<FeatureMap> = (0..3).map(|_| random_fm(3, 3, 6, &mut rng)).collect();
        let query = random_fm(3, 3, 6, &mut rng);
        let mut hot = query.clone();
        for v in hot.data_mut() {
            *v *= 3.0;
        }
        let cold = attention_forward(&levels, &query).unwrap();
        let sharp = attention_forward(&levels, &hot).unwrap();
        for p in 0..9 {
            let max_cold = (0..3).map(|l| cold.weights.plane(l)[p]).fold(0.0, f64::max);
            let max_sharp = (0..3).map(|l| sharp.weights.plane(l)[p]).fold(0.0, f64::max);
            assert!(max_sharp >= max_cold - 1e-12);
        }
    }

    /// Central finite difference of the scalar loss sum(output * probe).
    fn fd_check(levels: &[FeatureMap], query: &FeatureMap, probe: &FeatureMap, tol: f64) {
        let grads = attention_backward(levels, query, probe).unwrap();
        let eps = 1e-6;
        let loss = |levels: &[FeatureMap], query: &FeatureMap| -> f64 {
            let out = attention_forward(levels, query).unwrap().output;
            out.data()
                .iter()
                .zip(probe.data())
                .map(|(o, p)| o * p)
                .sum()
        };
        // Check every query element and a few level elements.
        for i in 0..query.data().len() {
            let mut plus = query.clone();
            plus.data_mut()[i] += eps;
            let mut minus = query.clone();
            minus.data_mut()[i] -= eps;
            let numeric = (loss(levels, &plus) - loss(levels, &minus)) / (2.0 * eps);
            let analytic = grads.d_query.data()[i];
            let denom = numeric.abs().max(analytic.abs()).max(1.0);
            assert!(
                (numeric - analytic).abs() / denom < tol,
                "dq[{i}]: fd {numeric} vs {analytic}"
            );
        }
        for l in 0..levels.len() {
            for i in (0..levels[l].data().len()).step_by(3) {
                let mut plus = levels.to_vec();
                plus[l].data_mut()[i] += eps;
                let mut minus = levels.to_vec();
                minus[l].data_mut()[i] -= eps;
                let numeric = (loss(&plus, query) - loss(&minus, query)) / (2.0 * eps);
                let analytic = grads.d_levels[l].data()[i];
                let denom = numeric.abs().max(analytic.abs()).max(1.0);
                assert!(
                    (numeric - analytic).abs() / denom < tol,
                    "df[{l}][{i}]: fd {numeric} vs {analytic}"
                );
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = SeededRng::new(77);
        for _ in 0..3 {
            let levels: Vec<FeatureMap> = (0..3).map(|_| random_fm(2, 2, 4, &mut rng)).collect();
            let query = random_fm(2, 2, 4, &mut rng);
            let probe = random_fm(2, 2, 4, &mut rng);
            fd_check(&levels, &query, &probe, 1e-5);
        }
    }

    #[test]
    fn shape_mismatches_are_rejected() {
        let a = FeatureMap::zeros(2, 2, 3);
        let b = FeatureMap::zeros(2, 2, 4);
        assert!(attention_forward(core::slice::from_ref(&a), &b).is_err());
        assert!(attention_forward(&[], &a).is_err());
        let g = FeatureMap::zeros(2, 3, 3);
        assert!(attention_backward(core::slice::from_ref(&a), &a, &g).is_err());
    }
}

//! The `kernel-check` property suite.
//!
//! Runs the reference-kernel invariants that the library promises and
//! reports one pass/fail line per invariant. This is a quick field check
//! of a build, not a replacement for the test suite; each check is a
//! reduced version of the corresponding integration test.

use neuricam_core::color::{lab_to_rgb8, rgb8_to_lab};
use neuricam_core::frame::{ColorSpace, Frame, StreamKind};
use neuricam_core::geometry::Homography;
use neuricam_core::nn::blocks::{
    charbonnier, pixel_shuffle, pixel_unshuffle, CharbonnierMode, Conv3x3, ResidualBlock,
    CHARBONNIER_EPSILON,
};
use neuricam_core::nn::attention::{attention_backward, attention_forward};
use neuricam_core::nn::FeatureMap;
use neuricam_core::repair::repair;
use neuricam_core::rng::SeededRng;
use neuricam_core::wire::{packetize, reassemble, FrameGeometry, LossMap, Packet, FOOTER};

pub struct CheckResult {
    pub name: &'static str,
    pub detail: Result<(), String>,
}

fn check(name: &'static str, f: impl FnOnce() -> Result<(), String>) -> CheckResult {
    CheckResult { name, detail: f() }
}

fn fail(detail: impl Into<String>) -> Result<(), String> {
    Err(detail.into())
}

fn random_map(w: usize, h: usize, c: usize, rng: &mut SeededRng) -> FeatureMap {
    let data = (0..w * h * c).map(|_| rng.gaussian()).collect();
    FeatureMap::new(w, h, c, data).expect("shape")
}

fn homography_estimation() -> Result<(), String> {
    let mut rng = SeededRng::new(0x6b65726e);
    for case in 0..200 {
        let m = [
            [
                1.0 + 0.2 * rng.gaussian(),
                0.2 * rng.gaussian(),
                10.0 * rng.gaussian(),
            ],
            [
                0.2 * rng.gaussian(),
                1.0 + 0.2 * rng.gaussian(),
                10.0 * rng.gaussian(),
            ],
            [0.001 * rng.gaussian(), 0.001 * rng.gaussian(), 1.0],
        ];
        let truth = match Homography::new(m) {
            Ok(h) => h,
            Err(_) => continue,
        };
        let src = [(0.0, 0.0), (100.0, 0.0), (100.0, 80.0), (0.0, 80.0)];
        let mut dst = [(0.0, 0.0); 4];
        let mut ok = true;
        for (i, &(x, y)) in src.iter().enumerate() {
            match truth.apply(x, y) {
                Some(p) => dst[i] = p,
                None => ok = false,
            }
        }
        if !ok {
            continue;
        }
        let est = Homography::from_points(&src, &dst)
            .map_err(|e| format!("case {case}: {e}"))?;
        let diff = est.max_abs_diff(&truth);
        if diff > 1e-8 {
            return fail(format!("case {case}: matrix error {diff:.3e} > 1e-8"));
        }
    }
    Ok(())
}

fn homography_exact_and_inverse() -> Result<(), String> {
    let src = [(0.0, 0.0), (10.0, 0.0), (10.0, 10.0), (0.0, 10.0)];
    let identity = Homography::from_points(&src, &src).map_err(|e| e.to_string())?;
    if identity.max_abs_diff(&Homography::identity()) > 1e-12 {
        return fail("identity estimate off by more than 1e-12");
    }
    let shifted = [(3.0, -2.0), (13.0, -2.0), (13.0, 8.0), (3.0, 8.0)];
    let translation = Homography::from_points(&src, &shifted).map_err(|e| e.to_string())?;
    if translation.max_abs_diff(&Homography::translation(3.0, -2.0)) > 1e-12 {
        return fail("translation estimate off by more than 1e-12");
    }
    let mut rng = SeededRng::new(7);
    for case in 0..100 {
        let h = Homography::new([
            [1.0 + 0.1 * rng.gaussian(), 0.1 * rng.gaussian(), rng.gaussian()],
            [0.1 * rng.gaussian(), 1.0 + 0.1 * rng.gaussian(), rng.gaussian()],
            [0.0005 * rng.gaussian(), 0.0005 * rng.gaussian(), 1.0],
        ])
        .map_err(|e| e.to_string())?;
        let inv = h.inverse().map_err(|e| e.to_string())?;
        let round = h.compose(&inv).map_err(|e| e.to_string())?;
        let diff = round.max_abs_diff(&Homography::identity());
        if diff > 1e-9 {
            return fail(format!("case {case}: forward-inverse error {diff:.3e} > 1e-9"));
        }
    }
    Ok(())
}

fn attention_invariants() -> Result<(), String> {
    let mut rng = SeededRng::new(21);
    let (w, h, c) = (4, 3, 5);
    let levels: Vec<FeatureMap> = (0..3).map(|_| random_map(w, h, c, &mut rng)).collect();
    let query = random_map(w, h, c, &mut rng);
    let fwd = attention_forward(&levels, &query).map_err(|e| e.to_string())?;
    for p in 0..w * h {
        let sum: f64 = (0..levels.len()).map(|l| fwd.weights.data()[l * w * h + p]).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return fail(format!("weight sum {sum} at location {p}"));
        }
    }
    let single = attention_forward(core::slice::from_ref(&levels[0]), &query)
        .map_err(|e| e.to_string())?;
    if single.output.data() != levels[0].data() {
        return fail("single level is not a bit-exact passthrough");
    }
    let mut reversed = levels.clone();
    reversed.reverse();
    let fwd_rev = attention_forward(&reversed, &query).map_err(|e| e.to_string())?;
    if fwd.output.data() != fwd_rev.output.data() {
        return fail("output changed under level permutation");
    }
    Ok(())
}

fn attention_gradients() -> Result<(), String> {
    let mut rng = SeededRng::new(93);
    let (w, h, c) = (3, 3, 4);
    let levels: Vec<FeatureMap> = (0..3).map(|_| random_map(w, h, c, &mut rng)).collect();
    let query = random_map(w, h, c, &mut rng);
    let upstream = random_map(w, h, c, &mut rng);
    let grads =
        attention_backward(&levels, &query, &upstream).map_err(|e| e.to_string())?;

    // Loss = <upstream, output>; directional derivative by central FD.
    let loss = |levels: &[FeatureMap], query: &FeatureMap| -> f64 {
        let out = attention_forward(levels, query).expect("forward");
        out.output
            .data()
            .iter()
            .zip(upstream.data())
            .map(|(o, u)| o * u)
            .sum()
    };
    // Probe along whole random directions rather than single coordinates:
    // the directional derivative has the magnitude of the full gradient,
    // so the relative comparison is not at the mercy of FD roundoff on
    // coordinates where the gradient happens to vanish.
    let eps = 1e-5;
    let dot =
        |a: &FeatureMap, b: &FeatureMap| -> f64 { a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum() };
    for probe in 0..8 {
        let on_query = probe % 2 == 0;
        let (plus, minus, analytic) = if on_query {
            let dir = random_map(w, h, c, &mut rng);
            let mut qp = query.clone();
            let mut qm = query.clone();
            for (i, d) in dir.data().iter().enumerate() {
                qp.data_mut()[i] += eps * d;
                qm.data_mut()[i] -= eps * d;
            }
            (loss(&levels, &qp), loss(&levels, &qm), dot(&grads.d_query, &dir))
        } else {
            let dirs: Vec<FeatureMap> =
                (0..levels.len()).map(|_| random_map(w, h, c, &mut rng)).collect();
            let mut lp = levels.to_vec();
            let mut lm = levels.to_vec();
            for (l, dir) in dirs.iter().enumerate() {
                for (i, d) in dir.data().iter().enumerate() {
                    lp[l].data_mut()[i] += eps * d;
                    lm[l].data_mut()[i] -= eps * d;
                }
            }
            let analytic = dirs
                .iter()
                .zip(&grads.d_levels)
                .map(|(dir, g)| dot(g, dir))
                .sum();
            (loss(&lp, &query), loss(&lm, &query), analytic)
        };
        let numeric = (plus - minus) / (2.0 * eps);
        let denom = numeric.abs().max(analytic.abs()).max(1e-6);
        let rel = (numeric - analytic).abs() / denom;
        if rel > 1e-4 {
            return fail(format!(
                "probe {probe}: analytic {analytic:.9} vs numeric {numeric:.9} (rel {rel:.3e})"
            ));
        }
    }
    Ok(())
}

fn charbonnier_and_shuffle() -> Result<(), String> {
    let zero = FeatureMap::zeros(6, 5, 2);
    let v = charbonnier(&zero, &zero, CharbonnierMode::Element, CHARBONNIER_EPSILON)
        .map_err(|e| e.to_string())?;
    if v != CHARBONNIER_EPSILON {
        return fail(format!("charbonnier at zero is {v}, want exactly 1e-3"));
    }
    let mut rng = SeededRng::new(4242);
    let packed = random_map(16, 12, 48, &mut rng);
    let wide = pixel_shuffle(&packed, 4).map_err(|e| e.to_string())?;
    if wide.shape() != (64, 48, 3) {
        return fail(format!("pixel_shuffle shape {:?}", wide.shape()));
    }
    let back = pixel_unshuffle(&wide, 4).map_err(|e| e.to_string())?;
    if back.data() != packed.data() {
        return fail("pixel shuffle round trip is not bit exact");
    }
    let block = ResidualBlock::new(Conv3x3::zeros(2, 3), Conv3x3::zeros(3, 2))
        .map_err(|e| e.to_string())?;
    let input = random_map(6, 5, 2, &mut rng);
    let out = block.apply(&input).map_err(|e| e.to_string())?;
    if out.data() != input.data() {
        return fail("zero-weight residual block is not the identity");
    }
    Ok(())
}

fn lab_roundtrip() -> Result<(), String> {
    if rgb8_to_lab(255, 255, 255) != (100.0, 0.0, 0.0) {
        return fail(format!("white maps to {:?}", rgb8_to_lab(255, 255, 255)));
    }
    // Sampled lattice; the full 32^3 grid runs in the acceptance suite.
    for r in (0..=255u16).step_by(17) {
        for g in (0..=255u16).step_by(17) {
            for b in (0..=255u16).step_by(17) {
                let (r, g, b) = (r as u8, g as u8, b as u8);
                let (l, a, bb) = rgb8_to_lab(r, g, b);
                let (r2, g2, b2) = lab_to_rgb8(l, a, bb);
                let err = (r as i16 - r2 as i16)
                    .abs()
                    .max((g as i16 - g2 as i16).abs())
                    .max((b as i16 - b2 as i16).abs());
                if err > 1 {
                    return fail(format!(
                        "({r},{g},{b}) -> ({r2},{g2},{b2}): error {err} > 1 LSB"
                    ));
                }
            }
        }
    }
    Ok(())
}

fn wire_roundtrip() -> Result<(), String> {
    let mut rng = SeededRng::new(5150);
    let (w, h) = (40, 30);
    let data: Vec<u8> = (0..w * h).map(|_| (rng.next_u64() & 0xff) as u8).collect();
    let frame = Frame::from_bytes(ColorSpace::Gray8, StreamKind::LowRes, w, h, data)
        .map_err(|e| e.to_string())?
        .with_index(3)
        .with_timestamp(123456);
    let packets = packetize(&frame).map_err(|e| e.to_string())?;
    let bytes: Vec<Vec<u8>> = packets.iter().map(|p| p.encode()).collect();
    let decoded: Vec<Packet> = bytes
        .iter()
        .map(|b| Packet::decode(b))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let terminal = decoded.last().expect("terminal packet");
    if terminal.payload[4..] != FOOTER {
        return fail(format!("terminal footer {:?}", &terminal.payload[4..]));
    }
    let geom = FrameGeometry {
        width: w,
        height: h,
        colorspace: ColorSpace::Gray8,
    };
    let got = reassemble(&decoded, &geom, StreamKind::LowRes).map_err(|e| e.to_string())?;
    if !got.frame.same_samples(&frame) || !got.loss.is_empty() {
        return fail("reassembled frame differs from the original");
    }
    if got.timestamp_ms != Some(123456) {
        return fail(format!("timestamp {:?}", got.timestamp_ms));
    }
    Ok(())
}

fn repair_identities() -> Result<(), String> {
    let mut rng = SeededRng::new(808);
    let data: Vec<u8> = (0..32 * 24).map(|_| (rng.next_u64() & 0xff) as u8).collect();
    let frame = Frame::from_bytes(ColorSpace::Gray8, StreamKind::LowRes, 32, 24, data)
        .map_err(|e| e.to_string())?;
    let out = repair(&frame, &LossMap::empty()).map_err(|e| e.to_string())?;
    if !out.frame.same_samples(&frame) {
        return fail("empty loss map changed the frame");
    }
    let constant = Frame::from_bytes(
        ColorSpace::Gray8,
        StreamKind::LowRes,
        32,
        24,
        vec![137; 32 * 24],
    )
    .map_err(|e| e.to_string())?;
    let mut damaged = constant.clone();
    for x in 0..32 {
        damaged.plane_u8_mut(0)[10 * 32 + x] = 0;
        damaged.plane_u8_mut(0)[11 * 32 + x] = 0;
    }
    let repaired = repair(&damaged, &LossMap::from_lines([10u16, 11]))
        .map_err(|e| e.to_string())?;
    if !repaired.frame.same_samples(&constant) {
        return fail("constant frame not restored exactly");
    }
    Ok(())
}

/// Run every invariant; the bool is true when all passed.
pub fn run_all() -> (Vec<CheckResult>, bool) {
    let results = vec![
        check("homography.four-point-estimation", homography_estimation),
        check("homography.exact-and-inverse", homography_exact_and_inverse),
        check("attention.normalization-and-permutation", attention_invariants),
        check("attention.gradients-vs-finite-differences", attention_gradients),
        check("blocks.charbonnier-and-pixel-shuffle", charbonnier_and_shuffle),
        check("color.lab-roundtrip", lab_roundtrip),
        check("wire.packet-roundtrip", wire_roundtrip),
        check("repair.identity-and-constant", repair_identities),
    ];
    let ok = results.iter().all(|r| r.detail.is_ok());
    (results, ok)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_invariant_passes() {
        let (results, ok) = run_all();
        for r in &results {
            if let Err(e) = &r.detail {
                panic!("{} failed: {e}", r.name);
            }
        }
        assert!(ok);
        assert_eq!(results.len(), 8);
    }
}

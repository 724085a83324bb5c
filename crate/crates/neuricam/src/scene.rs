//! Deterministic synthetic scenes.
//!
//! Everything here is a pure function of its seed: band-limited cosine
//! fields sampled per pixel, so a panning sequence really is the same
//! continuous image re-sampled at shifted positions (no resampling error
//! sneaks in). Used by the test suites and handy for demos; real footage
//! enters the pipeline as PNG directories instead.

use neuricam_core::frame::{ColorSpace, Frame, StreamKind};
use neuricam_core::math::quantize_u8;
use neuricam_core::rng::SeededRng;

struct Harmonic {
    fx: f64,
    fy: f64,
    phase: f64,
    amp: f64,
}

/// A sum of random cosines with at most `cycles_x` / `cycles_y` periods
/// across the image, normalized to [-1, 1].
struct Field {
    terms: Vec<Harmonic>,
    norm: f64,
    w: f64,
    h: f64,
}

impl Field {
    fn new(rng: &mut SeededRng, w: usize, h: usize, count: usize, cycles_x: f64, cycles_y: f64) -> Self {
        let mut terms = Vec::with_capacity(count);
        let mut norm = 0.0;
        for _ in 0..count {
            let amp = 0.4 + 0.6 * rng.uniform_f64();
            norm += amp;
            terms.push(Harmonic {
                fx: (2.0 * rng.uniform_f64() - 1.0) * cycles_x,
                fy: (2.0 * rng.uniform_f64() - 1.0) * cycles_y,
                phase: rng.uniform_f64() * core::f64::consts::TAU,
                amp,
            });
        }
        Field {
            terms,
            norm,
            w: w as f64,
            h: h as f64,
        }
    }

    fn at(&self, x: f64, y: f64) -> f64 {
        let mut acc = 0.0;
        for t in &self.terms {
            acc += t.amp
                * libm::cos(core::f64::consts::TAU * (t.fx * x / self.w + t.fy * y / self.h) + t.phase);
        }
        acc / self.norm
    }
}

/// A colorful smooth scene sampler: three channels sharing a base field so
/// the result looks like one object, plus per-channel variation so chroma
/// is nontrivial everywhere.
pub struct Scene {
    base: Field,
    per_channel: [Field; 3],
    detail: Field,
    detail_amp: f64,
}

impl Scene {
    /// Smooth scene: large structures only. Survives 4x downsampling well.
    pub fn smooth(w: usize, h: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        Scene {
            base: Field::new(&mut rng, w, h, 6, 2.0, 2.0),
            per_channel: [
                Field::new(&mut rng, w, h, 4, 1.5, 1.5),
                Field::new(&mut rng, w, h, 4, 1.5, 1.5),
                Field::new(&mut rng, w, h, 4, 1.5, 1.5),
            ],
            detail: Field::new(&mut rng, w, h, 4, 4.0, 4.0),
            detail_amp: 0.15,
        }
    }

    /// Textured scene: adds a mid-frequency octave, for images that should
    /// look less like a gradient and more like a photograph.
    pub fn textured(w: usize, h: usize, seed: u64) -> Self {
        let mut rng = SeededRng::new(seed);
        Scene {
            base: Field::new(&mut rng, w, h, 8, 3.0, 2.5),
            per_channel: [
                Field::new(&mut rng, w, h, 5, 2.5, 2.0),
                Field::new(&mut rng, w, h, 5, 2.5, 2.0),
                Field::new(&mut rng, w, h, 5, 2.5, 2.0),
            ],
            detail: Field::new(&mut rng, w, h, 10, 9.0, 6.0),
            detail_amp: 0.35,
        }
    }

    /// Render one frame with the sampling grid shifted by `offset_x`
    /// pixels (the camera pans right as the offset grows).
    pub fn render(&self, w: usize, h: usize, offset_x: f64) -> Frame {
        let n = w * h;
        let mut data = Vec::with_capacity(3 * n);
        for c in 0..3 {
            for y in 0..h {
                for x in 0..w {
                    let (fx, fy) = (x as f64 + offset_x, y as f64);
                    let v = 0.55 * self.base.at(fx, fy)
                        + 0.45 * self.per_channel[c].at(fx, fy)
                        + self.detail_amp * self.detail.at(fx, fy);
                    data.push(quantize_u8(127.5 + 85.0 * v));
                }
            }
        }
        Frame::from_bytes(ColorSpace::Srgb8, StreamKind::GroundTruth, w, h, data)
            .expect("scene shape is consistent")
    }
}

/// `n` identical frames of a smooth colorful scene.
pub fn static_scene(w: usize, h: usize, n: usize, seed: u64) -> Vec<Frame> {
    let scene = Scene::smooth(w, h, seed);
    let frame = scene.render(w, h, 0.0);
    (0..n)
        .map(|i| frame.clone().with_index(i as u32))
        .collect()
}

/// `n` frames panning right by `step` pixels per frame over a smooth
/// scene. Content shifts exactly; nothing else changes.
pub fn panning_scene(w: usize, h: usize, n: usize, step: f64, seed: u64) -> Vec<Frame> {
    let scene = Scene::smooth(w, h, seed);
    (0..n)
        .map(|i| scene.render(w, h, i as f64 * step).with_index(i as u32))
        .collect()
}

/// One textured still, the corpus generator for committed test images.
pub fn natural_image(w: usize, h: usize, seed: u64) -> Frame {
    Scene::textured(w, h, seed).render(w, h, 0.0)
}

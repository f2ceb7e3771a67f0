//! Coordinate bookkeeping under crop + flip, checked against direct
//! pixel-space arithmetic that never touches the transform code's own
//! coordinate math.

use lytnet::classes::LightClass;
use lytnet::data::{color_jitter, horizontal_flip, random_crop, JitterConfig, Sample};
use lytnet::tensor::Tensor;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn build_sample(w: usize, h: usize, coords: [f64; 4], fill_seed: u64) -> Sample {
    let mut rng = ChaCha8Rng::seed_from_u64(fill_seed);
    let data: Vec<f32> = (0..3 * h * w).map(|_| rng.random_range(0.0..1.0)).collect();
    Sample {
        image: Tensor::from_vec(3, h, w, data).unwrap(),
        class: LightClass::Red,
        coords,
    }
}

/// Replays the crop offset choice exactly as the transform draws it.
fn crop_offsets(seed: u64, w: usize, h: usize, tw: usize, th: usize) -> (usize, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ox = rng.random_range(0..=w - tw);
    let oy = rng.random_range(0..=h - th);
    (ox, oy)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn crop_then_flip_matches_pixel_space_bookkeeping(
        seed in 0u64..10_000,
        fill in 0u64..10_000,
        xs in 0.0f64..1.0,
        ys in 0.0f64..1.0,
        xe in 0.0f64..1.0,
        ye in 0.0f64..1.0,
    ) {
        let (w, h) = (876usize, 657usize);
        let (tw, th) = (768usize, 576usize);
        let sample = build_sample(w, h, [xs, ys, xe, ye], fill);

        let cropped = random_crop(&sample, tw, th, seed).unwrap();
        let flipped = horizontal_flip(&cropped, 1.0, seed + 1);

        // direct pixel-space route: original normalized point -> source
        // pixels -> crop frame with clamping -> mirrored normalized
        let (ox, oy) = crop_offsets(seed, w, h, tw, th);
        let direct = |nx: f64, ny: f64| -> (f64, f64) {
            let px = nx * w as f64 - ox as f64;
            let py = ny * h as f64 - oy as f64;
            let cx = (px / tw as f64).clamp(0.0, 1.0);
            let cy = (py / th as f64).clamp(0.0, 1.0);
            (1.0 - cx, cy)
        };
        let (ex_s, ey_s) = direct(xs, ys);
        let (ex_e, ey_e) = direct(xe, ye);

        prop_assert!((flipped.coords[0] - ex_s).abs() < 1e-9);
        prop_assert!((flipped.coords[1] - ey_s).abs() < 1e-9);
        prop_assert!((flipped.coords[2] - ex_e).abs() < 1e-9);
        prop_assert!((flipped.coords[3] - ey_e).abs() < 1e-9);

        // coordinates stay in the unit square throughout
        for c in flipped.coords {
            prop_assert!((0.0..=1.0).contains(&c));
        }
        for c in cropped.coords {
            prop_assert!((0.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn seeded_pipeline_is_bitwise_reproducible(
        seed in 0u64..10_000,
        fill in 0u64..10_000,
    ) {
        let sample = build_sample(100, 80, [0.3, 0.8, 0.6, 0.2], fill);
        let pipeline = |sample: &Sample| -> Sample {
            let cropped = random_crop(sample, 90, 70, seed).unwrap();
            let flipped = horizontal_flip(&cropped, 0.5, seed ^ 0xA5A5);
            color_jitter(&flipped, &JitterConfig::default(), seed ^ 0x5A5A).unwrap()
        };
        let a = pipeline(&sample);
        let b = pipeline(&sample);
        let bits = |s: &Sample| -> Vec<u32> {
            s.image.data().iter().map(|v| v.to_bits()).collect()
        };
        prop_assert_eq!(bits(&a), bits(&b));
        prop_assert_eq!(a.coords, b.coords);
    }
}

//! Segmentation-based image augmentation and a synthetic feature-space dataset.
//!
//! The image chain is: blur the cut-out object, draw a Gaussian-noise
//! background, paste the object at a random location through its binary mask.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::{FeatureDataset, FeatureRow};
use crate::grasp::{GraspDistribution, NUM_GRASPS};
use crate::head::softmax;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AugmentError {
    #[error("pixel grid: {0}")]
    InvalidGrid(&'static str),
    #[error("mask: {0}")]
    InvalidMask(&'static str),
    #[error("object of {obj_w}x{obj_h} at ({x}, {y}) does not fit a {bg_w}x{bg_h} background")]
    PlacementOutOfBounds { x: usize, y: usize, obj_w: usize, obj_h: usize, bg_w: usize, bg_h: usize },
    #[error("object has {object} channels but background has {background}")]
    ChannelMismatch { object: u8, background: u8 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Row-major 8-bit image with one (gray) or three (RGB) interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PixelGrid {
    width: usize,
    height: usize,
    channels: u8,
    data: Vec<u8>,
}

impl PixelGrid {
    pub fn new(width: usize, height: usize, channels: u8, data: Vec<u8>) -> Result<Self, AugmentError> {
        if width == 0 || height == 0 {
            return Err(AugmentError::InvalidGrid("width and height must be positive"));
        }
        if channels != 1 && channels != 3 {
            return Err(AugmentError::InvalidGrid("channels must be 1 or 3"));
        }
        if data.len() != width * height * channels as usize {
            return Err(AugmentError::InvalidGrid("data length does not match dimensions"));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn filled(width: usize, height: usize, channels: u8, value: u8) -> Result<Self, AugmentError> {
        Self::new(width, height, channels, vec![value; width * height * channels as usize])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> u8 {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    /// Samples of the pixel at column `x`, row `y`.
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let c = self.channels as usize;
        let i = (y * self.width + x) * c;
        &self.data[i..i + c]
    }

    fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [u8] {
        let c = self.channels as usize;
        let i = (y * self.width + x) * c;
        &mut self.data[i..i + c]
    }
}

/// A cut-out object: its image plus a same-sized binary mask
/// (255 marks object pixels, 0 background).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedObject {
    image: PixelGrid,
    mask: PixelGrid,
}

impl SegmentedObject {
    pub fn new(image: PixelGrid, mask: PixelGrid) -> Result<Self, AugmentError> {
        if mask.channels != 1 {
            return Err(AugmentError::InvalidMask("must have a single channel"));
        }
        if (mask.width, mask.height) != (image.width, image.height) {
            return Err(AugmentError::InvalidMask("extent differs from the image"));
        }
        if mask.data.iter().any(|&v| v != 0 && v != 255) {
            return Err(AugmentError::InvalidMask("values must be 0 or 255"));
        }
        if !mask.data.contains(&255) {
            return Err(AugmentError::InvalidMask("no object pixels"));
        }
        Ok(Self { image, mask })
    }

    pub fn image(&self) -> &PixelGrid {
        &self.image
    }

    pub fn mask(&self) -> &PixelGrid {
        &self.mask
    }

    pub fn mask_popcount(&self) -> usize {
        self.mask.data.iter().filter(|&&v| v == 255).count()
    }
}

fn to_u8(v: f64) -> u8 {
    libm::round(v).clamp(0.0, 255.0) as u8
}

/// Mid-gray Gaussian noise: every sample drawn from `N(128, sqrt(variance))`,
/// then rounded and clamped to `[0, 255]`.
pub fn gaussian_noise_background<R: Rng + ?Sized>(
    width: usize,
    height: usize,
    channels: u8,
    variance: f64,
    rng: &mut R,
) -> Result<PixelGrid, AugmentError> {
    if !variance.is_finite() || variance <= 0.0 {
        return Err(AugmentError::InvalidConfig("noise variance must be positive"));
    }
    let normal = Normal::new(128.0, libm::sqrt(variance)).map_err(|_| AugmentError::InvalidConfig("noise variance"))?;
    let mut grid = PixelGrid::filled(width, height, channels, 0)?;
    for v in &mut grid.data {
        *v = to_u8(normal.sample(rng));
    }
    Ok(grid)
}

/// Normalized 1-D Gaussian kernel of half-width `ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = libm::ceil(3.0 * sigma) as isize;
    let mut k: Vec<f64> = (-radius..=radius).map(|i| libm::exp(-((i * i) as f64) / (2.0 * sigma * sigma))).collect();
    let sum: f64 = k.iter().sum();
    for v in &mut k {
        *v /= sum;
    }
    k
}

/// Separable Gaussian blur with clamp-to-edge borders.
pub fn gaussian_blur(img: &PixelGrid, sigma: f64) -> Result<PixelGrid, AugmentError> {
    if !sigma.is_finite() || sigma <= 0.0 {
        return Err(AugmentError::InvalidConfig("blur sigma must be positive"));
    }
    let kernel = gaussian_kernel(sigma);
    let radius = (kernel.len() / 2) as isize;
    let (w, h, c) = (img.width as isize, img.height as isize, img.channels as usize);
    let at = |x: isize, y: isize| (y.clamp(0, h - 1) * w + x.clamp(0, w - 1)) as usize * c;

    let mut horizontal = vec![0.0; img.data.len()];
    for y in 0..h {
        for x in 0..w {
            let dst = (y * w + x) as usize * c;
            for (k, &kv) in kernel.iter().enumerate() {
                let src = at(x + k as isize - radius, y);
                for ch in 0..c {
                    horizontal[dst + ch] += kv * img.data[src + ch] as f64;
                }
            }
        }
    }
    let mut out = vec![0u8; img.data.len()];
    for y in 0..h {
        for x in 0..w {
            let dst = (y * w + x) as usize * c;
            for ch in 0..c {
                let acc: f64 = kernel
                    .iter()
                    .enumerate()
                    .map(|(k, &kv)| kv * horizontal[at(x, y + k as isize - radius) + ch])
                    .sum();
                out[dst + ch] = to_u8(acc);
            }
        }
    }
    PixelGrid::new(img.width, img.height, img.channels, out)
}

/// Blur with a sigma drawn uniformly from `sigma_range`.
pub fn random_blur<R: Rng + ?Sized>(
    img: &PixelGrid,
    sigma_range: (f64, f64),
    rng: &mut R,
) -> Result<PixelGrid, AugmentError> {
    gaussian_blur(img, sample_range(sigma_range, rng)?)
}

fn sample_range<R: Rng + ?Sized>((lo, hi): (f64, f64), rng: &mut R) -> Result<f64, AugmentError> {
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(AugmentError::InvalidConfig("ranges must satisfy 0 < lo <= hi"));
    }
    Ok(if lo == hi { lo } else { rng.random_range(lo..=hi) })
}

/// Pastes `obj` onto `bg` with its top-left corner at `(x, y)`.
/// Only pixels whose mask is 255 are written.
pub fn composite(obj: &SegmentedObject, bg: &PixelGrid, x: usize, y: usize) -> Result<PixelGrid, AugmentError> {
    composite_masked(&obj.image, &obj.mask, bg, x, y)
}

/// Same as [`composite`] for a raw image/mask pair. The mask may be empty,
/// in which case the background is returned unchanged.
pub fn composite_masked(
    image: &PixelGrid,
    mask: &PixelGrid,
    bg: &PixelGrid,
    x: usize,
    y: usize,
) -> Result<PixelGrid, AugmentError> {
    if mask.channels != 1 || (mask.width, mask.height) != (image.width, image.height) {
        return Err(AugmentError::InvalidMask("must be single-channel with the image extent"));
    }
    if image.channels != bg.channels {
        return Err(AugmentError::ChannelMismatch { object: image.channels, background: bg.channels });
    }
    let (ow, oh) = (image.width, image.height);
    if x + ow > bg.width || y + oh > bg.height {
        return Err(AugmentError::PlacementOutOfBounds { x, y, obj_w: ow, obj_h: oh, bg_w: bg.width, bg_h: bg.height });
    }
    let mut out = bg.clone();
    for oy in 0..oh {
        for ox in 0..ow {
            if mask.data[oy * ow + ox] == 255 {
                out.pixel_mut(x + ox, y + oy).copy_from_slice(image.pixel(ox, oy));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentConfig {
    pub output_w: usize,
    pub output_h: usize,
    pub blur_sigma_range: (f64, f64),
    /// Noise variance on the 0..255 sample scale.
    pub noise_variance_range: (f64, f64),
    pub copies_per_object: usize,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            output_w: 224,
            output_h: 224,
            blur_sigma_range: (0.5, 2.0),
            noise_variance_range: (25.0, 400.0),
            copies_per_object: 10,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if self.output_w == 0 || self.output_h == 0 {
            return Err(AugmentError::InvalidConfig("output extent must be positive"));
        }
        if self.copies_per_object == 0 {
            return Err(AugmentError::InvalidConfig("copies_per_object must be positive"));
        }
        for (lo, hi) in [self.blur_sigma_range, self.noise_variance_range] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(AugmentError::InvalidConfig("ranges must satisfy 0 < lo <= hi"));
            }
        }
        Ok(())
    }
}

/// Generator for the `index`-th output image; independent of evaluation order.
fn item_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Produces one augmented image of `obj` from the given generator.
pub fn augment_one<R: Rng + ?Sized>(
    obj: &SegmentedObject,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<PixelGrid, AugmentError> {
    let (ow, oh) = (obj.image.width, obj.image.height);
    if ow > cfg.output_w || oh > cfg.output_h {
        return Err(AugmentError::PlacementOutOfBounds {
            x: 0,
            y: 0,
            obj_w: ow,
            obj_h: oh,
            bg_w: cfg.output_w,
            bg_h: cfg.output_h,
        });
    }
    let blurred =
        SegmentedObject { image: random_blur(&obj.image, cfg.blur_sigma_range, rng)?, mask: obj.mask.clone() };
    let variance = sample_range(cfg.noise_variance_range, rng)?;
    let bg = gaussian_noise_background(cfg.output_w, cfg.output_h, obj.image.channels, variance, rng)?;
    let x = rng.random_range(0..=cfg.output_w - ow);
    let y = rng.random_range(0..=cfg.output_h - oh);
    composite(&blurred, &bg, x, y)
}

/// Expands every labeled object into `copies_per_object` augmented images,
/// in object-major order. Labels are copied unchanged.
pub fn augment_dataset(
    objects: &[(SegmentedObject, GraspDistribution)],
    cfg: &AugmentConfig,
) -> Result<Vec<(PixelGrid, GraspDistribution)>, AugmentError> {
    cfg.validate()?;
    let mut out = Vec::with_capacity(objects.len() * cfg.copies_per_object);
    for (i, (obj, label)) in objects.iter().enumerate() {
        out.extend(augment_copies(obj, i, cfg)?.into_iter().map(|img| (img, *label)));
    }
    Ok(out)
}

/// The `copies_per_object` images that [`augment_dataset`] produces for the
/// object at position `object_index`, so large sets can be streamed.
pub fn augment_copies(
    obj: &SegmentedObject,
    object_index: usize,
    cfg: &AugmentConfig,
) -> Result<Vec<PixelGrid>, AugmentError> {
    cfg.validate()?;
    (0..cfg.copies_per_object)
        .map(|k| {
            let index = (object_index * cfg.copies_per_object + k) as u64;
            augment_one(obj, cfg, &mut item_rng(cfg.seed, index))
        })
        .collect()
}

/// Stand-ins for segmented photographs: solid-colour ellipses on a black
/// image, each with a random label distribution. Object extents are drawn
/// from `min_size..=max_size` pixels.
pub fn synthetic_objects(
    n: usize,
    min_size: usize,
    max_size: usize,
    seed: u64,
) -> Result<Vec<(SegmentedObject, GraspDistribution)>, AugmentError> {
    if min_size == 0 || min_size > max_size {
        return Err(AugmentError::InvalidConfig("object sizes must satisfy 0 < min <= max"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let w = rng.random_range(min_size..=max_size);
            let h = rng.random_range(min_size..=max_size);
            let color: [u8; 3] = rng.random();
            let (cx, cy) = ((w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0);
            let (rx, ry) = (w as f64 / 2.0, h as f64 / 2.0);
            let mut mask = vec![0u8; w * h];
            for y in 0..h {
                for x in 0..w {
                    let (dx, dy) = ((x as f64 - cx) / rx, (y as f64 - cy) / ry);
                    if dx * dx + dy * dy <= 1.0 {
                        mask[y * w + x] = 255;
                    }
                }
            }
            let mut image = Vec::with_capacity(w * h * 3);
            for &m in &mask {
                image.extend_from_slice(if m == 255 { &color } else { &[0, 0, 0] });
            }
            let weights: [f64; NUM_GRASPS] = core::array::from_fn(|_| rng.random::<f64>() + 1e-3);
            let label = GraspDistribution::from_weights(weights).expect("positive weights");
            let obj = SegmentedObject::new(PixelGrid::new(w, h, 3, image)?, PixelGrid::new(w, h, 1, mask)?)?;
            Ok((obj, label))
        })
        .collect()
}

/// Synthetic features whose labels are a softmax of a hidden linear map.
///
/// A `5 x F` matrix `M` with standard-normal entries is drawn once; every
/// sample has standard-normal features `x` and label `softmax(M x / temperature)`.
/// Lower temperatures give peakier labels.
pub fn synthetic_toy_dataset(
    n_samples: usize,
    feature_dim: usize,
    temperature: f64,
    seed: u64,
) -> Result<FeatureDataset, AugmentError> {
    if n_samples < 10 {
        return Err(AugmentError::InvalidConfig("need at least 10 samples"));
    }
    if feature_dim < NUM_GRASPS {
        return Err(AugmentError::InvalidConfig("feature dimension must be at least 5"));
    }
    if !temperature.is_finite() || temperature <= 0.0 {
        return Err(AugmentError::InvalidConfig("temperature must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let map: Vec<f64> = (0..NUM_GRASPS * feature_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
    let rows = (0..n_samples)
        .map(|i| {
            let features: Vec<f64> = (0..feature_dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let logits: [f64; NUM_GRASPS] = core::array::from_fn(|g| {
                map[g * feature_dim..(g + 1) * feature_dim].iter().zip(&features).map(|(m, x)| m * x).sum::<f64>()
                    / temperature
            });
            FeatureRow { image_id: format!("toy-{i:05}"), features, label: softmax(&logits) }
        })
        .collect();
    Ok(FeatureDataset::new(feature_dim, rows).expect("generated rows are uniform and finite"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grasp::{validate_distribution, GraspType};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn degenerate_noise_is_flat_gray() {
        let g = gaussian_noise_background(16, 8, 3, 1e-9, &mut rng(1)).unwrap();
        assert!(g.data().iter().all(|&v| v == 128));
    }

    #[test]
    fn noise_moments() {
        let g = gaussian_noise_background(256, 256, 1, 400.0, &mut rng(2)).unwrap();
        let n = g.data().len() as f64;
        let mean = g.data().iter().map(|&v| v as f64).sum::<f64>() / n;
        let var = g.data().iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
        assert!((mean - 128.0).abs() <= 2.0, "mean {mean}");
        assert!((var.sqrt() - 20.0).abs() <= 3.0, "std {}", var.sqrt());
    }

    #[test]
    fn noise_is_seeded() {
        let a = gaussian_noise_background(32, 32, 1, 100.0, &mut rng(3)).unwrap();
        assert_eq!(a, gaussian_noise_background(32, 32, 1, 100.0, &mut rng(3)).unwrap());
        assert!(gaussian_noise_background(4, 4, 1, 0.0, &mut rng(3)).is_err());
    }

    #[test]
    fn kernel_is_normalized() {
        for sigma in [0.5, 1.0, 1.7, 2.0] {
            let k = gaussian_kernel(sigma);
            assert_eq!(k.len(), 2 * (3.0f64 * sigma).ceil() as usize + 1);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn blur_keeps_constant_image() {
        let img = PixelGrid::filled(9, 7, 3, 77).unwrap();
        assert_eq!(gaussian_blur(&img, 1.3).unwrap(), img);
    }

    #[test]
    fn composite_edge_cases() {
        let bg = PixelGrid::filled(6, 6, 1, 10).unwrap();
        let img = PixelGrid::filled(6, 6, 1, 200).unwrap();
        let full = SegmentedObject::new(img.clone(), PixelGrid::filled(6, 6, 1, 255).unwrap()).unwrap();
        assert_eq!(composite(&full, &bg, 0, 0).unwrap(), img);
        assert!(matches!(composite(&full, &bg, 1, 0), Err(AugmentError::PlacementOutOfBounds { .. })));
        let rgb = PixelGrid::filled(6, 6, 3, 0).unwrap();
        assert!(matches!(composite(&full, &rgb, 0, 0), Err(AugmentError::ChannelMismatch { .. })));
    }

    #[test]
    fn empty_mask_leaves_background() {
        let bg = PixelGrid::filled(5, 4, 1, 10).unwrap();
        let img = PixelGrid::filled(3, 3, 1, 200).unwrap();
        let mask = PixelGrid::filled(3, 3, 1, 0).unwrap();
        assert_eq!(composite_masked(&img, &mask, &bg, 1, 1).unwrap(), bg);
    }

    #[test]
    fn empty_mask_is_rejected() {
        // An all-zero mask would leave the background untouched; the type
        // refuses it because an object needs at least one pixel.
        let img = PixelGrid::filled(2, 2, 1, 1).unwrap();
        let err = SegmentedObject::new(img.clone(), PixelGrid::filled(2, 2, 1, 0).unwrap()).unwrap_err();
        assert!(matches!(err, AugmentError::InvalidMask(_)));
        assert!(SegmentedObject::new(img, PixelGrid::filled(2, 2, 1, 7).unwrap()).is_err());
    }

    #[test]
    fn toy_dataset_labels_and_determinism() {
        let d = synthetic_toy_dataset(50, 8, 1.0, 4).unwrap();
        assert_eq!(d.len(), 50);
        for r in d.rows() {
            assert!(validate_distribution(r.label.as_ref()).is_ok());
        }
        assert_eq!(d, synthetic_toy_dataset(50, 8, 1.0, 4).unwrap());
        assert!(synthetic_toy_dataset(9, 8, 1.0, 4).is_err());
        assert!(synthetic_toy_dataset(10, 4, 1.0, 4).is_err());
        assert!(synthetic_toy_dataset(10, 5, 0.0, 4).is_err());
    }

    #[test]
    fn cold_temperature_gives_near_one_hot_labels() {
        let d = synthetic_toy_dataset(1000, 16, 0.01, 9).unwrap();
        let peaked = d.rows().iter().filter(|r| r.label.as_array().iter().copied().fold(0.0, f64::max) >= 0.99).count();
        assert!(peaked >= 900, "{peaked} of 1000 peaked");
    }

    #[test]
    fn single_object_single_copy() {
        let mut mask = vec![0u8; 16];
        for i in [5, 6, 9, 10] {
            mask[i] = 255;
        }
        let obj = SegmentedObject::new(PixelGrid::filled(4, 4, 1, 0).unwrap(), PixelGrid::new(4, 4, 1, mask).unwrap())
            .unwrap();
        let cfg = AugmentConfig { output_w: 20, output_h: 20, copies_per_object: 1, ..Default::default() };
        let out = augment_dataset(&[(obj, GraspDistribution::one_hot(GraspType::PalmarPinch))], &cfg).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].1, GraspDistribution::one_hot(GraspType::PalmarPinch));
        assert_eq!((out[0].0.width(), out[0].0.height()), (20, 20));
    }
}

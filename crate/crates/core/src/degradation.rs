//! Parameterized image quality degradation.
//!
//! Three independent factors, applied in a fixed order (illumination, then
//! blur, then noise) and toggled by a 3-character code such as `"101"`:
//!
//! * **illumination**: a radial falloff mask darkens the image away from a
//!   bright center, `m = s + (1 - s) * exp(-d^2 / (2 * (0.5 * min(w, h))^2))`.
//! * **blur**: separable Gaussian, kernel truncated at three sigmas and
//!   renormalized where it overlaps the border.
//! * **noise**: iid additive Gaussian per channel value.
//!
//! Every stage clamps back into `[0, 1]`. The all-zero code is a bit-exact
//! identity, and the noise-only code reproduces [`add_gaussian_noise`]
//! exactly, so single factors can be studied in isolation.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::imaging::{Image, Raster};
use crate::rng::{derive_seed, seeded_rng};

/// Stream tag for sampling the default illumination center.
const TAG_ILLUM_CENTER: u64 = 0x494c_4c55;

#[derive(Debug, Error)]
pub enum DegradationError {
    #[error("invalid degradation code {0:?}: expected three characters of 0/1")]
    InvalidCode(String),
}

/// Which degradation factors are active. The string form is MSB-first in
/// the order illumination, blur, noise: `"101"` is illumination plus noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DegradationCode {
    pub illumination: bool,
    pub blur: bool,
    pub noise: bool,
}

impl DegradationCode {
    pub const CLEAN: DegradationCode = DegradationCode {
        illumination: false,
        blur: false,
        noise: false,
    };

    /// Number of active factors, 0 to 3.
    pub fn factor_count(&self) -> u32 {
        u32::from(self.illumination) + u32::from(self.blur) + u32::from(self.noise)
    }

    /// All eight codes in ascending binary order, `000` through `111`.
    pub fn all() -> [DegradationCode; 8] {
        let mut out = [DegradationCode::CLEAN; 8];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = DegradationCode {
                illumination: i & 0b100 != 0,
                blur: i & 0b010 != 0,
                noise: i & 0b001 != 0,
            };
        }
        out
    }
}

impl FromStr for DegradationCode {
    type Err = DegradationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bits: Vec<bool> = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(DegradationError::InvalidCode(s.to_string())),
            })
            .collect::<Result<_, _>>()?;
        if bits.len() != 3 {
            return Err(DegradationError::InvalidCode(s.to_string()));
        }
        Ok(DegradationCode {
            illumination: bits[0],
            blur: bits[1],
            noise: bits[2],
        })
    }
}

impl fmt::Display for DegradationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}{}",
            u8::from(self.illumination),
            u8::from(self.blur),
            u8::from(self.noise)
        )
    }
}

/// Strength settings shared by all factors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DegradationParams {
    /// Standard deviation of the additive Gaussian noise.
    pub sigma_noise: f32,
    /// Blur sigma as a fraction of `min(width, height)`.
    pub blur_radius: f32,
    /// Residual brightness far from the illumination center, in `[0, 1]`.
    pub illum_strength: f32,
    /// Normalized illumination center; `None` samples one uniformly from
    /// the central region `[0.25, 0.75]^2` using the seed.
    pub illum_center: Option<(f32, f32)>,
    /// Seed for noise and for the sampled illumination center.
    pub seed: u64,
}

impl Default for DegradationParams {
    fn default() -> Self {
        Self {
            sigma_noise: 0.05,
            blur_radius: 0.01,
            illum_strength: 0.6,
            illum_center: None,
            seed: 0,
        }
    }
}

/// Adds iid Gaussian noise (mean 0, standard deviation `sigma`) to every
/// channel value in data order, then clamps to `[0, 1]`. `sigma == 0`
/// returns a bit-exact copy.
pub fn add_gaussian_noise(img: &Image, sigma: f32, seed: u64) -> Image {
    if sigma == 0.0 {
        return img.clone();
    }
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0f64, f64::from(sigma)).expect("finite non-negative sigma");
    let data = img
        .data()
        .iter()
        .map(|&v| ((f64::from(v) + normal.sample(&mut rng)) as f32).clamp(0.0, 1.0))
        .collect();
    Image::new(img.width(), img.height(), img.channels(), data)
        .expect("clamped noise output stays in range")
}

/// Normalized 1-D Gaussian kernel truncated at `ceil(3 * sigma)` taps per
/// side. `sigma <= 0` yields the identity kernel.
fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = k.iter().sum();
    for v in &mut k {
        *v /= total;
    }
    k
}

fn blur_pass(
    src: &[f64],
    dst: &mut [f64],
    width: usize,
    height: usize,
    kernel: &[f64],
    horizontal: bool,
) {
    let radius = (kernel.len() / 2) as i64;
    let (outer, inner) = if horizontal { (height, width) } else { (width, height) };
    for o in 0..outer {
        for i in 0..inner {
            let mut acc = 0.0;
            let mut weight = 0.0;
            for (ki, &kv) in kernel.iter().enumerate() {
                let j = i as i64 + ki as i64 - radius;
                if j < 0 || j >= inner as i64 {
                    continue;
                }
                let idx = if horizontal {
                    o * width + j as usize
                } else {
                    j as usize * width + o
                };
                acc += kv * src[idx];
                weight += kv;
            }
            let idx = if horizontal { o * width + i } else { i * width + o };
            dst[idx] = acc / weight;
        }
    }
}

/// Separable Gaussian blur on a raster, `sigma` in pixels. The kernel is
/// renormalized over its in-bounds support near the border, so constant
/// inputs are preserved exactly.
pub fn gaussian_blur(raster: &Raster, sigma: f32) -> Raster {
    let kernel = gaussian_kernel(f64::from(sigma));
    let (w, h) = (raster.width() as usize, raster.height() as usize);
    let src: Vec<f64> = raster.data().iter().map(|&v| f64::from(v)).collect();
    let mut tmp = vec![0.0f64; src.len()];
    let mut out = vec![0.0f64; src.len()];
    blur_pass(&src, &mut tmp, w, h, &kernel, true);
    blur_pass(&tmp, &mut out, w, h, &kernel, false);
    let data = out.iter().map(|&v| v as f32).collect();
    Raster::new(raster.width(), raster.height(), data).expect("blur preserves shape")
}

/// Per-channel Gaussian blur on an image, `sigma` in pixels, clamped back to
/// `[0, 1]` to absorb rounding dust.
pub fn gaussian_blur_image(img: &Image, sigma: f32) -> Image {
    let (w, h) = (img.width(), img.height());
    let n = w as usize * h as usize;
    let channels = img.channels() as usize;
    let mut out = vec![0.0f32; img.data().len()];
    for c in 0..channels {
        let plane: Vec<f32> = (0..n).map(|i| img.data()[i * channels + c]).collect();
        let blurred = gaussian_blur(&Raster::new(w, h, plane).expect("channel plane"), sigma);
        for (i, &v) in blurred.data().iter().enumerate() {
            out[i * channels + c] = v.clamp(0.0, 1.0);
        }
    }
    Image::new(w, h, img.channels(), out).expect("blurred image stays in range")
}

fn apply_illumination(img: &Image, strength: f32, center: (f64, f64)) -> Image {
    let (w, h) = (img.width(), img.height());
    let s = f64::from(strength);
    let r0 = 0.5 * f64::from(w.min(h));
    let cx = center.0 * f64::from(w - 1).max(0.0);
    let cy = center.1 * f64::from(h - 1).max(0.0);
    let channels = img.channels() as usize;
    let mut data = Vec::with_capacity(img.data().len());
    for y in 0..h {
        for x in 0..w {
            let dx = f64::from(x) - cx;
            let dy = f64::from(y) - cy;
            let m = s + (1.0 - s) * (-(dx * dx + dy * dy) / (2.0 * r0 * r0)).exp();
            let base = (y as usize * w as usize + x as usize) * channels;
            for c in 0..channels {
                let v = f64::from(img.data()[base + c]) * m;
                data.push((v as f32).clamp(0.0, 1.0));
            }
        }
    }
    Image::new(w, h, img.channels(), data).expect("illumination output stays in range")
}

/// Applies the factors selected by `code` in the fixed order illumination,
/// blur, noise. The all-zero code returns a bit-exact copy, and the
/// noise-only code equals `add_gaussian_noise(img, params.sigma_noise,
/// params.seed)` bit for bit.
pub fn degrade(img: &Image, code: DegradationCode, params: &DegradationParams) -> Image {
    let mut current = img.clone();
    if code.illumination {
        let center = match params.illum_center {
            Some((cx, cy)) => (f64::from(cx), f64::from(cy)),
            None => {
                let mut rng = seeded_rng(derive_seed(params.seed, &[TAG_ILLUM_CENTER]));
                (rng.random_range(0.25..0.75), rng.random_range(0.25..0.75))
            }
        };
        current = apply_illumination(&current, params.illum_strength, center);
    }
    if code.blur {
        let sigma = params.blur_radius * current.width().min(current.height()) as f32;
        current = gaussian_blur_image(&current, sigma);
    }
    if code.noise {
        current = add_gaussian_noise(&current, params.sigma_noise, params.seed);
    }
    current
}

use crate::error::{Error, Result};
use crate::rng::Pcg32;
use crate::sprites::{SpriteImage, SIDE};

/// Heuristic augmentations, declared in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum TransformName {
    HFlip,
    /// Integer shift of up to `magnitude` pixels per axis, zero fill.
    Translate,
    /// Per-channel scale drawn from `[1 - magnitude, 1 + magnitude]`.
    ColorJitter,
    /// Rotates the channels by one or two places.
    ChannelSwap,
    Invert,
}

impl TransformName {
    pub const REGISTRY: [TransformName; 5] = [
        TransformName::HFlip,
        TransformName::Translate,
        TransformName::ColorJitter,
        TransformName::ChannelSwap,
        TransformName::Invert,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TransformName::HFlip => "hflip",
            TransformName::Translate => "translate",
            TransformName::ColorJitter => "color_jitter",
            TransformName::ChannelSwap => "channel_swap",
            TransformName::Invert => "invert",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::REGISTRY
            .into_iter()
            .find(|t| t.as_str() == name)
            .ok_or_else(|| Error::UnknownTransform(name.to_string()))
    }

    pub fn default_magnitude(self) -> f64 {
        match self {
            TransformName::Translate => 4.0,
            TransformName::ColorJitter => 0.2,
            _ => 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transform {
    pub name: TransformName,
    pub enabled: bool,
    pub magnitude: f64,
}

impl Transform {
    pub fn new(name: TransformName) -> Self {
        Transform {
            name,
            enabled: true,
            magnitude: name.default_magnitude(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransformConfig {
    pub transforms: Vec<Transform>,
    /// Probability that an enabled transform is applied rather than replaced by identity.
    pub apply_prob: f64,
}

impl Default for TransformConfig {
    fn default() -> Self {
        TransformConfig {
            transforms: Vec::new(),
            apply_prob: 0.5,
        }
    }
}

impl TransformConfig {
    pub fn with(names: &[TransformName]) -> Self {
        TransformConfig {
            transforms: names.iter().map(|&n| Transform::new(n)).collect(),
            ..Default::default()
        }
    }

    pub fn is_identity(&self) -> bool {
        !self.transforms.iter().any(|t| t.enabled)
    }
}

fn hflip(img: &SpriteImage) -> SpriteImage {
    let mut out = SpriteImage::blank();
    for y in 0..SIDE {
        for x in 0..SIDE {
            for c in 0..3 {
                out.set(SIDE - 1 - x, y, c, img.at(x, y, c));
            }
        }
    }
    out
}

fn translate(img: &SpriteImage, dx: i64, dy: i64) -> SpriteImage {
    let mut out = SpriteImage::blank();
    for y in 0..SIDE as i64 {
        for x in 0..SIDE as i64 {
            let (sx, sy) = (x - dx, y - dy);
            if (0..SIDE as i64).contains(&sx) && (0..SIDE as i64).contains(&sy) {
                for c in 0..3 {
                    out.set(x as usize, y as usize, c, img.at(sx as usize, sy as usize, c));
                }
            }
        }
    }
    out
}

/// Output channel `c` takes input channel `(c + shift) % 3`.
pub fn rotate_channels(img: &SpriteImage, shift: usize) -> SpriteImage {
    let mut out = SpriteImage::blank();
    for (o, i) in out.pixels.chunks_exact_mut(3).zip(img.pixels.chunks_exact(3)) {
        for c in 0..3 {
            o[c] = i[(c + shift) % 3];
        }
    }
    out
}

/// Applies the enabled transforms in registry order, each with probability `apply_prob`.
pub fn apply_transforms(img: &SpriteImage, config: &TransformConfig, rng: &mut Pcg32) -> SpriteImage {
    let mut out = img.clone();
    for name in TransformName::REGISTRY {
        let Some(t) = config.transforms.iter().find(|t| t.name == name && t.enabled) else {
            continue;
        };
        if !rng.bernoulli(config.apply_prob) {
            continue;
        }
        out = match name {
            TransformName::HFlip => hflip(&out),
            TransformName::Translate => {
                let m = t.magnitude.max(0.0).floor() as u64;
                let dx = rng.below(2 * m + 1) as i64 - m as i64;
                let dy = rng.below(2 * m + 1) as i64 - m as i64;
                translate(&out, dx, dy)
            }
            TransformName::ColorJitter => {
                let m = t.magnitude.clamp(0.0, 1.0);
                let scales: Vec<f64> = (0..3).map(|_| rng.uniform(1.0 - m, 1.0 + m)).collect();
                let mut o = out.clone();
                for px in o.pixels.chunks_exact_mut(3) {
                    for c in 0..3 {
                        px[c] = (px[c] as f64 * scales[c]).round().clamp(0.0, 255.0) as u8;
                    }
                }
                o
            }
            TransformName::ChannelSwap => rotate_channels(&out, 1 + rng.index(2)),
            TransformName::Invert => {
                let mut o = out.clone();
                for v in o.pixels.iter_mut() {
                    *v = 255 - *v;
                }
                o
            }
        };
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sprites::{render, SpriteLatents};

    fn red_heart() -> SpriteImage {
        render(&SpriteLatents::from_f64(0.4, 0.55, 0.8, 0.7).unwrap(), 2, 0)
    }

    fn forced(names: &[TransformName]) -> TransformConfig {
        TransformConfig {
            apply_prob: 1.0,
            ..TransformConfig::with(names)
        }
    }

    #[test]
    fn disabled_is_identity() {
        let img = red_heart();
        let mut cfg = TransformConfig::with(&TransformName::REGISTRY);
        for t in cfg.transforms.iter_mut() {
            t.enabled = false;
        }
        assert!(cfg.is_identity());
        let mut rng = Pcg32::seed_from_u64(1);
        assert_eq!(apply_transforms(&img, &cfg, &mut rng), img);
        assert_eq!(apply_transforms(&img, &TransformConfig::default(), &mut rng), img);
    }

    #[test]
    fn hflip_is_an_involution() {
        let img = red_heart();
        let mut rng = Pcg32::seed_from_u64(1);
        let cfg = forced(&[TransformName::HFlip]);
        let once = apply_transforms(&img, &cfg, &mut rng);
        assert_ne!(once, img);
        assert_eq!(apply_transforms(&once, &cfg, &mut rng), img);
    }

    #[test]
    fn channel_swap_matches_permutation_oracle() {
        let img = red_heart();
        let cfg = forced(&[TransformName::ChannelSwap]);
        for seed in 0..20 {
            let out = apply_transforms(&img, &cfg, &mut Pcg32::seed_from_u64(seed));
            // independently permuted copies: red -> blue and red -> green
            let mut to_blue = SpriteImage::blank();
            let mut to_green = SpriteImage::blank();
            for (i, px) in img.pixels.chunks_exact(3).enumerate() {
                to_blue.pixels[i * 3 + 2] = px[0];
                to_green.pixels[i * 3 + 1] = px[0];
            }
            assert!(out == to_blue || out == to_green);
            assert!(out.pixels.chunks_exact(3).all(|p| p[0] == 0));
        }
    }

    #[test]
    fn translate_keeps_within_bounds() {
        let img = red_heart();
        let cfg = forced(&[TransformName::Translate]);
        let out = apply_transforms(&img, &cfg, &mut Pcg32::seed_from_u64(4));
        assert!(out.foreground_count() <= img.foreground_count());
        assert!(out.foreground_count() > 0);
    }

    #[test]
    fn invert_and_jitter_clamp() {
        let img = red_heart();
        let inv = apply_transforms(&img, &forced(&[TransformName::Invert]), &mut Pcg32::seed_from_u64(0));
        assert_eq!(inv.at(0, 0, 0), 255);
        let mut cfg = forced(&[TransformName::ColorJitter]);
        cfg.transforms[0].magnitude = 0.9;
        for seed in 0..10 {
            let j = apply_transforms(&img, &cfg, &mut Pcg32::seed_from_u64(seed));
            assert_eq!(j.mask().len(), img.mask().len());
            assert!(j.pixels.chunks_exact(3).all(|p| p[1] == 0 && p[2] == 0));
        }
    }

    #[test]
    fn half_probability_applies_about_half() {
        let img = red_heart();
        let cfg = TransformConfig::with(&[TransformName::Invert]);
        let mut rng = Pcg32::seed_from_u64(12);
        let applied = (0..2000)
            .filter(|_| apply_transforms(&img, &cfg, &mut rng) != img)
            .count();
        assert!((900..1100).contains(&applied), "{applied}");
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(
            TransformName::parse("rotate"),
            Err(Error::UnknownTransform(_))
        ));
        assert_eq!(
            TransformName::parse("channel_swap").unwrap(),
            TransformName::ChannelSwap
        );
    }
}

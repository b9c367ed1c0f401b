use crate::data::{Attribute, AttributeSchema, AttributedDataset, ExampleRecord, Payload};
use crate::error::{Error, Result};
use crate::rng::Pcg32;
use crate::sampler::AugmentationSource;
use crate::sprites::fixed::{cos_sin_q30, ONE_Q16, TWO_PI_Q16};

pub const SIDE: usize = 32;
pub const IMAGE_LEN: usize = SIDE * SIDE * 3;
pub const SHAPE_ATTR: usize = 0;
pub const COLOR_ATTR: usize = 1;

const SQUARE: u32 = 0;
const ELLIPSE: u32 = 1;
const HEART: u32 = 2;

/// Shape (label) and color (nuisance) over `{square, ellipse, heart}` x `{red, green, blue}`.
pub fn sprites_schema() -> AttributeSchema {
    let attr = |name: &str, values: [&str; 3]| Attribute {
        name: name.into(),
        values: values.iter().map(|v| v.to_string()).collect(),
    };
    AttributeSchema::new(
        vec![
            attr("shape", ["square", "ellipse", "heart"]),
            attr("color", ["red", "green", "blue"]),
        ],
        SHAPE_ATTR,
        COLOR_ATTR,
    )
    .expect("static schema is valid")
}

/// Continuous nuisance latents, each a Q16 fixed-point word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SpriteLatents {
    /// `[0, 1]`
    pub x_pos: u32,
    /// `[0, 1]`
    pub y_pos: u32,
    /// `[0.5, 1]`
    pub scale: u32,
    /// `[0, 2*pi)` radians
    pub orientation: u32,
}

impl SpriteLatents {
    pub fn new(x_pos: u32, y_pos: u32, scale: u32, orientation: u32) -> Result<Self> {
        let l = SpriteLatents {
            x_pos,
            y_pos,
            scale,
            orientation,
        };
        if x_pos > ONE_Q16 || y_pos > ONE_Q16 || !(ONE_Q16 / 2..=ONE_Q16).contains(&scale) || orientation >= TWO_PI_Q16
        {
            return Err(Error::Parse(format!("sprite latents out of range: {l:?}")));
        }
        Ok(l)
    }

    pub fn from_f64(x_pos: f64, y_pos: f64, scale: f64, orientation: f64) -> Result<Self> {
        let q = |v: f64| (v * ONE_Q16 as f64).round();
        let words = [q(x_pos), q(y_pos), q(scale), q(orientation)];
        if words.iter().any(|w| !(0.0..=u32::MAX as f64).contains(w)) {
            return Err(Error::Parse("sprite latents out of range".into()));
        }
        Self::new(words[0] as u32, words[1] as u32, words[2] as u32, words[3] as u32)
    }

    pub fn words(&self) -> [u32; 4] {
        [self.x_pos, self.y_pos, self.scale, self.orientation]
    }

    pub fn from_words(w: [u32; 4]) -> Result<Self> {
        Self::new(w[0], w[1], w[2], w[3])
    }

    pub fn of_record(record: &ExampleRecord) -> Result<Self> {
        match &record.payload {
            Payload::Latent(w) => Self::from_words(*w),
            _ => Err(Error::AugSource(format!(
                "sample {} has no generator latents",
                record.sample_id
            ))),
        }
    }
}

/// 32x32 RGB raster, row-major, interleaved channels.
#[derive(Clone, PartialEq, Eq)]
pub struct SpriteImage {
    pub pixels: [u8; IMAGE_LEN],
}

impl std::fmt::Debug for SpriteImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "SpriteImage({} foreground px)", self.foreground_count())
    }
}

impl SpriteImage {
    pub fn blank() -> Self {
        SpriteImage { pixels: [0; IMAGE_LEN] }
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[(y * SIDE + x) * 3 + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: u8) {
        self.pixels[(y * SIDE + x) * 3 + c] = v;
    }

    pub fn foreground_count(&self) -> usize {
        self.pixels
            .chunks_exact(3)
            .filter(|p| p.iter().any(|&v| v != 0))
            .count()
    }

    /// Per-pixel foreground flags.
    pub fn mask(&self) -> Vec<bool> {
        self.pixels.chunks_exact(3).map(|p| p.iter().any(|&v| v != 0)).collect()
    }
}

fn inside(shape: u32, u: i64, v: i64, h: i64) -> bool {
    match shape {
        SQUARE => u.abs() <= h && v.abs() <= h,
        ELLIPSE => u * u + 4 * v * v <= h * h,
        HEART => {
            if 2 * v <= -h {
                // two upper half-disks of radius h/2 centered at (+-h/2, -h/2)
                let (lx, rx, dy) = (2 * u + h, 2 * u - h, 2 * v + h);
                lx * lx + dy * dy <= h * h || rx * rx + dy * dy <= h * h
            } else {
                // triangle from the disks' base line down to an apex at v = h
                v <= h && 3 * u.abs() <= 2 * (h - v)
            }
        }
        _ => false,
    }
}

/// Deterministic binary raster. Inside tests run in fixed point; pixels off the canvas are clipped.
pub fn render(latents: &SpriteLatents, shape: u32, color: u32) -> SpriteImage {
    assert!(shape < 3 && color < 3, "sprite attribute out of range");
    let mut img = SpriteImage::blank();
    let side = SIDE as i64;
    let cx = latents.x_pos as i64 * side;
    let cy = latents.y_pos as i64 * side;
    let h = latents.scale as i64 * 8;
    let (cos, sin) = cos_sin_q30(latents.orientation);
    for py in 0..SIDE {
        let dy = ((py as i64) << 16) + (1 << 15) - cy;
        for px in 0..SIDE {
            let dx = ((px as i64) << 16) + (1 << 15) - cx;
            let u = (dx * cos + dy * sin) >> 30;
            let v = (dy * cos - dx * sin) >> 30;
            if inside(shape, u, v, h) {
                img.set(px, py, color as usize, 255);
            }
        }
    }
    img
}

/// Generates `per_cell` records for each of the nine (shape, color) cells with iid latents.
///
/// Positions are drawn from `[0.25, 0.75]` so sprites stay mostly on the canvas.
pub fn gen_sprites(per_cell: usize, seed: u64) -> Result<AttributedDataset> {
    if per_cell == 0 {
        return Err(Error::Config("per_cell must be at least 1".into()));
    }
    let mut rng = Pcg32::derived(seed, "sprites/latents");
    let mut records = Vec::with_capacity(9 * per_cell);
    let quarter = ONE_Q16 / 4;
    for shape in 0..3u32 {
        for color in 0..3u32 {
            for _ in 0..per_cell {
                let latents = SpriteLatents::new(
                    quarter + rng.below((2 * quarter + 1) as u64) as u32,
                    quarter + rng.below((2 * quarter + 1) as u64) as u32,
                    ONE_Q16 / 2 + rng.below((ONE_Q16 / 2 + 1) as u64) as u32,
                    rng.below(TWO_PI_Q16 as u64) as u32,
                )?;
                let mut attr = vec![0; 2];
                attr[SHAPE_ATTR] = shape;
                attr[COLOR_ATTR] = color;
                records.push(ExampleRecord {
                    sample_id: records.len() as u64,
                    attr,
                    payload: Payload::Latent(latents.words()),
                });
            }
        }
    }
    AttributedDataset::new(sprites_schema(), records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwapAxis {
    Label,
    Nuisance,
}

fn check_sprite_schema(schema: &AttributeSchema) -> Result<()> {
    if schema.attributes != sprites_schema().attributes {
        return Err(Error::AugSource("dataset does not use the sprite attributes".into()));
    }
    Ok(())
}

/// Re-renders the record's own latents with one attribute replaced.
pub fn attribute_swap(
    schema: &AttributeSchema,
    record: &ExampleRecord,
    axis: SwapAxis,
    new_value: u32,
) -> Result<SpriteImage> {
    check_sprite_schema(schema)?;
    let latents = SpriteLatents::of_record(record)?;
    let slot = match axis {
        SwapAxis::Label => schema.label_index,
        SwapAxis::Nuisance => schema.nuisance_index,
    };
    if new_value as usize >= schema.cardinality(slot) {
        return Err(Error::AugSource(format!("value {new_value} out of range")));
    }
    let mut attr = record.attr.clone();
    attr[slot] = new_value;
    Ok(render(&latents, attr[SHAPE_ATTR], attr[COLOR_ATTR]))
}

/// A base record whose latents are re-rendered with the target label and nuisance values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapRequest {
    pub base_id: u64,
    pub label: u32,
    pub nuisance: u32,
}

impl SwapRequest {
    pub fn render(&self, dataset: &AttributedDataset) -> Result<SpriteImage> {
        let schema = dataset.schema();
        check_sprite_schema(schema)?;
        let record = dataset.get(self.base_id)?;
        let latents = SpriteLatents::of_record(record)?;
        let mut attr = record.attr.clone();
        attr[schema.label_index] = self.label;
        attr[schema.nuisance_index] = self.nuisance;
        Ok(render(&latents, attr[SHAPE_ATTR], attr[COLOR_ATTR]))
    }
}

/// Exact attribute-swap augmentation: latents come from a uniformly chosen base record.
#[derive(Debug, Clone)]
pub struct SpriteAugmenter {
    bases: Vec<u64>,
}

impl SpriteAugmenter {
    pub fn new(dataset: &AttributedDataset, bases: Vec<u64>) -> Result<Self> {
        check_sprite_schema(dataset.schema())?;
        if bases.is_empty() {
            return Err(Error::AugSource("no base records".into()));
        }
        for &id in &bases {
            SpriteLatents::of_record(dataset.get(id)?)?;
        }
        Ok(SpriteAugmenter { bases })
    }
}

impl AugmentationSource for SpriteAugmenter {
    type Handle = SwapRequest;

    fn request(&self, label: u32, nuisance: u32, rng: &mut Pcg32) -> Result<SwapRequest> {
        Ok(SwapRequest {
            base_id: self.bases[rng.index(self.bases.len())],
            label,
            nuisance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::compute_joint;

    fn centered(scale: f64, orientation: f64) -> SpriteLatents {
        SpriteLatents::from_f64(0.5, 0.5, scale, orientation).unwrap()
    }

    #[test]
    fn schema_matches_running_example() {
        let s = sprites_schema();
        assert_eq!(s.attributes[COLOR_ATTR].values, ["red", "green", "blue"]);
        let mut shapes = s.attributes[SHAPE_ATTR].values.clone();
        shapes.sort();
        assert_eq!(shapes, ["ellipse", "heart", "square"]);
    }

    #[test]
    fn generated_grid_is_uniform() {
        let ds = gen_sprites(100, 3).unwrap();
        assert_eq!(ds.len(), 900);
        let ids: Vec<u64> = ds.records().iter().map(|r| r.sample_id).collect();
        let j = compute_joint(&ds, &ids, 0, 1).unwrap();
        assert!(j.counts.iter().flatten().all(|&c| c == 100));
    }

    #[test]
    fn seeds_change_latents_not_grid() {
        let a = gen_sprites(1, 1).unwrap();
        let b = gen_sprites(1, 2).unwrap();
        let attrs = |d: &AttributedDataset| d.records().iter().map(|r| r.attr.clone()).collect::<Vec<_>>();
        assert_eq!(attrs(&a), attrs(&b));
        assert_ne!(
            a.records().iter().map(|r| r.payload.clone()).collect::<Vec<_>>(),
            b.records().iter().map(|r| r.payload.clone()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn latent_ranges() {
        assert!(SpriteLatents::new(0, 0, ONE_Q16 / 2 - 1, 0).is_err());
        assert!(SpriteLatents::new(ONE_Q16 + 1, 0, ONE_Q16, 0).is_err());
        assert!(SpriteLatents::new(0, 0, ONE_Q16, TWO_PI_Q16).is_err());
        assert!(SpriteLatents::new(ONE_Q16, ONE_Q16, ONE_Q16, TWO_PI_Q16 - 1).is_ok());
    }

    #[test]
    fn pure_channel_and_black_background() {
        let img = render(&centered(1.0, 0.3), HEART, 0);
        for p in img.pixels.chunks_exact(3) {
            assert!(p == [0, 0, 0] || p == [255, 0, 0]);
        }
        assert!(img.foreground_count() > 20);
    }

    #[test]
    fn unrotated_square_area() {
        // half-extent 8 px around the canvas center covers exactly 16x16 pixel centers
        let img = render(&centered(1.0, 0.0), SQUARE, 1);
        assert_eq!(img.foreground_count(), 256);
    }

    #[test]
    fn ellipse_is_smaller_than_square() {
        let sq = render(&centered(1.0, 0.0), SQUARE, 0).foreground_count();
        let el = render(&centered(1.0, 0.0), ELLIPSE, 0).foreground_count();
        let area = std::f64::consts::PI * 8.0 * 4.0;
        assert!(((el as f64) - area).abs() < 12.0, "{el}");
        assert!(el < sq);
    }

    #[test]
    fn shapes_differ() {
        let l = centered(0.8, 1.0);
        let imgs: Vec<Vec<bool>> = (0..3).map(|s| render(&l, s, 2).mask()).collect();
        assert_ne!(imgs[0], imgs[1]);
        assert_ne!(imgs[1], imgs[2]);
        assert_ne!(imgs[0], imgs[2]);
    }

    #[test]
    fn off_canvas_is_clipped() {
        let l = SpriteLatents::from_f64(0.0, 0.0, 1.0, 0.0).unwrap();
        let img = render(&l, SQUARE, 0);
        assert_eq!(img.foreground_count(), 64);
        assert_eq!(img.at(0, 0, 0), 255);
    }

    #[test]
    fn render_is_deterministic() {
        let l = centered(0.7, 2.0);
        assert_eq!(render(&l, HEART, 2).pixels, render(&l, HEART, 2).pixels);
    }

    #[test]
    fn swaps() {
        let ds = gen_sprites(2, 5).unwrap();
        let schema = ds.schema();
        let red_square = ds.records().iter().find(|r| r.attr == [SQUARE, 0]).unwrap();
        let latents = SpriteLatents::of_record(red_square).unwrap();
        let original = render(&latents, SQUARE, 0);
        assert_eq!(
            attribute_swap(schema, red_square, SwapAxis::Nuisance, 0).unwrap(),
            original
        );

        let blue = attribute_swap(schema, red_square, SwapAxis::Nuisance, 2).unwrap();
        assert_eq!(blue.mask(), original.mask());
        for (o, b) in original.pixels.chunks_exact(3).zip(blue.pixels.chunks_exact(3)) {
            assert_eq!([o[2], o[1], o[0]], [b[0], b[1], b[2]]);
        }
        assert_eq!(blue.foreground_count(), original.foreground_count());

        let heart = attribute_swap(schema, red_square, SwapAxis::Label, HEART).unwrap();
        assert_eq!(heart, render(&latents, HEART, 0));
        assert_ne!(heart.foreground_count(), original.foreground_count());
    }

    #[test]
    fn swap_respects_roles() {
        let ds = gen_sprites(1, 5).unwrap().with_roles(COLOR_ATTR, SHAPE_ATTR).unwrap();
        let r = &ds.records()[0];
        let latents = SpriteLatents::of_record(r).unwrap();
        let img = attribute_swap(ds.schema(), r, SwapAxis::Label, 2).unwrap();
        assert_eq!(img, render(&latents, r.attr[SHAPE_ATTR], 2));
    }

    #[test]
    fn swap_needs_latents() {
        let schema = sprites_schema();
        let r = ExampleRecord {
            sample_id: 1,
            attr: vec![0, 0],
            payload: Payload::Path("x.png".into()),
        };
        assert!(matches!(
            attribute_swap(&schema, &r, SwapAxis::Label, 1),
            Err(Error::AugSource(_))
        ));
    }

    #[test]
    fn augmenter_requests_render_targets() {
        let ds = gen_sprites(3, 1).unwrap();
        let aug = SpriteAugmenter::new(&ds, vec![0, 5, 9]).unwrap();
        let mut rng = Pcg32::seed_from_u64(0);
        let req = aug.request(HEART, 1, &mut rng).unwrap();
        let img = req.render(&ds).unwrap();
        let latents = SpriteLatents::of_record(ds.get(req.base_id).unwrap()).unwrap();
        assert_eq!(img, render(&latents, HEART, 1));
    }
}

use crate::data::{AttributedDataset, Payload};
use crate::error::{Error, Result};
use crate::num::Scalar;
use crate::sprites::{render, SpriteImage, SpriteLatents, SwapRequest, COLOR_ATTR, IMAGE_LEN, SHAPE_ATTR};

pub enum Input<'a> {
    Image(&'a SpriteImage),
    Features(&'a [f64]),
}

/// Read-only access to model inputs and labels.
pub trait DataAccess: Sync {
    fn dataset(&self) -> &AttributedDataset;

    fn input_dim(&self) -> usize;

    fn input(&self, id: u64) -> Result<Input<'_>>;

    /// Renders a synthetic sample requested by the mixture sampler.
    fn augmented(&self, request: &SwapRequest) -> Result<SpriteImage> {
        request.render(self.dataset())
    }

    /// Ground-truth label of a record.
    fn label(&self, id: u64) -> Result<u32> {
        let ds = self.dataset();
        Ok(ds.label_of(ds.get(id)?))
    }
}

/// Pixels scaled to `[0, 1]`.
pub fn encode_image<T: Scalar>(img: &SpriteImage, out: &mut [T]) {
    let scale = T::of(1.0 / 255.0);
    for (o, &p) in out.iter_mut().zip(img.pixels.iter()) {
        *o = if p == 0 { T::zero() } else { T::of(p as f64) * scale };
    }
}

pub fn encode_input<T: Scalar>(input: &Input<'_>, out: &mut [T]) -> Result<()> {
    match input {
        Input::Image(img) => {
            if out.len() != IMAGE_LEN {
                return Err(Error::Dimension {
                    expected: out.len(),
                    got: IMAGE_LEN,
                });
            }
            encode_image(img, out);
        }
        Input::Features(f) => {
            if out.len() != f.len() {
                return Err(Error::Dimension {
                    expected: out.len(),
                    got: f.len(),
                });
            }
            for (o, &v) in out.iter_mut().zip(f.iter()) {
                *o = T::of(v);
            }
        }
    }
    Ok(())
}

/// In-memory access over a dataset; sprite latents are rendered once up front.
pub struct DatasetAccess<'a> {
    dataset: &'a AttributedDataset,
    images: Vec<Option<SpriteImage>>,
    input_dim: usize,
}

impl<'a> DatasetAccess<'a> {
    pub fn new(dataset: &'a AttributedDataset) -> Result<Self> {
        let mut images = Vec::with_capacity(dataset.len());
        let mut dim = None;
        for r in dataset.records() {
            let (img, d) = match &r.payload {
                Payload::Latent(_) => {
                    let l = SpriteLatents::of_record(r)?;
                    (
                        Some(render(&l, r.attr[SHAPE_ATTR], r.attr[COLOR_ATTR])),
                        Some(IMAGE_LEN),
                    )
                }
                Payload::Features(f) => (None, Some(f.len())),
                Payload::Path(_) => (None, None),
            };
            if let Some(d) = d {
                match dim {
                    None => dim = Some(d),
                    Some(prev) if prev != d => return Err(Error::Dimension { expected: prev, got: d }),
                    _ => {}
                }
            }
            images.push(img);
        }
        Ok(DatasetAccess {
            dataset,
            images,
            input_dim: dim.unwrap_or(0),
        })
    }
}

impl DataAccess for DatasetAccess<'_> {
    fn dataset(&self) -> &AttributedDataset {
        self.dataset
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn input(&self, id: u64) -> Result<Input<'_>> {
        let pos = self.dataset.position(id)?;
        if let Some(img) = &self.images[pos] {
            return Ok(Input::Image(img));
        }
        match &self.dataset.records()[pos].payload {
            Payload::Features(f) => Ok(Input::Features(f)),
            _ => Err(Error::Format(format!(
                "sample {id} has an external payload that cannot be decoded"
            ))),
        }
    }
}

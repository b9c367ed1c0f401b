//! Procedural colored sprites with latents kept alongside every record, so any sample can be
//! re-rendered with a different shape or color.

mod fixed;
mod render;

pub use render::{
    attribute_swap, gen_sprites, render, sprites_schema, SpriteAugmenter, SpriteImage, SpriteLatents, SwapAxis,
    SwapRequest,
};
pub use render::{COLOR_ATTR, IMAGE_LEN, SHAPE_ATTR, SIDE};

//! Layout-aesthetics metrics, reward shaping and group-advantage math for
//! rendered HTML slides.

pub mod advantage;
pub mod api;
pub mod collapse;
pub mod dom;
pub mod geometry;
pub mod metaeval;
pub mod overlay;
pub mod pixel;
pub mod reward;
pub mod snapshot;

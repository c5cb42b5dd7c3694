//! Panorama-view AdWords: exact interval bookkeeping, panoramic online correlated
//! selection, primal-dual allocators and factor-revealing LPs.

pub mod allocators;
pub mod circle;
pub mod eval;
pub mod instance;
pub mod lp;
pub mod panocs;
pub mod panorama;
pub mod rat;
pub mod tables;

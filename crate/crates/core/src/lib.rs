//! Kinematics, geometric mechanics and rough-terrain simulation for
//! multi-legged elongate robots.
pub mod control;
pub mod error;
pub mod geomech;
pub mod morphology;
pub mod simulator;
pub mod terrain;

pub use error::{Error, Result};

/// Guide chapters, compiled so their examples stay correct.
#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/overview.md")]
    struct Overview;
    #[doc = include_str!("../../../book/src/morphology.md")]
    struct Morphology;
    #[doc = include_str!("../../../book/src/geomech.md")]
    struct Geomech;
    #[doc = include_str!("../../../book/src/terrain.md")]
    struct Terrain;
    #[doc = include_str!("../../../book/src/simulator.md")]
    struct Simulator;
    #[doc = include_str!("../../../book/src/control.md")]
    struct Control;
    #[doc = include_str!("../../../book/src/harness.md")]
    struct Harness;
}

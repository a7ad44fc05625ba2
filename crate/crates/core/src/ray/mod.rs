//! Shooting-and-bouncing-rays propagation through the scatterer soup.

pub mod accel;
pub mod fresnel;
pub mod tracer;

pub use accel::{Accel, Hit, Ray, Triangle};
pub use fresnel::{fresnel_reflection, Material, Reflection};
pub use tracer::{trace, GroundPlane, MultipathComponent, PathKind, Scene, TracerConfig};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is on.
/// Results keep index order either way.
pub(crate) fn ordered_map<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

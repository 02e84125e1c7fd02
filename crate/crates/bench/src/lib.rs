//! Benchmark fixtures shared by the criterion targets.

use divray::phantoms::{moment_free_2tensor, moment_free_vector};
use divray::{Grid, PhantomSpec, SpectralGrid, SymTensorField, ZeroModePolicy};

/// Desk geometry `[-8, 8]^2` with `size` nodes per axis.
pub fn desk(size: usize) -> SpectralGrid {
    SpectralGrid::new(Grid::cube(2, size, 16.0).expect("valid grid"), ZeroModePolicy::Zero).expect("power-of-two grid")
}

pub fn vector_phantom() -> PhantomSpec {
    moment_free_vector(1.0, vec![0.3, -0.2])
}

pub fn tensor_phantom() -> PhantomSpec {
    moment_free_2tensor(1.0, vec![0.3, -0.2])
}

pub fn sampled(spec: &PhantomSpec, g: &SpectralGrid) -> SymTensorField {
    spec.sample_on_grid(&g.grid).expect("phantom fits the grid")
}

//! Classical trajectories on the eigenvalue surfaces and the linear
//! oscillator attached to them.

mod lens;
mod oscillator;
mod trajectory;

pub use lens::{lens_forward, lens_inverse};
pub use oscillator::{solve_oscillator, solve_oscillator_until, OscillatorPair, OscillatorState};
pub use trajectory::{
    crossing_path, curvature_integral, integrate_trajectory, simpson, taylor_at_crossing, Branch, ClassicalPath,
    PathSample, TaylorTable, ENERGY_REJECT,
};

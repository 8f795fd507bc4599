//! Benchmarks live in `benches/`; this crate only holds shared inputs.

use focklab_core::measures::Measure;
use focklab_core::numerics::Point;
use focklab_core::spaces::EntireFunction;

/// Twenty atoms in the disc of radius 3, fixed seed.
pub fn cloud() -> Measure {
    Measure::random_cloud(1, 20, 3.0, (0.5, 1.5), 7).expect("valid cloud")
}

/// A kernel centred off the origin.
pub fn kernel() -> EntireFunction {
    EntireFunction::kernel(Point::c1(0.5, -0.25), 1.0)
}

/// Targets on a square of side 8 with spacing 0.25.
pub fn targets() -> Vec<Point> {
    focklab_core::numerics::lattice_points(0.25, 4.0, 1).expect("valid lattice")
}

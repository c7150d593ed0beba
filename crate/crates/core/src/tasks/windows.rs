use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::tasks::Trajectory;

/// A training window: the observed state at its first row and the `d x len`
/// targets (first column included).
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    pub start: usize,
    pub x0: Vec<f64>,
    pub targets: Matrix,
    /// Intervals between consecutive rows, length `len - 1`.
    pub dt: Vec<f64>,
}

pub fn window_at(traj: &Trajectory, start: usize, len: usize) -> Result<Window> {
    if len == 0 || start + len > traj.len() {
        return Err(Error::InvalidArgument(format!(
            "window [{start}, {}) does not fit a trajectory of {} rows",
            start + len,
            traj.len()
        )));
    }
    let times = &traj.times()[start..start + len];
    Ok(Window {
        start,
        x0: traj.row(start).to_vec(),
        targets: traj.window_columns(start, len),
        dt: times.windows(2).map(|w| w[1] - w[0]).collect(),
    })
}

/// `count` windows with starts drawn uniformly from `0..=T - window_len`.
pub fn make_windows(
    traj: &Trajectory,
    window_len: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<Window>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    make_windows_with(traj, window_len, count, &mut rng)
}

pub fn make_windows_with(
    traj: &Trajectory,
    window_len: usize,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<Window>> {
    if window_len == 0 || window_len > traj.len() {
        return Err(Error::InvalidArgument(format!(
            "window length {window_len} must be in 1..={}",
            traj.len()
        )));
    }
    let last_start = traj.len() - window_len;
    (0..count)
        .map(|_| window_at(traj, rng.random_range(0..=last_start), window_len))
        .collect()
}

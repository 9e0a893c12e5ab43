//! Finite covers of the parameter region `R^n_+ ∩ B^n_2(1)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::ActionVector;
use crate::linalg::norm;

/// Largest dimension for which a regular grid is used.
pub const GRID_MAX_DIM: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverConfig {
    pub resolution: f64,
    pub cap: usize,
    #[serde(default)]
    pub seed: u64,
}

impl Default for CoverConfig {
    fn default() -> Self {
        Self { resolution: 0.05, cap: 512, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterCover {
    #[serde(skip)]
    pub points: Vec<ActionVector>,
    /// Requested covering radius.
    pub resolution: f64,
    /// Grid spacing actually used (grid covers only); any feasible point
    /// lies within `spacing * sqrt(n)` of a cover point.
    pub spacing: Option<f64>,
    pub size: usize,
}

impl ParameterCover {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn grid_points(n: usize, steps: usize) -> Vec<ActionVector> {
    let h = 1.0 / steps as f64;
    let mut out = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| i as f64 * h).collect();
        if norm(&p) <= 1.0 + 1e-12 {
            let p = p.into_iter().map(|x| x.min(1.0)).collect::<Vec<_>>();
            // Scale back into the ball if rounding pushed it out.
            let nrm = norm(&p);
            let p = if nrm > 1.0 { p.iter().map(|x| x / nrm).collect() } else { p };
            out.push(ActionVector::new(p).expect("grid point is feasible"));
        }
        let mut d = 0;
        loop {
            if d == n {
                return out;
            }
            idx[d] += 1;
            if idx[d] <= steps {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while i > 0 {
        out += (i % base) as f64 * inv;
        i /= base;
        inv /= base as f64;
    }
    out
}

const PRIMES: [u64; 32] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109,
    113, 127, 131,
];

/// Builds a cover: a regular grid of spacing at most `resolution` for
/// `n <= 3` (coarsened if it would exceed `cap`), otherwise `cap` points
/// made of the basis directions plus a randomly shifted Halton sequence
/// restricted to the unit ball.
pub fn build_cover(n: usize, resolution: f64, cap: usize, seed: u64) -> Result<ParameterCover> {
    if n == 0 || !(resolution > 0.0) {
        return Err(Error::Config("cover needs n >= 1 and a positive resolution".into()));
    }
    if cap < n {
        return Err(Error::Config(format!("cover cap {cap} cannot hold the {n} basis directions")));
    }
    if n <= GRID_MAX_DIM {
        let mut steps = (1.0 / resolution).ceil() as usize;
        loop {
            let pts = grid_points(n, steps);
            if pts.len() <= cap || steps == 1 {
                if pts.len() > cap {
                    break;
                }
                return Ok(ParameterCover {
                    size: pts.len(),
                    points: pts,
                    resolution,
                    spacing: Some(1.0 / steps as f64),
                });
            }
            steps -= 1;
        }
    }
    if n > PRIMES.len() {
        return Err(Error::Config(format!("sampled covers support n <= {}", PRIMES.len())));
    }
    let mut points: Vec<ActionVector> = (0..n).map(|i| ActionVector::basis(n, i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shift: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let mut i = 1u64;
    while points.len() < cap {
        let p: Vec<f64> = (0..n).map(|d| (radical_inverse(i, PRIMES[d]) + shift[d]).fract()).collect();
        i += 1;
        if norm(&p) <= 1.0 {
            points.push(ActionVector::new(p).expect("accepted point lies in the ball"));
        }
    }
    Ok(ParameterCover { size: points.len(), points, resolution, spacing: None })
}

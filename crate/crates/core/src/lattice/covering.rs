//! Covering radius by branch and bound over the fundamental parallelepiped.
//!
//! The distance to the lattice is 1-Lipschitz, so on a cell with center `c`
//! and circumradius `r` it is at most `dist(c) + r`. Cells whose bound cannot
//! beat the best center value by more than the tolerance are discarded; the
//! rest are split in half along every axis.

use num_traits::Zero;

use super::{Lattice, MAX_DIM};
use crate::error::{Error, Result};
use crate::exact::rational;
use crate::parallel::{self, Exec};

const MAX_LEVELS: u32 = 48;
const MAX_FRONTIER: usize = 4_000_000;

struct FloatLattice {
    d: usize,
    basis: Vec<Vec<f64>>, // row-major
    ldl_d: Vec<f64>,
    ldl_u: Vec<Vec<f64>>,
}

impl FloatLattice {
    fn new(l: &Lattice) -> Self {
        let d = l.dim();
        let f = |m: &crate::linalg::RatMatrix| -> Vec<Vec<f64>> {
            (0..d).map(|i| (0..d).map(|j| rational::to_f64(&m[(i, j)])).collect()).collect()
        };
        let basis = f(l.basis());
        let gram = f(&l.gram());
        let mut ldl_d = vec![0.0; d];
        let mut ldl_u = vec![vec![0.0; d]; d];
        for i in 0..d {
            ldl_u[i][i] = 1.0;
            let mut di = gram[i][i];
            for k in 0..i {
                di -= ldl_d[k] * ldl_u[k][i] * ldl_u[k][i];
            }
            for j in i + 1..d {
                let mut v = gram[i][j];
                for k in 0..i {
                    v -= ldl_d[k] * ldl_u[k][i] * ldl_u[k][j];
                }
                ldl_u[i][j] = v / di;
            }
            ldl_d[i] = di;
        }
        FloatLattice { d, basis, ldl_d, ldl_u }
    }

    fn apply(&self, c: &[f64]) -> Vec<f64> {
        (0..self.d).map(|i| (0..self.d).map(|j| self.basis[i][j] * c[j]).sum()).collect()
    }

    /// Squared distance from the point with basis coordinates `u` to the lattice.
    fn dist_sq_coords(&self, u: &[f64]) -> f64 {
        let rounded: Vec<f64> = u.iter().map(|x| x.round()).collect();
        let diff: Vec<f64> = rounded.iter().zip(u).map(|(a, b)| a - b).collect();
        let p = self.apply(&diff);
        let mut best = p.iter().map(|x| x * x).sum::<f64>() * (1.0 + 1e-12) + 1e-300;
        let mut x = vec![0.0; self.d];
        self.search(self.d - 1, u, 0.0, &mut x, &mut best);
        best
    }

    fn search(&self, i: usize, u: &[f64], partial: f64, x: &mut [f64], best: &mut f64) {
        let mut center = u[i];
        for j in i + 1..self.d {
            center -= self.ldl_u[i][j] * (x[j] - u[j]);
        }
        let budget = *best - partial;
        if budget < 0.0 {
            return;
        }
        let spread = (budget / self.ldl_d[i]).sqrt();
        let lo = (center - spread).ceil() as i64;
        let hi = (center + spread).floor() as i64;
        for xi in lo..=hi {
            let off = xi as f64 - center;
            let total = partial + self.ldl_d[i] * off * off;
            if total > *best {
                continue;
            }
            x[i] = xi as f64;
            if i == 0 {
                *best = total;
            } else {
                self.search(i - 1, u, total, x, best);
            }
        }
    }

    /// Circumradius of the image of a coefficient cube with side `h`.
    fn cell_radius(&self, h: f64) -> f64 {
        let mut best: f64 = 0.0;
        for mask in 0..(1u32 << self.d) {
            let s: Vec<f64> = (0..self.d).map(|j| if mask & (1 << j) != 0 { h / 2.0 } else { -h / 2.0 }).collect();
            let p = self.apply(&s);
            best = best.max(p.iter().map(|x| x * x).sum::<f64>().sqrt());
        }
        best
    }
}

/// Covering radius of the lattice (the diameter of the flat torus R^d / L)
/// within `tolerance`, for d <= 4.
pub fn covering_radius(l: &Lattice, tolerance: f64) -> Result<f64> {
    covering_radius_with(l, tolerance, Exec::default())
}

pub fn covering_radius_with(l: &Lattice, tolerance: f64, exec: Exec) -> Result<f64> {
    let d = l.dim();
    if d > MAX_DIM {
        return Err(Error::Unsupported(format!("covering radius in dimension {d} (supported: d <= {MAX_DIM})")));
    }
    if !(tolerance > 0.0) {
        return Err(Error::InvalidInput("tolerance must be positive".into()));
    }
    let gram = l.gram();
    let orthogonal = (0..d).all(|i| (0..d).all(|j| i == j || gram[(i, j)].is_zero()));
    if orthogonal {
        let s: f64 = (0..d).map(|i| rational::to_f64(&gram[(i, i)])).sum();
        return Ok(0.5 * s.sqrt());
    }
    let fl = FloatLattice::new(l);
    let mut level = 0u32;
    let mut frontier: Vec<Vec<f64>> = vec![vec![0.0; d]]; // lower corners, side 2^-level
    let mut best: f64 = 0.0;
    loop {
        let h = 0.5f64.powi(level as i32);
        let radius = fl.cell_radius(h);
        let centers: Vec<f64> = parallel::map(exec, &frontier, |corner| {
            let c: Vec<f64> = corner.iter().map(|x| x + h / 2.0).collect();
            fl.dist_sq_coords(&c).sqrt()
        });
        best = centers.iter().cloned().fold(best, f64::max);
        let survivors: Vec<&Vec<f64>> =
            frontier.iter().zip(&centers).filter(|(_, &dc)| dc + radius > best + tolerance).map(|(c, _)| c).collect();
        if survivors.is_empty() {
            return Ok(best);
        }
        level += 1;
        if level > MAX_LEVELS || survivors.len() << d > MAX_FRONTIER {
            return Err(Error::Unsupported(format!("covering radius search exceeded its budget at tolerance {tolerance}")));
        }
        let half = h / 2.0;
        frontier = survivors
            .into_iter()
            .flat_map(|corner| {
                (0..(1u32 << d)).map(move |mask| {
                    corner.iter().enumerate().map(|(j, x)| if mask & (1 << j) != 0 { x + half } else { *x }).collect()
                })
            })
            .collect();
    }
}

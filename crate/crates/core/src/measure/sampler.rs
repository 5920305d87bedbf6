//! Inverse-CDF sampling of a density tabulated on a box grid.

use rand::Rng;

use crate::error::{Error, Result};

/// Piecewise-constant density on a d-dimensional grid of cells.
///
/// A draw picks the first coordinate's cell from its marginal, then each
/// following coordinate's cell from the conditional given the cells
/// already chosen, and finally a uniform point inside the cell.
#[derive(Debug, Clone)]
pub struct GridSampler {
    lo: Vec<f64>,
    width: Vec<f64>,
    cells: Vec<usize>,
    /// levels[k][prefix] = mass of all cells whose first k+1 indices are `prefix`.
    levels: Vec<Vec<f64>>,
}

impl GridSampler {
    /// Tabulate `density` at the midpoints of `cells[k]` cells spanning
    /// `ranges[k]` in each dimension.
    pub fn new<F: FnMut(&[f64]) -> f64>(ranges: &[(f64, f64)], cells: &[usize], mut density: F) -> Result<Self> {
        let d = ranges.len();
        if d == 0 || cells.len() != d || cells.iter().any(|&c| c == 0) {
            return Err(Error::invalid("sampler needs a nonempty grid in every dimension"));
        }
        if ranges.iter().any(|r| !(r.1 > r.0)) {
            return Err(Error::invalid("sampler ranges must be increasing"));
        }
        let total: usize = cells.iter().product();
        let lo: Vec<f64> = ranges.iter().map(|r| r.0).collect();
        let width: Vec<f64> = ranges.iter().zip(cells).map(|(r, &c)| (r.1 - r.0) / c as f64).collect();
        let mut finest = vec![0.0; total];
        let mut point = vec![0.0; d];
        for (flat, slot) in finest.iter_mut().enumerate() {
            let mut rem = flat;
            for k in (0..d).rev() {
                let i = rem % cells[k];
                rem /= cells[k];
                point[k] = lo[k] + (i as f64 + 0.5) * width[k];
            }
            let v = density(&point);
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("density must be finite and nonnegative, got {v}")));
            }
            *slot = v;
        }
        let mut levels = vec![finest];
        for k in (0..d - 1).rev() {
            let prev = levels.last().expect("nonempty");
            let c = cells[k + 1];
            levels.push(prev.chunks(c).map(|ch| ch.iter().sum()).collect());
        }
        levels.reverse();
        if !(levels[0].iter().sum::<f64>() > 0.0) {
            return Err(Error::invalid("density vanishes on the sampling grid"));
        }
        Ok(Self { lo, width, cells: cells.to_vec(), levels })
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.cells.len();
        let mut prefix = 0usize;
        let mut out = vec![0.0; d];
        for k in 0..d {
            let row = &self.levels[k][prefix * self.cells[k]..(prefix + 1) * self.cells[k]];
            let mass: f64 = row.iter().sum();
            let target = rng.random::<f64>() * mass;
            let mut acc = 0.0;
            let mut pick = row.len() - 1;
            for (i, v) in row.iter().enumerate() {
                acc += v;
                if target < acc {
                    pick = i;
                    break;
                }
            }
            // never land on an empty cell through round-off at the top end
            while row[pick] == 0.0 && pick > 0 {
                pick -= 1;
            }
            out[k] = self.lo[k] + (pick as f64 + rng.random::<f64>()) * self.width[k];
            prefix = prefix * self.cells[k] + pick;
        }
        out
    }
}

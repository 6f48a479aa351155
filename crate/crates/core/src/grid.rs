use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned parameter box `[lo, hi]` with `steps` divisions per axis.
///
/// Used two ways: as a node set (`steps` equally spaced samples per axis,
/// endpoints included) for maps and audits, and as a cell partition
/// (`steps` cells per axis) for stratification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamGrid {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub steps: Vec<usize>,
}

impl ParamGrid {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, steps: Vec<usize>) -> Result<Self> {
        let g = Self { lo, hi, steps };
        g.validate()?;
        Ok(g)
    }

    /// Same number of steps on every axis of a cube `[lo, hi]^d`.
    pub fn cube(d: usize, lo: f64, hi: f64, steps: usize) -> Self {
        Self {
            lo: vec![lo; d],
            hi: vec![hi; d],
            steps: vec![steps; d],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.lo.len();
        if d == 0 || self.hi.len() != d || self.steps.len() != d {
            return Err(Error::InvalidInput(format!(
                "grid axes disagree: lo {}, hi {}, steps {}",
                self.lo.len(),
                self.hi.len(),
                self.steps.len()
            )));
        }
        for a in 0..d {
            if !(self.lo[a] < self.hi[a]) || self.steps[a] == 0 {
                return Err(Error::InvalidInput(format!(
                    "grid axis {a} is empty: [{}, {}] with {} steps",
                    self.lo[a], self.hi[a], self.steps[a]
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn doubled(&self) -> Self {
        Self {
            lo: self.lo.clone(),
            hi: self.hi.clone(),
            steps: self.steps.iter().map(|s| 2 * s).collect(),
        }
    }

    fn axis_nodes(&self, a: usize) -> Vec<f64> {
        let s = self.steps[a];
        if s == 1 {
            return vec![0.5 * (self.lo[a] + self.hi[a])];
        }
        let h = (self.hi[a] - self.lo[a]) / (s - 1) as f64;
        (0..s).map(|i| self.lo[a] + h * i as f64).collect()
    }

    /// Node samples in row-major order (last axis fastest).
    pub fn nodes(&self) -> Vec<Vec<f64>> {
        let axes: Vec<Vec<f64>> = (0..self.dim()).map(|a| self.axis_nodes(a)).collect();
        cartesian(&axes)
    }

    pub fn cell_count(&self) -> usize {
        self.steps.iter().product()
    }

    pub fn cell_width(&self, a: usize) -> f64 {
        (self.hi[a] - self.lo[a]) / self.steps[a] as f64
    }
}

pub(crate) fn cartesian(axes: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for &v in axis {
                let mut p = prefix.clone();
                p.push(v);
                next.push(p);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nodes_include_endpoints() {
        let g = ParamGrid::new(vec![-1.0], vec![1.0], vec![5]).unwrap();
        let n: Vec<f64> = g.nodes().into_iter().map(|p| p[0]).collect();
        assert_eq!(n, vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn row_major_order() {
        let g = ParamGrid::new(vec![0.0, 0.0], vec![1.0, 1.0], vec![2, 3]).unwrap();
        let n = g.nodes();
        assert_eq!(n.len(), 6);
        assert_eq!(n[1], vec![0.0, 0.5]);
        assert_eq!(n[3], vec![1.0, 0.0]);
    }

    #[test]
    fn rejects_empty_axis() {
        assert!(ParamGrid::new(vec![1.0], vec![1.0], vec![3]).is_err());
        assert!(ParamGrid::new(vec![0.0], vec![1.0], vec![0]).is_err());
        assert!(ParamGrid::new(vec![0.0], vec![1.0, 2.0], vec![1]).is_err());
    }
}

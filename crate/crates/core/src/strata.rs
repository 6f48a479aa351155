//! Rank classification of a parameter grid by the pullback form `H(x)`.
//!
//! Cells are integer boxes on a lattice of `2^scale` sub-steps per grid cell,
//! so refined and unrefined cells share one coordinate system and face
//! adjacency is exact integer arithmetic.

use std::collections::BTreeMap;

use petgraph::unionfind::UnionFind;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{sorted_eigen, DomainModel};
use crate::error::{Error, Result};
use crate::grid::{cartesian, ParamGrid};
use crate::patch::{pullback_unchecked, PatchModel};

/// Relative rank tolerance applied to the largest eigenvalue on the grid.
pub const DEFAULT_RANK_REL_TOL: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrataCell {
    pub ilo: Vec<i64>,
    pub ihi: Vec<i64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub label: usize,
    pub min_eigenvalue: f64,
    pub witness: Vec<f64>,
    pub max_eigenvalue: f64,
    pub transition: bool,
}

impl StrataCell {
    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(a, b)| 0.5 * (a + b)).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub rank: usize,
    pub cells: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratificationReport {
    pub patch: String,
    pub grid: ParamGrid,
    /// Each grid cell spans `2^scale` lattice units per axis.
    pub scale: u32,
    pub tol_rank: f64,
    pub cells: Vec<StrataCell>,
    pub components: Vec<Component>,
}

impl StratificationReport {
    /// Number of components per rank.
    pub fn component_counts(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for c in &self.components {
            *out.entry(c.rank).or_insert(0) += 1;
        }
        out
    }

    pub fn transition_count(&self) -> usize {
        self.cells.iter().filter(|c| c.transition).count()
    }

    /// Indices of the cells whose closed box contains `x`.
    pub fn cells_containing(&self, x: &[f64]) -> Vec<usize> {
        (0..self.cells.len()).filter(|&i| self.cells[i].contains(x)).collect()
    }

    /// Component index owning cell `i`.
    pub fn component_of(&self, i: usize) -> Option<usize> {
        self.components.iter().position(|c| c.cells.contains(&i))
    }

    /// Extent of the union of cells with label `rank` along axis `axis`.
    pub fn label_extent(&self, rank: usize, axis: usize) -> Option<(f64, f64)> {
        self.cells
            .iter()
            .filter(|c| c.label == rank)
            .map(|c| (c.lo[axis], c.hi[axis]))
            .reduce(|a, b| (a.0.min(b.0), a.1.max(b.1)))
    }

    /// One row per cell: center coordinates, label, min eigenvalue.
    pub fn to_csv(&self) -> String {
        let d = self.grid.dim();
        let mut s = String::new();
        for a in 0..d {
            s.push_str(&format!("x{a},"));
        }
        s.push_str("label,min_eigenvalue,transition\n");
        for c in &self.cells {
            for v in c.center() {
                s.push_str(&format!("{v:.12e},"));
            }
            s.push_str(&format!("{},{:.12e},{}\n", c.label, c.min_eigenvalue, c.transition));
        }
        s
    }
}

struct Labeler<'a> {
    patch: &'a dyn PatchModel,
    domain: &'a DomainModel,
}

impl Labeler<'_> {
    fn spectrum(&self, x: &[f64]) -> Vec<f64> {
        sorted_eigen(&pullback_unchecked(self.patch, self.domain, x)).0
    }

    /// Minimizes `lambda_min(H)` over the closed box: lattice scan followed
    /// by a shrinking compass search kept inside the box.
    fn min_witness(&self, lo: &[f64], hi: &[f64]) -> (Vec<f64>, f64, f64) {
        let d = lo.len();
        let per_axis = if d == 1 { 9 } else { 5 };
        let axes: Vec<Vec<f64>> = (0..d)
            .map(|a| {
                (0..per_axis)
                    .map(|i| lo[a] + (hi[a] - lo[a]) * i as f64 / (per_axis - 1) as f64)
                    .collect()
            })
            .collect();
        let mut best = lo.to_vec();
        let mut best_val = f64::INFINITY;
        let mut lmax = f64::NEG_INFINITY;
        for x in cartesian(&axes) {
            let spec = self.spectrum(&x);
            lmax = lmax.max(*spec.last().unwrap());
            if spec[0] < best_val {
                best_val = spec[0];
                best = x;
            }
        }
        let mut step: Vec<f64> = (0..d)
            .map(|a| (hi[a] - lo[a]) / (per_axis - 1) as f64)
            .collect();
        for _ in 0..60 {
            let mut improved = false;
            for a in 0..d {
                for sign in [-1.0, 1.0] {
                    let mut y = best.clone();
                    y[a] = (y[a] + sign * step[a]).clamp(lo[a], hi[a]);
                    if y[a] == best[a] {
                        continue;
                    }
                    let v = self.spectrum(&y)[0];
                    if v < best_val {
                        best_val = v;
                        best = y;
                        improved = true;
                    }
                }
            }
            if !improved {
                step.iter_mut().for_each(|s| *s *= 0.5);
                if step
                    .iter()
                    .zip(lo.iter().zip(hi))
                    .all(|(s, (a, b))| *s <= 1e-6 * (b - a))
                {
                    break;
                }
            }
        }
        (best, best_val, lmax)
    }
}

fn make_cell(
    lab: &Labeler<'_>,
    grid: &ParamGrid,
    scale: u32,
    ilo: Vec<i64>,
    ihi: Vec<i64>,
) -> StrataCell {
    let unit = |a: usize| grid.cell_width(a) / (1i64 << scale) as f64;
    let lo: Vec<f64> = (0..grid.dim()).map(|a| grid.lo[a] + unit(a) * ilo[a] as f64).collect();
    let hi: Vec<f64> = (0..grid.dim()).map(|a| grid.lo[a] + unit(a) * ihi[a] as f64).collect();
    let (witness, min_eigenvalue, max_eigenvalue) = lab.min_witness(&lo, &hi);
    StrataCell {
        ilo,
        ihi,
        lo,
        hi,
        label: 0,
        min_eigenvalue,
        witness,
        max_eigenvalue,
        transition: false,
    }
}

fn face_adjacent(a: &StrataCell, b: &StrataCell) -> bool {
    let d = a.ilo.len();
    let mut touching = 0;
    for k in 0..d {
        if a.ihi[k] == b.ilo[k] || b.ihi[k] == a.ilo[k] {
            touching += 1;
        } else if a.ihi[k].min(b.ihi[k]) <= a.ilo[k].max(b.ilo[k]) {
            return false;
        }
    }
    touching == 1
}

fn neighbours(cells: &[StrataCell]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new(); cells.len()];
    for i in 0..cells.len() {
        for j in i + 1..cells.len() {
            if face_adjacent(&cells[i], &cells[j]) {
                out[i].push(j);
                out[j].push(i);
            }
        }
    }
    out
}

/// Flags transition cells and rebuilds face-adjacent components
/// (ordered by rank, then by lowest cell index).
fn finish(cells: &mut [StrataCell]) -> Vec<Component> {
    let adj = neighbours(cells);
    for i in 0..cells.len() {
        let differs = adj[i].iter().any(|&j| cells[j].label != cells[i].label);
        cells[i].transition = differs;
    }
    let mut uf = UnionFind::<usize>::new(cells.len());
    for (i, ns) in adj.iter().enumerate() {
        for &j in ns {
            if cells[i].label == cells[j].label {
                uf.union(i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..cells.len() {
        groups.entry(uf.find(i)).or_default().push(i);
    }
    let mut comps: Vec<Component> = groups
        .into_values()
        .map(|cells_in| Component {
            rank: cells[cells_in[0]].label,
            cells: cells_in,
        })
        .collect();
    comps.sort_by_key(|c| (c.rank, c.cells[0]));
    comps
}

/// Count of eigenvalues of `H` at the witness that are `>= tol_rank`.
fn rank_of(lab: &Labeler<'_>, cell: &StrataCell, tol_rank: f64) -> usize {
    lab.spectrum(&cell.witness)
        .iter()
        .filter(|&&l| l >= tol_rank)
        .count()
}

/// Labels every cell of `grid` by the rank of `H` at its min-eigenvalue
/// witness. `tol_rank = None` uses `1e-6 * max lambda_max(H)` over the grid.
pub fn stratify(
    patch: &dyn PatchModel,
    domain: &DomainModel,
    grid: &ParamGrid,
    tol_rank: Option<f64>,
) -> Result<StratificationReport> {
    grid.validate()?;
    if grid.dim() != patch.dim() {
        return Err(Error::DimensionMismatch {
            expected: patch.dim(),
            got: grid.dim(),
        });
    }
    let lab = Labeler { patch, domain };
    let d = grid.dim();
    let axes: Vec<Vec<f64>> = (0..d)
        .map(|a| (0..grid.steps[a]).map(|i| i as f64).collect())
        .collect();
    let starts: Vec<Vec<i64>> = cartesian(&axes)
        .into_iter()
        .map(|v| v.into_iter().map(|t| t as i64).collect())
        .collect();
    let mut cells: Vec<StrataCell> = starts
        .into_par_iter()
        .map(|ilo| {
            let ihi: Vec<i64> = ilo.iter().map(|i| i + 1).collect();
            make_cell(&lab, grid, 0, ilo, ihi)
        })
        .collect();
    let tol = tol_rank.unwrap_or_else(|| {
        DEFAULT_RANK_REL_TOL * cells.iter().map(|c| c.max_eigenvalue).fold(0.0, f64::max)
    });
    let labels: Vec<usize> = cells.par_iter().map(|c| rank_of(&lab, c, tol)).collect();
    for (c, l) in cells.iter_mut().zip(labels) {
        c.label = l;
    }
    let components = finish(&mut cells);
    Ok(StratificationReport {
        patch: patch.name().into(),
        grid: grid.clone(),
        scale: 0,
        tol_rank: tol,
        cells,
        components,
    })
}

/// Subdivides transition cells `levels` times (each time re-flagging), with
/// fresh labels on the children. Other cells keep their labels.
pub fn refine_transitions(
    report: &StratificationReport,
    patch: &dyn PatchModel,
    domain: &DomainModel,
    levels: u32,
) -> StratificationReport {
    let lab = Labeler { patch, domain };
    let d = report.grid.dim();
    let mut out = report.clone();
    for _ in 0..levels {
        if out.cells.iter().all(|c| !c.transition) {
            break;
        }
        out.scale += 1;
        let scale = out.scale;
        let mut keep = Vec::new();
        let mut split = Vec::new();
        for mut c in std::mem::take(&mut out.cells) {
            c.ilo.iter_mut().for_each(|v| *v *= 2);
            c.ihi.iter_mut().for_each(|v| *v *= 2);
            if c.transition {
                for mask in 0..1usize << d {
                    let mut ilo = c.ilo.clone();
                    let mut ihi = c.ihi.clone();
                    for a in 0..d {
                        let mid = (c.ilo[a] + c.ihi[a]) / 2;
                        if mask >> (d - 1 - a) & 1 == 0 {
                            ihi[a] = mid;
                        } else {
                            ilo[a] = mid;
                        }
                    }
                    split.push((ilo, ihi));
                }
            } else {
                keep.push(c);
            }
        }
        let grid = out.grid.clone();
        let tol = out.tol_rank;
        let mut fresh: Vec<StrataCell> = split
            .into_par_iter()
            .map(|(ilo, ihi)| {
                let mut c = make_cell(&lab, &grid, scale, ilo, ihi);
                c.label = rank_of(&lab, &c, tol);
                c
            })
            .collect();
        keep.append(&mut fresh);
        keep.sort_by(|a, b| a.ilo.cmp(&b.ilo));
        out.cells = keep;
        out.components = finish(&mut out.cells);
    }
    out
}

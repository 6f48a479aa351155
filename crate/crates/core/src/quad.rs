//! Tensor Gauss-Legendre cubature on boxes with global adaptive dyadic
//! subdivision.
//!
//! Each cell carries two estimates: the tensor rule on the cell and the sum
//! of the same rule on its `2^d` dyadic children. Their difference is the
//! cell's error estimate; the cell with the largest estimate is split until
//! the total falls under the absolute tolerance. Cells are finally summed in
//! lexicographic order of their lower corners with compensated summation, so
//! the result is bit-stable for fixed settings.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64;

use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// `n`-point rule on `[-1, 1]`, nodes by Newton iteration on `P_n`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadSettings {
    /// Points per axis of the tensor rule; `None` picks 10 / 8 / 6 for d = 1 / 2 / 3.
    pub order: Option<usize>,
    pub abs_tol: f64,
    pub max_cells: usize,
}

impl Default for QuadSettings {
    fn default() -> Self {
        Self {
            order: None,
            abs_tol: 1e-8,
            max_cells: 20_000,
        }
    }
}

impl QuadSettings {
    pub fn with_tol(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    fn order_for(&self, d: usize) -> usize {
        self.order.unwrap_or(match d {
            1 => 10,
            2 => 8,
            _ => 6,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error_estimate: f64,
    pub cells: usize,
    pub evaluations: usize,
}

struct Cell {
    lo: Vec<f64>,
    hi: Vec<f64>,
    children: Vec<Complex64>,
    fine: Complex64,
    err: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.err
            .total_cmp(&other.err)
            .then_with(|| cmp_vec(&other.lo, &self.lo))
    }
}

fn cmp_vec(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

struct Rule<'a, F> {
    f: &'a F,
    gl: GaussLegendre,
    d: usize,
    evaluations: usize,
}

impl<F: Fn(&[f64]) -> Complex64> Rule<'_, F> {
    fn apply(&mut self, lo: &[f64], hi: &[f64]) -> Complex64 {
        let p = self.gl.nodes.len();
        let half: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (b - a)).collect();
        let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        let jac: f64 = half.iter().product();
        let mut idx = vec![0usize; self.d];
        let mut x = vec![0.0; self.d];
        let mut acc = Complex64::new(0.0, 0.0);
        loop {
            let mut w = 1.0;
            for a in 0..self.d {
                x[a] = mid[a] + half[a] * self.gl.nodes[idx[a]];
                w *= self.gl.weights[idx[a]];
            }
            acc += (self.f)(&x) * w;
            self.evaluations += 1;
            let mut a = self.d;
            loop {
                if a == 0 {
                    return acc * jac;
                }
                a -= 1;
                idx[a] += 1;
                if idx[a] < p {
                    break;
                }
                idx[a] = 0;
            }
        }
    }

    fn split(&self, lo: &[f64], hi: &[f64]) -> Vec<(Vec<f64>, Vec<f64>)> {
        let mid: Vec<f64> = lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect();
        (0..1usize << self.d)
            .map(|mask| {
                let mut clo = lo.to_vec();
                let mut chi = hi.to_vec();
                for a in 0..self.d {
                    if mask >> (self.d - 1 - a) & 1 == 0 {
                        chi[a] = mid[a];
                    } else {
                        clo[a] = mid[a];
                    }
                }
                (clo, chi)
            })
            .collect()
    }

    fn cell(&mut self, lo: Vec<f64>, hi: Vec<f64>, coarse: Complex64) -> Cell {
        let children: Vec<Complex64> = self
            .split(&lo, &hi)
            .into_iter()
            .map(|(a, b)| self.apply(&a, &b))
            .collect();
        let fine = neumaier(children.iter().copied());
        Cell {
            err: (fine - coarse).norm(),
            lo,
            hi,
            children,
            fine,
        }
    }
}

fn neumaier(values: impl Iterator<Item = Complex64>) -> Complex64 {
    let (mut sr, mut cr, mut si, mut ci) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for v in values {
        let t = sr + v.re;
        cr += if sr.abs() >= v.re.abs() { (sr - t) + v.re } else { (v.re - t) + sr };
        sr = t;
        let t = si + v.im;
        ci += if si.abs() >= v.im.abs() { (si - t) + v.im } else { (v.im - t) + si };
        si = t;
    }
    Complex64::new(sr + cr, si + ci)
}

/// Integrates `f` over the box spanned by per-axis breakpoints. Each axis
/// list must be strictly increasing with at least two entries; the initial
/// partition is their tensor product.
pub fn integrate_box<F>(f: &F, breakpoints: &[Vec<f64>], settings: &QuadSettings) -> Result<QuadResult>
where
    F: Fn(&[f64]) -> Complex64,
{
    let d = breakpoints.len();
    if d == 0 {
        return Err(Error::InvalidInput("integration box has no axes".into()));
    }
    for (a, bp) in breakpoints.iter().enumerate() {
        if bp.len() < 2 || bp.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput(format!(
                "breakpoints on axis {a} must be strictly increasing with >= 2 entries"
            )));
        }
    }
    let mut rule = Rule {
        f,
        gl: GaussLegendre::new(settings.order_for(d)),
        d,
        evaluations: 0,
    };

    let mut heap = BinaryHeap::new();
    let mut starts: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new())];
    for bp in breakpoints {
        let mut next = Vec::new();
        for (lo, hi) in &starts {
            for w in bp.windows(2) {
                let mut l = lo.clone();
                let mut h = hi.clone();
                l.push(w[0]);
                h.push(w[1]);
                next.push((l, h));
            }
        }
        starts = next;
    }
    let mut total_err = 0.0;
    for (lo, hi) in starts {
        let coarse = rule.apply(&lo, &hi);
        let c = rule.cell(lo, hi, coarse);
        total_err += c.err;
        heap.push(c);
    }

    while total_err > settings.abs_tol && heap.len() < settings.max_cells {
        let worst = heap.pop().expect("non-empty");
        total_err -= worst.err;
        let kids = rule.split(&worst.lo, &worst.hi);
        for ((lo, hi), coarse) in kids.into_iter().zip(worst.children) {
            let c = rule.cell(lo, hi, coarse);
            total_err += c.err;
            heap.push(c);
        }
        if heap.len() % 256 == 0 {
            total_err = heap.iter().map(|c| c.err).sum();
        }
    }

    let mut cells = heap.into_vec();
    cells.sort_by(|a, b| cmp_vec(&a.lo, &b.lo));
    let error_estimate: f64 = cells.iter().map(|c| c.err).sum();
    let value = neumaier(cells.iter().map(|c| c.fine));
    if error_estimate > settings.abs_tol {
        return Err(Error::QuadratureNotConverged {
            achieved: error_estimate,
            requested: settings.abs_tol,
        });
    }
    Ok(QuadResult {
        value,
        error_estimate,
        cells: cells.len(),
        evaluations: rule.evaluations,
    })
}

/// Real-valued convenience wrapper over a single interval partition.
pub fn integrate_real_1d<F>(f: F, breakpoints: Vec<f64>, settings: &QuadSettings) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let g = |x: &[f64]| Complex64::new(f(x[0]), 0.0);
    Ok(integrate_box(&g, &[breakpoints], settings)?.value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(6);
        for k in 0..12 {
            let exact = if k % 2 == 0 { 2.0 / (k as f64 + 1.0) } else { 0.0 };
            let q: f64 = gl
                .nodes
                .iter()
                .zip(&gl.weights)
                .map(|(x, w)| w * x.powi(k))
                .sum();
            assert!((q - exact).abs() < 1e-14, "k = {k}");
        }
    }

    #[test]
    fn weights_sum_to_two() {
        for n in [1, 2, 5, 10, 20] {
            let s: f64 = GaussLegendre::new(n).weights.iter().sum();
            assert!((s - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn adaptive_resolves_narrow_lorentzian() {
        let eps = 1e-3;
        let v = integrate_real_1d(
            |x| eps / (eps * eps + x * x),
            vec![-1.0, 0.3, 1.0],
            &QuadSettings::with_tol(1e-10),
        )
        .unwrap();
        let exact = 2.0 * (1.0 / eps).atan();
        assert!((v - exact).abs() < 1e-9);
    }

    #[test]
    fn two_dimensional_gaussian() {
        let f = |x: &[f64]| Complex64::new((-(x[0] * x[0] + x[1] * x[1])).exp(), 0.0);
        let r = integrate_box(
            &f,
            &[vec![-6.0, 0.0, 6.0], vec![-6.0, 0.0, 6.0]],
            &QuadSettings::with_tol(1e-10),
        )
        .unwrap();
        assert!((r.value.re - std::f64::consts::PI).abs() < 1e-9);
    }

    #[test]
    fn reports_non_convergence() {
        let f = |x: &[f64]| Complex64::new(1.0 / x[0].abs().sqrt().max(1e-300), 0.0);
        let settings = QuadSettings {
            order: Some(2),
            abs_tol: 1e-14,
            max_cells: 8,
        };
        let r = integrate_box(&f, &[vec![-1.0, 1.0]], &settings);
        assert!(matches!(r, Err(Error::QuadratureNotConverged { .. })));
    }

    #[test]
    fn rejects_bad_breakpoints() {
        let f = |_: &[f64]| Complex64::new(1.0, 0.0);
        assert!(integrate_box(&f, &[vec![1.0, 0.0]], &QuadSettings::default()).is_err());
    }
}

use std::num::NonZeroUsize;

use kiddo::{ImmutableKdTree, SquaredEuclidean};

use super::sample::ZeroSample;
use crate::error::{Error, Result};
use crate::poly::{GradientField, SparsePolynomial};

const POLISH_ITERS: usize = 30;
const PROJECTION_ITERS: usize = 8;
/// Sample points tried as starting points for polishing.
const POLISH_STARTS: usize = 8;

/// kd-trees are dimension-generic at compile time; larger dimensions
/// fall back to a linear scan.
enum Tree {
    D1(ImmutableKdTree<f64, 1>),
    D2(ImmutableKdTree<f64, 2>),
    D3(ImmutableKdTree<f64, 3>),
    D4(ImmutableKdTree<f64, 4>),
    D5(ImmutableKdTree<f64, 5>),
    D6(ImmutableKdTree<f64, 6>),
    Scan,
}

macro_rules! build {
    ($variant:ident, $k:literal, $points:expr) => {{
        let pts: Vec<[f64; $k]> = $points.iter().map(|p| p.as_slice().try_into().expect("dimension")).collect();
        Tree::$variant(ImmutableKdTree::new_from_slice(&pts))
    }};
}

macro_rules! query {
    ($tree:expr, $x:expr, $k:expr) => {{
        let q = $x.try_into().expect("dimension");
        $tree.nearest_n::<SquaredEuclidean>(&q, $k).into_iter().map(|nb| nb.item as usize).collect()
    }};
}

/// Nearest-point index over a [`ZeroSample`], with local polishing on `Z_f`.
pub struct ZeroIndex<'a> {
    field: GradientField,
    sample: &'a ZeroSample,
    tree: Tree,
}

impl<'a> ZeroIndex<'a> {
    pub fn new(f: &SparsePolynomial, sample: &'a ZeroSample) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::EmptySample);
        }
        if sample.num_vars != f.num_vars() {
            return Err(Error::DimensionMismatch { expected: f.num_vars(), got: sample.num_vars });
        }
        let tree = match sample.num_vars {
            1 => build!(D1, 1, sample.points),
            2 => build!(D2, 2, sample.points),
            3 => build!(D3, 3, sample.points),
            4 => build!(D4, 4, sample.points),
            5 => build!(D5, 5, sample.points),
            6 => build!(D6, 6, sample.points),
            _ => Tree::Scan,
        };
        Ok(Self { field: GradientField::new(f), sample, tree })
    }

    /// Index of the sample point closest to `x`.
    pub fn nearest(&self, x: &[f64]) -> Result<usize> {
        Ok(self.nearest_k(x, 1)?[0])
    }

    /// Indices of the `k` sample points closest to `x`, closest first.
    pub fn nearest_k(&self, x: &[f64], k: usize) -> Result<Vec<usize>> {
        if x.len() != self.sample.num_vars {
            return Err(Error::DimensionMismatch { expected: self.sample.num_vars, got: x.len() });
        }
        let k = NonZeroUsize::new(k.clamp(1, self.sample.len())).expect("non-empty sample");
        Ok(match &self.tree {
            Tree::D1(t) => query!(t, x, k),
            Tree::D2(t) => query!(t, x, k),
            Tree::D3(t) => query!(t, x, k),
            Tree::D4(t) => query!(t, x, k),
            Tree::D5(t) => query!(t, x, k),
            Tree::D6(t) => query!(t, x, k),
            Tree::Scan => {
                let mut idx: Vec<usize> = (0..self.sample.len()).collect();
                idx.sort_by(|&i, &j| dist(x, &self.sample.points[i]).total_cmp(&dist(x, &self.sample.points[j])));
                idx.truncate(k.get());
                idx
            }
        })
    }

    /// Heuristic bracket `(upper / 2, upper)` for `dist(x, Z_f)`.
    ///
    /// `upper` is the distance to the nearest sample point, improved by
    /// sliding along `Z_f` towards `x` (tangential moves alternated with
    /// Newton projections), started from each of the few nearest sample
    /// points so that the closest branch of `Z_f` is found near crossings.
    /// The lower end is not a certified bound.
    pub fn distance(&self, x: &[f64]) -> Result<(f64, f64)> {
        let near = self.nearest_k(x, POLISH_STARTS)?;
        let mut upper = dist(x, &self.sample.points[near[0]]);
        for &i in &near {
            if let Some(y) = self.polish(x, &self.sample.points[i]) {
                upper = upper.min(dist(x, &y));
            }
        }
        Ok((upper / 2.0, upper))
    }

    fn polish(&self, x: &[f64], z: &[f64]) -> Option<Vec<f64>> {
        let tol = self.sample.residual_tol;
        let n = x.len();
        let mut y = z.to_vec();
        let mut best = dist(x, &y);
        let mut g = vec![0.0; n];
        let mut improved = false;
        for _ in 0..POLISH_ITERS {
            self.field.grad_into(&y, &mut g);
            let gn2: f64 = g.iter().map(|v| v * v).sum();
            if !(gn2 > 1e-24) {
                break;
            }
            let d: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
            let along = d.iter().zip(&g).map(|(a, b)| a * b).sum::<f64>() / gn2;
            let mut cand: Vec<f64> = y.iter().zip(d.iter().zip(&g)).map(|(yi, (di, gi))| yi + di - along * gi).collect();
            for _ in 0..PROJECTION_ITERS {
                let fc = self.field.value(&cand);
                if fc.abs() <= tol * 1e-2 {
                    break;
                }
                self.field.grad_into(&cand, &mut g);
                let gn2: f64 = g.iter().map(|v| v * v).sum();
                if !(gn2 > 1e-24) {
                    break;
                }
                for (c, gi) in cand.iter_mut().zip(&g) {
                    *c -= fc / gn2 * gi;
                }
            }
            let dc = dist(x, &cand);
            if !(self.field.value(&cand).abs() <= tol) || !(dc < best) {
                break;
            }
            let moved = dist(&y, &cand);
            y = cand;
            best = dc;
            improved = true;
            if moved < 1e-14 * (1.0 + best) {
                break;
            }
        }
        improved.then_some(y)
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One-off [`ZeroIndex::distance`].
pub fn distance_to_zero(f: &SparsePolynomial, x: &[f64], sample: &ZeroSample) -> Result<(f64, f64)> {
    ZeroIndex::new(f, sample)?.distance(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::Region;
    use crate::zero_geometry::{sample_zero_set, DEFAULT_RESIDUAL_TOL};

    fn setup(s: &str, r: f64) -> (SparsePolynomial, ZeroSample) {
        let f = SparsePolynomial::parse(s).unwrap();
        let u = Region::cube(f.num_vars(), r).unwrap();
        let z = sample_zero_set(&f, &u, 2000, DEFAULT_RESIDUAL_TOL, 11).unwrap();
        (f, z)
    }

    #[test]
    fn examples() {
        let (f, z) = setup("x1^2 + x2^2", 1.0);
        let (lo, hi) = distance_to_zero(&f, &[0.3, 0.4], &z).unwrap();
        assert!((hi - 0.5).abs() < 1e-4);
        assert_eq!(lo, hi / 2.0);

        let (f, z) = setup("x1*x2", 1.0);
        let (_, hi) = distance_to_zero(&f, &[0.2, 0.7], &z).unwrap();
        assert!((hi - 0.2).abs() < 1e-6, "{hi}");

        let (f, z) = setup("x1^2 + x2^2 - 1", 2.0);
        let (_, hi) = distance_to_zero(&f, &[2.0, 0.0], &z).unwrap();
        assert!((hi - 1.0).abs() < 1e-6, "{hi}");
    }

    #[test]
    fn circle_oracle_on_random_points() {
        let (f, z) = setup("x1^2 + x2^2 - 1", 2.0);
        let idx = ZeroIndex::new(&f, &z).unwrap();
        let mut rng = crate::numeric::substream(5, 0);
        let u = Region::cube(2, 2.0).unwrap();
        for _ in 0..200 {
            let x = u.sample(&mut rng);
            let exact = ((x[0] * x[0] + x[1] * x[1]).sqrt() - 1.0).abs();
            let (_, hi) = idx.distance(&x).unwrap();
            assert!(hi >= exact - 1e-6 && hi <= exact + 1e-4, "{x:?}: {hi} vs {exact}");
        }
    }

    #[test]
    fn empty_sample_is_an_error() {
        let f = SparsePolynomial::parse("x1").unwrap();
        let z = ZeroSample { num_vars: 1, points: vec![], residuals: vec![], trace_lengths: vec![], residual_tol: 1e-10, attempts: 0 };
        assert_eq!(distance_to_zero(&f, &[0.5], &z).unwrap_err(), Error::EmptySample);
    }
}

//! Adaptive box covers of level bands `{x ∈ U : lower < |f(x)| ≤ upper}`.
//!
//! A band near the zero set is a thin, possibly very anisotropic set, and
//! uniform sampling of `U` almost never lands in it once `upper` is small.
//! The cover is a kd-tree refinement of `U`: boxes whose interval enclosure
//! of `|f|` misses the band are discarded, boxes entirely inside it are
//! frozen, and the remaining boxes are split (largest volume first) along
//! the axis with the largest bound on `|∂_i f| · width_i`. Monte Carlo
//! samples are then drawn from the cover only.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;

use crate::numeric::CompensatedSum;
use crate::poly::GradientField;
use crate::region::Region;

/// Values of `|f|` in `(lower, upper]`, or `[0, upper]` when `lower` is `None`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelBand {
    pub lower: Option<f64>,
    pub upper: f64,
}

impl LevelBand {
    /// The dyadic shell `2^{-j-1} < |f| ≤ 2^{-j}`.
    pub fn shell(level: i32) -> Self {
        let upper = (-level as f64).exp2();
        Self { lower: Some(upper / 2.0), upper }
    }

    /// The sublevel set `|f| ≤ t`.
    pub fn sublevel(t: f64) -> Self {
        Self { lower: None, upper: t }
    }

    #[inline]
    pub fn contains(&self, abs_f: f64) -> bool {
        abs_f <= self.upper && self.lower.map_or(true, |l| abs_f > l)
    }

    fn classify(&self, min_abs: f64, max_abs: f64) -> Fit {
        if min_abs > self.upper || self.lower.is_some_and(|l| max_abs <= l) {
            Fit::Outside
        } else if max_abs <= self.upper && self.lower.map_or(true, |l| min_abs > l) {
            Fit::Inside
        } else {
            Fit::Partial
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fit {
    Outside,
    Inside,
    Partial,
}

#[derive(Debug, Clone)]
pub struct CoverBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub volume: f64,
    /// The whole box lies in the band.
    pub inside: bool,
}

impl CoverBox {
    fn new(lo: Vec<f64>, hi: Vec<f64>, inside: bool) -> Self {
        let volume = lo.iter().zip(&hi).map(|(a, b)| b - a).product();
        Self { lo, hi, volume, inside }
    }
}

struct Queued(CoverBox);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        // Ties broken on coordinates so the refinement order is deterministic.
        self.0
            .volume
            .total_cmp(&other.0.volume)
            .then_with(|| cmp_coords(&other.0.lo, &self.0.lo))
    }
}

fn cmp_coords(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// A finite union of disjoint boxes containing the band.
#[derive(Debug, Clone)]
pub struct LevelCover {
    pub band: LevelBand,
    pub boxes: Vec<CoverBox>,
}

impl LevelCover {
    /// Refines `region` until every box is resolved or `max_boxes` is reached.
    pub fn build(field: &GradientField, region: &Region, band: LevelBand, max_boxes: usize) -> Self {
        let f = field.poly();
        let classify = |lo: &[f64], hi: &[f64]| {
            let r = f.range_over(lo, hi);
            band.classify(r.mig(), r.mag())
        };
        let mut frozen = Vec::new();
        let mut heap = BinaryHeap::new();
        match classify(region.lo(), region.hi()) {
            Fit::Outside => {}
            Fit::Inside => frozen.push(CoverBox::new(region.lo().to_vec(), region.hi().to_vec(), true)),
            Fit::Partial => heap.push(Queued(CoverBox::new(region.lo().to_vec(), region.hi().to_vec(), false))),
        }
        let max_boxes = max_boxes.max(1);
        while let Some(Queued(b)) = heap.pop() {
            if frozen.len() + heap.len() + 2 > max_boxes {
                heap.push(Queued(b));
                break;
            }
            let axis = split_axis(field, region, &b);
            let mid = 0.5 * (b.lo[axis] + b.hi[axis]);
            let mut left_hi = b.hi.clone();
            left_hi[axis] = mid;
            let mut right_lo = b.lo.clone();
            right_lo[axis] = mid;
            for (lo, hi) in [(b.lo.clone(), left_hi), (right_lo, b.hi.clone())] {
                match classify(&lo, &hi) {
                    Fit::Outside => {}
                    Fit::Inside => frozen.push(CoverBox::new(lo, hi, true)),
                    Fit::Partial => heap.push(Queued(CoverBox::new(lo, hi, false))),
                }
            }
        }
        let mut boxes = frozen;
        boxes.extend(heap.into_iter().map(|q| q.0));
        boxes.sort_by(|a, b| cmp_coords(&a.lo, &b.lo).then_with(|| cmp_coords(&a.hi, &b.hi)));
        Self { band, boxes }
    }

    pub fn volume(&self) -> f64 {
        self.boxes.iter().map(|b| b.volume).collect::<CompensatedSum>().value()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Stratified Monte Carlo estimate of the band's measure and of
    /// `∫_band g`, with about `samples` points allocated to boxes in
    /// proportion to their volume (at least two per box).
    pub fn estimate<R, G>(&self, field: &GradientField, samples: usize, rng: &mut R, integrand: G) -> BandEstimate
    where
        R: Rng,
        G: Fn(&[f64], f64) -> f64,
    {
        let total = self.volume();
        let mut est = BandEstimate::default();
        if total <= 0.0 {
            return est;
        }
        let f = field.poly();
        let mut measure = CompensatedSum::new();
        let mut integral = CompensatedSum::new();
        let mut x = vec![0.0; f.num_vars()];
        for b in &self.boxes {
            let n = ((samples as f64 * b.volume / total).round() as usize).max(2);
            let (mut s1, mut s2, mut h1) = (CompensatedSum::new(), CompensatedSum::new(), 0usize);
            for _ in 0..n {
                for (xi, (a, c)) in x.iter_mut().zip(b.lo.iter().zip(&b.hi)) {
                    *xi = a + (c - a) * rng.gen::<f64>();
                }
                let fx = f.value(&x).abs();
                if fx < SINK_THRESHOLD {
                    est.sink += 1;
                    continue;
                }
                if self.band.contains(fx) {
                    let g = integrand(&x, fx);
                    s1.add(g);
                    s2.add(g * g);
                    h1 += 1;
                }
            }
            let nf = n as f64;
            let p = h1 as f64 / nf;
            measure.add(b.volume * p);
            est.measure_var += b.volume * b.volume * p * (1.0 - p) / (nf - 1.0).max(1.0);
            let mean = s1.value() / nf;
            let var = (s2.value() / nf - mean * mean).max(0.0) * nf / (nf - 1.0).max(1.0);
            integral.add(b.volume * mean);
            est.integral_var += b.volume * b.volume * var / nf;
            est.hits += h1;
            est.samples += n;
        }
        est.measure = measure.value();
        est.integral = integral.value();
        est.cover_volume = total;
        est
    }
}

/// Points with `|f|` below this are set aside instead of being binned.
pub const SINK_THRESHOLD: f64 = 1e-300;

#[derive(Debug, Clone, Default)]
pub struct BandEstimate {
    pub measure: f64,
    pub measure_var: f64,
    pub integral: f64,
    pub integral_var: f64,
    pub hits: usize,
    pub samples: usize,
    pub sink: usize,
    pub cover_volume: f64,
}

fn split_axis(field: &GradientField, region: &Region, b: &CoverBox) -> usize {
    let bounds = field.partial_bounds(&b.lo, &b.hi);
    let mut best = 0;
    let mut best_key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for i in 0..b.lo.len() {
        let width = b.hi[i] - b.lo[i];
        let rel = width / (region.hi()[i] - region.lo()[i]);
        let key = (bounds[i] * width, rel);
        if key.0 > best_key.0 || (key.0 == best_key.0 && key.1 > best_key.1) {
            best = i;
            best_key = key;
        }
    }
    best
}

use std::ops::{Add, Mul};

/// Closed interval `[lo, hi]` for enclosing polynomial ranges over boxes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        debug_assert!(lo <= hi, "interval [{lo}, {hi}]");
        Self { lo, hi }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Largest absolute value in the interval.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value in the interval.
    pub fn mig(&self) -> f64 {
        if self.lo <= 0.0 && self.hi >= 0.0 {
            0.0
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    /// Range of `|x|` over the interval.
    pub fn abs(&self) -> Self {
        Self { lo: self.mig(), hi: self.mag() }
    }

    pub fn powi(&self, k: u32) -> Self {
        if k == 0 {
            return Self::point(1.0);
        }
        let a = self.lo.powi(k as i32);
        let b = self.hi.powi(k as i32);
        if k % 2 == 1 {
            Self { lo: a, hi: b }
        } else if self.lo >= 0.0 {
            Self { lo: a, hi: b }
        } else if self.hi <= 0.0 {
            Self { lo: b, hi: a }
        } else {
            Self { lo: 0.0, hi: a.max(b) }
        }
    }

    /// Outward widening that covers the rounding error of an expression
    /// built from `ops` floating-point sums of products.
    pub(crate) fn widened(self, ops: usize) -> Self {
        let slack = (ops as f64 + 4.0) * 4.0 * f64::EPSILON * self.mag() + f64::MIN_POSITIVE;
        Self { lo: self.lo - slack, hi: self.hi + slack }
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval { lo: self.lo + rhs.lo, hi: self.hi + rhs.hi }
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let c = [self.lo * rhs.lo, self.lo * rhs.hi, self.hi * rhs.lo, self.hi * rhs.hi];
        Interval {
            lo: c.iter().copied().fold(f64::INFINITY, f64::min),
            hi: c.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

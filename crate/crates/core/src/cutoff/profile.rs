//! The one-dimensional bump profile `b`, equal to 1 on `[0, 1]` and to 0 on
//! `[3/2, ∞)`, with derivatives up to order 3.

/// Highest derivative order available from [`profile`].
pub const MAX_ORDER: usize = 3;

/// `e(s) = exp(-1/s)` for `s > 0`, else 0, with its first three derivatives.
fn mollifier(s: f64) -> [f64; 4] {
    if s <= 0.0 {
        return [0.0; 4];
    }
    let e = (-1.0 / s).exp();
    let s2 = s * s;
    let s4 = s2 * s2;
    [e, e / s2, e * (1.0 - 2.0 * s) / s4, e * (1.0 - 6.0 * s + 6.0 * s2) / (s4 * s2)]
}

/// Smooth step `B(s) = e(s) / (e(s) + e(1 - s))` and its derivatives.
///
/// `B = 0` for `s ≤ 0` and `B = 1` for `s ≥ 1`, exactly.
pub fn smooth_step(s: f64) -> [f64; 4] {
    if s <= 0.0 {
        return [0.0; 4];
    }
    if s >= 1.0 {
        return [1.0, 0.0, 0.0, 0.0];
    }
    let p = mollifier(s);
    let m = mollifier(1.0 - s);
    let q = [p[0] + m[0], p[1] - m[1], p[2] + m[2], p[3] - m[3]];
    let r0 = p[0] / q[0];
    let r1 = (p[1] - r0 * q[1]) / q[0];
    let r2 = (p[2] - 2.0 * r1 * q[1] - r0 * q[2]) / q[0];
    let r3 = (p[3] - 3.0 * r2 * q[1] - 3.0 * r1 * q[2] - r0 * q[3]) / q[0];
    [r0, r1, r2, r3]
}

/// Profile `b(t) = B(3 - 2t)` for `t ≥ 0` and its derivatives in `t`.
pub fn profile(t: f64) -> [f64; 4] {
    let [b0, b1, b2, b3] = smooth_step(3.0 - 2.0 * t);
    [b0, -2.0 * b1, 4.0 * b2, -8.0 * b3]
}

/// Derivatives of `u ↦ b(|u|)` up to order 3. The profile is constant near
/// `u = 0`, so this is smooth.
pub fn even_profile(u: f64) -> [f64; 4] {
    let d = profile(u.abs());
    if u < 0.0 {
        [d[0], -d[1], d[2], -d[3]]
    } else {
        d
    }
}

/// `max_t |b'(t)|`, the slope constant of the profile.
pub fn max_slope() -> f64 {
    // |b'| is unimodal on (1, 3/2), peaking at the midpoint by symmetry
    // B(s) + B(1 - s) = 1.
    profile(1.25)[1].abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        for t in [0.0, 0.3, 1.0] {
            assert_eq!(profile(t), [1.0, 0.0, 0.0, 0.0]);
        }
        for t in [1.5, 2.0, 10.0] {
            assert_eq!(profile(t), [0.0; 4]);
        }
        for t in [1.05, 1.2, 1.25, 1.4, 1.45] {
            let b = profile(t)[0];
            assert!(b > 0.0 && b < 1.0);
        }
        assert!((profile(1.25)[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for &t in &[1.05, 1.17, 1.25, 1.33, 1.46] {
            let d = profile(t);
            for k in 0..MAX_ORDER {
                let fd = (profile(t + h)[k] - profile(t - h)[k]) / (2.0 * h);
                assert!((fd - d[k + 1]).abs() <= 1e-5 * (1.0 + d[k + 1].abs()), "t={t} k={k}: {fd} vs {}", d[k + 1]);
            }
        }
    }

    #[test]
    fn slope_constant_is_the_maximum() {
        let c = max_slope();
        let scan = (0..=20_000).map(|i| profile(1.0 + 0.5 * i as f64 / 20_000.0)[1].abs()).fold(0.0, f64::max);
        assert!((scan - c).abs() <= 1e-9 * c);
        // B = 1 / (1 + exp(1/s - 1/(1-s))) has B'(1/2) = (1/4)(4 + 4) = 2.
        assert!((c - 4.0).abs() < 1e-12);
    }
}

//! Closed-form convergence and solvability quantities: the double
//! exponential tail sums `H_k`, their inverse `Delta`, the Stage-1
//! iteration cap `k_max`, initial-condition thresholds, per-iteration rate
//! envelopes and the solvability radii. All pure functions, used both as
//! run-time certificates and as test oracles.

use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TheoryError {
    #[error("argument {0} outside the domain [0, 1)")]
    DomainError(f64),
}

/// Terms of `H` below this are under one ulp of any representable sum.
const H_TERM_FLOOR: f64 = 1e-17;

/// Tail sum `H_k(delta) = sum_{l >= k} delta^(2^l)` for `delta` in `[0, 1)`.
pub fn h_sum(k: u32, delta: f64) -> Result<f64, TheoryError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(TheoryError::DomainError(delta));
    }
    // delta^(2^k) by repeated squaring, then keep squaring for the tail.
    let mut term = delta;
    for _ in 0..k {
        term *= term;
    }
    let mut sum = 0.0;
    while term >= H_TERM_FLOOR {
        sum += term;
        term *= term;
    }
    Ok(sum)
}

/// Inverse of `H_0`: the unique `delta` in `[0, 1)` with
/// `H_0(delta) = hval`, by bisection.
pub fn delta_inverse(hval: f64) -> f64 {
    let hval = hval.max(0.0);
    if hval == 0.0 {
        return 0.0;
    }
    let mut lo = 0.0f64;
    let mut hi = 1.0 - 1e-15;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if h_sum(0, mid).unwrap() < hval {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// The constant `c = H_0(1/2)`, computed once.
pub fn constant_c() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| h_sum(0, 0.5).unwrap())
}

/// Upper bound on the number of damped (Stage 1) iterations:
/// `max{0, ceil(2 L u0 / mu^2) - 2}`.
pub fn k_max(u0: f64, mu: f64, lipschitz: f64) -> u32 {
    assert!(mu > 0.0 && lipschitz > 0.0);
    let v = (2.0 * lipschitz * u0 / (mu * mu)).ceil() as i64 - 2;
    v.max(0) as u32
}

/// Initial-residual threshold under which the basic two-stage method is
/// guaranteed to converge inside the trust ball of radius `rho`.
pub fn alg1_initial_threshold(mu: f64, lipschitz: f64, rho: f64) -> f64 {
    let beta = mu * mu / lipschitz;
    let arg = lipschitz * rho / (2.0 * mu);
    if arg <= constant_c() {
        2.0 * beta * delta_inverse(arg)
    } else {
        beta * (1.0 + 0.5 * (lipschitz * rho / mu - 2.0 * constant_c()).floor())
    }
}

/// Simplified variant of the small-ball branch of the threshold, using the
/// `Delta(H) >= H / (1 + H)` lower approximation. Always at or below the
/// exact threshold.
pub fn alg1_initial_threshold_approx(mu: f64, lipschitz: f64, rho: f64) -> f64 {
    let beta = mu * mu / lipschitz;
    let arg = lipschitz * rho / (2.0 * mu);
    if arg <= constant_c() {
        2.0 * beta / (1.0 + 2.0 * mu / (lipschitz * rho))
    } else {
        alg1_initial_threshold(mu, lipschitz, rho)
    }
}

/// Threshold for the L-only step-size rule; its large-ball branch is more
/// conservative than the basic method's because stages may interlace.
pub fn alg3_initial_threshold(mu: f64, lipschitz: f64, rho: f64) -> f64 {
    let arg = lipschitz * rho / (2.0 * mu);
    if arg <= constant_c() {
        alg1_initial_threshold(mu, lipschitz, rho)
    } else {
        let inner = 25.0 + 16.0 * (lipschitz * rho / mu - 2.0 * constant_c());
        mu * mu / (2.0 * lipschitz) * ((-1.0 + inner.sqrt()) / 2.0).floor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopeVariant {
    Alg1,
    Alg3,
    Pure,
}

/// Per-iteration upper bounds on the residual and on the distance to the
/// limit solution, valid once the corresponding theorem's preconditions
/// hold.
#[derive(Debug, Clone)]
pub struct RateEnvelope {
    pub variant: EnvelopeVariant,
    pub k_max: u32,
    mu: f64,
    lipschitz: f64,
    u0: f64,
    /// Pure-Newton contraction seed `delta = L u0 / (2 mu^2)`; unused for
    /// the staged variants.
    delta: f64,
}

impl RateEnvelope {
    /// Residual bound at iteration `k`.
    pub fn residual_bound(&self, k: u32) -> f64 {
        let beta = self.mu * self.mu / self.lipschitz;
        match self.variant {
            EnvelopeVariant::Pure => 2.0 * beta * double_exp(self.delta, k),
            _ => {
                if k < self.k_max {
                    self.u0 - 0.5 * beta * k as f64
                } else {
                    2.0 * beta * double_exp(0.5, k - self.k_max)
                }
            }
        }
    }

    /// Distance-to-solution bound at iteration `k`.
    pub fn distance_bound(&self, k: u32) -> f64 {
        let ratio = self.mu / self.lipschitz;
        match self.variant {
            EnvelopeVariant::Pure => 2.0 * ratio * h_sum(k, self.delta).unwrap(),
            EnvelopeVariant::Alg1 => {
                if k < self.k_max {
                    ratio * ((self.k_max - k) as f64 + 2.0 * constant_c())
                } else {
                    2.0 * ratio * h_sum(k - self.k_max, 0.5).unwrap()
                }
            }
            EnvelopeVariant::Alg3 => {
                if k < self.k_max {
                    let d = (self.k_max - k) as f64;
                    ratio * (d * (d + 5.0) / 4.0 + 2.0 * constant_c())
                } else {
                    2.0 * ratio * h_sum(k - self.k_max, 0.5).unwrap()
                }
            }
        }
    }
}

/// `delta^(2^k)` with overflow-safe handling of large `k`.
fn double_exp(delta: f64, k: u32) -> f64 {
    if delta == 0.0 {
        return 0.0;
    }
    let mut v = delta;
    for _ in 0..k.min(64) {
        v *= v;
        if v == 0.0 {
            return 0.0;
        }
    }
    v
}

/// Envelope for the two staged step-size rules.
pub fn rate_envelope(u0: f64, mu: f64, lipschitz: f64, variant: EnvelopeVariant) -> RateEnvelope {
    assert!(variant != EnvelopeVariant::Pure, "use pure_newton_envelope");
    RateEnvelope {
        variant,
        k_max: k_max(u0, mu, lipschitz),
        mu,
        lipschitz,
        u0,
        delta: 0.0,
    }
}

/// Envelope for undamped iterations: residual `(2 mu^2/L) delta^(2^k)`,
/// distance `(2 mu/L) H_k(delta)`, valid for `delta = L u0/(2 mu^2) < 1`.
pub fn pure_newton_envelope(delta: f64, mu: f64, lipschitz: f64) -> Result<RateEnvelope, TheoryError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(TheoryError::DomainError(delta));
    }
    Ok(RateEnvelope {
        variant: EnvelopeVariant::Pure,
        k_max: 0,
        mu,
        lipschitz,
        u0: 2.0 * mu * mu / lipschitz * delta,
        delta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionSource {
    Thm1,
    Thm2,
    Cor3,
    Thm5,
    Thm6,
}

/// A ball of right-hand sides guaranteed to be attainable, together with
/// the bound on the solution produced.
#[derive(Debug, Clone, Copy)]
pub struct SolvabilityRegion {
    pub source: RegionSource,
    /// Solvable for every `||y|| < radius_y`.
    pub radius_y: f64,
    /// Worst-case bound on `||x*||` inside the region.
    pub radius_x: f64,
    /// Per-`||y||` factor for the sharper bound `||x*|| <= factor * ||y||`,
    /// when the theorem provides one.
    pub x_factor: Option<f64>,
}

/// Ball-wide covering constant: solvable for `||y|| < mu * rho` with
/// `||x*|| <= ||y|| / mu`.
pub fn region_thm1(mu: f64, rho: f64) -> SolvabilityRegion {
    SolvabilityRegion {
        source: RegionSource::Thm1,
        radius_y: mu * rho,
        radius_x: rho,
        x_factor: Some(1.0 / mu),
    }
}

/// Single-point covering constant `mu0` plus Lipschitz constant: with
/// `r* = min{rho, mu0/(2L)}`, solvable for `||y|| <= (mu0 - L r*) r*` with
/// `||x*|| <= r*` and the sharper `||x*|| <= 2 ||y|| / mu0`.
pub fn region_thm2(mu0: f64, lipschitz: f64, rho: f64) -> SolvabilityRegion {
    let r_star = rho.min(mu0 / (2.0 * lipschitz));
    SolvabilityRegion {
        source: RegionSource::Thm2,
        radius_y: (mu0 - lipschitz * r_star) * r_star,
        radius_x: r_star,
        x_factor: Some(2.0 / mu0),
    }
}

/// Quadratic-map specialization: `||y|| < mu0^2/(4L)` with
/// `||x*|| <= mu0/(2L)` (the `rho = inf` case of the single-point region).
pub fn region_thm5(mu0: f64, lipschitz: f64) -> SolvabilityRegion {
    let mut r = region_thm2(mu0, lipschitz, f64::INFINITY);
    r.source = RegionSource::Thm5;
    r
}

/// Constants from maximizing `S(t) = 2 (1-t)^2 Delta(t / (2 (1-t)))` over
/// `t` in `[0, 1/2]`: returns `(s1, t1)`, the maximum and maximizer.
pub fn thm6_constants() -> (f64, f64) {
    static CONSTS: OnceLock<(f64, f64)> = OnceLock::new();
    *CONSTS.get_or_init(|| {
        let s = |t: f64| 2.0 * (1.0 - t) * (1.0 - t) * delta_inverse(t / (2.0 * (1.0 - t)));
        // Golden-section search; S is unimodal on [0, 1/2].
        let phi = (5f64.sqrt() - 1.0) / 2.0;
        let mut a = 0.0;
        let mut b = 0.5;
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut fc = s(c);
        let mut fd = s(d);
        while b - a > 1e-12 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - phi * (b - a);
                fc = s(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + phi * (b - a);
                fd = s(d);
            }
        }
        let t1 = 0.5 * (a + b);
        (s(t1), t1)
    })
}

/// The smaller constant from the rational approximation of `Delta`.
pub fn s2_constant() -> f64 {
    5.0 * 5f64.sqrt() - 11.0
}

/// Region within which the staged algorithms themselves are guaranteed to
/// converge from `x0 = 0`: `||y|| <= s1 mu0^2 / L`, `||x*|| <= t1 mu0 / L`.
pub fn region_thm6(mu0: f64, lipschitz: f64) -> SolvabilityRegion {
    let (s1, t1) = thm6_constants();
    SolvabilityRegion {
        source: RegionSource::Thm6,
        radius_y: s1 * mu0 * mu0 / lipschitz,
        radius_x: t1 * mu0 / lipschitz,
        x_factor: None,
    }
}

/// Upper approximation of `H_k` and lower approximation of `Delta` at the
/// same `delta`: `(delta^(2^k) / (1 - delta^(2^k)), H_0 / (1 + H_0))`.
pub fn approx_bounds_check(delta: f64, k: u32) -> Result<(f64, f64), TheoryError> {
    if !(0.0..1.0).contains(&delta) {
        return Err(TheoryError::DomainError(delta));
    }
    let d = double_exp(delta, k);
    let h0 = h_sum(0, delta)?;
    Ok((d / (1.0 - d), h0 / (1.0 + h0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn h_trivial_and_constant_c() {
        assert_eq!(h_sum(0, 0.0).unwrap(), 0.0);
        let c = constant_c();
        assert!((c - 0.8164).abs() < 1e-4, "c = {c}");
    }

    #[test]
    fn h_index_shift() {
        for delta in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let lhs = h_sum(1, delta).unwrap();
            let rhs = h_sum(0, delta * delta).unwrap();
            assert!((lhs - rhs).abs() < 1e-15, "delta {delta}");
        }
    }

    #[test]
    fn delta_inverse_identities() {
        assert_eq!(delta_inverse(0.0), 0.0);
        assert!((delta_inverse(constant_c()) - 0.5).abs() < 1e-10);
        for i in 0..100 {
            let delta = i as f64 / 100.0;
            let back = delta_inverse(h_sum(0, delta).unwrap());
            assert!((back - delta).abs() < 1e-10, "delta {delta}: {back}");
        }
        // The other direction, H0(Delta(h)) = h, on [0, 5].
        for i in 0..=50 {
            let h = i as f64 / 10.0;
            let fwd = h_sum(0, delta_inverse(h)).unwrap();
            assert!((fwd - h).abs() < 1e-10, "h {h}: {fwd}");
        }
    }

    #[test]
    fn h0_strictly_increasing() {
        let mut prev = -1.0;
        for i in 0..100 {
            let v = h_sum(0, i as f64 / 100.0).unwrap();
            assert!(v > prev);
            prev = v;
        }
    }

    #[test]
    fn k_max_examples() {
        assert_eq!(k_max(1.0, 1.0, 1.0), 0); // u0 = mu^2/L
        assert_eq!(k_max(10.0, 1.0, 1.0), 18);
        assert_eq!(k_max(0.0, 1.0, 1.0), 0);
    }

    #[test]
    fn k_max_monotonicity() {
        assert!(k_max(5.0, 1.0, 1.0) <= k_max(6.0, 1.0, 1.0));
        assert!(k_max(5.0, 1.0, 1.0) <= k_max(5.0, 1.0, 2.0));
        assert!(k_max(5.0, 2.0, 1.0) <= k_max(5.0, 1.0, 1.0));
    }

    #[test]
    fn alg1_threshold_branch_seam() {
        // At L rho / (2 mu) = c both branch formulas give mu^2/L.
        let c = constant_c();
        let (mu, l) = (1.0, 1.0);
        let rho = 2.0 * c;
        let a = 2.0 * delta_inverse(c); // small-ball branch value / (mu^2/L)
        let b = 1.0 + 0.5 * (l * rho / mu - 2.0 * c).floor();
        assert!((a - 1.0).abs() < 1e-9);
        assert!((b - 1.0).abs() < 1e-9);
        assert!((alg1_initial_threshold(mu, l, rho) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn alg1_threshold_values() {
        let exact = alg1_initial_threshold(1.0, 1.0, 1.0);
        assert!((exact - 2.0 * delta_inverse(0.5)).abs() < 1e-12);
        let approx = alg1_initial_threshold_approx(1.0, 1.0, 1.0);
        assert!((approx - 2.0 / 3.0).abs() < 1e-12);
        assert!(exact >= approx);
    }

    #[test]
    fn alg1_threshold_nondecreasing_in_rho() {
        let mut prev = 0.0;
        for i in 1..100 {
            let rho = i as f64 * 0.2;
            let v = alg1_initial_threshold(1.0, 1.0, rho);
            assert!(v >= prev - 1e-12, "rho {rho}");
            prev = v;
        }
    }

    #[test]
    fn alg3_threshold_seam_and_dominance() {
        let c = constant_c();
        // L rho / mu = 2c: inner sqrt is 5, floor 2, threshold mu^2/L.
        let v = alg3_initial_threshold(1.0, 1.0, 2.0 * c);
        assert!((v - 1.0).abs() < 1e-9);
        let expect = 0.5 * ((-1.0 + (25.0 + 16.0 * (10.0 - 2.0 * c)).sqrt()) / 2.0).floor();
        assert!((alg3_initial_threshold(1.0, 1.0, 10.0) - expect).abs() < 1e-12);
        for i in 1..60 {
            let rho = i as f64 * 0.5;
            assert!(
                alg3_initial_threshold(1.0, 1.0, rho)
                    <= alg1_initial_threshold(1.0, 1.0, rho) + 1e-12,
                "rho {rho}"
            );
        }
    }

    #[test]
    fn envelope_junction() {
        let env = rate_envelope(10.0, 1.0, 1.0, EnvelopeVariant::Alg1);
        // At k = k_max: residual bound is 2 beta * 2^-1 = beta.
        assert!((env.residual_bound(env.k_max) - 1.0).abs() < 1e-12);
        // Stage-1 and Stage-2 distance bounds coincide at the junction.
        let stage1_at_junction = 1.0 * 2.0 * constant_c();
        let stage2_at_junction = 2.0 * h_sum(0, 0.5).unwrap();
        assert!((stage1_at_junction - stage2_at_junction).abs() < 1e-12);
        assert!((env.distance_bound(env.k_max) - stage2_at_junction).abs() < 1e-12);
    }

    #[test]
    fn envelope_rough_distance_bound() {
        // (2 mu/L) H_l(1/2) <= 2.32 * 2^(-2^(l-1)) mu/L for l >= 0.
        let env = rate_envelope(0.5, 1.0, 1.0, EnvelopeVariant::Alg1);
        assert_eq!(env.k_max, 0);
        for l in 0..8u32 {
            let exact = env.distance_bound(l);
            let rough = 2.32 * 2f64.powf(-2f64.powf(l as f64 - 1.0));
            assert!(exact <= rough + 1e-12, "l {l}: {exact} vs {rough}");
        }
    }

    #[test]
    fn pure_envelope_values() {
        let env = pure_newton_envelope(0.5, 1.0, 1.0).unwrap();
        assert!((env.distance_bound(0) - 2.0 * constant_c()).abs() < 1e-12);
        let env2 = pure_newton_envelope(0.1, 1.0, 1.0).unwrap();
        assert!((env2.residual_bound(2) - 2.0 * 1e-4).abs() < 1e-15);
        assert!(pure_newton_envelope(1.0, 1.0, 1.0).is_err());
        // Both bounds decay monotonically to zero.
        let mut prev_r = f64::INFINITY;
        let mut prev_d = f64::INFINITY;
        for k in 0..20 {
            let r = env.residual_bound(k);
            let d = env.distance_bound(k);
            assert!(r <= prev_r && d <= prev_d);
            prev_r = r;
            prev_d = d;
        }
        assert!(prev_r < 1e-100 && prev_d < 1e-100);
    }

    #[test]
    fn regions_arithmetic() {
        let r1 = region_thm1(2.0, 3.0);
        assert_eq!(r1.radius_y, 6.0);
        assert!((r1.x_factor.unwrap() * 5.0 - 2.5).abs() < 1e-12);
        let unbounded = region_thm1(2.0, f64::INFINITY);
        assert!(unbounded.radius_y.is_infinite());

        let r2 = region_thm2(1.0, 1.0, f64::INFINITY);
        assert!((r2.radius_y - 0.25).abs() < 1e-12);
        assert!((r2.x_factor.unwrap() - 2.0).abs() < 1e-12);
        // Seam: rho = mu0/(2L) exactly.
        let seam = region_thm2(1.0, 1.0, 0.5);
        assert!((seam.radius_y - 0.25).abs() < 1e-12);
        let small = region_thm2(2.0, 1.0, 0.5);
        assert!((small.radius_y - 0.75).abs() < 1e-12);
    }

    #[test]
    fn thm6_constants_match_reported_values() {
        let (s1, t1) = thm6_constants();
        assert!((s1 - 0.1877178).abs() < 1e-6, "s1 = {s1}");
        assert!((t1 - 0.40100511).abs() < 1e-6, "t1 = {t1}");
        assert!((s2_constant() - 0.18034).abs() < 1e-5);
        // Rule of thumb 3/16 stays inside, and s1 sits between 0.75 and
        // 0.76 of the single-point radius factor 1/4.
        assert!(3.0 / 16.0 <= s1);
        let ratio = s1 / 0.25;
        assert!(ratio > 0.75 && ratio < 0.76, "ratio {ratio}");
        let r6 = region_thm6(1.0, 1.0);
        let r2 = region_thm2(1.0, 1.0, f64::INFINITY);
        assert!(r6.radius_y < r2.radius_y);
    }

    #[test]
    fn approximation_inequalities() {
        for k in 0..4u32 {
            for i in 1..20 {
                let delta = 0.05 * i as f64;
                let (h_upper, delta_lower) = approx_bounds_check(delta, k).unwrap();
                assert!(h_sum(k, delta).unwrap() <= h_upper + 1e-12);
                assert!(delta + 1e-12 >= delta_lower);
            }
        }
        let (a, b) = approx_bounds_check(0.0, 0).unwrap();
        assert_eq!((a, b), (0.0, 0.0));
    }
}

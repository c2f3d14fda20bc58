//! Sample-size bounds for the (ε, δ) guarantee
//! `Pr(|tr_D^N(A) - tr(A)| <= ε tr(A)) >= 1 - δ`.
//!
//! Six sufficient bounds (two matrix-independent, four driven by a scale-free
//! matrix property) and the necessary condition for Gaussian probes. Bounds
//! written as `N >= B` round to `ceil(B)`; bounds written as `N > B` round to
//! `floor(B) + 1`. Values within a few ulps of an integer are snapped to it
//! first so that anchors such as `δ = 2/e` land on exact integers.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::specialfn::reg_gamma_pq;

/// Upper limit on the search performed by [`gaussian_necessary_min_n`].
pub const NECESSARY_SEARCH_CAP: u64 = 1_000_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TolerancePair {
    eps: f64,
    delta: f64,
}

impl TolerancePair {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Tolerance(format!("eps = {eps} must lie in (0, 1)")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::Tolerance(format!("delta = {delta} must lie in (0, 1)")));
        }
        Ok(Self { eps, delta })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

fn snap(b: f64) -> f64 {
    let r = b.round();
    if (b - r).abs() <= 64.0 * f64::EPSILON * r.abs().max(1.0) {
        r
    } else {
        b
    }
}

/// Smallest integer `N >= b`, at least 1.
fn ceil_at_least(b: f64) -> u64 {
    (snap(b).ceil() as u64).max(1)
}

/// Smallest integer `N > b`, at least 1.
fn strictly_above(b: f64) -> u64 {
    (snap(b).floor() as u64 + 1).max(1)
}

/// `c(ε, δ) = ε^{-2} ln(2/δ)`.
pub fn c_factor(tol: TolerancePair) -> f64 {
    (2.0 / tol.delta).ln() / (tol.eps * tol.eps)
}

/// Rademacher probes: `N >= 6 c`.
pub fn hutchinson_sufficient(tol: TolerancePair) -> u64 {
    ceil_at_least(6.0 * c_factor(tol))
}

/// Gaussian probes: `N >= 8 c`.
pub fn gaussian_sufficient(tol: TolerancePair) -> u64 {
    ceil_at_least(8.0 * c_factor(tol))
}

/// Rademacher probes, off-diagonal energy: `N > 2 K_H c`. A diagonal matrix
/// (`K_H = 0`) needs a single probe.
pub fn hutchinson_matrix_bound(k_h: f64, tol: TolerancePair) -> Result<u64> {
    if !(k_h >= 0.0) || !k_h.is_finite() {
        return Err(Error::InvalidArgument(format!("K_H = {k_h} must be finite and >= 0")));
    }
    if k_h == 0.0 {
        return Ok(1);
    }
    Ok(strictly_above(2.0 * k_h * c_factor(tol)))
}

/// Gaussian probes, spectral share: `N > 8 K_G c` with `K_G = ‖A‖ / tr(A)`.
pub fn gaussian_matrix_bound(k_g: f64, tol: TolerancePair) -> Result<u64> {
    if !(k_g > 0.0 && k_g <= 1.0) {
        return Err(Error::InvalidKg(k_g));
    }
    Ok(strictly_above(8.0 * k_g * c_factor(tol)))
}

/// Samples for `round(tr_G^N(A)) == r` with probability `>= 1 - δ` on a rank-`r`
/// orthogonal projector: `N >= 8 r ln(2/δ)`.
pub fn projection_rank_samples(rank: u64, delta: f64) -> Result<u64> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be >= 1".into()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Tolerance(format!("delta = {delta} must lie in (0, 1)")));
    }
    Ok(ceil_at_least(8.0 * rank as f64 * (2.0 / delta).ln()))
}

/// Shift factor `τ = (ln(1+θ) - ln(1-θ)) / (2θ)`.
pub fn tau(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta = {theta} must lie in (0, 1)")));
    }
    Ok((theta.ln_1p() - (-theta).ln_1p()) / (2.0 * theta))
}

/// `Φ_θ(x) = P(x/2, τ(1-θ)x/2) + Q(x/2, τ(1+θ)x/2)`: the smallest failure
/// probability a Gaussian estimator on a rank-`r` matrix can reach with
/// `x = N r` degrees of freedom.
pub fn phi(theta: f64, x: f64) -> Result<f64> {
    let t = tau(theta)?;
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("x = {x} must be positive and finite")));
    }
    let a = x / 2.0;
    let (lower, _) = reg_gamma_pq(a, t * (1.0 - theta) * a)?;
    let (_, upper) = reg_gamma_pq(a, t * (1.0 + theta) * a)?;
    Ok(lower + upper)
}

/// Smallest `N >= 1` with `Φ_ε(N r) <= δ`.
///
/// Brackets by doubling and then bisects. Every probed value is checked
/// against its neighbours in the bracket; if `Φ` is seen to increase along the
/// probed sequence the search falls back to a linear scan of the last bracket.
pub fn gaussian_necessary_min_n(rank: u64, tol: TolerancePair) -> Result<u64> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be >= 1".into()));
    }
    let r = rank as f64;
    let eval = |n: u64| phi(tol.eps, n as f64 * r);
    let delta = tol.delta;

    let mut lo = 0u64; // largest N known to fail (0 = none probed)
    let mut lo_val = f64::INFINITY;
    let mut hi = 1u64;
    let mut hi_val = eval(hi)?;
    while hi_val > delta {
        if hi_val > lo_val {
            return linear_scan(lo.max(1), hi, &eval, delta);
        }
        lo = hi;
        lo_val = hi_val;
        if hi >= NECESSARY_SEARCH_CAP {
            return Err(Error::BoundUnreachable { cap: NECESSARY_SEARCH_CAP });
        }
        hi = (hi * 2).min(NECESSARY_SEARCH_CAP);
        hi_val = eval(hi)?;
    }
    if lo_val < hi_val {
        return linear_scan(lo.max(1), hi, &eval, delta);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = eval(mid)?;
        if v > lo_val || v < hi_val {
            return linear_scan(lo.max(1), hi, &eval, delta);
        }
        if v <= delta {
            hi = mid;
            hi_val = v;
        } else {
            lo = mid;
            lo_val = v;
        }
    }
    Ok(hi)
}

fn linear_scan<F>(from: u64, to: u64, eval: &F, delta: f64) -> Result<u64>
where
    F: Fn(u64) -> Result<f64>,
{
    for n in from..=to {
        if eval(n)? <= delta {
            return Ok(n);
        }
    }
    Err(Error::BoundUnreachable { cap: to })
}

/// `F = K_U^2 c / 2`, the with-replacement threshold.
fn unit_threshold(k_u: f64, tol: TolerancePair) -> f64 {
    k_u * k_u * c_factor(tol) / 2.0
}

fn check_ku(k_u: f64) -> Result<()> {
    if !(k_u >= 0.0) || !k_u.is_finite() {
        return Err(Error::InvalidArgument(format!("K_U = {k_u} must be finite and >= 0")));
    }
    Ok(())
}

/// Unit vectors with replacement: `N > K_U^2 c / 2`.
pub fn unit_with_replacement_bound(k_u: f64, tol: TolerancePair) -> Result<u64> {
    check_ku(k_u)?;
    if k_u == 0.0 {
        return Ok(1);
    }
    Ok(strictly_above(unit_threshold(k_u, tol)))
}

/// Unit vectors without replacement: `N >= (n+1) / (1 + (n-1)/F)`.
///
/// Never exceeds `n` (a full sweep is exact) nor the with-replacement bound,
/// which is itself sufficient here because the finite-population factor only
/// tightens the tail estimate.
pub fn unit_without_replacement_bound(k_u: f64, n: u64, tol: TolerancePair) -> Result<u64> {
    check_ku(k_u)?;
    if n < 2 {
        return Err(Error::InvalidArgument(format!("n = {n} must be >= 2")));
    }
    if k_u == 0.0 {
        return Ok(1);
    }
    let f = unit_threshold(k_u, tol);
    let nf = n as f64;
    let raw = ceil_at_least((nf + 1.0) / (1.0 + (nf - 1.0) / f));
    let with_repl = strictly_above(f);
    Ok(raw.min(with_repl).min(n))
}

/// Optional matrix properties that unlock the matrix-dependent bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MatrixProperties {
    pub k_h: Option<f64>,
    pub k_g: Option<f64>,
    pub k_u: Option<f64>,
    pub n: Option<u64>,
    pub rank: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub eps: f64,
    pub delta: f64,
    pub c_factor: f64,
    pub hutchinson_simple: u64,
    pub gaussian_simple: u64,
    pub hutchinson_matrix: Option<u64>,
    pub gaussian_matrix: Option<u64>,
    pub unit_with_repl: Option<u64>,
    pub unit_without_repl: Option<u64>,
    pub gaussian_necessary: Option<u64>,
    pub hutchinson_effective: u64,
    pub gaussian_effective: u64,
}

impl BoundReport {
    pub fn compute(tol: TolerancePair, props: MatrixProperties) -> Result<Self> {
        let hutchinson_simple = hutchinson_sufficient(tol);
        let gaussian_simple = gaussian_sufficient(tol);
        let hutchinson_matrix = props.k_h.map(|k| hutchinson_matrix_bound(k, tol)).transpose()?;
        let gaussian_matrix = props.k_g.map(|k| gaussian_matrix_bound(k, tol)).transpose()?;
        let unit_with_repl = props.k_u.map(|k| unit_with_replacement_bound(k, tol)).transpose()?;
        let unit_without_repl = match (props.k_u, props.n) {
            (Some(k), Some(n)) => Some(unit_without_replacement_bound(k, n, tol)?),
            _ => None,
        };
        let gaussian_necessary =
            props.rank.map(|r| gaussian_necessary_min_n(r, tol)).transpose()?;
        Ok(Self {
            eps: tol.eps,
            delta: tol.delta,
            c_factor: c_factor(tol),
            hutchinson_simple,
            gaussian_simple,
            hutchinson_matrix,
            gaussian_matrix,
            unit_with_repl,
            unit_without_repl,
            gaussian_necessary,
            hutchinson_effective: hutchinson_matrix.map_or(hutchinson_simple, |m| m.min(hutchinson_simple)),
            gaussian_effective: gaussian_matrix.map_or(gaussian_simple, |m| m.min(gaussian_simple)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol(e: f64, d: f64) -> TolerancePair {
        TolerancePair::new(e, d).unwrap()
    }

    fn anchor() -> TolerancePair {
        tol(0.5, 2.0 / std::f64::consts::E)
    }

    #[test]
    fn c_factor_values() {
        assert!((c_factor(tol(0.05, 0.05)) - 1_475.551_781_645_574_5).abs() < 1e-9);
        assert!((c_factor(tol(0.1, 0.1)) - 299.573_227_355_399_1).abs() < 1e-10);
        assert!((c_factor(anchor()) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn tolerance_validation() {
        assert!(matches!(TolerancePair::new(1.0, 0.1), Err(Error::Tolerance(_))));
        assert!(matches!(TolerancePair::new(0.1, 0.0), Err(Error::Tolerance(_))));
        assert!(TolerancePair::new(f64::NAN, 0.1).is_err());
    }

    #[test]
    fn simple_bounds() {
        assert_eq!(hutchinson_sufficient(tol(0.05, 0.05)), 8854);
        assert_eq!(hutchinson_sufficient(tol(0.1, 0.1)), 1798);
        assert_eq!(hutchinson_sufficient(anchor()), 24);
        assert_eq!(gaussian_sufficient(tol(0.05, 0.05)), 11805);
        assert_eq!(gaussian_sufficient(anchor()), 32);
    }

    #[test]
    fn matrix_bounds() {
        let t = tol(0.05, 0.05);
        assert_eq!(hutchinson_matrix_bound(0.0, t).unwrap(), 1);
        assert_eq!(hutchinson_matrix_bound(1.0, anchor()).unwrap(), 9);
        // 2 * 9999 * c = 29508084.53
        assert_eq!(hutchinson_matrix_bound(9999.0, t).unwrap(), 29_508_085);
        assert_eq!(gaussian_matrix_bound(0.25, anchor()).unwrap(), 9);
        assert_eq!(gaussian_matrix_bound(1.0, anchor()).unwrap(), 33);
        assert_eq!(gaussian_matrix_bound(0.0105, t).unwrap(), 124);
        assert_eq!(gaussian_matrix_bound(1.5, t), Err(Error::InvalidKg(1.5)));
        assert_eq!(gaussian_matrix_bound(0.0, t), Err(Error::InvalidKg(0.0)));
    }

    #[test]
    fn projection_rank_rule() {
        assert_eq!(projection_rank_samples(10, 0.05).unwrap(), 296);
        assert_eq!(projection_rank_samples(10, 0.1).unwrap(), 240);
        assert_eq!(projection_rank_samples(1, 2.0 / std::f64::consts::E).unwrap(), 8);
        // same as the Gaussian matrix bound with ε = K_G = 1/r, up to the rounding convention
        for r in [1u64, 3, 10, 40] {
            let t = tol(1.0 / r as f64 * 0.999_999_999, 0.05);
            let via_kg = gaussian_matrix_bound(1.0 / r as f64, t).unwrap();
            let direct = projection_rank_samples(r, 0.05).unwrap();
            assert!(via_kg.abs_diff(direct) <= 1, "r={r}: {via_kg} vs {direct}");
        }
    }

    #[test]
    fn unit_bounds() {
        let t = tol(0.05, 0.05);
        assert_eq!(unit_with_replacement_bound(0.0, t).unwrap(), 1);
        assert_eq!(unit_without_replacement_bound(0.0, 1000, t).unwrap(), 1);
        assert_eq!(unit_with_replacement_bound(2.0, anchor()).unwrap(), 9);
        assert_eq!(unit_with_replacement_bound(0.8553, t).unwrap(), 540);
        // huge K_U saturates at a full sweep
        assert_eq!(unit_without_replacement_bound(1e6, 1000, t).unwrap(), 1000);
        // F = 8, n = 1000: ceil(1001 / (1 + 999/8)) = ceil(7.95) = 8
        assert_eq!(unit_without_replacement_bound(2.0, 1000, anchor()).unwrap(), 8);
    }

    #[test]
    fn unit_bounds_agree_when_threshold_is_small() {
        let t = tol(0.05, 0.05);
        for k in [0.01, 0.05, 0.1, 0.2] {
            let u1 = unit_with_replacement_bound(k, t).unwrap();
            let u2 = unit_without_replacement_bound(k, 1000, t).unwrap();
            assert!(u1 - u2 <= 1, "K_U={k}: {u1} vs {u2}");
        }
    }

    #[test]
    fn tau_and_phi() {
        assert!((tau(0.05).unwrap() - 1.000_834_585_569_825_4).abs() < 1e-14);
        let ln3 = 3f64.ln();
        assert!((tau(0.5).unwrap() - ln3).abs() < 1e-14);
        let expected = (1.0 - 3f64.powf(-0.5)) + 3f64.powf(-1.5);
        assert!((phi(0.5, 2.0).unwrap() - expected).abs() < 1e-13);
        assert!(phi(0.1, 1e6).unwrap() < 1e-6);
        assert!(matches!(phi(1.0, 2.0), Err(Error::Domain(_))));
        assert!(matches!(phi(0.1, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn necessary_bound_is_the_first_crossing() {
        let t = tol(0.1, 0.1);
        for r in [1u64, 7, 100, 400] {
            let n = gaussian_necessary_min_n(r, t).unwrap();
            assert!(phi(0.1, (n * r) as f64).unwrap() <= 0.1);
            if n >= 2 {
                assert!(phi(0.1, ((n - 1) * r) as f64).unwrap() > 0.1);
            }
        }
        assert_eq!(gaussian_necessary_min_n(100, t).unwrap(), 6);
        assert_eq!(gaussian_necessary_min_n(400, t).unwrap(), 2);
    }

    #[test]
    fn necessary_bound_decreases_with_rank() {
        let t = tol(0.02, 0.02);
        let mut prev = u64::MAX;
        for r in [1u64, 2, 5, 10, 30, 100, 1000] {
            let n = gaussian_necessary_min_n(r, t).unwrap();
            assert!(n <= prev);
            prev = n;
        }
    }

    #[test]
    fn report_effective_bounds() {
        let t = tol(0.05, 0.05);
        let props = MatrixProperties { k_h: Some(9999.0), k_g: Some(0.0105), k_u: Some(0.0), n: Some(1000), rank: None };
        let rep = BoundReport::compute(t, props).unwrap();
        assert_eq!(rep.hutchinson_effective, 8854);
        assert_eq!(rep.gaussian_effective, 124);
        assert_eq!(rep.unit_with_repl, Some(1));
        assert_eq!(rep.unit_without_repl, Some(1));
        assert_eq!(rep.gaussian_necessary, None);
    }
}

//! Closed-form thresholds and limiting densities.
//!
//! Most quantities are driven by `psi(x) = -ln x / (1-x)^d` on `(0,1)`:
//! the fixed points of `t = exp(-c (1-t)^d)` in `(0,1)` are exactly the
//! solutions of `psi(t) = c`, and `psi` decreases then increases. Where `x`
//! is tiny (large `d`) the code works with `u = -ln x` instead.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-12;

/// `-ln x / (1-x)^d`.
pub fn psi(x: f64, d: usize) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain(format!("psi needs 0 < x < 1, got {x}")));
    }
    Ok(-x.ln() / (d as f64 * (-x).ln_1p()).exp())
}

/// `psi(exp(-u))`.
fn psi_log(u: f64, d: usize) -> f64 {
    u / (d as f64 * (-(-u).exp_m1()).ln()).exp()
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > tol * (1.0 + a.abs()) {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        }
    }
    (a + b) / 2.0
}

/// Root of a function with `f(lo)` and `f(hi)` of opposite signs.
fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(Error::Numerics(format!("no sign change on [{lo}, {hi}]")));
    }
    let lo_neg = flo < 0.0;
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol * (1.0 + mid.abs()) || mid == lo || mid == hi {
            break;
        }
        if (f(mid) < 0.0) == lo_neg {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `-ln` of the minimiser of `psi`.
fn psi_argmin_log(d: usize, tol: f64) -> f64 {
    golden_section(
        |u| psi_log(u, d),
        1e-9,
        60.0 + 2.0 * (d as f64).ln(),
        tol.min(1e-10),
    )
}

/// Minimiser of `psi` on `(0,1)`.
pub fn psi_argmin(d: usize, tol: f64) -> f64 {
    (-psi_argmin_log(d, tol)).exp()
}

/// The collapsibility threshold: the minimum of `psi` on `(0,1)`.
pub fn gamma_d(d: usize, tol: f64) -> f64 {
    psi_log(psi_argmin_log(d, tol), d)
}

/// `-ln x_*` where `x_*` solves `(d+1)(1-x) + (1+dx) ln x = 0`.
pub fn x_star_log(d: usize, tol: f64) -> Result<f64> {
    if d < 2 {
        return Err(Error::Domain("x_* is defined for d >= 2".into()));
    }
    let df = d as f64;
    // the equation in u = -ln x
    let h = |u: f64| (df + 1.0) * (-(-u).exp_m1()) - u - df * u * (-u).exp();
    bisect(h, 0.01, df + 2.0, tol.min(1e-14))
}

/// The root `x_*` in `(0,1)`; underflows to 0 for very large `d`.
pub fn x_star(d: usize, tol: f64) -> Result<f64> {
    Ok((-x_star_log(d, tol)?).exp())
}

/// The acyclicity threshold `psi(x_*)`.
pub fn c_d(d: usize, tol: f64) -> Result<f64> {
    Ok(psi_log(x_star_log(d, tol)?, d))
}

/// `log10(d + 1 - c_d)`, computed without cancellation.
///
/// With `x = x_*` one has `c_d = (d+1)(1-x)^(1-d)/(1+dx)`, so
/// `d + 1 - c_d = (d+1)(1 - exp(-L))` with `L = ln(1+dx) + (d-1) ln(1-x)`.
pub fn log10_gap(d: usize, tol: f64) -> Result<f64> {
    let u = x_star_log(d, tol)?;
    let x = (-u).exp();
    let df = d as f64;
    // ln L = ln x + ln(L/x); L/x = 1 - (d^2+d-1)x/2 + O(d^3 x^2)
    let ln_l = if x > 1e-8 {
        ((df * x).ln_1p() + (df - 1.0) * (-x).ln_1p()).ln()
    } else {
        -u + (-(df * df + df - 1.0) * x / 2.0).ln_1p()
    };
    let l = ln_l.exp();
    // ln(1 - e^-L) = ln L + ln((1 - e^-L)/L)
    let ln_gap_factor = if l > 1e-8 {
        (-(-l).exp_m1()).ln()
    } else {
        ln_l + (-l / 2.0).ln_1p()
    };
    Ok((df + 1.0).log10() + ln_gap_factor / std::f64::consts::LN_10)
}

/// Threshold constants for one dimension.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdTable {
    pub d: usize,
    pub gamma_d: f64,
    pub c_d: f64,
    pub x_star: f64,
    /// `-ln x_*`, meaningful when `x_star` underflows.
    pub x_star_neg_log: f64,
    pub log10_gap: f64,
    pub tolerance: f64,
}

pub fn threshold_table(d: usize, tol: f64) -> Result<ThresholdTable> {
    let u = x_star_log(d, tol)?;
    Ok(ThresholdTable {
        d,
        gamma_d: gamma_d(d, tol),
        c_d: psi_log(u, d),
        x_star: (-u).exp(),
        x_star_neg_log: u,
        log10_gap: log10_gap(d, tol)?,
        tolerance: tol,
    })
}

/// `P(Poisson(lambda) >= k)`.
pub fn poisson_tail(k: u32, lambda: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    if lambda <= 0.0 {
        return 0.0;
    }
    let term = |j: u32| (-lambda + j as f64 * lambda.ln() - ln_gamma(j as f64 + 1.0)).exp();
    if lambda < k as f64 {
        // the tail is small: sum it directly
        let mut sum = 0.0;
        let mut p = term(k);
        let mut j = k;
        while p > sum * 1e-17 && p > 0.0 {
            sum += p;
            j += 1;
            p *= lambda / j as f64;
        }
        sum
    } else {
        let head: f64 = (0..k).map(term).sum();
        (1.0 - head).max(0.0)
    }
}

/// Roots of `t = exp(-c (1-t)^d)` in `(0, 1]`, ascending; always ends in 1.
pub fn fixed_point_roots(c: f64, d: usize, tol: f64) -> Vec<f64> {
    let u_min = psi_argmin_log(d, tol);
    let gamma = psi_log(u_min, d);
    if !(c > gamma) || d < 2 {
        if d == 1 && c > 1.0 {
            // psi is increasing in u when d = 1, so the bracket starts near u = 0
            return vec![small_root(c, d, tol, 1e-12), 1.0];
        }
        return vec![1.0];
    }
    let small = small_root(c, d, tol, u_min);
    let x_min = (-u_min).exp();
    // the larger root lies between the minimiser and 1, where psi increases
    let large = bisect(
        |x: f64| psi(x, d).map(|p| p - c).unwrap_or(f64::INFINITY),
        x_min,
        1.0 - 1e-15,
        tol.min(1e-15),
    )
    .unwrap_or(x_min);
    vec![small, large, 1.0]
}

/// The root of `psi(exp(-u)) = c` with `u > u_min`, as `t = exp(-u)`.
fn small_root(c: f64, d: usize, tol: f64, u_min: f64) -> f64 {
    // psi_log(u) >= u, so the root lies below u = c + 1
    let u = bisect(
        |u| psi_log(u, d) - c,
        u_min,
        c.max(u_min) + 1.0,
        tol.min(1e-14),
    )
    .expect("psi - c changes sign between its minimiser and c + 1");
    (-u).exp()
}

/// Smallest positive root of `t = exp(-c (1-t)^d)`; 1 when `c <= gamma_d`.
pub fn t_fixed_point(c: f64, d: usize, tol: f64) -> f64 {
    if c <= 0.0 {
        return 1.0;
    }
    fixed_point_roots(c, d, tol)[0]
}

/// `t_0, ..., t_k` with `t_{-1} = 0` and `t_{j+1} = exp(-c (1-t_j)^d)`.
pub fn t_sequence(c: f64, d: usize, k: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(k + 1);
    let mut t = 0.0f64;
    for _ in 0..=k {
        t = (-c * (1.0 - t).powi(d as i32)).exp();
        out.push(t);
    }
    out
}

/// `t_j` for `j >= -1`.
pub fn t_k(c: f64, d: usize, j: i64) -> f64 {
    if j < 0 {
        return 0.0;
    }
    *t_sequence(c, d, j as usize).last().unwrap()
}

/// Poisson parameter of the rooted degree after `k` phases:
/// `c (1 - t_{k-1})^d`.
pub fn rooted_degree_rate(c: f64, d: usize, k: usize) -> f64 {
    c * (1.0 - t_k(c, d, k as i64 - 1)).powi(d as i32)
}

/// Limiting densities of `Y_d(n, c/n)`. Ridge counts and Betti numbers are
/// per `C(n,d)`; the d-face count of the core is per `C(n,d)` too, shadows
/// are per `C(n,d+1)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegimeDensities {
    pub c: f64,
    pub d: usize,
    pub t: f64,
    pub core_dminus1_density: f64,
    pub core_d_density: f64,
    pub betti_density: f64,
    pub shadow_density: f64,
    /// Average ridge degree in the core; `None` when the core vanishes.
    pub avg_core_degree: Option<f64>,
}

/// `c/(d+1) (1-t)^(d+1) - (1-t) + c t (1-t)^d` at the smallest root.
pub fn betti_formula(c: f64, d: usize, t: f64) -> f64 {
    let r = 1.0 - t;
    c / (d as f64 + 1.0) * r.powi(d as i32 + 1) - r + c * t * r.powi(d as i32)
}

pub fn regime_densities(c: f64, d: usize) -> RegimeDensities {
    regime_densities_at(c, d, t_fixed_point(c, d, DEFAULT_TOL))
}

/// Densities evaluated at a given root `t` of the fixed-point equation.
pub fn regime_densities_at(c: f64, d: usize, t: f64) -> RegimeDensities {
    let r = 1.0 - t;
    let rd = r.powi(d as i32);
    let core_dminus1 = poisson_tail(2, c * rd);
    let denom = r - c * rd * t;
    RegimeDensities {
        c,
        d,
        t,
        core_dminus1_density: core_dminus1,
        core_d_density: c * rd * r / (d as f64 + 1.0),
        betti_density: betti_formula(c, d, t).max(0.0),
        shadow_density: rd * r,
        avg_core_degree: (r > 0.0 && denom > 0.0).then(|| c * rd * r / denom),
    }
}

/// Expected `x_T` bound: the maximum over roots `t` in `(0,1]` of
/// `t + c t (1-t)^d - c/(d+1) (1 - (1-t)^(d+1))`.
pub fn ex_xt_bound(c: f64, d: usize) -> f64 {
    fixed_point_roots(c, d, DEFAULT_TOL)
        .into_iter()
        .map(|t| xt_bound_at(c, d, t))
        .fold(f64::NEG_INFINITY, f64::max)
}

pub fn xt_bound_at(c: f64, d: usize, t: f64) -> f64 {
    let r = 1.0 - t;
    let df = d as f64;
    t + c * t * r.powi(d as i32) - c / (df + 1.0) * (1.0 - r.powi(d as i32 + 1))
}

/// Limit of the probability that the complex is collapsible for `c < gamma_d`:
/// the chance of containing no boundary of a (d+1)-simplex.
pub fn collapsible_probability(c: f64, d: usize) -> f64 {
    let k = d as f64 + 2.0;
    (-(k * c.ln() - ln_gamma(k + 1.0)).exp()).exp()
}

/// Limiting C-shadow density (per `C(n,d+1)`).
pub fn c_shadow_density(c: f64, d: usize) -> f64 {
    regime_densities(c, d).shadow_density
}

/// Limiting R-shadow density (per `C(n,d+1)`); zero below `c_d`.
pub fn r_shadow_density(c: f64, d: usize) -> f64 {
    match c_d(d, DEFAULT_TOL) {
        Ok(cd) if c > cd => regime_densities(c, d).shadow_density,
        _ => 0.0,
    }
}

/// One row of the density-versus-c curves.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub c: f64,
    pub f1_density: f64,
    pub f2_density: f64,
    pub betti_density: f64,
    pub c_shadow_density: f64,
    pub r_shadow_density: f64,
    /// `c` coincides with `gamma_d` or `c_d`, where the limits are not given.
    pub boundary: bool,
}

/// Densities on the grid `c_min, c_min + step, ..., <= c_max`.
pub fn curves(d: usize, c_min: f64, c_max: f64, step: f64) -> Result<Vec<CurvePoint>> {
    if !(step > 0.0) || c_max < c_min {
        return Err(Error::Config("need step > 0 and c_max >= c_min".into()));
    }
    let gamma = gamma_d(d, DEFAULT_TOL);
    let cd = c_d(d, DEFAULT_TOL)?;
    let steps = ((c_max - c_min) / step + 1e-9).floor() as usize;
    Ok((0..=steps)
        .map(|i| {
            let c = c_min + i as f64 * step;
            let r = regime_densities(c, d);
            let near = |x: f64| (c - x).abs() <= 1e-9 * x.max(1.0);
            CurvePoint {
                c,
                f1_density: r.core_dminus1_density,
                f2_density: r.core_d_density,
                betti_density: r.betti_density,
                c_shadow_density: r.shadow_density,
                r_shadow_density: if c > cd { r.shadow_density } else { 0.0 },
                boundary: near(gamma) || near(cd),
            }
        })
        .collect())
}

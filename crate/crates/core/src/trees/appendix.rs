//! Exponential-integral identities and bounds, each checked against an
//! independent adaptive quadrature witness.

use serde::Serialize;

use crate::quadrature::{integrate_half_line, integrate_pieces};

use super::TreeError;

const ABS_TOL: f64 = 1e-15;
const REL_TOL: f64 = 1e-11;

/// Cap on the implicit constant in the increment bound for `H = F I(p, a, D)`.
pub const C_B3: f64 = 2.0;
/// Cap on the implicit constant in the five-exponential increment bound.
pub const C_B4: f64 = 4.0;
/// Cap on the implicit constant of the two-exponential package bound.
pub const C_B6: f64 = 8.0;
/// Constant `C` in `|b e^{-at} - a e^{-bt} - (b - a)| <= (C ^ 2abt^2) |b - a|`.
pub const C_B2: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundCheck {
    pub bound: f64,
    pub witness: f64,
}

impl BoundCheck {
    pub fn holds(&self) -> bool {
        self.witness <= self.bound * (1.0 + 1e-12) + 1e-300
    }

    pub fn ratio(&self) -> f64 {
        self.witness / self.bound
    }
}

fn positive(names: &[(&str, f64)]) -> Result<(), TreeError> {
    for (n, v) in names {
        if !(*v > 0.0) || !v.is_finite() {
            return Err(TreeError::DomainError(format!("{n} must be positive, got {v}")));
        }
    }
    Ok(())
}

/// `int_0^inf int_0^inf f(x, y) dy dx` with kinks supplied per variable.
fn quad2(
    f: &dyn Fn(f64, f64) -> f64,
    rate_x: f64,
    rate_y: f64,
    x_breaks: &[f64],
    y_breaks: &dyn Fn(f64) -> Vec<f64>,
) -> f64 {
    let mut outer = |x: f64| {
        let br = y_breaks(x);
        let mut inner = |y: f64| f(x, y);
        integrate_half_line(&mut inner, rate_y, &br, ABS_TOL, REL_TOL)
    };
    integrate_half_line(&mut outer, rate_x, x_breaks, ABS_TOL, REL_TOL)
}

/// Quadrature of `int int e^{-a(x + y) - b|D - x + y|}` over the positive quadrant,
/// the defining integral of [`b1_integral`](super::b1_integral) after `x = t - r`, `y = s - r'`.
pub fn b1_quadrature(a: f64, b: f64, delta: f64) -> Result<f64, TreeError> {
    positive(&[("a", a), ("b", b)])?;
    let f = |x: f64, y: f64| (-a * (x + y) - b * (delta - x + y).abs()).exp();
    Ok(quad2(&f, a, a, &[delta], &|x| vec![x - delta]))
}

/// `I(a, b, D) <= 1/(a(a+b)) ^ e^{-(a ^ b) D}/(a|a-b|)`.
pub fn b1_1_bound(a: f64, b: f64, delta: f64) -> Result<BoundCheck, TreeError> {
    let d = delta.abs();
    let bound = (1.0 / (a * (a + b))).min((-(a.min(b)) * d).exp() / (a * (a - b).abs()));
    Ok(BoundCheck { bound, witness: b1_quadrature(a, b, delta)? })
}

/// The five-rate integral
/// `int_{-inf}^t int_{-inf}^{t'} exp(-a|s-s'| - b|t-s| - c|t'-s'| - d|t'-s| - e|t-s'|)`
/// by quadrature, as a function of `D = t - t'`.
pub fn five_rate_quadrature(a: f64, b: f64, c: f64, d: f64, e: f64, delta: f64) -> Result<f64, TreeError> {
    positive(&[("a", a), ("b", b), ("c", c), ("d", d), ("e", e)])?;
    let f = |x: f64, y: f64| {
        (-a * (delta - x + y).abs() - b * x - c * y - d * (x - delta).abs() - e * (y + delta).abs()).exp()
    };
    Ok(quad2(&f, b + d, c + e, &[delta], &|x| vec![x - delta, -delta]))
}

/// Five-rate integral `<= 10 e^{-(d ^ e)|D|} / ((b+d)(c+e) + a((b+d) ^ (c+e)))`.
pub fn b1_2_bound(a: f64, b: f64, c: f64, d: f64, e: f64, delta: f64) -> Result<BoundCheck, TreeError> {
    let witness = five_rate_quadrature(a, b, c, d, e, delta)?;
    let bound = 10.0 * (-(d.min(e)) * delta.abs()).exp() / ((b + d) * (c + e) + a * (b + d).min(c + e));
    Ok(BoundCheck { bound, witness })
}

/// `int_s^t e^{-u|x-s| - v|x-t|} dx <= 4/(u+v)`.
pub fn b1_3_bound(u: f64, v: f64, s: f64, t: f64) -> Result<BoundCheck, TreeError> {
    positive(&[("u", u), ("v", v)])?;
    if !(t > s) {
        return Err(TreeError::DomainError(format!("need s < t, got s={s}, t={t}")));
    }
    let mut f = |x: f64| (-u * (x - s).abs() - v * (x - t).abs()).exp();
    let witness = integrate_pieces(&mut f, s, t, &[], ABS_TOL, REL_TOL);
    Ok(BoundCheck { bound: 4.0 / (u + v), witness })
}

/// `(1 - e^{-x})/x`, continuous at 0.
fn e1(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - 0.5 * x
    } else {
        -(-x).exp_m1() / x
    }
}

/// `g(t) - 1` for `g(t) = (b e^{-at} - a e^{-bt})/(b - a)`, by quadrature of
/// `g'(s) = -ab s e^{-as} (1 - e^{-(b-a)s})/((b-a)s)`.
fn g_minus_one(a: f64, b: f64, t: f64) -> f64 {
    let h = b - a;
    let mut gp = |s: f64| -a * b * s * (-a * s).exp() * e1(h * s);
    integrate_pieces(&mut gp, 0.0, t, &[], ABS_TOL, REL_TOL)
}

/// With `f(y) = e^{-y}` (so `||f''|| = 1` and `sup |f - y f'| = 1`):
/// `|g(t) - 1| <= 2abt^2` and `|g(t)| <= 1`.
pub fn b1_4_bounds(a: f64, b: f64, t: f64) -> Result<(BoundCheck, BoundCheck), TreeError> {
    positive(&[("a", a), ("b", b), ("t", t)])?;
    let gm1 = g_minus_one(a, b, t);
    Ok((
        BoundCheck { bound: 2.0 * a * b * t * t, witness: gm1.abs() },
        BoundCheck { bound: 1.0, witness: (1.0 + gm1).abs() },
    ))
}

/// `|b e^{-at} - a e^{-bt} - (b - a)| <= (C ^ 2abt^2)|b - a|`.
pub fn b2_bound(a: f64, b: f64, t: f64) -> Result<BoundCheck, TreeError> {
    positive(&[("a", a), ("b", b), ("t", t)])?;
    let scale = (b - a).abs();
    let witness = scale * g_minus_one(a, b, t).abs();
    Ok(BoundCheck { bound: C_B2.min(2.0 * a * b * t * t) * scale, witness })
}

/// Bounds on `H(D) = F I(p, a, D)` (kernel `F e^{-a|t-t'|}` integrated against
/// two copies of `e^{-p .}`) and on `H^(D) = 2(H(0) - H(D))`.
pub fn b3_bounds(p: f64, a: f64, f_amp: f64, delta: f64) -> Result<(BoundCheck, BoundCheck), TreeError> {
    positive(&[("p", p), ("a", a), ("F", f_amp)])?;
    let d = delta.abs();
    let h0 = f_amp * b1_quadrature(p, a, 0.0)?;
    let hd = f_amp * b1_quadrature(p, a, d)?;
    let h_bound = f_amp * (1.0 / (p * (p + a))).min((-(p.min(a)) * d).exp() / (p * (p - a).abs()));
    let hat_bound = C_B3 * f_amp * (1.0f64).min(p * d) / (p * (p + a));
    Ok((
        BoundCheck { bound: h_bound, witness: hd.abs() },
        BoundCheck { bound: hat_bound, witness: (2.0 * (h0 - hd)).abs() },
    ))
}

/// Increment `H^ = 2H(0) - H(D) - H(-D)` of the five-rate integral against
/// `C_B4 [F(1 - e^{-(b+d)|D|}) + e^{-(b+d)|D|}/(a+c+d) (1 - e^{-(a+e-b)|D|})/(a+e-b)]`, `F = H(0)`.
pub fn b4_bound(a: f64, b: f64, c: f64, d: f64, e: f64, delta: f64) -> Result<BoundCheck, TreeError> {
    if (a + e - b).abs() < 1e-12 * (a + e + b) {
        return Err(TreeError::DomainError("need a + e != b".into()));
    }
    let dd = delta.abs();
    let h0 = five_rate_quadrature(a, b, c, d, e, 0.0)?;
    let hp = five_rate_quadrature(a, b, c, d, e, dd)?;
    let hm = five_rate_quadrature(a, b, c, d, e, -dd)?;
    let r = a + e - b;
    let decay = (-(b + d) * dd).exp();
    let bound = C_B4 * (h0 * (1.0 - decay) + decay / (a + c + d) * (-(-r * dd).exp_m1()) / r);
    Ok(BoundCheck { bound, witness: (2.0 * h0 - hp - hm).abs() })
}

/// `H_{k,m}(t,s) = (k+m) e^{-(|k-m|^g + |k|^g)(t-s)} + (k-m) e^{-(|k+m|^g + |k|^g)(t-s)}`.
pub fn h_package(k: i64, m: i64, t: f64, s: f64, gamma: f64) -> Result<f64, TreeError> {
    if k == m {
        return Err(TreeError::DomainError("package needs k != m".into()));
    }
    if t < s {
        return Err(TreeError::DomainError(format!("package needs t >= s, got t={t}, s={s}")));
    }
    let r = |x: i64| (x.unsigned_abs() as f64).powf(gamma);
    let d = t - s;
    Ok((k + m) as f64 * (-(r(k - m) + r(k)) * d).exp() + (k - m) as f64 * (-(r(k + m) + r(k)) * d).exp())
}

/// Parameters `(p, c, eps)` of the package bound: `p = 2 - gamma/2`,
/// `c = 1/(3^gamma 2^{gamma-1})`, `eps = (1 - 1/p)/2`.
pub fn b6_parameters(gamma: f64) -> (f64, f64, f64) {
    let p = 2.0 - gamma / 2.0;
    let c = 1.0 / (3f64.powf(gamma) * 2f64.powf(gamma - 1.0));
    (p, c, 0.5 * (1.0 - 1.0 / p))
}

/// `|H_{k,m}| <= C_B6 e^{-c(|k+m| + |m|)^g (t-s)} |m|^{p eps} (|k| + |k+m|)^{p(1-eps)}`.
pub fn b6_bound(k: i64, m: i64, t: f64, s: f64, gamma: f64) -> Result<BoundCheck, TreeError> {
    if !(gamma > 1.5 && gamma <= 2.0) {
        return Err(TreeError::DomainError(format!("package bound needs gamma in (3/2, 2], got {gamma}")));
    }
    let witness = h_package(k, m, t, s, gamma)?.abs();
    let (p, c, eps) = b6_parameters(gamma);
    let (ka, ma, kma) = (k.unsigned_abs() as f64, m.unsigned_abs() as f64, (k + m).unsigned_abs() as f64);
    let bound = C_B6
        * (-c * (kma + ma).powf(gamma) * (t - s)).exp()
        * ma.powf(p * eps)
        * (ka + kma).powf(p * (1.0 - eps));
    Ok(BoundCheck { bound, witness })
}

/// `int_0^inf int_0^inf e^{-A x - B y - C|x - y|} = (1/(A+B)) (1/(A+C) + 1/(B+C))`.
pub fn phi_three(a: f64, b: f64, c: f64) -> f64 {
    (1.0 / (a + b)) * (1.0 / (a + c) + 1.0 / (b + c))
}

fn p3_weight(k: i64, m: i64, gamma: f64) -> (f64, f64) {
    let r = |x: i64| (x.unsigned_abs() as f64).powf(gamma);
    let w = (m - k) as f64 * (k.unsigned_abs() as f64).powf(1.0 - gamma);
    (w, r(m - k) + r(k))
}

fn check_p3(m: i64, gamma: f64) -> Result<(), TreeError> {
    if m == 0 {
        return Err(TreeError::DomainError("P3 sum needs m != 0".into()));
    }
    if !(gamma > 1.5) {
        return Err(TreeError::DomainError(format!("P3 sum needs gamma > 3/2, got {gamma}")));
    }
    Ok(())
}

/// One equal-time `P3` pairing value `|m|^{1-g} w_k w_k' Phi(A_k, A_k', |m|^g)`
/// with `w_k = (m - k)|k|^{1-g}`, `A_k = |m-k|^g + |k|^g`.
pub fn p3_term(k: i64, k2: i64, m: i64, gamma: f64) -> Result<f64, TreeError> {
    check_p3(m, gamma)?;
    if k == 0 || k == m || k2 == 0 || k2 == m {
        return Ok(0.0);
    }
    let (w1, a1) = p3_weight(k, m, gamma);
    let (w2, a2) = p3_weight(k2, m, gamma);
    let mm = (m.unsigned_abs() as f64).powf(gamma);
    Ok(mm.powf((1.0 - gamma) / gamma) * w1 * w2 * phi_three(a1, a2, mm))
}

/// [`p3_term`] with the time integral done by quadrature.
pub fn p3_term_quadrature(k: i64, k2: i64, m: i64, gamma: f64) -> Result<f64, TreeError> {
    check_p3(m, gamma)?;
    if k == 0 || k == m || k2 == 0 || k2 == m {
        return Ok(0.0);
    }
    let (w1, a1) = p3_weight(k, m, gamma);
    let (w2, a2) = p3_weight(k2, m, gamma);
    let c = (m.unsigned_abs() as f64).powf(gamma);
    let f = |x: f64, y: f64| (-a1 * x - a2 * y - c * (x - y).abs()).exp();
    let integral = quad2(&f, a1, a2, &[], &|x| vec![x]);
    Ok((m.unsigned_abs() as f64).powf(1.0 - gamma) * w1 * w2 * integral)
}

/// `sum_{0 < |k|, |k'| <= K} P3(k, k', m)`.
pub fn sum_p3(m: i64, gamma: f64, cutoff: i64) -> Result<f64, TreeError> {
    check_p3(m, gamma)?;
    let ks: Vec<(f64, f64)> = (-cutoff..=cutoff)
        .filter(|&k| k != 0 && k != m)
        .map(|k| p3_weight(k, m, gamma))
        .collect();
    let c = (m.unsigned_abs() as f64).powf(gamma);
    let mut total = 0.0;
    for &(w1, a1) in &ks {
        let mut row = 0.0;
        for &(w2, a2) in &ks {
            row += w2 * phi_three(a1, a2, c);
        }
        total += w1 * row;
    }
    Ok((m.unsigned_abs() as f64).powf(1.0 - gamma) * total)
}

#[derive(Debug, Clone, Serialize)]
pub struct P3Study {
    pub gamma: f64,
    pub cutoff: i64,
    pub ms: Vec<i64>,
    pub sums: Vec<f64>,
    /// `S(m) |m|^{4 gamma - 6}`.
    pub scaled: Vec<f64>,
    /// max/min of `scaled`.
    pub ratio: f64,
    /// log-log slope of `S` against `m`.
    pub fitted_exponent: f64,
    pub predicted_exponent: f64,
}

/// `P3` sums over a ladder of `m` against the predicted decay `|m|^{-(4 gamma - 6)}`.
pub fn p3_decay_study(ms: &[i64], gamma: f64, cutoff: i64) -> Result<P3Study, TreeError> {
    let sums = ms.iter().map(|&m| sum_p3(m, gamma, cutoff)).collect::<Result<Vec<_>, _>>()?;
    let predicted = -(4.0 * gamma - 6.0);
    let scaled: Vec<f64> = ms
        .iter()
        .zip(&sums)
        .map(|(&m, s)| s.abs() * (m.unsigned_abs() as f64).powf(-predicted))
        .collect();
    let max = scaled.iter().cloned().fold(f64::MIN, f64::max);
    let min = scaled.iter().cloned().fold(f64::MAX, f64::min);
    let xs: Vec<f64> = ms.iter().map(|&m| (m.unsigned_abs() as f64).ln()).collect();
    let ys: Vec<f64> = sums.iter().map(|s| s.abs().ln()).collect();
    Ok(P3Study {
        gamma,
        cutoff,
        ms: ms.to_vec(),
        sums,
        scaled,
        ratio: max / min,
        fitted_exponent: crate::besov::least_squares_slope(&xs, &ys),
        predicted_exponent: predicted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trees::b1_integral;

    #[test]
    fn b1_identity_examples() {
        assert!((b1_quadrature(2.0, 1.0, 0.0).unwrap() - 1.0 / 6.0).abs() < 1e-8);
        let want = (2.0 * (-0.3f64).exp() - (-0.6f64).exp()) / 6.0;
        assert!((b1_quadrature(2.0, 1.0, 0.3).unwrap() - want).abs() < 1e-8);
        assert!((b1_quadrature(3.0, 3.0, 0.5).unwrap() - b1_integral(3.0, 3.0, 0.5).unwrap()).abs() < 1e-8);
        assert!(b1_quadrature(-1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn bounds_on_fixed_points() {
        assert!(b1_1_bound(2.0, 0.5, 0.7).unwrap().holds());
        assert!(b1_2_bound(1.0, 2.0, 0.5, 0.3, 1.5, 0.4).unwrap().holds());
        assert!(b1_3_bound(0.2, 5.0, -1.0, 3.0).unwrap().holds());
        let (x, y) = b1_4_bounds(2.0, 7.0, 0.05).unwrap();
        assert!(x.holds() && y.holds());
        assert!(b2_bound(1.0, 9.0, 0.3).unwrap().holds());
        let (h, hh) = b3_bounds(4.0, 1.0, 2.0, 0.2).unwrap();
        assert!(h.holds() && hh.holds());
        assert!(b4_bound(1.0, 2.0, 0.5, 0.3, 1.5, 0.4).unwrap().holds());
        assert!(b4_bound(1.0, 2.0, 0.5, 0.3, 1.0, 0.4).is_err());
        for &(k, m) in &[(5, 5 + 1), (-5, 5), (1, -40), (17, 3)] {
            assert!(b6_bound(k, m, 0.3, 0.0, 1.75).unwrap().holds());
        }
        assert!(h_package(3, 3, 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn p3_single_term_matches_quadrature() {
        let a = p3_term(1, 1, 2, 2.0).unwrap();
        let b = p3_term_quadrature(1, 1, 2, 2.0).unwrap();
        assert!((a - b).abs() < 1e-6 * a.abs().max(1e-12), "{a} vs {b}");
        assert!(sum_p3(2, 1.5, 16).is_err());
        assert!(sum_p3(0, 2.0, 16).is_err());
    }
}

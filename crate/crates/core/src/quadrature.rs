//! Gauss–Legendre rules and adaptive Gauss–Kronrod integration.

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { z } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * p - pm) / (z * z - 1.0);
            if n == 1 {
                dp = 1.0;
            }
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let h = 0.5 * (b - a);
    let c = 0.5 * (a + b);
    (x.iter().map(|&t| c + h * t).collect(), w.iter().map(|&v| v * h).collect())
}

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut rg = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        rk += WGK[j] * s;
        if j % 2 == 1 {
            rg += WG[j / 2] * s;
        }
    }
    (rk * h, ((rk - rg) * h).abs())
}

/// Adaptive integral of `f` over `[a, b]` to `max(abs_tol, rel_tol |I|)`.
pub fn integrate(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let mut intervals = vec![{
        let (v, e) = gk15(f, a, b);
        (a, b, v, e)
    }];
    for _ in 0..2000 {
        let total: f64 = intervals.iter().map(|x| x.2).sum();
        let err: f64 = intervals.iter().map(|x| x.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return total;
        }
        let (i, _) = intervals
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (lo, hi, _, _) = intervals.swap_remove(i);
        let mid = 0.5 * (lo + hi);
        let (v1, e1) = gk15(f, lo, mid);
        let (v2, e2) = gk15(f, mid, hi);
        intervals.push((lo, mid, v1, e1));
        intervals.push((mid, hi, v2, e2));
    }
    intervals.iter().map(|x| x.2).sum()
}

/// Adaptive integral over `[a, b]` split at the given interior breakpoints.
pub fn integrate_pieces(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let mut pts = vec![a];
    let mut inner: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
    inner.sort_by(|x, y| x.partial_cmp(y).unwrap());
    pts.extend(inner);
    pts.push(b);
    pts.windows(2).map(|w| integrate(f, w[0], w[1], abs_tol, rel_tol)).sum()
}

/// `int_0^inf f` for integrands decaying at least like `e^{-rate x}`; the
/// range is cut where the envelope drops below `1e-17`.
pub fn integrate_half_line(
    f: &mut dyn FnMut(f64) -> f64,
    rate: f64,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
) -> f64 {
    let cut = 40.0 / rate;
    let mut br: Vec<f64> = breaks.to_vec();
    // geometric breakpoints help the adaptive rule with the exponential tail
    let mut x = 1.0 / rate;
    while x < cut {
        br.push(x);
        x *= 2.0;
    }
    integrate_pieces(f, 0.0, cut, &br, abs_tol, rel_tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_exactness() {
        for n in [1, 2, 5, 16, 32] {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for p in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} p={p}");
            }
        }
    }

    #[test]
    fn adaptive_integrals() {
        let v = integrate(&mut |x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-14, 1e-14);
        assert!((v - 2.0).abs() < 1e-13);
        let v = integrate_pieces(&mut |x: f64| (x - 0.3).abs(), 0.0, 1.0, &[0.3], 1e-15, 1e-15);
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
        let v = integrate_half_line(&mut |x: f64| (-3.0 * x).exp(), 3.0, &[], 1e-15, 1e-13);
        assert!((v - 1.0 / 3.0).abs() < 1e-13);
    }
}

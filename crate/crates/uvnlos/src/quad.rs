//! Gauss-Legendre nodes and weights.
//!
//! Nodes are the roots of the Legendre polynomial P_n, found by Newton
//! iteration from the Chebyshev-like initial guess; weights follow from the
//! derivative. Accurate to machine precision for the node counts used here
//! (up to a few hundred).

/// Nodes and weights on the reference interval [-1, 1].
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1, "at least one node required");
    let mut out = Vec::with_capacity(n);
    let nf = n as f64;
    for i in 0..n {
        // initial guess for the i-th root (descending order)
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_and_derivative(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// Nodes and weights mapped to [a, b]. Degenerate intervals yield zero weights.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (mid + half * x, half * w))
        .collect()
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    if n == 1 {
        return (x, 1.0);
    }
    let d = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn low_order_nodes_match_reference() {
        let gl3 = gauss_legendre(3);
        let expect = [
            (-0.774_596_669_241_483_4, 5.0 / 9.0),
            (0.0, 8.0 / 9.0),
            (0.774_596_669_241_483_4, 5.0 / 9.0),
        ];
        for ((x, w), (ex, ew)) in gl3.iter().zip(expect.iter()) {
            assert!((x - ex).abs() < 1e-14);
            assert!((w - ew).abs() < 1e-14);
        }
    }

    #[test]
    fn integrates_polynomials_exactly() {
        // n-point rule is exact for degree 2n-1
        let n = 8;
        let rule = gauss_legendre_on(n, 0.0, 2.0);
        let exact = 2.0_f64.powi(16) / 16.0;
        let got: f64 = rule.iter().map(|(x, w)| w * x.powi(15)).sum();
        assert!((got - exact).abs() / exact < 1e-13);
    }

    #[test]
    fn weights_sum_to_interval_length() {
        for n in [2, 16, 64, 128, 200] {
            let s: f64 = gauss_legendre(n).iter().map(|(_, w)| w).sum();
            assert!((s - 2.0).abs() < 1e-12, "n={n} sum={s}");
        }
    }

    #[test]
    fn smooth_integral_converges() {
        // \int_0^1 exp(x) dx
        let exact = std::f64::consts::E - 1.0;
        let got: f64 = gauss_legendre_on(20, 0.0, 1.0)
            .iter()
            .map(|(x, w)| w * x.exp())
            .sum();
        assert!((got - exact).abs() < 1e-14);
    }
}

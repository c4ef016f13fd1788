use alloc::vec::Vec;
use core::f64::consts::PI;

/// Composite Simpson rule with `panels` (rounded up to even) sub-intervals.
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let panels = panels.max(2).next_multiple_of(2);
    let h = (b - a) / panels as f64;
    let mut odd = 0.0;
    let mut even = 0.0;
    for i in 1..panels {
        let x = a + i as f64 * h;
        if i % 2 == 1 {
            odd += f(x);
        } else {
            even += f(x);
        }
    }
    (f(a) + f(b) + 4.0 * odd + 2.0 * even) * h / 3.0
}

const PANELS: usize = 200_000;

/// `∫_a^b |f^(order)(x)|² dx` by composite Simpson with 2·10⁵ panels.
///
/// `derivs(x)` returns `[f, f', f'']`. The endpoints are evaluated as one-sided
/// limits from inside the interval, so piecewise definitions that switch
/// branch exactly at `a` or `b` integrate correctly.
pub fn integrate_sq_derivative<F: Fn(f64) -> [f64; 3]>(derivs: F, order: usize, a: f64, b: f64) -> f64 {
    assert!((1..=2).contains(&order), "order must be 1 or 2");
    let (a_in, b_in) = (a.next_up(), b.next_down());
    simpson(
        |x| {
            let x = x.clamp(a_in, b_in);
            let d = derivs(x)[order];
            d * d
        },
        a,
        b,
        PANELS,
    )
}

/// Quadrature and closed form of the squared-derivative integrals of a
/// trigonometric polynomial over `[-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BandlimitedCheck {
    /// `(quadrature, closed form)` of `∫|f'|²`.
    pub first: (f64, f64),
    /// `(quadrature, closed form)` of `∫|f''|²`.
    pub second: (f64, f64),
}

/// For `f(x) = a₀/2 + Σ_{n=1}^N (a_n cos nx + b_n sin nx)` returns quadratures
/// of `∫|f'|²`, `∫|f''|²` and the closed forms `π Σ n²(a²+b²)`, `π Σ n⁴(a²+b²)`.
/// `a[0]` and `b[0]` hold the `n = 1` coefficients.
pub fn bandlimited_identities(a: &[f64], b: &[f64]) -> BandlimitedCheck {
    assert_eq!(a.len(), b.len(), "coefficient vectors must match");
    assert!(a.len() <= 64, "at most 64 harmonics");
    let terms: Vec<(f64, f64, f64)> =
        a.iter().zip(b).enumerate().map(|(i, (&an, &bn))| ((i + 1) as f64, an, bn)).collect();
    let d1 = |x: f64| -> f64 { terms.iter().map(|&(n, an, bn)| n * (bn * libm::cos(n * x) - an * libm::sin(n * x))).sum() };
    let d2 = |x: f64| -> f64 {
        terms.iter().map(|&(n, an, bn)| -n * n * (an * libm::cos(n * x) + bn * libm::sin(n * x))).sum()
    };
    let panels = 20_000;
    let q1 = simpson(|x| d1(x) * d1(x), -PI, PI, panels);
    let q2 = simpson(|x| d2(x) * d2(x), -PI, PI, panels);
    let c1 = PI * terms.iter().map(|&(n, an, bn)| n * n * (an * an + bn * bn)).sum::<f64>();
    let c2 = PI * terms.iter().map(|&(n, an, bn)| n * n * n * n * (an * an + bn * bn)).sum::<f64>();
    BandlimitedCheck { first: (q1, c1), second: (q2, c2) }
}

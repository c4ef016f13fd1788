use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

/// In-place forward DFT, `X_k = Σ_j x_j e^{-2πi jk/N}`. `N` must be a power of two.
pub fn fft(data: &mut [Complex64]) {
    let n = data.len();
    assert!(n.is_power_of_two(), "fft length must be a power of two");
    if n < 2 {
        return;
    }
    let bits = n.trailing_zeros();
    for i in 0..n {
        let j = i.reverse_bits() >> (usize::BITS - bits);
        if j > i {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let twiddles: Vec<Complex64> =
            (0..half).map(|k| Complex64::from_polar(1.0, -2.0 * PI * k as f64 / len as f64)).collect();
        for chunk in data.chunks_exact_mut(len) {
            let (lo, hi) = chunk.split_at_mut(half);
            for ((a, b), w) in lo.iter_mut().zip(hi.iter_mut()).zip(&twiddles) {
                let t = *b * w;
                *b = *a - t;
                *a += t;
            }
        }
        len *= 2;
    }
}

/// In-place 2D DFT of a row-major `n × n` array.
pub fn fft2(data: &mut [Complex64], n: usize) {
    assert_eq!(data.len(), n * n);
    for row in data.chunks_exact_mut(n) {
        fft(row);
    }
    let mut column = Vec::with_capacity(n);
    for j in 0..n {
        column.clear();
        column.extend((0..n).map(|i| data[i * n + j]));
        fft(&mut column);
        for (i, v) in column.iter().enumerate() {
            data[i * n + j] = *v;
        }
    }
}

/// Frequency of DFT bin `index` for `n` samples spaced `h` apart.
pub fn fftfreq(index: usize, n: usize, h: f64) -> f64 {
    let signed = if index < n.div_ceil(2) { index as f64 } else { index as f64 - n as f64 };
    signed / (n as f64 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn naive_dft(x: &[Complex64]) -> Vec<Complex64> {
        let n = x.len();
        (0..n)
            .map(|k| {
                x.iter()
                    .enumerate()
                    .map(|(j, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * k) as f64 / n as f64))
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft() {
        let x: Vec<Complex64> = (0..64).map(|j| Complex64::new(libm::sin(j as f64 * 0.37), libm::cos(j as f64))).collect();
        let mut y = x.clone();
        fft(&mut y);
        for (a, b) in y.iter().zip(naive_dft(&x)) {
            assert!((a - b).norm() < 1e-11);
        }
    }

    #[test]
    fn two_dimensional_is_separable() {
        let n = 8;
        let mut x = vec![Complex64::new(0.0, 0.0); n * n];
        x[n + 2] = Complex64::new(1.0, 0.0);
        fft2(&mut x, n);
        for k1 in 0..n {
            for k2 in 0..n {
                let expected = Complex64::from_polar(1.0, -2.0 * PI * (k1 + 2 * k2) as f64 / n as f64);
                assert!((x[k1 * n + k2] - expected).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn frequencies_follow_numpy_layout() {
        let f: Vec<f64> = (0..4).map(|i| fftfreq(i, 4, 0.5)).collect();
        assert_eq!(f, vec![0.0, 0.5, -1.0, -0.5]);
    }
}

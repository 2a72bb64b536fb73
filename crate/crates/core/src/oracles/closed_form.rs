/// `Σ_{i≤N} ρ^i / (i!)²`: the kernel of two single-segment series whose
/// increments have inner product `ρ`.
pub fn bessel_series_kernel(rho: f64, order: usize) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for i in 1..=order {
        let i = i as f64;
        term *= rho / (i * i);
        sum += term;
    }
    sum
}

/// Kernel of a single segment against two segments, where `d11` and `d12` are
/// the increment products with the first and second segment:
/// `Σ_{i+j≤2N} d11^i d12^j / ((i+j)! i! j!)`.
pub fn two_tile_closed_form(d11: f64, d12: f64, order: usize) -> f64 {
    let max = 2 * order;
    let mut sum = 0.0;
    // row_head = d11^i / (i!)², the j = 0 term of row i.
    let mut row_head = 1.0;
    for i in 0..=max {
        if i > 0 {
            let fi = i as f64;
            row_head *= d11 / (fi * fi);
        }
        let mut term = row_head;
        sum += term;
        for j in 1..=(max - i) {
            let fj = j as f64;
            term *= d12 / ((i as f64 + fj) * fj);
            sum += term;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bessel_examples() {
        assert_eq!(bessel_series_kernel(0.0, 24), 1.0);
        assert_relative_eq!(bessel_series_kernel(1.0, 16), 2.279_585_302_336_067, max_relative = 1e-15);
        assert_relative_eq!(bessel_series_kernel(-1.0, 16), 0.223_890_779_141_235_7, max_relative = 1e-14);
    }

    #[test]
    fn two_tile_examples() {
        assert_eq!(two_tile_closed_form(0.0, 0.0, 24), 1.0);
        for &d in &[-3.0, -0.5, 0.7, 2.0] {
            assert_relative_eq!(
                two_tile_closed_form(d, 0.0, 24),
                bessel_series_kernel(d, 48),
                max_relative = 1e-14
            );
        }
        assert_relative_eq!(two_tile_closed_form(0.5, 0.5, 24), 2.279_585_302_336_067, max_relative = 1e-14);
    }

    #[test]
    fn two_tile_resums_to_single_tile() {
        // Splitting one segment in two must not change the kernel.
        for &(a, b1, b2) in &[(1.0, 0.3, -0.8), (-0.6, 0.9, 0.2), (0.4, -1.0, -0.5)] {
            assert_relative_eq!(
                two_tile_closed_form(a * b1, a * b2, 24),
                bessel_series_kernel(a * (b1 + b2), 24),
                max_relative = 1e-13
            );
        }
    }
}

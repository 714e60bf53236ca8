// Copyright 2026 The ramopt Authors
// SPDX-License-Identifier: Apache-2.0

//! Normalized Hermite functions ψ_n(u) = (2ⁿ n! √π)^{-1/2} H_n(u) e^{-u²/2},
//! via the three-term recurrence, which stays bounded for large n.

/// ψ_0(u) … ψ_{n_max}(u).
pub fn hermite_functions(n_max: usize, u: f64) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n_max + 1);
    psi.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp());
    if n_max >= 1 {
        psi.push(std::f64::consts::SQRT_2 * u * psi[0]);
    }
    for n in 1..n_max {
        let next = (2.0 / (n + 1) as f64).sqrt() * u * psi[n]
            - (n as f64 / (n + 1) as f64).sqrt() * psi[n - 1];
        psi.push(next);
    }
    psi
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_by_quadrature() {
        let n_max = 12;
        let h = 0.01;
        let table: Vec<Vec<f64>> = (-1500..=1500)
            .map(|i| hermite_functions(n_max, i as f64 * h))
            .collect();
        for m in 0..=n_max {
            for n in 0..=n_max {
                let s: f64 = table.iter().map(|p| p[m] * p[n]).sum::<f64>() * h;
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-10, "<{m}|{n}> = {s}");
            }
        }
    }

    #[test]
    fn matches_explicit_polynomials() {
        let u: f64 = 0.7;
        let psi = hermite_functions(3, u);
        let g = std::f64::consts::PI.powf(-0.25) * (-0.5 * u * u).exp();
        let h2 = 4.0 * u * u - 2.0;
        let h3 = 8.0 * u.powi(3) - 12.0 * u;
        assert!((psi[2] - g * h2 / (8.0f64).sqrt()).abs() < 1e-14);
        assert!((psi[3] - g * h3 / (48.0f64).sqrt()).abs() < 1e-14);
    }
}

//! Quadrature rules on the reference triangle and on edges.

/// Rule on the reference triangle with barycentric points and weights
/// normalized to sum to one (multiply by the cell area).
#[derive(Debug, Clone)]
pub struct Quadrature {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss rule on `[0, 1]`, weights summing to one.
#[derive(Debug, Clone)]
pub struct EdgeQuadrature {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl Quadrature {
    /// Six-point symmetric rule of Dunavant, exact for degree 4.
    pub fn triangle() -> Self {
        const A: f64 = 0.445_948_490_915_964_886;
        const WA: f64 = 0.223_381_589_678_011_466;
        const B: f64 = 0.091_576_213_509_770_743;
        const WB: f64 = 0.109_951_743_655_321_868;
        let (ca, cb) = (1.0 - 2.0 * A, 1.0 - 2.0 * B);
        Self {
            points: vec![[ca, A, A], [A, ca, A], [A, A, ca], [cb, B, B], [B, cb, B], [B, B, cb]],
            weights: vec![WA, WA, WA, WB, WB, WB],
            degree: 4,
        }
    }
}

impl EdgeQuadrature {
    /// Three-point Gauss-Legendre, exact for degree 5.
    pub fn gauss3() -> Self {
        let d = 0.5 * (3.0f64 / 5.0).sqrt();
        Self { points: vec![0.5 - d, 0.5, 0.5 + d], weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0], degree: 5 }
    }
}

impl Quadrature {
    pub fn edge() -> EdgeQuadrature {
        EdgeQuadrature::gauss3()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(f64::from).product()
    }

    #[test]
    fn triangle_monomials_exact_to_degree_four() {
        // On the reference triangle, ∫ x^a y^b = a! b! / (a + b + 2)!; the rule is area-normalized.
        let q = Quadrature::triangle();
        assert!((q.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        for a in 0..=4u32 {
            for b in 0..=(4 - a) {
                let exact = 2.0 * factorial(a) * factorial(b) / factorial(a + b + 2);
                let approx: f64 =
                    q.points.iter().zip(&q.weights).map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32)).sum();
                assert!((approx - exact).abs() < 1e-14, "x^{a} y^{b}: {approx} vs {exact}");
            }
        }
    }

    #[test]
    fn edge_monomials_exact_to_degree_five() {
        let q = EdgeQuadrature::gauss3();
        for k in 0..=5 {
            let approx: f64 = q.points.iter().zip(&q.weights).map(|(s, w)| w * s.powi(k)).sum();
            assert!((approx - 1.0 / (k + 1) as f64).abs() < 1e-15);
        }
    }
}

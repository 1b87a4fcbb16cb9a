//! Gauss–Legendre rules and the 7/15-point Gauss–Kronrod pair.

use std::f64::consts::PI;

/// Nodes and weights of an n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule by Newton iteration on P_n from the Chebyshev guesses.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integrates `f` over [a, b] with this rule.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += w * f(c + h * x);
        }
        s * h
    }

    /// Maps the reference nodes onto [a, b].
    pub fn mapped_nodes(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (c + h * x, w * h))
    }

    /// Spectral integration matrix: row j holds the weights that integrate
    /// the interpolant through the nodes from -1 up to node j.
    pub fn integration_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let fine = GaussLegendre::new(n + 2);
        let mut s = vec![vec![0.0; n]; n];
        for (j, row) in s.iter_mut().enumerate() {
            let upper = self.nodes[j];
            for (k, entry) in row.iter_mut().enumerate() {
                *entry = fine.integrate(-1.0, upper, |t| self.lagrange(k, t));
            }
        }
        s
    }

    fn lagrange(&self, k: usize, t: f64) -> f64 {
        let xk = self.nodes[k];
        self.nodes
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != k)
            .fold(1.0, |acc, (_, &xi)| acc * (t - xi) / (xk - xi))
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let p = if n == 0 { 1.0 } else { p1 };
    let dp = if n == 0 {
        0.0
    } else {
        n as f64 * (x * p1 - p0) / (x * x - 1.0)
    };
    (p, dp)
}

/// Kronrod abscissae of the 15-point rule (nonnegative half, descending).
pub const GK15_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

pub const GK15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];

/// Weights of the embedded 7-point Gauss rule, on the odd Kronrod nodes.
pub const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One Gauss–Kronrod 7/15 panel: returns (kronrod estimate, |kronrod - gauss|).
pub fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kronrod = fc * GK15_WEIGHTS[7];
    let mut gauss = fc * G7_WEIGHTS[3];
    for i in 0..7 {
        let dx = h * GK15_NODES[i];
        let pair = f(c - dx) + f(c + dx);
        kronrod += GK15_WEIGHTS[i] * pair;
        if i % 2 == 1 {
            gauss += G7_WEIGHTS[i / 2] * pair;
        }
    }
    (kronrod * h, ((kronrod - gauss) * h).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_is_exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        // exact up to degree 15
        let v = rule.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-10);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-14);
    }

    #[test]
    fn large_rule_weights_sum_to_two() {
        let rule = GaussLegendre::new(64);
        let w: f64 = rule.weights.iter().sum();
        assert!((w - 2.0).abs() < 1e-13);
        assert!(rule.nodes.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn integration_matrix_reproduces_antiderivative() {
        let rule = GaussLegendre::new(10);
        let s = rule.integration_matrix();
        // exact for polynomials of degree below the node count
        let f: Vec<f64> = rule.nodes.iter().map(|&x| x.powi(9) - 2.0 * x * x).collect();
        for (j, &xj) in rule.nodes.iter().enumerate() {
            let approx: f64 = s[j].iter().zip(&f).map(|(a, b)| a * b).sum();
            let anti = |x: f64| x.powi(10) / 10.0 - 2.0 * x.powi(3) / 3.0;
            let exact = anti(xj) - anti(-1.0);
            assert!((approx - exact).abs() < 1e-13, "{j}: {approx} vs {exact}");
        }
    }

    #[test]
    fn gk15_integrates_smooth_function() {
        let (v, err) = gk15(&mut |x: f64| x.exp(), 0.0, 1.0);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-15);
        assert!(err < 1e-10);
    }
}

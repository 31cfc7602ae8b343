//! Truncated-Gaussian detuning quadrature for Doppler averaging.

use super::DynamicsError;

/// Gauss–Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        // Tricomi initial guess, refined by Newton on P_n
        let mut x = ((i as f64 + 0.75) / (nf + 0.5) * std::f64::consts::PI).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
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
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Detuning offsets (rad/s) and normalized weights sampling a Gaussian
/// truncated to ±`sigma_cut` standard deviations.
#[derive(Clone, Debug, PartialEq)]
pub struct DopplerGrid {
    pub shifts: Vec<f64>,
    pub weights: Vec<f64>,
}

impl DopplerGrid {
    pub fn new(fwhm: f64, points: usize, sigma_cut: f64) -> Result<Self, DynamicsError> {
        if points == 0 {
            return Err(DynamicsError::InvalidParameter("doppler_points must be at least 1".into()));
        }
        let sigma = fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt());
        if points == 1 || sigma == 0.0 {
            return Ok(DopplerGrid {
                shifts: vec![0.0],
                weights: vec![1.0],
            });
        }
        let half = sigma_cut * sigma;
        let (x, w) = gauss_legendre(points);
        let shifts: Vec<f64> = x.iter().map(|&u| u * half).collect();
        let raw: Vec<f64> = shifts
            .iter()
            .zip(&w)
            .map(|(&s, &wi)| wi * (-0.5 * (s / sigma).powi(2)).exp())
            .collect();
        let total: f64 = raw.iter().sum();
        Ok(DopplerGrid {
            shifts,
            weights: raw.iter().map(|r| r / total).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.shifts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shifts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.shifts.iter().copied().zip(self.weights.iter().copied())
    }
}

//! Amplitude registers over actions and Grover amplification.

use num_complex::Complex64;
use rand::Rng;

use super::{QrlError, Result};
use crate::rng::seeded;

/// Complex amplitudes whose squared magnitudes are action probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumActionRegister {
    amplitudes: Vec<Complex64>,
}

impl QuantumActionRegister {
    /// Real nonnegative amplitudes `sqrt(p)`, renormalized.
    pub fn from_probabilities(p: &[f64]) -> Result<Self> {
        let total: f64 = p.iter().sum();
        if p.is_empty() || p.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || total <= 0.0 {
            return Err(QrlError::InvalidArgument("probabilities must be nonnegative with positive mass".into()));
        }
        let amplitudes = p.iter().map(|x| Complex64::new((x / total).sqrt(), 0.0)).collect();
        Ok(Self { amplitudes }.normalized())
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(Complex64::norm_sqr).sum()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(Complex64::norm_sqr).collect()
    }

    fn normalized(mut self) -> Self {
        let n = self.norm_sqr().sqrt();
        for a in &mut self.amplitudes {
            *a /= n;
        }
        self
    }

    /// Shannon entropy of the selection distribution, in nats.
    pub fn entropy(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(Complex64::norm_sqr)
            .filter(|p| *p > 0.0)
            .map(|p| -p * p.ln())
            .sum()
    }
}

/// Uniform superposition over `n_actions`.
pub fn init_register(n_actions: usize) -> Result<QuantumActionRegister> {
    if n_actions == 0 {
        return Err(QrlError::InvalidArgument("register needs at least one action".into()));
    }
    let a = Complex64::new(1.0 / (n_actions as f64).sqrt(), 0.0);
    Ok(QuantumActionRegister { amplitudes: vec![a; n_actions] })
}

/// `L` rounds of oracle sign flip on `target` followed by inversion about the mean.
pub fn grover_update(reg: &QuantumActionRegister, target: usize, iterations: usize) -> Result<QuantumActionRegister> {
    if target >= reg.len() {
        return Err(QrlError::InvalidArgument(format!("target {target} outside {} actions", reg.len())));
    }
    let mut amps = reg.amplitudes.clone();
    let n = amps.len() as f64;
    for _ in 0..iterations {
        amps[target] = -amps[target];
        let mean = amps.iter().sum::<Complex64>() / n;
        for a in &mut amps {
            *a = 2.0 * mean - *a;
        }
    }
    Ok(QuantumActionRegister { amplitudes: amps }.normalized())
}

/// Iteration count that brings a uniform register closest to the target:
/// `round(pi / (4 theta) - 1/2)` with `sin theta = 1 / sqrt(n)`.
pub fn optimal_iterations(n_actions: usize) -> usize {
    if n_actions <= 1 {
        return 0;
    }
    let theta = (1.0 / (n_actions as f64).sqrt()).asin();
    (std::f64::consts::PI / (4.0 * theta) - 0.5).round().max(0.0) as usize
}

/// Samples an action with probability `|amplitude|^2`.
pub fn select_action(reg: &QuantumActionRegister, rng_seed: u64) -> usize {
    select_with(reg, &mut seeded(rng_seed))
}

pub fn select_with<R: Rng + ?Sized>(reg: &QuantumActionRegister, rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * reg.norm_sqr();
    let mut acc = 0.0;
    for (i, a) in reg.amplitudes.iter().enumerate() {
        acc += a.norm_sqr();
        if u < acc {
            return i;
        }
    }
    // Rounding can leave `u` just above the running sum; take the last action with mass.
    reg.amplitudes.iter().rposition(|a| a.norm_sqr() > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Dense 4x4 state-vector oracle: D * O as an explicit matrix.
    fn grover_matrix_4(target: usize) -> [[f64; 4]; 4] {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                let diffusion = 0.5 - if i == j { 1.0 } else { 0.0 };
                let oracle = if j == target { -1.0 } else { 1.0 };
                *v = diffusion * oracle;
            }
        }
        m
    }

    #[test]
    fn exact_amplification_n4() {
        for t in 0..4 {
            let r = grover_update(&init_register(4).unwrap(), t, 1).unwrap();
            assert!((r.probabilities()[t] - 1.0).abs() < 1e-9);
            let m = grover_matrix_4(t);
            let want: Vec<f64> = (0..4).map(|i| m[i].iter().map(|v| v * 0.5).sum()).collect();
            for (a, w) in r.amplitudes().iter().zip(&want) {
                assert!((a.re - w).abs() < 1e-12 && a.im.abs() < 1e-12);
            }
        }
    }

    #[test]
    fn init_and_identity() {
        assert!(init_register(0).is_err());
        let one = init_register(1).unwrap();
        assert_eq!(one.probabilities(), vec![1.0]);
        assert_eq!(select_action(&one, 5), 0);
        let r = init_register(4).unwrap();
        assert!(r.probabilities().iter().all(|p| (p - 0.25).abs() < 1e-15));
        assert_eq!(grover_update(&r, 2, 0).unwrap(), r);
        assert!(grover_update(&r, 4, 1).is_err());
    }

    #[test]
    fn two_actions_swap_magnitudes() {
        // With two actions one Grover round swaps the two probabilities, so a uniform register never moves.
        let r = QuantumActionRegister::from_probabilities(&[0.8, 0.2]).unwrap();
        let g = grover_update(&r, 0, 1).unwrap().probabilities();
        assert!((g[0] - 0.2).abs() < 1e-12 && (g[1] - 0.8).abs() < 1e-12);
        let u = grover_update(&init_register(2).unwrap(), 1, 3).unwrap().probabilities();
        assert!((u[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn optimal_counts() {
        assert_eq!(optimal_iterations(1), 0);
        assert_eq!(optimal_iterations(2), 1);
        assert_eq!(optimal_iterations(4), 1);
        assert_eq!(optimal_iterations(64), 6);
    }

    #[test]
    fn selection_frequencies() {
        let r = init_register(4).unwrap();
        let mut rng = seeded(11);
        let mut counts = [0usize; 4];
        let draws = 100_000;
        for _ in 0..draws {
            counts[select_with(&r, &mut rng)] += 1;
        }
        let sigma = (0.25f64 * 0.75 / draws as f64).sqrt();
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() < 3.0 * sigma);
        }
        let peaked = QuantumActionRegister::from_probabilities(&[0.0, 0.0, 1.0]).unwrap();
        assert!((0..100).all(|s| select_action(&peaked, s) == 2));
        assert_eq!(select_action(&r, 9), select_action(&r, 9));
    }

    #[test]
    fn norm_over_many_random_operations() {
        let mut rng = seeded(3);
        for _ in 0..10_000 {
            let n = rng.random_range(1..=64);
            let l = rng.random_range(0..=20);
            let p: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
            let r = QuantumActionRegister::from_probabilities(&p).unwrap();
            let g = grover_update(&r, rng.random_range(0..n), l).unwrap();
            assert!((g.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }

    proptest! {
        #[test]
        fn norm_preserved(n in 1usize..65, l in 0usize..40, t in 0usize..64) {
            let reg = init_register(n).unwrap();
            let g = grover_update(&reg, t % n, l).unwrap();
            prop_assert!((g.norm_sqr() - 1.0).abs() < 1e-9);
        }
    }
}

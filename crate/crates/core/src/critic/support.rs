use crate::{Error, Result};

/// Uniform grid of return atoms `v_min, …, v_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct Support {
    v_min: f64,
    v_max: f64,
    atoms: Vec<f64>,
}

impl Support {
    pub fn new(v_min: f64, v_max: f64, n_atoms: usize) -> Result<Self> {
        if !(v_min.is_finite() && v_max.is_finite() && v_min < v_max) {
            return Err(Error::Config(format!("support needs v_min < v_max, got [{v_min}, {v_max}]")));
        }
        if n_atoms < 2 {
            return Err(Error::Config(format!("support needs at least 2 atoms, got {n_atoms}")));
        }
        let delta = (v_max - v_min) / (n_atoms - 1) as f64;
        let mut atoms: Vec<f64> = (0..n_atoms).map(|k| v_min + k as f64 * delta).collect();
        // pin the endpoint against accumulated rounding
        atoms[n_atoms - 1] = v_max;
        Ok(Support { v_min, v_max, atoms })
    }

    pub fn v_min(&self) -> f64 {
        self.v_min
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        (self.v_max - self.v_min) / (self.atoms.len() - 1) as f64
    }

    pub fn clamp(&self, z: f64) -> f64 {
        z.clamp(self.v_min, self.v_max)
    }
}

/// Probability vector over a [`Support`].
#[derive(Clone, Debug, PartialEq)]
pub struct ReturnDistribution {
    pub probs: Vec<f64>,
}

impl ReturnDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::Model("distribution has negative or non-finite mass".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Model(format!("distribution mass {total} != 1")));
        }
        Ok(ReturnDistribution { probs })
    }

    pub fn one_hot(n: usize, k: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[k] = 1.0;
        ReturnDistribution { probs }
    }

    pub fn uniform(n: usize) -> Self {
        ReturnDistribution { probs: vec![1.0 / n as f64; n] }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.probs.iter().sum()
    }

    pub fn entropy(&self) -> f64 {
        -self.probs.iter().filter(|p| **p > 0.0).map(|p| p * p.ln()).sum::<f64>()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_grid() {
        let s = Support::new(0.0, 10.0, 11).unwrap();
        assert_eq!(s.atoms(), &[0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0]);
    }

    #[test]
    fn dense_control_support() {
        let s = Support::new(-1000.0, 1000.0, 201).unwrap();
        assert_eq!(s.spacing(), 10.0);
        assert_eq!(s.atoms()[0], -1000.0);
        assert_eq!(s.atoms()[200], 1000.0);
        assert!((s.atoms()[100]).abs() < 1e-12);
    }

    #[test]
    fn multi_goal_support() {
        let s = Support::new(-50.0, 0.0, 101).unwrap();
        assert_eq!(s.spacing(), 0.5);
        assert_eq!(s.atoms()[1], -49.5);
    }

    #[test]
    fn invalid_supports() {
        assert!(matches!(Support::new(1.0, 1.0, 5), Err(Error::Config(_))));
        assert!(matches!(Support::new(2.0, 1.0, 5), Err(Error::Config(_))));
        assert!(matches!(Support::new(0.0, 1.0, 1), Err(Error::Config(_))));
    }
}

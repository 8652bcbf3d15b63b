use crate::{Error, Result};

/// Piecewise-linear `f(Ψ)` table, clamped outside its range.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile1D {
    psi: Vec<f64>,
    f: Vec<f64>,
}

impl Profile1D {
    pub fn new(psi: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if psi.is_empty() || psi.len() != f.len() {
            return Err(Error::Config(format!(
                "profile needs matching non-empty samples ({} vs {})",
                psi.len(),
                f.len()
            )));
        }
        if psi.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("profile flux samples must be strictly ascending".into()));
        }
        Ok(Self { psi, f })
    }

    pub fn psi_samples(&self) -> &[f64] {
        &self.psi
    }

    pub fn f_samples(&self) -> &[f64] {
        &self.f
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.psi.len();
        if x <= self.psi[0] {
            return self.f[0];
        }
        if x >= self.psi[n - 1] {
            return self.f[n - 1];
        }
        let k = self.psi.partition_point(|&p| p <= x) - 1;
        let t = (x - self.psi[k]) / (self.psi[k + 1] - self.psi[k]);
        (1.0 - t) * self.f[k] + t * self.f[k + 1]
    }
}

pub fn eval_profile(profile: &Profile1D, psi: f64) -> f64 {
    profile.eval(psi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoint_clamp_and_endpoint() {
        let p = Profile1D::new(vec![0.0, 1.0], vec![1.0, 3.0]).unwrap();
        assert_eq!(eval_profile(&p, 0.5), 2.0);
        assert_eq!(eval_profile(&p, -1.0), 1.0);
        assert_eq!(eval_profile(&p, 1.0), 3.0);
        assert_eq!(eval_profile(&p, 7.0), 3.0);
    }

    #[test]
    fn rejects_unsorted_samples() {
        assert!(Profile1D::new(vec![0.0, 0.0], vec![1.0, 2.0]).is_err());
        assert!(Profile1D::new(vec![], vec![]).is_err());
    }
}

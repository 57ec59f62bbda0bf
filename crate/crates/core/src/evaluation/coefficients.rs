use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Advance speed `va` (m/s), rotation rate `n_rps` (1/s), diameter (m) and
/// fluid density (kg/m^3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OperatingPoint {
    pub va: f64,
    pub n_rps: f64,
    pub diameter: f64,
    pub rho: f64,
}

impl OperatingPoint {
    pub fn new(va: f64, n_rps: f64, diameter: f64, rho: f64) -> Result<Self> {
        let op = Self { va, n_rps, diameter, rho };
        op.validate()?;
        Ok(op)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.va >= 0.0
            && self.va.is_finite()
            && self.n_rps > 0.0
            && self.n_rps.is_finite()
            && self.diameter > 0.0
            && self.diameter.is_finite()
            && self.rho > 0.0
            && self.rho.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("operating point needs va >= 0 and positive n, D, rho (got {self:?})")))
        }
    }

    /// `J = Va / (n D)`.
    pub fn advance_ratio(&self) -> f64 {
        self.va / (self.n_rps * self.diameter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub j: f64,
    pub kt: f64,
    pub kq: f64,
    /// `None` when the torque is not positive.
    pub eta: Option<f64>,
}

/// Open-water efficiency `J K_T / (2 pi K_Q)`; undefined for `K_Q <= 0`.
pub fn efficiency(j: f64, kt: f64, kq: f64) -> Option<f64> {
    (kq > 0.0).then(|| j * kt / (2.0 * PI * kq))
}

pub fn hydrodynamic_coefficients(thrust: f64, torque: f64, op: &OperatingPoint) -> Result<Coefficients> {
    op.validate()?;
    let OperatingPoint { n_rps: n, diameter: d, rho, .. } = *op;
    let j = op.advance_ratio();
    let kt = thrust / (rho * n * n * d.powi(4));
    let kq = torque / (rho * n * n * d.powi(5));
    Ok(Coefficients { j, kt, kq, eta: efficiency(j, kt, kq) })
}

/// Surrogate outputs for one design. `pmax` and `fmax` are proxies: the tip
/// circulation gradient scaled by `rho W_tip` (Pa) and a loaded
/// blade-passing frequency (Hz).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceOutputs {
    pub j: f64,
    pub kt: f64,
    pub kq: f64,
    pub eta: f64,
    pub pmax: f64,
    pub fmax: f64,
}

impl PerformanceOutputs {
    /// Values in dataset column order `kt, eta, pmax, fmax`.
    pub fn row(&self) -> [f64; 4] {
        [self.kt, self.eta, self.pmax, self.fmax]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn advance_ratio_and_efficiency() {
        let op = OperatingPoint::new(5.095, 20.0, 0.25, 1025.0).unwrap();
        assert!((op.advance_ratio() - 1.019).abs() < 1e-12);
        // K_Q from inverting the efficiency formula at eta = 0.629.
        let kq = 1.019 * 0.3835 / (2.0 * PI * 0.629);
        assert!((kq - 0.098875).abs() < 1e-5);
        assert!((efficiency(1.019, 0.3835, 0.098875).unwrap() - 0.629).abs() < 1e-3);
        assert_eq!(efficiency(1.0, 0.2, 0.0), None);
    }

    #[test]
    fn coefficient_identities() {
        let op = OperatingPoint::new(5.095, 20.0, 0.25, 1025.0).unwrap();
        let c = hydrodynamic_coefficients(0.0, 3.0, &op).unwrap();
        assert_eq!(c.kt, 0.0);
        assert_eq!(hydrodynamic_coefficients(10.0, 0.0, &op).unwrap().eta, None);
        assert_eq!(hydrodynamic_coefficients(10.0, -1.0, &op).unwrap().eta, None);

        let (t, q) = (1234.5, 37.25);
        let a = hydrodynamic_coefficients(t, q, &op).unwrap();
        let b = hydrodynamic_coefficients(4.0 * t, 4.0 * q, &op).unwrap();
        assert_eq!((b.kt, b.kq), (4.0 * a.kt, 4.0 * a.kq));
        assert!((b.eta.unwrap() - a.eta.unwrap()).abs() <= 1e-15);
        let dense = hydrodynamic_coefficients(t, q, &OperatingPoint { rho: 2050.0, ..op }).unwrap();
        assert_eq!((dense.kt, dense.kq), (a.kt / 2.0, a.kq / 2.0));
        assert!((a.eta.unwrap() * 2.0 * PI * a.kq - a.j * a.kt).abs() < 1e-12);
    }

    #[test]
    fn invalid_operating_points() {
        assert!(OperatingPoint::new(1.0, 0.0, 0.25, 1025.0).is_err());
        assert!(OperatingPoint::new(-1.0, 10.0, 0.25, 1025.0).is_err());
        assert!(OperatingPoint::new(1.0, 10.0, 0.25, f64::NAN).is_err());
    }
}

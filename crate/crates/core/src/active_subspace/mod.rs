//! Active subspaces of the uncentered gradient covariance
//! `C = E[grad f grad f^T]`, with inputs uniform on `[-1, 1]^m`.
//!
//! `C = W Lambda W^T` is split into the `M` leading eigenvectors `W1` (active
//! directions) and the rest `W2`. Designs map to active variables by
//! `W1^T mu` and back by `W1 mu_M + W2 zeta`.

mod gradients;

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::textio;

pub use gradients::{GradientMethod, GradientSet};

/// Eigenvalues below `EIGEN_FLOOR * lambda_1` are floored before taking
/// log-gaps.
const EIGEN_FLOOR: f64 = 1e-14;
/// Relative gap at or below which the partition is flagged as ambiguous.
const AMBIGUITY_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActiveDim {
    /// Largest log10 gap between consecutive eigenvalues.
    Auto,
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActiveSubspace {
    eigenvalues: DVector<f64>,
    w: DMatrix<f64>,
    active_dim: usize,
    ambiguous: bool,
}

/// Index (1-based) of the largest log10 gap `lambda_i / lambda_{i+1}`.
pub fn largest_gap(eigenvalues: &[f64]) -> usize {
    let floor = eigenvalues.first().copied().unwrap_or(0.0).abs() * EIGEN_FLOOR;
    let floor = if floor > 0.0 { floor } else { f64::MIN_POSITIVE };
    let mut best = (f64::NEG_INFINITY, 1);
    for i in 0..eigenvalues.len().saturating_sub(1) {
        let gap = eigenvalues[i].max(floor).log10() - eigenvalues[i + 1].max(floor).log10();
        if gap > best.0 {
            best = (gap, i + 1);
        }
    }
    best.1
}

impl ActiveSubspace {
    /// Decomposes a symmetric positive semidefinite matrix.
    pub fn from_covariance(c: &DMatrix<f64>, dim: ActiveDim) -> Result<Self> {
        let m = c.nrows();
        if c.ncols() != m {
            return Err(Error::Shape { expected: m, found: c.ncols() });
        }
        if m < 2 {
            return Err(Error::Config("an active subspace needs at least two parameters".into()));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateCovariance("non-finite entries".into()));
        }
        let sym = (c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
        let lambda1 = eig.eigenvalues[order[0]];
        if !(lambda1 > 0.0) {
            return Err(Error::DegenerateCovariance("all gradients vanish".into()));
        }
        let mut eigenvalues = DVector::zeros(m);
        let mut w = DMatrix::zeros(m, m);
        for (k, &i) in order.iter().enumerate() {
            let mut lambda = eig.eigenvalues[i];
            if lambda < 0.0 {
                if lambda < -1e-12 * lambda1.max(1.0) {
                    return Err(Error::DegenerateCovariance(format!("negative eigenvalue {lambda:e}")));
                }
                lambda = 0.0;
            }
            eigenvalues[k] = lambda;
            let mut v = eig.eigenvectors.column(i).into_owned();
            let lead = v.iamax();
            if v[lead] < 0.0 {
                v.neg_mut();
            }
            w.set_column(k, &v);
        }
        let active_dim = match dim {
            ActiveDim::Auto => largest_gap(eigenvalues.as_slice()),
            ActiveDim::Fixed(k) if (1..m).contains(&k) => k,
            ActiveDim::Fixed(k) => {
                return Err(Error::Config(format!("active dimension {k} outside [1, {}]", m - 1)));
            }
        };
        let ambiguous = eigenvalues[active_dim - 1] - eigenvalues[active_dim] <= AMBIGUITY_TOLERANCE * lambda1;
        if ambiguous {
            log::warn!("eigenvalues {active_dim} and {} coincide; the active subspace is not unique", active_dim + 1);
        }
        Ok(Self { eigenvalues, w, active_dim, ambiguous })
    }

    pub fn compute(gradients: &GradientSet, dim: ActiveDim) -> Result<Self> {
        Self::from_covariance(&gradients.covariance(), dim)
    }

    /// Subspace of `sum_i C_i / tr(C_i)`.
    pub fn shared(covariances: &[DMatrix<f64>], dim: ActiveDim) -> Result<Self> {
        let first = covariances
            .first()
            .ok_or_else(|| Error::Config("shared subspace needs at least two covariances".into()))?;
        if covariances.len() < 2 {
            return Err(Error::Config("shared subspace needs at least two covariances".into()));
        }
        let m = first.nrows();
        let mut sum = DMatrix::zeros(m, m);
        for (i, c) in covariances.iter().enumerate() {
            if c.shape() != (m, m) {
                return Err(Error::Shape { expected: m, found: c.nrows() });
            }
            let tr = c.trace();
            if !(tr > 0.0) {
                return Err(Error::DegenerateCovariance(format!("covariance {} has trace {tr}", i + 1)));
            }
            sum += c / tr;
        }
        Self::from_covariance(&sum, dim)
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn active_dim(&self) -> usize {
        self.active_dim
    }

    pub fn is_ambiguous(&self) -> bool {
        self.ambiguous
    }

    /// Nonincreasing, nonnegative.
    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn w1(&self) -> DMatrix<f64> {
        self.w.columns(0, self.active_dim).into_owned()
    }

    pub fn w2(&self) -> DMatrix<f64> {
        self.w.columns(self.active_dim, self.dim() - self.active_dim).into_owned()
    }

    /// `W Lambda W^T`.
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.w * DMatrix::from_diagonal(&self.eigenvalues) * self.w.transpose()
    }

    /// Same eigenpairs with a different partition.
    pub fn with_active_dim(&self, dim: ActiveDim) -> Result<Self> {
        Self::from_covariance(&self.covariance(), dim)
    }

    fn check(&self, v: &[f64], expected: usize) -> Result<()> {
        if v.len() != expected {
            return Err(Error::Shape { expected, found: v.len() });
        }
        Ok(())
    }

    /// Active variables `W1^T mu`.
    pub fn project(&self, mu: &[f64]) -> Result<DVector<f64>> {
        self.check(mu, self.dim())?;
        Ok(self.w1().transpose() * DVector::from_column_slice(mu))
    }

    /// Inactive variables `W2^T mu`.
    pub fn inactive(&self, mu: &[f64]) -> Result<DVector<f64>> {
        self.check(mu, self.dim())?;
        Ok(self.w2().transpose() * DVector::from_column_slice(mu))
    }

    /// `W1 mu_M + W2 zeta`; `zeta = None` gives the minimum-norm preimage.
    pub fn reconstruct(&self, mu_active: &[f64], zeta: Option<&[f64]>) -> Result<DVector<f64>> {
        self.check(mu_active, self.active_dim)?;
        let mut out = self.w1() * DVector::from_column_slice(mu_active);
        if let Some(z) = zeta {
            self.check(z, self.dim() - self.active_dim)?;
            out += self.w2() * DVector::from_column_slice(z);
        }
        Ok(out)
    }

    /// `(index, weight)` pairs of eigenvector `k` (0-based), indices from 1.
    pub fn eigenvector_bars(&self, k: usize) -> Result<Vec<(usize, f64)>> {
        if k >= self.dim() {
            return Err(Error::Index { index: k, len: self.dim() });
        }
        Ok(self.w.column(k).iter().enumerate().map(|(i, &v)| (i + 1, v)).collect())
    }

    /// `# active_dim=M` and `# ambiguous=` comments, an `eigenvalues` line,
    /// then one `w` line per row of `W`.
    pub fn to_csv(&self) -> String {
        let join = |it: &mut dyn Iterator<Item = f64>| it.map(textio::fmt17).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "# active_dim={}", self.active_dim);
        let _ = writeln!(s, "# ambiguous={}", self.ambiguous);
        let _ = writeln!(s, "eigenvalues,{}", join(&mut self.eigenvalues.iter().copied()));
        for row in self.w.row_iter() {
            let _ = writeln!(s, "w,{}", join(&mut row.iter().copied()));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut active_dim = None;
        let mut ambiguous = false;
        let mut eigenvalues: Option<Vec<f64>> = None;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if let Some(meta) = line.strip_prefix('#') {
                match meta.split_once('=').map(|(k, v)| (k.trim(), v.trim())) {
                    Some(("active_dim", v)) => {
                        active_dim = Some(v.parse::<usize>().map_err(|e| Error::parse(lineno, e.to_string()))?)
                    }
                    Some(("ambiguous", v)) => ambiguous = v == "true",
                    _ => {}
                }
            } else if let Some(rest) = line.strip_prefix("eigenvalues,") {
                eigenvalues = Some(textio::parse_row(rest, lineno)?);
            } else if let Some(rest) = line.strip_prefix("w,") {
                rows.push(textio::parse_row(rest, lineno)?);
            } else if !line.is_empty() {
                return Err(Error::parse(lineno, format!("unexpected line `{line}`")));
            }
        }
        let eigenvalues = eigenvalues.ok_or_else(|| Error::Schema("missing eigenvalues line".into()))?;
        let m = eigenvalues.len();
        let active_dim = active_dim.ok_or_else(|| Error::Schema("missing active_dim".into()))?;
        if rows.len() != m || rows.iter().any(|r| r.len() != m) {
            return Err(Error::Schema(format!("W must be {m} x {m}")));
        }
        if !(1..m).contains(&active_dim) {
            return Err(Error::Schema(format!("active_dim {active_dim} outside [1, {}]", m - 1)));
        }
        Ok(Self {
            eigenvalues: DVector::from_vec(eigenvalues),
            w: DMatrix::from_fn(m, m, |i, j| rows[i][j]),
            active_dim,
            ambiguous,
        })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        textio::write(path, self.to_csv())
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(&textio::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_orthogonal(m: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = DMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
        a.qr().q()
    }

    #[test]
    fn rank_one_covariance() {
        let a = DVector::from_vec(vec![3.0, 4.0]) / 5.0 * 2.0;
        let g = DMatrix::from_fn(7, 2, |_, j| a[j]);
        let s = ActiveSubspace::compute(&GradientSet::analytic(g).unwrap(), ActiveDim::Auto).unwrap();
        assert!((s.eigenvalues()[0] - 4.0).abs() < 1e-12);
        assert!(s.eigenvalues()[1].abs() < 1e-12);
        assert_eq!(s.active_dim(), 1);
        let w1 = s.w1();
        assert!((w1[(0, 0)] - 0.6).abs() < 1e-12 && (w1[(1, 0)] - 0.8).abs() < 1e-12);
        assert!(!s.is_ambiguous());
    }

    #[test]
    fn auto_dimension_uses_largest_gap() {
        assert_eq!(largest_gap(&[10.0, 0.1, 0.01, 0.005, 0.001]), 1);
        assert_eq!(largest_gap(&[10.0, 9.0, 0.001, 0.0005]), 2);
        assert_eq!(largest_gap(&[1.0, 1e-20, 0.0]), 1);
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![0.01, 10.0, 0.001, 0.1]));
        let s = ActiveSubspace::from_covariance(&c, ActiveDim::Auto).unwrap();
        assert_eq!(s.active_dim(), 1);
        assert_eq!(s.eigenvalues().as_slice(), &[10.0, 0.1, 0.01, 0.001]);
        assert_eq!(s.w1().column(0).iamax(), 1);
    }

    #[test]
    fn sign_convention() {
        let v = DVector::from_vec(vec![0.2, -0.9, 0.1]).normalize();
        let c = &v * v.transpose();
        let s = ActiveSubspace::from_covariance(&c, ActiveDim::Fixed(1)).unwrap();
        for col in s.eigenvectors().column_iter() {
            assert!(col[col.iamax()] > 0.0);
        }
        assert!((s.w1()[(1, 0)] - 0.9 / (0.86f64).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        let zero = GradientSet::analytic(DMatrix::zeros(4, 3)).unwrap();
        assert!(matches!(ActiveSubspace::compute(&zero, ActiveDim::Auto), Err(Error::DegenerateCovariance(_))));
        let c = DMatrix::<f64>::identity(3, 3);
        assert!(ActiveSubspace::from_covariance(&c, ActiveDim::Fixed(3)).is_err());
        assert!(ActiveSubspace::from_covariance(&c, ActiveDim::Fixed(0)).is_err());
        assert!(ActiveSubspace::shared(std::slice::from_ref(&c), ActiveDim::Auto).is_err());
        assert!(matches!(
            ActiveSubspace::shared(&[c.clone(), DMatrix::zeros(3, 3)], ActiveDim::Auto),
            Err(Error::DegenerateCovariance(_))
        ));
    }

    #[test]
    fn projection_examples() {
        let s = ActiveSubspace::from_covariance(
            &DMatrix::from_diagonal(&DVector::from_vec(vec![5.0, 1.0, 0.5, 0.1])),
            ActiveDim::Fixed(1),
        )
        .unwrap();
        assert_eq!(s.project(&[0.3, -0.2, 0.9, 0.1]).unwrap()[0], 0.3);
        assert_eq!(s.project(&[0.0, 1.0, 2.0, 3.0]).unwrap()[0], 0.0);
        assert_eq!(s.reconstruct(&[0.7], None).unwrap().as_slice(), &[0.7, 0.0, 0.0, 0.0]);
        assert!(matches!(s.project(&[1.0]), Err(Error::Shape { .. })));
        assert!(matches!(s.reconstruct(&[1.0, 2.0], None), Err(Error::Shape { .. })));
        assert!(matches!(s.reconstruct(&[1.0], Some(&[0.0])), Err(Error::Shape { .. })));
    }

    #[test]
    fn projection_matches_dense_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = DMatrix::from_fn(50, 8, |_, _| rng.gen_range(-1.0..1.0));
        let s = ActiveSubspace::compute(&GradientSet::analytic(g).unwrap(), ActiveDim::Fixed(3)).unwrap();
        let mu: Vec<f64> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p = s.project(&mu).unwrap();
        let w = s.eigenvectors();
        for k in 0..3 {
            let mut acc = 0.0;
            for i in 0..8 {
                acc += w[(i, k)] * mu[i];
            }
            assert!((p[k] - acc).abs() < 1e-14);
        }
    }

    #[test]
    fn minimum_norm_preimage() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let g = DMatrix::from_fn(30, 6, |_, _| rng.gen_range(-1.0..1.0));
        let s = ActiveSubspace::compute(&GradientSet::analytic(g).unwrap(), ActiveDim::Fixed(2)).unwrap();
        let mu_m = [0.4, -0.25];
        let best = s.reconstruct(&mu_m, None).unwrap().norm();
        for _ in 0..10_000 {
            let zeta: Vec<f64> = (0..4).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x = s.reconstruct(&mu_m, Some(&zeta)).unwrap();
            assert!((s.project(x.as_slice()).unwrap() - DVector::from_column_slice(&mu_m)).amax() < 1e-12);
            assert!(best <= x.norm() + 1e-15);
        }
    }

    #[test]
    fn shared_subspace_cases() {
        let a = DVector::from_vec(vec![1.0, 2.0, -0.5]).normalize();
        let c1 = &a * a.transpose() * 3.0;
        let c2 = &a * a.transpose() * 0.2;
        let s = ActiveSubspace::shared(&[c1.clone(), c2], ActiveDim::Auto).unwrap();
        assert_eq!(s.active_dim(), 1);
        assert!((s.w1().column(0).dot(&a).abs() - 1.0).abs() < 1e-12);

        let single = ActiveSubspace::from_covariance(&c1, ActiveDim::Auto).unwrap();
        let same = ActiveSubspace::shared(&[c1.clone(), c1.clone()], ActiveDim::Auto).unwrap();
        assert!((single.w1() - same.w1()).amax() < 1e-12);

        let e1 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.0]));
        let e2 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 5.0]));
        let s = ActiveSubspace::shared(&[e1, e2], ActiveDim::Auto).unwrap();
        assert_eq!(s.eigenvalues()[0], s.eigenvalues()[1]);
        assert!(s.is_ambiguous());
    }

    #[test]
    fn exact_ridge_has_one_dimensional_subspace() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = DVector::from_fn(20, |_, _| rng.gen_range(-1.0..1.0));
        let g = DMatrix::from_fn(1100, 20, |i, j| ((i as f64) * 0.37).cos() * a[j]);
        let s = ActiveSubspace::compute(&GradientSet::analytic(g).unwrap(), ActiveDim::Auto).unwrap();
        assert!(s.eigenvalues()[1] / s.eigenvalues()[0] < 1e-12);
        assert_eq!(s.active_dim(), 1);
    }

    #[test]
    fn ridge_direction_from_sampled_data() {
        let (n, m) = (1100, 20);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a: DVector<f64> = DVector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0)).normalize();
        let x: DMatrix<f64> = DMatrix::from_fn(n, m, |_, _| rng.gen_range(-1.0..=1.0));
        let f = DVector::from_fn(n, |i, _| x.row(i).transpose().dot(&a).sin());
        let g = GradientSet::estimate(&x, &f, GradientMethod::local_default(m)).unwrap();
        let s = ActiveSubspace::compute(&g, ActiveDim::Auto).unwrap();
        assert_eq!(s.active_dim(), 1);
        assert!(s.w1().column(0).dot(&a).abs() > 0.99);
    }

    #[test]
    fn rotation_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = 5;
        let r = random_orthogonal(m, &mut rng);
        let a = DVector::from_vec(vec![0.9, -0.3, 0.2, 0.1, 0.05]);
        let b = DVector::from_vec(vec![0.0, 0.4, 0.1, -0.2, 0.3]);
        // f = a^T mu + 0.5 (b^T mu)^2, sampled at random mu.
        let x = DMatrix::from_fn(200, m, |_, _| rng.gen_range(-1.0..1.0));
        let g = DMatrix::from_fn(200, m, |i, j| a[j] + x.row(i).transpose().dot(&b) * b[j]);
        let s = ActiveSubspace::compute(&GradientSet::analytic(g.clone()).unwrap(), ActiveDim::Fixed(2)).unwrap();
        let rotated = GradientSet::analytic(&g * r.transpose()).unwrap();
        let sr = ActiveSubspace::compute(&rotated, ActiveDim::Fixed(2)).unwrap();
        let expect = &r * s.w1();
        for k in 0..2 {
            let (u, v) = (sr.w1().column(k).into_owned(), expect.column(k).into_owned());
            let d = (&u - &v).amax().min((&u + &v).amax());
            assert!(d < 1e-10, "column {k}: {d}");
        }
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = DMatrix::from_fn(40, 6, |_, _| rng.gen_range(-1.0..1.0));
        let s = ActiveSubspace::compute(&GradientSet::analytic(g).unwrap(), ActiveDim::Fixed(2)).unwrap();
        let back = ActiveSubspace::parse(&s.to_csv()).unwrap();
        assert_eq!(back, s);
        assert_eq!(s.eigenvector_bars(0).unwrap()[0].0, 1);
        assert!(s.eigenvector_bars(6).is_err());
        assert!(ActiveSubspace::parse("eigenvalues,1,2\n").is_err());
    }

    fn spsd(m: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(m + 3, m, |_, _| rng.gen_range(-1.0..1.0));
        g.transpose() * g
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn decomposition_invariants(m in 2usize..9, seed in any::<u64>()) {
            let c = spsd(m, seed);
            let s = ActiveSubspace::from_covariance(&c, ActiveDim::Auto).unwrap();
            let w = s.eigenvectors();
            prop_assert!((w.transpose() * w - DMatrix::identity(m, m)).amax() < 1e-10);
            prop_assert!((s.covariance() - &c).amax() < 1e-10 * c.amax().max(1.0));
            prop_assert!(s.eigenvalues().as_slice().windows(2).all(|p| p[0] >= p[1]));
            prop_assert!(s.eigenvalues().iter().all(|&l| l >= 0.0));
        }

        #[test]
        fn project_reconstruct_round_trips(m in 3usize..9, seed in any::<u64>(), k in 1usize..3) {
            let s = ActiveSubspace::from_covariance(&spsd(m, seed), ActiveDim::Fixed(k)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let mu: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let p = s.project(&mu).unwrap();
            let z = s.inactive(&mu).unwrap();
            let back = s.reconstruct(p.as_slice(), Some(z.as_slice())).unwrap();
            prop_assert!((back - DVector::from_column_slice(&mu)).amax() < 1e-12);
            let v = s.project(s.reconstruct(p.as_slice(), None).unwrap().as_slice()).unwrap();
            prop_assert!((v - p).amax() < 1e-12);
        }
    }
}

//! Clamped B-spline curves in one or two dimensions.
//!
//! Every radial distribution of the blade (chord, pitch, skew, rake, maximum
//! camber) is stored as a one-dimensional [`BSplineCurve`] whose parameter is
//! the nondimensional radius. Evaluation follows de Boor's span/basis
//! formulation; derivatives are exact and come from differencing the control
//! polygon.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Second-derivative magnitudes below this are treated as zero when scanning
/// for inflections.
pub const INFLECTION_TOLERANCE: f64 = 1e-10;

/// Clamped, non-rational B-spline curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BSplineCurve {
    degree: usize,
    knots: Vec<f64>,
    dim: usize,
    coords: Vec<f64>,
}

impl BSplineCurve {
    /// Builds a curve from a knot vector and row-major control point
    /// coordinates (`dim` values per point).
    pub fn new(degree: usize, knots: Vec<f64>, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if degree < 1 {
            return Err(Error::InvalidCurve("degree must be at least 1".into()));
        }
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidCurve(format!("dimension {dim} not in {{1, 2}}")));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidCurve(format!(
                "{} coordinates is not a multiple of dimension {dim}",
                coords.len()
            )));
        }
        let n_ctrl = coords.len() / dim;
        if n_ctrl <= degree {
            return Err(Error::InvalidCurve(format!("{n_ctrl} control points cannot carry a degree-{degree} curve")));
        }
        if knots.len() != n_ctrl + degree + 1 {
            return Err(Error::InvalidCurve(format!("expected {} knots, found {}", n_ctrl + degree + 1, knots.len())));
        }
        if knots.iter().chain(coords.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCurve("non-finite knot or control point".into()));
        }
        if knots.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidCurve("knots must be nondecreasing".into()));
        }
        let first = knots[0];
        let last = knots[knots.len() - 1];
        if knots[..=degree].iter().any(|&k| k != first) || knots[knots.len() - degree - 1..].iter().any(|&k| k != last)
        {
            return Err(Error::InvalidCurve(format!("end knots must have multiplicity {} (clamped)", degree + 1)));
        }
        if last <= first {
            return Err(Error::InvalidCurve("empty parameter domain".into()));
        }
        if knots[degree + 1..n_ctrl].contains(&last) {
            return Err(Error::InvalidCurve("interior knot coincides with domain end".into()));
        }
        Ok(Self { degree, knots, dim, coords })
    }

    /// One-dimensional curve from scalar control values.
    pub fn from_values(degree: usize, knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::new(degree, knots, 1, values)
    }

    /// Clamped curve with uniformly spaced interior knots on `[lo, hi]`.
    pub fn uniform(degree: usize, lo: f64, hi: f64, dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidCurve("dimension must be positive".into()));
        }
        let n_ctrl = coords.len() / dim;
        let knots = uniform_knots(degree, n_ctrl, lo, hi)?;
        Self::new(degree, knots, dim, coords)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_ctrl(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn control_point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    /// Row-major control point coordinates.
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[self.degree], self.knots[self.n_ctrl()])
    }

    fn clamp_to_domain(&self, t: f64) -> Result<f64> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (hi - lo).abs().max(1.0);
        if !t.is_finite() || t < lo - slack || t > hi + slack {
            return Err(Error::Domain { value: t, lo, hi });
        }
        Ok(t.clamp(lo, hi))
    }

    /// All `n_ctrl` basis function values `N_{i,p}(t)`.
    pub fn basis_values(&self, t: f64) -> Result<Vec<f64>> {
        let t = self.clamp_to_domain(t)?;
        let n = self.n_ctrl();
        let span = find_span(self.degree, &self.knots, n, t);
        let local = basis_funs(span, t, self.degree, &self.knots);
        let mut full = vec![0.0; n];
        full[span - self.degree..=span].copy_from_slice(&local);
        Ok(full)
    }

    pub fn evaluate(&self, t: f64) -> Result<Vec<f64>> {
        let t = self.clamp_to_domain(t)?;
        Ok(eval_raw(self.degree, &self.knots, self.dim, &self.coords, t))
    }

    /// First coordinate of [`evaluate`](Self::evaluate); the natural accessor
    /// for radial distributions.
    pub fn eval1(&self, t: f64) -> Result<f64> {
        Ok(self.evaluate(t)?[0])
    }

    /// Exact derivative of order 1 or 2.
    pub fn derivative(&self, t: f64, order: usize) -> Result<Vec<f64>> {
        if order == 0 || order > 2 || order > self.degree {
            return Err(Error::InvalidOrder { order, degree: self.degree });
        }
        let t = self.clamp_to_domain(t)?;
        let (degree, knots, coords) = self.hodograph(order);
        Ok(eval_raw(degree, &knots, self.dim, &coords, t))
    }

    /// Control polygon and knots of the `order`-th derivative curve.
    fn hodograph(&self, order: usize) -> (usize, Vec<f64>, Vec<f64>) {
        let mut degree = self.degree;
        let mut knots = self.knots.clone();
        let mut coords = self.coords.clone();
        let dim = self.dim;
        for _ in 0..order {
            let n = coords.len() / dim;
            let mut next = Vec::with_capacity((n - 1) * dim);
            for i in 0..n - 1 {
                let denom = knots[i + degree + 1] - knots[i + 1];
                for d in 0..dim {
                    let diff = coords[(i + 1) * dim + d] - coords[i * dim + d];
                    next.push(if denom > 0.0 { degree as f64 * diff / denom } else { 0.0 });
                }
            }
            knots = knots[1..knots.len() - 1].to_vec();
            coords = next;
            degree -= 1;
        }
        (degree, knots, coords)
    }

    /// Returns a new curve with `displacements` added to the control points at
    /// `indices` (`dim` values per index, row-major).
    pub fn displace_control_points(&self, indices: &[usize], displacements: &[f64]) -> Result<Self> {
        if displacements.len() != indices.len() * self.dim {
            return Err(Error::Shape { expected: indices.len() * self.dim, found: displacements.len() });
        }
        let n = self.n_ctrl();
        let mut out = self.clone();
        for (k, &i) in indices.iter().enumerate() {
            if i >= n {
                return Err(Error::Index { index: i, len: n });
            }
            for d in 0..self.dim {
                out.coords[i * self.dim + d] += displacements[k * self.dim + d];
            }
        }
        Ok(out)
    }

    /// Number of sign changes of the second derivative (curvature for planar
    /// curves) over `n_scan` uniformly spaced parameters.
    pub fn count_inflections(&self, n_scan: usize) -> Result<usize> {
        if self.degree < 2 {
            return Err(Error::InvalidOrder { order: 2, degree: self.degree });
        }
        if n_scan < 10 {
            return Err(Error::InvalidCurve(format!("n_scan = {n_scan} below 10")));
        }
        let (lo, hi) = self.domain();
        let (d1_deg, d1_knots, d1_coords) = self.hodograph(1);
        let (d2_deg, d2_knots, d2_coords) = self.hodograph(2);
        let mut last_sign = 0.0_f64;
        let mut changes = 0;
        for k in 0..n_scan {
            let t = lo + (hi - lo) * k as f64 / (n_scan - 1) as f64;
            let d2 = eval_raw(d2_deg, &d2_knots, self.dim, &d2_coords, t);
            let s = if self.dim == 1 {
                d2[0]
            } else {
                let d1 = eval_raw(d1_deg, &d1_knots, self.dim, &d1_coords, t);
                d1[0] * d2[1] - d1[1] * d2[0]
            };
            if s.abs() < INFLECTION_TOLERANCE {
                continue;
            }
            let sign = s.signum();
            if last_sign != 0.0 && sign != last_sign {
                changes += 1;
            }
            last_sign = sign;
        }
        Ok(changes)
    }

    /// Plain-text record: `degree,p` / `dim,d` / `knots,...` / one `cp,...`
    /// line per control point.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "degree,{}", self.degree);
        let _ = writeln!(s, "dim,{}", self.dim);
        s.push_str("knots");
        for k in &self.knots {
            let _ = write!(s, ",{k:?}");
        }
        s.push('\n');
        for i in 0..self.n_ctrl() {
            s.push_str("cp");
            for v in self.control_point(i) {
                let _ = write!(s, ",{v:?}");
            }
            s.push('\n');
        }
        s
    }

    pub fn from_record(text: &str) -> Result<Self> {
        let mut degree = None;
        let mut dim = None;
        let mut knots = None;
        let mut coords = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut fields = line.split(',').map(str::trim);
            let tag = fields.next().unwrap_or_default();
            let nums = || -> Result<Vec<f64>> {
                line.split(',')
                    .skip(1)
                    .map(|f| f.trim().parse::<f64>().map_err(|e| Error::parse(lineno + 1, format!("`{f}`: {e}"))))
                    .collect()
            };
            match tag {
                "degree" | "dim" => {
                    let v: usize = fields
                        .next()
                        .and_then(|f| f.parse().ok())
                        .ok_or_else(|| Error::parse(lineno + 1, format!("bad {tag} field")))?;
                    if tag == "degree" {
                        degree = Some(v);
                    } else {
                        dim = Some(v);
                    }
                }
                "knots" => knots = Some(nums()?),
                "cp" => coords.extend(nums()?),
                other => return Err(Error::parse(lineno + 1, format!("unknown record tag `{other}`"))),
            }
        }
        let missing = |what: &str| Error::Parse { line: None, message: format!("missing {what} line") };
        Self::new(
            degree.ok_or_else(|| missing("degree"))?,
            knots.ok_or_else(|| missing("knots"))?,
            dim.ok_or_else(|| missing("dim"))?,
            coords,
        )
    }
}

/// Least-squares spline fitting with optional end interpolation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplineFit {
    pub degree: usize,
    pub n_ctrl: usize,
    pub interpolate_ends: bool,
}

impl Default for SplineFit {
    fn default() -> Self {
        Self { degree: 3, n_ctrl: 10, interpolate_ends: true }
    }
}

/// Condition number of the normal equations above which a fit is rejected.
const MAX_NORMAL_CONDITION: f64 = 1e14;

impl SplineFit {
    pub fn new(degree: usize, n_ctrl: usize, interpolate_ends: bool) -> Self {
        Self { degree, n_ctrl, interpolate_ends }
    }

    /// Fits a one-dimensional curve through `(params[j], values[j])`.
    pub fn fit(&self, params: &[f64], values: &[f64]) -> Result<BSplineCurve> {
        self.fit_dim(params, values, 1)
    }

    /// Fits a planar curve; `points` are `(x, y)` pairs at `params`.
    pub fn fit_points(&self, params: &[f64], points: &[[f64; 2]]) -> Result<BSplineCurve> {
        let flat: Vec<f64> = points.iter().flat_map(|p| p.iter().copied()).collect();
        self.fit_dim(params, &flat, 2)
    }

    /// Fits on a caller-supplied clamped knot vector of length
    /// `n_ctrl + degree + 1` instead of averaged knots. Refining `knots` by
    /// insertion never increases the residual.
    pub fn fit_with_knots(&self, params: &[f64], values: &[f64], knots: Vec<f64>) -> Result<BSplineCurve> {
        self.fit_impl(params, values, 1, Some(knots))
    }

    fn fit_dim(&self, params: &[f64], values: &[f64], dim: usize) -> Result<BSplineCurve> {
        self.fit_impl(params, values, dim, None)
    }

    fn fit_impl(&self, params: &[f64], values: &[f64], dim: usize, knots: Option<Vec<f64>>) -> Result<BSplineCurve> {
        let (p, n) = (self.degree, self.n_ctrl);
        if p < 1 || n <= p {
            return Err(Error::Fit {
                reason: format!("need n_ctrl > degree >= 1 (degree {p}, n_ctrl {n})"),
                condition: None,
            });
        }
        if values.len() != params.len() * dim {
            return Err(Error::Shape { expected: params.len() * dim, found: values.len() });
        }
        let len = params.len();
        if len < n {
            return Err(Error::Fit {
                reason: format!("underdetermined: {len} points for {n} control points"),
                condition: None,
            });
        }
        if params.windows(2).any(|w| w[1] <= w[0]) || params.iter().any(|t| !t.is_finite()) {
            return Err(Error::Fit { reason: "parameters must be strictly increasing".into(), condition: None });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Fit { reason: "non-finite data value".into(), condition: None });
        }

        let knots = match knots {
            Some(k) if k.len() != n + p + 1 => return Err(Error::Shape { expected: n + p + 1, found: k.len() }),
            Some(k) => k,
            None => averaged_knots(params, p, n)?,
        };
        let shell = BSplineCurve::new(p, knots.clone(), 1, vec![0.0; n])?;
        let mut basis = DMatrix::<f64>::zeros(len, n);
        for (j, &t) in params.iter().enumerate() {
            for (i, b) in shell.basis_values(t)?.into_iter().enumerate() {
                basis[(j, i)] = b;
            }
        }

        let mut coords = vec![0.0; n * dim];
        let (free_lo, free_hi) = if self.interpolate_ends { (1, n - 1) } else { (0, n) };
        if self.interpolate_ends {
            for d in 0..dim {
                coords[d] = values[d];
                coords[(n - 1) * dim + d] = values[(len - 1) * dim + d];
            }
        }
        let n_free = free_hi - free_lo;
        if n_free > 0 {
            let reduced = basis.columns(free_lo, n_free).into_owned();
            let svd = reduced.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            let condition = if smin > 0.0 { (smax / smin).powi(2) } else { f64::INFINITY };
            if !(condition <= MAX_NORMAL_CONDITION) {
                return Err(Error::Fit {
                    reason: "rank-deficient normal equations".into(),
                    condition: Some(condition),
                });
            }
            for d in 0..dim {
                let mut rhs = DVector::from_fn(len, |j, _| values[j * dim + d]);
                if self.interpolate_ends {
                    for j in 0..len {
                        rhs[j] -= basis[(j, 0)] * coords[d] + basis[(j, n - 1)] * coords[(n - 1) * dim + d];
                    }
                }
                let sol = svd
                    .solve(&rhs, 0.0)
                    .map_err(|e| Error::Fit { reason: e.to_string(), condition: Some(condition) })?;
                for (k, v) in sol.iter().enumerate() {
                    coords[(free_lo + k) * dim + d] = *v;
                }
            }
        }
        BSplineCurve::new(p, knots, dim, coords)
    }
}

/// Largest pointwise residual `|evaluate(t_j) - y_j|` of a one-dimensional
/// curve against data.
pub fn max_residual(curve: &BSplineCurve, params: &[f64], values: &[f64]) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (&t, &y) in params.iter().zip(values) {
        worst = worst.max((curve.eval1(t)? - y).abs());
    }
    Ok(worst)
}

/// Sum of squared residuals of a one-dimensional curve against data.
pub fn squared_residual(curve: &BSplineCurve, params: &[f64], values: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (&t, &y) in params.iter().zip(values) {
        acc += (curve.eval1(t)? - y).powi(2);
    }
    Ok(acc)
}

/// Clamped knot vector whose interior knots average the data parameters so
/// every knot span holds data (keeps the collocation matrix full rank).
pub fn averaged_knots(params: &[f64], degree: usize, n_ctrl: usize) -> Result<Vec<f64>> {
    let len = params.len();
    if n_ctrl <= degree || len < n_ctrl || len < 2 {
        return Err(Error::Fit {
            reason: format!("cannot place knots for {n_ctrl} control points from {len} parameters"),
            condition: None,
        });
    }
    let (lo, hi) = (params[0], params[len - 1]);
    let mut knots = vec![lo; degree + 1];
    let spacing = len as f64 / (n_ctrl - degree) as f64;
    for j in 1..n_ctrl - degree {
        let jd = j as f64 * spacing;
        let i = jd.floor() as usize;
        let alpha = jd - i as f64;
        let k = if i == 0 {
            params[0]
        } else if i >= len {
            params[len - 1]
        } else {
            (1.0 - alpha) * params[i - 1] + alpha * params[i]
        };
        knots.push(k);
    }
    knots.extend(std::iter::repeat_n(hi, degree + 1));
    Ok(knots)
}

/// Clamped knot vector with uniform interior spacing.
pub fn uniform_knots(degree: usize, n_ctrl: usize, lo: f64, hi: f64) -> Result<Vec<f64>> {
    if n_ctrl <= degree {
        return Err(Error::InvalidCurve(format!("{n_ctrl} control points cannot carry a degree-{degree} curve")));
    }
    let inner = n_ctrl - degree;
    let mut knots = vec![lo; degree + 1];
    for j in 1..inner {
        knots.push(lo + (hi - lo) * j as f64 / inner as f64);
    }
    knots.extend(std::iter::repeat_n(hi, degree + 1));
    Ok(knots)
}

/// Knot span index `i` with `knots[i] <= t < knots[i+1]`; the domain end maps
/// to the last nonempty span.
fn find_span(degree: usize, knots: &[f64], n_ctrl: usize, t: f64) -> usize {
    if t >= knots[n_ctrl] {
        let mut i = n_ctrl - 1;
        while i > degree && knots[i] >= knots[i + 1] {
            i -= 1;
        }
        return i;
    }
    if t <= knots[degree] {
        let mut i = degree;
        while i + 1 < n_ctrl && knots[i + 1] <= t {
            i += 1;
        }
        return i;
    }
    let (mut low, mut high) = (degree, n_ctrl);
    let mut mid = (low + high) / 2;
    while t < knots[mid] || t >= knots[mid + 1] {
        if t < knots[mid] {
            high = mid;
        } else {
            low = mid;
        }
        mid = (low + high) / 2;
    }
    mid
}

/// The `degree + 1` nonzero basis functions on `span`. Clamped ends are
/// returned as exact unit vectors so endpoint evaluation is bit-exact.
fn basis_funs(span: usize, t: f64, degree: usize, knots: &[f64]) -> Vec<f64> {
    let mut n = vec![0.0; degree + 1];
    if t <= knots[0] && knots[span] == knots[0] {
        n[0] = 1.0;
        return n;
    }
    if t >= knots[knots.len() - 1] {
        n[degree] = 1.0;
        return n;
    }
    let mut left = vec![0.0; degree + 1];
    let mut right = vec![0.0; degree + 1];
    n[0] = 1.0;
    for j in 1..=degree {
        left[j] = t - knots[span + 1 - j];
        right[j] = knots[span + j] - t;
        let mut saved = 0.0;
        for r in 0..j {
            let denom = right[r + 1] + left[j - r];
            let temp = if denom != 0.0 { n[r] / denom } else { 0.0 };
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    n
}

fn eval_raw(degree: usize, knots: &[f64], dim: usize, coords: &[f64], t: f64) -> Vec<f64> {
    let n_ctrl = coords.len() / dim;
    let span = find_span(degree, knots, n_ctrl, t);
    let basis = basis_funs(span, t, degree, knots);
    let mut out = vec![0.0; dim];
    for (k, b) in basis.iter().enumerate() {
        let i = span - degree + k;
        for d in 0..dim {
            out[d] += b * coords[i * dim + d];
        }
    }
    out
}

//! Fields on rectangular grids in one or two dimensions, standing in for
//! `L2(Rⁿ)` on a user-chosen finite box.
//!
//! Every computation goes through the weighted embedding `φ̃_i = √w_i φ_i`,
//! which maps grid inner products onto plain Hilbert-space inner products.
//! Points are ordered row-major: the first axis varies slowest.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::ensemble::{sample, FieldEnsemble, Reader, SampleBatch};
use crate::error::{PcsftError, Result};
use crate::hilbert::{check_hermitian, quadratic_form, CMatrix, FieldState, HermitianOperator, QuadraticForm};
use crate::sum::{pairwise_sum, pairwise_sum_by};
use crate::tolerances::HERM_TOL;

pub const MAX_AXES: usize = 2;
/// Allowed relative gap between `Σ w_i` and the box volume.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    /// Nodes at both ends, weights `h` with halved end weights.
    #[default]
    Trapezoid,
    /// Nodes at cell centres, weights `h`.
    Midpoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

impl Axis {
    fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(PcsftError::InvalidGrid("axis bounds must be finite".into()));
        }
        if !(self.lo < self.hi) {
            return Err(PcsftError::InvalidGrid(format!("axis lower bound {} not below upper {}", self.lo, self.hi)));
        }
        if self.points < 2 {
            return Err(PcsftError::InvalidGrid(format!("axis needs at least 2 points, got {}", self.points)));
        }
        Ok(())
    }

    fn nodes_and_weights(&self, rule: Quadrature) -> (Vec<f64>, Vec<f64>) {
        let n = self.points;
        let len = self.hi - self.lo;
        match rule {
            Quadrature::Trapezoid => {
                let h = len / (n - 1) as f64;
                let nodes = (0..n)
                    .map(|i| if i == n - 1 { self.hi } else { self.lo + i as f64 * h })
                    .collect();
                let weights = (0..n).map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h }).collect();
                (nodes, weights)
            }
            Quadrature::Midpoint => {
                let h = len / n as f64;
                let nodes = (0..n).map(|i| self.lo + (i as f64 + 0.5) * h).collect();
                (nodes, vec![h; n])
            }
        }
    }
}

/// JSON shape of a grid: `{"axes": [{"lo", "hi", "points"}], "quadrature": "trapezoid"}`
/// with optional explicit `"weights"` (one per point, row-major).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub axes: Vec<Axis>,
    #[serde(default)]
    pub quadrature: Quadrature,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    spec: GridSpec,
    /// Row-major point coordinates, `n_axes` per point.
    coords: Vec<f64>,
    weights: Vec<f64>,
    sqrt_weights: Vec<f64>,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        if spec.axes.is_empty() || spec.axes.len() > MAX_AXES {
            return Err(PcsftError::InvalidGrid(format!("{} axes; 1 or 2 supported", spec.axes.len())));
        }
        for a in &spec.axes {
            a.validate()?;
        }
        let per_axis: Vec<_> = spec.axes.iter().map(|a| a.nodes_and_weights(spec.quadrature)).collect();
        let total = spec
            .axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.points))
            .ok_or_else(|| PcsftError::InvalidGrid("too many points".into()))?;

        let mut coords = Vec::with_capacity(total * spec.axes.len());
        let mut rule_weights = Vec::with_capacity(total);
        match per_axis.as_slice() {
            [(x, wx)] => {
                coords.extend_from_slice(x);
                rule_weights.extend_from_slice(wx);
            }
            [(x, wx), (y, wy)] => {
                for i in 0..x.len() {
                    for j in 0..y.len() {
                        coords.extend_from_slice(&[x[i], y[j]]);
                        rule_weights.push(wx[i] * wy[j]);
                    }
                }
            }
            _ => unreachable!(),
        }

        let weights = match &spec.weights {
            Some(w) => {
                if w.len() != total {
                    return Err(PcsftError::InvalidGrid(format!("{} weights for {total} points", w.len())));
                }
                w.clone()
            }
            None => rule_weights,
        };
        if let Some(bad) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(PcsftError::InvalidGrid(format!("weight {bad} is not strictly positive")));
        }
        let volume: f64 = spec.axes.iter().map(|a| a.hi - a.lo).product();
        let sum = pairwise_sum(&weights);
        if (sum - volume).abs() > WEIGHT_SUM_TOL * volume {
            return Err(PcsftError::InvalidGrid(format!("weights sum to {sum}, box volume is {volume}")));
        }
        let sqrt_weights = weights.iter().map(|w| w.sqrt()).collect();
        Ok(Self {
            spec,
            coords,
            weights,
            sqrt_weights,
        })
    }

    pub fn uniform_1d(lo: f64, hi: f64, points: usize, quadrature: Quadrature) -> Result<Self> {
        Self::new(GridSpec {
            axes: vec![Axis { lo, hi, points }],
            quadrature,
            weights: None,
        })
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn n_axes(&self) -> usize {
        self.spec.axes.len()
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let n = self.n_axes();
        &self.coords[i * n..(i + 1) * n]
    }

    pub fn volume(&self) -> f64 {
        self.spec.axes.iter().map(|a| a.hi - a.lo).product()
    }

    /// `φ̃_i = √w_i φ_i`.
    pub fn embed(&self, values: &[Complex64]) -> Vec<Complex64> {
        values.iter().zip(&self.sqrt_weights).map(|(v, s)| v * *s).collect()
    }

    pub fn unembed(&self, embedded: &[Complex64]) -> Vec<Complex64> {
        embedded.iter().zip(&self.sqrt_weights).map(|(v, s)| v / *s).collect()
    }

    /// `W^½ M W^½`.
    fn weigh(&self, m: &CMatrix) -> CMatrix {
        let n = self.len();
        let mut out = m.clone();
        for j in 0..n {
            for k in 0..n {
                out[(j, k)] *= self.sqrt_weights[j] * self.sqrt_weights[k];
            }
        }
        out
    }
}

impl TryFrom<GridSpec> for Grid {
    type Error = PcsftError;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(spec)
    }
}

/// Complex values at every point of a shared grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    grid: Arc<Grid>,
    values: Vec<Complex64>,
}

impl GridField {
    pub fn new(grid: Arc<Grid>, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(PcsftError::Dimension {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if !values.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(PcsftError::NonFinite("grid field"));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, f: impl Fn(&[f64]) -> Complex64) -> Result<Self> {
        let values = (0..grid.len()).map(|i| f(grid.point(i))).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let values = vec![Complex64::new(0.0, 0.0); grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn embed(&self) -> FieldState {
        FieldState::new(self.grid.embed(&self.values)).expect("finite values, positive weights")
    }
}

fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(PcsftError::GridMismatch)
    }
}

/// `Σ_i w_i conj(a_i) b_i`.
pub fn grid_inner_product(a: &GridField, b: &GridField) -> Result<Complex64> {
    same_grid(&a.grid, &b.grid)?;
    let w = a.grid.weights();
    Ok(pairwise_sum_by(w.len(), |i| a.values[i].conj() * b.values[i] * w[i]))
}

/// `∫ |φ(x)|² dx` by quadrature.
pub fn grid_field_energy(phi: &GridField) -> f64 {
    let w = phi.grid.weights();
    pairwise_sum_by(w.len(), |i| w[i] * phi.values[i].norm_sqr())
}

/// Integral kernel `K(x_i, x_j)` on grid points, acting as
/// `(Kφ)(x_i) = Σ_j w_j K_ij φ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridKernel {
    grid: Arc<Grid>,
    values: CMatrix,
}

impl GridKernel {
    pub fn new(grid: Arc<Grid>, values: CMatrix) -> Result<Self> {
        if values.dim() != grid.len() {
            return Err(PcsftError::Dimension {
                expected: grid.len(),
                found: values.dim(),
            });
        }
        check_hermitian(&values, HERM_TOL)?;
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: Arc<Grid>, k: impl Fn(&[f64], &[f64]) -> Complex64) -> Result<Self> {
        let n = grid.len();
        let mut m = CMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = k(grid.point(i), grid.point(j));
            }
        }
        Self::new(grid, m)
    }

    /// `K_ij = δ_ij / w_i`, the kernel of the identity operator.
    pub fn identity(grid: Arc<Grid>) -> Self {
        Self::multiplication(grid, |_| 1.0)
    }

    /// `K_ij = δ_ij V(x_i) / w_i`, the kernel of multiplication by `V`.
    pub fn multiplication(grid: Arc<Grid>, v: impl Fn(&[f64]) -> f64) -> Self {
        let diag: Vec<f64> = (0..grid.len()).map(|i| v(grid.point(i)) / grid.weights()[i]).collect();
        Self {
            values: CMatrix::from_real_diag(&diag),
            grid,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &CMatrix {
        &self.values
    }

    /// Generator of the same form on the embedded space: `W^½ K W^½`.
    pub fn embedded_generator(&self) -> HermitianOperator {
        HermitianOperator::new(self.grid.weigh(&self.values)).expect("weighing preserves hermiticity")
    }
}

/// `Σ_ij w_i w_j conj(φ_i) K_ij φ_j`, evaluated as a quadratic form on the
/// embedded field.
pub fn kernel_quadratic_form(k: &GridKernel, phi: &GridField) -> Result<f64> {
    same_grid(&k.grid, &phi.grid)?;
    quadratic_form(&QuadraticForm::new(k.embedded_generator()), &phi.embed())
}

/// Samples drawn on a grid. Stored in embedded coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct GridBatch {
    grid: Arc<Grid>,
    embedded: SampleBatch,
}

impl GridBatch {
    pub fn new(grid: Arc<Grid>, embedded: SampleBatch) -> Result<Self> {
        if embedded.dim() != grid.len() {
            return Err(PcsftError::Dimension {
                expected: grid.len(),
                found: embedded.dim(),
            });
        }
        Ok(Self { grid, embedded })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.embedded.len()
    }

    pub fn is_empty(&self) -> bool {
        self.embedded.is_empty()
    }

    pub fn embedded(&self) -> &SampleBatch {
        &self.embedded
    }

    pub fn field(&self, n: usize) -> GridField {
        GridField {
            grid: self.grid.clone(),
            values: self.grid.unembed(self.embedded.sample(n)),
        }
    }

    /// Grid header followed by the batch, with raw (unembedded) values.
    pub fn to_bytes(&self) -> Vec<u8> {
        let spec = self.grid.spec();
        let mut out = Vec::new();
        out.extend_from_slice(&GRID_MAGIC);
        out.extend_from_slice(&GRID_VERSION.to_le_bytes());
        out.extend_from_slice(&(spec.axes.len() as u32).to_le_bytes());
        let rule: u32 = match spec.quadrature {
            Quadrature::Trapezoid => 0,
            Quadrature::Midpoint => 1,
        };
        out.extend_from_slice(&rule.to_le_bytes());
        out.extend_from_slice(&u32::from(spec.weights.is_some()).to_le_bytes());
        for a in &spec.axes {
            out.extend_from_slice(&a.lo.to_le_bytes());
            out.extend_from_slice(&a.hi.to_le_bytes());
            out.extend_from_slice(&(a.points as u64).to_le_bytes());
        }
        if let Some(w) = &spec.weights {
            for x in w {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        let raw: Vec<Complex64> = self.embedded.iter().flat_map(|s| self.grid.unembed(s)).collect();
        let batch = SampleBatch::from_flat(self.grid.len(), raw, None).expect("non-empty finite batch");
        out.extend_from_slice(&batch.to_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        if r.take(8)? != GRID_MAGIC {
            return Err(PcsftError::Decode("bad grid magic".into()));
        }
        let version = r.u32()?;
        if version != GRID_VERSION {
            return Err(PcsftError::Decode(format!("unsupported grid version {version}")));
        }
        let n_axes = r.u32()? as usize;
        if n_axes == 0 || n_axes > MAX_AXES {
            return Err(PcsftError::Decode(format!("{n_axes} axes")));
        }
        let quadrature = match r.u32()? {
            0 => Quadrature::Trapezoid,
            1 => Quadrature::Midpoint,
            q => return Err(PcsftError::Decode(format!("unknown quadrature code {q}"))),
        };
        let has_weights = match r.u32()? {
            0 => false,
            1 => true,
            f => return Err(PcsftError::Decode(format!("bad weights flag {f}"))),
        };
        let mut axes = Vec::with_capacity(n_axes);
        for _ in 0..n_axes {
            let lo = r.f64()?;
            let hi = r.f64()?;
            let points = usize::try_from(r.u64()?).map_err(|_| PcsftError::Decode("point count overflow".into()))?;
            axes.push(Axis { lo, hi, points });
        }
        let total = axes
            .iter()
            .try_fold(1usize, |acc, a| acc.checked_mul(a.points))
            .filter(|&t| t.checked_mul(8).is_some_and(|b| b <= r.remaining()))
            .ok_or_else(|| PcsftError::Decode("point count exceeds input".into()))?;
        let weights = if has_weights {
            Some((0..total).map(|_| r.f64()).collect::<Result<Vec<_>>>()?)
        } else {
            None
        };
        let grid = Arc::new(Grid::new(GridSpec { axes, quadrature, weights })?);
        let rest = &bytes[r.pos..];
        let raw = SampleBatch::from_bytes(rest)?;
        if raw.dim() != grid.len() {
            return Err(PcsftError::Dimension {
                expected: grid.len(),
                found: raw.dim(),
            });
        }
        let embedded: Vec<Complex64> = raw.iter().flat_map(|s| grid.embed(s)).collect();
        Self::new(grid.clone(), SampleBatch::from_flat(grid.len(), embedded, None)?)
    }
}

pub const GRID_MAGIC: [u8; 8] = *b"PCSFTGRD";
pub const GRID_VERSION: u32 = 1;

/// Samples the zero-mean Gaussian random field with value covariance
/// `E[φ(x_i) conj(φ(x_j))] = C_ij`, via the Gaussian ensemble with covariance
/// `W^½ C W^½` on the embedded space.
pub fn grid_random_field(grid: Arc<Grid>, covariance: &CMatrix, n: usize, seed: u64) -> Result<GridBatch> {
    if covariance.dim() != grid.len() {
        return Err(PcsftError::Dimension {
            expected: grid.len(),
            found: covariance.dim(),
        });
    }
    let ensemble = FieldEnsemble::gaussian(grid.weigh(covariance))?;
    let batch = sample(&ensemble, n, seed)?;
    GridBatch::new(grid, batch)
}

/// Quadrature energies of `field_at` on successively refined grids and the
/// observed convergence order between consecutive levels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementTable {
    pub points: Vec<usize>,
    pub energies: Vec<f64>,
    pub errors: Vec<f64>,
    /// `log(e_k / e_{k+1}) / log(h_k / h_{k+1})` for each consecutive pair.
    pub orders: Vec<f64>,
}

impl RefinementTable {
    pub fn min_order(&self) -> f64 {
        self.orders.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn refinement_sweep(
    lo: f64,
    hi: f64,
    points: &[usize],
    quadrature: Quadrature,
    field_at: impl Fn(f64) -> Complex64,
    exact_energy: f64,
) -> Result<RefinementTable> {
    if points.len() < 2 {
        return Err(PcsftError::InvalidArgument("refinement needs at least 2 levels".into()));
    }
    let mut energies = Vec::with_capacity(points.len());
    let mut spacings = Vec::with_capacity(points.len());
    for &p in points {
        let grid = Arc::new(Grid::uniform_1d(lo, hi, p, quadrature)?);
        let phi = GridField::from_fn(grid, |x| field_at(x[0]))?;
        energies.push(grid_field_energy(&phi));
        let cells = match quadrature {
            Quadrature::Trapezoid => p - 1,
            Quadrature::Midpoint => p,
        };
        spacings.push((hi - lo) / cells as f64);
    }
    let errors: Vec<f64> = energies.iter().map(|e| (e - exact_energy).abs()).collect();
    let orders = (1..points.len())
        .map(|k| (errors[k - 1] / errors[k]).ln() / (spacings[k - 1] / spacings[k]).ln())
        .collect();
    Ok(RefinementTable {
        points: points.to_vec(),
        energies,
        errors,
        orders,
    })
}

/// `(1/π)^{n/4} exp(-|x|²/2)`, unit energy on `Rⁿ`.
pub fn gaussian_ground_state(x: &[f64]) -> Complex64 {
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    Complex64::new(std::f64::consts::PI.powf(-n / 4.0) * (-0.5 * r2).exp(), 0.0)
}

#[cfg(test)]
mod tests;

//! From a shrinking breather to a Type I ancient flow with a certified
//! uniform reduced-distance bound.
//!
//! Given g₀(τ) on [0,1] with α g₀(1) = φ*g₀(0), the pieces
//! g_i(τ) = α^{-i} (φ^i)* g₀(α^i(τ − τ_{i-1})) on [τ_{i-1}, τ_i] concatenate
//! into an ancient backward flow along the ladder τ_i = Σ_{j≤i} α^{-j}.
//! This module verifies the breather condition, the gluing, the Type I bound
//! τ|Rm| ≤ B = C·C₀, builds the concatenated comparison curves γ_i, and
//! certifies l(x_i, τ_i) ≤ C₂ uniformly in i.

use crate::error::{Error, Result};
use crate::geometry::{BackwardFlow, FlowModel, ModelGeometry};
use crate::lgeo::{l_functional, reduced_distance, LgeoOptions, SpacetimeCurve};
use crate::quad;
use crate::soliton::MetricSnapshot;

/// Descriptor of the breather diffeomorphism φ, acting on reduced coordinates.
#[derive(Debug, Clone)]
pub enum DiffeoDescriptor {
    Identity,
    /// φ(x) = fp + √α (x − fp) on flat space.
    FlatDilation { alpha: f64, fixed_point: Vec<f64> },
    /// Identity on the sphere factor, x ↦ √α x on the line.
    CylinderMap { alpha: f64 },
    /// Monotone radial map ψ sampled on a grid (warped products).
    GridMap { input: Vec<f64>, output: Vec<f64> },
}

impl DiffeoDescriptor {
    pub fn apply(&self, coords: &[f64]) -> Result<Vec<f64>> {
        match self {
            DiffeoDescriptor::Identity => Ok(coords.to_vec()),
            DiffeoDescriptor::FlatDilation { alpha, fixed_point } => Ok(coords
                .iter()
                .zip(fixed_point)
                .map(|(x, c)| c + alpha.sqrt() * (x - c))
                .collect()),
            DiffeoDescriptor::CylinderMap { alpha } => {
                Ok(vec![coords[0], alpha.sqrt() * coords[1]])
            }
            DiffeoDescriptor::GridMap { input, output } => {
                let r = coords[0];
                let mapped = interp_monotone(input, output, r)?;
                let mut out = coords.to_vec();
                out[0] = mapped;
                Ok(out)
            }
        }
    }

    pub fn apply_inverse(&self, coords: &[f64]) -> Result<Vec<f64>> {
        match self {
            DiffeoDescriptor::Identity => Ok(coords.to_vec()),
            DiffeoDescriptor::FlatDilation { alpha, fixed_point } => Ok(coords
                .iter()
                .zip(fixed_point)
                .map(|(x, c)| c + (x - c) / alpha.sqrt())
                .collect()),
            DiffeoDescriptor::CylinderMap { alpha } => {
                Ok(vec![coords[0], coords[1] / alpha.sqrt()])
            }
            DiffeoDescriptor::GridMap { input, output } => {
                let mapped = interp_monotone(output, input, coords[0])?;
                let mut out = coords.to_vec();
                out[0] = mapped;
                Ok(out)
            }
        }
    }

    /// Diagonal of dφ in the reduced coordinates at `coords`.
    fn jac_diag(&self, coords: &[f64]) -> Result<Vec<f64>> {
        match self {
            DiffeoDescriptor::Identity => Ok(vec![1.0; coords.len()]),
            DiffeoDescriptor::FlatDilation { alpha, .. } => {
                Ok(vec![alpha.sqrt(); coords.len()])
            }
            DiffeoDescriptor::CylinderMap { alpha } => Ok(vec![1.0, alpha.sqrt()]),
            DiffeoDescriptor::GridMap { input, output } => {
                let r = coords[0];
                let h = 1e-6 * (input[input.len() - 1] - input[0]);
                let d = (interp_monotone(input, output, r + h)?
                    - interp_monotone(input, output, r - h)?)
                    / (2.0 * h);
                let mut out = vec![1.0; coords.len()];
                out[0] = d;
                Ok(out)
            }
        }
    }

    pub fn apply_iter(&self, coords: &[f64], k: usize) -> Result<Vec<f64>> {
        let mut x = coords.to_vec();
        for _ in 0..k {
            x = self.apply(&x)?;
        }
        Ok(x)
    }

    pub fn apply_inverse_iter(&self, coords: &[f64], k: usize) -> Result<Vec<f64>> {
        let mut x = coords.to_vec();
        for _ in 0..k {
            x = self.apply_inverse(&x)?;
        }
        Ok(x)
    }
}

fn interp_monotone(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    if x < xs[0] - 1e-12 || x > xs[xs.len() - 1] + 1e-12 {
        return Err(Error::PullbackUndefined(format!("coordinate {} leaves the grid", x)));
    }
    let k = xs.partition_point(|v| *v <= x).clamp(1, xs.len() - 1) - 1;
    let t = ((x - xs[k]) / (xs[k + 1] - xs[k])).clamp(0.0, 1.0);
    Ok(ys[k] * (1.0 - t) + ys[k + 1] * t)
}

/// ((φ^k)* g₀(τ')) at `coords`: chain the diagonal Jacobian factors along
/// the orbit and evaluate g₀ at the mapped point.
fn pullback_metric_k(
    g0: &BackwardFlow,
    phi: &DiffeoDescriptor,
    k: usize,
    coords: &[f64],
    tau: f64,
) -> Result<Vec<f64>> {
    let mut x = coords.to_vec();
    let mut fac = vec![1.0; coords.len()];
    for _ in 0..k {
        let j = phi.jac_diag(&x)?;
        for (f, jj) in fac.iter_mut().zip(&j) {
            *f *= jj * jj;
        }
        x = phi.apply(&x)?;
    }
    let g = g0.metric_diag(&x, tau);
    Ok(g.iter().zip(&fac).map(|(gv, fv)| gv * fv).collect())
}

/// A shrinking breather: g₀ on [0,1], α ∈ (0,1), φ, and the curvature
/// bound C for sup_{M×[0,1]} |Rm|.
#[derive(Debug, Clone)]
pub struct BreatherSpec {
    pub g0: BackwardFlow,
    pub alpha: f64,
    pub phi: DiffeoDescriptor,
    pub curvature_bound: f64,
}

/// Measured sup of |Rm| over sampled M×[0,1], inflated by 5%.
pub fn measured_curvature_bound(flow: &BackwardFlow) -> f64 {
    let sup = (0..=20)
        .map(|k| flow.riemann_sup(k as f64 / 20.0))
        .fold(0.0, f64::max);
    1.05 * sup
}

impl BreatherSpec {
    pub fn new(g0: BackwardFlow, alpha: f64, phi: DiffeoDescriptor) -> Result<Self> {
        if !(0.0..1.0).contains(&alpha) || alpha <= 0.0 {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        if (g0.tau_end - 1.0).abs() > 1e-12 {
            return Err(Error::Config("breather flow must live on [0,1]".into()));
        }
        let curvature_bound = measured_curvature_bound(&g0);
        Ok(BreatherSpec {
            g0,
            alpha,
            phi,
            curvature_bound,
        })
    }

    /// ‖α g₀(1) − φ*g₀(0)‖ at one sample point (max over coefficients).
    pub fn breather_residual_at(&self, coords: &[f64]) -> Result<f64> {
        let g1 = self.g0.metric_diag(coords, 1.0);
        let pulled = pullback_metric_k(&self.g0, &self.phi, 1, coords, 0.0)?;
        Ok(g1
            .iter()
            .zip(&pulled)
            .map(|(a, b)| (self.alpha * a - b).abs())
            .fold(0.0, f64::max))
    }

    /// Default sample points for sup-norm checks on this geometry.
    pub fn default_samples(&self) -> Vec<Vec<f64>> {
        match &self.g0.geometry {
            ModelGeometry::EuclideanSpace { n } => {
                [[0.0, 0.7, -1.3], [2.0, 0.1, 0.4], [5.0, -3.0, 1.0]]
                    .iter()
                    .map(|p| p[..*n.min(&3)].to_vec())
                    .collect()
            }
            ModelGeometry::RoundSphere { .. } => {
                vec![vec![0.3], vec![1.0], vec![2.0], vec![2.9]]
            }
            ModelGeometry::RoundCylinder { .. } => vec![
                vec![0.5, -2.0],
                vec![1.5, 0.0],
                vec![0.9, 3.0],
                vec![2.2, -0.7],
            ],
            ModelGeometry::WarpedProduct { grid, .. } => {
                let m = grid.len();
                (1..5).map(|k| vec![grid[k * m / 5], 1.0]).collect()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BreatherReport {
    pub max_residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// True when the supplied curvature bound dominates the sampled sup |Rm|.
    pub curvature_bound_ok: bool,
}

/// Evaluate the breather condition α g₀(1) = φ*g₀(0) at the samples.
pub fn verify_breather(
    spec: &BreatherSpec,
    samples: &[Vec<f64>],
    tolerance: f64,
) -> Result<BreatherReport> {
    let mut max_res: f64 = 0.0;
    for p in samples {
        max_res = max_res.max(spec.breather_residual_at(p)?);
    }
    let curvature_bound_ok = (0..=10)
        .map(|k| spec.g0.riemann_sup(k as f64 / 10.0))
        .all(|s| spec.curvature_bound >= s);
    Ok(BreatherReport {
        max_residual: max_res,
        tolerance,
        pass: max_res <= tolerance && curvature_bound_ok,
        curvature_bound_ok,
    })
}

/// The ladder τ_i = Σ_{j=0}^i α^{-j} with C₀ = (1−α)^{-1}.
#[derive(Debug, Clone)]
pub struct TauLadder {
    pub alpha: f64,
    pub c0: f64,
    pub taus: Vec<f64>,
}

pub fn build_ladder(alpha: f64, i_max: usize) -> Result<TauLadder> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let c0 = 1.0 / (1.0 - alpha);
    let mut taus = Vec::with_capacity(i_max + 1);
    let mut acc = 0.0;
    for i in 0..=i_max {
        acc += alpha.powi(-(i as i32));
        taus.push(acc);
    }
    // α^{-i} ≤ τ_i ≤ C₀ α^{-i}, verified to 1e-12 relative.
    for (i, tau) in taus.iter().enumerate() {
        let lo = alpha.powi(-(i as i32));
        let hi = c0 * lo;
        if *tau < lo * (1.0 - 1e-12) || *tau > hi * (1.0 + 1e-12) {
            return Err(Error::Config(format!(
                "ladder bound violated at i={}: {} not in [{}, {}]",
                i, tau, lo, hi
            )));
        }
    }
    Ok(TauLadder { alpha, c0, taus })
}

#[derive(Debug, Clone)]
pub struct GluingReport {
    pub max_value_residual: f64,
    pub max_deriv_residual: f64,
    pub worst_junction: f64,
}

/// The concatenated ancient flow (9) with its ladder and Type I constant
/// B = C·C₀.
#[derive(Debug, Clone)]
pub struct AncientFlow {
    pub spec: BreatherSpec,
    pub ladder: TauLadder,
    pub b_const: f64,
    pub gluing: GluingReport,
}

impl AncientFlow {
    /// Piece index: 0 for τ ∈ [0, τ₀], i for τ ∈ [τ_{i-1}, τ_i].
    pub fn piece_index(&self, tau: f64) -> usize {
        if tau <= self.ladder.taus[0] {
            return 0;
        }
        let mut i = 1;
        while i < self.ladder.taus.len() && tau > self.ladder.taus[i] + 1e-12 {
            i += 1;
        }
        i.min(self.ladder.taus.len() - 1)
    }

    /// Map (piece i, τ) to the base-flow time α^i (τ − τ_{i-1}).
    fn piece_time(&self, i: usize, tau: f64) -> f64 {
        if i == 0 {
            tau
        } else {
            (self.spec.alpha.powi(i as i32) * (tau - self.ladder.taus[i - 1])).clamp(0.0, 1.0)
        }
    }

    /// g_i(τ) at coords, for an explicit piece (junctions are evaluated from
    /// both sides by the gluing check).
    pub fn piece_metric(&self, i: usize, coords: &[f64], tau: f64) -> Result<Vec<f64>> {
        let tp = self.piece_time(i, tau);
        let scale = self.spec.alpha.powi(-(i as i32));
        let pulled = pullback_metric_k(&self.spec.g0, &self.spec.phi, i, coords, tp)?;
        Ok(pulled.iter().map(|g| scale * g).collect())
    }

    /// Snapshot of τ_s^{-1} g(τ·τ_s) at rescaled time τ=1 as a model metric.
    /// For flat geometry the constant conformal factor is absorbed by the
    /// coordinate dilation (an isometry onto the standard flat metric).
    pub fn rescaled_snapshot_at_one(&self, i: usize) -> MetricSnapshot {
        let tau_i = self.ladder.taus[i];
        let scale = 1.0 / tau_i;
        match &self.spec.g0.geometry {
            ModelGeometry::EuclideanSpace { n } => MetricSnapshot::Flat { n: *n },
            ModelGeometry::RoundSphere { n, .. } => {
                let g = self.metric_diag(&[0.5], tau_i);
                MetricSnapshot::Sphere { n: *n, rsq: scale * g[0] }
            }
            ModelGeometry::RoundCylinder { n, .. } => {
                let g = self.metric_diag(&[0.5, 0.0], tau_i);
                MetricSnapshot::Cylinder {
                    n: *n,
                    rsq: scale * g[0],
                    axial_coeff: scale * g[1],
                }
            }
            ModelGeometry::WarpedProduct { n, grid, .. } => {
                let mut g_rr = Vec::with_capacity(grid.len());
                let mut g_sph = Vec::with_capacity(grid.len());
                for r in grid {
                    let g = self.metric_diag(&[*r, 1.0], tau_i);
                    g_rr.push(scale * g[0]);
                    g_sph.push(scale * g[1]);
                }
                MetricSnapshot::Warped {
                    n: *n,
                    grid: grid.clone(),
                    g_rr,
                    g_sph,
                }
            }
        }
    }
}

impl FlowModel for AncientFlow {
    fn dim(&self) -> usize {
        self.spec.g0.dim()
    }

    fn coord_dim(&self) -> usize {
        self.spec.g0.coord_dim()
    }

    fn tau_max(&self) -> f64 {
        self.ladder.taus[self.ladder.taus.len() - 1]
    }

    fn metric_diag(&self, coords: &[f64], tau: f64) -> Vec<f64> {
        let i = self.piece_index(tau);
        self.piece_metric(i, coords, tau)
            .unwrap_or_else(|_| vec![f64::NAN; coords.len()])
    }

    fn scalar_curvature(&self, coords: &[f64], tau: f64) -> f64 {
        let i = self.piece_index(tau);
        let tp = self.piece_time(i, tau);
        let mapped = match self.spec.phi.apply_iter(coords, i) {
            Ok(m) => m,
            Err(_) => return f64::NAN,
        };
        self.spec.alpha.powi(i as i32) * self.spec.g0.scalar_curvature(&mapped, tp)
    }

    fn riemann_sup(&self, tau: f64) -> f64 {
        let i = self.piece_index(tau);
        let tp = self.piece_time(i, tau);
        self.spec.alpha.powi(i as i32) * self.spec.g0.riemann_sup(tp)
    }

    fn sym_jacobian(&self, coords: &[f64], tau: f64) -> f64 {
        let i = self.piece_index(tau);
        self.spec.g0.sym_jacobian(coords, self.piece_time(i, tau))
    }
}

#[derive(Debug, Clone)]
pub struct GluingTolerances {
    pub value: f64,
    pub derivative: f64,
}

impl Default for GluingTolerances {
    fn default() -> Self {
        GluingTolerances {
            value: 1e-8,
            derivative: 1e-6,
        }
    }
}

/// Build the concatenation (pieces + ladder), checking value and
/// τ-derivative matching at every junction.
pub fn build_ancient_flow(
    spec: &BreatherSpec,
    i_max: usize,
    breather_tolerance: f64,
    glue: &GluingTolerances,
) -> Result<AncientFlow> {
    let report = verify_breather(spec, &spec.default_samples(), breather_tolerance)?;
    if !report.pass {
        return Err(Error::Config(format!(
            "breather condition fails: residual {:e} > {:e}",
            report.max_residual, report.tolerance
        )));
    }
    let ladder = build_ladder(spec.alpha, i_max)?;
    let flow = AncientFlow {
        spec: spec.clone(),
        ladder,
        b_const: spec.curvature_bound / (1.0 - spec.alpha),
        gluing: GluingReport {
            max_value_residual: 0.0,
            max_deriv_residual: 0.0,
            worst_junction: 0.0,
        },
    };
    let mut max_val: f64 = 0.0;
    let mut max_der: f64 = 0.0;
    let mut worst = 0.0;
    let samples = spec.default_samples();
    for i in 1..=i_max {
        let tj = flow.ladder.taus[i - 1];
        // FD step scaled with τ so cancellation noise stays below tolerance
        // even when the metric coefficients grow like α^{-i}.
        let h = 1e-5 * tj.max(1.0);
        for p in &samples {
            let left = flow.piece_metric(i - 1, p, tj)?;
            let right = flow.piece_metric(i, p, tj)?;
            let val_res = left
                .iter()
                .zip(&right)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            // One-sided second-order derivatives from each side.
            let lm1 = flow.piece_metric(i - 1, p, tj - h)?;
            let lm2 = flow.piece_metric(i - 1, p, tj - 2.0 * h)?;
            let rp1 = flow.piece_metric(i, p, tj + h)?;
            let rp2 = flow.piece_metric(i, p, tj + 2.0 * h)?;
            let der_res = (0..left.len())
                .map(|k| {
                    let dl = (3.0 * left[k] - 4.0 * lm1[k] + lm2[k]) / (2.0 * h);
                    let dr = (-3.0 * right[k] + 4.0 * rp1[k] - rp2[k]) / (2.0 * h);
                    (dl - dr).abs()
                })
                .fold(0.0, f64::max);
            if val_res > max_val {
                max_val = val_res;
                worst = tj;
            }
            max_der = max_der.max(der_res);
        }
    }
    if max_val > glue.value || max_der > glue.derivative {
        return Err(Error::GluingFailure {
            tau: worst,
            residual: max_val.max(max_der),
        });
    }
    Ok(AncientFlow {
        gluing: GluingReport {
            max_value_residual: max_val,
            max_deriv_residual: max_der,
            worst_junction: worst,
        },
        ..flow
    })
}

#[derive(Debug, Clone)]
pub struct TypeOneRow {
    pub tau: f64,
    pub tau_rm: f64,
    /// The per-piece intermediate bound C α^i.
    pub piece_bound: f64,
}

#[derive(Debug, Clone)]
pub struct TypeOneReport {
    pub b: f64,
    pub rows: Vec<TypeOneRow>,
    pub pass: bool,
}

/// Verify τ·|Rm(g(τ))| ≤ B at the samples, reporting the chain through the
/// per-piece bound C α^i.
pub fn type_one_certificate(flow: &AncientFlow, tau_samples: &[f64]) -> TypeOneReport {
    let c = flow.spec.curvature_bound;
    let mut rows = Vec::with_capacity(tau_samples.len());
    let mut pass = true;
    for &tau in tau_samples {
        let i = flow.piece_index(tau);
        let rm = flow.riemann_sup(tau);
        let row = TypeOneRow {
            tau,
            tau_rm: tau * rm,
            piece_bound: c * flow.spec.alpha.powi(i as i32),
        };
        if row.tau_rm > flow.b_const + 1e-12 {
            pass = false;
        }
        rows.push(row);
    }
    TypeOneReport {
        b: flow.b_const,
        rows,
        pass,
    }
}

/// x_i = φ^{-(i+1)}(y) for i = 0..=i_max.
pub fn base_point_sequence(
    spec: &BreatherSpec,
    y: &[f64],
    i_max: usize,
) -> Result<Vec<Vec<f64>>> {
    (0..=i_max)
        .map(|i| spec.phi.apply_inverse_iter(y, i + 1))
        .collect()
}

/// σ interpolated at backward time τ from its √τ-sampled polyline.
fn sigma_at(sigma: &SpacetimeCurve, tau: f64) -> Vec<f64> {
    let s = tau.max(0.0).sqrt();
    let samples = &sigma.samples;
    if s <= samples[0].0 {
        return samples[0].1.clone();
    }
    let last = samples.len() - 1;
    if s >= samples[last].0 {
        return samples[last].1.clone();
    }
    let k = samples.partition_point(|(sk, _)| *sk <= s).clamp(1, last) - 1;
    let t = (s - samples[k].0) / (samples[k + 1].0 - samples[k].0);
    samples[k]
        .1
        .iter()
        .zip(&samples[k + 1].1)
        .map(|(a, b)| a + t * (b - a))
        .collect()
}

/// Default comparison curve: linear in τ from y to x₀ = φ^{-1}(y), so its
/// τ-velocity is bounded down to τ = 0.
pub fn default_sigma(spec: &BreatherSpec, y: &[f64], segments: usize) -> Result<SpacetimeCurve> {
    let x0 = spec.phi.apply_inverse(y)?;
    let samples = (0..=segments)
        .map(|k| {
            let s = k as f64 / segments as f64;
            let t = s * s;
            (
                s,
                y.iter().zip(&x0).map(|(a, b)| a + t * (b - a)).collect(),
            )
        })
        .collect();
    Ok(SpacetimeCurve { samples })
}

/// One concatenated comparison curve γ_i, stored per piece as τ-samples.
#[derive(Debug, Clone)]
pub struct ComparisonCurve {
    pub index: usize,
    /// pieces[j] covers [τ_j, τ_{j+1}]; piece j holds σ_j samples (τ, coords).
    pub pieces: Vec<Vec<(f64, Vec<f64>)>>,
}

/// σ_j(τ) = φ^{-(j+1)} ∘ σ(α^{j+1}(τ − τ_j)) on [τ_j, τ_{j+1}], concatenated
/// into γ_i, with the junction identities checked exactly in coordinates.
pub fn build_comparison_curves(
    spec: &BreatherSpec,
    ladder: &TauLadder,
    sigma: &SpacetimeCurve,
    i_max: usize,
    samples_per_piece: usize,
) -> Result<Vec<ComparisonCurve>> {
    let y = sigma.base().to_vec();
    let x0 = spec.phi.apply_inverse(&y)?;
    let end = sigma.target();
    if end.iter().zip(&x0).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::EndpointMismatch(0));
    }
    let sigma_j_at = |j: usize, tau: f64| -> Result<Vec<f64>> {
        let inner = spec.alpha.powi(j as i32 + 1) * (tau - ladder.taus[j]);
        spec.phi.apply_inverse_iter(&sigma_at(sigma, inner), j + 1)
    };
    // Junction identities: σ₀(τ₀) = σ(1) and σ_j(τ_j) = σ_{j-1}(τ_j).
    for j in 0..i_max {
        let here = sigma_j_at(j, ladder.taus[j])?;
        let prev = if j == 0 {
            sigma_at(sigma, 1.0)
        } else {
            sigma_j_at(j - 1, ladder.taus[j])?
        };
        if here.iter().zip(&prev).any(|(a, b)| (a - b).abs() > 1e-12) {
            return Err(Error::EndpointMismatch(j));
        }
    }
    let mut curves = Vec::with_capacity(i_max);
    let mut pieces: Vec<Vec<(f64, Vec<f64>)>> = Vec::new();
    for i in 0..i_max {
        let (lo, hi) = (ladder.taus[i], ladder.taus[i + 1]);
        let piece: Vec<(f64, Vec<f64>)> = (0..=samples_per_piece)
            .map(|k| {
                let tau = lo + (hi - lo) * k as f64 / samples_per_piece as f64;
                sigma_j_at(i, tau).map(|c| (tau, c))
            })
            .collect::<Result<_>>()?;
        pieces.push(piece);
        curves.push(ComparisonCurve {
            index: i,
            pieces: pieces.clone(),
        });
    }
    Ok(curves)
}

#[derive(Debug, Clone)]
pub struct CertRow {
    pub i: usize,
    pub tau_next: f64,
    pub l_gamma: f64,
    /// Analytic upper bound ½D α^{(i+1)/2} + ½C₁ Σ α^{j/2}.
    pub l_upper: f64,
    /// L(γ_i)/(2√τ_{i+1}), the quadrature version of the same bound.
    pub l_quad: f64,
    pub l_num: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct LBoundCertificate {
    pub sigma: SpacetimeCurve,
    /// Bound on |σ̇|²_{g₀(τ)} (squared velocity; see the A-convention note).
    pub a_bound: f64,
    /// D = L(σ).
    pub d_value: f64,
    pub c1: f64,
    pub c2: f64,
    pub per_i: Vec<CertRow>,
    pub pass: bool,
}

impl LBoundCertificate {
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "# lgeom certificate v1")?;
        writeln!(out, "i,tau_i,L_gamma_i,l_upper,l_num,C2")?;
        for row in &self.per_i {
            let lnum = row
                .l_num
                .map(|v| crate::csvio::sig12(v))
                .unwrap_or_else(|| "".into());
            writeln!(
                out,
                "{},{},{},{},{},{}",
                row.i,
                crate::csvio::sig12(row.tau_next),
                crate::csvio::sig12(row.l_gamma),
                crate::csvio::sig12(row.l_upper),
                lnum,
                crate::csvio::sig12(self.c2)
            )?;
        }
        Ok(())
    }
}

/// The uniform reduced-distance bound: computes A, D = L(σ), the per-piece
/// quadrature of √τ (R + |σ̇_j|²), C₁ = (2B + A)√C₀, the analytic chain
/// l_upper ≤ C₂ = D/2 + C₁/(2(1−√α)), and optionally the numeric
/// l(x_{i+1}, τ_{i+1}) by direct minimization on the ancient flow.
pub fn l_bound_certificate(
    spec: &BreatherSpec,
    flow: &AncientFlow,
    y: &[f64],
    sigma: &SpacetimeCurve,
    i_max: usize,
    compute_l_num: bool,
    lgeo_opts: &LgeoOptions,
) -> Result<LBoundCertificate> {
    let ladder = &flow.ladder;
    let alpha = spec.alpha;
    // A = sup sampled |σ̇|²_{g₀(τ)}.
    let mut a_bound: f64 = 0.0;
    let fd = 1e-6;
    for k in 1..200 {
        let tau = k as f64 / 200.0;
        let cp = sigma_at(sigma, tau + fd);
        let cm = sigma_at(sigma, tau - fd);
        let c = sigma_at(sigma, tau);
        let g = spec.g0.metric_diag(&c, tau);
        let v2: f64 = g
            .iter()
            .zip(cp.iter().zip(&cm))
            .map(|(gk, (a, b))| gk * ((a - b) / (2.0 * fd)).powi(2))
            .sum();
        a_bound = a_bound.max(v2);
    }
    let d_value = l_functional(&spec.g0, sigma)?;
    let b = flow.b_const;
    let c1 = (2.0 * b + a_bound) * ladder.c0.sqrt();
    let c2 = 0.5 * d_value + 0.5 * c1 / (1.0 - alpha.sqrt());
    let x_pts = base_point_sequence(spec, y, i_max)?;
    let sigma_j_at = |j: usize, tau: f64| -> Result<Vec<f64>> {
        let inner = alpha.powi(j as i32 + 1) * (tau - ladder.taus[j]);
        spec.phi.apply_inverse_iter(&sigma_at(sigma, inner), j + 1)
    };
    // ∫_{τ_j}^{τ_{j+1}} √τ (R + |σ̇_j|²) dτ per piece.
    let piece_integral = |j: usize| -> Result<f64> {
        let (lo, hi) = (ladder.taus[j], ladder.taus[j + 1]);
        let delta = 1e-7 * (hi - lo);
        let nodes = quad::gauss_legendre_nodes(48);
        let mut acc = 0.0;
        for (xn, wn) in nodes {
            let tau = 0.5 * (lo + hi) + 0.5 * (hi - lo) * xn;
            let c = sigma_j_at(j, tau)?;
            let cp = sigma_j_at(j, (tau + delta).min(hi))?;
            let cm = sigma_j_at(j, (tau - delta).max(lo))?;
            let dt = (tau + delta).min(hi) - (tau - delta).max(lo);
            let g = flow.metric_diag(&c, tau);
            let v2: f64 = g
                .iter()
                .zip(cp.iter().zip(&cm))
                .map(|(gk, (a, bb))| gk * ((a - bb) / dt).powi(2))
                .sum();
            let r = flow.scalar_curvature(&c, tau);
            acc += wn * 0.5 * (hi - lo) * tau.sqrt() * (r + v2);
        }
        Ok(acc)
    };
    let mut per_i = Vec::with_capacity(i_max);
    let mut l_gamma = d_value;
    let mut geo_sum = 0.0;
    let mut pass = true;
    for i in 0..i_max {
        l_gamma += piece_integral(i)?;
        geo_sum += alpha.powf(i as f64 / 2.0);
        let tau_next = ladder.taus[i + 1];
        let l_upper = 0.5 * d_value * alpha.powf((i as f64 + 1.0) / 2.0) + 0.5 * c1 * geo_sum;
        let l_quad = l_gamma / (2.0 * tau_next.sqrt());
        let l_num = if compute_l_num {
            let rd = reduced_distance(flow, y, &x_pts[i + 1], tau_next, lgeo_opts)?;
            Some(rd.value)
        } else {
            None
        };
        if l_upper > c2 + 1e-12 {
            pass = false;
        }
        if let Some(ln) = l_num {
            if ln > l_upper + lgeo_opts.opt_tolerance.max(1e-3) {
                pass = false;
            }
        }
        per_i.push(CertRow {
            i,
            tau_next,
            l_gamma,
            l_upper,
            l_quad,
            l_num,
        });
    }
    Ok(LBoundCertificate {
        sigma: sigma.clone(),
        a_bound,
        d_value,
        c1,
        c2,
        per_i,
        pass,
    })
}

/// One entry of the blow-down sequence (M, τ_i^{-1} g(τ·τ_i), (x_i, 1)).
#[derive(Debug, Clone)]
pub struct RescaledSnapshot {
    pub index: usize,
    pub scale: f64,
    pub base_point: Vec<f64>,
    pub snapshot: MetricSnapshot,
    /// τ_i^{-1} α^{-(i+1)} stays within [α^{-1}/C₀, α^{-1}].
    pub scale_factor: f64,
    pub scale_ok: bool,
}

/// Rescaled metric coefficients at rescaled time τ ∈ [1, α^{-1}].
pub fn rescaled_metric_diag(
    flow: &AncientFlow,
    index: usize,
    coords: &[f64],
    tau: f64,
) -> Vec<f64> {
    let tau_i = flow.ladder.taus[index];
    flow.metric_diag(coords, tau * tau_i)
        .iter()
        .map(|g| g / tau_i)
        .collect()
}

pub fn rescaled_sequence(
    flow: &AncientFlow,
    x_pts: &[Vec<f64>],
    i_range: std::ops::RangeInclusive<usize>,
) -> Result<Vec<RescaledSnapshot>> {
    let alpha = flow.spec.alpha;
    let mut out = Vec::new();
    for i in i_range {
        if i >= flow.ladder.taus.len() {
            return Err(Error::OutOfDomain(format!("index {} beyond the ladder", i)));
        }
        let tau_i = flow.ladder.taus[i];
        let factor = alpha.powi(-(i as i32 + 1)) / tau_i;
        let lo = 1.0 / (alpha * flow.ladder.c0);
        let hi = 1.0 / alpha;
        out.push(RescaledSnapshot {
            index: i,
            scale: 1.0 / tau_i,
            base_point: x_pts.get(i).cloned().unwrap_or_default(),
            snapshot: flow.rescaled_snapshot_at_one(i),
            scale_factor: factor,
            scale_ok: factor >= lo * (1.0 - 1e-12) && factor <= hi * (1.0 + 1e-12),
        });
    }
    Ok(out)
}

/// The three stock breathers used throughout the tests and the CLI.
pub fn flat_breather(n: usize, alpha: f64) -> Result<BreatherSpec> {
    let g0 = BackwardFlow::closed_form(ModelGeometry::EuclideanSpace { n }, 1.0)?;
    BreatherSpec::new(
        g0,
        alpha,
        DiffeoDescriptor::FlatDilation {
            alpha,
            fixed_point: vec![0.0; n],
        },
    )
}

/// α = r0²/(r0² + 2(n−2)) makes the round cylinder a shrinking breather.
pub fn cylinder_breather(n: usize, r0: f64) -> Result<BreatherSpec> {
    let alpha = r0 * r0 / (r0 * r0 + 2.0 * (n as f64 - 2.0));
    let g0 = BackwardFlow::closed_form(ModelGeometry::RoundCylinder { n, r0 }, 1.0)?;
    BreatherSpec::new(g0, alpha, DiffeoDescriptor::CylinderMap { alpha })
}

/// α = r0²/(r0² + 2(n−1)) with φ = id for the round sphere.
pub fn sphere_breather(n: usize, r0: f64) -> Result<BreatherSpec> {
    let alpha = r0 * r0 / (r0 * r0 + 2.0 * (n as f64 - 1.0));
    let g0 = BackwardFlow::closed_form(ModelGeometry::RoundSphere { n, r0 }, 1.0)?;
    BreatherSpec::new(g0, alpha, DiffeoDescriptor::Identity)
}

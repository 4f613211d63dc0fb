//! Model geometries and their backward Ricci flows ∂g/∂τ = 2 Ric.
//!
//! Four symmetric families are supported: flat space, round spheres,
//! round cylinders S^{n-1}×ℝ, and rotationally symmetric warped products
//! dr² + w(r)² g_{S^{n-1}}. The homogeneous families evolve by closed-form
//! scale laws; warped products are integrated numerically on a radial grid.
//!
//! Reduced coordinates per family (everything downstream works on these):
//!   - flat:      full Cartesian (x_1..x_n)
//!   - sphere:    polar angle θ along a great circle through the base point
//!   - cylinder:  (θ, x) with θ a great-circle angle on the sphere factor
//!                and x the axial coordinate
//!   - warped:    (r, θ) with θ a great-circle angle on the fiber

use crate::error::{Error, Result};
use std::io::Write;

/// Area of the unit sphere S^{m} (m = dimension of the sphere itself).
pub fn unit_sphere_area(m: usize) -> f64 {
    // ω_0 = 2, ω_1 = 2π, ω_m = (2π/(m-1)) ω_{m-2}.
    match m {
        0 => 2.0,
        1 => 2.0 * std::f64::consts::PI,
        _ => 2.0 * std::f64::consts::PI / (m as f64 - 1.0) * unit_sphere_area(m - 2),
    }
}

/// Volume of the unit ball in ℝⁿ.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n - 1) / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelGeometry {
    EuclideanSpace { n: usize },
    RoundSphere { n: usize, r0: f64 },
    RoundCylinder { n: usize, r0: f64 },
    WarpedProduct { n: usize, grid: Vec<f64>, warp: Vec<f64> },
}

impl ModelGeometry {
    pub fn validate(&self) -> Result<()> {
        match self {
            ModelGeometry::EuclideanSpace { n } => {
                if *n < 2 {
                    return Err(Error::Config("flat space needs n >= 2".into()));
                }
            }
            ModelGeometry::RoundSphere { n, r0 } => {
                if *n < 2 || *r0 <= 0.0 {
                    return Err(Error::Config("sphere needs n >= 2, r0 > 0".into()));
                }
            }
            ModelGeometry::RoundCylinder { n, r0 } => {
                if *n < 3 || *r0 <= 0.0 {
                    return Err(Error::Config("cylinder needs n >= 3, r0 > 0".into()));
                }
            }
            ModelGeometry::WarpedProduct { n, grid, warp } => {
                if *n < 3 {
                    return Err(Error::Config("warped product needs n >= 3".into()));
                }
                if grid.len() < 5 || grid.len() != warp.len() {
                    return Err(Error::GridTooCoarse(format!(
                        "warped grid has {} nodes, warp has {}",
                        grid.len(),
                        warp.len()
                    )));
                }
                if grid.windows(2).any(|p| p[1] <= p[0]) {
                    return Err(Error::Config("warped grid must be strictly increasing".into()));
                }
                if warp.iter().any(|w| *w <= 0.0) {
                    return Err(Error::Config("warp values must be positive".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelGeometry::EuclideanSpace { n }
            | ModelGeometry::RoundSphere { n, .. }
            | ModelGeometry::RoundCylinder { n, .. }
            | ModelGeometry::WarpedProduct { n, .. } => *n,
        }
    }

    pub fn coord_dim(&self) -> usize {
        match self {
            ModelGeometry::EuclideanSpace { n } => *n,
            ModelGeometry::RoundSphere { .. } => 1,
            ModelGeometry::RoundCylinder { .. } | ModelGeometry::WarpedProduct { .. } => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpacetimePoint {
    pub coords: Vec<f64>,
    pub tau: f64,
}

impl SpacetimePoint {
    pub fn new(coords: Vec<f64>, tau: f64) -> Self {
        SpacetimePoint { coords, tau }
    }
}

/// Ricci curvature at a point, reported both as diagonal coordinate
/// components (with respect to the reduced coordinates) and as eigenvalues
/// of Ric·g⁻¹, i.e. relative to the metric.
#[derive(Debug, Clone)]
pub struct RicciForm {
    pub coord_diag: Vec<f64>,
    pub rel_eigs: Vec<f64>,
}

/// Time-stepped warp-product profiles: diagonal coefficients g_rr and
/// g_sph = w² per stored τ and grid node.
#[derive(Debug, Clone)]
pub struct NumericFlowData {
    pub taus: Vec<f64>,
    pub g_rr: Vec<Vec<f64>>,
    pub g_sph: Vec<Vec<f64>>,
    pub max_flow_residual: f64,
}

#[derive(Debug, Clone)]
pub enum Evolution {
    ClosedForm,
    NumericGrid(NumericFlowData),
}

#[derive(Debug, Clone)]
pub struct BackwardFlow {
    pub geometry: ModelGeometry,
    pub tau_end: f64,
    pub evolution: Evolution,
}

/// The interface every flow (model flows and the concatenated ancient flow)
/// exposes to the L-geometry machinery.
pub trait FlowModel {
    /// Manifold dimension n.
    fn dim(&self) -> usize;
    /// Number of reduced coordinates.
    fn coord_dim(&self) -> usize;
    /// Upper end of the backward-time domain.
    fn tau_max(&self) -> f64;
    /// Diagonal metric coefficients in the reduced coordinates.
    fn metric_diag(&self, coords: &[f64], tau: f64) -> Vec<f64>;
    /// Scalar curvature R at (coords, τ).
    fn scalar_curvature(&self, coords: &[f64], tau: f64) -> f64;
    /// sup_M |Rm|(g(τ)), with |Rm| the maximal sectional-curvature magnitude.
    fn riemann_sup(&self, tau: f64) -> f64;
    /// Symmetric volume Jacobian in reduced coordinates, up to a constant
    /// factor (used only for Laplace-Beltrami stencils where constants cancel).
    fn sym_jacobian(&self, coords: &[f64], tau: f64) -> f64;
}

/// Sphere-factor radius² laws; the only time dependence in the closed forms.
pub fn sphere_rsq(n: usize, r0: f64, tau: f64) -> f64 {
    r0 * r0 + 2.0 * (n as f64 - 1.0) * tau
}

pub fn cylinder_rsq(n: usize, r0: f64, tau: f64) -> f64 {
    r0 * r0 + 2.0 * (n as f64 - 2.0) * tau
}

impl BackwardFlow {
    /// Closed-form flow for the homogeneous families.
    pub fn closed_form(geometry: ModelGeometry, tau_end: f64) -> Result<Self> {
        geometry.validate()?;
        if tau_end <= 0.0 {
            return Err(Error::Config("tau_end must be positive".into()));
        }
        if matches!(geometry, ModelGeometry::WarpedProduct { .. }) {
            return Err(Error::Unsupported(
                "warped products evolve numerically; use evolve()".into(),
            ));
        }
        Ok(BackwardFlow {
            geometry,
            tau_end,
            evolution: Evolution::ClosedForm,
        })
    }

    pub fn check_tau(&self, tau: f64) -> Result<()> {
        if !(0.0..=self.tau_end + 1e-12).contains(&tau) {
            return Err(Error::OutOfDomain(format!(
                "tau={} outside [0, {}]",
                tau, self.tau_end
            )));
        }
        Ok(())
    }

    fn numeric(&self) -> &NumericFlowData {
        match &self.evolution {
            Evolution::NumericGrid(d) => d,
            Evolution::ClosedForm => unreachable!("closed-form flow has no grid data"),
        }
    }

    /// Interpolated (g_rr, g_sph) profiles at τ (linear in τ).
    pub fn warped_profile(&self, tau: f64) -> (Vec<f64>, Vec<f64>) {
        let d = self.numeric();
        let m = d.taus.len();
        if tau <= d.taus[0] {
            return (d.g_rr[0].clone(), d.g_sph[0].clone());
        }
        if tau >= d.taus[m - 1] {
            return (d.g_rr[m - 1].clone(), d.g_sph[m - 1].clone());
        }
        let k = d.taus.partition_point(|t| *t <= tau) - 1;
        let t0 = d.taus[k];
        let t1 = d.taus[k + 1];
        let w1 = (tau - t0) / (t1 - t0);
        let w0 = 1.0 - w1;
        let lerp = |a: &[f64], b: &[f64]| {
            a.iter()
                .zip(b)
                .map(|(x, y)| w0 * x + w1 * y)
                .collect::<Vec<f64>>()
        };
        (lerp(&d.g_rr[k], &d.g_rr[k + 1]), lerp(&d.g_sph[k], &d.g_sph[k + 1]))
    }

    /// Dump the warp profile at τ as CSV (columns r, w).
    pub fn write_profile_csv<W: Write>(&self, tau: f64, out: &mut W) -> Result<()> {
        let grid = match &self.geometry {
            ModelGeometry::WarpedProduct { grid, .. } => grid,
            _ => return Err(Error::Unsupported("profile CSV is for warped products".into())),
        };
        let (_, g_sph) = self.warped_profile(tau);
        writeln!(out, "{}", crate::csvio::schema_line("warp-profile"))?;
        writeln!(out, "r,w")?;
        for (r, gs) in grid.iter().zip(&g_sph) {
            writeln!(out, "{},{}", crate::csvio::sig12(*r), crate::csvio::sig12(gs.sqrt()))?;
        }
        Ok(())
    }
}

/// Sectional curvatures (K_radial, K_sphere) of a warped profile at node j,
/// by non-uniform centered differences. Boundary nodes assume the Neumann
/// pinning w' = 0 (cylinder asymptotics).
fn warped_sectionals(grid: &[f64], g_rr: &[f64], g_sph: &[f64], j: usize) -> (f64, f64) {
    let m = grid.len();
    let w: Vec<f64> = g_sph.iter().map(|v| v.sqrt()).collect();
    let b: Vec<f64> = g_rr.iter().map(|v| v.sqrt()).collect();
    let ws_at = |k: usize| -> f64 {
        if k == 0 || k == m - 1 {
            return 0.0; // Neumann pinning at the ends
        }
        let (h0, h1) = (grid[k] - grid[k - 1], grid[k + 1] - grid[k]);
        let dw = (w[k + 1] * h0 * h0 - w[k - 1] * h1 * h1 + w[k] * (h1 * h1 - h0 * h0))
            / (h0 * h1 * (h0 + h1));
        dw / b[k]
    };
    let wss = if j == 0 || j == m - 1 {
        // Parabolic fit with zero slope at the end node.
        let (k0, k1) = if j == 0 { (0, 1) } else { (m - 1, m - 2) };
        let h = grid[k1] - grid[k0];
        2.0 * (w[k1] - w[k0]) / (h * h) / (b[k0] * b[k0])
    } else {
        let (h0, h1) = (grid[j] - grid[j - 1], grid[j + 1] - grid[j]);
        let (wsm, wsp) = (ws_at(j.max(1) - 1), ws_at(j + 1));
        // Centered derivative of w_s, then divide by b.
        let dws = (wsp * h0 * h0 - wsm * h1 * h1 + ws_at(j) * (h1 * h1 - h0 * h0))
            / (h0 * h1 * (h0 + h1));
        dws / b[j]
    };
    let ws = ws_at(j);
    let k_rad = -wss / w[j];
    let k_sph = (1.0 - ws * ws) / (w[j] * w[j]);
    (k_rad, k_sph)
}

/// Ricci diagonal (coordinate components [rr, θθ]) of a warped profile at node j.
fn warped_ricci(n: usize, grid: &[f64], g_rr: &[f64], g_sph: &[f64], j: usize) -> [f64; 2] {
    let (k_rad, k_sph) = warped_sectionals(grid, g_rr, g_sph, j);
    let nf = n as f64;
    let ric_rr = (nf - 1.0) * k_rad * g_rr[j];
    let ric_tt = (k_rad + (nf - 2.0) * k_sph) * g_sph[j];
    [ric_rr, ric_tt]
}

fn locate(grid: &[f64], r: f64) -> Result<usize> {
    if r < grid[0] - 1e-12 || r > grid[grid.len() - 1] + 1e-12 {
        return Err(Error::OutOfDomain(format!("r={} outside the warped grid", r)));
    }
    Ok(grid.partition_point(|g| *g <= r).clamp(1, grid.len() - 1) - 1)
}

fn lerp_node(grid: &[f64], vals: &[f64], r: f64) -> Result<f64> {
    let k = locate(grid, r)?;
    let t = ((r - grid[k]) / (grid[k + 1] - grid[k])).clamp(0.0, 1.0);
    Ok(vals[k] * (1.0 - t) + vals[k + 1] * t)
}

impl FlowModel for BackwardFlow {
    fn dim(&self) -> usize {
        self.geometry.dim()
    }

    fn coord_dim(&self) -> usize {
        self.geometry.coord_dim()
    }

    fn tau_max(&self) -> f64 {
        self.tau_end
    }

    fn metric_diag(&self, coords: &[f64], tau: f64) -> Vec<f64> {
        match &self.geometry {
            ModelGeometry::EuclideanSpace { n } => vec![1.0; *n],
            ModelGeometry::RoundSphere { n, r0 } => vec![sphere_rsq(*n, *r0, tau)],
            ModelGeometry::RoundCylinder { n, r0 } => vec![cylinder_rsq(*n, *r0, tau), 1.0],
            ModelGeometry::WarpedProduct { grid, .. } => {
                let (g_rr, g_sph) = self.warped_profile(tau);
                let r = coords[0];
                vec![
                    lerp_node(grid, &g_rr, r).unwrap_or(f64::NAN),
                    lerp_node(grid, &g_sph, r).unwrap_or(f64::NAN),
                ]
            }
        }
    }

    fn scalar_curvature(&self, coords: &[f64], tau: f64) -> f64 {
        let nf = self.dim() as f64;
        match &self.geometry {
            ModelGeometry::EuclideanSpace { .. } => 0.0,
            ModelGeometry::RoundSphere { n, r0 } => nf * (nf - 1.0) / sphere_rsq(*n, *r0, tau),
            ModelGeometry::RoundCylinder { n, r0 } => {
                (nf - 1.0) * (nf - 2.0) / cylinder_rsq(*n, *r0, tau)
            }
            ModelGeometry::WarpedProduct { grid, .. } => {
                let (g_rr, g_sph) = self.warped_profile(tau);
                // Evaluate at the nearest node; R varies on the grid scale.
                let j = match locate(grid, coords[0]) {
                    Ok(k) => {
                        if coords[0] - grid[k] > grid[k + 1] - coords[0] {
                            k + 1
                        } else {
                            k
                        }
                    }
                    Err(_) => return f64::NAN,
                };
                let (k_rad, k_sph) = warped_sectionals(grid, &g_rr, &g_sph, j);
                2.0 * (nf - 1.0) * k_rad + (nf - 1.0) * (nf - 2.0) * k_sph
            }
        }
    }

    fn riemann_sup(&self, tau: f64) -> f64 {
        match &self.geometry {
            ModelGeometry::EuclideanSpace { .. } => 0.0,
            ModelGeometry::RoundSphere { n, r0 } => 1.0 / sphere_rsq(*n, *r0, tau),
            ModelGeometry::RoundCylinder { n, r0 } => 1.0 / cylinder_rsq(*n, *r0, tau),
            ModelGeometry::WarpedProduct { grid, .. } => {
                let (g_rr, g_sph) = self.warped_profile(tau);
                (0..grid.len())
                    .map(|j| {
                        let (kr, ks) = warped_sectionals(grid, &g_rr, &g_sph, j);
                        kr.abs().max(ks.abs())
                    })
                    .fold(0.0, f64::max)
            }
        }
    }

    fn sym_jacobian(&self, coords: &[f64], tau: f64) -> f64 {
        let nf = self.dim() as f64;
        match &self.geometry {
            ModelGeometry::EuclideanSpace { .. } => 1.0,
            ModelGeometry::RoundSphere { .. } => coords[0].sin().abs().powf(nf - 1.0),
            ModelGeometry::RoundCylinder { .. } => coords[0].sin().abs().powf(nf - 2.0),
            ModelGeometry::WarpedProduct { grid, .. } => {
                let (g_rr, g_sph) = self.warped_profile(tau);
                let b = lerp_node(grid, &g_rr, coords[0]).unwrap_or(f64::NAN).sqrt();
                let w = lerp_node(grid, &g_sph, coords[0]).unwrap_or(f64::NAN).sqrt();
                b * w.powf(nf - 1.0) * coords[1].sin().abs().powf(nf - 2.0)
            }
        }
    }
}

/// Ric(g(τ)) at a point, in reduced coordinates.
pub fn ricci_tensor(flow: &BackwardFlow, p: &SpacetimePoint) -> Result<RicciForm> {
    flow.check_tau(p.tau)?;
    let nf = flow.dim() as f64;
    match &flow.geometry {
        ModelGeometry::EuclideanSpace { n } => Ok(RicciForm {
            coord_diag: vec![0.0; *n],
            rel_eigs: vec![0.0; *n],
        }),
        ModelGeometry::RoundSphere { n, r0 } => {
            let rsq = sphere_rsq(*n, *r0, p.tau);
            Ok(RicciForm {
                coord_diag: vec![nf - 1.0],
                rel_eigs: vec![(nf - 1.0) / rsq],
            })
        }
        ModelGeometry::RoundCylinder { n, r0 } => {
            let rsq = cylinder_rsq(*n, *r0, p.tau);
            Ok(RicciForm {
                coord_diag: vec![nf - 2.0, 0.0],
                rel_eigs: vec![(nf - 2.0) / rsq, 0.0],
            })
        }
        ModelGeometry::WarpedProduct { n, grid, .. } => {
            let (g_rr, g_sph) = flow.warped_profile(p.tau);
            let k = locate(grid, p.coords[0])?;
            let j = if p.coords[0] - grid[k] > grid[k + 1] - p.coords[0] {
                k + 1
            } else {
                k
            };
            let ric = warped_ricci(*n, grid, &g_rr, &g_sph, j);
            Ok(RicciForm {
                rel_eigs: vec![ric[0] / g_rr[j], ric[1] / g_sph[j]],
                coord_diag: ric.to_vec(),
            })
        }
    }
}

/// sup_M |Rm|(g(τ)).
pub fn riemann_sup_norm(flow: &BackwardFlow, tau: f64) -> Result<f64> {
    flow.check_tau(tau)?;
    Ok(flow.riemann_sup(tau))
}

/// Controls for the numeric warped-product integrator.
#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub step: f64,
    pub flow_tolerance: f64,
    pub curvature_ceiling: f64,
    pub min_step: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            step: 5e-4,
            flow_tolerance: 1e-6,
            curvature_ceiling: 1e6,
            min_step: 1e-9,
        }
    }
}

/// Evolve a model geometry backward for time T. Homogeneous families get
/// closed forms; warped products are integrated with an adaptive explicit
/// stepper and the flow-equation residual is verified on the stored steps.
pub fn evolve(geometry: ModelGeometry, t_end: f64, step: f64) -> Result<BackwardFlow> {
    evolve_with(
        geometry,
        t_end,
        &EvolveOptions {
            step,
            ..EvolveOptions::default()
        },
    )
}

pub fn evolve_with(geometry: ModelGeometry, t_end: f64, opts: &EvolveOptions) -> Result<BackwardFlow> {
    geometry.validate()?;
    if t_end <= 0.0 || opts.step <= 0.0 {
        return Err(Error::Config("horizon and step must be positive".into()));
    }
    match &geometry {
        ModelGeometry::WarpedProduct { n, grid, warp } => {
            let n = *n;
            let grid = grid.clone();
            // ∂τ w = −w_ss + … is a backward heat equation: a mode of
            // wavelength Δr grows like exp((π/Δr)² τ). Refuse grids whose
            // Nyquist mode would amplify roundoff beyond the tolerance —
            // finer resolution makes the computed flow *less* trustworthy.
            let dr_min = grid
                .windows(2)
                .map(|p| p[1] - p[0])
                .fold(f64::INFINITY, f64::min);
            let rate = (std::f64::consts::PI / dr_min).powi(2) * t_end;
            if rate > (0.1 * opts.flow_tolerance / f64::EPSILON).ln() {
                return Err(Error::Config(format!(
                    "radial spacing {:.3} resolves modes the backward flow \
                     amplifies by e^{:.1} over the horizon; coarsen the grid \
                     or shorten the horizon",
                    dr_min, rate
                )));
            }
            let mut g_rr_now = vec![1.0; grid.len()];
            let mut g_sph_now: Vec<f64> = warp.iter().map(|w| w * w).collect();
            let rhs = |g_rr: &[f64], g_sph: &[f64]| -> (Vec<f64>, Vec<f64>) {
                let m = grid.len();
                let mut d_rr = vec![0.0; m];
                let mut d_sph = vec![0.0; m];
                for j in 0..m {
                    let ric = warped_ricci(n, &grid, g_rr, g_sph, j);
                    d_rr[j] = 2.0 * ric[0];
                    d_sph[j] = 2.0 * ric[1];
                }
                (d_rr, d_sph)
            };
            let rk2 = |g_rr: &[f64], g_sph: &[f64], h: f64| -> (Vec<f64>, Vec<f64>) {
                let (k1r, k1s) = rhs(g_rr, g_sph);
                let mid_r: Vec<f64> =
                    g_rr.iter().zip(&k1r).map(|(g, k)| g + 0.5 * h * k).collect();
                let mid_s: Vec<f64> =
                    g_sph.iter().zip(&k1s).map(|(g, k)| g + 0.5 * h * k).collect();
                let (k2r, k2s) = rhs(&mid_r, &mid_s);
                (
                    g_rr.iter().zip(&k2r).map(|(g, k)| g + h * k).collect(),
                    g_sph.iter().zip(&k2s).map(|(g, k)| g + h * k).collect(),
                )
            };
            let mut taus = vec![0.0];
            let mut g_rr_hist = vec![g_rr_now.clone()];
            let mut g_sph_hist = vec![g_sph_now.clone()];
            let mut tau = 0.0;
            let mut h = opts.step;
            while tau < t_end - 1e-14 {
                h = h.min(t_end - tau);
                // Step doubling: one full step vs two half steps.
                let (fr, fs) = rk2(&g_rr_now, &g_sph_now, h);
                let (hr, hs) = rk2(&g_rr_now, &g_sph_now, 0.5 * h);
                let (hr, hs) = rk2(&hr, &hs, 0.5 * h);
                let err = fr
                    .iter()
                    .zip(&hr)
                    .chain(fs.iter().zip(&hs))
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                // Per-unit-time error budget: keeps the accumulated drift
                // under flow_tolerance·t_end while staying above the roundoff
                // plateau of the doubling estimate.
                if err > opts.flow_tolerance * h.max(0.01) {
                    log::debug!("reject tau={} h={} err={}", tau, h, err);
                    h *= 0.5;
                    if h < opts.min_step {
                        return Err(Error::StepRejected { min_step: opts.min_step });
                    }
                    continue;
                }
                g_rr_now = hr;
                g_sph_now = hs;
                tau += h;
                taus.push(tau);
                g_rr_hist.push(g_rr_now.clone());
                g_sph_hist.push(g_sph_now.clone());
                if g_sph_now.iter().any(|v| *v <= 0.0) {
                    return Err(Error::BlowUp {
                        tau,
                        ceiling: opts.curvature_ceiling,
                    });
                }
                let sup = (0..grid.len())
                    .map(|j| {
                        let (kr, ks) = warped_sectionals(&grid, &g_rr_now, &g_sph_now, j);
                        kr.abs().max(ks.abs())
                    })
                    .fold(0.0, f64::max);
                if sup > opts.curvature_ceiling {
                    return Err(Error::BlowUp {
                        tau,
                        ceiling: opts.curvature_ceiling,
                    });
                }
                if err < 1e-2 * opts.flow_tolerance * h.max(0.01) {
                    h = (h * 1.5).min(0.05 * t_end);
                }
            }
            // Flow-equation residual on the stored ladder: FD ∂g/∂τ vs 2 Ric.
            let mut max_res: f64 = 0.0;
            for k in 1..taus.len().saturating_sub(1) {
                let (h0, h1) = (taus[k] - taus[k - 1], taus[k + 1] - taus[k]);
                let denom = h0 * h1 * (h0 + h1);
                let fd = |m: f64, c: f64, p: f64| {
                    (p * h0 * h0 - m * h1 * h1 + c * (h1 * h1 - h0 * h0)) / denom
                };
                let (d_rr, d_sph) = rhs(&g_rr_hist[k], &g_sph_hist[k]);
                for j in 0..grid.len() {
                    let fd_rr = fd(g_rr_hist[k - 1][j], g_rr_hist[k][j], g_rr_hist[k + 1][j]);
                    let fd_sph = fd(g_sph_hist[k - 1][j], g_sph_hist[k][j], g_sph_hist[k + 1][j]);
                    max_res = max_res
                        .max((fd_rr - d_rr[j]).abs())
                        .max((fd_sph - d_sph[j]).abs());
                }
            }
            if max_res > opts.flow_tolerance {
                return Err(Error::StepRejected { min_step: opts.min_step });
            }
            Ok(BackwardFlow {
                geometry,
                tau_end: t_end,
                evolution: Evolution::NumericGrid(NumericFlowData {
                    taus,
                    g_rr: g_rr_hist,
                    g_sph: g_sph_hist,
                    max_flow_residual: max_res,
                }),
            })
        }
        _ => BackwardFlow::closed_form(geometry, t_end),
    }
}

/// Radial/axial volume density reducing symmetric integrals over M to 1-d
/// quadrature in the geometry's symmetric coordinate.
pub struct VolumeDensity {
    /// Upper end of the symmetric coordinate (infinite for noncompact models).
    pub coord_max: f64,
    density: Box<dyn Fn(f64) -> f64 + Send + Sync>,
}

impl VolumeDensity {
    pub fn eval(&self, u: f64) -> f64 {
        (self.density)(u)
    }
}

/// Density for the geometry's symmetric coordinate:
/// flat: ω_{n-1} ρ^{n-1}; sphere: ω_{n-1} rⁿ sin^{n-1}θ over θ ∈ [0,π];
/// cylinder: sphere-factor area per unit axial length; warped: ω_{n-1} b w^{n-1}.
pub fn volume_measure(flow: &BackwardFlow, tau: f64) -> Result<VolumeDensity> {
    flow.check_tau(tau)?;
    let n = flow.dim();
    let nf = n as f64;
    let omega = unit_sphere_area(n - 1);
    match &flow.geometry {
        ModelGeometry::EuclideanSpace { .. } => Ok(VolumeDensity {
            coord_max: f64::INFINITY,
            density: Box::new(move |rho| omega * rho.powf(nf - 1.0)),
        }),
        ModelGeometry::RoundSphere { n, r0 } => {
            let rsq = sphere_rsq(*n, *r0, tau);
            Ok(VolumeDensity {
                coord_max: std::f64::consts::PI,
                density: Box::new(move |theta| {
                    omega * rsq.powf(nf / 2.0) * theta.sin().powf(nf - 1.0)
                }),
            })
        }
        ModelGeometry::RoundCylinder { n, r0 } => {
            let rsq = cylinder_rsq(*n, *r0, tau);
            Ok(VolumeDensity {
                coord_max: f64::INFINITY,
                density: Box::new(move |_x| omega * rsq.powf((nf - 1.0) / 2.0)),
            })
        }
        ModelGeometry::WarpedProduct { grid, .. } => {
            let (g_rr, g_sph) = flow.warped_profile(tau);
            let grid = grid.clone();
            Ok(VolumeDensity {
                coord_max: grid[grid.len() - 1],
                density: Box::new(move |r| {
                    let b = lerp_node(&grid, &g_rr, r).unwrap_or(f64::NAN).sqrt();
                    let w = lerp_node(&grid, &g_sph, r).unwrap_or(f64::NAN).sqrt();
                    omega * b * w.powf(nf - 1.0)
                }),
            })
        }
    }
}

/// A cylinder-profile warped product on [-len/2, len/2] with m nodes.
pub fn cylinder_profile(n: usize, r0: f64, half_len: f64, m: usize) -> ModelGeometry {
    let grid: Vec<f64> = (0..m)
        .map(|k| -half_len + 2.0 * half_len * k as f64 / (m - 1) as f64)
        .collect();
    ModelGeometry::WarpedProduct {
        n,
        grid,
        warp: vec![r0; m],
    }
}

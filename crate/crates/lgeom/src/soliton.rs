//! Gradient-soliton structure detection: the shrinker residual
//! Ric + ∇²f − (λ/2)g, potential fitting, the F-functional, and the
//! noncollapsing / injectivity-radius probes.

use crate::error::{Error, Result};
use crate::geometry::{unit_ball_volume, unit_sphere_area, BackwardFlow, FlowModel};
use crate::quad;

/// A single-time metric on one of the model families, reduced to its
/// symmetric coordinate. `axial_coeff` on the cylinder is the (constant)
/// coefficient of dx².
#[derive(Debug, Clone)]
pub enum MetricSnapshot {
    Flat { n: usize },
    Sphere { n: usize, rsq: f64 },
    Cylinder { n: usize, rsq: f64, axial_coeff: f64 },
    Warped { n: usize, grid: Vec<f64>, g_rr: Vec<f64>, g_sph: Vec<f64> },
}

impl MetricSnapshot {
    pub fn dim(&self) -> usize {
        match self {
            MetricSnapshot::Flat { n }
            | MetricSnapshot::Sphere { n, .. }
            | MetricSnapshot::Cylinder { n, .. }
            | MetricSnapshot::Warped { n, .. } => *n,
        }
    }

    /// Default evaluation grid in the symmetric coordinate.
    pub fn default_grid(&self) -> Vec<f64> {
        match self {
            MetricSnapshot::Flat { .. } => linspace(0.1, 4.0, 40),
            MetricSnapshot::Sphere { .. } => linspace(0.2, std::f64::consts::PI - 0.2, 40),
            MetricSnapshot::Cylinder { .. } => linspace(-4.0, 4.0, 40),
            MetricSnapshot::Warped { grid, .. } => {
                let m = grid.len();
                grid[m / 10..m - m / 10].to_vec()
            }
        }
    }
}

fn linspace(a: f64, b: f64, m: usize) -> Vec<f64> {
    (0..m)
        .map(|k| a + (b - a) * k as f64 / (m - 1) as f64)
        .collect()
}

/// Shrinker-equation report: residual eigenvalues are measured relative to
/// the metric (eigenvalues of (Ric + ∇²f − (λ/2)g)·g⁻¹).
#[derive(Debug, Clone)]
pub struct SolitonReport {
    pub lambda: f64,
    /// (symmetric coordinate, f value) on the evaluation grid.
    pub potential: Vec<(f64, f64)>,
    pub residual_sup: f64,
    pub residual_l2: f64,
    /// Per-point residual eigenvalues, for CSV emission.
    pub residual_rows: Vec<(f64, Vec<f64>)>,
}

impl SolitonReport {
    pub fn write_csv<W: std::io::Write>(&self, out: &mut W) -> Result<()> {
        writeln!(out, "{}", crate::csvio::schema_line("soliton-residual"))?;
        writeln!(out, "u,residual_eigs...")?;
        for (u, eigs) in &self.residual_rows {
            let cols: Vec<String> = eigs.iter().map(|e| crate::csvio::sig12(*e)).collect();
            writeln!(out, "{},{}", crate::csvio::sig12(*u), cols.join(","))?;
        }
        Ok(())
    }
}

fn fd1(f: &dyn Fn(f64) -> f64, u: f64, h: f64) -> f64 {
    (f(u + h) - f(u - h)) / (2.0 * h)
}

fn fd2(f: &dyn Fn(f64) -> f64, u: f64, h: f64) -> f64 {
    (f(u + h) - 2.0 * f(u) + f(u - h)) / (h * h)
}

/// Residual eigenvalues of Ric + ∇²f − (λ/2)g at one grid point, relative
/// to g, with multiplicities. For the homogeneous families the Christoffel
/// symbols are exact; the warped family uses finite differences.
fn residual_eigs(
    snap: &MetricSnapshot,
    f: &dyn Fn(f64) -> f64,
    lambda: f64,
    u: f64,
) -> Result<Vec<(f64, usize)>> {
    let n = snap.dim();
    let nf = n as f64;
    // Large enough that the ε f/h² roundoff in fd2 stays below 1e-10 even
    // for potentials carrying a large constant offset; the potentials here
    // are low-order polynomials, so the h² truncation term is harmless and
    // in the fitting path the same operator is applied on both sides.
    let h = 2e-2;
    match snap {
        MetricSnapshot::Flat { .. } => {
            // Radial profile f(ρ): Hessian eigenvalues f'' (radial) and
            // f'/ρ (tangential, multiplicity n−1); Ric = 0.
            if u <= h {
                return Err(Error::GridTooCoarse("flat grid point too close to 0".into()));
            }
            let fp = fd1(f, u, h);
            let fpp = fd2(f, u, h);
            Ok(vec![
                (fpp - 0.5 * lambda, 1),
                (fp / u - 0.5 * lambda, n - 1),
            ])
        }
        MetricSnapshot::Sphere { rsq, .. } => {
            // f(θ) on the round sphere of radius² rsq; θ the polar angle.
            // Ric/g = (n−1)/rsq; Hess eigenvalues f_θθ/rsq (along the great
            // circle) and cotθ f_θ/rsq (transverse).
            let fp = fd1(f, u, h);
            let fpp = fd2(f, u, h);
            let ric = (nf - 1.0) / rsq;
            Ok(vec![
                (ric + fpp / rsq - 0.5 * lambda, 1),
                (ric + u.tan().recip() * fp / rsq - 0.5 * lambda, n - 2 + 1),
            ])
        }
        MetricSnapshot::Cylinder { rsq, axial_coeff, .. } => {
            // f(x) on S^{n−1}×ℝ: product metric, ∇²f = f''(x) dx².
            let fpp = fd2(f, u, h);
            Ok(vec![
                ((nf - 2.0) / rsq - 0.5 * lambda, n - 1),
                (fpp / axial_coeff - 0.5 * lambda, 1),
            ])
        }
        MetricSnapshot::Warped { n, grid, g_rr, g_sph } => {
            let m = grid.len();
            let j = grid
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - u).abs().partial_cmp(&(b.1 - u).abs()).unwrap())
                .map(|(i, _)| i)
                .unwrap();
            if j == 0 || j == m - 1 {
                return Err(Error::GridTooCoarse("warped residual needs interior nodes".into()));
            }
            let b = g_rr[j].sqrt();
            let w = g_sph[j].sqrt();
            let hh = 0.5 * (grid[j + 1] - grid[j - 1]);
            let bp = (g_rr[j + 1].sqrt() - g_rr[j - 1].sqrt()) / (2.0 * hh);
            let wp = (g_sph[j + 1].sqrt() - g_sph[j - 1].sqrt()) / (2.0 * hh);
            let fp = fd1(f, grid[j], hh);
            let fpp = fd2(f, grid[j], hh);
            // Ric from the warped sectional curvatures.
            let ws = wp / b;
            let wss = ((g_sph[j + 1].sqrt() - w) / (grid[j + 1] - grid[j])
                - (w - g_sph[j - 1].sqrt()) / (grid[j] - grid[j - 1]))
                / hh
                / (b * b)
                - ws * bp / (b * b);
            let k_rad = -wss / w;
            let k_sph = (1.0 - ws * ws) / (w * w);
            let ric_rad = (*n as f64 - 1.0) * k_rad;
            let ric_sph = k_rad + (*n as f64 - 2.0) * k_sph;
            let hess_rad = (fpp - (bp / b) * fp) / (b * b);
            let hess_sph = (wp / (w * b * b)) * fp;
            Ok(vec![
                (ric_rad + hess_rad - 0.5 * lambda, 1),
                (ric_sph + hess_sph - 0.5 * lambda, n - 1),
            ])
        }
    }
}

/// Ric + ∇²f − (λ/2)g on the evaluation grid, with sup and ℓ² norms of the
/// relative eigenvalues.
pub fn shrinker_residual(
    snap: &MetricSnapshot,
    grid: &[f64],
    f: &dyn Fn(f64) -> f64,
    lambda: f64,
) -> Result<SolitonReport> {
    if grid.len() < 3 {
        return Err(Error::GridTooCoarse("need at least 3 evaluation points".into()));
    }
    let mut sup: f64 = 0.0;
    let mut sum_sq = 0.0;
    let mut count = 0usize;
    let mut rows = Vec::with_capacity(grid.len());
    let mut potential = Vec::with_capacity(grid.len());
    for &u in grid {
        let eigs = residual_eigs(snap, f, lambda, u)?;
        let mut flat_eigs = Vec::new();
        for (e, mult) in &eigs {
            sup = sup.max(e.abs());
            sum_sq += e * e * *mult as f64;
            count += mult;
            flat_eigs.push(*e);
        }
        rows.push((u, flat_eigs));
        potential.push((u, f(u)));
    }
    Ok(SolitonReport {
        lambda,
        potential,
        residual_sup: sup,
        residual_l2: (sum_sq / count as f64).sqrt(),
        residual_rows: rows,
    })
}

/// Polynomial potential profile Σ a_k u^k, k = 1..=4 (the constant is pure
/// gauge and is omitted).
#[derive(Debug, Clone)]
pub struct FittedPotential {
    pub coeffs: [f64; 4],
}

impl FittedPotential {
    pub fn eval(&self, u: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, a)| a * u.powi(k as i32 + 1))
            .sum()
    }
}

/// Least-squares fit of the 1-d potential profile minimizing the shrinker
/// residual over the grid. The residual is linear in the coefficients, so
/// this is a 4×4 normal system.
pub fn fit_potential(
    snap: &MetricSnapshot,
    grid: &[f64],
    lambda: f64,
) -> Result<(FittedPotential, SolitonReport)> {
    let zero = |_: f64| 0.0;
    let base: Vec<Vec<(f64, usize)>> = grid
        .iter()
        .map(|&u| residual_eigs(snap, &zero, lambda, u))
        .collect::<Result<_>>()?;
    // Column m = effect of the basis monomial u^{m+1} on each residual eig:
    // residual(f) − residual(0), exploiting linearity in f.
    let mut cols: Vec<Vec<Vec<f64>>> = Vec::with_capacity(4);
    for m in 0..4usize {
        let mono = move |u: f64| u.powi(m as i32 + 1);
        let col: Vec<Vec<f64>> = grid
            .iter()
            .zip(&base)
            .map(|(&u, b)| {
                residual_eigs(snap, &mono, lambda, u)
                    .map(|eigs| {
                        eigs.iter()
                            .zip(b)
                            .map(|((e, _), (e0, _))| e - e0)
                            .collect()
                    })
                    .unwrap_or_default()
            })
            .collect();
        cols.push(col);
    }
    // Weighted normal equations (weights = eigenvalue multiplicities).
    let mut ata = [[0.0f64; 4]; 4];
    let mut atb = [0.0f64; 4];
    for (p, b) in base.iter().enumerate() {
        for (k, (e0, mult)) in b.iter().enumerate() {
            let w = *mult as f64;
            for i in 0..4 {
                let ai = cols[i][p][k];
                atb[i] -= w * ai * e0;
                for j in 0..4 {
                    ata[i][j] += w * ai * cols[j][p][k];
                }
            }
        }
    }
    // Basis monomials with no effect on the residual (e.g. the linear term
    // on a product cylinder, where only f'' enters) leave null columns;
    // drop them and solve on the active set.
    let max_diag = ata.iter().enumerate().fold(0.0f64, |m, (i, r)| m.max(r[i]));
    let active: Vec<usize> = (0..4)
        .filter(|&i| ata[i][i] > 1e-12 * max_diag.max(1e-300))
        .collect();
    let coeffs = solve_active(&ata, &atb, &active)?;
    let fit = FittedPotential { coeffs };
    let f = |u: f64| fit.eval(u);
    let report = shrinker_residual(snap, grid, &f, lambda)?;
    Ok((fit, report))
}

/// Gaussian elimination with partial pivoting on the sub-system indexed by
/// `active`; inactive coefficients are returned as zero.
fn solve_active(a4: &[[f64; 4]; 4], b4: &[f64; 4], active: &[usize]) -> Result<[f64; 4]> {
    let m = active.len();
    if m == 0 {
        return Ok([0.0; 4]);
    }
    let mut a: Vec<Vec<f64>> = active
        .iter()
        .map(|&i| active.iter().map(|&j| a4[i][j]).collect())
        .collect();
    let mut b: Vec<f64> = active.iter().map(|&i| b4[i]).collect();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[piv][col].abs() < 1e-12 * scale.max(1e-300) {
            return Err(Error::IllConditioned);
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..m {
            let fac = a[row][col] / a[col][col];
            for k in col..m {
                a[row][k] -= fac * a[col][k];
            }
            b[row] -= fac * b[col];
        }
    }
    let mut xs = vec![0.0f64; m];
    for col in (0..m).rev() {
        let mut acc = b[col];
        for k in col + 1..m {
            acc -= a[col][k] * xs[k];
        }
        xs[col] = acc / a[col][col];
    }
    let mut x = [0.0f64; 4];
    for (k, &i) in active.iter().enumerate() {
        x[i] = xs[k];
    }
    Ok(x)
}

/// ℱ(g, f) = ∫ (|∇f|² + R) e^{−f} dg by symmetric quadrature, truncated at
/// `cutoff` in the symmetric coordinate.
pub fn f_functional(
    snap: &MetricSnapshot,
    f: &dyn Fn(f64) -> f64,
    cutoff: f64,
    tail_tolerance: f64,
) -> Result<f64> {
    let n = snap.dim();
    let nf = n as f64;
    let h = 1e-5;
    // (density, inverse metric coefficient for the symmetric coordinate, R, domain)
    let (density, g_inv, r_scalar, lo, hi): (
        Box<dyn Fn(f64) -> f64>,
        f64,
        f64,
        f64,
        f64,
    ) = match snap {
        MetricSnapshot::Flat { .. } => (
            Box::new(move |rho: f64| unit_sphere_area(n - 1) * rho.powf(nf - 1.0)),
            1.0,
            0.0,
            0.0,
            cutoff,
        ),
        MetricSnapshot::Sphere { rsq, .. } => {
            let rsq = *rsq;
            (
                Box::new(move |theta: f64| {
                    unit_sphere_area(n - 1) * rsq.powf(nf / 2.0) * theta.sin().powf(nf - 1.0)
                }),
                1.0 / rsq,
                nf * (nf - 1.0) / rsq,
                0.0,
                std::f64::consts::PI,
            )
        }
        MetricSnapshot::Cylinder { rsq, axial_coeff, .. } => {
            let (rsq, c) = (*rsq, *axial_coeff);
            (
                Box::new(move |_x: f64| {
                    unit_sphere_area(n - 1) * rsq.powf((nf - 1.0) / 2.0) * c.sqrt()
                }),
                1.0 / c,
                (nf - 1.0) * (nf - 2.0) / rsq,
                -cutoff,
                cutoff,
            )
        }
        MetricSnapshot::Warped { .. } => {
            return Err(Error::Unsupported(
                "F-functional quadrature on warped products".into(),
            ))
        }
    };
    let integrand = |u: f64| {
        let fp = fd1(f, u, h);
        (g_inv * fp * fp + r_scalar) * (-f(u)).exp() * density(u)
    };
    let value = quad::gauss_legendre(&integrand, lo, hi, 128);
    // Tail: extend by half the window; the extension must be negligible.
    if hi.is_finite() && !matches!(snap, MetricSnapshot::Sphere { .. }) {
        let ext = quad::gauss_legendre(&integrand, hi, hi + 0.5 * (hi - lo).abs(), 64).abs()
            + if lo != 0.0 {
                quad::gauss_legendre(&integrand, lo - 0.5 * (hi - lo).abs(), lo, 64).abs()
            } else {
                0.0
            };
        if ext > tail_tolerance {
            return Err(Error::TailNotNegligible {
                tail: ext,
                tol: tail_tolerance,
            });
        }
    }
    Ok(value)
}

#[derive(Debug, Clone)]
pub struct NoncollapseProbe {
    pub kappa: f64,
    pub r: f64,
    pub center: Vec<f64>,
    pub verdict: bool,
    pub vol_ratio: f64,
    /// True when the curvature precondition failed, making the verdict vacuous.
    pub vacuous: bool,
}

/// Checks |Rm| ≤ r⁻² on the parabolic ball, then compares Vol(B)/rⁿ with κ.
pub fn noncollapse_probe(
    flow: &BackwardFlow,
    center: &[f64],
    tau: f64,
    r: f64,
    kappa: f64,
) -> Result<NoncollapseProbe> {
    flow.check_tau(tau)?;
    if r <= 0.0 {
        return Err(Error::Config("probe scale r must be positive".into()));
    }
    let n = flow.dim();
    // Curvature precondition over [τ, τ + r²] ∩ domain, sampled.
    let hi = (tau + r * r).min(flow.tau_max());
    let curv_ok = (0..=8)
        .map(|k| tau + (hi - tau) * k as f64 / 8.0)
        .all(|t| flow.riemann_sup(t) <= 1.0 / (r * r) + 1e-12);
    if !curv_ok {
        return Ok(NoncollapseProbe {
            kappa,
            r,
            center: center.to_vec(),
            verdict: true,
            vol_ratio: f64::NAN,
            vacuous: true,
        });
    }
    let vol = ball_volume(flow, center, tau, r)?;
    let ratio = vol / r.powi(n as i32);
    Ok(NoncollapseProbe {
        kappa,
        r,
        center: center.to_vec(),
        verdict: ratio >= kappa,
        vol_ratio: ratio,
        vacuous: false,
    })
}

fn ball_volume(flow: &BackwardFlow, center: &[f64], tau: f64, r: f64) -> Result<f64> {
    use crate::geometry::ModelGeometry::*;
    let n = flow.dim();
    let nf = n as f64;
    match &flow.geometry {
        EuclideanSpace { .. } => Ok(unit_ball_volume(n) * r.powf(nf)),
        RoundSphere { n: ns, r0 } => {
            let rad = crate::geometry::sphere_rsq(*ns, *r0, tau).sqrt();
            let top = (r / rad).min(std::f64::consts::PI);
            Ok(quad::gauss_legendre(
                |theta| unit_sphere_area(n - 1) * (rad * theta.sin()).powf(nf - 1.0) * rad,
                0.0,
                top,
                64,
            ))
        }
        RoundCylinder { n: nc, r0 } => {
            let rad = crate::geometry::cylinder_rsq(*nc, *r0, tau).sqrt();
            // Ball in the product: fiber distance ρθ, axial half-width
            // √(r² − (ρθ)²).
            let m = n - 1;
            let top = (r / rad).min(std::f64::consts::PI);
            Ok(quad::gauss_legendre(
                |theta| {
                    let d = rad * theta;
                    let half = (r * r - d * d).max(0.0).sqrt();
                    unit_sphere_area(m - 1) * (rad * theta.sin()).powf(m as f64 - 1.0)
                        * rad
                        * 2.0
                        * half
                },
                0.0,
                top,
                64,
            ))
        }
        WarpedProduct { .. } => {
            // Radial slab estimate around the center; adequate as a probe.
            let density = crate::geometry::volume_measure(flow, tau)?;
            let a = center[0] - r;
            let b = center[0] + r;
            Ok(quad::gauss_legendre(|u| density.eval(u), a, b, 64))
        }
    }
}

/// Injectivity radius: exact for the homogeneous families, a certified
/// lower bound for warped products (conjugate-point bound vs shortest
/// symmetric loop).
pub fn injectivity_radius(snap: &MetricSnapshot, _point: &[f64]) -> Result<f64> {
    match snap {
        MetricSnapshot::Flat { .. } => Ok(f64::INFINITY),
        MetricSnapshot::Sphere { rsq, .. } => Ok(std::f64::consts::PI * rsq.sqrt()),
        MetricSnapshot::Cylinder { rsq, .. } => Ok(std::f64::consts::PI * rsq.sqrt()),
        MetricSnapshot::Warped { grid, g_rr, g_sph, .. } => {
            if grid.len() < 5 {
                return Err(Error::GridTooCoarse("warped injectivity estimate".into()));
            }
            // Conjugate-point bound π/√(sup K) and half the shortest fiber loop.
            let mut sup_k: f64 = 0.0;
            let mut min_w = f64::INFINITY;
            for j in 1..grid.len() - 1 {
                let w = g_sph[j].sqrt();
                min_w = min_w.min(w);
                let b = g_rr[j].sqrt();
                let hh = 0.5 * (grid[j + 1] - grid[j - 1]);
                let wp = (g_sph[j + 1].sqrt() - g_sph[j - 1].sqrt()) / (2.0 * hh) / b;
                let wss = ((g_sph[j + 1].sqrt() - w) / (grid[j + 1] - grid[j])
                    - (w - g_sph[j - 1].sqrt()) / (grid[j] - grid[j - 1]))
                    / hh
                    / (b * b);
                sup_k = sup_k.max((-wss / w).max((1.0 - wp * wp) / (w * w)));
            }
            let conj = if sup_k > 0.0 {
                std::f64::consts::PI / sup_k.sqrt()
            } else {
                f64::INFINITY
            };
            Ok(conj.min(std::f64::consts::PI * min_w))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{BackwardFlow, ModelGeometry};

    #[test]
    fn gaussian_shrinker_residual_is_zero() {
        let snap = MetricSnapshot::Flat { n: 3 };
        let grid = snap.default_grid();
        let f = |rho: f64| rho * rho / 4.0;
        let rep = shrinker_residual(&snap, &grid, &f, 1.0).unwrap();
        assert!(rep.residual_sup < 1e-8, "sup = {}", rep.residual_sup);
    }

    #[test]
    fn flat_zero_potential_residual_is_half() {
        let snap = MetricSnapshot::Flat { n: 3 };
        let grid = snap.default_grid();
        let rep = shrinker_residual(&snap, &grid, &|_| 0.0, 1.0).unwrap();
        assert!((rep.residual_sup - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cylinder_shrinker_identity() {
        // Normalized S²×ℝ shrinker: rsq = 2(n−2) = 2, f = x²/4.
        let snap = MetricSnapshot::Cylinder { n: 3, rsq: 2.0, axial_coeff: 1.0 };
        let grid = snap.default_grid();
        let rep = shrinker_residual(&snap, &grid, &|x| x * x / 4.0, 1.0).unwrap();
        assert!(rep.residual_sup < 1e-6, "sup = {}", rep.residual_sup);
    }

    #[test]
    fn gauge_invariance_under_constant_shift() {
        let snap = MetricSnapshot::Cylinder { n: 3, rsq: 2.0, axial_coeff: 1.0 };
        let grid = snap.default_grid();
        let a = shrinker_residual(&snap, &grid, &|x| x * x / 4.0, 1.0).unwrap();
        let b = shrinker_residual(&snap, &grid, &|x| x * x / 4.0 + 17.0, 1.0).unwrap();
        assert!((a.residual_sup - b.residual_sup).abs() < 1e-10);
    }

    #[test]
    fn fit_recovers_gaussian_potential() {
        let snap = MetricSnapshot::Flat { n: 2 };
        let grid = snap.default_grid();
        let (fit, rep) = fit_potential(&snap, &grid, 1.0).unwrap();
        assert!(rep.residual_sup < 1e-8, "sup = {}", rep.residual_sup);
        assert!((fit.coeffs[1] - 0.25).abs() < 1e-6, "quadratic coeff {}", fit.coeffs[1]);
    }

    #[test]
    fn einstein_sphere_fits_constant_potential() {
        // Normalized so Ric = g/2: rsq = 2(n−1).
        let snap = MetricSnapshot::Sphere { n: 3, rsq: 4.0 };
        let grid = snap.default_grid();
        let (_, rep) = fit_potential(&snap, &grid, 1.0).unwrap();
        assert!(rep.residual_sup <= 1e-8, "sup = {}", rep.residual_sup);
    }

    #[test]
    fn fit_never_beats_true_potential() {
        let snap = MetricSnapshot::Cylinder { n: 3, rsq: 2.0, axial_coeff: 1.0 };
        let grid = snap.default_grid();
        let truth = shrinker_residual(&snap, &grid, &|x| x * x / 4.0, 1.0).unwrap();
        let (_, fit) = fit_potential(&snap, &grid, 1.0).unwrap();
        assert!(fit.residual_l2 <= truth.residual_l2 + 1e-10);
    }

    #[test]
    fn f_functional_gaussian_moment() {
        // Flat n=2, f = ρ²/4: ∫ (ρ²/4) e^{−ρ²/4} 2πρ dρ = 4π.
        let snap = MetricSnapshot::Flat { n: 2 };
        let v = f_functional(&snap, &|rho| rho * rho / 4.0, 30.0, 1e-6).unwrap();
        let oracle = 2.0 * std::f64::consts::PI
            * quad::gauss_legendre(
                |rho: f64| rho.powi(3) / 4.0 * (-rho * rho / 4.0).exp(),
                0.0,
                30.0,
                64,
            );
        assert!((v - oracle).abs() < 1e-6);
        assert!((v - 4.0 * std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn f_functional_round_sphere() {
        // n=2 sphere, f ≡ 0: ∫ R dg = (2/r²)·4πr² = 8π.
        let snap = MetricSnapshot::Sphere { n: 2, rsq: 3.7 };
        let v = f_functional(&snap, &|_| 0.0, 10.0, 1e-6).unwrap();
        assert!((v - 8.0 * std::f64::consts::PI).abs() < 1e-6);
    }

    #[test]
    fn f_functional_constant_weight_factors_out() {
        let snap = MetricSnapshot::Sphere { n: 2, rsq: 1.0 };
        let v0 = f_functional(&snap, &|_| 0.0, 10.0, 1e-6).unwrap();
        let vc = f_functional(&snap, &|_| 1.5, 10.0, 1e-6).unwrap();
        assert!((vc - v0 * (-1.5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn noncollapse_flat_ball() {
        let flow = BackwardFlow::closed_form(ModelGeometry::EuclideanSpace { n: 3 }, 1.0).unwrap();
        let kappa = 0.5 * unit_ball_volume(3);
        let p = noncollapse_probe(&flow, &[0.0, 0.0, 0.0], 0.5, 1.0, kappa).unwrap();
        assert!(p.verdict && !p.vacuous);
        assert!((p.vol_ratio - unit_ball_volume(3)).abs() < 1e-12);
    }

    #[test]
    fn noncollapse_sphere_vacuous_at_large_scale() {
        let flow =
            BackwardFlow::closed_form(ModelGeometry::RoundSphere { n: 2, r0: 1.0 }, 1.0).unwrap();
        let p = noncollapse_probe(&flow, &[0.0], 0.0, 50.0, 0.1).unwrap();
        assert!(p.vacuous);
    }

    #[test]
    fn noncollapse_cylinder_small_ball_nearly_euclidean() {
        let flow = BackwardFlow::closed_form(ModelGeometry::RoundCylinder { n: 3, r0: 1.0 }, 1.0)
            .unwrap();
        let p = noncollapse_probe(&flow, &[0.0, 0.0], 0.0, 0.1, 0.1).unwrap();
        assert!(!p.vacuous);
        let om = unit_ball_volume(3);
        assert!((p.vol_ratio - om).abs() / om < 0.01, "ratio {}", p.vol_ratio);
    }

    #[test]
    fn injectivity_closed_forms() {
        assert_eq!(
            injectivity_radius(&MetricSnapshot::Flat { n: 3 }, &[0.0]).unwrap(),
            f64::INFINITY
        );
        let s = injectivity_radius(&MetricSnapshot::Sphere { n: 2, rsq: 4.0 }, &[0.0]).unwrap();
        assert!((s - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        let c = injectivity_radius(
            &MetricSnapshot::Cylinder { n: 3, rsq: 1.0, axial_coeff: 1.0 },
            &[0.0, 0.0],
        )
        .unwrap();
        assert!((c - std::f64::consts::PI).abs() < 1e-12);
    }
}

//! End-to-end acceptance gate: ten numbered checks over closed-form oracles
//! at desk scale. Each test prints one pass/fail line.

use std::time::Instant;

use lgeom::breather::{
    base_point_sequence, build_ancient_flow, build_ladder, cylinder_breather, default_sigma,
    flat_breather, l_bound_certificate, rescaled_sequence, sphere_breather, type_one_certificate,
    verify_breather, BreatherSpec, DiffeoDescriptor, GluingTolerances,
};
use lgeom::geometry::{
    cylinder_profile, evolve, BackwardFlow, FlowModel, ModelGeometry,
    SpacetimePoint,
};
use lgeom::lgeo::{
    conjugate_heat_residual, reduced_distance, reduced_volume, HeatResidualOptions, LgeoOptions,
    ReducedVolumeOptions,
};
use lgeom::soliton::{fit_potential, injectivity_radius, MetricSnapshot};

fn report(idx: usize, name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {:2}: {} - {} ({})",
        idx,
        if pass { "PASS" } else { "FAIL" },
        name,
        detail
    );
    assert!(pass, "criterion {} failed: {}", idx, detail);
}

#[test]
fn criterion_01_flat_reduced_distance() {
    let t0 = Instant::now();
    let flow = BackwardFlow::closed_form(ModelGeometry::EuclideanSpace { n: 2 }, 8.0).unwrap();
    let mut worst: f64 = 0.0;
    for dist in [0.5f64, 1.0, 2.0] {
        for tau in [0.25f64, 1.0, 4.0] {
            let rd = reduced_distance(
                &flow,
                &[0.0, 0.0],
                &[dist, 0.0],
                tau,
                &LgeoOptions::default(),
            )
            .unwrap();
            let oracle = dist * dist / (4.0 * tau);
            worst = worst.max((rd.value - oracle).abs() / oracle);
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    report(
        1,
        "flat reduced distance vs |x-y|^2/(4 tau)",
        worst < 1e-3 && secs < 30.0,
        &format!("max rel err {:.2e}, {:.1}s", worst, secs),
    );
}

#[test]
fn criterion_02_reduced_volume() {
    let mut detail = String::new();
    let mut pass = true;

    let flat = BackwardFlow::closed_form(ModelGeometry::EuclideanSpace { n: 2 }, 8.0).unwrap();
    let opts = ReducedVolumeOptions::default();
    for tau in [0.25f64, 1.0, 4.0] {
        let cutoff = 14.0 * tau.sqrt().max(1.0);
        let v = reduced_volume(&flat, &[0.0, 0.0], tau, cutoff, &opts).unwrap();
        if (v.value - 1.0).abs() > 1e-3 {
            pass = false;
        }
        detail.push_str(&format!("flat V({})={:.6} ", tau, v.value));
    }

    for (name, flow, base, cutoff) in [
        (
            "sphere",
            BackwardFlow::closed_form(ModelGeometry::RoundSphere { n: 2, r0: 1.0 }, 3.0).unwrap(),
            vec![0.0],
            std::f64::consts::PI,
        ),
        (
            "cylinder",
            BackwardFlow::closed_form(ModelGeometry::RoundCylinder { n: 3, r0: 1.0 }, 3.0)
                .unwrap(),
            vec![0.0, 0.0],
            std::f64::consts::PI,
        ),
    ] {
        let taus = [0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
        let mut prev = f64::INFINITY;
        for &tau in &taus {
            let v = reduced_volume(&flow, &base, tau, cutoff, &opts).unwrap();
            if v.value > prev + 1e-5 {
                pass = false;
                detail.push_str(&format!("{} not monotone at tau={} ", name, tau));
            }
            prev = v.value;
        }
        detail.push_str(&format!("{} V({})={:.6} ", name, taus[5], prev));
    }
    report(2, "reduced volume: flat ==1, sphere/cylinder monotone", pass, detail.trim());
}

#[test]
fn criterion_03_breather_verification() {
    let cyl = cylinder_breather(3, 1.0).unwrap();
    let rep_c = verify_breather(&cyl, &cyl.default_samples(), 1e-10).unwrap();
    let sph = sphere_breather(2, 1.0).unwrap();
    let rep_s = verify_breather(&sph, &sph.default_samples(), 1e-10).unwrap();

    // Numeric warped-product realization of the same cylinder breather:
    // phi contracts the axial coordinate r by sqrt(alpha).
    let alpha: f64 = 1.0 / 3.0;
    let g0 = evolve(cylinder_profile(3, 1.0, 5.0, 11), 1.0, 5e-4).unwrap();
    let grid: Vec<f64> = match &g0.geometry {
        ModelGeometry::WarpedProduct { grid, .. } => grid.clone(),
        _ => unreachable!(),
    };
    let phi = DiffeoDescriptor::GridMap {
        output: grid.iter().map(|r| alpha.sqrt() * r).collect(),
        input: grid,
    };
    let warped = BreatherSpec::new(g0, alpha, phi).unwrap();
    let rep_w = verify_breather(&warped, &warped.default_samples(), 1e-4).unwrap();

    let pass = (cyl.alpha - 1.0 / 3.0).abs() < 1e-14
        && rep_c.pass
        && (sph.alpha - 1.0 / 3.0).abs() < 1e-14
        && rep_s.pass
        && rep_w.pass;
    report(
        3,
        "breather condition (cylinder/sphere closed form, warped numeric)",
        pass,
        &format!(
            "cyl res {:.2e}, sph res {:.2e}, warped res {:.2e}",
            rep_c.max_residual, rep_s.max_residual, rep_w.max_residual
        ),
    );
}

#[test]
fn criterion_04_ancient_concatenation() {
    let mut pass = true;
    let mut detail = String::new();
    for (name, spec) in [
        ("flat", flat_breather(2, 0.25).unwrap()),
        ("sphere", sphere_breather(2, 1.0).unwrap()),
        ("cylinder", cylinder_breather(3, 1.0).unwrap()),
    ] {
        match build_ancient_flow(&spec, 13, 1e-10, &GluingTolerances::default()) {
            Ok(flow) => {
                if flow.gluing.max_value_residual > 1e-8 {
                    pass = false;
                }
                detail.push_str(&format!("{} glue {:.2e} ", name, flow.gluing.max_value_residual));
            }
            Err(e) => {
                pass = false;
                detail.push_str(&format!("{} failed: {} ", name, e));
            }
        }
    }
    let sph = sphere_breather(2, 1.0).unwrap();
    let flow = build_ancient_flow(&sph, 13, 1e-10, &GluingTolerances::default()).unwrap();
    let top = flow.ladder.taus[13];
    let mut worst: f64 = 0.0;
    for k in 0..50 {
        let tau = top * (k as f64 + 0.5) / 50.0;
        let g = flow.metric_diag(&[0.8], tau);
        worst = worst.max(((g[0] - (1.0 + 2.0 * tau)) / (1.0 + 2.0 * tau)).abs());
    }
    if worst > 1e-8 {
        pass = false;
    }
    report(
        4,
        "junction gluing <= 1e-8; sphere concatenation = global closed form",
        pass,
        &format!("{}r^2 rel dev {:.2e}", detail, worst),
    );
}

#[test]
fn criterion_05_tau_ladder_bounds() {
    let mut pass = true;
    let mut worst: f64 = 0.0;
    for alpha in [0.1f64, 0.25, 1.0 / 3.0, 0.5, 0.9] {
        let ladder = build_ladder(alpha, 50).unwrap();
        for (i, tau) in ladder.taus.iter().enumerate() {
            let lo = alpha.powi(-(i as i32));
            let hi = ladder.c0 * lo;
            let dev = ((lo - tau) / lo).max((tau - hi) / hi).max(0.0);
            worst = worst.max(dev);
            if *tau < lo * (1.0 - 1e-12) || *tau > hi * (1.0 + 1e-12) {
                pass = false;
            }
        }
    }
    report(
        5,
        "tau ladder bounds alpha^-i <= tau_i <= C0 alpha^-i",
        pass,
        &format!("max rel excursion {:.2e}", worst),
    );
}

#[test]
fn criterion_06_type_one_certificate() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut detail = String::new();
    for (name, spec) in [
        ("flat", flat_breather(2, 0.25).unwrap()),
        ("cylinder", cylinder_breather(3, 1.0).unwrap()),
    ] {
        let flow = build_ancient_flow(&spec, 12, 1e-10, &GluingTolerances::default()).unwrap();
        let top = flow.ladder.taus[12];
        let samples: Vec<f64> =
            (0..200).map(|k| 1.0 + (top - 1.0) * k as f64 / 199.0).collect();
        let rep = type_one_certificate(&flow, &samples);
        let sup = rep.rows.iter().map(|r| r.tau_rm).fold(0.0, f64::max);
        if !rep.pass {
            pass = false;
        }
        detail.push_str(&format!("{} sup tau|Rm| {:.4} <= B {:.4} ", name, sup, rep.b));
    }
    let secs = t0.elapsed().as_secs_f64();
    if secs >= 10.0 {
        pass = false;
    }
    report(
        6,
        "Type I bound tau |Rm| <= B = C C0",
        pass,
        &format!("{}{:.1}s", detail, secs),
    );
}

#[test]
fn criterion_07_uniform_l_bound() {
    let spec = flat_breather(2, 0.25).unwrap();
    let flow = build_ancient_flow(&spec, 12, 1e-10, &GluingTolerances::default()).unwrap();
    let y = [2.0, 0.0];
    let sigma = default_sigma(&spec, &y, 16).unwrap();
    let cert =
        l_bound_certificate(&spec, &flow, &y, &sigma, 12, true, &LgeoOptions::default()).unwrap();
    let mut pass = cert.pass;
    for row in &cert.per_i {
        let ln = row.l_num.unwrap();
        if ln > cert.c2 + 1e-9 || ln > row.l_upper + 1e-3 {
            pass = false;
        }
    }
    // Row i holds l(x_{i+1}, tau_{i+1}); i = 9 is the tenth base point.
    let l10 = cert.per_i[9].l_num.unwrap();
    let limit = 4.0 * (1.0 - 0.25) / (4.0 * 0.25); // |y|^2 (1-alpha)/(4 alpha)
    if (l10 - limit).abs() > 1e-2 {
        pass = false;
    }
    report(
        7,
        "uniform reduced-distance bound l <= C2, limit 3 at i=10",
        pass,
        &format!("l(x_10)={:.5} vs {}, C2={:.4}", l10, limit, cert.c2),
    );
}

#[test]
fn criterion_08_rescaled_soliton_proxy() {
    let mut pass = true;
    let mut detail = String::new();

    let cyl = cylinder_breather(3, 1.0).unwrap();
    let flow = build_ancient_flow(&cyl, 10, 1e-10, &GluingTolerances::default()).unwrap();
    let x_pts = base_point_sequence(&cyl, &[0.4, 1.0], 10).unwrap();
    let seq = rescaled_sequence(&flow, &x_pts, 0..=10).unwrap();
    let mut prev = f64::INFINITY;
    let mut res_at_8 = f64::NAN;
    for s in &seq {
        let grid = s.snapshot.default_grid();
        let (fit, rep) = fit_potential(&s.snapshot, &grid, 1.0).unwrap();
        if rep.residual_sup > prev + 1e-12 {
            pass = false;
            detail.push_str(&format!("not decreasing at i={} ", s.index));
        }
        prev = rep.residual_sup;
        if s.index == 8 {
            res_at_8 = rep.residual_sup;
            // Fitted potential ~ c x^2/4 with c the rescaled axial coefficient
            // (the classical cylinder shrinker in these coordinates).
            if let MetricSnapshot::Cylinder { axial_coeff, .. } = s.snapshot {
                if (fit.coeffs[1] - axial_coeff / 4.0).abs() > 1e-6
                    || fit.coeffs[0].abs() > 1e-6
                {
                    pass = false;
                    detail.push_str("potential profile mismatch ");
                }
            }
        }
    }
    if res_at_8 > 1e-3 {
        pass = false;
    }
    detail.push_str(&format!("cyl residual(i=8) {:.2e} ", res_at_8));

    let flat = flat_breather(2, 0.25).unwrap();
    let fflow = build_ancient_flow(&flat, 10, 1e-10, &GluingTolerances::default()).unwrap();
    let fx = base_point_sequence(&flat, &[2.0, 0.0], 10).unwrap();
    let fseq = rescaled_sequence(&fflow, &fx, 0..=10).unwrap();
    let mut worst: f64 = 0.0;
    for s in &fseq {
        let grid = s.snapshot.default_grid();
        let (_, rep) = fit_potential(&s.snapshot, &grid, 1.0).unwrap();
        worst = worst.max(rep.residual_sup);
    }
    if worst > 1e-8 {
        pass = false;
    }
    detail.push_str(&format!("flat worst residual {:.2e}", worst));
    report(8, "rescaled-sequence shrinker residuals", pass, &detail);
}

#[test]
fn criterion_09_conjugate_heat_subsolution() {
    let mut pass = true;
    let mut detail = String::new();
    let opts = HeatResidualOptions::default();

    let flat = BackwardFlow::closed_form(ModelGeometry::EuclideanSpace { n: 2 }, 2.0).unwrap();
    let mut worst_abs: f64 = 0.0;
    for k in 0..20 {
        let rho = 0.3 + 1.2 * k as f64 / 19.0;
        let tau = 0.4 + 0.8 * ((k % 5) as f64) / 4.0;
        let p = SpacetimePoint::new(vec![rho, 0.1 * (k % 3) as f64], tau);
        let r = conjugate_heat_residual(&flat, &[0.0, 0.0], &p, &opts).unwrap();
        worst_abs = worst_abs.max(r.abs());
    }
    if worst_abs > 1e-4 {
        pass = false;
    }
    detail.push_str(&format!("flat |res| {:.2e} ", worst_abs));

    let sph = BackwardFlow::closed_form(ModelGeometry::RoundSphere { n: 2, r0: 1.0 }, 2.0).unwrap();
    let mut worst_s = f64::NEG_INFINITY;
    for k in 0..20 {
        let theta = 0.5 + 1.5 * k as f64 / 19.0;
        let tau = 0.4 + 0.8 * ((k % 5) as f64) / 4.0;
        let r = conjugate_heat_residual(&sph, &[0.0], &SpacetimePoint::new(vec![theta], tau), &opts)
            .unwrap();
        worst_s = worst_s.max(r);
    }
    if worst_s > 1e-4 {
        pass = false;
    }
    detail.push_str(&format!("sphere max res {:.2e} ", worst_s));

    let cyl =
        BackwardFlow::closed_form(ModelGeometry::RoundCylinder { n: 3, r0: 1.0 }, 2.0).unwrap();
    let mut worst_c = f64::NEG_INFINITY;
    for k in 0..20 {
        let theta = 0.5 + 1.2 * k as f64 / 19.0;
        let x = -1.0 + 2.0 * ((k % 7) as f64) / 6.0;
        let tau = 0.5 + 0.5 * ((k % 4) as f64) / 3.0;
        let r =
            conjugate_heat_residual(&cyl, &[0.0, 0.0], &SpacetimePoint::new(vec![theta, x], tau), &opts)
                .unwrap();
        worst_c = worst_c.max(r);
    }
    if worst_c > 1e-4 {
        pass = false;
    }
    detail.push_str(&format!("cylinder max res {:.2e}", worst_c));
    report(9, "conjugate-heat subsolution residuals", pass, &detail);
}

#[test]
fn criterion_10_injectivity_lower_bound() {
    let cyl = cylinder_breather(3, 1.0).unwrap();
    let flow = build_ancient_flow(&cyl, 12, 1e-10, &GluingTolerances::default()).unwrap();
    let x_pts = base_point_sequence(&cyl, &[0.4, 1.0], 12).unwrap();
    let seq = rescaled_sequence(&flow, &x_pts, 0..=12).unwrap();
    let mut inf = f64::INFINITY;
    for s in &seq {
        let inj = injectivity_radius(&s.snapshot, &s.base_point).unwrap();
        inf = inf.min(inj);
    }
    // Oracle: rescaled sphere-factor radius^2 = 2 + 1/tau_i >= 2, so the
    // injectivity radius stays >= pi sqrt(2).
    let delta = std::f64::consts::PI * std::f64::consts::SQRT_2 - 1e-9;
    report(
        10,
        "injectivity radius of rescaled slices bounded below",
        inf > 0.0 && inf >= delta,
        &format!("inf inj {:.6} >= delta {:.6}", inf, delta),
    );
}

//! Command-line front end: backward flows, L-geometry, the breather
//! construction, and soliton detection, driven by a JSON experiment config.
//!
//! Exit codes: 0 success, 1 configuration or domain error, 2 numerical
//! non-convergence. Set LGEOM_LOG=debug for integrator diagnostics.

use clap::{Args, Parser, Subcommand};
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use lgeom::breather::{
    base_point_sequence, build_ancient_flow, default_sigma, cylinder_breather, flat_breather,
    l_bound_certificate, rescaled_sequence, sphere_breather, type_one_certificate, BreatherSpec,
    GluingTolerances,
};
use lgeom::config::{BreatherConfig, ExperimentConfig, GeometryConfig};
use lgeom::csvio::{schema_line, sig12};
use lgeom::error::Error;
use lgeom::geometry::{evolve_with, BackwardFlow, EvolveOptions, FlowModel, ModelGeometry};
use lgeom::lgeo::{reduced_distance, reduced_volume, LgeoOptions, ReducedVolumeOptions};
use lgeom::soliton::{fit_potential, noncollapse_probe};

#[derive(Parser)]
#[command(name = "lgeom", version, about = "L-geometry laboratory for backward Ricci flows")]
struct Cli {
    #[command(subcommand)]
    cmd: Top,
}

#[derive(Subcommand)]
enum Top {
    /// Backward Ricci flow over a model geometry.
    Flow {
        #[command(subcommand)]
        cmd: Run,
    },
    /// Reduced distance and reduced volume.
    Lgeo {
        #[command(subcommand)]
        cmd: Run,
    },
    /// Shrinking breather -> ancient flow with certificates.
    Breather {
        #[command(subcommand)]
        cmd: Run,
    },
    /// Soliton residuals and noncollapsing on the blow-down sequence.
    Detect {
        #[command(subcommand)]
        cmd: Run,
    },
}

#[derive(Subcommand)]
enum Run {
    /// Execute the experiment described by the config file.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV artifacts.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Override the optimizer seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the breather/detect index horizon.
    #[arg(long)]
    i_max: Option<usize>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::Unsupported(_)
        | Error::AlphaOutOfRange(_)
        | Error::OutOfDomain(_)
        | Error::DomainMismatch(_)
        | Error::GridTooCoarse(_)
        | Error::PullbackUndefined(_) => 1,
        _ => 2,
    }
}

fn build_flow(cfg: &ExperimentConfig) -> Result<BackwardFlow, Error> {
    let geometry = cfg.geometry.to_geometry()?;
    match &geometry {
        ModelGeometry::WarpedProduct { .. } => evolve_with(
            geometry,
            cfg.flow.tau_end,
            &EvolveOptions {
                step: cfg.flow.step,
                flow_tolerance: cfg.flow.flow_tolerance,
                ..EvolveOptions::default()
            },
        ),
        _ => BackwardFlow::closed_form(geometry, cfg.flow.tau_end),
    }
}

fn reference_point(g: &ModelGeometry) -> Vec<f64> {
    match g {
        ModelGeometry::EuclideanSpace { n } => vec![0.0; *n],
        ModelGeometry::RoundSphere { .. } => vec![1.0],
        ModelGeometry::RoundCylinder { .. } => vec![1.0, 0.0],
        ModelGeometry::WarpedProduct { grid, .. } => vec![grid[grid.len() / 2], 1.0],
    }
}

fn writer(dir: &PathBuf, name: &str) -> Result<BufWriter<File>, Error> {
    std::fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn cmd_flow(args: &RunArgs) -> Result<(), Error> {
    let cfg = ExperimentConfig::from_path(&args.config)?;
    let flow = build_flow(&cfg)?;
    let p = reference_point(&flow.geometry);
    let mut out = writer(&args.out, "flow.csv")?;
    writeln!(out, "{}", schema_line("flow"))?;
    writeln!(out, "tau,sup_rm,scalar_curvature,g_diag...")?;
    for &tau in &cfg.flow.taus {
        flow.check_tau(tau)?;
        let g = flow.metric_diag(&p, tau);
        let cols: Vec<String> = g.iter().map(|v| sig12(*v)).collect();
        writeln!(
            out,
            "{},{},{},{}",
            sig12(tau),
            sig12(flow.riemann_sup(tau)),
            sig12(flow.scalar_curvature(&p, tau)),
            cols.join(",")
        )?;
        println!(
            "tau={} sup|Rm|={} R={}",
            sig12(tau),
            sig12(flow.riemann_sup(tau)),
            sig12(flow.scalar_curvature(&p, tau))
        );
    }
    if let ModelGeometry::WarpedProduct { .. } = &flow.geometry {
        let mut pout = writer(&args.out, "profile.csv")?;
        flow.write_profile_csv(cfg.flow.tau_end, &mut pout)?;
    }
    Ok(())
}

fn cmd_lgeo(args: &RunArgs) -> Result<(), Error> {
    let cfg = ExperimentConfig::from_path(&args.config)?;
    let lcfg = cfg
        .lgeo
        .clone()
        .ok_or_else(|| Error::Config("missing \"lgeo\" section".into()))?;
    let flow = build_flow(&cfg)?;
    let opts = LgeoOptions {
        segments: lcfg.segments,
        opt_tolerance: lcfg.opt_tolerance,
        restarts: lcfg.restarts,
        seed: args.seed.unwrap_or(lcfg.seed),
        ..LgeoOptions::default()
    };
    let rd = reduced_distance(&flow, &lcfg.base, &lcfg.target, lcfg.tau1, &opts)?;
    println!(
        "l={} grad_norm={} converged={}",
        sig12(rd.value),
        sig12(rd.grad_norm),
        rd.converged
    );
    let mut cout = writer(&args.out, "curve.csv")?;
    rd.curve.write_csv(&mut cout)?;
    let mut vout = writer(&args.out, "lgeo.csv")?;
    writeln!(vout, "{}", schema_line("reduced-volume"))?;
    writeln!(vout, "tau,reduced_volume,quadrature_error")?;
    let vopts = ReducedVolumeOptions {
        lgeo: opts.clone(),
        tail_tolerance: lcfg.tail_tolerance,
        ..ReducedVolumeOptions::default()
    };
    for &tau in &lcfg.reduced_volume_taus {
        let v = reduced_volume(&flow, &lcfg.base, tau, lcfg.cutoff, &vopts)?;
        writeln!(
            vout,
            "{},{},{}",
            sig12(v.tau),
            sig12(v.value),
            sig12(v.quadrature_error)
        )?;
        println!("tau={} V={}", sig12(v.tau), sig12(v.value));
    }
    if !rd.converged {
        return Err(Error::NoConvergence {
            iters: opts.max_iters,
            best: rd.value,
        });
    }
    Ok(())
}

fn build_breather(geo: &GeometryConfig, bcfg: &BreatherConfig) -> Result<BreatherSpec, Error> {
    if !(bcfg.alpha > 0.0 && bcfg.alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(bcfg.alpha));
    }
    // Spheres and cylinders shrink at a rate fixed by the geometry; the
    // configured alpha only matters for the flat dilation family.
    match geo {
        GeometryConfig::Flat { n } => flat_breather(*n, bcfg.alpha),
        GeometryConfig::Sphere { n, r0 } => sphere_breather(*n, *r0),
        GeometryConfig::Cylinder { n, r0 } => cylinder_breather(*n, *r0),
        GeometryConfig::Warped { .. } => Err(Error::Unsupported(
            "breather construction over warped products".into(),
        )),
    }
}

fn cmd_breather(args: &RunArgs) -> Result<(), Error> {
    let cfg = ExperimentConfig::from_path(&args.config)?;
    let bcfg = cfg
        .breather
        .clone()
        .ok_or_else(|| Error::Config("missing \"breather\" section".into()))?;
    let spec = build_breather(&cfg.geometry, &bcfg)?;
    let i_max = args.i_max.unwrap_or(bcfg.i_max);
    let flow = build_ancient_flow(
        &spec,
        i_max,
        bcfg.breather_tolerance,
        &GluingTolerances::default(),
    )?;
    println!(
        "alpha={} C={} B={} glue_value={} glue_deriv={}",
        sig12(spec.alpha),
        sig12(spec.curvature_bound),
        sig12(flow.b_const),
        sig12(flow.gluing.max_value_residual),
        sig12(flow.gluing.max_deriv_residual)
    );
    let top = flow.ladder.taus[i_max];
    let tau_samples: Vec<f64> = (0..200).map(|k| 1.0 + (top - 1.0) * k as f64 / 199.0).collect();
    let t1 = type_one_certificate(&flow, &tau_samples);
    let mut tout = writer(&args.out, "typeone.csv")?;
    writeln!(tout, "{}", schema_line("type-one"))?;
    writeln!(tout, "tau,tau_rm,piece_bound,B")?;
    for row in &t1.rows {
        writeln!(
            tout,
            "{},{},{},{}",
            sig12(row.tau),
            sig12(row.tau_rm),
            sig12(row.piece_bound),
            sig12(t1.b)
        )?;
    }
    let mut opts = LgeoOptions::default();
    if let Some(seed) = args.seed {
        opts.seed = seed;
    }
    let sigma = default_sigma(&spec, &bcfg.y, 16)?;
    let cert = l_bound_certificate(
        &spec,
        &flow,
        &bcfg.y,
        &sigma,
        i_max,
        bcfg.compute_l_num,
        &opts,
    )?;
    let mut cout = writer(&args.out, "certificate.csv")?;
    cert.write_csv(&mut cout)?;
    println!(
        "A={} D={} C1={} C2={} typeone_pass={} cert_pass={}",
        sig12(cert.a_bound),
        sig12(cert.d_value),
        sig12(cert.c1),
        sig12(cert.c2),
        t1.pass,
        cert.pass
    );
    if !t1.pass || !cert.pass {
        return Err(Error::NoConvergence {
            iters: i_max,
            best: cert.per_i.last().map(|r| r.l_upper).unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

fn cmd_detect(args: &RunArgs) -> Result<(), Error> {
    let cfg = ExperimentConfig::from_path(&args.config)?;
    let bcfg = cfg
        .breather
        .clone()
        .ok_or_else(|| Error::Config("missing \"breather\" section".into()))?;
    let dcfg = cfg
        .detect
        .clone()
        .ok_or_else(|| Error::Config("missing \"detect\" section".into()))?;
    let spec = build_breather(&cfg.geometry, &bcfg)?;
    let i_hi = args.i_max.unwrap_or(dcfg.i_hi);
    if dcfg.i_lo > i_hi {
        return Err(Error::Config("detect range is empty".into()));
    }
    let flow = build_ancient_flow(
        &spec,
        i_hi,
        bcfg.breather_tolerance,
        &GluingTolerances::default(),
    )?;
    let x_pts = base_point_sequence(&spec, &bcfg.y, i_hi)?;
    let seq = rescaled_sequence(&flow, &x_pts, dcfg.i_lo..=i_hi)?;
    let mut out = writer(&args.out, "detect.csv")?;
    writeln!(out, "{}", schema_line("detect"))?;
    writeln!(out, "i,tau_i,lambda,residual_sup,residual_l2,vol_ratio,noncollapsed,vacuous")?;
    let mut last_residual = f64::INFINITY;
    for s in &seq {
        let grid = s.snapshot.default_grid();
        let (_, report) = fit_potential(&s.snapshot, &grid, dcfg.lambda)?;
        let tau_i = flow.ladder.taus[s.index];
        let probe = noncollapse_probe(
            &spec.g0,
            &reference_point(&spec.g0.geometry),
            1.0,
            dcfg.probe_radius,
            dcfg.kappa,
        )?;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            s.index,
            sig12(tau_i),
            sig12(dcfg.lambda),
            sig12(report.residual_sup),
            sig12(report.residual_l2),
            sig12(probe.vol_ratio),
            probe.verdict,
            probe.vacuous
        )?;
        println!(
            "i={} tau={} residual_sup={}",
            s.index,
            sig12(tau_i),
            sig12(report.residual_sup)
        );
        last_residual = report.residual_sup;
    }
    if last_residual > dcfg.residual_tolerance {
        return Err(Error::NoConvergence {
            iters: i_hi,
            best: last_residual,
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("LGEOM_LOG")).init();
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Top::Flow { cmd: Run::Run(a) } => cmd_flow(a),
        Top::Lgeo { cmd: Run::Run(a) } => cmd_lgeo(a),
        Top::Breather { cmd: Run::Run(a) } => cmd_breather(a),
        Top::Detect { cmd: Run::Run(a) } => cmd_detect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(exit_code(&e))
        }
    }
}

//! C ABI for the lgeom laboratory.
//!
//! Conventions: every function returns an `LgeomStatus`; results are written
//! through out-pointers. Flows are opaque handles created by the
//! `lgeom_flow_*` constructors and released with `lgeom_flow_free`. All
//! slices are passed as (pointer, length) pairs of C doubles.

use std::os::raw::c_double;

use lgeom::breather::build_ladder;
use lgeom::error::Error;
use lgeom::geometry::{BackwardFlow, FlowModel, ModelGeometry};
use lgeom::lgeo::{reduced_distance, reduced_volume, LgeoOptions, ReducedVolumeOptions};

/// Status codes mirrored from the library's error taxonomy.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LgeomStatus {
    Ok = 0,
    /// Invalid configuration, domain, or argument.
    InvalidArgument = 1,
    /// The computation ran but did not converge or lost accuracy.
    Numerical = 2,
    /// A required pointer was null.
    NullPointer = 3,
}

fn status_of(e: &Error) -> LgeomStatus {
    match e {
        Error::Config(_)
        | Error::Io(_)
        | Error::Unsupported(_)
        | Error::AlphaOutOfRange(_)
        | Error::OutOfDomain(_)
        | Error::DomainMismatch(_)
        | Error::GridTooCoarse(_)
        | Error::PullbackUndefined(_) => LgeomStatus::InvalidArgument,
        _ => LgeomStatus::Numerical,
    }
}

/// Opaque backward-flow handle.
pub struct LgeomFlow {
    inner: BackwardFlow,
}

unsafe fn slice_arg<'a>(ptr: *const c_double, len: usize) -> Option<&'a [f64]> {
    if ptr.is_null() && len > 0 {
        return None;
    }
    if len == 0 {
        return Some(&[]);
    }
    Some(unsafe { std::slice::from_raw_parts(ptr, len) })
}

fn make_flow(geometry: ModelGeometry, tau_end: f64, out: *mut *mut LgeomFlow) -> LgeomStatus {
    if out.is_null() {
        return LgeomStatus::NullPointer;
    }
    match BackwardFlow::closed_form(geometry, tau_end) {
        Ok(flow) => {
            let handle = Box::into_raw(Box::new(LgeomFlow { inner: flow }));
            unsafe { *out = handle };
            LgeomStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Static flat flow on R^n over backward times [0, tau_end].
#[no_mangle]
pub extern "C" fn lgeom_flow_flat(
    n: usize,
    tau_end: c_double,
    out: *mut *mut LgeomFlow,
) -> LgeomStatus {
    make_flow(ModelGeometry::EuclideanSpace { n }, tau_end, out)
}

/// Round-sphere flow with r^2(tau) = r0^2 + 2(n-1) tau.
#[no_mangle]
pub extern "C" fn lgeom_flow_sphere(
    n: usize,
    r0: c_double,
    tau_end: c_double,
    out: *mut *mut LgeomFlow,
) -> LgeomStatus {
    make_flow(ModelGeometry::RoundSphere { n, r0 }, tau_end, out)
}

/// Round-cylinder flow with sphere-factor r^2(tau) = r0^2 + 2(n-2) tau.
#[no_mangle]
pub extern "C" fn lgeom_flow_cylinder(
    n: usize,
    r0: c_double,
    tau_end: c_double,
    out: *mut *mut LgeomFlow,
) -> LgeomStatus {
    make_flow(ModelGeometry::RoundCylinder { n, r0 }, tau_end, out)
}

/// Release a flow handle. Passing null is a no-op.
#[no_mangle]
pub extern "C" fn lgeom_flow_free(flow: *mut LgeomFlow) {
    if !flow.is_null() {
        drop(unsafe { Box::from_raw(flow) });
    }
}

/// Number of reduced coordinates the flow's points carry.
#[no_mangle]
pub extern "C" fn lgeom_flow_coord_dim(flow: *const LgeomFlow, out: *mut usize) -> LgeomStatus {
    if flow.is_null() || out.is_null() {
        return LgeomStatus::NullPointer;
    }
    unsafe { *out = (*flow).inner.coord_dim() };
    LgeomStatus::Ok
}

/// Scalar curvature R at (coords, tau).
#[no_mangle]
pub extern "C" fn lgeom_flow_scalar_curvature(
    flow: *const LgeomFlow,
    coords: *const c_double,
    coords_len: usize,
    tau: c_double,
    out: *mut c_double,
) -> LgeomStatus {
    if flow.is_null() || out.is_null() {
        return LgeomStatus::NullPointer;
    }
    let flow = unsafe { &(*flow).inner };
    let coords = match unsafe { slice_arg(coords, coords_len) } {
        Some(c) => c,
        None => return LgeomStatus::NullPointer,
    };
    if coords.len() != flow.coord_dim() || flow.check_tau(tau).is_err() {
        return LgeomStatus::InvalidArgument;
    }
    unsafe { *out = flow.scalar_curvature(coords, tau) };
    LgeomStatus::Ok
}

/// sup_M |Rm| at backward time tau.
#[no_mangle]
pub extern "C" fn lgeom_flow_riemann_sup(
    flow: *const LgeomFlow,
    tau: c_double,
    out: *mut c_double,
) -> LgeomStatus {
    if flow.is_null() || out.is_null() {
        return LgeomStatus::NullPointer;
    }
    let flow = unsafe { &(*flow).inner };
    if flow.check_tau(tau).is_err() {
        return LgeomStatus::InvalidArgument;
    }
    unsafe { *out = flow.riemann_sup(tau) };
    LgeomStatus::Ok
}

/// Reduced distance l(base -> target, tau1) by curve minimization; `seed`
/// fixes the optimizer restarts for reproducibility.
#[no_mangle]
pub extern "C" fn lgeom_reduced_distance(
    flow: *const LgeomFlow,
    base: *const c_double,
    target: *const c_double,
    coords_len: usize,
    tau1: c_double,
    seed: u64,
    out: *mut c_double,
) -> LgeomStatus {
    if flow.is_null() || out.is_null() {
        return LgeomStatus::NullPointer;
    }
    let flow = unsafe { &(*flow).inner };
    let (base, target) = match (
        unsafe { slice_arg(base, coords_len) },
        unsafe { slice_arg(target, coords_len) },
    ) {
        (Some(b), Some(t)) => (b, t),
        _ => return LgeomStatus::NullPointer,
    };
    let opts = LgeoOptions {
        seed,
        ..LgeoOptions::default()
    };
    match reduced_distance(flow, base, target, tau1, &opts) {
        Ok(rd) => {
            if !rd.converged {
                return LgeomStatus::Numerical;
            }
            unsafe { *out = rd.value };
            LgeomStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Reduced volume V(tau) about `base`, truncating the integral at `cutoff`.
#[no_mangle]
pub extern "C" fn lgeom_reduced_volume(
    flow: *const LgeomFlow,
    base: *const c_double,
    coords_len: usize,
    tau: c_double,
    cutoff: c_double,
    out: *mut c_double,
) -> LgeomStatus {
    if flow.is_null() || out.is_null() {
        return LgeomStatus::NullPointer;
    }
    let flow = unsafe { &(*flow).inner };
    let base = match unsafe { slice_arg(base, coords_len) } {
        Some(b) => b,
        None => return LgeomStatus::NullPointer,
    };
    match reduced_volume(flow, base, tau, cutoff, &ReducedVolumeOptions::default()) {
        Ok(v) => {
            unsafe { *out = v.value };
            LgeomStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Fill `out_taus` (length i_max + 1) with the ladder tau_i = sum alpha^{-j}.
#[no_mangle]
pub extern "C" fn lgeom_tau_ladder(
    alpha: c_double,
    i_max: usize,
    out_taus: *mut c_double,
    out_len: usize,
) -> LgeomStatus {
    if out_taus.is_null() {
        return LgeomStatus::NullPointer;
    }
    if out_len != i_max + 1 {
        return LgeomStatus::InvalidArgument;
    }
    match build_ladder(alpha, i_max) {
        Ok(ladder) => {
            let out = unsafe { std::slice::from_raw_parts_mut(out_taus, out_len) };
            out.copy_from_slice(&ladder.taus);
            LgeomStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_lifecycle_and_curvature() {
        let mut handle: *mut LgeomFlow = std::ptr::null_mut();
        assert_eq!(lgeom_flow_sphere(2, 1.0, 1.0, &mut handle), LgeomStatus::Ok);
        assert!(!handle.is_null());
        let mut v = 0.0;
        assert_eq!(lgeom_flow_riemann_sup(handle, 1.0, &mut v), LgeomStatus::Ok);
        assert!((v - 1.0 / 3.0).abs() < 1e-14);
        assert_eq!(
            lgeom_flow_riemann_sup(handle, 5.0, &mut v),
            LgeomStatus::InvalidArgument
        );
        lgeom_flow_free(handle);
    }

    #[test]
    fn invalid_geometry_reports_invalid_argument() {
        let mut handle: *mut LgeomFlow = std::ptr::null_mut();
        assert_eq!(
            lgeom_flow_sphere(2, -1.0, 1.0, &mut handle),
            LgeomStatus::InvalidArgument
        );
        assert!(handle.is_null());
    }

    #[test]
    fn null_pointers_are_rejected() {
        assert_eq!(
            lgeom_flow_flat(2, 1.0, std::ptr::null_mut()),
            LgeomStatus::NullPointer
        );
        let mut v = 0.0;
        assert_eq!(
            lgeom_flow_riemann_sup(std::ptr::null(), 0.5, &mut v),
            LgeomStatus::NullPointer
        );
    }

    #[test]
    fn reduced_distance_flat_oracle() {
        let mut handle: *mut LgeomFlow = std::ptr::null_mut();
        assert_eq!(lgeom_flow_flat(2, 4.0, &mut handle), LgeomStatus::Ok);
        let base = [0.0f64, 0.0];
        let target = [2.0f64, 0.0];
        let mut l = 0.0;
        assert_eq!(
            lgeom_reduced_distance(handle, base.as_ptr(), target.as_ptr(), 2, 1.0, 7, &mut l),
            LgeomStatus::Ok
        );
        assert!((l - 1.0).abs() < 1e-6, "l = {}", l);
        lgeom_flow_free(handle);
    }

    #[test]
    fn ladder_buffer_contract() {
        let mut taus = [0.0f64; 3];
        assert_eq!(lgeom_tau_ladder(0.5, 2, taus.as_mut_ptr(), 3), LgeomStatus::Ok);
        assert_eq!(taus, [1.0, 3.0, 7.0]);
        assert_eq!(
            lgeom_tau_ladder(0.5, 2, taus.as_mut_ptr(), 2),
            LgeomStatus::InvalidArgument
        );
        assert_eq!(
            lgeom_tau_ladder(1.5, 2, taus.as_mut_ptr(), 3),
            LgeomStatus::InvalidArgument
        );
    }

    #[test]
    fn generated_header_exists_and_declares_the_api() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/lgeom.h");
        let text = std::fs::read_to_string(header).unwrap();
        for sym in [
            "lgeom_flow_flat",
            "lgeom_flow_free",
            "lgeom_reduced_distance",
            "lgeom_reduced_volume",
            "lgeom_tau_ladder",
            "typedef struct LgeomFlow LgeomFlow;",
        ] {
            assert!(text.contains(sym), "header missing {}", sym);
        }
    }
}

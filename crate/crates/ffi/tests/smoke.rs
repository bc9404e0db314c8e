//! Exercises the C entry points the way a foreign binding would.

use std::ffi::CStr;
use std::ptr;

use bosonic_ising_ffi::*;

fn two_site() -> *mut bi_instance {
    let coupling = [0.0, -10.0, -10.0, 0.0];
    let mut handle: *mut bi_instance = ptr::null_mut();
    let status = unsafe { bi_instance_new(2, coupling.as_ptr(), 1, -0.5, &mut handle) };
    assert_eq!(status, bi_status::BI_OK);
    assert!(!handle.is_null());
    handle
}

#[test]
fn instance_lifecycle_and_energy() {
    let handle = two_site();
    unsafe {
        assert_eq!(bi_instance_site_count(handle), 2);
        assert_eq!(bi_instance_bosons_per_site(handle), 1);

        let mut e = 0.0;
        let k = [1u32, 1u32];
        assert_eq!(bi_energy(handle, k.as_ptr(), 2, &mut e), bi_status::BI_OK);
        assert_eq!(e, -11.0);

        let mut h = 0.0;
        assert_eq!(
            bi_local_field(handle, k.as_ptr(), 2, 0, &mut h),
            bi_status::BI_OK
        );
        assert_eq!(h, -10.5);

        bi_instance_free(handle);
    }
}

#[test]
fn invalid_inputs_set_messages() {
    let handle = two_site();
    unsafe {
        let mut e = 0.0;
        let short = [1u32];
        let status = bi_energy(handle, short.as_ptr(), 1, &mut e);
        assert_eq!(status, bi_status::BI_DIMENSION_MISMATCH);
        let msg = CStr::from_ptr(bi_last_error_message());
        assert!(!msg.to_bytes().is_empty());

        let status = bi_energy(ptr::null(), short.as_ptr(), 1, &mut e);
        assert_eq!(status, bi_status::BI_NULL_POINTER);

        let bad = [0.0, 1.0, 2.0, 0.0];
        let mut out: *mut bi_instance = ptr::null_mut();
        let status = bi_instance_new(2, bad.as_ptr(), 1, 0.0, &mut out);
        assert_eq!(status, bi_status::BI_INVALID_ARGUMENT);

        bi_instance_free(handle);
    }
}

#[test]
fn equilibrium_and_temperature_solving() {
    let handle = two_site();
    unsafe {
        let mut spin = [0.0f64; 2];
        let mut summary = bi_equilibrium_summary {
            log_z: 0.0,
            mean_energy: 0.0,
            error_probability: 0.0,
        };
        let status = bi_equilibrium(
            handle,
            0.0,
            bi_statistics::BI_BOSONIC,
            spin.as_mut_ptr(),
            &mut summary,
        );
        assert_eq!(status, bi_status::BI_OK);
        assert!((summary.log_z - 4.0f64.ln()).abs() < 1e-12);
        assert!(spin[0].abs() < 1e-12);
        assert!((summary.error_probability - 0.75).abs() < 1e-12);

        let mut eps = 0.0;
        assert_eq!(
            bi_error_probability(handle, 1.0, bi_statistics::BI_BOSONIC, &mut eps),
            bi_status::BI_OK
        );
        let mut beta = 0.0;
        assert_eq!(
            bi_beta_for_error(handle, eps, bi_statistics::BI_BOSONIC, &mut beta),
            bi_status::BI_OK
        );
        assert!((beta - 1.0).abs() < 1e-6);

        let mut unreachable = 0.0;
        assert_eq!(
            bi_beta_for_error(handle, 0.9, bi_statistics::BI_BOSONIC, &mut unreachable),
            bi_status::BI_TARGET_UNREACHABLE
        );

        bi_instance_free(handle);
    }
}

#[test]
fn ground_state_and_annealing() {
    let handle = two_site();
    unsafe {
        let mut k = [9u32; 2];
        let mut e_min = 0.0;
        assert_eq!(
            bi_ground_energy(handle, k.as_mut_ptr(), &mut e_min),
            bi_status::BI_OK
        );
        assert_eq!(e_min, -11.0);
        assert_eq!(k, [1, 1]);

        let mut residual = 0.0;
        let mut stderr = 0.0;
        let status =
            bi_anneal_residual(handle, 1.0, 1e-3, 5.0, 500, 4, &mut residual, &mut stderr);
        assert_eq!(status, bi_status::BI_OK);
        assert!(residual >= -3.0 * stderr);
        assert!(residual < 22.0); // bounded by the full spectral range

        bi_instance_free(handle);
    }
}

#[test]
fn graph_file_round_trip_and_cut() {
    let dir = std::env::temp_dir().join("bi_ffi_smoke");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("triangle.txt");
    std::fs::write(&path, "0 1\n0 2\n1 2\n").unwrap();
    let c_path = std::ffi::CString::new(path.to_str().unwrap()).unwrap();
    unsafe {
        let mut handle: *mut bi_instance = ptr::null_mut();
        assert_eq!(
            bi_instance_from_graph_file(c_path.as_ptr(), 2, 0.0, &mut handle),
            bi_status::BI_OK
        );
        let mut best = 0.0;
        let status = bi_anneal_best_cut(handle, 1.0, 1e-3, 50.0, 5.0, 10, 7, &mut best);
        assert_eq!(status, bi_status::BI_OK);
        assert_eq!(best, 2.0);
        bi_instance_free(handle);

        let missing = std::ffi::CString::new("/no/such/file").unwrap();
        let mut none: *mut bi_instance = ptr::null_mut();
        assert_eq!(
            bi_instance_from_graph_file(missing.as_ptr(), 2, 0.0, &mut none),
            bi_status::BI_IO_ERROR
        );
    }
}

#[test]
fn version_and_header_exist() {
    let version = unsafe { CStr::from_ptr(bi_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));

    let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("include")
        .join("bosonic_ising.h");
    let text = std::fs::read_to_string(header).expect("generated header present");
    for symbol in [
        "bi_instance_new",
        "bi_equilibrium",
        "bi_beta_for_error",
        "bi_anneal_residual",
        "bi_anneal_best_cut",
        "BI_DEGENERATE_GROUND_STATE",
    ] {
        assert!(text.contains(symbol), "header is missing {symbol}");
    }
}

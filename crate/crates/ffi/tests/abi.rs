use std::ffi::{CStr, CString};
use std::ptr;

use recipbp::bp::steady_state_beliefs_eigen;
use recipbp::exact::exact_marginals_transfer;
use recipbp::io::model_to_json;
use recipbp::model::random_model;
use recipbp_ffi::*;

fn load(json: &str) -> (RecipStatus, *mut RecipModel) {
    let c = CString::new(json).unwrap();
    let mut h = ptr::null_mut();
    let s = unsafe { recip_model_from_json(c.as_ptr(), &mut h) };
    (s, h)
}

fn last_error() -> String {
    let p = recip_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn smooth_matches_library() {
    let m = random_model(3, 5, 4, 0.0).unwrap();
    let (s, h) = load(&model_to_json(&m));
    assert_eq!(s, RecipStatus::Ok);
    let mut opts = std::mem::MaybeUninit::uninit();
    unsafe {
        assert_eq!(recip_bp_options_default(h, opts.as_mut_ptr()), RecipStatus::Ok);
        let opts = opts.assume_init();
        let mut out = vec![0.0; 15];
        let mut res = RecipBpResult::default();
        assert_eq!(recip_smooth(h, opts, out.as_mut_ptr(), out.len(), &mut res), RecipStatus::Ok);
        assert_eq!(res.converged, 1);
        let eig = steady_state_beliefs_eigen(&m).unwrap();
        for k in 0..5 {
            for x in 0..3 {
                assert!((out[k * 3 + x] - eig.get(k)[x]).abs() < 1e-8);
            }
        }
        let mut steady = vec![0.0; 15];
        assert_eq!(recip_steady_state_beliefs(h, steady.as_mut_ptr(), 15), RecipStatus::Ok);
        assert_eq!(steady, eig.to_rows().concat());
        recip_model_free(h);
    }
}

#[test]
fn exact_and_corrected_marginals() {
    let m = random_model(2, 6, 9, 0.0).unwrap();
    let (_, h) = load(&model_to_json(&m));
    let exact = exact_marginals_transfer(&m).unwrap().to_rows().concat();
    unsafe {
        let mut p = vec![0.0; 12];
        assert_eq!(recip_exact_marginals(h, p.as_mut_ptr(), 12), RecipStatus::Ok);
        assert_eq!(p, exact);
        let mut c = vec![0.0; 12];
        assert_eq!(recip_binary_correction(h, c.as_mut_ptr(), 12), RecipStatus::Ok);
        for (a, b) in c.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-8);
        }
        recip_model_free(h);
    }
}

#[test]
fn status_codes() {
    let (s, h) = load("{");
    assert_eq!(s, RecipStatus::Io);
    assert!(h.is_null());
    assert!(!last_error().is_empty());

    let (s, _) = load(r#"{"alphabet_size": 2, "edge_potentials": [[1,1,1,1],[1,1,1,1]]}"#);
    assert_eq!(s, RecipStatus::Validation);

    let (s, h) = load(&model_to_json(&random_model(3, 4, 1, 0.0).unwrap()));
    assert_eq!(s, RecipStatus::Ok);
    unsafe {
        let mut small = vec![0.0; 5];
        assert_eq!(recip_exact_marginals(h, small.as_mut_ptr(), 5), RecipStatus::BufferTooSmall);
        assert!(last_error().contains("12 needed"));
        let mut out = vec![0.0; 12];
        assert_eq!(recip_binary_correction(h, out.as_mut_ptr(), 12), RecipStatus::Validation);
        assert_eq!(recip_exact_marginals(h, ptr::null_mut(), 12), RecipStatus::NullPointer);
        recip_model_free(h);
        recip_model_free(ptr::null_mut());
    }

    let x = [1.0, 0.0];
    let mut d = 0.0;
    assert_eq!(unsafe { recip_hilbert_distance(x.as_ptr(), x.as_ptr(), 2, &mut d) }, RecipStatus::Numerical);
}

#[test]
fn diagnose_json_round_trips() {
    let (_, h) = load(&model_to_json(&random_model(2, 4, 3, 0.0).unwrap()));
    unsafe {
        let mut s = ptr::null_mut();
        assert_eq!(recip_diagnose_json(h, &mut s), RecipStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(v["num_nodes"], 4);
        assert_eq!(v["nodes"].as_array().unwrap().len(), 4);
        recip_string_free(s);
        recip_model_free(h);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = include_str!("../include/recipbp.h");
    for name in [
        "recip_model_from_json",
        "recip_model_free",
        "recip_model_num_nodes",
        "recip_model_alphabet_size",
        "recip_bp_options_default",
        "recip_smooth",
        "recip_exact_marginals",
        "recip_steady_state_beliefs",
        "recip_binary_correction",
        "recip_hilbert_distance",
        "recip_diagnose_json",
        "recip_string_free",
        "recip_last_error_message",
        "typedef struct RecipModel RecipModel",
        "RECIP_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

use std::ffi::{CStr, CString};
use std::ptr;

use chdisguise_ffi::*;

fn last_error() -> String {
    let p = chd_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn fixture(name: &str, param: f64) -> *mut ChdChannel {
    let name = CString::new(name).unwrap();
    let mut ch = ptr::null_mut();
    assert_eq!(
        unsafe { chd_channel_fixture(name.as_ptr(), param, &mut ch) },
        ChdStatus::Ok
    );
    assert!(!ch.is_null());
    ch
}

#[test]
fn channel_lifecycle_and_json_round_trip() {
    let ch = fixture("bitflip", 0.2);
    assert_eq!(unsafe { chd_channel_dim(ch) }, 2);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { chd_channel_to_json(ch, &mut text) }, ChdStatus::Ok);
    assert!(chd_last_error_message().is_null());

    let mut back = ptr::null_mut();
    assert_eq!(
        unsafe { chd_channel_from_json(text, 1e-6, &mut back) },
        ChdStatus::Ok
    );
    let mut text2 = ptr::null_mut();
    assert_eq!(
        unsafe { chd_channel_to_json(back, &mut text2) },
        ChdStatus::Ok
    );
    unsafe {
        assert_eq!(CStr::from_ptr(text), CStr::from_ptr(text2));
        chd_string_free(text);
        chd_string_free(text2);
        chd_channel_free(ch);
        chd_channel_free(back);
        // Null is accepted by every free function.
        chd_channel_free(ptr::null_mut());
        chd_profile_free(ptr::null_mut());
        chd_string_free(ptr::null_mut());
    }
}

#[test]
fn errors_carry_codes_and_messages() {
    let bad = CString::new("{\"dim\": 2}").unwrap();
    let mut ch = ptr::null_mut();
    assert_eq!(
        unsafe { chd_channel_from_json(bad.as_ptr(), 1e-6, &mut ch) },
        ChdStatus::InvalidArgument
    );
    assert!(ch.is_null());
    assert!(last_error().contains("malformed"));

    let name = CString::new("nosuch").unwrap();
    assert_eq!(
        unsafe { chd_channel_fixture(name.as_ptr(), 0.0, &mut ch) },
        ChdStatus::InvalidArgument
    );
    assert!(last_error().contains("nosuch"));

    assert_eq!(
        unsafe { chd_channel_from_json(ptr::null(), 1e-6, &mut ch) },
        ChdStatus::NullPointer
    );
    let mut q = 0.0;
    assert_eq!(
        unsafe { chd_containment_min_q(ptr::null(), ptr::null(), &mut q) },
        ChdStatus::NullPointer
    );
    assert_eq!(
        unsafe { chd_qkd_rate_bound(0.1, 2, ptr::null_mut()) },
        ChdStatus::NullPointer
    );
    assert_eq!(
        unsafe { chd_diamond_bracket(0.7, 2, &mut q, &mut q) },
        ChdStatus::InvalidArgument
    );

    let a = fixture("bitflip", 0.2);
    let b = unsafe {
        let mut b = ptr::null_mut();
        assert_eq!(chd_channel_random(3, 2, 1, &mut b), ChdStatus::Ok);
        b
    };
    assert_eq!(
        unsafe { chd_containment_min_q(a, b, &mut q) },
        ChdStatus::InvalidArgument
    );
    assert!(last_error().contains("dimension"));
    let mut opts = chd_solver_options_default();
    opts.method = 9;
    let mut res = ChdExactResult::default();
    assert_eq!(
        unsafe { chd_exact_solve(a, a, 1.0, &opts, &mut res) },
        ChdStatus::InvalidArgument
    );
    unsafe {
        chd_channel_free(a);
        chd_channel_free(b);
    }
}

#[test]
fn profile_and_exact_solve() {
    let e = fixture("bitflip", 0.2);
    let f = fixture("phaseflip", 0.2);
    let betas = [0.5, 1.0, 2.0];
    let mut prof = ptr::null_mut();
    assert_eq!(
        unsafe { chd_profile_trace(e, f, betas.as_ptr(), betas.len(), &mut prof) },
        ChdStatus::Ok
    );
    assert_eq!(unsafe { chd_profile_len(prof) }, 3);
    let mut s = ChdSample::default();
    assert_eq!(
        unsafe { chd_profile_sample(prof, 1, &mut s) },
        ChdStatus::Ok
    );
    assert_eq!(s.beta, 1.0);
    assert!(s.tight);
    assert!((s.lower.p - 1.0 / 6.0).abs() < 1e-12 && (s.lower.q - 1.0 / 6.0).abs() < 1e-12);
    assert_eq!(
        unsafe { chd_profile_sample(prof, 3, &mut s) },
        ChdStatus::InvalidArgument
    );
    let hull = unsafe { chd_profile_hull_len(prof) };
    assert!(hull >= 2);
    let mut pt = ChdPoint::default();
    assert_eq!(
        unsafe { chd_profile_hull_point(prof, 0, &mut pt) },
        ChdStatus::Ok
    );
    assert_eq!(pt, ChdPoint { p: 0.0, q: 1.0 });
    // The sign change sits exactly on β = 1, so it may register on both sides.
    assert!((1..=2).contains(&unsafe { chd_profile_cusp_count(prof) }));

    let mut res = ChdExactResult::default();
    assert_eq!(
        unsafe { chd_exact_solve(e, f, 1.0, ptr::null(), &mut res) },
        ChdStatus::Ok
    );
    assert!((res.alpha_hat - 0.2).abs() < 1e-9);
    let opts = ChdSolverOptions {
        method: 1,
        ..chd_solver_options_default()
    };
    let x = fixture("bitflip", 1.0);
    let id = fixture("bitflip", 0.0);
    assert_eq!(
        unsafe { chd_exact_solve(id, x, 1.0, &opts, &mut res) },
        ChdStatus::Ok
    );
    assert!((res.point.p - 0.5).abs() < 1e-9 && (res.point.q - 0.5).abs() < 1e-9);
    unsafe {
        chd_profile_free(prof);
        for ch in [e, f, x, id] {
            chd_channel_free(ch);
        }
    }
}

#[test]
fn scalar_relations() {
    let id = fixture("bitflip", 0.0);
    let bf = fixture("bitflip", 0.3);
    let mut q = -1.0;
    assert_eq!(
        unsafe { chd_containment_min_q(bf, id, &mut q) },
        ChdStatus::Ok
    );
    assert!((q - 0.3).abs() < 1e-9);

    let sixth = ChdPoint {
        p: 1.0 / 6.0,
        q: 1.0 / 6.0,
    };
    let mut out = ChdPoint::default();
    assert_eq!(
        unsafe { chd_triangle_combine(sixth, sixth, &mut out) },
        ChdStatus::Ok
    );
    assert!((out.p - 2.0 / 7.0).abs() < 1e-15);
    let one = ChdPoint { p: 0.0, q: 1.0 };
    assert_eq!(
        unsafe { chd_triangle_combine(one, one, &mut out) },
        ChdStatus::InvalidArgument
    );

    let pt = ChdPoint { p: 0.2, q: 0.2 };
    assert_eq!(
        unsafe { chd_compose_mixing(pt, pt, ChdComposeMode::Product, &mut out) },
        ChdStatus::Ok
    );
    assert!((out.p - 0.36).abs() < 1e-15);
    assert_eq!(
        unsafe { chd_compose_mixing(pt, pt, ChdComposeMode::Sum, &mut out) },
        ChdStatus::Ok
    );
    assert!((out.q - 0.4).abs() < 1e-15);

    let (mut lo, mut hi) = (0.0, 0.0);
    assert_eq!(
        unsafe { chd_diamond_bracket(0.5, 2, &mut lo, &mut hi) },
        ChdStatus::Ok
    );
    assert_eq!((lo, hi), (0.25, 2.0));
    let mut bits = 0.0;
    assert_eq!(
        unsafe { chd_qkd_rate_bound(1.0, 4, &mut bits) },
        ChdStatus::Ok
    );
    assert_eq!(bits, 2.0);
    unsafe {
        chd_channel_free(id);
        chd_channel_free(bf);
    }
    let v = unsafe { CStr::from_ptr(chd_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

use std::ffi::{CStr, CString};
use std::ptr;

use evofrac_ffi::*;

const LAW: &str = "dim = 3\nm0 = diag(1, 1, 0)\nfrac 0.3 = diag(0, 1, 0)\nfrac 0.6 = diag(0, -1, 0)\nm1 = diag(0, 0, 1)\n";

fn last_error() -> String {
    let p = evofrac_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

unsafe fn law() -> *mut EvofracLaw {
    let text = CString::new(LAW).unwrap();
    let mut law = ptr::null_mut();
    assert_eq!(evofrac_law_parse(text.as_ptr(), &mut law), EvofracStatus::Ok);
    law
}

unsafe fn projectors(text: &str) -> *mut EvofracProjectors {
    let text = CString::new(text).unwrap();
    let mut proj = ptr::null_mut();
    assert_eq!(evofrac_projectors_parse(text.as_ptr(), &mut proj), EvofracStatus::Ok);
    proj
}

#[test]
fn check_through_handles() {
    unsafe {
        let law = law();
        assert_eq!(evofrac_law_dim(law), 3);
        let good = projectors("dim = 3\np0 = diag(1,0,0)\nf0 = diag(0,1,0)\nq0 = diag(0,0,1)\n");
        let merged = projectors("dim = 3\np0 = diag(1,1,0)\nq0 = diag(0,0,1)\n");
        let mut report = ptr::null_mut();
        assert_eq!(evofrac_check(law, good, 1e-3, 1e6, &mut report), EvofracStatus::Ok);
        assert_eq!(evofrac_report_passed(report), 1);
        assert!(evofrac_report_rho_threshold(report) > 0.0);
        assert!(evofrac_report_c0_estimate(report) > 0.0);
        let text = CStr::from_ptr(evofrac_report_text(report)).to_str().unwrap();
        assert!(text.ends_with("well-posed"));
        evofrac_report_free(report);

        assert_eq!(evofrac_check(law, merged, 1e-3, 1e6, &mut report), EvofracStatus::Ok);
        assert_eq!(evofrac_report_passed(report), 0);
        evofrac_report_free(report);
        evofrac_projectors_free(good);
        evofrac_projectors_free(merged);
        evofrac_law_free(law);
    }
}

#[test]
fn symbol_matches_closed_form() {
    unsafe {
        let law = law();
        let mut buf = [0.0f64; 18];
        assert_eq!(evofrac_law_symbol(law, 0.0, 4.0, buf.as_mut_ptr(), buf.len()), EvofracStatus::Ok);
        // M(z) = M0 + z^0.3 M_0.3 + z^0.6 M_0.6 + z M1 at z = 1/4
        let expect = 1.0 + 0.25f64.powf(0.3) - 0.25f64.powf(0.6);
        assert!((buf[2 * 4] - expect).abs() < 1e-14);
        assert_eq!((buf[0], buf[2 * 8]), (1.0, 0.25));
        assert_eq!(evofrac_law_symbol(law, 0.0, 4.0, buf.as_mut_ptr(), 17), EvofracStatus::InvalidArgument);
        evofrac_law_free(law);
    }
}

#[test]
fn solve_and_fractional_power() {
    unsafe {
        let n = 1024;
        let mut grid = ptr::null_mut();
        assert_eq!(evofrac_grid_new(-2.0, 16.0 / n as f64, n, 2.0, &mut grid), EvofracStatus::Ok);
        let mut values = vec![0.0; 2 * n * 3];
        for j in 0..n {
            let t = evofrac_grid_time(grid, j);
            let v = evofrac::timegrid::profiles::bump(t, 0.0, 3.0);
            for i in 0..3 {
                values[2 * (3 * j + i)] = v;
            }
        }
        let mut f = ptr::null_mut();
        assert_eq!(evofrac_signal_new(grid, 3, values.as_ptr(), &mut f), EvofracStatus::Ok);
        assert_eq!((evofrac_signal_dim(f), evofrac_signal_n_steps(f)), (3, n));

        let law = law();
        let mut a = ptr::null_mut();
        assert_eq!(evofrac_spatial_zero(3, &mut a), EvofracStatus::Ok);
        let mut u = ptr::null_mut();
        let mut residual = f64::NAN;
        assert_eq!(evofrac_solve(law, a, f, &mut residual, &mut u), EvofracStatus::Ok);
        assert!(residual < 1e-10);

        // two half integrals make one full integral
        let mut half = ptr::null_mut();
        let mut again = ptr::null_mut();
        let mut whole = ptr::null_mut();
        assert_eq!(evofrac_frac_apply(-0.5, u, &mut half), EvofracStatus::Ok);
        assert_eq!(evofrac_frac_apply(-0.5, half, &mut again), EvofracStatus::Ok);
        assert_eq!(evofrac_frac_apply(-1.0, u, &mut whole), EvofracStatus::Ok);
        let mut x = vec![0.0; 2 * n * 3];
        let mut y = vec![0.0; 2 * n * 3];
        assert_eq!(evofrac_signal_values(again, x.as_mut_ptr(), x.len()), EvofracStatus::Ok);
        assert_eq!(evofrac_signal_values(whole, y.as_mut_ptr(), y.len()), EvofracStatus::Ok);
        // compare with the exp(-rho t) weight the transform is exact in
        let w = |k: usize| (-2.0 * evofrac_grid_time(grid, k / 6)).exp();
        let diff = (0..x.len()).map(|k| w(k) * (x[k] - y[k]).abs()).fold(0.0, f64::max);
        let scale = (0..y.len()).map(|k| w(k) * y[k].abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-10 * scale, "{diff}");

        for s in [f, u, half, again, whole] {
            evofrac_signal_free(s);
        }
        evofrac_spatial_free(a);
        evofrac_law_free(law);
        evofrac_grid_free(grid);
    }
}

#[test]
fn errors_carry_status_and_message() {
    unsafe {
        let mut grid = ptr::null_mut();
        assert_eq!(evofrac_grid_new(0.0, 0.1, 1000, 1.0, &mut grid), EvofracStatus::Grid);
        assert!(grid.is_null());
        assert!(last_error().starts_with("timegrid:"));

        let bad = CString::new("dim = 2\nm0 = diag(1)\n").unwrap();
        let mut law = ptr::null_mut();
        assert_eq!(evofrac_law_parse(bad.as_ptr(), &mut law), EvofracStatus::Material);
        assert!(last_error().starts_with("material:"));
        assert_eq!(evofrac_law_parse(ptr::null(), &mut law), EvofracStatus::NullPointer);

        let mut a = ptr::null_mut();
        assert_eq!(evofrac_spatial_grad_div(1, 0.5, &mut a), EvofracStatus::Spatial);
        assert_eq!(evofrac_spatial_elasticity(4, 0.25, &mut a), EvofracStatus::Ok);
        assert_eq!(evofrac_spatial_dim(a), 7);
        assert!(evofrac_last_error().is_null());

        // dimension mismatch between law and operator
        let law = self::law();
        let mut g = ptr::null_mut();
        assert_eq!(evofrac_grid_new(0.0, 0.1, 64, 1.0, &mut g), EvofracStatus::Ok);
        let zeros = vec![0.0; 2 * 64 * 3];
        let mut f = ptr::null_mut();
        assert_eq!(evofrac_signal_new(g, 3, zeros.as_ptr(), &mut f), EvofracStatus::Ok);
        let mut u = ptr::null_mut();
        assert_eq!(evofrac_solve(law, a, f, ptr::null_mut(), &mut u), EvofracStatus::Solver);
        assert!(last_error().starts_with("solver:"));

        evofrac_signal_free(f);
        evofrac_grid_free(g);
        evofrac_law_free(law);
        evofrac_spatial_free(a);
        evofrac_law_free(ptr::null_mut());
        assert!(!CStr::from_ptr(evofrac_version()).to_str().unwrap().is_empty());
    }
}

use std::ffi::{CStr, CString};
use std::ptr;

use dcc_sim_ffi::*;

fn last_error() -> String {
    let p = dcc_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

/// A short differentiated single-hop DPA run.
fn quick_results() -> *mut DccResults {
    unsafe {
        let mut cfg = ptr::null_mut();
        assert_eq!(
            dcc_config_new(DccScenario::SingleHop, DccMode::Dpa, &mut cfg),
            DccStatus::Ok
        );
        assert_eq!(dcc_config_set_duration(cfg, 6.0, 2.0), DccStatus::Ok);
        assert_eq!(
            dcc_config_set_priorities(cfg, DccPriorities::Differentiated),
            DccStatus::Ok
        );
        assert_eq!(dcc_config_set_seed(cfg, 5), DccStatus::Ok);
        let mut res = ptr::null_mut();
        assert_eq!(dcc_simulate(cfg, &mut res), DccStatus::Ok);
        dcc_config_free(cfg);
        res
    }
}

#[test]
fn simulate_and_query() {
    let res = quick_results();
    unsafe {
        let mut v = -1.0;
        assert_eq!(
            dcc_results_satisfaction(res, c("type1").as_ptr(), c("s1").as_ptr(), &mut v),
            DccStatus::Ok
        );
        assert!((0.0..=1.0).contains(&v));
        assert_eq!(
            dcc_results_mean_delta(res, c("type3").as_ptr(), &mut v),
            DccStatus::Ok
        );
        assert!((0.0006..=0.03).contains(&v));
        let (mut p5, mut p95) = (0.0, 0.0);
        assert_eq!(dcc_results_cbr_percentile(res, 5.0, &mut p5), DccStatus::Ok);
        assert_eq!(
            dcc_results_cbr_percentile(res, 95.0, &mut p95),
            DccStatus::Ok
        );
        assert!(p5 <= p95);

        let mut json = ptr::null_mut();
        assert_eq!(dcc_results_summary_json(res, &mut json), DccStatus::Ok);
        let doc: serde_json::Value =
            serde_json::from_str(CStr::from_ptr(json).to_str().unwrap()).unwrap();
        assert_eq!(doc["seed"], 5);
        assert_eq!(doc["config"]["priorities"], "differentiated");
        dcc_string_free(json);
        dcc_results_free(res);
    }
}

#[test]
fn export_writes_the_result_files() {
    let res = quick_results();
    let dir = tempfile::tempdir().unwrap();
    let path = c(dir.path().to_str().unwrap());
    unsafe {
        assert_eq!(dcc_results_export(res, path.as_ptr()), DccStatus::Ok);
        dcc_results_free(res);
    }
    for f in [
        "cbr_timeseries.csv",
        "delta_timeseries.csv",
        "satisfaction.csv",
        "summary.json",
    ] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
}

#[test]
fn unknown_groups_are_not_found() {
    let res = quick_results();
    unsafe {
        let mut v = 0.0;
        let st =
            dcc_results_satisfaction(res, c("cas_cps_low").as_ptr(), c("cas").as_ptr(), &mut v);
        assert_eq!(st, DccStatus::NotFound);
        assert!(last_error().contains("cas_cps_low"));
        assert_eq!(
            dcc_results_satisfaction(res, c("type1").as_ptr(), c("s3").as_ptr(), &mut v),
            DccStatus::NotFound
        );
        assert_eq!(
            dcc_results_mean_delta(res, c("nobody").as_ptr(), &mut v),
            DccStatus::NotFound
        );
        assert_eq!(
            dcc_results_cbr_percentile(res, 101.0, &mut v),
            DccStatus::InvalidArgument
        );
        dcc_results_free(res);
    }
}

#[test]
fn null_arguments_are_reported() {
    unsafe {
        let mut v = 0.0;
        assert_eq!(
            dcc_config_new(DccScenario::Highway, DccMode::Dpa, ptr::null_mut()),
            DccStatus::NullPointer
        );
        assert_eq!(
            dcc_config_set_seed(ptr::null_mut(), 1),
            DccStatus::NullPointer
        );
        assert!(last_error().contains("config"));
        let mut res = ptr::null_mut();
        assert_eq!(dcc_simulate(ptr::null(), &mut res), DccStatus::NullPointer);
        assert!(res.is_null());
        assert_eq!(
            dcc_results_mean_delta(ptr::null(), c("type1").as_ptr(), &mut v),
            DccStatus::NullPointer
        );
        assert_eq!(
            dcc_limeric_update(0.01, 0.0012, 0.5, ptr::null_mut()),
            DccStatus::NullPointer
        );
        assert_eq!(
            dcc_compute_beta(ptr::null(), ptr::null(), 2, &mut v),
            DccStatus::NullPointer
        );
        dcc_config_free(ptr::null_mut());
        dcc_results_free(ptr::null_mut());
        dcc_string_free(ptr::null_mut());
    }
}

#[test]
fn config_errors_carry_the_key() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let text = c("scenario = \"single_hop\"\nmode = \"dpa\"\n[controller]\ncbr_target = 1.5\n");
        assert_eq!(
            dcc_config_from_toml(text.as_ptr(), &mut cfg),
            DccStatus::Config
        );
        assert!(cfg.is_null());
        assert!(last_error().contains("cbr_target"));

        let missing = c("/nonexistent/scenario.toml");
        assert_eq!(
            dcc_config_from_file(missing.as_ptr(), &mut cfg),
            DccStatus::Io
        );

        let bad_utf8 = [0xffu8, 0xfe, 0];
        assert_eq!(
            dcc_config_from_toml(bad_utf8.as_ptr().cast(), &mut cfg),
            DccStatus::InvalidUtf8
        );

        let ok = c("scenario = \"highway\"\nmode = \"adaptive_dcc\"\n");
        assert_eq!(dcc_config_from_toml(ok.as_ptr(), &mut cfg), DccStatus::Ok);
        assert_eq!(
            dcc_config_set_duration(cfg, -1.0, 0.0),
            DccStatus::InvalidArgument
        );
        dcc_config_free(cfg);
    }
}

#[test]
fn simulation_rejects_invalid_configs() {
    unsafe {
        let mut cfg = ptr::null_mut();
        let text = c("scenario = \"single_hop\"\nmode = \"dpa\"\n[single_hop]\ntype1 = 5\n");
        assert_eq!(
            dcc_config_from_toml(text.as_ptr(), &mut cfg),
            DccStatus::Config
        );
        assert!(last_error().contains("single_hop.vehicles"));
    }
}

#[test]
fn pure_helpers() {
    assert!((dcc_airtime_of(250) - (40e-6 + 8.0 * 310.0 / 6e6)).abs() < 1e-15);
    assert_eq!(dcc_voi(75.0, 150.0), 0.5);
    assert_eq!(dcc_voi(200.0, 150.0), 0.0);
    unsafe {
        let mut d = 0.0;
        assert_eq!(dcc_limeric_update(0.01, 0.0012, 0.5, &mut d), DccStatus::Ok);
        let expected = 0.984 * 0.01 + 0.0012 * 0.18;
        assert!((d - expected).abs() < 1e-15);
        assert_eq!(
            dcc_limeric_update(0.01, 0.0012, 1.5, &mut d),
            DccStatus::InvalidArgument
        );

        let rates = [17_000.0, 34_000.0, 1e6];
        let served = [true, true, false];
        let mut beta = 0.0;
        assert_eq!(
            dcc_compute_beta(rates.as_ptr(), served.as_ptr(), 3, &mut beta),
            DccStatus::Ok
        );
        assert!((beta - 0.0036).abs() < 1e-15);
        assert_eq!(
            dcc_compute_beta(ptr::null(), ptr::null(), 0, &mut beta),
            DccStatus::Ok
        );
        assert!((beta - 0.0012 * 0.01).abs() < 1e-18);
    }
}

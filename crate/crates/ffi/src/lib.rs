//! C ABI for the `dcc-sim` simulator.
//!
//! Configurations and results are opaque handles created and destroyed by
//! this library. Every fallible call returns a [`DccStatus`]; on failure the
//! message of the last error on the calling thread is available from
//! [`dcc_last_error_message`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use dcc_sim::channel::{airtime_of, ChannelParams};
use dcc_sim::config::{PriorityScheme, ScenarioConfig, ScenarioKind};
use dcc_sim::control::{
    BetaPolicy, ControllerMode, ControllerParams, ControllerState, Demand, DemandSet,
};
use dcc_sim::export::{export, Summary, Tables};
use dcc_sim::metrics::{nearest_rank, MetricsStore, VehicleClass};
use dcc_sim::services::{voi, ServiceKind};
use dcc_sim::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DccStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    Config = 4,
    Io = 5,
    NotFound = 6,
    Simulation = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DccScenario {
    SingleHop = 0,
    Highway = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DccMode {
    AdaptiveDcc = 0,
    Dpa = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DccPriorities {
    Equal = 0,
    Differentiated = 1,
}

/// Opaque scenario configuration.
pub struct DccConfig {
    inner: ScenarioConfig,
}

/// Opaque results of one run.
pub struct DccResults {
    metrics: MetricsStore,
    summary: Summary,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: impl Into<String>) {
    let text = message.into().replace('\0', " ");
    let c = CString::new(text).expect("interior NULs were replaced");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: DccStatus, message: impl Into<String>) -> DccStatus {
    set_error(message);
    status
}

fn status_of(err: &Error) -> DccStatus {
    match err {
        Error::Config(_) => DccStatus::Config,
        Error::Io { .. } | Error::Csv { .. } | Error::Json { .. } | Error::Format { .. } => {
            DccStatus::Io
        }
        Error::Control(_) => DccStatus::Simulation,
    }
}

/// Runs `f`, converting panics into [`DccStatus::Panic`].
fn guard(f: impl FnOnce() -> DccStatus) -> DccStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            fail(DccStatus::Panic, format!("internal panic: {msg}"))
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, DccStatus> {
    if p.is_null() {
        return Err(fail(DccStatus::NullPointer, format!("`{name}` is NULL")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        fail(
            DccStatus::InvalidUtf8,
            format!("`{name}` is not valid UTF-8"),
        )
    })
}

/// Message of the last error raised on this thread, or NULL if none.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn dcc_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Creates a configuration with all defaults for a scenario and controller.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn dcc_config_new(
    scenario: DccScenario,
    mode: DccMode,
    out: *mut *mut DccConfig,
) -> DccStatus {
    guard(|| {
        if out.is_null() {
            return fail(DccStatus::NullPointer, "`out` is NULL");
        }
        let scenario = match scenario {
            DccScenario::SingleHop => ScenarioKind::SingleHop,
            DccScenario::Highway => ScenarioKind::Highway,
        };
        let mode = match mode {
            DccMode::AdaptiveDcc => ControllerMode::AdaptiveDcc,
            DccMode::Dpa => ControllerMode::Dpa,
        };
        let inner = ScenarioConfig::new(scenario, mode);
        *out = Box::into_raw(Box::new(DccConfig { inner }));
        DccStatus::Ok
    })
}

/// Parses a TOML configuration.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcc_config_from_toml(
    toml: *const c_char,
    out: *mut *mut DccConfig,
) -> DccStatus {
    guard(|| {
        if out.is_null() {
            return fail(DccStatus::NullPointer, "`out` is NULL");
        }
        let text = match str_arg(toml, "toml") {
            Ok(t) => t,
            Err(s) => return s,
        };
        match ScenarioConfig::from_toml(text) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DccConfig { inner }));
                DccStatus::Ok
            }
            Err(e) => fail(DccStatus::Config, e.to_string()),
        }
    })
}

/// Reads and parses a TOML configuration file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcc_config_from_file(
    path: *const c_char,
    out: *mut *mut DccConfig,
) -> DccStatus {
    guard(|| {
        if out.is_null() {
            return fail(DccStatus::NullPointer, "`out` is NULL");
        }
        let path = match str_arg(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match dcc_sim::parse_config(Path::new(path)) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(DccConfig { inner }));
                DccStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `config` must be a handle from this library or NULL.
#[no_mangle]
pub unsafe extern "C" fn dcc_config_set_seed(config: *mut DccConfig, seed: u64) -> DccStatus {
    match config.as_mut() {
        Some(c) => {
            c.inner.seed = seed;
            DccStatus::Ok
        }
        None => fail(DccStatus::NullPointer, "`config` is NULL"),
    }
}

/// # Safety
/// `config` must be a handle from this library or NULL.
#[no_mangle]
pub unsafe extern "C" fn dcc_config_set_duration(
    config: *mut DccConfig,
    duration_s: f64,
    warmup_s: f64,
) -> DccStatus {
    let Some(c) = config.as_mut() else {
        return fail(DccStatus::NullPointer, "`config` is NULL");
    };
    if !(duration_s >= 0.0 && duration_s.is_finite() && warmup_s >= 0.0) {
        return fail(
            DccStatus::InvalidArgument,
            "duration_s must be finite and >= 0, warmup_s >= 0",
        );
    }
    c.inner.duration_s = duration_s;
    c.inner.warmup_s = warmup_s;
    DccStatus::Ok
}

/// # Safety
/// `config` must be a handle from this library or NULL.
#[no_mangle]
pub unsafe extern "C" fn dcc_config_set_priorities(
    config: *mut DccConfig,
    priorities: DccPriorities,
) -> DccStatus {
    let Some(c) = config.as_mut() else {
        return fail(DccStatus::NullPointer, "`config` is NULL");
    };
    c.inner.priorities = match priorities {
        DccPriorities::Equal => PriorityScheme::Equal,
        DccPriorities::Differentiated => PriorityScheme::Differentiated,
    };
    DccStatus::Ok
}

/// # Safety
/// `config` must be a handle from this library or NULL; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn dcc_config_free(config: *mut DccConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Runs the configured scenario to completion.
///
/// # Safety
/// `config` must be a handle from this library; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcc_simulate(
    config: *const DccConfig,
    out: *mut *mut DccResults,
) -> DccStatus {
    guard(|| {
        let Some(c) = config.as_ref() else {
            return fail(DccStatus::NullPointer, "`config` is NULL");
        };
        if out.is_null() {
            return fail(DccStatus::NullPointer, "`out` is NULL");
        }
        match dcc_sim::run(&c.inner) {
            Ok(metrics) => {
                let tables = Tables::from_metrics(&metrics);
                let summary = Summary::new(&metrics, &tables);
                *out = Box::into_raw(Box::new(DccResults { metrics, summary }));
                DccStatus::Ok
            }
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

/// # Safety
/// `results` must be a handle from this library or NULL; it must not be used
/// afterwards.
#[no_mangle]
pub unsafe extern "C" fn dcc_results_free(results: *mut DccResults) {
    if !results.is_null() {
        drop(Box::from_raw(results));
    }
}

/// Writes the CSV files and `summary.json` into `out_dir`.
///
/// # Safety
/// `results` must be a handle from this library; `out_dir` a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn dcc_results_export(
    results: *const DccResults,
    out_dir: *const c_char,
) -> DccStatus {
    guard(|| {
        let Some(r) = results.as_ref() else {
            return fail(DccStatus::NullPointer, "`results` is NULL");
        };
        let dir = match str_arg(out_dir, "out_dir") {
            Ok(d) => d,
            Err(s) => return s,
        };
        match export(&r.metrics, Path::new(dir)) {
            Ok(_) => DccStatus::Ok,
            Err(e) => fail(status_of(&e), e.to_string()),
        }
    })
}

fn service_from_label(label: &str) -> Option<ServiceKind> {
    [
        ServiceKind::Generic1,
        ServiceKind::Generic2,
        ServiceKind::Generic3,
        ServiceKind::Cas,
        ServiceKind::Cps,
    ]
    .into_iter()
    .find(|k| k.label() == label)
}

/// Post-warm-up payload satisfaction of `service` ("s1", "s2", "s3", "cas",
/// "cps") on vehicles of `group` ("type1".."type3", "cas_cps_low",
/// "cas_cps_high").
///
/// # Safety
/// `results` must be a handle from this library; strings NUL-terminated;
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcc_results_satisfaction(
    results: *const DccResults,
    group: *const c_char,
    service: *const c_char,
    out: *mut f64,
) -> DccStatus {
    guard(|| {
        let Some(r) = results.as_ref() else {
            return fail(DccStatus::NullPointer, "`results` is NULL");
        };
        if out.is_null() {
            return fail(DccStatus::NullPointer, "`out` is NULL");
        }
        let (group, service) = match (str_arg(group, "group"), str_arg(service, "service")) {
            (Ok(g), Ok(s)) => (g, s),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let class = VehicleClass::from_label(group);
        let kind = service_from_label(service);
        match class
            .zip(kind)
            .and_then(|(c, k)| r.metrics.satisfaction_of(c, k))
        {
            Some(v) => {
                *out = v;
                DccStatus::Ok
            }
            None => fail(
                DccStatus::NotFound,
                format!("no service `{service}` on vehicles of group `{group}`"),
            ),
        }
    })
}

/// Post-warm-up mean delta of vehicles of `group`.
///
/// # Safety
/// As for [`dcc_results_satisfaction`].
#[no_mangle]
pub unsafe extern "C" fn dcc_results_mean_delta(
    results: *const DccResults,
    group: *const c_char,
    out: *mut f64,
) -> DccStatus {
    guard(|| {
        let Some(r) = results.as_ref() else {
            return fail(DccStatus::NullPointer, "`results` is NULL");
        };
        if out.is_null() {
            return fail(DccStatus::NullPointer, "`out` is NULL");
        }
        let group = match str_arg(group, "group") {
            Ok(g) => g,
            Err(s) => return s,
        };
        match r.summary.aggregates.delta_by_type.get(group) {
            Some(v) => {
                *out = *v;
                DccStatus::Ok
            }
            None => fail(
                DccStatus::NotFound,
                format!("no vehicles of group `{group}`"),
            ),
        }
    })
}

/// Nearest-rank percentile `pct` (0..=100) of all post-warm-up CBR samples.
///
/// # Safety
/// `results` must be a handle from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcc_results_cbr_percentile(
    results: *const DccResults,
    pct: f64,
    out: *mut f64,
) -> DccStatus {
    guard(|| {
        let Some(r) = results.as_ref() else {
            return fail(DccStatus::NullPointer, "`results` is NULL");
        };
        if out.is_null() {
            return fail(DccStatus::NullPointer, "`out` is NULL");
        }
        if !(0.0..=100.0).contains(&pct) {
            return fail(DccStatus::InvalidArgument, "pct must be in [0, 100]");
        }
        let mut cbr: Vec<f64> = r.metrics.steady_control().map(|s| s.cbr).collect();
        if cbr.is_empty() {
            return fail(DccStatus::NotFound, "no CBR samples after warm-up");
        }
        cbr.sort_by(f64::total_cmp);
        *out = nearest_rank(&cbr, pct);
        DccStatus::Ok
    })
}

/// The run's `summary.json` document. Release it with [`dcc_string_free`].
///
/// # Safety
/// `results` must be a handle from this library; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn dcc_results_summary_json(
    results: *const DccResults,
    out: *mut *mut c_char,
) -> DccStatus {
    guard(|| {
        let Some(r) = results.as_ref() else {
            return fail(DccStatus::NullPointer, "`results` is NULL");
        };
        if out.is_null() {
            return fail(DccStatus::NullPointer, "`out` is NULL");
        }
        let json = serde_json::to_string(&r.summary).expect("summary serializes");
        *out = CString::new(json).expect("JSON has no NUL").into_raw();
        DccStatus::Ok
    })
}

/// # Safety
/// `s` must come from this library or be NULL.
#[no_mangle]
pub unsafe extern "C" fn dcc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Airtime in seconds of a `size_bytes` payload with the default channel
/// parameters (6 Mbit/s, 60 B of headers, 40 us fixed overhead).
#[no_mangle]
pub extern "C" fn dcc_airtime_of(size_bytes: u32) -> f64 {
    airtime_of(size_bytes, &ChannelParams::default())
}

/// Value of information of an object at `distance` for a sensor of range
/// `d_max`.
#[no_mangle]
pub extern "C" fn dcc_voi(distance: f64, d_max: f64) -> f64 {
    voi(distance, d_max)
}

/// One LIMERIC step with the default controller parameters and the given
/// gain `beta`. Writes the new delta to `out`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcc_limeric_update(
    delta: f64,
    beta: f64,
    cbr: f64,
    out: *mut f64,
) -> DccStatus {
    if out.is_null() {
        return fail(DccStatus::NullPointer, "`out` is NULL");
    }
    if !(0.0..=1.0).contains(&cbr) || beta.is_nan() || beta < 0.0 || !delta.is_finite() {
        return fail(
            DccStatus::InvalidArgument,
            "cbr must be in [0, 1], beta >= 0 and delta finite",
        );
    }
    let mut state = ControllerState::new(&ControllerParams::default(), ControllerMode::Dpa)
        .expect("default parameters are valid");
    state.delta = delta;
    state.beta = beta;
    *out = state.limeric_update(cbr);
    DccStatus::Ok
}

/// Demand-proportional gain for a vehicle whose services require
/// `rates_bps[i]`, counting only entries with `served[i]` set. Uses the
/// default base gain and reference rate.
///
/// # Safety
/// `rates_bps` and `served` must point to `n` readable elements (or be NULL
/// when `n` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dcc_compute_beta(
    rates_bps: *const f64,
    served: *const bool,
    n: usize,
    out: *mut f64,
) -> DccStatus {
    if out.is_null() || (n > 0 && (rates_bps.is_null() || served.is_null())) {
        return fail(DccStatus::NullPointer, "NULL array or `out`");
    }
    let (rates, served) = if n == 0 {
        (&[][..], &[][..])
    } else {
        (
            std::slice::from_raw_parts(rates_bps, n),
            std::slice::from_raw_parts(served, n),
        )
    };
    let demands = rates
        .iter()
        .zip(served)
        .enumerate()
        .map(|(i, (&rate, &served))| Demand {
            service_id: i,
            priority: 0,
            required_rate: rate,
            required_airtime: 0.0,
            served_last_epoch: served,
        })
        .collect();
    match DemandSet::new(demands) {
        Ok(set) => {
            let policy: BetaPolicy = ControllerParams::default().beta_policy();
            *out = policy.compute_beta(&set);
            DccStatus::Ok
        }
        Err(e) => fail(DccStatus::InvalidArgument, e.to_string()),
    }
}

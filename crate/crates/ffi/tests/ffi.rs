use std::ffi::{CStr, CString};
use std::ptr;
use vesonet_ffi::*;

const SMALL: &str = r#"{
  "network": {"kind": "grid", "rows": 3, "cols": 3},
  "vehicles": {"consumers": 6, "providers": 3},
  "rsus": [{"segment": 0, "offset_m": 10}],
  "run_length": 200,
  "request_rate": 0.05
}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(vesonet_last_error()) }.to_string_lossy().into_owned()
}

fn scenario(json: &str) -> Result<*mut VesonetScenario, (VesonetStatus, String)> {
    let json = CString::new(json).unwrap();
    let mut sc = ptr::null_mut();
    match unsafe { vesonet_scenario_from_json(json.as_ptr(), ptr::null(), &mut sc) } {
        VesonetStatus::Ok => Ok(sc),
        s => Err((s, last_error())),
    }
}

fn events(run: *const VesonetRun) -> String {
    let mut needed = 0usize;
    let s = unsafe { vesonet_run_events_csv(run, ptr::null_mut(), 0, &mut needed) };
    assert_eq!(s, VesonetStatus::BufferTooSmall);
    let mut buf = vec![0u8; needed];
    let s = unsafe { vesonet_run_events_csv(run, buf.as_mut_ptr().cast(), buf.len(), &mut needed) };
    assert_eq!(s, VesonetStatus::Ok);
    CStr::from_bytes_with_nul(&buf).unwrap().to_str().unwrap().to_string()
}

#[test]
fn run_metrics_and_audit_through_c_abi() {
    let sc = scenario(SMALL).unwrap();
    unsafe {
        assert_eq!(vesonet_scenario_set_seed(sc, 7), VesonetStatus::Ok);
        let mut run = ptr::null_mut();
        assert_eq!(vesonet_run(sc, &mut run), VesonetStatus::Ok, "{}", last_error());
        let mut requests = 0.0;
        let name = CString::new("requests").unwrap();
        assert_eq!(vesonet_run_metric(run, name.as_ptr(), &mut requests), VesonetStatus::Ok);
        assert!(requests > 0.0);
        let bogus = CString::new("speed").unwrap();
        assert_eq!(vesonet_run_metric(run, bogus.as_ptr(), &mut requests), VesonetStatus::UnknownMetric);
        let log = events(run);
        assert_eq!(log.lines().count(), vesonet_run_event_count(run) + 1);

        let mut again = ptr::null_mut();
        assert_eq!(vesonet_run(sc, &mut again), VesonetStatus::Ok);
        assert_eq!(events(again), log);

        let c_log = CString::new(log).unwrap();
        let mut problems = usize::MAX;
        assert_eq!(vesonet_audit(c_log.as_ptr(), ptr::null(), &mut problems), VesonetStatus::Ok, "{}", last_error());
        assert_eq!(problems, 0);
        let wrong = CString::new("metric,value\nrequests,0\n").unwrap();
        assert_eq!(vesonet_audit(c_log.as_ptr(), wrong.as_ptr(), &mut problems), VesonetStatus::AuditFailed);
        assert!(problems >= 1);
        assert!(last_error().contains("requests"));

        vesonet_run_free(run);
        vesonet_run_free(again);
        vesonet_scenario_free(sc);
    }
}

#[test]
fn policy_switch_changes_log() {
    let sc = scenario(SMALL).unwrap();
    unsafe {
        let mut a = ptr::null_mut();
        assert_eq!(vesonet_run(sc, &mut a), VesonetStatus::Ok);
        assert_eq!(vesonet_scenario_set_policy(sc, VesonetPolicy::BaselineNoReroute), VesonetStatus::Ok);
        let mut b = ptr::null_mut();
        assert_eq!(vesonet_run(sc, &mut b), VesonetStatus::Ok);
        assert!(events(b).lines().nth(1).unwrap().contains("baseline_no_reroute"));
        assert_ne!(events(a), events(b));
        vesonet_run_free(a);
        vesonet_run_free(b);
        vesonet_scenario_free(sc);
    }
}

#[test]
fn errors_are_reported_with_codes() {
    let (s, msg) = scenario("{\"epsilon_s\": -1}").unwrap_err();
    assert_eq!(s, VesonetStatus::InvalidScenario);
    assert!(msg.contains("epsilon_s"), "{msg}");
    let (s, msg) = scenario("{\n  nope").unwrap_err();
    assert_eq!(s, VesonetStatus::InvalidScenario);
    assert!(msg.starts_with("2:"), "{msg}");
    unsafe {
        let mut out = ptr::null_mut();
        assert_eq!(vesonet_scenario_from_json(ptr::null(), ptr::null(), &mut out), VesonetStatus::NullPointer);
        assert!(out.is_null());
        assert_eq!(vesonet_run(ptr::null(), &mut ptr::null_mut()), VesonetStatus::NullPointer);
        assert_eq!(vesonet_scenario_set_seed(ptr::null_mut(), 1), VesonetStatus::NullPointer);
        let bad = [0xffu8, 0];
        assert_eq!(
            vesonet_scenario_from_json(bad.as_ptr().cast(), ptr::null(), &mut out),
            VesonetStatus::InvalidUtf8
        );
        let malformed = CString::new("tick,event_type,request_id,content_id,vehicle_from,vehicle_to,hops,bytes_remaining\nx,request,,,,,,\n").unwrap();
        assert_eq!(vesonet_audit(malformed.as_ptr(), ptr::null(), ptr::null_mut()), VesonetStatus::Runtime);
        assert!(last_error().contains("line 2"));
        vesonet_scenario_free(ptr::null_mut());
        vesonet_run_free(ptr::null_mut());
    }
    assert!(!unsafe { CStr::from_ptr(vesonet_version()) }.to_bytes().is_empty());
}

#[test]
fn header_declares_the_exported_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/vesonet.h")).unwrap();
    for f in [
        "vesonet_last_error",
        "vesonet_version",
        "vesonet_scenario_from_json",
        "vesonet_scenario_free",
        "vesonet_scenario_set_seed",
        "vesonet_scenario_set_policy",
        "vesonet_run",
        "vesonet_run_free",
        "vesonet_run_metric",
        "vesonet_run_event_count",
        "vesonet_run_events_csv",
        "vesonet_run_write_events",
        "vesonet_audit",
        "VESONET_STATUS_AUDIT_FAILED",
        "typedef struct VesonetRun VesonetRun",
    ] {
        assert!(header.contains(f), "header lacks {f}");
    }
    // the header must be valid C when a compiler is around
    if let Ok(out) = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-"])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::piped())
        .spawn()
        .and_then(|mut child| {
            use std::io::Write;
            child.stdin.take().unwrap().write_all(format!("{header}\nint main(void) {{ return 0; }}\n").as_bytes())?;
            child.wait_with_output()
        })
    {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}

use std::ffi::{CStr, CString};
use std::ptr;

use omnivi_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(omnivi_last_error()) }.to_str().unwrap().to_string()
}

fn take_string(p: *mut std::ffi::c_char) -> String {
    let s = unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string();
    unsafe { omnivi_string_free(p) };
    s
}

const PENNIES: &str = r#"
format = 1
d = 4
H = 1
S = 1
A = 2
features = "tabular"
theta = [[1.0, -1.0, -1.0, 1.0]]
mu = [[[1.0], [1.0], [1.0], [1.0]]]
"#;

#[test]
fn game_lifecycle_and_query() {
    let text = CString::new(PENNIES).unwrap();
    let mut game = ptr::null_mut();
    assert_eq!(unsafe { omnivi_game_from_toml(text.as_ptr(), &mut game) }, OmniviStatus::Ok);
    let (mut d, mut h, mut s, mut a) = (0, 0, 0, 0);
    assert_eq!(unsafe { omnivi_game_dims(game, &mut d, &mut h, &mut s, &mut a) }, OmniviStatus::Ok);
    assert_eq!((d, h, s, a), (4, 1, 1, 2));
    let mut reward = 0.0;
    let mut next = [0.0; 1];
    assert_eq!(unsafe { omnivi_game_query(game, 1, 0, 0, 1, &mut reward, next.as_mut_ptr(), 1) }, OmniviStatus::Ok);
    assert_eq!((reward, next[0]), (-1.0, 1.0));
    let mut count = 9;
    assert_eq!(unsafe { omnivi_game_validate(game, &mut count) }, OmniviStatus::Ok);
    assert_eq!(count, 0);
    let mut v = 1.0;
    assert_eq!(unsafe { omnivi_game_nash_value(game, 0, &mut v) }, OmniviStatus::Ok);
    assert!(v.abs() < 1e-9);
    unsafe { omnivi_game_free(game) };
}

#[test]
fn query_errors_are_input() {
    let mut game = ptr::null_mut();
    assert_eq!(unsafe { omnivi_game_random_simplex(3, 2, 2, 2, 7, &mut game) }, OmniviStatus::Ok);
    let mut reward = 0.0;
    let mut next = [0.0; 2];
    let s = unsafe { omnivi_game_query(game, 3, 0, 0, 0, &mut reward, next.as_mut_ptr(), 2) };
    assert_eq!(s, OmniviStatus::Input);
    assert!(!last_error().is_empty());
    let s = unsafe { omnivi_game_query(game, 1, 0, 0, 0, &mut reward, next.as_mut_ptr(), 1) };
    assert_eq!(s, OmniviStatus::Input);
    let s = unsafe { omnivi_game_query(game, 1, 0, 0, 0, &mut reward, ptr::null_mut(), 2) };
    assert_eq!(s, OmniviStatus::NullPointer);
    unsafe { omnivi_game_free(game) };
}

#[test]
fn bad_toml_is_input_error() {
    let text = CString::new("format = 1\nd = oops").unwrap();
    let mut game = ptr::null_mut();
    assert_eq!(unsafe { omnivi_game_from_toml(text.as_ptr(), &mut game) }, OmniviStatus::Input);
    assert!(game.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn builtin_games() {
    let name = CString::new("alternating").unwrap();
    let mut game = ptr::null_mut();
    assert_eq!(unsafe { omnivi_game_builtin(name.as_ptr(), &mut game) }, OmniviStatus::Ok);
    let mut d = 0;
    unsafe { omnivi_game_dims(game, &mut d, ptr::null_mut(), ptr::null_mut(), ptr::null_mut()) };
    // Embedded turn game keeps the turn features.
    assert_eq!(d, 6);
    unsafe { omnivi_game_free(game) };
    let name = CString::new("missing").unwrap();
    assert_eq!(unsafe { omnivi_game_builtin(name.as_ptr(), &mut game) }, OmniviStatus::Input);
}

#[test]
fn matrix_solvers() {
    let payoff = [1.0, -1.0, -1.0, 1.0];
    let (mut v, mut row, mut col) = (9.0, [0.0; 2], [0.0; 2]);
    let s = unsafe { omnivi_solve_zero_sum(payoff.as_ptr(), 2, &mut v, row.as_mut_ptr(), col.as_mut_ptr()) };
    assert_eq!(s, OmniviStatus::Ok);
    assert!(v.abs() < 1e-12);
    assert!((row[0] - 0.5).abs() < 1e-12 && (col[1] - 0.5).abs() < 1e-12);

    // Perturbed pair whose only CCE is the bottom-right cell.
    let u1 = [0.9, -0.1, 1.0, 0.0];
    let u2 = [-0.9, -1.0, 0.1, 0.0];
    let mut sigma = [0.0; 4];
    assert_eq!(unsafe { omnivi_solve_cce(u1.as_ptr(), u2.as_ptr(), 2, sigma.as_mut_ptr()) }, OmniviStatus::Ok);
    assert!((sigma[3] - 1.0).abs() < 1e-9);

    assert_eq!(unsafe { omnivi_solve_cce(u1.as_ptr(), ptr::null(), 2, sigma.as_mut_ptr()) }, OmniviStatus::NullPointer);
    assert_eq!(unsafe { omnivi_solve_zero_sum(payoff.as_ptr(), 0, &mut v, ptr::null_mut(), ptr::null_mut()) }, OmniviStatus::Input);
}

#[test]
fn run_config_round_trip() {
    let config = CString::new("mode = \"offline\"\nK = 4\nseed = 2\n").unwrap();
    let mut run = ptr::null_mut();
    assert_eq!(unsafe { omnivi_run_config(config.as_ptr(), &mut run) }, OmniviStatus::Ok);
    assert_eq!(unsafe { omnivi_run_len(run) }, 4);
    let mut text = ptr::null_mut();
    assert_eq!(unsafe { omnivi_run_csv(run, &mut text) }, OmniviStatus::Ok);
    let csv = take_string(text);
    assert!(csv.starts_with("k,ucb,lcb,gap,cum_gap,exploit1,exploit2\n"));
    assert_eq!(csv.lines().count(), 5);
    assert_eq!(unsafe { omnivi_run_summary(run, &mut text) }, OmniviStatus::Ok);
    assert!(take_string(text).contains("gap_total"));
    unsafe { omnivi_run_free(run) };

    // Same config, same bytes.
    let mut again = ptr::null_mut();
    unsafe { omnivi_run_config(config.as_ptr(), &mut again) };
    unsafe { omnivi_run_csv(again, &mut text) };
    assert_eq!(take_string(text), csv);
    unsafe { omnivi_run_free(again) };
}

#[test]
fn run_config_errors() {
    let mut run = ptr::null_mut();
    let bad = CString::new("mode = \"offline\"\nK = 0\n").unwrap();
    assert_eq!(unsafe { omnivi_run_config(bad.as_ptr(), &mut run) }, OmniviStatus::Input);
    assert!(last_error().contains("K"));
    assert_eq!(unsafe { omnivi_run_config(ptr::null(), &mut run) }, OmniviStatus::NullPointer);
    assert_eq!(unsafe { omnivi_run_len(ptr::null()) }, 0);
}

#[test]
fn frees_accept_null() {
    unsafe {
        omnivi_game_free(ptr::null_mut());
        omnivi_run_free(ptr::null_mut());
        omnivi_string_free(ptr::null_mut());
    }
}

#[test]
fn version_matches_crate() {
    let v = unsafe { CStr::from_ptr(omnivi_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/omnivi.h")).unwrap();
    for name in [
        "omnivi_last_error",
        "omnivi_game_from_toml",
        "omnivi_game_random_simplex",
        "omnivi_game_query",
        "omnivi_solve_zero_sum",
        "omnivi_solve_cce",
        "omnivi_run_config",
        "omnivi_run_csv",
        "omnivi_string_free",
        "typedef struct OmniviGame OmniviGame",
        "OMNIVI_STATUS_MODEL_VALIDITY = 3",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

//! C ABI for `omnivi`.
//!
//! Every fallible function returns an [`OmniviStatus`]; on failure the
//! message is available from [`omnivi_last_error`] on the same thread.
//! Handles are opaque and must be released with their `_free` function.
//! Strings returned through `char **` are owned by the caller and released
//! with [`omnivi_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use libc::size_t;
use nalgebra::DMatrix;
use rand::SeedableRng;

use omnivi::evaluation::exact_nash;
use omnivi::game_model::{random_simplex_game, validate, GameFile, GameSpec};
use omnivi::harness::{self, builtin, csv, summary_text, ExperimentConfig, RunOutput};
use omnivi::learners::SimRng;
use omnivi::matrix_equilibria::{solve_cce, solve_zero_sum};
use omnivi::Error;

/// Status codes. Library errors share their values with the CLI exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OmniviStatus {
    Ok = 0,
    /// Bad arguments or configuration.
    Input = 2,
    /// The game violates the linear-model assumptions.
    ModelValidity = 3,
    Io = 4,
    /// Solver, numeric or internal failure.
    Numeric = 5,
    /// A required pointer argument was null.
    NullPointer = 6,
    /// A Rust panic was caught at the boundary.
    Panic = 7,
}

impl From<&Error> for OmniviStatus {
    fn from(e: &Error) -> Self {
        match e.exit_code() {
            2 => OmniviStatus::Input,
            3 => OmniviStatus::ModelValidity,
            4 => OmniviStatus::Io,
            _ => OmniviStatus::Numeric,
        }
    }
}

/// Opaque simultaneous-move game. Turn-based games are stored embedded.
pub struct OmniviGame {
    spec: GameSpec,
}

/// Opaque finished experiment.
pub struct OmniviRun {
    output: RunOutput,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap_or_default());
}

fn fail(status: OmniviStatus, msg: &str) -> OmniviStatus {
    set_error(msg);
    status
}

/// Run `f`, mapping errors and panics to status codes.
fn guard<F>(f: F) -> OmniviStatus
where
    F: FnOnce() -> Result<(), OmniviStatus>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            OmniviStatus::Ok
        }
        Ok(Err(status)) => status,
        Err(_) => fail(OmniviStatus::Panic, "panic inside omnivi"),
    }
}

fn lib_err(e: Error) -> OmniviStatus {
    fail(OmniviStatus::from(&e), &e.to_string())
}

fn null(what: &str) -> OmniviStatus {
    fail(OmniviStatus::NullPointer, &format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, OmniviStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(OmniviStatus::Input, &format!("{what} is not UTF-8")))
}

unsafe fn write_out<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), OmniviStatus> {
    let c = CString::new(s).map_err(|_| fail(OmniviStatus::Numeric, "output contains a NUL byte"))?;
    *out = c.into_raw();
    Ok(())
}

/// Message for the last failed call on this thread; empty after a success.
/// Valid until the next omnivi call on the same thread.
#[no_mangle]
pub extern "C" fn omnivi_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn omnivi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn omnivi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parse a game file given as TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omnivi_game_from_toml(toml: *const c_char, out: *mut *mut OmniviGame) -> OmniviStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = read_str(toml, "toml")?;
        let game = GameFile::parse(text).and_then(GameFile::into_game).map_err(lib_err)?;
        let spec = game.as_simultaneous().map_err(lib_err)?;
        write_out(out, OmniviGame { spec });
        Ok(())
    })
}

/// One of the builtin games by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omnivi_game_builtin(name: *const c_char, out: *mut *mut OmniviGame) -> OmniviStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let spec = builtin(read_str(name, "name")?).and_then(|g| g.as_simultaneous()).map_err(lib_err)?;
        write_out(out, OmniviGame { spec });
        Ok(())
    })
}

/// Random valid linear game with simplex features.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omnivi_game_random_simplex(
    d: size_t,
    num_states: size_t,
    num_actions: size_t,
    horizon: size_t,
    seed: u64,
    out: *mut *mut OmniviGame,
) -> OmniviStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mut rng = SimRng::seed_from_u64(seed);
        let spec = random_simplex_game(d, num_states, num_actions, horizon, &mut rng).map_err(lib_err)?;
        write_out(out, OmniviGame { spec });
        Ok(())
    })
}

/// Release a game. Null is ignored.
///
/// # Safety
/// `game` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn omnivi_game_free(game: *mut OmniviGame) {
    if !game.is_null() {
        drop(Box::from_raw(game));
    }
}

/// Feature dimension, horizon, state and action counts. Any output pointer
/// may be null.
///
/// # Safety
/// `game` must be a live handle; non-null outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn omnivi_game_dims(
    game: *const OmniviGame,
    d: *mut size_t,
    horizon: *mut size_t,
    num_states: *mut size_t,
    num_actions: *mut size_t,
) -> OmniviStatus {
    guard(|| {
        let g = game.as_ref().ok_or_else(|| null("game"))?;
        for (p, v) in [(d, g.spec.dim()), (horizon, g.spec.horizon()), (num_states, g.spec.num_states()), (num_actions, g.spec.num_actions())] {
            if !p.is_null() {
                *p = v;
            }
        }
        Ok(())
    })
}

/// Reward and next-state distribution at step `h` (1-based). `next` must
/// hold `next_len >= num_states` doubles.
///
/// # Safety
/// `game` must be a live handle; `reward` writable; `next` valid for
/// `next_len` writes.
#[no_mangle]
pub unsafe extern "C" fn omnivi_game_query(
    game: *const OmniviGame,
    h: size_t,
    x: size_t,
    a: size_t,
    b: size_t,
    reward: *mut f64,
    next: *mut f64,
    next_len: size_t,
) -> OmniviStatus {
    guard(|| {
        let g = game.as_ref().ok_or_else(|| null("game"))?;
        if reward.is_null() {
            return Err(null("reward"));
        }
        if next.is_null() {
            return Err(null("next"));
        }
        let (r, dist) = g.spec.query(h, x, a, b).map_err(lib_err)?;
        if next_len < dist.len() {
            return Err(fail(OmniviStatus::Input, &format!("next buffer needs {} entries", dist.len())));
        }
        *reward = r;
        std::slice::from_raw_parts_mut(next, dist.len()).copy_from_slice(&dist);
        Ok(())
    })
}

/// Number of violated model assumptions; zero means valid.
///
/// # Safety
/// `game` must be a live handle; `count` writable.
#[no_mangle]
pub unsafe extern "C" fn omnivi_game_validate(game: *const OmniviGame, count: *mut size_t) -> OmniviStatus {
    guard(|| {
        let g = game.as_ref().ok_or_else(|| null("game"))?;
        if count.is_null() {
            return Err(null("count"));
        }
        let report = validate(&g.spec);
        *count = report.violations.len();
        Ok(())
    })
}

/// Minimax value of the whole game from state `x` at step 1.
///
/// # Safety
/// `game` must be a live handle; `value` writable.
#[no_mangle]
pub unsafe extern "C" fn omnivi_game_nash_value(game: *const OmniviGame, x: size_t, value: *mut f64) -> OmniviStatus {
    guard(|| {
        let g = game.as_ref().ok_or_else(|| null("game"))?;
        if value.is_null() {
            return Err(null("value"));
        }
        if x >= g.spec.num_states() {
            return Err(fail(OmniviStatus::Input, &format!("state {x} out of range")));
        }
        *value = exact_nash(&g.spec).map_err(lib_err)?.v(1, x);
        Ok(())
    })
}

unsafe fn read_matrix(p: *const f64, n: size_t, what: &str) -> Result<DMatrix<f64>, OmniviStatus> {
    if p.is_null() {
        return Err(null(what));
    }
    if n == 0 {
        return Err(fail(OmniviStatus::Input, "matrix size must be positive"));
    }
    Ok(DMatrix::from_row_slice(n, n, std::slice::from_raw_parts(p, n * n)))
}

/// Solve the `n x n` zero-sum game `payoff` (row-major, row player
/// maximizes). `row` and `col` may be null or hold `n` doubles each.
///
/// # Safety
/// `payoff` valid for `n * n` reads; non-null outputs valid for writes.
#[no_mangle]
pub unsafe extern "C" fn omnivi_solve_zero_sum(
    payoff: *const f64,
    n: size_t,
    value: *mut f64,
    row: *mut f64,
    col: *mut f64,
) -> OmniviStatus {
    guard(|| {
        let m = read_matrix(payoff, n, "payoff")?;
        if value.is_null() {
            return Err(null("value"));
        }
        let sol = solve_zero_sum(&m).map_err(lib_err)?;
        *value = sol.value;
        if !row.is_null() {
            std::slice::from_raw_parts_mut(row, n).copy_from_slice(sol.row.probs());
        }
        if !col.is_null() {
            std::slice::from_raw_parts_mut(col, n).copy_from_slice(sol.col.probs());
        }
        Ok(())
    })
}

/// Welfare-maximizing coarse correlated equilibrium of the `n x n` game
/// where the row player maximizes `u1` and the column player minimizes `u2`
/// (both row-major). Writes `n * n` probabilities, row-major, to `sigma`.
///
/// # Safety
/// `u1`, `u2` valid for `n * n` reads; `sigma` valid for `n * n` writes.
#[no_mangle]
pub unsafe extern "C" fn omnivi_solve_cce(
    u1: *const f64,
    u2: *const f64,
    n: size_t,
    sigma: *mut f64,
) -> OmniviStatus {
    guard(|| {
        let m1 = read_matrix(u1, n, "u1")?;
        let m2 = read_matrix(u2, n, "u2")?;
        if sigma.is_null() {
            return Err(null("sigma"));
        }
        let s = solve_cce(&m1, &m2).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(sigma, n * n).copy_from_slice(s.probs());
        Ok(())
    })
}

/// Run the experiment described by a config given as TOML text. Relative
/// game paths resolve against the working directory; `output` is ignored.
///
/// # Safety
/// `config` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omnivi_run_config(config: *const c_char, out: *mut *mut OmniviRun) -> OmniviStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let config = ExperimentConfig::parse(read_str(config, "config")?).map_err(lib_err)?;
        let output = harness::run(&config).map_err(lib_err)?;
        write_out(out, OmniviRun { output });
        Ok(())
    })
}

/// Number of episodes in a finished run.
///
/// # Safety
/// `run` must be a live handle or null (returns 0).
#[no_mangle]
pub unsafe extern "C" fn omnivi_run_len(run: *const OmniviRun) -> size_t {
    run.as_ref().map_or(0, |r| r.output.len())
}

/// Per-episode metrics as CSV text.
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omnivi_run_csv(run: *const OmniviRun, out: *mut *mut c_char) -> OmniviStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_string(out, csv(&r.output))
    })
}

/// Summary record and config echo as TOML text.
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn omnivi_run_summary(run: *const OmniviRun, out: *mut *mut c_char) -> OmniviStatus {
    guard(|| {
        let r = run.as_ref().ok_or_else(|| null("run"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        write_string(out, summary_text(&r.output).map_err(lib_err)?)
    })
}

/// Release a run. Null is ignored.
///
/// # Safety
/// `run` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn omnivi_run_free(run: *mut OmniviRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

#[cfg(test)]
mod tests {
    use std::ptr;

    use super::*;

    #[test]
    fn status_codes_follow_exit_codes() {
        assert_eq!(OmniviStatus::from(&Error::Config("x".into())) as i32, 2);
        assert_eq!(OmniviStatus::from(&Error::ModelValidity("x".into())) as i32, 3);
        assert_eq!(OmniviStatus::from(&Error::Io("x".into())) as i32, 4);
        assert_eq!(OmniviStatus::from(&Error::Numeric("x".into())) as i32, 5);
    }

    #[test]
    fn error_message_drops_nul_bytes() {
        set_error("a\0b");
        let msg = unsafe { CStr::from_ptr(omnivi_last_error()) };
        assert_eq!(msg.to_str().unwrap(), "a b");
    }

    #[test]
    fn null_out_pointer() {
        let s = unsafe { omnivi_game_random_simplex(2, 2, 2, 2, 0, ptr::null_mut()) };
        assert_eq!(s, OmniviStatus::NullPointer);
    }
}

//! Python bindings. Residues and `inf` cross the boundary as strings; errors
//! raise `ValueError` with the message prefixed by the stable error code.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use dp2ff::confinement::confine_dp2_case;
use dp2ff::fpdynamics::{dp2_fp_orbit, dp2_period, first_finite_state, FpState};
use dp2ff::maps::build_dp2_params;
use dp2ff::numbers::{parse_rational, reduce_proj};
use dp2ff::tau::{reduced_solution, taucond, TauParams};
use dp2ff::{Error, FpProj, Prime};

fn py_err(e: Error) -> PyErr {
    PyValueError::new_err(format!("{}: {e}", e.code()))
}

fn tokens(xs: &[FpProj]) -> Vec<String> {
    xs.iter().map(ToString::to_string).collect()
}

fn prime(p: u64) -> PyResult<Prime> {
    Prime::new(p).map_err(py_err)
}

/// Projective reduction of a rational given as text, e.g. `"1/5"`.
#[pyfunction]
fn reduce(p: u64, value: &str) -> PyResult<String> {
    let v = parse_rational(value).map_err(py_err)?;
    Ok(reduce_proj(&v, prime(p)?).to_string())
}

/// `(sequence u_1.., period, (first, second) condition values)`.
#[pyfunction]
#[pyo3(signature = (p, big_n, count, lambda_ = "1"))]
fn tau_orbit(p: u64, big_n: u32, count: usize, lambda_: &str) -> PyResult<(Vec<String>, Option<i64>, (String, String))> {
    let p = prime(p)?;
    let t = TauParams::new(big_n, parse_rational(lambda_).map_err(py_err)?).map_err(py_err)?;
    let seq = reduced_solution(&t, p, count.max(2 * p.get() as usize + 2)).map_err(py_err)?;
    let period = match first_finite_state(&seq) {
        Some(s) => Some(dp2_period(s, &t.dp2_params(p).map_err(py_err)?).map_err(py_err)?),
        None => None,
    };
    let c = taucond(&t, p).map_err(py_err)?;
    Ok((tokens(&seq[..count]), period, (c.first_value.to_string(), c.second_value.to_string())))
}

/// `(u_1..u_steps, period)` of the seven-case evolution over `P^1(F_p)`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn evolve(p: u64, a: &str, delta: &str, z0: &str, u0: &str, u1: &str, steps: usize) -> PyResult<(Vec<String>, i64)> {
    let p = prime(p)?;
    let r = |s: &str| parse_rational(s).map_err(py_err);
    let params = build_dp2_params(p, r(a)?, r(delta)?, r(z0)?).map_err(py_err)?;
    let (v0, v1) = (FpProj::parse(u0, p).map_err(py_err)?, FpProj::parse(u1, p).map_err(py_err)?);
    let seq = dp2_fp_orbit(v0, v1, steps, &params).map_err(py_err)?;
    let period = dp2_period(FpState::new(v0, v1, 1), &params).map_err(py_err)?;
    Ok((tokens(&seq), period))
}

/// `(status, m, image)` of the epsilon run from `u_n = s + e`, `u_{n-1} = y`.
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn confine_case(
    p: u64,
    a: &str,
    delta: &str,
    z0: &str,
    s: i64,
    n: i64,
    y: &str,
) -> PyResult<(String, Option<usize>, Option<(String, String)>)> {
    let p = prime(p)?;
    let r = |v: &str| parse_rational(v).map_err(py_err);
    let params = build_dp2_params(p, r(a)?, r(delta)?, r(z0)?).map_err(py_err)?;
    let rep = confine_dp2_case(&params, s, n, &r(y)?).map_err(py_err)?;
    Ok((
        rep.status.code().to_string(),
        rep.m,
        rep.image.map(|(x, y)| (x.to_string(), y.to_string())),
    ))
}

#[pymodule]
fn dp2ff_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(reduce, m)?)?;
    m.add_function(wrap_pyfunction!(tau_orbit, m)?)?;
    m.add_function(wrap_pyfunction!(evolve, m)?)?;
    m.add_function(wrap_pyfunction!(confine_case, m)?)?;
    Ok(())
}

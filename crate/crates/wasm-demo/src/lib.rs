//! Three operations for the browser page in `www/`. Each returns a JSON
//! string; the plain functions are usable (and tested) natively, the
//! `#[wasm_bindgen]` wrappers only turn errors into JS exceptions.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use modelset::cutproject::{
    generate_model_set, periodicity_lattice, rational_approximant, Scheme, Side, WindowFn, GOLDEN,
};
use modelset::operators::{Boundary, SamplingWeight, Weighting};
use modelset::pattern::{build_schrodinger, Hopping, Kernel, PeFunction, SchrodingerSpec, Theta};
use modelset::spectra::{autocorrelation, dos_estimate, ids, Averaging, DosOptions};
use modelset::Result;

fn scheme(shift: f64, q: u32) -> Result<Scheme> {
    let s = Scheme::fibonacci(shift);
    if q == 0 {
        Ok(s)
    } else {
        Ok(rational_approximant(&s, i64::from(q))?.scheme())
    }
}

fn chain(t_long: f64) -> Result<Kernel> {
    build_schrodinger(&SchrodingerSpec {
        dim: 1,
        hoppings: vec![
            Hopping { displacement: vec![1.0], q: PeFunction::real_constant(1.0) },
            Hopping { displacement: vec![GOLDEN], q: PeFunction::real_constant(t_long) },
        ],
        potential: PeFunction::real_constant(0.0),
    })?
    .with_theta(Theta::Tent { width: 0.3 })
}

/// Points, window weights and internal coordinates of the (approximant,
/// `q > 0`) Fibonacci model set in `[-radius, radius]`; `epsilon > 0`
/// mollifies the window.
pub fn model_set_json(shift: f64, q: u32, radius: f64, epsilon: f64) -> Result<Value> {
    let s = scheme(shift, q)?;
    let wf = if epsilon > 0.0 {
        Some(WindowFn::new(s.window().expect("Fibonacci has a window").clone(), epsilon, Side::Upper)?)
    } else {
        None
    };
    let p = generate_model_set(&s, radius, wf.as_ref())?;
    let points: Vec<f64> = p.points.points().iter().map(|x| x[0]).collect();
    let internal: Vec<f64> = p.internal.iter().map(|h| h[0]).collect();
    let period = if q > 0 {
        periodicity_lattice(&rational_approximant(&Scheme::fibonacci(shift), i64::from(q))?).map(|l| l.periods[0][0].abs())
    } else {
        None
    };
    Ok(json!({ "points": points, "weights": p.weights, "internal": internal, "period": period }))
}

/// Normalised DOS atoms and the IDS on a grid for the `q`-approximant chain
/// on a periodic supercell of length at least `min_length`.
pub fn approximant_dos_json(shift: f64, q: u32, t_long: f64, min_length: f64) -> Result<Value> {
    let rs = rational_approximant(&Scheme::fibonacci(shift), i64::from(q.max(1)))?;
    let lattice = periodicity_lattice(&rs).ok_or(modelset::Error::MissingPeriods)?;
    let len = lattice.periods[0][0].abs();
    let copies = (min_length / len).ceil().max(1.0);
    let cell = copies * len;
    let kernel = chain(t_long)?;
    let patch = generate_model_set(&rs.scheme(), 0.5 * cell + kernel.reach() + 1.0, None)?;
    let opts = DosOptions { averaging: Averaging::Single, margin: 0.0, weighting: Weighting::Symmetrized };
    let mu = dos_estimate(
        &kernel,
        &patch.points,
        &patch.weights,
        &SamplingWeight::UniformBall { radius: 0.5 * cell },
        &Boundary::Periodic { periods: vec![vec![cell]] },
        &opts,
    )?
    .normalized()?;
    let f = ids(&mu)?;
    let (lo, hi) = (-3.5, 3.5);
    let grid: Vec<[f64; 2]> = (0..=400)
        .map(|k| {
            let e = lo + (hi - lo) * k as f64 / 400.0;
            [e, f.eval(e)]
        })
        .collect();
    let atoms: Vec<[f64; 2]> = mu.atoms().iter().map(|a| [a.location[0], a.mass]).collect();
    Ok(json!({ "period": len, "copies": copies, "sites": atoms.len(), "atoms": atoms, "ids": grid }))
}

/// Autocorrelation atoms `(δ, mass)` with `|δ| ≤ delta_max`, averaged over
/// `[-r_eff, r_eff]`.
pub fn autocorrelation_json(shift: f64, q: u32, r_eff: f64, delta_max: f64) -> Result<Value> {
    let s = scheme(shift, q)?;
    let p = generate_model_set(&s, r_eff + delta_max, None)?;
    let gamma = autocorrelation(&p.points, &p.weights, r_eff, delta_max)?;
    let atoms: Vec<[f64; 2]> = gamma.atoms().iter().map(|a| [a.location[0], a.mass]).collect();
    Ok(json!({ "atoms": atoms }))
}

fn js(r: Result<Value>) -> std::result::Result<String, JsValue> {
    r.map(|v| v.to_string()).map_err(|e| JsValue::from_str(&e.to_string()))
}

#[wasm_bindgen]
pub fn model_set(shift: f64, q: u32, radius: f64, epsilon: f64) -> std::result::Result<String, JsValue> {
    js(model_set_json(shift, q, radius, epsilon))
}

#[wasm_bindgen]
pub fn approximant_dos(shift: f64, q: u32, t_long: f64, min_length: f64) -> std::result::Result<String, JsValue> {
    js(approximant_dos_json(shift, q, t_long, min_length))
}

#[wasm_bindgen]
pub fn autocorrelation_atoms(shift: f64, q: u32, r_eff: f64, delta_max: f64) -> std::result::Result<String, JsValue> {
    js(autocorrelation_json(shift, q, r_eff, delta_max))
}

//! wasm-bindgen bindings for the static demo page in `www/`.

use wasm_bindgen::prelude::*;

pub mod demo;

fn js(e: vdw_pme::error::Error) -> JsError {
    JsError::new(&e.to_string())
}

#[wasm_bindgen]
pub struct Comparison(demo::Comparison);

#[wasm_bindgen]
impl Comparison {
    #[wasm_bindgen(constructor)]
    pub fn new(initial: &str, h_exp: u32, tau: f64) -> Result<Comparison, JsError> {
        demo::Comparison::new(initial, h_exp, tau).map(Comparison).map_err(js)
    }

    pub fn advance(&mut self, steps: usize) -> Result<(), JsError> {
        self.0.advance(steps).map_err(js)
    }

    pub fn columns(&self) -> usize {
        self.0.dims().0
    }

    pub fn rows(&self) -> usize {
        self.0.dims().1
    }

    pub fn step(&self) -> usize {
        self.0.step_index()
    }

    pub fn time(&self) -> f64 {
        self.0.time()
    }

    pub fn c_vdw(&self) -> Vec<f64> {
        self.0.c_vdw()
    }

    pub fn c_heat(&self) -> Vec<f64> {
        self.0.c_heat()
    }

    pub fn stats(&self) -> Vec<f64> {
        self.0.stats()
    }
}

#[wasm_bindgen]
pub fn curves(c_star: f64, c_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    demo::curves(c_star, c_max, n).map_err(js)
}

#[wasm_bindgen]
pub fn barenblatt_check(h_exp: u32) -> Result<Vec<f64>, JsError> {
    demo::barenblatt_check(h_exp).map_err(js)
}

//! WebAssembly bindings for the browser demo in `www/`.

pub mod demo;

use wasm_bindgen::prelude::*;

/// JSON array of `{difference, probability}` points.
#[wasm_bindgen(js_name = winProbabilityCurve)]
pub fn win_probability_curve(span: f64, points: usize) -> String {
    demo::win_probability_curve(span, points)
}

/// A simulated world with fitted ratings.
#[wasm_bindgen]
pub struct RatingDemo {
    inner: demo::Demo,
}

#[wasm_bindgen]
impl RatingDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(
        climbers: usize,
        routes: usize,
        periods: usize,
        ascents_per_period: usize,
        seed: u64,
    ) -> Result<RatingDemo, JsError> {
        demo::Demo::new(climbers, routes, periods, ascents_per_period, seed)
            .map(|inner| RatingDemo { inner })
            .map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = climberCount)]
    pub fn climber_count(&self) -> usize {
        self.inner.climber_count()
    }

    /// Fit statistics and the log-likelihood after every iteration.
    pub fn summary(&self) -> String {
        self.inner.summary_json()
    }

    /// True and fitted rating per route.
    pub fn routes(&self) -> String {
        self.inner.routes_json()
    }

    /// True and fitted ratings over time for one climber.
    pub fn climber(&self, index: usize) -> Result<String, JsError> {
        self.inner.climber_json(index).map_err(|e| JsError::new(&e))
    }
}

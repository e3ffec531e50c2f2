#![allow(dead_code)]

use latent_hazard::{Event, Lifetime, ModelParams};
use proptest::prelude::*;

pub fn params(p: usize) -> impl Strategy<Value = ModelParams> {
    (
        -3.0..0.0f64,
        prop::collection::vec(-1.0..1.0f64, p),
        -3.0..0.0f64,
        prop::collection::vec(-1.0..1.0f64, p),
    )
        .prop_map(|(a0, a, b0, b)| ModelParams::new(a0, a, b0, b).unwrap())
}

pub fn lifetime(p: usize, max_t: usize, event: Option<Event>) -> impl Strategy<Value = Lifetime> {
    let event = match event {
        Some(e) => Just(e).boxed(),
        None => prop_oneof![Just(Event::Failed), Just(Event::Censored)].boxed(),
    };
    (1..=max_t)
        .prop_flat_map(move |t| prop::collection::vec(-1.0..1.0f64, t * p))
        .prop_flat_map(move |x| (Just(x), event.clone()))
        .prop_map(move |(x, event)| Lifetime::new("L", "U", p, x, event).unwrap())
}

pub fn dataset(
    p: usize,
    max_n: usize,
    max_t: usize,
    event: Option<Event>,
) -> impl Strategy<Value = Vec<Lifetime>> {
    prop::collection::vec(lifetime(p, max_t, event), 1..=max_n)
}

/// Central finite-difference gradient.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    (0..x.len())
        .map(|i| {
            y[i] = x[i] + h;
            let up = f(&y);
            y[i] = x[i] - h;
            let down = f(&y);
            y[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

pub fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}

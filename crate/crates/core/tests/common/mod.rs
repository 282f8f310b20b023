//! Independent reference computations shared by the integration tests.
//! Nothing here calls the gradient, windowing or DFT code it is compared with.

#![allow(dead_code)]

use std::f64::consts::PI;

use abfnet::{loss, Network};

/// Central finite-difference gradients of the pattern loss, in the same
/// layout as `Gradients`: (weights, biases, params).
pub struct FdGradients {
    pub d_weights: Vec<Vec<Vec<f64>>>,
    pub d_biases: Vec<Vec<f64>>,
    pub d_params: Vec<Vec<f64>>,
}

pub fn pattern_loss(net: &Network, input: &[f64], target: &[f64]) -> f64 {
    loss(&net.predict(input).unwrap(), target).unwrap()
}

pub fn finite_difference(net: &Network, input: &[f64], target: &[f64], h: f64) -> FdGradients {
    let central = |plus: Network, minus: Network| {
        (pattern_loss(&plus, input, target) - pattern_loss(&minus, input, target)) / (2.0 * h)
    };
    let mut d_weights = Vec::new();
    let mut d_biases = Vec::new();
    let mut d_params = Vec::new();
    for (l, layer) in net.layers().iter().enumerate() {
        let mut dw = vec![vec![0.0; layer.n_in()]; layer.n_out()];
        let mut db = vec![0.0; layer.n_out()];
        let mut da = vec![0.0; layer.n_out()];
        for j in 0..layer.n_out() {
            for i in 0..layer.n_in() {
                let (mut p, mut m) = (net.clone(), net.clone());
                p.layers_mut()[l].weights[j][i] += h;
                m.layers_mut()[l].weights[j][i] -= h;
                dw[j][i] = central(p, m);
            }
            let (mut p, mut m) = (net.clone(), net.clone());
            p.layers_mut()[l].biases[j] += h;
            m.layers_mut()[l].biases[j] -= h;
            db[j] = central(p, m);

            let a = layer.params[j].get();
            let (mut p, mut m) = (net.clone(), net.clone());
            p.set_param(l, j, a + h);
            m.set_param(l, j, a - h);
            da[j] = central(p, m);
        }
        d_weights.push(dw);
        d_biases.push(db);
        d_params.push(da);
    }
    FdGradients {
        d_weights,
        d_biases,
        d_params,
    }
}

/// Passes when either the absolute or the relative error is within bounds.
pub fn close(analytic: f64, numeric: f64, rel: f64, abs: f64) -> bool {
    let err = (analytic - numeric).abs();
    err <= abs || err <= rel * numeric.abs().max(analytic.abs())
}

/// Window inputs for target `t` listed year by year, oldest first.
pub fn brute_force_window(values: &[f64], t: usize) -> Vec<f64> {
    let mut out = Vec::new();
    for years_back in (1..=4).rev() {
        let same = t - 12 * years_back;
        out.push(values[same - 1]);
        out.push(values[same]);
        out.push(values[same + 1]);
    }
    out
}

/// Two-sided DFT evaluated term by term with fresh sin/cos calls.
pub fn naive_dft(values: &[f64]) -> Vec<(f64, f64)> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (t, &x) in values.iter().enumerate() {
                let angle = 2.0 * PI * (k as f64) * (t as f64) / n as f64;
                re += x * angle.cos();
                im -= x * angle.sin();
            }
            (re, im)
        })
        .collect()
}

pub fn mean_square(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64
}

/// Reference logistic network `1 / (1 + exp(-2 I))` using the same weights.
pub fn sigmoid2_forward(net: &Network, input: &[f64]) -> Vec<f64> {
    let mut x = input.to_vec();
    for layer in net.layers() {
        x = layer
            .weights
            .iter()
            .zip(&layer.biases)
            .map(|(row, b)| {
                let i = b + row.iter().zip(&x).map(|(w, o)| w * o).sum::<f64>();
                1.0 / (1.0 + (-2.0 * i).exp())
            })
            .collect();
    }
    x
}

/// Distance between two doubles in units in the last place.
pub fn ulp_distance(a: f64, b: f64) -> u64 {
    let key = |v: f64| {
        let bits = v.to_bits() as i64;
        if bits < 0 {
            i64::MIN - bits
        } else {
            bits
        }
    };
    key(a).abs_diff(key(b))
}

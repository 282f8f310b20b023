//! Plain-text network checkpoints.
//!
//! ```text
//! abfnet-v1
//! 12 7 1
//! <bias> <a> <w_0> ... <w_11>      one line per node of layer 1 (7 lines)
//! <bias> <a> <w_0> ... <w_6>       one line per node of layer 2 (1 line)
//! ```
//!
//! Numbers are written in scientific notation with 17 significant digits,
//! which reproduces every `f64` exactly on reload.

use std::fmt::Write as _;
use std::path::Path;

use super::{Layer, Network, NodeParam};
use crate::error::{Error, Result};

pub const MAGIC: &str = "abfnet-v1";

fn fmt_f64(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

pub fn to_text(net: &Network) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let topo: Vec<String> = net.topology().iter().map(usize::to_string).collect();
    out.push_str(&topo.join(" "));
    out.push('\n');
    for layer in net.layers() {
        for j in 0..layer.n_out() {
            fmt_f64(&mut out, layer.biases[j]);
            out.push(' ');
            fmt_f64(&mut out, layer.params[j].get());
            for &w in &layer.weights[j] {
                out.push(' ');
                fmt_f64(&mut out, w);
            }
            out.push('\n');
        }
    }
    out
}

pub fn from_text(text: &str) -> Result<Network> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end()));
    let err = |line: usize, msg: String| Error::Checkpoint { line, msg };

    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((n, other)) => return Err(err(n, format!("expected `{MAGIC}`, found `{other}`"))),
        None => return Err(err(1, "empty checkpoint".into())),
    }
    let (n, topo_line) = lines
        .next()
        .ok_or_else(|| err(2, "missing topology line".into()))?;
    let topology = topo_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| err(n, format!("bad topology: {e}")))?;
    if topology.len() < 2 || topology.contains(&0) {
        return Err(Error::InvalidTopology(topology));
    }

    let mut layers = Vec::with_capacity(topology.len() - 1);
    for pair in topology.windows(2) {
        let (n_in, n_out) = (pair[0], pair[1]);
        let mut layer = Layer {
            weights: Vec::with_capacity(n_out),
            biases: Vec::with_capacity(n_out),
            params: Vec::with_capacity(n_out),
        };
        for _ in 0..n_out {
            let (n, line) = lines
                .next()
                .ok_or_else(|| err(0, "checkpoint ends before all layers are read".into()))?;
            let values = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(n, format!("bad number: {e}")))?;
            if values.len() != n_in + 2 {
                return Err(err(
                    n,
                    format!("expected {} values, found {}", n_in + 2, values.len()),
                ));
            }
            let a = values[1];
            let param = NodeParam::new(a);
            if param.get() != a {
                return Err(err(n, format!("basis parameter {a} is too close to -1")));
            }
            layer.biases.push(values[0]);
            layer.params.push(param);
            layer.weights.push(values[2..].to_vec());
        }
        layers.push(layer);
    }
    if let Some((n, extra)) = lines.find(|(_, l)| !l.is_empty()) {
        return Err(err(n, format!("unexpected trailing content `{extra}`")));
    }
    Network::from_layers(layers)
}

pub fn save(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_text(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_text(&text)
}

//! Versioned text netlist.
//!
//! ```text
//! boolnet-netlist 1
//! input_width 4
//! num_classes 2
//! tau 30.0
//! layers 3 2
//! encoder 2 2
//! threshold 0 0.5 1.5
//! threshold 1 0.5 1.5
//! 0 0 8 1 3
//! 0 1 6 0 c1
//! ...
//! out 0 1
//! out 1 c0
//! ```
//!
//! Gate records are `layer gate table_code in0 in1`; an input is a signal
//! index or `c0` / `c1` for a constant. `out position source` lines give
//! the GroupSum head map. The optional `encoder features levels` block
//! carries the thermometer thresholds. Reals are written in shortest
//! round-trip form, so reading back is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use boolnet_core::{GateTruthTable, HardCircuit, HardGate, Source, ThermometerEncoder};

use crate::error::{BoolnetError, Result};

pub const NETLIST_MAGIC: &str = "boolnet-netlist";
pub const NETLIST_VERSION: u32 = 1;

/// A hardened circuit plus, optionally, the encoder that feeds it.
#[derive(Debug, Clone, PartialEq)]
pub struct Netlist {
    pub circuit: HardCircuit,
    pub encoder: Option<ThermometerEncoder>,
}

fn source_str(s: Source) -> String {
    match s {
        Source::Signal(i) => i.to_string(),
        Source::Const(false) => "c0".into(),
        Source::Const(true) => "c1".into(),
    }
}

pub fn to_text(circuit: &HardCircuit, encoder: Option<&ThermometerEncoder>) -> String {
    let mut s = String::new();
    let sizes: Vec<String> = circuit.layer_sizes().iter().map(usize::to_string).collect();
    let _ = writeln!(s, "{NETLIST_MAGIC} {NETLIST_VERSION}");
    let _ = writeln!(s, "input_width {}", circuit.input_width);
    let _ = writeln!(s, "num_classes {}", circuit.num_classes);
    let _ = writeln!(s, "tau {:?}", circuit.group_tau);
    let _ = writeln!(s, "layers {}", sizes.join(" "));
    if let Some(enc) = encoder {
        let _ = writeln!(s, "encoder {} {}", enc.num_features(), enc.levels());
        for f in 0..enc.num_features() {
            let _ = write!(s, "threshold {f}");
            for t in enc.thresholds(f) {
                let _ = write!(s, " {t:?}");
            }
            s.push('\n');
        }
    }
    for (l, layer) in circuit.layers.iter().enumerate() {
        for (g, gate) in layer.iter().enumerate() {
            let _ = writeln!(
                s,
                "{l} {g} {} {} {}",
                gate.table.code(),
                source_str(gate.inputs[0]),
                source_str(gate.inputs[1])
            );
        }
    }
    for (p, &src) in circuit.outputs.iter().enumerate() {
        let _ = writeln!(s, "out {p} {}", source_str(src));
    }
    s
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-empty line, split into fields, with its 1-based number.
    fn next_fields(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, line) in self.inner.by_ref() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Some((i + 1, fields));
            }
        }
        None
    }
}

pub fn from_text(text: &str) -> std::result::Result<Netlist, String> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };
    let mut expect = |key: &str| -> std::result::Result<(usize, Vec<&str>), String> {
        match lines.next_fields() {
            Some((n, f)) if f[0] == key => Ok((n, f)),
            Some((n, f)) => Err(format!("line {n}: expected '{key}', found '{}'", f[0])),
            None => Err(format!("missing '{key}' line")),
        }
    };
    fn num<T: std::str::FromStr>(n: usize, s: &str) -> std::result::Result<T, String> {
        s.parse().map_err(|_| format!("line {n}: cannot parse '{s}'"))
    }
    let (n, head) = expect(NETLIST_MAGIC)?;
    let version: u32 = num(n, head.get(1).copied().unwrap_or(""))?;
    if version != NETLIST_VERSION {
        return Err(format!("unsupported netlist version {version}"));
    }
    let (n, f) = expect("input_width")?;
    let input_width: usize = num(n, f.get(1).copied().unwrap_or(""))?;
    let (n, f) = expect("num_classes")?;
    let num_classes: usize = num(n, f.get(1).copied().unwrap_or(""))?;
    let (n, f) = expect("tau")?;
    let group_tau: f64 = num(n, f.get(1).copied().unwrap_or(""))?;
    let (n, f) = expect("layers")?;
    let sizes: Vec<usize> = f[1..]
        .iter()
        .map(|s| num(n, s))
        .collect::<std::result::Result<_, _>>()?;

    let mut encoder = None;
    let mut layers: Vec<Vec<Option<HardGate>>> = sizes.iter().map(|&s| vec![None; s]).collect();
    let mut outputs: Vec<Option<Source>> = Vec::new();
    let mut thresholds: Option<Vec<Option<Vec<f64>>>> = None;
    let mut levels = 0;
    let parse_src = |n: usize, s: &str| -> std::result::Result<Source, String> {
        match s {
            "c0" => Ok(Source::Const(false)),
            "c1" => Ok(Source::Const(true)),
            _ => Ok(Source::Signal(num(n, s)?)),
        }
    };
    while let Some((n, f)) = lines.next_fields() {
        match f[0] {
            "encoder" if f.len() == 3 => {
                let features: usize = num(n, f[1])?;
                levels = num(n, f[2])?;
                thresholds = Some(vec![None; features]);
            }
            "threshold" => {
                let t = thresholds
                    .as_mut()
                    .ok_or(format!("line {n}: threshold before encoder"))?;
                let feature: usize = num(n, f.get(1).copied().unwrap_or(""))?;
                let values: Vec<f64> = f[2..]
                    .iter()
                    .map(|s| num(n, s))
                    .collect::<std::result::Result<_, _>>()?;
                if values.len() != levels || feature >= t.len() {
                    return Err(format!("line {n}: malformed threshold record"));
                }
                t[feature] = Some(values);
            }
            "out" if f.len() == 3 => {
                let p: usize = num(n, f[1])?;
                if outputs.len() <= p {
                    outputs.resize(p + 1, None);
                }
                outputs[p] = Some(parse_src(n, f[2])?);
            }
            _ if f.len() == 5 => {
                let l: usize = num(n, f[0])?;
                let g: usize = num(n, f[1])?;
                let code: u8 = num(n, f[2])?;
                let table = GateTruthTable::from_code(code).map_err(|e| format!("line {n}: {e}"))?;
                let slot = layers
                    .get_mut(l)
                    .and_then(|layer| layer.get_mut(g))
                    .ok_or(format!("line {n}: gate {l}/{g} outside the declared layers"))?;
                *slot = Some(HardGate {
                    table,
                    inputs: [parse_src(n, f[3])?, parse_src(n, f[4])?],
                });
            }
            other => return Err(format!("line {n}: unexpected record '{other}'")),
        }
    }
    let layers = layers
        .into_iter()
        .enumerate()
        .map(|(l, layer)| {
            layer
                .into_iter()
                .enumerate()
                .map(|(g, gate)| gate.ok_or(format!("gate {l}/{g} missing")))
                .collect::<std::result::Result<Vec<_>, _>>()
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let outputs = outputs
        .into_iter()
        .enumerate()
        .map(|(p, s)| s.ok_or(format!("output {p} missing")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    if let Some(t) = thresholds {
        let t = t
            .into_iter()
            .enumerate()
            .map(|(f, v)| v.ok_or(format!("thresholds of feature {f} missing")))
            .collect::<std::result::Result<Vec<_>, _>>()?;
        encoder = Some(ThermometerEncoder::from_thresholds(t).map_err(|e| e.to_string())?);
    }
    let circuit = HardCircuit {
        input_width,
        num_classes,
        group_tau,
        layers,
        outputs,
    };
    circuit.validate().map_err(|e| e.to_string())?;
    Ok(Netlist { circuit, encoder })
}

pub fn write(path: &Path, circuit: &HardCircuit, encoder: Option<&ThermometerEncoder>) -> Result<()> {
    std::fs::write(path, to_text(circuit, encoder)).map_err(|e| BoolnetError::io(path, e))
}

pub fn read(path: &Path) -> Result<Netlist> {
    let text = std::fs::read_to_string(path).map_err(|e| BoolnetError::ingestion(path, e.to_string()))?;
    from_text(&text).map_err(|m| BoolnetError::ingestion(path, m))
}

//! Network files (JSON) and matrix files (CSV).
//!
//! Network JSON stores each layer sparsely with 1-based indices:
//!
//! ```json
//! {"activation": "relu2",
//!  "layers": [{"out_rows": 1, "out_cols": 4, "in_rows": 1, "in_cols": 2,
//!              "entries": [[1, 1, 1, 1, 1.0]],
//!              "bias": [[1, 2, -0.5]],
//!              "mask_rho": [[1, 1]]}]}
//! ```
//!
//! `entries` rows are `[i, j, k, l, value]`, meaning output `(i, j)` reads
//! input `(k, l)`. Absent bias entries are zero and absent mask entries are
//! identity units. Networks without activation units use `"linear"`.
//! Floats are written as shortest round-trip decimals, so save and load
//! reproduce a network exactly, including its entry order.
//!
//! Matrix CSV is row-major with no header.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{MnnError, Result};
use crate::matrix::Matrix;
use crate::mnn::{
    Activation, ActivationMask, Entry, Layer, MatrixShape, Mnn, SparseLinearMap, UnitKind,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerFile {
    pub out_rows: usize,
    pub out_cols: usize,
    pub in_rows: usize,
    pub in_cols: usize,
    pub entries: Vec<(u32, u32, u32, u32, f64)>,
    #[serde(default)]
    pub bias: Vec<(u32, u32, f64)>,
    #[serde(default)]
    pub mask_rho: Vec<(u32, u32)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub activation: String,
    pub layers: Vec<LayerFile>,
}

const LINEAR: &str = "linear";

impl NetworkFile {
    pub fn from_mnn(net: &Mnn) -> Self {
        let layers = net
            .layers()
            .iter()
            .map(|layer| {
                let (out, input) = (layer.out_shape(), layer.in_shape());
                LayerFile {
                    out_rows: out.rows(),
                    out_cols: out.cols(),
                    in_rows: input.rows(),
                    in_cols: input.cols(),
                    entries: layer
                        .map()
                        .entries()
                        .iter()
                        .map(|e| (e.row + 1, e.col + 1, e.in_row + 1, e.in_col + 1, e.value))
                        .collect(),
                    bias: layer
                        .bias()
                        .iter_nonzero()
                        .map(|(i, j, v)| (i as u32 + 1, j as u32 + 1, v))
                        .collect(),
                    mask_rho: layer
                        .mask()
                        .rho_positions()
                        .map(|(i, j)| (i as u32 + 1, j as u32 + 1))
                        .collect(),
                }
            })
            .collect();
        NetworkFile {
            activation: net
                .activation()
                .map_or(LINEAR, Activation::name)
                .to_string(),
            layers,
        }
    }

    pub fn to_mnn(&self) -> Result<Mnn> {
        let activation = match self.activation.as_str() {
            LINEAR => None,
            other => Some(other.parse::<Activation>().map_err(|_| {
                MnnError::NetworkFile(format!(
                    "unknown activation {other:?}; expected \"relu\", \"relu2\" or \"linear\""
                ))
            })?),
        };
        let layers = self
            .layers
            .iter()
            .enumerate()
            .map(|(idx, layer)| {
                layer
                    .to_layer()
                    .map_err(|e| MnnError::NetworkFile(format!("layer {}: {e}", idx + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        Mnn::new(layers, activation)
    }
}

fn shape_of(rows: usize, cols: usize, what: &str) -> Result<MatrixShape> {
    MatrixShape::new(rows, cols)
        .map_err(|_| MnnError::NetworkFile(format!("{what} shape {rows}x{cols} is empty")))
}

fn zero_based(idx: u32, bound: usize, what: &str) -> Result<usize> {
    if idx == 0 || idx as usize > bound {
        return Err(MnnError::NetworkFile(format!(
            "{what} index {idx} outside 1..={bound}"
        )));
    }
    Ok(idx as usize - 1)
}

impl LayerFile {
    fn to_layer(&self) -> Result<Layer> {
        let out = shape_of(self.out_rows, self.out_cols, "output")?;
        let input = shape_of(self.in_rows, self.in_cols, "input")?;
        let entries = self
            .entries
            .iter()
            .map(|&(i, j, k, l, v)| {
                Ok(Entry::new(
                    (
                        zero_based(i, out.rows(), "row")?,
                        zero_based(j, out.cols(), "column")?,
                    ),
                    (
                        zero_based(k, input.rows(), "row")?,
                        zero_based(l, input.cols(), "column")?,
                    ),
                    v,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let map = SparseLinearMap::new(out, input, entries)?;

        let mut bias = Matrix::zeros(out.rows(), out.cols());
        let mut seen = HashSet::new();
        for &(i, j, v) in &self.bias {
            let at = (
                zero_based(i, out.rows(), "bias row")?,
                zero_based(j, out.cols(), "bias column")?,
            );
            if !seen.insert(at) {
                return Err(MnnError::NetworkFile(format!(
                    "duplicate bias entry ({i}, {j})"
                )));
            }
            bias[at] = v;
        }

        let mut mask = ActivationMask::identity(out);
        for &(i, j) in &self.mask_rho {
            let at = (
                zero_based(i, out.rows(), "mask row")?,
                zero_based(j, out.cols(), "mask column")?,
            );
            mask.set(at.0, at.1, UnitKind::Rho);
        }
        Layer::new(map, bias, mask)
    }
}

pub fn write_network(net: &Mnn, writer: impl Write) -> Result<()> {
    serde_json::to_writer(writer, &NetworkFile::from_mnn(net))?;
    Ok(())
}

pub fn read_network(reader: impl Read) -> Result<Mnn> {
    let file: NetworkFile =
        serde_json::from_reader(reader).map_err(|e| MnnError::NetworkFile(e.to_string()))?;
    file.to_mnn()
}

pub fn save_network(net: &Mnn, path: impl AsRef<Path>) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_network(net, &mut writer)?;
    writer.flush()?;
    Ok(())
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Mnn> {
    read_network(BufReader::new(File::open(path)?))
}

pub fn read_matrix(reader: impl Read) -> Result<Matrix> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in csv.records() {
        let record = record.map_err(|e| MnnError::MatrixFile(e.to_string()))?;
        let width = *cols.get_or_insert(record.len());
        if record.len() != width {
            return Err(MnnError::MatrixFile(format!(
                "row {} has {} values, expected {width}",
                rows + 1,
                record.len()
            )));
        }
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| {
                MnnError::MatrixFile(format!(
                    "row {}, column {}: {field:?} is not a number",
                    rows + 1,
                    col + 1
                ))
            })?;
            data.push(value);
        }
        rows += 1;
    }
    match cols {
        Some(cols) if cols > 0 => Matrix::from_vec(rows, cols, data),
        _ => Err(MnnError::MatrixFile("no values".into())),
    }
}

pub fn write_matrix(m: &Matrix, writer: impl Write) -> Result<()> {
    let mut csv = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(writer);
    for i in 0..m.rows() {
        csv.write_record(m.row(i).iter().map(|v| format!("{v:?}")))?;
    }
    csv.flush()?;
    Ok(())
}

pub fn load_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    read_matrix(BufReader::new(File::open(path)?))
}

pub fn save_matrix(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    write_matrix(m, BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gadgets::{build_product_relu, GadgetSpec};
    use crate::mnn::identity_mnn;

    #[test]
    fn network_roundtrip_is_exact() {
        let net = build_product_relu(GadgetSpec::new(1e-3, 1.5).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_network(&net, &mut buf).unwrap();
        let back = read_network(buf.as_slice()).unwrap();
        assert_eq!(back, net);
    }

    #[test]
    fn linear_networks_say_so() {
        let net = identity_mnn(MatrixShape::square(2).unwrap(), 1).unwrap();
        let file = NetworkFile::from_mnn(&net);
        assert_eq!(file.activation, "linear");
        assert_eq!(file.layers[0].entries[0], (1, 1, 1, 1, 1.0));
        assert_eq!(file.to_mnn().unwrap(), net);
    }

    #[test]
    fn bad_network_files() {
        let text = r#"{"activation":"relu","layers":[{"out_rows":1,"out_cols":1,"in_rows":1,"in_cols":1,"entries":[[0,1,1,1,2.0]]}]}"#;
        assert!(matches!(
            read_network(text.as_bytes()),
            Err(MnnError::NetworkFile(_))
        ));
        let text = r#"{"activation":"tanh","layers":[]}"#;
        assert!(read_network(text.as_bytes()).is_err());
        let text = r#"{"activation":"relu","layers":[{"out_rows":1,"out_cols":1,"in_rows":1,"in_cols":1,"entries":[[1,1,1,1,2.0]],"mask_rho":[[1,1]]}]}"#;
        assert!(
            read_network(text.as_bytes()).is_err(),
            "last layer applies rho"
        );
    }

    #[test]
    fn matrix_csv() {
        let m = read_matrix("1, 2\n3,4.5\n".as_bytes()).unwrap();
        assert_eq!(m, Matrix::from_rows(&[[1.0, 2.0], [3.0, 4.5]]));
        let mut buf = Vec::new();
        write_matrix(&Matrix::from_rows(&[[0.1, -1e-300]]), &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "0.1,-1e-300\n");
        let mut buf = Vec::new();
        write_matrix(&Matrix::from_rows(&[[1.0, 2.5]]), &mut buf).unwrap();
        assert_eq!(
            read_matrix(buf.as_slice()).unwrap(),
            Matrix::from_rows(&[[1.0, 2.5]])
        );
        assert!(read_matrix("1,2\n3\n".as_bytes()).is_err());
        assert!(read_matrix("1,x\n".as_bytes()).is_err());
        assert!(read_matrix("".as_bytes()).is_err());
    }
}

//! Flat on-disk layout for generated instances.
//!
//! A directory holds `instance.json` with the problem kind, named scalars
//! and the shape of every array, plus one `<name>.csv` per array: one
//! matrix row per line, comma separated, shortest round-trip decimals.
//! Vectors are stored as single-column matrices.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{FusedLassoInstance, LassoInstance, MultitaskInstance, SparseGroupInstance, TvInstance};
use crate::error::{Error, Result};
use crate::linop::Convolution2d;
use crate::prox::GroupSpec;

pub const INDEX_FILE: &str = "instance.json";

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FlatInstance {
    pub kind: String,
    pub scalars: BTreeMap<String, f64>,
    pub arrays: BTreeMap<String, DMatrix<f64>>,
}

#[derive(Serialize, Deserialize)]
struct Index {
    kind: String,
    scalars: BTreeMap<String, f64>,
    arrays: BTreeMap<String, (usize, usize)>,
}

fn matrix_csv(m: &DMatrix<f64>) -> String {
    let mut s = String::new();
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        let _ = writeln!(s, "{}", cells.join(","));
    }
    s
}

fn parse_matrix(text: &str, shape: (usize, usize), name: &str) -> Result<DMatrix<f64>> {
    let bad = |msg: String| Error::param(format!("{name}.csv: {msg}"));
    let mut vals = Vec::with_capacity(shape.0 * shape.1);
    let mut rows = 0;
    for line in text.lines().filter(|l| !l.is_empty()) {
        let before = vals.len();
        for cell in line.split(',') {
            vals.push(cell.trim().parse::<f64>().map_err(|e| bad(format!("'{cell}': {e}")))?);
        }
        if vals.len() - before != shape.1 {
            return Err(bad(format!("row {rows} has {} cells, expected {}", vals.len() - before, shape.1)));
        }
        rows += 1;
    }
    if rows != shape.0 {
        return Err(bad(format!("{rows} rows, expected {}", shape.0)));
    }
    Ok(DMatrix::from_row_slice(shape.0, shape.1, &vals))
}

impl FlatInstance {
    pub fn new(kind: &str) -> Self {
        Self { kind: kind.into(), ..Self::default() }
    }

    fn scalar(mut self, name: &str, v: f64) -> Self {
        self.scalars.insert(name.into(), v);
        self
    }

    fn array(mut self, name: &str, m: DMatrix<f64>) -> Self {
        self.arrays.insert(name.into(), m);
        self
    }

    fn vector(self, name: &str, v: &DVector<f64>) -> Self {
        self.array(name, DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
    }

    fn expect_kind(&self, kind: &str) -> Result<()> {
        if self.kind != kind {
            return Err(Error::param(format!("expected a {kind} instance, found '{}'", self.kind)));
        }
        Ok(())
    }

    fn get_scalar(&self, name: &str) -> Result<f64> {
        self.scalars.get(name).copied().ok_or_else(|| Error::param(format!("missing scalar '{name}'")))
    }

    fn get_index(&self, name: &str) -> Result<usize> {
        let v = self.get_scalar(name)?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(Error::param(format!("scalar '{name}' must be a non-negative integer, got {v}")));
        }
        Ok(v as usize)
    }

    fn get_array(&self, name: &str) -> Result<&DMatrix<f64>> {
        self.arrays.get(name).ok_or_else(|| Error::param(format!("missing array '{name}'")))
    }

    fn get_vector(&self, name: &str) -> Result<DVector<f64>> {
        let m = self.get_array(name)?;
        if m.ncols() != 1 {
            return Err(Error::param(format!("array '{name}' must have one column, has {}", m.ncols())));
        }
        Ok(m.column(0).into_owned())
    }

    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let index = Index {
            kind: self.kind.clone(),
            scalars: self.scalars.clone(),
            arrays: self.arrays.iter().map(|(k, m)| (k.clone(), m.shape())).collect(),
        };
        let mut json = serde_json::to_string_pretty(&index)?;
        json.push('\n');
        fs::write(dir.join(INDEX_FILE), json)?;
        for (name, m) in &self.arrays {
            fs::write(dir.join(format!("{name}.csv")), matrix_csv(m))?;
        }
        Ok(())
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let index: Index = serde_json::from_str(&fs::read_to_string(dir.join(INDEX_FILE))?)?;
        let mut arrays = BTreeMap::new();
        for (name, shape) in index.arrays {
            let text = fs::read_to_string(dir.join(format!("{name}.csv")))?;
            let m = parse_matrix(&text, shape, &name)?;
            arrays.insert(name, m);
        }
        Ok(Self { kind: index.kind, scalars: index.scalars, arrays })
    }
}

impl LassoInstance {
    pub fn to_flat(&self) -> FlatInstance {
        FlatInstance::new("lasso")
            .scalar("lambda", self.lambda)
            .scalar("support_start", self.support.start as f64)
            .scalar("support_end", self.support.end as f64)
            .array("x", self.x.clone())
            .vector("y", &self.y)
            .vector("beta_true", &self.beta_true)
    }

    pub fn from_flat(f: &FlatInstance) -> Result<Self> {
        f.expect_kind("lasso")?;
        Ok(Self {
            x: f.get_array("x")?.clone(),
            y: f.get_vector("y")?,
            beta_true: f.get_vector("beta_true")?,
            support: f.get_index("support_start")?..f.get_index("support_end")?,
            lambda: f.get_scalar("lambda")?,
        })
    }
}

impl FusedLassoInstance {
    pub fn to_flat(&self) -> FlatInstance {
        FlatInstance::new("fused")
            .scalar("lambda", self.lambda)
            .vector("y", &self.y)
            .vector("signal", &self.signal)
            .array("d", self.d.clone())
    }

    pub fn from_flat(f: &FlatInstance) -> Result<Self> {
        f.expect_kind("fused")?;
        Ok(Self {
            y: f.get_vector("y")?,
            signal: f.get_vector("signal")?,
            d: f.get_array("d")?.clone(),
            lambda: f.get_scalar("lambda")?,
        })
    }
}

impl SparseGroupInstance {
    /// Groups are stored as a label per coordinate plus one weight per
    /// group.
    pub fn to_flat(&self) -> FlatInstance {
        let mut labels = DVector::zeros(self.groups.dim());
        for (g, idx) in self.groups.groups().iter().enumerate() {
            for &i in idx {
                labels[i] = g as f64;
            }
        }
        FlatInstance::new("sparse_group")
            .scalar("lambda_group", self.lambdas.0)
            .scalar("lambda_l1", self.lambdas.1)
            .scalar("group_size", self.group_size as f64)
            .array("x", self.x.clone())
            .vector("y", &self.y)
            .vector("beta_true", &self.beta_true)
            .vector("group_labels", &labels)
            .vector("group_weights", &DVector::from_column_slice(self.groups.weights()))
    }

    pub fn from_flat(f: &FlatInstance) -> Result<Self> {
        f.expect_kind("sparse_group")?;
        let weights = f.get_vector("group_weights")?;
        let mut groups = vec![Vec::new(); weights.len()];
        for (i, &g) in f.get_vector("group_labels")?.iter().enumerate() {
            let slot = groups
                .get_mut(g as usize)
                .filter(|_| g >= 0.0 && g.fract() == 0.0)
                .ok_or_else(|| Error::param(format!("bad group label {g} at coordinate {i}")))?;
            slot.push(i);
        }
        Ok(Self {
            x: f.get_array("x")?.clone(),
            y: f.get_vector("y")?,
            beta_true: f.get_vector("beta_true")?,
            groups: GroupSpec::new(groups, weights.iter().copied().collect())?,
            group_size: f.get_index("group_size")?,
            lambdas: (f.get_scalar("lambda_group")?, f.get_scalar("lambda_l1")?),
        })
    }
}

impl MultitaskInstance {
    pub fn to_flat(&self) -> FlatInstance {
        FlatInstance::new("multitask")
            .scalar("lambda_nuclear", self.lambdas.0)
            .scalar("lambda_row", self.lambdas.1)
            .scalar("lambda_col", self.lambdas.2)
            .array("x", self.x.clone())
            .array("y", self.y.clone())
            .array("b_true", self.b_true.clone())
    }

    pub fn from_flat(f: &FlatInstance) -> Result<Self> {
        f.expect_kind("multitask")?;
        Ok(Self {
            x: f.get_array("x")?.clone(),
            y: f.get_array("y")?.clone(),
            b_true: f.get_array("b_true")?.clone(),
            lambdas: (f.get_scalar("lambda_nuclear")?, f.get_scalar("lambda_row")?, f.get_scalar("lambda_col")?),
        })
    }
}

impl TvInstance {
    /// Images are stored as `size × size` matrices in row-major pixel
    /// order, the blur as its square kernel.
    pub fn to_flat(&self) -> FlatInstance {
        let s = self.size;
        let k = self.blur.kernel();
        let ks = (k.len() as f64).sqrt().round() as usize;
        FlatInstance::new("tv")
            .scalar("lambda", self.lambda)
            .scalar("smoothing_eps", self.smoothing_eps)
            .array("truth", DMatrix::from_row_slice(s, s, self.truth.as_slice()))
            .array("y", DMatrix::from_row_slice(s, s, self.y.as_slice()))
            .array("kernel", DMatrix::from_row_slice(ks, ks, k))
    }

    pub fn from_flat(f: &FlatInstance) -> Result<Self> {
        f.expect_kind("tv")?;
        let image = |name: &str| -> Result<DVector<f64>> {
            let m = f.get_array(name)?;
            if m.nrows() != m.ncols() {
                return Err(Error::param(format!("image '{name}' must be square")));
            }
            Ok(DVector::from_iterator(m.len(), m.transpose().iter().copied()))
        };
        let truth = image("truth")?;
        let y = image("y")?;
        let size = f.get_array("truth")?.nrows();
        if y.len() != truth.len() {
            return Err(Error::DimensionMismatch { expected: truth.len(), got: y.len() });
        }
        let k = f.get_array("kernel")?;
        let kernel: Vec<f64> = k.transpose().iter().copied().collect();
        Ok(Self {
            size,
            truth,
            blur: Convolution2d::new(size, size, kernel, k.nrows())?,
            y,
            lambda: f.get_scalar("lambda")?,
            smoothing_eps: f.get_scalar("smoothing_eps")?,
        })
    }
}

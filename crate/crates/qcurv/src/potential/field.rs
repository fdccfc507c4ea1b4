use super::{PotentialError, RadialGrid};
use std::fmt::Write as _;
use std::sync::Arc;

/// Finite values sampled at the nodes of a shared [`RadialGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct RadialField {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self, PotentialError> {
        if values.len() != grid.len() {
            return Err(PotentialError::LengthMismatch { expected: grid.len(), got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(PotentialError::NonFinite { index: i, r: grid.nodes()[i] });
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(r)` at every node.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self, PotentialError> {
        let values = grid.nodes().iter().map(|&r| f(r)).collect();
        Self::new(grid, values)
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Same grid check used by every binary operation.
    pub fn same_grid(&self, other: &RadialGrid) -> Result<(), PotentialError> {
        if self.grid.hash() != other.hash() {
            return Err(PotentialError::GridMismatch);
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f64, f64) -> f64) -> Result<Self, PotentialError> {
        let values = self.grid.nodes().iter().zip(&self.values).map(|(&r, &v)| f(r, v)).collect();
        Self::new(self.grid.clone(), values)
    }

    /// `a·self + b·other`.
    pub fn axpby(&self, a: f64, other: &Self, b: f64) -> Result<Self, PotentialError> {
        other.same_grid(&self.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(x, y)| a * x + b * y).collect();
        Self::new(self.grid.clone(), values)
    }

    /// `Σ w_i f_i`.
    pub fn integral(&self) -> f64 {
        self.grid.integrate(&self.values)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Two-column CSV `r,value` with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,value\n");
        for (r, v) in self.grid.nodes().iter().zip(&self.values) {
            writeln!(out, "{r:.16e},{v:.16e}").expect("writing to a string");
        }
        out
    }

    /// Read the CSV form back onto `grid`; node positions must match exactly.
    pub fn from_csv(grid: Arc<RadialGrid>, text: &str) -> Result<Self, PotentialError> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == "r,value" => {}
            _ => return Err(PotentialError::Csv("missing `r,value` header".into())),
        }
        let mut values = Vec::with_capacity(grid.len());
        for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
            let (r, v) = line
                .split_once(',')
                .ok_or_else(|| PotentialError::Csv(format!("line {}: expected two columns", i + 2)))?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|e| PotentialError::Csv(format!("line {}: {e}", i + 2)))
            };
            let (r, v) = (parse(r)?, parse(v)?);
            match grid.nodes().get(i) {
                Some(&node) if node == r => values.push(v),
                _ => return Err(PotentialError::Csv(format!("line {}: node r = {r} does not match the grid", i + 2))),
            }
        }
        Self::new(grid, values)
    }
}

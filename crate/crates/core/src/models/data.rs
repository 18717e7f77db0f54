use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{norm, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Labels {
    Class { y: Vec<usize>, classes: usize },
    Real(Vec<f64>),
}

/// Feature matrix (one sample per row) with labels and a provenance note.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Labels,
    pub provenance: String,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Labels, provenance: impl Into<String>) -> Result<Self> {
        let n = match &labels {
            Labels::Class { y, classes } => {
                if let Some(bad) = y.iter().find(|c| **c >= *classes) {
                    return Err(Error::InvalidArgument(format!("label {bad} >= {classes} classes")));
                }
                y.len()
            }
            Labels::Real(y) => y.len(),
        };
        if n != features.rows() || n == 0 {
            return Err(Error::Dimension(format!("{} feature rows, {n} labels", features.rows())));
        }
        Ok(Self { features, labels, provenance: provenance.into() })
    }

    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn class_labels(&self) -> Result<&[usize]> {
        match &self.labels {
            Labels::Class { y, .. } => Ok(y),
            Labels::Real(_) => Err(Error::InvalidArgument("dataset has real-valued labels".into())),
        }
    }

    pub fn num_classes(&self) -> Option<usize> {
        match &self.labels {
            Labels::Class { classes, .. } => Some(*classes),
            Labels::Real(_) => None,
        }
    }

    pub fn subset(&self, idx: &[usize]) -> Dataset {
        let labels = match &self.labels {
            Labels::Class { y, classes } => Labels::Class { y: idx.iter().map(|&i| y[i]).collect(), classes: *classes },
            Labels::Real(y) => Labels::Real(idx.iter().map(|&i| y[i]).collect()),
        };
        Dataset { features: self.features.select_rows(idx), labels, provenance: self.provenance.clone() }
    }

    pub fn max_feature_norm(&self) -> f64 {
        (0..self.len()).map(|i| norm(self.features.row(i))).fold(0.0, f64::max)
    }

    /// Rescale any feature vector with norm above `radius` onto the sphere.
    pub fn clip_feature_norms(&mut self, radius: f64) {
        for i in 0..self.len() {
            let row = self.features.row_mut(i);
            let n = norm(row);
            if n > radius {
                let s = radius / n;
                row.iter_mut().for_each(|v| *v *= s);
            }
        }
    }
}

use std::io::{self, Write};

/// Labelled feature matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<f64>,
    pub labels: Vec<usize>,
    pub dim: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    /// CSV with header `x1,...,xd,label`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        let header: Vec<String> = (1..=self.dim).map(|k| format!("x{k}")).collect();
        writeln!(out, "{},label", header.join(","))?;
        for i in 0..self.len() {
            for v in self.row(i) {
                write!(out, "{v},")?;
            }
            writeln!(out, "{}", self.labels[i])?;
        }
        Ok(())
    }
}

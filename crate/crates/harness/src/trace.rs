//! Per-step trace rows and their CSV form.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

pub const TRACE_HEADER: [&str; 10] = [
    "t",
    "loss",
    "grad_norm",
    "gamma",
    "d_norm",
    "tau",
    "sum_gamma_decay",
    "sum_step_energy",
    "sum_mu_drift",
    "wall_ms",
];

/// One trace row. `loss` and `grad_norm` are exact values at `x_t`; the step
/// columns describe the step that produced `x_t` and are zero at `t = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub t: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub gamma: f64,
    pub d_norm: f64,
    pub tau: f64,
    pub sum_gamma_decay: f64,
    pub sum_step_energy: f64,
    pub sum_mu_drift: f64,
    pub wall_ms: f64,
}

impl TraceRecord {
    pub fn metric(&self, name: &str) -> Option<f64> {
        Some(match name {
            "t" => self.t as f64,
            "loss" => self.loss,
            "grad_norm" => self.grad_norm,
            "gamma" => self.gamma,
            "d_norm" => self.d_norm,
            "tau" => self.tau,
            "sum_gamma_decay" => self.sum_gamma_decay,
            "sum_step_energy" => self.sum_step_energy,
            "sum_mu_drift" => self.sum_mu_drift,
            "wall_ms" => self.wall_ms,
            _ => return None,
        })
    }

    pub fn is_finite(&self) -> bool {
        self.loss.is_finite() && self.grad_norm.is_finite()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccuracyRecord {
    pub t: u64,
    pub accuracy: f64,
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Header-only CSV for an empty row set.
pub fn write_trace_csv<W: Write>(rows: &[TraceRecord], mut out: W) -> csv::Result<()> {
    if rows.is_empty() {
        writeln!(out, "{}", TRACE_HEADER.join(","))?;
        return Ok(());
    }
    write_csv(rows, out)
}

pub fn read_trace_csv<R: Read>(input: R) -> csv::Result<Vec<TraceRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != TRACE_HEADER {
        return Err(csv::Error::from(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("unexpected trace header {header:?}"),
        )));
    }
    r.deserialize().collect()
}

pub fn read_accuracy_csv<R: Read>(input: R) -> csv::Result<Vec<AccuracyRecord>> {
    csv::Reader::from_reader(input).deserialize().collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: u64) -> TraceRecord {
        TraceRecord {
            t,
            loss: 0.1 / t as f64,
            grad_norm: 1e-7,
            gamma: -0.0,
            d_norm: f64::NAN,
            tau: 3.0,
            sum_gamma_decay: 0.0,
            sum_step_energy: 1e300,
            sum_mu_drift: 0.25,
            wall_ms: 0.0,
        }
    }

    #[test]
    fn header_is_exact() {
        let mut buf = Vec::new();
        write_trace_csv(&[row(1)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,loss,grad_norm,gamma,d_norm,tau,sum_gamma_decay,sum_step_energy,sum_mu_drift,wall_ms\n"));
        let mut empty = Vec::new();
        write_trace_csv(&[], &mut empty).unwrap();
        assert_eq!(String::from_utf8(empty).unwrap().lines().next().unwrap(), TRACE_HEADER.join(","));
    }

    #[test]
    fn round_trip_is_exact() {
        let rows: Vec<TraceRecord> = (1..5).map(row).collect();
        let mut buf = Vec::new();
        write_trace_csv(&rows, &mut buf).unwrap();
        let back = read_trace_csv(buf.as_slice()).unwrap();
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.loss.to_bits(), b.loss.to_bits());
            assert_eq!(a.sum_step_energy, b.sum_step_energy);
            assert!(b.d_norm.is_nan());
        }
    }

    #[test]
    fn wrong_header_is_rejected() {
        assert!(read_trace_csv("a,b\n1,2\n".as_bytes()).is_err());
    }
}

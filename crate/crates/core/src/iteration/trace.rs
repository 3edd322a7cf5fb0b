use serde::{Deserialize, Serialize};
use std::io::Write;

use super::{AnchorPoint, Mapping, Schedule};
use crate::error::{Error, Result};
use crate::space::GeodesicSpace;

/// A KM orbit `x_0, …, x_S` with per-step quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace<P> {
    pub points: Vec<P>,
    /// `λ_n` for `n ≤ S` (the last one is unused by the orbit).
    pub lambdas: Vec<f64>,
    pub ks: Vec<f64>,
    /// `d(x_n, T x_n)`.
    pub residuals: Vec<f64>,
    /// `d(Tⁿx_n, x_n)`.
    pub power_residuals: Vec<f64>,
    /// `d(x_n, p)` when an anchor was given.
    pub anchor_dists: Option<Vec<f64>>,
}

/// One CSV row of a trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub n: usize,
    pub lambda_n: f64,
    pub k_n: f64,
    pub residual: f64,
    pub power_residual: f64,
    pub dist_to_anchor: Option<f64>,
}

impl<P> Trace<P> {
    /// Number of steps `S`.
    pub fn steps(&self) -> usize {
        self.points.len() - 1
    }

    pub fn rows(&self) -> impl Iterator<Item = TraceRow> + '_ {
        (0..self.points.len()).map(move |n| TraceRow {
            n,
            lambda_n: self.lambdas[n],
            k_n: self.ks[n],
            residual: self.residuals[n],
            power_residual: self.power_residuals[n],
            dist_to_anchor: self.anchor_dists.as_ref().map(|a| a[n]),
        })
    }

    /// Writes the columns `n, lambda_n, k_n, residual, power_residual, dist_to_anchor`.
    /// Floats are written in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for row in self.rows() {
            w.serialize(row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Reads rows written by [`Trace::write_csv`].
pub fn read_csv_rows<R: std::io::Read>(input: R) -> Result<Vec<TraceRow>> {
    let mut r = csv::Reader::from_reader(input);
    let mut rows = Vec::new();
    for row in r.deserialize() {
        rows.push(row?);
    }
    Ok(rows)
}

/// Runs `steps` KM steps from `x0`, recomputing `Tⁿx_n` by `n`-fold application.
pub fn km_iterate<S: GeodesicSpace>(
    space: &S,
    t: &Mapping<S::Point>,
    sched: &Schedule,
    x0: &S::Point,
    steps: usize,
    anchor: Option<&AnchorPoint<S::Point>>,
) -> Result<Trace<S::Point>> {
    space.validate(x0)?;
    let mut tr = Trace {
        points: Vec::with_capacity(steps + 1),
        lambdas: Vec::with_capacity(steps + 1),
        ks: Vec::with_capacity(steps + 1),
        residuals: Vec::with_capacity(steps + 1),
        power_residuals: Vec::with_capacity(steps + 1),
        anchor_dists: anchor.map(|_| Vec::with_capacity(steps + 1)),
    };
    let mut x = x0.clone();
    for n in 0..=steps {
        let lambda = sched.at(n);
        let tx = t.apply(&x);
        let tnx = t.apply_power(n, &x);
        if !space.is_finite(&tx) || !space.is_finite(&tnx) {
            return Err(Error::Numeric {
                step: n,
                detail: format!("mapping {} produced a non-finite point", t.name),
            });
        }
        tr.lambdas.push(lambda);
        tr.ks.push(t.k_at(n));
        tr.residuals.push(space.dist(&x, &tx));
        tr.power_residuals.push(space.dist(&tnx, &x));
        if let (Some(a), Some(ds)) = (anchor, tr.anchor_dists.as_mut()) {
            ds.push(space.dist(&x, &a.point));
        }
        if n == steps {
            tr.points.push(x);
            break;
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Hypothesis(format!("schedule: λ_{n} = {lambda} outside [0, 1]")));
        }
        let next = space.combine(&x, &tnx, lambda);
        if !space.is_finite(&next) {
            return Err(Error::Numeric {
                step: n + 1,
                detail: "iterate is not finite".into(),
            });
        }
        tr.points.push(std::mem::replace(&mut x, next));
    }
    Ok(tr)
}

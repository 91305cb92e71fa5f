use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{ParticleError, Result};

/// A right-continuous piecewise-constant path on `[start, end]`: the value
/// `values[i]` holds on `[times[i], times[i + 1])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    times: Vec<f64>,
    values: Vec<f64>,
    end: f64,
}

impl Trajectory {
    pub fn new(start: f64, value: f64) -> Self {
        Trajectory {
            times: vec![start],
            values: vec![value],
            end: start,
        }
    }

    /// Records a change of value at time `t`. Repeated values are merged.
    pub fn push(&mut self, t: f64, value: f64) -> Result<()> {
        let last = *self.times.last().expect("nonempty");
        if !(t > last) {
            return Err(ParticleError::Trajectory(format!(
                "event time {t} does not follow {last}"
            )));
        }
        if *self.values.last().expect("nonempty") != value {
            self.times.push(t);
            self.values.push(value);
        }
        self.end = self.end.max(t);
        Ok(())
    }

    /// Extends the record to `end` without changing the current value.
    pub fn close(&mut self, end: f64) {
        self.end = self.end.max(end);
    }

    pub fn start(&self) -> f64 {
        self.times[0]
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn events(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&x| x <= t);
        self.values[i.saturating_sub(1)]
    }

    /// Exact integral over `[a, b]`, which must lie in the recorded span.
    pub fn integrate(&self, a: f64, b: f64) -> f64 {
        debug_assert!(a >= self.start() - 1e-12 && b <= self.end + 1e-12 && a <= b);
        let mut i = self.times.partition_point(|&x| x <= a).saturating_sub(1);
        let mut acc = 0.0;
        let mut lo = a;
        while lo < b {
            let hi = self.times.get(i + 1).copied().unwrap_or(f64::INFINITY).min(b);
            acc += self.values[i] * (hi - lo);
            lo = hi;
            i += 1;
        }
        acc
    }

    /// Integrals over the `m` equal pieces of `[s, s + t]`. Their ordered sum
    /// is the occupation integral reported for the whole window.
    pub fn segment_integrals(&self, s: f64, t: f64, m: usize) -> Vec<f64> {
        (0..m)
            .map(|i| {
                let a = s + t * i as f64 / m as f64;
                let b = if i + 1 == m { s + t } else { s + t * (i + 1) as f64 / m as f64 };
                self.integrate(a, b)
            })
            .collect()
    }

    /// One `time,value` line per change of value, after a header.
    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["time", "value"])?;
        for (t, v) in self.events() {
            wr.write_record([t.to_string(), v.to_string()])?;
        }
        wr.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrals_are_exact() {
        let mut tr = Trajectory::new(0.0, 1.0);
        tr.push(0.5, 0.0).unwrap();
        tr.push(2.0, 1.0).unwrap();
        tr.push(2.5, 1.0).unwrap();
        tr.close(4.0);
        assert_eq!(tr.events().count(), 3);
        assert_eq!(tr.integrate(0.0, 4.0), 0.5 + 2.0);
        assert_eq!(tr.integrate(0.25, 2.25), 0.25 + 0.25);
        assert_eq!(tr.value_at(0.5), 0.0);
        assert_eq!(tr.value_at(3.0), 1.0);
        let seg = tr.segment_integrals(0.0, 4.0, 4);
        assert_eq!(seg, vec![0.5, 0.0, 1.0, 1.0]);
        assert!(tr.push(1.0, 0.0).is_err());
    }

    #[test]
    fn csv_lines() {
        let mut tr = Trajectory::new(0.0, 0.0);
        tr.push(1.5, 1.0).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "time,value\n0,0\n1.5,1\n");
    }
}

use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// A time-stamped multivariate sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    times: Vec<f64>,
    /// `T x d`
    values: Matrix,
    labels: Option<Vec<i64>>,
}

impl Trajectory {
    pub fn new(times: Vec<f64>, values: Matrix, labels: Option<Vec<i64>>) -> Result<Self> {
        if times.len() != values.rows() {
            return Err(Error::DimensionMismatch {
                context: "trajectory rows",
                expected: times.len(),
                actual: values.rows(),
            });
        }
        if let Some(l) = &labels {
            crate::error::check_len("trajectory labels", times.len(), l.len())?;
        }
        crate::error::check_finite("trajectory times", &times)?;
        if let Some(i) = times.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidArgument(format!(
                "trajectory times must be strictly increasing (rows {} and {})",
                i,
                i + 1
            )));
        }
        Ok(Self {
            times,
            values,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.values.cols()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn labels(&self) -> Option<&[i64]> {
        self.labels.as_deref()
    }

    pub fn row(&self, t: usize) -> &[f64] {
        self.values.row(t)
    }

    /// `dt_i = t_{i+1} - t_i`, length `T - 1`.
    pub fn dt(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Rows `start..start + len` as a `d x len` matrix (one column per time).
    pub fn window_columns(&self, start: usize, len: usize) -> Matrix {
        Matrix::from_fn(self.dim(), len, |r, c| self.values.get(start + c, r))
    }

    /// Writes `t,x1..xd[,label]` with 17 significant digits.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["t".to_string()];
        header.extend((1..=self.dim()).map(|i| format!("x{i}")));
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header)?;
        for t in 0..self.len() {
            let mut rec = vec![format!("{:.16e}", self.times[t])];
            rec.extend(self.row(t).iter().map(|v| format!("{v:.16e}")));
            if let Some(l) = &self.labels {
                rec.push(l[t].to_string());
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let parse_err = |line: u64, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .flexible(true)
            .trim(csv::Trim::All)
            .from_path(path)?;
        let header = reader.headers()?.clone();
        if header.get(0) != Some("t") {
            return Err(parse_err(1, "header must start with `t`".into()));
        }
        let has_label = header.iter().last() == Some("label");
        let d = header.len() - 1 - usize::from(has_label);
        for (i, name) in header.iter().skip(1).take(d).enumerate() {
            if name != format!("x{}", i + 1) {
                return Err(parse_err(
                    1,
                    format!("expected column `x{}`, found `{name}`", i + 1),
                ));
            }
        }
        let mut times = Vec::new();
        let mut data = Vec::new();
        let mut labels = has_label.then(Vec::new);
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != header.len() {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, found {}", header.len(), rec.len()),
                ));
            }
            let num = |i: usize| -> Result<f64> {
                let field = &rec[i];
                field
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| {
                        parse_err(
                            line,
                            format!("field {} (`{field}`) is not a finite number", i + 1),
                        )
                    })
            };
            let t = num(0)?;
            if let Some(&prev) = times.last() {
                if !(t > prev) {
                    return Err(parse_err(
                        line,
                        format!("time {t} does not increase (previous {prev})"),
                    ));
                }
            }
            times.push(t);
            for i in 1..=d {
                data.push(num(i)?);
            }
            if let Some(l) = &mut labels {
                let field = &rec[d + 1];
                l.push(
                    field.parse::<i64>().map_err(|_| {
                        parse_err(line, format!("label `{field}` is not an integer"))
                    })?,
                );
            }
        }
        if times.is_empty() {
            return Err(parse_err(2, "no data rows".into()));
        }
        let values = Matrix::from_vec(times.len(), d, data)?;
        Self::new(times, values, labels)
    }
}

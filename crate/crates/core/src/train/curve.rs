use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossRecord {
    pub iteration: usize,
    pub train_loss: f64,
    pub eval_loss: Option<f64>,
    pub wall_time_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LossCurve {
    pub records: Vec<LossRecord>,
}

impl LossCurve {
    pub fn push(&mut self, record: LossRecord) {
        self.records.push(record);
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn initial_loss(&self) -> Option<f64> {
        self.records.first().map(|r| r.train_loss)
    }

    /// Mean training loss over the last `n` records (fewer if the curve is shorter).
    pub fn trailing_mean(&self, n: usize) -> Option<f64> {
        let k = n.min(self.records.len());
        (k > 0).then(|| {
            self.records[self.records.len() - k..]
                .iter()
                .map(|r| r.train_loss)
                .sum::<f64>()
                / k as f64
        })
    }

    pub fn write_csv(&self, w: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iteration", "train_loss", "eval_loss", "wall_time_ms"])?;
        for r in &self.records {
            wr.write_record([
                r.iteration.to_string(),
                format!("{:e}", r.train_loss),
                r.eval_loss.map(|e| format!("{e:e}")).unwrap_or_default(),
                format!("{:.3}", r.wall_time_ms),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_columns_and_trailing_mean() {
        let mut c = LossCurve::default();
        for i in 0..4 {
            c.push(LossRecord {
                iteration: i,
                train_loss: (4 - i) as f64,
                eval_loss: (i == 3).then_some(0.5),
                wall_time_ms: i as f64,
            });
        }
        assert_eq!(c.initial_loss(), Some(4.0));
        assert_eq!(c.trailing_mean(2), Some(1.5));
        assert_eq!(c.trailing_mean(100), Some(2.5));
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "iteration,train_loss,eval_loss,wall_time_ms");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].ends_with(",,0.000"));
        assert!(lines[4].contains(",5e-1,"));
    }
}

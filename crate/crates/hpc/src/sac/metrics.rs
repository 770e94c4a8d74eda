use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::HpcError;

pub const METRICS_HEADER: &str = "step,episode,return,success,loss_q,loss_v,loss_pi,entropy,alpha";

#[derive(Debug, Clone, Copy)]
pub struct MetricsRow {
    pub step: usize,
    pub episode: usize,
    pub episode_return: f64,
    pub success: bool,
    pub loss_q: f64,
    pub loss_v: f64,
    pub loss_pi: f64,
    pub entropy: f64,
    pub alpha: f64,
}

/// Append-only CSV writer for the fixed training metrics schema.
pub struct MetricsWriter {
    out: Option<BufWriter<File>>,
    pub rows: Vec<MetricsRow>,
}

impl MetricsWriter {
    pub fn to_file(path: &Path) -> Result<Self, HpcError> {
        let file = File::create(path)
            .map_err(|e| HpcError::Io(format!("cannot create '{}': {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{METRICS_HEADER}")
            .map_err(|e| HpcError::Io(format!("write '{}': {e}", path.display())))?;
        Ok(Self {
            out: Some(out),
            rows: Vec::new(),
        })
    }

    pub fn in_memory() -> Self {
        Self {
            out: None,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: MetricsRow) -> Result<(), HpcError> {
        if let Some(out) = &mut self.out {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                row.step,
                row.episode,
                row.episode_return,
                if row.success { 1 } else { 0 },
                row.loss_q,
                row.loss_v,
                row.loss_pi,
                row.entropy,
                row.alpha
            )
            .map_err(|e| HpcError::Io(format!("metrics write failed: {e}")))?;
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn finish(mut self) -> Result<Vec<MetricsRow>, HpcError> {
        if let Some(out) = &mut self.out {
            out.flush()
                .map_err(|e| HpcError::Io(format!("metrics flush failed: {e}")))?;
        }
        Ok(self.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows_follow_the_header_schema() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("metrics.csv");
        let mut w = MetricsWriter::to_file(&path).unwrap();
        w.push(MetricsRow {
            step: 10,
            episode: 1,
            episode_return: -2.5,
            success: true,
            loss_q: 0.125,
            loss_v: 0.0,
            loss_pi: -1.0,
            entropy: 0.6931471805599453,
            alpha: 0.05,
        })
        .unwrap();
        let rows = w.finish().unwrap();
        assert_eq!(rows.len(), 1);
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), METRICS_HEADER);
        assert_eq!(
            lines.next().unwrap(),
            "10,1,-2.5,1,0.125,0,-1,0.6931471805599453,0.05"
        );
        assert!(lines.next().is_none());
    }

    #[test]
    fn in_memory_writer_keeps_rows_without_io() {
        let mut w = MetricsWriter::in_memory();
        for step in 0..3 {
            w.push(MetricsRow {
                step,
                episode: step,
                episode_return: step as f64,
                success: false,
                loss_q: 0.0,
                loss_v: 0.0,
                loss_pi: 0.0,
                entropy: 0.0,
                alpha: 0.1,
            })
            .unwrap();
        }
        assert_eq!(w.rows.len(), 3);
    }
}

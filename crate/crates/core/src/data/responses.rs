//! Examinee-by-task response matrices with explicit missing cells.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{at_path, Error, Result};

/// Marker for a missing cell in response CSV files.
pub const MISSING: &str = "NA";

/// 0/1 responses, `None` where the examinee did not see the task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseMatrix {
    examinees: Vec<String>,
    tasks: Vec<String>,
    cells: Vec<Option<u8>>,
}

impl ResponseMatrix {
    /// `cells` is row-major, one row per examinee.
    pub fn new(examinees: Vec<String>, tasks: Vec<String>, cells: Vec<Option<u8>>) -> Result<Self> {
        if cells.len() != examinees.len() * tasks.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} cells for {} examinees × {} tasks",
                cells.len(),
                examinees.len(),
                tasks.len()
            )));
        }
        if let Some(v) = cells.iter().flatten().find(|&&v| v > 1) {
            return Err(Error::InvalidParameter(format!("response value {v} is not 0/1")));
        }
        if examinees.iter().collect::<BTreeSet<_>>().len() != examinees.len() {
            return Err(Error::InvalidParameter("duplicate examinee id".to_string()));
        }
        if tasks.iter().collect::<BTreeSet<_>>().len() != tasks.len() {
            return Err(Error::InvalidParameter("duplicate task id".to_string()));
        }
        Ok(ResponseMatrix { examinees, tasks, cells })
    }

    pub fn examinees(&self) -> &[String] {
        &self.examinees
    }

    pub fn tasks(&self) -> &[String] {
        &self.tasks
    }

    pub fn n_examinees(&self) -> usize {
        self.examinees.len()
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn get(&self, examinee: usize, task: usize) -> Option<u8> {
        self.cells[examinee * self.tasks.len() + task]
    }

    pub fn row(&self, examinee: usize) -> &[Option<u8>] {
        let n = self.tasks.len();
        &self.cells[examinee * n..(examinee + 1) * n]
    }

    pub fn cells(&self) -> &[Option<u8>] {
        &self.cells
    }

    pub fn task_index(&self, id: &str) -> Result<usize> {
        self.tasks
            .iter()
            .position(|t| t == id)
            .ok_or_else(|| Error::UnknownTask(id.to_string()))
    }

    pub fn examinee_index(&self, id: &str) -> Result<usize> {
        self.examinees
            .iter()
            .position(|e| e == id)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown examinee `{id}`")))
    }

    /// Rows `examinees` (by index), all tasks.
    pub fn select_examinees(&self, examinees: &[usize]) -> Result<ResponseMatrix> {
        let mut ids = Vec::with_capacity(examinees.len());
        let mut cells = Vec::with_capacity(examinees.len() * self.tasks.len());
        for &i in examinees {
            if i >= self.examinees.len() {
                return Err(Error::DimensionMismatch(format!("examinee index {i} out of range")));
            }
            ids.push(self.examinees[i].clone());
            cells.extend_from_slice(self.row(i));
        }
        ResponseMatrix::new(ids, self.tasks.clone(), cells)
    }

    /// Columns `tasks` (by id, in the given order), all examinees.
    pub fn select_tasks<S: AsRef<str>>(&self, tasks: &[S]) -> Result<ResponseMatrix> {
        let cols = tasks
            .iter()
            .map(|t| self.task_index(t.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let mut cells = Vec::with_capacity(self.examinees.len() * cols.len());
        for i in 0..self.examinees.len() {
            cells.extend(cols.iter().map(|&j| self.get(i, j)));
        }
        ResponseMatrix::new(
            self.examinees.clone(),
            cols.iter().map(|&j| self.tasks[j].clone()).collect(),
            cells,
        )
    }

    /// Reads CSV with header `examinee,<task ids…>` and cells `0`, `1` or `NA`.
    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(reader);
        let header = rdr.headers()?.clone();
        if header.is_empty() {
            return Err(Error::Malformed {
                line: 1,
                message: "empty header".to_string(),
            });
        }
        let tasks: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
        let mut examinees = Vec::new();
        let mut cells = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if record.len() != tasks.len() + 1 {
                return Err(Error::Malformed {
                    line,
                    message: format!("expected {} fields, found {}", tasks.len() + 1, record.len()),
                });
            }
            examinees.push(record[0].trim().to_string());
            for field in record.iter().skip(1) {
                cells.push(match field.trim() {
                    "0" => Some(0),
                    "1" => Some(1),
                    MISSING => None,
                    other => {
                        return Err(Error::Malformed {
                            line,
                            message: format!("cell `{other}` is not 0, 1 or {MISSING}"),
                        })
                    }
                });
            }
        }
        ResponseMatrix::new(examinees, tasks, cells)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["examinee".to_string()];
        header.extend(self.tasks.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in self.examinees.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.row(i).iter().map(|c| match c {
                Some(v) => v.to_string(),
                None => MISSING.to_string(),
            }));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        at_path(path, || ResponseMatrix::read_csv(std::fs::File::open(path)?))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        at_path(path, || {
            let mut buf = Vec::new();
            self.write_csv(&mut buf)?;
            Ok(std::fs::write(path, buf)?)
        })
    }
}

//! Labeled datasets for fine-tuning.
//!
//! CSV layout: header row with a required `smiles` column; every other
//! column is a label. Empty cells are missing labels and are masked out of
//! the loss.

use super::TrainError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskType {
    Classification,
    Regression,
}

impl TaskType {
    pub fn parse(s: &str) -> Option<TaskType> {
        match s.trim() {
            "classification" => Some(TaskType::Classification),
            "regression" => Some(TaskType::Regression),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TaskType::Classification => "classification",
            TaskType::Regression => "regression",
        }
    }
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub smiles: Vec<String>,
    /// Row-major: `labels[record][column]`.
    pub labels: Vec<Vec<Option<f64>>>,
    pub label_names: Vec<String>,
    pub task_types: Vec<TaskType>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.smiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.smiles.is_empty()
    }

    pub fn n_labels(&self) -> usize {
        self.label_names.len()
    }

    /// Observed label range of one column (for scaled errors).
    pub fn label_range(&self, column: usize) -> Option<f64> {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for row in &self.labels {
            if let Some(v) = row[column] {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        (hi > lo).then_some(hi - lo)
    }

    /// Parses dataset CSV. `task_types` must name one type per label column
    /// or a single type that broadcasts to all columns.
    pub fn from_csv(text: &str, task_types: &[TaskType]) -> Result<Dataset, TrainError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| TrainError::Dataset(format!("bad CSV header: {e}")))?
            .clone();
        let smiles_col = headers
            .iter()
            .position(|h| h.trim() == "smiles")
            .ok_or_else(|| TrainError::Dataset("CSV needs a 'smiles' column".into()))?;
        let label_names: Vec<String> = headers
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != smiles_col)
            .map(|(_, h)| h.trim().to_string())
            .collect();
        if label_names.is_empty() {
            return Err(TrainError::Dataset("CSV has no label columns".into()));
        }
        let task_types: Vec<TaskType> = if task_types.len() == 1 {
            vec![task_types[0]; label_names.len()]
        } else if task_types.len() == label_names.len() {
            task_types.to_vec()
        } else {
            return Err(TrainError::Dataset(format!(
                "{} task types declared for {} label columns",
                task_types.len(),
                label_names.len()
            )));
        };

        let mut smiles = Vec::new();
        let mut labels = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record =
                record.map_err(|e| TrainError::Dataset(format!("CSV record {}: {e}", line + 2)))?;
            let mut row = Vec::with_capacity(label_names.len());
            for (i, field) in record.iter().enumerate() {
                if i == smiles_col {
                    continue;
                }
                let t = field.trim();
                if t.is_empty() {
                    row.push(None);
                } else {
                    let v: f64 = t.parse().map_err(|_| {
                        TrainError::Dataset(format!(
                            "CSV record {}: label {t:?} is not a number",
                            line + 2
                        ))
                    })?;
                    row.push(Some(v));
                }
            }
            if row.iter().all(|v| v.is_none()) {
                return Err(TrainError::Dataset(format!(
                    "CSV record {}: every label is missing",
                    line + 2
                )));
            }
            smiles.push(record[smiles_col].trim().to_string());
            labels.push(row);
        }
        if smiles.is_empty() {
            return Err(TrainError::EmptyDataset);
        }
        Ok(Dataset {
            smiles,
            labels,
            label_names,
            task_types,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_csv_with_missing_labels() {
        let csv = "smiles,tox,sol\nCCO,1,0.5\nc1ccccc1,,1.25\nCC,0,\n";
        let ds = Dataset::from_csv(csv, &[TaskType::Classification]).unwrap();
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.label_names, vec!["tox", "sol"]);
        assert_eq!(ds.labels[1][0], None);
        assert_eq!(ds.labels[1][1], Some(1.25));
        assert_eq!(ds.labels[2][1], None);
        assert_eq!(ds.task_types.len(), 2);
    }

    #[test]
    fn smiles_column_may_sit_anywhere() {
        let csv = "y,smiles\n1.5,CCO\n2.5,CC\n";
        let ds = Dataset::from_csv(csv, &[TaskType::Regression]).unwrap();
        assert_eq!(ds.smiles, vec!["CCO", "CC"]);
        assert_eq!(ds.labels[0], vec![Some(1.5)]);
        assert_eq!(ds.label_range(0), Some(1.0));
    }

    #[test]
    fn rejects_malformed_inputs() {
        assert!(Dataset::from_csv("a,b\n1,2\n", &[TaskType::Regression]).is_err());
        assert!(Dataset::from_csv("smiles\nCCO\n", &[TaskType::Regression]).is_err());
        assert!(
            Dataset::from_csv("smiles,y\nCCO,abc\n", &[TaskType::Regression]).is_err()
        );
        assert!(matches!(
            Dataset::from_csv("smiles,y\n", &[TaskType::Regression]),
            Err(TrainError::EmptyDataset)
        ));
        // A record with no labels at all is rejected.
        assert!(Dataset::from_csv("smiles,y\nCCO,\n", &[TaskType::Regression]).is_err());
    }
}

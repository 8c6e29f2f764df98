//! CSV ingestion into a [`RawTable`].

use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

use super::dataset::RawTable;
use super::schema::FeatureSchema;

/// Reads a header-first, comma-delimited CSV file and extracts the mapped
/// columns. Unmapped columns are ignored.
pub fn load_csv(path: impl AsRef<Path>, schema: &FeatureSchema) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, schema).map_err(|e| match e {
        Error::Csv { source, .. } => Error::csv(path, source),
        other => other,
    })
}

/// Same as [`load_csv`] over any reader.
pub fn read_csv<R: Read>(reader: R, schema: &FeatureSchema) -> Result<RawTable> {
    let name = schema.dataset_name().to_string();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::csv("<reader>", e))?.clone();
    let position = |column: &str| {
        headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| Error::MissingColumn {
                dataset: name.clone(),
                column: column.to_string(),
            })
    };
    let label_idx = position(schema.label_column())?;
    let feature_idx = schema
        .source_columns()
        .iter()
        .map(|c| position(c))
        .collect::<Result<Vec<_>>>()?;

    let missing_tokens = schema.missing_values();
    let parse = |cell: &str| -> (Option<f64>, bool) {
        if cell.is_empty() || cell == "NA" || cell == "?" || missing_tokens.iter().any(|t| t == cell) {
            return (None, false);
        }
        match cell.parse::<f64>() {
            Ok(v) if v.is_finite() => (Some(v), false),
            _ => (None, true),
        }
    };

    let mut table = RawTable {
        name: name.clone(),
        features: schema.features().to_vec(),
        rows: Vec::new(),
        labels: Vec::new(),
        unparsable_cells: 0,
        dropped_rows: 0,
    };
    for record in rdr.records() {
        let record = record.map_err(|e| Error::csv("<reader>", e))?;
        let label = match parse(record.get(label_idx).unwrap_or("")) {
            (Some(v), _) if v >= 0.0 => u8::from(v > 0.0),
            _ => {
                table.dropped_rows += 1;
                continue;
            }
        };
        let mut row = Vec::with_capacity(feature_idx.len());
        for &i in &feature_idx {
            let (value, bad) = parse(record.get(i).unwrap_or(""));
            if bad {
                table.unparsable_cells += 1;
            }
            row.push(value);
        }
        table.rows.push(row);
        table.labels.push(label);
    }
    if table.rows.is_empty() {
        return Err(Error::data(name, "empty table: no data rows after the header"));
    }
    if table.unparsable_cells > 0 || table.dropped_rows > 0 {
        log::warn!(
            "{}: {} unparsable cells treated as missing, {} rows dropped for missing labels",
            table.name,
            table.unparsable_cells,
            table.dropped_rows
        );
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::{FeatureKind, FeatureSpec, SchemaMap};

    fn schema() -> FeatureSchema {
        let map = SchemaMap {
            dataset_name: "toy".into(),
            label_column: "num".into(),
            columns: [("a", "x1"), ("b", "x2")]
                .iter()
                .map(|(s, t)| (s.to_string(), t.to_string()))
                .collect(),
            missing_values: vec!["-9".into()],
        };
        let features = vec![
            FeatureSpec::new("x1", FeatureKind::Continuous),
            FeatureSpec::new("x2", FeatureKind::Binary),
        ];
        FeatureSchema::new(features, map).unwrap()
    }

    #[test]
    fn parses_maps_and_binarizes() {
        let csv = "id,b,a,num,extra\n1,1,63,0,x\n2,0,,2,y\n3,-9,41.5,4,z\n";
        let t = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.rows[0], vec![Some(63.0), Some(1.0)]);
        assert_eq!(t.rows[1], vec![None, Some(0.0)]);
        assert_eq!(t.rows[2], vec![Some(41.5), None]);
        assert_eq!(t.labels, vec![0, 1, 1]);
        assert_eq!(t.missing_cells(), 2);
    }

    #[test]
    fn unparsable_cells_are_counted_as_missing() {
        let csv = "a,b,num\nabc,1,1\n5,zz,0\n";
        let t = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(t.unparsable_cells, 2);
        assert_eq!(t.missing_cells(), 2);
    }

    #[test]
    fn rows_without_label_are_dropped() {
        let csv = "a,b,num\n1,1,\n2,0,1\n";
        let t = read_csv(csv.as_bytes(), &schema()).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.dropped_rows, 1);
    }

    #[test]
    fn missing_mapped_column_names_the_column() {
        let err = read_csv("a,num\n1,0\n".as_bytes(), &schema()).unwrap_err();
        match err {
            Error::MissingColumn { column, .. } => assert_eq!(column, "b"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn header_only_is_an_empty_table_error() {
        let err = read_csv("a,b,num\n".as_bytes(), &schema()).unwrap_err();
        assert!(err.to_string().contains("empty table"), "{err}");
    }
}

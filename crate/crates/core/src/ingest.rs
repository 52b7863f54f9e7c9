//! CSV ingestion, prompt-facing table rendering, and the perception step
//! that asks the model for a natural-language description of the table.

use thiserror::Error;

use crate::agent::extract_json;
use crate::model::{Cell, Column, DataDescription, DataTable, ModelError};
use crate::prompt::{render, PromptText, TemplateId};
use crate::report::ContractError;
use crate::schema;

/// Rows shown to the model; the full table stays in memory for binding.
pub const DEFAULT_PROMPT_ROWS: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum IngestError {
    #[error("input is empty")]
    EmptyInput,
    #[error("data row {0} has a different number of fields than the header")]
    RaggedRows(usize),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("column {0} has an empty name")]
    EmptyColumnName(usize),
    #[error("CSV syntax error: {0}")]
    Csv(String),
}

impl From<ModelError> for IngestError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::DuplicateColumn(n) => IngestError::DuplicateColumn(n),
            ModelError::EmptyColumnName(i) => IngestError::EmptyColumnName(i),
            other => IngestError::Csv(other.to_string()),
        }
    }
}

/// Parses RFC 4180 CSV with a header row. Numeric-looking fields become
/// numbers, empty fields become nulls.
pub fn parse_csv(raw: &str, title: &str) -> Result<DataTable, IngestError> {
    let raw = raw.strip_prefix('\u{feff}').unwrap_or(raw);
    if raw.trim().is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(raw.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| IngestError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut columns: Vec<Column> = header
        .into_iter()
        .map(|name| Column {
            name,
            values: Vec::new(),
        })
        .collect();
    let mut rows = 0;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| IngestError::Csv(e.to_string()))?;
        if record.len() != columns.len() {
            return Err(IngestError::RaggedRows(i + 1));
        }
        for (col, field) in columns.iter_mut().zip(record.iter()) {
            col.values.push(Cell::from_raw(field));
        }
        rows += 1;
    }
    Ok(DataTable::new(title, columns, rows)?)
}

/// Writes `table` back to CSV; `parse_csv` reads it back unchanged.
pub fn serialize_csv(table: &DataTable) -> String {
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    writer
        .write_record(table.columns().iter().map(|c| c.name.as_str()))
        .expect("writing to memory");
    for row in 0..table.row_count() {
        writer
            .write_record(table.columns().iter().map(|c| c.values[row].to_string()))
            .expect("writing to memory");
    }
    String::from_utf8(writer.into_inner().expect("flush to memory")).expect("utf-8 input")
}

fn cell_text(cell: &Cell) -> String {
    cell.to_string().replace('\\', "\\\\").replace('\n', "\\n")
}

/// `index | col1 | col2` header then one line per row prefixed by its
/// 0-based index. Rows past `max_rows` are elided with a count note.
pub fn render_table_text(table: &DataTable, max_rows: Option<usize>) -> String {
    let mut out = String::from("index");
    for col in table.columns() {
        out.push_str(" | ");
        out.push_str(&col.name);
    }
    let shown = max_rows.map_or(table.row_count(), |m| m.min(table.row_count()));
    for row in 0..shown {
        out.push('\n');
        out.push_str(&row.to_string());
        for col in table.columns() {
            out.push_str(" | ");
            out.push_str(&cell_text(&col.values[row]));
        }
    }
    let elided = table.row_count() - shown;
    if elided > 0 {
        out.push_str(&format!("\n... ({elided} more rows)"));
    }
    out
}

pub fn build_description_prompt(table: &DataTable) -> PromptText {
    build_description_prompt_with(table, Some(DEFAULT_PROMPT_ROWS))
}

pub fn build_description_prompt_with(table: &DataTable, max_rows: Option<usize>) -> PromptText {
    let text = render_table_text(table, max_rows);
    render(TemplateId::Description, &[("table", &text), ("title", table.title())])
        .expect("description template placeholders are fixed")
}

pub fn parse_description_response(raw: &str) -> Result<DataDescription, ContractError> {
    let value = extract_json(raw)?;
    let obj = schema::as_object(&value, "$")?;
    let text = schema::string(obj, "Description", "")?;
    DataDescription::new(text).map_err(|_| ContractError::EmptyDescription)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn typed_cells() {
        let t = parse_csv("date,price\n2023-01-03,125.07", "Stock").unwrap();
        assert_eq!(t.row_count(), 1);
        assert_eq!(t.columns().len(), 2);
        assert_eq!(t.cell(0, "price"), Some(&Cell::Number(125.07)));
        assert_eq!(t.cell(0, "date"), Some(&Cell::Text("2023-01-03".into())));
    }

    #[test]
    fn ragged_row_is_reported_by_data_row_number() {
        assert_eq!(parse_csv("a,b\n1,2\n3", "t"), Err(IngestError::RaggedRows(2)));
    }

    #[test]
    fn quoted_comma() {
        let t = parse_csv("a\n\"x,y\"", "t").unwrap();
        assert_eq!(t.cell(0, "a"), Some(&Cell::Text("x,y".into())));
    }

    #[test]
    fn empty_and_duplicate() {
        assert_eq!(parse_csv("", "t"), Err(IngestError::EmptyInput));
        assert_eq!(parse_csv("  \n", "t"), Err(IngestError::EmptyInput));
        assert_eq!(
            parse_csv("a,a\n1,2", "t"),
            Err(IngestError::DuplicateColumn("a".into()))
        );
        assert_eq!(parse_csv("a,\n1,2", "t"), Err(IngestError::EmptyColumnName(1)));
    }

    #[test]
    fn header_only_table() {
        let t = parse_csv("a,b\n", "t").unwrap();
        assert_eq!(t.row_count(), 0);
        assert_eq!(render_table_text(&t, None), "index | a | b");
    }

    #[test]
    fn render_single_row() {
        let t = parse_csv("date,price\n2023-01-03,125.07", "t").unwrap();
        assert_eq!(
            render_table_text(&t, None),
            "index | date | price\n0 | 2023-01-03 | 125.07"
        );
    }

    #[test]
    fn render_truncates_with_note() {
        let mut csv = String::from("v\n");
        for i in 0..100 {
            csv.push_str(&format!("{i}\n"));
        }
        let t = parse_csv(&csv, "t").unwrap();
        let text = render_table_text(&t, Some(10));
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 10 + 1);
        assert_eq!(lines[10], "9 | 9");
        assert_eq!(lines[11], "... (90 more rows)");
        assert!(!render_table_text(&t, Some(100)).contains("more rows"));
    }

    #[test]
    fn description_prompt_anchors() {
        let t = parse_csv("date,price\n2023-01-03,125.07", "Stock Prices").unwrap();
        let p = build_description_prompt(&t);
        let text = p.text();
        assert!(text.starts_with("Give a short and consistent description of the following data table and columns:"));
        assert!(text.contains("\nThe title of the data table is: Stock Prices\n"));
        assert!(text.contains("\"Description\": [A]"));
        assert!(text.contains("index | date | price\n0 | 2023-01-03 | 125.07"));
        assert_eq!(p.reblank(), crate::prompt::DESCRIPTION_TEMPLATE);
    }

    #[test]
    fn description_response_parsing() {
        assert_eq!(
            parse_description_response(r#"{"Description": "Daily closing prices of four IT stocks."}"#)
                .unwrap()
                .as_str(),
            "Daily closing prices of four IT stocks."
        );
        assert!(matches!(
            parse_description_response(r#"{"description": "..."}"#),
            Err(ContractError::Schema { .. })
        ));
        assert_eq!(
            parse_description_response("```json\n{\"Description\": \"x\"}\n```")
                .unwrap()
                .as_str(),
            "x"
        );
        assert!(matches!(
            parse_description_response(r#"{"Description": 3}"#),
            Err(ContractError::Schema { .. })
        ));
        assert_eq!(
            parse_description_response(r#"{"Description": "  "}"#),
            Err(ContractError::EmptyDescription)
        );
    }

    fn arb_cell() -> impl Strategy<Value = Cell> {
        prop_oneof![
            Just(Cell::Null),
            (-1e9f64..1e9).prop_map(Cell::Number),
            any::<i32>().prop_map(|n| Cell::Number(n as f64)),
            "[a-zA-Z ,\"]{1,10}"
                .prop_filter("must stay text", |s| matches!(Cell::from_raw(s), Cell::Text(_)))
                .prop_map(Cell::Text),
        ]
    }

    fn arb_table() -> impl Strategy<Value = DataTable> {
        (1usize..5, 0usize..8).prop_flat_map(|(ncols, nrows)| {
            prop::collection::vec(prop::collection::vec(arb_cell(), nrows), ncols).prop_map(move |cols| {
                let columns = cols
                    .into_iter()
                    .enumerate()
                    .map(|(i, values)| Column {
                        name: format!("c{i}"),
                        values,
                    })
                    .collect();
                DataTable::new("t", columns, nrows).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn csv_round_trip(table in arb_table()) {
            let back = parse_csv(&serialize_csv(&table), "t").unwrap();
            prop_assert_eq!(back, table);
        }

        #[test]
        fn rendering_is_injective(a in arb_table(), b in arb_table()) {
            // equal renderings imply equal tables up to cell formatting
            if render_table_text(&a, None) == render_table_text(&b, None) {
                prop_assert_eq!(serialize_csv(&a), serialize_csv(&b));
            }
        }
    }
}

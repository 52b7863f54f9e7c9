//! Shared domain types and the closed vocabularies every agent contract is
//! validated against.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("unknown animation type `{0}`")]
    UnknownAnimation(String),
    #[error("unknown insight type `{0}`")]
    UnknownInsightType(String),
    #[error("unknown visualization type `{0}`")]
    UnknownVisualizationType(String),
    #[error("unknown annotation type `{0}`")]
    UnknownAnnotationType(String),
    #[error("column `{column}` has {actual} values, expected {expected}")]
    ColumnLength {
        column: String,
        expected: usize,
        actual: usize,
    },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("column {0} has an empty name")]
    EmptyColumnName(usize),
    #[error("data description is empty")]
    EmptyDescription,
}

/// A single table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Number(f64),
    Text(String),
    Null,
}

impl Cell {
    /// Types a raw field: empty is null, numeric-looking text is a number.
    pub fn from_raw(raw: &str) -> Cell {
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            return Cell::Null;
        }
        if looks_numeric(trimmed) {
            if let Ok(n) = trimmed.parse::<f64>() {
                if n.is_finite() {
                    return Cell::Number(n);
                }
            }
        }
        Cell::Text(raw.to_string())
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Number(n) => Some(*n),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        match self {
            Cell::Number(n) => serde_json::Number::from_f64(*n)
                .map(Value::Number)
                .unwrap_or(Value::Null),
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Null => Value::Null,
        }
    }
}

/// Display uses the shortest round-trip decimal form for numbers.
impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Number(n) => write!(f, "{n}"),
            Cell::Text(s) => f.write_str(s),
            Cell::Null => Ok(()),
        }
    }
}

// Rust's float parser also accepts "inf", "NaN" and friends; only plain
// decimal notation counts as numeric here.
fn looks_numeric(s: &str) -> bool {
    let body = s.strip_prefix(['+', '-']).unwrap_or(s);
    let mut digits = 0;
    let mut seen_dot = false;
    let mut seen_exp = false;
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '0'..='9' => digits += 1,
            '.' if !seen_dot && !seen_exp => seen_dot = true,
            'e' | 'E' if !seen_exp && digits > 0 => {
                seen_exp = true;
                if matches!(chars.peek(), Some('+') | Some('-')) {
                    chars.next();
                }
                match chars.peek() {
                    Some(d) if d.is_ascii_digit() => {}
                    _ => return false,
                }
            }
            _ => return false,
        }
    }
    digits > 0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<Cell>,
}

/// Parsed tabular input. Row `i` is addressed by its 0-based position, the
/// same index that agent directives reference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataTable {
    title: String,
    columns: Vec<Column>,
    row_count: usize,
}

impl DataTable {
    pub fn new(title: impl Into<String>, columns: Vec<Column>, row_count: usize) -> Result<Self, ModelError> {
        let mut seen = HashSet::new();
        for (i, col) in columns.iter().enumerate() {
            if col.name.trim().is_empty() {
                return Err(ModelError::EmptyColumnName(i));
            }
            if !seen.insert(col.name.as_str()) {
                return Err(ModelError::DuplicateColumn(col.name.clone()));
            }
            if col.values.len() != row_count {
                return Err(ModelError::ColumnLength {
                    column: col.name.clone(),
                    expected: row_count,
                    actual: col.values.len(),
                });
            }
        }
        Ok(Self {
            title: title.into(),
            columns,
            row_count,
        })
    }

    pub fn title(&self) -> &str {
        &self.title
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn row_count(&self) -> usize {
        self.row_count
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn cell(&self, row: usize, column: &str) -> Option<&Cell> {
        self.column(column).and_then(|c| c.values.get(row))
    }

    /// Row `row` as a JSON object keyed by column name, in column order.
    pub fn row_object(&self, row: usize) -> Value {
        let mut obj = serde_json::Map::new();
        for col in &self.columns {
            obj.insert(col.name.clone(), col.values[row].to_json());
        }
        Value::Object(obj)
    }

    pub fn rows_as_json(&self) -> Vec<Value> {
        (0..self.row_count).map(|r| self.row_object(r)).collect()
    }
}

/// Natural-language description of a table produced by the perception step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DataDescription(String);

impl DataDescription {
    pub fn new(text: impl Into<String>) -> Result<Self, ModelError> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(ModelError::EmptyDescription);
        }
        Ok(Self(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

macro_rules! closed_vocabulary {
    (
        $(#[$meta:meta])*
        $name:ident, $err:ident, [$($variant:ident => $text:literal),+ $(,)?]
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }

            /// Exact, case-sensitive lookup after trimming surrounding whitespace.
            pub fn parse(name: &str) -> Result<Self, ModelError> {
                match name.trim() {
                    $($text => Ok($name::$variant),)+
                    _ => Err(ModelError::$err(name.to_string())),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                $name::parse(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

closed_vocabulary!(
    /// Analysis-task categories an insight can be tagged with.
    InsightType, UnknownInsightType, [
        ChangeOverTime => "Change Over Time",
        CharacterizeDistribution => "Characterize Distribution",
        Cluster => "Cluster",
        Comparison => "Comparison",
        Correlate => "Correlate",
        DetermineRange => "Determine Range",
        Deviation => "Deviation",
        FindAnomalies => "Find Anomalies",
        FindExtremum => "Find Extremum",
        Magnitude => "Magnitude",
        PartToWhole => "Part to Whole",
        Sort => "Sort",
        Trend => "Trend",
    ]
);

closed_vocabulary!(
    VisualizationType, UnknownVisualizationType, [
        Bar => "bar",
        Scatter => "scatter",
        Pie => "pie",
        Line => "line",
    ]
);

closed_vocabulary!(
    AnimationType, UnknownAnimation, [
        AxesFadeIn => "Axes-fade-in",
        BarGrowIn => "Bar-grow-in",
        LineWipeIn => "Line-wipe-in",
        PieWheelIn => "Pie-wheel-in",
        PieWheelInAndLegendFlyIn => "Pie-wheel-in-and-legend-fly-in",
        ScatterFadeIn => "Scatter-fade-in",
        BarGrowAndLegendFadeIn => "Bar-grow-and-legend-fade-in",
        LineWipeAndLegendFadeIn => "Line-wipe-and-legend-fade-in",
        FadeIn => "Fade-in",
        FloatIn => "Float-in",
        FlyIn => "Fly-in",
        ZoomIn => "Zoom-in",
        BarBounce => "Bar-bounce",
        ZoomInThenZoomOut => "Zoom-in-then-zoom-out",
        ShineInAShortDuration => "Shine-in-a-short-duration",
        HighlightOneAndFadeOthers => "Highlight-one-and-fade-others",
        FadeOut => "Fade-out",
    ]
);

closed_vocabulary!(
    AnnotationType, UnknownAnnotationType, [
        MarkLabel => "mark label",
        Circle => "circle",
        Text => "text",
        Rule => "rule",
        TrendLine => "trend line",
        Arrow => "arrow",
    ]
);

pub fn parse_insight_type(name: &str) -> Result<InsightType, ModelError> {
    InsightType::parse(name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AnimationCategory {
    Entrance,
    Emphasis,
    Exit,
}

impl fmt::Display for AnimationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AnimationCategory::Entrance => "entrance",
            AnimationCategory::Emphasis => "emphasis",
            AnimationCategory::Exit => "exit",
        })
    }
}

impl AnimationType {
    pub fn category(self) -> AnimationCategory {
        use AnimationType::*;
        match self {
            AxesFadeIn
            | BarGrowIn
            | LineWipeIn
            | PieWheelIn
            | PieWheelInAndLegendFlyIn
            | ScatterFadeIn
            | BarGrowAndLegendFadeIn
            | LineWipeAndLegendFadeIn
            | FadeIn
            | FloatIn
            | FlyIn
            | ZoomIn => AnimationCategory::Entrance,
            BarBounce | ZoomInThenZoomOut | ShineInAShortDuration | HighlightOneAndFadeOthers => {
                AnimationCategory::Emphasis
            }
            FadeOut => AnimationCategory::Exit,
        }
    }
}

pub fn classify_animation(name: &str) -> Result<AnimationCategory, ModelError> {
    AnimationType::parse(name).map(AnimationType::category)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Insight {
    pub insight: String,
    #[serde(rename = "type")]
    pub types: Vec<InsightType>,
}

/// A Vega-Lite specification plus the chart family the analyst declared.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualizationSpec {
    pub spec: Value,
    pub vis_type: VisualizationType,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnimationDirective {
    pub animation: AnimationType,
    pub narration: String,
    pub target: String,
    pub index: Vec<usize>,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationDirective {
    #[serde(rename = "type")]
    pub types: Vec<AnnotationType>,
    pub description: String,
    pub index: Vec<usize>,
    pub nar: String,
}

/// Serialized form mirrors the analyst's final JSON output keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalystOutput {
    #[serde(rename = "Insights")]
    pub insights: Vec<Insight>,
    #[serde(rename = "Visualization")]
    pub visualization: Value,
    #[serde(rename = "Visualization_Type")]
    pub vis_type: VisualizationType,
    #[serde(rename = "Narration")]
    pub narration: String,
}

impl AnalystOutput {
    pub fn visualization_spec(&self) -> VisualizationSpec {
        VisualizationSpec {
            spec: self.visualization.clone(),
            vis_type: self.vis_type,
        }
    }
}

/// Serialized form mirrors the designer's final JSON output keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignerOutput {
    #[serde(rename = "Annotated_Visualization")]
    pub annotated_visualization: Value,
    #[serde(rename = "Annotated_Narration_for_Animation")]
    pub animation_directives: Vec<AnimationDirective>,
    #[serde(rename = "Annotated_Narration_for_Annotation")]
    pub annotation_directives: Vec<AnnotationDirective>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn classify_known_and_unknown() {
        assert_eq!(classify_animation("Bar-grow-in"), Ok(AnimationCategory::Entrance));
        assert_eq!(classify_animation("Fade-out"), Ok(AnimationCategory::Exit));
        assert_eq!(
            classify_animation("Highlight-one-and-fade-others"),
            Ok(AnimationCategory::Emphasis)
        );
        assert_eq!(
            classify_animation("Sparkle"),
            Err(ModelError::UnknownAnimation("Sparkle".into()))
        );
    }

    #[test]
    fn animation_categories_partition_seventeen_names() {
        let count = |c| AnimationType::ALL.iter().filter(|a| a.category() == c).count();
        assert_eq!(AnimationType::ALL.len(), 17);
        assert_eq!(count(AnimationCategory::Entrance), 12);
        assert_eq!(count(AnimationCategory::Emphasis), 4);
        assert_eq!(count(AnimationCategory::Exit), 1);
        let names: HashSet<_> = AnimationType::ALL.iter().map(|a| a.as_str()).collect();
        assert_eq!(names.len(), 17);
    }

    #[test]
    fn insight_type_lookup() {
        assert_eq!(parse_insight_type("Trend"), Ok(InsightType::Trend));
        assert_eq!(parse_insight_type("  Part to Whole "), Ok(InsightType::PartToWhole));
        assert!(parse_insight_type("Correlation").is_err());
        assert!(parse_insight_type("trend").is_err());
        assert!(parse_insight_type("").is_err());
        assert_eq!(InsightType::ALL.len(), 13);
    }

    #[test]
    fn cell_typing() {
        assert_eq!(Cell::from_raw("125.07"), Cell::Number(125.07));
        assert_eq!(Cell::from_raw("-3e2"), Cell::Number(-300.0));
        assert_eq!(Cell::from_raw(""), Cell::Null);
        assert_eq!(Cell::from_raw("2023-01-03"), Cell::Text("2023-01-03".into()));
        assert_eq!(Cell::from_raw("inf"), Cell::Text("inf".into()));
        assert_eq!(Cell::from_raw("NaN"), Cell::Text("NaN".into()));
        assert_eq!(Cell::from_raw("."), Cell::Text(".".into()));
        assert_eq!(Cell::from_raw("1e"), Cell::Text("1e".into()));
        assert_eq!(Cell::Number(125.07).to_string(), "125.07");
        assert_eq!(Cell::Number(3.0).to_string(), "3");
    }

    #[test]
    fn table_invariants() {
        let col = |n: &str, k| Column {
            name: n.into(),
            values: vec![Cell::Null; k],
        };
        assert!(DataTable::new("t", vec![col("a", 2), col("b", 2)], 2).is_ok());
        assert_eq!(
            DataTable::new("t", vec![col("a", 2), col("a", 2)], 2),
            Err(ModelError::DuplicateColumn("a".into()))
        );
        assert!(matches!(
            DataTable::new("t", vec![col("a", 1)], 2),
            Err(ModelError::ColumnLength { .. })
        ));
        assert_eq!(
            DataTable::new("t", vec![col(" ", 0)], 0),
            Err(ModelError::EmptyColumnName(0))
        );
    }

    #[test]
    fn description_must_not_be_blank() {
        assert!(DataDescription::new(" \n").is_err());
        assert_eq!(DataDescription::new("x").unwrap().as_str(), "x");
    }

    proptest! {
        #[test]
        fn classify_is_total_over_vocabulary_only(name in "\\PC{0,24}") {
            let known = AnimationType::ALL.iter().any(|a| a.as_str() == name.trim());
            prop_assert_eq!(classify_animation(&name).is_ok(), known);
        }
    }
}

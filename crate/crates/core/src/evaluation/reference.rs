use serde::{Deserialize, Serialize};

use super::MetricsReport;

/// Published F-measure and MAP figures of ESA and six earlier summarizers.
/// Missing entries are `null`.
pub const REFERENCE_TABLES_JSON: &str = include_str!("../../assets/reference_tables.json");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub system: String,
    pub values: [Option<f64>; 6],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTables {
    pub format: String,
    pub columns: Vec<String>,
    pub f_measure: Vec<ReferenceRow>,
    pub map: Vec<ReferenceRow>,
}

impl ReferenceTables {
    pub fn builtin() -> Self {
        serde_json::from_str(REFERENCE_TABLES_JSON).expect("embedded reference tables parse")
    }

    /// Column index for `subset` (`dbpedia`, `lmdb`, `all`) at `k` (5 or 10).
    pub fn column(subset: &str, k: usize) -> Option<usize> {
        let s = match subset {
            "dbpedia" => 0,
            "lmdb" => 1,
            "all" => 2,
            _ => return None,
        };
        let c = match k {
            5 => 0,
            10 => 1,
            _ => return None,
        };
        Some(2 * s + c)
    }

    pub fn value(&self, metric: &str, system: &str, subset: &str, k: usize) -> Option<f64> {
        let rows = match metric {
            "f_measure" => &self.f_measure,
            "map" => &self.map,
            _ => return None,
        };
        let col = Self::column(subset, k)?;
        rows.iter().find(|r| r.system == system)?.values[col]
    }
}

/// Text tables placing this run's systems under the published rows.
pub fn render_comparison(report: &MetricsReport, reference: &ReferenceTables) -> String {
    let mut out = String::new();
    let cols: Vec<(&str, usize)> = ["dbpedia", "lmdb", "all"]
        .iter()
        .flat_map(|s| [(*s, 5), (*s, 10)])
        .collect();
    for (title, metric, rows) in [
        ("F-measure", "f_measure", &reference.f_measure),
        ("MAP", "map", &reference.map),
    ] {
        out.push_str(&format!("{title}\n{:<22}", "system"));
        for (s, k) in &cols {
            out.push_str(&format!("{:>11}", format!("{s}@{k}")));
        }
        out.push('\n');
        let cell =
            |v: Option<f64>| v.map_or_else(|| format!("{:>11}", "-"), |x| format!("{x:>11.3}"));
        for row in rows {
            out.push_str(&format!("{:<22}", format!("{} (published)", row.system)));
            for v in row.values {
                out.push_str(&cell(v));
            }
            out.push('\n');
        }
        for system in ["esa", "frequency", "oracle"] {
            out.push_str(&format!("{:<22}", format!("{system} (this run)")));
            for (s, k) in &cols {
                let v = report.metric(system, *k, s).map(|r| {
                    if metric == "map" {
                        r.map
                    } else {
                        r.f_measure
                    }
                });
                out.push_str(&cell(v));
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

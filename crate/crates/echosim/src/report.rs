//! Aggregation of sweep results: one summary row per parameter combination.

use std::fmt;
use std::path::Path;

use crate::error::{Error, Result};
use crate::sweep::{format_sig, RESULTS_HEADER};

/// Aggregates of all replications of one parameter combination. Parameter
/// columns keep their exact textual form from the file, so grouping never
/// depends on float parsing.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub n_users: String,
    pub n_iterations: String,
    pub move_factor: String,
    pub p_produce: String,
    pub noise_sigma: String,
    pub replications: usize,
    /// Most common final cluster count; ties go to the smaller count.
    pub modal_clusters: usize,
    /// Median (lower) of the final cluster variances.
    pub median_var: f64,
    /// Median of the final average inter-cluster distances, over the
    /// replications that had at least two clusters.
    pub median_avg_dist: Option<f64>,
    /// Median of the final minimum inter-cluster distances, same scope.
    pub median_min_dist: Option<f64>,
}

/// A summarized sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
}

impl Summary {
    /// CSV rendition, one line per combination.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "n_users,n_iterations,move_factor,p_produce,noise_sigma,replications,\
             modal_clusters,median_var,median_avg_dist,median_min_dist\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.n_users,
                r.n_iterations,
                r.move_factor,
                r.p_produce,
                r.noise_sigma,
                r.replications,
                r.modal_clusters,
                format_sig(r.median_var, 6),
                r.median_avg_dist.map_or(String::new(), |v| format_sig(v, 6)),
                r.median_min_dist.map_or(String::new(), |v| format_sig(v, 6)),
            ));
        }
        out
    }
}

impl fmt::Display for Summary {
    /// Aligned table for terminals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const HEADERS: [&str; 10] = [
            "n_users", "n_iter", "alpha", "p_produce", "sigma", "reps", "clusters", "var",
            "avg_dist", "min_dist",
        ];
        let cells: Vec<[String; 10]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.n_users.clone(),
                    r.n_iterations.clone(),
                    r.move_factor.clone(),
                    r.p_produce.clone(),
                    r.noise_sigma.clone(),
                    r.replications.to_string(),
                    r.modal_clusters.to_string(),
                    format_sig(r.median_var, 6),
                    r.median_avg_dist.map_or("-".into(), |v| format_sig(v, 6)),
                    r.median_min_dist.map_or("-".into(), |v| format_sig(v, 6)),
                ]
            })
            .collect();
        let mut widths: Vec<usize> = HEADERS.iter().map(|h| h.len()).collect();
        for row in &cells {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        for (i, h) in HEADERS.iter().enumerate() {
            if i > 0 {
                write!(f, "  ")?;
            }
            write!(f, "{:>width$}", h, width = widths[i])?;
        }
        writeln!(f)?;
        for row in &cells {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    write!(f, "  ")?;
                }
                write!(f, "{:>width$}", cell, width = widths[i])?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Read a `results.csv` and aggregate it per parameter combination, in
/// order of first appearance.
pub fn summarize_file(path: &Path) -> Result<Summary> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Results {
        path: path.to_path_buf(),
        line: 0,
        msg: e.to_string(),
    })?;
    summarize_str(&text, path)
}

fn summarize_str(text: &str, path: &Path) -> Result<Summary> {
    let bad = |line: usize, msg: String| Error::Results {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad(1, "empty file, expected a results.csv header".into()))?;
    if header != RESULTS_HEADER {
        return Err(bad(1, format!("unexpected header `{header}`")));
    }

    // key = the five parameter columns verbatim
    let mut order: Vec<[String; 5]> = Vec::new();
    let mut groups: Vec<GroupAccum> = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 12 {
            return Err(bad(line_no, format!("expected 12 columns, got {}", fields.len())));
        }
        let key: [String; 5] = [
            fields[0].to_string(),
            fields[1].to_string(),
            fields[2].to_string(),
            fields[3].to_string(),
            fields[4].to_string(),
        ];
        let clusters: usize = fields[6]
            .parse()
            .map_err(|_| bad(line_no, format!("bad cluster count `{}`", fields[6])))?;
        let var: f64 = fields[7]
            .parse()
            .map_err(|_| bad(line_no, format!("bad final_var `{}`", fields[7])))?;
        let avg = parse_optional(fields[8]).map_err(|v| bad(line_no, format!("bad final_avg_dist `{v}`")))?;
        let min = parse_optional(fields[9]).map_err(|v| bad(line_no, format!("bad final_min_dist `{v}`")))?;

        let slot = match order.iter().position(|k| *k == key) {
            Some(i) => i,
            None => {
                order.push(key);
                groups.push(GroupAccum::default());
                groups.len() - 1
            }
        };
        let g = &mut groups[slot];
        g.clusters.push(clusters);
        g.vars.push(var);
        if let Some(v) = avg {
            g.avg_dists.push(v);
        }
        if let Some(v) = min {
            g.min_dists.push(v);
        }
    }

    let rows = order
        .into_iter()
        .zip(groups)
        .map(|(key, g)| {
            let [n_users, n_iterations, move_factor, p_produce, noise_sigma] = key;
            SummaryRow {
                n_users,
                n_iterations,
                move_factor,
                p_produce,
                noise_sigma,
                replications: g.clusters.len(),
                modal_clusters: mode_smallest(&g.clusters),
                median_var: lower_median(&g.vars).expect("group never empty"),
                median_avg_dist: lower_median(&g.avg_dists),
                median_min_dist: lower_median(&g.min_dists),
            }
        })
        .collect();
    Ok(Summary { rows })
}

#[derive(Default)]
struct GroupAccum {
    clusters: Vec<usize>,
    vars: Vec<f64>,
    avg_dists: Vec<f64>,
    min_dists: Vec<f64>,
}

fn parse_optional(field: &str) -> std::result::Result<Option<f64>, String> {
    if field.is_empty() {
        return Ok(None);
    }
    field.parse().map(Some).map_err(|_| field.to_string())
}

/// Most frequent value; ties resolve to the smallest.
pub fn mode_smallest(values: &[usize]) -> usize {
    assert!(!values.is_empty(), "mode of an empty list");
    let mut counts = std::collections::BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0usize) += 1;
    }
    // BTreeMap iterates ascending, so > keeps the smallest among ties.
    counts
        .into_iter()
        .fold((0usize, 0usize), |best, (v, c)| if c > best.1 { (v, c) } else { best })
        .0
}

/// Lower median: the element at rank `floor((n - 1) / 2)` of the sorted
/// values; `None` for empty input.
pub fn lower_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    Some(sorted[(sorted.len() - 1) / 2])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_csv() -> String {
        let mut text = format!("{RESULTS_HEADER}\n");
        // two combos, three and two replications
        text.push_str("1000,500,0.01,0.2,0.005,11,2,0.0140000,1.10600,1.10600,850.000,12.001\n");
        text.push_str("1000,500,0.01,0.2,0.005,12,3,0.0200000,1.00000,0.90000,900.000,11.875\n");
        text.push_str("1000,500,0.01,0.2,0.005,13,2,0.0100000,1.20000,1.20000,800.000,12.503\n");
        text.push_str("2000,500,0.02,0.2,0.005,14,1,0.0500000,,,700.000,30.000\n");
        text.push_str("2000,500,0.02,0.2,0.005,15,2,0.0300000,0.80000,0.80000,750.000,29.000\n");
        text
    }

    #[test]
    fn summarize_groups_and_aggregates() {
        let summary = summarize_str(&sample_csv(), Path::new("test.csv")).unwrap();
        assert_eq!(summary.rows.len(), 2);

        let first = &summary.rows[0];
        assert_eq!(first.n_users, "1000");
        assert_eq!(first.replications, 3);
        assert_eq!(first.modal_clusters, 2);
        assert_eq!(first.median_var, 0.014);
        assert_eq!(first.median_avg_dist, Some(1.106));
        assert_eq!(first.median_min_dist, Some(1.106));

        let second = &summary.rows[1];
        assert_eq!(second.replications, 2);
        // counts 1 and 2 tie, the smaller wins
        assert_eq!(second.modal_clusters, 1);
        assert_eq!(second.median_var, 0.03);
        // only one replication had >= 2 clusters
        assert_eq!(second.median_avg_dist, Some(0.8));
    }

    #[test]
    fn csv_output_keeps_param_text_verbatim() {
        let summary = summarize_str(&sample_csv(), Path::new("test.csv")).unwrap();
        let csv = summary.to_csv();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "n_users,n_iterations,move_factor,p_produce,noise_sigma,replications,modal_clusters,median_var,median_avg_dist,median_min_dist"
        );
        assert_eq!(lines.next().unwrap(), "1000,500,0.01,0.2,0.005,3,2,0.0140000,1.10600,1.10600");
    }

    #[test]
    fn display_renders_an_aligned_table() {
        let summary = summarize_str(&sample_csv(), Path::new("test.csv")).unwrap();
        let table = format!("{summary}");
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("n_users"));
        assert!(lines[0].contains("min_dist"));
        // the no-distance group renders a dash
        assert!(!lines[1].contains('-'));
    }

    #[test]
    fn header_only_file_gives_empty_summary() {
        let text = format!("{RESULTS_HEADER}\n");
        let summary = summarize_str(&text, Path::new("test.csv")).unwrap();
        assert!(summary.rows.is_empty());
        assert_eq!(summary.to_csv().lines().count(), 1);
    }

    #[test]
    fn wrong_header_is_rejected() {
        let err = summarize_str("nope\n", Path::new("test.csv")).unwrap_err();
        assert!(matches!(err, Error::Results { line: 1, .. }));
    }

    #[test]
    fn short_row_is_rejected_with_line_number() {
        let text = format!("{RESULTS_HEADER}\n1,2,3\n");
        match summarize_str(&text, Path::new("test.csv")) {
            Err(Error::Results { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected Results error, got {other:?}"),
        }
    }

    #[test]
    fn mode_prefers_smaller_on_ties() {
        assert_eq!(mode_smallest(&[2, 3, 3, 2]), 2);
        assert_eq!(mode_smallest(&[5]), 5);
        assert_eq!(mode_smallest(&[1, 2, 2, 2, 9]), 2);
    }

    #[test]
    fn lower_median_picks_lower_of_even() {
        assert_eq!(lower_median(&[4.0, 1.0, 3.0, 2.0]), Some(2.0));
        assert_eq!(lower_median(&[7.0, 5.0, 6.0]), Some(6.0));
        assert_eq!(lower_median(&[]), None);
    }
}

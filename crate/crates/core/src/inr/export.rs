use std::io::Write;

use super::layout::WeightLayout;
use crate::error::{shape_err, Result};
use crate::scalar::Scalar;

/// Writes flattened weight vectors as CSV, one row per clip.
///
/// The first line is a `# layout: ...` comment describing the column ranges, followed by
/// the header `clip_id,p0,p1,...`. Values use the shortest round-trip decimal form.
pub fn write_weight_matrix<S: Scalar, W: Write>(
    out: &mut W,
    layout: &WeightLayout,
    rows: &[(String, Vec<S>)],
) -> Result<()> {
    for (id, row) in rows {
        if row.len() != layout.total() {
            return shape_err(format!("row {id} has {} values, layout has {}", row.len(), layout.total()));
        }
    }
    writeln!(out, "# layout: {layout}")?;
    let mut header = String::from("clip_id");
    for i in 0..layout.total() {
        header.push_str(&format!(",p{i}"));
    }
    writeln!(out, "{header}")?;
    for (id, row) in rows {
        let mut line = escape(id);
        for v in row {
            line.push(',');
            line.push_str(&v.to_string());
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn escape(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inr::TargetNetworkSpec;

    #[test]
    fn matrix_shape() {
        let layout = TargetNetworkSpec::fmlp(vec![2]).instance_layout();
        let rows: Vec<(String, Vec<f32>)> = (0..3).map(|k| (format!("c{k}"), vec![k as f32; layout.total()])).collect();
        let mut buf = Vec::new();
        write_weight_matrix(&mut buf, &layout, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# layout: 0.W[2x20]@0"));
        assert_eq!(lines.len(), 2 + 3);
        for line in &lines[1..] {
            assert_eq!(line.split(',').count(), 1 + layout.total());
        }
        assert!(write_weight_matrix(&mut Vec::new(), &layout, &[("x".into(), vec![0.0f32])]).is_err());
    }

    #[test]
    fn ids_with_commas_are_quoted() {
        assert_eq!(escape("a,b"), "\"a,b\"");
        assert_eq!(escape("plain"), "plain");
    }
}

//! Plain fixed-width report rendering. Formatting is deliberately
//! minimal and stable: reports are diffed and parsed by scripts.

/// Columns padded to their widest cell, two-space gutter, header row
/// first. Numbers should be pre-formatted by the caller.
pub fn columns(headers: &[&str], rows: &[Vec<String>]) -> String {
    let n = headers.len();
    let mut widths: Vec<usize> = headers.iter().map(|h| h.len()).collect();
    for row in rows {
        debug_assert_eq!(row.len(), n);
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let mut write_row = |cells: &[String]| {
        let mut line = String::new();
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                line.push_str("  ");
            }
            if i + 1 == n {
                line.push_str(cell);
            } else {
                line.push_str(&format!("{cell:<width$}", width = widths[i]));
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
    };
    write_row(&headers.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    for row in rows {
        write_row(row);
    }
    out
}

/// Aligned `key  value` block.
pub fn keyed(pairs: &[(&str, String)]) -> String {
    let width = pairs.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    let mut out = String::new();
    for (key, value) in pairs {
        out.push_str(&format!("{key:<width$}  {value}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align_and_trim() {
        let rendered = columns(
            &["name", "value"],
            &[
                vec!["a".into(), "1".into()],
                vec!["longer".into(), "2".into()],
            ],
        );
        assert_eq!(rendered, "name    value\na       1\nlonger  2\n");
    }

    #[test]
    fn keyed_aligns_keys() {
        let rendered = keyed(&[("decision", "VM".into()), ("p", "0.97".into())]);
        assert_eq!(rendered, "decision  VM\np         0.97\n");
    }
}

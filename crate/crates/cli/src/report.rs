//! `lsnet report`: loss-curve CSV from a training history with a running
//! median of the training loss, optionally downsampled.

use crate::{CliError, CliResult};

/// Width of the centered median window; truncated at the ends.
pub const SMOOTHING_WINDOW: usize = 51;

#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub header: Vec<String>,
    /// Raw fields, kept verbatim so re-emitted values are bit-identical.
    pub rows: Vec<Vec<String>>,
    pub train_loss: Vec<f64>,
}

/// Parses a history CSV; errors name the offending line (1-based).
pub fn parse_history(text: &str) -> CliResult<History> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, head) = lines.next().ok_or_else(|| CliError::Config("history is empty (no header row)".into()))?;
    let header: Vec<String> = head.split(',').map(|s| s.trim().to_string()).collect();
    if header.first().map(String::as_str) != Some("iter") {
        return Err(CliError::Config(format!("line 1: expected a header starting with `iter`, got `{head}`")));
    }
    let loss_col = header
        .iter()
        .position(|h| h == "train_loss")
        .ok_or_else(|| CliError::Config("line 1: header has no train_loss column".into()))?;
    let mut rows = Vec::new();
    let mut train_loss = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let fields: Vec<String> = line.split(',').map(|s| s.trim().to_string()).collect();
        if fields.len() != header.len() {
            return Err(CliError::Config(format!(
                "line {lineno}: expected {} fields, found {}",
                header.len(),
                fields.len()
            )));
        }
        fields[0]
            .parse::<u64>()
            .map_err(|e| CliError::Config(format!("line {lineno}: iteration `{}`: {e}", fields[0])))?;
        for f in &fields[1..] {
            f.parse::<f64>().map_err(|e| CliError::Config(format!("line {lineno}: value `{f}`: {e}")))?;
        }
        train_loss.push(fields[loss_col].parse::<f64>().expect("checked above"));
        rows.push(fields);
    }
    Ok(History { header, rows, train_loss })
}

/// Median of each centered window of `width` values, clipped at the ends.
pub fn running_median(values: &[f64], width: usize) -> Vec<f64> {
    let half = width / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            let mut w = values[lo..hi].to_vec();
            w.sort_by(f64::total_cmp);
            let m = w.len();
            if m % 2 == 1 {
                w[m / 2]
            } else {
                0.5 * (w[m / 2 - 1] + w[m / 2])
            }
        })
        .collect()
}

/// The report: every `downsample`-th row of the history with a smoothed
/// training-loss column appended. Smoothing uses the full history.
pub fn report_csv(history: &History, downsample: usize) -> CliResult<String> {
    if downsample == 0 {
        return Err(CliError::Config("downsample factor must be positive".into()));
    }
    let smooth = running_median(&history.train_loss, SMOOTHING_WINDOW);
    let mut out = history.header.join(",") + ",train_loss_smoothed\n";
    for (i, row) in history.rows.iter().enumerate().step_by(downsample) {
        out.push_str(&row.join(","));
        out.push(',');
        out.push_str(&crate::num(smooth[i]));
        out.push('\n');
    }
    Ok(out)
}

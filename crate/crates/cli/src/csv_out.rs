//! CSV writing with a fixed numeric format so identical runs produce
//! identical bytes.

use std::io;
use std::path::Path;

/// Scientific notation with 12 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn write_csv(path: &Path, header: &str, rows: &[String]) -> io::Result<()> {
    let mut text = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(path, text)
}

/// One row per (frequency, amplitude, interpolated) peak.
pub fn peak_rows(peaks: &[ionspec_core::spectroscopy::Peak]) -> Vec<String> {
    peaks
        .iter()
        .map(|p| format!("{},{},{}", sci(p.frequency), sci(p.amplitude), p.interpolated))
        .collect()
}

pub fn spectrum_rows(sp: &ionspec_core::spectroscopy::Spectrum) -> Vec<String> {
    sp.freqs()
        .iter()
        .zip(sp.amplitudes())
        .map(|(f, a)| format!("{},{}", sci(*f), sci(*a)))
        .collect()
}

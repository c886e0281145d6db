//! Plot-script emission: self-contained gnuplot scripts referencing the CSV
//! outputs of a prior run by relative path.

use std::fs;
use std::path::Path;

use cylspec::error::{Error, Result};

fn density_script() -> &'static str {
    r#"set datafile separator ','
set key off
set xlabel 'lambda'
set ylabel 'density'
set grid
plot 'density.csv' skip 1 using 1:2 with lines lw 2
pause -1
"#
}

fn band_scan_script() -> &'static str {
    r#"set datafile separator ','
set xlabel 'k1'
set ylabel 'lambda'
set cblabel '|h|'
set view map
splot 'band_scan.csv' skip 1 using 1:2:(sqrt($3*$3+$4*$4)) with points pt 5 ps 2 palette
pause -1
"#
}

fn resonances_script() -> &'static str {
    r#"set datafile separator ','
set key off
set xlabel 'Re lambda'
set ylabel 'Im lambda'
set grid
plot 'resonances.csv' skip 1 using 2:3 with points pt 7 ps 2
pause -1
"#
}

fn determinant_scan_script() -> &'static str {
    r#"set datafile separator ','
set key off
set xlabel 'Re lambda'
set ylabel '|h|'
set grid
plot 'determinant_scan.csv' skip 1 using 2:(sqrt($4*$4+$5*$5)) with linespoints
pause -1
"#
}

/// Write plotting scripts for every known CSV present in `dir`.
pub fn emit_plots(dir: &Path) -> Result<Vec<String>> {
    let known: [(&str, &str, &dyn Fn() -> &'static str); 4] = [
        ("density.csv", "density.gp", &density_script),
        ("band_scan.csv", "band_scan.gp", &band_scan_script),
        ("resonances.csv", "resonances.gp", &resonances_script),
        ("determinant_scan.csv", "determinant_scan.gp", &determinant_scan_script),
    ];
    let mut written = Vec::new();
    for (csv, gp, script) in known {
        if dir.join(csv).exists() {
            fs::write(dir.join(gp), script())?;
            written.push(gp.to_string());
        }
    }
    if written.is_empty() {
        return Err(Error::MissingData(format!(
            "no known CSV outputs found in {}",
            dir.display()
        )));
    }
    Ok(written)
}

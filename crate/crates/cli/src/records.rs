//! Records CSV and plot-data output.

use std::io::Write;
use std::path::Path;

use spray_core::diagnostics::DiagnosticsRecord;

use crate::error::{io_err, CliResult};

pub const RECORDS_SCHEMA: u32 = 1;

const AXES: [&str; 3] = ["x", "y", "z"];

/// Column names for a run of dimension `dim`.
pub fn columns(dim: usize) -> Vec<String> {
    let mut c: Vec<String> = vec!["t".into(), "mass_rho".into(), "mass_n".into()];
    c.extend((0..dim).map(|a| format!("mom_total_{}", AXES[a])));
    for s in ["E", "D", "L", "L_p", "E_script", "E_sigma", "D_sigma"] {
        c.push(s.into());
    }
    c.extend((0..dim).map(|a| format!("m_c_{}", AXES[a])));
    c.extend((0..dim).map(|a| format!("j_c_{}", AXES[a])));
    for s in [
        "rho_c",
        "min_rho",
        "min_n1",
        "grad_u_max",
        "res_energy",
        "res_esigma",
        "flags",
    ] {
        c.push(s.into());
    }
    c
}

fn header_comment(dim: usize) -> String {
    let mut lines = vec![
        format!("# records schema {RECORDS_SCHEMA}, dim {dim}"),
        "# integrals use the normalized measure (grid mean)".to_string(),
        "# t: simulation time".to_string(),
        "# mass_rho: integral of rho".to_string(),
        "# mass_n: integral of n".to_string(),
    ];
    for a in AXES.iter().take(dim) {
        lines.push(format!("# mom_total_{a}: integral of (m + j), component {a}"));
    }
    lines.extend(
        [
            "# E: total energy, int rho|u|^2 + (n+1)|v|^2 + 2/(gamma-1)(n+1)^gamma",
            "# D: dissipation, mu|grad v|^2 + (mu+lam)|div v|^2 + rho|u-v|^2",
            "# L: Lyapunov functional",
            "# L_p: dissipated part of L",
            "# E_script: interacting energy",
            "# E_sigma: modified energy E_script - 2 sigma int (n+1)(v-j_c).B[n]",
            "# D_sigma: dissipation rate of E_sigma",
        ]
        .map(String::from),
    );
    for a in AXES.iter().take(dim) {
        lines.push(format!("# m_c_{a}: mass-weighted mean particle velocity, component {a}"));
    }
    for a in AXES.iter().take(dim) {
        lines.push(format!("# j_c_{a}: total fluid momentum, component {a}"));
    }
    lines.extend(
        [
            "# rho_c: total particle mass",
            "# min_rho: grid minimum of rho",
            "# min_n1: grid minimum of n+1",
            "# grad_u_max: grid maximum of |grad u| (Frobenius)",
            "# res_energy: centered residual of dE/2dt + D over the producing step",
            "# res_esigma: centered residual of dE_sigma/2dt + D_sigma over the producing step",
            "# flags: ';'-separated run flags (floor_active, vacuum_breach, fluid_vacuum_breach, blowup, gradient_steepening)",
        ]
        .map(String::from),
    );
    lines.join("\n") + "\n"
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn row(r: &DiagnosticsRecord) -> Vec<String> {
    let f = &r.functionals;
    let mut v = vec![num(r.t), num(r.totals.mass_rho), num(r.totals.mass_n)];
    v.extend(r.totals.momentum.iter().copied().map(num));
    v.extend([f.e, f.d, f.l, f.l_p, f.e_script, f.e_sigma, f.d_sigma].map(num));
    v.extend(r.averages.m_c.iter().copied().map(num));
    v.extend(r.averages.j_c.iter().copied().map(num));
    v.extend(
        [
            r.averages.rho_c,
            f.min_rho,
            f.min_n1,
            f.grad_u_max,
            r.identity_residuals.energy_balance,
            r.identity_residuals.esigma_balance,
        ]
        .map(num),
    );
    v.push(r.flags.iter().map(|f| f.to_string()).collect::<Vec<_>>().join(";"));
    v
}

/// Records as CSV text with a leading `#` comment block.
pub fn records_csv(records: &[DiagnosticsRecord], dim: usize) -> String {
    let mut out = header_comment(dim).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        w.write_record(columns(dim)).expect("in-memory write");
        for r in records {
            w.write_record(row(r)).expect("in-memory write");
        }
        w.flush().expect("in-memory write");
    }
    String::from_utf8(out).expect("ascii output")
}

pub fn write_records(path: &Path, records: &[DiagnosticsRecord], dim: usize) -> CliResult<()> {
    write_text(path, &records_csv(records, dim))
}

pub(crate) fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| io_err(parent, e))?;
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

/// One parsed CSV row: numeric columns in order plus the flags.
#[derive(Debug, Clone, PartialEq)]
pub struct RecordRow {
    pub values: Vec<f64>,
    pub flags: Vec<String>,
}

/// Reads a records CSV, skipping the comment block.
pub fn read_records(text: &str) -> CliResult<(Vec<String>, Vec<RecordRow>)> {
    let bad = |e: csv::Error| crate::error::CliError::Config(format!("records csv: {e}"));
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header: Vec<String> = r.headers().map_err(bad)?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(bad)?;
        let n = rec.len();
        let values = rec
            .iter()
            .take(n - 1)
            .map(|s| {
                s.parse::<f64>().map_err(|e| {
                    crate::error::CliError::Config(format!("records csv: bad number {s:?}: {e}"))
                })
            })
            .collect::<CliResult<Vec<f64>>>()?;
        let flags = rec[n - 1]
            .split(';')
            .filter(|s| !s.is_empty())
            .map(String::from)
            .collect();
        rows.push(RecordRow { values, flags });
    }
    Ok((header, rows))
}

/// `t, log_L, log_E_sigma` columns; non-positive values become `nan`.
pub fn plot_data_csv(records: &[DiagnosticsRecord]) -> String {
    let ln = |x: f64| if x > 0.0 { x.ln() } else { f64::NAN };
    let mut s = String::from("t,log_L,log_E_sigma\n");
    for r in records {
        s.push_str(&format!(
            "{},{},{}\n",
            num(r.t),
            num(ln(r.functionals.l)),
            num(ln(r.functionals.e_sigma))
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use spray_core::dynamics::FluidParams;
    use spray_core::init::{generate_initial, InitSpec};
    use spray_core::integrator::{run, TimeConfig};
    use spray_core::GridSpec;

    fn sample(dim: usize) -> Vec<DiagnosticsRecord> {
        let g = GridSpec::new(dim, 8).unwrap();
        let s = generate_initial(&InitSpec::single_mode(0.05), g).unwrap();
        let p = FluidParams::new(2.0, 1.0, 0.0).unwrap();
        run(&s, &p, &TimeConfig::new(0.05, 0.01), None).unwrap().records
    }

    #[test]
    fn every_column_is_documented() {
        for dim in 1..=3 {
            let text = records_csv(&sample(dim), dim);
            let comments: String = text.lines().filter(|l| l.starts_with('#')).collect();
            for c in columns(dim) {
                assert!(comments.contains(&format!("# {c}:")), "{c} undocumented");
            }
        }
    }

    #[test]
    fn csv_round_trips_exactly() {
        let recs = sample(2);
        let text = records_csv(&recs, 2);
        let (header, rows) = read_records(&text).unwrap();
        assert_eq!(header, columns(2));
        assert_eq!(rows.len(), recs.len());
        for (row, rec) in rows.iter().zip(&recs) {
            assert_eq!(row.values.len(), header.len() - 1);
            assert_eq!(row.values[0], rec.t);
            assert_eq!(row.values[5], rec.functionals.e);
            assert_eq!(row.values[7], rec.functionals.l);
        }
    }

    #[test]
    fn column_count_is_fixed() {
        assert_eq!(columns(1).len(), 20);
        assert_eq!(columns(3).len(), 26);
    }

    #[test]
    fn plot_data_has_three_columns() {
        let s = plot_data_csv(&sample(1));
        assert!(s.lines().all(|l| l.split(',').count() == 3));
    }
}

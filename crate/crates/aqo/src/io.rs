//! File formats. Numbers are written with Rust's shortest round-trip
//! formatting, so outputs are locale-independent and re-parse exactly.

use std::fs;
use std::path::Path;

use aqo_core::dos::DosHistogram;
use aqo_core::experiments::{ComplexityCurve, ScalingReport};
use aqo_core::hamiltonian::StateVector;
use aqo_core::partition::{CostSpectrum, Problem, SppInstance};
use aqo_core::spectral::SpectralResult;

use crate::error::{CliError, Result};

pub fn read_instance(path: &Path) -> Result<SppInstance> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Format {
        what: "instance",
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// `{"n", "b", "alphas", "seed"}`, pretty-printed with a trailing newline.
pub fn instance_json(inst: &SppInstance) -> String {
    let mut s = serde_json::to_string_pretty(inst).expect("instances always serialize");
    s.push('\n');
    s
}

pub fn write_instance(path: &Path, inst: &SppInstance) -> Result<()> {
    write_text(path, &instance_json(inst))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    s.push('\n');
    write_text(path, &s)
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let to_io = |e: csv::Error| CliError::io(path, e.into());
    let mut w = csv::Writer::from_path(path).map_err(to_io)?;
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(&row).map_err(to_io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `k,d_k` for every level.
pub fn write_costs_csv(path: &Path, costs: &CostSpectrum) -> Result<()> {
    write_csv(
        path,
        &["k", "d_k"],
        costs.degeneracies().iter().enumerate().map(|(k, d)| vec![k.to_string(), d.to_string()]),
    )
}

/// One row per bitstring in order of increasing `|Omega|`.
pub fn write_profile_csv(path: &Path, problem: &Problem, probabilities: &[f64]) -> Result<()> {
    let inst = problem.instance();
    let table = problem.table();
    let costs = problem.costs();
    write_csv(
        path,
        &["sorted_index", "abs_omega", "cost_k", "probability"],
        table.sorted_order().iter().enumerate().map(|(rank, &z)| {
            let z = z as usize;
            vec![
                rank.to_string(),
                num(inst.to_unit(table.residue(z).abs())),
                costs.cost(z).to_string(),
                num(probabilities[z]),
            ]
        }),
    )
}

/// `T,p0,C` over every evaluated point.
pub fn write_curve_csv(path: &Path, curve: &ComplexityCurve) -> Result<()> {
    write_csv(
        path,
        &["T", "p0", "C"],
        curve.points.iter().map(|p| vec![num(p.t), num(p.p0), num(p.complexity)]),
    )
}

/// `s,k,g_k,merging` with `merging` as 0/1.
pub fn write_spectrum_csv(path: &Path, res: &SpectralResult) -> Result<()> {
    let rows = res.s_grid.iter().enumerate().flat_map(|(i, &s)| {
        res.eigenvalues[i].iter().enumerate().map(move |(k, &g)| {
            vec![num(s), k.to_string(), num(g), u8::from(res.merging[i][k]).to_string()]
        })
    });
    write_csv(path, &["s", "k", "g_k", "merging"], rows)
}

pub fn write_dos_csv(path: &Path, hist: &DosHistogram) -> Result<()> {
    write_csv(
        path,
        &["bin_center", "rho_bar", "gaussian_prediction"],
        hist.bin_centers
            .iter()
            .zip(&hist.counts_per_unit)
            .map(|(&c, &rho)| vec![num(c), num(rho), num(hist.gaussian(c))]),
    )
}

/// `n,instance_seed,d0,T_star,p0_star,C_star`, one row per instance.
pub fn write_sweep_csv(path: &Path, report: &ScalingReport) -> Result<()> {
    write_csv(
        path,
        &["n", "instance_seed", "d0", "T_star", "p0_star", "C_star"],
        report.outcomes.iter().map(|o| {
            vec![o.n.to_string(), o.seed.to_string(), o.d0.to_string(), num(o.t_star), num(o.p0_star), num(o.c_star)]
        }),
    )
}

/// Whitespace-separated `n ln(C*)` points plus the per-n medians, for the
/// scaling scatter plot.
pub fn scaling_data(report: &ScalingReport) -> (String, String) {
    let mut scatter = String::from("# n ln_C_star\n");
    for o in report.outcomes.iter().filter(|o| o.error.is_none() && o.c_star.is_finite()) {
        scatter.push_str(&format!("{} {}\n", o.n, o.c_star.ln()));
    }
    let mut medians = String::from("# n ln_median_C_star\n");
    for s in report.per_n.iter().filter(|s| s.median_c_star.is_finite()) {
        medians.push_str(&format!("{} {}\n", s.n, s.median_c_star.ln()));
    }
    (scatter, medians)
}

/// Raw state: interleaved little-endian re/im f64 pairs; `n` follows from the length.
pub fn write_state(path: &Path, psi: &StateVector) -> Result<()> {
    fs::write(path, psi.to_le_bytes()).map_err(|e| CliError::io(path, e))
}

pub fn read_state(path: &Path) -> Result<StateVector> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    StateVector::from_le_bytes(&bytes).map_err(|e| CliError::Format {
        what: "state checkpoint",
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

pub fn curve_script(csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set logscale xy\n\
         set xlabel 'T'\n\
         set ylabel 'C(T)'\n\
         plot '{csv}' skip 1 using 1:3 with linespoints title 'C(T)'\n"
    )
}

pub fn spectrum_script(csv: &str, levels: usize) -> String {
    let mut s = format!(
        "set datafile separator ','\n\
         set xlabel 's'\n\
         set ylabel 'g_k'\n\
         plot for [k=0:{}] '{csv}' skip 1 using ($2==k ? $1 : 1/0):3 with lines notitle\n",
        levels.saturating_sub(1)
    );
    s.push_str(&format!(
        "replot '{csv}' skip 1 using ($4==1 ? $1 : 1/0):3 with points pt 7 ps 0.3 title 'merging'\n"
    ));
    s
}

pub fn scaling_script(scatter: &str, medians: &str, fit: Option<(f64, f64)>) -> String {
    let mut s = format!(
        "set xlabel 'n'\n\
         set ylabel 'ln C*'\n\
         plot '{scatter}' using 1:2 with points title 'instances', \\\n     '{medians}' using 1:2 with linespoints title 'median'"
    );
    if let Some((slope, intercept)) = fit {
        s.push_str(&format!(", \\\n     {slope}*x + {intercept} title 'fit'"));
    }
    s.push('\n');
    s
}

pub fn dos_script(csv: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set xlabel 'Omega'\n\
         set ylabel 'rho'\n\
         plot '{csv}' skip 1 using 1:2 with steps title 'coarse-grained', \\\n     '{csv}' skip 1 using 1:3 with lines title 'gaussian'\n"
    )
}

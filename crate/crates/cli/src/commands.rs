use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use tunnelsplit::model::{norm, Channel, WaveField};
use tunnelsplit::packets::interference_density;
use tunnelsplit::scattering::{ode_oracle, tunneling_params};
use tunnelsplit::splitting::{parity_residual, select_odd_branch, split_amplitudes, stationary_triple, SplitTable};
use tunnelsplit::timing::scan_end;
use tunnelsplit::{ParamsTable, Synthesizer, TimingAnalysis, TimingReport, XGrid};

use crate::config::Scenario;
use crate::{fmt_num, CliError};

const ORACLE_SAMPLES: usize = 48;
const FLUX_SAMPLES: usize = 8;

fn stem(sc: &Scenario) -> String {
    format!("{}_{}", sc.config.name, sc.config.hash())
}

fn metadata(sc: &Scenario, what: &str) -> String {
    let k = &sc.profile.grid;
    let x = &sc.x_grid;
    let pot = serde_json::to_string(&sc.config.potential).expect("potential serialises");
    let mut s = String::new();
    let _ = writeln!(s, "# tunnelsplit {what}");
    let _ = writeln!(s, "# scenario: {} ({})", sc.config.name, sc.config.hash());
    let _ = writeln!(s, "# units: x nm, k 1/nm, t fs, phases rad, phase slopes nm");
    let _ = writeln!(s, "# potential: {pot}");
    let _ = writeln!(s, "# mass_rel: {}", fmt_num(sc.config.mass_rel));
    let _ = writeln!(s, "# packet: k0_per_nm={} l0_nm={}", fmt_num(sc.k0), fmt_num(sc.l0));
    let _ = writeln!(
        s,
        "# k_grid: k_min={} k_max={} n={}",
        fmt_num(k.k_min()),
        fmt_num(k.k_max()),
        k.len()
    );
    let _ = writeln!(
        s,
        "# x_grid: x_min={} x_max={} dx={} n={}",
        fmt_num(x.x_min()),
        fmt_num(x.x_max()),
        fmt_num(x.spacing()),
        x.len()
    );
    s
}

fn cell(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "absent".into())
}

fn write_file(dir: &Path, name: &str, body: &str) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)?;
    let path = dir.join(name);
    fs::write(&path, body)?;
    Ok(path)
}

/// Tunneling parameters over the scenario's `k` grid as CSV. `Λ` columns
/// are `absent` for asymmetric potentials.
pub fn params_csv(sc: &Scenario) -> Result<String, CliError> {
    let table = ParamsTable::build(&sc.potential, &sc.profile.grid, &sc.particle)?;
    let split = if table.symmetric {
        Some(SplitTable::build(&sc.potential, &table, &sc.particle)?)
    } else {
        None
    };
    let mut s = metadata(sc, "params");
    s.push_str("k_per_nm,T,R,J_rad,F_rad,dJ_nm,dF_nm,Lambda_rad,dLambda_nm\n");
    for (i, row) in table.rows.iter().enumerate() {
        let (lam, dlam) = match &split {
            Some(sp) => (Some(sp.lambda[i]), Some(sp.d_lambda[i])),
            None => (None, None),
        };
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{}",
            fmt_num(row.k),
            fmt_num(row.transmission),
            fmt_num(row.reflection),
            fmt_num(row.transmission_phase),
            fmt_num(row.reflection_phase),
            fmt_num(table.d_transmission_phase[i]),
            fmt_num(table.d_reflection_phase[i]),
            cell(lam),
            cell(dlam),
        );
    }
    Ok(s)
}

pub fn cmd_params(sc: &Scenario, out: &Path) -> Result<PathBuf, CliError> {
    let body = params_csv(sc)?;
    write_file(out, &format!("{}_params.csv", stem(sc)), &body)
}

/// One row of the evolve summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolveRow {
    pub t: f64,
    pub norm_full: f64,
    pub norm_tr: Option<f64>,
    pub norm_ref: Option<f64>,
    pub interference_integral: Option<f64>,
    /// `max |Ψ_full − Ψ_tr − Ψ_ref|`
    pub sum_check: Option<f64>,
    /// `max |Ψ_full|`
    pub peak: f64,
}

#[derive(Debug, Clone)]
pub struct EvolveOutput {
    pub files: Vec<PathBuf>,
    pub summary: PathBuf,
    pub rows: Vec<EvolveRow>,
}

fn field_csv(head: &str, f: &WaveField<f64>) -> String {
    let mut s = String::from(head);
    s.push_str("x_nm,re,im,density\n");
    for (i, v) in f.values.iter().enumerate() {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            fmt_num(f.grid.node(i)),
            fmt_num(v.re),
            fmt_num(v.im),
            fmt_num(v.norm_sqr())
        );
    }
    s
}

/// Writes the channel densities for every requested time, plus a summary.
pub fn cmd_evolve(sc: &Scenario, out: &Path) -> Result<EvolveOutput, CliError> {
    let synth = Synthesizer::new(&sc.potential, &sc.profile, &sc.x_grid, &sc.particle)?;
    let base = stem(sc);
    let mut files = Vec::new();
    let mut rows = Vec::new();
    for &t in &sc.config.times_fs {
        let fields = synth.fields(t)?;
        let head = metadata(sc, &format!("evolve t_fs={}", fmt_num(t)));
        let name = |tag: &str| format!("{base}_t{t}fs_{tag}.csv");
        files.push(write_file(out, &name("full"), &field_csv(&head, &fields.full))?);
        let peak = fields.full.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        let mut row = EvolveRow {
            t,
            norm_full: norm(&fields.full)?,
            norm_tr: None,
            norm_ref: None,
            interference_integral: None,
            sum_check: fields.decomposition_residual(),
            peak,
        };
        if let (Some(tr), Some(rf)) = (&fields.transmission, &fields.reflection) {
            files.push(write_file(out, &name("tr"), &field_csv(&head, tr))?);
            files.push(write_file(out, &name("ref"), &field_csv(&head, rf))?);
            let dens = interference_density(&fields.full, tr, rf)?;
            let mut s = head.clone();
            s.push_str("x_nm,density\n");
            for (i, d) in dens.iter().enumerate() {
                let _ = writeln!(s, "{},{}", fmt_num(fields.full.grid.node(i)), fmt_num(*d));
            }
            files.push(write_file(out, &name("interference"), &s)?);
            row.norm_tr = Some(norm(tr)?);
            row.norm_ref = Some(norm(rf)?);
            row.interference_integral = Some(fields.full.grid.integrate(&dens));
        }
        rows.push(row);
    }
    let mut s = metadata(sc, "evolve summary");
    s.push_str("t_fs,norm_full,norm_tr,norm_ref,interference_integral,sum_check,peak\n");
    for r in &rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            fmt_num(r.t),
            fmt_num(r.norm_full),
            cell(r.norm_tr),
            cell(r.norm_ref),
            cell(r.interference_integral),
            cell(r.sum_check),
            fmt_num(r.peak)
        );
    }
    let summary = write_file(out, &format!("{base}_evolve_summary.csv"), &s)?;
    Ok(EvolveOutput { files, summary, rows })
}

/// Timing analysis for the scenario. Default grids are sized to the scan;
/// explicit grids are used as given.
pub fn timing_report(sc: &Scenario) -> Result<TimingReport, CliError> {
    let (l1, l2) = (sc.config.l1, sc.config.l2);
    let an = if sc.custom_grids {
        let mut an = TimingAnalysis::new(&sc.potential, sc.profile.clone(), &sc.x_grid, &sc.particle, None)?;
        an.t_end = scan_end(&sc.potential, &an.out, sc.l0, &sc.particle, l1, l2);
        an
    } else {
        TimingAnalysis::gaussian(&sc.potential, sc.k0, sc.l0, &sc.particle, l1, l2)?
    };
    Ok(an.report(l1, l2, &sc.config.name)?)
}

pub fn cmd_times(sc: &Scenario, out: &Path) -> Result<(TimingReport, Vec<PathBuf>), CliError> {
    let report = timing_report(sc)?;
    let base = stem(sc);
    let csv = format!("{}{}", metadata(sc, "times"), report.to_csv());
    let files = vec![
        write_file(out, &format!("{base}_times.csv"), &csv)?,
        write_file(out, &format!("{base}_times.txt"), &report.to_text())?,
    ];
    Ok((report, files))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckStatus {
    Pass,
    Fail,
    Info,
}

impl CheckStatus {
    fn label(self) -> &'static str {
        match self {
            CheckStatus::Pass => "PASS",
            CheckStatus::Fail => "FAIL",
            CheckStatus::Info => "INFO",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CheckItem {
    pub name: String,
    pub status: CheckStatus,
    pub measured: Option<f64>,
    pub tolerance: Option<f64>,
    pub note: String,
}

impl CheckItem {
    fn bound(name: impl Into<String>, measured: f64, tolerance: f64) -> Self {
        let ok = measured.is_finite() && measured < tolerance;
        Self {
            name: name.into(),
            status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
            measured: Some(measured),
            tolerance: Some(tolerance),
            note: String::new(),
        }
    }

    fn info(name: impl Into<String>, measured: Option<f64>, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Info,
            measured,
            tolerance: None,
            note: note.into(),
        }
    }

    pub fn line(&self) -> String {
        let mut s = format!("{} {}", self.status.label(), self.name);
        if let Some(m) = self.measured {
            let _ = write!(s, " measured={m:.3e}");
        }
        if let Some(t) = self.tolerance {
            let _ = write!(s, " tol={t:.0e}");
        }
        if !self.note.is_empty() {
            let _ = write!(s, " ({})", self.note);
        }
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct CheckReport {
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.status != CheckStatus::Fail)
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }

    pub fn to_text(&self) -> String {
        self.items.iter().map(|i| i.line() + "\n").collect()
    }
}

fn strided<T: Copy>(v: &[T], n: usize) -> Vec<T> {
    if v.len() <= n {
        return v.to_vec();
    }
    (0..n).map(|i| v[i * (v.len() - 1) / (n - 1)]).collect()
}

/// Runs the invariant suite on a scenario. `flip_branch` deliberately picks
/// the wrong sign of `λ` so that the parity check must fail.
pub fn cmd_check(sc: &Scenario, flip_branch: bool) -> Result<CheckReport, CliError> {
    let mut items = Vec::new();
    let pot = &sc.potential;
    let p = &sc.particle;
    let geom = pot.geometry();
    let ks = sc.profile.grid.nodes();
    let symmetric = pot.is_symmetric();
    let na = "not applicable to asymmetric potentials";

    let mut det = 0.0_f64;
    let mut params = Vec::with_capacity(ks.len());
    for &k in &ks {
        let tp = tunneling_params(pot, k, p)?;
        det = det.max((tp.tm.determinant() - 1.0).abs() / tp.tm.q.norm_sqr());
        params.push(tp);
    }
    items.push(CheckItem::bound("transfer_matrix_unimodular", det, 1e-10));

    if matches!(pot, tunnelsplit::potentials::PotentialSpec::Delta { .. }) {
        items.push(CheckItem::info("oracle_dT", None, "oracle needs a slab potential"));
        items.push(CheckItem::info("oracle_dJ", None, "oracle needs a slab potential"));
    } else {
        let (mut dt, mut dj) = (0.0_f64, 0.0_f64);
        for tp in strided(&params, ORACLE_SAMPLES) {
            let o = ode_oracle(pot, tp.k, p)?;
            dt = dt.max((o.transmission - tp.transmission).abs());
            let d = o.transmission_phase - tp.transmission_phase;
            dj = dj.max((d - std::f64::consts::TAU * (d / std::f64::consts::TAU).round()).abs());
        }
        items.push(CheckItem::bound("oracle_dT", dt, 1e-8));
        items.push(CheckItem::bound("oracle_dJ", dj, 1e-7));
    }

    if !symmetric {
        for n in ["parity", "flux_ref", "flux_tr", "decomposition", "norm_ref_drift", "norm_sum", "interference"] {
            items.push(CheckItem::info(n, None, na));
        }
    } else {
        let mut worst = 0.0_f64;
        for tp in &params {
            let mut b = select_odd_branch(pot, tp)?;
            if flip_branch {
                b = b.flipped();
            }
            worst = worst.max(parity_residual(&split_amplitudes(tp, &geom, b), &geom));
        }
        items.push(CheckItem::bound("parity", worst, 1e-8));

        let grid = XGrid::new(geom.a - 20.0, geom.b + 20.0, 801)?.with_breaks_at(&[geom.a, geom.x_mid, geom.b]);
        let (mut fr, mut ft) = (0.0_f64, 0.0_f64);
        for k in strided(&ks, FLUX_SAMPLES) {
            let st = stationary_triple(pot, k, &grid, p)?;
            let v = p.velocity(k);
            for i in 0..grid.len() {
                fr = fr.max(st.flux(Channel::Reflection, i, p).abs() / v);
                ft = ft.max((st.flux(Channel::Transmission, i, p) - v * st.transmission).abs() / v);
            }
        }
        items.push(CheckItem::bound("flux_ref", fr, 1e-8));
        items.push(CheckItem::bound("flux_tr", ft, 1e-8));
    }

    let synth = Synthesizer::new(pot, &sc.profile, &sc.x_grid, p)?;
    let mut times = sc.config.times_fs.clone();
    if !times.contains(&0.0) {
        times.insert(0, 0.0);
    }
    let mut decomposition = 0.0_f64;
    let mut beyond_mid = 0.0_f64;
    let mut ref_norms = Vec::new();
    let mut tr_norms = Vec::new();
    let mut leak = 0.0_f64;
    for &t in &times {
        let f = synth.fields_unchecked(t);
        leak = leak.max((1.0 - norm(&f.full)?).abs());
        let (Some(tr), Some(rf)) = (&f.transmission, &f.reflection) else {
            continue;
        };
        let peak = f.full.values.iter().fold(0.0_f64, |m, v| m.max(v.norm()));
        decomposition = decomposition.max(f.decomposition_residual().unwrap_or(0.0) / peak);
        let dens = interference_density(&f.full, tr, rf)?;
        for (i, d) in dens.iter().enumerate() {
            if f.full.grid.node(i) >= geom.x_mid {
                beyond_mid = beyond_mid.max(d.abs() / (peak * peak));
            }
        }
        let nt = norm(tr)?;
        let nr = norm(rf)?;
        let integral = f.full.grid.integrate(&dens);
        if t == 0.0 {
            items.push(CheckItem::bound("norm_sum t=0", (nt + nr - 1.0).abs(), 1e-8));
            items.push(CheckItem::bound("interference_integral t=0", integral.abs(), 1e-8));
        } else {
            items.push(CheckItem::info(
                format!("interference_integral t={t}"),
                Some(integral),
                "informational",
            ));
        }
        tr_norms.push(nt);
        ref_norms.push(nr);
    }
    items.push(CheckItem::bound("grid_leak", leak, 1e-6));
    if symmetric {
        let spread = |v: &[f64]| {
            let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if v.is_empty() {
                0.0
            } else {
                hi - lo
            }
        };
        items.push(CheckItem::bound("decomposition", decomposition, 1e-10));
        items.push(CheckItem::bound("interference_beyond_midpoint", beyond_mid, 1e-12));
        items.push(CheckItem::bound("norm_ref_drift", spread(&ref_norms), 1e-6));
        items.push(CheckItem::info(
            "norm_tr_drift",
            Some(spread(&tr_norms)),
            "informational",
        ));
    }
    Ok(CheckReport { items })
}

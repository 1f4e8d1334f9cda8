//! Subcommand drivers shared by the binary and the C interface. Each run
//! writes its files under `<out>/<command>/<run-id>/`.

use num_complex::Complex64;
use serde::Serialize;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::basis::{build_hermite_basis, build_landau_basis};
use crate::config::{ExperimentConfig, ModelKind, PolyTerms};
use crate::eigen::{eigenvalues, Spectrum};
use crate::enclosure::{epsilon_threshold_probe, run_enclosure, run_pauli_enclosure, EnclosureReport};
use crate::error::{invalid, Error, Result};
use crate::norms::{projection_bound, resolvent_scan, smoothing_check, ScanConfig, ScanResult, SmoothingConfig};
use crate::operator::{assemble_full, assemble_pauli, Discretization, HermitianFlag, Model, OperatorMatrix};
use crate::output::{csv, fmt_f64, sha256_hex, to_canonical_json, write_text};
use crate::phase_space::{
    check_escape_inequality, check_htheta_inequality, evaluate_margin, garding_certificate, moyal_leading_check,
    PhaseGrid, SymbolField, WeylGrid,
};
use crate::verdict::Verdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Enclosure,
    ResolventScan,
    EscapeCheck,
    Projection,
    Garding,
    Moyal,
    Smoothing,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Spectrum,
        Command::Enclosure,
        Command::ResolventScan,
        Command::EscapeCheck,
        Command::Projection,
        Command::Garding,
        Command::Moyal,
        Command::Smoothing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Enclosure => "enclosure",
            Command::ResolventScan => "resolvent-scan",
            Command::EscapeCheck => "escape-check",
            Command::Projection => "projection",
            Command::Garding => "garding",
            Command::Moyal => "moyal",
            Command::Smoothing => "smoothing",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

/// Files and verdict produced by one subcommand, before anything is written.
struct Produced {
    files: Vec<(String, String)>,
    verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub command: String,
    pub run_id: String,
    pub dir: PathBuf,
    pub verdict: Verdict,
    /// File name to SHA-256 digest, run record excluded.
    pub digests: BTreeMap<String, String>,
}

impl RunOutcome {
    pub fn verdict_line(&self) -> String {
        format!("VERDICT {} {}", self.command, self.verdict)
    }
}

pub const RUN_RECORD: &str = "run_record.json";
pub const CONFIG_SNAPSHOT: &str = "config.toml";

/// Run a subcommand and persist its outputs, the config snapshot and the
/// run record.
pub fn run(cmd: Command, cfg: &ExperimentConfig) -> Result<RunOutcome> {
    run_in(cmd, cfg, Path::new(&cfg.output.dir))
}

pub fn run_in(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<RunOutcome> {
    let snapshot = cfg.materialized()?;
    let run_id = cfg.run_id()?;
    let dir = out.join(cmd.name()).join(&run_id);
    let t0 = Instant::now();
    let produced = produce(cmd, cfg)?;
    let compute = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let mut digests = BTreeMap::new();
    write_text(&dir.join(CONFIG_SNAPSHOT), &snapshot)?;
    digests.insert(CONFIG_SNAPSHOT.to_string(), sha256_hex(snapshot.as_bytes()));
    for (name, text) in &produced.files {
        write_text(&dir.join(name), text)?;
        digests.insert(name.clone(), sha256_hex(text.as_bytes()));
    }
    let write = t1.elapsed().as_secs_f64();
    let record = json!({
        "artifact_version": env!("CARGO_PKG_VERSION"),
        "command": cmd.name(),
        "run_id": run_id,
        "config": snapshot,
        "digests": digests,
        "timings_s": { "compute": compute, "write": write },
        "verdict": produced.verdict,
    });
    write_text(&dir.join(RUN_RECORD), &to_canonical_json(&record)?)?;
    Ok(RunOutcome { command: cmd.name().into(), run_id, dir, verdict: produced.verdict, digests })
}

/// Exit status: 0 success, 2 configuration or precondition, 3 numerical
/// non-convergence, 4 verdict FAIL, 1 anything else.
pub fn exit_code(result: &Result<RunOutcome>) -> i32 {
    match result {
        Ok(o) if o.verdict == Verdict::Fail => 4,
        Ok(_) => 0,
        Err(e) => error_code(e),
    }
}

pub fn error_code(e: &Error) -> i32 {
    match e {
        Error::Config { .. }
        | Error::InvalidInput(_)
        | Error::DimensionMismatch { .. }
        | Error::MissingDivergence(_)
        | Error::NotScalar(_)
        | Error::TooCloseToSpectrum { .. }
        | Error::NegativeSymbol { .. } => 2,
        Error::NoConvergence { .. } | Error::Ambiguous(_) => 3,
        Error::Io(_) => 1,
    }
}

fn produce(cmd: Command, cfg: &ExperimentConfig) -> Result<Produced> {
    match cmd {
        Command::Spectrum => cmd_spectrum(cfg),
        Command::Enclosure => cmd_enclosure(cfg),
        Command::ResolventScan => cmd_resolvent_scan(cfg),
        Command::EscapeCheck => cmd_escape_check(cfg),
        Command::Projection => cmd_projection(cfg),
        Command::Garding => cmd_garding(cfg),
        Command::Moyal => cmd_moyal(cfg),
        Command::Smoothing => cmd_smoothing(cfg),
    }
}

fn json_file<T: Serialize>(name: &str, value: &T) -> Result<(String, String)> {
    Ok((name.to_string(), to_canonical_json(value)?))
}

fn spectrum_csv(s: &Spectrum) -> String {
    csv(
        &["re", "im", "residual", "converged"],
        s.eigenvalues.iter().zip(&s.residuals).zip(&s.converged).map(|((z, r), c)| {
            vec![fmt_f64(z.re), fmt_f64(z.im), fmt_f64(*r), c.to_string()]
        }),
    )
}

fn spectrum_summary(label: &str, m: &OperatorMatrix, s: &Spectrum) -> serde_json::Value {
    json!({
        "block": label,
        "basis_size": s.basis_size,
        "count": s.len(),
        "hermitian": m.hermitian == HermitianFlag::Hermitian,
        "max_abs_im": s.max_abs_im(),
        "max_residual": s.residuals.iter().copied().fold(0.0, f64::max),
        "all_converged": s.converged.iter().all(|c| *c),
    })
}

fn cmd_spectrum(cfg: &ExperimentConfig) -> Result<Produced> {
    let m = &cfg.model;
    let p = &cfg.potentials;
    let (basis, grid) = match m.kind {
        ModelKind::Oscillator => build_hermite_basis(m.n, m.modes_per_axis, 1.0)?,
        ModelKind::Landau | ModelKind::Pauli => build_landau_basis(m.b0, m.max_level, m.max_angular)?,
    };
    let disc = Discretization::new(basis, grid)?;
    let blocks: Vec<(&str, OperatorMatrix)> = match m.kind {
        ModelKind::Oscillator => vec![("P", assemble_full(&Model::Oscillator { n: m.n }, &p.w, &p.a1, &p.v1, &disc)?)],
        ModelKind::Landau => vec![("P", assemble_full(&Model::Landau { b0: m.b0 }, &p.w, &p.a1, &p.v1, &disc)?)],
        ModelKind::Pauli => {
            let (plus, minus) = assemble_pauli(m.b0, &p.w, &p.a1, &p.v1, &disc)?;
            vec![("plus", plus), ("minus", minus)]
        }
    };
    let mut files = Vec::new();
    let mut summaries = Vec::new();
    let mut verdict = Verdict::Pass;
    for (label, op) in &blocks {
        let s = eigenvalues(op)?;
        if !s.converged.iter().all(|c| *c) {
            verdict = Verdict::Flagged;
        }
        let name = if blocks.len() == 1 { "spectrum.csv".to_string() } else { format!("spectrum_{label}.csv") };
        files.push((name, spectrum_csv(&s)));
        summaries.push(spectrum_summary(label, op, &s));
    }
    files.push(json_file("summary.json", &json!({ "blocks": summaries, "verdict": verdict }))?);
    Ok(Produced { files, verdict })
}

fn enclosure_csvs(prefix: &str, rep: &EnclosureReport, files: &mut Vec<(String, String)>) -> Result<()> {
    files.push((format!("{prefix}.csv"), rep.csv()));
    let rows = rep.rows.iter().flat_map(|r| {
        r.eigenvalues
            .iter()
            .map(move |z| vec![fmt_f64(r.tau), fmt_f64(z.re), fmt_f64(z.im), "above".into()])
            .chain(r.sub_threshold.iter().map(move |z| vec![fmt_f64(r.tau), fmt_f64(z.re), fmt_f64(z.im), "below".into()]))
    });
    files.push((format!("{prefix}_eigenvalues.csv"), csv(&["tau", "re", "im", "threshold"], rows)));
    Ok(())
}

fn cmd_enclosure(cfg: &ExperimentConfig) -> Result<Produced> {
    let ec = cfg.enclosure();
    let mut files = Vec::new();
    let mut verdict;
    if cfg.model.kind == ModelKind::Pauli {
        let rep = run_pauli_enclosure(&ec)?;
        enclosure_csvs("enclosure", &rep.merged, &mut files)?;
        enclosure_csvs("enclosure_plus", &rep.plus, &mut files)?;
        enclosure_csvs("enclosure_minus", &rep.minus, &mut files)?;
        files.push(json_file("report.json", &rep)?);
        verdict = rep.verdict;
    } else {
        let rep = run_enclosure(&ec)?;
        enclosure_csvs("enclosure", &rep, &mut files)?;
        files.push(json_file("report.json", &rep)?);
        verdict = rep.verdict;
    }
    if !ec.a1.is_zero() {
        let probe = epsilon_threshold_probe(&ec, &cfg.sweep.epsilon, cfg.sweep.include_a1_squared)?;
        files.push((
            "epsilon.csv".into(),
            csv(&["epsilon", "norm_L"], probe.epsilon.iter().zip(&probe.norms).map(|(e, n)| vec![fmt_f64(*e), fmt_f64(*n)])),
        ));
        files.push(json_file("epsilon.json", &probe)?);
        verdict = verdict.and(probe.verdict);
    }
    Ok(Produced { files, verdict })
}

fn oscillator_n(cfg: &ExperimentConfig) -> Result<usize> {
    if cfg.model.kind != ModelKind::Oscillator {
        return Err(invalid("norm scans run on the oscillator model"));
    }
    Ok(cfg.model.n)
}

fn scan_csv(scan: &ScanResult, header: &[&str]) -> String {
    csv(
        header,
        scan.im_z.iter().enumerate().map(|(i, im)| {
            let mut row = vec![fmt_f64(scan.re_z), fmt_f64(*im)];
            row.extend(scan.curves.iter().map(|c| fmt_f64(c.values[i])));
            row
        }),
    )
}

fn cmd_resolvent_scan(cfg: &ExperimentConfig) -> Result<Produced> {
    let n = oscillator_n(cfg)?;
    let nc = &cfg.norms;
    let scan = resolvent_scan(
        &ScanConfig { n, modes_per_axis: nc.modes_per_axis, q: nc.q, re_z: nc.re_z, im_z: nc.im_z.clone() },
        cfg.seed,
    )?;
    let files = vec![
        ("scan.csv".into(), scan_csv(&scan, &["re_z", "im_z", "norm_qprime_to_2", "norm_qprime_to_q", "norm_2_to_2"])),
        json_file("summary.json", &scan)?,
    ];
    Ok(Produced { files, verdict: scan.verdict })
}

fn cmd_smoothing(cfg: &ExperimentConfig) -> Result<Produced> {
    let n = oscillator_n(cfg)?;
    let nc = &cfg.norms;
    let rep = smoothing_check(
        &SmoothingConfig { n, modes_per_axis: nc.modes_per_axis, weight: nc.weight, re_z: nc.re_z, im_z: nc.im_z.clone() },
        cfg.seed,
    )?;
    let files = vec![
        (
            "smoothing.csv".into(),
            scan_csv(&rep.scan, &["re_z", "im_z", "norm_r", "norm_r_mw", "norm_mw_r", "norm_mw_r_mw"]),
        ),
        json_file("summary.json", &rep)?,
    ];
    Ok(Produced { files, verdict: rep.scan.verdict })
}

fn cmd_projection(cfg: &ExperimentConfig) -> Result<Produced> {
    let n = oscillator_n(cfg)?;
    let nc = &cfg.norms;
    if nc.k_min > nc.k_max {
        return Err(invalid("k_min exceeds k_max"));
    }
    let ks: Vec<usize> = (nc.k_min..=nc.k_max).collect();
    let rep = projection_bound(n, nc.modes_per_axis, &ks, nc.q, cfg.seed)?;
    let files = vec![
        (
            "projection.csv".into(),
            csv(
                &["k", "window_size", "norm_2_to_q", "norm_2_to_inf", "empty"],
                rep.rows.iter().map(|r| {
                    vec![
                        r.k.to_string(),
                        r.window_size.to_string(),
                        fmt_f64(r.norm_2_to_q),
                        fmt_f64(r.norm_2_to_inf),
                        r.empty.to_string(),
                    ]
                }),
            ),
        ),
        json_file("summary.json", &rep)?,
    ];
    Ok(Produced { files, verdict: rep.verdict })
}

fn cmd_escape_check(cfg: &ExperimentConfig) -> Result<Produced> {
    let ps = &cfg.phase_space;
    let params = ps.escape_params();
    let grid = PhaseGrid::new(ps.n, ps.radius, ps.spacing)?;
    let rep = check_escape_inequality(&params, &grid)?;
    let wider = evaluate_margin(&params, &PhaseGrid::new(ps.n, 2.0 * ps.radius, ps.spacing)?, rep.c, rep.big_c)?;
    let finer = evaluate_margin(&params, &PhaseGrid::new(ps.n, ps.radius, 0.5 * ps.spacing)?, rep.c, rep.big_c)?;
    let htheta = check_htheta_inequality(&params, &grid)?;
    let survives = wider >= 0.0 && finer >= 0.0;
    let verdict = Verdict::from_bool(rep.pass && survives);
    let summary = json!({
        "c": rep.c,
        "big_c": rep.big_c,
        "window_constants": rep.window_constants,
        "c_asymptotic": rep.c_asymptotic,
        "contraction_ratio": rep.contraction_ratio,
        "min_location": rep.min_location,
        "min_margin_certified": rep.min_margin_certified,
        "certificate_pass": rep.pass,
        "margin_doubled_radius": wider,
        "margin_halved_spacing": finer,
        "htheta": htheta,
        "verdict": verdict,
    });
    let map = csv(
        &["x", "xi", "L", "R_c", "margin"],
        rep.margin_map.iter().map(|s| {
            vec![fmt_f64(s.x), fmt_f64(s.xi), fmt_f64(s.bracket), fmt_f64(s.weight), fmt_f64(s.margin)]
        }),
    );
    Ok(Produced { files: vec![("margin_map.csv".into(), map), json_file("report.json", &summary)?], verdict })
}

fn poly_symbol(name: &str, terms: &PolyTerms) -> SymbolField {
    SymbolField::polynomial_1d(name, terms.iter().map(|&(c, p, q)| (Complex64::new(c, 0.0), p, q)).collect())
}

pub const GARDING_DRIFT_TOL: f64 = 1e-3;

fn cmd_garding(cfg: &ExperimentConfig) -> Result<Produced> {
    let ps = &cfg.phase_space;
    if ps.garding_symbol.iter().any(|t| t.1 < 0 || t.2 < 0) {
        return Err(invalid("symbol exponents must be non-negative"));
    }
    let sym = poly_symbol("a", &ps.garding_symbol);
    let coarse = garding_certificate(&sym, &WeylGrid::new(ps.weyl_n, ps.weyl_radius)?)?;
    let fine = garding_certificate(&sym, &WeylGrid::new(2 * ps.weyl_n, ps.weyl_radius)?)?;
    let drift = (fine.lambda_min - coarse.lambda_min).abs();
    let verdict = Verdict::from_bool(coarse.pass && fine.pass && drift < GARDING_DRIFT_TOL);
    let summary = json!({ "coarse": coarse, "fine": fine, "drift": drift, "verdict": verdict });
    Ok(Produced { files: vec![json_file("garding.json", &summary)?], verdict })
}

fn cmd_moyal(cfg: &ExperimentConfig) -> Result<Produced> {
    let ps = &cfg.phase_space;
    let a = poly_symbol("a", &ps.moyal_a);
    let b = poly_symbol("b", &ps.moyal_b);
    let d = moyal_leading_check(&a, &b, &WeylGrid::new(ps.weyl_n, ps.weyl_radius)?)?;
    // the two-term product must improve on the plain product and keep
    // improving when the symbols are spread out
    let slack = 1e-9;
    let verdict = Verdict::from_bool(d.d1 <= d.d0 + slack && d.d1_half <= d.d1 + slack);
    let summary = json!({ "defects": d, "verdict": verdict });
    Ok(Produced { files: vec![json_file("moyal.json", &summary)?], verdict })
}

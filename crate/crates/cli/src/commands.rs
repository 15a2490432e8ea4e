//! One function per subcommand. Each reads its sections from the
//! configuration, runs the computation and fills in the artifacts.
//! The returned flag is `false` when a certification check failed.

use dal_core::certify::{certify_lemma_we, certify_lifting, check_covering, compute_thresholds, reports_to_csv};
use dal_core::dynamics::{localization_profile, log_time_grid, WavePacket};
use dal_core::geometry::{
    compute_r, enumerate_patterns, find_disjoint_repetitions, sturmian_flagged_sites, supf_diagnostic, write_delone,
    DeloneSet, LatticePoint, Pattern, Window,
};
use dal_core::operator::{assemble_hamiltonian, sample_potential, BoxSpec};
use dal_core::spectral::{eig_extremal, eig_full, estimate_ids, Side};
use dal_core::stats::{edge_scan, fit_qw, ilse_scan, wegner_scan, StatsSummary};
use serde::Serialize;

use crate::artifact::Artifacts;
use crate::config::{points, EdgeSide, ExperimentConfig, Method};
use crate::{CliError, UsageError};

pub const COMMANDS: &[&str] = &[
    "delone-gen",
    "delone-analyze",
    "spectrum",
    "certify-lemma",
    "certify-lifting",
    "wegner",
    "ilse",
    "ids",
    "dynamics",
    "edges",
];

fn need<'a, T>(section: &'a Option<T>, name: &str) -> Result<&'a T, UsageError> {
    section.as_ref().ok_or_else(|| UsageError(format!("missing [{name}] section")))
}

/// Everything a command needs, resolved before any computation so that
/// configuration mistakes never leave partial artifacts behind.
pub struct Prepared {
    command: String,
    config: ExperimentConfig,
    set: Option<DeloneSet>,
    seed: u64,
}

pub fn prepare(command: &str, config: ExperimentConfig, seed: u64) -> Result<Prepared, UsageError> {
    if !COMMANDS.contains(&command) {
        return Err(UsageError(format!("unknown command `{command}`")));
    }
    let needs_disorder = !matches!(command, "delone-gen" | "delone-analyze" | "certify-lemma");
    let needs_box = matches!(command, "spectrum" | "certify-lemma" | "certify-lifting" | "dynamics");
    let sections: &[(&str, bool)] = &[
        ("analyze", config.analyze.is_some() || command != "delone-analyze"),
        ("spectrum", config.spectrum.is_some() || command != "spectrum"),
        ("certify", config.certify.is_some() || command != "certify-lemma"),
        ("lifting", config.lifting.is_some() || command != "certify-lifting"),
        ("wegner", config.wegner.is_some() || command != "wegner"),
        ("ilse", config.ilse.is_some() || command != "ilse"),
        ("ids", config.ids.is_some() || command != "ids"),
        ("dynamics", config.dynamics.is_some() || command != "dynamics"),
        ("edges", config.edges.is_some() || command != "edges"),
        ("disorder", config.disorder.is_some() || !needs_disorder),
        ("box", config.box_spec.is_some() || !needs_box),
    ];
    if let Some((name, _)) = sections.iter().find(|(_, ok)| !ok) {
        return Err(UsageError(format!("`{command}` needs a [{name}] section")));
    }
    if let Some(d) = &config.disorder {
        dal_core::disorder::DisorderSpec::new(d.law.clone(), d.m).map_err(|e| UsageError(format!("disorder: {e}")))?;
    }
    let set = need(&config.delone, "delone")?.build()?;
    Ok(Prepared { command: command.to_string(), config, set: Some(set), seed })
}

pub fn run(p: Prepared, art: &mut Artifacts) -> Result<bool, CliError> {
    let Prepared { command, config, set, seed } = p;
    let set = set.expect("prepared set");
    match command.as_str() {
        "delone-gen" => delone_gen(&config, &set, art),
        "delone-analyze" => delone_analyze(&config, &set, art),
        "spectrum" => spectrum(&config, &set, seed, art),
        "certify-lemma" => certify_lemma(&config, &set, seed, art),
        "certify-lifting" => lifting(&config, &set, seed, art),
        "wegner" => wegner(&config, &set, seed, art),
        "ilse" => ilse(&config, &set, seed, art),
        "ids" => ids(&config, &set, seed, art),
        "dynamics" => dynamics(&config, &set, seed, art),
        "edges" => edges(&config, &set, seed, art),
        _ => unreachable!("validated in prepare"),
    }
}

#[derive(Serialize)]
struct DeloneSummary {
    dim: usize,
    window: String,
    points: usize,
    declared_r: u64,
    r: u64,
    near_cut_sites: Option<Vec<LatticePoint>>,
}

fn delone_gen(cfg: &ExperimentConfig, set: &DeloneSet, art: &mut Artifacts) -> Result<bool, CliError> {
    let r = art.timed("compute_r", || compute_r(set))?;
    let delone = cfg.delone.as_ref().expect("checked");
    let near_cut_sites = match (delone.rotation(), delone.window()) {
        (Some((alpha, beta, per_axis)), Some(w)) => Some(sturmian_flagged_sites(alpha, beta, &w?, per_axis)?),
        _ => None,
    };
    art.add("delone.txt", write_delone(set));
    art.json(
        "delone_summary.json",
        &DeloneSummary {
            dim: set.dim(),
            window: set.window().to_string(),
            points: set.len(),
            declared_r: set.declared_r(),
            r,
            near_cut_sites,
        },
    );
    Ok(r <= set.declared_r())
}

#[derive(Serialize)]
struct AnalyzeSummary {
    r: u64,
    declared_r: u64,
    declared_r_holds: bool,
    extent: usize,
    distinct_patterns: usize,
    limit_estimate: f64,
    uniformity_deviation: f64,
    strictly_positive: bool,
    repetitions: Vec<LatticePoint>,
    repetitions_insufficient: bool,
}

fn delone_analyze(cfg: &ExperimentConfig, set: &DeloneSet, art: &mut Artifacts) -> Result<bool, CliError> {
    let a = cfg.analyze.as_ref().expect("checked");
    let r = compute_r(set)?;
    let census = art.timed("census", || enumerate_patterns(set, a.extent))?;
    let pattern = match &a.anchor {
        Some(anchor) => Pattern::content_at(set, &LatticePoint::new(anchor.clone()), a.extent),
        None => Pattern::singleton(set.dim()),
    };
    let report = art.timed("frequency", || supf_diagnostic(set, &pattern, &a.half_widths, &points(&a.centers)))?;
    let (repetitions, insufficient) = if a.repetitions > 0 {
        let w = set.window();
        let hi = w.hi().shifted(-(pattern.extent() as i64));
        let search = Window::new(w.lo().clone(), hi)?;
        let reps = find_disjoint_repetitions(set, &pattern, a.repetitions, &search)?;
        (reps.translations, reps.insufficient)
    } else {
        (Vec::new(), false)
    };
    let mut census_csv = String::from("pattern,count\n");
    for (p, count) in &census {
        let offsets: Vec<String> = p.offsets().iter().map(|o| o.to_string()).collect();
        census_csv.push_str(&format!("\"{}\",{count}\n", offsets.join(" ")));
    }
    art.add("patterns.csv", census_csv);
    let mut freq_csv = String::from("L,center,hits,volume,frequency\n");
    for row in &report.rows {
        freq_csv.push_str(&format!("{},{},{},{},{}\n", row.half_width, row.center, row.hits, row.volume, row.value));
    }
    art.add("frequency.csv", freq_csv);
    art.table(
        "frequency_deviation.dat",
        "L",
        "center_spread",
        report.deviation_by_l.iter().map(|&(l, d)| (l as f64, d)),
    );
    let declared_r_holds = r <= set.declared_r();
    art.json(
        "analyze_summary.json",
        &AnalyzeSummary {
            r,
            declared_r: set.declared_r(),
            declared_r_holds,
            extent: a.extent,
            distinct_patterns: census.len(),
            limit_estimate: report.limit_estimate,
            uniformity_deviation: report.uniformity_deviation,
            strictly_positive: report.strictly_positive,
            repetitions,
            repetitions_insufficient: insufficient,
        },
    );
    Ok(declared_r_holds && !insufficient)
}

fn spectrum(cfg: &ExperimentConfig, set: &DeloneSet, seed: u64, art: &mut Artifacts) -> Result<bool, CliError> {
    let s = cfg.spectrum.as_ref().expect("checked");
    let b = cfg.box_spec.as_ref().expect("checked").spec();
    let disorder = cfg.disorder.as_ref().expect("checked");
    let sample = sample_potential(set, &b, disorder, seed, s.sample)?;
    let h = assemble_hamiltonian(&b, set, &sample)?;
    let res = art.timed("solve", || match s.method {
        Method::Dense => eig_full(&h),
        Method::Extremal => {
            let side = if s.side == EdgeSide::Low { Side::Low } else { Side::High };
            eig_extremal(&h, s.k, side, s.tol)
        }
    })?;
    art.add("spectrum.csv", res.to_csv());
    art.table("spectrum.dat", "index", "eigenvalue", res.eigenvalues.iter().enumerate().map(|(i, &l)| (i as f64, l)));
    if s.triplets {
        art.add("hamiltonian.txt", h.to_triplets());
    }
    art.json("spectrum_meta.json", &res.meta);
    Ok(true)
}

fn certify_lemma(cfg: &ExperimentConfig, set: &DeloneSet, seed: u64, art: &mut Artifacts) -> Result<bool, CliError> {
    let c = cfg.certify.as_ref().expect("checked");
    let b = cfg.box_spec.as_ref().expect("checked").spec();
    let r = compute_r(set)?;
    let thresholds = compute_thresholds(set.dim(), r, c.q)?;
    let covering = art.timed("covering", || check_covering(set, &b, r))?;
    let lemma = art.timed("lemma", || certify_lemma_we(set, &b, c.q, c.nsamples, seed))?;
    let passed = covering.pass && lemma.pass;
    if lemma.vacuous {
        eprintln!(
            "warning: the spectral subspace below E_W is empty; try half_width >= {}",
            lemma.recommended_half_width.unwrap_or(0)
        );
    }
    let reports = [covering, lemma];
    art.add("certify.csv", reports_to_csv(&reports));
    art.json("certify_summary.json", &serde_json::json!({ "thresholds": thresholds, "reports": reports }));
    Ok(passed)
}

fn lifting(cfg: &ExperimentConfig, set: &DeloneSet, seed: u64, art: &mut Artifacts) -> Result<bool, CliError> {
    let l = cfg.lifting.as_ref().expect("checked");
    let b = cfg.box_spec.as_ref().expect("checked").spec();
    let disorder = cfg.disorder.as_ref().expect("checked");
    let rep = art.timed("lifting", || certify_lifting(set, &b, disorder, l.k, l.nsamples, l.nphi, seed))?;
    let passed = rep.pass;
    art.add("lifting.csv", reports_to_csv(std::slice::from_ref(&rep)));
    art.json("lifting_summary.json", &rep);
    Ok(passed)
}

fn wegner(cfg: &ExperimentConfig, set: &DeloneSet, seed: u64, art: &mut Artifacts) -> Result<bool, CliError> {
    let w = cfg.wegner.as_ref().expect("checked");
    let disorder = cfg.disorder.as_ref().expect("checked");
    let thresholds = compute_thresholds(set.dim(), compute_r(set)?, w.q)?;
    let energy = w.energy.unwrap_or(thresholds.e_w / 2.0);
    let centers = points(&w.centers);
    let rep = art.timed("scan", || {
        wegner_scan(set, disorder, energy, &w.etas, &w.half_widths, &centers, w.nsamples, seed, Some(thresholds.e_w))
    })?;
    for warning in &rep.warnings {
        eprintln!("warning: {warning}");
    }
    let fit = if w.etas.iter().all(|&e| e > 0.0) { Some(fit_qw(&rep)?) } else { None };
    art.add("wegner.csv", rep.to_csv());
    art.table("wegner.dat", "eta", "phat", rep.cells.iter().map(|c| (c.eta, c.phat)));
    art.json(
        "summary.json",
        &StatsSummary {
            q_w: fit.as_ref().map(|f| f.q_w),
            uniformity: fit.as_ref().map(|f| f.uniformity),
            c_fit: None,
            p: None,
            seed,
        },
    );
    Ok(true)
}

fn ilse(cfg: &ExperimentConfig, set: &DeloneSet, seed: u64, art: &mut Artifacts) -> Result<bool, CliError> {
    let i = cfg.ilse.as_ref().expect("checked");
    let disorder = cfg.disorder.as_ref().expect("checked");
    let centers = points(&i.centers);
    let rep = art.timed("scan", || ilse_scan(set, disorder, &i.half_widths, &centers, i.nsamples, i.p, seed))?;
    art.add("ilse.csv", rep.to_csv());
    art.table("ilse.dat", "L", "mean_lambda_min", rep.cells.iter().map(|c| (c.half_width as f64, c.mean())));
    art.json(
        "summary.json",
        &StatsSummary { q_w: None, uniformity: None, c_fit: Some(rep.c_fit), p: Some(rep.p), seed },
    );
    Ok(true)
}

fn ids(cfg: &ExperimentConfig, set: &DeloneSet, seed: u64, art: &mut Artifacts) -> Result<bool, CliError> {
    let c = cfg.ids.as_ref().expect("checked");
    let disorder = cfg.disorder.as_ref().expect("checked");
    if c.n_energies < 2 || !(c.e_max > c.e_min) {
        return Err(UsageError("ids needs e_min < e_max and n_energies >= 2".into()).into());
    }
    let step = (c.e_max - c.e_min) / (c.n_energies - 1) as f64;
    let energies: Vec<f64> = (0..c.n_energies).map(|k| c.e_min + step * k as f64).collect();
    let curve = art
        .timed("ids", || estimate_ids(set, disorder, c.half_width, &points(&c.centers), c.nsamples, &energies, seed))?;
    art.add("ids.csv", curve.to_csv());
    art.table("ids.dat", "E", "N_mean", curve.energies.iter().copied().zip(curve.mean.iter().copied()));
    Ok(true)
}

fn dynamics(cfg: &ExperimentConfig, set: &DeloneSet, seed: u64, art: &mut Artifacts) -> Result<bool, CliError> {
    let d = cfg.dynamics.as_ref().expect("checked");
    let b: BoxSpec = cfg.box_spec.as_ref().expect("checked").spec();
    let disorder = cfg.disorder.as_ref().expect("checked");
    let interval = match d.interval {
        Some([lo, hi]) => (lo, hi),
        None => (0.0, compute_thresholds(set.dim(), compute_r(set)?, 0.5)?.e_w),
    };
    let origin = d.origin.clone().map_or_else(|| b.center.clone(), LatticePoint::new);
    let initial = d.initial.clone().map_or_else(|| b.center.clone(), LatticePoint::new);
    let psi0 = WavePacket::delta(b.clone(), &initial)?;
    let times = log_time_grid(d.t_min, d.t_max, d.n_times)?;
    let trace = art.timed("evolve", || {
        localization_profile(set, disorder, &b, interval, &psi0, &times, d.p, &origin, d.nsamples, seed)
    })?;
    let [s_lo, s_hi] = d.saturation.unwrap_or([d.t_max / 10.0, d.t_max]);
    if trace.negligible_samples > 0 {
        eprintln!("warning: P(I)ψ₀ has norm below 1e-8 in {}/{} samples", trace.negligible_samples, d.nsamples);
    }
    art.add("dynamics.csv", trace.to_csv());
    art.table("moment.dat", "t", "m_p_mean", trace.times.iter().copied().zip(trace.values.iter().copied()));
    art.json("dynamics_summary.json", &trace.summary(s_lo, s_hi));
    Ok(true)
}

fn edges(cfg: &ExperimentConfig, set: &DeloneSet, seed: u64, art: &mut Artifacts) -> Result<bool, CliError> {
    let e = cfg.edges.as_ref().expect("checked");
    let disorder = cfg.disorder.as_ref().expect("checked");
    let rep = art.timed("edges", || edge_scan(set, disorder, e.half_width, e.nsamples, seed))?;
    let passed = rep.contained;
    art.json("edges.json", &rep);
    Ok(passed)
}

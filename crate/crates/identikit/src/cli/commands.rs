use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{json, Value};

use super::build::{build_mesh, wtp_representer, Mesh, MeshSummary, Resolution};
use super::config::{ModelConfig, RunConfig, SCHEMA};
use super::svg::{Chart, Series};
use crate::diagnostics::report::{partial_sums_csv, singular_values_csv};
use crate::diagnostics::{
    classify_discrete, classify_pair, completeness_report, fisher_information_with, full_singular_system,
    generalized_fisher_detail, projection_residuals, singular_system_with, Classification, FisherInfo, Functional,
    SingularSystem, DEFAULT_STARTS,
};
use crate::error::{Error, Result};
use crate::linop::{adjoint, write_operator, LinOp, TangentBasis};
use crate::mc::{fit_slope, impossibility_path, rate_experiment_with, simulate};
use crate::models::triangular::triangular_probe_dictionary;
use crate::models::{
    aara_pipeline, crra_lognormal_spec, default_odd_profile, euler_discount_check, ig_null_direction, ig_operator,
    ig_reflection_error, symmetric_tangent, triangular_functionals, wtp_regularity, IgFactored, IgMixtureSpec,
    TriangularSpec,
};
use crate::solvers::{moment_estimate, solve_with_system};

/// Dictionary sizes for the smoothness probes in triangular reports.
const PROBE_SIZES: [usize; 4] = [4, 8, 16, 32];

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::write(dir.join(name), contents)?;
    Ok(())
}

fn write_json(dir: &Path, name: &str, v: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Error::Numerical(format!("serializing {name}: {e}")))?;
    s.push('\n');
    write(dir, name, &s)
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out)?;
    Ok(&cfg.out)
}

fn file_stem(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' || c == '-' { c } else { '_' }).collect()
}

fn system(op: &LinOp, cfg: &RunConfig) -> Result<SingularSystem> {
    singular_system_with(op, op.rows().min(op.cols()), cfg.thresholds.tau_null)
}

fn meshes(cfg: &RunConfig) -> Result<[Mesh; 2]> {
    Ok([build_mesh(cfg, Resolution::Coarse)?, build_mesh(cfg, Resolution::Fine)?])
}

#[derive(Serialize)]
struct Spectrum {
    resolution: Resolution,
    lambda_max: f64,
    rank_cutoff: usize,
    values: Vec<f64>,
}

fn spectrum(res: Resolution, sys: &SingularSystem) -> Spectrum {
    Spectrum { resolution: res, lambda_max: sys.lambda_max(), rank_cutoff: sys.rank_cutoff(), values: sys.values().to_vec() }
}

#[derive(Serialize)]
struct GeneralizedEntry {
    gauge: String,
    value: Option<f64>,
    unidentified: bool,
    note: Option<String>,
}

#[derive(Serialize)]
struct FunctionalReport {
    name: String,
    value: f64,
    classification: Classification,
    fisher: FisherInfo,
    generalized_fisher: Vec<GeneralizedEntry>,
}

fn spectra_chart(systems: &[(Resolution, &SingularSystem)]) -> Chart {
    Chart {
        title: "Singular values".into(),
        x_label: "index j".into(),
        y_label: "λ_j".into(),
        log_x: false,
        log_y: true,
        series: systems
            .iter()
            .map(|(r, s)| {
                Series::new(r.label(), s.values().iter().enumerate().map(|(j, v)| ((j + 1) as f64, *v)).collect())
            })
            .collect(),
    }
}

fn partial_sums_chart(c: &Classification) -> Chart {
    let mut series = Vec::new();
    for (res, d, dashed) in [("fine", &c.diagnostics, false), ("coarse", &c.coarse_diagnostics, true)] {
        for (beta, curve) in d.betas.iter().zip(&d.partial_sums) {
            let s = Series::new(
                format!("{res} β={beta}"),
                curve.iter().enumerate().map(|(j, v)| ((j + 1) as f64, *v)).collect(),
            );
            series.push(if dashed { s.dashed() } else { s });
        }
    }
    Chart {
        title: format!("Source-norm partial sums: {} ({:?})", c.functional, c.verdict),
        x_label: "J".into(),
        y_label: "Σ_{j≤J} λ_j^{-2β} r_j²".into(),
        log_x: false,
        log_y: true,
        series,
    }
}

fn generalized(cfg: &RunConfig, r: &Functional, sys: &SingularSystem) -> Result<Vec<GeneralizedEntry>> {
    cfg.gauges
        .iter()
        .map(|g| {
            let gauge = g.build()?;
            Ok(match generalized_fisher_detail(r, sys, gauge.as_ref(), DEFAULT_STARTS, cfg.thresholds.tau_ident) {
                Ok(d) => GeneralizedEntry { gauge: d.gauge, value: Some(d.value), unidentified: d.unidentified, note: None },
                Err(e @ Error::Annihilated) => {
                    GeneralizedEntry { gauge: gauge.name(), value: None, unidentified: false, note: Some(e.to_string()) }
                }
                Err(e) => return Err(e),
            })
        })
        .collect()
}

fn model_checks(cfg: &RunConfig, meshes: &[Mesh; 2]) -> Result<Value> {
    let f = cfg.grids.fine_factor;
    Ok(match &cfg.model {
        ModelConfig::IgMixture(s) => {
            let fine = IgMixtureSpec { alpha: s.alpha.refined(f), beta: s.beta.refined(f), t: s.t.refined(f), ..s.clone() };
            let b = ig_null_direction(&fine, &default_odd_profile)?;
            let null_ratio = IgFactored::new(&fine)?.norm_ratio(&b)?;
            let mut completeness = Vec::new();
            for spec in [s, &fine] {
                let m = ig_operator(spec)?;
                let basis = TangentBasis::new(&symmetric_tangent(&m))?;
                completeness.push(completeness_report(&basis.restrict(&m.op)?, cfg.thresholds.tau_ident)?);
            }
            json!({
                "reflection_error": ig_reflection_error(s)?,
                "null_direction_ratio": null_ratio,
                "symmetric_tangent_completeness": completeness,
            })
        }
        ModelConfig::Wtp(s) => {
            let mut reg = serde_json::Map::new();
            for r in &meshes[0].functionals {
                if let Some(rf) = wtp_representer(&r.name) {
                    reg.insert(r.name.clone(), serde_json::to_value(wtp_regularity(s, &rf)).expect("serializes"));
                }
            }
            json!({ "regularity": reg, "offer_nodes_dropped": [meshes[0].summary().notes, meshes[1].summary().notes] })
        }
        ModelConfig::TriangularRc(s) => {
            let fine = TriangularSpec { pi1: s.pi1.refined(f), delta: s.delta.refined(f), ..s.clone() };
            let m = triangular_functionals(&fine)?;
            let dict = triangular_probe_dictionary(&m, *PROBE_SIZES.last().expect("nonempty"));
            let adj = adjoint(&meshes[1].op);
            let mut probes = serde_json::Map::new();
            for r in &meshes[1].functionals {
                let res = projection_residuals(&adj, &dict, &PROBE_SIZES, &r.representer)?;
                probes.insert(r.name.clone(), json!(res));
            }
            json!({ "probe_sizes": PROBE_SIZES, "projection_residuals": probes })
        }
        _ => Value::Null,
    })
}

fn header(cfg: &RunConfig, command: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("schema".into(), json!(SCHEMA));
    m.insert("command".into(), json!(command));
    m.insert("model".into(), json!(cfg.model.name()));
    m.insert("config".into(), cfg.resolved_json());
    m
}

pub fn cmd_diagnose(cfg: &RunConfig) -> Result<()> {
    if let ModelConfig::Euler(_) = cfg.model {
        return euler_diagnose(cfg);
    }
    let meshes = meshes(cfg)?;
    let systems = [system(&meshes[0].op, cfg)?, system(&meshes[1].op, cfg)?];
    let mut reports = Vec::new();
    for (rc, rf) in meshes[0].functionals.iter().zip(&meshes[1].functionals) {
        let classification = match &cfg.model {
            ModelConfig::Discrete(d) => classify_discrete(&d.p, &d.latent_weights, rf)?,
            _ => classify_pair(rc, rf, &systems[0], &systems[1], &cfg.thresholds)?,
        };
        reports.push(FunctionalReport {
            name: rf.name.clone(),
            value: rf.value(),
            fisher: fisher_information_with(rf, &systems[1], cfg.thresholds.tau_ident)?,
            generalized_fisher: generalized(cfg, rf, &systems[1])?,
            classification,
        });
    }
    let classes: Vec<Classification> = reports.iter().map(|r| r.classification.clone()).collect();
    let mut report = header(cfg, "diagnose");
    report.insert("meshes".into(), json!([meshes[0].summary(), meshes[1].summary()]));
    report.insert(
        "spectra".into(),
        json!([spectrum(Resolution::Coarse, &systems[0]), spectrum(Resolution::Fine, &systems[1])]),
    );
    report.insert("mesh_stable".into(), json!(classes.iter().all(|c| c.mesh_stable)));
    report.insert("functionals".into(), serde_json::to_value(&reports).expect("serializes"));
    report.insert("model_checks".into(), model_checks(cfg, &meshes)?);

    let dir = out_dir(cfg)?;
    write_json(dir, "report.json", &report)?;
    write(dir, "singular_values.csv", &singular_values_csv(&[("coarse", &systems[0]), ("fine", &systems[1])]))?;
    write(dir, "partial_sums.csv", &partial_sums_csv(&classes))?;
    write(
        dir,
        "singular_values.svg",
        &spectra_chart(&[(Resolution::Coarse, &systems[0]), (Resolution::Fine, &systems[1])]).render(),
    )?;
    for c in &classes {
        write(dir, &format!("partial_sums_{}.svg", file_stem(&c.functional)), &partial_sums_chart(c).render())?;
    }
    Ok(())
}

fn euler_specs(cfg: &RunConfig) -> Result<[crate::models::EulerSpec; 2]> {
    let ModelConfig::Euler(e) = &cfg.model else { unreachable!("called for euler models only") };
    if !cfg.functionals.is_empty() {
        return Err(Error::invalid("config: the euler model takes no functionals; θ is estimated directly"));
    }
    let coarse = crra_lognormal_spec(&e.aara, e.theta0, e.n, cfg.seed)?;
    let fine = crra_lognormal_spec(&e.aara, e.theta0, e.n * cfg.grids.fine_factor, cfg.seed)?;
    Ok([coarse, fine])
}

fn euler_diagnose(cfg: &RunConfig) -> Result<()> {
    let ModelConfig::Euler(e) = &cfg.model else { unreachable!() };
    let specs = euler_specs(cfg)?;
    let systems = [full_singular_system(&specs[0].a)?, full_singular_system(&specs[1].a)?];
    let discount = [euler_discount_check(&specs[0])?, euler_discount_check(&specs[1])?];
    let aara = aara_pipeline(&e.aara, Some(&specs[1]))?;
    let mut report = header(cfg, "diagnose");
    report.insert(
        "spectra".into(),
        json!([spectrum(Resolution::Coarse, &systems[0]), spectrum(Resolution::Fine, &systems[1])]),
    );
    report.insert("discount".into(), json!({ "coarse": discount[0], "fine": discount[1] }));
    report.insert("aara".into(), serde_json::to_value(&aara).expect("serializes"));
    let dir = out_dir(cfg)?;
    write_json(dir, "report.json", &report)?;
    write(dir, "singular_values.csv", &singular_values_csv(&[("coarse", &systems[0]), ("fine", &systems[1])]))?;
    write(dir, "partial_sums.csv", &partial_sums_csv(&[]))?;
    write(
        dir,
        "singular_values.svg",
        &spectra_chart(&[(Resolution::Coarse, &systems[0]), (Resolution::Fine, &systems[1])]).render(),
    )?;
    Ok(())
}

/// Observation rows from a CSV file with `dim` numeric columns.
fn read_data(path: &Path, dim: usize) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::invalid(format!("cannot read data file {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = line.split(',').map(|f| f.trim().parse::<f64>()).collect();
        match parsed {
            Ok(row) if row.len() == dim => out.extend(row),
            Ok(row) => {
                return Err(Error::invalid(format!(
                    "data file line {}: {} columns, the observation space has {dim}",
                    i + 1,
                    row.len()
                )))
            }
            Err(_) if i == 0 => continue,
            Err(e) => return Err(Error::invalid(format!("data file line {}: {e}", i + 1))),
        }
    }
    if out.is_empty() {
        return Err(Error::invalid("data file has no observations"));
    }
    Ok(out)
}

#[derive(Serialize)]
struct EstimateEntry {
    functional: String,
    estimate: f64,
    se: f64,
    n: usize,
    outside: usize,
    /// The functional at the model's reference law.
    reference_value: f64,
    residual: f64,
    g_norm: f64,
    irregular: bool,
    truncation: Option<usize>,
    ridge: Option<f64>,
    flags: Vec<String>,
}

pub fn cmd_estimate(cfg: &RunConfig) -> Result<()> {
    if let ModelConfig::Euler(_) = cfg.model {
        return euler_estimate(cfg);
    }
    let mesh = build_mesh(cfg, Resolution::Fine)?;
    if mesh.functionals.is_empty() {
        return Err(Error::invalid("config: estimate needs at least one functional"));
    }
    let sys = system(&mesh.op, cfg)?;
    let dim = mesh.op.codomain().dim();
    let (points, source) = match (&cfg.estimate.data, cfg.estimate.simulate) {
        (Some(path), _) => (read_data(path, dim)?, json!({ "data": path })),
        (None, Some(n)) => (simulate(mesh.op.codomain(), n, cfg.seed)?.points, json!({ "simulated": n, "seed": cfg.seed })),
        (None, None) => return Err(Error::invalid("estimate needs a data file (estimate.data) or --simulate N")),
    };
    let n = points.len() / dim;
    let policy = cfg.regularization.for_sample_size(n);
    let mut entries = Vec::new();
    for r in &mesh.functionals {
        let sol = solve_with_system(&sys, r, &policy).map_err(|e| match e {
            e if e.is_identification() => Error::NotIdentified,
            e => e,
        })?;
        let est = moment_estimate(&sol.g, sol.calibration, &points)?;
        entries.push(EstimateEntry {
            functional: r.name.clone(),
            estimate: est.estimate,
            se: est.se,
            n: est.n,
            outside: est.outside,
            reference_value: r.value(),
            residual: sol.residual,
            g_norm: sol.g_norm,
            irregular: sol.irregular,
            truncation: sol.truncation,
            ridge: sol.ridge,
            flags: sol.flags,
        });
    }
    let mut report = header(cfg, "estimate");
    report.insert("mesh".into(), serde_json::to_value(mesh.summary()).expect("serializes"));
    report.insert("sample".into(), source);
    report.insert("policy".into(), serde_json::to_value(policy).expect("serializes"));
    report.insert("estimates".into(), serde_json::to_value(&entries).expect("serializes"));
    write_json(out_dir(cfg)?, "estimate.json", &report)
}

fn euler_estimate(cfg: &RunConfig) -> Result<()> {
    let specs = euler_specs(cfg)?;
    let rep = euler_discount_check(&specs[0])?;
    let i = rep.selected.ok_or(Error::NotIdentified)?;
    let c = &rep.candidates[i];
    let mut report = header(cfg, "estimate");
    report.insert(
        "estimates".into(),
        json!([{
            "functional": "theta",
            "estimate": c.theta,
            "route": "eigenfunction of the adjoint pricing operator",
            "moment_identity": c.moment,
            "moment_error": c.moment_error,
            "planted": rep.planted_theta,
        }]),
    );
    report.insert("discount".into(), serde_json::to_value(&rep).expect("serializes"));
    write_json(out_dir(cfg)?, "estimate.json", &report)
}

fn selected<'a>(mesh: &'a Mesh, name: &Option<String>) -> Result<&'a Functional> {
    match name {
        Some(n) => mesh.functional(n),
        None => mesh.functionals.first().ok_or_else(|| Error::invalid("config: no functional to run")),
    }
}

fn operator_only(cfg: &RunConfig, command: &str) -> Result<()> {
    if let ModelConfig::Euler(_) = cfg.model {
        return Err(Error::invalid(format!("config: {command} is not available for the euler model")));
    }
    Ok(())
}

pub fn cmd_rates(cfg: &RunConfig) -> Result<()> {
    operator_only(cfg, "rates")?;
    let mesh = build_mesh(cfg, Resolution::Fine)?;
    let r = selected(&mesh, &cfg.rates.functional)?;
    let sys = system(&mesh.op, cfg)?;
    let fit = rate_experiment_with(&mesh.op, &sys, r, &cfg.regularization, &cfg.rates.ns, cfg.rates.reps, cfg.seed)?;

    let mut csv = String::from("n,rmse,bias,regularization\n");
    for k in 0..fit.ns.len() {
        csv.push_str(&format!("{},{:e},{:e},{:e}\n", fit.ns[k], fit.rmse[k], fit.bias[k], fit.regularization[k]));
    }
    let points: Vec<(f64, f64)> = fit.ns.iter().zip(&fit.rmse).map(|(n, e)| (*n as f64, *e)).collect();
    let mut series = vec![Series::new("RMSE", points.clone())];
    let lx: Vec<f64> = points.iter().filter(|p| p.1 > 0.0).map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().filter(|p| p.1 > 0.0).map(|p| p.1.ln()).collect();
    if let Some((slope, _)) = fit_slope(&lx, &ly) {
        let (mx, my) = (lx.iter().sum::<f64>() / lx.len() as f64, ly.iter().sum::<f64>() / ly.len() as f64);
        let line = points.iter().map(|p| (p.0, (my + slope * (p.0.ln() - mx)).exp())).collect();
        series.push(Series::new(format!("fit, slope {slope:.3}"), line).dashed());
    }
    let chart = Chart {
        title: format!("Convergence of the moment estimator: {}", r.name),
        x_label: "n".into(),
        y_label: "RMSE".into(),
        log_x: true,
        log_y: true,
        series,
    };
    let mut report = header(cfg, "rates");
    report.insert("functional".into(), json!(r.name));
    report.insert("fit".into(), serde_json::to_value(&fit).expect("serializes"));
    let dir = out_dir(cfg)?;
    write_json(dir, "rates.json", &report)?;
    write(dir, "rates.csv", &csv)?;
    write(dir, "rates.svg", &chart.render())
}

pub fn cmd_path(cfg: &RunConfig) -> Result<()> {
    operator_only(cfg, "path")?;
    let mesh = build_mesh(cfg, Resolution::Fine)?;
    let r = selected(&mesh, &cfg.path.functional)?;
    let sys = system(&mesh.op, cfg)?;
    let rep = impossibility_path(&sys, r, cfg.path.rho, &cfg.path.ts)?;

    let mut csv = String::from("t,delta_phi,distance,ratio,clip_fraction,generalized_fisher_ratio\n");
    for p in &rep.points {
        csv.push_str(&format!(
            "{:e},{:e},{:e},{:e},{:e},{:e}\n",
            p.t, p.delta_phi, p.distance, p.ratio, p.clip_fraction, p.generalized_fisher_ratio
        ));
    }
    let chart = Chart {
        title: format!("Perturbation path for {} (ρ = {})", r.name, rep.rho),
        x_label: "t".into(),
        y_label: "condition value".into(),
        log_x: true,
        log_y: true,
        series: vec![
            Series::new("|Δφ| / t", rep.points.iter().map(|p| (p.t, p.delta_phi / p.t)).collect()),
            Series::new("dist² / t^(2ρ)", rep.points.iter().map(|p| (p.t, p.ratio)).collect()),
        ],
    };
    let mut report = header(cfg, "path");
    report.insert("functional".into(), json!(r.name));
    report.insert("path".into(), serde_json::to_value(&rep).expect("serializes"));
    let dir = out_dir(cfg)?;
    write_json(dir, "path.json", &report)?;
    write(dir, "path.csv", &csv)?;
    write(dir, "path.svg", &chart.render())
}

pub fn cmd_dump_operator(cfg: &RunConfig) -> Result<()> {
    let ops: Vec<(Resolution, LinOp, Option<MeshSummary>)> = match cfg.model {
        ModelConfig::Euler(_) => {
            let specs = euler_specs(cfg)?;
            vec![(Resolution::Coarse, specs[0].a.clone(), None), (Resolution::Fine, specs[1].a.clone(), None)]
        }
        _ => meshes(cfg)?.into_iter().map(|m| (m.resolution, m.op.clone(), Some(m.summary()))).collect(),
    };
    let dir = out_dir(cfg)?;
    let mut files = Vec::new();
    for (res, op, summary) in &ops {
        let name = format!("operator_{}.idk", res.label());
        let mut buf = Vec::new();
        write_operator(&mut buf, op)?;
        fs::write(dir.join(&name), buf)?;
        files.push(json!({
            "file": name,
            "resolution": res,
            "rows": op.rows(),
            "cols": op.cols(),
            "domain": op.domain().label(),
            "codomain": op.codomain().label(),
            "summary": summary,
        }));
    }
    let mut report = header(cfg, "dump-operator");
    report.insert("operators".into(), json!(files));
    write_json(dir, "operator.json", &report)
}

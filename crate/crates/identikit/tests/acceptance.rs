//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits non-zero if any fails. Select criteria by number with
//! `cargo test --test acceptance -- 2 5`.

use std::time::{Duration, Instant};

use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use identikit::diagnostics::{
    classify_discrete, classify_pair, fisher_information, full_singular_system, generalized_fisher,
    generalized_fisher_detail, last_quarter_growth, plateaus, projection_residuals, source_norm_profile,
    completeness_report, Functional, PowerGauge, Thresholds, Verdict, DEFAULT_STARTS, TAU_IDENT,
};
use identikit::linop::{adjoint, GridFunction, LinOp, TangentBasis, WeightedSpace};
use identikit::mc::{impossibility_path, rate_experiment, simulate};
use identikit::models::{
    aara_pipeline, circle_rc_operator, crra_lognormal_spec, euler_discount_check, harmonic, ig_adjoint_structure_check,
    ig_null_direction, ig_operator, ig_reflection_error, logit_functional, mixed_logit_operator, symmetric_tangent,
    synthetic_operator, triangular_functionals, triangular_probe_dictionary, wtp_functional, wtp_model,
    wtp_regularity, AaraSpec, CircleSpec, Decay, IgFactored, IgMixtureSpec, MixedLogitSpec, SyntheticSpec,
    TriangularSpec, WtpSpec, default_odd_profile,
};
use identikit::models::triangular::triangular_smooth_functional;
use identikit::solvers::{
    deconvolve_multiplicative, forward_convolve, moment_estimate, solve_adjoint_equation, ErrorDensity, LogGrid,
    RegMethod, RegPolicy, Selection,
};

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: usize,
    name: &'static str,
    budget: Option<Duration>,
    run: fn() -> Outcome,
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn random_space(rng: &mut ChaCha8Rng, label: &str, n: usize) -> identikit::linop::Space {
    let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..2.0)).collect();
    let total: f64 = w.iter().sum();
    WeightedSpace::probability(label, 1, (0..n).map(|i| i as f64).collect(), w.iter().map(|x| x / total).collect())
        .unwrap()
}

fn c1_adjoint() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let (n, m) = (rng.gen_range(1..40), rng.gen_range(1..40));
        let dom = random_space(&mut rng, "b", n);
        let cod = random_space(&mut rng, "z", m);
        let op = LinOp::new(&dom, &cod, Mat::from_fn(m, n, |_, _| rng.gen_range(-3.0..3.0))).map_err(e2s)?;
        let b = GridFunction::new(&dom, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).map_err(e2s)?;
        let g = GridFunction::new(&cod, (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect()).map_err(e2s)?;
        let sb = op.apply(&b).map_err(e2s)?;
        let sg = adjoint(&op).apply(&g).map_err(e2s)?;
        let lhs = sb.inner(&g).map_err(e2s)?;
        let rhs = b.inner(&sg).map_err(e2s)?;
        let scale = sb.norm() * g.norm();
        if scale > 0.0 {
            worst = worst.max((lhs - rhs).abs() / scale);
        }
    }
    Ok((worst <= 1e-10, format!("worst relative gap {worst:.2e} over 1000 triples")))
}

fn c2_circle() -> Outcome {
    let op = circle_rc_operator(&CircleSpec::uniform(1024)).map_err(e2s)?;
    let sys = full_singular_system(&op).map_err(e2s)?;
    let lmax = sys.lambda_max();
    let gain = |k: usize, sine: bool| -> Result<f64, String> {
        let h = harmonic(op.domain(), k, sine);
        Ok(op.apply(&h).map_err(e2s)?.norm() / h.norm())
    };
    let mut even_worst = 0.0f64;
    for k in 2..=20 {
        if k % 2 == 0 {
            even_worst = even_worst.max(gain(k, false)?).max(gain(k, true)?);
        }
    }
    let mut products = Vec::new();
    for k in (1..=15).step_by(2) {
        products.push(gain(k, false)?.max(gain(k, true)?) * k as f64);
    }
    let (lo, hi) = products.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(*p), b.max(*p)));
    let spread = hi / lo - 1.0;
    let ok = even_worst <= 1e-8 * lmax && spread <= 0.05;
    Ok((ok, format!("max even/λmax {:.2e}, odd λ_k·k spread {:.2}%", even_worst / lmax, 100.0 * spread)))
}

fn c3_ig() -> Outcome {
    let small = IgMixtureSpec::default_with(40, 20, 60);
    let refl = ig_reflection_error(&small).map_err(e2s)?;

    let big = IgMixtureSpec::default_with(200, 200, 60);
    let b = ig_null_direction(&big, &default_odd_profile).map_err(e2s)?;
    let null_ratio = IgFactored::new(&big).map_err(e2s)?.norm_ratio(&b).map_err(e2s)?;

    let mut ratios = Vec::new();
    for nt in [40, 80] {
        let m = ig_operator(&IgMixtureSpec::default_with(8, 4, nt)).map_err(e2s)?;
        let basis = TangentBasis::new(&symmetric_tangent(&m)).map_err(e2s)?;
        let rep = completeness_report(&basis.restrict(&m.op).map_err(e2s)?, 1e-4).map_err(e2s)?;
        ratios.push(rep.lambda_min / rep.lambda_max);
    }
    let stable = ratios.iter().all(|r| *r > 1e-4) && rel(ratios[0], ratios[1]) < 0.5;

    let m = ig_operator(&small).map_err(e2s)?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut asym = 0.0f64;
    for _ in 0..20 {
        let g = GridFunction::new(m.op.codomain(), (0..m.op.rows()).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .map_err(e2s)?;
        asym = asym.max(ig_adjoint_structure_check(&m, &g).map_err(e2s)?.max_asymmetry);
    }
    let ok = refl <= 1e-10 && null_ratio <= 1e-6 && stable && asym <= 1e-8;
    Ok((
        ok,
        format!(
            "reflection {refl:.1e}, null ‖Sb‖/‖b‖ {null_ratio:.1e}, λmin/λmax {:.2e}/{:.2e}, evenness {asym:.1e}",
            ratios[0], ratios[1]
        ),
    ))
}

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap()).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|k| a[r][k] * x[k]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}

fn c4_fisher() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut qp_worst, mut gen_worst, mut monotone) = (0.0f64, 0.0f64, true);
    for _ in 0..100 {
        let (n, m) = (20, 30);
        let dom = random_space(&mut rng, "b", n);
        let cod = random_space(&mut rng, "z", m);
        let a = Mat::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0));
        let op = LinOp::new(&dom, &cod, a.clone()).map_err(e2s)?;
        let r = Functional::new("r", GridFunction::new(&dom, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).map_err(e2s)?);
        let sys = full_singular_system(&op).map_err(e2s)?;
        let closed = fisher_information(&r, &sys).map_err(e2s)?.value;

        // min bᵀMb subject to ⟨r, b⟩ = 1, M = AᵀW_zA; KKT gives 1 / (cᵀM⁻¹c)
        let (wd, wz) = (dom.weights(), cod.weights());
        let mm: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| (0..m).map(|k| a[(k, i)] * wz[k] * a[(k, j)]).sum()).collect())
            .collect();
        let c: Vec<f64> = r.representer.values().iter().zip(wd).map(|(r, w)| r * w).collect();
        let x = gauss_solve(mm, c.clone());
        let qp = 1.0 / c.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
        qp_worst = qp_worst.max(rel(closed, qp));

        let g1 = generalized_fisher(&r, &sys, &PowerGauge { rho: 1.0 }, DEFAULT_STARTS).map_err(e2s)?;
        gen_worst = gen_worst.max(rel(g1, closed));
        let g15 = generalized_fisher(&r, &sys, &PowerGauge { rho: 1.5 }, DEFAULT_STARTS).map_err(e2s)?;
        let g2 = generalized_fisher(&r, &sys, &PowerGauge { rho: 2.0 }, DEFAULT_STARTS).map_err(e2s)?;
        monotone &= g1 <= g15 * (1.0 + 1e-9) && g15 <= g2 * (1.0 + 1e-9);
    }

    // three modes, exhaustive search over the ball in spherical coordinates
    let (op, r) = synthetic_operator(&SyntheticSpec {
        n: 3,
        singular_values: Decay::Values(vec![1.0, 0.4, 0.1]),
        representer: Decay::Values(vec![0.3, 0.9, 1.6]),
    })
    .map_err(e2s)?;
    let sys = full_singular_system(&op).map_err(e2s)?;
    let rho = 1.5;
    let gf = generalized_fisher_detail(&r, &sys, &PowerGauge { rho }, DEFAULT_STARTS, TAU_IDENT).map_err(e2s)?.value;
    let (lam, rr) = ([1.0f64, 0.4, 0.1], [0.3f64, 0.9, 1.6]);
    let mut best = f64::INFINITY;
    let (nth, nph, nt) = (300, 600, 300);
    for i in 0..nth {
        let th = std::f64::consts::PI * (i as f64 + 0.5) / nth as f64;
        for j in 0..nph {
            let ph = 2.0 * std::f64::consts::PI * j as f64 / nph as f64;
            let u = [th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()];
            let q: f64 = (0..3).map(|k| (lam[k] * u[k]).powi(2)).sum();
            let s: f64 = (0..3).map(|k| rr[k] * u[k]).sum();
            for l in 1..=nt {
                let t = l as f64 / nt as f64;
                let phi = t * s;
                if phi == 0.0 || phi.abs() > 1.0 {
                    continue;
                }
                best = best.min(t * t * q / (phi * phi).powf(rho));
            }
        }
    }
    let grid_gap = rel(gf, best);
    let ok = qp_worst <= 1e-8 && gen_worst <= 1e-6 && monotone && grid_gap <= 0.01;
    Ok((
        ok,
        format!(
            "closed vs QP {qp_worst:.1e}, ρ=1 gap {gen_worst:.1e}, monotone {monotone}, 3-d grid gap {:.2}%",
            100.0 * grid_gap
        ),
    ))
}

fn c5_logit() -> Outcome {
    let coarse = MixedLogitSpec::binary(8, 40);
    let fine = MixedLogitSpec::binary(16, 80);
    let oc = mixed_logit_operator(&coarse).map_err(e2s)?;
    let of = mixed_logit_operator(&fine).map_err(e2s)?;
    let sc = full_singular_system(&oc).map_err(e2s)?;
    let sf = full_singular_system(&of).map_err(e2s)?;
    let t = Thresholds::default();
    let cdf = classify_pair(
        &logit_functional(&coarse, &oc, "cdf_at_0.5").map_err(e2s)?,
        &logit_functional(&fine, &of, "cdf_at_0.5").map_err(e2s)?,
        &sc,
        &sf,
        &t,
    )
    .map_err(e2s)?;
    let mut detail = Vec::new();
    let mut ok = cdf.coarse_verdict != Verdict::Regular && cdf.fine_verdict != Verdict::Regular;
    for d in [&cdf.coarse_diagnostics, &cdf.diagnostics] {
        let c = d.partial_sum_curve(1.0).ok_or("no β = 1 curve")?;
        let growth = last_quarter_growth(c);
        ok &= !plateaus(c, t.delta_conv) && growth > 0.10;
        detail.push(format!("{:.0}%", 100.0 * growth));
    }
    let mut smooth_ok = true;
    for (spec, op, sys) in [(&coarse, &oc, &sc), (&fine, &of, &sf)] {
        let r = logit_functional(spec, op, "choice_prob").map_err(e2s)?;
        let d = source_norm_profile(&r, sys, &[0.0, 1.0]).map_err(e2s)?;
        smooth_ok &= plateaus(d.partial_sum_curve(0.0).ok_or("no β = 0 curve")?, t.delta_conv);
    }
    Ok((
        ok && smooth_ok,
        format!(
            "cdf verdicts {:?}/{:?}, β=1 last-quarter growth {}, smooth β=0 plateau {smooth_ok}",
            cdf.coarse_verdict,
            cdf.fine_verdict,
            detail.join("/")
        ),
    ))
}

const WTP_NS: [usize; 4] = [500, 2000, 8000, 32000];

fn wtp_policy() -> RegPolicy {
    RegPolicy { method: RegMethod::TruncatedSvd, selection: Selection::NoiseLevel { scale: 1.0 } }
}

fn c6_wtp() -> Outcome {
    let m = wtp_model(&WtpSpec::uniform(0.02)).map_err(e2s)?;
    let r = wtp_functional(&m, "mean", &|w| w).map_err(e2s)?;
    let n = 10_000;
    let sol = solve_adjoint_equation(&m.op, &r, &wtp_policy().for_sample_size(n)).map_err(e2s)?;
    let sample = simulate(m.op.codomain(), n, 6).map_err(e2s)?;
    let est = moment_estimate(&sol.g, sol.calibration, &sample.points).map_err(e2s)?;
    let z = (est.estimate - 0.5).abs() / est.se;

    let fit = rate_experiment(&m.op, &r, &wtp_policy(), &WTP_NS, 200, 60).map_err(e2s)?;
    let slope = fit.slope.ok_or("no slope")?;

    let vspec = WtpSpec::vanishing(0.01);
    let vm = wtp_model(&vspec).map_err(e2s)?;
    let vr = wtp_functional(&vm, "mean", &|w| w).map_err(e2s)?;
    let vfit = rate_experiment(&vm.op, &vr, &wtp_policy(), &WTP_NS, 200, 61).map_err(e2s)?;
    let vslope = vfit.slope.ok_or("no slope")?;
    let reg = wtp_regularity(&vspec, &|w| w);

    let ok = z <= 3.0 && (slope + 0.5).abs() <= 0.1 && vslope > -0.4 && reg.divergent;
    Ok((
        ok,
        format!(
            "estimate {:.4} ({z:.2} SE), slope {slope:.3}, vanishing slope {vslope:.3}, regularity {:?}",
            est.estimate, reg.values
        ),
    ))
}

fn c7_euler() -> Outcome {
    let spec = crra_lognormal_spec(&AaraSpec::default(), 0.95, 40, 7).map_err(e2s)?;
    let rep = euler_discount_check(&spec).map_err(e2s)?;
    let i = rep.selected.ok_or("no identified candidate")?;
    let c = &rep.candidates[i];
    let theta_err = (c.theta - 0.95).abs();
    let moment_err = c.moment_error.ok_or("no moment")?;
    let bad = euler_discount_check(&spec.orthogonalized().map_err(e2s)?).map_err(e2s)?;
    let flagged = bad.selected.is_none() && bad.candidates.iter().all(|c| !c.identified);
    Ok((
        theta_err <= 1e-6 && moment_err <= 1e-6 && flagged,
        format!("θ error {theta_err:.1e}, E[η₀g] − θ₀ {moment_err:.1e}, orthogonal case flagged {flagged}"),
    ))
}

fn core_rel_l2(taus: &[f64], core: (f64, f64), got: &[f64], want: impl Fn(f64) -> f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (t, g) in taus.iter().zip(got) {
        if *t < core.0 || *t > core.1 {
            continue;
        }
        let w = want(*t);
        num += (g - w).powi(2);
        den += w * w;
    }
    (num / den).sqrt()
}

fn c8_deconvolution() -> Outcome {
    let aara = AaraSpec::default();
    let err = ErrorDensity::LogNormal { sigma: 0.2 };
    let grid = LogGrid::for_lognormal(aara.mu, aara.s, 0.2, 4096);
    let input = |c: f64| c * aara.r_chi(c);
    let dec = deconvolve_multiplicative(&input, &err, &grid).map_err(e2s)?;
    let taus = grid.nodes();
    let round = core_rel_l2(&taus, dec.core, &forward_convolve(&dec, &err), |t| input(t.exp()));

    let narrow = ErrorDensity::LogNormal { sigma: 1e-3 };
    let ngrid = LogGrid::for_lognormal(aara.mu, aara.s, 1e-3, 4096);
    let nd = deconvolve_multiplicative(&|c| aara.r_chi(c), &narrow, &ngrid).map_err(e2s)?;
    let delta = core_rel_l2(&ngrid.nodes(), nd.core, nd.y(), |t| aara.r_chi(t.exp()) / t.exp());

    let pipe = aara_pipeline(&aara, None).map_err(e2s)?;
    let ok = round <= 1e-3 && delta <= 1e-3 && pipe.pipeline_rel_error <= 1e-3;
    Ok((
        ok,
        format!("round trip {round:.1e}, delta limit {delta:.1e}, AARA vs oracle {:.1e}", pipe.pipeline_rel_error),
    ))
}

fn c9_discrete() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut regular, mut unidentified, mut irregular) = (0, 0, 0);
    for _ in 0..100 {
        let (m, n) = (rng.gen_range(2..6), rng.gen_range(6..10));
        let mut p = vec![vec![0.0; n]; m];
        for k in 0..n {
            let col: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
            let s: f64 = col.iter().sum();
            for j in 0..m {
                p[j][k] = col[j] / s;
            }
        }
        let q: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..1.0)).collect();
        let qs: f64 = q.iter().sum();
        let latent = WeightedSpace::probability("z*", 1, (0..n).map(|i| i as f64).collect(), q.iter().map(|x| x / qs).collect())
            .map_err(e2s)?;
        // span construction: r = E[g(Z) | Z*]
        let g: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let span: Vec<f64> = (0..n).map(|k| (0..m).map(|j| g[j] * p[j][k]).sum()).collect();
        // perturbation: add a direction orthogonal to every row of p
        let rows: Vec<GridFunction> = p.iter().map(|row| GridFunction::new(&latent, row.clone()).unwrap()).collect();
        let mut v = GridFunction::new(&latent, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).map_err(e2s)?;
        let mut ortho: Vec<GridFunction> = Vec::new();
        for row in &rows {
            let mut u = row.clone();
            for o in &ortho {
                u = u.combine(1.0, o, -u.inner(o).map_err(e2s)?).map_err(e2s)?;
            }
            let nu = u.norm();
            if nu > 1e-10 {
                ortho.push(u.scaled(1.0 / nu));
            }
        }
        for o in &ortho {
            v = v.combine(1.0, o, -v.inner(o).map_err(e2s)?).map_err(e2s)?;
        }
        let sg = GridFunction::new(&latent, span.clone()).map_err(e2s)?;
        let pert = sg.combine(1.0, &v, 0.5 * sg.centered().norm().max(0.1) / v.norm()).map_err(e2s)?;
        let a = classify_discrete(&p, &q, &Functional::new("span", sg)).map_err(e2s)?;
        let b = classify_discrete(&p, &q, &Functional::new("perturbed", pert)).map_err(e2s)?;
        for v in [a.verdict, b.verdict] {
            if v == Verdict::Irregular {
                irregular += 1;
            }
        }
        regular += (a.verdict == Verdict::Regular) as usize;
        unidentified += (b.verdict == Verdict::Unidentified) as usize;
    }
    Ok((
        irregular == 0 && regular == 100 && unidentified == 100,
        format!("span→Regular {regular}/100, perturbed→Unidentified {unidentified}/100, Irregular {irregular}"),
    ))
}

fn c10_triangular() -> Outcome {
    let sizes = [4, 32];
    let m = triangular_functionals(&TriangularSpec::straddling(24)).map_err(e2s)?;
    let adj = adjoint(&m.op);
    let dict = triangular_probe_dictionary(&m, 32);
    let pp = projection_residuals(&adj, &dict, &sizes, &m.ppame.representer).map_err(e2s)?;
    let sm = projection_residuals(&adj, &dict, &sizes, &triangular_smooth_functional(&m).representer).map_err(e2s)?;
    let mono = triangular_functionals(&TriangularSpec::monotone(24)).map_err(e2s)?;
    let mdict = triangular_probe_dictionary(&mono, 32);
    let ame = projection_residuals(&adjoint(&mono.op), &mdict, &sizes, &mono.ame.representer).map_err(e2s)?;
    // a floor: the 8× larger dictionary removes less than 90% of the residual
    let floor = pp[1] > 0.1 * pp[0];
    let ok = floor && sm[1] * 10.0 <= sm[0] && ame[1] * 10.0 <= ame[0];
    Ok((
        ok,
        format!(
            "PPAME {:.3}→{:.3}, smooth {:.1e}→{:.1e}, monotone AME {:.1e}→{:.1e}",
            pp[0], pp[1], sm[0], sm[1], ame[0], ame[1]
        ),
    ))
}

fn c11_path() -> Outcome {
    let ts = [0.05, 0.1, 0.2, 0.4];
    let mut worst = 0.0f64;
    let mut cross = true;
    for n in 2..=10 {
        for rho in [1.0, 1.5, 2.0] {
            let (op, r) = synthetic_operator(&SyntheticSpec {
                n,
                singular_values: Decay::Power(2.0),
                representer: Decay::Power(1.0),
            })
            .map_err(e2s)?;
            let sys = full_singular_system(&op).map_err(e2s)?;
            let rep = impossibility_path(&sys, &r, rho, &ts).map_err(e2s)?;
            // the last mode J = n: λ_J = n⁻², r_J = n⁻¹, b_t = t·n·e_J
            let (lj, rj) = ((n as f64).powi(-2), 1.0 / n as f64);
            for p in &rep.points {
                worst = worst.max((p.delta_phi - p.t).abs());
                worst = worst.max((p.distance - p.t * lj / rj).abs());
                worst = worst.max(rel(p.ratio, (p.t * lj / rj).powi(2) / p.t.powf(2.0 * rho)));
            }
            let eps = ts.iter().map(|t| (lj / rj).powi(2) * t.powf(2.0 - 2.0 * rho)).fold(0.0, f64::max);
            worst = worst.max(rel(rep.epsilon.ok_or("no ε")?, eps));
            worst = worst.max((rep.c.ok_or("no C")? - 1.0).abs());
            worst = worst.max((rep.rho_star.ok_or("no ρ*")? - 1.0).abs());
            worst = worst.max((rep.mode_exponent.ok_or("no exponent")? - 2.0).abs());
            cross &= rep.cross_check_holds;
        }
    }
    Ok((worst <= 1e-8 && cross, format!("worst deviation {worst:.1e}, generalized-Fisher cross-check {cross}")))
}

const DETERMINISM_CONFIGS: [(&str, &str); 2] = [
    (
        "circle",
        r#"{"schema": "identikit/1", "model": {"type": "circle_rc", "n": 16},
            "functionals": ["sin3", "half_arc"],
            "estimate": {"simulate": 3000},
            "rates": {"ns": [200, 800, 3200], "reps": 30},
            "path": {"rho": 1.0, "ts": [0.0025, 0.005, 0.01, 0.02], "functional": "half_arc"},
            "seed": 42}"#,
    ),
    (
        "discrete",
        r#"{"schema": "identikit/1",
            "model": {"type": "discrete", "p": [[0.7, 0.2, 0.1], [0.2, 0.6, 0.2], [0.1, 0.2, 0.7]],
                      "latent_weights": [0.3, 0.4, 0.3]},
            "functionals": [{"name": "first", "coarse": [1, 0, 0]}],
            "estimate": {"simulate": 500},
            "rates": {"ns": [100, 400, 1600], "reps": 20},
            "seed": 9}"#,
    ),
];

fn snapshot(dir: &std::path::Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for e in std::fs::read_dir(dir).map_err(e2s)? {
        let path = e.map_err(e2s)?.path();
        let name = path.file_name().unwrap().to_string_lossy().to_string();
        if name.ends_with(".json") || name.ends_with(".csv") {
            files.push((name, std::fs::read(&path).map_err(e2s)?));
        }
    }
    files.sort();
    Ok(files)
}

fn c12_determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_identikit");
    let tmp = tempfile::tempdir().map_err(e2s)?;
    let mut compared = 0;
    let mut mismatches = Vec::new();
    for (name, text) in DETERMINISM_CONFIGS {
        let cfg = tmp.path().join(format!("{name}.json"));
        std::fs::write(&cfg, text).map_err(e2s)?;
        let commands: &[&str] = if name == "discrete" {
            &["diagnose", "estimate", "rates", "dump-operator"]
        } else {
            &["diagnose", "estimate", "rates", "path", "dump-operator"]
        };
        for cmd in commands {
            let out = tmp.path().join(format!("{name}-{cmd}"));
            let mut runs = Vec::new();
            for threads in ["1", "2"] {
                let status = std::process::Command::new(bin)
                    .args([*cmd, "--config"])
                    .arg(&cfg)
                    .arg("--out")
                    .arg(&out)
                    .args(["--threads", threads])
                    .output()
                    .map_err(e2s)?;
                if !status.status.success() {
                    return Ok((
                        false,
                        format!("{name} {cmd} exited {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)),
                    ));
                }
                runs.push(snapshot(&out)?);
                std::fs::remove_dir_all(&out).map_err(e2s)?;
            }
            if runs[0].is_empty() {
                return Ok((false, format!("{name} {cmd} wrote no JSON/CSV")));
            }
            compared += runs[0].len();
            if runs[0] != runs[1] {
                mismatches.push(format!("{name} {cmd}"));
            }
        }
    }
    let ok = mismatches.is_empty();
    Ok((ok, format!("{compared} JSON/CSV files compared across repeated runs, mismatches: {mismatches:?}")))
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "adjoint identity", budget: Some(Duration::from_secs(10)), run: c1_adjoint },
        Criterion { id: 2, name: "circle spectral oracle", budget: Some(Duration::from_secs(60)), run: c2_circle },
        Criterion { id: 3, name: "inverse-Gaussian mixture", budget: Some(Duration::from_secs(300)), run: c3_ig },
        Criterion { id: 4, name: "Fisher information", budget: None, run: c4_fisher },
        Criterion { id: 5, name: "mixed logit classification", budget: Some(Duration::from_secs(180)), run: c5_logit },
        Criterion { id: 6, name: "willingness to pay", budget: Some(Duration::from_secs(600)), run: c6_wtp },
        Criterion { id: 7, name: "Euler discount", budget: None, run: c7_euler },
        Criterion { id: 8, name: "multiplicative deconvolution", budget: None, run: c8_deconvolution },
        Criterion { id: 9, name: "discrete classifier", budget: None, run: c9_discrete },
        Criterion { id: 10, name: "triangular smoothness probes", budget: None, run: c10_triangular },
        Criterion { id: 11, name: "impossibility path", budget: None, run: c11_path },
        Criterion { id: 12, name: "CLI determinism", budget: None, run: c12_determinism },
    ];
    let wanted: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let took = start.elapsed();
        let (mut ok, detail) = match outcome {
            Ok(x) => x,
            Err(e) => (false, format!("error: {e}")),
        };
        let mut timing = format!("{:.1}s", took.as_secs_f64());
        if let Some(b) = c.budget {
            if took > b {
                ok = false;
                timing.push_str(&format!(" over {}s budget", b.as_secs()));
            }
        }
        failed += !ok as usize;
        println!("[{}] {:>2}. {}: {} ({timing})", if ok { "PASS" } else { "FAIL" }, c.id, c.name, detail);
    }
    if failed > 0 {
        println!("{failed} criterion/criteria failed");
        std::process::exit(1);
    }
}

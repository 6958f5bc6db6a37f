//! Subcommand implementations. Each returns its artifacts in memory; the
//! runner writes them.

use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fockspace::dbar::{
    calibration_probes, hankel_via_dbar, DbarSolver, GaussianPotential, KernelSpan, PolarGrid, SolverOptions,
    CALIBRATION_TOL,
};
use fockspace::decomposition::{decompose, verify_controls, Decomposition, PartitionOfUnity};
use fockspace::fock::{
    fit_kernel_estimates, kernel_truncation_error, normalized_log_kernel, upper_bound_holds, FockBasis, KernelEval,
    KernelMode,
};
use fockspace::hankel::{
    build_hankel_gram, berezin_domination, compact_approximant, essential_norm_tail, gram_rule,
    schatten_h_criterion, schatten_sum, singular_spectrum, smooth_cutoff, EssentialTail, GaugeFamily, KernelProbe,
    MeasureModel, SchattenGauge, SingularSpectrum,
};
use fockspace::lattice::{Lattice, Window};
use fockspace::oscillation::{ida_norm, mean_oscillation_profile, vda_profile, RadialProfile};
use fockspace::quadrature::PlaneRule;
use fockspace::symbols::Symbol;
use fockspace::weight::{certify_weight, finite_difference_check, WeightModel};
use fockspace::hankel::kz_profile;
use fockspace::Cplx;

use crate::config::ExperimentConfig;
use crate::output::{flag, num, Table};
use crate::reports;

pub type C = Cplx<f64>;

pub const SUBCOMMANDS: [&str; 18] = [
    "certify-weight",
    "build-basis",
    "kernel-fit",
    "lattice",
    "g-profile",
    "m-profile",
    "ida-norm",
    "decompose",
    "dbar-check",
    "hankel-svd",
    "kz-profile",
    "essential-norm",
    "compact-approx",
    "schatten",
    "berezin",
    "thm11-report",
    "thm12-report",
    "thm13-report",
];

/// Artifacts of one subcommand.
#[derive(Debug, Default)]
pub struct Outcome {
    /// `(file name, body)` in write order.
    pub files: Vec<(String, String)>,
    pub c0: Option<C>,
    pub stages: Vec<(String, Duration)>,
}

impl Outcome {
    pub fn table(&mut self, name: &str, t: &Table) {
        self.files.push((name.to_string(), t.render()));
    }

    pub fn text(&mut self, name: &str, body: String) {
        self.files.push((name.to_string(), body));
    }

    pub fn timed<R>(&mut self, stage: &str, f: impl FnOnce() -> R) -> R {
        let t0 = Instant::now();
        let out = f();
        self.stages.push((stage.to_string(), t0.elapsed()));
        out
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_str())
    }
}

pub fn execute(sub: &str, cfg: &ExperimentConfig, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::default();
    let run = |out: &mut Outcome| -> Result<()> {
        match sub {
            "certify-weight" => certify_weight_cmd(cfg, seed, out),
            "build-basis" => build_basis(cfg, out),
            "kernel-fit" => kernel_fit(cfg, seed, out),
            "lattice" => lattice_cmd(cfg, out),
            "g-profile" | "m-profile" | "kz-profile" => profile_cmd(sub, cfg, out),
            "ida-norm" => ida_norm_cmd(cfg, out),
            "decompose" => decompose_cmd(cfg, out),
            "dbar-check" => dbar_check(cfg, seed, out),
            "hankel-svd" | "essential-norm" => spectrum_cmd(sub, cfg, out),
            "compact-approx" => compact_approx(cfg, out),
            "schatten" => schatten_cmd(cfg, out),
            "berezin" => berezin_cmd(cfg, seed, out),
            "thm11-report" => reports::thm11_cmd(cfg, out),
            "thm12-report" => reports::thm12_cmd(cfg, out),
            "thm13-report" => reports::thm13_cmd(cfg, out),
            other => bail!("unknown subcommand `{other}`; expected one of {}", SUBCOMMANDS.join(", ")),
        }
    };
    run(&mut out).with_context(|| format!("{sub} failed"))?;
    Ok(out)
}

pub fn weight(cfg: &ExperimentConfig) -> Result<WeightModel<f64>> {
    let alpha = cfg.real("weight.alpha");
    let w = match cfg.text("weight.kind") {
        "gaussian" => WeightModel::gaussian(alpha),
        _ => WeightModel::perturbed_gaussian(
            alpha,
            cfg.real("weight.amplitude"),
            cfg.real("weight.m"),
            cfg.real("weight.M"),
        ),
    };
    w.context("building the weight")
}

pub fn symbol(cfg: &ExperimentConfig, id: &str) -> Result<Symbol<f64>> {
    let param = |k: &str| match k {
        "radius" => Some(cfg.real("symbol.radius")),
        "beta" => Some(cfg.real("symbol.beta")),
        _ => None,
    };
    Symbol::make(id, param, &cfg.points("symbol.coeffs")).with_context(|| format!("building symbol `{id}`"))
}

/// Plane rule for Gram assembly; `quad.plane_order` and `quad.r_cut`
/// override the derived order and cut when nonzero.
pub fn gram_plane_rule(
    cfg: &ExperimentConfig,
    w: &WeightModel<f64>,
    degree: usize,
    margin: usize,
    f: &Symbol<f64>,
    extra_breaks: &[f64],
) -> Result<PlaneRule<f64>> {
    let order = match cfg.count("quad.plane_order") {
        0 => gram_rule(w, degree, margin, f)?.order(),
        n => n,
    };
    let mut breaks = f.radial_breaks().to_vec();
    breaks.extend_from_slice(extra_breaks);
    Ok(PlaneRule::with_cut(order, w.lower_bound(), &breaks, cfg.real("quad.r_cut"))?)
}

fn basis_rule(cfg: &ExperimentConfig, w: &WeightModel<f64>, degree: usize) -> Result<PlaneRule<f64>> {
    let order = match cfg.count("quad.plane_order") {
        0 => 2 * degree + 4,
        n => n,
    };
    Ok(PlaneRule::with_cut(order, w.lower_bound(), &[], cfg.real("quad.r_cut"))?)
}

pub fn lattice(cfg: &ExperimentConfig) -> Result<Lattice<f64>> {
    let [a, b, c, d] = cfg.window("lattice.window");
    let win = Window::new(a, b, c, d)?;
    Lattice::build_in(vec![cfg.point("lattice.w1")], cfg.real("lattice.r"), win, cfg.count("lattice.cap"))
        .context("building the lattice")
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform samples from the disc `|z| ≤ radius`.
pub fn random_disc(rng: &mut ChaCha8Rng, radius: f64, n: usize) -> Vec<C> {
    (0..n)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let th = std::f64::consts::TAU * rng.gen::<f64>();
            C::from_polar(r, th)
        })
        .collect()
}

fn nan() -> String {
    "nan".into()
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(nan, num)
}

fn certify_weight_cmd(cfg: &ExperimentConfig, seed: u64, out: &mut Outcome) -> Result<()> {
    let w = weight(cfg)?;
    let mut probes = vec![C::new(0.0, 0.0)];
    probes.extend(random_disc(&mut rng(seed), cfg.real("probe.radius"), cfg.count("probe.count")));
    let rep = out.timed("certify", || certify_weight(&w, &probes, cfg.real("weight.tol")))?;
    let mut t = Table::new(&["re", "im", "eig_min", "eig_max", "fd_deviation"]);
    for p in &rep.probes {
        let fd = finite_difference_check(&w, p.point, 1e-4)?;
        t.push(vec![num(p.point.re), num(p.point.im), num(p.min), num(p.max), num(fd)]);
    }
    out.table("probes.csv", &t);
    let mut s = Table::new(&["passed", "worst_violation", "eigen_min", "eigen_max", "declared_m", "declared_M"]);
    s.push(vec![
        flag(rep.passed),
        num(rep.worst_violation),
        num(rep.eigen_min),
        num(rep.eigen_max),
        num(w.lower_bound()),
        num(w.upper_bound()),
    ]);
    out.table("summary.csv", &s);
    Ok(())
}

fn factorial_ratio(k: usize, alpha: f64) -> f64 {
    // π k! / α^{k+1}
    (1..=k).fold(std::f64::consts::PI / alpha, |acc, j| acc * j as f64 / alpha)
}

fn build_basis(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let w = weight(cfg)?;
    let d = cfg.count("basis.degree");
    let rule = basis_rule(cfg, &w, d)?;
    let basis = out.timed("basis", || FockBasis::build(&w, d, &rule))?;
    let alpha = w.gaussian_alpha();
    let mut t = Table::new(&["k", "norm_sq", "closed_form", "rel_error"]);
    for (k, ck) in basis.norms().iter().enumerate() {
        let sq = ck * ck;
        let (want, rel) = match alpha {
            Some(a) => {
                let want = factorial_ratio(k, a);
                (num(want), num((sq - want).abs() / want))
            }
            None => (nan(), nan()),
        };
        t.push(vec![k.to_string(), num(sq), want, rel]);
    }
    out.table("basis.csv", &t);
    let trunc = match alpha {
        Some(_) => num(kernel_truncation_error(&basis, cfg.real("probe.radius"))?),
        None => nan(),
    };
    let mut s = Table::new(&["degree", "rule_order", "r_cut", "gram_defect", "kernel_truncation_error"]);
    s.push(vec![
        d.to_string(),
        rule.order().to_string(),
        num(rule.r_cut()),
        num(basis.gram_defect(&rule)),
        trunc,
    ]);
    out.table("summary.csv", &s);
    Ok(())
}

fn kernel_eval(cfg: &ExperimentConfig, w: &WeightModel<f64>) -> Result<KernelEval<f64>> {
    let d = cfg.count("basis.degree");
    let basis = FockBasis::build(w, d, &basis_rule(cfg, w, d)?)?;
    let mode = if w.gaussian_alpha().is_some() {
        KernelMode::ClosedFormGaussian
    } else {
        KernelMode::BasisSum
    };
    Ok(KernelEval::new(basis, mode)?)
}

fn kernel_fit(cfg: &ExperimentConfig, seed: u64, out: &mut Outcome) -> Result<()> {
    let w = weight(cfg)?;
    let k = kernel_eval(cfg, &w)?;
    let mut g = rng(seed);
    let n = cfg.count("probe.count");
    let zs = random_disc(&mut g, cfg.real("probe.radius"), n);
    let offsets = random_disc(&mut g, 2.0, n);
    let pairs: Vec<(C, C)> = zs.iter().zip(&offsets).map(|(z, o)| (*z, *z + *o)).collect();
    let est = out.timed("fit", || fit_kernel_estimates(&k, &pairs))?;
    let holds = upper_bound_holds(&k, &pairs, est.theta, est.c1);
    let mut t = Table::new(&["theta", "c1", "c2", "r0", "fit_residual", "upper_bound_holds"]);
    t.push(vec![num(est.theta), num(est.c1), num(est.c2), num(est.r0), num(est.fit_residual), flag(holds)]);
    out.table("estimates.csv", &t);
    let mut lb = Table::new(&["r0", "c2"]);
    for (r0, c2) in &est.lower_bound_table {
        lb.push(vec![num(*r0), num(*c2)]);
    }
    out.table("lower_bound.csv", &lb);
    let mut p = Table::new(&["z_re", "z_im", "w_re", "w_im", "distance", "normalized_log_kernel"]);
    for (z, x) in &pairs {
        p.push(vec![
            num(z.re),
            num(z.im),
            num(x.re),
            num(x.im),
            num((*z - *x).norm()),
            num(normalized_log_kernel(&k, *z, *x)),
        ]);
    }
    out.table("pairs.csv", &p);
    Ok(())
}

fn lattice_cmd(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let l = out.timed("lattice", || lattice(cfg))?;
    let k = cfg.count("lattice.K");
    let pts = l.planar_points()?;
    let mut t = Table::new(&["index", "re", "im", "sublattice_id"]);
    for (i, z) in pts.iter().enumerate() {
        t.push(vec![i.to_string(), num(z.re), num(z.im), l.sublattice_id(i, k).to_string()]);
    }
    out.table("points.csv", &t);
    let mut s = Table::new(&["count", "step", "cell_volume", "min_separation", "K", "sublattices"]);
    s.push(vec![
        l.len().to_string(),
        num(l.step()),
        num(l.cell_volume()),
        num(l.min_separation()),
        k.to_string(),
        l.split_sublattices(k)?.len().to_string(),
    ]);
    out.table("summary.csv", &s);
    Ok(())
}

pub fn profile_table(p: &RadialProfile<f64>) -> Table {
    let mut t = Table::new(&["re", "im", "shell_radius", "value", "functional_id", "r", "q", "d"]);
    for ((z, s), v) in p.points.iter().zip(&p.shell_of).zip(&p.values) {
        t.push(vec![
            num(z.re),
            num(z.im),
            num(*s),
            num(*v),
            p.functional.id().to_string(),
            num(p.r),
            num(p.q),
            p.d.to_string(),
        ]);
    }
    t
}

fn shell_table(p: &RadialProfile<f64>) -> Table {
    let mut t = Table::new(&["shell_radius", "shell_max"]);
    for (s, m) in p.shells.iter().zip(&p.shell_max) {
        t.push(vec![num(*s), num(*m)]);
    }
    t
}

fn profile_cmd(sub: &str, cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let f = symbol(cfg, cfg.text("symbol.family"))?;
    let (q, r, d) = (cfg.real("functional.q"), cfg.real("functional.r"), cfg.count("functional.d"));
    let shells = cfg.reals("functional.shells");
    let per = cfg.count("functional.per_shell");
    let order = cfg.count("quad.ball_order");
    let p = match sub {
        "g-profile" => out.timed("profile", || vda_profile(&f, q, r, d, &shells, per, order))?,
        "m-profile" => out.timed("profile", || mean_oscillation_profile(&f, q, r, &shells, per, order))?,
        _ => {
            let w = weight(cfg)?;
            let rmax = shells.last().copied().unwrap_or(0.0);
            let probe = KernelProbe::covering(&w, rmax, cfg.count("basis.margin"), f.radial_breaks())?;
            out.timed("profile", || kz_profile(&f, q, &shells, per, &probe))?
        }
    };
    out.table("profile.csv", &profile_table(&p));
    out.table("shells.csv", &shell_table(&p));
    Ok(())
}

fn ida_norm_cmd(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let f = symbol(cfg, cfg.text("symbol.family"))?;
    let l = lattice(cfg)?;
    let s = cfg.real_or_inf("functional.s");
    let rep = out.timed("ida", || {
        ida_norm(
            &f,
            s,
            cfg.real("functional.q"),
            cfg.real("functional.r"),
            &l,
            cfg.count("functional.d"),
            cfg.count("quad.ball_order"),
        )
    })?;
    let mut t = Table::new(&["re", "im", "value"]);
    for (z, v) in l.planar_points()?.iter().zip(&rep.samples) {
        t.push(vec![num(z.re), num(z.im), num(*v)]);
    }
    out.table("samples.csv", &t);
    let mut sm = Table::new(&["s", "value", "boundary_fraction", "window_warning", "points"]);
    sm.push(vec![
        s.map_or_else(|| "inf".to_string(), num),
        num(rep.value),
        num(rep.boundary_fraction),
        flag(rep.window_warning),
        rep.samples.len().to_string(),
    ]);
    out.table("summary.csv", &sm);
    Ok(())
}

/// Decomposition of `f` on the configured lattice; probes must sit far
/// enough inside the window that every bump touching their balls exists.
pub fn decomposition_for(
    f: &Symbol<f64>,
    l: Lattice<f64>,
    q: f64,
    d: usize,
    order: usize,
) -> Result<Decomposition<f64>> {
    let part = PartitionOfUnity::build(l)?;
    Ok(decompose(f, part, q, d, order)?)
}

fn decompose_cmd(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let f = symbol(cfg, cfg.text("symbol.family"))?;
    let l = lattice(cfg)?;
    let (q, r, d) = (cfg.real("functional.q"), cfg.real("functional.r"), cfg.count("functional.d"));
    let order = cfg.count("quad.ball_order");
    let (probes, _) = fockspace::oscillation::shell_points(&cfg.reals("functional.shells"), cfg.count("functional.per_shell"));
    let margin = 2.0 * l.r() + r;
    let dec = out.timed("decompose", || decomposition_for(&f, l, q, d, order))?;
    if let Some(z) = probes.iter().find(|z| !dec.partition().in_interior(**z, margin)) {
        bail!(
            "probe ({}, {}) lies within {margin} of the lattice window edge; enlarge lattice.window",
            z.re,
            z.im
        );
    }
    let rep = out.timed("controls", || verify_controls(&dec, &probes, r, d, order))?;
    let mut t = Table::new(&[
        "re", "im", "f_re", "f_im", "f1_re", "f1_im", "f2_re", "f2_im", "dbar_f1_re", "dbar_f1_im", "m_f2", "g",
        "ratio_dbar", "ratio_m",
    ]);
    let mut additivity = 0.0f64;
    for row in &rep.rows {
        additivity = additivity.max((row.f1 + row.f2 - row.f).norm());
        t.push(vec![
            num(row.z.re),
            num(row.z.im),
            num(row.f.re),
            num(row.f.im),
            num(row.f1.re),
            num(row.f1.im),
            num(row.f2.re),
            num(row.f2.im),
            num(row.dbar_f1.re),
            num(row.dbar_f1.im),
            num(row.m_f2),
            num(row.g),
            opt(row.ratio_dbar),
            opt(row.ratio_m),
        ]);
    }
    out.table("controls.csv", &t);
    let mut s = Table::new(&["sup_dbar_f1", "sup_m_f2", "max_ratio_dbar", "max_ratio_m", "growth_flag", "additivity_error"]);
    s.push(vec![
        num(rep.sup_dbar_f1),
        num(rep.sup_m_f2),
        num(rep.max_ratio_dbar),
        num(rep.max_ratio_m),
        flag(rep.growth_flag),
        num(additivity),
    ]);
    out.table("summary.csv", &s);
    Ok(())
}

pub fn solver_options(cfg: &ExperimentConfig) -> SolverOptions<f64> {
    SolverOptions {
        rho0: cfg.real("dbar.rho0"),
        panel_points: cfg.count("dbar.panel_points"),
        efolds: cfg.real("dbar.efolds"),
        refine: cfg.real("dbar.refine"),
    }
}

/// Kernel-span inputs for the ∂̄ identity check.
pub fn identity_spans(alpha: f64) -> Result<Vec<(&'static str, KernelSpan<f64>)>> {
    Ok(vec![
        ("k0", KernelSpan::new(alpha, vec![C::new(0.0, 0.0)], vec![C::new(1.0, 0.0)])?),
        ("k1", KernelSpan::new(alpha, vec![C::new(0.5, -0.5)], vec![C::new(0.0, 1.0)])?),
        (
            "k0+k1",
            KernelSpan::new(alpha, vec![C::new(0.0, 0.0), C::new(0.5, -0.5)], vec![C::new(1.0, 0.0), C::new(0.0, 1.0)])?,
        ),
    ])
}

fn dbar_check(cfg: &ExperimentConfig, seed: u64, out: &mut Outcome) -> Result<()> {
    let w = weight(cfg)?;
    let mut solver = DbarSolver::new(&w)?.with_options(solver_options(cfg));
    let family = GaussianPotential::default_family();
    let cal = out.timed("calibrate", || solver.calibrate(&family, &calibration_probes()))?;
    out.c0 = Some(cal.c0);
    let mut ct = Table::new(&["c0_re", "c0_im", "residual", "passing"]);
    for cr in &cal.candidates {
        ct.push(vec![num(cr.c0.re), num(cr.c0.im), num(cr.residual), flag(cr.residual < CALIBRATION_TOL)]);
    }
    out.table("calibration.csv", &ct);

    let probes = random_disc(&mut rng(seed), cfg.real("probe.radius"), cfg.count("probe.count"));
    let mut rt = Table::new(&["form", "re", "im", "error", "w"]);
    let mut lt = Table::new(&["form", "p", "solution_norm", "form_norm", "ratio"]);
    let lp_rule = PlaneRule::gaussian(
        match cfg.count("quad.plane_order") {
            0 => 12,
            n => n,
        },
        w.lower_bound(),
    )?;
    let t0 = Instant::now();
    for (i, pot) in family.iter().enumerate() {
        let form = pot.form();
        let sol = solver.solve(&form, &probes)?;
        for row in &sol.rows {
            rt.push(vec![i.to_string(), num(row.z.re), num(row.z.im), num(row.error), num(row.w)]);
        }
        let lp = solver.verify_lp_bound(&form, cfg.real("dbar.p"), &lp_rule)?;
        lt.push(vec![i.to_string(), num(lp.p), num(lp.solution_norm), num(lp.form_norm), num(lp.ratio)]);
    }
    out.stages.push(("solve".into(), t0.elapsed()));
    out.table("residuals.csv", &rt);
    out.table("lp_bound.csv", &lt);

    let f = symbol(cfg, cfg.text("symbol.family"))?;
    let mut it = Table::new(&["symbol", "span", "relative_error", "difference_norm", "direct_norm"]);
    if f.has_dbar() {
        let alpha = w.gaussian_alpha().unwrap_or_else(|| w.lower_bound());
        let d = cfg.count("basis.degree");
        let rule = PlaneRule::gaussian(2 * d + 4, w.lower_bound())?;
        let basis = FockBasis::build(&w, d, &rule)?;
        let t0 = Instant::now();
        for (name, span) in identity_spans(alpha)? {
            let id = hankel_via_dbar(&solver, &f, &span, &basis, &rule)?;
            it.push(vec![
                f.id().to_string(),
                name.to_string(),
                num(id.relative_error),
                num(id.difference_norm),
                num(id.direct_norm),
            ]);
        }
        out.stages.push(("identity".into(), t0.elapsed()));
    }
    out.table("identity.csv", &it);
    Ok(())
}

/// Hankel spectrum of `f` at the configured degree and margin.
pub fn spectrum_for(cfg: &ExperimentConfig, f: &Symbol<f64>) -> Result<SingularSpectrum<f64>> {
    let w = weight(cfg)?;
    let (d, margin) = (cfg.count("basis.degree"), cfg.count("basis.margin"));
    let rule = gram_plane_rule(cfg, &w, d, margin, f, &[])?;
    let basis = FockBasis::build(&w, d, &rule)?;
    let gram = build_hankel_gram(f, &basis, margin, &rule)?;
    Ok(singular_spectrum(&gram)?)
}

pub fn spectrum_table(s: &SingularSpectrum<f64>) -> Table {
    let mut t = Table::new(&["k", "s_k"]);
    for (k, v) in s.values.iter().enumerate() {
        t.push(vec![(k + 1).to_string(), num(*v)]);
    }
    t
}

fn tail_table(e: &EssentialTail<f64>) -> Table {
    let mut t = Table::new(&["estimate", "window_lo", "window_hi", "slope", "reliable"]);
    t.push(vec![num(e.estimate), e.window.0.to_string(), e.window.1.to_string(), num(e.slope), flag(e.reliable)]);
    t
}

fn spectrum_cmd(sub: &str, cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let f = symbol(cfg, cfg.text("symbol.family"))?;
    let s = out.timed("spectrum", || spectrum_for(cfg, &f))?;
    out.table("spectrum.csv", &spectrum_table(&s));
    let c = s.certificate;
    let mut ct = Table::new(&["degree", "margin", "bumped_margin", "max_shift", "passed", "projection_degree", "rule_order"]);
    ct.push(vec![
        s.degree.to_string(),
        c.margin.to_string(),
        c.bumped_margin.to_string(),
        num(c.max_shift),
        flag(c.passed),
        s.projection_degree.to_string(),
        s.rule_order.to_string(),
    ]);
    out.table("certificate.csv", &ct);
    if sub == "essential-norm" {
        out.table("essential.csv", &tail_table(&essential_norm_tail(&s, None)?));
    }
    Ok(())
}

/// `(t, gap, certificate passed, max |∇σ_t|)` for each cutoff radius.
pub fn approximant_gaps(cfg: &ExperimentConfig, f: &Symbol<f64>, ts: &[f64]) -> Result<Vec<(f64, f64, bool, f64)>> {
    let w = weight(cfg)?;
    let (d, margin) = (cfg.count("basis.degree"), cfg.count("basis.margin"));
    let tmax = ts.iter().copied().fold(0.0, f64::max);
    let r = cfg.real("approx.lattice_r");
    let l = Lattice::build_in(vec![cfg.point("lattice.w1")], r, Window::square(tmax + 3.0), cfg.count("lattice.cap"))?;
    let dec = decomposition_for(f, l, cfg.real("functional.q"), cfg.count("functional.d"), cfg.count("quad.ball_order"))?;
    let grid = PolarGrid {
        angular: cfg.count("approx.angular") & !1,
        ..PolarGrid::default()
    };
    ts.iter()
        .map(|&t| {
            let cut = smooth_cutoff(t)?;
            let rule = gram_plane_rule(cfg, &w, d, margin, f, &[t, t + 1.0])?;
            let ca = compact_approximant(&dec, &cut, &w, d, margin, &rule, grid, None)
                .with_context(|| format!("approximant at t = {t}"))?;
            Ok((t, ca.gap, ca.spectrum.certificate.passed, cut.max_gradient_on_grid(64)))
        })
        .collect()
}

fn compact_approx(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let f = symbol(cfg, cfg.text("symbol.family"))?;
    let ts = cfg.reals("approx.t");
    let spec = out.timed("spectrum", || spectrum_for(cfg, &f))?;
    let tail = essential_norm_tail(&spec, None)?;
    let gaps = out.timed("approximants", || approximant_gaps(cfg, &f, &ts))?;
    let mut t = Table::new(&["t", "gap", "ess_tail", "certificate_passed", "max_gradient"]);
    for (tt, gap, passed, grad) in gaps {
        t.push(vec![num(tt), num(gap), num(tail.estimate), flag(passed), num(grad)]);
    }
    out.table("gaps.csv", &t);
    Ok(())
}

/// Gauges named by the config: one per power in `gauge.p`, or a single
/// exp-minus-one or custom-grid gauge.
pub fn gauges(cfg: &ExperimentConfig) -> Result<Vec<SchattenGauge<f64>>> {
    let grid_max = 4.0 * cfg.reals("gauge.c").iter().copied().fold(1.0, f64::max);
    let fams: Vec<GaugeFamily<f64>> = match cfg.text("gauge.family") {
        "power" => cfg.reals("gauge.p").into_iter().map(GaugeFamily::Power).collect(),
        "exp-minus-one" => vec![GaugeFamily::ExpMinusOne],
        _ => vec![GaugeFamily::Grid(cfg.pairs("gauge.grid"))],
    };
    fams.into_iter()
        .map(|fam| SchattenGauge::new(fam, grid_max).context("gauge"))
        .collect()
}

pub fn gauge_param(g: &SchattenGauge<f64>) -> String {
    match g.family() {
        GaugeFamily::Power(p) => num(*p),
        _ => nan(),
    }
}

fn schatten_cmd(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let f = symbol(cfg, cfg.text("symbol.family"))?;
    let spec = out.timed("spectrum", || spectrum_for(cfg, &f))?;
    let l = lattice(cfg)?;
    let cs = cfg.reals("gauge.c");
    let mut st = Table::new(&["gauge", "p", "c", "k", "s_k", "term", "partial"]);
    let mut vt = Table::new(&[
        "gauge", "p", "c", "integral_total", "integral_tail_ratio", "integral_convergent", "sum_total", "sum_tail_ratio",
        "sum_convergent", "agree", "sqrt_convex",
    ]);
    for g in gauges(cfg)? {
        for &c in &cs {
            let sum = schatten_sum(&spec, &g, c);
            for (k, (s, p)) in spec.values.iter().zip(&sum.series.partial).enumerate() {
                st.push(vec![
                    g.family().id().to_string(),
                    gauge_param(&g),
                    num(c),
                    (k + 1).to_string(),
                    num(*s),
                    num(g.eval(c * *s)),
                    num(*p),
                ]);
            }
        }
        let verdicts = out.timed("criterion", || {
            schatten_h_criterion(
                &f,
                &g,
                cfg.real("functional.r"),
                cfg.count("functional.d"),
                &l,
                &spec,
                &cs,
                cfg.count("quad.ball_order"),
            )
        })?;
        for v in verdicts {
            vt.push(vec![
                g.family().id().to_string(),
                gauge_param(&g),
                num(v.c),
                num(v.integral.total),
                num(v.integral.tail_ratio),
                flag(v.integral.convergent),
                num(v.sum.total),
                num(v.sum.tail_ratio),
                flag(v.sum.convergent),
                flag(v.agree),
                flag(g.sqrt_convex),
            ]);
        }
    }
    out.table("sums.csv", &st);
    out.table("verdicts.csv", &vt);
    Ok(())
}

pub fn measure(cfg: &ExperimentConfig) -> Result<MeasureModel<f64>> {
    Ok(match cfg.text("measure.kind") {
        "lebesgue" => MeasureModel::Lebesgue,
        "gaussian" => MeasureModel::gaussian_density(cfg.real("measure.beta"))?,
        _ => MeasureModel::atomic(
            cfg.triples("measure.atoms")
                .into_iter()
                .map(|[re, im, m]| (C::new(re, im), m))
                .collect(),
        )?,
    })
}

fn berezin_cmd(cfg: &ExperimentConfig, seed: u64, out: &mut Outcome) -> Result<()> {
    let w = weight(cfg)?;
    let k = kernel_eval(cfg, &w)?;
    let mu = measure(cfg)?;
    let order = match cfg.count("quad.plane_order") {
        0 => 20,
        n => n,
    };
    let rule = PlaneRule::gaussian(order, w.lower_bound())?;
    let mut probes = vec![C::new(0.0, 0.0)];
    probes.extend(random_disc(&mut rng(seed), cfg.real("probe.radius"), cfg.count("probe.count")));
    let r = cfg.real("functional.r");
    let rep = out.timed("berezin", || berezin_domination(&mu, &k, &probes, r, &rule, cfg.count("quad.ball_order")))?;
    let mut t = Table::new(&["re", "im", "mu_hat", "mu_tilde", "ratio"]);
    for ((z, a), b) in rep.probes.iter().zip(&rep.average).zip(&rep.berezin) {
        let ratio = if *b > 0.0 { num(a / b) } else { nan() };
        t.push(vec![num(z.re), num(z.im), num(*a), num(*b), ratio]);
    }
    out.table("berezin.csv", &t);
    let mut s = Table::new(&["measure", "r", "c_hat"]);
    s.push(vec![cfg.text("measure.kind").to_string(), num(r), num(rep.c_hat)]);
    out.table("summary.csv", &s);
    Ok(())
}

//! Cross-module reports: the compactness bracket, constructive approximants
//! and gauge verdicts, one symbol per job.

use anyhow::{Context, Result};
use rayon::prelude::*;

use fockspace::decomposition::verify_controls;
use fockspace::hankel::{essential_norm_tail, kz_profile, schatten_h_criterion, KernelProbe};
use fockspace::lattice::{Lattice, Window};
use fockspace::oscillation::vda_profile;

use crate::commands::{
    approximant_gaps, decomposition_for, gauges, lattice, spectrum_for, symbol, weight, Outcome,
};
use crate::config::ExperimentConfig;
use crate::output::{flag, num, Table};

#[derive(Debug, Clone, PartialEq)]
pub struct BracketRow {
    pub symbol: String,
    pub shell: f64,
    pub ess_tail: f64,
    pub kz_max: f64,
    pub g_max: f64,
    /// Shell maxima of `|∂̄f₁|` plus `M_{q,r}(f₂)`.
    pub decomposition_bound: f64,
}

impl BracketRow {
    pub fn values(&self) -> [f64; 4] {
        [self.ess_tail, self.kz_max, self.g_max, self.decomposition_bound]
    }
}

/// Largest ratio between any two of `xs`; infinite when one vanishes and
/// another does not.
pub fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().copied().fold(0.0, f64::max);
    let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        1.0
    } else if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn bracket_symbol(cfg: &ExperimentConfig, id: &str) -> Result<Vec<BracketRow>> {
    let f = symbol(cfg, id)?;
    let w = weight(cfg)?;
    let (q, r, d) = (cfg.real("functional.q"), cfg.real("functional.r"), cfg.count("functional.d"));
    let shells = cfg.reals("functional.shells");
    let per = cfg.count("functional.per_shell");
    let order = cfg.count("quad.ball_order");
    let rmax = shells.last().copied().unwrap_or(0.0);

    let tail = essential_norm_tail(&spectrum_for(cfg, &f)?, None)?;
    let probe = KernelProbe::covering(&w, rmax, cfg.count("basis.margin"), f.radial_breaks())?;
    let kz = kz_profile(&f, q, &shells, per, &probe)?;
    let g = vda_profile(&f, q, r, d, &shells, per, order)?;

    let lr = cfg.real("lattice.r");
    let l = Lattice::build_in(
        vec![cfg.point("lattice.w1")],
        lr,
        Window::square(rmax + 2.0 * lr + r + 1.0),
        cfg.count("lattice.cap"),
    )?;
    let dec = decomposition_for(&f, l, q, d, order)?;
    let controls = verify_controls(&dec, &g.points, r, d, order)?;

    Ok(shells
        .iter()
        .enumerate()
        .map(|(i, &rho)| {
            let on = |j: &usize| g.shell_of[*j] == rho;
            let idx: Vec<usize> = (0..g.points.len()).filter(on).collect();
            let dbar = idx.iter().map(|&j| controls.rows[j].dbar_f1.norm()).fold(0.0, f64::max);
            let m = idx.iter().map(|&j| controls.rows[j].m_f2).fold(0.0, f64::max);
            BracketRow {
                symbol: id.to_string(),
                shell: rho,
                ess_tail: tail.estimate,
                kz_max: kz.shell_max[i],
                g_max: g.shell_max[i],
                decomposition_bound: dbar + m,
            }
        })
        .collect())
}

/// One row per `(symbol, shell)` over `report.symbols`.
pub fn bracket(cfg: &ExperimentConfig) -> Result<Vec<BracketRow>> {
    let ids = cfg.list("report.symbols");
    let per: Vec<Vec<BracketRow>> = ids
        .par_iter()
        .map(|id| bracket_symbol(cfg, id).with_context(|| format!("symbol {id}")))
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: Vec<&str>| {
        cells
            .iter()
            .zip(&width)
            .map(|(c, w)| format!("{c:>w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
            + "\n"
    };
    let mut s = line(header.to_vec());
    s.push_str(&line(width.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().iter().map(String::as_str).collect()));
    for r in rows {
        s.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    s
}

fn short(x: f64) -> String {
    format!("{x:.4e}")
}

pub fn thm11_cmd(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let rows = out.timed("bracket", || bracket(cfg))?;
    let mut t = Table::new(&["symbol", "shell", "ess_tail", "kz_max", "g_max", "decomposition_bound"]);
    let mut rt = Table::new(&["symbol", "shell", "max_pairwise_ratio"]);
    let mut txt = Vec::new();
    for r in &rows {
        t.push(vec![
            r.symbol.clone(),
            num(r.shell),
            num(r.ess_tail),
            num(r.kz_max),
            num(r.g_max),
            num(r.decomposition_bound),
        ]);
        let sp = spread(&r.values());
        rt.push(vec![r.symbol.clone(), num(r.shell), num(sp)]);
        txt.push(vec![
            r.symbol.clone(),
            format!("{}", r.shell),
            short(r.ess_tail),
            short(r.kz_max),
            short(r.g_max),
            short(r.decomposition_bound),
            short(sp),
        ]);
    }
    out.table("bracket.csv", &t);
    out.table("ratios.csv", &rt);
    out.text(
        "report.txt",
        text_table(&["symbol", "shell", "ess-tail", "kz-max", "G-max", "dec-bound", "max-ratio"], &txt),
    );
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproximantRow {
    pub symbol: String,
    pub t: f64,
    pub gap: f64,
    pub ess_tail: f64,
    pub certificate_passed: bool,
}

pub fn approximants(cfg: &ExperimentConfig) -> Result<Vec<ApproximantRow>> {
    let ids = cfg.list("report.symbols");
    let ts = cfg.reals("approx.t");
    let per: Vec<Vec<ApproximantRow>> = ids
        .par_iter()
        .map(|id| -> Result<Vec<ApproximantRow>> {
            let f = symbol(cfg, id)?;
            let tail = essential_norm_tail(&spectrum_for(cfg, &f)?, None)?;
            let gaps = approximant_gaps(cfg, &f, &ts).with_context(|| format!("symbol {id}"))?;
            Ok(gaps
                .into_iter()
                .map(|(t, gap, passed, _)| ApproximantRow {
                    symbol: id.to_string(),
                    t,
                    gap,
                    ess_tail: tail.estimate,
                    certificate_passed: passed,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

pub fn thm12_cmd(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let rows = out.timed("approximants", || approximants(cfg))?;
    let mut t = Table::new(&["symbol", "t", "gap", "ess_tail", "certificate_passed"]);
    let mut txt = Vec::new();
    for r in &rows {
        t.push(vec![r.symbol.clone(), num(r.t), num(r.gap), num(r.ess_tail), flag(r.certificate_passed)]);
        txt.push(vec![r.symbol.clone(), format!("{}", r.t), short(r.gap), short(r.ess_tail), flag(r.certificate_passed)]);
    }
    out.table("gaps.csv", &t);
    out.text("report.txt", text_table(&["symbol", "t", "gap", "ess-tail", "certified"], &txt));
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictRow {
    pub symbol: String,
    pub gauge: String,
    /// Exponent for power gauges.
    pub p: Option<f64>,
    pub c: f64,
    pub integral_convergent: bool,
    pub sum_convergent: bool,
    pub integral_tail: f64,
    pub sum_tail: f64,
    pub sqrt_convex: bool,
}

impl VerdictRow {
    pub fn agree(&self) -> bool {
        self.integral_convergent == self.sum_convergent
    }
}

pub fn verdicts(cfg: &ExperimentConfig) -> Result<Vec<VerdictRow>> {
    let ids = cfg.list("report.symbols");
    let gs = gauges(cfg)?;
    let l = lattice(cfg)?;
    let cs = cfg.reals("gauge.c");
    let per: Vec<Vec<VerdictRow>> = ids
        .par_iter()
        .map(|id| -> Result<Vec<VerdictRow>> {
            let f = symbol(cfg, id)?;
            let spec = spectrum_for(cfg, &f)?;
            let mut rows = Vec::new();
            for g in &gs {
                let vs = schatten_h_criterion(
                    &f,
                    g,
                    cfg.real("functional.r"),
                    cfg.count("functional.d"),
                    &l,
                    &spec,
                    &cs,
                    cfg.count("quad.ball_order"),
                )
                .with_context(|| format!("symbol {id}"))?;
                for v in vs {
                    rows.push(VerdictRow {
                        symbol: id.to_string(),
                        gauge: g.family().id().to_string(),
                        p: match g.family() {
                            fockspace::hankel::GaugeFamily::Power(p) => Some(*p),
                            _ => None,
                        },
                        c: v.c,
                        integral_convergent: v.integral.convergent,
                        sum_convergent: v.sum.convergent,
                        integral_tail: v.integral.tail_ratio,
                        sum_tail: v.sum.tail_ratio,
                        sqrt_convex: g.sqrt_convex,
                    });
                }
            }
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

pub fn thm13_cmd(cfg: &ExperimentConfig, out: &mut Outcome) -> Result<()> {
    let rows = out.timed("verdicts", || verdicts(cfg))?;
    let mut t = Table::new(&[
        "symbol", "gauge", "p", "c", "integral_convergent", "sum_convergent", "agree", "integral_tail_ratio",
        "sum_tail_ratio", "sqrt_convex",
    ]);
    let mut txt = Vec::new();
    for r in &rows {
        let p = r.p.map_or_else(|| "nan".to_string(), num);
        t.push(vec![
            r.symbol.clone(),
            r.gauge.clone(),
            p,
            num(r.c),
            flag(r.integral_convergent),
            flag(r.sum_convergent),
            flag(r.agree()),
            num(r.integral_tail),
            num(r.sum_tail),
            flag(r.sqrt_convex),
        ]);
        txt.push(vec![
            r.symbol.clone(),
            r.gauge.clone(),
            r.p.map_or_else(|| "-".to_string(), |p| format!("{p}")),
            format!("{}", r.c),
            flag(r.integral_convergent),
            flag(r.sum_convergent),
            flag(r.agree()),
        ]);
    }
    out.table("verdicts.csv", &t);
    out.text("report.txt", text_table(&["symbol", "gauge", "p", "c", "integral", "sum", "agree"], &txt));
    Ok(())
}

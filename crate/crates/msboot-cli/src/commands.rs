//! Subcommand implementations shared by `main`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use msboot::counts::CountTable;
use msboot::dataset::DatasetMatrix;
use msboot::engine::FailurePolicy;
use msboot::grid::default_scale_grid;
use msboot::hclust::{
    annotated_newick, assessments_to_tsv, mixture_sim, pvclust_run, Metric, PvclustConfig,
};
use msboot::models::{default_candidates, select_model, FitResult, ModelSpec};
use msboot::pvalues::{p_bp, p_values_b, PValueReport};
use msboot::region::{
    simulate_table, sphere_curve, OracleConfig, RegionOracle, RegionSpec, RejectionMethod,
    RejectionTable, SphereCurve,
};
use serde_json::json;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum OutFormat {
    Tsv,
    Json,
}

impl OutFormat {
    pub fn parse_name(name: &str) -> Result<OutFormat> {
        match name {
            "tsv" => Ok(OutFormat::Tsv),
            "json" => Ok(OutFormat::Json),
            other => bail!("unknown format `{other}`; expected tsv or json"),
        }
    }
}

/// Settings shared by every subcommand after flag/config/default merging.
pub struct Ctx {
    pub seed: u64,
    pub format: OutFormat,
    pub output: Option<PathBuf>,
}

impl Ctx {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.output {
            Some(p) => std::fs::write(p, text)
                .with_context(|| format!("writing output {}", p.display()))?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

pub fn parse_methods(names: &[String]) -> Result<Vec<RejectionMethod>> {
    names
        .iter()
        .map(|s| s.parse::<RejectionMethod>().map_err(Into::into))
        .collect()
}

pub fn parse_models(names: &[String]) -> Result<Vec<ModelSpec>> {
    names
        .iter()
        .map(|s| s.parse::<ModelSpec>().map_err(Into::into))
        .collect()
}

fn report_flags(report: &PValueReport) -> String {
    let mut flags = Vec::new();
    if report.flags.clamped_si {
        flags.push("clamped-si");
    }
    if report.flags.degenerate_fit {
        flags.push("degenerate-ratio");
    }
    if report.flags.negative_signed_distance {
        flags.push("inside");
    }
    if flags.is_empty() {
        "-".to_string()
    } else {
        flags.join(",")
    }
}

pub struct FitOptions {
    pub counts: PathBuf,
    pub complement: bool,
    pub k: usize,
    pub tau2_h: f64,
    pub tau2_s: f64,
    pub models: Vec<ModelSpec>,
}

pub fn run_fit(ctx: &Ctx, opts: &FitOptions) -> Result<()> {
    let text = std::fs::read_to_string(&opts.counts)
        .with_context(|| format!("reading counts {}", opts.counts.display()))?;
    let mut table = CountTable::from_tsv(&text, &opts.counts.display().to_string())?;
    if opts.complement {
        table = table.complement();
    }
    let bp = p_bp(&table).ok();
    let (best, candidates, report, note) = match select_model(&table, &opts.models) {
        Ok((best, all)) => {
            let mut report = p_values_b(&best, &best.negated(), opts.k, opts.tau2_h, opts.tau2_s)?;
            report.p_bp = bp;
            (Some(best), all, Some(report), None)
        }
        Err(e @ msboot::Error::AllModelsDegenerate) => {
            if bp.is_none() {
                return Err(e).context("no usable fit and no unit-scale row for a plain bootstrap probability");
            }
            (None, Vec::new(), None, Some(e.to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    match ctx.format {
        OutFormat::Tsv => ctx.emit(&fit_tsv(&best, &candidates, &report, bp, &note)),
        OutFormat::Json => {
            let value = json!({
                "model": best.as_ref().map(|b| b.spec.name()),
                "report": report,
                "bp": bp,
                "note": note,
                "candidates": candidate_rows(&best, &candidates),
            });
            ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&value)?))
        }
    }
}

fn candidate_rows(best: &Option<FitResult>, all: &[FitResult]) -> Vec<serde_json::Value> {
    let chosen = best.as_ref().map(|b| b.spec);
    all.iter()
        .map(|f| {
            json!({
                "model": f.spec.name(),
                "npar": f.spec.npar(),
                "aic": f.aic,
                "converged": f.converged,
                "selected": chosen == Some(f.spec),
            })
        })
        .collect()
}

fn fit_tsv(
    best: &Option<FitResult>,
    candidates: &[FitResult],
    report: &Option<PValueReport>,
    bp: Option<f64>,
    note: &Option<String>,
) -> String {
    let dash = || "-".to_string();
    let num = |v: f64| v.to_string();
    let mut out = String::from("field\tvalue\n");
    let mut field = |k: &str, v: String| {
        out.push_str(k);
        out.push('\t');
        out.push_str(&v);
        out.push('\n');
    };
    field("model", best.as_ref().map(|b| b.spec.name()).unwrap_or_else(dash));
    match report {
        Some(r) => {
            field("z_h", num(r.z_h));
            field("z_s", num(r.z_s));
            field("t", num(r.t_hat));
            field("gamma", num(r.gamma_hat));
            field("bp", bp.map(num).unwrap_or_else(dash));
            field("au", num(r.p_au));
            field("si", num(r.p_si));
            field("flags", report_flags(r));
        }
        None => {
            for k in ["z_h", "z_s", "t", "gamma"] {
                field(k, dash());
            }
            field("bp", bp.map(num).unwrap_or_else(dash));
            field("au", dash());
            field("si", dash());
            field("flags", "bp-only".to_string());
        }
    }
    field("note", note.clone().unwrap_or_else(dash));
    out.push('\n');
    out.push_str("candidate\tnpar\taic\tconverged\tselected\n");
    let chosen = best.as_ref().map(|b| b.spec);
    for f in candidates {
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\n",
            f.spec.name(),
            f.spec.npar(),
            f.aic,
            f.converged,
            if chosen == Some(f.spec) { "*" } else { "" }
        ));
    }
    out
}

pub struct SimulateOptions {
    pub region: RegionSpec,
    pub alpha: f64,
    pub methods: Vec<RejectionMethod>,
    pub thetas: Vec<f64>,
}

pub fn parse_region(name: &str, sign: Option<i8>, a: Option<f64>) -> Result<RegionSpec> {
    Ok(match name {
        "halfspace" => RegionSpec::Halfspace,
        "concave-smooth" => RegionSpec::CurveBoundary { sign: -1, a: 1.0 },
        "concave-nonsmooth" => RegionSpec::CurveBoundary { sign: -1, a: 0.0 },
        "convex-smooth" => RegionSpec::CurveBoundary { sign: 1, a: 1.0 },
        "convex-nonsmooth" => RegionSpec::CurveBoundary { sign: 1, a: 0.0 },
        "custom" => {
            let sign = sign.context("--sign is required for --region custom")?;
            let a = a.context("--a is required for --region custom")?;
            RegionSpec::CurveBoundary { sign, a }
        }
        other => bail!(
            "unknown region `{other}`; expected concave-smooth, concave-nonsmooth, \
             convex-smooth, convex-nonsmooth, halfspace, or custom"
        ),
    })
}

pub fn theta_grid(max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(max >= 0.0) {
        bail!("theta grid needs max >= 0 and step > 0");
    }
    let count = (max / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| i as f64 * step).collect())
}

pub fn run_simulate(ctx: &Ctx, opts: &SimulateOptions) -> Result<()> {
    let oracle = RegionOracle::new(opts.region, OracleConfig::default())?;
    let mut rows = Vec::with_capacity(opts.methods.len() + 1);
    let mut selection_row = None;
    for &method in &opts.methods {
        let start = Instant::now();
        let one = simulate_table(&oracle, &[method], opts.alpha, &opts.thetas)?;
        eprintln!(
            "[simulate] {} done in {:.1}s",
            method.label(),
            start.elapsed().as_secs_f64()
        );
        let mut one = one.rows.into_iter();
        rows.push(one.next().expect("one method row"));
        selection_row = one.next_back();
    }
    rows.push(selection_row.expect("selection probability row"));
    let table = RejectionTable {
        region: opts.region,
        alpha: opts.alpha,
        thetas: opts.thetas.clone(),
        rows,
    };
    match ctx.format {
        OutFormat::Tsv => ctx.emit(&table.to_tsv()),
        OutFormat::Json => ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&table)?)),
    }
}

pub struct SphereOptions {
    pub gammas: Vec<f64>,
    pub dims: Vec<u32>,
    pub alpha: f64,
    pub methods: Vec<RejectionMethod>,
}

pub fn run_sphere(ctx: &Ctx, opts: &SphereOptions) -> Result<()> {
    let mut curves: Vec<SphereCurve> = Vec::with_capacity(opts.gammas.len());
    for &gamma in &opts.gammas {
        let start = Instant::now();
        curves.push(sphere_curve(
            gamma,
            &opts.dims,
            &opts.methods,
            opts.alpha,
            &OracleConfig::default(),
        )?);
        eprintln!(
            "[sphere] -gamma = {gamma} done in {:.1}s",
            start.elapsed().as_secs_f64()
        );
    }
    match ctx.format {
        OutFormat::Tsv => {
            let mut out = String::new();
            for curve in &curves {
                out.push_str(&format!("gamma\t{}\n", curve.gamma_abs));
                out.push_str(&curve.to_tsv());
                out.push('\n');
            }
            ctx.emit(&out)
        }
        OutFormat::Json => ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&curves)?)),
    }
}

pub struct PvclustOptions {
    pub data: PathBuf,
    pub metric: Metric,
    pub b: u64,
    pub k: usize,
    pub newick: Option<PathBuf>,
}

fn read_matrix(path: &Path) -> Result<DatasetMatrix> {
    let delimiter = match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") | Some("tab") | Some("txt") => b'\t',
        _ => b',',
    };
    let file =
        std::fs::File::open(path).with_context(|| format!("opening data {}", path.display()))?;
    DatasetMatrix::from_delimited(file, delimiter, &path.display().to_string()).map_err(Into::into)
}

pub fn run_pvclust(ctx: &Ctx, opts: &PvclustOptions) -> Result<()> {
    let data = read_matrix(&opts.data)?;
    let grid = default_scale_grid(data.n_rows() as u64)?;
    eprintln!(
        "[pvclust] {} columns x {} rows; B = {} per scale, {} scales",
        data.n_cols(),
        data.n_rows(),
        opts.b,
        grid.len()
    );
    let cfg = PvclustConfig {
        metric: opts.metric,
        candidates: default_candidates(),
        taylor_k: opts.k,
        policy: FailurePolicy::SkipAndRecord,
    };
    let start = Instant::now();
    let outcome = pvclust_run(&data, &grid, opts.b, ctx.seed, &cfg)?;
    eprintln!("[pvclust] done in {:.1}s", start.elapsed().as_secs_f64());
    if !outcome.skipped.is_empty() {
        eprintln!(
            "[pvclust] {} replicates skipped (see report for per-cluster effect)",
            outcome.skipped.len()
        );
    }
    let newick = annotated_newick(&outcome);
    if let Some(path) = &opts.newick {
        std::fs::write(path, format!("{newick}\n"))
            .with_context(|| format!("writing newick {}", path.display()))?;
    }
    match ctx.format {
        OutFormat::Tsv => {
            let mut out = assessments_to_tsv(&outcome.assessments);
            out.push('\n');
            out.push_str(&newick);
            out.push('\n');
            ctx.emit(&out)
        }
        OutFormat::Json => {
            let value = json!({
                "assessments": outcome.assessments,
                "newick": newick,
                "skipped": outcome.skipped,
            });
            ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&value)?))
        }
    }
}

pub struct MixtureOptions {
    pub a: f64,
    pub n: usize,
}

pub fn run_mixture(ctx: &Ctx, opts: &MixtureOptions) -> Result<()> {
    let data = mixture_sim(opts.a, opts.n, ctx.seed)?;
    match ctx.format {
        OutFormat::Tsv => {
            let mut out = String::from("unit");
            for c in data.col_labels() {
                out.push('\t');
                out.push_str(c);
            }
            out.push('\n');
            for (t, label) in data.row_labels().iter().enumerate() {
                out.push_str(label);
                for v in data.row(t) {
                    out.push('\t');
                    out.push_str(&v.to_string());
                }
                out.push('\n');
            }
            ctx.emit(&out)
        }
        OutFormat::Json => {
            let rows: Vec<&[f64]> = (0..data.n_rows()).map(|t| data.row(t)).collect();
            let value = json!({
                "row_labels": data.row_labels(),
                "col_labels": data.col_labels(),
                "values": rows,
            });
            ctx.emit(&format!("{}\n", serde_json::to_string_pretty(&value)?))
        }
    }
}

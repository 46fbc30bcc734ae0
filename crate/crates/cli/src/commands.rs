//! Subcommand implementations.

use std::path::{Path, PathBuf};

use dirl::bounds::{self, sweep, BoundCurve, ERecipe, EtaRecipe, FormulaId, Grid, Normalization, TRecipe};
use dirl::channel::{dedupe_and_purge, load_channel, FamilyDescriptor};
use dirl::codebook::{construct as build, construct_best, CodeMode, CodeOptions, DICode};
use dirl::evaluator::{exact_errors, monte_carlo_errors, pair_bound_errors, DpConfig};
use dirl::fmt::float;
use dirl::geometry::{estimate_dimension, max_packing, min_covering, Metric, Mode, PointCloud};
use dirl::ChannelModel;
use rayon::prelude::*;
use serde_json::json;

use crate::args::*;
use crate::error::{warn, CliError, CliResult};
use crate::manifest::{ensure_dir, write_file, RunManifest};
use crate::svg::{self, XAxis};

fn channel_path(common: &Common) -> CliResult<&Path> {
    common
        .channel
        .as_deref()
        .ok_or_else(|| CliError::Usage("--channel is required".into()))
}

fn out_dir(common: &Common) -> CliResult<PathBuf> {
    let dir = common
        .out
        .clone()
        .ok_or_else(|| CliError::Usage("--out is required".into()))?;
    ensure_dir(&dir)?;
    Ok(dir)
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

fn open_channel(path: &Path) -> CliResult<ChannelModel> {
    if !path.exists() {
        return Err(CliError::io(path, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    Ok(load_channel(path)?)
}

fn pretty(v: &impl serde::Serialize) -> CliResult<String> {
    Ok(serde_json::to_string_pretty(v).map_err(dirl::DirlError::from)? + "\n")
}

pub fn construct(common: &Common, a: &ConstructArgs) -> CliResult<()> {
    let path = channel_path(common)?;
    let w = open_channel(path)?;
    let dir = out_dir(common)?;
    let opts = CodeOptions {
        code_mode: match a.code_mode {
            CodeModeArg::Greedy => CodeMode::Greedy,
            CodeModeArg::Linear => CodeMode::Linear,
            CodeModeArg::Auto => CodeMode::Auto,
        },
        seed: common.seed,
    };
    let code = match &a.t_grid {
        Some(ts) => construct_best(&w, a.n, a.e, ts, opts)?,
        None => build(&w, a.n, a.e, a.t, opts)?,
    };
    let p = &code.params;
    if p.remark1_trivial {
        warn(
            bounds::flags::REMARK1_TRIVIAL,
            format!("packing radius {} is at least sqrt 2; the alphabet has one letter", p.beta),
        );
    }
    if p.guarantee_void {
        warn(bounds::flags::GUARANTEE_VOID, "c t beta^2 > 1; error guarantees do not apply");
    }
    if p.delta_out_of_range {
        warn("delta_out_of_range", "typicality delta exceeds sqrt(n) log|Y|");
    }
    write_file(&dir.join("code.json"), &(code.to_json()? + "\n"))?;
    RunManifest::new("construct", Some(path), a, common.seed)?.write(&dir)?;
    println!(
        "{}",
        json!({
            "codewords": code.len(),
            "n": code.n(),
            "t": p.t,
            "alphabet": code.letter_alphabet.len(),
            "rate": code.rate,
            "rate_lower_bound": code.rate_lower_bound,
            "meets_bound": code.rate >= code.rate_lower_bound,
            "proven_regime": p.proven_regime(),
            "predicted_lambda1": p.predicted_lambda1,
            "predicted_lambda2": p.predicted_lambda2,
        })
    );
    Ok(())
}

pub fn evaluate(common: &Common, a: &EvaluateArgs) -> CliResult<()> {
    let path = channel_path(common)?;
    let w = open_channel(path)?;
    let code = DICode::from_json(&read(&a.code)?)?;
    code.check_invariants(&w)?;
    let dir = out_dir(common)?;
    let report = match a.method {
        MethodArg::ExactDp => {
            let cfg = DpConfig {
                step: a.step,
                ..DpConfig::default()
            };
            exact_errors(&code, &w, a.pair_budget, cfg)?
        }
        MethodArg::MonteCarlo => monte_carlo_errors(&code, &w, a.trials, common.seed)?,
        MethodArg::PairBound => pair_bound_errors(&code, &w),
    };
    write_file(&dir.join("report.json"), &pretty(&report)?)?;
    #[derive(serde::Serialize)]
    struct Params<'a> {
        #[serde(flatten)]
        args: &'a EvaluateArgs,
        code_sha256: String,
    }
    let params = Params {
        args: a,
        code_sha256: crate::manifest::file_sha256(&a.code)?,
    };
    RunManifest::new("evaluate", Some(path), params, common.seed)?.write(&dir)?;
    println!(
        "{}",
        json!({
            "lambda1": [report.lambda1.lo, report.lambda1.hi],
            "lambda2": [report.lambda2.lo, report.lambda2.hi],
            "e1_measured": float(report.e1_measured),
            "e2_measured": float(report.e2_measured),
            "within_predicted": report.lambda1.hi <= code.params.predicted_lambda1
                && report.lambda2.hi <= code.params.predicted_lambda2,
        })
    );
    Ok(())
}

fn parse_n_range(s: &str) -> CliResult<Vec<usize>> {
    let bad = || CliError::Usage(format!("--n-range expects LO:HI:COUNT, got {s:?}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let lo: f64 = parts[0].parse().map_err(|_| bad())?;
    let hi: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if !(lo >= 1.0 && hi >= lo) {
        return Err(bad());
    }
    Ok(bounds::log_spaced(lo, hi, count))
}

fn parse_list(s: &str, flag: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            p.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{flag}: cannot parse {p:?}")))
        })
        .collect()
}

fn parse_grid(a: &BoundsArgs) -> CliResult<Grid> {
    let mut ns = a.n.clone();
    if let Some(r) = &a.n_range {
        ns.extend(parse_n_range(r)?);
    }
    let es = match a.e.as_str() {
        "inv-n" => ERecipe::InvN,
        s => ERecipe::Fixed(parse_list(s, "--e")?),
    };
    let t = match a.t.as_str() {
        "fig2" => TRecipe::Fig2,
        "inv-log" => TRecipe::InvLog,
        "quarter-root" => TRecipe::QuarterRoot,
        s => TRecipe::Fixed(s.parse().map_err(|_| CliError::Usage(format!("--t: cannot parse {s:?}")))?),
    };
    let eta = match a.eta.as_str() {
        "inv-n" => EtaRecipe::InvN,
        "inv-log" => EtaRecipe::InvLog,
        s => EtaRecipe::Fixed(s.parse().map_err(|_| CliError::Usage(format!("--eta: cannot parse {s:?}")))?),
    };
    Ok(Grid {
        ns,
        es,
        t,
        eta,
        alpha: a.alpha,
        d: a.d,
        y_size: a.y,
        a: a.a,
        omega: a.omega,
        lambda: a.lambda,
        delta_trunc: a.delta_trunc,
        delta_part: a.delta_part,
        power: a.power,
        normalization: a.normalize.map(|n| match n {
            NormalizeArg::None => Normalization::None,
            NormalizeArg::PerLogN => Normalization::PerLogN,
            NormalizeArg::MinusLoglog => Normalization::MinusLogLogInvE,
        }),
    })
}

/// Concatenates curves under one header.
pub fn combined_csv(curves: &[BoundCurve]) -> String {
    let mut out = format!("{}\n", bounds::CSV_HEADER);
    for c in curves {
        for line in c.to_csv().lines().skip(1) {
            out.push_str(line);
            out.push('\n');
        }
    }
    out
}

pub fn bounds(common: &Common, a: &BoundsArgs) -> CliResult<()> {
    let ids = a
        .formula
        .iter()
        .map(|s| FormulaId::parse(s.trim()))
        .collect::<dirl::Result<Vec<_>>>()?;
    let mut grid = parse_grid(a)?;
    let w = match &common.channel {
        Some(p) => Some(open_channel(p)?),
        None => None,
    };
    if let Some(w) = &w {
        grid.y_size = w.output_size();
    }
    let dir = out_dir(common)?;
    let curves = ids
        .iter()
        .map(|&id| sweep(id, &grid, w.as_ref()))
        .collect::<dirl::Result<Vec<_>>>()?;
    write_file(&dir.join("bounds.csv"), &combined_csv(&curves))?;
    if a.svg {
        let axis = match grid.es {
            ERecipe::InvN => XAxis::Log10N,
            ERecipe::Fixed(_) => XAxis::Log10E,
        };
        write_file(&dir.join("bounds.svg"), &svg::render(&curves, axis))?;
    }
    RunManifest::new("bounds", common.channel.as_deref(), a, common.seed)?.write(&dir)?;
    let rows: usize = curves.iter().map(|c| c.points.len()).sum();
    println!("{}", json!({ "formulas": ids.len(), "rows": rows }));
    Ok(())
}

/// Smallest distance the truncated Bernoulli family can resolve.
fn resolvable_scale(w: &ChannelModel, metric: Metric) -> Option<f64> {
    let FamilyDescriptor::Bernoulli(spec) = w.family()?;
    let x = spec.truncation_scale();
    Some(match metric {
        Metric::TotalVariation => x,
        Metric::Euclidean => (((1.0 - x).sqrt() - 1.0).powi(2) + x).sqrt(),
    })
}

pub fn geometry(common: &Common, a: &GeometryArgs) -> CliResult<()> {
    let path = channel_path(common)?;
    let w = open_channel(path)?;
    let metric = match a.metric {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Tv => Metric::TotalVariation,
    };
    let mode = match a.mode {
        ModeArg::Greedy => Mode::Greedy,
        ModeArg::Exact => Mode::Exact,
        ModeArg::Auto => Mode::Auto,
    };
    let cloud = PointCloud::for_channel(&w, metric);
    if let Some(scale) = resolvable_scale(&w, metric) {
        for &r in a.radii.iter().filter(|&&r| r < scale) {
            warn(
                "below_truncation_scale",
                format!("radius {r} is below the truncation scale {scale}; counts reflect k_max"),
            );
        }
    }
    let dir = out_dir(common)?;
    let mut csv = String::from("task,radius,count,exact,centers\n");
    let mut row = |task: &str, r: f64, count: usize, exact: bool, centers: &[usize]| {
        let c: Vec<String> = centers.iter().map(|i| i.to_string()).collect();
        csv.push_str(&format!("{task},{},{count},{exact},{}\n", float(r), c.join(";")));
    };
    match a.task {
        TaskArg::Packing => {
            let res = a
                .radii
                .par_iter()
                .map(|&r| max_packing(&cloud, r, mode))
                .collect::<dirl::Result<Vec<_>>>()?;
            for p in &res {
                row("packing", p.radius, p.count, p.exact, &p.center_indices);
            }
        }
        TaskArg::Covering => {
            let res = a
                .radii
                .par_iter()
                .map(|&r| min_covering(&cloud, r, mode))
                .collect::<dirl::Result<Vec<_>>>()?;
            for c in &res {
                row("covering", c.radius, c.count, c.exact, &c.center_indices);
            }
        }
        TaskArg::Dimension => {
            let est = estimate_dimension(&cloud, &a.radii, mode)?;
            for (r, &count) in est.radii_grid.iter().zip(&est.counts) {
                row("dimension", *r, count, est.exact, &[]);
            }
            let summary = json!({
                "radii": est.radii_grid.iter().map(|&r| float(r)).collect::<Vec<_>>(),
                "counts": est.counts,
                "slope": float(est.slope),
                "slope_lower": float(est.slope_lower),
                "slope_upper": float(est.slope_upper),
                "fit_residual": float(est.fit_residual),
                "exact": est.exact,
            });
            write_file(&dir.join("dimension.json"), &pretty(&summary)?)?;
        }
    }
    write_file(&dir.join("geometry.csv"), &csv)?;
    RunManifest::new("geometry", Some(path), a, common.seed)?.write(&dir)?;
    Ok(())
}

pub fn channel_check(common: &Common) -> CliResult<()> {
    let path = channel_path(common)?;
    let w = open_channel(path)?;
    let purge = dedupe_and_purge(&w);
    println!(
        "{}",
        json!({
            "inputs": w.num_inputs(),
            "outputs": w.output_size(),
            "distinct_rows": purge.distinct_rows,
            "row_residual": w.row_residual(),
            "min_entry": w.min_entry(),
            "has_cost": w.has_cost(),
            "labels": w.input_labels(),
        })
    );
    Ok(())
}

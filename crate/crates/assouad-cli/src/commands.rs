//! Subcommand implementations.

use crate::config::{self, AffineConfig, CarpetConfig, IfsConfig, OracleConfig};
use crate::output::{
    emit_csv, emit_json, invocation_hash, Document, EstimateRow, Labeled, Provenance,
};
use crate::{Command, OutputFormat};
use anyhow::{bail, Context};
use assouad::bounds::{local_dim_bounds, net_interval_measure};
use assouad::estimate::{spectrum_to_one, GridSpec, Mode};
use assouad::graph::{build_transition_graph, GraphBudget, TransitionGraph};
use assouad::moran::{moran_lower_bound, uniformly_perfect_bound, verify_moran};
use assouad::rational::{parse_rational, rational_to_f64, rational_to_string};
use serde::Serialize;
use std::io::Write;
use std::path::Path;

pub fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::IfsAnalyze { config, max_level, max_cvs, path_len, dot, output } => {
            ifs_analyze(&config, max_level, max_cvs, path_len, dot.as_deref(), output)
        }
        Command::Bm { config, depth, output } => bm(&config, depth, output),
        Command::MoranBound { c1, c3, c, gamma, affine, depth } => {
            moran_bound(c1, c3, c, gamma, affine.as_deref(), depth)
        }
        Command::Estimate {
            config,
            deltas,
            mode,
            points,
            min_level,
            max_level,
            seed,
            output,
        } => estimate(&config, &deltas, &mode, points, min_level, max_level, seed, output),
        Command::Spectrum {
            config,
            thetas,
            mode,
            points,
            min_level,
            max_level,
            seed,
            output,
        } => spectrum(&config, &thetas, &mode, points, min_level, max_level, seed, output),
        Command::Numtheo { theta, beta, eta, i_range, output } => {
            numtheo(&theta, &beta, eta, &i_range, output)
        }
        Command::Selfcheck => selfcheck(),
    }
}

fn parse_mode(s: &str) -> anyhow::Result<Mode> {
    match s {
        "upper" => Ok(Mode::Upper),
        "lower" => Ok(Mode::Lower),
        other => bail!("mode must be 'upper' or 'lower', got {other:?}"),
    }
}

fn parse_f64_list(s: &str) -> anyhow::Result<Vec<f64>> {
    s.split(',')
        .map(|x| {
            let x = x.trim();
            parse_rational(x)
                .map(|q| rational_to_f64(&q))
                .or_else(|_| x.parse::<f64>().map_err(|e| assouad::Error::InvalidParam(e.to_string())))
                .with_context(|| format!("bad number {x:?}"))
        })
        .collect()
}

#[derive(Serialize)]
struct LoopClassOut {
    nodes: usize,
    has_cycle: bool,
    maximal: bool,
}

#[derive(Serialize)]
struct IfsAnalyzeOut {
    closed: bool,
    certified_level: u32,
    node_count: usize,
    edge_count: usize,
    cv_counts_by_level: Vec<usize>,
    loop_classes: Vec<LoopClassOut>,
    all_columns_nonzero: bool,
    strong_separation: bool,
    dim_lower_bracket: [Labeled; 2],
    path_len: u32,
    lower_extremization_exact: bool,
    root_measure: String,
}

fn ifs_analyze(
    path: &Path,
    max_level: u32,
    max_cvs: usize,
    path_len: u32,
    dot: Option<&Path>,
    output: OutputFormat,
) -> anyhow::Result<()> {
    let bytes = std::fs::read(path)?;
    let cfg: IfsConfig = config::read_json(path)?;
    let ifs = cfg.build()?;
    let graph = build_transition_graph(&ifs, GraphBudget { max_level, max_cvs })?;
    let bounds = local_dim_bounds(&graph, path_len)?;
    if let Some(dot_path) = dot {
        std::fs::write(dot_path, graph_to_dot(&graph))?;
    }
    let hash = invocation_hash(
        &["ifs-analyze", &max_level.to_string(), &max_cvs.to_string(), &path_len.to_string()],
        Some(&bytes),
    );
    let results = IfsAnalyzeOut {
        closed: true,
        certified_level: graph.certified_level,
        node_count: graph.node_count(),
        edge_count: graph.edge_count(),
        cv_counts_by_level: graph.cv_counts_by_level.clone(),
        loop_classes: graph
            .loop_classes
            .iter()
            .map(|c| LoopClassOut { nodes: c.nodes.len(), has_cycle: c.has_cycle, maximal: c.maximal })
            .collect(),
        all_columns_nonzero: graph.edges.iter().all(|e| e.matrix.columns_nonzero()),
        strong_separation: ifs.strong_separation(),
        dim_lower_bracket: [Labeled::bound(bounds.lower), Labeled::bound(bounds.upper)],
        path_len,
        lower_extremization_exact: bounds.lower_exact,
        root_measure: rational_to_string(&net_interval_measure(&graph, &[graph.root])?),
    };
    let doc = Document { command: "ifs-analyze".into(), config_sha256: hash, seed: 0, results };
    let stdout = std::io::stdout();
    match output {
        OutputFormat::Json => emit_json(&doc, &mut stdout.lock())?,
        OutputFormat::Csv => {
            #[derive(Serialize)]
            struct Row {
                quantity: String,
                value: f64,
                provenance: String,
                config_sha256: String,
                seed: u64,
            }
            let rows = vec![
                Row {
                    quantity: "dim_lower_lower".into(),
                    value: doc.results.dim_lower_bracket[0].value,
                    provenance: "bound".into(),
                    config_sha256: doc.config_sha256.clone(),
                    seed: 0,
                },
                Row {
                    quantity: "dim_lower_upper".into(),
                    value: doc.results.dim_lower_bracket[1].value,
                    provenance: "bound".into(),
                    config_sha256: doc.config_sha256.clone(),
                    seed: 0,
                },
            ];
            emit_csv(&rows, &mut stdout.lock())?;
        }
    }
    Ok(())
}

fn graph_to_dot(graph: &TransitionGraph) -> String {
    let mut s = String::from("digraph transition {\n  rankdir=LR;\n");
    for (i, node) in graph.nodes.iter().enumerate() {
        let label = format!(
            "{}|V|={} t={}",
            if i == graph.root { "root " } else { "" },
            node.neighbours.len(),
            node.sibling_index
        );
        s.push_str(&format!("  n{i} [label=\"{label}\"];\n"));
    }
    for e in &graph.edges {
        s.push_str(&format!(
            "  n{} -> n{} [label=\"{}x{}\"];\n",
            e.from,
            e.to,
            e.matrix.rows(),
            e.matrix.cols()
        ));
    }
    s.push_str("}\n");
    s
}

#[derive(Serialize)]
struct BmOut {
    vss: bool,
    formula: Labeled,
    term_base: Labeled,
    term_height: Labeled,
    empirical_exponent: Labeled,
    gap: f64,
    depth: u32,
    quasi_equals_lower: bool,
}

fn bm(path: &Path, depth: u32, output: OutputFormat) -> anyhow::Result<()> {
    let bytes = std::fs::read(path)?;
    let cfg: CarpetConfig = config::read_json(path)?;
    let carpet = cfg.build()?;
    let dim = carpet.dim_lower()?;
    let emp = carpet.approximate_square_exponent(depth)?;
    let hash = invocation_hash(&["bm", &depth.to_string()], Some(&bytes));
    let results = BmOut {
        vss: carpet.vss,
        formula: Labeled::exact(dim.value),
        term_base: Labeled::exact(dim.term_base),
        term_height: Labeled::exact(dim.term_height),
        empirical_exponent: Labeled::estimate(emp),
        gap: (emp - dim.value).abs(),
        depth,
        quasi_equals_lower: dim.flat_spectrum,
    };
    let doc = Document { command: "bm".into(), config_sha256: hash, seed: 0, results };
    let stdout = std::io::stdout();
    match output {
        OutputFormat::Json => emit_json(&doc, &mut stdout.lock())?,
        OutputFormat::Csv => {
            #[derive(Serialize)]
            struct Row {
                quantity: String,
                value: f64,
                provenance: String,
                config_sha256: String,
                seed: u64,
            }
            let rows = vec![
                Row {
                    quantity: "formula".into(),
                    value: doc.results.formula.value,
                    provenance: "exact".into(),
                    config_sha256: doc.config_sha256.clone(),
                    seed: 0,
                },
                Row {
                    quantity: "empirical_exponent".into(),
                    value: doc.results.empirical_exponent.value,
                    provenance: "estimate".into(),
                    config_sha256: doc.config_sha256.clone(),
                    seed: 0,
                },
                Row {
                    quantity: "gap".into(),
                    value: doc.results.gap,
                    provenance: "estimate".into(),
                    config_sha256: doc.config_sha256.clone(),
                    seed: 0,
                },
            ];
            emit_csv(&rows, &mut stdout.lock())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MoranBoundOut {
    #[serde(skip_serializing_if = "Option::is_none")]
    moran_bound: Option<Labeled>,
    #[serde(skip_serializing_if = "Option::is_none")]
    uniformly_perfect_bound: Option<Labeled>,
    #[serde(skip_serializing_if = "Option::is_none")]
    affine_report: Option<AffineReportOut>,
}

#[derive(Serialize)]
struct AffineReportOut {
    block_len: u32,
    anchor_radius: f64,
    alpha_y: f64,
    c1: f64,
    c2: f64,
    c3: f64,
    all_conditions_passed: bool,
    conditions: Vec<String>,
    implied_bound: Labeled,
}

fn moran_bound(
    c1: Option<String>,
    c3: Option<String>,
    c: Option<String>,
    gamma: Option<String>,
    affine: Option<&Path>,
    depth: usize,
) -> anyhow::Result<()> {
    let mut out = MoranBoundOut { moran_bound: None, uniformly_perfect_bound: None, affine_report: None };
    let mut parts: Vec<String> = vec!["moran-bound".into()];
    let mut config_bytes: Option<Vec<u8>> = None;

    if let (Some(c1s), Some(c3s)) = (&c1, &c3) {
        let c1v = rational_to_f64(&parse_rational(c1s)?);
        let c3v = rational_to_f64(&parse_rational(c3s)?);
        out.moran_bound = Some(Labeled::bound(moran_lower_bound(c1v, c3v)?));
        parts.push(format!("c1={c1s}"));
        parts.push(format!("c3={c3s}"));
    }
    if let (Some(cs), Some(gs)) = (&c, &gamma) {
        let cv = rational_to_f64(&parse_rational(cs)?);
        let gv = rational_to_f64(&parse_rational(gs)?);
        out.uniformly_perfect_bound = Some(Labeled::bound(uniformly_perfect_bound(cv, gv)?));
        parts.push(format!("c={cs}"));
        parts.push(format!("gamma={gs}"));
    }
    if let Some(path) = affine {
        let bytes = std::fs::read(path)?;
        let cfg: AffineConfig = config::read_json(path)?;
        let ifs = cfg.build()?;
        let aff = assouad::affine::affinize(&ifs)?;
        let report = verify_moran(&aff.structure, depth);
        let implied = moran_lower_bound(
            aff.structure.c1.clamp(1e-12, 1.0 - 1e-12),
            aff.structure.c3.clamp(1e-12, 1.0 - 1e-12),
        )?;
        out.affine_report = Some(AffineReportOut {
            block_len: aff.block_len,
            anchor_radius: aff.anchor_radius,
            alpha_y: aff.alpha_y,
            c1: aff.structure.c1,
            c2: aff.structure.c2,
            c3: aff.structure.c3,
            all_conditions_passed: report.all_passed(),
            conditions: report
                .conditions
                .iter()
                .map(|c| format!("{}: {}", c.name, if c.passed { "pass" } else { "FAIL" }))
                .collect(),
            implied_bound: Labeled::bound(implied),
        });
        parts.push(format!("depth={depth}"));
        config_bytes = Some(bytes);
    }
    if out.moran_bound.is_none() && out.uniformly_perfect_bound.is_none() && out.affine_report.is_none()
    {
        bail!("provide --c1 with --c3, or --c with --gamma, or --affine CONFIG");
    }
    let part_refs: Vec<&str> = parts.iter().map(|s| s.as_str()).collect();
    let hash = invocation_hash(&part_refs, config_bytes.as_deref());
    let doc = Document { command: "moran-bound".into(), config_sha256: hash, seed: 0, results: out };
    emit_json(&doc, &mut std::io::stdout().lock())?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn estimate(
    path: &Path,
    deltas: &str,
    mode: &str,
    points: usize,
    min_level: u32,
    max_level: u32,
    seed: u64,
    output: OutputFormat,
) -> anyhow::Result<()> {
    let bytes = std::fs::read(path)?;
    let cfg: OracleConfig = config::read_json(path)?;
    let oracle = cfg.build(seed)?;
    let mode = parse_mode(mode)?;
    let deltas = parse_f64_list(deltas)?;
    let grid = GridSpec { points, min_level, max_level, max_ladder: 48, seed, parallel: true };
    let hash = invocation_hash(
        &[
            "estimate",
            &format!("{deltas:?}"),
            mode.as_str(),
            &points.to_string(),
            &min_level.to_string(),
            &max_level.to_string(),
        ],
        Some(&bytes),
    );
    let provenance =
        if oracle.is_exact() { Provenance::Estimate } else { Provenance::Bound };
    let mut rows = Vec::new();
    for &d in &deltas {
        let est = assouad::estimate::empirical_h(oracle.as_ref(), d, mode, &grid)?;
        let w = est.witness.clone().unwrap();
        rows.push(EstimateRow {
            theta_or_delta: d,
            mode: mode.as_str().into(),
            estimate_lower: est.value_lower,
            estimate_upper: est.value_upper,
            witness_x: w.x,
            witness_r_big: w.big_r,
            witness_r_small: w.small_r,
            samples: est.samples,
            seed,
            provenance: provenance.as_str().into(),
            config_sha256: hash.clone(),
        });
    }
    let stdout = std::io::stdout();
    match output {
        OutputFormat::Csv => emit_csv(&rows, &mut stdout.lock())?,
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct EstimateOut {
                rows: Vec<EstimateRow>,
                extrapolated_to_zero: Labeled,
            }
            let seq: Vec<(f64, f64)> = rows
                .iter()
                .map(|r| (r.theta_or_delta, (r.estimate_lower + r.estimate_upper) / 2.0))
                .collect();
            let doc = Document {
                command: "estimate".into(),
                config_sha256: hash.clone(),
                seed,
                results: EstimateOut {
                    extrapolated_to_zero: Labeled::estimate(
                        assouad::estimate::extrapolate_to_zero(&seq),
                    ),
                    rows,
                },
            };
            emit_json(&doc, &mut stdout.lock())?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn spectrum(
    path: &Path,
    thetas: &str,
    mode: &str,
    points: usize,
    min_level: u32,
    max_level: u32,
    seed: u64,
    output: OutputFormat,
) -> anyhow::Result<()> {
    let bytes = std::fs::read(path)?;
    let cfg: OracleConfig = config::read_json(path)?;
    let oracle = cfg.build(seed)?;
    let mode = parse_mode(mode)?;
    let thetas = parse_f64_list(thetas)?;
    let grid = GridSpec { points, min_level, max_level, max_ladder: 48, seed, parallel: true };
    let hash = invocation_hash(
        &["spectrum", &format!("{thetas:?}"), mode.as_str(), &points.to_string()],
        Some(&bytes),
    );
    let provenance = if oracle.is_exact() { Provenance::Estimate } else { Provenance::Bound };
    let mut rows = Vec::new();
    for &t in &thetas {
        let est = assouad::estimate::spectrum_point(oracle.as_ref(), t, mode, &grid)?;
        let w = est.witness.clone().unwrap();
        rows.push(EstimateRow {
            theta_or_delta: t,
            mode: mode.as_str().into(),
            estimate_lower: est.value_lower,
            estimate_upper: est.value_upper,
            witness_x: w.x,
            witness_r_big: w.big_r,
            witness_r_small: w.small_r,
            samples: est.samples,
            seed,
            provenance: provenance.as_str().into(),
            config_sha256: hash.clone(),
        });
    }
    let stdout = std::io::stdout();
    match output {
        OutputFormat::Csv => emit_csv(&rows, &mut stdout.lock())?,
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct SpectrumOut {
                rows: Vec<EstimateRow>,
                theta_to_one_extrapolation: Labeled,
            }
            let q = spectrum_to_one(oracle.as_ref(), &thetas, mode, &grid)?;
            let doc = Document {
                command: "spectrum".into(),
                config_sha256: hash.clone(),
                seed,
                results: SpectrumOut {
                    theta_to_one_extrapolation: Labeled::estimate(q.extrapolated),
                    rows,
                },
            };
            emit_json(&doc, &mut stdout.lock())?;
        }
    }
    Ok(())
}

fn numtheo(theta: &str, beta: &str, eta: f64, i_range: &str, output: OutputFormat) -> anyhow::Result<()> {
    let theta_v = rational_to_f64(&parse_rational(theta)?);
    let beta_v = rational_to_f64(&parse_rational(beta)?);
    let (lo, hi) = i_range
        .split_once(':')
        .context("i-range must look like 15:25")?;
    let lo: u32 = lo.parse()?;
    let hi: u32 = hi.parse()?;
    if lo > hi {
        bail!("empty i-range");
    }
    #[derive(Serialize)]
    struct NumTheoRow {
        i: u32,
        theta_i: f64,
        m: u32,
        n: u32,
        value: f64,
        slack_lo: f64,
        slack_hi: f64,
        rationality_warning: bool,
        provenance: String,
        config_sha256: String,
        seed: u64,
    }
    let hash = invocation_hash(
        &["numtheo", theta, beta, &eta.to_string(), i_range],
        None,
    );
    let mut rows = Vec::new();
    for i in lo..=hi {
        let theta_i = 2f64.powi(-(i as i32));
        let r = assouad::numtheo::find_mn(theta_v, beta_v, theta_i, eta)?;
        rows.push(NumTheoRow {
            i,
            theta_i,
            m: r.m,
            n: r.n,
            value: r.value,
            slack_lo: r.slack_lo,
            slack_hi: r.slack_hi,
            rationality_warning: r.rationality_warning,
            provenance: "exact".into(),
            config_sha256: hash.clone(),
            seed: 0,
        });
    }
    let stdout = std::io::stdout();
    match output {
        OutputFormat::Csv => emit_csv(&rows, &mut stdout.lock())?,
        OutputFormat::Json => {
            #[derive(Serialize)]
            struct NumTheoOut {
                rows: Vec<NumTheoRow>,
            }
            let doc = Document {
                command: "numtheo".into(),
                config_sha256: hash.clone(),
                seed: 0,
                results: NumTheoOut { rows },
            };
            emit_json(&doc, &mut stdout.lock())?;
        }
    }
    Ok(())
}

fn selfcheck() -> anyhow::Result<()> {
    use assouad::ifs::{SimilarityIfs, SimilarityMap};
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool| {
        let _ = writeln!(out, "{}: {}", name, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // Cantor bracket.
    {
        let field = assouad::field::NumberField::new(
            &[-3, 1],
            parse_rational("2")?,
            parse_rational("4")?,
        )?;
        let third = field.from_rational(parse_rational("1/3")?);
        let ifs = SimilarityIfs::new(
            field.clone(),
            vec![
                SimilarityMap { ratio: third.clone(), offset: field.zero() },
                SimilarityMap { ratio: third, offset: field.from_rational(parse_rational("2/3")?) },
            ],
            vec![parse_rational("1/2")?, parse_rational("1/2")?],
        )?;
        let graph = build_transition_graph(&ifs, GraphBudget::default())?;
        let b = local_dim_bounds(&graph, 20)?;
        let expected = 2f64.ln() / 3f64.ln();
        check(
            "cantor dim_L bracket",
            (b.lower - expected).abs() < 1e-9 && (b.upper - expected).abs() < 1e-9,
        );
    }
    // Carpet formula vs empirical.
    {
        let carpet = assouad::carpet::BmCarpet::new(
            2,
            3,
            vec![(0, 0), (0, 2), (1, 0), (1, 1)],
            vec![parse_rational("1/4")?; 4],
        )?;
        let d = carpet.dim_lower()?;
        let e = carpet.approximate_square_exponent(12)?;
        check("carpet formula vs empirical", (d.value - e).abs() <= 0.05);
    }
    // Cascade identity.
    {
        use assouad::oracle::MeasureOracle as _;
        let oracle = assouad::oracle::CascadeOracle::shipped();
        let p = oracle.params().clone();
        let m1 = oracle.ball_mass(
            &num::BigRational::from_integer(0.into()),
            &assouad::rational::pow2_inv(p.n_j[1]),
        )?;
        let m2 = oracle.ball_mass(
            &num::BigRational::from_integer(0.into()),
            &assouad::rational::pow2_inv(2 * p.n_j[1]),
        )?;
        let expected = num::BigRational::from_integer(1.into())
            / num::pow::pow(p.q_j[1].clone(), p.n_j[1] as usize);
        check("cascade exact ratio", &m1.upper / &m2.upper == expected);
    }
    // Triadic recursion.
    {
        use assouad::oracle::TriadicOracle;
        let ok = (0..=8u32).all(|k| {
            let lhs = TriadicOracle::raw_chain_mass(k);
            let branch = num::BigRational::from_integer((k as i64 + 1).into())
                * assouad::rational::pow_inv(3, k + 1);
            lhs == &(&branch + &branch) + &TriadicOracle::raw_chain_mass(k + 1)
        });
        check("triadic mass recursion", ok);
    }
    // Matrix bound.
    {
        let r = assouad::affine::matrix_bound_suite(300, &[2, 3], 0, 1e-9, true);
        check("matrix basis bound", r.violations == 0);
    }
    // Counting chain.
    {
        let pts: Vec<Vec<f64>> =
            vec![vec![0.1, 0.1], vec![0.4, 0.2], vec![0.8, 0.7], vec![0.3, 0.9], vec![0.6, 0.5]];
        let ok = assouad::counting::chain_holds(&pts, &[0.5, 0.5], 1.0, 0.05)?;
        check("covering/packing chain", ok);
    }
    // Lattice window.
    {
        let r = assouad::numtheo::find_mn(0.5, 1.0 / 3.0, 2f64.powi(-20), 0.05);
        check("lattice window", r.is_ok());
    }

    if failures > 0 {
        bail!("{failures} selfcheck(s) failed");
    }
    Ok(())
}

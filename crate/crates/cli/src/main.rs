//! `skmor`: benchmark generation, embedding verification, sketch handling,
//! basis construction, and the sweep studies. Every CSV a subcommand writes
//! starts with a `# {json}` line carrying the full invocation, so results
//! are reproducible from the file alone.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use nalgebra::{Complex, DMatrix};
use serde::Serialize;
use skmor::basis_gen::{greedy, GreedyConfig, GreedyMode};
use skmor::embeddings::EmbeddingKind;
use skmor::error::Result;
use skmor::problem::ParametricProblem;
use skmor::scalar::{FieldTag, Scalar};
use skmor::sketch::{sketch_snapshot, ThetaSketch};
use skmor_cli::report::{fmt, write_csv};
use skmor_cli::setup::{
    dual_pod_basis, make_u_embedding, parse_kind, pod_basis, with_problem, write_dense_mtx,
};
use skmor_cli::stats::REPORT_QUANTILES;
use skmor_cli::studies::{
    compliant_identity_gap, max_true_training_residual, run_correction_study, run_greedy_study,
    run_pod_study, run_projection_study, run_roundoff_study, CorrectionConfig, GreedyStudyConfig,
    PodStudyConfig, ProjectionConfig, RoundoffConfig,
};
use skmor_cli::verify::{embedding_failure_rate, VerifyConfig};

#[derive(Parser)]
#[command(name = "skmor", version, about = "Randomized sketching for parametric model reduction")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Measure the failure rate of an embedding on random subspaces.
    EmbedVerify(EmbedVerifyArgs),
    /// Generate a benchmark problem directory.
    Bench {
        #[command(subcommand)]
        which: BenchCmd,
    },
    /// Build, inspect, or export sketches.
    Sketch {
        #[command(subcommand)]
        which: SketchCmd,
    },
    /// Run a greedy basis search and record its trace.
    Greedy(GreedyArgs),
    /// Compute a POD basis and its error certificate.
    Pod(PodArgs),
    /// Sweep sketched-Galerkin accuracy over embedding sizes.
    StudyProjection(StudyProjectionArgs),
    /// Sweep primal-dual output corrections over embedding sizes.
    StudyPd(StudyPdArgs),
    /// Probe indicator stability near an exactly representable solution.
    StudyRoundoff(StudyRoundoffArgs),
    /// Compare classical and sketched greedy convergence.
    StudyGreedy(StudyGreedyArgs),
    /// Sweep sketched POD certificates over k and r.
    StudyPod(StudyPodArgs),
}

#[derive(Args, Serialize)]
struct EmbedVerifyArgs {
    #[arg(long, default_value = "gaussian")]
    kind: String,
    /// Rows; 0 picks the theoretical bound for (eps, delta, d).
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0.5)]
    eps: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 500)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum BenchCmd {
    ThermalBlock(ThermalArgs),
    Cloak(CloakArgs),
}

#[derive(Args, Serialize)]
struct ThermalArgs {
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, default_value_t = 16)]
    res: usize,
    #[arg(long, default_value_t = 2)]
    blocks: usize,
    #[arg(long, default_value_t = 0.1)]
    kappa_min: f64,
    #[arg(long, default_value_t = 10.0)]
    kappa_max: f64,
    #[arg(long, default_value_t = 20_000)]
    cap: usize,
    #[arg(long)]
    compliant: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct CloakArgs {
    #[arg(long, default_value_t = 10)]
    layers: usize,
    #[arg(long, default_value_t = 10.0)]
    kappa0: f64,
    #[arg(long, default_value_t = 80)]
    res: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum SketchCmd {
    Build(SketchBuildArgs),
    Info(SketchPathArgs),
    Dump(SketchDumpArgs),
}

#[derive(Args, Serialize)]
struct SketchBuildArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value = "gaussian")]
    kind: String,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Snapshots to solve for and append, sampled from the domain.
    #[arg(long)]
    train: usize,
    #[arg(long, default_value_t = 17)]
    train_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct SketchPathArgs {
    #[arg(long)]
    path: PathBuf,
}

#[derive(Args, Serialize)]
struct SketchDumpArgs {
    #[arg(long)]
    path: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct GreedyArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value = "classical")]
    mode: String,
    #[arg(long, default_value = "gaussian")]
    kind: String,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    embed_seed: u64,
    #[arg(long)]
    k_prime: Option<usize>,
    #[arg(long, default_value_t = 9)]
    gamma_seed_root: u64,
    #[arg(long, default_value_t = 1e-6)]
    tau: f64,
    #[arg(long, default_value_t = 200)]
    i_max: usize,
    #[arg(long, default_value_t = 100)]
    train: usize,
    #[arg(long, default_value_t = 17)]
    train_seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    save_basis: Option<PathBuf>,
    #[arg(long)]
    save_sketch: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct PodArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 31)]
    train_seed: u64,
    #[arg(long)]
    r: usize,
    /// Sketched POD when given; classical otherwise.
    #[arg(long)]
    kind: Option<String>,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 7)]
    embed_seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    save_basis: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct StudyProjectionArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    pod_m: usize,
    #[arg(long, default_value_t = 11)]
    pod_seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "gaussian")]
    kinds: Vec<String>,
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 50)]
    n_test: usize,
    #[arg(long, default_value_t = 1234)]
    test_seed: u64,
    #[arg(long, default_value_t = 0)]
    seed_root: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct StudyPdArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long)]
    r: usize,
    #[arg(long)]
    pod_m: usize,
    #[arg(long, default_value_t = 21)]
    pod_seed: u64,
    #[arg(long)]
    r_du: usize,
    #[arg(long)]
    dual_pod_m: usize,
    #[arg(long, default_value_t = 22)]
    dual_pod_seed: u64,
    #[arg(long, default_value_t = 30)]
    i_du: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    reps: usize,
    #[arg(long, default_value_t = 30)]
    n_test: usize,
    #[arg(long, default_value_t = 77)]
    test_seed: u64,
    #[arg(long, default_value_t = 5)]
    seed_root: u64,
    /// Also check the compliant-case identity s_spd == s_r (the problem
    /// must be compliant).
    #[arg(long)]
    check_compliant_identity: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct StudyRoundoffArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 20)]
    r: usize,
    #[arg(long, default_value_t = 13)]
    train_seed: u64,
    #[arg(long, default_value_t = 0)]
    probe_index: usize,
    #[arg(long, default_value = "gaussian")]
    kind: String,
    #[arg(long, default_value_t = 250)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    embed_seed: u64,
    #[arg(long, default_value_t = 8)]
    direction_seed: u64,
    #[arg(long, default_value_t = 15)]
    decades: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct StudyGreedyArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 50)]
    r_max: usize,
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long, default_value_t = 100)]
    train: usize,
    #[arg(long, default_value_t = 17)]
    train_seed: u64,
    #[arg(long, default_value = "gaussian")]
    kind: String,
    #[arg(long, default_value_t = 400)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    embed_seed: u64,
    #[arg(long)]
    k_prime: Option<usize>,
    #[arg(long, default_value_t = 9)]
    gamma_seed_root: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize)]
struct StudyPodArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 200)]
    m: usize,
    #[arg(long, default_value_t = 31)]
    train_seed: u64,
    #[arg(long, default_value_t = 20)]
    r_fixed: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    ks: Vec<usize>,
    #[arg(long)]
    k_fixed: usize,
    #[arg(long, value_delimiter = ',', required = true)]
    rs: Vec<usize>,
    #[arg(long, default_value = "gaussian")]
    kind: String,
    #[arg(long, default_value_t = 7)]
    embed_seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() {
    env_logger::init();
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::EmbedVerify(a) => cmd_embed_verify(a),
        Cmd::Bench { which: BenchCmd::ThermalBlock(a) } => cmd_bench_thermal(a),
        Cmd::Bench { which: BenchCmd::Cloak(a) } => cmd_bench_cloak(a),
        Cmd::Sketch { which: SketchCmd::Build(a) } => cmd_sketch_build(a),
        Cmd::Sketch { which: SketchCmd::Info(a) } => cmd_sketch_info(a),
        Cmd::Sketch { which: SketchCmd::Dump(a) } => cmd_sketch_dump(a),
        Cmd::Greedy(a) => cmd_greedy(a),
        Cmd::Pod(a) => cmd_pod(a),
        Cmd::StudyProjection(a) => {
            with_problem(&a.problem, |p| study_projection(&p, &a), |p| study_projection(&p, &a))
        }
        Cmd::StudyPd(a) => with_problem(&a.problem, |p| study_pd(&p, &a), |p| study_pd(&p, &a)),
        Cmd::StudyRoundoff(a) => {
            with_problem(&a.problem, |p| study_roundoff(&p, &a), |p| study_roundoff(&p, &a))
        }
        Cmd::StudyGreedy(a) => {
            with_problem(&a.problem, |p| study_greedy(&p, &a), |p| study_greedy(&p, &a))
        }
        Cmd::StudyPod(a) => {
            with_problem(&a.problem, |p| study_pod(&p, &a), |p| study_pod(&p, &a))
        }
    }
}

fn cmd_embed_verify(a: EmbedVerifyArgs) -> Result<()> {
    let kind = parse_kind(&a.kind)?;
    let k = if a.k > 0 {
        a.k
    } else {
        match kind {
            EmbeddingKind::Gaussian | EmbeddingKind::Rademacher => {
                skmor::embeddings::bounds::gaussian_rademacher_bound(
                    a.eps,
                    a.delta,
                    a.d,
                    FieldTag::Real,
                )?
            }
            EmbeddingKind::Psrht => {
                skmor::embeddings::bounds::psrht_bound(a.eps, a.delta, a.d, a.n)?
            }
            EmbeddingKind::Identity => a.n,
        }
    };
    let cfg = VerifyConfig {
        kind,
        k,
        n: a.n,
        d: a.d,
        eps: a.eps,
        trials: a.trials,
        seed_root: a.seed,
    };
    let out = embedding_failure_rate(&cfg)?;
    let record = serde_json::json!({ "config": cfg, "outcome": out });
    println!("{record}");
    Ok(())
}

fn cmd_bench_thermal(a: ThermalArgs) -> Result<()> {
    let p = skmor::benchmarks::build_thermal_block(&skmor::benchmarks::ThermalBlockConfig {
        dim: a.dim,
        blocks_per_axis: a.blocks,
        res: a.res,
        dof_cap: a.cap,
        kappa_min: a.kappa_min,
        kappa_max: a.kappa_max,
        compliant_output: a.compliant,
    })?;
    let path = skmor::descriptor::emit_problem(&p, p.space.ru(), "thermal-block", &a.out)?;
    println!(
        "thermal block: n = {}, operator terms = {}, parameters = {} -> {}",
        p.dim(),
        p.a.num_terms(),
        p.domain.dim(),
        path.display()
    );
    Ok(())
}

fn cmd_bench_cloak(a: CloakArgs) -> Result<()> {
    let p = skmor::benchmarks::build_cloak(&skmor::benchmarks::CloakConfig {
        layers: a.layers,
        kappa0: a.kappa0,
        res: a.res,
        ..skmor::benchmarks::CloakConfig::default()
    })?;
    let path = skmor::descriptor::emit_problem(&p, p.space.ru(), "cloak", &a.out)?;
    println!(
        "cloak: n = {}, operator terms = {}, parameters = {} -> {}",
        p.dim(),
        p.a.num_terms(),
        p.domain.dim(),
        path.display()
    );
    Ok(())
}

fn cmd_sketch_build(a: SketchBuildArgs) -> Result<()> {
    fn build<T: Scalar>(p: &ParametricProblem<T>, a: &SketchBuildArgs) -> Result<()> {
        let kind = parse_kind(&a.kind)?;
        let theta = make_u_embedding(p, kind, a.k, a.seed)?;
        let mut sketch = ThetaSketch::new(p, &theta)?;
        for mu in &p.domain.sample(a.train_seed, a.train) {
            let sol = p.solve_full(mu)?;
            sketch.append(sketch_snapshot(p, &theta, &sol.u)?)?;
        }
        sketch.save(&a.out)?;
        println!("sketch: k = {}, snapshots = {} -> {}", sketch.k(), sketch.r(), a.out.display());
        Ok(())
    }
    with_problem(&a.problem, |p| build(&p, &a), |p| build(&p, &a))
}

fn cmd_sketch_info(a: SketchPathArgs) -> Result<()> {
    fn describe<T: Scalar>(s: &ThetaSketch<T>, field: &str) {
        println!(
            "field = {field}, k = {}, snapshots = {}, operator terms = {}, rhs terms = {}",
            s.k(),
            s.r(),
            s.num_operator_terms(),
            s.num_rhs_terms()
        );
    }
    match ThetaSketch::<f64>::load(&a.path) {
        Ok(s) => describe(&s, "real"),
        Err(_) => describe(&ThetaSketch::<Complex<f64>>::load(&a.path)?, "complex"),
    }
    Ok(())
}

fn cmd_sketch_dump(a: SketchDumpArgs) -> Result<()> {
    fn dump<T: Scalar>(s: &ThetaSketch<T>, dir: &PathBuf) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_dense_mtx(&dir.join("ub.mtx"), &s.ub_matrix())?;
        for i in 0..s.num_operator_terms() {
            write_dense_mtx(&dir.join(format!("v_{i}.mtx")), &s.v_factor(i))?;
        }
        for i in 0..s.num_rhs_terms() {
            let b = s.b_factor(i);
            let m = DMatrix::from_iterator(b.len(), 1, b.iter().cloned());
            write_dense_mtx(&dir.join(format!("b_{i}.mtx")), &m)?;
        }
        for i in 0..s.num_output_terms() {
            let l = s.l_factor(i);
            let m = DMatrix::from_iterator(l.len(), 1, l.iter().cloned());
            write_dense_mtx(&dir.join(format!("l_{i}.mtx")), &m)?;
        }
        Ok(())
    }
    match ThetaSketch::<f64>::load(&a.path) {
        Ok(s) => dump(&s, &a.out)?,
        Err(_) => dump(&ThetaSketch::<Complex<f64>>::load(&a.path)?, &a.out)?,
    }
    println!("dumped sketch factors to {}", a.out.display());
    Ok(())
}

fn cmd_greedy(a: GreedyArgs) -> Result<()> {
    fn run_one<T: Scalar>(p: &ParametricProblem<T>, a: &GreedyArgs) -> Result<()> {
        let train = p.domain.sample(a.train_seed, a.train);
        let cfg = GreedyConfig {
            tau: a.tau,
            i_max: a.i_max,
            two_level: a.k_prime,
            gamma_seed_root: a.gamma_seed_root,
        };
        let state = match a.mode.as_str() {
            "classical" => greedy(p, &train, GreedyMode::Classical, None, &cfg)?,
            "sketched" => {
                let theta = make_u_embedding(p, parse_kind(&a.kind)?, a.k, a.embed_seed)?;
                greedy(p, &train, GreedyMode::Sketched, Some(&theta), &cfg)?
            }
            other => {
                return Err(skmor::error::Error::argument(format!(
                    "unknown mode {other:?}; expected classical or sketched"
                )))
            }
        };
        let mut rows = Vec::new();
        for (i, &err) in state.max_error_trace.iter().enumerate() {
            let sel = state.selected.get(i).map(|s| s.to_string()).unwrap_or_default();
            rows.push(vec![i.to_string(), fmt(err), sel]);
        }
        write_csv(&a.out, a, &["iteration", "max_indicator", "selected"], &rows)?;
        for d in &state.diagnostics {
            println!("note: {d}");
        }
        if let Some(path) = &a.save_basis {
            write_dense_mtx(path, &state.basis)?;
        }
        if let Some(path) = &a.save_sketch {
            match &state.sketch {
                Some(s) => s.save(path)?,
                None => println!("note: classical mode produces no sketch to save"),
            }
        }
        println!(
            "greedy: {} selections, final max indicator {:.3e} -> {}",
            state.selected.len(),
            state.max_error_trace.last().copied().unwrap_or(f64::NAN),
            a.out.display()
        );
        Ok(())
    }
    with_problem(&a.problem, |p| run_one(&p, &a), |p| run_one(&p, &a))
}

fn cmd_pod(a: PodArgs) -> Result<()> {
    fn run_one<T: Scalar>(p: &ParametricProblem<T>, a: &PodArgs) -> Result<()> {
        let mus = p.domain.sample(a.train_seed, a.m);
        let snaps = skmor_cli::setup::snapshot_matrix(p, &mus)?;
        let mut rows = Vec::new();
        let basis: DMatrix<T>;
        match &a.kind {
            None => {
                let (b, delta) = skmor::basis_gen::classical_pod(&snaps, &p.space, a.r)?;
                rows.push(vec!["delta_pod".to_string(), "0".to_string(), fmt(delta)]);
                basis = b;
            }
            Some(kind) => {
                let theta = make_u_embedding(p, parse_kind(kind)?, a.k, a.embed_seed)?;
                let mut sketch = ThetaSketch::new(p, &theta)?;
                for j in 0..snaps.ncols() {
                    let col = snaps.column(j).into_owned();
                    sketch.append(sketch_snapshot(p, &theta, &col)?)?;
                }
                let pod = skmor::basis_gen::sketched_pod(&sketch, a.r)?;
                rows.push(vec!["delta_pod".to_string(), "0".to_string(), fmt(pod.delta_pod)]);
                for (i, ev) in pod.eigenvalues.iter().enumerate() {
                    rows.push(vec!["eigenvalue".to_string(), i.to_string(), fmt(*ev)]);
                }
                basis = &snaps * &pod.t_r;
            }
        }
        write_csv(&a.out, a, &["quantity", "index", "value"], &rows)?;
        if let Some(path) = &a.save_basis {
            write_dense_mtx(path, &basis)?;
        }
        println!("pod: r = {}, m = {} -> {}", basis.ncols(), a.m, a.out.display());
        Ok(())
    }
    with_problem(&a.problem, |p| run_one(&p, &a), |p| run_one(&p, &a))
}

fn study_projection<T: Scalar>(p: &ParametricProblem<T>, a: &StudyProjectionArgs) -> Result<()> {
    let basis = pod_basis(p, a.pod_seed, a.pod_m, a.r)?;
    let kinds: Result<Vec<EmbeddingKind>> = a.kinds.iter().map(|s| parse_kind(s)).collect();
    let cfg = ProjectionConfig {
        kinds: kinds?,
        ks: a.ks.clone(),
        reps: a.reps,
        n_test: a.n_test,
        test_seed: a.test_seed,
        seed_root: a.seed_root,
        quantiles: REPORT_QUANTILES.to_vec(),
    };
    let out = run_projection_study(p, &basis, &cfg)?;
    let rows: Vec<Vec<String>> = out
        .rows
        .iter()
        .map(|r| {
            vec![r.kind.clone(), r.k.to_string(), r.quantile.to_string(), fmt(r.e_p), fmt(r.delta_p)]
        })
        .collect();
    write_csv(&a.out, a, &["kind", "k", "quantile", "e_p", "delta_p"], &rows)?;
    for (kind, k, rep, n) in &out.failures {
        println!("note: {n} reduced solves failed for {kind} k = {k}, repetition {rep}");
    }
    println!(
        "projection study: classical e_P = {:.3e}, delta_P = {:.3e} -> {}",
        out.classical_e_p,
        out.classical_delta_p,
        a.out.display()
    );
    Ok(())
}

fn study_pd<T: Scalar>(p: &ParametricProblem<T>, a: &StudyPdArgs) -> Result<()> {
    let u_r = pod_basis(p, a.pod_seed, a.pod_m, a.r)?;
    let u_du = dual_pod_basis(p, a.dual_pod_seed, a.dual_pod_m, a.r_du)?;
    let cfg = CorrectionConfig {
        kind: EmbeddingKind::Gaussian,
        ks: a.ks.clone(),
        reps: a.reps,
        i_du: a.i_du,
        n_test: a.n_test,
        test_seed: a.test_seed,
        seed_root: a.seed_root,
        quantiles: REPORT_QUANTILES.to_vec(),
    };
    let out = run_correction_study(p, &u_r, &u_du, &cfg)?;
    let rows: Vec<Vec<String>> = out
        .rows
        .iter()
        .map(|r| {
            vec![r.variant.to_string(), r.k.to_string(), r.quantile.to_string(), fmt(r.d_p)]
        })
        .collect();
    write_csv(&a.out, a, &["variant", "k", "quantile", "d_p"], &rows)?;
    println!(
        "pd study: median sketched correction decays with fitted slope {:.3}; \
         exact correction d_P = {:.3e} -> {}",
        out.slope_spd,
        out.d_p_pd,
        a.out.display()
    );
    if a.check_compliant_identity {
        let k = a.ks.iter().copied().max().expect("ks is required nonempty");
        let gap = compliant_identity_gap(p, &u_r, k, a.seed_root, a.n_test, a.test_seed)?;
        println!("compliant identity gap: {gap:.3e}");
    }
    Ok(())
}

fn study_roundoff<T: Scalar>(p: &ParametricProblem<T>, a: &StudyRoundoffArgs) -> Result<()> {
    let cfg = RoundoffConfig {
        r: a.r,
        train_seed: a.train_seed,
        probe_index: a.probe_index,
        kind: parse_kind(&a.kind)?,
        k: a.k,
        embed_seed: a.embed_seed,
        direction_seed: a.direction_seed,
        decades: a.decades,
    };
    let rows = run_roundoff_study(p, &cfg)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![fmt(r.distance), fmt(r.true_direct), fmt(r.classical), fmt(r.sketched)])
        .collect();
    write_csv(&a.out, a, &["distance", "true_direct", "classical", "sketched"], &table)?;
    println!("roundoff study: {} distances -> {}", rows.len(), a.out.display());
    Ok(())
}

fn study_greedy<T: Scalar>(p: &ParametricProblem<T>, a: &StudyGreedyArgs) -> Result<()> {
    let cfg = GreedyStudyConfig {
        r_max: a.r_max,
        tau: a.tau,
        n_train: a.train,
        train_seed: a.train_seed,
        kind: parse_kind(&a.kind)?,
        k: a.k,
        embed_seed: a.embed_seed,
        k_prime: a.k_prime,
        gamma_seed_root: a.gamma_seed_root,
    };
    let out = run_greedy_study(p, &cfg)?;
    let mut rows = Vec::new();
    for (label, state) in [("classical", &out.classical), ("sketched", &out.sketched)] {
        for (i, &err) in state.max_error_trace.iter().enumerate() {
            let sel = state.selected.get(i).map(|s| s.to_string()).unwrap_or_default();
            rows.push(vec![label.to_string(), i.to_string(), fmt(err), sel]);
        }
    }
    write_csv(&a.out, a, &["mode", "iteration", "max_indicator", "selected"], &rows)?;
    let rc = max_true_training_residual(p, &out.classical.basis, &out.train)?;
    let rs = max_true_training_residual(p, &out.sketched.basis, &out.train)?;
    println!(
        "greedy study: final max true training residual {rc:.3e} (classical) vs {rs:.3e} \
         (sketched) -> {}",
        a.out.display()
    );
    Ok(())
}

fn study_pod<T: Scalar>(p: &ParametricProblem<T>, a: &StudyPodArgs) -> Result<()> {
    let cfg = PodStudyConfig {
        m: a.m,
        train_seed: a.train_seed,
        r_fixed: a.r_fixed,
        ks: a.ks.clone(),
        k_fixed: a.k_fixed,
        rs: a.rs.clone(),
        kind: parse_kind(&a.kind)?,
        embed_seed: a.embed_seed,
    };
    let rows = run_pod_study(p, &cfg)?;
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.sweep.to_string(),
                r.k.to_string(),
                r.r.to_string(),
                fmt(r.delta_pod),
                fmt(r.true_msq),
                fmt(r.classical_msq),
                fmt(r.classical_delta),
            ]
        })
        .collect();
    write_csv(
        &a.out,
        a,
        &["sweep", "k", "r", "delta_pod", "true_msq", "classical_msq", "classical_delta"],
        &table,
    )?;
    println!("pod study: {} rows -> {}", rows.len(), a.out.display());
    Ok(())
}

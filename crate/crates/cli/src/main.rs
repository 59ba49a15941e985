//! Command-line front end: builds the horizon channels, runs verification
//! suites, sweeps capacity curves, and emits CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage/parameter error,
//! 3 I/O error.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use bhchan::capacity::{
    capacity_cloner, clone_fidelity, coherent_information, optimize_coherent_information,
    ppt_check, unruh_capacity, ChannelPair,
};
use bhchan::channels::{
    block_weights, choi_of, cloning_apply, cloning_complement_apply, depolarizing_apply,
    fit_block_depolarizing_q, fit_depolarizing_q, kraus_from_choi, random_qubit_states,
    stinespring_from_kraus, DualRailQubit, QubitMap, TwoRailChannel,
};
use bhchan::fock::{absorb_isometry_closed_form, unruh_isometry, AbsorbParam, FockCutoff, SqueezeParam};
use bhchan::par;
use bhchan::tensor::{cr, entropy_of_matrix, max_abs, CMat};
use bhchan::verify::{run_all, run_suite, CheckResult, Tolerances, SUITE_NAMES};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "bhchan", version, about = "Black-hole transmission channels toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sweep the quantum-capacity curve of the reflecting channel over z.
    CapacityCurve(CurveArgs),
    /// Extract and analyze the direct-sum block structure of a channel.
    Blocks(BlocksArgs),
    /// Run the verification suites.
    Verify(VerifyArgs),
    /// Print output state, entropies, and fidelities of a closed-form channel.
    ChannelInfo(InfoArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ChannelKind {
    Reflecting,
    Absorbing,
    HawkingVacuum,
    Cloning,
    Depolarizing,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct CurveArgs {
    #[arg(long, value_enum, default_value = "reflecting")]
    channel: ChannelKind,
    #[arg(long, default_value_t = 0.0)]
    z_min: f64,
    #[arg(long, default_value_t = 0.9)]
    z_max: f64,
    #[arg(long, default_value_t = 10)]
    steps: usize,
    /// Target accuracy of the numeric-vs-closed-form comparison.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Per-mode occupation cutoff override (default: derived from z and tol).
    #[arg(long)]
    cutoff: Option<usize>,
    /// Cap on the total-occupation blocks kept in the numeric channel.
    #[arg(long)]
    lmax: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
}

#[derive(Args)]
struct BlocksArgs {
    #[arg(long, value_enum)]
    channel: ChannelKind,
    #[arg(long, default_value_t = 0.5)]
    z: f64,
    #[arg(long, default_value_t = 0.5)]
    g: f64,
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    lmax: Option<usize>,
    /// Cross-block coherence / block-mass tolerance for the extraction.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite name (su2, isometry, blocks, capacity, ppt, symmetric, dsum,
    /// clone, absorbing); all suites when omitted.
    #[arg(long)]
    suite: Option<String>,
    /// Override for the truncation-limited tolerance class.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Args)]
struct InfoArgs {
    #[arg(long, value_enum)]
    channel: ChannelKind,
    #[arg(long, default_value_t = 2)]
    ell: usize,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    q: f64,
    /// Input dual-rail amplitudes as "a,b" (normalized by the tool).
    state: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Usage(String),
    Verification(String),
    Io(String),
}

impl From<bhchan::Error> for Failure {
    fn from(e: bhchan::Error) -> Self {
        match e {
            bhchan::Error::InvalidParameter(_) | bhchan::Error::DimensionMismatch(_) => {
                Failure::Usage(e.to_string())
            }
            _ => Failure::Verification(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::CapacityCurve(a) => cmd_capacity_curve(a),
        Cmd::Blocks(a) => cmd_blocks(a),
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::ChannelInfo(a) => cmd_channel_info(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification(msg)) => {
            eprintln!("verification failure: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("i/o error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn emit(out: &Option<PathBuf>, content: &str) -> Result<(), Failure> {
    match out {
        Some(path) => {
            std::fs::write(path, content).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(content.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

/// JSON with fixed (alphabetical) key order and every float in scientific
/// notation with 15 significant digits.
fn render_json(value: &Value) -> String {
    struct SciFormatter {
        inner: serde_json::ser::PrettyFormatter<'static>,
    }
    macro_rules! fwd {
        ($name:ident) => {
            fn $name<W: ?Sized + std::io::Write>(&mut self, w: &mut W) -> std::io::Result<()> {
                self.inner.$name(w)
            }
        };
        ($name:ident, first) => {
            fn $name<W: ?Sized + std::io::Write>(
                &mut self,
                w: &mut W,
                first: bool,
            ) -> std::io::Result<()> {
                self.inner.$name(w, first)
            }
        };
    }
    impl serde_json::ser::Formatter for SciFormatter {
        fn write_f64<W: ?Sized + std::io::Write>(
            &mut self,
            w: &mut W,
            value: f64,
        ) -> std::io::Result<()> {
            write!(w, "{value:.14e}")
        }
        fwd!(begin_array);
        fwd!(end_array);
        fwd!(begin_array_value, first);
        fwd!(end_array_value);
        fwd!(begin_object);
        fwd!(end_object);
        fwd!(begin_object_key, first);
        fwd!(begin_object_value);
        fwd!(end_object_value);
    }
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(
        &mut buf,
        SciFormatter { inner: serde_json::ser::PrettyFormatter::new() },
    );
    serde::Serialize::serialize(value, &mut ser).expect("JSON serialization");
    let mut s = String::from_utf8(buf).expect("UTF-8 JSON");
    s.push('\n');
    s
}

fn sci(x: f64) -> String {
    format!("{x:.14e}")
}

struct CurvePoint {
    z: f64,
    q_closed: f64,
    q_numeric: f64,
    n_max: usize,
    ell_max: usize,
    tail_bound: f64,
}

fn curve_point(z: f64, args: &CurveArgs) -> Result<CurvePoint, Failure> {
    let series = unruh_capacity(z, 1e-12)?;
    let cutoff = match args.cutoff {
        Some(n) => FockCutoff::new(n)?,
        None => FockCutoff::for_tolerance(z, args.tol * 1e-2),
    };
    let iso = unruh_isometry(&SqueezeParam::from_z(z)?, &cutoff)?;
    let rail = TwoRailChannel::from_isometry(&iso)?;
    let ell_cap = args.lmax.unwrap_or(usize::MAX);
    let ell_max = rail.max_total_occupation().min(ell_cap);
    let pair = ChannelPair::from_two_rail_capped(&rail, ell_cap);
    let step_floor = (args.tol.sqrt() * 0.1).clamp(1e-8, 1e-2);
    let numeric = optimize_coherent_information(&pair, step_floor)?;
    let (_, weight_tail) = block_weights(z, ell_max)?;
    Ok(CurvePoint {
        z,
        q_closed: series.value,
        q_numeric: numeric.value,
        n_max: cutoff.n_max,
        ell_max,
        tail_bound: series.tail_bound + weight_tail,
    })
}

fn cmd_capacity_curve(args: CurveArgs) -> Result<(), Failure> {
    if args.channel != ChannelKind::Reflecting {
        return Err(Failure::Usage("capacity-curve supports --channel reflecting".into()));
    }
    if args.steps < 1 {
        return Err(Failure::Usage("--steps must be ≥ 1".into()));
    }
    if !(0.0..1.0).contains(&args.z_min) || !(0.0..1.0).contains(&args.z_max) || args.z_min > args.z_max
    {
        return Err(Failure::Usage("need 0 ≤ z-min ≤ z-max < 1".into()));
    }
    let zs: Vec<f64> = if args.steps == 1 {
        vec![args.z_min]
    } else {
        (0..args.steps)
            .map(|i| args.z_min + (args.z_max - args.z_min) * i as f64 / (args.steps - 1) as f64)
            .collect()
    };
    let points = par::map_ordered(zs, |z| curve_point(z, &args))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;

    let content = match args.format {
        Format::Csv => {
            let mut s = String::from("z,q_closed,q_numeric,abs_err,n_max,ell_max,tail_bound\n");
            for p in &points {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    sci(p.z),
                    sci(p.q_closed),
                    sci(p.q_numeric),
                    sci((p.q_numeric - p.q_closed).abs()),
                    p.n_max,
                    p.ell_max,
                    sci(p.tail_bound),
                ));
            }
            s
        }
        Format::Json => render_json(&json!({
            "channel": "reflecting",
            "params": {"z_min": args.z_min, "z_max": args.z_max, "steps": args.steps, "tol": args.tol},
            "points": points.iter().map(|p| json!({
                "z": p.z,
                "q_closed": p.q_closed,
                "q_numeric": p.q_numeric,
                "abs_err": (p.q_numeric - p.q_closed).abs(),
                "n_max": p.n_max,
                "ell_max": p.ell_max,
                "tail_bound": p.tail_bound,
            })).collect::<Vec<_>>(),
        })),
    };
    emit(&args.out, &content)
}

/// Complement-aware channel pair for an extracted block, routed through
/// Choi → Kraus → Stinespring.
fn block_stinespring(map: &QubitMap) -> Result<bhchan::channels::StinespringIsometry, Failure> {
    let kraus = kraus_from_choi(&map.choi()?)?;
    Ok(stinespring_from_kraus(&kraus)?)
}

struct BlockReport {
    ell: usize,
    weight: f64,
    dim: usize,
    fitted_q: Option<f64>,
    fit_residual: Option<f64>,
    cloner_residual: Option<f64>,
    block_min_pt: f64,
    comp_min_pt: f64,
    coherent_info_max: f64,
}

fn analyze_blocks(
    rail: &TwoRailChannel,
    ell_max: usize,
    tol: f64,
    fit_depolarizing: bool,
) -> Result<(Vec<BlockReport>, f64), Failure> {
    use rand::SeedableRng;
    let block_channel = rail.to_block_channel(ell_max, tol)?;
    let mut reports = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xb10c5);
    let probes = random_qubit_states(&mut rng, 10);
    for b in &block_channel.blocks {
        if b.ell == 0 {
            continue;
        }
        let (fitted_q, fit_residual) = if fit_depolarizing {
            let (q, r) = if b.ell == 1 {
                fit_depolarizing_q(&b.map)?
            } else {
                fit_block_depolarizing_q(b.ell, &b.map)?
            };
            (Some(q), Some(r))
        } else {
            (None, None)
        };
        let cloner_residual = if fit_depolarizing {
            None
        } else {
            let mut dev = 0.0f64;
            for probe in &probes {
                dev = dev.max(max_abs(&(b.map.apply(probe)? - cloning_apply(b.ell, probe)?)));
            }
            Some(dev)
        };
        let (_, block_min_pt) = ppt_check(&b.map.choi()?, 1e-10)?;
        let comp_min_pt = match &b.env_map {
            Some(env) if !fit_depolarizing => ppt_check(&env.choi()?, 1e-10)?.1,
            _ => {
                let iso = block_stinespring(&b.map)?;
                let comp_choi = choi_of(|rho| iso.complement_apply(rho), 2)?;
                ppt_check(&comp_choi, 1e-10)?.1
            }
        };
        let iso = block_stinespring(&b.map)?;
        let pair = ChannelPair::from_isometry(&iso);
        let coherent_info_max = optimize_coherent_information(&pair, 1e-6)?.value;
        reports.push(BlockReport {
            ell: b.ell,
            weight: b.weight,
            dim: b.ell + 1,
            fitted_q,
            fit_residual,
            cloner_residual,
            block_min_pt,
            comp_min_pt,
            coherent_info_max,
        });
    }
    Ok((reports, block_channel.tail_mass))
}

fn blocks_content(
    args: &BlocksArgs,
    params: Value,
    reports: &[BlockReport],
    tail_mass: f64,
) -> String {
    match args.format {
        Format::Csv => {
            let mut s = String::from(
                "ell,weight,dim,fitted_q,fit_residual,cloner_residual,block_min_pt_eig,complement_min_pt_eig,coherent_info_max\n",
            );
            let opt = |v: Option<f64>| v.map(sci).unwrap_or_default();
            for r in reports {
                s.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    r.ell,
                    sci(r.weight),
                    r.dim,
                    opt(r.fitted_q),
                    opt(r.fit_residual),
                    opt(r.cloner_residual),
                    sci(r.block_min_pt),
                    sci(r.comp_min_pt),
                    sci(r.coherent_info_max),
                ));
            }
            s
        }
        Format::Json => render_json(&json!({
            "channel": match args.channel { ChannelKind::Reflecting => "reflecting", _ => "absorbing" },
            "params": params,
            "blocks": reports.iter().map(|r| json!({
                "ell": r.ell,
                "weight": r.weight,
                "dim": r.dim,
                "fitted_q": r.fitted_q,
                "fit_residual": r.fit_residual,
                "cloner_residual": r.cloner_residual,
                "ppt": {
                    "block_min_pt_eigenvalue": r.block_min_pt,
                    "block_is_ppt": r.block_min_pt >= -1e-10,
                    "complement_min_pt_eigenvalue": r.comp_min_pt,
                    "complement_is_ppt": r.comp_min_pt >= -1e-10,
                },
                "coherent_info_max": r.coherent_info_max,
            })).collect::<Vec<_>>(),
            "tail_mass": tail_mass,
        })),
    }
}

fn cmd_blocks(args: BlocksArgs) -> Result<(), Failure> {
    match args.channel {
        ChannelKind::Reflecting => {
            if !(0.0..1.0).contains(&args.z) {
                return Err(Failure::Usage(format!("z = {} outside [0, 1)", args.z)));
            }
            let cutoff = match args.cutoff {
                Some(n) => FockCutoff::new(n)?,
                None => FockCutoff::for_tolerance(args.z, 1e-12),
            };
            let ell_max = args.lmax.unwrap_or(6);
            let iso = unruh_isometry(&SqueezeParam::from_z(args.z)?, &cutoff)?;
            let rail = TwoRailChannel::from_isometry(&iso)?;
            let (reports, tail) = analyze_blocks(&rail, ell_max, args.tol, false)?;
            let params = json!({"z": args.z, "n_max": cutoff.n_max, "ell_max": ell_max, "tol": args.tol});
            emit(&args.out, &blocks_content(&args, params, &reports, tail))
        }
        ChannelKind::Absorbing => {
            if args.g <= 0.0 {
                return Err(Failure::Usage(format!("g = {} must be > 0", args.g)));
            }
            let cutoff = FockCutoff::new(args.cutoff.unwrap_or(12))?;
            let ell_max = args.lmax.unwrap_or(4);
            let iso = absorb_isometry_closed_form(&AbsorbParam::new(args.g)?, &cutoff)?;
            let rail = TwoRailChannel::from_isometry(&iso)?;
            let (reports, tail) = analyze_blocks(&rail, ell_max, args.tol, true)?;
            let params = json!({"g": args.g, "n_max": cutoff.n_max, "ell_max": ell_max, "tol": args.tol});
            emit(&args.out, &blocks_content(&args, params, &reports, tail))
        }
        _ => Err(Failure::Usage("blocks supports --channel reflecting|absorbing".into())),
    }
}

fn cmd_verify(args: VerifyArgs) -> Result<(), Failure> {
    let mut tols = Tolerances::default();
    if let Some(t) = args.tol {
        if t <= 0.0 {
            return Err(Failure::Usage("--tol must be positive".into()));
        }
        tols = tols.with_truncation(t);
    }
    let checks: Vec<CheckResult> = match &args.suite {
        Some(name) => run_suite(name, &tols)?,
        None => run_all(&tols)?,
    };
    let passed = checks.iter().all(|c| c.passed);
    let content = match args.format {
        Format::Csv => {
            let mut s = String::from("suite,check,passed,measured,tolerance\n");
            for c in &checks {
                s.push_str(&format!(
                    "{},{},{},{},{}\n",
                    c.suite,
                    c.name.replace(',', ";"),
                    c.passed,
                    sci(c.measured),
                    sci(c.tolerance),
                ));
            }
            s
        }
        Format::Json => render_json(&json!({
            "suites": args.suite.clone().map(|s| vec![s]).unwrap_or_else(|| {
                SUITE_NAMES.iter().map(|s| s.to_string()).collect()
            }),
            "tolerances": {
                "algebra": tols.algebra,
                "structure": tols.structure,
                "optimizer": tols.optimizer,
                "truncation": tols.truncation,
            },
            "checks": checks.iter().map(|c| json!({
                "suite": c.suite,
                "name": c.name,
                "passed": c.passed,
                "measured": c.measured,
                "tolerance": c.tolerance,
            })).collect::<Vec<_>>(),
            "passed": passed,
        })),
    };
    emit(&args.out, &content)?;
    if passed {
        Ok(())
    } else {
        let failing: Vec<&str> =
            checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        Err(Failure::Verification(format!("failing checks: {}", failing.join("; "))))
    }
}

fn matrix_json(m: &CMat) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| {
                Value::Array(
                    (0..m.ncols()).map(|j| json!([m[(i, j)].re, m[(i, j)].im])).collect(),
                )
            })
            .collect(),
    )
}

fn cmd_channel_info(args: InfoArgs) -> Result<(), Failure> {
    let parts: Vec<&str> = args.state.split(',').collect();
    if parts.len() != 2 {
        return Err(Failure::Usage(format!("state '{}' is not of the form \"a,b\"", args.state)));
    }
    let amp = |s: &str| -> Result<f64, Failure> {
        s.trim().parse::<f64>().map_err(|_| Failure::Usage(format!("bad amplitude '{s}'")))
    };
    let phi = DualRailQubit::normalized(cr(amp(parts[0])?), cr(amp(parts[1])?))?;
    let rho = phi.to_density();

    let report = match args.channel {
        ChannelKind::Cloning => {
            if args.ell < 1 {
                return Err(Failure::Usage("cloning needs --ell ≥ 1".into()));
            }
            let out = cloning_apply(args.ell, &rho)?;
            let comp = cloning_complement_apply(args.ell, &rho)?;
            let h_out = entropy_of_matrix(&out)?;
            let h_comp = entropy_of_matrix(&comp)?;
            let fidelity = if (2..=6).contains(&args.ell) {
                Some(clone_fidelity(args.ell, &phi)?)
            } else {
                None
            };
            json!({
                "channel": "cloning",
                "params": {"ell": args.ell, "capacity_closed_form": capacity_cloner(args.ell)?},
                "input": {"a": [phi.a.re, phi.a.im], "b": [phi.b.re, phi.b.im]},
                "output_matrix": matrix_json(&out),
                "complement_matrix": matrix_json(&comp),
                "entropies": {"output": h_out, "complement": h_comp},
                "coherent_information": h_out - h_comp,
                "clone_fidelity": fidelity,
            })
        }
        ChannelKind::Depolarizing => {
            let out = depolarizing_apply(args.q, &rho)?;
            let choi = choi_of(|r| depolarizing_apply(args.q, r), 2)?;
            let kraus = kraus_from_choi(&choi)?;
            let iso = stinespring_from_kraus(&kraus)?;
            let comp = iso.complement_apply(&rho)?;
            let h_out = entropy_of_matrix(&out)?;
            let h_comp = entropy_of_matrix(&comp)?;
            let pair = ChannelPair::from_isometry(&iso);
            json!({
                "channel": "depolarizing",
                "params": {"q": args.q},
                "input": {"a": [phi.a.re, phi.a.im], "b": [phi.b.re, phi.b.im]},
                "output_matrix": matrix_json(&out),
                "entropies": {"output": h_out, "complement": h_comp},
                "coherent_information": coherent_information(&pair, &rho)?,
                "ppt": {"min_pt_eigenvalue": ppt_check(&choi, 1e-10)?.1},
            })
        }
        _ => {
            return Err(Failure::Usage(
                "channel-info supports --channel cloning|depolarizing".into(),
            ))
        }
    };
    emit(&args.out, &render_json(&report))
}

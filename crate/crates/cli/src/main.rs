//! `latfrac`: apply the lattice operators and run the numerical experiments.
//!
//! Exit codes: 0 success, 1 an experiment check failed, 2 bad input.

mod args;

use std::fmt::Display;
use std::io::Write;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::Parser;
use latfrac::atoms::{derive_seed, make_atom_with, Atom, AtomFile, ManifestEntry};
use latfrac::experiments::{self, ExperimentReport};
use latfrac::hardy::{hardy_maximal, hp_quasinorm, DilationGrid};
use latfrac::operators::{
    apply_riesz, apply_t, default_window, fractional_maximal, fractional_maximal_fast, truncated_lq_norm,
    InputDecay, OperatorResult,
};
use latfrac::{conjugate_exponent, CubeWindow, FractionalSpec, LatticeIndex, Sequence, SequenceFile, SpecFile};
use serde::de::DeserializeOwned;

use args::{AtomCmd, Cli, Command, ExpCmd, Format, GridArgs, HardyCmd, OperatorArgs, SpecCmd, WindowArgs};

enum Failure {
    /// Unreadable, malformed or invalid input.
    Input(anyhow::Error),
    /// An experiment ran but some record or check failed.
    Experiment(Vec<String>),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e:#}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Experiment(failures)) => {
            for f in failures {
                eprintln!("check failed: {f}");
            }
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("LATFRAC_THREADS") else { return Ok(()) };
    let k: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| anyhow!("LATFRAC_THREADS: expected a positive integer, got {v:?}"))?;
    rayon::ThreadPoolBuilder::new().num_threads(k).build_global()?;
    Ok(())
}

/// Parses JSON, naming the offending field on failure.
fn read_json<T: DeserializeOwned>(path: &Path, what: &str) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{what}: cannot read {}", path.display()))?;
    let de = &mut serde_json::Deserializer::from_str(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        anyhow!("{what} {}: field `{field}`: {}", path.display(), e.inner())
    })
}

fn context<T, E: Display>(r: Result<T, E>, what: &str) -> anyhow::Result<T> {
    r.map_err(|e| anyhow!("{what}: {e}"))
}

fn load_spec(op: &OperatorArgs) -> anyhow::Result<FractionalSpec> {
    let spec = match (&op.spec, op.preset) {
        (Some(path), None) => {
            let file: SpecFile = read_json(path, "--spec")?;
            context(file.into_spec(), "--spec")?
        }
        (None, Some(p)) => p.spec(),
        (None, None) => return Err(anyhow!("--spec: an operator specification (or --preset) is required")),
        (Some(_), Some(_)) => return Err(anyhow!("--spec: give either --spec or --preset, not both")),
    };
    context(spec.validate().into_result(), "--spec")?;
    Ok(spec)
}

fn load_sequence(path: &Path) -> anyhow::Result<Sequence> {
    let file: SequenceFile = read_json(path, "--input")?;
    context(file.into_sequence(), "--input")
}

/// The window from `--window-center/--window-radius`, if either was given.
fn explicit_window(w: &WindowArgs, n: usize) -> anyhow::Result<Option<CubeWindow>> {
    match (&w.window_center, w.window_radius) {
        (None, None) => Ok(None),
        (center, radius) => {
            let center = center.clone().unwrap_or_else(|| vec![0; n]);
            if center.len() != n {
                return Err(anyhow!("--window-center: {} coordinates given, dimension is {n}", center.len()));
            }
            let radius = radius.ok_or_else(|| anyhow!("--window-radius: required with --window-center"))?;
            Ok(Some(CubeWindow::new(LatticeIndex(center), radius)))
        }
    }
}

fn write_output(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("--out: cannot write {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            match writeln!(stdout, "{}", text.trim_end()) {
                Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
                _ => Ok(()),
            }
        }
    }
}

fn write_json(out: Option<&Path>, v: &serde_json::Value) -> anyhow::Result<()> {
    write_output(out, &serde_json::to_string_pretty(v)?)
}

fn operator_output(
    spec: Option<&FractionalSpec>,
    b: &Sequence,
    window: &WindowArgs,
    q: Option<f64>,
    apply: impl FnOnce(&CubeWindow) -> latfrac::Result<OperatorResult<f64>>,
) -> anyhow::Result<serde_json::Value> {
    let (out, default) = match explicit_window(window, b.dim())? {
        Some(w) => (w, false),
        None => {
            let s = spec.cloned().unwrap_or_else(|| FractionalSpec::riesz(b.dim(), 0.5));
            (default_window(&s, b), true)
        }
    };
    let mut r = context(apply(&out), "operator")?;
    r.metadata.default_window = default;
    if let (Some(q), Some(spec)) = (q, spec) {
        let lq = context(truncated_lq_norm(&r, q, b, spec, &InputDecay::Generic), "--q")?;
        r.metadata.q = Some(q);
        r.metadata.tail_bound = Some(lq.tail);
    }
    Ok(r.to_json())
}

fn run(cli: Cli) -> Outcome {
    let out = cli.out.as_deref();
    match cli.command {
        Command::Apply { op, input, window, q } => {
            let spec = load_spec(&op)?;
            let b = load_sequence(&input)?;
            let v = operator_output(Some(&spec), &b, &window, q, |w| apply_t(&spec, &b, w))?;
            write_json(out, &v)?;
        }
        Command::Riesz { alpha, input, window } => {
            let b = load_sequence(&input)?;
            let spec = context(
                {
                    let s = FractionalSpec::riesz(b.dim(), alpha);
                    s.validate().into_result().map(|_| s)
                },
                "--alpha",
            )?;
            let v = operator_output(Some(&spec), &b, &window, None, |w| apply_riesz(&b, alpha, w))?;
            write_json(out, &v)?;
        }
        Command::Maximal { alpha, input, window } => {
            let b = load_sequence(&input)?;
            let w = match explicit_window(&window, b.dim())? {
                Some(w) => w,
                None => b.support_cube().unwrap_or_else(|| CubeWindow::centered_at_origin(b.dim(), 0)),
            };
            let m = if b.is_dense() { fractional_maximal_fast(&b, alpha, &w) } else { fractional_maximal(&b, alpha, &w) };
            write_json(out, &context(m, "--alpha")?.to_json())?;
        }
        Command::Atom(cmd) => run_atom(cmd, out)?,
        Command::Hardy(cmd) => run_hardy(cmd, out)?,
        Command::Spec(SpecCmd::Validate { op }) => {
            let spec = match (&op.spec, op.preset) {
                (Some(path), _) => {
                    let file: SpecFile = read_json(path, "--spec")?;
                    context(file.into_spec(), "--spec")?
                }
                (None, Some(p)) => p.spec(),
                (None, None) => return Err(anyhow!("--spec: a specification file is required").into()),
            };
            let report = spec.validate();
            if !report.is_valid() {
                return Err(anyhow!("--spec: {}", report.violations.join("; ")).into());
            }
            write_json(out, &serde_json::json!({ "valid": true, "hash": spec.hash(), "d_inv": spec.d_inv().0 }))?;
        }
        Command::Exp { cmd, format } => {
            let report = run_experiment(cmd)?;
            let text = match format {
                Format::Csv => report.to_csv(),
                Format::Json => serde_json::to_string_pretty(&report.to_json())?,
            };
            write_output(out, &text)?;
            if !report.passed() {
                return Err(Failure::Experiment(report.failures()));
            }
        }
    }
    Ok(())
}

fn run_atom(cmd: AtomCmd, out: Option<&Path>) -> anyhow::Result<()> {
    match cmd {
        AtomCmd::Gen { window, p, seed, shape, count } => {
            let radius = window.window_radius.ok_or_else(|| anyhow!("--window-radius: the atom cube radius is required"))?;
            let center = window.window_center.clone().unwrap_or_else(|| vec![0]);
            let cube = CubeWindow::new(LatticeIndex(center), radius);
            let make = |s: u64| context(make_atom_with(&cube, p, s, shape.0), "atom");
            if count == 1 {
                let atom = make(seed)?;
                return write_json(out, &serde_json::to_value(atom.to_file())?);
            }
            let dir = out.ok_or_else(|| anyhow!("--out: a directory is required with --count > 1"))?;
            std::fs::create_dir_all(dir).with_context(|| format!("--out: cannot create {}", dir.display()))?;
            let atoms: Vec<Atom> = (0..count as u64).map(|k| make(derive_seed(seed, k))).collect::<anyhow::Result<_>>()?;
            let mut manifest = Vec::with_capacity(atoms.len());
            for (k, a) in atoms.iter().enumerate() {
                let name = format!("atom_{k:05}.json");
                std::fs::write(dir.join(&name), serde_json::to_string(&a.to_file())?)?;
                manifest.push(ManifestEntry { file: Some(name), ..ManifestEntry::from(a) });
            }
            let v = serde_json::json!({ "corpus_hash": latfrac::atoms::corpus_hash(&atoms), "atoms": manifest });
            std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&v)?)?;
            Ok(())
        }
        AtomCmd::Check { input } => {
            let file: AtomFile = read_json(&input, "--input")?;
            let (_, report) = context(file.validate(), "--input")?;
            write_json(out, &serde_json::to_value(&report)?)?;
            if !report.is_valid() {
                let mut why = Vec::new();
                if !report.support_in_cube {
                    why.push("support leaves the cube".to_string());
                }
                if !report.sup_ok {
                    why.push(format!("sup norm {} exceeds {}", report.sup_norm, report.sup_bound));
                }
                if !report.moments_ok() {
                    why.push(format!("nonzero moments {:?}", report.centered_failures));
                }
                return Err(anyhow!("--input: not an atom: {}", why.join("; ")));
            }
            Ok(())
        }
    }
}

fn grid_of(g: &GridArgs) -> anyhow::Result<DilationGrid> {
    let d = DilationGrid::default();
    context(
        DilationGrid::new(g.t_min.unwrap_or(d.t_min), g.t_max.unwrap_or(d.t_max), g.per_octave.unwrap_or(d.per_octave)),
        "--t-min/--t-max/--per-octave",
    )
}

fn run_hardy(cmd: HardyCmd, out: Option<&Path>) -> anyhow::Result<()> {
    match cmd {
        HardyCmd::Maximal { input, window, grid } => {
            let b = load_sequence(&input)?;
            let g = grid_of(&grid)?;
            let w = match explicit_window(&window, b.dim())? {
                Some(w) => w,
                None => latfrac::hardy::default_hp_window(&b),
            };
            write_json(out, &context(hardy_maximal(&b, &g, &w), "hardy")?.to_json())
        }
        HardyCmd::Norm { input, p, window, grid } => {
            let b = load_sequence(&input)?;
            let g = grid_of(&grid)?;
            let w = explicit_window(&window, b.dim())?;
            let e = context(hp_quasinorm(&b, p, &g, w.as_ref()), "--p")?;
            write_json(out, &serde_json::to_value(&e)?)
        }
    }
}

fn atom_p(p: Option<f64>, preset: Option<args::PresetArg>) -> f64 {
    p.or(preset.map(|x| x.p())).unwrap_or(1.0)
}

fn run_experiment(cmd: ExpCmd) -> anyhow::Result<ExperimentReport> {
    let report = match cmd {
        ExpCmd::Tail { ns, epsilons, radii } => {
            let d = experiments::TailParams::default();
            let params = experiments::TailParams {
                ns: ns.unwrap_or(d.ns),
                epsilons: epsilons.unwrap_or(d.epsilons),
                radii: radii.unwrap_or(d.radii),
                ..d
            };
            if let Some(e) = params.epsilons.iter().find(|e| !(**e > 0.0)) {
                return Err(anyhow!("--epsilons: ε must be positive, got {e}"));
            }
            if params.radii.contains(&0) {
                return Err(anyhow!("--radii: N must be at least 1"));
            }
            experiments::run_tail(&params)
        }
        ExpCmd::Lplq { op, p, trials, radii, seed } => {
            let spec = load_spec(&op)?;
            context(conjugate_exponent(p, spec.alpha, spec.n), "--p")?;
            experiments::run_lplq(&spec, &experiments::LplqParams { p, trials, radii, seed })
        }
        ExpCmd::AtomUniform { op, p, atoms, ns, seed, far_distance } => {
            let spec = load_spec(&op)?;
            let mut params = experiments::AtomUniformParams::new(atom_p(p, op.preset), atoms, seed);
            if let Some(ns) = ns {
                params.ns = ns;
            }
            params.far_distance = far_distance;
            experiments::run_atom_uniform(&spec, &params)
        }
        ExpCmd::MaximalBound { n, p, alpha, trials, radii, seed } => {
            experiments::run_maximal_bound(&experiments::MaximalBoundParams { n, p, alpha, trials, radii, seed })
        }
        ExpCmd::Domination { op, p, atoms, samples, ns, seed } => {
            let spec = load_spec(&op)?;
            let mut params = experiments::DominationParams::new(atom_p(p, op.preset), atoms, samples, seed);
            if let Some(ns) = ns {
                params.ns = ns;
            }
            experiments::run_domination(&spec, &params)
        }
        ExpCmd::Regions { op, trials, seed } => {
            let spec = load_spec(&op)?;
            experiments::run_regions(&spec, &experiments::RegionsParams::new(trials, seed))
        }
    };
    context(report, "experiment")
}

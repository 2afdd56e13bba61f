use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use latfrac::atoms::AtomShape;
use latfrac::experiments::Preset;

#[derive(Parser)]
#[command(name = "latfrac", version, about = "Fractional series operators on the integer lattice")]
pub struct Cli {
    /// Write the result here instead of standard output.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum PresetArg {
    #[value(name = "riesz-1d")]
    Riesz1d,
    #[value(name = "alpha0-1d")]
    Alpha01d,
}

impl PresetArg {
    pub fn preset(self) -> Preset {
        match self {
            PresetArg::Riesz1d => Preset::Riesz1d,
            PresetArg::Alpha01d => Preset::Alpha01d,
        }
    }

    pub fn spec(self) -> latfrac::FractionalSpec {
        self.preset().spec()
    }

    pub fn p(self) -> f64 {
        self.preset().p()
    }
}

#[derive(Args, Clone, Debug)]
pub struct OperatorArgs {
    /// Operator specification (JSON: n, alpha, m, exponents, matrices).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Built-in specification used instead of --spec.
    #[arg(long, value_enum)]
    pub preset: Option<PresetArg>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct WindowArgs {
    /// Comma-separated window center, e.g. `0,-3`.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub window_center: Option<Vec<i64>>,
    #[arg(long)]
    pub window_radius: Option<u64>,
}

#[derive(Args, Clone, Debug, Default)]
pub struct GridArgs {
    #[arg(long)]
    pub t_min: Option<f64>,
    #[arg(long)]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub per_octave: Option<u32>,
}

/// `fine`, `coarse` or `block:L`.
#[derive(Clone, Copy, Debug)]
pub struct ShapeArg(pub AtomShape);

impl FromStr for ShapeArg {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fine" => Ok(ShapeArg(AtomShape::Fine)),
            "coarse" => Ok(ShapeArg(AtomShape::Coarse)),
            _ => s
                .strip_prefix("block:")
                .and_then(|l| l.parse::<u64>().ok())
                .filter(|&l| l > 0)
                .map(|l| ShapeArg(AtomShape::Block(l)))
                .ok_or_else(|| format!("expected fine, coarse or block:L with L ≥ 1, got {s:?}")),
        }
    }
}

#[derive(Subcommand)]
pub enum Command {
    /// Evaluate T b on a window.
    Apply {
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
        /// Attach a certified bound on the ℓ^q mass outside the window.
        #[arg(long)]
        q: Option<f64>,
    },
    /// Evaluate the Riesz potential I_α b.
    Riesz {
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
    },
    /// Centered fractional maximal function.
    Maximal {
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
    },
    #[command(subcommand)]
    Atom(AtomCmd),
    #[command(subcommand)]
    Hardy(HardyCmd),
    #[command(subcommand)]
    Spec(SpecCmd),
    Exp {
        #[command(subcommand)]
        cmd: ExpCmd,
        #[arg(long, value_enum, default_value = "csv", global = true)]
        format: Format,
    },
}

#[derive(Subcommand)]
pub enum AtomCmd {
    /// Generate an atom on the cube given by the window flags (or a corpus with --count).
    Gen {
        #[command(flatten)]
        window: WindowArgs,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "fine")]
        shape: ShapeArg,
        #[arg(long, default_value_t = 1)]
        count: usize,
    },
    /// Check support, size and moment conditions of an atom file.
    Check {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Subcommand)]
pub enum HardyCmd {
    Maximal {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
    Norm {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        p: f64,
        #[command(flatten)]
        window: WindowArgs,
        #[command(flatten)]
        grid: GridArgs,
    },
}

#[derive(Subcommand)]
pub enum SpecCmd {
    Validate {
        #[command(flatten)]
        op: OperatorArgs,
    },
}

#[derive(Subcommand)]
pub enum ExpCmd {
    Tail {
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        radii: Option<Vec<u64>>,
    },
    Lplq {
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long)]
        p: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        radii: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    AtomUniform {
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 100)]
        atoms: usize,
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<u64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1024)]
        far_distance: u64,
    },
    MaximalBound {
        #[arg(long, default_value_t = 1)]
        n: usize,
        #[arg(long)]
        p: f64,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, value_delimiter = ',', default_value = "8,16,32,64")]
        radii: Vec<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Domination {
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long)]
        p: Option<f64>,
        /// Atoms per cube radius.
        #[arg(long, default_value_t = 40)]
        atoms: usize,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<u64>>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Regions {
        #[command(flatten)]
        op: OperatorArgs,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

mod doc;
mod report;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use doc::{CliError, CliResult};
use report::Format;
use run::{Command, KisinOp, Overrides, Report};

#[derive(Parser, Debug)]
#[command(name = "slopeforge", version, about = "Slope filtrations, Fargues polygons and Newton/Hodge types")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Input document (JSON); with --batch, a JSON array of documents
    input: PathBuf,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Highest torsion level of the Fargues tower
    #[arg(long)]
    nmax: Option<u32>,
    /// Degree bound of the stable line search
    #[arg(long = "search-degree")]
    search_degree: Option<usize>,
    /// Exponent bound of lattice enumeration
    #[arg(long)]
    bound: Option<u32>,
    #[arg(long)]
    batch: bool,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Relative position of two lattices
    Pos(Common),
    /// Fargues filtration of a module over F_p[[u]] or its torsion lift
    Hn(Common),
    /// Kisin module operations
    Kisin {
        #[command(subcommand)]
        op: KisinCmd,
    },
    /// Newton type and Kottwitz point of an isocrystal
    Newton(Common),
    /// Hodge type of a lattice and the Mazur inequality
    Mazur(Common),
    /// Lattice set X_mu(b) and mu-ordinarity
    Xmu(Common),
    /// Weak admissibility and Fargues type of a filtered isocrystal
    Wa(Common),
    /// The translate phi_cris(y)
    Phicris(Common),
    /// Hodge and Newton weights of an abelian type
    Abelian(Common),
    /// Type arithmetic
    Types(Common),
}

#[derive(Subcommand, Debug)]
enum KisinCmd {
    /// t_{F,1} and t_{F,n}
    Polygon {
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[command(flatten)]
        common: Common,
    },
    /// The tower t_{F,n} up to --nmax and its limit
    Limit(Common),
    /// One step of the theta-algorithm
    Theta(Common),
    /// An isogenous module of HN type
    Decompose(Common),
}

fn command(c: Cmd) -> (Command, Common) {
    match c {
        Cmd::Pos(a) => (Command::Pos, a),
        Cmd::Hn(a) => (Command::Hn, a),
        Cmd::Newton(a) => (Command::Newton, a),
        Cmd::Mazur(a) => (Command::Mazur, a),
        Cmd::Xmu(a) => (Command::Xmu, a),
        Cmd::Wa(a) => (Command::Wa, a),
        Cmd::Phicris(a) => (Command::Phicris, a),
        Cmd::Abelian(a) => (Command::Abelian, a),
        Cmd::Types(a) => (Command::Types, a),
        Cmd::Kisin { op } => match op {
            KisinCmd::Polygon { n, common } => (Command::Kisin(KisinOp::Polygon(n.max(1))), common),
            KisinCmd::Limit(a) => (Command::Kisin(KisinOp::Limit), a),
            KisinCmd::Theta(a) => (Command::Kisin(KisinOp::Theta), a),
            KisinCmd::Decompose(a) => (Command::Kisin(KisinOp::Decompose), a),
        },
    }
}

fn load(path: &PathBuf) -> CliResult<Value> {
    let src = std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {}", path.display(), e)))?;
    serde_json::from_str(&src).map_err(|e| CliError::Parse {
        path: path.display().to_string(),
        column: e.column(),
        message: format!("invalid JSON at line {}: {}", e.line(), e),
    })
}

fn run_one(cmd: Command, v: &Value, o: &Overrides) -> CliResult<Report> {
    let d = doc::parse_document(v)?;
    run::run(cmd, &d, o)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (cmd, common) = command(cli.command);
    let o = Overrides { n_max: common.nmax, search_degree: common.search_degree, bound: common.bound };
    let value = match load(&common.input) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("{}", e);
            return ExitCode::from(e.exit_code() as u8);
        }
    };
    if !common.batch {
        return match run_one(cmd, &value, &o) {
            Ok(r) => {
                print!("{}", report::emit(&r, common.format));
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("{}", e);
                ExitCode::from(e.exit_code() as u8)
            }
        };
    }
    let docs = match value.as_array() {
        Some(a) => a.clone(),
        None => {
            eprintln!("{}", CliError::Schema { path: String::new(), expected: "a JSON array of documents with --batch".into() });
            return ExitCode::from(1);
        }
    };
    if common.format == Format::Svg {
        eprintln!("{}", CliError::Input("--batch does not support --format svg".into()));
        return ExitCode::from(1);
    }
    // results are collected in input order
    let results: Vec<CliResult<Report>> = std::thread::scope(|s| {
        let handles: Vec<_> = docs.iter().map(|d| s.spawn(|| run_one(cmd, d, &o))).collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });
    let mut out = String::new();
    let mut worst = 0;
    if common.format == Format::Csv {
        out.push_str(report::CSV_HEADER);
        out.push('\n');
    }
    for (i, res) in results.iter().enumerate() {
        match res {
            Ok(r) => match common.format {
                Format::Text => {
                    out.push_str(&format!("== document {} ==\n", i));
                    out.push_str(&report::text(r));
                }
                _ => {
                    out.push_str(&report::csv_rows(r, Some(i)));
                    out.push_str(&report::csv_certificate(r, Some(i)));
                }
            },
            Err(e) => {
                let line = format!("document {}: {}", i, e);
                match common.format {
                    Format::Text => out.push_str(&format!("== document {} ==\nerror: {}\n", i, e)),
                    _ => out.push_str(&format!("# {}\n", line)),
                }
                eprintln!("{}", line);
                worst = worst.max(e.exit_code());
            }
        }
    }
    print!("{}", out);
    ExitCode::from(worst as u8)
}

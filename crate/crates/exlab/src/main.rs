use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{value_parser, Arg, ArgMatches};
use exlab::config::{parameters, Command, ExperimentConfig};
use exlab::experiments::{self, RunError};

const EXIT_USAGE: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_CAPACITY: u8 = 3;

fn cli() -> clap::Command {
    let mut app = clap::Command::new("exlab")
        .version(env!("CARGO_PKG_VERSION"))
        .about("Numerical experiments on the symmetric simple exclusion process")
        .subcommand_required(true)
        .arg(Arg::new("config").long("config").global(true).value_name("FILE").help("flat `key = value` file"))
        .arg(Arg::new("out").long("out").global(true).value_name("DIR").help("output directory [default: .]"))
        .arg(
            Arg::new("threads")
                .long("threads")
                .global(true)
                .value_parser(value_parser!(usize))
                .help("worker threads [default: available parallelism]"),
        )
        .after_help("Precedence of parameters: command line, then EXLAB_SEED (seed only), then --config file.");
    for &c in Command::ALL {
        let mut sub = clap::Command::new(c.name()).about(about(c));
        for (key, default) in parameters(c) {
            let help = if default.is_empty() { "default: empty".to_string() } else { format!("default: {default}") };
            sub = sub.arg(Arg::new(*key).long(*key).value_name("VALUE").allow_hyphen_values(true).help(help));
        }
        app = app.subcommand(sub);
    }
    app
}

fn about(c: Command) -> &'static str {
    match c {
        Command::SimulateSsep => "simulate the exclusion process and snapshot occupations",
        Command::KernelExact => "exact labelled kernel row by uniformization",
        Command::KernelMc => "Monte Carlo kernel row with z-scores against the exact row",
        Command::GradBound => "fit the constant of the kernel gradient bound",
        Command::TvSum => "total variation of kernel gradients over time",
        Command::RwGradSum => "summed random-walk gradients against the diffusive rate",
        Command::CompareRw => "check the comparison identity with independent walks",
        Command::DiffSum => "scaled sums of kernel differences",
        Command::Cumulants => "joint cumulants of the rescaled occupation field",
        Command::Fluctuation => "variance of the fluctuation field against its limit",
        Command::RenormConst => "tabulate the renormalization constant",
        Command::Pam => "solve the renormalized lattice Anderson model",
        Command::ProbeConvergence => "compare Anderson solutions across two levels",
    }
}

fn resolve(name: &str, sub: &ArgMatches, global: &ArgMatches) -> Result<ExperimentConfig, String> {
    let command = Command::from_name(name).map_err(|e| e.to_string())?;
    let file = match sub.get_one::<String>("config").or(global.get_one::<String>("config")) {
        Some(p) => Some(std::fs::read_to_string(p).map_err(|e| format!("{p}: {e}"))?),
        None => None,
    };
    let env_seed = std::env::var("EXLAB_SEED").ok();
    let overrides: Vec<(String, String)> = parameters(command)
        .iter()
        .filter_map(|(k, _)| sub.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect();
    ExperimentConfig::resolve(command, file.as_deref(), env_seed.as_deref(), &overrides).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let matches = match cli().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let cfg = match resolve(name, sub, &matches) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("exlab: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let out: PathBuf = sub.get_one::<String>("out").map_or_else(|| PathBuf::from("."), PathBuf::from);
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(&n) = sub.get_one::<usize>("threads") {
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("exlab: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };

    let start = Instant::now();
    let outcome = match pool.install(|| experiments::run(&cfg)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("exlab: {e}");
            return ExitCode::from(match e {
                _ if e.is_capacity() => EXIT_CAPACITY,
                RunError::Core(exlab_core::Error::Quadrature { .. }) => EXIT_CHECK,
                _ => EXIT_USAGE,
            });
        }
    };
    let wall = start.elapsed().as_secs_f64();
    match exlab::write_outputs(&out, &cfg, &outcome, wall) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Err(e) => {
            eprintln!("exlab: cannot write outputs: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }
    if outcome.failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        for f in &outcome.failures {
            eprintln!("exlab: check failed: {f}");
        }
        ExitCode::from(EXIT_CHECK)
    }
}

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{value_parser, Arg, ArgAction, ArgMatches, Command};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use gpei::bench::config::KEYS;
use gpei::bench::{rerun_manifest, run_benchmark, run_diagnostics, BenchConfig, Manifest};
use gpei::kernels::{FamilyName, KernelSpec};
use gpei::testbed::{estimate_optimum, make_rkhs_function_with_budget, standard_function, RkhsFunction};
use gpei::{Error, Result, StandardName};

fn bench_args(cmd: Command) -> Command {
    let cmd = cmd
        .arg(Arg::new("config").long("config").short('c').value_parser(value_parser!(PathBuf)).help("key = value config file"))
        .arg(
            Arg::new("manifest")
                .long("manifest")
                .value_parser(value_parser!(PathBuf))
                .conflicts_with("config")
                .help("re-run the benchmark recorded in a manifest.json"),
        );
    KEYS.iter().fold(cmd, |cmd, (key, default, help)| {
        let help = if default.is_empty() {
            help.to_string()
        } else {
            format!("{help} [default: {default}]")
        };
        cmd.arg(Arg::new(*key).long(key.replace('_', "-")).value_name("VALUE").help(help))
    })
}

fn cli() -> Command {
    Command::new("gpei")
        .about("GP-EI, Improved-GP-EI and UCB benchmark harness")
        .version(env!("CARGO_PKG_VERSION"))
        .subcommand_required(true)
        .subcommand(bench_args(Command::new("run").about("run repeated benchmark traces")))
        .subcommand(bench_args(Command::new("diag").about("sweep horizons and report regret growth and bound checks")))
        .subcommand(
            Command::new("gen-rkhs")
                .about("write a reproducible RKHS target")
                .arg(Arg::new("out").long("out").short('o').required(true).value_parser(value_parser!(PathBuf)))
                .arg(Arg::new("dim").long("dim").default_value("2").value_parser(value_parser!(usize)))
                .arg(Arg::new("centers").long("centers").default_value("500").value_parser(value_parser!(usize)))
                .arg(Arg::new("seed").long("seed").default_value("0").value_parser(value_parser!(u64)))
                .arg(Arg::new("kernel").long("kernel").default_value("matern"))
                .arg(Arg::new("nu").long("nu").default_value("2.5").value_parser(value_parser!(f64)))
                .arg(Arg::new("lengthscale").long("lengthscale").default_value("0.2").value_parser(value_parser!(f64)))
                .arg(Arg::new("budget").long("budget").default_value("100000").value_parser(value_parser!(usize))),
        )
        .subcommand(
            Command::new("optimum")
                .about("certify the optimum of a target by random search plus local refinement")
                .arg(Arg::new("objective").long("objective").conflicts_with("rkhs-file"))
                .arg(Arg::new("rkhs-file").long("rkhs-file").value_parser(value_parser!(PathBuf)))
                .arg(Arg::new("budget").long("budget").default_value("1000000").value_parser(value_parser!(usize)))
                .arg(Arg::new("seed").long("seed").default_value("0").value_parser(value_parser!(u64)))
                .arg(
                    Arg::new("write")
                        .long("write")
                        .action(ArgAction::SetTrue)
                        .requires("rkhs-file")
                        .help("store an improved certificate back into the file"),
                ),
        )
}

fn bench_config(m: &ArgMatches) -> Result<BenchConfig> {
    let overrides: BTreeMap<String, String> = KEYS
        .iter()
        .filter_map(|(k, _, _)| m.get_one::<String>(k).map(|v| (k.to_string(), v.clone())))
        .collect();
    BenchConfig::load(m.get_one::<PathBuf>("config").map(PathBuf::as_path), &overrides)
}

fn manifest_rerun(m: &ArgMatches) -> Result<Option<gpei::bench::BenchOutcome>> {
    let Some(path) = m.get_one::<PathBuf>("manifest") else {
        return Ok(None);
    };
    let manifest = Manifest::load(path)?;
    let out = match m.get_one::<String>("output_dir") {
        Some(d) => PathBuf::from(d),
        None => match std::env::var(gpei::bench::config::OUTPUT_DIR_ENV) {
            Ok(d) if !d.is_empty() => PathBuf::from(d),
            _ => return Err(Error::Config("re-running a manifest needs --output-dir or GPEI_OUTPUT_DIR".into())),
        },
    };
    rerun_manifest(&manifest, &out).map(Some)
}

fn main_inner() -> Result<()> {
    let matches = cli().get_matches();
    match matches.subcommand() {
        Some(("run", m)) => {
            let out = match manifest_rerun(m)? {
                Some(o) => o,
                None => run_benchmark(&bench_config(m)?)?,
            };
            println!(
                "{} traces written to {} (traces hash {}, {} flagged rows)",
                out.traces.len(),
                out.output_dir.display(),
                out.manifest.traces_hash,
                out.manifest.flagged_rows
            );
        }
        Some(("diag", m)) => {
            let report = match manifest_rerun(m)? {
                Some(o) => gpei::bench::diagnostics_report(&o.traces)?,
                None => run_diagnostics(&bench_config(m)?)?.1,
            };
            print!("{}", report.to_text());
        }
        Some(("gen-rkhs", m)) => {
            let l = *m.get_one::<f64>("lengthscale").expect("defaulted");
            let kernel = match m.get_one::<String>("kernel").expect("defaulted").parse::<FamilyName>()? {
                FamilyName::SquaredExponential => KernelSpec::squared_exponential(l)?,
                FamilyName::Matern => KernelSpec::matern(*m.get_one::<f64>("nu").expect("defaulted"), l)?,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(*m.get_one::<u64>("seed").expect("defaulted"));
            let f = make_rkhs_function_with_budget(
                kernel,
                *m.get_one::<usize>("dim").expect("defaulted"),
                *m.get_one::<usize>("centers").expect("defaulted"),
                *m.get_one::<usize>("budget").expect("defaulted"),
                &mut rng,
            )?;
            let out = m.get_one::<PathBuf>("out").expect("required");
            f.save(out)?;
            println!(
                "wrote {} (norm {:.6}, optimum {:.12} at {:?})",
                out.display(),
                f.rkhs_norm(),
                f.optimum_value,
                f.optimum_point
            );
        }
        Some(("optimum", m)) => {
            let budget = *m.get_one::<usize>("budget").expect("defaulted");
            let mut rng = ChaCha8Rng::seed_from_u64(*m.get_one::<u64>("seed").expect("defaulted"));
            let (value, point) = if let Some(path) = m.get_one::<PathBuf>("rkhs-file") {
                let mut f = RkhsFunction::load(path)?;
                let (v, p) = estimate_optimum(&f, budget, &mut rng)?;
                if m.get_flag("write") && v > f.optimum_value {
                    f.optimum_value = v;
                    f.optimum_point = p.clone();
                    f.optimum_budget = budget;
                    f.save(path)?;
                }
                (v, p)
            } else {
                let name: StandardName = m
                    .get_one::<String>("objective")
                    .ok_or_else(|| Error::Config("pass --objective or --rkhs-file".into()))?
                    .parse()?;
                let f = standard_function(name)?;
                let (v, p) = estimate_optimum(&f, budget, &mut rng)?;
                if v > f.optimum_value() {
                    (v, p)
                } else {
                    (f.optimum_value(), f.optimum_point().to_vec())
                }
            };
            println!(
                "{}",
                serde_json::json!({ "value": value, "point": point, "budget": budget })
            );
        }
        _ => unreachable!("subcommand required"),
    }
    Ok(())
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Arg, ArgAction, ArgMatches, Command};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use possrel::counting::{count_dispatch, model_count, CountReport, ModelCountMode, SubsetTask};
use possrel::data::{binomial, parse_evidence, parse_example, GlobalExample};
use possrel::logic::{parse_clause, parse_ground_atom, Symbols};
use possrel::pipeline::{
    evaluate, learn_rules, read_file, run_pipeline, synth_generate, with_suffix, write_file, EvalConfig,
    PipelineConfig, PipelineError, KEYS,
};
use possrel::possibilistic::{exact_encoding, parse_theory, MapState, StratifiedTheory};
use possrel::query::ConjunctiveQuery;
use possrel::structure::{learn_hard_rules, write_candidates};

fn path_arg(name: &'static str, help: &'static str) -> Arg {
    Arg::new(name).long(name).value_name("PATH").value_parser(clap::value_parser!(PathBuf)).help(help)
}

fn with_config_keys(cmd: Command) -> Command {
    let cmd = cmd.arg(path_arg("config", "key = value configuration file"));
    KEYS.iter().fold(cmd, |cmd, (key, help)| cmd.arg(Arg::new(*key).long(*key).value_name("VALUE").help(*help)))
}

fn cli() -> Command {
    Command::new("possrel")
        .about("Learn stratified possibilistic theories from relational data and run MAP inference")
        .subcommand_required(true)
        .subcommand(with_config_keys(Command::new("learn-hard").about("Mine hard rules and write them as a theory")))
        .subcommand(
            with_config_keys(
                Command::new("learn-rules").about("Mine hard rules, then search Horn rules per predicate"),
            )
            .arg(path_arg("hard", "theory file whose weight-1 clauses are used as hard rules")),
        )
        .subcommand(with_config_keys(Command::new("learn").about("Run the whole learning pipeline")))
        .subcommand(
            Command::new("infer")
                .about("MAP inference from evidence")
                .arg(path_arg("theory", "theory file").required(true))
                .arg(path_arg("evidence", "evidence file").required(true))
                .arg(path_arg("domain", "data file whose constants join the domain"))
                .arg(Arg::new("query").long("query").value_name("ATOM").action(ArgAction::Append)),
        )
        .subcommand(
            Command::new("evaluate")
                .about("Hamming error of MAP predictions against the all-false baseline")
                .arg(path_arg("theory", "theory file").required(true))
                .arg(path_arg("test", "test data file").required(true))
                .arg(Arg::new("s-max").long("s-max").value_parser(clap::value_parser!(usize)).default_value("15"))
                .arg(Arg::new("trials").long("trials").value_parser(clap::value_parser!(usize)).default_value("20"))
                .arg(Arg::new("seed").long("seed").value_parser(clap::value_parser!(u64)).default_value("0"))
                .arg(Arg::new("positives-only").long("positives-only").action(ArgAction::SetTrue))
                .arg(Arg::new("independent").long("independent").action(ArgAction::SetTrue))
                .arg(path_arg("csv", "per-size rows"))
                .arg(path_arg("json", "full report")),
        )
        .subcommand(
            Command::new("count")
                .about("Count k-subsets of the data satisfying a clause, or its models over k constants")
                .arg(path_arg("data", "data file").required(true))
                .arg(Arg::new("formula").long("formula").value_name("CLAUSE").required(true))
                .arg(Arg::new("k").long("k").value_parser(clap::value_parser!(usize)).default_value("2"))
                .arg(Arg::new("models").long("models").action(ArgAction::SetTrue))
                .arg(Arg::new("seed").long("seed").value_parser(clap::value_parser!(u64)).default_value("0")),
        )
        .subcommand(
            Command::new("encode-exact")
                .about("Theory whose possibility equals the width-k marginal distribution of the data")
                .arg(path_arg("data", "data file").required(true))
                .arg(Arg::new("k").long("k").value_parser(clap::value_parser!(usize)).default_value("2"))
                .arg(path_arg("output", "theory file to write").required(true)),
        )
        .subcommand(
            Command::new("synth")
                .about("Draw a world from a theory's distribution")
                .arg(path_arg("theory", "generator theory file").required(true))
                .arg(Arg::new("constants").long("constants").value_parser(clap::value_parser!(usize)).required(true))
                .arg(Arg::new("seed").long("seed").value_parser(clap::value_parser!(u64)).default_value("0"))
                .arg(path_arg("signature", "data file whose predicates join the signature"))
                .arg(path_arg("output", "data file to write").required(true)),
        )
}

fn input_error(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Input { path: path.to_path_buf(), message: e.to_string() }
}

fn load_example(path: &Path) -> Result<GlobalExample, PipelineError> {
    parse_example(&read_file(path)?, None).map_err(|e| input_error(path, e))
}

fn load_theory(path: &Path, symbols: &mut Symbols) -> Result<StratifiedTheory, PipelineError> {
    parse_theory(&read_file(path)?, symbols).map_err(|e| input_error(path, e))
}

fn config(m: &ArgMatches) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = match m.get_one::<PathBuf>("config") {
        Some(p) => PipelineConfig::parse(&read_file(p)?)?,
        None => PipelineConfig::default(),
    };
    for (key, _) in KEYS {
        if let Some(v) = m.get_one::<String>(key) {
            cfg.set(key, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path, PipelineError> {
    p.as_deref().ok_or_else(|| PipelineError::Config(format!("`{key}` is required")))
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn learn_hard_cmd(m: &ArgMatches) -> Result<(), PipelineError> {
    let cfg = config(m)?;
    let ex = load_example(required(&cfg.data, "data")?)?;
    let hard = learn_hard_rules(&ex, &cfg.hard()).map_err(|e| PipelineError::stage("learn-hard", e))?;
    let th = StratifiedTheory::new(hard.into_iter().map(|c| (c, 1.0))).expect("weight 1 is valid");
    write_file(required(&cfg.output, "output")?, &th.to_text(ex.symbols()))
}

fn learn_rules_cmd(m: &ArgMatches) -> Result<(), PipelineError> {
    let cfg = config(m)?;
    let ex = load_example(required(&cfg.data, "data")?)?;
    let output = required(&cfg.output, "output")?;
    let hard = match m.get_one::<PathBuf>("hard") {
        Some(p) => load_theory(p, &mut ex.symbols().clone())?.hard(),
        None => learn_hard_rules(&ex, &cfg.hard()).map_err(|e| PipelineError::stage("learn-hard", e))?,
    };
    let mut warnings = Vec::new();
    let rules = learn_rules(&ex, &hard, &cfg, &mut warnings)?;
    warn(&warnings);
    let (cands, log) = write_candidates(&rules, ex.symbols());
    write_file(output, &cands)?;
    write_file(&with_suffix(output, ".log"), &log)
}

fn learn_cmd(m: &ArgMatches) -> Result<(), PipelineError> {
    let cfg = config(m)?;
    let learned = run_pipeline(&cfg)?;
    warn(&learned.warnings);
    Ok(())
}

fn infer_cmd(m: &ArgMatches) -> Result<(), PipelineError> {
    let mut symbols = match m.get_one::<PathBuf>("domain") {
        Some(p) => load_example(p)?.symbols().clone(),
        None => Symbols::new(),
    };
    let theory = load_theory(m.get_one::<PathBuf>("theory").unwrap(), &mut symbols)?;
    let ev_path = m.get_one::<PathBuf>("evidence").unwrap();
    let evidence = parse_evidence(&read_file(ev_path)?, &mut symbols).map_err(|e| input_error(ev_path, e))?;
    let queries = m
        .get_many::<String>("query")
        .into_iter()
        .flatten()
        .map(|q| parse_ground_atom(q, &mut symbols).map_err(|e| PipelineError::Config(format!("query `{q}`: {e}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let constants: Vec<_> = symbols.constants().collect();
    let mut state = MapState::new(&theory, &evidence, &constants).map_err(|e| PipelineError::stage("infer", e))?;
    match state.cutoff.level {
        Some(l) => println!("# cutoff {l:?} sat_calls {}", state.cutoff.sat_calls),
        None => println!("# cutoff none sat_calls {}", state.cutoff.sat_calls),
    }
    if queries.is_empty() {
        let atoms = state.atoms().to_vec();
        let mut predicted = state.prediction(&atoms);
        predicted.extend(evidence.iter().filter(|l| l.positive).map(|l| l.atom.clone()));
        for a in predicted {
            println!("{}", a.display(&symbols));
        }
    } else {
        for q in queries {
            println!("{} {}", q.display(&symbols), state.entails(&q));
        }
    }
    Ok(())
}

fn evaluate_cmd(m: &ArgMatches) -> Result<(), PipelineError> {
    let test = load_example(m.get_one::<PathBuf>("test").unwrap())?;
    let theory = load_theory(m.get_one::<PathBuf>("theory").unwrap(), &mut test.symbols().clone())?;
    let cfg = EvalConfig {
        s_max: *m.get_one("s-max").unwrap(),
        trials: *m.get_one("trials").unwrap(),
        seed: *m.get_one("seed").unwrap(),
        positives_only: m.get_flag("positives-only"),
        independent: m.get_flag("independent"),
    };
    let report = evaluate(&theory, &test, &cfg)?;
    warn(&report.warnings);
    let csv = report.to_csv();
    match m.get_one::<PathBuf>("csv") {
        Some(p) => write_file(p, &csv)?,
        None => print!("{csv}"),
    }
    if let Some(p) = m.get_one::<PathBuf>("json") {
        write_file(p, &report.to_json())?;
    }
    Ok(())
}

fn count_cmd(m: &ArgMatches) -> Result<(), PipelineError> {
    let ex = load_example(m.get_one::<PathBuf>("data").unwrap())?;
    let text: &String = m.get_one("formula").unwrap();
    let clause = parse_clause(text, &mut ex.symbols().clone()).map_err(|e| PipelineError::Config(format!("{e}")))?;
    let k: usize = *m.get_one("k").unwrap();
    let seed: u64 = *m.get_one("seed").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let policy = PipelineConfig::default().policy;
    let report = if m.get_flag("models") {
        model_count(&[clause], ex.signature(), k, ModelCountMode::Ground, &policy, &mut rng)
    } else {
        let total = binomial(ex.n_constants(), k) as f64;
        let task = SubsetTask::union(k, &[ConjunctiveQuery::negation_of(&clause)]);
        count_dispatch(&ex, &task, &policy, &mut rng)
            .map(|bad| CountReport { value: (total - bad.value).max(0.0), ..bad })
    }
    .map_err(|e| PipelineError::counting("count", &e))?;
    println!("{}", report.record(seed));
    Ok(())
}

fn encode_cmd(m: &ArgMatches) -> Result<(), PipelineError> {
    let ex = load_example(m.get_one::<PathBuf>("data").unwrap())?;
    let th = exact_encoding(&ex, *m.get_one("k").unwrap()).map_err(|e| PipelineError::stage("encode-exact", e))?;
    write_file(m.get_one::<PathBuf>("output").unwrap(), &th.to_text(&Symbols::new()))
}

fn synth_cmd(m: &ArgMatches) -> Result<(), PipelineError> {
    let theory = load_theory(m.get_one::<PathBuf>("theory").unwrap(), &mut Symbols::new())?;
    let signature = match m.get_one::<PathBuf>("signature") {
        Some(p) => load_example(p)?.signature().clone(),
        None => BTreeSet::new(),
    };
    let policy = PipelineConfig::default().policy;
    let ex =
        synth_generate(&theory, &signature, *m.get_one("constants").unwrap(), *m.get_one("seed").unwrap(), &policy)?;
    write_file(m.get_one::<PathBuf>("output").unwrap(), &ex.to_text())
}

fn main() -> ExitCode {
    let matches = cli().get_matches();
    let (name, m) = matches.subcommand().expect("a subcommand is required");
    let result = match name {
        "learn-hard" => learn_hard_cmd(m),
        "learn-rules" => learn_rules_cmd(m),
        "learn" => learn_cmd(m),
        "infer" => infer_cmd(m),
        "evaluate" => evaluate_cmd(m),
        "count" => count_cmd(m),
        "encode-exact" => encode_cmd(m),
        "synth" => synth_cmd(m),
        _ => unreachable!("clap rejects unknown subcommands"),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

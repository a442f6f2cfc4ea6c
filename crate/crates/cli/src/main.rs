use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use fairseat_core::baselines::{brute_force_leximin, brute_force_max_usw, max_usw_flow, BruteForceError};
use fairseat_core::dataset::{generate_respondents, generate_schedule, random_instance, RandomShape};
use fairseat_core::io::{
    build_instance, load_responses, load_schedule, resolve_slots, run, runtime_sweep, stress_sweep, write_responses,
    write_runtime_csv, write_schedule, write_stress_csv, BuildOptions, ColumnMap, InputError, Mechanism, Mode,
    RunConfig, RunError,
};
use fairseat_core::metrics::utilities;
use fairseat_core::synthgen::{Prior, StatusPopulation, DEFAULT_ELL};
use fairseat_core::{run_yankee_swap, Instance, PickOrder, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const EXIT_INPUT: u8 = 2;
const EXIT_INVARIANT: u8 = 3;

#[derive(Parser)]
#[command(name = "alloc", version, about = "Course-seat allocation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one mechanism and write report.json and allocation.csv.
    Run(RunArgs),
    /// Sample synthetic respondents of one status.
    Synth(SynthArgs),
    /// Compare Yankee Swap against exhaustive search on small instances.
    Oracle(OracleArgs),
    /// Write a synthetic department: schedule.csv and responses.csv.
    GenDataset(GenArgs),
    /// Turn a schedule with meeting-pattern strings into one with slot ids.
    Slots(SlotsArgs),
    /// Runtime or stress sweeps over cohort sizes, as CSV.
    Sweep(SweepArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum MechanismArg {
    Sd,
    Rr,
    Ys,
    UswFlow,
    ExportIlp,
}

impl From<MechanismArg> for Mechanism {
    fn from(m: MechanismArg) -> Self {
        match m {
            MechanismArg::Sd => Mechanism::Sd,
            MechanismArg::Rr => Mechanism::Rr,
            MechanismArg::Ys => Mechanism::Ys,
            MechanismArg::UswFlow => Mechanism::UswFlow,
            MechanismArg::ExportIlp => Mechanism::ExportIlp,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Real,
    Reduced,
    Full,
    Stress,
}

#[derive(Args)]
struct InputArgs {
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    /// JSON sidecar renaming response columns.
    #[arg(long)]
    mapping: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum)]
    mechanism: MechanismArg,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "real")]
    mode: ModeArg,
    /// Cohort size for stress mode.
    #[arg(long)]
    cohort: Option<usize>,
    /// Capacity scaling fraction for real mode.
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    #[arg(long, default_value_t = DEFAULT_ELL)]
    ell: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    schedule: PathBuf,
    #[arg(long)]
    responses: PathBuf,
    #[arg(long)]
    mapping: Option<PathBuf>,
    #[arg(long)]
    status: String,
    #[arg(long)]
    count: usize,
    #[arg(long, default_value_t = DEFAULT_ELL)]
    ell: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// Check this schedule and response set instead of random instances.
    #[arg(long, requires = "responses")]
    schedule: Option<PathBuf>,
    #[arg(long, requires = "schedule")]
    responses: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 200)]
    instances: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = fairseat_core::baselines::DEFAULT_MAX_STATES)]
    max_states: u64,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SlotsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum SweepKind {
    Runtime,
    Stress,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(value_enum)]
    kind: SweepKind,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    cohorts: Vec<usize>,
    #[arg(long, default_value_t = 1)]
    seeds: u64,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = DEFAULT_ELL)]
    ell: usize,
    #[arg(long)]
    out: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn load_inputs(input: &InputArgs) -> Result<(Vec<fairseat_core::ItemType>, Vec<fairseat_core::Agent>)> {
    let schedule = load_schedule(&input.schedule)?;
    let mapping = input.mapping.as_deref().map(ColumnMap::load).transpose()?;
    let respondents = load_responses(&input.responses, &schedule, mapping.as_ref())?;
    Ok((schedule, respondents))
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mode = match (args.mode, args.cohort) {
        (ModeArg::Stress, Some(n)) => Mode::Stress(n),
        (ModeArg::Stress, None) => bail!(InputError::Config("stress mode needs --cohort".into())),
        (_, Some(_)) => bail!(InputError::Config("--cohort only applies to stress mode".into())),
        (ModeArg::Real, None) => Mode::Real,
        (ModeArg::Reduced, None) => Mode::Reduced,
        (ModeArg::Full, None) => Mode::Full,
    };
    let config = RunConfig {
        mechanism: args.mechanism.into(),
        seed: args.seed,
        k: args.k,
        scale: args.scale,
        mode,
        ell: args.ell,
        schedule: args.input.schedule,
        responses: args.input.responses,
        mapping: args.input.mapping,
        out: args.out,
    };
    let summary = run(&config)?;
    match &summary.metrics {
        Some(m) => println!(
            "{}: usw {} ({:.2}% of seats), zero bundles {}, ef1 violations {}, {:.1} ms",
            config.mechanism,
            m.usw,
            m.usw_pct * 100.0,
            m.zero_count,
            m.ef1_violations,
            summary.wall_clock_ms
        ),
        None => println!("wrote {}", config.out.join("model.lp").display()),
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let status: Status = args.status.parse().map_err(|e| InputError::Config(format!("{e}")))?;
    let schedule = load_schedule(&args.schedule)?;
    let mapping = args.mapping.as_deref().map(ColumnMap::load).transpose()?;
    let respondents = load_responses(&args.responses, &schedule, mapping.as_ref())?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let population = StatusPopulation::fit(status, &respondents, args.ell, &Prior::default(), &mut rng)?;
    let synthetic = population.sample(args.count, &format!("syn-{status}-"), &mut rng);
    write_responses(&synthetic, &schedule, create(&args.out)?)?;
    println!("wrote {} synthetic {status} students to {}", synthetic.len(), args.out.display());
    Ok(())
}

/// Sorted utilities of YS against exhaustive leximin, and its welfare against max flow.
fn oracle_check(inst: &Instance, order: &PickOrder, max_states: u64) -> Result<Option<String>, BruteForceError> {
    let ys = run_yankee_swap(inst, order);
    let mut sorted = utilities(&ys.allocation, &inst.valuations);
    let usw: u32 = sorted.iter().sum();
    sorted.sort_unstable();
    let leximin = brute_force_leximin(inst, max_states)?;
    if sorted != leximin {
        return Ok(Some(format!("sorted utilities {sorted:?}, leximin optimum {leximin:?}")));
    }
    let best = brute_force_max_usw(inst, max_states)?;
    let flow = max_usw_flow(inst).expect("structured instance");
    let flow_usw: u32 = utilities(&flow, &inst.valuations).iter().sum();
    if usw != best || flow_usw != best {
        return Ok(Some(format!("welfare: ys {usw}, flow {flow_usw}, exhaustive {best}")));
    }
    Ok(None)
}

fn cmd_oracle(args: OracleArgs) -> Result<()> {
    let mut checked = 0;
    if let (Some(schedule), Some(responses)) = (args.schedule, args.responses) {
        let input = InputArgs { schedule, responses, mapping: None };
        let (items, agents) = load_inputs(&input)?;
        let opts = BuildOptions { k: args.k, seed: args.seed, ..BuildOptions::default() };
        let built = build_instance(&items, &agents, &opts)?;
        if let Some(msg) = oracle_check(&built.instance, &built.order, args.max_states)? {
            bail!(RunError::Invariant(msg));
        }
        checked = 1;
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
        let shape = RandomShape { agents: 4, types: 4, max_capacity: 2, max_course_max: 2, slots: 3, density: 0.6 };
        for t in 0..args.instances {
            let inst = random_instance(&shape, &mut rng);
            let order = PickOrder::identity(inst.num_agents());
            if let Some(msg) = oracle_check(&inst, &order, args.max_states)? {
                bail!(RunError::Invariant(format!("instance {t}: {msg}")));
            }
            checked += 1;
        }
    }
    println!("{checked} instance(s) agree with exhaustive search");
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let items = generate_schedule(args.seed);
    let agents = generate_respondents(&items, args.seed.wrapping_add(1));
    write_schedule(&items, create(&args.out.join("schedule.csv"))?)?;
    write_responses(&agents, &items, create(&args.out.join("responses.csv"))?)?;
    println!("wrote {} sections and {} respondents to {}", items.len(), agents.len(), args.out.display());
    Ok(())
}

fn cmd_slots(args: SlotsArgs) -> Result<()> {
    let input = File::open(&args.input).map_err(|source| InputError::File { path: args.input.clone(), source })?;
    let slots = resolve_slots(input, create(&args.out)?)?;
    println!("{slots} distinct meeting patterns");
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let (items, agents) = load_inputs(&args.input)?;
    let base = BuildOptions { k: args.k, ell: args.ell, ..BuildOptions::default() };
    let seeds: Vec<u64> = (0..args.seeds).collect();
    let out = create(&args.out)?;
    match args.kind {
        SweepKind::Runtime => write_runtime_csv(&runtime_sweep(&items, &agents, &args.cohorts, &seeds, &base)?, out)?,
        SweepKind::Stress => write_stress_csv(&stress_sweep(&items, &agents, &args.cohorts, &seeds, &base)?, out)?,
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<RunError>() {
        Some(RunError::Invariant(_)) => EXIT_INVARIANT,
        _ => EXIT_INPUT,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::GenDataset(a) => cmd_gen(a),
        Command::Slots(a) => cmd_slots(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

//! `gridhop` — planning analysis for interconnected radial distribution
//! networks from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use gridhop::balance::{headroom, solve_flows, thermal_violations, FlowError};
use gridhop::doc::{load_file, DocError, NetworkDocument};
use gridhop::econ;
use gridhop::fixtures;
use gridhop::netmodel::{DeviceKind, Network, SwitchPos};
use gridhop::report::{
    CompareOut, EconOut, FirmOut, FixturesOut, FlowsOut, Format, N1Out, Render, SizeOut,
    UseCaseOut, ValidationOut,
};
use gridhop::security::{
    assess, classify_use_case, enumerate_contingencies, firm_capacity, Contingency, SecurityError,
};
use gridhop::sizing::{compare_options, size_device, SizingError};
use gridhop::TOL;

#[derive(Parser)]
#[command(
    name = "gridhop",
    version,
    about = "Planning analysis for interconnected radial distribution networks",
    long_about = "Models radial distribution networks tied together by normally open points, \
                  assesses N-1 security with optimal post-fault reconfiguration under \
                  radiality, thermal and fault-level constraints, sizes soft and hybrid \
                  open-point converters, and evaluates the supporting economics."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value = "text")]
    format: Format,
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a network document: JSON schema, references, structural rules.
    Validate {
        /// Network document (JSON).
        file: PathBuf,
    },
    /// Solve the power balance for the normal or a modified switch state.
    Flows {
        /// Network document (JSON).
        file: PathBuf,
        /// Demand scenario to apply.
        #[arg(long)]
        scenario: Option<String>,
        /// Open this device (repeatable).
        #[arg(long, value_name = "DEVICE")]
        open: Vec<String>,
        /// Close this device (repeatable).
        #[arg(long, value_name = "DEVICE")]
        close: Vec<String>,
        /// Converter set-point, MVA transferred from-side to to-side
        /// (repeatable).
        #[arg(long, value_name = "DEVICE=MVA")]
        set: Vec<String>,
        /// Take a source or branch out of service first (repeatable).
        #[arg(long, value_name = "ELEMENT")]
        outage: Vec<String>,
        /// Spare-capacity probe: how much extra demand `SOURCE` could pick up,
        /// optionally measured at a specific bus (`SOURCE:BUS`).
        #[arg(long, value_name = "SOURCE[:BUS]")]
        headroom: Option<String>,
    },
    /// Assess N-1 security with optimal post-fault reconfiguration.
    N1 {
        /// Network document (JSON).
        file: PathBuf,
        /// Demand scenario to apply.
        #[arg(long)]
        scenario: Option<String>,
        /// Assess as if this device were absent (repeatable).
        #[arg(long, value_name = "DEVICE")]
        without: Vec<String>,
        /// Restrict the assessment to these contingencies (repeatable;
        /// default: every credible outage).
        #[arg(long, value_name = "ID")]
        contingency: Vec<String>,
        /// Exit with an error if any capacity shortfall remains.
        #[arg(long)]
        assert_secure: bool,
        /// Diagnose what limits each contingency that still sheds demand.
        #[arg(long)]
        classify: bool,
    },
    /// Firm capacity: the largest uniformly scaled demand that stays secure.
    FirmCapacity {
        /// Network document (JSON).
        file: PathBuf,
        /// Demand scenario to apply.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Smallest converter rating that fixes the network's capacity shortfall
    /// when installed at one open or closed point.
    Size {
        /// Network document (JSON).
        file: PathBuf,
        /// Device to upgrade.
        #[arg(long, value_name = "DEVICE")]
        at: String,
        /// Technology to install there.
        #[arg(long, value_enum)]
        kind: KindArg,
        /// Demand scenario to apply.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Size several upgrade options side by side.
    Compare {
        /// Network document (JSON).
        file: PathBuf,
        /// Candidate upgrade as `DEVICE:KIND` (repeatable).
        #[arg(long, value_name = "DEVICE:KIND", required = true)]
        option: Vec<String>,
        /// Demand scenario to apply.
        #[arg(long)]
        scenario: Option<String>,
    },
    /// Discounted cash-flow helpers: deferral value, annuities, loss savings.
    Econ {
        /// Optional network document whose `econ` block provides defaults.
        file: Option<PathBuf>,
        /// Annual discount rate (e.g. 0.0325).
        #[arg(long)]
        rate: Option<f64>,
        /// Benefit horizon in years.
        #[arg(long)]
        years: Option<u32>,
        /// Recurring annual benefit (currency units).
        #[arg(long)]
        annual_benefit: Option<f64>,
        /// Years a reinforcement is deferred.
        #[arg(long)]
        deferral_years: Option<u32>,
        /// Average loss reduction in MW.
        #[arg(long)]
        loss_mw: Option<f64>,
        /// Energy price per MWh.
        #[arg(long)]
        price: Option<f64>,
    },
    /// Write the bundled example networks as JSON files.
    Fixtures {
        /// Target directory (default: $GRIDHOP_FIXTURE_DIR, else the current
        /// directory).
        #[arg(long)]
        dir: Option<PathBuf>,
    },
}

/// Device technology names accepted on the command line.
#[derive(Debug, Clone, Copy, ValueEnum)]
enum KindArg {
    Nop,
    Ncp,
    Sop,
    Hop1,
    Hop2,
}

impl From<KindArg> for DeviceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Nop => DeviceKind::Nop,
            KindArg::Ncp => DeviceKind::Ncp,
            KindArg::Sop => DeviceKind::Sop,
            KindArg::Hop1 => DeviceKind::Hop1,
            KindArg::Hop2 => DeviceKind::Hop2,
        }
    }
}

/// Failures split by exit code: bad input (2) versus an analysis that ran
/// and concluded the request cannot be satisfied (1).
enum CliError {
    Input(String),
    Analysis(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Analysis(_) => 1,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Input(m) | CliError::Analysis(m) => m,
        }
    }
}

impl From<DocError> for CliError {
    fn from(e: DocError) -> Self {
        CliError::Input(e.to_string())
    }
}

fn flow_error(e: FlowError) -> CliError {
    match e {
        FlowError::NonRadialState => CliError::Analysis(e.to_string()),
        other => CliError::Input(other.to_string()),
    }
}

fn security_error(e: SecurityError) -> CliError {
    match e {
        SecurityError::Infeasible { .. } | SecurityError::TooManySwitches(_) => {
            CliError::Analysis(e.to_string())
        }
        SecurityError::Flow(f) => flow_error(f),
        other => CliError::Input(other.to_string()),
    }
}

fn sizing_error(e: SizingError) -> CliError {
    match e {
        SizingError::Security(s) => security_error(s),
        other => CliError::Input(other.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

fn emit(rendered: String, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, rendered)
            .map_err(|e| CliError::Input(format!("could not write {}: {e}", path.display()))),
        None => {
            print!("{rendered}");
            Ok(())
        }
    }
}

/// The name a report identifies the network by: the document's declared name,
/// falling back to the file path.
fn display_name(doc: &NetworkDocument, file: &Path) -> String {
    doc.name.clone().unwrap_or_else(|| file.display().to_string())
}

fn load(file: &Path) -> Result<NetworkDocument, CliError> {
    Ok(load_file(file)?)
}

fn instantiate(doc: &NetworkDocument, scenario: &Option<String>) -> Result<Network, CliError> {
    Ok(doc.network_for_scenario(scenario.as_deref())?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Validate { file } => {
            // Parse leniently so reference problems surface as structural
            // violations in the report rather than aborting it.
            let raw = std::fs::read_to_string(&file)
                .map_err(|e| CliError::Input(format!("could not read {}: {e}", file.display())))?;
            let doc = gridhop::doc::parse_lenient(&raw)?;
            let net = doc.to_network()?;
            let report = net.validate();
            let out = ValidationOut::new(display_name(&doc, &file), &report);
            emit(out.render(cli.format), &cli.out)?;
            if out.valid {
                Ok(())
            } else {
                Err(CliError::Analysis(format!(
                    "network is not valid ({} violation{})",
                    out.violation_count,
                    if out.violation_count == 1 { "" } else { "s" }
                )))
            }
        }

        Command::Flows { file, scenario, open, close, set, outage, headroom: probe } => {
            let doc = load(&file)?;
            let mut net = instantiate(&doc, &scenario)?;
            for elem in &outage {
                let contingency = if net.source(elem).is_some() {
                    Contingency::source(elem.clone())
                } else if net.branch(elem).is_some() {
                    Contingency::branch(elem.clone())
                } else {
                    return Err(CliError::Input(format!(
                        "--outage {elem}: no source or branch with that id"
                    )));
                };
                net = contingency.apply(&net).map_err(security_error)?;
            }
            let mut state = net.normal_state();
            for (flag, ids, pos) in
                [("--open", &open, SwitchPos::Open), ("--close", &close, SwitchPos::Closed)]
            {
                for id in ids {
                    if net.device(id).is_none() {
                        return Err(CliError::Input(format!(
                            "{flag} {id}: no device with that id"
                        )));
                    }
                    state.set_position(id, pos);
                }
            }
            for spec in &set {
                let (id, value) = spec.split_once('=').ok_or_else(|| {
                    CliError::Input(format!("--set {spec}: expected DEVICE=MVA"))
                })?;
                let value: f64 = value.parse().map_err(|e| {
                    CliError::Input(format!("--set {spec}: bad set-point: {e}"))
                })?;
                if net.device(id).is_none() {
                    return Err(CliError::Input(format!("--set {id}: no device with that id")));
                }
                state.set_set_point(id, value);
            }
            let solution = solve_flows(&net, &state).map_err(flow_error)?;
            let thermal = thermal_violations(&net, &solution);
            let fault = net.fault_level_violations(&state);
            let probe = match &probe {
                Some(spec) => {
                    let (source, at_bus) = match spec.split_once(':') {
                        Some((s, b)) => (s, Some(b)),
                        None => (spec.as_str(), None),
                    };
                    Some(headroom(&net, &state, source, at_bus).map_err(flow_error)?)
                }
                None => None,
            };
            let out = FlowsOut::build(
                display_name(&doc, &file),
                scenario,
                &net,
                &solution,
                &thermal,
                &fault,
                probe.as_ref(),
            );
            emit(out.render(cli.format), &cli.out)
        }

        Command::N1 { file, scenario, without, contingency, assert_secure, classify } => {
            let doc = load(&file)?;
            let mut net = instantiate(&doc, &scenario)?;
            for id in &without {
                if net.device(id).is_none() {
                    return Err(CliError::Input(format!(
                        "--without {id}: no device with that id"
                    )));
                }
                net.devices.retain(|d| &d.id != id);
            }
            let all = enumerate_contingencies(&net);
            let selected: Vec<Contingency> = if contingency.is_empty() {
                all.clone()
            } else {
                for id in &contingency {
                    if !all.iter().any(|c| &c.id == id) {
                        return Err(CliError::Input(format!(
                            "--contingency {id}: not a credible outage here (available: {})",
                            all.iter().map(|c| c.id.as_str()).collect::<Vec<_>>().join(", ")
                        )));
                    }
                }
                all.iter().filter(|c| contingency.contains(&c.id)).cloned().collect()
            };
            let report = assess(&net, &selected).map_err(security_error)?;
            let classification = if classify {
                let mut cases = Vec::new();
                for outcome in &report.outcomes {
                    if outcome.plan.unserved > TOL {
                        let case = classify_use_case(&net, &outcome.contingency)
                            .map_err(security_error)?;
                        cases.push(UseCaseOut::from(&case));
                    }
                }
                Some(cases)
            } else {
                None
            };
            let out =
                N1Out::build(display_name(&doc, &file), scenario, &net, &report, classification);
            emit(out.render(cli.format), &cli.out)?;
            if assert_secure && !report.secure {
                return Err(CliError::Analysis(format!(
                    "network is not N-1 secure: shortfall {:.6} MVA{}",
                    report.shortfall,
                    report
                        .worst
                        .as_deref()
                        .map(|w| format!(" (worst contingency: `{w}`)"))
                        .unwrap_or_default()
                )));
            }
            Ok(())
        }

        Command::FirmCapacity { file, scenario } => {
            let doc = load(&file)?;
            let net = instantiate(&doc, &scenario)?;
            let firm = firm_capacity(&net).map_err(security_error)?;
            let out = FirmOut::new(display_name(&doc, &file), scenario, &firm);
            emit(out.render(cli.format), &cli.out)
        }

        Command::Size { file, at, kind, scenario } => {
            let doc = load(&file)?;
            let net = instantiate(&doc, &scenario)?;
            let outcome = size_device(&net, &at, kind.into()).map_err(sizing_error)?;
            let out = SizeOut::new(display_name(&doc, &file), scenario, &outcome);
            emit(out.render(cli.format), &cli.out)
        }

        Command::Compare { file, option, scenario } => {
            let doc = load(&file)?;
            let net = instantiate(&doc, &scenario)?;
            let mut options = Vec::new();
            for spec in &option {
                let (id, kind) = spec.rsplit_once(':').ok_or_else(|| {
                    CliError::Input(format!("--option {spec}: expected DEVICE:KIND"))
                })?;
                let kind = KindArg::from_str(kind, true).map_err(|_| {
                    CliError::Input(format!(
                        "--option {spec}: unknown kind `{kind}` (expected nop, ncp, sop, hop1 \
                         or hop2)"
                    ))
                })?;
                options.push((id.to_string(), DeviceKind::from(kind)));
            }
            let comparison = compare_options(&net, &options).map_err(sizing_error)?;
            let out = CompareOut::new(display_name(&doc, &file), scenario, &comparison);
            emit(out.render(cli.format), &cli.out)
        }

        Command::Econ { file, rate, years, annual_benefit, deferral_years, loss_mw, price } => {
            let (network, defaults) = match &file {
                Some(path) => {
                    let doc = load(path)?;
                    (Some(display_name(&doc, path)), doc.econ.unwrap_or_default())
                }
                None => (None, Default::default()),
            };
            let rate = rate.or(defaults.discount_rate);
            let years = years.or(defaults.horizon_years);
            let annual_benefit = annual_benefit.or(defaults.annual_benefit);
            let deferral_years = deferral_years.or(defaults.deferral_years);

            let mut out = EconOut { network, discount_rate: rate, ..Default::default() };
            let econ_err = |e: econ::EconError| CliError::Input(e.to_string());
            if let (Some(r), Some(n)) = (rate, deferral_years) {
                out.deferral_years = Some(n);
                out.deferral_cost_reduction_percent =
                    Some(econ::deferral_cost_reduction(n, r).map_err(econ_err)?);
            }
            if let (Some(r), Some(n)) = (rate, years) {
                out.horizon_years = Some(n);
                out.annuity_factor = Some(econ::annuity_factor(n, r).map_err(econ_err)?);
                if let Some(b) = annual_benefit {
                    out.annual_benefit = Some(b);
                    out.lifetime_benefit =
                        Some(econ::lifetime_operational_benefit(b, n, r).map_err(econ_err)?);
                }
            }
            if let (Some(mw), Some(p)) = (loss_mw, price) {
                out.loss_reduction_mw = Some(mw);
                out.energy_price_per_mwh = Some(p);
                out.annual_energy_mwh = Some(mw * econ::HOURS_PER_YEAR);
                out.loss_reduction_annual_benefit =
                    Some(econ::loss_reduction_annual_benefit(mw, p));
            }
            let computed_something = out.deferral_cost_reduction_percent.is_some()
                || out.annuity_factor.is_some()
                || out.loss_reduction_annual_benefit.is_some();
            if !computed_something {
                return Err(CliError::Input(
                    "nothing to compute: provide --rate with --deferral-years or --years \
                     (optionally --annual-benefit), or --loss-mw with --price, or a document \
                     whose econ block carries the parameters"
                        .to_string(),
                ));
            }
            emit(out.render(cli.format), &cli.out)
        }

        Command::Fixtures { dir } => {
            let dir = dir
                .or_else(|| std::env::var_os("GRIDHOP_FIXTURE_DIR").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir).map_err(|e| {
                CliError::Input(format!("could not create {}: {e}", dir.display()))
            })?;
            let mut files = Vec::new();
            for (name, doc) in fixtures::bundled() {
                let path = dir.join(name);
                std::fs::write(&path, doc.to_json_pretty()).map_err(|e| {
                    CliError::Input(format!("could not write {}: {e}", path.display()))
                })?;
                files.push(name.to_string());
            }
            let out = FixturesOut { directory: dir.display().to_string(), files };
            emit(out.render(cli.format), &cli.out)
        }
    }
}

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dscflow::mesh::{check_mesh, write_mesh_file};
use dscflow::scenario::{build_mesh, Scenario};
use dscflow::solver::RunEvent;
use dscflow::validation::{run_suite, select, SuiteOptions};
use dscflow::{Error, ScenarioConfig};

const EXIT_VALIDATION: u8 = 3;
const OUTPUT_DIR_VAR: &str = "DSC_OUTPUT_DIR";

#[derive(Parser)]
#[command(name = "dsc", version, about = "Buoyant incompressible flow on hexahedral meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write fields, probes and the effective config.
    Run {
        config: PathBuf,
        /// Print a progress line every N steps (default: at output cadence).
        #[arg(long)]
        progress_every: Option<u64>,
    },
    /// Generate the scenario mesh, write it as `mesh.txt` and report quality.
    MeshGen { config: PathBuf },
    /// Report quality findings for a mesh file.
    CheckMesh { mesh: PathBuf },
    /// Run acceptance checks: all, a group (geometry, thermal, pressure,
    /// flow, scattering), a check name or its number.
    Validate {
        suite: Option<String>,
        /// Corrupt the flux coefficients to demonstrate a failing check.
        #[arg(long)]
        inject_sign_error: bool,
    },
}

fn output_dir(config: &ScenarioConfig) -> PathBuf {
    std::env::var_os(OUTPUT_DIR_VAR).map(PathBuf::from).unwrap_or_else(|| config.output.directory.clone())
}

fn base_dir(config_path: &Path) -> &Path {
    config_path.parent().unwrap_or(Path::new("."))
}

fn run(config_path: &Path, progress_every: Option<u64>) -> Result<(), Error> {
    let config = ScenarioConfig::from_file(config_path)?;
    let out = output_dir(&config);
    let cadence = progress_every.unwrap_or(config.output.every).max(1);
    let mut scenario = Scenario::build(config, base_dir(config_path))?;
    println!(
        "{} cells, {} interior faces, t_end {} s -> {}",
        scenario.simulation.mesh.num_cells(),
        scenario.simulation.mesh.num_interior_faces(),
        scenario.run.t_end,
        out.display()
    );
    let outcome = scenario.execute(&out, |_, event| match event {
        RunEvent::Step(report) if report.step % cadence == 0 || !report.pressure_converged => println!("{report}"),
        RunEvent::Steady => println!("steady state reached"),
        _ => {}
    })?;
    let s = &outcome.summary;
    println!(
        "done: {} steps, t = {:.6e} s, steady: {}, pressure warnings: {}, {} files written",
        s.steps,
        s.time,
        s.steady,
        s.pressure_warnings,
        outcome.files.len()
    );
    Ok(())
}

fn mesh_gen(config_path: &Path) -> Result<bool, Error> {
    let config = ScenarioConfig::from_file(config_path)?;
    let mesh = build_mesh(&config, base_dir(config_path))?;
    let out = output_dir(&config);
    std::fs::create_dir_all(&out).map_err(dscflow::mesh::MeshIoError::from)?;
    let path = out.join("mesh.txt");
    write_mesh_file(&mesh, &path)?;
    let report = mesh.validate();
    print!("{report}");
    println!("wrote {}", path.display());
    Ok(report.is_ok())
}

fn check(mesh_path: &Path) -> Result<bool, Error> {
    let text = std::fs::read_to_string(mesh_path).map_err(dscflow::mesh::MeshIoError::from)?;
    let report = check_mesh(&text)?;
    print!("{report}");
    Ok(report.is_ok())
}

fn validate(suite: Option<&str>, inject_sign_error: bool) -> ExitCode {
    let selection = suite.unwrap_or("all");
    let Some(criteria) = select(selection) else {
        eprintln!("unknown suite `{selection}`");
        return ExitCode::from(2);
    };
    let results = run_suite(&criteria, &SuiteOptions { inject_sign_error });
    for r in &results {
        println!("{r}");
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_VALIDATION)
    }
}

fn report(result: Result<bool, Error>) -> ExitCode {
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_VALIDATION),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Run { config, progress_every } => report(run(&config, progress_every).map(|()| true)),
        Command::MeshGen { config } => report(mesh_gen(&config)),
        Command::CheckMesh { mesh } => report(check(&mesh)),
        Command::Validate { suite, inject_sign_error } => validate(suite.as_deref(), inject_sign_error),
    }
}

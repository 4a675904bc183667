//! Building and running a scenario from configuration text, as the `dsc run`
//! command does.

use std::path::Path;

use dscflow::scenario::Scenario;
use dscflow::solver::RunEvent;
use dscflow::ScenarioConfig;

const CONFIG: &str = r#"
[mesh]
generator = "box"
cells = [8, 8, 1]
lengths = [1.0, 1.0, 0.125]

[[boundary]]
patch = "ymin"
kind = "noslip"
temperature = 1.0

[fluid]
alpha = 0.01
mu = 0.01
rho_inf = 1.0
beta_exp = -1.0
t_inf = 0.0
gravity = [0.0, -1.0, 0.0]

[initial]
temperature = 0.0

[run]
t_end = 2.0

[output]
every = 50
formats = ["csv"]
probes = [3, 35]
"#;

fn main() {
    let config = ScenarioConfig::parse(CONFIG).expect("valid config");
    print!("effective configuration:\n{}", config.to_toml());
    let mut scenario = Scenario::build(config, Path::new(".")).expect("setup");
    let out = std::env::temp_dir().join("dsc-scenario-example");
    let outcome = scenario
        .execute(&out, |_, event| {
            if let RunEvent::Step(r) = event {
                if r.step % 50 == 0 {
                    println!("{r}");
                }
            }
        })
        .expect("run");
    println!("{} steps, files: {:?}", outcome.summary.steps, outcome.files);
}

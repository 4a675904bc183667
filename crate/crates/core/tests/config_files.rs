use std::path::{Path, PathBuf};

use dscflow::config::{MeshSpec, RegionSelector, WallKind};
use dscflow::scenario::Scenario;
use dscflow::ScenarioConfig;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

#[test]
fn annulus_scenario_has_coax_dimensions() {
    let c = ScenarioConfig::from_file(scenario("annulus.toml")).unwrap();
    let MeshSpec::Annulus { r_inner, r_outer, .. } = c.mesh else { panic!("annulus mesh expected") };
    assert_eq!((r_inner, r_outer), (0.05, 0.115));
    let outer = c.boundary.iter().find(|b| b.patch == "outer").unwrap();
    assert_eq!(outer.kind, WallKind::NoSlip);
    assert_eq!(outer.temperature, Some(313.15));
    assert_eq!(c.source.regions[0].selector, RegionSelector::AdjacentTo("inner".into()));
}

#[test]
fn shipped_scenarios_build_and_echo_round_trips() {
    for name in ["annulus.toml", "cavity.toml", "rod.toml"] {
        let c = ScenarioConfig::from_file(scenario(name)).unwrap();
        let echoed = c.to_toml();
        let back = ScenarioConfig::parse(&echoed).unwrap();
        assert_eq!(back, c, "{name}");
        assert_eq!(back.to_toml(), echoed, "{name}");
        Scenario::build(c, Path::new(".")).unwrap();
    }
}

mod common;

use std::fs;
use std::path::Path;

use proptest::prelude::*;

use solsent::geolocate::{Gazetteer, GazetteerError, GeoMethod, GeoOutcome, Region, StateCode};

fn st(code: &str) -> GeoOutcome {
    GeoOutcome::State(StateCode::from_code(code).unwrap())
}

#[test]
fn documented_examples() {
    let g = common::gazetteer();
    assert_eq!(
        g.resolve(Some("Denver, CO"), None),
        (st("CO"), GeoMethod::ProfileExact)
    );
    assert_eq!(
        g.resolve(None, Some((39.74, -104.99))),
        (st("CO"), GeoMethod::Coordinates)
    );
    assert_eq!(
        g.resolve(Some("Toronto, Canada"), None),
        (GeoOutcome::NonUs, GeoMethod::None)
    );
}

#[test]
fn every_centroid_resolves_to_its_state() {
    let g = common::gazetteer();
    assert_eq!(g.states().len(), 51);
    for s in g.states() {
        let (lat, lon) = s.centroid;
        assert_eq!(
            g.resolve(None, Some((lat, lon))).0,
            GeoOutcome::State(s.code),
            "{}",
            s.name
        );
    }
}

#[test]
fn overlapping_boxes_break_on_nearest_centroid() {
    let g = common::gazetteer();
    let dc = g.state(StateCode::from_code("DC").unwrap());
    let md = g.state(StateCode::from_code("MD").unwrap());
    assert!(md.bbox.contains(dc.centroid.0, dc.centroid.1));
    assert_eq!(
        g.state_at(dc.centroid.0, dc.centroid.1),
        StateCode::from_code("DC")
    );
}

#[test]
fn coordinates_outside_and_between() {
    let g = common::gazetteer();
    assert_eq!(g.resolve(None, Some((48.85, 2.35))).0, GeoOutcome::NonUs);
    assert_eq!(g.resolve(None, Some((-33.9, 151.2))).0, GeoOutcome::NonUs);
    // Gulf of Mexico: inside the national envelope, in no state box.
    assert_eq!(
        g.resolve(None, Some((26.0, -91.0))),
        (GeoOutcome::Unknown, GeoMethod::None)
    );
    // Foreign coordinates, but the profile names a state.
    assert_eq!(
        g.resolve(Some("Boise, Idaho"), Some((48.85, 2.35))).0,
        st("ID")
    );
}

#[test]
fn ambiguous_abbreviations() {
    let g = common::gazetteer();
    assert_eq!(g.resolve_profile("Portland, OR").0, st("OR"));
    assert_eq!(g.resolve_profile("Portland, ME").0, st("ME"));
    assert_eq!(g.resolve_profile("here or there").0, GeoOutcome::Unknown);
    assert_eq!(g.resolve_profile("hi there").0, GeoOutcome::Unknown);
    assert_eq!(g.resolve_profile("USA").0, GeoOutcome::Unknown);
    assert_eq!(g.resolve_profile("United States").0, GeoOutcome::Unknown);
}

fn copy_gazetteer(dir: &Path) {
    for f in ["states.csv", "cities.csv", "aliases.csv"] {
        fs::copy(common::data_dir().join("gazetteer").join(f), dir.join(f)).unwrap();
    }
}

fn edit_states(dir: &Path, f: impl Fn(&str) -> Option<String>) {
    let body = fs::read_to_string(dir.join("states.csv")).unwrap();
    let out: String = body
        .lines()
        .filter_map(|l| f(l).map(|l| l + "\n"))
        .collect();
    fs::write(dir.join("states.csv"), out).unwrap();
}

#[test]
fn loader_rejects_bad_fixtures() {
    let dir = tempfile::tempdir().unwrap();
    copy_gazetteer(dir.path());
    assert_eq!(Gazetteer::load(dir.path()).unwrap().states().len(), 51);

    edit_states(dir.path(), |l| {
        (!l.starts_with("DC,")).then(|| l.to_string())
    });
    match Gazetteer::load(dir.path()) {
        Err(GazetteerError::MissingState(s)) => assert_eq!(s.code(), "DC"),
        other => panic!("{other:?}"),
    }

    copy_gazetteer(dir.path());
    edit_states(dir.path(), |l| {
        Some(if l.starts_with("CO,") {
            "CO,Colorado,West,41.50,36.99,-109.06,-102.04,39.00,-105.55".to_string()
        } else {
            l.to_string()
        })
    });
    let e = Gazetteer::load(dir.path()).unwrap_err();
    assert!(matches!(e, GazetteerError::Row { .. }));
    assert!(e.to_string().contains("CO"), "{e}");

    copy_gazetteer(dir.path());
    edit_states(dir.path(), |l| {
        Some(l.replacen("CO,Colorado,West", "CO,Colorado,South", 1))
    });
    assert!(Gazetteer::load(dir.path()).is_err());

    copy_gazetteer(dir.path());
    let mut aliases = fs::read_to_string(dir.path().join("aliases.csv")).unwrap();
    aliases.push_str("Colorado,UT\n");
    fs::write(dir.path().join("aliases.csv"), aliases).unwrap();
    assert!(matches!(
        Gazetteer::load(dir.path()),
        Err(GazetteerError::Conflict { .. })
    ));

    fs::remove_file(dir.path().join("cities.csv")).unwrap();
    let e = Gazetteer::load(dir.path()).unwrap_err();
    assert!(e.to_string().contains("cities.csv"), "{e}");
}

#[test]
fn regions_follow_census_scheme() {
    let count = |r| StateCode::all().filter(|s| s.region() == r).count();
    assert_eq!(
        [
            count(Region::Northeast),
            count(Region::Midwest),
            count(Region::South),
            count(Region::West)
        ],
        [9, 12, 17, 13]
    );
    assert_eq!(StateCode::from_code("DC").unwrap().region(), Region::South);
}

fn profile_string() -> impl Strategy<Value = String> {
    prop_oneof![
        "[A-Za-z ,.]{0,24}",
        Just("Austin, TX".to_string()),
        Just("Toronto, Canada".to_string()),
        Just("Ohio".to_string()),
        Just("somewhere".to_string()),
    ]
}

proptest! {
    #[test]
    fn coordinates_win_over_profiles(i in 0usize..51, loc in profile_string()) {
        let g = common::gazetteer();
        let s = &g.states()[i];
        let (outcome, method) = g.resolve(Some(&loc), Some(s.centroid));
        prop_assert_eq!(outcome, GeoOutcome::State(s.code));
        prop_assert_eq!(method, GeoMethod::Coordinates);
    }

    #[test]
    fn total_and_consistent(loc in proptest::option::of("\\PC{0,30}"), lat in -100.0f64..100.0, lon in -200.0f64..200.0) {
        let g = common::gazetteer();
        let a = g.resolve(loc.as_deref(), Some((lat, lon)));
        prop_assert_eq!(a, g.resolve(loc.as_deref(), Some((lat, lon))));
        prop_assert_eq!(a.0.state().is_some(), a.1 != GeoMethod::None);
    }
}

use chrono::NaiveDate;
use stormcast::clustering::DbscanParams;
use stormcast::features::{extract_detailed, extract_features};
use stormcast::imaging::CannyParams;
use stormcast::synth::{render_sun, spot_layout, SunSpec};

fn day() -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 1, 1).unwrap()
}

#[test]
fn planted_spots_are_counted() {
    let canny = CannyParams::default();
    let db = DbscanParams::default();
    for k in 0..=8usize {
        let spec = SunSpec {
            seed: 100 + k as u64,
            ..SunSpec::default()
        };
        // one isolated spot per group
        let spots = spot_layout(&spec, k, k, 7 * k as u64 + 1).unwrap();
        let img = render_sun(&spec, &spots);
        let ex = extract_detailed(day(), &img, &canny, &db).unwrap();
        assert_eq!(ex.record.sunspots, k, "k = {k}");
        assert_eq!(ex.record.regions, k, "k = {k}");
    }
}

#[test]
fn grouped_spots_form_regions() {
    let canny = CannyParams::default();
    let db = DbscanParams::default();
    for (k, g, seed) in [(2, 1, 1), (5, 2, 2), (8, 3, 3), (6, 2, 4), (8, 2, 5), (3, 3, 6), (4, 1, 7)] {
        let spec = SunSpec {
            seed,
            ..SunSpec::default()
        };
        let spots = spot_layout(&spec, k, g, seed * 31).unwrap();
        let img = render_sun(&spec, &spots);
        let rec = extract_features(day(), &img, &canny, &db).unwrap();
        assert_eq!((rec.sunspots, rec.regions), (k, g), "k = {k}, g = {g}");
    }
}

#[test]
fn pale_spots_stay_below_threshold() {
    let spec = SunSpec {
        spot_level: 170.0,
        seed: 9,
        ..SunSpec::default()
    };
    let spots = spot_layout(&spec, 4, 4, 12).unwrap();
    let img = render_sun(&spec, &spots);
    let rec = extract_features(day(), &img, &CannyParams::default(), &DbscanParams::default()).unwrap();
    assert_eq!((rec.sunspots, rec.regions), (0, 0));
}

#[test]
fn limb_is_masked_out() {
    // a bare disk: the limb itself is a strong edge but lies outside the mask
    let img = render_sun(&SunSpec::default(), &[]);
    let ex = extract_detailed(day(), &img, &CannyParams::default(), &DbscanParams::default()).unwrap();
    assert!(ex.stages.raw_edges.count_set() > 1000);
    assert_eq!(ex.stages.edges.count_set(), 0);
}

use std::collections::BTreeSet;
use std::path::Path;

use chrono::NaiveDate;
use hine_core::catalog::{
    eligible_category, next_due, Eligibility, NEONATAL_ITEM_NAMES, POST_NEONATAL_SCHEDULE,
};
use hine_core::{load_catalog, CatalogError, Catalogs, Category};
use proptest::prelude::*;

fn bundled(name: &str) -> String {
    std::fs::read_to_string(
        Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("catalogs")
            .join(name),
    )
    .unwrap()
}

#[test]
fn bundled_files_match_embedded_catalogs() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("catalogs");
    let from_files =
        Catalogs::from_files(&dir.join("neonatal.json"), &dir.join("post_neonatal.json")).unwrap();
    assert_eq!(from_files, Catalogs::bundled());
}

#[test]
fn neonatal_names_in_order() {
    let c = load_catalog(&bundled("neonatal.json")).unwrap();
    let names: Vec<String> = c.items.iter().map(|i| i.name.to_lowercase()).collect();
    assert_eq!(names, NEONATAL_ITEM_NAMES);
}

#[test]
fn post_neonatal_sections_present() {
    let c = load_catalog(&bundled("post_neonatal.json")).unwrap();
    assert_eq!(c.category, Category::PostNeonatal);
    assert_eq!(c.schedule_months, POST_NEONATAL_SCHEDULE);
    let sections: BTreeSet<String> = c.items.iter().map(|i| format!("{:?}", i.section)).collect();
    assert_eq!(sections.len(), 3);
}

type Mutation = dyn Fn(&mut serde_json::Value);

#[test]
fn mutations_are_rejected() {
    let base: serde_json::Value = serde_json::from_str(&bundled("neonatal.json")).unwrap();
    let cases: Vec<Box<Mutation>> = vec![
        Box::new(|v| {
            v["items"].as_array_mut().unwrap().pop();
        }),
        Box::new(|v| {
            v["items"][2]["templates"]
                .as_array_mut()
                .unwrap()
                .truncate(3);
        }),
        Box::new(|v| v["items"][1]["id"] = v["items"][0]["id"].clone()),
        Box::new(|v| {
            v["items"][4]["templates"][1]["id"] = v["items"][4]["templates"][0]["id"].clone()
        }),
        Box::new(|v| v["items"][0]["section"] = "behaviour".into()),
        Box::new(|v| v["schedule_months"] = serde_json::json!([3])),
    ];
    for (k, mutate) in cases.iter().enumerate() {
        let mut v = base.clone();
        mutate(&mut v);
        assert!(
            matches!(
                load_catalog(&v.to_string()),
                Err(CatalogError::Validation(_))
            ),
            "case {k}"
        );
    }
}

proptest! {
    #[test]
    fn categories_are_exclusive(gw in 20u32..=44, days in 0u64..1200, prior in any::<bool>()) {
        let birth = NaiveDate::from_ymd_opt(2024, 3, 1).unwrap();
        let on = birth + chrono::Days::new(days);
        let e = eligible_category(gw, birth, on, prior).unwrap();
        prop_assert!(!(prior && e == Eligibility::Neonatal));
        let corrected = (days as i64 - (40 - i64::from(gw)) * 7) as f64 / (365.25 / 12.0);
        if e == Eligibility::PostNeonatal {
            prop_assert!((2.0..=24.0).contains(&corrected));
        }
        if e == Eligibility::Neonatal {
            prop_assert!(corrected < 2.0 && i64::from(gw) + days as i64 / 7 >= 40);
        }
    }

    #[test]
    fn next_due_is_monotone(age in 0.0f64..30.0, done in proptest::collection::btree_set(proptest::sample::select(POST_NEONATAL_SCHEDULE.to_vec()), 0..8), extra in proptest::sample::select(POST_NEONATAL_SCHEDULE.to_vec())) {
        let before = next_due(age, &done);
        let mut more = done.clone();
        more.insert(extra);
        let after = next_due(age, &more);
        match (before, after) {
            (Some(b), Some(a)) => prop_assert!(a >= b),
            (None, Some(_)) => prop_assert!(false, "completing a mark revived the schedule"),
            _ => {}
        }
        if let Some(m) = before {
            prop_assert!(f64::from(m) >= age.floor() && !done.contains(&m));
        }
    }
}

#[test]
fn forty_weeks_is_inclusive() {
    let birth = NaiveDate::from_ymd_opt(2025, 6, 1).unwrap();
    assert_eq!(
        eligible_category(40, birth, birth, false),
        Ok(Eligibility::Neonatal)
    );
    assert_eq!(
        eligible_category(44, birth, birth, false),
        Ok(Eligibility::Neonatal)
    );
    assert!(matches!(
        eligible_category(45, birth, birth, false),
        Err(CatalogError::InvalidInput(_))
    ));
}

use finalchain_demo::{compare, encode, projections};
use serde_json::Value;

#[test]
fn compare_reports_level_and_witness() {
    let v: Value = serde_json::from_str(&compare("v2", "z2").unwrap()).unwrap();
    assert_eq!(v["bisimilar"], false);
    assert_eq!(v["level"], 2);
    assert!(v["witness"].as_str().unwrap().contains("moves to"));
    let v: Value = serde_json::from_str(&compare("v3", "vset:{0,1,2}").unwrap()).unwrap();
    assert_eq!(v["bisimilar"], true);
    assert!(compare("vomega", "v1").is_err());
}

#[test]
fn projections_list_levels() {
    let levels: Vec<String> = serde_json::from_str(&projections("v2", 3).unwrap()).unwrap();
    assert_eq!(levels, ["()", "{()}@1", "{{},{()}}@2", "{{},{{}}}@3"]);
    assert!(projections("vomega", 4).is_ok());
    assert!(projections("v2", 40).is_err());
    assert!(projections("w", 1).is_err());
}

#[test]
fn encode_shows_prefix_images() {
    let v: Value = serde_json::from_str(&encode("101").unwrap()).unwrap();
    assert_eq!(v["set"], serde_json::json!([0, 2, 3]));
    assert_eq!(v["images"].as_array().unwrap().len(), 4);
    assert_eq!(v["images"][0][0], "ε");
    assert!(encode("10x").is_err());
}

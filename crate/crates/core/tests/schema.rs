//! The shipped JSON schema agrees with the configuration defaults.

use serde_json::Value;

use biphoton::config::ConfigDoc;

fn schema() -> Value {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/schema.json");
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn defaults_match_the_baseline_document() {
    let s = schema();
    let doc = serde_json::to_value(ConfigDoc::default()).unwrap();
    let props = &s["$defs"]["config"]["properties"];
    for (section, fields) in doc.as_object().unwrap() {
        match fields {
            Value::Object(fields) => {
                for (name, value) in fields {
                    let documented = &props[section]["properties"][name]["default"];
                    assert_eq!(documented, value, "/{section}/{name}");
                }
            }
            value => assert_eq!(&props[section]["default"], value, "/{section}"),
        }
    }
}

#[test]
fn every_observable_is_listed() {
    let s = schema();
    let listed = &s["$defs"]["sweep"]["properties"]["observables"]["items"]["enum"];
    let names: Vec<Value> = biphoton::config::Observable::ALL.iter().map(|o| Value::from(o.name())).collect();
    assert_eq!(listed.as_array().unwrap(), &names);
}

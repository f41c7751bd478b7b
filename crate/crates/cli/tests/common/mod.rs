#![allow(dead_code)]

use std::path::PathBuf;

use argverify_core::{Argument, Qbaf};

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/eval20")
}

fn edges(list: &[(&str, &str)]) -> Vec<(String, String)> {
    list.iter()
        .map(|(a, b)| (a.to_string(), b.to_string()))
        .collect()
}

/// Claim plus E1..E3: E1 and E2 support the claim, E3 attacks it, E2
/// supports E1 and E3 attacks E1.
pub fn contest_graph() -> Qbaf {
    Qbaf::build(
        vec![
            Argument::claim("claim", "Vitamin C prevents colds.", 0.5),
            Argument::evidence(
                "E1",
                "A trial found fewer colds among vitamin C users.",
                0.5,
            ),
            Argument::evidence("E2", "A second trial replicated the first.", 0.5),
            Argument::evidence("E3", "A review found no effect of vitamin C on colds.", 0.5),
        ],
        edges(&[("E3", "claim"), ("E3", "E1")]),
        edges(&[("E1", "claim"), ("E2", "claim"), ("E2", "E1")]),
    )
    .unwrap()
}

pub const CONTEST_EDITS: &str = r#"[{"op": "set_base_score", "id": "E1", "base_score": 0.1}, {"op": "set_base_score", "id": "E3", "base_score": 0.9}]"#;

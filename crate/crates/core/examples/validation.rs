//! Diagnostics: parse errors carry a line and column, validation errors a
//! stable code and location.

use streampay::pipeline::{parse, validate};

const BROKEN: &[(&str, &str)] = &[
    ("cycle", include_str!("../fixtures/invalid/cycle.toml")),
    (
        "duplicate id",
        include_str!("../fixtures/invalid/duplicate_id.toml"),
    ),
    (
        "unknown template",
        include_str!("../fixtures/invalid/unknown_template.toml"),
    ),
    ("bad syntax", "[pipeline]\nname = \"x\n"),
];

fn main() {
    for (label, text) in BROKEN {
        println!("{label}:");
        match parse(text) {
            Err(e) => println!("  {e}"),
            Ok(spec) => {
                for e in validate(&spec) {
                    println!("  {e}");
                }
            }
        }
    }
}

//! Writes a Schottky spec file for the `critflow delta` and `critflow flow`
//! subcommands. Pick a built-in fixture and a translation length:
//!
//! ```text
//! cargo run -p critflow-core --example mkspec -- separated 4.0 group.json
//! cargo run -p critflow-core --example mkspec -- cyclic 1.5 group.json
//! ```

use critflow_core::schottky::{cyclic_fixture, separated_fixture, SchottkyGroupSpec};

fn main() {
    let mut args = std::env::args().skip(1);
    let usage = "usage: mkspec <separated|cyclic> <length> <out.json>";
    let kind = args.next().expect(usage);
    let ell: f64 = args.next().expect(usage).parse().expect("length must be a number");
    let path = args.next().expect(usage);

    let spec: SchottkyGroupSpec<f64> = match kind.as_str() {
        "separated" => separated_fixture(2, ell, 0.5),
        "cyclic" => cyclic_fixture(2, ell),
        other => panic!("unknown fixture {other}; {usage}"),
    }
    .unwrap();

    std::fs::write(&path, serde_json::to_string_pretty(&spec).unwrap()).unwrap();
    eprintln!("wrote {path} ({} generators)", spec.generator_count());
}

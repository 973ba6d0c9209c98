use std::env;
use std::path::PathBuf;

use cbindgen::{Config, EnumConfig, Language, RenameRule};

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").expect("CARGO_MANIFEST_DIR");
    let out = PathBuf::from(&crate_dir).join("include").join("dle_correspond.h");
    println!("cargo:rerun-if-changed=src/lib.rs");
    let config = Config {
        language: Language::C,
        include_guard: Some("DLE_CORRESPOND_H".into()),
        cpp_compat: true,
        enumeration: EnumConfig { prefix_with_name: true, rename_variants: RenameRule::ScreamingSnakeCase, ..Default::default() },
        ..Default::default()
    };
    cbindgen::Builder::new()
        .with_crate(crate_dir)
        .with_config(config)
        .generate()
        .expect("generate C header")
        .write_to_file(out);
}

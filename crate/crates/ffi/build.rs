use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("manifest dir"));
    let header = crate_dir.join("include").join("robustkit.h");
    let config = cbindgen::Config {
        language: cbindgen::Language::C,
        include_guard: Some("ROBUSTKIT_H".to_string()),
        cpp_compat: true,
        documentation: true,
        header: Some(
            "/* C ABI for robustkit: robust learning of binary product distributions. */"
                .to_string(),
        ),
        enumeration: cbindgen::EnumConfig {
            prefix_with_name: true,
            rename_variants: cbindgen::RenameRule::ScreamingSnakeCase,
            ..Default::default()
        },
        ..Default::default()
    };
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            std::fs::create_dir_all(header.parent().unwrap()).expect("include dir");
            bindings.write_to_file(&header);
        }
        Err(e) => {
            // Keep the committed header when generation is unavailable
            // (e.g. syntax-only builds); fail loudly otherwise.
            println!("cargo:warning=cbindgen did not run: {e}");
        }
    }
    println!("cargo:rerun-if-changed=src/lib.rs");
}

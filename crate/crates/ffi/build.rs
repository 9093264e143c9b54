use std::path::PathBuf;

fn main() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("set by cargo");
    let header = PathBuf::from(&crate_dir).join("include").join("mmsim.h");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(header);
        }
        // Keep the build alive without the generator; the committed header
        // stays in place.
        Err(e) => println!("cargo:warning=header generation skipped: {e}"),
    }
}

//! Generates the C header for the promptfuse FFI surface.
//!
//! The header lands in `include/promptfuse.h` inside the crate so C callers
//! can consume it without running the Rust build themselves.

use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").expect("cargo sets this"));
    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml parses");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("the FFI surface stays expressible in C")
        .write_to_file(crate_dir.join("include").join("promptfuse.h"));
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
}

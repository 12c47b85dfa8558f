use std::env;
use std::path::PathBuf;

fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");

    let crate_dir = PathBuf::from(env::var("CARGO_MANIFEST_DIR").unwrap());
    let header = crate_dir.join("include").join("stcsim.h");

    let config = cbindgen::Config::from_file(crate_dir.join("cbindgen.toml"))
        .expect("cbindgen.toml is readable");
    match cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
    {
        Ok(bindings) => {
            bindings.write_to_file(header);
        }
        // Parse errors abort the build; transient failures (e.g. expansion
        // of a dependency) keep the previously generated header.
        Err(cbindgen::Error::ParseSyntaxError { .. }) => panic!("cbindgen parse error"),
        Err(e) => println!("cargo:warning=cbindgen skipped: {e}"),
    }
}

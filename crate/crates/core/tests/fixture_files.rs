//! The shipped model files are generated from the builders in
//! `rescon::fixtures`. Set `RESCON_BLESS=1` to regenerate them.

use std::path::PathBuf;

use rescon::fixtures;
use rescon::io::{load_model, read_model_file};

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

#[test]
fn shipped_fixtures_match_builders() {
    let dir = fixture_dir();
    let bless = std::env::var_os("RESCON_BLESS").is_some();
    for (name, model) in fixtures::all() {
        let path = dir.join(&name);
        if bless {
            std::fs::write(&path, model.to_json()).unwrap();
        }
        let on_disk =
            std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert_eq!(
            on_disk,
            model.to_json(),
            "{name} is stale; rerun with RESCON_BLESS=1"
        );
        assert_eq!(read_model_file(&path).unwrap(), model);
        load_model(&path).unwrap_or_else(|e| panic!("{e}"));
    }
}

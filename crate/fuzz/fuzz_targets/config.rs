#![no_main]

use blowup_core::config::{LoadedConfig, RunConfig};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(loaded) = LoadedConfig::parse(text) {
        let again =
            RunConfig::from_toml(&loaded.config.to_toml()).expect("serialized config parses");
        assert_eq!(again, loaded.config);
    }
});

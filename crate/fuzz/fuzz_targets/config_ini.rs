#![no_main]

use libfuzzer_sys::fuzz_target;
use sam_cli::config::{parse_ini, RunConfig};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = parse_ini(text);
    if let Ok(cfg) = RunConfig::from_text(text) {
        // typed accessors report errors instead of panicking
        let _ = cfg.seed();
        let _ = cfg.bounds();
        let _ = cfg.theta0();
        let _ = cfg.start();
        let _ = cfg.eps_schedule();
        let _ = cfg.vec_usize("ladder");
        let _ = cfg.to_string();
    }
});

#![no_main]
use libfuzzer_sys::fuzz_target;
use osl_core::osl::lex;

fuzz_target!(|data: &[u8]| {
    let text = String::from_utf8_lossy(data);
    if let Ok(tokens) = lex(&text) {
        let lines = text.lines().count() + 1;
        for t in &tokens {
            assert!(t.span.line >= 1 && t.span.line <= lines && t.span.column >= 1);
        }
    }
});

//! JSON output envelope shared by every subcommand.

use serde::Serialize;
use serde_json::Value;
use std::io::{self, Write};

/// Writes to stdout, surfacing failures (for example a closed pipe)
/// instead of panicking like `println!` would.
pub fn write_stdout(text: &str) -> io::Result<()> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()
}

/// Version stamp for the envelope layout, not the crate.
pub const FORMAT_VERSION: &str = "1.0";

/// Stable wrapper emitted under `--json`.
///
/// Field order is fixed by declaration order and `serde_json` renders
/// maps with sorted keys, so identical invocations produce identical
/// bytes. Numbers round-trip exactly: the parser and printer are both
/// shortest-representation faithful.
#[derive(Serialize)]
pub struct Envelope<'a> {
    pub format_version: &'static str,
    pub command: &'a str,
    pub inputs: Value,
    pub provenance: &'a str,
    pub result: Value,
}

impl<'a> Envelope<'a> {
    pub fn new(command: &'a str, inputs: Value, provenance: &'a str, result: Value) -> Self {
        Envelope {
            format_version: FORMAT_VERSION,
            command,
            inputs,
            provenance,
            result,
        }
    }

    pub fn print(&self) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_stdout(&text)?;
        Ok(())
    }
}

//! Linked collecting-mode sweep written as CSV to stdout.

use biphoton::config::parse_sweep;
use biphoton::emit::{emit_rows, Format};
use biphoton::sweep::run_sweep;

fn main() -> biphoton::Result<()> {
    let spec = parse_sweep(
        r#"{
            "title": "spatial purity vs collecting mode",
            "axes": [{"paths": ["/filters/signal_mode_um", "/filters/idler_mode_um"],
                      "start": 5, "stop": 60, "count": 12}],
            "observables": ["p_qs", "p_qi", "eta_s", "eta_i"]
        }"#,
    )?;
    let rows = run_sweep(&spec);
    emit_rows(&spec, &rows, Format::Csv, std::io::stdout().lock())
}

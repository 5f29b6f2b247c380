use std::time::{SystemTime, UNIX_EPOCH};

/// Provenance block written as `#` comments ahead of every CSV.
///
/// The resolved config is embedded verbatim, so an output file can be
/// replayed with `--config` pointing at its own comment block stripped of
/// the `# | ` prefix.
pub struct Manifest {
    pub subcommand: &'static str,
    pub config_path: String,
    pub seed: u64,
    pub output: String,
    pub threads: usize,
    pub resolved_config: String,
}

impl Manifest {
    pub fn render(&self) -> String {
        let created = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let mut s = format!(
            "# reram {}\n# reram-core {}, reram-cli {}\n# config: {}\n# seed: {}\n# output: {}\n# threads: {}\n# created_unix: {created}\n# resolved config:\n",
            self.subcommand,
            reram::VERSION,
            env!("CARGO_PKG_VERSION"),
            self.config_path,
            self.seed,
            self.output,
            self.threads,
        );
        for line in self.resolved_config.lines() {
            s.push_str("# | ");
            s.push_str(line);
            s.push('\n');
        }
        s
    }
}

//! The `tm` command line.
//!
//! Exit codes: 0 success, 1 parse or validation errors, 2 usage error,
//! 3 simulation error. `-` as a file argument reads standard input.

use std::collections::BTreeSet;
use std::fs;
use std::io::{self, Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

use crate::behavior::{Chronology, EventDef};
use crate::dsl;
use crate::pipeline::{self, Prepared};
use crate::render::{render_dot, RenderMode, RenderOptions};
use crate::sim::{self, SimConfig};
use crate::validate::{Diagnostic, Severity, ValidateOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SIMULATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "tm", version, about = "Thinging machine models: check, normalize, simulate, draw")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse a model and print a summary, or its JSON form.
    Parse {
        file: String,
        #[arg(long)]
        json: bool,
    },
    /// Normalize and validate; print diagnostics.
    Validate {
        file: String,
        /// Treat warnings as errors.
        #[arg(long)]
        deny_warnings: bool,
        /// Warn on chronology edges with no causal link between the events.
        #[arg(long)]
        lint_chronology: bool,
        /// Warn on stages and edges outside every event region.
        #[arg(long)]
        lint_coverage: bool,
    },
    /// Print the model in canonical form with elided stages restored.
    Normalize {
        file: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Run the chronology and report what happened.
    Simulate {
        file: String,
        /// Write the JSON trace here (`-` for standard output).
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, default_value_t = sim::DEFAULT_MAX_STEPS_PER_EVENT, value_parser = clap::value_parser!(u64).range(1..))]
        max_steps: u64,
        /// Print per-event stage coverage.
        #[arg(long)]
        coverage: bool,
    },
    /// Emit a Graphviz DOT diagram.
    Render {
        file: String,
        #[arg(long, value_enum)]
        mode: Mode,
        /// Hide stages restored by normalization.
        #[arg(long)]
        simplified: bool,
        /// Fill the region of one event (events mode only).
        #[arg(long)]
        highlight: Option<String>,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mode {
    Static,
    Events,
    Chronology,
}

/// Standard streams, injectable for tests.
pub struct Io<'a> {
    pub stdin: &'a mut dyn Read,
    pub stdout: &'a mut dyn Write,
    pub stderr: &'a mut dyn Write,
    pub color: bool,
}

/// Whether diagnostics should be colored, from `TM_COLOR`
/// (`auto`, `always`, `never`) and whether stderr is a terminal.
pub fn color_choice(env: Option<&str>, stderr_is_tty: bool) -> bool {
    match env {
        Some("always") => true,
        Some("never") => false,
        _ => stderr_is_tty,
    }
}

pub fn format_diagnostic(d: &Diagnostic, file: &str, color: bool) -> String {
    let location = match &d.span {
        Some(span) => span.to_string(),
        None => file.to_string(),
    };
    let severity = d.severity.to_string();
    let severity = match (color, d.severity) {
        (false, _) => severity,
        (true, Severity::Error) => format!("\x1b[1;31m{severity}\x1b[0m"),
        (true, Severity::Warning) => format!("\x1b[1;33m{severity}\x1b[0m"),
    };
    format!("{location}: {severity}[{}] {}", d.code, d.message)
}

/// Without a declared chronology, events not contained in another event run
/// once each in declaration order.
fn unordered_chronology(events: &[EventDef]) -> Option<Chronology> {
    let contained: BTreeSet<&str> = events.iter().flat_map(|e| e.subevents.iter().map(String::as_str)).collect();
    let mut chronology = Chronology::default();
    for e in events.iter().filter(|e| !contained.contains(e.id.as_str())) {
        chronology.add_node(&e.id);
    }
    (!chronology.nodes.is_empty()).then_some(chronology)
}

struct Session<'a, 'b> {
    io: &'a mut Io<'b>,
}

impl Session<'_, '_> {
    fn read(&mut self, file: &str) -> Result<String, i32> {
        let mut text = String::new();
        let result = if file == "-" {
            self.io.stdin.read_to_string(&mut text).map(|_| ())
        } else {
            fs::read_to_string(file).map(|t| text = t)
        };
        result.map(|_| text).map_err(|e| {
            let _ = writeln!(self.io.stderr, "tm: cannot read {file}: {e}");
            EXIT_USAGE
        })
    }

    fn display_name(file: &str) -> &str {
        if file == "-" {
            "<stdin>"
        } else {
            file
        }
    }

    fn report(&mut self, diags: &[Diagnostic], file: &str) {
        for d in diags {
            let line = format_diagnostic(d, Self::display_name(file), self.io.color);
            let _ = writeln!(self.io.stderr, "{line}");
        }
    }

    fn write_output(&mut self, output: Option<&PathBuf>, text: &str) -> Result<(), i32> {
        match output {
            Some(path) if path.as_os_str() != "-" => fs::write(path, text).map_err(|e| {
                let _ = writeln!(self.io.stderr, "tm: cannot write {}: {e}", path.display());
                EXIT_USAGE
            }),
            _ => {
                let _ = self.io.stdout.write_all(text.as_bytes());
                Ok(())
            }
        }
    }

    fn prepare(&mut self, file: &str, options: ValidateOptions) -> Result<Prepared, i32> {
        let text = self.read(file)?;
        match pipeline::prepare(pipeline::load(&text, Self::display_name(file)), options) {
            Ok(p) => Ok(p),
            Err(diags) => {
                self.report(&diags, file);
                Err(EXIT_INVALID)
            }
        }
    }

    /// Prepares and reports diagnostics, failing on errors.
    fn prepare_valid(&mut self, file: &str) -> Result<Prepared, i32> {
        let p = self.prepare(file, ValidateOptions::default())?;
        self.report(&p.diagnostics, file);
        if p.has_errors() {
            return Err(EXIT_INVALID);
        }
        Ok(p)
    }

    fn run(&mut self, command: Command) -> Result<(), i32> {
        match command {
            Command::Parse { file, json } => {
                let text = self.read(&file)?;
                let result = pipeline::load(&text, Self::display_name(&file));
                self.report(&result.diagnostics, &file);
                let Some(model) = &result.model else {
                    return Err(EXIT_INVALID);
                };
                let out = if json {
                    dsl::to_json(&result) + "\n"
                } else {
                    format!(
                        "{} thimacs, {} stages, {} flows, {} triggers, {} events, {} chronology nodes\n",
                        model.thimacs().count(),
                        model.stages().count(),
                        model.flows().len(),
                        model.triggers().len(),
                        result.events.len(),
                        result.chronology.as_ref().map_or(0, |c| c.nodes.len())
                    )
                };
                self.write_output(None, &out)
            }
            Command::Validate {
                file,
                deny_warnings,
                lint_chronology,
                lint_coverage,
            } => {
                let options = ValidateOptions {
                    chronology_justification: lint_chronology,
                    region_coverage: lint_coverage,
                };
                let p = self.prepare(&file, options)?;
                self.report(&p.diagnostics, &file);
                if p.has_errors() || (deny_warnings && !p.diagnostics.is_empty()) {
                    return Err(EXIT_INVALID);
                }
                Ok(())
            }
            Command::Normalize { file, output } => {
                let p = self.prepare_valid(&file)?;
                let text = dsl::format(&p.to_parse_result());
                self.write_output(output.as_ref(), &text)
            }
            Command::Simulate {
                file,
                trace,
                max_steps,
                coverage,
            } => {
                let p = self.prepare_valid(&file)?;
                let Some(chronology) = p.chronology.clone().or_else(|| unordered_chronology(&p.events)) else {
                    let _ = writeln!(self.io.stderr, "tm: {file} declares no events to simulate");
                    return Err(EXIT_SIMULATION);
                };
                let chronology = &chronology;
                let config = SimConfig {
                    max_steps_per_event: max_steps,
                    ..SimConfig::default()
                };
                let result = match sim::simulate(p.model(), &p.events, chronology, config) {
                    Ok(t) => t,
                    Err(e) => {
                        let _ = writeln!(self.io.stderr, "tm: simulation failed: {e}");
                        return Err(EXIT_SIMULATION);
                    }
                };
                for w in &result.warnings {
                    let _ = writeln!(self.io.stderr, "tm: warning: {w}");
                }
                if let Some(path) = &trace {
                    self.write_output(Some(path), &(result.to_json(p.model()) + "\n"))?;
                }
                if trace.as_ref().is_none_or(|t| t.as_os_str() != "-") {
                    let mut summary = format!(
                        "{} event instances, {} firings, {} tokens\n",
                        result.event_order.len(),
                        result.firings.len(),
                        result.final_tokens.len()
                    );
                    if coverage {
                        let report = sim::coverage(p.model(), &result, &p.events);
                        for e in &report.events {
                            summary.push_str(&format!("{}: {}/{} stages fired\n", e.event, e.fired, e.total));
                        }
                        for s in &report.never_fired {
                            summary.push_str(&format!("never fired: {s}\n"));
                        }
                    }
                    self.write_output(None, &summary)?;
                }
                Ok(())
            }
            Command::Render {
                file,
                mode,
                simplified,
                highlight,
                output,
            } => {
                let p = self.prepare_valid(&file)?;
                let opts = RenderOptions {
                    mode: match mode {
                        Mode::Static => RenderMode::Static,
                        Mode::Events => RenderMode::EventOverlay,
                        Mode::Chronology => RenderMode::Chronology,
                    },
                    highlight,
                    simplified,
                };
                match render_dot(p.model(), &p.events, p.chronology.as_ref(), &opts) {
                    Ok(dot) => self.write_output(output.as_ref(), &dot),
                    Err(e) => {
                        let _ = writeln!(self.io.stderr, "tm: {e}");
                        Err(EXIT_USAGE)
                    }
                }
            }
        }
    }
}

/// Runs the command line `args` (program name first) and returns the exit
/// code.
pub fn run<I, T>(args: I, io: &mut Io) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = if io.color { e.render().ansi().to_string() } else { e.render().to_string() };
            let stream: &mut dyn Write = if e.use_stderr() { io.stderr } else { io.stdout };
            let _ = write!(stream, "{text}");
            return code;
        }
    };
    let mut session = Session { io };
    match session.run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(code) => code,
    }
}

/// Entry point used by the `tm` binary.
pub fn main_with_std() -> i32 {
    use std::io::IsTerminal;
    let color = color_choice(std::env::var("TM_COLOR").ok().as_deref(), io::stderr().is_terminal());
    let mut stdin = io::stdin().lock();
    let mut stdout = io::stdout().lock();
    let mut stderr = io::stderr().lock();
    let mut io = Io {
        stdin: &mut stdin,
        stdout: &mut stdout,
        stderr: &mut stderr,
        color,
    };
    run(std::env::args_os(), &mut io)
}

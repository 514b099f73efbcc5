//! `cac`: check CAC signatures, translate CIC⁻ files, normalize terms.

use std::collections::BTreeSet;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cac_kernel::cic::{self, CheckedItem};
use cac_kernel::elaborate::{elaborate_source, parse_term_in, Elaboration, Options};
use cac_kernel::rewrite::{normalize, normalize_traced, FuelBudget};
use cac_kernel::typing::Typer;
use cac_kernel::{Code, Diagnostic, Environment, Signature};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cac", version, about = "Type-checking kernel for the Calculus of Algebraic Constructions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Elaborate a signature (.cac) or type-check a CIC⁻ file (.cicminus).
    Check {
        file: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Translate a CIC⁻ file into a CAC signature.
    Translate {
        file: PathBuf,
        /// Write the signature here instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: Flags,
    },
    /// Normalize a term under the signature of FILE.
    Normalize {
        file: PathBuf,
        term: String,
        /// Print every redex position and rule name.
        #[arg(long)]
        trace: bool,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args, Clone)]
struct Flags {
    /// Reduction step budget for every normalization.
    #[arg(long, default_value_t = 1_000_000)]
    fuel: u64,
    /// Emit diagnostics as a JSON array.
    #[arg(long)]
    json: bool,
    /// Report rule-validity failures as warnings.
    #[arg(long)]
    assume_valid_rules: bool,
    /// Admit declared recursors for type C without the canonical match.
    #[arg(long = "trusted-recursor", value_name = "C")]
    trusted: Vec<String>,
}

impl Flags {
    fn options(&self) -> Options {
        Options {
            fuel: FuelBudget::new(self.fuel),
            assume_valid_rules: self.assume_valid_rules,
            trusted: self.trusted.iter().cloned().collect::<BTreeSet<_>>(),
        }
    }
}

const ACCEPTED: u8 = 0;
const REJECTED: u8 = 1;
const INPUT_ERROR: u8 = 2;
const FUEL: u8 = 3;

fn status(diags: &[Diagnostic]) -> u8 {
    let errors: Vec<&Diagnostic> = diags.iter().filter(|d| d.is_error()).collect();
    if errors.iter().any(|d| d.code == Code::FuelExhausted) {
        FUEL
    } else if errors.iter().any(|d| matches!(d.code, Code::Parse | Code::Unbound | Code::Duplicate)) {
        INPUT_ERROR
    } else if !errors.is_empty() {
        REJECTED
    } else {
        ACCEPTED
    }
}

fn is_cicminus(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "cicminus")
}

fn read(path: &Path, out: &mut dyn Write) -> Result<String, u8> {
    std::fs::read_to_string(path).map_err(|e| {
        let _ = writeln!(out, "error: cannot read {}: {e}", path.display());
        INPUT_ERROR
    })
}

fn print_json(diags: &[Diagnostic], out: &mut dyn Write) -> io::Result<()> {
    let s = serde_json::to_string_pretty(diags).expect("diagnostics serialize");
    writeln!(out, "{s}")
}

fn print_diagnostics(diags: &[Diagnostic], out: &mut dyn Write) -> io::Result<()> {
    for d in diags {
        writeln!(out, "{d}")?;
    }
    Ok(())
}

fn verdict(diags: &[Diagnostic]) -> &'static str {
    if diags.iter().any(|d| d.is_error()) {
        "rejected"
    } else if diags.iter().any(|d| d.severity == cac_kernel::Severity::Warning) {
        "ok (with warnings)"
    } else {
        "ok"
    }
}

/// Per-symbol and per-rule gate results, then the file verdict.
fn print_report(path: &Path, e: &Elaboration, out: &mut dyn Write) -> io::Result<()> {
    for s in e.sig.decls().iter().map(|d| d.name.as_ref()) {
        let own: Vec<Diagnostic> =
            e.diagnostics.iter().filter(|d| d.symbol.as_deref() == Some(s) && d.rule.is_none()).cloned().collect();
        writeln!(out, "symbol {s}: {}", verdict(&own))?;
    }
    for r in e.sig.rules() {
        let own: Vec<Diagnostic> = e.diagnostics.iter().filter(|d| d.rule.as_deref() == Some(&*r.name)).cloned().collect();
        writeln!(out, "rule {}: {}", r.name, verdict(&own))?;
    }
    print_diagnostics(&e.diagnostics, out)?;
    let n_err = e.errors().count();
    if n_err == 0 {
        writeln!(out, "{}: accepted", path.display())
    } else {
        writeln!(out, "{}: rejected ({n_err} error{})", path.display(), if n_err == 1 { "" } else { "s" })
    }
}

/// The signature of FILE: elaborated directly, or translated first.
fn load_signature(path: &Path, flags: &Flags, out: &mut dyn Write) -> Result<Elaboration, u8> {
    let src = read(path, out)?;
    let fuel = FuelBudget::new(flags.fuel);
    let cac_src = if is_cicminus(path) {
        let file = cic::check_cic_source(&src, fuel);
        if !file.accepted() {
            emit(&file.diagnostics, flags, out);
            return Err(status(&file.diagnostics));
        }
        cic::translate(&file).to_source()
    } else {
        src
    };
    let e = elaborate_source(&cac_src, &flags.options());
    if !e.accepted() {
        emit(&e.diagnostics, flags, out);
        return Err(status(&e.diagnostics));
    }
    Ok(e)
}

fn emit(diags: &[Diagnostic], flags: &Flags, out: &mut dyn Write) {
    let _ = if flags.json { print_json(diags, out) } else { print_diagnostics(diags, out) };
}

fn cmd_check(path: &Path, flags: &Flags, out: &mut dyn Write) -> io::Result<u8> {
    let src = match read(path, out) {
        Ok(s) => s,
        Err(code) => return Ok(code),
    };
    if is_cicminus(path) {
        let file = cic::check_cic_source(&src, FuelBudget::new(flags.fuel));
        if flags.json {
            print_json(&file.diagnostics, out)?;
        } else {
            for it in &file.items {
                match it {
                    CheckedItem::Define { name, ty, .. } => writeln!(out, "define {name} : {ty}")?,
                    CheckedItem::Assume { name, ty } => writeln!(out, "assume {} : {ty}", name.name)?,
                    CheckedItem::Check { term, ty } => writeln!(out, "check {term} : {ty}")?,
                }
            }
            print_diagnostics(&file.diagnostics, out)?;
            let verdict = if file.accepted() { "accepted" } else { "rejected" };
            writeln!(out, "{}: {verdict}", path.display())?;
        }
        return Ok(status(&file.diagnostics));
    }
    let e = elaborate_source(&src, &flags.options());
    if flags.json {
        print_json(&e.diagnostics, out)?;
    } else {
        print_report(path, &e, out)?;
    }
    Ok(status(&e.diagnostics))
}

fn cmd_translate(path: &Path, output: Option<&Path>, flags: &Flags, out: &mut dyn Write) -> io::Result<u8> {
    let src = match read(path, out) {
        Ok(s) => s,
        Err(code) => return Ok(code),
    };
    let file = cic::check_cic_source(&src, FuelBudget::new(flags.fuel));
    if !file.accepted() {
        emit(&file.diagnostics, flags, out);
        return Ok(status(&file.diagnostics));
    }
    let text = cic::translate(&file).to_source();
    let e = elaborate_source(&text, &flags.options());
    if !e.accepted() {
        writeln!(out, "error: the translated signature is rejected")?;
        emit(&e.diagnostics, flags, out);
        return Ok(status(&e.diagnostics));
    }
    match output {
        Some(p) => std::fs::write(p, &text)?,
        None => out.write_all(text.as_bytes())?,
    }
    Ok(ACCEPTED)
}

fn cmd_normalize(path: &Path, term: &str, trace: bool, flags: &Flags, out: &mut dyn Write) -> io::Result<u8> {
    let e = match load_signature(path, flags, out) {
        Ok(e) => e,
        Err(code) => return Ok(code),
    };
    let sig: &Signature = &e.sig;
    let t = match parse_term_in(term, sig) {
        Ok(t) => t,
        Err(d) => {
            emit(std::slice::from_ref(&d), flags, out);
            return Ok(status(&[d]));
        }
    };
    let fuel = FuelBudget::new(flags.fuel);
    // Free identifiers are object variables of unknown type; only closed
    // terms are type-checked.
    if t.free_vars().is_empty() {
        if let Err(err) = Typer::new(sig).with_fuel(fuel).infer(&Environment::new(), &t) {
            let code = if err.is_fuel() { Code::FuelExhausted } else { Code::SymbolType };
            let d = Diagnostic::error(code, format!("{t} is ill-typed: {err}"));
            emit(std::slice::from_ref(&d), flags, out);
            return Ok(status(&[d]));
        }
    }
    let (res, steps) = if trace { normalize_traced(&t, sig, fuel) } else { (normalize(&t, sig, fuel), Vec::new()) };
    for (k, s) in steps.iter().enumerate() {
        writeln!(out, "step {}: {} at {}", k + 1, s.redex, s.position)?;
    }
    match res {
        Ok(nf) => {
            writeln!(out, "{nf}")?;
            Ok(ACCEPTED)
        }
        Err(err) => {
            let d = Diagnostic::error(Code::FuelExhausted, err.to_string());
            emit(&[d], flags, out);
            Ok(FUEL)
        }
    }
}

fn run(cli: Cli) -> u8 {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let res = match &cli.command {
        Command::Check { file, flags } => cmd_check(file, flags, &mut out),
        Command::Translate { file, output, flags } => cmd_translate(file, output.as_deref(), flags, &mut out),
        Command::Normalize { file, term, trace, flags } => cmd_normalize(file, term, *trace, flags, &mut out),
    };
    let _ = out.flush();
    res.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        INPUT_ERROR
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { INPUT_ERROR } else { ACCEPTED });
        }
    };
    // Deep terms recurse deeply in the kernel.
    let worker = std::thread::Builder::new().stack_size(512 << 20).spawn(move || run(cli)).expect("spawn worker");
    ExitCode::from(worker.join().unwrap_or(INPUT_ERROR))
}

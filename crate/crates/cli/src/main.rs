use std::io::{self, BufRead, IsTerminal, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use cliquenet_cli::{Reply, Session};

/// Exact inference on discrete Bayesian networks over a clique tree.
///
/// Commands after NETWORK run in order; separate them with `;` (quoted or
/// escaped from the shell). Without commands, lines are read from stdin.
#[derive(Parser, Debug)]
#[command(name = "cliquenet", version)]
struct Args {
    /// Elimination order, overriding the file's `order` line.
    #[arg(long, value_delimiter = ',')]
    order: Option<Vec<String>>,
    /// Print probabilities exactly instead of to six significant digits.
    #[arg(long)]
    full_precision: bool,
    /// Disable the per-clique answer cache.
    #[arg(long)]
    no_cache: bool,
    /// Network file.
    network: PathBuf,
    /// Commands, e.g. `query P(A,X,S) --trace ; show counters`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    commands: Vec<String>,
}

fn split_commands(words: Vec<String>) -> Vec<Vec<String>> {
    let mut out = vec![vec![]];
    for w in words {
        let (word, ends) = match w.strip_suffix(';') {
            Some(rest) => (rest.to_string(), true),
            None => (w, false),
        };
        if !word.is_empty() {
            out.last_mut().expect("nonempty").push(word);
        }
        if ends {
            out.push(vec![]);
        }
    }
    out.retain(|c| !c.is_empty());
    out
}

fn print_reply(reply: &Reply) {
    if let Reply::Text(t) = reply {
        if !t.is_empty() {
            println!("{t}");
        }
    }
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut session = match Session::open(&args.network, args.order.clone(), args.full_precision) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    for w in session.warnings() {
        eprintln!("warning: {w}");
    }
    if args.no_cache {
        session.engine_mut().set_caching(false);
    }

    if !args.commands.is_empty() {
        for cmd in split_commands(args.commands) {
            match session.execute_words(&cmd) {
                Ok(Reply::Quit) => break,
                Ok(reply) => print_reply(&reply),
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::FAILURE;
                }
            }
        }
        return ExitCode::SUCCESS;
    }

    let stdin = io::stdin();
    let interactive = stdin.is_terminal();
    let mut failed = false;
    loop {
        if interactive {
            print!("> ");
            io::stdout().flush().ok();
        }
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) => break,
            Ok(_) => {}
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::FAILURE;
            }
        }
        let line = line.split('#').next().unwrap_or("");
        match session.execute(line) {
            Ok(Reply::Quit) => break,
            Ok(reply) => print_reply(&reply),
            Err(e) => {
                eprintln!("error: {e}");
                failed = true;
            }
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}

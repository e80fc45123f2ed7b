use std::collections::HashMap;

use thiserror::Error;

use super::{Atom, Clause, Literal, Predicate, Symbols, Term, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{}{message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
pub struct ParseError {
    pub line: Option<usize>,
    pub message: String,
}

impl ParseError {
    pub fn new(message: impl Into<String>) -> Self {
        ParseError { line: None, message: message.into() }
    }

    pub fn at_line(mut self, line: usize) -> Self {
        self.line = Some(line);
        self
    }
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits `pred(a,b)` into its name and raw argument tokens.
fn split_atom(text: &str) -> Result<(&str, Vec<&str>), ParseError> {
    let text = text.trim();
    match text.find('(') {
        None => {
            if is_ident(text) {
                Ok((text, Vec::new()))
            } else {
                Err(ParseError::new(format!("malformed atom `{text}`")))
            }
        }
        Some(open) => {
            if !text.ends_with(')') {
                return Err(ParseError::new(format!("missing `)` in `{text}`")));
            }
            let name = text[..open].trim();
            if !is_ident(name) {
                return Err(ParseError::new(format!("bad predicate name in `{text}`")));
            }
            let inner = &text[open + 1..text.len() - 1];
            if inner.contains('(') || inner.contains(')') {
                return Err(ParseError::new(format!("nested terms are not allowed: `{text}`")));
            }
            let args: Vec<&str> = inner.split(',').map(str::trim).collect();
            if args.len() == 1 && args[0].is_empty() {
                return Ok((name, Vec::new()));
            }
            if let Some(bad) = args.iter().find(|a| !is_ident(a)) {
                return Err(ParseError::new(format!("bad argument `{bad}` in `{text}`")));
            }
            Ok((name, args))
        }
    }
}

/// Parses a ground atom; every argument is a constant name.
pub fn parse_ground_atom(text: &str, symbols: &mut Symbols) -> Result<Atom, ParseError> {
    let (name, args) = split_atom(text)?;
    let terms = args.iter().map(|a| Term::Const(symbols.intern(a))).collect::<Vec<_>>();
    Ok(Atom::new(Predicate::new(name, terms.len()), terms))
}

/// Parses an atom of a formula: arguments starting with an uppercase letter
/// are variables (numbered through `vars`), all others are constants.
pub fn parse_atom(text: &str, symbols: &mut Symbols, vars: &mut HashMap<String, Variable>) -> Result<Atom, ParseError> {
    let (name, args) = split_atom(text)?;
    let terms = args
        .iter()
        .map(|a| {
            if a.starts_with(|c: char| c.is_ascii_uppercase()) {
                Term::Var(variable_for(a, vars))
            } else {
                Term::Const(symbols.intern(a))
            }
        })
        .collect::<Vec<_>>();
    Ok(Atom::new(Predicate::new(name, terms.len()), terms))
}

/// `A`..`Z` and `V26`, `V27`, … name fixed slots (the printed form), so
/// printing and re-parsing a clause is the identity; any other variable
/// name gets a fresh slot above those.
fn variable_for(name: &str, vars: &mut HashMap<String, Variable>) -> Variable {
    if let Some(&v) = vars.get(name) {
        return v;
    }
    let fixed = if name.len() == 1 {
        Some(name.as_bytes()[0] as u32 - b'A' as u32)
    } else {
        name.strip_prefix('V').and_then(|n| n.parse::<u32>().ok()).filter(|&n| n >= 26)
    };
    let v = match fixed {
        Some(i) => Variable(i),
        None => {
            let used = vars.values().filter(|v| v.0 >= FREE_SLOTS).count() as u32;
            Variable(FREE_SLOTS + used)
        }
    };
    vars.insert(name.to_string(), v);
    v
}

const FREE_SLOTS: u32 = 1 << 16;

pub fn parse_literal(
    text: &str,
    symbols: &mut Symbols,
    vars: &mut HashMap<String, Variable>,
) -> Result<Literal, ParseError> {
    let text = text.trim();
    match text.strip_prefix('!') {
        Some(rest) => Ok(Literal::neg(parse_atom(rest, symbols, vars)?)),
        None => Ok(Literal::pos(parse_atom(text, symbols, vars)?)),
    }
}

/// Parses `l1 v l2 v …`, `_bot_`, with an optional trailing `@nodiff`.
pub fn parse_clause(text: &str, symbols: &mut Symbols) -> Result<Clause, ParseError> {
    let mut text = text.trim();
    let mut all_diff = true;
    if let Some(rest) = text.strip_suffix("@nodiff") {
        all_diff = false;
        text = rest.trim_end();
    }
    if text == "_bot_" {
        return Ok(Clause::bottom().with_all_diff(all_diff));
    }
    if text.is_empty() {
        return Err(ParseError::new("empty clause; write `_bot_` for the false clause"));
    }
    let mut vars = HashMap::new();
    let mut literals = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    let bytes = text.as_bytes();
    let mut pieces = Vec::new();
    for (i, &b) in bytes.iter().enumerate() {
        match b {
            b'(' => depth += 1,
            b')' => depth -= 1,
            b' ' | b'\t' if depth == 0 => {
                pieces.push(&text[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    pieces.push(&text[start..]);
    let pieces: Vec<&str> = pieces.into_iter().filter(|p| !p.is_empty()).collect();
    for (i, p) in pieces.iter().enumerate() {
        if i % 2 == 1 {
            if *p != "v" {
                return Err(ParseError::new(format!("expected `v` between literals, found `{p}`")));
            }
            continue;
        }
        literals.push(parse_literal(p, symbols, &mut vars)?);
    }
    if pieces.len().is_multiple_of(2) {
        return Err(ParseError::new("clause ends with a dangling `v`"));
    }
    Ok(Clause::new(literals, all_diff))
}

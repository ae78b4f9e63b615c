//! CPLEX LP text format, written deterministically and read back.
//!
//! The reader accepts the subset the writer produces: whitespace-separated
//! tokens, one bound per line, quadratic objective terms inside `[ ] / 2`.
//! Instance data needed for validation travels in a `\ lipp-meta` comment.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{LippError, Result};

use super::{Constraint, ConstraintTag, MiqpModel, ModelMeta, QuadObjective, Sense, VarKind, Variable};

const META_PREFIX: &str = "\\ lipp-meta ";
const LINE_WIDTH: usize = 100;

fn num(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 {
        "0".into()
    } else if (1e-5..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

/// Accumulates tokens, breaking lines before they exceed [`LINE_WIDTH`].
struct Wrapped<'a> {
    out: &'a mut String,
    col: usize,
}

impl<'a> Wrapped<'a> {
    fn start(out: &'a mut String, first: &str) -> Self {
        out.push(' ');
        out.push_str(first);
        Self {
            col: first.len() + 1,
            out,
        }
    }

    fn push(&mut self, token: &str) {
        if self.col + token.len() + 1 > LINE_WIDTH {
            self.out.push_str("\n   ");
            self.col = 3;
        } else {
            self.out.push(' ');
            self.col += 1;
        }
        self.out.push_str(token);
        self.col += token.len();
    }

    fn term(&mut self, coef: f64, var: &str, first: bool) {
        if first && coef >= 0.0 {
            self.push(&num(coef));
        } else {
            self.push(if coef < 0.0 { "-" } else { "+" });
            self.push(&num(coef.abs()));
        }
        self.push(var);
    }

    fn finish(self) {
        self.out.push('\n');
    }
}

pub fn write_lp(model: &MiqpModel) -> String {
    let mut out = String::new();
    let name = |i: usize| model.variables[i].name.as_str();
    out.push_str("\\ load-aware informative path planning model\n");
    let meta = serde_json::to_string(&model.meta).expect("metadata serialises");
    let _ = writeln!(out, "{META_PREFIX}{meta}");

    out.push_str("Minimize\n");
    let obj = &model.objective;
    let mut w = Wrapped::start(&mut out, "obj:");
    w.push(&num(obj.constant));
    for &(i, c) in &obj.linear {
        w.term(c, name(i), false);
    }
    if !obj.quadratic.is_empty() {
        w.push("+");
        w.push("[");
        for (k, &(i, j, q)) in obj.quadratic.iter().enumerate() {
            let product = if i == j {
                format!("{} ^ 2", name(i))
            } else {
                format!("{} * {}", name(i), name(j))
            };
            w.term(2.0 * q, &product, k == 0);
        }
        w.push("]");
        w.push("/");
        w.push("2");
    }
    w.finish();

    out.push_str("Subject To\n");
    for c in &model.constraints {
        let mut w = Wrapped::start(&mut out, &format!("{}:", c.name));
        for (k, &(i, a)) in c.terms.iter().enumerate() {
            w.term(a, name(i), k == 0);
        }
        w.push(c.sense.symbol());
        w.push(&num(c.rhs));
        w.finish();
    }

    out.push_str("Bounds\n");
    for v in &model.variables {
        let line = match (v.lower.is_finite(), v.upper.is_finite()) {
            (false, false) => format!(" {} free", v.name),
            (true, true) => format!(" {} <= {} <= {}", num(v.lower), v.name, num(v.upper)),
            (true, false) => format!(" {} >= {}", v.name, num(v.lower)),
            (false, true) => format!(" -inf <= {} <= {}", v.name, num(v.upper)),
        };
        out.push_str(&line);
        out.push('\n');
    }

    for (section, kind) in [("Generals", VarKind::Integer), ("Binaries", VarKind::Binary)] {
        let list: Vec<&str> = model
            .variables
            .iter()
            .filter(|v| v.kind == kind)
            .map(|v| v.name.as_str())
            .collect();
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(out, "{section}");
        let mut w = Wrapped::start(&mut out, list[0]);
        for n in &list[1..] {
            w.push(n);
        }
        w.finish();
    }
    out.push_str("End\n");
    out
}

pub fn export_model(model: &MiqpModel, path: &Path) -> Result<()> {
    fs::write(path, write_lp(model))?;
    Ok(())
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn section_header(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "min" => Some(Section::Objective),
        "subject to" | "st" | "s.t." => Some(Section::Constraints),
        "bounds" => Some(Section::Bounds),
        "generals" | "general" => Some(Section::Generals),
        "binaries" | "binary" => Some(Section::Binaries),
        "end" => Some(Section::End),
        _ => None,
    }
}

/// Token with the line it came from, for error messages.
type Tok<'a> = (usize, &'a str);

fn parse_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(LippError::Parse {
        line,
        message: message.into(),
    })
}

fn parse_num(tok: Tok) -> Result<f64> {
    tok.1
        .parse::<f64>()
        .or_else(|_| parse_err(tok.0, format!("expected a number, found '{}'", tok.1)))
}

fn is_number(s: &str) -> bool {
    s.parse::<f64>().is_ok()
}

fn is_operator(s: &str) -> bool {
    matches!(
        s,
        "+" | "-" | "[" | "]" | "/" | "^" | "*" | "<=" | ">=" | "=" | "=<" | "=>" | "<" | ">"
    )
}

struct Cursor<'a> {
    toks: Vec<Tok<'a>>,
    pos: usize,
    last_line: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.1)
    }

    fn next(&mut self) -> Result<Tok<'a>> {
        match self.toks.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => parse_err(self.last_line, "unexpected end of section"),
        }
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let t = self.next()?;
        if t.1 == want {
            Ok(())
        } else {
            parse_err(t.0, format!("expected '{want}', found '{}'", t.1))
        }
    }

    fn done(&self) -> bool {
        self.pos >= self.toks.len()
    }

    /// `[+|-] [coef] name`, returning the signed coefficient and name token.
    fn term(&mut self) -> Result<(f64, Tok<'a>)> {
        let mut sign = 1.0;
        if let Some(s @ ("+" | "-")) = self.peek() {
            self.pos += 1;
            if s == "-" {
                sign = -1.0;
            }
        }
        let mut coef = 1.0;
        if self.peek().is_some_and(is_number) {
            coef = parse_num(self.next()?)?;
        }
        let name = self.next()?;
        if is_operator(name.1) || is_number(name.1) {
            return parse_err(name.0, format!("expected a variable, found '{}'", name.1));
        }
        Ok((sign * coef, name))
    }
}

struct Raw<'a> {
    meta: Option<ModelMeta>,
    objective: Vec<Tok<'a>>,
    constraints: Vec<Tok<'a>>,
    bounds: Vec<Vec<Tok<'a>>>,
    generals: Vec<Tok<'a>>,
    binaries: Vec<Tok<'a>>,
    last_line: usize,
}

fn split(text: &str) -> Result<Raw<'_>> {
    let mut raw = Raw {
        meta: None,
        objective: Vec::new(),
        constraints: Vec::new(),
        bounds: Vec::new(),
        generals: Vec::new(),
        binaries: Vec::new(),
        last_line: 0,
    };
    let mut section = Section::Preamble;
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        raw.last_line = lineno;
        if let Some(json) = line.strip_prefix(META_PREFIX) {
            raw.meta = Some(serde_json::from_str(json).or_else(|e| parse_err(lineno, format!("bad metadata: {e}")))?);
            continue;
        }
        if line.trim_start().starts_with('\\') || line.trim().is_empty() {
            continue;
        }
        if let Some(s) = section_header(line) {
            section = s;
            continue;
        }
        let toks = line.split_whitespace().map(|t| (lineno, t));
        match section {
            Section::Preamble => return parse_err(lineno, "content before the objective section"),
            Section::Objective => raw.objective.extend(toks),
            Section::Constraints => raw.constraints.extend(toks),
            Section::Bounds => raw.bounds.push(toks.collect()),
            Section::Generals => raw.generals.extend(toks),
            Section::Binaries => raw.binaries.extend(toks),
            Section::End => return parse_err(lineno, "content after End"),
        }
    }
    if section != Section::End {
        return parse_err(raw.last_line, "missing End");
    }
    Ok(raw)
}

/// Reads a model written by [`write_lp`]. Variable order follows the Bounds
/// section, which lists every variable.
pub fn parse_lp(text: &str) -> Result<MiqpModel> {
    let raw = split(text)?;
    let Some(meta) = raw.meta.clone() else {
        return parse_err(1, "missing lipp-meta comment");
    };

    let mut variables: Vec<Variable> = Vec::new();
    for line in &raw.bounds {
        let texts: Vec<&str> = line.iter().map(|t| t.1).collect();
        let lineno = line[0].0;
        let var = |name: &str, lower: f64, upper: f64| Variable {
            name: name.to_string(),
            kind: VarKind::Continuous,
            lower,
            upper,
        };
        let v = match texts.as_slice() {
            [name, "free"] => var(name, f64::NEG_INFINITY, f64::INFINITY),
            [_, "<=", name, "<=", hi] => var(name, parse_num(line[0])?, parse_num((lineno, hi))?),
            [name, ">=", lo] => var(name, parse_num((lineno, lo))?, f64::INFINITY),
            [name, "<=", hi] => var(name, 0.0, parse_num((lineno, hi))?),
            [name, "=", x] => {
                let x = parse_num((lineno, x))?;
                var(name, x, x)
            }
            _ => return parse_err(lineno, format!("unsupported bound '{}'", texts.join(" "))),
        };
        variables.push(v);
    }
    let mut placeholder = MiqpModel::from_parts(variables, Vec::new(), QuadObjective::default(), meta)?;
    for (list, kind) in [(&raw.generals, VarKind::Integer), (&raw.binaries, VarKind::Binary)] {
        for &(lineno, name) in list {
            match placeholder.var(name) {
                Some(i) => placeholder.variables[i].kind = kind,
                None => return parse_err(lineno, format!("'{name}' has no bound line")),
            }
        }
    }
    let lookup = |model: &MiqpModel, tok: Tok| -> Result<usize> {
        model
            .var(tok.1)
            .map_or_else(|| parse_err(tok.0, format!("unknown variable '{}'", tok.1)), Ok)
    };

    // objective
    let mut cur = Cursor {
        toks: raw.objective,
        pos: 0,
        last_line: raw.last_line,
    };
    let mut objective = QuadObjective::default();
    if cur.peek().is_some_and(|t| t.ends_with(':')) {
        cur.pos += 1;
    }
    while !cur.done() {
        if cur.peek() == Some("+") && cur.toks.get(cur.pos + 1).map(|t| t.1) == Some("[") {
            cur.pos += 2;
            while cur.peek() != Some("]") {
                let (q, a) = cur.term()?;
                let i = lookup(&placeholder, a)?;
                let j = match cur.next()? {
                    (_, "^") => {
                        cur.expect("2")?;
                        i
                    }
                    (_, "*") => lookup(&placeholder, cur.next()?)?,
                    (l, t) => return parse_err(l, format!("expected '^' or '*', found '{t}'")),
                };
                objective.quadratic.push((i.min(j), i.max(j), q / 2.0));
            }
            cur.expect("]")?;
            cur.expect("/")?;
            cur.expect("2")?;
            continue;
        }
        // a signed number followed by something other than a variable is the constant
        let save = cur.pos;
        let mut sign = 1.0;
        if let Some(s @ ("+" | "-")) = cur.peek() {
            cur.pos += 1;
            if s == "-" {
                sign = -1.0;
            }
        }
        if cur.peek().is_some_and(is_number) {
            let value = parse_num(cur.next()?)?;
            let follows_var = cur.peek().is_some_and(|t| !is_operator(t) && !is_number(t));
            if !follows_var {
                objective.constant += sign * value;
                continue;
            }
        }
        cur.pos = save;
        let (c, tok) = cur.term()?;
        objective.linear.push((lookup(&placeholder, tok)?, c));
    }

    // constraints
    let mut cur = Cursor {
        toks: raw.constraints,
        pos: 0,
        last_line: raw.last_line,
    };
    let mut constraints = Vec::new();
    while !cur.done() {
        let (lineno, label) = cur.next()?;
        let Some(name) = label.strip_suffix(':') else {
            return parse_err(lineno, format!("expected a constraint name, found '{label}'"));
        };
        let tag: ConstraintTag = name
            .split('.')
            .next()
            .unwrap_or_default()
            .parse()
            .or_else(|e: LippError| parse_err(lineno, e.to_string()))?;
        let mut terms = Vec::new();
        let sense = loop {
            match cur.peek() {
                Some("<=" | "=<" | "<") => break Sense::Le,
                Some(">=" | "=>" | ">") => break Sense::Ge,
                Some("=") => break Sense::Eq,
                _ => {
                    let (a, tok) = cur.term()?;
                    terms.push((lookup(&placeholder, tok)?, a));
                }
            }
        };
        cur.pos += 1;
        let rhs = parse_num(cur.next()?)?;
        constraints.push(Constraint {
            name: name.to_string(),
            tag,
            terms,
            sense,
            rhs,
        });
    }

    placeholder.constraints = constraints;
    placeholder.objective = objective;
    Ok(placeholder)
}

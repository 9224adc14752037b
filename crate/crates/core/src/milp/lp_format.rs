//! Reader and writer for the CPLEX-style LP text format.
//!
//! Names are made legal by a reversible escape: any byte outside the
//! format's name alphabet (and `#` itself) becomes `#` followed by two hex
//! digits. A leading digit, period or `e`/`E`, and names that collide with
//! section keywords, get their first character escaped the same way.
//! Numbers are written with 17 significant digits so the round trip is exact.
//! The objective lists every variable in index order (zero coefficients
//! included) so that variable order survives the round trip.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::model::{Constraint, LinExpr, MilpModel, Relation, Sense, VarId, VarKind, Variable};

#[derive(Debug, Error, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct LpParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

const NAME_SYMBOLS: &str = "!\"$%&()/,.;?@_`'{}|~";
const KEYWORDS: &[&str] = &[
    "minimize",
    "minimum",
    "min",
    "maximize",
    "maximum",
    "max",
    "subject",
    "such",
    "st",
    "s.t.",
    "st.",
    "bounds",
    "bound",
    "general",
    "generals",
    "gen",
    "integer",
    "integers",
    "int",
    "binary",
    "binaries",
    "bin",
    "end",
    "free",
    "inf",
    "infinity",
    "semi",
    "semis",
    "semi-continuous",
];
const MAX_LINE: usize = 250;

fn legal_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || NAME_SYMBOLS.contains(c)
}

fn escape_into(out: &mut String, c: char) {
    let mut buf = [0u8; 4];
    for b in c.encode_utf8(&mut buf).bytes() {
        let _ = write!(out, "#{b:02X}");
    }
}

/// Maps an arbitrary non-empty name onto the LP name alphabet.
pub fn sanitize_name(name: &str) -> String {
    let mut out = String::with_capacity(name.len());
    let keyword = KEYWORDS.contains(&name.to_ascii_lowercase().as_str());
    for (i, c) in name.chars().enumerate() {
        let escape_first =
            i == 0 && (c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || keyword);
        if escape_first || c == '#' || !legal_name_char(c) {
            escape_into(&mut out, c);
        } else {
            out.push(c);
        }
    }
    out
}

/// Inverse of [`sanitize_name`].
pub fn unsanitize_name(name: &str) -> Result<String, String> {
    let bytes = name.as_bytes();
    let mut out = Vec::with_capacity(bytes.len());
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'#' {
            let hex = name
                .get(i + 1..i + 3)
                .ok_or_else(|| format!("truncated escape in {name}"))?;
            let b = u8::from_str_radix(hex, 16).map_err(|_| format!("bad escape in {name}"))?;
            out.push(b);
            i += 3;
        } else {
            out.push(bytes[i]);
            i += 1;
        }
    }
    String::from_utf8(out).map_err(|_| format!("escape sequence in {name} is not UTF-8"))
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn signed_num(v: f64) -> String {
    if v.is_sign_negative() {
        format!("- {}", num(-v))
    } else {
        format!("+ {}", num(v))
    }
}

fn push_terms(out: &mut String, prefix: &str, terms: &mut dyn Iterator<Item = String>) {
    let mut line = String::from(prefix);
    for t in terms {
        if line.len() + t.len() + 1 > MAX_LINE && line.trim().len() > prefix.trim().len() {
            out.push_str(line.trim_end());
            out.push('\n');
            line = String::from("   ");
        }
        line.push(' ');
        line.push_str(&t);
    }
    out.push_str(line.trim_end());
}

/// Renders `model` in LP format. Fails only for a model that has rows but
/// no variables to write an empty row against.
pub fn export_lp_text(model: &MilpModel) -> Result<String, super::MilpError> {
    model.validate()?;
    let names: Vec<String> = model
        .variables
        .iter()
        .map(|v| sanitize_name(&v.name))
        .collect();
    let mut out = String::new();
    out.push_str("\\ Generated by dronesched\n");
    out.push_str(match model.objective.sense {
        Sense::Minimize => "Minimize\n",
        Sense::Maximize => "Maximize\n",
    });
    let obj = &model.objective.expr;
    let mut coef = vec![0.0; model.num_vars()];
    for &(v, c) in obj.terms() {
        coef[v.0] = c;
    }
    let mut terms = coef
        .iter()
        .zip(&names)
        .map(|(c, n)| format!("{} {}", signed_num(*c), n))
        .chain((obj.constant != 0.0).then(|| signed_num(obj.constant)));
    push_terms(&mut out, " obj:", &mut terms);
    out.push('\n');

    out.push_str("Subject To\n");
    for c in &model.constraints {
        let prefix = format!(" {}:", sanitize_name(&c.name));
        if c.terms.is_empty() {
            let first = names.first().ok_or_else(|| {
                super::MilpError::Malformed(format!(
                    "row {} has no terms and the model has no variables",
                    c.name
                ))
            })?;
            push_terms(
                &mut out,
                &prefix,
                &mut std::iter::once(format!("+ {} {}", num(0.0), first)),
            );
        } else {
            let mut terms = c
                .terms
                .iter()
                .map(|&(v, a)| format!("{} {}", signed_num(a), names[v.0]));
            push_terms(&mut out, &prefix, &mut terms);
        }
        let _ = writeln!(out, " {} {}", c.relation, num(c.rhs));
    }

    out.push_str("Bounds\n");
    for (v, name) in model.variables.iter().zip(&names) {
        let default = match v.kind {
            VarKind::Binary => (0.0, 1.0),
            _ => (0.0, f64::INFINITY),
        };
        if (v.lower, v.upper) == default && !(v.lower == 0.0 && v.lower.is_sign_negative()) {
            continue;
        }
        let lo = if v.lower == f64::NEG_INFINITY {
            "-inf".to_string()
        } else {
            num(v.lower)
        };
        let hi = if v.upper == f64::INFINITY {
            "+inf".to_string()
        } else {
            num(v.upper)
        };
        if v.lower == f64::NEG_INFINITY && v.upper == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else if v.lower == v.upper {
            let _ = writeln!(out, " {name} = {lo}");
        } else {
            let _ = writeln!(out, " {lo} <= {name} <= {hi}");
        }
    }
    for (section, kind) in [
        ("Generals", VarKind::Integer),
        ("Binaries", VarKind::Binary),
    ] {
        let list: Vec<&String> = model
            .variables
            .iter()
            .zip(&names)
            .filter(|(v, _)| v.kind == kind)
            .map(|(_, n)| n)
            .collect();
        if list.is_empty() {
            continue;
        }
        out.push_str(section);
        out.push('\n');
        let mut it = list.into_iter().cloned();
        push_terms(&mut out, "", &mut it);
        out.push('\n');
    }
    out.push_str("End\n");
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Name(String),
    Num(f64),
    Plus,
    Minus,
    Colon,
    Rel(Relation),
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Generals,
    Binaries,
    End,
}

fn section_header(line: &str) -> Option<(Section, Option<Sense>)> {
    let l = line.trim().to_ascii_lowercase();
    let l = l.split_whitespace().collect::<Vec<_>>().join(" ");
    Some(match l.as_str() {
        "minimize" | "minimum" | "min" => (Section::Objective, Some(Sense::Minimize)),
        "maximize" | "maximum" | "max" => (Section::Objective, Some(Sense::Maximize)),
        "subject to" | "such that" | "st" | "s.t." | "st." => (Section::Constraints, None),
        "bounds" | "bound" => (Section::Bounds, None),
        "general" | "generals" | "gen" | "integer" | "integers" | "int" => {
            (Section::Generals, None)
        }
        "binary" | "binaries" | "bin" => (Section::Binaries, None),
        "end" => (Section::End, None),
        _ => return None,
    })
}

fn err(line: usize, column: usize, message: impl Into<String>) -> LpParseError {
    LpParseError {
        line,
        column,
        message: message.into(),
    }
}

fn lex_number(chars: &[char], start: usize, line: usize) -> Result<(f64, usize), LpParseError> {
    let mut i = start;
    let digits = |i: &mut usize| {
        let s = *i;
        while *i < chars.len() && chars[*i].is_ascii_digit() {
            *i += 1;
        }
        *i - s
    };
    let mut count = digits(&mut i);
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        count += digits(&mut i);
    }
    if count == 0 {
        return Err(err(line, start + 1, "malformed number"));
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        i += 1;
        if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
            i += 1;
        }
        if digits(&mut i) == 0 {
            return Err(err(line, start + 1, "malformed exponent in number"));
        }
    }
    if i < chars.len() && (legal_name_char(chars[i]) || chars[i] == '#') && chars[i] != '.' {
        // "2x" style juxtaposition is not part of the dialect.
        return Err(err(
            line,
            i + 1,
            format!("unexpected character '{}' after number", chars[i]),
        ));
    }
    let text: String = chars[start..i].iter().collect();
    let v = text
        .parse::<f64>()
        .map_err(|_| err(line, start + 1, "malformed number"))?;
    Ok((v, i))
}

fn lex_line(text: &str, line: usize) -> Result<Vec<Token>, LpParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let column = i + 1;
        if c == '\\' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => {
                i += 1;
                Tok::Plus
            }
            '-' => {
                i += 1;
                Tok::Minus
            }
            ':' => {
                i += 1;
                Tok::Colon
            }
            '<' | '>' | '=' => {
                let mut j = i + 1;
                if j < chars.len() && matches!(chars[j], '<' | '>' | '=') {
                    j += 1;
                }
                let op: String = chars[i..j].iter().collect();
                i = j;
                match op.as_str() {
                    "<" | "<=" | "=<" => Tok::Rel(Relation::Le),
                    ">" | ">=" | "=>" => Tok::Rel(Relation::Ge),
                    "=" | "==" => Tok::Rel(Relation::Eq),
                    _ => return Err(err(line, column, format!("unknown operator '{op}'"))),
                }
            }
            c if c.is_ascii_digit() || c == '.' => {
                let (v, next) = lex_number(&chars, i, line)?;
                i = next;
                Tok::Num(v)
            }
            c if legal_name_char(c) || c == '#' => {
                let s = i;
                while i < chars.len() && (legal_name_char(chars[i]) || chars[i] == '#') {
                    i += 1;
                }
                let raw: String = chars[s..i].iter().collect();
                let lower = raw.to_ascii_lowercase();
                if lower == "inf" || lower == "infinity" {
                    Tok::Num(f64::INFINITY)
                } else {
                    Tok::Name(raw)
                }
            }
            other => return Err(err(line, column, format!("unexpected character '{other}'"))),
        };
        out.push(Token { tok, line, column });
    }
    Ok(out)
}

struct Builder {
    model: MilpModel,
    index: HashMap<String, VarId>,
    explicit_bounds: Vec<bool>,
}

impl Builder {
    fn var(&mut self, raw: &str, line: usize, column: usize) -> Result<VarId, LpParseError> {
        if let Some(&v) = self.index.get(raw) {
            return Ok(v);
        }
        let name = unsanitize_name(raw).map_err(|m| err(line, column, m))?;
        let id = VarId(self.model.variables.len());
        self.model.variables.push(Variable {
            name,
            lower: 0.0,
            upper: f64::INFINITY,
            kind: VarKind::Continuous,
        });
        self.explicit_bounds.push(false);
        self.index.insert(raw.to_string(), id);
        Ok(id)
    }
}

/// Parses `(+|-)* [number] [name]` terms until a relation or end of input.
fn parse_terms(
    b: &mut Builder,
    toks: &[Token],
    mut i: usize,
    expr: &mut LinExpr,
    allow_constant: bool,
) -> Result<usize, LpParseError> {
    while i < toks.len() {
        if matches!(toks[i].tok, Tok::Rel(_)) {
            break;
        }
        let start = &toks[i];
        let mut sign = 1.0;
        let mut saw_sign = false;
        while i < toks.len() && matches!(toks[i].tok, Tok::Plus | Tok::Minus) {
            if toks[i].tok == Tok::Minus {
                sign = -sign;
            }
            saw_sign = true;
            i += 1;
        }
        if !saw_sign && !expr.is_empty() {
            return Err(err(
                start.line,
                start.column,
                "expected '+' or '-' between terms",
            ));
        }
        let mut coef = 1.0;
        let mut has_num = false;
        if let Some(Token {
            tok: Tok::Num(v), ..
        }) = toks.get(i)
        {
            coef = *v;
            has_num = true;
            i += 1;
        }
        match toks.get(i) {
            Some(Token {
                tok: Tok::Name(n),
                line,
                column,
            }) => {
                let v = b.var(n, *line, *column)?;
                if coef * sign != 0.0 {
                    expr.add(v, sign * coef);
                }
                i += 1;
            }
            _ if has_num && allow_constant => expr.constant += sign * coef,
            Some(t) => return Err(err(t.line, t.column, "expected a variable name")),
            None => {
                return Err(err(
                    start.line,
                    start.column,
                    "dangling sign at end of expression",
                ))
            }
        }
    }
    Ok(i)
}

fn parse_bound(b: &mut Builder, toks: &[Token]) -> Result<(), LpParseError> {
    let signed = |toks: &[Token], i: &mut usize| -> Option<f64> {
        let mut sign = 1.0;
        while let Some(Token {
            tok: Tok::Plus | Tok::Minus,
            ..
        }) = toks.get(*i)
        {
            if toks[*i].tok == Tok::Minus {
                sign = -sign;
            }
            *i += 1;
        }
        if let Some(Token {
            tok: Tok::Num(v), ..
        }) = toks.get(*i)
        {
            *i += 1;
            Some(sign * v)
        } else {
            None
        }
    };
    let first = &toks[0];
    let bad = |t: &Token| err(t.line, t.column, "malformed bound");
    let mut i = 0;
    if let Some(lo) = signed(toks, &mut i) {
        // lo <= x [<= hi]
        let Some(Token {
            tok: Tok::Rel(r1), ..
        }) = toks.get(i)
        else {
            return Err(bad(first));
        };
        let r1 = *r1;
        i += 1;
        let Some(Token {
            tok: Tok::Name(n),
            line,
            column,
        }) = toks.get(i)
        else {
            return Err(bad(first));
        };
        let v = b.var(n, *line, *column)?;
        i += 1;
        let var = &mut b.model.variables[v.0];
        match r1 {
            Relation::Le => var.lower = lo,
            Relation::Ge => var.upper = lo,
            Relation::Eq => {
                var.lower = lo;
                var.upper = lo;
            }
        }
        if let Some(Token {
            tok: Tok::Rel(r2), ..
        }) = toks.get(i)
        {
            let r2 = *r2;
            i += 1;
            let hi = signed(toks, &mut i).ok_or_else(|| bad(first))?;
            match r2 {
                Relation::Le => var.upper = hi,
                Relation::Ge => var.lower = hi,
                Relation::Eq => return Err(bad(first)),
            }
        }
        b.explicit_bounds[v.0] = true;
        if i != toks.len() {
            return Err(bad(&toks[i]));
        }
        return Ok(());
    }
    let Tok::Name(n) = &first.tok else {
        return Err(bad(first));
    };
    let v = b.var(n, first.line, first.column)?;
    b.explicit_bounds[v.0] = true;
    match toks.get(1) {
        Some(Token {
            tok: Tok::Name(f), ..
        }) if f.eq_ignore_ascii_case("free") && toks.len() == 2 => {
            let var = &mut b.model.variables[v.0];
            var.lower = f64::NEG_INFINITY;
            var.upper = f64::INFINITY;
            Ok(())
        }
        Some(Token {
            tok: Tok::Rel(r), ..
        }) => {
            let r = *r;
            let mut i = 2;
            let val = signed(toks, &mut i).ok_or_else(|| bad(first))?;
            if i != toks.len() {
                return Err(bad(&toks[i]));
            }
            let var = &mut b.model.variables[v.0];
            match r {
                Relation::Le => var.upper = val,
                Relation::Ge => var.lower = val,
                Relation::Eq => {
                    var.lower = val;
                    var.upper = val;
                }
            }
            Ok(())
        }
        _ => Err(bad(first)),
    }
}

/// Parses an LP document in the dialect written by [`export_lp_text`].
/// Objective terms, with an optional "name:" label. Parsed before any
/// other section so variables are numbered in objective order.
fn parse_objective(b: &mut Builder, obj_toks: &[Token]) -> Result<(), LpParseError> {
    let mut i = 0;
    if obj_toks.len() >= 2 && matches!(obj_toks[0].tok, Tok::Name(_)) && obj_toks[1].tok == Tok::Colon {
        i = 2;
    }
    let mut expr = LinExpr::new();
    let end = parse_terms(b, obj_toks, i, &mut expr, true)?;
    if let Some(t) = obj_toks.get(end) {
        return Err(err(t.line, t.column, "relation in objective"));
    }
    b.model.objective.expr = expr;
    Ok(())
}

pub fn import_lp_text(text: &str) -> Result<MilpModel, LpParseError> {
    let mut b = Builder {
        model: MilpModel::new(),
        index: HashMap::new(),
        explicit_bounds: Vec::new(),
    };
    let mut section = Section::None;
    let mut saw_objective = false;
    let mut obj_toks: Vec<Token> = Vec::new();
    let mut row_toks: Vec<Token> = Vec::new();
    let mut kinds: Vec<(VarId, VarKind)> = Vec::new();
    let mut last_line = 0;

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        last_line = line;
        if raw.trim().is_empty() || raw.trim_start().starts_with('\\') {
            continue;
        }
        if let Some((sec, sense)) = section_header(raw) {
            if section == Section::Constraints {
                flush_rows(&mut b, &mut row_toks)?;
            }
            if section == Section::Objective {
                parse_objective(&mut b, &obj_toks)?;
            }
            if let Some(s) = sense {
                if saw_objective {
                    return Err(err(line, 1, "second objective section"));
                }
                saw_objective = true;
                b.model.objective.sense = s;
            } else if !saw_objective {
                return Err(err(line, 1, "section before the objective"));
            }
            section = sec;
            continue;
        }
        let toks = lex_line(raw, line)?;
        match section {
            Section::None => {
                return Err(err(
                    line,
                    1,
                    format!("unknown section header '{}'", raw.trim()),
                ));
            }
            Section::End => return Err(err(line, 1, "content after End")),
            Section::Objective => obj_toks.extend(toks),
            Section::Constraints => row_toks.extend(toks),
            Section::Bounds => {
                if !toks.is_empty() {
                    parse_bound(&mut b, &toks)?;
                }
            }
            Section::Generals | Section::Binaries => {
                for t in toks {
                    let Tok::Name(n) = &t.tok else {
                        return Err(err(t.line, t.column, "expected a variable name"));
                    };
                    let v = b.var(n, t.line, t.column)?;
                    let kind = if section == Section::Generals {
                        VarKind::Integer
                    } else {
                        VarKind::Binary
                    };
                    kinds.push((v, kind));
                }
            }
        }
        if section == Section::Objective && b.model.variables.is_empty() && obj_toks.is_empty() {
            continue;
        }
    }
    if section != Section::End {
        return Err(err(last_line.max(1), 1, "missing End"));
    }

    for (v, kind) in kinds {
        let var = &mut b.model.variables[v.0];
        var.kind = kind;
        if kind == VarKind::Binary && !b.explicit_bounds[v.0] {
            var.lower = 0.0;
            var.upper = 1.0;
        }
    }
    Ok(b.model)
}

fn flush_rows(b: &mut Builder, toks: &mut Vec<Token>) -> Result<(), LpParseError> {
    let mut i = 0;
    let mut anon = 0usize;
    while i < toks.len() {
        let start = toks[i].clone();
        let name = if i + 1 < toks.len() && toks[i + 1].tok == Tok::Colon {
            let Tok::Name(n) = &toks[i].tok else {
                return Err(err(
                    start.line,
                    start.column,
                    "constraint label must be a name",
                ));
            };
            i += 2;
            unsanitize_name(n).map_err(|m| err(start.line, start.column, m))?
        } else {
            anon += 1;
            format!("R{}", b.model.constraints.len() + anon)
        };
        let mut expr = LinExpr::new();
        i = parse_terms(b, toks, i, &mut expr, false)?;
        let Some(Token {
            tok: Tok::Rel(rel), ..
        }) = toks.get(i)
        else {
            return Err(err(start.line, start.column, "constraint without relation"));
        };
        let rel = *rel;
        i += 1;
        let mut sign = 1.0;
        while let Some(Token {
            tok: Tok::Plus | Tok::Minus,
            ..
        }) = toks.get(i)
        {
            if toks[i].tok == Tok::Minus {
                sign = -sign;
            }
            i += 1;
        }
        let rhs = match toks.get(i) {
            Some(Token {
                tok: Tok::Num(v), ..
            }) => sign * v,
            Some(t) => return Err(err(t.line, t.column, "expected right-hand side number")),
            None => return Err(err(start.line, start.column, "missing right-hand side")),
        };
        i += 1;
        b.model.constraints.push(Constraint {
            name,
            terms: expr.terms().to_vec(),
            relation: rel,
            rhs,
        });
    }
    toks.clear();
    Ok(())
}

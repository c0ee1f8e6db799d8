use std::collections::HashSet;

use crate::model::{
    canonical_multiplicity, canonical_name_lossy, Attribute, Multiplicity, NodeKind, Operation,
    Parameter, RelKind, Visibility,
};

use super::{ParseDiagnostic, ParseError, ParseErrorKind, Severity};

pub(super) struct Spanned<T> {
    pub value: T,
}

pub(super) struct Decl {
    pub kind: NodeKind,
    pub name: String,
    pub line: usize,
    pub column: usize,
    pub attributes: Vec<Spanned<Attribute>>,
    pub operations: Vec<Spanned<Operation>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(super) enum Arrow {
    /// `swapped` is set for mirrored arrows such as `<|--`, whose semantic
    /// source is the right-hand name.
    Class { kind: RelKind, swapped: bool },
    CrowsFoot { left: Multiplicity, right: Multiplicity },
}

pub(super) struct RawRel {
    pub line: usize,
    pub column: usize,
    pub left: String,
    pub right: String,
    pub left_mult: Option<Multiplicity>,
    pub right_mult: Option<Multiplicity>,
    pub arrow: Arrow,
    pub label: Option<String>,
}

pub(super) enum Stmt {
    Decl(Decl),
    Rel(RawRel),
}

pub(super) struct Lexed {
    pub statements: Vec<Stmt>,
    pub diagnostics: Vec<ParseDiagnostic>,
}

impl Lexed {
    pub fn has_errors(&self) -> bool {
        self.diagnostics.iter().any(|d| d.severity == Severity::Error)
    }
}

struct Line<'a> {
    number: usize,
    column: usize,
    text: &'a str,
}

/// Directives that carry layout or styling only.
const SKIPPED_DIRECTIVES: &[&str] = &[
    "skinparam", "hide", "show", "title", "caption", "header", "footer", "scale", "left",
    "top", "allowmixing", "set", "!theme", "!include", "!define", "!pragma", "package",
    "namespace", "together",
];

pub(super) fn lex(source: &str) -> Result<Lexed, ParseError> {
    let raw_lines: Vec<&str> = source.lines().collect();
    let is_start = |l: &str| {
        let t = l.trim();
        t == "@startuml" || t.starts_with("@startuml ")
    };
    let start = raw_lines.iter().position(|l| is_start(l));
    let end = start.and_then(|s| {
        raw_lines
            .iter()
            .enumerate()
            .skip(s + 1)
            .find(|(_, l)| l.trim() == "@enduml")
            .map(|(i, _)| i)
    });
    let (start, end) = match (start, end) {
        (Some(s), Some(e)) => (s, e),
        (None, _) => {
            return Err(ParseError::new(
                ParseErrorKind::MissingEnclosure,
                vec![ParseDiagnostic::error(1, 1, "missing `@startuml`")],
            ))
        }
        (Some(_), None) => {
            let line = raw_lines.len().max(1);
            let column = raw_lines.last().map(|l| l.chars().count() + 1).unwrap_or(1);
            return Err(ParseError::new(
                ParseErrorKind::MissingEnclosure,
                vec![ParseDiagnostic::error(line, column, "missing `@enduml`")],
            ));
        }
    };

    let lines: Vec<Line> = raw_lines[start + 1..end]
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let indent = text.chars().take_while(|c| c.is_whitespace()).count();
            Line { number: start + 2 + i, column: indent + 1, text: text.trim() }
        })
        .collect();

    let mut lexer = Lexer { diagnostics: Vec::new(), statements: Vec::new() };
    let mut i = 0;
    while i < lines.len() {
        i = lexer.statement(&lines, i);
    }
    Ok(Lexed { statements: lexer.statements, diagnostics: lexer.diagnostics })
}

struct Lexer {
    diagnostics: Vec<ParseDiagnostic>,
    statements: Vec<Stmt>,
}

impl Lexer {
    fn error(&mut self, line: &Line, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic::error(line.number, line.column, message));
    }

    fn warn(&mut self, line: &Line, message: impl Into<String>) {
        self.diagnostics.push(ParseDiagnostic::warning(line.number, line.column, message));
    }

    /// Consumes the statement starting at `lines[i]`, returning the index of
    /// the next unconsumed line.
    fn statement(&mut self, lines: &[Line], i: usize) -> usize {
        let line = &lines[i];
        let text = line.text;
        if text.is_empty() || text.starts_with('\'') {
            return i + 1;
        }
        if text.starts_with("/'") {
            return self.skip_until(lines, i, |t| t.ends_with("'/"), None);
        }
        let first = first_word(text);
        let lower = first.to_ascii_lowercase();

        if lower == "note" {
            if text.contains(':') || text.contains('"') && text.contains(" as ") {
                self.warn(line, "note skipped");
                return i + 1;
            }
            return self.skip_until(lines, i, |t| {
                let t = t.to_ascii_lowercase();
                t == "end note" || t == "endnote"
            }, Some("note skipped"));
        }
        if lower == "legend" {
            return self.skip_until(lines, i, |t| {
                let t = t.to_ascii_lowercase();
                t == "endlegend" || t == "end legend"
            }, Some("legend skipped"));
        }
        if SKIPPED_DIRECTIVES.contains(&lower.as_str()) || lower.starts_with('!') {
            if lower == "package" || lower == "namespace" || lower == "together" {
                self.warn(line, format!("`{first}` grouping is not supported; its contents are read as top-level declarations"));
                // A closing brace is consumed as a stray `}` below.
                return i + 1;
            }
            self.warn(line, format!("`{first}` directive skipped"));
            if text.ends_with('{') {
                return self.skip_block(lines, i);
            }
            return i + 1;
        }
        if text == "}" {
            // Closing brace of a skipped grouping.
            return i + 1;
        }

        match lower.as_str() {
            "class" | "abstract" | "interface" | "enum" | "entity" => self.declaration(lines, i),
            _ => {
                self.relationship(line);
                i + 1
            }
        }
    }

    fn skip_until(
        &mut self,
        lines: &[Line],
        i: usize,
        is_end: impl Fn(&str) -> bool,
        warning: Option<&str>,
    ) -> usize {
        if let Some(w) = warning {
            self.warn(&lines[i], w);
        }
        let mut j = i;
        while j < lines.len() {
            if is_end(lines[j].text) && (j > i || warning.is_none()) {
                return j + 1;
            }
            j += 1;
        }
        self.error(&lines[i], "block is never closed");
        lines.len()
    }

    fn skip_block(&mut self, lines: &[Line], i: usize) -> usize {
        let mut depth = 0usize;
        for (j, line) in lines.iter().enumerate().skip(i) {
            depth += line.text.matches('{').count();
            depth = depth.saturating_sub(line.text.matches('}').count());
            if depth == 0 {
                return j + 1;
            }
        }
        self.error(&lines[i], "`{` is never closed");
        lines.len()
    }

    fn declaration(&mut self, lines: &[Line], i: usize) -> usize {
        let line = &lines[i];
        let mut rest = line.text;
        let (kind, keyword_len) = {
            let lower = rest.to_ascii_lowercase();
            if lower.starts_with("abstract class ") {
                (NodeKind::AbstractClass, "abstract class ".len())
            } else if lower.starts_with("abstract ") {
                (NodeKind::AbstractClass, "abstract ".len())
            } else if lower.starts_with("class ") {
                (NodeKind::Class, "class ".len())
            } else if lower.starts_with("interface ") {
                (NodeKind::Interface, "interface ".len())
            } else if lower.starts_with("enum ") {
                (NodeKind::Enum, "enum ".len())
            } else if lower.starts_with("entity ") {
                (NodeKind::Entity, "entity ".len())
            } else {
                self.error(line, format!("expected a name after `{}`", first_word(rest)));
                return i + 1;
            }
        };
        rest = rest[keyword_len..].trim_start();

        let (name, after) = match take_name(rest) {
            Some(x) => x,
            None => {
                self.error(line, "expected a name");
                return i + 1;
            }
        };
        if canonical_name_lossy(&name).is_empty() {
            self.error(line, "name is empty");
            return i + 1;
        }
        let mut after = after.trim();
        let mut opens_block = false;
        let mut closes_block = false;
        if let Some(stripped) = after.strip_suffix('}') {
            let inner = stripped.trim_end();
            if let Some(inner) = inner.strip_suffix('{') {
                if inner.trim().is_empty() || !inner.contains('{') {
                    after = inner.trim();
                    closes_block = true;
                    opens_block = true;
                }
            }
        }
        if !closes_block {
            if let Some(stripped) = after.strip_suffix('{') {
                after = stripped.trim();
                opens_block = true;
            }
        }
        // Stereotypes, colors and generics carry no structure for comparison.
        let mut tail = after;
        while !tail.is_empty() {
            if tail.starts_with("<<") {
                match tail.find(">>") {
                    Some(end) => {
                        self.warn(line, format!("stereotype `{}` skipped", &tail[..end + 2]));
                        tail = tail[end + 2..].trim_start();
                    }
                    None => {
                        self.error(line, "unterminated stereotype `<<`");
                        return i + 1;
                    }
                }
            } else if tail.starts_with('#') {
                let end = tail.find(char::is_whitespace).unwrap_or(tail.len());
                self.warn(line, format!("color `{}` skipped", &tail[..end]));
                tail = tail[end..].trim_start();
            } else if first_word(tail).eq_ignore_ascii_case("as") {
                self.error(line, "aliases (`as`) are not supported; use the name directly");
                return i + 1;
            } else {
                self.error(line, format!("unexpected `{tail}` after declaration"));
                return i + 1;
            }
        }

        let mut decl = Decl {
            kind,
            name,
            line: line.number,
            column: line.column,
            attributes: Vec::new(),
            operations: Vec::new(),
        };
        let mut next = i + 1;
        if opens_block && !closes_block {
            let mut closed = false;
            let mut separator_seen = false;
            let mut attr_names = HashSet::new();
            let mut signatures = HashSet::new();
            while next < lines.len() {
                let member = &lines[next];
                next += 1;
                if member.text == "}" {
                    closed = true;
                    break;
                }
                self.member(
                    member,
                    &mut decl,
                    &mut separator_seen,
                    &mut attr_names,
                    &mut signatures,
                );
            }
            if !closed {
                self.error(line, format!("`{{` of `{}` is never closed", decl.name));
            }
            if kind == NodeKind::Entity && !separator_seen {
                for attr in &mut decl.attributes {
                    attr.value.is_key = false;
                }
            }
        }
        self.statements.push(Stmt::Decl(decl));
        next
    }

    fn member(
        &mut self,
        line: &Line,
        decl: &mut Decl,
        separator_seen: &mut bool,
        attr_names: &mut HashSet<String>,
        signatures: &mut HashSet<crate::model::Signature>,
    ) {
        let mut text = line.text;
        if text.is_empty() || text.starts_with('\'') {
            return;
        }
        if is_separator(text) {
            *separator_seen = true;
            return;
        }
        let entity = decl.kind == NodeKind::Entity;

        while let Some(stripped) = text.strip_prefix('{') {
            match stripped.find('}') {
                Some(end) => {
                    self.warn(line, format!("modifier `{{{}}}` skipped", &stripped[..end]));
                    text = stripped[end + 1..].trim_start();
                }
                None => {
                    self.error(line, "unterminated `{` modifier");
                    return;
                }
            }
        }

        let mut mandatory = false;
        let mut visibility = Visibility::Unspecified;
        if entity {
            if let Some(stripped) = text.strip_prefix('*') {
                mandatory = true;
                text = stripped.trim_start();
            }
            if let Some(v) = text.chars().next().and_then(Visibility::from_prefix) {
                if text.len() > 1 {
                    self.warn(line, format!("visibility `{}` on an entity attribute ignored", v.prefix()));
                    text = text[1..].trim_start();
                }
            }
        } else {
            if text.starts_with('*') {
                self.error(line, "`*` (mandatory) is only meaningful on entity attributes");
                return;
            }
            if let Some(v) = text.chars().next().and_then(Visibility::from_prefix) {
                visibility = v;
                text = text[1..].trim_start();
            }
        }
        let mut text = text.to_string();
        while let Some(start) = text.find("<<") {
            match text[start..].find(">>") {
                Some(len) => {
                    self.warn(line, format!("stereotype `{}` skipped", &text[start..start + len + 2]));
                    text.replace_range(start..start + len + 2, "");
                    text = text.trim().to_string();
                }
                None => {
                    self.error(line, "unterminated stereotype `<<`");
                    return;
                }
            }
        }
        let text = text.trim();
        if text.is_empty() {
            self.error(line, "member has no name");
            return;
        }

        let is_operation = match (text.find('('), text.find(':')) {
            (Some(paren), Some(colon)) => paren < colon,
            (Some(_), None) => true,
            _ => false,
        };
        if is_operation {
            if entity {
                self.error(line, "entities have no operations");
                return;
            }
            match parse_operation(text) {
                Ok(mut op) => {
                    op.visibility = visibility;
                    if !signatures.insert(op.signature()) {
                        self.error(line, format!("operation `{}` is declared more than once", op.display_signature()));
                        return;
                    }
                    decl.operations.push(Spanned { value: op });
                }
                Err(msg) => self.error(line, msg),
            }
            return;
        }

        let (name, type_text) = match text.split_once(':') {
            Some((name, ty)) => {
                let ty = ty.trim();
                if ty.is_empty() {
                    self.error(line, format!("expected a type after `{}:`", name.trim()));
                    return;
                }
                (name.trim(), Some(ty))
            }
            None => (text, None),
        };
        if name.is_empty() {
            self.error(line, "member has no name");
            return;
        }
        if name.split_whitespace().count() > 1 {
            self.error(
                line,
                format!("expected `name : Type` but found `{text}` (missing `:`)"),
            );
            return;
        }
        if canonical_name_lossy(name).is_empty() {
            self.error(line, "member has no name");
            return;
        }
        let name = name.trim_end_matches(',');
        if !attr_names.insert(canonical_name_lossy(name)) {
            self.error(line, format!("attribute `{name}` is declared more than once"));
            return;
        }
        let mut attr = Attribute::new(name, type_text).with_visibility(visibility);
        if entity {
            attr.is_mandatory = mandatory;
            attr.is_key = !*separator_seen;
        }
        decl.attributes.push(Spanned { value: attr });
    }

    fn relationship(&mut self, line: &Line) {
        let text = line.text;
        let (body, label) = match split_label(text) {
            Some((body, label)) => (body, Some(label).filter(|l| !l.is_empty())),
            None => (text, None),
        };
        let tokens = match tokenize(body) {
            Ok(t) => t,
            Err(msg) => {
                self.error(line, msg);
                return;
            }
        };
        let tokens = split_glued_arrow(tokens);
        let arrow_positions: Vec<usize> = tokens
            .iter()
            .enumerate()
            .filter(|(_, t)| !t.quoted && looks_like_arrow(&t.text))
            .map(|(i, _)| i)
            .collect();
        if arrow_positions.len() != 1 {
            let message = if arrow_positions.is_empty() {
                format!("unrecognized statement `{text}`")
            } else {
                format!("more than one arrow in `{text}`")
            };
            self.error(line, message);
            return;
        }
        let at = arrow_positions[0];
        let (normalized, hinted) = normalize_arrow(&tokens[at].text);
        if hinted {
            self.warn(line, "arrow direction/style hint skipped");
        }
        let arrow = match classify_arrow(&normalized) {
            Some(a) => a,
            None => {
                self.error(line, format!("unsupported arrow `{}`", tokens[at].text));
                return;
            }
        };
        let left = &tokens[..at];
        let right = &tokens[at + 1..];
        let (left_name, left_mult) = match left {
            [name] => (name, None),
            [name, mult] if mult.quoted => (name, Some(mult)),
            _ => {
                self.error(line, "expected `Name [\"multiplicity\"]` before the arrow");
                return;
            }
        };
        let (right_name, right_mult) = match right {
            [name] => (name, None),
            [mult, name] if mult.quoted => (name, Some(mult)),
            _ => {
                self.error(line, "expected `[\"multiplicity\"] Name` after the arrow");
                return;
            }
        };
        let mut parse_mult = |tok: Option<&Token>| -> Result<Option<Multiplicity>, ()> {
            match tok {
                None => Ok(None),
                Some(t) => canonical_multiplicity(&t.text).map(Some).map_err(|e| {
                    self.diagnostics.push(ParseDiagnostic::error(line.number, line.column, e.to_string()));
                }),
            }
        };
        let Ok(left_mult) = parse_mult(left_mult) else { return };
        let Ok(right_mult) = parse_mult(right_mult) else { return };
        if matches!(arrow, Arrow::CrowsFoot { .. }) && (left_mult.is_some() || right_mult.is_some()) {
            self.error(line, "quoted multiplicities cannot be combined with crow's-foot ends");
            return;
        }
        for name in [left_name, right_name] {
            if canonical_name_lossy(&name.text).is_empty() {
                self.error(line, "relationship endpoint has no name");
                return;
            }
        }
        self.statements.push(Stmt::Rel(RawRel {
            line: line.number,
            column: line.column,
            left: left_name.text.clone(),
            right: right_name.text.clone(),
            left_mult,
            right_mult,
            arrow,
            label,
        }));
    }
}

fn first_word(text: &str) -> &str {
    text.split(|c: char| c.is_whitespace() || c == '{').next().unwrap_or("")
}

fn is_separator(text: &str) -> bool {
    ["--", "..", "==", "__"].iter().any(|sep| {
        text.starts_with(sep) && text.ends_with(sep) && (text.len() == 2 || text.len() >= 4)
    })
}

/// Reads a bare or double-quoted name from the front of `text`.
fn take_name(text: &str) -> Option<(String, &str)> {
    if let Some(stripped) = text.strip_prefix('"') {
        let end = stripped.find('"')?;
        return Some((stripped[..end].trim().to_string(), &stripped[end + 1..]));
    }
    let end = text
        .find(|c: char| c.is_whitespace() || c == '{' || c == '<' || c == '#')
        .unwrap_or(text.len());
    if end == 0 {
        return None;
    }
    Some((text[..end].to_string(), &text[end..]))
}

fn parse_operation(text: &str) -> Result<Operation, String> {
    let open = text.find('(').expect("caller checked for `(`");
    let name = text[..open].trim();
    if name.is_empty() || name.split_whitespace().count() > 1 {
        return Err(format!("expected `name(parameters)` but found `{text}`"));
    }
    let mut depth = 0i32;
    let mut close = None;
    for (i, c) in text[open..].char_indices() {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    close = Some(open + i);
                    break;
                }
            }
            _ => {}
        }
    }
    let close = close.ok_or_else(|| format!("unclosed `(` in `{text}`"))?;
    let mut op = Operation::new(name);
    let params = text[open + 1..close].trim();
    if !params.is_empty() {
        for param in split_top_level(params, ',') {
            let param = param.trim();
            let (pname, ptype) = match param.split_once(':') {
                Some((n, t)) if !n.trim().is_empty() && !t.trim().is_empty() => {
                    (n.trim(), Some(t.trim()))
                }
                None if !param.is_empty() && param.split_whitespace().count() == 1 => {
                    (param, None)
                }
                _ => return Err(format!("expected `name : Type` parameter but found `{param}`")),
            };
            if pname.split_whitespace().count() > 1 {
                return Err(format!("expected `name : Type` parameter but found `{param}`"));
            }
            op.parameters.push(Parameter {
                name: pname.to_string(),
                type_text: ptype.map(str::to_string),
            });
        }
    }
    let rest = text[close + 1..].trim();
    if !rest.is_empty() {
        match rest.strip_prefix(':') {
            Some(ret) if !ret.trim().is_empty() => op.return_type = Some(ret.trim().to_string()),
            _ => return Err(format!("expected `: ReturnType` after `)` but found `{rest}`")),
        }
    }
    Ok(op)
}

fn split_top_level(text: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in text.char_indices() {
        match c {
            '<' | '(' | '[' => depth += 1,
            '>' | ')' | ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&text[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&text[start..]);
    out
}

/// Splits off `: label` at the first colon outside quotes.
fn split_label(text: &str) -> Option<(&str, String)> {
    let mut quoted = false;
    for (i, c) in text.char_indices() {
        match c {
            '"' => quoted = !quoted,
            ':' if !quoted => return Some((&text[..i], text[i + 1..].trim().to_string())),
            _ => {}
        }
    }
    None
}

#[derive(Debug, Clone)]
struct Token {
    text: String,
    quoted: bool,
}

fn tokenize(text: &str) -> Result<Vec<Token>, String> {
    let mut tokens = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => s.push(ch),
                    None => return Err("unterminated quote".into()),
                }
            }
            tokens.push(Token { text: s.trim().to_string(), quoted: true });
            continue;
        }
        let mut s = String::new();
        while let Some(&ch) = chars.peek() {
            if ch.is_whitespace() || ch == '"' {
                break;
            }
            s.push(ch);
            chars.next();
        }
        tokens.push(Token { text: s, quoted: false });
    }
    Ok(tokens)
}

/// Handles `A-->B` written without spaces by cutting the first run of arrow
/// punctuation out of a bare token.
fn split_glued_arrow(tokens: Vec<Token>) -> Vec<Token> {
    if tokens.iter().any(|t| !t.quoted && looks_like_arrow(&t.text)) {
        return tokens;
    }
    let mut out = Vec::new();
    for tok in tokens {
        if tok.quoted {
            out.push(tok);
            continue;
        }
        let is_punct = |c: char| matches!(c, '-' | '.' | '<' | '>' | '|' | '*' | '{' | '}');
        let chars: Vec<(usize, char)> = tok.text.char_indices().collect();
        let mut found = None;
        let mut i = 0;
        while i < chars.len() {
            if is_punct(chars[i].1) {
                let start = i;
                while i < chars.len() && is_punct(chars[i].1) {
                    i += 1;
                }
                let s = chars[start].0;
                let e = chars.get(i).map(|x| x.0).unwrap_or(tok.text.len());
                let run = &tok.text[s..e];
                if start > 0 && e < tok.text.len() && (run.contains("--") || run.contains("..") || run.contains("->")) {
                    found = Some((s, e));
                    break;
                }
            } else {
                i += 1;
            }
        }
        match found {
            Some((s, e)) => {
                out.push(Token { text: tok.text[..s].to_string(), quoted: false });
                out.push(Token { text: tok.text[s..e].to_string(), quoted: false });
                out.push(Token { text: tok.text[e..].to_string(), quoted: false });
            }
            None => out.push(tok),
        }
    }
    out
}

fn looks_like_arrow(text: &str) -> bool {
    let has_line = text.contains('-') || text.contains('.');
    has_line
        && text.len() >= 2
        && text.chars().all(|c| {
            matches!(c, '-' | '.' | '<' | '>' | '|' | 'o' | '*' | '{' | '}' | '[' | ']' | '#')
                || c.is_ascii_alphanumeric()
        })
        && !text.chars().next().is_some_and(|c| c.is_ascii_alphanumeric() && c != 'o')
        && !text.chars().last().is_some_and(|c| c.is_ascii_alphanumeric() && c != 'o')
        && (text.contains("--") || text.contains("..") || text.contains('>') || text.contains('<') || text.contains('|'))
}

/// Drops `[...]` style brackets and direction words, then collapses line runs
/// to `--` / `..`. The flag reports whether anything was dropped.
fn normalize_arrow(text: &str) -> (String, bool) {
    let mut hinted = false;
    let mut s = String::new();
    let mut in_bracket = false;
    for c in text.chars() {
        match c {
            '[' => {
                in_bracket = true;
                hinted = true;
            }
            ']' => in_bracket = false,
            _ if in_bracket => {}
            _ => s.push(c),
        }
    }
    for word in ["up", "down", "left", "right", "u", "d", "l", "r"] {
        for line in ['-', '.'] {
            let pattern = format!("{line}{word}{line}");
            if s.contains(&pattern) {
                s = s.replace(&pattern, &format!("{line}{line}"));
                hinted = true;
            }
        }
    }
    let mut out = String::new();
    let mut prev: Option<char> = None;
    for c in s.chars() {
        if (c == '-' || c == '.') && prev == Some(c) {
            continue;
        }
        out.push(c);
        if c == '-' || c == '.' {
            out.push(c);
        }
        prev = Some(c);
    }
    (out, hinted)
}

fn crows_foot_end(symbol: &str) -> Option<Multiplicity> {
    match symbol {
        "||" => Some(Multiplicity::ONE),
        "|o" | "o|" => Some(Multiplicity::ZERO_OR_ONE),
        "}|" | "|{" => Some(Multiplicity::ONE_OR_MORE),
        "}o" | "o{" => Some(Multiplicity::MANY),
        _ => None,
    }
}

fn classify_arrow(arrow: &str) -> Option<Arrow> {
    let (line_at, line) = arrow
        .find("--")
        .map(|i| (i, "--"))
        .or_else(|| arrow.find("..").map(|i| (i, "..")))?;
    let head = &arrow[..line_at];
    let tail = &arrow[line_at + 2..];

    if let (Some(left), Some(right)) = (crows_foot_end(head), crows_foot_end(tail)) {
        return Some(Arrow::CrowsFoot { left, right });
    }
    let class = |kind, swapped| Some(Arrow::Class { kind, swapped });
    match (head, line, tail) {
        ("", "--", "") => class(RelKind::Association, false),
        ("", "--", ">") => class(RelKind::DirectedAssociation, false),
        ("<", "--", "") => class(RelKind::DirectedAssociation, true),
        ("", "--", "|>") => class(RelKind::Inheritance, false),
        ("<|", "--", "") => class(RelKind::Inheritance, true),
        ("", "..", "|>") => class(RelKind::Realization, false),
        ("<|", "..", "") => class(RelKind::Realization, true),
        ("", "..", ">") => class(RelKind::Dependency, false),
        ("<", "..", "") => class(RelKind::Dependency, true),
        ("o", "--", "") => class(RelKind::Aggregation, false),
        ("", "--", "o") => class(RelKind::Aggregation, true),
        ("*", "--", "") => class(RelKind::Composition, false),
        ("", "--", "*") => class(RelKind::Composition, true),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrows_normalize() {
        assert_eq!(normalize_arrow("---|>").0, "--|>");
        assert_eq!(normalize_arrow("-up->"), ("-->".to_string(), true));
        assert_eq!(normalize_arrow("-[#red]->"), ("-->".to_string(), true));
        assert_eq!(normalize_arrow("->").0, "-->");
        assert_eq!(normalize_arrow("||..o{").0, "||..o{");
    }

    #[test]
    fn arrow_table() {
        assert_eq!(
            classify_arrow("<|--"),
            Some(Arrow::Class { kind: RelKind::Inheritance, swapped: true })
        );
        assert_eq!(
            classify_arrow("||--o{"),
            Some(Arrow::CrowsFoot { left: Multiplicity::ONE, right: Multiplicity::MANY })
        );
        assert_eq!(
            classify_arrow("}|..|o"),
            Some(Arrow::CrowsFoot { left: Multiplicity::ONE_OR_MORE, right: Multiplicity::ZERO_OR_ONE })
        );
        assert_eq!(classify_arrow(".."), None);
        assert_eq!(classify_arrow("o--o"), None);
        assert_eq!(classify_arrow("<-->"), None);
    }

    #[test]
    fn glued_arrows_split() {
        let toks = split_glued_arrow(tokenize("Foo-->Bar").unwrap());
        let texts: Vec<_> = toks.iter().map(|t| t.text.as_str()).collect();
        assert_eq!(texts, ["Foo", "-->", "Bar"]);
    }

    #[test]
    fn operation_parameters_respect_generics() {
        let op = parse_operation("put(m : Map<K, V>, k : K) : V").unwrap();
        assert_eq!(op.parameters.len(), 2);
        assert_eq!(op.parameters[0].type_text.as_deref(), Some("Map<K, V>"));
        assert_eq!(op.return_type.as_deref(), Some("V"));
        assert!(parse_operation("f(String s)").is_err());
    }
}

use super::{Declaration, DslError, DslErrorKind, Item, Param, Span, Table};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Number(String),
    Open(char),
    Close(char),
    Comma,
    Colon,
    Equals,
    Arrow,
    Newline,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    span: Span,
}

impl Token {
    fn text(&self) -> String {
        match &self.tok {
            Tok::Word(s) | Tok::Number(s) => s.clone(),
            Tok::Open(c) | Tok::Close(c) => c.to_string(),
            Tok::Comma => ",".into(),
            Tok::Colon => ":".into(),
            Tok::Equals => "=".into(),
            Tok::Arrow => "->".into(),
            Tok::Newline => "end of line".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

fn is_word_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(text: &str) -> Result<Vec<Token>, DslError> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);
    let mut depth = 0usize;
    while let Some(&c) = chars.peek() {
        let span = Span { line, column };
        let mut bump = |chars: &mut std::iter::Peekable<std::str::Chars>| {
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else {
                column += 1;
            }
            c
        };
        match c {
            '\n' => {
                bump(&mut chars);
                if depth == 0 {
                    out.push(Token { tok: Tok::Newline, span });
                }
            }
            c if c.is_whitespace() => {
                bump(&mut chars);
            }
            '#' => {
                while chars.peek().is_some_and(|&c| c != '\n') {
                    bump(&mut chars);
                }
            }
            '{' | '(' | '[' => {
                bump(&mut chars);
                depth += 1;
                out.push(Token { tok: Tok::Open(c), span });
            }
            '}' | ')' | ']' => {
                bump(&mut chars);
                depth = depth.saturating_sub(1);
                out.push(Token { tok: Tok::Close(c), span });
            }
            ',' => {
                bump(&mut chars);
                out.push(Token { tok: Tok::Comma, span });
            }
            ':' => {
                bump(&mut chars);
                out.push(Token { tok: Tok::Colon, span });
            }
            '=' => {
                bump(&mut chars);
                out.push(Token { tok: Tok::Equals, span });
            }
            '-' if {
                let mut ahead = chars.clone();
                ahead.next();
                ahead.peek() == Some(&'>')
            } =>
            {
                bump(&mut chars);
                bump(&mut chars);
                out.push(Token { tok: Tok::Arrow, span });
            }
            c if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' => {
                let mut s = String::new();
                while let Some(&d) = chars.peek() {
                    let exponent_sign = (d == '-' || d == '+') && s.ends_with(['e', 'E']);
                    let leading_sign = (d == '-' || d == '+') && s.is_empty();
                    if is_word_char(d) || d == '.' || exponent_sign || leading_sign {
                        s.push(d);
                        bump(&mut chars);
                    } else {
                        break;
                    }
                }
                out.push(Token { tok: Tok::Number(s), span });
            }
            c if is_word_char(c) => {
                let mut s = String::new();
                loop {
                    let mut ahead = chars.clone();
                    match ahead.next() {
                        Some(d) if is_word_char(d) => {}
                        Some('-') if ahead.peek().is_some_and(|&d| is_word_char(d)) => {}
                        _ => break,
                    }
                    s.push(bump(&mut chars).unwrap_or_default());
                }
                out.push(Token { tok: Tok::Word(s), span });
            }
            other => {
                return Err(DslError::new(DslErrorKind::Syntax, span, other.to_string(), "unexpected character"));
            }
        }
    }
    out.push(Token { tok: Tok::Newline, span: Span { line, column } });
    out.push(Token { tok: Tok::Eof, span: Span { line, column } });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type Parsed<T> = Result<T, DslError>;

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, token: &Token, message: impl Into<String>) -> Parsed<T> {
        Err(DslError::new(DslErrorKind::Syntax, token.span, token.text(), message))
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Parsed<Token> {
        let t = self.next();
        if t.tok == tok {
            Ok(t)
        } else {
            self.error(&t, format!("expected {what}"))
        }
    }

    fn accept(&mut self, tok: &Tok) -> bool {
        if &self.peek().tok == tok {
            self.next();
            true
        } else {
            false
        }
    }

    fn name(&mut self, what: &str) -> Parsed<(String, Span)> {
        let t = self.next();
        match t.tok {
            Tok::Word(s) if s.chars().next().is_some_and(|c| !c.is_numeric()) => Ok((s, t.span)),
            _ => self.error(&t, format!("expected {what}")),
        }
    }

    /// A value label: a word or a bare number such as `0`.
    fn label(&mut self) -> Parsed<String> {
        let t = self.next();
        match t.tok {
            Tok::Word(s) | Tok::Number(s) => Ok(s),
            _ => self.error(&t, "expected a value label"),
        }
    }

    fn number(&mut self) -> Parsed<f64> {
        let t = self.next();
        match &t.tok {
            Tok::Word(w) if w == "inf" => Ok(f64::INFINITY),
            Tok::Number(s) => match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => self.error(&t, "malformed number"),
            },
            _ => self.error(&t, "expected a number"),
        }
    }

    fn list<T>(&mut self, open: char, close: char, mut item: impl FnMut(&mut Parser) -> Parsed<T>) -> Parsed<Vec<T>> {
        self.expect(Tok::Open(open), &format!("`{open}`"))?;
        let mut out = Vec::new();
        if self.accept(&Tok::Close(close)) {
            return Ok(out);
        }
        loop {
            out.push(item(self)?);
            if self.accept(&Tok::Close(close)) {
                return Ok(out);
            }
            self.expect(Tok::Comma, &format!("`,` or `{close}`"))?;
        }
    }

    fn names_until_arrow_or(&mut self, stop: Tok) -> Parsed<Vec<String>> {
        let mut out = Vec::new();
        if self.peek().tok == stop {
            return Ok(out);
        }
        loop {
            out.push(self.name("a variable name")?.0);
            if !self.accept(&Tok::Comma) {
                return Ok(out);
            }
        }
    }

    fn table(&mut self) -> Parsed<Table> {
        let nested = self.peek().tok == Tok::Open('[')
            && self.tokens.get(self.pos + 1).is_some_and(|t| t.tok == Tok::Open('['));
        if nested {
            Ok(Table::Rows(self.list('[', ']', |p| p.list('[', ']', Parser::number))?))
        } else {
            Ok(Table::Flat(self.list('[', ']', Parser::number)?))
        }
    }

    fn settings(&mut self) -> Parsed<Vec<(String, Span, Param)>> {
        let mut out = Vec::new();
        while let Tok::Word(_) = self.peek().tok {
            let (key, span) = self.name("a setting")?;
            self.expect(Tok::Equals, "`=`")?;
            let t = self.peek().clone();
            let value = match &t.tok {
                Tok::Word(w) if w != "inf" => Param::Word(self.label()?),
                _ => Param::Number(self.number()?),
            };
            out.push((key, span, value));
        }
        Ok(out)
    }

    fn numeric_settings(&mut self, allowed: &[&str]) -> Parsed<Vec<(String, f64)>> {
        let mut out: Vec<(String, f64)> = Vec::new();
        for (key, span, value) in self.settings()? {
            if !allowed.contains(&key.as_str()) {
                return Err(DslError::new(
                    DslErrorKind::Syntax,
                    span,
                    key,
                    format!("expected one of: {}", allowed.join(", ")),
                ));
            }
            if out.iter().any(|(k, _)| *k == key) {
                return Err(DslError::new(DslErrorKind::Syntax, span, key, "setting given twice"));
            }
            match value {
                Param::Number(v) => out.push((key, v)),
                Param::Word(w) => return Err(DslError::new(DslErrorKind::Syntax, span, w, "expected a number")),
            }
        }
        Ok(out)
    }

    fn over(&mut self) -> Parsed<Vec<String>> {
        let t = self.next();
        if t.tok != Tok::Word("over".into()) {
            return self.error(&t, "expected `over`");
        }
        self.list('(', ')', |p| Ok(p.name("a variable name")?.0))
    }

    fn declaration(&mut self) -> Parsed<Option<Declaration>> {
        while self.accept(&Tok::Newline) {}
        let start = self.next();
        let keyword = match &start.tok {
            Tok::Eof => return Ok(None),
            Tok::Word(w) => w.clone(),
            _ => return self.error(&start, "expected a declaration keyword"),
        };
        let span = start.span;
        let item = match keyword.as_str() {
            "var" => {
                let (name, _) = self.name("a variable name")?;
                let domain = self.list('{', '}', Parser::label)?;
                Item::Var { name, domain }
            }
            "cpd" => {
                let (name, _) = self.name("a cpd name")?;
                self.expect(Tok::Colon, "`:`")?;
                let sources = self.names_until_arrow_or(Tok::Arrow)?;
                self.expect(Tok::Arrow, "`->`")?;
                let targets = self.names_until_arrow_or(Tok::Equals)?;
                if targets.is_empty() {
                    return self.error(self.peek(), "expected a target variable");
                }
                self.expect(Tok::Equals, "`=`")?;
                let table = self.table()?;
                Item::Cpd { name, sources, targets, table }
            }
            "edge" => {
                let (name, _) = self.name("a cpd or dataset name")?;
                let s = self.numeric_settings(&["beta", "alpha"])?;
                Item::Edge { name, beta: get(&s, "beta", 1.0), alpha: get(&s, "alpha", 1.0) }
            }
            "event" => {
                let (variable, _) = self.name("a variable name")?;
                self.expect(Tok::Equals, "`=`")?;
                let value = self.label()?;
                let s = self.numeric_settings(&["beta", "alpha"])?;
                Item::Event { variable, value, beta: get(&s, "beta", f64::INFINITY), alpha: get(&s, "alpha", 1.0) }
            }
            "data" => {
                let (name, _) = self.name("a dataset name")?;
                let variables = self.over()?;
                let records = self.list('{', '}', |p| {
                    if p.peek().tok == Tok::Open('(') {
                        p.list('(', ')', Parser::label)
                    } else {
                        Ok(vec![p.label()?])
                    }
                })?;
                Item::Data { name, variables, records }
            }
            "factor" => {
                let (name, _) = self.name("a factor name")?;
                let scope = self.over()?;
                self.expect(Tok::Equals, "`=`")?;
                let values = self.list('[', ']', Parser::number)?;
                let s = self.numeric_settings(&["theta"])?;
                Item::Factor { name, scope, values, theta: get(&s, "theta", 1.0) }
            }
            "values" => {
                let (name, _) = self.name("a table name")?;
                let scope = self.over()?;
                self.expect(Tok::Equals, "`=`")?;
                let values = self.list('[', ']', Parser::number)?;
                Item::Values { name, scope, values }
            }
            "query" => {
                let (kind, _) = self.name("a query kind")?;
                let params = self.settings()?.into_iter().map(|(k, _, v)| (k, v)).collect();
                Item::Query { kind, params }
            }
            _ => return self.error(&start, "unknown declaration keyword"),
        };
        let end = self.next();
        if end.tok != Tok::Newline {
            return self.error(&end, "expected end of line");
        }
        Ok(Some(Declaration { span, item }))
    }
}

fn get(settings: &[(String, f64)], key: &str, default: f64) -> f64 {
    settings.iter().find(|(k, _)| k == key).map_or(default, |(_, v)| *v)
}

pub(super) fn declarations(text: &str) -> Result<Vec<Declaration>, DslError> {
    let mut parser = Parser { tokens: lex(text)?, pos: 0 };
    let mut out = Vec::new();
    while let Some(d) = parser.declaration()? {
        out.push(d);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arrow_and_negative_numbers() {
        let toks = lex("cpd h : X -> Y = [-1e-3, 2]").unwrap();
        assert!(toks.iter().any(|t| t.tok == Tok::Arrow));
        assert!(toks.iter().any(|t| t.tok == Tok::Number("-1e-3".into())));
    }

    #[test]
    fn newlines_inside_brackets_are_ignored() {
        let toks = lex("[[1,\n 2]]\n").unwrap();
        assert_eq!(toks.iter().filter(|t| t.tok == Tok::Newline).count(), 2);
    }

    #[test]
    fn located_syntax_error() {
        let err = declarations("var X {x0, x1}\nedge p beta=?\n").unwrap_err();
        assert_eq!((err.kind, err.line, err.column, err.token.as_str()), (DslErrorKind::Syntax, 2, 13, "?"));
    }
}

//! Recursive-descent parser for the `CREATE TABLE` subset: column
//! definitions with an optional `FTYPEk(args)` modifier, an optional base
//! type, `DEFAULT UNKNOWN|UNDEFINED|NULL`, `NOT NULL`, and a trailing
//! `PRIMARY KEY` clause.

use thiserror::Error;

use super::{AttributeDef, BaseType, FuzzyClass, LabelDefinitions, SchemaCatalog, SpecialValue};

/// Syntax or structural rejection, always carrying the 1-based position
/// where the offending token starts.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}, column {col}: {message}")]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Ident(String),
    Number(f64),
    LParen,
    RParen,
    Comma,
    Semicolon,
    Eof,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    line: usize,
    col: usize,
}

impl Token {
    fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Ident(s) => s.clone(),
            TokenKind::Number(n) => n.to_string(),
            TokenKind::LParen => "(".into(),
            TokenKind::RParen => ")".into(),
            TokenKind::Comma => ",".into(),
            TokenKind::Semicolon => ";".into(),
            TokenKind::Eof => "end of input".into(),
        }
    }
}

fn tokenize(text: &str) -> Result<Vec<Token>, ParseError> {
    let mut tokens = Vec::new();
    let mut line = 1usize;
    let mut col = 1usize;
    let mut chars = text.chars().peekable();

    while let Some(&ch) = chars.peek() {
        let (tok_line, tok_col) = (line, col);
        let bump = |c: char, line: &mut usize, col: &mut usize| {
            if c == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
        };
        match ch {
            c if c.is_whitespace() => {
                chars.next();
                bump(c, &mut line, &mut col);
            }
            '(' | ')' | ',' | ';' => {
                chars.next();
                bump(ch, &mut line, &mut col);
                let kind = match ch {
                    '(' => TokenKind::LParen,
                    ')' => TokenKind::RParen,
                    ',' => TokenKind::Comma,
                    _ => TokenKind::Semicolon,
                };
                tokens.push(Token {
                    kind,
                    line: tok_line,
                    col: tok_col,
                });
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let mut ident = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '#' {
                        ident.push(c.to_ascii_uppercase());
                        chars.next();
                        bump(c, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(ident),
                    line: tok_line,
                    col: tok_col,
                });
            }
            c if c.is_ascii_digit() || c == '-' || c == '.' => {
                let mut lit = String::new();
                while let Some(&c) = chars.peek() {
                    if c.is_ascii_digit() || c == '.' || c == '-' {
                        lit.push(c);
                        chars.next();
                        bump(c, &mut line, &mut col);
                    } else {
                        break;
                    }
                }
                let value: f64 = lit.parse().map_err(|_| ParseError {
                    message: format!("invalid number literal {lit}"),
                    line: tok_line,
                    col: tok_col,
                })?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    line: tok_line,
                    col: tok_col,
                });
            }
            other => {
                return Err(ParseError {
                    message: format!("unexpected character {other:?}"),
                    line: tok_line,
                    col: tok_col,
                });
            }
        }
    }
    tokens.push(Token {
        kind: TokenKind::Eof,
        line,
        col,
    });
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn next(&mut self) -> Token {
        let tok = self.tokens[self.pos.min(self.tokens.len() - 1)].clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        tok
    }

    fn error_at(&self, tok: &Token, message: impl Into<String>) -> ParseError {
        ParseError {
            message: message.into(),
            line: tok.line,
            col: tok.col,
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        let tok = self.next();
        match &tok.kind {
            TokenKind::Ident(s) if s == kw => Ok(()),
            _ => Err(self.error_at(&tok, format!("expected {kw}, found {}", tok.describe()))),
        }
    }

    fn expect_ident(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        let tok = self.next();
        match &tok.kind {
            TokenKind::Ident(s) => Ok((s.clone(), tok.clone())),
            _ => Err(self.error_at(&tok, format!("expected {what}, found {}", tok.describe()))),
        }
    }

    fn expect_punct(&mut self, kind: TokenKind, what: &str) -> Result<(), ParseError> {
        let tok = self.next();
        if tok.kind == kind {
            Ok(())
        } else {
            Err(self.error_at(&tok, format!("expected {what}, found {}", tok.describe())))
        }
    }

    fn peek_ident(&self) -> Option<&str> {
        match &self.peek().kind {
            TokenKind::Ident(s) => Some(s.as_str()),
            _ => None,
        }
    }

    /// Comma-separated numbers inside parentheses.
    fn parse_number_args(&mut self) -> Result<Vec<f64>, ParseError> {
        self.expect_punct(TokenKind::LParen, "(")?;
        let mut args = Vec::new();
        loop {
            let tok = self.next();
            match tok.kind {
                TokenKind::Number(n) => args.push(n),
                _ => {
                    return Err(
                        self.error_at(&tok, format!("expected number, found {}", tok.describe()))
                    )
                }
            }
            let tok = self.next();
            match tok.kind {
                TokenKind::Comma => continue,
                TokenKind::RParen => break,
                _ => {
                    return Err(
                        self.error_at(&tok, format!("expected , or ), found {}", tok.describe()))
                    )
                }
            }
        }
        Ok(args)
    }

    fn parse_fuzzy_class(&mut self, kw: &str, tok: &Token) -> Result<FuzzyClass, ParseError> {
        let args = self.parse_number_args()?;
        let two = |args: &[f64]| -> Result<(f64, f64), ParseError> {
            if args.len() != 2 {
                Err(self.error_at(
                    tok,
                    format!("{kw} takes 2 arguments (margin, threshold), found {}", args.len()),
                ))
            } else {
                Ok((args[0], args[1]))
            }
        };
        let one = |args: &[f64]| -> Result<u32, ParseError> {
            if args.len() != 1 {
                Err(self.error_at(
                    tok,
                    format!("{kw} takes 1 argument (label capacity), found {}", args.len()),
                ))
            } else if args[0].fract() != 0.0 || args[0] < 0.0 {
                Err(self.error_at(tok, format!("{kw} argument must be a non-negative integer")))
            } else {
                Ok(args[0] as u32)
            }
        };
        match kw {
            "FTYPE1" => {
                let (margin, threshold) = two(&args)?;
                Ok(FuzzyClass::Type1 { margin, threshold })
            }
            "FTYPE2" => {
                let (margin, threshold) = two(&args)?;
                Ok(FuzzyClass::Type2 { margin, threshold })
            }
            "FTYPE3" => Ok(FuzzyClass::Type3 { n_labels: one(&args)? }),
            "FTYPE4" => Ok(FuzzyClass::Type4 { n_labels: one(&args)? }),
            _ => unreachable!("caller checked the keyword"),
        }
    }

    fn parse_column(&mut self, position: usize) -> Result<AttributeDef, ParseError> {
        let (name, _) = self.expect_ident("column name")?;

        let class = match self.peek_ident() {
            Some(kw @ ("FTYPE1" | "FTYPE2" | "FTYPE3" | "FTYPE4")) => {
                let kw = kw.to_string();
                let tok = self.next();
                self.parse_fuzzy_class(&kw, &tok)?
            }
            _ => FuzzyClass::Crisp,
        };

        let base_type = match self.peek_ident() {
            Some("NOT" | "DEFAULT" | "PRIMARY") | None => None,
            Some(_) => {
                let (type_name, tok) = self.expect_ident("base type")?;
                let params = if self.peek().kind == TokenKind::LParen {
                    let args = self.parse_number_args()?;
                    let mut params = Vec::with_capacity(args.len());
                    for a in args {
                        if a.fract() != 0.0 || a < 0.0 {
                            return Err(self.error_at(
                                &tok,
                                format!("base type parameter must be a non-negative integer, got {a}"),
                            ));
                        }
                        params.push(a as u64);
                    }
                    params
                } else {
                    Vec::new()
                };
                Some(BaseType {
                    name: type_name,
                    params,
                })
            }
        };

        let mut nullable = true;
        let mut default_special = None;
        loop {
            match self.peek_ident() {
                Some("NOT") => {
                    let tok = self.next();
                    self.expect_keyword("NULL")?;
                    if !nullable {
                        return Err(self.error_at(&tok, "duplicate NOT NULL"));
                    }
                    nullable = false;
                }
                Some("DEFAULT") => {
                    let tok = self.next();
                    if default_special.is_some() {
                        return Err(self.error_at(&tok, "duplicate DEFAULT clause"));
                    }
                    let (kw, kw_tok) = self.expect_ident("UNKNOWN, UNDEFINED or NULL")?;
                    default_special = Some(match kw.as_str() {
                        "UNKNOWN" => SpecialValue::Unknown,
                        "UNDEFINED" => SpecialValue::Undefined,
                        "NULL" => SpecialValue::Null,
                        other => {
                            return Err(self.error_at(
                                &kw_tok,
                                format!("expected UNKNOWN, UNDEFINED or NULL, found {other}"),
                            ))
                        }
                    });
                }
                _ => break,
            }
        }

        Ok(AttributeDef {
            name,
            position,
            class,
            base_type,
            nullable,
            default_special,
            labels: LabelDefinitions::None,
        })
    }

    fn parse_primary_key(&mut self) -> Result<Vec<(String, Token)>, ParseError> {
        self.expect_keyword("PRIMARY")?;
        self.expect_keyword("KEY")?;
        self.expect_punct(TokenKind::LParen, "(")?;
        let mut cols = vec![self.expect_ident("primary-key column")?];
        loop {
            let tok = self.next();
            match tok.kind {
                TokenKind::Comma => cols.push(self.expect_ident("primary-key column")?),
                TokenKind::RParen => break,
                _ => {
                    return Err(
                        self.error_at(&tok, format!("expected , or ), found {}", tok.describe()))
                    )
                }
            }
        }
        Ok(cols)
    }

    fn parse_create_table(&mut self) -> Result<SchemaCatalog, ParseError> {
        self.expect_keyword("CREATE")?;
        self.expect_keyword("TABLE")?;
        let (table_name, _) = self.expect_ident("table name")?;
        self.expect_punct(TokenKind::LParen, "(")?;

        let mut attributes: Vec<AttributeDef> = Vec::new();
        let mut primary_key = None;
        loop {
            if self.peek_ident() == Some("PRIMARY") {
                let pk_tok = self.peek().clone();
                if primary_key.is_some() {
                    return Err(self.error_at(&pk_tok, "duplicate PRIMARY KEY clause"));
                }
                primary_key = Some(self.parse_primary_key()?);
            } else {
                if primary_key.is_some() {
                    let tok = self.peek().clone();
                    return Err(self.error_at(&tok, "PRIMARY KEY must be the last clause"));
                }
                let name_tok = self.peek().clone();
                let column = self.parse_column(attributes.len() + 1)?;
                if attributes.iter().any(|a| a.name == column.name) {
                    return Err(self.error_at(
                        &name_tok,
                        format!("duplicate column name {}", column.name),
                    ));
                }
                attributes.push(column);
            }
            let tok = self.next();
            match tok.kind {
                TokenKind::Comma => continue,
                TokenKind::RParen => break,
                _ => {
                    return Err(
                        self.error_at(&tok, format!("expected , or ), found {}", tok.describe()))
                    )
                }
            }
        }

        if self.peek().kind == TokenKind::Semicolon {
            self.next();
        }
        let tok = self.next();
        if tok.kind != TokenKind::Eof {
            return Err(self.error_at(
                &tok,
                format!("expected end of input after statement, found {}", tok.describe()),
            ));
        }

        let pk_tok = self.tokens[self.tokens.len() - 1].clone();
        let primary_key = primary_key
            .ok_or_else(|| self.error_at(&pk_tok, "missing PRIMARY KEY clause"))?;
        let mut pk_names = Vec::with_capacity(primary_key.len());
        for (name, tok) in primary_key {
            if !attributes.iter().any(|a| a.name == name) {
                return Err(self.error_at(
                    &tok,
                    format!("PRIMARY KEY references unknown column {name}"),
                ));
            }
            pk_names.push(name);
        }
        if attributes.is_empty() {
            return Err(self.error_at(&pk_tok, "table has no columns"));
        }

        Ok(SchemaCatalog {
            table_name,
            attributes,
            primary_key: pk_names,
        })
    }
}

/// Parses a single `CREATE TABLE` statement into a catalog. Attribute order
/// matches declaration order; columns without an FTYPE marker are crisp.
pub fn parse_fsql_schema(text: &str) -> Result<SchemaCatalog, ParseError> {
    let tokens = tokenize(text)?;
    Parser { tokens, pos: 0 }.parse_create_table()
}

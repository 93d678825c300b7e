//! Concrete syntax.
//!
//! ```text
//! formula := 'ex2' vars ':' formula | 'all2' vars ':' formula | iff
//! iff     := imp ('<=>' imp)*
//! imp     := or ('=>' imp)?
//! or      := and ('|' and)*
//! and     := neg ('&' neg)*
//! neg     := '~' neg | '(' formula ')' | atom
//! atom    := VAR 'sub' VAR | VAR '=' 'S1' '(' VAR ')' | VAR '=' 'S2' '(' VAR ')'
//!          | 'sing' '(' VAR ')' | VAR '=' '{' POS '}' | VAR '=' VAR
//!          | VAR '~=' VAR | VAR '=' 'empty'
//! ```
//!
//! Quantifiers extend as far to the right as possible; `#` starts a line
//! comment. Free variables with the same name denote the same variable, and
//! every quantifier introduces fresh variables, so the result is renamed
//! apart.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::formula::{desugar, Formula, Var, VarSet};
use crate::trees::Position;

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Ex2,
    All2,
    Sub,
    Sing,
    Empty,
    S1,
    S2,
    Colon,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Eq,
    Neq,
    Not,
    And,
    Or,
    Implies,
    Iff,
    Eof,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (l, cl) = (line, col);
        let advance = |n: usize, i: &mut usize, col: &mut usize| {
            *i += n;
            *col += n;
        };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            advance(1, &mut i, &mut col);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 3)].iter().collect();
        let (tok, len) = if rest.starts_with("<=>") {
            (Tok::Iff, 3)
        } else if rest.starts_with("=>") {
            (Tok::Implies, 2)
        } else if rest.starts_with("~=") {
            (Tok::Neq, 2)
        } else {
            match c {
                ':' => (Tok::Colon, 1),
                ',' => (Tok::Comma, 1),
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                '=' => (Tok::Eq, 1),
                '~' => (Tok::Not, 1),
                '&' => (Tok::And, 1),
                '|' => (Tok::Or, 1),
                c if c.is_ascii_alphabetic() => {
                    let mut j = i;
                    while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_') {
                        j += 1;
                    }
                    let word: String = chars[i..j].iter().collect();
                    let tok = match word.as_str() {
                        "ex2" => Tok::Ex2,
                        "all2" => Tok::All2,
                        "sub" => Tok::Sub,
                        "sing" => Tok::Sing,
                        "empty" => Tok::Empty,
                        "S1" => Tok::S1,
                        "S2" => Tok::S2,
                        _ => Tok::Ident(word),
                    };
                    (tok, j - i)
                }
                other => {
                    return Err(Error::Syntax {
                        line: l,
                        column: cl,
                        message: format!("unexpected character {other:?}"),
                    })
                }
            }
        };
        out.push(Spanned { tok, line: l, column: cl });
        advance(len, &mut i, &mut col);
    }
    out.push(Spanned { tok: Tok::Eof, line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    scopes: Vec<HashMap<String, Var>>,
    free: HashMap<String, Var>,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        let s = &self.toks[self.pos];
        Err(Error::Syntax { line: s.line, column: s.column, message: message.into() })
    }

    fn expect(&mut self, tok: Tok) -> Result<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(format!("expected {tok:?}, found {:?}", self.peek()))
        }
    }

    fn var_name(&mut self) -> Result<String> {
        match self.bump() {
            Tok::Ident(s) => Ok(s),
            other => {
                self.pos -= 1;
                self.error(format!("expected a variable, found {other:?}"))
            }
        }
    }

    fn resolve(&mut self, name: &str) -> Var {
        for scope in self.scopes.iter().rev() {
            if let Some(v) = scope.get(name) {
                return v.clone();
            }
        }
        self.free.entry(name.to_string()).or_insert_with(|| Var::fresh(name)).clone()
    }

    fn var(&mut self) -> Result<Var> {
        let name = self.var_name()?;
        Ok(self.resolve(&name))
    }

    fn formula(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Ex2 | Tok::All2 => {
                let universal = self.bump() == Tok::All2;
                let mut scope = HashMap::new();
                let mut vars = VarSet::new();
                loop {
                    let name = self.var_name()?;
                    if scope.contains_key(&name) {
                        return self.error(format!("variable {name} bound twice"));
                    }
                    let v = Var::fresh(&name);
                    vars.insert(v.clone());
                    scope.insert(name, v);
                    if *self.peek() == Tok::Comma {
                        self.bump();
                    } else {
                        break;
                    }
                }
                self.expect(Tok::Colon)?;
                self.scopes.push(scope);
                let body = self.formula();
                self.scopes.pop();
                let body = body?;
                Ok(if universal { Formula::forall(vars, body) } else { Formula::exists(vars, body) })
            }
            _ => self.iff(),
        }
    }

    // A quantifier may appear as the last operand of any binary operator.
    fn operand(&mut self, next: fn(&mut Parser) -> Result<Formula>) -> Result<Formula> {
        match self.peek() {
            Tok::Ex2 | Tok::All2 => self.formula(),
            _ => next(self),
        }
    }

    fn iff(&mut self) -> Result<Formula> {
        let mut f = self.imp()?;
        while *self.peek() == Tok::Iff {
            self.bump();
            let g = self.operand(Parser::imp)?;
            f = Formula::iff(f, g);
        }
        Ok(f)
    }

    fn imp(&mut self) -> Result<Formula> {
        let f = self.or()?;
        if *self.peek() == Tok::Implies {
            self.bump();
            let g = self.operand(Parser::imp)?;
            return Ok(Formula::implies(f, g));
        }
        Ok(f)
    }

    fn or(&mut self) -> Result<Formula> {
        let mut f = self.and()?;
        while *self.peek() == Tok::Or {
            self.bump();
            let g = self.operand(Parser::and)?;
            f = Formula::or(f, g);
        }
        Ok(f)
    }

    fn and(&mut self) -> Result<Formula> {
        let mut f = self.neg()?;
        while *self.peek() == Tok::And {
            self.bump();
            let g = self.operand(Parser::neg)?;
            f = Formula::and(f, g);
        }
        Ok(f)
    }

    fn neg(&mut self) -> Result<Formula> {
        match self.peek() {
            Tok::Not => {
                self.bump();
                let f = self.operand(Parser::neg)?;
                Ok(Formula::not(f))
            }
            Tok::LParen => {
                self.bump();
                let f = self.formula()?;
                self.expect(Tok::RParen)?;
                Ok(f)
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Formula> {
        if *self.peek() == Tok::Sing {
            self.bump();
            self.expect(Tok::LParen)?;
            let x = self.var()?;
            self.expect(Tok::RParen)?;
            return Ok(Formula::Sing(x));
        }
        let x = self.var()?;
        match self.bump() {
            Tok::Sub => Ok(Formula::Subseteq(x, self.var()?)),
            Tok::Neq => Ok(Formula::SetNeq(x, self.var()?)),
            Tok::Eq => match self.peek().clone() {
                Tok::S1 | Tok::S2 => {
                    let left = self.bump() == Tok::S1;
                    self.expect(Tok::LParen)?;
                    let y = self.var()?;
                    self.expect(Tok::RParen)?;
                    Ok(if left { Formula::SuccLeft(x, y) } else { Formula::SuccRight(x, y) })
                }
                Tok::Empty => {
                    self.bump();
                    Ok(Formula::IsEmpty(x))
                }
                Tok::LBrace => {
                    self.bump();
                    let word = match self.peek() {
                        Tok::Ident(w) => w.clone(),
                        _ => return self.error("expected a position"),
                    };
                    let pos: Position = match word.parse() {
                        Ok(p) => p,
                        Err(_) => return self.error(format!("invalid position {word:?}")),
                    };
                    self.bump();
                    self.expect(Tok::RBrace)?;
                    Ok(if pos.is_root() { Formula::EqEpsilon(x) } else { Formula::EqPos(x, pos) })
                }
                Tok::Ident(_) => Ok(Formula::SetEq(x, self.var()?)),
                other => self.error(format!("unexpected {other:?} after '='")),
            },
            other => {
                self.pos -= 1;
                self.error(format!("expected 'sub', '=' or '~=', found {other:?}"))
            }
        }
    }
}

/// Parses without desugaring; sugar constructors are preserved.
pub fn parse_surface(text: &str) -> Result<Formula> {
    parse_surface_with(text, &HashMap::new())
}

/// Like [`parse_surface`], resolving free variable names through `free`
/// first so that several formulae can share variables.
pub fn parse_surface_with(text: &str, free: &HashMap<String, Var>) -> Result<Formula> {
    let mut p = Parser { toks: lex(text)?, pos: 0, scopes: Vec::new(), free: free.clone() };
    if *p.peek() == Tok::Eof {
        return p.error("empty formula");
    }
    let f = p.formula()?;
    if *p.peek() != Tok::Eof {
        return p.error(format!("unexpected {:?}", p.peek()));
    }
    Ok(f)
}

/// Parses and desugars a formula.
pub fn parse(text: &str) -> Result<Formula> {
    Ok(desugar(&parse_surface(text)?))
}

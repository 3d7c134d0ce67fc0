use crate::rational;

use super::{BinOp, Branch, Cmp, Func, Guard, Node, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("exponent at byte {pos} must be an integer literal")]
    NonIntegerExponent { pos: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(String),
    Ident(String),
    Op(&'static str),
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

impl<'a> Lexer<'a> {
    fn run(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, toks: Vec::new() };
        let bytes = src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            if c.is_ascii_digit() || c == '.' {
                while i < bytes.len() && ((bytes[i] as char).is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                lx.toks.push((Tok::Num(src[start..i].to_string()), start));
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                while i < bytes.len() && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                lx.toks.push((Tok::Ident(src[start..i].to_string()), start));
                continue;
            }
            let two = lx.src.get(i..i + 2).unwrap_or("");
            let op: &'static str = match two {
                "<=" => "<=",
                ">=" => ">=",
                _ => match c {
                    '+' => "+",
                    '-' => "-",
                    '*' => "*",
                    '/' => "/",
                    '^' => "^",
                    '(' => "(",
                    ')' => ")",
                    ',' => ",",
                    ';' => ";",
                    ':' => ":",
                    '<' => "<",
                    '>' => ">",
                    _ => {
                        return Err(ParseError::Syntax {
                            pos: start,
                            msg: format!("unexpected character `{c}`"),
                        })
                    }
                },
            };
            i += op.len();
            lx.toks.push((Tok::Op(op), start));
        }
        lx.toks.push((Tok::End, src.len()));
        Ok(lx.toks)
    }
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    at: usize,
}

pub(super) fn parse(src: &str) -> Result<Node, ParseError> {
    let toks = Lexer::run(src)?;
    let mut p = Parser { toks, at: 0 };
    if p.peek() == &Tok::End {
        return Err(ParseError::Syntax { pos: 0, msg: "empty expression".into() });
    }
    let node = p.expr()?;
    match p.peek() {
        Tok::End => Ok(node),
        _ => Err(p.unexpected("end of expression")),
    }
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].0.clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn is_op(&self, op: &str) -> bool {
        matches!(self.peek(), Tok::Op(o) if *o == op)
    }

    fn eat(&mut self, op: &str) -> bool {
        if self.is_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: &str) -> Result<(), ParseError> {
        if self.eat(op) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{op}`")))
        }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        let found = match self.peek() {
            Tok::Num(n) => format!("number `{n}`"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(o) => format!("`{o}`"),
            Tok::End => "end of input".to_string(),
        };
        ParseError::Syntax {
            pos: self.pos(),
            msg: format!("expected {wanted}, found {found}"),
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat("+") {
                BinOp::Add
            } else if self.eat("-") {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat("*") {
                BinOp::Mul
            } else if self.eat("/") {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat("-") {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat("+") {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if !self.is_op("^") {
            return Ok(base);
        }
        let caret = self.pos();
        self.bump();
        let paren = self.eat("(");
        let neg = if self.eat("-") {
            true
        } else {
            self.eat("+");
            false
        };
        let n: i32 = match self.bump() {
            Tok::Num(text) => text
                .parse()
                .map_err(|_| ParseError::NonIntegerExponent { pos: caret })?,
            _ => return Err(ParseError::NonIntegerExponent { pos: caret }),
        };
        if paren && !self.eat(")") {
            return Err(ParseError::NonIntegerExponent { pos: caret });
        }
        Ok(Node::Pow(Box::new(base), if neg { -n } else { n }))
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(text) => {
                self.bump();
                rational::parse(&text).map(Node::Num).map_err(|_| ParseError::Syntax {
                    pos,
                    msg: format!("malformed number `{text}`"),
                })
            }
            Tok::Op("(") => {
                self.bump();
                let inner = self.expr()?;
                self.expect(")")?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.bump();
                if name == "piecewise" {
                    return self.piecewise();
                }
                if let Some(v) = Var::from_name(&name) {
                    return Ok(Node::Var(v));
                }
                let func = Func::from_name(&name).ok_or(ParseError::UnknownIdentifier {
                    pos,
                    name: name.clone(),
                })?;
                self.expect("(")?;
                let mut args = vec![self.expr()?];
                while self.eat(",") {
                    args.push(self.expr()?);
                }
                self.expect(")")?;
                let (lo, hi) = func.arity();
                if args.len() < lo || args.len() > hi {
                    return Err(ParseError::Syntax {
                        pos,
                        msg: format!("`{name}` takes {lo}..{hi} arguments, got {}", args.len()),
                    });
                }
                Ok(Node::Call(func, args))
            }
            _ => Err(self.unexpected("a number, variable, function or `(`")),
        }
    }

    fn piecewise(&mut self) -> Result<Node, ParseError> {
        self.expect("(")?;
        let mut branches = Vec::new();
        loop {
            if matches!(self.peek(), Tok::Ident(s) if s == "else") {
                self.bump();
                self.expect(":")?;
                let default = self.expr()?;
                self.expect(")")?;
                if branches.is_empty() {
                    return Err(ParseError::Syntax {
                        pos: self.pos(),
                        msg: "piecewise needs at least one guarded branch".into(),
                    });
                }
                return Ok(Node::Piecewise { branches, default: Box::new(default) });
            }
            let lhs = self.expr()?;
            let cmp = match self.peek() {
                Tok::Op("<") => Cmp::Lt,
                Tok::Op("<=") => Cmp::Le,
                Tok::Op(">") => Cmp::Gt,
                Tok::Op(">=") => Cmp::Ge,
                _ => return Err(self.unexpected("a comparison")),
            };
            self.bump();
            let bound_pos = self.pos();
            let bound_node = self.expr()?;
            let bound = super::Expression::from_node(bound_node)
                .constant_value()
                .ok_or(ParseError::Syntax {
                    pos: bound_pos,
                    msg: "guard bound must be a constant rational".into(),
                })?;
            self.expect(":")?;
            let body = self.expr()?;
            branches.push(Branch { guard: Guard { lhs, cmp, bound }, body });
            if !self.eat(";") {
                return Err(self.unexpected("`;` followed by another branch or `else`"));
            }
        }
    }
}

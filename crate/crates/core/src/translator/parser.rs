//! Recursive-descent parser for programs and standalone expressions.

use super::ast::{BinOp, CmpOp, Expr, Program, Stmt, StmtKind, Target};
use super::lexer::{tokenize, Tok, Token};
use crate::{Error, Result};

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

pub fn parse_program(src: &str) -> Result<Program> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, pos: 0 };
    let mut prog = Vec::new();
    while !p.at(&Tok::Eof) {
        prog.extend(p.statement()?);
    }
    if prog.is_empty() {
        return Err(Error::Parse { line: 1, col: 1, msg: "empty program".into() });
    }
    Ok(prog)
}

/// Parse a single expression, as used for events on the command line.
pub fn parse_expr(src: &str) -> Result<Expr> {
    let toks: Vec<Token> = tokenize(src)?
        .into_iter()
        .filter(|t| !matches!(t.tok, Tok::Newline | Tok::Indent | Tok::Dedent))
        .collect();
    let mut p = Parser { toks, pos: 0 };
    if p.at(&Tok::Eof) {
        return Err(Error::Parse { line: 1, col: 1, msg: "empty expression".into() });
    }
    let e = p.expr()?;
    if !p.at(&Tok::Eof) {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn at(&self, t: &Tok) -> bool {
        &self.peek().tok == t
    }

    fn at_op(&self, op: &str) -> bool {
        matches!(&self.peek().tok, Tok::Op(o) if *o == op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        matches!(&self.peek().tok, Tok::Name(n) if n == kw)
    }

    fn next(&mut self) -> Token {
        let t = self.peek().clone();
        if self.pos < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, msg: &str) -> Error {
        let t = self.peek();
        let found = match &t.tok {
            Tok::Name(n) => format!("{n:?}"),
            Tok::Num(x) => format!("{x}"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Op(o) => format!("{o:?}"),
            Tok::Newline => "end of line".into(),
            Tok::Indent => "indentation".into(),
            Tok::Dedent => "dedent".into(),
            Tok::Eof => "end of input".into(),
        };
        Error::Parse { line: t.line, col: t.col, msg: format!("{msg} (found {found})") }
    }

    fn expect_op(&mut self, op: &str) -> Result<()> {
        if self.at_op(op) {
            self.next();
            Ok(())
        } else {
            Err(self.error(&format!("expected {op:?}")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<()> {
        if self.at_kw(kw) {
            self.next();
            Ok(())
        } else {
            Err(self.error(&format!("expected {kw:?}")))
        }
    }

    fn name(&mut self) -> Result<String> {
        match self.peek().tok.clone() {
            Tok::Name(n) if !is_keyword(&n) => {
                self.next();
                Ok(n)
            }
            _ => Err(self.error("expected a name")),
        }
    }

    fn statement(&mut self) -> Result<Vec<Stmt>> {
        let line = self.peek().line;
        if self.at_kw("if") {
            return Ok(vec![self.if_stmt()?]);
        }
        if self.at_kw("for") {
            self.next();
            let var = self.name()?;
            self.expect_kw("in")?;
            let iter = self.expr()?;
            self.expect_op(":")?;
            let body = self.block()?;
            return Ok(vec![Stmt { kind: StmtKind::For { var, iter, body }, line }]);
        }
        if self.at_kw("switch") {
            self.next();
            let subject = self.arith()?;
            self.expect_kw("cases")?;
            self.expect_op("(")?;
            let binder = self.name()?;
            self.expect_kw("in")?;
            let values = self.expr()?;
            self.expect_op(")")?;
            self.expect_op(":")?;
            let body = self.block()?;
            return Ok(vec![Stmt { kind: StmtKind::Switch { subject, binder, values, body }, line }]);
        }
        let out = self.simple_line()?;
        Ok(out)
    }

    /// Simple statements separated by `;`, ending the line.
    fn simple_line(&mut self) -> Result<Vec<Stmt>> {
        let mut out = vec![self.simple()?];
        while self.at_op(";") {
            self.next();
            if self.at(&Tok::Newline) {
                break;
            }
            out.push(self.simple()?);
        }
        if self.at(&Tok::Newline) {
            self.next();
        } else if !self.at(&Tok::Eof) && !self.at(&Tok::Dedent) {
            return Err(self.error("expected end of statement"));
        }
        Ok(out)
    }

    fn simple(&mut self) -> Result<Stmt> {
        let line = self.peek().line;
        if self.at_kw("condition") {
            self.next();
            return Ok(Stmt { kind: StmtKind::Condition(self.expr()?), line });
        }
        if self.at_kw("constrain") {
            self.next();
            return Ok(Stmt { kind: StmtKind::Constrain(self.expr()?), line });
        }
        if self.at_kw("pass") {
            self.next();
            return Ok(Stmt { kind: StmtKind::Pass, line });
        }
        let name = self.name()?;
        let index = if self.at_op("[") {
            self.next();
            let e = self.expr()?;
            self.expect_op("]")?;
            Some(e)
        } else {
            None
        };
        let target = Target { name, index };
        if self.at_op("~") {
            self.next();
            Ok(Stmt { kind: StmtKind::Sample(target, self.expr()?), line })
        } else if self.at_op("=") {
            self.next();
            Ok(Stmt { kind: StmtKind::Assign(target, self.expr()?), line })
        } else {
            Err(self.error("expected '~' or '='"))
        }
    }

    fn block(&mut self) -> Result<Vec<Stmt>> {
        if self.at(&Tok::Newline) {
            self.next();
            if !self.at(&Tok::Indent) {
                return Err(self.error("expected an indented block"));
            }
            self.next();
            let mut body = Vec::new();
            while !self.at(&Tok::Dedent) && !self.at(&Tok::Eof) {
                body.extend(self.statement()?);
            }
            if self.at(&Tok::Dedent) {
                self.next();
            }
            Ok(body)
        } else {
            self.simple_line()
        }
    }

    fn if_stmt(&mut self) -> Result<Stmt> {
        let line = self.peek().line;
        self.expect_kw("if")?;
        let mut branches = Vec::new();
        let test = self.expr()?;
        self.expect_op(":")?;
        branches.push((test, self.block()?));
        let mut orelse = None;
        loop {
            if self.at_kw("elif") {
                self.next();
                let test = self.expr()?;
                self.expect_op(":")?;
                branches.push((test, self.block()?));
            } else if self.at_kw("else") {
                self.next();
                self.expect_op(":")?;
                orelse = Some(self.block()?);
                break;
            } else {
                break;
            }
        }
        Ok(Stmt { kind: StmtKind::If { branches, orelse }, line })
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut xs = vec![self.and_expr()?];
        while self.at_kw("or") {
            self.next();
            xs.push(self.and_expr()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { Expr::Or(xs) })
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut xs = vec![self.not_expr()?];
        while self.at_kw("and") {
            self.next();
            xs.push(self.not_expr()?);
        }
        Ok(if xs.len() == 1 { xs.pop().unwrap() } else { Expr::And(xs) })
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.at_kw("not") {
            self.next();
            return Ok(Expr::Not(Box::new(self.not_expr()?)));
        }
        self.comparison()
    }

    fn cmp_op(&mut self) -> Option<CmpOp> {
        let op = match &self.peek().tok {
            Tok::Op("<") => CmpOp::Lt,
            Tok::Op("<=") => CmpOp::Le,
            Tok::Op(">") => CmpOp::Gt,
            Tok::Op(">=") => CmpOp::Ge,
            Tok::Op("==") => CmpOp::Eq,
            Tok::Op("!=") => CmpOp::Ne,
            Tok::Name(n) if n == "in" => CmpOp::In,
            Tok::Name(n) if n == "not" => {
                if matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Name(m)) if m == "in") {
                    self.next();
                    CmpOp::NotIn
                } else {
                    return None;
                }
            }
            _ => return None,
        };
        self.next();
        Some(op)
    }

    fn comparison(&mut self) -> Result<Expr> {
        let first = self.arith()?;
        let mut rest = Vec::new();
        while let Some(op) = self.cmp_op() {
            rest.push((op, self.arith()?));
        }
        Ok(if rest.is_empty() { first } else { Expr::Compare(Box::new(first), rest) })
    }

    fn arith(&mut self) -> Result<Expr> {
        let mut e = self.term()?;
        loop {
            let op = if self.at_op("+") {
                BinOp::Add
            } else if self.at_op("-") {
                BinOp::Sub
            } else {
                return Ok(e);
            };
            self.next();
            e = Expr::Binary(op, Box::new(e), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut e = self.factor()?;
        loop {
            let op = if self.at_op("*") {
                BinOp::Mul
            } else if self.at_op("/") {
                BinOp::Div
            } else {
                return Ok(e);
            };
            self.next();
            e = Expr::Binary(op, Box::new(e), Box::new(self.factor()?));
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.at_op("-") {
            self.next();
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if self.at_op("+") {
            self.next();
            return self.factor();
        }
        let base = self.primary()?;
        if self.at_op("**") {
            self.next();
            let exp = self.factor()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr> {
        let mut e = self.atom()?;
        while self.at_op("[") {
            self.next();
            let i = self.expr()?;
            self.expect_op("]")?;
            e = Expr::Index(Box::new(e), Box::new(i));
        }
        Ok(e)
    }

    fn atom(&mut self) -> Result<Expr> {
        let t = self.peek().clone();
        match t.tok {
            Tok::Num(x) => {
                self.next();
                Ok(Expr::Num(x))
            }
            Tok::Str(s) => {
                self.next();
                Ok(Expr::Str(s))
            }
            Tok::Name(n) if n == "True" || n == "False" => {
                self.next();
                Ok(Expr::Bool(n == "True"))
            }
            Tok::Name(n) if !is_keyword(&n) => {
                self.next();
                if self.at_op("(") {
                    self.next();
                    let (args, kwargs) = self.call_args()?;
                    return Ok(Expr::Call { func: n, args, kwargs });
                }
                Ok(Expr::Name(n))
            }
            Tok::Op("(") => {
                self.next();
                let e = self.expr()?;
                self.expect_op(")")?;
                Ok(e)
            }
            Tok::Op("[") => {
                self.next();
                let mut xs = Vec::new();
                while !self.at_op("]") {
                    xs.push(self.expr()?);
                    if !self.at_op("]") {
                        self.expect_op(",")?;
                    }
                }
                self.next();
                Ok(Expr::List(xs))
            }
            Tok::Op("{") => {
                self.next();
                let mut kv = Vec::new();
                let mut set = Vec::new();
                while !self.at_op("}") {
                    let k = self.expr()?;
                    if self.at_op(":") {
                        self.next();
                        kv.push((k, self.expr()?));
                    } else {
                        set.push(k);
                    }
                    if !self.at_op("}") {
                        self.expect_op(",")?;
                    }
                }
                self.next();
                if !set.is_empty() && !kv.is_empty() {
                    return Err(Error::Parse { line: t.line, col: t.col, msg: "mixed set and dict literal".into() });
                }
                Ok(if kv.is_empty() && !set.is_empty() { Expr::List(set) } else { Expr::Dict(kv) })
            }
            _ => Err(self.error("expected an expression")),
        }
    }

    fn call_args(&mut self) -> Result<(Vec<Expr>, Vec<(String, Expr)>)> {
        let mut args = Vec::new();
        let mut kwargs = Vec::new();
        while !self.at_op(")") {
            let is_kw = matches!(&self.peek().tok, Tok::Name(_))
                && matches!(self.toks.get(self.pos + 1).map(|t| &t.tok), Some(Tok::Op("=")));
            if is_kw {
                let k = match self.next().tok {
                    Tok::Name(n) => n,
                    _ => unreachable!(),
                };
                self.next();
                kwargs.push((k, self.expr()?));
            } else {
                if !kwargs.is_empty() {
                    return Err(self.error("positional argument after keyword argument"));
                }
                args.push(self.expr()?);
            }
            if !self.at_op(")") {
                self.expect_op(",")?;
            }
        }
        self.next();
        Ok((args, kwargs))
    }
}

fn is_keyword(n: &str) -> bool {
    matches!(
        n,
        "if" | "elif" | "else" | "for" | "in" | "switch" | "cases" | "condition" | "constrain" | "and" | "or" | "not"
            | "pass"
    )
}

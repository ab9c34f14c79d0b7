//! Syntax tree of the source language.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    In,
    NotIn,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Str(String),
    Bool(bool),
    Name(String),
    Index(Box<Expr>, Box<Expr>),
    List(Vec<Expr>),
    Dict(Vec<(Expr, Expr)>),
    Call { func: String, args: Vec<Expr>, kwargs: Vec<(String, Expr)> },
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `a < b <= c` keeps every operand once.
    Compare(Box<Expr>, Vec<(CmpOp, Expr)>),
    Not(Box<Expr>),
    And(Vec<Expr>),
    Or(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Target {
    pub name: String,
    pub index: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum StmtKind {
    Sample(Target, Expr),
    Assign(Target, Expr),
    Condition(Expr),
    /// Equality constraints that may have probability zero.
    Constrain(Expr),
    If { branches: Vec<(Expr, Vec<Stmt>)>, orelse: Option<Vec<Stmt>> },
    For { var: String, iter: Expr, body: Vec<Stmt> },
    Switch { subject: Expr, binder: String, values: Expr, body: Vec<Stmt> },
    Pass,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub line: usize,
}

pub type Program = Vec<Stmt>;

impl Expr {
    /// Replace every subexpression equal to `from` with `to`.
    pub fn replace(&self, from: &Expr, to: &Expr) -> Expr {
        if self == from {
            return to.clone();
        }
        let r = |e: &Expr| e.replace(from, to);
        match self {
            Expr::Num(_) | Expr::Str(_) | Expr::Bool(_) | Expr::Name(_) => self.clone(),
            Expr::Index(a, b) => Expr::Index(Box::new(r(a)), Box::new(r(b))),
            Expr::List(xs) => Expr::List(xs.iter().map(r).collect()),
            Expr::Dict(kv) => Expr::Dict(kv.iter().map(|(k, v)| (r(k), r(v))).collect()),
            Expr::Call { func, args, kwargs } => Expr::Call {
                func: func.clone(),
                args: args.iter().map(r).collect(),
                kwargs: kwargs.iter().map(|(k, v)| (k.clone(), r(v))).collect(),
            },
            Expr::Neg(a) => Expr::Neg(Box::new(r(a))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(r(a)), Box::new(r(b))),
            Expr::Compare(a, rest) => Expr::Compare(Box::new(r(a)), rest.iter().map(|(op, e)| (*op, r(e))).collect()),
            Expr::Not(a) => Expr::Not(Box::new(r(a))),
            Expr::And(xs) => Expr::And(xs.iter().map(r).collect()),
            Expr::Or(xs) => Expr::Or(xs.iter().map(r).collect()),
        }
    }

    /// Subexpressions that are names or indexed names, outermost first.
    pub fn references(&self, out: &mut Vec<Expr>) {
        match self {
            Expr::Name(_) => out.push(self.clone()),
            Expr::Index(a, b) => {
                out.push(self.clone());
                a.references(out);
                b.references(out);
            }
            Expr::Num(_) | Expr::Str(_) | Expr::Bool(_) => {}
            Expr::List(xs) | Expr::And(xs) | Expr::Or(xs) => xs.iter().for_each(|x| x.references(out)),
            Expr::Dict(kv) => kv.iter().for_each(|(k, v)| {
                k.references(out);
                v.references(out);
            }),
            Expr::Call { args, kwargs, .. } => {
                args.iter().for_each(|x| x.references(out));
                kwargs.iter().for_each(|(_, v)| v.references(out));
            }
            Expr::Neg(a) | Expr::Not(a) => a.references(out),
            Expr::Binary(_, a, b) => {
                a.references(out);
                b.references(out);
            }
            Expr::Compare(a, rest) => {
                a.references(out);
                rest.iter().for_each(|(_, e)| e.references(out));
            }
        }
    }

    /// Replace free occurrences of `name` with `value`.
    pub fn substitute(&self, name: &str, value: &Expr) -> Expr {
        let s = |e: &Expr| e.substitute(name, value);
        match self {
            Expr::Name(n) if n == name => value.clone(),
            Expr::Num(_) | Expr::Str(_) | Expr::Bool(_) | Expr::Name(_) => self.clone(),
            Expr::Index(a, b) => Expr::Index(Box::new(s(a)), Box::new(s(b))),
            Expr::List(xs) => Expr::List(xs.iter().map(s).collect()),
            Expr::Dict(kv) => Expr::Dict(kv.iter().map(|(k, v)| (s(k), s(v))).collect()),
            Expr::Call { func, args, kwargs } => Expr::Call {
                func: func.clone(),
                args: args.iter().map(s).collect(),
                kwargs: kwargs.iter().map(|(k, v)| (k.clone(), s(v))).collect(),
            },
            Expr::Neg(a) => Expr::Neg(Box::new(s(a))),
            Expr::Binary(op, a, b) => Expr::Binary(*op, Box::new(s(a)), Box::new(s(b))),
            Expr::Compare(a, rest) => {
                Expr::Compare(Box::new(s(a)), rest.iter().map(|(op, e)| (*op, s(e))).collect())
            }
            Expr::Not(a) => Expr::Not(Box::new(s(a))),
            Expr::And(xs) => Expr::And(xs.iter().map(s).collect()),
            Expr::Or(xs) => Expr::Or(xs.iter().map(s).collect()),
        }
    }
}

impl Target {
    fn substitute(&self, name: &str, value: &Expr) -> Target {
        Target { name: self.name.clone(), index: self.index.as_ref().map(|e| e.substitute(name, value)) }
    }
}

/// Substitute in a block, stopping under binders that shadow `name`.
pub fn substitute_block(body: &[Stmt], name: &str, value: &Expr) -> Vec<Stmt> {
    body.iter()
        .map(|st| {
            let s = |e: &Expr| e.substitute(name, value);
            let kind = match &st.kind {
                StmtKind::Sample(t, e) => StmtKind::Sample(t.substitute(name, value), s(e)),
                StmtKind::Assign(t, e) => StmtKind::Assign(t.substitute(name, value), s(e)),
                StmtKind::Condition(e) => StmtKind::Condition(s(e)),
                StmtKind::Constrain(e) => StmtKind::Constrain(s(e)),
                StmtKind::If { branches, orelse } => StmtKind::If {
                    branches: branches.iter().map(|(t, b)| (s(t), substitute_block(b, name, value))).collect(),
                    orelse: orelse.as_ref().map(|b| substitute_block(b, name, value)),
                },
                StmtKind::For { var, iter, body } => StmtKind::For {
                    var: var.clone(),
                    iter: s(iter),
                    body: if var == name { body.clone() } else { substitute_block(body, name, value) },
                },
                StmtKind::Switch { subject, binder, values, body } => StmtKind::Switch {
                    subject: s(subject),
                    binder: binder.clone(),
                    values: s(values),
                    body: if binder == name { body.clone() } else { substitute_block(body, name, value) },
                },
                StmtKind::Pass => StmtKind::Pass,
            };
            Stmt { kind, line: st.line }
        })
        .collect()
}

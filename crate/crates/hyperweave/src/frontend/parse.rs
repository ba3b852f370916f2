//! Lexer and recursive-descent parser for the input language.

use std::collections::BTreeMap;

use super::ast::{Ast, BExpr, Expr, LValue, Node, Span, VarDecl};
use super::FrontendError;
use crate::logic::{CmpOp, Int};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(Int),
    Sym(&'static str),
    Eof,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    span: Span,
}

const SYMBOLS: &[&str] = &[
    ":=", "||", "&&", "==", "!=", "<=", ">=", ";", ",", "{", "}", "(", ")", "[", "]", "!", "+", "-",
    "*", "=", "<", ">",
];

fn lex(text: &str) -> Result<Vec<Token>, FrontendError> {
    let mut out = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    let advance = |i: &mut usize, line: &mut usize, col: &mut usize, c: char| {
        *i += 1;
        if c == '\n' {
            *line += 1;
            *col = 1;
        } else {
            *col += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let span = Span { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, c);
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'*') {
            advance(&mut i, &mut line, &mut col, '/');
            advance(&mut i, &mut line, &mut col, '*');
            loop {
                if i + 1 >= chars.len() {
                    return Err(FrontendError::syntax(span, "unterminated comment"));
                }
                if chars[i] == '*' && chars[i + 1] == '/' {
                    advance(&mut i, &mut line, &mut col, '*');
                    advance(&mut i, &mut line, &mut col, '/');
                    break;
                }
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let mut s = String::new();
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                s.push(chars[i]);
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            out.push(Token { tok: Tok::Ident(s), span });
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while i < chars.len() && chars[i].is_ascii_digit() {
                s.push(chars[i]);
                let ch = chars[i];
                advance(&mut i, &mut line, &mut col, ch);
            }
            let v = s
                .parse()
                .map_err(|_| FrontendError::syntax(span, "integer literal out of range"))?;
            out.push(Token { tok: Tok::Int(v), span });
            continue;
        }
        let uni = match c {
            '≠' => Some("!="),
            '≤' => Some("<="),
            '≥' => Some(">="),
            '−' => Some("-"),
            '∥' => Some("||"),
            _ => None,
        };
        if let Some(sym) = uni {
            advance(&mut i, &mut line, &mut col, c);
            out.push(Token { tok: Tok::Sym(sym), span });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        let Some(sym) = SYMBOLS.iter().find(|s| rest.starts_with(**s)) else {
            return Err(FrontendError::syntax(span, format!("unexpected character `{c}`")));
        };
        for ch in sym.chars() {
            advance(&mut i, &mut line, &mut col, ch);
        }
        out.push(Token { tok: Tok::Sym(sym), span });
    }
    out.push(Token { tok: Tok::Eof, span: Span { line, col } });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    vars: BTreeMap<String, VarDecl>,
    blocks: BTreeMap<String, Node>,
}

const KEYWORDS: &[&str] = &[
    "var", "assume", "assert", "while", "if", "else", "skip", "block", "copy", "as", "true", "false",
];

/// Parses a program. Variables may be declared anywhere at the top level;
/// every use must refer to a declared variable.
pub fn parse_program(text: &str) -> Result<Ast, FrontendError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, vars: BTreeMap::new(), blocks: BTreeMap::new() };
    let mut items = Vec::new();
    while p.peek() != &Tok::Eof {
        if p.eat_kw("var") {
            p.declarations()?;
        } else if p.eat_kw("block") {
            let (name, span) = p.ident()?;
            if p.blocks.contains_key(&name) {
                return Err(FrontendError::syntax(span, format!("block `{name}` defined twice")));
            }
            let body = p.braced()?;
            p.blocks.insert(name, body);
        } else {
            items.push(p.statement()?);
        }
    }
    let ast = Ast { vars: p.vars, body: Node::Seq(items) };
    ast.check_declared()?;
    Ok(ast)
}

/// Parses a single condition, such as a printed assertion.
pub fn parse_condition(text: &str) -> Result<BExpr, FrontendError> {
    let mut p = Parser { toks: lex(text)?, pos: 0, vars: BTreeMap::new(), blocks: BTreeMap::new() };
    let b = p.bexpr()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(b)
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn span(&self) -> Span {
        self.toks[self.pos].span
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Tok::Sym(x) if *x == s)
    }

    fn eat_sym(&mut self, s: &str) -> bool {
        if self.is_sym(s) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &str) -> Result<(), FrontendError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{s}`")))
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(x) if x == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), FrontendError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn unexpected(&self, wanted: &str) -> FrontendError {
        let found = match self.peek() {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Int(v) => format!("`{v}`"),
            Tok::Sym(s) => format!("`{s}`"),
            Tok::Eof => "end of input".to_string(),
        };
        FrontendError::syntax(self.span(), format!("expected {wanted}, found {found}"))
    }

    fn ident(&mut self) -> Result<(String, Span), FrontendError> {
        match self.peek().clone() {
            Tok::Ident(s) if !KEYWORDS.contains(&s.as_str()) => {
                let span = self.span();
                self.bump();
                Ok((s, span))
            }
            _ => Err(self.unexpected("an identifier")),
        }
    }

    fn int(&mut self) -> Result<Int, FrontendError> {
        match *self.peek() {
            Tok::Int(v) => {
                self.bump();
                Ok(v)
            }
            _ => Err(self.unexpected("an integer")),
        }
    }

    fn declarations(&mut self) -> Result<(), FrontendError> {
        loop {
            let (name, span) = self.ident()?;
            let size = if self.eat_sym("[") {
                let n = self.int()?;
                self.expect_sym("]")?;
                if n <= 0 || n > 1024 {
                    return Err(FrontendError::syntax(span, "array size must be in 1..=1024"));
                }
                Some(n as usize)
            } else {
                None
            };
            if self.vars.insert(name.clone(), VarDecl { size }).is_some() {
                return Err(FrontendError::syntax(span, format!("`{name}` declared twice")));
            }
            if !self.eat_sym(",") {
                break;
            }
        }
        self.expect_sym(";")
    }

    fn braced(&mut self) -> Result<Node, FrontendError> {
        self.expect_sym("{")?;
        let mut items = Vec::new();
        while !self.is_sym("}") {
            if self.peek() == &Tok::Eof {
                return Err(self.unexpected("`}`"));
            }
            items.push(self.statement()?);
        }
        self.bump();
        Ok(Node::Seq(items))
    }

    fn statement(&mut self) -> Result<Node, FrontendError> {
        let span = self.span();
        if self.is_sym("{") {
            let first = self.braced()?;
            if !self.is_sym("||") {
                return Ok(first);
            }
            let mut branches = vec![first];
            while self.eat_sym("||") {
                branches.push(self.braced()?);
            }
            return Ok(Node::Par(branches));
        }
        if self.eat_kw("while") {
            self.expect_sym("(")?;
            let g = self.bexpr()?;
            self.expect_sym(")")?;
            let body = self.braced()?;
            return Ok(Node::While(g, Box::new(body), span));
        }
        if self.eat_kw("if") {
            return self.if_rest(span);
        }
        if self.eat_kw("copy") {
            let node = self.copy(span)?;
            self.expect_sym(";")?;
            return Ok(node);
        }
        let node = if self.eat_kw("assume") {
            self.expect_sym("(")?;
            let b = self.bexpr()?;
            self.expect_sym(")")?;
            Node::Assume(b, span)
        } else if self.eat_kw("assert") {
            self.expect_sym("(")?;
            let b = self.bexpr()?;
            self.expect_sym(")")?;
            Node::Assert(b, span)
        } else if self.eat_kw("skip") {
            Node::Seq(Vec::new())
        } else {
            let target = self.lvalue()?;
            self.expect_sym(":=")?;
            let value = self.expr()?;
            Node::Assign(target, value, span)
        };
        self.expect_sym(";")?;
        Ok(node)
    }

    fn if_rest(&mut self, span: Span) -> Result<Node, FrontendError> {
        self.expect_sym("(")?;
        let g = self.bexpr()?;
        self.expect_sym(")")?;
        let then = self.braced()?;
        let els = if self.eat_kw("else") {
            if self.is_kw("if") {
                let s = self.span();
                self.bump();
                self.if_rest(s)?
            } else {
                self.braced()?
            }
        } else {
            Node::Seq(Vec::new())
        };
        Ok(Node::If(g, Box::new(then), Box::new(els), span))
    }

    /// `copy k name as s1, ..., sk`: the parallel composition of `k` copies
    /// of block `name`, each with every variable suffixed.
    fn copy(&mut self, span: Span) -> Result<Node, FrontendError> {
        let k = self.int()?;
        let (name, nspan) = self.ident()?;
        self.expect_kw("as")?;
        let mut suffixes = vec![self.ident()?.0];
        while self.eat_sym(",") {
            suffixes.push(self.ident()?.0);
        }
        if k < 1 || suffixes.len() as Int != k {
            return Err(FrontendError::syntax(
                span,
                format!("copy {k} needs exactly {k} suffixes, got {}", suffixes.len()),
            ));
        }
        let body = self
            .blocks
            .get(&name)
            .cloned()
            .ok_or_else(|| FrontendError::syntax(nspan, format!("unknown block `{name}`")))?;
        let mut used = std::collections::BTreeSet::new();
        body.collect_vars(&mut used);
        let mut branches = Vec::new();
        for suf in &suffixes {
            for v in &used {
                let Some(decl) = self.vars.get(v).cloned() else {
                    return Err(FrontendError::Undeclared { name: v.clone(), line: nspan.line, col: nspan.col });
                };
                self.vars.entry(format!("{v}{suf}")).or_insert(decl);
            }
            branches.push(body.rename(&|v: &str| format!("{v}{suf}")));
        }
        Ok(if branches.len() == 1 { branches.pop().unwrap() } else { Node::Par(branches) })
    }

    fn lvalue(&mut self) -> Result<LValue, FrontendError> {
        let (name, span) = self.ident()?;
        if self.eat_sym("[") {
            let idx = self.expr()?;
            self.expect_sym("]")?;
            Ok(LValue::Index(name, idx, span))
        } else {
            Ok(LValue::Var(name, span))
        }
    }

    fn bexpr(&mut self) -> Result<BExpr, FrontendError> {
        let mut parts = vec![self.band()?];
        while self.eat_sym("||") {
            parts.push(self.band()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { BExpr::Or(parts) })
    }

    fn band(&mut self) -> Result<BExpr, FrontendError> {
        let mut parts = vec![self.bnot()?];
        while self.eat_sym("&&") {
            parts.push(self.bnot()?);
        }
        Ok(if parts.len() == 1 { parts.pop().unwrap() } else { BExpr::And(parts) })
    }

    fn bnot(&mut self) -> Result<BExpr, FrontendError> {
        if self.eat_sym("!") {
            return Ok(BExpr::Not(Box::new(self.bnot()?)));
        }
        if self.eat_kw("true") {
            return Ok(BExpr::Bool(true));
        }
        if self.eat_kw("false") {
            return Ok(BExpr::Bool(false));
        }
        if self.is_sym("(") {
            // Either a parenthesized condition or the start of a comparison.
            let save = self.pos;
            self.bump();
            if let Ok(b) = self.bexpr() {
                if self.eat_sym(")") && !self.at_cmp_or_arith() {
                    return Ok(b);
                }
            }
            self.pos = save;
        }
        let lhs = self.expr()?;
        let op = match self.peek() {
            Tok::Sym("<") => CmpOp::Lt,
            Tok::Sym("<=") => CmpOp::Le,
            Tok::Sym(">") => CmpOp::Gt,
            Tok::Sym(">=") => CmpOp::Ge,
            Tok::Sym("=") | Tok::Sym("==") => CmpOp::Eq,
            Tok::Sym("!=") => CmpOp::Ne,
            _ => return Err(self.unexpected("a comparison operator")),
        };
        self.bump();
        let rhs = self.expr()?;
        Ok(BExpr::Cmp(lhs, op, rhs))
    }

    fn at_cmp_or_arith(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Sym("<" | "<=" | ">" | ">=" | "=" | "==" | "!=" | "+" | "-" | "*")
        )
    }

    fn expr(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.term()?;
        loop {
            if self.eat_sym("+") {
                e = Expr::Add(Box::new(e), Box::new(self.term()?));
            } else if self.eat_sym("-") {
                e = Expr::Sub(Box::new(e), Box::new(self.term()?));
            } else {
                return Ok(e);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, FrontendError> {
        let mut e = self.factor()?;
        while self.is_sym("*") {
            let span = self.span();
            self.bump();
            e = Expr::Mul(Box::new(e), Box::new(self.factor()?), span);
        }
        Ok(e)
    }

    fn factor(&mut self) -> Result<Expr, FrontendError> {
        if self.eat_sym("-") {
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        if self.eat_sym("(") {
            let e = self.expr()?;
            self.expect_sym(")")?;
            return Ok(e);
        }
        if let Tok::Int(v) = *self.peek() {
            self.bump();
            return Ok(Expr::Int(v));
        }
        if matches!(self.peek_at(0), Tok::Ident(_)) {
            let (name, span) = self.ident()?;
            if self.eat_sym("[") {
                let idx = self.expr()?;
                self.expect_sym("]")?;
                return Ok(Expr::Index(name, Box::new(idx), span));
            }
            return Ok(Expr::Var(name, span));
        }
        Err(self.unexpected("an expression"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_program() {
        let ast = parse_program("var x; x := 0;").unwrap();
        assert_eq!(ast.vars.len(), 1);
        let Node::Seq(items) = &ast.body else { panic!() };
        assert!(matches!(items.as_slice(), [Node::Assign(LValue::Var(x, _), Expr::Int(0), _)] if x == "x"));
    }

    #[test]
    fn mult_loop_structure() {
        let src = "var a, c, x, i; x := 0; i := 0; while (i < c) { x := x + a; i := i + 1; }";
        let ast = parse_program(src).unwrap();
        let Node::Seq(items) = &ast.body else { panic!() };
        let Node::While(BExpr::Cmp(_, CmpOp::Lt, _), body, _) = &items[2] else { panic!() };
        let Node::Seq(b) = body.as_ref() else { panic!() };
        assert_eq!(b.len(), 2);
    }

    #[test]
    fn undeclared_is_reported_with_position() {
        let err = parse_program("var x;\nx := y;").unwrap_err();
        assert!(matches!(err, FrontendError::Undeclared { ref name, line: 2, col: 6 } if name == "y"), "{err}");
    }

    #[test]
    fn syntax_error_position() {
        let err = parse_program("var x;\n  x = 1;").unwrap_err();
        assert!(matches!(err, FrontendError::Syntax { line: 2, col: 5, .. }), "{err}");
    }

    #[test]
    fn copy_suffixes_variables() {
        let src = "var x; block b { x := x + 1; } copy 2 b as _1, _2; assume(x_1 != x_2);";
        let ast = parse_program(src).unwrap();
        assert!(ast.vars.contains_key("x_1") && ast.vars.contains_key("x_2"));
        let Node::Seq(items) = &ast.body else { panic!() };
        assert!(matches!(&items[0], Node::Par(bs) if bs.len() == 2));
    }

    #[test]
    fn parenthesized_conditions() {
        let src = "var x, y; assume((x + 1) < y && !(x = y || (y > 2)));";
        parse_program(src).unwrap();
    }
}

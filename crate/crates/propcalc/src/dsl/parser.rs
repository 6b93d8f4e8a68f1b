//! Hand-rolled tokenizer and recursive-descent parser for the diagram
//! language. Whitespace-insensitive; `#` starts a line comment; every
//! token carries line/column for diagnostics.

use super::{Diagram, DslError, Init, LegDecl, Node, PortRef, Wire};
use crate::linalg::{c, C64};
use crate::morph::{Direction, Essence};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num { val: f64, imag: bool, raw: String },
    LParen,
    RParen,
    LBrack,
    RBrack,
    Comma,
    Dot,
    Arrow,
    Eq,
    Colon,
    Plus,
    Minus,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    col: usize,
}

fn err(line: usize, col: usize, message: impl Into<String>) -> DslError {
    DslError::Parse { line, col, message: message.into() }
}

fn lex(text: &str) -> Result<Vec<Spanned>, DslError> {
    let mut toks = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let ch = chars[i];
        let (tline, tcol) = (line, col);
        let bump = |i: &mut usize, line: &mut usize, col: &mut usize| {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        };
        if ch.is_whitespace() {
            bump(&mut i, &mut line, &mut col);
            continue;
        }
        if ch == '#' {
            while i < chars.len() && chars[i] != '\n' {
                bump(&mut i, &mut line, &mut col);
            }
            continue;
        }
        if ch.is_ascii_alphabetic() || ch == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                bump(&mut i, &mut line, &mut col);
            }
            let word: String = chars[start..i].iter().collect();
            toks.push(Spanned { tok: Tok::Ident(word), line: tline, col: tcol });
            continue;
        }
        if ch.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                bump(&mut i, &mut line, &mut col);
            }
            if i < chars.len() && chars[i] == '.' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit()
            {
                bump(&mut i, &mut line, &mut col);
                while i < chars.len() && chars[i].is_ascii_digit() {
                    bump(&mut i, &mut line, &mut col);
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = (i, line, col);
                bump(&mut i, &mut line, &mut col);
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    bump(&mut i, &mut line, &mut col);
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        bump(&mut i, &mut line, &mut col);
                    }
                } else {
                    (i, line, col) = save;
                }
            }
            let raw: String = chars[start..i].iter().collect();
            let val: f64 = raw
                .parse()
                .map_err(|_| err(tline, tcol, format!("bad number literal '{raw}'")))?;
            let mut imag = false;
            if i < chars.len()
                && chars[i] == 'i'
                && !(i + 1 < chars.len() && (chars[i + 1].is_ascii_alphanumeric() || chars[i + 1] == '_'))
            {
                imag = true;
                bump(&mut i, &mut line, &mut col);
            }
            toks.push(Spanned { tok: Tok::Num { val, imag, raw }, line: tline, col: tcol });
            continue;
        }
        let simple = match ch {
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '[' => Some(Tok::LBrack),
            ']' => Some(Tok::RBrack),
            ',' => Some(Tok::Comma),
            '.' => Some(Tok::Dot),
            '=' => Some(Tok::Eq),
            ':' => Some(Tok::Colon),
            '+' => Some(Tok::Plus),
            _ => None,
        };
        if let Some(t) = simple {
            toks.push(Spanned { tok: t, line: tline, col: tcol });
            bump(&mut i, &mut line, &mut col);
            continue;
        }
        if ch == '-' {
            if i + 1 < chars.len() && chars[i + 1] == '>' {
                bump(&mut i, &mut line, &mut col);
                bump(&mut i, &mut line, &mut col);
                toks.push(Spanned { tok: Tok::Arrow, line: tline, col: tcol });
            } else {
                bump(&mut i, &mut line, &mut col);
                toks.push(Spanned { tok: Tok::Minus, line: tline, col: tcol });
            }
            continue;
        }
        return Err(err(tline, tcol, format!("unexpected character '{ch}'")));
    }
    Ok(toks)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Spanned> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map(|s| (s.line, s.col))
            .unwrap_or((1, 1))
    }

    fn next(&mut self, what: &str) -> Result<Spanned, DslError> {
        let (l, c) = self.here();
        let t = self
            .toks
            .get(self.pos)
            .cloned()
            .ok_or_else(|| err(l, c, format!("unexpected end of input, expected {what}")))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<Spanned, DslError> {
        let t = self.next(what)?;
        if t.tok != tok {
            return Err(err(t.line, t.col, format!("expected {what}")));
        }
        Ok(t)
    }

    fn ident(&mut self, what: &str) -> Result<(String, usize, usize), DslError> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Ident(s) => Ok((s, t.line, t.col)),
            _ => Err(err(t.line, t.col, format!("expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), DslError> {
        let (s, l, c) = self.ident(&format!("'{kw}'"))?;
        if s != kw {
            return Err(err(l, c, format!("expected '{kw}', found '{s}'")));
        }
        Ok(())
    }

    fn integer(&mut self, what: &str) -> Result<(usize, usize, usize), DslError> {
        let t = self.next(what)?;
        match t.tok {
            Tok::Num { val, imag: false, .. } if val.fract() == 0.0 && val >= 0.0 => {
                Ok((val as usize, t.line, t.col))
            }
            _ => Err(err(t.line, t.col, format!("expected {what}"))),
        }
    }

    fn peek_is(&self, tok: &Tok) -> bool {
        self.peek().map(|s| &s.tok == tok).unwrap_or(false)
    }

    /// COMPLEX := [sign] part [("+"|"-") part] where a part is a real or
    /// imaginary number literal; at most one of each.
    fn complex(&mut self) -> Result<C64, DslError> {
        let mut sign = 1.0;
        if self.peek_is(&Tok::Minus) {
            self.pos += 1;
            sign = -1.0;
        } else if self.peek_is(&Tok::Plus) {
            self.pos += 1;
        }
        let t = self.next("a number")?;
        let (val, imag) = match t.tok {
            Tok::Num { val, imag, .. } => (val, imag),
            _ => return Err(err(t.line, t.col, "expected a number")),
        };
        let first = if imag { c(0.0, sign * val) } else { c(sign * val, 0.0) };
        let second_sign = if self.peek_is(&Tok::Plus) {
            self.pos += 1;
            1.0
        } else if self.peek_is(&Tok::Minus) {
            self.pos += 1;
            -1.0
        } else {
            return Ok(first);
        };
        let t2 = self.next("the imaginary part")?;
        match t2.tok {
            Tok::Num { val: v2, imag: true, .. } if !imag => Ok(first + c(0.0, second_sign * v2)),
            _ => Err(err(t2.line, t2.col, "expected an imaginary part like '2i'")),
        }
    }

    fn port_ref(&mut self, d: &Diagram) -> Result<(PortRef, usize, usize), DslError> {
        let (name, l, c0) = self.ident("a node name")?;
        let node = d
            .nodes
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| err(l, c0, format!("unknown node '{name}'")))?;
        self.expect(Tok::Dot, "'.'")?;
        let (port, pl, pc) = self.integer("a port number")?;
        let n_legs = d.nodes[node].legs.len();
        if port == 0 || port > n_legs {
            return Err(err(
                pl,
                pc,
                format!("port {port} out of range for node '{name}' with {n_legs} legs"),
            ));
        }
        Ok((PortRef { node, port: port - 1 }, l, c0))
    }
}

/// A builder's natural matrix shape must be realizable on the node: as
/// an out-ports x in-ports map (directly or adjointed), or row-major
/// over a declaration-order split whose prefix/suffix dim products
/// match.
pub(super) fn shape_fits(dims: &[usize], rows: usize, cols: usize, out_prod: usize, in_prod: usize) -> bool {
    if (out_prod, in_prod) == (rows, cols) || (out_prod, in_prod) == (cols, rows) {
        return true;
    }
    (0..=dims.len()).any(|s| {
        let pre: usize = dims[..s].iter().product();
        let post: usize = dims[s..].iter().product();
        (pre, post) == (rows, cols)
    })
}

fn builder_shape_ok(
    name: &str,
    args: &[String],
    dims: &[usize],
    out_prod: usize,
    in_prod: usize,
) -> Result<(), String> {
    let fits = |r: usize, c: usize| shape_fits(dims, r, c, out_prod, in_prod);
    match name {
        "identity" => {
            if !args.is_empty() {
                return Err("builder identity takes no arguments".into());
            }
            let square = (1..dims.len()).any(|s| {
                let pre: usize = dims[..s].iter().product();
                let post: usize = dims[s..].iter().product();
                pre == post
            });
            if !square {
                return Err(format!("builder identity needs a square leg split, dims are {dims:?}"));
            }
        }
        "bell" => {
            if args.len() != 1
                || args[0].len() != 2
                || !args[0].chars().all(|ch| ch == '0' || ch == '1')
            {
                return Err("builder bell needs a two-bit label, e.g. bell:01".into());
            }
            if dims != [2, 2] {
                return Err(format!("builder bell needs two qubit legs, dims are {dims:?}"));
            }
        }
        "pauli" => {
            if args.len() != 1 || !matches!(args[0].as_str(), "x" | "y" | "z") {
                return Err("builder pauli needs an axis: pauli:x|y|z".into());
            }
            if !fits(2, 2) {
                return Err(format!("builder pauli needs a 2x2 shape, dims are {dims:?}"));
            }
        }
        "hadamard" => {
            if !fits(2, 2) {
                return Err(format!("builder hadamard needs a 2x2 shape, dims are {dims:?}"));
            }
        }
        "cnot" | "swap" => {
            if !fits(4, 4) || dims.iter().any(|&d| d != 2) {
                return Err(format!("builder {name} needs four qubit legs, dims are {dims:?}"));
            }
        }
        "random" => {
            if args.len() != 1 || args[0].parse::<u64>().is_err() {
                return Err("builder random needs an integer seed: random:N".into());
            }
        }
        other => return Err(format!("unknown builder '{other}'")),
    }
    Ok(())
}

pub fn parse(text: &str) -> Result<Diagram, DslError> {
    let toks = lex(text)?;
    let mut p = Parser { toks, pos: 0 };
    let mut d = Diagram { spaces: Vec::new(), nodes: Vec::new(), wires: Vec::new(), outputs: Vec::new() };
    let mut output_seen = false;
    while p.peek().is_some() {
        let (kw, l, c0) = p.ident("a statement keyword")?;
        match kw.as_str() {
            "space" => {
                let (name, nl, nc) = p.ident("a space name")?;
                if d.space_dim(&name).is_some() {
                    return Err(err(nl, nc, format!("duplicate space '{name}'")));
                }
                p.keyword("dim")?;
                let (dim, dl, dc) = p.integer("a dimension")?;
                if dim == 0 {
                    return Err(err(dl, dc, "dimension must be positive"));
                }
                d.spaces.push((name, dim));
            }
            "node" => {
                let (name, nl, nc) = p.ident("a node name")?;
                if d.nodes.iter().any(|n| n.name == name) {
                    return Err(err(nl, nc, format!("duplicate node '{name}'")));
                }
                p.expect(Tok::LParen, "'('")?;
                let mut legs = Vec::new();
                if p.peek_is(&Tok::RParen) {
                    // a bare `()` declares a scalar node
                    p.pos += 1;
                } else {
                    loop {
                        let (dir_word, dl, dc) = p.ident("'in' or 'out'")?;
                        let direction = match dir_word.as_str() {
                            "in" => Direction::In,
                            "out" => Direction::Out,
                            other => {
                                return Err(err(
                                    dl,
                                    dc,
                                    format!("expected 'in' or 'out', found '{other}'"),
                                ))
                            }
                        };
                        let (mut word, mut wl, mut wc) = p.ident("a space name")?;
                        let essence = if word == "dual" {
                            (word, wl, wc) = p.ident("a space name")?;
                            Essence::Virtual
                        } else {
                            Essence::Physical
                        };
                        let dim = d
                            .space_dim(&word)
                            .ok_or_else(|| err(wl, wc, format!("unknown space '{word}'")))?;
                        legs.push(LegDecl { direction, essence, space: word, dim });
                        if p.peek_is(&Tok::Comma) {
                            p.pos += 1;
                            continue;
                        }
                        p.expect(Tok::RParen, "')' or ','")?;
                        break;
                    }
                }
                p.expect(Tok::Eq, "'='")?;
                let (init_kw, il, ic) = p.ident("'dense' or 'builder'")?;
                let init = match init_kw.as_str() {
                    "dense" => {
                        p.expect(Tok::LBrack, "'['")?;
                        let mut vals = Vec::new();
                        if !p.peek_is(&Tok::RBrack) {
                            loop {
                                vals.push(p.complex()?);
                                if p.peek_is(&Tok::Comma) {
                                    p.pos += 1;
                                    continue;
                                }
                                break;
                            }
                        }
                        p.expect(Tok::RBrack, "']'")?;
                        let expected: usize = legs.iter().map(|l| l.dim).product();
                        if vals.len() != expected {
                            return Err(err(
                                il,
                                ic,
                                format!(
                                    "dense initializer of node '{name}' has {} entries, legs need {expected}",
                                    vals.len()
                                ),
                            ));
                        }
                        Init::Dense(vals)
                    }
                    "builder" => {
                        let (bname, bl, bc) = p.ident("a builder name")?;
                        let mut args = Vec::new();
                        while p.peek_is(&Tok::Colon) {
                            p.pos += 1;
                            let t = p.next("a builder argument")?;
                            let arg = match t.tok {
                                Tok::Ident(s) => s,
                                Tok::Num { raw, imag: false, .. } => raw,
                                _ => return Err(err(t.line, t.col, "bad builder argument")),
                            };
                            args.push(arg);
                        }
                        let out_prod: usize = legs
                            .iter()
                            .filter(|l| l.direction == Direction::Out)
                            .map(|l| l.dim)
                            .product();
                        let in_prod: usize = legs
                            .iter()
                            .filter(|l| l.direction == Direction::In)
                            .map(|l| l.dim)
                            .product();
                        let dims: Vec<usize> = legs.iter().map(|l| l.dim).collect();
                        builder_shape_ok(&bname, &args, &dims, out_prod, in_prod)
                            .map_err(|m| err(bl, bc, format!("node '{name}': {m}")))?;
                        Init::Builder { name: bname, args }
                    }
                    other => {
                        return Err(err(il, ic, format!("expected 'dense' or 'builder', found '{other}'")))
                    }
                };
                d.nodes.push(Node { name, legs, init });
            }
            "wire" => {
                let (from, wl, _) = p.port_ref(&d)?;
                p.expect(Tok::Arrow, "'->'")?;
                let (to, _, _) = p.port_ref(&d)?;
                let bend = if let Some(Spanned { tok: Tok::Ident(s), .. }) = p.peek() {
                    if s == "bend" {
                        p.pos += 1;
                        true
                    } else {
                        false
                    }
                } else {
                    false
                };
                d.wires.push(Wire { from, to, bend, line: wl });
            }
            "output" => {
                if output_seen {
                    return Err(err(l, c0, "more than one output statement"));
                }
                output_seen = true;
                // the port list is empty when the next token starts a new
                // statement (or the file ends)
                let starts_port = matches!(
                    p.peek(),
                    Some(Spanned { tok: Tok::Ident(s), .. })
                        if !matches!(s.as_str(), "space" | "node" | "wire" | "output")
                );
                if starts_port {
                    loop {
                        let (r, _, _) = p.port_ref(&d)?;
                        d.outputs.push(r);
                        if p.peek_is(&Tok::Comma) {
                            p.pos += 1;
                            continue;
                        }
                        break;
                    }
                }
            }
            other => {
                return Err(err(l, c0, format!("unknown statement '{other}'")));
            }
        }
    }
    if !output_seen {
        return Err(err(1, 1, "missing output statement"));
    }
    // every port is used exactly once, as a wire endpoint or an output
    let mut used: Vec<Vec<Option<String>>> =
        d.nodes.iter().map(|n| vec![None; n.legs.len()]).collect();
    let mut mark = |p: PortRef, what: String, d: &Diagram| -> Result<(), DslError> {
        if let Some(prev) = &used[p.node][p.port] {
            return Err(err(
                1,
                1,
                format!("port {} used twice: {prev} and {what}", d.port_name(p)),
            ));
        }
        used[p.node][p.port] = Some(what);
        Ok(())
    };
    for (i, w) in d.wires.iter().enumerate() {
        mark(w.from, format!("wire {}", i + 1), &d)?;
        mark(w.to, format!("wire {}", i + 1), &d)?;
    }
    for &o in &d.outputs {
        mark(o, "output".into(), &d)?;
    }
    for (ni, node) in d.nodes.iter().enumerate() {
        for (pi, slot) in used[ni].iter().enumerate() {
            if slot.is_none() {
                return Err(err(
                    1,
                    1,
                    format!(
                        "port {}.{} is neither wired nor an output",
                        node.name,
                        pi + 1
                    ),
                ));
            }
        }
    }
    Ok(d)
}

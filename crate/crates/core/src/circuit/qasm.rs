use std::f64::consts::PI;
use std::fmt::Write as _;

use super::{Basis, Circuit, GateKind, PrepState};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    Str,
    Sym(char),
    Arrow,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    col: usize,
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0, 1, 1);
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let s: String = chars[start..i].iter().collect();
            Tok::Num(s.parse().map_err(|_| syntax(tl, tc, format!("bad number `{s}`")))?)
        } else if c == '"' {
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                if chars[i] == '\n' {
                    return Err(syntax(tl, tc, "unterminated string"));
                }
                i += 1;
            }
            if i == chars.len() {
                return Err(syntax(tl, tc, "unterminated string"));
            }
            i += 1;
            Tok::Str
        } else if c == '-' && chars.get(i + 1) == Some(&'>') {
            i += 2;
            Tok::Arrow
        } else if "()[];,+-*/{}^".contains(c) {
            i += 1;
            Tok::Sym(c)
        } else {
            return Err(syntax(tl, tc, format!("unexpected character `{c}`")));
        };
        col += i - start;
        out.push(Token { tok, line: tl, col: tc });
    }
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    eof: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map_or(self.eof, |t| (t.line, t.col))
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        let (l, c) = self.here();
        syntax(l, c, msg)
    }

    fn next(&mut self) -> Result<Tok> {
        let t = self
            .toks
            .get(self.pos)
            .map(|t| t.tok.clone())
            .ok_or_else(|| self.err("unexpected end of input"))?;
        self.pos += 1;
        Ok(t)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Tok::Sym(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{c}`")))
        }
    }

    fn ident(&mut self) -> Result<String> {
        match self.next()? {
            Tok::Ident(s) => Ok(s),
            _ => {
                self.pos -= 1;
                Err(self.err("expected identifier"))
            }
        }
    }

    fn index(&mut self) -> Result<usize> {
        self.expect('[')?;
        let n = match self.next()? {
            Tok::Num(v) if v >= 0.0 && v.fract() == 0.0 => v as usize,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected non-negative integer index"));
            }
        };
        self.expect(']')?;
        Ok(n)
    }

    fn skip_statement(&mut self) -> Result<()> {
        while !self.eat(';') {
            self.next()?;
        }
        Ok(())
    }

    fn expr(&mut self) -> Result<f64> {
        let mut v = self.term()?;
        loop {
            if self.eat('+') {
                v += self.term()?;
            } else if self.eat('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                v *= self.unary()?;
            } else if self.eat('/') {
                v /= self.unary()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        match self.next()? {
            Tok::Num(v) => Ok(v),
            Tok::Ident(s) if s == "pi" => Ok(PI),
            Tok::Sym('(') => {
                let v = self.expr()?;
                self.expect(')')?;
                Ok(v)
            }
            _ => {
                self.pos -= 1;
                Err(self.err("expected expression"))
            }
        }
    }
}

/// Parses the supported OpenQASM 2.0 subset.
pub fn parse_qasm(text: &str) -> Result<Circuit> {
    let toks = lex(text)?;
    let eof = toks.last().map_or((1, 1), |t| (t.line, t.col + 1));
    let mut p = Parser { toks, pos: 0, eof };
    let mut reg: Option<(String, usize)> = None;
    let mut circ: Option<Circuit> = None;

    while p.peek().is_some() {
        let (line, _) = p.here();
        let name = p.ident()?;
        match name.as_str() {
            "OPENQASM" | "include" | "creg" | "barrier" | "measure" => {
                p.skip_statement()?;
                continue;
            }
            "qreg" => {
                let rname = p.ident()?;
                let n = p.index()?;
                p.expect(';')?;
                if reg.is_some() {
                    return Err(Error::MultipleRegisters(rname));
                }
                reg = Some((rname, n));
                circ = Some(Circuit::new(n));
                continue;
            }
            _ => {}
        }

        let mut params = Vec::new();
        if p.eat('(') {
            if !p.eat(')') {
                loop {
                    params.push(p.expr()?);
                    if p.eat(')') {
                        break;
                    }
                    p.expect(',')?;
                }
            }
        }
        let Some((rname, n)) = reg.clone() else {
            return Err(p.err("gate before qreg declaration"));
        };
        // Each argument is q[i] or a bare register (broadcast).
        let mut args: Vec<Option<usize>> = Vec::new();
        loop {
            let r = p.ident()?;
            if r != rname {
                return Err(p.err(format!("unknown register `{r}`")));
            }
            if p.peek() == Some(&Tok::Sym('[')) {
                let i = p.index()?;
                if i >= n {
                    return Err(p.err(format!("index {i} out of range for qreg of size {n}")));
                }
                args.push(Some(i));
            } else {
                args.push(None);
            }
            if p.eat(';') {
                break;
            }
            p.expect(',')?;
        }

        let lowered = lower(&name, &params, line)?;
        let c = circ.as_mut().expect("qreg declared");
        let expanded: Vec<Vec<usize>> = if args.iter().all(Option::is_some) {
            vec![args.iter().map(|a| a.unwrap()).collect()]
        } else if args.len() == 1 {
            (0..n).map(|q| vec![q]).collect()
        } else {
            return Err(syntax(line, 1, "register broadcast only supported for single-qubit gates"));
        };
        for qs in expanded {
            for (kind, ps) in &lowered {
                c.push(*kind, ps, &qs).map_err(|e| syntax(line, 1, e.to_string()))?;
            }
        }
    }
    circ.ok_or_else(|| syntax(eof.0, eof.1, "missing qreg declaration"))
}

fn lower(name: &str, params: &[f64], line: usize) -> Result<Vec<(GateKind, Vec<f64>)>> {
    let simple = |k: GateKind| -> Result<Vec<(GateKind, Vec<f64>)>> {
        if params.len() != k.param_count() {
            return Err(syntax(
                line,
                1,
                format!("`{name}` takes {} parameter(s), got {}", k.param_count(), params.len()),
            ));
        }
        Ok(vec![(k, params.to_vec())])
    };
    match name {
        "h" => simple(GateKind::H),
        "x" => simple(GateKind::X),
        "y" => simple(GateKind::Y),
        "z" => simple(GateKind::Z),
        "s" => simple(GateKind::S),
        "sdg" => simple(GateKind::Sdg),
        "t" => simple(GateKind::T),
        "tdg" => simple(GateKind::Tdg),
        "rx" => simple(GateKind::RX),
        "ry" => simple(GateKind::RY),
        "rz" | "u1" => simple(GateKind::RZ),
        "rzz" => simple(GateKind::RZZ),
        "cx" | "CX" => simple(GateKind::CX),
        "cz" => simple(GateKind::CZ),
        "cp" | "cu1" => simple(GateKind::CP),
        "swap" => simple(GateKind::SWAP),
        "u3" | "u" => {
            if params.len() != 3 {
                return Err(syntax(line, 1, format!("`{name}` takes 3 parameters")));
            }
            // u3(θ,φ,λ) = RZ(φ)·RY(θ)·RZ(λ) up to global phase.
            Ok(vec![
                (GateKind::RZ, vec![params[2]]),
                (GateKind::RY, vec![params[0]]),
                (GateKind::RZ, vec![params[1]]),
            ])
        }
        _ => Err(Error::UnsupportedGate {
            name: name.to_string(),
            line,
        }),
    }
}

/// Prints a circuit as OpenQASM 2.0. Cut instructions are emitted as
/// `reset`/basis changes/`measure` so the text stays executable elsewhere.
pub fn to_qasm(c: &Circuit) -> String {
    let mut s = String::new();
    let n = c.num_qubits;
    let measures = c
        .gates
        .iter()
        .filter(|g| matches!(g.kind, GateKind::Measure(_)))
        .count();
    s.push_str("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    let _ = writeln!(s, "qreg q[{n}];");
    if measures > 0 {
        let _ = writeln!(s, "creg c[{measures}];");
    }
    let mut clbit = 0;
    for g in &c.gates {
        let qs: Vec<String> = g.qubits.iter().map(|q| format!("q[{q}]")).collect();
        let qs = qs.join(",");
        match g.kind {
            GateKind::Measure(b) => {
                let q = g.qubits[0];
                match b {
                    Basis::X => {
                        let _ = writeln!(s, "h q[{q}];");
                    }
                    Basis::Y => {
                        let _ = writeln!(s, "sdg q[{q}];\nh q[{q}];");
                    }
                    _ => {}
                }
                let _ = writeln!(s, "measure q[{q}] -> c[{clbit}];");
                clbit += 1;
            }
            GateKind::Prepare(p) => {
                let q = g.qubits[0];
                let _ = writeln!(s, "reset q[{q}];");
                match p {
                    PrepState::Zero => {}
                    PrepState::One => {
                        let _ = writeln!(s, "x q[{q}];");
                    }
                    PrepState::Plus => {
                        let _ = writeln!(s, "h q[{q}];");
                    }
                    PrepState::IPlus => {
                        let _ = writeln!(s, "h q[{q}];\ns q[{q}];");
                    }
                }
            }
            k => {
                if g.params.is_empty() {
                    let _ = writeln!(s, "{} {qs};", k.name());
                } else {
                    let ps: Vec<String> = g.params.iter().map(|p| format!("{p:?}")).collect();
                    let _ = writeln!(s, "{}({}) {qs};", k.name(), ps.join(","));
                }
            }
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_minimal_program() {
        let c = parse_qasm("qreg q[2]; h q[0]; cx q[0],q[1];").unwrap();
        assert_eq!(c.num_qubits, 2);
        assert_eq!(c.gates.len(), 2);
        assert_eq!(c.gates[0].kind, GateKind::H);
        assert_eq!(c.gates[1].kind, GateKind::CX);
        assert_eq!(c.gates[1].qubits, vec![0, 1]);
    }

    #[test]
    fn ghz_source() {
        let src = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[4];\ncreg c[4];\n\
                   h q[0];\ncx q[0],q[1];\ncx q[1],q[2];\ncx q[2],q[3];\nmeasure q -> c;\n";
        let c = parse_qasm(src).unwrap();
        let mut want = Circuit::new(4);
        want.h(0).cx(0, 1).cx(1, 2).cx(2, 3);
        assert_eq!(c, want);
    }

    #[test]
    fn evaluates_angle_expressions() {
        let c = parse_qasm("qreg q[2]; cp(pi/2) q[0],q[1]; rz(-(pi - 1)*2) q[1]; rx(1.5e-3) q[0];").unwrap();
        assert_eq!(c.gates[0].kind, GateKind::CP);
        assert_eq!(c.gates[0].params, vec![PI / 2.0]);
        assert!((c.gates[1].params[0] + (PI - 1.0) * 2.0).abs() < 1e-15);
        assert_eq!(c.gates[2].params, vec![1.5e-3]);
    }

    #[test]
    fn lowers_u_gates() {
        let c = parse_qasm("qreg q[1]; u1(0.5) q[0]; u3(0.1,0.2,0.3) q[0];").unwrap();
        let kinds: Vec<_> = c.gates.iter().map(|g| (g.kind, g.params[0])).collect();
        assert_eq!(
            kinds,
            vec![(GateKind::RZ, 0.5), (GateKind::RZ, 0.3), (GateKind::RY, 0.1), (GateKind::RZ, 0.2)]
        );
    }

    #[test]
    fn error_positions() {
        match parse_qasm("qreg q[2];\nh q[0]\ncx q[0],q[1];") {
            Err(Error::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        match parse_qasm("qreg q[2];\nccx q[0],q[1],q[0];") {
            Err(Error::UnsupportedGate { name, line }) => {
                assert_eq!(name, "ccx");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_qasm("qreg q[2]; qreg r[2];"), Err(Error::MultipleRegisters(_))));
        assert!(matches!(parse_qasm("qreg q[2]; h q[5];"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn broadcast_single_qubit_gate() {
        let c = parse_qasm("qreg q[3]; h q;").unwrap();
        assert_eq!(c.gates.len(), 3);
    }

    fn arb_circuit() -> impl Strategy<Value = Circuit> {
        let kinds = [
            GateKind::H,
            GateKind::X,
            GateKind::Y,
            GateKind::Z,
            GateKind::S,
            GateKind::Sdg,
            GateKind::T,
            GateKind::Tdg,
            GateKind::RX,
            GateKind::RY,
            GateKind::RZ,
            GateKind::RZZ,
            GateKind::CX,
            GateKind::CZ,
            GateKind::CP,
            GateKind::SWAP,
        ];
        (2usize..6).prop_flat_map(move |n| {
            prop::collection::vec((0..kinds.len(), 0..n, 1..n, -10.0f64..10.0), 0..30).prop_map(move |gs| {
                let mut c = Circuit::new(n);
                for (k, a, off, th) in gs {
                    let kind = kinds[k];
                    let params: Vec<f64> = (0..kind.param_count()).map(|_| th).collect();
                    if kind.arity() == 2 {
                        c.add(kind, &params, &[a, (a + off) % n]);
                    } else {
                        c.add(kind, &params, &[a]);
                    }
                }
                c
            })
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(c in arb_circuit()) {
            let back = parse_qasm(&to_qasm(&c)).unwrap();
            prop_assert_eq!(back, c);
        }
    }
}

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sif_core::expr::*;
use sif_core::geometry::{CornerFrame, CornerPolygon};

fn frame() -> CornerFrame {
    CornerPolygon::lshape().frame()
}

fn ev(s: &str, x: f64, y: f64) -> Result<f64, EvalDomainError> {
    parse(s).unwrap().eval(x, y, &frame())
}

/// Reference evaluator: tokenize, shunting-yard to RPN, then run a stack machine.
mod reference {
    #[derive(Debug, Clone, PartialEq)]
    enum Tok {
        Num(f64),
        Var(String),
        Func(String),
        Op(char),
        Neg,
        LParen,
        RParen,
        Comma,
    }

    fn tokens(s: &str) -> Vec<Tok> {
        let c: Vec<char> = s.chars().collect();
        let mut out = vec![];
        let mut i = 0;
        while i < c.len() {
            let ch = c[i];
            if ch.is_whitespace() {
                i += 1;
            } else if ch.is_ascii_digit() || ch == '.' {
                let st = i;
                while i < c.len() && (c[i].is_ascii_digit() || c[i] == '.') {
                    i += 1;
                }
                if i < c.len() && (c[i] == 'e' || c[i] == 'E') {
                    i += 1;
                    if c[i] == '+' || c[i] == '-' {
                        i += 1;
                    }
                    while i < c.len() && c[i].is_ascii_digit() {
                        i += 1;
                    }
                }
                out.push(Tok::Num(c[st..i].iter().collect::<String>().parse().unwrap()));
            } else if ch.is_alphabetic() {
                let st = i;
                while i < c.len() && c[i].is_alphanumeric() {
                    i += 1;
                }
                let name: String = c[st..i].iter().collect();
                let is_call = i < c.len() && c[i] == '(';
                out.push(if is_call { Tok::Func(name) } else { Tok::Var(name) });
            } else {
                let prev_is_value = matches!(out.last(), Some(Tok::Num(_) | Tok::Var(_) | Tok::RParen));
                out.push(match ch {
                    '(' => Tok::LParen,
                    ')' => Tok::RParen,
                    ',' => Tok::Comma,
                    '-' if !prev_is_value => Tok::Neg,
                    _ => Tok::Op(ch),
                });
                i += 1;
            }
        }
        out
    }

    fn prec(t: &Tok) -> (u8, bool) {
        // (precedence, right associative)
        match t {
            Tok::Op('+') | Tok::Op('-') => (1, false),
            Tok::Op('*') | Tok::Op('/') => (2, false),
            Tok::Neg => (3, true),
            Tok::Op('^') => (4, true),
            _ => (0, false),
        }
    }

    fn rpn(ts: Vec<Tok>) -> Vec<Tok> {
        let (mut out, mut st): (Vec<Tok>, Vec<Tok>) = (vec![], vec![]);
        for t in ts {
            match t {
                Tok::Num(_) | Tok::Var(_) => out.push(t),
                Tok::Func(_) | Tok::LParen | Tok::Neg => st.push(t),
                Tok::Comma => {
                    while st.last() != Some(&Tok::LParen) {
                        out.push(st.pop().unwrap());
                    }
                }
                Tok::RParen => {
                    while st.last() != Some(&Tok::LParen) {
                        out.push(st.pop().unwrap());
                    }
                    st.pop();
                    if let Some(Tok::Func(_)) = st.last() {
                        out.push(st.pop().unwrap());
                    }
                }
                Tok::Op(_) => {
                    let (p, right) = prec(&t);
                    while let Some(top) = st.last() {
                        let (q, _) = prec(top);
                        if matches!(top, Tok::Op(_) | Tok::Neg) && (q > p || (q == p && !right)) {
                            out.push(st.pop().unwrap());
                        } else {
                            break;
                        }
                    }
                    st.push(t);
                }
            }
        }
        while let Some(t) = st.pop() {
            out.push(t);
        }
        out
    }

    pub fn eval(s: &str, x: f64, y: f64, theta: f64) -> Option<f64> {
        let mut st: Vec<f64> = vec![];
        for t in rpn(tokens(s)) {
            let v = match t {
                Tok::Num(v) => v,
                Tok::Var(n) => match n.as_str() {
                    "x" => x,
                    "y" => y,
                    "r" => x.hypot(y),
                    "theta" => theta,
                    "pi" => std::f64::consts::PI,
                    _ => panic!("{n}"),
                },
                Tok::Neg => -st.pop()?,
                Tok::Op(o) => {
                    let b = st.pop()?;
                    let a = st.pop()?;
                    match o {
                        '+' => a + b,
                        '-' => a - b,
                        '*' => a * b,
                        '/' if b == 0.0 => return None,
                        '/' => a / b,
                        _ => a.powf(b),
                    }
                }
                Tok::Func(n) => {
                    let a = st.pop()?;
                    match n.as_str() {
                        "sin" => a.sin(),
                        "cos" => a.cos(),
                        "exp" => a.exp(),
                        "abs" => a.abs(),
                        "sqrt" if a < 0.0 => return None,
                        "sqrt" => a.sqrt(),
                        "log" if a <= 0.0 => return None,
                        "log" => a.ln(),
                        "atan2" => st.pop()?.atan2(a),
                        _ => panic!("{n}"),
                    }
                }
                _ => unreachable!(),
            };
            if v.is_nan() {
                return None;
            }
            st.push(v);
        }
        st.pop()
    }
}

fn random_expr(rng: &mut ChaCha8Rng, depth: u32) -> String {
    let mut s = random_operand(rng, depth);
    for _ in 0..rng.gen_range(0..4) {
        let op = ["+", "-", "*", "/", "^"][rng.gen_range(0..5)];
        s = format!("{s} {op} {}", random_operand(rng, depth));
    }
    s
}

fn random_operand(rng: &mut ChaCha8Rng, depth: u32) -> String {
    let k = if depth == 0 { rng.gen_range(0..3) } else { rng.gen_range(0..7) };
    match k {
        0 => ["x", "y", "r", "theta", "pi"][rng.gen_range(0..5)].to_string(),
        1 => ["2", "0.5", "3.25", "1e-1", "1.5e2", "7"][rng.gen_range(0..6)].to_string(),
        2 => format!("-{}", ["x", "y", "2"][rng.gen_range(0..3)]),
        3 => format!("({})", random_expr(rng, depth - 1)),
        4 => format!("-({})", random_expr(rng, depth - 1)),
        5 => format!("atan2({}, {})", random_expr(rng, depth - 1), random_expr(rng, depth - 1)),
        _ => {
            let f = ["sin", "cos", "exp", "abs", "sqrt", "log"][rng.gen_range(0..6)];
            format!("{f}({})", random_expr(rng, depth - 1))
        }
    }
}

fn lshape_theta(x: f64, y: f64) -> f64 {
    let t = y.atan2(x);
    if t < -PI / 2.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

#[test]
fn precedence_examples() {
    let e = parse("x^2*y - sin(theta)").unwrap();
    match &e {
        FieldExpr::Bin(BinOp::Sub, a, b) => {
            assert!(matches!(**a, FieldExpr::Bin(BinOp::Mul, ..)));
            assert!(matches!(**b, FieldExpr::Call(Func::Sin, _)));
        }
        other => panic!("{other:?}"),
    }
    assert_eq!(ev("2^3^2", 0.0, 1.0).unwrap(), 512.0);
    assert_eq!(ev("-2^2", 0.0, 1.0).unwrap(), -4.0);
    assert_eq!(ev("2^-1", 0.0, 1.0).unwrap(), 0.5);
    assert_eq!(ev("1 - 2 - 3", 0.0, 1.0).unwrap(), -4.0);
    assert_eq!(ev("8 / 4 / 2", 0.0, 1.0).unwrap(), 1.0);
    assert_eq!(ev("2 * -3 + 1", 0.0, 1.0).unwrap(), -5.0);
    assert_eq!(ev("1.5e1 + 2E-1", 0.0, 1.0).unwrap(), 15.2);
}

#[test]
fn syntax_errors_have_positions() {
    assert_eq!(
        parse("x +").unwrap_err(),
        ExprError::SyntaxError { line: 1, col: 4, expected: match parse("x +").unwrap_err() {
            ExprError::SyntaxError { expected, .. } => expected,
            _ => unreachable!(),
        } }
    );
    match parse("x\n  * (y") {
        Err(ExprError::SyntaxError { line, .. }) => assert_eq!(line, 2),
        other => panic!("{other:?}"),
    }
    match parse("1 + foo * 2") {
        Err(ExprError::UnknownIdentifier { name, line, col }) => assert_eq!((name.as_str(), line, col), ("foo", 1, 5)),
        other => panic!("{other:?}"),
    }
    for bad in ["", "()", "sin x", "atan2(1)", "2 3", "x $ y", "1 +* 2"] {
        assert!(parse(bad).is_err(), "{bad}");
    }
}

#[test]
fn evaluation_domain() {
    assert_eq!(ev("r^0.5", 1.0, 0.0).unwrap(), 1.0);
    assert!(ev("x/y", 1.0, 0.0).is_err());
    assert!(ev("log(x)", -1.0, 0.5).is_err());
    assert!(ev("log(0)", 0.5, 0.5).is_err());
    assert!(ev("sqrt(x)", -1.0, 0.5).is_err());
    assert!(ev("x^0.5", -1.0, 0.5).is_err());
    assert_eq!(ev("sqrt(0)", 0.5, 0.5).unwrap(), 0.0);
    assert!((ev("omega2 - omega1", 0.3, 0.3).unwrap() - 1.5 * PI).abs() < 1e-15);
}

#[test]
fn theta_is_continuous_inside_the_corner() {
    // the third quadrant is outside the L-shape; theta runs through pi on the top-left
    assert!((ev("theta", -1.0, 1e-9).unwrap() - PI).abs() < 1e-8);
    assert!((ev("theta", 0.0, -0.5).unwrap() + PI / 2.0).abs() < 1e-15);
    assert!((ev("theta", -1.0, 1.0).unwrap() - 0.75 * PI).abs() < 1e-15);
}

#[test]
fn print_parse_fixed_point() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..500 {
        let s = random_expr(&mut rng, 3);
        let e = parse(&s).unwrap();
        let p = e.to_string();
        let e2 = parse(&p).unwrap_or_else(|err| panic!("{s} -> {p}: {err}"));
        assert_eq!(e2, e, "{s} -> {p}");
        assert_eq!(e2.to_string(), p);
    }
    assert_eq!(parse("(x + y) * (x - (y - 1))").unwrap().to_string(), "(x + y) * (x - (y - 1.0))");
    assert_eq!(parse("(2^3)^2").unwrap().to_string(), "(2.0^3.0)^2.0");
}

#[test]
fn matches_reference_evaluator() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut compared = 0;
    for _ in 0..1000 {
        let s = random_expr(&mut rng, 2);
        let e = parse(&s).unwrap();
        let (x, y) = loop {
            let p: (f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if !(p.0 < 0.0 && p.1 < 0.0) {
                break p;
            }
        };
        let mine = e.eval(x, y, &frame()).ok();
        let th = EvalContext::at([x, y], &frame()).theta;
        assert!((th - lshape_theta(x, y)).abs() <= 4.0 * f64::EPSILON * th.abs().max(1.0));
        let theirs = reference::eval(&s, x, y, th);
        match (mine, theirs) {
            (Some(a), Some(b)) => {
                assert_eq!(a.to_bits(), b.to_bits(), "{s} at ({x}, {y}): {a} vs {b}");
                compared += 1;
            }
            (None, None) => {}
            (a, b) => {
                // overflow to inf may turn into NaN at different operations; only accept that case
                assert!(a.map_or(true, |v| !v.is_finite()) && b.map_or(true, |v| !v.is_finite()), "{s}: {a:?} vs {b:?}");
            }
        }
    }
    assert!(compared > 600, "{compared}");
}

#[test]
fn derivative_check() {
    let pts: Vec<[f64; 2]> = (0..20).map(|k| [0.1 + 0.04 * k as f64, 0.9 - 0.07 * k as f64]).collect();
    let f = parse("x^2*y + sin(x*y)").unwrap();
    let dfx = parse("2*x*y + y*cos(x*y)").unwrap();
    let dfy = parse("x^2 + x*cos(x*y)").unwrap();
    assert!(check_derivative(&f, &dfx, true, &pts, &frame()).unwrap() < 1e-8);
    assert!(check_derivative(&f, &dfy, false, &pts, &frame()).unwrap() < 1e-8);
    let wrong = parse("x*y").unwrap();
    assert!(check_derivative(&f, &wrong, true, &pts, &frame()).unwrap() > 1e-2);
}

#[test]
fn expression_fields() {
    use sif_core::field::{ScalarField, VectorField};
    let s = ExprScalar { expr: parse("1/x").unwrap(), frame: frame() };
    assert_eq!(s.eval([2.0, 0.0]), 0.5);
    assert!(s.eval([0.0, 1.0]).is_nan());
    assert!(s.try_eval([0.0, 1.0]).is_err());
    let v = ExprVector { x: parse("y").unwrap(), y: parse("-x").unwrap(), frame: frame() };
    assert_eq!(v.eval([1.0, 2.0]), [2.0, -1.0]);
}

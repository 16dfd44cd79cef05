//! The `.ctp` concurrent transition program format.

use std::fmt::Write as _;

use crate::formula::{Atom, Formula, LinTerm, Var};
use crate::model::{Annotation, Init, Program, ProgramBuilder};
use crate::syntax::{is_keyword, Parser, Tok};

use super::FrontendError;

/// Parses a `.ctp` program and validates it.
pub fn parse(src: &str) -> Result<Program, FrontendError> {
    let mut p = Parser::new(src, true)?;
    let mut b = ProgramBuilder::new();
    let mut property_seen = false;
    loop {
        while p.eat(&Tok::Eol) {}
        if p.at_end() {
            break;
        }
        if p.eat_keyword("shared") {
            let name = var_name(&mut p)?;
            if name.contains('.') {
                return Err(p.error("shared variable names cannot contain `.`").into());
            }
            p.expect(&Tok::Rel(crate::formula::Rel::Eq))?;
            let init = init(&mut p)?;
            b.shared(name.as_str(), init);
        } else if p.eat_keyword("local") {
            let full = var_name(&mut p)?;
            let Some((proc, name)) = full.split_once('.') else {
                return Err(p.error("local variables are written `<process>.<name>`").into());
            };
            p.expect(&Tok::Rel(crate::formula::Rel::Eq))?;
            let init = init(&mut p)?;
            b.local(proc, name, init);
        } else if p.eat_keyword("assume") {
            let a = p.atom()?;
            b.assume(a);
        } else if p.eat_keyword("resource") {
            let var = Var::new(var_name(&mut p)?);
            p.expect(&Tok::Rel(crate::formula::Rel::Le))?;
            let bound = p.linterm()?;
            b.annotate(Annotation::Resource { var, bound });
        } else if p.eat_keyword("flag") {
            let var = Var::new(var_name(&mut p)?);
            b.annotate(Annotation::Flag(var));
        } else if p.eat_keyword("property") {
            if property_seen {
                return Err(p.error("only one property may be declared").into());
            }
            property_seen = true;
            if !p.eat_keyword("always") {
                return Err(p.unexpected("`always`").into());
            }
            let f = p.formula()?;
            b.property(f);
        } else if p.eat_keyword("process") {
            process(&mut p, &mut b)?;
            continue;
        } else {
            return Err(p.unexpected("a declaration").into());
        }
        if !p.at_end() && !p.eat(&Tok::Eol) {
            return Err(p.unexpected("end of line").into());
        }
    }
    Ok(b.build()?)
}

fn var_name(p: &mut Parser) -> Result<String, FrontendError> {
    let name = p.ident()?;
    if is_keyword(&name) {
        return Err(p.error(format!("`{name}` is a keyword")).into());
    }
    Ok(name)
}

fn init(p: &mut Parser) -> Result<Init, FrontendError> {
    if p.eat(&Tok::Star) {
        Ok(Init::Any)
    } else {
        Ok(Init::Value(p.int()?))
    }
}

fn location(p: &mut Parser) -> Result<u32, FrontendError> {
    let n = p.int()?;
    u32::try_from(&n).map_err(|_| p.error(format!("location {n} out of range")).into())
}

fn skip_eols(p: &mut Parser) {
    while p.eat(&Tok::Eol) {}
}

/// `process NAME { SRC -> DST : [GUARD] STMT ; ... }`
fn process(p: &mut Parser, b: &mut ProgramBuilder) -> Result<(), FrontendError> {
    let name = p.ident()?;
    if name.contains('.') || is_keyword(&name) {
        return Err(p.error(format!("invalid process name `{name}`")).into());
    }
    let index = b.process(&name);
    skip_eols(p);
    p.expect(&Tok::LBrace)?;
    loop {
        skip_eols(p);
        if p.eat(&Tok::RBrace) {
            return Ok(());
        }
        let src = location(p)?;
        p.expect(&Tok::Arrow)?;
        let dst = location(p)?;
        p.expect(&Tok::Colon)?;
        let mut guard = Vec::new();
        if p.eat(&Tok::LBracket) {
            if !p.eat_keyword("true") {
                guard.push(p.atom()?);
                while p.eat(&Tok::And) {
                    guard.push(p.atom()?);
                }
            }
            p.expect(&Tok::RBracket)?;
        }
        let assign = if p.eat_keyword("skip") {
            None
        } else {
            let v = Var::new(var_name(p)?);
            p.expect(&Tok::Assign)?;
            Some((v, p.linterm()?))
        };
        p.expect(&Tok::Semi)?;
        b.transition(index, src, dst, guard, assign);
    }
}

/// Canonical text of `p`: shared variables, locals, assumptions, resources,
/// flags, the property, then one block per process. Parsing the output
/// yields `p` again.
pub fn render(p: &Program) -> String {
    let mut out = String::new();
    let init = |i: &Init| match i {
        Init::Value(c) => c.to_string(),
        Init::Any => "*".to_string(),
    };
    for d in p.vars.iter().filter(|d| d.owner.is_none()) {
        writeln!(out, "shared {} = {}", d.name, init(&d.init)).unwrap();
    }
    for d in p.vars.iter().filter(|d| d.owner.is_some()) {
        writeln!(out, "local {} = {}", d.name, init(&d.init)).unwrap();
    }
    for a in &p.assumptions {
        writeln!(out, "assume {}", bare_atom(a)).unwrap();
    }
    for a in &p.annotations {
        match a {
            Annotation::Resource { var, bound } => writeln!(out, "resource {var} <= {bound}").unwrap(),
            Annotation::Flag(v) => writeln!(out, "flag {v}").unwrap(),
        }
    }
    writeln!(out, "property always {}", p.property).unwrap();
    for proc in &p.processes {
        writeln!(out, "\nprocess {} {{", proc.name).unwrap();
        for id in &proc.transitions {
            let t = p.transition(*id);
            write!(out, "  {} -> {} : ", t.src, t.dst).unwrap();
            if !t.guard.is_empty() {
                let g: Vec<String> = t.guard.iter().map(bare_atom).collect();
                write!(out, "[{}] ", g.join(" && ")).unwrap();
            }
            match &t.assign {
                Some((v, e)) => writeln!(out, "{v} := {e};").unwrap(),
                None => writeln!(out, "skip;").unwrap(),
            }
        }
        writeln!(out, "}}").unwrap();
    }
    out
}

fn bare_atom(a: &Atom) -> String {
    format!("{} {} {}", a.lhs, a.rel.symbol(), a.rhs)
}

/// Parses a property given on its own, e.g. from the command line.
pub fn parse_property(src: &str) -> Result<Formula, FrontendError> {
    Ok(Formula::parse(src)?)
}

/// Parses a linear term on its own.
pub fn parse_term(src: &str) -> Result<LinTerm, FrontendError> {
    Ok(LinTerm::parse(src)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ModelError, TransId};

    const COUPLED: &str = "\
// two processes racing on x
shared x = 0
property always x <= 8

process P1 {
  0 -> 1 : x := x + 1;
  1 -> 2 : x := x + 1;
}
process P2 {
  0 -> 1 : x := 2*x;
  1 -> 2 : [true] x := 2x;
}
";

    #[test]
    fn parses_coupled_program() {
        let p = parse(COUPLED).unwrap();
        assert_eq!(p.processes.len(), 2);
        assert_eq!(p.transitions.len(), 4);
        assert_eq!(p.property, Formula::parse("x <= 8").unwrap());
        assert_eq!(p.processes[1].transitions, vec![TransId(2), TransId(3)]);
        assert_eq!(parse(&render(&p)).unwrap(), p);
    }

    #[test]
    fn minimal_program() {
        let p = parse("process P { 0 -> 1 : skip; }").unwrap();
        assert_eq!(p.processes.len(), 1);
        assert_eq!(p.property, Formula::True);
    }

    #[test]
    fn resource_in_guard_is_rejected() {
        let src = "shared x = 0\nresource x <= 8\nprocess P {\n 0 -> 1 : [x <= 3] skip;\n}\n";
        assert!(matches!(
            parse(src),
            Err(FrontendError::Semantic(ModelError::ResourceInGuard { .. }))
        ));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let src = "shared x = 0\nprocess P {\n  0 -> 1 x := 1;\n}\n";
        match parse(src) {
            Err(FrontendError::Syntax(e)) => assert_eq!((e.line, e.col), (3, 10)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cycles_are_rejected() {
        let src = "process P {\n 0 -> 1 : skip;\n 1 -> 0 : skip;\n}\n";
        assert!(matches!(parse(src), Err(FrontendError::Semantic(ModelError::Cycle(_)))));
    }

    #[test]
    fn full_grammar_round_trips() {
        let src = "\
shared f = *
shared r = 0
local P.l = -2
assume 0 <= f
assume f <= 1
flag f
resource r <= 2*f + 4
property always (r <= 4 && (f = 1 || P.l < 0))
process P {
  0 -> 1 : [f = 0 && P.l != 3] f := 1;
  0 -> 2 : r := r - 1;
  1 -> 2 : P.l := -P.l + 7;
}
";
        let p = parse(src).unwrap();
        assert_eq!(p.resources().count(), 1);
        assert!(matches!(p.annotations[0], Annotation::Resource { .. }));
        assert_eq!(parse(&render(&p)).unwrap(), p);
    }
}

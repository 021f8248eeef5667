//! Line-oriented text form of an automaton, used for golden tests and as
//! the input format of `export-prism`.
//!
//! ```text
//! @action a
//! @state A
//! @state BAD unsafe
//! @initial A
//! A a 0.5:A 0.5:BAD
//! ```
//!
//! Directive lines start with `@`; every other non-blank line is one
//! transition `src action prob:dst [prob:dst ...]`. Lines starting with `#`
//! are comments. Names must not contain whitespace or `:`.

use std::fmt::Write as _;

use super::automaton::{AutomatonBuilder, ProbabilisticAutomaton};
use super::distribution::CategoricalDistribution;
use crate::error::{Error, Result};

pub fn to_text(pa: &ProbabilisticAutomaton) -> String {
    let mut out = String::new();
    for a in pa.action_names() {
        writeln!(out, "@action {a}").unwrap();
    }
    for s in 0..pa.num_states() {
        out.push_str("@state ");
        out.push_str(pa.state_name(s));
        for l in pa.labels(s) {
            out.push(' ');
            out.push_str(l);
        }
        out.push('\n');
    }
    if let Some(init) = pa.initial() {
        writeln!(out, "@initial {}", pa.state_name(init)).unwrap();
    }
    for t in pa.transitions() {
        write!(out, "{} {}", pa.state_name(t.source), pa.action_name(t.action)).unwrap();
        for (dst, p) in t.distribution.iter() {
            write!(out, " {}:{}", p, pa.state_name(*dst)).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn parse_text(text: &str) -> Result<ProbabilisticAutomaton> {
    let mut b = AutomatonBuilder::new();
    let mut names = std::collections::HashMap::new();
    let mut initial = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let err = |msg: String| Error::Parse { line: line_no, msg };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let head = parts.next().unwrap();
        match head {
            "@action" => {
                let name = parts.next().ok_or_else(|| err("missing action name".into()))?;
                b.add_action(name);
            }
            "@state" => {
                let name = parts.next().ok_or_else(|| err("missing state name".into()))?;
                if names.contains_key(name) {
                    return Err(err(format!("duplicate state {name}")));
                }
                let id = b.add_labelled_state(name, parts);
                names.insert(name.to_string(), id);
            }
            "@initial" => {
                let name = parts.next().ok_or_else(|| err("missing initial state".into()))?;
                initial = Some(
                    *names
                        .get(name)
                        .ok_or_else(|| err(format!("unknown state {name}")))?,
                );
            }
            d if d.starts_with('@') => return Err(err(format!("unknown directive {d}"))),
            src => {
                let src = *names
                    .get(src)
                    .ok_or_else(|| err(format!("unknown state {src}")))?;
                let action = parts.next().ok_or_else(|| err("missing action".into()))?;
                let action = b.add_action(action);
                let mut entries = Vec::new();
                for item in parts {
                    let (p, dst) = item
                        .split_once(':')
                        .ok_or_else(|| err(format!("expected prob:dst, got {item}")))?;
                    let p: f64 = p.parse().map_err(|_| err(format!("bad probability {p}")))?;
                    let dst = *names
                        .get(dst)
                        .ok_or_else(|| err(format!("unknown state {dst}")))?;
                    entries.push((dst, p));
                }
                let dist = CategoricalDistribution::new(entries).map_err(|e| err(e.to_string()))?;
                b.add_transition(src, action, dist)?;
            }
        }
    }
    if let Some(init) = initial {
        b.set_initial(init)?;
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    const CHAIN: &str = "\
@action a
@state A
@state BAD unsafe
@initial A
A a 0.5:A 0.5:BAD
";

    #[test]
    fn round_trip_is_textually_stable() {
        let pa = parse_text(CHAIN).unwrap();
        assert_eq!(pa.num_states(), 2);
        assert_eq!(pa.states_with_label("unsafe"), vec![1]);
        assert_eq!(to_text(&pa), CHAIN);
    }

    #[test]
    fn parse_errors_report_line() {
        let bad = "@state A\nA a 0.5:B\n";
        match parse_text(bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(parse_text("@state A\nA a 0.4:A\n").is_err());
        assert!(parse_text("@bogus\n").is_err());
    }
}

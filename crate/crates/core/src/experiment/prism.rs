//! PRISM-language export of a PA as an MDP, for cross-checking the bounded
//! safety values with an external model checker.

use std::fmt::Write as _;

use crate::model_check::{BoundedSafetyQuery, OptMode};
use crate::pa::ProbabilisticAutomaton;
use crate::{Error, Result};

/// Larger models are refused.
pub const MAX_EXPORT_TRANSITIONS: usize = 1_000_000;

/// PRISM identifiers allow `[A-Za-z0-9_]`; the `a_` prefix keeps them clear
/// of keywords and leading digits.
fn action_ident(name: &str) -> String {
    let body: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' })
        .collect();
    format!("a_{body}")
}

/// The model file and the properties file.
pub fn export_prism(pa: &ProbabilisticAutomaton, query: &BoundedSafetyQuery) -> Result<(String, String)> {
    if pa.num_transitions() > MAX_EXPORT_TRANSITIONS {
        return Err(Error::TooLarge(format!(
            "{} transitions exceed the export limit of {MAX_EXPORT_TRANSITIONS}",
            pa.num_transitions()
        )));
    }
    if pa.num_states() == 0 {
        return Err(Error::InvalidAutomaton("no states to export".into()));
    }
    let n = pa.num_states();
    let mut m = String::new();
    writeln!(m, "// {n} states, {} transitions", pa.num_transitions()).unwrap();
    writeln!(m, "// state index = position in the automaton; terminal states loop").unwrap();
    m.push_str("mdp\n\nmodule pa\n");
    writeln!(m, "  s : [0..{}] init {};", n - 1, pa.initial().unwrap_or(0)).unwrap();
    m.push('\n');
    for s in 0..n {
        let ts = pa.transitions_from(s);
        if ts.is_empty() {
            writeln!(m, "  [] s={s} -> 1:(s'={s});").unwrap();
            continue;
        }
        for t in ts {
            let updates: Vec<String> = t
                .distribution
                .iter()
                .map(|(d, p)| format!("{p}:(s'={d})"))
                .collect();
            writeln!(
                m,
                "  [{}] s={s} -> {};",
                action_ident(pa.action_name(t.action)),
                updates.join(" + ")
            )
            .unwrap();
        }
    }
    m.push_str("endmodule\n\n");
    let bad: Vec<String> = query.unsafe_states().map(|s| format!("s={s}")).collect();
    if bad.is_empty() {
        m.push_str("label \"unsafe\" = false;\n");
    } else {
        writeln!(m, "label \"unsafe\" = {};", bad.join(" | ")).unwrap();
    }

    let t = query.horizon();
    let (safe_op, reach_op) = match query.mode() {
        OptMode::Min => ("Pmin", "Pmax"),
        OptMode::Max => ("Pmax", "Pmin"),
    };
    let mut p = String::new();
    writeln!(p, "// probability of avoiding \"unsafe\" for {t} steps").unwrap();
    writeln!(p, "{safe_op}=? [ G<={t} !\"unsafe\" ];").unwrap();
    writeln!(p, "// bounded-until dual: the line above equals 1 minus this one").unwrap();
    writeln!(p, "{reach_op}=? [ true U<={t} \"unsafe\" ];").unwrap();
    Ok((m, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pa::{AutomatonBuilder, CategoricalDistribution};

    #[test]
    fn identifiers_are_sanitized() {
        assert_eq!(action_ident("r10_f1"), "a_r10_f1");
        assert_eq!(action_ident("go-left"), "a_go_left");
        assert_eq!(action_ident("1"), "a_1");
    }

    #[test]
    fn refuses_large_models() {
        let mut b = AutomatonBuilder::new();
        let s = b.add_state("s");
        let a = b.add_action("a");
        for _ in 0..=MAX_EXPORT_TRANSITIONS {
            b.add_transition(s, a, CategoricalDistribution::point(s)).unwrap();
        }
        let pa = b.build().unwrap();
        let q = BoundedSafetyQuery::new(&pa, [], 1, OptMode::Min).unwrap();
        assert!(matches!(export_prism(&pa, &q), Err(Error::TooLarge(_))));
    }
}

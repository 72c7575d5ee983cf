//! ISCAS `.bench` reader and writer.

use std::fmt::Write;

use super::{validate, Gate, Netlist};
use crate::error::{Error, Result};
use crate::library::GateFunction;

fn function_keyword(keyword: &str) -> Option<GateFunction> {
    match keyword.to_ascii_uppercase().as_str() {
        "AND" => Some(GateFunction::And),
        "NAND" => Some(GateFunction::Nand),
        "OR" => Some(GateFunction::Or),
        "NOR" => Some(GateFunction::Nor),
        "XOR" => Some(GateFunction::Xor),
        "XNOR" => Some(GateFunction::Xnor),
        "NOT" => Some(GateFunction::Not),
        "BUFF" | "BUF" => Some(GateFunction::Buf),
        _ => None,
    }
}

/// Splits `NAME(args)` into the name and the comma-separated arguments.
fn call(text: &str, line: usize) -> Result<(&str, Vec<String>)> {
    let syntax = |message: &str| Error::Parse {
        line,
        message: format!("{message}: `{text}`"),
    };
    let open = text.find('(').ok_or_else(|| syntax("expected `(`"))?;
    let inner = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| syntax("expected `)` at end of line"))?;
    let name = text[..open].trim();
    if name.is_empty() {
        return Err(syntax("missing keyword"));
    }
    let args: Vec<String> = inner.split(',').map(|a| a.trim().to_owned()).collect();
    if args
        .iter()
        .any(|a| a.is_empty() || a.contains(char::is_whitespace) || a.contains('('))
    {
        return Err(syntax("malformed net list"));
    }
    Ok((name, args))
}

/// Parses a `.bench` document and validates it as a combinational DAG.
///
/// Gates keep file order. `BUFF` is read as a buffer.
pub fn parse_bench(document: &str) -> Result<Netlist> {
    let mut netlist = Netlist::default();
    for (i, raw) in document.lines().enumerate() {
        let line = i + 1;
        let text = raw.split('#').next().unwrap_or("").trim();
        if text.is_empty() {
            continue;
        }
        if let Some((lhs, rhs)) = text.split_once('=') {
            let output = lhs.trim();
            if output.is_empty() || output.contains(char::is_whitespace) {
                return Err(Error::Parse {
                    line,
                    message: format!("malformed gate output `{output}`"),
                });
            }
            let (keyword, inputs) = call(rhs.trim(), line)?;
            let function = function_keyword(keyword).ok_or_else(|| Error::UnknownFunction {
                line,
                keyword: keyword.to_owned(),
            })?;
            netlist.gates.push(Gate {
                name: output.to_owned(),
                function,
                inputs,
                output: output.to_owned(),
                line: Some(line),
            });
        } else {
            let (keyword, mut args) = call(text, line)?;
            if args.len() != 1 {
                return Err(Error::Parse {
                    line,
                    message: format!("{keyword} takes exactly one net"),
                });
            }
            let net = args.pop().expect("one argument");
            match keyword.to_ascii_uppercase().as_str() {
                "INPUT" => netlist.primary_inputs.push(net),
                "OUTPUT" => netlist.primary_outputs.push(net),
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!(
                            "expected INPUT, OUTPUT or an assignment, found `{keyword}`"
                        ),
                    })
                }
            }
        }
    }
    let diags = validate(&netlist);
    if diags.is_empty() {
        Ok(netlist)
    } else {
        Err(Error::InvalidNetlist(diags))
    }
}

/// Renders a netlist in `.bench` syntax (buffers as `BUFF`).
pub fn write_bench(netlist: &Netlist) -> String {
    let mut out = String::new();
    for pi in &netlist.primary_inputs {
        let _ = writeln!(out, "INPUT({pi})");
    }
    for po in &netlist.primary_outputs {
        let _ = writeln!(out, "OUTPUT({po})");
    }
    for g in &netlist.gates {
        let keyword = match g.function {
            GateFunction::Buf => "BUFF",
            f => f.as_str(),
        };
        let _ = writeln!(out, "{} = {}({})", g.output, keyword, g.inputs.join(", "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::Diagnostic;

    #[test]
    fn two_line_circuit() {
        let n = parse_bench("INPUT(a)\nb = NOT(a)\nOUTPUT(b)\n").unwrap();
        assert_eq!(n.gates.len(), 1);
        assert_eq!(n.gates[0].function, GateFunction::Not);
        assert_eq!(n.gates[0].line, Some(2));
    }

    #[test]
    fn unknown_function_reports_line() {
        let err = parse_bench("INPUT(a)\n\ny = FOO(a)\nOUTPUT(y)\n").unwrap_err();
        match err {
            Error::UnknownFunction { line, keyword } => {
                assert_eq!(line, 3);
                assert_eq!(keyword, "FOO");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn buff_becomes_buffer_and_comments_are_skipped() {
        let n = parse_bench("# header\nINPUT(a) # trailing\nOUTPUT(b)\nb = BUFF(a)\n").unwrap();
        assert_eq!(n.gates[0].function, GateFunction::Buf);
    }

    #[test]
    fn redefined_net_has_line() {
        let err = parse_bench("INPUT(a)\nOUTPUT(b)\nb = NOT(a)\nb = BUFF(a)\n").unwrap_err();
        match err {
            Error::InvalidNetlist(diags) => assert_eq!(
                diags,
                vec![Diagnostic::RedefinedNet {
                    net: "b".into(),
                    line: Some(4)
                }]
            ),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn undriven_input_has_line() {
        let err = parse_bench("INPUT(a)\nOUTPUT(b)\nb = AND(a, c)\n").unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("line 3") && msg.contains("undriven net c"),
            "{msg}"
        );
    }

    #[test]
    fn cycle_is_reported() {
        let err = parse_bench("OUTPUT(a)\na = NOT(b)\nb = NOT(a)\n").unwrap_err();
        assert!(
            matches!(err, Error::InvalidNetlist(ref d) if matches!(d[0], Diagnostic::Cycle { .. }))
        );
    }

    #[test]
    fn syntax_errors() {
        assert!(matches!(
            parse_bench("INPUT a\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_bench("INPUT(a)\nb = NOT(a\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_bench("INPUT(a, b)\n"),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn write_then_parse() {
        let src = "INPUT(a)\nINPUT(b)\nOUTPUT(y)\nn = NAND(a, b)\ny = BUFF(n)\n";
        let n = parse_bench(src).unwrap();
        assert_eq!(write_bench(&n), src);
    }
}

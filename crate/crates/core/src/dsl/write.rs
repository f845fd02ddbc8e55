use std::fmt::Write;

use super::{Document, Item, Param, Table};

/// Up to 12 significant digits; `inf` for infinity.
pub(super) fn number(x: f64) -> String {
    if x == f64::INFINITY {
        return "inf".into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn numbers(v: &[f64]) -> String {
    format!("[{}]", v.iter().map(|x| number(*x)).collect::<Vec<_>>().join(", "))
}

fn table(t: &Table) -> String {
    match t {
        Table::Flat(v) => numbers(v),
        Table::Rows(rows) => format!("[{}]", rows.iter().map(|r| numbers(r)).collect::<Vec<_>>().join(", ")),
    }
}

fn weights(beta: f64, alpha: f64) -> String {
    format!("beta={} alpha={}", number(beta), number(alpha))
}

pub(super) fn item(i: &Item) -> String {
    match i {
        Item::Var { name, domain } => format!("var {name} {{{}}}", domain.join(", ")),
        Item::Cpd { name, sources, targets, table: t } => {
            let src = if sources.is_empty() { String::new() } else { format!("{} ", sources.join(", ")) };
            format!("cpd {name} : {src}-> {} = {}", targets.join(", "), table(t))
        }
        Item::Edge { name, beta, alpha } => format!("edge {name} {}", weights(*beta, *alpha)),
        Item::Event { variable, value, beta, alpha } => format!("event {variable} = {value} {}", weights(*beta, *alpha)),
        Item::Data { name, variables, records } => {
            let recs: Vec<String> = records.iter().map(|r| format!("({})", r.join(", "))).collect();
            format!("data {name} over ({}) {{ {} }}", variables.join(", "), recs.join(", "))
        }
        Item::Factor { name, scope, values, theta } => {
            format!("factor {name} over ({}) = {} theta={}", scope.join(", "), numbers(values), number(*theta))
        }
        Item::Values { name, scope, values } => format!("values {name} over ({}) = {}", scope.join(", "), numbers(values)),
        Item::Query { kind, params } => {
            let mut s = format!("query {kind}");
            for (k, p) in params {
                match p {
                    Param::Number(v) => write!(s, " {k}={}", number(*v)),
                    Param::Word(w) => write!(s, " {k}={w}"),
                }
                .expect("writing to a string");
            }
            s
        }
    }
}

pub(super) fn document(doc: &Document) -> String {
    let mut out = String::new();
    let mut last = None;
    for d in doc.canonical() {
        let rank = d.item.rank();
        if last.is_some_and(|r| r != rank) {
            out.push('\n');
        }
        last = Some(rank);
        out.push_str(&item(&d.item));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::super::{parse, serialize};
    use super::*;

    #[test]
    fn number_formats() {
        assert_eq!(number(1.0), "1");
        assert_eq!(number(0.25), "0.25");
        assert_eq!(number(1.0 / 3.0), "0.333333333333");
        assert_eq!(number(f64::INFINITY), "inf");
        assert_eq!(number(-0.0), "0");
        assert_eq!(number(1e-20), "1e-20");
        assert_eq!(number(-2.5e20), "-2.5e20");
    }

    #[test]
    fn thirds_round_trip() {
        let text = "var X {a, b, c}\ncpd p : -> X = [0.3333333333333333, 0.3333333333333333, 0.3333333333333334]\n";
        let once = serialize(&parse(text).unwrap());
        let doc = parse(&once).unwrap();
        let p = doc.cpd("p").unwrap().unwrap();
        assert!(p.table().iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12));
        assert_eq!(serialize(&doc), once);
    }

    #[test]
    fn infinity_round_trips() {
        let text = "var X {a, b}\nevent X = a\n";
        let once = serialize(&parse(text).unwrap());
        assert!(once.contains("beta=inf"), "{once}");
        assert_eq!(serialize(&parse(&once).unwrap()), once);
    }

    #[test]
    fn canonical_order() {
        let text = "edge q\nvar Y {y0, y1}\ncpd q : -> Y = [1, 0]\nvar X {x0}\n";
        let out = serialize(&parse(text).unwrap());
        assert_eq!(out, "var X {x0}\nvar Y {y0, y1}\n\ncpd q : -> Y = [1, 0]\n\nedge q beta=1 alpha=1\n");
    }
}

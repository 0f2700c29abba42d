//! Text renderings of a symbolic model and the parser for their
//! machine-readable block.

use serde::Serialize;

use crate::gfunc::{Config, EvalPolicy, MeijerGParams};
use crate::pursuit::{norm, PursuitError, Result, RidgeTerm, SymbolicModel};

const MACHINE_START: &str = "#machine";
const MACHINE_END: &str = "#end";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExpressionDoc {
    /// Display form followed by a full-precision `#machine` block.
    pub plain: String,
    pub latex: String,
}

/// Formats `x` with `digits` significant digits, trimming trailing zeros.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let digits = digits.max(1);
    let e = x.abs().log10().floor() as i32;
    if (-4..6).contains(&e) {
        let decimals = (digits as i32 - 1 - e).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a new digit, e.g. 9.999996 -> 10.00000
        trim_zeros(&s)
    } else {
        let s = format!("{:.*e}", digits - 1, x);
        let (mant, exp) = s.split_once('e').unwrap();
        format!("{}e{}", trim_zeros(mant), exp)
    }
}

fn trim_zeros(s: &str) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s.to_string()
    }
}

fn list(xs: &[f64], sep: &str) -> String {
    if xs.is_empty() {
        return "-".into();
    }
    xs.iter().map(|x| fmt_sig(*x, 6)).collect::<Vec<_>>().join(sep)
}

fn exact(xs: &[f64]) -> String {
    xs.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(",")
}

fn signed(w: f64, first: bool) -> String {
    match (first, w < 0.0) {
        (true, _) => fmt_sig(w, 6),
        (false, true) => format!("- {}", fmt_sig(-w, 6)),
        (false, false) => format!("+ {}", fmt_sig(w, 6)),
    }
}

/// `c1·x1 - c2·x2 + ...` with the sign folded into the operator.
fn linear_form(coeffs: &[f64], var: impl Fn(usize) -> String) -> String {
    let mut out = String::new();
    for (j, v) in coeffs.iter().enumerate() {
        let mag = fmt_sig(v.abs(), 6);
        match (j, v.is_sign_negative()) {
            (0, false) => out.push_str(&format!("{mag}{}", var(j))),
            (0, true) => out.push_str(&format!("-{mag}{}", var(j))),
            (_, false) => out.push_str(&format!(" + {mag}{}", var(j))),
            (_, true) => out.push_str(&format!(" - {mag}{}", var(j))),
        }
    }
    out
}

fn projection_plain(k: usize, t: &RidgeTerm) -> String {
    let lin = linear_form(&t.direction, |j| format!("·x{}", j + 1));
    let denom = norm(&t.direction) * (t.direction.len() as f64).sqrt();
    format!("z{k} = [{lin}]^+ / {}", fmt_sig(denom, 6))
}

fn render_plain(model: &SymbolicModel) -> String {
    let mut out = String::new();
    if model.terms.is_empty() {
        out.push_str("f̂(x) = 0\n");
    } else {
        for (i, t) in model.terms.iter().enumerate() {
            let c = t.g.config;
            let lead = if i == 0 { "f̂(x) = " } else { "       " };
            out.push_str(&format!(
                "{lead}{} · G^{{{},{}}}_{{{},{}}}({}; {} | {}·z{}^{})\n",
                signed(t.weight, i == 0),
                c.m,
                c.n,
                c.p,
                c.q,
                list(&t.g.a, ", "),
                list(&t.g.b, ", "),
                fmt_sig(t.g.scale, 6),
                i + 1,
                fmt_sig(t.g.exponent, 6),
            ));
        }
        out.push_str("where\n");
        for (i, t) in model.terms.iter().enumerate() {
            out.push_str(&format!("  {}\n", projection_plain(i + 1, t)));
        }
    }
    out.push_str(MACHINE_START);
    out.push('\n');
    out.push_str(&format!("dim={}\n", model.dim));
    let p = &model.policy;
    out.push_str(&format!(
        "policy series_tol={:e} max_terms={} pole_jitter={:e} z_clamp={:e}\n",
        p.series_tol, p.max_terms, p.pole_jitter, p.z_clamp
    ));
    for (lo, range) in &model.feature_scaling {
        out.push_str(&format!("scaling min={lo:e} range={range:e}\n"));
    }
    for t in &model.terms {
        out.push_str(&format!(
            "term w={:e} cfg={} a={} b={} r={:e} s={:e} v={}\n",
            t.weight,
            t.g.config,
            exact(&t.g.a),
            exact(&t.g.b),
            t.g.exponent,
            t.g.scale,
            exact(&t.direction),
        ));
    }
    out.push_str(MACHINE_END);
    out.push('\n');
    out
}

fn latex_list(xs: &[f64]) -> String {
    if xs.is_empty() {
        "-".into()
    } else {
        list(xs, ",\\ ")
    }
}

fn render_latex(model: &SymbolicModel) -> String {
    if model.terms.is_empty() {
        return "\\hat{f}(x) = 0".into();
    }
    let mut parts = Vec::new();
    for (i, t) in model.terms.iter().enumerate() {
        let c = t.g.config;
        parts.push(format!(
            "{}\\, G^{{{},{}}}_{{{},{}}}\\!\\left(\\left.{{{} \\atop {}}}\\right|\\, {}\\, z_{{{}}}^{{{}}}\\right)",
            signed(t.weight, i == 0),
            c.m,
            c.n,
            c.p,
            c.q,
            latex_list(&t.g.a),
            latex_list(&t.g.b),
            fmt_sig(t.g.scale, 6),
            i + 1,
            fmt_sig(t.g.exponent, 6),
        ));
    }
    let mut out = format!("\\hat{{f}}(x) = {}", parts.join(" "));
    for (i, t) in model.terms.iter().enumerate() {
        let lin = linear_form(&t.direction, |j| format!("\\, x_{{{}}}", j + 1));
        let denom = norm(&t.direction) * (t.direction.len() as f64).sqrt();
        out.push_str(&format!(
            ",\\quad z_{{{}}} = \\frac{{[{lin}]^{{+}}}}{{{}}}",
            i + 1,
            fmt_sig(denom, 6)
        ));
    }
    out
}

pub fn to_expression(model: &SymbolicModel) -> ExpressionDoc {
    ExpressionDoc {
        plain: render_plain(model),
        latex: render_latex(model),
    }
}

fn perr(line: usize, msg: impl Into<String>) -> PursuitError {
    PursuitError::Parse {
        line,
        msg: msg.into(),
    }
}

fn fields(line: usize, rest: &str) -> Result<Vec<(&str, &str)>> {
    rest.split_whitespace()
        .map(|tok| tok.split_once('=').ok_or_else(|| perr(line, format!("expected key=value, got {tok:?}"))))
        .collect()
}

fn get<'a>(line: usize, kv: &[(&str, &'a str)], key: &str) -> Result<&'a str> {
    kv.iter()
        .find(|(k, _)| *k == key)
        .map(|(_, v)| *v)
        .ok_or_else(|| perr(line, format!("missing {key}")))
}

fn num<T: std::str::FromStr>(line: usize, s: &str) -> Result<T> {
    s.parse().map_err(|_| perr(line, format!("bad number {s:?}")))
}

fn nums(line: usize, s: &str) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',').map(|t| num(line, t)).collect()
}

/// Rebuilds a model from the `#machine` block of a plain rendering.
pub fn parse_expression(text: &str) -> Result<SymbolicModel> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    lines
        .by_ref()
        .find(|(_, l)| *l == MACHINE_START)
        .ok_or_else(|| perr(0, "no #machine block"))?;
    let mut dim = None;
    let mut policy = EvalPolicy::default();
    let mut scaling = Vec::new();
    let mut terms = Vec::new();
    let mut closed = false;
    for (ln, l) in lines {
        if l == MACHINE_END {
            closed = true;
            break;
        }
        if l.is_empty() {
            continue;
        }
        if let Some(v) = l.strip_prefix("dim=") {
            dim = Some(num::<usize>(ln, v)?);
            continue;
        }
        let (head, rest) = l.split_once(' ').unwrap_or((l, ""));
        let kv = fields(ln, rest)?;
        match head {
            "policy" => {
                policy = EvalPolicy {
                    series_tol: num(ln, get(ln, &kv, "series_tol")?)?,
                    max_terms: num(ln, get(ln, &kv, "max_terms")?)?,
                    pole_jitter: num(ln, get(ln, &kv, "pole_jitter")?)?,
                    z_clamp: num(ln, get(ln, &kv, "z_clamp")?)?,
                };
            }
            "scaling" => scaling.push((num(ln, get(ln, &kv, "min")?)?, num(ln, get(ln, &kv, "range")?)?)),
            "term" => {
                let config: Config = get(ln, &kv, "cfg")?.parse().map_err(|e| perr(ln, format!("{e}")))?;
                let g = MeijerGParams {
                    config,
                    a: nums(ln, get(ln, &kv, "a")?)?,
                    b: nums(ln, get(ln, &kv, "b")?)?,
                    exponent: num(ln, get(ln, &kv, "r")?)?,
                    scale: num(ln, get(ln, &kv, "s")?)?,
                    extended: !config.in_config_set(),
                };
                g.validate().map_err(|e| perr(ln, format!("{e}")))?;
                terms.push(RidgeTerm {
                    weight: num(ln, get(ln, &kv, "w")?)?,
                    direction: nums(ln, get(ln, &kv, "v")?)?,
                    g,
                });
            }
            other => return Err(perr(ln, format!("unknown entry {other:?}"))),
        }
    }
    if !closed {
        return Err(perr(0, "unterminated #machine block"));
    }
    let dim = dim.ok_or_else(|| perr(0, "missing dim"))?;
    if scaling.is_empty() {
        scaling = vec![(0.0, 1.0); dim];
    }
    let model = SymbolicModel {
        dim,
        terms,
        feature_scaling: scaling,
        policy,
    };
    model.validate()?;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> SymbolicModel {
        let mut m = SymbolicModel::empty(3);
        m.terms.push(RidgeTerm {
            weight: 1.0 / 3.0,
            direction: vec![0.9, -0.3, 0.4],
            g: MeijerGParams::new(Config::new(1, 0, 0, 2), vec![], vec![0.5, 1e-17])
                .unwrap()
                .with_transform(1.25, 2.0f64.sqrt())
                .unwrap(),
        });
        m.terms.push(RidgeTerm {
            weight: -0.123456789,
            direction: vec![0.1, 1.0, 0.5],
            g: MeijerGParams::new(Config::new(1, 0, 0, 1), vec![], vec![0.0]).unwrap(),
        });
        m
    }

    #[test]
    fn significant_digits() {
        assert_eq!(fmt_sig(0.6065306597, 6), "0.606531");
        assert_eq!(fmt_sig(1.0, 6), "1");
        assert_eq!(fmt_sig(-123456.7, 6), "-123457");
        assert_eq!(fmt_sig(1234567.0, 6), "1.23457e6");
        assert_eq!(fmt_sig(1.5e-7, 6), "1.5e-7");
        assert_eq!(fmt_sig(9.9999996, 6), "10");
        assert_eq!(fmt_sig(0.0, 6), "0");
    }

    #[test]
    fn empty_model() {
        let doc = to_expression(&SymbolicModel::empty(2));
        assert!(doc.plain.starts_with("f̂(x) = 0\n"));
        assert_eq!(parse_expression(&doc.plain).unwrap(), SymbolicModel::empty(2));
    }

    #[test]
    fn exp_term_token_and_weight() {
        let doc = to_expression(&model());
        assert!(doc.plain.contains("G^{1,0}_{0,1}"));
        assert!(doc.plain.contains("- 0.123457 ·"));
        assert!(doc.plain.contains("z1 = [0.9·x1 - 0.3·x2 + 0.4·x3]^+"), "{}", doc.plain);
        assert!(doc.latex.contains("G^{1,0}_{0,1}"));
        assert_eq!(doc, to_expression(&model()));
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let back = parse_expression(&to_expression(&m).plain).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_expression("f̂(x) = 0").is_err());
        let text = to_expression(&model()).plain.replace("#end\n", "");
        assert!(parse_expression(&text).is_err());
        let text = to_expression(&model()).plain.replace("w=", "weight=");
        assert!(matches!(parse_expression(&text), Err(PursuitError::Parse { .. })));
    }
}

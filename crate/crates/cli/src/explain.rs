use std::fmt::Write;

use sympursuit::interpret::{feature_importance, fmt_sig, taylor1, taylor2, to_expression, Taylor1Report};
use sympursuit::io::ModelFile;

use crate::{display_part, scaled_rows, Failure};

fn vec_line(v: &[f64]) -> String {
    v.iter().map(|x| fmt_sig(*x, 6)).collect::<Vec<_>>().join(", ")
}

fn first_order(out: &mut String, r: &Taylor1Report) {
    writeln!(out, "first order: f1(x) = c0 + v~ . (x - x0) = c~ + v~ . x").unwrap();
    writeln!(out, "  c0 = {}", fmt_sig(r.c0, 6)).unwrap();
    writeln!(out, "  c~ = {}", fmt_sig(r.offset, 6)).unwrap();
    for (k, ((z, on), c1)) in r.z.iter().zip(&r.active).zip(&r.c1).enumerate() {
        let state = if *on { "active" } else { "inactive" };
        writeln!(out, "  term {}: z = {}  c1 = {}  ({state})", k + 1, fmt_sig(*z, 6), fmt_sig(*c1, 6)).unwrap();
    }
    writeln!(out, "  v~ = ({})", vec_line(&r.v_tilde)).unwrap();
}

/// Text report with Taylor coefficients, importance and CSV blocks. All
/// quantities are in unit-cube features and scaled labels.
pub fn report(mf: &ModelFile, raw_point: &[f64], order: u8) -> Result<String, Failure> {
    let s = &mf.scaling;
    let x0 = scaled_rows(s, &[raw_point.to_vec()])?.remove(0);
    let mut out = String::new();
    let w = &mut out;
    writeln!(w, "point (original units): ({})", vec_line(raw_point)).unwrap();
    writeln!(w, "point (unit cube): ({})", vec_line(&x0)).unwrap();
    writeln!(w, "units: features min-max scaled to [0,1], labels scaled to [0,1]").unwrap();
    writeln!(w).unwrap();
    w.push_str(display_part(&to_expression(&mf.model).plain));
    writeln!(w).unwrap();

    let second = if order == 2 { Some(taylor2(&mf.model, &x0)?) } else { None };
    let first = match &second {
        Some(t2) => t2.first.clone(),
        None => taylor1(&mf.model, &x0)?,
    };
    for n in &first.notes {
        writeln!(w, "note: {n}").unwrap();
    }
    first_order(w, &first);
    if let Some(t2) = &second {
        writeln!(w, "second order: f2(x) = f1(x) + (x - x0)' M (x - x0), Hessian = 2M").unwrap();
        for (k, (c2, neg)) in t2.c2.iter().zip(&t2.negligible).enumerate() {
            let flag = if *neg { "  (negligible)" } else { "" };
            writeln!(w, "  term {}: c2 = {}{flag}", k + 1, fmt_sig(*c2, 6)).unwrap();
        }
    }
    let imp = feature_importance(&mf.model, &x0, true)?;
    writeln!(w, "importance (unit norm):").unwrap();
    for (k, v) in imp.iter().enumerate() {
        writeln!(w, "  {}: {}", s.name(k), fmt_sig(*v, 6)).unwrap();
    }

    writeln!(w, "\n#csv v_tilde").unwrap();
    writeln!(w, "feature,v_tilde,importance").unwrap();
    for (k, (v, i)) in first.v_tilde.iter().zip(&imp).enumerate() {
        writeln!(w, "{},{v},{i}", s.name(k)).unwrap();
    }
    if let Some(t2) = &second {
        writeln!(w, "#csv interaction").unwrap();
        let names: Vec<String> = (0..s.dim()).map(|k| s.name(k)).collect();
        writeln!(w, "feature,{}", names.join(",")).unwrap();
        for (k, row) in t2.interaction.iter().enumerate() {
            let cells = row.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",");
            writeln!(w, "{},{cells}", names[k]).unwrap();
        }
    }
    Ok(out)
}

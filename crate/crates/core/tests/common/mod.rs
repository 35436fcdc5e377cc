use std::collections::BTreeMap;

use agrisc::formulation::{EqTag, Family, Sense};
use agrisc::{build_model, BuildOptions, Instance};

/// Interval of `v` allowed by the McCormick rows and its bounds at fixed
/// `λ` and `u`, for every link-mode-day-scenario of `inst`.
pub fn mccormick_intervals_are_points(inst: &Instance) -> usize {
    let ir = build_model(inst, BuildOptions { include_variance: false, ..Default::default() });
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (r, row) in ir.rows.iter().enumerate() {
        if row.tag != EqTag::McCormick {
            continue;
        }
        let v = row
            .terms
            .iter()
            .find(|(id, _)| matches!(ir.vars()[*id].key.family, Family::VPw | Family::VWk))
            .expect("McCormick row has a product variable")
            .0;
        groups.entry(v).or_default().push(r);
    }
    let mut checked = 0;
    for (v, rs) in &groups {
        assert_eq!(rs.len(), 3);
        let key = &ir.vars()[*v].key;
        let idx: Vec<usize> = key.indices().collect();
        let (lf, uf) = if key.family == Family::VPw { (Family::LambdaPw, Family::UPw) } else { (Family::LambdaWk, Family::UWk) };
        let lam = ir.id(lf, &idx);
        let u = ir.id(uf, &idx);
        let umax = ir.vars()[u].upper as i64;
        assert!(umax >= 1);
        for l in 0..=1 {
            for k in 0..=umax {
                let (mut lo, mut hi) = (ir.vars()[*v].lower, ir.vars()[*v].upper);
                for &r in rs {
                    let row = &ir.rows[r];
                    let mut a_v = 0.0;
                    let mut rest = 0.0;
                    for &(id, c) in &row.terms {
                        if id == *v {
                            a_v += c;
                        } else if id == lam {
                            rest += c * l as f64;
                        } else if id == u {
                            rest += c * k as f64;
                        } else {
                            panic!("unexpected variable in McCormick row");
                        }
                    }
                    let bound = (row.rhs - rest) / a_v;
                    let upper = matches!(row.sense, Sense::Le) == (a_v > 0.0);
                    match row.sense {
                        Sense::Eq => {
                            lo = lo.max(bound);
                            hi = hi.min(bound);
                        }
                        _ if upper => hi = hi.min(bound),
                        _ => lo = lo.max(bound),
                    }
                }
                let want = (l * k) as f64;
                assert!((lo - want).abs() < 1e-9 && (hi - want).abs() < 1e-9, "{key}: λ={l} u={k} gives [{lo}, {hi}]");
                checked += 1;
            }
        }
    }
    checked
}

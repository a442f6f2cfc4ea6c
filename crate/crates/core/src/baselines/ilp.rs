//! Utilitarian-welfare integer program in CPLEX LP text format.
//!
//! Variables `x_i_g` are 0/1 seat indicators. Only approved types get a
//! variable (anything else is fixed to zero by the agent's constraints), and
//! agent rows that cannot bind on 0/1 variables are dropped.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::instance::Instance;

const TERMS_PER_LINE: usize = 8;

fn var(i: usize, g: usize) -> String {
    format!("x_{i}_{g}")
}

fn write_terms(out: &mut impl Write, terms: &[(i64, String)]) -> io::Result<()> {
    for (k, (coef, name)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            write!(out, "\n   ")?;
        }
        let sign = if *coef < 0 { "-" } else { "+" };
        let mag = coef.unsigned_abs();
        match (k, mag) {
            (0, 1) if *coef > 0 => write!(out, " {name}")?,
            (0, _) if *coef > 0 => write!(out, " {mag} {name}")?,
            (_, 1) => write!(out, " {sign} {name}")?,
            _ => write!(out, " {sign} {mag} {name}")?,
        }
    }
    Ok(())
}

pub fn write_ilp(instance: &Instance, out: &mut impl Write) -> io::Result<()> {
    let n = instance.num_agents();
    let m = instance.num_types();
    let approved: Vec<Vec<usize>> = instance.valuations.iter().map(|v| v.approved().to_vec()).collect();
    let objective: Vec<(i64, String)> =
        approved.iter().enumerate().flat_map(|(i, gs)| gs.iter().map(move |&g| (1, var(i, g)))).collect();

    writeln!(out, "\\ Utilitarian welfare: {n} agents, {m} item types")?;
    writeln!(out, "Maximize")?;
    write!(out, " obj:")?;
    if objective.is_empty() {
        write!(out, " 0")?;
    } else {
        write_terms(out, &objective)?;
    }
    writeln!(out)?;

    writeln!(out, "Subject To")?;
    for (i, val) in instance.valuations.iter().enumerate() {
        let cons = val.constraints();
        for (r, (row, &limit)) in cons.rows().iter().zip(cons.limits()).enumerate() {
            let terms: Vec<(i64, String)> =
                approved[i].iter().filter(|&&g| row[g] != 0).map(|&g| (row[g], var(i, g))).collect();
            let max_lhs: i64 = terms.iter().map(|(c, _)| (*c).max(0)).sum();
            if terms.is_empty() || max_lhs <= limit {
                continue;
            }
            write!(out, " a{i}_r{r}:")?;
            write_terms(out, &terms)?;
            writeln!(out, " <= {limit}")?;
        }
    }
    for (g, item) in instance.items.iter().enumerate() {
        let terms: Vec<(i64, String)> =
            (0..n).filter(|&i| approved[i].binary_search(&g).is_ok()).map(|i| (1, var(i, g))).collect();
        if terms.is_empty() {
            continue;
        }
        write!(out, " cap_{g}:")?;
        write_terms(out, &terms)?;
        writeln!(out, " <= {}", item.capacity)?;
    }

    if !objective.is_empty() {
        writeln!(out, "Binary")?;
        for (_, name) in &objective {
            writeln!(out, " {name}")?;
        }
    }
    writeln!(out, "End")
}

pub fn export_ilp(instance: &Instance, path: &Path) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_ilp(instance, &mut out)?;
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ItemType;

    fn render(inst: &Instance) -> String {
        let mut buf = Vec::new();
        write_ilp(inst, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn single_variable() {
        let inst = Instance::from_approvals(vec![ItemType::anonymous(0, 0, 1)], &[vec![0]], &[1]);
        let text = render(&inst);
        assert_eq!(
            text,
            "\\ Utilitarian welfare: 1 agents, 1 item types\nMaximize\n obj: x_0_0\nSubject To\n cap_0: x_0_0 <= 1\nBinary\n x_0_0\nEnd\n"
        );
    }

    #[test]
    fn empty_instance() {
        let inst = Instance::from_approvals(vec![ItemType::anonymous(0, 0, 3)], &[], &[]);
        let text = render(&inst);
        assert!(text.contains(" obj: 0\n"));
        assert!(!text.contains("x_"));
        assert!(text.ends_with("End\n"));
    }

    #[test]
    fn golden_three_by_three() {
        // A and B share slot 0, C is alone in slot 1.
        let items = vec![ItemType::anonymous(0, 0, 1), ItemType::anonymous(1, 0, 2), ItemType::anonymous(2, 1, 1)];
        let inst = Instance::from_approvals(items, &[vec![0, 1, 2], vec![1, 2], vec![0, 2]], &[2, 1, 2]);
        let expected = "\
\\ Utilitarian welfare: 3 agents, 3 item types
Maximize
 obj: x_0_0 + x_0_1 + x_0_2 + x_1_1 + x_1_2 + x_2_0 + x_2_2
Subject To
 a0_r0: x_0_0 + x_0_1 <= 1
 a0_r2: x_0_0 + x_0_1 + x_0_2 <= 2
 a1_r2: x_1_1 + x_1_2 <= 1
 cap_0: x_0_0 + x_2_0 <= 1
 cap_1: x_0_1 + x_1_1 <= 2
 cap_2: x_0_2 + x_1_2 + x_2_2 <= 1
Binary
 x_0_0
 x_0_1
 x_0_2
 x_1_1
 x_1_2
 x_2_0
 x_2_2
End
";
        assert_eq!(render(&inst), expected);
        assert_eq!(render(&inst), render(&inst.clone()));
    }
}

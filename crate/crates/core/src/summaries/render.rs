//! Side-by-side treated/control coefficient tables.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::stars::StarScheme;
use super::SummaryError;
use crate::estimator::EventStudyFit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TableFormat {
    Csv,
    Latex,
}

impl std::str::FromStr for TableFormat {
    type Err = SummaryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(TableFormat::Csv),
            "latex" | "tex" => Ok(TableFormat::Latex),
            other => Err(SummaryError::InvalidFormat(other.to_string())),
        }
    }
}

/// Two decimals, ties to even, never `-0.00`.
pub fn fmt2(x: f64) -> String {
    let s = format!("{x:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Formatted cells of one bin on one side of the table.
#[derive(Debug, Clone, PartialEq)]
pub struct BinCells {
    pub estimate: String,
    pub stars: String,
    pub se: String,
    pub t: String,
    pub p: String,
}

fn bin_cells(fit: &EventStudyFit, bin: i32, scheme: &StarScheme) -> Option<BinCells> {
    let est = fit.coefficient(bin)?;
    Some(match fit.t_test(bin) {
        Some(test) => BinCells {
            estimate: fmt2(est),
            stars: scheme.label(test.p).to_string(),
            se: fmt2(fit.se(bin).unwrap_or(f64::NAN)),
            t: if test.t.is_finite() {
                fmt2(test.t)
            } else {
                String::new()
            },
            p: fmt2(test.p),
        },
        None => BinCells {
            estimate: fmt2(est),
            stars: String::new(),
            se: String::new(),
            t: String::new(),
            p: String::new(),
        },
    })
}

fn footer(fit: &EventStudyFit) -> [(&'static str, String); 4] {
    let opt = |v: Option<f64>| v.map(fmt2).unwrap_or_default();
    [
        ("Observations", fit.n_obs.to_string()),
        ("RMSE", fmt2(fit.rmse)),
        ("Adj. R2", opt(fit.adj_r2)),
        ("Within R2", opt(fit.within_r2)),
    ]
}

fn thousands(n: &str, sep: &str) -> String {
    let digits: Vec<char> = n.chars().collect();
    let mut out = String::new();
    for (i, c) in digits.iter().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push_str(sep);
        }
        out.push(*c);
    }
    out
}

/// Render a coefficient table. With `control = None` only the treated
/// block is emitted.
pub fn render_table(
    treated: &EventStudyFit,
    control: Option<&EventStudyFit>,
    format: TableFormat,
    scheme: &StarScheme,
) -> String {
    let fits: Vec<&EventStudyFit> = std::iter::once(treated).chain(control).collect();
    let bins: BTreeSet<i32> = fits.iter().flat_map(|f| f.bins.iter().copied()).collect();
    match format {
        TableFormat::Csv => render_csv(&fits, &bins, scheme),
        TableFormat::Latex => render_latex(&fits, &bins, scheme),
    }
}

const SIDES: [&str; 2] = ["treated", "control"];

fn render_csv(fits: &[&EventStudyFit], bins: &BTreeSet<i32>, scheme: &StarScheme) -> String {
    let mut out = String::from("bin");
    for side in &SIDES[..fits.len()] {
        write!(out, ",{side}_est,{side}_se,{side}_t,{side}_p").unwrap();
    }
    out.push('\n');
    for &bin in bins {
        out.push_str(&bin.to_string());
        for fit in fits {
            match bin_cells(fit, bin, scheme) {
                Some(c) => {
                    write!(out, ",{}{},{},{},{}", c.estimate, c.stars, c.se, c.t, c.p).unwrap()
                }
                None => out.push_str(",,,,"),
            }
        }
        out.push('\n');
    }
    let footers: Vec<_> = fits.iter().map(|f| footer(f)).collect();
    for row in 0..4 {
        out.push_str(footers[0][row].0);
        for f in &footers {
            write!(out, ",{},,,", f[row].1).unwrap();
        }
        out.push('\n');
    }
    out
}

fn render_latex(fits: &[&EventStudyFit], bins: &BTreeSet<i32>, scheme: &StarScheme) -> String {
    let blocks = fits.len();
    let mut out = String::new();
    writeln!(out, "\\begin{{tabular}}{{l{}}}", "cccc".repeat(blocks)).unwrap();
    out.push_str("\\toprule\n");
    let heads: Vec<String> = ["Treated", "Control"][..blocks]
        .iter()
        .map(|h| format!("\\multicolumn{{4}}{{c}}{{\\textbf{{{h}}}}}"))
        .collect();
    writeln!(out, " & {} \\\\", heads.join(" & ")).unwrap();
    let rules: Vec<String> = (0..blocks)
        .map(|b| format!("\\cmidrule(lr){{{}-{}}}", 2 + 4 * b, 5 + 4 * b))
        .collect();
    writeln!(out, "{}", rules.join("")).unwrap();
    writeln!(
        out,
        "Event Bin{} \\\\",
        " & Est. & SE & t & p".repeat(blocks)
    )
    .unwrap();
    out.push_str("\\midrule\n");
    for &bin in bins {
        out.push_str(&bin.to_string());
        for fit in fits {
            match bin_cells(fit, bin, scheme) {
                Some(c) => {
                    let stars = if c.stars.is_empty() {
                        String::new()
                    } else {
                        format!("$^{{{}}}$", c.stars)
                    };
                    write!(
                        out,
                        " & {}{} & {} & {} & {}",
                        c.estimate, stars, c.se, c.t, c.p
                    )
                    .unwrap();
                }
                None => out.push_str(" &  &  &  & "),
            }
        }
        out.push_str(" \\\\\n");
    }
    out.push_str("\\midrule\n");
    let footers: Vec<_> = fits.iter().map(|f| footer(f)).collect();
    let labels = ["Observations", "RMSE", "Adj. R$^2$", "Within R$^2$"];
    for (row, label) in labels.iter().enumerate() {
        out.push_str(label);
        for f in &footers {
            let v = if row == 0 {
                thousands(&f[row].1, "{,}")
            } else {
                f[row].1.clone()
            };
            write!(out, " & \\multicolumn{{4}}{{c}}{{{v}}}").unwrap();
        }
        out.push_str(" \\\\\n");
    }
    out.push_str("\\bottomrule\n\\end{tabular}\n");
    out
}

/// One side of a parsed CSV table row.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedCells {
    pub estimate: f64,
    pub stars: String,
    pub se: Option<f64>,
    pub t: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedTable {
    pub blocks: usize,
    pub rows: Vec<(i32, Vec<Option<ParsedCells>>)>,
    /// (label, value per block)
    pub footer: Vec<(String, Vec<Option<f64>>)>,
}

/// Parse a table produced by [`render_table`] in CSV format.
pub fn parse_csv_table(text: &str) -> Result<ParsedTable, SummaryError> {
    let bad = |m: &str| SummaryError::TableParse(m.to_string());
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| bad("empty table"))?
        .split(',')
        .collect();
    if header.first() != Some(&"bin") || !(header.len() - 1).is_multiple_of(4) {
        return Err(bad("unexpected header"));
    }
    let blocks = (header.len() - 1) / 4;
    let num = |s: &str| -> Result<Option<f64>, SummaryError> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse()
                .map(Some)
                .map_err(|_| bad(&format!("bad number {s:?}")))
        }
    };
    let mut table = ParsedTable {
        blocks,
        ..Default::default()
    };
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != header.len() {
            return Err(bad("ragged row"));
        }
        if let Ok(bin) = f[0].parse::<i32>() {
            let mut cells = Vec::with_capacity(blocks);
            for b in 0..blocks {
                let c = &f[1 + 4 * b..5 + 4 * b];
                if c[0].is_empty() {
                    cells.push(None);
                    continue;
                }
                // Estimates always carry exactly two decimals; anything after is the star label.
                let cut = c[0]
                    .find('.')
                    .map_or(c[0].len(), |dot| (dot + 3).min(c[0].len()));
                let (est, stars) = c[0].split_at(cut);
                cells.push(Some(ParsedCells {
                    estimate: est
                        .parse()
                        .map_err(|_| bad(&format!("bad estimate {:?}", c[0])))?,
                    stars: stars.to_string(),
                    se: num(c[1])?,
                    t: num(c[2])?,
                    p: num(c[3])?,
                }));
            }
            table.rows.push((bin, cells));
        } else {
            let values = (0..blocks)
                .map(|b| num(f[1 + 4 * b]))
                .collect::<Result<Vec<_>, _>>()?;
            table.footer.push((f[0].to_string(), values));
        }
    }
    Ok(table)
}

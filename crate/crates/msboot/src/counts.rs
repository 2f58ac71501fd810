//! Bootstrap frequency tables: one row per scale.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub sigma2: f64,
    pub n_prime: Option<u64>,
    pub b: u64,
    pub c: u64,
}

/// Replicate counts `C` out of `B` falling in the region, per scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountTable {
    pub rows: Vec<CountRow>,
}

impl CountTable {
    pub fn new(mut rows: Vec<CountRow>) -> Result<CountTable> {
        for r in &rows {
            if !(r.sigma2 > 0.0) {
                return Err(Error::domain(format!(
                    "count table scale must be > 0, got {}",
                    r.sigma2
                )));
            }
            if r.b == 0 {
                return Err(Error::domain("count table needs B >= 1"));
            }
            if r.c > r.b {
                return Err(Error::domain(format!(
                    "count {} exceeds replicate total {}",
                    r.c, r.b
                )));
            }
        }
        rows.sort_by(|a, b| a.sigma2.total_cmp(&b.sigma2));
        if rows.windows(2).any(|p| p[0].sigma2 == p[1].sigma2) {
            return Err(Error::domain("count table has duplicate scales"));
        }
        Ok(CountTable { rows })
    }

    /// Counts for the complementary region: `C -> B - C` per row.
    pub fn complement(&self) -> CountTable {
        CountTable {
            rows: self
                .rows
                .iter()
                .map(|r| CountRow { c: r.b - r.c, ..*r })
                .collect(),
        }
    }

    /// The row at the original scale `sigma2 = 1`.
    pub fn unit_scale_row(&self) -> Result<&CountRow> {
        let mut best: Option<&CountRow> = None;
        for r in &self.rows {
            if (r.sigma2 - 1.0).abs() < 1e-9 {
                return Ok(r);
            }
            let closer = best
                .map(|b| (r.sigma2 - 1.0).abs() < (b.sigma2 - 1.0).abs())
                .unwrap_or(true);
            if closer {
                best = Some(r);
            }
        }
        Err(Error::MissingUnitScale {
            nearest: best.map(|r| r.sigma2).unwrap_or(f64::NAN),
        })
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from("sigma2\tnprime\tB\tC\n");
        for r in &self.rows {
            let np = r
                .n_prime
                .map(|v| v.to_string())
                .unwrap_or_else(|| "NA".to_string());
            out.push_str(&format!("{}\t{}\t{}\t{}\n", r.sigma2, np, r.b, r.c));
        }
        out
    }

    pub fn from_tsv(text: &str, source: &str) -> Result<CountTable> {
        let err = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end() == "sigma2\tnprime\tB\tC" => {}
            Some((_, h)) => {
                return Err(err(1, format!("expected header sigma2/nprime/B/C, got {h:?}")))
            }
            None => return Err(err(1, "empty input".to_string())),
        }
        let mut rows = Vec::new();
        for (idx, line) in lines {
            let line = line.trim_end();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(err(lineno, format!("expected 4 fields, got {}", fields.len())));
            }
            let sigma2: f64 = fields[0]
                .parse()
                .map_err(|e| err(lineno, format!("bad sigma2 {:?}: {e}", fields[0])))?;
            let n_prime = if fields[1] == "NA" {
                None
            } else {
                Some(
                    fields[1]
                        .parse()
                        .map_err(|e| err(lineno, format!("bad nprime {:?}: {e}", fields[1])))?,
                )
            };
            let b: u64 = fields[2]
                .parse()
                .map_err(|e| err(lineno, format!("bad B {:?}: {e}", fields[2])))?;
            let c: u64 = fields[3]
                .parse()
                .map_err(|e| err(lineno, format!("bad C {:?}: {e}", fields[3])))?;
            rows.push(CountRow {
                sigma2,
                n_prime,
                b,
                c,
            });
        }
        CountTable::new(rows)
    }

    pub fn write_tsv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_tsv())?;
        Ok(())
    }

    pub fn read_tsv(path: impl AsRef<Path>) -> Result<CountTable> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        CountTable::from_tsv(&text, &path.display().to_string())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("count table serializes")
    }

    pub fn from_json(text: &str) -> Result<CountTable> {
        let table: CountTable = serde_json::from_str(text)?;
        CountTable::new(table.rows)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CountTable {
        CountTable::new(vec![
            CountRow {
                sigma2: 0.5,
                n_prime: Some(200),
                b: 1000,
                c: 123,
            },
            CountRow {
                sigma2: 1.0,
                n_prime: Some(100),
                b: 1000,
                c: 456,
            },
            CountRow {
                sigma2: 2.0,
                n_prime: None,
                b: 1000,
                c: 789,
            },
        ])
        .unwrap()
    }

    #[test]
    fn tsv_round_trips() {
        let t = sample();
        let back = CountTable::from_tsv(&t.to_tsv(), "test").unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn json_round_trips() {
        let t = sample();
        let back = CountTable::from_json(&t.to_json()).unwrap();
        assert_eq!(t, back);
    }

    #[test]
    fn complement_flips_counts() {
        let t = sample();
        let c = t.complement();
        assert_eq!(c.rows[0].c, 877);
        assert_eq!(c.complement(), t);
    }

    #[test]
    fn unit_scale_lookup() {
        let t = sample();
        assert_eq!(t.unit_scale_row().unwrap().c, 456);
        let no_unit = CountTable::new(vec![CountRow {
            sigma2: 0.8,
            n_prime: None,
            b: 10,
            c: 5,
        }])
        .unwrap();
        match no_unit.unit_scale_row() {
            Err(Error::MissingUnitScale { nearest }) => assert_eq!(nearest, 0.8),
            other => panic!("expected missing unit scale, got {other:?}"),
        }
    }

    #[test]
    fn validation_rejects_bad_rows() {
        assert!(CountTable::new(vec![CountRow {
            sigma2: 1.0,
            n_prime: None,
            b: 10,
            c: 11,
        }])
        .is_err());
        assert!(CountTable::new(vec![
            CountRow {
                sigma2: 1.0,
                n_prime: None,
                b: 10,
                c: 1,
            },
            CountRow {
                sigma2: 1.0,
                n_prime: None,
                b: 10,
                c: 2,
            },
        ])
        .is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "sigma2\tnprime\tB\tC\n1.0\tNA\t10\tx\n";
        match CountTable::from_tsv(bad, "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }
}

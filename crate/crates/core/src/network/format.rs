//! Line-oriented network file format. See `docs/formats.md` for the grammar.

use std::fmt::Write as _;

use super::{Activation, FeatureEncoding, InputEncoding, Layer, Matrix, Network, SkipConnection, Task};
use crate::dataset::BinningSpec;
use crate::error::{Error, Result};

const MAGIC: &str = "xtrepan-network";
const VERSION: &str = "1";

pub fn save_network(net: &Network) -> String {
    let mut out = String::new();
    writeln!(out, "{MAGIC} {VERSION}").unwrap();
    writeln!(out, "input_dim {}", net.input_dim()).unwrap();
    match net.task() {
        Task::Classification { labels } => writeln!(out, "task classification {}", labels.join(" ")).unwrap(),
        Task::Regression { binning } => {
            out.push_str("task regression\n");
            if let Some(b) = binning {
                out.push_str("binning");
                for e in b.edges() {
                    write!(out, " {e:?}").unwrap();
                }
                writeln!(out, " | {}", b.labels().join(" ")).unwrap();
            }
        }
    }
    writeln!(out, "encoding {}", net.encoding().features().len()).unwrap();
    for feature in net.encoding().features() {
        match feature {
            FeatureEncoding::OneHot { name, tokens } => writeln!(out, "feature {name} onehot {tokens}").unwrap(),
            FeatureEncoding::Scaled { name, min, max } => {
                writeln!(out, "feature {name} scaled {min:?} {max:?}").unwrap()
            }
        }
    }
    writeln!(out, "layers {}", net.layers().len()).unwrap();
    for (i, layer) in net.layers().iter().enumerate() {
        writeln!(
            out,
            "layer {} {} {} {}",
            i + 1,
            layer.activation,
            layer.out_dim(),
            layer.in_dim()
        )
        .unwrap();
        write_matrix(&mut out, &layer.weights);
        write_row(&mut out, "b", &layer.bias);
    }
    writeln!(out, "skips {}", net.skips().len()).unwrap();
    for skip in net.skips() {
        writeln!(
            out,
            "skip {} {} {} {}",
            skip.from,
            skip.to,
            skip.weights.rows(),
            skip.weights.cols()
        )
        .unwrap();
        write_matrix(&mut out, &skip.weights);
    }
    out.push_str("end\n");
    out
}

fn write_matrix(out: &mut String, m: &Matrix) {
    for r in 0..m.rows() {
        write_row(out, "w", m.row(r));
    }
}

fn write_row(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        write!(out, " {v:?}").unwrap();
    }
    out.push('\n');
}

pub fn load_network(text: &str) -> Result<Network> {
    let mut lines = Lines::new(text);
    let header = lines.expect("header")?;
    if header.fields != [MAGIC, VERSION] {
        return Err(header.error(format!("expected `{MAGIC} {VERSION}`")));
    }
    let input_dim = lines.keyword_count("input_dim")?;

    let task_line = lines.expect("task")?;
    let task = match task_line.fields.get(..2) {
        Some(["task", "classification"]) => Task::Classification {
            labels: task_line.fields[2..].iter().map(|s| s.to_string()).collect(),
        },
        Some(["task", "regression"]) if task_line.fields.len() == 2 => {
            let binning = if lines.peek_keyword() == Some("binning") {
                let line = lines.expect("binning")?;
                let bar = line
                    .fields
                    .iter()
                    .position(|&f| f == "|")
                    .ok_or_else(|| line.error("binning needs `|` between edges and labels"))?;
                let edges = line.fields[1..bar]
                    .iter()
                    .map(|f| line.real(f))
                    .collect::<Result<Vec<_>>>()?;
                let labels = line.fields[bar + 1..].iter().map(|s| s.to_string()).collect();
                Some(BinningSpec::new(edges, labels).map_err(|e| line.error(e))?)
            } else {
                None
            };
            Task::Regression { binning }
        }
        _ => return Err(task_line.error("expected `task classification <labels>` or `task regression`")),
    };

    let feature_count = lines.keyword_count("encoding")?;
    let mut features = Vec::with_capacity(feature_count);
    for _ in 0..feature_count {
        let line = lines.expect("feature")?;
        let feature = match line.fields.as_slice() {
            ["feature", name, "onehot", k] => FeatureEncoding::one_hot(name, line.count(k)?),
            ["feature", name, "scaled", lo, hi] => FeatureEncoding::scaled(name, line.real(lo)?, line.real(hi)?),
            _ => return Err(line.error("expected `feature <name> onehot <k>` or `feature <name> scaled <min> <max>`")),
        };
        features.push(feature);
    }

    let layer_count = lines.keyword_count("layers")?;
    let mut layers = Vec::with_capacity(layer_count);
    for expected_index in 1..=layer_count {
        let line = lines.expect("layer")?;
        let ["layer", index, activation, out_dim, in_dim] = line.fields.as_slice() else {
            return Err(line.error("expected `layer <index> <activation> <out_dim> <in_dim>`"));
        };
        if line.count(index)? != expected_index {
            return Err(line.error(format!("layers must be numbered in order; expected {expected_index}")));
        }
        let activation: Activation = activation.parse().map_err(|e| line.error(e))?;
        let (rows, cols) = (line.count(out_dim)?, line.count(in_dim)?);
        let weights = lines.matrix(rows, cols)?;
        let bias_line = lines.expect("b")?;
        let bias = bias_line.reals(rows)?;
        layers.push(Layer::new(weights, bias, activation));
    }

    let skip_count = lines.keyword_count("skips")?;
    let mut skips = Vec::with_capacity(skip_count);
    for _ in 0..skip_count {
        let line = lines.expect("skip")?;
        let ["skip", from, to, rows, cols] = line.fields.as_slice() else {
            return Err(line.error("expected `skip <from> <to> <rows> <cols>`"));
        };
        let (from, to) = (line.count(from)?, line.count(to)?);
        let weights = lines.matrix(line.count(rows)?, line.count(cols)?)?;
        skips.push(SkipConnection { from, to, weights });
    }
    lines.expect("end")?;
    if let Some(extra) = lines.next() {
        return Err(extra.error("unexpected content after `end`"));
    }

    Network::new(input_dim, layers, skips, task, InputEncoding::new(features))
}

struct Line<'a> {
    number: usize,
    fields: Vec<&'a str>,
}

impl Line<'_> {
    fn error(&self, message: impl ToString) -> Error {
        Error::validation(format!("network line {}", self.number), message)
    }

    fn count(&self, field: &str) -> Result<usize> {
        field
            .parse()
            .map_err(|_| self.error(format!("`{field}` is not a non-negative integer")))
    }

    fn real(&self, field: &str) -> Result<f64> {
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => Err(self.error(format!("`{field}` is not a finite number"))),
        }
    }

    fn reals(&self, n: usize) -> Result<Vec<f64>> {
        let values = &self.fields[1..];
        if values.len() != n {
            return Err(self.error(format!("expected {n} values, found {}", values.len())));
        }
        values.iter().map(|f| self.real(f)).collect()
    }
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = Line<'a>> + 'a>>,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let iter: Box<dyn Iterator<Item = Line<'a>> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| Line {
                    number: i + 1,
                    fields: l.split_whitespace().collect(),
                })
                .filter(|l| !l.fields.is_empty() && !l.fields[0].starts_with('#')),
        );
        Lines {
            inner: iter.peekable(),
            last_line: 0,
        }
    }

    fn next(&mut self) -> Option<Line<'a>> {
        let line = self.inner.next()?;
        self.last_line = line.number;
        Some(line)
    }

    fn peek_keyword(&mut self) -> Option<&'a str> {
        self.inner.peek().map(|l| l.fields[0])
    }

    fn expect(&mut self, keyword: &str) -> Result<Line<'a>> {
        let eof = self.last_line + 1;
        let line = self
            .next()
            .ok_or_else(|| Error::validation(format!("network line {eof}"), format!("missing `{keyword}`")))?;
        let matches = if keyword == "header" {
            true
        } else {
            line.fields[0] == keyword
        };
        if !matches {
            return Err(line.error(format!("expected `{keyword}`, found `{}`", line.fields[0])));
        }
        Ok(line)
    }

    fn keyword_count(&mut self, keyword: &str) -> Result<usize> {
        let line = self.expect(keyword)?;
        match line.fields.as_slice() {
            [_, n] => line.count(n),
            _ => Err(line.error(format!("expected `{keyword} <count>`"))),
        }
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows);
        for _ in 0..rows {
            data.push(self.expect("w")?.reals(cols)?);
        }
        if rows == 0 {
            return Ok(Matrix::zeros(0, cols));
        }
        Matrix::from_rows(data)
    }
}

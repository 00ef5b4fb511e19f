//! Confusion matrices, accuracy, kappa, fidelity and model comparison.

use std::fmt::Write as _;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::network::Network;
use crate::tree::{Complexity, DecisionTree};

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    labels: Vec<String>,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(labels: Vec<String>, counts: Vec<Vec<u64>>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Data("confusion matrix needs at least one label".into()));
        }
        if counts.len() != labels.len() || counts.iter().any(|r| r.len() != labels.len()) {
            return Err(Error::Data(format!(
                "confusion matrix must be {0}x{0} for {0} labels",
                labels.len()
            )));
        }
        Ok(ConfusionMatrix { labels, counts })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.labels.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn column_sums(&self) -> Vec<u64> {
        (0..self.labels.len())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }
}

/// Counts `(actual, predicted)` pairs over `label_order`.
pub fn confusion_matrix<S: AsRef<str>>(
    actual: &[S],
    predicted: &[S],
    label_order: &[String],
) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::Data(format!(
            "{} actual labels but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    if actual.is_empty() {
        return Err(Error::Data("confusion matrix of no predictions".into()));
    }
    let index = |l: &str| {
        label_order
            .iter()
            .position(|x| x == l)
            .ok_or_else(|| Error::Data(format!("unknown label `{l}`")))
    };
    let k = label_order.len();
    let mut counts = vec![vec![0u64; k]; k];
    for (a, p) in actual.iter().zip(predicted) {
        counts[index(a.as_ref())?][index(p.as_ref())?] += 1;
    }
    ConfusionMatrix::new(label_order.to_vec(), counts)
}

fn nonzero_total(cm: &ConfusionMatrix) -> Result<f64> {
    match cm.total() {
        0 => Err(Error::Domain("confusion matrix has no entries".into())),
        n => Ok(n as f64),
    }
}

/// Percentage of the total on the diagonal.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(100.0 * cm.trace() as f64 / nonzero_total(cm)?)
}

/// Diagonal entry over its predicted-column total, in percent; a class never
/// predicted scores 0.
pub fn per_class_accuracy(cm: &ConfusionMatrix) -> Vec<f64> {
    cm.column_sums()
        .iter()
        .enumerate()
        .map(|(j, &col)| {
            if col == 0 {
                0.0
            } else {
                100.0 * cm.counts[j][j] as f64 / col as f64
            }
        })
        .collect()
}

/// Chance-corrected agreement. When chance agreement is already 1 the
/// result is 1 for perfect agreement and 0 otherwise.
pub fn kappa(cm: &ConfusionMatrix) -> Result<f64> {
    let n = nonzero_total(cm)?;
    let p_a = cm.trace() as f64 / n;
    let p_e: f64 = cm
        .row_sums()
        .iter()
        .zip(cm.column_sums())
        .map(|(&r, c)| r as f64 * c as f64)
        .sum::<f64>()
        / (n * n);
    if p_e == 1.0 {
        return Ok(if p_a == 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_a - p_e) / (1.0 - p_e))
}

fn check_inputs(tree: &DecisionTree, data: &Dataset) -> Result<()> {
    let ours = tree.schema();
    let theirs = data.schema();
    let same = ours.input_count() == theirs.input_count()
        && ours
            .inputs()
            .zip(theirs.inputs())
            .all(|(a, b)| a.name == b.name && a.kind == b.kind);
    if same {
        Ok(())
    } else {
        Err(Error::validation(
            "tree",
            "tree attributes do not match the data's inputs",
        ))
    }
}

/// Percentage of `data` on which the tree and the network give the same label.
pub fn fidelity(tree: &DecisionTree, net: &Network, data: &Dataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Domain("fidelity over an empty dataset".into()));
    }
    check_inputs(tree, data)?;
    net.check_schema(data.schema())?;
    let mut agree = 0usize;
    for inst in data.instances() {
        if tree.classify_label(inst)? == net.predict_label(inst)? {
            agree += 1;
        }
    }
    Ok(100.0 * agree as f64 / data.len() as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub confusion: ConfusionMatrix,
    pub total_accuracy: f64,
    pub per_class_accuracy: Vec<f64>,
    pub kappa: f64,
    /// Present when a network was given.
    pub fidelity: Option<f64>,
    pub complexity: Complexity,
}

/// Scores `tree` against the labels of `data` (and against `net`, if any).
pub fn evaluate(tree: &DecisionTree, net: Option<&Network>, data: &Dataset) -> Result<Metrics> {
    let labels = data
        .schema()
        .class_labels()
        .ok_or_else(|| Error::validation("data", "evaluation needs a class target"))?;
    let bound = tree.rebind(data.schema())?;
    let actual: Vec<&str> = data
        .instances()
        .iter()
        .map(|i| labels[i.target.label().expect("class target")].as_str())
        .collect();
    let predicted = data
        .instances()
        .iter()
        .map(|i| bound.classify_label(i))
        .collect::<Result<Vec<_>>>()?;
    let cm = confusion_matrix(&actual, &predicted, labels)?;
    Ok(Metrics {
        total_accuracy: accuracy(&cm)?,
        per_class_accuracy: per_class_accuracy(&cm),
        kappa: kappa(&cm)?,
        fidelity: net.map(|n| fidelity(&bound, n, data)).transpose()?,
        complexity: tree.complexity(),
        confusion: cm,
    })
}

/// Per-model metrics in the order the models were given.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub rows: Vec<(String, Metrics)>,
}

pub const REPORT_HEADER: &str = "model,accuracy,kappa,fidelity,internal_nodes,leaves,literals";

impl Report {
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_HEADER}\n");
        for (name, m) in &self.rows {
            let fidelity = m.fidelity.map_or(String::new(), |f| format!("{f:.4}"));
            writeln!(
                out,
                "{name},{:.4},{:.6},{fidelity},{},{},{}",
                m.total_accuracy,
                m.kappa,
                m.complexity.internal_nodes,
                m.complexity.leaves,
                m.complexity.total_literals
            )
            .expect("writing to a String");
        }
        out
    }

    pub fn to_text(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|(n, _)| n.len())
            .max()
            .unwrap_or(0)
            .max("model".len());
        let mut out = format!(
            "{:<width$}  {:>9}  {:>7}  {:>9}  {:>8}  {:>6}  {:>8}\n",
            "model", "accuracy%", "kappa", "fidelity%", "internal", "leaves", "literals"
        );
        for (name, m) in &self.rows {
            let fidelity = m.fidelity.map_or("-".to_string(), |f| format!("{f:.2}"));
            writeln!(
                out,
                "{name:<width$}  {:>9.2}  {:>7.4}  {fidelity:>9}  {:>8}  {:>6}  {:>8}",
                m.total_accuracy,
                m.kappa,
                m.complexity.internal_nodes,
                m.complexity.leaves,
                m.complexity.total_literals
            )
            .expect("writing to a String");
        }
        out
    }
}

pub fn compare_report(models: &[(String, DecisionTree)], net: &Network, test: &Dataset) -> Result<Report> {
    if models.is_empty() {
        return Err(Error::Config("comparison needs at least one model".into()));
    }
    let rows = models
        .iter()
        .map(|(name, tree)| {
            if name.contains([',', '\n', '"']) {
                return Err(Error::Config(format!("model name `{name}` cannot appear in CSV")));
            }
            Ok((name.clone(), evaluate(tree, Some(net), test)?))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Report { rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn labels(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("C{i}")).collect()
    }

    fn cm(rows: Vec<Vec<u64>>) -> ConfusionMatrix {
        ConfusionMatrix::new(labels(rows.len()), rows).unwrap()
    }

    #[test]
    fn counting() {
        let order = vec!["A".to_string(), "B".to_string()];
        let m = confusion_matrix(&["A", "A", "B"], &["A", "B", "B"], &order).unwrap();
        assert_eq!(m.counts(), &[vec![1, 1], vec![0, 1]]);
        let m = confusion_matrix(&["A", "B"], &["A", "B"], &order).unwrap();
        assert_eq!(m.counts(), &[vec![1, 0], vec![0, 1]]);
        let empty: [&str; 0] = [];
        assert!(confusion_matrix(&empty, &empty, &order).is_err());
        assert!(confusion_matrix(&["A"], &["Z"], &order).is_err());
        assert!(confusion_matrix(&["A"], &["A", "B"], &order).is_err());
    }

    #[test]
    fn admissions_matrix() {
        let m = cm(vec![vec![401, 279], vec![168, 754]]);
        assert_abs_diff_eq!(accuracy(&m).unwrap(), 72.10, epsilon = 0.01);
        // P(A) = 1155/1602; P(E) = (680*569 + 922*1033) / 1602^2
        let p_a = 1155.0 / 1602.0;
        let p_e = (680.0 * 569.0 + 922.0 * 1033.0) / (1602.0f64 * 1602.0);
        assert_abs_diff_eq!(kappa(&m).unwrap(), (p_a - p_e) / (1.0 - p_e), epsilon = 1e-12);
        assert_abs_diff_eq!(kappa(&m).unwrap(), 0.416, epsilon = 0.005);
    }

    #[test]
    fn two_by_two_matches_binary_formula() {
        let (tp, fn_, fp, tn) = (40u64, 7u64, 5u64, 48u64);
        let m = cm(vec![vec![tp, fn_], vec![fp, tn]]);
        let binary = 100.0 * (tp + tn) as f64 / (tp + fn_ + fp + tn) as f64;
        assert_eq!(accuracy(&m).unwrap(), binary);
    }

    #[test]
    fn degenerate_cases() {
        assert!(matches!(
            accuracy(&cm(vec![vec![0, 0], vec![0, 0]])),
            Err(Error::Domain(_))
        ));
        assert_eq!(kappa(&cm(vec![vec![5]])).unwrap(), 1.0);
        assert_eq!(kappa(&cm(vec![vec![5, 0], vec![0, 0]])).unwrap(), 1.0);
        assert_eq!(per_class_accuracy(&cm(vec![vec![3, 0], vec![2, 0]])), vec![60.0, 0.0]);
        assert_eq!(
            per_class_accuracy(&cm(vec![vec![2, 0], vec![0, 9]])),
            vec![100.0, 100.0]
        );
    }

    #[test]
    fn chance_matrix_has_zero_kappa() {
        // rows proportional to column totals
        let m = cm(vec![vec![2, 4, 6], vec![1, 2, 3], vec![3, 6, 9]]);
        assert_abs_diff_eq!(kappa(&m).unwrap(), 0.0, epsilon = 1e-12);
    }

    fn matrix(k: usize) -> impl Strategy<Value = Vec<Vec<u64>>> {
        prop::collection::vec(prop::collection::vec(0u64..50, k), k)
    }

    proptest! {
        #[test]
        fn kappa_at_most_one(rows in (1usize..5).prop_flat_map(matrix)) {
            let m = cm(rows);
            prop_assume!(m.total() > 0);
            prop_assert!(kappa(&m).unwrap() <= 1.0 + 1e-12);
        }

        #[test]
        fn diagonal_iff_perfect(rows in (1usize..5).prop_flat_map(matrix)) {
            let m = cm(rows.clone());
            prop_assume!(m.total() > 0);
            let diagonal = rows.iter().enumerate().all(|(i, r)| r.iter().enumerate().all(|(j, &v)| i == j || v == 0));
            prop_assert_eq!(accuracy(&m).unwrap() == 100.0, diagonal);
            prop_assert_eq!(kappa(&m).unwrap() == 1.0, diagonal);
        }

        #[test]
        fn permutation_invariance(rows in matrix(3), perm in Just([0usize, 1, 2]).prop_shuffle()) {
            let m = cm(rows.clone());
            prop_assume!(m.total() > 0);
            let permuted: Vec<Vec<u64>> = perm.iter().map(|&i| perm.iter().map(|&j| rows[i][j]).collect()).collect();
            let p = ConfusionMatrix::new(perm.iter().map(|&i| format!("C{i}")).collect(), permuted).unwrap();
            prop_assert!((accuracy(&m).unwrap() - accuracy(&p).unwrap()).abs() < 1e-9);
            prop_assert!((kappa(&m).unwrap() - kappa(&p).unwrap()).abs() < 1e-9);
        }
    }
}

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::sensor::{HandSide, SensorFrame};

/// Nominal capture rate of the recording client.
pub const ROWS_PER_SECOND: f64 = 7.0;
/// Repetitions performed per motion.
pub const REPETITIONS_PER_MOTION: f64 = 8.0;

/// Row-count statistics of one hand side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SideStats {
    pub side: HandSide,
    pub total_rows: usize,
    pub students: usize,
    pub motions: usize,
    pub rows_per_student: f64,
    pub rows_per_student_per_motion: f64,
    pub seconds_per_student_per_motion: f64,
    pub seconds_per_repetition: f64,
}

impl SideStats {
    pub fn new(
        side: HandSide,
        total_rows: usize,
        students: usize,
        motions: usize,
        rows_per_second: f64,
        repetitions: f64,
    ) -> Result<Self, DatasetError> {
        if students == 0 || motions == 0 {
            return Err(DatasetError::Domain("student and motion counts must be positive".into()));
        }
        if !(rows_per_second > 0.0 && repetitions > 0.0) {
            return Err(DatasetError::Domain("rate and repetition count must be positive".into()));
        }
        let rows_per_student = total_rows as f64 / students as f64;
        let rows_per_student_per_motion = rows_per_student / motions as f64;
        let seconds_per_student_per_motion = rows_per_student_per_motion / rows_per_second;
        let seconds_per_repetition = seconds_per_student_per_motion / repetitions;
        Ok(SideStats {
            side,
            total_rows,
            students,
            motions,
            rows_per_student,
            rows_per_student_per_motion,
            seconds_per_student_per_motion,
            seconds_per_repetition,
        })
    }
}

/// Per-side statistics and the window length derived from them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub rows_per_second: f64,
    pub repetitions_per_motion: f64,
    pub sides: Vec<SideStats>,
    /// Rounded mean of the sides' rounded rows-per-student-per-motion.
    pub recommended_window: usize,
    /// Window length used for training. Sits below the recommendation to
    /// leave room for rows lost between motions.
    pub default_window: usize,
}

impl DatasetStats {
    pub fn from_sides(sides: Vec<SideStats>, rows_per_second: f64, repetitions: f64) -> Result<Self, DatasetError> {
        if sides.is_empty() {
            return Err(DatasetError::Domain("no frames".into()));
        }
        let rounded: Vec<f64> = sides.iter().map(|s| s.rows_per_student_per_motion.round()).collect();
        let recommended = (rounded.iter().sum::<f64>() / rounded.len() as f64).round() as usize;
        Ok(DatasetStats {
            rows_per_second,
            repetitions_per_motion: repetitions,
            sides,
            recommended_window: recommended,
            default_window: crate::lstm::DEFAULT_WINDOW,
        })
    }

    pub fn side(&self, side: HandSide) -> Option<&SideStats> {
        self.sides.iter().find(|s| s.side == side)
    }

    /// Two-column-per-side table: exact value and rounded value.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        write!(out, "{:<52}", "Characteristic").unwrap();
        for s in &self.sides {
            let name = match s.side {
                HandSide::Left => "Left",
                HandSide::Right => "Right",
            };
            write!(out, " {name:>12} {:>10}", "Rounded").unwrap();
        }
        writeln!(out).unwrap();

        type Getter = fn(&SideStats) -> f64;
        let rows: [(String, Getter); 5] = [
            ("Number of total rows".into(), |s| s.total_rows as f64),
            (format!("Average row per student ({} students)", self.sides[0].students), |s| s.rows_per_student),
            (
                format!("Average rows per student per motion ({} motions)", self.sides[0].motions),
                |s| s.rows_per_student_per_motion,
            ),
            (
                format!("Average second per student per motion (~{} rows/s)", self.rows_per_second),
                |s| s.seconds_per_student_per_motion,
            ),
            (
                format!("Avg. second per repetition ({} repetitions)", self.repetitions_per_motion),
                |s| s.seconds_per_repetition,
            ),
        ];
        for (i, (label, get)) in rows.iter().enumerate() {
            write!(out, "{label:<52}").unwrap();
            for s in &self.sides {
                let v = get(s);
                let exact = if i == 0 { group_thousands(v as u64) } else { group_decimal(v) };
                write!(out, " {exact:>12} {:>10}", group_thousands(v.round() as u64)).unwrap();
            }
            writeln!(out).unwrap();
        }
        let rounded: Vec<String> =
            self.sides.iter().map(|s| format!("{}", s.rows_per_student_per_motion.round())).collect();
        writeln!(
            out,
            "Recommended window: ({})/{} = {} (training default {})",
            rounded.join("+"),
            rounded.len(),
            self.recommended_window,
            self.default_window
        )
        .unwrap();
        out
    }
}

fn group_thousands(v: u64) -> String {
    let digits = v.to_string();
    let mut out = String::new();
    for (i, ch) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(ch);
    }
    out
}

fn group_decimal(v: f64) -> String {
    let fixed = format!("{v:.2}");
    let (int, frac) = fixed.split_once('.').unwrap();
    format!("{}.{frac}", group_thousands(int.parse().unwrap()))
}

/// Statistics over exported frames. Student and motion counts default to the
/// number of distinct respondents and motions seen on each side.
pub fn dataset_stats(
    frames: &[SensorFrame],
    students: Option<usize>,
    motions: Option<usize>,
) -> Result<DatasetStats, DatasetError> {
    if frames.is_empty() {
        return Err(DatasetError::Domain("no frames".into()));
    }
    let mut sides = Vec::new();
    for side in HandSide::ALL {
        let subset: Vec<&SensorFrame> = frames.iter().filter(|f| f.side == side).collect();
        if subset.is_empty() {
            continue;
        }
        let n_students = students.unwrap_or_else(|| subset.iter().map(|f| &f.respondent).collect::<BTreeSet<_>>().len());
        let n_motions = motions.unwrap_or_else(|| subset.iter().map(|f| f.motion_type).collect::<BTreeSet<_>>().len());
        sides.push(SideStats::new(side, subset.len(), n_students, n_motions, ROWS_PER_SECOND, REPETITIONS_PER_MOTION)?);
    }
    DatasetStats::from_sides(sides, ROWS_PER_SECOND, REPETITIONS_PER_MOTION)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_decimals(v: f64) -> String {
        format!("{v:.2}")
    }

    #[test]
    fn left_corpus_figures() {
        let s = SideStats::new(HandSide::Left, 36_792, 25, 9, 7.0, 8.0).unwrap();
        assert_eq!(two_decimals(s.rows_per_student), "1471.68");
        assert_eq!(two_decimals(s.rows_per_student_per_motion), "163.52");
        assert_eq!(two_decimals(s.seconds_per_student_per_motion), "23.36");
        assert_eq!(two_decimals(s.seconds_per_repetition), "2.92");
    }

    #[test]
    fn right_corpus_figures() {
        let s = SideStats::new(HandSide::Right, 32_296, 25, 9, 7.0, 8.0).unwrap();
        assert_eq!(two_decimals(s.rows_per_student), "1291.84");
        assert_eq!(two_decimals(s.rows_per_student_per_motion), "143.54");
        assert_eq!(two_decimals(s.seconds_per_student_per_motion), "20.51");
        assert_eq!(two_decimals(s.seconds_per_repetition), "2.56");
    }

    #[test]
    fn recommended_window_is_rounded_cross_side_mean() {
        let l = SideStats::new(HandSide::Left, 36_792, 25, 9, 7.0, 8.0).unwrap();
        let r = SideStats::new(HandSide::Right, 32_296, 25, 9, 7.0, 8.0).unwrap();
        let stats = DatasetStats::from_sides(vec![l, r], 7.0, 8.0).unwrap();
        assert_eq!(stats.recommended_window, 154);
        assert_eq!(stats.default_window, 150);
        let table = stats.render_table();
        assert!(table.contains("36,792"));
        assert!(table.contains("1,471.68"));
        assert!(table.contains("(164+144)/2 = 154"));
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(SideStats::new(HandSide::Left, 10, 0, 9, 7.0, 8.0).is_err());
        assert!(SideStats::new(HandSide::Left, 10, 5, 0, 7.0, 8.0).is_err());
        assert!(dataset_stats(&[], None, None).is_err());
    }

    #[test]
    fn thousands_grouping() {
        assert_eq!(group_thousands(1_234_567), "1,234,567");
        assert_eq!(group_thousands(999), "999");
        assert_eq!(group_decimal(1291.84), "1,291.84");
    }
}

use std::io::{self, Write};

use super::parallel::{map_indexed, Parallelism};
use super::scenario::{ScenarioConfig, Variant};
use super::{run_with, RunOutput, SimError, Trace};

/// Column order of the exported trace; `robot_id` is 1-based.
pub const TRACE_COLUMNS: [&str; 24] = [
    "t", "robot_id", "x", "y", "theta", "v", "w", "est_x", "est_y", "est_theta", "est_v", "est_w", "ex_b", "ey_b",
    "eth", "v_cmd", "w_cmd", "tau_l", "tau_r", "a_hat", "b_hat", "vs", "d1", "d2",
];

/// Left-rectangle integral of `|v_cmd - v| + |w_cmd - w|` over the logged
/// grid.
pub fn total_velocity_error(trace: &Trace, robot: usize) -> f64 {
    trace
        .windows(2)
        .map(|w| {
            let r = &w[0].robots[robot];
            ((r.cmd.v - r.vel.v).abs() + (r.cmd.w - r.vel.w).abs()) * (w[1].t - w[0].t)
        })
        .sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobotMetrics {
    pub total_velocity_error: f64,
    pub max_abs_v_cmd: f64,
    pub initial_abs_v_cmd: f64,
    pub max_abs_est_v: f64,
    /// `|P_ir - P_r|` at the final time
    pub final_pose_estimation_error: f64,
    pub final_v_estimation_error: f64,
    pub final_w_estimation_error: f64,
    pub final_a_error: f64,
    pub final_b_error: f64,
    pub final_formation_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub variant: Variant,
    pub robots: Vec<RobotMetrics>,
}

impl MetricsReport {
    pub fn from_trace(config: &ScenarioConfig, trace: &Trace) -> Self {
        let last = trace.last().expect("trace always holds the initial record");
        let first = &trace[0];
        let robots = (0..config.robots.len())
            .map(|i| {
                let r = &last.robots[i];
                let l = &last.leader;
                let off = &config.robots[i].offset;
                let dp = [
                    r.est.pose.x - l.pose.x,
                    r.est.pose.y - l.pose.y,
                    r.est.pose.theta - l.pose.theta,
                ];
                let df = [
                    l.pose.x - r.pose.x - off.dx,
                    l.pose.y - r.pose.y - off.dy,
                    l.pose.theta - r.pose.theta,
                ];
                let norm = |v: [f64; 3]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
                RobotMetrics {
                    total_velocity_error: total_velocity_error(trace, i),
                    max_abs_v_cmd: trace.iter().map(|k| k.robots[i].cmd.v.abs()).fold(0.0, f64::max),
                    initial_abs_v_cmd: first.robots[i].cmd.v.abs(),
                    max_abs_est_v: trace.iter().map(|k| k.robots[i].est.v.abs()).fold(0.0, f64::max),
                    final_pose_estimation_error: norm(dp),
                    final_v_estimation_error: (r.est.v - l.v).abs(),
                    final_w_estimation_error: (r.est.w - l.w).abs(),
                    final_a_error: (r.learner.c_hat[0] - config.plant.a).abs(),
                    final_b_error: (r.learner.c_hat[1] - config.plant.b).abs(),
                    final_formation_error: norm(df),
                }
            })
            .collect();
        Self {
            variant: config.variant,
            robots,
        }
    }
}

/// Writes `key = value` lines, one robot block after another.
pub fn write_metrics<W: Write>(report: &MetricsReport, mut out: W) -> io::Result<()> {
    writeln!(out, "variant = {}", report.variant)?;
    writeln!(out, "followers = {}", report.robots.len())?;
    for (i, m) in report.robots.iter().enumerate() {
        let id = i + 1;
        let rows = [
            ("total_velocity_error", m.total_velocity_error),
            ("max_abs_v_cmd", m.max_abs_v_cmd),
            ("initial_abs_v_cmd", m.initial_abs_v_cmd),
            ("max_abs_est_v", m.max_abs_est_v),
            ("final_pose_estimation_error", m.final_pose_estimation_error),
            ("final_v_estimation_error", m.final_v_estimation_error),
            ("final_w_estimation_error", m.final_w_estimation_error),
            ("final_a_error", m.final_a_error),
            ("final_b_error", m.final_b_error),
            ("final_formation_error", m.final_formation_error),
        ];
        for (key, value) in rows {
            writeln!(out, "robot.{id}.{key} = {value}")?;
        }
    }
    Ok(())
}

pub fn write_trace_csv<W: Write>(trace: &Trace, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS)?;
    for rec in trace {
        for (i, r) in rec.robots.iter().enumerate() {
            let values = [
                rec.t,
                r.pose.x,
                r.pose.y,
                r.pose.theta,
                r.vel.v,
                r.vel.w,
                r.est.pose.x,
                r.est.pose.y,
                r.est.pose.theta,
                r.est.v,
                r.est.w,
                r.body_error.ex,
                r.body_error.ey,
                r.body_error.eth,
                r.cmd.v,
                r.cmd.w,
                r.torques.left,
                r.torques.right,
                r.learner.c_hat[0],
                r.learner.c_hat[1],
                r.vs,
                r.disturbance.0,
                r.disturbance.1,
            ];
            let mut row: Vec<String> = Vec::with_capacity(TRACE_COLUMNS.len());
            row.push(values[0].to_string());
            row.push((i + 1).to_string());
            row.extend(values[1..].iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Total velocity error for every variant (columns in [`Variant::ALL`]
/// order) and follower (rows).
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub runs: Vec<(Variant, RunOutput)>,
    /// `table[follower][variant]`
    pub table: Vec<[f64; 4]>,
}

impl Comparison {
    /// Per follower: the shunting + learning column is strictly smallest and
    /// plain backstepping strictly largest.
    pub fn ordering_verdicts(&self) -> Vec<bool> {
        self.table
            .iter()
            .map(|row| {
                let best = row[3];
                let worst = row[0];
                row[..3].iter().all(|&x| best < x) && row[1..].iter().all(|&x| worst > x)
            })
            .collect()
    }

    pub fn ordering_holds(&self) -> bool {
        self.ordering_verdicts().into_iter().all(|b| b)
    }

    pub fn write_report<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# total velocity error")?;
        write!(out, "follower")?;
        for v in Variant::ALL {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",ordering")?;
        for (i, (row, ok)) in self.table.iter().zip(self.ordering_verdicts()).enumerate() {
            write!(out, "{}", i + 1)?;
            for x in row {
                write!(out, ",{x:.6}")?;
            }
            writeln!(out, ",{}", if ok { "pass" } else { "fail" })?;
        }
        Ok(())
    }
}

/// Runs the four controller variants on otherwise identical copies of `base`.
pub fn compare_variants(base: &ScenarioConfig, parallelism: Parallelism) -> Result<Comparison, SimError> {
    // Variants run side by side; `run_with` decides whether each run also
    // fans out per step.
    let runs = map_indexed(parallelism, Variant::ALL.len(), |k| {
        let mut cfg = base.clone();
        cfg.variant = Variant::ALL[k];
        run_with(&cfg, parallelism).map(|out| (cfg.variant, out))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let n = base.robots.len();
    let table = (0..n)
        .map(|i| {
            let mut row = [0.0; 4];
            for (k, (_, out)) in runs.iter().enumerate() {
                row[k] = out.metrics.robots[i].total_velocity_error;
            }
            row
        })
        .collect();
    Ok(Comparison { runs, table })
}

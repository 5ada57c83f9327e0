//! Bar charts of relative regret per task, one file per (pool, strategy).
//! Budget 1 is drawn light, budget 2 solid on top of it.

use std::fmt::Write;

use model_search::catalog::{PoolId, TaskGroup, TaskRecord};
use model_search::metrics::RegretReport;
use model_search::strategy::Strategy;

const BAR_WIDTH: f64 = 24.0;
const BAR_GAP: f64 = 12.0;
const PLOT_HEIGHT: f64 = 200.0;
const LEFT: f64 = 50.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 110.0;

fn color(group: TaskGroup) -> &'static str {
    match group {
        TaskGroup::Natural => "#4c72b0",
        TaskGroup::Specialized => "#dd8452",
        TaskGroup::Structured => "#55a868",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub(crate) fn render_chart(report: &RegretReport, pool_id: &PoolId, strategy: Strategy, tasks: &[TaskRecord]) -> String {
    let width = LEFT + tasks.len() as f64 * (BAR_WIDTH + BAR_GAP) + BAR_GAP + 130.0;
    let height = TOP + PLOT_HEIGHT + BOTTOM;
    let y = |v: f64| TOP + PLOT_HEIGHT * (1.0 - v.clamp(0.0, 1.0));
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{LEFT:.0}" y="20" font-size="14">Relative regret: {} on pool {}</text>"#,
        escape(strategy.id()),
        escape(pool_id.as_str())
    );
    for tick in 0..=4 {
        let v = f64::from(tick) / 4.0;
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#dddddd"/><text x="{:.1}" y="{:.1}" text-anchor="end">{v:.2}</text>"##,
            LEFT,
            y(v),
            width - 130.0,
            y(v),
            LEFT - 6.0,
            y(v) + 4.0
        );
    }
    for (i, task) in tasks.iter().enumerate() {
        let x = LEFT + BAR_GAP + i as f64 * (BAR_WIDTH + BAR_GAP);
        for (budget, opacity) in [(1, 0.35), (2, 1.0)] {
            if let Some(row) = report.find(pool_id, &task.task_id, strategy, budget) {
                let top = y(row.rel_regret);
                let _ = writeln!(
                    svg,
                    r#"<rect x="{x:.1}" y="{top:.1}" width="{BAR_WIDTH:.1}" height="{:.1}" fill="{}" fill-opacity="{opacity:.2}"><title>{} B={budget}: {:.6}</title></rect>"#,
                    TOP + PLOT_HEIGHT - top,
                    color(task.group),
                    escape(&task.task_id),
                    row.rel_regret
                );
            }
        }
        let lx = x + BAR_WIDTH / 2.0;
        let ly = TOP + PLOT_HEIGHT + 10.0;
        let _ = writeln!(
            svg,
            r#"<text x="{lx:.1}" y="{ly:.1}" transform="rotate(60 {lx:.1} {ly:.1})">{}</text>"#,
            escape(&task.task_id)
        );
    }
    let lx = width - 120.0;
    for (i, group) in TaskGroup::ALL.iter().enumerate() {
        let ly = TOP + 10.0 + i as f64 * 18.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="{}"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
            ly - 10.0,
            color(*group),
            lx + 18.0,
            group
        );
    }
    let ly = TOP + 10.0 + 3.0 * 18.0;
    let _ = writeln!(
        svg,
        r##"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="#888888" fill-opacity="0.35"/><text x="{:.1}" y="{ly:.1}">B=1</text>"##,
        ly - 10.0,
        lx + 18.0
    );
    let ly = ly + 18.0;
    let _ = writeln!(
        svg,
        r##"<rect x="{lx:.1}" y="{:.1}" width="12" height="12" fill="#888888"/><text x="{:.1}" y="{ly:.1}">B=2</text>"##,
        ly - 10.0,
        lx + 18.0
    );
    svg.push_str("</svg>\n");
    svg
}

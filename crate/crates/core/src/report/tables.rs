//! CSV writers. RFC 4180 quoting, LF line endings, floats in shortest
//! round-trip form.

use std::io::Write;

use crate::analytics::{CategoryCrosstab, InnovationReport, RankingSeries};
use crate::identity::StakeholderId;
use crate::metrics::{CentralityTable, GraphStats};

fn writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out)
}

fn num(x: f64) -> String {
    format!("{x}")
}

pub fn write_centralities<'a, W: Write>(
    tables: impl IntoIterator<Item = (&'a str, &'a CentralityTable)>,
    out: W,
) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record([
        "release",
        "stakeholder",
        "out_degree",
        "betweenness",
        "closeness",
    ])?;
    for (release, table) in tables {
        for (id, c) in table {
            w.write_record([
                release,
                id.as_str(),
                &num(c.out_degree),
                &num(c.betweenness),
                &num(c.closeness),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_graph_stats<'a, W: Write>(
    stats: impl IntoIterator<Item = (&'a str, &'a GraphStats)>,
    out: W,
) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(["release", "vertex_count", "edge_count", "acc", "gd"])?;
    for (release, s) in stats {
        w.write_record([
            release,
            &s.vertex_count.to_string(),
            &s.edge_count.to_string(),
            &num(s.average_clustering_coefficient),
            &num(s.graph_density),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_innovation<'a, W: Write>(
    reports: impl IntoIterator<Item = &'a InnovationReport>,
    out: W,
) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record([
        "release",
        "feature",
        "improvement",
        "bug",
        "other",
        "change_size_loc",
        "cycle_time_days",
    ])?;
    for r in reports {
        w.write_record([
            r.release_id.as_str(),
            &r.feature_count.to_string(),
            &r.improvement_count.to_string(),
            &r.bug_count.to_string(),
            &r.other_count.to_string(),
            &r.change_size_loc.to_string(),
            &num(r.cycle_time_days),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per (metric, release, stakeholder) for the selected stakeholders.
pub fn write_rankings<'a, W: Write>(
    series: impl IntoIterator<Item = (&'a RankingSeries, &'a [StakeholderId])>,
    out: W,
) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(["metric", "release", "stakeholder", "value", "rank"])?;
    for (s, selected) in series {
        for release in &s.releases {
            for e in release
                .entries
                .iter()
                .filter(|e| selected.contains(&e.stakeholder))
            {
                w.write_record([
                    s.metric.as_str(),
                    release.release_id.as_str(),
                    e.stakeholder.as_str(),
                    &num(e.value),
                    &e.rank.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_crosstab<W: Write>(table: &CategoryCrosstab, out: W) -> csv::Result<()> {
    let mut w = writer(out);
    w.write_record(["category_a", "category_b", "count"])?;
    for (a, b, count) in table.rows() {
        w.write_record([a.as_str(), b.as_str(), &count.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

use std::io::{self, Write};

use crate::identity::AffiliationMap;

use super::CollaborationNetwork;

/// Positional decimal with exactly 10 significant digits.
pub fn format_weight(w: f64) -> String {
    if w == 0.0 || !w.is_finite() {
        return format!("{w}");
    }
    // the exponent of the rounded scientific form accounts for carries like 9.9999999999 -> 10
    let sci = format!("{w:.9e}");
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    let decimals = (9 - exp).max(0) as usize;
    format!("{w:.decimals$}")
}

fn xml_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&apos;"),
            c => out.push(c),
        }
    }
    out
}

fn dot_quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

pub fn write_graphml(
    net: &CollaborationNetwork,
    map: &AffiliationMap,
    mut out: impl Write,
) -> io::Result<()> {
    writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
    writeln!(
        out,
        r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#
    )?;
    writeln!(
        out,
        r#"  <key id="id" for="node" attr.name="id" attr.type="string"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="category" for="node" attr.name="category" attr.type="string"/>"#
    )?;
    writeln!(
        out,
        r#"  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>"#
    )?;
    writeln!(
        out,
        r#"  <graph id="{}" edgedefault="directed">"#,
        xml_escape(net.release_id())
    )?;
    for v in net.vertices() {
        let id = xml_escape(v.as_str());
        writeln!(out, r#"    <node id="{id}">"#)?;
        writeln!(out, r#"      <data key="id">{id}</data>"#)?;
        writeln!(
            out,
            r#"      <data key="category">{}</data>"#,
            map.category(v)
        )?;
        writeln!(out, "    </node>")?;
    }
    for (i, ((s, t), w)) in net.edges().iter().enumerate() {
        writeln!(
            out,
            r#"    <edge id="e{i}" source="{}" target="{}">"#,
            xml_escape(s.as_str()),
            xml_escape(t.as_str())
        )?;
        writeln!(
            out,
            r#"      <data key="weight">{}</data>"#,
            format_weight(*w)
        )?;
        writeln!(out, "    </edge>")?;
    }
    writeln!(out, "  </graph>")?;
    writeln!(out, "</graphml>")?;
    out.flush()
}

pub fn write_dot(
    net: &CollaborationNetwork,
    map: &AffiliationMap,
    mut out: impl Write,
) -> io::Result<()> {
    writeln!(out, "digraph {} {{", dot_quote(net.release_id()))?;
    for v in net.vertices() {
        writeln!(
            out,
            "  {} [id={}, category={}];",
            dot_quote(v.as_str()),
            dot_quote(v.as_str()),
            dot_quote(map.category(v).as_str())
        )?;
    }
    for ((s, t), w) in net.edges() {
        writeln!(
            out,
            "  {} -> {} [weight={}];",
            dot_quote(s.as_str()),
            dot_quote(t.as_str()),
            format_weight(*w)
        )?;
    }
    writeln!(out, "}}")?;
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::{StakeholderId, UserCategory};

    fn id(s: &str) -> StakeholderId {
        StakeholderId::new(s).unwrap()
    }

    fn net() -> CollaborationNetwork {
        let mut n = CollaborationNetwork::new("R2.2");
        n.add_weight(id("a&b"), id("c"), 1.0 / 6.0).unwrap();
        n.add_weight(id("c"), id("a&b"), 0.5).unwrap();
        n.add_vertex(id("lonely"));
        n
    }

    #[test]
    fn ten_significant_digits() {
        assert_eq!(format_weight(1.0 / 6.0), "0.1666666667");
        assert_eq!(format_weight(0.5), "0.5000000000");
        assert_eq!(format_weight(12.5), "12.50000000");
        assert_eq!(format_weight(9.99999999999), "10.00000000");
        assert_eq!(format_weight(1.0 / 3000.0), "0.0003333333333");
    }

    #[test]
    fn graphml_shape() {
        let map = AffiliationMap::new()
            .with_category("c", UserCategory::PlatformUser)
            .unwrap();
        let mut buf = Vec::new();
        write_graphml(&net(), &map, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains(r#"<graph id="R2.2" edgedefault="directed">"#));
        assert!(text.contains(r#"<node id="a&amp;b">"#));
        assert!(text.contains(r#"<data key="category">platform_user</data>"#));
        assert!(text.contains(r#"<data key="category">unknown</data>"#));
        assert!(text.contains(r#"source="a&amp;b" target="c""#));
        assert!(text.contains(r#"<data key="weight">0.1666666667</data>"#));
        assert_eq!(text.matches("<node ").count(), 3);
        assert_eq!(text.matches("<edge ").count(), 2);
    }

    #[test]
    fn dot_shape() {
        let mut buf = Vec::new();
        write_dot(&net(), &AffiliationMap::new(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("digraph \"R2.2\" {\n"));
        assert!(text.contains("\"c\" -> \"a&b\" [weight=0.5000000000];"));
        assert!(text.contains("\"lonely\" [id=\"lonely\", category=\"unknown\"];"));
        assert!(text.ends_with("}\n"));
    }
}

//! GraphML and DOT writers for undirected attributed graphs.

use std::io::{self, Write};

#[derive(Debug, Clone, PartialEq)]
pub enum AttrValue {
    Int(i64),
    Float(f64),
    Text(String),
}

impl AttrValue {
    fn graphml_type(&self) -> &'static str {
        match self {
            AttrValue::Int(_) => "long",
            AttrValue::Float(_) => "double",
            AttrValue::Text(_) => "string",
        }
    }

    fn render(&self) -> String {
        match self {
            AttrValue::Int(v) => v.to_string(),
            AttrValue::Float(v) => format!("{v:?}"),
            AttrValue::Text(s) => s.clone(),
        }
    }
}

/// Node names with a fixed attribute schema shared by every node.
#[derive(Debug, Clone, Default)]
pub struct AttrGraph {
    pub node_keys: Vec<String>,
    pub nodes: Vec<(String, Vec<AttrValue>)>,
    /// `(source index, target index, weight)`
    pub edges: Vec<(usize, usize, f64)>,
    /// Free-text provenance written as a leading comment.
    pub comment: Option<String>,
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

fn dot_escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

impl AttrGraph {
    pub fn write_graphml<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#)?;
        if let Some(c) = &self.comment {
            writeln!(out, "<!-- {} -->", c.replace("--", "- -"))?;
        }
        writeln!(out, r#"<graphml xmlns="http://graphml.graphdrawing.org/xmlns">"#)?;
        if let Some((_, first)) = self.nodes.first() {
            for (key, val) in self.node_keys.iter().zip(first) {
                writeln!(
                    out,
                    r#"  <key id="{k}" for="node" attr.name="{k}" attr.type="{t}"/>"#,
                    k = xml_escape(key),
                    t = val.graphml_type()
                )?;
            }
        }
        writeln!(
            out,
            r#"  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>"#
        )?;
        writeln!(out, r#"  <graph id="G" edgedefault="undirected">"#)?;
        for (name, attrs) in &self.nodes {
            writeln!(out, r#"    <node id="{}">"#, xml_escape(name))?;
            for (key, val) in self.node_keys.iter().zip(attrs) {
                writeln!(
                    out,
                    r#"      <data key="{}">{}</data>"#,
                    xml_escape(key),
                    xml_escape(&val.render())
                )?;
            }
            writeln!(out, "    </node>")?;
        }
        for (s, t, w) in &self.edges {
            writeln!(
                out,
                r#"    <edge source="{}" target="{}"><data key="weight">{:?}</data></edge>"#,
                xml_escape(&self.nodes[*s].0),
                xml_escape(&self.nodes[*t].0),
                w
            )?;
        }
        writeln!(out, "  </graph>")?;
        writeln!(out, "</graphml>")
    }

    pub fn write_dot<W: Write>(&self, mut out: W) -> io::Result<()> {
        if let Some(c) = &self.comment {
            for line in c.lines() {
                writeln!(out, "// {line}")?;
            }
        }
        writeln!(out, "graph G {{")?;
        for (name, attrs) in &self.nodes {
            let rendered: Vec<String> = self
                .node_keys
                .iter()
                .zip(attrs)
                .map(|(k, v)| format!("{}=\"{}\"", k, dot_escape(&v.render())))
                .collect();
            writeln!(out, "  \"{}\" [{}];", dot_escape(name), rendered.join(", "))?;
        }
        for (s, t, w) in &self.edges {
            writeln!(
                out,
                "  \"{}\" -- \"{}\" [weight=\"{:?}\"];",
                dot_escape(&self.nodes[*s].0),
                dot_escape(&self.nodes[*t].0),
                w
            )?;
        }
        writeln!(out, "}}")
    }
}

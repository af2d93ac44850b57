//! Simplified DOM model.
//!
//! HTML is parsed with an HTML5-conformant tree builder (so malformed markup
//! is recovered the same way a browser would) and then flattened into an
//! arena of [`DomNode`]s holding only elements, text and comments. The
//! `HTML` element is the root of every tree. Comments that sit outside the
//! `HTML` element in the source are re-homed as its first or last children.

use std::fmt;
use std::fmt::Write as _;

use scraper::{Html, Node};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Element,
    Text,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeData {
    /// Tag is uppercase; attribute names are lowercase, in source order.
    Element {
        tag: String,
        attributes: Vec<(String, String)>,
    },
    Text(String),
    Comment(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomNode {
    pub id: NodeId,
    pub data: NodeData,
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
}

impl DomNode {
    pub fn kind(&self) -> NodeKind {
        match self.data {
            NodeData::Element { .. } => NodeKind::Element,
            NodeData::Text(_) => NodeKind::Text,
            NodeData::Comment(_) => NodeKind::Comment,
        }
    }

    /// Uppercase tag name, `None` for text and comment nodes.
    pub fn tag(&self) -> Option<&str> {
        match &self.data {
            NodeData::Element { tag, .. } => Some(tag),
            _ => None,
        }
    }

    pub fn is_element(&self, name: &str) -> bool {
        self.tag().is_some_and(|t| t.eq_ignore_ascii_case(name))
    }

    pub fn attributes(&self) -> &[(String, String)] {
        match &self.data {
            NodeData::Element { attributes, .. } => attributes,
            _ => &[],
        }
    }

    /// Attribute lookup, case-insensitive on the name.
    pub fn attr(&self, name: &str) -> Option<&str> {
        self.attributes()
            .iter()
            .find(|(n, _)| n.eq_ignore_ascii_case(name))
            .map(|(_, v)| v.as_str())
    }

    /// Character content of text and comment nodes.
    pub fn text(&self) -> Option<&str> {
        match &self.data {
            NodeData::Text(t) | NodeData::Comment(t) => Some(t),
            NodeData::Element { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DomTree {
    nodes: Vec<DomNode>,
    doctype: Option<String>,
}

impl DomTree {
    pub fn root(&self) -> NodeId {
        NodeId(0)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn get(&self, id: NodeId) -> Option<&DomNode> {
        self.nodes.get(id.0)
    }

    pub fn node(&self, id: NodeId) -> Result<&DomNode> {
        self.get(id).ok_or(Error::UnknownNode(id))
    }

    pub fn nodes(&self) -> impl Iterator<Item = &DomNode> {
        self.nodes.iter()
    }

    pub fn doctype(&self) -> Option<&str> {
        self.doctype.as_deref()
    }

    // Callers hold ids produced by this tree; an out-of-range id is a bug.
    pub(crate) fn at(&self, id: NodeId) -> &DomNode {
        &self.nodes[id.0]
    }

    /// Pre-order walk of the subtree rooted at `id`, including `id` itself.
    pub fn descendants(&self, id: NodeId) -> Descendants<'_> {
        Descendants {
            tree: self,
            stack: vec![id],
        }
    }

    /// Proper ancestors of `id`, nearest first.
    pub fn ancestors(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        std::iter::successors(self.at(id).parent, move |p| self.at(*p).parent)
    }

    pub fn is_ancestor_or_self(&self, ancestor: NodeId, node: NodeId) -> bool {
        ancestor == node || self.ancestors(node).any(|a| a == ancestor)
    }

    pub fn element_children(&self, id: NodeId) -> impl Iterator<Item = NodeId> + '_ {
        self.at(id)
            .children
            .iter()
            .copied()
            .filter(move |c| self.at(*c).kind() == NodeKind::Element)
    }

    /// First element with the given tag in document order.
    pub fn find_first(&self, tag: &str) -> Option<NodeId> {
        self.descendants(self.root())
            .find(|id| self.at(*id).is_element(tag))
    }

    pub fn body(&self) -> Option<NodeId> {
        self.element_children(self.root())
            .find(|id| self.at(*id).is_element("BODY"))
    }

    /// Slash-separated path from the root, with a sibling index on elements
    /// that share their tag with an earlier sibling, e.g.
    /// `HTML/BODY/TABLE/TBODY/TR[1]`.
    pub fn path(&self, id: NodeId) -> String {
        let mut chain: Vec<NodeId> = self.ancestors(id).collect();
        chain.reverse();
        chain.push(id);
        let mut out = String::new();
        for (i, n) in chain.iter().enumerate() {
            if i > 0 {
                out.push('/');
            }
            let node = self.at(*n);
            match &node.data {
                NodeData::Element { tag, .. } => {
                    out.push_str(tag);
                    if let Some(parent) = node.parent {
                        let same: Vec<NodeId> = self
                            .element_children(parent)
                            .filter(|c| self.at(*c).tag() == Some(tag.as_str()))
                            .collect();
                        if same.len() > 1 {
                            let pos = same.iter().position(|c| c == n).unwrap_or(0);
                            let _ = write!(out, "[{pos}]");
                        }
                    }
                }
                NodeData::Text(_) => out.push_str("#text"),
                NodeData::Comment(_) => out.push_str("#comment"),
            }
        }
        out
    }

    /// Serialize back to HTML. Re-parsing the output yields an identical tree.
    pub fn to_html(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.doctype {
            let _ = write!(out, "<!DOCTYPE {name}>");
        }
        self.write_node(self.root(), &mut out);
        out
    }

    fn write_node(&self, id: NodeId, out: &mut String) {
        let node = self.at(id);
        match &node.data {
            NodeData::Element { tag, attributes } => {
                let name = tag.to_ascii_lowercase();
                out.push('<');
                out.push_str(&name);
                for (k, v) in attributes {
                    let _ = write!(out, " {k}=\"{}\"", escape(v, true));
                }
                out.push('>');
                if VOID_ELEMENTS.contains(&tag.as_str()) {
                    return;
                }
                if matches!(tag.as_str(), "PRE" | "TEXTAREA" | "LISTING") {
                    let leading_newline = node
                        .children
                        .first()
                        .and_then(|c| self.at(*c).text().filter(|_| self.at(*c).kind() == NodeKind::Text))
                        .is_some_and(|t| t.starts_with('\n'));
                    if leading_newline {
                        out.push('\n');
                    }
                }
                for c in &node.children {
                    self.write_node(*c, out);
                }
                let _ = write!(out, "</{name}>");
            }
            NodeData::Text(t) => {
                let raw = node
                    .parent
                    .and_then(|p| self.at(p).tag())
                    .is_some_and(|t| RAW_TEXT_ELEMENTS.contains(&t));
                if raw {
                    out.push_str(t);
                } else {
                    out.push_str(&escape(t, false));
                }
            }
            NodeData::Comment(t) => {
                let _ = write!(out, "<!--{t}-->");
            }
        }
    }
}

const VOID_ELEMENTS: &[&str] = &[
    "AREA", "BASE", "BR", "COL", "EMBED", "HR", "IMG", "INPUT", "LINK", "META", "PARAM", "SOURCE",
    "TRACK", "WBR", "BASEFONT", "BGSOUND", "FRAME", "KEYGEN",
];

const RAW_TEXT_ELEMENTS: &[&str] = &[
    "SCRIPT", "STYLE", "XMP", "IFRAME", "NOEMBED", "NOFRAMES", "NOSCRIPT", "PLAINTEXT",
];

fn escape(s: &str, attribute: bool) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '\u{a0}' => out.push_str("&nbsp;"),
            '"' if attribute => out.push_str("&quot;"),
            '<' if !attribute => out.push_str("&lt;"),
            '>' if !attribute => out.push_str("&gt;"),
            _ => out.push(c),
        }
    }
    out
}

pub struct Descendants<'a> {
    tree: &'a DomTree,
    stack: Vec<NodeId>,
}

impl Iterator for Descendants<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let id = self.stack.pop()?;
        self.stack
            .extend(self.tree.at(id).children.iter().rev().copied());
        Some(id)
    }
}

/// Decode `document` and parse it into a [`DomTree`].
///
/// Without an encoding hint the bytes must be UTF-8 (a leading BOM is
/// skipped). With a hint, any WHATWG encoding label is accepted.
pub fn parse_html(document: &[u8], encoding: Option<&str>) -> Result<DomTree> {
    let text = decode(document, encoding)?;
    parse_str(&text)
}

fn decode(bytes: &[u8], label: Option<&str>) -> Result<String> {
    let encoding = match label {
        None => encoding_rs::UTF_8,
        Some(l) => encoding_rs::Encoding::for_label(l.trim().as_bytes())
            .ok_or_else(|| Error::UnknownEncoding(l.to_string()))?,
    };
    let bytes = if encoding == encoding_rs::UTF_8 {
        bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes)
    } else {
        bytes
    };
    encoding
        .decode_without_bom_handling_and_without_replacement(bytes)
        .map(|s| s.into_owned())
        .ok_or_else(|| Error::Decode {
            encoding: encoding.name().to_string(),
        })
}

pub fn parse_str(document: &str) -> Result<DomTree> {
    if document.trim().is_empty() {
        return Err(Error::EmptyDocument);
    }
    let html = Html::parse_document(document);
    let doc = html.tree.root();

    let mut doctype = None;
    let mut before = Vec::new();
    let mut after = Vec::new();
    let mut root = None;
    for child in doc.children() {
        match child.value() {
            Node::Doctype(d) => doctype = Some(d.name().to_string()),
            Node::Element(_) => root = Some(child),
            Node::Comment(c) if root.is_none() => before.push(c.to_string()),
            Node::Comment(c) => after.push(c.to_string()),
            _ => {}
        }
    }
    // The tree builder always creates an html element.
    let root = root.ok_or(Error::EmptyDocument)?;

    let mut tree = DomTree {
        nodes: Vec::new(),
        doctype,
    };
    let root_id = tree.push(None, element_data(root.value()));
    for c in before {
        tree.push(Some(root_id), NodeData::Comment(c));
    }
    let mut stack: Vec<(NodeId, _)> = root.children().rev().map(|c| (root_id, c)).collect();
    // Children of the root must come before the trailing comments, so the
    // walk below runs to completion first.
    while let Some((parent, n)) = stack.pop() {
        let data = match n.value() {
            Node::Element(_) => element_data(n.value()),
            Node::Text(t) => NodeData::Text(t.to_string()),
            Node::Comment(c) => NodeData::Comment(c.to_string()),
            _ => continue,
        };
        let is_element = matches!(data, NodeData::Element { .. });
        let id = tree.push(Some(parent), data);
        if is_element {
            stack.extend(n.children().rev().map(|c| (id, c)));
        }
    }
    for c in after {
        tree.push(Some(root_id), NodeData::Comment(c));
    }
    Ok(tree)
}

fn element_data(node: &Node) -> NodeData {
    let el = node.as_element().expect("element node");
    NodeData::Element {
        tag: el.name().to_ascii_uppercase(),
        attributes: el
            .attrs()
            .map(|(k, v)| (k.to_ascii_lowercase(), v.to_string()))
            .collect(),
    }
}

impl DomTree {
    fn push(&mut self, parent: Option<NodeId>, data: NodeData) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(DomNode {
            id,
            data,
            parent,
            children: Vec::new(),
        });
        if let Some(p) = parent {
            self.nodes[p.0].children.push(id);
        }
        id
    }
}

/// An `IMG` element and the attributes the validity filter looks at.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub node: NodeId,
    /// Position among all `IMG` elements of the page, in document order.
    pub index: usize,
    pub width_px: Option<u32>,
    pub height_px: Option<u32>,
    pub src: String,
    pub alt: Option<String>,
}

impl ImageRef {
    /// Stable key of the form `<index>:<src>`.
    pub fn key(&self) -> String {
        format!("{}:{}", self.index, self.src)
    }
}

/// All `IMG` elements of the page in document order.
pub fn collect_images(tree: &DomTree) -> Vec<ImageRef> {
    tree.descendants(tree.root())
        .filter(|id| tree.at(*id).is_element("IMG"))
        .enumerate()
        .map(|(index, id)| image_ref(tree, id, index))
        .collect()
}

fn image_ref(tree: &DomTree, id: NodeId, index: usize) -> ImageRef {
    let node = tree.at(id);
    ImageRef {
        node: id,
        index,
        width_px: node.attr("width").and_then(parse_dimension),
        height_px: node.attr("height").and_then(parse_dimension),
        src: node.attr("src").unwrap_or_default().to_string(),
        alt: node.attr("alt").map(str::to_string),
    }
}

fn parse_dimension(v: &str) -> Option<u32> {
    v.trim().parse::<u32>().ok().filter(|d| *d > 0)
}

/// Valid-image size rule.
///
/// The aspect ratio must lie in `[1/5, 5]`, and images smaller than 60px in
/// both dimensions are rejected unless both sides are in `[45, 60)` with an
/// aspect ratio in `[1/2, 2]`. Images missing either dimension are accepted
/// unless `strict_dims` is set.
pub fn is_valid_image(img: &ImageRef, strict_dims: bool) -> bool {
    match (img.width_px, img.height_px) {
        (Some(w), Some(h)) => is_valid_size(w, h),
        _ => !strict_dims,
    }
}

pub fn is_valid_size(width: u32, height: u32) -> bool {
    let (w, h) = (u64::from(width), u64::from(height));
    if w == 0 || h == 0 {
        return false;
    }
    let ratio_ok = 5 * w >= h && w <= 5 * h;
    if !ratio_ok {
        return false;
    }
    if w >= 60 || h >= 60 {
        return true;
    }
    let mid = |d: u64| (45..60).contains(&d);
    mid(w) && mid(h) && 2 * w >= h && w <= 2 * h
}

/// What counts as a text node when measuring a subtree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextCountPolicy {
    /// Minimum length, in characters, after trimming whitespace.
    pub min_visible_chars: usize,
    /// Count text under `SCRIPT`/`STYLE` and comment nodes as well.
    pub count_script_and_comment_text: bool,
}

impl Default for TextCountPolicy {
    fn default() -> Self {
        TextCountPolicy {
            min_visible_chars: 1,
            count_script_and_comment_text: false,
        }
    }
}

impl TextCountPolicy {
    pub fn new(min_visible_chars: usize, count_script_and_comment_text: bool) -> Result<Self> {
        if min_visible_chars == 0 {
            return Err(Error::InvalidArgument(
                "min_visible_chars must be at least 1".into(),
            ));
        }
        Ok(TextCountPolicy {
            min_visible_chars,
            count_script_and_comment_text,
        })
    }
}

/// Whether `id` is a text node the policy counts.
pub fn is_countable_text(tree: &DomTree, id: NodeId, policy: &TextCountPolicy) -> bool {
    let node = tree.at(id);
    let long_enough =
        |t: &str| t.trim().chars().count() >= policy.min_visible_chars;
    match &node.data {
        NodeData::Text(t) => {
            if !long_enough(t) {
                return false;
            }
            policy.count_script_and_comment_text
                || !tree
                    .ancestors(id)
                    .any(|a| matches!(tree.at(a).tag(), Some("SCRIPT" | "STYLE")))
        }
        NodeData::Comment(t) => policy.count_script_and_comment_text && long_enough(t),
        NodeData::Element { .. } => false,
    }
}

pub fn count_text_nodes(tree: &DomTree, subtree_root: NodeId, policy: &TextCountPolicy) -> Result<usize> {
    tree.node(subtree_root)?;
    Ok(tree
        .descendants(subtree_root)
        .filter(|id| is_countable_text(tree, *id, policy))
        .count())
}

/// Number of valid `IMG` elements in the subtree.
pub fn count_image_nodes(tree: &DomTree, subtree_root: NodeId, strict_dims: bool) -> Result<usize> {
    tree.node(subtree_root)?;
    Ok(tree
        .descendants(subtree_root)
        .filter(|id| is_valid_image_node(tree, *id, strict_dims))
        .count())
}

pub(crate) fn is_valid_image_node(tree: &DomTree, id: NodeId, strict_dims: bool) -> bool {
    let node = tree.at(id);
    node.is_element("IMG") && is_valid_image(&image_ref(tree, id, 0), strict_dims)
}

//! Contextual text extraction from image segments.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::dom::{DomTree, NodeData, NodeId};
use crate::error::{Error, Result};
use crate::location::{location_vocabulary, LocationDescriptor, PageCategory, SignificantLocationTable, Visibility};
use crate::segment::ImageSegment;

/// One word or phrase found near an image.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextItem {
    pub text: String,
    pub location: LocationDescriptor,
    pub visibility: Visibility,
    pub source_node: NodeId,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tokens: Vec<String>,
}

/// Attributes whose values are URLs or paths and get split into words.
const URL_ATTRIBUTES: &[&str] = &["SRC", "HREF", "ACTION", "LONGDESC"];

/// Extract items from the locations `table` marks significant for
/// `category`.
pub fn extract_context(
    tree: &DomTree,
    segment: &ImageSegment,
    category: PageCategory,
    table: &SignificantLocationTable,
) -> Result<Vec<ContextItem>> {
    let wanted = table.locations(category);
    scan(tree, segment, |loc| wanted.contains(loc))
}

/// Extract items from every known location, regardless of significance.
///
/// Attributes are limited to the reference vocabulary; text is reported for
/// whatever element encloses it.
pub fn enumerate_all_locations(tree: &DomTree, segment: &ImageSegment) -> Result<Vec<ContextItem>> {
    let vocabulary = location_vocabulary();
    scan(tree, segment, |loc| match loc {
        LocationDescriptor::AttributeOf { .. } => vocabulary.contains(loc),
        _ => true,
    })
}

fn scan(tree: &DomTree, segment: &ImageSegment, accept: impl Fn(&LocationDescriptor) -> bool) -> Result<Vec<ContextItem>> {
    tree.node(segment.segment_root)?;

    // (document position, item); sorted at the end
    let mut items: Vec<(usize, ContextItem)> = Vec::new();
    // parent element -> (position of first text, texts)
    let mut enclosed: HashMap<NodeId, (usize, Vec<&str>)> = HashMap::new();

    let nodes = segment
        .top_nodes(tree)
        .into_iter()
        .flat_map(|top| tree.descendants(top));
    for (pos, id) in nodes.enumerate() {
        let node = tree.at(id);
        match &node.data {
            NodeData::Element { tag, attributes } => {
                // document-level locations are handled below
                if matches!(tag.as_str(), "META" | "TITLE") {
                    continue;
                }
                for (name, value) in attributes {
                    let location = LocationDescriptor::attribute(tag, name);
                    if !accept(&location) {
                        continue;
                    }
                    if let Some(item) = attribute_item(location, name, value, id) {
                        items.push((pos, item));
                    }
                }
            }
            NodeData::Text(text) => {
                if text.trim().is_empty() {
                    continue;
                }
                if let Some(parent) = node.parent {
                    enclosed.entry(parent).or_insert_with(|| (pos, Vec::new())).1.push(text);
                }
            }
            NodeData::Comment(text) => {
                let location = LocationDescriptor::CommentTag;
                let text = collapse_whitespace(text);
                if accept(&location) && !text.is_empty() {
                    items.push((pos, item(text, location, id, Vec::new())));
                }
            }
        }
    }

    for (parent, (pos, texts)) in enclosed {
        let Some(tag) = tree.at(parent).tag() else {
            continue;
        };
        if matches!(tag, "STYLE" | "TITLE") {
            continue;
        }
        let location = LocationDescriptor::enclosed(tag);
        if !accept(&location) {
            continue;
        }
        let text = collapse_whitespace(&texts.join(" "));
        items.push((pos, item(text, location, parent, Vec::new())));
    }
    items.sort_by_key(|(pos, _)| *pos);
    let mut out: Vec<ContextItem> = items.into_iter().map(|(_, i)| i).collect();
    out.extend(document_items(tree, &accept));
    Ok(out)
}

fn document_items(tree: &DomTree, accept: &impl Fn(&LocationDescriptor) -> bool) -> Vec<ContextItem> {
    let mut out = Vec::new();
    if accept(&LocationDescriptor::PageTitle) {
        if let Some(title) = tree.find_first("TITLE") {
            let text: Vec<&str> = tree.descendants(title).filter_map(|d| tree.at(d).text()).collect();
            let text = collapse_whitespace(&text.join(" "));
            if !text.is_empty() {
                out.push(item(text, LocationDescriptor::PageTitle, title, Vec::new()));
            }
        }
    }
    if accept(&LocationDescriptor::MetaContent) {
        for id in tree.descendants(tree.root()) {
            let node = tree.at(id);
            if !node.is_element("META") || node.attr("http-equiv").is_some() || node.attr("charset").is_some() {
                continue;
            }
            if let Some(content) = node.attr("content") {
                let text = collapse_whitespace(content);
                if !text.is_empty() {
                    let tokens = words(&text);
                    out.push(item(text, LocationDescriptor::MetaContent, id, tokens));
                }
            }
        }
    }
    out
}

fn attribute_item(location: LocationDescriptor, name: &str, value: &str, source: NodeId) -> Option<ContextItem> {
    if URL_ATTRIBUTES.iter().any(|a| a.eq_ignore_ascii_case(name)) {
        let tokens = tokenize_url(value);
        if tokens.is_empty() {
            return None;
        }
        return Some(item(tokens.join(" "), location, source, tokens));
    }
    let text = collapse_whitespace(value);
    if text.is_empty() {
        return None;
    }
    let tokens = words(&text);
    Some(item(text, location, source, tokens))
}

fn item(text: String, location: LocationDescriptor, source_node: NodeId, tokens: Vec<String>) -> ContextItem {
    ContextItem {
        visibility: location.visibility(),
        text,
        location,
        source_node,
        tokens,
    }
}

fn words(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

pub fn collapse_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Split a URL or path into words.
///
/// Scheme, host, fragment and the file extension of the last path segment
/// are dropped; the rest is split on non-alphanumeric characters and
/// lowercased, keeping tokens of at least three characters that are not
/// pure numbers. `javascript:` and `data:` URLs yield nothing.
pub fn tokenize_url(url: &str) -> Vec<String> {
    let url = url.trim();
    let lower = url.to_ascii_lowercase();
    if lower.starts_with("javascript:") || lower.starts_with("data:") {
        return Vec::new();
    }
    let url = url.split('#').next().unwrap_or_default();
    let (path, query) = url.split_once('?').unwrap_or((url, ""));
    let path = if let Some(rest) = path.strip_prefix("//") {
        rest.split_once('/').map_or("", |(_, p)| p)
    } else if let Some((_, rest)) = path.split_once("://") {
        rest.split_once('/').map_or("", |(_, p)| p)
    } else if let Some(rest) = lower.strip_prefix("mailto:").map(|_| &path[7..]) {
        rest
    } else {
        path
    };
    let path = strip_extension(path);

    path.split(|c: char| !c.is_alphanumeric())
        .chain(query.split(|c: char| !c.is_alphanumeric()))
        .filter(|t| t.chars().count() >= 3 && !t.chars().all(|c| c.is_ascii_digit()))
        .map(str::to_lowercase)
        .collect()
}

fn strip_extension(path: &str) -> &str {
    let last_start = path.rfind('/').map_or(0, |i| i + 1);
    match path[last_start..].rfind('.') {
        Some(dot) if dot > 0 => {
            let ext = &path[last_start + dot + 1..];
            if !ext.is_empty() && ext.len() <= 5 && ext.chars().all(|c| c.is_ascii_alphanumeric()) {
                &path[..last_start + dot]
            } else {
                path
            }
        }
        _ => path,
    }
}

/// Share of relevant items per location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationDistribution {
    pub category: PageCategory,
    pub total: usize,
    pub entries: Vec<LocationShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationShare {
    pub location: LocationDescriptor,
    pub count: usize,
    pub percent: f64,
}

impl LocationDistribution {
    /// Build from per-location counts; locations with zero count are kept.
    pub fn from_counts(
        category: PageCategory,
        counts: impl IntoIterator<Item = (LocationDescriptor, usize)>,
    ) -> Result<Self> {
        let mut merged: BTreeMap<LocationDescriptor, usize> = BTreeMap::new();
        for (loc, n) in counts {
            *merged.entry(loc).or_default() += n;
        }
        let total: usize = merged.values().sum();
        if total == 0 {
            return Err(Error::EmptyDistribution);
        }
        let mut entries: Vec<LocationShare> = merged
            .into_iter()
            .map(|(location, count)| LocationShare {
                location,
                count,
                percent: 100.0 * count as f64 / total as f64,
            })
            .collect();
        entries.sort_by(|a, b| b.count.cmp(&a.count).then_with(|| a.location.cmp(&b.location)));
        Ok(LocationDistribution {
            category,
            total,
            entries,
        })
    }

    pub fn percent(&self, location: &LocationDescriptor) -> f64 {
        self.entries
            .iter()
            .find(|e| &e.location == location)
            .map_or(0.0, |e| e.percent)
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|e| e.percent).sum()
    }
}

/// Frequency of relevant items per location.
pub fn location_distribution(items: &[(ContextItem, bool)], category: PageCategory) -> Result<LocationDistribution> {
    if items.is_empty() {
        return Err(Error::EmptyDistribution);
    }
    let locations: BTreeSet<&LocationDescriptor> = items.iter().map(|(i, _)| &i.location).collect();
    let counts = locations.into_iter().map(|loc| {
        let n = items.iter().filter(|(i, relevant)| *relevant && &i.location == loc).count();
        (loc.clone(), n)
    });
    LocationDistribution::from_counts(category, counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::parse_str;
    use crate::location::default_significant_locations;
    use crate::segment::{segment_page, SegmentConfig};

    fn segments(html: &str) -> (DomTree, Vec<ImageSegment>) {
        let tree = parse_str(html).unwrap();
        let segs = segment_page(&tree, SegmentConfig::default()).segments;
        (tree, segs)
    }

    fn summary(items: &[ContextItem]) -> Vec<(String, String)> {
        items.iter().map(|i| (i.location.to_string(), i.text.clone())).collect()
    }

    #[test]
    fn business_product_cell() {
        let (tree, segs) = segments(
            r#"<table><tr><td><img alt="thermal cat mat"></td><td><a href="/thermal-cat-mat-p-150.html">Thermal Cat Mat</a></td></tr></table>"#,
        );
        assert_eq!(segs.len(), 1);
        let items = extract_context(&tree, &segs[0], PageCategory::Business, &default_significant_locations()).unwrap();
        assert_eq!(
            summary(&items),
            vec![
                ("ATTR:IMG:ALT".into(), "thermal cat mat".into()),
                ("ATTR:A:HREF".into(), "thermal cat mat".into()),
                ("ENCL:A".into(), "Thermal Cat Mat".into()),
            ]
        );
        assert_eq!(items[1].tokens, vec!["thermal", "cat", "mat"]);
        assert_eq!(items[0].visibility, Visibility::Hidden);
        assert_eq!(items[2].visibility, Visibility::Visible);
    }

    #[test]
    fn heading_text_is_not_a_default_location() {
        let (tree, segs) = segments("<div><img><h2>Only a heading</h2></div>");
        let items = extract_context(&tree, &segs[0], PageCategory::Unknown, &default_significant_locations()).unwrap();
        assert!(items.is_empty());
        let all = enumerate_all_locations(&tree, &segs[0]).unwrap();
        assert_eq!(summary(&all), vec![("ENCL:H2".into(), "Only a heading".into())]);
    }

    #[test]
    fn advocacy_ignores_src() {
        let (tree, segs) = segments(r#"<p>words <img src="x.jpg"></p>"#);
        let t = default_significant_locations();
        let seg = &segs[0];
        let only_src = extract_context(&tree, seg, PageCategory::Advocacy, &t)
            .unwrap()
            .into_iter()
            .filter(|i| i.location.to_string() == "ATTR:IMG:SRC")
            .count();
        assert_eq!(only_src, 0);
        // x.jpg has no word of three letters or more
        assert!(tokenize_url("x.jpg").is_empty());
    }

    #[test]
    fn enumerate_covers_script_and_alt() {
        let (tree, segs) = segments(r#"<div><p>caption</p><img alt="a dog"><script>var dog = 1;</script></div>"#);
        let all = enumerate_all_locations(&tree, &segs[0]).unwrap();
        assert_eq!(
            summary(&all),
            vec![
                ("ENCL:P".into(), "caption".into()),
                ("ATTR:IMG:ALT".into(), "a dog".into()),
                ("SCRIPT".into(), "var dog = 1;".into()),
            ]
        );
    }

    #[test]
    fn nearest_enclosing_element_wins() {
        let (tree, segs) = segments("<table><tr><td><img></td><td>price <a href=/x>Blue Shirt</a> now</td></tr></table>");
        let all = enumerate_all_locations(&tree, &segs[0]).unwrap();
        assert_eq!(
            summary(&all),
            vec![("ENCL:TD".into(), "price now".into()), ("ENCL:A".into(), "Blue Shirt".into())]
        );
    }

    #[test]
    fn title_and_meta_are_document_wide() {
        let (tree, segs) = segments(
            r#"<head><title>Cat Shop</title><meta name="description" content="warm  cat beds"><meta charset="utf-8"></head><body><p>caption<img></p></body>"#,
        );
        let all = enumerate_all_locations(&tree, &segs[0]).unwrap();
        let s = summary(&all);
        assert!(s.contains(&("ENCL:TITLE".into(), "Cat Shop".into())));
        assert!(s.contains(&("ATTR:META:CONTENT".into(), "warm cat beds".into())));
        assert_eq!(s.iter().filter(|(l, _)| l == "ATTR:META:CONTENT").count(), 1);
        let t = default_significant_locations();
        let business = extract_context(&tree, &segs[0], PageCategory::Business, &t).unwrap();
        assert!(business.iter().all(|i| i.location != LocationDescriptor::PageTitle));
    }

    #[test]
    fn comments_are_hidden_items() {
        let (tree, segs) = segments("<div><!-- photo of the dog --><img><p>Rex</p></div>");
        let all = enumerate_all_locations(&tree, &segs[0]).unwrap();
        let comment = all.iter().find(|i| i.location == LocationDescriptor::CommentTag).unwrap();
        assert_eq!(comment.text, "photo of the dog");
        assert_eq!(comment.visibility, Visibility::Hidden);
    }

    #[test]
    fn url_tokens() {
        assert_eq!(tokenize_url("/thermal-cat-mat-p-150.html"), vec!["thermal", "cat", "mat"]);
        assert_eq!(
            tokenize_url("http://www.shop.com/images/Blue_Shirt.JPG?size=large#top"),
            vec!["images", "blue", "shirt", "size", "large"]
        );
        assert_eq!(tokenize_url("//cdn.example.org/beach-2019.png"), vec!["beach"]);
        assert!(tokenize_url("javascript:void(0)").is_empty());
        assert_eq!(tokenize_url("mailto:editor@paper.net"), vec!["editor", "paper"]);
        assert_eq!(tokenize_url("archive.tar.gz"), vec!["archive", "tar"]);
    }

    #[test]
    fn distribution_shares() {
        let d = LocationDistribution::from_counts(
            PageCategory::Business,
            [("ATTR:IMG:ALT".parse().unwrap(), 162), ("ENCL:A".parse().unwrap(), 905 - 162)],
        )
        .unwrap();
        let alt: LocationDescriptor = "ATTR:IMG:ALT".parse().unwrap();
        assert_eq!(format!("{:.1}", d.percent(&alt)), "17.9");
        assert!((d.sum() - 100.0).abs() < 1e-9);
    }

    #[test]
    fn distribution_from_items() {
        let (tree, segs) = segments(r#"<div><p>caption</p><img alt="a dog"></div>"#);
        let all = enumerate_all_locations(&tree, &segs[0]).unwrap();
        let judged: Vec<_> = all.iter().cloned().map(|i| (i, true)).collect();
        let d = location_distribution(&judged, PageCategory::Unknown).unwrap();
        assert_eq!(d.entries.len(), 2);
        assert!(d.entries.iter().all(|e| e.percent == 50.0));

        let one: Vec<_> = vec![(all[0].clone(), true), (all[1].clone(), false)];
        let d = location_distribution(&one, PageCategory::Unknown).unwrap();
        assert_eq!(d.percent(&all[0].location), 100.0);
        assert_eq!(d.percent(&all[1].location), 0.0);

        let none: Vec<_> = all.iter().cloned().map(|i| (i, false)).collect();
        assert!(matches!(location_distribution(&none, PageCategory::Unknown), Err(Error::EmptyDistribution)));
        assert!(matches!(location_distribution(&[], PageCategory::Unknown), Err(Error::EmptyDistribution)));
    }

    #[test]
    fn unknown_segment_root_is_lookup_error() {
        let (tree, segs) = segments("<p>caption<img></p>");
        let mut seg = segs[0].clone();
        seg.segment_root = NodeId(10_000);
        assert!(matches!(enumerate_all_locations(&tree, &seg), Err(Error::UnknownNode(_))));
    }
}

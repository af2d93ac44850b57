//! Image segmentation by text-count state changes along the ancestor path.
//!
//! Starting from an image, the walk goes up one level at a time and watches
//! the number of countable text nodes in the current subtree. The first level
//! where any text appears is the inner region. If its children form a
//! repeating run with one image per repetition the run is cut into slices
//! (semi-listed images). Otherwise the walk continues to the next level where
//! the count grows again (the outer region) and the child just below it is
//! compared with its siblings: similar siblings that also carry images mean
//! the image is listed and the child is the segment; otherwise the image is
//! unlisted and the outer region is the segment.
//!
//! The walk never leaves `BODY`. Document-level text such as the page title
//! is handled by the context extractor instead.

use serde::{Deserialize, Serialize};

use crate::dom::{collect_images, is_countable_text, is_valid_image, is_valid_image_node, DomTree, ImageRef, NodeData, NodeId, TextCountPolicy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImageArrangement {
    Unlisted,
    Listed,
    SemiListed,
}

impl std::fmt::Display for ImageArrangement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ImageArrangement::Unlisted => "unlisted",
            ImageArrangement::Listed => "listed",
            ImageArrangement::SemiListed => "semi-listed",
        })
    }
}

/// One repetition of a repeating child run.
///
/// `start..=end` index the container's element children. `raw_start..raw_end`
/// index all of its children and also cover loose text that follows the last
/// element of the repetition, up to the next repetition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChildSlice {
    pub start: usize,
    pub end: usize,
    pub raw_start: usize,
    pub raw_end: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSegment {
    pub image: ImageRef,
    pub segment_root: NodeId,
    /// Set for semi-listed images: the part of `segment_root` that belongs
    /// to this image.
    pub slice: Option<ChildSlice>,
    pub arrangement: ImageArrangement,
    pub text_node_ids: Vec<NodeId>,
    pub inner_root: NodeId,
    pub outer_root: Option<NodeId>,
}

impl ImageSegment {
    /// The nodes whose subtrees make up the segment.
    pub fn top_nodes(&self, tree: &DomTree) -> Vec<NodeId> {
        match self.slice {
            Some(s) => tree.node(self.segment_root).map_or_else(
                |_| Vec::new(),
                |n| n.children[s.raw_start..s.raw_end.min(n.children.len())].to_vec(),
            ),
            None => vec![self.segment_root],
        }
    }

    pub fn contains(&self, tree: &DomTree, node: NodeId) -> bool {
        self.top_nodes(tree)
            .iter()
            .any(|top| tree.is_ancestor_or_self(*top, node))
    }
}

/// Bookkeeping of the upward walk.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TraversalState {
    /// Text count recorded at the last state change.
    pub state: usize,
    pub state_img: usize,
    pub state_text: usize,
    /// Set once the first change has been recorded; the next change closes
    /// the walk.
    pub state_changed_twice: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentConfig {
    pub text_policy: TextCountPolicy,
    pub strict_dims: bool,
}

/// Per-node subtree counts, filled bottom-up in one pass.
struct SubtreeCounts {
    text: Vec<usize>,
    images: Vec<usize>,
}

impl SubtreeCounts {
    fn new(tree: &DomTree, config: &SegmentConfig) -> Self {
        let n = tree.len();
        let mut text = vec![0; n];
        let mut images = vec![0; n];
        // Ids are assigned in pre-order, so every child has a larger id
        // than its parent.
        for i in (0..n).rev() {
            let id = NodeId(i);
            if is_countable_text(tree, id, &config.text_policy) {
                text[i] += 1;
            }
            if is_valid_image_node(tree, id, config.strict_dims) {
                images[i] += 1;
            }
            if let Some(p) = tree.at(id).parent {
                text[p.0] += text[i];
                images[p.0] += images[i];
            }
        }
        SubtreeCounts { text, images }
    }
}

/// Segments images of one tree, sharing subtree counts between images.
pub struct Segmenter<'a> {
    tree: &'a DomTree,
    config: SegmentConfig,
    counts: SubtreeCounts,
}

impl<'a> Segmenter<'a> {
    pub fn new(tree: &'a DomTree, config: SegmentConfig) -> Self {
        Segmenter {
            tree,
            config,
            counts: SubtreeCounts::new(tree, &config),
        }
    }

    pub fn segment(&self, img: &ImageRef) -> Result<ImageSegment> {
        let tree = self.tree;
        let node = tree.node(img.node)?;
        if !node.is_element("IMG") || !is_valid_image(img, self.config.strict_dims) {
            return Err(Error::InvalidArgument(format!(
                "node {} is not a valid image",
                img.node
            )));
        }

        let path = walk_path(tree, img.node);
        let mut st = TraversalState::default();
        let mut inner = None;
        let mut child = img.node;
        for &current in &path {
            st.state_img = self.counts.images[current.0];
            st.state_text = self.counts.text[current.0];
            let changed = st.state_text != st.state && st.state_img > 0 && st.state_text > 0;
            if changed {
                if st.state_changed_twice {
                    let inner_root = inner.expect("first change recorded");
                    let listed = self.is_listed(current, child);
                    let (root, arrangement) = if listed {
                        (child, ImageArrangement::Listed)
                    } else {
                        (current, ImageArrangement::Unlisted)
                    };
                    return Ok(self.finish(img, root, None, arrangement, inner_root, Some(current)));
                }
                inner = Some(current);
                if let Some(slice) = self.semi_listed_slice(current, img.node) {
                    return Ok(self.finish(
                        img,
                        current,
                        Some(slice),
                        ImageArrangement::SemiListed,
                        current,
                        None,
                    ));
                }
                st.state = st.state_text;
                st.state_changed_twice = true;
            }
            child = current;
        }

        match inner {
            Some(inner_root) => Ok(self.finish(
                img,
                inner_root,
                None,
                ImageArrangement::Unlisted,
                inner_root,
                None,
            )),
            None => Err(Error::NoSegment(img.node)),
        }
    }

    fn finish(
        &self,
        img: &ImageRef,
        segment_root: NodeId,
        slice: Option<ChildSlice>,
        arrangement: ImageArrangement,
        inner_root: NodeId,
        outer_root: Option<NodeId>,
    ) -> ImageSegment {
        let mut seg = ImageSegment {
            image: img.clone(),
            segment_root,
            slice,
            arrangement,
            text_node_ids: Vec::new(),
            inner_root,
            outer_root,
        };
        seg.text_node_ids = seg
            .top_nodes(self.tree)
            .into_iter()
            .flat_map(|top| self.tree.descendants(top))
            .filter(|id| is_countable_text(self.tree, *id, &self.config.text_policy))
            .collect();
        seg
    }

    fn is_listed(&self, outer: NodeId, child: NodeId) -> bool {
        let similar = self
            .tree
            .element_children(outer)
            .filter(|s| self.counts.images[s.0] > 0 && similar_structure(self.tree, child, *s))
            .count();
        similar >= 2
    }

    fn semi_listed_slice(&self, container: NodeId, image: NodeId) -> Option<ChildSlice> {
        let slices = repeating_pattern(self.tree, container, |id| self.counts.images[id.0])?;
        let children = &self.tree.at(container).children;
        let slice_text = |s: &ChildSlice| -> usize {
            children[s.raw_start..s.raw_end]
                .iter()
                .map(|c| self.counts.text[c.0])
                .sum()
        };
        if slices.iter().any(|s| slice_text(s) == 0) {
            return None;
        }
        slices.into_iter().find(|s| {
            children[s.raw_start..s.raw_end]
                .iter()
                .any(|c| self.tree.is_ancestor_or_self(*c, image))
        })
    }

    pub fn segment_page(&self) -> PageSegmentation {
        let mut out = PageSegmentation::default();
        for img in collect_images(self.tree) {
            if !is_valid_image(&img, self.config.strict_dims) {
                continue;
            }
            match self.segment(&img) {
                Ok(seg) => out.segments.push(seg),
                Err(e) => out.skipped.push(SkippedImage {
                    image: img,
                    reason: e.to_string(),
                }),
            }
        }
        out
    }
}

/// Ancestors of `node`, nearest first, up to and including `BODY` (or the
/// root when the node is outside `BODY`).
pub(crate) fn walk_path(tree: &DomTree, node: NodeId) -> Vec<NodeId> {
    let mut path = Vec::new();
    for a in tree.ancestors(node) {
        path.push(a);
        if tree.at(a).is_element("BODY") {
            break;
        }
    }
    path
}

pub fn segment_image(tree: &DomTree, img: &ImageRef, config: SegmentConfig) -> Result<ImageSegment> {
    Segmenter::new(tree, config).segment(img)
}

/// Find the shortest tag sequence whose repetitions make up the element
/// children of `container`, with exactly one valid image per repetition.
///
/// At least two full repetitions are needed. A trailing partial repetition
/// is tolerated when it holds no valid image.
pub fn detect_repeating_pattern(tree: &DomTree, container: NodeId, strict_dims: bool) -> Option<Vec<ChildSlice>> {
    tree.get(container)?;
    repeating_pattern(tree, container, |id| {
        tree.descendants(id)
            .filter(|d| is_valid_image_node(tree, *d, strict_dims))
            .count()
    })
}

fn repeating_pattern(tree: &DomTree, container: NodeId, images_in: impl Fn(NodeId) -> usize) -> Option<Vec<ChildSlice>> {
    let children = &tree.at(container).children;
    let positions: Vec<usize> = children
        .iter()
        .enumerate()
        .filter(|(_, c)| tree.at(**c).tag().is_some())
        .map(|(i, _)| i)
        .collect();
    let tags: Vec<&str> = positions
        .iter()
        .map(|p| tree.at(children[*p]).tag().unwrap_or_default())
        .collect();
    let images: Vec<usize> = positions.iter().map(|p| images_in(children[*p])).collect();
    let m = tags.len();

    for period in 1..=m / 2 {
        if (period..m).any(|i| tags[i] != tags[i % period]) {
            continue;
        }
        let reps = m / period;
        let per_rep_ok = (0..reps).all(|r| images[r * period..(r + 1) * period].iter().sum::<usize>() == 1);
        let tail_ok = images[reps * period..].iter().all(|c| *c == 0);
        if !per_rep_ok || !tail_ok {
            continue;
        }
        let slices = (0..reps)
            .map(|r| {
                let start = r * period;
                let end = start + period - 1;
                let raw_end = if end + 1 < m {
                    positions[end + 1]
                } else {
                    children.len()
                };
                ChildSlice {
                    start,
                    end,
                    raw_start: positions[start],
                    raw_end,
                }
            })
            .collect();
        return Some(slices);
    }
    None
}

/// Same tag, same child tags and same grandchild tags (elements only).
pub fn similar_structure(tree: &DomTree, a: NodeId, b: NodeId) -> bool {
    if a == b {
        return true;
    }
    signature(tree, a) == signature(tree, b)
}

fn signature(tree: &DomTree, id: NodeId) -> (Option<&str>, Vec<(&str, Vec<&str>)>) {
    let tag_of = |n: NodeId| match &tree.at(n).data {
        NodeData::Element { tag, .. } => tag.as_str(),
        _ => "",
    };
    let children = tree
        .element_children(id)
        .map(|c| (tag_of(c), tree.element_children(c).map(tag_of).collect()))
        .collect();
    (tree.at(id).tag(), children)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedImage {
    pub image: ImageRef,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageSegmentation {
    pub segments: Vec<ImageSegment>,
    pub skipped: Vec<SkippedImage>,
}

/// Segment every valid image of the page in document order.
pub fn segment_page(tree: &DomTree, config: SegmentConfig) -> PageSegmentation {
    Segmenter::new(tree, config).segment_page()
}

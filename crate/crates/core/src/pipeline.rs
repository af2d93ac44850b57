//! Parse, segment and extract in one call.

use crate::context::{extract_context, ContextItem};
use crate::dom::{parse_html, DomTree};
use crate::error::Result;
use crate::eval::Prediction;
use crate::location::{default_significant_locations, PageCategory, SignificantLocationTable};
use crate::segment::{segment_page, ImageSegment, SegmentConfig, SkippedImage};

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub category: PageCategory,
    pub segment: SegmentConfig,
    pub locations: SignificantLocationTable,
    /// Encoding label; `None` means UTF-8.
    pub encoding: Option<String>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            category: PageCategory::Unknown,
            segment: SegmentConfig::default(),
            locations: default_significant_locations(),
            encoding: None,
        }
    }
}

impl PipelineConfig {
    pub fn for_category(category: PageCategory) -> Self {
        PipelineConfig {
            category,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExtractedSegment {
    pub segment: ImageSegment,
    pub items: Vec<ContextItem>,
}

#[derive(Debug, Clone)]
pub struct PageResult {
    pub tree: DomTree,
    pub segments: Vec<ExtractedSegment>,
    pub skipped: Vec<SkippedImage>,
}

impl PageResult {
    /// One prediction per segmented image.
    pub fn predictions(&self, page_id: &str) -> Vec<Prediction> {
        self.segments
            .iter()
            .map(|s| {
                let text: Vec<String> = s.items.iter().map(|i| i.text.clone()).collect();
                Prediction::new(page_id, s.segment.image.key(), &text)
            })
            .collect()
    }
}

pub fn process_page(html: &[u8], config: &PipelineConfig) -> Result<PageResult> {
    let tree = parse_html(html, config.encoding.as_deref())?;
    let page = segment_page(&tree, config.segment);
    let segments = page
        .segments
        .into_iter()
        .map(|segment| {
            let items = extract_context(&tree, &segment, config.category, &config.locations)?;
            Ok(ExtractedSegment { segment, items })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PageResult {
        tree,
        segments,
        skipped: page.skipped,
    })
}

//! Seeded synthetic pages with known image segments.
//!
//! Pages are assembled from three block templates:
//!
//! - unlisted: a lone figure whose caption sits beside it and whose story
//!   text sits one level further up;
//! - listed: rows or grid cells of identical shape, one image each;
//! - semi-listed: a flat run of `P A TABLE BR` repeated inside one cell,
//!   the image inside the nested table.
//!
//! Ground truth is recorded while the markup is written, from the values
//! placed in each segment, so it does not depend on parsing.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eval::LabeledSegment;
use crate::location::{default_significant_locations, LocationDescriptor, PageCategory, SignificantLocationTable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FixtureSpec {
    pub seed: u64,
    pub page_id: String,
    /// Number of images of each arrangement. Listed and semi-listed images
    /// come in groups of 2 to 4, so a count of 1 is raised to 2.
    pub unlisted: usize,
    pub listed: usize,
    pub semi_listed: usize,
    /// Word count range of captions and other visible text.
    pub min_words: usize,
    pub max_words: usize,
    pub category: PageCategory,
    /// Add a navigation bar with a small icon that should be ignored.
    pub nav: bool,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            seed: 0,
            page_id: "fixture".into(),
            unlisted: 0,
            listed: 0,
            semi_listed: 0,
            min_words: 1,
            max_words: 6,
            category: PageCategory::Unknown,
            nav: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixture {
    pub html: Vec<u8>,
    pub truth: Vec<LabeledSegment>,
}

const WORDS: &[&str] = &[
    "amber", "anchor", "apple", "arrow", "autumn", "basket", "beacon", "bicycle", "blanket", "bridge", "candle",
    "canyon", "castle", "cedar", "cherry", "cloud", "copper", "coral", "cottage", "crystal", "desert", "dragon",
    "falcon", "feather", "forest", "garden", "glacier", "harbor", "hazel", "island", "jacket", "jungle", "kettle",
    "lantern", "lemon", "maple", "meadow", "mirror", "museum", "orchid", "pebble", "pepper", "piano", "pillow",
    "planet", "pocket", "quartz", "rabbit", "ribbon", "river", "saddle", "shadow", "silk", "summit", "thunder",
    "timber", "tower", "valley", "velvet", "violin", "walnut", "willow", "window", "winter", "zephyr",
];

#[derive(Clone, Copy)]
enum Block {
    Unlisted,
    ListedTable(usize),
    ListedGrid(usize),
    Semi(usize),
}

type Items = Vec<(LocationDescriptor, String)>;

struct Gen<'a> {
    rng: ChaCha8Rng,
    spec: &'a FixtureSpec,
    html: String,
    images: usize,
    /// image key and the items placed in its segment
    segments: Vec<(String, Items)>,
}

fn attr(tag: &str, name: &str) -> LocationDescriptor {
    LocationDescriptor::attribute(tag, name)
}

fn encl(tag: &str) -> LocationDescriptor {
    LocationDescriptor::enclosed(tag)
}

impl Gen<'_> {
    fn word(&mut self) -> &'static str {
        WORDS.choose(&mut self.rng).expect("word list is not empty")
    }

    fn phrase(&mut self) -> String {
        let lo = self.spec.min_words.max(1);
        let hi = self.spec.max_words.max(lo);
        let n = self.rng.gen_range(lo..=hi);
        let mut words: Vec<String> = (0..n).map(|_| self.word().to_string()).collect();
        if self.rng.gen_bool(0.5) {
            let mut chars = words[0].chars();
            let first = chars.next().expect("words are nonempty").to_ascii_uppercase();
            words[0] = first.to_string() + chars.as_str();
        }
        let mut s = words.join(" ");
        if self.rng.gen_bool(0.3) {
            s.push('.');
        }
        s
    }

    /// A link target and the words it yields.
    fn href(&mut self) -> (String, String) {
        let (a, b) = (self.word(), self.word());
        match self.rng.gen_range(0..3) {
            0 => (format!("/{a}/{b}-{}.html", self.rng.gen_range(1..999)), format!("{a} {b}")),
            1 => {
                let c = self.word();
                (format!("https://www.example.com/{a}/{b}?ref={c}#top"), format!("{a} {b} ref {c}"))
            }
            _ => (format!("{a}_{b}.php"), format!("{a} {b}")),
        }
    }

    /// An `IMG` tag, its key and its items.
    fn img(&mut self, items: &mut Items) -> String {
        let (a, b) = (self.word(), self.word());
        let (src, src_text) = match self.rng.gen_range(0..3) {
            0 => (format!("img/{a}-{b}.jpg"), format!("img {a} {b}")),
            1 => (format!("/media/photos/{a}_{b}.png"), format!("media photos {a} {b}")),
            _ => (format!("http://cdn.example.org/{a}/{b}.gif"), format!("{a} {b}")),
        };
        let alt = self.phrase();
        let w = self.rng.gen_range(60..=300u32);
        let h = self.rng.gen_range(60..=300u32);
        items.push((attr("IMG", "SRC"), src_text));
        items.push((attr("IMG", "ALT"), alt.clone()));
        items.push((attr("IMG", "WIDTH"), w.to_string()));
        items.push((attr("IMG", "HEIGHT"), h.to_string()));
        format!("<img src=\"{src}\" alt=\"{alt}\" width=\"{w}\" height=\"{h}\">")
    }

    fn key(&mut self, src_html: &str) -> String {
        let src = src_html
            .split("src=\"")
            .nth(1)
            .and_then(|s| s.split('"').next())
            .expect("img markup has a src");
        let key = format!("{}:{}", self.images, src);
        self.images += 1;
        key
    }

    /// `<a href ...>` opening tag, optionally with a title.
    fn link_open(&mut self, items: &mut Items, with_title: bool) -> String {
        let (href, href_text) = self.href();
        items.push((attr("A", "HREF"), href_text));
        if with_title {
            let title = self.phrase();
            items.push((attr("A", "TITLE"), title.clone()));
            format!("<a href=\"{href}\" title=\"{title}\">")
        } else {
            format!("<a href=\"{href}\">")
        }
    }

    fn nav(&mut self) {
        // a 12x12 icon fails the size filter but still counts for keys
        self.images += 1;
        self.html.push_str(
            "<div class=\"nav\"><a href=\"/index.html\"><img src=\"icons/home.gif\" width=\"12\" height=\"12\" alt=\"home\"></a><a href=\"/about/contact.html\">Contact us</a></div>\n",
        );
    }

    fn unlisted(&mut self) {
        let mut items = Items::new();
        for class in ["story", "figure", "pic"] {
            items.push((attr("DIV", "CLASS"), class.to_string()));
        }
        let mut out = String::from("<div class=\"story\"><div class=\"figure\"><div class=\"pic\">");
        let linked = self.rng.gen_bool(0.5);
        if linked {
            let with_title = self.rng.gen_bool(0.5);
            out.push_str(&self.link_open(&mut items, with_title));
        }
        let img = self.img(&mut items);
        let key = self.key(&img);
        out.push_str(&img);
        if linked {
            out.push_str("</a>");
        }
        let caption = self.phrase();
        let story = self.phrase();
        items.push((encl("P"), caption.clone()));
        items.push((encl("P"), story.clone()));
        out.push_str(&format!("</div><p>{caption}</p></div><p>{story}</p>"));
        if self.rng.gen_bool(0.5) {
            let byline = self.phrase();
            items.push((encl("SPAN"), byline.clone()));
            out.push_str(&format!("<span>{byline}</span>"));
        }
        if self.rng.gen_bool(0.5) {
            let loose = self.phrase();
            items.push((encl("DIV"), loose.clone()));
            out.push_str(&loose);
        }
        out.push_str("</div>\n");
        self.html.push_str(&out);
        self.segments.push((key, items));
    }

    fn listed_table(&mut self, n: usize) {
        let with_title = self.rng.gen_bool(0.5);
        self.html.push_str("<table class=\"gallery\"><tbody>");
        for _ in 0..n {
            let mut items = Items::new();
            let mut row = String::from("<tr><td>");
            row.push_str(&self.link_open(&mut items, with_title));
            let img = self.img(&mut items);
            let key = self.key(&img);
            let caption = self.phrase();
            items.push((encl("TD"), caption.clone()));
            row.push_str(&format!("{img}</a></td><td>{caption}</td></tr>"));
            self.html.push_str(&row);
            self.segments.push((key, items));
        }
        self.html.push_str("</tbody></table>\n");
    }

    fn listed_grid(&mut self, n: usize) {
        self.html.push_str("<div class=\"grid\">");
        for _ in 0..n {
            let mut items = vec![
                (attr("DIV", "CLASS"), "item".to_string()),
                (attr("DIV", "CLASS"), "name".to_string()),
            ];
            let mut cell = String::from("<div class=\"item\">");
            cell.push_str(&self.link_open(&mut items, false));
            let img = self.img(&mut items);
            let key = self.key(&img);
            let name = self.phrase();
            items.push((encl("DIV"), name.clone()));
            cell.push_str(&format!("{img}</a><div class=\"name\">{name}</div></div>"));
            self.html.push_str(&cell);
            self.segments.push((key, items));
        }
        self.html.push_str("</div>\n");
    }

    fn semi(&mut self, n: usize) {
        self.html.push_str("<table class=\"feed\"><tbody><tr><td>");
        for _ in 0..n {
            let mut items = Items::new();
            let intro = self.phrase();
            items.push((encl("P"), intro.clone()));
            let mut run = format!("<p>{intro}</p>");
            run.push_str(&self.link_open(&mut items, false));
            let label = self.phrase();
            items.push((encl("A"), label.clone()));
            run.push_str(&format!("{label}</a><table><tbody><tr><td>"));
            let img = self.img(&mut items);
            let key = self.key(&img);
            run.push_str(&format!("{img}</td></tr></tbody></table><br>"));
            self.html.push_str(&run);
            self.segments.push((key, items));
        }
        self.html.push_str("</td></tr></tbody></table>\n");
    }
}

/// Split `total` into groups of 2 to 4.
fn groups(rng: &mut ChaCha8Rng, total: usize) -> Vec<usize> {
    let mut left = if total == 1 { 2 } else { total };
    let mut out = Vec::new();
    while left > 0 {
        let mut g = rng.gen_range(2..=left.min(4));
        if left - g == 1 {
            g = if g < 4 { g + 1 } else { g - 1 };
        }
        out.push(g);
        left -= g;
    }
    out
}

/// Generate a page using the built-in significant locations.
pub fn generate_fixture(spec: &FixtureSpec) -> Fixture {
    generate_fixture_with(spec, &default_significant_locations())
}

pub fn generate_fixture_with(spec: &FixtureSpec, table: &SignificantLocationTable) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut blocks = vec![Block::Unlisted; spec.unlisted];
    for g in groups(&mut rng, spec.listed) {
        blocks.push(if rng.gen_bool(0.5) {
            Block::ListedTable(g)
        } else {
            Block::ListedGrid(g)
        });
    }
    blocks.extend(groups(&mut rng, spec.semi_listed).into_iter().map(Block::Semi));
    blocks.shuffle(&mut rng);

    let mut gen = Gen {
        rng,
        spec,
        html: String::new(),
        images: 0,
        segments: Vec::new(),
    };
    let title = gen.phrase();
    let description = gen.phrase();
    let headline = gen.phrase();
    gen.html.push_str(&format!(
        "<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\"><title>{title}</title><meta name=\"description\" content=\"{description}\"></head>\n<body>\n"
    ));
    if spec.nav {
        gen.nav();
    }
    gen.html.push_str(&format!("<div id=\"main\"><h1>{headline}</h1>\n"));
    for block in blocks {
        match block {
            Block::Unlisted => gen.unlisted(),
            Block::ListedTable(n) => gen.listed_table(n),
            Block::ListedGrid(n) => gen.listed_grid(n),
            Block::Semi(n) => gen.semi(n),
        }
    }
    let footer = gen.phrase();
    gen.html
        .push_str(&format!("</div>\n<p class=\"footer\">{footer}</p>\n</body></html>\n"));

    let wanted = table.locations(spec.category);
    let mut page_items = vec![(LocationDescriptor::PageTitle, title)];
    page_items.push((LocationDescriptor::MetaContent, description));
    let truth = gen
        .segments
        .into_iter()
        .map(|(key, items)| {
            let text: Vec<String> = items
                .into_iter()
                .chain(page_items.iter().cloned())
                .filter(|(loc, _)| wanted.contains(loc))
                .map(|(_, t)| t)
                .collect();
            LabeledSegment::new(&spec.page_id, key, spec.category, &text).expect("every image carries significant text")
        })
        .collect();
    Fixture {
        html: gen.html.into_bytes(),
        truth,
    }
}

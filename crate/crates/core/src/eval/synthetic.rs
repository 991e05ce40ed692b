//! Seeded synthetic corpora with gold annotations.
//!
//! Documents are sequences of paragraphs. Each paragraph opens with one of
//! the biography templates below, followed by filler text that may mention
//! an office or a reign period:
//!
//! | template | shape                                    |
//! |----------|------------------------------------------|
//! | `P5`     | name [○] 字 style address 人 address office |
//! | `P8`     | name address 人                           |
//! | `P9`     | name address address 人                   |
//! | `P10`    | name reign-period [間] office             |

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, MARKER, ZI};
use crate::error::{Error, Result};
use crate::gold::{EntityKind, GoldAnnotations, GoldDoc, GoldEntity, GoldNe};
use crate::knowledge_base::{KbEntry, KnowledgeBase, LabelType, PersonRecord};
use crate::segmenter::REN;

const JIAN: char = '間';

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Template {
    /// Name followed by a style name and native place.
    P5,
    /// Name and one-level native place.
    P8,
    /// Name and two-level native place.
    P9,
    /// Name, reign period and office.
    P10,
}

impl Template {
    pub const ALL: [Template; 4] = [Template::P5, Template::P8, Template::P9, Template::P10];

    pub fn as_str(self) -> &'static str {
        match self {
            Template::P5 => "P5",
            Template::P8 => "P8",
            Template::P9 => "P9",
            Template::P10 => "P10",
        }
    }

    fn required(self) -> &'static [LabelType] {
        match self {
            Template::P5 => &[LabelType::Name, LabelType::Address, LabelType::Office],
            Template::P8 | Template::P9 => &[LabelType::Name, LabelType::Address],
            Template::P10 => &[LabelType::Name, LabelType::Nianhao, LabelType::Office],
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Template {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Template::ALL
            .into_iter()
            .find(|t| t.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Invalid(format!("unknown template `{s}`")))
    }
}

/// A person written into the corpus by a template.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PlantedRecord {
    pub doc_id: String,
    pub template: Template,
    pub dynasty: String,
    pub name: String,
    pub style: Option<String>,
    pub name_start: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub corpus: Corpus,
    pub gold: GoldAnnotations,
    pub records: Vec<PlantedRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOptions {
    pub paragraphs_per_doc: (usize, usize),
    /// Chance of a circle marker before a paragraph.
    pub leading_marker_rate: f64,
    /// Chance of a circle marker between a name and `字`.
    pub inner_marker_rate: f64,
    /// Chance of an office or reign-period mention in filler text.
    pub distractor_rate: f64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        SynthOptions {
            paragraphs_per_doc: (3, 8),
            leading_marker_rate: 0.15,
            inner_marker_rate: 0.1,
            distractor_rate: 0.3,
        }
    }
}

const SURNAMES: &[&str] = &[
    "陳", "王", "李", "張", "劉", "楊", "黃", "趙", "吳", "周", "徐", "孫", "朱", "胡", "郭", "林", "羅", "鄭", "梁",
    "謝", "許", "韓", "馮", "鄧", "曹", "彭", "曾", "蕭", "潘", "蔡", "歐陽", "司馬",
];
const GIVEN: &str = "瑜璟溥嘉鈞琛瑾璋珪琦瑛珩璞琰璉綸紳繹鏞銘鑑燾煒炳焯熠翰翱翔彬彰斌逵遴邁謙諤詡誼";
const PLACE_HEADS: &str = "雷廣浙閩贛湘蜀滇黔粵桂瓊晉冀魯豫";
const PLACE_TAILS: &str = "州西東南陵川寧泉";
const OFFICES: &[&str] = &[
    "教諭", "訓導", "主簿", "典史", "同知", "通判", "推官", "經歷", "照磨", "檢校", "山長", "都事", "教授", "學錄",
    "提舉", "巡檢", "總管", "參將", "遊擊", "守備",
];
const DYNASTIES: &[(&str, &[&str])] = &[
    ("Tang", &["貞觀", "開元"]),
    ("Yuan", &["至正", "至順"]),
    ("Ming", &["洪武", "永樂", "宣德"]),
    ("Qing", &["康熙", "乾隆", "雍正"]),
];
const STYLE_CHARS: &str = "仲伯叔季庸玉美文卿甫淵宗復克敬實";
const FILLER_CHARS: &str =
    "之乎者也而以其為所與則乃焉哉矣亦且若此彼是故夫曰云謂及因自由在有無不可得見行往來歸去處嘗遂既";

/// A knowledge base shaped for [`generate_synthetic`]: the bundled surname
/// and time lexicons plus generated names, places, offices and reign periods
/// whose characters do not overlap across types.
pub fn synthetic_kb(seed: u64) -> KnowledgeBase {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut kb = KnowledgeBase::default_resources();
    let given: Vec<char> = GIVEN.chars().collect();
    let dynasty_names: Vec<&str> = DYNASTIES.iter().map(|(d, _)| *d).collect();

    for (d, reigns) in DYNASTIES {
        for r in *reigns {
            kb.add_entry(KbEntry::new(*r, LabelType::Nianhao, [*d]))
                .expect("reign periods have no blocking characters");
        }
    }
    for (i, office) in OFFICES.iter().enumerate() {
        let d = dynasty_names[i % dynasty_names.len()];
        kb.add_entry(KbEntry::new(*office, LabelType::Office, [d]))
            .expect("offices have no blocking characters");
    }
    let mut places = Vec::new();
    for h in PLACE_HEADS.chars() {
        for t in PLACE_TAILS.chars() {
            places.push(format!("{h}{t}"));
        }
    }
    places.shuffle(&mut rng);
    places.truncate(80);
    for p in &places {
        kb.add_entry(KbEntry::new(p.as_str(), LabelType::Address, std::iter::empty::<&str>()))
            .expect("places have no blocking characters");
    }

    let mut names = BTreeSet::new();
    while names.len() < 300 {
        let mut name = SURNAMES.choose(&mut rng).expect("non-empty").to_string();
        for _ in 0..rng.gen_range(1..=2) {
            name.push(*given.choose(&mut rng).expect("non-empty"));
        }
        names.insert(name);
    }
    for name in names {
        let d = *dynasty_names.choose(&mut rng).expect("non-empty");
        kb.add_entry(KbEntry::new(name.as_str(), LabelType::Name, [d]))
            .expect("names have no blocking characters");
        if rng.gen_bool(0.5) {
            let place = places.choose(&mut rng).expect("non-empty");
            kb.add_person(
                PersonRecord::new(name.as_str())
                    .with_dynasty(d)
                    .with_native_place(place.as_str()),
            )
            .expect("generated person is valid");
        }
    }
    kb
}

struct Pools<'a> {
    kb: &'a KnowledgeBase,
    style: Vec<char>,
    filler: Vec<char>,
    dynasties: Vec<String>,
}

impl<'a> Pools<'a> {
    fn new(kb: &'a KnowledgeBase, templates: &[Template]) -> Result<Self> {
        for t in templates {
            for &label in t.required() {
                if kb.entries_of(label).next().is_none() {
                    return Err(Error::Invalid(format!(
                        "template {t} needs {label} entries and the knowledge base has none"
                    )));
                }
            }
        }
        let reserved: BTreeSet<char> = kb
            .entries()
            .iter()
            .filter(|e| e.label != LabelType::Surname)
            .flat_map(|e| e.surface.chars())
            .chain([ZI, REN, MARKER, JIAN])
            .collect();
        let free = |s: &str| -> Vec<char> { s.chars().filter(|c| !reserved.contains(c)).collect() };
        let style = free(STYLE_CHARS);
        let filler = free(FILLER_CHARS);
        if style.len() < 2 || filler.len() < 5 {
            return Err(Error::Invalid(
                "knowledge base leaves too few free characters for style names and filler".into(),
            ));
        }

        // Dynasties able to fill every requested template.
        let mut dynasties: BTreeSet<String> = kb
            .entries_of(LabelType::Name)
            .flat_map(|e| e.dynasties.iter().cloned())
            .collect();
        for t in templates {
            for &label in t.required().iter().filter(|l| l.is_dynasty_bearing()) {
                let have: BTreeSet<String> = kb.entries_of(label).flat_map(|e| e.dynasties.iter().cloned()).collect();
                dynasties.retain(|d| have.contains(d));
            }
        }
        if dynasties.is_empty() {
            return Err(Error::MissingDynasty);
        }
        Ok(Pools {
            kb,
            style,
            filler,
            dynasties: dynasties.into_iter().collect(),
        })
    }

    fn pick(&self, rng: &mut ChaCha8Rng, label: LabelType, dynasty: &str) -> &'a KbEntry {
        let options: Vec<&KbEntry> = self
            .kb
            .entries_of(label)
            .filter(|e| !label.is_dynasty_bearing() || e.dynasties.contains(dynasty))
            .collect();
        options
            .choose(rng)
            .expect("dynasties are filtered to those with entries")
    }
}

struct DocBuilder {
    text: String,
    len: usize,
    gold: GoldDoc,
}

impl DocBuilder {
    fn push(&mut self, s: &str) -> (usize, usize) {
        let start = self.len;
        self.text.push_str(s);
        self.len += s.chars().count();
        (start, self.len)
    }

    fn push_char(&mut self, c: char) {
        self.text.push(c);
        self.len += 1;
    }

    fn entity(&mut self, s: &str, kind: EntityKind) -> (usize, usize) {
        let (start, end) = self.push(s);
        self.gold.entities.push(GoldEntity::new(start, end, kind));
        (start, end)
    }

    fn ne(&mut self, s: &str, label: LabelType) {
        let (start, end) = self.push(s);
        self.gold.nes.push(GoldNe { start, end, label });
    }

    fn filler(&mut self, rng: &mut ChaCha8Rng, pool: &[char], n: usize) {
        for _ in 0..n {
            self.push_char(*pool.choose(rng).expect("non-empty pool"));
        }
    }
}

/// Generates `n_docs` documents from `templates`. The same inputs always give
/// the same output.
pub fn generate_synthetic(
    kb: &KnowledgeBase,
    templates: &[Template],
    n_docs: usize,
    seed: u64,
) -> Result<SyntheticCorpus> {
    generate_synthetic_with(kb, templates, n_docs, seed, &SynthOptions::default())
}

pub fn generate_synthetic_with(
    kb: &KnowledgeBase,
    templates: &[Template],
    n_docs: usize,
    seed: u64,
    opts: &SynthOptions,
) -> Result<SyntheticCorpus> {
    let mut out = SyntheticCorpus {
        corpus: Corpus::new(),
        gold: GoldAnnotations::new(),
        records: Vec::new(),
    };
    if n_docs == 0 {
        return Ok(out);
    }
    if templates.is_empty() {
        return Err(Error::Invalid("no templates given".into()));
    }
    let (lo, hi) = opts.paragraphs_per_doc;
    if lo == 0 || lo > hi {
        return Err(Error::Invalid(format!("bad paragraph range {lo}..={hi}")));
    }
    let pools = Pools::new(kb, templates)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n_docs.to_string().len();

    for i in 0..n_docs {
        let doc_id = format!("syn{:0width$}", i + 1);
        let dynasty = pools.dynasties.choose(&mut rng).expect("non-empty").clone();
        let mut b = DocBuilder {
            text: String::new(),
            len: 0,
            gold: GoldDoc::new(doc_id.as_str()),
        };
        let preamble = rng.gen_range(0..=6);
        b.filler(&mut rng, &pools.filler, preamble);

        for _ in 0..rng.gen_range(lo..=hi) {
            let template = *templates.choose(&mut rng).expect("non-empty");
            if rng.gen_bool(opts.leading_marker_rate) {
                b.push_char(MARKER);
            }
            let name = pools.pick(&mut rng, LabelType::Name, &dynasty);
            let native = kb
                .persons()
                .find(|p| p.official_name == name.surface && p.native_place.is_some())
                .and_then(|p| p.native_place.clone())
                .filter(|_| rng.gen_bool(0.7));
            let place = |rng: &mut ChaCha8Rng, first: bool| match (&native, first) {
                (Some(p), true) => p.clone(),
                _ => pools.pick(rng, LabelType::Address, &dynasty).surface.clone(),
            };

            b.gold.boundaries.push(b.len);
            let (name_start, _) = b.entity(&name.surface, EntityKind::Person);
            let mut style = None;
            match template {
                Template::P5 => {
                    if rng.gen_bool(opts.inner_marker_rate) {
                        b.push_char(MARKER);
                    }
                    b.push_char(ZI);
                    let s: String = (0..2)
                        .map(|_| *pools.style.choose(&mut rng).expect("non-empty"))
                        .collect();
                    b.push(&s);
                    style = Some(s);
                    let p1 = place(&mut rng, true);
                    b.entity(&p1, EntityKind::Location);
                    b.push_char(REN);
                    let p2 = place(&mut rng, false);
                    b.entity(&p2, EntityKind::Location);
                    let office = pools.pick(&mut rng, LabelType::Office, &dynasty);
                    b.ne(&office.surface, LabelType::Office);
                }
                Template::P8 => {
                    let p = place(&mut rng, true);
                    b.entity(&p, EntityKind::Location);
                    b.push_char(REN);
                }
                Template::P9 => {
                    let p1 = place(&mut rng, true);
                    b.entity(&p1, EntityKind::Location);
                    let p2 = place(&mut rng, false);
                    b.entity(&p2, EntityKind::Location);
                    b.push_char(REN);
                }
                Template::P10 => {
                    let reign = pools.pick(&mut rng, LabelType::Nianhao, &dynasty);
                    b.ne(&reign.surface, LabelType::Nianhao);
                    if rng.gen_bool(0.5) {
                        b.push_char(JIAN);
                    }
                    let office = pools.pick(&mut rng, LabelType::Office, &dynasty);
                    b.ne(&office.surface, LabelType::Office);
                }
            }
            out.records.push(PlantedRecord {
                doc_id: doc_id.clone(),
                template,
                dynasty: dynasty.clone(),
                name: name.surface.clone(),
                style,
                name_start,
            });

            let n = rng.gen_range(2..=8);
            b.filler(&mut rng, &pools.filler, n);
            if rng.gen_bool(opts.distractor_rate) {
                let label =
                    if rng.gen_bool(0.5) && kb.entries_of(LabelType::Office).any(|e| e.dynasties.contains(&dynasty)) {
                        LabelType::Office
                    } else if kb
                        .entries_of(LabelType::Nianhao)
                        .any(|e| e.dynasties.contains(&dynasty))
                    {
                        LabelType::Nianhao
                    } else {
                        LabelType::Office
                    };
                if kb.entries_of(label).any(|e| e.dynasties.contains(&dynasty)) {
                    let e = pools.pick(&mut rng, label, &dynasty);
                    b.ne(&e.surface, label);
                    let n = rng.gen_range(1..=4);
                    b.filler(&mut rng, &pools.filler, n);
                }
            }
        }
        out.corpus.push(Document::new(doc_id.as_str(), &b.text), None)?;
        out.gold.insert(b.gold);
    }
    Ok(out)
}

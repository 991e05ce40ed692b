//! Subcommand implementations. Each one reads its inputs, writes files under
//! `--out` and prints a short summary on stdout.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use gzm_core::annotator::{annotate, spans_tsv};
use gzm_core::corpus::{load_corpus, Corpus, MARKER};
use gzm_core::crf::{
    entities_tsv, gold_to_tags, parse_entities, parse_tags, tags_tsv, train_with_report, CrfModel, FeatureConfig,
    TrainOptions,
};
use gzm_core::eval::{
    class_counts, entity_prf, entity_report_tsv, generate_synthetic, label_prf, label_report_tsv, pair_names_addresses,
    pairs_tsv, synthetic_kb, table5_fixture, zone_analysis, Template, ZoneReport,
};
use gzm_core::gold::GoldAnnotations;
use gzm_core::knowledge_base::{char_stats_tsv, parse_char_stats, parse_entries, parse_persons, KnowledgeBase};
use gzm_core::pattern_miner::{
    classify_record, default_scheme, mine_patterns, parse_patterns, parse_records, patterns_tsv, records_tsv,
    CandidateRecord, PatternStatus, RecordRow,
};
use gzm_core::pipeline::{annotate_corpus, extract_records, tag_corpus, training_examples};
use gzm_core::segmenter::{
    beginnings_tsv, find_beginnings, gold_boundaries, name_pairs, score_segmentation, segment, Beginning,
};

use crate::cli::*;
use crate::review::{self, DecisionLog, TargetKind};
use crate::service::{self, ReviewService};

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest(a) => ingest(a),
        Command::Annotate(a) => annotate_cmd(a),
        Command::Mine(a) => mine(a),
        Command::Extract(a) => extract(a),
        Command::Train(a) => train(a),
        Command::Tag(a) => tag(a),
        Command::Segment(a) => segment_cmd(a),
        Command::EvalLabels(a) => eval_labels(a),
        Command::EvalEntities(a) => eval_entities(a),
        Command::EvalZones(a) => eval_zones(a),
        Command::Pairs(a) => pairs(a),
        Command::Synth(a) => synth(a),
        Command::Serve(a) => serve(a),
    }
}

fn write(out: &OutArgs, name: &str, body: &str) -> Result<()> {
    fs::create_dir_all(&out.out).with_context(|| format!("cannot create {}", out.out.display()))?;
    let path = out.out.join(name);
    fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn corpus(path: &Path) -> Result<Corpus> {
    load_corpus(path).with_context(|| format!("cannot load corpus {}", path.display()))
}

fn gold(path: &Path) -> Result<GoldAnnotations> {
    Ok(GoldAnnotations::load(path)?)
}

pub fn load_knowledge_base(args: &KbArgs) -> Result<KnowledgeBase> {
    let mut kb = if args.no_default_resources {
        KnowledgeBase::new()
    } else {
        KnowledgeBase::default_resources()
    };
    for path in &args.entries {
        kb.extend_entries(parse_entries(&read(path)?, &path.display().to_string())?);
    }
    for path in &args.persons {
        for p in parse_persons(&read(path)?, &path.display().to_string())? {
            kb.add_person(p)?;
        }
    }
    Ok(kb)
}

fn ingest(a: IngestArgs) -> Result<()> {
    let c = corpus(&a.corpus)?;
    c.write_dir(&a.out.out.join("corpus"))?;
    let mut manifest = String::from("doc_id\tchars\tmarkers\tsource\n");
    for d in c.documents() {
        let markers = d.chars().iter().filter(|&&ch| ch == MARKER).count();
        let source = c.source(d.id()).map(|p| p.display().to_string()).unwrap_or_default();
        manifest.push_str(&format!("{}\t{}\t{}\t{}\n", d.id(), d.len(), markers, source));
    }
    write(&a.out, "corpus.tsv", &manifest)?;
    println!("{} documents, {} characters", c.len(), c.total_chars());
    Ok(())
}

fn annotate_cmd(a: AnnotateArgs) -> Result<()> {
    let c = corpus(&a.corpus)?;
    let kb = load_knowledge_base(&a.kb)?;
    let all: Vec<_> = c.documents().iter().flat_map(|d| annotate(d, &kb)).collect();
    let (_, seqs) = annotate_corpus(&c, &kb, a.window)?;
    write(&a.out, "spans.tsv", &spans_tsv(&all))?;
    let mut lines = String::new();
    for s in &seqs {
        lines.push_str(&serde_json::to_string(s)?);
        lines.push('\n');
    }
    write(&a.out, "sequences.jsonl", &lines)?;
    println!("{} spans, {} consistent sequences", all.len(), seqs.len());
    Ok(())
}

fn mine(a: MineArgs) -> Result<()> {
    let c = corpus(&a.corpus)?;
    let kb = load_knowledge_base(&a.kb)?;
    let (_, seqs) = annotate_corpus(&c, &kb, a.window)?;
    let patterns = mine_patterns(&seqs, a.n_min, a.n_max, a.min_support)?;
    write(&a.out, "patterns.tsv", &patterns_tsv(&patterns))?;
    println!("{} patterns proposed", patterns.len());
    Ok(())
}

/// Records with their Table 1 or Table 2 type against `kb`.
pub fn classify_all(records: Vec<CandidateRecord>, kb: &KnowledgeBase) -> Result<Vec<RecordRow>> {
    records
        .into_iter()
        .map(|record| {
            let match_type = Some(classify_record(&record, kb, default_scheme(&record))?);
            Ok(RecordRow { record, match_type })
        })
        .collect()
}

fn extract(a: ExtractArgs) -> Result<()> {
    let c = corpus(&a.corpus)?;
    let kb = load_knowledge_base(&a.kb)?;
    let mut patterns = parse_patterns(&read(&a.patterns)?, &a.patterns.display().to_string())?;
    if let Some(log) = &a.decisions {
        let log = DecisionLog::open(log)?;
        review::apply_pattern_decisions(&mut patterns, &log.status_map(TargetKind::Pattern));
    }
    if let Some(n) = a.auto_approve_top {
        review::auto_approve_top(&mut patterns, n);
    }
    let (_, seqs) = annotate_corpus(&c, &kb, a.window)?;
    let (excerpts, records) = extract_records(&c, &seqs, &patterns, a.circles);
    let rows = classify_all(records, &kb)?;
    let excerpt_rows: String = excerpts.iter().map(|e| e.tsv_row()).collect();
    write(&a.out, "excerpts.tsv", &excerpt_rows)?;
    write(&a.out, "records.tsv", &records_tsv(&rows))?;
    let approved = patterns.iter().filter(|p| p.status == PatternStatus::Approved).count();
    println!(
        "{approved} approved patterns, {} excerpts, {} records",
        excerpts.len(),
        rows.len()
    );
    Ok(())
}

fn train(a: TrainArgs) -> Result<()> {
    let c = corpus(&a.corpus)?;
    let g = gold(&a.gold)?;
    g.validate(&c)?;
    let kb = load_knowledge_base(&a.kb)?.compute_char_stats(&c, &g)?;
    let cfg = FeatureConfig {
        k: a.k,
        ne_window: a.ne_window,
        bins: a.bins,
        groups: a.groups.iter().copied().collect(),
    };
    cfg.validate()?;
    let examples = training_examples(&c, &g, &kb, &cfg)?;
    let opts = TrainOptions {
        l2_lambda: a.lambda,
        max_iter: a.max_iter,
        tol: a.tol,
    };
    let (model, report) = train_with_report(&examples, &cfg, &opts)?;
    fs::create_dir_all(&a.out.out)?;
    model.save(a.out.out.join("model.json"))?;
    write(&a.out, "char_stats.tsv", &char_stats_tsv(kb.char_stats()))?;
    write(
        &a.out,
        "train_report.tsv",
        &format!(
            "examples\t{}\nfeatures\t{}\niterations\t{}\nobjective\t{:.6}\ngrad_norm\t{:.6e}\nconverged\t{}\n",
            examples.len(),
            model.num_features(),
            report.iterations,
            report.objective,
            report.grad_norm,
            report.converged
        ),
    )?;
    println!(
        "{} examples, {} features, {} iterations, converged: {}",
        examples.len(),
        model.num_features(),
        report.iterations,
        report.converged
    );
    Ok(())
}

fn tag(a: TagArgs) -> Result<()> {
    let c = corpus(&a.corpus)?;
    let model = CrfModel::load(&a.model)?;
    let mut kb = load_knowledge_base(&a.kb)?;
    if let Some(path) = &a.char_stats {
        kb = kb.with_char_stats(parse_char_stats(&read(path)?, &path.display().to_string())?);
    }
    let tagged = tag_corpus(&model, &c, &kb)?;
    let entities: Vec<_> = tagged.iter().flat_map(|t| t.entities.iter().cloned()).collect();
    write(
        &a.out,
        "tags.tsv",
        &tags_tsv(tagged.iter().map(|t| (t.doc_id.as_str(), t.tags.as_slice()))),
    )?;
    write(&a.out, "entities.tsv", &entities_tsv(&entities))?;
    println!("{} documents, {} entities", tagged.len(), entities.len());
    Ok(())
}

fn segment_cmd(a: SegmentArgs) -> Result<()> {
    let c = corpus(&a.corpus)?;
    let kb = load_knowledge_base(&a.kb)?;
    let records: Vec<CandidateRecord> = match &a.records {
        Some(p) => parse_records(&read(p)?, &p.display().to_string())?
            .into_iter()
            .map(|r| r.record)
            .collect(),
        None => Vec::new(),
    };
    let (_, seqs) = annotate_corpus(&c, &kb, a.window)?;
    let mut beginnings: Vec<Beginning> = Vec::new();
    let mut paragraphs = String::from("doc_id\tstart\tend\n");
    for doc in c.documents() {
        let doc_seqs: Vec<_> = seqs.iter().filter(|s| s.doc_id == doc.id()).cloned().collect();
        let b = find_beginnings(doc, &records, &doc_seqs);
        for p in segment(doc, &b) {
            paragraphs.push_str(&format!("{}\t{}\t{}\n", doc.id(), p.start, p.end));
        }
        beginnings.extend(b);
    }
    write(&a.out, "beginnings.tsv", &beginnings_tsv(&beginnings))?;
    write(&a.out, "paragraphs.tsv", &paragraphs)?;
    println!("{} beginnings", beginnings.len());
    if let Some(path) = &a.gold {
        let s = score_segmentation(&name_pairs(&beginnings), &gold_boundaries(&gold(path)?))?;
        write(
            &a.out,
            "segmentation.tsv",
            &format!(
                "x1\t{:.4}\nx2\t{:.4}\nx3\t{:.4}\ny1\t{:.4}\ny2\t{:.4}\npairs\t{}\nexcluded\t{}\n",
                s.x1, s.x2, s.x3, s.y1, s.y2, s.n_pairs, s.n_excluded
            ),
        )?;
        println!(
            "X1 {:.4} X2 {:.4} X3 {:.4} Y1 {:.4} Y2 {:.4}",
            s.x1, s.x2, s.x3, s.y1, s.y2
        );
    }
    Ok(())
}

fn eval_labels(a: EvalLabelsArgs) -> Result<()> {
    let c = corpus(&a.corpus)?;
    let g = gold(&a.gold)?;
    let pred = parse_tags(&read(&a.pred)?, &a.pred.display().to_string())?;
    let (mut p_all, mut g_all) = (Vec::new(), Vec::new());
    for (id, tags) in pred {
        let doc = c
            .get(&id)
            .with_context(|| format!("tagged document `{id}` is not in the corpus"))?;
        let Some(gdoc) = g.get(&id) else { continue };
        g_all.push(gold_to_tags(doc.len(), &gdoc.entities)?);
        p_all.push(tags);
    }
    if p_all.is_empty() {
        bail!("no tagged document has gold annotations");
    }
    let scores = label_prf(&p_all, &g_all)?;
    let report = label_report_tsv(&scores);
    write(&a.out, "label_report.tsv", &report)?;
    print!("{report}");
    Ok(())
}

fn eval_entities(a: EvalEntitiesArgs) -> Result<()> {
    let g = gold(&a.gold)?;
    let pred = parse_entities(&read(&a.pred)?, &a.pred.display().to_string())?;
    let scores = entity_prf(&pred, &g);
    let report = entity_report_tsv(&scores);
    write(&a.out, "entity_report.tsv", &report)?;
    print!("{report}");
    Ok(())
}

fn eval_zones(a: EvalZonesArgs) -> Result<()> {
    let report: ZoneReport = if a.table5_fixture {
        table5_fixture()
    } else {
        let (pred, gold_path) = (a.pred.as_ref().expect("clap"), a.gold.as_ref().expect("clap"));
        let g = gold(gold_path)?;
        let truth: BTreeSet<_> = g
            .docs()
            .flat_map(|d| {
                d.entities
                    .iter()
                    .map(move |e| (d.doc_id.clone(), e.start, e.end, e.kind))
            })
            .collect();
        let candidates: Vec<_> = parse_entities(&read(pred)?, &pred.display().to_string())?
            .into_iter()
            .map(|e| {
                let score = e.confidence;
                ((e.doc_id, e.start, e.end, e.kind), score)
            })
            .collect();
        zone_analysis(&candidates, a.zones, a.sample, |key| truth.contains(key))?
    };
    let tsv = report.to_tsv();
    write(&a.out, "zones.tsv", &tsv)?;
    print!("{tsv}");
    Ok(())
}

fn pairs(a: PairsArgs) -> Result<()> {
    let c = corpus(&a.corpus)?;
    let kb = load_knowledge_base(&a.kb)?;
    let entities = parse_entities(&read(&a.entities)?, &a.entities.display().to_string())?;
    let found = pair_names_addresses(&entities, &c, &kb, a.max_gap)?;
    write(&a.out, "pairs.tsv", &pairs_tsv(&found))?;
    let mut summary = String::from("class\tcount\n");
    for (class, n) in class_counts(&found) {
        summary.push_str(&format!("{class}\t{n}\n"));
    }
    write(&a.out, "pair_classes.tsv", &summary)?;
    print!("{summary}");
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let templates = a
        .templates
        .iter()
        .map(|t| t.parse::<Template>())
        .collect::<gzm_core::Result<Vec<_>>>()?;
    let kb = synthetic_kb(a.kb_seed);
    let s = generate_synthetic(&kb, &templates, a.docs, a.seed)?;
    s.corpus.write_dir(&a.out.out.join("corpus"))?;
    write(&a.out, "gold.txt", &s.gold.to_text())?;
    write(&a.out, "kb_entries.tsv", &kb.entries_tsv())?;
    write(&a.out, "kb_persons.tsv", &kb.persons_tsv())?;
    let mut planted = String::from("doc_id\ttemplate\tdynasty\tname\tstyle\tname_start\n");
    for r in &s.records {
        planted.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.doc_id,
            r.template,
            r.dynasty,
            r.name,
            r.style.as_deref().unwrap_or(""),
            r.name_start
        ));
    }
    write(&a.out, "planted.tsv", &planted)?;
    println!(
        "{} documents, {} gold entities, {} planted records",
        s.corpus.len(),
        s.gold.entity_count(),
        s.records.len()
    );
    Ok(())
}

/// Loads everything `serve` needs.
pub fn review_service(a: &ServeArgs) -> Result<ReviewService> {
    let c = corpus(&a.corpus)?;
    let kb = load_knowledge_base(&a.kb)?;
    let patterns = parse_patterns(&read(&a.patterns)?, &a.patterns.display().to_string())?;
    let records = parse_records(&read(&a.records)?, &a.records.display().to_string())?;
    let (_, seqs) = annotate_corpus(&c, &kb, a.window)?;
    fs::create_dir_all(&a.state_dir)
        .with_context(|| format!("state directory {} is not writable", a.state_dir.display()))?;
    ReviewService::new(c, kb, &seqs, patterns, records, &a.state_dir)
}

fn serve(a: ServeArgs) -> Result<()> {
    let svc = review_service(&a)?;
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(service::serve(svc, a.addr, a.ui.clone()))
}

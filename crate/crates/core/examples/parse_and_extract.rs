//! Parses the fixture corpus, screens each judgment, and prints the blurred
//! dispute list of the first few eligible cases.
//!
//! ```text
//! cargo run --example parse_and_extract -- [CORPUS_DIR]
//! ```

use std::path::PathBuf;

use casesim::corpus::{
    load_corpus, parse_document, screen, BlurRules, CaseFilter, DisputeExtractor, DisputeSet, DisputeSource,
    RuleBasedDetector,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let record = r#"{"JID":"CHDV,98,勞訴,37,20100409,1","JYEAR":"98","JCASE":"勞訴","JNO":"37",
        "JDATE":"20100409","JTITLE":"給付資遣費等",
        "JFULL":"三、本件爭點：\n(一)長森醫院於 97 年 7 月 31 日是否有歇業之事實？\n(二)兩造間是否因歇業而終止勞動契約？\n四、得心證之理由"}"#;
    let doc = parse_document(record.as_bytes())?;
    let detector = RuleBasedDetector::default();
    let rules = BlurRules::default();
    let (filter, extractor) = (CaseFilter::default(), DisputeExtractor::default());
    let raw = screen(&doc, &filter, &extractor).map_err(|r| format!("{} excluded: {r:?}", doc.jid))?;
    let set = DisputeSet::from_raw(&doc.jid, DisputeSource::Court, raw, &detector, &rules);
    println!("{} ({} {})", doc.jid, doc.jcase, doc.jtitle);
    for (raw, blurred) in set.raw_items.iter().zip(&set.items) {
        println!("  {raw}\n    -> {blurred}");
    }

    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/desk/corpus"));
    let corpus = load_corpus(&[dir])?;
    let mut eligible = Vec::new();
    for doc in &corpus.docs {
        match screen(doc, &filter, &extractor) {
            Ok(raw) => eligible.push(DisputeSet::from_raw(&doc.jid, DisputeSource::Court, raw, &detector, &rules)),
            Err(reason) => println!("excluded {}: {reason:?}", doc.jid),
        }
    }
    println!(
        "\n{} documents, {} unreadable, {} eligible",
        corpus.docs.len(),
        corpus.failures.len(),
        eligible.len()
    );
    for set in eligible.iter().take(3) {
        println!("{}", set.case_id);
        for item in &set.items {
            println!("  - {item}");
        }
    }
    Ok(())
}

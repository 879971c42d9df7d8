//! A deterministic synthetic corpus with planted similarity structure.
//!
//! Every case belongs to one of six topic groups. Its court-listed disputes
//! are drawn mostly from the two topics of its group, so cases of the same
//! group are similar and cases of different groups are not. The generator
//! also writes labeled pairs, canned replies for both LLM sources, and a
//! ready-to-run config.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use chrono::NaiveDate;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::classifier::{LabeledPair, SimilarityLabel};
use crate::corpus::{parse_document, screen, CaseFilter, DisputeExtractor};
use crate::llm::{
    build_prompt, extract_party_claims, parse_point_list, python_list_repr, CannedReply, PartyClaims, PointKey,
    PromptStep, PromptTemplates,
};

struct Topic {
    title: &'static str,
    court: [&'static str; 3],
    llm: [&'static str; 3],
    plaintiff: &'static str,
    defendant: &'static str,
}

const TOPICS: [Topic; 12] = [
    Topic {
        title: "確認僱傭關係存在",
        court: [
            "被告於{date}終止兩造間勞動契約，是否合法？",
            "被告依勞動基準法第12條第1項第4款規定解僱原告，是否有理由？",
            "兩造間之僱傭關係是否仍然存在？",
        ],
        llm: ["被告終止勞動契約是否合法", "被告解僱原告是否符合勞動基準法規定", "兩造僱傭關係是否存續"],
        plaintiff: "被告於{date}無預警解僱原告，違反勞動基準法。",
        defendant: "原告違反工作規則情節重大，被告依法終止契約。",
    },
    Topic {
        title: "給付資遣費",
        court: [
            "原告請求被告給付資遣費{amount}元，有無理由？",
            "原告之資遣費應如何計算？",
            "被告應否給付原告資遣費？",
        ],
        llm: ["被告是否應給付資遣費{amount}元", "資遣費之計算基準為何", "原告得否請求資遣費"],
        plaintiff: "被告應給付原告資遣費{amount}元。",
        defendant: "原告係自願離職，不得請求資遣費。",
    },
    Topic {
        title: "給付加班費",
        court: [
            "原告請求延長工時工資{amount}元，是否有據？",
            "原告是否有延長工作時間之事實？",
            "被告應否給付原告加班費？",
        ],
        llm: ["原告是否有加班事實", "被告是否應給付延長工時工資{amount}元", "加班費之計算方式為何"],
        plaintiff: "原告每日工作逾十小時，被告未給付加班費{amount}元。",
        defendant: "原告之加班未經被告同意，被告無給付義務。",
    },
    Topic {
        title: "給付特休未休工資",
        court: [
            "原告請求未休特別休假工資{amount}元，有無理由？",
            "原告之特別休假日數應如何計算？",
            "被告應否給付特休未休之工資？",
        ],
        llm: ["特別休假未休工資是否應給付", "原告特休日數如何計算", "被告是否應補發特休工資{amount}元"],
        plaintiff: "原告尚有特別休假未休，被告應給付工資{amount}元。",
        defendant: "原告之特別休假已於年度內休畢。",
    },
    Topic {
        title: "職業災害補償",
        court: [
            "原告於{date}受傷是否屬職業災害？",
            "被告應否依勞動基準法第59條給付原告職業災害補償{amount}元？",
            "原告請求醫療期間原領工資補償，有無理由？",
        ],
        llm: ["原告受傷是否為職業災害", "被告是否應給付職災補償{amount}元", "原告得否請求醫療期間工資補償"],
        plaintiff: "原告於{date}執行職務時受傷，屬職業災害。",
        defendant: "原告之傷害與執行職務無關。",
    },
    Topic {
        title: "提繳勞工退休金",
        court: [
            "被告是否短少提繳原告之勞工退休金{amount}元？",
            "被告應否將差額提繳至原告之勞工退休金專戶？",
            "原告之月提繳工資應以若干元計算？",
        ],
        llm: ["被告是否短提勞工退休金", "被告是否應補提繳退休金{amount}元至專戶", "退休金提繳工資之認定"],
        plaintiff: "被告以低報薪資方式短少提繳退休金{amount}元。",
        defendant: "被告已依規定足額提繳退休金。",
    },
    Topic {
        title: "給付工資",
        court: [
            "被告是否積欠原告自{date}起之工資{amount}元？",
            "兩造約定之每月工資數額為何？",
            "原告請求被告給付積欠工資，有無理由？",
        ],
        llm: ["被告是否積欠工資{amount}元", "兩造約定月薪數額為何", "原告請求給付工資是否有理由"],
        plaintiff: "被告自{date}起未給付原告工資共計{amount}元。",
        defendant: "被告已全額給付工資，並無積欠。",
    },
    Topic {
        title: "確認競業禁止約定無效",
        court: [
            "兩造間之競業禁止約定是否有效？",
            "原告離職後任職於同業是否違反競業禁止條款？",
            "被告請求原告給付懲罰性違約金{amount}元，有無理由？",
        ],
        llm: ["競業禁止條款是否有效", "原告是否違反競業禁止約定", "懲罰性違約金{amount}元是否應予酌減"],
        plaintiff: "競業禁止約定未給予合理補償，應屬無效。",
        defendant: "原告離職後即至競爭公司任職，違反約定。",
    },
    Topic {
        title: "確認勞動契約關係",
        court: [
            "兩造間之契約關係為僱傭契約或承攬契約？",
            "原告是否為被告之勞工而有勞動基準法之適用？",
            "兩造間是否具有人格上及經濟上從屬性？",
        ],
        llm: ["兩造契約是僱傭還是承攬", "原告是否適用勞動基準法", "兩造間有無人格及經濟上從屬性"],
        plaintiff: "原告受被告指揮監督，兩造為僱傭關係。",
        defendant: "原告係承攬人，得自由決定工作方式。",
    },
    Topic {
        title: "開立非自願離職證明書",
        court: [
            "原告請求被告發給非自願離職證明書，有無理由？",
            "原告是否係因被告違反勞動法令而終止契約？",
            "被告應否開立服務證明書予原告？",
        ],
        llm: ["被告是否應發給非自願離職證明書", "原告終止契約是否因被告違法", "被告是否應開立服務證明"],
        plaintiff: "被告拒絕開立非自願離職證明書，致原告無法請領失業給付。",
        defendant: "原告係自行離職，非屬非自願離職。",
    },
    Topic {
        title: "確認調職無效",
        court: [
            "被告於{date}將原告調至外縣市營業所，是否合法？",
            "被告之調動是否符合調動五原則？",
            "原告拒絕調職是否構成連續曠職？",
        ],
        llm: ["調職是否合法", "被告調動原告是否違反調動五原則", "原告拒絕調職是否屬曠職"],
        plaintiff: "被告惡意將原告調至外地，違反調動五原則。",
        defendant: "調職係基於經營需要，未降低原告薪資。",
    },
    Topic {
        title: "返還訓練費用",
        court: [
            "原告應否返還被告訓練費用{amount}元？",
            "兩造間最低服務年限約定是否有效？",
            "被告請求之訓練費用違約金是否過高？",
        ],
        llm: ["最低服務年限約定是否有效", "原告是否應返還訓練費用{amount}元", "訓練費用違約金是否過高"],
        plaintiff: "最低服務年限約定顯失公平，原告不應返還訓練費用。",
        defendant: "原告未滿服務年限即離職，應返還訓練費用{amount}元。",
    },
];

/// Topic pairs of the six planted groups.
const GROUPS: [[usize; 2]; 6] = [[0, 1], [2, 3], [4, 5], [6, 8], [7, 9], [10, 11]];

const GENERIC_COURT: &str = "原告請求之法定遲延利息應自何時起算？";
const GENERIC_LLM: &str = "遲延利息之起算日為何";

const COURTS: [(&str, &str); 6] = [
    ("TPDV", "臺灣臺北地方法院"),
    ("PCDV", "臺灣新北地方法院"),
    ("SLDV", "臺灣士林地方法院"),
    ("TYDV", "臺灣桃園地方法院"),
    ("TCDV", "臺灣臺中地方法院"),
    ("KSDV", "臺灣高雄地方法院"),
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FixtureSpec {
    pub seed: u64,
    /// Labeled cases per group.
    pub labeled_per_group: usize,
    pub unlabeled: usize,
    /// Same-group pairs labeled similar, per group.
    pub similar_per_group: usize,
    pub dissimilar: usize,
    pub barely: usize,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            seed: 20240423,
            labeled_per_group: 6,
            unlabeled: 21,
            similar_per_group: 8,
            dissimilar: 72,
            barely: 6,
        }
    }
}

/// Planted facts about one generated case.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PlantedCase {
    pub case_id: String,
    pub group: usize,
    pub labeled: bool,
    pub disputes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    /// `(file name, JSON text)` of every judgment, eligible or not.
    pub documents: Vec<(String, String)>,
    pub cases: Vec<PlantedCase>,
    pub labels: Vec<LabeledPair>,
    pub replies_a: Vec<CannedReply>,
    pub replies_b: Vec<CannedReply>,
    /// Case whose statements exceed the second source's token budget.
    pub too_long_case: String,
    /// Case the first source never answers.
    pub silent_case: String,
}

pub const CONFIG_TOML: &str = r#"# Desk-scale run over the synthetic fixture.
corpus = ["corpus"]
labels = "labels.jsonl"
output = "out"
seed = 2024
repeats = 3

[llm.llm_a]
replies = "replies/gpt35.jsonl"

[llm.llm_a.profile]
model_id = "gpt-3.5-turbo-0613"
temperature = 0.7
token_budget = 11500
max_retries = 3

[llm.llm_b]
replies = "replies/gpt4.jsonl"

[llm.llm_b.profile]
model_id = "gpt-4-0613"
temperature = 0.3
token_budget = 6000
max_retries = 3

[embedding]
prune_min_size = 4
pairs_per_category = 2000

[embedding.cluster]
min_cluster_size = 4

[clustering]
min_cluster_size = 5
"#;

fn amount(rng: &mut ChaCha8Rng) -> String {
    let n: u32 = rng.random_range(12..900) * 1000 + rng.random_range(0..1000);
    let s = n.to_string();
    let mut out = String::new();
    for (i, c) in s.chars().enumerate() {
        if i > 0 && (s.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

fn roc_date(rng: &mut ChaCha8Rng, year: i32) -> String {
    format!("民國{}年{}月{}日", year, rng.random_range(1..=12), rng.random_range(1..=28))
}

fn fill(template: &str, rng: &mut ChaCha8Rng, year: i32) -> String {
    let mut s = template.to_string();
    if s.contains("{amount}") {
        s = s.replace("{amount}", &amount(rng));
    }
    if s.contains("{date}") {
        let back = rng.random_range(1..=3);
        s = s.replace("{date}", &roc_date(rng, year - back));
    }
    s
}

const NUMERALS: [&str; 10] = ["一", "二", "三", "四", "五", "六", "七", "八", "九", "十"];

/// One dispute: its topic (None for the generic one) and template index.
type Slot = (Option<usize>, usize);

struct CaseDraft {
    jid: String,
    jcase: &'static str,
    year: i32,
    no: u32,
    date: NaiveDate,
    court_name: &'static str,
    title: String,
    group: usize,
    slots: Vec<Slot>,
    disputes: Vec<String>,
    llm_disputes: Vec<String>,
    plaintiff: Vec<String>,
    defendant: Vec<String>,
    with_dispute_section: bool,
    padding: usize,
}

fn draft_case(rng: &mut ChaCha8Rng, idx: usize, group: usize, jcase: &'static str, court_code: Option<&str>) -> CaseDraft {
    let (code, court_name) = *COURTS.choose(rng).unwrap();
    let code = court_code.unwrap_or(code);
    let year = rng.random_range(98..=110);
    let date = NaiveDate::from_ymd_opt(year + 1912, rng.random_range(1..=12), rng.random_range(1..=28)).unwrap();
    let no = 10 + idx as u32 * 7 + rng.random_range(0..5);
    let jid = format!("{code},{year},{jcase},{no},{},1", date.format("%Y%m%d"));

    let [t1, t2] = GROUPS[group];
    let mut slots: Vec<Slot> = Vec::new();
    for t in [t1, t2] {
        let mut templates = [0, 1, 2];
        templates.shuffle(rng);
        let n = rng.random_range(1..=2);
        slots.extend(templates[..n].iter().map(|&k| (Some(t), k)));
    }
    if rng.random_bool(0.3) {
        slots.push((None, 0));
    }
    if rng.random_bool(0.15) {
        let other = loop {
            let t = rng.random_range(0..TOPICS.len());
            if t != t1 && t != t2 {
                break t;
            }
        };
        slots.push((Some(other), rng.random_range(0..3)));
    }
    slots.shuffle(rng);

    let mut disputes = Vec::new();
    let mut llm_disputes = Vec::new();
    for &(topic, k) in &slots {
        match topic {
            Some(t) => {
                disputes.push(fill(TOPICS[t].court[k], rng, year));
                llm_disputes.push(fill(TOPICS[t].llm[rng.random_range(0..3)], rng, year));
            }
            None => {
                disputes.push(GENERIC_COURT.to_string());
                llm_disputes.push(GENERIC_LLM.to_string());
            }
        }
    }
    let topics: BTreeSet<usize> = slots.iter().filter_map(|s| s.0).collect();
    let plaintiff = topics.iter().map(|&t| fill(TOPICS[t].plaintiff, rng, year)).collect();
    let defendant = topics.iter().map(|&t| fill(TOPICS[t].defendant, rng, year)).collect();
    CaseDraft {
        jid,
        jcase,
        year,
        no,
        date,
        court_name,
        title: format!("{}等", TOPICS[t1].title),
        group,
        slots,
        disputes,
        llm_disputes,
        plaintiff,
        defendant,
        with_dispute_section: true,
        padding: 0,
    }
}

fn render_full(d: &CaseDraft) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "{}民事判決\r\n{}年度{}字第{}號\r\n原　　　告　甲○○\r\n被　　　告　乙○○股份有限公司\r\n法定代理人　丙○○\r\n",
        d.court_name, d.year, d.jcase, d.no
    ));
    s.push_str(&format!(
        "上列當事人間請求{}事件，本院於民國{}年{}月{}日言詞辯論終結，判決如下：\r\n主　　文\r\n原告之訴駁回。\r\n事實及理由\r\n",
        d.title,
        d.year,
        d.date.format("%-m"),
        d.date.format("%-d")
    ));
    s.push_str("一、原告起訴主張：");
    for p in &d.plaintiff {
        s.push_str(p);
    }
    for _ in 0..d.padding {
        s.push_str("原告於任職期間盡忠職守，並無任何違反工作規則之情事，此有出勤紀錄及薪資單可稽。");
    }
    s.push_str("並聲明：被告應給付原告如訴之聲明所示之金額。\r\n二、被告則以：");
    for p in &d.defendant {
        s.push_str(p);
    }
    s.push_str("並聲明：原告之訴駁回。\r\n三、兩造不爭執事項：\r\n（一）原告受僱於被告。\r\n");
    if d.with_dispute_section {
        s.push_str("四、本件爭點：\r\n");
        for (i, item) in d.disputes.iter().enumerate() {
            s.push_str(&format!("（{}）{}\r\n", NUMERALS[i], item));
        }
        s.push_str("五、本院之判斷：\r\n");
    } else {
        s.push_str("四、本院之判斷：\r\n");
    }
    s.push_str("經查，原告之請求為無理由，應予駁回。\r\n");
    s.push_str(&format!(
        "中　　華　　民　　國　　{}　　年　　{}　　月　　{}　　日",
        d.date.format("%Y").to_string().parse::<i32>().unwrap() - 1911,
        d.date.format("%-m"),
        d.date.format("%-d")
    ));
    s
}

fn document_json(d: &CaseDraft) -> String {
    let value = serde_json::json!({
        "JID": d.jid,
        "JYEAR": d.year.to_string(),
        "JCASE": d.jcase,
        "JNO": d.no.to_string(),
        "JDATE": d.date.format("%Y%m%d").to_string(),
        "JTITLE": d.title,
        "JFULL": render_full(d),
    });
    serde_json::to_string_pretty(&value).unwrap()
}

fn points_reply(key: PointKey, items: &[String], bulleted: bool) -> String {
    if bulleted {
        items
            .iter()
            .enumerate()
            .map(|(i, s)| format!("{}. {s}", i + 1))
            .collect::<Vec<_>>()
            .join("\n")
    } else {
        format!("{{'{}': {}}}", key.as_str(), python_list_repr(items))
    }
}

fn strip_period(s: &str) -> String {
    s.trim_end_matches('。').to_string()
}

/// Canned replies for the three chain steps of one case.
fn chain_replies(claims: &PartyClaims, d: &CaseDraft, disputes: &[String], bulleted: bool) -> Vec<CannedReply> {
    let templates = PromptTemplates::default();
    let p_reply = points_reply(
        PointKey::PPoint,
        &d.plaintiff.iter().map(|s| strip_period(s)).collect::<Vec<_>>(),
        false,
    );
    let d_reply = points_reply(
        PointKey::DPoint,
        &d.defendant.iter().map(|s| strip_period(s)).collect::<Vec<_>>(),
        false,
    );
    let p_points = parse_point_list(&p_reply, PointKey::PPoint);
    let d_points = parse_point_list(&d_reply, PointKey::DPoint);
    let dispute_prompt = build_prompt(PromptStep::Dispute, claims, Some((&p_points, &d_points)), &templates).unwrap();
    vec![
        CannedReply::new(&build_prompt(PromptStep::Plaintiff, claims, None, &templates).unwrap(), p_reply),
        CannedReply::new(&build_prompt(PromptStep::Defendant, claims, None, &templates).unwrap(), d_reply),
        CannedReply::new(&dispute_prompt, points_reply(PointKey::Dispute, disputes, bulleted)),
    ]
}

/// Builds the fixture described by `spec`; the same spec always gives the
/// same bytes.
pub fn generate(spec: &FixtureSpec) -> Fixture {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n_groups = GROUPS.len();
    let n_labeled = spec.labeled_per_group * n_groups;
    let mut drafts = Vec::new();
    for i in 0..n_labeled {
        drafts.push((draft_case(&mut rng, i, i % n_groups, "勞訴", None), true));
    }
    for i in 0..spec.unlabeled {
        let group = rng.random_range(0..n_groups);
        let jcase = if i % 5 == 4 { "重勞訴" } else { "勞訴" };
        drafts.push((draft_case(&mut rng, n_labeled + i, group, jcase, None), false));
    }
    // One appeal, one non-labor case, one judgment without a dispute list.
    let base = drafts.len();
    let mut appeal = draft_case(&mut rng, base, 0, "勞上", Some("TPHV"));
    appeal.court_name = "臺灣高等法院";
    let civil = draft_case(&mut rng, base + 1, 1, "訴", None);
    let mut no_section = draft_case(&mut rng, base + 2, 2, "勞訴", None);
    no_section.with_dispute_section = false;

    let too_long = n_labeled;
    let silent = n_labeled + 1;
    drafts[too_long].0.padding = 160;

    let extractor = DisputeExtractor::default();
    let filter = CaseFilter::default();
    let mut documents = Vec::new();
    let mut cases = Vec::new();
    let mut replies_a = Vec::new();
    let mut replies_b = Vec::new();
    for (i, (d, labeled)) in drafts.iter().enumerate() {
        let json = document_json(d);
        let doc = parse_document(json.as_bytes()).expect("fixture documents parse");
        let extracted = screen(&doc, &filter, &extractor).expect("fixture case is eligible");
        assert_eq!(extracted, d.disputes, "dispute list of {} round-trips", d.jid);
        let claims = extract_party_claims(&doc).expect("fixture case has party statements");

        let mut noisy = d.llm_disputes.clone();
        if noisy.len() > 2 && rng.random_bool(0.25) {
            noisy.remove(rng.random_range(0..noisy.len()));
        }
        if rng.random_bool(0.25) {
            noisy.push("兩造對於事實之認定存有爭議".to_string());
        }
        if i != silent {
            replies_a.extend(chain_replies(&claims, d, &noisy, i % 3 == 0));
        }
        replies_b.extend(chain_replies(&claims, d, &d.llm_disputes, false));

        documents.push((format!("case_{i:02}.json"), json));
        cases.push(PlantedCase {
            case_id: d.jid.clone(),
            group: d.group,
            labeled: *labeled,
            disputes: d.disputes.clone(),
        });
    }
    for (k, d) in [appeal, civil, no_section].iter().enumerate() {
        let json = document_json(d);
        let doc = parse_document(json.as_bytes()).expect("fixture documents parse");
        assert!(screen(&doc, &filter, &extractor).is_err(), "{} is screened out", d.jid);
        documents.push((format!("other_{k}.json"), json));
    }

    let labels = plant_labels(&mut rng, spec, &cases[..n_labeled]);
    debug_assert!(drafts.iter().all(|(d, _)| !d.slots.is_empty()));
    Fixture {
        documents,
        labels,
        replies_a,
        replies_b,
        too_long_case: cases[too_long].case_id.clone(),
        silent_case: cases[silent].case_id.clone(),
        cases,
    }
}

fn plant_labels(rng: &mut ChaCha8Rng, spec: &FixtureSpec, labeled: &[PlantedCase]) -> Vec<LabeledPair> {
    let mut by_group: BTreeMap<usize, Vec<&PlantedCase>> = BTreeMap::new();
    for c in labeled {
        by_group.entry(c.group).or_default().push(c);
    }
    let pair = |a: &PlantedCase, b: &PlantedCase, label| LabeledPair {
        case_a: a.case_id.clone(),
        case_b: b.case_id.clone(),
        label,
    };
    let mut out = Vec::new();
    for members in by_group.values() {
        let mut within = Vec::new();
        for i in 0..members.len() {
            for j in i + 1..members.len() {
                within.push((i, j));
            }
        }
        within.shuffle(rng);
        for &(i, j) in within.iter().take(spec.similar_per_group) {
            out.push(pair(members[i], members[j], SimilarityLabel::Similar));
        }
    }
    let mut across = Vec::new();
    for i in 0..labeled.len() {
        for j in i + 1..labeled.len() {
            if labeled[i].group != labeled[j].group {
                across.push((i, j));
            }
        }
    }
    across.shuffle(rng);
    for (k, &(i, j)) in across.iter().take(spec.dissimilar + spec.barely).enumerate() {
        let label = if k < spec.dissimilar {
            SimilarityLabel::NotSimilar
        } else {
            SimilarityLabel::BarelySimilar
        };
        out.push(pair(&labeled[i], &labeled[j], label));
    }
    out.shuffle(rng);
    out
}

impl Fixture {
    /// Writes `corpus/`, `labels.jsonl`, `replies/`, `planted.jsonl`, and
    /// `desk.toml` under `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let corpus = dir.join("corpus");
        std::fs::create_dir_all(&corpus)?;
        std::fs::create_dir_all(dir.join("replies"))?;
        for (name, json) in &self.documents {
            std::fs::write(corpus.join(name), format!("{json}\n"))?;
        }
        let io = |e: crate::jsonl::JsonlError| std::io::Error::other(e.to_string());
        crate::jsonl::write(&dir.join("labels.jsonl"), &self.labels).map_err(io)?;
        crate::jsonl::write(&dir.join("planted.jsonl"), &self.cases).map_err(io)?;
        crate::jsonl::write(&dir.join("replies/gpt35.jsonl"), &self.replies_a).map_err(io)?;
        crate::jsonl::write(&dir.join("replies/gpt4.jsonl"), &self.replies_b).map_err(io)?;
        std::fs::write(dir.join("desk.toml"), CONFIG_TOML)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::{CharTokenCounter, TokenCounter};

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&FixtureSpec::default());
        let b = generate(&FixtureSpec::default());
        assert_eq!(a, b);
        assert_ne!(a, generate(&FixtureSpec { seed: 1, ..Default::default() }));
    }

    #[test]
    fn shape() {
        let f = generate(&FixtureSpec::default());
        assert_eq!(f.documents.len(), 60);
        assert_eq!(f.cases.len(), 57);
        assert_eq!(f.cases.iter().filter(|c| c.labeled).count(), 36);
        let similar = f.labels.iter().filter(|p| p.label == SimilarityLabel::Similar).count();
        let not = f.labels.iter().filter(|p| p.label == SimilarityLabel::NotSimilar).count();
        assert_eq!((similar, not), (48, 72));
        crate::classifier::validate_pairs(&f.labels).unwrap();
        let group: BTreeMap<&str, usize> = f.cases.iter().map(|c| (c.case_id.as_str(), c.group)).collect();
        for p in &f.labels {
            let same = group[p.case_a.as_str()] == group[p.case_b.as_str()];
            assert_eq!(same, p.label == SimilarityLabel::Similar);
        }
    }

    #[test]
    fn the_long_case_fits_one_budget_only() {
        let f = generate(&FixtureSpec::default());
        let (_, json) = &f.documents[f.cases.iter().position(|c| c.case_id == f.too_long_case).unwrap()];
        let doc = parse_document(json.as_bytes()).unwrap();
        let claims = extract_party_claims(&doc).unwrap();
        let prompt = build_prompt(PromptStep::Plaintiff, &claims, None, &PromptTemplates::default()).unwrap();
        let tokens = CharTokenCounter.count_tokens(&prompt);
        assert!(tokens > 6000 && tokens <= 11500, "{tokens}");
    }
}

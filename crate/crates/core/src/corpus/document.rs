use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// The seven top-level keys of a judgment record.
pub const FIELD_NAMES: [&str; 7] = ["JID", "JYEAR", "JCASE", "JNO", "JDATE", "JTITLE", "JFULL"];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CorpusError {
    #[error("missing field {0}")]
    MissingField(String),
    #[error("malformed record: {0}")]
    MalformedRecord(String),
}

/// One parsed court judgment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JudgmentDoc {
    /// Long id, e.g. `CHDV,92,勞訴,32,20040102,1`.
    pub jid: String,
    /// Year of the case in the Taiwan (Minguo) calendar.
    pub jyear: i32,
    /// Lawsuit-type code such as `勞訴`.
    pub jcase: String,
    pub jno: String,
    pub jdate: NaiveDate,
    pub jtitle: String,
    pub jfull: String,
}

impl JudgmentDoc {
    /// The court code, i.e. the first comma-separated component of the id.
    pub fn court(&self) -> &str {
        self.jid.split(',').next().unwrap_or_default()
    }

    pub fn western_year(&self) -> i32 {
        self.jyear + 1911
    }
}

/// Parses one judgment record. Unknown keys are ignored.
pub fn parse_document(raw: &[u8]) -> Result<JudgmentDoc, CorpusError> {
    let raw = raw.strip_prefix("\u{feff}".as_bytes()).unwrap_or(raw);
    let value: Value = serde_json::from_slice(raw)
        .map_err(|e| CorpusError::MalformedRecord(format!("not a JSON record: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CorpusError::MalformedRecord("top level is not an object".into()))?;

    let mut fields = Vec::with_capacity(FIELD_NAMES.len());
    for name in FIELD_NAMES {
        let v = obj
            .get(name)
            .ok_or_else(|| CorpusError::MissingField(name.to_string()))?;
        let text = match v {
            // JFULL keeps its internal layout
            Value::String(s) if name == "JFULL" => s.clone(),
            Value::String(s) => s.trim().to_string(),
            Value::Number(n) => n.to_string(),
            other => {
                return Err(CorpusError::MalformedRecord(format!(
                    "{name} has unexpected type: {other}"
                )))
            }
        };
        fields.push(text);
    }
    let [jid, jyear, jcase, jno, jdate, jtitle, jfull]: [String; 7] =
        fields.try_into().expect("seven fields");

    if jid.is_empty() {
        return Err(CorpusError::MalformedRecord("JID is empty".into()));
    }
    if jfull.trim().is_empty() {
        return Err(CorpusError::MalformedRecord("JFULL is empty".into()));
    }
    let jyear: i32 = jyear
        .parse()
        .map_err(|_| CorpusError::MalformedRecord(format!("JYEAR {jyear:?} is not a year")))?;
    let jdate = NaiveDate::parse_from_str(&jdate, "%Y%m%d")
        .or_else(|_| NaiveDate::parse_from_str(&jdate, "%Y-%m-%d"))
        .map_err(|_| CorpusError::MalformedRecord(format!("JDATE {jdate:?} is not a date")))?;

    Ok(JudgmentDoc {
        jid,
        jyear,
        jcase,
        jno,
        jdate,
        jtitle,
        jfull,
    })
}

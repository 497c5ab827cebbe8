use std::fmt;

/// One `key=value` output line. Values never contain whitespace.
#[derive(Debug, Clone, Default)]
pub struct Record {
    fields: Vec<(&'static str, String)>,
}

impl Record {
    pub fn new(command: &str) -> Self {
        let mut r = Self::default();
        r.push("cmd", command);
        r
    }

    pub fn push(&mut self, key: &'static str, value: impl fmt::Display) -> &mut Self {
        let v = value.to_string().split_whitespace().collect::<Vec<_>>().join("_");
        self.fields.push((key, if v.is_empty() { "-".into() } else { v }));
        self
    }

}

impl fmt::Display for Record {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}={v}")?;
        }
        Ok(())
    }
}

pub fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

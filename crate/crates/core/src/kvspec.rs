//! Tiny `head:key=value,key=value` grammar shared by the law, ensemble,
//! probe and test-function specification strings.

use crate::error::{Error, Result};

pub(crate) struct Spec<'a> {
    pub head: &'a str,
    pub args: Vec<(&'a str, &'a str)>,
}

pub(crate) fn split(spec: &str) -> Result<Spec<'_>> {
    let spec = spec.trim();
    let (head, rest) = match spec.split_once(':') {
        Some((h, r)) => (h.trim(), r.trim()),
        None => (spec, ""),
    };
    if head.is_empty() {
        return Err(Error::UnknownSpec(spec.to_string()));
    }
    let mut args = Vec::new();
    if !rest.is_empty() {
        for part in rest.split(',') {
            let part = part.trim();
            match part.split_once('=') {
                Some((k, v)) => args.push((k.trim(), v.trim())),
                // bare positional token, keyed by empty string
                None => args.push(("", part)),
            }
        }
    }
    Ok(Spec { head, args })
}

impl<'a> Spec<'a> {
    pub fn get_f64(&self, key: &str) -> Result<Option<f64>> {
        match self.args.iter().find(|(k, _)| *k == key) {
            None => Ok(None),
            Some((_, v)) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| Error::UnknownSpec(format!("{key}={v}"))),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>> {
        match self.args.iter().find(|(k, _)| *k == key) {
            None => Ok(None),
            Some((_, v)) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| Error::UnknownSpec(format!("{key}={v}"))),
        }
    }

    pub fn get_str(&self, key: &str) -> Option<&'a str> {
        self.args.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

/// Canonical rendering of a float in spec strings (shortest round-trip form).
pub(crate) fn fmt_f64(x: f64) -> String {
    let mut s = format!("{x}");
    if !s.contains('.') && !s.contains('e') && !s.contains("inf") && !s.contains("NaN") {
        s.push_str(".0");
    }
    s
}

use serde_json::{json, Map, Value};

use crate::model::Term;

use super::BindingSet;

/// Serializes bindings in the SPARQL 1.1 results JSON format. Output is
/// deterministic: object keys are sorted.
pub fn results_json(b: &BindingSet) -> String {
    let bindings: Vec<Value> = b
        .rows
        .iter()
        .map(|row| {
            let mut obj = Map::new();
            for (var, term) in b.vars.iter().zip(row) {
                obj.insert(var.clone(), term_json(term));
            }
            Value::Object(obj)
        })
        .collect();
    json!({ "head": { "vars": b.vars }, "results": { "bindings": bindings } }).to_string()
}

fn term_json(t: &Term) -> Value {
    match t {
        Term::Iri(i) => json!({ "type": "uri", "value": i.as_str() }),
        Term::Literal(l) => match &l.lang {
            Some(lang) => json!({ "type": "literal", "value": l.lexical, "xml:lang": lang.as_str() }),
            None => json!({ "type": "literal", "value": l.lexical }),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Iri, LanguageTag, Literal};

    #[test]
    fn empty_result() {
        let b = BindingSet { vars: vec!["c".into()], rows: vec![] };
        let v: Value = serde_json::from_str(&results_json(&b)).unwrap();
        assert_eq!(v["head"]["vars"], json!(["c"]));
        assert_eq!(v["results"]["bindings"], json!([]));
    }

    #[test]
    fn uri_and_tagged_literal() {
        let b = BindingSet {
            vars: vec!["c".into(), "l".into()],
            rows: vec![vec![
                Term::Iri(Iri::parse("http://x/a").unwrap()),
                Term::Literal(Literal::tagged("Water", &LanguageTag::parse("en").unwrap())),
            ]],
        };
        let v: Value = serde_json::from_str(&results_json(&b)).unwrap();
        let row = &v["results"]["bindings"][0];
        assert_eq!(row["c"]["type"], "uri");
        assert_eq!(row["l"]["type"], "literal");
        assert_eq!(row["l"]["xml:lang"], "en");
        assert_eq!(results_json(&b), results_json(&b.clone()));
    }
}

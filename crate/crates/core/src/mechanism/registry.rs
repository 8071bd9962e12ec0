use std::collections::BTreeMap;

use serde::Deserialize;
use serde_json::{Map, Value};

use super::{DoubleGeometric, Mechanism, Table, TwoHeaded, UniformSplit};
use crate::error::{Error, Result};

/// Builds a mechanism from the type-specific fields of a spec object (the
/// `"type"` key already removed).
pub type MechanismFactory = fn(Value) -> Result<Mechanism>;

/// Name → factory map used to resolve `{"type": ...}` mechanism specs.
#[derive(Clone)]
pub struct MechanismRegistry {
    factories: BTreeMap<String, MechanismFactory>,
}

fn one() -> f64 {
    1.0
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DgmFields {
    alpha: f64,
    #[serde(default = "one")]
    delta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TwoHeadedFields {
    a: f64,
    b: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformFields {
    #[serde(default = "one")]
    delta: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TableFields {
    n_max: usize,
    rows: Vec<Vec<f64>>,
}

fn build_dgm(v: Value) -> Result<Mechanism> {
    let f: DgmFields = serde_json::from_value(v)?;
    DoubleGeometric::new(f.alpha, f.delta).map(Mechanism::new)
}

fn build_two_headed(v: Value) -> Result<Mechanism> {
    let f: TwoHeadedFields = serde_json::from_value(v)?;
    TwoHeaded::new(f.a, f.b).map(Mechanism::new)
}

fn build_uniform(v: Value) -> Result<Mechanism> {
    let f: UniformFields = serde_json::from_value(v)?;
    UniformSplit::new(f.delta).map(Mechanism::new)
}

fn build_table(v: Value) -> Result<Mechanism> {
    let f: TableFields = serde_json::from_value(v)?;
    if f.n_max != f.rows.len() {
        return Err(Error::Spec(format!(
            "table declares n_max = {} but has {} rows",
            f.n_max,
            f.rows.len()
        )));
    }
    Table::from_rows(f.rows).map(Mechanism::new)
}

impl MechanismRegistry {
    pub fn empty() -> Self {
        MechanismRegistry { factories: BTreeMap::new() }
    }

    /// Registry with `dgm`, `two_headed`, `uniform_split` and `table`.
    pub fn builtin() -> Self {
        let mut r = Self::empty();
        r.register("dgm", build_dgm);
        r.register("two_headed", build_two_headed);
        r.register("uniform_split", build_uniform);
        r.register("table", build_table);
        r
    }

    pub fn register(&mut self, name: &str, factory: MechanismFactory) {
        self.factories.insert(name.to_string(), factory);
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn build(&self, spec: &Value) -> Result<Mechanism> {
        let obj = spec
            .as_object()
            .ok_or_else(|| Error::Spec("mechanism spec must be a JSON object".into()))?;
        let kind = obj
            .get("type")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Spec("mechanism spec needs a string \"type\" field".into()))?;
        let factory = self
            .factories
            .get(kind)
            .ok_or_else(|| Error::UnknownMechanism(kind.to_string()))?;
        let fields: Map<String, Value> =
            obj.iter().filter(|(k, _)| *k != "type").map(|(k, v)| (k.clone(), v.clone())).collect();
        factory(Value::Object(fields))
    }
}

impl Default for MechanismRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn builds_each_builtin() {
        let r = MechanismRegistry::builtin();
        let m = r.build(&json!({"type": "dgm", "alpha": 0.4})).unwrap();
        assert_eq!(m.reward(1, 1).unwrap(), 1.0);
        let m = r.build(&json!({"type": "two_headed", "a": 2, "b": 3})).unwrap();
        assert_eq!(m.reward(1, 1).unwrap(), 5.0);
        let m = r.build(&json!({"type": "uniform_split"})).unwrap();
        assert_eq!(m.reward(1, 4).unwrap(), 0.25);
        let m = r
            .build(&json!({"type": "table", "n_max": 2, "rows": [[1.0], [0.4, 0.6]]}))
            .unwrap();
        assert_eq!(m.reward(2, 2).unwrap(), 0.6);
        assert_eq!(m.max_length(), Some(2));
    }

    #[test]
    fn rejects_bad_specs() {
        let r = MechanismRegistry::builtin();
        assert!(matches!(r.build(&json!({"type": "nope"})), Err(Error::UnknownMechanism(_))));
        assert!(r.build(&json!({"alpha": 0.4})).is_err());
        assert!(r.build(&json!({"type": "dgm", "alpha": 0.4, "beta": 1})).is_err());
        assert!(r.build(&json!({"type": "dgm", "alpha": 1.5})).is_err());
        assert!(r.build(&json!({"type": "table", "n_max": 3, "rows": [[1.0]]})).is_err());
    }

    #[test]
    fn spec_round_trips() {
        let r = MechanismRegistry::builtin();
        for spec in [
            json!({"type": "dgm", "alpha": 0.25, "delta": 2.0}),
            json!({"type": "two_headed", "a": 1.0, "b": 0.5}),
            json!({"type": "uniform_split", "delta": 3.0}),
            json!({"type": "table", "n_max": 2, "rows": [[1.0], [0.5, 0.5]]}),
        ] {
            let m = r.build(&spec).unwrap();
            assert_eq!(m.spec(), spec);
        }
    }
}

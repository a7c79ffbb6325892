//! Decision lists and decision sets: decoding from solver assignments,
//! prediction, validation, rendering and the JSON model document.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::BinDataset;
use crate::encoder::{cnf::lit_value, Node, VariableLayout};

/// A feature literal: feature `feature` must be `positive` (true) or false.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Literal {
    pub feature: usize,
    pub positive: bool,
}

impl Literal {
    pub fn holds(&self, features: &[bool]) -> bool {
        features[self.feature] == self.positive
    }
}

/// `if antecedent then class`. An empty antecedent is a default rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub antecedent: Vec<Literal>,
    pub class: usize,
}

impl Rule {
    pub fn new(antecedent: Vec<Literal>, class: usize) -> Self {
        Rule { antecedent, class }
    }

    pub fn default_to(class: usize) -> Self {
        Rule {
            antecedent: Vec::new(),
            class,
        }
    }

    pub fn fires(&self, features: &[bool]) -> bool {
        self.antecedent.iter().all(|l| l.holds(features))
    }

    /// Antecedent literals plus one for the consequent.
    pub fn size(&self) -> usize {
        self.antecedent.len() + 1
    }

    pub fn is_default(&self) -> bool {
        self.antecedent.is_empty()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("node {0} is used but selects nothing")]
    NoSelection(usize),
    #[error("node {0} is used after an unused node")]
    UsedAfterUnused(usize),
    #[error("the last used node {0} is not a leaf")]
    DanglingLiteral(usize),
    #[error("empty model")]
    Empty,
    #[error("instance has {found} features, model expects {expected}")]
    Width { expected: usize, found: usize },
    #[error("unsupported model document version {0}")]
    Version(u32),
    #[error("unknown feature `{0}`")]
    UnknownFeature(String),
    #[error("unknown class `{0}`")]
    UnknownClass(String),
    #[error("malformed model document: {0}")]
    Json(String),
}

/// Metadata needed to turn indices into names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub target: String,
}

impl Schema {
    pub fn of(ds: &BinDataset) -> Self {
        Schema {
            feature_names: ds.feature_names.clone(),
            class_names: ds.class_names.clone(),
            target: ds.target.clone(),
        }
    }
}

/// Ordered rules; the first rule that fires classifies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionList {
    pub rules: Vec<Rule>,
    pub schema: Schema,
}

/// Unordered rules; used only for metric evaluation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionSet {
    pub rules: Vec<Rule>,
    pub schema: Schema,
}

/// Reads the node sequence encoded by an assignment: trailing unused nodes
/// are dropped. Binary layouts report leaf class `t_j` (0 or 1).
pub fn decode_path(assignment: &[bool], layout: &VariableLayout) -> Result<Vec<Node>, ModelError> {
    let l = layout;
    let truth = |lit: i32| lit_value(assignment, lit);
    let mut path = Vec::new();
    let mut seen_unused = false;
    for j in 0..l.nodes {
        if truth(l.u(j)) {
            seen_unused = true;
            continue;
        }
        if seen_unused {
            return Err(ModelError::UsedAfterUnused(j + 1));
        }
        let node = if let Some(r) = (0..l.features).find(|&r| truth(l.s(j, r))) {
            Node::Feature {
                feature: r,
                positive: truth(l.t(j)),
            }
        } else if l.is_binary() && truth(l.s_class(j, 0)) {
            Node::Leaf {
                class: truth(l.t(j)) as usize,
            }
        } else if let Some(c) = (0..l.class_features).find(|&c| truth(l.s_class(j, c))) {
            Node::Leaf { class: c }
        } else {
            return Err(ModelError::NoSelection(j + 1));
        };
        path.push(node);
    }
    if let Some(Node::Feature { .. }) = path.last() {
        return Err(ModelError::DanglingLiteral(path.len()));
    }
    Ok(path)
}

/// Groups a node path into rules; each leaf closes one rule.
pub fn rules_from_path(path: &[Node]) -> Result<Vec<Rule>, ModelError> {
    let mut rules = Vec::new();
    let mut current = Vec::new();
    for (j, node) in path.iter().enumerate() {
        match *node {
            Node::Feature { feature, positive } => current.push(Literal { feature, positive }),
            Node::Leaf { class } => rules.push(Rule::new(std::mem::take(&mut current), class)),
            Node::Unused => return Err(ModelError::UsedAfterUnused(j + 1)),
        }
    }
    if !current.is_empty() {
        return Err(ModelError::DanglingLiteral(path.len()));
    }
    Ok(rules)
}

/// Decodes a solver assignment into a decision list. Node literals are kept
/// verbatim, so the literal size equals the number of used nodes.
pub fn decode(
    assignment: &[bool],
    layout: &VariableLayout,
    schema: &Schema,
) -> Result<DecisionList, ModelError> {
    let rules = rules_from_path(&decode_path(assignment, layout)?)?;
    if rules.is_empty() {
        return Err(ModelError::Empty);
    }
    Ok(DecisionList {
        rules,
        schema: schema.clone(),
    })
}

/// A problem found by [`DecisionList::lint`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lint {
    /// Rule `rule` follows a default rule and can never fire.
    Unreachable { rule: usize },
    /// Rule `rule` tests feature `feature` more than once.
    RepeatedFeature { rule: usize, feature: usize },
}

impl DecisionList {
    pub fn new(rules: Vec<Rule>, schema: Schema) -> Self {
        DecisionList { rules, schema }
    }

    fn check_width(&self, features: &[bool]) -> Result<(), ModelError> {
        if features.len() != self.schema.feature_names.len() {
            return Err(ModelError::Width {
                expected: self.schema.feature_names.len(),
                found: features.len(),
            });
        }
        Ok(())
    }

    /// `(class, index of the firing rule)`, or `None` if no rule fires.
    pub fn predict(&self, features: &[bool]) -> Result<Option<(usize, usize)>, ModelError> {
        self.check_width(features)?;
        Ok(self
            .rules
            .iter()
            .position(|r| r.fires(features))
            .map(|k| (self.rules[k].class, k)))
    }

    /// Literal size: antecedent literals plus one per rule.
    pub fn size(&self) -> usize {
        self.rules.iter().map(Rule::size).sum()
    }

    /// The node path this list occupies in the encoding. Binary problems
    /// use class ids 0/1 directly as leaf truth values.
    pub fn to_path(&self) -> Vec<Node> {
        let mut path = Vec::with_capacity(self.size());
        for rule in &self.rules {
            path.extend(rule.antecedent.iter().map(|l| Node::Feature {
                feature: l.feature,
                positive: l.positive,
            }));
            path.push(Node::Leaf { class: rule.class });
        }
        path
    }

    pub fn lint(&self) -> Vec<Lint> {
        let mut out = Vec::new();
        let mut after_default = false;
        for (k, rule) in self.rules.iter().enumerate() {
            if after_default {
                out.push(Lint::Unreachable { rule: k });
            }
            let mut seen = std::collections::BTreeSet::new();
            for l in &rule.antecedent {
                if !seen.insert(l.feature) {
                    out.push(Lint::RepeatedFeature {
                        rule: k,
                        feature: l.feature,
                    });
                }
            }
            after_default |= rule.is_default();
        }
        out
    }

    /// Every instance misclassified or left unclassified, as
    /// `(instance, predicted, expected)`. Empty means the list is perfect.
    pub fn validate_perfect(
        &self,
        ds: &BinDataset,
    ) -> Result<Vec<(usize, Option<usize>, usize)>, ModelError> {
        let mut violations = Vec::new();
        for (i, inst) in ds.instances.iter().enumerate() {
            let predicted = self.predict(&inst.features)?.map(|(c, _)| c);
            if predicted != Some(inst.class_id) {
                violations.push((i, predicted, inst.class_id));
            }
        }
        Ok(violations)
    }

    pub fn to_json(&self) -> String {
        let doc = ModelDocument::from_rules(&self.rules, &self.schema);
        serde_json::to_string_pretty(&doc).expect("model document serializes")
    }

    pub fn from_json(text: &str) -> Result<DecisionList, ModelError> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        let (rules, schema) = doc.into_rules()?;
        Ok(DecisionList { rules, schema })
    }
}

impl DecisionSet {
    pub fn new(rules: Vec<Rule>, schema: Schema) -> Self {
        DecisionSet { rules, schema }
    }

    pub fn size(&self) -> usize {
        self.rules.iter().map(Rule::size).sum()
    }

    /// Indices of all rules that fire.
    pub fn firing(&self, features: &[bool]) -> Result<Vec<usize>, ModelError> {
        if features.len() != self.schema.feature_names.len() {
            return Err(ModelError::Width {
                expected: self.schema.feature_names.len(),
                found: features.len(),
            });
        }
        Ok((0..self.rules.len())
            .filter(|&k| self.rules[k].fires(features))
            .collect())
    }

    /// The class, when at least one rule fires and all firing rules agree.
    pub fn predict(&self, features: &[bool]) -> Result<Option<usize>, ModelError> {
        let firing = self.firing(features)?;
        let first = match firing.first() {
            None => return Ok(None),
            Some(&k) => self.rules[k].class,
        };
        Ok(firing
            .iter()
            .all(|&k| self.rules[k].class == first)
            .then_some(first))
    }
}

impl Schema {
    fn literal_text(&self, l: &Literal) -> String {
        let name = &self.feature_names[l.feature];
        if l.positive {
            name.clone()
        } else {
            format!("¬{name}")
        }
    }

    /// `H` / `¬H` for 0/1 targets, `target=value` otherwise.
    pub fn class_text(&self, class: usize) -> String {
        if self.class_names == ["0", "1"] {
            if class == 1 {
                self.target.clone()
            } else {
                format!("¬{}", self.target)
            }
        } else {
            format!("{}={}", self.target, self.class_names[class])
        }
    }

    pub fn rule_text(&self, rule: &Rule) -> String {
        let cond = if rule.antecedent.is_empty() {
            "true".to_string()
        } else {
            rule.antecedent
                .iter()
                .map(|l| self.literal_text(l))
                .collect::<Vec<_>>()
                .join(" ∧ ")
        };
        format!("if {cond} then {}", self.class_text(rule.class))
    }
}

impl fmt::Display for DecisionList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, rule) in self.rules.iter().enumerate() {
            let prefix = if k == 0 { "" } else { "else " };
            writeln!(f, "{prefix}{}", self.schema.rule_text(rule))?;
        }
        Ok(())
    }
}

impl fmt::Display for DecisionSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for rule in &self.rules {
            writeln!(f, "{}", self.schema.rule_text(rule))?;
        }
        Ok(())
    }
}

pub const MODEL_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelDocument {
    version: u32,
    target: String,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    rules: Vec<RuleDocument>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleDocument {
    literals: Vec<LiteralDocument>,
    class: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LiteralDocument {
    feature: String,
    negated: bool,
}

impl ModelDocument {
    fn from_rules(rules: &[Rule], schema: &Schema) -> Self {
        ModelDocument {
            version: MODEL_VERSION,
            target: schema.target.clone(),
            feature_names: schema.feature_names.clone(),
            class_names: schema.class_names.clone(),
            rules: rules
                .iter()
                .map(|r| RuleDocument {
                    literals: r
                        .antecedent
                        .iter()
                        .map(|l| LiteralDocument {
                            feature: schema.feature_names[l.feature].clone(),
                            negated: !l.positive,
                        })
                        .collect(),
                    class: schema.class_names[r.class].clone(),
                })
                .collect(),
        }
    }

    fn into_rules(self) -> Result<(Vec<Rule>, Schema), ModelError> {
        if self.version != MODEL_VERSION {
            return Err(ModelError::Version(self.version));
        }
        if self.rules.is_empty() {
            return Err(ModelError::Empty);
        }
        let feature = |name: &str| {
            self.feature_names
                .iter()
                .position(|f| f == name)
                .ok_or_else(|| ModelError::UnknownFeature(name.to_string()))
        };
        let class = |name: &str| {
            self.class_names
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| ModelError::UnknownClass(name.to_string()))
        };
        let mut rules = Vec::with_capacity(self.rules.len());
        for r in &self.rules {
            let antecedent = r
                .literals
                .iter()
                .map(|l| {
                    Ok(Literal {
                        feature: feature(&l.feature)?,
                        positive: !l.negated,
                    })
                })
                .collect::<Result<Vec<_>, ModelError>>()?;
            rules.push(Rule::new(antecedent, class(&r.class)?));
        }
        Ok((
            rules,
            Schema {
                feature_names: self.feature_names,
                class_names: self.class_names,
                target: self.target,
            },
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{parse_csv, one_hot, ClassColumn};
    use crate::encoder::VariableLayout;
    use proptest::prelude::*;

    fn example() -> BinDataset {
        let text = "A,B,C,D,E,H\n1,0,1,0,0,1\n1,1,0,1,1,1\n0,1,0,1,0,0\n0,1,1,0,1,0\n\
                    0,0,1,0,1,1\n0,0,1,1,0,1\n0,0,0,1,0,0\n0,0,0,1,1,0\n";
        one_hot(&parse_csv(text, &ClassColumn::Name("H".into())).unwrap()).unwrap()
    }

    fn lit(feature: usize, positive: bool) -> Literal {
        Literal { feature, positive }
    }

    fn example_list(ds: &BinDataset) -> DecisionList {
        DecisionList::new(
            vec![
                Rule::new(vec![lit(0, true)], 1),
                Rule::new(vec![lit(1, true)], 0),
                Rule::new(vec![lit(2, true)], 1),
                Rule::default_to(0),
            ],
            Schema::of(ds),
        )
    }

    #[test]
    fn decodes_the_seven_node_example() {
        let ds = example();
        let layout = VariableLayout::new(7, 8, 5, 1, false).unwrap();
        let mut a = vec![false; layout.primary_count() as usize + 1];
        // A,t1 H,t1 B,t1 H,t0 C,t1 H,t1 H,t0
        let nodes: [(usize, bool); 7] =
            [(0, true), (5, true), (1, true), (5, false), (2, true), (5, true), (5, false)];
        for (j, (slot, t)) in nodes.iter().enumerate() {
            a[layout.s(j, *slot) as usize] = true;
            a[layout.t(j) as usize] = *t;
        }
        let dl = decode(&a, &layout, &Schema::of(&ds)).unwrap();
        assert_eq!(dl, example_list(&ds));
        assert_eq!(dl.size(), 7);
    }

    #[test]
    fn decode_default_only_and_errors() {
        let ds = example();
        let layout = VariableLayout::new(2, 8, 5, 1, false).unwrap();
        let mut a = vec![false; layout.primary_count() as usize + 1];
        a[layout.s_class(0, 0) as usize] = true;
        a[layout.u(1) as usize] = true;
        let dl = decode(&a, &layout, &Schema::of(&ds)).unwrap();
        assert_eq!(dl.rules, vec![Rule::default_to(0)]);

        let mut empty = vec![false; layout.primary_count() as usize + 1];
        empty[layout.u(0) as usize] = true;
        empty[layout.u(1) as usize] = true;
        assert_eq!(decode(&empty, &layout, &Schema::of(&ds)), Err(ModelError::Empty));

        let mut dangling = vec![false; layout.primary_count() as usize + 1];
        dangling[layout.s(0, 2) as usize] = true;
        dangling[layout.u(1) as usize] = true;
        assert_eq!(
            decode(&dangling, &layout, &Schema::of(&ds)),
            Err(ModelError::DanglingLiteral(1))
        );

        let nothing = vec![false; layout.primary_count() as usize + 1];
        assert_eq!(decode(&nothing, &layout, &Schema::of(&ds)), Err(ModelError::NoSelection(1)));
    }

    #[test]
    fn predict_follows_order() {
        let ds = example();
        let dl = example_list(&ds);
        assert_eq!(dl.predict(&ds.instances[0].features).unwrap(), Some((1, 0)));
        assert_eq!(dl.predict(&ds.instances[2].features).unwrap(), Some((0, 1)));
        let no_default = DecisionList::new(vec![Rule::new(vec![lit(0, true)], 1)], Schema::of(&ds));
        assert_eq!(no_default.predict(&ds.instances[2].features).unwrap(), None);
        assert!(matches!(dl.predict(&[true]), Err(ModelError::Width { .. })));
    }

    #[test]
    fn order_matters_on_overlapping_rules() {
        let ds = example();
        let dl = example_list(&ds);
        let mut swapped = dl.clone();
        swapped.rules.swap(0, 1);
        // item 2 has A=1 and B=1
        let x = &ds.instances[1].features;
        assert_ne!(dl.predict(x).unwrap().unwrap().0, swapped.predict(x).unwrap().unwrap().0);
    }

    #[test]
    fn validation() {
        let ds = example();
        let dl = example_list(&ds);
        assert!(dl.validate_perfect(&ds).unwrap().is_empty());
        let mut flipped = dl.clone();
        flipped.rules[3].class = 1;
        let bad: Vec<usize> = flipped.validate_perfect(&ds).unwrap().iter().map(|v| v.0).collect();
        assert_eq!(bad, vec![6, 7]);
        assert!(dl.validate_perfect(&ds.subset(&[])).unwrap().is_empty());
    }

    #[test]
    fn lint_flags_dead_rules() {
        let ds = example();
        let dl = DecisionList::new(
            vec![Rule::default_to(0), Rule::new(vec![lit(0, true), lit(0, false)], 1)],
            Schema::of(&ds),
        );
        assert_eq!(
            dl.lint(),
            vec![Lint::Unreachable { rule: 1 }, Lint::RepeatedFeature { rule: 1, feature: 0 }]
        );
    }

    #[test]
    fn rendering() {
        let ds = example();
        let text = example_list(&ds).to_string();
        assert_eq!(text, "if A then H\nelse if B then ¬H\nelse if C then H\nelse if true then ¬H\n");
    }

    #[test]
    fn document_errors() {
        let ds = example();
        let json = example_list(&ds).to_json();
        let bad = json.replace("\"feature\": \"B\"", "\"feature\": \"Z\"");
        assert_eq!(DecisionList::from_json(&bad), Err(ModelError::UnknownFeature("Z".into())));
        let empty = r#"{"version":1,"target":"H","feature_names":["A"],"class_names":["0","1"],"rules":[]}"#;
        assert_eq!(DecisionList::from_json(empty), Err(ModelError::Empty));
        let v2 = empty.replace("\"version\":1", "\"version\":2");
        assert_eq!(DecisionList::from_json(&v2), Err(ModelError::Version(2)));
        assert!(matches!(DecisionList::from_json("{"), Err(ModelError::Json(_))));
    }

    fn arb_list() -> impl Strategy<Value = DecisionList> {
        let rule = (prop::collection::btree_map(0usize..5, any::<bool>(), 0..4), 0usize..2)
            .prop_map(|(lits, class)| {
                Rule::new(lits.into_iter().map(|(f, p)| lit(f, p)).collect(), class)
            });
        prop::collection::vec(rule, 1..6).prop_map(|rules| {
            DecisionList::new(
                rules,
                Schema {
                    feature_names: ["A", "B", "C", "D", "E"].map(String::from).to_vec(),
                    class_names: vec!["0".into(), "1".into()],
                    target: "H".into(),
                },
            )
        })
    }

    proptest! {
        #[test]
        fn json_round_trip(dl in arb_list()) {
            prop_assert_eq!(DecisionList::from_json(&dl.to_json()).unwrap(), dl);
        }

        #[test]
        fn path_round_trip(dl in arb_list()) {
            prop_assert_eq!(rules_from_path(&dl.to_path()).unwrap(), dl.rules.clone());
            prop_assert_eq!(dl.to_path().len(), dl.size());
        }
    }
}
